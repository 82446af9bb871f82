//! Lorentz–Karamata norms of rearranged samples and mixed `l_θ` sequence norms.
//!
//! A rearranged fiber of length `n` is a step function on the cells
//! `(i/n, (i+1)/n]`, so the one-dimensional norm is `(Σ f_i^τ W_i)^{1/τ}`
//! with `W_i = ∫_cell V^τ(t) t^{τ/p-1} dt`. The anisotropic norm applies the
//! same reduction axis by axis to the iterated rearrangement.

use crate::error::{Error, Result};
use crate::grid::{GridFunction, ModulusGrid, RearrangedProfile};
use crate::quadrature::{finite_cell_weights, sup_cell_weights};
use crate::svfun::WeightV;

/// Parameters `(p, V, τ)` of one axis. `τ = ∞` selects the sup form
/// `sup_t f*(t) V(t) t^{1/p}`.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisSpace {
    p: f64,
    tau: f64,
    weight: WeightV,
}

impl AxisSpace {
    pub fn new(p: f64, tau: f64, weight: WeightV) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::Domain(format!("p must lie in (1, ∞), got {p}")));
        }
        if !(tau >= 1.0) {
            return Err(Error::Domain(format!("τ must lie in [1, ∞], got {tau}")));
        }
        Ok(Self { p, tau, weight })
    }

    /// The Lorentz space `L_{p,τ}` (unit weight).
    pub fn lorentz(p: f64, tau: f64) -> Result<Self> {
        Self::new(p, tau, WeightV::unit())
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn weight(&self) -> &WeightV {
        &self.weight
    }

    /// Cell weights for a fiber of `n` equal-measure steps: `W_i` for finite
    /// `τ`, the cell suprema of `V(t) t^{1/p}` for `τ = ∞`.
    pub fn cell_weights(&self, n: usize) -> Vec<f64> {
        if self.tau.is_infinite() {
            sup_cell_weights(n, self.p, &self.weight)
        } else {
            finite_cell_weights(n, self.p, self.tau, &self.weight)
        }
    }

    /// Norm of a non-increasing step sequence against precomputed cell weights.
    fn reduce(&self, steps: &[f64], weights: &[f64]) -> f64 {
        if self.tau.is_infinite() {
            steps
                .iter()
                .zip(weights)
                .map(|(f, w)| f * w)
                .fold(0.0, f64::max)
        } else {
            let tau = self.tau;
            let sum: f64 = steps
                .iter()
                .zip(weights)
                .filter(|(f, _)| **f > 0.0)
                .map(|(f, w)| f.powf(tau) * w)
                .sum();
            sum.powf(1.0 / tau)
        }
    }
}

/// `(p̄, V̄, τ̄)` of an anisotropic Lorentz–Karamata space.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceParams {
    axes: Vec<AxisSpace>,
}

impl SpaceParams {
    pub fn new(axes: Vec<AxisSpace>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::InvalidArgument("a space needs at least one axis".into()));
        }
        Ok(Self { axes })
    }

    pub fn from_parts(p: &[f64], tau: &[f64], weights: &[WeightV]) -> Result<Self> {
        let m = p.len();
        for len in [tau.len(), weights.len()] {
            if len != m {
                return Err(Error::DimensionMismatch { expected: m, got: len });
            }
        }
        let axes = (0..m)
            .map(|j| AxisSpace::new(p[j], tau[j], weights[j].clone()))
            .collect::<Result<_>>()?;
        Self::new(axes)
    }

    /// `L_{p̄,τ̄}` with unit weights.
    pub fn lorentz(p: &[f64], tau: &[f64]) -> Result<Self> {
        Self::from_parts(p, tau, &vec![WeightV::unit(); p.len()])
    }

    pub fn dims(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[AxisSpace] {
        &self.axes
    }

    pub fn axis(&self, j: usize) -> &AxisSpace {
        &self.axes[j]
    }

    pub fn p(&self) -> Vec<f64> {
        self.axes.iter().map(|a| a.p).collect()
    }

    pub fn tau(&self) -> Vec<f64> {
        self.axes.iter().map(|a| a.tau).collect()
    }

    pub fn weights(&self) -> Vec<WeightV> {
        self.axes.iter().map(|a| a.weight.clone()).collect()
    }
}

/// One-dimensional Lorentz–Karamata norm of a rearranged profile.
pub fn lk_norm_1d(profile: &RearrangedProfile, axis: &AxisSpace) -> f64 {
    let w = axis.cell_weights(profile.len());
    axis.reduce(profile.steps(), &w)
}

/// Anisotropic norm of a sampled function: iterated rearrangement followed by
/// [`aniso_lk_norm_rearranged`].
pub fn aniso_lk_norm(f: &GridFunction, params: &SpaceParams) -> Result<f64> {
    if f.dims() != params.dims() {
        return Err(Error::DimensionMismatch {
            expected: params.dims(),
            got: f.dims(),
        });
    }
    aniso_lk_norm_rearranged(&f.iterated_rearrangement(), params)
}

/// Anisotropic norm of an already rearranged grid.
///
/// Axis 0 is reduced first: each contiguous fiber collapses to its axis-0
/// norm, leaving a grid over the remaining axes whose new fastest axis is
/// reduced next. The nested display with the full product weight on the
/// innermost integral reduces to this form because the weights of the outer
/// variables factor out of each inner integral.
pub fn aniso_lk_norm_rearranged(g: &ModulusGrid, params: &SpaceParams) -> Result<f64> {
    if g.dims() != params.dims() {
        return Err(Error::DimensionMismatch {
            expected: params.dims(),
            got: g.dims(),
        });
    }
    let mut current: Vec<f64> = g.values().to_vec();
    for (axis, &n) in params.axes().iter().zip(g.sizes()) {
        let w = axis.cell_weights(n);
        current = current.chunks_exact(n).map(|fiber| axis.reduce(fiber, &w)).collect();
    }
    Ok(current[0])
}

/// Midpoint evaluation of the nested display exactly as written: the full
/// product weight `(∏_j V_j(t_j) t_j^{1/p_j - 1/τ_j})^{τ_1}` sits inside the
/// innermost integral and every level is raised to `τ_{j+1}/τ_j`.
///
/// Serves as an independent cross-check of [`aniso_lk_norm_rearranged`];
/// finite `τ̄` only.
pub fn aniso_lk_norm_literal(g: &ModulusGrid, params: &SpaceParams) -> Result<f64> {
    let m = params.dims();
    if g.dims() != m {
        return Err(Error::DimensionMismatch { expected: m, got: g.dims() });
    }
    if params.axes().iter().any(|a| a.tau.is_infinite()) {
        return Err(Error::InvalidArgument("the literal display needs finite τ".into()));
    }
    let sizes = g.sizes();
    let tau = params.tau();
    // point_weight[j][i] = V_j(t) t^{1/p_j - 1/τ_j} at the midpoint of cell i.
    let point_weight: Vec<Vec<f64>> = params
        .axes()
        .iter()
        .zip(sizes)
        .map(|(a, &n)| {
            (0..n)
                .map(|i| {
                    let t = (i as f64 + 0.5) / n as f64;
                    a.weight.eval_unchecked(t) * t.powf(1.0 / a.p - 1.0 / a.tau)
                })
                .collect()
        })
        .collect();
    // Level 0: integrate over t_1 with the whole product weight at each
    // remaining multi-index.
    let n0 = sizes[0];
    let outer: usize = sizes[1..].iter().product();
    let mut idx = vec![0usize; m];
    let mut current = Vec::with_capacity(outer);
    for o in 0..outer {
        let mut rem = o;
        for j in 1..m {
            idx[j] = rem % sizes[j];
            rem /= sizes[j];
        }
        let outer_weight: f64 = (1..m).map(|j| point_weight[j][idx[j]]).product();
        let fiber = &g.values()[o * n0..(o + 1) * n0];
        let s: f64 = fiber
            .iter()
            .zip(&point_weight[0])
            .map(|(f, w)| (f * w * outer_weight).powf(tau[0]))
            .sum::<f64>()
            / n0 as f64;
        current.push(s);
    }
    // current holds the innermost integral I_1 (not yet raised). Level j
    // integrates I_{j}^{τ_{j+1}/τ_j} over t_{j+1}.
    for j in 1..m {
        let n = sizes[j];
        let e = tau[j] / tau[j - 1];
        current = current
            .chunks_exact(n)
            .map(|c| c.iter().map(|v| v.powf(e)).sum::<f64>() / n as f64)
            .collect();
    }
    Ok(current[0].powf(1.0 / tau[m - 1]))
}

/// Nested mixed norm of a finitely supported sequence on `Z_+^m`.
///
/// Axis 0 is innermost. Exponents may lie anywhere in `(0, ∞]`; `∞` turns
/// that level into a supremum and exponents below 1 give the usual
/// quasi-norm. Empty support gives 0; repeated indices are rejected.
pub fn mixed_seq_norm<K: AsRef<[usize]>>(entries: &[(K, f64)], theta: &[f64]) -> Result<f64> {
    let m = theta.len();
    if m == 0 {
        return Err(Error::InvalidArgument("at least one exponent is required".into()));
    }
    if let Some(t) = theta.iter().find(|t| !(**t > 0.0)) {
        return Err(Error::Domain(format!("exponents must lie in (0, ∞], got {t}")));
    }
    if entries.is_empty() {
        return Ok(0.0);
    }
    if let Some((k, _)) = entries.iter().find(|(k, _)| k.as_ref().len() != m) {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: k.as_ref().len(),
        });
    }
    // Order by (k_m, ..., k_1) so that every group sharing the outer indices
    // is contiguous at every level.
    let mut order: Vec<usize> = (0..entries.len()).collect();
    order.sort_by(|&a, &b| {
        let ka = entries[a].0.as_ref().iter().rev();
        let kb = entries[b].0.as_ref().iter().rev();
        ka.cmp(kb)
    });
    for w in order.windows(2) {
        if entries[w[0]].0.as_ref() == entries[w[1]].0.as_ref() {
            return Err(Error::InvalidArgument(format!(
                "index {:?} appears twice",
                entries[w[0]].0.as_ref()
            )));
        }
    }
    let mut keys: Vec<&[usize]> = order.iter().map(|&i| entries[i].0.as_ref()).collect();
    let mut values: Vec<f64> = order.iter().map(|&i| entries[i].1.abs()).collect();
    for (level, &t) in theta.iter().enumerate() {
        let mut next_keys = Vec::new();
        let mut next_values = Vec::new();
        let mut start = 0;
        while start < keys.len() {
            let outer = &keys[start][level + 1..];
            let mut end = start + 1;
            while end < keys.len() && &keys[end][level + 1..] == outer {
                end += 1;
            }
            next_keys.push(keys[start]);
            next_values.push(lp_combine(&values[start..end], t));
            start = end;
        }
        keys = next_keys;
        values = next_values;
    }
    Ok(values[0])
}

fn lp_combine(values: &[f64], theta: f64) -> f64 {
    if values.len() == 1 {
        values[0]
    } else if theta.is_infinite() {
        values.iter().copied().fold(0.0, f64::max)
    } else if theta == 1.0 {
        values.iter().sum()
    } else {
        values.iter().map(|v| v.powf(theta)).sum::<f64>().powf(1.0 / theta)
    }
}

/// `(mean |f|^p)^{1/p}` over the grid nodes.
pub fn lp_norm_reference(f: &GridFunction, p: f64) -> Result<f64> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::Domain(format!("p must lie in [1, ∞), got {p}")));
    }
    let n = f.values().len() as f64;
    let s: f64 = f.values().iter().map(|z| z.norm().powf(p)).sum();
    Ok((s / n).powf(1.0 / p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{rearrange_1d, CatalogFunction};
    use crate::svfun::SvFunction;
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn profile(v: &[f64]) -> RearrangedProfile {
        RearrangedProfile::from_moduli(v.to_vec()).unwrap()
    }

    #[test]
    fn one_dimensional_examples() {
        let ones = profile(&[1.0; 1024]);
        let l22 = AxisSpace::lorentz(2.0, 2.0).unwrap();
        assert!((lk_norm_1d(&ones, &l22) - 1.0).abs() < 1e-12);
        let l21 = AxisSpace::lorentz(2.0, 1.0).unwrap();
        assert!((lk_norm_1d(&ones, &l21) - 2.0).abs() < 1e-12);
        let mut half = vec![2.0; 512];
        half.extend(vec![0.0; 512]);
        let n = lk_norm_1d(&profile(&half), &l22);
        assert!((n - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn sup_axis_of_constant() {
        // sup_t t^{1/p} = 1 attained at t = 1.
        let a = AxisSpace::lorentz(2.0, f64::INFINITY).unwrap();
        assert!((lk_norm_1d(&profile(&[3.0; 16]), &a) - 3.0).abs() < 1e-15);
    }

    #[test]
    fn parameter_validation() {
        assert!(AxisSpace::lorentz(1.0, 2.0).is_err());
        assert!(AxisSpace::lorentz(f64::INFINITY, 2.0).is_err());
        assert!(AxisSpace::lorentz(2.0, 0.5).is_err());
        assert!(SpaceParams::lorentz(&[2.0, 2.0], &[2.0]).is_err());
        let f = GridFunction::zeros(vec![4]).unwrap();
        let sp = SpaceParams::lorentz(&[2.0, 2.0], &[2.0, 2.0]).unwrap();
        assert!(aniso_lk_norm(&f, &sp).is_err());
    }

    #[test]
    fn aniso_reduces_to_one_dimensional() {
        let f = CatalogFunction::ExpSum(vec![(1.0, vec![1]), (0.5, vec![4])])
            .sample(&[256])
            .unwrap();
        let a = AxisSpace::new(3.0, 1.5, SvFunction::iterated_log(1).unwrap().into()).unwrap();
        let sp = SpaceParams::new(vec![a.clone()]).unwrap();
        let direct = lk_norm_1d(&rearrange_1d(f.values()).unwrap(), &a);
        assert_eq!(aniso_lk_norm(&f, &sp).unwrap(), direct);
    }

    #[test]
    fn unimodular_functions_have_constant_norm() {
        let sp = SpaceParams::lorentz(&[2.0, 3.0], &[2.0, 1.0]).unwrap();
        let one = aniso_lk_norm(&CatalogFunction::Constant(1.0).sample(&[16, 16]).unwrap(), &sp).unwrap();
        for k in [vec![1, 0], vec![3, -5], vec![7, 7]] {
            let e = CatalogFunction::Exponential(k).sample(&[16, 16]).unwrap();
            assert!((aniso_lk_norm(&e, &sp).unwrap() - one).abs() < 1e-12);
        }
        let sp22 = SpaceParams::lorentz(&[2.0, 2.0], &[2.0, 2.0]).unwrap();
        let c = CatalogFunction::Constant(1.0).sample(&[8, 8]).unwrap();
        assert!((aniso_lk_norm(&c, &sp22).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn literal_display_agrees_on_separable_functions() {
        // f(x, y) = g(x) h(y) with log weights on both axes: the two readings
        // differ only by the midpoint error of the literal route, which
        // shrinks under refinement.
        let g = |x: f64| 1.0 + 0.5 * x.cos();
        let h = |y: f64| (2.0 + (3.0 * y).sin()).abs();
        let l1: WeightV = SvFunction::iterated_log(1).unwrap().into();
        let sp = SpaceParams::from_parts(&[2.0, 3.0], &[2.0, 3.0], &[l1.clone(), l1]).unwrap();
        let gap = |n: usize| {
            let f = GridFunction::from_fn(vec![n, n], |x| Complex64::new(g(x[0]) * h(x[1]), 0.0)).unwrap();
            let r = f.iterated_rearrangement();
            let standard = aniso_lk_norm_rearranged(&r, &sp).unwrap();
            let literal = aniso_lk_norm_literal(&r, &sp).unwrap();
            (standard - literal).abs() / standard
        };
        let coarse = gap(256);
        let fine = gap(1024);
        assert!(fine < 1e-2, "{fine}");
        assert!(fine < 0.6 * coarse, "{coarse} -> {fine}");
    }

    #[test]
    fn mixed_norm_examples() {
        let box2: Vec<(Vec<usize>, f64)> =
            vec![(vec![0, 0], 1.0), (vec![1, 0], 1.0), (vec![0, 1], 1.0), (vec![1, 1], 1.0)];
        assert!((mixed_seq_norm(&box2, &[2.0, 2.0]).unwrap() - 2.0).abs() < 1e-15);
        assert!((mixed_seq_norm(&box2, &[1.0, f64::INFINITY]).unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(mixed_seq_norm(&[(vec![3, 1], -5.0)], &[1.5, 0.5]).unwrap(), 5.0);
        let empty: Vec<(Vec<usize>, f64)> = vec![];
        assert_eq!(mixed_seq_norm(&empty, &[1.0]).unwrap(), 0.0);
        assert!(mixed_seq_norm(&[(vec![0], 1.0), (vec![0], 2.0)], &[1.0]).is_err());
        assert!(mixed_seq_norm(&[(vec![0], 1.0)], &[1.0, 1.0]).is_err());
        assert!(mixed_seq_norm(&[(vec![0], 1.0)], &[0.0]).is_err());
    }

    #[test]
    fn mixed_norm_axis_order() {
        // a(n1, n2): inner sum over n1 with θ1 = 1, outer sup over n2.
        let a = vec![(vec![0, 0], 1.0), (vec![1, 0], 1.0), (vec![0, 1], 3.0)];
        assert_eq!(mixed_seq_norm(&a, &[1.0, f64::INFINITY]).unwrap(), 3.0);
        assert_eq!(mixed_seq_norm(&a, &[f64::INFINITY, 1.0]).unwrap(), 4.0);
    }

    #[test]
    fn lp_reference_examples() {
        let c = CatalogFunction::Constant(-2.5).sample(&[7]).unwrap();
        assert!((lp_norm_reference(&c, 3.0).unwrap() - 2.5).abs() < 1e-15);
        let e = CatalogFunction::Exponential(vec![3]).sample(&[16]).unwrap();
        assert!((lp_norm_reference(&e, 2.0).unwrap() - 1.0).abs() < 1e-15);
        let block = GridFunction::from_fn(vec![64], |x| {
            [-3i32, -2, 2, 3]
                .iter()
                .map(|&k| Complex64::from_polar(1.0, k as f64 * x[0]))
                .sum()
        })
        .unwrap();
        assert!((lp_norm_reference(&block, 2.0).unwrap() - 2.0).abs() < 1e-12);
        assert!(lp_norm_reference(&c, 0.5).is_err());
    }

    proptest! {
        #[test]
        fn norms_are_homogeneous(vals in prop::collection::vec(0.0f64..5.0, 1..64), lambda in 0.01f64..100.0) {
            let a = AxisSpace::new(2.5, 1.5, SvFunction::iterated_log(2).unwrap().into()).unwrap();
            let base = lk_norm_1d(&profile(&vals), &a);
            let scaled: Vec<f64> = vals.iter().map(|v| v * lambda).collect();
            let s = lk_norm_1d(&profile(&scaled), &a);
            prop_assert!((s - lambda * base).abs() <= 1e-12 * s.max(1e-300));
        }

        #[test]
        fn norm_ignores_order_and_sign(mut vals in prop::collection::vec(-5.0f64..5.0, 1..64)) {
            let a = AxisSpace::lorentz(3.0, 2.0).unwrap();
            let n1 = lk_norm_1d(&profile(&vals.iter().map(|v| v.abs()).collect::<Vec<_>>()), &a);
            vals.reverse();
            let z: Vec<Complex64> = vals.iter().map(|&v| Complex64::new(0.0, v)).collect();
            let n2 = lk_norm_1d(&rearrange_1d(&z).unwrap(), &a);
            prop_assert_eq!(n1, n2);
        }

        #[test]
        fn equal_exponents_give_flat_norm(
            vals in prop::collection::vec(0.0f64..3.0, 1..20),
            theta in prop_oneof![Just(1.0), Just(2.0), Just(3.5), Just(f64::INFINITY)],
        ) {
            let entries: Vec<(Vec<usize>, f64)> =
                vals.iter().enumerate().map(|(i, &v)| (vec![i % 4, i / 4], v)).collect();
            let nested = mixed_seq_norm(&entries, &[theta, theta]).unwrap();
            let flat = lp_combine(&vals, theta);
            prop_assert!((nested - flat).abs() <= 1e-12 * flat.max(1e-300));
        }
    }
}
