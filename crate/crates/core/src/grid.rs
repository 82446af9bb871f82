//! Uniformly sampled 2π-periodic functions and their non-increasing
//! rearrangements.
//!
//! Samples are stored row-major with axis 0 varying fastest (the last axis is
//! slowest). Axis indices are zero-based throughout the API.

use std::f64::consts::PI;
use std::io::Write;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest number of variables supported.
pub const MAX_DIMS: usize = 4;

fn check_sizes(sizes: &[usize]) -> Result<usize> {
    if sizes.is_empty() || sizes.len() > MAX_DIMS {
        return Err(Error::InvalidArgument(format!(
            "between 1 and {MAX_DIMS} axes are supported, got {}",
            sizes.len()
        )));
    }
    if sizes.iter().any(|&n| n == 0) {
        return Err(Error::InvalidArgument("every axis needs at least one sample".into()));
    }
    sizes
        .iter()
        .try_fold(1usize, |acc, &n| acc.checked_mul(n))
        .ok_or_else(|| Error::InvalidArgument("grid too large".into()))
}

/// Placement of the `N` nodes along one axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum NodeLayout {
    /// `x_k = 2πk/N`.
    #[default]
    Regular,
    /// `x_k = 2π(k + ½)/N`.
    Staggered,
    /// `x_k = π(k + ½)/N`: the half `[0, π)` of a staggered grid with `2N`
    /// nodes. Functions even in every variable are fully described by it, and
    /// their iterated rearrangement on the full grid is the half-grid one with
    /// every step duplicated.
    StaggeredHalf,
}

impl NodeLayout {
    pub fn coordinate(self, k: usize, n: usize) -> f64 {
        let (k, n) = (k as f64, n as f64);
        match self {
            Self::Regular => 2.0 * PI * k / n,
            Self::Staggered => 2.0 * PI * (k + 0.5) / n,
            Self::StaggeredHalf => PI * (k + 0.5) / n,
        }
    }
}

/// A complex-valued sampled function of `m` periodic variables.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    sizes: Vec<usize>,
    values: Vec<Complex64>,
    layout: NodeLayout,
}

impl GridFunction {
    pub fn new(sizes: Vec<usize>, values: Vec<Complex64>) -> Result<Self> {
        Self::with_layout(sizes, values, NodeLayout::Regular)
    }

    pub fn with_layout(sizes: Vec<usize>, values: Vec<Complex64>, layout: NodeLayout) -> Result<Self> {
        let len = check_sizes(&sizes)?;
        if values.len() != len {
            return Err(Error::DimensionMismatch {
                expected: len,
                got: values.len(),
            });
        }
        Ok(Self {
            sizes,
            values,
            layout,
        })
    }

    pub fn zeros(sizes: Vec<usize>) -> Result<Self> {
        let len = check_sizes(&sizes)?;
        Ok(Self {
            sizes,
            values: vec![Complex64::new(0.0, 0.0); len],
            layout: NodeLayout::Regular,
        })
    }

    /// Samples `f` at the regular nodes.
    pub fn from_fn(sizes: Vec<usize>, f: impl Fn(&[f64]) -> Complex64) -> Result<Self> {
        Self::from_fn_on(sizes, NodeLayout::Regular, f)
    }

    pub fn from_fn_on(
        sizes: Vec<usize>,
        layout: NodeLayout,
        f: impl Fn(&[f64]) -> Complex64,
    ) -> Result<Self> {
        let len = check_sizes(&sizes)?;
        let m = sizes.len();
        let mut x = vec![0.0; m];
        let mut idx = vec![0usize; m];
        let mut values = Vec::with_capacity(len);
        for _ in 0..len {
            for j in 0..m {
                x[j] = layout.coordinate(idx[j], sizes[j]);
            }
            values.push(f(&x));
            for j in 0..m {
                idx[j] += 1;
                if idx[j] < sizes[j] {
                    break;
                }
                idx[j] = 0;
            }
        }
        Ok(Self {
            sizes,
            values,
            layout,
        })
    }

    pub fn dims(&self) -> usize {
        self.sizes.len()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn layout(&self) -> NodeLayout {
        self.layout
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn moduli(&self) -> ModulusGrid {
        ModulusGrid {
            sizes: self.sizes.clone(),
            values: self.values.iter().map(|z| z.norm()).collect(),
        }
    }

    /// Rearranges every fiber along `axis`; the result holds moduli.
    pub fn rearrange_axis(&self, axis: usize) -> Result<ModulusGrid> {
        let mut g = self.moduli();
        g.rearrange_axis(axis)?;
        Ok(g)
    }

    /// `f^{*_1,...,*_m}`: axis 0 first, then axis 1, and so on.
    pub fn iterated_rearrangement(&self) -> ModulusGrid {
        self.moduli().into_iterated_rearrangement()
    }

    /// Debug dump: one row `k_1,...,k_m,re,im` per node, last axis slowest.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let m = self.dims();
        let header: Vec<String> = (1..=m).map(|j| format!("k{j}")).collect();
        writeln!(w, "{},re,im", header.join(","))?;
        let mut idx = vec![0usize; m];
        for z in &self.values {
            let ks: Vec<String> = idx.iter().map(usize::to_string).collect();
            writeln!(w, "{},{:.17e},{:.17e}", ks.join(","), z.re, z.im)?;
            for j in 0..m {
                idx[j] += 1;
                if idx[j] < self.sizes[j] {
                    break;
                }
                idx[j] = 0;
            }
        }
        Ok(())
    }
}

/// Non-negative samples on a uniform grid, every cell carrying equal measure.
///
/// This is what rearrangements produce and what the norms consume.
#[derive(Debug, Clone, PartialEq)]
pub struct ModulusGrid {
    sizes: Vec<usize>,
    values: Vec<f64>,
}

/// Fibers gathered together when sorting along a strided axis.
const TILE: usize = 64;

fn sort_descending(fiber: &mut [f64]) {
    // Equal keys are bit-identical, so an unstable sort yields the same
    // output as a stable one.
    fiber.sort_unstable_by(|a, b| b.total_cmp(a));
}

impl ModulusGrid {
    pub fn new(sizes: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        let len = check_sizes(&sizes)?;
        if values.len() != len {
            return Err(Error::DimensionMismatch {
                expected: len,
                got: values.len(),
            });
        }
        if let Some(bad) = values.iter().find(|v| !(**v >= 0.0)) {
            return Err(Error::Domain(format!("moduli must be non-negative, got {bad}")));
        }
        Ok(Self { sizes, values })
    }

    /// Caller guarantees matching length and non-negative entries.
    pub(crate) fn from_parts_unchecked(sizes: Vec<usize>, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), sizes.iter().product::<usize>());
        Self { sizes, values }
    }

    pub fn dims(&self) -> usize {
        self.sizes.len()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn scale(&mut self, lambda: f64) {
        for v in &mut self.values {
            *v *= lambda;
        }
    }

    /// Sorts every fiber along `axis` in non-increasing order.
    pub fn rearrange_axis(&mut self, axis: usize) -> Result<()> {
        let m = self.dims();
        if axis >= m {
            return Err(Error::InvalidArgument(format!("axis {axis} out of range for {m} axes")));
        }
        let len = self.sizes[axis];
        let stride: usize = self.sizes[..axis].iter().product();
        let outer: usize = self.sizes[axis + 1..].iter().product();
        if len <= 1 {
            return Ok(());
        }
        if stride == 1 {
            for fiber in self.values.chunks_exact_mut(len) {
                sort_descending(fiber);
            }
            return Ok(());
        }
        let mut buf = vec![0.0; TILE * len];
        for o in 0..outer {
            let base = o * stride * len;
            let mut start = 0;
            while start < stride {
                let width = TILE.min(stride - start);
                for k in 0..len {
                    let row = &self.values[base + k * stride + start..base + k * stride + start + width];
                    for (t, &v) in row.iter().enumerate() {
                        buf[t * len + k] = v;
                    }
                }
                for t in 0..width {
                    sort_descending(&mut buf[t * len..(t + 1) * len]);
                }
                for k in 0..len {
                    let row =
                        &mut self.values[base + k * stride + start..base + k * stride + start + width];
                    for (t, v) in row.iter_mut().enumerate() {
                        *v = buf[t * len + k];
                    }
                }
                start += width;
            }
        }
        Ok(())
    }

    pub fn into_iterated_rearrangement(mut self) -> Self {
        for axis in 0..self.dims() {
            self.rearrange_axis(axis).expect("axis in range");
        }
        self
    }
}

/// Non-increasing rearrangement of a one-dimensional sample vector.
#[derive(Debug, Clone, PartialEq)]
pub struct RearrangedProfile {
    steps: Vec<f64>,
}

impl RearrangedProfile {
    /// Sorts the given moduli; they must be non-negative.
    pub fn from_moduli(mut moduli: Vec<f64>) -> Result<Self> {
        if moduli.is_empty() {
            return Err(Error::EmptySet("cannot rearrange an empty sample".into()));
        }
        if let Some(bad) = moduli.iter().find(|v| !(**v >= 0.0)) {
            return Err(Error::Domain(format!("moduli must be non-negative, got {bad}")));
        }
        sort_descending(&mut moduli);
        Ok(Self { steps: moduli })
    }

    pub fn steps(&self) -> &[f64] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Measure carried by each step.
    pub fn step_measure(&self) -> f64 {
        1.0 / self.steps.len() as f64
    }
}

pub fn rearrange_1d(values: &[Complex64]) -> Result<RearrangedProfile> {
    RearrangedProfile::from_moduli(values.iter().map(|z| z.norm()).collect())
}

/// Closed-form test functions used by experiments and tests.
#[derive(Debug, Clone, PartialEq)]
pub enum CatalogFunction {
    Zero,
    Constant(f64),
    /// `e^{i⟨k,x⟩}`.
    Exponential(Vec<i64>),
    /// `Σ a e^{i⟨k,x⟩}`.
    ExpSum(Vec<(f64, Vec<i64>)>),
    /// `height` where every `x_j < 2π·fraction`, zero elsewhere.
    Plateau { height: f64, fraction: f64 },
}

impl CatalogFunction {
    fn freq_dims(&self) -> Option<usize> {
        match self {
            Self::Exponential(k) => Some(k.len()),
            Self::ExpSum(terms) => terms.first().map(|(_, k)| k.len()),
            _ => None,
        }
    }

    pub fn eval(&self, x: &[f64]) -> Complex64 {
        let phase = |k: &[i64]| -> Complex64 {
            let arg: f64 = k.iter().zip(x).map(|(&k, &x)| k as f64 * x).sum();
            Complex64::from_polar(1.0, arg)
        };
        match self {
            Self::Zero => Complex64::new(0.0, 0.0),
            Self::Constant(c) => Complex64::new(*c, 0.0),
            Self::Exponential(k) => phase(k),
            Self::ExpSum(terms) => terms.iter().map(|(a, k)| phase(k) * *a).sum(),
            Self::Plateau { height, fraction } => {
                if x.iter().all(|&x| x < 2.0 * PI * fraction) {
                    Complex64::new(*height, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }
        }
    }

    pub fn sample(&self, sizes: &[usize]) -> Result<GridFunction> {
        if let Some(d) = self.freq_dims() {
            if d != sizes.len() {
                return Err(Error::DimensionMismatch {
                    expected: sizes.len(),
                    got: d,
                });
            }
        }
        if let Self::ExpSum(terms) = self {
            if terms.iter().any(|(_, k)| k.len() != sizes.len()) {
                return Err(Error::InvalidArgument("inconsistent frequency dimensions".into()));
            }
        }
        GridFunction::from_fn(sizes.to_vec(), |x| self.eval(x))
    }
}

fn parse_freq(s: &str) -> Result<Vec<i64>> {
    s.split(':')
        .map(|t| {
            t.trim()
                .parse::<i64>()
                .map_err(|_| Error::Parse(format!("bad frequency component {t:?}")))
        })
        .collect()
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("bad number {s:?}")))
}

/// Catalog syntax: `zero`, `const(c)`, `exp(k1,...,km)`,
/// `expsum(a@k1:...:km, ...)`, `plateau(height, fraction)`.
impl FromStr for CatalogFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "zero" {
            return Ok(Self::Zero);
        }
        let (name, args) = s
            .strip_suffix(')')
            .and_then(|s| s.split_once('('))
            .ok_or_else(|| Error::Parse(format!("unknown catalog entry {s:?}")))?;
        let args: Vec<&str> = args.split(',').map(str::trim).collect();
        match name.trim() {
            "const" if args.len() == 1 => Ok(Self::Constant(parse_f64(args[0])?)),
            "exp" => Ok(Self::Exponential(
                args.iter()
                    .map(|a| a.parse::<i64>().map_err(|_| Error::Parse(format!("bad frequency {a:?}"))))
                    .collect::<Result<_>>()?,
            )),
            "expsum" => {
                let terms = args
                    .iter()
                    .map(|t| {
                        let (a, k) = t
                            .split_once('@')
                            .ok_or_else(|| Error::Parse(format!("expected amplitude@frequency, got {t:?}")))?;
                        Ok((parse_f64(a)?, parse_freq(k)?))
                    })
                    .collect::<Result<Vec<_>>>()?;
                if terms.is_empty() {
                    return Err(Error::Parse("expsum needs at least one term".into()));
                }
                Ok(Self::ExpSum(terms))
            }
            "plateau" if args.len() == 2 => Ok(Self::Plateau {
                height: parse_f64(args[0])?,
                fraction: parse_f64(args[1])?,
            }),
            _ => Err(Error::Parse(format!("unknown catalog entry {s:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn rearrange_1d_sorts_moduli() {
        let p = rearrange_1d(&[c(1.0), c(-3.0), c(2.0)]).unwrap();
        assert_eq!(p.steps(), &[3.0, 2.0, 1.0]);
        assert!((p.step_measure() - 1.0 / 3.0).abs() < 1e-16);
        let p = rearrange_1d(&[c(-1.5); 7]).unwrap();
        assert!(p.steps().iter().all(|&s| s == 1.5));
        assert!(rearrange_1d(&[]).is_err());
    }

    #[test]
    fn half_plateau_profile() {
        let f = CatalogFunction::Plateau {
            height: 2.0,
            fraction: 0.5,
        }
        .sample(&[16])
        .unwrap();
        let p = rearrange_1d(f.values()).unwrap();
        assert_eq!(&p.steps()[..8], &[2.0; 8]);
        assert_eq!(&p.steps()[8..], &[0.0; 8]);
    }

    #[test]
    fn rearrange_rows_of_small_matrix() {
        // Axis 0 varies fastest: rows are [1, -2] and [3, 0].
        let f = GridFunction::new(vec![2, 2], vec![c(1.0), c(-2.0), c(3.0), c(0.0)]).unwrap();
        let g = f.rearrange_axis(0).unwrap();
        assert_eq!(g.values(), &[2.0, 1.0, 3.0, 0.0]);
        assert!(f.rearrange_axis(2).is_err());
        let again = {
            let mut h = g.clone();
            h.rearrange_axis(0).unwrap();
            h
        };
        assert_eq!(again, g);
    }

    #[test]
    fn strided_axis_uses_per_fiber_sort() {
        // 3 x 70 grid forces the tiled path with a partial tile.
        let sizes = vec![70, 3];
        let vals: Vec<f64> = (0..210).map(|i| ((i * 37) % 101) as f64).collect();
        let mut g = ModulusGrid::new(sizes.clone(), vals.clone()).unwrap();
        g.rearrange_axis(1).unwrap();
        for i0 in 0..70 {
            let mut fiber: Vec<f64> = (0..3).map(|k| vals[i0 + 70 * k]).collect();
            fiber.sort_by(|a, b| b.total_cmp(a));
            let got: Vec<f64> = (0..3).map(|k| g.values()[i0 + 70 * k]).collect();
            assert_eq!(fiber, got);
        }
    }

    #[test]
    fn iterated_rearrangement_of_constant_is_identity() {
        let f = CatalogFunction::Constant(-2.0).sample(&[4, 5, 3]).unwrap();
        let g = f.iterated_rearrangement();
        assert!(g.values().iter().all(|&v| v == 2.0));
    }

    #[test]
    fn one_dimensional_iterated_is_rearrange_1d() {
        let f = CatalogFunction::ExpSum(vec![(1.0, vec![1]), (0.5, vec![3])])
            .sample(&[32])
            .unwrap();
        assert_eq!(f.iterated_rearrangement().values(), rearrange_1d(f.values()).unwrap().steps());
    }

    #[test]
    fn catalog_parsing_and_sampling() {
        let e: CatalogFunction = "exp(1,0)".parse().unwrap();
        let f = e.sample(&[8, 8]).unwrap();
        assert!(f.values().iter().all(|z| (z.norm() - 1.0).abs() < 1e-14));
        let z = "zero".parse::<CatalogFunction>().unwrap().sample(&[4, 4]).unwrap();
        assert!(z.values().iter().all(|z| z.norm() == 0.0));
        let sum: CatalogFunction = "expsum(1@1:0, 2@0:3)".parse().unwrap();
        let a = CatalogFunction::Exponential(vec![1, 0]).sample(&[8, 8]).unwrap();
        let b = CatalogFunction::Exponential(vec![0, 3]).sample(&[8, 8]).unwrap();
        let s = sum.sample(&[8, 8]).unwrap();
        for i in 0..64 {
            let expect = a.values()[i] + b.values()[i] * 2.0;
            assert!((s.values()[i] - expect).norm() < 1e-14);
        }
        assert!(e.sample(&[8]).is_err());
        assert!("nope(1)".parse::<CatalogFunction>().is_err());
        assert!("plateau(2)".parse::<CatalogFunction>().is_err());
        assert_eq!(
            "plateau(2, 0.25)".parse::<CatalogFunction>().unwrap(),
            CatalogFunction::Plateau {
                height: 2.0,
                fraction: 0.25
            }
        );
    }

    #[test]
    fn csv_dump_is_row_major() {
        let f = GridFunction::new(vec![2, 2], vec![c(1.0), c(2.0), c(3.0), c(4.0)]).unwrap();
        let mut out = Vec::new();
        f.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "k1,k2,re,im");
        assert!(lines[2].starts_with("1,0,2."));
        assert!(lines[3].starts_with("0,1,3."));
    }

    #[test]
    fn size_validation() {
        assert!(GridFunction::zeros(vec![]).is_err());
        assert!(GridFunction::zeros(vec![2, 0]).is_err());
        assert!(GridFunction::zeros(vec![2; 5]).is_err());
        assert!(GridFunction::new(vec![2], vec![c(1.0)]).is_err());
        assert!(ModulusGrid::new(vec![1], vec![-1.0]).is_err());
    }

    fn grid_strategy() -> impl Strategy<Value = (Vec<usize>, Vec<f64>)> {
        prop::collection::vec(1usize..6, 1..4).prop_flat_map(|sizes| {
            let len: usize = sizes.iter().product();
            (Just(sizes), prop::collection::vec(-10.0f64..10.0, len))
        })
    }

    fn fibers(sizes: &[usize], values: &[f64], axis: usize) -> Vec<Vec<f64>> {
        let stride: usize = sizes[..axis].iter().product();
        let len = sizes[axis];
        let outer: usize = sizes[axis + 1..].iter().product();
        let mut out = Vec::new();
        for o in 0..outer {
            for s in 0..stride {
                out.push((0..len).map(|k| values[o * stride * len + k * stride + s]).collect());
            }
        }
        out
    }

    proptest! {
        #[test]
        fn rearrangement_preserves_fiber_distribution((sizes, vals) in grid_strategy(), axis in 0usize..4) {
            let axis = axis % sizes.len();
            let values: Vec<Complex64> = vals.iter().map(|&v| Complex64::new(v, -0.5 * v)).collect();
            let f = GridFunction::new(sizes.clone(), values).unwrap();
            let g = f.rearrange_axis(axis).unwrap();
            let before = fibers(&sizes, f.moduli().values(), axis);
            let after = fibers(&sizes, g.values(), axis);
            for (mut b, a) in before.into_iter().zip(after) {
                b.sort_by(|x, y| y.total_cmp(x));
                prop_assert_eq!(b, a);
            }
            let mut twice = g.clone();
            twice.rearrange_axis(axis).unwrap();
            prop_assert_eq!(twice, g);
        }

        #[test]
        fn iterated_rearrangement_keeps_global_max((sizes, vals) in grid_strategy()) {
            let g = ModulusGrid::new(sizes, vals.iter().map(|v| v.abs()).collect()).unwrap();
            let max = g.max();
            let r = g.into_iterated_rearrangement();
            prop_assert_eq!(r.max(), max);
            prop_assert_eq!(r.values()[0], max);
        }

        #[test]
        fn later_passes_keep_earlier_axes_sorted((sizes, vals) in grid_strategy()) {
            let g = ModulusGrid::new(sizes.clone(), vals.iter().map(|v| v.abs()).collect()).unwrap();
            let r = g.into_iterated_rearrangement();
            for axis in 0..sizes.len() {
                for fiber in fibers(&sizes, r.values(), axis) {
                    prop_assert!(fiber.windows(2).all(|w| w[0] >= w[1]));
                }
            }
        }
    }
}
