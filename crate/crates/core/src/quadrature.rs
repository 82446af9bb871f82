//! Cell weights for integrals of step functions against `V(t)^τ t^{τ/p-1}`.
//!
//! A rearranged sample vector of length `n` is constant on the cells
//! `((i)/n, (i+1)/n]`, so every Lorentz–Karamata integral reduces to
//! `Σ f_i^τ W_i` with `W_i = ∫_cell V(t)^τ t^{τ/p-1} dt`. The power factor is
//! integrated exactly; the slowly varying factor is integrated with
//! 8-point Gauss–Legendre in the variable `u = t^{τ/p}`, with a geometric split of the
//! first cell where `V` has its logarithmic singularity.

use crate::svfun::WeightV;

const GL_NODES: [f64; 8] = [
    -0.960_289_856_497_536_3,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329_0,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329_0,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL_WEIGHTS: [f64; 8] = [
    0.101_228_536_290_376_3,
    0.222_381_034_453_374_5,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362_0,
    0.362_683_783_378_362_0,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// Dyadic pieces used on the first cell.
const FIRST_CELL_SPLITS: u32 = 80;
/// Points sampled per cell when taking the supremum for `τ = ∞`.
const SUP_SAMPLES: usize = 8;

/// `∫_a^b g(u) du` with 8-point Gauss–Legendre, `len = b - a` supplied
/// separately so callers can pass a cancellation-free length.
fn gauss_legendre(a: f64, len: f64, g: impl Fn(f64) -> f64) -> f64 {
    let half = 0.5 * len;
    let mid = a + half;
    let mut acc = 0.0;
    for (x, w) in GL_NODES.iter().zip(GL_WEIGHTS.iter()) {
        acc += w * g(mid + half * x);
    }
    acc * half
}

/// `((i+1)^e - i^e) / n^e` without cancellation.
fn power_increment(i: usize, n: usize, e: f64) -> f64 {
    let nf = n as f64;
    if i == 0 {
        return (1.0 / nf).powf(e);
    }
    let a = i as f64 / nf;
    a.powf(e) * (e * (1.0 / i as f64).ln_1p()).exp_m1()
}

/// `W_i` for `i = 0..n` with finite `τ`.
pub(crate) fn finite_cell_weights(n: usize, p: f64, tau: f64, weight: &WeightV) -> Vec<f64> {
    let e = tau / p;
    if weight.is_unit() {
        return (0..n).map(|i| power_increment(i, n, e) / e).collect();
    }
    let inv_e = 1.0 / e;
    let g = |u: f64| weight.eval_unchecked(u.powf(inv_e).min(1.0)).powf(tau);
    (0..n)
        .map(|i| {
            let len = power_increment(i, n, e);
            if i == 0 {
                // [0, c] split into [c 2^{-k-1}, c 2^{-k}].
                let mut acc = 0.0;
                let mut hi = len;
                for _ in 0..FIRST_CELL_SPLITS {
                    let lo = 0.5 * hi;
                    acc += gauss_legendre(lo, hi - lo, g);
                    hi = lo;
                }
                acc += hi * g(0.5 * hi);
                acc * inv_e
            } else {
                let a = (i as f64 / n as f64).powf(e);
                gauss_legendre(a, len, g) * inv_e
            }
        })
        .collect()
}

/// `sup_{t ∈ cell} V(t) t^{1/p}` for `i = 0..n` (the `τ = ∞` case).
pub(crate) fn sup_cell_weights(n: usize, p: f64, weight: &WeightV) -> Vec<f64> {
    let nf = n as f64;
    (0..n)
        .map(|i| {
            let a = i as f64 / nf;
            let h = 1.0 / nf;
            let first = usize::from(i == 0);
            (first..=SUP_SAMPLES)
                .map(|k| {
                    let t = (a + h * k as f64 / SUP_SAMPLES as f64).min(1.0);
                    weight.eval_unchecked(t) * t.powf(1.0 / p)
                })
                .fold(0.0, f64::max)
        })
        .collect()
}
