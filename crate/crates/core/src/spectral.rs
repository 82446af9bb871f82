//! Fourier analysis on uniform grids and the frequency-index combinatorics:
//! dyadic blocks `ρ(s̄)`, stepped hyperbolic crosses and the shells `Y` and `κ`.
//!
//! A block index `s̄ ∈ Z_+^m` labels the frequencies with
//! `[2^{s_j-1}] ≤ |k_j| < 2^{s_j}`, so `s_j = 0` means `k_j = 0` only.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{GridFunction, ModulusGrid, NodeLayout, MAX_DIMS};

/// Tolerance for `⟨s̄,γ̄⟩` against `n` when no exact integer scaling exists.
pub const CROSS_TOL: f64 = 1e-9;
/// Largest denominator tried when scaling `γ̄` and `n` to integers.
const MAX_DENOMINATOR: i64 = 10_000;
/// Relative modulus below which analysed coefficients are dropped.
pub const ANALYZE_CUTOFF: f64 = 1e-13;

fn check_dims(m: usize) -> Result<()> {
    if m == 0 || m > MAX_DIMS {
        return Err(Error::InvalidArgument(format!(
            "between 1 and {MAX_DIMS} axes are supported, got {m}"
        )));
    }
    Ok(())
}

/// `s_j` of the dyadic block containing frequency `k_j`.
pub fn block_level(k: i64) -> usize {
    (64 - k.unsigned_abs().leading_zeros()) as usize
}

/// Inclusive range `[a, b]` of `|k|` covered by level `s`.
pub fn level_range(s: usize) -> (u64, u64) {
    if s == 0 {
        (0, 0)
    } else {
        (1 << (s - 1), (1 << s) - 1)
    }
}

/// A dyadic block index `s̄ ∈ Z_+^m`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BlockIndex(Vec<usize>);

impl BlockIndex {
    pub fn new(s: Vec<usize>) -> Self {
        Self(s)
    }

    pub fn zero(m: usize) -> Self {
        Self(vec![0; m])
    }

    /// The block containing frequency `k̄`.
    pub fn of_frequency(k: &[i64]) -> Self {
        Self(k.iter().map(|&k| block_level(k)).collect())
    }

    pub fn dims(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn dot(&self, gamma: &[f64]) -> f64 {
        self.0.iter().zip(gamma).map(|(&s, g)| s as f64 * g).sum()
    }

    /// `|ρ(s̄)| = ∏ (s_j = 0 ? 1 : 2^{s_j})`.
    pub fn rho_size(&self) -> u128 {
        self.0
            .iter()
            .map(|&s| if s == 0 { 1u128 } else { 1u128 << s })
            .product()
    }

    pub fn contains(&self, k: &[i64]) -> bool {
        k.len() == self.0.len() && k.iter().zip(&self.0).all(|(&k, &s)| block_level(k) == s)
    }

    /// Frequencies of `ρ(s̄)` in lexicographic order.
    pub fn rho_set(&self) -> Vec<Vec<i64>> {
        let per_axis: Vec<Vec<i64>> = self
            .0
            .iter()
            .map(|&s| {
                let (a, b) = level_range(s);
                if s == 0 {
                    vec![0]
                } else {
                    let pos = a as i64..=b as i64;
                    pos.clone().rev().map(|k| -k).chain(pos).collect()
                }
            })
            .collect();
        let mut out = vec![Vec::with_capacity(self.0.len())];
        for axis in &per_axis {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    axis.iter().map(move |&k| {
                        let mut v = prefix.clone();
                        v.push(k);
                        v
                    })
                })
                .collect();
        }
        out
    }
}

impl AsRef<[usize]> for BlockIndex {
    fn as_ref(&self) -> &[usize] {
        &self.0
    }
}

impl From<Vec<usize>> for BlockIndex {
    fn from(s: Vec<usize>) -> Self {
        Self(s)
    }
}

/// `ρ(s̄)` as an explicit frequency list.
pub fn rho_set(s: &BlockIndex) -> Vec<Vec<i64>> {
    s.rho_set()
}

/// A threshold `n` with direction vector `γ̄`, describing `Q_n^γ` and the shells.
///
/// When `γ̄` and `n` are rationals with denominator at most 10⁴ the
/// comparison of `⟨s̄,γ̄⟩` with `n` is done in exact integer arithmetic;
/// otherwise it uses the tolerance [`CROSS_TOL`].
#[derive(Debug, Clone, PartialEq)]
pub struct CrossSpec {
    gamma: Vec<f64>,
    n: f64,
    scaled: Option<(Vec<i64>, i64)>,
}

fn integer_scaling(gamma: &[f64], n: f64) -> Option<(Vec<i64>, i64)> {
    let near_int = |x: f64| (x - x.round()).abs() <= CROSS_TOL * x.abs().max(1.0) && x.abs() < 1e15;
    (1..=MAX_DENOMINATOR).find_map(|d| {
        let df = d as f64;
        if gamma.iter().all(|g| near_int(g * df)) && near_int(n * df) {
            Some((gamma.iter().map(|g| (g * df).round() as i64).collect(), (n * df).round() as i64))
        } else {
            None
        }
    })
}

impl CrossSpec {
    pub fn new(gamma: Vec<f64>, n: f64) -> Result<Self> {
        check_dims(gamma.len())?;
        if let Some(g) = gamma.iter().find(|g| !(**g > 0.0 && g.is_finite())) {
            return Err(Error::Domain(format!("γ entries must be positive and finite, got {g}")));
        }
        if !n.is_finite() {
            return Err(Error::Domain(format!("threshold must be finite, got {n}")));
        }
        let scaled = integer_scaling(&gamma, n);
        Ok(Self { gamma, n, scaled })
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn n(&self) -> f64 {
        self.n
    }

    pub fn dims(&self) -> usize {
        self.gamma.len()
    }

    /// Whether comparisons are exact.
    pub fn is_exact(&self) -> bool {
        self.scaled.is_some()
    }

    /// Ordering of `⟨s̄,γ̄⟩` relative to `n`.
    pub fn classify(&self, s: &[usize]) -> Ordering {
        match &self.scaled {
            Some((g, n)) => {
                let dot: i128 = s.iter().zip(g).map(|(&s, &g)| s as i128 * g as i128).sum();
                dot.cmp(&(*n as i128))
            }
            None => {
                let dot: f64 = s.iter().zip(&self.gamma).map(|(&s, g)| s as f64 * g).sum();
                let d = dot - self.n;
                if d.abs() <= CROSS_TOL * self.n.abs().max(1.0) {
                    Ordering::Equal
                } else if d < 0.0 {
                    Ordering::Less
                } else {
                    Ordering::Greater
                }
            }
        }
    }

    /// Whether `ρ(s̄) ⊂ Q_n^γ`.
    pub fn contains_block(&self, s: &[usize]) -> bool {
        self.classify(s) == Ordering::Less
    }

    pub fn contains_frequency(&self, k: &[i64]) -> bool {
        self.contains_block(BlockIndex::of_frequency(k).as_slice())
    }

    /// Largest `s_j` with `s_j γ_j ≤ n` (the other coordinates zero).
    fn axis_bound(&self, j: usize) -> usize {
        if self.n < 0.0 {
            return 0;
        }
        let mut b = (self.n / self.gamma[j]).floor().max(0.0) as usize;
        let mut probe = vec![0usize; self.dims()];
        loop {
            probe[j] = b + 1;
            if self.classify(&probe) == Ordering::Greater {
                break;
            }
            b += 1;
        }
        b
    }

    /// Number of frequencies in `Q_n^γ`.
    pub fn frequency_count(&self) -> u128 {
        cross_blocks(self).iter().map(BlockIndex::rho_size).sum()
    }
}

/// Lexicographic enumeration of the box `0 ≤ s_j ≤ bound_j`, skipping
/// subtrees once `prune(partial)` holds. Pruning relies on `⟨s̄,γ̄⟩` growing
/// with every coordinate.
fn enumerate_box(
    bounds: &[usize],
    prune: &dyn Fn(&[usize]) -> bool,
    keep: &dyn Fn(&[usize]) -> bool,
) -> Vec<BlockIndex> {
    fn rec(
        axis: usize,
        s: &mut Vec<usize>,
        bounds: &[usize],
        prune: &dyn Fn(&[usize]) -> bool,
        keep: &dyn Fn(&[usize]) -> bool,
        out: &mut Vec<BlockIndex>,
    ) {
        if axis == bounds.len() {
            if keep(s) {
                out.push(BlockIndex(s.clone()));
            }
            return;
        }
        for v in 0..=bounds[axis] {
            s[axis] = v;
            if prune(s) {
                break;
            }
            rec(axis + 1, s, bounds, prune, keep, out);
        }
        s[axis] = 0;
    }
    let mut out = Vec::new();
    let mut s = vec![0; bounds.len()];
    rec(0, &mut s, bounds, prune, keep, &mut out);
    out
}

/// Blocks of the stepped hyperbolic cross: `⟨s̄,γ̄⟩ < n`, lexicographic.
pub fn cross_blocks(spec: &CrossSpec) -> Vec<BlockIndex> {
    if spec.n <= 0.0 {
        return Vec::new();
    }
    let bounds: Vec<usize> = (0..spec.dims()).map(|j| spec.axis_bound(j)).collect();
    enumerate_box(
        &bounds,
        &|s| spec.classify(s) != Ordering::Less,
        &|s| spec.classify(s) == Ordering::Less,
    )
}

/// Truncated complement `{s̄ : ⟨s̄,γ̄⟩ ≥ n, s_j ≤ cap_j}`, lexicographic.
pub fn shell_y(spec: &CrossSpec, caps: &[usize]) -> Result<Vec<BlockIndex>> {
    if caps.len() != spec.dims() {
        return Err(Error::DimensionMismatch {
            expected: spec.dims(),
            got: caps.len(),
        });
    }
    Ok(enumerate_box(caps, &|_| false, &|s| spec.classify(s) != Ordering::Less))
}

/// Exact shell `κ = {s̄ : ⟨s̄,γ̄⟩ = n}`, lexicographic; may be empty.
pub fn shell_kappa(spec: &CrossSpec) -> Vec<BlockIndex> {
    if spec.n < 0.0 {
        return Vec::new();
    }
    let bounds: Vec<usize> = (0..spec.dims()).map(|j| spec.axis_bound(j)).collect();
    enumerate_box(
        &bounds,
        &|s| spec.classify(s) == Ordering::Greater,
        &|s| spec.classify(s) == Ordering::Equal,
    )
}

/// Index-set dump: one `s_1,...,s_m` row per block.
pub fn write_blocks_csv<W: Write>(blocks: &[BlockIndex], mut w: W) -> Result<()> {
    if let Some(first) = blocks.first() {
        let header: Vec<String> = (1..=first.dims()).map(|j| format!("s{j}")).collect();
        writeln!(w, "{}", header.join(","))?;
    }
    for b in blocks {
        let row: Vec<String> = b.0.iter().map(usize::to_string).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

/// Grid on which a spectrum is synthesised: node layout plus per-axis sizes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sampling {
    layout: NodeLayout,
    sizes: Vec<usize>,
}

impl Sampling {
    pub fn new(layout: NodeLayout, sizes: Vec<usize>) -> Result<Self> {
        check_dims(sizes.len())?;
        if sizes.iter().any(|&n| n == 0) {
            return Err(Error::InvalidArgument("every axis needs at least one sample".into()));
        }
        Ok(Self { layout, sizes })
    }

    pub fn regular(sizes: Vec<usize>) -> Result<Self> {
        Self::new(NodeLayout::Regular, sizes)
    }

    pub fn staggered(sizes: Vec<usize>) -> Result<Self> {
        Self::new(NodeLayout::Staggered, sizes)
    }

    /// Half of a staggered grid with `2·sizes_j` nodes per axis; only valid
    /// for spectra even in every variable.
    pub fn staggered_half(sizes: Vec<usize>) -> Result<Self> {
        Self::new(NodeLayout::StaggeredHalf, sizes)
    }

    pub fn layout(&self) -> NodeLayout {
        self.layout
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn dims(&self) -> usize {
        self.sizes.len()
    }

    pub fn nodes(&self, axis: usize) -> Vec<f64> {
        let n = self.sizes[axis];
        (0..n).map(|k| self.layout.coordinate(k, n)).collect()
    }

    /// Aliasing guard: a full period of `N` nodes resolves `|k| ≤ (N-1)/2`;
    /// a half grid of `N` nodes stands for `2N`.
    pub fn check_bandwidth(&self, bandwidth: &[usize]) -> Result<()> {
        if bandwidth.len() != self.dims() {
            return Err(Error::DimensionMismatch {
                expected: self.dims(),
                got: bandwidth.len(),
            });
        }
        for (axis, (&size, &bw)) in self.sizes.iter().zip(bandwidth).enumerate() {
            let (effective, needed) = match self.layout {
                NodeLayout::StaggeredHalf => (2 * size, bw + 1),
                _ => (size, 2 * bw + 1),
            };
            if effective < 2 * bw + 1 {
                return Err(Error::Undersampled {
                    axis,
                    size,
                    bandwidth: bw,
                    needed,
                });
            }
        }
        Ok(())
    }
}

/// Finitely supported Fourier coefficients `a_k̄`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SpectralFunction {
    dims: usize,
    coeffs: BTreeMap<Vec<i64>, Complex64>,
}

impl SpectralFunction {
    pub fn new(dims: usize) -> Result<Self> {
        check_dims(dims)?;
        Ok(Self {
            dims,
            coeffs: BTreeMap::new(),
        })
    }

    /// Builds a spectrum; repeated frequencies accumulate.
    pub fn from_coeffs(dims: usize, coeffs: impl IntoIterator<Item = (Vec<i64>, Complex64)>) -> Result<Self> {
        let mut g = Self::new(dims)?;
        for (k, a) in coeffs {
            g.add(k, a)?;
        }
        Ok(g)
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn coeffs(&self) -> &BTreeMap<Vec<i64>, Complex64> {
        &self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn get(&self, k: &[i64]) -> Complex64 {
        self.coeffs.get(k).copied().unwrap_or_default()
    }

    fn check_key(&self, k: &[i64]) -> Result<()> {
        if k.len() != self.dims {
            return Err(Error::DimensionMismatch {
                expected: self.dims,
                got: k.len(),
            });
        }
        Ok(())
    }

    pub fn insert(&mut self, k: Vec<i64>, a: Complex64) -> Result<()> {
        self.check_key(&k)?;
        self.coeffs.insert(k, a);
        Ok(())
    }

    pub fn add(&mut self, k: Vec<i64>, a: Complex64) -> Result<()> {
        self.check_key(&k)?;
        *self.coeffs.entry(k).or_default() += a;
        Ok(())
    }

    /// Per-axis `max |k_j|`.
    pub fn bandwidth(&self) -> Vec<usize> {
        let mut bw = vec![0usize; self.dims];
        for k in self.coeffs.keys() {
            for (b, &kj) in bw.iter_mut().zip(k) {
                *b = (*b).max(kj.unsigned_abs() as usize);
            }
        }
        bw
    }

    pub fn scaled(&self, lambda: f64) -> Self {
        Self {
            dims: self.dims,
            coeffs: self.coeffs.iter().map(|(k, a)| (k.clone(), a * lambda)).collect(),
        }
    }

    /// `self - other`, keeping explicit zeros out.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.dims != other.dims {
            return Err(Error::DimensionMismatch {
                expected: self.dims,
                got: other.dims,
            });
        }
        let mut out = self.clone();
        for (k, a) in &other.coeffs {
            *out.coeffs.entry(k.clone()).or_default() -= a;
        }
        out.coeffs.retain(|_, a| a.norm() != 0.0);
        Ok(out)
    }

    /// Largest coefficientwise difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let keys = self.coeffs.keys().chain(other.coeffs.keys());
        keys.map(|k| (self.get(k) - other.get(k)).norm()).fold(0.0, f64::max)
    }

    /// Σ |a_k̄|².
    pub fn energy(&self) -> f64 {
        self.coeffs.values().map(|a| a.norm_sqr()).sum()
    }

    /// All non-empty dyadic blocks.
    pub fn blocks(&self) -> BTreeMap<BlockIndex, SpectralFunction> {
        let mut out: BTreeMap<BlockIndex, SpectralFunction> = BTreeMap::new();
        for (k, a) in &self.coeffs {
            out.entry(BlockIndex::of_frequency(k))
                .or_insert_with(|| Self {
                    dims: self.dims,
                    coeffs: BTreeMap::new(),
                })
                .coeffs
                .insert(k.clone(), *a);
        }
        out
    }

    /// Spectrum dump: one `k_1,...,k_m,re,im` row per coefficient.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let header: Vec<String> = (1..=self.dims).map(|j| format!("k{j}")).collect();
        writeln!(w, "{},re,im", header.join(","))?;
        for (k, a) in &self.coeffs {
            let ks: Vec<String> = k.iter().map(i64::to_string).collect();
            writeln!(w, "{},{:.17e},{:.17e}", ks.join(","), a.re, a.im)?;
        }
        Ok(())
    }
}

/// `δ_s̄(g)`: the restriction of `g` to `ρ(s̄)`.
pub fn dyadic_block(g: &SpectralFunction, s: &BlockIndex) -> SpectralFunction {
    SpectralFunction {
        dims: g.dims,
        coeffs: g
            .coeffs
            .iter()
            .filter(|(k, _)| s.contains(k))
            .map(|(k, a)| (k.clone(), *a))
            .collect(),
    }
}

/// Part of `g` with spectrum in `Q_n^γ`.
pub fn project_onto_cross(g: &SpectralFunction, spec: &CrossSpec) -> SpectralFunction {
    split_by_cross(g, spec).0
}

/// `(inside, outside)` parts of `g` relative to `Q_n^γ`.
pub fn split_by_cross(g: &SpectralFunction, spec: &CrossSpec) -> (SpectralFunction, SpectralFunction) {
    let mut inside = SpectralFunction {
        dims: g.dims,
        coeffs: BTreeMap::new(),
    };
    let mut outside = inside.clone();
    for (k, a) in &g.coeffs {
        let target = if spec.contains_frequency(k) {
            &mut inside
        } else {
            &mut outside
        };
        target.coeffs.insert(k.clone(), *a);
    }
    (inside, outside)
}

fn signed_frequency(i: usize, n: usize) -> i64 {
    if i <= (n - 1) / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// Fibers gathered per FFT call along strided axes.
const FFT_TILE: usize = 64;

fn fft_all_axes(values: &mut [Complex64], sizes: &[usize], direction: FftDirection) {
    let mut planner = FftPlanner::new();
    for axis in 0..sizes.len() {
        let n = sizes[axis];
        if n == 1 {
            continue;
        }
        let fft: Arc<dyn Fft<f64>> = planner.plan_fft(n, direction);
        let stride: usize = sizes[..axis].iter().product();
        let outer: usize = sizes[axis + 1..].iter().product();
        if stride == 1 {
            fft.process(values);
            continue;
        }
        let mut buf = vec![Complex64::default(); FFT_TILE * n];
        for o in 0..outer {
            let base = o * stride * n;
            let mut start = 0;
            while start < stride {
                let width = FFT_TILE.min(stride - start);
                for k in 0..n {
                    let row = base + k * stride + start;
                    for t in 0..width {
                        buf[t * n + k] = values[row + t];
                    }
                }
                fft.process(&mut buf[..width * n]);
                for k in 0..n {
                    let row = base + k * stride + start;
                    for t in 0..width {
                        values[row + t] = buf[t * n + k];
                    }
                }
                start += width;
            }
        }
    }
}

/// Phase `e^{iπk/N}` relating staggered samples to the regular DFT.
fn stagger_phase(k: i64, n: usize) -> Complex64 {
    Complex64::from_polar(1.0, std::f64::consts::PI * k as f64 / n as f64)
}

/// Discrete Fourier coefficients `a_k̄ = (1/∏N_j) Σ f(x̄) e^{-i⟨k̄,x̄⟩}`,
/// dropping those below [`ANALYZE_CUTOFF`] times the largest modulus.
pub fn analyze(f: &GridFunction) -> Result<SpectralFunction> {
    analyze_with_cutoff(f, ANALYZE_CUTOFF)
}

pub fn analyze_with_cutoff(f: &GridFunction, cutoff: f64) -> Result<SpectralFunction> {
    if f.layout() == NodeLayout::StaggeredHalf {
        return Err(Error::InvalidArgument(
            "a half grid does not cover a full period".into(),
        ));
    }
    let sizes = f.sizes().to_vec();
    let mut values = f.values().to_vec();
    fft_all_axes(&mut values, &sizes, FftDirection::Forward);
    let total = values.len() as f64;
    let max = values.iter().map(|z| z.norm()).fold(0.0, f64::max) / total;
    let threshold = cutoff * max;
    let m = sizes.len();
    let mut g = SpectralFunction::new(m)?;
    let mut idx = vec![0usize; m];
    for z in &values {
        let mut a = z / total;
        if a.norm() > threshold {
            let k: Vec<i64> = idx.iter().zip(&sizes).map(|(&i, &n)| signed_frequency(i, n)).collect();
            if f.layout() == NodeLayout::Staggered {
                for (&kj, &n) in k.iter().zip(&sizes) {
                    a *= stagger_phase(-kj, n);
                }
            }
            g.coeffs.insert(k, a);
        }
        for j in 0..m {
            idx[j] += 1;
            if idx[j] < sizes[j] {
                break;
            }
            idx[j] = 0;
        }
    }
    Ok(g)
}

/// `Σ a_k̄ e^{i⟨k̄,x̄⟩}` at the regular nodes.
pub fn synthesize(g: &SpectralFunction, sizes: &[usize]) -> Result<GridFunction> {
    synthesize_on(g, &Sampling::regular(sizes.to_vec())?)
}

/// Synthesis on a regular or staggered full-period grid.
pub fn synthesize_on(g: &SpectralFunction, sampling: &Sampling) -> Result<GridFunction> {
    if sampling.dims() != g.dims {
        return Err(Error::DimensionMismatch {
            expected: g.dims,
            got: sampling.dims(),
        });
    }
    if sampling.layout() == NodeLayout::StaggeredHalf {
        return Err(Error::InvalidArgument(
            "half grids are only supported for block spectra".into(),
        ));
    }
    sampling.check_bandwidth(&g.bandwidth())?;
    let sizes = sampling.sizes();
    let total: usize = sizes.iter().product();
    let mut values = vec![Complex64::default(); total];
    for (k, a) in &g.coeffs {
        let mut idx = 0;
        let mut stride = 1;
        let mut a = *a;
        for (&kj, &n) in k.iter().zip(sizes) {
            idx += kj.rem_euclid(n as i64) as usize * stride;
            stride *= n;
            if sampling.layout() == NodeLayout::Staggered {
                a *= stagger_phase(kj, n);
            }
        }
        values[idx] = a;
    }
    fft_all_axes(&mut values, sizes, FftDirection::Inverse);
    GridFunction::with_layout(sizes.to_vec(), values, sampling.layout())
}

/// `D_s(x) = Σ_{k ∈ ρ(s)} e^{ikx}` in one variable, in the product form
/// `2 cos((a+b)x/2) sin((b-a+1)x/2) / sin(x/2)` for `|k| ∈ [a, b]`.
pub fn dirichlet_kernel(s: usize, x: f64) -> f64 {
    if s == 0 {
        return 1.0;
    }
    let (a, b) = level_range(s);
    let half = (0.5 * x).sin();
    if half.abs() < 1e-300 {
        return (1u64 << s) as f64;
    }
    let (a, b) = (a as f64, b as f64);
    2.0 * (0.5 * (a + b) * x).cos() * (0.5 * (b - a + 1.0) * x).sin() / half
}

/// Real spectra constant on every dyadic block: `Σ c_s̄ · 1_{ρ(s̄)}`.
///
/// Such spectra are even in every variable, so they synthesise to real
/// functions `Σ c_s̄ ∏_j D_{s_j}(x_j)` that may be sampled on half grids.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BlockSpectrum {
    dims: usize,
    blocks: BTreeMap<BlockIndex, f64>,
}

impl BlockSpectrum {
    pub fn new(dims: usize) -> Result<Self> {
        check_dims(dims)?;
        Ok(Self {
            dims,
            blocks: BTreeMap::new(),
        })
    }

    pub fn single(s: BlockIndex, c: f64) -> Result<Self> {
        let mut b = Self::new(s.dims())?;
        b.insert(s, c)?;
        Ok(b)
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn insert(&mut self, s: BlockIndex, c: f64) -> Result<()> {
        if s.dims() != self.dims {
            return Err(Error::DimensionMismatch {
                expected: self.dims,
                got: s.dims(),
            });
        }
        self.blocks.insert(s, c);
        Ok(())
    }

    pub fn get(&self, s: &BlockIndex) -> f64 {
        self.blocks.get(s).copied().unwrap_or(0.0)
    }

    pub fn blocks(&self) -> &BTreeMap<BlockIndex, f64> {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn scaled(&self, lambda: f64) -> Self {
        Self {
            dims: self.dims,
            blocks: self.blocks.iter().map(|(s, c)| (s.clone(), c * lambda)).collect(),
        }
    }

    pub fn bandwidth(&self) -> Vec<usize> {
        let mut bw = vec![0usize; self.dims];
        for s in self.blocks.keys() {
            for (b, &sj) in bw.iter_mut().zip(s.as_slice()) {
                *b = (*b).max(level_range(sj).1 as usize);
            }
        }
        bw
    }

    /// Explicit coefficients; the size is `Σ |ρ(s̄)|`.
    pub fn to_spectral(&self) -> SpectralFunction {
        let mut g = SpectralFunction {
            dims: self.dims,
            coeffs: BTreeMap::new(),
        };
        for (s, &c) in &self.blocks {
            for k in s.rho_set() {
                g.coeffs.insert(k, Complex64::new(c, 0.0));
            }
        }
        g
    }

    /// `(inside, outside)` relative to `Q_n^γ`; blocks are never split.
    pub fn split_by_cross(&self, spec: &CrossSpec) -> (Self, Self) {
        let (mut inside, mut outside) = (Self::new(self.dims).unwrap(), Self::new(self.dims).unwrap());
        for (s, &c) in &self.blocks {
            let target = if spec.contains_block(s.as_slice()) {
                &mut inside
            } else {
                &mut outside
            };
            target.blocks.insert(s.clone(), c);
        }
        (inside, outside)
    }

    /// Real samples, axis 0 fastest, by mode products of the block
    /// coefficient tensor with per-axis Dirichlet tables.
    fn sample_real(&self, sampling: &Sampling) -> Result<Vec<f64>> {
        if sampling.dims() != self.dims {
            return Err(Error::DimensionMismatch {
                expected: self.dims,
                got: sampling.dims(),
            });
        }
        sampling.check_bandwidth(&self.bandwidth())?;
        let m = self.dims;
        let mut levels: Vec<Vec<usize>> = vec![Vec::new(); m];
        for s in self.blocks.keys() {
            for (l, &sj) in levels.iter_mut().zip(s.as_slice()) {
                l.push(sj);
            }
        }
        for l in &mut levels {
            l.sort_unstable();
            l.dedup();
            if l.is_empty() {
                l.push(0);
            }
        }
        let mut shape: Vec<usize> = levels.iter().map(Vec::len).collect();
        let mut t = vec![0.0; shape.iter().product()];
        for (s, &c) in &self.blocks {
            let mut idx = 0;
            let mut stride = 1;
            for j in 0..m {
                let pos = levels[j].binary_search(&s.as_slice()[j]).expect("level present");
                idx += pos * stride;
                stride *= shape[j];
            }
            t[idx] = c;
        }
        for j in 0..m {
            let nodes = sampling.nodes(j);
            let n = nodes.len();
            let table: Vec<Vec<f64>> = levels[j]
                .iter()
                .map(|&s| nodes.iter().map(|&x| dirichlet_kernel(s, x)).collect())
                .collect();
            let l = shape[j];
            let stride: usize = shape[..j].iter().product();
            let outer: usize = shape[j + 1..].iter().product();
            let mut next = vec![0.0; stride * n * outer];
            for o in 0..outer {
                for (a, row) in table.iter().enumerate() {
                    let src = &t[(o * l + a) * stride..(o * l + a + 1) * stride];
                    if src.iter().all(|v| *v == 0.0) {
                        continue;
                    }
                    for (i, &d) in row.iter().enumerate() {
                        let dst = &mut next[(o * n + i) * stride..(o * n + i + 1) * stride];
                        for (y, x) in dst.iter_mut().zip(src) {
                            *y += d * x;
                        }
                    }
                }
            }
            shape[j] = n;
            t = next;
        }
        Ok(t)
    }

    pub fn sample(&self, sampling: &Sampling) -> Result<GridFunction> {
        let values = self.sample_real(sampling)?;
        GridFunction::with_layout(
            sampling.sizes().to_vec(),
            values.into_iter().map(|v| Complex64::new(v, 0.0)).collect(),
            sampling.layout(),
        )
    }

    /// `|f|` at the nodes without an intermediate complex array.
    pub fn sample_moduli(&self, sampling: &Sampling) -> Result<ModulusGrid> {
        let mut values = self.sample_real(sampling)?;
        for v in &mut values {
            *v = v.abs();
        }
        Ok(ModulusGrid::from_parts_unchecked(sampling.sizes().to_vec(), values))
    }
}
