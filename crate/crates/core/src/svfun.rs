//! Slowly varying functions on `[1, ∞)` built from iterated logarithms.
//!
//! An [`SvFunction`] is `scale · ∏ l_i(t)^{λ_i}` with `l_1(t) = 1 + log₂ t`
//! and `l_i(t) = 1 + log₂ l_{i-1}(t)`. The family is closed under products,
//! quotients and real powers, and every member is slowly varying, so class
//! membership never has to be taken on trust for user callables.
//!
//! Evaluation is done in the `log₂ t` domain so that arguments such as
//! `2^{16000}` (which overflow `f64`) are still representable.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Slack factor used by the numerical "equivalent to monotone" checks.
pub const C_SLACK: f64 = 1.05;

/// `scale · ∏ l_level(t)^exponent`, kept in canonical form.
#[derive(Debug, Clone, PartialEq)]
pub struct SvFunction {
    factors: Vec<(u32, f64)>,
    scale: f64,
}

impl SvFunction {
    /// Builds and canonicalizes: factors sorted by level, duplicate levels
    /// merged, zero exponents dropped.
    pub fn new(scale: f64, factors: impl IntoIterator<Item = (u32, f64)>) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::Domain(format!("scale must be positive and finite, got {scale}")));
        }
        let mut merged: Vec<(u32, f64)> = Vec::new();
        let mut raw: Vec<(u32, f64)> = factors.into_iter().collect();
        for &(level, exponent) in &raw {
            if level == 0 {
                return Err(Error::Domain("iterated-log level starts at 1".into()));
            }
            if !exponent.is_finite() {
                return Err(Error::Domain(format!("exponent must be finite, got {exponent}")));
            }
        }
        raw.sort_by_key(|&(level, _)| level);
        for (level, exponent) in raw {
            match merged.last_mut() {
                Some(last) if last.0 == level => last.1 += exponent,
                _ => merged.push((level, exponent)),
            }
        }
        merged.retain(|&(_, e)| e.abs() > 1e-14);
        Ok(Self {
            factors: merged,
            scale,
        })
    }

    pub fn one() -> Self {
        Self {
            factors: Vec::new(),
            scale: 1.0,
        }
    }

    pub fn constant(c: f64) -> Result<Self> {
        Self::new(c, [])
    }

    /// `l_level(t)`.
    pub fn iterated_log(level: u32) -> Result<Self> {
        Self::new(1.0, [(level, 1.0)])
    }

    pub fn factors(&self) -> &[(u32, f64)] {
        &self.factors
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn is_constant(&self) -> bool {
        self.factors.is_empty()
    }

    /// `v(t)` for `t ≥ 1`.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(t >= 1.0) {
            return Err(Error::Domain(format!("slowly varying functions live on [1, ∞), got t = {t}")));
        }
        Ok(self.eval_log2(t.log2()))
    }

    /// `v(2^u)` for `u ≥ 0`; the argument is the base-2 logarithm of `t`.
    pub fn eval_log2(&self, u: f64) -> f64 {
        debug_assert!(u >= 0.0);
        if self.factors.is_empty() {
            return self.scale;
        }
        let max_level = self.factors.last().map(|f| f.0).unwrap_or(0);
        let mut value = self.scale;
        let mut level_value = 1.0 + u;
        let mut next = self.factors.iter().peekable();
        for level in 1..=max_level {
            if level > 1 {
                level_value = 1.0 + level_value.log2();
            }
            if let Some(&&(l, e)) = next.peek() {
                if l == level {
                    value *= level_value.powf(e);
                    next.next();
                }
            }
        }
        value
    }

    pub fn product(&self, other: &Self) -> Self {
        Self::new(
            self.scale * other.scale,
            self.factors.iter().chain(other.factors.iter()).copied(),
        )
        .expect("product of valid slowly varying functions is valid")
    }

    /// `self / other`, exponents subtracted levelwise.
    pub fn quotient(&self, other: &Self) -> Self {
        Self::new(
            self.scale / other.scale,
            self.factors
                .iter()
                .copied()
                .chain(other.factors.iter().map(|&(l, e)| (l, -e))),
        )
        .expect("quotient of valid slowly varying functions is valid")
    }

    pub fn powf(&self, lambda: f64) -> Self {
        Self::new(
            self.scale.powf(lambda),
            self.factors.iter().map(|&(l, e)| (l, e * lambda)),
        )
        .expect("real power of a valid slowly varying function is valid")
    }

    /// Upper bound of `v(2^{u+1}) / v(2^u)` valid for every `u' ≥ u`.
    ///
    /// `u ↦ l_i(2^u)` is positive, increasing and concave, so its one-step
    /// ratio decreases in `u`; factors with negative exponent contribute at
    /// most 1.
    pub fn step_ratio_bound(&self, u: f64) -> f64 {
        let mut bound = 1.0;
        for &(level, exponent) in &self.factors {
            if exponent > 0.0 {
                let l = Self::new(1.0, [(level, 1.0)]).expect("valid level");
                bound *= (l.eval_log2(u + 1.0) / l.eval_log2(u)).powf(exponent);
            }
        }
        bound
    }
}

impl Default for SvFunction {
    fn default() -> Self {
        Self::one()
    }
}

impl fmt::Display for SvFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if self.scale != 1.0 || self.factors.is_empty() {
            parts.push(format!("{}", self.scale));
        }
        for &(level, exponent) in &self.factors {
            if exponent == 1.0 {
                parts.push(format!("l{level}"));
            } else {
                parts.push(format!("l{level}^{exponent}"));
            }
        }
        write!(f, "{}", parts.join(" * "))
    }
}

/// Grammar: factors joined by `*`; a factor is a positive decimal (scale)
/// or `l<level>` optionally followed by `^<decimal>`.
impl FromStr for SvFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut scale = 1.0;
        let mut factors = Vec::new();
        for token in s.split('*').map(str::trim) {
            if token.is_empty() {
                return Err(Error::Parse(format!("empty factor in {s:?}")));
            }
            if let Some(rest) = token.strip_prefix('l') {
                let (level, exponent) = match rest.split_once('^') {
                    Some((level, exponent)) => (level.trim(), exponent.trim()),
                    None => (rest.trim(), "1"),
                };
                let level: u32 = level
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad iterated-log level in {token:?}")))?;
                let exponent: f64 = exponent
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad exponent in {token:?}")))?;
                factors.push((level, exponent));
            } else {
                let c: f64 = token
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad scale factor {token:?}")))?;
                scale *= c;
            }
        }
        Self::new(scale, factors)
    }
}

/// The weight `V(t) = v(1/t)` on `(0, 1]`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WeightV {
    base: SvFunction,
}

impl WeightV {
    pub fn new(base: SvFunction) -> Self {
        Self { base }
    }

    pub fn unit() -> Self {
        Self::new(SvFunction::one())
    }

    pub fn base(&self) -> &SvFunction {
        &self.base
    }

    pub fn is_unit(&self) -> bool {
        self.base.is_constant() && self.base.scale() == 1.0
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(t > 0.0 && t <= 1.0) {
            return Err(Error::Domain(format!("weights live on (0, 1], got t = {t}")));
        }
        self.base.eval(1.0 / t)
    }

    /// `V(2^{-k}) = v(2^k)`.
    pub fn at_dyadic(&self, k: f64) -> f64 {
        self.base.eval_log2(k)
    }

    /// Same as [`eval`](Self::eval) without the domain check; `t` must lie in `(0, 1]`.
    pub(crate) fn eval_unchecked(&self, t: f64) -> f64 {
        self.base.eval_log2(-t.log2())
    }
}

impl From<SvFunction> for WeightV {
    fn from(base: SvFunction) -> Self {
        Self::new(base)
    }
}

/// Outcome of a numerical class-membership audit.
///
/// Each onset is the first grid index from which the corresponding
/// monotonicity holds up to [`SvReport::slack`] through the end of the grid.
/// A check passes when its onset lies in the first half of the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SvReport {
    pub epsilon: f64,
    pub slack: f64,
    pub grid_len: usize,
    /// `t^ε v(t)` almost non-decreasing.
    pub rising_onset: usize,
    /// `t^{-ε} v(t)` almost non-increasing.
    pub falling_onset: usize,
    /// `(log₂ 2t)^ε v(t)` almost non-decreasing; only set by the SVL audit.
    pub log_onset: Option<usize>,
    pub passed: bool,
}

impl SvReport {
    fn max_onset(&self) -> usize {
        self.grid_len / 2
    }
}

/// Doubling grid `t = 2^k`, `k = 0..=k_max`, given by its base-2 logarithms.
pub fn dyadic_log_grid(k_max: u32) -> Vec<f64> {
    (0..=k_max).map(f64::from).collect()
}

fn validate_grid(epsilon: f64, log_grid: &[f64]) -> Result<()> {
    if log_grid.is_empty() {
        return Err(Error::EmptySet("audit grid is empty".into()));
    }
    if !(epsilon > 0.0) {
        return Err(Error::Domain(format!("epsilon must be positive, got {epsilon}")));
    }
    if log_grid[0] < 0.0 {
        return Err(Error::Domain("audit grid must start at t ≥ 1".into()));
    }
    if log_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("audit grid must be strictly increasing".into()));
    }
    Ok(())
}

/// First index from which `g` (given as log₂ values) is non-decreasing up to
/// the log slack: `g_i ≤ g_j + log₂ C` for all `onset ≤ i < j`.
fn rising_onset(g: &[f64], log_slack: f64) -> usize {
    let mut suffix_min = f64::INFINITY;
    let mut onset = 0;
    for i in (0..g.len()).rev() {
        if g[i] > suffix_min + log_slack {
            onset = i + 1;
            break;
        }
        suffix_min = suffix_min.min(g[i]);
    }
    onset
}

fn falling_onset(g: &[f64], log_slack: f64) -> usize {
    let negated: Vec<f64> = g.iter().map(|x| -x).collect();
    rising_onset(&negated, log_slack)
}

fn audit(v: &SvFunction, epsilon: f64, log_grid: &[f64], slack: f64, with_log: bool) -> SvReport {
    let log_slack = slack.log2();
    let log_v: Vec<f64> = log_grid.iter().map(|&u| v.eval_log2(u).log2()).collect();
    let rising: Vec<f64> = log_grid.iter().zip(&log_v).map(|(u, lv)| epsilon * u + lv).collect();
    let falling: Vec<f64> = log_grid.iter().zip(&log_v).map(|(u, lv)| -epsilon * u + lv).collect();
    let mut report = SvReport {
        epsilon,
        slack,
        grid_len: log_grid.len(),
        rising_onset: rising_onset(&rising, log_slack),
        falling_onset: falling_onset(&falling, log_slack),
        log_onset: None,
        passed: false,
    };
    if with_log {
        let logged: Vec<f64> = log_grid
            .iter()
            .zip(&log_v)
            .map(|(u, lv)| epsilon * (1.0 + u).log2() + lv)
            .collect();
        report.log_onset = Some(rising_onset(&logged, log_slack));
    }
    let max = report.max_onset();
    report.passed = report.rising_onset <= max
        && report.falling_onset <= max
        && report.log_onset.map_or(true, |o| o <= max);
    report
}

/// Numerical SV audit over a grid of `log₂ t` values.
pub fn check_sv_class(v: &SvFunction, epsilon: f64, log_grid: &[f64]) -> Result<SvReport> {
    check_sv_class_with_slack(v, epsilon, log_grid, C_SLACK)
}

pub fn check_sv_class_with_slack(
    v: &SvFunction,
    epsilon: f64,
    log_grid: &[f64],
    slack: f64,
) -> Result<SvReport> {
    validate_grid(epsilon, log_grid)?;
    Ok(audit(v, epsilon, log_grid, slack, false))
}

/// Numerical SVL audit: the SV checks plus `(log₂ 2t)^ε v(t)` almost non-decreasing.
pub fn check_svl_class(v: &SvFunction, epsilon: f64, log_grid: &[f64]) -> Result<SvReport> {
    check_svl_class_with_slack(v, epsilon, log_grid, C_SLACK)
}

pub fn check_svl_class_with_slack(
    v: &SvFunction,
    epsilon: f64,
    log_grid: &[f64],
    slack: f64,
) -> Result<SvReport> {
    validate_grid(epsilon, log_grid)?;
    Ok(audit(v, epsilon, log_grid, slack, true))
}

/// Whether `v` is non-decreasing up to `slack` from the first half of the grid on.
pub fn check_almost_increasing(v: &SvFunction, log_grid: &[f64], slack: f64) -> Result<bool> {
    validate_grid(1.0, log_grid)?;
    let log_v: Vec<f64> = log_grid.iter().map(|&u| v.eval_log2(u).log2()).collect();
    Ok(rising_onset(&log_v, slack.log2()) <= log_grid.len() / 2)
}

/// Exponents probed when certifying SVL membership "for every ε > 0".
pub const CERTIFY_EPSILONS: [f64; 4] = [0.1, 0.25, 0.5, 1.0];
/// Largest `log₂ t` of the certification grid.
pub const CERTIFY_LOG2_MAX: u32 = 64;

/// SVL audits over [`CERTIFY_EPSILONS`] on the dyadic grid up to `2^64`.
pub fn certify_svl(v: &SvFunction) -> Vec<SvReport> {
    let grid = dyadic_log_grid(CERTIFY_LOG2_MAX);
    CERTIFY_EPSILONS
        .iter()
        .map(|&e| audit(v, e, &grid, C_SLACK, true))
        .collect()
}

pub fn is_svl_certified(v: &SvFunction) -> bool {
    certify_svl(v).iter().all(|r| r.passed)
}
