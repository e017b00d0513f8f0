//! Parameter inequalities that force `dim_H μ < 1`, and their rasterization
//! over the `(p, γ)` plane.
//!
//! With `p = max(p₋, p₊)` the conditions are
//!
//! * endpoint exponents positive: `γ > p/(1 − p)`,
//! * contraction: `(1 + γ)p²(p + γ)/(γ − p(1 − p)) < 1`,
//! * `L`, `R` separated: `γ > 1 − ln(a² − 2a + 2)/ln a`,
//! * dimension: `p ln p + (1 − p) ln(1 − p) > (1 − contraction lhs)·ln a`.
//!
//! The first two only involve `(p, γ)`; the last two hold for all `a` below
//! thresholds [`a_max_lr`] and [`a_max_dim`].

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::bisect::{bisect, bisect_until};
use crate::error::{domain, AmError, Result};
use crate::system::{entropy, lr_gamma_threshold, AmParams, ProbVector};

pub const DEFAULT_TOL: f64 = 1e-10;

/// Lyapunov exponents of the linearizations at the endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentPair {
    pub lambda0: f64,
    pub lambda1: f64,
    /// `γ > max(p₋/p₊, p₊/p₋)`.
    pub positive: bool,
}

pub fn endpoint_exponents(params: &AmParams, probs: &ProbVector) -> ExponentPair {
    let AmParams { gamma, ln_a, .. } = *params;
    let ProbVector { p_minus, p_plus } = *probs;
    ExponentPair {
        lambda0: (p_minus - gamma * p_plus) * ln_a,
        lambda1: (p_plus - gamma * p_minus) * ln_a,
        positive: gamma > (p_minus / p_plus).max(p_plus / p_minus),
    }
}

/// `(1 + γ)p²(p + γ)/(γ − p(1 − p))`.
fn contraction_lhs(p: f64, gamma: f64) -> Result<f64> {
    let denom = gamma - p * (1.0 - p);
    if !(denom > 0.0) {
        return Err(domain(format!("gamma - p(1-p) = {denom} must be positive")));
    }
    Ok((1.0 + gamma) * p * p * (p + gamma) / denom)
}

/// Whether the contraction inequality holds, and `lhs − 1`.
pub fn contraction_condition(p: f64, gamma: f64) -> Result<(bool, f64)> {
    let lhs = contraction_lhs(p, gamma)?;
    Ok((lhs < 1.0, lhs - 1.0))
}

/// Coefficient `1 − lhs` multiplying `ln a` in the Lyapunov upper bound.
pub(crate) fn contraction_margin(p: f64, gamma: f64) -> Result<f64> {
    Ok(1.0 - contraction_lhs(p, gamma)?)
}

/// Numerator minus denominator of the contraction inequality, a convex
/// quadratic in `γ`: `p²γ² + (p²(1 + p) − 1)γ + p³ − p² + p`.
fn contraction_gap(p: f64, gamma: f64) -> f64 {
    (1.0 + gamma) * p * p * (p + gamma) - gamma + p * (1.0 - p)
}

/// Open interval of exponents `γ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaInterval {
    pub lo: f64,
    pub hi: f64,
}

impl GammaInterval {
    pub fn contains(&self, gamma: f64) -> bool {
        gamma > self.lo && gamma < self.hi
    }
}

/// The set of `γ ∈ (p/(1 − p), 3/2]` satisfying both the positivity and the
/// contraction inequality, or `None` when empty.
pub fn gamma_interval(p: f64, tol: f64) -> Result<Option<GammaInterval>> {
    if !(0.5..1.0).contains(&p) {
        return Err(domain(format!("p = {p} must lie in [1/2, 1)")));
    }
    let lo = p / (1.0 - p);
    let hi = 1.5;
    if lo >= hi {
        return Ok(None);
    }
    let g = |gamma: f64| contraction_gap(p, gamma);
    // g is convex: bisect its (linear) derivative for the minimizer on [lo, hi]
    let slope = |gamma: f64| 2.0 * p * p * gamma + p * p * (1.0 + p) - 1.0;
    let vertex = if slope(lo) >= 0.0 {
        lo
    } else if slope(hi) <= 0.0 {
        hi
    } else {
        bisect(slope, lo, hi, tol.min(1e-15))?
    };
    if !(g(vertex) < 0.0) {
        return Ok(None);
    }
    let left = if g(lo) < 0.0 { lo } else { bisect(g, lo, vertex, tol)? };
    let right = if g(hi) < 0.0 { hi } else { bisect(g, vertex, hi, tol)? };
    Ok(Some(GammaInterval { lo: left, hi: right }))
}

/// `p⁶ − 2p⁵ + 5p⁴ − 6p³ − 2p² + 1`, the discriminant of the contraction gap.
pub fn critical_polynomial(p: f64) -> f64 {
    ((((((p - 2.0) * p + 5.0) * p - 6.0) * p - 2.0) * p) * p) + 1.0
}

/// Largest `p` for which some `γ` passes the positivity and contraction
/// inequalities: the smaller real root of [`critical_polynomial`].
///
/// Bisection runs until the bracket is below `tol` and the polynomial
/// residual is below 1e−12.
pub fn critical_p(tol: f64) -> Result<f64> {
    bisect_until(&mut critical_polynomial, 0.5, 0.6, |width, f| {
        width <= tol && f.abs() < 1e-12
    })
}

/// Supremum of `a` satisfying the dimension inequality at `(p, γ)`:
/// `exp(−H(p)/(1 − lhs))`.
pub fn a_max_dim(p: f64, gamma: f64) -> Result<f64> {
    Ok(ln_a_max_dim(p, gamma)?.exp())
}

/// `ln` of [`a_max_dim`]; finite even where `a_max_dim` underflows.
pub fn ln_a_max_dim(p: f64, gamma: f64) -> Result<f64> {
    let margin = contraction_margin(p, gamma)?;
    if !(margin > 0.0) {
        return Err(domain(format!(
            "contraction margin {margin} must be positive at p = {p}, gamma = {gamma}"
        )));
    }
    Ok(-entropy(p) / margin)
}

/// The `a` maximizing [`lr_gamma_threshold`] on `(0, 1)`; the threshold
/// increases on `(0, peak)` and decreases after it.
fn lr_peak() -> (f64, f64) {
    static PEAK: OnceLock<(f64, f64)> = OnceLock::new();
    *PEAK.get_or_init(|| {
        let (mut lo, mut hi) = (1e-3, 0.999);
        // golden-section search on a unimodal function
        let r = (5f64.sqrt() - 1.0) / 2.0;
        while hi - lo > 1e-12 {
            let m1 = hi - r * (hi - lo);
            let m2 = lo + r * (hi - lo);
            if lr_gamma_threshold(m1) < lr_gamma_threshold(m2) {
                lo = m1;
            } else {
                hi = m2;
            }
        }
        let a = 0.5 * (lo + hi);
        (a, lr_gamma_threshold(a))
    })
}

/// Supremum of the interval `(0, a*)` on which `L` and `R` are separated.
///
/// Returns 1 when `γ` exceeds the separation threshold for every `a`.
/// The result is at least `2^(1/(1 − γ))`.
pub fn a_max_lr(gamma: f64, tol: f64) -> Result<f64> {
    if !(gamma > 1.0) {
        return Err(domain(format!("gamma = {gamma} must be > 1")));
    }
    let (peak_a, peak) = lr_peak();
    if gamma > peak {
        return Ok(1.0);
    }
    // bisect in ln a: the sufficient bound 2^(1/(1−γ)) brackets from below
    let lo = -std::f64::consts::LN_2 / (gamma - 1.0);
    let hi = peak_a.ln();
    if lo >= hi {
        return Ok(peak_a);
    }
    let f = |u: f64| gamma - lr_gamma_threshold(u.exp());
    let u = bisect_until(&mut { f }, lo, hi, |width, _| width * hi.exp() <= tol)?;
    Ok(u.exp())
}

/// Closed-form dimension bound
/// `(p ln p + (1 − p) ln(1 − p)) / ((1 − lhs)·ln a)` without checks.
pub fn closed_form_ratio(p: f64, gamma: f64, a: f64) -> Result<f64> {
    let margin = contraction_margin(p, gamma)?;
    Ok(-entropy(p) / (margin * a.ln()))
}

/// The `p = 1/2` specialization `(1 − 4γ) ln 2 / ((γ − 1)(3/2 − γ) ln a)`.
pub fn closed_form_ratio_symmetric(gamma: f64, a: f64) -> f64 {
    (1.0 - 4.0 * gamma) * std::f64::consts::LN_2 / ((gamma - 1.0) * (1.5 - gamma) * a.ln())
}

/// Dimension bound for `μ`, returned only when every inequality holds
/// (so the value is below 1).
pub fn dimension_bound_closed_form(p: f64, gamma: f64, a: f64) -> Result<f64> {
    if !(0.5..1.0).contains(&p) || !(a > 0.0 && a < 1.0) || !(gamma > 1.0) {
        return Err(domain(format!("need p in [1/2, 1), a in (0, 1), gamma > 1; got p = {p}, a = {a}, gamma = {gamma}")));
    }
    let mut failed = Vec::new();
    if !(gamma > p / (1.0 - p)) {
        failed.push("endpoint exponents positive");
    }
    let (contracts, _) = contraction_condition(p, gamma)?;
    if !contracts {
        failed.push("contraction inequality");
    }
    if !(gamma > lr_gamma_threshold(a)) {
        failed.push("L/R separation");
    }
    let bound = if contracts { Some(closed_form_ratio(p, gamma, a)?) } else { None };
    if !matches!(bound, Some(b) if b < 1.0) {
        failed.push("dimension inequality (a < a_max_dim)");
    }
    match (failed.is_empty(), bound) {
        (true, Some(b)) => Ok(b),
        _ => Err(AmError::Precondition { failed }),
    }
}

/// Verdict for one `(p, γ)` cell, optionally at a specific `a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionVerdict {
    pub p: f64,
    pub gamma: f64,
    pub exponents_positive: bool,
    pub contraction_ok: bool,
    /// Without a specific `a`: separation holds for all small `a` (γ > 1).
    pub lr_ok: bool,
    /// Without a specific `a`: `dim_H μ < 1` for all sufficiently small `a`.
    pub dim_lt_one: bool,
    pub a_max_dim: Option<f64>,
    /// `ln a_max_dim`, kept separately since `a_max_dim` underflows near
    /// the ends of the admissible `γ` interval.
    pub ln_a_max_dim: Option<f64>,
    pub a_max_lr: Option<f64>,
    pub gamma_interval: Option<GammaInterval>,
}

impl RegionVerdict {
    /// `min(a_max_dim, a_max_lr)` when both exist.
    pub fn a_max(&self) -> Option<f64> {
        Some(self.a_max_dim?.min(self.a_max_lr?))
    }
}

pub fn verdict(p: f64, gamma: f64, a: Option<f64>, tol: f64) -> Result<RegionVerdict> {
    if !(0.5..1.0).contains(&p) {
        return Err(domain(format!("p = {p} must lie in [1/2, 1)")));
    }
    if !(gamma > 1.0) || !gamma.is_finite() {
        return Err(domain(format!("gamma = {gamma} must be finite and > 1")));
    }
    if let Some(a) = a {
        if !(a > 0.0 && a < 1.0) {
            return Err(domain(format!("a = {a} must lie in (0, 1)")));
        }
    }
    let exponents_positive = gamma > p / (1.0 - p);
    let (contraction_ok, _) = contraction_condition(p, gamma)?;
    let ln_dim = if contraction_ok { ln_a_max_dim(p, gamma).ok() } else { None };
    let a_max_lr = a_max_lr(gamma, tol).ok();
    let lr_ok = match a {
        Some(a) => gamma > lr_gamma_threshold(a),
        None => true,
    };
    let admissible_a = match (a, ln_dim) {
        (Some(a), Some(ln_cap)) => a.ln() < ln_cap,
        (None, Some(_)) => true,
        _ => false,
    };
    let dim_lt_one = exponents_positive && contraction_ok && lr_ok && admissible_a;
    Ok(RegionVerdict {
        p,
        gamma,
        exponents_positive,
        contraction_ok,
        lr_ok,
        dim_lt_one,
        a_max_dim: ln_dim.map(f64::exp),
        ln_a_max_dim: ln_dim,
        a_max_lr,
        gamma_interval: gamma_interval(p, tol)?,
    })
}

/// Row-major grid of verdicts: row `j` is `gammas[j]`, column `i` is `ps[i]`.
#[derive(Debug, Clone, Serialize)]
pub struct RegionGrid {
    pub ps: Vec<f64>,
    pub gammas: Vec<f64>,
    pub cells: Vec<std::result::Result<RegionVerdict, AmError>>,
}

impl RegionGrid {
    pub fn cell(&self, i: usize, j: usize) -> &std::result::Result<RegionVerdict, AmError> {
        &self.cells[j * self.ps.len() + i]
    }

    pub fn admissible_count(&self) -> usize {
        self.cells
            .iter()
            .filter(|c| matches!(c, Ok(v) if v.dim_lt_one))
            .count()
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Evaluates [`verdict`] (without a specific `a`) on an `nx × ny` grid with
/// inclusive endpoints. Invalid cells are kept as errors.
pub fn rasterize_region(
    p_range: (f64, f64),
    gamma_range: (f64, f64),
    grid: (usize, usize),
) -> Result<RegionGrid> {
    let (nx, ny) = grid;
    if nx < 2 || ny < 2 {
        return Err(domain(format!("grid {nx}x{ny} must be at least 2x2")));
    }
    let ps = linspace(p_range.0, p_range.1, nx);
    let gammas = linspace(gamma_range.0, gamma_range.1, ny);
    // J_p only depends on the column; compute it once per p
    let intervals: Vec<Result<Option<GammaInterval>>> =
        ps.iter().map(|&p| gamma_interval(p, DEFAULT_TOL)).collect();
    let eval = |idx: usize| {
        let (i, j) = (idx % nx, idx / nx);
        let (p, gamma) = (ps[i], gammas[j]);
        let interval = intervals[i].clone()?;
        cell_verdict(p, gamma, interval)
    };
    #[cfg(feature = "parallel")]
    let cells = {
        use rayon::prelude::*;
        (0..nx * ny).into_par_iter().map(eval).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let cells = (0..nx * ny).map(eval).collect();
    Ok(RegionGrid { ps, gammas, cells })
}

fn cell_verdict(p: f64, gamma: f64, interval: Option<GammaInterval>) -> Result<RegionVerdict> {
    if !(gamma > 1.0) || !gamma.is_finite() {
        return Err(domain(format!("gamma = {gamma} must be finite and > 1")));
    }
    let exponents_positive = gamma > p / (1.0 - p);
    let (contraction_ok, _) = contraction_condition(p, gamma)?;
    let ln_dim = if contraction_ok { ln_a_max_dim(p, gamma).ok() } else { None };
    let a_max_lr = a_max_lr(gamma, DEFAULT_TOL).ok();
    Ok(RegionVerdict {
        p,
        gamma,
        exponents_positive,
        contraction_ok,
        lr_ok: true,
        dim_lt_one: exponents_positive && contraction_ok && ln_dim.is_some() && a_max_lr.is_some(),
        a_max_dim: ln_dim.map(f64::exp),
        ln_a_max_dim: ln_dim,
        a_max_lr,
        gamma_interval: interval,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exponents_symmetric() {
        let params = AmParams::new(0.1, 1.2).unwrap();
        let e = endpoint_exponents(&params, &ProbVector::symmetric());
        // (0.5 − 0.6)·ln 0.1
        assert!((e.lambda0 - 0.230_258_509_299_404_6).abs() < 1e-14);
        assert_eq!(e.lambda0, e.lambda1);
        assert!(e.positive);
    }

    #[test]
    fn exponents_boundary_not_positive() {
        let probs = ProbVector::new(0.4).unwrap();
        let gamma = probs.p_minus / probs.p_plus;
        let gamma = gamma.max(1.0 / gamma);
        let params = AmParams::new(0.2, gamma).unwrap();
        assert!(!endpoint_exponents(&params, &probs).positive);
    }

    #[test]
    fn contraction_examples() {
        let (ok, res) = contraction_condition(0.5, 1.2).unwrap();
        // 2.2·0.25·1.7/0.95
        assert!(ok);
        assert!((res + 1.0 - 0.984_210_526_315_789_5).abs() < 1e-15);
        let (ok, res) = contraction_condition(0.5, 1.5).unwrap();
        assert!(!ok);
        assert_eq!(res, 0.0);
        assert!(contraction_condition(0.5, 0.2).is_err());
    }

    #[test]
    fn symmetric_gamma_interval() {
        let j = gamma_interval(0.5, 1e-9).unwrap().unwrap();
        assert!((j.lo - 1.0).abs() < 1e-9);
        assert!((j.hi - 1.5).abs() < 1e-9);
    }

    #[test]
    fn gamma_interval_empty_above_critical() {
        assert!(gamma_interval(0.52, 1e-10).unwrap().is_none());
        let p0 = critical_p(1e-12).unwrap();
        assert!(gamma_interval(p0 + 0.01, 1e-10).unwrap().is_none());
        assert!(gamma_interval(1.0, 1e-10).is_err());
        assert!(gamma_interval(0.4, 1e-10).is_err());
    }

    // independent check: scan g on a dense grid instead of bisecting
    fn brute_has_admissible_gamma(p: f64) -> bool {
        let lo = p / (1.0 - p);
        (1..20_000).any(|k| {
            let gamma = lo + (1.5 - lo) * k as f64 / 20_000.0;
            contraction_gap(p, gamma) < 0.0
        })
    }

    #[test]
    fn gamma_interval_matches_grid_scan() {
        for k in 0..40 {
            let p = 0.5 + 0.0001 * k as f64;
            let j = gamma_interval(p, 1e-12).unwrap();
            assert_eq!(j.is_some(), brute_has_admissible_gamma(p), "p = {p}");
        }
    }

    #[test]
    fn critical_probability() {
        let p0 = critical_p(1e-8).unwrap();
        assert!((p0 - 0.503_507).abs() < 1e-5, "{p0}");
        assert!(critical_polynomial(p0).abs() < 1e-12);
        assert!(p0 > 0.5 && p0 < 0.51);
        assert!(critical_polynomial(0.5) > 0.0 && critical_polynomial(0.51) < 0.0);
    }

    #[test]
    fn critical_probability_brackets_interval() {
        let p0 = critical_p(1e-12).unwrap();
        for dp in [1e-6, 1e-4, 1e-3] {
            assert!(gamma_interval(p0 + dp, 1e-12).unwrap().is_none(), "{dp}");
            assert!(p0 - dp < 0.5 || gamma_interval(p0 - dp, 1e-12).unwrap().is_some(), "{dp}");
        }
    }

    #[test]
    fn a_max_dim_symmetric_example() {
        // exponent (1 − 5)/(0.25·0.25) = −64
        let a = a_max_dim(0.5, 1.25).unwrap();
        assert!((a - 2f64.powi(-64)).abs() < 1e-12);
        assert!(((a - 2f64.powi(-64)) / a).abs() < 1e-13);
        assert!(a_max_dim(0.5, 1.5).is_err());
    }

    #[test]
    fn a_max_dim_vanishes_at_interval_ends() {
        assert!(a_max_dim(0.5, 1.0 + 1e-4).unwrap() < 1e-300);
        assert!(a_max_dim(0.5, 1.5 - 1e-4).unwrap() < 1e-300);
    }

    #[test]
    fn a_max_dim_below_lr_sufficient_bound() {
        for k in 1..100 {
            let g = 1.0 + 0.5 * k as f64 / 100.0;
            assert!(a_max_dim(0.5, g).unwrap() < 2f64.powf(1.0 / (1.0 - g)));
        }
    }

    #[test]
    fn a_max_lr_inverts_threshold() {
        let g = lr_gamma_threshold(0.1);
        let a = a_max_lr(g, 1e-12).unwrap();
        assert!((a - 0.1).abs() < 1e-9, "{a}");
        assert!(a_max_lr(2.0, 1e-10).unwrap() >= 0.5);
        assert!(a_max_lr(1.0, 1e-10).is_err());
    }

    #[test]
    fn a_max_lr_monotone() {
        let mut prev = 0.0;
        for k in 1..200 {
            let g = 1.0 + k as f64 * 0.002;
            let a = a_max_lr(g, 1e-12).unwrap();
            assert!(a >= prev, "gamma {g}");
            prev = a;
        }
    }

    #[test]
    fn closed_form_examples() {
        let b = dimension_bound_closed_form(0.5, 1.25, 2f64.powi(-128)).unwrap();
        assert!((b - 0.5).abs() < 1e-12, "{b}");
        match dimension_bound_closed_form(0.5, 1.25, 2f64.powi(-64)) {
            Err(AmError::Precondition { failed }) => {
                assert_eq!(failed, vec!["dimension inequality (a < a_max_dim)"])
            }
            other => panic!("{other:?}"),
        }
        match dimension_bound_closed_form(0.5, 1.6, 1e-30) {
            Err(AmError::Precondition { failed }) => {
                assert!(failed.contains(&"contraction inequality"))
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn region_grid_cells() {
        let grid = rasterize_region((0.5, 0.51), (1.0, 1.5), (3, 3)).unwrap();
        assert_eq!(grid.cells.len(), 9);
        // γ = 1 row is invalid
        assert!(grid.cell(0, 0).is_err());
        let mid = grid.cell(0, 1).as_ref().unwrap();
        assert_eq!(mid.gamma, 1.25);
        assert!(mid.exponents_positive && mid.contraction_ok && mid.lr_ok && mid.dim_lt_one);
        assert!((mid.a_max_dim.unwrap() - 2f64.powi(-64)).abs() < 1e-12);
        assert!(rasterize_region((0.5, 0.51), (1.0, 1.5), (1, 3)).is_err());
    }

    #[test]
    fn region_pinches_near_critical_p() {
        let p0 = critical_p(1e-12).unwrap();
        let grid = rasterize_region((0.5, 0.51), (1.0, 1.6), (101, 121)).unwrap();
        let mut widest = 0;
        let mut last_col = 0;
        for i in 0..grid.ps.len() {
            let n = (0..grid.gammas.len())
                .filter(|&j| matches!(grid.cell(i, j), Ok(v) if v.dim_lt_one))
                .count();
            if i == 0 {
                widest = n;
            }
            if n > 0 {
                last_col = i;
            }
        }
        assert!(widest > 90);
        assert!(grid.ps[last_col] <= p0 && grid.ps[last_col + 1] > p0 - 1e-4);
    }

    proptest! {
        #[test]
        fn closed_form_general_matches_symmetric(g in 1.001f64..1.499, a in 1e-6f64..0.999) {
            let general = closed_form_ratio(0.5, g, a).unwrap();
            let special = closed_form_ratio_symmetric(g, a);
            prop_assert!((general - special).abs() <= 1e-12 * special.abs().max(1.0));
        }

        #[test]
        fn a_max_lr_above_sufficient_bound(g in 1.01f64..3.0) {
            prop_assert!(a_max_lr(g, 1e-12).unwrap() >= 2f64.powf(1.0 / (1.0 - g)) * (1.0 - 1e-9));
        }

        #[test]
        fn verdict_implications(p in 0.5f64..0.6, g in 1.0001f64..2.0, a in proptest::option::of(1e-30f64..0.9)) {
            let v = verdict(p, g, a, 1e-10).unwrap();
            if v.dim_lt_one {
                prop_assert!(v.exponents_positive && v.contraction_ok && v.lr_ok);
            }
            if let (Some(a), true) = (a, v.dim_lt_one) {
                let b = dimension_bound_closed_form(p, g, a).unwrap();
                prop_assert!(b < 1.0);
            }
        }
    }
}
