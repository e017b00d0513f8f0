//! The stopping-time random walk describing excursions out of `M`.
//!
//! Starting from `x₊` with symbol `−` the orbit enters the left tail at depth
//! 1; afterwards each `−` adds 1 to the depth and each `+` subtracts `γ`.
//! With `X_j = +1` (probability `p₋`) or `−γ` (probability `p₊`), the return
//! time to `M` is `N₋ = min{n ≥ 2 : X₂ + … + X_n ≤ −1}`. The plus walk is
//! the mirror image with the roles of the symbols exchanged.

use serde::{Deserialize, Serialize};

use crate::error::{domain, AmError, Result};
use crate::measure::{EmpiricalMeasure, MeasureConfig, MeasureObserver};
use crate::orbit::{run_orbit, HybridPoint, Kernel, Observer, Region};
use crate::region::endpoint_exponents;
use crate::rng::{RngStream, SymbolStream};
use crate::stats::{batch_of, EstimateWithError, BATCHES};
use crate::system::{AmSystem, ProbVector, Symbol};

/// Censored fraction above which a summary is flagged.
pub const CENSOR_WARNING: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WalkSide {
    /// Excursions into `[0, x₊)`: `+1` on symbol `−`.
    Minus,
    /// Excursions into `(x₋, 1]`: `+1` on symbol `+`.
    Plus,
}

impl WalkSide {
    fn up_symbol(self) -> Symbol {
        match self {
            WalkSide::Minus => Symbol::Minus,
            WalkSide::Plus => Symbol::Plus,
        }
    }

    /// Probability of a `+1` step given `p₋`.
    fn up_prob(self, p_minus: f64) -> f64 {
        match self {
            WalkSide::Minus => p_minus,
            WalkSide::Plus => 1.0 - p_minus,
        }
    }
}

/// Mean increment `p_up − γ·p_down`.
pub fn drift(p_up: f64, gamma: f64) -> f64 {
    p_up - gamma * (1.0 - p_up)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WalkConfig {
    pub trials: u64,
    /// Largest stopping index simulated; walks still running there are censored.
    pub cap: u64,
}

impl Default for WalkConfig {
    fn default() -> Self {
        Self { trials: 40_000, cap: 3000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WalkOutcome {
    /// Stopping index, or `cap` when censored.
    pub n: u64,
    /// Partial sum `X₂ + … + X_n`.
    pub s: f64,
    pub censored: bool,
}

/// Runs one walk on the given symbols, consuming at most `cap − 1` of them.
pub fn sample_walk<I>(side: WalkSide, gamma: f64, symbols: &mut I, cap: u64) -> Result<WalkOutcome>
where
    I: Iterator<Item = Symbol>,
{
    if cap < 2 {
        return Err(domain(format!("cap = {cap} must be at least 2")));
    }
    let up_symbol = side.up_symbol();
    let (mut up, mut down) = (0u64, 0u64);
    for n in 2..=cap {
        let symbol = symbols.next().ok_or_else(|| domain("symbol stream ended"))?;
        if symbol == up_symbol {
            up += 1;
        } else {
            down += 1;
            let s = up as f64 - gamma * down as f64;
            if s <= -1.0 {
                return Ok(WalkOutcome { n, s, censored: false });
            }
        }
    }
    Ok(WalkOutcome { n: cap, s: up as f64 - gamma * down as f64, censored: true })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WalkSummary {
    pub side: WalkSide,
    pub p_minus: f64,
    pub gamma: f64,
    pub mean_n: EstimateWithError,
    pub mean_s: EstimateWithError,
    /// Mean of `S − drift·(N − 1)` per trial; its error is the propagated
    /// error of the Wald residual.
    pub wald_defect: EstimateWithError,
    pub censored_fraction: f64,
    /// Hoeffding bound on the censoring probability.
    pub censor_bound: f64,
    pub censor_warning: bool,
    pub trials: u64,
    pub cap: u64,
}

fn check_walk(p_minus: f64, gamma: f64, side: WalkSide) -> Result<f64> {
    if !(0.0..=1.0).contains(&p_minus) {
        return Err(domain(format!("p_minus = {p_minus} must lie in [0, 1]")));
    }
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(domain(format!("gamma = {gamma} must be positive and finite")));
    }
    let d = drift(side.up_prob(p_minus), gamma);
    if !(d < 0.0) {
        return Err(domain(format!("walk drift {d} must be negative")));
    }
    Ok(d)
}

/// Monte Carlo summary of `trials` walks drawn from stream `(seed, stream_id)`.
///
/// Means are over uncensored trials; errors use 100 consecutive batches.
pub fn walk_summary(
    p_minus: f64,
    gamma: f64,
    side: WalkSide,
    seed: u64,
    stream_id: u64,
    config: &WalkConfig,
) -> Result<WalkSummary> {
    let d = check_walk(p_minus, gamma, side)?;
    if config.trials == 0 {
        return Err(domain("at least one trial is required"));
    }
    let mut symbols = SymbolStream::new(RngStream::new(seed, stream_id), p_minus)?;
    // per batch: (sum n, sum s, sum defect, uncensored count)
    let mut batches = vec![(0.0, 0.0, 0.0, 0.0); BATCHES];
    let mut censored = 0u64;
    for i in 0..config.trials {
        let out = sample_walk(side, gamma, &mut symbols, config.cap)?;
        if out.censored {
            censored += 1;
            continue;
        }
        let b = &mut batches[batch_of(i, config.trials, BATCHES)];
        b.0 += out.n as f64;
        b.1 += out.s;
        b.2 += out.s - d * (out.n - 1) as f64;
        b.3 += 1.0;
    }
    let pick = |f: fn(&(f64, f64, f64, f64)) -> f64| {
        let pairs: Vec<(f64, f64)> = batches.iter().map(|b| (f(b), b.3)).collect();
        EstimateWithError::from_batches(&pairs)
    };
    let censored_fraction = censored as f64 / config.trials as f64;
    Ok(WalkSummary {
        side,
        p_minus,
        gamma,
        mean_n: pick(|b| b.0),
        mean_s: pick(|b| b.1),
        wald_defect: pick(|b| b.2),
        censored_fraction,
        censor_bound: hoeffding_tail(side.up_prob(p_minus), gamma, config.cap - 1),
        censor_warning: censored_fraction > CENSOR_WARNING,
        trials: config.trials,
        cap: config.cap,
    })
}

/// `|mean_s − drift·(mean_n − 1)|`; compare against `wald_defect.std_error`.
pub fn wald_residual(summary: &WalkSummary) -> f64 {
    let d = drift(summary.side.up_prob(summary.p_minus), summary.gamma);
    (summary.mean_s.value - d * (summary.mean_n.value - 1.0)).abs()
}

/// Hoeffding bound on `P(N > n + 1)` for a walk with up-probability `p_up`:
/// `exp(−2(1 + n·drift)²/(n(γ + 1)²))`, or 1 when `1 + n·drift ≥ 0`.
pub fn hoeffding_tail(p_up: f64, gamma: f64, n: u64) -> f64 {
    let t = -(1.0 + n as f64 * drift(p_up, gamma));
    if !(t > 0.0) || n == 0 {
        return 1.0;
    }
    (-2.0 * t * t / (n as f64 * (gamma + 1.0) * (gamma + 1.0))).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExactWalk {
    pub e_n: f64,
    pub e_s: f64,
    /// Hoeffding bound on the probability of not stopping by `depth`.
    pub truncation_bound: f64,
    /// Probability mass still running at `depth`, computed exactly.
    pub unstopped_mass: f64,
}

/// `E N₋` and `E S_{N₋}` by dynamic programming over the number of down
/// steps, counting stops with `N₋ ≤ depth`.
pub fn exact_walk_stats(p_minus: f64, gamma: f64, depth: u64) -> Result<ExactWalk> {
    check_walk(p_minus, gamma, WalkSide::Minus)?;
    if depth < 2 {
        return Err(domain(format!("depth = {depth} must be at least 2")));
    }
    let p_up = p_minus;
    let p_down = 1.0 - p_minus;
    // alive[v] = P(running after j draws with v of them down)
    let mut alive = vec![1.0];
    let (mut e_n, mut e_s) = (0.0, 0.0);
    for j in 0..depth - 1 {
        let n = j + 2;
        let mut next = vec![0.0; alive.len() + 1];
        for (v, &mass) in alive.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            next[v] += mass * p_up;
            let u = j - v as u64;
            let s = u as f64 - gamma * (v + 1) as f64;
            let down = mass * p_down;
            if s <= -1.0 {
                e_n += down * n as f64;
                e_s += down * s;
            } else {
                next[v + 1] += down;
            }
        }
        alive = next;
    }
    Ok(ExactWalk {
        e_n,
        e_s,
        truncation_bound: hoeffding_tail(p_up, gamma, depth - 1),
        unstopped_mass: alive.iter().sum(),
    })
}

/// Evenly spaced interior points `lo + (hi − lo)(i + 1)/(n + 1)`.
pub fn esn_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo + (hi - lo) * (i + 1) as f64 / (n + 1) as f64)
        .collect()
}

/// Minus-walk summaries over a grid of `γ`; cell `i` uses stream `i`.
pub fn esn_sweep(
    p_minus: f64,
    gammas: &[f64],
    seed: u64,
    config: &WalkConfig,
) -> Result<Vec<WalkSummary>> {
    let cell = |(i, &gamma): (usize, &f64)| {
        walk_summary(p_minus, gamma, WalkSide::Minus, seed, i as u64, config)
    };
    #[cfg(feature = "parallel")]
    let out = {
        use rayon::prelude::*;
        gammas.par_iter().enumerate().map(cell).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let out = gammas.iter().enumerate().map(cell).collect();
    out
}

/// Lower bound `(γ − 1)/(γ − 1 − E S)` for `μ(M)` at `p = 1/2`.
pub fn mu_m_walk_bound(e_s: f64, gamma: f64) -> Result<f64> {
    if !(e_s < 0.0) || !(gamma > 1.0) {
        return Err(domain(format!("need e_s < 0 and gamma > 1; got e_s = {e_s}, gamma = {gamma}")));
    }
    Ok((gamma - 1.0) / (gamma - 1.0 - e_s))
}

/// How the first step from a point of `M` left it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ExitSide {
    Stayed,
    LeftViaL,
    RightViaR,
}

/// Exit predicted from the partition: `−` on `L` or `+` on `R` leaves `M`.
pub fn predicted_exit(kernel: &Kernel, point: &HybridPoint, symbol: Symbol) -> ExitSide {
    match symbol {
        Symbol::Minus if kernel.in_l(point) => ExitSide::LeftViaL,
        Symbol::Plus if kernel.in_r(point) => ExitSide::RightViaR,
        _ => ExitSide::Stayed,
    }
}

fn observed_exit(next: &HybridPoint) -> ExitSide {
    match next.region() {
        Region::Bulk => ExitSide::Stayed,
        Region::LeftTail => ExitSide::LeftViaL,
        Region::RightTail => ExitSide::RightViaR,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReturnOutcome {
    /// First `n ≥ 1` with `x_n ∈ M`, or `cap` when censored.
    pub n_return: u64,
    pub exit_side: ExitSide,
    pub censored: bool,
}

/// First return time to `M` of the orbit of `start ∈ M` under the full maps.
pub fn sample_return_time<I>(
    sys: &AmSystem,
    symbols: &mut I,
    start: f64,
    cap: u64,
) -> Result<ReturnOutcome>
where
    I: Iterator<Item = Symbol>,
{
    if !sys.partition.in_m(start) {
        return Err(domain(format!("start {start} is outside M")));
    }
    if cap == 0 {
        return Err(domain("cap must be at least 1"));
    }
    let kernel = Kernel::new(sys);
    let mut point = kernel.point_at(start);
    let mut exit_side = ExitSide::Stayed;
    for n in 1..=cap {
        let symbol = symbols.next().ok_or_else(|| domain("symbol stream ended"))?;
        point = kernel.step(point, symbol);
        if n == 1 {
            exit_side = observed_exit(&point);
        }
        if point.region() == Region::Bulk {
            return Ok(ReturnOutcome { n_return: n, exit_side, censored: false });
        }
    }
    Ok(ReturnOutcome { n_return: cap, exit_side, censored: true })
}

/// Return gaps between consecutive visits to `M` along an orbit, and a
/// check of every one-step exit against [`predicted_exit`].
#[derive(Debug, Clone, Default)]
pub struct KacObserver {
    last_visit: Option<u64>,
    first_visit: Option<u64>,
    pub visits: u64,
    pub gap_sum: u64,
    pub gaps: u64,
    pub exits: u64,
    pub exit_mismatches: u64,
}

impl Observer for KacObserver {
    fn observe(&mut self, kernel: &Kernel, t: u64, point: &HybridPoint, next: Symbol) {
        if point.region() != Region::Bulk {
            return;
        }
        self.visits += 1;
        if let Some(prev) = self.last_visit {
            self.gap_sum += t - prev;
            self.gaps += 1;
        }
        self.first_visit.get_or_insert(t);
        self.last_visit = Some(t);
        let actual = observed_exit(&kernel.step(*point, next));
        if actual != ExitSide::Stayed {
            self.exits += 1;
        }
        if actual != predicted_exit(kernel, point, next) {
            self.exit_mismatches += 1;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KacReport {
    /// Mean return time over completed returns.
    pub mean_return: f64,
    /// Fraction of time steps spent in `M`.
    pub mu_m: f64,
    /// `|mean_return·mu_m − 1|`.
    pub residual: f64,
    pub visits: u64,
    pub exits: u64,
    pub exit_mismatches: u64,
    pub length: u64,
}

impl KacObserver {
    pub fn report(&self, length: u64) -> KacReport {
        let mean_return = self.gap_sum as f64 / self.gaps as f64;
        let mu_m = self.visits as f64 / length as f64;
        KacReport {
            mean_return,
            mu_m,
            residual: (mean_return * mu_m - 1.0).abs(),
            visits: self.visits,
            exits: self.exits,
            exit_mismatches: self.exit_mismatches,
            length,
        }
    }
}

/// One orbit feeding both the Kac observer and an [`EmpiricalMeasure`].
pub fn kac_run(
    sys: &AmSystem,
    probs: &ProbVector,
    config: &MeasureConfig,
) -> Result<(KacReport, EmpiricalMeasure)> {
    if !endpoint_exponents(&sys.params, probs).positive {
        return Err(AmError::Precondition { failed: vec!["endpoint exponents positive"] });
    }
    let mut kac = KacObserver::default();
    let mut measure = MeasureObserver::new(sys, probs, config.bins.max(1), config.length);
    run_orbit(
        sys,
        probs,
        config.seed,
        config.stream_id,
        config.burn_in,
        config.length,
        &mut [&mut kac, &mut measure],
    )?;
    Ok((kac.report(config.length), measure.finish()))
}

/// `|mean(n_M)·μ̂(M) − 1|` over one orbit of `length` steps.
pub fn kac_residual(sys: &AmSystem, probs: &ProbVector, seed: u64, length: u64) -> Result<f64> {
    let config = MeasureConfig { seed, length, bins: 1, ..MeasureConfig::default() };
    Ok(kac_run(sys, probs, &config)?.0.residual)
}
