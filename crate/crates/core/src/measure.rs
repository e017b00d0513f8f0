//! Empirical stationary measure, Lyapunov exponent and dimension bounds.

use serde::{Deserialize, Serialize};

use crate::bisect::bisect_until;
use crate::error::{domain, AmError, Result};
use crate::orbit::{run_orbit, HybridPoint, Kernel, Observer};
use crate::region::{contraction_margin, endpoint_exponents};
use crate::stats::{batch_of, EstimateWithError, BATCHES};
use crate::system::{AmSystem, ProbVector, Symbol};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureConfig {
    pub seed: u64,
    pub stream_id: u64,
    pub burn_in: u64,
    pub length: u64,
    pub bins: usize,
}

impl Default for MeasureConfig {
    fn default() -> Self {
        Self { seed: 0, stream_id: 0, burn_in: 10_000, length: 10_000_000, bins: 4096 }
    }
}

/// Counts collected over one batch of consecutive orbit samples.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BatchTally {
    pub samples: u64,
    pub left: u64,
    pub middle: u64,
    pub right: u64,
    /// Sum of `p₋ ln f₋′ + p₊ ln f₊′` over the batch.
    pub pointwise_sum: f64,
}

impl BatchTally {
    fn merge(&mut self, other: &Self) {
        self.samples += other.samples;
        self.left += other.left;
        self.middle += other.middle;
        self.right += other.right;
        self.pointwise_sum += other.pointwise_sum;
    }
}

/// Occupation counts of one or more orbits.
///
/// `bins` is a uniform histogram of the samples in `M`. Tail samples are
/// counted in `left_tail` / `right_tail` by depth, in cells of width
/// `1/TAIL_RESOLUTION`; [`EmpiricalMeasure::left_levels`] aggregates them by
/// the integer part of the depth (so `x ∈ [x₊a^(k+1), x₊a^k)` lands in level
/// `k` on the left).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalMeasure {
    pub bins: Vec<u64>,
    pub mass_left: u64,
    pub mass_m: u64,
    pub mass_right: u64,
    pub mass_l: u64,
    pub mass_r: u64,
    /// `None` when `L` and `R` overlap.
    pub mass_c: Option<u64>,
    pub total: u64,
    pub left_tail: Vec<u64>,
    pub right_tail: Vec<u64>,
    pub batches: Vec<BatchTally>,
}

impl EmpiricalMeasure {
    pub fn new(bins: usize, separated: bool) -> Self {
        Self {
            bins: vec![0; bins.max(1)],
            mass_left: 0,
            mass_m: 0,
            mass_right: 0,
            mass_l: 0,
            mass_r: 0,
            mass_c: separated.then_some(0),
            total: 0,
            left_tail: Vec::new(),
            right_tail: Vec::new(),
            batches: vec![BatchTally::default(); BATCHES],
        }
    }

    /// Adds one sample to the counts and to batch `batch`.
    pub fn record(&mut self, kernel: &Kernel, point: &HybridPoint, integrand: f64, batch: usize) {
        let tally = &mut self.batches[batch];
        tally.samples += 1;
        tally.pointwise_sum += integrand;
        self.total += 1;
        match point {
            HybridPoint::LeftTail(t) => {
                self.mass_left += 1;
                tally.left += 1;
                bump(&mut self.left_tail, t.depth(kernel.gamma()));
            }
            HybridPoint::RightTail(t) => {
                self.mass_right += 1;
                tally.right += 1;
                bump(&mut self.right_tail, t.depth(kernel.gamma()));
            }
            HybridPoint::Bulk { .. } => {
                self.mass_m += 1;
                tally.middle += 1;
                let n = self.bins.len();
                let k = ((kernel.value(point) * n as f64) as usize).min(n - 1);
                self.bins[k] += 1;
                let in_l = kernel.in_l(point);
                let in_r = kernel.in_r(point);
                self.mass_l += in_l as u64;
                self.mass_r += in_r as u64;
                if let Some(c) = self.mass_c.as_mut() {
                    *c += (!in_l && !in_r) as u64;
                }
            }
        }
    }

    /// Element-wise count addition.
    pub fn merge(&mut self, other: &Self) -> Result<()> {
        if self.bins.len() != other.bins.len() || self.mass_c.is_some() != other.mass_c.is_some() {
            return Err(domain("cannot merge measures with different layouts"));
        }
        add_counts(&mut self.bins, &other.bins);
        add_counts(&mut self.left_tail, &other.left_tail);
        add_counts(&mut self.right_tail, &other.right_tail);
        self.mass_left += other.mass_left;
        self.mass_m += other.mass_m;
        self.mass_right += other.mass_right;
        self.mass_l += other.mass_l;
        self.mass_r += other.mass_r;
        self.mass_c = self.mass_c.zip(other.mass_c).map(|(a, b)| a + b);
        self.total += other.total;
        for (a, b) in self.batches.iter_mut().zip(&other.batches) {
            a.merge(b);
        }
        Ok(())
    }

    fn fraction(&self, count: impl Fn(&BatchTally) -> u64) -> EstimateWithError {
        let batches: Vec<(f64, f64)> = self
            .batches
            .iter()
            .map(|b| (count(b) as f64, b.samples as f64))
            .collect();
        EstimateWithError::from_batches(&batches)
    }

    /// Left-tail counts per integer depth level.
    pub fn left_levels(&self) -> Vec<u64> {
        integer_levels(&self.left_tail)
    }

    pub fn right_levels(&self) -> Vec<u64> {
        integer_levels(&self.right_tail)
    }

    /// `μ̂(M)` with its batch-means error.
    pub fn mu_m(&self) -> EstimateWithError {
        self.fraction(|b| b.middle)
    }

    /// `μ̂([0, x₊))`.
    pub fn mu_left(&self) -> EstimateWithError {
        self.fraction(|b| b.left)
    }

    /// `μ̂((x₋, 1])`.
    pub fn mu_right(&self) -> EstimateWithError {
        self.fraction(|b| b.right)
    }
}

/// Tail histogram cells per unit of depth.
pub const TAIL_RESOLUTION: usize = 64;

fn integer_levels(cells: &[u64]) -> Vec<u64> {
    cells.chunks(TAIL_RESOLUTION).map(|c| c.iter().sum()).collect()
}

fn bump(levels: &mut Vec<u64>, depth: f64) {
    let k = (depth.max(0.0) * TAIL_RESOLUTION as f64) as usize;
    if k >= levels.len() {
        levels.resize(k + 1, 0);
    }
    levels[k] += 1;
}

fn add_counts(into: &mut Vec<u64>, from: &[u64]) {
    if into.len() < from.len() {
        into.resize(from.len(), 0);
    }
    for (a, b) in into.iter_mut().zip(from) {
        *a += b;
    }
}

/// Observer accumulating an [`EmpiricalMeasure`] over an orbit of `length`
/// retained steps.
pub struct MeasureObserver<'a> {
    measure: EmpiricalMeasure,
    probs: &'a ProbVector,
    length: u64,
}

impl<'a> MeasureObserver<'a> {
    pub fn new(sys: &AmSystem, probs: &'a ProbVector, bins: usize, length: u64) -> Self {
        Self { measure: EmpiricalMeasure::new(bins, sys.partition.separated()), probs, length }
    }

    pub fn finish(self) -> EmpiricalMeasure {
        self.measure
    }
}

impl Observer for MeasureObserver<'_> {
    fn observe(&mut self, kernel: &Kernel, t: u64, point: &HybridPoint, _next: Symbol) {
        let integrand = kernel.lyapunov_integrand(point, self.probs);
        let batch = batch_of(t, self.length, BATCHES);
        self.measure.record(kernel, point, integrand, batch);
    }
}

/// Orbit occupation counts, requiring positive endpoint exponents.
pub fn estimate_measure(
    sys: &AmSystem,
    probs: &ProbVector,
    config: &MeasureConfig,
) -> Result<EmpiricalMeasure> {
    if !endpoint_exponents(&sys.params, probs).positive {
        return Err(AmError::Precondition { failed: vec!["endpoint exponents positive"] });
    }
    if config.bins == 0 {
        return Err(domain("histogram needs at least one bin"));
    }
    let mut obs = MeasureObserver::new(sys, probs, config.bins, config.length);
    run_orbit(sys, probs, config.seed, config.stream_id, config.burn_in, config.length, &mut [&mut obs])?;
    Ok(obs.finish())
}

/// Position of a point: a tail depth, or a coordinate in `M`.
#[derive(Debug, Clone, Copy)]
enum Loc {
    Left(f64),
    Bulk(f64),
    Right(f64),
}

impl Loc {
    fn mirror(self) -> Self {
        match self {
            Loc::Left(r) => Loc::Right(r),
            Loc::Right(r) => Loc::Left(r),
            Loc::Bulk(x) => Loc::Bulk(1.0 - x),
        }
    }
}

/// Cumulative distribution of an [`EmpiricalMeasure`], linear within each
/// bulk bin and within each tail depth cell.
struct Cdf<'a> {
    sys: &'a AmSystem,
    measure: &'a EmpiricalMeasure,
    ln_x_plus: f64,
    bulk_prefix: Vec<u64>,
    left_suffix: Vec<u64>,
    right_suffix: Vec<u64>,
}

fn suffix_sums(levels: &[u64]) -> Vec<u64> {
    let mut out = vec![0; levels.len() + 1];
    for k in (0..levels.len()).rev() {
        out[k] = out[k + 1] + levels[k];
    }
    out
}

impl<'a> Cdf<'a> {
    fn new(sys: &'a AmSystem, measure: &'a EmpiricalMeasure) -> Self {
        let mut bulk_prefix = vec![0; measure.bins.len() + 1];
        for (k, c) in measure.bins.iter().enumerate() {
            bulk_prefix[k + 1] = bulk_prefix[k] + c;
        }
        Self {
            sys,
            measure,
            ln_x_plus: sys.x_plus().ln(),
            bulk_prefix,
            left_suffix: suffix_sums(&measure.left_tail),
            right_suffix: suffix_sums(&measure.right_tail),
        }
    }

    fn ln_a(&self) -> f64 {
        self.sys.params.ln_a
    }

    fn locate(&self, x: f64) -> Loc {
        if x < self.sys.x_plus() {
            Loc::Left((x.ln() - self.ln_x_plus) / self.ln_a())
        } else if x > self.sys.x_minus() {
            Loc::Right(((1.0 - x).ln() - self.ln_x_plus) / self.ln_a())
        } else {
            Loc::Bulk(x)
        }
    }

    fn preimage(&self, symbol: Symbol, loc: Loc) -> Loc {
        if symbol == Symbol::Plus {
            return self.preimage(Symbol::Minus, loc.mirror()).mirror();
        }
        let gamma = self.sys.gamma();
        let a = self.sys.a();
        match loc {
            Loc::Left(r) if r - 1.0 > 0.0 => Loc::Left(r - 1.0),
            Loc::Left(r) => Loc::Bulk((self.ln_x_plus + (r - 1.0) * self.ln_a()).exp()),
            Loc::Bulk(x) if x <= a * self.sys.x_minus() => Loc::Bulk(x / a),
            Loc::Bulk(x) => {
                let r = ((-x).ln_1p() - self.ln_x_plus) / self.ln_a() + gamma;
                if r > 0.0 {
                    Loc::Right(r)
                } else {
                    Loc::Bulk(self.sys.inverse(Symbol::Minus, x))
                }
            }
            Loc::Right(r) => Loc::Right(r + gamma),
        }
    }

    /// Samples at depth at least `r`, interpolated within the cell.
    fn deeper_than(levels: &[u64], suffix: &[u64], r: f64) -> f64 {
        if r <= 0.0 {
            return suffix[0] as f64;
        }
        let r = r * TAIL_RESOLUTION as f64;
        let k = r.floor();
        if !(k < levels.len() as f64) {
            return 0.0;
        }
        let k = k as usize;
        suffix[k + 1] as f64 + levels[k] as f64 * (k as f64 + 1.0 - r)
    }

    fn bulk_below(&self, x: f64) -> f64 {
        let n = self.measure.bins.len();
        let k = ((x * n as f64) as usize).min(n - 1);
        let lo = (k as f64 / n as f64).max(self.sys.x_plus());
        let hi = ((k + 1) as f64 / n as f64).min(self.sys.x_minus());
        let frac = if hi > lo { ((x - lo) / (hi - lo)).clamp(0.0, 1.0) } else { 1.0 };
        self.bulk_prefix[k] as f64 + self.measure.bins[k] as f64 * frac
    }

    /// Unnormalized `μ̂([0, x])`.
    fn at(&self, loc: Loc) -> f64 {
        let m = self.measure;
        match loc {
            Loc::Left(r) => Self::deeper_than(&m.left_tail, &self.left_suffix, r),
            Loc::Bulk(x) => m.mass_left as f64 + self.bulk_below(x),
            Loc::Right(r) => {
                m.total as f64 - Self::deeper_than(&m.right_tail, &self.right_suffix, r)
            }
        }
    }
}

/// Largest defect of the stationarity equation over the histogram bins:
/// `max_A |μ̂(A) − p₋μ̂(f₋⁻¹A) − p₊μ̂(f₊⁻¹A)|`.
pub fn stationarity_residual(measure: &EmpiricalMeasure, sys: &AmSystem, probs: &ProbVector) -> f64 {
    if measure.total == 0 {
        return 0.0;
    }
    let cdf = Cdf::new(sys, measure);
    let n = measure.bins.len();
    let edge = |k: usize| -> Loc {
        match k {
            0 => Loc::Left(f64::INFINITY),
            k if k == n => Loc::Right(f64::INFINITY),
            k => cdf.locate(k as f64 / n as f64),
        }
    };
    let mass = |lo: Loc, hi: Loc| cdf.at(hi) - cdf.at(lo);
    let mut worst: f64 = 0.0;
    let mut lo = edge(0);
    for k in 1..=n {
        let hi = edge(k);
        let direct = mass(lo, hi);
        let pulled: f64 = [Symbol::Minus, Symbol::Plus]
            .iter()
            .map(|&s| probs.prob(s) * mass(cdf.preimage(s, lo), cdf.preimage(s, hi)))
            .sum();
        worst = worst.max((direct - pulled).abs());
        lo = hi;
    }
    worst / measure.total as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LyapunovMethod {
    /// Orbit average of `p₋ ln f₋′ + p₊ ln f₊′`.
    Pointwise,
    /// `(μ(M) + (p₋ − γp₊)μ([0, x₊)) + (p₊ − γp₋)μ((x₋, 1]))·ln a`.
    IntervalForm,
}

/// Estimate of `χ(μ)` with a batch-means error.
pub fn lyapunov_exponent(
    measure: &EmpiricalMeasure,
    sys: &AmSystem,
    probs: &ProbVector,
    method: LyapunovMethod,
) -> EstimateWithError {
    let gamma = sys.gamma();
    let ln_a = sys.params.ln_a;
    let cl = probs.p_minus - gamma * probs.p_plus;
    let cr = probs.p_plus - gamma * probs.p_minus;
    let batches: Vec<(f64, f64)> = measure
        .batches
        .iter()
        .map(|b| {
            let num = match method {
                LyapunovMethod::Pointwise => b.pointwise_sum,
                LyapunovMethod::IntervalForm => {
                    (b.middle as f64 + cl * b.left as f64 + cr * b.right as f64) * ln_a
                }
            };
            (num, b.samples as f64)
        })
        .collect();
    EstimateWithError::from_batches(&batches)
}

/// `−H(p)/χ` with first-order error propagation.
pub fn dimension_bound_entropy_lyap(
    probs: &ProbVector,
    chi: &EstimateWithError,
) -> Result<EstimateWithError> {
    if !(chi.value + 3.0 * chi.std_error < 0.0) {
        return Err(AmError::Inconclusive { value: chi.value, std_error: chi.std_error });
    }
    let h = probs.entropy();
    Ok(EstimateWithError {
        value: -h / chi.value,
        std_error: h / (chi.value * chi.value) * chi.std_error,
        n: chi.n,
    })
}

/// Lower bound `(γ(1 − p) − p)/(γ − p(1 − p))` for `μ(M)`.
pub fn mu_m_lower_bound(p: f64, gamma: f64) -> Result<f64> {
    let num = gamma * (1.0 - p) - p;
    if !(num > 0.0) {
        return Err(domain(format!("gamma(1-p) = {} must exceed p = {p}", gamma * (1.0 - p))));
    }
    Ok(num / (gamma - p * (1.0 - p)))
}

/// Coefficient `c` in `χ(μ) ≤ c·ln a`.
pub fn lyapunov_upper_bound(p: f64, gamma: f64) -> Result<f64> {
    contraction_margin(p, gamma)
}

/// Root `η ∈ (1/2, 1)` of `η^(k+1) − 2η + 1`.
pub fn resonant_eta(k: u32) -> Result<f64> {
    if k < 2 {
        return Err(domain(format!("k = {k} must be at least 2")));
    }
    let n = k as i32 + 1;
    let mut f = |eta: f64| eta.powi(n) - 2.0 * eta + 1.0;
    // f decreases up to its minimum at (2/(k+1))^(1/k), where it is negative
    let hi = (2.0 / n as f64).powf(1.0 / k as f64);
    bisect_until(&mut f, 0.5, hi, |_, fm| fm.abs() < 1e-16)
}

/// Exact dimension `ln η / ln a` of `μ` at `p = 1/2`, `γ = k`.
pub fn resonant_dimension(k: u32, a: f64) -> Result<f64> {
    if !(a > 0.0 && a < 1.0) {
        return Err(domain(format!("a = {a} must lie in (0, 1)")));
    }
    Ok(resonant_eta(k)?.ln() / a.ln())
}
