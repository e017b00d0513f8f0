//! Symmetric Alsedà–Misiurewicz (AM) random interval systems.
//!
//! Two piecewise-affine increasing homeomorphisms `f₋`, `f₊` of `[0, 1]`,
//! chosen i.i.d. with probabilities `(p₋, p₊)`, generate a random dynamical
//! system with a unique non-atomic stationary measure `μ`. This crate
//!
//! * evaluates the maps and their partition of `[0, 1]` ([`system`]),
//! * decides the inequalities that force `dim_H μ < 1` ([`region`]),
//! * iterates the step skew product with an underflow-safe state ([`orbit`]),
//! * estimates `μ`, its Lyapunov exponent and dimension bounds ([`measure`]),
//! * simulates the stopping-time random walk governing excursions out of
//!   the middle interval, with an exact dynamic-programming oracle ([`walk`]).
//!
//! Every stochastic routine is driven by a seeded counter-based stream
//! ([`rng::RngStream`]) so results are reproducible bit-for-bit and
//! independent of how work is spread over threads.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // negated comparisons reject NaN

pub mod bisect;
pub mod error;
pub mod measure;
pub mod orbit;
pub mod region;
pub mod rng;
pub mod stats;
pub mod system;
pub mod walk;

pub use error::{AmError, Result};
pub use measure::{EmpiricalMeasure, LyapunovMethod, MeasureConfig};
pub use orbit::{HybridPoint, Observer, Region};
pub use region::{ExponentPair, GammaInterval, RegionGrid, RegionVerdict};
pub use rng::{RngStream, SymbolStream};
pub use stats::EstimateWithError;
pub use system::{AmParams, AmSystem, IntervalPartition, LrCriterion, ProbVector, Symbol};
pub use walk::{ExactWalk, ExitSide, KacReport, ReturnOutcome, WalkConfig, WalkOutcome, WalkSide, WalkSummary};
