//! Orbit iteration of the step skew product `(i, x) ↦ (σi, f_{i₁}(x))`.
//!
//! Outside `M = [x₊, x₋]` both maps are linear through the nearby fixed
//! endpoint, so a point `x = x₊·a^r` left of `M` moves to `x₊·a^(r+1)` under
//! `f₋` and to `x₊·a^(r−γ)` under `f₊`. [`HybridPoint`] stores such points by
//! their depth `r` (as integer step counts plus an entry offset) and bulk
//! points by their distance to the nearer endpoint, so orbits never underflow
//! to an endpoint even when `a` is as small as 2⁻¹²⁸.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::rng::{RngStream, SymbolStream};
use crate::system::{AmSystem, ProbVector, Symbol};

/// Endpoint a coordinate is measured from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn flip(self) -> Self {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }

    /// The endpoint `f_symbol` contracts towards.
    pub fn attracting(symbol: Symbol) -> Self {
        match symbol {
            Symbol::Minus => Side::Left,
            Symbol::Plus => Side::Right,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    LeftTail,
    Bulk,
    RightTail,
}

/// Depth of a tail point below the breakpoint, in units of `ln a`.
///
/// For a left-tail point `x = x₊·a^depth`; for a right-tail point
/// `1 − x = x₊·a^depth`. The depth is `entry + (contracting − γ·expanding)`
/// so an excursion of `n₁` contracting and `n₂` expanding steps moves it by
/// exactly `n₁ − γ·n₂`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailCoord {
    pub entry: f64,
    pub contracting: u64,
    pub expanding: u64,
}

impl TailCoord {
    pub fn depth(&self, gamma: f64) -> f64 {
        self.entry + (self.contracting as f64 - gamma * self.expanding as f64)
    }
}

/// Orbit state.
///
/// `Bulk { side, dist }` is the point at distance `dist ≤ 1/2` from the
/// endpoint on `side`; it lies in `M`. Tails hold points strictly outside `M`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum HybridPoint {
    LeftTail(TailCoord),
    Bulk { side: Side, dist: f64 },
    RightTail(TailCoord),
}

impl HybridPoint {
    /// The bulk point with coordinate `x`.
    pub fn from_bulk(x: f64) -> Self {
        if x <= 0.5 {
            HybridPoint::Bulk { side: Side::Left, dist: x }
        } else {
            HybridPoint::Bulk { side: Side::Right, dist: 1.0 - x }
        }
    }

    pub fn region(&self) -> Region {
        match self {
            HybridPoint::LeftTail(_) => Region::LeftTail,
            HybridPoint::Bulk { .. } => Region::Bulk,
            HybridPoint::RightTail(_) => Region::RightTail,
        }
    }

    /// Image under the flip `x ↦ 1 − x`.
    pub fn mirror(&self) -> Self {
        match *self {
            HybridPoint::LeftTail(t) => HybridPoint::RightTail(t),
            HybridPoint::RightTail(t) => HybridPoint::LeftTail(t),
            HybridPoint::Bulk { side, dist } => HybridPoint::Bulk { side: side.flip(), dist },
        }
    }
}

/// Precomputed constants for stepping one system.
#[derive(Debug, Clone, Copy)]
pub struct Kernel {
    pub sys: AmSystem,
    a: f64,
    gamma: f64,
    ln_a: f64,
    x_plus: f64,
    x_minus: f64,
    ln_x_plus: f64,
    l_end: f64,
}

impl Kernel {
    pub fn new(sys: &AmSystem) -> Self {
        let x_plus = sys.x_plus();
        Self {
            sys: *sys,
            a: sys.a(),
            gamma: sys.gamma(),
            ln_a: sys.params.ln_a,
            x_plus,
            x_minus: sys.x_minus(),
            ln_x_plus: x_plus.ln(),
            l_end: sys.partition.l_end,
        }
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Coordinate in `[0, 1]`; deep tail points round to 0 or 1.
    pub fn value(&self, p: &HybridPoint) -> f64 {
        match *p {
            HybridPoint::LeftTail(t) => self.tail_dist(&t),
            HybridPoint::RightTail(t) => 1.0 - self.tail_dist(&t),
            HybridPoint::Bulk { side: Side::Left, dist } => dist,
            HybridPoint::Bulk { side: Side::Right, dist } => 1.0 - dist,
        }
    }

    /// The state representing coordinate `x ∈ (0, 1)`.
    pub fn point_at(&self, x: f64) -> HybridPoint {
        if x < self.x_plus {
            let entry = (x.ln() - self.ln_x_plus) / self.ln_a;
            HybridPoint::LeftTail(TailCoord { entry, contracting: 0, expanding: 0 })
        } else if x > self.sys.x_minus() {
            self.point_at(1.0 - x).mirror()
        } else {
            HybridPoint::from_bulk(x)
        }
    }

    /// `log_a(x)` for a left-tail point, `log_a(1 − x)` for a right-tail one.
    pub fn log_coordinate(&self, t: &TailCoord) -> f64 {
        self.ln_x_plus / self.ln_a + t.depth(self.gamma)
    }

    fn tail_dist(&self, t: &TailCoord) -> f64 {
        (self.ln_x_plus + t.depth(self.gamma) * self.ln_a).exp()
    }

    fn bulk(side: Side, dist: f64) -> HybridPoint {
        if dist > 0.5 {
            HybridPoint::Bulk { side: side.flip(), dist: 1.0 - dist }
        } else {
            HybridPoint::Bulk { side, dist }
        }
    }

    fn tail(side: Side, t: TailCoord) -> HybridPoint {
        match side {
            Side::Left => HybridPoint::LeftTail(t),
            Side::Right => HybridPoint::RightTail(t),
        }
    }

    /// One application of `f_symbol`.
    pub fn step(&self, p: HybridPoint, symbol: Symbol) -> HybridPoint {
        let target = Side::attracting(symbol);
        match p {
            HybridPoint::Bulk { side, dist } => {
                // Distance to the attracting endpoint, and its log. On the
                // attracting half the map is linear through that endpoint;
                // on the far half the point still sits on the same affine
                // piece because it lies in M.
                let (d0, ln_d0) = if side == target {
                    (dist, dist.ln())
                } else {
                    (1.0 - dist, (-dist).ln_1p())
                };
                let depth = 1.0 + (ln_d0 - self.ln_x_plus) / self.ln_a;
                if depth > 0.0 {
                    Self::tail(target, TailCoord { entry: depth, contracting: 0, expanding: 0 })
                } else {
                    Self::bulk(target, self.a * d0)
                }
            }
            HybridPoint::LeftTail(t) | HybridPoint::RightTail(t) => {
                let side = match p {
                    HybridPoint::LeftTail(_) => Side::Left,
                    _ => Side::Right,
                };
                let mut t = t;
                if side == target {
                    t.contracting += 1;
                    return Self::tail(side, t);
                }
                let before = t.depth(self.gamma);
                t.expanding += 1;
                let depth = t.depth(self.gamma);
                if depth > 0.0 {
                    return Self::tail(side, t);
                }
                let dist = (self.ln_x_plus + depth * self.ln_a).exp();
                if dist <= 0.5 {
                    Self::bulk(side, dist)
                } else {
                    // 1 − x₊·b·a^s with s = depth before the step, using
                    // 1 − x₊·b = a·x₋ to avoid cancellation
                    let a_s = (before * self.ln_a).exp();
                    let far = -(before * self.ln_a).exp_m1() + self.a * self.x_minus * a_s;
                    Self::bulk(side.flip(), far)
                }
            }
        }
    }

    /// Whether a bulk point lies in `L = [x₊, f₋⁻¹(x₊))`.
    pub fn in_l(&self, p: &HybridPoint) -> bool {
        match *p {
            HybridPoint::Bulk { side: Side::Left, dist } => dist < self.l_end,
            HybridPoint::Bulk { side: Side::Right, dist } => 1.0 - dist < self.l_end,
            _ => false,
        }
    }

    /// Whether a bulk point lies in `R = I(L)`.
    pub fn in_r(&self, p: &HybridPoint) -> bool {
        self.in_l(&p.mirror())
    }

    /// `ln f_symbol′` at the point, left piece at a breakpoint.
    pub fn log_derivative(&self, p: &HybridPoint, symbol: Symbol) -> f64 {
        let ln_b = -self.gamma * self.ln_a;
        let expanding = match (*p, symbol) {
            (HybridPoint::LeftTail(_), Symbol::Plus) => true,
            (HybridPoint::RightTail(_), Symbol::Minus) => true,
            // x = x₊ exactly: left piece of f₊ has slope b
            (HybridPoint::Bulk { side: Side::Left, dist }, Symbol::Plus) => dist == self.x_plus,
            _ => false,
        };
        if expanding {
            ln_b
        } else {
            self.ln_a
        }
    }

    /// `p₋·ln f₋′(x) + p₊·ln f₊′(x)`.
    pub fn lyapunov_integrand(&self, p: &HybridPoint, probs: &ProbVector) -> f64 {
        probs.p_minus * self.log_derivative(p, Symbol::Minus)
            + probs.p_plus * self.log_derivative(p, Symbol::Plus)
    }
}

/// Applies `f_symbol` once to `point`.
pub fn step(sys: &AmSystem, point: HybridPoint, symbol: Symbol) -> HybridPoint {
    Kernel::new(sys).step(point, symbol)
}

/// Receives every retained `(x_t, i_{t+1})` pair of an orbit.
pub trait Observer {
    fn observe(&mut self, kernel: &Kernel, t: u64, point: &HybridPoint, next: Symbol);
}

/// Iterates from `x₀ = 1/2`, discards `burn_in` steps, then feeds `length`
/// consecutive states (with the symbol about to be applied) to each observer.
pub fn run_orbit(
    sys: &AmSystem,
    probs: &ProbVector,
    seed: u64,
    stream_id: u64,
    burn_in: u64,
    length: u64,
    observers: &mut [&mut dyn Observer],
) -> Result<()> {
    if length == 0 {
        return Err(domain("orbit length must be at least 1"));
    }
    let kernel = Kernel::new(sys);
    let mut symbols = SymbolStream::new(RngStream::new(seed, stream_id), probs.p_minus)?;
    let mut point = HybridPoint::from_bulk(0.5);
    for _ in 0..burn_in {
        point = kernel.step(point, symbols.next_symbol());
    }
    for t in 0..length {
        let symbol = symbols.next_symbol();
        for obs in observers.iter_mut() {
            obs.observe(&kernel, t, &point, symbol);
        }
        let next = kernel.step(point, symbol);
        debug_assert!(
            !matches!(
                (point.region(), next.region()),
                (Region::LeftTail, Region::RightTail) | (Region::RightTail, Region::LeftTail)
            ),
            "orbit jumped across M"
        );
        point = next;
    }
    Ok(())
}
