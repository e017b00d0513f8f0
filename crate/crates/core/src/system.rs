//! The symmetric AM-system: parameters, maps, inverses and the partition of
//! the middle interval `M = [x₊, x₋]` into `L`, `C` and `R`.
//!
//! With `b = a^(−γ)`,
//!
//! ```text
//! f₋(x) = a·x              on [0, x₋],   1 − b·(1 − x)  on (x₋, 1]
//! f₊(x) = b·x              on [0, x₊],   1 − a·(1 − x)  on (x₊, 1]
//! x₋ = (b − 1)/(b − a),    x₊ = (1 − a)/(b − a)
//! ```
//!
//! and `f₊ = I ∘ f₋ ∘ I` for the flip `I(x) = 1 − x`.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Which generator is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Symbol {
    Minus,
    Plus,
}

impl Symbol {
    pub fn flip(self) -> Self {
        match self {
            Symbol::Minus => Symbol::Plus,
            Symbol::Plus => Symbol::Minus,
        }
    }
}

/// Slopes of the system. `b` is derived once from `a` and `γ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmParams {
    pub a: f64,
    pub gamma: f64,
    pub b: f64,
    /// `ln a`, cached; negative.
    pub ln_a: f64,
}

impl AmParams {
    pub fn new(a: f64, gamma: f64) -> Result<Self> {
        if !(a > 0.0 && a < 1.0) {
            return Err(domain(format!("a = {a} must lie in (0, 1)")));
        }
        if !(gamma > 1.0) || !gamma.is_finite() {
            return Err(domain(format!("gamma = {gamma} must be finite and > 1")));
        }
        let ln_a = a.ln();
        let b = (-gamma * ln_a).exp();
        if !b.is_finite() {
            return Err(domain(format!("b = a^(-gamma) overflows for a = {a}, gamma = {gamma}")));
        }
        Ok(Self { a, gamma, b, ln_a })
    }

    /// `ln b = −γ·ln a`.
    pub fn ln_b(&self) -> f64 {
        -self.gamma * self.ln_a
    }
}

/// Probability vector `(p₋, p₊)` with both entries in `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbVector {
    pub p_minus: f64,
    pub p_plus: f64,
}

impl ProbVector {
    pub fn new(p_minus: f64) -> Result<Self> {
        if !(p_minus > 0.0 && p_minus < 1.0) {
            return Err(domain(format!("p_minus = {p_minus} must lie in (0, 1)")));
        }
        Ok(Self { p_minus, p_plus: 1.0 - p_minus })
    }

    pub fn symmetric() -> Self {
        Self { p_minus: 0.5, p_plus: 0.5 }
    }

    /// `p = max(p₋, p₊)`.
    pub fn p(&self) -> f64 {
        self.p_minus.max(self.p_plus)
    }

    pub fn prob(&self, symbol: Symbol) -> f64 {
        match symbol {
            Symbol::Minus => self.p_minus,
            Symbol::Plus => self.p_plus,
        }
    }

    /// Shannon entropy in nats.
    pub fn entropy(&self) -> f64 {
        entropy(self.p())
    }
}

/// `H(p) = −p·ln p − (1 − p)·ln(1 − p)`.
pub fn entropy(p: f64) -> f64 {
    let q = 1.0 - p;
    let term = |v: f64| if v > 0.0 { -v * v.ln() } else { 0.0 };
    term(p) + term(q)
}

/// Breakpoints and the sub-intervals of `M = [x₊, x₋]`.
///
/// `L = [x₊, l_end)` with `l_end = f₋⁻¹(x₊)`, `R = (r_start, x₋]` with
/// `r_start = f₊⁻¹(x₋)`, and `C = [l_end, r_start]` when `L` and `R` have
/// disjoint closures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalPartition {
    pub x_minus: f64,
    pub x_plus: f64,
    pub l_end: f64,
    pub r_start: f64,
}

impl IntervalPartition {
    pub fn in_m(&self, x: f64) -> bool {
        x >= self.x_plus && x <= self.x_minus
    }

    pub fn in_l(&self, x: f64) -> bool {
        x >= self.x_plus && x < self.l_end
    }

    pub fn in_r(&self, x: f64) -> bool {
        x > self.r_start && x <= self.x_minus
    }

    /// `None` when `L` and `R` overlap, since `C` is then undefined.
    pub fn in_c(&self, x: f64) -> Option<bool> {
        self.separated()
            .then_some(x >= self.l_end && x <= self.r_start)
    }

    /// Closures of `L` and `R` are disjoint.
    pub fn separated(&self) -> bool {
        self.l_end < self.r_start
    }
}

/// Side of the breakpoint an affine piece lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BranchSide {
    LeftOfBreakpoint,
    RightOfBreakpoint,
}

/// One affine piece `x ↦ slope·x + offset`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub side: BranchSide,
    pub slope: f64,
    pub offset: f64,
}

impl Branch {
    pub fn eval(&self, x: f64) -> f64 {
        self.slope * x + self.offset
    }
}

/// The three equivalent tests for `L`, `R` having disjoint closures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LrCriterion {
    /// Compare the interval endpoints `f₋⁻¹(x₊) < f₊⁻¹(x₋)`.
    Interval,
    /// `x₊ < f₋(1/2)`.
    Midpoint,
    /// `γ > 1 − ln(a² − 2a + 2)/ln a`.
    Analytic,
}

/// A symmetric AM-system together with its partition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmSystem {
    pub params: AmParams,
    pub partition: IntervalPartition,
}

/// Builds the system and probability vector, validating all parameters.
pub fn new_system(a: f64, gamma: f64, p_minus: f64) -> Result<(AmSystem, ProbVector)> {
    let sys = AmSystem::new(a, gamma)?;
    let probs = ProbVector::new(p_minus)?;
    Ok((sys, probs))
}

impl AmSystem {
    pub fn new(a: f64, gamma: f64) -> Result<Self> {
        let params = AmParams::new(a, gamma)?;
        let AmParams { b, .. } = params;
        // x₊ is computed directly rather than as 1 − x₋: for tiny a the
        // latter cancels to zero.
        let x_minus = (b - 1.0) / (b - a);
        let x_plus = (1.0 - a) / (b - a);
        let mut sys = Self {
            params,
            partition: IntervalPartition { x_minus, x_plus, l_end: 0.0, r_start: 0.0 },
        };
        sys.partition.l_end = sys.inverse(Symbol::Minus, x_plus);
        sys.partition.r_start = sys.inverse(Symbol::Plus, x_minus);
        Ok(sys)
    }

    pub fn a(&self) -> f64 {
        self.params.a
    }

    pub fn b(&self) -> f64 {
        self.params.b
    }

    pub fn gamma(&self) -> f64 {
        self.params.gamma
    }

    pub fn x_minus(&self) -> f64 {
        self.partition.x_minus
    }

    pub fn x_plus(&self) -> f64 {
        self.partition.x_plus
    }

    fn right_of_breakpoint(&self, symbol: Symbol, x: f64) -> bool {
        match symbol {
            // x₋ may round to 1.0 for tiny a; 1.0 itself is always on the right.
            Symbol::Minus => x > self.partition.x_minus || x == 1.0,
            Symbol::Plus => x > self.partition.x_plus,
        }
    }

    /// The affine piece of `f_symbol` used at `x` (left piece at the breakpoint).
    pub fn branch(&self, symbol: Symbol, x: f64) -> Branch {
        let AmParams { a, b, .. } = self.params;
        let right = self.right_of_breakpoint(symbol, x);
        let (slope, side) = match (symbol, right) {
            (Symbol::Minus, false) => (a, BranchSide::LeftOfBreakpoint),
            (Symbol::Minus, true) => (b, BranchSide::RightOfBreakpoint),
            (Symbol::Plus, false) => (b, BranchSide::LeftOfBreakpoint),
            (Symbol::Plus, true) => (a, BranchSide::RightOfBreakpoint),
        };
        let offset = match side {
            BranchSide::LeftOfBreakpoint => 0.0,
            BranchSide::RightOfBreakpoint => 1.0 - slope,
        };
        Branch { side, slope, offset }
    }

    /// `f_symbol(x)` without range checks.
    pub fn map(&self, symbol: Symbol, x: f64) -> f64 {
        let AmParams { a, b, .. } = self.params;
        match (symbol, self.right_of_breakpoint(symbol, x)) {
            (Symbol::Minus, false) => a * x,
            (Symbol::Minus, true) => 1.0 - b * (1.0 - x),
            (Symbol::Plus, false) => b * x,
            (Symbol::Plus, true) => 1.0 - a * (1.0 - x),
        }
    }

    /// `f_symbol(x)` for `x ∈ [0, 1]`.
    pub fn apply_map(&self, symbol: Symbol, x: f64) -> Result<f64> {
        check_unit(x)?;
        Ok(self.map(symbol, x))
    }

    /// `f_symbol⁻¹(y)` without range checks.
    pub fn inverse(&self, symbol: Symbol, y: f64) -> f64 {
        let AmParams { a, b, .. } = self.params;
        let IntervalPartition { x_minus, x_plus, .. } = self.partition;
        match symbol {
            Symbol::Minus => {
                if y <= a * x_minus && y < 1.0 {
                    y / a
                } else {
                    1.0 - (1.0 - y) / b
                }
            }
            Symbol::Plus => {
                if y <= b * x_plus {
                    y / b
                } else {
                    1.0 - (1.0 - y) / a
                }
            }
        }
    }

    pub fn apply_inverse(&self, symbol: Symbol, y: f64) -> Result<f64> {
        check_unit(y)?;
        Ok(self.inverse(symbol, y))
    }

    /// `ln f_symbol′(x)`; at a breakpoint the left-piece slope is used.
    pub fn log_derivative(&self, symbol: Symbol, x: f64) -> f64 {
        let ln_a = self.params.ln_a;
        let ln_b = self.params.ln_b();
        match (symbol, self.right_of_breakpoint(symbol, x)) {
            (Symbol::Minus, false) | (Symbol::Plus, true) => ln_a,
            (Symbol::Minus, true) | (Symbol::Plus, false) => ln_b,
        }
    }

    /// `f₋(x₋) < f₊(x₊)`.
    pub fn is_disjoint_type(&self) -> bool {
        let AmParams { a, b, .. } = self.params;
        a * self.partition.x_minus < b * self.partition.x_plus
    }

    pub fn lr_separated(&self, criterion: LrCriterion) -> bool {
        match criterion {
            LrCriterion::Interval => self.partition.separated(),
            LrCriterion::Midpoint => self.partition.x_plus < self.map(Symbol::Minus, 0.5),
            LrCriterion::Analytic => {
                self.params.gamma > lr_gamma_threshold(self.params.a)
            }
        }
    }
}

/// `1 − ln(a² − 2a + 2)/ln a`: the exponent above which `L`, `R` separate.
pub fn lr_gamma_threshold(a: f64) -> f64 {
    let q = (1.0 - a) * (1.0 - a) + 1.0;
    1.0 - q.ln() / a.ln()
}

fn check_unit(x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(domain(format!("{x} is outside [0, 1]")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sys(a: f64, gamma: f64) -> AmSystem {
        AmSystem::new(a, gamma).unwrap()
    }

    #[test]
    fn breakpoints_for_a_tenth() {
        // reference values from 30-digit evaluation of (b − 1)/(b − a), b = 10^1.2
        let s = sys(0.1, 1.2);
        assert!((s.x_minus() - 0.942_853_267_490_885_9).abs() < 1e-14);
        assert!((s.x_plus() - 0.057_146_732_509_114_11).abs() < 1e-14);
        let b = 10f64.powf(1.2);
        assert!(((s.x_minus() - (b - 1.0) / (b - 0.1)) / s.x_minus()).abs() < 1e-14);
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(AmSystem::new(0.5, 1.0).is_err());
        assert!(AmSystem::new(0.0, 1.5).is_err());
        assert!(AmSystem::new(1.0, 1.5).is_err());
        assert!(new_system(0.5, 1.5, 1.0).is_err());
        assert!(new_system(0.5, 1.5, 0.0).is_err());
    }

    #[test]
    fn endpoints_fixed() {
        for &(a, g) in &[(0.1, 1.2), (0.25, 1.25), (2f64.powi(-128), 1.25), (0.99, 1.01)] {
            let s = sys(a, g);
            for sym in [Symbol::Minus, Symbol::Plus] {
                assert_eq!(s.apply_map(sym, 0.0).unwrap(), 0.0);
                assert_eq!(s.apply_map(sym, 1.0).unwrap(), 1.0);
            }
        }
    }

    #[test]
    fn breakpoint_images() {
        // b = 0.25^(−1.25) = 5.656854...; 30-digit reference values
        let s = sys(0.25, 1.25);
        let fm = s.map(Symbol::Minus, s.x_minus());
        let fp = s.map(Symbol::Plus, s.x_plus());
        assert!((fm - 0.215_321_795_012_764_89).abs() < 1e-14, "{fm}");
        assert!((fp - 0.784_678_204_987_235_1).abs() < 1e-14, "{fp}");
        assert!(s.is_disjoint_type());
    }

    #[test]
    fn out_of_range_inputs() {
        let s = sys(0.3, 1.4);
        assert!(s.apply_map(Symbol::Minus, 1.5).is_err());
        assert!(s.apply_inverse(Symbol::Plus, -0.1).is_err());
    }

    #[test]
    fn inverse_examples() {
        let s = sys(0.1, 1.3);
        assert_eq!(s.apply_inverse(Symbol::Minus, 0.0).unwrap(), 0.0);
        assert!(s.inverse(Symbol::Plus, s.x_minus()) > s.x_plus());
    }

    #[test]
    fn log_derivative_branches() {
        let s = sys(0.2, 1.3);
        let ln_a = 0.2f64.ln();
        assert_eq!(s.log_derivative(Symbol::Minus, 0.3), ln_a);
        assert_eq!(s.log_derivative(Symbol::Plus, 0.5), ln_a);
        assert!((s.log_derivative(Symbol::Plus, 0.01) + 1.3 * ln_a).abs() < 1e-15);
        // breakpoints take the left piece
        assert_eq!(s.log_derivative(Symbol::Minus, s.x_minus()), ln_a);
        assert_eq!(s.log_derivative(Symbol::Plus, s.x_plus()), s.params.ln_b());
    }

    #[test]
    fn branch_continuity() {
        for &(a, g) in &[(0.1, 1.2), (0.25, 1.25), (0.6, 1.05), (0.01, 2.0), (1e-9, 1.3)] {
            let s = sys(a, g);
            for (sym, x) in [(Symbol::Minus, s.x_minus()), (Symbol::Plus, s.x_plus())] {
                let left = s.branch(sym, x);
                let right = s.branch(sym, 1.0);
                assert_eq!(left.side, BranchSide::LeftOfBreakpoint);
                assert_eq!(right.side, BranchSide::RightOfBreakpoint);
                // the right piece is anchored at 1; evaluate it from the
                // breakpoint's distance to 1, which is x₊ by symmetry
                let dist = match sym {
                    Symbol::Minus => s.x_plus(),
                    Symbol::Plus => s.x_minus(),
                };
                let right_val = 1.0 - right.slope * dist;
                assert!((left.eval(x) - right_val).abs() <= 1e-14, "a={a} g={g} {sym:?}");
            }
        }
    }

    #[test]
    fn lr_threshold_at_a_tenth() {
        // 1 − ln(1.81)/ln(0.1)
        let t = lr_gamma_threshold(0.1);
        assert!((t - 1.257_679).abs() < 1e-6, "{t}");
        assert!(!sys(0.1, 1.25).lr_separated(LrCriterion::Analytic));
        assert!(sys(0.1, 1.26).lr_separated(LrCriterion::Interval));
    }

    #[test]
    fn entropy_symmetric() {
        assert!((ProbVector::symmetric().entropy() - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn deep_contraction_partition() {
        let s = sys(2f64.powi(-128), 1.25);
        assert!(s.x_plus() > 0.0);
        assert!(s.x_plus() < s.x_minus());
        assert!((s.x_plus() + s.x_minus() - 1.0).abs() <= 1e-14);
    }

    fn params() -> impl Strategy<Value = (f64, f64)> {
        (1e-6f64..0.999, 1.0001f64..4.0)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(2000))]

        #[test]
        fn symmetry_of_breakpoints((a, g) in params()) {
            let s = sys(a, g);
            prop_assert!((s.x_plus() + s.x_minus() - 1.0).abs() <= 1e-14);
            prop_assert!(s.x_plus() < s.x_minus());
        }

        #[test]
        fn conjugacy((a, g) in params(), x in 0.0f64..=1.0) {
            let s = sys(a, g);
            let lhs = s.map(Symbol::Plus, x);
            let rhs = 1.0 - s.map(Symbol::Minus, 1.0 - x);
            prop_assert!((lhs - rhs).abs() <= 1e-14, "{} vs {}", lhs, rhs);
        }

        #[test]
        fn strictly_increasing((a, g) in params(), x in 0.0f64..1.0, y in 0.0f64..1.0) {
            prop_assume!((x - y).abs() > 1e-9);
            let (lo, hi) = if x < y { (x, y) } else { (y, x) };
            let s = sys(a, g);
            for sym in [Symbol::Minus, Symbol::Plus] {
                prop_assert!(s.map(sym, lo) < s.map(sym, hi));
            }
        }

        #[test]
        fn between_the_maps((a, g) in params(), x in 0.0f64..1.0) {
            // exclude a 16-ulp neighbourhood of the endpoints
            prop_assume!(x > 16.0 * f64::EPSILON && x < 1.0 - 16.0 * f64::EPSILON);
            let s = sys(a, g);
            prop_assert!(s.map(Symbol::Minus, x) < x);
            prop_assert!(x < s.map(Symbol::Plus, x));
        }

        // the forward map amplifies the inverse's rounding by up to b, so b is
        // kept below 10³ here
        #[test]
        fn inverse_round_trip(a in 0.1f64..0.999, g in 1.0001f64..3.0, y in 0.0f64..=1.0) {
            let s = sys(a, g);
            for sym in [Symbol::Minus, Symbol::Plus] {
                let back = s.map(sym, s.inverse(sym, y));
                prop_assert!((back - y).abs() < 1e-12);
            }
        }

        #[test]
        fn lr_criteria_agree((a, g) in params()) {
            let s = sys(a, g);
            let i = s.lr_separated(LrCriterion::Interval);
            let m = s.lr_separated(LrCriterion::Midpoint);
            let c = s.lr_separated(LrCriterion::Analytic);
            prop_assert!(i == m && m == c, "a={} g={} {} {} {}", a, g, i, m, c);
        }

        #[test]
        fn small_a_is_disjoint_type(a in 1e-9f64..0.5, g in 1.0001f64..6.0) {
            prop_assert!(sys(a, g).is_disjoint_type());
        }

        #[test]
        fn remark_sufficient_condition(g in 1.001f64..4.0, frac in 0.0f64..1.0) {
            let a = 2f64.powf(1.0 / (1.0 - g)) * (0.001 + 0.998 * frac);
            prop_assert!(sys(a, g).lr_separated(LrCriterion::Analytic));
        }

        #[test]
        fn exit_structure((a, g) in params(), x in 0.0f64..1.0) {
            let s = sys(a, g);
            let part = s.partition;
            prop_assume!(part.in_m(x));
            if !part.in_m(s.map(Symbol::Minus, x)) {
                prop_assert!(part.in_l(x));
            }
            if !part.in_m(s.map(Symbol::Plus, x)) {
                prop_assert!(part.in_r(x));
            }
        }
    }

    #[test]
    fn disjoint_type_near_identity() {
        // evaluated directly from both sides of the criterion
        let s = sys(0.99, 1.01);
        let lhs = s.a() * s.x_minus();
        let rhs = s.b() * s.x_plus();
        assert_eq!(s.is_disjoint_type(), lhs < rhs);
    }
}
