use amdim::measure::*;
use amdim::region::dimension_bound_closed_form;
use amdim::system::new_system;
use amdim::{LrCriterion, MeasureConfig};

fn config(length: u64, seed: u64) -> MeasureConfig {
    MeasureConfig { seed, length, ..MeasureConfig::default() }
}

#[test]
fn stationarity_residual_at_full_length() {
    let (sys, probs) = new_system(0.1, 1.3, 0.5).unwrap();
    let m = estimate_measure(&sys, &probs, &MeasureConfig { bins: 1000, ..MeasureConfig::default() }).unwrap();
    let r = stationarity_residual(&m, &sys, &probs);
    assert!(r < 0.005, "{r}");
}

#[test]
fn residual_shrinks_with_length() {
    let (sys, probs) = new_system(0.1, 1.3, 0.5).unwrap();
    let r = |length| {
        let m = estimate_measure(&sys, &probs, &MeasureConfig { length, bins: 50, ..MeasureConfig::default() }).unwrap();
        stationarity_residual(&m, &sys, &probs)
    };
    assert!(r(2_000_000) < r(2_000));
}

/// Parameters where the mass and Lyapunov bounds apply: positive endpoint
/// exponents and separated `L`, `R`.
fn suite() -> Vec<(f64, f64, f64)> {
    let mut out = Vec::new();
    for &a in &[0.01, 0.05, 0.1, 0.2] {
        for &g in &[1.1, 1.2, 1.3, 1.4, 1.6] {
            for &p in &[0.5, 0.52, 0.45] {
                let (sys, probs) = new_system(a, g, p).unwrap();
                let positive = g > probs.p_minus.max(probs.p_plus) / probs.p_minus.min(probs.p_plus);
                if positive && sys.lr_separated(LrCriterion::Analytic) {
                    out.push((a, g, p));
                }
            }
        }
    }
    out
}

#[test]
fn mass_and_lyapunov_bounds_hold_on_suite() {
    let cases = suite();
    assert!(cases.len() >= 10);
    for (i, &(a, g, p)) in cases.iter().enumerate() {
        let (sys, probs) = new_system(a, g, p).unwrap();
        let m = estimate_measure(&sys, &probs, &config(500_000, i as u64)).unwrap();
        let q = probs.p();
        let mu = m.mu_m();
        let lower = mu_m_lower_bound(q, g).unwrap();
        assert!(mu.value >= lower - 3.0 * mu.std_error, "{a} {g} {p}: {mu:?} < {lower}");

        let chi = lyapunov_exponent(&m, &sys, &probs, LyapunovMethod::Pointwise);
        let chi2 = lyapunov_exponent(&m, &sys, &probs, LyapunovMethod::IntervalForm);
        assert!((chi.value - chi2.value).abs() <= 3.0 * (chi.std_error + chi2.std_error) + 1e-12);
        let c = lyapunov_upper_bound(q, g).unwrap();
        if c > 0.0 {
            assert!(chi.value <= c * a.ln() + 3.0 * chi.std_error, "{a} {g} {p}");
        }
    }
}

#[test]
fn symmetric_masses_balance() {
    let (sys, probs) = new_system(0.1, 1.3, 0.5).unwrap();
    let m = estimate_measure(&sys, &probs, &config(2_000_000, 7)).unwrap();
    let (l, r) = (m.mu_left(), m.mu_right());
    assert!((l.value - r.value).abs() <= 3.0 * (l.std_error + r.std_error));
}

#[test]
fn resonant_sandwich() {
    for &(k, a) in &[(2u32, 0.01), (2, 0.05), (3, 0.01)] {
        let (sys, probs) = new_system(a, k as f64, 0.5).unwrap();
        let m = estimate_measure(&sys, &probs, &config(1_000_000, 1)).unwrap();
        let chi = lyapunov_exponent(&m, &sys, &probs, LyapunovMethod::Pointwise);
        assert!(chi.value >= a.ln() - 3.0 * chi.std_error);
        let d = dimension_bound_entropy_lyap(&probs, &chi).unwrap();
        let exact = resonant_dimension(k, a).unwrap();
        assert!(exact <= d.value + 3.0 * d.std_error, "{k} {a}");
        assert!(exact < (0.5f64).ln() / a.ln());
    }
}

#[test]
fn closed_form_dominates_empirical_bound() {
    // a far below a_max_dim(1/2, 1.25) = 2⁻⁶⁴
    for &(g, a) in &[(1.25, 2f64.powi(-128)), (1.2, 2f64.powi(-200)), (1.3, 2f64.powi(-150))] {
        let closed = dimension_bound_closed_form(0.5, g, a).unwrap();
        let (sys, probs) = new_system(a, g, 0.5).unwrap();
        let m = estimate_measure(&sys, &probs, &config(1_000_000, 3)).unwrap();
        let chi = lyapunov_exponent(&m, &sys, &probs, LyapunovMethod::Pointwise);
        let d = dimension_bound_entropy_lyap(&probs, &chi).unwrap();
        assert!(closed >= d.value - 3.0 * d.std_error, "{g}: {closed} vs {d:?}");
        assert!(closed < 1.0);
    }
}

#[test]
fn deterministic_per_seed() {
    let (sys, probs) = new_system(0.2, 1.4, 0.5).unwrap();
    let a = estimate_measure(&sys, &probs, &config(100_000, 5)).unwrap();
    let b = estimate_measure(&sys, &probs, &config(100_000, 5)).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}
