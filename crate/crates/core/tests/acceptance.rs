//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::time::{Duration, Instant};

use amdim::measure::{dimension_bound_entropy_lyap, lyapunov_exponent, mu_m_lower_bound, resonant_dimension};
use amdim::region::{
    closed_form_ratio, closed_form_ratio_symmetric, critical_p, critical_polynomial,
    dimension_bound_closed_form, gamma_interval,
};
use amdim::walk::{
    esn_grid, esn_sweep, exact_walk_stats, kac_run, walk_summary, wald_residual, WalkConfig,
    WalkSide,
};
use amdim::{LyapunovMethod, MeasureConfig, ProbVector};
use serde_json::json;

struct Outcome {
    pass: bool,
    detail: String,
    /// Serialized result used for the determinism check.
    output: serde_json::Value,
}

fn timed(budget: Duration, f: impl FnOnce() -> Outcome) -> (Outcome, Duration) {
    let start = Instant::now();
    let mut out = f();
    let elapsed = start.elapsed();
    if elapsed > budget {
        out.pass = false;
        out.detail.push_str(&format!("; over time budget {budget:?}"));
    }
    (out, elapsed)
}

fn criterion_1() -> Outcome {
    let p0 = critical_p(1e-8).unwrap();
    let residual = critical_polynomial(p0).abs();
    Outcome {
        pass: (p0 - 0.503507).abs() < 1e-5 && residual < 1e-12,
        detail: format!("p0 = {p0:.9}, residual = {residual:.2e}"),
        output: json!(p0),
    }
}

fn criterion_2() -> Outcome {
    let j = gamma_interval(0.5, 1e-9).unwrap();
    let (lo, hi) = j.map(|j| (j.lo, j.hi)).unwrap_or((f64::NAN, f64::NAN));
    Outcome {
        pass: (lo - 1.0).abs() < 1e-9 && (hi - 1.5).abs() < 1e-9,
        detail: format!("J = ({lo:.12}, {hi:.12})"),
        output: json!([lo, hi]),
    }
}

fn criterion_3() -> Outcome {
    let bound = dimension_bound_closed_form(0.5, 1.25, 2f64.powi(-128)).unwrap_or(f64::NAN);
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let gamma = 1.0 + 0.5 * (i + 1) as f64 / 101.0;
        for j in 0..100 {
            let a = (j + 1) as f64 / 101.0;
            let general = closed_form_ratio(0.5, gamma, a).unwrap();
            let special = closed_form_ratio_symmetric(gamma, a);
            worst = worst.max((general - special).abs() / special.abs().max(1.0));
        }
    }
    Outcome {
        pass: (bound - 0.5).abs() < 1e-12 && worst < 1e-12,
        detail: format!("bound = {bound}, worst relative gap on 100x100 grid = {worst:.2e}"),
        output: json!([bound, worst]),
    }
}

fn criteria_4_5() -> (Outcome, Outcome) {
    let (sys, probs) = amdim::system::new_system(0.1, 1.3, 0.5).unwrap();
    let (kac, measure) = kac_run(&sys, &probs, &MeasureConfig::default()).unwrap();
    let mu = measure.mu_m();
    let lower = mu_m_lower_bound(0.5, 1.3).unwrap();
    let c4 = Outcome {
        pass: kac.residual < 0.02 && kac.exit_mismatches == 0,
        detail: format!(
            "mean n_M = {:.6}, mu(M) = {:.6}, residual = {:.2e}, exit mismatches = {}",
            kac.mean_return, kac.mu_m, kac.residual, kac.exit_mismatches
        ),
        output: json!(kac),
    };
    let c5 = Outcome {
        pass: mu.value >= lower - 3.0 * mu.std_error,
        detail: format!("mu(M) = {:.6} ± {:.2e} vs lower bound {lower:.6}", mu.value, mu.std_error),
        output: json!(mu),
    };
    (c4, c5)
}

fn criterion_6() -> Outcome {
    let config = WalkConfig { trials: 100_000, cap: 3000 };
    let s = walk_summary(0.5, 1.2, WalkSide::Minus, 0, 0, &config).unwrap();
    let r = wald_residual(&s);
    let se = s.wald_defect.std_error;
    Outcome {
        pass: r <= 3.0 * se && s.censored_fraction < 1e-3,
        detail: format!(
            "residual = {r:.3e} vs 3 SE = {:.3e}, censored = {}",
            3.0 * se,
            s.censored_fraction
        ),
        output: json!(s),
    }
}

fn criterion_7() -> Outcome {
    let config = WalkConfig { trials: 40_000, cap: 3000 };
    let mut pass = true;
    let mut detail = Vec::new();
    let mut output = Vec::new();
    for (i, &gamma) in [1.1, 1.25, 1.4, 2.5].iter().enumerate() {
        let exact = exact_walk_stats(0.5, gamma, 400).unwrap();
        let mc = walk_summary(0.5, gamma, WalkSide::Minus, 0, i as u64, &config).unwrap();
        let tol_n = 3.0 * mc.mean_n.std_error + exact.truncation_bound;
        let tol_s = 3.0 * mc.mean_s.std_error + exact.truncation_bound;
        let agree = (exact.e_n - mc.mean_n.value).abs() <= tol_n
            && (exact.e_s - mc.mean_s.value).abs() <= tol_s;
        let small = exact.truncation_bound < 1e-10;
        pass &= agree && small;
        detail.push(format!(
            "gamma {gamma}: agree = {agree}, truncation bound = {:.2e} (< 1e-10: {small})",
            exact.truncation_bound
        ));
        output.push(json!([exact, mc]));
    }
    Outcome { pass, detail: detail.join("; "), output: json!(output) }
}

fn criterion_8() -> Outcome {
    let config = WalkConfig { trials: 40_000, cap: 3000 };
    let gammas = esn_grid(1.0, 1.5, 9);
    let rows = esn_sweep(0.5, &gammas, 0, &config).unwrap();
    let mut pass = true;
    let mut worst: f64 = f64::INFINITY;
    for s in &rows {
        let g = s.gamma;
        let m = s.mean_s;
        let low_ok = m.value + 3.0 * m.std_error >= -0.5 - g;
        let high_ok = m.value - 3.0 * m.std_error <= -(1.0 + g) / 2.0;
        pass &= low_ok && high_ok;
        worst = worst.min((m.value + 0.5 + g).min(-(1.0 + g) / 2.0 - m.value) / m.std_error);
    }
    let at3 = exact_walk_stats(0.5, 3.0, 400).unwrap();
    pass &= at3.e_s <= -2.0;
    Outcome {
        pass,
        detail: format!(
            "{} gamma in (1, 1.5), tightest margin {worst:.2} SE; exact e_s(3) = {:.6}",
            rows.len(),
            at3.e_s
        ),
        output: json!([rows, at3]),
    }
}

fn criterion_9() -> Outcome {
    let (sys, probs) = amdim::system::new_system(0.01, 2.0, 0.5).unwrap();
    let measure = amdim::measure::estimate_measure(&sys, &probs, &MeasureConfig::default()).unwrap();
    let chi = lyapunov_exponent(&measure, &sys, &probs, LyapunovMethod::Pointwise);
    let ln_a = 0.01f64.ln();
    let exact_dim = resonant_dimension(2, 0.01).unwrap();
    let (pass, detail, bound) = match dimension_bound_entropy_lyap(&ProbVector::symmetric(), &chi) {
        Ok(d) => (
            chi.value >= ln_a - 3.0 * chi.std_error && d.value >= exact_dim - 3.0 * d.std_error,
            format!(
                "chi = {:.6} ± {:.1e} (log a = {ln_a:.6}), -log2/chi = {:.6} ± {:.1e} >= log(eta)/log(a) = {exact_dim:.6}",
                chi.value, chi.std_error, d.value, d.std_error
            ),
            Some(d),
        ),
        Err(e) => (false, e.to_string(), None),
    };
    Outcome { pass, detail, output: json!([chi, bound]) }
}

fn criterion_10() -> Outcome {
    let config = WalkConfig { trials: 2000, cap: 3000 };
    let gammas = esn_grid(1.0, 3.0, 50);
    let rows = esn_sweep(0.5, &gammas, 0, &config).unwrap();
    let inside: Vec<_> = rows.iter().filter(|s| s.gamma < 1.5).collect();
    let pass = !inside.is_empty()
        && inside.iter().all(|s| s.mean_s.value > -2.0 - 3.0 * s.mean_s.std_error);
    let near3 = rows.last().unwrap();
    Outcome {
        pass,
        detail: format!(
            "{} points in (1, 1.5) all above -2; mean_s at gamma = {:.3} is {:.4}",
            inside.len(),
            near3.gamma,
            near3.mean_s.value
        ),
        output: json!(rows),
    }
}

/// Criteria 4–10 as serialized outputs.
fn stochastic_outputs() -> String {
    let (c4, c5) = criteria_4_5();
    let all = json!([
        c4.output,
        c5.output,
        criterion_6().output,
        criterion_7().output,
        criterion_8().output,
        criterion_9().output,
        criterion_10().output,
    ]);
    serde_json::to_string(&all).unwrap()
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(f)
}

fn report(id: &str, out: &Outcome, elapsed: Duration) -> bool {
    let tag = if out.pass { "PASS" } else { "FAIL" };
    println!("criterion {id}: {tag} ({:.2}s) {}", elapsed.as_secs_f64(), out.detail);
    out.pass
}

fn main() {
    let s = Duration::from_secs;
    let mut ok = true;
    let mut outputs = Vec::new();

    let (o, t) = timed(s(1), criterion_1);
    ok &= report("1", &o, t);
    let (o, t) = timed(s(1), criterion_2);
    ok &= report("2", &o, t);
    let (o, t) = timed(s(1), criterion_3);
    ok &= report("3", &o, t);

    let start = Instant::now();
    let (c4, c5) = criteria_4_5();
    let t = start.elapsed();
    let over = t > s(90);
    for (id, mut o) in [("4", c4), ("5", c5)] {
        if over {
            o.pass = false;
            o.detail.push_str("; over time budget 90s");
        }
        ok &= report(id, &o, t);
        outputs.push(o.output);
    }

    for (id, budget, f) in [
        ("6", s(10), criterion_6 as fn() -> Outcome),
        ("7", s(30), criterion_7),
        ("8", s(30), criterion_8),
        ("9", s(90), criterion_9),
        ("10", s(60), criterion_10),
    ] {
        let (o, t) = timed(budget, f);
        ok &= report(id, &o, t);
        outputs.push(o.output);
    }

    let start = Instant::now();
    let first = serde_json::to_string(&json!(outputs)).unwrap();
    let single = in_pool(1, stochastic_outputs);
    let four = in_pool(4, stochastic_outputs);
    let det = Outcome {
        pass: first == single && single == four,
        detail: format!(
            "{} bytes of serialized output; rerun identical: {}, 1 vs 4 threads identical: {}",
            first.len(),
            first == single,
            single == four
        ),
        output: json!(null),
    };
    ok &= report("11", &det, start.elapsed());

    if !ok {
        std::process::exit(1);
    }
}
