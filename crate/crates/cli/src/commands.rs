use std::collections::BTreeMap;

use amdim::measure::{
    dimension_bound_entropy_lyap, estimate_measure, lyapunov_exponent, lyapunov_upper_bound,
    mu_m_lower_bound, stationarity_residual,
};
use amdim::region::{
    critical_p, dimension_bound_closed_form, rasterize_region, verdict, DEFAULT_TOL,
};
use amdim::system::new_system;
use amdim::walk::{
    esn_grid, exact_walk_stats, hoeffding_tail, kac_run, mu_m_walk_bound, walk_summary,
    wald_residual, CENSOR_WARNING,
};
use amdim::{LyapunovMethod, MeasureConfig, WalkConfig, WalkSide};
use anyhow::Result;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::cli::*;
use crate::output::{Output, Table};
use crate::svg::Plot;
use crate::UsageError;

pub type Params = BTreeMap<&'static str, Value>;

/// Result of a command: whether declared tolerances held, plus the resolved
/// parameters for the manifest.
pub struct Finished {
    pub passed: bool,
    pub params: Params,
}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// A library result as JSON: the value, or `{"error": message}`.
fn outcome<T: Serialize>(r: &amdim::Result<T>) -> Value {
    match r {
        Ok(v) => json!(v),
        Err(e) => json!({ "error": e.to_string() }),
    }
}

fn check_range(name: &str, lo: f64, hi: f64) -> Result<()> {
    if lo < hi {
        Ok(())
    } else {
        Err(usage(format!("{name} range [{lo}, {hi}] is empty")))
    }
}

fn orbit_config(seed: u64, orbit: &OrbitArgs, bins: usize) -> Result<MeasureConfig> {
    if orbit.len < 100 {
        return Err(usage(format!("orbit length {} must be at least 100", orbit.len)));
    }
    Ok(MeasureConfig { seed, stream_id: 0, burn_in: orbit.burn_in, length: orbit.len, bins })
}

fn system_params(params: &mut Params, s: &SystemArgs) {
    params.insert("a", json!(s.a));
    params.insert("gamma", json!(s.gamma));
    params.insert("p", json!(s.p));
}

fn orbit_params(params: &mut Params, o: &OrbitArgs) {
    params.insert("len", json!(o.len));
    params.insert("burn-in", json!(o.burn_in));
}

pub fn region(args: &RegionArgs, out: &mut Output) -> Result<Finished> {
    check_range("p", args.p_min, args.p_max)?;
    check_range("gamma", args.gamma_min, args.gamma_max)?;
    let (nx, ny) = args.grid;
    let grid = rasterize_region((args.p_min, args.p_max), (args.gamma_min, args.gamma_max), (nx, ny))?;

    let mut table = Table::new(&[
        "p",
        "gamma",
        "exponents_positive",
        "contraction_ok",
        "lr_ok",
        "a_max_dim",
        "a_max_lr",
    ]);
    let mut invalid = 0usize;
    for j in 0..ny {
        for i in 0..nx {
            let (p, g) = (grid.ps[i], grid.gammas[j]);
            let row = match grid.cell(i, j) {
                Ok(v) => vec![
                    p.into(),
                    g.into(),
                    v.exponents_positive.into(),
                    v.contraction_ok.into(),
                    v.lr_ok.into(),
                    v.a_max_dim.into(),
                    v.a_max_lr.into(),
                ],
                Err(_) => {
                    invalid += 1;
                    vec![p.into(), g.into(), false.into(), false.into(), false.into(), None.into(), None.into()]
                }
            };
            table.push(row);
        }
    }
    if invalid > 0 {
        out.warnings.push(format!(
            "{invalid} of {} cells lie outside p in [1/2, 1), gamma > 1 and are reported as not admissible",
            nx * ny
        ));
    }
    out.csv("region.csv", &table)?;

    // per column: admissible gamma interval and the grid rows inside it
    let columns: Vec<Value> = (0..nx)
        .map(|i| {
            let rows: Vec<usize> = (0..ny)
                .filter(|&j| matches!(grid.cell(i, j), Ok(v) if v.dim_lt_one))
                .collect();
            let interval = (0..ny).find_map(|j| grid.cell(i, j).as_ref().ok().map(|v| v.gamma_interval));
            json!({
                "p": grid.ps[i],
                "gamma_interval": interval.flatten(),
                "admissible_rows": rows.len(),
                "gamma_min_admissible": rows.first().map(|&j| grid.gammas[j]),
                "gamma_max_admissible": rows.last().map(|&j| grid.gammas[j]),
            })
        })
        .collect();
    out.json(
        "region.json",
        &json!({
            "grid": [nx, ny],
            "p_range": [args.p_min, args.p_max],
            "gamma_range": [args.gamma_min, args.gamma_max],
            "critical_p": outcome(&critical_p(1e-12)),
            "admissible_cells": grid.admissible_count(),
            "invalid_cells": invalid,
            "columns": columns,
        }),
    )?;

    let dp = (args.p_max - args.p_min) / (nx - 1) as f64;
    let dg = (args.gamma_max - args.gamma_min) / (ny - 1) as f64;
    let mut plot = Plot::new(
        "Parameters with dim μ < 1 for all small a",
        "p",
        "γ",
        (args.p_min - dp / 2.0, args.p_max + dp / 2.0),
        (args.gamma_min - dg / 2.0, args.gamma_max + dg / 2.0),
    );
    for j in 0..ny {
        let g = grid.gammas[j];
        let mut i = 0;
        while i < nx {
            let admissible = |i: usize| matches!(grid.cell(i, j), Ok(v) if v.dim_lt_one);
            if !admissible(i) {
                i += 1;
                continue;
            }
            let start = i;
            while i < nx && admissible(i) {
                i += 1;
            }
            plot.rect(
                grid.ps[start] - dp / 2.0,
                grid.ps[i - 1] + dp / 2.0,
                g - dg / 2.0,
                g + dg / 2.0,
                "#3b6fb6",
            );
        }
    }
    if grid.admissible_count() == 0 {
        plot.note("no admissible cells in this range");
    }
    out.svg("region.svg", &plot.render())?;

    let mut params = Params::new();
    params.insert("p-min", json!(args.p_min));
    params.insert("p-max", json!(args.p_max));
    params.insert("gamma-min", json!(args.gamma_min));
    params.insert("gamma-max", json!(args.gamma_max));
    params.insert("grid", json!(format!("{nx}x{ny}")));
    Ok(Finished { passed: true, params })
}

pub fn dimension(seed: u64, args: &DimensionArgs, out: &mut Output) -> Result<Finished> {
    let s = &args.system;
    let (sys, probs) = new_system(s.a, s.gamma, s.p)?;
    let config = orbit_config(seed, &args.orbit, 1000)?;
    // the system with (p₋, p₊) swapped is conjugate under x ↦ 1 − x
    let p = s.p.max(1.0 - s.p);

    let closed = dimension_bound_closed_form(p, s.gamma, s.a);
    let closed_json = match &closed {
        Ok(bound) => json!({ "bound": bound }),
        Err(amdim::AmError::Precondition { failed }) => json!({ "failed_preconditions": failed }),
        Err(e) => json!({ "error": e.to_string() }),
    };
    let verdict = verdict(p, s.gamma, Some(s.a), DEFAULT_TOL);

    let empirical = match estimate_measure(&sys, &probs, &config) {
        Ok(measure) => {
            let chi = lyapunov_exponent(&measure, &sys, &probs, LyapunovMethod::Pointwise);
            let chi_interval = lyapunov_exponent(&measure, &sys, &probs, LyapunovMethod::IntervalForm);
            let bound = dimension_bound_entropy_lyap(&probs, &chi);
            json!({
                "chi_pointwise": chi,
                "chi_interval_form": chi_interval,
                "entropy_over_chi": outcome(&bound),
                "mu_m": measure.mu_m(),
                "mu_left": measure.mu_left(),
                "mu_right": measure.mu_right(),
            })
        }
        Err(e) => {
            out.warnings.push(format!("empirical estimates skipped: {e}"));
            json!({ "error": e.to_string() })
        }
    };
    let chi_bound = lyapunov_upper_bound(p, s.gamma).map(|c| c * sys.params.ln_a);

    out.json(
        "dimension.json",
        &json!({
            "a": s.a,
            "ln_a": sys.params.ln_a,
            "gamma": s.gamma,
            "p": s.p,
            "entropy": probs.entropy(),
            "closed_form": closed_json,
            "verdict": outcome(&verdict),
            "mu_m_lower_bound": outcome(&mu_m_lower_bound(p, s.gamma)),
            "chi_upper_bound": outcome(&chi_bound),
            "empirical": empirical,
        }),
    )?;

    let mut params = Params::new();
    system_params(&mut params, s);
    orbit_params(&mut params, &args.orbit);
    Ok(Finished { passed: true, params })
}

pub fn esn_sweep(seed: u64, args: &EsnArgs, out: &mut Output) -> Result<Finished> {
    let (points, trials, cap) = if args.full {
        (4000, 40_000, 3000)
    } else {
        (args.points, args.trials, args.cap)
    };
    check_range("gamma", args.gamma_min, args.gamma_max)?;
    if points == 0 || trials == 0 {
        return Err(usage("points and trials must be positive"));
    }
    if cap < 2 {
        return Err(usage(format!("cap = {cap} must be at least 2")));
    }
    if !(0.0..=1.0).contains(&args.p) {
        return Err(usage(format!("p = {} must lie in [0, 1]", args.p)));
    }
    let config = WalkConfig { trials, cap };
    let gammas = esn_grid(args.gamma_min, args.gamma_max, points as usize);
    let cells: Vec<amdim::Result<amdim::WalkSummary>> = gammas
        .par_iter()
        .enumerate()
        .map(|(i, &g)| walk_summary(args.p, g, WalkSide::Minus, seed, i as u64, &config))
        .collect();

    let mut table = Table::new(&["gamma", "mean_s", "se_s", "mean_n", "se_n", "censored_fraction"]);
    for (g, cell) in gammas.iter().zip(&cells) {
        match cell {
            Ok(s) => {
                if s.censor_warning {
                    out.warnings.push(format!(
                        "gamma = {g}: censored fraction {} exceeds {CENSOR_WARNING}",
                        s.censored_fraction
                    ));
                }
                table.push(vec![
                    (*g).into(),
                    s.mean_s.value.into(),
                    s.mean_s.std_error.into(),
                    s.mean_n.value.into(),
                    s.mean_n.std_error.into(),
                    s.censored_fraction.into(),
                ]);
            }
            Err(e) => {
                out.warnings.push(format!("gamma = {g}: {e}"));
                table.push(vec![(*g).into(), None.into(), None.into(), None.into(), None.into(), None.into()]);
            }
        }
    }
    out.csv("esn.csv", &table)?;
    let rows: Vec<Value> = cells.iter().map(outcome).collect();
    out.json("esn.json", &json!({ "p": args.p, "trials": trials, "cap": cap, "rows": rows }))?;

    let pts: Vec<(f64, f64, f64)> = cells
        .iter()
        .flatten()
        .map(|s| (s.gamma, s.mean_s.value, 3.0 * s.mean_s.std_error))
        .collect();
    let (mut lo, mut hi) = (-2.2f64, -1.0f64);
    for &(_, y, e) in &pts {
        if y.is_finite() {
            lo = lo.min(y - e.max(0.0));
            hi = hi.max(y + e.max(0.0));
        }
    }
    let mut plot = Plot::new(
        "Mean stopped sum of the excursion walk (±3 SE)",
        "γ",
        "E S",
        (args.gamma_min, args.gamma_max),
        (lo, hi),
    );
    plot.hline(-2.0, "#c0392b", "−2");
    plot.error_bars(&pts, "#2c3e50");
    if pts.is_empty() {
        plot.note("no valid cells");
    }
    out.svg("esn.svg", &plot.render())?;

    let mut params = Params::new();
    params.insert("points", json!(points));
    params.insert("trials", json!(trials));
    params.insert("cap", json!(cap));
    params.insert("gamma-min", json!(args.gamma_min));
    params.insert("gamma-max", json!(args.gamma_max));
    params.insert("p", json!(args.p));
    Ok(Finished { passed: true, params })
}

pub fn kac(seed: u64, args: &KacArgs, out: &mut Output) -> Result<Finished> {
    let s = &args.system;
    let (sys, probs) = new_system(s.a, s.gamma, s.p)?;
    let config = orbit_config(seed, &args.orbit, 1)?;
    let (report, measure) = kac_run(&sys, &probs, &config)?;
    let passed = report.residual < args.tol && report.exit_mismatches == 0;
    out.json(
        "kac.json",
        &json!({
            "report": report,
            "mu_m": measure.mu_m(),
            "tolerance": args.tol,
            "pass": passed,
        }),
    )?;
    let mut params = Params::new();
    system_params(&mut params, s);
    orbit_params(&mut params, &args.orbit);
    params.insert("tol", json!(args.tol));
    Ok(Finished { passed, params })
}

pub fn wald(seed: u64, args: &WaldArgs, out: &mut Output) -> Result<Finished> {
    if args.trials == 0 || args.cap < 2 {
        return Err(usage("trials must be positive and cap at least 2"));
    }
    let side = match args.side {
        Side::Minus => WalkSide::Minus,
        Side::Plus => WalkSide::Plus,
    };
    let config = WalkConfig { trials: args.trials, cap: args.cap };
    let summary = walk_summary(args.p, args.gamma, side, seed, 0, &config)?;
    let residual = wald_residual(&summary);
    let three_se = 3.0 * summary.wald_defect.std_error;
    let passed = residual <= three_se && summary.censored_fraction < CENSOR_WARNING;
    out.json(
        "wald.json",
        &json!({
            "summary": summary,
            "residual": residual,
            "three_se": three_se,
            "censor_limit": CENSOR_WARNING,
            "pass": passed,
        }),
    )?;
    let mut params = Params::new();
    params.insert("gamma", json!(args.gamma));
    params.insert("p", json!(args.p));
    params.insert("trials", json!(args.trials));
    params.insert("cap", json!(args.cap));
    params.insert("side", json!(match args.side {
        Side::Minus => "minus",
        Side::Plus => "plus",
    }));
    Ok(Finished { passed, params })
}

pub fn measure(seed: u64, args: &MeasureArgs, out: &mut Output) -> Result<Finished> {
    let s = &args.system;
    let (sys, probs) = new_system(s.a, s.gamma, s.p)?;
    if args.bins == 0 || args.bins > 1 << 24 {
        return Err(usage(format!("bins = {} must lie in [1, 2^24]", args.bins)));
    }
    let config = orbit_config(seed, &args.orbit, args.bins as usize)?;
    let measure = estimate_measure(&sys, &probs, &config)?;
    let residual = stationarity_residual(&measure, &sys, &probs);
    let passed = residual <= args.tol;

    let (x0, x1) = (sys.x_plus(), sys.x_minus());
    let nb = measure.bins.len();
    let width = (x1 - x0) / nb as f64;
    let total = measure.total as f64;
    let edge = |k: usize| x0 + (x1 - x0) * k as f64 / nb as f64;
    let mut table = Table::new(&["x_lo", "x_hi", "count", "density"]);
    for (k, &c) in measure.bins.iter().enumerate() {
        table.push(vec![edge(k).into(), edge(k + 1).into(), c.into(), (c as f64 / total / width).into()]);
    }
    out.csv("measure.csv", &table)?;

    out.json(
        "measure.json",
        &json!({
            "x_plus": x0,
            "x_minus": x1,
            "total": measure.total,
            "mu_m": measure.mu_m(),
            "mu_left": measure.mu_left(),
            "mu_right": measure.mu_right(),
            "mass_l": measure.mass_l,
            "mass_c": measure.mass_c,
            "mass_r": measure.mass_r,
            "left_levels": measure.left_levels(),
            "right_levels": measure.right_levels(),
            "chi_pointwise": lyapunov_exponent(&measure, &sys, &probs, LyapunovMethod::Pointwise),
            "chi_interval_form": lyapunov_exponent(&measure, &sys, &probs, LyapunovMethod::IntervalForm),
            "stationarity_residual": residual,
            "tolerance": args.tol,
            "pass": passed,
        }),
    )?;

    let densities: Vec<f64> = measure.bins.iter().map(|&c| c as f64 / total / width).collect();
    let top = densities.iter().cloned().fold(0.0, f64::max);
    let mut plot = Plot::new(
        "Stationary measure on M (density of the total mass)",
        "x",
        "density",
        (x0, x1),
        (0.0, if top > 0.0 { top * 1.05 } else { 1.0 }),
    );
    for (k, &d) in densities.iter().enumerate() {
        if d > 0.0 {
            plot.rect(edge(k), edge(k + 1), 0.0, d, "#3b6fb6");
        }
    }
    out.svg("measure.svg", &plot.render())?;

    let mut params = Params::new();
    system_params(&mut params, s);
    orbit_params(&mut params, &args.orbit);
    params.insert("bins", json!(args.bins));
    params.insert("tol", json!(args.tol));
    Ok(Finished { passed, params })
}

pub fn walk_exact(args: &WalkExactArgs, out: &mut Output) -> Result<Finished> {
    let exact = exact_walk_stats(args.p, args.gamma, args.depth)?;
    out.json(
        "walk_exact.json",
        &json!({
            "gamma": args.gamma,
            "p": args.p,
            "depth": args.depth,
            "exact": exact,
            "hoeffding_tail": hoeffding_tail(args.p, args.gamma, args.depth - 1),
            "mu_m_walk_bound": outcome(&mu_m_walk_bound(exact.e_s, args.gamma)),
        }),
    )?;
    let mut params = Params::new();
    params.insert("gamma", json!(args.gamma));
    params.insert("p", json!(args.p));
    params.insert("depth", json!(args.depth));
    Ok(Finished { passed: true, params })
}
