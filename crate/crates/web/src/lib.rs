//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Each export returns a flat `Float64Array`/`Uint8Array` so the page can
//! draw it on a canvas without any glue beyond the generated module.

use amdim::measure::{estimate_measure, stationarity_residual};
use amdim::region::rasterize_region;
use amdim::system::new_system;
use amdim::walk::{esn_grid, walk_summary};
use amdim::{MeasureConfig, WalkConfig, WalkSide};
use wasm_bindgen::prelude::*;

/// Cell flags of [`region_raster`].
pub const EXPONENTS_POSITIVE: u8 = 1;
pub const CONTRACTION_OK: u8 = 2;
pub const DIM_LT_ONE: u8 = 4;
pub const INVALID: u8 = 255;

const MAX_CELLS: usize = 1 << 20;
const MAX_WALKS: u64 = 50_000_000;
const MAX_ORBIT: u64 = 20_000_000;

/// Row-major flags for an `nx × ny` grid over `p` (columns) and `γ` (rows).
pub fn region_flags(
    p_min: f64,
    p_max: f64,
    gamma_min: f64,
    gamma_max: f64,
    nx: usize,
    ny: usize,
) -> Result<Vec<u8>, String> {
    if nx.saturating_mul(ny) > MAX_CELLS {
        return Err(format!("grid {nx}x{ny} has more than {MAX_CELLS} cells"));
    }
    let grid = rasterize_region((p_min, p_max), (gamma_min, gamma_max), (nx, ny)).map_err(|e| e.to_string())?;
    Ok(grid
        .cells
        .iter()
        .map(|c| match c {
            Ok(v) => {
                let mut f = 0;
                if v.exponents_positive {
                    f |= EXPONENTS_POSITIVE;
                }
                if v.contraction_ok {
                    f |= CONTRACTION_OK;
                }
                if v.dim_lt_one {
                    f |= DIM_LT_ONE;
                }
                f
            }
            Err(_) => INVALID,
        })
        .collect())
}

/// `[γ, mean S, SE of S]` triples for the minus walk; failed cells are NaN.
pub fn esn_triples(
    p: f64,
    gamma_min: f64,
    gamma_max: f64,
    points: usize,
    trials: u64,
    cap: u64,
    seed: u64,
) -> Result<Vec<f64>, String> {
    if gamma_min.partial_cmp(&gamma_max) != Some(std::cmp::Ordering::Less) || points == 0 {
        return Err("need gamma_min < gamma_max and at least one point".into());
    }
    if (points as u64).saturating_mul(trials) > MAX_WALKS {
        return Err(format!("points x trials exceeds {MAX_WALKS}"));
    }
    let config = WalkConfig { trials: trials.max(1), cap: cap.max(2) };
    let mut out = Vec::with_capacity(3 * points);
    for (i, g) in esn_grid(gamma_min, gamma_max, points).into_iter().enumerate() {
        out.push(g);
        match walk_summary(p, g, WalkSide::Minus, seed, i as u64, &config) {
            Ok(s) => {
                out.push(s.mean_s.value);
                out.push(s.mean_s.std_error);
            }
            Err(_) => out.extend([f64::NAN, f64::NAN]),
        }
    }
    Ok(out)
}

/// `[x₊, x₋, μ(M), μ([0, x₊)), stationarity residual, d₀, …, d_{bins−1}]`
/// where `d_k` is the density (w.r.t. total mass) of bin `k` of `M`.
pub fn histogram(a: f64, gamma: f64, p: f64, length: u64, bins: usize, seed: u64) -> Result<Vec<f64>, String> {
    if !(100..=MAX_ORBIT).contains(&length) {
        return Err(format!("orbit length must lie in [100, {MAX_ORBIT}]"));
    }
    if bins == 0 || bins > 1 << 16 {
        return Err("bins must lie in [1, 65536]".into());
    }
    let (sys, probs) = new_system(a, gamma, p).map_err(|e| e.to_string())?;
    let config = MeasureConfig { seed, stream_id: 0, burn_in: 10_000, length, bins };
    let m = estimate_measure(&sys, &probs, &config).map_err(|e| e.to_string())?;
    let (x0, x1) = (sys.x_plus(), sys.x_minus());
    let width = (x1 - x0) / bins as f64;
    let total = m.total as f64;
    let mut out = vec![
        x0,
        x1,
        m.mu_m().value,
        m.mu_left().value,
        stationarity_residual(&m, &sys, &probs),
    ];
    out.extend(m.bins.iter().map(|&c| c as f64 / total / width));
    Ok(out)
}

#[wasm_bindgen]
pub fn region_raster(
    p_min: f64,
    p_max: f64,
    gamma_min: f64,
    gamma_max: f64,
    nx: usize,
    ny: usize,
) -> Result<Vec<u8>, JsError> {
    region_flags(p_min, p_max, gamma_min, gamma_max, nx, ny).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn esn_curve(
    p: f64,
    gamma_min: f64,
    gamma_max: f64,
    points: usize,
    trials: u32,
    cap: u32,
    seed: u32,
) -> Result<Vec<f64>, JsError> {
    esn_triples(p, gamma_min, gamma_max, points, trials as u64, cap as u64, seed as u64)
        .map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn stationary_histogram(
    a: f64,
    gamma: f64,
    p: f64,
    length: u32,
    bins: usize,
    seed: u32,
) -> Result<Vec<f64>, JsError> {
    histogram(a, gamma, p, length as u64, bins, seed as u64).map_err(|e| JsError::new(&e))
}
