use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "amdim", version, about = "Experiments on symmetric AM random interval systems")]
pub struct Cli {
    /// Seed for every random stream (AMDIM_SEED overrides it when set)
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Worker threads; results do not depend on this
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Output directory
    #[arg(long, global = true, default_value = "amdim-out")]
    pub out: PathBuf,

    /// Output formats (repeatable); defaults to all
    #[arg(long = "format", global = true, value_enum)]
    pub formats: Vec<Format>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Rasterize the (p, γ) region where dim μ < 1 for small a
    Region(RegionArgs),
    /// Closed-form and empirical dimension bounds at one parameter point
    Dimension(DimensionArgs),
    /// Sweep E₋S_{N₋} over γ
    EsnSweep(EsnArgs),
    /// Check Kac's identity for returns to M
    Kac(KacArgs),
    /// Check Wald's identity for the stopping-time walk
    Wald(WaldArgs),
    /// Estimate the stationary measure and its stationarity residual
    Measure(MeasureArgs),
    /// Exact walk expectations by dynamic programming
    WalkExact(WalkExactArgs),
}

#[derive(Debug, Args)]
pub struct RegionArgs {
    #[arg(long, default_value = "0.5", value_parser = parse_real)]
    pub p_min: f64,
    #[arg(long, default_value = "0.51", value_parser = parse_real)]
    pub p_max: f64,
    #[arg(long, default_value = "1", value_parser = parse_real)]
    pub gamma_min: f64,
    #[arg(long, default_value = "1.6", value_parser = parse_real)]
    pub gamma_max: f64,
    /// Grid size as NXxNY
    #[arg(long, default_value = "200x200", value_parser = parse_grid)]
    pub grid: (usize, usize),
}

#[derive(Debug, Args)]
pub struct SystemArgs {
    /// Contraction rate a in (0, 1); accepts forms like 0.01, 1e-5 or 2^-128
    #[arg(long, value_parser = parse_real)]
    pub a: f64,
    #[arg(long, value_parser = parse_real)]
    pub gamma: f64,
    /// Probability p₋ of the map f₋
    #[arg(long, default_value = "0.5", value_parser = parse_real)]
    pub p: f64,
}

#[derive(Debug, Args)]
pub struct OrbitArgs {
    /// Retained orbit length
    #[arg(long = "len", visible_alias = "orbit-len", default_value = "1e7", value_parser = parse_count)]
    pub len: u64,
    #[arg(long, default_value = "1e4", value_parser = parse_count)]
    pub burn_in: u64,
}

#[derive(Debug, Args)]
pub struct DimensionArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    #[command(flatten)]
    pub orbit: OrbitArgs,
}

#[derive(Debug, Args)]
pub struct EsnArgs {
    #[arg(long, default_value = "50", value_parser = parse_count)]
    pub points: u64,
    #[arg(long, default_value = "2000", value_parser = parse_count)]
    pub trials: u64,
    #[arg(long, default_value = "3000", value_parser = parse_count)]
    pub cap: u64,
    #[arg(long, default_value = "1", value_parser = parse_real)]
    pub gamma_min: f64,
    #[arg(long, default_value = "3", value_parser = parse_real)]
    pub gamma_max: f64,
    #[arg(long, default_value = "0.5", value_parser = parse_real)]
    pub p: f64,
    /// Full protocol: 4000 points, 40000 trials, cap 3000
    #[arg(long)]
    pub full: bool,
}

#[derive(Debug, Args)]
pub struct KacArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    #[command(flatten)]
    pub orbit: OrbitArgs,
    /// Largest accepted |mean(n_M)·μ̂(M) − 1|
    #[arg(long, default_value = "0.02", value_parser = parse_real)]
    pub tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Side {
    Minus,
    Plus,
}

#[derive(Debug, Args)]
pub struct WaldArgs {
    #[arg(long, value_parser = parse_real)]
    pub gamma: f64,
    #[arg(long, default_value = "0.5", value_parser = parse_real)]
    pub p: f64,
    #[arg(long, default_value = "1e5", value_parser = parse_count)]
    pub trials: u64,
    #[arg(long, default_value = "3000", value_parser = parse_count)]
    pub cap: u64,
    #[arg(long, value_enum, default_value = "minus")]
    pub side: Side,
}

#[derive(Debug, Args)]
pub struct MeasureArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    #[command(flatten)]
    pub orbit: OrbitArgs,
    #[arg(long, default_value = "1000", value_parser = parse_count)]
    pub bins: u64,
    /// Largest accepted stationarity residual
    #[arg(long, default_value = "0.005", value_parser = parse_real)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct WalkExactArgs {
    #[arg(long, value_parser = parse_real)]
    pub gamma: f64,
    #[arg(long, default_value = "0.5", value_parser = parse_real)]
    pub p: f64,
    #[arg(long, default_value = "400", value_parser = parse_count)]
    pub depth: u64,
}

/// Real number, also accepting `B^E` powers such as `2^-128`.
pub fn parse_real(s: &str) -> Result<f64, String> {
    let s = s.trim();
    let value = match s.split_once('^') {
        Some((base, exp)) => {
            let base: f64 = base.parse().map_err(|_| format!("bad base in {s:?}"))?;
            let exp: f64 = exp.parse().map_err(|_| format!("bad exponent in {s:?}"))?;
            base.powf(exp)
        }
        None => s.parse().map_err(|_| format!("{s:?} is not a number"))?,
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(format!("{s:?} is not finite"))
    }
}

/// Non-negative integer count, also accepting forms like `1e7` or `10_000`.
pub fn parse_count(s: &str) -> Result<u64, String> {
    let cleaned = s.trim().replace('_', "");
    if let Ok(n) = cleaned.parse::<u64>() {
        return Ok(n);
    }
    let x: f64 = cleaned.parse().map_err(|_| format!("{s:?} is not a count"))?;
    if x >= 0.0 && x.fract() == 0.0 && x <= (1u64 << 53) as f64 {
        Ok(x as u64)
    } else {
        Err(format!("{s:?} is not a whole number in range"))
    }
}

/// `NXxNY`, both at least 2.
pub fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (x, y) = s
        .trim()
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("grid {s:?} must look like 400x400"))?;
    let nx = parse_count(x)? as usize;
    let ny = parse_count(y)? as usize;
    if nx < 2 || ny < 2 {
        return Err(format!("grid {s:?} needs at least 2 points per axis"));
    }
    Ok((nx, ny))
}
