use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "halfline",
    version,
    about = "Kernels, evolution and decay scans for -d²/dx² + α/x² on the half-line",
    long_about = None
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate a kernel at one point or on a square grid of points
    Kernel(KernelArgs),
    /// Evolve a Gaussian bump and write the state at time t
    Evolve(EvolveArgs),
    /// Weighted propagator sup over log-spaced t, with a power-law fit
    DispersiveScan(DispersiveArgs),
    /// Weighted Hilbert-Schmidt norms of the threshold expansion over log-spaced λ
    ThresholdScan(ThresholdArgs),
    /// Compare analytic routes with the finite-difference reference
    OracleCompare(OracleArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Coupling α of the inverse-square potential
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: f64,
    /// Output file; stdout when omitted
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum What {
    Density,
    Resolvent,
    Propagator,
    E0,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Route {
    Kernel,
    Hankel,
    Reference,
}

/// A weight exponent, or `max` for `ν + 1/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightArg {
    Max,
    Value(f64),
}

impl FromStr for WeightArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("max") {
            return Ok(WeightArg::Max);
        }
        s.parse::<f64>()
            .map(WeightArg::Value)
            .map_err(|_| format!("expected a number or \"max\", got {s:?}"))
    }
}

#[derive(Debug, Args)]
pub struct KernelArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum)]
    pub what: What,
    /// Spectral parameter (density, resolvent)
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Time (propagator); negative values allowed
    #[arg(long, allow_hyphen_values = true)]
    pub t: Option<f64>,
    #[arg(long)]
    pub x: Option<f64>,
    #[arg(long)]
    pub y: Option<f64>,
    /// Side of the square sampling grid when --x/--y are omitted
    #[arg(long, default_value_t = 10.0)]
    pub x_max: f64,
    /// Points per axis of the sampling grid
    #[arg(long, default_value_t = 20)]
    pub grid_n: usize,
}

#[derive(Debug, Args)]
pub struct BumpArgs {
    /// Center of the initial bump exp(-((x - c)/w)²)
    #[arg(long, default_value_t = 5.0)]
    pub center: f64,
    /// Width of the initial bump
    #[arg(long, default_value_t = 1.0)]
    pub width: f64,
}

#[derive(Debug, Args)]
pub struct EvolveArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, allow_hyphen_values = true)]
    pub t: f64,
    #[command(flatten)]
    pub bump: BumpArgs,
    #[arg(long, value_enum, default_value_t = Route::Kernel)]
    pub route: Route,
    /// Output radius; the ballistic radius when omitted (box length for the reference route)
    #[arg(long)]
    pub x_max: Option<f64>,
    /// Interior nodes of the reference route
    #[arg(long, default_value_t = 4000)]
    pub grid_n: usize,
}

#[derive(Debug, Args)]
pub struct DispersiveArgs {
    #[command(flatten)]
    pub common: Common,
    /// Weight exponent in [0, ν + 1/2], or "max"
    #[arg(long)]
    pub s: WeightArg,
    #[arg(long, default_value_t = 10.0)]
    pub t_min: f64,
    #[arg(long, default_value_t = 1000.0)]
    pub t_max: f64,
    #[arg(long, default_value_t = 25)]
    pub t_points: usize,
    /// Initial sup-search radius (default 10·sqrt(2t), doubled until the boundary check passes)
    #[arg(long)]
    pub x_max: Option<f64>,
    /// Points per axis of the geometric search grid
    #[arg(long, default_value_t = 600)]
    pub grid_n: usize,
    /// Also measure the weighted L² decay with exponent β > s + 1/2
    #[arg(long)]
    pub beta: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ThresholdArgs {
    #[command(flatten)]
    pub common: Common,
    /// Weight exponent; must exceed ν + 1
    #[arg(long, conflicts_with = "eps")]
    pub s: Option<f64>,
    /// Sets s = ν + 1 + eps
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long, default_value_t = 1e-6)]
    pub lambda_min: f64,
    #[arg(long, default_value_t = 1e-2)]
    pub lambda_max: f64,
    #[arg(long, default_value_t = 9)]
    pub lambda_points: usize,
    /// Truncation radius (default 10⁴/sqrt(λ))
    #[arg(long)]
    pub x_max: Option<f64>,
    /// Quadrature panels per wavelength 2π/sqrt(λ)
    #[arg(long, default_value_t = 8)]
    pub grid_n: usize,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub common: Common,
    /// density: Stone formula against the analytic density; propagator: three evolution routes
    #[arg(long, value_enum, default_value_t = What::Propagator)]
    pub what: What,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    /// Imaginary shift of the Stone formula
    #[arg(long, default_value_t = 0.05)]
    pub eps: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub t: f64,
    #[command(flatten)]
    pub bump: BumpArgs,
    /// Box length of the finite-difference reference (default 200 for density, ballistic radius + 10 for propagator)
    #[arg(long)]
    pub x_max: Option<f64>,
    /// Interior nodes of the finite-difference reference
    #[arg(long, default_value_t = 4000)]
    pub grid_n: usize,
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn weight_argument() {
        assert_eq!("max".parse::<WeightArg>(), Ok(WeightArg::Max));
        assert_eq!("MAX".parse::<WeightArg>(), Ok(WeightArg::Max));
        assert_eq!("0.75".parse::<WeightArg>(), Ok(WeightArg::Value(0.75)));
        assert!("most".parse::<WeightArg>().is_err());
    }

    #[test]
    fn definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn negative_values_parse() {
        let cli = Cli::try_parse_from([
            "halfline",
            "kernel",
            "--alpha",
            "-0.2",
            "--what",
            "propagator",
            "--t",
            "-1",
        ])
        .unwrap();
        match cli.command {
            Command::Kernel(k) => {
                assert_eq!(k.common.alpha, -0.2);
                assert_eq!(k.t, Some(-1.0));
            }
            _ => panic!("wrong subcommand"),
        }
    }
}
