//! `burgers`: command-line driver for the Burgers asymptotics library.
//!
//! Configuration is layered: built-in defaults, then `--config FILE`, then
//! `--datum FILE`, then `BURGERS_<SECTION>__<KEY>` environment variables,
//! then flags. All quantities are dimensionless (unit viscosity).

mod commands;
mod config;
mod output;

use clap::{Args, Parser, Subcommand, ValueEnum};
use commands::{Failure, Sink};
use config::{ConfigError, RunConfig};
use std::path::PathBuf;
use std::process::ExitCode;
use toml::{Table, Value};

#[derive(Parser)]
#[command(name = "burgers", version, about = "Long-time asymptotics of the viscous Burgers equation f_t + f f_x = f_xx")]
struct Cli {
    /// TOML configuration file with [datum], [quadrature], [tolerances] and per-command sections [default: none]
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// TOML file whose top-level keys are merged into [datum] [default: none]
    #[arg(long, global = true, value_name = "FILE")]
    datum: Option<PathBuf>,

    /// Directory for <command>.json and <command>.csv [default: none, stdout only]
    #[arg(long, global = true, value_name = "DIR")]
    out_dir: Option<String>,

    /// Print the CSV table on stdout instead of the JSON summary [default: off]
    #[arg(long, global = true)]
    csv: bool,

    /// Print the effective configuration as TOML after validation and exit [default: off]
    #[arg(long, global = true)]
    dump_config: bool,

    #[command(flatten)]
    datum_flags: DatumFlags,

    #[command(flatten)]
    quad: QuadFlags,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Single,
    TwoTerm,
    Nested,
}

#[derive(Clone, Copy, ValueEnum)]
enum StudyArg {
    Profile,
    Shift,
    Gap,
}

#[derive(Args)]
struct DatumFlags {
    /// Datum family [default: single]
    #[arg(long, global = true, value_enum)]
    family: Option<FamilyArg>,
    /// Leading tail amplitude kappa1 > 0 (dimensionless) [default: 1]
    #[arg(long, global = true)]
    kappa1: Option<f64>,
    /// Leading tail exponent alpha in (0, 1) [default: 0.5]
    #[arg(long, global = true)]
    alpha: Option<f64>,
    /// Second tail amplitude kappa2 > 0 (two-term datum) [default: 1]
    #[arg(long, global = true)]
    kappa2: Option<f64>,
    /// Second tail exponent beta in (alpha, (1+alpha)/2) (two-term datum) [default: 0.6]
    #[arg(long, global = true)]
    beta: Option<f64>,
    /// Core length eps > 0 that regularizes the tails at the origin (length units) [default: 1]
    #[arg(long, global = true)]
    eps: Option<f64>,
    /// Number of summed tails in the nested datum [default: 6]
    #[arg(long, global = true)]
    n_max: Option<i64>,
}

#[derive(Args)]
struct QuadFlags {
    /// Relative agreement between successive quadrature levels [default: 1e-9]
    #[arg(long, global = true)]
    rel_tol: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the self-similar solution t^(alpha/(1+alpha)) f at one point or on a z grid
    Solve {
        /// Rescaled position z = x / t^(1/(1+alpha)) (dimensionless) [default: 0]
        #[arg(long, allow_hyphen_values = true)]
        z: Option<f64>,
        /// Physical position x (length units); overrides --z and reports f(x, t) [default: unset]
        #[arg(long, allow_hyphen_values = true)]
        x: Option<f64>,
        /// Time t > 0 (time units) [default: 1e6]
        #[arg(long)]
        t: Option<f64>,
        /// Sweep start in z (dimensionless) [default: unset]
        #[arg(long, allow_hyphen_values = true)]
        z_min: Option<f64>,
        /// Sweep end in z (dimensionless) [default: unset]
        #[arg(long, allow_hyphen_values = true)]
        z_max: Option<f64>,
        /// Sweep point count, at least 2 [default: unset]
        #[arg(long)]
        nz: Option<i64>,
    },
    /// Scan the exponent landscape and report its critical points
    Landscape {
        /// Rescaled position z (dimensionless) [default: 2.6]
        #[arg(long, allow_hyphen_values = true)]
        z: Option<f64>,
        /// Time t > 0 (time units) [default: 1e8]
        #[arg(long)]
        t: Option<f64>,
        /// Window start in y (dimensionless) [default: automatic]
        #[arg(long, allow_hyphen_values = true)]
        y_min: Option<f64>,
        /// Window end in y (dimensionless) [default: automatic]
        #[arg(long, allow_hyphen_values = true)]
        y_max: Option<f64>,
        /// Scan spacing in y (dimensionless) [default: window width / 4000]
        #[arg(long)]
        resolution: Option<f64>,
        /// Radius in y excluded around the global maximum for the gap (dimensionless) [default: 1]
        #[arg(long)]
        exclusion_radius: Option<f64>,
    },
    /// Critical point z_c, limit profile values and correction constants
    Critical {
        /// Comma-separated second-tail exponents (dimensionless) [default: 0.55,0.6,0.7]
        #[arg(long, value_delimiter = ',')]
        betas: Option<Vec<f64>>,
    },
    /// Convergence-rate studies over a geometric time grid
    Rates {
        /// Study: profile, shift or gap [default: profile]
        #[arg(long, value_enum)]
        study: Option<StudyArg>,
        /// Comma-separated offsets z - z_c for the profile study (dimensionless) [default: -1,-0.5,0.5,1]
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        offsets: Option<Vec<f64>>,
        /// Zoom coordinate for the gap study (dimensionless) [default: 1]
        #[arg(long, allow_hyphen_values = true)]
        x: Option<f64>,
        /// First time (time units) [default: 1e4]
        #[arg(long)]
        t_min: Option<f64>,
        /// Last time (time units) [default: 1e9]
        #[arg(long)]
        t_max: Option<f64>,
        /// Times per decade [default: 6]
        #[arg(long)]
        per_decade: Option<i64>,
        /// Gap exclusion radius in y (dimensionless) [default: 1]
        #[arg(long)]
        exclusion_radius: Option<f64>,
    },
    /// First correction at the discontinuity for the two-term datum
    Prop11 {
        /// Comma-separated nonzero zoom coordinates (dimensionless) [default: -1,1]
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        xs: Option<Vec<f64>>,
        /// First time (time units) [default: 1e5]
        #[arg(long)]
        t_min: Option<f64>,
        /// Last time (time units) [default: 1e9]
        #[arg(long)]
        t_max: Option<f64>,
        /// Times per decade [default: 4]
        #[arg(long)]
        per_decade: Option<i64>,
    },
    /// Partial-sum expansion at the discontinuity for the nested datum
    Thm12 {
        /// Expansion order N, with N + 2 summed tails required [default: 1]
        #[arg(long)]
        order: Option<i64>,
        /// Comma-separated nonzero zoom coordinates (dimensionless) [default: -1,1]
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        xs: Option<Vec<f64>>,
        /// First time (time units) [default: 1e5]
        #[arg(long)]
        t_min: Option<f64>,
        /// Last time (time units) [default: 1e9]
        #[arg(long)]
        t_max: Option<f64>,
        /// Times per decade [default: 2]
        #[arg(long)]
        per_decade: Option<i64>,
    },
    /// Finite-difference reference solution on [-L, L]
    Oracle {
        /// Final time (time units) [default: 1]
        #[arg(long)]
        t_final: Option<f64>,
        /// Domain half-width L (length units) [default: 40]
        #[arg(long = "L", value_name = "L")]
        half_width: Option<f64>,
        /// Grid nodes, odd so that x = 0 is a node [default: 4001]
        #[arg(long)]
        nx: Option<i64>,
        /// Time step (time units) [default: 0.01]
        #[arg(long)]
        dt: Option<f64>,
        /// Comma-separated extra snapshot times in (0, t_final) (time units) [default: none]
        #[arg(long, value_delimiter = ',')]
        snapshots: Option<Vec<f64>>,
        /// Compare the final state against the Hopf-Cole solution on |x| <= 20 [default: off]
        #[arg(long)]
        compare: bool,
    },
    /// Limit profile and finite-time solution on a z grid, for plotting
    ProfilePlotData {
        /// Grid start in z (dimensionless) [default: z_c - 3]
        #[arg(long, allow_hyphen_values = true)]
        z_min: Option<f64>,
        /// Grid end in z (dimensionless) [default: z_c + 3]
        #[arg(long, allow_hyphen_values = true)]
        z_max: Option<f64>,
        /// Grid points, at least 2 [default: 400]
        #[arg(long)]
        nz: Option<i64>,
        /// Time for the solution column (time units) [default: 1e6]
        #[arg(long)]
        t: Option<f64>,
    },
}

fn put<V: Into<Value>>(t: &mut Table, section: &str, key: &str, v: Option<V>) {
    if let Some(v) = v {
        config::insert(t, section, key, v.into());
    }
}

fn floats(v: Option<Vec<f64>>) -> Option<Value> {
    v.map(|xs| Value::Array(xs.into_iter().map(Value::Float).collect()))
}

impl FamilyArg {
    fn name(self) -> &'static str {
        match self {
            FamilyArg::Single => "single",
            FamilyArg::TwoTerm => "two_term",
            FamilyArg::Nested => "nested",
        }
    }
}

impl StudyArg {
    fn name(self) -> &'static str {
        match self {
            StudyArg::Profile => "profile",
            StudyArg::Shift => "shift",
            StudyArg::Gap => "gap",
        }
    }
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Solve { .. } => "solve",
            Command::Landscape { .. } => "landscape",
            Command::Critical { .. } => "critical",
            Command::Rates { .. } => "rates",
            Command::Prop11 { .. } => "prop11",
            Command::Thm12 { .. } => "thm12",
            Command::Oracle { .. } => "oracle",
            Command::ProfilePlotData { .. } => "profile-plot-data",
        }
    }

    fn overrides(self, t: &mut Table) {
        match self {
            Command::Solve { z, x, t: time, z_min, z_max, nz } => {
                put(t, "solve", "z", z);
                put(t, "solve", "x", x);
                put(t, "solve", "t", time);
                put(t, "solve", "z_min", z_min);
                put(t, "solve", "z_max", z_max);
                put(t, "solve", "nz", nz);
            }
            Command::Landscape { z, t: time, y_min, y_max, resolution, exclusion_radius } => {
                put(t, "landscape", "z", z);
                put(t, "landscape", "t", time);
                put(t, "landscape", "y_min", y_min);
                put(t, "landscape", "y_max", y_max);
                put(t, "landscape", "resolution", resolution);
                put(t, "landscape", "exclusion_radius", exclusion_radius);
            }
            Command::Critical { betas } => put(t, "critical", "betas", floats(betas)),
            Command::Rates { study, offsets, x, t_min, t_max, per_decade, exclusion_radius } => {
                put(t, "rates", "study", study.map(StudyArg::name));
                put(t, "rates", "offsets", floats(offsets));
                put(t, "rates", "x", x);
                put(t, "rates", "t_min", t_min);
                put(t, "rates", "t_max", t_max);
                put(t, "rates", "per_decade", per_decade);
                put(t, "rates", "exclusion_radius", exclusion_radius);
            }
            Command::Prop11 { xs, t_min, t_max, per_decade } => {
                put(t, "prop11", "xs", floats(xs));
                put(t, "prop11", "t_min", t_min);
                put(t, "prop11", "t_max", t_max);
                put(t, "prop11", "per_decade", per_decade);
            }
            Command::Thm12 { order, xs, t_min, t_max, per_decade } => {
                put(t, "thm12", "order", order);
                put(t, "thm12", "xs", floats(xs));
                put(t, "thm12", "t_min", t_min);
                put(t, "thm12", "t_max", t_max);
                put(t, "thm12", "per_decade", per_decade);
            }
            Command::Oracle { t_final, half_width, nx, dt, snapshots, compare } => {
                put(t, "oracle", "t_final", t_final);
                put(t, "oracle", "half_width", half_width);
                put(t, "oracle", "nx", nx);
                put(t, "oracle", "dt", dt);
                put(t, "oracle", "snapshots", floats(snapshots));
                put(t, "oracle", "compare", compare.then_some(true));
            }
            Command::ProfilePlotData { z_min, z_max, nz, t: time } => {
                put(t, "profile_plot", "z_min", z_min);
                put(t, "profile_plot", "z_max", z_max);
                put(t, "profile_plot", "nz", nz);
                put(t, "profile_plot", "t", time);
            }
        }
    }
}

fn read(path: &PathBuf, key: &str) -> Result<Table, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::new(key, format!("cannot read {}: {e}", path.display())))?;
    config::parse_file(&text, key)
}

fn layered(cli: Cli) -> Result<(&'static str, RunConfig), ConfigError> {
    let mut table = Table::new();
    if let Some(path) = &cli.config {
        config::merge(&mut table, read(path, "config")?);
    }
    if let Some(path) = &cli.datum {
        let mut datum = Table::new();
        datum.insert("datum".into(), Value::Table(read(path, "datum")?));
        config::merge(&mut table, datum);
    }
    config::merge(&mut table, config::env_overrides(std::env::vars())?);

    let mut flags = Table::new();
    let d = &cli.datum_flags;
    put(&mut flags, "datum", "family", d.family.map(FamilyArg::name));
    put(&mut flags, "datum", "kappa1", d.kappa1);
    put(&mut flags, "datum", "alpha", d.alpha);
    put(&mut flags, "datum", "kappa2", d.kappa2);
    put(&mut flags, "datum", "beta", d.beta);
    put(&mut flags, "datum", "eps", d.eps);
    put(&mut flags, "datum", "n_max", d.n_max);
    put(&mut flags, "quadrature", "rel_tol", cli.quad.rel_tol);
    put(&mut flags, "output", "dir", cli.out_dir.clone());
    let name = cli.command.name();
    cli.command.overrides(&mut flags);
    config::merge(&mut table, flags);
    Ok((name, RunConfig::from_table(table)?))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (dump, csv_stdout) = (cli.dump_config, cli.csv);
    let (command, cfg) = match layered(cli) {
        Ok(v) => v,
        Err(e) => return config_failure(&e),
    };
    if dump {
        if let Err(e) = commands::validate(command, &cfg) {
            return config_failure(&e);
        }
        print!("{}", cfg.to_toml());
        return ExitCode::SUCCESS;
    }
    let sink = Sink {
        dir: cfg.output.dir.as_deref(),
        csv_stdout,
        hash: cfg.hash(),
    };
    match commands::run(command, &cfg, &sink) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => config_failure(&e),
        Err(Failure::Numerical(e)) => {
            let report = serde_json::json!({
                "status": "numerical_failure",
                "message": e.to_string(),
                "context": e,
            });
            eprintln!("{}", serde_json::to_string_pretty(&report).unwrap_or_else(|_| e.to_string()));
            ExitCode::from(1)
        }
        Err(Failure::Io(e)) => {
            let report = serde_json::json!({ "status": "io_failure", "message": e.to_string() });
            eprintln!("{report}");
            ExitCode::from(1)
        }
    }
}

fn config_failure(e: &ConfigError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(2)
}
