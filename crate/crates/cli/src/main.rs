//! Command-line front end for the queueing-game library.
//!
//! One verb per invocation: evaluate action utilities against a fixed
//! population mixture, solve for the equilibrium at a point, scan a
//! rectangle of the `(R, C_I)` plane, run the discrete-event simulation,
//! verify an equilibrium document, or tabulate a threshold crossing.
//!
//! Output goes to stdout (or `--out`) as JSON, or CSV for the grid verbs.
//! Identical invocations produce byte-identical output; `STRATQ_THREADS`
//! caps the worker pool without affecting results or ordering.
//!
//! Exit codes: 0 on success, 2 on input validation errors (the message names
//! the violated constraint), 1 on solver failures and failed verifications.

mod fmt;

use std::io::Read;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use fmt::sig12;
use stratq::welfare::CrossingRow;
use stratq::{
    BoundaryCurves64, Equilibrium64, GridRow64, ModelParams64, Region, Strategy64,
};

const EXIT_SOLVER: i32 = 1;
const EXIT_VALIDATION: i32 = 2;

#[derive(Parser)]
#[command(
    name = "stratq",
    version,
    about = "Equilibria of an M/M/1 queue with costly queue-length inspection"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the three action utilities against a fixed population mixture.
    Eval {
        #[command(flatten)]
        params: ParamArgs,
        #[command(flatten)]
        mix: MixArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Solve for the unique equilibrium at one parameter point (JSON).
    Equilibrium {
        #[command(flatten)]
        params: ParamArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Scan a rectangle of the (R, C_I) plane: region label, equilibrium
    /// mixture, welfare, and welfare slopes per grid cell.
    RegionMap {
        #[command(flatten)]
        params: ParamArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Identical scan to region-map (same schema); named for producing
    /// welfare contour data.
    WelfareContour {
        #[command(flatten)]
        params: ParamArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Discrete-event simulation with probe-based utility estimates (JSON).
    Simulate {
        #[command(flatten)]
        params: ParamArgs,
        #[command(flatten)]
        mix: MixArgs,
        /// Total clock firings (arrivals + services + probes) to simulate.
        #[arg(long, default_value_t = 1_000_000)]
        horizon: u64,
        /// RNG seed; the full result is a deterministic function of it.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Re-check an equilibrium document (as emitted by `equilibrium`) as an
    /// epsilon-best response. Exits 1 if the check fails.
    Verify {
        /// Path to the equilibrium JSON; reads stdin when omitted.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Best-response slack: every action carrying mass must come within
        /// this of the best action's utility.
        #[arg(long, default_value_t = 1e-8)]
        eps: f64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Compare the inspect/join equilibrium exactly on threshold lines
    /// R = x*c_w/mu with points just past them.
    CrossingReport {
        #[command(flatten)]
        params: ParamArgs,
        /// Threshold line indices (R = x*c_w/mu), comma-separated or repeated.
        #[arg(long = "x", value_delimiter = ',', default_values_t = vec![2u32, 3, 4])]
        xs: Vec<u32>,
        /// Steps past the line, comma-separated or repeated.
        #[arg(long = "eps", value_delimiter = ',', default_values_t = vec![1e-3, 1e-4, 1e-5, 1e-6])]
        eps: Vec<f64>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        #[command(flatten)]
        out: OutArgs,
    },
}

/// Model parameters: five individual flags, or one JSON object.
#[derive(Args)]
struct ParamArgs {
    /// Arrival rate (requires lambda < mu).
    #[arg(long)]
    lambda: Option<f64>,
    /// Service rate.
    #[arg(long)]
    mu: Option<f64>,
    /// Waiting cost per unit time in system.
    #[arg(long = "cw")]
    cw: Option<f64>,
    /// Service reward R (requires R > c_w/mu).
    #[arg(long)]
    reward: Option<f64>,
    /// Queue-length inspection fee C_I (> 0).
    #[arg(long = "inspect-cost")]
    inspect_cost: Option<f64>,
    /// All parameters as JSON: {"lambda":..,"mu":..,"c_w":..,"R":..,"C_I":..}.
    #[arg(
        long = "params-json",
        conflicts_with_all = ["lambda", "mu", "cw", "reward", "inspect_cost"]
    )]
    params_json: Option<String>,
}

#[derive(Args)]
struct MixArgs {
    /// Population share that pays to inspect.
    #[arg(long = "p-inspect")]
    p_inspect: f64,
    /// Population share that joins blindly.
    #[arg(long = "p-join")]
    p_join: f64,
}

#[derive(Args)]
struct GridArgs {
    #[arg(long = "r-min")]
    r_min: f64,
    #[arg(long = "r-max")]
    r_max: f64,
    #[arg(long = "ci-min")]
    ci_min: f64,
    #[arg(long = "ci-max")]
    ci_max: f64,
    /// Number of reward grid points (inclusive endpoints).
    #[arg(long = "nr")]
    n_r: usize,
    /// Number of fee grid points (inclusive endpoints).
    #[arg(long = "nci")]
    n_ci: usize,
}

#[derive(Args)]
struct OutArgs {
    /// Write output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

struct CliError {
    code: i32,
    message: String,
}

impl CliError {
    fn validation(message: impl Into<String>) -> Self {
        CliError { code: EXIT_VALIDATION, message: message.into() }
    }
}

impl From<stratq::Error> for CliError {
    fn from(e: stratq::Error) -> Self {
        let code = match e {
            stratq::Error::NoConvergence { .. } | stratq::Error::TruncationTooSmall { .. } => {
                EXIT_SOLVER
            }
            _ => EXIT_VALIDATION,
        };
        CliError { code, message: e.to_string() }
    }
}

impl ParamArgs {
    /// Full parameter set: every field must be present (directly or via
    /// `--params-json`), except where `defaults` supplies scan placeholders
    /// for the reward and the fee.
    fn build_with(&self, defaults: Option<(f64, f64)>) -> Result<ModelParams64, CliError> {
        if let Some(json) = &self.params_json {
            return serde_json::from_str(json)
                .map_err(|e| CliError::validation(format!("--params-json: {e}")));
        }
        let need = |v: Option<f64>, flag: &str, default: Option<f64>| {
            v.or(default).ok_or_else(|| {
                CliError::validation(format!("missing --{flag} (or provide --params-json)"))
            })
        };
        let (r_def, c_def) = match defaults {
            Some((r, c)) => (Some(r), Some(c)),
            None => (None, None),
        };
        Ok(ModelParams64::new(
            need(self.lambda, "lambda", None)?,
            need(self.mu, "mu", None)?,
            need(self.cw, "cw", None)?,
            need(self.reward, "reward", r_def)?,
            need(self.inspect_cost, "inspect-cost", c_def)?,
        )?)
    }

    fn build(&self) -> Result<ModelParams64, CliError> {
        self.build_with(None)
    }
}

/// JSON document emitted by `equilibrium` and consumed by `verify`.
#[derive(Serialize, Deserialize)]
struct EquilibriumDoc {
    params: ModelParams64,
    region: Region,
    #[serde(rename = "P_I")]
    p_inspect: f64,
    #[serde(rename = "P_J")]
    p_join: f64,
    #[serde(rename = "P_B")]
    p_balk: f64,
    #[serde(rename = "U_I")]
    u_inspect: f64,
    #[serde(rename = "U_J")]
    u_join: f64,
    #[serde(rename = "SW")]
    sw: f64,
    boundary_values: BoundaryValues,
    adjacent: Vec<Region>,
}

#[derive(Serialize, Deserialize)]
struct BoundaryValues {
    c_i0: f64,
    c_i1: f64,
    c_b0_hat: Option<f64>,
    c_j0: Option<f64>,
}

fn equilibrium_doc(params: &ModelParams64, eq: &Equilibrium64) -> EquilibriumDoc {
    let curves = BoundaryCurves64::at(params);
    EquilibriumDoc {
        params: *params,
        region: eq.region,
        p_inspect: eq.strategy.p_inspect,
        p_join: eq.strategy.p_join,
        p_balk: eq.strategy.p_balk(),
        u_inspect: eq.utilities.u_inspect,
        u_join: eq.utilities.u_join,
        sw: eq.social_welfare,
        boundary_values: BoundaryValues {
            c_i0: curves.c_i0,
            c_i1: curves.c_i1,
            c_b0_hat: curves.c_b0_hat,
            c_j0: curves.c_j0_s3,
        },
        adjacent: eq.adjacent.clone(),
    }
}

/// Grid cell in wire form (shared by the CSV and JSON grid outputs).
#[derive(Serialize)]
struct GridRowOut {
    #[serde(rename = "R")]
    reward: f64,
    #[serde(rename = "C_I")]
    inspect_cost: f64,
    region: Region,
    #[serde(rename = "P_I")]
    p_inspect: f64,
    #[serde(rename = "P_J")]
    p_join: f64,
    #[serde(rename = "P_B")]
    p_balk: f64,
    #[serde(rename = "SW")]
    sw: f64,
    #[serde(rename = "dSW_dR")]
    d_sw_d_reward: f64,
    #[serde(rename = "dSW_dCI")]
    d_sw_d_inspect_cost: f64,
}

impl From<&GridRow64> for GridRowOut {
    fn from(r: &GridRow64) -> Self {
        GridRowOut {
            reward: r.reward,
            inspect_cost: r.inspect_cost,
            region: r.region,
            p_inspect: r.p_inspect,
            p_join: r.p_join,
            p_balk: r.p_balk,
            sw: r.sw,
            d_sw_d_reward: r.d_sw_d_reward,
            d_sw_d_inspect_cost: r.d_sw_d_inspect_cost,
        }
    }
}

fn grid_csv(rows: &[GridRow64]) -> String {
    let mut out = String::from("R,C_I,region,P_I,P_J,P_B,SW,dSW_dR,dSW_dCI\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            sig12(r.reward),
            sig12(r.inspect_cost),
            r.region,
            sig12(r.p_inspect),
            sig12(r.p_join),
            sig12(r.p_balk),
            sig12(r.sw),
            sig12(r.d_sw_d_reward),
            sig12(r.d_sw_d_inspect_cost),
        ));
    }
    out
}

#[derive(Serialize)]
struct CrossingRowOut {
    x: u32,
    eps: f64,
    #[serde(rename = "R_below")]
    reward_below: f64,
    #[serde(rename = "R_above")]
    reward_above: f64,
    #[serde(rename = "PJ_below")]
    pj_below: f64,
    #[serde(rename = "PJ_above")]
    pj_above: f64,
    #[serde(rename = "SW_below")]
    sw_below: f64,
    #[serde(rename = "SW_above")]
    sw_above: f64,
    #[serde(rename = "SW_drop")]
    sw_drop: f64,
}

impl CrossingRowOut {
    fn new(x: u32, r: &CrossingRow<f64>) -> Self {
        CrossingRowOut {
            x,
            eps: r.eps,
            reward_below: r.reward_below,
            reward_above: r.reward_above,
            pj_below: r.pj_below,
            pj_above: r.pj_above,
            sw_below: r.sw_below,
            sw_above: r.sw_above,
            sw_drop: r.sw_drop,
        }
    }
}

fn crossing_csv(rows: &[CrossingRowOut]) -> String {
    let mut out =
        String::from("x,eps,R_below,R_above,PJ_below,PJ_above,SW_below,SW_above,SW_drop\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.x,
            sig12(r.eps),
            sig12(r.reward_below),
            sig12(r.reward_above),
            sig12(r.pj_below),
            sig12(r.pj_above),
            sig12(r.sw_below),
            sig12(r.sw_above),
            sig12(r.sw_drop),
        ));
    }
    out
}

fn pretty_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable output");
    s.push('\n');
    s
}

struct Outcome {
    text: String,
    code: i32,
    path: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<Outcome, CliError> {
    match cli.command {
        Command::Eval { params, mix, out } => {
            let p = params.build()?;
            let s = Strategy64::new(mix.p_inspect, mix.p_join)?;
            let triple = stratq::utilities(&p, &s);
            Ok(Outcome { text: pretty_json(&triple), code: 0, path: out.out })
        }
        Command::Equilibrium { params, out } => {
            let p = params.build()?;
            let eq = stratq::compute_equilibrium(&p)?;
            let doc = equilibrium_doc(&p, &eq);
            Ok(Outcome { text: pretty_json(&doc), code: 0, path: out.out })
        }
        Command::RegionMap { params, grid, format, out }
        | Command::WelfareContour { params, grid, format, out } => {
            if grid.r_min > grid.r_max || grid.ci_min > grid.ci_max {
                return Err(CliError::validation(
                    "grid ranges must satisfy r-min <= r-max and ci-min <= ci-max",
                ));
            }
            if grid.n_r == 0 || grid.n_ci == 0 {
                return Err(CliError::validation("grid sizes nr and nci must be at least 1"));
            }
            let base = params.build_with(Some((
                0.5 * (grid.r_min + grid.r_max),
                0.5 * (grid.ci_min + grid.ci_max),
            )))?;
            let rows = stratq::region_map(
                &base,
                (grid.r_min, grid.r_max),
                (grid.ci_min, grid.ci_max),
                grid.n_r,
                grid.n_ci,
            )?;
            let text = match format {
                Format::Csv => grid_csv(&rows),
                Format::Json => {
                    pretty_json(&rows.iter().map(GridRowOut::from).collect::<Vec<_>>())
                }
            };
            Ok(Outcome { text, code: 0, path: out.out })
        }
        Command::Simulate { params, mix, horizon, seed, out } => {
            if horizon == 0 {
                return Err(CliError::validation("horizon must be positive"));
            }
            let p = params.build()?;
            let s = Strategy64::new(mix.p_inspect, mix.p_join)?;
            let result = stratq::oracle::simulate(&p, &s, horizon, seed);
            Ok(Outcome { text: pretty_json(&result), code: 0, path: out.out })
        }
        Command::Verify { input, eps, out } => {
            let raw = match input {
                Some(path) => std::fs::read_to_string(&path).map_err(|e| {
                    CliError::validation(format!("cannot read {}: {e}", path.display()))
                })?,
                None => {
                    let mut buf = String::new();
                    std::io::stdin()
                        .read_to_string(&mut buf)
                        .map_err(|e| CliError::validation(format!("cannot read stdin: {e}")))?;
                    buf
                }
            };
            let doc: EquilibriumDoc = serde_json::from_str(&raw)
                .map_err(|e| CliError::validation(format!("equilibrium document: {e}")))?;
            let strategy = Strategy64::new(doc.p_inspect, doc.p_join)?;
            let report = stratq::verify_equilibrium(&doc.params, &strategy, eps);
            let code = if report.ok { 0 } else { EXIT_SOLVER };
            Ok(Outcome { text: pretty_json(&report), code, path: out.out })
        }
        Command::CrossingReport { params, xs, eps, format, out } => {
            if xs.is_empty() {
                return Err(CliError::validation("need at least one --x threshold index"));
            }
            let cw = params.cw.unwrap_or(1.0);
            let mu = params.mu.unwrap_or(1.0);
            let scan_reward = f64::from(xs[0].max(2)) * cw / mu;
            let base = params.build_with(Some((scan_reward, 0.1)))?;
            let mut rows = Vec::new();
            for &x in &xs {
                for row in stratq::threshold_crossing_report(&base, x, &eps)? {
                    rows.push(CrossingRowOut::new(x, &row));
                }
            }
            let text = match format {
                Format::Csv => crossing_csv(&rows),
                Format::Json => pretty_json(&rows),
            };
            Ok(Outcome { text, code: 0, path: out.out })
        }
    }
}

fn configure_thread_pool() {
    if let Ok(value) = std::env::var("STRATQ_THREADS") {
        match value.parse::<usize>() {
            Ok(n) if n >= 1 => {
                // Ignore the error if a pool was already installed.
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("warning: ignoring STRATQ_THREADS={value:?} (want a positive integer)");
            }
        }
    }
}

fn main() {
    configure_thread_pool();
    let cli = Cli::parse();
    match run(cli) {
        Ok(outcome) => {
            match &outcome.path {
                Some(path) => {
                    if let Err(e) = std::fs::write(path, &outcome.text) {
                        eprintln!("error: cannot write {}: {e}", path.display());
                        std::process::exit(EXIT_VALIDATION);
                    }
                }
                None => print!("{}", outcome.text),
            }
            std::process::exit(outcome.code);
        }
        Err(e) => {
            eprintln!("error: {}", e.message);
            std::process::exit(e.code);
        }
    }
}
