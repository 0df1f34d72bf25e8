//! Command-line front end. Exit codes: 0 on success, 2 on usage errors
//! (bad flags, grids, parameters or state files), 1 on computation errors.

use std::f64::consts::FRAC_PI_4;
use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::error::Error;
use crate::network::{OutcomePattern, SwapNetwork};
use crate::optimize::{bisect_threshold, maximize_witness, table1_threshold, OptimizerConfig, ScanParam};
use crate::par::Execution;
use crate::qlin::CMatrix;
use crate::scan::{self, Axis, GridSpec, ScanMode};
use crate::states::{Family, Sign, StateParams};
use crate::witnesses::WitnessName;

#[derive(Debug, Parser)]
#[command(
    name = "diew",
    version,
    about = "Entanglement swapping and device-independent witnesses"
)]
pub struct Cli {
    /// Run on a single thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Emit one of the four state families as JSON.
    State(StateArgs),
    /// Run the swapping network for one outcome pattern or all of them.
    Swap(SwapArgs),
    /// Maximize a witness over measurement settings.
    Maximize(MaximizeArgs),
    /// Violation threshold of a witness on a family.
    Threshold(ThresholdArgs),
    /// Classify a (theta, p) grid and write it as CSV.
    Scan(ScanArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FamilyArg {
    Rho1,
    Rho2,
    Rho3,
    Rho4,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Rho1 => Family::Rho1,
            FamilyArg::Rho2 => Family::Rho2,
            FamilyArg::Rho3 => Family::Rho3,
            FamilyArg::Rho4 => Family::Rho4,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum WitnessArg {
    Mermin,
    Uffink,
    Bancal,
    Liang,
    Cavalcanti,
}

impl From<WitnessArg> for WitnessName {
    fn from(w: WitnessArg) -> Self {
        match w {
            WitnessArg::Mermin => WitnessName::Mermin,
            WitnessArg::Uffink => WitnessName::Uffink,
            WitnessArg::Bancal => WitnessName::Bancal,
            WitnessArg::Liang => WitnessName::Liang,
            WitnessArg::Cavalcanti => WitnessName::Cavalcanti,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Analytic,
    Numeric,
}

#[derive(Debug, Args)]
struct Params {
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    p: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    p1: f64,
    #[arg(long, default_value_t = FRAC_PI_4, allow_negative_numbers = true)]
    theta: f64,
}

impl Params {
    fn get(&self) -> Result<StateParams, Failure> {
        StateParams::new(self.p, self.p1, self.theta).map_err(Failure::Usage)
    }
}

#[derive(Debug, Args)]
struct OptimizerArgs {
    #[arg(long, default_value_t = 200)]
    restarts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct StateArgs {
    #[arg(long, value_enum)]
    name: FamilyArg,
    #[command(flatten)]
    params: Params,
    #[arg(long, default_value = "+")]
    sign: Sign,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SwapArgs {
    #[command(flatten)]
    params: Params,
    #[arg(long, default_value = "psi+,psi+,psi+", conflicts_with = "all")]
    pattern: OutcomePattern,
    /// Report all 64 outcome patterns.
    #[arg(long)]
    all: bool,
    /// Also write the records, including post-measurement states, here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct MaximizeArgs {
    #[arg(long, value_enum)]
    witness: WitnessArg,
    #[arg(long, value_name = "FILE.json", conflicts_with = "name")]
    state_file: Option<PathBuf>,
    #[arg(long, value_enum, required_unless_present = "state_file")]
    name: Option<FamilyArg>,
    #[command(flatten)]
    params: Params,
    #[arg(long, default_value = "+")]
    sign: Sign,
    #[command(flatten)]
    optimizer: OptimizerArgs,
}

#[derive(Debug, Args)]
struct ThresholdArgs {
    #[arg(long, value_enum)]
    witness: WitnessArg,
    #[arg(long, value_enum)]
    family: FamilyArg,
    #[arg(long, default_value_t = FRAC_PI_4, allow_negative_numbers = true)]
    theta: f64,
    #[arg(long, default_value_t = 1e-3)]
    tol: f64,
    #[arg(long, value_enum, default_value = "numeric")]
    mode: ModeArg,
    #[command(flatten)]
    optimizer: OptimizerArgs,
}

#[derive(Debug, Args)]
struct ScanArgs {
    #[arg(long, value_enum)]
    witness: WitnessArg,
    #[arg(long, value_name = "A:B:N", default_value = "0.05:0.7853981634:200")]
    theta_grid: String,
    #[arg(long, value_name = "A:B:N", default_value = "0:1:200")]
    p_grid: String,
    #[arg(long, allow_negative_numbers = true)]
    p1: f64,
    #[arg(long, value_enum, default_value = "analytic")]
    mode: ModeArg,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    optimizer: OptimizerArgs,
}

enum Failure {
    Usage(Error),
    Compute(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::ParameterOutOfRange { .. } | Error::InvalidGrid(_) | Error::Parse(_) => Failure::Usage(e),
            other => Failure::Compute(other),
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::Compute(e.into()))
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<(), Failure> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Failure::Compute(e.into()))?;
    writeln!(w)
        .and_then(|_| w.flush())
        .map_err(|e| Failure::Compute(e.into()))
}

fn read_state(path: &Path) -> Result<CMatrix, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(e.into()))?;
    let rho: CMatrix = serde_json::from_str(&text).map_err(|e| Failure::Usage(e.into()))?;
    if rho.n_qubits() != 3 || !rho.is_density(1e-10) {
        return Err(Failure::Usage(Error::NotADensity {
            what: path.display().to_string(),
        }));
    }
    Ok(rho)
}

fn config(opt: &OptimizerArgs, exec: Execution) -> Result<OptimizerConfig, Failure> {
    if opt.restarts == 0 {
        return Err(Failure::Usage(Error::Parse("--restarts must be positive".into())));
    }
    Ok(OptimizerConfig::default()
        .with_restarts(opt.restarts)
        .with_seed(opt.seed)
        .with_exec(exec))
}

fn io(e: std::io::Error) -> Failure {
    Failure::Compute(e.into())
}

fn execute(cli: Cli, out: &mut dyn Write) -> Result<(), Failure> {
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::default()
    };
    match cli.command {
        Command::State(a) => {
            let params = a.params.get()?;
            let rho = Family::from(a.name).state(&params, a.sign)?;
            match a.out {
                Some(path) => write_json(&path, &rho)?,
                None => writeln!(out, "{}", serde_json::to_string(&rho).map_err(Error::from)?).map_err(io)?,
            }
        }
        Command::Swap(a) => {
            let params = a.params.get()?;
            let network = SwapNetwork::from_params(&params)?;
            let results = if a.all {
                network.outcome_distribution(exec)?
            } else {
                vec![network.swap(&a.pattern)?]
            };
            let brief: Vec<_> = results.iter().map(|r| r.to_record(false)).collect();
            let text = if a.all {
                serde_json::to_string_pretty(&brief)
            } else {
                serde_json::to_string_pretty(&brief[0])
            }
            .map_err(Error::from)?;
            writeln!(out, "{text}").map_err(io)?;
            if let Some(path) = a.out {
                let full: Vec<_> = results.iter().map(|r| r.to_record(true)).collect();
                if a.all {
                    write_json(&path, &full)?;
                } else {
                    write_json(&path, &full[0])?;
                }
            }
        }
        Command::Maximize(a) => {
            let rho = match (&a.state_file, a.name) {
                (Some(path), _) => read_state(path)?,
                (None, Some(name)) => Family::from(name).state(&a.params.get()?, a.sign)?,
                (None, None) => unreachable!("clap requires one of --state-file and --name"),
            };
            let spec = WitnessName::from(a.witness).spec();
            let best = maximize_witness(&rho, &spec, &config(&a.optimizer, exec)?)?;
            let report = json!({
                "witness": spec.name,
                "value": best.value,
                "bound": spec.bound,
                "violated": spec.violates(best.value),
                "restart": best.restart,
                "angles": best.scenario.to_angles(),
            });
            writeln!(out, "{}", serde_json::to_string_pretty(&report).map_err(Error::from)?).map_err(io)?;
        }
        Command::Threshold(a) => {
            let witness = WitnessName::from(a.witness);
            let family = Family::from(a.family);
            let value = match a.mode {
                ModeArg::Analytic => table1_threshold(witness, family, a.theta)?,
                ModeArg::Numeric => {
                    let fixed = StateParams::new(1.0, 1.0, a.theta).map_err(Failure::Usage)?;
                    let scan = ScanParam::natural_for(family);
                    bisect_threshold(witness, family, scan, fixed, a.tol, &config(&a.optimizer, exec)?)?.threshold
                }
            };
            writeln!(out, "{value:.6}").map_err(io)?;
        }
        Command::Scan(a) => {
            let theta: Axis = a.theta_grid.parse()?;
            let p: Axis = a.p_grid.parse()?;
            let grid = GridSpec::new(theta, p, a.p1)?;
            let mode = match a.mode {
                ModeArg::Analytic => ScanMode::Analytic,
                ModeArg::Numeric => ScanMode::Numeric,
            };
            let points = scan::sweep(&grid, a.witness.into(), mode, &config(&a.optimizer, exec)?)?;
            scan::write_csv(&points, create(&a.out)?)?;
            let enhanced = points.iter().filter(|pt| pt.enhanced).count();
            writeln!(
                out,
                "{} points, {} enhanced, written to {}",
                points.len(),
                enhanced,
                a.out.display()
            )
            .map_err(io)?;
        }
    }
    Ok(())
}

/// Parse `args` (program name first) and run, returning the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{rendered}")
            } else {
                write!(out, "{rendered}")
            };
            return code;
        }
    };
    match execute(cli, out) {
        Ok(()) => 0,
        Err(Failure::Usage(e)) => {
            let _ = writeln!(err, "error: {e}");
            2
        }
        Err(Failure::Compute(e)) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}
