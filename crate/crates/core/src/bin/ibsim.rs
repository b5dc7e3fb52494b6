use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ibsim::config::{parse_config, Mode, RunConfig};
use ibsim::experiments::{check_suite, refine, sweep_zero_re};
use ibsim::stepper::run_simulation;
use ibsim::Error;

const EXIT_CONFIG: u8 = 2;
const EXIT_BLOWUP: u8 = 3;
const EXIT_CHECK: u8 = 4;

#[derive(Parser)]
#[command(name = "ibsim", version, about = "Immersed elastic string in a 2-D Navier-Stokes or Stokes fluid")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output directory (overrides `output.dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Run seed (overrides `seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true, env = "PNS_THREADS")]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one Stokes or Navier-Stokes simulation.
    Simulate { config: PathBuf },
    /// Compare Navier-Stokes runs over a viscosity list with the Stokes run.
    SweepZeroRe { config: PathBuf },
    /// Repeat a run under dt (and grid) refinement.
    Refine { config: PathBuf },
    /// Run the invariant battery.
    Check,
}

fn load(path: &Path, mode: Option<Mode>, cli: &Cli) -> Result<RunConfig, Error> {
    let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let mut cfg = parse_config(&text)?;
    if let Some(m) = mode {
        cfg.mode = m;
    }
    if let Some(dir) = &cli.out {
        cfg.output.dir = Some(dir.clone());
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    cfg.normalize()
}

fn exit_for(err: &Error) -> ExitCode {
    match err {
        Error::Config(_) | Error::Parse(_) => ExitCode::from(EXIT_CONFIG),
        Error::BlowUp { .. } => ExitCode::from(EXIT_BLOWUP),
        _ => ExitCode::FAILURE,
    }
}

fn run(cli: &Cli) -> Result<ExitCode, Error> {
    match &cli.command {
        Command::Simulate { config } => {
            let cfg = load(config, None, cli)?;
            if !matches!(cfg.mode, Mode::Stokes | Mode::Ns) {
                return Err(Error::Config("simulate needs mode = \"stokes\" or \"ns\"".into()));
            }
            let traj = run_simulation(&cfg)?;
            let last = traj.records.last().expect("records are never empty");
            println!(
                "t = {:.6}  area drift = {:.3e}  energy residual = {:.3e}  lambda = {:.4}",
                last.t,
                (last.enclosed_area - traj.records[0].enclosed_area).abs() / traj.records[0].enclosed_area,
                last.relative_energy_residual(),
                last.lambda_hat
            );
            if let Some((t, flags)) = traj.blowup {
                eprintln!("blow-up monitor fired at t = {t}: {flags}");
                return Ok(ExitCode::from(EXIT_BLOWUP));
            }
        }
        Command::SweepZeroRe { config } => {
            let report = sweep_zero_re(&load(config, Some(Mode::SweepZeroRe), cli)?)?;
            print!("{report}");
            if !report.complete() {
                return Ok(ExitCode::from(EXIT_BLOWUP));
            }
        }
        Command::Refine { config } => {
            print!("{}", refine(&load(config, Some(Mode::Refine), cli)?)?);
        }
        Command::Check => {
            let report = check_suite();
            print!("{report}");
            if let Some(dir) = &cli.out {
                fs::create_dir_all(dir)?;
                fs::write(dir.join("check.csv"), report.to_string())?;
            }
            if !report.all_passed() {
                return Ok(ExitCode::from(EXIT_CHECK));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    }
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_for(&e)
        }
    }
}
