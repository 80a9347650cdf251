use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dlra_core::Parity;
use dlra_experiments::{
    ground_preset, run_addition, run_explicit, run_ground_state, run_laser, run_lyapunov, run_selftest, AdditionConfig, Error,
    ExplicitConfig, LaserExperiment, LyapunovConfig, Preset, Result, Table,
};

/// Environment variable naming the default output directory.
const OUT_DIR_VAR: &str = "DLRA_OUT_DIR";

#[derive(Parser, Debug)]
#[command(name = "dlra", version, about = "Low-rank integrator experiments, written as CSV")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// RNG seed (default 1).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file; defaults to $DLRA_OUT_DIR/<command>.csv, then stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = PresetArg::Desk)]
    preset: PresetArg,
    /// Step size, or comma-separated step sizes for sweeps.
    #[arg(long, global = true, value_delimiter = ',')]
    h: Option<Vec<f64>>,
    /// Rank, or comma-separated ranks for sweeps.
    #[arg(long, global = true, value_delimiter = ',')]
    rank: Option<Vec<usize>>,
    /// Final time.
    #[arg(long = "T", global = true)]
    t_final: Option<f64>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PresetArg {
    Desk,
    Paper,
}

impl From<PresetArg> for Preset {
    fn from(p: PresetArg) -> Self {
        match p {
            PresetArg::Desk => Preset::Desk,
            PresetArg::Paper => Preset::Paper,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ParityArg {
    Symmetric,
    Anti,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Retraction of A + B by one integrator step against truncation.
    TuckerAdd {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        d: Option<usize>,
        /// Comma-separated values of ||B||.
        #[arg(long, value_delimiter = ',')]
        norms: Option<Vec<f64>>,
        #[arg(long, value_enum)]
        parity: Option<ParityArg>,
        /// Add wall-time columns (output no longer reproducible).
        #[arg(long)]
        timings: bool,
    },
    /// Explicit symmetric path: sym_step against factored RK4.
    MatrixExplicit {
        #[arg(long)]
        n: Option<usize>,
    },
    /// Differential Lyapunov equation with the 2-D Laplacian.
    Lyapunov {
        /// Grid side; N = blocks^2.
        #[arg(long)]
        blocks: Option<usize>,
        #[arg(long)]
        rtol: Option<f64>,
        #[arg(long)]
        atol: Option<f64>,
    },
    /// Imaginary-time runs: bosons, fermions, fermions without enforcement.
    GroundState {
        #[arg(long = "K")]
        k: Option<usize>,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        scrub_every: Option<usize>,
    },
    /// Real-time runs from the fermionic ground state, with and without pulse.
    Laser {
        #[arg(long = "K")]
        k: Option<usize>,
        #[arg(long)]
        d: Option<usize>,
        /// Final time of the imaginary-time run preparing the initial state.
        #[arg(long = "ground-T")]
        ground_t: Option<f64>,
        #[arg(long)]
        a0: Option<f64>,
        #[arg(long)]
        omega: Option<f64>,
        #[arg(long)]
        tau: Option<f64>,
    },
    /// Dense-oracle checks of the kernels and structured contractions.
    Selftest,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::TuckerAdd { .. } => "tucker-add",
            Command::MatrixExplicit { .. } => "matrix-explicit",
            Command::Lyapunov { .. } => "lyapunov",
            Command::GroundState { .. } => "ground-state",
            Command::Laser { .. } => "laser",
            Command::Selftest => "selftest",
        }
    }
}

fn single<T: Copy>(flag: &str, values: &Option<Vec<T>>) -> Result<Option<T>> {
    match values.as_deref() {
        None => Ok(None),
        Some([v]) => Ok(Some(*v)),
        Some(_) => Err(Error::Config(format!("--{flag} takes a single value for this command"))),
    }
}

fn run(cli: &Cli) -> Result<Table> {
    let c = &cli.common;
    let preset = Preset::from(c.preset);
    match &cli.command {
        Command::TuckerAdd { n, d, norms, parity, timings } => {
            let mut cfg = AdditionConfig::preset(preset);
            cfg.n = n.unwrap_or(cfg.n);
            cfg.d = d.unwrap_or(cfg.d);
            cfg.r = single("rank", &c.rank)?.unwrap_or(cfg.r);
            cfg.seed = c.seed.unwrap_or(cfg.seed);
            if let Some(norms) = norms {
                cfg.norms = norms.clone();
            }
            if let Some(p) = parity {
                cfg.parity = match p {
                    ParityArg::Symmetric => Parity::Symmetric,
                    ParityArg::Anti => Parity::Anti,
                };
            }
            cfg.timings = *timings;
            run_addition(&cfg)
        }
        Command::MatrixExplicit { n } => {
            let mut cfg = ExplicitConfig::preset(preset);
            cfg.n = n.unwrap_or(cfg.n);
            cfg.ranks = c.rank.clone().unwrap_or(cfg.ranks);
            cfg.steps = c.h.clone().unwrap_or(cfg.steps);
            cfg.t_final = c.t_final.unwrap_or(cfg.t_final);
            cfg.seed = c.seed.unwrap_or(cfg.seed);
            run_explicit(&cfg)
        }
        Command::Lyapunov { blocks, rtol, atol } => {
            let mut cfg = LyapunovConfig::preset(preset);
            cfg.blocks = blocks.unwrap_or(cfg.blocks);
            cfg.rtol = rtol.unwrap_or(cfg.rtol);
            cfg.atol = atol.unwrap_or(cfg.atol);
            cfg.ranks = c.rank.clone().unwrap_or(cfg.ranks);
            cfg.steps = c.h.clone().unwrap_or(cfg.steps);
            cfg.t_final = c.t_final.unwrap_or(cfg.t_final);
            cfg.seed = c.seed.unwrap_or(cfg.seed);
            run_lyapunov(&cfg)
        }
        Command::GroundState { k, d, scrub_every } => {
            let mut cfg = ground_preset(preset);
            cfg.k = k.unwrap_or(cfg.k);
            cfg.d = d.unwrap_or(cfg.d);
            cfg.scrub_every = scrub_every.unwrap_or(cfg.scrub_every);
            cfg.r = single("rank", &c.rank)?.unwrap_or(cfg.r);
            cfg.h = single("h", &c.h)?.unwrap_or(cfg.h);
            cfg.t_final = c.t_final.unwrap_or(cfg.t_final);
            cfg.seed = c.seed.unwrap_or(cfg.seed);
            run_ground_state(&cfg)
        }
        Command::Laser { k, d, ground_t, a0, omega, tau } => {
            let mut cfg = LaserExperiment::preset(preset);
            cfg.ground.k = k.unwrap_or(cfg.ground.k);
            cfg.ground.d = d.unwrap_or(cfg.ground.d);
            cfg.ground.r = single("rank", &c.rank)?.unwrap_or(cfg.ground.r);
            cfg.ground.t_final = ground_t.unwrap_or(cfg.ground.t_final);
            cfg.ground.seed = c.seed.unwrap_or(cfg.ground.seed);
            cfg.laser.h = single("h", &c.h)?.unwrap_or(cfg.laser.h);
            cfg.laser.t_final = c.t_final.unwrap_or(cfg.laser.t_final);
            cfg.laser.pulse.a0 = a0.unwrap_or(cfg.laser.pulse.a0);
            cfg.laser.pulse.omega = omega.unwrap_or(cfg.laser.pulse.omega);
            cfg.laser.pulse.tau = tau.unwrap_or(cfg.laser.pulse.tau);
            run_laser(&cfg)
        }
        Command::Selftest => run_selftest(),
    }
}

fn write(cli: &Cli, table: &Table) -> io::Result<()> {
    let path = cli
        .common
        .out
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_VAR).map(|dir| PathBuf::from(dir).join(format!("{}.csv", cli.command.name()))));
    match path {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            let mut out = BufWriter::new(File::create(&path)?);
            table.write_csv(&mut out)?;
            out.flush()
        }
        None => {
            let stdout = io::stdout();
            let mut out = stdout.lock();
            table.write_csv(&mut out)?;
            out.flush()
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let table = match run(&cli) {
        Ok(table) => table,
        Err(e @ Error::Config(_)) => {
            eprintln!("dlra {}: {e}", cli.command.name());
            return ExitCode::from(1);
        }
        Err(e) => {
            eprintln!("dlra {}: {e}", cli.command.name());
            return ExitCode::from(2);
        }
    };
    if let Err(e) = write(&cli, &table) {
        eprintln!("dlra {}: cannot write output: {e}", cli.command.name());
        return ExitCode::from(2);
    }
    if let Some(msg) = &table.failure {
        eprintln!("dlra {}: {msg}", cli.command.name());
        return ExitCode::from(2);
    }
    ExitCode::SUCCESS
}
