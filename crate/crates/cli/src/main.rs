use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use hsto_cli::commands::{self, Overrides};
use hsto_cli::{parse_config, CliError, CliResult};
use hsto_core::stepping::Mode;

#[derive(Parser)]
#[command(name = "hsto", version, about = "Stochastic hydrostatic ocean simulator and verification lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of runs (`ensemble`), instances (`gronwall`) or cases (`pressure-check`).
    #[arg(long, global = true)]
    runs: Option<usize>,
    /// Grid size for `verify` and `pressure-check`.
    #[arg(long, global = true)]
    grid: Option<usize>,
    #[arg(long, global = true, value_enum)]
    mode: Option<ModeArg>,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one trajectory.
    Run,
    /// Integrate seeds `seed .. seed + runs` and report moments.
    Ensemble,
    /// Operator identities and inequality ratios at one grid size.
    Verify,
    /// Stokes surface-pressure estimate on manufactured cases.
    PressureCheck,
    /// Soundness of the constructive Gronwall bound on generated instances.
    Gronwall,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Direct,
    Split,
    Both,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Direct => Mode::Direct,
            ModeArg::Split => Mode::Split,
            ModeArg::Both => Mode::Both,
        }
    }
}

fn init_threads() -> CliResult<()> {
    let Ok(v) = std::env::var("HSTO_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| CliError::InvalidValue {
        key: "HSTO_THREADS".into(),
        reason: format!("expected a positive integer, got {v:?}"),
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))
}

fn dispatch(cli: Cli) -> CliResult<Vec<String>> {
    init_threads()?;
    let seed = cli.seed.unwrap_or(0);
    let overrides = Overrides {
        out: cli.out.clone(),
        seed: cli.seed,
        mode: cli.mode.map(Mode::from),
    };
    let need_config = || {
        cli.config
            .as_deref()
            .ok_or_else(|| CliError::Usage("--config is required".into()))
    };
    match cli.command {
        Command::Run => {
            let (file, cfg) = parse_config(need_config()?)?;
            commands::cmd_run(&file, cfg, &overrides)
        }
        Command::Ensemble => {
            let runs = cli
                .runs
                .ok_or_else(|| CliError::Usage("--runs is required".into()))?;
            let (file, cfg) = parse_config(need_config()?)?;
            commands::cmd_ensemble(&file, cfg, &overrides, runs)
        }
        Command::Verify => {
            let n = cli.grid.unwrap_or(16);
            let out = cli.out.unwrap_or_else(|| PathBuf::from(format!("verify_{n}")));
            commands::cmd_verify(n, seed, &out)
        }
        Command::PressureCheck => {
            let n = cli.grid.unwrap_or(16);
            let out = cli.out.unwrap_or_else(|| PathBuf::from(format!("pressure_{n}")));
            commands::cmd_pressure_check(n, cli.runs.unwrap_or(20), seed, &out)
        }
        Command::Gronwall => {
            let out = cli.out.unwrap_or_else(|| PathBuf::from("gronwall"));
            commands::cmd_gronwall(cli.runs.unwrap_or(1000), seed, &out)
        }
    }
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments");
            eprintln!("error: {}", one_line(first.trim_start_matches("error:")));
            return ExitCode::from(1);
        }
    };
    match dispatch(cli) {
        Ok(lines) => {
            for l in lines {
                println!("{l}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {}", one_line(&e.to_string()));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
