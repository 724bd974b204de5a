use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::LevelFilter;

use mgt_stab::scenario::{error_value, preset, run, ArtifactWriter, Command, ScenarioConfig, PRESETS};
use mgt_stab::Error;

#[derive(Parser)]
#[command(name = "mgt-stab", version, about = "Stability analysis for the linear Moore-Gibson-Thompson equation")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// Log more (repeat for debug output).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
}

#[derive(Subcommand)]
enum Cmd {
    /// Time integration with energy CSV and summary JSON.
    Simulate(RunArgs),
    /// Eigenvalues of the discrete generator.
    Spectrum(RunArgs),
    /// Star-shape, convexity and multiplier field certification.
    CertifyGeometry(RunArgs),
    /// Multiplier identities, Neumann-map adjoint check and E1 reconstruction.
    MultiplierCheck(RunArgs),
    /// Everything above.
    Full(RunArgs),
    /// Print a preset as TOML, or list the presets.
    Preset {
        name: Option<String>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file (TOML).
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    config: Option<PathBuf>,
    /// Built-in scenario instead of a file.
    #[arg(long)]
    preset: Option<String>,
    /// Output directory.
    #[arg(long, env = "MGT_STAB_OUT", default_value = "out")]
    out: PathBuf,
    /// Override the seed of the randomized checks.
    #[arg(long)]
    seed: Option<u64>,
}

fn load(args: &RunArgs) -> Result<ScenarioConfig, Error> {
    let mut cfg = match (&args.config, &args.preset) {
        (Some(p), _) => ScenarioConfig::load(p)?,
        (None, Some(name)) => preset(name)?,
        (None, None) => return Err(Error::Config("give --config or --preset".into())),
    };
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn execute(cmd: Command, args: &RunArgs) -> ExitCode {
    let cfg = load(args);
    let hash = cfg.as_ref().ok().map(|c| c.hash());
    let result = cfg.and_then(|c| run(&c, cmd, &args.out));
    match result {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            let v = error_value(&e, hash.as_deref());
            eprintln!("{v}");
            if let Ok(mut w) = ArtifactWriter::new(&args.out, hash.unwrap_or_default()) {
                let _ = w.json("error.json", v);
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => LevelFilter::Warn,
        1 => LevelFilter::Info,
        _ => LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();
    let (cmd, args) = match &cli.command {
        Cmd::Simulate(a) => (Command::Simulate, a),
        Cmd::Spectrum(a) => (Command::Spectrum, a),
        Cmd::CertifyGeometry(a) => (Command::CertifyGeometry, a),
        Cmd::MultiplierCheck(a) => (Command::MultiplierCheck, a),
        Cmd::Full(a) => (Command::Full, a),
        Cmd::Preset { name: None } => {
            for p in PRESETS {
                println!("{p}");
            }
            return ExitCode::SUCCESS;
        }
        Cmd::Preset { name: Some(n) } => {
            return match preset(n).and_then(|c| c.to_toml()) {
                Ok(t) => {
                    print!("{t}");
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("{}", error_value(&e, None));
                    ExitCode::from(e.exit_code() as u8)
                }
            };
        }
    };
    execute(cmd, args)
}
