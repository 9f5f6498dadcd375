use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use noiseprobe::commands;
use noiseprobe::config::RunConfig;
use noiseprobe::report::Format;
use noiseprobe::Error;

#[derive(Parser)]
#[command(name = "noiseprobe", version, about = "Probe sentence embeddings under targeted noise")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mean-pool word vectors into sentence embeddings for every task.
    Pool(Common),
    /// Run the noise-probing protocol and write ledgers and tables.
    Probe(Common),
    /// Generate a synthetic task with a planted signal.
    Synth {
        /// TOML synthetic spec.
        #[arg(long)]
        config: PathBuf,
        /// Output directory; defaults to the spec's directory.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        dry_run: bool,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Validate the config and print the resolved plan without running it.
    #[arg(long)]
    dry_run: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Md,
    Csv,
    Json,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Md => Format::Md,
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }
    }
}

fn load(common: &Common) -> Result<RunConfig, Error> {
    let mut cfg = RunConfig::load(&common.config)?;
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(w) = common.workers {
        cfg.workers = w;
    }
    if let Some(f) = common.format {
        cfg.format = f.into();
    }
    Ok(cfg)
}

fn print_json(v: &impl serde::Serialize) -> Result<(), Error> {
    let s = serde_json::to_string_pretty(v).map_err(|e| Error::Runtime(e.to_string()))?;
    println!("{s}");
    Ok(())
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Pool(common) => {
            let cfg = load(&common)?;
            if common.dry_run {
                return print_json(&commands::describe_plan(&cfg)?);
            }
            print_json(&commands::cmd_pool(&cfg)?)
        }
        Command::Probe(common) => {
            let cfg = load(&common)?;
            if common.dry_run {
                return print_json(&commands::describe_plan(&cfg)?);
            }
            let progress = |task: &str, r: &noiseprobe::stats::RunResult, t: std::time::Duration| {
                let line = json!({
                    "event": "run",
                    "task": task,
                    "condition": r.condition_id,
                    "run_index": r.run_index,
                    "auc": r.auc,
                    "seconds": t.as_secs_f64(),
                });
                let mut out = std::io::stdout().lock();
                let _ = writeln!(out, "{line}");
                let _ = out.flush();
            };
            let out = commands::cmd_probe(&cfg, &progress)?;
            print_json(&json!({ "event": "done", "output": out }))
        }
        Command::Synth {
            config,
            out,
            seed,
            dry_run,
        } => {
            let mut spec = commands::load_synth_spec(&config)?;
            if let Some(s) = seed {
                spec.seed = s;
            }
            if dry_run {
                return print_json(&spec);
            }
            let dir = out.unwrap_or_else(|| {
                config
                    .parent()
                    .map(PathBuf::from)
                    .unwrap_or_else(|| PathBuf::from("."))
            });
            print_json(&commands::cmd_synth(&spec, &dir)?)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            // usage errors are configuration errors
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let kind = e.kind();
            let record = json!({
                "error": kind.as_str(),
                "message": e.to_string(),
                "exit_code": kind.exit_code(),
            });
            eprintln!("{record}");
            ExitCode::from(kind.exit_code() as u8)
        }
    }
}
