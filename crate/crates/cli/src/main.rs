use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tbicm_cli::{
    cmd_ber, cmd_complexity, cmd_exit, resolve_workers, scheme_slug, sibling, write_file, ComplexityOptions, RunConfig,
};

#[derive(Parser)]
#[command(name = "tbicm", version, about = "TBICM-ID-SSD link simulator, EXIT charts and complexity tables")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output CSV path (defaults to the config's `output`, else stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// BER/FER campaign over the configured schedules and Eb/N0 grid.
    Ber(Common),
    /// Decoder transfer curves with the demapper in the loop.
    Exit(Common),
    /// Gain and per-unit cost tables.
    Complexity {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Turbo iterations of the reference schedule.
        #[arg(long)]
        n_it: Option<usize>,
        /// Comma separated, CASE1 and/or CASE2.
        #[arg(long, value_delimiter = ',')]
        cases: Option<Vec<String>>,
        /// Comma separated code rates, e.g. 1/2,6/7.
        #[arg(long, value_delimiter = ',')]
        rates: Option<Vec<String>>,
    },
}

fn emit(out: Option<&PathBuf>, body: &str) -> tbicm::Result<()> {
    match out {
        Some(p) => write_file(p, body),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> tbicm::Result<()> {
    match cli.command {
        Command::Ber(c) => {
            let (cfg, text) = RunConfig::load(&c.config)?;
            let seed = c.seed.unwrap_or(cfg.seed);
            let workers = resolve_workers(c.workers, cfg.workers)?;
            let out = c.out.or_else(|| cfg.output.clone());
            let res = cmd_ber(&cfg, &text, seed, workers)?;
            emit(out.as_ref(), &res.combined)?;
            if let Some(p) = &out {
                for (name, body) in &res.per_scheme {
                    write_file(&sibling(p, &scheme_slug(name)), body)?;
                }
            }
            Ok(())
        }
        Command::Exit(c) => {
            let (cfg, text) = RunConfig::load(&c.config)?;
            let seed = c.seed.unwrap_or(cfg.seed);
            let workers = resolve_workers(c.workers, cfg.workers)?;
            let out = c.out.or_else(|| cfg.output.clone());
            let (csv, _) = cmd_exit(&cfg, &text, seed, workers)?;
            emit(out.as_ref(), &csv)
        }
        Command::Complexity {
            config,
            out,
            n_it,
            cases,
            rates,
        } => {
            let cfg = config.as_deref().map(RunConfig::load).transpose()?;
            let opts = ComplexityOptions::resolve(
                cfg.as_ref().map(|(c, _)| &c.complexity),
                n_it,
                cases.as_deref(),
                rates.as_deref(),
            )?;
            let (gains, units, table) = cmd_complexity(&opts)?;
            println!("{table}");
            match &out {
                Some(p) => {
                    write_file(p, &gains)?;
                    write_file(&sibling(p, "units"), &units)
                }
                None => {
                    print!("{gains}");
                    Ok(())
                }
            }
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
