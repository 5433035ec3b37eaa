//! `citegauge`: audit citation edge datasets against a baseline corpus.
//!
//! Exit codes: 0 on success (warnings allowed), 1 on a hard error, 2 on a
//! usage error. Hard errors print one line `citegauge: error: <code>: <message>`
//! to stderr.

mod commands;
mod manifest;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use citegauge::setops::Level;
use clap::{Args, Parser, Subcommand, ValueEnum};

use commands::{Failure, WithCode};
use manifest::AuditManifest;

#[derive(Parser)]
#[command(
    name = "citegauge",
    version,
    about = "Audit citation edge datasets against a baseline corpus"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Audit manifest (TOML).
    #[arg(long)]
    manifest: PathBuf,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum LevelArg {
    Document,
    Edge,
}

impl From<LevelArg> for Level {
    fn from(l: LevelArg) -> Level {
        match l {
            LevelArg::Document => Level::Document,
            LevelArg::Edge => Level::Edge,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Resolve source dumps onto the baseline and build gold standards.
    Resolve {
        #[command(flatten)]
        common: Common,
        /// Resolve only this source (gold standards are skipped).
        #[arg(long)]
        source: Option<String>,
    },
    /// Score resolved sources against gold standards.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        source: Option<String>,
        #[arg(long)]
        gold: Option<String>,
    },
    /// Exclusive overlap partition and pairwise containment of sources.
    Overlap {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "document")]
        level: LevelArg,
    },
    /// Spearman correlation of citation counts between sources.
    Correlate {
        #[command(flatten)]
        common: Common,
    },
    /// Draw the stratified gold-standard candidate sample.
    Sample {
        #[command(flatten)]
        common: Common,
        /// Overrides the manifest seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Write the summary tables.
    Report {
        #[command(flatten)]
        common: Common,
    },
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Resolve { common, .. }
            | Command::Evaluate { common, .. }
            | Command::Overlap { common, .. }
            | Command::Correlate { common }
            | Command::Sample { common, .. }
            | Command::Report { common } => common,
        }
    }
}

fn init_logging() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CITEGAUGE_LOG", "warn"))
        .format(|buf, record| {
            writeln!(
                buf,
                "citegauge: {}: {}",
                record.level().as_str().to_ascii_lowercase(),
                record.args()
            )
        })
        .init();
}

fn run(cli: Cli) -> Result<(), Failure> {
    let common = cli.command.common();
    if let Some(jobs) = common.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global()
            .code("internal")?;
    }
    let m = AuditManifest::load(&common.manifest).code("manifest")?;
    match &cli.command {
        Command::Resolve { source, .. } => commands::resolve(&m, source.as_deref()),
        Command::Evaluate { source, gold, .. } => commands::evaluate_cmd(&m, source.as_deref(), gold.as_deref()),
        Command::Overlap { level, .. } => commands::overlap(&m, (*level).into()),
        Command::Correlate { .. } => commands::correlate(&m),
        Command::Sample { seed, .. } => commands::sample(&m, *seed),
        Command::Report { .. } => commands::report(&m),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure { code, error }) => {
            let message = format!("{error:#}").replace('\n', " ");
            eprintln!("citegauge: error: {code}: {message}");
            ExitCode::from(1)
        }
    }
}
