//! Thin CLI over the library pipeline. Exit codes: 0 success, 1 data
//! validation failure, 2 usage/config/i-o failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use bibliorank::corpus::ParseMode;
use bibliorank::pipeline::{
    run_compare, run_score, run_synth, run_validate, CompareInput, CorpusPaths, OutputFormat,
};
use bibliorank::synth::SynthParams;

#[derive(Parser)]
#[command(
    name = "bibliorank",
    version,
    about = "Institution-level research performance indicators and ranking comparisons"
)]
struct Cli {
    /// Run configuration (TOML); defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Worker threads (0 = automatic). Never changes outputs.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,

    /// Drop invalid rows instead of rejecting the whole input.
    #[arg(long, global = true)]
    lenient: bool,

    /// csv writes tables only; json adds report.json alongside them.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> OutputFormat {
        match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        }
    }
}

#[derive(Args)]
struct CorpusArgs {
    /// Publications file (JSON lines).
    #[arg(long)]
    pubs: PathBuf,
    /// Roster file (CSV).
    #[arg(long)]
    roster: PathBuf,
    /// SDS-to-UDA map file (CSV).
    #[arg(long)]
    sds_map: PathBuf,
}

impl CorpusArgs {
    fn paths(&self) -> CorpusPaths {
        CorpusPaths {
            publications: self.pubs.clone(),
            roster: self.roster.clone(),
            sds_map: self.sds_map.clone(),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate corpus files, writing a row-level report.
    Validate(CorpusArgs),
    /// Compute per-(university, SDS) indicator scores.
    Score(CorpusArgs),
    /// Compare the rankings induced by the three indicators.
    Compare {
        /// Pre-computed scores.csv (requires --sds-map).
        #[arg(long, conflicts_with_all = ["pubs", "roster"])]
        scores: Option<PathBuf>,
        #[arg(long, required_unless_present = "scores")]
        pubs: Option<PathBuf>,
        #[arg(long, required_unless_present = "scores")]
        roster: Option<PathBuf>,
        #[arg(long)]
        sds_map: PathBuf,
    },
    /// Generate a seeded synthetic corpus.
    Synth {
        /// Generator seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Scale factor on staff and publication counts.
        #[arg(long, default_value_t = 0.1)]
        scale: f64,
        /// Full parameter file (JSON); --seed and --scale override it.
        #[arg(long)]
        params: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<i32, bibliorank::Error> {
    let mode = if cli.lenient {
        ParseMode::Lenient
    } else {
        ParseMode::Strict
    };
    let config = cli.config.as_deref();
    match &cli.command {
        Command::Validate(corpus) => {
            let summary = run_validate(&corpus.paths(), config, &cli.out, mode)?;
            let r = &summary.report;
            println!(
                "publications accepted: {}, roster rows accepted: {}, rejected: {}",
                r.publications_accepted,
                r.roster_accepted,
                r.rejected_count()
            );
            for reject in r.rejects.iter().take(20) {
                println!("  {} line {}: {}", reject.file, reject.line, reject.reason);
            }
            if r.rejects.len() > 20 {
                println!("  ... {} more (see validation_report.json)", r.rejects.len() - 20);
            }
            Ok(summary.exit_code())
        }
        Command::Score(corpus) => {
            let summary = run_score(&corpus.paths(), config, &cli.out, mode, cli.jobs)?;
            println!(
                "scored {} (university, SDS) pairs over {} active fields ({} excluded); wrote {}",
                summary.pairs_scored,
                summary.active_sds,
                summary.excluded_sds.len(),
                summary.scores_path.display()
            );
            Ok(0)
        }
        Command::Compare {
            scores,
            pubs,
            roster,
            sds_map,
        } => {
            let input = match scores {
                Some(scores) => CompareInput::Scores {
                    scores: scores.clone(),
                    sds_map: sds_map.clone(),
                },
                None => CompareInput::Corpus(CorpusPaths {
                    publications: pubs.clone().expect("clap enforces --pubs"),
                    roster: roster.clone().expect("clap enforces --roster"),
                    sds_map: sds_map.clone(),
                }),
            };
            let summary = run_compare(
                &input,
                config,
                &cli.out,
                mode,
                cli.jobs,
                cli.format.into(),
            )?;
            print!("{}", summary.summary_text);
            Ok(0)
        }
        Command::Synth { seed, scale, params } => {
            let synth_params = match params {
                Some(path) => {
                    let mut p = bibliorank::pipeline::load_synth_params(path)?;
                    p.seed = *seed;
                    if (*scale - 0.1).abs() > f64::EPSILON {
                        p.scale = *scale;
                    }
                    p
                }
                None => SynthParams::table1(*seed, *scale),
            };
            let summary = run_synth(&synth_params, params.as_deref(), &cli.out)?;
            println!(
                "generated {} publications, {} roster entries into {}",
                summary.publications,
                summary.roster_entries,
                summary.out_dir.display()
            );
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
