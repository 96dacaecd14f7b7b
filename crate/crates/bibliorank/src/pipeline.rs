//! File-mediated command layer behind the `bibliorank` CLI: validate,
//! score, compare, synth. Each command reads explicit input files, writes
//! its outputs plus a run manifest into the output directory, and returns
//! a structured summary. Scoring and comparison are seed-free; all
//! randomness enters through the synth seed.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::corpus::{parse_corpus, Corpus, ParseMode, ParseOutcome, ValidationReport};
use crate::error::{Error, Result};
use crate::indicators::{score_all, FieldMedianTable, InstitutionFieldScore, ScoreSet};
use crate::rankings::{build_report, ComparisonReport};
use crate::report::{
    read_scores_csv, render_summary, write_report_csvs, write_report_json, write_scores_csv,
};
use crate::synth::{generate_to_dir, SynthParams};

/// Output format switch: `Json` adds `report.json` alongside the CSVs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    Csv,
    #[default]
    Json,
}

/// The three corpus input files.
#[derive(Debug, Clone)]
pub struct CorpusPaths {
    pub publications: PathBuf,
    pub roster: PathBuf,
    pub sds_map: PathBuf,
}

impl CorpusPaths {
    /// The conventional file names under one directory.
    pub fn in_dir(dir: &Path) -> CorpusPaths {
        CorpusPaths {
            publications: dir.join("publications.jsonl"),
            roster: dir.join("roster.csv"),
            sds_map: dir.join("sds_map.csv"),
        }
    }

    fn all(&self) -> [&Path; 3] {
        [&self.publications, &self.roster, &self.sds_map]
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

/// Provenance record written as `run_manifest.json` on every successful
/// run. The manifest carries timing and is the one output excluded from
/// the byte-identical rerun contract.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub config: RunConfig,
    pub inputs: Vec<InputDigest>,
    pub seed: Option<u64>,
    pub outputs: Vec<String>,
    pub tallies: BTreeMap<String, u64>,
    pub excluded_sds: Vec<String>,
    pub elapsed_ms: u128,
}

fn sha256_file(path: &Path) -> Result<String> {
    let mut file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    loop {
        let n = file.read(&mut buf).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    let digest = hasher.finalize();
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

fn digest_inputs(paths: &[&Path]) -> Result<Vec<InputDigest>> {
    paths
        .iter()
        .map(|p| {
            Ok(InputDigest {
                path: p.display().to_string(),
                sha256: sha256_file(p)?,
            })
        })
        .collect()
}

fn ensure_out_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_manifest(dir: &Path, manifest: &RunManifest) -> Result<()> {
    let path = dir.join("run_manifest.json");
    let json =
        serde_json::to_string_pretty(manifest).map_err(|e| Error::io(&path, e.into()))?;
    std::fs::write(&path, format!("{json}\n")).map_err(|e| Error::io(&path, e))
}

fn load_config(config_path: Option<&Path>) -> Result<RunConfig> {
    match config_path {
        Some(path) => RunConfig::from_toml_file(path),
        None => Ok(RunConfig::default()),
    }
}

fn open(path: &Path) -> Result<std::fs::File> {
    std::fs::File::open(path).map_err(|e| Error::io(path, e))
}

fn parse_corpus_files(
    paths: &CorpusPaths,
    config: &RunConfig,
    mode: ParseMode,
) -> Result<ParseOutcome> {
    parse_corpus(
        open(&paths.publications)?,
        open(&paths.roster)?,
        open(&paths.sds_map)?,
        config.clone(),
        mode,
    )
}

fn write_validation_report(dir: &Path, report: &ValidationReport) -> Result<PathBuf> {
    let path = dir.join("validation_report.json");
    let json = serde_json::to_string_pretty(report).map_err(|e| Error::io(&path, e.into()))?;
    std::fs::write(&path, format!("{json}\n")).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Runs `f` on a dedicated rayon pool of `jobs` threads (0 = library
/// default). Scoring output is independent of the pool size.
pub fn with_jobs<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> T {
    if jobs == 0 {
        return f();
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .expect("thread pool")
        .install(f)
}

// ---------------------------------------------------------------------------
// validate
// ---------------------------------------------------------------------------

#[derive(Debug)]
pub struct ValidateSummary {
    pub clean: bool,
    pub report: ValidationReport,
    pub report_path: PathBuf,
}

impl ValidateSummary {
    pub fn exit_code(&self) -> i32 {
        if self.clean {
            0
        } else {
            1
        }
    }
}

/// Parses the corpus and writes `validation_report.json`. Exit 0 when the
/// corpus is usable (clean in strict mode, always in lenient mode).
pub fn run_validate(
    paths: &CorpusPaths,
    config_path: Option<&Path>,
    out_dir: &Path,
    mode: ParseMode,
) -> Result<ValidateSummary> {
    let started = Instant::now();
    let config = load_config(config_path)?;
    ensure_out_dir(out_dir)?;
    let inputs = digest_inputs(&paths.all())?;
    let outcome = parse_corpus_files(paths, &config, mode)?;
    let (clean, report) = match outcome {
        ParseOutcome::Accepted { report, .. } => (true, report),
        ParseOutcome::Rejected(report) => (false, report),
    };
    let report_path = write_validation_report(out_dir, &report)?;
    let mut tallies = BTreeMap::new();
    tallies.insert("publications_accepted".into(), report.publications_accepted as u64);
    tallies.insert("roster_accepted".into(), report.roster_accepted as u64);
    tallies.insert("rows_rejected".into(), report.rejected_count() as u64);
    write_manifest(
        out_dir,
        &RunManifest {
            command: "validate".into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            config,
            inputs,
            seed: None,
            outputs: vec![report_path.display().to_string()],
            tallies,
            excluded_sds: Vec::new(),
            elapsed_ms: started.elapsed().as_millis(),
        },
    )?;
    Ok(ValidateSummary {
        clean,
        report,
        report_path,
    })
}

// ---------------------------------------------------------------------------
// score
// ---------------------------------------------------------------------------

#[derive(Debug)]
pub struct ScoreSummary {
    pub scores_path: PathBuf,
    pub pairs_scored: usize,
    pub active_sds: usize,
    pub excluded_sds: Vec<String>,
    pub dropped_rows: usize,
}

fn corpus_or_validation_error(
    paths: &CorpusPaths,
    config: &RunConfig,
    mode: ParseMode,
    out_dir: &Path,
) -> Result<(Corpus, usize)> {
    match parse_corpus_files(paths, config, mode)? {
        ParseOutcome::Accepted { corpus, report } => Ok((corpus, report.rejected_count())),
        ParseOutcome::Rejected(report) => {
            write_validation_report(out_dir, &report)?;
            Err(Error::ValidationFailed {
                rejected: report.rejected_count(),
            })
        }
    }
}

/// Scores every active (university, SDS) pair and writes `scores.csv`.
pub fn run_score(
    paths: &CorpusPaths,
    config_path: Option<&Path>,
    out_dir: &Path,
    mode: ParseMode,
    jobs: usize,
) -> Result<ScoreSummary> {
    let started = Instant::now();
    let config = load_config(config_path)?;
    ensure_out_dir(out_dir)?;
    let inputs = digest_inputs(&paths.all())?;
    let (corpus, dropped_rows) = corpus_or_validation_error(paths, &config, mode, out_dir)?;

    let score_set: ScoreSet = with_jobs(jobs, || -> Result<ScoreSet> {
        let table = FieldMedianTable::build(&corpus);
        score_all(&corpus, &table)
    })?;

    let scores_path = out_dir.join("scores.csv");
    write_scores_csv(&score_set.scores, &scores_path)?;

    let mut tallies = BTreeMap::new();
    tallies.insert("pairs_scored".into(), score_set.scores.len() as u64);
    tallies.insert("sds_active".into(), score_set.active_sds.len() as u64);
    tallies.insert(
        "sds_excluded_by_activity".into(),
        score_set.inactive_sds.len() as u64,
    );
    tallies.insert("rows_dropped".into(), dropped_rows as u64);
    write_manifest(
        out_dir,
        &RunManifest {
            command: "score".into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            config,
            inputs,
            seed: None,
            outputs: vec![scores_path.display().to_string()],
            tallies,
            excluded_sds: score_set.inactive_sds.clone(),
            elapsed_ms: started.elapsed().as_millis(),
        },
    )?;
    Ok(ScoreSummary {
        scores_path,
        pairs_scored: score_set.scores.len(),
        active_sds: score_set.active_sds.len(),
        excluded_sds: score_set.inactive_sds,
        dropped_rows,
    })
}

// ---------------------------------------------------------------------------
// compare
// ---------------------------------------------------------------------------

/// Where `compare` takes its scores from: a previous `scores.csv` (with the
/// SDS map for discipline grouping) or the corpus files directly.
#[derive(Debug, Clone)]
pub enum CompareInput {
    Scores {
        scores: PathBuf,
        sds_map: PathBuf,
    },
    Corpus(CorpusPaths),
}

#[derive(Debug)]
pub struct CompareSummary {
    pub report: ComparisonReport,
    pub written: Vec<PathBuf>,
    pub summary_text: String,
}

fn read_sds_map_file(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 {
            if line != "sds_code,uda_code" {
                return Err(Error::BadInput {
                    path: path.to_path_buf(),
                    reason: format!("bad header \"{line}\""),
                });
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.splitn(2, ',');
        let sds = parts.next().unwrap_or_default();
        let uda = parts.next().ok_or_else(|| Error::BadInput {
            path: path.to_path_buf(),
            reason: format!("line {}: expected 2 fields", i + 1),
        })?;
        map.insert(sds.to_string(), uda.to_string());
    }
    Ok(map)
}

/// Builds the comparison report and writes the table CSVs (plus
/// `report.json` under [`OutputFormat::Json`]).
pub fn run_compare(
    input: &CompareInput,
    config_path: Option<&Path>,
    out_dir: &Path,
    mode: ParseMode,
    jobs: usize,
    format: OutputFormat,
) -> Result<CompareSummary> {
    let started = Instant::now();
    let config = load_config(config_path)?;
    ensure_out_dir(out_dir)?;

    let (inputs, scores, sds_to_uda): (Vec<InputDigest>, Vec<InstitutionFieldScore>, _) =
        match input {
            CompareInput::Scores { scores, sds_map } => {
                let digests = digest_inputs(&[scores.as_path(), sds_map.as_path()])?;
                (
                    digests,
                    read_scores_csv(scores)?,
                    read_sds_map_file(sds_map)?,
                )
            }
            CompareInput::Corpus(paths) => {
                let digests = digest_inputs(&paths.all())?;
                let (corpus, _) = corpus_or_validation_error(paths, &config, mode, out_dir)?;
                let score_set = with_jobs(jobs, || -> Result<ScoreSet> {
                    let table = FieldMedianTable::build(&corpus);
                    score_all(&corpus, &table)
                })?;
                (digests, score_set.scores, corpus.sds_to_uda().clone())
            }
        };

    let report = build_report(&scores, &sds_to_uda, &config)?;
    let mut written = write_report_csvs(&report, out_dir)?;
    if format == OutputFormat::Json {
        let json_path = out_dir.join("report.json");
        write_report_json(&report, &config, &json_path)?;
        written.push(json_path);
    }
    let summary_text = render_summary(&report);

    let mut tallies = BTreeMap::new();
    tallies.insert("sds_with_scores".into(), report.tallies.sds_with_scores as u64);
    tallies.insert("sds_analyzed".into(), report.tallies.sds_analyzed as u64);
    tallies.insert(
        "sds_excluded_small".into(),
        report.tallies.sds_excluded_small.len() as u64,
    );
    write_manifest(
        out_dir,
        &RunManifest {
            command: "compare".into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            config,
            inputs,
            seed: None,
            outputs: written.iter().map(|p| p.display().to_string()).collect(),
            tallies,
            excluded_sds: report.tallies.sds_excluded_small.clone(),
            elapsed_ms: started.elapsed().as_millis(),
        },
    )?;
    Ok(CompareSummary {
        report,
        written,
        summary_text,
    })
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

#[derive(Debug)]
pub struct SynthSummary {
    pub publications: usize,
    pub roster_entries: usize,
    pub out_dir: PathBuf,
}

/// Generates a corpus into `out_dir` along with `params.json` and a
/// matching `config.toml`.
pub fn run_synth(
    params: &SynthParams,
    params_path: Option<&Path>,
    out_dir: &Path,
) -> Result<SynthSummary> {
    let started = Instant::now();
    ensure_out_dir(out_dir)?;
    let inputs = match params_path {
        Some(path) => digest_inputs(&[path])?,
        None => Vec::new(),
    };
    let corpus = generate_to_dir(params, out_dir)?;
    let outputs = vec![
        out_dir.join("publications.jsonl"),
        out_dir.join("roster.csv"),
        out_dir.join("sds_map.csv"),
        out_dir.join("params.json"),
        out_dir.join("config.toml"),
    ];
    let mut tallies = BTreeMap::new();
    tallies.insert("publications".into(), corpus.publications().len() as u64);
    tallies.insert("roster_entries".into(), corpus.roster().len() as u64);
    write_manifest(
        out_dir,
        &RunManifest {
            command: "synth".into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            config: params.run_config(),
            inputs,
            seed: Some(params.seed),
            outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
            tallies,
            excluded_sds: Vec::new(),
            elapsed_ms: started.elapsed().as_millis(),
        },
    )?;
    Ok(SynthSummary {
        publications: corpus.publications().len(),
        roster_entries: corpus.roster().len(),
        out_dir: out_dir.to_path_buf(),
    })
}

/// Loads synth parameters from a JSON file.
pub fn load_synth_params(path: &Path) -> Result<SynthParams> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::BadInput {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}
