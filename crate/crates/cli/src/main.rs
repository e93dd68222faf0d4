use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use mfc_core::corpus::{
    canonicalize, corpus_stats, parse_mfrc, parse_mftc, read_canonical, split_in_domain, write_jsonl, Canonicalized,
    SplitSpec, DEFAULT_AGREEMENT, SHUFFLE_ALGORITHM,
};
use mfc_core::correlation::{validate_mfc, CorrelationMode, Metric};
use mfc_core::fairness::{fairness_report, mfc_from_diffs};
use mfc_core::predio::{write_predictions, PredictionSet};
use mfc_core::report::{
    audit, correlation_note, correlation_table, fairness_table, mfc_point_table, mfc_table, render, AuditConfig,
    AuditInput, Format, Table,
};
use mfc_core::resampling::{BootstrapSpec, DEFAULT_LEVEL, DEFAULT_RESAMPLES};
use mfc_core::synth::{generate, SynthConfig};
use mfc_core::{Platform, N_LABELS};
use serde::Serialize;
use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Fairness audit for moral-foundation classifiers across Twitter and Reddit.
#[derive(Parser)]
#[command(name = "mfc-audit", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Seed for splits and bootstrap resampling.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Number of bootstrap resamples.
    #[arg(long, global = true, default_value_t = DEFAULT_RESAMPLES)]
    boot_n: usize,
    /// Confidence level of bootstrap intervals.
    #[arg(long, global = true, default_value_t = DEFAULT_LEVEL)]
    boot_level: f64,
    /// Re-binarize prediction logits at this threshold.
    #[arg(long, global = true)]
    threshold: Option<f64>,
    /// per-label or bootstrap-pooled.
    #[arg(long, global = true, default_value = "per-label")]
    corr_mode: CorrelationMode,
    /// markdown, csv or json.
    #[arg(long, global = true, default_value = "markdown")]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Parse raw corpora into canonical datasets, exclusion sidecars and splits.
    Ingest(IngestArgs),
    /// Full report over up to four prediction files.
    Audit(ReportArgs),
    /// DP and EO differences over the cross-domain prediction files.
    Fairness(ReportArgs),
    /// MFC from cross-domain prediction files or from per-label differences.
    Mfc(MfcArgs),
    /// Spearman correlation of MFC against the baseline metrics.
    Correlate(CorrelateArgs),
    /// Write a synthetic prediction file.
    Synth(SynthArgs),
    /// Label counts and word-count summary of a canonical dataset.
    Stats(StatsArgs),
}

#[derive(Args)]
struct IngestArgs {
    /// Raw MFTC file (nested JSON).
    #[arg(long)]
    mftc: Option<PathBuf>,
    /// Raw MFRC file (CSV, one row per text and annotator).
    #[arg(long)]
    mfrc: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Fraction of annotators that must agree on a label.
    #[arg(long, default_value_t = DEFAULT_AGREEMENT)]
    agreement: f64,
    /// Train, validation and test fractions.
    #[arg(long, value_delimiter = ',', num_args = 3, default_values_t = [0.8, 0.1, 0.1])]
    split: Vec<f64>,
}

#[derive(Args)]
struct ReportArgs {
    /// Prediction files; the direction is read from each header.
    #[arg(required = true)]
    predictions: Vec<PathBuf>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MfcArgs {
    /// The two cross-domain prediction files.
    predictions: Vec<PathBuf>,
    /// Per-label differences in label order, e.g. 0.22,0.04,0.05,0.03,0.08.
    #[arg(long, value_delimiter = ',', conflicts_with = "predictions")]
    diffs: Option<Vec<f64>>,
}

#[derive(Args)]
struct CorrelateArgs {
    /// Prediction files (both cross-domain directions).
    predictions: Vec<PathBuf>,
    /// JSON object mapping mfc, f1, precision, recall, dp, eo to equal-length vectors.
    #[arg(long, conflicts_with = "predictions")]
    vectors: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Keep only records from the direction's target group.
    #[arg(long)]
    target_only: bool,
}

#[derive(Args)]
struct StatsArgs {
    /// Canonical dataset (JSON lines).
    dataset: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let g = &cli.global;
    match &cli.command {
        Command::Ingest(a) => ingest(g, a),
        Command::Audit(a) => {
            let report = audit(load_all(&a.predictions)?, &audit_config(g)?)?;
            emit(a.out.as_deref(), &render(&report, g.format))
        }
        Command::Fairness(a) => {
            let sets = load_sets(g, &a.predictions)?;
            let report = fairness_report(&sets.iter().collect::<Vec<_>>(), &bootstrap(g)?)?;
            emit(a.out.as_deref(), &present(g.format, &report, &[fairness_table(&report), mfc_table(&report)], None)?)
        }
        Command::Mfc(a) => mfc_cmd(g, a),
        Command::Correlate(a) => correlate(g, a),
        Command::Synth(a) => {
            let config = SynthConfig::load(&a.config)?;
            let mut set = generate(&config)?;
            if a.target_only {
                set.records.retain(|r| r.group == config.direction.target);
            }
            write_predictions(&set, &a.out).with_context(|| format!("writing {}", a.out.display()))?;
            log::info!("wrote {} records to {}", set.records.len(), a.out.display());
            Ok(())
        }
        Command::Stats(a) => {
            let data = read_canonical(&a.dataset)?;
            let stats = corpus_stats(&data);
            let mut rows: Vec<Vec<String>> =
                stats.label_counts.iter().map(|(l, c)| vec![l.to_string(), c.to_string()]).collect();
            rows.push(vec!["instances".into(), stats.n_instances.to_string()]);
            let words = match &stats.word_counts {
                Some(w) => vec![vec![w.min.to_string(), w.median.to_string(), format!("{:.2}", w.mean), w.max.to_string()]],
                None => vec![vec!["n/a".into(); 4]],
            };
            let tables = [Table::new(&["Label", "Count"], rows), Table::new(&["Min words", "Median", "Mean", "Max"], words)];
            emit(None, &present(g.format, &stats, &tables, None)?)
        }
    }
}

fn bootstrap(g: &Global) -> Result<BootstrapSpec> {
    BootstrapSpec::new(g.boot_n, g.boot_level, g.seed).context("invalid bootstrap settings")
}

fn audit_config(g: &Global) -> Result<AuditConfig> {
    Ok(AuditConfig { bootstrap: bootstrap(g)?, threshold: g.threshold, corr_mode: g.corr_mode })
}

fn load_all(paths: &[PathBuf]) -> Result<Vec<AuditInput>> {
    paths.iter().map(|p| Ok(AuditInput::load(p)?)).collect()
}

/// Loaded sets, re-binarized when `--threshold` is given.
fn load_sets(g: &Global, paths: &[PathBuf]) -> Result<Vec<PredictionSet>> {
    load_all(paths)?
        .into_iter()
        .map(|i| match g.threshold {
            Some(t) => i.set.rethreshold(t).with_context(|| format!("{}: cannot re-threshold", i.path)),
            None => Ok(i.set),
        })
        .collect()
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

/// Structured output serializes `value`; the table formats show `tables`.
fn present<T: Serialize>(format: Format, value: &T, tables: &[Table], note: Option<String>) -> Result<String> {
    Ok(match format {
        Format::Structured => serde_json::to_string_pretty(value)? + "\n",
        Format::Csv => tables.iter().map(Table::to_csv).collect::<Vec<_>>().join("\n"),
        Format::Markdown => {
            let mut s = note.map(|n| n + "\n\n").unwrap_or_default();
            s.push_str(&tables.iter().map(Table::to_markdown).collect::<Vec<_>>().join("\n"));
            s
        }
    })
}

fn mfc_cmd(g: &Global, a: &MfcArgs) -> Result<()> {
    if let Some(diffs) = &a.diffs {
        let arr: [f64; N_LABELS] = diffs
            .as_slice()
            .try_into()
            .map_err(|_| anyhow::anyhow!("--diffs needs {N_LABELS} values, got {}", diffs.len()))?;
        if let Some(d) = arr.iter().find(|d| !(0.0..=1.0).contains(*d)) {
            bail!("--diffs value {d} outside [0, 1]");
        }
        let m = mfc_from_diffs(arr);
        return emit(None, &present(g.format, &m, &[mfc_point_table(&m)], None)?);
    }
    if a.predictions.is_empty() {
        bail!("give the two cross-domain prediction files or --diffs");
    }
    let sets = load_sets(g, &a.predictions)?;
    let report = fairness_report(&sets.iter().collect::<Vec<_>>(), &bootstrap(g)?)?;
    if report.directions.len() < 2 {
        bail!("MFC needs both MFRC->MFTC and MFTC->MFRC prediction files");
    }
    emit(None, &present(g.format, &report, &[mfc_table(&report)], None)?)
}

fn correlate(g: &Global, a: &CorrelateArgs) -> Result<()> {
    let report = if let Some(path) = &a.vectors {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let vectors: BTreeMap<Metric, Vec<f64>> =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        validate_mfc(&vectors, g.corr_mode).with_context(|| path.display().to_string())?
    } else {
        if a.predictions.is_empty() {
            bail!("give prediction files or --vectors");
        }
        let report = audit(load_all(&a.predictions)?, &audit_config(g)?)?;
        match report.correlation {
            Some(c) => c,
            None => bail!("correlation unavailable: {}", report.gaps.join("; ")),
        }
    };
    let note = correlation_note(&report);
    emit(None, &present(g.format, &report, &[correlation_table(&report)], Some(note))?)
}

#[derive(Serialize)]
struct SplitMeta<'a> {
    platform: Platform,
    seed: u64,
    ratios: [f64; 3],
    algorithm: &'static str,
    sizes: BTreeMap<&'a str, usize>,
}

fn ingest(g: &Global, a: &IngestArgs) -> Result<()> {
    if a.mftc.is_none() && a.mfrc.is_none() {
        bail!("give --mftc and/or --mfrc");
    }
    let ratios: [f64; 3] = a.split.as_slice().try_into().map_err(|_| anyhow::anyhow!("--split needs 3 fractions"))?;
    let spec = SplitSpec::new(ratios, g.seed)?;
    std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let inputs = [(Platform::Twitter, &a.mftc), (Platform::Reddit, &a.mfrc)];
    for (platform, path) in inputs {
        let Some(path) = path else { continue };
        let raw = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        let parsed = match platform {
            Platform::Twitter => parse_mftc(&raw),
            Platform::Reddit => parse_mfrc(&raw),
        }
        .with_context(|| path.display().to_string())?;
        for w in &parsed.warnings {
            log::warn!("{}: {w}", path.display());
        }
        let Canonicalized { instances, exclusions, summary } = canonicalize(&parsed, platform, a.agreement)?;
        let file = |suffix: &str| a.out.join(format!("{}.{suffix}", platform.name()));
        write_jsonl(&file("jsonl"), &instances)?;
        write_jsonl(&file("exclusions.jsonl"), &exclusions)?;
        std::fs::write(file("summary.json"), serde_json::to_string_pretty(&summary)? + "\n")?;
        println!(
            "{}: {} texts, {} annotations, {} kept, {} excluded",
            platform.corpus(),
            summary.n_texts,
            summary.n_annotations,
            summary.n_kept,
            summary.n_excluded
        );
        match split_in_domain(&instances, &spec) {
            Ok(split) => {
                let parts = [("train", &split.train), ("val", &split.val), ("test", &split.test)];
                for (name, part) in parts {
                    write_jsonl(&file(&format!("{name}.jsonl")), part)?;
                }
                let meta = SplitMeta {
                    platform,
                    seed: g.seed,
                    ratios,
                    algorithm: SHUFFLE_ALGORITHM,
                    sizes: parts.iter().map(|(n, p)| (*n, p.len())).collect(),
                };
                std::fs::write(file("split.json"), serde_json::to_string_pretty(&meta)? + "\n")?;
            }
            Err(e) => log::warn!("{}: no split written: {e}", platform.corpus()),
        }
    }
    Ok(())
}
