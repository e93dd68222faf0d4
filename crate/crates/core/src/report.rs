//! Full audit over the four experiment scenarios and its renderings.
//!
//! Missing inputs never abort the audit: the affected sections are `None`
//! and a line is added to `gaps`.

use crate::correlation::{
    spearman, spearman_p, validate_mfc, CorrelationEntry, CorrelationError, CorrelationMode, CorrelationReport, Metric,
};
use crate::fairness::{
    dp_difference, eo_difference, fairness_report, mfc, positive_rates, DirectionRates, Estimate, FairnessError,
    FairnessReport, GroupRates, Mfc, Tagged,
};
use crate::labels::{Direction, MoralLabel, Platform, N_LABELS};
use crate::metrics::{bce_term, degradation, micro_f1, per_label_prf, ConfusionCounts};
use crate::predio::{PredictionRecord, PredictionSet, PredioError};
use crate::resampling::{bootstrap_many, resample_statistics, BootstrapError, BootstrapSpec, Resample};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

pub const TOOL_NAME: &str = "mfc-audit";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("{path}: {source}")]
    Input { path: String, source: PredioError },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("two prediction files for {direction}: {first} and {second}")]
    DuplicateScenario { direction: Direction, first: String, second: String },
    #[error("no prediction files given")]
    NoInputs,
    #[error("{path}: cannot re-threshold: {source}")]
    Threshold { path: String, source: PredioError },
    #[error(transparent)]
    Bootstrap(#[from] BootstrapError),
    #[error(transparent)]
    Fairness(#[from] FairnessError),
    #[error(transparent)]
    Correlation(#[from] CorrelationError),
}

/// A prediction file together with where it came from.
#[derive(Debug, Clone)]
pub struct AuditInput {
    pub path: String,
    pub sha256: String,
    pub set: PredictionSet,
}

impl AuditInput {
    pub fn load(path: &Path) -> Result<Self, ReportError> {
        let p = path.display().to_string();
        let bytes = std::fs::read(path).map_err(|e| ReportError::Io { path: p.clone(), message: e.to_string() })?;
        let text = std::str::from_utf8(&bytes).map_err(|e| ReportError::Io { path: p.clone(), message: e.to_string() })?;
        let set = PredictionSet::from_wire(text).map_err(|source| ReportError::Input { path: p.clone(), source })?;
        Ok(AuditInput { path: p, sha256: sha256_hex(&bytes), set })
    }

    /// An in-memory set; the hash is taken over its wire form.
    pub fn from_set(name: &str, set: PredictionSet) -> Result<Self, ReportError> {
        let wire = set.to_wire().map_err(|source| ReportError::Input { path: name.to_string(), source })?;
        Ok(AuditInput { path: name.to_string(), sha256: sha256_hex(wire.as_bytes()), set })
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AuditConfig {
    pub bootstrap: BootstrapSpec,
    /// Re-binarize logits at this threshold; `None` keeps the files' predictions.
    pub threshold: Option<f64>,
    pub corr_mode: CorrelationMode,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InputFile {
    pub direction: Direction,
    pub path: String,
    pub sha256: String,
    pub model: String,
    pub n_records: usize,
    pub file_threshold: f64,
    pub file_seed: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunMetadata {
    pub tool: &'static str,
    pub version: &'static str,
    pub seed: u64,
    pub n_resamples: usize,
    pub level: f64,
    pub threshold: Option<f64>,
    pub corr_mode: CorrelationMode,
    pub inputs: Vec<InputFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabelScores {
    pub precision: Estimate,
    pub recall: Estimate,
    pub f1: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioMetrics {
    pub direction: Direction,
    pub n_records: usize,
    pub micro_f1: Estimate,
    pub emr: Estimate,
    /// Undefined when the file carries no logits.
    pub loss: Estimate,
    pub per_label: BTreeMap<MoralLabel, LabelScores>,
    pub counts: ConfusionCounts,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Degradation {
    /// Training corpus.
    pub source: Platform,
    pub in_domain_f1: Option<f64>,
    pub cross_domain_f1: Option<f64>,
    /// Percentage points; undefined when either scenario is missing.
    pub points: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub metadata: RunMetadata,
    pub scenarios: BTreeMap<Direction, ScenarioMetrics>,
    pub degradation: Vec<Degradation>,
    pub fairness: Option<FairnessReport>,
    pub correlation: Option<CorrelationReport>,
    pub gaps: Vec<String>,
    /// Inputs that are usable but not shaped as expected.
    pub warnings: Vec<String>,
}

const SCENARIO_STATS: usize = 3 + 3 * N_LABELS;

fn scenario_statistics(sample: &Resample<PredictionRecord>) -> Vec<Option<f64>> {
    let counts = ConfusionCounts::from_records(sample.iter());
    let n = sample.len() as f64;
    let exact = sample.iter().filter(|r| r.gold == r.predicted).count() as f64;
    let loss = sample
        .iter()
        .map(|r| r.logits.map(|z| (0..N_LABELS).map(|i| bce_term(z[i], r.gold.bit(i))).sum::<f64>() / N_LABELS as f64))
        .sum::<Option<f64>>()
        .map(|total| total / n);
    let mut out = Vec::with_capacity(SCENARIO_STATS);
    out.push(Some(micro_f1(&counts)));
    out.push(Some(exact / n));
    out.push(loss);
    for p in per_label_prf(&counts) {
        out.extend([Some(p.precision), Some(p.recall), Some(p.f1)]);
    }
    out
}

pub fn scenario_metrics(set: &PredictionSet, spec: &BootstrapSpec) -> Result<ScenarioMetrics, ReportError> {
    let records = &set.records;
    let point = scenario_statistics(&Resample::full(records));
    let boots = bootstrap_many(scenario_statistics, records, spec)?;
    let est: Vec<Estimate> = point.iter().zip(boots).map(|(p, b)| Estimate::from_bootstrap(*p, b)).collect();
    let per_label = MoralLabel::ALL
        .iter()
        .map(|&l| {
            let k = 3 + 3 * l.index();
            (l, LabelScores { precision: est[k], recall: est[k + 1], f1: est[k + 2] })
        })
        .collect();
    Ok(ScenarioMetrics {
        direction: set.meta.direction,
        n_records: records.len(),
        micro_f1: est[0],
        emr: est[1],
        loss: est[2],
        per_label,
        counts: ConfusionCounts::from_records(records),
    })
}

/// Per-label MFC, F1, precision, recall, |ΔDP| and ΔEO over a cross-domain pool.
/// `None` if any of the 30 values is undefined.
pub fn correlation_vectors<'a, I>(pool: I) -> Option<BTreeMap<Metric, Vec<f64>>>
where
    I: IntoIterator<Item = &'a Tagged<'a>> + Clone,
{
    let records = || pool.clone().into_iter().map(|(_, r)| *r);
    let rates = GroupRates::from_records(records());
    let counts = ConfusionCounts::from_records(records());
    let prf = per_label_prf(&counts);
    let by_dir: DirectionRates = [Direction::REDDIT_TO_TWITTER, Direction::TWITTER_TO_REDDIT]
        .into_iter()
        .map(|d| (d, positive_rates(pool.clone().into_iter().filter(|(rd, _)| *rd == d).map(|(_, r)| *r))))
        .collect();
    let m = mfc(&by_dir).ok()?;
    let mut out: BTreeMap<Metric, Vec<f64>> = BTreeMap::new();
    for l in MoralLabel::ALL {
        let i = l.index();
        out.entry(Metric::Mfc).or_default().push(m.per_label[i]);
        out.entry(Metric::F1).or_default().push(prf[i].f1);
        out.entry(Metric::Precision).or_default().push(prf[i].precision);
        out.entry(Metric::Recall).or_default().push(prf[i].recall);
        out.entry(Metric::Dp).or_default().push(dp_difference(&rates, l)?.abs);
        out.entry(Metric::Eo).or_default().push(eo_difference(&rates, l)?);
    }
    Some(out)
}

const METRIC_ORDER: [Metric; 6] = [Metric::Mfc, Metric::F1, Metric::Precision, Metric::Recall, Metric::Dp, Metric::Eo];

/// Correlation with every resample's five per-label values pooled; resamples
/// with an undefined value are dropped whole.
pub fn pooled_correlation(pool: &[Tagged], spec: &BootstrapSpec) -> Result<CorrelationReport, ReportError> {
    let flat = |s: &Resample<Tagged>| -> Vec<Option<f64>> {
        match correlation_vectors(s.iter().collect::<Vec<_>>()) {
            Some(v) => METRIC_ORDER.iter().flat_map(|m| v[m].iter().map(|x| Some(*x))).collect(),
            None => vec![None; METRIC_ORDER.len() * N_LABELS],
        }
    };
    let per_resample = resample_statistics(flat, pool, spec)?;
    let mut pooled: BTreeMap<Metric, Vec<f64>> = BTreeMap::new();
    for row in per_resample.iter().filter(|r| r.iter().all(Option::is_some)) {
        for (k, m) in METRIC_ORDER.iter().enumerate() {
            pooled.entry(*m).or_default().extend(row[k * N_LABELS..(k + 1) * N_LABELS].iter().map(|x| x.unwrap()));
        }
    }
    let method = CorrelationMode::BootstrapPooled.p_method();
    let mfc_v = pooled.get(&Metric::Mfc).cloned().unwrap_or_default();
    let mut against_mfc = BTreeMap::new();
    for m in Metric::BASELINES {
        let v = pooled.get(&m).cloned().unwrap_or_default();
        let rho = spearman(&mfc_v, &v)?;
        let p_value = rho.map(|r| spearman_p(r, mfc_v.len(), method)).transpose()?;
        against_mfc.insert(m, CorrelationEntry { rho, p_value, n: mfc_v.len() });
    }
    Ok(CorrelationReport { mode: CorrelationMode::BootstrapPooled, p_method: method, n: mfc_v.len(), against_mfc })
}

/// Metrics for each scenario present, degradation, fairness over the
/// cross-domain pool and MFC correlations.
pub fn audit(inputs: Vec<AuditInput>, config: &AuditConfig) -> Result<AuditReport, ReportError> {
    if inputs.is_empty() {
        return Err(ReportError::NoInputs);
    }
    config.bootstrap.validate()?;
    let mut by_dir: BTreeMap<Direction, AuditInput> = BTreeMap::new();
    for mut input in inputs {
        if let Some(t) = config.threshold {
            input.set = input
                .set
                .rethreshold(t)
                .map_err(|source| ReportError::Threshold { path: input.path.clone(), source })?;
        }
        let d = input.set.meta.direction;
        if let Some(prev) = by_dir.get(&d) {
            return Err(ReportError::DuplicateScenario { direction: d, first: prev.path.clone(), second: input.path });
        }
        by_dir.insert(d, input);
    }

    let mut gaps = Vec::new();
    for d in Direction::ALL {
        if !by_dir.contains_key(&d) {
            let kind = if d.is_cross_domain() { "cross-domain" } else { "in-domain" };
            gaps.push(format!("{kind} scenario {d}: no prediction file"));
        }
    }

    let metadata = RunMetadata {
        tool: TOOL_NAME,
        version: TOOL_VERSION,
        seed: config.bootstrap.seed,
        n_resamples: config.bootstrap.n_resamples,
        level: config.bootstrap.level,
        threshold: config.threshold,
        corr_mode: config.corr_mode,
        inputs: by_dir
            .values()
            .map(|i| InputFile {
                direction: i.set.meta.direction,
                path: i.path.clone(),
                sha256: i.sha256.clone(),
                model: i.set.meta.model.clone(),
                n_records: i.set.records.len(),
                file_threshold: i.set.meta.threshold,
                file_seed: i.set.meta.seed.clone(),
            })
            .collect(),
    };

    let mut warnings = Vec::new();
    for (d, input) in &by_dir {
        let off_target = input.set.records.iter().filter(|r| r.group != d.target).count();
        if off_target > 0 {
            warnings.push(format!(
                "{}: {off_target} of {} records are not from the {d} target group ({})",
                input.path,
                input.set.records.len(),
                d.target
            ));
        }
    }

    let mut scenarios = BTreeMap::new();
    for (d, input) in &by_dir {
        if input.set.records.is_empty() {
            gaps.push(format!("scenario {d}: {} has no records", input.path));
            continue;
        }
        scenarios.insert(*d, scenario_metrics(&input.set, &config.bootstrap)?);
    }

    let degradation = [Platform::Twitter, Platform::Reddit]
        .into_iter()
        .map(|source| {
            let f1 = |d: Direction| scenarios.get(&d).and_then(|s: &ScenarioMetrics| s.micro_f1.value);
            let in_domain_f1 = f1(Direction::new(source, source));
            let cross_domain_f1 = f1(Direction::new(source, source.other()));
            let points = in_domain_f1.zip(cross_domain_f1).map(|(a, b)| degradation(a, b));
            Degradation { source, in_domain_f1, cross_domain_f1, points }
        })
        .collect();

    let cross: Vec<&PredictionSet> = by_dir
        .values()
        .filter(|i| i.set.meta.direction.is_cross_domain() && !i.set.records.is_empty())
        .map(|i| &i.set)
        .collect();
    let fairness = if cross.is_empty() {
        gaps.push("fairness: no cross-domain predictions".to_string());
        None
    } else {
        Some(fairness_report(&cross, &config.bootstrap)?)
    };

    let pool: Vec<Tagged> = cross.iter().flat_map(|s| s.records.iter().map(move |r| (s.meta.direction, r))).collect();
    let correlation = if cross.len() < 2 {
        gaps.push("correlation: MFC needs both cross-domain directions".to_string());
        None
    } else {
        match config.corr_mode {
            CorrelationMode::PerLabel => match correlation_vectors(&pool) {
                Some(v) => Some(validate_mfc(&v, CorrelationMode::PerLabel)?),
                None => {
                    gaps.push("correlation: a per-label rate is undefined".to_string());
                    None
                }
            },
            CorrelationMode::BootstrapPooled => match pooled_correlation(&pool, &config.bootstrap) {
                Ok(r) if r.n >= 3 => Some(r),
                Ok(_) | Err(ReportError::Correlation(CorrelationError::TooFew(_))) => {
                    gaps.push("correlation: too few resamples with all rates defined".to_string());
                    None
                }
                Err(e) => return Err(e),
            },
        }
    };

    Ok(AuditReport { metadata, scenarios, degradation, fairness, correlation, gaps, warnings })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Structured,
    Markdown,
}

impl std::str::FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" | "structured" => Ok(Format::Structured),
            "markdown" | "md" => Ok(Format::Markdown),
            other => Err(format!("unknown format `{other}`")),
        }
    }
}

pub const NA: &str = "n/a";

pub fn fmt_value(v: Option<f64>) -> String {
    v.map_or_else(|| NA.to_string(), |x| format!("{x:.4}"))
}

pub fn fmt_estimate(e: &Estimate) -> String {
    match (e.value, e.lo, e.hi) {
        (Some(v), Some(lo), Some(hi)) => format!("{v:.4} ({lo:.4}-{hi:.4})"),
        (v, _, _) => fmt_value(v),
    }
}

/// Deterministic rendering; `Structured` is lossless JSON.
pub fn render(report: &AuditReport, format: Format) -> String {
    match format {
        Format::Structured => {
            let mut s = serde_json::to_string_pretty(report).expect("report serializes");
            s.push('\n');
            s
        }
        Format::Markdown => render_markdown(report),
        Format::Csv => render_csv(report),
    }
}

/// A presentation table shared by the markdown and CSV views.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str], rows: Vec<Vec<String>>) -> Self {
        Table { header: header.iter().map(|h| h.to_string()).collect(), rows }
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "| {} |", self.header.join(" | "));
        let _ = writeln!(out, "|{}", "---|".repeat(self.header.len()));
        for r in &self.rows {
            let _ = writeln!(out, "| {} |", r.join(" | "));
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }
}

pub fn fairness_table(f: &FairnessReport) -> Table {
    let rows = f
        .per_label
        .iter()
        .map(|(l, x)| vec![l.to_string(), fmt_estimate(&x.dp_abs), fmt_estimate(&x.dp_signed), fmt_estimate(&x.eo)])
        .collect();
    Table::new(&["Label", "DP difference", "DP signed", "EO difference"], rows)
}

/// The MFC table: one row per label plus the aggregate.
pub fn mfc_table(f: &FairnessReport) -> Table {
    let mut rows: Vec<Vec<String>> = f.per_label.iter().map(|(l, x)| vec![l.to_string(), fmt_estimate(&x.mfc)]).collect();
    rows.push(vec!["aggregate".to_string(), fmt_estimate(&f.mfc_aggregate)]);
    Table::new(&["Label", "MFC"], rows)
}

/// MFC point values without intervals.
pub fn mfc_point_table(m: &Mfc) -> Table {
    let mut rows: Vec<Vec<String>> =
        MoralLabel::ALL.iter().map(|l| vec![l.to_string(), fmt_value(Some(m.per_label[l.index()]))]).collect();
    rows.push(vec!["aggregate".to_string(), fmt_value(Some(m.aggregate))]);
    Table::new(&["Label", "MFC"], rows)
}

pub fn correlation_table(c: &CorrelationReport) -> Table {
    let rows = c
        .against_mfc
        .iter()
        .map(|(m, e)| {
            vec![m.to_string(), fmt_value(e.rho), e.p_value.map_or_else(|| NA.to_string(), |p| format!("{p:.6}")), e.n.to_string()]
        })
        .collect();
    Table::new(&["Metric", "rho", "p", "n"], rows)
}

/// One line stating how the p-values were obtained.
pub fn correlation_note(c: &CorrelationReport) -> String {
    format!("mode {}, n = {}, p-value: {}", corr_mode_name(c.mode), c.n, p_method_name(c))
}

fn md_table(out: &mut String, header: &[&str], rows: &[Vec<String>]) {
    out.push_str(&Table::new(header, rows.to_vec()).to_markdown());
    out.push('\n');
}

fn md_section(out: &mut String, t: &Table) {
    out.push_str(&t.to_markdown());
    out.push('\n');
}

fn render_markdown(r: &AuditReport) -> String {
    let mut out = String::new();
    let m = &r.metadata;
    let _ = writeln!(out, "# Audit report\n");
    let _ = writeln!(
        out,
        "{} {}; seed {}; {} resamples at level {}; threshold {}; correlation mode {}\n",
        m.tool,
        m.version,
        m.seed,
        m.n_resamples,
        m.level,
        m.threshold.map_or_else(|| "from files".to_string(), |t| t.to_string()),
        corr_mode_name(m.corr_mode),
    );
    let inputs: Vec<Vec<String>> = m
        .inputs
        .iter()
        .map(|i| vec![i.direction.to_string(), i.path.clone(), i.n_records.to_string(), i.sha256.clone()])
        .collect();
    md_table(&mut out, &["Scenario", "File", "Records", "SHA-256"], &inputs);

    let _ = writeln!(out, "## Classification\n");
    let rows: Vec<Vec<String>> = r
        .scenarios
        .values()
        .map(|s| {
            vec![s.direction.to_string(), s.n_records.to_string(), fmt_estimate(&s.micro_f1), fmt_estimate(&s.emr), fmt_estimate(&s.loss)]
        })
        .collect();
    md_table(&mut out, &["Scenario", "n", "micro-F1", "EMR", "Loss"], &rows);

    for s in r.scenarios.values() {
        let _ = writeln!(out, "### Per-label scores, {}\n", s.direction);
        let rows: Vec<Vec<String>> = s
            .per_label
            .iter()
            .map(|(l, p)| vec![l.to_string(), fmt_estimate(&p.precision), fmt_estimate(&p.recall), fmt_estimate(&p.f1)])
            .collect();
        md_table(&mut out, &["Label", "Precision", "Recall", "F1"], &rows);
    }

    let _ = writeln!(out, "## Degradation\n");
    let rows: Vec<Vec<String>> = r
        .degradation
        .iter()
        .map(|d| {
            vec![
                d.source.corpus().to_string(),
                fmt_value(d.in_domain_f1),
                fmt_value(d.cross_domain_f1),
                d.points.map_or_else(|| NA.to_string(), |p| format!("{p:.1}")),
            ]
        })
        .collect();
    md_table(&mut out, &["Trained on", "In-domain micro-F1", "Cross-domain micro-F1", "Drop (points)"], &rows);

    if let Some(f) = &r.fairness {
        let _ = writeln!(out, "## Fairness (twitter vs reddit)\n");
        md_section(&mut out, &fairness_table(f));
        let _ = writeln!(out, "## Moral Fairness Consistency\n");
        md_section(&mut out, &mfc_table(f));
    }

    if let Some(c) = &r.correlation {
        let _ = writeln!(out, "## Spearman correlation with MFC\n");
        let _ = writeln!(out, "{}\n", correlation_note(c));
        md_section(&mut out, &correlation_table(c));
    }

    for (title, items) in [("Gaps", &r.gaps), ("Warnings", &r.warnings)] {
        if !items.is_empty() {
            let _ = writeln!(out, "## {title}\n");
            for g in items {
                let _ = writeln!(out, "- {g}");
            }
            out.push('\n');
        }
    }
    out
}

fn corr_mode_name(m: CorrelationMode) -> &'static str {
    match m {
        CorrelationMode::PerLabel => "per-label",
        CorrelationMode::BootstrapPooled => "bootstrap-pooled",
    }
}

fn p_method_name(c: &CorrelationReport) -> String {
    match c.p_method {
        crate::correlation::PValueMethod::ExactPermutation => {
            let orderings: u64 = (1..=c.n as u64).product();
            format!("exact, two-sided, over all {orderings} rank orderings")
        }
        crate::correlation::PValueMethod::TApproximation => format!("t approximation with {} df", c.n.saturating_sub(2)),
    }
}

fn opt_cell(v: Option<f64>) -> String {
    v.map_or_else(|| NA.to_string(), |x| x.to_string())
}

fn render_csv(r: &AuditReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut row = |section: &str, scenario: String, label: &str, metric: &str, e: Estimate| {
        w.write_record([section, &scenario, label, metric, &opt_cell(e.value), &opt_cell(e.lo), &opt_cell(e.hi)])
            .expect("in-memory write");
    };
    row("section", "scenario".into(), "label", "metric", Estimate::default());
    for s in r.scenarios.values() {
        let d = s.direction.to_string();
        row("classification", d.clone(), "all", "micro_f1", s.micro_f1);
        row("classification", d.clone(), "all", "emr", s.emr);
        row("classification", d.clone(), "all", "loss", s.loss);
        for (l, p) in &s.per_label {
            row("classification", d.clone(), l.name(), "precision", p.precision);
            row("classification", d.clone(), l.name(), "recall", p.recall);
            row("classification", d.clone(), l.name(), "f1", p.f1);
        }
    }
    for d in &r.degradation {
        row("degradation", d.source.corpus().to_string(), "all", "points", Estimate::point(d.points));
    }
    if let Some(f) = &r.fairness {
        for (l, x) in &f.per_label {
            row("fairness", "cross-domain".into(), l.name(), "dp_abs", x.dp_abs);
            row("fairness", "cross-domain".into(), l.name(), "dp_signed", x.dp_signed);
            row("fairness", "cross-domain".into(), l.name(), "eo", x.eo);
            row("fairness", "cross-domain".into(), l.name(), "mfc", x.mfc);
        }
        row("fairness", "cross-domain".into(), "all", "mfc_aggregate", f.mfc_aggregate);
    }
    if let Some(c) = &r.correlation {
        for (m, e) in &c.against_mfc {
            row("correlation", corr_mode_name(c.mode).into(), m.name(), "rho", Estimate::point(e.rho));
            row("correlation", corr_mode_name(c.mode).into(), m.name(), "p_value", Estimate::point(e.p_value));
        }
    }
    // The header row was written through the same closure; fix its value columns.
    let bytes = w.into_inner().expect("flush");
    let text = String::from_utf8(bytes).expect("utf-8");
    text.replacen("section,scenario,label,metric,n/a,n/a,n/a", "section,scenario,label,metric,value,lo,hi", 1)
}
