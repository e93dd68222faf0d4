//! Acceptance checks. Runs without the libtest harness so every criterion
//! prints exactly one PASS/FAIL line; exits nonzero if any fails.

use mfc_core::corpus::{canonicalize, parse_mfrc, parse_mftc, DEFAULT_AGREEMENT};
use mfc_core::correlation::{spearman, spearman_p, PValueMethod};
use mfc_core::fairness::{dp_difference, fairness_report, group_rates, mfc, mfc_from_diffs, positive_rates, DirectionRates};
use mfc_core::metrics::{bce_term, bce_with_logits, confusion, degradation, exact_match_ratio, micro_f1, per_label_prf};
use mfc_core::predio::PredictionRecord;
use mfc_core::resampling::{bootstrap_ci, BootstrapSpec, Resample};
use mfc_core::synth::{generate_cross_domain, GroupParams, LabelParams, SynthConfig};
use mfc_core::{LabelSet, MoralLabel, Platform, N_LABELS};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::Path;
use std::time::{Duration, Instant};

// Pinned tolerances.
const MFC_DP_TOL: f64 = 1e-12;
const MFC_DP_BUDGET: Duration = Duration::from_secs(10);
const REFERENCE_MFC_TOL: f64 = 0.01;
const EO_RHO_TOL: f64 = 0.001;
const EXACT_P_TOL: f64 = 1e-15;
const ORACLE_BUDGET: Duration = Duration::from_secs(5);
const LN2_TOL: f64 = 1e-12;
const SOFTPLUS_TOL: f64 = 1e-9;
const COVERAGE_MIN: f64 = 0.88;
const BOOTSTRAP_BUDGET: Duration = Duration::from_secs(60);

struct Outcome {
    ok: bool,
    detail: String,
}

fn outcome(ok: bool, detail: impl Into<String>) -> Outcome {
    Outcome { ok, detail: detail.into() }
}

type Check = (&'static str, fn() -> Outcome);

fn main() {
    let checks: [Check; 8] = [
        ("mfc-dp-identity", mfc_dp_identity),
        ("mfc-from-reference-dp", mfc_from_reference_dp),
        ("eo-rank-correlation", eo_rank_correlation),
        ("metric-oracle", metric_oracle),
        ("bce-values", bce_values),
        ("bootstrap-determinism-coverage", bootstrap_determinism_coverage),
        ("degradation", degradation_values),
        ("ingestion-golden", ingestion_golden),
    ];
    let mut failed = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        let o = check();
        println!("acceptance {} {name}: {} ({})", i + 1, if o.ok { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.ok);
    }
    println!("acceptance: {} passed, {failed} failed", checks.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

fn random_params(rng: &mut ChaCha8Rng) -> LabelParams {
    LabelParams { base_rate: rng.random_range(0.05..0.95), tpr: rng.random(), fpr: rng.random() }
}

fn random_group(rng: &mut ChaCha8Rng) -> GroupParams {
    let n = rng.random_range(50..400);
    GroupParams { n, labels: MoralLabel::ALL.iter().map(|&l| (l, random_params(rng))).collect() }
}

fn mfc_dp_identity() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut worst, mut rho_checked, mut rho_bad) = (0.0f64, 0, 0);
    for trial in 0..100u64 {
        let cfg = SynthConfig::new(trial, random_group(&mut rng), random_group(&mut rng));
        let [rt, tr] = generate_cross_domain(&cfg).expect("valid config");
        let pooled: Vec<PredictionRecord> = rt.records.iter().chain(&tr.records).cloned().collect();
        let rates = group_rates(&pooled);
        let by_dir: DirectionRates =
            [(rt.meta.direction, positive_rates(&rt.records)), (tr.meta.direction, positive_rates(&tr.records))].into();
        let m = mfc(&by_dir).expect("both directions");
        let mut dp = Vec::with_capacity(N_LABELS);
        for l in MoralLabel::ALL {
            let d = dp_difference(&rates, l).expect("both groups present").abs;
            worst = worst.max((m.per_label[l.index()] - (1.0 - d)).abs());
            dp.push(d);
        }
        if let Some(rho) = spearman(&m.per_label, &dp).expect("five values") {
            rho_checked += 1;
            rho_bad += usize::from(rho != -1.0);
        }
        // The bootstrapped report must carry the same point identity.
        if trial < 5 {
            let spec = BootstrapSpec::new(50, 0.95, trial).unwrap();
            let r = fairness_report(&[&rt, &tr], &spec).expect("report");
            for x in r.per_label.values() {
                worst = worst.max((x.mfc.value.unwrap() - (1.0 - x.dp_abs.value.unwrap())).abs());
            }
        }
    }
    let elapsed = start.elapsed();
    outcome(
        worst <= MFC_DP_TOL && rho_bad == 0 && rho_checked > 0 && elapsed < MFC_DP_BUDGET,
        format!("max |mfc - (1 - dp)| = {worst:e}, rho = -1 in {}/{rho_checked} sets, {elapsed:.2?}", rho_checked - rho_bad),
    )
}

fn mfc_from_reference_dp() -> Outcome {
    let dp = [0.22, 0.04, 0.05, 0.03, 0.08];
    let reference = [0.7781, 0.9556, 0.9499, 0.9666, 0.9205];
    let m = mfc_from_diffs(dp);
    let worst = m.per_label.iter().zip(reference).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    outcome(
        worst <= REFERENCE_MFC_TOL,
        format!("mfc = {:?}, max deviation {worst:.4}, aggregate {:.4}", m.per_label, m.aggregate),
    )
}

fn eo_rank_correlation() -> Outcome {
    let mfc = [0.7781, 0.9556, 0.9499, 0.9666, 0.9205];
    let eo = [0.40, 0.26, 0.22, 0.20, 0.34];
    let rho = spearman(&mfc, &eo).unwrap().unwrap();
    let p = spearman_p(-1.0, 5, PValueMethod::ExactPermutation).unwrap();
    outcome(
        (rho + 0.9).abs() <= EO_RHO_TOL && (p - 2.0 / 120.0).abs() <= EXACT_P_TOL,
        format!("rho = {rho}, exact p(rho = -1, n = 5) = {p} (2/120 = {})", 2.0 / 120.0),
    )
}

/// Independent flat counting over every (instance, label) cell.
struct FlatOracle {
    tp: [u64; N_LABELS],
    fp: [u64; N_LABELS],
    fn_: [u64; N_LABELS],
    exact: u64,
    n: u64,
}

impl FlatOracle {
    fn new(records: &[PredictionRecord]) -> Self {
        let mut o = FlatOracle { tp: [0; 5], fp: [0; 5], fn_: [0; 5], exact: 0, n: records.len() as u64 };
        for r in records {
            let g = r.gold.to_bit_string();
            let p = r.predicted.to_bit_string();
            if g == p {
                o.exact += 1;
            }
            for (i, (gc, pc)) in g.chars().zip(p.chars()).enumerate() {
                match (gc, pc) {
                    ('1', '1') => o.tp[i] += 1,
                    ('0', '1') => o.fp[i] += 1,
                    ('1', '0') => o.fn_[i] += 1,
                    _ => {}
                }
            }
        }
        o
    }

    fn div(a: u64, b: u64) -> f64 {
        if b == 0 {
            0.0
        } else {
            a as f64 / b as f64
        }
    }
}

fn metric_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut mismatches = Vec::new();
    for round in 0..20 {
        let records: Vec<PredictionRecord> = (0..1000)
            .map(|i| {
                let gold = LabelSet::from_mask(rng.random_range(0..32u8)).unwrap();
                // Mostly-correct predictions with random bit flips, plus some all-random rows.
                let flips = if round % 4 == 0 { rng.random_range(0..32u8) } else { rng.random_range(0..32u8) & rng.random_range(0..32u8) };
                PredictionRecord {
                    id: format!("r{i}"),
                    group: if i % 2 == 0 { Platform::Twitter } else { Platform::Reddit },
                    gold,
                    predicted: LabelSet::from_mask(gold.mask() ^ flips).unwrap(),
                    logits: None,
                }
            })
            .collect();
        let o = FlatOracle::new(&records);
        let counts = confusion(&records).unwrap();
        let tp: u64 = o.tp.iter().sum();
        let fp: u64 = o.fp.iter().sum();
        let fn_: u64 = o.fn_.iter().sum();
        if micro_f1(&counts) != FlatOracle::div(2 * tp, 2 * tp + fp + fn_) {
            mismatches.push(format!("round {round}: micro-F1"));
        }
        if exact_match_ratio(&records).unwrap() != FlatOracle::div(o.exact, o.n) {
            mismatches.push(format!("round {round}: EMR"));
        }
        for (i, prf) in per_label_prf(&counts).iter().enumerate() {
            let precision = FlatOracle::div(o.tp[i], o.tp[i] + o.fp[i]);
            let recall = FlatOracle::div(o.tp[i], o.tp[i] + o.fn_[i]);
            let f1 = FlatOracle::div(2 * o.tp[i], 2 * o.tp[i] + o.fp[i] + o.fn_[i]);
            let harmonic = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
            if prf.precision != precision || prf.recall != recall || prf.f1 != f1 || (prf.f1 - harmonic).abs() > 1e-12 {
                mismatches.push(format!("round {round}: label {i}"));
            }
        }
    }
    let elapsed = start.elapsed();
    outcome(
        mismatches.is_empty() && elapsed < ORACLE_BUDGET,
        format!("20 x 1000 instances, {} mismatches {:?}, {elapsed:.2?}", mismatches.len(), mismatches),
    )
}

fn bce_values() -> Outcome {
    let golds: Vec<LabelSet> = (0..32u8).map(|m| LabelSet::from_mask(m).unwrap()).collect();
    let zeros = vec![[0.0; N_LABELS]; golds.len()];
    let loss = bce_with_logits(&zeros, &golds).unwrap();
    let ln2_err = (loss - std::f64::consts::LN_2).abs();
    // softplus values computed independently as log1p(exp(.)).
    let spots = [
        (2.0, true, 0.1269280110429725),
        (-3.0, true, 3.048587351573742),
        (2.0, false, 2.1269280110429727),
        (0.5, false, 0.9740769841801067),
        (-0.5, true, 0.9740769841801067),
        (40.0, false, 40.0),
        (-40.0, true, 40.0),
        (1e-8, true, 0.6931471755599453),
    ];
    let worst = spots.iter().map(|&(z, y, want)| (bce_term(z, y) - want).abs()).fold(0.0, f64::max);
    outcome(
        ln2_err <= LN2_TOL && worst <= SOFTPLUS_TOL,
        format!("zero-logit loss {loss} (|err| {ln2_err:e}), max spot error {worst:e}"),
    )
}

fn mean(s: &Resample<f64>) -> Option<f64> {
    Some(s.iter().sum::<f64>() / s.len() as f64)
}

fn bootstrap_determinism_coverage() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let data: Vec<f64> = (0..200).map(|_| f64::from(u8::from(rng.random_bool(0.3)))).collect();
    let spec = BootstrapSpec::with_seed(42);
    let a = bootstrap_ci(mean, &data, &spec).unwrap().estimate;
    let b = bootstrap_ci(mean, &data, &spec).unwrap().estimate;
    let identical = a.lo.to_bits() == b.lo.to_bits() && a.hi.to_bits() == b.hi.to_bits();

    let p = 0.3;
    let trials = 200;
    let mut covered = 0;
    for t in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(10_000 + t);
        let sample: Vec<f64> = (0..200).map(|_| f64::from(u8::from(rng.random_bool(p)))).collect();
        let ci = bootstrap_ci(mean, &sample, &BootstrapSpec::with_seed(t)).unwrap().estimate;
        covered += usize::from(ci.lo <= p && p <= ci.hi);
    }
    let coverage = covered as f64 / trials as f64;
    let elapsed = start.elapsed();
    outcome(
        identical && coverage >= COVERAGE_MIN && elapsed < BOOTSTRAP_BUDGET,
        format!("bit-identical: {identical}, coverage {covered}/{trials} = {coverage:.3}, {elapsed:.2?}"),
    )
}

fn degradation_values() -> Outcome {
    let round1 = |x: f64| (x * 10.0).round() / 10.0;
    let twitter = degradation(0.772, 0.623);
    let reddit = degradation(0.687, 0.672);
    outcome(
        round1(twitter) == 14.9 && round1(reddit) == 1.5,
        format!("trained on MFTC {twitter:.4}, trained on MFRC {reddit:.4} points"),
    )
}

fn jsonl<T: serde::Serialize>(items: &[T]) -> String {
    items.iter().map(|x| serde_json::to_string(x).unwrap() + "\n").collect()
}

fn ingestion_golden() -> Outcome {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    let read = |name: &str| std::fs::read_to_string(dir.join(name)).unwrap();
    let mut problems = Vec::new();

    let mftc = parse_mftc(read("mftc_sample.json").as_bytes()).unwrap();
    let mfrc = parse_mfrc(read("mfrc_sample.csv").as_bytes()).unwrap();
    if (mftc.n_texts(), mftc.n_annotations()) != (10, 30) {
        problems.push(format!("MFTC counts {} / {}", mftc.n_texts(), mftc.n_annotations()));
    }
    if (mfrc.n_texts(), mfrc.n_annotations()) != (5, 10) {
        problems.push(format!("MFRC counts {} / {}", mfrc.n_texts(), mfrc.n_annotations()));
    }
    if mftc.flagged_labels.get("nm").copied().unwrap_or(0) == 0 {
        problems.push("nm not flagged".into());
    }
    if mfrc.flagged_labels.get("thin morality").copied().unwrap_or(0) == 0 {
        problems.push("thin morality not flagged".into());
    }

    for (platform, parsed) in [(Platform::Twitter, &mftc), (Platform::Reddit, &mfrc)] {
        let c = canonicalize(parsed, platform, DEFAULT_AGREEMENT).unwrap();
        let name = platform.name();
        if jsonl(&c.instances) != read(&format!("golden_{name}.jsonl")) {
            problems.push(format!("{name} canonical records differ"));
        }
        if jsonl(&c.exclusions) != read(&format!("golden_{name}.exclusions.jsonl")) {
            problems.push(format!("{name} exclusions differ"));
        }
        if platform == Platform::Reddit {
            // "Equality" (and "Equality,Care") maps onto fairness.
            let equality = c.instances.iter().find(|i| i.text.contains("healthcare")).map(|i| i.gold);
            let want = LabelSet::from_labels([MoralLabel::Care, MoralLabel::Fairness]);
            if equality != Some(want) {
                problems.push(format!("equality post gold {equality:?}"));
            }
        } else {
            let vice_only = ["100000000000000005", "200000000000000003"];
            if !vice_only.iter().all(|id| c.exclusions.iter().any(|e| e.id == *id)) {
                problems.push("vice-only tweets not excluded".into());
            }
        }
    }
    outcome(problems.is_empty(), if problems.is_empty() { "10 tweets, 5 posts match golden files".to_string() } else { problems.join("; ") })
}
