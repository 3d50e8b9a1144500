//! Per-subject evaluation machinery.
//!
//! Covers eligibility filtering, cross-validation splitters (within-subject
//! stratified k-fold, forward chaining, and the subject-wise vs record-wise
//! pair that demonstrates identity leakage), cross-validated improvement
//! over the personal label baseline, variance-threshold screening sweeps,
//! and Pearson/Spearman correlation with a t-distribution p-value.
//!
//! Per-participant work is independent: seeds for splitters and per-fold
//! model fits are derived from (run seed, participant index, fold), so the
//! output is identical for any thread count.

use crate::data::CohortDataset;
use crate::features::{feature_matrix, participant_behavioral_variance, FeatureError};
use crate::labels::{cohort_energy_labels, join_rows, DailyRow, JoinReport};
use crate::models::{ModelError, ModelSpec};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::ops::Range;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("too few rows: have {n}, need at least {need}")]
    TooFewRows { n: usize, need: usize },
    #[error("rows contain a single class")]
    SingleClass,
    #[error("too few participants: have {n}, need at least {k}")]
    TooFewParticipants { n: usize, k: usize },
    #[error("k must be at least 2, got {0}")]
    InvalidK(usize),
    #[error("n_splits must be at least 1")]
    InvalidSplits,
    #[error("thresholds must be sorted ascending")]
    UnsortedThresholds,
    #[error("input lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("constant input has undefined correlation")]
    ConstantInput,
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Assignment of row indices to folds 0..k.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldAssignment {
    pub folds: Vec<usize>,
    pub k: usize,
}

impl FoldAssignment {
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.folds.len())
            .filter(|&i| self.folds[i] == fold)
            .collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.folds.len())
            .filter(|&i| self.folds[i] != fold)
            .collect()
    }
}

/// Class-stratified random k-fold partition of one participant's rows.
/// Per-class fold counts differ by at most one; deterministic in `seed`.
pub fn stratified_kfold_within_subject(
    labels: &[u8],
    k: usize,
    seed: u64,
) -> Result<FoldAssignment, EvalError> {
    if k < 2 {
        return Err(EvalError::InvalidK(k));
    }
    if labels.len() < k {
        return Err(EvalError::TooFewRows {
            n: labels.len(),
            need: k,
        });
    }
    if !labels.contains(&0) || !labels.contains(&1) {
        return Err(EvalError::SingleClass);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![0usize; labels.len()];
    // Dealing the second class starting where the first left off keeps the
    // total fold sizes within one of each other as well.
    let mut offset = 0usize;
    for class in [0u8, 1] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(&mut rng);
        for (j, &i) in idx.iter().enumerate() {
            folds[i] = (j + offset) % k;
        }
        offset = (offset + idx.len()) % k;
    }
    Ok(FoldAssignment { folds, k })
}

/// One forward-chaining split: train on a prefix, test on the block that
/// immediately follows it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainSplit {
    pub train: Range<usize>,
    pub test: Range<usize>,
}

/// Temporal splits over time-ordered rows: the test blocks partition rows
/// 1..n and every test row strictly follows its whole training prefix.
pub fn forward_chaining_split(
    n_rows: usize,
    n_splits: usize,
) -> Result<Vec<ChainSplit>, EvalError> {
    if n_splits < 1 {
        return Err(EvalError::InvalidSplits);
    }
    if n_rows < n_splits + 1 {
        return Err(EvalError::TooFewRows {
            n: n_rows,
            need: n_splits + 1,
        });
    }
    let m = n_rows - 1;
    let base = m / n_splits;
    let rem = m % n_splits;
    let mut start = 1usize;
    let mut out = Vec::with_capacity(n_splits);
    for i in 0..n_splits {
        let size = base + usize::from(i < rem);
        out.push(ChainSplit {
            train: 0..start,
            test: start..start + size,
        });
        start += size;
    }
    Ok(out)
}

/// K-fold assignment placing whole participants into folds, so no
/// participant's rows ever span a fold boundary.
pub fn subject_wise_split(
    rows: &[DailyRow],
    k: usize,
    seed: u64,
) -> Result<FoldAssignment, EvalError> {
    if k < 2 {
        return Err(EvalError::InvalidK(k));
    }
    let mut ids: Vec<&str> = rows.iter().map(|r| r.participant_id.as_str()).collect();
    ids.sort_unstable();
    ids.dedup();
    if ids.len() < k {
        return Err(EvalError::TooFewParticipants { n: ids.len(), k });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ids.shuffle(&mut rng);
    let fold_of: BTreeMap<&str, usize> =
        ids.iter().enumerate().map(|(j, &id)| (id, j % k)).collect();
    let folds = rows
        .iter()
        .map(|r| fold_of[r.participant_id.as_str()])
        .collect();
    Ok(FoldAssignment { folds, k })
}

/// K-fold assignment ignoring participant boundaries — the known-hazardous
/// scheme on multi-individual data, provided to demonstrate the bias.
pub fn record_wise_split(
    rows: &[DailyRow],
    k: usize,
    seed: u64,
) -> Result<FoldAssignment, EvalError> {
    if k < 2 {
        return Err(EvalError::InvalidK(k));
    }
    if rows.len() < k {
        return Err(EvalError::TooFewRows {
            n: rows.len(),
            need: k,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.shuffle(&mut rng);
    let mut folds = vec![0usize; rows.len()];
    for (j, &i) in order.iter().enumerate() {
        folds[i] = j % k;
    }
    Ok(FoldAssignment { folds, k })
}

/// Why a participant was left out of the per-participant evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExclusionReason {
    InsufficientDays,
    SingleClass,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exclusion {
    pub participant_id: String,
    pub reason: ExclusionReason,
    pub n_rows: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EligibilityReport {
    pub retained: Vec<String>,
    pub excluded: Vec<Exclusion>,
}

/// Retain participants with at least `min_labeled_days` joined rows and at
/// least one row of each class; everyone else is excluded with a reason.
pub fn filter_eligible(
    participant_ids: &[String],
    rows: &[DailyRow],
    min_labeled_days: usize,
) -> EligibilityReport {
    let mut stats: BTreeMap<&str, (usize, usize, usize)> = BTreeMap::new();
    for row in rows {
        let entry = stats.entry(row.participant_id.as_str()).or_insert((0, 0, 0));
        entry.0 += 1;
        if row.label == 1 {
            entry.2 += 1;
        } else {
            entry.1 += 1;
        }
    }
    let mut report = EligibilityReport::default();
    for id in participant_ids {
        let (n, zeros, ones) = stats.get(id.as_str()).copied().unwrap_or((0, 0, 0));
        if n < min_labeled_days || n == 0 {
            report.excluded.push(Exclusion {
                participant_id: id.clone(),
                reason: ExclusionReason::InsufficientDays,
                n_rows: n,
            });
        } else if zeros == 0 || ones == 0 {
            report.excluded.push(Exclusion {
                participant_id: id.clone(),
                reason: ExclusionReason::SingleClass,
                n_rows: n,
            });
        } else {
            report.retained.push(id.clone());
        }
    }
    report
}

/// Cross-validation protocol for the per-participant experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CvSpec {
    StratifiedKFold { k: usize },
    ForwardChaining { n_splits: usize },
}

/// Everything `evaluate_personal` needs beyond the dataset.
#[derive(Debug, Clone)]
pub struct EvalParams {
    pub model: ModelSpec,
    pub cv: CvSpec,
    pub min_labeled_days: usize,
    pub grid_m: f64,
    pub seed: u64,
}

/// One participant's cross-validated result against their own baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticipantEval {
    pub participant_id: String,
    pub n_rows: usize,
    /// Prevalence of the participant's majority label over all their rows.
    pub label_baseline_accuracy: f64,
    pub model_accuracy: f64,
    /// `model_accuracy - label_baseline_accuracy`, unclamped.
    pub improvement: f64,
    /// Whole-period log location variance from the features module.
    pub behavioral_variance: f64,
}

/// A participant that was eligible but could not be cross-validated, e.g.
/// fewer rows than folds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedParticipant {
    pub participant_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalOutcome {
    pub evals: Vec<ParticipantEval>,
    pub excluded: Vec<Exclusion>,
    pub skipped: Vec<SkippedParticipant>,
    pub join: JoinReport,
}

// splitmix64-style mixing so every (participant, fold) pair gets its own
// substream independent of scheduling.
fn mix_seed(seed: u64, a: u64, b: u64) -> u64 {
    let mut z = seed
        ^ a.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ b.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn accuracy_over(
    model: &ModelSpec,
    train: &[DailyRow],
    test: &[&DailyRow],
    seed: u64,
) -> Result<usize, EvalError> {
    let fitted = model.fit(train, seed)?;
    let mut correct = 0usize;
    for row in test {
        if fitted.predict(&row.features)?.label == row.label {
            correct += 1;
        }
    }
    Ok(correct)
}

/// Cross-validated accuracy of `model` on one participant's rows.
pub fn cross_validated_accuracy(
    rows: &[DailyRow],
    model: &ModelSpec,
    cv: CvSpec,
    seed: u64,
    participant_index: u64,
) -> Result<f64, EvalError> {
    match cv {
        CvSpec::StratifiedKFold { k } => {
            let labels: Vec<u8> = rows.iter().map(|r| r.label).collect();
            let assignment =
                stratified_kfold_within_subject(&labels, k, mix_seed(seed, participant_index, 0))?;
            let mut correct = 0usize;
            for fold in 0..k {
                let train: Vec<DailyRow> = assignment
                    .train_indices(fold)
                    .into_iter()
                    .map(|i| rows[i].clone())
                    .collect();
                let test: Vec<&DailyRow> = assignment
                    .test_indices(fold)
                    .into_iter()
                    .map(|i| &rows[i])
                    .collect();
                correct += accuracy_over(
                    model,
                    &train,
                    &test,
                    mix_seed(seed, participant_index, 1 + fold as u64),
                )?;
            }
            Ok(correct as f64 / rows.len() as f64)
        }
        CvSpec::ForwardChaining { n_splits } => {
            let splits = forward_chaining_split(rows.len(), n_splits)?;
            let mut correct = 0usize;
            let mut tested = 0usize;
            for (i, split) in splits.iter().enumerate() {
                let train = &rows[split.train.clone()];
                let test: Vec<&DailyRow> = rows[split.test.clone()].iter().collect();
                tested += test.len();
                correct +=
                    accuracy_over(model, train, &test, mix_seed(seed, participant_index, 1 + i as u64))?;
            }
            Ok(correct as f64 / tested as f64)
        }
    }
}

/// Full per-participant experiment: features, labels, join, eligibility,
/// then cross-validated improvement over the personal label baseline for
/// every eligible participant. Splitter failures skip the participant with
/// a reason; they never fail the run.
pub fn evaluate_personal(
    dataset: &CohortDataset,
    params: &EvalParams,
) -> Result<EvalOutcome, EvalError> {
    let features = feature_matrix(dataset, params.grid_m)?;
    let labels = cohort_energy_labels(dataset);
    let (rows, join) = join_rows(&features, &labels);
    let ids = dataset.participant_ids();
    let eligibility = filter_eligible(&ids, &rows, params.min_labeled_days);

    // rows are sorted by (participant, day); group as contiguous slices.
    let mut slices: BTreeMap<&str, Range<usize>> = BTreeMap::new();
    let mut start = 0usize;
    for i in 1..=rows.len() {
        if i == rows.len() || rows[i].participant_id != rows[start].participant_id {
            slices.insert(rows[start].participant_id.as_str(), start..i);
            start = i;
        }
    }
    let index_of: BTreeMap<&str, u64> = ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i as u64))
        .collect();

    let results: Vec<Result<ParticipantEval, SkippedParticipant>> = eligibility
        .retained
        .par_iter()
        .map(|id| {
            let prows = &rows[slices[id.as_str()].clone()];
            let participant_index = index_of[id.as_str()];
            let rec = dataset
                .participant(id)
                .expect("retained participant is in the dataset");
            let variance = participant_behavioral_variance(rec).map_err(|e| {
                SkippedParticipant {
                    participant_id: id.clone(),
                    reason: e.to_string(),
                }
            })?;
            let model_accuracy = cross_validated_accuracy(
                prows,
                &params.model,
                params.cv,
                params.seed,
                participant_index,
            )
            .map_err(|e| SkippedParticipant {
                participant_id: id.clone(),
                reason: e.to_string(),
            })?;
            let ones = prows.iter().filter(|r| r.label == 1).count();
            let zeros = prows.len() - ones;
            let label_baseline_accuracy = zeros.max(ones) as f64 / prows.len() as f64;
            Ok(ParticipantEval {
                participant_id: id.clone(),
                n_rows: prows.len(),
                label_baseline_accuracy,
                model_accuracy,
                improvement: model_accuracy - label_baseline_accuracy,
                behavioral_variance: variance.value,
            })
        })
        .collect();

    let mut evals = Vec::new();
    let mut skipped = Vec::new();
    for result in results {
        match result {
            Ok(eval) => evals.push(eval),
            Err(skip) => skipped.push(skip),
        }
    }
    Ok(EvalOutcome {
        evals,
        excluded: eligibility.excluded,
        skipped,
        join,
    })
}

/// One point of the screening curve of mean improvement vs the minimum
/// behavioral variance required for inclusion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreeningPoint {
    pub threshold: f64,
    pub n_retained: usize,
    /// Mean improvement over retained participants; `None` when the filter
    /// retains nobody.
    pub mean_improvement: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ScreeningCurve {
    pub points: Vec<ScreeningPoint>,
}

/// The sorted distinct participant variances: every threshold at which the
/// retained set actually changes.
pub fn staircase_thresholds(evals: &[ParticipantEval]) -> Vec<f64> {
    let mut thresholds: Vec<f64> = evals.iter().map(|e| e.behavioral_variance).collect();
    thresholds.sort_by(|a, b| a.partial_cmp(b).unwrap());
    thresholds.dedup();
    thresholds
}

/// Mean improvement over the sub-cohort whose behavioral variance meets
/// each threshold. Thresholds must be sorted ascending, which makes
/// `n_retained` non-increasing along the curve.
pub fn screening_sweep(
    evals: &[ParticipantEval],
    thresholds: &[f64],
) -> Result<ScreeningCurve, EvalError> {
    if thresholds.windows(2).any(|w| w[0] > w[1]) {
        return Err(EvalError::UnsortedThresholds);
    }
    let points = thresholds
        .iter()
        .map(|&threshold| {
            let retained: Vec<f64> = evals
                .iter()
                .filter(|e| e.behavioral_variance >= threshold)
                .map(|e| e.improvement)
                .collect();
            let mean_improvement = if retained.is_empty() {
                None
            } else {
                Some(retained.iter().sum::<f64>() / retained.len() as f64)
            };
            ScreeningPoint {
                threshold,
                n_retained: retained.len(),
                mean_improvement,
            }
        })
        .collect();
    Ok(ScreeningCurve { points })
}

/// Pearson and Spearman correlation with a two-sided p-value for the
/// Pearson coefficient from the t-distribution with n-2 degrees of freedom.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub pearson_r: f64,
    pub spearman_rho: f64,
    pub p_value: f64,
}

fn is_constant(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[0] == w[1])
}

fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_x = 0.0;
    let mut var_y = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        let dx = x - mean_x;
        let dy = y - mean_y;
        cov += dx * dy;
        var_x += dx * dx;
        var_y += dy * dy;
    }
    cov / (var_x.sqrt() * var_y.sqrt())
}

/// 1-based ranks with ties assigned the average rank of their group.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j < n && values[order[j]] == values[order[i]] {
            j += 1;
        }
        let average = (i + 1 + j) as f64 / 2.0;
        for &idx in &order[i..j] {
            ranks[idx] = average;
        }
        i = j;
    }
    ranks
}

pub fn correlate(xs: &[f64], ys: &[f64]) -> Result<Correlation, EvalError> {
    if xs.len() != ys.len() {
        return Err(EvalError::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.len() < 3 {
        return Err(EvalError::TooFewPoints(xs.len()));
    }
    if is_constant(xs) || is_constant(ys) {
        return Err(EvalError::ConstantInput);
    }
    let pearson_r = pearson(xs, ys);
    let spearman_rho = pearson(&average_ranks(xs), &average_ranks(ys));
    let p_value = pearson_p_value(pearson_r, xs.len());
    Ok(Correlation {
        pearson_r,
        spearman_rho,
        p_value,
    })
}

fn pearson_p_value(r: f64, n: usize) -> f64 {
    let df = (n - 2) as f64;
    let denom = 1.0 - r * r;
    if denom <= 0.0 {
        return 0.0;
    }
    let t = r.abs() * (df / denom).sqrt();
    student_t_two_sided_p(t, df)
}

/// Two-sided tail probability of Student's t: P(|T| >= |t|) with `df`
/// degrees of freedom, via the regularized incomplete beta function.
pub fn student_t_two_sided_p(t: f64, df: f64) -> f64 {
    if !t.is_finite() {
        return 0.0;
    }
    regularized_incomplete_beta(df / (df + t * t), df / 2.0, 0.5)
}

/// Lanczos approximation of ln Γ(x), g = 7.
fn ln_gamma(x: f64) -> f64 {
    const COEFFS: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_59,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x)
    } else {
        let x = x - 1.0;
        let mut sum = COEFFS[0];
        for (i, &c) in COEFFS.iter().enumerate().skip(1) {
            sum += c / (x + i as f64);
        }
        let t = x + 7.5;
        0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + sum.ln()
    }
}

/// Continued fraction for the incomplete beta function (modified Lentz).
fn betacf(a: f64, b: f64, x: f64) -> f64 {
    const MAX_ITER: usize = 300;
    const EPS: f64 = 3e-16;
    const FPMIN: f64 = 1e-300;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < FPMIN {
        d = FPMIN;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let mf = m as f64;
        let m2 = 2.0 * mf;
        let aa = mf * (b - mf) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = 1.0 + aa / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + mf) * (qab + mf) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = 1.0 + aa / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta function I_x(a, b).
pub fn regularized_incomplete_beta(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b)
        + a * x.ln()
        + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * betacf(a, b, x) / a
    } else {
        1.0 - front * betacf(b, a, 1.0 - x) / b
    }
}

/// Micro (row-weighted) and macro (participant-weighted) aggregates over
/// the eligible cohort.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub n_eligible: usize,
    pub micro_model_accuracy: Option<f64>,
    pub macro_model_accuracy: Option<f64>,
    pub micro_baseline_accuracy: Option<f64>,
    pub macro_baseline_accuracy: Option<f64>,
    pub micro_improvement: Option<f64>,
    pub macro_improvement: Option<f64>,
}

impl Aggregate {
    pub fn from_evals(evals: &[ParticipantEval]) -> Self {
        if evals.is_empty() {
            return Aggregate {
                n_eligible: 0,
                micro_model_accuracy: None,
                macro_model_accuracy: None,
                micro_baseline_accuracy: None,
                macro_baseline_accuracy: None,
                micro_improvement: None,
                macro_improvement: None,
            };
        }
        let total_rows: usize = evals.iter().map(|e| e.n_rows).sum();
        let micro = |f: &dyn Fn(&ParticipantEval) -> f64| {
            evals.iter().map(|e| f(e) * e.n_rows as f64).sum::<f64>() / total_rows as f64
        };
        let macro_ = |f: &dyn Fn(&ParticipantEval) -> f64| {
            evals.iter().map(f).sum::<f64>() / evals.len() as f64
        };
        Aggregate {
            n_eligible: evals.len(),
            micro_model_accuracy: Some(micro(&|e| e.model_accuracy)),
            macro_model_accuracy: Some(macro_(&|e| e.model_accuracy)),
            micro_baseline_accuracy: Some(micro(&|e| e.label_baseline_accuracy)),
            macro_baseline_accuracy: Some(macro_(&|e| e.label_baseline_accuracy)),
            micro_improvement: Some(micro(&|e| e.improvement)),
            macro_improvement: Some(macro_(&|e| e.improvement)),
        }
    }
}

/// The machine-readable evaluation report emitted by the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub participants: Vec<ParticipantEval>,
    pub aggregate: Aggregate,
    /// Screening curve over the staircase of distinct participant variances.
    pub screening_curve: ScreeningCurve,
    /// Correlation of (behavioral variance, improvement) over eligible
    /// participants; `None` when undefined, with the reason in
    /// `correlation_note`.
    pub correlation: Option<Correlation>,
    pub correlation_note: Option<String>,
    pub exclusions: Vec<Exclusion>,
    pub skipped: Vec<SkippedParticipant>,
    pub join: JoinReport,
}

/// Assemble the full report from an evaluation outcome.
pub fn build_eval_report(outcome: &EvalOutcome) -> EvalReport {
    let thresholds = staircase_thresholds(&outcome.evals);
    let screening_curve =
        screening_sweep(&outcome.evals, &thresholds).expect("staircase is sorted");
    let xs: Vec<f64> = outcome.evals.iter().map(|e| e.behavioral_variance).collect();
    let ys: Vec<f64> = outcome.evals.iter().map(|e| e.improvement).collect();
    let (correlation, correlation_note) = match correlate(&xs, &ys) {
        Ok(c) => (Some(c), None),
        Err(e) => (None, Some(e.to_string())),
    };
    EvalReport {
        participants: outcome.evals.clone(),
        aggregate: Aggregate::from_evals(&outcome.evals),
        screening_curve,
        correlation,
        correlation_note,
        exclusions: outcome.excluded.clone(),
        skipped: outcome.skipped.clone(),
        join: outcome.join,
    }
}
