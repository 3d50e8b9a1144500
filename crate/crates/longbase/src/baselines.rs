//! Population and personal mode baselines.
//!
//! A population baseline guesses the single most frequent state pooled over
//! every participant; a personal baseline guesses each participant's own
//! most frequent state. Both are constant predictors, and the personal one
//! is the bar any model has to beat: per participant, no fixed guess can
//! match more observations than the personal mode does.
//!
//! All functions are pure over an immutable [`CohortDataset`] and safe to
//! call concurrently.

use crate::data::{CohortDataset, ReportKind};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("mode of an empty sequence is undefined")]
    EmptySequence,
    #[error("no {kind} reports in the dataset")]
    NoReportsOfKind { kind: ReportKind },
}

/// Which constant-predictor scheme produced a [`BaselineResult`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineScheme {
    Population,
    Personal,
}

/// Baseline accuracies for one report kind under one scheme.
///
/// `micro_accuracy` weights every observation equally (total correct over
/// total observations); `macro_accuracy` weights every participant equally
/// (unweighted mean of per-participant accuracies).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineResult {
    pub scheme: BaselineScheme,
    pub kind: ReportKind,
    /// The pooled mode; populated by the population scheme only.
    pub global_mode: Option<u8>,
    /// Each participant's own mode; populated by the personal scheme only.
    pub per_participant_mode: BTreeMap<String, u8>,
    pub per_participant_accuracy: BTreeMap<String, f64>,
    pub micro_accuracy: f64,
    pub macro_accuracy: f64,
    /// Participants with no reports of the requested kind, excluded from
    /// both aggregations.
    pub excluded: Vec<String>,
}

/// Most frequent value of a non-empty sequence; ties break to the smallest
/// value, so the result is deterministic and permutation-invariant.
pub fn mode_of(values: &[u8]) -> Result<u8, BaselineError> {
    if values.is_empty() {
        return Err(BaselineError::EmptySequence);
    }
    let mut counts: BTreeMap<u8, usize> = BTreeMap::new();
    for &v in values {
        *counts.entry(v).or_insert(0) += 1;
    }
    let mut best = (0u8, 0usize);
    for (&value, &count) in &counts {
        if count > best.1 {
            best = (value, count);
        }
    }
    Ok(best.0)
}

/// Accuracy of always guessing `mode` against `values`.
fn match_fraction(values: &[u8], mode: u8) -> f64 {
    let correct = values.iter().filter(|&&v| v == mode).count();
    correct as f64 / values.len() as f64
}

fn collect_values(
    dataset: &CohortDataset,
    kind: ReportKind,
) -> (Vec<(String, Vec<u8>)>, Vec<String>) {
    let mut present = Vec::new();
    let mut excluded = Vec::new();
    for rec in dataset.participants() {
        let values: Vec<u8> = rec.values_of_kind(kind).collect();
        if values.is_empty() {
            excluded.push(rec.id.clone());
        } else {
            present.push((rec.id.clone(), values));
        }
    }
    (present, excluded)
}

fn aggregate(per_values: &[(String, Vec<u8>)], modes: &BTreeMap<String, u8>) -> (BTreeMap<String, f64>, f64, f64) {
    let mut per_accuracy = BTreeMap::new();
    let mut correct_total = 0usize;
    let mut obs_total = 0usize;
    for (id, values) in per_values {
        let mode = modes[id];
        let acc = match_fraction(values, mode);
        correct_total += values.iter().filter(|&&v| v == mode).count();
        obs_total += values.len();
        per_accuracy.insert(id.clone(), acc);
    }
    let micro = correct_total as f64 / obs_total as f64;
    let macro_ = per_accuracy.values().sum::<f64>() / per_accuracy.len() as f64;
    (per_accuracy, micro, macro_)
}

/// Baseline that guesses everyone to be at the most commonly reported state
/// pooled across the whole cohort.
pub fn population_baseline(
    dataset: &CohortDataset,
    kind: ReportKind,
) -> Result<BaselineResult, BaselineError> {
    let (present, excluded) = collect_values(dataset, kind);
    let pooled: Vec<u8> = present.iter().flat_map(|(_, v)| v.iter().copied()).collect();
    if pooled.is_empty() {
        return Err(BaselineError::NoReportsOfKind { kind });
    }
    let global_mode = mode_of(&pooled)?;
    let modes: BTreeMap<String, u8> = present
        .iter()
        .map(|(id, _)| (id.clone(), global_mode))
        .collect();
    let (per_participant_accuracy, micro_accuracy, macro_accuracy) = aggregate(&present, &modes);
    Ok(BaselineResult {
        scheme: BaselineScheme::Population,
        kind,
        global_mode: Some(global_mode),
        per_participant_mode: BTreeMap::new(),
        per_participant_accuracy,
        micro_accuracy,
        macro_accuracy,
        excluded,
    })
}

/// Baseline that guesses each participant to be at their personally most
/// common state. Participants with no reports of `kind` are excluded and
/// listed, not scored as zero.
pub fn personal_baseline(
    dataset: &CohortDataset,
    kind: ReportKind,
) -> Result<BaselineResult, BaselineError> {
    let (present, excluded) = collect_values(dataset, kind);
    if present.is_empty() {
        return Err(BaselineError::NoReportsOfKind { kind });
    }
    let mut per_participant_mode = BTreeMap::new();
    for (id, values) in &present {
        per_participant_mode.insert(id.clone(), mode_of(values)?);
    }
    let (per_participant_accuracy, micro_accuracy, macro_accuracy) =
        aggregate(&present, &per_participant_mode);
    Ok(BaselineResult {
        scheme: BaselineScheme::Personal,
        kind,
        global_mode: None,
        per_participant_mode,
        per_participant_accuracy,
        micro_accuracy,
        macro_accuracy,
        excluded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{assemble_dataset, LikertReport};
    use proptest::prelude::*;

    fn report(id: &str, timestamp: i64, value: u8) -> LikertReport {
        LikertReport {
            participant_id: id.into(),
            timestamp,
            kind: ReportKind::Mood,
            value,
        }
    }

    fn mood_dataset(per_participant: &[(&str, &[u8])]) -> CohortDataset {
        let mut reports = Vec::new();
        for (id, values) in per_participant {
            for (i, &v) in values.iter().enumerate() {
                reports.push(report(id, i as i64, v));
            }
        }
        assemble_dataset(reports, Vec::new(), 0).unwrap()
    }

    #[test]
    fn mode_unique_majority() {
        assert_eq!(mode_of(&[5, 5, 2]).unwrap(), 5);
    }

    #[test]
    fn mode_tie_breaks_to_smallest() {
        assert_eq!(mode_of(&[2, 8]).unwrap(), 2);
        assert_eq!(mode_of(&[8, 2]).unwrap(), 2);
    }

    #[test]
    fn mode_of_empty_errors() {
        assert!(matches!(mode_of(&[]), Err(BaselineError::EmptySequence)));
    }

    #[test]
    fn population_hand_example() {
        let ds = mood_dataset(&[("A", &[8, 8, 8, 2]), ("B", &[4, 4, 4, 4])]);
        let result = population_baseline(&ds, ReportKind::Mood).unwrap();
        assert_eq!(result.global_mode, Some(4));
        assert_eq!(result.per_participant_accuracy["A"], 0.0);
        assert_eq!(result.per_participant_accuracy["B"], 1.0);
        assert_eq!(result.micro_accuracy, 0.5);
        assert_eq!(result.macro_accuracy, 0.5);
    }

    #[test]
    fn personal_hand_example() {
        let ds = mood_dataset(&[("A", &[8, 8, 8, 2]), ("B", &[4, 4, 4, 4])]);
        let result = personal_baseline(&ds, ReportKind::Mood).unwrap();
        assert_eq!(result.per_participant_mode["A"], 8);
        assert_eq!(result.per_participant_mode["B"], 4);
        assert_eq!(result.per_participant_accuracy["A"], 0.75);
        assert_eq!(result.per_participant_accuracy["B"], 1.0);
        assert_eq!(result.micro_accuracy, 0.875);
    }

    #[test]
    fn constant_cohort_is_perfect() {
        let ds = mood_dataset(&[("A", &[7, 7, 7]), ("B", &[7, 7])]);
        let pop = population_baseline(&ds, ReportKind::Mood).unwrap();
        assert_eq!(pop.global_mode, Some(7));
        assert_eq!(pop.micro_accuracy, 1.0);
        let per = personal_baseline(&ds, ReportKind::Mood).unwrap();
        assert_eq!(per.micro_accuracy, 1.0);
    }

    #[test]
    fn single_participant_schemes_agree() {
        let ds = mood_dataset(&[("A", &[3, 3, 5, 7, 3])]);
        let pop = population_baseline(&ds, ReportKind::Mood).unwrap();
        let per = personal_baseline(&ds, ReportKind::Mood).unwrap();
        assert_eq!(pop.micro_accuracy, per.micro_accuracy);
        assert_eq!(pop.macro_accuracy, per.macro_accuracy);
    }

    #[test]
    fn no_reports_of_kind_errors() {
        let ds = mood_dataset(&[("A", &[3])]);
        assert!(matches!(
            personal_baseline(&ds, ReportKind::Energy),
            Err(BaselineError::NoReportsOfKind { .. })
        ));
    }

    #[test]
    fn participants_without_kind_are_listed_excluded() {
        let mut reports = vec![report("A", 0, 5)];
        reports.push(LikertReport {
            participant_id: "B".into(),
            timestamp: 0,
            kind: ReportKind::Energy,
            value: 6,
        });
        let ds = assemble_dataset(reports, Vec::new(), 0).unwrap();
        let result = personal_baseline(&ds, ReportKind::Mood).unwrap();
        assert_eq!(result.excluded, vec!["B".to_string()]);
        assert!(!result.per_participant_accuracy.contains_key("B"));
    }

    // Brute-force frequency oracle, written as a direct scan over candidate
    // values rather than a counting map.
    fn mode_oracle(values: &[u8]) -> u8 {
        let mut best_value = 0;
        let mut best_count = 0;
        for candidate in 1..=9u8 {
            let count = values.iter().filter(|&&v| v == candidate).count();
            if count > best_count {
                best_count = count;
                best_value = candidate;
            }
        }
        best_value
    }

    proptest! {
        #[test]
        fn mode_agrees_with_exhaustive_count(values in proptest::collection::vec(1u8..=9, 1..60)) {
            prop_assert_eq!(mode_of(&values).unwrap(), mode_oracle(&values));
        }

        #[test]
        fn mode_is_permutation_invariant(mut values in proptest::collection::vec(1u8..=9, 1..40)) {
            let before = mode_of(&values).unwrap();
            values.reverse();
            prop_assert_eq!(mode_of(&values).unwrap(), before);
            values.sort_unstable();
            prop_assert_eq!(mode_of(&values).unwrap(), before);
        }

        // Exact dominance: per participant, the personal mode matches at
        // least as many observations as ANY single fixed value, so personal
        // accuracy dominates population accuracy at every aggregation.
        #[test]
        fn personal_dominates_population(
            cohort in proptest::collection::vec(proptest::collection::vec(1u8..=9, 1..30), 1..8)
        ) {
            let named: Vec<(String, Vec<u8>)> = cohort
                .into_iter()
                .enumerate()
                .map(|(i, v)| (format!("p{i}"), v))
                .collect();
            let borrowed: Vec<(&str, &[u8])> =
                named.iter().map(|(id, v)| (id.as_str(), v.as_slice())).collect();
            let ds = mood_dataset(&borrowed);
            let pop = population_baseline(&ds, ReportKind::Mood).unwrap();
            let per = personal_baseline(&ds, ReportKind::Mood).unwrap();

            for (id, values) in &named {
                let personal_matches = values
                    .iter()
                    .filter(|&&v| v == per.per_participant_mode[id])
                    .count();
                for fixed in 1..=9u8 {
                    let fixed_matches = values.iter().filter(|&&v| v == fixed).count();
                    prop_assert!(personal_matches >= fixed_matches);
                }
                prop_assert!(
                    per.per_participant_accuracy[id] >= pop.per_participant_accuracy[id]
                );
                let distinct = {
                    let mut v = values.clone();
                    v.sort_unstable();
                    v.dedup();
                    v.len()
                };
                prop_assert!(per.per_participant_accuracy[id] >= 1.0 / distinct as f64 - 1e-12);
            }
            prop_assert!(per.micro_accuracy >= pop.micro_accuracy);
            prop_assert!(per.macro_accuracy >= pop.macro_accuracy);
        }

        // A shared strictly monotone relabeling maps modes through and
        // leaves every accuracy unchanged.
        #[test]
        fn monotone_relabeling_maps_modes(
            cohort in proptest::collection::vec(proptest::collection::vec(1u8..=4, 1..20), 1..5)
        ) {
            let relabel = |v: u8| 2 * v; // strictly monotone, stays in [1, 9]
            let named: Vec<(String, Vec<u8>)> = cohort
                .into_iter()
                .enumerate()
                .map(|(i, v)| (format!("p{i}"), v))
                .collect();
            let mapped: Vec<(String, Vec<u8>)> = named
                .iter()
                .map(|(id, v)| (id.clone(), v.iter().map(|&x| relabel(x)).collect()))
                .collect();

            let ds_a = mood_dataset(
                &named.iter().map(|(id, v)| (id.as_str(), v.as_slice())).collect::<Vec<_>>(),
            );
            let ds_b = mood_dataset(
                &mapped.iter().map(|(id, v)| (id.as_str(), v.as_slice())).collect::<Vec<_>>(),
            );

            let per_a = personal_baseline(&ds_a, ReportKind::Mood).unwrap();
            let per_b = personal_baseline(&ds_b, ReportKind::Mood).unwrap();
            for (id, _) in &named {
                prop_assert_eq!(relabel(per_a.per_participant_mode[id]), per_b.per_participant_mode[id]);
                prop_assert_eq!(per_a.per_participant_accuracy[id], per_b.per_participant_accuracy[id]);
            }
            prop_assert_eq!(per_a.micro_accuracy, per_b.micro_accuracy);

            let pop_a = population_baseline(&ds_a, ReportKind::Mood).unwrap();
            let pop_b = population_baseline(&ds_b, ReportKind::Mood).unwrap();
            prop_assert_eq!(relabel(pop_a.global_mode.unwrap()), pop_b.global_mode.unwrap());
            prop_assert_eq!(pop_a.micro_accuracy, pop_b.micro_accuracy);
        }
    }
}
