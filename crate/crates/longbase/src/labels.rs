//! The daily prediction target: was a participant's energy above their own
//! average on a given day?
//!
//! "Average" is the participant's mean of daily means, so every day weighs
//! equally regardless of how many prompts were answered. The label is a
//! strict inequality; tie days are labeled 0.

use crate::data::{local_day, CohortDataset, ParticipantRecord, ReportKind};
use crate::features::DailyFeatures;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabelError {
    #[error("participant {0} has no energy reports")]
    NoEnergyReports(String),
}

/// Binary above-personal-average energy label for one participant-day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailyLabel {
    pub participant_id: String,
    pub day: i64,
    /// 1 iff `day_mean_energy > personal_mean` (strict).
    pub label: u8,
    pub day_mean_energy: f64,
    /// Mean of the participant's daily mean energies over labeled days.
    pub personal_mean: f64,
}

/// A joined feature-plus-label row, the unit every classifier consumes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailyRow {
    pub participant_id: String,
    pub day: i64,
    pub features: Vec<f64>,
    pub label: u8,
}

/// Drop accounting for the feature/label inner join.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct JoinReport {
    pub n_joined: usize,
    /// Feature rows with no label for that (participant, day).
    pub n_feature_only: usize,
    /// Label rows with no features for that (participant, day).
    pub n_label_only: usize,
}

/// Daily energy labels for one participant; days without any energy report
/// emit no row.
pub fn daily_energy_labels(
    rec: &ParticipantRecord,
    day_offset_seconds: i64,
) -> Result<Vec<DailyLabel>, LabelError> {
    let mut by_day: BTreeMap<i64, Vec<f64>> = BTreeMap::new();
    for report in rec.reports.iter().filter(|r| r.kind == ReportKind::Energy) {
        by_day
            .entry(local_day(report.timestamp, day_offset_seconds))
            .or_default()
            .push(report.value as f64);
    }
    if by_day.is_empty() {
        return Err(LabelError::NoEnergyReports(rec.id.clone()));
    }
    let day_means: Vec<(i64, f64)> = by_day
        .into_iter()
        .map(|(day, values)| (day, values.iter().sum::<f64>() / values.len() as f64))
        .collect();
    let personal_mean =
        day_means.iter().map(|(_, m)| m).sum::<f64>() / day_means.len() as f64;
    Ok(day_means
        .into_iter()
        .map(|(day, day_mean_energy)| DailyLabel {
            participant_id: rec.id.clone(),
            day,
            label: u8::from(day_mean_energy > personal_mean),
            day_mean_energy,
            personal_mean,
        })
        .collect())
}

/// Labels for every participant that has energy reports; participants
/// without any are silently skipped (they surface later as ineligible).
pub fn cohort_energy_labels(dataset: &CohortDataset) -> Vec<DailyLabel> {
    dataset
        .participants()
        .iter()
        .filter_map(|rec| daily_energy_labels(rec, dataset.day_offset_seconds).ok())
        .flatten()
        .collect()
}

/// Inner join of features and labels on (participant, day).
///
/// Output is ordered by `(participant_id, day)`; rows present on only one
/// side are dropped and counted.
pub fn join_rows(
    features: &[DailyFeatures],
    labels: &[DailyLabel],
) -> (Vec<DailyRow>, JoinReport) {
    let label_by_key: BTreeMap<(&str, i64), &DailyLabel> = labels
        .iter()
        .map(|l| ((l.participant_id.as_str(), l.day), l))
        .collect();
    let mut rows = Vec::new();
    let mut matched_feature_keys = 0usize;
    for f in features {
        if let Some(label) = label_by_key.get(&(f.participant_id.as_str(), f.day)) {
            matched_feature_keys += 1;
            rows.push(DailyRow {
                participant_id: f.participant_id.clone(),
                day: f.day,
                features: f.feature_vector(),
                label: label.label,
            });
        }
    }
    rows.sort_by(|a, b| (&a.participant_id, a.day).cmp(&(&b.participant_id, b.day)));
    let report = JoinReport {
        n_joined: rows.len(),
        n_feature_only: features.len() - matched_feature_keys,
        n_label_only: labels.len() - rows.len(),
    };
    (rows, report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::LikertReport;

    fn energy(id: &str, timestamp: i64, value: u8) -> LikertReport {
        LikertReport {
            participant_id: id.into(),
            timestamp,
            kind: ReportKind::Energy,
            value,
        }
    }

    fn mood(id: &str, timestamp: i64, value: u8) -> LikertReport {
        LikertReport {
            participant_id: id.into(),
            timestamp,
            kind: ReportKind::Mood,
            value,
        }
    }

    fn participant(reports: Vec<LikertReport>) -> ParticipantRecord {
        ParticipantRecord {
            id: reports[0].participant_id.clone(),
            reports,
            gps: Vec::new(),
        }
    }

    #[test]
    fn constant_energy_is_never_above_average() {
        let rec = participant(vec![
            energy("p", 0, 5),
            energy("p", 86_400, 5),
            energy("p", 2 * 86_400, 5),
        ]);
        let labels = daily_energy_labels(&rec, 0).unwrap();
        assert_eq!(labels.len(), 3);
        assert!(labels.iter().all(|l| l.label == 0));
    }

    #[test]
    fn two_day_hand_example() {
        let rec = participant(vec![energy("p", 0, 4), energy("p", 86_400, 6)]);
        let labels = daily_energy_labels(&rec, 0).unwrap();
        assert_eq!(labels[0].personal_mean, 5.0);
        assert_eq!(labels[0].label, 0);
        assert_eq!(labels[1].label, 1);
        assert_eq!(labels[0].day_mean_energy, 4.0);
        assert_eq!(labels[1].day_mean_energy, 6.0);
    }

    #[test]
    fn mood_only_day_emits_no_row() {
        let rec = participant(vec![
            energy("p", 0, 4),
            mood("p", 86_400, 9),
            energy("p", 2 * 86_400, 6),
        ]);
        let labels = daily_energy_labels(&rec, 0).unwrap();
        let days: Vec<i64> = labels.iter().map(|l| l.day).collect();
        assert_eq!(days, vec![0, 2]);
    }

    #[test]
    fn no_energy_reports_errors() {
        let rec = participant(vec![mood("p", 0, 4)]);
        assert!(matches!(
            daily_energy_labels(&rec, 0),
            Err(LabelError::NoEnergyReports(_))
        ));
    }

    #[test]
    fn day_mean_uses_all_reports_of_day() {
        let rec = participant(vec![
            energy("p", 0, 4),
            energy("p", 3_600, 6),
            energy("p", 86_400, 9),
        ]);
        let labels = daily_energy_labels(&rec, 0).unwrap();
        assert_eq!(labels[0].day_mean_energy, 5.0);
        assert_eq!(labels[0].personal_mean, 7.0);
        assert_eq!(labels[0].label, 0);
        assert_eq!(labels[1].label, 1);
    }

    // Shifting every report by a constant shifts the threshold with the
    // mean, so labels are unchanged.
    #[test]
    fn labels_invariant_under_constant_shift() {
        let base = vec![
            energy("p", 0, 3),
            energy("p", 86_400, 5),
            energy("p", 2 * 86_400, 4),
            energy("p", 3 * 86_400, 6),
        ];
        let shifted: Vec<LikertReport> = base
            .iter()
            .map(|r| energy("p", r.timestamp, r.value + 2))
            .collect();
        let a = daily_energy_labels(&participant(base), 0).unwrap();
        let b = daily_energy_labels(&participant(shifted), 0).unwrap();
        let labels_a: Vec<u8> = a.iter().map(|l| l.label).collect();
        let labels_b: Vec<u8> = b.iter().map(|l| l.label).collect();
        assert_eq!(labels_a, labels_b);
    }

    fn feature_row(id: &str, day: i64) -> DailyFeatures {
        DailyFeatures {
            participant_id: id.into(),
            day,
            n_points: 1,
            day_location_variance: -27.0,
            total_distance_m: 0.0,
            radius_of_gyration_m: 0.0,
            n_clusters: 1,
            cluster_entropy: 0.0,
        }
    }

    fn label_row(id: &str, day: i64, label: u8) -> DailyLabel {
        DailyLabel {
            participant_id: id.into(),
            day,
            label,
            day_mean_energy: 5.0,
            personal_mean: 5.0,
        }
    }

    #[test]
    fn join_is_set_intersection_on_days() {
        let features = vec![feature_row("p", 0), feature_row("p", 1)];
        let labels = vec![label_row("p", 1, 1), label_row("p", 2, 0)];
        let (rows, report) = join_rows(&features, &labels);
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].day, 1);
        assert_eq!(rows[0].label, 1);
        assert_eq!(
            report,
            JoinReport {
                n_joined: 1,
                n_feature_only: 1,
                n_label_only: 1,
            }
        );
    }

    #[test]
    fn disjoint_join_is_empty_with_counts() {
        let features = vec![feature_row("p", 0)];
        let labels = vec![label_row("p", 5, 1), label_row("q", 0, 0)];
        let (rows, report) = join_rows(&features, &labels);
        assert!(rows.is_empty());
        assert_eq!(report.n_feature_only, 1);
        assert_eq!(report.n_label_only, 2);
    }

    #[test]
    fn join_count_matches_independent_intersection() {
        use std::collections::HashSet;
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for p in 0..4 {
            for day in 0..20i64 {
                if (day + p) % 3 != 0 {
                    features.push(feature_row(&format!("p{p}"), day));
                }
                if (day * 7 + p) % 4 != 0 {
                    labels.push(label_row(&format!("p{p}"), day, (day % 2) as u8));
                }
            }
        }
        let feature_keys: HashSet<(String, i64)> = features
            .iter()
            .map(|f| (f.participant_id.clone(), f.day))
            .collect();
        let label_keys: HashSet<(String, i64)> = labels
            .iter()
            .map(|l| (l.participant_id.clone(), l.day))
            .collect();
        let expected = feature_keys.intersection(&label_keys).count();
        let (rows, report) = join_rows(&features, &labels);
        assert_eq!(rows.len(), expected);
        assert_eq!(report.n_joined, expected);
    }

    #[test]
    fn label_prevalence_matches_definition() {
        let rec = participant(vec![
            energy("p", 0, 2),
            energy("p", 86_400, 8),
            energy("p", 2 * 86_400, 3),
            energy("p", 3 * 86_400, 9),
        ]);
        let labels = daily_energy_labels(&rec, 0).unwrap();
        let above = labels.iter().filter(|l| l.label == 1).count();
        let prevalence = above as f64 / labels.len() as f64;
        assert!((0.0..=1.0).contains(&prevalence));
        assert_eq!(above, 2);
    }
}
