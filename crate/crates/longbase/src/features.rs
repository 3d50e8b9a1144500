//! GPS-derived behavioral features.
//!
//! The screening metric is the log of the sum of latitude and longitude
//! variances over a participant's whole GPS log, in raw degrees. Daily
//! features additionally cover distance traveled, radius of gyration, and
//! grid-cell occupancy (cluster count and entropy).
//!
//! Rows for different participants are independent; [`feature_matrix`]
//! computes them in parallel and returns them in canonical
//! `(participant_id, day)` order regardless of schedule.

use crate::data::{local_day, CohortDataset, GpsPoint, ParticipantRecord};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

/// Mean Earth radius used for all great-circle distances.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;
/// Floor added inside the log so zero-movement participants stay finite.
pub const VARIANCE_FLOOR: f64 = 1e-12;
/// Default side length of the square occupancy grid.
pub const DEFAULT_GRID_M: f64 = 500.0;

/// Names of the daily feature columns, in the order produced by
/// [`DailyFeatures::feature_vector`].
pub const FEATURE_NAMES: [&str; 6] = [
    "n_points",
    "day_location_variance",
    "total_distance_m",
    "radius_of_gyration_m",
    "n_clusters",
    "cluster_entropy",
];

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("behavioral variance of an empty point sequence is undefined")]
    EmptyPointSequence,
    #[error("participant {participant_id} has no GPS points on day {day}")]
    NoPointsOnDay { participant_id: String, day: i64 },
    #[error("grid size must be positive, got {0}")]
    InvalidGridSize(f64),
}

/// Location and mobility features for one participant-day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailyFeatures {
    pub participant_id: String,
    pub day: i64,
    pub n_points: usize,
    /// ln(var(lat) + var(lon) + floor) over the day's points, degrees².
    pub day_location_variance: f64,
    /// Sum of haversine distances over consecutive same-day points.
    pub total_distance_m: f64,
    /// Root-mean-square haversine distance to the day's centroid.
    pub radius_of_gyration_m: f64,
    /// Occupied cells of the fixed square grid anchored at the
    /// participant's first-ever point.
    pub n_clusters: usize,
    /// Shannon entropy (nats) of the point distribution over occupied cells.
    pub cluster_entropy: f64,
}

impl DailyFeatures {
    /// Feature vector in [`FEATURE_NAMES`] order, as fed to classifiers.
    pub fn feature_vector(&self) -> Vec<f64> {
        vec![
            self.n_points as f64,
            self.day_location_variance,
            self.total_distance_m,
            self.radius_of_gyration_m,
            self.n_clusters as f64,
            self.cluster_entropy,
        ]
    }
}

/// The screening variable: log-variance of a participant's location over
/// the whole study period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BehavioralVariance {
    pub participant_id: String,
    /// Natural log of summed lat/lon variance (squared degrees), floored.
    pub value: f64,
}

/// Great-circle distance in meters between two GPS samples.
pub fn haversine_m(a: &GpsPoint, b: &GpsPoint) -> f64 {
    haversine_coords_m(a.lat, a.lon, b.lat, b.lon)
}

fn haversine_coords_m(lat_a: f64, lon_a: f64, lat_b: f64, lon_b: f64) -> f64 {
    let phi_a = lat_a.to_radians();
    let phi_b = lat_b.to_radians();
    let d_phi = (lat_b - lat_a).to_radians();
    let d_lambda = (lon_b - lon_a).to_radians();
    let s = (d_phi / 2.0).sin().powi(2)
        + phi_a.cos() * phi_b.cos() * (d_lambda / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * s.sqrt().min(1.0).asin()
}

// Welford online variance, population form (divide by n).
fn population_variance(values: impl Iterator<Item = f64>) -> (usize, f64) {
    let mut n = 0usize;
    let mut mean = 0.0f64;
    let mut m2 = 0.0f64;
    for v in values {
        n += 1;
        let delta = v - mean;
        mean += delta / n as f64;
        m2 += delta * (v - mean);
    }
    if n == 0 {
        (0, 0.0)
    } else {
        (n, m2 / n as f64)
    }
}

/// ln(var(lat) + var(lon) + floor) over a point sequence, lat/lon in
/// degrees and variances population-style. Invariant under translation and
/// permutation of the points.
pub fn behavioral_variance(points: &[GpsPoint]) -> Result<f64, FeatureError> {
    if points.is_empty() {
        return Err(FeatureError::EmptyPointSequence);
    }
    let (_, var_lat) = population_variance(points.iter().map(|p| p.lat));
    let (_, var_lon) = population_variance(points.iter().map(|p| p.lon));
    Ok((var_lat + var_lon + VARIANCE_FLOOR).ln())
}

/// [`behavioral_variance`] over a participant's whole GPS stream.
pub fn participant_behavioral_variance(
    rec: &ParticipantRecord,
) -> Result<BehavioralVariance, FeatureError> {
    Ok(BehavioralVariance {
        participant_id: rec.id.clone(),
        value: behavioral_variance(&rec.gps)?,
    })
}

/// Grid cell of a point on the square grid anchored at `anchor`, using a
/// local equirectangular projection (meters east/north of the anchor).
fn grid_cell(point: &GpsPoint, anchor: &GpsPoint, grid_m: f64) -> (i64, i64) {
    let meters_per_deg = EARTH_RADIUS_M * std::f64::consts::PI / 180.0;
    let x = (point.lon - anchor.lon) * meters_per_deg * anchor.lat.to_radians().cos();
    let y = (point.lat - anchor.lat) * meters_per_deg;
    ((x / grid_m).floor() as i64, (y / grid_m).floor() as i64)
}

/// Daily location/mobility features for one participant-day.
///
/// The participant must have at least one GPS point whose
/// [`local_day`] equals `day`.
pub fn daily_features(
    rec: &ParticipantRecord,
    day: i64,
    day_offset_seconds: i64,
    grid_m: f64,
) -> Result<DailyFeatures, FeatureError> {
    if !(grid_m.is_finite() && grid_m > 0.0) {
        return Err(FeatureError::InvalidGridSize(grid_m));
    }
    let day_points: Vec<&GpsPoint> = rec
        .gps
        .iter()
        .filter(|p| local_day(p.timestamp, day_offset_seconds) == day)
        .collect();
    if day_points.is_empty() {
        return Err(FeatureError::NoPointsOnDay {
            participant_id: rec.id.clone(),
            day,
        });
    }
    let n_points = day_points.len();

    let (_, var_lat) = population_variance(day_points.iter().map(|p| p.lat));
    let (_, var_lon) = population_variance(day_points.iter().map(|p| p.lon));
    let day_location_variance = (var_lat + var_lon + VARIANCE_FLOOR).ln();

    let total_distance_m = day_points
        .windows(2)
        .map(|w| haversine_m(w[0], w[1]))
        .sum::<f64>();

    let centroid_lat = day_points.iter().map(|p| p.lat).sum::<f64>() / n_points as f64;
    let centroid_lon = day_points.iter().map(|p| p.lon).sum::<f64>() / n_points as f64;
    let mean_sq = day_points
        .iter()
        .map(|p| haversine_coords_m(p.lat, p.lon, centroid_lat, centroid_lon).powi(2))
        .sum::<f64>()
        / n_points as f64;
    let radius_of_gyration_m = mean_sq.sqrt();

    // The grid anchor is the participant's first-ever point, so cell
    // identities are stable across days.
    let anchor = &rec.gps[0];
    let mut cell_counts: BTreeMap<(i64, i64), usize> = BTreeMap::new();
    for p in &day_points {
        *cell_counts.entry(grid_cell(p, anchor, grid_m)).or_insert(0) += 1;
    }
    let n_clusters = cell_counts.len();
    let cluster_entropy = -cell_counts
        .values()
        .map(|&c| {
            let p = c as f64 / n_points as f64;
            p * p.ln()
        })
        .sum::<f64>();

    Ok(DailyFeatures {
        participant_id: rec.id.clone(),
        day,
        n_points,
        day_location_variance,
        total_distance_m,
        radius_of_gyration_m,
        n_clusters,
        cluster_entropy: cluster_entropy.max(0.0),
    })
}

/// Days on which a participant has at least one GPS point, ascending.
pub fn gps_days(rec: &ParticipantRecord, day_offset_seconds: i64) -> Vec<i64> {
    let mut days: Vec<i64> = rec
        .gps
        .iter()
        .map(|p| local_day(p.timestamp, day_offset_seconds))
        .collect();
    days.sort_unstable();
    days.dedup();
    days
}

/// One feature row per (participant, day) with data, ordered by
/// `(participant_id, day)`.
pub fn feature_matrix(
    dataset: &CohortDataset,
    grid_m: f64,
) -> Result<Vec<DailyFeatures>, FeatureError> {
    if !(grid_m.is_finite() && grid_m > 0.0) {
        return Err(FeatureError::InvalidGridSize(grid_m));
    }
    let per_participant: Result<Vec<Vec<DailyFeatures>>, FeatureError> = dataset
        .participants()
        .par_iter()
        .map(|rec| {
            gps_days(rec, dataset.day_offset_seconds)
                .into_iter()
                .map(|day| daily_features(rec, day, dataset.day_offset_seconds, grid_m))
                .collect()
        })
        .collect();
    Ok(per_participant?.into_iter().flatten().collect())
}
