//! Deterministic synthetic cohort generator with planted ground truth.
//!
//! The generator mirrors the pilot protocol shape (four prompts a day on
//! nine-point scales over eight weeks, default 73 participants) and plants
//! the phenomena the evaluation machinery is meant to detect: participant-
//! specific mood modes, a cohort-wide spread of mobility scales, and an
//! optional coupling between daily excursion distance and energy so that
//! high-mobility participants become feature-predictable.
//!
//! Every draw comes from a counter-based substream keyed on
//! (seed, participant, day); output is a pure function of the config and
//! independent of thread count. Ground truth is emitted separately and is
//! never consumed by any evaluation code path.

use crate::data::{
    CohortDataset, DataError, GpsPoint, LikertReport, ParticipantRecord, ReportKind,
    SECONDS_PER_DAY,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Data(#[from] DataError),
}

/// Generator configuration. Defaults follow the pilot protocol where the
/// study design is known; the dynamics constants are invented and all
/// tunable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_participants: usize,
    pub study_days: usize,
    pub prompts_per_day: usize,
    pub likert_min: u8,
    pub likert_max: u8,
    /// Probability a mood report equals the participant's planted mode.
    pub mode_concentration: f64,
    pub gps_samples_per_day: usize,
    /// Daily excursion scale of the least mobile participant, meters.
    pub sigma_low: f64,
    /// Daily excursion scale of the most mobile participant, meters.
    pub sigma_high: f64,
    /// Energy-mobility link strength (beta).
    pub coupling: f64,
    /// Scale each participant's coupling by their normalized mobility, so
    /// predictability grows with behavioral variance.
    pub couple_by_variance: bool,
    /// Probability a prompt goes unanswered (drops both report rows).
    pub missing_prob: f64,
    /// Relative weight of a two-step mood shift vs a one-step shift.
    pub mood_shift_decay: f64,
    /// Log-normal sigma of the daily excursion distance.
    pub distance_sigma: f64,
    /// Standard deviation of the daily latent energy noise.
    pub energy_noise_sd: f64,
    /// Per-axis GPS sampling noise, meters.
    pub gps_noise_m: f64,
    pub home_center_lat: f64,
    pub home_center_lon: f64,
    /// Half-width of the square region homes are drawn in, degrees.
    pub home_spread_deg: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_participants: 73,
            study_days: 56,
            prompts_per_day: 4,
            likert_min: 1,
            likert_max: 9,
            mode_concentration: 0.6,
            gps_samples_per_day: 48,
            sigma_low: 200.0,
            sigma_high: 20_000.0,
            coupling: 0.0,
            couple_by_variance: false,
            missing_prob: 0.0,
            mood_shift_decay: 0.5,
            distance_sigma: 0.5,
            energy_noise_sd: 0.25,
            gps_noise_m: 10.0,
            home_center_lat: 37.5,
            home_center_lon: -122.3,
            home_spread_deg: 0.5,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let fail = |msg: String| Err(SynthError::InvalidConfig(msg));
        if self.n_participants == 0 {
            return fail("n_participants must be >= 1".into());
        }
        if self.study_days == 0 || self.study_days >= (1 << 24) - 1 {
            return fail(format!("study_days {} out of range", self.study_days));
        }
        if self.prompts_per_day == 0 {
            return fail("prompts_per_day must be >= 1".into());
        }
        if self.gps_samples_per_day == 0 {
            return fail("gps_samples_per_day must be >= 1".into());
        }
        if !(self.likert_min >= 1 && self.likert_max <= 9) {
            return fail("likert range must lie within [1, 9]".into());
        }
        if self.likert_max < self.likert_min + 2 {
            return fail("likert range needs an interior for planted modes".into());
        }
        if !(self.mode_concentration > 0.0 && self.mode_concentration <= 1.0) {
            return fail(format!(
                "mode_concentration {} not in (0, 1]",
                self.mode_concentration
            ));
        }
        if !(self.sigma_low > 0.0 && self.sigma_high >= self.sigma_low) {
            return fail(format!(
                "need 0 < sigma_low <= sigma_high, got {} and {}",
                self.sigma_low, self.sigma_high
            ));
        }
        if !(self.coupling >= 0.0 && self.coupling.is_finite()) {
            return fail(format!("coupling {} must be >= 0", self.coupling));
        }
        if !(0.0..1.0).contains(&self.missing_prob) {
            return fail(format!("missing_prob {} not in [0, 1)", self.missing_prob));
        }
        if !(self.mood_shift_decay > 0.0 && self.mood_shift_decay <= 1.0) {
            return fail(format!(
                "mood_shift_decay {} not in (0, 1]",
                self.mood_shift_decay
            ));
        }
        if self.distance_sigma < 0.0 || self.energy_noise_sd < 0.0 || self.gps_noise_m < 0.0 {
            return fail("noise scales must be >= 0".into());
        }
        if self.home_spread_deg < 0.0 || self.home_center_lat.abs() > 80.0 {
            return fail("home region out of range".into());
        }
        Ok(())
    }
}

/// Planted per-participant parameters, for test oracles only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticipantTruth {
    pub participant_id: String,
    pub mood_mode: u8,
    pub energy_center: f64,
    pub mobility_scale_m: f64,
    pub effective_coupling: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub participants: Vec<ParticipantTruth>,
}

fn substream(seed: u64, participant: usize, day: Option<usize>) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let stream = ((participant as u64 + 1) << 24) | day.map(|d| d as u64 + 1).unwrap_or(0);
    rng.set_stream(stream);
    rng
}

fn participant_id(index: usize, total: usize) -> String {
    let width = total.to_string().len();
    format!("p{:0width$}", index + 1)
}

const METERS_PER_DEG: f64 = crate::features::EARTH_RADIUS_M * std::f64::consts::PI / 180.0;

fn generate_participant(
    config: &SynthConfig,
    index: usize,
) -> (ParticipantRecord, ParticipantTruth) {
    let id = participant_id(index, config.n_participants);
    let mut prng = substream(config.seed, index, None);

    let mood_mode = prng.random_range(config.likert_min + 1..=config.likert_max - 1);
    let mid = (config.likert_min as f64 + config.likert_max as f64) / 2.0;
    let energy_center = prng.random_range(mid - 1.0..mid + 1.0);
    let home_lat = config.home_center_lat
        + prng.random_range(-config.home_spread_deg..config.home_spread_deg);
    let home_lon = config.home_center_lon
        + prng.random_range(-config.home_spread_deg..config.home_spread_deg);

    // Mobility scales are log-spaced across the cohort so the range is
    // guaranteed to be covered; the normalized position doubles as the
    // coupling weight under couple_by_variance.
    let frac = if config.n_participants == 1 {
        0.5
    } else {
        index as f64 / (config.n_participants - 1) as f64
    };
    let mobility_scale_m = config.sigma_low * (config.sigma_high / config.sigma_low).powf(frac);
    let effective_coupling = if config.couple_by_variance {
        config.coupling * frac
    } else {
        config.coupling
    };

    // Pass 1: daily excursion distances, one leading draw per day stream.
    let mut day_rngs: Vec<ChaCha8Rng> = (0..config.study_days)
        .map(|d| substream(config.seed, index, Some(d)))
        .collect();
    let distances: Vec<f64> = day_rngs
        .iter_mut()
        .map(|rng| {
            let z: f64 = rng.sample(StandardNormal);
            mobility_scale_m * (config.distance_sigma * z).exp()
        })
        .collect();
    let mean_d = distances.iter().sum::<f64>() / distances.len() as f64;
    let sd_d = (distances.iter().map(|d| (d - mean_d) * (d - mean_d)).sum::<f64>()
        / distances.len() as f64)
        .sqrt();

    let mut reports = Vec::new();
    let mut gps = Vec::new();
    for (day, rng) in day_rngs.iter_mut().enumerate() {
        let day_start = day as i64 * SECONDS_PER_DAY;
        let z_day = if sd_d > 1e-30 {
            (distances[day] - mean_d) / sd_d
        } else {
            0.0
        };

        // Out-and-back excursion along a random bearing.
        let bearing = rng.random_range(0.0..std::f64::consts::TAU);
        let samples = config.gps_samples_per_day;
        for j in 0..samples {
            let u = (j as f64 + 0.5) / samples as f64;
            let along = if u <= 0.5 { 2.0 * u } else { 2.0 * (1.0 - u) };
            let reach = distances[day] / 2.0 * along;
            let noise_e: f64 = rng.sample(StandardNormal);
            let noise_n: f64 = rng.sample(StandardNormal);
            let east = reach * bearing.sin() + config.gps_noise_m * noise_e;
            let north = reach * bearing.cos() + config.gps_noise_m * noise_n;
            let lat = (home_lat + north / METERS_PER_DEG).clamp(-90.0, 90.0);
            let lon = (home_lon + east / (METERS_PER_DEG * home_lat.to_radians().cos()))
                .clamp(-180.0, 180.0);
            gps.push(GpsPoint {
                participant_id: id.clone(),
                timestamp: day_start
                    + ((j as f64 + 0.5) * SECONDS_PER_DAY as f64 / samples as f64) as i64,
                lat,
                lon,
            });
        }

        // Daily latent energy, then one mood and one energy report per
        // answered prompt.
        let noise: f64 = rng.sample(StandardNormal);
        let latent = energy_center + effective_coupling * z_day + config.energy_noise_sd * noise;
        let energy_day = (latent.round() as i64)
            .clamp(config.likert_min as i64, config.likert_max as i64) as i16;

        for prompt in 0..config.prompts_per_day {
            let timestamp = day_start
                + ((prompt as f64 + 0.5) * SECONDS_PER_DAY as f64
                    / config.prompts_per_day as f64) as i64;
            let mood_value = if rng.random_bool(config.mode_concentration) {
                mood_mode
            } else {
                let two_step_prob = config.mood_shift_decay / (1.0 + config.mood_shift_decay);
                let magnitude: i16 = if rng.random_bool(two_step_prob) { 2 } else { 1 };
                let sign: i16 = if rng.random_bool(0.5) { 1 } else { -1 };
                (mood_mode as i16 + sign * magnitude)
                    .clamp(config.likert_min as i16, config.likert_max as i16)
                    as u8
            };
            let jitter: i16 = rng.random_range(-1..=1);
            let energy_value = (energy_day + jitter)
                .clamp(config.likert_min as i16, config.likert_max as i16)
                as u8;
            let answered = !rng.random_bool(config.missing_prob);
            if answered {
                reports.push(LikertReport {
                    participant_id: id.clone(),
                    timestamp,
                    kind: ReportKind::Mood,
                    value: mood_value,
                });
                reports.push(LikertReport {
                    participant_id: id.clone(),
                    timestamp,
                    kind: ReportKind::Energy,
                    value: energy_value,
                });
            }
        }
    }

    (
        ParticipantRecord { id: id.clone(), reports, gps },
        ParticipantTruth {
            participant_id: id,
            mood_mode,
            energy_center,
            mobility_scale_m,
            effective_coupling,
        },
    )
}

/// Generate a cohort and its planted ground truth. Fully determined by the
/// config, including the seed.
pub fn generate(config: &SynthConfig) -> Result<(CohortDataset, GroundTruth), SynthError> {
    config.validate()?;
    let generated: Vec<(ParticipantRecord, ParticipantTruth)> = (0..config.n_participants)
        .into_par_iter()
        .map(|index| generate_participant(config, index))
        .collect();
    let mut records = Vec::with_capacity(generated.len());
    let mut truths = Vec::with_capacity(generated.len());
    for (record, truth) in generated {
        records.push(record);
        truths.push(truth);
    }
    let dataset = CohortDataset::new(records, 0)?;
    Ok((dataset, GroundTruth { participants: truths }))
}

/// Paths written by [`emit_csv`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthFiles {
    pub reports: PathBuf,
    pub gps: PathBuf,
}

/// Write `reports.csv` and `gps.csv` in the canonical schemas.
pub fn emit_csv(dataset: &CohortDataset, out_dir: &Path) -> Result<SynthFiles, SynthError> {
    let reports: Vec<LikertReport> = dataset
        .participants()
        .iter()
        .flat_map(|p| p.reports.iter().cloned())
        .collect();
    let gps: Vec<GpsPoint> = dataset
        .participants()
        .iter()
        .flat_map(|p| p.gps.iter().cloned())
        .collect();
    let files = SynthFiles {
        reports: out_dir.join("reports.csv"),
        gps: out_dir.join("gps.csv"),
    };
    crate::data::write_reports_csv(&files.reports, &reports)?;
    crate::data::write_gps_csv(&files.gps, &gps)?;
    Ok(files)
}
