//! The `longbase` command-line surface.
//!
//! Subcommands mirror the pipeline stages so every intermediate artifact is
//! inspectable: `synth` writes a cohort, `baselines` compares the two
//! constant predictors, `eval` runs the per-participant experiment, and
//! `screen` re-emits a screening curve from a saved report.
//!
//! Exit codes: 0 success, 1 I/O, 2 flag validation, 3 empty domain,
//! 4 malformed content. Every run writes a `run_manifest.json` with the
//! effective flags; outputs are byte-identical for a fixed seed regardless
//! of `LONGBASE_THREADS`.

use crate::baselines::{personal_baseline, population_baseline, BaselineResult};
use crate::data::{assemble_dataset, load_gps, load_reports, DataError, ReportKind};
use crate::evaluation::{
    build_eval_report, evaluate_personal, screening_sweep, staircase_thresholds, CvSpec,
    EvalError, EvalParams, EvalReport, ScreeningCurve,
};
use crate::features::{feature_matrix, FeatureError};
use crate::labels::cohort_energy_labels;
use crate::models::{ForestParams, MaxFeatures, ModelSpec, TreeParams};
use crate::synth::{emit_csv, generate, SynthConfig, SynthError};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::fmt;
use std::path::{Path, PathBuf};

/// CLI failure carrying its process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Exit 1: file system and I/O failures.
    Io(String),
    /// Exit 2: flag or environment validation.
    Validation(String),
    /// Exit 3: structurally valid input with nothing to compute on.
    EmptyDomain(String),
    /// Exit 4: malformed file content.
    Malformed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Validation(_) => 2,
            CliError::EmptyDomain(_) => 3,
            CliError::Malformed(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Io(msg)
            | CliError::Validation(msg)
            | CliError::EmptyDomain(msg)
            | CliError::Malformed(msg) => write!(f, "{msg}"),
        }
    }
}

impl From<DataError> for CliError {
    fn from(err: DataError) -> Self {
        match err {
            DataError::Io { .. } => CliError::Io(err.to_string()),
            DataError::EmptyInput => CliError::EmptyDomain(err.to_string()),
            _ => CliError::Malformed(err.to_string()),
        }
    }
}

impl From<SynthError> for CliError {
    fn from(err: SynthError) -> Self {
        match err {
            SynthError::InvalidConfig(msg) => CliError::Validation(msg),
            SynthError::Data(e) => e.into(),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(err: EvalError) -> Self {
        match err {
            EvalError::Feature(FeatureError::InvalidGridSize(_)) => {
                CliError::Validation(err.to_string())
            }
            _ => CliError::Malformed(err.to_string()),
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "longbase",
    version,
    about = "Personal-vs-population baselines and predictability screening for longitudinal wellbeing data"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a synthetic cohort: reports.csv, gps.csv, ground_truth.json
    Synth(SynthArgs),
    /// Population vs personal baseline accuracies for one report kind
    Baselines(BaselinesArgs),
    /// Full pipeline: features, labels, per-participant CV, screening curve
    Eval(EvalArgs),
    /// Re-emit the screening curve of a saved report on a custom grid
    Screen(ScreenArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum KindArg {
    Mood,
    Energy,
}

impl From<KindArg> for ReportKind {
    fn from(kind: KindArg) -> Self {
        match kind {
            KindArg::Mood => ReportKind::Mood,
            KindArg::Energy => ReportKind::Energy,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CvArg {
    Stratified,
    Forward,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelArg {
    Majority,
    Tree,
    Forest,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AggArg {
    Micro,
    Macro,
}

#[derive(Args, Debug, Serialize)]
pub struct SynthArgs {
    /// Output directory (must exist or be creatable)
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 73)]
    pub n_participants: usize,
    #[arg(long, default_value_t = 56)]
    pub study_days: usize,
    #[arg(long, default_value_t = 4)]
    pub prompts_per_day: usize,
    /// Probability a mood report equals the planted personal mode, in (0, 1]
    #[arg(long, default_value_t = 0.6)]
    pub mode_concentration: f64,
    #[arg(long, default_value_t = 48)]
    pub gps_samples_per_day: usize,
    /// Daily excursion scale of the least mobile participant, meters
    #[arg(long, default_value_t = 200.0)]
    pub sigma_low: f64,
    /// Daily excursion scale of the most mobile participant, meters
    #[arg(long, default_value_t = 20000.0)]
    pub sigma_high: f64,
    /// Energy-mobility coupling strength
    #[arg(long, default_value_t = 0.0)]
    pub beta: f64,
    /// Scale coupling by normalized mobility so predictability grows with variance
    #[arg(long, default_value_t = false)]
    pub couple_by_variance: bool,
    /// Probability a prompt goes unanswered, in [0, 1)
    #[arg(long, default_value_t = 0.0)]
    pub missing_prob: f64,
    #[arg(long, default_value_t = 0.5)]
    pub mood_shift_decay: f64,
    #[arg(long, default_value_t = 0.5)]
    pub distance_sigma: f64,
    #[arg(long, default_value_t = 0.25)]
    pub energy_noise_sd: f64,
    #[arg(long, default_value_t = 10.0)]
    pub gps_noise_m: f64,
}

impl SynthArgs {
    fn to_config(&self) -> SynthConfig {
        SynthConfig {
            n_participants: self.n_participants,
            study_days: self.study_days,
            prompts_per_day: self.prompts_per_day,
            mode_concentration: self.mode_concentration,
            gps_samples_per_day: self.gps_samples_per_day,
            sigma_low: self.sigma_low,
            sigma_high: self.sigma_high,
            coupling: self.beta,
            couple_by_variance: self.couple_by_variance,
            missing_prob: self.missing_prob,
            mood_shift_decay: self.mood_shift_decay,
            distance_sigma: self.distance_sigma,
            energy_noise_sd: self.energy_noise_sd,
            gps_noise_m: self.gps_noise_m,
            seed: self.seed,
            ..SynthConfig::default()
        }
    }
}

#[derive(Args, Debug, Serialize)]
pub struct BaselinesArgs {
    /// Reports CSV path
    #[arg(long)]
    pub reports: PathBuf,
    /// Which report item to evaluate
    #[arg(long, value_enum, default_value_t = KindArg::Mood)]
    pub kind: KindArg,
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct EvalArgs {
    /// Reports CSV path
    #[arg(long)]
    pub reports: PathBuf,
    /// GPS CSV path
    #[arg(long)]
    pub gps: PathBuf,
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Folds for stratified CV, or split count for forward chaining
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    /// Minimum labeled days for eligibility
    #[arg(long, default_value_t = 14)]
    pub min_days: usize,
    /// Side of the square occupancy grid, meters
    #[arg(long, default_value_t = 500.0)]
    pub grid_m: f64,
    #[arg(long, default_value_t = 100)]
    pub n_trees: usize,
    /// Maximum tree depth; unlimited when omitted
    #[arg(long)]
    pub max_depth: Option<usize>,
    #[arg(long, value_enum, default_value_t = CvArg::Stratified)]
    pub cv: CvArg,
    #[arg(long, value_enum, default_value_t = ModelArg::Forest)]
    pub model: ModelArg,
    /// Aggregation highlighted in the printed summary
    #[arg(long, value_enum, default_value_t = AggArg::Macro)]
    pub agg: AggArg,
    /// Day-boundary shift in seconds applied to all timestamps
    #[arg(long, default_value_t = 0)]
    pub day_offset: i64,
}

#[derive(Args, Debug, Serialize)]
pub struct ScreenArgs {
    /// Path to an eval_report.json produced by `eval`
    #[arg(long)]
    pub report: PathBuf,
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
    /// Ascending comma-separated thresholds; defaults to the report's
    /// staircase grid (the sorted distinct participant variances).
    /// Log-variances are typically negative, so hyphen values are allowed.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub thresholds: Option<Vec<f64>>,
}

/// Configure the global rayon pool from `LONGBASE_THREADS`, then dispatch.
pub fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::Synth(args) => cmd_synth(&args),
        Command::Baselines(args) => cmd_baselines(&args),
        Command::Eval(args) => cmd_eval(&args),
        Command::Screen(args) => cmd_screen(&args),
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("LONGBASE_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw.trim().parse().map_err(|_| {
        CliError::Validation(format!(
            "LONGBASE_THREADS must be a positive integer, got `{raw}`"
        ))
    })?;
    if threads == 0 {
        return Err(CliError::Validation(
            "LONGBASE_THREADS must be at least 1".into(),
        ));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Validation(e.to_string()))
}

fn ensure_out_dir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path)
        .map_err(|e| CliError::Io(format!("cannot create output dir {}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut body = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Malformed(format!("cannot serialize {}: {e}", path.display())))?;
    body.push('\n');
    std::fs::write(path, body)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

#[derive(Serialize)]
struct RunManifest<'a, T: Serialize> {
    command: &'a str,
    flags: &'a T,
}

fn write_manifest<T: Serialize>(out: &Path, command: &str, flags: &T) -> Result<(), CliError> {
    write_json(&out.join("run_manifest.json"), &RunManifest { command, flags })
}

fn cmd_synth(args: &SynthArgs) -> Result<(), CliError> {
    let config = args.to_config();
    config.validate()?;
    let (cohort, truth) = generate(&config)?;
    ensure_out_dir(&args.out)?;
    let files = emit_csv(&cohort, &args.out)?;
    write_json(&args.out.join("ground_truth.json"), &truth)?;
    write_manifest(&args.out, "synth", args)?;
    println!(
        "synth: {} participants, {} report rows, {} gps rows",
        cohort.len(),
        cohort.participants().iter().map(|p| p.reports.len()).sum::<usize>(),
        cohort.participants().iter().map(|p| p.gps.len()).sum::<usize>(),
    );
    println!("  wrote {}", files.reports.display());
    println!("  wrote {}", files.gps.display());
    println!("  wrote {}", args.out.join("ground_truth.json").display());
    Ok(())
}

/// Both baseline results for one kind, as written to baselines.json.
#[derive(Serialize)]
struct BaselinesReport {
    kind: KindArg,
    population: BaselineResult,
    personal: BaselineResult,
}

fn cmd_baselines(args: &BaselinesArgs) -> Result<(), CliError> {
    let reports = load_reports(&args.reports, None)?;
    let dataset = assemble_dataset(reports, Vec::new(), 0)?;
    let kind: ReportKind = args.kind.into();
    let population = population_baseline(&dataset, kind)
        .map_err(|e| CliError::EmptyDomain(e.to_string()))?;
    let personal =
        personal_baseline(&dataset, kind).map_err(|e| CliError::EmptyDomain(e.to_string()))?;
    println!(
        "population baseline ({kind}): mode {} micro {:.4} macro {:.4}",
        population.global_mode.unwrap_or(0),
        population.micro_accuracy,
        population.macro_accuracy,
    );
    println!(
        "personal   baseline ({kind}): micro {:.4} macro {:.4}",
        personal.micro_accuracy, personal.macro_accuracy,
    );
    ensure_out_dir(&args.out)?;
    let report = BaselinesReport {
        kind: args.kind,
        population,
        personal,
    };
    write_json(&args.out.join("baselines.json"), &report)?;
    write_manifest(&args.out, "baselines", args)?;
    Ok(())
}

fn eval_params(args: &EvalArgs) -> Result<EvalParams, CliError> {
    if args.k < 2 {
        return Err(CliError::Validation(format!(
            "--k must be at least 2, got {}",
            args.k
        )));
    }
    if args.min_days == 0 {
        return Err(CliError::Validation("--min-days must be at least 1".into()));
    }
    if !(args.grid_m.is_finite() && args.grid_m > 0.0) {
        return Err(CliError::Validation(format!(
            "--grid-m must be positive, got {}",
            args.grid_m
        )));
    }
    if args.n_trees == 0 {
        return Err(CliError::Validation("--n-trees must be at least 1".into()));
    }
    let model = match args.model {
        ModelArg::Majority => ModelSpec::Majority,
        ModelArg::Tree => ModelSpec::Tree(TreeParams {
            max_depth: args.max_depth,
            min_leaf: 1,
        }),
        ModelArg::Forest => ModelSpec::Forest(ForestParams {
            n_trees: args.n_trees,
            max_depth: args.max_depth,
            min_leaf: 1,
            max_features: MaxFeatures::Sqrt,
            bootstrap: true,
            seed: args.seed,
        }),
    };
    let cv = match args.cv {
        CvArg::Stratified => CvSpec::StratifiedKFold { k: args.k },
        CvArg::Forward => CvSpec::ForwardChaining { n_splits: args.k },
    };
    Ok(EvalParams {
        model,
        cv,
        min_labeled_days: args.min_days,
        grid_m: args.grid_m,
        seed: args.seed,
    })
}

fn write_features_csv(
    path: &Path,
    rows: &[crate::features::DailyFeatures],
) -> Result<(), CliError> {
    let mut body = String::from(
        "participant_id,day,n_points,day_location_variance,total_distance_m,radius_of_gyration_m,n_clusters,cluster_entropy\n",
    );
    for f in rows {
        body.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            f.participant_id,
            f.day,
            f.n_points,
            f.day_location_variance,
            f.total_distance_m,
            f.radius_of_gyration_m,
            f.n_clusters,
            f.cluster_entropy,
        ));
    }
    std::fs::write(path, body)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

fn write_labels_csv(path: &Path, rows: &[crate::labels::DailyLabel]) -> Result<(), CliError> {
    let mut body = String::from("participant_id,day,label,day_mean_energy,personal_mean\n");
    for l in rows {
        body.push_str(&format!(
            "{},{},{},{},{}\n",
            l.participant_id, l.day, l.label, l.day_mean_energy, l.personal_mean,
        ));
    }
    std::fs::write(path, body)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

fn write_screening_csv(path: &Path, curve: &ScreeningCurve) -> Result<(), CliError> {
    let mut body = String::from("threshold,n_retained,mean_improvement\n");
    for p in &curve.points {
        let mean = p
            .mean_improvement
            .map(|m| m.to_string())
            .unwrap_or_default();
        body.push_str(&format!("{},{},{mean}\n", p.threshold, p.n_retained));
    }
    std::fs::write(path, body)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

fn cmd_eval(args: &EvalArgs) -> Result<(), CliError> {
    let params = eval_params(args)?;
    let reports = load_reports(&args.reports, None)?;
    let gps = load_gps(&args.gps)?;
    let dataset = assemble_dataset(reports, gps, args.day_offset)?;

    ensure_out_dir(&args.out)?;
    let features = feature_matrix(&dataset, args.grid_m).map_err(EvalError::from)?;
    let labels = cohort_energy_labels(&dataset);
    write_features_csv(&args.out.join("features.csv"), &features)?;
    write_labels_csv(&args.out.join("labels.csv"), &labels)?;

    let outcome = evaluate_personal(&dataset, &params)?;
    let report = build_eval_report(&outcome);
    write_json(&args.out.join("eval_report.json"), &report)?;
    write_screening_csv(&args.out.join("screening_curve.csv"), &report.screening_curve)?;
    write_manifest(&args.out, "eval", args)?;

    let improvement = match args.agg {
        AggArg::Micro => report.aggregate.micro_improvement,
        AggArg::Macro => report.aggregate.macro_improvement,
    };
    println!(
        "eval: {} eligible, {} excluded, {} skipped",
        report.aggregate.n_eligible,
        report.exclusions.len(),
        report.skipped.len(),
    );
    match improvement {
        Some(value) => println!("  {:?} mean improvement: {value:.4}", args.agg),
        None => println!("  no eligible participants; improvement undefined"),
    }
    match &report.correlation {
        Some(c) => println!(
            "  variance-improvement correlation: r {:.4} rho {:.4} p {:.4}",
            c.pearson_r, c.spearman_rho, c.p_value
        ),
        None => println!(
            "  correlation unavailable: {}",
            report.correlation_note.as_deref().unwrap_or("unknown")
        ),
    }
    Ok(())
}

fn cmd_screen(args: &ScreenArgs) -> Result<(), CliError> {
    let body = std::fs::read_to_string(&args.report)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", args.report.display())))?;
    let report: EvalReport = serde_json::from_str(&body).map_err(|e| {
        CliError::Malformed(format!("malformed eval report {}: {e}", args.report.display()))
    })?;
    let thresholds = match &args.thresholds {
        Some(grid) => {
            if grid.is_empty() {
                return Err(CliError::Validation("--thresholds must not be empty".into()));
            }
            if grid.windows(2).any(|w| w[0] > w[1]) {
                return Err(CliError::Validation(
                    "--thresholds must be sorted ascending".into(),
                ));
            }
            grid.clone()
        }
        None => staircase_thresholds(&report.participants),
    };
    let curve = screening_sweep(&report.participants, &thresholds)?;
    ensure_out_dir(&args.out)?;
    write_screening_csv(&args.out.join("screening_curve.csv"), &curve)?;
    write_manifest(&args.out, "screen", args)?;
    let retained: Vec<usize> = curve.points.iter().map(|p| p.n_retained).collect();
    println!(
        "screen: {} thresholds, retained counts {:?}",
        curve.points.len(),
        retained
    );
    Ok(())
}
