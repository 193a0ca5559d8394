//! Config-driven experiment runner.
//!
//! One experiment executes the full pipeline: ingest, filter, magnitudes,
//! windowing, feature extraction, train/test split, SMOTE on the training
//! half, LSTM training, prediction, and metrics. The reported grid covers 12
//! group-by-sensor configurations plus one recursive-feature-elimination
//! configuration, 13 in total, each runnable under the subject-independent
//! and subject-dependent protocols.

use std::io::Write;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::balance::{smote, SmoteSpec};
use crate::error::{Error, Result};
use crate::eval::{
    confusion, roc_auc, sens_spec, split, ConfusionCounts, RocPoint, SplitMode, SplitPlan,
};
use crate::features::{build_matrix, rfe_select, FeatureGroup, FeatureMatrix, SpectralContext};
use crate::ingest::{
    compute_magnitudes, filter_annotation_zero, generate_synthetic, load_daphnet_dir,
    FreezeEpisode, Recording, Sensor, SynthSpec,
};
use crate::model::{fi_baseline_calibrate, fi_baseline_predict, predict, train, Hyper, LstmModel};
use crate::windowing::{segment, WindowSpec};

/// Environment variable naming the default Daphnet data directory.
pub const DATA_DIR_ENV: &str = "FOG_DATA_DIR";

/// Sensor selection of one experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensorChoice {
    Ankle,
    Thigh,
    Trunk,
    All,
}

impl SensorChoice {
    pub fn sensors(self) -> Vec<Sensor> {
        match self {
            SensorChoice::Ankle => vec![Sensor::Ankle],
            SensorChoice::Thigh => vec![Sensor::Thigh],
            SensorChoice::Trunk => vec![Sensor::Trunk],
            SensorChoice::All => Sensor::ALL.to_vec(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SensorChoice::Ankle => "ankle",
            SensorChoice::Thigh => "thigh",
            SensorChoice::Trunk => "trunk",
            SensorChoice::All => "all",
        }
    }
}

/// Which feature columns feed the classifier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureSelection {
    /// A fixed group and sensor subset from the catalog.
    Group {
        group: FeatureGroup,
        sensors: SensorChoice,
    },
    /// Recursive feature elimination over the full 145-column catalog down
    /// to the k most informative columns, fit on the training split.
    Rfe {
        #[serde(default = "default_rfe_k")]
        k: usize,
    },
}

fn default_rfe_k() -> usize {
    25
}

impl FeatureSelection {
    /// The catalog the matrix is built from before any elimination.
    fn base(&self) -> (FeatureGroup, Vec<Sensor>) {
        match self {
            FeatureSelection::Group { group, sensors } => (*group, sensors.sensors()),
            FeatureSelection::Rfe { .. } => (FeatureGroup::Both, Sensor::ALL.to_vec()),
        }
    }

    pub fn label(&self) -> String {
        match self {
            FeatureSelection::Group { group, sensors } => {
                format!("{}_{}", group.name(), sensors.name())
            }
            FeatureSelection::Rfe { k } => format!("rfe{k}"),
        }
    }
}

/// Where the recordings come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DataSource {
    /// Daphnet session files `S##R##.txt` under `dir` (falls back to the
    /// `FOG_DATA_DIR` environment variable when absent).
    Daphnet {
        #[serde(default)]
        dir: Option<PathBuf>,
    },
    /// Deterministically generated synthetic patients.
    Synthetic {
        #[serde(default)]
        synth: SynthDataSpec,
    },
}

/// Recipe for a synthetic multi-patient dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthDataSpec {
    pub n_patients: usize,
    pub duration_s: f64,
    pub episodes_per_patient: usize,
    pub episode_duration_s: f64,
    pub noise_mg: f64,
    pub walk_hz: f64,
    pub freeze_hz: f64,
    pub amplitude_mg: f64,
    pub gravity_mg: f64,
}

impl Default for SynthDataSpec {
    fn default() -> Self {
        SynthDataSpec {
            n_patients: 10,
            duration_s: 60.0,
            episodes_per_patient: 3,
            episode_duration_s: 6.0,
            noise_mg: 50.0,
            walk_hz: 2.0,
            freeze_hz: 6.0,
            amplitude_mg: 400.0,
            gravity_mg: 1000.0,
        }
    }
}

/// A fully specified experiment. The single `seed` drives every stochastic
/// stage (synthetic data, SMOTE, initialization, shuffling, random splits);
/// seeds inside the nested specs are derived from it at run time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub id: String,
    pub data: DataSource,
    #[serde(default)]
    pub window: WindowSpec,
    pub features: FeatureSelection,
    #[serde(default)]
    pub smote: SmoteSpec,
    #[serde(default)]
    pub hyper: Hyper,
    #[serde(default)]
    pub split: SplitPlan,
    pub seed: u64,
    /// Where reports, ROC curves and checkpoints land.
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Push the master seed into every nested stage. The output directory is
    /// cleared: it is delivery plumbing, not experiment identity, and report
    /// snapshots must not depend on where they were written.
    pub fn resolved(&self) -> ExperimentConfig {
        let mut cfg = self.clone();
        cfg.hyper.seed = self.seed;
        cfg.smote.seed = self.seed.wrapping_add(1);
        cfg.split.seed = self.seed.wrapping_add(2);
        cfg.out_dir = None;
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        self.window.validate()?;
        self.smote.validate()?;
        self.hyper.validate()?;
        self.split.validate()?;
        if let FeatureSelection::Rfe { k } = self.features {
            let full = crate::features::catalog(FeatureGroup::Both, &Sensor::ALL)?.len();
            if k == 0 || k >= full {
                return Err(Error::invalid(format!(
                    "rfe k must satisfy 0 < k < {full}, got {k}"
                )));
            }
        }
        if let DataSource::Synthetic { synth } = &self.data {
            if synth.n_patients == 0 {
                return Err(Error::invalid("synthetic data needs at least one patient"));
            }
            if synth.episodes_per_patient > 0 {
                let block = synth.duration_s / synth.episodes_per_patient as f64;
                if synth.episode_duration_s >= block {
                    return Err(Error::invalid(
                        "episode duration too long for the requested episode count",
                    ));
                }
            }
        }
        Ok(())
    }
}

/// One patient's outcome in subject-dependent mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatientReport {
    pub patient_id: String,
    pub auc: f64,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub confusion: ConfusionCounts,
    pub n_train: usize,
    pub n_test: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedPatient {
    pub patient_id: String,
    pub reason: String,
}

/// Freeze-Index baseline outcome on the test split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineReport {
    pub channel: String,
    pub fi_threshold: f64,
    pub power_threshold: f64,
    pub train_youden_j: f64,
    pub test_youden_j: Option<f64>,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub confusion: ConfusionCounts,
}

/// Everything one experiment reports. Serializes to JSON with a stable field
/// order and no timestamps, so identical config + seed reruns are
/// byte-identical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub experiment: String,
    pub mode: SplitMode,
    /// Independent mode: test-set AUC. Dependent mode: mean per-patient AUC.
    pub auc: f64,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    /// Confusion at threshold 0.5, pooled over all evaluated test windows.
    pub confusion: ConfusionCounts,
    /// ROC over pooled test scores.
    pub roc: Vec<RocPoint>,
    pub train_rows: usize,
    pub test_rows: usize,
    pub baseline: Option<BaselineReport>,
    pub per_patient: Vec<PatientReport>,
    pub skipped_patients: Vec<SkippedPatient>,
    /// Resolved configuration snapshot.
    pub config: ExperimentConfig,
}

/// Result of [`run_experiment`]: the report plus every trained model
/// (one per patient in dependent mode).
pub struct ExperimentOutput {
    pub report: EvalReport,
    pub models: Vec<(String, LstmModel)>,
}

/// Generate the synthetic patient cohort for a config.
pub fn synthetic_recordings(spec: &SynthDataSpec, master_seed: u64) -> Result<Vec<Recording>> {
    use rand::{Rng, SeedableRng};
    let mut recordings = Vec::with_capacity(spec.n_patients);
    for p in 0..spec.n_patients {
        let mut rng =
            rand_chacha::ChaCha8Rng::seed_from_u64(master_seed.wrapping_add(1000 + p as u64));
        let mut episodes = Vec::with_capacity(spec.episodes_per_patient);
        if spec.episodes_per_patient > 0 {
            let block = spec.duration_s / spec.episodes_per_patient as f64;
            for e in 0..spec.episodes_per_patient {
                let slack = block - spec.episode_duration_s;
                let offset = rng.random_range(0.0..slack);
                episodes.push(FreezeEpisode {
                    start_s: e as f64 * block + offset,
                    duration_s: spec.episode_duration_s,
                });
            }
        }
        let synth = SynthSpec {
            patient_id: format!("S{:02}", p + 1),
            duration_s: spec.duration_s,
            episodes,
            noise_mg: spec.noise_mg,
            walk_hz: spec.walk_hz,
            freeze_hz: spec.freeze_hz,
            amplitude_mg: spec.amplitude_mg,
            gravity_mg: spec.gravity_mg,
        };
        recordings.push(generate_synthetic(&synth, master_seed.wrapping_add(p as u64))?);
    }
    Ok(recordings)
}

fn load_recordings(config: &ExperimentConfig) -> Result<Vec<Recording>> {
    match &config.data {
        DataSource::Daphnet { dir } => {
            let dir = match dir {
                Some(d) => d.clone(),
                None => PathBuf::from(std::env::var(DATA_DIR_ENV).map_err(|_| {
                    Error::invalid(format!(
                        "no data directory: set data.dir or the {DATA_DIR_ENV} environment variable"
                    ))
                })?),
            };
            load_daphnet_dir(&dir)
        }
        DataSource::Synthetic { synth } => synthetic_recordings(synth, config.seed),
    }
}

/// Ingest + window + featurize every recording into one stacked matrix.
fn assemble_matrix(
    recordings: &[Recording],
    config: &ExperimentConfig,
    group: FeatureGroup,
    sensors: &[Sensor],
) -> Result<FeatureMatrix> {
    let ctx = SpectralContext::new(64.0, config.window.length_samples)?;
    let mut parts = Vec::new();
    for (rec_idx, recording) in recordings.iter().enumerate() {
        let filtered = filter_annotation_zero(recording);
        if filtered.is_empty() {
            continue;
        }
        let with_mags = compute_magnitudes(&filtered);
        let mut windows = segment(&with_mags, &config.window)?;
        if windows.is_empty() {
            continue;
        }
        // Multiple sessions of one patient must not be windowed as one
        // contiguous signal: offset the segment ids per recording.
        for w in &mut windows {
            w.segment += rec_idx << 16;
        }
        parts.push(build_matrix(&windows, group, sensors, &ctx)?);
    }
    if parts.is_empty() {
        return Err(Error::invalid("no recording produced any windows"));
    }
    FeatureMatrix::vstack(&parts)
}

/// The Freeze-Index baseline runs on the magnitude channel of the config's
/// sensor (trunk when all sensors are selected) and needs the frequency
/// group's columns.
fn baseline_channel(config: &ExperimentConfig) -> Option<String> {
    let sensor = match config.features {
        FeatureSelection::Group {
            group: FeatureGroup::Statistical,
            ..
        } => return None,
        FeatureSelection::Group { sensors, .. } => match sensors {
            SensorChoice::Ankle => Sensor::Ankle,
            SensorChoice::Thigh => Sensor::Thigh,
            SensorChoice::Trunk | SensorChoice::All => Sensor::Trunk,
        },
        FeatureSelection::Rfe { .. } => Sensor::Trunk,
    };
    Some(format!("{}_mag", sensor.name()))
}

fn run_baseline(
    channel: &str,
    train_matrix: &FeatureMatrix,
    test_matrix: &FeatureMatrix,
) -> Result<BaselineReport> {
    let names = train_matrix.column_names();
    let fi_col = names
        .iter()
        .position(|n| n == &format!("{channel}_freeze_index"))
        .ok_or_else(|| Error::invalid(format!("baseline channel {channel} has no FI column")))?;
    let power_col = names
        .iter()
        .position(|n| n == &format!("{channel}_power"))
        .ok_or_else(|| Error::invalid(format!("baseline channel {channel} has no power column")))?;

    let column = |m: &FeatureMatrix, c: usize| -> Vec<f64> { m.values.column(c).to_vec() };
    let calibrated = fi_baseline_calibrate(
        &column(train_matrix, fi_col),
        &column(train_matrix, power_col),
        &train_matrix.labels,
    )?;
    let predictions = fi_baseline_predict(
        &calibrated,
        &column(test_matrix, fi_col),
        &column(test_matrix, power_col),
    );
    let scores: Vec<f64> = predictions.iter().map(|&p| f64::from(u8::from(p))).collect();
    let counts = confusion(&scores, &test_matrix.labels, 0.5)?;
    let (sens, spec) = sens_spec(&counts);
    let test_j = match (sens, spec) {
        (Some(s), Some(p)) => Some(s + p - 1.0),
        _ => None,
    };
    Ok(BaselineReport {
        channel: channel.to_string(),
        fi_threshold: calibrated.fi_threshold,
        power_threshold: calibrated.power_threshold,
        train_youden_j: calibrated.train_youden_j,
        test_youden_j: test_j,
        sensitivity: sens,
        specificity: spec,
        confusion: counts,
    })
}

fn select_columns_like(reference: &FeatureMatrix, target: &FeatureMatrix) -> FeatureMatrix {
    let names = target.column_names();
    let indices: Vec<usize> = reference
        .descriptors
        .iter()
        .map(|d| names.iter().position(|n| *n == d.name).expect("shared catalog"))
        .collect();
    target.select_columns(&indices)
}

/// Execute one experiment end to end.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    let config = config.resolved();
    let recordings = load_recordings(&config)?;
    let (group, sensors) = config.features.base();
    let matrix = assemble_matrix(&recordings, &config, group, &sensors)?;

    match config.split.mode {
        SplitMode::SubjectIndependent => run_independent(&config, &matrix),
        SplitMode::SubjectDependent => run_dependent(&config, &matrix),
    }
}

fn run_independent(config: &ExperimentConfig, matrix: &FeatureMatrix) -> Result<ExperimentOutput> {
    let (train_full, test_full) = split(matrix, &config.split)?;

    let baseline = match baseline_channel(config) {
        Some(channel) => Some(run_baseline(&channel, &train_full, &test_full)?),
        None => None,
    };

    let (mut train_matrix, test_matrix) = match config.features {
        FeatureSelection::Rfe { k } => {
            let (reduced, _ranking) = rfe_select(&train_full, k)?;
            let test_reduced = select_columns_like(&reduced, &test_full);
            (reduced, test_reduced)
        }
        FeatureSelection::Group { .. } => (train_full.clone(), test_full.clone()),
    };

    train_matrix = smote(&train_matrix, &config.smote)?;
    let (model, _log) = train(&train_matrix, &config.hyper)?;
    let scores = predict(&model, &test_matrix)?;

    let (roc, auc) = roc_auc(&scores, &test_matrix.labels)?;
    let counts = confusion(&scores, &test_matrix.labels, 0.5)?;
    let (sens, spec) = sens_spec(&counts);

    let report = EvalReport {
        experiment: config.id.clone(),
        mode: SplitMode::SubjectIndependent,
        auc,
        sensitivity: sens,
        specificity: spec,
        confusion: counts,
        roc,
        train_rows: train_matrix.n_rows(),
        test_rows: test_matrix.n_rows(),
        baseline,
        per_patient: Vec::new(),
        skipped_patients: Vec::new(),
        config: config.clone(),
    };
    Ok(ExperimentOutput {
        report,
        models: vec![("model".to_string(), model)],
    })
}

fn run_dependent(config: &ExperimentConfig, matrix: &FeatureMatrix) -> Result<ExperimentOutput> {
    let mut patients: Vec<String> = matrix.rows.iter().map(|r| r.patient_id.clone()).collect();
    patients.sort();
    patients.dedup();

    let mut per_patient = Vec::new();
    let mut skipped = Vec::new();
    let mut models = Vec::new();
    let mut pooled_scores: Vec<f64> = Vec::new();
    let mut pooled_labels: Vec<bool> = Vec::new();
    let mut pooled_counts = ConfusionCounts::default();
    let mut train_rows_total = 0;
    let mut test_rows_total = 0;
    let mut baseline_reports: Vec<BaselineReport> = Vec::new();

    for patient in &patients {
        let rows: Vec<usize> = (0..matrix.n_rows())
            .filter(|&i| &matrix.rows[i].patient_id == patient)
            .collect();
        let patient_matrix = matrix.select_rows(&rows);
        let (freeze, no_freeze) = patient_matrix.class_counts();
        if freeze == 0 || no_freeze == 0 {
            skipped.push(SkippedPatient {
                patient_id: patient.clone(),
                reason: format!("single-class patient ({freeze} freeze / {no_freeze} no-freeze windows)"),
            });
            continue;
        }

        let outcome = (|| -> Result<(PatientReport, LstmModel, Vec<f64>, Vec<bool>, Option<BaselineReport>)> {
            let (train_full, test_full) = split(&patient_matrix, &config.split)?;
            let baseline = match baseline_channel(config) {
                Some(channel) => Some(run_baseline(&channel, &train_full, &test_full)?),
                None => None,
            };
            let (reduced_train, reduced_test) = match config.features {
                FeatureSelection::Rfe { k } => {
                    let (reduced, _) = rfe_select(&train_full, k)?;
                    let test_reduced = select_columns_like(&reduced, &test_full);
                    (reduced, test_reduced)
                }
                FeatureSelection::Group { .. } => (train_full.clone(), test_full.clone()),
            };
            let balanced = smote(&reduced_train, &config.smote)?;
            let (model, _log) = train(&balanced, &config.hyper)?;
            let scores = predict(&model, &reduced_test)?;
            let (_, auc) = roc_auc(&scores, &reduced_test.labels)?;
            let counts = confusion(&scores, &reduced_test.labels, 0.5)?;
            let (sens, spec) = sens_spec(&counts);
            Ok((
                PatientReport {
                    patient_id: patient.clone(),
                    auc,
                    sensitivity: sens,
                    specificity: spec,
                    confusion: counts,
                    n_train: balanced.n_rows(),
                    n_test: reduced_test.n_rows(),
                },
                model,
                scores,
                reduced_test.labels.clone(),
                baseline,
            ))
        })();

        match outcome {
            Ok((report, model, scores, labels, baseline)) => {
                pooled_counts.add(&report.confusion);
                train_rows_total += report.n_train;
                test_rows_total += report.n_test;
                pooled_scores.extend(scores);
                pooled_labels.extend(labels);
                if let Some(b) = baseline {
                    baseline_reports.push(b);
                }
                models.push((patient.clone(), model));
                per_patient.push(report);
            }
            Err(err) => skipped.push(SkippedPatient {
                patient_id: patient.clone(),
                reason: err.to_string(),
            }),
        }
    }

    if per_patient.is_empty() {
        return Err(Error::invalid(
            "dependent mode evaluated no patient successfully",
        ));
    }

    let mean =
        |it: &mut dyn Iterator<Item = f64>| -> Option<f64> {
            let values: Vec<f64> = it.collect();
            if values.is_empty() {
                None
            } else {
                Some(values.iter().sum::<f64>() / values.len() as f64)
            }
        };
    let auc = mean(&mut per_patient.iter().map(|p| p.auc)).expect("non-empty");
    let sensitivity = mean(&mut per_patient.iter().filter_map(|p| p.sensitivity));
    let specificity = mean(&mut per_patient.iter().filter_map(|p| p.specificity));
    let roc = match roc_auc(&pooled_scores, &pooled_labels) {
        Ok((points, _)) => points,
        Err(_) => Vec::new(),
    };

    let baseline = baseline_summary(&baseline_reports);

    let report = EvalReport {
        experiment: config.id.clone(),
        mode: SplitMode::SubjectDependent,
        auc,
        sensitivity,
        specificity,
        confusion: pooled_counts,
        roc,
        train_rows: train_rows_total,
        test_rows: test_rows_total,
        baseline,
        per_patient,
        skipped_patients: skipped,
        config: config.clone(),
    };
    Ok(ExperimentOutput { report, models })
}

/// Average the per-patient baseline outcomes into one summary row.
fn baseline_summary(reports: &[BaselineReport]) -> Option<BaselineReport> {
    if reports.is_empty() {
        return None;
    }
    let n = reports.len() as f64;
    let mean_opt = |values: Vec<f64>| {
        if values.is_empty() {
            None
        } else {
            Some(values.iter().sum::<f64>() / values.len() as f64)
        }
    };
    let mut confusion = ConfusionCounts::default();
    for r in reports {
        confusion.add(&r.confusion);
    }
    Some(BaselineReport {
        channel: reports[0].channel.clone(),
        fi_threshold: reports.iter().map(|r| r.fi_threshold).sum::<f64>() / n,
        power_threshold: reports.iter().map(|r| r.power_threshold).sum::<f64>() / n,
        train_youden_j: reports.iter().map(|r| r.train_youden_j).sum::<f64>() / n,
        test_youden_j: mean_opt(reports.iter().filter_map(|r| r.test_youden_j).collect()),
        sensitivity: mean_opt(reports.iter().filter_map(|r| r.sensitivity).collect()),
        specificity: mean_opt(reports.iter().filter_map(|r| r.specificity).collect()),
        confusion,
    })
}

/// The 13 experiment configurations of the evaluation grid: every feature
/// group times every sensor choice, plus RFE-25.
pub fn grid_configs(base: &ExperimentConfig) -> Vec<ExperimentConfig> {
    let mut configs = Vec::with_capacity(13);
    for group in [
        FeatureGroup::Statistical,
        FeatureGroup::Frequency,
        FeatureGroup::Both,
    ] {
        for sensors in [
            SensorChoice::Ankle,
            SensorChoice::Thigh,
            SensorChoice::Trunk,
            SensorChoice::All,
        ] {
            let features = FeatureSelection::Group { group, sensors };
            configs.push(ExperimentConfig {
                id: features.label(),
                features,
                ..base.clone()
            });
        }
    }
    let features = FeatureSelection::Rfe { k: default_rfe_k() };
    configs.push(ExperimentConfig {
        id: features.label(),
        features,
        ..base.clone()
    });
    configs
}

/// Canonical JSON serialization of a report (stable key order, trailing
/// newline); reruns with identical config and seed are byte-identical.
pub fn report_to_json(report: &EvalReport) -> Result<String> {
    let mut out = serde_json::to_string_pretty(report)?;
    out.push('\n');
    Ok(out)
}

/// ROC points as `fpr,tpr,threshold` CSV for external plotting.
pub fn write_roc_csv(points: &[RocPoint], mut writer: impl Write) -> Result<()> {
    writeln!(writer, "fpr,tpr,threshold")?;
    for p in points {
        writeln!(writer, "{},{},{}", p.fpr, p.tpr, p.threshold)?;
    }
    Ok(())
}

/// One summary line per report: `experiment,mode,auc,sensitivity,specificity`.
pub fn summary_csv(reports: &[EvalReport]) -> String {
    let fmt_opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x}"));
    let mut out = String::from("experiment,mode,auc,sensitivity,specificity\n");
    for r in reports {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.experiment,
            r.mode.name(),
            r.auc,
            fmt_opt(r.sensitivity),
            fmt_opt(r.specificity),
        ));
    }
    out
}
