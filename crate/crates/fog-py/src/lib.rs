//! Python bindings for the freezing-of-gait detection pipeline.
//!
//! Build with `cargo build -p fog-py --release`; the resulting
//! `libfog_py.so` imports as the `fog_py` module once renamed to
//! `fog_py.so` (or installed via maturin). See `python/smoke_test.py`.

use std::fs;
use std::path::PathBuf;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use fog_core::eval as core_eval;
use fog_core::features as core_features;
use fog_core::harness;
use fog_core::ingest as core_ingest;
use fog_core::model as core_model;
use fog_core::windowing as core_windowing;

fn to_py_err(err: fog_core::Error) -> PyErr {
    PyValueError::new_err(err.to_string())
}

fn parse_group(name: &str) -> PyResult<core_features::FeatureGroup> {
    match name {
        "statistical" => Ok(core_features::FeatureGroup::Statistical),
        "frequency" => Ok(core_features::FeatureGroup::Frequency),
        "both" => Ok(core_features::FeatureGroup::Both),
        other => Err(PyValueError::new_err(format!(
            "unknown feature group {other:?} (expected statistical, frequency or both)"
        ))),
    }
}

fn parse_sensors(name: &str) -> PyResult<Vec<core_ingest::Sensor>> {
    match name {
        "ankle" => Ok(vec![core_ingest::Sensor::Ankle]),
        "thigh" => Ok(vec![core_ingest::Sensor::Thigh]),
        "trunk" => Ok(vec![core_ingest::Sensor::Trunk]),
        "all" => Ok(core_ingest::Sensor::ALL.to_vec()),
        other => Err(PyValueError::new_err(format!(
            "unknown sensor selection {other:?} (expected ankle, thigh, trunk or all)"
        ))),
    }
}

/// One patient recording: samples, annotations and derived magnitudes.
#[pyclass(skip_from_py_object)]
#[derive(Clone)]
struct Recording {
    inner: core_ingest::Recording,
}

#[pymethods]
impl Recording {
    #[getter]
    fn patient_id(&self) -> String {
        self.inner.patient_id.clone()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn n_samples(&self) -> usize {
        self.inner.len()
    }

    fn n_freeze_samples(&self) -> usize {
        self.inner
            .samples
            .iter()
            .filter(|s| s.annotation == core_ingest::Annotation::Freeze)
            .count()
    }

    fn n_segments(&self) -> usize {
        self.inner.segments.len()
    }

    /// Drop out-of-experiment samples and compute magnitude channels.
    fn preprocess(&self) -> Recording {
        let filtered = core_ingest::filter_annotation_zero(&self.inner);
        Recording {
            inner: core_ingest::compute_magnitudes(&filtered),
        }
    }

    fn write_daphnet(&self, path: PathBuf) -> PyResult<()> {
        let mut buf = Vec::new();
        core_ingest::write_daphnet(&self.inner, &mut buf).map_err(to_py_err)?;
        fs::write(path, buf)?;
        Ok(())
    }

    fn write_csv(&self, path: PathBuf) -> PyResult<()> {
        let mut buf = Vec::new();
        core_ingest::write_csv(&self.inner, &mut buf).map_err(to_py_err)?;
        fs::write(path, buf)?;
        Ok(())
    }

    /// Window the recording and evaluate the feature catalog.
    #[pyo3(signature = (group="both", sensors="all", length=256, stride=32, any_freeze=false))]
    fn featurize(
        &self,
        group: &str,
        sensors: &str,
        length: usize,
        stride: usize,
        any_freeze: bool,
    ) -> PyResult<FeatureMatrix> {
        let spec = core_windowing::WindowSpec {
            length_samples: length,
            stride_samples: stride,
            label_rule: if any_freeze {
                core_windowing::LabelRule::AnyFreeze
            } else {
                core_windowing::LabelRule::Majority
            },
        };
        let prepared = if self.inner.has_magnitudes() {
            self.inner.clone()
        } else {
            core_ingest::compute_magnitudes(&core_ingest::filter_annotation_zero(&self.inner))
        };
        let windows = core_windowing::segment(&prepared, &spec).map_err(to_py_err)?;
        let ctx = core_features::SpectralContext::new(64.0, length).map_err(to_py_err)?;
        let matrix = core_features::build_matrix(
            &windows,
            parse_group(group)?,
            &parse_sensors(sensors)?,
            &ctx,
        )
        .map_err(to_py_err)?;
        Ok(FeatureMatrix { inner: matrix })
    }

    fn __repr__(&self) -> String {
        format!(
            "Recording(patient_id={:?}, samples={}, segments={})",
            self.inner.patient_id,
            self.inner.len(),
            self.inner.segments.len()
        )
    }
}

/// Windows-by-features matrix with labels.
#[pyclass(skip_from_py_object)]
#[derive(Clone)]
struct FeatureMatrix {
    inner: core_features::FeatureMatrix,
}

#[pymethods]
impl FeatureMatrix {
    #[getter]
    fn shape(&self) -> (usize, usize) {
        (self.inner.n_rows(), self.inner.n_cols())
    }

    fn column_names(&self) -> Vec<String> {
        self.inner.column_names()
    }

    fn labels(&self) -> Vec<bool> {
        self.inner.labels.clone()
    }

    /// (freeze, no_freeze) row counts.
    fn class_counts(&self) -> (usize, usize) {
        self.inner.class_counts()
    }

    fn values(&self) -> Vec<Vec<f64>> {
        self.inner
            .values
            .rows()
            .into_iter()
            .map(|r| r.to_vec())
            .collect()
    }

    fn row(&self, index: usize) -> PyResult<Vec<f64>> {
        if index >= self.inner.n_rows() {
            return Err(PyValueError::new_err(format!("row {index} out of range")));
        }
        Ok(self.inner.values.row(index).to_vec())
    }

    fn to_csv(&self, path: PathBuf) -> PyResult<()> {
        let mut buf = Vec::new();
        self.inner.to_csv(&mut buf).map_err(to_py_err)?;
        fs::write(path, buf)?;
        Ok(())
    }

    #[staticmethod]
    fn from_csv(path: PathBuf) -> PyResult<FeatureMatrix> {
        let file = fs::File::open(path)?;
        let matrix = core_features::FeatureMatrix::from_csv(std::io::BufReader::new(file))
            .map_err(to_py_err)?;
        Ok(FeatureMatrix { inner: matrix })
    }

    /// SMOTE-oversample the minority class.
    #[pyo3(signature = (k_neighbors=5, target_ratio=1.0, seed=0))]
    fn smote(&self, k_neighbors: usize, target_ratio: f64, seed: u64) -> PyResult<FeatureMatrix> {
        let spec = fog_core::balance::SmoteSpec {
            k_neighbors,
            target_ratio,
            seed,
        };
        Ok(FeatureMatrix {
            inner: fog_core::balance::smote(&self.inner, &spec).map_err(to_py_err)?,
        })
    }

    /// Recursive feature elimination down to k columns; returns the reduced
    /// matrix and the (name, rank) list.
    fn rfe(&self, k: usize) -> PyResult<(FeatureMatrix, Vec<(String, usize)>)> {
        let (reduced, ranking) = core_features::rfe_select(&self.inner, k).map_err(to_py_err)?;
        Ok((
            FeatureMatrix { inner: reduced },
            ranking.into_iter().map(|r| (r.name, r.rank)).collect(),
        ))
    }

    fn __repr__(&self) -> String {
        let (freeze, no_freeze) = self.inner.class_counts();
        format!(
            "FeatureMatrix(rows={}, cols={}, freeze={freeze}, no_freeze={no_freeze})",
            self.inner.n_rows(),
            self.inner.n_cols()
        )
    }
}

/// Trained two-layer LSTM classifier.
#[pyclass]
struct LstmModel {
    inner: core_model::LstmModel,
}

#[pymethods]
impl LstmModel {
    /// Per-row freeze probabilities in (0, 1).
    fn predict(&self, matrix: &FeatureMatrix) -> PyResult<Vec<f64>> {
        core_model::predict(&self.inner, &matrix.inner).map_err(to_py_err)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        let mut buf = Vec::new();
        self.inner.save_checkpoint(&mut buf).map_err(to_py_err)?;
        fs::write(path, buf)?;
        Ok(())
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<LstmModel> {
        let file = fs::File::open(path)?;
        let model = core_model::LstmModel::load_checkpoint(std::io::BufReader::new(file))
            .map_err(to_py_err)?;
        Ok(LstmModel { inner: model })
    }

    fn feature_names(&self) -> Vec<String> {
        self.inner.feature_names.clone()
    }

    fn __repr__(&self) -> String {
        format!(
            "LstmModel(features={}, hidden=({}, {}), seq_len={})",
            self.inner.feature_count(),
            self.inner.hyper.hidden1,
            self.inner.hyper.hidden2,
            self.inner.hyper.seq_len
        )
    }
}

/// Generate a deterministic synthetic recording.
///
/// `episodes` is a list of (start_s, duration_s) freeze spans.
#[pyfunction]
#[pyo3(signature = (duration_s, episodes=Vec::new(), seed=0, noise_mg=50.0, walk_hz=2.0,
                    freeze_hz=6.0, amplitude_mg=400.0, gravity_mg=1000.0, patient_id="synth"))]
#[allow(clippy::too_many_arguments)]
fn synthesize(
    duration_s: f64,
    episodes: Vec<(f64, f64)>,
    seed: u64,
    noise_mg: f64,
    walk_hz: f64,
    freeze_hz: f64,
    amplitude_mg: f64,
    gravity_mg: f64,
    patient_id: &str,
) -> PyResult<Recording> {
    let spec = core_ingest::SynthSpec {
        patient_id: patient_id.to_string(),
        duration_s,
        episodes: episodes
            .into_iter()
            .map(|(start_s, duration_s)| core_ingest::FreezeEpisode { start_s, duration_s })
            .collect(),
        noise_mg,
        walk_hz,
        freeze_hz,
        amplitude_mg,
        gravity_mg,
    };
    Ok(Recording {
        inner: core_ingest::generate_synthetic(&spec, seed).map_err(to_py_err)?,
    })
}

/// Parse a Daphnet-format text file.
#[pyfunction]
#[pyo3(signature = (path, patient_id=None))]
fn parse_daphnet(path: PathBuf, patient_id: Option<String>) -> PyResult<Recording> {
    let patient_id = patient_id.unwrap_or_else(|| {
        path.file_stem()
            .and_then(|s| s.to_str())
            .map(|s| if s.len() >= 3 && s.starts_with('S') { s[..3].to_string() } else { s.to_string() })
            .unwrap_or_else(|| "unknown".to_string())
    });
    let file = fs::File::open(&path)?;
    let recording = core_ingest::parse_daphnet(std::io::BufReader::new(file), &patient_id)
        .map_err(to_py_err)?;
    Ok(Recording { inner: recording })
}

/// Train the two-layer LSTM on a (balanced) feature matrix.
/// Returns the model and the per-epoch loss curve.
#[pyfunction]
#[pyo3(signature = (matrix, seq_len=8, batch_size=64, hidden1=64, hidden2=32,
                    learning_rate=1e-3, epochs=100, patience=10, seed=0))]
#[allow(clippy::too_many_arguments)]
fn train_lstm(
    matrix: &FeatureMatrix,
    seq_len: usize,
    batch_size: usize,
    hidden1: usize,
    hidden2: usize,
    learning_rate: f64,
    epochs: usize,
    patience: usize,
    seed: u64,
) -> PyResult<(LstmModel, Vec<f64>)> {
    let hyper = core_model::Hyper {
        seq_len,
        batch_size,
        hidden1,
        hidden2,
        learning_rate,
        epochs,
        patience,
        seed,
        ..core_model::Hyper::default()
    };
    let (model, log) = core_model::train(&matrix.inner, &hyper).map_err(to_py_err)?;
    Ok((LstmModel { inner: model }, log.epoch_losses))
}

/// ROC curve and trapezoidal AUC. Returns (auc, [(fpr, tpr, threshold)]).
#[pyfunction]
fn roc_auc(scores: Vec<f64>, labels: Vec<bool>) -> PyResult<(f64, Vec<(f64, f64, f64)>)> {
    let (points, auc) = core_eval::roc_auc(&scores, &labels).map_err(to_py_err)?;
    Ok((
        auc,
        points.into_iter().map(|p| (p.fpr, p.tpr, p.threshold)).collect(),
    ))
}

/// Confusion counts at a threshold (score >= threshold predicts freeze).
/// Returns (true_pos, false_pos, true_neg, false_neg).
#[pyfunction]
#[pyo3(signature = (scores, labels, threshold=0.5))]
fn confusion(
    scores: Vec<f64>,
    labels: Vec<bool>,
    threshold: f64,
) -> PyResult<(usize, usize, usize, usize)> {
    let c = core_eval::confusion(&scores, &labels, threshold).map_err(to_py_err)?;
    Ok((c.true_pos, c.false_pos, c.true_neg, c.false_neg))
}

/// Sensitivity and specificity from confusion counts; None when undefined.
#[pyfunction]
fn sens_spec(
    true_pos: usize,
    false_pos: usize,
    true_neg: usize,
    false_neg: usize,
) -> (Option<f64>, Option<f64>) {
    core_eval::sens_spec(&core_eval::ConfusionCounts {
        true_pos,
        false_pos,
        true_neg,
        false_neg,
    })
}

/// Run one experiment from a JSON config string; returns the report JSON.
#[pyfunction]
fn run_experiment_json(config_json: &str) -> PyResult<String> {
    let config: harness::ExperimentConfig =
        serde_json::from_str(config_json).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let output = harness::run_experiment(&config).map_err(to_py_err)?;
    harness::report_to_json(&output.report).map_err(to_py_err)
}

#[pymodule]
fn fog_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<Recording>()?;
    m.add_class::<FeatureMatrix>()?;
    m.add_class::<LstmModel>()?;
    m.add_function(wrap_pyfunction!(synthesize, m)?)?;
    m.add_function(wrap_pyfunction!(parse_daphnet, m)?)?;
    m.add_function(wrap_pyfunction!(train_lstm, m)?)?;
    m.add_function(wrap_pyfunction!(roc_auc, m)?)?;
    m.add_function(wrap_pyfunction!(confusion, m)?)?;
    m.add_function(wrap_pyfunction!(sens_spec, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment_json, m)?)?;
    Ok(())
}
