//! Experiment harnesses: data loading, splits, training loops and metrics.

mod config;
mod linksign;
mod metrics;
mod nodeclass;
mod runner;
mod split;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::sync::Arc;

use log::info;
use ndarray::Array2;
use serde::Serialize;
use thiserror::Error;

use crate::autodiff::{AutodiffError, Parameters, Tape};
use crate::graph::{load_edge_list, ssbm_generate, GraphError, SignedDiGraph};
use crate::linalg::{truncated_svd_with, CsrMatrix, LinalgError, SvdOptions};
use crate::models::{Input, ModelError, ModelKind};
use crate::spectral::SpectralError;

pub use config::{
    apply_override, DataSource, ExperimentConfig, FeatureKind, ReportMode, TaskKind, LR_RANGE,
    WEIGHT_DECAY_RANGE,
};
pub use linksign::{propagation_graph, train_link_sign, train_link_sign_run};
pub use metrics::{accuracy, compute_metrics, roc_auc, sign_score, LinkMetrics, MeanStd};
pub use nodeclass::{train_node_classification, train_node_classification_run};
pub use runner::{
    feature_sweep, hyperparameter_grid, run_cluster, run_experiment, worker_threads, GridPoint,
    GridResult, SweepPoint, DEFAULT_LR_GRID, DEFAULT_WD_GRID,
};
pub use split::{
    carve_validation, split_edges, split_nodes, EdgeSplit, KnownLabels, LinkLabel, LinkTriplet,
    NodeSplit,
};

#[derive(Debug, Error)]
pub enum TaskError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("split: {0}")]
    Split(String),
    #[error("metrics: {0}")]
    Metrics(String),
    #[error("labels: {0}")]
    Labels(String),
    #[error("training diverged: non-finite loss at epoch {epoch} of repeat {repeat}")]
    Divergence { repeat: usize, epoch: usize },
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("thread pool: {0}")]
    Pool(String),
}

impl From<AutodiffError> for TaskError {
    fn from(e: AutodiffError) -> Self {
        TaskError::Model(ModelError::Autodiff(e))
    }
}

/// A graph with optional node labels (class indices `0..k`).
#[derive(Debug, Clone)]
pub struct Dataset {
    pub graph: SignedDiGraph,
    pub labels: Option<Vec<usize>>,
}

impl Dataset {
    pub fn n_classes(&self) -> Option<usize> {
        self.labels
            .as_ref()
            .map(|l| l.iter().max().map_or(0, |m| m + 1))
    }

    /// Removes nodes without incident edges, remapping labels.
    pub fn drop_isolated(&self) -> Dataset {
        let (graph, kept) = self.graph.drop_isolated();
        let labels = self
            .labels
            .as_ref()
            .map(|l| kept.iter().map(|&i| l[i]).collect());
        Dataset { graph, labels }
    }
}

pub fn load_dataset(source: &DataSource) -> Result<Dataset, TaskError> {
    match source {
        DataSource::Ssbm(p) => {
            let (graph, labels) = ssbm_generate(p)?;
            Ok(Dataset {
                graph,
                labels: Some(labels),
            })
        }
        DataSource::EdgeList {
            path,
            directed,
            labels,
        } => {
            let file = File::open(path).map_err(|source| TaskError::Io {
                path: path.display().to_string(),
                source,
            })?;
            let loaded = load_edge_list(BufReader::new(file), *directed)?;
            let graph = loaded.graph;
            info!(
                "loaded {} nodes and {} edges from {}",
                graph.n_nodes(),
                graph.n_edges(),
                path.display()
            );
            let labels = match labels {
                Some(p) => Some(load_labels(p, &graph)?),
                None => None,
            };
            Ok(Dataset { graph, labels })
        }
    }
}

/// Reads `node,label` rows. Labels are mapped to class indices in sorted
/// order (numerically when every label is an integer). Every node needs a label.
pub fn load_labels(path: &Path, graph: &SignedDiGraph) -> Result<Vec<usize>, TaskError> {
    let file = File::open(path).map_err(|source| TaskError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let index = graph.node_index();
    let mut raw: Vec<Option<String>> = vec![None; graph.n_nodes()];
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| TaskError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|f| !f.is_empty());
        let (Some(node), Some(label)) = (fields.next(), fields.next()) else {
            return Err(TaskError::Labels(format!(
                "line {}: expected `node,label`",
                lineno + 1
            )));
        };
        if lineno == 0 && node == "node" {
            continue;
        }
        match index.get(node) {
            Some(&i) => raw[i] = Some(label.to_string()),
            None => log::warn!("label for unknown node {node} ignored"),
        }
    }
    if let Some(i) = raw.iter().position(Option::is_none) {
        return Err(TaskError::Labels(format!(
            "node {} has no label",
            graph.node_id(i)
        )));
    }
    let raw: Vec<String> = raw.into_iter().map(|l| l.expect("checked")).collect();
    let mut distinct: Vec<String> = raw.clone();
    distinct.sort();
    distinct.dedup();
    if distinct.iter().all(|l| l.parse::<i64>().is_ok()) {
        distinct.sort_by_key(|l| l.parse::<i64>().expect("checked"));
    }
    Ok(raw
        .iter()
        .map(|l| distinct.iter().position(|d| d == l).expect("present"))
        .collect())
}

/// Node input features for `g`.
pub fn node_features(
    g: &SignedDiGraph,
    kind: FeatureKind,
    dim: usize,
    seed: u64,
) -> Result<Features, TaskError> {
    match kind {
        FeatureKind::OneHot => Ok(Features::Sparse(Arc::new(CsrMatrix::identity(g.n_nodes())))),
        FeatureKind::Svd => {
            let n = g.n_nodes();
            if dim > n {
                return Err(TaskError::Config(format!(
                    "feature_dim {dim} exceeds the node count {n}"
                )));
            }
            Ok(Features::Dense(
                truncated_svd_with(&g.symmetrize(), dim, seed, &SvdOptions::features())?.features,
            ))
        }
    }
}

/// Node feature matrix; one-hot features stay sparse.
#[derive(Debug, Clone)]
pub enum Features {
    Dense(Array2<f64>),
    Sparse(Arc<CsrMatrix>),
}

impl Features {
    pub fn ncols(&self) -> usize {
        match self {
            Features::Dense(m) => m.ncols(),
            Features::Sparse(m) => m.n_cols(),
        }
    }

    pub fn nrows(&self) -> usize {
        match self {
            Features::Dense(m) => m.nrows(),
            Features::Sparse(m) => m.n_rows(),
        }
    }

    pub fn to_dense(&self) -> Array2<f64> {
        match self {
            Features::Dense(m) => m.clone(),
            Features::Sparse(m) => m.to_dense(),
        }
    }

    /// Registers the features on `tape` as a model input.
    pub fn input(&self, tape: &mut Tape) -> Input {
        match self {
            Features::Dense(m) => Input::Dense(tape.constant(m.clone())),
            Features::Sparse(m) => Input::Sparse(Arc::clone(m)),
        }
    }
}

/// One row of the per-epoch log.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Training loss in evaluation mode (no dropout).
    pub loss: f64,
    #[serde(flatten)]
    pub metrics: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunResult {
    pub repeat: usize,
    pub seed: u64,
    pub selected_epoch: usize,
    /// Validation metric at the selected epoch.
    pub val_metric: f64,
    /// Test metrics at the selected epoch.
    pub metrics: BTreeMap<String, f64>,
    #[serde(skip)]
    pub curve: Vec<EpochRecord>,
    /// Weights at the selected epoch.
    #[serde(skip)]
    pub params: Parameters,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub task: TaskKind,
    pub model: ModelKind,
    pub n_repeats: usize,
    pub in_dim: usize,
    pub out_dim: usize,
    pub summary: BTreeMap<String, MeanStd>,
    pub runs: Vec<RunResult>,
}

impl ExperimentReport {
    pub(crate) fn new(
        task: TaskKind,
        model: ModelKind,
        in_dim: usize,
        out_dim: usize,
        runs: Vec<RunResult>,
    ) -> Self {
        let mut keys: Vec<&String> = runs.iter().flat_map(|r| r.metrics.keys()).collect();
        keys.sort();
        keys.dedup();
        let summary = keys
            .into_iter()
            .map(|k| {
                let values: Vec<f64> = runs
                    .iter()
                    .filter_map(|r| r.metrics.get(k))
                    .copied()
                    .filter(|v| v.is_finite())
                    .collect();
                (k.clone(), MeanStd::of(&values))
            })
            .collect();
        Self {
            task,
            model,
            n_repeats: runs.len(),
            in_dim,
            out_dim,
            summary,
            runs,
        }
    }

    pub fn mean(&self, metric: &str) -> Option<f64> {
        self.summary.get(metric).map(|m| m.mean)
    }
}

/// Tracks the reported epoch: the first maximum of the validation metric
/// (or of the test metric in best-test mode). When the metric is undefined
/// throughout, the last epoch is reported.
pub(crate) struct BestEpoch {
    key: &'static str,
    best: Option<(usize, f64, Parameters)>,
}

impl BestEpoch {
    pub(crate) fn new(mode: ReportMode, val_key: &'static str, test_key: &'static str) -> Self {
        let key = match mode {
            ReportMode::BestVal => val_key,
            ReportMode::BestTest => test_key,
        };
        Self { key, best: None }
    }

    pub(crate) fn offer(&mut self, rec: &EpochRecord, params: &Parameters) {
        let v = rec.metrics.get(self.key).copied().unwrap_or(f64::NAN);
        if v.is_finite() && self.best.as_ref().is_none_or(|(_, b, _)| v > *b) {
            self.best = Some((rec.epoch, v, params.clone()));
        }
    }

    pub(crate) fn finish(self, curve: &[EpochRecord], last: Parameters) -> (usize, Parameters) {
        match self.best {
            Some((epoch, _, params)) => (epoch, params),
            None => (curve.len().saturating_sub(1), last),
        }
    }
}
