use std::collections::BTreeMap;

use log::warn;
use rayon::prelude::*;
use serde::Serialize;

use super::{
    train_link_sign, train_node_classification, Dataset, ExperimentConfig, ExperimentReport,
    MeanStd, RunResult, TaskError, TaskKind,
};
use crate::rng::derive_seed;
use crate::spectral::{adjusted_rand_index, magnetic_cluster};

pub const DEFAULT_LR_GRID: [f64; 3] = [1e-3, 1e-2, 1e-1];
pub const DEFAULT_WD_GRID: [f64; 4] = [1e-6, 1e-5, 1e-4, 1e-3];

/// Worker count for repeat-level parallelism: `SPECTRA_THREADS` when set to a
/// positive integer, otherwise the number of logical cores.
pub fn worker_threads() -> usize {
    match std::env::var("SPECTRA_THREADS")
        .ok()
        .map(|v| v.trim().parse::<usize>())
    {
        Some(Ok(n)) if n > 0 => n,
        Some(_) => {
            warn!("ignoring invalid SPECTRA_THREADS value");
            default_threads()
        }
        None => default_threads(),
    }
}

fn default_threads() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Runs `f(0..n)` on a bounded pool; results come back in repeat order.
pub(crate) fn run_repeats<F>(n: usize, f: F) -> Result<Vec<RunResult>, TaskError>
where
    F: Fn(usize) -> Result<RunResult, TaskError> + Sync + Send,
{
    let threads = worker_threads().min(n.max(1));
    if threads == 1 {
        return (0..n).map(f).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| TaskError::Pool(e.to_string()))?;
    pool.install(|| (0..n).into_par_iter().map(&f).collect())
}

/// Dispatches on the configured task.
pub fn run_experiment(
    data: &Dataset,
    config: &ExperimentConfig,
) -> Result<ExperimentReport, TaskError> {
    let data = if config.drop_isolated {
        data.drop_isolated()
    } else {
        data.clone()
    };
    match config.task {
        TaskKind::Nodeclass => train_node_classification(&data, config),
        TaskKind::Linksign => train_link_sign(&data, config),
        TaskKind::Cluster => run_cluster(&data, config),
    }
}

/// Spectral clustering with the first eigenvector of the signed magnetic
/// Laplacian; each repeat reseeds k-means. ARI is reported when labels exist.
pub fn run_cluster(
    data: &Dataset,
    config: &ExperimentConfig,
) -> Result<ExperimentReport, TaskError> {
    config.validate()?;
    let k = config
        .n_clusters
        .or(data.n_classes())
        .ok_or_else(|| TaskError::Config("clustering needs n_clusters or node labels".into()))?;
    let runs = run_repeats(config.n_repeats(), |repeat| {
        let seed = derive_seed(config.seed, repeat as u64);
        let result = magnetic_cluster(&data.graph, config.model.q, k, seed)?;
        let mut metrics = BTreeMap::new();
        if let Some(labels) = &data.labels {
            metrics.insert(
                "ari".to_string(),
                adjusted_rand_index(&result.labels, labels)?,
            );
        }
        Ok(RunResult {
            repeat,
            seed,
            selected_epoch: 0,
            val_metric: f64::NAN,
            metrics,
            curve: Vec::new(),
            params: Default::default(),
        })
    })?;
    Ok(ExperimentReport::new(
        TaskKind::Cluster,
        config.model.model,
        0,
        k,
        runs,
    ))
}

#[derive(Debug, Clone, Serialize)]
pub struct GridPoint {
    pub lr: f64,
    pub weight_decay: f64,
    /// Validation metric at each run's selected epoch, over repeats.
    pub validation: MeanStd,
    pub summary: BTreeMap<String, MeanStd>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GridResult {
    pub best_lr: f64,
    pub best_weight_decay: f64,
    pub points: Vec<GridPoint>,
}

/// Exhaustive search over `lrs × wds`. The winner has the highest mean
/// validation metric (accuracy for node classification, macro-F1 for link
/// signs); ties go to the smaller learning rate, then the smaller weight decay.
pub fn hyperparameter_grid(
    data: &Dataset,
    config: &ExperimentConfig,
    lrs: &[f64],
    wds: &[f64],
) -> Result<GridResult, TaskError> {
    if lrs.is_empty() || wds.is_empty() {
        return Err(TaskError::Config("the hyperparameter grid is empty".into()));
    }
    if config.task == TaskKind::Cluster {
        return Err(TaskError::Config(
            "the clustering task has no trainable hyperparameters".into(),
        ));
    }
    let mut grid: Vec<(f64, f64)> = lrs
        .iter()
        .flat_map(|&lr| wds.iter().map(move |&wd| (lr, wd)))
        .collect();
    grid.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut points = Vec::with_capacity(grid.len());
    let mut best: Option<(f64, f64, f64)> = None;
    for (lr, wd) in grid {
        let cfg = ExperimentConfig {
            lr,
            weight_decay: wd,
            ..config.clone()
        };
        let report = run_experiment(data, &cfg)?;
        let vals: Vec<f64> = report
            .runs
            .iter()
            .map(|r| r.val_metric)
            .filter(|v| v.is_finite())
            .collect();
        let validation = MeanStd::of(&vals);
        let score = if validation.mean.is_finite() {
            validation.mean
        } else {
            f64::NEG_INFINITY
        };
        if best.is_none_or(|(_, _, b)| score > b) {
            best = Some((lr, wd, score));
        }
        points.push(GridPoint {
            lr,
            weight_decay: wd,
            validation,
            summary: report.summary,
        });
    }
    let (best_lr, best_weight_decay, _) = best.expect("grid is non-empty");
    Ok(GridResult {
        best_lr,
        best_weight_decay,
        points,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepPoint {
    pub feature_dim: usize,
    pub summary: BTreeMap<String, MeanStd>,
}

/// Repeats the experiment at each feature dimension.
pub fn feature_sweep(
    data: &Dataset,
    config: &ExperimentConfig,
    dims: &[usize],
) -> Result<Vec<SweepPoint>, TaskError> {
    dims.iter()
        .map(|&d| {
            let cfg = ExperimentConfig {
                feature_dim: Some(d),
                ..config.clone()
            };
            let report = run_experiment(data, &cfg)?;
            Ok(SweepPoint {
                feature_dim: d,
                summary: report.summary,
            })
        })
        .collect()
}
