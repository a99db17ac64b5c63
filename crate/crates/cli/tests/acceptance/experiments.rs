use std::path::{Path, PathBuf};

use spectra_core::graph::{ssbm_generate, SsbmParams};
use spectra_core::models::{ModelConfig, ModelKind};
use spectra_core::spectral::{adjusted_rand_index, magnetic_cluster};
use spectra_core::tasks::{
    load_dataset, run_experiment, DataSource, ExperimentConfig, FeatureKind, TaskKind,
};

use crate::{verdict, Verdict};

const SEEDS: u64 = 10;

/// Environment variable naming a local Bitcoin-Alpha edge list.
pub const BITCOIN_ALPHA_ENV: &str = "SPECTRA_BITCOIN_ALPHA";

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Test accuracy of one 1000-node SSBM run with two known labels per cluster.
fn ssbm_accuracy(kind: ModelKind, flip: f64, seed: u64) -> f64 {
    let data = load_dataset(&DataSource::Ssbm(SsbmParams {
        flip_prob: flip,
        seed,
        ..Default::default()
    }))
    .unwrap();
    let config = ExperimentConfig {
        model: ModelConfig {
            hidden_dim: 16,
            ..ModelConfig::new(kind)
        },
        features: FeatureKind::OneHot,
        known_per_class: Some(2),
        seed,
        n_repeats: Some(1),
        ..Default::default()
    };
    run_experiment(&data, &config)
        .unwrap()
        .mean("accuracy")
        .unwrap()
}

pub fn node_classification() -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    for kind in [ModelKind::Sgcn1, ModelKind::Sgcn2] {
        let clean: Vec<f64> = (0..SEEDS).map(|s| ssbm_accuracy(kind, 0.0, s)).collect();
        let noisy: Vec<f64> = (0..SEEDS).map(|s| ssbm_accuracy(kind, 0.4, s)).collect();
        let (c, n) = (mean(&clean), mean(&noisy));
        ok &= c >= 0.85 && c >= n;
        parts.push(format!(
            "{} {c:.3} at flip 0, {n:.3} at flip 0.4",
            kind.name()
        ));
    }
    verdict(
        ok,
        format!(
            "mean test accuracy over {SEEDS} seeds: {}",
            parts.join("; ")
        ),
    )
}

pub fn clustering() -> Verdict {
    let ari = |flip: f64, seed: u64| {
        let p = SsbmParams {
            nodes_per_cluster: 100,
            p_intra: 0.05,
            p_inter: 0.05,
            flip_prob: flip,
            directed: true,
            seed,
            ..Default::default()
        };
        let (g, labels) = ssbm_generate(&p).unwrap();
        let res = magnetic_cluster(&g, 0.125, 2, seed).unwrap();
        adjusted_rand_index(&res.labels, &labels).unwrap()
    };
    let clean: Vec<f64> = (0..SEEDS).map(|s| ari(0.0, s)).collect();
    let noisy: Vec<f64> = (0..SEEDS).map(|s| ari(0.2, s)).collect();
    let worst = clean.iter().copied().fold(f64::INFINITY, f64::min);
    let (c, n) = (mean(&clean), mean(&noisy));
    verdict(
        worst >= 0.9 && c >= n,
        format!(
            "ARI at flip 0: min {worst:.3}, mean {c:.3}; mean at flip 0.2 {n:.3} ({SEEDS} seeds)"
        ),
    )
}

fn link_sign(path: &Path, kind: ModelKind) -> Result<(f64, f64, f64), String> {
    let data = load_dataset(&DataSource::EdgeList {
        path: path.to_path_buf(),
        directed: true,
        labels: None,
    })
    .map_err(|e| e.to_string())?;
    let config = ExperimentConfig {
        model: ModelConfig::new(kind),
        task: TaskKind::Linksign,
        n_repeats: Some(10),
        ..Default::default()
    };
    let report = run_experiment(&data, &config).map_err(|e| e.to_string())?;
    let m = |k: &str| report.mean(k).ok_or_else(|| format!("no {k} in report"));
    Ok((m("micro_f1")?, m("macro_f1")?, m("auc")?))
}

pub fn bitcoin_alpha() -> Verdict {
    let Some(path) = std::env::var_os(BITCOIN_ALPHA_ENV)
        .map(PathBuf::from)
        .filter(|p| p.is_file())
    else {
        return Verdict::Skip(format!(
            "set {BITCOIN_ALPHA_ENV} to a local Bitcoin-Alpha edge list to run"
        ));
    };
    let sgcn1 = link_sign(&path, ModelKind::Sgcn1);
    let magnet = link_sign(&path, ModelKind::Magnet);
    match (sgcn1, magnet) {
        (Ok((micro, macro_f1, _)), Ok((_, _, auc))) => verdict(
            (micro - 0.9547).abs() <= 0.05 && (macro_f1 - 0.7518).abs() <= 0.07 && (auc - 0.9227).abs() <= 0.05,
            format!("sgcn1 micro-F1 {micro:.4}, macro-F1 {macro_f1:.4}; signed magnet AUC {auc:.4} (10 runs each)"),
        ),
        (a, b) => Verdict::Fail([a.err(), b.err()].into_iter().flatten().collect::<Vec<_>>().join("; ")),
    }
}
