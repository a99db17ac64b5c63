use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::TaskError;
use crate::graph::SsbmParams;
use crate::models::ModelConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Nodeclass,
    Linksign,
    Cluster,
}

impl TaskKind {
    pub fn name(self) -> &'static str {
        match self {
            TaskKind::Nodeclass => "nodeclass",
            TaskKind::Linksign => "linksign",
            TaskKind::Cluster => "cluster",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    /// Truncated SVD of `A_s`, `U_d Σ_d`.
    Svd,
    /// Identity features.
    OneHot,
}

/// Which epoch a run reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportMode {
    /// Test metric at the epoch with the best validation metric.
    #[default]
    BestVal,
    /// Best test metric over all epochs (optimistic).
    BestTest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSource {
    Ssbm(SsbmParams),
    EdgeList {
        path: PathBuf,
        #[serde(default = "default_directed")]
        directed: bool,
        /// CSV of `node,label` rows.
        #[serde(default)]
        labels: Option<PathBuf>,
    },
}

fn default_directed() -> bool {
    true
}

impl Default for DataSource {
    fn default() -> Self {
        DataSource::Ssbm(SsbmParams::default())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub task: TaskKind,
    pub data: DataSource,
    pub features: FeatureKind,
    /// Defaults to 64 for node classification and 30 for link signs.
    pub feature_dim: Option<usize>,
    pub lr: f64,
    pub weight_decay: f64,
    pub epochs: usize,
    pub seed: u64,
    pub known_label_ratio: f64,
    /// Overrides `known_label_ratio` with a fixed count per class.
    pub known_per_class: Option<usize>,
    pub train_edge_ratio: f64,
    /// Share of training links held out for model selection.
    pub val_edge_ratio: f64,
    pub neg_sample_factor: f64,
    /// Defaults to 20 for node classification and 10 for link signs.
    pub n_repeats: Option<usize>,
    pub report: ReportMode,
    /// Keep test links in the propagation graph (off: strict protocol).
    pub keep_test_edges: bool,
    /// Hidden width of the edge classifier; defaults to the model's hidden width.
    pub mlp_hidden: Option<usize>,
    pub drop_isolated: bool,
    /// Cluster count for the clustering task; defaults to the number of label classes.
    pub n_clusters: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            model: ModelConfig::default(),
            task: TaskKind::Nodeclass,
            data: DataSource::default(),
            features: FeatureKind::Svd,
            feature_dim: None,
            lr: 0.01,
            weight_decay: 5e-4,
            epochs: 300,
            seed: 0,
            known_label_ratio: 0.05,
            known_per_class: None,
            train_edge_ratio: 0.8,
            val_edge_ratio: 0.05,
            neg_sample_factor: 2.0,
            n_repeats: None,
            report: ReportMode::BestVal,
            keep_test_edges: false,
            mlp_hidden: None,
            drop_isolated: false,
            n_clusters: None,
        }
    }
}

pub const LR_RANGE: (f64, f64) = (1e-3, 1e-1);
pub const WEIGHT_DECAY_RANGE: (f64, f64) = (1e-6, 1e-3);

impl ExperimentConfig {
    pub fn feature_dim(&self) -> usize {
        self.feature_dim.unwrap_or(match self.task {
            TaskKind::Linksign => 30,
            _ => 64,
        })
    }

    pub fn n_repeats(&self) -> usize {
        self.n_repeats.unwrap_or(match self.task {
            TaskKind::Linksign => 10,
            _ => 20,
        })
    }

    pub fn mlp_hidden(&self) -> usize {
        self.mlp_hidden.unwrap_or(self.model.hidden_dim)
    }

    /// Hard errors: values no experiment can run with.
    pub fn validate(&self) -> Result<(), TaskError> {
        self.model
            .validate()
            .map_err(|e| TaskError::Config(e.to_string()))?;
        let open_unit = |name: &str, v: f64| {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(TaskError::Config(format!(
                    "{name} = {v} must lie in (0, 1)"
                )))
            }
        };
        open_unit("known_label_ratio", self.known_label_ratio)?;
        open_unit("train_edge_ratio", self.train_edge_ratio)?;
        if !(0.0..1.0).contains(&self.val_edge_ratio) {
            return Err(TaskError::Config(format!(
                "val_edge_ratio = {} must lie in [0, 1)",
                self.val_edge_ratio
            )));
        }
        if !(self.neg_sample_factor >= 0.0 && self.neg_sample_factor.is_finite()) {
            return Err(TaskError::Config(format!(
                "neg_sample_factor = {} must be non-negative",
                self.neg_sample_factor
            )));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(TaskError::Config(format!(
                "lr = {} must be positive",
                self.lr
            )));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(TaskError::Config(format!(
                "weight_decay = {} must be non-negative",
                self.weight_decay
            )));
        }
        if self.feature_dim() == 0 || self.mlp_hidden() == 0 {
            return Err(TaskError::Config(
                "feature_dim and mlp_hidden must be at least 1".into(),
            ));
        }
        if self.n_repeats() == 0 {
            return Err(TaskError::Config("n_repeats must be at least 1".into()));
        }
        if self.known_per_class == Some(0) {
            return Err(TaskError::Config(
                "known_per_class must be at least 1".into(),
            ));
        }
        if let DataSource::Ssbm(p) = &self.data {
            p.validate()?;
        }
        Ok(())
    }

    /// Values that run but fall outside the documented tuning ranges.
    pub fn range_warnings(&self) -> Vec<String> {
        [
            ("lr", self.lr, LR_RANGE),
            ("weight_decay", self.weight_decay, WEIGHT_DECAY_RANGE),
        ]
        .into_iter()
        .filter(|&(_, v, (lo, hi))| v < lo || v > hi)
        .map(|(name, v, (lo, hi))| {
            format!("{name} = {v:e} is outside the tuned range [{lo:e}, {hi:e}]")
        })
        .collect()
    }

    /// Parses a JSON config and applies `key=value` overrides (dotted keys
    /// address nested fields; values are read as JSON, falling back to strings).
    pub fn from_json_with_overrides(text: &str, overrides: &[String]) -> Result<Self, TaskError> {
        let mut value: Value =
            serde_json::from_str(text).map_err(|e| TaskError::Parse(e.to_string()))?;
        for o in overrides {
            apply_override(&mut value, o)?;
        }
        let config: ExperimentConfig =
            serde_json::from_value(value).map_err(|e| TaskError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }
}

pub fn apply_override(root: &mut Value, assignment: &str) -> Result<(), TaskError> {
    let (key, raw) = assignment.split_once('=').ok_or_else(|| {
        TaskError::Config(format!(
            "override `{assignment}` is not of the form key=value"
        ))
    })?;
    let parsed: Value =
        serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    let parts: Vec<&str> = key.trim().split('.').collect();
    for (k, part) in parts.iter().enumerate() {
        if part.is_empty() {
            return Err(TaskError::Config(format!(
                "override key `{key}` has an empty segment"
            )));
        }
        let map = match node {
            Value::Object(m) => m,
            Value::Null => {
                *node = Value::Object(Default::default());
                node.as_object_mut().expect("just created")
            }
            _ => {
                return Err(TaskError::Config(format!(
                    "override key `{key}` descends into a non-object"
                )))
            }
        };
        if k + 1 == parts.len() {
            map.insert(part.to_string(), parsed);
            return Ok(());
        }
        node = map.entry(part.to_string()).or_insert(Value::Null);
    }
    unreachable!("split yields at least one segment")
}
