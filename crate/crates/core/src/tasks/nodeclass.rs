use std::collections::BTreeMap;
use std::sync::Arc;

use ndarray::{Array2, Axis};

use super::runner::run_repeats;
use super::{
    accuracy, node_features, split_nodes, BestEpoch, Dataset, EpochRecord, ExperimentConfig,
    ExperimentReport, Features, KnownLabels, RunResult, TaskError, TaskKind,
};
use crate::autodiff::{Adam, AdamConfig, Parameters, Tape, Var};
use crate::models::{ForwardOptions, GraphContext, IsolatedPolicy, Model};
use crate::rng::derive_seed;

pub(crate) const FEATURE_STREAM: u64 = 0xfea7;

/// Semi-supervised node classification repeated `n_repeats` times.
pub fn train_node_classification(
    data: &Dataset,
    config: &ExperimentConfig,
) -> Result<ExperimentReport, TaskError> {
    config.validate()?;
    let features = node_features(
        &data.graph,
        config.features,
        config.feature_dim(),
        derive_seed(config.seed, FEATURE_STREAM),
    )?;
    let out_dim = output_dim(data)?;
    let runs = run_repeats(config.n_repeats(), |r| {
        train_node_classification_run(data, &features, config, r)
    })?;
    Ok(ExperimentReport::new(
        TaskKind::Nodeclass,
        config.model.model,
        features.ncols(),
        out_dim,
        runs,
    ))
}

fn output_dim(data: &Dataset) -> Result<usize, TaskError> {
    match data.n_classes() {
        None => Err(TaskError::Labels(
            "node classification needs node labels".into(),
        )),
        Some(k) if k < 2 => Err(TaskError::Labels(format!(
            "node classification needs at least 2 classes, found {k}"
        ))),
        Some(2) => Ok(1),
        Some(k) => Ok(k),
    }
}

struct Problem<'a> {
    model: Model,
    ctx: GraphContext,
    x: &'a Features,
    train: Arc<Vec<usize>>,
    targets: Array2<f64>,
}

impl Problem<'_> {
    /// Forward pass plus the loss on the training nodes.
    fn loss(
        &self,
        tape: &mut Tape,
        params: &Parameters,
        opts: ForwardOptions,
    ) -> Result<(Var, Var, crate::autodiff::Bound), TaskError> {
        let bound = tape.bind(params);
        let x = self.x.input(tape);
        let out = self.model.forward(tape, &self.ctx, x, &bound, &opts)?;
        let picked = tape.gather_rows(out, &self.train)?;
        let loss = if self.model.out_dim == 1 {
            tape.bce_with_logits(picked, &self.targets)?
        } else {
            tape.softmax_cross_entropy(picked, &self.targets)?
        };
        Ok((loss, out, bound))
    }
}

/// One repeat. Two classes use a single logit with binary cross-entropy;
/// more classes use softmax cross-entropy.
pub fn train_node_classification_run(
    data: &Dataset,
    features: &Features,
    config: &ExperimentConfig,
    repeat: usize,
) -> Result<RunResult, TaskError> {
    let labels = data
        .labels
        .as_ref()
        .ok_or_else(|| TaskError::Labels("node classification needs node labels".into()))?;
    let out_dim = output_dim(data)?;
    let seed = derive_seed(config.seed, repeat as u64);
    let known = match config.known_per_class {
        Some(k) => KnownLabels::PerClass(k),
        None => KnownLabels::Ratio(config.known_label_ratio),
    };
    let split = split_nodes(labels, known, derive_seed(seed, 1))?;
    let model = Model::new(config.model.clone(), features.ncols(), out_dim)?;
    let ctx = model.prepare(&data.graph, IsolatedPolicy::Error)?;
    let mut params = model.init_params(derive_seed(seed, 2));
    let mut adam = Adam::new(AdamConfig::new(config.lr, config.weight_decay));
    let dropout_base = derive_seed(seed, 3);
    let problem = Problem {
        model,
        ctx,
        x: features,
        train: Arc::new(split.train.clone()),
        targets: targets(labels, &split.train, out_dim),
    };

    let evaluate = |params: &Parameters, epoch: usize| -> Result<EpochRecord, TaskError> {
        let mut tape = Tape::new();
        let (loss, out, _) = problem.loss(&mut tape, params, ForwardOptions::eval())?;
        let loss = tape.value(loss)[[0, 0]];
        if !loss.is_finite() {
            return Err(TaskError::Divergence { repeat, epoch });
        }
        let pred = predictions(tape.value(out));
        let acc = |idx: &[usize]| {
            let p: Vec<usize> = idx.iter().map(|&i| pred[i]).collect();
            let t: Vec<usize> = idx.iter().map(|&i| labels[i]).collect();
            accuracy(&p, &t)
        };
        let metrics = BTreeMap::from([
            ("val_acc".to_string(), acc(&split.val)),
            ("test_acc".to_string(), acc(&split.test)),
        ]);
        Ok(EpochRecord {
            epoch,
            loss,
            metrics,
        })
    };

    let mut best = BestEpoch::new(config.report, "val_acc", "test_acc");
    let mut curve = Vec::with_capacity(config.epochs + 1);
    let first = evaluate(&params, 0)?;
    best.offer(&first, &params);
    curve.push(first);
    for epoch in 1..=config.epochs {
        let mut tape = Tape::new();
        let opts = ForwardOptions::train(derive_seed(dropout_base, epoch as u64));
        let (loss, _, bound) = problem.loss(&mut tape, &params, opts)?;
        if !tape.value(loss)[[0, 0]].is_finite() {
            return Err(TaskError::Divergence { repeat, epoch });
        }
        tape.backward(loss)?;
        adam.step(&mut params, &tape.gradients(&bound))?;
        let rec = evaluate(&params, epoch)?;
        best.offer(&rec, &params);
        curve.push(rec);
    }
    let (selected_epoch, params) = best.finish(&curve, params);
    let rec = &curve[selected_epoch];
    Ok(RunResult {
        repeat,
        seed,
        selected_epoch,
        val_metric: rec.metrics["val_acc"],
        metrics: BTreeMap::from([("accuracy".to_string(), rec.metrics["test_acc"])]),
        curve,
        params,
    })
}

fn targets(labels: &[usize], rows: &[usize], out_dim: usize) -> Array2<f64> {
    if out_dim == 1 {
        Array2::from_shape_fn((rows.len(), 1), |(k, _)| labels[rows[k]] as f64)
    } else {
        Array2::from_shape_fn((rows.len(), out_dim), |(k, c)| {
            if labels[rows[k]] == c {
                1.0
            } else {
                0.0
            }
        })
    }
}

/// Class per row: `logit > 0` for a single column, otherwise the first argmax.
fn predictions(out: &Array2<f64>) -> Vec<usize> {
    if out.ncols() == 1 {
        return out
            .column(0)
            .iter()
            .map(|&z| usize::from(z > 0.0))
            .collect();
    }
    out.axis_iter(Axis(0))
        .map(|row| {
            let mut best = 0;
            for (c, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = c;
                }
            }
            best
        })
        .collect()
}
