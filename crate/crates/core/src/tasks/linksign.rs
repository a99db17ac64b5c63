use std::collections::{BTreeMap, HashSet};
use std::sync::Arc;

use ndarray::Array2;

use super::runner::run_repeats;
use super::{
    carve_validation, compute_metrics, node_features, sign_score, split_edges, BestEpoch, Dataset,
    EpochRecord, ExperimentConfig, ExperimentReport, Features, LinkLabel, LinkMetrics, LinkTriplet,
    RunResult, TaskError, TaskKind,
};
use crate::autodiff::{Adam, AdamConfig, Bound, Parameters, Tape, Var};
use crate::graph::{Edge, Sign, SignedDiGraph};
use crate::models::{
    edge_mlp, init_edge_mlp, ForwardOptions, GraphContext, IsolatedPolicy, Model, EDGE_CLASSES,
};
use crate::rng::derive_seed;

/// Link-sign prediction repeated `n_repeats` times.
pub fn train_link_sign(
    data: &Dataset,
    config: &ExperimentConfig,
) -> Result<ExperimentReport, TaskError> {
    config.validate()?;
    let runs = run_repeats(config.n_repeats(), |r| {
        train_link_sign_run(&data.graph, config, r)
    })?;
    let in_dim = match config.features {
        super::FeatureKind::OneHot => data.graph.n_nodes(),
        super::FeatureKind::Svd => config.feature_dim(),
    };
    Ok(ExperimentReport::new(
        TaskKind::Linksign,
        config.model.model,
        in_dim,
        config.model.hidden_dim,
        runs,
    ))
}

/// The graph the encoder propagates over: all nodes, training links only.
pub fn propagation_graph(
    g: &SignedDiGraph,
    links: &[LinkTriplet],
) -> Result<SignedDiGraph, TaskError> {
    let edges = links
        .iter()
        .filter_map(|t| match t.label {
            LinkLabel::Positive => Some(Edge::new(t.u, t.v, Sign::Positive)),
            LinkLabel::Negative => Some(Edge::new(t.u, t.v, Sign::Negative)),
            LinkLabel::NoLink => None,
        })
        .collect();
    Ok(g.with_edges(edges)?)
}

struct Pairs {
    u: Arc<Vec<usize>>,
    v: Arc<Vec<usize>>,
    labels: Vec<LinkLabel>,
}

impl Pairs {
    fn new(t: &[LinkTriplet]) -> Self {
        Self {
            u: Arc::new(t.iter().map(|t| t.u).collect()),
            v: Arc::new(t.iter().map(|t| t.v).collect()),
            labels: t.iter().map(|t| t.label).collect(),
        }
    }

    fn one_hot(&self) -> Array2<f64> {
        Array2::from_shape_fn((self.labels.len(), EDGE_CLASSES), |(k, c)| {
            if self.labels[k].index() == c {
                1.0
            } else {
                0.0
            }
        })
    }
}

struct Encoder<'a> {
    model: Model,
    ctx: GraphContext,
    x: &'a Features,
}

impl Encoder<'_> {
    fn embed(
        &self,
        tape: &mut Tape,
        bound: &Bound,
        opts: ForwardOptions,
    ) -> Result<Var, TaskError> {
        let x = self.x.input(tape);
        Ok(self.model.forward(tape, &self.ctx, x, bound, &opts)?)
    }
}

fn evaluate_pairs(logits: &Array2<f64>) -> (Vec<LinkLabel>, Vec<f64>) {
    let mut pred = Vec::with_capacity(logits.nrows());
    let mut scores = Vec::with_capacity(logits.nrows());
    for row in logits.rows() {
        let r = row.to_vec();
        let mut best = 0;
        for c in 1..EDGE_CLASSES {
            if r[c] > r[best] {
                best = c;
            }
        }
        pred.push(LinkLabel::from_index(best));
        scores.push(sign_score(&r));
    }
    (pred, scores)
}

fn pair_metrics(
    tape: &mut Tape,
    h: Var,
    pairs: &Pairs,
    bound: &Bound,
) -> Result<Option<LinkMetrics>, TaskError> {
    if pairs.labels.is_empty() {
        return Ok(None);
    }
    let logits = edge_mlp(tape, h, &pairs.u, &pairs.v, bound)?;
    let (pred, scores) = evaluate_pairs(tape.value(logits));
    Ok(Some(compute_metrics(&pred, &pairs.labels, &scores)?))
}

/// One repeat of the strict protocol: test links never enter the propagation
/// graph (unless `keep_test_edges`), validation links are carved from the
/// training links, and no-link pairs appear in training only.
pub fn train_link_sign_run(
    g: &SignedDiGraph,
    config: &ExperimentConfig,
    repeat: usize,
) -> Result<RunResult, TaskError> {
    let seed = derive_seed(config.seed, repeat as u64);
    let split = split_edges(
        g,
        config.train_edge_ratio,
        config.neg_sample_factor,
        derive_seed(seed, 1),
    )?;
    let (train, val) = carve_validation(&split.train, config.val_edge_ratio, derive_seed(seed, 6));
    let prop = if config.keep_test_edges {
        g.clone()
    } else {
        propagation_graph(g, &train)?
    };
    if !config.keep_test_edges {
        assert_no_leakage(&prop, &split.test)?;
    }
    let features = node_features(
        &prop,
        config.features,
        config.feature_dim(),
        derive_seed(seed, 5),
    )?;
    let model = Model::new(
        config.model.clone(),
        features.ncols(),
        config.model.hidden_dim,
    )?;
    let ctx = model.prepare(&prop, IsolatedPolicy::KeepSelf)?;
    let mut params = model.init_params(derive_seed(seed, 2));
    init_edge_mlp(
        &mut params,
        config.model.hidden_dim,
        config.mlp_hidden(),
        derive_seed(seed, 4),
    );
    let mut adam = Adam::new(AdamConfig::new(config.lr, config.weight_decay));
    let dropout_base = derive_seed(seed, 3);
    let encoder = Encoder {
        model,
        ctx,
        x: &features,
    };
    let (train_pairs, val_pairs, test_pairs) = (
        Pairs::new(&train),
        Pairs::new(&val),
        Pairs::new(&split.test),
    );
    let train_targets = train_pairs.one_hot();

    let evaluate = |params: &Parameters, epoch: usize| -> Result<EpochRecord, TaskError> {
        let mut tape = Tape::new();
        let bound = tape.bind(params);
        let h = encoder.embed(&mut tape, &bound, ForwardOptions::eval())?;
        let logits = edge_mlp(&mut tape, h, &train_pairs.u, &train_pairs.v, &bound)?;
        let loss = tape.softmax_cross_entropy(logits, &train_targets)?;
        let loss = tape.value(loss)[[0, 0]];
        if !loss.is_finite() {
            return Err(TaskError::Divergence { repeat, epoch });
        }
        let mut metrics = BTreeMap::new();
        let val_m = pair_metrics(&mut tape, h, &val_pairs, &bound)?;
        metrics.insert(
            "val_macro_f1".to_string(),
            val_m.map_or(f64::NAN, |m| m.macro_f1),
        );
        let test_m = pair_metrics(&mut tape, h, &test_pairs, &bound)?
            .expect("the test split is never empty");
        metrics.insert("test_accuracy".to_string(), test_m.accuracy);
        metrics.insert("test_macro_f1".to_string(), test_m.macro_f1);
        metrics.insert("test_micro_f1".to_string(), test_m.micro_f1);
        metrics.insert("test_auc".to_string(), test_m.auc.unwrap_or(f64::NAN));
        Ok(EpochRecord {
            epoch,
            loss,
            metrics,
        })
    };

    let mut best = BestEpoch::new(config.report, "val_macro_f1", "test_macro_f1");
    let mut curve = Vec::with_capacity(config.epochs + 1);
    let first = evaluate(&params, 0)?;
    best.offer(&first, &params);
    curve.push(first);
    for epoch in 1..=config.epochs {
        let mut tape = Tape::new();
        let bound = tape.bind(&params);
        let h = encoder.embed(
            &mut tape,
            &bound,
            ForwardOptions::train(derive_seed(dropout_base, epoch as u64)),
        )?;
        let logits = edge_mlp(&mut tape, h, &train_pairs.u, &train_pairs.v, &bound)?;
        let loss = tape.softmax_cross_entropy(logits, &train_targets)?;
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
    let metrics = ["accuracy", "macro_f1", "micro_f1", "auc"]
        .into_iter()
        .map(|k| (k.to_string(), rec.metrics[&format!("test_{k}")]))
        .collect();
    Ok(RunResult {
        repeat,
        seed,
        selected_epoch,
        val_metric: rec.metrics["val_macro_f1"],
        metrics,
        curve,
        params,
    })
}

fn assert_no_leakage(prop: &SignedDiGraph, test: &[LinkTriplet]) -> Result<(), TaskError> {
    let arcs: HashSet<(usize, usize)> = prop.edges().iter().map(|e| (e.src, e.dst)).collect();
    for t in test {
        let hit = arcs.contains(&(t.u, t.v)) || (!prop.is_directed() && arcs.contains(&(t.v, t.u)));
        if hit {
            return Err(TaskError::Split(format!(
                "test link ({}, {}) leaked into the propagation graph",
                t.u, t.v
            )));
        }
    }
    Ok(())
}
