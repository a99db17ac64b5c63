//! Spectral signed GNNs and the edge classifier, written over the autodiff tape.
//!
//! A [`Model`] owns only shapes and hyperparameters. Trainable weights live in
//! [`Parameters`]; graph-dependent constants are precomputed once into a
//! [`GraphContext`] so the same weights can run on different graphs.

mod checkpoint;
mod edge;
mod gnn;

use std::sync::Arc;

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::autodiff::{AutodiffError, Bound, Parameters, Tape, Var};
use crate::graph::SignedDiGraph;
use crate::linalg::CsrMatrix;
use crate::rng::{derive_seed, seeded};
use crate::spectral::{pass_filters, renormalized_propagation, Operator, SpectralError};

pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointHeader, CHECKPOINT_VERSION};
pub use edge::{edge_mlp, init_edge_mlp, EDGE_CLASSES};
pub use gnn::sgcn2_attention;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("node {id} (index {node}) is isolated; sgcn2 needs every node connected (use --drop-isolated)")]
    IsolatedNode { node: usize, id: String },
    #[error("invalid model configuration: {0}")]
    InvalidConfig(String),
    #[error("graph context was prepared for {expected}, not {found}")]
    ContextMismatch {
        expected: &'static str,
        found: &'static str,
    },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Sgcn1,
    Sgcn2,
    S2gc,
    Magnet,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::Sgcn1,
        ModelKind::Sgcn2,
        ModelKind::S2gc,
        ModelKind::Magnet,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Sgcn1 => "sgcn1",
            ModelKind::Sgcn2 => "sgcn2",
            ModelKind::S2gc => "s2gc",
            ModelKind::Magnet => "magnet",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub model: ModelKind,
    pub n_layers: usize,
    pub hidden_dim: usize,
    /// Phase parameter, used by `magnet` only.
    pub q: f64,
    pub dropout: f64,
    /// Propagation steps, used by `s2gc` only.
    pub s2gc_hops: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            model: ModelKind::Sgcn1,
            n_layers: 2,
            hidden_dim: 64,
            q: 0.125,
            dropout: 0.5,
            s2gc_hops: 2,
        }
    }
}

impl ModelConfig {
    pub fn new(model: ModelKind) -> Self {
        Self {
            model,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.n_layers == 0 {
            return Err(ModelError::InvalidConfig(
                "n_layers must be at least 1".into(),
            ));
        }
        if self.hidden_dim == 0 {
            return Err(ModelError::InvalidConfig(
                "hidden_dim must be at least 1".into(),
            ));
        }
        if !(0.0..0.25).contains(&self.q) {
            return Err(ModelError::InvalidConfig(format!(
                "q = {} outside [0, 0.25)",
                self.q
            )));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(ModelError::InvalidConfig(format!(
                "dropout = {} outside [0, 1)",
                self.dropout
            )));
        }
        Ok(())
    }
}

/// How sgcn2 treats nodes without neighbours.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IsolatedPolicy {
    /// Refuse the graph.
    #[default]
    Error,
    /// Isolated rows keep only their unit self term.
    KeepSelf,
}

/// Graph constants consumed by a forward pass.
#[derive(Debug, Clone)]
pub enum GraphContext {
    /// Real renormalized propagation `P`.
    Real { n: usize, p: Arc<CsrMatrix> },
    /// `P^q` split into real and imaginary parts.
    Complex {
        n: usize,
        re: Arc<CsrMatrix>,
        im: Arc<CsrMatrix>,
    },
    /// Directed pairs `(i, j)` with `A_s(i,j) ≠ 0`, in row-major order, and
    /// their coefficients `A_s(i,j)/√(d̄_i d̄_j)`.
    Pairs {
        n: usize,
        src: Arc<Vec<usize>>,
        dst: Arc<Vec<usize>>,
        coef: Array2<f64>,
    },
}

impl GraphContext {
    pub fn n_nodes(&self) -> usize {
        match self {
            GraphContext::Real { n, .. }
            | GraphContext::Complex { n, .. }
            | GraphContext::Pairs { n, .. } => *n,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            GraphContext::Real { .. } => "real propagation",
            GraphContext::Complex { .. } => "complex propagation",
            GraphContext::Pairs { .. } => "attention pairs",
        }
    }
}

/// Node features entering a model: a tape value, or a constant sparse matrix
/// (one-hot inputs) multiplied without densifying.
#[derive(Debug, Clone)]
pub enum Input {
    Dense(Var),
    Sparse(Arc<CsrMatrix>),
}

impl From<Var> for Input {
    fn from(v: Var) -> Self {
        Input::Dense(v)
    }
}

impl Input {
    pub fn shape(&self, tape: &Tape) -> (usize, usize) {
        match self {
            Input::Dense(v) => tape.shape(*v),
            Input::Sparse(m) => m.shape(),
        }
    }
}

/// Per-call switches for a forward pass.
#[derive(Debug, Clone, Copy, Default)]
pub struct ForwardOptions {
    pub train: bool,
    /// Base seed for dropout masks.
    pub seed: u64,
    /// Replaces every sgcn2 attention coefficient by this constant.
    pub fixed_beta: Option<f64>,
}

impl ForwardOptions {
    pub fn eval() -> Self {
        Self::default()
    }

    pub fn train(seed: u64) -> Self {
        Self {
            train: true,
            seed,
            fixed_beta: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub config: ModelConfig,
    pub in_dim: usize,
    pub out_dim: usize,
}

impl Model {
    pub fn new(config: ModelConfig, in_dim: usize, out_dim: usize) -> Result<Self, ModelError> {
        config.validate()?;
        if in_dim == 0 || out_dim == 0 {
            return Err(ModelError::InvalidConfig(
                "input and output dims must be at least 1".into(),
            ));
        }
        Ok(Self {
            config,
            in_dim,
            out_dim,
        })
    }

    pub fn kind(&self) -> ModelKind {
        self.config.model
    }

    /// Glorot-initialized weights, deterministic in `seed`.
    pub fn init_params(&self, seed: u64) -> Parameters {
        let mut rng = seeded(seed);
        let mut p = Parameters::new();
        let (h, c) = (self.config.hidden_dim, &self.config);
        match c.model {
            ModelKind::Sgcn1 => {
                for l in 0..c.n_layers {
                    let rows = if l == 0 { self.in_dim } else { h };
                    let cols = if l + 1 == c.n_layers { self.out_dim } else { h };
                    p.insert_glorot(format!("theta{l}"), rows, cols, &mut rng);
                }
            }
            ModelKind::S2gc => p.insert_glorot("theta", self.in_dim, self.out_dim, &mut rng),
            ModelKind::Sgcn2 => {
                p.insert_glorot("theta1", self.in_dim, h, &mut rng);
                for l in 0..c.n_layers {
                    p.insert_glorot(format!("att{l}.src"), h, 1, &mut rng);
                    p.insert_glorot(format!("att{l}.dst"), h, 1, &mut rng);
                }
                p.insert_glorot("theta2", h, self.out_dim, &mut rng);
            }
            ModelKind::Magnet => {
                for l in 0..c.n_layers {
                    let rows = if l == 0 { self.in_dim } else { h };
                    p.insert_glorot(format!("theta{l}.re"), rows, h, &mut rng);
                    p.insert_glorot(format!("theta{l}.im"), rows, h, &mut rng);
                }
                p.insert_glorot("readout", 2 * h, self.out_dim, &mut rng);
            }
        }
        p
    }

    /// Precomputes the operator this model propagates with.
    pub fn prepare(
        &self,
        g: &SignedDiGraph,
        isolated: IsolatedPolicy,
    ) -> Result<GraphContext, ModelError> {
        let n = g.n_nodes();
        Ok(match self.config.model {
            ModelKind::Sgcn1 | ModelKind::S2gc => match renormalized_propagation(g, None)? {
                Operator::Real(p) => GraphContext::Real { n, p: Arc::new(p) },
                Operator::Complex(_) => unreachable!("real propagation requested"),
            },
            ModelKind::Magnet => match renormalized_propagation(g, Some(self.config.q))? {
                Operator::Complex(p) => {
                    let (re, im) = p.split_parts();
                    GraphContext::Complex {
                        n,
                        re: Arc::new(re),
                        im: Arc::new(im),
                    }
                }
                Operator::Real(_) => unreachable!("complex propagation requested"),
            },
            ModelKind::Sgcn2 => attention_pairs(g, isolated)?,
        })
    }

    /// Output rows are node embeddings (or logits when `out_dim` is the class count).
    pub fn forward(
        &self,
        tape: &mut Tape,
        ctx: &GraphContext,
        x: impl Into<Input>,
        params: &Bound,
        opts: &ForwardOptions,
    ) -> Result<Var, ModelError> {
        let x = x.into();
        let (rows, cols) = x.shape(tape);
        if rows != ctx.n_nodes() || cols != self.in_dim {
            return Err(AutodiffError::ShapeMismatch {
                op: "model input",
                left: (rows, cols),
                right: (ctx.n_nodes(), self.in_dim),
            }
            .into());
        }
        let c = &self.config;
        match (c.model, ctx) {
            (ModelKind::Sgcn1, GraphContext::Real { p, .. }) => {
                gnn::sgcn1(tape, p, &x, params, c, opts)
            }
            (ModelKind::S2gc, GraphContext::Real { p, .. }) => {
                gnn::s2gc(tape, p, &x, params, c, opts)
            }
            (ModelKind::Magnet, GraphContext::Complex { re, im, .. }) => {
                let (hr, hi) = gnn::magnet_layers(tape, re, im, &x, params, c, opts)?;
                gnn::magnet_readout(tape, hr, hi, params, c, opts)
            }
            (ModelKind::Sgcn2, GraphContext::Pairs { n, src, dst, coef }) => {
                gnn::sgcn2(tape, *n, src, dst, coef, &x, params, c, opts)
            }
            (_, other) => Err(ModelError::ContextMismatch {
                expected: self.expected_context(),
                found: other.kind(),
            }),
        }
    }

    /// Real and imaginary parts of the magnet embedding before the readout.
    pub fn magnet_embedding(
        &self,
        tape: &mut Tape,
        ctx: &GraphContext,
        x: impl Into<Input>,
        params: &Bound,
        opts: &ForwardOptions,
    ) -> Result<(Var, Var), ModelError> {
        match (self.config.model, ctx) {
            (ModelKind::Magnet, GraphContext::Complex { re, im, .. }) => {
                gnn::magnet_layers(tape, re, im, &x.into(), params, &self.config, opts)
            }
            (_, other) => Err(ModelError::ContextMismatch {
                expected: "complex propagation",
                found: other.kind(),
            }),
        }
    }

    fn expected_context(&self) -> &'static str {
        match self.config.model {
            ModelKind::Sgcn1 | ModelKind::S2gc => "real propagation",
            ModelKind::Magnet => "complex propagation",
            ModelKind::Sgcn2 => "attention pairs",
        }
    }
}

/// Dropout seed for layer `layer` of the stream rooted at `base`.
pub(crate) fn layer_seed(base: u64, layer: usize) -> u64 {
    derive_seed(base, layer as u64)
}

fn attention_pairs(
    g: &SignedDiGraph,
    isolated: IsolatedPolicy,
) -> Result<GraphContext, ModelError> {
    let n = g.n_nodes();
    let isolated_nodes = g.zero_degree_nodes();
    let (low, index_map) = match (isolated_nodes.first(), isolated) {
        (None, _) => (pass_filters(g)?.0, None),
        (Some(&node), IsolatedPolicy::Error) => {
            return Err(ModelError::IsolatedNode {
                node,
                id: g.node_id(node),
            })
        }
        (Some(_), IsolatedPolicy::KeepSelf) => {
            let (sub, kept) = drop_zero_degree(g)?;
            (pass_filters(&sub)?.0, Some(kept))
        }
    };
    let map = |i: usize| index_map.as_ref().map_or(i, |m: &Vec<usize>| m[i]);
    let (mut src, mut dst, mut coef) = (Vec::new(), Vec::new(), Vec::new());
    for (i, j, v) in low.iter() {
        if i != j {
            src.push(map(i));
            dst.push(map(j));
            coef.push(v);
        }
    }
    let m = coef.len();
    Ok(GraphContext::Pairs {
        n,
        src: Arc::new(src),
        dst: Arc::new(dst),
        coef: Array2::from_shape_vec((m, 1), coef).expect("one coefficient per pair"),
    })
}

/// Subgraph on the nodes with non-zero `|A_s|` degree, with the kept indices.
fn drop_zero_degree(g: &SignedDiGraph) -> Result<(SignedDiGraph, Vec<usize>), ModelError> {
    let zero: std::collections::HashSet<usize> = g.zero_degree_nodes().into_iter().collect();
    let kept: Vec<usize> = (0..g.n_nodes()).filter(|i| !zero.contains(i)).collect();
    let mut new_index = vec![usize::MAX; g.n_nodes()];
    for (k, &i) in kept.iter().enumerate() {
        new_index[i] = k;
    }
    let edges = g
        .edges()
        .iter()
        .filter(|e| new_index[e.src] != usize::MAX && new_index[e.dst] != usize::MAX)
        .map(|e| crate::graph::Edge::new(new_index[e.src], new_index[e.dst], e.sign))
        .collect();
    let sub = SignedDiGraph::new(kept.len(), g.is_directed(), edges)
        .map_err(|e| ModelError::InvalidConfig(format!("subgraph construction failed: {e}")))?;
    Ok((sub, kept))
}
