use std::sync::Arc;

use super::ModelError;
use crate::autodiff::{AutodiffError, Bound, Parameters, Tape, Var};
use crate::rng::seeded;

/// Output columns, in order: positive link, negative link, no link.
pub const EDGE_CLASSES: usize = 3;

/// Adds the `mlp.*` weights for embeddings of width `emb_dim`.
pub fn init_edge_mlp(params: &mut Parameters, emb_dim: usize, hidden: usize, seed: u64) {
    let mut rng = seeded(seed);
    params.insert_glorot("mlp.w1", 2 * emb_dim, hidden, &mut rng);
    params.insert_zeros("mlp.b1", 1, hidden);
    params.insert_glorot("mlp.w2", hidden, EDGE_CLASSES, &mut rng);
    params.insert_zeros("mlp.b2", 1, EDGE_CLASSES);
}

/// Logits for the pairs `(u[k], v[k])` from node embeddings `h`.
pub fn edge_mlp(
    tape: &mut Tape,
    h: Var,
    u: &Arc<Vec<usize>>,
    v: &Arc<Vec<usize>>,
    params: &Bound,
) -> Result<Var, ModelError> {
    if u.len() != v.len() {
        return Err(AutodiffError::ShapeMismatch {
            op: "edge_mlp",
            left: (u.len(), 1),
            right: (v.len(), 1),
        }
        .into());
    }
    let hu = tape.gather_rows(h, u)?;
    let hv = tape.gather_rows(h, v)?;
    let z = tape.concat_cols(&[hu, hv])?;
    let z = tape.matmul(z, params.get("mlp.w1")?)?;
    let z = tape.add_row(z, params.get("mlp.b1")?)?;
    let z = tape.relu(z);
    let z = tape.matmul(z, params.get("mlp.w2")?)?;
    Ok(tape.add_row(z, params.get("mlp.b2")?)?)
}
