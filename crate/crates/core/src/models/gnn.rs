use std::sync::Arc;

use ndarray::Array2;

use rand::Rng;

use super::{layer_seed, ForwardOptions, Input, ModelConfig, ModelError};
use crate::autodiff::{Bound, Tape, Var};
use crate::linalg::CsrMatrix;
use crate::rng::seeded;

/// Inverted dropout on the input. Sparse inputs draw one mask entry per
/// stored value, so zeros stay zeros either way.
fn dropout_input(
    tape: &mut Tape,
    x: &Input,
    p: f64,
    train: bool,
    seed: u64,
) -> Result<Input, ModelError> {
    Ok(match x {
        Input::Dense(v) => Input::Dense(tape.dropout(*v, p, train, seed)?),
        Input::Sparse(m) if train && p > 0.0 => {
            let mut rng = seeded(seed);
            let keep = 1.0 - p;
            let dropped = m.map_values(|v| {
                if rng.random::<f64>() < keep {
                    v / keep
                } else {
                    0.0
                }
            });
            Input::Sparse(Arc::new(dropped))
        }
        Input::Sparse(m) => Input::Sparse(Arc::clone(m)),
    })
}

fn input_matmul(tape: &mut Tape, x: &Input, theta: Var) -> Result<Var, ModelError> {
    Ok(match x {
        Input::Dense(v) => tape.matmul(*v, theta)?,
        Input::Sparse(m) => tape.sparse_matmul(m, theta)?,
    })
}

/// `L` layers of `P H Θ`, ReLU between layers, logits out.
pub(super) fn sgcn1(
    tape: &mut Tape,
    p: &Arc<CsrMatrix>,
    x: &Input,
    params: &Bound,
    c: &ModelConfig,
    opts: &ForwardOptions,
) -> Result<Var, ModelError> {
    let x = dropout_input(tape, x, c.dropout, opts.train, layer_seed(opts.seed, 0))?;
    let mut h = input_matmul(tape, &x, params.get("theta0")?)?;
    h = tape.sparse_matmul(p, h)?;
    if c.n_layers > 1 {
        h = tape.relu(h);
    }
    for l in 1..c.n_layers {
        h = tape.dropout(h, c.dropout, opts.train, layer_seed(opts.seed, l))?;
        let hw = tape.matmul(h, params.get(&format!("theta{l}"))?)?;
        h = tape.sparse_matmul(p, hw)?;
        if l + 1 < c.n_layers {
            h = tape.relu(h);
        }
    }
    Ok(h)
}

/// `P^hops X Θ`.
pub(super) fn s2gc(
    tape: &mut Tape,
    p: &Arc<CsrMatrix>,
    x: &Input,
    params: &Bound,
    c: &ModelConfig,
    opts: &ForwardOptions,
) -> Result<Var, ModelError> {
    let x = dropout_input(tape, x, c.dropout, opts.train, layer_seed(opts.seed, 0))?;
    let mut h = input_matmul(tape, &x, params.get("theta")?)?;
    for _ in 0..c.s2gc_hops {
        h = tape.sparse_matmul(p, h)?;
    }
    Ok(h)
}

/// `β_ij = tanh(a_srcᵀ h_i + a_dstᵀ h_j)` for every pair `(src[k], dst[k])`, as an `E×1` column.
pub fn sgcn2_attention(
    tape: &mut Tape,
    h: Var,
    a_src: Var,
    a_dst: Var,
    src: &Arc<Vec<usize>>,
    dst: &Arc<Vec<usize>>,
) -> Result<Var, ModelError> {
    let s = tape.matmul(h, a_src)?;
    let t = tape.matmul(h, a_dst)?;
    let s = tape.gather_rows(s, src)?;
    let t = tape.gather_rows(t, dst)?;
    let z = tape.add(s, t)?;
    Ok(tape.tanh(z))
}

#[allow(clippy::too_many_arguments)]
pub(super) fn sgcn2(
    tape: &mut Tape,
    n: usize,
    src: &Arc<Vec<usize>>,
    dst: &Arc<Vec<usize>>,
    coef: &Array2<f64>,
    x: &Input,
    params: &Bound,
    c: &ModelConfig,
    opts: &ForwardOptions,
) -> Result<Var, ModelError> {
    let x = dropout_input(tape, x, c.dropout, opts.train, layer_seed(opts.seed, 0))?;
    let h0 = input_matmul(tape, &x, params.get("theta1")?)?;
    let mut h = tape.relu(h0);
    let coef = tape.constant(coef.clone());
    for l in 0..c.n_layers {
        let beta = match opts.fixed_beta {
            Some(b) => tape.constant(Array2::from_elem((src.len(), 1), b)),
            None => {
                let a_src = params.get(&format!("att{l}.src"))?;
                let a_dst = params.get(&format!("att{l}.dst"))?;
                sgcn2_attention(tape, h, a_src, a_dst, src, dst)?
            }
        };
        let w = tape.mul(beta, coef)?;
        let hj = tape.gather_rows(h, dst)?;
        let messages = tape.mul_col(hj, w)?;
        let agg = tape.scatter_add_rows(messages, src, n)?;
        h = tape.add(h, agg)?;
    }
    let h = tape.dropout(
        h,
        c.dropout,
        opts.train,
        layer_seed(opts.seed, c.n_layers + 1),
    )?;
    Ok(tape.matmul(h, params.get("theta2")?)?)
}

/// Complex layers on `(re, im)` pairs; returns the last layer's parts.
pub(super) fn magnet_layers(
    tape: &mut Tape,
    p_re: &Arc<CsrMatrix>,
    p_im: &Arc<CsrMatrix>,
    x: &Input,
    params: &Bound,
    c: &ModelConfig,
    opts: &ForwardOptions,
) -> Result<(Var, Var), ModelError> {
    // The input is real, so the first layer skips the imaginary products.
    let x = dropout_input(tape, x, c.dropout, opts.train, layer_seed(opts.seed, 0))?;
    let mut hr: Option<Var> = None;
    let mut hi: Option<Var> = None;
    for l in 0..c.n_layers {
        let tr = params.get(&format!("theta{l}.re"))?;
        let ti = params.get(&format!("theta{l}.im"))?;
        // (hr + i hi)(Θr + i Θi)
        let (zr, zi) = match (hr, hi) {
            (Some(r), Some(i)) => {
                let r = tape.dropout(r, c.dropout, opts.train, layer_seed(opts.seed, 2 * l))?;
                let i = tape.dropout(i, c.dropout, opts.train, layer_seed(opts.seed, 2 * l + 1))?;
                let rr = tape.matmul(r, tr)?;
                let ii = tape.matmul(i, ti)?;
                let ri = tape.matmul(r, ti)?;
                let ir = tape.matmul(i, tr)?;
                (tape.sub(rr, ii)?, tape.add(ri, ir)?)
            }
            _ => (input_matmul(tape, &x, tr)?, input_matmul(tape, &x, ti)?),
        };
        // (P_re + i P_im)(zr + i zi)
        let a = tape.sparse_matmul(p_re, zr)?;
        let b = tape.sparse_matmul(p_im, zi)?;
        let yr = tape.sub(a, b)?;
        let a = tape.sparse_matmul(p_re, zi)?;
        let b = tape.sparse_matmul(p_im, zr)?;
        let yi = tape.add(a, b)?;
        hr = Some(tape.relu(yr));
        hi = Some(tape.relu(yi));
    }
    Ok((
        hr.expect("at least one layer"),
        hi.expect("at least one layer"),
    ))
}

pub(super) fn magnet_readout(
    tape: &mut Tape,
    hr: Var,
    hi: Var,
    params: &Bound,
    c: &ModelConfig,
    opts: &ForwardOptions,
) -> Result<Var, ModelError> {
    let h = tape.concat_cols(&[hr, hi])?;
    let h = tape.dropout(
        h,
        c.dropout,
        opts.train,
        layer_seed(opts.seed, 2 * c.n_layers),
    )?;
    Ok(tape.matmul(h, params.get("readout")?)?)
}
