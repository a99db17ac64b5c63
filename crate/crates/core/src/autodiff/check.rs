use ndarray::Array2;

use super::{AutodiffError, Tape, Var};

/// `|a − n| / max(1, |a|, |n|)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / 1f64.max(analytic.abs()).max(numeric.abs())
}

/// Largest relative error between tape gradients and central differences
/// with step `eps`, over every entry of every input. `f` must be
/// deterministic and return a `1×1` value.
pub fn grad_check<F>(f: F, inputs: &[Array2<f64>], eps: f64) -> Result<f64, AutodiffError>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var, AutodiffError>,
{
    let eval = |values: &[Array2<f64>]| -> Result<f64, AutodiffError> {
        let mut tape = Tape::new();
        let vars: Vec<Var> = values.iter().map(|v| tape.leaf(v.clone())).collect();
        let out = f(&mut tape, &vars)?;
        if tape.shape(out) != (1, 1) {
            return Err(AutodiffError::NonScalarLoss(tape.shape(out)));
        }
        Ok(tape.value(out)[[0, 0]])
    };

    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|v| tape.leaf(v.clone())).collect();
    let out = f(&mut tape, &vars)?;
    tape.backward(out)?;
    let analytic: Vec<Array2<f64>> = vars
        .iter()
        .map(|v| {
            tape.grad(*v)
                .cloned()
                .unwrap_or_else(|| Array2::zeros(tape.shape(*v)))
        })
        .collect();

    let mut worst = 0.0f64;
    let mut work: Vec<Array2<f64>> = inputs.to_vec();
    for k in 0..inputs.len() {
        for idx in 0..inputs[k].len() {
            let (r, c) = (idx / inputs[k].ncols(), idx % inputs[k].ncols());
            let orig = work[k][[r, c]];
            work[k][[r, c]] = orig + eps;
            let plus = eval(&work)?;
            work[k][[r, c]] = orig - eps;
            let minus = eval(&work)?;
            work[k][[r, c]] = orig;
            let numeric = (plus - minus) / (2.0 * eps);
            worst = worst.max(relative_error(analytic[k][[r, c]], numeric));
        }
    }
    Ok(worst)
}
