//! Dense Hermitian eigendecomposition.
//!
//! Householder reduction to tridiagonal form, a diagonal unitary that makes
//! the tridiagonal real, and implicit-shift QL iterations on the result.
//! The same code serves real symmetric (`f64`) and complex Hermitian
//! (`Complex64`) input.

use ndarray::{Array1, Array2, ArrayView2, Axis};

use super::{LinalgError, Scalar};

/// Eigenvalues (ascending) with their eigenvectors stored as columns.
#[derive(Debug, Clone)]
pub struct Spectrum<S> {
    pub eigenvalues: Array1<f64>,
    pub eigenvectors: Array2<S>,
    /// Largest `‖M v_k − λ_k v_k‖₂` over the returned pairs.
    pub residual_norm: f64,
}

impl<S: Scalar> Spectrum<S> {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.eigenvectors.nrows()
    }

    /// `U Λ U†`.
    pub fn reconstruct(&self) -> Array2<S> {
        let mut scaled = self.eigenvectors.clone();
        for (mut col, &lam) in scaled.axis_iter_mut(Axis(1)).zip(self.eigenvalues.iter()) {
            col.mapv_inplace(|v| v.scale(lam));
        }
        scaled.dot(&conj_transpose(&self.eigenvectors.view()))
    }

    /// `max |(U†U − I)_{ij}|`.
    pub fn orthonormality_error(&self) -> f64 {
        let gram = conj_transpose(&self.eigenvectors.view()).dot(&self.eigenvectors);
        gram.indexed_iter()
            .map(|((i, j), v)| {
                let target = if i == j { S::one() } else { S::zero() };
                (*v - target).modulus()
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EigOptions {
    /// Largest dimension accepted by the dense solver.
    pub max_dim: usize,
    /// Allowed `|m(i,j) − conj(m(j,i))|`, relative to `max(1, max|m|)`.
    pub hermitian_tol: f64,
}

impl Default for EigOptions {
    fn default() -> Self {
        Self {
            max_dim: 4096,
            hermitian_tol: 1e-12,
        }
    }
}

pub fn conj_transpose<S: Scalar>(m: &ArrayView2<S>) -> Array2<S> {
    m.t().mapv(|v| v.conj())
}

pub fn dense_hermitian_eig<S: Scalar>(m: &ArrayView2<S>) -> Result<Spectrum<S>, LinalgError> {
    dense_hermitian_eig_with(m, &EigOptions::default())
}

pub fn dense_hermitian_eig_with<S: Scalar>(
    m: &ArrayView2<S>,
    opts: &EigOptions,
) -> Result<Spectrum<S>, LinalgError> {
    let (n, c) = m.dim();
    if n != c {
        return Err(LinalgError::NotSquare {
            n_rows: n,
            n_cols: c,
        });
    }
    if n > opts.max_dim {
        return Err(LinalgError::DimensionOverCap {
            n,
            cap: opts.max_dim,
        });
    }
    let max_abs = m.iter().map(|v| v.modulus()).fold(0.0, f64::max);
    let mut dev = 0.0f64;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[[i, j]] - m[[j, i]].conj()).modulus());
        }
    }
    if dev > opts.hermitian_tol * max_abs.max(1.0) {
        return Err(LinalgError::NotHermitian { max_deviation: dev });
    }
    if n == 0 {
        return Ok(Spectrum {
            eigenvalues: Array1::zeros(0),
            eigenvectors: Array2::zeros((0, 0)),
            residual_norm: 0.0,
        });
    }

    let mut a = Array2::from_shape_fn((n, n), |(i, j)| {
        if i == j {
            S::from_re(m[[i, i]].re())
        } else {
            (m[[i, j]] + m[[j, i]].conj()).scale(0.5)
        }
    });
    let (diag, sub, q) = householder_tridiagonalize(&mut a);

    // Rotate phases so the sub-diagonal becomes real and non-negative.
    let mut phases = vec![S::one(); n];
    let mut off = vec![0.0; n];
    for k in 0..n - 1 {
        phases[k + 1] = phases[k] * sub[k].phase();
        off[k] = sub[k].modulus();
    }
    let mut basis = q;
    for (mut col, &ph) in basis.axis_iter_mut(Axis(1)).zip(phases.iter()) {
        col.mapv_inplace(|v| v * ph);
    }

    let mut d = diag;
    let mut z = Array2::<f64>::eye(n);
    tridiagonal_ql(&mut d, &mut off, &mut z)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| d[x].total_cmp(&d[y]));
    let eigenvalues = Array1::from_iter(order.iter().map(|&i| d[i]));
    let z_sorted = Array2::from_shape_fn((n, n), |(i, j)| S::from_re(z[[i, order[j]]]));
    let eigenvectors = basis.dot(&z_sorted);

    let residual_norm = max_residual(m, &eigenvalues, &eigenvectors);
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
        residual_norm,
    })
}

pub(crate) fn max_residual<S: Scalar>(
    m: &ArrayView2<S>,
    values: &Array1<f64>,
    vectors: &Array2<S>,
) -> f64 {
    let mv = m.dot(vectors);
    let mut worst = 0.0f64;
    for (k, &lam) in values.iter().enumerate() {
        let r: f64 = mv
            .column(k)
            .iter()
            .zip(vectors.column(k).iter())
            .map(|(&a, &b)| (a - b.scale(lam)).norm_sqr())
            .sum();
        worst = worst.max(r.sqrt());
    }
    worst
}

/// Reduces Hermitian `a` (overwritten) to tridiagonal form `Q T Q†`.
/// Returns the real diagonal, the complex sub-diagonal and `Q`.
fn householder_tridiagonalize<S: Scalar>(a: &mut Array2<S>) -> (Vec<f64>, Vec<S>, Array2<S>) {
    let n = a.nrows();
    let mut q = Array2::<S>::eye(n);
    for k in 0..n.saturating_sub(2) {
        let m = n - k - 1;
        let x: Vec<S> = (0..m).map(|i| a[[k + 1 + i, k]]).collect();
        let xnorm = x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        if xnorm == 0.0 {
            continue;
        }
        let alpha = -x[0].phase().scale(xnorm);
        let mut v = x;
        v[0] = v[0] - alpha;
        let vnorm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if vnorm == 0.0 {
            continue;
        }
        for z in v.iter_mut() {
            *z = z.scale(1.0 / vnorm);
        }

        // Trailing block B ← H B H with H = I − 2 v v†.
        let off = k + 1;
        let mut p = vec![S::zero(); m];
        for (i, pi) in p.iter_mut().enumerate() {
            let mut acc = S::zero();
            for (j, vj) in v.iter().enumerate() {
                acc = acc + a[[off + i, off + j]] * *vj;
            }
            *pi = acc;
        }
        let kappa: f64 = v
            .iter()
            .zip(p.iter())
            .map(|(vi, pi)| (vi.conj() * *pi).re())
            .sum();
        let w: Vec<S> = p
            .iter()
            .zip(v.iter())
            .map(|(pi, vi)| *pi - vi.scale(kappa))
            .collect();
        for i in 0..m {
            for j in 0..m {
                let upd = v[i] * w[j].conj() + w[i] * v[j].conj();
                a[[off + i, off + j]] = a[[off + i, off + j]] - upd.scale(2.0);
            }
        }
        for i in 0..m {
            a[[off + i, off + i]] = S::from_re(a[[off + i, off + i]].re());
        }
        a[[off, k]] = alpha;
        a[[k, off]] = alpha.conj();
        for i in 1..m {
            a[[off + i, k]] = S::zero();
            a[[k, off + i]] = S::zero();
        }

        // Q ← Q H.
        for r in 0..n {
            let mut dotv = S::zero();
            for (j, vj) in v.iter().enumerate() {
                dotv = dotv + q[[r, off + j]] * *vj;
            }
            for (j, vj) in v.iter().enumerate() {
                q[[r, off + j]] = q[[r, off + j]] - (dotv * vj.conj()).scale(2.0);
            }
        }
    }
    let diag = (0..n).map(|i| a[[i, i]].re()).collect();
    let sub = (0..n.saturating_sub(1)).map(|i| a[[i + 1, i]]).collect();
    (diag, sub, q)
}

/// Implicit-shift QL on a real symmetric tridiagonal matrix.
///
/// `d` holds the diagonal and is overwritten with eigenvalues (unsorted).
/// `e[i]` couples `i` and `i + 1`; its last slot is scratch. Every row of `z`
/// is rotated alongside, so passing the identity yields eigenvectors as
/// columns and passing a single unit row yields one component of each.
pub(crate) fn tridiagonal_ql(
    d: &mut [f64],
    e: &mut [f64],
    z: &mut Array2<f64>,
) -> Result<(), LinalgError> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    e[n - 1] = 0.0;
    const MAX_SWEEPS: usize = 60;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m < n - 1 {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            if m == l + 1 {
                // Closed form for a 2x2 block.
                let (rt1, rt2, cs, sn) = symmetric_2x2(d[l], e[l], d[l + 1]);
                d[l] = rt1;
                d[l + 1] = rt2;
                e[l] = 0.0;
                for mut row in z.rows_mut() {
                    let (zl, zm) = (row[l], row[l + 1]);
                    row[l] = cs * zl + sn * zm;
                    row[l + 1] = cs * zm - sn * zl;
                }
                continue;
            }
            iter += 1;
            if iter > MAX_SWEEPS {
                return Err(LinalgError::NonConvergence {
                    best_residual: e[l].abs(),
                    iterations: iter,
                });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + if g >= 0.0 { r } else { -r });
            let (mut s, mut c, mut p) = (1.0f64, 1.0f64, 0.0f64);
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for mut row in z.rows_mut() {
                    let zf = row[i + 1];
                    let zi = row[i];
                    row[i + 1] = s * zi + c * zf;
                    row[i] = c * zi - s * zf;
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// Eigen-decomposition of `[[a, b], [b, c]]`: returns `(rt1, rt2, cs, sn)` with
/// `|rt1| ≥ |rt2|` and `(cs, sn)` the unit eigenvector of `rt1`. Follows LAPACK `dlaev2`.
fn symmetric_2x2(a: f64, b: f64, c: f64) -> (f64, f64, f64, f64) {
    let sm = a + c;
    let df = a - c;
    let adf = df.abs();
    let tb = b + b;
    let ab = tb.abs();
    let (acmx, acmn) = if a.abs() > c.abs() { (a, c) } else { (c, a) };
    let rt = if adf > ab {
        adf * (1.0 + (ab / adf).powi(2)).sqrt()
    } else if adf < ab {
        ab * (1.0 + (adf / ab).powi(2)).sqrt()
    } else {
        ab * std::f64::consts::SQRT_2
    };
    let (rt1, rt2, sgn1) = if sm < 0.0 {
        let rt1 = 0.5 * (sm - rt);
        (rt1, (acmx / rt1) * acmn - (b / rt1) * b, -1.0)
    } else if sm > 0.0 {
        let rt1 = 0.5 * (sm + rt);
        (rt1, (acmx / rt1) * acmn - (b / rt1) * b, 1.0)
    } else {
        (0.5 * rt, -0.5 * rt, 1.0)
    };
    let (cs, sgn2) = if df >= 0.0 {
        (df + rt, 1.0)
    } else {
        (df - rt, -1.0)
    };
    let (mut cs1, mut sn1) = if cs.abs() > ab {
        let ct = -tb / cs;
        let sn1 = 1.0 / (1.0 + ct * ct).sqrt();
        (ct * sn1, sn1)
    } else if ab == 0.0 {
        (1.0, 0.0)
    } else {
        let tn = -cs / tb;
        let cs1 = 1.0 / (1.0 + tn * tn).sqrt();
        (cs1, tn * cs1)
    };
    if sgn1 == sgn2 {
        (cs1, sn1) = (-sn1, cs1);
    }
    (rt1, rt2, cs1, sn1)
}
