use std::f64::consts::PI;

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use super::{Family, LaplacianKind, SpectralError};
use crate::graph::SignedDiGraph;
use crate::linalg::{
    dense_hermitian_eig, lanczos_extremal, ComplexSpectrum, Csr, CsrComplexMatrix, CsrMatrix,
    EigOptions, RealSpectrum, Scalar, Which,
};

/// A graph operator: real symmetric or complex Hermitian.
#[derive(Debug, Clone, PartialEq)]
pub enum Operator {
    Real(CsrMatrix),
    Complex(CsrComplexMatrix),
}

#[derive(Debug, Clone)]
pub enum OperatorSpectrum {
    Real(RealSpectrum),
    Complex(ComplexSpectrum),
}

impl OperatorSpectrum {
    pub fn eigenvalues(&self) -> &Array1<f64> {
        match self {
            OperatorSpectrum::Real(s) => &s.eigenvalues,
            OperatorSpectrum::Complex(s) => &s.eigenvalues,
        }
    }

    pub fn residual_norm(&self) -> f64 {
        match self {
            OperatorSpectrum::Real(s) => s.residual_norm,
            OperatorSpectrum::Complex(s) => s.residual_norm,
        }
    }
}

impl Operator {
    pub fn n(&self) -> usize {
        match self {
            Operator::Real(m) => m.n_rows(),
            Operator::Complex(m) => m.n_rows(),
        }
    }

    pub fn as_real(&self) -> Option<&CsrMatrix> {
        match self {
            Operator::Real(m) => Some(m),
            Operator::Complex(_) => None,
        }
    }

    pub fn as_complex(&self) -> Option<&CsrComplexMatrix> {
        match self {
            Operator::Complex(m) => Some(m),
            Operator::Real(_) => None,
        }
    }

    pub fn to_complex(&self) -> CsrComplexMatrix {
        match self {
            Operator::Real(m) => m.to_complex(),
            Operator::Complex(m) => m.clone(),
        }
    }

    pub fn to_dense_complex(&self) -> Array2<Complex64> {
        self.to_complex().to_dense()
    }

    /// Full spectrum via the dense solver.
    pub fn full_spectrum(&self) -> Result<OperatorSpectrum, SpectralError> {
        Ok(match self {
            Operator::Real(m) => OperatorSpectrum::Real(dense_hermitian_eig(&m.to_dense().view())?),
            Operator::Complex(m) => {
                OperatorSpectrum::Complex(dense_hermitian_eig(&m.to_dense().view())?)
            }
        })
    }

    /// `k` extremal eigenpairs via Lanczos.
    pub fn partial_spectrum(
        &self,
        k: usize,
        which: Which,
    ) -> Result<OperatorSpectrum, SpectralError> {
        Ok(match self {
            Operator::Real(m) => OperatorSpectrum::Real(lanczos_extremal(m, k, which)?),
            Operator::Complex(m) => OperatorSpectrum::Complex(lanczos_extremal(m, k, which)?),
        })
    }

    /// Smallest and largest eigenvalue; dense up to the solver cap, Lanczos beyond.
    pub fn extreme_eigenvalues(&self) -> Result<(f64, f64), SpectralError> {
        if self.n() == 0 {
            return Ok((0.0, 0.0));
        }
        if self.n() <= EigOptions::default().max_dim {
            let spec = self.full_spectrum()?;
            let ev = spec.eigenvalues();
            return Ok((ev[0], ev[ev.len() - 1]));
        }
        let lo = self.partial_spectrum(1, Which::Smallest)?.eigenvalues()[0];
        let hi = self.partial_spectrum(1, Which::Largest)?.eigenvalues()[0];
        Ok((lo, hi))
    }

    /// Negates every diagonal entry. Only used to check that the property
    /// validators notice a broken operator.
    #[doc(hidden)]
    pub fn with_negated_diagonal(&self) -> Operator {
        fn flip<S: Scalar>(m: &Csr<S>) -> Csr<S> {
            let trip = m
                .iter()
                .map(|(i, j, v)| (i, j, if i == j { -v } else { v }));
            Csr::from_triplets(m.n_rows(), m.n_cols(), trip.collect::<Vec<_>>())
                .expect("same sparsity")
                .into_hermitian()
                .expect("diagonal flip keeps symmetry")
        }
        match self {
            Operator::Real(m) => Operator::Real(flip(m)),
            Operator::Complex(m) => Operator::Complex(flip(m)),
        }
    }
}

/// Off-diagonal entries `(i, j, w)` with `i < j` of the weight matrix
/// `A_s` (real families) or `A_s ⊙ Φ^q` (magnetic families).
fn upper_weights<S: Scalar>(g: &SignedDiGraph, a_s: &CsrMatrix, q: f64) -> Vec<(usize, usize, S)> {
    let a = g.adjacency();
    let mut out = Vec::with_capacity(a_s.nnz() / 2);
    for i in 0..a_s.n_rows() {
        for (j, w) in a_s.row(i) {
            if j <= i {
                continue;
            }
            let entry = if S::IS_COMPLEX {
                let theta = 2.0 * PI * q * (a.get(i, j) - a.get(j, i));
                S::from_parts(w * theta.cos(), w * theta.sin())
            } else {
                S::from_re(w)
            };
            out.push((i, j, entry));
        }
    }
    out
}

/// Degree vector of the family: row sums of `A_s`, or of `|A_s|` for the
/// signed families.
fn family_degrees(a_s: &CsrMatrix, family: Family) -> Vec<f64> {
    (0..a_s.n_rows())
        .map(|i| match family {
            Family::Combinatorial | Family::Magnetic => a_s.row(i).map(|(_, v)| v).sum(),
            Family::Signed | Family::SignedMagnetic => a_s.row(i).map(|(_, v)| v.abs()).sum(),
        })
        .collect()
}

fn check_positive(g: &SignedDiGraph, degrees: &[f64]) -> Result<(), SpectralError> {
    for (i, &d) in degrees.iter().enumerate() {
        if d == 0.0 {
            return Err(SpectralError::ZeroDegree {
                node: i,
                id: g.node_id(i),
            });
        }
        if d < 0.0 {
            return Err(SpectralError::NonPositiveDegree {
                node: i,
                id: g.node_id(i),
                degree: d,
            });
        }
    }
    Ok(())
}

/// `diag + sign·W` with `W` given by its strict upper triangle, optionally
/// scaled by `D^{-1/2}` on both sides (`degrees` holds `D`). Conjugate
/// entries are mirrored so the result is Hermitian bit for bit.
fn assemble<S: Scalar>(
    n: usize,
    diag: &[f64],
    upper: Vec<(usize, usize, S)>,
    off_sign: f64,
    degrees: Option<&[f64]>,
) -> Csr<S> {
    let mut trip = Vec::with_capacity(n + 2 * upper.len());
    for (i, &d) in diag.iter().enumerate() {
        trip.push((i, i, S::from_re(d)));
    }
    for (i, j, w) in upper {
        let scale = match degrees {
            Some(d) => off_sign / (d[i] * d[j]).sqrt(),
            None => off_sign,
        };
        let v = w.scale(scale);
        trip.push((i, j, v));
        trip.push((j, i, v.conj()));
    }
    Csr::from_triplets(n, n, trip)
        .expect("indices come from the graph")
        .into_hermitian()
        .expect("mirrored construction is Hermitian")
}

/// Builds the requested Laplacian.
///
/// Normalized variants put exactly `1` on the diagonal and `-w_ij/√(d_i d_j)`
/// off it. Directed graphs enter the real families through `A_s`.
pub fn build_laplacian(g: &SignedDiGraph, kind: LaplacianKind) -> Result<Operator, SpectralError> {
    let n = g.n_nodes();
    let a_s = g.symmetrize();
    let family = kind.family();
    let degrees = family_degrees(&a_s, family);
    let scaling: Option<&[f64]> = if kind.normalized() {
        check_positive(g, &degrees)?;
        Some(&degrees)
    } else {
        None
    };
    let diag: Vec<f64> = if kind.normalized() {
        vec![1.0; n]
    } else {
        degrees.clone()
    };
    let q = kind.q().unwrap_or(0.0);
    Ok(if family.is_magnetic() {
        Operator::Complex(assemble(
            n,
            &diag,
            upper_weights::<Complex64>(g, &a_s, q),
            -1.0,
            scaling,
        ))
    } else {
        Operator::Real(assemble(
            n,
            &diag,
            upper_weights::<f64>(g, &a_s, 0.0),
            -1.0,
            scaling,
        ))
    })
}

/// Renormalized aggregation `D̃^{-1/2} (W + I) D̃^{-1/2}` with `D̃ = D̄ + I`
/// and `D̄` the row sums of `|A_s|`. `W = A_s` when `complex_q` is `None`,
/// otherwise `A_s ⊙ Φ^q`.
pub fn renormalized_propagation(
    g: &SignedDiGraph,
    complex_q: Option<f64>,
) -> Result<Operator, SpectralError> {
    if let Some(q) = complex_q {
        if !(0.0..0.25).contains(&q) {
            return Err(SpectralError::QOutOfRange {
                family: Family::SignedMagnetic.name(),
                q,
                limit: 0.25,
            });
        }
    }
    let n = g.n_nodes();
    let a_s = g.symmetrize();
    let tilde: Vec<f64> = family_degrees(&a_s, Family::Signed)
        .into_iter()
        .map(|d| d + 1.0)
        .collect();
    let diag: Vec<f64> = tilde.iter().map(|d| 1.0 / d).collect();
    Ok(match complex_q {
        Some(q) => Operator::Complex(assemble(
            n,
            &diag,
            upper_weights::<Complex64>(g, &a_s, q),
            1.0,
            Some(&tilde),
        )),
        None => Operator::Real(assemble(
            n,
            &diag,
            upper_weights::<f64>(g, &a_s, 0.0),
            1.0,
            Some(&tilde),
        )),
    })
}

/// `(P^Low, P^High) = (I + D̄^{-1/2} A_s D̄^{-1/2}, L̄_n)`.
pub fn pass_filters(g: &SignedDiGraph) -> Result<(CsrMatrix, CsrMatrix), SpectralError> {
    let n = g.n_nodes();
    let a_s = g.symmetrize();
    let degrees = family_degrees(&a_s, Family::Signed);
    check_positive(g, &degrees)?;
    let ones = vec![1.0; n];
    let upper = upper_weights::<f64>(g, &a_s, 0.0);
    let low = assemble(n, &ones, upper.clone(), 1.0, Some(&degrees));
    let high = assemble(n, &ones, upper, -1.0, Some(&degrees));
    Ok((low, high))
}
