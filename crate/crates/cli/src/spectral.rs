use std::fmt::Write as _;

use log::warn;
use rand::Rng;
use serde::Serialize;
use spectra_core::graph::{ssbm_generate, write_edge_list, SignedDiGraph, SsbmParams};
use spectra_core::linalg::Which;
use spectra_core::rng::seeded;
use spectra_core::spectral::{
    adjusted_rand_index, build_laplacian, magnetic_cluster, verify_operator_psd,
    verify_operator_range, Family, LaplacianKind, Operator, OperatorSpectrum,
};
use spectra_core::tasks::load_labels;

use crate::error::{CliError, Exit};
use crate::io::{create_dir, load_graph, maybe_drop_isolated, sibling, to_json, write_text};
use crate::{
    ClusterArgs, EigArgs, GraphInput, LaplacianArgs, OperatorArgs, SsbmArgs, VerifyArgs, WhichArg,
};

const DEFAULT_Q: f64 = 0.125;

fn input_graph(a: &GraphInput) -> Result<SignedDiGraph, CliError> {
    let g = load_graph(&a.input, !a.undirected)?;
    Ok(maybe_drop_isolated(g, a.drop_isolated))
}

fn has_negative(g: &SignedDiGraph) -> bool {
    g.count_signs().1 > 0
}

/// Resolves the operator flags. Magnetic kinds default to `q = 0.125`, and
/// signed input narrows the phase range to the signed one.
fn laplacian_kind(op: &OperatorArgs, g: &SignedDiGraph) -> Result<LaplacianKind, CliError> {
    let family = op.kind.family();
    let q = if family.is_magnetic() {
        Some(op.q.unwrap_or(DEFAULT_Q))
    } else {
        op.q
    };
    if let (Family::Magnetic, Some(q)) = (family, q) {
        let limit = Family::SignedMagnetic.q_limit().expect("magnetic family");
        if has_negative(g) && q >= limit {
            return Err(CliError::domain(format!(
                "q = {q}: the input has negative edges, which requires q < {limit}"
            )));
        }
    }
    Ok(LaplacianKind::new(family, op.normalized, q)?)
}

fn coordinate_text(op: &Operator) -> String {
    let mut s = String::new();
    match op {
        Operator::Real(m) => {
            s.push_str("i,j,re\n");
            for (i, j, v) in m.iter() {
                writeln!(s, "{i},{j},{v}").expect("string write");
            }
        }
        Operator::Complex(m) => {
            s.push_str("i,j,re,im\n");
            for (i, j, v) in m.iter() {
                writeln!(s, "{i},{j},{},{}", v.re, v.im).expect("string write");
            }
        }
    }
    s
}

pub fn laplacian(a: &LaplacianArgs) -> Result<(), CliError> {
    let g = input_graph(&a.graph)?;
    let kind = laplacian_kind(&a.op, &g)?;
    let op = build_laplacian(&g, kind)?;
    write_text(&a.out, &coordinate_text(&op))
}

pub fn eig(a: &EigArgs) -> Result<(), CliError> {
    let g = input_graph(&a.graph)?;
    let kind = laplacian_kind(&a.op, &g)?;
    let op = build_laplacian(&g, kind)?;
    let spec = match a.k {
        Some(0) => return Err(CliError::domain("--k must be at least 1")),
        Some(k) => {
            let which = match a.which {
                WhichArg::Smallest => Which::Smallest,
                WhichArg::Largest => Which::Largest,
            };
            op.partial_spectrum(k, which)?
        }
        None => op.full_spectrum()?,
    };
    let mut values = String::from("index,eigenvalue\n");
    for (i, v) in spec.eigenvalues().iter().enumerate() {
        writeln!(values, "{i},{v}").expect("string write");
    }
    let mut vectors = String::from("node");
    let k = spec.eigenvalues().len();
    for c in 0..k {
        match spec {
            OperatorSpectrum::Real(_) => write!(vectors, ",re_{c}"),
            OperatorSpectrum::Complex(_) => write!(vectors, ",re_{c},im_{c}"),
        }
        .expect("string write");
    }
    vectors.push('\n');
    for i in 0..g.n_nodes() {
        vectors.push_str(&g.node_id(i));
        for c in 0..k {
            match &spec {
                OperatorSpectrum::Real(s) => write!(vectors, ",{}", s.eigenvectors[[i, c]]),
                OperatorSpectrum::Complex(s) => {
                    let z = s.eigenvectors[[i, c]];
                    write!(vectors, ",{},{}", z.re, z.im)
                }
            }
            .expect("string write");
        }
        vectors.push('\n');
    }
    create_dir(&a.out)?;
    write_text(&a.out.join("eigenvalues.csv"), &values)?;
    write_text(&a.out.join("eigenvectors.csv"), &vectors)
}

pub fn ssbm(a: &SsbmArgs) -> Result<(), CliError> {
    let params = SsbmParams {
        nodes_per_cluster: a.nodes_per_cluster,
        n_clusters: a.clusters,
        p_intra: a.p_intra,
        p_inter: a.p_inter,
        flip_prob: a.flip,
        directed: a.directed,
        seed: a.seed,
    };
    let (g, labels) = ssbm_generate(&params)?;
    let mut edges = Vec::new();
    write_edge_list(&g, &mut edges).expect("writing to memory");
    write_text(
        &a.out,
        &String::from_utf8(edges).expect("edge list is UTF-8"),
    )?;
    write_text(&sibling(&a.out, "labels.csv"), &labels_csv(&g, &labels))
}

fn labels_csv(g: &SignedDiGraph, labels: &[usize]) -> String {
    let mut s = String::from("node,label\n");
    for (i, l) in labels.iter().enumerate() {
        writeln!(s, "{},{l}", g.node_id(i)).expect("string write");
    }
    s
}

#[derive(Serialize)]
struct ClusterSummary {
    n_nodes: usize,
    k: usize,
    q: f64,
    seed: u64,
    eigenvalue: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    ari: Option<f64>,
}

pub fn cluster(a: &ClusterArgs) -> Result<(), CliError> {
    let g = load_graph(&a.input, !a.undirected)?;
    let truth = a
        .labels
        .as_deref()
        .map(|p| load_labels(p, &g))
        .transpose()?;
    let res = magnetic_cluster(&g, a.q, a.k, a.seed)?;
    let mut embedding = String::from("node,re,im\n");
    for i in 0..g.n_nodes() {
        writeln!(
            embedding,
            "{},{},{}",
            g.node_id(i),
            res.embedding[[i, 0]],
            res.embedding[[i, 1]]
        )
        .expect("string write");
    }
    write_text(&a.out, &labels_csv(&g, &res.labels))?;
    write_text(&sibling(&a.out, "embedding.csv"), &embedding)?;
    let ari = truth
        .map(|t| adjusted_rand_index(&res.labels, &t))
        .transpose()?;
    let summary = ClusterSummary {
        n_nodes: g.n_nodes(),
        k: a.k,
        q: a.q,
        seed: a.seed,
        eigenvalue: res.eigenvalue,
        ari,
    };
    print!("{}", to_json(&summary));
    Ok(())
}

#[derive(Serialize)]
struct Check {
    kind: &'static str,
    normalized: bool,
    q: Option<f64>,
    property: &'static str,
    min_eigenvalue: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_eigenvalue: Option<f64>,
    pass: bool,
}

#[derive(Serialize)]
struct VerifySummary {
    checks: usize,
    failures: usize,
}

/// Families whose PSD property holds on `g`: the unsigned ones only apply
/// when no edge is negative.
fn applicable_families(g: &SignedDiGraph) -> Vec<Family> {
    let mut out = vec![Family::Signed, Family::SignedMagnetic];
    if !has_negative(g) {
        out.extend([Family::Combinatorial, Family::Magnetic]);
    }
    out
}

pub fn verify(a: &VerifyArgs) -> Result<(), CliError> {
    let g = input_graph(&a.graph)?;
    if a.trials == 0 {
        warn!("--trials 0: no checks run");
        print!(
            "{}",
            to_json(&VerifySummary {
                checks: 0,
                failures: 0
            })
        );
        return Ok(());
    }
    let mut rng = seeded(a.seed);
    let mut checks = Vec::new();
    for family in applicable_families(&g) {
        let qs: Vec<Option<f64>> = match family.q_limit() {
            Some(limit) => (0..a.trials)
                .map(|_| Some(rng.random::<f64>() * limit))
                .collect(),
            None => vec![None],
        };
        for q in qs {
            for normalized in [false, true] {
                let kind = LaplacianKind::new(family, normalized, q)?;
                let mut op = build_laplacian(&g, kind)?;
                if a.inject_fault {
                    op = op.with_negated_diagonal();
                }
                let psd = verify_operator_psd(&op)?;
                checks.push(Check {
                    kind: family.name(),
                    normalized,
                    q,
                    property: "psd",
                    min_eigenvalue: psd.min_eigenvalue,
                    max_eigenvalue: None,
                    pass: psd.pass,
                });
                let range_applies =
                    normalized && matches!(family, Family::Signed | Family::SignedMagnetic);
                if range_applies {
                    let r = verify_operator_range(&op)?;
                    checks.push(Check {
                        kind: family.name(),
                        normalized,
                        q,
                        property: "range",
                        min_eigenvalue: r.min_eigenvalue,
                        max_eigenvalue: Some(r.max_eigenvalue),
                        pass: r.pass,
                    });
                }
            }
        }
    }
    let failures: Vec<&Check> = checks.iter().filter(|c| !c.pass).collect();
    for f in &failures {
        eprintln!(
            "violation: {}",
            serde_json::to_string(f).expect("serializable")
        );
    }
    print!(
        "{}",
        to_json(&VerifySummary {
            checks: checks.len(),
            failures: failures.len()
        })
    );
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::new(
            Exit::Violation,
            format!(
                "{} of {} property checks failed",
                failures.len(),
                checks.len()
            ),
        ))
    }
}
