use std::collections::HashMap;
use std::io::{BufRead, Write};

use log::warn;

use super::{Edge, GraphError, Sign, SignedDiGraph};

/// A parsed edge list together with the clean-up it needed.
#[derive(Debug, Clone)]
pub struct LoadedEdgeList {
    pub graph: SignedDiGraph,
    /// Repeated `(src, dst)` pairs; the last sign won.
    pub duplicates: usize,
    /// Self-loop lines that were skipped.
    pub self_loops: usize,
}

/// Parses `src<sep>dst<sep>sign` lines, `sep` being whitespace or a comma.
///
/// Only the sign of the third field is kept; further fields are ignored.
/// Lines starting with `#` or `%` and blank lines are skipped. Node ids are
/// assigned dense indices in order of first appearance.
pub fn load_edge_list<R: BufRead>(reader: R, directed: bool) -> Result<LoadedEdgeList, GraphError> {
    let mut ids: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut edges: Vec<Edge> = Vec::new();
    let mut position: HashMap<(usize, usize), usize> = HashMap::new();
    let mut duplicates = 0;
    let mut self_loops = 0;

    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = trimmed
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|f| !f.is_empty())
            .collect();
        if fields.len() < 3 {
            return Err(GraphError::Parse {
                line: lineno,
                message: format!("expected `src dst sign`, found {} field(s)", fields.len()),
            });
        }
        let raw: f64 = fields[2].parse().map_err(|_| GraphError::Parse {
            line: lineno,
            message: format!("sign {:?} is not a number", fields[2]),
        })?;
        if raw.is_nan() {
            return Err(GraphError::Parse {
                line: lineno,
                message: "sign is NaN".into(),
            });
        }
        let sign = Sign::of(raw).ok_or(GraphError::ZeroSign { line: lineno })?;
        if fields[0] == fields[1] {
            self_loops += 1;
            continue;
        }
        let mut intern = |name: &str| -> usize {
            if let Some(&i) = index.get(name) {
                return i;
            }
            let i = ids.len();
            ids.push(name.to_string());
            index.insert(name.to_string(), i);
            i
        };
        let src = intern(fields[0]);
        let dst = intern(fields[1]);
        let key = if directed {
            (src, dst)
        } else {
            (src.min(dst), src.max(dst))
        };
        match position.get(&key) {
            Some(&at) => {
                duplicates += 1;
                edges[at].sign = sign;
            }
            None => {
                position.insert(key, edges.len());
                edges.push(Edge::new(src, dst, sign));
            }
        }
    }
    if duplicates > 0 {
        warn!("edge list: {duplicates} duplicate edge(s); kept the last sign");
    }
    if self_loops > 0 {
        warn!("edge list: dropped {self_loops} self-loop(s)");
    }
    let graph = SignedDiGraph::new(ids.len(), directed, edges)?.with_node_ids(ids)?;
    Ok(LoadedEdgeList {
        graph,
        duplicates,
        self_loops,
    })
}

/// Writes `src dst sign` lines using external ids, in stored edge order.
pub fn write_edge_list<W: Write>(g: &SignedDiGraph, mut out: W) -> std::io::Result<()> {
    for e in g.edges() {
        let s = match e.sign {
            Sign::Positive => "1",
            Sign::Negative => "-1",
        };
        writeln!(out, "{} {} {}", g.node_id(e.src), g.node_id(e.dst), s)?;
    }
    Ok(())
}
