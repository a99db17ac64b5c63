use std::collections::HashSet;

use log::warn;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::TaskError;
use crate::graph::{Sign, SignedDiGraph};
use crate::rng::seeded;

/// How many labelled nodes go to training.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KnownLabels {
    Ratio(f64),
    PerClass(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeSplit {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Stratified split: training nodes drawn per class, then 90% of the rest
/// to test and the remainder to validation.
///
/// With a ratio, the training total is `⌊ratio·N⌋`; each class first gets
/// `⌊ratio·n_c⌋` and the leftover slots go one at a time to the classes with
/// the largest fractional parts (ties to the lower class index).
pub fn split_nodes(
    labels: &[usize],
    known: KnownLabels,
    seed: u64,
) -> Result<NodeSplit, TaskError> {
    let n = labels.len();
    if n == 0 {
        return Err(TaskError::Split("no labelled nodes".into()));
    }
    let n_classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (i, &c) in labels.iter().enumerate() {
        members[c].push(i);
    }
    let quota: Vec<usize> = match known {
        KnownLabels::PerClass(k) => members
            .iter()
            .map(|m| if m.is_empty() { 0 } else { k })
            .collect(),
        KnownLabels::Ratio(r) => {
            let total = (r * n as f64).floor() as usize;
            let exact: Vec<f64> = members.iter().map(|m| r * m.len() as f64).collect();
            let mut quota: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
            let mut order: Vec<usize> =
                (0..n_classes).filter(|&c| !members[c].is_empty()).collect();
            order.sort_by(|&a, &b| {
                (exact[b] - exact[b].floor())
                    .total_cmp(&(exact[a] - exact[a].floor()))
                    .then(a.cmp(&b))
            });
            let mut left = total.saturating_sub(quota.iter().sum());
            for &c in order.iter().cycle() {
                if left == 0 {
                    break;
                }
                quota[c] += 1;
                left -= 1;
            }
            quota
        }
    };
    for (c, m) in members.iter().enumerate() {
        if !m.is_empty() && quota[c] == 0 {
            return Err(TaskError::Split(format!(
                "class {c} gets no training nodes; raise the known-label ratio"
            )));
        }
        if quota[c] > m.len() {
            return Err(TaskError::Split(format!(
                "class {c} has {} nodes, fewer than the {} requested",
                m.len(),
                quota[c]
            )));
        }
    }
    let mut rng = seeded(seed);
    let mut train = Vec::new();
    let mut rest = Vec::new();
    for (c, m) in members.iter_mut().enumerate() {
        m.shuffle(&mut rng);
        train.extend_from_slice(&m[..quota[c]]);
        rest.extend_from_slice(&m[quota[c]..]);
    }
    rest.shuffle(&mut rng);
    let n_test = (0.9 * rest.len() as f64).floor() as usize;
    let mut test = rest[..n_test].to_vec();
    let mut val = rest[n_test..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    val.sort_unstable();
    Ok(NodeSplit { train, val, test })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LinkLabel {
    #[serde(rename = "+")]
    Positive,
    #[serde(rename = "-")]
    Negative,
    #[serde(rename = "?")]
    NoLink,
}

impl LinkLabel {
    /// Column in the edge classifier output.
    pub fn index(self) -> usize {
        match self {
            LinkLabel::Positive => 0,
            LinkLabel::Negative => 1,
            LinkLabel::NoLink => 2,
        }
    }

    pub fn from_index(i: usize) -> LinkLabel {
        match i {
            0 => LinkLabel::Positive,
            1 => LinkLabel::Negative,
            _ => LinkLabel::NoLink,
        }
    }

    pub fn of_sign(s: Sign) -> LinkLabel {
        match s {
            Sign::Positive => LinkLabel::Positive,
            Sign::Negative => LinkLabel::Negative,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LinkTriplet {
    pub u: usize,
    pub v: usize,
    pub label: LinkLabel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeSplit {
    /// Training links followed by sampled no-link pairs.
    pub train: Vec<LinkTriplet>,
    /// True links only.
    pub test: Vec<LinkTriplet>,
}

impl EdgeSplit {
    pub fn train_links(&self) -> impl Iterator<Item = &LinkTriplet> {
        self.train.iter().filter(|t| t.label != LinkLabel::NoLink)
    }
}

/// Shuffles the links, keeps `round(train_ratio·m)` for training and the rest
/// for test, then samples `round(neg_factor·|train links|)` ordered no-link
/// pairs uniformly among pairs with no edge in either direction.
pub fn split_edges(
    g: &SignedDiGraph,
    train_ratio: f64,
    neg_factor: f64,
    seed: u64,
) -> Result<EdgeSplit, TaskError> {
    let m = g.n_edges();
    if m < 2 {
        return Err(TaskError::Split(format!(
            "link-sign splitting needs at least 2 edges, found {m}"
        )));
    }
    let (pos, neg) = g.count_signs();
    if pos < 2 || neg < 2 {
        warn!("graph has {pos} positive and {neg} negative edges; sign classes may be missing from a split");
    }
    let mut rng = seeded(seed);
    let mut order: Vec<usize> = (0..m).collect();
    order.shuffle(&mut rng);
    let n_train = ((train_ratio * m as f64).round() as usize).clamp(1, m - 1);
    let triplet = |k: usize| {
        let e = g.edges()[k];
        LinkTriplet {
            u: e.src,
            v: e.dst,
            label: LinkLabel::of_sign(e.sign),
        }
    };
    let mut train: Vec<LinkTriplet> = order[..n_train].iter().map(|&k| triplet(k)).collect();
    let test: Vec<LinkTriplet> = order[n_train..].iter().map(|&k| triplet(k)).collect();

    let n_neg = (neg_factor * n_train as f64).round() as usize;
    let n = g.n_nodes();
    let linked = g.pair_set();
    let ordered_pairs = n.saturating_mul(n.saturating_sub(1));
    let unavailable: usize = 2 * linked.iter().filter(|&&(a, b)| a != b).count();
    let is_linked = |u: usize, v: usize| linked.contains(&(u.min(v), u.max(v)));
    let available = ordered_pairs.saturating_sub(unavailable);
    if n_neg > available {
        return Err(TaskError::Split(format!(
            "graph too dense: {n_neg} no-link pairs requested but only {available} exist"
        )));
    }
    let mut seen: HashSet<(usize, usize)> = HashSet::with_capacity(n_neg);
    if n_neg * 2 > available {
        // Dense regime: enumerate the candidates and shuffle.
        let mut pool: Vec<(usize, usize)> = (0..n)
            .flat_map(|u| (0..n).map(move |v| (u, v)))
            .filter(|&(u, v)| u != v && !is_linked(u, v))
            .collect();
        pool.shuffle(&mut rng);
        for &(u, v) in &pool[..n_neg] {
            train.push(LinkTriplet {
                u,
                v,
                label: LinkLabel::NoLink,
            });
        }
    } else {
        while seen.len() < n_neg {
            let u = rng.random_range(0..n);
            let v = rng.random_range(0..n);
            if u != v && !is_linked(u, v) && seen.insert((u, v)) {
                train.push(LinkTriplet {
                    u,
                    v,
                    label: LinkLabel::NoLink,
                });
            }
        }
    }
    Ok(EdgeSplit { train, test })
}

/// Moves `round(ratio·|train links|)` true links out of `train` into a
/// validation set. No-link pairs stay in training.
pub fn carve_validation(
    train: &[LinkTriplet],
    ratio: f64,
    seed: u64,
) -> (Vec<LinkTriplet>, Vec<LinkTriplet>) {
    let links: Vec<usize> = (0..train.len())
        .filter(|&k| train[k].label != LinkLabel::NoLink)
        .collect();
    let n_val = ((ratio * links.len() as f64).round() as usize).min(links.len().saturating_sub(1));
    let mut chosen = links;
    chosen.shuffle(&mut seeded(seed));
    let held: HashSet<usize> = chosen[..n_val].iter().copied().collect();
    let mut kept = Vec::with_capacity(train.len() - n_val);
    let mut val = Vec::with_capacity(n_val);
    for (k, t) in train.iter().enumerate() {
        if held.contains(&k) {
            val.push(*t);
        } else {
            kept.push(*t);
        }
    }
    (kept, val)
}
