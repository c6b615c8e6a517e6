//! Category-balanced batching and in-batch triplet selection.
//!
//! Triplet ids are dataset indices: the anchor id addresses the anchor-modality
//! view, positive and negative ids address the other view. Distance matrices
//! handed to the selectors are indexed by position within the batch, rows for
//! anchors and columns for candidates.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

/// Triplets per anchor drawn by the random strategy.
pub const DEFAULT_RANDOM_PER_ANCHOR: usize = 150;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MiningStrategy {
    #[default]
    BatchAll,
    BatchHard,
    BatchSemiHard,
    Random,
}

impl std::str::FromStr for MiningStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "batch-all" => Ok(MiningStrategy::BatchAll),
            "batch-hard" => Ok(MiningStrategy::BatchHard),
            "batch-semi-hard" => Ok(MiningStrategy::BatchSemiHard),
            "random" => Ok(MiningStrategy::Random),
            other => Err(Error::InvalidInput(format!(
                "unknown mining strategy {other:?}, expected batch-all | batch-hard | batch-semi-hard | random"
            ))),
        }
    }
}

impl std::fmt::Display for MiningStrategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MiningStrategy::BatchAll => "batch-all",
            MiningStrategy::BatchHard => "batch-hard",
            MiningStrategy::BatchSemiHard => "batch-semi-hard",
            MiningStrategy::Random => "random",
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TripletBatch {
    pub anchor_ids: Vec<usize>,
    pub positive_ids: Vec<usize>,
    pub negative_ids: Vec<usize>,
}

impl TripletBatch {
    pub fn len(&self) -> usize {
        self.anchor_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.anchor_ids.is_empty()
    }

    pub fn push(&mut self, a: usize, p: usize, n: usize) {
        self.anchor_ids.push(a);
        self.positive_ids.push(p);
        self.negative_ids.push(n);
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        (0..self.len()).map(|t| (self.anchor_ids[t], self.positive_ids[t], self.negative_ids[t]))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NegativeClass {
    Easy,
    SemiHard,
    Hard,
}

/// Boundary values go to the harder class.
pub fn classify_negative(d_ap: f64, d_an: f64, margin: f64) -> NegativeClass {
    if d_an <= d_ap {
        NegativeClass::Hard
    } else if d_an <= d_ap + margin {
        NegativeClass::SemiHard
    } else {
        NegativeClass::Easy
    }
}

/// Split sample indices into `batch_count` category-balanced batches.
///
/// Batch `b` has `floor(N/B)` members plus one if `b < N mod B`. Every class
/// count in every batch is the floor or ceiling of its proportional share.
/// Batches are returned with ascending indices.
pub fn make_balanced_batches(labels: &[usize], batch_count: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    let n = labels.len();
    if batch_count == 0 || batch_count > n {
        return Err(Error::InvalidInput(format!(
            "batch count {batch_count} must be in 1..={n}"
        )));
    }
    let class_count = labels.iter().max().map_or(0, |m| m + 1);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); class_count];
    for (i, &l) in labels.iter().enumerate() {
        members[l].push(i);
    }
    let mut rng = seed::rng(seed);
    for m in &mut members {
        m.shuffle(&mut rng);
    }

    let base = n / batch_count;
    let rem = n % batch_count;
    let sizes: Vec<usize> = (0..batch_count).map(|b| base + usize::from(b < rem)).collect();
    let class_sizes: Vec<usize> = members.iter().map(Vec::len).collect();
    let counts = apportion(&sizes, &class_sizes, n)?;

    let mut batches = vec![Vec::new(); batch_count];
    for (c, m) in members.iter().enumerate() {
        let mut next = 0;
        for (b, batch) in batches.iter_mut().enumerate() {
            let take = counts[b][c];
            batch.extend_from_slice(&m[next..next + take]);
            next += take;
        }
    }
    for b in &mut batches {
        b.sort_unstable();
    }
    Ok(batches)
}

/// Integer table with the given row and column sums whose entries are the
/// floor or ceiling of `row_b · col_c / total`.
///
/// Such a rounding always exists; it is found as a max-flow that distributes
/// the leftover units of each column over rows with fractional shares.
fn apportion(rows: &[usize], cols: &[usize], total: usize) -> Result<Vec<Vec<usize>>> {
    let (nb, nc) = (rows.len(), cols.len());
    let mut table = vec![vec![0; nc]; nb];
    let mut row_left: Vec<usize> = rows.to_vec();
    let mut col_left: Vec<usize> = cols.to_vec();
    let mut fractional = vec![vec![false; nc]; nb];
    for b in 0..nb {
        for c in 0..nc {
            let prod = rows[b] * cols[c];
            table[b][c] = prod / total;
            fractional[b][c] = prod % total != 0;
            row_left[b] -= table[b][c];
            col_left[c] -= table[b][c];
        }
    }
    let need: usize = col_left.iter().sum();
    if need == 0 {
        return Ok(table);
    }

    // Nodes: 0 source, 1..=nc classes, nc+1..=nc+nb batches, last sink.
    let source = 0;
    let sink = nc + nb + 1;
    let mut graph = FlowGraph::new(sink + 1);
    for c in 0..nc {
        graph.add_edge(source, 1 + c, col_left[c]);
    }
    let mut cell_edges = Vec::new();
    for b in 0..nb {
        for c in 0..nc {
            if fractional[b][c] {
                cell_edges.push((b, c, graph.add_edge(1 + c, 1 + nc + b, 1)));
            }
        }
        graph.add_edge(1 + nc + b, sink, row_left[b]);
    }
    let flow = graph.max_flow(source, sink);
    if flow != need {
        return Err(Error::Numerical(format!(
            "balanced batching failed: placed {flow} of {need} leftover samples"
        )));
    }
    for (b, c, e) in cell_edges {
        table[b][c] += graph.flow_on(e);
    }
    Ok(table)
}

struct FlowGraph {
    adj: Vec<Vec<usize>>,
    to: Vec<usize>,
    cap: Vec<usize>,
}

impl FlowGraph {
    fn new(nodes: usize) -> Self {
        FlowGraph {
            adj: vec![Vec::new(); nodes],
            to: Vec::new(),
            cap: Vec::new(),
        }
    }

    fn add_edge(&mut self, u: usize, v: usize, cap: usize) -> usize {
        let id = self.to.len();
        self.adj[u].push(id);
        self.to.push(v);
        self.cap.push(cap);
        self.adj[v].push(id + 1);
        self.to.push(u);
        self.cap.push(0);
        id
    }

    fn flow_on(&self, edge: usize) -> usize {
        self.cap[edge ^ 1]
    }

    /// Edmonds–Karp.
    fn max_flow(&mut self, s: usize, t: usize) -> usize {
        let mut total = 0;
        loop {
            let mut via = vec![usize::MAX; self.adj.len()];
            let mut queue = std::collections::VecDeque::from([s]);
            let mut seen = vec![false; self.adj.len()];
            seen[s] = true;
            while let Some(u) = queue.pop_front() {
                if u == t {
                    break;
                }
                for &e in &self.adj[u] {
                    let v = self.to[e];
                    if !seen[v] && self.cap[e] > 0 {
                        seen[v] = true;
                        via[v] = e;
                        queue.push_back(v);
                    }
                }
            }
            if !seen[t] {
                return total;
            }
            let mut push = usize::MAX;
            let mut v = t;
            while v != s {
                let e = via[v];
                push = push.min(self.cap[e]);
                v = self.to[e ^ 1];
            }
            let mut v = t;
            while v != s {
                let e = via[v];
                self.cap[e] -= push;
                self.cap[e ^ 1] += push;
                v = self.to[e ^ 1];
            }
            total += push;
        }
    }
}

/// Every (a, p, n) in the batch with `a ≠ p` sharing a label and `n` from another label.
pub fn select_batch_all(batch: &[usize], labels: &[usize]) -> TripletBatch {
    let mut out = TripletBatch::default();
    for &a in batch {
        for &p in batch {
            if p == a || labels[p] != labels[a] {
                continue;
            }
            for &n in batch {
                if labels[n] != labels[a] {
                    out.push(a, p, n);
                }
            }
        }
    }
    out
}

fn check_distances(batch: &[usize], distances: &DMatrix<f64>) -> Result<()> {
    if distances.shape() != (batch.len(), batch.len()) {
        return Err(Error::DimensionMismatch(format!(
            "distance matrix is {:?} for a batch of {}",
            distances.shape(),
            batch.len()
        )));
    }
    Ok(())
}

/// Per anchor: the farthest positive and the closest negative; ties go to the lower index.
pub fn select_batch_hard(batch: &[usize], labels: &[usize], distances: &DMatrix<f64>) -> Result<TripletBatch> {
    check_distances(batch, distances)?;
    let mut out = TripletBatch::default();
    for (i, &a) in batch.iter().enumerate() {
        let mut pos: Option<(usize, f64)> = None;
        let mut neg: Option<(usize, f64)> = None;
        for (j, &cand) in batch.iter().enumerate() {
            let d = distances[(i, j)];
            if labels[cand] == labels[a] {
                if j != i && pos.is_none_or(|(_, best)| d > best) {
                    pos = Some((j, d));
                }
            } else if neg.is_none_or(|(_, best)| d < best) {
                neg = Some((j, d));
            }
        }
        if let (Some((p, _)), Some((n, _))) = (pos, neg) {
            out.push(a, batch[p], batch[n]);
        }
    }
    Ok(out)
}

/// Every (a, p) combined with each semi-hard negative; when there is none,
/// the closest easy negative stands in.
pub fn select_batch_semi_hard(
    batch: &[usize],
    labels: &[usize],
    distances: &DMatrix<f64>,
    margin: f64,
) -> Result<TripletBatch> {
    check_distances(batch, distances)?;
    let mut out = TripletBatch::default();
    for (i, &a) in batch.iter().enumerate() {
        for (j, &p) in batch.iter().enumerate() {
            if j == i || labels[p] != labels[a] {
                continue;
            }
            let d_ap = distances[(i, j)];
            let mut found = false;
            let mut easiest_fallback: Option<(usize, f64)> = None;
            for (k, &n) in batch.iter().enumerate() {
                if labels[n] == labels[a] {
                    continue;
                }
                let d_an = distances[(i, k)];
                match classify_negative(d_ap, d_an, margin) {
                    NegativeClass::SemiHard => {
                        out.push(a, p, n);
                        found = true;
                    }
                    NegativeClass::Easy => {
                        if easiest_fallback.is_none_or(|(_, best)| d_an < best) {
                            easiest_fallback = Some((n, d_an));
                        }
                    }
                    NegativeClass::Hard => {}
                }
            }
            if !found {
                if let Some((n, _)) = easiest_fallback {
                    out.push(a, p, n);
                }
            }
        }
    }
    Ok(out)
}

/// `per_anchor` uniformly drawn (positive, negative) pairs for every anchor
/// that has at least one positive and one negative.
pub fn select_random(labels: &[usize], per_anchor: usize, seed: u64) -> Result<TripletBatch> {
    if per_anchor == 0 {
        return Err(Error::InvalidInput("per_anchor must be at least 1".into()));
    }
    let class_count = labels.iter().max().map_or(0, |m| m + 1);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); class_count];
    for (i, &l) in labels.iter().enumerate() {
        members[l].push(i);
    }
    let mut rng = seed::rng(seed);
    let mut out = TripletBatch::default();
    let n = labels.len();
    for (a, &la) in labels.iter().enumerate() {
        let same = &members[la];
        let negatives = n - same.len();
        if same.len() < 2 || negatives == 0 {
            continue;
        }
        for _ in 0..per_anchor {
            // draw among same-class members other than the anchor itself
            let mut p = same[rng.random_range(0..same.len() - 1)];
            if p == a {
                p = *same.last().expect("non-empty");
            }
            let mut r = rng.random_range(0..negatives);
            let mut neg = 0;
            for (c, m) in members.iter().enumerate() {
                if c == la {
                    continue;
                }
                if r < m.len() {
                    neg = m[r];
                    break;
                }
                r -= m.len();
            }
            out.push(a, p, neg);
        }
    }
    Ok(out)
}
