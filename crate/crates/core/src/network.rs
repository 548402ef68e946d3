//! Erdős–Rényi interaction graphs.
//!
//! Adjacency is stored in compressed sparse row form: `offsets[u]..offsets[u + 1]`
//! indexes the neighbors of `u` in one flat array, so a uniform neighbor draw is
//! two loads and one bounded integer draw.

use std::collections::HashSet;
use std::collections::VecDeque;
use std::io::{BufRead, Write};

use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("invalid network parameters: {0}")]
    Param(String),
    #[error("node {node} out of range for a graph of {node_count} nodes")]
    Index { node: usize, node_count: usize },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Undirected simple graph; every edge appears in both endpoint lists.
#[derive(Debug, Clone)]
pub struct Graph {
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegreeStats {
    pub mean: f64,
    pub min: usize,
    pub max: usize,
    pub isolated: usize,
}

impl Graph {
    /// Builds a graph from an unordered edge list.
    ///
    /// Rejects self-loops, duplicate edges (in either orientation) and
    /// out-of-range endpoints.
    pub fn from_edges(node_count: usize, edges: &[(usize, usize)]) -> Result<Self, NetworkError> {
        if node_count == 0 {
            return Err(NetworkError::Param("graph needs at least one node".into()));
        }
        if node_count > u32::MAX as usize {
            return Err(NetworkError::Param(format!("{node_count} nodes exceeds u32 indexing")));
        }
        let mut seen = HashSet::with_capacity(edges.len());
        for &(u, v) in edges {
            for node in [u, v] {
                if node >= node_count {
                    return Err(NetworkError::Index { node, node_count });
                }
            }
            if u == v {
                return Err(NetworkError::Param(format!("self-loop at node {u}")));
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(NetworkError::Param(format!("duplicate edge {u},{v}")));
            }
        }
        Ok(Self::from_simple_edges(node_count, edges))
    }

    /// CSR construction; caller guarantees a simple edge set.
    fn from_simple_edges(node_count: usize, edges: &[(usize, usize)]) -> Self {
        let mut offsets = vec![0usize; node_count + 1];
        for &(u, v) in edges {
            offsets[u + 1] += 1;
            offsets[v + 1] += 1;
        }
        for i in 1..offsets.len() {
            offsets[i] += offsets[i - 1];
        }
        let mut fill = offsets.clone();
        let mut neighbors = vec![0u32; offsets[node_count]];
        for &(u, v) in edges {
            neighbors[fill[u]] = v as u32;
            fill[u] += 1;
            neighbors[fill[v]] = u as u32;
            fill[v] += 1;
        }
        Graph { offsets, neighbors }
    }

    pub fn empty(node_count: usize) -> Result<Self, NetworkError> {
        Self::from_edges(node_count, &[])
    }

    pub fn node_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.len() / 2
    }

    #[inline(always)]
    pub fn neighbors(&self, u: usize) -> &[u32] {
        &self.neighbors[self.offsets[u]..self.offsets[u + 1]]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.offsets[u + 1] - self.offsets[u]
    }

    /// Sorted list of edges `(u, v)` with `u < v`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for u in 0..self.node_count() {
            out.extend(
                self.neighbors(u)
                    .iter()
                    .map(|&v| v as usize)
                    .filter(|&v| v > u)
                    .map(|v| (u, v)),
            );
        }
        out.sort_unstable();
        out
    }

    /// Uniform draw from the neighbors of `u`, `None` if `u` is isolated.
    pub fn random_neighbor<R: Rng + ?Sized>(
        &self,
        u: usize,
        rng: &mut R,
    ) -> Result<Option<usize>, NetworkError> {
        if u >= self.node_count() {
            return Err(NetworkError::Index {
                node: u,
                node_count: self.node_count(),
            });
        }
        Ok(self.random_neighbor_unchecked(u, rng))
    }

    #[inline(always)]
    pub(crate) fn random_neighbor_unchecked<R: Rng + ?Sized>(
        &self,
        u: usize,
        rng: &mut R,
    ) -> Option<usize> {
        let lo = self.offsets[u];
        let hi = self.offsets[u + 1];
        if lo == hi {
            return None;
        }
        Some(self.neighbors[rng.random_range(lo..hi)] as usize)
    }

    pub fn degree_stats(&self) -> DegreeStats {
        let n = self.node_count();
        let (mut min, mut max, mut isolated) = (usize::MAX, 0, 0);
        for u in 0..n {
            let k = self.degree(u);
            min = min.min(k);
            max = max.max(k);
            if k == 0 {
                isolated += 1;
            }
        }
        DegreeStats {
            mean: self.neighbors.len() as f64 / n as f64,
            min,
            max,
            isolated,
        }
    }

    /// Nodes of the largest connected component, ascending. Ties go to the
    /// component containing the lowest node index.
    pub fn giant_component(&self) -> Vec<usize> {
        let n = self.node_count();
        let mut label = vec![usize::MAX; n];
        let mut best: Vec<usize> = Vec::new();
        let mut queue = VecDeque::new();
        for start in 0..n {
            if label[start] != usize::MAX {
                continue;
            }
            let mut members = vec![start];
            label[start] = start;
            queue.push_back(start);
            while let Some(u) = queue.pop_front() {
                for &v in self.neighbors(u) {
                    let v = v as usize;
                    if label[v] == usize::MAX {
                        label[v] = start;
                        members.push(v);
                        queue.push_back(v);
                    }
                }
            }
            if members.len() > best.len() {
                best = members;
            }
        }
        best.sort_unstable();
        best
    }
}

impl PartialEq for Graph {
    /// Equality as edge sets; neighbor order inside a list does not matter.
    fn eq(&self, other: &Self) -> bool {
        self.node_count() == other.node_count()
            && self.edge_count() == other.edge_count()
            && self.edges() == other.edges()
    }
}

impl Eq for Graph {}

/// Edge probability for `G(n, p)` with the requested mean degree.
pub fn edge_probability(n: usize, avg_degree: f64) -> Result<f64, NetworkError> {
    if n < 2 {
        return Err(NetworkError::Param(format!("need at least 2 nodes, got {n}")));
    }
    if !avg_degree.is_finite() || avg_degree < 0.0 {
        return Err(NetworkError::Param(format!(
            "average degree must be a finite non-negative number, got {avg_degree}"
        )));
    }
    let p = avg_degree / (n - 1) as f64;
    if p > 1.0 {
        return Err(NetworkError::Param(format!(
            "average degree {avg_degree} needs edge probability {p:.4} > 1 for {n} nodes"
        )));
    }
    Ok(p)
}

/// Binomial random graph `G(n, p)` with `p = avg_degree / (n - 1)`.
///
/// Uses geometric skipping over the lower-triangular pair sequence
/// (Batagelj & Brandes), so the cost is `O(n + m)` rather than `O(n^2)`.
/// Each pair is still included independently with probability `p`.
pub fn generate_er<R: Rng + ?Sized>(
    n: usize,
    avg_degree: f64,
    rng: &mut R,
) -> Result<Graph, NetworkError> {
    let p = edge_probability(n, avg_degree)?;
    if n > u32::MAX as usize {
        return Err(NetworkError::Param(format!("{n} nodes exceeds u32 indexing")));
    }
    let mut edges = Vec::with_capacity((p * (n * (n - 1) / 2) as f64 * 1.01) as usize + 16);
    if p >= 1.0 {
        for v in 1..n {
            edges.extend((0..v).map(|w| (w, v)));
        }
    } else if p > 0.0 {
        let log_q = (1.0 - p).ln();
        let (mut v, mut w) = (1usize, -1i64);
        while v < n {
            let r: f64 = rng.random();
            let skip = ((1.0 - r).ln() / log_q).floor();
            // Skips past the whole remaining triangle end generation.
            if skip >= (n * n) as f64 {
                break;
            }
            w += 1 + skip as i64;
            while w >= v as i64 && v < n {
                w -= v as i64;
                v += 1;
            }
            if v < n {
                edges.push((w as usize, v));
            }
        }
    }
    Ok(Graph::from_simple_edges(n, &edges))
}

/// Writes `# nodes=<N>` followed by one sorted `u,v` line per edge.
pub fn write_edge_list<W: Write>(g: &Graph, mut sink: W) -> Result<(), NetworkError> {
    writeln!(sink, "# nodes={}", g.node_count())?;
    for (u, v) in g.edges() {
        writeln!(sink, "{u},{v}")?;
    }
    sink.flush()?;
    Ok(())
}

/// Parses the edge-list format written by [`write_edge_list`].
///
/// Lines starting with `#` are comments; one of them must be the
/// `# nodes=<N>` header and it must precede the first edge. Edge endpoints may
/// come in either order.
pub fn read_edge_list<R: BufRead>(source: R) -> Result<Graph, NetworkError> {
    let mut node_count: Option<usize> = None;
    let mut edges = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in source.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let text = line.trim();
        let parse_err = |msg: String| NetworkError::Parse { line: line_no, msg };
        if text.is_empty() {
            continue;
        }
        if let Some(comment) = text.strip_prefix('#') {
            if let Some(value) = comment.trim().strip_prefix("nodes=") {
                if node_count.is_some() {
                    return Err(parse_err("repeated `# nodes=` header".into()));
                }
                let n = value
                    .trim()
                    .parse::<usize>()
                    .map_err(|e| parse_err(format!("bad node count `{value}`: {e}")))?;
                if n == 0 || n > u32::MAX as usize {
                    return Err(parse_err(format!("node count {n} out of range")));
                }
                node_count = Some(n);
            }
            continue;
        }
        let n = node_count.ok_or_else(|| parse_err("edge before `# nodes=<N>` header".into()))?;
        let (a, b) = text
            .split_once(',')
            .ok_or_else(|| parse_err(format!("expected `u,v`, got `{text}`")))?;
        let parse_node = |s: &str| {
            s.trim()
                .parse::<usize>()
                .map_err(|e| parse_err(format!("bad node index `{}`: {e}", s.trim())))
        };
        let (u, v) = (parse_node(a)?, parse_node(b)?);
        if u >= n || v >= n {
            return Err(parse_err(format!("edge {u},{v} references a node >= {n}")));
        }
        if u == v {
            return Err(parse_err(format!("self-loop {u},{v}")));
        }
        let key = (u.min(v), u.max(v));
        if !seen.insert(key) {
            return Err(parse_err(format!("duplicate edge {u},{v}")));
        }
        edges.push(key);
    }
    let n = node_count.ok_or_else(|| NetworkError::Parse {
        line: 0,
        msg: "missing `# nodes=<N>` header".into(),
    })?;
    Ok(Graph::from_simple_edges(n, &edges))
}
