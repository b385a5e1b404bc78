//! Segment-adjacency graph construction and centrality scores.
//!
//! Each street segment becomes a node; two segments are adjacent when they
//! share an intersection. Intersections are matched by explicit endpoint
//! node ids when the dataset carries them, and by snapping endpoint
//! coordinates within a tolerance otherwise. Shortest paths are unweighted
//! hop counts throughout.

use std::collections::BTreeMap;
use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::geometry::Point;

/// How a segment references its two end intersections.
///
/// Bundles with an intersection table use node ids; datasets that only
/// carry raw geometry fall back to endpoint coordinates, which the graph
/// builder snaps together within a tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Endpoints {
    Nodes(u64, u64),
    Coords(Point, Point),
}

/// A street segment: the atomic spatial unit carrying features and counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub id: u64,
    pub midpoint: Point,
    pub endpoints: Endpoints,
    pub length: Option<f64>,
}

/// Undirected, loop-free adjacency over segment ids.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentGraph {
    /// Sorted segment ids; the index of an id in this vector is its dense
    /// node index used internally.
    ids: Vec<u64>,
    /// Adjacency lists in dense-index space, each sorted ascending.
    adjacency: Vec<Vec<usize>>,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum GraphError {
    #[error("duplicate segment id {0}")]
    DuplicateSegmentId(u64),
    #[error("cannot build a graph from an empty segment list")]
    EmptyGraph,
    #[error("segment {0} has non-finite midpoint coordinates")]
    NonFiniteMidpoint(u64),
    #[error("snap tolerance must be non-negative, got {0}")]
    NegativeTolerance(f64),
    #[error("segment {0} lacks endpoint node ids while other segments have them; endpoint references must be uniform")]
    MixedEndpointKinds(u64),
    #[error("self-loop on segment {0}")]
    SelfLoop(u64),
    #[error("edge references unknown segment id {0}")]
    UnknownEdgeEndpoint(u64),
}

/// Which centrality a score table holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CentralityKind {
    Betweenness,
    Closeness,
}

/// Per-segment centrality scores.
#[derive(Debug, Clone, PartialEq)]
pub struct CentralityScores {
    pub kind: CentralityKind,
    pub score: BTreeMap<u64, f64>,
}

impl SegmentGraph {
    /// Builds a graph directly from an id set and undirected edge list.
    ///
    /// Self-loops are rejected; duplicate edges collapse. This is the entry
    /// point for synthetic graphs; bundle ingestion goes through
    /// [`build_segment_graph`].
    pub fn from_edges(mut ids: Vec<u64>, edges: &[(u64, u64)]) -> Result<Self, GraphError> {
        if ids.is_empty() {
            return Err(GraphError::EmptyGraph);
        }
        ids.sort_unstable();
        for w in ids.windows(2) {
            if w[0] == w[1] {
                return Err(GraphError::DuplicateSegmentId(w[0]));
            }
        }
        let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); ids.len()];
        for &(a, b) in edges {
            if a == b {
                return Err(GraphError::SelfLoop(a));
            }
            let ia = ids
                .binary_search(&a)
                .map_err(|_| GraphError::UnknownEdgeEndpoint(a))?;
            let ib = ids
                .binary_search(&b)
                .map_err(|_| GraphError::UnknownEdgeEndpoint(b))?;
            adjacency[ia].push(ib);
            adjacency[ib].push(ia);
        }
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
        }
        Ok(SegmentGraph { ids, adjacency })
    }

    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    pub fn ids(&self) -> &[u64] {
        &self.ids
    }

    pub fn contains(&self, id: u64) -> bool {
        self.ids.binary_search(&id).is_ok()
    }

    /// Adjacent segment ids of `id`, ascending. Empty for isolated nodes
    /// and for unknown ids.
    pub fn neighbors(&self, id: u64) -> Vec<u64> {
        match self.ids.binary_search(&id) {
            Ok(idx) => self.adjacency[idx].iter().map(|&j| self.ids[j]).collect(),
            Err(_) => Vec::new(),
        }
    }

    pub fn degree(&self, id: u64) -> usize {
        match self.ids.binary_search(&id) {
            Ok(idx) => self.adjacency[idx].len(),
            Err(_) => 0,
        }
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }
}

/// Builds the segment-adjacency graph.
///
/// Two segments are adjacent iff they share an endpoint: either an equal
/// endpoint node id, or (when node ids are absent) endpoint coordinates
/// within `snap_tolerance` meters of each other. The result is undirected
/// and loop-free; parallel segments sharing both endpoints still yield a
/// single adjacency entry.
pub fn build_segment_graph(
    segments: &[Segment],
    snap_tolerance: f64,
) -> Result<SegmentGraph, GraphError> {
    if segments.is_empty() {
        return Err(GraphError::EmptyGraph);
    }
    if !(snap_tolerance >= 0.0) {
        return Err(GraphError::NegativeTolerance(snap_tolerance));
    }
    let mut ids: Vec<u64> = segments.iter().map(|s| s.id).collect();
    ids.sort_unstable();
    for w in ids.windows(2) {
        if w[0] == w[1] {
            return Err(GraphError::DuplicateSegmentId(w[0]));
        }
    }
    for s in segments {
        if !s.midpoint.is_finite() {
            return Err(GraphError::NonFiniteMidpoint(s.id));
        }
    }

    let index_of = |id: u64| ids.binary_search(&id).expect("id present");
    let n = ids.len();

    // Resolve each segment's endpoints to intersection node keys.
    let has_nodes = segments
        .iter()
        .any(|s| matches!(s.endpoints, Endpoints::Nodes(..)));
    let endpoint_nodes: Vec<(usize, u64, u64)> = if has_nodes {
        let mut out = Vec::with_capacity(n);
        for s in segments {
            match s.endpoints {
                Endpoints::Nodes(a, b) => out.push((index_of(s.id), a, b)),
                Endpoints::Coords(..) => return Err(GraphError::MixedEndpointKinds(s.id)),
            }
        }
        out
    } else {
        snap_endpoints(segments, snap_tolerance, &index_of)
    };

    // Intersection node -> incident segments, then clique those segments.
    let mut incident: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    for &(seg, a, b) in &endpoint_nodes {
        incident.entry(a).or_default().push(seg);
        if b != a {
            incident.entry(b).or_default().push(seg);
        }
    }
    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); n];
    for segs in incident.values() {
        for (i, &u) in segs.iter().enumerate() {
            for &v in &segs[i + 1..] {
                if u != v {
                    adjacency[u].push(v);
                    adjacency[v].push(u);
                }
            }
        }
    }
    for list in &mut adjacency {
        list.sort_unstable();
        list.dedup();
    }
    Ok(SegmentGraph { ids, adjacency })
}

/// Clusters endpoint coordinates within `tol` using a uniform grid and
/// union-find, returning synthetic intersection node keys per segment.
fn snap_endpoints(
    segments: &[Segment],
    tol: f64,
    index_of: &dyn Fn(u64) -> usize,
) -> Vec<(usize, u64, u64)> {
    // One entry per endpoint, ordered by (segment index, endpoint slot).
    let mut points: Vec<(usize, Point)> = Vec::with_capacity(segments.len() * 2);
    for s in segments {
        if let Endpoints::Coords(a, b) = s.endpoints {
            let idx = index_of(s.id);
            points.push((idx, a));
            points.push((idx, b));
        }
    }
    let m = points.len();
    let mut parent: Vec<usize> = (0..m).collect();
    fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let cell = tol.max(1e-12);
    let mut grid: BTreeMap<(i64, i64), Vec<usize>> = BTreeMap::new();
    for (i, (_, p)) in points.iter().enumerate() {
        let cx = (p.x / cell).floor() as i64;
        let cy = (p.y / cell).floor() as i64;
        grid.entry((cx, cy)).or_default().push(i);
    }
    let tol_sq = tol * tol;
    for (i, (_, p)) in points.iter().enumerate() {
        let cx = (p.x / cell).floor() as i64;
        let cy = (p.y / cell).floor() as i64;
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(bucket) = grid.get(&(cx + dx, cy + dy)) {
                    for &j in bucket {
                        if j > i && points[j].1.distance_sq(p) <= tol_sq {
                            let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                            if ri != rj {
                                parent[ri.max(rj)] = ri.min(rj);
                            }
                        }
                    }
                }
            }
        }
    }
    let mut out = Vec::with_capacity(segments.len());
    for pair in (0..m).step_by(2) {
        let seg = points[pair].0;
        let a = find(&mut parent, pair) as u64;
        let b = find(&mut parent, pair + 1) as u64;
        out.push((seg, a, b));
    }
    out
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum CentralityError {
    #[error("centrality requires a non-empty graph")]
    EmptyGraph,
}

/// Computes betweenness or closeness centrality for every node.
///
/// Betweenness sums, over unordered pairs `{s, t}` with `s != t != v`, the
/// fraction of shortest `s`-`t` paths passing through `v`; scores are raw
/// (unnormalized) since ranking-based placement is invariant to positive
/// scaling. Closeness is `(n_c - 1) / sum of distances` within the node's
/// connected component of size `n_c`; nodes in singleton components score
/// zero.
pub fn centrality_scores(
    graph: &SegmentGraph,
    kind: CentralityKind,
) -> Result<CentralityScores, CentralityError> {
    if graph.node_count() == 0 {
        return Err(CentralityError::EmptyGraph);
    }
    let values = match kind {
        CentralityKind::Betweenness => betweenness(graph),
        CentralityKind::Closeness => closeness(graph),
    };
    let score = graph
        .ids
        .iter()
        .copied()
        .zip(values)
        .collect::<BTreeMap<u64, f64>>();
    Ok(CentralityScores { kind, score })
}

/// Brandes' accumulation over every source; the ordered-pair totals are
/// halved at the end to count each unordered pair once.
fn betweenness(graph: &SegmentGraph) -> Vec<f64> {
    let n = graph.node_count();
    let adj = &graph.adjacency;
    let mut scores = vec![0.0f64; n];
    let mut stack: Vec<usize> = Vec::with_capacity(n);
    let mut pred: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut sigma = vec![0.0f64; n];
    let mut dist = vec![-1i64; n];
    let mut delta = vec![0.0f64; n];
    let mut queue: VecDeque<usize> = VecDeque::new();

    for s in 0..n {
        stack.clear();
        queue.clear();
        for v in 0..n {
            pred[v].clear();
            sigma[v] = 0.0;
            dist[v] = -1;
            delta[v] = 0.0;
        }
        sigma[s] = 1.0;
        dist[s] = 0;
        queue.push_back(s);
        while let Some(v) = queue.pop_front() {
            stack.push(v);
            for &w in &adj[v] {
                if dist[w] < 0 {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
                if dist[w] == dist[v] + 1 {
                    sigma[w] += sigma[v];
                    pred[w].push(v);
                }
            }
        }
        while let Some(w) = stack.pop() {
            for &v in &pred[w] {
                delta[v] += (sigma[v] / sigma[w]) * (1.0 + delta[w]);
            }
            if w != s {
                scores[w] += delta[w];
            }
        }
    }
    for v in &mut scores {
        *v /= 2.0;
    }
    scores
}

fn closeness(graph: &SegmentGraph) -> Vec<f64> {
    let n = graph.node_count();
    let adj = &graph.adjacency;
    let mut scores = vec![0.0f64; n];
    let mut dist = vec![-1i64; n];
    let mut queue: VecDeque<usize> = VecDeque::new();
    for v in 0..n {
        for d in dist.iter_mut() {
            *d = -1;
        }
        dist[v] = 0;
        queue.clear();
        queue.push_back(v);
        let mut reachable = 0u64;
        let mut total = 0u64;
        while let Some(u) = queue.pop_front() {
            for &w in &adj[u] {
                if dist[w] < 0 {
                    dist[w] = dist[u] + 1;
                    reachable += 1;
                    total += dist[w] as u64;
                    queue.push_back(w);
                }
            }
        }
        scores[v] = if reachable == 0 {
            0.0
        } else {
            reachable as f64 / total as f64
        };
    }
    scores
}
