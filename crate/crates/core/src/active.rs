//! Active components: vertex sets swept out by above-threshold activity that
//! spreads across edges between consecutive time steps.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, VertexSet};
use crate::series::TimeSeriesMatrix;

/// Default activity threshold on travel-time-index inputs.
pub const DEFAULT_ALPHA: f64 = 1.7;

/// Node budget for the materialized spatio-temporal graph.
pub const ORACLE_MAX_NODES: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActiveComponent {
    pub vertices: VertexSet,
    /// First time index at which a member was active.
    pub birth: usize,
    /// Last time index at which a member was active.
    pub death: usize,
}

/// Row-major `N × T` boolean activity matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActivityMask {
    vertices: usize,
    steps: usize,
    bits: Vec<bool>,
}

impl ActivityMask {
    pub fn get(&self, vertex: usize, t: usize) -> bool {
        self.bits[vertex * self.steps + t]
    }

    pub fn vertices(&self) -> usize {
        self.vertices
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

/// `(i, t)` is active iff `y[i, t] ≥ alpha`.
pub fn active_mask(y: &TimeSeriesMatrix, alpha: f64) -> ActivityMask {
    let (n, t) = (y.vertices(), y.len());
    let v = y.values();
    let bits = (0..n * t).map(|k| v[(k / t, k % t)] >= alpha).collect();
    ActivityMask { vertices: n, steps: t, bits }
}

fn check_dims(g: &Graph, y: &TimeSeriesMatrix) -> Result<()> {
    if g.order() != y.vertices() {
        return Err(Error::DimensionMismatch { expected: g.order(), found: y.vertices() });
    }
    Ok(())
}

struct OpenComponent {
    /// Members active at the most recent step; the only vertices later
    /// activity can attach to.
    frontier: Vec<usize>,
    vertices: Vec<usize>,
    birth: usize,
    death: usize,
}

impl OpenComponent {
    fn close(mut self) -> ActiveComponent {
        self.vertices.sort_unstable();
        self.vertices.dedup();
        ActiveComponent { vertices: VertexSet::from_unsorted(self.vertices), birth: self.birth, death: self.death }
    }
}

struct DisjointSets(Vec<usize>);

impl DisjointSets {
    fn new(n: usize) -> Self {
        Self((0..n).collect())
    }

    fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.0[root] != root {
            root = self.0[root];
        }
        let mut cur = x;
        while self.0[cur] != root {
            let next = self.0[cur];
            self.0[cur] = root;
            cur = next;
        }
        root
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = (ra.min(rb), ra.max(rb));
            self.0[hi] = lo;
        }
    }
}

/// Sweeps time once, keeping the components still active at the previous
/// step. At each step the active subgraph is split into connected pieces; a
/// piece joins every open component whose previous-step members lie in its
/// closed one-hop neighbourhood, and components no piece joins are emitted.
/// Components still open after the last step are flushed.
///
/// Only active vertices are recorded, so the result is the spatial
/// projection of the weakly connected components of the strong product of
/// the graph with the time path, restricted to active nodes.
pub fn extract_active_components(g: &Graph, y: &TimeSeriesMatrix, alpha: f64) -> Result<Vec<ActiveComponent>> {
    check_dims(g, y)?;
    let n = g.order();
    let mask = active_mask(y, alpha);
    let mut done = Vec::new();
    let mut open: Vec<OpenComponent> = Vec::new();
    // owner[v] = index into `open` of the component v belonged to at t − 1.
    let mut owner: Vec<Option<usize>> = vec![None; n];
    let mut piece_of = vec![usize::MAX; n];
    let mut stack = Vec::new();

    for t in 0..mask.steps() {
        // Connected pieces of the active subgraph at t.
        let mut pieces: Vec<Vec<usize>> = Vec::new();
        for s in 0..n {
            if !mask.get(s, t) || piece_of[s] != usize::MAX {
                continue;
            }
            let id = pieces.len();
            piece_of[s] = id;
            stack.push(s);
            let mut members = Vec::new();
            while let Some(v) = stack.pop() {
                members.push(v);
                for &w in g.neighbors(v) {
                    if mask.get(w, t) && piece_of[w] == usize::MAX {
                        piece_of[w] = id;
                        stack.push(w);
                    }
                }
            }
            pieces.push(members);
        }

        // Union open components (0..p) with pieces (p..p + pieces.len()).
        let p = open.len();
        let mut sets = DisjointSets::new(p + pieces.len());
        let mut linked = vec![false; p];
        for (k, piece) in pieces.iter().enumerate() {
            for &u in piece {
                for &w in std::iter::once(&u).chain(g.neighbors(u)) {
                    if let Some(j) = owner[w] {
                        sets.union(j, p + k);
                        linked[j] = true;
                    }
                }
            }
        }

        let mut groups: BTreeMap<usize, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
        for j in 0..p {
            if linked[j] {
                groups.entry(sets.find(j)).or_default().0.push(j);
            }
        }
        for k in 0..pieces.len() {
            groups.entry(sets.find(p + k)).or_default().1.push(k);
        }

        let mut previous: Vec<Option<OpenComponent>> = open.drain(..).map(Some).collect();
        for (j, slot) in previous.iter_mut().enumerate() {
            if !linked[j] {
                done.push(slot.take().expect("unlinked component").close());
            }
        }
        for (olds, news) in groups.into_values() {
            let mut vertices = Vec::new();
            let mut birth = t;
            for j in olds {
                let c = previous[j].take().expect("component consumed twice");
                birth = birth.min(c.birth);
                vertices.extend(c.vertices);
            }
            let mut frontier = Vec::new();
            for k in news {
                frontier.extend_from_slice(&pieces[k]);
            }
            vertices.extend_from_slice(&frontier);
            open.push(OpenComponent { frontier, vertices, birth, death: t });
        }

        owner.iter_mut().for_each(|o| *o = None);
        for (j, c) in open.iter().enumerate() {
            for &v in &c.frontier {
                owner[v] = Some(j);
            }
        }
        for piece in &pieces {
            for &v in piece {
                piece_of[v] = usize::MAX;
            }
        }
    }
    done.extend(open.into_iter().map(OpenComponent::close));
    Ok(done)
}

/// Reference construction: materializes the spatio-temporal strong product
/// over active nodes `(i, t)` with edges `(i,t)–(j,t)`, `(i,t)–(i,t+1)` and
/// `(i,t)–(j,t+1)` for every spatial edge, then projects each weakly
/// connected component onto its spatial vertices.
pub fn strong_product_oracle(g: &Graph, y: &TimeSeriesMatrix, alpha: f64) -> Result<Vec<ActiveComponent>> {
    check_dims(g, y)?;
    let (n, steps) = (g.order(), y.len());
    let size = n.saturating_mul(steps);
    if size > ORACLE_MAX_NODES {
        return Err(Error::TooLarge { size, limit: ORACLE_MAX_NODES });
    }
    let mask = active_mask(y, alpha);
    let mut node_of = vec![usize::MAX; size];
    let mut nodes = Vec::new();
    for t in 0..steps {
        for i in 0..n {
            if mask.get(i, t) {
                node_of[t * n + i] = nodes.len();
                nodes.push((i, t));
            }
        }
    }
    let spatial: Vec<(usize, usize)> = g.edges().iter().filter(|e| e.src != e.dst).map(|e| (e.src, e.dst)).collect();
    let mut edges = Vec::new();
    let mut link = |a: usize, b: usize| {
        if a != usize::MAX && b != usize::MAX {
            edges.push((a, b, 1.0));
        }
    };
    for t in 0..steps {
        for &(i, j) in &spatial {
            link(node_of[t * n + i], node_of[t * n + j]);
            if t + 1 < steps {
                link(node_of[t * n + i], node_of[(t + 1) * n + j]);
                link(node_of[t * n + j], node_of[(t + 1) * n + i]);
            }
        }
        if t + 1 < steps {
            for i in 0..n {
                link(node_of[t * n + i], node_of[(t + 1) * n + i]);
            }
        }
    }
    let product = Graph::new(nodes.len(), &edges, false)?;
    Ok(product
        .weakly_connected_components()
        .into_iter()
        .map(|comp| {
            let times = comp.iter().map(|&k| nodes[k].1);
            let birth = times.clone().min().unwrap_or(0);
            let death = times.max().unwrap_or(0);
            ActiveComponent { vertices: comp.iter().map(|&k| nodes[k].0).collect(), birth, death }
        })
        .collect())
}

/// Keeps components with at least `k` vertices, preserving order.
pub fn filter_min_size(acs: Vec<ActiveComponent>, k: usize) -> Vec<ActiveComponent> {
    acs.into_iter().filter(|ac| ac.vertices.len() >= k).collect()
}
