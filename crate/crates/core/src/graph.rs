//! Weighted graphs, shift operators and the set/connectivity primitives the
//! clustering code is built on.

use std::collections::{BTreeMap, VecDeque};
use std::path::Path;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Hop distance returned when two vertex sets are not connected.
pub const UNREACHABLE: usize = usize::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub src: usize,
    pub dst: usize,
    pub weight: f64,
}

/// A directed or undirected weighted graph over vertices `0..n`.
///
/// Parallel edges are collapsed at construction by summing weights. For
/// undirected graphs `(u, v)` and `(v, u)` are the same edge and are stored
/// once with `src < dst`.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n: usize,
    directed: bool,
    edges: Vec<Edge>,
    labels: Option<Vec<String>>,
    neighbors: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, Default)]
pub struct GraphBuilder {
    allow_self_loops: bool,
    labels: Option<Vec<String>>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn allow_self_loops(mut self, allow: bool) -> Self {
        self.allow_self_loops = allow;
        self
    }

    pub fn labels(mut self, labels: Vec<String>) -> Self {
        self.labels = Some(labels);
        self
    }

    pub fn build(self, n: usize, edges: &[(usize, usize, f64)], directed: bool) -> Result<Graph> {
        if let Some(labels) = &self.labels {
            if labels.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: labels.len() });
            }
        }
        let mut merged: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for &(src, dst, weight) in edges {
            for v in [src, dst] {
                if v >= n {
                    return Err(Error::VertexOutOfRange { vertex: v, n });
                }
            }
            if !weight.is_finite() || weight < 0.0 {
                return Err(Error::InvalidWeight { src, dst, weight });
            }
            if src == dst && !self.allow_self_loops {
                return Err(Error::SelfLoop(src));
            }
            let key = if directed { (src, dst) } else { (src.min(dst), src.max(dst)) };
            *merged.entry(key).or_insert(0.0) += weight;
        }
        let edges: Vec<Edge> = merged
            .into_iter()
            .map(|((src, dst), weight)| Edge { src, dst, weight })
            .collect();

        let mut neighbors = vec![Vec::new(); n];
        for e in &edges {
            if e.src != e.dst {
                neighbors[e.src].push(e.dst);
                neighbors[e.dst].push(e.src);
            }
        }
        for list in &mut neighbors {
            list.sort_unstable();
            list.dedup();
        }
        Ok(Graph { n, directed, edges, labels: self.labels, neighbors })
    }
}

impl Graph {
    /// Builds a validated graph with the default builder settings.
    pub fn new(n: usize, edges: &[(usize, usize, f64)], directed: bool) -> Result<Self> {
        GraphBuilder::new().build(n, edges, directed)
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// External label of vertex `v`, falling back to its numeric id.
    pub fn label(&self, v: usize) -> String {
        match &self.labels {
            Some(labels) => labels[v].clone(),
            None => v.to_string(),
        }
    }

    /// Neighbours of `v` in the undirected skeleton, sorted, without `v`.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[v]
    }

    pub fn adjacency(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.n, self.n);
        for e in &self.edges {
            a[(e.src, e.dst)] += e.weight;
            if !self.directed && e.src != e.dst {
                a[(e.dst, e.src)] += e.weight;
            }
        }
        a
    }

    /// Combinatorial Laplacian of a directed graph, `½(D_out + D_in − A − Aᵀ)`.
    /// Reduces to `D − A` on undirected graphs.
    pub fn directed_laplacian(&self) -> DMatrix<f64> {
        let a = self.adjacency();
        let n = self.n;
        let mut l = DMatrix::zeros(n, n);
        for i in 0..n {
            let out_deg: f64 = a.row(i).iter().sum();
            let in_deg: f64 = a.column(i).iter().sum();
            l[(i, i)] = 0.5 * (out_deg + in_deg);
        }
        for i in 0..n {
            for j in 0..n {
                l[(i, j)] -= 0.5 * (a[(i, j)] + a[(j, i)]);
            }
        }
        l
    }

    /// Subgraph induced by `set`, relabelled to `0..|set|` in set order.
    pub fn induced_subgraph(&self, set: &VertexSet) -> Result<Subgraph> {
        if set.is_empty() {
            return Err(Error::EmptyVertexSet);
        }
        set.validate(self.n)?;
        let mut local = vec![usize::MAX; self.n];
        for (k, &v) in set.iter().enumerate() {
            local[v] = k;
        }
        let edges: Vec<(usize, usize, f64)> = self
            .edges
            .iter()
            .filter(|e| local[e.src] != usize::MAX && local[e.dst] != usize::MAX)
            .map(|e| (local[e.src], local[e.dst], e.weight))
            .collect();
        let mut builder = GraphBuilder::new().allow_self_loops(true);
        if let Some(labels) = &self.labels {
            builder = builder.labels(set.iter().map(|&v| labels[v].clone()).collect());
        }
        let graph = builder.build(set.len(), &edges, self.directed)?;
        Ok(Subgraph { graph, mapping: set.members().to_vec() })
    }

    /// Maximal sets connected when edge directions are ignored, ordered by
    /// smallest member.
    pub fn weakly_connected_components(&self) -> Vec<VertexSet> {
        let mut seen = vec![false; self.n];
        let mut out = Vec::new();
        let mut queue = VecDeque::new();
        for start in 0..self.n {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            queue.push_back(start);
            let mut members = Vec::new();
            while let Some(v) = queue.pop_front() {
                members.push(v);
                for &w in &self.neighbors[v] {
                    if !seen[w] {
                        seen[w] = true;
                        queue.push_back(w);
                    }
                }
            }
            out.push(VertexSet::from_unsorted(members));
        }
        out
    }

    /// Hop distance from every vertex to the nearest member of `sources`
    /// on the undirected skeleton.
    pub fn hop_distances_from(&self, sources: &VertexSet) -> Vec<usize> {
        let mut dist = vec![UNREACHABLE; self.n];
        let mut queue = VecDeque::new();
        for &s in sources.iter() {
            dist[s] = 0;
            queue.push_back(s);
        }
        while let Some(v) = queue.pop_front() {
            let next = dist[v] + 1;
            for &w in &self.neighbors[v] {
                if dist[w] == UNREACHABLE {
                    dist[w] = next;
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// Minimum unweighted hop distance between any member of `a` and any
    /// member of `b`, or [`UNREACHABLE`].
    pub fn set_distance(&self, a: &VertexSet, b: &VertexSet) -> Result<usize> {
        if a.is_empty() || b.is_empty() {
            return Err(Error::EmptyVertexSet);
        }
        a.validate(self.n)?;
        b.validate(self.n)?;
        let mut in_b = vec![false; self.n];
        for &v in b.iter() {
            in_b[v] = true;
        }
        let mut dist = vec![UNREACHABLE; self.n];
        let mut queue = VecDeque::new();
        for &s in a.iter() {
            if in_b[s] {
                return Ok(0);
            }
            dist[s] = 0;
            queue.push_back(s);
        }
        while let Some(v) = queue.pop_front() {
            for &w in &self.neighbors[v] {
                if dist[w] == UNREACHABLE {
                    dist[w] = dist[v] + 1;
                    if in_b[w] {
                        return Ok(dist[w]);
                    }
                    queue.push_back(w);
                }
            }
        }
        Ok(UNREACHABLE)
    }

    /// True when every vertex reaches every other along directed edges
    /// (undirected graphs: connected). The empty graph is not connected.
    pub fn is_strongly_connected(&self) -> bool {
        adjacency_strongly_connected(&self.adjacency())
    }

    /// Stable content hash of the graph (order, direction, labels, edges).
    pub fn content_hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(format!("n={};directed={}\n", self.n, self.directed));
        if let Some(labels) = &self.labels {
            for l in labels {
                hasher.update(l.as_bytes());
                hasher.update(b"\n");
            }
        }
        for e in &self.edges {
            hasher.update(format!("{} {} {:016x}\n", e.src, e.dst, e.weight.to_bits()));
        }
        hasher
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    /// Reads a `src,dst,weight` edge list. Vertex labels are mapped to dense
    /// ids in first-seen order.
    pub fn from_csv_path(path: impl AsRef<Path>, directed: bool) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::from_csv_reader(file, directed)
    }

    pub fn from_csv_reader<R: std::io::Read>(reader: R, directed: bool) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let expected = ["src", "dst", "weight"];
        if headers.len() != 3 || headers.iter().zip(expected).any(|(h, e)| h != e) {
            return Err(Error::Parse(format!("edge list header must be src,dst,weight, found {:?}", headers)));
        }
        let mut ids: BTreeMap<String, usize> = BTreeMap::new();
        let mut labels = Vec::new();
        let mut edges = Vec::new();
        let mut intern = |label: &str, labels: &mut Vec<String>| -> usize {
            if let Some(&id) = ids.get(label) {
                return id;
            }
            let id = labels.len();
            ids.insert(label.to_string(), id);
            labels.push(label.to_string());
            id
        };
        for (line, record) in rdr.records().enumerate() {
            let record = record?;
            if record.len() != 3 {
                return Err(Error::Parse(format!("edge row {} has {} fields", line + 2, record.len())));
            }
            let src = intern(&record[0], &mut labels);
            let dst = intern(&record[1], &mut labels);
            let weight: f64 = record[2]
                .parse()
                .map_err(|_| Error::Parse(format!("bad weight {:?} on row {}", &record[2], line + 2)))?;
            edges.push((src, dst, weight));
        }
        GraphBuilder::new().labels(labels.clone()).build(labels.len(), &edges, directed)
    }

    /// Map from external label to vertex id.
    pub fn label_index(&self) -> BTreeMap<String, usize> {
        (0..self.n).map(|v| (self.label(v), v)).collect()
    }
}

/// Strong connectivity of the directed graph given by the nonzero pattern of
/// a square matrix. A 1×1 matrix counts as strongly connected.
pub fn adjacency_strongly_connected(a: &DMatrix<f64>) -> bool {
    let n = a.nrows();
    if n == 0 {
        return false;
    }
    let reach = |forward: bool| -> bool {
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for w in 0..n {
                let weight = if forward { a[(v, w)] } else { a[(w, v)] };
                if weight != 0.0 && !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen.into_iter().all(|s| s)
    };
    reach(true) && reach(false)
}

/// An induced subgraph together with the original id of each local vertex.
#[derive(Debug, Clone)]
pub struct Subgraph {
    pub graph: Graph,
    pub mapping: Vec<usize>,
}

/// Sorted, duplicate-free collection of vertex ids.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexSet(Vec<usize>);

impl VertexSet {
    /// Builds a set from ids that must be distinct.
    pub fn new(mut ids: Vec<usize>) -> Result<Self> {
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateVertex(w[0]));
        }
        Ok(Self(ids))
    }

    /// Builds a set, silently dropping repeated ids.
    pub fn from_unsorted(mut ids: Vec<usize>) -> Self {
        ids.sort_unstable();
        ids.dedup();
        Self(ids)
    }

    pub fn members(&self) -> &[usize] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, usize> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, v: usize) -> bool {
        self.0.binary_search(&v).is_ok()
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        match self.0.last() {
            Some(&v) if v >= n => Err(Error::VertexOutOfRange { vertex: v, n }),
            _ => Ok(()),
        }
    }

    pub fn union(&self, other: &VertexSet) -> VertexSet {
        let mut out = Vec::with_capacity(self.len() + other.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].cmp(&other.0[j]) {
                std::cmp::Ordering::Less => {
                    out.push(self.0[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(other.0[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    out.push(self.0[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.0[i..]);
        out.extend_from_slice(&other.0[j..]);
        VertexSet(out)
    }

    pub fn intersects(&self, other: &VertexSet) -> bool {
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].cmp(&other.0[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => return true,
            }
        }
        false
    }
}

impl FromIterator<usize> for VertexSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        Self::from_unsorted(iter.into_iter().collect())
    }
}

impl<'a> IntoIterator for &'a VertexSet {
    type Item = &'a usize;
    type IntoIter = std::slice::Iter<'a, usize>;
    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

/// Undirected G(n, p) graph with unit weights. Pairs are visited in
/// lexicographic order and each draws one uniform from a ChaCha8 stream
/// seeded with `seed`, so the result is reproducible across platforms.
pub fn erdos_renyi(n: usize, p: f64, seed: u64) -> Result<Graph> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("edge probability {p} outside [0, 1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random::<f64>() < p {
                edges.push((i, j, 1.0));
            }
        }
    }
    Graph::new(n, &edges, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set(ids: &[usize]) -> VertexSet {
        VertexSet::new(ids.to_vec()).unwrap()
    }

    #[test]
    fn single_undirected_edge_is_symmetric() {
        let g = Graph::new(2, &[(0, 1, 1.0)], false).unwrap();
        assert_eq!(g.adjacency(), DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
    }

    #[test]
    fn duplicate_edges_sum_weights() {
        let g = Graph::new(3, &[(0, 1, 1.0), (0, 1, 1.0)], false).unwrap();
        assert_eq!(g.edges(), &[Edge { src: 0, dst: 1, weight: 2.0 }]);
        // Reversed duplicates on an undirected graph are the same edge.
        let g = Graph::new(3, &[(0, 1, 1.0), (1, 0, 0.5)], false).unwrap();
        assert_eq!(g.adjacency()[(1, 0)], 1.5);
    }

    #[test]
    fn build_rejects_bad_input() {
        assert!(matches!(Graph::new(2, &[(0, 5, 1.0)], false), Err(Error::VertexOutOfRange { vertex: 5, n: 2 })));
        assert!(matches!(Graph::new(2, &[(0, 1, -1.0)], false), Err(Error::InvalidWeight { .. })));
        assert!(matches!(Graph::new(2, &[(0, 1, f64::NAN)], false), Err(Error::InvalidWeight { .. })));
        assert!(matches!(Graph::new(2, &[(1, 1, 1.0)], false), Err(Error::SelfLoop(1))));
        assert!(GraphBuilder::new().allow_self_loops(true).build(2, &[(1, 1, 1.0)], false).is_ok());
    }

    #[test]
    fn adjacency_examples() {
        let g = Graph::new(2, &[(0, 1, 3.0)], true).unwrap();
        assert_eq!(g.adjacency(), DMatrix::from_row_slice(2, 2, &[0.0, 3.0, 0.0, 0.0]));
        let empty = Graph::new(2, &[], false).unwrap();
        assert_eq!(empty.adjacency(), DMatrix::zeros(2, 2));
    }

    #[test]
    fn laplacian_examples() {
        let g = Graph::new(2, &[(0, 1, 1.0)], true).unwrap();
        assert_eq!(g.directed_laplacian(), DMatrix::from_row_slice(2, 2, &[0.5, -0.5, -0.5, 0.5]));
        let g = Graph::new(2, &[(0, 1, 1.0)], false).unwrap();
        assert_eq!(g.directed_laplacian(), DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]));
        let g = Graph::new(3, &[], true).unwrap();
        assert_eq!(g.directed_laplacian(), DMatrix::zeros(3, 3));
    }

    #[test]
    fn induced_subgraph_examples() {
        let tri = Graph::new(3, &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)], false).unwrap();
        let sub = tri.induced_subgraph(&set(&[0, 1])).unwrap();
        assert_eq!(sub.graph.edges().len(), 1);
        assert_eq!(sub.mapping, vec![0, 1]);

        let star = Graph::new(4, &[(0, 1, 1.0), (0, 2, 1.0), (0, 3, 1.0)], false).unwrap();
        let sub = star.induced_subgraph(&set(&[1, 2])).unwrap();
        assert_eq!(sub.graph.order(), 2);
        assert!(sub.graph.edges().is_empty());

        assert!(matches!(star.induced_subgraph(&VertexSet::default()), Err(Error::EmptyVertexSet)));
        assert!(matches!(star.induced_subgraph(&set(&[7])), Err(Error::VertexOutOfRange { .. })));
    }

    #[test]
    fn induced_subgraph_keeps_labels() {
        let g = GraphBuilder::new()
            .labels(vec!["a".into(), "b".into(), "c".into()])
            .build(3, &[(0, 2, 1.0)], true)
            .unwrap();
        let sub = g.induced_subgraph(&set(&[0, 2])).unwrap();
        assert_eq!(sub.graph.labels().unwrap(), &["a".to_string(), "c".to_string()]);
        assert_eq!(sub.graph.adjacency()[(0, 1)], 1.0);
    }

    #[test]
    fn components_examples() {
        let g = Graph::new(4, &[(0, 1, 1.0), (2, 3, 1.0)], false).unwrap();
        assert_eq!(g.weakly_connected_components(), vec![set(&[0, 1]), set(&[2, 3])]);
        let path = Graph::new(4, &[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)], false).unwrap();
        assert_eq!(path.weakly_connected_components(), vec![set(&[0, 1, 2, 3])]);
        let chain = Graph::new(3, &[(0, 1, 1.0), (1, 2, 1.0)], true).unwrap();
        assert_eq!(chain.weakly_connected_components(), vec![set(&[0, 1, 2])]);
    }

    #[test]
    fn set_distance_examples() {
        let g = Graph::new(5, &[(0, 1, 1.0), (1, 2, 1.0), (3, 4, 1.0)], false).unwrap();
        assert_eq!(g.set_distance(&set(&[0, 1]), &set(&[1, 2])).unwrap(), 0);
        assert_eq!(g.set_distance(&set(&[0]), &set(&[1])).unwrap(), 1);
        assert_eq!(g.set_distance(&set(&[0]), &set(&[2])).unwrap(), 2);
        assert_eq!(g.set_distance(&set(&[0]), &set(&[4])).unwrap(), UNREACHABLE);
        assert!(matches!(g.set_distance(&VertexSet::default(), &set(&[0])), Err(Error::EmptyVertexSet)));
    }

    #[test]
    fn set_distance_ignores_direction() {
        let g = Graph::new(3, &[(0, 1, 1.0), (2, 1, 1.0)], true).unwrap();
        assert_eq!(g.set_distance(&set(&[0]), &set(&[2])).unwrap(), 2);
    }

    #[test]
    fn erdos_renyi_extremes() {
        assert!(erdos_renyi(10, 0.0, 1).unwrap().edges().is_empty());
        assert_eq!(erdos_renyi(10, 1.0, 1).unwrap().edges().len(), 45);
        assert!(erdos_renyi(10, 1.5, 1).is_err());
        assert_eq!(erdos_renyi(20, 0.3, 9).unwrap(), erdos_renyi(20, 0.3, 9).unwrap());
    }

    #[test]
    fn erdos_renyi_mean_edge_count() {
        // Expected count 0.06 * 2016 = 120.96.
        let total: usize = (0..1000).map(|s| erdos_renyi(64, 0.06, s).unwrap().edges().len()).sum();
        let mean = total as f64 / 1000.0;
        assert!((mean - 120.96).abs() <= 12.096, "mean edge count {mean}");
    }

    #[test]
    fn csv_ingestion_maps_labels_in_first_seen_order() {
        let text = "src,dst,weight\nB,A,1.5\nA,C,2\nB,A,0.5\n";
        let g = Graph::from_csv_reader(text.as_bytes(), true).unwrap();
        assert_eq!(g.labels().unwrap(), &["B".to_string(), "A".to_string(), "C".to_string()]);
        assert_eq!(g.adjacency()[(0, 1)], 2.0);
        assert_eq!(g.adjacency()[(1, 2)], 2.0);
        assert!(Graph::from_csv_reader("a,b,c\n".as_bytes(), true).is_err());
        assert!(Graph::from_csv_reader("src,dst,weight\nA,B,x\n".as_bytes(), true).is_err());
    }

    #[test]
    fn content_hash_tracks_edges() {
        let a = Graph::new(3, &[(0, 1, 1.0)], true).unwrap();
        let b = Graph::new(3, &[(0, 1, 1.0)], true).unwrap();
        let c = Graph::new(3, &[(1, 0, 1.0)], true).unwrap();
        assert_eq!(a.content_hash(), b.content_hash());
        assert_ne!(a.content_hash(), c.content_hash());
    }

    #[test]
    fn strong_connectivity() {
        assert!(!Graph::new(2, &[(0, 1, 1.0)], true).unwrap().is_strongly_connected());
        assert!(Graph::new(2, &[(0, 1, 1.0)], false).unwrap().is_strongly_connected());
        assert!(Graph::new(1, &[], false).unwrap().is_strongly_connected());
        assert!(Graph::new(3, &[(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)], true).unwrap().is_strongly_connected());
    }

    fn arb_graph() -> impl Strategy<Value = Graph> {
        (1usize..12, any::<bool>()).prop_flat_map(|(n, directed)| {
            proptest::collection::vec((0..n, 0..n, 0.1f64..3.0), 0..(2 * n)).prop_map(move |raw| {
                let edges: Vec<_> = raw.into_iter().filter(|(a, b, _)| a != b).collect();
                Graph::new(n, &edges, directed).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn laplacian_symmetric_with_zero_row_sums(g in arb_graph()) {
            let l = g.directed_laplacian();
            prop_assert!((&l - l.transpose()).abs().max() <= 1e-12);
            for i in 0..g.order() {
                prop_assert!(l.row(i).sum().abs() <= 1e-12);
            }
        }

        #[test]
        fn components_partition_vertices(g in arb_graph()) {
            let comps = g.weakly_connected_components();
            let mut all: Vec<usize> = comps.iter().flat_map(|c| c.iter().copied()).collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..g.order()).collect::<Vec<_>>());
        }

        #[test]
        fn set_distance_symmetric(g in arb_graph(), a in 0usize..12, b in 0usize..12) {
            let n = g.order();
            let s1 = set(&[a % n]);
            let s2 = set(&[b % n, (a + b) % n].iter().copied().collect::<std::collections::BTreeSet<_>>().into_iter().collect::<Vec<_>>());
            prop_assert_eq!(g.set_distance(&s1, &s2).unwrap(), g.set_distance(&s2, &s1).unwrap());
            prop_assert_eq!(g.set_distance(&s2, &s2).unwrap(), 0);
        }

        #[test]
        fn full_induced_subgraph_is_identity(g in arb_graph()) {
            let all: VertexSet = (0..g.order()).collect();
            let sub = g.induced_subgraph(&all).unwrap();
            prop_assert_eq!(sub.graph.adjacency(), g.adjacency());
        }
    }
}
