//! Stationary connected subgraph clustering: greedy single-linkage merging of
//! active components, gated by the stationarity ratio of the merged
//! candidate, followed by a cleanup pass that makes the clusters disjoint.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::active::ActiveComponent;
use crate::error::{Error, Result};
use crate::graph::{Graph, VertexSet, UNREACHABLE};
use crate::spectral::{ShiftKind, SpectralBasis};
use crate::stationarity::{stationarity_ratio, CovarianceEstimate};

/// Default minimum stationarity ratio for a merge.
pub const DEFAULT_GAMMA_TH: f64 = 0.9;
/// Default target cluster count.
pub const DEFAULT_THETA: usize = 150;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScscConfig {
    pub gamma_th: f64,
    pub theta: usize,
    /// Highest covariance lag that must pass the ratio test (0 = lag-0 only).
    pub max_lag: usize,
    /// Shift operator of each candidate's induced subgraph.
    pub shift: ShiftKind,
}

impl Default for ScscConfig {
    fn default() -> Self {
        Self { gamma_th: DEFAULT_GAMMA_TH, theta: DEFAULT_THETA, max_lag: 0, shift: ShiftKind::DirectedLaplacian }
    }
}

impl ScscConfig {
    fn validate(&self) -> Result<()> {
        if !(self.gamma_th > 0.0 && self.gamma_th <= 1.0) {
            return Err(Error::InvalidParameter(format!("gamma_th {} outside (0, 1]", self.gamma_th)));
        }
        if self.theta == 0 {
            return Err(Error::InvalidParameter("theta must be at least 1".into()));
        }
        if self.shift == ShiftKind::Other {
            return Err(Error::InvalidParameter("clustering needs an adjacency or laplacian shift".into()));
        }
        Ok(())
    }
}

/// Symmetric matrix of hop distances with [`UNREACHABLE`] for disconnected pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<usize>,
}

impl DistanceMatrix {
    pub fn new(n: usize) -> Self {
        Self { n, data: vec![0; n * n] }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> usize {
        self.data[i * self.n + j]
    }

    fn set(&mut self, i: usize, j: usize, d: usize) {
        self.data[i * self.n + j] = d;
        self.data[j * self.n + i] = d;
    }

    fn restrict(&self, keep: &[usize]) -> Self {
        let mut out = Self::new(keep.len());
        for (a, &i) in keep.iter().enumerate() {
            for (b, &j) in keep.iter().enumerate() {
                out.data[a * keep.len() + b] = self.get(i, j);
            }
        }
        out
    }
}

/// Pairwise set distances between active components. The diagonal is 0 and
/// is never read as a merge candidate.
pub fn ac_distance_matrix(g: &Graph, acs: &[ActiveComponent]) -> Result<DistanceMatrix> {
    let sets: Vec<&VertexSet> = acs.iter().map(|a| &a.vertices).collect();
    set_distance_matrix(g, &sets)
}

fn set_distance_matrix(g: &Graph, sets: &[&VertexSet]) -> Result<DistanceMatrix> {
    for s in sets {
        if s.is_empty() {
            return Err(Error::EmptyVertexSet);
        }
        s.validate(g.order())?;
    }
    let k = sets.len();
    let mut d = DistanceMatrix::new(k);
    for i in 0..k {
        let from_i = g.hop_distances_from(sets[i]);
        for j in (i + 1)..k {
            let dij = sets[j].iter().map(|&v| from_i[v]).min().unwrap_or(UNREACHABLE);
            d.set(i, j, dij);
        }
    }
    Ok(d)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub id: usize,
    pub vertices: VertexSet,
    /// Smallest ratio over the checked lags at the last evaluation.
    pub gamma: f64,
    /// Ratio per lag `0..=max_lag` at the last evaluation.
    pub lag_gammas: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergeEvent {
    pub left: usize,
    pub right: usize,
    pub distance: usize,
    pub lag_gammas: Vec<f64>,
    pub accepted: bool,
    /// Id of the merged cluster when accepted.
    pub merged: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct ClusterSet {
    pub clusters: Vec<Cluster>,
    /// Distances between `clusters`, in the same order.
    pub distances: DistanceMatrix,
    /// Rejected pairs of live cluster ids, stored `(smaller, larger)`.
    pub no_merge: BTreeSet<(usize, usize)>,
    pub log: Vec<MergeEvent>,
}

/// Stationarity ratio of `vertices` for each covariance lag, computed on the
/// eigenbasis of the induced subgraph's shift operator and the principal
/// covariance submatrix. A vanishing covariance block commutes with every
/// shift and scores 1.
pub fn subgraph_gammas(g: &Graph, covariances: &[CovarianceEstimate], vertices: &VertexSet, shift: ShiftKind) -> Result<Vec<f64>> {
    let sub = g.induced_subgraph(vertices)?;
    let basis = SpectralBasis::from_shift(&shift.matrix(&sub.graph)?, shift)?;
    covariances
        .iter()
        .map(|c| match stationarity_ratio(&basis, &c.slice(&sub.mapping)) {
            Err(Error::ZeroCovariance) => Ok(1.0),
            other => other,
        })
        .collect()
}

fn min_gamma(gammas: &[f64]) -> f64 {
    gammas.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Greedy agglomeration of active components.
///
/// `covariances[l]` is the lag-`l` covariance of the full graph; lags
/// `0..=cfg.max_lag` must be present. Each round takes the closest pair at
/// hop distance 0 or 1 that has not been rejected (ties broken by position),
/// evaluates every lag's ratio on the union, and merges when all reach
/// `gamma_th`; otherwise the pair is remembered as rejected. Rejections
/// involving a cluster are forgotten once that cluster is merged away.
/// Stops at `theta` clusters or when no admissible pair remains.
pub fn scsc(g: &Graph, covariances: &[CovarianceEstimate], acs: &[ActiveComponent], cfg: &ScscConfig) -> Result<ClusterSet> {
    cfg.validate()?;
    if acs.is_empty() {
        return Err(Error::InvalidParameter("no active components to cluster".into()));
    }
    if covariances.len() <= cfg.max_lag {
        return Err(Error::InvalidParameter(format!(
            "max_lag {} needs {} covariance lags, got {}",
            cfg.max_lag,
            cfg.max_lag + 1,
            covariances.len()
        )));
    }
    let covariances = &covariances[..=cfg.max_lag];
    for c in covariances {
        if c.dim() != g.order() || c.matrix.ncols() != g.order() {
            return Err(Error::DimensionMismatch { expected: g.order(), found: c.dim() });
        }
    }

    let mut distances = ac_distance_matrix(g, acs)?;
    let mut slots: Vec<Option<Cluster>> = Vec::with_capacity(acs.len());
    for (id, ac) in acs.iter().enumerate() {
        let lag_gammas = subgraph_gammas(g, covariances, &ac.vertices, cfg.shift)?;
        slots.push(Some(Cluster { id, vertices: ac.vertices.clone(), gamma: min_gamma(&lag_gammas), lag_gammas }));
    }
    let k = slots.len();
    let mut next_id = k;
    let mut live = k;

    let mut candidates: BTreeSet<(usize, usize, usize)> = BTreeSet::new();
    for i in 0..k {
        for j in (i + 1)..k {
            if distances.get(i, j) < 2 {
                candidates.insert((distances.get(i, j), i, j));
            }
        }
    }
    let mut no_merge: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut log = Vec::new();

    while live > cfg.theta {
        let Some((d, i, j)) = candidates.pop_first() else { break };
        let (left, right) = (slots[i].as_ref().expect("live slot"), slots[j].as_ref().expect("live slot"));
        let union = left.vertices.union(&right.vertices);
        let lag_gammas = subgraph_gammas(g, covariances, &union, cfg.shift)?;
        let accepted = lag_gammas.iter().all(|&gm| gm >= cfg.gamma_th);
        let (left_id, right_id) = (left.id, right.id);

        if !accepted {
            no_merge.insert((left_id.min(right_id), left_id.max(right_id)));
            log.push(MergeEvent { left: left_id, right: right_id, distance: d, lag_gammas, accepted, merged: None });
            continue;
        }

        for other in 0..k {
            if other == i || other == j || slots[other].is_none() {
                continue;
            }
            for s in [i, j] {
                candidates.remove(&(distances.get(s, other), s.min(other), s.max(other)));
            }
        }
        no_merge.retain(|&(a, b)| a != left_id && a != right_id && b != left_id && b != right_id);

        let merged_id = next_id;
        next_id += 1;
        slots[j] = None;
        for other in 0..k {
            if other == i || slots[other].is_none() {
                continue;
            }
            let nd = distances.get(i, other).min(distances.get(j, other));
            distances.set(i, other, nd);
            if nd < 2 {
                candidates.insert((nd, i.min(other), i.max(other)));
            }
        }
        log.push(MergeEvent {
            left: left_id,
            right: right_id,
            distance: d,
            lag_gammas: lag_gammas.clone(),
            accepted,
            merged: Some(merged_id),
        });
        slots[i] = Some(Cluster { id: merged_id, vertices: union, gamma: min_gamma(&lag_gammas), lag_gammas });
        live -= 1;
    }

    let keep: Vec<usize> = (0..k).filter(|&s| slots[s].is_some()).collect();
    let distances = distances.restrict(&keep);
    let clusters = keep.iter().map(|&s| slots[s].take().expect("live slot")).collect();
    Ok(ClusterSet { clusters, distances, no_merge, log })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionCluster {
    pub id: usize,
    pub vertices: VertexSet,
    pub gamma: f64,
    /// Id of the cluster this piece was cut from.
    pub source: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    /// Partition-cluster id for each vertex, if any.
    pub assignment: Vec<Option<usize>>,
    pub clusters: Vec<PartitionCluster>,
}

impl Partition {
    pub fn unassigned(&self) -> Vec<usize> {
        (0..self.assignment.len()).filter(|&v| self.assignment[v].is_none()).collect()
    }

    /// Replaces each cluster's inherited ratio by the ratio of its final vertex set.
    pub fn recompute_gammas(&mut self, g: &Graph, covariances: &[CovarianceEstimate], shift: ShiftKind) -> Result<()> {
        for c in &mut self.clusters {
            c.gamma = min_gamma(&subgraph_gammas(g, covariances, &c.vertices, shift)?);
        }
        Ok(())
    }
}

/// Makes clusters disjoint. A vertex claimed by several clusters goes to
/// the one with the highest ratio, then the larger one, then the smaller id.
/// Clusters that lose vertices are split into their connected pieces.
pub fn finalize_partition(g: &Graph, cs: &ClusterSet) -> Partition {
    let n = g.order();
    let mut owner: Vec<Option<usize>> = vec![None; n];
    let better = |a: &Cluster, b: &Cluster| -> bool {
        a.gamma
            .total_cmp(&b.gamma)
            .then(a.vertices.len().cmp(&b.vertices.len()))
            .then(b.id.cmp(&a.id))
            .is_gt()
    };
    for (ci, c) in cs.clusters.iter().enumerate() {
        for &v in c.vertices.iter() {
            match owner[v] {
                Some(cur) if !better(c, &cs.clusters[cur]) => {}
                _ => owner[v] = Some(ci),
            }
        }
    }

    let mut assignment = vec![None; n];
    let mut clusters = Vec::new();
    for (ci, c) in cs.clusters.iter().enumerate() {
        let kept: VertexSet = c.vertices.iter().copied().filter(|&v| owner[v] == Some(ci)).collect();
        if kept.is_empty() {
            continue;
        }
        let sub = g.induced_subgraph(&kept).expect("kept vertices are valid");
        for piece in sub.graph.weakly_connected_components() {
            let id = clusters.len();
            let vertices: VertexSet = piece.iter().map(|&local| sub.mapping[local]).collect();
            for &v in vertices.iter() {
                assignment[v] = Some(id);
            }
            clusters.push(PartitionCluster { id, vertices, gamma: c.gamma, source: c.id });
        }
    }
    Partition { assignment, clusters }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::erdos_renyi;
    use crate::stationarity::superstationary_covariance;
    use nalgebra::{DMatrix, SymmetricEigen};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ac(ids: &[usize]) -> ActiveComponent {
        ActiveComponent { vertices: VertexSet::new(ids.to_vec()).unwrap(), birth: 0, death: 0 }
    }

    fn path(n: usize) -> Graph {
        Graph::new(n, &(0..n - 1).map(|i| (i, i + 1, 1.0)).collect::<Vec<_>>(), false).unwrap()
    }

    fn random_psd(n: usize, seed: u64) -> CovarianceEstimate {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        CovarianceEstimate::analytic(&m * m.transpose() + DMatrix::identity(n, n) * 0.1)
    }

    /// Ratio on the union computed from scratch: Laplacian written out by
    /// hand, eigenvectors straight from the solver.
    fn direct_gamma(g: &Graph, c: &DMatrix<f64>, vertices: &[usize]) -> f64 {
        let m = vertices.len();
        let a = g.adjacency();
        let mut l = DMatrix::<f64>::zeros(m, m);
        for (x, &u) in vertices.iter().enumerate() {
            for (y, &v) in vertices.iter().enumerate() {
                if x != y {
                    let w = 0.5 * (a[(u, v)] + a[(v, u)]);
                    l[(x, y)] -= w;
                    l[(x, x)] += w;
                }
            }
        }
        let u = SymmetricEigen::new(l).eigenvectors;
        let csub = DMatrix::from_fn(m, m, |x, y| c[(vertices[x], vertices[y])]);
        let p: DMatrix<f64> = u.transpose() * csub * &u;
        p.diagonal().norm() / p.norm()
    }

    #[test]
    fn distance_matrix_examples() {
        let g = Graph::new(5, &[(0, 1, 1.0), (1, 2, 1.0), (3, 4, 1.0)], false).unwrap();
        let d = ac_distance_matrix(&g, &[ac(&[0, 1]), ac(&[1, 2]), ac(&[0, 1]), ac(&[3, 4]), ac(&[2])]).unwrap();
        assert_eq!(d.get(0, 1), 0);
        assert_eq!(d.get(0, 2), 0);
        assert_eq!(d.get(0, 3), UNREACHABLE);
        assert_eq!(d.get(0, 4), 1);
        assert_eq!(d.get(4, 0), 1);
    }

    #[test]
    fn superstationary_input_merges_down_to_theta() {
        let g = path(12);
        let c = superstationary_covariance(&g.adjacency(), 0.5, 2.0).unwrap();
        let acs: Vec<_> = (0..6).map(|k| ac(&[2 * k, 2 * k + 1])).collect();
        let cfg = ScscConfig { theta: 2, shift: ShiftKind::Adjacency, ..Default::default() };
        let cs = scsc(&g, &[c], &acs, &cfg).unwrap();
        assert_eq!(cs.clusters.len(), 2);
        assert!(cs.log.iter().all(|e| e.accepted));
        for cl in &cs.clusters {
            assert!((cl.gamma - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn impossible_threshold_keeps_input() {
        let g = path(8);
        let c = random_psd(8, 3);
        let acs: Vec<_> = (0..4).map(|k| ac(&[2 * k, 2 * k + 1])).collect();
        let cfg = ScscConfig { gamma_th: 1.0, theta: 1, ..Default::default() };
        let cs = scsc(&g, &[c], &acs, &cfg).unwrap();
        let sets: Vec<_> = cs.clusters.iter().map(|c| c.vertices.clone()).collect();
        assert_eq!(sets, acs.iter().map(|a| a.vertices.clone()).collect::<Vec<_>>());
        assert!(cs.log.iter().all(|e| !e.accepted));
        assert_eq!(cs.no_merge.len(), 3);
    }

    #[test]
    fn two_blocks_merge_iff_union_ratio_passes() {
        let g = path(6);
        // Independent graph-stationary blocks on {0,1,2} and {3,4,5}.
        let mut c = DMatrix::zeros(6, 6);
        for (block, scale) in [([0usize, 1, 2], 1.0), ([3, 4, 5], 2.5)] {
            let sub = g.induced_subgraph(&VertexSet::new(block.to_vec()).unwrap()).unwrap();
            let basis = SpectralBasis::from_shift(&sub.graph.directed_laplacian(), ShiftKind::DirectedLaplacian).unwrap();
            let spectrum = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![scale, 0.5 * scale, 0.2 * scale]));
            let blk = basis.eigenvectors() * spectrum * basis.eigenvectors().transpose();
            for x in 0..3 {
                for y in 0..3 {
                    c[(block[x], block[y])] = blk[(x, y)];
                }
            }
        }
        let expected = direct_gamma(&g, &c, &[0, 1, 2, 3, 4, 5]);
        assert!(expected < 1.0 - 1e-6);
        let cov = CovarianceEstimate::analytic(c);
        let acs = [ac(&[0, 1, 2]), ac(&[3, 4, 5])];
        for th in [expected - 1e-6, expected + 1e-6] {
            let cfg = ScscConfig { gamma_th: th.min(1.0), theta: 1, ..Default::default() };
            let cs = scsc(&g, &[cov.clone()], &acs, &cfg).unwrap();
            let event = &cs.log[0];
            assert_eq!(event.distance, 1);
            assert!((event.lag_gammas[0] - expected).abs() < 1e-9);
            assert_eq!(event.accepted, expected >= th);
            assert_eq!(cs.clusters.len(), if event.accepted { 1 } else { 2 });
        }
    }

    #[test]
    fn lag_zero_variant_is_plain_variant() {
        let g = erdos_renyi(30, 0.12, 4).unwrap();
        let c0 = random_psd(30, 5);
        let c1 = random_psd(30, 6);
        let acs: Vec<_> = (0..10).map(|k| ac(&[3 * k, 3 * k + 1, 3 * k + 2])).collect();
        let cfg = ScscConfig { gamma_th: 0.3, theta: 2, max_lag: 0, ..Default::default() };
        let a = scsc(&g, &[c0.clone()], &acs, &cfg).unwrap();
        let b = scsc(&g, &[c0, c1], &acs, &cfg).unwrap();
        assert_eq!(a.clusters, b.clusters);
        assert_eq!(a.log, b.log);
    }

    #[test]
    fn jwss_requires_every_lag() {
        let g = path(4);
        let good = superstationary_covariance(&g.adjacency(), 0.5, 2.0).unwrap();
        let bad = random_psd(4, 9);
        let acs = [ac(&[0, 1]), ac(&[2, 3])];
        let cfg = ScscConfig { gamma_th: 0.999, theta: 1, max_lag: 1, shift: ShiftKind::Adjacency };
        let cs = scsc(&g, &[good.clone(), bad], &acs, &cfg).unwrap();
        assert_eq!(cs.clusters.len(), 2);
        assert_eq!(cs.log[0].lag_gammas.len(), 2);
        let cs = scsc(&g, &[good.clone(), good], &acs, &cfg).unwrap();
        assert_eq!(cs.clusters.len(), 1);
    }

    #[test]
    fn rejections_are_forgotten_after_merge() {
        // Path 0-1-2-3-4; ACs {0},{1},{2,3,4}. Force a rejection then a merge that revisits the pair.
        let g = path(5);
        let c = random_psd(5, 21);
        let acs = [ac(&[0]), ac(&[1]), ac(&[2, 3, 4])];
        let cfg = ScscConfig { gamma_th: 0.05, theta: 1, ..Default::default() };
        let cs = scsc(&g, &[c], &acs, &cfg).unwrap();
        assert!(cs.no_merge.iter().all(|&(a, b)| cs.clusters.iter().any(|c| c.id == a) && cs.clusters.iter().any(|c| c.id == b)));
    }

    #[test]
    fn merge_invariants_on_random_instances() {
        for seed in 0..6 {
            let g = erdos_renyi(40, 0.08, seed).unwrap();
            let c = random_psd(40, 100 + seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let acs: Vec<ActiveComponent> = (0..15)
                .map(|_| {
                    let v = rng.random_range(0..40);
                    let mut ids = vec![v];
                    ids.extend(g.neighbors(v).iter().take(2));
                    ActiveComponent { vertices: VertexSet::from_unsorted(ids), birth: 0, death: 0 }
                })
                .collect();
            let cfg = ScscConfig { gamma_th: 0.5, theta: 3, ..Default::default() };
            let cs = scsc(&g, &[c.clone()], &acs, &cfg).unwrap();
            assert!(cs.clusters.len() >= 3);
            assert!(cs.clusters.len() <= acs.len());
            for e in cs.log.iter().filter(|e| e.accepted) {
                assert!(e.lag_gammas[0] >= 0.5);
            }
            for cl in &cs.clusters {
                let recomputed = subgraph_gammas(&g, &[c.clone()], &cl.vertices, ShiftKind::DirectedLaplacian).unwrap();
                assert_eq!(recomputed, cl.lag_gammas);
            }
            // Single linkage over set distance is exact.
            for a in 0..cs.clusters.len() {
                for b in (a + 1)..cs.clusters.len() {
                    let truth = g.set_distance(&cs.clusters[a].vertices, &cs.clusters[b].vertices).unwrap();
                    assert_eq!(cs.distances.get(a, b), truth);
                }
            }
            // No admissible pair is left unexamined unless theta stopped the loop.
            if cs.clusters.len() > cfg.theta {
                for a in 0..cs.clusters.len() {
                    for b in (a + 1)..cs.clusters.len() {
                        if cs.distances.get(a, b) < 2 {
                            let (x, y) = (cs.clusters[a].id, cs.clusters[b].id);
                            assert!(cs.no_merge.contains(&(x.min(y), x.max(y))));
                        }
                    }
                }
            }
            let part = finalize_partition(&g, &cs);
            let mut seen = vec![false; 40];
            for pc in &part.clusters {
                let sub = g.induced_subgraph(&pc.vertices).unwrap();
                assert_eq!(sub.graph.weakly_connected_components().len(), 1);
                for &v in pc.vertices.iter() {
                    assert!(!seen[v]);
                    seen[v] = true;
                    assert_eq!(part.assignment[v], Some(pc.id));
                }
            }
        }
    }

    #[test]
    fn validation_errors() {
        let g = path(3);
        let c = random_psd(3, 1);
        assert!(scsc(&g, &[c.clone()], &[], &ScscConfig::default()).is_err());
        assert!(scsc(&g, &[random_psd(4, 1)], &[ac(&[0])], &ScscConfig::default()).is_err());
        let cfg = ScscConfig { gamma_th: 0.0, ..Default::default() };
        assert!(scsc(&g, &[c.clone()], &[ac(&[0])], &cfg).is_err());
        let cfg = ScscConfig { max_lag: 2, ..Default::default() };
        assert!(scsc(&g, &[c], &[ac(&[0])], &cfg).is_err());
    }

    fn cluster(id: usize, ids: &[usize], gamma: f64) -> Cluster {
        Cluster { id, vertices: VertexSet::new(ids.to_vec()).unwrap(), gamma, lag_gammas: vec![gamma] }
    }

    fn set_of(clusters: Vec<Cluster>) -> ClusterSet {
        let k = clusters.len();
        ClusterSet { clusters, distances: DistanceMatrix::new(k), no_merge: BTreeSet::new(), log: Vec::new() }
    }

    #[test]
    fn finalize_disjoint_is_identity() {
        let g = path(6);
        let part = finalize_partition(&g, &set_of(vec![cluster(0, &[0, 1, 2], 0.9), cluster(1, &[3, 4], 0.95)]));
        assert_eq!(part.clusters.len(), 2);
        assert_eq!(part.clusters[0].vertices, VertexSet::new(vec![0, 1, 2]).unwrap());
        assert_eq!(part.unassigned(), vec![5]);
    }

    #[test]
    fn finalize_prefers_higher_gamma() {
        let g = path(5);
        let part = finalize_partition(&g, &set_of(vec![cluster(0, &[0, 1, 2], 0.92), cluster(1, &[2, 3, 4], 0.95)]));
        assert_eq!(part.assignment[2], Some(1));
        assert_eq!(part.clusters[0].vertices, VertexSet::new(vec![0, 1]).unwrap());
        // Equal ratios: larger cluster wins, then smaller id.
        let part = finalize_partition(&g, &set_of(vec![cluster(0, &[1, 2], 0.9), cluster(1, &[2, 3, 4], 0.9)]));
        assert_eq!(part.clusters[part.assignment[2].unwrap()].source, 1);
        let part = finalize_partition(&g, &set_of(vec![cluster(3, &[1, 2], 0.9), cluster(1, &[2, 3], 0.9)]));
        assert_eq!(part.clusters[part.assignment[2].unwrap()].source, 1);
    }

    #[test]
    fn finalize_splits_disconnected_remainder() {
        // Star-like: cluster A = path 0-1-2 loses its middle vertex to B.
        let g = Graph::new(4, &[(0, 1, 1.0), (1, 2, 1.0), (1, 3, 1.0)], false).unwrap();
        let part = finalize_partition(&g, &set_of(vec![cluster(0, &[0, 1, 2], 0.91), cluster(1, &[1, 3], 0.99)]));
        let from_a: Vec<_> = part.clusters.iter().filter(|c| c.source == 0).collect();
        assert_eq!(from_a.len(), 2);
        assert_eq!(part.clusters.len(), 3);
    }
}
