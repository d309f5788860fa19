//! Undirected graphs over the variable set, and the downstream
//! procedures that consume them: edge rules, predictor selection,
//! centrality statistics, clustering and majority-rule classification.

use crate::error::{Error, Result};
use crate::mixture::PosteriorVector;
use crate::pairs::{PairIndex, ZVector};
use crate::special;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// One undirected edge with its pair statistics. `posterior_null` is NaN
/// until posteriors are attached (frequentist graphs start without them).
#[derive(Debug, Clone)]
pub struct Edge {
    pub i: usize,
    pub k: usize,
    pub z: f64,
    pub r: f64,
    pub posterior_null: f64,
}

/// How the edge set was decided.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EdgeRule {
    /// z below the null quantile at level epsilon.
    Frequentist { epsilon: f64, nu: f64 },
    /// Posterior null probability below tau.
    Bayes { tau: f64 },
    /// Supplied directly (tests, external edge lists).
    Explicit,
}

/// Sparse undirected graph over P named nodes.
///
/// Edges are stored in pair-index order (i ascending, then k); adjacency
/// lists are sorted. Immutable apart from name and posterior attachment.
#[derive(Debug, Clone)]
pub struct Graph {
    p: usize,
    node_names: Vec<String>,
    edges: Vec<Edge>,
    adjacency: Vec<Vec<usize>>,
    rule: EdgeRule,
    z_threshold: f64,
}

impl Graph {
    fn assemble(p: usize, edges: Vec<Edge>, rule: EdgeRule, z_threshold: f64) -> Self {
        let mut adjacency = alloc::vec![Vec::new(); p];
        for e in &edges {
            adjacency[e.i].push(e.k);
            adjacency[e.k].push(e.i);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        let node_names = (0..p).map(|i| format!("v{}", i + 1)).collect();
        Graph { p, node_names, edges, adjacency, rule, z_threshold }
    }

    /// Build directly from explicit pairs (statistics set to NaN).
    pub fn from_pairs(p: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        let mut seen = BTreeSet::new();
        let mut edges = Vec::with_capacity(pairs.len());
        for &(a, b) in pairs {
            if a == b {
                return Err(Error::Input(format!("self-loop at node {a}")));
            }
            if a >= p || b >= p {
                return Err(Error::Input(format!("edge ({a},{b}) outside 0..{p}")));
            }
            let (i, k) = if a < b { (a, b) } else { (b, a) };
            if !seen.insert((i, k)) {
                return Err(Error::Input(format!("duplicate edge ({i},{k})")));
            }
            edges.push(Edge { i, k, z: f64::NAN, r: f64::NAN, posterior_null: f64::NAN });
        }
        edges.sort_unstable_by_key(|e| (e.i, e.k));
        Ok(Graph::assemble(p, edges, EdgeRule::Explicit, f64::NAN))
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn node_names(&self) -> &[String] {
        &self.node_names
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Sorted neighbor list of a node (panics if out of range).
    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.adjacency[node]
    }

    pub fn contains_edge(&self, a: usize, b: usize) -> bool {
        let (i, k) = if a < b { (a, b) } else { (b, a) };
        i < self.p && k < self.p && self.adjacency[i].binary_search(&k).is_ok()
    }

    pub fn rule(&self) -> EdgeRule {
        self.rule
    }

    /// The z cut implied by the rule: the quantile for the frequentist
    /// rule, the largest included z (0 when empty) for the Bayes rule.
    pub fn z_threshold(&self) -> f64 {
        self.z_threshold
    }

    /// Replace the default node names ("v1".."vP").
    pub fn set_node_names(&mut self, names: &[String]) -> Result<()> {
        if names.len() != self.p {
            return Err(Error::Input(format!(
                "{} names for {} nodes",
                names.len(),
                self.p
            )));
        }
        self.node_names = names.to_vec();
        Ok(())
    }

    /// Fill each edge's posterior from a vector aligned with the pair
    /// ordering of this graph's node count.
    pub fn attach_posteriors(&mut self, post: &PosteriorVector) -> Result<()> {
        let index = PairIndex::new(self.p)?;
        if post.len() != index.m() {
            return Err(Error::Input(format!(
                "posterior length {} does not match {} pairs of P={}",
                post.len(),
                index.m(),
                self.p
            )));
        }
        for e in &mut self.edges {
            e.posterior_null = post.m0_hat()[index.to_index(e.i, e.k)];
        }
        Ok(())
    }
}

/// Filter the pair set into a graph, preserving pair order.
fn filter_edges<F>(z: &ZVector, keep: F) -> Vec<Edge>
where
    F: Fn(usize) -> Option<f64> + Sync,
{
    let index = z.index();
    let build = |j: usize, posterior: f64| {
        let (i, k) = index.to_pair(j);
        Edge { i, k, z: z.z()[j], r: z.r()[j], posterior_null: posterior }
    };
    #[cfg(feature = "parallel")]
    {
        const CHUNK: usize = 8192;
        let chunks: Vec<Vec<Edge>> = (0..z.m().div_ceil(CHUNK))
            .into_par_iter()
            .map(|c| {
                let lo = c * CHUNK;
                let hi = (lo + CHUNK).min(z.m());
                (lo..hi).filter_map(|j| keep(j).map(|post| build(j, post))).collect()
            })
            .collect();
        chunks.concat()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..z.m()).filter_map(|j| keep(j).map(|post| build(j, post))).collect()
    }
}

/// z cutoff used by the quantile screening rule:
/// Q_epsilon((ν−1)/2, 1/2). Shared by [`frequentist_edges`] and any
/// caller that only reports the threshold.
pub fn frequentist_threshold(nu: f64, epsilon: f64) -> Result<f64> {
    if !(nu > 1.0) || !nu.is_finite() {
        return Err(Error::Domain { what: "effective sample size nu must exceed 1", value: nu });
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Domain { what: "epsilon must be in (0,1)", value: epsilon });
    }
    special::beta_quantile(epsilon, (nu - 1.0) / 2.0, 0.5)
}

/// Edges by the quantile screening rule: keep pair j iff
/// z_j < Q_epsilon((ν−1)/2, 1/2). Posteriors are left NaN.
pub fn frequentist_edges(z: &ZVector, nu: f64, epsilon: f64) -> Result<Graph> {
    let q = frequentist_threshold(nu, epsilon)?;
    let edges = filter_edges(z, |j| if z.z()[j] < q { Some(f64::NAN) } else { None });
    Ok(Graph::assemble(z.index().p(), edges, EdgeRule::Frequentist { epsilon, nu }, q))
}

/// Edges by the posterior rule: keep pair j iff m̂_{0j} < tau.
/// Records the largest included z as the implied threshold (0 if empty).
pub fn bayes_edges(z: &ZVector, post: &PosteriorVector, tau: f64) -> Result<Graph> {
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(Error::Domain { what: "tau must be in (0,1]", value: tau });
    }
    if post.len() != z.m() {
        return Err(Error::Input(format!(
            "posterior length {} does not match pair count {}",
            post.len(),
            z.m()
        )));
    }
    let m0 = post.m0_hat();
    let edges = filter_edges(z, |j| if m0[j] < tau { Some(m0[j]) } else { None });
    let z_threshold = edges.iter().map(|e| e.z).fold(0.0, f64::max);
    Ok(Graph::assemble(z.index().p(), edges, EdgeRule::Bayes { tau }, z_threshold))
}

/// Neighbors of the named response node, as indices.
pub fn select_predictors(g: &Graph, response: &str) -> Result<BTreeSet<usize>> {
    let mut hits = g.node_names.iter().enumerate().filter(|(_, n)| n.as_str() == response);
    let idx = match (hits.next(), hits.next()) {
        (Some((i, _)), None) => i,
        (Some(_), Some(_)) => {
            return Err(Error::Input(format!("node name {response:?} is ambiguous")))
        }
        (None, _) => return Err(Error::Input(format!("unknown node name {response:?}"))),
    };
    Ok(g.neighbors(idx).iter().copied().collect())
}

/// Per-node degree, clustering coefficient and centrality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeStats {
    pub degree: usize,
    pub clustering_coeff: f64,
    pub centrality: f64,
}

/// Degree, clustering coefficient (share of neighbor pairs that are
/// themselves adjacent; 0 below degree 2) and their product.
pub fn graph_stats(g: &Graph) -> Vec<NodeStats> {
    (0..g.p)
        .map(|v| {
            let nbrs = g.neighbors(v);
            let d = nbrs.len();
            if d < 2 {
                return NodeStats { degree: d, clustering_coeff: 0.0, centrality: 0.0 };
            }
            let mut among = 0usize;
            for (t, &x) in nbrs.iter().enumerate() {
                for &y in &nbrs[t + 1..] {
                    if g.adjacency[x].binary_search(&y).is_ok() {
                        among += 1;
                    }
                }
            }
            let pairs = (d * (d - 1) / 2) as f64;
            let coeff = among as f64 / pairs;
            NodeStats { degree: d, clustering_coeff: coeff, centrality: d as f64 * coeff }
        })
        .collect()
}

/// One centrality cluster: a center and everything adjacent to it.
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub center: usize,
    pub members: BTreeSet<usize>,
}

/// Output of [`centrality_clusters`].
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterAssignment {
    pub clusters: Vec<Cluster>,
    pub unassigned: BTreeSet<usize>,
}

/// Greedy clustering by centrality.
///
/// Repeatedly pick the never-clustered node of largest centrality (ties
/// to the lowest index); stop when that falls below `min_centrality`.
/// The cluster is the center plus its neighbors. With `overlap` the
/// neighbors join regardless of earlier membership; without it only
/// never-clustered neighbors join.
pub fn centrality_clusters(g: &Graph, min_centrality: f64, overlap: bool) -> ClusterAssignment {
    let stats = graph_stats(g);
    let mut clustered = alloc::vec![false; g.p];
    let mut clusters = Vec::new();
    loop {
        let mut best: Option<usize> = None;
        for v in 0..g.p {
            if clustered[v] {
                continue;
            }
            if best.map_or(true, |b| stats[v].centrality > stats[b].centrality) {
                best = Some(v);
            }
        }
        let center = match best {
            Some(v) if stats[v].centrality >= min_centrality => v,
            _ => break,
        };
        let mut members: BTreeSet<usize> = BTreeSet::new();
        members.insert(center);
        for &nb in g.neighbors(center) {
            if overlap || !clustered[nb] {
                members.insert(nb);
            }
        }
        for &v in &members {
            clustered[v] = true;
        }
        clusters.push(Cluster { center, members });
    }
    let unassigned = (0..g.p).filter(|&v| !clustered[v]).collect();
    ClusterAssignment { clusters, unassigned }
}

/// Label unlabeled nodes by the majority label among their labeled
/// neighbors; nodes with fewer than `min_neighbors` labeled neighbors,
/// or with a tied vote, get `default_label`. Returns labels for the
/// unlabeled nodes only.
pub fn classify_majority(
    g: &Graph,
    train_labels: &BTreeMap<usize, String>,
    min_neighbors: usize,
    default_label: &str,
) -> Result<BTreeMap<usize, String>> {
    if let Some((&bad, _)) = train_labels.iter().find(|(&v, _)| v >= g.p) {
        return Err(Error::Input(format!("labeled node {bad} outside 0..{}", g.p)));
    }
    let mut out = BTreeMap::new();
    for v in 0..g.p {
        if train_labels.contains_key(&v) {
            continue;
        }
        let mut votes: BTreeMap<&str, usize> = BTreeMap::new();
        let mut labeled = 0usize;
        for nb in g.neighbors(v) {
            if let Some(label) = train_labels.get(nb) {
                labeled += 1;
                *votes.entry(label.as_str()).or_insert(0) += 1;
            }
        }
        let label = if labeled < min_neighbors {
            default_label
        } else {
            let top = votes.values().copied().max().unwrap_or(0);
            let mut winners = votes.iter().filter(|(_, &c)| c == top);
            match (winners.next(), winners.next()) {
                (Some((&l, _)), None) => l,
                _ => default_label,
            }
        };
        out.insert(v, String::from(label));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zvec(z: Vec<f64>, p: usize, n: usize) -> ZVector {
        let r: Vec<f64> = z.iter().map(|&v| (1.0 - v).sqrt()).collect();
        ZVector::from_parts(z, r, p, n, true).unwrap()
    }

    #[test]
    fn frequentist_rule_thresholds() {
        // P=3 pairs in order (0,1), (0,2), (1,2).
        let z = zvec(vec![0.5, 0.8, 0.74], 3, 70);
        let g = frequentist_edges(&z, 70.0, 1e-5).unwrap();
        assert!(g.z_threshold() > 0.74 && g.z_threshold() < 0.76);
        assert_eq!(g.edge_count(), 2);
        assert!(g.contains_edge(0, 1));
        assert!(g.contains_edge(1, 2));
        assert!(!g.contains_edge(0, 2));
        assert!(g.edges()[0].posterior_null.is_nan());
    }

    #[test]
    fn frequentist_saturated_z_gives_empty_graph() {
        let z = zvec(vec![1.0 - 1e-12; 6], 4, 50);
        let g = frequentist_edges(&z, 50.0, 1e-5).unwrap();
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn frequentist_epsilon_near_one_keeps_everything() {
        let z = zvec(vec![0.3, 0.99, 0.5, 0.9999, 0.7, 0.1], 4, 50);
        let g = frequentist_edges(&z, 50.0, 1.0 - 1e-12).unwrap();
        assert_eq!(g.edge_count(), 6);
    }

    #[test]
    fn bayes_rule_and_implied_threshold() {
        let z = zvec(vec![0.5, 0.8, 0.74], 3, 70);
        let post = crate::mixture::e_step(
            &z,
            &crate::mixture::MixtureParams::new(0.5, 2.0, 8.0, 70.0, 1.0).unwrap(),
        );
        let g = bayes_edges(&z, &post, 0.5).unwrap();
        let max_z = g.edges().iter().map(|e| e.z).fold(0.0, f64::max);
        assert_eq!(g.z_threshold(), max_z);
        for e in g.edges() {
            assert!(e.posterior_null < 0.5);
        }
    }

    #[test]
    fn bayes_all_null_posteriors_empty() {
        let z = zvec(vec![0.5, 0.8, 0.74], 3, 70);
        let post = crate::mixture::e_step(
            &z,
            &crate::mixture::MixtureParams::new(1.0, 5.0, 3.0, 70.0, 1.0).unwrap(),
        );
        let g = bayes_edges(&z, &post, 0.01).unwrap();
        assert_eq!(g.edge_count(), 0);
        assert_eq!(g.z_threshold(), 0.0);
    }

    #[test]
    fn bayes_tau_one_keeps_all_interior_posteriors() {
        let z = zvec(vec![0.5, 0.8, 0.74], 3, 70);
        let post = crate::mixture::e_step(
            &z,
            &crate::mixture::MixtureParams::new(0.5, 5.0, 3.0, 70.0, 1.0).unwrap(),
        );
        let g = bayes_edges(&z, &post, 1.0).unwrap();
        assert_eq!(g.edge_count(), 3);
    }

    #[test]
    fn both_rules_are_monotone_in_their_level() {
        let z = zvec(vec![0.3, 0.95, 0.5, 0.85, 0.7, 0.12, 0.6, 0.99, 0.4, 0.8], 5, 40);
        let post = crate::mixture::e_step(
            &z,
            &crate::mixture::MixtureParams::new(0.6, 3.0, 4.0, 40.0, 1.0).unwrap(),
        );
        let mut prev = 0;
        for eps in [1e-8, 1e-5, 1e-3, 0.1, 0.9] {
            let count = frequentist_edges(&z, 40.0, eps).unwrap().edge_count();
            assert!(count >= prev);
            prev = count;
        }
        prev = 0;
        for tau in [1e-6, 1e-3, 0.05, 0.4, 0.99] {
            let count = bayes_edges(&z, &post, tau).unwrap().edge_count();
            assert!(count >= prev);
            prev = count;
        }
    }

    #[test]
    fn attach_posteriors_by_pair_index() {
        let z = zvec(vec![0.5, 0.8, 0.74], 3, 70);
        let post = crate::mixture::e_step(
            &z,
            &crate::mixture::MixtureParams::new(0.5, 2.0, 8.0, 70.0, 1.0).unwrap(),
        );
        let mut g = frequentist_edges(&z, 70.0, 1e-5).unwrap();
        g.attach_posteriors(&post).unwrap();
        for e in g.edges() {
            let j = z.index().to_index(e.i, e.k);
            assert_eq!(e.posterior_null, post.m0_hat()[j]);
        }
    }

    #[test]
    fn select_predictors_star_and_isolated() {
        let mut g = Graph::from_pairs(5, &[(0, 1), (0, 2), (0, 3)]).unwrap();
        let sel = select_predictors(&g, "v1").unwrap();
        assert_eq!(sel, [1, 2, 3].into_iter().collect());
        assert!(select_predictors(&g, "v5").unwrap().is_empty());
        assert!(select_predictors(&g, "nope").is_err());
        let names: Vec<String> = ["a", "b", "b", "c", "d"].iter().map(|s| s.to_string()).collect();
        g.set_node_names(&names).unwrap();
        assert!(select_predictors(&g, "b").is_err());
    }

    #[test]
    fn stats_on_small_graphs() {
        let tri = Graph::from_pairs(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        for s in graph_stats(&tri) {
            assert_eq!(s.degree, 2);
            assert_eq!(s.clustering_coeff, 1.0);
            assert_eq!(s.centrality, 2.0);
        }
        let star = Graph::from_pairs(5, &[(0, 1), (0, 2), (0, 3), (0, 4)]).unwrap();
        let s = graph_stats(&star);
        assert_eq!(s[0].degree, 4);
        assert_eq!(s[0].clustering_coeff, 0.0);
        assert_eq!(s[0].centrality, 0.0);
        let cyc = Graph::from_pairs(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        for s in graph_stats(&cyc) {
            assert_eq!(s.degree, 2);
            assert_eq!(s.clustering_coeff, 0.0);
        }
    }

    fn complete(p: usize, offset: usize) -> Vec<(usize, usize)> {
        let mut e = Vec::new();
        for i in 0..p {
            for k in i + 1..p {
                e.push((offset + i, offset + k));
            }
        }
        e
    }

    #[test]
    fn clustering_complete_graph() {
        let g = Graph::from_pairs(10, &complete(10, 0)).unwrap();
        let out = centrality_clusters(&g, 3.0, true);
        assert_eq!(out.clusters.len(), 1);
        assert_eq!(out.clusters[0].members.len(), 10);
        assert!(out.unassigned.is_empty());
    }

    #[test]
    fn clustering_two_components() {
        let mut edges = complete(5, 0);
        edges.extend(complete(5, 5));
        let g = Graph::from_pairs(10, &edges).unwrap();
        let out = centrality_clusters(&g, 3.0, true);
        assert_eq!(out.clusters.len(), 2);
        assert_eq!(out.clusters[0].center, 0);
        assert_eq!(out.clusters[1].center, 5);
        assert!(out.unassigned.is_empty());
    }

    #[test]
    fn clustering_low_centrality_stops_immediately() {
        // Triangle: centrality 2 < 3, so nothing clusters.
        let g = Graph::from_pairs(5, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        let out = centrality_clusters(&g, 3.0, true);
        assert!(out.clusters.is_empty());
        assert_eq!(out.unassigned.len(), 5);
    }

    #[test]
    fn clustering_overlap_flag() {
        // Two K5 sharing node 4.
        let mut edges = complete(5, 0);
        edges.extend(complete(5, 4));
        let g = Graph::from_pairs(9, &edges).unwrap();
        let with = centrality_clusters(&g, 3.0, true);
        assert_eq!(with.clusters.len(), 2);
        assert!(with.clusters[0].members.contains(&4));
        assert!(with.clusters[1].members.contains(&4));
        let without = centrality_clusters(&g, 3.0, false);
        assert_eq!(without.clusters.len(), 2);
        let shared: Vec<_> = without.clusters[0]
            .members
            .intersection(&without.clusters[1].members)
            .collect();
        assert!(shared.is_empty());
    }

    #[test]
    fn cluster_members_are_adjacent_to_center() {
        let mut edges = complete(5, 0);
        edges.extend(complete(5, 4));
        let g = Graph::from_pairs(9, &edges).unwrap();
        let out = centrality_clusters(&g, 3.0, true);
        for c in &out.clusters {
            for &m in &c.members {
                assert!(m == c.center || g.contains_edge(c.center, m));
            }
        }
    }

    #[test]
    fn majority_vote_paths() {
        let g = Graph::from_pairs(5, &[(3, 0), (3, 1), (3, 2)]).unwrap();
        let mut train = BTreeMap::new();
        train.insert(0, String::from("good"));
        train.insert(1, String::from("good"));
        train.insert(2, String::from("bad"));
        let out = classify_majority(&g, &train, 1, "bad").unwrap();
        assert_eq!(out[&3], "good");
        // Isolated node falls back to the default.
        assert_eq!(out[&4], "bad");
        // Tie goes to the default.
        let g2 = Graph::from_pairs(3, &[(2, 0), (2, 1)]).unwrap();
        let mut t2 = BTreeMap::new();
        t2.insert(0, String::from("good"));
        t2.insert(1, String::from("bad"));
        let out2 = classify_majority(&g2, &t2, 1, "bad").unwrap();
        assert_eq!(out2[&2], "bad");
        // Min-neighbor floor.
        let out3 = classify_majority(&g, &train, 4, "bad").unwrap();
        assert_eq!(out3[&3], "bad");
        // Labels outside the node range are rejected.
        let mut bad = BTreeMap::new();
        bad.insert(9, String::from("x"));
        assert!(classify_majority(&g, &bad, 1, "bad").is_err());
    }

    #[test]
    fn from_pairs_validation() {
        assert!(Graph::from_pairs(3, &[(0, 0)]).is_err());
        assert!(Graph::from_pairs(3, &[(0, 3)]).is_err());
        assert!(Graph::from_pairs(3, &[(0, 1), (1, 0)]).is_err());
    }

    #[test]
    fn centrality_never_exceeds_degree() {
        let mut edges = complete(4, 0);
        edges.extend([(2, 7), (7, 8), (8, 9), (9, 7), (1, 11)]);
        let g = Graph::from_pairs(12, &edges).unwrap();
        for s in graph_stats(&g) {
            assert!(s.clustering_coeff >= 0.0 && s.clustering_coeff <= 1.0);
            assert!(s.centrality <= s.degree as f64 + 1e-15);
        }
    }
}
