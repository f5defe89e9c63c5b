//! Per-language link graphs and the five Wikipedia-derived features.
//!
//! Graphs are stored as a pair of compressed sparse row arrays (forward and
//! reverse) over dense node indices. Node `i` is the `i`-th smallest page id
//! of the language, so node order and every derived output are deterministic.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::ingest::{CategoryMap, EntityCatalog, Language, LinkEdgeList, PageId};
use crate::tsv;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GraphError {
    #[error("graph has no nodes")]
    EmptyGraph,
    #[error("invalid pagerank parameter: {0}")]
    InvalidParameter(String),
}

/// Compressed adjacency: neighbors of node `v` are `targets[offsets[v]..offsets[v + 1]]`.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Csr {
    offsets: Vec<usize>,
    targets: Vec<u32>,
}

impl Csr {
    /// `edges` must be sorted by source and free of duplicates.
    fn from_sorted(n: usize, edges: impl Iterator<Item = (u32, u32)> + Clone) -> Self {
        let mut offsets = vec![0usize; n + 1];
        for (s, _) in edges.clone() {
            offsets[s as usize + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let targets = edges.map(|(_, d)| d).collect();
        Csr { offsets, targets }
    }

    fn neighbors(&self, v: usize) -> &[u32] {
        &self.targets[self.offsets[v]..self.offsets[v + 1]]
    }

    fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }
}

/// Directed, deduplicated, loop-free link graph of one language.
#[derive(Debug, Clone)]
pub struct LinkGraph {
    language: Language,
    page_ids: Vec<PageId>,
    index: HashMap<PageId, u32>,
    forward: Csr,
    reverse: Csr,
}

/// Build the graph of `language` over every catalog page in that language.
pub fn build_graph(edges: &LinkEdgeList, catalog: &EntityCatalog, language: &Language) -> LinkGraph {
    let pages: Vec<PageId> = catalog.pages_in(language).map(|r| r.page_id).collect();
    LinkGraph::from_pages(language.clone(), pages, edges.edges_for(language))
}

impl LinkGraph {
    /// Edges whose endpoints are not in `pages`, and self-loops, are ignored.
    pub fn from_pages(language: Language, mut pages: Vec<PageId>, edges: &[(PageId, PageId)]) -> Self {
        pages.sort_unstable();
        pages.dedup();
        let index: HashMap<PageId, u32> = pages
            .iter()
            .enumerate()
            .map(|(i, &p)| (p, i as u32))
            .collect();

        let mut pairs: Vec<(u32, u32)> = edges
            .iter()
            .filter(|(s, d)| s != d)
            .filter_map(|(s, d)| Some((*index.get(s)?, *index.get(d)?)))
            .collect();
        pairs.sort_unstable();
        pairs.dedup();
        let n = pages.len();
        let forward = Csr::from_sorted(n, pairs.iter().copied());

        let mut transposed: Vec<(u32, u32)> = pairs.iter().map(|&(s, d)| (d, s)).collect();
        transposed.sort_unstable();
        let reverse = Csr::from_sorted(n, transposed.iter().copied());

        LinkGraph {
            language,
            page_ids: pages,
            index,
            forward,
            reverse,
        }
    }

    pub fn language(&self) -> &Language {
        &self.language
    }

    pub fn node_count(&self) -> usize {
        self.page_ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.forward.targets.len()
    }

    pub fn page_id(&self, node: usize) -> PageId {
        self.page_ids[node]
    }

    pub fn page_ids(&self) -> &[PageId] {
        &self.page_ids
    }

    pub fn node_of(&self, page: PageId) -> Option<usize> {
        self.index.get(&page).map(|&i| i as usize)
    }

    pub fn out_neighbors(&self, node: usize) -> &[u32] {
        self.forward.neighbors(node)
    }

    pub fn in_neighbors(&self, node: usize) -> &[u32] {
        self.reverse.neighbors(node)
    }

    pub fn out_degree(&self, node: usize) -> usize {
        self.forward.degree(node)
    }

    pub fn in_degree(&self, node: usize) -> usize {
        self.reverse.degree(node)
    }

    /// Edges as `(source node, target node)` pairs, sorted.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.node_count())
            .flat_map(move |v| self.out_neighbors(v).iter().map(move |&w| (v, w as usize)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PageRankConfig {
    pub damping: f64,
    pub max_iters: usize,
    /// Stop once the L1 change between iterates drops below this.
    pub tol: f64,
}

impl Default for PageRankConfig {
    fn default() -> Self {
        PageRankConfig {
            damping: 0.85,
            max_iters: 100,
            tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PageRankVector {
    pub scores: Vec<f64>,
    pub damping: f64,
    pub iterations: usize,
    /// L1 change of the last iteration.
    pub residual: f64,
    pub converged: bool,
}

/// Power iteration with uniform teleport; dangling nodes spread their mass
/// uniformly over all nodes.
pub fn pagerank(graph: &LinkGraph, config: &PageRankConfig) -> Result<PageRankVector, GraphError> {
    let PageRankConfig {
        damping,
        max_iters,
        tol,
    } = *config;
    if !(damping > 0.0 && damping < 1.0) {
        return Err(GraphError::InvalidParameter(format!("damping {damping} not in (0, 1)")));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(GraphError::InvalidParameter(format!("tol {tol} must be > 0")));
    }
    if max_iters == 0 {
        return Err(GraphError::InvalidParameter("max_iters must be >= 1".into()));
    }
    let n = graph.node_count();
    if n == 0 {
        return Err(GraphError::EmptyGraph);
    }

    let inv_n = 1.0 / n as f64;
    let inv_out: Vec<f64> = (0..n)
        .map(|v| match graph.out_degree(v) {
            0 => 0.0,
            d => 1.0 / d as f64,
        })
        .collect();

    let mut rank = vec![inv_n; n];
    let mut next = vec![0.0; n];
    let mut share = vec![0.0; n];
    let mut iterations = 0;
    let mut residual = f64::INFINITY;

    while iterations < max_iters {
        iterations += 1;
        let mut dangling = 0.0;
        for v in 0..n {
            share[v] = rank[v] * inv_out[v];
            if inv_out[v] == 0.0 {
                dangling += rank[v];
            }
        }
        let base = (1.0 - damping) * inv_n + damping * dangling * inv_n;
        next.par_iter_mut().enumerate().for_each(|(v, x)| {
            let incoming: f64 = graph.in_neighbors(v).iter().map(|&u| share[u as usize]).sum();
            *x = base + damping * incoming;
        });
        residual = rank.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut rank, &mut next);
        if residual < tol {
            break;
        }
    }

    Ok(PageRankVector {
        scores: rank,
        damping,
        iterations,
        residual,
        converged: residual < tol,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DegreeCounts {
    pub inlinks: usize,
    pub outlinks: usize,
}

/// In/out degree of every node, indexed by node.
pub fn degree_features(graph: &LinkGraph) -> Vec<DegreeCounts> {
    (0..graph.node_count())
        .map(|v| DegreeCounts {
            inlinks: graph.in_degree(v),
            outlinks: graph.out_degree(v),
        })
        .collect()
}

/// `inlinks / max(outlinks, 1)`; sink pages keep their raw inlink count.
pub fn in_out_ratio(inlink_count: usize, outlink_count: usize) -> f64 {
    inlink_count as f64 / outlink_count.max(1) as f64
}

/// Number of distinct categories per page. Pages missing from the result have 0.
pub fn category_counts(categories: &CategoryMap) -> BTreeMap<(Language, PageId), usize> {
    categories
        .categories
        .iter()
        .map(|(k, names)| (k.clone(), names.len()))
        .collect()
}

/// The five link-graph features of one page.
#[derive(Debug, Clone, PartialEq)]
pub struct WikiFeatureRow {
    pub page_id: PageId,
    pub pagerank: f64,
    pub inlinks: usize,
    pub outlinks: usize,
    pub in_out_ratio: f64,
    pub category_count: usize,
}

/// All link-graph features of one language, rows ordered by page id.
#[derive(Debug, Clone, PartialEq)]
pub struct LanguageFeatures {
    pub language: Language,
    pub node_count: usize,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
    pub rows: Vec<WikiFeatureRow>,
}

impl LanguageFeatures {
    pub fn row(&self, page_id: PageId) -> Option<&WikiFeatureRow> {
        self.rows
            .binary_search_by_key(&page_id, |r| r.page_id)
            .ok()
            .map(|i| &self.rows[i])
    }
}

/// Build the graph for `language` and compute its feature rows.
pub fn language_features(
    edges: &LinkEdgeList,
    categories: &CategoryMap,
    catalog: &EntityCatalog,
    language: &Language,
    config: &PageRankConfig,
) -> Result<LanguageFeatures, GraphError> {
    let graph = build_graph(edges, catalog, language);
    let pr = pagerank(&graph, config)?;
    let degrees = degree_features(&graph);
    let rows = degrees
        .iter()
        .enumerate()
        .map(|(v, d)| {
            let page_id = graph.page_id(v);
            WikiFeatureRow {
                page_id,
                pagerank: pr.scores[v],
                inlinks: d.inlinks,
                outlinks: d.outlinks,
                in_out_ratio: in_out_ratio(d.inlinks, d.outlinks),
                category_count: categories.get(language, page_id).map_or(0, |s| s.len()),
            }
        })
        .collect();
    Ok(LanguageFeatures {
        language: language.clone(),
        node_count: graph.node_count(),
        iterations: pr.iterations,
        residual: pr.residual,
        converged: pr.converged,
        rows,
    })
}

/// `language  page_id  pagerank  inlinks  outlinks  in_out_ratio  category_count`
pub fn write_feature_dump(features: &[LanguageFeatures]) -> String {
    let mut out = String::new();
    for lf in features {
        for r in &lf.rows {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                lf.language,
                r.page_id,
                tsv::fmt_real(r.pagerank),
                r.inlinks,
                r.outlinks,
                tsv::fmt_real(r.in_out_ratio),
                r.category_count
            );
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lang() -> Language {
        Language::new("en").unwrap()
    }

    fn graph(n: u64, edges: &[(u64, u64)]) -> LinkGraph {
        LinkGraph::from_pages(lang(), (0..n).collect(), edges)
    }

    /// Dense power iteration on the explicit Google matrix.
    fn dense_pagerank(n: usize, edges: &[(usize, usize)], d: f64, iters: usize) -> Vec<f64> {
        let mut adj = vec![vec![0.0; n]; n];
        for &(s, t) in edges {
            adj[s][t] = 1.0;
        }
        let mut g = vec![vec![0.0; n]; n];
        for i in 0..n {
            let deg: f64 = adj[i].iter().sum();
            for j in 0..n {
                let walk = if deg == 0.0 { 1.0 / n as f64 } else { adj[i][j] / deg };
                g[i][j] = d * walk + (1.0 - d) / n as f64;
            }
        }
        let mut x = vec![1.0 / n as f64; n];
        for _ in 0..iters {
            x = (0..n).map(|j| (0..n).map(|i| x[i] * g[i][j]).sum()).collect();
        }
        x
    }

    #[test]
    fn duplicate_edges_collapse() {
        let g = graph(2, &[(0, 1), (0, 1)]);
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn edgeless_graph_keeps_nodes() {
        let g = graph(3, &[]);
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn two_cycle_degrees() {
        let g = graph(2, &[(0, 1), (1, 0)]);
        assert_eq!(g.out_degree(0), 1);
        assert_eq!(g.in_degree(0), 1);
    }

    #[test]
    fn page_ids_map_to_sorted_nodes() {
        let g = LinkGraph::from_pages(lang(), vec![42, 17, 99], &[(42, 17), (17, 5)]);
        assert_eq!(g.page_ids(), &[17, 42, 99]);
        assert_eq!(g.node_of(42), Some(1));
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.in_neighbors(0), &[1]);
    }

    #[test]
    fn pagerank_two_cycle_is_uniform() {
        let pr = pagerank(&graph(2, &[(0, 1), (1, 0)]), &PageRankConfig::default()).unwrap();
        assert!((pr.scores[0] - 0.5).abs() < 1e-12);
        assert!((pr.scores[1] - 0.5).abs() < 1e-12);
        assert!(pr.converged);
    }

    #[test]
    fn pagerank_single_node() {
        let pr = pagerank(&graph(1, &[]), &PageRankConfig::default()).unwrap();
        assert_eq!(pr.scores, vec![1.0]);
    }

    #[test]
    fn pagerank_chain_matches_oracles() {
        let cfg = PageRankConfig {
            damping: 0.85,
            max_iters: 1000,
            tol: 1e-12,
        };
        let pr = pagerank(&graph(3, &[(0, 1), (1, 2)]), &cfg).unwrap();
        let dense = dense_pagerank(3, &[(0, 1), (1, 2)], 0.85, 500);
        // Exact stationary distribution of the chain with a dangling tail.
        let exact = [400.0 / 2169.0, 740.0 / 2169.0, 1029.0 / 2169.0];
        for i in 0..3 {
            assert!((pr.scores[i] - dense[i]).abs() < 1e-8);
            assert!((pr.scores[i] - exact[i]).abs() < 1e-8);
        }
        assert!(pr.converged);
    }

    #[test]
    fn pagerank_parameter_errors() {
        let g = graph(2, &[]);
        let bad = |damping, max_iters, tol| PageRankConfig {
            damping,
            max_iters,
            tol,
        };
        assert!(matches!(pagerank(&g, &bad(0.0, 10, 1e-9)), Err(GraphError::InvalidParameter(_))));
        assert!(matches!(pagerank(&g, &bad(1.0, 10, 1e-9)), Err(GraphError::InvalidParameter(_))));
        assert!(matches!(pagerank(&g, &bad(0.5, 10, 0.0)), Err(GraphError::InvalidParameter(_))));
        assert!(matches!(pagerank(&g, &bad(0.5, 0, 1e-9)), Err(GraphError::InvalidParameter(_))));
        assert_eq!(
            pagerank(&graph(0, &[]), &PageRankConfig::default()),
            Err(GraphError::EmptyGraph)
        );
    }

    #[test]
    fn pagerank_reports_non_convergence() {
        let cfg = PageRankConfig {
            damping: 0.85,
            max_iters: 2,
            tol: 1e-15,
        };
        let pr = pagerank(&graph(3, &[(0, 1), (1, 2)]), &cfg).unwrap();
        assert_eq!(pr.iterations, 2);
        assert!(!pr.converged);
    }

    #[test]
    fn degree_examples() {
        let g = graph(4, &[(0, 1), (0, 2)]);
        let d = degree_features(&g);
        assert_eq!(d[0], DegreeCounts { inlinks: 0, outlinks: 2 });
        assert_eq!(d[3], DegreeCounts::default());
    }

    #[test]
    fn ratio_examples() {
        assert_eq!(in_out_ratio(10, 5), 2.0);
        assert_eq!(in_out_ratio(7, 0), 7.0);
        assert_eq!(in_out_ratio(0, 9), 0.0);
    }

    #[test]
    fn category_count_examples() {
        let mut map = CategoryMap::default();
        map.categories
            .insert((lang(), 1), ["Fruit".to_string(), "Plants".to_string()].into());
        let counts = category_counts(&map);
        assert_eq!(counts[&(lang(), 1)], 2);
        assert_eq!(counts.get(&(lang(), 2)).copied().unwrap_or(0), 0);
    }
}
