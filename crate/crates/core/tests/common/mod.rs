//! Brute-force oracles and synthetic data shared by the integration tests.
//! Nothing here goes through the library's indexed code paths.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use entity_rank::ingest::{Language, LabelSet, Object, PageId, Triple, TripleStore};
use entity_rank::model::{NormalizedMatrix, NormalizedRow, Normalizer, FEATURE_COUNT};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn en() -> Language {
    Language::new("en").unwrap()
}

pub fn manifest_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

pub fn toy_config() -> PathBuf {
    manifest_dir().join("fixtures/toy/toy.conf")
}

pub fn binary() -> &'static str {
    env!("CARGO_BIN_EXE_entity-rank")
}

/// Random page ids (not contiguous) and a raw edge list that may contain
/// duplicates and self-loops.
pub fn random_graph(rng: &mut impl Rng, max_nodes: usize, max_edges: usize) -> (Vec<PageId>, Vec<(PageId, PageId)>) {
    let n = rng.random_range(1..=max_nodes);
    let mut ids = BTreeSet::new();
    while ids.len() < n {
        ids.insert(rng.random_range(1..10_000u64));
    }
    let pages: Vec<PageId> = ids.into_iter().collect();
    let m = rng.random_range(0..=max_edges.min(4 * n * n));
    let edges = (0..m)
        .map(|_| (pages[rng.random_range(0..n)], pages[rng.random_range(0..n)]))
        .collect();
    (pages, edges)
}

fn distinct_edges(edges: &[(PageId, PageId)]) -> BTreeSet<(PageId, PageId)> {
    edges.iter().copied().filter(|(a, b)| a != b).collect()
}

/// Dense Google-matrix power iteration, run far past convergence. Output is
/// indexed like `pages` sorted ascending.
pub fn dense_pagerank(pages: &[PageId], edges: &[(PageId, PageId)], damping: f64) -> Vec<f64> {
    let mut pages = pages.to_vec();
    pages.sort_unstable();
    let n = pages.len();
    let idx = |p: PageId| pages.binary_search(&p).unwrap();
    let mut adj = vec![vec![0.0; n]; n];
    for (a, b) in distinct_edges(edges) {
        adj[idx(a)][idx(b)] = 1.0;
    }
    // g[j][i]: probability of stepping i -> j
    let mut g = vec![vec![0.0; n]; n];
    for i in 0..n {
        let out: f64 = adj[i].iter().sum();
        for j in 0..n {
            let walk = if out == 0.0 { 1.0 / n as f64 } else { adj[i][j] / out };
            g[j][i] = damping * walk + (1.0 - damping) / n as f64;
        }
    }
    let mut x = vec![1.0 / n as f64; n];
    for _ in 0..100_000 {
        let y: Vec<f64> = (0..n).map(|j| (0..n).map(|i| g[j][i] * x[i]).sum()).collect();
        let diff: f64 = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).sum();
        x = y;
        if diff < 1e-15 {
            break;
        }
    }
    x
}

/// `(inlinks, outlinks)` per page, counting each distinct non-loop edge once.
pub fn brute_degrees(pages: &[PageId], edges: &[(PageId, PageId)]) -> BTreeMap<PageId, (usize, usize)> {
    let mut out = BTreeMap::new();
    for &p in pages {
        let mut seen_in = Vec::new();
        let mut seen_out = Vec::new();
        for &(a, b) in edges {
            if a == b {
                continue;
            }
            if b == p && !seen_in.contains(&a) {
                seen_in.push(a);
            }
            if a == p && !seen_out.contains(&b) {
                seen_out.push(b);
            }
        }
        out.insert(p, (seen_in.len(), seen_out.len()));
    }
    out
}

/// Number of distinct category names per page over raw `(page, name)` lines.
pub fn brute_category_counts(lines: &[(PageId, String)]) -> BTreeMap<PageId, usize> {
    let mut sorted = lines.to_vec();
    sorted.sort();
    sorted.dedup();
    let mut out = BTreeMap::new();
    for (p, _) in sorted {
        *out.entry(p).or_insert(0) += 1;
    }
    out
}

pub const TYPE_PRED: &str = "type";
pub const SOCIAL_PRED: &str = "social_profile";

/// Random store over `Q0..Q{entities}` with type assertions, entity links,
/// literals, social profiles and duplicate triples.
pub fn random_triples(rng: &mut impl Rng, entities: usize, count: usize) -> TripleStore {
    fn ent(rng: &mut impl Rng, entities: usize) -> String {
        format!("Q{}", rng.random_range(0..entities))
    }
    let mut triples: Vec<Triple> = Vec::with_capacity(count);
    while triples.len() < count {
        let subject = ent(rng, entities);
        let t = match rng.random_range(0..10) {
            0 | 1 => Triple::new(&subject, TYPE_PRED, Object::Entity(format!("T{}", rng.random_range(0..6)))),
            2 => Triple::new(&subject, TYPE_PRED, Object::Literal(format!("lit{}", rng.random_range(0..3)))),
            3 => Triple::new(&subject, "name", Object::Literal(format!("n{}", rng.random_range(0..50)))),
            4 => Triple::new(&subject, SOCIAL_PRED, Object::Literal(format!("tw:{}", rng.random_range(0..20)))),
            5 => Triple::new(&subject, SOCIAL_PRED, Object::Entity(ent(rng, entities))),
            6 if !triples.is_empty() => triples[rng.random_range(0..triples.len())].clone(),
            _ => Triple::new(&subject, &format!("p{}", rng.random_range(0..4)), Object::Entity(ent(rng, entities))),
        };
        triples.push(t);
    }
    TripleStore { triples }
}

fn brute_types(store: &TripleStore, x: &str, type_pred: &str) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for t in &store.triples {
        if t.subject == x && t.predicate == type_pred {
            out.insert(t.object.text().to_string());
        }
    }
    out
}

/// `(object_count, object_type_count)` by scanning every triple.
pub fn brute_object_features(store: &TripleStore, kb: &str, type_pred: &str) -> (usize, usize) {
    let mut count = 0;
    let mut types = BTreeSet::new();
    for t in &store.triples {
        if t.subject != kb || t.predicate == type_pred {
            continue;
        }
        if let Object::Entity(o) = &t.object {
            count += 1;
            types.extend(brute_types(store, o, type_pred));
        }
    }
    (count, types.len())
}

/// `(subject_count, subject_type_count)` by scanning every triple.
pub fn brute_subject_features(store: &TripleStore, kb: &str, type_pred: &str) -> (usize, usize) {
    let mut count = 0;
    let mut types = BTreeSet::new();
    for t in &store.triples {
        if t.predicate == type_pred {
            continue;
        }
        if let Object::Entity(o) = &t.object {
            if o == kb {
                count += 1;
                types.extend(brute_types(store, &t.subject, type_pred));
            }
        }
    }
    (count, types.len())
}

/// Single-language matrix of uniform `[0, 1)` feature values.
pub fn uniform_matrix(rng: &mut impl Rng, n: usize) -> NormalizedMatrix {
    let rows = (0..n)
        .map(|i| NormalizedRow {
            kb_id: format!("E{i:05}"),
            language: en(),
            values: std::array::from_fn(|_| rng.random::<f64>()),
        })
        .collect();
    NormalizedMatrix::from_rows(
        rows,
        Normalizer {
            denominators: [1.0; FEATURE_COUNT],
        },
    )
}

pub fn gaussian(rng: &mut impl Rng, sigma: f64) -> f64 {
    Normal::new(0.0, sigma).unwrap().sample(rng)
}

/// Integer 1..=5 labels from `1 + 4 * (planted · x) + noise`, rounded half up.
pub fn linear_labels(rng: &mut impl Rng, matrix: &NormalizedMatrix, planted: &[f64; FEATURE_COUNT], sigma: f64) -> LabelSet {
    matrix
        .rows
        .iter()
        .map(|r| {
            let s: f64 = r.values.iter().zip(planted).map(|(x, w)| x * w).sum();
            let y = 1.0 + 4.0 * s + gaussian(rng, sigma);
            (r.kb_id.clone(), (y + 0.5).floor().clamp(1.0, 5.0) as u8)
        })
        .collect()
}

/// Run the binary, returning (exit code, stdout, stderr).
pub fn run_cli(args: &[&str]) -> (i32, String, String) {
    let out = std::process::Command::new(binary())
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("spawn entity-rank");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

/// Every regular file under `root`, keyed by relative path.
pub fn snapshot(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.insert(path.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&path).unwrap());
            }
        }
    }
    out
}

/// Non-comment lines of a TSV file, split on tabs.
pub fn tsv_rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap_or_else(|e| panic!("{}: {e}", path.display()))
        .lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|l| l.split('\t').map(str::to_string).collect())
        .collect()
}
