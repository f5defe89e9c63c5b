mod common;

use std::fs;
use std::path::{Path, PathBuf};

use common::*;

/// Copy of the toy corpus in a scratch directory, so inputs can be edited.
struct Scratch {
    dir: tempfile::TempDir,
}

impl Scratch {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        for entry in fs::read_dir(manifest_dir().join("fixtures/toy")).unwrap() {
            let p = entry.unwrap().path();
            fs::copy(&p, dir.path().join(p.file_name().unwrap())).unwrap();
        }
        Scratch { dir }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn conf(&self) -> String {
        self.path("toy.conf").to_str().unwrap().to_string()
    }

    fn out(&self) -> String {
        self.path("out").to_str().unwrap().to_string()
    }

    fn run(&self, args: &[&str]) -> (i32, String, String) {
        let conf = self.conf();
        let out = self.out();
        let mut full = vec![args[0], "--config", &conf, "-o", &out];
        full.extend_from_slice(&args[1..]);
        run_cli(&full)
    }

    fn ok(&self, args: &[&str]) {
        let (code, _, err) = self.run(args);
        assert_eq!(code, 0, "{args:?} failed: {err}");
    }

    fn rows(&self, rel: &str) -> Vec<Vec<String>> {
        tsv_rows(&Path::new(&self.out()).join(rel))
    }
}

fn ingest_row<'a>(rows: &'a [Vec<String>], file: &str) -> &'a [String] {
    rows.iter().find(|r| r[0] == file).unwrap()
}

#[test]
fn toy_ingest_has_no_rejects() {
    let s = Scratch::new();
    s.ok(&["ingest"]);
    let rows = s.rows("stores/ingest_report.tsv");
    assert_eq!(rows.len(), 6);
    for r in &rows {
        assert_eq!(r[3], "0", "{r:?}");
    }
    assert!(s.rows("stores/ingest_rejects.tsv").is_empty());
}

#[test]
fn one_malformed_link_line_is_rejected_and_counted() {
    let s = Scratch::new();
    let mut links = fs::read_to_string(s.path("links.tsv")).unwrap();
    links.push_str("en\tnot-a-page-id\n");
    fs::write(s.path("links.tsv"), links).unwrap();
    s.ok(&["ingest"]);
    let rows = s.rows("stores/ingest_report.tsv");
    assert_eq!(ingest_row(&rows, "links")[3], "1");
    assert_eq!(ingest_row(&rows, "pages")[3], "0");
    let rejects = s.rows("stores/ingest_rejects.tsv");
    assert_eq!(rejects.len(), 1);
    assert_eq!(rejects[0][0], "links");
}

#[test]
fn missing_pages_file_exits_2_naming_the_path() {
    let s = Scratch::new();
    fs::remove_file(s.path("pages.tsv")).unwrap();
    let (code, _, err) = s.run(&["ingest"]);
    assert_eq!(code, 2);
    assert!(err.contains("pages.tsv"), "{err}");
}

#[test]
fn later_stages_without_prerequisites_exit_2() {
    let s = Scratch::new();
    for stage in ["features", "train", "eval", "rank", "report"] {
        let (code, _, err) = s.run(&[stage]);
        assert_eq!(code, 2, "{stage}: {err}");
    }
    s.ok(&["ingest"]);
    s.ok(&["features"]);
    let (code, _, err) = s.run(&["rank"]);
    assert_eq!(code, 2, "rank without weights: {err}");
    assert!(err.contains("weights.tsv"), "{err}");
}

#[test]
fn invalid_parameters_exit_2() {
    let s = Scratch::new();
    assert_eq!(s.run(&["ingest", "--damping", "1.5"]).0, 2);
    assert_eq!(s.run(&["ingest", "--train-fraction", "1"]).0, 2);
    assert_eq!(s.run(&["ingest", "--threshold", "6"]).0, 2);
}

#[test]
fn features_cover_every_record_with_ten_columns() {
    let s = Scratch::new();
    s.ok(&["ingest"]);
    s.ok(&["features"]);
    let pages = s.rows("stores/pages.tsv");
    for file in ["features/raw_matrix.tsv", "features/normalized_matrix.tsv"] {
        let rows = s.rows(file);
        assert_eq!(rows.len(), pages.len());
        assert!(rows.iter().all(|r| r.len() == 12));
    }
    assert_eq!(s.rows("features/normalization.tsv").len(), 10);
}

#[test]
fn rerunning_a_stage_is_byte_identical() {
    let s = Scratch::new();
    s.ok(&["run"]);
    let before = snapshot(Path::new(&s.out()));
    s.ok(&["features"]);
    s.ok(&["rank"]);
    assert_eq!(before, snapshot(Path::new(&s.out())));
}

#[test]
fn empty_triples_file_leaves_triple_features_absent() {
    let s = Scratch::new();
    fs::write(s.path("triples.tsv"), "").unwrap();
    s.ok(&["ingest"]);
    s.ok(&["features"]);
    for r in s.rows("features/raw_matrix.tsv") {
        // subject/object counts, their type counts and the social score
        assert!(r[7..].iter().all(|v| v == "-"), "{r:?}");
    }
    s.ok(&["train"]);
    let report = s.rows("model/eval_report.tsv");
    for name in ["subject_count", "subject_type_count", "object_count", "object_type_count", "social_score"] {
        let row = report.iter().find(|r| r[0] == name).unwrap();
        assert_eq!(row[4].parse::<f64>().unwrap(), 0.0, "{name}");
    }
}

#[test]
fn seed_changes_the_split() {
    let s = Scratch::new();
    s.ok(&["ingest"]);
    s.ok(&["features"]);
    s.ok(&["train"]);
    let first = s.rows("model/split.tsv");
    s.ok(&["train", "--seed", "7"]);
    let second = s.rows("model/split.tsv");
    assert_eq!(first.len(), second.len());
    assert_ne!(first, second);
    let header = fs::read_to_string(Path::new(&s.out()).join("model/split.tsv")).unwrap();
    assert!(header.contains("seed=7"));
}

#[test]
fn labels_for_unknown_entities_only_exit_2() {
    let s = Scratch::new();
    fs::write(s.path("labels.tsv"), "Q9001\t3\nQ9002\t5\nQ9003\t1\n").unwrap();
    s.ok(&["ingest"]);
    s.ok(&["features"]);
    let (code, _, err) = s.run(&["train"]);
    assert_eq!(code, 2, "{err}");
}

#[test]
fn top_n_truncates_ranked_lists() {
    let s = Scratch::new();
    s.ok(&["run", "--top-n", "5"]);
    for lang in ["en", "es", "fr"] {
        let rows = s.rows(&format!("ranked/ranked_{lang}.tsv"));
        assert_eq!(rows.len(), 5);
        let ranks: Vec<&str> = rows.iter().map(|r| r[0].as_str()).collect();
        assert_eq!(ranks, ["1", "2", "3", "4", "5"]);
        assert!(rows.iter().all(|r| r[3] == lang && r[4].split('.').nth(1).unwrap().len() == 6));
    }
}

#[test]
fn top_n_beyond_catalog_gives_full_lists_and_identical_type_fractions() {
    let s = Scratch::new();
    s.ok(&["run", "--top-n", "100000"]);
    let pages = s.rows("stores/pages.tsv");
    for lang in ["en", "es", "fr"] {
        let n = pages.iter().filter(|r| r[1] == lang).count();
        assert_eq!(s.rows(&format!("ranked/ranked_{lang}.tsv")).len(), n);
        let report = s.rows(&format!("report/type_distribution_{lang}.tsv"));
        let frac = |pop: &str| -> Vec<String> {
            report.iter().filter(|r| r[0] == pop).map(|r| r[2].clone()).collect()
        };
        assert_eq!(frac("global"), frac("top"));
    }
}

#[test]
fn type_fractions_sum_to_one() {
    let s = Scratch::new();
    s.ok(&["run"]);
    for lang in ["en", "es", "fr"] {
        let report = s.rows(&format!("report/type_distribution_{lang}.tsv"));
        assert_eq!(report.len(), 8);
        for pop in ["global", "top"] {
            let sum: f64 = report.iter().filter(|r| r[0] == pop).map(|r| r[2].parse::<f64>().unwrap()).sum();
            assert!((sum - 1.0).abs() < 1e-12, "{lang} {pop}: {sum}");
        }
    }
}

#[test]
fn outputs_carry_stage_header_and_config_hash() {
    let s = Scratch::new();
    s.ok(&["run"]);
    let files = snapshot(Path::new(&s.out()));
    let mut hashes = std::collections::BTreeSet::new();
    for (path, bytes) in &files {
        let text = String::from_utf8(bytes.clone()).unwrap();
        let first = text.lines().next().unwrap();
        let stage = path.components().next().unwrap().as_os_str().to_str().unwrap();
        let expected_stage = match stage {
            "stores" => "ingest",
            "ranked" => "rank",
            "model" => "train",
            other => other,
        };
        assert!(first.starts_with(&format!("# entity-rank stage={expected_stage} version=1 config=")), "{first}");
        hashes.insert(first.rsplit('=').next().unwrap().to_string());
    }
    assert_eq!(hashes.len(), 1);

    s.ok(&["rank", "--top-n", "3"]);
    let ranked = fs::read_to_string(Path::new(&s.out()).join("ranked/ranked_en.tsv")).unwrap();
    assert!(!hashes.contains(ranked.lines().next().unwrap().rsplit('=').next().unwrap()));
}

#[test]
fn flags_override_the_config_file() {
    let s = Scratch::new();
    s.ok(&["run", "--top-n", "4"]);
    assert_eq!(s.rows("ranked/ranked_fr.tsv").len(), 4);
    s.ok(&["rank"]);
    assert_eq!(s.rows("ranked/ranked_fr.tsv").len(), 25);
}
