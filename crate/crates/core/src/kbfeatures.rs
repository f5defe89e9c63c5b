//! Triple-store features: subject/object counts, their distinct type counts,
//! and the best external social score among an entity's profiles.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::ingest::{Object, SocialScoreMap, TripleStore};
use crate::tsv;

/// How subject/object counts treat repeated partners.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CountMode {
    /// Every qualifying triple counts.
    #[default]
    Occurrences,
    /// Each distinct partner entity counts once.
    Distinct,
}

impl std::str::FromStr for CountMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "occurrences" => Ok(CountMode::Occurrences),
            "distinct" => Ok(CountMode::Distinct),
            other => Err(format!("unknown count mode {other:?} (expected occurrences|distinct)")),
        }
    }
}

impl CountMode {
    pub fn as_str(self) -> &'static str {
        match self {
            CountMode::Occurrences => "occurrences",
            CountMode::Distinct => "distinct",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KbFeatureConfig {
    pub type_predicate: String,
    pub social_predicate: String,
    pub count_mode: CountMode,
}

impl Default for KbFeatureConfig {
    fn default() -> Self {
        KbFeatureConfig {
            type_predicate: "type".to_string(),
            social_predicate: "social_profile".to_string(),
            count_mode: CountMode::Occurrences,
        }
    }
}

/// Lookup tables over a [`TripleStore`].
///
/// Type assertions are kept apart from the entity-to-entity edges: they feed
/// the type counts but never the subject/object counts.
#[derive(Debug)]
pub struct TripleIndex<'a> {
    count_mode: CountMode,
    types: HashMap<&'a str, BTreeSet<&'a str>>,
    /// subject -> entity objects of non-type triples
    outgoing: HashMap<&'a str, Vec<&'a str>>,
    /// entity object -> subjects of non-type triples
    incoming: HashMap<&'a str, Vec<&'a str>>,
    social: HashMap<&'a str, Vec<&'a str>>,
    mentioned: HashSet<&'a str>,
    type_label_count: usize,
}

impl<'a> TripleIndex<'a> {
    pub fn new(store: &'a TripleStore, config: &KbFeatureConfig) -> Self {
        let mut index = TripleIndex {
            count_mode: config.count_mode,
            types: HashMap::new(),
            outgoing: HashMap::new(),
            incoming: HashMap::new(),
            social: HashMap::new(),
            mentioned: HashSet::new(),
            type_label_count: 0,
        };
        let mut labels = HashSet::new();
        for t in &store.triples {
            let s = t.subject.as_str();
            index.mentioned.insert(s);
            if let Some(o) = t.object.as_entity() {
                index.mentioned.insert(o);
            }
            if t.predicate == config.type_predicate {
                let label = t.object.text();
                labels.insert(label);
                index.types.entry(s).or_default().insert(label);
            } else {
                match &t.object {
                    Object::Literal(profile) if t.predicate == config.social_predicate => {
                        index.social.entry(s).or_default().push(profile);
                    }
                    Object::Literal(_) => {}
                    Object::Entity(o) => {
                        index.outgoing.entry(s).or_default().push(o);
                        index.incoming.entry(o).or_default().push(s);
                    }
                }
            }
        }
        index.type_label_count = labels.len();
        index
    }

    /// Whether the entity occurs anywhere in the store.
    pub fn mentions(&self, kb_id: &str) -> bool {
        self.mentioned.contains(kb_id)
    }

    /// Number of distinct type labels asserted anywhere in the store.
    pub fn type_label_count(&self) -> usize {
        self.type_label_count
    }

    pub fn types_of(&self, kb_id: &str) -> Option<&BTreeSet<&'a str>> {
        self.types.get(kb_id)
    }

    fn count_and_types(&self, partners: Option<&Vec<&'a str>>) -> (usize, usize) {
        let Some(partners) = partners else {
            return (0, 0);
        };
        let count = match self.count_mode {
            CountMode::Occurrences => partners.len(),
            CountMode::Distinct => partners.iter().collect::<HashSet<_>>().len(),
        };
        let types: HashSet<&str> = partners
            .iter()
            .filter_map(|p| self.types.get(p))
            .flatten()
            .copied()
            .collect();
        (count, types.len())
    }
}

/// `(object_count, object_type_count)`: entity objects this entity points to
/// through non-type predicates, and the distinct types of those objects.
pub fn object_features(index: &TripleIndex<'_>, kb_id: &str) -> (usize, usize) {
    index.count_and_types(index.outgoing.get(kb_id))
}

/// `(subject_count, subject_type_count)`: the mirror of [`object_features`]
/// with the entity in object position.
pub fn subject_features(index: &TripleIndex<'_>, kb_id: &str) -> (usize, usize) {
    index.count_and_types(index.incoming.get(kb_id))
}

/// Maximum score among the entity's social profiles found in `scores`.
pub fn social_score_feature(index: &TripleIndex<'_>, scores: &SocialScoreMap, kb_id: &str) -> Option<f64> {
    index
        .social
        .get(kb_id)?
        .iter()
        .filter_map(|p| scores.get(p))
        .reduce(f64::max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TripleFeatureRow {
    pub kb_id: String,
    /// False when the entity never occurs in the store; its counts are then absent.
    pub in_store: bool,
    pub subject_count: usize,
    pub subject_type_count: usize,
    pub object_count: usize,
    pub object_type_count: usize,
    pub social_score: Option<f64>,
}

impl TripleFeatureRow {
    pub fn counts(&self) -> Option<[usize; 4]> {
        self.in_store.then_some([
            self.subject_count,
            self.subject_type_count,
            self.object_count,
            self.object_type_count,
        ])
    }
}

pub fn triple_feature_row(index: &TripleIndex<'_>, scores: &SocialScoreMap, kb_id: &str) -> TripleFeatureRow {
    let (subject_count, subject_type_count) = subject_features(index, kb_id);
    let (object_count, object_type_count) = object_features(index, kb_id);
    TripleFeatureRow {
        kb_id: kb_id.to_string(),
        in_store: index.mentions(kb_id),
        subject_count,
        subject_type_count,
        object_count,
        object_type_count,
        social_score: social_score_feature(index, scores, kb_id),
    }
}

/// Rows for every id in `kb_ids`, in the same order.
pub fn triple_feature_rows(
    index: &TripleIndex<'_>,
    scores: &SocialScoreMap,
    kb_ids: &[&str],
) -> Vec<TripleFeatureRow> {
    kb_ids
        .par_iter()
        .map(|id| triple_feature_row(index, scores, id))
        .collect()
}

/// `kb_id  subject#  subject_types#  object#  object_types#  social_score`, `-` for absent.
pub fn write_feature_dump(rows: &[TripleFeatureRow]) -> String {
    let mut out = String::new();
    for r in rows {
        let counts = match r.counts() {
            Some(c) => c.map(|x| x.to_string()).join("\t"),
            None => [tsv::ABSENT; 4].join("\t"),
        };
        let _ = writeln!(out, "{}\t{}\t{}", r.kb_id, counts, tsv::fmt_opt_real(r.social_score));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{external_scores_from_str, triples_from_str};

    fn store(text: &str) -> TripleStore {
        triples_from_str(text).value
    }

    #[test]
    fn object_example() {
        let s = store("Q1\tfounded_by\tkb:Q2\nQ1\thq_in\tkb:Q3\nQ2\ttype\tkb:T_person\nQ3\ttype\tkb:T_city\n");
        let idx = TripleIndex::new(&s, &KbFeatureConfig::default());
        assert_eq!(object_features(&idx, "Q1"), (2, 2));
        assert_eq!(object_features(&idx, "Q404"), (0, 0));
        assert_eq!(idx.type_label_count(), 2);
    }

    #[test]
    fn literal_objects_do_not_count() {
        let s = store("Q1\tname\tApple\nQ1\tsocial_profile\ttwitter:apple\n");
        let idx = TripleIndex::new(&s, &KbFeatureConfig::default());
        assert_eq!(object_features(&idx, "Q1"), (0, 0));
    }

    #[test]
    fn subject_example() {
        let s = store(
            "Q1\tfounded_by\tkb:Q2\nQ5\tknows\tkb:Q2\nQ1\ttype\tkb:T_org\nQ5\ttype\tkb:T_person\n",
        );
        let idx = TripleIndex::new(&s, &KbFeatureConfig::default());
        assert_eq!(subject_features(&idx, "Q2"), (2, 2));
        assert_eq!(subject_features(&idx, "Q1"), (0, 0));
        // Type nodes are never counted as referenced through the type predicate.
        assert_eq!(subject_features(&idx, "T_org"), (0, 0));
    }

    #[test]
    fn distinct_mode_counts_partners_once() {
        let s = store("Q1\ta\tkb:Q2\nQ1\tb\tkb:Q2\nQ1\tc\tkb:Q3\n");
        let occ = TripleIndex::new(&s, &KbFeatureConfig::default());
        assert_eq!(object_features(&occ, "Q1").0, 3);
        let cfg = KbFeatureConfig {
            count_mode: CountMode::Distinct,
            ..KbFeatureConfig::default()
        };
        let dist = TripleIndex::new(&s, &cfg);
        assert_eq!(object_features(&dist, "Q1").0, 2);
        assert_eq!(subject_features(&dist, "Q2").0, 1);
    }

    #[test]
    fn social_score_examples() {
        let scores = external_scores_from_str("twitter:apple\t90\nfacebook:apple\t70\n").value;
        let s = store("Q1\tsocial_profile\ttwitter:apple\nQ1\tsocial_profile\tfacebook:apple\nQ2\tsocial_profile\ttwitter:nobody\nQ3\tname\tx\n");
        let idx = TripleIndex::new(&s, &KbFeatureConfig::default());
        assert_eq!(social_score_feature(&idx, &scores, "Q1"), Some(90.0));
        assert_eq!(social_score_feature(&idx, &scores, "Q2"), None);
        assert_eq!(social_score_feature(&idx, &scores, "Q3"), None);
    }

    #[test]
    fn custom_predicates() {
        let s = store("Q1\tisa\tkb:T\nQ1\ttype\tkb:Q2\n");
        let cfg = KbFeatureConfig {
            type_predicate: "isa".into(),
            ..KbFeatureConfig::default()
        };
        let idx = TripleIndex::new(&s, &cfg);
        assert_eq!(object_features(&idx, "Q1"), (1, 0));
        assert_eq!(subject_features(&idx, "Q2"), (1, 1));
        assert_eq!(idx.types_of("Q1").unwrap().len(), 1);
    }

    #[test]
    fn rows_and_dump() {
        let s = store("Q1\tknows\tkb:Q2\n");
        let idx = TripleIndex::new(&s, &KbFeatureConfig::default());
        let rows = triple_feature_rows(&idx, &SocialScoreMap::default(), &["Q1", "Q9"]);
        assert!(rows[0].in_store);
        assert!(!rows[1].in_store);
        assert_eq!(
            write_feature_dump(&rows),
            "Q1\t0\t0\t1\t0\t-\nQ9\t-\t-\t-\t-\t-\n"
        );
    }
}
