//! Parsers for the six tabular input files and the validated stores they build.
//!
//! Every parser follows the same rule: fatal problems (unreadable file,
//! duplicate catalog keys) abort with an [`IngestError`]; anything wrong with
//! a single line is skipped and recorded in the accompanying [`ParseReport`].
//! Stores serialize back into their own input format in canonical order, so
//! re-parsing a serialized store reproduces it exactly.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::tsv::{self, ParseReport, ReadError, RejectReason};

pub type PageId = u64;

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error(transparent)]
    Read(#[from] ReadError),
    #[error("line {line}: duplicate kb_id {kb_id} for language {language}")]
    DuplicateKbId {
        kb_id: String,
        language: Language,
        line: usize,
    },
    #[error("line {line}: duplicate page {page_id} for language {language}")]
    DuplicatePage {
        language: Language,
        page_id: PageId,
        line: usize,
    },
    #[error("invalid record: {0}")]
    InvalidRecord(String),
}

/// A parsed store together with its line accounting.
#[derive(Debug, Clone)]
pub struct Parsed<T> {
    pub value: T,
    pub report: ParseReport,
}

/// Wikipedia language code such as `en` or `zh_yue`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Language(String);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid language code {0:?}")]
pub struct InvalidLanguage(pub String);

impl Language {
    pub fn new(code: &str) -> Result<Self, InvalidLanguage> {
        let valid = match code.split_once('_') {
            Some((head, tail)) => {
                is_two_lower(head) && !tail.is_empty() && tail.bytes().all(|b| b.is_ascii_lowercase())
            }
            None => is_two_lower(code),
        };
        if valid {
            Ok(Language(code.to_string()))
        } else {
            Err(InvalidLanguage(code.to_string()))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

fn is_two_lower(s: &str) -> bool {
    s.len() == 2 && s.bytes().all(|b| b.is_ascii_lowercase())
}

impl FromStr for Language {
    type Err = InvalidLanguage;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Language::new(s)
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Coarse entity type used by the type-distribution report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub enum EntityType {
    Person,
    Location,
    Organization,
    #[default]
    Misc,
}

impl EntityType {
    pub const ALL: [EntityType; 4] = [
        EntityType::Person,
        EntityType::Location,
        EntityType::Organization,
        EntityType::Misc,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EntityType::Person => "PERSON",
            EntityType::Location => "LOCATION",
            EntityType::Organization => "ORGANIZATION",
            EntityType::Misc => "MISC",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl FromStr for EntityType {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "" | "MISC" => Ok(EntityType::Misc),
            "PERSON" => Ok(EntityType::Person),
            "LOCATION" => Ok(EntityType::Location),
            "ORGANIZATION" => Ok(EntityType::Organization),
            _ => Err(()),
        }
    }
}

impl fmt::Display for EntityType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One (entity, language) page.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntityRecord {
    pub kb_id: String,
    pub language: Language,
    pub page_id: PageId,
    pub title: String,
    pub entity_type: EntityType,
}

/// The entity universe.
///
/// An entity is identified by its `kb_id` and owns at most one page per
/// language; `(language, page_id)` is unique across the whole catalog.
/// Records are kept sorted by `(kb_id, language)`.
#[derive(Debug, Clone, Default)]
pub struct EntityCatalog {
    entries: Vec<EntityRecord>,
    by_kb: BTreeMap<String, Vec<usize>>,
    by_page: HashMap<(Language, PageId), usize>,
}

impl PartialEq for EntityCatalog {
    fn eq(&self, other: &Self) -> bool {
        self.entries == other.entries
    }
}

impl EntityCatalog {
    pub fn from_records(mut entries: Vec<EntityRecord>) -> Result<Self, IngestError> {
        for r in &entries {
            if r.kb_id.is_empty() || r.kb_id.contains(['\t', '\n']) {
                return Err(IngestError::InvalidRecord(format!("bad kb_id {:?}", r.kb_id)));
            }
            if r.title.contains(['\t', '\n']) {
                return Err(IngestError::InvalidRecord(format!("bad title {:?}", r.title)));
            }
        }
        entries.sort_by(|a, b| (&a.kb_id, &a.language).cmp(&(&b.kb_id, &b.language)));

        let mut by_kb: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        let mut by_page = HashMap::with_capacity(entries.len());
        for (i, r) in entries.iter().enumerate() {
            let slots = by_kb.entry(r.kb_id.clone()).or_default();
            if slots.iter().any(|&j| entries[j].language == r.language) {
                return Err(IngestError::DuplicateKbId {
                    kb_id: r.kb_id.clone(),
                    language: r.language.clone(),
                    line: 0,
                });
            }
            slots.push(i);
            if by_page.insert((r.language.clone(), r.page_id), i).is_some() {
                return Err(IngestError::DuplicatePage {
                    language: r.language.clone(),
                    page_id: r.page_id,
                    line: 0,
                });
            }
        }
        Ok(EntityCatalog {
            entries,
            by_kb,
            by_page,
        })
    }

    pub fn records(&self) -> &[EntityRecord] {
        &self.entries
    }

    /// Number of (entity, language) records.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Number of distinct entities.
    pub fn entity_count(&self) -> usize {
        self.by_kb.len()
    }

    pub fn contains(&self, kb_id: &str) -> bool {
        self.by_kb.contains_key(kb_id)
    }

    pub fn kb_ids(&self) -> impl Iterator<Item = &str> {
        self.by_kb.keys().map(String::as_str)
    }

    /// All records of one entity, ordered by language.
    pub fn records_of(&self, kb_id: &str) -> impl Iterator<Item = &EntityRecord> {
        self.by_kb
            .get(kb_id)
            .into_iter()
            .flatten()
            .map(|&i| &self.entries[i])
    }

    pub fn record(&self, kb_id: &str, language: &Language) -> Option<&EntityRecord> {
        self.records_of(kb_id).find(|r| &r.language == language)
    }

    pub fn by_page(&self, language: &Language, page_id: PageId) -> Option<&EntityRecord> {
        self.by_page
            .get(&(language.clone(), page_id))
            .map(|&i| &self.entries[i])
    }

    pub fn has_page(&self, language: &Language, page_id: PageId) -> bool {
        self.by_page.contains_key(&(language.clone(), page_id))
    }

    pub fn languages(&self) -> Vec<Language> {
        let set: BTreeSet<&Language> = self.entries.iter().map(|r| &r.language).collect();
        set.into_iter().cloned().collect()
    }

    pub fn pages_in<'a>(&'a self, language: &'a Language) -> impl Iterator<Item = &'a EntityRecord> {
        self.entries.iter().filter(move |r| &r.language == language)
    }

    /// Serialize in the pages input format.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for r in &self.entries {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}",
                r.kb_id, r.language, r.page_id, r.title, r.entity_type
            );
        }
        out
    }
}

pub fn parse_pages(path: &Path) -> Result<Parsed<EntityCatalog>, IngestError> {
    pages_from_str(&tsv::read_text(path)?)
}

pub fn pages_from_str(text: &str) -> Result<Parsed<EntityCatalog>, IngestError> {
    let mut report = ParseReport::default();
    let mut records = Vec::new();
    let mut seen_kb: HashMap<(String, Language), usize> = HashMap::new();
    let mut seen_page: HashMap<(Language, PageId), usize> = HashMap::new();

    for line in tsv::data_lines(text) {
        let Some(record) = page_record(&line.fields) else {
            report.reject(line.number, RejectReason::Malformed);
            continue;
        };
        if seen_kb
            .insert((record.kb_id.clone(), record.language.clone()), line.number)
            .is_some()
        {
            return Err(IngestError::DuplicateKbId {
                kb_id: record.kb_id,
                language: record.language,
                line: line.number,
            });
        }
        if seen_page
            .insert((record.language.clone(), record.page_id), line.number)
            .is_some()
        {
            return Err(IngestError::DuplicatePage {
                language: record.language,
                page_id: record.page_id,
                line: line.number,
            });
        }
        report.accept();
        records.push(record);
    }
    Ok(Parsed {
        value: EntityCatalog::from_records(records)?,
        report,
    })
}

fn page_record(fields: &[&str]) -> Option<EntityRecord> {
    if !(4..=5).contains(&fields.len()) || fields[0].is_empty() {
        return None;
    }
    Some(EntityRecord {
        kb_id: fields[0].to_string(),
        language: fields[1].parse().ok()?,
        page_id: fields[2].parse().ok()?,
        title: fields[3].to_string(),
        entity_type: fields.get(4).copied().unwrap_or("").parse().ok()?,
    })
}

/// Page-link edges, grouped by language.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LinkEdgeList {
    pub edges: BTreeMap<Language, Vec<(PageId, PageId)>>,
}

impl LinkEdgeList {
    pub fn edges_for(&self, language: &Language) -> &[(PageId, PageId)] {
        self.edges.get(language).map_or(&[], Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.edges.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (lang, edges) in &self.edges {
            let mut sorted = edges.clone();
            sorted.sort_unstable();
            for (s, d) in sorted {
                let _ = writeln!(out, "{lang}\t{s}\t{d}");
            }
        }
        out
    }
}

pub fn parse_links(path: &Path, catalog: &EntityCatalog) -> Result<Parsed<LinkEdgeList>, IngestError> {
    Ok(links_from_str(&tsv::read_text(path)?, catalog))
}

/// Self-loops and edges with an endpoint unknown to the catalog are dropped
/// and counted under [`RejectReason::SelfLoop`] and [`RejectReason::Dangling`].
pub fn links_from_str(text: &str, catalog: &EntityCatalog) -> Parsed<LinkEdgeList> {
    let mut report = ParseReport::default();
    let mut list = LinkEdgeList::default();
    for line in tsv::data_lines(text) {
        let parsed = match line.fields.as_slice() {
            [lang, src, dst] => lang
                .parse::<Language>()
                .ok()
                .zip(src.parse::<PageId>().ok())
                .zip(dst.parse::<PageId>().ok())
                .map(|((l, s), d)| (l, s, d)),
            _ => None,
        };
        let Some((lang, src, dst)) = parsed else {
            report.reject(line.number, RejectReason::Malformed);
            continue;
        };
        if src == dst {
            report.reject(line.number, RejectReason::SelfLoop);
        } else if !catalog.has_page(&lang, src) || !catalog.has_page(&lang, dst) {
            report.reject(line.number, RejectReason::Dangling);
        } else {
            report.accept();
            list.edges.entry(lang).or_default().push((src, dst));
        }
    }
    Parsed { value: list, report }
}

/// Category names per page.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CategoryMap {
    pub categories: BTreeMap<(Language, PageId), BTreeSet<String>>,
}

impl CategoryMap {
    pub fn get(&self, language: &Language, page_id: PageId) -> Option<&BTreeSet<String>> {
        self.categories.get(&(language.clone(), page_id))
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for ((lang, page), names) in &self.categories {
            for name in names {
                let _ = writeln!(out, "{lang}\t{page}\t{name}");
            }
        }
        out
    }
}

pub fn parse_categories(path: &Path, catalog: &EntityCatalog) -> Result<Parsed<CategoryMap>, IngestError> {
    Ok(categories_from_str(&tsv::read_text(path)?, catalog))
}

/// Repeated (page, category) lines are accepted and collapse into one set entry.
pub fn categories_from_str(text: &str, catalog: &EntityCatalog) -> Parsed<CategoryMap> {
    let mut report = ParseReport::default();
    let mut map = CategoryMap::default();
    for line in tsv::data_lines(text) {
        let parsed = match line.fields.as_slice() {
            [lang, page, name] if !name.is_empty() => lang
                .parse::<Language>()
                .ok()
                .zip(page.parse::<PageId>().ok())
                .map(|(l, p)| (l, p, *name)),
            _ => None,
        };
        let Some((lang, page, name)) = parsed else {
            report.reject(line.number, RejectReason::Malformed);
            continue;
        };
        if !catalog.has_page(&lang, page) {
            report.reject(line.number, RejectReason::UnknownPage);
            continue;
        }
        report.accept();
        map.categories
            .entry((lang, page))
            .or_default()
            .insert(name.to_string());
    }
    Parsed { value: map, report }
}

/// Object position of a triple.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Object {
    /// Reference to another entity, written `kb:<id>` in files.
    Entity(String),
    Literal(String),
}

impl Object {
    pub fn as_entity(&self) -> Option<&str> {
        match self {
            Object::Entity(id) => Some(id),
            Object::Literal(_) => None,
        }
    }

    /// Text of the object regardless of kind (the id for entity references).
    pub fn text(&self) -> &str {
        match self {
            Object::Entity(s) | Object::Literal(s) => s,
        }
    }
}

impl fmt::Display for Object {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Object::Entity(id) => write!(f, "kb:{id}"),
            Object::Literal(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triple {
    pub subject: String,
    pub predicate: String,
    pub object: Object,
}

impl Triple {
    pub fn new(subject: &str, predicate: &str, object: Object) -> Self {
        Triple {
            subject: subject.to_string(),
            predicate: predicate.to_string(),
            object,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TripleStore {
    pub triples: Vec<Triple>,
}

impl TripleStore {
    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn to_tsv(&self) -> String {
        let mut sorted: Vec<&Triple> = self.triples.iter().collect();
        sorted.sort();
        let mut out = String::new();
        for t in sorted {
            let _ = writeln!(out, "{}\t{}\t{}", t.subject, t.predicate, t.object);
        }
        out
    }
}

pub fn parse_triples(path: &Path) -> Result<Parsed<TripleStore>, IngestError> {
    Ok(triples_from_str(&tsv::read_text(path)?))
}

pub fn triples_from_str(text: &str) -> Parsed<TripleStore> {
    let mut report = ParseReport::default();
    let mut store = TripleStore::default();
    for line in tsv::data_lines(text) {
        let triple = match line.fields.as_slice() {
            [s, p, o] if !s.is_empty() && !p.is_empty() && !o.is_empty() => {
                match o.strip_prefix("kb:") {
                    Some("") => None,
                    Some(id) => Some(Triple::new(s, p, Object::Entity(id.to_string()))),
                    None => Some(Triple::new(s, p, Object::Literal(o.to_string()))),
                }
            }
            _ => None,
        };
        match triple {
            Some(t) => {
                report.accept();
                store.triples.push(t);
            }
            None => report.reject(line.number, RejectReason::Malformed),
        }
    }
    Parsed { value: store, report }
}

/// Human importance labels on the 1..=5 scale.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabelSet {
    pub labels: BTreeMap<String, u8>,
}

impl LabelSet {
    pub const MIN: u8 = 1;
    pub const MAX: u8 = 5;

    pub fn get(&self, kb_id: &str) -> Option<u8> {
        self.labels.get(kb_id).copied()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.labels {
            let _ = writeln!(out, "{k}\t{v}");
        }
        out
    }
}

impl FromIterator<(String, u8)> for LabelSet {
    fn from_iter<I: IntoIterator<Item = (String, u8)>>(iter: I) -> Self {
        LabelSet {
            labels: iter.into_iter().collect(),
        }
    }
}

pub fn parse_labels(path: &Path, catalog: &EntityCatalog) -> Result<Parsed<LabelSet>, IngestError> {
    Ok(labels_from_str(&tsv::read_text(path)?, catalog))
}

pub fn labels_from_str(text: &str, catalog: &EntityCatalog) -> Parsed<LabelSet> {
    let mut report = ParseReport::default();
    let mut set = LabelSet::default();
    for line in tsv::data_lines(text) {
        let (kb_id, value) = match line.fields.as_slice() {
            [k, v] if !k.is_empty() => match v.parse::<i64>() {
                Ok(v) => (*k, v),
                Err(_) => {
                    report.reject(line.number, RejectReason::Malformed);
                    continue;
                }
            },
            _ => {
                report.reject(line.number, RejectReason::Malformed);
                continue;
            }
        };
        let reason = if !(i64::from(LabelSet::MIN)..=i64::from(LabelSet::MAX)).contains(&value) {
            Some(RejectReason::OutOfRange)
        } else if !catalog.contains(kb_id) {
            Some(RejectReason::UnknownEntity)
        } else if set.labels.contains_key(kb_id) {
            Some(RejectReason::Duplicate)
        } else {
            None
        };
        match reason {
            Some(r) => report.reject(line.number, r),
            None => {
                report.accept();
                set.labels.insert(kb_id.to_string(), value as u8);
            }
        }
    }
    Parsed { value: set, report }
}

/// External social-influence scores keyed by profile id, each in `[0, 100]`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SocialScoreMap {
    pub scores: BTreeMap<String, f64>,
}

impl SocialScoreMap {
    pub const MAX_SCORE: f64 = 100.0;

    pub fn get(&self, social_id: &str) -> Option<f64> {
        self.scores.get(social_id).copied()
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.scores {
            let _ = writeln!(out, "{k}\t{}", tsv::fmt_real(*v));
        }
        out
    }
}

pub fn parse_external_scores(path: &Path) -> Result<Parsed<SocialScoreMap>, IngestError> {
    Ok(external_scores_from_str(&tsv::read_text(path)?))
}

pub fn external_scores_from_str(text: &str) -> Parsed<SocialScoreMap> {
    let mut report = ParseReport::default();
    let mut map = SocialScoreMap::default();
    for line in tsv::data_lines(text) {
        let parsed = match line.fields.as_slice() {
            [id, v] if !id.is_empty() => v.parse::<f64>().ok().filter(|x| !x.is_nan()).map(|x| (*id, x)),
            _ => None,
        };
        let Some((id, score)) = parsed else {
            report.reject(line.number, RejectReason::Malformed);
            continue;
        };
        if !(0.0..=SocialScoreMap::MAX_SCORE).contains(&score) {
            report.reject(line.number, RejectReason::OutOfRange);
        } else if map.scores.contains_key(id) {
            report.reject(line.number, RejectReason::Duplicate);
        } else {
            report.accept();
            map.scores.insert(id.to_string(), score);
        }
    }
    Parsed { value: map, report }
}
