use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use log::warn;
use rayon::prelude::*;

use super::ModelError;
use crate::ingest::{EntityCatalog, Language};
use crate::kbfeatures::TripleFeatureRow;
use crate::linkgraph::LanguageFeatures;
use crate::tsv;

pub const FEATURE_COUNT: usize = 10;

/// The ten ranking features, in their fixed column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Feature {
    PageRank,
    OutlinkCount,
    InlinkCount,
    InOutRatio,
    CategoryCount,
    SubjectCount,
    SubjectTypeCount,
    ObjectCount,
    ObjectTypeCount,
    SocialScore,
}

impl Feature {
    pub const ALL: [Feature; FEATURE_COUNT] = [
        Feature::PageRank,
        Feature::OutlinkCount,
        Feature::InlinkCount,
        Feature::InOutRatio,
        Feature::CategoryCount,
        Feature::SubjectCount,
        Feature::SubjectTypeCount,
        Feature::ObjectCount,
        Feature::ObjectTypeCount,
        Feature::SocialScore,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Feature::PageRank => "pagerank",
            Feature::OutlinkCount => "outlink_count",
            Feature::InlinkCount => "inlink_count",
            Feature::InOutRatio => "in_out_ratio",
            Feature::CategoryCount => "category_count",
            Feature::SubjectCount => "subject_count",
            Feature::SubjectTypeCount => "subject_type_count",
            Feature::ObjectCount => "object_count",
            Feature::ObjectTypeCount => "object_type_count",
            Feature::SocialScore => "social_score",
        }
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Feature {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Feature::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| format!("unknown feature {s:?}"))
    }
}

/// Raw feature values of one (entity, language) row; `None` is absent.
#[derive(Debug, Clone, PartialEq)]
pub struct RawRow {
    pub kb_id: String,
    pub language: Language,
    pub values: [Option<f64>; FEATURE_COUNT],
}

impl RawRow {
    pub fn get(&self, feature: Feature) -> Option<f64> {
        self.values[feature.index()]
    }
}

/// Rows ordered by `(kb_id, language)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawMatrix {
    pub rows: Vec<RawRow>,
}

/// Assemble one raw row per catalog record.
///
/// Link-graph features come from the record's own language; pagerank is
/// multiplied by that language's node count so a page of average importance
/// scores 1. Triple-store counts are absent for entities the store never
/// mentions.
pub fn assemble(
    catalog: &EntityCatalog,
    link_features: &[LanguageFeatures],
    kb_rows: &[TripleFeatureRow],
) -> Result<RawMatrix, ModelError> {
    let by_lang: HashMap<&Language, &LanguageFeatures> =
        link_features.iter().map(|lf| (&lf.language, lf)).collect();
    let mut by_kb: HashMap<&str, &TripleFeatureRow> = HashMap::with_capacity(kb_rows.len());
    for row in kb_rows {
        if by_kb.insert(&row.kb_id, row).is_some() {
            return Err(ModelError::DuplicateRow(row.kb_id.clone()));
        }
    }

    let rows = catalog
        .records()
        .par_iter()
        .map(|record| {
            let mut values = [None; FEATURE_COUNT];
            let wiki = by_lang
                .get(&record.language)
                .and_then(|lf| Some((lf.node_count, lf.row(record.page_id)?)));
            if let Some((n, w)) = wiki {
                values[Feature::PageRank.index()] = Some(w.pagerank * n as f64);
                values[Feature::OutlinkCount.index()] = Some(w.outlinks as f64);
                values[Feature::InlinkCount.index()] = Some(w.inlinks as f64);
                values[Feature::InOutRatio.index()] = Some(w.in_out_ratio);
                values[Feature::CategoryCount.index()] = Some(w.category_count as f64);
            }
            if let Some(kb) = by_kb.get(record.kb_id.as_str()) {
                if let Some([sc, stc, oc, otc]) = kb.counts() {
                    values[Feature::SubjectCount.index()] = Some(sc as f64);
                    values[Feature::SubjectTypeCount.index()] = Some(stc as f64);
                    values[Feature::ObjectCount.index()] = Some(oc as f64);
                    values[Feature::ObjectTypeCount.index()] = Some(otc as f64);
                }
                values[Feature::SocialScore.index()] = kb.social_score;
            }
            RawRow {
                kb_id: record.kb_id.clone(),
                language: record.language.clone(),
                values,
            }
        })
        .collect();
    Ok(RawMatrix { rows })
}

/// Per-feature `max log(f)` denominators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalizer {
    pub denominators: [f64; FEATURE_COUNT],
}

impl Normalizer {
    /// Denominators from the present values of `raw`. Features whose
    /// denominator is 0 (all absent, or all values <= 1) normalize to 0.
    pub fn fit(raw: &RawMatrix) -> Self {
        let mut denominators = [0.0_f64; FEATURE_COUNT];
        for row in &raw.rows {
            for (d, v) in denominators.iter_mut().zip(&row.values) {
                if let Some(v) = v {
                    *d = (*d).max(clamped_log(*v));
                }
            }
        }
        Normalizer { denominators }
    }

    pub fn is_degenerate(&self, feature: Feature) -> bool {
        self.denominators[feature.index()] <= 0.0
    }

    pub fn normalize_value(&self, feature: Feature, raw: Option<f64>) -> f64 {
        let d = self.denominators[feature.index()];
        match raw {
            Some(v) if d > 0.0 => (clamped_log(v) / d).min(1.0),
            _ => 0.0,
        }
    }

    pub fn apply(&self, values: &[Option<f64>; FEATURE_COUNT]) -> [f64; FEATURE_COUNT] {
        std::array::from_fn(|k| self.normalize_value(Feature::ALL[k], values[k]))
    }

    /// `feature_name  log_max_denominator`
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for f in Feature::ALL {
            let _ = writeln!(out, "{}\t{}", f, tsv::fmt_real(self.denominators[f.index()]));
        }
        out
    }
}

/// `ln(max(v, 1))`: non-negative, and 0 for anything at or below 1.
fn clamped_log(v: f64) -> f64 {
    if v > 1.0 {
        v.ln()
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedRow {
    pub kb_id: String,
    pub language: Language,
    pub values: [f64; FEATURE_COUNT],
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedMatrix {
    pub rows: Vec<NormalizedRow>,
    pub normalizer: Normalizer,
}

impl NormalizedMatrix {
    /// Wrap already-normalized rows (synthetic data, or rows read back from disk).
    pub fn from_rows(rows: Vec<NormalizedRow>, normalizer: Normalizer) -> Self {
        NormalizedMatrix { rows, normalizer }
    }

    pub fn languages(&self) -> Vec<Language> {
        let set: BTreeSet<&Language> = self.rows.iter().map(|r| &r.language).collect();
        set.into_iter().cloned().collect()
    }
}

/// Map every raw value into `[0, 1]` by `log(f) / max log(f)`.
pub fn normalize(raw: &RawMatrix) -> NormalizedMatrix {
    let normalizer = Normalizer::fit(raw);
    for f in Feature::ALL {
        if normalizer.is_degenerate(f) {
            warn!("feature {f} has no value above 1; it contributes 0 everywhere");
        }
    }
    let rows = raw
        .rows
        .par_iter()
        .map(|r| NormalizedRow {
            kb_id: r.kb_id.clone(),
            language: r.language.clone(),
            values: normalizer.apply(&r.values),
        })
        .collect();
    NormalizedMatrix { rows, normalizer }
}

fn header() -> String {
    let names: Vec<&str> = Feature::ALL.iter().map(|f| f.name()).collect();
    format!("# kb_id\tlanguage\t{}\n", names.join("\t"))
}

impl RawMatrix {
    pub fn to_tsv(&self) -> String {
        let mut out = header();
        for r in &self.rows {
            let vals: Vec<String> = r.values.iter().map(|v| tsv::fmt_opt_real(*v)).collect();
            let _ = writeln!(out, "{}\t{}\t{}", r.kb_id, r.language, vals.join("\t"));
        }
        out
    }
}

impl NormalizedMatrix {
    pub fn to_tsv(&self) -> String {
        let mut out = header();
        for r in &self.rows {
            let vals: Vec<String> = r.values.iter().map(|v| tsv::fmt_real(*v)).collect();
            let _ = writeln!(out, "{}\t{}\t{}", r.kb_id, r.language, vals.join("\t"));
        }
        out
    }
}

fn parse_row_prefix<'a>(fields: &'a [&'a str], line: usize) -> Result<(String, Language, &'a [&'a str]), ModelError> {
    let err = |message: String| ModelError::Parse { line, message };
    if fields.len() != FEATURE_COUNT + 2 {
        return Err(err(format!("expected {} columns, found {}", FEATURE_COUNT + 2, fields.len())));
    }
    let language = fields[1].parse::<Language>().map_err(|e| err(e.to_string()))?;
    Ok((fields[0].to_string(), language, &fields[2..]))
}

pub fn parse_raw_matrix(text: &str) -> Result<RawMatrix, ModelError> {
    let mut rows = Vec::new();
    for line in tsv::data_lines(text) {
        let (kb_id, language, cells) = parse_row_prefix(&line.fields, line.number)?;
        let mut values = [None; FEATURE_COUNT];
        for (slot, cell) in values.iter_mut().zip(cells) {
            *slot = tsv::parse_opt_real(cell).ok_or_else(|| ModelError::Parse {
                line: line.number,
                message: format!("bad value {cell:?}"),
            })?;
        }
        rows.push(RawRow {
            kb_id,
            language,
            values,
        });
    }
    Ok(RawMatrix { rows })
}

pub fn parse_normalized_matrix(text: &str, normalizer: Normalizer) -> Result<NormalizedMatrix, ModelError> {
    let mut rows = Vec::new();
    for line in tsv::data_lines(text) {
        let (kb_id, language, cells) = parse_row_prefix(&line.fields, line.number)?;
        let mut values = [0.0; FEATURE_COUNT];
        for (slot, cell) in values.iter_mut().zip(cells) {
            *slot = cell
                .parse::<f64>()
                .ok()
                .filter(|v| (0.0..=1.0).contains(v))
                .ok_or_else(|| ModelError::Parse {
                    line: line.number,
                    message: format!("bad normalized value {cell:?}"),
                })?;
        }
        rows.push(NormalizedRow {
            kb_id,
            language,
            values,
        });
    }
    Ok(NormalizedMatrix { rows, normalizer })
}

pub fn parse_normalization(text: &str) -> Result<Normalizer, ModelError> {
    let mut denominators = [f64::NAN; FEATURE_COUNT];
    for line in tsv::data_lines(text) {
        let err = |message: String| ModelError::Parse {
            line: line.number,
            message,
        };
        let [name, value] = line.fields.as_slice() else {
            return Err(err("expected 2 columns".into()));
        };
        let feature: Feature = name.parse().map_err(err)?;
        denominators[feature.index()] = value
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite() && *v >= 0.0)
            .ok_or_else(|| err(format!("bad denominator {value:?}")))?;
    }
    if let Some(k) = denominators.iter().position(|d| d.is_nan()) {
        return Err(ModelError::Parse {
            line: 0,
            message: format!("missing denominator for {}", Feature::ALL[k]),
        });
    }
    Ok(Normalizer { denominators })
}
