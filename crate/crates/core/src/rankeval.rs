//! Ranked lists, the P/R/F1/coverage/RMSE evaluation table, and the
//! entity-type distribution of a ranked head versus the whole catalog.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::ingest::{EntityCatalog, EntityType, LabelSet, Language};
use crate::model::{
    score, train_on, training_rows, Feature, ModelError, NormalizedMatrix, RawMatrix, TrainTestSplit, WeightVector,
    FEATURE_COUNT,
};
use crate::tsv;

pub const DEFAULT_POSITIVE_THRESHOLD: u8 = 4;
pub const ALL_FEATURES_VARIANT: &str = "all_features";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("empty test set")]
    EmptyTestSet,
    #[error("{predictions} predictions for {labels} labels")]
    LengthMismatch { predictions: usize, labels: usize },
    #[error("empty catalog")]
    EmptyCatalog,
    #[error("top_n must be at least 1")]
    ZeroTopN,
    #[error("top_n {top_n} exceeds ranked list length {len}")]
    TopNExceedsList { top_n: usize, len: usize },
    #[error("catalog has no entities in language {0}")]
    EmptyPopulation(Language),
    #[error("ranked entity {0} is not in the catalog")]
    UnknownEntity(String),
    #[error("positive threshold {0} not in 1..=5")]
    InvalidThreshold(u8),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredRow {
    pub kb_id: String,
    pub title: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedRow {
    pub rank: usize,
    pub kb_id: String,
    pub title: String,
    pub score: f64,
}

/// Rows by descending score, ties by ascending kb_id, ranks 1..=n.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedList {
    pub language: Language,
    pub rows: Vec<RankedRow>,
}

pub fn rank(mut scored: Vec<ScoredRow>, language: &Language) -> RankedList {
    scored.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.kb_id.cmp(&b.kb_id)));
    RankedList {
        language: language.clone(),
        rows: scored
            .into_iter()
            .enumerate()
            .map(|(i, r)| RankedRow {
                rank: i + 1,
                kb_id: r.kb_id,
                title: r.title,
                score: r.score,
            })
            .collect(),
    }
}

impl RankedList {
    pub fn truncate(&mut self, top_n: usize) {
        self.rows.truncate(top_n);
    }

    /// `rank  kb_id  title  language  score` with six decimals.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{:.6}",
                r.rank, r.kb_id, r.title, self.language, r.score
            );
        }
        out
    }
}

pub fn parse_ranked_list(text: &str, language: &Language) -> Result<RankedList, EvalError> {
    let mut rows = Vec::new();
    for line in tsv::data_lines(text) {
        let err = |message: &str| EvalError::Parse {
            line: line.number,
            message: message.to_string(),
        };
        let [rank, kb_id, title, lang, score] = line.fields.as_slice() else {
            return Err(err("expected 5 columns"));
        };
        if *lang != language.as_str() {
            return Err(err("language column does not match the list"));
        }
        let rank: usize = rank.parse().map_err(|_| err("bad rank"))?;
        if rank != rows.len() + 1 {
            return Err(err("ranks are not consecutive"));
        }
        rows.push(RankedRow {
            rank,
            kb_id: kb_id.to_string(),
            title: title.to_string(),
            score: score.parse().map_err(|_| err("bad score"))?,
        });
    }
    Ok(RankedList {
        language: language.clone(),
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub rmse: f64,
}

/// Round half up and clamp onto the 1..=5 label scale.
pub fn round_prediction(score: f64) -> u8 {
    let r = (score + 0.5).floor();
    r.clamp(f64::from(LabelSet::MIN), f64::from(LabelSet::MAX)) as u8
}

/// Compare rounded predictions against labels. An item is positive when
/// its value is at least `threshold`. Precision with no predicted positives,
/// and recall with no true positives, are 0.
pub fn evaluate(predicted: &[f64], labels: &[u8], threshold: u8) -> Result<Metrics, EvalError> {
    if predicted.len() != labels.len() {
        return Err(EvalError::LengthMismatch {
            predictions: predicted.len(),
            labels: labels.len(),
        });
    }
    if predicted.is_empty() {
        return Err(EvalError::EmptyTestSet);
    }
    if !(LabelSet::MIN..=LabelSet::MAX).contains(&threshold) {
        return Err(EvalError::InvalidThreshold(threshold));
    }
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    let mut squared = 0.0;
    for (&p, &label) in predicted.iter().zip(labels) {
        let rounded = round_prediction(p);
        match (rounded >= threshold, label >= threshold) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
        let diff = f64::from(rounded) - f64::from(label);
        squared += diff * diff;
    }
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(Metrics {
        precision,
        recall,
        f1,
        rmse: (squared / predicted.len() as f64).sqrt(),
    })
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Fraction of entities with a present, non-zero value per feature, and the
/// fraction with at least one such feature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coverage {
    pub per_feature: [f64; FEATURE_COUNT],
    pub any: f64,
}

/// Coverage over distinct entities; an entity covers a feature when any of
/// its language rows does.
pub fn feature_coverage(raw: &RawMatrix) -> Result<Coverage, EvalError> {
    let mut covered: BTreeMap<&str, [bool; FEATURE_COUNT]> = BTreeMap::new();
    for row in &raw.rows {
        let flags = covered.entry(row.kb_id.as_str()).or_default();
        for (c, v) in flags.iter_mut().zip(&row.values) {
            *c |= matches!(v, Some(x) if *x != 0.0);
        }
    }
    if covered.is_empty() {
        return Err(EvalError::EmptyCatalog);
    }
    let mut hits = [0usize; FEATURE_COUNT];
    let mut any_hits = 0usize;
    for flags in covered.values() {
        for (h, c) in hits.iter_mut().zip(flags) {
            *h += usize::from(*c);
        }
        any_hits += usize::from(flags.iter().any(|c| *c));
    }
    let n = covered.len() as f64;
    Ok(Coverage {
        per_feature: hits.map(|h| h as f64 / n),
        any: any_hits as f64 / n,
    })
}

/// Scores of each entity's representative row, in `ids` order.
pub fn predict(matrix: &NormalizedMatrix, weights: &WeightVector, ids: &[String]) -> Result<Vec<f64>, EvalError> {
    let rows = training_rows(matrix);
    ids.iter()
        .map(|id| {
            let &i = rows
                .get(id.as_str())
                .ok_or_else(|| ModelError::MissingRow(id.clone()))?;
            Ok(score(weights, &matrix.rows[i].values))
        })
        .collect()
}

fn labels_of(labels: &LabelSet, ids: &[String]) -> Result<Vec<u8>, EvalError> {
    ids.iter()
        .map(|id| {
            labels
                .get(id)
                .ok_or_else(|| EvalError::Model(ModelError::MissingLabel(id.clone())))
        })
        .collect()
}

/// Held-out metrics of `weights` on the test side of `split`.
pub fn evaluate_model(
    matrix: &NormalizedMatrix,
    weights: &WeightVector,
    labels: &LabelSet,
    split: &TrainTestSplit,
    threshold: u8,
) -> Result<Metrics, EvalError> {
    if split.test.is_empty() {
        return Err(EvalError::EmptyTestSet);
    }
    let predicted = predict(matrix, weights, &split.test)?;
    evaluate(&predicted, &labels_of(labels, &split.test)?, threshold)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalRow {
    pub variant: String,
    pub metrics: Metrics,
    pub coverage: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub rows: Vec<EvalRow>,
}

impl EvalReport {
    pub fn row(&self, variant: &str) -> Option<&EvalRow> {
        self.rows.iter().find(|r| r.variant == variant)
    }

    /// `variant  precision  recall  f1  coverage  rmse`
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("# variant\tprecision\trecall\tf1\tcoverage\trmse\n");
        for r in &self.rows {
            let m = &r.metrics;
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}",
                r.variant,
                tsv::fmt_real(m.precision),
                tsv::fmt_real(m.recall),
                tsv::fmt_real(m.f1),
                tsv::fmt_real(r.coverage),
                tsv::fmt_real(m.rmse)
            );
        }
        out
    }
}

/// One single-feature regression per feature, then the all-features model,
/// each trained on the train side and scored on the test side.
pub fn single_feature_eval(
    matrix: &NormalizedMatrix,
    labels: &LabelSet,
    split: &TrainTestSplit,
    coverage: &Coverage,
    threshold: u8,
) -> Result<EvalReport, EvalError> {
    let mut rows = Vec::with_capacity(FEATURE_COUNT + 1);
    for f in Feature::ALL {
        let weights = train_on(matrix, labels, &split.train, &[f])?;
        rows.push(EvalRow {
            variant: f.name().to_string(),
            metrics: evaluate_model(matrix, &weights, labels, split, threshold)?,
            coverage: coverage.per_feature[f.index()],
        });
    }
    let weights = train_on(matrix, labels, &split.train, &Feature::ALL)?;
    rows.push(EvalRow {
        variant: ALL_FEATURES_VARIANT.to_string(),
        metrics: evaluate_model(matrix, &weights, labels, split, threshold)?,
        coverage: coverage.any,
    });
    Ok(EvalReport { rows })
}

/// Entity-type fractions for a language's catalog and for the head of its
/// ranked list. Fractions follow [`EntityType::ALL`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct TypeDistribution {
    pub language: Language,
    pub top_n: usize,
    pub global: [f64; 4],
    pub top: [f64; 4],
}

pub fn type_distribution(
    catalog: &EntityCatalog,
    ranked: &RankedList,
    top_n: usize,
) -> Result<TypeDistribution, EvalError> {
    if top_n == 0 {
        return Err(EvalError::ZeroTopN);
    }
    if top_n > ranked.rows.len() {
        return Err(EvalError::TopNExceedsList {
            top_n,
            len: ranked.rows.len(),
        });
    }
    let mut global = [0usize; 4];
    for r in catalog.pages_in(&ranked.language) {
        global[r.entity_type.index()] += 1;
    }
    let mut top = [0usize; 4];
    for row in &ranked.rows[..top_n] {
        let record = catalog
            .record(&row.kb_id, &ranked.language)
            .ok_or_else(|| EvalError::UnknownEntity(row.kb_id.clone()))?;
        top[record.entity_type.index()] += 1;
    }
    let total: usize = global.iter().sum();
    if total == 0 {
        return Err(EvalError::EmptyPopulation(ranked.language.clone()));
    }
    Ok(TypeDistribution {
        language: ranked.language.clone(),
        top_n,
        global: global.map(|c| c as f64 / total as f64),
        top: top.map(|c| c as f64 / top_n as f64),
    })
}

impl TypeDistribution {
    pub fn fraction(&self, top: bool, ty: EntityType) -> f64 {
        if top {
            self.top[ty.index()]
        } else {
            self.global[ty.index()]
        }
    }

    /// `population  entity_type  fraction`, populations `global` then `top`.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (name, fractions) in [("global", &self.global), ("top", &self.top)] {
            for ty in EntityType::ALL {
                let _ = writeln!(out, "{name}\t{ty}\t{}", tsv::fmt_real(fractions[ty.index()]));
            }
        }
        out
    }
}
