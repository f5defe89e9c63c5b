//! Staged, resumable pipeline: `ingest → features → train → eval → rank → report`.
//!
//! Each stage reads the previous stages' files from the output directory and
//! writes its own. Every file starts with a header comment naming the stage,
//! its version and the configuration hash; all readers skip `#` lines.

mod config;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use log::{info, warn};

pub use config::{ConfigError, PipelineConfig};

use crate::ingest::{
    self, CategoryMap, EntityCatalog, IngestError, LabelSet, Language, LinkEdgeList, Parsed, SocialScoreMap,
    TripleStore,
};
use crate::kbfeatures::{self, TripleIndex};
use crate::linkgraph::{self, GraphError, LanguageFeatures};
use crate::model::{
    self, parse_normalization, parse_normalized_matrix, parse_raw_matrix, parse_weights, ModelError, NormalizedMatrix,
    TrainTestSplit,
};
use crate::rankeval::{
    self, evaluate_model, feature_coverage, parse_ranked_list, predict, rank, round_prediction, EvalError, EvalReport,
    EvalRow, ScoredRow, ALL_FEATURES_VARIANT,
};
use crate::tsv::{self, ParseReport};

/// Bumped whenever any stage's output format changes.
pub const STAGE_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("missing input {}", .0.display())]
    MissingInput(PathBuf),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("{}: {message}", path.display())]
    BadFile { path: PathBuf, message: String },
    #[error("cannot write {}: {source}", path.display())]
    Write {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl PipelineError {
    /// 2 for bad input or a missing prerequisite, 1 for internal failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Write { .. } => 1,
            PipelineError::Model(ModelError::Singular(_)) => 1,
            PipelineError::Eval(EvalError::Model(ModelError::Singular(_))) => 1,
            PipelineError::Graph(GraphError::EmptyGraph) => 1,
            _ => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Ingest,
    Features,
    Train,
    Eval,
    Rank,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 6] = [
        Stage::Ingest,
        Stage::Features,
        Stage::Train,
        Stage::Eval,
        Stage::Rank,
        Stage::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Features => "features",
            Stage::Train => "train",
            Stage::Eval => "eval",
            Stage::Rank => "rank",
            Stage::Report => "report",
        }
    }
}

/// Files written by a stage plus human-readable notes.
#[derive(Debug, Clone, Default)]
pub struct StageSummary {
    pub outputs: Vec<PathBuf>,
    pub notes: Vec<String>,
}

/// Locations of every staged file under the output directory.
#[derive(Debug, Clone)]
pub struct Layout {
    root: PathBuf,
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Layout { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn store(&self, name: &str) -> PathBuf {
        self.root.join("stores").join(format!("{name}.tsv"))
    }

    pub fn ingest_report(&self) -> PathBuf {
        self.root.join("stores/ingest_report.tsv")
    }

    pub fn ingest_rejects(&self) -> PathBuf {
        self.root.join("stores/ingest_rejects.tsv")
    }

    pub fn features(&self, name: &str) -> PathBuf {
        self.root.join("features").join(format!("{name}.tsv"))
    }

    pub fn model(&self, name: &str) -> PathBuf {
        self.root.join("model").join(format!("{name}.tsv"))
    }

    pub fn eval(&self, name: &str) -> PathBuf {
        self.root.join("eval").join(format!("{name}.tsv"))
    }

    pub fn ranked(&self, language: &Language) -> PathBuf {
        self.root.join("ranked").join(format!("ranked_{language}.tsv"))
    }

    pub fn type_report(&self, language: &Language) -> PathBuf {
        self.root.join("report").join(format!("type_distribution_{language}.tsv"))
    }
}

const STORE_NAMES: [&str; 6] = ["pages", "links", "categories", "triples", "labels", "social_scores"];

struct Ctx<'a> {
    config: &'a PipelineConfig,
    layout: Layout,
    stage: Stage,
    summary: StageSummary,
}

impl<'a> Ctx<'a> {
    fn new(config: &'a PipelineConfig, stage: Stage) -> Result<Self, PipelineError> {
        config.validate()?;
        info!("stage {}", stage.name());
        Ok(Ctx {
            config,
            layout: Layout::new(&config.output_dir),
            stage,
            summary: StageSummary::default(),
        })
    }

    fn header(&self) -> String {
        format!(
            "# entity-rank stage={} version={} config={}\n",
            self.stage.name(),
            STAGE_VERSION,
            self.config.hash()
        )
    }

    fn write(&mut self, path: PathBuf, body: &str) -> Result<(), PipelineError> {
        let write_err = |source| PipelineError::Write {
            path: path.clone(),
            source,
        };
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(write_err)?;
        }
        let mut text = self.header();
        text.push_str(body);
        fs::write(&path, text).map_err(write_err)?;
        self.summary.outputs.push(path);
        Ok(())
    }

    fn note(&mut self, message: String) {
        info!("{message}");
        self.summary.notes.push(message);
    }
}

fn read_required(path: &Path) -> Result<String, PipelineError> {
    if !path.is_file() {
        return Err(PipelineError::MissingInput(path.to_path_buf()));
    }
    Ok(tsv::read_text(path).map_err(IngestError::from)?)
}

fn bad_file(path: &Path) -> impl Fn(String) -> PipelineError + '_ {
    move |message| PipelineError::BadFile {
        path: path.to_path_buf(),
        message,
    }
}

fn parse_report_rows(name: &str, report: &ParseReport, summary: &mut String, rejects: &mut String) {
    let reasons: Vec<String> = report
        .by_reason()
        .into_iter()
        .map(|(r, n)| format!("{r}={n}"))
        .collect();
    let _ = writeln!(
        summary,
        "{name}\t{}\t{}\t{}\t{}",
        report.input_lines,
        report.accepted,
        report.rejected_count(),
        if reasons.is_empty() { "-".to_string() } else { reasons.join(",") }
    );
    for (line, reason) in &report.rejected {
        let _ = writeln!(rejects, "{name}\t{line}\t{reason}");
    }
}

/// Parse the six input files and write canonical stores plus the ingestion report.
pub fn run_ingest(config: &PipelineConfig) -> Result<StageSummary, PipelineError> {
    let mut ctx = Ctx::new(config, Stage::Ingest)?;
    let pages_path = config
        .pages
        .as_deref()
        .ok_or_else(|| ConfigError("no pages file configured".into()))?;
    if !pages_path.is_file() {
        return Err(PipelineError::MissingInput(pages_path.to_path_buf()));
    }
    for p in [
        &config.links,
        &config.categories,
        &config.triples,
        &config.labels,
        &config.social_scores,
    ]
    .into_iter()
    .flatten()
    {
        if !p.is_file() {
            return Err(PipelineError::MissingInput(p.clone()));
        }
    }

    let catalog = ingest::parse_pages(pages_path)?;
    let optional = |path: &Option<PathBuf>| -> Result<String, PipelineError> {
        match path {
            Some(p) => Ok(tsv::read_text(p).map_err(IngestError::from)?),
            None => Ok(String::new()),
        }
    };
    let links = ingest::links_from_str(&optional(&config.links)?, &catalog.value);
    let categories = ingest::categories_from_str(&optional(&config.categories)?, &catalog.value);
    let triples = ingest::triples_from_str(&optional(&config.triples)?);
    let labels = ingest::labels_from_str(&optional(&config.labels)?, &catalog.value);
    let scores = ingest::external_scores_from_str(&optional(&config.social_scores)?);

    let reports: [(&str, &ParseReport, String); 6] = [
        ("pages", &catalog.report, catalog.value.to_tsv()),
        ("links", &links.report, links.value.to_tsv()),
        ("categories", &categories.report, categories.value.to_tsv()),
        ("triples", &triples.report, triples.value.to_tsv()),
        ("labels", &labels.report, labels.value.to_tsv()),
        ("social_scores", &scores.report, scores.value.to_tsv()),
    ];
    let mut summary = String::from("# file\tinput_lines\taccepted\trejected\treasons\n");
    let mut rejects = String::from("# file\tline\treason\n");
    let mut total_rejected = 0;
    for (name, report, body) in &reports {
        parse_report_rows(name, report, &mut summary, &mut rejects);
        total_rejected += report.rejected_count();
        ctx.write(ctx.layout.store(name), body)?;
    }
    ctx.write(ctx.layout.ingest_report(), &summary)?;
    ctx.write(ctx.layout.ingest_rejects(), &rejects)?;
    ctx.note(format!(
        "{} records, {} entities, {} languages; {} rejected lines",
        catalog.value.len(),
        catalog.value.entity_count(),
        catalog.value.languages().len(),
        total_rejected
    ));
    Ok(ctx.summary)
}

/// In-memory view of the ingested stores.
pub struct Stores {
    pub catalog: EntityCatalog,
    pub links: LinkEdgeList,
    pub categories: CategoryMap,
    pub triples: TripleStore,
    pub labels: LabelSet,
    pub social_scores: SocialScoreMap,
}

fn store_value<T>(path: &Path, parsed: Parsed<T>) -> Result<T, PipelineError> {
    if parsed.report.rejected_count() > 0 {
        return Err(bad_file(path)(format!(
            "{} invalid lines in a serialized store",
            parsed.report.rejected_count()
        )));
    }
    Ok(parsed.value)
}

pub fn load_catalog(layout: &Layout) -> Result<EntityCatalog, PipelineError> {
    let path = layout.store("pages");
    let text = read_required(&path)?;
    store_value(&path, ingest::pages_from_str(&text)?)
}

pub fn load_labels(layout: &Layout, catalog: &EntityCatalog) -> Result<LabelSet, PipelineError> {
    let path = layout.store("labels");
    store_value(&path, ingest::labels_from_str(&read_required(&path)?, catalog))
}

pub fn load_stores(layout: &Layout) -> Result<Stores, PipelineError> {
    for name in STORE_NAMES {
        let p = layout.store(name);
        if !p.is_file() {
            return Err(PipelineError::MissingInput(p));
        }
    }
    let catalog = load_catalog(layout)?;
    let links = {
        let p = layout.store("links");
        store_value(&p, ingest::links_from_str(&read_required(&p)?, &catalog))?
    };
    let categories = {
        let p = layout.store("categories");
        store_value(&p, ingest::categories_from_str(&read_required(&p)?, &catalog))?
    };
    let triples = {
        let p = layout.store("triples");
        store_value(&p, ingest::triples_from_str(&read_required(&p)?))?
    };
    let labels = load_labels(layout, &catalog)?;
    let social_scores = {
        let p = layout.store("social_scores");
        store_value(&p, ingest::external_scores_from_str(&read_required(&p)?))?
    };
    Ok(Stores {
        catalog,
        links,
        categories,
        triples,
        labels,
        social_scores,
    })
}

/// Compute link-graph and triple-store features, the raw and normalized
/// matrices and the normalization denominators.
pub fn run_features(config: &PipelineConfig) -> Result<StageSummary, PipelineError> {
    let mut ctx = Ctx::new(config, Stage::Features)?;
    let stores = load_stores(&ctx.layout)?;

    let pr_config = config.pagerank();
    let link_features = stores
        .catalog
        .languages()
        .iter()
        .map(|lang| {
            linkgraph::language_features(&stores.links, &stores.categories, &stores.catalog, lang, &pr_config)
        })
        .collect::<Result<Vec<LanguageFeatures>, _>>()?;
    let mut pr_summary = String::from("# language\tnodes\titerations\tresidual\tconverged\n");
    for lf in &link_features {
        if !lf.converged {
            warn!(
                "pagerank for {} stopped after {} iterations (residual {:e})",
                lf.language, lf.iterations, lf.residual
            );
        }
        let _ = writeln!(
            pr_summary,
            "{}\t{}\t{}\t{}\t{}",
            lf.language,
            lf.node_count,
            lf.iterations,
            tsv::fmt_real(lf.residual),
            lf.converged
        );
    }

    let index = TripleIndex::new(&stores.triples, &config.kb_features());
    let kb_ids: Vec<&str> = stores.catalog.kb_ids().collect();
    let kb_rows = kbfeatures::triple_feature_rows(&index, &stores.social_scores, &kb_ids);

    let raw = model::assemble(&stores.catalog, &link_features, &kb_rows)?;
    let normalized = model::normalize(&raw);

    ctx.write(
        ctx.layout.features("link_features"),
        &format!(
            "# language\tpage_id\tpagerank\tinlinks\toutlinks\tin_out_ratio\tcategory_count\n{}",
            linkgraph::write_feature_dump(&link_features)
        ),
    )?;
    ctx.write(ctx.layout.features("pagerank"), &pr_summary)?;
    ctx.write(
        ctx.layout.features("kb_features"),
        &format!(
            "# kb_id\tsubject#\tsubject_types#\tobject#\tobject_types#\tsocial_score\n{}",
            kbfeatures::write_feature_dump(&kb_rows)
        ),
    )?;
    ctx.write(ctx.layout.features("raw_matrix"), &raw.to_tsv())?;
    ctx.write(ctx.layout.features("normalized_matrix"), &normalized.to_tsv())?;
    ctx.write(ctx.layout.features("normalization"), &normalized.normalizer.to_tsv())?;
    ctx.note(format!("{} feature rows", raw.rows.len()));
    Ok(ctx.summary)
}

pub fn load_normalized(layout: &Layout) -> Result<NormalizedMatrix, PipelineError> {
    let norm_path = layout.features("normalization");
    let normalizer = parse_normalization(&read_required(&norm_path)?).map_err(|e| bad_file(&norm_path)(e.to_string()))?;
    let path = layout.features("normalized_matrix");
    parse_normalized_matrix(&read_required(&path)?, normalizer).map_err(|e| bad_file(&path)(e.to_string()))
}

fn load_raw(layout: &Layout) -> Result<model::RawMatrix, PipelineError> {
    let path = layout.features("raw_matrix");
    parse_raw_matrix(&read_required(&path)?).map_err(|e| bad_file(&path)(e.to_string()))
}

fn load_weights(layout: &Layout) -> Result<model::WeightVector, PipelineError> {
    let path = layout.model("weights");
    parse_weights(&read_required(&path)?).map_err(|e| bad_file(&path)(e.to_string()))
}

fn load_split(layout: &Layout, seed: u64) -> Result<TrainTestSplit, PipelineError> {
    let path = layout.model("split");
    TrainTestSplit::from_tsv(&read_required(&path)?, seed).map_err(|e| bad_file(&path)(e.to_string()))
}

/// Split the labels, fit the all-features model, and write the weights and
/// the per-feature evaluation table.
pub fn run_train(config: &PipelineConfig) -> Result<StageSummary, PipelineError> {
    let mut ctx = Ctx::new(config, Stage::Train)?;
    let catalog = load_catalog(&ctx.layout)?;
    let labels = load_labels(&ctx.layout, &catalog)?;
    let raw = load_raw(&ctx.layout)?;
    let matrix = load_normalized(&ctx.layout)?;

    let split = model::split_labels(&labels, config.split_seed, config.train_fraction)?;
    let weights = model::train(&matrix, &labels, &split)?;
    let coverage = feature_coverage(&raw)?;
    let report = rankeval::single_feature_eval(&matrix, &labels, &split, &coverage, config.positive_threshold)?;

    ctx.write(ctx.layout.model("weights"), &weights.to_tsv())?;
    ctx.write(ctx.layout.model("split"), &split.to_tsv())?;
    ctx.write(ctx.layout.model("eval_report"), &report.to_tsv())?;
    if let Some(all) = report.row(ALL_FEATURES_VARIANT) {
        ctx.note(format!(
            "{} train / {} test; all features P={:.3} R={:.3} F1={:.3} RMSE={:.3}",
            split.train.len(),
            split.test.len(),
            all.metrics.precision,
            all.metrics.recall,
            all.metrics.f1,
            all.metrics.rmse
        ));
    }
    Ok(ctx.summary)
}

/// Re-score the held-out entities with the persisted weights.
pub fn run_eval(config: &PipelineConfig) -> Result<StageSummary, PipelineError> {
    let mut ctx = Ctx::new(config, Stage::Eval)?;
    let catalog = load_catalog(&ctx.layout)?;
    let labels = load_labels(&ctx.layout, &catalog)?;
    let raw = load_raw(&ctx.layout)?;
    let matrix = load_normalized(&ctx.layout)?;
    let weights = load_weights(&ctx.layout)?;
    let split = load_split(&ctx.layout, config.split_seed)?;

    let predicted = predict(&matrix, &weights, &split.test)?;
    let mut body = String::from("# kb_id\tscore\trounded\tlabel\n");
    for (id, s) in split.test.iter().zip(&predicted) {
        let label = labels
            .get(id)
            .ok_or_else(|| ModelError::MissingLabel(id.clone()))?;
        let _ = writeln!(body, "{id}\t{}\t{}\t{label}", tsv::fmt_real(*s), round_prediction(*s));
    }
    let metrics = evaluate_model(&matrix, &weights, &labels, &split, config.positive_threshold)?;
    let summary = EvalReport {
        rows: vec![EvalRow {
            variant: ALL_FEATURES_VARIANT.to_string(),
            metrics,
            coverage: feature_coverage(&raw)?.any,
        }],
    };
    ctx.write(ctx.layout.eval("predictions"), &body)?;
    ctx.write(ctx.layout.eval("eval_summary"), &summary.to_tsv())?;
    ctx.note(format!(
        "{} held-out entities; F1={:.3} RMSE={:.3}",
        split.test.len(),
        metrics.f1,
        metrics.rmse
    ));
    Ok(ctx.summary)
}

/// Score every row and write one ranked list per language.
pub fn run_rank(config: &PipelineConfig) -> Result<StageSummary, PipelineError> {
    let mut ctx = Ctx::new(config, Stage::Rank)?;
    let catalog = load_catalog(&ctx.layout)?;
    let matrix = load_normalized(&ctx.layout)?;
    let weights = load_weights(&ctx.layout)?;

    let mut by_lang: BTreeMap<&Language, Vec<ScoredRow>> = BTreeMap::new();
    for row in &matrix.rows {
        let title = catalog
            .record(&row.kb_id, &row.language)
            .map(|r| r.title.clone())
            .ok_or_else(|| EvalError::UnknownEntity(row.kb_id.clone()))?;
        by_lang.entry(&row.language).or_default().push(ScoredRow {
            kb_id: row.kb_id.clone(),
            title,
            score: model::score(&weights, &row.values),
        });
    }
    for (lang, rows) in by_lang {
        let mut list = rank(rows, lang);
        list.truncate(config.top_n);
        ctx.write(ctx.layout.ranked(lang), &list.to_tsv())?;
        ctx.note(format!("{lang}: {} ranked entities", list.rows.len()));
    }
    Ok(ctx.summary)
}

/// Entity-type distribution of each language's ranked head versus its catalog.
pub fn run_report(config: &PipelineConfig) -> Result<StageSummary, PipelineError> {
    let mut ctx = Ctx::new(config, Stage::Report)?;
    let catalog = load_catalog(&ctx.layout)?;
    for lang in catalog.languages() {
        let path = ctx.layout.ranked(&lang);
        let list = parse_ranked_list(&read_required(&path)?, &lang).map_err(|e| bad_file(&path)(e.to_string()))?;
        let top_n = config.top_n.min(list.rows.len());
        let dist = rankeval::type_distribution(&catalog, &list, top_n)?;
        let body = format!(
            "# language={lang} top_n={top_n}\n# population\tentity_type\tfraction\n{}",
            dist.to_tsv()
        );
        ctx.write(ctx.layout.type_report(&lang), &body)?;
        ctx.note(format!(
            "{lang}: PERSON {:.3} of top {top_n} vs {:.3} overall",
            dist.top[0], dist.global[0]
        ));
    }
    Ok(ctx.summary)
}

pub fn run_stage(stage: Stage, config: &PipelineConfig) -> Result<StageSummary, PipelineError> {
    match stage {
        Stage::Ingest => run_ingest(config),
        Stage::Features => run_features(config),
        Stage::Train => run_train(config),
        Stage::Eval => run_eval(config),
        Stage::Rank => run_rank(config),
        Stage::Report => run_report(config),
    }
}

/// Run all six stages in order.
pub fn run_all(config: &PipelineConfig) -> Result<StageSummary, PipelineError> {
    let mut all = StageSummary::default();
    for stage in Stage::ALL {
        let s = run_stage(stage, config)?;
        all.outputs.extend(s.outputs);
        all.notes.extend(s.notes);
    }
    Ok(all)
}
