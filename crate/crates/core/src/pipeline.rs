//! Experimental protocol: stratified train/test split, stratified k-fold
//! tuning of the SVM cost over a fixed grid, one binary model per emotion,
//! held-out evaluation and model bundles.
//!
//! Work items (emotion, cost, fold) run on the current rayon pool. Results
//! are always reduced in (emotion, cost, fold) order, so the thread count
//! never changes the output.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::{self, CorpusError, Document, EmotionLabel, LabeledDocument, Prediction};
use crate::features::{self, FeatureError, FittedExtractor};
use crate::lexicon::{LexiconError, LexiconSet};
use crate::linsvm::{self, LinearModel, Loss, SolveTrace, SolverParams, SvmError, TrainingProblem};
use crate::metrics::{Confusion, EvalReport};
use crate::sparse::SparseVector;
use crate::textprep::{strip_noise, RuleTokenizer, TokenStream, Tokenizer};

pub const BUNDLE_VERSION: &str = "emotag-bundle/1";

/// Cost values searched during tuning.
pub const DEFAULT_GRID: [f64; 10] = [0.01, 0.05, 0.10, 0.20, 0.25, 0.50, 1.0, 2.0, 4.0, 8.0];

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Svm(#[from] SvmError),
    #[error(transparent)]
    Lexicon(#[from] LexiconError),
    #[error("emotion {0} has only one class in the training data")]
    DegenerateClass(EmotionLabel),
    #[error("the {class} class has fewer than {k} members, cannot build {k} folds")]
    TooFewPositives { class: &'static str, k: usize },
    #[error("no emotions selected")]
    EmptyEmotionSet,
    #[error("emotion {0} is not a column of the gold corpus")]
    UnknownEmotion(EmotionLabel),
    #[error("gold data has no label for emotion {0}")]
    MissingLabel(EmotionLabel),
    #[error("incompatible model bundle: {0}")]
    IncompatibleModel(String),
    #[error("cannot parse model bundle: {0}")]
    Parse(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{}", format_many(.0))]
    Multiple(Vec<(EmotionLabel, PipelineError)>),
}

fn format_many(errors: &[(EmotionLabel, PipelineError)]) -> String {
    let mut out = format!("{} emotion(s) failed:", errors.len());
    for (emotion, err) in errors {
        let _ = write!(out, "\n  {emotion}: {err}");
    }
    out
}

/// Broad failure classes, used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Input,
    Model,
    Internal,
}

impl PipelineError {
    pub fn class(&self) -> ErrorClass {
        match self {
            PipelineError::IncompatibleModel(_) | PipelineError::Parse(_) => ErrorClass::Model,
            PipelineError::Feature(FeatureError::IncompatibleModel(_) | FeatureError::Parse(_)) => {
                ErrorClass::Model
            }
            PipelineError::Svm(SvmError::NumericError(_)) => ErrorClass::Internal,
            PipelineError::Feature(FeatureError::ContractViolation(_)) => ErrorClass::Internal,
            PipelineError::Multiple(errors) => errors
                .iter()
                .map(|(_, e)| e.class())
                .max_by_key(|c| match c {
                    ErrorClass::Internal => 2,
                    ErrorClass::Model => 1,
                    ErrorClass::Input => 0,
                })
                .unwrap_or(ErrorClass::Internal),
            _ => ErrorClass::Input,
        }
    }
}

pub type Result<T> = std::result::Result<T, PipelineError>;

/// Distinct, strictly positive cost values. The order is kept for display
/// only; selection does not depend on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct TuningGrid(Vec<f64>);

impl TuningGrid {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(PipelineError::InvalidConfig("cost grid is empty".into()));
        }
        if values.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
            return Err(PipelineError::InvalidConfig(
                "cost values must be positive".into(),
            ));
        }
        let mut sorted = values.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(PipelineError::InvalidConfig(
                "cost values must be distinct".into(),
            ));
        }
        Ok(TuningGrid(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

impl Default for TuningGrid {
    fn default() -> Self {
        TuningGrid(DEFAULT_GRID.to_vec())
    }
}

impl TryFrom<Vec<f64>> for TuningGrid {
    type Error = PipelineError;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        TuningGrid::new(values)
    }
}

impl From<TuningGrid> for Vec<f64> {
    fn from(grid: TuningGrid) -> Vec<f64> {
        grid.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TuningMetric {
    Accuracy,
    F1,
}

/// Protocol settings. Everything here is written into model bundles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Protocol {
    pub train_fraction: f64,
    pub folds: usize,
    pub grid: TuningGrid,
    pub seed: u64,
    pub min_df: u32,
    pub loss: Loss,
    pub solver_eps: f64,
    pub max_outer_iters: usize,
    pub tuning_metric: TuningMetric,
    /// One split shared by all emotions instead of one per emotion.
    pub shared_split: bool,
    /// Cost multiplier for positive instances.
    pub positive_weight: f64,
}

impl Default for Protocol {
    fn default() -> Self {
        Protocol {
            train_fraction: 0.7,
            folds: 10,
            grid: TuningGrid::default(),
            seed: 42,
            min_df: 2,
            loss: Loss::L2Hinge,
            solver_eps: 0.1,
            max_outer_iters: 1000,
            tuning_metric: TuningMetric::Accuracy,
            shared_split: false,
            positive_weight: 1.0,
        }
    }
}

impl Protocol {
    pub fn validate(&self) -> Result<()> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(PipelineError::InvalidConfig(format!(
                "train fraction must lie in (0, 1), got {}",
                self.train_fraction
            )));
        }
        if self.folds < 2 {
            return Err(PipelineError::InvalidConfig("need at least 2 folds".into()));
        }
        if self.solver_eps.is_nan() || self.solver_eps <= 0.0 || self.max_outer_iters == 0 {
            return Err(PipelineError::InvalidConfig(
                "solver tolerance must be positive".into(),
            ));
        }
        if !(self.positive_weight.is_finite() && self.positive_weight > 0.0) {
            return Err(PipelineError::InvalidConfig(
                "positive weight must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Protocol plus the resources that turn text into features.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub protocol: Protocol,
    pub lexicons: LexiconSet,
    pub tokenizer: RuleTokenizer,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            protocol: Protocol::default(),
            lexicons: LexiconSet::builtin(),
            tokenizer: RuleTokenizer::default(),
        }
    }
}

/// Noise removal followed by tokenization.
pub fn preprocess<T: Tokenizer + ?Sized>(tokenizer: &T, text: &str) -> TokenStream {
    tokenizer.tokenize(&strip_noise(text))
}

/// Seed for one purpose of one emotion, derived from the master seed so that
/// each emotion's training is independent of which other emotions are
/// trained alongside it.
pub fn derive_seed(master: u64, emotion: &str, purpose: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(master.to_le_bytes());
    hasher.update(emotion.as_bytes());
    hasher.update([0]);
    hasher.update(purpose.as_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmotionSeeds {
    pub split: u64,
    pub folds: u64,
    pub solver: u64,
}

impl EmotionSeeds {
    pub fn derive(master: u64, emotion: &EmotionLabel) -> Self {
        EmotionSeeds {
            split: derive_seed(master, emotion.as_str(), "split"),
            folds: derive_seed(master, emotion.as_str(), "folds"),
            solver: derive_seed(master, emotion.as_str(), "solver"),
        }
    }
}

/// Hooks into training, for logging and audits. Called from worker threads.
pub trait TrainObserver: Sync {
    fn fold_evaluated(&self, _event: &FoldEvaluation) {}
    fn solver_finished(&self, _emotion: &EmotionLabel, _trace: &SolveTrace) {}
}

pub struct NoopObserver;

impl TrainObserver for NoopObserver {}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldEvaluation {
    pub emotion: EmotionLabel,
    pub cost: f64,
    pub fold: usize,
    pub train_size: usize,
    pub heldout_size: usize,
    pub confusion: Confusion,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    pub k: usize,
    pub assignment: Vec<usize>,
    pub seed: u64,
}

impl FoldPlan {
    pub fn members(&self, fold: usize) -> Vec<usize> {
        self.assignment
            .iter()
            .enumerate()
            .filter(|&(_, &f)| f == fold)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Stratified fold assignment: each class is shuffled with the seeded RNG
/// and dealt round-robin over the folds. The negatives continue where the
/// positives stopped so that fold sizes stay balanced too.
pub fn make_fold_plan(labels: &[bool], k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(PipelineError::InvalidConfig("need at least 2 folds".into()));
    }
    let mut positives: Vec<usize> = (0..labels.len()).filter(|&i| labels[i]).collect();
    let mut negatives: Vec<usize> = (0..labels.len()).filter(|&i| !labels[i]).collect();
    if positives.len() < k {
        return Err(PipelineError::TooFewPositives {
            class: "positive",
            k,
        });
    }
    if negatives.len() < k {
        return Err(PipelineError::TooFewPositives {
            class: "negative",
            k,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    positives.shuffle(&mut rng);
    negatives.shuffle(&mut rng);
    let mut assignment = vec![0; labels.len()];
    for (j, &i) in positives.iter().enumerate() {
        assignment[i] = j % k;
    }
    let offset = positives.len() % k;
    for (j, &i) in negatives.iter().enumerate() {
        assignment[i] = (j + offset) % k;
    }
    Ok(FoldPlan {
        k,
        assignment,
        seed,
    })
}

fn labels_for(docs: &[LabeledDocument], emotion: &EmotionLabel) -> Result<Vec<bool>> {
    docs.iter()
        .map(|d| {
            d.label(emotion)
                .ok_or_else(|| PipelineError::MissingLabel(emotion.clone()))
        })
        .collect()
}

fn signed(labels: &[bool]) -> Vec<f64> {
    labels.iter().map(|&l| if l { 1.0 } else { -1.0 }).collect()
}

fn solver_params(protocol: &Protocol, seed: u64) -> SolverParams {
    SolverParams {
        eps: protocol.solver_eps,
        max_outer_iters: protocol.max_outer_iters,
        seed,
    }
}

fn train_linear(
    rows: Vec<SparseVector>,
    labels: &[bool],
    cost: f64,
    emotion: &EmotionLabel,
    protocol: &Protocol,
    seed: u64,
    observer: &dyn TrainObserver,
) -> Result<LinearModel> {
    let problem = TrainingProblem::new(rows, signed(labels), cost, protocol.loss)
        .map_err(|e| match e {
            SvmError::DegenerateClass => PipelineError::DegenerateClass(emotion.clone()),
            other => other.into(),
        })?
        .with_class_weights(protocol.positive_weight, 1.0)?;
    let params = solver_params(protocol, seed);
    let solution = linsvm::solve_dual(&problem, &params)?;
    observer.solver_finished(emotion, &solution.trace);
    Ok(LinearModel::from_solution(solution, &problem, &params))
}

/// Training and held-out vectors of one fold, built with an extractor fitted
/// on the training part only.
struct PreparedFold {
    train_rows: Vec<SparseVector>,
    train_labels: Vec<bool>,
    heldout_rows: Vec<SparseVector>,
    heldout_labels: Vec<bool>,
}

fn prepare_folds(
    streams: &[TokenStream],
    labels: &[bool],
    plan: &FoldPlan,
    config: &TrainConfig,
) -> Result<Vec<PreparedFold>> {
    if plan.assignment.len() != streams.len() {
        return Err(PipelineError::InvalidConfig(
            "fold plan does not cover the training documents".into(),
        ));
    }
    (0..plan.k)
        .into_par_iter()
        .map(|fold| {
            let (mut train_docs, mut train_labels) = (Vec::new(), Vec::new());
            let (mut heldout_docs, mut heldout_labels) = (Vec::new(), Vec::new());
            for (i, &f) in plan.assignment.iter().enumerate() {
                if f == fold {
                    heldout_docs.push(&streams[i]);
                    heldout_labels.push(labels[i]);
                } else {
                    train_docs.push(streams[i].clone());
                    train_labels.push(labels[i]);
                }
            }
            let extractor =
                features::fit(&train_docs, config.lexicons.clone(), config.protocol.min_df)?;
            Ok(PreparedFold {
                train_rows: train_docs.iter().map(|d| extractor.assemble(d)).collect(),
                train_labels,
                heldout_rows: heldout_docs.iter().map(|d| extractor.assemble(d)).collect(),
                heldout_labels,
            })
        })
        .collect()
}

/// Pooled cross-validation outcome for one cost value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvScore {
    pub cost: f64,
    pub confusion: Confusion,
}

impl CvScore {
    pub fn accuracy(&self) -> f64 {
        self.confusion.accuracy()
    }

    pub fn metric(&self, metric: TuningMetric) -> f64 {
        match metric {
            TuningMetric::Accuracy => self.confusion.accuracy(),
            TuningMetric::F1 => self.confusion.f1(),
        }
    }
}

fn score_cost(
    folds: &[PreparedFold],
    emotion: &EmotionLabel,
    cost: f64,
    protocol: &Protocol,
    solver_seed: u64,
    observer: &dyn TrainObserver,
) -> Result<CvScore> {
    let per_fold: Vec<Confusion> = folds
        .par_iter()
        .enumerate()
        .map(|(fold, prepared)| {
            let model = train_linear(
                prepared.train_rows.clone(),
                &prepared.train_labels,
                cost,
                emotion,
                protocol,
                solver_seed,
                observer,
            )?;
            let mut confusion = Confusion::default();
            for (x, &gold) in prepared.heldout_rows.iter().zip(&prepared.heldout_labels) {
                confusion.record(model.predict(x)?, gold);
            }
            observer.fold_evaluated(&FoldEvaluation {
                emotion: emotion.clone(),
                cost,
                fold,
                train_size: prepared.train_labels.len(),
                heldout_size: prepared.heldout_labels.len(),
                confusion,
            });
            Ok(confusion)
        })
        .collect::<Result<_>>()?;
    let confusion = per_fold
        .into_iter()
        .fold(Confusion::default(), |a, b| a + b);
    Ok(CvScore { cost, confusion })
}

fn tokenize_all(docs: &[LabeledDocument], tokenizer: &RuleTokenizer) -> Vec<TokenStream> {
    docs.par_iter()
        .map(|d| preprocess(tokenizer, &d.doc.text))
        .collect()
}

/// Cross-validated score of one cost value: for every fold the extractor is
/// fitted and the SVM trained on the other folds, and the held-out
/// predictions of all folds are pooled.
pub fn cv_score(
    train_docs: &[LabeledDocument],
    emotion: &EmotionLabel,
    cost: f64,
    plan: &FoldPlan,
    config: &TrainConfig,
    observer: &dyn TrainObserver,
) -> Result<CvScore> {
    let labels = labels_for(train_docs, emotion)?;
    let streams = tokenize_all(train_docs, &config.tokenizer);
    let folds = prepare_folds(&streams, &labels, plan, config)?;
    let seed = EmotionSeeds::derive(config.protocol.seed, emotion).solver;
    score_cost(&folds, emotion, cost, &config.protocol, seed, observer)
}

/// Picks the best score; ties go to the smallest cost.
pub fn select_cost(scores: &[CvScore], metric: TuningMetric) -> Option<CvScore> {
    let mut sorted = scores.to_vec();
    sorted.sort_by(|a, b| a.cost.total_cmp(&b.cost));
    let mut best: Option<CvScore> = None;
    for score in sorted {
        if best.is_none_or(|b| score.metric(metric) > b.metric(metric)) {
            best = Some(score);
        }
    }
    best
}

#[derive(Debug, Clone)]
pub struct GridSearch {
    pub chosen: CvScore,
    pub scores: Vec<CvScore>,
}

fn grid_search_streams(
    streams: &[TokenStream],
    labels: &[bool],
    emotion: &EmotionLabel,
    plan: &FoldPlan,
    config: &TrainConfig,
    solver_seed: u64,
    observer: &dyn TrainObserver,
) -> Result<GridSearch> {
    let folds = prepare_folds(streams, labels, plan, config)?;
    let scores: Vec<CvScore> = config
        .protocol
        .grid
        .values()
        .par_iter()
        .map(|&cost| {
            score_cost(
                &folds,
                emotion,
                cost,
                &config.protocol,
                solver_seed,
                observer,
            )
        })
        .collect::<Result<_>>()?;
    let chosen = select_cost(&scores, config.protocol.tuning_metric).expect("grid is non-empty");
    Ok(GridSearch { chosen, scores })
}

/// Evaluates every cost of `config.protocol.grid` over one shared fold plan
/// (`config.protocol.folds` folds, seeded from the protocol seed and the
/// emotion) and returns the best.
pub fn grid_search_c(
    train_docs: &[LabeledDocument],
    emotion: &EmotionLabel,
    config: &TrainConfig,
    observer: &dyn TrainObserver,
) -> Result<GridSearch> {
    config.protocol.validate()?;
    let labels = labels_for(train_docs, emotion)?;
    let seeds = EmotionSeeds::derive(config.protocol.seed, emotion);
    let plan = make_fold_plan(&labels, config.protocol.folds, seeds.folds)?;
    let streams = tokenize_all(train_docs, &config.tokenizer);
    grid_search_streams(
        &streams,
        &labels,
        emotion,
        &plan,
        config,
        seeds.solver,
        observer,
    )
}

/// One trained binary classifier with the feature extractor it was trained
/// against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmotionModel {
    pub emotion: EmotionLabel,
    pub chosen_cost: f64,
    /// Cross-validated value of the tuning metric at `chosen_cost`.
    pub cv_score: f64,
    pub seeds: EmotionSeeds,
    pub train_size: usize,
    pub extractor: FittedExtractor,
    pub model: LinearModel,
}

impl EmotionModel {
    pub fn predict(&self, doc: &TokenStream) -> Result<bool> {
        Ok(self.model.predict(&self.extractor.assemble(doc))?)
    }

    pub fn decision_value(&self, doc: &TokenStream) -> Result<f64> {
        Ok(self.model.decision_value(&self.extractor.assemble(doc))?)
    }

    /// Features sorted by decreasing absolute weight (bias excluded).
    pub fn top_features(&self, n: usize) -> Vec<(String, f64)> {
        let d = self.extractor.dimension();
        let mut indexed: Vec<(usize, f64)> = self.model.weights[..d]
            .iter()
            .copied()
            .enumerate()
            .collect();
        indexed.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()).then(a.0.cmp(&b.0)));
        indexed
            .into_iter()
            .take(n)
            .map(|(i, w)| (self.extractor.feature_name(i).expect("index in range"), w))
            .collect()
    }

    fn validate(&self) -> Result<()> {
        self.extractor.validate().map_err(|e| {
            PipelineError::IncompatibleModel(format!("extractor for {}: {e}", self.emotion))
        })?;
        let expected = self.extractor.dimension() + 1;
        if self.model.weights.len() != expected {
            return Err(PipelineError::IncompatibleModel(format!(
                "model for {} has {} weights, its feature space needs {expected}",
                self.emotion,
                self.model.weights.len()
            )));
        }
        if self.model.weights.iter().any(|w| !w.is_finite()) {
            return Err(PipelineError::IncompatibleModel(format!(
                "model for {} has non-finite weights",
                self.emotion
            )));
        }
        if self.model.emotion.as_ref() != Some(&self.emotion) {
            return Err(PipelineError::IncompatibleModel(format!(
                "model section for {} is labelled {:?}",
                self.emotion, self.model.emotion
            )));
        }
        Ok(())
    }
}

/// Grid search on `train_docs`, then extractor refit and final training on
/// all of `train_docs` at the chosen cost.
pub fn fit_emotion_model(
    train_docs: &[LabeledDocument],
    emotion: &EmotionLabel,
    config: &TrainConfig,
    observer: &dyn TrainObserver,
) -> Result<EmotionModel> {
    config.protocol.validate()?;
    let labels = labels_for(train_docs, emotion)?;
    if !(labels.contains(&true) && labels.contains(&false)) {
        return Err(PipelineError::DegenerateClass(emotion.clone()));
    }
    let seeds = EmotionSeeds::derive(config.protocol.seed, emotion);
    let plan = make_fold_plan(&labels, config.protocol.folds, seeds.folds)?;
    let streams = tokenize_all(train_docs, &config.tokenizer);
    let search = grid_search_streams(
        &streams,
        &labels,
        emotion,
        &plan,
        config,
        seeds.solver,
        observer,
    )?;

    let extractor = features::fit(&streams, config.lexicons.clone(), config.protocol.min_df)?;
    let rows: Vec<SparseVector> = streams.par_iter().map(|s| extractor.assemble(s)).collect();
    let mut model = train_linear(
        rows,
        &labels,
        search.chosen.cost,
        emotion,
        &config.protocol,
        seeds.solver,
        observer,
    )?;
    model.emotion = Some(emotion.clone());
    model.extractor_version = Some(extractor.version().to_string());
    Ok(EmotionModel {
        emotion: emotion.clone(),
        chosen_cost: search.chosen.cost,
        cv_score: search.chosen.metric(config.protocol.tuning_metric),
        seeds,
        train_size: train_docs.len(),
        extractor,
        model,
    })
}

#[derive(Debug, Clone)]
pub struct TrainedEmotion {
    pub model: EmotionModel,
    pub train: Vec<LabeledDocument>,
    pub test: Vec<LabeledDocument>,
}

/// Splits `gold` stratified on `emotion` and fits a model on the train
/// partition. The test partition is returned untouched.
pub fn train_emotion_model(
    gold: &[LabeledDocument],
    emotion: &EmotionLabel,
    config: &TrainConfig,
    observer: &dyn TrainObserver,
) -> Result<TrainedEmotion> {
    config.protocol.validate()?;
    let seeds = EmotionSeeds::derive(config.protocol.seed, emotion);
    let split =
        corpus::stratified_split(gold, emotion, config.protocol.train_fraction, seeds.split)
            .map_err(|e| match e {
                CorpusError::DegenerateClass(emotion) => PipelineError::DegenerateClass(emotion),
                other => other.into(),
            })?;
    let model = fit_emotion_model(&split.train, emotion, config, observer)?;
    Ok(TrainedEmotion {
        model,
        train: split.train,
        test: split.test,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub emotions: Vec<EmotionLabel>,
    pub protocol: Protocol,
    /// Tokenizer emoticon table.
    pub emoticons: Vec<String>,
    pub cv_pooling: String,
}

/// A shippable set of per-emotion models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBundle {
    pub version: String,
    pub manifest: Manifest,
    pub models: Vec<EmotionModel>,
}

impl ModelBundle {
    pub fn tokenizer(&self) -> RuleTokenizer {
        RuleTokenizer::new(self.manifest.emoticons.iter().cloned())
    }

    pub fn model(&self, emotion: &EmotionLabel) -> Option<&EmotionModel> {
        self.models.iter().find(|m| &m.emotion == emotion)
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != BUNDLE_VERSION {
            return Err(PipelineError::IncompatibleModel(format!(
                "unsupported bundle version {:?}",
                self.version
            )));
        }
        let names: Vec<&EmotionLabel> = self.models.iter().map(|m| &m.emotion).collect();
        if names != self.manifest.emotions.iter().collect::<Vec<_>>() {
            return Err(PipelineError::IncompatibleModel(
                "manifest emotions do not match the model sections".into(),
            ));
        }
        self.models.iter().try_for_each(EmotionModel::validate)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("bundle serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| PipelineError::Parse(e.to_string()))?;
        match value.get("version").and_then(|v| v.as_str()) {
            Some(BUNDLE_VERSION) => {}
            Some(other) => {
                return Err(PipelineError::IncompatibleModel(format!(
                    "unsupported bundle version {other:?}"
                )))
            }
            None => return Err(PipelineError::Parse("missing version field".into())),
        }
        let bundle: ModelBundle =
            serde_json::from_value(value).map_err(|e| PipelineError::Parse(e.to_string()))?;
        bundle.validate()?;
        Ok(bundle)
    }
}

pub fn save_bundle(bundle: &ModelBundle, path: &Path) -> Result<()> {
    fs::write(path, bundle.to_json()).map_err(|source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_bundle(path: &Path) -> Result<ModelBundle> {
    let text = fs::read_to_string(path).map_err(|source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    ModelBundle::from_json(&text)
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub bundle: ModelBundle,
    /// Each emotion evaluated on its own held-out partition.
    pub report: EvalReport,
}

/// Trains one independent binary model per emotion and evaluates each on its
/// held-out partition. Failures of individual emotions are collected and
/// reported together.
pub fn train_all(
    gold: &[LabeledDocument],
    emotions: &[EmotionLabel],
    config: &TrainConfig,
    observer: &dyn TrainObserver,
) -> Result<TrainOutcome> {
    if emotions.is_empty() {
        return Err(PipelineError::EmptyEmotionSet);
    }
    config.protocol.validate()?;
    if let Some(first) = gold.first() {
        if let Some(missing) = emotions.iter().find(|e| !first.labels.contains_key(*e)) {
            return Err(PipelineError::UnknownEmotion(missing.clone()));
        }
    }

    let shared = if config.protocol.shared_split {
        let seed = derive_seed(config.protocol.seed, "", "shared-split");
        Some(corpus::shared_split(
            gold,
            emotions,
            config.protocol.train_fraction,
            seed,
        )?)
    } else {
        None
    };

    let results: Vec<Result<(EmotionModel, Vec<LabeledDocument>)>> = emotions
        .par_iter()
        .map(|emotion| match &shared {
            Some(split) => fit_emotion_model(&split.train, emotion, config, observer)
                .map(|m| (m, split.test.clone())),
            None => train_emotion_model(gold, emotion, config, observer).map(|t| (t.model, t.test)),
        })
        .collect();

    let mut models = Vec::new();
    let mut tests = Vec::new();
    let mut failures = Vec::new();
    for (emotion, result) in emotions.iter().zip(results) {
        match result {
            Ok((model, test)) => {
                models.push(model);
                tests.push(test);
            }
            Err(err) => failures.push((emotion.clone(), err)),
        }
    }
    if !failures.is_empty() {
        return Err(PipelineError::Multiple(failures));
    }

    let tokenizer = &config.tokenizer;
    let mut report = EvalReport::default();
    for (model, test) in models.iter().zip(&tests) {
        report.push(
            model.emotion.clone(),
            evaluate_model(model, test, tokenizer)?,
        );
    }
    let bundle = ModelBundle {
        version: BUNDLE_VERSION.to_string(),
        manifest: Manifest {
            emotions: emotions.to_vec(),
            protocol: config.protocol.clone(),
            emoticons: tokenizer.emoticons(),
            cv_pooling: "pooled_heldout_predictions".into(),
        },
        models,
    };
    Ok(TrainOutcome { bundle, report })
}

fn evaluate_model(
    model: &EmotionModel,
    docs: &[LabeledDocument],
    tokenizer: &RuleTokenizer,
) -> Result<Confusion> {
    let labels = labels_for(docs, &model.emotion)?;
    let predictions: Vec<bool> = docs
        .par_iter()
        .map(|d| model.predict(&preprocess(tokenizer, &d.doc.text)))
        .collect::<Result<_>>()?;
    let mut confusion = Confusion::default();
    for (predicted, gold) in predictions.into_iter().zip(labels) {
        confusion.record(predicted, gold);
    }
    Ok(confusion)
}

/// Confusion counts and metrics of every model in `bundle` on `docs`.
pub fn evaluate(bundle: &ModelBundle, docs: &[LabeledDocument]) -> Result<EvalReport> {
    let tokenizer = bundle.tokenizer();
    let mut report = EvalReport::default();
    for model in &bundle.models {
        report.push(
            model.emotion.clone(),
            evaluate_model(model, docs, &tokenizer)?,
        );
    }
    Ok(report)
}

/// Predictions for every document and model, grouped by document in input
/// order.
pub fn classify(bundle: &ModelBundle, docs: &[Document]) -> Result<Vec<Prediction>> {
    let tokenizer = bundle.tokenizer();
    let per_doc: Vec<Vec<Prediction>> = docs
        .par_iter()
        .map(|doc| {
            let stream = preprocess(&tokenizer, &doc.text);
            bundle
                .models
                .iter()
                .map(|m| {
                    Ok(Prediction {
                        id: doc.id.clone(),
                        emotion: m.emotion.clone(),
                        present: m.predict(&stream)?,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    Ok(per_doc.into_iter().flatten().collect())
}

/// Helper for callers that want per-emotion results keyed by name.
pub fn chosen_costs(bundle: &ModelBundle) -> BTreeMap<EmotionLabel, f64> {
    bundle
        .models
        .iter()
        .map(|m| (m.emotion.clone(), m.chosen_cost))
        .collect()
}
