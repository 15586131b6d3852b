//! Per-emotion binary text classification.
//!
//! Text is cleaned of markup, code and URLs ([`textprep`]), turned into a
//! sparse vector of uni-/bigram tf-idf weights plus lexicon-based features
//! ([`features`], [`lexicon`]), and classified by an L2-regularized linear SVM
//! trained with dual coordinate descent ([`linsvm`]). [`pipeline`] runs the
//! training protocol: stratified 70/30 split, 10-fold cross-validated choice
//! of the cost parameter, one model per emotion and held-out evaluation.

pub mod corpus;
pub mod features;
pub mod lexicon;
pub mod linsvm;
pub mod metrics;
pub mod pipeline;
pub mod sparse;
pub mod textprep;

#[cfg(feature = "testkit")]
pub mod testkit;

pub use corpus::{Document, EmotionLabel, LabeledDocument, Prediction};
pub use features::FittedExtractor;
pub use lexicon::LexiconSet;
pub use linsvm::{LinearModel, Loss, SolverParams, TrainingProblem};
pub use metrics::{Confusion, EvalReport};
pub use pipeline::{ModelBundle, PipelineError, Protocol, TrainConfig};
pub use sparse::SparseVector;
pub use textprep::{RuleTokenizer, TokenStream, Tokenizer};
