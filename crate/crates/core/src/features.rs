//! Feature extraction: a tf-idf block over uni- and bigrams, a tf-idf block
//! over emotion word categories, and four standardized scalars (politeness,
//! positive sentiment, negative sentiment, uncertainty).
//!
//! Layout of an assembled vector, in index order:
//!
//! ```text
//! [ n-gram terms | emotion categories | politeness | pos | neg | uncertainty ]
//! ```
//!
//! The two tf-idf blocks are L2-normalized independently. tf is the raw
//! in-document count and idf is `ln((1 + N) / (1 + df)) + 1`.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lexicon::LexiconSet;
use crate::sparse::SparseVector;
use crate::textprep::{ngram_terms, NgramOrders, TokenStream};

pub const EXTRACTOR_VERSION: &str = "emotag-extractor/1";

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("cannot fit an extractor on an empty training set")]
    EmptyCorpus,
    #[error("contract violation: {0}")]
    ContractViolation(String),
    #[error("incompatible extractor: {0}")]
    IncompatibleModel(String),
    #[error("cannot parse extractor: {0}")]
    Parse(String),
    #[error("{path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Smoothed inverse document frequency, `ln((1 + n_docs) / (1 + df)) + 1`.
pub fn idf(df: u32, n_docs: u32) -> Result<f64, FeatureError> {
    if df == 0 || df > n_docs {
        return Err(FeatureError::ContractViolation(format!(
            "idf needs 1 <= df <= n_docs, got df={df}, n_docs={n_docs}"
        )));
    }
    Ok(smoothed_idf(df, n_docs))
}

#[inline]
fn smoothed_idf(df: u32, n_docs: u32) -> f64 {
    ((1.0 + n_docs as f64) / (1.0 + df as f64)).ln() + 1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "VocabularyData", into = "VocabularyData")]
pub struct Vocabulary {
    terms: Vec<String>,
    df: Vec<u32>,
    n_docs: u32,
    min_df: u32,
    index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct VocabularyData {
    n_docs: u32,
    min_df: u32,
    terms: Vec<String>,
    df: Vec<u32>,
}

impl From<VocabularyData> for Vocabulary {
    fn from(data: VocabularyData) -> Self {
        let index = data
            .terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Vocabulary {
            terms: data.terms,
            df: data.df,
            n_docs: data.n_docs,
            min_df: data.min_df,
            index,
        }
    }
}

impl From<Vocabulary> for VocabularyData {
    fn from(vocab: Vocabulary) -> Self {
        VocabularyData {
            n_docs: vocab.n_docs,
            min_df: vocab.min_df,
            terms: vocab.terms,
            df: vocab.df,
        }
    }
}

impl Vocabulary {
    /// Builds a vocabulary from document-frequency counts, keeping the terms
    /// with `df >= min_df`. Terms are indexed in lexicographic order.
    pub fn from_counts<I, S>(counts: I, n_docs: u32, min_df: u32) -> Result<Self, FeatureError>
    where
        I: IntoIterator<Item = (S, u32)>,
        S: Into<String>,
    {
        let mut kept: Vec<(String, u32)> = Vec::new();
        for (term, df) in counts {
            if df == 0 || df > n_docs {
                return Err(FeatureError::ContractViolation(format!(
                    "document frequency {df} outside 1..={n_docs}"
                )));
            }
            if df >= min_df.max(1) {
                kept.push((term.into(), df));
            }
        }
        kept.sort();
        kept.dedup_by(|a, b| a.0 == b.0);
        let (terms, df) = kept.into_iter().unzip();
        Ok(Vocabulary::from(VocabularyData {
            n_docs,
            min_df,
            terms,
            df,
        }))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn n_docs(&self) -> u32 {
        self.n_docs
    }

    pub fn min_df(&self) -> u32 {
        self.min_df
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn term(&self, index: usize) -> &str {
        &self.terms[index]
    }

    pub fn df(&self, term: &str) -> Option<u32> {
        self.index_of(term).map(|i| self.df[i])
    }

    fn check(&self) -> Result<(), FeatureError> {
        let bad = |msg: String| Err(FeatureError::IncompatibleModel(msg));
        if self.terms.len() != self.df.len() {
            return bad("vocabulary terms and df lengths differ".into());
        }
        if self.index.len() != self.terms.len() {
            return bad("vocabulary contains duplicate terms".into());
        }
        if let Some(df) = self
            .df
            .iter()
            .find(|&&df| df == 0 || df > self.n_docs || df < self.min_df)
        {
            return bad(format!(
                "vocabulary df {df} inconsistent with n_docs {}",
                self.n_docs
            ));
        }
        Ok(())
    }
}

/// Mean and population standard deviation of one auxiliary scalar over the
/// training documents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuxStat {
    pub mean: f64,
    pub stddev: f64,
}

impl AuxStat {
    fn from_values(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        AuxStat {
            mean,
            stddev: var.sqrt(),
        }
    }

    pub fn standardize(&self, value: f64) -> f64 {
        if self.stddev > 0.0 {
            (value - self.mean) / self.stddev
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockKind {
    Ngrams,
    EmotionCategories,
    Politeness,
    PositiveSentiment,
    NegativeSentiment,
    Uncertainty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub kind: BlockKind,
    pub offset: usize,
    pub len: usize,
}

/// How the extractor was configured, stored alongside it so a model file
/// describes its own feature space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractorScheme {
    pub orders: NgramOrders,
    pub lowercase_terms: bool,
    pub tf: String,
    pub idf: String,
    pub block_normalization: String,
    pub aux_scaling: String,
}

impl Default for ExtractorScheme {
    fn default() -> Self {
        ExtractorScheme {
            orders: NgramOrders::default(),
            lowercase_terms: true,
            tf: "raw_count".into(),
            idf: "ln((1+N)/(1+df))+1".into(),
            block_normalization: "l2_per_block".into(),
            aux_scaling: "standardize_train_mean_stddev".into(),
        }
    }
}

/// Raw auxiliary scalars for one document: politeness, positive sentiment,
/// negative sentiment, uncertainty.
pub type AuxValues = [f64; 4];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedExtractor {
    version: String,
    scheme: ExtractorScheme,
    vocabulary: Vocabulary,
    lexicons: LexiconSet,
    /// Category name to the number of training documents containing at
    /// least one of its words.
    category_df: BTreeMap<String, u32>,
    aux_stats: [AuxStat; 4],
    layout: Vec<Block>,
    dimension: usize,
}

/// Learns the feature space from training documents only.
pub fn fit(
    train_docs: &[TokenStream],
    lexicons: LexiconSet,
    min_df: u32,
) -> Result<FittedExtractor, FeatureError> {
    if train_docs.is_empty() {
        return Err(FeatureError::EmptyCorpus);
    }
    let scheme = ExtractorScheme::default();
    let n_docs = train_docs.len() as u32;

    let mut df: HashMap<String, u32> = HashMap::new();
    for doc in train_docs {
        let unique: HashSet<String> = ngram_terms(doc, scheme.orders).into_iter().collect();
        for term in unique {
            *df.entry(term).or_insert(0) += 1;
        }
    }
    let vocabulary = Vocabulary::from_counts(df, n_docs, min_df)?;

    let mut category_df: BTreeMap<String, u32> = lexicons
        .emotion_categories
        .keys()
        .map(|c| (c.clone(), 0))
        .collect();
    for doc in train_docs {
        let lower: HashSet<String> = doc.lowercased().into_iter().collect();
        for (category, words) in &lexicons.emotion_categories {
            if lower.iter().any(|t| words.contains(t)) {
                *category_df.get_mut(category).expect("category present") += 1;
            }
        }
    }

    let raw: Vec<AuxValues> = train_docs
        .iter()
        .map(|d| aux_values(d, &lexicons))
        .collect();
    let aux_stats = std::array::from_fn(|k| {
        let column: Vec<f64> = raw.iter().map(|r| r[k]).collect();
        AuxStat::from_values(&column)
    });

    FittedExtractor::from_parts(vocabulary, lexicons, category_df, aux_stats)
}

/// Politeness score in (0, 1): the logistic function of the summed weights
/// of politeness cue phrases, matched case-insensitively, longest phrase
/// first and without overlap.
pub fn politeness_score(doc: &TokenStream, lexicons: &LexiconSet) -> f64 {
    let lower = doc.lowercased();
    let longest = lexicons.longest_politeness_phrase();
    let mut total = 0.0;
    let mut i = 0;
    while i < lower.len() {
        let max = longest.min(lower.len() - i);
        let hit = (1..=max).rev().find_map(|len| {
            let phrase = lower[i..i + len].join(" ");
            lexicons.politeness.get(&phrase).map(|&w| (len, w))
        });
        match hit {
            Some((len, weight)) => {
                total += weight;
                i += len;
            }
            None => i += 1,
        }
    }
    1.0 / (1.0 + (-total).exp())
}

/// Dual sentiment strength on the 1..5 / -5..-1 scale. A booster right
/// before a sentiment word adds its value to the magnitude; a negation among
/// the two preceding tokens flips the sign.
pub fn sentiment_scores(doc: &TokenStream, lexicons: &LexiconSet) -> (i8, i8) {
    let lower = doc.lowercased();
    let mut pos = 1i8;
    let mut neg = -1i8;
    for (i, token) in lower.iter().enumerate() {
        let Some(&strength) = lexicons.sentiment.get(token) else {
            continue;
        };
        let mut magnitude = strength.abs();
        if i > 0 {
            if let Some(&boost) = lexicons.boosters.get(&lower[i - 1]) {
                magnitude += boost;
            }
        }
        if magnitude <= 0 {
            continue;
        }
        let mut sign = strength.signum();
        if lower[i.saturating_sub(2)..i]
            .iter()
            .any(|t| lexicons.negations.contains(t))
        {
            sign = -sign;
        }
        let adjusted = sign * magnitude.min(5);
        if adjusted > 0 {
            pos = pos.max(adjusted);
        } else {
            neg = neg.min(adjusted);
        }
    }
    (pos.clamp(1, 5), neg.clamp(-5, -1))
}

/// Mean modality weight of the cue words present, or 1.0 (certain) when
/// there is none.
pub fn uncertainty_score(doc: &TokenStream, lexicons: &LexiconSet) -> f64 {
    let weights: Vec<f64> = doc
        .lowercased()
        .iter()
        .filter_map(|t| lexicons.modality.get(t).copied())
        .collect();
    if weights.is_empty() {
        1.0
    } else {
        weights.iter().sum::<f64>() / weights.len() as f64
    }
}

pub fn aux_values(doc: &TokenStream, lexicons: &LexiconSet) -> AuxValues {
    let (pos, neg) = sentiment_scores(doc, lexicons);
    [
        politeness_score(doc, lexicons),
        pos as f64,
        neg as f64,
        uncertainty_score(doc, lexicons),
    ]
}

fn normalized_block(dimension: usize, mut counts: BTreeMap<usize, f64>) -> SparseVector {
    counts.retain(|_, v| *v != 0.0);
    SparseVector::new(dimension, counts.into_iter().collect())
        .expect("BTreeMap keys are sorted and in range")
        .l2_normalized()
}

impl FittedExtractor {
    pub fn from_parts(
        vocabulary: Vocabulary,
        lexicons: LexiconSet,
        category_df: BTreeMap<String, u32>,
        aux_stats: [AuxStat; 4],
    ) -> Result<Self, FeatureError> {
        let n_categories = lexicons.emotion_categories.len();
        let sizes = [
            (BlockKind::Ngrams, vocabulary.len()),
            (BlockKind::EmotionCategories, n_categories),
            (BlockKind::Politeness, 1),
            (BlockKind::PositiveSentiment, 1),
            (BlockKind::NegativeSentiment, 1),
            (BlockKind::Uncertainty, 1),
        ];
        let mut offset = 0;
        let layout = sizes
            .iter()
            .map(|&(kind, len)| {
                let block = Block { kind, offset, len };
                offset += len;
                block
            })
            .collect();
        let extractor = FittedExtractor {
            version: EXTRACTOR_VERSION.to_string(),
            scheme: ExtractorScheme::default(),
            vocabulary,
            lexicons,
            category_df,
            aux_stats,
            layout,
            dimension: offset,
        };
        extractor.validate()?;
        Ok(extractor)
    }

    /// Checks the internal consistency of a (possibly deserialized)
    /// extractor.
    pub fn validate(&self) -> Result<(), FeatureError> {
        let bad = |msg: String| Err(FeatureError::IncompatibleModel(msg));
        if self.version != EXTRACTOR_VERSION {
            return bad(format!("unsupported extractor version {:?}", self.version));
        }
        self.vocabulary.check()?;
        let expected = [
            (BlockKind::Ngrams, self.vocabulary.len()),
            (
                BlockKind::EmotionCategories,
                self.lexicons.emotion_categories.len(),
            ),
            (BlockKind::Politeness, 1),
            (BlockKind::PositiveSentiment, 1),
            (BlockKind::NegativeSentiment, 1),
            (BlockKind::Uncertainty, 1),
        ];
        if self.layout.len() != expected.len() {
            return bad("layout must have six blocks".into());
        }
        let mut offset = 0;
        for (block, &(kind, len)) in self.layout.iter().zip(&expected) {
            if block.kind != kind || block.len != len || block.offset != offset {
                return bad(format!(
                    "layout block {:?} does not match the feature space",
                    block.kind
                ));
            }
            offset += len;
        }
        if offset != self.dimension {
            return bad(format!(
                "layout spans {offset} features but dimension is {}",
                self.dimension
            ));
        }
        if self.category_df.len() != self.lexicons.emotion_categories.len()
            || !self
                .category_df
                .keys()
                .all(|c| self.lexicons.emotion_categories.contains_key(c))
        {
            return bad("category document frequencies do not match the emotion lexicon".into());
        }
        if self
            .category_df
            .values()
            .any(|&df| df > self.vocabulary.n_docs())
        {
            return bad("category df exceeds the number of training documents".into());
        }
        if self
            .aux_stats
            .iter()
            .any(|s| !s.mean.is_finite() || !s.stddev.is_finite() || s.stddev < 0.0)
        {
            return bad("auxiliary statistics must be finite with stddev >= 0".into());
        }
        Ok(())
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn scheme(&self) -> &ExtractorScheme {
        &self.scheme
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn lexicons(&self) -> &LexiconSet {
        &self.lexicons
    }

    pub fn category_df(&self) -> &BTreeMap<String, u32> {
        &self.category_df
    }

    pub fn aux_stats(&self) -> &[AuxStat; 4] {
        &self.aux_stats
    }

    pub fn layout(&self) -> &[Block] {
        &self.layout
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Name of the feature at `index`, for inspecting model weights.
    pub fn feature_name(&self, index: usize) -> Option<String> {
        let block = self
            .layout
            .iter()
            .find(|b| index >= b.offset && index < b.offset + b.len)?;
        let local = index - block.offset;
        Some(match block.kind {
            BlockKind::Ngrams => format!("ngram:{}", self.vocabulary.term(local)),
            BlockKind::EmotionCategories => format!(
                "category:{}",
                self.category_df.keys().nth(local).expect("category index")
            ),
            BlockKind::Politeness => "politeness".into(),
            BlockKind::PositiveSentiment => "sentiment_pos".into(),
            BlockKind::NegativeSentiment => "sentiment_neg".into(),
            BlockKind::Uncertainty => "uncertainty".into(),
        })
    }

    /// tf-idf over in-vocabulary n-grams, L2-normalized. Indices are local to
    /// the block.
    pub fn ngram_block(&self, doc: &TokenStream) -> SparseVector {
        let vocab = &self.vocabulary;
        let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
        for term in ngram_terms(doc, self.scheme.orders) {
            if let Some(i) = vocab.index_of(&term) {
                *counts.entry(i).or_insert(0.0) += 1.0;
            }
        }
        for (&i, value) in counts.iter_mut() {
            *value *= smoothed_idf(vocab.df[i], vocab.n_docs);
        }
        normalized_block(vocab.len(), counts)
    }

    /// tf-idf over emotion categories, L2-normalized. Categories that never
    /// occurred in training carry no weight and are left out.
    pub fn emotion_category_block(&self, doc: &TokenStream) -> SparseVector {
        let lower = doc.lowercased();
        let n_docs = self.vocabulary.n_docs();
        let mut values = BTreeMap::new();
        for (i, (category, &df)) in self.category_df.iter().enumerate() {
            if df == 0 {
                continue;
            }
            let words = &self.lexicons.emotion_categories[category];
            let tf = lower.iter().filter(|t| words.contains(*t)).count();
            if tf > 0 {
                values.insert(i, tf as f64 * smoothed_idf(df, n_docs));
            }
        }
        normalized_block(self.category_df.len(), values)
    }

    pub fn aux_values(&self, doc: &TokenStream) -> AuxValues {
        aux_values(doc, &self.lexicons)
    }

    /// The full feature vector for one document.
    pub fn assemble(&self, doc: &TokenStream) -> SparseVector {
        let raw = self.aux_values(doc);
        let aux: Vec<f64> = raw
            .iter()
            .zip(&self.aux_stats)
            .map(|(&v, stat)| stat.standardize(v))
            .collect();
        let vector = self
            .ngram_block(doc)
            .concat(&self.emotion_category_block(doc))
            .concat(&SparseVector::from_dense(&aux));
        debug_assert_eq!(vector.dimension(), self.dimension);
        vector
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("extractor serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, FeatureError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| FeatureError::Parse(e.to_string()))?;
        Self::from_json_value(value)
    }

    pub fn from_json_value(value: serde_json::Value) -> Result<Self, FeatureError> {
        match value.get("version").and_then(|v| v.as_str()) {
            Some(EXTRACTOR_VERSION) => {}
            Some(other) => {
                return Err(FeatureError::IncompatibleModel(format!(
                    "unsupported extractor version {other:?}"
                )))
            }
            None => return Err(FeatureError::Parse("missing version field".into())),
        }
        let extractor: FittedExtractor =
            serde_json::from_value(value).map_err(|e| FeatureError::Parse(e.to_string()))?;
        extractor.validate()?;
        Ok(extractor)
    }
}

pub fn save_extractor(extractor: &FittedExtractor, path: &Path) -> Result<(), FeatureError> {
    fs::write(path, extractor.to_json()).map_err(|source| FeatureError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_extractor(path: &Path) -> Result<FittedExtractor, FeatureError> {
    let text = fs::read_to_string(path).map_err(|source| FeatureError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    FittedExtractor::from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stream(tokens: &[&str]) -> TokenStream {
        TokenStream::from_tokens(tokens.iter().copied())
    }

    fn lexicons_with(categories: &[(&str, &[&str])]) -> LexiconSet {
        LexiconSet {
            emotion_categories: categories
                .iter()
                .map(|(c, ws)| (c.to_string(), ws.iter().map(|w| w.to_string()).collect()))
                .collect(),
            ..LexiconSet::default()
        }
    }

    const FLAT: [AuxStat; 4] = [AuxStat {
        mean: 0.0,
        stddev: 0.0,
    }; 4];

    #[test]
    fn fit_counts_document_frequency() {
        let docs = [stream(&["a", "b"]), stream(&["a"])];
        let fitted = fit(&docs, LexiconSet::default(), 1).unwrap();
        let vocab = fitted.vocabulary();
        assert_eq!(vocab.len(), 3);
        assert_eq!(vocab.df("a"), Some(2));
        assert_eq!(vocab.df("b"), Some(1));
        assert_eq!(vocab.df("a b"), Some(1));
        assert_eq!(vocab.n_docs(), 2);

        let fitted = fit(&docs, LexiconSet::default(), 2).unwrap();
        assert_eq!(fitted.vocabulary().len(), 1);
        assert_eq!(fitted.vocabulary().df("a"), Some(2));
    }

    #[test]
    fn fit_counts_term_once_per_document() {
        let docs = [stream(&["a", "a", "a"]), stream(&["b"])];
        let fitted = fit(&docs, LexiconSet::default(), 1).unwrap();
        assert_eq!(fitted.vocabulary().df("a"), Some(1));
    }

    #[test]
    fn fit_category_df_and_empty_corpus() {
        let docs = [stream(&["glad"]), stream(&["sad"])];
        let fitted = fit(&docs, lexicons_with(&[("joy", &["glad"])]), 1).unwrap();
        assert_eq!(fitted.category_df()["joy"], 1);
        assert!(matches!(
            fit(&[], LexiconSet::default(), 1),
            Err(FeatureError::EmptyCorpus)
        ));
    }

    #[test]
    fn idf_values() {
        assert_eq!(idf(3, 3).unwrap(), 1.0);
        assert!((idf(1, 3).unwrap() - 1.693_147_180_559_945).abs() < 1e-12);
        assert!((idf(2, 4).unwrap() - 1.510_825_623_765_990_7).abs() < 1e-12);
        assert!(matches!(idf(0, 3), Err(FeatureError::ContractViolation(_))));
        assert!(idf(4, 3).is_err());
    }

    #[test]
    fn ngram_block_examples() {
        let vocab = Vocabulary::from_counts([("a", 1)], 2, 1).unwrap();
        let fitted =
            FittedExtractor::from_parts(vocab, LexiconSet::default(), BTreeMap::new(), FLAT)
                .unwrap();
        assert!(fitted.ngram_block(&stream(&["zzz"])).is_zero());
        let block = fitted.ngram_block(&stream(&["a", "a"]));
        assert_eq!(block.entries(), &[(0, 1.0)]);

        let vocab = Vocabulary::from_counts([("a", 2), ("b", 1)], 2, 1).unwrap();
        let fitted =
            FittedExtractor::from_parts(vocab, LexiconSet::default(), BTreeMap::new(), FLAT)
                .unwrap();
        let block = fitted.ngram_block(&stream(&["a", "b"]));
        assert!((block.get(0) - 0.5797).abs() < 1e-4);
        assert!((block.get(1) - 0.8148).abs() < 1e-4);
    }

    #[test]
    fn category_block_examples() {
        let lex = lexicons_with(&[("joy", &["glad"]), ("love", &["dear"])]);
        let vocab = Vocabulary::from_counts(Vec::<(String, u32)>::new(), 2, 1).unwrap();
        let dfs = BTreeMap::from([("joy".to_string(), 1), ("love".to_string(), 1)]);
        let fitted = FittedExtractor::from_parts(vocab, lex, dfs, FLAT).unwrap();

        let block = fitted.emotion_category_block(&stream(&["Glad", "glad"]));
        assert_eq!(block.entries(), &[(0, 1.0)]);
        assert!(fitted.emotion_category_block(&stream(&["meh"])).is_zero());
        let block = fitted.emotion_category_block(&stream(&["glad", "dear"]));
        let half = std::f64::consts::FRAC_1_SQRT_2;
        assert!((block.get(0) - half).abs() < 1e-12);
        assert!((block.get(1) - half).abs() < 1e-12);
    }

    #[test]
    fn politeness_examples() {
        let mut lex = LexiconSet::default();
        assert_eq!(politeness_score(&stream(&[]), &lex), 0.5);
        lex.politeness.insert("please".into(), 1.0);
        lex.politeness.insert("thank you".into(), 1.0);
        lex.politeness.insert("thank".into(), 5.0);
        lex.politeness.insert("shut up".into(), -1.0);
        assert!(
            (politeness_score(&stream(&["Please"]), &lex) - 0.731_058_578_630_004_9).abs() < 1e-12
        );
        // longest match wins over the single-word cue
        assert!(
            (politeness_score(&stream(&["thank", "you"]), &lex) - 0.731_058_578_630_004_9).abs()
                < 1e-12
        );
        assert_eq!(
            politeness_score(&stream(&["please", "shut", "up"]), &lex),
            0.5
        );
    }

    #[test]
    fn sentiment_examples() {
        let mut lex = LexiconSet::default();
        lex.sentiment.insert("love".into(), 3);
        lex.sentiment.insert("good".into(), 2);
        lex.sentiment.insert("bad".into(), -4);
        lex.boosters.insert("very".into(), 1);
        lex.boosters.insert("slightly".into(), -1);
        lex.negations.insert("not".into());
        assert_eq!(sentiment_scores(&stream(&[]), &lex), (1, -1));
        assert_eq!(sentiment_scores(&stream(&["love"]), &lex), (3, -1));
        assert_eq!(sentiment_scores(&stream(&["not", "good"]), &lex), (1, -2));
        assert_eq!(
            sentiment_scores(&stream(&["not", "very", "good"]), &lex),
            (1, -3)
        );
        assert_eq!(sentiment_scores(&stream(&["very", "bad"]), &lex), (1, -5));
        assert_eq!(
            sentiment_scores(&stream(&["not", "that", "this", "good"]), &lex),
            (2, -1)
        );
        assert_eq!(sentiment_scores(&stream(&["LOVE", "bad"]), &lex), (3, -4));
    }

    #[test]
    fn uncertainty_examples() {
        let mut lex = LexiconSet::default();
        assert_eq!(uncertainty_score(&stream(&["hello"]), &lex), 1.0);
        lex.modality.insert("maybe".into(), 0.0);
        lex.modality.insert("certainly".into(), 1.0);
        assert_eq!(uncertainty_score(&stream(&["maybe"]), &lex), 0.0);
        assert_eq!(
            uncertainty_score(&stream(&["maybe", "certainly"]), &lex),
            0.5
        );
    }

    #[test]
    fn assemble_empty_doc_uses_standardized_defaults() {
        let docs = [
            stream(&["please", "help"]),
            stream(&["good", "stuff"]),
            stream(&["maybe"]),
        ];
        let fitted = fit(&docs, LexiconSet::builtin(), 1).unwrap();
        let v = fitted.assemble(&stream(&[]));
        let aux_offset = fitted.layout()[2].offset;
        let defaults = [0.5, 1.0, -1.0, 1.0];
        let expected: Vec<(usize, f64)> = defaults
            .iter()
            .zip(fitted.aux_stats())
            .enumerate()
            .map(|(k, (&v, s))| {
                (
                    aux_offset + k,
                    if s.stddev > 0.0 {
                        (v - s.mean) / s.stddev
                    } else {
                        0.0
                    },
                )
            })
            .filter(|&(_, v)| v != 0.0)
            .collect();
        assert_eq!(v.entries(), expected.as_slice());
        assert!(v.iter().all(|(i, _)| i >= aux_offset));
    }

    #[test]
    fn assemble_layout_and_determinism() {
        let docs = [
            stream(&["i", "love", "it"]),
            stream(&["not", "glad", "at", "all"]),
        ];
        let fitted = fit(&docs, LexiconSet::builtin(), 1).unwrap();
        let probe = stream(&["love", "glad", "please"]);
        let v = fitted.assemble(&probe);
        assert_eq!(v.dimension(), fitted.dimension());
        assert_eq!(v, fitted.assemble(&probe));
        assert!(v.entries().windows(2).all(|w| w[0].0 < w[1].0));
        assert_eq!(
            fitted.layout().iter().map(|b| b.len).sum::<usize>(),
            fitted.dimension()
        );
    }

    #[test]
    fn zero_stddev_feature_is_dropped() {
        let stat = AuxStat {
            mean: 3.0,
            stddev: 0.0,
        };
        assert_eq!(stat.standardize(7.0), 0.0);
    }

    #[test]
    fn persistence_round_trip_and_errors() {
        let docs = [stream(&["great", "answer"]), stream(&["thanks", "great"])];
        let fitted = fit(&docs, LexiconSet::builtin(), 1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("extractor.json");
        save_extractor(&fitted, &path).unwrap();
        let loaded = load_extractor(&path).unwrap();
        assert_eq!(loaded, fitted);
        let probe = stream(&["great", "thanks", "please"]);
        assert_eq!(loaded.assemble(&probe), fitted.assemble(&probe));

        let json = fitted
            .to_json()
            .replace(EXTRACTOR_VERSION, "emotag-extractor/99");
        assert!(matches!(
            FittedExtractor::from_json(&json),
            Err(FeatureError::IncompatibleModel(_))
        ));
        let json = fitted.to_json();
        assert!(matches!(
            FittedExtractor::from_json(&json[..json.len() / 2]),
            Err(FeatureError::Parse(_))
        ));
    }

    #[test]
    fn tampered_dimension_is_rejected() {
        let docs = [stream(&["a", "b"])];
        let fitted = fit(&docs, LexiconSet::default(), 1).unwrap();
        let mut value = serde_json::to_value(&fitted).unwrap();
        value["dimension"] = serde_json::json!(fitted.dimension() + 1);
        assert!(matches!(
            FittedExtractor::from_json_value(value),
            Err(FeatureError::IncompatibleModel(_))
        ));
    }

    #[test]
    fn feature_names() {
        let docs = [stream(&["a"])];
        let lex = lexicons_with(&[("joy", &["glad"])]);
        let fitted = fit(&docs, lex, 1).unwrap();
        assert_eq!(fitted.feature_name(0).unwrap(), "ngram:a");
        assert_eq!(fitted.feature_name(1).unwrap(), "category:joy");
        assert_eq!(fitted.feature_name(5).unwrap(), "uncertainty");
        assert!(fitted.feature_name(6).is_none());
    }
}
