//! Corpus files and train/test partitioning.
//!
//! Three CSV layouts are understood, all RFC 4180 / UTF-8 with a comma
//! delimiter:
//!
//! * input corpora: `id,text` (the header row is optional and detected by a
//!   literal `id,text` first record),
//! * gold corpora: `id,text,<emotion1>,...,<emotionK>` with 0/1 label cells,
//! * predictions: `id,label` where the label is `EMOTION` or `NO_EMOTION`.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("duplicate document id {id:?} on line {line}")]
    DuplicateId { id: String, line: u64 },
    #[error("malformed record on line {line}: expected at least an id and a text field")]
    MalformedRecord { line: u64 },
    #[error("bad label on line {line}, column {column}: expected 0 or 1, found {value:?}")]
    BadLabel {
        line: u64,
        column: usize,
        value: String,
    },
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("invalid emotion label {0:?}: must match [a-z][a-z0-9_]*")]
    InvalidEmotion(String),
    #[error("emotion {0} has only one class in this corpus")]
    DegenerateClass(EmotionLabel),
    #[error("train fraction must lie strictly between 0 and 1, got {0}")]
    BadFraction(f64),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, CorpusError>;

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// A lowercase emotion name such as `joy` or `anger`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct EmotionLabel(String);

impl EmotionLabel {
    pub fn new(name: impl Into<String>) -> Result<Self> {
        let name = name.into();
        let mut chars = name.chars();
        let valid = matches!(chars.next(), Some(c) if c.is_ascii_lowercase())
            && chars.all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_');
        if valid {
            Ok(EmotionLabel(name))
        } else {
            Err(CorpusError::InvalidEmotion(name))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for EmotionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl TryFrom<String> for EmotionLabel {
    type Error = CorpusError;

    fn try_from(value: String) -> Result<Self> {
        EmotionLabel::new(value)
    }
}

impl From<EmotionLabel> for String {
    fn from(label: EmotionLabel) -> String {
        label.0
    }
}

impl std::str::FromStr for EmotionLabel {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self> {
        EmotionLabel::new(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: String,
    pub text: String,
}

impl Document {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Document {
            id: id.into(),
            text: text.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledDocument {
    pub doc: Document,
    pub labels: BTreeMap<EmotionLabel, bool>,
}

impl LabeledDocument {
    pub fn label(&self, emotion: &EmotionLabel) -> Option<bool> {
        self.labels.get(emotion).copied()
    }
}

fn reader_builder() -> csv::ReaderBuilder {
    let mut builder = csv::ReaderBuilder::new();
    builder.has_headers(false).flexible(true);
    builder
}

fn writer_builder() -> csv::WriterBuilder {
    let mut builder = csv::WriterBuilder::new();
    builder.terminator(csv::Terminator::Any(b'\n'));
    builder
}

fn record_line(record: &csv::StringRecord) -> u64 {
    record.position().map_or(0, |p| p.line())
}

fn is_blank(record: &csv::StringRecord) -> bool {
    record.len() == 1 && record[0].trim().is_empty()
}

/// Reads an `id,text` corpus. Records with more than two fields are taken
/// to be unquoted text containing commas, and the trailing fields are joined
/// back together.
pub fn read_input_corpus(path: &Path) -> Result<Vec<Document>> {
    let file = File::open(path).map_err(io_err(path))?;
    parse_input_corpus(file)
}

pub fn parse_input_corpus<R: Read>(input: R) -> Result<Vec<Document>> {
    let mut reader = reader_builder().from_reader(input);
    let mut docs = Vec::new();
    let mut seen = HashSet::new();
    for (n, record) in reader.records().enumerate() {
        let record = record?;
        if is_blank(&record) {
            continue;
        }
        let line = record_line(&record);
        if record.len() < 2 {
            return Err(CorpusError::MalformedRecord { line });
        }
        if n == 0 && record.len() == 2 && &record[0] == "id" && &record[1] == "text" {
            continue;
        }
        let id = record[0].to_string();
        if id.is_empty() {
            return Err(CorpusError::MalformedRecord { line });
        }
        if !seen.insert(id.clone()) {
            return Err(CorpusError::DuplicateId { id, line });
        }
        let text = record.iter().skip(1).collect::<Vec<_>>().join(",");
        docs.push(Document { id, text });
    }
    Ok(docs)
}

/// Reads a gold corpus, returning the documents and the emotion columns in
/// header order.
pub fn read_gold_corpus(path: &Path) -> Result<(Vec<LabeledDocument>, Vec<EmotionLabel>)> {
    let file = File::open(path).map_err(io_err(path))?;
    parse_gold_corpus(file)
}

pub fn parse_gold_corpus<R: Read>(input: R) -> Result<(Vec<LabeledDocument>, Vec<EmotionLabel>)> {
    let mut reader = reader_builder().from_reader(input);
    let mut records = reader.records();
    let header = loop {
        match records.next() {
            None => return Err(CorpusError::MalformedHeader("missing header row".into())),
            Some(record) => {
                let record = record?;
                if !is_blank(&record) {
                    break record;
                }
            }
        }
    };
    if header.len() < 3 || &header[0] != "id" || &header[1] != "text" {
        return Err(CorpusError::MalformedHeader(format!(
            "expected `id,text,<emotion>...`, found `{}`",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut emotions = Vec::with_capacity(header.len() - 2);
    for name in header.iter().skip(2) {
        let label = EmotionLabel::new(name.trim().to_lowercase())
            .map_err(|_| CorpusError::MalformedHeader(format!("bad emotion column {name:?}")))?;
        if emotions.contains(&label) {
            return Err(CorpusError::MalformedHeader(format!(
                "emotion column {label} appears twice"
            )));
        }
        emotions.push(label);
    }

    let mut docs = Vec::new();
    let mut seen = HashSet::new();
    for record in records {
        let record = record?;
        if is_blank(&record) {
            continue;
        }
        let line = record_line(&record);
        if record.len() != header.len() || record[0].is_empty() {
            return Err(CorpusError::MalformedRecord { line });
        }
        let id = record[0].to_string();
        if !seen.insert(id.clone()) {
            return Err(CorpusError::DuplicateId { id, line });
        }
        let mut labels = BTreeMap::new();
        for (offset, emotion) in emotions.iter().enumerate() {
            let column = offset + 2;
            let bit = match record[column].trim() {
                "0" => false,
                "1" => true,
                other => {
                    return Err(CorpusError::BadLabel {
                        line,
                        column: column + 1,
                        value: other.to_string(),
                    })
                }
            };
            labels.insert(emotion.clone(), bit);
        }
        docs.push(LabeledDocument {
            doc: Document {
                id,
                text: record[1].to_string(),
            },
            labels,
        });
    }
    Ok((docs, emotions))
}

pub fn write_input_corpus<W: Write>(out: W, docs: &[Document]) -> Result<()> {
    let mut writer = writer_builder().from_writer(out);
    writer.write_record(["id", "text"])?;
    for doc in docs {
        writer.write_record([&doc.id, &doc.text])?;
    }
    writer.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_gold_corpus<W: Write>(
    out: W,
    docs: &[LabeledDocument],
    emotions: &[EmotionLabel],
) -> Result<()> {
    let mut writer = writer_builder().from_writer(out);
    let mut header = vec!["id".to_string(), "text".to_string()];
    header.extend(emotions.iter().map(|e| e.to_string()));
    writer.write_record(&header)?;
    for doc in docs {
        let mut row = vec![doc.doc.id.clone(), doc.doc.text.clone()];
        for emotion in emotions {
            let bit = doc.label(emotion).unwrap_or(false);
            row.push(if bit { "1" } else { "0" }.to_string());
        }
        writer.write_record(&row)?;
    }
    writer.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// One line of prediction output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prediction {
    pub id: String,
    pub emotion: EmotionLabel,
    pub present: bool,
}

impl Prediction {
    pub fn label(&self) -> String {
        let upper = self.emotion.as_str().to_uppercase();
        if self.present {
            upper
        } else {
            format!("NO_{upper}")
        }
    }
}

pub fn write_predictions(path: &Path, rows: &[Prediction]) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    emit_predictions(io::BufWriter::new(file), rows)
}

pub fn emit_predictions<W: Write>(out: W, rows: &[Prediction]) -> Result<()> {
    let mut writer = writer_builder().from_writer(out);
    writer.write_record(["id", "label"])?;
    for row in rows {
        writer.write_record([row.id.as_str(), row.label().as_str()])?;
    }
    writer.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct SplitResult {
    pub train: Vec<LabeledDocument>,
    pub test: Vec<LabeledDocument>,
    pub seed: u64,
    pub train_fraction: f64,
}

/// Round-half-up with a small guard so that products such as `0.7 * 45`
/// (which lands just under 31.5 in binary) still round up.
pub(crate) fn round_half_up(x: f64) -> usize {
    (x + 0.5 + 1e-9).floor().max(0.0) as usize
}

/// Splits indices grouped by stratum into a train set of `round(fraction * n)`
/// items. Each stratum receives `floor(fraction * size)` items and the
/// remaining train slots go to the strata with the largest fractional parts,
/// ties going to the smaller stratum, then to the earlier one. Returns a
/// membership mask over `0..n`.
pub(crate) fn stratified_mask(
    strata: &[Vec<usize>],
    n: usize,
    fraction: f64,
    seed: u64,
) -> Vec<bool> {
    let target = round_half_up(fraction * n as f64);
    let exact: Vec<f64> = strata.iter().map(|s| fraction * s.len() as f64).collect();
    let mut take: Vec<usize> = exact
        .iter()
        .zip(strata)
        .map(|(&x, s)| ((x + 1e-9).floor() as usize).min(s.len()))
        .collect();
    let mut assigned: usize = take.iter().sum();
    let mut order: Vec<usize> = (0..strata.len()).collect();
    // remainders closer than the guard count as equal
    let remainder = |s: usize| exact[s] - take[s] as f64;
    order.sort_by(|&a, &b| {
        let (ra, rb) = (remainder(a), remainder(b));
        let by_remainder = if (ra - rb).abs() <= 1e-9 {
            std::cmp::Ordering::Equal
        } else {
            rb.total_cmp(&ra)
        };
        by_remainder
            .then(strata[a].len().cmp(&strata[b].len()))
            .then(a.cmp(&b))
    });
    for &s in order.iter().cycle().take(order.len() * 2) {
        if assigned >= target {
            break;
        }
        if take[s] < strata[s].len() {
            take[s] += 1;
            assigned += 1;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mask = vec![false; n];
    for (stratum, &count) in strata.iter().zip(&take) {
        let mut members = stratum.clone();
        members.shuffle(&mut rng);
        for &i in &members[..count] {
            mask[i] = true;
        }
    }
    mask
}

fn check_fraction(train_fraction: f64) -> Result<()> {
    if train_fraction > 0.0 && train_fraction < 1.0 {
        Ok(())
    } else {
        Err(CorpusError::BadFraction(train_fraction))
    }
}

fn apply_mask(
    corpus: &[LabeledDocument],
    mask: &[bool],
    seed: u64,
    train_fraction: f64,
) -> SplitResult {
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (doc, &in_train) in corpus.iter().zip(mask) {
        if in_train {
            train.push(doc.clone());
        } else {
            test.push(doc.clone());
        }
    }
    SplitResult {
        train,
        test,
        seed,
        train_fraction,
    }
}

/// Splits `corpus` into train and test partitions stratified on `target`.
/// Both partitions keep the corpus order.
pub fn stratified_split(
    corpus: &[LabeledDocument],
    target: &EmotionLabel,
    train_fraction: f64,
    seed: u64,
) -> Result<SplitResult> {
    check_fraction(train_fraction)?;
    let (mut positives, mut negatives) = (Vec::new(), Vec::new());
    for (i, doc) in corpus.iter().enumerate() {
        match doc.label(target) {
            Some(true) => positives.push(i),
            Some(false) => negatives.push(i),
            None => return Err(CorpusError::DegenerateClass(target.clone())),
        }
    }
    if positives.is_empty() || negatives.is_empty() {
        return Err(CorpusError::DegenerateClass(target.clone()));
    }
    let mask = stratified_mask(&[positives, negatives], corpus.len(), train_fraction, seed);
    Ok(apply_mask(corpus, &mask, seed, train_fraction))
}

/// One split shared by every emotion, stratified on the full label
/// combination of each document.
pub fn shared_split(
    corpus: &[LabeledDocument],
    emotions: &[EmotionLabel],
    train_fraction: f64,
    seed: u64,
) -> Result<SplitResult> {
    check_fraction(train_fraction)?;
    let mut strata: BTreeMap<Vec<bool>, Vec<usize>> = BTreeMap::new();
    for (i, doc) in corpus.iter().enumerate() {
        let key: Vec<bool> = emotions
            .iter()
            .map(|e| doc.label(e).unwrap_or(false))
            .collect();
        strata.entry(key).or_default().push(i);
    }
    let strata: Vec<Vec<usize>> = strata.into_values().collect();
    let mask = stratified_mask(&strata, corpus.len(), train_fraction, seed);
    Ok(apply_mask(corpus, &mask, seed, train_fraction))
}
