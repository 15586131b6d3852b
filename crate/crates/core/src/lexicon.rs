//! Lexicons behind the auxiliary features: emotion word categories,
//! politeness cues, sentiment strengths (with boosters and negations) and
//! modality cues.
//!
//! Every lexicon is a small UTF-8 text file; `#` starts a comment line.
//!
//! | file             | line format            |
//! |------------------|------------------------|
//! | `emotions.tsv`   | `category<TAB>word`    |
//! | `sentiment.tsv`  | `word<TAB>integer`     |
//! | `boosters.tsv`   | `word<TAB>+1 or -1`    |
//! | `negations.txt`  | `word`                 |
//! | `politeness.tsv` | `phrase<TAB>real`      |
//! | `modality.tsv`   | `word<TAB>real`        |
//!
//! A directory may supply any subset of these files; missing ones fall back
//! to the built-in defaults.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

const DEFAULT_EMOTIONS: &str = include_str!("../resources/lexicons/emotions.tsv");
const DEFAULT_SENTIMENT: &str = include_str!("../resources/lexicons/sentiment.tsv");
const DEFAULT_BOOSTERS: &str = include_str!("../resources/lexicons/boosters.tsv");
const DEFAULT_NEGATIONS: &str = include_str!("../resources/lexicons/negations.txt");
const DEFAULT_POLITENESS: &str = include_str!("../resources/lexicons/politeness.tsv");
const DEFAULT_MODALITY: &str = include_str!("../resources/lexicons/modality.tsv");

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("{file}:{line}: {message}")]
    Parse {
        file: String,
        line: usize,
        message: String,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LexiconSet {
    pub emotion_categories: BTreeMap<String, BTreeSet<String>>,
    /// Lowercased phrases, words separated by one space.
    pub politeness: BTreeMap<String, f64>,
    pub sentiment: BTreeMap<String, i8>,
    pub boosters: BTreeMap<String, i8>,
    pub negations: BTreeSet<String>,
    pub modality: BTreeMap<String, f64>,
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(n, l)| (n + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
}

fn split_pair<'a>(
    file: &str,
    line: usize,
    raw: &'a str,
) -> Result<(&'a str, &'a str), LexiconError> {
    raw.split_once('\t')
        .map(|(k, v)| (k.trim(), v.trim()))
        .filter(|(k, v)| !k.is_empty() && !v.is_empty())
        .ok_or_else(|| LexiconError::Parse {
            file: file.to_string(),
            line,
            message: format!("expected two tab-separated fields, found {raw:?}"),
        })
}

fn parse_err(file: &str, line: usize, message: String) -> LexiconError {
    LexiconError::Parse {
        file: file.to_string(),
        line,
        message,
    }
}

fn normalize_phrase(phrase: &str) -> String {
    phrase
        .split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn parse_emotion_categories(
    file: &str,
    text: &str,
) -> Result<BTreeMap<String, BTreeSet<String>>, LexiconError> {
    let mut categories: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for (line, raw) in content_lines(text) {
        let (category, word) = split_pair(file, line, raw)?;
        categories
            .entry(category.to_lowercase())
            .or_default()
            .insert(word.to_lowercase());
    }
    Ok(categories)
}

pub fn parse_sentiment(file: &str, text: &str) -> Result<BTreeMap<String, i8>, LexiconError> {
    let mut map = BTreeMap::new();
    for (line, raw) in content_lines(text) {
        let (word, value) = split_pair(file, line, raw)?;
        let strength: i8 = value
            .parse()
            .map_err(|_| parse_err(file, line, format!("bad strength {value:?}")))?;
        if strength == 0 || !(-5..=5).contains(&strength) {
            return Err(parse_err(
                file,
                line,
                format!("strength {strength} outside [-5,-1] or [1,5]"),
            ));
        }
        map.insert(word.to_lowercase(), strength);
    }
    Ok(map)
}

pub fn parse_boosters(file: &str, text: &str) -> Result<BTreeMap<String, i8>, LexiconError> {
    let mut map = BTreeMap::new();
    for (line, raw) in content_lines(text) {
        let (word, value) = split_pair(file, line, raw)?;
        let boost: i8 = value
            .parse()
            .map_err(|_| parse_err(file, line, format!("bad booster value {value:?}")))?;
        if boost != 1 && boost != -1 {
            return Err(parse_err(
                file,
                line,
                format!("booster must be +1 or -1, found {boost}"),
            ));
        }
        map.insert(word.to_lowercase(), boost);
    }
    Ok(map)
}

pub fn parse_word_list(text: &str) -> BTreeSet<String> {
    content_lines(text)
        .map(|(_, w)| w.trim().to_lowercase())
        .collect()
}

/// Parses `key<TAB>real` lines; `bounded` restricts values to [-1, 1].
pub fn parse_weights(
    file: &str,
    text: &str,
    bounded: bool,
) -> Result<BTreeMap<String, f64>, LexiconError> {
    let mut map = BTreeMap::new();
    for (line, raw) in content_lines(text) {
        let (key, value) = split_pair(file, line, raw)?;
        let weight: f64 = value
            .parse()
            .ok()
            .filter(|w: &f64| w.is_finite())
            .ok_or_else(|| parse_err(file, line, format!("bad weight {value:?}")))?;
        if bounded && !(-1.0..=1.0).contains(&weight) {
            return Err(parse_err(
                file,
                line,
                format!("weight {weight} outside [-1, 1]"),
            ));
        }
        map.insert(normalize_phrase(key), weight);
    }
    Ok(map)
}

impl LexiconSet {
    /// The lexicons shipped with the crate.
    pub fn builtin() -> Self {
        LexiconSet {
            emotion_categories: parse_emotion_categories("emotions.tsv", DEFAULT_EMOTIONS)
                .expect("builtin emotion lexicon"),
            politeness: parse_weights("politeness.tsv", DEFAULT_POLITENESS, false)
                .expect("builtin politeness lexicon"),
            sentiment: parse_sentiment("sentiment.tsv", DEFAULT_SENTIMENT)
                .expect("builtin sentiment lexicon"),
            boosters: parse_boosters("boosters.tsv", DEFAULT_BOOSTERS)
                .expect("builtin booster list"),
            negations: parse_word_list(DEFAULT_NEGATIONS),
            modality: parse_weights("modality.tsv", DEFAULT_MODALITY, true)
                .expect("builtin modality lexicon"),
        }
    }

    /// Loads lexicon files from `dir`, using the built-in lexicon for every
    /// file that is absent.
    pub fn load_dir(dir: &Path) -> Result<Self, LexiconError> {
        let read = |name: &str| -> Result<Option<String>, LexiconError> {
            let path = dir.join(name);
            match fs::read_to_string(&path) {
                Ok(text) => Ok(Some(text)),
                Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
                Err(source) => Err(LexiconError::Io { path, source }),
            }
        };
        if !dir.is_dir() {
            return Err(LexiconError::Io {
                path: dir.to_path_buf(),
                source: io::Error::new(io::ErrorKind::NotFound, "lexicon directory not found"),
            });
        }
        let mut set = LexiconSet::builtin();
        if let Some(text) = read("emotions.tsv")? {
            set.emotion_categories = parse_emotion_categories("emotions.tsv", &text)?;
        }
        if let Some(text) = read("sentiment.tsv")? {
            set.sentiment = parse_sentiment("sentiment.tsv", &text)?;
        }
        if let Some(text) = read("boosters.tsv")? {
            set.boosters = parse_boosters("boosters.tsv", &text)?;
        }
        if let Some(text) = read("negations.txt")? {
            set.negations = parse_word_list(&text);
        }
        if let Some(text) = read("politeness.tsv")? {
            set.politeness = parse_weights("politeness.tsv", &text, false)?;
        }
        if let Some(text) = read("modality.tsv")? {
            set.modality = parse_weights("modality.tsv", &text, true)?;
        }
        Ok(set)
    }

    pub fn category_names(&self) -> Vec<String> {
        self.emotion_categories.keys().cloned().collect()
    }

    /// Longest politeness phrase, in words.
    pub(crate) fn longest_politeness_phrase(&self) -> usize {
        self.politeness
            .keys()
            .map(|p| p.split(' ').count())
            .max()
            .unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_lexicons_load() {
        let set = LexiconSet::builtin();
        assert!(set.emotion_categories.contains_key("joy"));
        assert!(set.emotion_categories["joy"].contains("glad"));
        assert_eq!(set.sentiment["love"], 3);
        assert!(set
            .sentiment
            .values()
            .all(|&s| s != 0 && (-5..=5).contains(&s)));
        assert!(set.negations.contains("not"));
        assert_eq!(set.boosters["very"], 1);
        assert_eq!(set.politeness["thank you"], 1.2);
        assert_eq!(set.modality["maybe"], 0.0);
        assert!(set.longest_politeness_phrase() >= 3);
    }

    #[test]
    fn rejects_bad_lines() {
        assert!(parse_sentiment("s", "good\t0\n").is_err());
        assert!(parse_sentiment("s", "good\t6\n").is_err());
        assert!(parse_sentiment("s", "good 2\n").is_err());
        assert!(parse_boosters("b", "very\t2\n").is_err());
        assert!(parse_weights("m", "maybe\t1.5\n", true).is_err());
        assert!(parse_weights("p", "please\t1.5\n", false).is_ok());
    }

    #[test]
    fn comments_and_blank_lines() {
        let map = parse_weights("p", "# header\n\nThank  You\t1.0\r\n", false).unwrap();
        assert_eq!(map.get("thank you"), Some(&1.0));
    }

    #[test]
    fn load_dir_overrides_one_file() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("sentiment.tsv"), "meh\t-1\n").unwrap();
        let set = LexiconSet::load_dir(dir.path()).unwrap();
        assert_eq!(set.sentiment.len(), 1);
        assert_eq!(set.sentiment["meh"], -1);
        assert_eq!(set.modality, LexiconSet::builtin().modality);
        assert!(LexiconSet::load_dir(&dir.path().join("missing")).is_err());
    }
}
