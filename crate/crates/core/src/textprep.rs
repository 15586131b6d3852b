//! Markup removal, tokenization and n-gram term extraction.
//!
//! No stemming or lemmatization happens anywhere in this module: `loved` and
//! `love` stay distinct terms.

use std::collections::HashSet;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

/// Default emoticon table, one emoticon per line.
pub const DEFAULT_EMOTICONS: &str = include_str!("../resources/emoticons.txt");

static NOISE_PATTERNS: LazyLock<Vec<Regex>> = LazyLock::new(|| {
    [
        // fenced code blocks, unterminated fences run to the end of the text
        r"(?s)```.*?(?:```|\z)",
        r"(?is)<code\b[^>]*>.*?</code\s*>",
        // indented code lines
        r"(?m)^(?: {4}|\t)[^\n]*\S[^\n]*$",
        r"(?s)<!--.*?-->",
        r"</?[A-Za-z][^<>]*>",
        r"\b[A-Za-z][A-Za-z0-9+.\-]*://\S+",
        r"\bwww\.\S+",
    ]
    .iter()
    .map(|p| Regex::new(p).expect("noise pattern"))
    .collect()
});

/// Removes HTML/XML tags, code fragments and URLs, replacing each removed
/// span with a single space. The passes are repeated until nothing matches,
/// so the function is idempotent.
pub fn strip_noise(text: &str) -> String {
    let mut current = text.to_string();
    loop {
        let mut next = current.clone();
        for pattern in NOISE_PATTERNS.iter() {
            if pattern.is_match(&next) {
                next = pattern.replace_all(&next, " ").into_owned();
            }
        }
        if next == current {
            return current;
        }
        current = next;
    }
}

/// Tokens of one document. Surface forms keep their case; [`lowercased`]
/// gives the view used for n-gram terms.
///
/// [`lowercased`]: TokenStream::lowercased
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenStream {
    tokens: Vec<String>,
    emoticon: Vec<bool>,
}

impl TokenStream {
    /// Builds a stream from plain tokens; none of them is flagged as an
    /// emoticon. Empty tokens are dropped and tokens containing whitespace
    /// are split.
    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut stream = TokenStream::default();
        for token in tokens {
            for piece in token.as_ref().split_whitespace() {
                stream.push(piece.to_string(), false);
            }
        }
        stream
    }

    fn push(&mut self, token: String, emoticon: bool) {
        debug_assert!(!token.is_empty() && !token.chars().any(char::is_whitespace));
        self.tokens.push(token);
        self.emoticon.push(emoticon);
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn is_emoticon(&self, i: usize) -> bool {
        self.emoticon[i]
    }

    pub fn lowercased(&self) -> Vec<String> {
        self.tokens.iter().map(|t| t.to_lowercase()).collect()
    }

    /// True when the token at `i` takes part in n-gram terms: it carries a
    /// letter or digit, or it is a recognised emoticon.
    pub fn is_term(&self, i: usize) -> bool {
        self.emoticon[i] || self.tokens[i].chars().any(char::is_alphanumeric)
    }
}

pub trait Tokenizer {
    fn tokenize(&self, text: &str) -> TokenStream;
}

/// Whitespace and punctuation splitter that keeps emoticons, contractions
/// and numbers whole.
#[derive(Debug, Clone)]
pub struct RuleTokenizer {
    emoticons: HashSet<String>,
    longest: usize,
}

impl Default for RuleTokenizer {
    fn default() -> Self {
        RuleTokenizer::from_table(DEFAULT_EMOTICONS)
    }
}

impl RuleTokenizer {
    pub fn new<I, S>(emoticons: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let emoticons: HashSet<String> = emoticons
            .into_iter()
            .map(Into::into)
            .filter(|e: &String| !e.is_empty() && !e.chars().any(char::is_whitespace))
            .collect();
        let longest = emoticons
            .iter()
            .map(|e| e.chars().count())
            .max()
            .unwrap_or(0);
        RuleTokenizer { emoticons, longest }
    }

    /// Parses a plain-text table with one emoticon per line. Blank lines are
    /// ignored.
    pub fn from_table(table: &str) -> Self {
        RuleTokenizer::new(table.lines().map(str::trim).filter(|l| !l.is_empty()))
    }

    /// The table in sorted order, for persistence.
    pub fn emoticons(&self) -> Vec<String> {
        let mut table: Vec<String> = self.emoticons.iter().cloned().collect();
        table.sort();
        table
    }

    /// Splits a run of punctuation characters, pulling out any emoticons it
    /// contains (longest match first).
    fn split_punct_run(&self, run: &[char], out: &mut TokenStream) {
        let mut pending = String::new();
        let mut i = 0;
        while i < run.len() {
            let max = self.longest.min(run.len() - i);
            let found = (2..=max).rev().find(|&len| {
                let candidate: String = run[i..i + len].iter().collect();
                self.emoticons.contains(&candidate)
            });
            match found {
                Some(len) => {
                    if !pending.is_empty() {
                        out.push(std::mem::take(&mut pending), false);
                    }
                    out.push(run[i..i + len].iter().collect(), true);
                    i += len;
                }
                None => {
                    pending.push(run[i]);
                    i += 1;
                }
            }
        }
        if !pending.is_empty() {
            out.push(pending, false);
        }
    }

    fn split_chunk(&self, chunk: &str, out: &mut TokenStream) {
        if self.emoticons.contains(chunk) {
            out.push(chunk.to_string(), true);
            return;
        }
        let chars: Vec<char> = chunk.chars().collect();

        // A word glued to an emoticon that contains letters, e.g. `great:D`.
        for len in (2..=self.longest.min(chars.len().saturating_sub(1))).rev() {
            let split = chars.len() - len;
            let suffix: String = chars[split..].iter().collect();
            if self.emoticons.contains(&suffix)
                && !chars[split].is_alphanumeric()
                && chars[split - 1].is_alphanumeric()
            {
                let head: String = chars[..split].iter().collect();
                self.split_chunk(&head, out);
                out.push(suffix, true);
                return;
            }
        }

        let first = chars.iter().position(|c| c.is_alphanumeric());
        let last = chars.iter().rposition(|c| c.is_alphanumeric());
        let (Some(mut first), Some(last)) = (first, last) else {
            self.split_punct_run(&chars, out);
            return;
        };
        // keep a sign attached to a number
        if first > 0 && matches!(chars[first - 1], '-' | '+') && chars[first].is_ascii_digit() {
            first -= 1;
        }
        if first > 0 {
            self.split_punct_run(&chars[..first], out);
        }
        out.push(chars[first..=last].iter().collect(), false);
        if last + 1 < chars.len() {
            self.split_punct_run(&chars[last + 1..], out);
        }
    }
}

impl Tokenizer for RuleTokenizer {
    fn tokenize(&self, text: &str) -> TokenStream {
        let mut out = TokenStream::default();
        for chunk in text.split_whitespace() {
            self.split_chunk(chunk, &mut out);
        }
        out
    }
}

/// Which n-gram orders to extract.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NgramOrders {
    pub unigrams: bool,
    pub bigrams: bool,
}

impl Default for NgramOrders {
    fn default() -> Self {
        NgramOrders {
            unigrams: true,
            bigrams: true,
        }
    }
}

/// Lowercased n-gram terms, one entry per occurrence: all unigrams in token
/// order followed by all bigrams in token order. Bigrams never bridge a
/// token that is excluded from terms.
pub fn ngram_terms(stream: &TokenStream, orders: NgramOrders) -> Vec<String> {
    let lower = stream.lowercased();
    let mut terms = Vec::new();
    if orders.unigrams {
        terms.extend(
            lower
                .iter()
                .enumerate()
                .filter(|&(i, _)| stream.is_term(i))
                .map(|(_, t)| t.clone()),
        );
    }
    if orders.bigrams {
        for i in 1..lower.len() {
            if stream.is_term(i - 1) && stream.is_term(i) {
                terms.push(format!("{} {}", lower[i - 1], lower[i]));
            }
        }
    }
    terms
}
