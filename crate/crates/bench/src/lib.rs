//! Fixtures shared by the benchmarks.

use emotag_core::features::{self, FittedExtractor};
use emotag_core::pipeline::preprocess;
use emotag_core::testkit::{planted_corpus, PlantedCorpusConfig};
use emotag_core::{
    EmotionLabel, LabeledDocument, LexiconSet, RuleTokenizer, SparseVector, TokenStream,
};

pub struct Fixture {
    pub docs: Vec<LabeledDocument>,
    pub emotion: EmotionLabel,
    pub streams: Vec<TokenStream>,
    pub extractor: FittedExtractor,
    pub rows: Vec<SparseVector>,
    pub labels: Vec<f64>,
}

/// A planted-signal corpus of `n_docs` documents with every stage up to the
/// feature vectors already computed.
pub fn fixture(n_docs: usize) -> Fixture {
    let (docs, emotions) = planted_corpus(&PlantedCorpusConfig {
        n_docs,
        ..PlantedCorpusConfig::default()
    });
    let emotion = emotions[0].clone();
    let tokenizer = RuleTokenizer::default();
    let streams: Vec<TokenStream> = docs
        .iter()
        .map(|d| preprocess(&tokenizer, &d.doc.text))
        .collect();
    let extractor =
        features::fit(&streams, LexiconSet::builtin(), 2).expect("fixture corpus is not empty");
    let rows = streams.iter().map(|s| extractor.assemble(s)).collect();
    let labels = docs
        .iter()
        .map(|d| {
            if d.label(&emotion) == Some(true) {
                1.0
            } else {
                -1.0
            }
        })
        .collect();
    Fixture {
        docs,
        emotion,
        streams,
        extractor,
        rows,
        labels,
    }
}

/// Markup-heavy text resembling a developer forum post.
pub const FORUM_POST: &str = "Thanks a lot, this <b>really</b> helped :) I was stuck for hours!\n\
    ```\nlet x = vec![1, 2, 3];\n```\n\
    See https://example.com/docs?page=2 and <code>cargo build</code>, it's great:D but I'm not sure why.";
