use std::collections::BTreeMap;

use emotag_core::corpus::{self, parse_gold_corpus, write_gold_corpus};
use emotag_core::features::{self, idf};
use emotag_core::textprep::{ngram_terms, strip_noise, NgramOrders};
use emotag_core::{Document, EmotionLabel, LabeledDocument, LexiconSet, RuleTokenizer, Tokenizer};
use proptest::prelude::*;

fn joy() -> EmotionLabel {
    EmotionLabel::new("joy").unwrap()
}

fn corpus_from_bits(bits: &[bool]) -> Vec<LabeledDocument> {
    bits.iter()
        .enumerate()
        .map(|(i, &b)| LabeledDocument {
            doc: Document::new(format!("{i}"), format!("text {i}")),
            labels: BTreeMap::from([(joy(), b)]),
        })
        .collect()
}

fn text_strategy() -> impl Strategy<Value = String> {
    let piece = prop_oneof![
        "[a-zA-Z]{1,8}",
        "[0-9]{1,4}",
        Just(":)".to_string()),
        Just(":-(".to_string()),
        Just("<b>".to_string()),
        Just("</b>".to_string()),
        Just("http://x.io/a".to_string()),
        Just("don't".to_string()),
        Just("!!".to_string()),
        Just("...".to_string()),
        Just("`".to_string()),
        Just("\n    ".to_string()),
        Just("<!--".to_string()),
        Just("-->".to_string()),
        "[ -~]{1,3}",
    ];
    prop::collection::vec(piece, 0..20).prop_map(|parts| parts.join(" "))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn split_sizes_and_strata(bits in prop::collection::vec(any::<bool>(), 4..200), seed in any::<u64>()) {
        prop_assume!(bits.contains(&true) && bits.contains(&false));
        let docs = corpus_from_bits(&bits);
        let split = corpus::stratified_split(&docs, &joy(), 0.7, seed).unwrap();
        let n = docs.len();
        prop_assert_eq!(split.train.len() + split.test.len(), n);
        let expected = (0.7 * n as f64 + 0.5 + 1e-9).floor() as usize;
        prop_assert_eq!(split.train.len(), expected);
        let pos = bits.iter().filter(|&&b| b).count() as f64;
        let train_pos = split.train.iter().filter(|d| d.label(&joy()) == Some(true)).count() as f64;
        prop_assert!((train_pos - 0.7 * pos).abs() <= 1.0 + 1e-9);

        let again = corpus::stratified_split(&docs, &joy(), 0.7, seed).unwrap();
        let ids = |v: &[LabeledDocument]| v.iter().map(|d| d.doc.id.clone()).collect::<Vec<_>>();
        prop_assert_eq!(ids(&split.train), ids(&again.train));
        // corpus order preserved
        let numeric: Vec<usize> = split.train.iter().map(|d| d.doc.id.parse().unwrap()).collect();
        prop_assert!(numeric.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn gold_corpus_round_trip(texts in prop::collection::vec("[ -~\n]{0,30}", 1..20), seed in any::<u64>()) {
        let mut rng_bit = seed;
        let docs: Vec<LabeledDocument> = texts
            .iter()
            .enumerate()
            .map(|(i, t)| {
                rng_bit = rng_bit.rotate_left(7) ^ 0x9e37_79b9;
                LabeledDocument {
                    doc: Document::new(format!("id{i}"), t.clone()),
                    labels: BTreeMap::from([(joy(), rng_bit & 1 == 1)]),
                }
            })
            .collect();
        let mut buf = Vec::new();
        write_gold_corpus(&mut buf, &docs, &[joy()]).unwrap();
        let (back, emotions) = parse_gold_corpus(buf.as_slice()).unwrap();
        prop_assert_eq!(emotions, vec![joy()]);
        prop_assert_eq!(back, docs);
    }

    #[test]
    fn strip_noise_is_idempotent(text in text_strategy()) {
        let once = strip_noise(&text);
        prop_assert_eq!(strip_noise(&once), once);
    }

    #[test]
    fn tokens_have_no_whitespace_and_are_nonempty(text in text_strategy()) {
        let stream = RuleTokenizer::default().tokenize(&strip_noise(&text));
        for token in stream.tokens() {
            prop_assert!(!token.is_empty());
            prop_assert!(!token.chars().any(char::is_whitespace));
        }
    }

    #[test]
    fn ngram_counts(text in text_strategy()) {
        let stream = RuleTokenizer::default().tokenize(&text);
        let terms = ngram_terms(&stream, NgramOrders::default());
        let unigrams = (0..stream.len()).filter(|&i| stream.is_term(i)).count();
        let bigrams = (1..stream.len()).filter(|&i| stream.is_term(i - 1) && stream.is_term(i)).count();
        prop_assert_eq!(terms.len(), unigrams + bigrams);
        for term in &terms {
            prop_assert_eq!(term.to_lowercase(), term.clone());
        }
    }

    #[test]
    fn ngram_block_is_unit_or_zero(texts in prop::collection::vec(text_strategy(), 2..12), probe in text_strategy()) {
        let tok = RuleTokenizer::default();
        let streams: Vec<_> = texts.iter().map(|t| tok.tokenize(t)).collect();
        let extractor = features::fit(&streams, LexiconSet::builtin(), 1).unwrap();
        let block = extractor.ngram_block(&tok.tokenize(&probe));
        prop_assert!(block.is_zero() || (block.norm() - 1.0).abs() < 1e-12);
        let full = extractor.assemble(&tok.tokenize(&probe));
        prop_assert_eq!(full.dimension(), extractor.dimension());
        prop_assert!(full.iter().all(|(_, v)| v != 0.0 && v.is_finite()));
    }

    #[test]
    fn idf_decreases_with_df(n in 1u32..10_000, a in 0u32..10_000, b in 0u32..10_000) {
        let (lo, hi) = (a.min(b).min(n), a.max(b).min(n));
        prop_assert!(idf(lo, n).unwrap() >= idf(hi, n).unwrap());
        prop_assert!(idf(hi, n).unwrap() >= 1.0);
    }

    #[test]
    fn sentiment_stays_in_range(words in prop::collection::vec(
        prop::sample::select(vec!["good", "great", "love", "bad", "hate", "very", "not", "never", "slightly", "the", ":)", "awful"]),
        0..25,
    )) {
        let stream = emotag_core::TokenStream::from_tokens(words.iter().copied());
        let (pos, neg) = features::sentiment_scores(&stream, &LexiconSet::builtin());
        prop_assert!((1..=5).contains(&pos));
        prop_assert!((-5..=-1).contains(&neg));
    }
}
