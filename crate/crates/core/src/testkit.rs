//! Test support: an independent dual SVM oracle and synthetic corpora.
//!
//! Nothing here is used by the library itself. The oracle builds the dense
//! dual matrix explicitly and runs accelerated projected gradient, so it
//! shares no code path with the coordinate-descent solver.

use std::collections::BTreeMap;

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Document, EmotionLabel, LabeledDocument};
use crate::linsvm::Loss;

/// Dense dual problem `max Σα − ½ αᵀ Q̄ α` over the feasible box.
pub struct DenseDual {
    pub q: Vec<Vec<f64>>,
    pub upper: f64,
}

impl DenseDual {
    /// Builds Q̄ from raw rows; a bias feature of 1 is appended to each row.
    pub fn new(rows: &[Vec<f64>], y: &[f64], cost: f64, loss: Loss) -> Self {
        let aug: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| r.iter().copied().chain(std::iter::once(1.0)).collect())
            .collect();
        let n = rows.len();
        let mut q = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                let dot: f64 = aug[i].iter().zip(&aug[j]).map(|(a, b)| a * b).sum();
                q[i][j] = y[i] * y[j] * dot;
            }
            if loss == Loss::L2Hinge {
                q[i][i] += 1.0 / (2.0 * cost);
            }
        }
        let upper = match loss {
            Loss::L1Hinge => cost,
            Loss::L2Hinge => f64::INFINITY,
        };
        DenseDual { q, upper }
    }

    pub fn objective(&self, alpha: &[f64]) -> f64 {
        let n = alpha.len();
        let mut quad = 0.0;
        for i in 0..n {
            for j in 0..n {
                quad += alpha[i] * self.q[i][j] * alpha[j];
            }
        }
        alpha.iter().sum::<f64>() - 0.5 * quad
    }

    fn gradient(&self, alpha: &[f64]) -> Vec<f64> {
        // gradient of the minimization form ½αᵀQ̄α − Σα
        self.q
            .iter()
            .map(|row| row.iter().zip(alpha).map(|(q, a)| q * a).sum::<f64>() - 1.0)
            .collect()
    }

    /// Accelerated projected gradient with adaptive restart, run until the
    /// objective stops improving. Returns the final α and dual objective.
    pub fn solve(&self, max_iters: usize) -> (Vec<f64>, f64) {
        let n = self.q.len();
        // Gershgorin bound on the largest eigenvalue
        let lipschitz = self
            .q
            .iter()
            .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
            .max(1e-12);
        let step = 1.0 / lipschitz;
        let project = |v: f64| v.clamp(0.0, self.upper);

        let mut x = vec![0.0; n];
        let mut z = x.clone();
        let mut t = 1.0f64;
        let mut best = self.objective(&x);
        let mut stalled = 0;
        for _ in 0..max_iters {
            let g = self.gradient(&z);
            let next: Vec<f64> = z
                .iter()
                .zip(&g)
                .map(|(zi, gi)| project(zi - step * gi))
                .collect();
            let value = self.objective(&next);
            let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
            if value < self.objective(&x) {
                // restart momentum
                t = 1.0;
                z = x.clone();
                continue;
            }
            let beta = (t - 1.0) / t_next;
            z = next
                .iter()
                .zip(&x)
                .map(|(a, b)| project(a + beta * (a - b)))
                .collect();
            x = next;
            t = t_next;
            if value - best <= 1e-15 * best.abs().max(1.0) {
                stalled += 1;
                if stalled >= 200 {
                    break;
                }
            } else {
                stalled = 0;
            }
            best = best.max(value);
        }
        let value = self.objective(&x);
        (x, value)
    }
}

/// Random dense classification problem with both classes present.
pub fn random_problem(rng: &mut impl Rng, n: usize, d: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    loop {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let y: Vec<f64> = (0..n)
            .map(|_| if rng.gen_bool(0.5) { 1.0 } else { -1.0 })
            .collect();
        if y.contains(&1.0) && y.contains(&-1.0) {
            return (rows, y);
        }
    }
}

/// Filler vocabulary: pronounceable pseudo-words that appear in no lexicon.
pub fn filler_words(count: usize) -> Vec<String> {
    const ONSETS: [&str; 12] = ["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "t", "v"];
    const VOWELS: [&str; 5] = ["a", "e", "i", "o", "u"];
    const CODAS: [&str; 6] = ["x", "z", "q", "sk", "rn", "lt"];
    let mut words = Vec::with_capacity(count);
    'outer: for o1 in ONSETS {
        for v1 in VOWELS {
            for o2 in ONSETS {
                for v2 in VOWELS {
                    for c in CODAS {
                        if words.len() == count {
                            break 'outer;
                        }
                        words.push(format!("{o1}{v1}{o2}{v2}{c}"));
                    }
                }
            }
        }
    }
    words
}

/// Description of one synthetic emotion: the keywords whose presence implies
/// the emotion and how often it occurs.
#[derive(Debug, Clone)]
pub struct PlantedEmotion {
    pub name: String,
    pub keywords: Vec<String>,
    pub positive_rate: f64,
}

impl PlantedEmotion {
    pub fn new(name: &str, keywords: &[&str], positive_rate: f64) -> Self {
        PlantedEmotion {
            name: name.to_string(),
            keywords: keywords.iter().map(|k| k.to_string()).collect(),
            positive_rate,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlantedCorpusConfig {
    pub n_docs: usize,
    pub emotions: Vec<PlantedEmotion>,
    /// Probability of flipping each gold label after generation.
    pub label_noise: f64,
    pub filler_vocabulary: usize,
    /// Exponent of the Zipf law filler words are drawn from; 0 is uniform.
    pub zipf_exponent: f64,
    pub min_len: usize,
    pub max_len: usize,
    pub seed: u64,
}

impl Default for PlantedCorpusConfig {
    fn default() -> Self {
        PlantedCorpusConfig {
            n_docs: 1200,
            emotions: vec![PlantedEmotion::new(
                "joy",
                &["sparklo", "zestiva", "glimmora", "brightex", "sunnova"],
                0.5,
            )],
            label_noise: 0.05,
            filler_vocabulary: 1000,
            zipf_exponent: 1.0,
            min_len: 4,
            max_len: 12,
            seed: 7,
        }
    }
}

/// Generates a gold corpus where an emotion is present exactly when one of
/// its keywords is planted, before label noise.
pub fn planted_corpus(config: &PlantedCorpusConfig) -> (Vec<LabeledDocument>, Vec<EmotionLabel>) {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let filler = filler_words(config.filler_vocabulary);
    let ranks =
        WeightedIndex::new((1..=filler.len()).map(|r| (r as f64).powf(-config.zipf_exponent)))
            .expect("non-empty filler vocabulary");
    let emotions: Vec<EmotionLabel> = config
        .emotions
        .iter()
        .map(|e| EmotionLabel::new(e.name.clone()).expect("valid emotion name"))
        .collect();
    let mut docs = Vec::with_capacity(config.n_docs);
    for i in 0..config.n_docs {
        let len = rng.gen_range(config.min_len..=config.max_len);
        let mut words: Vec<String> = (0..len)
            .map(|_| filler[ranks.sample(&mut rng)].clone())
            .collect();
        let mut labels = BTreeMap::new();
        for (planted, label) in config.emotions.iter().zip(&emotions) {
            let present = rng.gen_bool(planted.positive_rate);
            if present {
                let count = rng.gen_range(1..=2);
                for _ in 0..count {
                    let keyword = planted.keywords.choose(&mut rng).expect("keyword").clone();
                    let at = rng.gen_range(0..=words.len());
                    words.insert(at, keyword);
                }
            }
            let noisy = present ^ rng.gen_bool(config.label_noise);
            labels.insert(label.clone(), noisy);
        }
        docs.push(LabeledDocument {
            doc: Document::new(format!("d{i:05}"), words.join(" ")),
            labels,
        });
    }
    (docs, emotions)
}

/// `n` documents of which exactly `positives` carry `emotion`.
pub fn counted_corpus(n: usize, positives: usize, emotion: &str) -> Vec<LabeledDocument> {
    let label = EmotionLabel::new(emotion).expect("valid emotion name");
    (0..n)
        .map(|i| LabeledDocument {
            doc: Document::new(format!("{i}"), format!("post number {i}")),
            labels: BTreeMap::from([(label.clone(), i < positives)]),
        })
        .collect()
}
