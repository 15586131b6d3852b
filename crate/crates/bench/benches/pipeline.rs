use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, BenchmarkId, Criterion};
use emotag_bench::{fixture, FORUM_POST};
use emotag_core::linsvm::train_dual_cd;
use emotag_core::pipeline::{self, grid_search_c, preprocess, NoopObserver, TuningGrid};
use emotag_core::textprep::strip_noise;
use emotag_core::{Loss, RuleTokenizer, SolverParams, Tokenizer, TrainConfig, TrainingProblem};

fn text(c: &mut Criterion) {
    let tokenizer = RuleTokenizer::default();
    c.bench_function("strip_noise/forum_post", |b| {
        b.iter(|| strip_noise(black_box(FORUM_POST)))
    });
    c.bench_function("tokenize/forum_post", |b| {
        b.iter(|| tokenizer.tokenize(black_box(FORUM_POST)))
    });
    c.bench_function("preprocess/forum_post", |b| {
        b.iter(|| preprocess(&tokenizer, black_box(FORUM_POST)))
    });
}

fn features(c: &mut Criterion) {
    let fx = fixture(1200);
    c.bench_function("features/fit_1200", |b| {
        b.iter(|| {
            emotag_core::features::fit(
                black_box(&fx.streams),
                emotag_core::LexiconSet::builtin(),
                2,
            )
        })
    });
    c.bench_function("features/assemble_1200", |b| {
        b.iter(|| {
            fx.streams
                .iter()
                .map(|s| fx.extractor.assemble(s).nnz())
                .sum::<usize>()
        })
    });
}

fn solver(c: &mut Criterion) {
    let mut group = c.benchmark_group("solver");
    for n in [300, 1200] {
        let fx = fixture(n);
        for cost in [0.1, 8.0] {
            group.bench_with_input(
                BenchmarkId::new(format!("l2_hinge_c{cost}"), n),
                &fx,
                |b, fx| {
                    b.iter_batched(
                        || {
                            TrainingProblem::new(
                                fx.rows.clone(),
                                fx.labels.clone(),
                                cost,
                                Loss::L2Hinge,
                            )
                            .unwrap()
                        },
                        |problem| train_dual_cd(&problem, &SolverParams::default()),
                        BatchSize::LargeInput,
                    )
                },
            );
        }
    }
    group.finish();
}

fn tuning(c: &mut Criterion) {
    let fx = fixture(600);
    let mut config = TrainConfig::default();
    config.protocol.grid = TuningGrid::new(vec![0.1, 1.0]).unwrap();
    let mut group = c.benchmark_group("tuning");
    group.sample_size(10);
    group.bench_function("grid_search_600_docs_2_costs", |b| {
        b.iter(|| grid_search_c(&fx.docs, &fx.emotion, &config, &NoopObserver).unwrap())
    });
    let bundle = pipeline::train_all(
        &fx.docs,
        std::slice::from_ref(&fx.emotion),
        &config,
        &NoopObserver,
    )
    .unwrap()
    .bundle;
    let docs: Vec<_> = fx.docs.iter().map(|d| d.doc.clone()).collect();
    group.bench_function("classify_600_docs", |b| {
        b.iter(|| pipeline::classify(&bundle, &docs).unwrap())
    });
    group.finish();
}

criterion_group!(benches, text, features, solver, tuning);
criterion_main!(benches);
