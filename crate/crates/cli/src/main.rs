mod args;

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Mutex;

use anyhow::{bail, Context, Result};
use clap::Parser;

use emotag_core::corpus::{self, CorpusError};
use emotag_core::features::FeatureError;
use emotag_core::lexicon::LexiconError;
use emotag_core::pipeline::{
    self, ErrorClass, FoldEvaluation, TrainObserver, TuningGrid, TuningMetric,
};
use emotag_core::{
    EmotionLabel, LexiconSet, Loss, PipelineError, Protocol, RuleTokenizer, TrainConfig,
};

use args::{ClassifyArgs, Cli, Command, EvaluateArgs, LossArg, MetricArg, ResourceArgs, TrainArgs};

/// A bad command line, reported with the input-error exit code.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<PipelineError>() {
            return match e.class() {
                ErrorClass::Input => 2,
                ErrorClass::Model => 3,
                ErrorClass::Internal => 1,
            };
        }
        if let Some(e) = cause.downcast_ref::<FeatureError>() {
            return match e {
                FeatureError::IncompatibleModel(_) | FeatureError::Parse(_) => 3,
                FeatureError::ContractViolation(_) => 1,
                _ => 2,
            };
        }
        if cause.is::<CorpusError>()
            || cause.is::<LexiconError>()
            || cause.is::<UsageError>()
            || cause.is::<io::Error>()
        {
            return 2;
        }
    }
    1
}

fn thread_pool(jobs: usize) -> Result<rayon::ThreadPool> {
    if jobs == 0 {
        return Err(UsageError("--jobs must be at least 1".into()).into());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .context("cannot start worker threads")
}

fn write_output(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))
}

fn load_resources(args: &ResourceArgs) -> Result<(LexiconSet, RuleTokenizer)> {
    let lexicons = match &args.lexicon_dir {
        Some(dir) => LexiconSet::load_dir(dir)?,
        None => LexiconSet::builtin(),
    };
    let tokenizer = match &args.emoticons {
        Some(path) => {
            let table = fs::read_to_string(path)
                .with_context(|| format!("cannot read emoticon table {}", path.display()))?;
            RuleTokenizer::from_table(&table)
        }
        None => RuleTokenizer::default(),
    };
    Ok((lexicons, tokenizer))
}

/// Collects fold evaluations from the worker threads.
#[derive(Default)]
struct EvalLog {
    rows: Mutex<Vec<FoldEvaluation>>,
}

impl TrainObserver for EvalLog {
    fn fold_evaluated(&self, event: &FoldEvaluation) {
        self.rows.lock().expect("eval log lock").push(event.clone());
    }
}

impl EvalLog {
    /// Rows ordered by emotion (in training order), cost and fold, so the
    /// file does not depend on thread scheduling.
    fn to_csv(&self, emotions: &[EmotionLabel]) -> String {
        let mut rows = self.rows.lock().expect("eval log lock").clone();
        let rank = |e: &EmotionLabel| emotions.iter().position(|x| x == e).unwrap_or(usize::MAX);
        rows.sort_by(|a, b| {
            rank(&a.emotion)
                .cmp(&rank(&b.emotion))
                .then(a.cost.total_cmp(&b.cost))
                .then(a.fold.cmp(&b.fold))
        });
        let mut out = String::from("emotion,c,fold,train_size,heldout_size,correct\n");
        for r in rows {
            let correct = r.confusion.tp + r.confusion.tn;
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.emotion, r.cost, r.fold, r.train_size, r.heldout_size, correct
            );
        }
        out
    }
}

fn train(args: TrainArgs) -> Result<()> {
    let pool = thread_pool(args.jobs)?;
    let (gold, columns) = corpus::read_gold_corpus(&args.gold)
        .with_context(|| format!("cannot load gold corpus {}", args.gold.display()))?;
    let emotions: Vec<EmotionLabel> = match &args.emotions {
        Some(names) => names
            .iter()
            .map(|n| EmotionLabel::new(n.trim()))
            .collect::<std::result::Result<_, _>>()?,
        None => columns,
    };
    if let Some(missing) = emotions
        .iter()
        .find(|e| !gold.is_empty() && gold[0].label(e).is_none())
    {
        return Err(PipelineError::UnknownEmotion(missing.clone()).into());
    }

    let (lexicons, tokenizer) = load_resources(&args.resources)?;
    let protocol = Protocol {
        train_fraction: args.train_fraction,
        folds: args.folds,
        grid: TuningGrid::new(args.grid.clone())?,
        seed: args.seed,
        min_df: args.min_df,
        loss: match args.loss {
            LossArg::L1Hinge => Loss::L1Hinge,
            LossArg::L2Hinge => Loss::L2Hinge,
        },
        solver_eps: args.solver_eps,
        max_outer_iters: args.max_iter,
        tuning_metric: match args.tune_metric {
            MetricArg::Accuracy => TuningMetric::Accuracy,
            MetricArg::F1 => TuningMetric::F1,
        },
        shared_split: args.shared_split,
        positive_weight: args.positive_weight,
    };
    let config = TrainConfig {
        protocol,
        lexicons,
        tokenizer,
    };

    let log = EvalLog::default();
    let outcome = pool.install(|| pipeline::train_all(&gold, &emotions, &config, &log))?;

    pipeline::save_bundle(&outcome.bundle, &args.out)?;
    let report_path = args.report.unwrap_or_else(|| {
        let mut name = args.out.clone().into_os_string();
        name.push(".report.csv");
        PathBuf::from(name)
    });
    write_output(&report_path, &outcome.report.to_csv())?;
    if let Some(path) = &args.eval_log {
        write_output(path, &log.to_csv(&emotions))?;
    }

    let stdout = io::stdout();
    let mut out = stdout.lock();
    for (model, (_, c)) in outcome.bundle.models.iter().zip(&outcome.report.rows) {
        writeln!(
            out,
            "{}: C={} cv_{}={:.4} test P={:.2} R={:.2} F1={:.2}",
            model.emotion,
            model.chosen_cost,
            match config.protocol.tuning_metric {
                TuningMetric::Accuracy => "accuracy",
                TuningMetric::F1 => "f1",
            },
            model.cv_score,
            c.precision(),
            c.recall(),
            c.f1()
        )?;
    }
    Ok(())
}

fn classify(args: ClassifyArgs) -> Result<()> {
    let pool = thread_pool(args.jobs)?;
    let bundle = pipeline::load_bundle(&args.model)?;
    let docs = corpus::read_input_corpus(&args.input)
        .with_context(|| format!("cannot load input corpus {}", args.input.display()))?;
    let predictions = pool.install(|| pipeline::classify(&bundle, &docs))?;
    match &args.out {
        Some(path) => corpus::write_predictions(path, &predictions)?,
        None => corpus::emit_predictions(io::stdout().lock(), &predictions)?,
    }
    Ok(())
}

fn evaluate(args: EvaluateArgs) -> Result<()> {
    let pool = thread_pool(args.jobs)?;
    let bundle = pipeline::load_bundle(&args.model)?;
    let (gold, _) = corpus::read_gold_corpus(&args.gold)
        .with_context(|| format!("cannot load gold corpus {}", args.gold.display()))?;
    if gold.is_empty() {
        bail!(UsageError(format!(
            "{} contains no documents",
            args.gold.display()
        )));
    }
    let report = pool.install(|| pipeline::evaluate(&bundle, &gold))?;
    if let Some(path) = &args.report {
        write_output(path, &report.to_csv())?;
    }
    print!("{}", report.to_table());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(args) => train(args),
        Command::Classify(args) => classify(args),
        Command::Evaluate(args) => evaluate(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("emotag: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
