use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use emotag_core::corpus::write_gold_corpus;
use emotag_core::testkit::{planted_corpus, PlantedCorpusConfig, PlantedEmotion};

fn emotag(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_emotag"))
        .args(args)
        .env_remove("EMOTAG_LEXICON_DIR")
        .output()
        .expect("run emotag")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn write_gold(dir: &Path, n_docs: usize) -> PathBuf {
    let emotions = vec![
        PlantedEmotion::new("joy", &["sparklo", "zestiva"], 0.4),
        PlantedEmotion::new("anger", &["furiax", "ragello"], 0.3),
        PlantedEmotion::new("fear", &["dreadle", "shiverox"], 0.3),
    ];
    let (docs, labels) = planted_corpus(&PlantedCorpusConfig {
        n_docs,
        emotions,
        label_noise: 0.0,
        ..PlantedCorpusConfig::default()
    });
    let path = dir.join("gold.csv");
    write_gold_corpus(fs::File::create(&path).unwrap(), &docs, &labels).unwrap();
    path
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Trains a small bundle and returns its path.
fn trained_bundle(dir: &Path) -> PathBuf {
    let gold = write_gold(dir, 240);
    let model = dir.join("model.emo");
    let out = emotag(&[
        "train",
        "--gold",
        p(&gold),
        "--out",
        p(&model),
        "--folds",
        "3",
        "--grid",
        "0.5,2",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    model
}

#[test]
fn train_writes_bundle_report_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let model = trained_bundle(dir.path());
    assert!(model.exists());
    let report = fs::read_to_string(dir.path().join("model.emo.report.csv")).unwrap();
    let lines: Vec<&str> = report.lines().collect();
    assert_eq!(lines[0], "emotion,tp,fp,fn,tn,precision,recall,f1,accuracy");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("joy,"));
}

#[test]
fn train_prints_chosen_cost_and_test_scores() {
    let dir = tempfile::tempdir().unwrap();
    let gold = write_gold(dir.path(), 200);
    let model = dir.path().join("m.emo");
    let out = emotag(&[
        "train",
        "--gold",
        p(&gold),
        "--out",
        p(&model),
        "--folds",
        "3",
        "--grid",
        "1",
        "--emotions",
        "joy,anger",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("joy: C=1 cv_accuracy="), "{text}");
    assert!(lines[1].starts_with("anger: C=1"), "{text}");
    assert!(lines[0].contains(" F1="));
}

#[test]
fn missing_gold_file_exits_2_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nowhere.csv");
    let out = emotag(&[
        "train",
        "--gold",
        p(&missing),
        "--out",
        p(&dir.path().join("m")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("nowhere.csv"), "{}", stderr(&out));
}

#[test]
fn unknown_emotion_and_bad_config_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let gold = write_gold(dir.path(), 60);
    let model = dir.path().join("m");
    let out = emotag(&[
        "train",
        "--gold",
        p(&gold),
        "--out",
        p(&model),
        "--emotions",
        "awe",
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    let out = emotag(&[
        "train",
        "--gold",
        p(&gold),
        "--out",
        p(&model),
        "--folds",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    let out = emotag(&[
        "train",
        "--gold",
        p(&gold),
        "--out",
        p(&model),
        "--train-fraction",
        "1.5",
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    let out = emotag(&[
        "train",
        "--gold",
        p(&gold),
        "--out",
        p(&model),
        "--jobs",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn degenerate_emotion_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let gold = dir.path().join("gold.csv");
    fs::write(&gold, "id,text,joy\n1,a b,0\n2,c d,0\n3,e f,0\n").unwrap();
    let out = emotag(&[
        "train",
        "--gold",
        p(&gold),
        "--out",
        p(&dir.path().join("m")),
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    assert!(stderr(&out).contains("joy"));
}

#[test]
fn classify_emits_grouped_predictions() {
    let dir = tempfile::tempdir().unwrap();
    let model = trained_bundle(dir.path());
    let input = dir.path().join("input.csv");
    fs::write(&input, "1,sparklo is here :)\n2,\"furiax, again\"\n").unwrap();
    let out = emotag(&["classify", "--model", p(&model), "--input", p(&input)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "id,label");
    assert_eq!(lines.len(), 7);
    assert_eq!(&lines[1..4], ["1,JOY", "1,NO_ANGER", "1,NO_FEAR"]);
    assert_eq!(&lines[4..7], ["2,NO_JOY", "2,ANGER", "2,NO_FEAR"]);

    let file = dir.path().join("pred.csv");
    let out = emotag(&[
        "classify",
        "--model",
        p(&model),
        "--input",
        p(&input),
        "--out",
        p(&file),
    ]);
    assert!(out.status.success());
    assert_eq!(fs::read_to_string(&file).unwrap(), text);
}

#[test]
fn classify_empty_input_writes_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let model = trained_bundle(dir.path());
    let input = dir.path().join("empty.csv");
    fs::write(&input, "").unwrap();
    let out = emotag(&["classify", "--model", p(&model), "--input", p(&input)]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(stdout(&out), "id,label\n");
}

#[test]
fn corrupted_bundle_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let model = trained_bundle(dir.path());
    let input = dir.path().join("input.csv");
    fs::write(&input, "1,hello\n").unwrap();

    let text = fs::read_to_string(&model).unwrap();
    fs::write(&model, &text[..text.len() / 2]).unwrap();
    let out = emotag(&["classify", "--model", p(&model), "--input", p(&input)]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));

    let mut value: serde_json::Value = serde_json::from_str(&text).unwrap();
    value["models"][1]["extractor"]["dimension"] = serde_json::json!(7);
    fs::write(&model, value.to_string()).unwrap();
    let out = emotag(&["classify", "--model", p(&model), "--input", p(&input)]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
}

#[test]
fn malformed_input_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let model = trained_bundle(dir.path());
    let input = dir.path().join("input.csv");
    fs::write(&input, "1,hello\n1,again\n").unwrap();
    let out = emotag(&["classify", "--model", p(&model), "--input", p(&input)]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn evaluate_prints_table_and_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let model = trained_bundle(dir.path());
    let gold = dir.path().join("gold.csv");
    let report = dir.path().join("eval.csv");
    let out = emotag(&[
        "evaluate",
        "--model",
        p(&model),
        "--gold",
        p(&gold),
        "--report",
        p(&report),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let table = stdout(&out);
    assert!(table.starts_with("Emotion"));
    assert!(table.contains("Joy "));
    let csv = fs::read_to_string(&report).unwrap();
    assert!(csv.starts_with("emotion,tp,fp,fn,tn,precision,recall,f1,accuracy\n"));
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn evaluate_without_label_column_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let model = trained_bundle(dir.path());
    let gold = dir.path().join("partial.csv");
    fs::write(&gold, "id,text,joy,anger\n1,sparklo,1,0\n2,plain,0,0\n").unwrap();
    let out = emotag(&["evaluate", "--model", p(&model), "--gold", p(&gold)]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    assert!(stderr(&out).contains("fear"));
}

#[test]
fn help_lists_flags_with_defaults() {
    let out = emotag(&["train", "--help"]);
    let text = stdout(&out);
    for needle in [
        "--gold",
        "--out",
        "--report",
        "--emotions",
        "--train-fraction",
        "[default: 0.7]",
        "--folds",
        "[default: 10]",
        "--grid",
        "0.01,0.05,0.10,0.20,0.25,0.50,1,2,4,8",
        "--seed",
        "[default: 42]",
        "--min-df",
        "[default: 2]",
        "--jobs",
        "--lexicon-dir",
        "EMOTAG_LEXICON_DIR",
        "--eval-log",
    ] {
        assert!(text.contains(needle), "{needle} missing from:\n{text}");
    }
    for cmd in ["classify", "evaluate"] {
        let text = stdout(&emotag(&[cmd, "--help"]));
        assert!(text.contains("--model"));
    }
}

#[test]
fn lexicon_directory_override() {
    let dir = tempfile::tempdir().unwrap();
    let gold = write_gold(dir.path(), 120);
    let lex = dir.path().join("lex");
    fs::create_dir(&lex).unwrap();
    fs::write(lex.join("sentiment.tsv"), "# word\tscore\nsparklo\tseven\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_emotag"))
        .args([
            "train",
            "--gold",
            p(&gold),
            "--out",
            p(&dir.path().join("m")),
            "--folds",
            "3",
        ])
        .env("EMOTAG_LEXICON_DIR", &lex)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("sentiment.tsv"), "{}", stderr(&out));
}
