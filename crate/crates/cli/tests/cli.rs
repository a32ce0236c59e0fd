use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_asr-repair"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = run(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn synthetic_data(dir: &Path, train: usize) {
    for (name, n, seed) in [("train", train, "1"), ("dev", 100, "2"), ("test", 100, "3")] {
        let (noisy, clean) = (format!("{name}.noisy"), format!("{name}.clean"));
        let n = n.to_string();
        ok(
            dir,
            &["corrupt", "--generate", &n, "--seed", seed, "--output-noisy", &noisy, "--output-clean", &clean],
        );
    }
}

const CONFIG: &str = "[data]\ntrain_noisy = train.noisy\ntrain_clean = train.clean\ndev_noisy = dev.noisy\n\
                      dev_clean = dev.clean\ntest_noisy = test.noisy\ntest_clean = test.clean\n[output]\ndir = work\n";

fn wer_line(report: &str) -> f64 {
    report
        .lines()
        .find_map(|l| l.strip_prefix("WER "))
        .expect("WER line")
        .parse()
        .unwrap()
}

#[test]
fn version_and_help() {
    let out = bin().arg("--version").output().unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains(env!("CARGO_PKG_VERSION")));
    let out = bin().arg("--help").output().unwrap();
    let help = String::from_utf8_lossy(&out.stdout).to_string();
    for sub in ["align", "phrases", "lm", "nnlm", "decode", "mert", "score", "analyze", "corrupt", "pipeline"] {
        assert!(help.contains(sub), "{sub} missing from help");
    }
}

#[test]
fn staged_commands_correct_synthetic_text() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    synthetic_data(d, 1500);
    ok(d, &["align", "--noisy", "train.noisy", "--clean", "train.clean", "-o", "aligned.txt"]);
    ok(
        d,
        &["phrases", "--noisy", "train.noisy", "--clean", "train.clean", "--alignments", "aligned.txt", "-o", "pt.txt"],
    );
    ok(d, &["lm", "--text", "train.clean", "--order", "3", "-o", "lm.arpa"]);
    ok(
        d,
        &[
            "mert", "--noisy", "dev.noisy", "--clean", "dev.clean", "--phrase-table", "pt.txt", "--lm", "lm.arpa",
            "--iterations", "3", "--log", "mert.csv", "-o", "w.txt",
        ],
    );
    assert!(fs::read_to_string(d.join("mert.csv")).unwrap().starts_with("iteration,direction,gamma,error"));
    ok(
        d,
        &[
            "decode", "--input", "test.noisy", "--phrase-table", "pt.txt", "--lm", "lm.arpa", "--weights", "w.txt",
            "--nbest", "3", "--nbest-output", "nbest.txt", "-o", "test.out",
        ],
    );
    let nbest = fs::read_to_string(d.join("nbest.txt")).unwrap();
    assert_eq!(nbest.lines().next().unwrap().split(" ||| ").count(), 4);
    let before = wer_line(&ok(d, &["score", "--hyp", "test.noisy", "--ref", "test.clean"]));
    let after = wer_line(&ok(d, &["score", "--hyp", "test.out", "--ref", "test.clean"]));
    assert!(after < before / 2.0, "WER {before} -> {after}");
    let split = ok(d, &["analyze", "--baseline", "test.noisy", "--system", "test.out", "--ref", "test.clean"]);
    assert!(split.starts_with("length,top_delta,bottom_delta,diff,count"));
}

#[test]
fn neural_lm_decodes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    synthetic_data(d, 300);
    ok(
        d,
        &[
            "nnlm", "--text", "train.clean", "--source", "train.noisy", "--embedding-dim", "8", "--hidden-dim", "16",
            "--epochs", "1", "-o", "nnjm.json",
        ],
    );
    ok(d, &["align", "--noisy", "train.noisy", "--clean", "train.clean", "-o", "a.txt"]);
    ok(d, &["phrases", "--noisy", "train.noisy", "--clean", "train.clean", "--alignments", "a.txt", "-o", "pt.txt"]);
    ok(d, &["decode", "--input", "test.noisy", "--phrase-table", "pt.txt", "--lm", "nnjm.json", "-o", "out.txt"]);
    assert_eq!(fs::read_to_string(d.join("out.txt")).unwrap().lines().count(), 100);
}

#[test]
fn score_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("r.txt"), "born in iraq\nit was good\n").unwrap();
    let report = ok(dir.path(), &["score", "--hyp", "r.txt", "--ref", "r.txt"]);
    assert!(report.contains("WER 0.00"), "{report}");
    assert!(report.contains("BLEU 100.00"), "{report}");
}

#[test]
fn missing_phrase_table_is_a_configuration_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("in.txt"), "a b\n").unwrap();
    fs::write(dir.path().join("lm.arpa"), "").unwrap();
    let out = run(dir.path(), &["decode", "--input", "in.txt", "--phrase-table", "nope.txt", "--lm", "lm.arpa", "-o", "o"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.starts_with("error[E_CONFIG]:"), "{err}");
    assert_eq!(err.trim_end().lines().count(), 1);
}

#[test]
fn malformed_inputs_report_their_category() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("a.txt"), "x y\nz\n").unwrap();
    fs::write(d.join("b.txt"), "x y\n").unwrap();
    let out = run(d, &["align", "--noisy", "a.txt", "--clean", "b.txt", "-o", "o"]);
    assert_eq!(out.status.code(), Some(3));
    fs::write(d.join("bad.arpa"), "\\data\\\nngram 1=1\n").unwrap();
    fs::write(d.join("pt.txt"), "x ||| x ||| 1 1 1 1\n").unwrap();
    let out = run(d, &["decode", "--input", "a.txt", "--phrase-table", "pt.txt", "--lm", "bad.arpa", "-o", "o"]);
    assert_eq!(out.status.code(), Some(6), "{}", String::from_utf8_lossy(&out.stderr));
    fs::write(d.join("c.ini"), format!("{CONFIG}[model]\nflavour = 2\n")).unwrap();
    let out = run(d, &["pipeline", "--config", "c.ini"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn pipeline_is_reproducible_and_improves_wer() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    synthetic_data(d, 1500);
    fs::write(d.join("run.ini"), format!("{CONFIG}[mert]\nmax_iterations = 3\n")).unwrap();
    let first = ok(d, &["pipeline", "--config", "run.ini"]);
    let test: Vec<f64> = first
        .lines()
        .find(|l| l.starts_with("test,"))
        .unwrap()
        .split(',')
        .skip(2)
        .map(|x| x.parse().unwrap())
        .collect();
    assert!(test[2] < test[0], "corrected {} vs noisy {}", test[2], test[0]);
    let names = [
        "alignments.txt",
        "phrase-table.txt",
        "lm.arpa",
        "weights.txt",
        "mert.csv",
        "test.corrected",
        "split.csv",
        "summary.csv",
    ];
    let snapshot: Vec<Vec<u8>> = names.iter().map(|n| fs::read(d.join("work").join(n)).unwrap()).collect();
    fs::remove_dir_all(d.join("work")).unwrap();
    let second = ok(d, &["pipeline", "--config", "run.ini"]);
    assert_eq!(first, second);
    for (n, before) in names.iter().zip(&snapshot) {
        assert_eq!(&fs::read(d.join("work").join(n)).unwrap(), before, "{n} changed");
    }
    let baseline = ok(d, &["pipeline", "--config", "run.ini", "--preset", "word-baseline"]);
    assert!(baseline.starts_with("set,sentences,noisy_wer"));
    let weights = fs::read_to_string(d.join("work/weights.txt")).unwrap();
    assert!(weights.contains("word_penalty 0\n"), "{weights}");
}
