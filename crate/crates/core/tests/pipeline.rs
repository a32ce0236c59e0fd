use std::fs;

use asr_repair::lm::perplexity;
use asr_repair::pipeline::{correct, load_data, run_pipeline, train_models, LmType, PipelineConfig, Settings};
use asr_repair::synthetic::synthetic_task;
use asr_repair::{ModelWeights, NGramModel, TrainedLm};

#[test]
fn f32_and_f64_systems_agree_on_synthetic_task() {
    let task = synthetic_task(800, 50, 50, 4);
    let settings = Settings::default();
    let (_, m64) = train_models::<f64>(&task.train, &settings).unwrap();
    let (_, m32) = train_models::<f32>(&task.train, &settings).unwrap();
    let noisy = task.test.noisy_sentences();
    let a = correct(&m64, &settings.initial_weights(), &settings.decoder, &noisy);
    let b = correct(&m32, &settings.initial_weights(), &settings.decoder, &noisy);
    let same = a.iter().zip(&b).filter(|(x, y)| x == y).count();
    assert!(same >= 48, "{same} of 50 agree");
}

#[test]
fn run_pipeline_writes_artifacts_in_one_id_space() {
    let task = synthetic_task(600, 60, 60, 8);
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for (name, c) in [("train", &task.train), ("dev", &task.dev), ("test", &task.test)] {
        c.write(&d.join(format!("{name}.noisy")), &d.join(format!("{name}.clean"))).unwrap();
    }
    let text = "[data]\ntrain_noisy = train.noisy\ntrain_clean = train.clean\ndev_noisy = dev.noisy\n\
                dev_clean = dev.clean\ntest_noisy = test.noisy\ntest_clean = test.clean\n\
                [output]\ndir = out\n[mert]\nmax_iterations = 2\n[run]\nthreads = 1\n";
    let path = d.join("run.ini");
    fs::write(&path, text).unwrap();
    let config = PipelineConfig::load(&path).unwrap();
    assert_eq!(config.settings.lm_type, LmType::WittenBell);
    let summary = run_pipeline(&config).unwrap();
    assert!(summary.test.tuned_wer < summary.test.noisy_wer);
    assert_eq!(summary.test.sentences, 60);

    let out = d.join("out");
    let weights = ModelWeights::load(&out.join("weights.txt")).unwrap();
    assert_eq!(weights, summary.weights);
    let (train, _, test) = load_data(&config.data, 1).unwrap();
    let mut vocab = train.vocab.clone();
    let lm = TrainedLm::read(&out.join("lm.arpa"), &mut vocab).unwrap();
    assert!(matches!(lm, TrainedLm::NGram(_)));
    let direct = NGramModel::read_arpa(&out.join("lm.arpa"), &mut vocab).unwrap();
    let ppl = perplexity(&direct, &test.clean_sentences());
    assert!(ppl.is_finite() && ppl > 1.0);
    let corrected = fs::read_to_string(out.join("test.corrected")).unwrap();
    assert_eq!(corrected.lines().count(), 60);
    let summary_csv = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(summary_csv.lines().count(), 3);
}
