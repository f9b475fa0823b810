use std::time::Instant;

use labelscope_core::corpus::{AnnotationSet, Category, CorpusSnapshot, LabelSchema, Record};
use labelscope_core::surrogate::{
    category_confidence, confidence_score, evaluate, load_model, one_hot_encode, save_model, train, ConfidenceVector,
    EvalMetrics, Sigmoid, TrainingConfig,
};
use labelscope_core::synth::{keyword_corpus, keyword_vocabulary, KeywordSpec};
use labelscope_core::vectorizer::VectorizerConfig;
use labelscope_core::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn schema(cats: &[(&str, &[&str])]) -> LabelSchema {
    LabelSchema::new(
        cats.iter()
            .map(|(n, l)| Category {
                name: n.to_string(),
                labels: l.iter().map(|s| s.to_string()).collect(),
            })
            .collect(),
    )
    .unwrap()
}

#[test]
fn one_hot_rows() {
    let mut ann = AnnotationSet::empty(schema(&[("P", &["too_hot", "leak"]), ("S", &["fix"])]));
    ann.assign("r1", "too_hot");
    ann.assign("r1", "fix");
    let m = one_hot_encode(&ann, &["r1", "r2"]);
    assert_eq!(m.category("P").unwrap().rows, vec![vec![1, 0], vec![0, 0]]);
    assert_eq!(m.category("S").unwrap().rows, vec![vec![1], vec![0]]);
    for (i, id) in ["r1", "r2"].iter().enumerate() {
        for c in &m.categories {
            let sum: u8 = c.rows[i].iter().sum();
            assert_eq!(sum as usize, ann.labels_in_category(id, &c.category).len());
        }
    }
}

#[test]
fn hamming_two_by_two_brute_force() {
    let truth = vec![vec![true, false], vec![false, true]];
    let pred = vec![vec![true, true], vec![false, true]];
    let mut wrong = 0;
    for i in 0..2 {
        for j in 0..2 {
            if truth[i][j] != pred[i][j] {
                wrong += 1;
            }
        }
    }
    let m = EvalMetrics::from_cells(&truth, &pred).unwrap();
    assert_eq!(m.hamming_loss, wrong as f64 / 4.0);
    assert_eq!(m.hamming_loss, 0.25);
}

#[test]
fn hamming_is_one_minus_accuracy() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let n = rng.random_range(1..20);
        let m = rng.random_range(1..8);
        let cell = |rng: &mut ChaCha8Rng| (0..n).map(|_| (0..m).map(|_| rng.random_bool(0.4)).collect()).collect();
        let t: Vec<Vec<bool>> = cell(&mut rng);
        let p: Vec<Vec<bool>> = cell(&mut rng);
        let flat_t: Vec<bool> = t.iter().flatten().copied().collect();
        let flat_p: Vec<bool> = p.iter().flatten().copied().collect();
        let acc = flat_t.iter().zip(&flat_p).filter(|(a, b)| a == b).count() as f64 / flat_t.len() as f64;
        let metrics = EvalMetrics::from_cells(&t, &p).unwrap();
        assert!((metrics.hamming_loss - (1.0 - acc)).abs() < 1e-12);
        for v in [metrics.hamming_loss, metrics.micro_f1, metrics.macro_f1] {
            assert!((0.0..=1.0).contains(&v));
        }
    }
}

fn keyword_snapshot(seed: u64) -> CorpusSnapshot {
    keyword_corpus(&KeywordSpec {
        seed,
        ..KeywordSpec::default()
    })
    .snapshot()
    .unwrap()
}

#[test]
fn keyword_corpus_quality_and_determinism() {
    let snap = keyword_snapshot(1);
    let tcfg = TrainingConfig {
        seed: 7,
        ..TrainingConfig::default()
    };
    let vcfg = VectorizerConfig::default();
    let start = Instant::now();
    let a = train(&snap, &vcfg, &tcfg).unwrap();
    eprintln!("train: {:?} {:?}", start.elapsed(), a.metrics);
    assert!(a.metrics.micro_f1 >= 0.95, "{:?}", a.metrics);
    assert!(a.metrics.hamming_loss <= 0.05, "{:?}", a.metrics);
    assert_eq!(a.model.label_count(), 12);
    let b = train(&snap, &vcfg, &tcfg).unwrap();
    assert_eq!(a.model.to_json(), b.model.to_json());
    for (ca, cb) in a.model.categories.iter().zip(&b.model.categories) {
        for (x, y) in ca.classifiers.iter().zip(&cb.classifiers) {
            let bits = |v: &[f64]| v.iter().map(|f| f.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(&x.linear.weights), bits(&y.linear.weights));
            assert_eq!(x.linear.bias.to_bits(), y.linear.bias.to_bits());
        }
    }

    // Trigger-only text.
    let vocab = keyword_vocabulary(&KeywordSpec::default());
    let order = a.model.label_order();
    for (label, trig) in &vocab.triggers {
        let cv = a.model.predict_text(trig);
        let j = order.iter().position(|l| l == label).unwrap();
        assert!(cv.values()[j] > 0.9, "{label}: {}", cv.values()[j]);
    }

    // All-OOV texts agree with the empty text.
    let empty = a.model.predict_text("");
    assert_eq!(empty, a.model.predict_text("qqqqq xxxxyz"));
    assert_eq!(empty.len(), 12);

    // Threshold boundaries.
    let r = &snap.records()[0];
    let all = a.model.predict_labels(r, 0.0);
    assert_eq!(all.values().map(Vec::len).sum::<usize>(), 12);
    let none = a.model.predict_labels(r, 1.0 + 1e-9);
    assert_eq!(none.values().map(Vec::len).sum::<usize>(), 0);

    // Monotone in the decision score.
    for cat in &a.model.categories {
        for clf in &cat.classifiers {
            assert!(clf.calibration.a < 0.0);
            let ps: Vec<f64> = (-40..=40).map(|s| clf.calibration.probability(s as f64 * 0.1)).collect();
            assert!(ps.windows(2).all(|w| w[1] >= w[0]));
            assert!(ps.iter().all(|&p| p > 0.0 && p < 1.0));
        }
    }
}

#[test]
fn zero_positive_label_is_constant_negative() {
    let mut snap_corpus = keyword_corpus(&KeywordSpec {
        records: 120,
        ..KeywordSpec::default()
    });
    let mut sch = snap_corpus.annotations.schema.clone();
    sch.add_label("Item", "never_used").unwrap();
    snap_corpus.annotations.schema = sch;
    let snap = snap_corpus.snapshot().unwrap();
    let out = train(&snap, &VectorizerConfig::default(), &TrainingConfig::default()).unwrap();
    assert!(out.warnings.iter().any(|w| w.contains("never_used")));
    let j = out.model.label_order().iter().position(|l| l == "never_used").unwrap();
    for r in snap.records() {
        assert!(out.model.predict_proba(r).values()[j] < 0.5);
    }
    assert!(out.model.predict_text("").values()[j] < 0.5);
}

#[test]
fn confidence_arithmetic() {
    let cv = ConfidenceVector(vec![0.2, 0.4, 0.6]);
    assert!((confidence_score(&cv).unwrap() - 0.4).abs() < 1e-15);
    assert_eq!(confidence_score(&ConfidenceVector(vec![0.3; 5])).unwrap(), 0.3);
    let perm = ConfidenceVector(vec![0.6, 0.2, 0.4]);
    assert!((confidence_score(&perm).unwrap() - 0.4).abs() < 1e-15);
    assert!(matches!(confidence_score(&ConfidenceVector(vec![])), Err(Error::Empty(_))));

    let s = schema(&[("c1", &["a", "b"]), ("c2", &["c"])]);
    let cv = ConfidenceVector(vec![0.1, 0.3, 0.8]);
    let cc = category_confidence(&cv, &s).unwrap();
    assert!((cc["c1"] - 0.2).abs() < 1e-15);
    assert_eq!(cc["c2"], 0.8);
    let weighted = (cc["c1"] * 2.0 + cc["c2"]) / 3.0;
    assert!((weighted - confidence_score(&cv).unwrap()).abs() < 1e-15);
    assert!(category_confidence(&ConfidenceVector(vec![0.1]), &s).is_err());
}

#[test]
fn model_file_round_trip_and_errors() {
    let snap = keyword_snapshot(2);
    let out = train(&snap, &VectorizerConfig::default(), &TrainingConfig::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    save_model(&out.model, &path).unwrap();
    let loaded = load_model(&path).unwrap();
    assert_eq!(loaded.to_json(), out.model.to_json());
    for r in &snap.records()[..10] {
        let a = out.model.predict_proba(r);
        let b = loaded.predict_proba(r);
        for (x, y) in a.values().iter().zip(b.values()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }
    let m1 = evaluate(&out.model, &snap, &out.validation_ids).unwrap();
    let m2 = evaluate(&loaded, &snap, &out.validation_ids).unwrap();
    assert_eq!(m1, m2);

    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::write(&path, &text[..text.len() / 2]).unwrap();
    assert!(matches!(load_model(&path), Err(Error::Corrupt(_))));

    let newer = text.replacen("\"format_version\":1", "\"format_version\":2", 1);
    std::fs::write(&path, newer).unwrap();
    assert!(matches!(load_model(&path), Err(Error::VersionMismatch { found: 2, .. })));
}

#[test]
fn training_preconditions() {
    let empty = CorpusSnapshot::from_records(vec![]).unwrap();
    assert!(matches!(
        train(&empty, &VectorizerConfig::default(), &TrainingConfig::default()),
        Err(Error::Empty(_))
    ));
    let two = CorpusSnapshot::from_records(vec![
        Record::new("a", [("T", "pump leak")]),
        Record::new("b", [("T", "fan noise")]),
    ])
    .unwrap();
    assert!(matches!(
        train(&two, &VectorizerConfig::default(), &TrainingConfig::default()),
        Err(Error::DegenerateSplit(_))
    ));
    let cfg = TrainingConfig {
        validation_fraction: 0.5,
        calibration_fraction: 0.0,
        ..TrainingConfig::default()
    };
    assert!(train(&two, &VectorizerConfig::default(), &cfg).is_ok());
    assert!(evaluate::<&str>(
        &train(&two, &VectorizerConfig::default(), &cfg).unwrap().model,
        &two,
        &[]
    )
    .is_err());
}

#[test]
fn constant_sigmoid_matches_prior() {
    let s = Sigmoid::constant(-1.0, 1.0 / 102.0);
    assert!((s.probability(-1.0) - 1.0 / 102.0).abs() < 1e-15);
}
