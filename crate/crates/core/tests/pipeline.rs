use std::collections::BTreeMap;
use std::time::Instant;

use abdetect_core::capture::{generate_corpus, write_corpus, CorpusSpec, MINI_FILTER_LIST};
use abdetect_core::features::{extract_corpus, Keywords, Label};
use abdetect_core::filterlist::parse_filter_list;
use abdetect_core::ml::{cross_validate, predict, Learner, TrainingSet};
use abdetect_core::LabeledDataset;

fn corpus(spec: &CorpusSpec) -> (tempfile::TempDir, LabeledDataset) {
    let list = parse_filter_list(MINI_FILTER_LIST);
    let sites = generate_corpus(spec, &list).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_corpus(&sites, dir.path()).unwrap();
    let truth: BTreeMap<String, bool> = sites
        .iter()
        .map(|s| (s.pair.site.host(), s.planted_wall))
        .collect();
    let mut ds = extract_corpus(dir.path(), &Keywords::default()).unwrap().dataset;
    for row in &mut ds.rows {
        row.label = Label::from(truth[&row.site]);
    }
    (dir, ds)
}

#[test]
fn synthetic_corpus_cross_validation() {
    let start = Instant::now();
    let (_dir, ds) = corpus(&CorpusSpec::default());
    assert_eq!(ds.rows.len(), 200);
    let set = TrainingSet::from_dataset(&ds);
    for learner in [Learner::J48 { min_leaf: 2 }, Learner::RandomForest { n_trees: 100, seed: 1 }] {
        let r = cross_validate(&set, &learner, 10, 1).unwrap();
        assert!(r.accuracy >= 0.99, "{learner} accuracy {}", r.accuracy);
    }
    // Naive Bayes is much weaker on this corpus; it only has to beat the
    // majority class.
    let nb = cross_validate(&set, &Learner::NaiveBayes, 10, 1).unwrap();
    assert!(nb.accuracy > 0.8, "nb accuracy {}", nb.accuracy);
    assert!(start.elapsed().as_secs() < 60);
}

#[test]
fn held_out_corpus_flags_planted_walls() {
    let (_a, train) = corpus(&CorpusSpec::default());
    let held = CorpusSpec {
        pages: 60,
        walls: 12,
        dead: 3,
        seed: 99,
        host_prefix: "held".into(),
    };
    let (_b, test) = corpus(&held);
    assert_eq!(test.rows.len(), 57);
    let set = TrainingSet::from_dataset(&train);
    for learner in [Learner::J48 { min_leaf: 2 }, Learner::RandomForest { n_trees: 100, seed: 5 }] {
        let model = learner.train(&set).unwrap();
        for row in &test.rows {
            let p = predict(&model, row).unwrap();
            assert_eq!(p.label, row.label, "{learner} on {}", row.site);
        }
    }
}


