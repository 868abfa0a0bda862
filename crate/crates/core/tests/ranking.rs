use abdetect_core::features::{BOOLEAN_FEATURES, COUNT_FEATURES};
use abdetect_core::ml::rank_features;
use abdetect_core::{FeatureVector, LabeledDataset, Label};

const SUITE: &str = include_str!("../fixtures/ig_suite.txt");
const TIE: f64 = 1e-12;

struct Suite {
    name: String,
    features: Vec<String>,
    rows: Vec<(Vec<i64>, bool)>,
}

fn load_suite() -> Vec<Suite> {
    let mut out: Vec<Suite> = Vec::new();
    let mut name = String::new();
    for line in SUITE.lines().map(str::trim).filter(|l| !l.is_empty()) {
        if let Some(n) = line.strip_prefix("# ") {
            name = n.to_string();
        } else if let Some(f) = line.strip_prefix("features: ") {
            out.push(Suite {
                name: name.clone(),
                features: f.split(',').map(String::from).collect(),
                rows: Vec::new(),
            });
        } else {
            let fields: Vec<&str> = line.split(',').collect();
            let (label, values) = fields.split_last().unwrap();
            let suite = out.last_mut().unwrap();
            suite.rows.push((
                values.iter().map(|v| v.parse().unwrap()).collect(),
                *label == "TRUE",
            ));
        }
    }
    out
}

fn dataset(s: &Suite) -> LabeledDataset {
    let rows = s
        .rows
        .iter()
        .enumerate()
        .map(|(i, (values, label))| {
            let mut v = FeatureVector::zero(format!("r{i}.example"));
            for (name, &x) in s.features.iter().zip(values) {
                match name.as_str() {
                    "keyword" => v.keyword = x != 0,
                    "url_change" => v.url_change = x != 0,
                    _ => {
                        let idx = COUNT_FEATURES.iter().position(|c| c == name).unwrap();
                        v.diffs[idx] = x;
                    }
                }
            }
            v.label = Label::from(*label);
            v
        })
        .collect();
    LabeledDataset::new(rows).with_schema(&s.features).unwrap()
}

/// Entropy of a list of labels, straight from the definition.
fn h(labels: &[bool]) -> f64 {
    if labels.is_empty() {
        return 0.0;
    }
    let n = labels.len() as f64;
    let pos = labels.iter().filter(|&&l| l).count() as f64;
    [pos, n - pos]
        .iter()
        .filter(|&&c| c > 0.0)
        .map(|&c| -(c / n) * (c / n).log2())
        .sum()
}

/// Tries every midpoint between distinct values; keeps the first maximum.
fn oracle_best(values: &[i64], labels: &[bool]) -> (f64, Option<f64>) {
    let mut distinct: Vec<i64> = values.to_vec();
    distinct.sort();
    distinct.dedup();
    let parent = h(labels);
    let mut best = (0.0, None);
    for w in distinct.windows(2) {
        let t = (w[0] as f64 + w[1] as f64) / 2.0;
        let (mut left, mut right) = (Vec::new(), Vec::new());
        for (&v, &l) in values.iter().zip(labels) {
            if (v as f64) <= t {
                left.push(l);
            } else {
                right.push(l);
            }
        }
        let n = labels.len() as f64;
        let gain = parent - left.len() as f64 / n * h(&left) - right.len() as f64 / n * h(&right);
        if best.1.is_none() || gain > best.0 + TIE {
            best = (gain.max(0.0), Some(t));
        }
    }
    best
}

#[test]
fn rank_features_matches_brute_force_oracle() {
    let suites = load_suite();
    assert_eq!(suites.len(), 60);
    for s in &suites {
        assert!(s.rows.len() <= 12 && s.features.len() <= 3, "{}", s.name);
        let labels: Vec<bool> = s.rows.iter().map(|r| r.1).collect();
        let mut expected: Vec<(String, f64, Option<f64>)> = s
            .features
            .iter()
            .enumerate()
            .map(|(f, name)| {
                let values: Vec<i64> = s.rows.iter().map(|r| r.0[f]).collect();
                let (gain, t) = oracle_best(&values, &labels);
                (name.clone(), gain, t)
            })
            .collect();
        // Insertion sort with a tie tolerance: equal gains keep schema order.
        for i in 1..expected.len() {
            let mut j = i;
            while j > 0 && expected[j].1 > expected[j - 1].1 + TIE {
                expected.swap(j, j - 1);
                j -= 1;
            }
        }

        let got = rank_features(&dataset(s)).unwrap();
        let got_names: Vec<&str> = got.iter().map(|r| r.feature.as_str()).collect();
        let want_names: Vec<&str> = expected.iter().map(|e| e.0.as_str()).collect();
        assert_eq!(got_names, want_names, "{}: order", s.name);
        for (g, e) in got.iter().zip(&expected) {
            assert!((g.info_gain - e.1).abs() <= TIE, "{}: {} gain {} vs {}", s.name, g.feature, g.info_gain, e.1);
            assert_eq!(g.threshold, e.2, "{}: {} threshold", s.name, g.feature);
            assert!((g.percent - 100.0 * e.1).abs() <= 1e-9);
        }
    }
}

#[test]
fn boolean_columns_rank_like_counts() {
    assert_eq!(BOOLEAN_FEATURES, ["keyword", "url_change"]);
    let suites = load_suite();
    let flags = suites.iter().find(|s| s.name == "boolean flags").unwrap();
    let ranks = rank_features(&dataset(flags)).unwrap();
    assert_eq!(ranks[0].feature, "keyword");
    assert_eq!(ranks[0].threshold, Some(0.5));
}
