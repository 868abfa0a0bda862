use std::collections::BTreeMap;

use abdetect_core::capture::{CapturePair, CaptureStatus, PageSnapshot, SnapshotMode, Variant};
use abdetect_core::features::{count_features, diff_features, Keywords, COUNT_FEATURES};
use abdetect_core::ingest::{dedupe_union, read_dataset, write_dataset};
use abdetect_core::ml::{gain_ratio, info_gain, metrics_from_confusion, roc_auc, ConfusionMatrix, Prediction};
use abdetect_core::report::{aggregate_region, merge_labels, LabelSource, ResponseCategory, ResponseLabel};
use abdetect_core::{FeatureVector, LabeledDataset, Label, SiteRecord};
use proptest::prelude::*;

fn fragment() -> impl Strategy<Value = String> {
    let word = prop::sample::select(vec!["news", "story", "adblock", "sport", "weather", "whitelist", "today"]);
    let words = prop::collection::vec(word, 0..6).prop_map(|w| w.join(" "));
    let tag = prop::sample::select(vec!["div", "p", "a", "h1", "h2", "h3", "table", "span", "li"]);
    let leaf = (tag, words).prop_map(|(t, w)| format!("<{t}>{w}</{t}>"));
    let void = prop::sample::select(vec!["<img src=\"x.png\">", "<iframe src=\"f.html\"></iframe>", "<br>"])
        .prop_map(String::from);
    prop_oneof![4 => leaf, 1 => void]
}

fn page() -> impl Strategy<Value = String> {
    prop::collection::vec(fragment(), 0..15).prop_map(|parts| {
        format!("<html><head><title>t</title></head><body>{}</body></html>", parts.join("\n"))
    })
}

fn pair(baseline: &str, blocked: &str) -> CapturePair {
    let url = "http://site.example/";
    CapturePair {
        site: SiteRecord::new(url, 1, "T").unwrap(),
        baseline: Some(PageSnapshot::new(url, url, Variant::Baseline, baseline, SnapshotMode::Offline)),
        blocked: Some(PageSnapshot::new(url, url, Variant::Blocked, blocked, SnapshotMode::Offline)),
        status: CaptureStatus::Ok,
    }
}

/// Pairwise AUC: the share of (positive, negative) pairs ordered correctly,
/// ties counting half.
fn pairwise_auc(scored: &[(f64, bool)]) -> f64 {
    let (mut wins, mut pairs) = (0.0, 0.0);
    for &(p, lp) in scored {
        for &(n, ln) in scored {
            if lp && !ln {
                pairs += 1.0;
                if p > n {
                    wins += 1.0;
                } else if p == n {
                    wins += 0.5;
                }
            }
        }
    }
    wins / pairs
}

fn scored_both_classes() -> impl Strategy<Value = Vec<(f64, bool)>> {
    prop::collection::vec((0u8..20, any::<bool>()), 2..40)
        .prop_map(|v| v.into_iter().map(|(s, l)| (f64::from(s) / 20.0, l)).collect::<Vec<_>>())
        .prop_filter("needs both classes", |v| v.iter().any(|x| x.1) && v.iter().any(|x| !x.1))
}

fn confusion() -> impl Strategy<Value = [[u64; 2]; 2]> {
    [[0u64..200, 0u64..200], [0u64..200, 0u64..200]].prop_filter("non-empty", |m| m.iter().flatten().sum::<u64>() > 0)
}

fn site_lists() -> impl Strategy<Value = Vec<Vec<SiteRecord>>> {
    let host = prop::sample::select(vec![
        "example.com",
        "www.example.com",
        "EXAMPLE.com",
        "news.de",
        "https://news.de/path",
        "blog.at",
        "http://www.blog.at/",
        "shop.ch",
        "a.b.example.org",
    ]);
    prop::collection::vec(prop::collection::vec(host, 0..8), 0..4).prop_map(|lists| {
        lists
            .into_iter()
            .enumerate()
            .map(|(li, l)| {
                l.into_iter()
                    .enumerate()
                    .map(|(i, h)| SiteRecord::new(h, i as u32 + 1, &format!("L{li}")).unwrap())
                    .collect()
            })
            .collect()
    })
}

fn dataset_rows() -> impl Strategy<Value = Vec<FeatureVector>> {
    prop::collection::vec(
        (prop::array::uniform14(-500i64..500), any::<bool>(), any::<bool>(), 0u8..3),
        1..20,
    )
    .prop_map(|rows| {
        rows.into_iter()
            .enumerate()
            .map(|(i, (diffs, keyword, url_change, l))| FeatureVector {
                site: format!("s{i}.example"),
                diffs,
                keyword,
                url_change,
                label: [Label::True, Label::False, Label::Unlabeled][l as usize],
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn zero_diff_identity(html in page()) {
        let v = diff_features(&pair(&html, &html)).unwrap();
        prop_assert_eq!(v.diffs, [0i64; 14]);
        prop_assert!(!v.keyword && !v.url_change);
    }

    #[test]
    fn diff_antisymmetry(a in page(), b in page()) {
        let forward = diff_features(&pair(&a, &b)).unwrap();
        let backward = diff_features(&pair(&b, &a)).unwrap();
        for i in 0..COUNT_FEATURES.len() {
            prop_assert_eq!(forward.diffs[i], -backward.diffs[i]);
        }
        prop_assert_eq!(forward.url_change, backward.url_change);
    }

    #[test]
    fn counting_is_deterministic(html in page()) {
        prop_assert_eq!(count_features(&html), count_features(&html));
    }

    #[test]
    fn keyword_flag_is_monotone(a in page(), b in page(), extra in prop::sample::select(vec!["adblock", "whitelist", "ad blocker"])) {
        let before = diff_features(&pair(&a, &b)).unwrap();
        let grown = b.replace("</body>", &format!("<p>{extra}</p></body>"));
        let after = diff_features(&pair(&a, &grown)).unwrap();
        prop_assert!(!before.keyword || after.keyword);
        prop_assert!(Keywords::default().detect(extra));
    }

    #[test]
    fn auc_rank_invariance(scored in scored_both_classes(), scale in 0.1f64..10.0, shift in -5.0f64..5.0) {
        let auc = roc_auc(&scored).unwrap();
        prop_assert!((auc - pairwise_auc(&scored)).abs() < 1e-12);
        let transformed: Vec<(f64, bool)> = scored.iter().map(|&(s, l)| ((s * scale + shift).exp(), l)).collect();
        prop_assert!((roc_auc(&transformed).unwrap() - auc).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&auc));
    }

    #[test]
    fn mcc_range_and_symmetry(m in confusion()) {
        let report = metrics_from_confusion(ConfusionMatrix(m)).unwrap();
        let swapped = metrics_from_confusion(ConfusionMatrix([[m[1][1], m[1][0]], [m[0][1], m[0][0]]])).unwrap();
        for row in report.classes.iter().chain([&report.weighted_avg]) {
            prop_assert!((-1.0..=1.0).contains(&row.mcc), "mcc {}", row.mcc);
            prop_assert!((0.0..=1.0).contains(&row.precision));
        }
        prop_assert!((report.classes[1].mcc - swapped.classes[0].mcc).abs() < 1e-12);
        prop_assert!((report.classes[0].mcc - swapped.classes[1].mcc).abs() < 1e-12);
    }

    #[test]
    fn confusion_recovered_from_recall(m in confusion()) {
        let report = metrics_from_confusion(ConfusionMatrix(m)).unwrap();
        for class in 0..2 {
            let size = m[class][0] + m[class][1];
            if size == 0 {
                continue;
            }
            let hits = (report.classes[class].recall * size as f64).round() as u64;
            prop_assert_eq!(hits, m[class][class]);
        }
        prop_assert!((report.accuracy - (m[0][0] + m[1][1]) as f64 / m.iter().flatten().sum::<u64>() as f64).abs() < 1e-12);
    }

    #[test]
    fn dedupe_idempotent(lists in site_lists()) {
        let once = dedupe_union(&lists);
        prop_assert_eq!(dedupe_union(&[once.clone()]), once.clone());
        let total: usize = lists.iter().map(Vec::len).sum();
        prop_assert!(once.len() <= total);
        let mut hosts: Vec<String> = lists.iter().flatten().map(SiteRecord::host).collect();
        hosts.sort();
        hosts.dedup();
        prop_assert_eq!(once.len(), hosts.len());
    }

    #[test]
    fn dataset_csv_round_trip(rows in dataset_rows()) {
        let ds = LabeledDataset::new(rows);
        let bytes = write_dataset(&ds);
        let back = read_dataset(&bytes).unwrap();
        prop_assert_eq!(&back, &ds);
        prop_assert_eq!(write_dataset(&back), bytes);
    }

    #[test]
    fn gains_are_non_negative(rows in dataset_rows(), f in 0usize..14, t in -600i64..600) {
        let ds = LabeledDataset::new(rows);
        if ds.labeled_rows().count() >= 2 {
            let name = COUNT_FEATURES[f];
            let threshold = t as f64 + 0.5;
            prop_assert!(info_gain(&ds, name, threshold).unwrap() >= 0.0);
            let everything_left = ds.labeled_rows().all(|(r, _)| r.diffs[f] as f64 <= threshold);
            let everything_right = ds.labeled_rows().all(|(r, _)| r.diffs[f] as f64 > threshold);
            if everything_left || everything_right {
                prop_assert_eq!(gain_ratio(&ds, name, threshold).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn region_rows_are_consistent(
        runs in prop::collection::vec(prop::collection::vec(any::<bool>(), 0..30), 1..4),
        verdicts in prop::collection::vec(any::<bool>(), 30),
    ) {
        let verified: BTreeMap<String, bool> =
            verdicts.iter().enumerate().map(|(i, &v)| (format!("s{i}.de"), v)).collect();
        let runs: Vec<(String, Vec<Prediction>)> = runs
            .iter()
            .enumerate()
            .map(|(k, flags)| {
                let preds = flags
                    .iter()
                    .enumerate()
                    .map(|(i, &f)| Prediction { site: format!("s{i}.de"), label: Label::from(f), score: 0.5 })
                    .collect();
                (format!("c{k}"), preds)
            })
            .collect();
        let report = aggregate_region("de", &runs, &verified).unwrap();
        for row in &report.rows {
            prop_assert_eq!(row.tp + row.fp, row.predicted);
            prop_assert!((0.0..=1.0).contains(&row.precision));
            prop_assert_eq!(row.precision_undefined, row.predicted == 0);
        }
        prop_assert!((0.0..=1.0).contains(&report.positive_rate));
    }

    #[test]
    fn manual_labels_win(
        heuristic in prop::collection::btree_map(0u8..10, 0u8..4, 0..10),
        manual in prop::collection::btree_map(0u8..10, 0u8..4, 0..10),
    ) {
        let cat = |c: u8| [ResponseCategory::Cost, ResponseCategory::Invisibility, ResponseCategory::Availability, ResponseCategory::None][c as usize];
        let label = |c: u8, source| ResponseLabel { category: cat(c), evidence: "e".into(), source };
        let h: Vec<(String, ResponseLabel)> =
            heuristic.iter().map(|(&k, &c)| (format!("h{k}.com"), label(c, LabelSource::Heuristic))).collect();
        let m: BTreeMap<String, ResponseLabel> =
            manual.iter().map(|(&k, &c)| (format!("h{k}.com"), label(c, LabelSource::Manual))).collect();
        let merged = merge_labels(h, &m);
        for (host, l) in &merged {
            if let Some(want) = m.get(host) {
                prop_assert_eq!(l, want);
            } else {
                prop_assert_eq!(l.source, LabelSource::Heuristic);
            }
        }
        let keys: std::collections::BTreeSet<u8> = heuristic.keys().chain(manual.keys()).copied().collect();
        prop_assert_eq!(merged.len(), keys.len());
    }
}
