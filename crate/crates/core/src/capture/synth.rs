//! Simulated captures and a seeded generator of labeled fixture corpora.

use std::fmt::Write as _;
use std::path::Path;

use chrono::DateTime;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{save_pair, CaptureError, CapturePair, CaptureStatus, PageSnapshot, SnapshotMode, Variant};
use crate::filterlist::{simulate_blocking, FilterList, FilterRule};
use crate::ingest::{Liveness, SiteRecord};

/// Filter list matching the ad markup emitted by the corpus generator.
pub const MINI_FILTER_LIST: &str = include_str!("../../fixtures/mini_list.txt");

fn simulated(url: &str, variant: Variant, html: String) -> PageSnapshot {
    PageSnapshot {
        requested_url: url.to_string(),
        final_url: url.to_string(),
        variant,
        html,
        screenshot: None,
        captured_at: DateTime::UNIX_EPOCH,
        mode: SnapshotMode::Simulated,
    }
}

fn append_to_body(html: &str, fragment: &str) -> String {
    match html.rfind("</body>") {
        Some(i) => format!("{}{}{}", &html[..i], fragment, &html[i..]),
        None => format!("{html}{fragment}"),
    }
}

/// Builds a pair whose blocked variant is the baseline run through
/// [`simulate_blocking`], with `wall_html` appended to the body when given.
pub fn synth_pair(
    site: &SiteRecord,
    baseline_html: &str,
    list: &FilterList,
    wall_html: Option<&str>,
) -> CapturePair {
    synth_reloaded_pair(site, baseline_html, baseline_html, list, wall_html)
}

/// Like [`synth_pair`], but the blocked variant starts from `reloaded_html`,
/// the page as served on a second load.
pub fn synth_reloaded_pair(
    site: &SiteRecord,
    baseline_html: &str,
    reloaded_html: &str,
    list: &FilterList,
    wall_html: Option<&str>,
) -> CapturePair {
    let blocked = simulate_blocking(reloaded_html, &site.url, list).html;
    let blocked = match wall_html {
        Some(wall) => append_to_body(&blocked, wall),
        None => blocked,
    };
    let mut site = site.clone();
    site.alive = Liveness::Alive;
    CapturePair {
        baseline: Some(simulated(&site.url, Variant::Baseline, baseline_html.to_string())),
        blocked: Some(simulated(&site.url, Variant::Blocked, blocked)),
        site,
        status: CaptureStatus::Ok,
    }
}

/// Shape of a generated corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusSpec {
    pub pages: usize,
    /// Pages whose blocked variant carries an anti-adblock wall.
    pub walls: usize,
    /// Pages recorded as dead (never walls).
    pub dead: usize,
    pub seed: u64,
    pub host_prefix: String,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        CorpusSpec {
            pages: 200,
            walls: 40,
            dead: 0,
            seed: 7,
            host_prefix: "site".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticSite {
    pub pair: CapturePair,
    pub planted_wall: bool,
}

const WORDS: &[&str] = &[
    "news", "market", "city", "council", "weather", "report", "sports", "team", "season",
    "election", "policy", "science", "energy", "travel", "music", "culture", "health", "study",
    "local", "world", "business", "price", "update", "review", "video", "today", "week",
    "interview", "data", "climate", "school", "film", "game", "league", "budget", "traffic",
];

fn sentence(rng: &mut ChaCha8Rng, min: usize, max: usize) -> String {
    let n = rng.gen_range(min..=max);
    (0..n)
        .map(|_| *WORDS.choose(rng).expect("non-empty"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn ad_slot(rng: &mut ChaCha8Rng, i: usize) -> String {
    match rng.gen_range(0..8) {
        0 => format!(
            r#"<div class="ad"><a href="http://ads.example.com/click?{i}"><img src="http://ads.example.com/b{i}.png"></a></div>"#
        ),
        1 => r#"<script src="http://adserver.example/load.js"></script>"#.to_string(),
        2 => format!(r#"<iframe src="http://ads.example.com/frame/{i}"></iframe>"#),
        3 => r#"<div id="top-ad"><p>Anzeige</p></div>"#.to_string(),
        4 => format!(
            r#"<div class="ad-banner"><h3>Sponsored</h3><p>{}</p><table><tr><td>offer</td></tr></table></div>"#,
            sentence(rng, 3, 8)
        ),
        5 => format!(
            r#"<div class="sponsored-box"><h2>{}</h2><p>{}</p></div>"#,
            sentence(rng, 2, 5),
            sentence(rng, 4, 12)
        ),
        6 => format!(
            r#"<div class="ad"><h1>{}</h1><a href="http://ads.example.com/takeover?{i}">Anzeige</a></div>"#,
            sentence(rng, 1, 3)
        ),
        _ => format!(r#"<img src="http://media.adnet.example/px{i}.gif">"#),
    }
}

// Replaced per load by a headline ticker of varying length, so two loads of
// the same page differ the way live pages do.
const LIVE_MARK: &str = "<!--live-->";

fn ticker(rng: &mut ChaCha8Rng) -> String {
    let mut out = String::from(r#"<ul class="ticker">"#);
    for j in 0..rng.gen_range(2..=8) {
        let _ = write!(out, r#"<li><a href="/live/{j}">{}</a></li>"#, sentence(rng, 3, 8));
    }
    out.push_str("</ul>");
    out
}

fn generate_page(rng: &mut ChaCha8Rng, about_adblock: bool) -> String {
    let mut body = String::new();
    let _ = write!(body, "<header><nav>");
    for i in 0..rng.gen_range(3..25) {
        let _ = write!(body, r#"<a href="/section/{i}">{}</a>"#, sentence(rng, 1, 2));
    }
    let _ = write!(body, "</nav></header><main>{LIVE_MARK}");
    for _ in 0..rng.gen_range(0..=2) {
        let _ = write!(body, "<h1>{}</h1>", sentence(rng, 2, 6));
    }
    let ads = rng.gen_range(0..=6);
    let sections = rng.gen_range(2..8);
    for s in 0..sections {
        let _ = write!(body, r#"<div class="story">"#);
        if rng.gen_bool(0.6) {
            let _ = write!(body, "<h2>{}</h2>", sentence(rng, 2, 7));
        }
        if rng.gen_bool(0.3) {
            let _ = write!(body, "<h3>{}</h3>", sentence(rng, 2, 5));
        }
        for _ in 0..rng.gen_range(1..5) {
            let _ = write!(body, "<p>{}</p>", sentence(rng, 5, 40));
        }
        if rng.gen_bool(0.5) {
            let _ = write!(body, r#"<img src="/img/{s}.jpg">"#);
        }
        if rng.gen_bool(0.1) {
            let _ = write!(body, "<table><tr><td>{}</td></tr></table>", sentence(rng, 1, 4));
        }
        if rng.gen_bool(0.1) {
            let _ = write!(body, r#"<iframe src="https://video.example/embed/{s}"></iframe>"#);
        }
        let _ = write!(body, "</div>");
        if s < ads {
            body.push_str(&ad_slot(rng, s));
        }
    }
    if about_adblock {
        let _ = write!(
            body,
            "<p>Survey: adblock usage keeps rising among younger readers, {}</p>",
            sentence(rng, 3, 10)
        );
    }
    let _ = write!(body, "</main><footer><p>{}</p></footer>", sentence(rng, 3, 8));
    format!("<!DOCTYPE html><html><head><title>{}</title></head><body>{body}</body></html>", sentence(rng, 2, 4))
}

/// Every n-th planted wall also hides the page's main content.
const COLLAPSE_EVERY: usize = 4;

const WALLS: &[&str] = &[
    r#"<div class="adblock-wall"><h2>Adblocker detected</h2><p>Please disable your adblocker or whitelist this site to continue reading.</p><a href="/help/adblock">How do I do that?</a></div>"#,
    r#"<div id="abp-notice"><p>We noticed you are using an ad blocker. Subscribe or pay to view up to 90% less adverts.</p><a href="/abo">Abo</a></div>"#,
    r#"<div class="overlay"><div class="modal"><h3>Ad-block enabled</h3><p>Our journalism is funded by advertising. Please add us to your whitelist.</p><img src="/img/sad.png"></div></div>"#,
    r#"<table class="notice"><tr><td><p>This site is supported by ads. Detected by PageFair.</p></td></tr></table>"#,
    r#"<noscript><div class="wall"><p>Sie verwenden einen Adblocker. Bitte deaktivieren Sie ihn.</p></div></noscript>"#,
];

/// Generates `spec.pages` sites. Exactly `spec.walls` get a wall in their
/// blocked variant; every fourth wall also hides the page's main content.
/// Dead sites are drawn from the non-wall pages.
pub fn generate_corpus(spec: &CorpusSpec, list: &FilterList) -> Result<Vec<SyntheticSite>, CaptureError> {
    if spec.walls + spec.dead > spec.pages {
        return Err(CaptureError::Parameter(format!(
            "walls ({}) + dead ({}) exceed pages ({})",
            spec.walls, spec.dead, spec.pages
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut order: Vec<usize> = (0..spec.pages).collect();
    order.shuffle(&mut rng);
    let mut role = vec![0u8; spec.pages];
    for &i in &order[..spec.walls] {
        role[i] = 1;
    }
    for &i in &order[spec.walls..spec.walls + spec.dead] {
        role[i] = 2;
    }

    let mut collapse_list = list.clone();
    collapse_list.rules.push(FilterRule::parse("##main", 0));

    let mut out = Vec::with_capacity(spec.pages);
    let mut walls_placed = 0;
    for (i, &r) in role.iter().enumerate() {
        let host = format!("{}{:03}.example", spec.host_prefix, i + 1);
        let site = SiteRecord::new(&format!("http://{host}/"), i as u32 + 1, "synthetic")
            .map_err(|e| CaptureError::Parameter(e.to_string()))?;
        // Articles that merely mention ad blocking stay on wall-free pages:
        // a wall on such a page never raises the keyword flag.
        let about_adblock = rng.gen_bool(0.1) && r != 1;
        let page = generate_page(&mut rng, about_adblock);
        let baseline = page.replace(LIVE_MARK, &ticker(&mut rng));
        let reloaded = page.replace(LIVE_MARK, &ticker(&mut rng));
        let pair = match r {
            1 => {
                let wall = WALLS[rng.gen_range(0..WALLS.len())];
                let collapse = walls_placed % COLLAPSE_EVERY == COLLAPSE_EVERY - 1;
                walls_placed += 1;
                let list = if collapse { &collapse_list } else { list };
                synth_reloaded_pair(&site, &baseline, &reloaded, list, Some(wall))
            }
            2 => CapturePair::dead(site),
            _ => synth_reloaded_pair(&site, &baseline, &reloaded, list, None),
        };
        out.push(SyntheticSite {
            pair,
            planted_wall: r == 1,
        });
    }
    Ok(out)
}

/// Saves a generated corpus under `root` and writes `labels.csv`
/// (`host,verdict`) next to the site directories.
pub fn write_corpus(sites: &[SyntheticSite], root: &Path) -> Result<(), CaptureError> {
    std::fs::create_dir_all(root).map_err(|source| CaptureError::Io {
        path: root.display().to_string(),
        source,
    })?;
    let mut labels = String::from("host,verdict\n");
    for s in sites {
        save_pair(&s.pair, root)?;
        if s.pair.status == CaptureStatus::Ok {
            let _ = writeln!(labels, "{},{}", s.pair.site.host(), s.planted_wall);
        }
    }
    let path = root.join("labels.csv");
    std::fs::write(&path, labels).map_err(|source| CaptureError::Io {
        path: path.display().to_string(),
        source,
    })
}
