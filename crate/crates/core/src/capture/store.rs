//! On-disk snapshot layout:
//! `<root>/<host>/{baseline.html, blocked.html, baseline.png, blocked.png, meta.json}`.

use std::fs;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{CaptureError, CapturePair, CaptureStatus, PageSnapshot, SnapshotMode, Variant};
use crate::ingest::{normalize_host, Liveness, SiteRecord};

pub const META_FILE: &str = "meta.json";

#[derive(Debug, Serialize, Deserialize)]
struct VariantMeta {
    requested_url: String,
    final_url: String,
    captured_at: DateTime<Utc>,
    mode: SnapshotMode,
    screenshot: bool,
}

#[derive(Debug, Serialize, Deserialize)]
struct PairMeta {
    site: SiteRecord,
    #[serde(flatten)]
    status: CaptureStatus,
    baseline: Option<VariantMeta>,
    blocked: Option<VariantMeta>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CaptureError + '_ {
    move |source| CaptureError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn html_path(dir: &Path, variant: Variant) -> PathBuf {
    dir.join(format!("{variant}.html"))
}

fn png_path(dir: &Path, variant: Variant) -> PathBuf {
    dir.join(format!("{variant}.png"))
}

/// Writes the pair under `<root>/<normalized host>/` and returns that path.
pub fn save_pair(pair: &CapturePair, root: &Path) -> Result<PathBuf, CaptureError> {
    let dir = root.join(pair.site.host());
    fs::create_dir_all(&dir).map_err(io_err(&dir))?;

    let variant_meta = |snapshot: Option<&PageSnapshot>| -> Result<_, CaptureError> {
        let Some(s) = snapshot else {
            return Ok(None);
        };
        let path = html_path(&dir, s.variant);
        fs::write(&path, &s.html).map_err(io_err(&path))?;
        let png = png_path(&dir, s.variant);
        if let Some(bytes) = &s.screenshot {
            fs::write(&png, bytes).map_err(io_err(&png))?;
        } else if png.exists() {
            fs::remove_file(&png).map_err(io_err(&png))?;
        }
        Ok(Some(VariantMeta {
            requested_url: s.requested_url.clone(),
            final_url: s.final_url.clone(),
            captured_at: s.captured_at,
            mode: s.mode,
            screenshot: s.screenshot.is_some(),
        }))
    };
    let meta = PairMeta {
        site: pair.site.clone(),
        status: pair.status.clone(),
        baseline: variant_meta(pair.baseline.as_ref())?,
        blocked: variant_meta(pair.blocked.as_ref())?,
    };
    let path = dir.join(META_FILE);
    let json = serde_json::to_string_pretty(&meta).expect("metadata serializes");
    fs::write(&path, json + "\n").map_err(io_err(&path))?;
    Ok(dir)
}

/// Loads the pair saved for `site` under `root`.
pub fn load_pair(root: &Path, site: &SiteRecord) -> Result<CapturePair, CaptureError> {
    load_pair_dir(&root.join(normalize_host(&site.url)))
}

fn read_snapshot(
    dir: &Path,
    variant: Variant,
    meta: &VariantMeta,
) -> Result<PageSnapshot, CaptureError> {
    let path = html_path(dir, variant);
    let html = fs::read_to_string(&path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => CaptureError::MissingVariant {
            host: dir_host(dir),
            variant,
        },
        _ => io_err(&path)(e),
    })?;
    let screenshot = if meta.screenshot {
        let png = png_path(dir, variant);
        Some(fs::read(&png).map_err(io_err(&png))?)
    } else {
        None
    };
    Ok(PageSnapshot {
        requested_url: meta.requested_url.clone(),
        final_url: meta.final_url.clone(),
        variant,
        html,
        screenshot,
        captured_at: meta.captured_at,
        mode: meta.mode,
    })
}

fn dir_host(dir: &Path) -> String {
    dir.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Loads one site directory. Without `meta.json` the directory is treated
/// as a hand-saved offline pair of `baseline.html` and `blocked.html`.
pub fn load_pair_dir(dir: &Path) -> Result<CapturePair, CaptureError> {
    let meta_path = dir.join(META_FILE);
    if !meta_path.exists() {
        return load_bare_dir(dir);
    }
    let text = fs::read_to_string(&meta_path).map_err(io_err(&meta_path))?;
    let meta: PairMeta = serde_json::from_str(&text).map_err(|e| CaptureError::Meta {
        path: meta_path.display().to_string(),
        message: e.to_string(),
    })?;
    if meta.status != CaptureStatus::Ok {
        return Ok(CapturePair {
            site: meta.site,
            baseline: None,
            blocked: None,
            status: meta.status,
        });
    }
    let host = dir_host(dir);
    let load = |variant, m: &Option<VariantMeta>| match m {
        Some(m) => read_snapshot(dir, variant, m),
        None => Err(CaptureError::MissingVariant {
            host: host.clone(),
            variant,
        }),
    };
    let baseline = load(Variant::Baseline, &meta.baseline)?;
    let blocked = load(Variant::Blocked, &meta.blocked)?;
    Ok(CapturePair {
        site: meta.site,
        baseline: Some(baseline),
        blocked: Some(blocked),
        status: CaptureStatus::Ok,
    })
}

fn load_bare_dir(dir: &Path) -> Result<CapturePair, CaptureError> {
    let host = dir_host(dir);
    let url = format!("http://{host}/");
    let mut site = SiteRecord::new(&url, 1, "offline").map_err(|e| CaptureError::Meta {
        path: dir.display().to_string(),
        message: e.to_string(),
    })?;
    site.alive = Liveness::Alive;
    let meta = |variant| VariantMeta {
        requested_url: url.clone(),
        final_url: url.clone(),
        captured_at: DateTime::UNIX_EPOCH,
        mode: SnapshotMode::Offline,
        screenshot: png_path(dir, variant).exists(),
    };
    let baseline = read_snapshot(dir, Variant::Baseline, &meta(Variant::Baseline))?;
    let blocked = read_snapshot(dir, Variant::Blocked, &meta(Variant::Blocked))?;
    Ok(CapturePair {
        site,
        baseline: Some(baseline),
        blocked: Some(blocked),
        status: CaptureStatus::Ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ok_pair() -> CapturePair {
        let site = SiteRecord::new("https://www.Example.com/", 3, "DE").unwrap();
        let mut base = PageSnapshot::new(&site.url, "https://www.example.com/", Variant::Baseline, "<p>a</p>", SnapshotMode::Live);
        base.screenshot = Some(vec![0x89, b'P', b'N', b'G']);
        let blocked = PageSnapshot::new(&site.url, "https://www.example.com/adblock", Variant::Blocked, "<p>wall</p>", SnapshotMode::Live);
        CapturePair {
            site,
            baseline: Some(base),
            blocked: Some(blocked),
            status: CaptureStatus::Ok,
        }
    }

    #[test]
    fn round_trip_ok_pair() {
        let tmp = tempfile::tempdir().unwrap();
        let pair = ok_pair();
        let dir = save_pair(&pair, tmp.path()).unwrap();
        assert!(dir.ends_with("example.com"));
        let loaded = load_pair(tmp.path(), &pair.site).unwrap();
        assert_eq!(loaded, pair);
    }

    #[test]
    fn missing_variant_is_named() {
        let tmp = tempfile::tempdir().unwrap();
        let pair = ok_pair();
        let dir = save_pair(&pair, tmp.path()).unwrap();
        fs::remove_file(dir.join("blocked.html")).unwrap();
        match load_pair_dir(&dir) {
            Err(CaptureError::MissingVariant { variant, host }) => {
                assert_eq!(variant, Variant::Blocked);
                assert_eq!(host, "example.com");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bare_directory_with_baseline_only() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path().join("site.example");
        fs::create_dir(&dir).unwrap();
        fs::write(dir.join("baseline.html"), "<p>x</p>").unwrap();
        assert!(matches!(
            load_pair_dir(&dir),
            Err(CaptureError::MissingVariant { variant: Variant::Blocked, .. })
        ));
        fs::write(dir.join("blocked.html"), "<p>y</p>").unwrap();
        let pair = load_pair_dir(&dir).unwrap();
        assert_eq!(pair.status, CaptureStatus::Ok);
        assert_eq!(pair.blocked.unwrap().mode, SnapshotMode::Offline);
    }

    #[test]
    fn dead_pair_reads_no_snapshots() {
        let tmp = tempfile::tempdir().unwrap();
        let site = SiteRecord::new("gone.example", 9, "DE").unwrap();
        let dir = save_pair(&CapturePair::dead(site.clone()), tmp.path()).unwrap();
        // A stray html file must not be read for a dead pair.
        fs::write(dir.join("baseline.html"), "<p>stale</p>").unwrap();
        let loaded = load_pair(tmp.path(), &site).unwrap();
        assert_eq!(loaded.status, CaptureStatus::Dead);
        assert!(loaded.baseline.is_none() && loaded.blocked.is_none());
        assert_eq!(loaded.site.alive, Liveness::Dead);
    }

    #[test]
    fn failed_status_round_trips() {
        let tmp = tempfile::tempdir().unwrap();
        let site = SiteRecord::new("flaky.example", 1, "DE").unwrap();
        save_pair(&CapturePair::failed(site.clone(), "blocked: navigate"), tmp.path()).unwrap();
        let loaded = load_pair(tmp.path(), &site).unwrap();
        assert_eq!(loaded.status, CaptureStatus::Failed("blocked: navigate".into()));
    }
}
