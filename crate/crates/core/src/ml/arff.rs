use std::fmt::Write as _;

use super::MlError;
use crate::features::{FeatureVector, Label, COUNT_FEATURES, FEATURE_NAMES};
use crate::ingest::LabeledDataset;

const RELATION: &str = "abdetect";
const SITE_COMMENT: &str = "% site ";

fn attribute_type(name: &str) -> &'static str {
    match name {
        "keyword" => "{0,1}",
        "url_change" => "{no,yes}",
        _ => "numeric",
    }
}

fn value_token(row: &FeatureVector, name: &str) -> String {
    match name {
        "keyword" => u8::from(row.keyword).to_string(),
        "url_change" => if row.url_change { "yes" } else { "no" }.to_string(),
        _ => row.diff(name).expect("schema names are validated").to_string(),
    }
}

/// Writes the dataset as ARFF: one attribute per schema column in order,
/// then the nominal `label`. Each data row is preceded by a `% site` comment
/// so site names survive a round trip.
pub fn export_arff(ds: &LabeledDataset) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "@relation {RELATION}");
    out.push('\n');
    for name in &ds.schema {
        let _ = writeln!(out, "@attribute {name} {}", attribute_type(name));
    }
    let _ = writeln!(out, "@attribute label {{FALSE,TRUE}}");
    out.push('\n');
    out.push_str("@data\n");
    for row in &ds.rows {
        let _ = writeln!(out, "{SITE_COMMENT}{}", row.site);
        let mut cells: Vec<String> = ds.schema.iter().map(|n| value_token(row, n)).collect();
        cells.push(row.label.token().to_string());
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn arff_err(line: usize, message: impl Into<String>) -> MlError {
    MlError::Arff {
        line,
        message: message.into(),
    }
}

fn unquote(s: &str) -> &str {
    let s = s.trim();
    if s.len() >= 2 && ((s.starts_with('\'') && s.ends_with('\'')) || (s.starts_with('"') && s.ends_with('"'))) {
        &s[1..s.len() - 1]
    } else {
        s
    }
}

fn set_value(row: &mut FeatureVector, name: &str, token: &str, line: usize) -> Result<(), MlError> {
    let bad = || arff_err(line, format!("bad value {token:?} for {name}"));
    match name {
        "keyword" => {
            row.keyword = match token {
                "1" | "1.0" => true,
                "0" | "0.0" => false,
                _ => return Err(bad()),
            }
        }
        "url_change" => {
            row.url_change = match token {
                "yes" | "1" => true,
                "no" | "0" => false,
                _ => return Err(bad()),
            }
        }
        _ => {
            let v: f64 = token.parse().map_err(|_| bad())?;
            if v.fract() != 0.0 || !v.is_finite() {
                return Err(bad());
            }
            let i = COUNT_FEATURES.iter().position(|f| *f == name).expect("validated");
            row.diffs[i] = v as i64;
        }
    }
    Ok(())
}

/// Parses the ARFF subset written by [`export_arff`]: numeric and nominal
/// attributes named after feature columns plus a nominal `label`, dense data
/// rows, `%` comments. Columns missing from the header stay 0.
pub fn import_arff(text: &str) -> Result<LabeledDataset, MlError> {
    let mut attributes: Vec<String> = Vec::new();
    let mut label_at: Option<usize> = None;
    let mut in_data = false;
    let mut saw_relation = false;
    let mut pending_site: Option<String> = None;
    let mut rows = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(site) = line.strip_prefix(SITE_COMMENT) {
            pending_site = Some(site.trim().to_string());
            continue;
        }
        if line.starts_with('%') {
            continue;
        }
        if !in_data {
            let lower = line.to_ascii_lowercase();
            if lower.starts_with("@relation") {
                saw_relation = true;
            } else if lower.starts_with("@attribute") {
                let rest = line["@attribute".len()..].trim();
                let (name, ty) = split_attribute(rest).ok_or_else(|| arff_err(line_no, "malformed @attribute"))?;
                if name == "label" || name == "class" {
                    if label_at.is_some() {
                        return Err(arff_err(line_no, "duplicate label attribute"));
                    }
                    let ty = ty.replace(' ', "");
                    if ty != "{FALSE,TRUE}" && ty != "{TRUE,FALSE}" {
                        return Err(arff_err(line_no, "label must be nominal {FALSE,TRUE}"));
                    }
                    label_at = Some(attributes.len());
                } else if !FEATURE_NAMES.contains(&name.as_str()) {
                    return Err(arff_err(line_no, format!("unknown attribute {name:?}")));
                } else if attributes.contains(&name) {
                    return Err(arff_err(line_no, format!("duplicate attribute {name:?}")));
                }
                attributes.push(name);
            } else if lower == "@data" {
                if !saw_relation {
                    return Err(arff_err(line_no, "missing @relation"));
                }
                if label_at.is_none() {
                    return Err(arff_err(line_no, "missing label attribute"));
                }
                in_data = true;
            } else {
                return Err(arff_err(line_no, format!("unexpected header line {line:?}")));
            }
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(unquote).collect();
        if cells.len() != attributes.len() {
            return Err(arff_err(
                line_no,
                format!("expected {} values, found {}", attributes.len(), cells.len()),
            ));
        }
        let site = pending_site.take().unwrap_or_else(|| format!("row{}", rows.len() + 1));
        let mut row = FeatureVector::zero(site);
        for (a, (name, token)) in attributes.iter().zip(&cells).enumerate() {
            if Some(a) == label_at {
                row.label = token.parse::<Label>().map_err(|e| arff_err(line_no, e))?;
            } else {
                set_value(&mut row, name, token, line_no)?;
            }
        }
        rows.push(row);
    }
    if !in_data {
        return Err(arff_err(text.lines().count(), "missing @data section"));
    }
    let schema: Vec<&str> = attributes
        .iter()
        .enumerate()
        .filter(|(a, _)| Some(*a) != label_at)
        .map(|(_, n)| n.as_str())
        .collect();
    LabeledDataset::new(rows)
        .with_schema(&schema)
        .map_err(|e| arff_err(0, e.to_string()))
}

fn split_attribute(rest: &str) -> Option<(String, String)> {
    let (name, ty) = if let Some(q) = rest.strip_prefix('\'') {
        let end = q.find('\'')?;
        (&q[..end], &q[end + 1..])
    } else {
        let end = rest.find(char::is_whitespace)?;
        (&rest[..end], &rest[end..])
    };
    let ty = ty.trim();
    if name.is_empty() || ty.is_empty() {
        return None;
    }
    Some((name.to_string(), ty.to_string()))
}
