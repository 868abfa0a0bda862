use csv::{ReaderBuilder, StringRecord, Terminator, WriterBuilder};

use super::IngestError;
use crate::features::{FeatureVector, Label, COUNT_FEATURES, FEATURE_NAMES};

/// Exact header of the labeled dataset CSV.
pub const DATASET_HEADER: [&str; 18] = [
    "site", "a", "div", "h1", "h2", "h3", "img", "table", "p", "iframe", "textnodes", "tags",
    "lines", "words", "chars", "keyword", "url_change", "label",
];

/// Feature rows plus the ordered list of columns a learner should use.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledDataset {
    pub schema: Vec<String>,
    pub rows: Vec<FeatureVector>,
}

impl Default for LabeledDataset {
    fn default() -> Self {
        LabeledDataset {
            schema: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }
}

impl LabeledDataset {
    pub fn new(rows: Vec<FeatureVector>) -> Self {
        LabeledDataset {
            rows,
            ..Default::default()
        }
    }

    /// Restricts the learner-visible columns. Names must be feature columns.
    pub fn with_schema<S: AsRef<str>>(mut self, schema: &[S]) -> Result<Self, IngestError> {
        let mut names = Vec::with_capacity(schema.len());
        for name in schema {
            let name = name.as_ref();
            if !FEATURE_NAMES.contains(&name) {
                return Err(IngestError::Parameter(format!("unknown feature {name:?}")));
            }
            if names.iter().any(|n| n == name) {
                return Err(IngestError::Parameter(format!("duplicate feature {name:?}")));
            }
            names.push(name.to_string());
        }
        if names.is_empty() {
            return Err(IngestError::Parameter("empty schema".into()));
        }
        self.schema = names;
        Ok(self)
    }

    /// The row's values in schema order.
    pub fn row_values(&self, row: &FeatureVector) -> Vec<f64> {
        self.schema
            .iter()
            .map(|n| row.value(n).expect("schema names are validated"))
            .collect()
    }

    pub fn labeled_rows(&self) -> impl Iterator<Item = (&FeatureVector, bool)> {
        self.rows
            .iter()
            .filter_map(|r| r.label.as_bool().map(|l| (r, l)))
    }
}

fn row_err(row: usize, message: impl Into<String>) -> IngestError {
    IngestError::Dataset {
        row,
        message: message.into(),
    }
}

/// Parses the dataset CSV. Rows are numbered from 1 (the header is row 0).
pub fn read_dataset(csv: &[u8]) -> Result<LabeledDataset, IngestError> {
    let mut reader = ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(csv);
    let mut records = reader.records();
    let header = match records.next() {
        Some(h) => h.map_err(|e| row_err(0, e.to_string()))?,
        None => return Err(row_err(0, "missing header")),
    };
    if header.iter().ne(DATASET_HEADER.iter().copied()) {
        return Err(row_err(
            0,
            format!("header mismatch: expected {}", DATASET_HEADER.join(",")),
        ));
    }

    let mut rows = Vec::new();
    for (i, record) in records.enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| row_err(row, e.to_string()))?;
        rows.push(parse_row(row, &record)?);
    }
    Ok(LabeledDataset::new(rows))
}

fn parse_row(row: usize, record: &StringRecord) -> Result<FeatureVector, IngestError> {
    if record.len() != DATASET_HEADER.len() {
        return Err(row_err(
            row,
            format!("expected {} cells, found {}", DATASET_HEADER.len(), record.len()),
        ));
    }
    let mut diffs = [0i64; 14];
    for (i, name) in COUNT_FEATURES.iter().enumerate() {
        let cell = &record[i + 1];
        diffs[i] = cell
            .parse()
            .map_err(|_| row_err(row, format!("column {name}: not an integer: {cell:?}")))?;
    }
    let keyword = match &record[15] {
        "0" => false,
        "1" => true,
        other => return Err(row_err(row, format!("column keyword: expected 0/1, got {other:?}"))),
    };
    let url_change = match &record[16] {
        "no" => false,
        "yes" => true,
        other => {
            return Err(row_err(row, format!("column url_change: expected yes/no, got {other:?}")))
        }
    };
    let label: Label = record[17].parse().map_err(|e: String| row_err(row, e))?;
    Ok(FeatureVector {
        site: record[0].to_string(),
        diffs,
        keyword,
        url_change,
        label,
    })
}

/// Serializes the dataset: comma separated, LF line endings, header first.
/// All feature columns are written regardless of the active schema.
pub fn write_dataset(ds: &LabeledDataset) -> Vec<u8> {
    let mut writer = WriterBuilder::new()
        .terminator(Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    writer.write_record(DATASET_HEADER).expect("in-memory write");
    for row in &ds.rows {
        let mut cells: Vec<String> = Vec::with_capacity(DATASET_HEADER.len());
        cells.push(row.site.clone());
        cells.extend(row.diffs.iter().map(i64::to_string));
        cells.push(if row.keyword { "1" } else { "0" }.into());
        cells.push(if row.url_change { "yes" } else { "no" }.into());
        cells.push(row.label.token().into());
        writer.write_record(&cells).expect("in-memory write");
    }
    writer.into_inner().expect("in-memory flush")
}

#[cfg(test)]
mod tests {
    use super::*;

    const CANONICAL: &str = "\
site,a,div,h1,h2,h3,img,table,p,iframe,textnodes,tags,lines,words,chars,keyword,url_change,label
example.com,0,2,0,1,0,-3,0,1,0,2,4,3,41,230,1,no,TRUE
news.example,-4,-1,0,0,0,-2,0,0,-1,0,-9,0,0,0,0,yes,?
";

    #[test]
    fn canonical_round_trip() {
        let ds = read_dataset(CANONICAL.as_bytes()).unwrap();
        assert_eq!(ds.rows.len(), 2);
        assert_eq!(ds.rows[0].diff("img"), Some(-3));
        assert!(ds.rows[0].keyword);
        assert_eq!(ds.rows[1].label, Label::Unlabeled);
        assert_eq!(write_dataset(&ds), CANONICAL.as_bytes());
    }

    #[test]
    fn url_change_tokens() {
        let ds = read_dataset(CANONICAL.as_bytes()).unwrap();
        assert!(!ds.rows[0].url_change);
        assert!(ds.rows[1].url_change);
    }

    #[test]
    fn unknown_label_names_row() {
        let bad = CANONICAL.replace(",no,TRUE", ",no,MAYBE");
        match read_dataset(bad.as_bytes()) {
            Err(IngestError::Dataset { row, message }) => {
                assert_eq!(row, 1);
                assert!(message.contains("MAYBE"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_integer_cell() {
        let bad = CANONICAL.replace("news.example,-4", "news.example,4.5");
        assert!(matches!(
            read_dataset(bad.as_bytes()),
            Err(IngestError::Dataset { row: 2, .. })
        ));
    }

    #[test]
    fn header_mismatch() {
        let bad = CANONICAL.replacen("site,a,div", "site,div,a", 1);
        assert!(matches!(
            read_dataset(bad.as_bytes()),
            Err(IngestError::Dataset { row: 0, .. })
        ));
        assert!(read_dataset(b"").is_err());
    }

    #[test]
    fn header_only_is_empty_dataset() {
        let header = format!("{}\n", DATASET_HEADER.join(","));
        let ds = read_dataset(header.as_bytes()).unwrap();
        assert!(ds.rows.is_empty());
        assert_eq!(write_dataset(&ds), header.as_bytes());
    }

    #[test]
    fn schema_selection() {
        let ds = read_dataset(CANONICAL.as_bytes()).unwrap();
        let ds = ds.with_schema(&["lines", "keyword"]).unwrap();
        assert_eq!(ds.row_values(&ds.rows[0]), vec![3.0, 1.0]);
        assert!(LabeledDataset::default().with_schema(&["site"]).is_err());
        assert!(LabeledDataset::default().with_schema(&["a", "a"]).is_err());
    }
}
