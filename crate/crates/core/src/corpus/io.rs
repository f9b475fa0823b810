use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::csv::parse_csv;
use super::{AnnotationSet, CorpusSnapshot, LabelSchema, Record};
use crate::error::{Error, Result};

/// Key that carries per-category label arrays in exported lines.
const LABELS_KEY: &str = "labels";
const ID_KEY: &str = "id";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Jsonl,
}

impl Format {
    pub fn from_path(path: &Path) -> Option<Format> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "csv" => Some(Format::Csv),
            "jsonl" | "ndjson" => Some(Format::Jsonl),
            _ => None,
        }
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "jsonl" | "ndjson" => Ok(Format::Jsonl),
            other => Err(Error::InvalidArgument(format!("unknown format {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestOptions {
    /// Text fields, in modeling order. Empty means every non-id column.
    pub fields: Vec<String>,
    pub id_field: Option<String>,
}

fn synthesized_id(row: usize) -> String {
    format!("{row:06}")
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Reads a CSV or JSON-Lines corpus into a snapshot without annotations.
pub fn ingest(path: &Path, format: Format, opts: &IngestOptions) -> Result<CorpusSnapshot> {
    let text = read(path)?;
    CorpusSnapshot::from_records(parse_records(&text, format, opts)?)
}

/// Parses corpus text. One record per row/line.
pub fn parse_records(text: &str, format: Format, opts: &IngestOptions) -> Result<Vec<Record>> {
    let records = match format {
        Format::Csv => parse_csv_records(text, opts)?,
        Format::Jsonl => parse_jsonl_records(text, opts)?,
    };
    let mut seen = BTreeSet::new();
    for (row, (_, r)) in records.iter().enumerate() {
        if !seen.insert(r.id.as_str()) {
            return Err(Error::DuplicateId {
                id: r.id.clone(),
                row: row + 1,
            });
        }
    }
    Ok(records.into_iter().map(|(_, r)| r).collect())
}

fn check_has_text(record: &Record, row: usize) -> Result<()> {
    if record.text_fields.values().all(|v| v.trim().is_empty()) {
        return Err(Error::NoTextFields(format!(
            "row {row} has no non-empty text field"
        )));
    }
    Ok(())
}

fn parse_csv_records(text: &str, opts: &IngestOptions) -> Result<Vec<(usize, Record)>> {
    let rows = parse_csv(text)?;
    let Some((header, data)) = rows.split_first() else {
        return Err(Error::NoTextFields("empty CSV file".into()));
    };
    let col = |name: &str| header.fields.iter().position(|h| h == name);
    let id_col = match &opts.id_field {
        Some(name) => Some(col(name).ok_or_else(|| {
            Error::InvalidArgument(format!("id field {name:?} not in CSV header"))
        })?),
        None => None,
    };
    let field_cols: Vec<(String, usize)> = if opts.fields.is_empty() {
        header
            .fields
            .iter()
            .enumerate()
            .filter(|(i, _)| Some(*i) != id_col)
            .map(|(i, h)| (h.clone(), i))
            .collect()
    } else {
        opts.fields
            .iter()
            .map(|f| {
                col(f)
                    .map(|i| (f.clone(), i))
                    .ok_or_else(|| Error::NoTextFields(format!("field {f:?} not in CSV header")))
            })
            .collect::<Result<_>>()?
    };
    if field_cols.is_empty() {
        return Err(Error::NoTextFields("no text columns".into()));
    }
    let width = header.fields.len();
    let mut out = Vec::with_capacity(data.len());
    for (i, row) in data.iter().enumerate() {
        if row.fields.len() != width {
            return Err(Error::Parse {
                row: row.line,
                column: row.fields.len().min(width) + 1,
                message: format!("expected {width} fields, found {}", row.fields.len()),
            });
        }
        let id = match id_col {
            Some(c) => row.fields[c].clone(),
            None => synthesized_id(i),
        };
        if id.trim().is_empty() {
            return Err(Error::Parse {
                row: row.line,
                column: id_col.map_or(1, |c| c + 1),
                message: "empty record id".into(),
            });
        }
        let record = Record {
            id,
            text_fields: field_cols
                .iter()
                .map(|(name, c)| (name.clone(), row.fields[*c].clone()))
                .collect(),
        };
        check_has_text(&record, row.line)?;
        out.push((row.line, record));
    }
    Ok(out)
}

fn scalar_text(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Null => Some(String::new()),
        Value::Bool(b) => Some(b.to_string()),
        Value::Number(n) => Some(n.to_string()),
        Value::Array(_) | Value::Object(_) => None,
    }
}

fn parse_jsonl_records(text: &str, opts: &IngestOptions) -> Result<Vec<(usize, Record)>> {
    let mut objects = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(line).map_err(|e| Error::Parse {
            row: line_no,
            column: e.column(),
            message: e.to_string(),
        })?;
        let Value::Object(obj) = value else {
            return Err(Error::Parse {
                row: line_no,
                column: 1,
                message: "expected a JSON object".into(),
            });
        };
        objects.push((line_no, obj));
    }
    // An id field that no row carries is treated as absent.
    let id_field = opts
        .id_field
        .as_deref()
        .filter(|f| objects.iter().any(|(_, o)| o.contains_key(*f)));
    let fields: Vec<String> = if opts.fields.is_empty() {
        match objects.first() {
            Some((_, o)) => o
                .iter()
                .filter(|(k, v)| Some(k.as_str()) != id_field && !(k.as_str() == LABELS_KEY && v.is_object()))
                .map(|(k, _)| k.clone())
                .collect(),
            None => Vec::new(),
        }
    } else {
        opts.fields.clone()
    };
    if fields.is_empty() {
        return Err(Error::NoTextFields("no text fields in JSON-Lines input".into()));
    }
    let mut out = Vec::with_capacity(objects.len());
    for (row, (line_no, obj)) in objects.into_iter().enumerate() {
        let id = match id_field {
            Some(f) => match obj.get(f).and_then(scalar_text) {
                Some(id) if !id.trim().is_empty() => id,
                _ => {
                    return Err(Error::Parse {
                        row: line_no,
                        column: 1,
                        message: format!("missing or empty id field {f:?}"),
                    })
                }
            },
            None => synthesized_id(row),
        };
        let mut text_fields = IndexMap::with_capacity(fields.len());
        for f in &fields {
            let v = obj.get(f).ok_or_else(|| Error::Parse {
                row: line_no,
                column: 1,
                message: format!("missing text field {f:?}"),
            })?;
            let s = scalar_text(v).ok_or_else(|| Error::Parse {
                row: line_no,
                column: 1,
                message: format!("text field {f:?} is not a scalar"),
            })?;
            text_fields.insert(f.clone(), s);
        }
        let record = Record { id, text_fields };
        check_has_text(&record, line_no)?;
        out.push((line_no, record));
    }
    Ok(out)
}

type RawAnnotations = IndexMap<String, IndexMap<String, Vec<String>>>;

/// Reads `{"record-id": {"category": ["label", ..]}, ..}` against a schema.
pub fn ingest_annotations(
    path: &Path,
    schema: &LabelSchema,
    snapshot: &CorpusSnapshot,
) -> Result<AnnotationSet> {
    parse_annotations(&read(path)?, schema, |id| snapshot.contains(id))
}

pub fn parse_annotations(
    text: &str,
    schema: &LabelSchema,
    known_record: impl Fn(&str) -> bool,
) -> Result<AnnotationSet> {
    let raw: RawAnnotations = serde_json::from_str(text).map_err(|e| Error::Json(e.to_string()))?;
    build_annotations(raw, schema, known_record)
}

fn build_annotations(
    raw: RawAnnotations,
    schema: &LabelSchema,
    known_record: impl Fn(&str) -> bool,
) -> Result<AnnotationSet> {
    let mut assignments: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for (id, per_cat) in raw {
        if !known_record(&id) {
            return Err(Error::UnknownRecord(id));
        }
        let entry = assignments.entry(id).or_default();
        for (cat, labels) in per_cat {
            let cat = cat.trim();
            if schema.category(cat).is_none() {
                return Err(Error::UnknownCategory(cat.to_string()));
            }
            for label in labels {
                let label = label.trim();
                match schema.category_of(label) {
                    None => return Err(Error::UnknownLabel(label.to_string())),
                    Some(expected) if expected != cat => {
                        return Err(Error::WrongCategory {
                            label: label.to_string(),
                            expected: expected.to_string(),
                            found: cat.to_string(),
                        })
                    }
                    Some(_) => {
                        entry.insert(label.to_string());
                    }
                }
            }
        }
    }
    assignments.retain(|_, s| !s.is_empty());
    Ok(AnnotationSet {
        schema: schema.clone(),
        assignments,
        version: 0,
    })
}

/// Sidecar written next to an export; restores field order and the full
/// schema (including labels nobody carries).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportManifest {
    pub fields: Vec<String>,
    pub schema: LabelSchema,
    pub version: u64,
}

/// `corpus.jsonl` -> `corpus.schema.json`.
pub fn export_schema_path(path: &Path) -> PathBuf {
    path.with_extension("schema.json")
}

/// Writes one JSON object per record (`id`, text fields, `labels`) plus the
/// schema sidecar.
pub fn export(snapshot: &CorpusSnapshot, path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_export_lines(snapshot, &mut w).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))?;
    let sidecar = export_schema_path(path);
    fs::write(&sidecar, export_manifest_json(snapshot)).map_err(|e| Error::io(&sidecar, e))
}

/// Body of the schema sidecar written by [`export`].
pub fn export_manifest_json(snapshot: &CorpusSnapshot) -> String {
    let manifest = ExportManifest {
        fields: snapshot.field_names(),
        schema: snapshot.schema().clone(),
        version: snapshot.version(),
    };
    serde_json::to_string_pretty(&manifest).expect("manifest serializes")
}

/// Serializes the export lines (no sidecar) into `w`.
pub fn write_export_lines(snapshot: &CorpusSnapshot, w: &mut impl Write) -> std::io::Result<()> {
    for r in snapshot.records() {
        let mut obj = serde_json::Map::new();
        obj.insert(ID_KEY.into(), Value::String(r.id.clone()));
        for (k, v) in &r.text_fields {
            if k == ID_KEY || k == LABELS_KEY {
                return Err(std::io::Error::new(
                    std::io::ErrorKind::InvalidData,
                    format!("text field name {k:?} collides with a reserved export key"),
                ));
            }
            obj.insert(k.clone(), Value::String(v.clone()));
        }
        let labels = snapshot.annotations().by_category(&r.id);
        obj.insert(
            LABELS_KEY.into(),
            serde_json::to_value(labels).expect("labels serialize"),
        );
        serde_json::to_writer(&mut *w, &Value::Object(obj))?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Extracts the `labels` objects of an exported file as an annotation set.
pub fn annotations_from_export(
    text: &str,
    schema: &LabelSchema,
    snapshot: &CorpusSnapshot,
) -> Result<AnnotationSet> {
    let mut raw = RawAnnotations::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let v: Value = serde_json::from_str(line).map_err(|e| Error::Parse {
            row: i + 1,
            column: e.column(),
            message: e.to_string(),
        })?;
        let id = v.get(ID_KEY).and_then(scalar_text).ok_or_else(|| Error::Parse {
            row: i + 1,
            column: 1,
            message: "missing id".into(),
        })?;
        let labels = match v.get(LABELS_KEY) {
            Some(l) => serde_json::from_value(l.clone()).map_err(|e| Error::Parse {
                row: i + 1,
                column: 1,
                message: e.to_string(),
            })?,
            None => IndexMap::new(),
        };
        raw.insert(id, labels);
    }
    build_annotations(raw, schema, |id| snapshot.contains(id))
}

/// Re-ingests an export produced by [`export`].
pub fn load_export(path: &Path) -> Result<CorpusSnapshot> {
    let sidecar = export_schema_path(path);
    parse_export(&read(path)?, &read(&sidecar)?)
}

/// Re-ingests export lines given the matching schema sidecar text.
pub fn parse_export(text: &str, manifest_json: &str) -> Result<CorpusSnapshot> {
    let manifest: ExportManifest = serde_json::from_str(manifest_json).map_err(|e| Error::Json(e.to_string()))?;
    let opts = IngestOptions {
        fields: manifest.fields.clone(),
        id_field: Some(ID_KEY.into()),
    };
    let snapshot = CorpusSnapshot::from_records(parse_records(text, Format::Jsonl, &opts)?)?;
    let annotations = annotations_from_export(text, &manifest.schema, &snapshot)?;
    snapshot.with_annotations(annotations)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Category;

    fn opts(fields: &[&str], id: Option<&str>) -> IngestOptions {
        IngestOptions {
            fields: fields.iter().map(|s| s.to_string()).collect(),
            id_field: id.map(str::to_string),
        }
    }

    fn schema() -> LabelSchema {
        LabelSchema::new(vec![
            Category {
                name: "P".into(),
                labels: vec!["too_hot".into(), "leak".into()],
            },
            Category {
                name: "S".into(),
                labels: vec!["replace valve".into()],
            },
        ])
        .unwrap()
    }

    #[test]
    fn csv_with_explicit_ids() {
        let text = "id,DESCRIPTION\nr1,too hot\nr2,leak\nr3,\"valve, broken\"\n";
        let recs = parse_records(text, Format::Csv, &opts(&["DESCRIPTION"], Some("id"))).unwrap();
        let ids: Vec<_> = recs.iter().map(|r| r.id.as_str()).collect();
        assert_eq!(ids, ["r1", "r2", "r3"]);
        assert_eq!(recs[2].text_fields["DESCRIPTION"], "valve, broken");
    }

    #[test]
    fn jsonl_without_id_synthesizes_padded_ids() {
        let text = "{\"question\":\"a b\"}\n{\"question\":\"c\"}\n{\"question\":\"d\"}\n";
        let recs = parse_records(text, Format::Jsonl, &opts(&["question"], Some("id"))).unwrap();
        let ids: Vec<_> = recs.iter().map(|r| r.id.as_str()).collect();
        assert_eq!(ids, ["000000", "000001", "000002"]);
    }

    #[test]
    fn bad_quoting_names_row() {
        let text = "id,DESCRIPTION\nr1,fine\nr2,\"bro\"ken\n";
        let err = parse_records(text, Format::Csv, &opts(&["DESCRIPTION"], Some("id"))).unwrap_err();
        assert!(matches!(err, Error::Parse { row: 3, .. }), "{err}");
        assert!(err.to_string().contains("row 3"));
    }

    #[test]
    fn duplicate_explicit_ids_rejected() {
        let text = "id,d\nr1,a\nr1,b\n";
        let err = parse_records(text, Format::Csv, &opts(&["d"], Some("id"))).unwrap_err();
        assert!(matches!(err, Error::DuplicateId { row: 2, .. }));
    }

    #[test]
    fn missing_field_and_empty_record_rejected() {
        let err = parse_records("id,d\nr1,a\n", Format::Csv, &opts(&["x"], Some("id"))).unwrap_err();
        assert!(matches!(err, Error::NoTextFields(_)));
        let err = parse_records("id,d\nr1,\n", Format::Csv, &opts(&["d"], Some("id"))).unwrap_err();
        assert!(matches!(err, Error::NoTextFields(_)));
        let err = parse_records("{\"q\":\"a\"}\n{\"z\":1}\n", Format::Jsonl, &opts(&["q"], None))
            .unwrap_err();
        assert!(matches!(err, Error::Parse { row: 2, .. }));
    }

    #[test]
    fn field_inference_skips_id() {
        let recs = parse_records("id,a,b\nr1,x,y\n", Format::Csv, &opts(&[], Some("id"))).unwrap();
        assert_eq!(recs[0].text_fields.keys().collect::<Vec<_>>(), ["a", "b"]);
    }

    fn snapshot() -> CorpusSnapshot {
        let recs = parse_records(
            "id,DESCRIPTION\nr1,too hot\nr2,leak\n",
            Format::Csv,
            &opts(&["DESCRIPTION"], Some("id")),
        )
        .unwrap();
        CorpusSnapshot::from_records(recs).unwrap()
    }

    #[test]
    fn annotations_valid_and_deduplicated() {
        let snap = snapshot();
        let ann = parse_annotations(r#"{"r1": {"P": ["too_hot"]}}"#, &schema(), |id| snap.contains(id)).unwrap();
        assert!(ann.has_label("r1", "too_hot"));
        assert_eq!(ann.version, 0);
        let ann = parse_annotations(r#"{"r1": {"P": ["leak", "leak"]}}"#, &schema(), |id| snap.contains(id)).unwrap();
        assert_eq!(ann.label_count("r1"), 1);
    }

    #[test]
    fn annotation_errors() {
        let snap = snapshot();
        let known = |id: &str| snap.contains(id);
        assert!(matches!(
            parse_annotations(r#"{"r9": {"P": ["leak"]}}"#, &schema(), known),
            Err(Error::UnknownRecord(_))
        ));
        assert!(matches!(
            parse_annotations(r#"{"r1": {"P": ["zzz"]}}"#, &schema(), known),
            Err(Error::UnknownLabel(_))
        ));
        assert!(matches!(
            parse_annotations(r#"{"r1": {"S": ["leak"]}}"#, &schema(), known),
            Err(Error::WrongCategory { .. })
        ));
        assert!(matches!(
            parse_annotations("{\"r1\": ", &schema(), known),
            Err(Error::Json(_))
        ));
    }

    #[test]
    fn export_round_trip_with_empty_arrays() {
        let snap = snapshot();
        let ann = parse_annotations(r#"{"r1": {"P": ["too_hot", "leak"]}}"#, &schema(), |id| snap.contains(id)).unwrap();
        let snap = snap.with_annotations(ann).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.jsonl");
        export(&snap, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let second: Value = serde_json::from_str(text.lines().nth(1).unwrap()).unwrap();
        assert_eq!(second["labels"]["P"], serde_json::json!([]));
        assert_eq!(second["labels"]["S"], serde_json::json!([]));
        let back = load_export(&path).unwrap();
        assert_eq!(back.records(), snap.records());
        assert_eq!(back.annotations().assignments, snap.annotations().assignments);
        assert_eq!(back.schema(), snap.schema());
    }

    #[test]
    fn infer_schema_from_annotations() {
        let s = LabelSchema::infer_from_annotations(
            r#"{"r1": {"P": ["too_hot"], "S": []}, "r2": {"P": ["leak", "too_hot"]}}"#,
        )
        .unwrap();
        assert_eq!(s.categories()[0].labels, ["too_hot", "leak"]);
        assert_eq!(s.categories()[1].name, "S");
    }
}
