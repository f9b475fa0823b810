//! Records, label schema, annotations and immutable corpus snapshots.

mod csv;
mod io;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use self::csv::{parse_csv, write_field as write_csv_field, CsvRow};
pub use self::io::{
    annotations_from_export, export, export_manifest_json, export_schema_path, ingest, ingest_annotations, load_export, parse_export,
    parse_annotations, parse_records, write_export_lines, ExportManifest, Format, IngestOptions,
};

/// One technical-text entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Record {
    pub id: String,
    pub text_fields: IndexMap<String, String>,
}

impl Record {
    pub fn new<I, K, V>(id: impl Into<String>, fields: I) -> Self
    where
        I: IntoIterator<Item = (K, V)>,
        K: Into<String>,
        V: Into<String>,
    {
        Record {
            id: id.into(),
            text_fields: fields.into_iter().map(|(k, v)| (k.into(), v.into())).collect(),
        }
    }

    /// Text fed to the model: every field in order, joined by one space.
    pub fn modeling_text(&self) -> String {
        let mut out = String::new();
        for (i, value) in self.text_fields.values().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            out.push_str(value);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Category {
    pub name: String,
    pub labels: Vec<String>,
}

/// The category set and the label set; each label belongs to exactly one
/// category. Category and label order are significant: they define matrix
/// column order and the confidence-vector layout.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "SchemaRepr", into = "SchemaRepr")]
pub struct LabelSchema {
    categories: Vec<Category>,
    label_index: HashMap<String, (usize, usize)>,
}

#[derive(Serialize, Deserialize)]
struct SchemaRepr {
    categories: Vec<Category>,
}

impl TryFrom<SchemaRepr> for LabelSchema {
    type Error = Error;

    fn try_from(value: SchemaRepr) -> Result<Self> {
        LabelSchema::new(value.categories)
    }
}

impl From<LabelSchema> for SchemaRepr {
    fn from(value: LabelSchema) -> Self {
        SchemaRepr {
            categories: value.categories,
        }
    }
}

impl PartialEq for LabelSchema {
    fn eq(&self, other: &Self) -> bool {
        self.categories == other.categories
    }
}

impl Eq for LabelSchema {}

impl Default for LabelSchema {
    fn default() -> Self {
        LabelSchema {
            categories: Vec::new(),
            label_index: HashMap::new(),
        }
    }
}

impl LabelSchema {
    pub fn new(categories: Vec<Category>) -> Result<Self> {
        let mut schema = LabelSchema::default();
        for cat in categories {
            let name = cat.name.trim().to_string();
            schema.add_category(&name)?;
            for label in cat.labels {
                schema.add_label(&name, &label)?;
            }
        }
        Ok(schema)
    }

    /// Parses `{"categories": [{"name": .., "labels": [..]}, ..]}`.
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Json(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("schema serializes")
    }

    /// Builds a schema from the category/label arrays of an annotation file,
    /// in order of first appearance.
    pub fn infer_from_annotations(text: &str) -> Result<Self> {
        let raw: IndexMap<String, IndexMap<String, Vec<String>>> =
            serde_json::from_str(text).map_err(|e| Error::Json(e.to_string()))?;
        let mut schema = LabelSchema::default();
        for per_cat in raw.values() {
            for (cat, labels) in per_cat {
                let cat = cat.trim();
                if schema.category_index(cat).is_none() {
                    schema.add_category(cat)?;
                }
                for label in labels {
                    let label = label.trim();
                    match schema.category_of(label) {
                        None => schema.add_label(cat, label)?,
                        Some(existing) if existing == cat => {}
                        Some(existing) => {
                            return Err(Error::WrongCategory {
                                label: label.to_string(),
                                expected: existing.to_string(),
                                found: cat.to_string(),
                            })
                        }
                    }
                }
            }
        }
        Ok(schema)
    }

    pub fn categories(&self) -> &[Category] {
        &self.categories
    }

    pub fn category_names(&self) -> impl Iterator<Item = &str> {
        self.categories.iter().map(|c| c.name.as_str())
    }

    pub fn category(&self, name: &str) -> Option<&Category> {
        self.category_index(name).map(|i| &self.categories[i])
    }

    pub fn category_index(&self, name: &str) -> Option<usize> {
        self.categories.iter().position(|c| c.name == name)
    }

    pub fn category_of(&self, label: &str) -> Option<&str> {
        self.label_index
            .get(label)
            .map(|&(c, _)| self.categories[c].name.as_str())
    }

    /// (category index, position within category).
    pub fn position(&self, label: &str) -> Option<(usize, usize)> {
        self.label_index.get(label).copied()
    }

    pub fn contains_label(&self, label: &str) -> bool {
        self.label_index.contains_key(label)
    }

    pub fn label_count(&self) -> usize {
        self.label_index.len()
    }

    /// All labels, category by category, in declaration order.
    pub fn labels(&self) -> impl Iterator<Item = (&str, &str)> {
        self.categories
            .iter()
            .flat_map(|c| c.labels.iter().map(move |l| (c.name.as_str(), l.as_str())))
    }

    pub fn add_category(&mut self, name: &str) -> Result<()> {
        let name = name.trim();
        if name.is_empty() {
            return Err(Error::Schema("empty category name".into()));
        }
        if self.category_index(name).is_some() {
            return Err(Error::Schema(format!("duplicate category {name:?}")));
        }
        self.categories.push(Category {
            name: name.to_string(),
            labels: Vec::new(),
        });
        Ok(())
    }

    pub fn add_label(&mut self, category: &str, label: &str) -> Result<()> {
        let label = label.trim();
        if label.is_empty() {
            return Err(Error::Schema(format!("empty label in category {category:?}")));
        }
        let ci = self
            .category_index(category)
            .ok_or_else(|| Error::UnknownCategory(category.to_string()))?;
        if let Some(existing) = self.category_of(label) {
            return Err(Error::Schema(format!(
                "label {label:?} already declared in category {existing:?}"
            )));
        }
        self.categories[ci].labels.push(label.to_string());
        self.label_index
            .insert(label.to_string(), (ci, self.categories[ci].labels.len() - 1));
        Ok(())
    }

    pub fn remove_label(&mut self, label: &str) -> Result<()> {
        let (ci, li) = self
            .position(label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))?;
        self.categories[ci].labels.remove(li);
        self.reindex();
        Ok(())
    }

    fn reindex(&mut self) {
        self.label_index.clear();
        for (ci, cat) in self.categories.iter().enumerate() {
            for (li, label) in cat.labels.iter().enumerate() {
                self.label_index.insert(label.clone(), (ci, li));
            }
        }
    }
}

/// Mapping record id to assigned labels, tied to a schema and a version.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationSet {
    pub schema: LabelSchema,
    pub assignments: BTreeMap<String, BTreeSet<String>>,
    pub version: u64,
}

impl AnnotationSet {
    pub fn empty(schema: LabelSchema) -> Self {
        AnnotationSet {
            schema,
            assignments: BTreeMap::new(),
            version: 0,
        }
    }

    pub fn labels_of(&self, id: &str) -> impl Iterator<Item = &str> {
        self.assignments
            .get(id)
            .into_iter()
            .flat_map(|s| s.iter().map(String::as_str))
    }

    pub fn has_label(&self, id: &str, label: &str) -> bool {
        self.assignments.get(id).is_some_and(|s| s.contains(label))
    }

    pub fn label_count(&self, id: &str) -> usize {
        self.assignments.get(id).map_or(0, BTreeSet::len)
    }

    /// Labels of `id` in `category`, in schema order.
    pub fn labels_in_category(&self, id: &str, category: &str) -> Vec<String> {
        let Some(cat) = self.schema.category(category) else {
            return Vec::new();
        };
        cat.labels
            .iter()
            .filter(|l| self.has_label(id, l))
            .cloned()
            .collect()
    }

    /// Per-category label arrays for one record (every category present).
    pub fn by_category(&self, id: &str) -> IndexMap<String, Vec<String>> {
        self.schema
            .category_names()
            .map(|c| (c.to_string(), self.labels_in_category(id, c)))
            .collect()
    }

    /// Number of records carrying `label`.
    pub fn usage(&self, label: &str) -> usize {
        self.assignments.values().filter(|s| s.contains(label)).count()
    }

    pub fn assign(&mut self, id: &str, label: &str) {
        self.assignments
            .entry(id.to_string())
            .or_default()
            .insert(label.to_string());
    }

    pub fn unassign(&mut self, id: &str, label: &str) -> bool {
        self.assignments
            .get_mut(id)
            .is_some_and(|s| s.remove(label))
    }
}

pub(crate) fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

/// Immutable view of the corpus at one annotation version. Cloning is cheap.
#[derive(Debug, Clone)]
pub struct CorpusSnapshot {
    records: Arc<[Record]>,
    index: Arc<HashMap<String, usize>>,
    annotations: Arc<AnnotationSet>,
    created_at_ms: u64,
}

impl CorpusSnapshot {
    /// Builds a snapshot with no annotations.
    pub fn from_records(records: Vec<Record>) -> Result<Self> {
        let mut index = HashMap::with_capacity(records.len());
        for (i, r) in records.iter().enumerate() {
            if index.insert(r.id.clone(), i).is_some() {
                return Err(Error::DuplicateId {
                    id: r.id.clone(),
                    row: i + 1,
                });
            }
        }
        Ok(CorpusSnapshot {
            records: records.into(),
            index: Arc::new(index),
            annotations: Arc::new(AnnotationSet::empty(LabelSchema::default())),
            created_at_ms: now_ms(),
        })
    }

    /// Same records, with the given annotations. Every annotated id must
    /// exist and every label must be in the annotation schema.
    pub fn with_annotations(&self, annotations: AnnotationSet) -> Result<Self> {
        for (id, labels) in &annotations.assignments {
            if !self.index.contains_key(id) {
                return Err(Error::UnknownRecord(id.clone()));
            }
            for l in labels {
                if !annotations.schema.contains_label(l) {
                    return Err(Error::UnknownLabel(l.clone()));
                }
            }
        }
        Ok(CorpusSnapshot {
            records: Arc::clone(&self.records),
            index: Arc::clone(&self.index),
            annotations: Arc::new(annotations),
            created_at_ms: now_ms(),
        })
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn record(&self, id: &str) -> Option<&Record> {
        self.index.get(id).map(|&i| &self.records[i])
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    pub fn annotations(&self) -> &AnnotationSet {
        &self.annotations
    }

    pub fn schema(&self) -> &LabelSchema {
        &self.annotations.schema
    }

    pub fn version(&self) -> u64 {
        self.annotations.version
    }

    pub fn created_at_ms(&self) -> u64 {
        self.created_at_ms
    }

    /// Ids of the records carrying `label`, in corpus order.
    pub fn query_by_label(&self, label: &str) -> Result<Vec<String>> {
        if !self.schema().contains_label(label) {
            return Err(Error::UnknownLabel(label.to_string()));
        }
        Ok(self
            .records
            .iter()
            .filter(|r| self.annotations.has_label(&r.id, label))
            .map(|r| r.id.clone())
            .collect())
    }

    /// Text-field names of the first record (all records share them when
    /// ingested from a file).
    pub fn field_names(&self) -> Vec<String> {
        self.records
            .first()
            .map(|r| r.text_fields.keys().cloned().collect())
            .unwrap_or_default()
    }

    pub fn stats(&self) -> SnapshotStats {
        let assigned: usize = self.annotations.assignments.values().map(BTreeSet::len).sum();
        let unlabeled = self
            .records
            .iter()
            .filter(|r| self.annotations.label_count(&r.id) == 0)
            .count();
        SnapshotStats {
            version: self.version(),
            records: self.len(),
            categories: self.schema().categories().len(),
            labels: self.schema().label_count(),
            assignments: assigned,
            unlabeled_records: unlabeled,
            created_at_ms: self.created_at_ms,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnapshotStats {
    pub version: u64,
    pub records: usize,
    pub categories: usize,
    pub labels: usize,
    pub assignments: usize,
    pub unlabeled_records: usize,
    pub created_at_ms: u64,
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn schema() -> LabelSchema {
        LabelSchema::new(vec![
            Category {
                name: "P".into(),
                labels: vec!["too_hot".into(), "leak".into()],
            },
            Category {
                name: "I".into(),
                labels: vec!["valve".into()],
            },
        ])
        .unwrap()
    }

    #[test]
    fn schema_rejects_label_in_two_categories() {
        let err = LabelSchema::new(vec![
            Category {
                name: "P".into(),
                labels: vec!["leak".into()],
            },
            Category {
                name: "S".into(),
                labels: vec!["leak".into()],
            },
        ]);
        assert!(matches!(err, Err(Error::Schema(_))));
    }

    #[test]
    fn schema_trims_and_rejects_blank_labels() {
        let mut s = schema();
        assert!(s.add_label("P", "   ").is_err());
        s.add_label("P", "  noisy ").unwrap();
        assert_eq!(s.category_of("noisy"), Some("P"));
    }

    #[test]
    fn schema_json_round_trip_and_position() {
        let s = schema();
        let back = LabelSchema::from_json(&s.to_json()).unwrap();
        assert_eq!(s, back);
        assert_eq!(back.position("valve"), Some((1, 0)));
        let mut s = back;
        s.remove_label("too_hot").unwrap();
        assert_eq!(s.position("leak"), Some((0, 0)));
    }

    #[test]
    fn query_by_label_in_corpus_order() {
        let recs = ["r1", "r2", "r3"]
            .iter()
            .map(|id| Record::new(*id, [("DESCRIPTION", "x")]))
            .collect();
        let snap = CorpusSnapshot::from_records(recs).unwrap();
        let mut ann = AnnotationSet::empty(schema());
        ann.assign("r3", "leak");
        ann.assign("r1", "leak");
        let snap = snap.with_annotations(ann).unwrap();
        assert_eq!(snap.query_by_label("leak").unwrap(), vec!["r1", "r3"]);
        assert!(snap.query_by_label("too_hot").unwrap().is_empty());
        assert!(matches!(snap.query_by_label("xyz"), Err(Error::UnknownLabel(_))));
    }

    #[test]
    fn duplicate_ids_rejected() {
        let recs = vec![
            Record::new("a", [("t", "x")]),
            Record::new("a", [("t", "y")]),
        ];
        assert!(matches!(
            CorpusSnapshot::from_records(recs),
            Err(Error::DuplicateId { row: 2, .. })
        ));
    }

    #[test]
    fn modeling_text_joins_fields_with_space() {
        let r = Record::new("a", [("DESCRIPTION", "too hot"), ("LONG_DESCRIPTION", "room 4")]);
        assert_eq!(r.modeling_text(), "too hot room 4");
    }
}
