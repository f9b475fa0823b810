//! Relabel operations collected in a history and replayed, on request,
//! into new annotation snapshots.

use std::collections::BTreeSet;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::corpus::{now_ms, AnnotationSet, CorpusSnapshot};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Action {
    Remove {
        label: String,
    },
    /// Replaces `label` with `new_label`; the target category defaults to
    /// the source label's category.
    Modify {
        label: String,
        new_label: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        category: Option<String>,
    },
    Insert {
        new_label: String,
        category: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "level", rename_all = "lowercase")]
pub enum Scope {
    Corpus,
    Subgroup { records: BTreeSet<String> },
    Record { record: String },
}

impl Scope {
    pub fn level(&self) -> &'static str {
        match self {
            Scope::Corpus => "corpus",
            Scope::Subgroup { .. } => "subgroup",
            Scope::Record { .. } => "record",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelabelOp {
    #[serde(flatten)]
    pub action: Action,
    pub scope: Scope,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    /// Filled in at proposal time when zero.
    #[serde(default)]
    pub timestamp_ms: u64,
}

impl RelabelOp {
    pub fn new(action: Action, scope: Scope) -> Self {
        RelabelOp {
            action,
            scope,
            note: None,
            timestamp_ms: 0,
        }
    }

    pub fn remove(label: &str, scope: Scope) -> Self {
        Self::new(Action::Remove { label: label.into() }, scope)
    }

    pub fn modify(label: &str, new_label: &str, scope: Scope) -> Self {
        Self::new(
            Action::Modify {
                label: label.into(),
                new_label: new_label.into(),
                category: None,
            },
            scope,
        )
    }

    pub fn insert(new_label: &str, category: &str, scope: Scope) -> Self {
        Self::new(
            Action::Insert {
                new_label: new_label.into(),
                category: category.into(),
            },
            scope,
        )
    }
}

/// Parses a JSON array of operations.
pub fn parse_ops(text: &str) -> Result<Vec<RelabelOp>> {
    serde_json::from_str(text).map_err(|e| Error::Json(e.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OpStatus {
    Pending,
    Applied,
    Reverted,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub id: u64,
    pub op: RelabelOp,
    pub status: OpStatus,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "lowercase")]
pub enum AuditEvent {
    Propose {
        id: u64,
        op: RelabelOp,
        at_ms: u64,
    },
    Revert {
        id: u64,
        at_ms: u64,
    },
    Apply {
        from_version: u64,
        to_version: u64,
        applied: Vec<u64>,
        at_ms: u64,
    },
}

pub fn parse_audit_log(text: &str) -> Result<Vec<AuditEvent>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Parse {
                row: i + 1,
                column: e.column(),
                message: e.to_string(),
            })
        })
        .collect()
}

/// Ordered operations against an origin snapshot. Every apply replays all
/// non-reverted operations from the origin, so reverting an applied
/// operation takes effect at the next apply.
#[derive(Debug, Clone)]
pub struct RelabelHistory {
    origin: CorpusSnapshot,
    head: CorpusSnapshot,
    entries: Vec<HistoryEntry>,
    events: Vec<AuditEvent>,
    next_id: u64,
    dirty: bool,
}

impl RelabelHistory {
    pub fn new(base: CorpusSnapshot) -> Self {
        RelabelHistory {
            origin: base.clone(),
            head: base,
            entries: Vec::new(),
            events: Vec::new(),
            next_id: 1,
            dirty: false,
        }
    }

    pub fn base_version(&self) -> u64 {
        self.origin.version()
    }

    /// Version of the latest snapshot produced (or the base).
    pub fn head_version(&self) -> u64 {
        self.head.version()
    }

    pub fn head(&self) -> &CorpusSnapshot {
        &self.head
    }

    pub fn entries(&self) -> &[HistoryEntry] {
        &self.entries
    }

    pub fn history_list(&self) -> Vec<HistoryEntry> {
        self.entries.clone()
    }

    pub fn events(&self) -> &[AuditEvent] {
        &self.events
    }

    pub fn has_pending(&self) -> bool {
        self.entries.iter().any(|e| e.status == OpStatus::Pending)
    }

    /// Checks `op` against the head schema plus labels that earlier live
    /// operations introduce.
    fn validate(&self, op: &RelabelOp) -> Result<()> {
        let schema = self.head.schema();
        let mut introduced: Vec<(&str, &str)> = Vec::new();
        for e in self.entries.iter().filter(|e| e.status != OpStatus::Reverted) {
            match &e.op.action {
                Action::Insert { new_label, category } => introduced.push((new_label, category)),
                Action::Modify {
                    label,
                    new_label,
                    category,
                } => {
                    let cat = category
                        .as_deref()
                        .or_else(|| schema.category_of(label))
                        .or_else(|| introduced.iter().find(|(l, _)| l == label).map(|(_, c)| *c));
                    if let Some(c) = cat {
                        introduced.push((new_label, c));
                    }
                }
                Action::Remove { .. } => {}
            }
        }
        let category_of = |label: &str| -> Option<String> {
            schema
                .category_of(label)
                .map(str::to_string)
                .or_else(|| introduced.iter().find(|(l, _)| *l == label).map(|(_, c)| c.to_string()))
        };
        let check_target = |label: &str, category: &str| -> Result<()> {
            if label.trim().is_empty() {
                return Err(Error::InvalidArgument("new label is empty".into()));
            }
            if schema.category(category).is_none() {
                return Err(Error::UnknownCategory(category.to_string()));
            }
            match category_of(label.trim()) {
                Some(c) if c != category => Err(Error::SchemaConflict(format!(
                    "label {label:?} already belongs to category {c:?}, not {category:?}"
                ))),
                _ => Ok(()),
            }
        };
        match &op.action {
            Action::Remove { label } => {
                category_of(label).ok_or_else(|| Error::UnknownLabel(label.clone()))?;
            }
            Action::Modify {
                label,
                new_label,
                category,
            } => {
                let src = category_of(label).ok_or_else(|| Error::UnknownLabel(label.clone()))?;
                if new_label.trim() == label {
                    return Err(Error::InvalidArgument("modify target equals source label".into()));
                }
                check_target(new_label, category.as_deref().unwrap_or(&src))?;
            }
            Action::Insert { new_label, category } => check_target(new_label, category)?,
        }
        match &op.scope {
            Scope::Corpus => {}
            Scope::Subgroup { records } => {
                if records.is_empty() {
                    return Err(Error::InvalidArgument("sub-group scope is empty".into()));
                }
                if let Some(id) = records.iter().find(|id| !self.head.contains(id)) {
                    return Err(Error::UnknownRecord(id.clone()));
                }
            }
            Scope::Record { record } => {
                if !self.head.contains(record) {
                    return Err(Error::UnknownRecord(record.clone()));
                }
            }
        }
        Ok(())
    }

    pub fn propose(&mut self, mut op: RelabelOp) -> Result<u64> {
        self.validate(&op)?;
        trim_labels(&mut op.action);
        if op.timestamp_ms == 0 {
            op.timestamp_ms = now_ms();
        }
        let id = self.next_id;
        self.next_id += 1;
        self.events.push(AuditEvent::Propose {
            id,
            op: op.clone(),
            at_ms: now_ms(),
        });
        self.entries.push(HistoryEntry {
            id,
            op,
            status: OpStatus::Pending,
        });
        self.dirty = true;
        Ok(id)
    }

    pub fn revert(&mut self, id: u64) -> Result<()> {
        let entry = self
            .entries
            .iter_mut()
            .find(|e| e.id == id)
            .ok_or(Error::UnknownOp(id))?;
        if entry.status == OpStatus::Reverted {
            return Err(Error::InvalidArgument(format!("operation {id} is already reverted")));
        }
        entry.status = OpStatus::Reverted;
        self.events.push(AuditEvent::Revert { id, at_ms: now_ms() });
        self.dirty = true;
        Ok(())
    }

    /// Replays live operations onto the origin and returns the new head.
    /// With nothing to do, returns `snapshot` unchanged.
    pub fn apply(&mut self, snapshot: &CorpusSnapshot) -> Result<CorpusSnapshot> {
        if snapshot.version() != self.head.version() {
            return Err(Error::StaleVersion {
                expected: self.head.version(),
                found: snapshot.version(),
            });
        }
        if !self.dirty {
            return Ok(snapshot.clone());
        }
        let live: Vec<&RelabelOp> = self
            .entries
            .iter()
            .filter(|e| e.status != OpStatus::Reverted)
            .map(|e| &e.op)
            .collect();
        let mut ann = replay(&self.origin, live)?;
        let to_version = self.head.version() + 1;
        ann.version = to_version;
        let next = self.origin.with_annotations(ann)?;
        let mut applied = Vec::new();
        for e in &mut self.entries {
            if e.status == OpStatus::Pending {
                e.status = OpStatus::Applied;
                applied.push(e.id);
            }
        }
        self.events.push(AuditEvent::Apply {
            from_version: self.head.version(),
            to_version,
            applied,
            at_ms: now_ms(),
        });
        self.head = next.clone();
        self.dirty = false;
        Ok(next)
    }

    pub fn write_audit_log(&self, w: &mut impl Write) -> std::io::Result<()> {
        for e in &self.events {
            serde_json::to_writer(&mut *w, e)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Rebuilds a history from its audit log against the same origin.
    pub fn from_audit_log(origin: CorpusSnapshot, events: &[AuditEvent]) -> Result<Self> {
        let mut h = RelabelHistory::new(origin);
        for ev in events {
            match ev {
                AuditEvent::Propose { id, op, .. } => {
                    if *id != h.next_id {
                        return Err(Error::InvalidArgument(format!(
                            "audit log proposes id {id}, expected {}",
                            h.next_id
                        )));
                    }
                    h.propose(op.clone())?;
                }
                AuditEvent::Revert { id, .. } => h.revert(*id)?,
                AuditEvent::Apply { from_version, .. } => {
                    if *from_version != h.head_version() {
                        return Err(Error::StaleVersion {
                            expected: h.head_version(),
                            found: *from_version,
                        });
                    }
                    let head = h.head.clone();
                    h.apply(&head)?;
                }
            }
        }
        Ok(h)
    }
}

fn trim_labels(action: &mut Action) {
    match action {
        Action::Modify { new_label, .. } | Action::Insert { new_label, .. } => {
            *new_label = new_label.trim().to_string();
        }
        Action::Remove { .. } => {}
    }
}

fn ensure_label(ann: &mut AnnotationSet, label: &str, category: &str) -> Result<()> {
    match ann.schema.category_of(label) {
        Some(c) if c == category => Ok(()),
        Some(c) => Err(Error::SchemaConflict(format!(
            "label {label:?} already belongs to category {c:?}, not {category:?}"
        ))),
        None => {
            if ann.schema.category(category).is_none() {
                return Err(Error::UnknownCategory(category.to_string()));
            }
            ann.schema.add_label(category, label)
        }
    }
}

fn scope_ids(snapshot: &CorpusSnapshot, scope: &Scope) -> Vec<String> {
    match scope {
        Scope::Corpus => snapshot.records().iter().map(|r| r.id.clone()).collect(),
        Scope::Subgroup { records } => records.iter().cloned().collect(),
        Scope::Record { record } => vec![record.clone()],
    }
}

fn drop_assignments(ann: &mut AnnotationSet) {
    ann.assignments.retain(|_, s| !s.is_empty());
}

/// Applies `ops` in order to the snapshot's annotations.
pub fn replay<'a>(snapshot: &CorpusSnapshot, ops: impl IntoIterator<Item = &'a RelabelOp>) -> Result<AnnotationSet> {
    let mut ann = snapshot.annotations().clone();
    for op in ops {
        apply_op(&mut ann, snapshot, op)?;
    }
    drop_assignments(&mut ann);
    Ok(ann)
}

pub fn apply_op(ann: &mut AnnotationSet, snapshot: &CorpusSnapshot, op: &RelabelOp) -> Result<()> {
    let corpus = op.scope == Scope::Corpus;
    match &op.action {
        Action::Remove { label } => {
            for id in scope_ids(snapshot, &op.scope) {
                ann.unassign(&id, label);
            }
            if corpus && ann.schema.contains_label(label) && ann.usage(label) == 0 {
                ann.schema.remove_label(label)?;
            }
        }
        Action::Modify {
            label,
            new_label,
            category,
        } => {
            let Some(cat) = category
                .clone()
                .or_else(|| ann.schema.category_of(label).map(str::to_string))
            else {
                // Source label no longer exists; nothing carries it.
                return Ok(());
            };
            ensure_label(ann, new_label, &cat)?;
            for id in scope_ids(snapshot, &op.scope) {
                if ann.unassign(&id, label) {
                    ann.assign(&id, new_label);
                }
            }
            if corpus && ann.schema.contains_label(label) && ann.usage(label) == 0 {
                ann.schema.remove_label(label)?;
            }
        }
        Action::Insert { new_label, category } => {
            ensure_label(ann, new_label, category)?;
            for id in scope_ids(snapshot, &op.scope) {
                ann.assign(&id, new_label);
            }
        }
    }
    Ok(())
}
