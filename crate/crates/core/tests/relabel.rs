use std::collections::{BTreeMap, BTreeSet};

use labelscope_core::corpus::{AnnotationSet, Category, CorpusSnapshot, LabelSchema, Record};
use labelscope_core::relabel::{
    parse_audit_log, replay, Action, AuditEvent, OpStatus, RelabelHistory, RelabelOp, Scope,
};
use labelscope_core::surrogate::one_hot_encode;
use labelscope_core::Error;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn schema(cats: &[(&str, &[&str])]) -> LabelSchema {
    LabelSchema::new(
        cats.iter()
            .map(|(n, l)| Category {
                name: n.to_string(),
                labels: l.iter().map(|s| s.to_string()).collect(),
            })
            .collect(),
    )
    .unwrap()
}

fn snapshot(n: usize, sch: LabelSchema, rows: &[(&str, &[&str])]) -> CorpusSnapshot {
    let records = (1..=n).map(|i| Record::new(format!("r{i}"), [("T", "fan noise")])).collect();
    let mut ann = AnnotationSet::empty(sch);
    for (id, ls) in rows {
        for l in *ls {
            ann.assign(id, l);
        }
    }
    CorpusSnapshot::from_records(records).unwrap().with_annotations(ann).unwrap()
}

fn records_of(s: &CorpusSnapshot, l: &str) -> BTreeSet<String> {
    s.annotations()
        .assignments
        .iter()
        .filter(|(_, v)| v.contains(l))
        .map(|(k, _)| k.clone())
        .collect()
}

#[test]
fn corpus_modify_merges() {
    let s = snapshot(3, schema(&[("P", &["a", "b"])]), &[("r1", &["a"]), ("r2", &["a", "b"]), ("r3", &["b"])]);
    let mut h = RelabelHistory::new(s.clone());
    h.propose(RelabelOp::modify("a", "b", Scope::Corpus)).unwrap();
    let next = h.apply(&s).unwrap();
    assert_eq!(next.version(), s.version() + 1);
    assert_eq!(records_of(&next, "b"), ["r1", "r2", "r3"].map(String::from).into());
    assert!(!next.schema().contains_label("a"));
    let ids = ["r1", "r2", "r3"];
    assert_eq!(one_hot_encode(s.annotations(), &ids).categories[0].labels.len(), 2);
    assert_eq!(one_hot_encode(next.annotations(), &ids).categories[0].labels.len(), 1);
}

#[test]
fn paper_style_proposals() {
    let s = snapshot(
        4,
        schema(&[("PI", &["too_hot building", "room too_hot"]), ("suggested_entities", &["time"])]),
        &[("r1", &["too_hot building"]), ("r2", &["room too_hot"])],
    );
    let mut h = RelabelHistory::new(s.clone());
    let a = h.propose(RelabelOp::modify("too_hot building", "room too_hot", Scope::Corpus)).unwrap();
    let b = h
        .propose(RelabelOp::insert(
            "philosophy",
            "suggested_entities",
            Scope::Subgroup {
                records: ["r3".to_string(), "r4".to_string()].into(),
            },
        ))
        .unwrap();
    assert!(a < b);
    assert!(h.entries().iter().all(|e| e.status == OpStatus::Pending));
    assert_eq!(h.head().version(), s.version());
    assert!(matches!(
        h.propose(RelabelOp::remove("zzz", Scope::Corpus)),
        Err(Error::UnknownLabel(_))
    ));
    assert!(matches!(
        h.propose(RelabelOp::remove("time", Scope::Record { record: "r99".into() })),
        Err(Error::UnknownRecord(_))
    ));
    assert!(h
        .propose(RelabelOp::remove("time", Scope::Subgroup { records: BTreeSet::new() }))
        .is_err());
    assert!(matches!(
        h.propose(RelabelOp::insert("time", "PI", Scope::Corpus)),
        Err(Error::SchemaConflict(_))
    ));
    assert!(h.propose(RelabelOp::insert("x", "nope", Scope::Corpus)).is_err());
    assert!(h.propose(RelabelOp::modify("time", "time", Scope::Corpus)).is_err());
    // Labels introduced by earlier operations are valid sources.
    h.propose(RelabelOp::remove("philosophy", Scope::Record { record: "r4".into() }))
        .unwrap();
    let next = h.apply(&s).unwrap();
    assert_eq!(records_of(&next, "philosophy"), ["r3".to_string()].into());
    assert_eq!(records_of(&next, "room too_hot"), ["r1", "r2"].map(String::from).into());
    assert_eq!(next.schema().category_of("philosophy"), Some("suggested_entities"));
}

#[test]
fn revert_and_noop_apply() {
    let s = snapshot(2, schema(&[("P", &["a", "b"])]), &[("r1", &["a"])]);
    let mut h = RelabelHistory::new(s.clone());
    assert!(h.history_list().is_empty());
    let same = h.apply(&s).unwrap();
    assert_eq!(same.version(), s.version());
    assert_eq!(same.annotations(), s.annotations());

    let id1 = h.propose(RelabelOp::insert("b", "P", Scope::Record { record: "r2".into() })).unwrap();
    let id2 = h.propose(RelabelOp::remove("a", Scope::Corpus)).unwrap();
    let id3 = h.propose(RelabelOp::insert("b", "P", Scope::Record { record: "r1".into() })).unwrap();
    h.revert(id2).unwrap();
    let list = h.history_list();
    assert_eq!(list.iter().map(|e| e.id).collect::<Vec<_>>(), [id1, id2, id3]);
    assert_eq!(list[1].status, OpStatus::Reverted);
    let v1 = h.apply(&s).unwrap();
    assert!(v1.annotations().has_label("r1", "a"), "reverted op is skipped");
    assert!(v1.annotations().has_label("r2", "b"));
    assert_eq!(h.history_list()[0].status, OpStatus::Applied);
    assert_eq!(h.history_list()[1].status, OpStatus::Reverted);
    assert!(h.revert(id2).is_err(), "no un-revert");
    assert!(matches!(h.revert(99), Err(Error::UnknownOp(99))));

    // Stale base.
    assert!(matches!(h.apply(&s), Err(Error::StaleVersion { .. })));
    // Nothing pending: same snapshot back.
    let again = h.apply(&v1).unwrap();
    assert_eq!(again.version(), v1.version());

    // Reverting an applied op undoes it at the next apply.
    h.revert(id1).unwrap();
    let v2 = h.apply(&v1).unwrap();
    assert_eq!(v2.version(), v1.version() + 1);
    assert!(!v2.annotations().has_label("r2", "b"));
    assert!(v2.annotations().has_label("r1", "b"));
    assert!(v2.version() > v1.version() && v1.version() > s.version());
}

#[test]
fn audit_log_replays() {
    let s = snapshot(3, schema(&[("P", &["a", "b"])]), &[("r1", &["a"]), ("r2", &["b"])]);
    let mut h = RelabelHistory::new(s.clone());
    h.propose(RelabelOp::modify("a", "c", Scope::Corpus)).unwrap();
    let id = h.propose(RelabelOp::remove("b", Scope::Corpus)).unwrap();
    let v1 = h.apply(&s).unwrap();
    h.revert(id).unwrap();
    h.propose(RelabelOp::insert("d", "P", Scope::Record { record: "r3".into() })).unwrap();
    let v2 = h.apply(&v1).unwrap();
    let mut log = Vec::new();
    h.write_audit_log(&mut log).unwrap();
    let events = parse_audit_log(std::str::from_utf8(&log).unwrap()).unwrap();
    assert_eq!(events.len(), 6);
    assert!(matches!(events[2], AuditEvent::Apply { from_version: 0, to_version: 1, .. }));
    let rebuilt = RelabelHistory::from_audit_log(s, &events).unwrap();
    assert_eq!(rebuilt.head().annotations(), v2.annotations());
    assert_eq!(rebuilt.history_list(), h.history_list());
}

#[test]
fn order_matters() {
    let s = snapshot(2, schema(&[("P", &["a", "b"])]), &[("r1", &["a"])]);
    let m = RelabelOp::modify("a", "b", Scope::Corpus);
    let r = RelabelOp::remove("b", Scope::Corpus);
    let x = replay(&s, [&m, &r]).unwrap();
    let y = replay(&s, [&r, &m]).unwrap();
    assert_ne!(x, y);
}

/// Straightforward model of the operation semantics over plain sets.
#[derive(Clone, Debug, PartialEq)]
struct Oracle {
    assign: BTreeMap<String, BTreeSet<String>>,
    labels: BTreeMap<String, String>,
}

impl Oracle {
    fn from(s: &CorpusSnapshot) -> Self {
        Oracle {
            assign: s.annotations().assignments.clone(),
            labels: s.schema().labels().map(|(c, l)| (l.to_string(), c.to_string())).collect(),
        }
    }

    fn ids(all: &[String], scope: &Scope) -> Vec<String> {
        match scope {
            Scope::Corpus => all.to_vec(),
            Scope::Subgroup { records } => records.iter().cloned().collect(),
            Scope::Record { record } => vec![record.clone()],
        }
    }

    fn carriers(&self, l: &str) -> BTreeSet<String> {
        self.assign.iter().filter(|(_, v)| v.contains(l)).map(|(k, _)| k.clone()).collect()
    }

    fn apply(&mut self, all: &[String], op: &RelabelOp) {
        let corpus = op.scope == Scope::Corpus;
        let ids = Self::ids(all, &op.scope);
        match &op.action {
            Action::Remove { label } => {
                for id in &ids {
                    if let Some(s) = self.assign.get_mut(id) {
                        s.remove(label);
                    }
                }
                if corpus {
                    self.labels.remove(label);
                }
            }
            Action::Modify {
                label,
                new_label,
                category,
            } => {
                let Some(cat) = category.clone().or_else(|| self.labels.get(label).cloned()) else {
                    return;
                };
                self.labels.entry(new_label.clone()).or_insert(cat);
                for id in &ids {
                    if let Some(s) = self.assign.get_mut(id) {
                        if s.remove(label) {
                            s.insert(new_label.clone());
                        }
                    }
                }
                if corpus {
                    self.labels.remove(label);
                }
            }
            Action::Insert { new_label, category } => {
                self.labels.entry(new_label.clone()).or_insert(category.clone());
                for id in &ids {
                    self.assign.entry(id.clone()).or_default().insert(new_label.clone());
                }
            }
        }
        self.assign.retain(|_, v| !v.is_empty());
    }
}

fn random_op(rng: &mut ChaCha8Rng, ids: &[String], labels: &[String]) -> RelabelOp {
    let scope = match rng.random_range(0..3) {
        0 => Scope::Corpus,
        1 => {
            let k = rng.random_range(1..=ids.len());
            Scope::Subgroup {
                records: ids.choose_multiple(rng, k).cloned().collect(),
            }
        }
        _ => Scope::Record {
            record: ids.choose(rng).unwrap().clone(),
        },
    };
    let label = labels.choose(rng).unwrap().clone();
    let other = labels.choose(rng).unwrap().clone();
    let cat = if rng.random_bool(0.5) { "A" } else { "B" };
    match rng.random_range(0..3) {
        0 => RelabelOp::remove(&label, scope),
        1 => RelabelOp::modify(&label, &other, scope),
        _ => RelabelOp::insert(&other, cat, scope),
    }
}

#[test]
fn random_sequences_match_set_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut modify_checks = 0;
    for _ in 0..100 {
        let n = rng.random_range(3..=12);
        let base_labels = ["a0", "a1", "a2", "b0", "b1"];
        let sch = schema(&[("A", &base_labels[..3]), ("B", &base_labels[3..])]);
        let ids: Vec<String> = (1..=n).map(|i| format!("r{i}")).collect();
        let mut rows: Vec<(String, Vec<&str>)> = Vec::new();
        for id in &ids {
            rows.push((id.clone(), base_labels.iter().copied().filter(|_| rng.random_bool(0.35)).collect()));
        }
        let rows_ref: Vec<(&str, &[&str])> = rows.iter().map(|(i, l)| (i.as_str(), l.as_slice())).collect();
        let s = snapshot(n, sch, &rows_ref);
        let pool: Vec<String> = base_labels.iter().map(|s| s.to_string()).chain(["n0".into(), "n1".into()]).collect();

        let mut h = RelabelHistory::new(s.clone());
        let mut oracle = Oracle::from(&s);
        let mut accepted = Vec::new();
        for _ in 0..rng.random_range(1..=8) {
            let op = random_op(&mut rng, &ids, &pool);
            if h.propose(op.clone()).is_err() {
                continue;
            }
            // Count law, checked step by step on the oracle.
            if let (Action::Modify { label, new_label, .. }, Scope::Corpus) = (&op.action, &op.scope) {
                let expect: BTreeSet<String> = oracle.carriers(label).union(&oracle.carriers(new_label)).cloned().collect();
                let mut next = oracle.clone();
                next.apply(&ids, &op);
                assert_eq!(next.carriers(new_label), expect);
                modify_checks += 1;
            }
            // Idempotence of Remove / Insert.
            if !matches!(op.action, Action::Modify { .. }) {
                let mut once = oracle.clone();
                once.apply(&ids, &op);
                let ann_once = replay(&s, accepted.iter().chain([&op])).unwrap();
                let ann_twice = replay(&s, accepted.iter().chain([&op, &op])).unwrap();
                assert_eq!(ann_once, ann_twice);
            }
            // Record scope touches only its record.
            if let Scope::Record { record } = &op.scope {
                let before = replay(&s, accepted.iter()).unwrap();
                let after = replay(&s, accepted.iter().chain([&op])).unwrap();
                for id in &ids {
                    if id != record {
                        assert_eq!(before.assignments.get(id), after.assignments.get(id));
                    }
                }
            }
            oracle.apply(&ids, &op);
            accepted.push(op);
        }
        let mut h2 = h.clone();
        let a = h.apply(&s).unwrap();
        let b = h2.apply(&s).unwrap();
        assert_eq!(a.annotations(), b.annotations(), "replay determinism");
        assert_eq!(a.annotations().assignments, oracle.assign);
        let got: BTreeMap<String, String> = a.schema().labels().map(|(c, l)| (l.to_string(), c.to_string())).collect();
        assert_eq!(got, oracle.labels);
    }
    assert!(modify_checks > 10, "{modify_checks}");
}
