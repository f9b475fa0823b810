use std::collections::BTreeSet;

use labelscope_core::corpus::{
    export_manifest_json, parse_csv, parse_export, write_csv_field, write_export_lines, AnnotationSet, Category,
    CorpusSnapshot, LabelSchema, Record,
};
use labelscope_core::quality::{cooccurrence, duplication_possibility};
use labelscope_core::relabel::{parse_ops, replay, RelabelOp, Scope};
use labelscope_core::vectorizer::{Tokenizer, TokenizerConfig};
use proptest::prelude::*;

fn csv_line(fields: &[String]) -> String {
    let mut out = String::new();
    for (i, f) in fields.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        write_csv_field(&mut out, f);
    }
    out
}

fn schema() -> LabelSchema {
    LabelSchema::new(vec![
        Category { name: "A".into(), labels: vec!["a0".into(), "a1".into(), "a2".into()] },
        Category { name: "B".into(), labels: vec!["b0".into(), "b1".into()] },
    ])
    .unwrap()
}

const LABELS: [&str; 5] = ["a0", "a1", "a2", "b0", "b1"];

fn snapshot_strategy() -> impl Strategy<Value = CorpusSnapshot> {
    prop::collection::vec(("[!-~][ -~\n\"]{0,23}", prop::collection::btree_set(0..5usize, 0..4)), 1..12).prop_map(|rows| {
        let records = rows.iter().enumerate().map(|(i, (t, _))| Record::new(format!("r{i}"), [("T", t.as_str())])).collect();
        let mut ann = AnnotationSet::empty(schema());
        for (i, (_, ls)) in rows.iter().enumerate() {
            for &l in ls {
                ann.assign(&format!("r{i}"), LABELS[l]);
            }
        }
        CorpusSnapshot::from_records(records).unwrap().with_annotations(ann).unwrap()
    })
}

fn op_strategy(n: usize) -> impl Strategy<Value = RelabelOp> {
    let scope = prop_oneof![
        Just(Scope::Corpus),
        prop::collection::btree_set(0..n, 1..=n)
            .prop_map(|s| Scope::Subgroup { records: s.into_iter().map(|i| format!("r{i}")).collect() }),
        (0..n).prop_map(|i| Scope::Record { record: format!("r{i}") }),
    ];
    (0..3u8, 0..5usize, 0..5usize, scope).prop_map(|(kind, l, m, scope)| match kind {
        0 => RelabelOp::remove(LABELS[l], scope),
        1 => RelabelOp::modify(LABELS[l], LABELS[m], scope),
        _ => RelabelOp::insert(LABELS[m], if m < 3 { "A" } else { "B" }, scope),
    })
}

proptest! {
    #[test]
    fn csv_fields_round_trip(rows in prop::collection::vec(prop::collection::vec("[ -~\r\n\"]{0,12}", 2..5), 1..6)) {
        let width = rows[0].len();
        let rows: Vec<Vec<String>> = rows.into_iter().map(|mut r| { r.resize(width, String::new()); r }).collect();
        let text: String = rows.iter().map(|r| csv_line(r) + "\r\n").collect();
        let parsed = parse_csv(&text).unwrap();
        let fields: Vec<Vec<String>> = parsed.into_iter().map(|r| r.fields).collect();
        // Line breaks inside quoted fields come back as `\n`.
        let normalized: Vec<Vec<String>> =
            rows.iter().map(|r| r.iter().map(|f| f.replace("\r\n", "\n").replace('\r', "\n")).collect()).collect();
        prop_assert_eq!(fields, normalized);
    }

    #[test]
    fn csv_parser_never_panics(text in "[ -~\r\n\"\u{feff}]{0,64}") {
        let _ = parse_csv(&text);
    }

    #[test]
    fn export_round_trips(snap in snapshot_strategy()) {
        let mut buf = Vec::new();
        write_export_lines(&snap, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let back = parse_export(&text, &export_manifest_json(&snap)).unwrap();
        prop_assert_eq!(back.records(), snap.records());
        prop_assert_eq!(&back.annotations().assignments, &snap.annotations().assignments);
        prop_assert_eq!(back.schema(), snap.schema());
    }

    #[test]
    fn ops_json_round_trips(ops in prop::collection::vec(op_strategy(6), 0..6)) {
        let text = serde_json::to_string(&ops).unwrap();
        prop_assert_eq!(parse_ops(&text).unwrap(), ops);
    }

    #[test]
    fn replay_keeps_labels_in_schema(snap in snapshot_strategy(), ops in prop::collection::vec(op_strategy(12), 0..8)) {
        let ops: Vec<RelabelOp> = ops.into_iter().filter(|op| match &op.scope {
            Scope::Corpus => true,
            Scope::Subgroup { records } => records.iter().all(|r| snap.contains(r)),
            Scope::Record { record } => snap.contains(record),
        }).collect();
        if let Ok(ann) = replay(&snap, ops.iter()) {
            for labels in ann.assignments.values() {
                prop_assert!(!labels.is_empty());
                for l in labels {
                    prop_assert!(ann.schema.contains_label(l), "{} not in schema", l);
                }
            }
        }
    }

    #[test]
    fn duplication_is_a_probability(snap in snapshot_strategy()) {
        for cat in ["A", "B"] {
            if let Ok(d) = duplication_possibility(&cooccurrence(&snap, cat).unwrap()) {
                prop_assert!((0.0..=1.0).contains(&d), "{}", d);
            }
        }
    }

    #[test]
    fn token_spans_point_into_source(text in "\\PC{0,40}", min in 1usize..4) {
        let t = Tokenizer::new(TokenizerConfig { min_token_len: min, ..Default::default() }, BTreeSet::new());
        for s in t.spans(&text) {
            prop_assert_eq!(text[s.start..s.end].to_lowercase(), s.text.clone());
            prop_assert!(s.text.chars().count() >= min);
        }
    }
}
