#![no_main]

use labelscope_core::corpus::{parse_annotations, LabelSchema};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(schema) = LabelSchema::infer_from_annotations(text) else { return };
    let ann = parse_annotations(text, &schema, |_| true).expect("annotations fit their inferred schema");
    for labels in ann.assignments.values() {
        assert!(labels.iter().all(|l| schema.contains_label(l)));
    }
});
