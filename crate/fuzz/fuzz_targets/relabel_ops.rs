#![no_main]

use std::sync::OnceLock;

use labelscope_core::corpus::CorpusSnapshot;
use labelscope_core::relabel::{parse_ops, RelabelHistory};
use labelscope_core::synth::hvac_scenario;
use libfuzzer_sys::fuzz_target;

fn base() -> &'static CorpusSnapshot {
    static BASE: OnceLock<CorpusSnapshot> = OnceLock::new();
    BASE.get_or_init(|| hvac_scenario(12, 2, 1).0.snapshot().unwrap())
}

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(ops) = parse_ops(text) else { return };
    let mut history = RelabelHistory::new(base().clone());
    for op in ops {
        let _ = history.propose(op);
    }
    if let Ok(next) = history.apply(base()) {
        for labels in next.annotations().assignments.values() {
            assert!(labels.iter().all(|l| next.schema().contains_label(l)));
        }
    }
});
