#![no_main]

use std::sync::OnceLock;

use labelscope_core::corpus::CorpusSnapshot;
use labelscope_core::relabel::{parse_audit_log, RelabelHistory};
use labelscope_core::synth::hvac_scenario;
use libfuzzer_sys::fuzz_target;

fn base() -> &'static CorpusSnapshot {
    static BASE: OnceLock<CorpusSnapshot> = OnceLock::new();
    BASE.get_or_init(|| hvac_scenario(12, 2, 1).0.snapshot().unwrap())
}

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(events) = parse_audit_log(text) else { return };
    if let Ok(history) = RelabelHistory::from_audit_log(base().clone(), &events) {
        let mut log = Vec::new();
        history.write_audit_log(&mut log).unwrap();
        let replayed = parse_audit_log(std::str::from_utf8(&log).unwrap()).unwrap();
        let again = RelabelHistory::from_audit_log(base().clone(), &replayed).unwrap();
        assert_eq!(again.head().annotations(), history.head().annotations());
    }
});
