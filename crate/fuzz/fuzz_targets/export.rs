#![no_main]

use labelscope_core::corpus::{export_manifest_json, parse_export, write_export_lines};
use libfuzzer_sys::fuzz_target;

// Input: manifest JSON, a NUL byte, then the exported lines.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Some((manifest, lines)) = text.split_once('\0') else { return };
    let Ok(snapshot) = parse_export(lines, manifest) else { return };
    let mut out = Vec::new();
    write_export_lines(&snapshot, &mut out).unwrap();
    let back = parse_export(std::str::from_utf8(&out).unwrap(), &export_manifest_json(&snapshot)).unwrap();
    assert_eq!(back.records(), snapshot.records());
    assert_eq!(back.annotations().assignments, snapshot.annotations().assignments);
});
