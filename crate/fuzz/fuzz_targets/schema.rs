#![no_main]

use labelscope_core::corpus::LabelSchema;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(schema) = LabelSchema::from_json(text) else { return };
    assert_eq!(LabelSchema::from_json(&schema.to_json()).unwrap(), schema);
});
