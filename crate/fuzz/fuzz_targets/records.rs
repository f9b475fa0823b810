#![no_main]

use labelscope_core::corpus::{parse_records, CorpusSnapshot, Format, IngestOptions};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Some((&selector, rest)) = data.split_first() else { return };
    let Ok(text) = std::str::from_utf8(rest) else { return };
    let format = if selector & 1 == 0 { Format::Csv } else { Format::Jsonl };
    let opts = IngestOptions {
        fields: Vec::new(),
        id_field: (selector & 2 != 0).then(|| "id".to_string()),
    };
    if let Ok(records) = parse_records(text, format, &opts) {
        let _ = CorpusSnapshot::from_records(records);
    }
});
