#![no_main]

use labelscope_core::corpus::{parse_csv, write_csv_field};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(rows) = parse_csv(text) else { return };
    // Leading newline keeps a field-initial BOM from being read as a file BOM.
    let mut out = String::from("\n");
    for row in &rows {
        for (i, f) in row.fields.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            write_csv_field(&mut out, f);
        }
        out.push('\n');
    }
    let again: Vec<Vec<String>> = parse_csv(&out).unwrap().into_iter().map(|r| r.fields).collect();
    let rows: Vec<Vec<String>> = rows.into_iter().filter(|r| r.fields != [""]).map(|r| r.fields).collect();
    assert_eq!(again, rows);
});
