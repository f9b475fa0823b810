#![no_main]

use labelscope_core::surrogate::SurrogateModel;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(model) = SurrogateModel::from_json(text) else { return };
    let json = model.to_json();
    assert_eq!(SurrogateModel::from_json(&json).unwrap().to_json(), json);
});
