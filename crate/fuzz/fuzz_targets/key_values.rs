#![no_main]

use learning_graph::formats::{KeyValues, Provenance};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(kv) = KeyValues::parse(text) {
        for key in kv.keys() {
            let _ = kv.list::<usize>(key);
            let _ = kv.number::<f64>(key);
        }
    }
    let _ = KeyValues::from_tokens(text.split_whitespace());
    let _ = Provenance::parse(text);
});
