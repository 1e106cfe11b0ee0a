#![no_main]

use learning_graph::formats::{read_pair_csv, write_pair_csv};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(rows) = read_pair_csv(text) {
        let mut out = Vec::new();
        write_pair_csv(&rows, &mut out).unwrap();
        let back = read_pair_csv(std::str::from_utf8(&out).unwrap()).expect("written rows read back");
        assert_eq!(back.len(), rows.len());
    }
});
