#![no_main]

use learning_graph::exact::Surd;
use learning_graph::formats::{parse_certificate, write_certificate};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(bundle) = parse_certificate::<f64>(text) {
        let mut out = Vec::new();
        write_certificate(&bundle, &mut out).unwrap();
        let printed = String::from_utf8(out).unwrap();
        parse_certificate::<f64>(&printed).expect("printed certificates parse");
    }
    let _ = parse_certificate::<Surd>(text);
});
