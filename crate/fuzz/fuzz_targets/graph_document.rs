#![no_main]

use learning_graph::formats::GraphDocument;
use libfuzzer_sys::fuzz_target;
use num::BigRational;

// Anything that parses must print back to text that parses to the same text.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(doc) = GraphDocument::<f64>::parse(text) {
        let printed = doc.to_text().expect("parsed documents print");
        let again = GraphDocument::<f64>::parse(&printed).expect("printed documents parse");
        assert_eq!(again.to_text().unwrap(), printed);
    }
    let _ = GraphDocument::<BigRational>::parse(text);
});
