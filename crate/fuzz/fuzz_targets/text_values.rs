#![no_main]

use learning_graph::domain::{Assignment, FunctionSpec, InputPoint, Subset};
use learning_graph::exact::Surd;
use learning_graph::formats::TextValue;
use libfuzzer_sys::fuzz_target;
use num::BigRational;

fn round_trip<T: std::str::FromStr + std::fmt::Display + PartialEq + std::fmt::Debug>(s: &str) {
    if let Ok(v) = s.parse::<T>() {
        let back: T = v.to_string().parse().ok().expect("printed values parse");
        assert_eq!(back, v);
    }
}

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    round_trip::<Subset>(s);
    round_trip::<Assignment>(s);
    round_trip::<InputPoint>(s);
    round_trip::<FunctionSpec>(s);
    if let Some(q) = BigRational::from_text(s) {
        assert_eq!(BigRational::from_text(&q.to_text()), Some(q));
    }
    if let Some(v) = Surd::from_text(s) {
        assert_eq!(Surd::from_text(&v.to_text()), Some(v));
    }
    let _ = f64::from_text(s);
});
