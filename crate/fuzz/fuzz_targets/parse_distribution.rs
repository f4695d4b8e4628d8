#![no_main]

use libfuzzer_sys::fuzz_target;
use ucentropy::distribution::reduce;
use ucentropy::format::{parse_distribution, write_distribution};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(d) = parse_distribution(text) else { return };
    let again = parse_distribution(&write_distribution(&d)).expect("written file parses");
    assert_eq!(again, d);
    if d.len() <= 64 {
        let r = reduce(&d);
        assert!(r.is_reduced());
        assert!(r.mean().get().is_finite());
    }
});
