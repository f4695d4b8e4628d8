#![no_main]

use libfuzzer_sys::fuzz_target;
use ucentropy::format::parse_range;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(r) = parse_range(text) else { return };
    assert!(r.lo < r.hi && r.step > 0.0);
    if let Ok(pts) = r.points() {
        assert!(!pts.is_empty());
        assert!(pts.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(*pts.last().unwrap(), r.hi);
    }
});
