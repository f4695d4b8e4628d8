#![no_main]

use libfuzzer_sys::fuzz_target;
use ucentropy::format::{parse_family, write_family};
use ucentropy::setfamily::union_closure;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(fam) = parse_family(text) else { return };
    let again = parse_family(&write_family(&fam)).expect("written family parses");
    assert_eq!(again, fam);
    // Closure of a small family stays cheap; larger ones can blow up.
    if fam.len() <= 16 && fam.ground_n() <= 12 {
        let c = union_closure(fam.ground_n(), fam.members().iter().copied()).expect("closure of a valid family");
        assert!(c.is_union_closed());
    }
});
