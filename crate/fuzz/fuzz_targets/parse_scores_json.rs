#![no_main]

use libfuzzer_sys::fuzz_target;

// First byte picks the expected class count.
fuzz_target!(|data: &[u8]| {
    let Some((&c, rest)) = data.split_first() else { return };
    if let Err(e) = curvsal::classifier::parse_scores_json(rest, c as usize % 16) {
        assert!(e.location().is_some(), "{e}");
    }
});
