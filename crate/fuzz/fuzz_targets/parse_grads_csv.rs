#![no_main]

use libfuzzer_sys::fuzz_target;

// First byte picks the point count.
fuzz_target!(|data: &[u8]| {
    let Some((&n, rest)) = data.split_first() else { return };
    if let Err(e) = curvsal::classifier::parse_grads_csv(rest, n as usize) {
        assert!(e.location().is_some(), "{e}");
    }
});
