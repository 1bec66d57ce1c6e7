#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Err(e) = curvsal::io::read_ply(data) {
        assert!(e.location().is_some(), "{e}");
    }
});
