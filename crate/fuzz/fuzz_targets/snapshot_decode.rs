#![no_main]

use kdv2_core::io::Snapshot;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = Snapshot::decode(data) {
        // anything accepted must re-encode to the same bytes
        assert_eq!(s.encode(), data);
    }
});
