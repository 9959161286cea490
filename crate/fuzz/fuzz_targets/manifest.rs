#![no_main]

use brat_eval::standoff::MetadataRules;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(rules) = MetadataRules::from_manifest(s) {
        for id in ["note-0001", "mimic/train/note-0001", "uw/dev/x"] {
            let _ = rules.resolve(id);
        }
    }
});
