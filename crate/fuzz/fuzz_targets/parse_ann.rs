#![no_main]

use brat_eval::schema::{validate_document, AnnotationSchema};
use brat_eval::standoff::parse_document;
use libfuzzer_sys::fuzz_target;

// input: ann bytes, NUL, note text
fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    let (ann, text) = s.split_once('\0').unwrap_or((s, ""));
    for strict in [true, false] {
        if let Ok(parsed) = parse_document(ann, text, "fuzz", strict) {
            let _ = validate_document(&parsed.document, &AnnotationSchema::shac());
        }
    }
});
