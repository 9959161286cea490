#![no_main]

use brat_eval::standoff::{parse_document, serialize_document};
use libfuzzer_sys::fuzz_target;

// anything the lenient parser accepts must survive serialize -> strict parse
fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    let (ann, text) = s.split_once('\0').unwrap_or((s, ""));
    let Ok(parsed) = parse_document(ann, text, "fuzz", false) else { return };
    let out = serialize_document(&parsed.document);
    let back = parse_document(&out, text, "fuzz", true)
        .expect("serialized document fails to parse")
        .document;
    assert_eq!(back, parsed.document);
});
