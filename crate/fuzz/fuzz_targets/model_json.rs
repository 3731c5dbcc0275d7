#![no_main]

use libfuzzer_sys::fuzz_target;
use tsmc::persist::ModelDocument;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(doc) = ModelDocument::from_json(text) {
        let model = doc.factor_model().expect("validated document");
        assert_eq!(model.w.dim(), (doc.m, doc.f));
        let again = ModelDocument::from_json(&doc.to_json().unwrap()).unwrap();
        assert_eq!(again, doc);
    }
});
