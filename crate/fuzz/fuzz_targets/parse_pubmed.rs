#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(ds) = knowprop::dataset::parse_pubmed(data) {
        assert_eq!(ds.num_categories(), 3);
        assert!(ds.features().iter().all(|v| v.is_finite()));
    }
});
