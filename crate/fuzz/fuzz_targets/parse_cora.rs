#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(ds) = knowprop::dataset::parse_cora(data) {
        assert_eq!(ds.labels().len(), ds.num_nodes());
        assert!(ds.labels().iter().all(|&l| l < ds.num_categories()));
    }
});
