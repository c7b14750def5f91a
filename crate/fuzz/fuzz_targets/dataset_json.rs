#![no_main]

use knowprop::dataset::{parse_dataset_json, to_json_string};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(ds) = parse_dataset_json(data) {
        let text = to_json_string(&ds).expect("valid dataset serializes");
        assert_eq!(parse_dataset_json(&text).expect("round trip"), ds);
    }
});
