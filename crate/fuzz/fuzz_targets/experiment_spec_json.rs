#![no_main]

use knowprop::harness::ExperimentSpec;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(spec) = ExperimentSpec::from_json(data) {
        let text = serde_json::to_string(&spec).expect("spec serializes");
        assert_eq!(ExperimentSpec::from_json(&text).expect("round trip"), spec);
    }
});
