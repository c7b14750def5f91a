#![no_main]

use knowprop::problem::Problem;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(problem) = Problem::from_json(data) {
        if let Ok(state) = problem.initial_state() {
            assert_eq!(state.num_nodes(), problem.nodes);
        }
    }
});
