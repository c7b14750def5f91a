#![no_main]

use knowprop::matrix_io::{MatrixEncoding, MatrixFile};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(file) = MatrixFile::decode(data) {
        for encoding in [MatrixEncoding::Binary, MatrixEncoding::Json] {
            let bytes = file.encode(encoding).expect("decoded file re-encodes");
            assert_eq!(MatrixFile::decode(&bytes).expect("round trip"), file);
        }
    }
});
