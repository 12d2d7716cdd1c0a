#![no_main]

use contact_hj::GridFn;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(f) = GridFn::read_csv(data) {
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let back = GridFn::read_csv(buf.as_slice()).expect("written csv rejected");
        assert_eq!(back.len(), f.len());
    }
});
