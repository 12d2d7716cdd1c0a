//! Replays the checked-in fuzz corpus through the same round-trip checks the
//! fuzz targets make, so the seeds stay meaningful without a nightly toolchain.

use std::fs;
use std::path::PathBuf;

use contact_hj::GridFn;
use contact_hj_lab::ExperimentConfig;

fn corpus(target: &str) -> Vec<(PathBuf, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<_> = fs::read_dir(&dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            let bytes = fs::read(&p).unwrap();
            (p, bytes)
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds in {}", dir.display());
    out
}

#[test]
fn config_seeds_round_trip() {
    for (path, bytes) in corpus("config_parse") {
        let text = String::from_utf8(bytes).unwrap();
        let cfg = ExperimentConfig::from_toml_str(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let once = cfg.to_toml_string();
        let again = ExperimentConfig::from_toml_str(&once).unwrap();
        assert_eq!(again, cfg);
    }
}

#[test]
fn csv_seeds_parse_or_fail_cleanly() {
    let mut accepted = 0;
    for (_, bytes) in corpus("gridfn_csv") {
        if let Ok(f) = GridFn::read_csv(bytes.as_slice()) {
            accepted += 1;
            let mut buf = Vec::new();
            f.write_csv(&mut buf).unwrap();
            assert_eq!(GridFn::read_csv(buf.as_slice()).unwrap(), f);
        }
    }
    assert!(accepted >= 2);
}
