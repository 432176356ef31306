//! Replays the checked-in fuzz seeds through the invariants the fuzz targets
//! assert.

use std::fs;
use std::path::PathBuf;

use rotwave_cli::args::{parse_axis_vector, parse_bch_operands, parse_real_list};
use rotwave_cli::trajectory_csv::{read_rows, write_rows};
use rotwave_cli::RunConfig;

fn seeds(target: &str) -> Vec<(PathBuf, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fuzz/corpus")
        .join(target);
    let mut out: Vec<_> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let p = e.unwrap().path();
            let bytes = fs::read(&p).unwrap();
            (p, bytes)
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

#[test]
fn run_config_seeds() {
    let mut accepted = 0;
    for (path, bytes) in seeds("run_config") {
        let text = std::str::from_utf8(&bytes).unwrap();
        if let Ok(cfg) = RunConfig::from_json_str(text) {
            accepted += 1;
            let back = RunConfig::from_json_str(&cfg.to_json_pretty()).unwrap();
            assert_eq!(back, cfg, "{}", path.display());
        }
    }
    assert!(accepted >= 3);
}

#[test]
fn axis_vector_seeds() {
    let mut accepted = 0;
    for (_, bytes) in seeds("axis_vector") {
        let text = std::str::from_utf8(&bytes).unwrap();
        if let Ok(v) = parse_axis_vector(text) {
            assert!(v.iter().all(|x| x.is_finite()));
        }
        if let Ok(list) = parse_real_list(text) {
            assert!(list.iter().all(|x| x.is_finite()));
        }
        let items: Vec<&str> = text.split_whitespace().collect();
        accepted += parse_bch_operands(&items).is_ok() as usize;
    }
    assert_eq!(accepted, 2);
}

#[test]
fn trajectory_csv_seeds() {
    let mut accepted = 0;
    for (path, bytes) in seeds("trajectory_csv") {
        if let Ok(rows) = read_rows(bytes.as_slice()) {
            accepted += 1;
            let mut buf = Vec::new();
            write_rows(&mut buf, &rows).unwrap();
            assert_eq!(
                read_rows(buf.as_slice()).unwrap(),
                rows,
                "{}",
                path.display()
            );
            for r in &rows {
                assert!(r.orthogonality_defect() < 1e-8);
            }
        }
    }
    assert!(accepted >= 2);
}
