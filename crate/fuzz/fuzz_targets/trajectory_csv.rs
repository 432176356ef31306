#![no_main]

use libfuzzer_sys::fuzz_target;
use rotwave_cli::trajectory_csv::{read_rows, write_rows};

fuzz_target!(|data: &[u8]| {
    if let Ok(rows) = read_rows(data) {
        // Accepted rows are finite and re-serialize to an identical table.
        let mut buf = Vec::new();
        write_rows(&mut buf, &rows).expect("write to memory");
        assert_eq!(read_rows(buf.as_slice()).expect("re-read"), rows);
    }
});
