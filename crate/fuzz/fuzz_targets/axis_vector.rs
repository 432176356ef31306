#![no_main]

use libfuzzer_sys::fuzz_target;
use rotwave_cli::args::{parse_axis_vector, parse_bch_operands, parse_real_list};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(v) = parse_axis_vector(text) {
        assert!(v.iter().all(|x| x.is_finite()));
    }
    if let Ok(list) = parse_real_list(text) {
        assert!(!list.is_empty() && list.iter().all(|x| x.is_finite()));
    }
    let items: Vec<&str> = text.split_whitespace().collect();
    let _ = parse_bch_operands(&items);
});
