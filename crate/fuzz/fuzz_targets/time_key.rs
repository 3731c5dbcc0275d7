#![no_main]

use libfuzzer_sys::fuzz_target;
use tsmc::data::YearMonth;
use tsmc::ingest::TimeKey;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let _ = text.parse::<TimeKey>();
    if let Ok(ym) = text.parse::<YearMonth>() {
        assert_eq!(ym.to_string().parse::<YearMonth>().unwrap(), ym);
    }
});
