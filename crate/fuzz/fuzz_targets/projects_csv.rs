#![no_main]

use libfuzzer_sys::fuzz_target;
use tsmc::ingest::parse_projects;

fuzz_target!(|data: &[u8]| {
    if let Ok(rows) = parse_projects(data) {
        for row in rows {
            assert!(row.budget.is_finite() && row.budget > 0.0);
        }
    }
});
