#![no_main]

use libfuzzer_sys::fuzz_target;
use tsmc::data::{ProjectMeta, ProjectStatus};
use tsmc::ingest::{index_ledger, parse_expenses, ProjectRow};

fuzz_target!(|data: &[u8]| {
    let Ok(rows) = parse_expenses(data) else { return };
    let mut ids: Vec<&str> = rows.iter().map(|r| r.project_id.as_str()).collect();
    ids.sort_unstable();
    ids.dedup();
    let projects: Vec<ProjectRow> = ids
        .iter()
        .map(|id| ProjectRow {
            project_id: id.to_string(),
            budget: 1e9,
            ted: None,
            status: ProjectStatus::Ongoing,
        })
        .collect();
    if let Ok(ledger) = index_ledger(&rows, &projects, None) {
        let meta: Vec<ProjectMeta> = ledger.projects;
        if ledger.train.iter().all(|r| r.month_index < 512) {
            let _ = tsmc::data::assemble(&ledger.train, &meta, None, None);
        }
    }
});
