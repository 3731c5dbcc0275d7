//! CSV ledgers: expenses (`project_id,date,expense` or
//! `project_id,month_index,expense`) and project metadata
//! (`project_id,budget,ted,status`).

use std::collections::HashMap;
use std::io::{Read, Write};

use csv::{ReaderBuilder, StringRecord, Trim};

use crate::data::{ExpenseRecord, ProjectMeta, ProjectStatus, YearMonth};
use crate::error::{Error, Result};

/// When an expense happened: a calendar month or a month index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TimeKey {
    Calendar(YearMonth),
    Index(usize),
}

impl std::str::FromStr for TimeKey {
    type Err = Error;

    /// `YYYY-MM` or a non-negative integer.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.contains('-') {
            s.parse().map(TimeKey::Calendar)
        } else {
            s.parse()
                .map(TimeKey::Index)
                .map_err(|_| Error::InvalidDate(s.to_string()))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LedgerRow {
    pub project_id: String,
    pub time: TimeKey,
    pub expense: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectRow {
    pub project_id: String,
    pub budget: f64,
    pub ted: Option<TimeKey>,
    pub status: ProjectStatus,
}

fn line_of(record: &StringRecord) -> u64 {
    record.position().map_or(0, |p| p.line())
}

fn header_names(reader: &mut csv::Reader<impl Read>) -> Result<Vec<String>> {
    Ok(reader
        .headers()?
        .iter()
        .map(|h| h.trim().trim_start_matches('\u{feff}').to_ascii_lowercase())
        .collect())
}

fn field<'a>(record: &'a StringRecord, i: usize, name: &str) -> Result<&'a str> {
    record
        .get(i)
        .ok_or_else(|| Error::parse(line_of(record), format!("missing field {name}")))
}

fn parse_amount(record: &StringRecord, i: usize, name: &str) -> Result<f64> {
    let raw = field(record, i, name)?;
    let value: f64 = raw
        .parse()
        .map_err(|_| Error::parse(line_of(record), format!("{name} {raw:?} is not a number")))?;
    if !value.is_finite() {
        return Err(Error::parse(line_of(record), format!("{name} must be finite")));
    }
    Ok(value)
}

/// Reads an expenses CSV, detecting the time column from the header.
pub fn parse_expenses<R: Read>(input: R) -> Result<Vec<LedgerRow>> {
    let mut reader = ReaderBuilder::new().trim(Trim::All).from_reader(input);
    let headers = header_names(&mut reader)?;
    let calendar = match headers.iter().map(String::as_str).collect::<Vec<_>>()[..] {
        ["project_id", "date", "expense"] => true,
        ["project_id", "month_index", "expense"] => false,
        _ => {
            return Err(Error::parse(
                1,
                "expected header project_id,date,expense or project_id,month_index,expense",
            ))
        }
    };

    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = line_of(&record);
        let project_id = field(&record, 0, "project_id")?.to_string();
        if project_id.is_empty() {
            return Err(Error::parse(line, "empty project_id"));
        }
        let raw_time = field(&record, 1, "time")?;
        let time =
            if calendar {
                TimeKey::Calendar(raw_time.parse().map_err(|e: Error| Error::parse(line, e.to_string()))?)
            } else {
                TimeKey::Index(raw_time.parse().map_err(|_| {
                    Error::parse(line, format!("month_index {raw_time:?} is not a non-negative integer"))
                })?)
            };
        let expense = parse_amount(&record, 2, "expense")?;
        if expense < 0.0 {
            return Err(Error::parse(line, "expense must be non-negative"));
        }
        rows.push(LedgerRow {
            project_id,
            time,
            expense,
        });
    }
    Ok(rows)
}

/// Reads a projects CSV. `ted` may be blank, a month index or `YYYY-MM`.
pub fn parse_projects<R: Read>(input: R) -> Result<Vec<ProjectRow>> {
    let mut reader = ReaderBuilder::new().trim(Trim::All).from_reader(input);
    let headers = header_names(&mut reader)?;
    if headers != ["project_id", "budget", "ted", "status"] {
        return Err(Error::parse(1, "expected header project_id,budget,ted,status"));
    }

    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = line_of(&record);
        let project_id = field(&record, 0, "project_id")?.to_string();
        if project_id.is_empty() {
            return Err(Error::parse(line, "empty project_id"));
        }
        let budget = parse_amount(&record, 1, "budget")?;
        if budget <= 0.0 {
            return Err(Error::parse(line, "budget must be positive"));
        }
        let raw_ted = field(&record, 2, "ted")?;
        let ted = if raw_ted.is_empty() {
            None
        } else {
            Some(raw_ted.parse().map_err(|e: Error| Error::parse(line, e.to_string()))?)
        };
        let status = field(&record, 3, "status")?
            .parse()
            .map_err(|e: Error| Error::parse(line, e.to_string()))?;
        rows.push(ProjectRow {
            project_id,
            budget,
            ted,
            status,
        });
    }
    Ok(rows)
}

/// A ledger resolved to month indices and split at an optional cutoff.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexedLedger {
    pub train: Vec<ExpenseRecord>,
    pub held_out: Vec<ExpenseRecord>,
    pub projects: Vec<ProjectMeta>,
    /// Calendar month of row 0 for each project, when dates were used.
    pub epochs: Vec<Option<YearMonth>>,
}

/// Converts rows to month indices and withholds everything at or after
/// `cutoff`.
///
/// Calendar dates are indexed relative to each project's earliest ledger
/// month, so row 0 is the first month of every project. A calendar TED is
/// indexed the same way. Integer month indices are used as given.
pub fn index_ledger(rows: &[LedgerRow], projects: &[ProjectRow], cutoff: Option<TimeKey>) -> Result<IndexedLedger> {
    let calendar = rows.iter().any(|r| matches!(r.time, TimeKey::Calendar(_)));
    if calendar && rows.iter().any(|r| matches!(r.time, TimeKey::Index(_))) {
        return Err(Error::InvalidConfig("ledger mixes dates and month indices".into()));
    }
    match (cutoff, calendar) {
        (Some(TimeKey::Index(_)), true) if !rows.is_empty() => {
            return Err(Error::InvalidConfig("cutoff must be YYYY-MM for dated ledgers".into()))
        }
        (Some(TimeKey::Calendar(_)), false) if !rows.is_empty() => {
            return Err(Error::InvalidConfig(
                "cutoff must be a month index for month-indexed ledgers".into(),
            ))
        }
        _ => {}
    }

    let mut epoch_of: HashMap<&str, YearMonth> = HashMap::new();
    for r in rows {
        if let TimeKey::Calendar(ym) = r.time {
            epoch_of
                .entry(r.project_id.as_str())
                .and_modify(|e| *e = (*e).min(ym))
                .or_insert(ym);
        }
    }

    let mut train = Vec::new();
    let mut held_out = Vec::new();
    for r in rows {
        let month_index = match r.time {
            TimeKey::Index(i) => i,
            TimeKey::Calendar(ym) => ym.months_since(epoch_of[r.project_id.as_str()])?,
        };
        let record = ExpenseRecord {
            project_id: r.project_id.clone(),
            month_index,
            expense: r.expense,
        };
        if cutoff.is_some_and(|c| r.time >= c) {
            held_out.push(record);
        } else {
            train.push(record);
        }
    }

    let mut metas = Vec::with_capacity(projects.len());
    let mut epochs = Vec::with_capacity(projects.len());
    for p in projects {
        let epoch = epoch_of.get(p.project_id.as_str()).copied();
        let ted = match p.ted {
            None => None,
            Some(TimeKey::Index(i)) => Some(i),
            Some(TimeKey::Calendar(ym)) => {
                let epoch = epoch.ok_or_else(|| {
                    Error::InvalidConfig(format!(
                        "project {:?} has a dated TED but no dated ledger rows",
                        p.project_id
                    ))
                })?;
                // A TED before the first ledger month leaves nothing spendable.
                Some(ym.months_since(epoch).unwrap_or(0))
            }
        };
        metas.push(ProjectMeta {
            project_id: p.project_id.clone(),
            budget: p.budget,
            ted,
            status: p.status,
        });
        epochs.push(epoch);
    }

    Ok(IndexedLedger {
        train,
        held_out,
        projects: metas,
        epochs,
    })
}

/// Writes `project_id,month_index,expense`.
pub fn write_expenses<W: Write>(out: W, records: &[ExpenseRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["project_id", "month_index", "expense"])?;
    for r in records {
        w.write_record([r.project_id.clone(), r.month_index.to_string(), r.expense.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `project_id,budget,ted,status` with month-index TEDs.
pub fn write_projects<W: Write>(out: W, projects: &[ProjectMeta]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["project_id", "budget", "ted", "status"])?;
    for p in projects {
        w.write_record([
            p.project_id.clone(),
            p.budget.to_string(),
            p.ted.map(|t| t.to_string()).unwrap_or_default(),
            p.status.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
