//! Benchmark records and their CSV and Markdown renderings.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

/// One row of an experiment table.
///
/// For experiments 1 and 2, `total_seconds` is the whole setup plus keygen
/// run and `per_user_seconds` holds each user's keygen share. For 3 and 4 it
/// is the wall time of the concurrent download and `per_user_seconds` holds
/// each user thread's own time.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchmarkRecord {
    pub experiment: u8,
    pub users: usize,
    pub attributes: usize,
    pub file_mib: u64,
    pub total_seconds: f64,
    pub per_user_seconds: Vec<f64>,
    pub worst_seconds: f64,
}

impl BenchmarkRecord {
    /// Fills `worst_seconds` from the per-user times.
    pub fn new(
        experiment: u8,
        users: usize,
        attributes: usize,
        file_mib: u64,
        total_seconds: f64,
        per_user_seconds: Vec<f64>,
    ) -> Self {
        assert_eq!(per_user_seconds.len(), users, "one time per user");
        let worst_seconds = per_user_seconds.iter().copied().fold(0.0, f64::max);
        BenchmarkRecord { experiment, users, attributes, file_mib, total_seconds, per_user_seconds, worst_seconds }
    }

    /// `worst_seconds == max(per_user_seconds)` and one time per user.
    pub fn is_consistent(&self) -> bool {
        self.per_user_seconds.len() == self.users
            && self.worst_seconds == self.per_user_seconds.iter().copied().fold(0.0, f64::max)
    }
}

pub const CSV_COLUMNS: [&str; 7] =
    ["experiment", "users", "attributes", "file_mib", "total_seconds", "per_user_seconds", "worst_seconds"];

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("unexpected columns {0:?}")]
    Columns(Vec<String>),
    #[error("row {row}, column {column}: {reason}")]
    Field { row: usize, column: &'static str, reason: String },
}

/// Per-user times are `;`-separated inside one field. Floats use the
/// shortest representation that parses back to the same value.
pub fn to_csv(records: &[BenchmarkRecord]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_COLUMNS).expect("in-memory write");
    for r in records {
        let per_user: Vec<String> = r.per_user_seconds.iter().map(|t| t.to_string()).collect();
        w.write_record([
            r.experiment.to_string(),
            r.users.to_string(),
            r.attributes.to_string(),
            r.file_mib.to_string(),
            r.total_seconds.to_string(),
            per_user.join(";"),
            r.worst_seconds.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is UTF-8")
}

pub fn parse_csv(text: &str) -> Result<Vec<BenchmarkRecord>, ReportError> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if headers != CSV_COLUMNS {
        return Err(ReportError::Columns(headers));
    }
    let mut out = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let field = |c: usize| row.get(c).unwrap_or_default();
        let bad = |c: usize, e: &dyn std::fmt::Display| ReportError::Field {
            row: i + 1,
            column: CSV_COLUMNS[c],
            reason: e.to_string(),
        };
        macro_rules! num {
            ($c:expr) => {
                field($c).parse().map_err(|e| bad($c, &e))?
            };
        }
        let per_user = if field(5).is_empty() {
            Vec::new()
        } else {
            field(5).split(';').map(|t| t.parse::<f64>().map_err(|e| bad(5, &e))).collect::<Result<_, _>>()?
        };
        out.push(BenchmarkRecord {
            experiment: num!(0),
            users: num!(1),
            attributes: num!(2),
            file_mib: num!(3),
            total_seconds: num!(4),
            per_user_seconds: per_user,
            worst_seconds: num!(6),
        });
    }
    Ok(out)
}

/// One Markdown table per experiment, shaped like the published tables.
pub fn to_markdown(records: &[BenchmarkRecord]) -> String {
    let mut by_experiment: BTreeMap<u8, Vec<&BenchmarkRecord>> = BTreeMap::new();
    for r in records {
        by_experiment.entry(r.experiment).or_default().push(r);
    }
    let mut out = String::new();
    for (exp, rows) in by_experiment {
        let _ = writeln!(out, "### Experiment {exp}\n");
        match exp {
            1 => {
                out.push_str("| Number of users | Generation time (s) |\n|---:|---:|\n");
                for r in rows {
                    let _ = writeln!(out, "| {} | {:.3} |", r.users, r.total_seconds);
                }
            }
            2 => {
                out.push_str("| Number of attributes | Generation time (s) |\n|---:|---:|\n");
                for r in rows {
                    let _ = writeln!(out, "| {} | {:.3} |", r.attributes, r.total_seconds);
                }
            }
            _ => {
                let width = rows.iter().map(|r| r.users).max().unwrap_or(0);
                out.push_str("| File size (MiB) | Number of users |");
                for u in 1..=width {
                    let _ = write!(out, " {u} |");
                }
                out.push_str(" worst time |\n|---:|---:|");
                out.push_str(&"---:|".repeat(width + 1));
                out.push('\n');
                for r in rows {
                    let _ = write!(out, "| {} | {} |", r.file_mib, r.users);
                    for u in 0..width {
                        match r.per_user_seconds.get(u) {
                            Some(t) => {
                                let _ = write!(out, " {t:.2} |");
                            }
                            None => out.push_str("  |"),
                        }
                    }
                    let _ = writeln!(out, " {:.2} |", r.worst_seconds);
                }
            }
        }
        out.push('\n');
    }
    out
}
