//! Rendering of compliance reports as JSON or as a plain-text table.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::metrics::ComplianceReport;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum ReportFormat {
    #[default]
    Table,
    Json,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "table" => Ok(ReportFormat::Table),
            "json" => Ok(ReportFormat::Json),
            other => Err(format!(
                "unknown report format `{other}` (expected table or json)"
            )),
        }
    }
}

/// Renders `report`; `digits` sets the rounding of the table's scores.
pub fn serialize_report(report: &ComplianceReport, format: ReportFormat, digits: u32) -> String {
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("report types serialize infallibly");
            s.push('\n');
            s
        }
        ReportFormat::Table => table(report, digits),
    }
}

/// Scores in the column order FES, Fitness, Precision, then the exact
/// fractions underneath.
fn table(report: &ComplianceReport, digits: u32) -> String {
    let m = &report.metrics;
    let c = &m.counts;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "ground:     {} ({} behaviors)",
        report.metadata.ground_net, c.ground_total
    );
    let _ = writeln!(
        out,
        "candidate:  {} ({} behaviors, {} pruned)",
        report.metadata.candidate_net, report.stats.candidate_behaviors, c.pruned
    );
    let _ = writeln!(out, "alignment:  {}", report.metadata.alignment);
    out.push('\n');

    let cells = [
        ["FES".to_string(), m.fes.rounded(digits), fraction(m.fes)],
        [
            "Fitness".to_string(),
            m.fitness.rounded(digits),
            fraction(m.fitness),
        ],
        [
            "Precision".to_string(),
            m.precision.rounded(digits),
            fraction(m.precision),
        ],
    ];
    for row in 0..3 {
        let line: Vec<String> = cells
            .iter()
            .enumerate()
            .map(|(col, cell)| {
                let width = cell.iter().map(String::len).max().unwrap_or(0);
                if col + 1 == cells.len() {
                    cell[row].clone()
                } else {
                    format!("{:<width$}", cell[row])
                }
            })
            .collect();
        let _ = writeln!(out, "{}", line.join("  "));
    }
    out
}

fn fraction(r: crate::metrics::Ratio) -> String {
    format!("{}/{}", r.numerator, r.denominator)
}
