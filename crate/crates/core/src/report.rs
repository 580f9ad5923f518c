//! Report rendering: the risk matrix and assessments as text, scenario
//! reports as text or JSON.
//!
//! JSON output is compact `serde_json` with SCREAMING_SNAKE_CASE enum
//! values throughout, so the level of a high verdict appears literally as
//! `"level":"HIGH"`. Rendering the same report twice yields identical
//! bytes; all timestamps are pinned inside the report itself.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use crate::error::{Error, Result};
use crate::exposure::dotted;
use crate::intercept::Finding;
use crate::risk::{risk_level, Assessment, Impact, Likelihood};
use crate::scenario::ScenarioReport;

/// Milliseconds since the Unix epoch.
pub fn unix_millis() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .unwrap_or_default()
        .as_millis() as u64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    #[default]
    Text,
    Json,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<ReportFormat> {
        match s.to_ascii_lowercase().as_str() {
            "text" => Ok(ReportFormat::Text),
            "json" => Ok(ReportFormat::Json),
            other => Err(Error::InvalidConfig(format!(
                "unknown report format {other:?} (expected text or json)"
            ))),
        }
    }
}

/// The full 5x5 matrix as a text grid. When `mark` names a cell, that cell
/// renders in brackets and uppercase.
pub fn render_matrix(mark: Option<(Likelihood, Impact)>) -> String {
    let mut out = String::new();
    let _ = write!(out, "{:<16}", "");
    for impact in Impact::ALL {
        let _ = write!(out, "{:<14}", impact.label());
    }
    out.push('\n');
    for likelihood in Likelihood::ALL {
        let _ = write!(out, "{:<16}", likelihood.label());
        for impact in Impact::ALL {
            let level = risk_level(likelihood, impact);
            let cell = if mark == Some((likelihood, impact)) {
                format!("[{}]", level.label().to_ascii_uppercase())
            } else {
                level.label().to_string()
            };
            let _ = write!(out, "{cell:<14}");
        }
        out.push('\n');
    }
    out
}

/// One assessment with the matrix it was read from.
pub fn render_assessment(a: &Assessment) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{}", a.attack_id);
    let _ = writeln!(
        out,
        "  likelihood {} x impact {} => risk {}",
        a.likelihood,
        a.impact,
        a.level.label().to_ascii_uppercase()
    );
    let _ = writeln!(out, "  {}", a.rationale);
    out.push('\n');
    out.push_str(&render_matrix(Some((a.likelihood, a.impact))));
    out
}

pub fn render_findings(findings: &[Finding]) -> String {
    if findings.is_empty() {
        return "no privacy findings\n".to_string();
    }
    let mut out = String::new();
    for (i, f) in findings.iter().enumerate() {
        let _ = writeln!(
            out,
            "{}. {:?} (capture {}, {} channel)",
            i + 1,
            f.kind,
            f.job_seq,
            f.channel.slug()
        );
        let _ = writeln!(out, "   {}", f.detail);
        let _ = writeln!(out, "   {}", f.gdpr_basis);
    }
    out
}

/// Compact JSON for a scenario report.
pub fn scenario_json(report: &ScenarioReport) -> String {
    serde_json::to_string(report).expect("scenario report serializes")
}

/// Human-oriented scenario rendering.
pub fn render_scenario_text(r: &ScenarioReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "=== scenario {} ===", r.scenario.slug());
    let _ = writeln!(
        out,
        "status: {}",
        if r.incomplete {
            "INCOMPLETE"
        } else {
            "complete"
        }
    );
    if let Some(f) = &r.failure {
        let _ = writeln!(out, "failure: {f}");
    }
    let _ = writeln!(
        out,
        "duration: {} ms",
        r.finished_at_ms.saturating_sub(r.started_at_ms)
    );
    out.push('\n');

    if !r.fleet.is_empty() {
        let _ = writeln!(out, "fleet:");
        for (i, p) in r.fleet.iter().enumerate() {
            let trays = p
                .trays_final
                .iter()
                .map(|t| format!("{}/{}", t.remaining, t.capacity))
                .collect::<Vec<_>>()
                .join(",");
            let _ = writeln!(
                out,
                "  {i}: {} data={} engine={} trays={} printed={} completed={} conservation={}",
                p.model,
                p.data_addr,
                p.engine_final.wire_name(),
                trays,
                p.sheets_printed,
                p.jobs_completed,
                if p.conservation_ok { "ok" } else { "VIOLATED" }
            );
        }
        out.push('\n');
    }

    if let Some(flood) = &r.flood {
        let _ = writeln!(out, "flood:");
        for t in &flood.result.per_target {
            let _ = writeln!(
                out,
                "  {}: attempted={} connected={} refused={} bytes={}",
                t.target,
                t.jobs_attempted,
                t.jobs_connected,
                t.jobs_refused,
                dotted(t.bytes_sent)
            );
        }
        let _ = writeln!(
            out,
            "  total: attempted={} connected={} refused={} bytes={}",
            flood.result.jobs_attempted(),
            flood.result.jobs_connected(),
            flood.result.jobs_refused(),
            dotted(flood.result.bytes_sent())
        );
        let _ = writeln!(out, "  tray snapshots:");
        for s in &flood.snapshots {
            let trays = s
                .trays
                .iter()
                .map(|t| format!("{}/{}", t.remaining, t.capacity))
                .collect::<Vec<_>>()
                .join(",");
            let _ = writeln!(
                out,
                "    printer {} [{}] engine={} trays={}",
                s.printer,
                s.label,
                s.engine.wire_name(),
                trays
            );
        }
        out.push('\n');
    }

    if let Some(icept) = &r.intercept {
        let _ = writeln!(out, "interception:");
        let _ = writeln!(out, "  mode: {}", icept.mode.label());
        let _ = writeln!(
            out,
            "  document: {} bytes, sha256 {}",
            dotted(icept.document_bytes),
            icept.source_sha256
        );
        match (&icept.captured_sha256, icept.byte_identical) {
            (Some(sha), Some(identical)) => {
                let _ = writeln!(
                    out,
                    "  captured: sha256 {sha} ({})",
                    if identical {
                        "byte-identical"
                    } else {
                        "DIFFERS from source"
                    }
                );
            }
            _ => {
                let _ = writeln!(out, "  captured: no document on the data channel");
            }
        }
        if let Some(s) = &icept.document_summary {
            let _ = writeln!(
                out,
                "  classified: {}, printable ratio {:.3}",
                s.format.label(),
                s.printable_ratio
            );
        }
        let meta = &icept.metadata_recovered;
        let opt = |v: &Option<String>| v.clone().unwrap_or_else(|| "(none)".into());
        let _ = writeln!(
            out,
            "  metadata recovered: username={} userid={} hostid={} jobname={} model={}",
            opt(&meta.username),
            opt(&meta.userid),
            opt(&meta.hostid),
            opt(&meta.jobname),
            opt(&meta.printer_model)
        );
        let _ = writeln!(out, "  captures in {}:", icept.capture_dir);
        for f in &icept.capture_files {
            let _ = writeln!(out, "    {f}");
        }
        out.push('\n');
        let _ = writeln!(out, "findings:");
        for line in render_findings(&icept.findings).lines() {
            let _ = writeln!(out, "  {line}");
        }
        out.push('\n');
    }

    if let Some(fan) = &r.fanout {
        let _ = writeln!(out, "fan-out:");
        let _ = writeln!(
            out,
            "  {} printer(s) x {} request(s) = {} planned",
            fan.fleet_size, fan.requests_per_printer, fan.requests_planned
        );
        let _ = writeln!(
            out,
            "  victim absorbed {} connection(s), {} bytes in {} ms ({:.1} req/s)",
            fan.connections_reaching_victim,
            dotted(fan.bytes_reaching_victim),
            fan.elapsed_ms,
            fan.aggregate_requests_per_sec
        );
        out.push('\n');
    }

    let _ = writeln!(out, "assessment:");
    for line in render_assessment(&r.assessment).lines() {
        let _ = writeln!(out, "  {line}");
    }
    out.push('\n');

    let _ = writeln!(out, "timeline:");
    for e in &r.timeline {
        let _ = writeln!(out, "  {} {}", e.at_ms, e.event);
    }
    out
}

/// Renders a scenario report and optionally writes it to `path`.
pub fn emit_scenario_report(
    report: &ScenarioReport,
    format: ReportFormat,
    path: Option<&Path>,
) -> Result<String> {
    let rendered = match format {
        ReportFormat::Text => render_scenario_text(report),
        ReportFormat::Json => scenario_json(report),
    };
    if let Some(path) = path {
        std::fs::write(path, &rendered).map_err(|e| Error::file(path, e))?;
    }
    Ok(rendered)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::risk::{assessment_for, AttackId, RiskLevel};

    #[test]
    fn matrix_grid_contains_every_cell() {
        let grid = render_matrix(None);
        assert_eq!(grid.lines().count(), 6);
        for l in Likelihood::ALL {
            assert!(grid.contains(l.label()));
        }
        // Spot-check a row: possible => low medium medium high high.
        let row = grid.lines().nth(3).unwrap();
        assert!(row.starts_with("possible"));
        assert_eq!(row.matches("high").count(), 2);
    }

    #[test]
    fn marked_cell_is_bracketed_uppercase() {
        let a = assessment_for(AttackId::Printjack2);
        let grid = render_matrix(Some((a.likelihood, a.impact)));
        assert!(grid.contains("[HIGH]"));
        assert_eq!(grid.matches('[').count(), 1);
    }

    #[test]
    fn assessment_render_names_the_level() {
        let a = assessment_for(AttackId::Printjack3);
        assert_eq!(a.level, RiskLevel::High);
        let text = render_assessment(&a);
        assert!(text.contains("likelihood likely x impact severe => risk HIGH"));
    }

    #[test]
    fn format_parsing() {
        assert_eq!("text".parse::<ReportFormat>().unwrap(), ReportFormat::Text);
        assert_eq!("JSON".parse::<ReportFormat>().unwrap(), ReportFormat::Json);
        assert!("yaml".parse::<ReportFormat>().is_err());
    }
}
