//! Exposure reporting: how many hosts answer on raw port 9100, per country,
//! ranked by GDP.
//!
//! Input is a scan export in `IP,PORT[,COUNTRY]` CSV form. Row order never
//! matters: the report is keyed by the GDP table, countries outside it fold
//! into one OTHER row, and malformed rows are set aside with a reason
//! instead of failing the run.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::net::IpAddr;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One accepted scan row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExposureRecord {
    pub ip: IpAddr,
    pub port: u16,
    /// ISO 3166-1 alpha-2, uppercase.
    pub country: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectedRow {
    pub line: usize,
    pub content: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ParsedExport {
    pub records: Vec<ExposureRecord>,
    pub rejects: Vec<RejectedRow>,
}

fn normalize_country(raw: &str) -> Option<String> {
    let c = raw.trim();
    if c.len() == 2 && c.bytes().all(|b| b.is_ascii_alphabetic()) {
        Some(c.to_ascii_uppercase())
    } else {
        None
    }
}

/// Parses a scan export. `default_country` covers two-column files from
/// single-country scans. Bad rows land in `rejects`; only an unreadable
/// file is an error, and that is the caller's to raise.
pub fn parse_export(text: &str, default_country: Option<&str>) -> ParsedExport {
    let default_country = default_country.and_then(normalize_country);
    let mut out = ParsedExport::default();
    let mut seen_row = false;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let lowered = line.to_ascii_lowercase().replace(' ', "");
        if !seen_row && (lowered == "ip,port" || lowered == "ip,port,country") {
            continue;
        }
        seen_row = true;
        let mut reject = |reason: &str| {
            out.rejects.push(RejectedRow {
                line: idx + 1,
                content: raw.to_string(),
                reason: reason.to_string(),
            });
        };
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < 2 || fields.len() > 3 {
            reject("expected IP,PORT or IP,PORT,COUNTRY");
            continue;
        }
        let Ok(ip) = fields[0].trim().parse::<IpAddr>() else {
            reject("bad IP address");
            continue;
        };
        let port = match fields[1].trim().parse::<u32>() {
            Ok(p) if (1..=u32::from(u16::MAX)).contains(&p) => p as u16,
            Ok(_) => {
                reject("port out of range");
                continue;
            }
            Err(_) => {
                reject("port is not a number");
                continue;
            }
        };
        let country = match fields.get(2) {
            Some(c) => match normalize_country(c) {
                Some(c) => c,
                None => {
                    reject("bad country code");
                    continue;
                }
            },
            None => match &default_country {
                Some(c) => c.clone(),
                None => {
                    reject("no country column and no default country");
                    continue;
                }
            },
        };
        out.records.push(ExposureRecord { ip, port, country });
    }
    out
}

pub fn parse_export_file(path: &Path, default_country: Option<&str>) -> Result<ParsedExport> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
    Ok(parse_export(&text, default_country))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GdpEntry {
    pub rank: u32,
    pub code: String,
    pub name: String,
}

/// Countries ordered by GDP. Ranks must be 1..=n with no gaps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GdpTable {
    entries: Vec<GdpEntry>,
}

impl GdpTable {
    pub fn new(mut entries: Vec<GdpEntry>) -> Result<GdpTable> {
        if entries.is_empty() {
            return Err(Error::InvalidGdpTable("empty table".into()));
        }
        entries.sort_by_key(|e| e.rank);
        for (i, e) in entries.iter().enumerate() {
            if e.rank as usize != i + 1 {
                return Err(Error::InvalidGdpTable(format!(
                    "ranks must be contiguous from 1; found rank {} at position {}",
                    e.rank,
                    i + 1
                )));
            }
            if normalize_country(&e.code).as_deref() != Some(e.code.as_str()) {
                return Err(Error::InvalidGdpTable(format!(
                    "bad country code {:?}",
                    e.code
                )));
            }
        }
        Ok(GdpTable { entries })
    }

    pub fn from_json(text: &str) -> Result<GdpTable> {
        let entries: Vec<GdpEntry> = serde_json::from_str(text)?;
        GdpTable::new(entries)
    }

    pub fn from_file(path: &Path) -> Result<GdpTable> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        GdpTable::from_json(&text)
    }

    /// The bundled table: the ten European countries the laboratory reports
    /// on, by 2018 GDP.
    pub fn builtin() -> GdpTable {
        GdpTable::from_json(include_str!("../fixtures/gdp_table.json"))
            .expect("bundled GDP table is valid")
    }

    pub fn entries(&self) -> &[GdpEntry] {
        &self.entries
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportRow {
    /// None for the OTHER aggregate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gdp_rank: Option<u32>,
    pub country: String,
    pub ip_count: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExposureReport {
    pub rows: Vec<ReportRow>,
    pub total: u64,
}

/// Aggregates records into the ranked report. Every GDP-table country gets
/// a row (zero included) in rank order; everything else folds into OTHER.
pub fn build_report(records: &[ExposureRecord], gdp: &GdpTable) -> ExposureReport {
    let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
    for r in records {
        *counts.entry(r.country.as_str()).or_insert(0) += 1;
    }
    let mut rows: Vec<ReportRow> = gdp
        .entries()
        .iter()
        .map(|e| ReportRow {
            gdp_rank: Some(e.rank),
            country: e.name.clone(),
            ip_count: counts.remove(e.code.as_str()).unwrap_or(0),
        })
        .collect();
    let other: u64 = counts.values().sum();
    if other > 0 {
        rows.push(ReportRow {
            gdp_rank: None,
            country: "OTHER".to_string(),
            ip_count: other,
        });
    }
    ExposureReport {
        rows,
        total: records.len() as u64,
    }
}

/// Thousands separated with dots, the way the counts are usually printed.
pub fn dotted(n: u64) -> String {
    let digits = n.to_string();
    let mut out = String::new();
    for (i, c) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i).is_multiple_of(3) {
            out.push('.');
        }
        out.push(c);
    }
    out
}

impl ExposureReport {
    pub fn to_text(&self) -> String {
        let width = self
            .rows
            .iter()
            .map(|r| r.country.len())
            .chain(["COUNTRY".len(), "TOTAL".len()])
            .max()
            .unwrap_or(8);
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<5} {:<width$} {:>12}",
            "GDP", "COUNTRY", "IP ADDRESSES"
        );
        for row in &self.rows {
            let rank = row.gdp_rank.map_or(String::new(), |r| r.to_string());
            let _ = writeln!(
                out,
                "{:<5} {:<width$} {:>12}",
                rank,
                row.country,
                dotted(row.ip_count)
            );
        }
        let _ = writeln!(
            out,
            "{:<5} {:<width$} {:>12}",
            "",
            "TOTAL",
            dotted(self.total)
        );
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Published CVE keyword search sizes combined by inclusion-exclusion:
/// distinct results for two overlapping keyword searches.
pub fn cve_summary(printer_matches: u64, printers_matches: u64, overlap: u64) -> Result<u64> {
    let smaller = printer_matches.min(printers_matches);
    if overlap > smaller {
        return Err(Error::CveOverlap { overlap, smaller });
    }
    Ok(printer_matches + printers_matches - overlap)
}

/// Deterministic synthetic scan exports sized to the published per-country
/// totals. Addresses are drawn from 10.0.0.0/8 so a fixture can never name
/// a real host.
pub mod fixture {
    /// Per-country row counts for the bundled European export, in GDP rank
    /// order.
    pub const EU_COUNTS: [(&str, u64); 10] = [
        ("DE", 12_891),
        ("RU", 9_737),
        ("GB", 6_349),
        ("FR", 6_634),
        ("IT", 2_787),
        ("ES", 2_088),
        ("TR", 835),
        ("PL", 1_425),
        ("NL", 4_934),
        ("CH", 624),
    ];

    /// Renders a full export CSV for the given counts.
    pub fn synthesize_export(counts: &[(&str, u64)]) -> String {
        let mut out = String::from("IP,PORT,COUNTRY\n");
        for (country_idx, (code, count)) in counts.iter().enumerate() {
            for i in 0..*count {
                let b = i / 250;
                let c = i % 250 + 1;
                out.push_str(&format!("10.{country_idx}.{b}.{c},9100,{code}\n"));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::path::PathBuf;

    fn fixture_path(name: &str) -> PathBuf {
        PathBuf::from(env!("CARGO_MANIFEST_DIR"))
            .join("fixtures")
            .join(name)
    }

    #[test]
    fn bundled_export_matches_its_generator() {
        let expected = fixture::synthesize_export(&fixture::EU_COUNTS);
        let actual = std::fs::read_to_string(fixture_path("scan_export_eu.csv")).unwrap();
        assert_eq!(actual, expected, "run the regenerate_bundled_export test");
    }

    #[test]
    #[ignore = "rewrites fixtures/scan_export_eu.csv from the generator"]
    fn regenerate_bundled_export() {
        std::fs::write(
            fixture_path("scan_export_eu.csv"),
            fixture::synthesize_export(&fixture::EU_COUNTS),
        )
        .unwrap();
    }

    #[test]
    fn parses_three_column_rows() {
        let parsed = parse_export("IP,PORT,COUNTRY\n87.156.104.144,9100,DE\n", None);
        assert_eq!(parsed.rejects, vec![]);
        assert_eq!(
            parsed.records,
            vec![ExposureRecord {
                ip: "87.156.104.144".parse().unwrap(),
                port: 9100,
                country: "DE".into()
            }]
        );
    }

    #[test]
    fn default_country_covers_two_column_files() {
        let parsed = parse_export("141.24.208.236,9100\n", Some("de"));
        assert_eq!(parsed.records[0].country, "DE");
        let none = parse_export("141.24.208.236,9100\n", None);
        assert!(none.records.is_empty());
        assert_eq!(none.rejects.len(), 1);
    }

    #[test]
    fn bad_rows_are_rejected_with_reasons_not_errors() {
        let parsed = parse_export(
            "IP,PORT,COUNTRY\n\
             not-an-ip,9100,DE\n\
             1.2.3.4,0,DE\n\
             1.2.3.4,66000,DE\n\
             1.2.3.4,9100,DEU\n\
             1.2.3.4\n\
             1.2.3.4,9100,DE\n",
            None,
        );
        assert_eq!(parsed.records.len(), 1);
        assert_eq!(parsed.rejects.len(), 5);
        assert!(parsed.rejects.iter().all(|r| !r.reason.is_empty()));
    }

    #[test]
    fn duplicate_ips_count_once_per_row() {
        let parsed = parse_export("1.2.3.4,9100,DE\n1.2.3.4,9100,DE\n", None);
        let report = build_report(&parsed.records, &GdpTable::builtin());
        assert_eq!(report.rows[0].ip_count, 2);
        assert_eq!(report.total, 2);
    }

    #[test]
    fn zero_count_countries_keep_their_row() {
        let report = build_report(&[], &GdpTable::builtin());
        assert_eq!(report.rows.len(), 10);
        assert!(report.rows.iter().all(|r| r.ip_count == 0));
        assert_eq!(report.total, 0);
    }

    #[test]
    fn unknown_countries_fold_into_other() {
        let parsed = parse_export("1.2.3.4,9100,US\n5.6.7.8,9100,JP\n9.9.9.9,9100,DE\n", None);
        let report = build_report(&parsed.records, &GdpTable::builtin());
        let other = report.rows.last().unwrap();
        assert_eq!(other.country, "OTHER");
        assert_eq!(other.gdp_rank, None);
        assert_eq!(other.ip_count, 2);
        assert_eq!(report.total, 3);
    }

    #[test]
    fn gdp_table_validation() {
        assert!(GdpTable::new(vec![]).is_err());
        let gap = vec![
            GdpEntry {
                rank: 1,
                code: "DE".into(),
                name: "Germany".into(),
            },
            GdpEntry {
                rank: 3,
                code: "FR".into(),
                name: "France".into(),
            },
        ];
        assert!(GdpTable::new(gap).is_err());
        let dup = vec![
            GdpEntry {
                rank: 1,
                code: "DE".into(),
                name: "Germany".into(),
            },
            GdpEntry {
                rank: 1,
                code: "FR".into(),
                name: "France".into(),
            },
        ];
        assert!(GdpTable::new(dup).is_err());
    }

    #[test]
    fn report_round_trips_through_json() {
        let parsed = parse_export("1.2.3.4,9100,DE\n2.3.4.5,631,US\n", None);
        let report = build_report(&parsed.records, &GdpTable::builtin());
        let back: ExposureReport = serde_json::from_str(&report.to_json()).unwrap();
        assert_eq!(back, report);
    }

    #[test]
    fn cve_inclusion_exclusion() {
        assert_eq!(cve_summary(179, 77, 33).unwrap(), 223);
        assert_eq!(cve_summary(5, 3, 3).unwrap(), 5);
        assert!(matches!(
            cve_summary(179, 77, 78),
            Err(Error::CveOverlap { .. })
        ));
    }

    #[test]
    fn dotted_grouping() {
        assert_eq!(dotted(0), "0");
        assert_eq!(dotted(624), "624");
        assert_eq!(dotted(1_425), "1.425");
        assert_eq!(dotted(48_304), "48.304");
        assert_eq!(dotted(1_234_567), "1.234.567");
    }

    proptest! {
        /// Rank order and counts are independent of record order.
        #[test]
        fn report_ignores_record_order(seed in proptest::collection::vec(0usize..10, 0..200)) {
            let codes = ["DE", "RU", "GB", "FR", "IT", "ES", "TR", "PL", "NL", "CH"];
            let mut records: Vec<ExposureRecord> = seed
                .iter()
                .enumerate()
                .map(|(i, c)| ExposureRecord {
                    ip: format!("10.9.{}.{}", i / 200, i % 200 + 1).parse().unwrap(),
                    port: 9100,
                    country: codes[*c].to_string(),
                })
                .collect();
            let gdp = GdpTable::builtin();
            let forward = build_report(&records, &gdp);
            records.reverse();
            let reversed = build_report(&records, &gdp);
            prop_assert_eq!(&forward, &reversed);
            let ranks: Vec<Option<u32>> = forward.rows.iter().map(|r| r.gdp_rank).collect();
            let expected: Vec<Option<u32>> = (1..=10).map(Some).collect();
            prop_assert_eq!(ranks, expected);
        }
    }
}
