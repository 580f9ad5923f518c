//! Scenario-level behavior: report structure, determinism, and the
//! incomplete path.

use std::net::TcpListener;

use printjack::emulator::{EngineState, PrinterProfile};
use printjack::intercept::FindingKind;
use printjack::report::{emit_scenario_report, scenario_json, ReportFormat};
use printjack::risk::assessment_for;
use printjack::scenario::{run_scenario, ClientMode, ScenarioConfig, ScenarioKind, SCHEMA_VERSION};

fn small_paper_dos() -> ScenarioConfig {
    let mut config = ScenarioConfig::default_for(ScenarioKind::PaperDos);
    config.fleet = vec![PrinterProfile::new("ScenJet", vec![20])];
    config.repetitions = 8;
    config.reload_sheets = None;
    config
}

#[test]
fn paper_dos_report_structure() {
    let report = run_scenario(&small_paper_dos()).unwrap();
    assert_eq!(report.schema_version, SCHEMA_VERSION);
    assert_eq!(report.scenario, ScenarioKind::PaperDos);
    assert!(!report.incomplete);
    assert!(report.failure.is_none());
    assert_eq!(report.assessment, assessment_for(report.attack));
    assert_eq!(report.fleet.len(), 1);
    assert!(report.fleet[0].conservation_ok);
    assert_eq!(report.fleet[0].sheets_printed, 8);

    let flood = report.flood.as_ref().unwrap();
    assert_eq!(flood.result.jobs_attempted(), 8);
    assert_eq!(flood.result.jobs_refused(), 0);
    assert!(flood.snapshots.iter().any(|s| s.label == "initial"));
    assert!(flood.snapshots.iter().any(|s| s.label == "final"));
    assert!(report.finished_at_ms >= report.started_at_ms);
    assert!(!report.timeline.is_empty());
}

#[test]
fn paper_dos_counters_are_deterministic_across_runs() {
    let config = small_paper_dos();
    let a = run_scenario(&config).unwrap();
    let b = run_scenario(&config).unwrap();
    let fa = a.flood.as_ref().unwrap();
    let fb = b.flood.as_ref().unwrap();
    assert_eq!(fa.result.jobs_connected(), fb.result.jobs_connected());
    assert_eq!(fa.result.bytes_sent(), fb.result.bytes_sent());
    assert_eq!(a.fleet[0].trays_final, b.fleet[0].trays_final);
    assert_eq!(a.fleet[0].sheets_printed, b.fleet[0].sheets_printed);
    assert_eq!(a.fleet[0].engine_final, b.fleet[0].engine_final);
}

#[test]
fn intercept_cleartext_recovers_document_and_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = ScenarioConfig::default_for(ScenarioKind::Intercept);
    config.capture_dir = Some(dir.path().join("caps"));
    let report = run_scenario(&config).unwrap();
    assert!(!report.incomplete, "failure: {:?}", report.failure);

    let icept = report.intercept.as_ref().unwrap();
    assert_eq!(icept.mode, ClientMode::Cleartext);
    assert_eq!(icept.byte_identical, Some(true));
    assert_eq!(icept.captured_sha256.as_ref(), Some(&icept.source_sha256));
    assert!(icept.document_bytes > 0);
    assert_eq!(icept.metadata_recovered.username.as_deref(), Some("alice"));
    assert_eq!(
        icept.metadata_recovered.printer_model.as_deref(),
        Some("Lexmark MS620")
    );
    assert!(icept
        .findings
        .iter()
        .any(|f| f.kind == FindingKind::ContentBreach));
    assert!(icept
        .findings
        .iter()
        .any(|f| f.kind == FindingKind::MetadataAssociation));
    assert!(!icept.capture_files.is_empty());
    // Capture files really exist where the report says.
    for name in &icept.capture_files {
        assert!(std::path::Path::new(&icept.capture_dir).join(name).exists());
    }
}

#[test]
fn intercept_metadata_only_suppresses_the_document() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = ScenarioConfig::default_for(ScenarioKind::Intercept);
    config.client_mode = ClientMode::MetadataOnly;
    config.capture_dir = Some(dir.path().join("caps"));
    let report = run_scenario(&config).unwrap();
    assert!(!report.incomplete);

    let icept = report.intercept.as_ref().unwrap();
    assert_eq!(icept.captured_sha256, None);
    assert_eq!(icept.byte_identical, None);
    assert!(icept
        .findings
        .iter()
        .all(|f| f.kind != FindingKind::ContentBreach));
    assert!(icept
        .findings
        .iter()
        .any(|f| f.kind == FindingKind::MetadataAssociation));
}

#[test]
fn fanout_counts_every_request_at_the_victim() {
    let mut config = ScenarioConfig::default_for(ScenarioKind::Fanout);
    config.fleet = vec![
        PrinterProfile::new("ZombieJet", vec![10]),
        PrinterProfile::new("ZombieJet", vec![10]),
    ];
    config.requests_per_printer = Some(5);
    let report = run_scenario(&config).unwrap();
    assert!(!report.incomplete, "failure: {:?}", report.failure);

    let fan = report.fanout.as_ref().unwrap();
    assert_eq!(fan.fleet_size, 2);
    assert_eq!(fan.requests_planned, 10);
    assert_eq!(fan.connections_reaching_victim, 10);
    assert!(fan.bytes_reaching_victim > 0);
    assert!(fan.aggregate_requests_per_sec > 0.0);
    assert_eq!(report.fleet.len(), 2);
}

#[test]
fn boot_failure_yields_incomplete_report_not_error() {
    // Occupy a port so the fleet cannot bind it.
    let blocker = TcpListener::bind("127.0.0.1:0").unwrap();
    let port = blocker.local_addr().unwrap().port();

    let mut profile = PrinterProfile::new("DoomedJet", vec![5]);
    profile.data_port = Some(port);
    profile.control_port = Some(0);
    let mut config = small_paper_dos();
    config.fleet = vec![profile];

    let report = run_scenario(&config).unwrap();
    assert!(report.incomplete);
    assert!(report.failure.as_deref().unwrap().contains("data"));
    assert!(report.flood.is_none());
    // The verdict is still part of the partial report.
    assert_eq!(report.assessment, assessment_for(report.attack));
}

#[test]
fn scenario_json_is_deterministic_and_carries_the_verdict() {
    let report = run_scenario(&small_paper_dos()).unwrap();
    let a = scenario_json(&report);
    let b = scenario_json(&report);
    assert_eq!(a, b);
    assert!(a.contains("\"schema_version\":1"));
    assert!(a.contains("\"level\":\"HIGH\""));
    assert!(a.contains("\"attack\":\"PRINTJACK_2\""));
    assert!(a.contains("\"incomplete\":false"));
}

#[test]
fn report_file_matches_stdout_rendering() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let report = run_scenario(&small_paper_dos()).unwrap();
    let rendered = emit_scenario_report(&report, ReportFormat::Json, Some(path.as_path())).unwrap();
    let written = std::fs::read_to_string(&path).unwrap();
    assert_eq!(rendered, written);

    let text = emit_scenario_report(&report, ReportFormat::Text, None).unwrap();
    assert!(text.contains("=== scenario printjack2-paper-dos ==="));
    assert!(text.contains("[HIGH]"));
}

#[test]
fn watchdog_profile_survives_scenario_config_round_trip() {
    let mut config = ScenarioConfig::default_for(ScenarioKind::PaperDos);
    config.fleet = vec![PrinterProfile::m2727nf()];
    let json = serde_json::to_string(&config).unwrap();
    let back = ScenarioConfig::from_json(&json).unwrap();
    assert_eq!(back.fleet[0].watchdog_reboot_after_secs, Some(600));
}

#[test]
fn bundled_scenario_configs_parse_and_validate() {
    for name in [
        "scenario_paper_dos.json",
        "scenario_intercept.json",
        "scenario_fanout.json",
    ] {
        let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
            .join("fixtures")
            .join(name);
        let config = ScenarioConfig::from_file(&path).unwrap();
        config.validate().unwrap();
    }
}

#[test]
fn paper_dos_engine_ends_out_of_paper_when_flood_exceeds_stock() {
    let mut config = small_paper_dos();
    config.repetitions = 25; // 20 sheets in the tray
    let report = run_scenario(&config).unwrap();
    assert_eq!(report.fleet[0].engine_final, EngineState::OutOfPaper);
    assert_eq!(report.fleet[0].sheets_printed, 20);
    assert_eq!(report.fleet[0].jobs_completed, 20);
}
