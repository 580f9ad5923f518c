//! End-to-end reproductions of the three attacks, run entirely against
//! emulated printers on loopback.
//!
//! A scenario boots a fleet, drives the attacker-side tools, and leaves an
//! auditable report: what ran, what the printers looked like afterwards,
//! and the standing risk verdict for the attack class. A failing module
//! does not abort the run silently; the report comes back marked
//! `incomplete` with the failure recorded.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::client::{self, ClientOptions, FloodPlan, FloodResult};
use crate::emulator::{EngineState, Printer, PrinterProfile, TrayState};
use crate::error::{Error, Result};
use crate::exposure::dotted;
use crate::intercept::{self, CaptureStore, Channel, DocumentSummary, Finding, Tap, TapOptions};
use crate::pjl::JobMetadata;
use crate::report::unix_millis;
use crate::risk::{assessment_for, Assessment, AttackId};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ScenarioKind {
    #[serde(rename = "PRINTJACK_1_FANOUT")]
    Fanout,
    #[serde(rename = "PRINTJACK_2_PAPER_DOS")]
    PaperDos,
    #[serde(rename = "PRINTJACK_3_INTERCEPT")]
    Intercept,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 3] = [
        ScenarioKind::Fanout,
        ScenarioKind::PaperDos,
        ScenarioKind::Intercept,
    ];

    pub fn attack_id(self) -> AttackId {
        match self {
            ScenarioKind::Fanout => AttackId::Printjack1,
            ScenarioKind::PaperDos => AttackId::Printjack2,
            ScenarioKind::Intercept => AttackId::Printjack3,
        }
    }

    pub fn slug(self) -> &'static str {
        match self {
            ScenarioKind::Fanout => "printjack1-fanout",
            ScenarioKind::PaperDos => "printjack2-paper-dos",
            ScenarioKind::Intercept => "printjack3-intercept",
        }
    }

    /// Lenient CLI spelling: `printjack1`, `printjack-2-paper-dos`, `fanout`,
    /// `intercept`, ... all resolve.
    pub fn parse_cli(name: &str) -> Option<ScenarioKind> {
        let n: String = name
            .to_ascii_lowercase()
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect();
        match n.as_str() {
            "printjack1" | "printjack1fanout" | "fanout" | "pj1" => Some(ScenarioKind::Fanout),
            "printjack2" | "printjack2paperdos" | "paperdos" | "pj2" => {
                Some(ScenarioKind::PaperDos)
            }
            "printjack3" | "printjack3intercept" | "intercept" | "pj3" => {
                Some(ScenarioKind::Intercept)
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClientMode {
    /// Document and metadata both cross the wire.
    #[default]
    Cleartext,
    /// Document withheld; only control-channel metadata is sent.
    MetadataOnly,
}

impl ClientMode {
    pub fn label(self) -> &'static str {
        match self {
            ClientMode::Cleartext => "cleartext",
            ClientMode::MetadataOnly => "metadata-only",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub scenario: ScenarioKind,
    /// Emulated printers to boot. Profiles without explicit ports get
    /// ephemeral ones so fleets never collide.
    #[serde(default)]
    pub fleet: Vec<PrinterProfile>,
    /// Flood targets; defaults to the fleet's own data ports.
    #[serde(default)]
    pub targets_file: Option<PathBuf>,
    /// Flood job body; defaults to the classic one-line test page.
    #[serde(default)]
    pub bot_file: Option<PathBuf>,
    #[serde(default = "default_repetitions")]
    pub repetitions: u32,
    /// Sheets added to every printer's first tray halfway through the
    /// flood, reproducing an operator refilling a draining device.
    #[serde(default)]
    pub reload_sheets: Option<u32>,
    #[serde(default)]
    pub requests_per_printer: Option<u32>,
    /// Document for the interception run; defaults to a bundled synthetic
    /// 1 MiB PDF-classified specimen.
    #[serde(default)]
    pub document: Option<PathBuf>,
    #[serde(default)]
    pub metadata: Option<JobMetadata>,
    #[serde(default)]
    pub client_mode: ClientMode,
    /// Where captures land; defaults to a fresh directory under the system
    /// temp dir.
    #[serde(default)]
    pub capture_dir: Option<PathBuf>,
    /// Ownership acknowledgement forwarded to the target interlock.
    #[serde(default)]
    pub acknowledge_external_targets: bool,
}

fn default_repetitions() -> u32 {
    1000
}

impl ScenarioConfig {
    /// Self-contained demo configuration for a scenario.
    pub fn default_for(kind: ScenarioKind) -> ScenarioConfig {
        let fleet = match kind {
            ScenarioKind::Fanout => vec![
                PrinterProfile::ms620(),
                PrinterProfile::m2727nf(),
                PrinterProfile::ms620(),
            ],
            ScenarioKind::PaperDos => vec![PrinterProfile::ms620()],
            ScenarioKind::Intercept => vec![PrinterProfile::ms620()],
        };
        ScenarioConfig {
            scenario: kind,
            fleet,
            targets_file: None,
            bot_file: None,
            repetitions: match kind {
                ScenarioKind::PaperDos => 200,
                _ => default_repetitions(),
            },
            reload_sheets: match kind {
                ScenarioKind::PaperDos => Some(50),
                _ => None,
            },
            requests_per_printer: Some(25),
            document: None,
            metadata: None,
            client_mode: ClientMode::default(),
            capture_dir: None,
            acknowledge_external_targets: false,
        }
    }

    pub fn from_json(text: &str) -> Result<ScenarioConfig> {
        let config: ScenarioConfig =
            serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<ScenarioConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        ScenarioConfig::from_json(&text)
    }

    /// Rejects configurations that cannot possibly run: empty fleet, zero
    /// repetitions, or referenced files that do not exist. Checked before
    /// anything is booted.
    pub fn validate(&self) -> Result<()> {
        if self.fleet.is_empty() {
            return Err(Error::InvalidConfig("fleet must not be empty".into()));
        }
        for p in &self.fleet {
            p.validate()?;
        }
        if self.repetitions == 0 {
            return Err(Error::InvalidConfig(
                "repetitions must be at least 1".into(),
            ));
        }
        for (label, path) in [
            ("targets_file", &self.targets_file),
            ("bot_file", &self.bot_file),
            ("document", &self.document),
        ] {
            if let Some(p) = path {
                if !p.is_file() {
                    return Err(Error::InvalidConfig(format!(
                        "{label} {} does not exist",
                        p.display()
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TimelineEvent {
    pub at_ms: u64,
    pub event: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct FleetEntry {
    pub model: String,
    pub data_addr: SocketAddr,
    pub control_addr: SocketAddr,
    pub engine_final: EngineState,
    pub trays_final: Vec<TrayState>,
    pub jobs_received: u64,
    pub jobs_completed: u64,
    pub sheets_printed: u64,
    pub conservation_ok: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct TraySnapshot {
    pub label: String,
    pub printer: usize,
    pub engine: EngineState,
    pub trays: Vec<TrayState>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FloodSection {
    pub result: FloodResult,
    pub snapshots: Vec<TraySnapshot>,
}

#[derive(Debug, Clone, Serialize)]
pub struct InterceptSection {
    pub mode: ClientMode,
    pub document_bytes: u64,
    pub source_sha256: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub captured_sha256: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub byte_identical: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub document_summary: Option<DocumentSummary>,
    pub metadata_recovered: JobMetadata,
    pub findings: Vec<Finding>,
    pub capture_dir: String,
    pub capture_files: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FanoutSection {
    pub fleet_size: usize,
    pub requests_per_printer: u32,
    pub requests_planned: u64,
    pub connections_reaching_victim: u64,
    pub bytes_reaching_victim: u64,
    pub elapsed_ms: u64,
    pub aggregate_requests_per_sec: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScenarioReport {
    pub schema_version: u32,
    pub scenario: ScenarioKind,
    pub attack: AttackId,
    pub started_at_ms: u64,
    pub finished_at_ms: u64,
    pub incomplete: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
    pub assessment: Assessment,
    pub fleet: Vec<FleetEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flood: Option<FloodSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub intercept: Option<InterceptSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fanout: Option<FanoutSection>,
    pub timeline: Vec<TimelineEvent>,
}

struct Recorder {
    timeline: Vec<TimelineEvent>,
}

impl Recorder {
    fn note(&mut self, event: impl Into<String>) {
        self.timeline.push(TimelineEvent {
            at_ms: unix_millis(),
            event: event.into(),
        });
    }
}

/// Runs one scenario to completion. Configuration problems are errors;
/// anything that breaks after boot comes back as an `incomplete` report.
pub fn run_scenario(config: &ScenarioConfig) -> Result<ScenarioReport> {
    config.validate()?;
    let kind = config.scenario;
    let mut rec = Recorder {
        timeline: Vec::new(),
    };
    let mut report = ScenarioReport {
        schema_version: SCHEMA_VERSION,
        scenario: kind,
        attack: kind.attack_id(),
        started_at_ms: unix_millis(),
        finished_at_ms: 0,
        incomplete: false,
        failure: None,
        assessment: assessment_for(kind.attack_id()),
        fleet: Vec::new(),
        flood: None,
        intercept: None,
        fanout: None,
        timeline: Vec::new(),
    };
    rec.note(format!("scenario {} starting", kind.slug()));
    let outcome = match kind {
        ScenarioKind::PaperDos => run_paper_dos(config, &mut rec, &mut report),
        ScenarioKind::Intercept => run_intercept(config, &mut rec, &mut report),
        ScenarioKind::Fanout => run_fanout(config, &mut rec, &mut report),
    };
    if let Err(e) = outcome {
        report.incomplete = true;
        report.failure = Some(e.to_string());
        rec.note(format!("scenario aborted: {e}"));
    } else {
        rec.note("scenario complete");
    }
    report.timeline = rec.timeline;
    report.finished_at_ms = unix_millis();
    Ok(report)
}

fn boot_fleet(profiles: &[PrinterProfile], rec: &mut Recorder) -> Result<Vec<Printer>> {
    let mut fleet = Vec::with_capacity(profiles.len());
    for (i, profile) in profiles.iter().enumerate() {
        let mut p = profile.clone();
        if p.data_port.is_none() {
            p.data_port = Some(0);
        }
        if p.control_port.is_none() {
            p.control_port = Some(0);
        }
        let printer = Printer::start(p)?;
        rec.note(format!(
            "printer {i} ({}) up: data {}, control {}",
            printer.model(),
            printer.data_addr(),
            printer.control_addr()
        ));
        fleet.push(printer);
    }
    Ok(fleet)
}

fn fleet_entries(fleet: &[Printer]) -> Vec<FleetEntry> {
    fleet
        .iter()
        .map(|p| FleetEntry {
            model: p.model(),
            data_addr: p.data_addr(),
            control_addr: p.control_addr(),
            engine_final: p.engine(),
            trays_final: p.tray_status(),
            jobs_received: p.jobs().len() as u64,
            jobs_completed: p.jobs_completed(),
            sheets_printed: p.sheets_printed(),
            conservation_ok: p.conservation_holds(),
        })
        .collect()
}

fn snapshot_fleet(fleet: &[Printer], label: &str, into: &mut Vec<TraySnapshot>) {
    for (i, p) in fleet.iter().enumerate() {
        into.push(TraySnapshot {
            label: label.to_string(),
            printer: i,
            engine: p.engine(),
            trays: p.tray_status(),
        });
    }
}

fn merge_flood(mut a: FloodResult, b: FloodResult) -> FloodResult {
    for (sa, sb) in a.per_target.iter_mut().zip(b.per_target) {
        sa.jobs_attempted += sb.jobs_attempted;
        sa.jobs_connected += sb.jobs_connected;
        sa.jobs_refused += sb.jobs_refused;
        sa.bytes_sent += sb.bytes_sent;
        if sb.last_error.is_some() {
            sa.last_error = sb.last_error;
        }
    }
    a
}

fn client_options(config: &ScenarioConfig) -> ClientOptions {
    ClientOptions {
        allow_external: config.acknowledge_external_targets,
        ..ClientOptions::default()
    }
}

/// The default flood body: one line, one page per job.
pub const DEFAULT_BOT_LINE: &str = "hacked printer!!!!";

fn run_paper_dos(
    config: &ScenarioConfig,
    rec: &mut Recorder,
    report: &mut ScenarioReport,
) -> Result<()> {
    let fleet = boot_fleet(&config.fleet, rec)?;

    let targets: Vec<SocketAddr> = match &config.targets_file {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
            client::parse_targets(&text)?
        }
        None => fleet.iter().map(|p| p.data_addr()).collect(),
    };
    let bot_lines = match &config.bot_file {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
            client::read_bot_lines(&text)
        }
        None => vec![DEFAULT_BOT_LINE.to_string()],
    };

    let mut snapshots = Vec::new();
    snapshot_fleet(&fleet, "initial", &mut snapshots);

    let phases: Vec<u32> = match config.reload_sheets {
        Some(_) if config.repetitions >= 2 => {
            let first = config.repetitions / 2;
            vec![first, config.repetitions - first]
        }
        _ => vec![config.repetitions],
    };

    let mut merged: Option<FloodResult> = None;
    for (phase_idx, reps) in phases.iter().enumerate() {
        if phase_idx > 0 {
            let sheets = config.reload_sheets.unwrap_or(0);
            for (i, p) in fleet.iter().enumerate() {
                let fill = p.reload_tray(0, sheets)?;
                rec.note(format!(
                    "printer {i} tray 0 reloaded with {sheets} sheets (now {fill})"
                ));
            }
            snapshot_fleet(&fleet, "after reload", &mut snapshots);
        }
        let mut plan = FloodPlan::new(targets.clone(), bot_lines.clone(), *reps)?;
        plan.options = client_options(config);
        rec.note(format!(
            "flood phase {}: {} repetitions against {} target(s)",
            phase_idx + 1,
            reps,
            targets.len()
        ));
        let result = client::run_flood(&plan)?;
        rec.note(format!(
            "flood phase {} done: {} connected, {} refused, {} bytes",
            phase_idx + 1,
            result.jobs_connected(),
            result.jobs_refused(),
            dotted(result.bytes_sent())
        ));
        snapshot_fleet(
            &fleet,
            if phase_idx + 1 == phases.len() {
                "final"
            } else {
                "before reload"
            },
            &mut snapshots,
        );
        for (i, p) in fleet.iter().enumerate() {
            if p.engine() == EngineState::OutOfPaper {
                rec.note(format!(
                    "printer {i} out of paper after printing {} sheets",
                    p.sheets_printed()
                ));
            }
        }
        merged = Some(match merged {
            Some(prev) => merge_flood(prev, result),
            None => result,
        });
    }

    for (i, p) in fleet.iter().enumerate() {
        if !p.conservation_holds() {
            return Err(Error::Module(format!(
                "printer {i} failed the paper conservation check"
            )));
        }
    }

    report.flood = Some(FloodSection {
        result: merged.expect("at least one phase"),
        snapshots,
    });
    report.fleet = fleet_entries(&fleet);
    for p in &fleet {
        p.shutdown();
    }
    Ok(())
}

/// Deterministic 1 MiB document that classifies as PDF by magic while
/// exercising the full byte range, so capture fidelity is meaningful.
pub fn synthetic_document() -> Vec<u8> {
    const SIZE: usize = 1 << 20;
    let mut doc = Vec::with_capacity(SIZE);
    doc.extend_from_slice(b"%PDF-1.7\n% synthetic capture-fidelity specimen\n");
    let mut x: u64 = 0x243f_6a88_85a3_08d3;
    while doc.len() < SIZE {
        x = x
            .wrapping_mul(6_364_136_223_846_793_005)
            .wrapping_add(1_442_695_040_888_963_407);
        doc.push((x >> 33) as u8);
    }
    doc.truncate(SIZE);
    doc
}

fn default_metadata(document: Option<&Path>) -> JobMetadata {
    let jobname = document
        .and_then(|p| p.file_name())
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "q3-salaries.pdf".to_string());
    JobMetadata {
        username: Some("alice".into()),
        userid: Some("u1001".into()),
        hostid: Some("host-042".into()),
        jobname: Some(jobname),
        printer_model: None,
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

fn run_intercept(
    config: &ScenarioConfig,
    rec: &mut Recorder,
    report: &mut ScenarioReport,
) -> Result<()> {
    let fleet = boot_fleet(&config.fleet[..1], rec)?;
    let printer = &fleet[0];

    let tap_opts = TapOptions {
        allow_external: config.acknowledge_external_targets,
        ..TapOptions::default()
    };
    let data_tap = Tap::start(0, printer.data_addr(), Channel::Data, tap_opts.clone())?;
    let control_tap = Tap::start(0, printer.control_addr(), Channel::Control, tap_opts)?;
    rec.note(format!(
        "taps up: data {} -> {}, control {} -> {}",
        data_tap.local_addr(),
        printer.data_addr(),
        control_tap.local_addr(),
        printer.control_addr()
    ));

    let document = match &config.document {
        Some(path) => std::fs::read(path).map_err(|e| Error::file(path, e))?,
        None => synthetic_document(),
    };
    let metadata = config
        .metadata
        .clone()
        .unwrap_or_else(|| default_metadata(config.document.as_deref()));
    let opts = client_options(config);

    let mode = config.client_mode;
    if mode == ClientMode::Cleartext {
        let sent = client::send_raw(data_tap.local_addr(), &document, &opts)?;
        rec.note(format!(
            "document sent through the tap: {} bytes",
            dotted(sent)
        ));
    } else {
        rec.note("metadata-only mode: document withheld from the data channel");
    }
    let reply = client::send_metadata(control_tap.local_addr(), &metadata, &opts)?;
    rec.note(format!(
        "metadata sent; printer answered {} bytes on the control channel",
        reply.bytes.len()
    ));

    let wait = Duration::from_secs(10);
    if !control_tap.wait_for_jobs(1, wait) {
        return Err(Error::Module("control capture never completed".into()));
    }
    if mode == ClientMode::Cleartext && !data_tap.wait_for_jobs(1, wait) {
        return Err(Error::Module("data capture never completed".into()));
    }

    let mut jobs = data_tap.jobs();
    jobs.extend(control_tap.jobs());

    let capture_dir = match &config.capture_dir {
        Some(d) => d.clone(),
        None => std::env::temp_dir().join(format!(
            "printjack-captures-{}-{}",
            std::process::id(),
            unix_millis()
        )),
    };
    let store = CaptureStore::create(&capture_dir)?;
    let mut capture_files = Vec::new();
    for job in &jobs {
        let path = store.save(job)?;
        capture_files.push(
            path.file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default(),
        );
    }
    capture_files.sort();
    rec.note(format!(
        "{} capture(s) persisted to {}",
        jobs.len(),
        capture_dir.display()
    ));

    let data_job = jobs.iter().find(|j| j.channel == Channel::Data);
    let (captured_sha256, byte_identical, document_summary) = match data_job {
        Some(job) => {
            let (bytes, summary) = intercept::reassemble_document(job);
            (
                Some(sha256_hex(&bytes)),
                Some(bytes == document),
                Some(summary),
            )
        }
        None => (None, None, None),
    };

    let mut recovered = JobMetadata::default();
    for job in &jobs {
        recovered = recovered.merged_with(&job.metadata());
    }
    let findings = intercept::privacy_findings(&jobs);
    rec.note(format!("analysis: {} privacy finding(s)", findings.len()));

    report.intercept = Some(InterceptSection {
        mode,
        document_bytes: document.len() as u64,
        source_sha256: sha256_hex(&document),
        captured_sha256,
        byte_identical,
        document_summary,
        metadata_recovered: recovered,
        findings,
        capture_dir: capture_dir.display().to_string(),
        capture_files,
    });

    // Teardown order: the client is already done, then the taps, then the
    // printer behind them.
    data_tap.shutdown();
    control_tap.shutdown();
    report.fleet = fleet_entries(&fleet);
    for p in &fleet {
        p.shutdown();
    }
    Ok(())
}

/// Victim stand-in for the fan-out scenario: accepts, drains, counts.
pub struct TrafficSink {
    addr: SocketAddr,
    connections: Arc<AtomicU64>,
    bytes: Arc<AtomicU64>,
    shutdown: Arc<AtomicBool>,
    accept_thread: std::sync::Mutex<Option<thread::JoinHandle<()>>>,
}

impl TrafficSink {
    pub fn start() -> Result<TrafficSink> {
        let listener =
            std::net::TcpListener::bind((std::net::Ipv4Addr::LOCALHOST, 0)).map_err(|source| {
                Error::PortBind {
                    role: "sink",
                    port: 0,
                    source,
                }
            })?;
        let addr = listener.local_addr()?;
        let connections = Arc::new(AtomicU64::new(0));
        let bytes = Arc::new(AtomicU64::new(0));
        let shutdown = Arc::new(AtomicBool::new(false));
        let accept_thread = {
            let connections = Arc::clone(&connections);
            let bytes = Arc::clone(&bytes);
            let shutdown = Arc::clone(&shutdown);
            thread::spawn(move || loop {
                let (mut stream, _) = match listener.accept() {
                    Ok(pair) => pair,
                    Err(_) => {
                        if shutdown.load(Ordering::SeqCst) {
                            return;
                        }
                        continue;
                    }
                };
                if shutdown.load(Ordering::SeqCst) {
                    return;
                }
                connections.fetch_add(1, Ordering::SeqCst);
                let bytes = Arc::clone(&bytes);
                thread::spawn(move || {
                    use std::io::Read;
                    let _ = stream.set_read_timeout(Some(Duration::from_secs(10)));
                    let mut chunk = [0u8; 8192];
                    let mut n_total = 0u64;
                    loop {
                        match stream.read(&mut chunk) {
                            Ok(0) => break,
                            Ok(n) => n_total += n as u64,
                            Err(e) if e.kind() == std::io::ErrorKind::Interrupted => continue,
                            Err(_) => break,
                        }
                    }
                    bytes.fetch_add(n_total, Ordering::SeqCst);
                });
            })
        };
        Ok(TrafficSink {
            addr,
            connections,
            bytes,
            shutdown,
            accept_thread: std::sync::Mutex::new(Some(accept_thread)),
        })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn connections(&self) -> u64 {
        self.connections.load(Ordering::SeqCst)
    }

    pub fn bytes(&self) -> u64 {
        self.bytes.load(Ordering::SeqCst)
    }

    pub fn shutdown(&self) {
        if self.shutdown.swap(true, Ordering::SeqCst) {
            return;
        }
        let _ = std::net::TcpStream::connect_timeout(&self.addr, Duration::from_millis(200));
        if let Some(t) = self.accept_thread.lock().unwrap().take() {
            let _ = t.join();
        }
    }
}

impl Drop for TrafficSink {
    fn drop(&mut self) {
        self.shutdown();
    }
}

fn run_fanout(
    config: &ScenarioConfig,
    rec: &mut Recorder,
    report: &mut ScenarioReport,
) -> Result<()> {
    let fleet = boot_fleet(&config.fleet, rec)?;
    let sink = TrafficSink::start()?;
    rec.note(format!("victim sink listening on {}", sink.addr()));

    let per_printer = config.requests_per_printer.unwrap_or(25);
    let planned = per_printer as u64 * fleet.len() as u64;
    let opts = client_options(config);
    rec.note(format!(
        "fan-out: {} printer(s) x {} request(s) each",
        fleet.len(),
        per_printer
    ));

    let started = Instant::now();
    let mut worker_errors: Vec<String> = Vec::new();
    thread::scope(|s| {
        let handles: Vec<_> = fleet
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let opts = &opts;
                let sink_addr = sink.addr();
                let model = p.model();
                s.spawn(move || {
                    let mut errs = Vec::new();
                    for r in 0..per_printer {
                        let line = format!("request {r} relayed via zombie {i} ({model})");
                        if let Err(e) = client::send_job(sink_addr, &[line], opts) {
                            errs.push(format!("zombie {i} request {r}: {e}"));
                        }
                    }
                    errs
                })
            })
            .collect();
        for h in handles {
            worker_errors.extend(h.join().expect("fan-out worker panicked"));
        }
    });
    let elapsed = started.elapsed();
    for e in &worker_errors {
        rec.note(format!("fan-out error: {e}"));
    }

    let elapsed_ms = elapsed.as_millis().max(1) as u64;
    let section = FanoutSection {
        fleet_size: fleet.len(),
        requests_per_printer: per_printer,
        requests_planned: planned,
        connections_reaching_victim: sink.connections(),
        bytes_reaching_victim: sink.bytes(),
        elapsed_ms,
        aggregate_requests_per_sec: sink.connections() as f64 / (elapsed_ms as f64 / 1000.0),
    };
    rec.note(format!(
        "victim absorbed {} connection(s), {} bytes in {} ms",
        section.connections_reaching_victim,
        dotted(section.bytes_reaching_victim),
        elapsed_ms
    ));
    report.fanout = Some(section);
    report.fleet = fleet_entries(&fleet);

    sink.shutdown();
    for p in &fleet {
        p.shutdown();
    }
    if !worker_errors.is_empty() {
        return Err(Error::Module(format!(
            "{} fan-out request(s) failed",
            worker_errors.len()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kind_parsing_is_lenient() {
        assert_eq!(
            ScenarioKind::parse_cli("printjack2"),
            Some(ScenarioKind::PaperDos)
        );
        assert_eq!(
            ScenarioKind::parse_cli("PRINTJACK-3-INTERCEPT"),
            Some(ScenarioKind::Intercept)
        );
        assert_eq!(
            ScenarioKind::parse_cli("fanout"),
            Some(ScenarioKind::Fanout)
        );
        assert_eq!(ScenarioKind::parse_cli("printjack4"), None);
    }

    #[test]
    fn empty_fleet_is_rejected_before_boot() {
        let mut config = ScenarioConfig::default_for(ScenarioKind::PaperDos);
        config.fleet.clear();
        assert!(matches!(
            run_scenario(&config),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn missing_files_are_rejected_before_boot() {
        let mut config = ScenarioConfig::default_for(ScenarioKind::PaperDos);
        config.bot_file = Some(PathBuf::from("/nonexistent/bot.txt"));
        assert!(matches!(
            run_scenario(&config),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn synthetic_document_is_stable_pdf_sized_1mib() {
        let a = synthetic_document();
        let b = synthetic_document();
        assert_eq!(a, b);
        assert_eq!(a.len(), 1 << 20);
        assert!(a.starts_with(b"%PDF-"));
        assert_eq!(
            intercept::summarize_document(&a).format,
            intercept::DocumentFormat::Pdf
        );
    }

    #[test]
    fn config_round_trips_through_json() {
        let config = ScenarioConfig::default_for(ScenarioKind::Intercept);
        let text = serde_json::to_string(&config).unwrap();
        let back = ScenarioConfig::from_json(&text).unwrap();
        assert_eq!(back.scenario, config.scenario);
        assert_eq!(back.fleet, config.fleet);
        assert_eq!(back.client_mode, config.client_mode);
    }
}
