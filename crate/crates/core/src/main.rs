//! `printjack` command line: run emulated printers, attack them, tap them,
//! and report on the results.

use std::collections::HashSet;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand};

use printjack::client::{self, ClientOptions, FloodPlan};
use printjack::emulator::{Printer, PrinterProfile};
use printjack::error::{Error, Result};
use printjack::exposure::{self, GdpTable};
use printjack::intercept::{self, CaptureStore, Channel, Tap, TapOptions};
use printjack::report::{self, ReportFormat};
use printjack::risk::{
    canonical_assessments, risk_level, Assessment, AttackId, Impact, Likelihood,
};
use printjack::scenario::{self, ScenarioConfig, ScenarioKind};

#[derive(Parser)]
#[command(
    name = "printjack",
    version,
    about = "Desk-scale laboratory for raw port-9100 printer attacks",
    long_about = "Runs emulated raw-9100 printers and the attacks against them: paper-wasting \
                  floods, busy-loop denial of service, traffic interception, and country-level \
                  exposure reporting. Attack tools only touch loopback or RFC 1918 targets \
                  unless ownership is explicitly acknowledged."
)]
struct Cli {
    /// Scenario configuration JSON (used by `scenario`).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one emulated printer until interrupted.
    Emulate(EmulateArgs),
    /// Flood raw-9100 targets with print jobs.
    Flood(FloodArgs),
    /// Relay printer traffic, capturing every connection to disk.
    Tap(TapArgs),
    /// Analyze stored captures for privacy findings.
    Findings(FindingsArgs),
    /// Aggregate a scan export into the GDP-ranked exposure report.
    Exposure(ExposureArgs),
    /// Print risk assessments from the 5x5 matrix.
    Assess(AssessArgs),
    /// Run an end-to-end scenario: printjack1|printjack2|printjack3.
    Scenario(ScenarioArgs),
}

#[derive(Args)]
struct EmulateArgs {
    /// Printer profile JSON; overrides the individual flags below.
    #[arg(long, value_name = "FILE")]
    profile: Option<PathBuf>,
    #[arg(long, default_value = "Lexmark MS620")]
    model: String,
    /// Tray capacity in sheets; repeat for multiple trays.
    #[arg(long = "tray", value_name = "SHEETS", default_values_t = vec![150u32])]
    trays: Vec<u32>,
    #[arg(long, default_value_t = 9100)]
    data_port: u16,
    #[arg(long, default_value_t = 65002)]
    control_port: u16,
    /// Reboot after this many seconds stuck in a busy loop.
    #[arg(long, value_name = "SECS")]
    watchdog_secs: Option<u64>,
}

#[derive(Args)]
struct FloodArgs {
    /// Targets file: one `IP` or `IP,PORT` per line.
    #[arg(long, value_name = "FILE")]
    targets: PathBuf,
    /// Job body sent to every target, once per repetition.
    #[arg(long, value_name = "FILE")]
    bot: PathBuf,
    #[arg(long, default_value_t = 1000)]
    repetitions: u32,
    /// Targets flooded concurrently.
    #[arg(long, default_value_t = 1)]
    parallel: usize,
    /// Pause between jobs to the same target, in milliseconds.
    #[arg(long, value_name = "MS", default_value_t = 0)]
    delay_ms: u64,
    #[arg(long, value_name = "SECS", default_value_t = 5)]
    timeout_secs: u64,
    /// Required to touch targets outside loopback/RFC 1918.
    #[arg(long)]
    i_own_these_targets: bool,
    #[arg(long, default_value = "text")]
    format: String,
    /// Also write the result here.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TapArgs {
    /// Local port to listen on (0 for ephemeral).
    #[arg(long, default_value_t = 0)]
    listen: u16,
    /// Printer address to relay to, `IP:PORT`.
    #[arg(long, value_name = "ADDR")]
    upstream: SocketAddr,
    /// Which channel this tap carries: data|control.
    #[arg(long, default_value = "data")]
    channel: String,
    #[arg(long, value_name = "DIR", default_value = "captures")]
    capture_dir: PathBuf,
    /// Required to relay to upstreams outside loopback/RFC 1918.
    #[arg(long)]
    i_own_these_targets: bool,
}

#[derive(Args)]
struct FindingsArgs {
    #[arg(long, value_name = "DIR", default_value = "captures")]
    capture_dir: PathBuf,
    #[arg(long, default_value = "text")]
    format: String,
}

#[derive(Args)]
struct ExposureArgs {
    /// Scan export CSV: `IP,PORT[,COUNTRY]`.
    #[arg(long, value_name = "FILE")]
    input: PathBuf,
    /// Country code for two-column exports.
    #[arg(long, value_name = "CC")]
    country: Option<String>,
    /// GDP ranking JSON; defaults to the bundled European table.
    #[arg(long, value_name = "FILE")]
    gdp_table: Option<PathBuf>,
    /// Append the CVE keyword summary: `PRINTER,PRINTERS,OVERLAP`.
    #[arg(long, value_name = "A,B,OVERLAP")]
    cve: Option<String>,
    #[arg(long, default_value = "text")]
    format: String,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AssessArgs {
    /// One attack: printjack1|printjack2|printjack3. Default: all three.
    #[arg(long)]
    attack: Option<String>,
    /// Ad-hoc matrix lookup (requires --impact).
    #[arg(long, requires = "impact")]
    likelihood: Option<String>,
    #[arg(long, requires = "likelihood")]
    impact: Option<String>,
    #[arg(long, default_value = "text")]
    format: String,
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario name; may be omitted when --config names it.
    name: Option<String>,
    /// Write the report here as well as to stdout.
    #[arg(long, value_name = "FILE")]
    report: Option<PathBuf>,
    #[arg(long, default_value = "text")]
    format: String,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version are not usage errors.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Emulate(args) => cmd_emulate(args),
        Command::Flood(args) => cmd_flood(args),
        Command::Tap(args) => cmd_tap(args),
        Command::Findings(args) => cmd_findings(args),
        Command::Exposure(args) => cmd_exposure(args),
        Command::Assess(args) => cmd_assess(args),
        Command::Scenario(args) => cmd_scenario(args, cli.config.as_deref()),
    }
}

fn cmd_emulate(args: EmulateArgs) -> Result<ExitCode> {
    let profile = match &args.profile {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
            PrinterProfile::from_json(&text)?
        }
        None => {
            let mut p = PrinterProfile::new(args.model.clone(), args.trays.clone());
            p.data_port = Some(args.data_port);
            p.control_port = Some(args.control_port);
            p.watchdog_reboot_after_secs = args.watchdog_secs;
            p
        }
    };
    profile.validate()?;
    let printer = Printer::start(profile)?;
    println!(
        "{} emulated: data port {}, control port {}",
        printer.model(),
        printer.data_addr(),
        printer.control_addr()
    );
    let trays: Vec<String> = printer
        .tray_status()
        .iter()
        .map(|t| format!("{}/{}", t.remaining, t.capacity))
        .collect();
    println!("trays: {}; press Ctrl-C to stop", trays.join(", "));

    // The live service maps wall time onto the simulated watchdog clock.
    let mut last_tick = Instant::now();
    let mut seen_jobs = 0usize;
    let mut last_engine = printer.engine();
    loop {
        std::thread::sleep(Duration::from_millis(200));
        let now = Instant::now();
        printer.tick_watchdog(now - last_tick);
        last_tick = now;

        let jobs = printer.jobs();
        for job in &jobs[seen_jobs..] {
            println!(
                "job: {} bytes, {} page(s), {} sheet(s) -> {}",
                job.bytes_received,
                job.outcome.pages_requested,
                job.outcome.sheets_consumed,
                job.outcome.status.wire_name()
            );
        }
        seen_jobs = jobs.len();

        let engine = printer.engine();
        if engine != last_engine {
            println!("engine: {}", engine.wire_name());
            last_engine = engine;
        }
    }
}

fn cmd_flood(args: FloodArgs) -> Result<ExitCode> {
    let mut plan = FloodPlan::from_files(&args.targets, &args.bot, args.repetitions)?;
    plan.parallel_targets = args.parallel.max(1);
    plan.options = ClientOptions {
        connect_timeout: Duration::from_secs(args.timeout_secs),
        io_timeout: Duration::from_secs(args.timeout_secs),
        inter_job_delay: Duration::from_millis(args.delay_ms),
        allow_external: args.i_own_these_targets,
    };
    let result = client::run_flood(&plan)?;
    let format: ReportFormat = args.format.parse()?;
    let rendered = match format {
        ReportFormat::Json => serde_json::to_string_pretty(&result)?,
        ReportFormat::Text => {
            let mut out = String::new();
            for t in &result.per_target {
                out.push_str(&format!(
                    "{}: attempted={} connected={} refused={} bytes={}{}\n",
                    t.target,
                    t.jobs_attempted,
                    t.jobs_connected,
                    t.jobs_refused,
                    t.bytes_sent,
                    t.last_error
                        .as_ref()
                        .map(|e| format!(" last_error={e:?}"))
                        .unwrap_or_default()
                ));
            }
            out.push_str(&format!(
                "total: attempted={} connected={} refused={} bytes={}\n",
                result.jobs_attempted(),
                result.jobs_connected(),
                result.jobs_refused(),
                result.bytes_sent()
            ));
            out
        }
    };
    print!("{rendered}");
    if let Some(path) = &args.out {
        std::fs::write(path, &rendered).map_err(|e| Error::file(path, e))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn parse_channel(s: &str) -> Result<Channel> {
    match s.to_ascii_lowercase().as_str() {
        "data" => Ok(Channel::Data),
        "control" => Ok(Channel::Control),
        other => Err(Error::InvalidConfig(format!(
            "unknown channel {other:?} (expected data or control)"
        ))),
    }
}

fn cmd_tap(args: TapArgs) -> Result<ExitCode> {
    let channel = parse_channel(&args.channel)?;
    let opts = TapOptions {
        allow_external: args.i_own_these_targets,
        ..TapOptions::default()
    };
    let tap = Tap::start(args.listen, args.upstream, channel, opts)?;
    let store = CaptureStore::create(&args.capture_dir)?;
    println!(
        "tap on {} relaying {} channel to {}; captures in {}",
        tap.local_addr(),
        channel.slug(),
        tap.upstream(),
        store.dir().display()
    );
    println!("press Ctrl-C to stop");

    let mut saved: HashSet<u64> = HashSet::new();
    let mut reported_events = 0usize;
    loop {
        std::thread::sleep(Duration::from_millis(200));
        for job in tap.jobs() {
            if saved.insert(job.seq) {
                let path = store.save(&job)?;
                println!(
                    "captured {} byte(s) from {} -> {}",
                    job.payload.len(),
                    job.source,
                    path.display()
                );
            }
        }
        let events = tap.events();
        for e in &events[reported_events..] {
            eprintln!("tap: {e}");
        }
        reported_events = events.len();
    }
}

fn cmd_findings(args: FindingsArgs) -> Result<ExitCode> {
    let jobs = CaptureStore::load_all(&args.capture_dir)?;
    let findings = intercept::privacy_findings(&jobs);
    let format: ReportFormat = args.format.parse()?;
    match format {
        ReportFormat::Json => println!("{}", serde_json::to_string_pretty(&findings)?),
        ReportFormat::Text => {
            print!(
                "{} capture(s), {} finding(s)\n{}",
                jobs.len(),
                findings.len(),
                report::render_findings(&findings)
            );
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_exposure(args: ExposureArgs) -> Result<ExitCode> {
    let gdp = match &args.gdp_table {
        Some(path) => GdpTable::from_file(path)?,
        None => GdpTable::builtin(),
    };
    let parsed = exposure::parse_export_file(&args.input, args.country.as_deref())?;
    if !parsed.rejects.is_empty() {
        eprintln!("{} row(s) rejected:", parsed.rejects.len());
        for r in parsed.rejects.iter().take(5) {
            eprintln!("  line {}: {} ({:?})", r.line, r.reason, r.content);
        }
        if parsed.rejects.len() > 5 {
            eprintln!("  ...");
        }
    }
    let exposure_report = exposure::build_report(&parsed.records, &gdp);

    let cve = match &args.cve {
        Some(spec) => {
            let parts: Vec<u64> = spec
                .split(',')
                .map(|p| p.trim().parse::<u64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| {
                    Error::InvalidConfig(format!("--cve expects A,B,OVERLAP, got {spec:?}"))
                })?;
            if parts.len() != 3 {
                return Err(Error::InvalidConfig(format!(
                    "--cve expects A,B,OVERLAP, got {spec:?}"
                )));
            }
            Some((
                parts[0],
                parts[1],
                parts[2],
                exposure::cve_summary(parts[0], parts[1], parts[2])?,
            ))
        }
        None => None,
    };

    let format: ReportFormat = args.format.parse()?;
    let rendered = match format {
        ReportFormat::Json => exposure_report.to_json() + "\n",
        ReportFormat::Text => {
            let mut out = exposure_report.to_text();
            if let Some((a, b, overlap, distinct)) = cve {
                out.push_str(&format!(
                    "\nCVE keyword searches: {a} + {b} with {overlap} shared => {distinct} distinct\n"
                ));
            }
            out
        }
    };
    print!("{rendered}");
    if let Some(path) = &args.out {
        std::fs::write(path, &rendered).map_err(|e| Error::file(path, e))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn parse_likelihood(s: &str) -> Result<Likelihood> {
    let n: String = s
        .to_ascii_lowercase()
        .chars()
        .filter(|c| c.is_ascii_alphanumeric())
        .collect();
    Likelihood::ALL
        .into_iter()
        .find(|l| l.label().replace(' ', "") == n)
        .ok_or_else(|| Error::InvalidConfig(format!("unknown likelihood {s:?}")))
}

fn parse_impact(s: &str) -> Result<Impact> {
    let n = s.to_ascii_lowercase();
    Impact::ALL
        .into_iter()
        .find(|i| i.label() == n)
        .ok_or_else(|| Error::InvalidConfig(format!("unknown impact {s:?}")))
}

fn parse_attack(s: &str) -> Result<AttackId> {
    let n: String = s
        .to_ascii_lowercase()
        .chars()
        .filter(|c| c.is_ascii_alphanumeric())
        .collect();
    match n.as_str() {
        "printjack1" | "pj1" | "1" => Ok(AttackId::Printjack1),
        "printjack2" | "pj2" | "2" => Ok(AttackId::Printjack2),
        "printjack3" | "pj3" | "3" => Ok(AttackId::Printjack3),
        _ => Err(Error::InvalidConfig(format!("unknown attack {s:?}"))),
    }
}

fn cmd_assess(args: AssessArgs) -> Result<ExitCode> {
    let format: ReportFormat = args.format.parse()?;

    if let (Some(l), Some(i)) = (&args.likelihood, &args.impact) {
        let likelihood = parse_likelihood(l)?;
        let impact = parse_impact(i)?;
        let level = risk_level(likelihood, impact);
        match format {
            ReportFormat::Json => println!(
                "{}",
                serde_json::json!({
                    "likelihood": likelihood,
                    "impact": impact,
                    "level": level,
                })
            ),
            ReportFormat::Text => {
                println!(
                    "likelihood {} x impact {} => risk {}\n",
                    likelihood,
                    impact,
                    level.label().to_ascii_uppercase()
                );
                print!("{}", report::render_matrix(Some((likelihood, impact))));
            }
        }
        return Ok(ExitCode::SUCCESS);
    }

    let assessments: Vec<Assessment> = match &args.attack {
        Some(a) => vec![printjack::risk::assessment_for(parse_attack(a)?)],
        None => canonical_assessments(),
    };
    match format {
        ReportFormat::Json => println!("{}", serde_json::to_string_pretty(&assessments)?),
        ReportFormat::Text => {
            for a in &assessments {
                println!("{}", report::render_assessment(a));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_scenario(args: ScenarioArgs, config_path: Option<&std::path::Path>) -> Result<ExitCode> {
    let named_kind = match &args.name {
        Some(name) => Some(ScenarioKind::parse_cli(name).ok_or_else(|| {
            Error::InvalidConfig(format!(
                "unknown scenario {name:?} (expected printjack1|printjack2|printjack3)"
            ))
        })?),
        None => None,
    };
    let config = match config_path {
        Some(path) => {
            let config = ScenarioConfig::from_file(path)?;
            if let Some(kind) = named_kind {
                if config.scenario != kind {
                    return Err(Error::InvalidConfig(format!(
                        "scenario name {} disagrees with config {}",
                        kind.slug(),
                        config.scenario.slug()
                    )));
                }
            }
            config
        }
        None => match named_kind {
            Some(kind) => ScenarioConfig::default_for(kind),
            None => {
                return Err(Error::InvalidConfig(
                    "name a scenario or pass --config".into(),
                ))
            }
        },
    };

    let scenario_report = scenario::run_scenario(&config)?;
    let format: ReportFormat = args.format.parse()?;
    let rendered = report::emit_scenario_report(&scenario_report, format, args.report.as_deref())?;
    println!("{rendered}");
    Ok(if scenario_report.incomplete {
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    })
}
