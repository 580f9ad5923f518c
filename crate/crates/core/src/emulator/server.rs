//! TCP front end for [`PrinterSim`]: the raw data port and the `@PJL`
//! control port, both bound on loopback.
//!
//! Data channel: one connection is one job. The payload runs from accept to
//! the client's half-close; the printer sends nothing back. A busy printer
//! still drains the bytes (the line stays up), it just refuses to print
//! them, and the refusal is only visible on the control channel.
//!
//! Control channel: the client sends `@PJL SET` lines and half-closes; the
//! printer answers with its status and `@PJL MODEL=<model>`, then closes:
//!
//! ```text
//! @PJL SET ENGINE=<engine>
//! @PJL SET LASTJOB=<status of most recent job, or NONE>
//! @PJL SET TRAYS=<remaining>/<capacity>,...
//! @PJL MODEL=<model>
//! ```

use std::io::{self, Read, Write};
use std::net::{Ipv4Addr, SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::Duration;

use crate::error::{Error, Result};
use crate::pjl::{self, JobMetadata};

use super::{EngineState, JobOutcome, PrinterProfile, PrinterSim, TrayState};

/// Inactivity cutoff after which a stalled connection is treated as closed.
const IDLE_TIMEOUT: Duration = Duration::from_secs(10);

/// One job as seen by the data port.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JobRecord {
    pub bytes_received: u64,
    pub outcome: JobOutcome,
}

struct Shared {
    sim: Mutex<PrinterSim>,
    jobs: Mutex<Vec<JobRecord>>,
    last_metadata: Mutex<Option<JobMetadata>>,
    data_connections: AtomicU64,
    control_connections: AtomicU64,
    shutdown: AtomicBool,
}

/// A running emulated printer. Dropping it stops both listeners.
pub struct Printer {
    shared: Arc<Shared>,
    data_addr: SocketAddr,
    control_addr: SocketAddr,
    accept_threads: Mutex<Vec<JoinHandle<()>>>,
}

impl Printer {
    /// Binds both channels on loopback and starts serving. Ports come from
    /// the profile; 0 asks the OS for an ephemeral port.
    pub fn start(profile: PrinterProfile) -> Result<Printer> {
        let sim = PrinterSim::new(profile.clone())?;
        let data_listener = bind("data", profile.effective_data_port())?;
        let control_listener = bind("control", profile.effective_control_port())?;
        let data_addr = data_listener.local_addr()?;
        let control_addr = control_listener.local_addr()?;

        let shared = Arc::new(Shared {
            sim: Mutex::new(sim),
            jobs: Mutex::new(Vec::new()),
            last_metadata: Mutex::new(None),
            data_connections: AtomicU64::new(0),
            control_connections: AtomicU64::new(0),
            shutdown: AtomicBool::new(false),
        });

        let data_thread = {
            let shared = Arc::clone(&shared);
            thread::spawn(move || accept_loop(data_listener, shared, handle_data))
        };
        let control_thread = {
            let shared = Arc::clone(&shared);
            thread::spawn(move || accept_loop(control_listener, shared, handle_control))
        };

        Ok(Printer {
            shared,
            data_addr,
            control_addr,
            accept_threads: Mutex::new(vec![data_thread, control_thread]),
        })
    }

    pub fn data_addr(&self) -> SocketAddr {
        self.data_addr
    }

    pub fn control_addr(&self) -> SocketAddr {
        self.control_addr
    }

    pub fn model(&self) -> String {
        self.shared.sim.lock().unwrap().profile().model.clone()
    }

    pub fn engine(&self) -> EngineState {
        self.shared.sim.lock().unwrap().engine()
    }

    pub fn tray_status(&self) -> Vec<TrayState> {
        self.shared.sim.lock().unwrap().tray_status()
    }

    pub fn total_remaining(&self) -> u64 {
        self.shared.sim.lock().unwrap().total_remaining()
    }

    pub fn jobs_completed(&self) -> u64 {
        self.shared.sim.lock().unwrap().jobs_completed()
    }

    pub fn sheets_printed(&self) -> u64 {
        self.shared.sim.lock().unwrap().sheets_printed()
    }

    pub fn conservation_holds(&self) -> bool {
        self.shared.sim.lock().unwrap().conservation_holds()
    }

    pub fn reload_tray(&self, index: usize, sheets: u32) -> Result<u32> {
        self.shared.sim.lock().unwrap().reload_tray(index, sheets)
    }

    pub fn reset(&self) {
        self.shared.sim.lock().unwrap().reset()
    }

    pub fn tick_watchdog(&self, elapsed: Duration) -> EngineState {
        self.shared.sim.lock().unwrap().tick_watchdog(elapsed)
    }

    /// Jobs the data port has accepted so far, in arrival order.
    pub fn jobs(&self) -> Vec<JobRecord> {
        self.shared.jobs.lock().unwrap().clone()
    }

    pub fn data_connections(&self) -> u64 {
        self.shared.data_connections.load(Ordering::SeqCst)
    }

    pub fn control_connections(&self) -> u64 {
        self.shared.control_connections.load(Ordering::SeqCst)
    }

    /// Metadata accumulated from control-channel SET lines.
    pub fn last_metadata(&self) -> Option<JobMetadata> {
        self.shared.last_metadata.lock().unwrap().clone()
    }

    /// Stops accepting connections. Idempotent; in-flight handlers finish
    /// on their own.
    pub fn shutdown(&self) {
        if self.shared.shutdown.swap(true, Ordering::SeqCst) {
            return;
        }
        // Poke both listeners so blocked accept() calls wake up and see the flag.
        for addr in [self.data_addr, self.control_addr] {
            let _ = TcpStream::connect_timeout(&addr, Duration::from_millis(200));
        }
        let mut threads = self.accept_threads.lock().unwrap();
        for t in threads.drain(..) {
            let _ = t.join();
        }
    }
}

impl Drop for Printer {
    fn drop(&mut self) {
        self.shutdown();
    }
}

fn bind(role: &'static str, port: u16) -> Result<TcpListener> {
    TcpListener::bind((Ipv4Addr::LOCALHOST, port)).map_err(|source| Error::PortBind {
        role,
        port,
        source,
    })
}

fn accept_loop(listener: TcpListener, shared: Arc<Shared>, handler: fn(TcpStream, &Shared)) {
    loop {
        let stream = match listener.accept() {
            Ok((stream, _)) => stream,
            Err(_) => {
                if shared.shutdown.load(Ordering::SeqCst) {
                    return;
                }
                continue;
            }
        };
        if shared.shutdown.load(Ordering::SeqCst) {
            return;
        }
        let shared = Arc::clone(&shared);
        thread::spawn(move || handler(stream, &shared));
    }
}

/// Reads until EOF, a stall, or a hard error, returning whatever arrived.
/// Partial payloads are printed as received; a raw printer has no framing
/// to tell truncation from completion.
fn drain(stream: &mut TcpStream) -> Vec<u8> {
    let _ = stream.set_read_timeout(Some(IDLE_TIMEOUT));
    let mut buf = Vec::new();
    let mut chunk = [0u8; 8192];
    loop {
        match stream.read(&mut chunk) {
            Ok(0) => break,
            Ok(n) => buf.extend_from_slice(&chunk[..n]),
            Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
            Err(_) => break,
        }
    }
    buf
}

fn handle_data(mut stream: TcpStream, shared: &Shared) {
    shared.data_connections.fetch_add(1, Ordering::SeqCst);
    let payload = drain(&mut stream);
    let outcome = shared.sim.lock().unwrap().submit(&payload);
    shared.jobs.lock().unwrap().push(JobRecord {
        bytes_received: payload.len() as u64,
        outcome,
    });
    // No response on the data channel; dropping the stream closes it, which
    // is the client's only completion signal.
}

fn handle_control(mut stream: TcpStream, shared: &Shared) {
    shared.control_connections.fetch_add(1, Ordering::SeqCst);
    let inbound = drain(&mut stream);
    let observed = pjl::parse_metadata(&inbound);
    if !observed.is_empty() {
        let mut slot = shared.last_metadata.lock().unwrap();
        let merged = match slot.take() {
            Some(prev) => prev.merged_with(&observed),
            None => observed,
        };
        *slot = Some(merged);
    }

    let reply = {
        let sim = shared.sim.lock().unwrap();
        let last = shared
            .jobs
            .lock()
            .unwrap()
            .last()
            .map_or("NONE", |j| j.outcome.status.wire_name());
        let trays = sim
            .tray_status()
            .iter()
            .map(|t| format!("{}/{}", t.remaining, t.capacity))
            .collect::<Vec<_>>()
            .join(",");
        format!(
            "@PJL SET ENGINE={}\n@PJL SET LASTJOB={}\n@PJL SET TRAYS={}\n@PJL MODEL={}\n",
            sim.engine().wire_name(),
            last,
            trays,
            sim.profile().model,
        )
    };
    let _ = stream.write_all(reply.as_bytes());
    let _ = stream.shutdown(std::net::Shutdown::Both);
}
