//! The tap itself: a loopback TCP relay standing in for an on-path host.
//!
//! Every accepted connection gets a fresh upstream connection and two pump
//! directions. Capture comes first: bytes are recorded before forwarding,
//! and a dead peer on one side never stops the drain of the other, so a
//! job is captured in full even when the upstream resets mid-stream.

use std::io::{self, Read, Write};
use std::net::{Ipv4Addr, Shutdown, SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::guard;
use crate::report::unix_millis;

use super::{Channel, InterceptedJob};

#[derive(Debug, Clone)]
pub struct TapOptions {
    pub connect_timeout: Duration,
    /// Inactivity cutoff for either side of a relayed connection.
    pub idle_timeout: Duration,
    pub allow_external: bool,
}

impl Default for TapOptions {
    fn default() -> Self {
        TapOptions {
            connect_timeout: Duration::from_secs(5),
            idle_timeout: Duration::from_secs(10),
            allow_external: false,
        }
    }
}

struct TapShared {
    upstream: SocketAddr,
    channel: Channel,
    opts: TapOptions,
    seq: AtomicU64,
    completed: Mutex<Vec<InterceptedJob>>,
    events: Mutex<Vec<String>>,
    shutdown: AtomicBool,
}

/// A running relay. Dropping it stops the listener.
pub struct Tap {
    shared: Arc<TapShared>,
    local_addr: SocketAddr,
    accept_thread: Mutex<Option<JoinHandle<()>>>,
}

impl Tap {
    /// Binds `listen_port` on loopback (0 for ephemeral) and relays every
    /// connection to `upstream`. The upstream address passes the interlock
    /// here, before anything is accepted.
    pub fn start(
        listen_port: u16,
        upstream: SocketAddr,
        channel: Channel,
        opts: TapOptions,
    ) -> Result<Tap> {
        guard::ensure_allowed(upstream.ip(), opts.allow_external)?;
        let listener = TcpListener::bind((Ipv4Addr::LOCALHOST, listen_port)).map_err(|source| {
            Error::PortBind {
                role: "tap",
                port: listen_port,
                source,
            }
        })?;
        let local_addr = listener.local_addr()?;
        let shared = Arc::new(TapShared {
            upstream,
            channel,
            opts,
            seq: AtomicU64::new(0),
            completed: Mutex::new(Vec::new()),
            events: Mutex::new(Vec::new()),
            shutdown: AtomicBool::new(false),
        });
        let accept_thread = {
            let shared = Arc::clone(&shared);
            thread::spawn(move || accept_loop(listener, shared))
        };
        Ok(Tap {
            shared,
            local_addr,
            accept_thread: Mutex::new(Some(accept_thread)),
        })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.local_addr
    }

    pub fn upstream(&self) -> SocketAddr {
        self.shared.upstream
    }

    pub fn channel(&self) -> Channel {
        self.shared.channel
    }

    /// Finished captures, ordered by accept sequence.
    pub fn jobs(&self) -> Vec<InterceptedJob> {
        let mut jobs = self.shared.completed.lock().unwrap().clone();
        jobs.sort_by_key(|j| j.seq);
        jobs
    }

    pub fn job_count(&self) -> usize {
        self.shared.completed.lock().unwrap().len()
    }

    /// Operational events, e.g. unreachable upstream.
    pub fn events(&self) -> Vec<String> {
        self.shared.events.lock().unwrap().clone()
    }

    /// Polls until at least `count` captures finished or `timeout` elapses.
    pub fn wait_for_jobs(&self, count: usize, timeout: Duration) -> bool {
        let deadline = Instant::now() + timeout;
        while self.job_count() < count {
            if Instant::now() >= deadline {
                return false;
            }
            thread::sleep(Duration::from_millis(5));
        }
        true
    }

    /// Stops accepting. In-flight relays run to completion. Idempotent.
    pub fn shutdown(&self) {
        if self.shared.shutdown.swap(true, Ordering::SeqCst) {
            return;
        }
        let _ = TcpStream::connect_timeout(&self.local_addr, Duration::from_millis(200));
        if let Some(t) = self.accept_thread.lock().unwrap().take() {
            let _ = t.join();
        }
    }
}

impl Drop for Tap {
    fn drop(&mut self) {
        self.shutdown();
    }
}

fn accept_loop(listener: TcpListener, shared: Arc<TapShared>) {
    loop {
        let (client, peer) = match listener.accept() {
            Ok(pair) => pair,
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
        let seq = shared.seq.fetch_add(1, Ordering::SeqCst);
        let shared = Arc::clone(&shared);
        thread::spawn(move || relay(client, peer, seq, &shared));
    }
}

fn relay(client: TcpStream, peer: SocketAddr, seq: u64, shared: &TapShared) {
    let started_at_ms = unix_millis();
    let upstream = match TcpStream::connect_timeout(&shared.upstream, shared.opts.connect_timeout) {
        Ok(s) => s,
        Err(e) => {
            shared.events.lock().unwrap().push(format!(
                "connection {seq} from {peer}: upstream {} unreachable: {e}",
                shared.upstream
            ));
            let _ = client.shutdown(Shutdown::Both);
            return;
        }
    };
    let _ = client.set_read_timeout(Some(shared.opts.idle_timeout));
    let _ = upstream.set_read_timeout(Some(shared.opts.idle_timeout));

    let client_for_response = client.try_clone();
    let upstream_for_response = upstream.try_clone();
    let response_pump = match (client_for_response, upstream_for_response) {
        (Ok(c), Ok(u)) => Some(thread::spawn(move || pump(u, c))),
        _ => None,
    };

    let payload = pump(client, upstream);
    let response = response_pump
        .and_then(|t| t.join().ok())
        .unwrap_or_default();

    let job = InterceptedJob {
        seq,
        source: peer,
        destination: shared.upstream,
        channel: shared.channel,
        payload,
        response,
        started_at_ms,
        ended_at_ms: unix_millis(),
    };
    shared.completed.lock().unwrap().push(job);
}

/// Copies `from` into `to` until EOF or a stall, recording every byte
/// before it is forwarded. A write failure stops forwarding but not the
/// capture. On EOF the destination's write side is half-closed so framing
/// survives the relay.
fn pump(mut from: TcpStream, mut to: TcpStream) -> Vec<u8> {
    let mut captured = Vec::new();
    let mut chunk = [0u8; 8192];
    let mut forwarding = true;
    loop {
        match from.read(&mut chunk) {
            Ok(0) => break,
            Ok(n) => {
                captured.extend_from_slice(&chunk[..n]);
                if forwarding && to.write_all(&chunk[..n]).is_err() {
                    forwarding = false;
                }
            }
            Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
            Err(_) => break,
        }
    }
    if forwarding {
        let _ = to.shutdown(Shutdown::Write);
    }
    captured
}
