//! Printer emulation: a deterministic paper-path simulation plus the TCP
//! front end in [`server`].
//!
//! [`PrinterSim`] is the single source of truth for printer state. It is
//! pure: no I/O, no wall clock. Watchdog time advances only through
//! [`PrinterSim::tick_watchdog`], which keeps every timing test exact. The
//! TCP layer serializes all access through a mutex, so jobs hit the engine
//! one at a time in arrival order.
//!
//! Page accounting: an empty payload is zero pages; anything else counts one
//! page plus one per form-feed byte (0x0C). One sheet per page, drawn from
//! trays in declaration order. A payload containing the classic PostScript
//! denial-of-service signature `{} loop` never prints; it drops the engine
//! into `BUSY_LOOP` until a watchdog reboot or an operator reset.

pub mod server;

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use server::{JobRecord, Printer};

pub const DEFAULT_DATA_PORT: u16 = 9100;
pub const DEFAULT_CONTROL_PORT: u16 = 65002;

/// Byte that ends a page inside a job payload.
pub const FORM_FEED: u8 = 0x0c;

/// Substring that traps the engine in an endless rendering loop.
pub const LOOP_SIGNATURE: &[u8] = b"{} loop";

/// Static description of one emulated device.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrinterProfile {
    pub model: String,
    /// Tray capacities in sheets; also the initial fill.
    pub trays: Vec<u32>,
    /// Raw job port. `None` means the conventional 9100; 0 means ephemeral.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data_port: Option<u16>,
    /// Control channel port. `None` means 65002; 0 means ephemeral.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control_port: Option<u16>,
    /// Seconds of continuous busy-loop after which the firmware reboots
    /// itself. `None` disables the watchdog.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub watchdog_reboot_after_secs: Option<u64>,
}

impl PrinterProfile {
    pub fn new(model: impl Into<String>, trays: Vec<u32>) -> Self {
        PrinterProfile {
            model: model.into(),
            trays,
            data_port: None,
            control_port: None,
            watchdog_reboot_after_secs: None,
        }
    }

    /// Office laser with a single 150-sheet tray and no watchdog.
    pub fn ms620() -> Self {
        PrinterProfile::new("Lexmark MS620", vec![150])
    }

    /// Multifunction device whose firmware reboots after ten minutes stuck
    /// in a busy loop.
    pub fn m2727nf() -> Self {
        let mut p = PrinterProfile::new("HP LaserJet M2727nf", vec![250]);
        p.watchdog_reboot_after_secs = Some(600);
        p
    }

    /// Requests OS-assigned ports for both channels.
    pub fn with_ephemeral_ports(mut self) -> Self {
        self.data_port = Some(0);
        self.control_port = Some(0);
        self
    }

    pub fn effective_data_port(&self) -> u16 {
        self.data_port.unwrap_or(DEFAULT_DATA_PORT)
    }

    pub fn effective_control_port(&self) -> u16 {
        self.control_port.unwrap_or(DEFAULT_CONTROL_PORT)
    }

    pub fn watchdog_reboot_after(&self) -> Option<Duration> {
        self.watchdog_reboot_after_secs.map(Duration::from_secs)
    }

    pub fn validate(&self) -> Result<()> {
        if self.model.trim().is_empty() {
            return Err(Error::InvalidProfile("model must be non-empty".into()));
        }
        if self.trays.is_empty() {
            return Err(Error::InvalidProfile("at least one tray required".into()));
        }
        let data = self.effective_data_port();
        let control = self.effective_control_port();
        if data != 0 && data == control {
            return Err(Error::InvalidProfile(format!(
                "data and control ports collide on {data}"
            )));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let profile: PrinterProfile = serde_json::from_str(text)?;
        profile.validate()?;
        Ok(profile)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EngineState {
    Ready,
    Printing,
    BusyLoop,
    OutOfPaper,
}

impl EngineState {
    /// Name used on the control channel; matches the JSON form.
    pub fn wire_name(self) -> &'static str {
        match self {
            EngineState::Ready => "READY",
            EngineState::Printing => "PRINTING",
            EngineState::BusyLoop => "BUSY_LOOP",
            EngineState::OutOfPaper => "OUT_OF_PAPER",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrayState {
    pub capacity: u32,
    pub remaining: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum JobStatus {
    Completed,
    PartialOutOfPaper,
    RejectedBusy,
    LoopTriggered,
}

impl JobStatus {
    pub fn wire_name(self) -> &'static str {
        match self {
            JobStatus::Completed => "COMPLETED",
            JobStatus::PartialOutOfPaper => "PARTIAL_OUT_OF_PAPER",
            JobStatus::RejectedBusy => "REJECTED_BUSY",
            JobStatus::LoopTriggered => "LOOP_TRIGGERED",
        }
    }
}

/// What one submitted job did to the device.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct JobOutcome {
    pub pages_requested: u32,
    pub sheets_consumed: u32,
    pub status: JobStatus,
}

/// Pages a payload asks for: zero when empty, else one plus one per
/// form-feed byte.
pub fn page_count(payload: &[u8]) -> u32 {
    if payload.is_empty() {
        return 0;
    }
    let feeds = payload.iter().filter(|b| **b == FORM_FEED).count();
    u32::try_from(feeds).map_or(u32::MAX, |f| f.saturating_add(1))
}

fn contains_loop_signature(payload: &[u8]) -> bool {
    payload
        .windows(LOOP_SIGNATURE.len())
        .any(|w| w == LOOP_SIGNATURE)
}

/// Deterministic printer state machine.
#[derive(Debug, Clone)]
pub struct PrinterSim {
    profile: PrinterProfile,
    trays: Vec<TrayState>,
    engine: EngineState,
    jobs_completed: u64,
    sheets_printed: u64,
    /// Sheets ever made available: initial fill plus effective reloads.
    /// Invariant: sheets_loaded == total_remaining() + sheets_printed.
    sheets_loaded: u64,
    busy_for: Duration,
}

impl PrinterSim {
    pub fn new(profile: PrinterProfile) -> Result<Self> {
        profile.validate()?;
        let trays: Vec<TrayState> = profile
            .trays
            .iter()
            .map(|&capacity| TrayState {
                capacity,
                remaining: capacity,
            })
            .collect();
        let sheets_loaded = trays.iter().map(|t| u64::from(t.remaining)).sum();
        let mut sim = PrinterSim {
            profile,
            trays,
            engine: EngineState::Ready,
            jobs_completed: 0,
            sheets_printed: 0,
            sheets_loaded,
            busy_for: Duration::ZERO,
        };
        sim.settle_engine();
        Ok(sim)
    }

    pub fn profile(&self) -> &PrinterProfile {
        &self.profile
    }

    pub fn engine(&self) -> EngineState {
        self.engine
    }

    pub fn tray_status(&self) -> Vec<TrayState> {
        self.trays.clone()
    }

    pub fn total_remaining(&self) -> u64 {
        self.trays.iter().map(|t| u64::from(t.remaining)).sum()
    }

    pub fn jobs_completed(&self) -> u64 {
        self.jobs_completed
    }

    pub fn sheets_printed(&self) -> u64 {
        self.sheets_printed
    }

    pub fn sheets_loaded(&self) -> u64 {
        self.sheets_loaded
    }

    /// Time spent in the current busy loop so far.
    pub fn busy_for(&self) -> Duration {
        self.busy_for
    }

    /// Paper conservation: everything loaded is either still in a tray or
    /// has been printed.
    pub fn conservation_holds(&self) -> bool {
        self.sheets_loaded == self.total_remaining() + self.sheets_printed
    }

    /// Ready/OutOfPaper resolution for a non-busy engine.
    fn settle_engine(&mut self) {
        self.engine = if self.total_remaining() == 0 {
            EngineState::OutOfPaper
        } else {
            EngineState::Ready
        };
    }

    /// Feeds one job through the engine. A busy engine rejects without
    /// consuming paper; the loop signature wedges the engine; otherwise
    /// pages print until the job finishes or the last tray empties.
    pub fn submit(&mut self, payload: &[u8]) -> JobOutcome {
        let pages_requested = page_count(payload);
        if self.engine == EngineState::BusyLoop {
            return JobOutcome {
                pages_requested,
                sheets_consumed: 0,
                status: JobStatus::RejectedBusy,
            };
        }
        if contains_loop_signature(payload) {
            self.engine = EngineState::BusyLoop;
            self.busy_for = Duration::ZERO;
            return JobOutcome {
                pages_requested,
                sheets_consumed: 0,
                status: JobStatus::LoopTriggered,
            };
        }
        self.engine = EngineState::Printing;
        let mut consumed = 0u32;
        for tray in &mut self.trays {
            let take = tray.remaining.min(pages_requested - consumed);
            tray.remaining -= take;
            consumed += take;
            if consumed == pages_requested {
                break;
            }
        }
        self.sheets_printed += u64::from(consumed);
        let status = if consumed == pages_requested {
            self.jobs_completed += 1;
            JobStatus::Completed
        } else {
            JobStatus::PartialOutOfPaper
        };
        self.settle_engine();
        JobOutcome {
            pages_requested,
            sheets_consumed: consumed,
            status,
        }
    }

    /// Adds sheets to one tray, clamped at capacity. Returns the tray's new
    /// fill. Clears OUT_OF_PAPER but never interrupts a busy loop.
    pub fn reload_tray(&mut self, index: usize, sheets: u32) -> Result<u32> {
        let tray = self.trays.get_mut(index).ok_or(Error::TrayIndex(index))?;
        let before = tray.remaining;
        tray.remaining = tray.capacity.min(before.saturating_add(sheets));
        self.sheets_loaded += u64::from(tray.remaining - before);
        if self.engine == EngineState::OutOfPaper && self.total_remaining() > 0 {
            self.engine = EngineState::Ready;
        }
        Ok(self.trays[index].remaining)
    }

    /// Operator reset: clears a busy loop and zeroes the job counters. Paper
    /// stays where it is, so the load ledger rebases to what is in the trays.
    pub fn reset(&mut self) {
        self.jobs_completed = 0;
        self.sheets_printed = 0;
        self.busy_for = Duration::ZERO;
        self.sheets_loaded = self.total_remaining();
        self.settle_engine();
    }

    /// Advances the simulated watchdog clock. Only a busy-looping engine
    /// accumulates time; once the profile's limit is reached the firmware
    /// reboots, dropping the looping job and returning to service.
    pub fn tick_watchdog(&mut self, elapsed: Duration) -> EngineState {
        if self.engine == EngineState::BusyLoop {
            self.busy_for = self.busy_for.saturating_add(elapsed);
            if let Some(limit) = self.profile.watchdog_reboot_after() {
                if self.busy_for >= limit {
                    self.busy_for = Duration::ZERO;
                    self.settle_engine();
                }
            }
        }
        self.engine
    }
}
