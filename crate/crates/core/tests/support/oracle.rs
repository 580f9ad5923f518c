//! Randomized equivalence between `PrinterSim` and an independently
//! written reference model.
//!
//! The reference deliberately uses a different shape: single-step paper
//! draws, flag-based engine resolution, string scanning instead of byte
//! windows. Divergence on any of 1000 seeded operation sequences fails
//! with the offending seed and step in the message.

use std::time::Duration;

use printjack::emulator::{PrinterProfile, PrinterSim};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct RefSim {
    caps: Vec<u64>,
    rem: Vec<u64>,
    busy: bool,
    busy_secs: u64,
    watchdog_secs: Option<u64>,
    completed: u64,
    printed: u64,
    loaded: u64,
}

impl RefSim {
    fn new(caps: &[u32], watchdog_secs: Option<u64>) -> RefSim {
        let caps: Vec<u64> = caps.iter().map(|c| u64::from(*c)).collect();
        let rem = caps.clone();
        let loaded = rem.iter().sum();
        RefSim {
            caps,
            rem,
            busy: false,
            busy_secs: 0,
            watchdog_secs,
            completed: 0,
            printed: 0,
            loaded,
        }
    }

    fn pages(payload: &[u8]) -> u64 {
        if payload.is_empty() {
            0
        } else {
            payload
                .iter()
                .fold(1u64, |acc, b| acc + u64::from(*b == 0x0c))
        }
    }

    fn has_loop(payload: &[u8]) -> bool {
        let sig = b"{} loop";
        if payload.len() < sig.len() {
            return false;
        }
        (0..=payload.len() - sig.len()).any(|i| &payload[i..i + sig.len()] == sig)
    }

    fn total(&self) -> u64 {
        self.rem.iter().sum()
    }

    fn engine(&self) -> &'static str {
        if self.busy {
            "BUSY_LOOP"
        } else if self.total() == 0 {
            "OUT_OF_PAPER"
        } else {
            "READY"
        }
    }

    fn submit(&mut self, payload: &[u8]) -> (u64, u64, &'static str) {
        let pages = Self::pages(payload);
        if self.busy {
            return (pages, 0, "REJECTED_BUSY");
        }
        if Self::has_loop(payload) {
            self.busy = true;
            self.busy_secs = 0;
            return (pages, 0, "LOOP_TRIGGERED");
        }
        let mut sheets = 0u64;
        'pages: for _ in 0..pages {
            for tray in self.rem.iter_mut() {
                if *tray > 0 {
                    *tray -= 1;
                    sheets += 1;
                    continue 'pages;
                }
            }
            break;
        }
        self.printed += sheets;
        if sheets == pages {
            self.completed += 1;
            (pages, sheets, "COMPLETED")
        } else {
            (pages, sheets, "PARTIAL_OUT_OF_PAPER")
        }
    }

    fn reload(&mut self, idx: usize, sheets: u32) -> Option<u64> {
        if idx >= self.rem.len() {
            return None;
        }
        let room = self.caps[idx] - self.rem[idx];
        let added = room.min(u64::from(sheets));
        self.rem[idx] += added;
        self.loaded += added;
        Some(self.rem[idx])
    }

    fn reset(&mut self) {
        self.busy = false;
        self.busy_secs = 0;
        self.completed = 0;
        self.printed = 0;
        self.loaded = self.total();
    }

    fn tick(&mut self, secs: u64) {
        if self.busy {
            self.busy_secs = self.busy_secs.saturating_add(secs);
            if let Some(limit) = self.watchdog_secs {
                if self.busy_secs >= limit {
                    self.busy = false;
                    self.busy_secs = 0;
                }
            }
        }
    }

    fn conservation(&self) -> bool {
        self.loaded == self.total() + self.printed
    }
}

fn random_payload(rng: &mut ChaCha8Rng) -> Vec<u8> {
    match rng.gen_range(0..5) {
        0 => Vec::new(),
        1 => {
            let n = rng.gen_range(1..40);
            (0..n).map(|_| rng.gen_range(b'a'..=b'z')).collect()
        }
        2 => {
            let feeds = rng.gen_range(0..30);
            let mut p = b"page".to_vec();
            for _ in 0..feeds {
                p.push(0x0c);
                p.extend_from_slice(b"next");
            }
            p
        }
        3 => {
            let mut p = Vec::new();
            for _ in 0..rng.gen_range(0..10) {
                p.push(rng.gen());
            }
            p.extend_from_slice(b"{} loop");
            for _ in 0..rng.gen_range(0..10) {
                p.push(rng.gen());
            }
            p
        }
        _ => {
            let n = rng.gen_range(0..200);
            (0..n).map(|_| rng.gen()).collect()
        }
    }
}

fn compare(seed: u64, step: usize, sim: &PrinterSim, reference: &RefSim) {
    let ctx = format!("seed {seed}, step {step}");
    assert_eq!(
        sim.engine().wire_name(),
        reference.engine(),
        "engine diverged at {ctx}"
    );
    let sim_trays: Vec<(u64, u64)> = sim
        .tray_status()
        .iter()
        .map(|t| (u64::from(t.capacity), u64::from(t.remaining)))
        .collect();
    let ref_trays: Vec<(u64, u64)> = reference
        .caps
        .iter()
        .zip(&reference.rem)
        .map(|(c, r)| (*c, *r))
        .collect();
    assert_eq!(sim_trays, ref_trays, "trays diverged at {ctx}");
    assert_eq!(
        sim.jobs_completed(),
        reference.completed,
        "completed diverged at {ctx}"
    );
    assert_eq!(
        sim.sheets_printed(),
        reference.printed,
        "printed diverged at {ctx}"
    );
    assert_eq!(
        sim.busy_for().as_secs(),
        reference.busy_secs,
        "busy clock diverged at {ctx}"
    );
    assert!(sim.conservation_holds(), "conservation violated at {ctx}");
    assert!(
        reference.conservation(),
        "reference conservation violated at {ctx}"
    );
}

/// Drives `PrinterSim` and the reference model through `seeds` seeded
/// operation sequences, panicking on the first divergence.
pub fn run_equivalence(seeds: u64) {
    for seed in 0..seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);

        let tray_count = rng.gen_range(1..=3);
        let caps: Vec<u32> = (0..tray_count).map(|_| rng.gen_range(0..=40)).collect();
        let watchdog = if rng.gen_bool(0.5) {
            Some(rng.gen_range(0..=120))
        } else {
            None
        };

        let mut profile = PrinterProfile::new("OracleJet", caps.clone());
        profile.watchdog_reboot_after_secs = watchdog;
        let mut sim = PrinterSim::new(profile).unwrap();
        let mut reference = RefSim::new(&caps, watchdog);

        let ops = rng.gen_range(1..=100);
        for step in 0..ops {
            match rng.gen_range(0..100) {
                0..=54 => {
                    let payload = random_payload(&mut rng);
                    let out = sim.submit(&payload);
                    let (pages, sheets, status) = reference.submit(&payload);
                    assert_eq!(
                        (
                            u64::from(out.pages_requested),
                            u64::from(out.sheets_consumed),
                            out.status.wire_name()
                        ),
                        (pages, sheets, status),
                        "outcome diverged at seed {seed}, step {step}"
                    );
                }
                55..=74 => {
                    let idx = rng.gen_range(0..4);
                    let sheets = rng.gen_range(0..=60);
                    let mine = sim.reload_tray(idx, sheets).ok().map(u64::from);
                    let theirs = reference.reload(idx, sheets);
                    assert_eq!(mine, theirs, "reload diverged at seed {seed}, step {step}");
                }
                75..=82 => {
                    sim.reset();
                    reference.reset();
                }
                _ => {
                    let secs = rng.gen_range(0..=150);
                    sim.tick_watchdog(Duration::from_secs(secs));
                    reference.tick(secs);
                }
            }
            compare(seed, step, &sim, &reference);
        }
    }
}
