//! Desk-scale laboratory for the raw port-9100 printer attack family.
//!
//! The crate models both sides of the wire. [`emulator`] runs printers as
//! real TCP services with finite paper trays, a loop trap, and an optional
//! watchdog; [`client`] plays the attacker, flooding print jobs and pushing
//! job metadata over the control channel; [`intercept`] sits in the middle
//! and captures traffic byte for byte. [`exposure`] turns scan exports into
//! the country-level exposure report, and [`risk`] carries the qualitative
//! matrix the verdicts come from. [`scenario`] wires the pieces into three
//! end-to-end attack reproductions, entirely against loopback.
//!
//! Nothing in here talks to a printer you do not run yourself: every
//! outbound connection passes the [`guard`] interlock, which refuses
//! non-private targets unless explicitly acknowledged.

pub mod client;
pub mod emulator;
pub mod error;
pub mod exposure;
pub mod guard;
pub mod intercept;
pub mod pjl;
pub mod report;
pub mod risk;
pub mod scenario;

pub use error::{Error, Result};
