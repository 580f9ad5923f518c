//! Passive interception: a TCP tap that relays printer traffic while
//! keeping a byte-exact copy, plus analysis of what the copies reveal.
//!
//! The threat model is an on-path host, not a broken cable: the tap always
//! forwards faithfully and never alters bytes in either direction. Captures
//! are kept per connection, payload (client to printer) separate from
//! response (printer to client), so concurrent jobs can never interleave.

pub mod capture;
pub mod tap;

use std::net::SocketAddr;

use serde::{Deserialize, Serialize};

use crate::pjl::{self, JobMetadata};

pub use capture::CaptureStore;
pub use tap::{Tap, TapOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Channel {
    Data,
    Control,
}

impl Channel {
    pub fn slug(self) -> &'static str {
        match self {
            Channel::Data => "data",
            Channel::Control => "control",
        }
    }
}

/// One relayed connection, both directions, byte for byte.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InterceptedJob {
    pub seq: u64,
    pub source: SocketAddr,
    pub destination: SocketAddr,
    pub channel: Channel,
    /// Client-to-printer bytes.
    pub payload: Vec<u8>,
    /// Printer-to-client bytes; empty on the silent data channel.
    pub response: Vec<u8>,
    pub started_at_ms: u64,
    pub ended_at_ms: u64,
}

impl InterceptedJob {
    /// Metadata recovered from the whole exchange. The payload is parsed
    /// first, then the response on top: the printer's reply is later on the
    /// wire, and it is where the model name comes from.
    pub fn metadata(&self) -> JobMetadata {
        pjl::parse_metadata(&self.payload).merged_with(&pjl::parse_metadata(&self.response))
    }
}

/// Alias for the total metadata parser, under the name the analysis side
/// uses: captures go in, whatever was observable comes out.
pub fn extract_metadata(payload: &[u8]) -> JobMetadata {
    pjl::parse_metadata(payload)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DocumentFormat {
    Pdf,
    Plaintext,
    Binary,
}

impl DocumentFormat {
    pub fn label(self) -> &'static str {
        match self {
            DocumentFormat::Pdf => "PDF",
            DocumentFormat::Plaintext => "plaintext",
            DocumentFormat::Binary => "binary",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DocumentSummary {
    pub byte_count: u64,
    /// Share of bytes in 0x20..=0x7E plus LF, CR, and TAB. Zero for an
    /// empty document.
    pub printable_ratio: f64,
    pub format: DocumentFormat,
}

const PDF_MAGIC: &[u8] = b"%PDF-";

/// Classifies captured document bytes: PDF by magic, plaintext when at
/// least 90% printable, binary otherwise.
pub fn summarize_document(payload: &[u8]) -> DocumentSummary {
    let printable = payload
        .iter()
        .filter(|b| matches!(**b, 0x20..=0x7e | b'\n' | b'\r' | b'\t'))
        .count();
    let printable_ratio = if payload.is_empty() {
        0.0
    } else {
        printable as f64 / payload.len() as f64
    };
    let format = if payload.starts_with(PDF_MAGIC) {
        DocumentFormat::Pdf
    } else if printable_ratio >= 0.9 {
        DocumentFormat::Plaintext
    } else {
        DocumentFormat::Binary
    };
    DocumentSummary {
        byte_count: payload.len() as u64,
        printable_ratio,
        format,
    }
}

/// Hands back the document a data-channel capture carries, with its
/// classification. The payload already is the document: one connection is
/// one job and the tap never reorders bytes.
pub fn reassemble_document(job: &InterceptedJob) -> (Vec<u8>, DocumentSummary) {
    debug_assert_eq!(job.channel, Channel::Data);
    (job.payload.clone(), summarize_document(&job.payload))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FindingKind {
    MetadataAssociation,
    ContentBreach,
}

/// Severity text attached to every finding. Quotes the regulation, nothing
/// else.
pub const GDPR_BASIS: &str = "GDPR Art. 5(1)(f) ('integrity and confidentiality'): personal data \
     must be processed in a manner that ensures appropriate security, including protection \
     against unauthorised or unlawful processing. Failures are sanctionable under Art. 83 with \
     administrative fines up to EUR 20 million or 4% of total worldwide annual turnover, \
     whichever is higher.";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub kind: FindingKind,
    pub job_seq: u64,
    pub channel: Channel,
    pub detail: String,
    pub gdpr_basis: String,
}

/// Privacy analysis over a set of captures.
///
/// A metadata-association finding is raised when one capture links a user
/// to a named job (both USERNAME and JOBNAME observed). A content-breach
/// finding is raised for every data-channel capture whose document came
/// back intelligible (non-empty, classified PDF or plaintext); opaque
/// driver blobs are captured but not counted as recovered content.
pub fn privacy_findings(jobs: &[InterceptedJob]) -> Vec<Finding> {
    let mut findings = Vec::new();
    for job in jobs {
        let meta = job.metadata();
        if let (Some(user), Some(jobname)) = (&meta.username, &meta.jobname) {
            findings.push(Finding {
                kind: FindingKind::MetadataAssociation,
                job_seq: job.seq,
                channel: job.channel,
                detail: format!("user {user:?} is linked to print job {jobname:?} in cleartext"),
                gdpr_basis: GDPR_BASIS.to_string(),
            });
        }
        if job.channel == Channel::Data {
            let summary = summarize_document(&job.payload);
            if summary.byte_count > 0 && summary.format != DocumentFormat::Binary {
                findings.push(Finding {
                    kind: FindingKind::ContentBreach,
                    job_seq: job.seq,
                    channel: job.channel,
                    detail: format!(
                        "full document recovered from the wire: {} bytes, format {}",
                        summary.byte_count,
                        summary.format.label()
                    ),
                    gdpr_basis: GDPR_BASIS.to_string(),
                });
            }
        }
    }
    findings
}
