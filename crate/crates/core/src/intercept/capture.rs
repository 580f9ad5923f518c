//! Disk persistence for captures.
//!
//! Each capture becomes `job-<channel>-<seq>.bin` (payload, byte-exact),
//! an optional `.reply` (response, only when non-empty), and a `.json`
//! sidecar with addresses, timing, the extracted metadata, and the document
//! classification. Loading reconstructs captures from the raw files alone;
//! the derived fields in the sidecar exist for human inspection.

use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pjl::JobMetadata;

use super::{summarize_document, Channel, DocumentSummary, InterceptedJob};

#[derive(Debug, Serialize, Deserialize)]
struct Sidecar {
    seq: u64,
    source: SocketAddr,
    destination: SocketAddr,
    channel: Channel,
    started_at_ms: u64,
    ended_at_ms: u64,
    byte_count: u64,
    payload_file: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    response_file: Option<String>,
    metadata: JobMetadata,
    summary: DocumentSummary,
}

/// A directory of capture files.
pub struct CaptureStore {
    dir: PathBuf,
}

impl CaptureStore {
    /// Opens (creating if needed) a capture directory.
    pub fn create(dir: impl Into<PathBuf>) -> Result<CaptureStore> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| Error::file(&dir, e))?;
        Ok(CaptureStore { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Persists one capture. Returns the sidecar path.
    pub fn save(&self, job: &InterceptedJob) -> Result<PathBuf> {
        let base = format!("job-{}-{:05}", job.channel.slug(), job.seq);
        let payload_file = format!("{base}.bin");
        fs::write(self.dir.join(&payload_file), &job.payload)
            .map_err(|e| Error::file(self.dir.join(&payload_file), e))?;
        let response_file = if job.response.is_empty() {
            None
        } else {
            let name = format!("{base}.reply");
            fs::write(self.dir.join(&name), &job.response)
                .map_err(|e| Error::file(self.dir.join(&name), e))?;
            Some(name)
        };
        let sidecar = Sidecar {
            seq: job.seq,
            source: job.source,
            destination: job.destination,
            channel: job.channel,
            started_at_ms: job.started_at_ms,
            ended_at_ms: job.ended_at_ms,
            byte_count: job.payload.len() as u64,
            payload_file,
            response_file,
            metadata: job.metadata(),
            summary: summarize_document(&job.payload),
        };
        let sidecar_path = self.dir.join(format!("{base}.json"));
        fs::write(&sidecar_path, serde_json::to_string_pretty(&sidecar)?)
            .map_err(|e| Error::file(&sidecar_path, e))?;
        Ok(sidecar_path)
    }

    /// Loads every capture in a directory, ordered by file name.
    pub fn load_all(dir: impl AsRef<Path>) -> Result<Vec<InterceptedJob>> {
        let dir = dir.as_ref();
        let mut sidecars: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(|e| Error::file(dir, e))?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| {
                p.extension().is_some_and(|e| e == "json")
                    && p.file_name()
                        .and_then(|n| n.to_str())
                        .is_some_and(|n| n.starts_with("job-"))
            })
            .collect();
        sidecars.sort();

        let mut jobs = Vec::with_capacity(sidecars.len());
        for path in sidecars {
            let text = fs::read_to_string(&path).map_err(|e| Error::file(&path, e))?;
            let sidecar: Sidecar = serde_json::from_str(&text)
                .map_err(|e| Error::Capture(format!("{}: {e}", path.display())))?;
            let payload_path = dir.join(&sidecar.payload_file);
            let payload = fs::read(&payload_path).map_err(|e| Error::file(&payload_path, e))?;
            let response = match &sidecar.response_file {
                Some(name) => {
                    let p = dir.join(name);
                    fs::read(&p).map_err(|e| Error::file(&p, e))?
                }
                None => Vec::new(),
            };
            jobs.push(InterceptedJob {
                seq: sidecar.seq,
                source: sidecar.source,
                destination: sidecar.destination,
                channel: sidecar.channel,
                payload,
                response,
                started_at_ms: sidecar.started_at_ms,
                ended_at_ms: sidecar.ended_at_ms,
            });
        }
        Ok(jobs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(seq: u64, channel: Channel, payload: &[u8], response: &[u8]) -> InterceptedJob {
        InterceptedJob {
            seq,
            source: "127.0.0.1:40001".parse().unwrap(),
            destination: "127.0.0.1:9100".parse().unwrap(),
            channel,
            payload: payload.to_vec(),
            response: response.to_vec(),
            started_at_ms: 1000,
            ended_at_ms: 1004,
        }
    }

    #[test]
    fn round_trips_byte_exact() {
        let dir = tempfile::tempdir().unwrap();
        let store = CaptureStore::create(dir.path()).unwrap();
        let mut payload = b"%PDF-1.4\n".to_vec();
        payload.extend((0u16..=255).map(|b| b as u8));
        let data = sample(0, Channel::Data, &payload, b"");
        let control = sample(
            0,
            Channel::Control,
            b"@PJL SET USERNAME=alice\n",
            b"@PJL MODEL=Lexmark MS620\n",
        );
        store.save(&data).unwrap();
        store.save(&control).unwrap();

        let loaded = CaptureStore::load_all(dir.path()).unwrap();
        assert_eq!(loaded.len(), 2);
        // Lexical file order: control before data.
        assert_eq!(loaded[0], control);
        assert_eq!(loaded[1], data);
    }

    #[test]
    fn response_file_only_when_nonempty() {
        let dir = tempfile::tempdir().unwrap();
        let store = CaptureStore::create(dir.path()).unwrap();
        store.save(&sample(3, Channel::Data, b"doc", b"")).unwrap();
        assert!(dir.path().join("job-data-00003.bin").exists());
        assert!(!dir.path().join("job-data-00003.reply").exists());
    }

    #[test]
    fn load_fails_cleanly_on_missing_dir() {
        assert!(CaptureStore::load_all("/nonexistent/captures-xyz").is_err());
    }
}
