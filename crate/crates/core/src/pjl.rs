//! Line-oriented `@PJL` control-channel format.
//!
//! The control channel carries one directive per LF-terminated line:
//!
//! ```text
//! @PJL SET <KEY>=<VALUE>      client -> printer, KEY in {USERNAME, USERID, HOSTID, JOBNAME}
//! @PJL MODEL=<model>          printer -> client
//! ```
//!
//! The parser is total: it accepts arbitrary bytes and simply ignores lines
//! it does not understand, because the interception side runs it over raw
//! captures that may contain anything. Values keep any `=` characters after
//! the first; the last occurrence of a key wins; a trailing CR is tolerated.

use serde::{Deserialize, Serialize};

pub const SET_PREFIX: &str = "@PJL SET ";
pub const MODEL_PREFIX: &str = "@PJL MODEL=";

/// Job metadata observed on (or destined for) the control channel. Fields
/// are `None` only when never observed; an observed empty value is
/// `Some("")`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct JobMetadata {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub username: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub userid: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hostid: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jobname: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub printer_model: Option<String>,
}

impl JobMetadata {
    pub fn is_empty(&self) -> bool {
        self.username.is_none()
            && self.userid.is_none()
            && self.hostid.is_none()
            && self.jobname.is_none()
            && self.printer_model.is_none()
    }

    /// Renders the client-side SET lines in fixed key order. The model field
    /// is printer-side and never emitted here.
    pub fn set_lines(&self) -> String {
        let mut out = String::new();
        for (key, value) in [
            ("USERNAME", &self.username),
            ("USERID", &self.userid),
            ("HOSTID", &self.hostid),
            ("JOBNAME", &self.jobname),
        ] {
            if let Some(v) = value {
                out.push_str(SET_PREFIX);
                out.push_str(key);
                out.push('=');
                out.push_str(v);
                out.push('\n');
            }
        }
        out
    }

    /// Overlays `later` on `self`: fields present in `later` win.
    pub fn merged_with(&self, later: &JobMetadata) -> JobMetadata {
        JobMetadata {
            username: later.username.clone().or_else(|| self.username.clone()),
            userid: later.userid.clone().or_else(|| self.userid.clone()),
            hostid: later.hostid.clone().or_else(|| self.hostid.clone()),
            jobname: later.jobname.clone().or_else(|| self.jobname.clone()),
            printer_model: later
                .printer_model
                .clone()
                .or_else(|| self.printer_model.clone()),
        }
    }
}

/// All `@PJL SET` pairs in a stream, in wire order, whatever the keys.
pub fn set_fields(payload: &[u8]) -> Vec<(String, String)> {
    let mut out = Vec::new();
    for raw_line in payload.split(|b| *b == b'\n') {
        let raw_line = raw_line.strip_suffix(b"\r").unwrap_or(raw_line);
        let line = String::from_utf8_lossy(raw_line);
        if let Some(rest) = line.strip_prefix(SET_PREFIX) {
            if let Some((key, value)) = rest.split_once('=') {
                out.push((key.to_string(), value.to_string()));
            }
        }
    }
    out
}

/// Extracts metadata from a raw byte stream. Never fails; unknown or
/// malformed lines are skipped. Non-UTF-8 values come back lossily decoded.
pub fn parse_metadata(payload: &[u8]) -> JobMetadata {
    let mut meta = JobMetadata::default();
    for raw_line in payload.split(|b| *b == b'\n') {
        let raw_line = match raw_line.strip_suffix(b"\r") {
            Some(stripped) => stripped,
            None => raw_line,
        };
        let line = String::from_utf8_lossy(raw_line);
        if let Some(rest) = line.strip_prefix(SET_PREFIX) {
            let Some((key, value)) = rest.split_once('=') else {
                continue;
            };
            let slot = match key {
                "USERNAME" => &mut meta.username,
                "USERID" => &mut meta.userid,
                "HOSTID" => &mut meta.hostid,
                "JOBNAME" => &mut meta.jobname,
                _ => continue,
            };
            *slot = Some(value.to_string());
        } else if let Some(model) = line.strip_prefix(MODEL_PREFIX) {
            meta.printer_model = Some(model.to_string());
        }
    }
    meta
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_the_four_keys_and_model() {
        let wire = b"@PJL SET USERNAME=alice\n\
                     @PJL SET USERID=u1001\n\
                     @PJL SET HOSTID=host-042\n\
                     @PJL SET JOBNAME=salaries.pdf\n\
                     @PJL MODEL=Lexmark MS620\n";
        let meta = parse_metadata(wire);
        assert_eq!(meta.username.as_deref(), Some("alice"));
        assert_eq!(meta.userid.as_deref(), Some("u1001"));
        assert_eq!(meta.hostid.as_deref(), Some("host-042"));
        assert_eq!(meta.jobname.as_deref(), Some("salaries.pdf"));
        assert_eq!(meta.printer_model.as_deref(), Some("Lexmark MS620"));
    }

    #[test]
    fn last_occurrence_wins() {
        let meta = parse_metadata(b"@PJL SET USERNAME=alice\n@PJL SET USERNAME=bob\n");
        assert_eq!(meta.username.as_deref(), Some("bob"));
    }

    #[test]
    fn value_keeps_equals_signs_and_unknown_keys_are_skipped() {
        let meta = parse_metadata(b"@PJL SET JOBNAME=q=1=2\n@PJL SET COLOR=ON\nnoise\n");
        assert_eq!(meta.jobname.as_deref(), Some("q=1=2"));
        assert!(meta.username.is_none());
    }

    #[test]
    fn crlf_and_empty_values_are_tolerated() {
        let meta = parse_metadata(b"@PJL SET USERNAME=carol\r\n@PJL SET JOBNAME=\r\n");
        assert_eq!(meta.username.as_deref(), Some("carol"));
        assert_eq!(meta.jobname.as_deref(), Some(""));
    }

    #[test]
    fn absent_fields_stay_none() {
        let meta = parse_metadata(b"plain document body\x0cmore\n");
        assert!(meta.is_empty());
    }

    #[test]
    fn merge_prefers_later_fields() {
        let a = JobMetadata {
            username: Some("alice".into()),
            jobname: Some("a.pdf".into()),
            ..JobMetadata::default()
        };
        let b = JobMetadata {
            jobname: Some("b.pdf".into()),
            printer_model: Some("M2727nf".into()),
            ..JobMetadata::default()
        };
        let m = a.merged_with(&b);
        assert_eq!(m.username.as_deref(), Some("alice"));
        assert_eq!(m.jobname.as_deref(), Some("b.pdf"));
        assert_eq!(m.printer_model.as_deref(), Some("M2727nf"));
    }

    fn clean_value() -> impl Strategy<Value = String> {
        // Values the wire format can carry losslessly: no LF, no lone CR at end.
        "[ -~]{0,40}".prop_filter("no trailing CR", |s| !s.ends_with('\r'))
    }

    proptest! {
        #[test]
        fn round_trips_through_set_lines(
            username in proptest::option::of(clean_value()),
            userid in proptest::option::of(clean_value()),
            hostid in proptest::option::of(clean_value()),
            jobname in proptest::option::of(clean_value()),
        ) {
            let meta = JobMetadata { username, userid, hostid, jobname, printer_model: None };
            let parsed = parse_metadata(meta.set_lines().as_bytes());
            prop_assert_eq!(parsed, meta);
        }

        #[test]
        fn parser_is_total(bytes in proptest::collection::vec(any::<u8>(), 0..2048)) {
            let _ = parse_metadata(&bytes);
        }
    }
}
