//! Snapshots (`.s3t.json`) and append-only deletion logs (`.s3t.jsonl`).

use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use s3t_core::engine::{DeletionEvent, SystemState};

use crate::canonical::to_canonical_bytes;

pub const FORMAT_VERSION: u64 = 1;
pub const SNAPSHOT_EXTENSION: &str = "s3t.json";
pub const LOG_EXTENSION: &str = "s3t.jsonl";

#[derive(Debug, thiserror::Error)]
pub enum RegistryError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed JSON in {path}: {message}")]
    Malformed { path: PathBuf, message: String },
    #[error("unknown format version {0}")]
    UnknownVersion(u64),
    #[error("checksum mismatch: recorded {recorded}, computed {computed}")]
    ChecksumMismatch { recorded: String, computed: String },
    #[error("log discontinuity: expected request_id {expected}, found {found}")]
    Discontinuity { expected: u64, found: u64 },
    #[error("event {request_id} does not match replay: {detail}")]
    EventMismatch { request_id: u64, detail: String },
    #[error("engine: {0}")]
    Engine(#[from] s3t_core::Error),
    #[error("serialization: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = RegistryError> = std::result::Result<T, E>;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RegistryError + '_ {
    move |source| RegistryError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// On-disk snapshot envelope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub version: u64,
    pub created_at: String,
    /// SHA-256 hex of the canonical bytes of `state`.
    pub checksum: String,
    pub state: SystemState,
}

pub fn state_checksum(state: &SystemState) -> Result<String> {
    let bytes = to_canonical_bytes(state)?;
    Ok(hex(&Sha256::digest(&bytes)))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

impl Snapshot {
    pub fn new(state: SystemState) -> Result<Self> {
        Ok(Self {
            version: FORMAT_VERSION,
            created_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            checksum: state_checksum(&state)?,
            state,
        })
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut bytes = to_canonical_bytes(self)?;
        bytes.push(b'\n');
        Ok(bytes)
    }

    pub fn from_slice(bytes: &[u8], path: &Path) -> Result<Self> {
        let value: Value = serde_json::from_slice(bytes).map_err(|e| RegistryError::Malformed {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let version = value.get("version").and_then(Value::as_u64).unwrap_or(0);
        if version != FORMAT_VERSION {
            return Err(RegistryError::UnknownVersion(version));
        }
        let snap: Snapshot = serde_json::from_value(value).map_err(|e| RegistryError::Malformed {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let computed = state_checksum(&snap.state)?;
        if computed != snap.checksum {
            return Err(RegistryError::ChecksumMismatch {
                recorded: snap.checksum,
                computed,
            });
        }
        Ok(snap)
    }
}

/// Writes `state` atomically (temp file, fsync, rename) and returns its checksum.
pub fn save_snapshot(state: &SystemState, path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    let snap = Snapshot::new(state.clone())?;
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(dir))?;
    tmp.write_all(&snap.to_bytes()?).map_err(io_err(path))?;
    tmp.as_file().sync_all().map_err(io_err(path))?;
    tmp.persist(path).map_err(|e| RegistryError::Io {
        path: path.to_path_buf(),
        source: e.error,
    })?;
    Ok(snap.checksum)
}

pub fn load_snapshot_file(path: impl AsRef<Path>) -> Result<Snapshot> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(io_err(path))?;
    Snapshot::from_slice(&bytes, path)
}

pub fn load_snapshot(path: impl AsRef<Path>) -> Result<SystemState> {
    load_snapshot_file(path).map(|s| s.state)
}

#[derive(Serialize, Deserialize)]
struct LogLine {
    version: u64,
    #[serde(flatten)]
    event: DeletionEvent,
}

pub fn event_line(event: &DeletionEvent) -> Result<String> {
    let mut line = crate::canonical::to_canonical_string(&LogLine {
        version: FORMAT_VERSION,
        event: event.clone(),
    })?;
    line.push('\n');
    Ok(line)
}

/// Appends one complete line and fsyncs before returning.
pub fn append_event(path: impl AsRef<Path>, event: &DeletionEvent) -> Result<()> {
    let path = path.as_ref();
    let line = event_line(event)?;
    let mut f = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(io_err(path))?;
    f.write_all(line.as_bytes()).map_err(io_err(path))?;
    f.sync_all().map_err(io_err(path))
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EventLog {
    pub events: Vec<DeletionEvent>,
    /// Trailing bytes after the last newline, left by an interrupted append.
    pub torn_tail: Option<String>,
}

/// Reads a log. A missing file is an empty log; a torn final line is
/// reported, not fatal. Any malformed complete line is an error.
pub fn read_log(path: impl AsRef<Path>) -> Result<EventLog> {
    let path = path.as_ref();
    let text = match fs::read(path) {
        Ok(b) => String::from_utf8_lossy(&b).into_owned(),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(EventLog::default()),
        Err(e) => return Err(io_err(path)(e)),
    };
    let (complete, tail) = match text.rfind('\n') {
        Some(i) => (&text[..i], &text[i + 1..]),
        None => ("", text.as_str()),
    };
    let mut events = Vec::new();
    for (n, line) in complete.split('\n').enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parsed: LogLine = serde_json::from_str(line).map_err(|e| RegistryError::Malformed {
            path: path.to_path_buf(),
            message: format!("line {}: {e}", n + 1),
        })?;
        if parsed.version != FORMAT_VERSION {
            return Err(RegistryError::UnknownVersion(parsed.version));
        }
        events.push(parsed.event);
    }
    Ok(EventLog {
        events,
        torn_tail: (!tail.trim().is_empty()).then(|| tail.to_string()),
    })
}

/// Drops a torn final line so appends can resume. Returns whether anything
/// was removed.
pub fn truncate_torn_tail(path: impl AsRef<Path>) -> Result<bool> {
    let path = path.as_ref();
    let bytes = match fs::read(path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(false),
        Err(e) => return Err(io_err(path)(e)),
    };
    let keep = bytes.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
    if keep == bytes.len() {
        return Ok(false);
    }
    let f = OpenOptions::new().write(true).open(path).map_err(io_err(path))?;
    f.set_len(keep as u64).map_err(io_err(path))?;
    f.sync_all().map_err(io_err(path))?;
    Ok(true)
}

/// Applies `events` to `state` in order. Ids must continue the state's
/// request count without gaps, and recomputed events must match the log.
pub fn replay_events(state: &mut SystemState, events: &[DeletionEvent]) -> Result<()> {
    for logged in events {
        let expected = state.request_count() + 1;
        if logged.request_id != expected {
            return Err(RegistryError::Discontinuity {
                expected,
                found: logged.request_id,
            });
        }
        let applied = state.apply_deletion(logged.target.clone())?;
        if &applied != logged {
            return Err(RegistryError::EventMismatch {
                request_id: logged.request_id,
                detail: format!("logged {logged:?}, replayed {applied:?}"),
            });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayOutcome {
    pub state: SystemState,
    pub applied: usize,
    pub torn_tail: bool,
}

/// Snapshot state plus the log's events.
pub fn replay(snapshot: &SystemState, log_path: impl AsRef<Path>) -> Result<ReplayOutcome> {
    let log = read_log(log_path)?;
    let mut state = snapshot.clone();
    replay_events(&mut state, &log.events)?;
    Ok(ReplayOutcome {
        state,
        applied: log.events.len(),
        torn_tail: log.torn_tail.is_some(),
    })
}

/// Writes events to a fresh log file, replacing any existing one.
pub fn write_log(path: impl AsRef<Path>, events: &[DeletionEvent]) -> Result<()> {
    let path = path.as_ref();
    let mut f = File::create(path).map_err(io_err(path))?;
    for e in events {
        f.write_all(event_line(e)?.as_bytes()).map_err(io_err(path))?;
    }
    f.sync_all().map_err(io_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use s3t_core::engine::{initialize, DeletionTarget, InitConfig, Mode};
    use s3t_core::selection::SelectionMethod;
    use s3t_core::{Budget, ShardIndex, SliceIndex};

    fn state() -> SystemState {
        let cfg = InitConfig::new(2, 3, Budget::new(3).unwrap(), Mode::S3t, SelectionMethod::Cyclic.into());
        initialize(&cfg).unwrap()
    }

    fn hit(st: &mut SystemState, shard: usize, slice: usize) -> DeletionEvent {
        st.apply_deletion(DeletionTarget::Slice {
            shard: ShardIndex(shard),
            slice: SliceIndex(slice),
        })
        .unwrap()
    }

    #[test]
    fn snapshot_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.s3t.json");
        let mut st = state();
        hit(&mut st, 1, 2);
        let sum = save_snapshot(&st, &path).unwrap();
        assert_eq!(sum.len(), 64);
        assert_eq!(load_snapshot(&path).unwrap(), st);
    }

    #[test]
    fn tampered_snapshot_fails_checksum() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.s3t.json");
        save_snapshot(&state(), &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        fs::write(&path, text.replace("\"request_count\":0", "\"request_count\":1")).unwrap();
        assert!(matches!(load_snapshot(&path), Err(RegistryError::ChecksumMismatch { .. })));
    }

    #[test]
    fn log_line_carries_version() {
        let mut st = state();
        let line = event_line(&hit(&mut st, 0, 0)).unwrap();
        assert!(line.starts_with('{') && line.ends_with("}\n"));
        assert!(line.contains("\"version\":1"));
    }

    #[test]
    fn torn_tail_is_reported_and_truncated() {
        let dir = tempfile::tempdir().unwrap();
        let log = dir.path().join("a.s3t.jsonl");
        let mut st = state();
        let e1 = hit(&mut st, 0, 0);
        append_event(&log, &e1).unwrap();
        let mut f = OpenOptions::new().append(true).open(&log).unwrap();
        f.write_all(b"{\"version\":1,\"req").unwrap();
        let read = read_log(&log).unwrap();
        assert_eq!(read.events, vec![e1]);
        assert!(read.torn_tail.is_some());
        assert!(truncate_torn_tail(&log).unwrap());
        assert_eq!(read_log(&log).unwrap().torn_tail, None);
    }

    #[test]
    fn gap_is_discontinuity() {
        let mut st = state();
        let base = st.clone();
        let _ = hit(&mut st, 0, 0);
        let e2 = hit(&mut st, 0, 1);
        let mut replayed = base;
        let err = replay_events(&mut replayed, &[e2]).unwrap_err();
        assert!(err.to_string().contains("log discontinuity"));
    }
}
