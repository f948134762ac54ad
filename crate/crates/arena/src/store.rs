//! Append-only JSON Lines storage for sessions and retrospective traces.
//!
//! Layout under the data directory:
//!
//! ```text
//! sessions/<game>/<YYYY-MM-DD>.log
//! traces/<game>/<YYYY-MM-DD>.log
//! reports/<name>.json
//! ```
//!
//! Dates are the UTC day of the session's `created_at`. Corrections are
//! appended as new records with a higher `revision`; loading keeps the
//! highest revision of every session.

use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use gamearena_core::retro::RetroTrace;
use gamearena_core::{GameKind, Rational, Session, SessionId, Status};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Completeness {
    CompleteWithFeedback,
    Incomplete,
}

impl Completeness {
    /// Complete iff the game ran to an outcome.
    pub fn of(session: &Session) -> Self {
        match (session.status, &session.outcome) {
            (Status::ModelWon | Status::UserWon, Some(_)) => Completeness::CompleteWithFeedback,
            _ => Completeness::Incomplete,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub schema_version: u32,
    pub session: Session,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subset_tag: Option<String>,
    pub completeness: Completeness,
    #[serde(default)]
    pub revision: u32,
}

impl SessionRecord {
    pub fn new(session: Session, subset_tag: Option<String>) -> Self {
        SessionRecord {
            schema_version: SCHEMA_VERSION,
            completeness: Completeness::of(&session),
            session,
            subset_tag,
            revision: 0,
        }
    }

    /// A correction of `self` carrying the updated session.
    pub fn corrected(&self, session: Session) -> Self {
        SessionRecord { revision: self.revision + 1, ..SessionRecord::new(session, self.subset_tag.clone()) }
    }

    pub fn is_complete(&self) -> bool {
        self.completeness == Completeness::CompleteWithFeedback
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub schema_version: u32,
    /// `created_at` of the session, used to place the record.
    pub created_at: i64,
    pub trace: RetroTrace,
}

/// Conjunctive record filter; the default selects everything.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CorpusFilter {
    pub game: Option<GameKind>,
    pub model: Option<String>,
    pub prompt: Option<String>,
    pub subset_tag: Option<String>,
    pub completeness: Option<Completeness>,
    /// Inclusive lower bound on `created_at`, ms.
    pub from_ms: Option<i64>,
    /// Exclusive upper bound on `created_at`, ms.
    pub to_ms: Option<i64>,
}

impl CorpusFilter {
    pub fn game(game: GameKind) -> Self {
        CorpusFilter { game: Some(game), ..Default::default() }
    }

    pub fn matches(&self, r: &SessionRecord) -> bool {
        let s = &r.session;
        self.game.is_none_or(|g| s.game == g)
            && self.model.as_ref().is_none_or(|m| &s.model_ref == m)
            && self.prompt.as_ref().is_none_or(|p| &s.prompt_ref == p)
            && self.subset_tag.as_ref().is_none_or(|t| r.subset_tag.as_ref() == Some(t))
            && self.completeness.is_none_or(|c| r.completeness == c)
            && self.from_ms.is_none_or(|t| s.created_at >= t)
            && self.to_ms.is_none_or(|t| s.created_at < t)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Corrupt { path: PathBuf, line: usize, message: String },
    #[error("schema version {found} is not supported (expected {expected})")]
    SchemaVersion { found: u32, expected: u32 },
    #[error("session `{0}` is already stored")]
    Duplicate(SessionId),
    #[error("invalid record: {0}")]
    Invalid(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io { path: path.to_path_buf(), source }
}

/// UTC calendar day of a millisecond timestamp.
pub fn utc_day(ms: i64) -> String {
    chrono::DateTime::from_timestamp_millis(ms)
        .map(|d| d.format("%Y-%m-%d").to_string())
        .unwrap_or_else(|| "invalid-date".into())
}

/// One line of an export bundle.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ExportLine {
    Header { schema_version: u32, sessions: usize, traces: usize },
    Session(SessionRecord),
    Trace(TraceRecord),
}

#[derive(Debug)]
pub struct Store {
    root: PathBuf,
    /// Latest stored revision per session; also serializes writers.
    index: Mutex<HashMap<SessionId, u32>>,
}

impl Store {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        for sub in ["sessions", "traces", "reports"] {
            let p = root.join(sub);
            fs::create_dir_all(&p).map_err(io_err(&p))?;
        }
        let store = Store { root, index: Mutex::new(HashMap::new()) };
        let mut index = HashMap::new();
        for r in store.read_sessions()? {
            let e = index.entry(r.session.session_id.clone()).or_insert(r.revision);
            *e = (*e).max(r.revision);
        }
        *store.index.lock().unwrap() = index;
        Ok(store)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn log_files(&self, kind: &str) -> Result<Vec<PathBuf>, StoreError> {
        let mut files = Vec::new();
        for game in GameKind::ALL {
            let dir = self.root.join(kind).join(game.as_str());
            if !dir.exists() {
                continue;
            }
            for e in fs::read_dir(&dir).map_err(io_err(&dir))? {
                let p = e.map_err(io_err(&dir))?.path();
                if p.extension().is_some_and(|x| x == "log") {
                    files.push(p);
                }
            }
        }
        files.sort();
        Ok(files)
    }

    fn append_line(&self, kind: &str, game: GameKind, created_at: i64, line: &str) -> Result<(), StoreError> {
        let dir = self.root.join(kind).join(game.as_str());
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        let path = dir.join(format!("{}.log", utc_day(created_at)));
        let mut f = OpenOptions::new().create(true).append(true).open(&path).map_err(io_err(&path))?;
        f.write_all(line.as_bytes()).and_then(|_| f.write_all(b"\n")).map_err(io_err(&path))?;
        f.sync_data().map_err(io_err(&path))
    }

    fn read_lines<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, StoreError> {
        let f = File::open(path).map_err(io_err(path))?;
        let mut out = Vec::new();
        for (i, line) in BufReader::new(f).lines().enumerate() {
            let line = line.map_err(io_err(path))?;
            if line.trim().is_empty() {
                continue;
            }
            let v: serde_json::Value = serde_json::from_str(&line).map_err(|e| StoreError::Corrupt {
                path: path.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            })?;
            let found = v.get("schema_version").and_then(|x| x.as_u64()).unwrap_or(0) as u32;
            if found != SCHEMA_VERSION {
                return Err(StoreError::SchemaVersion { found, expected: SCHEMA_VERSION });
            }
            out.push(serde_json::from_value(v).map_err(|e| StoreError::Corrupt {
                path: path.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            })?);
        }
        Ok(out)
    }

    fn read_sessions(&self) -> Result<Vec<SessionRecord>, StoreError> {
        let mut out = Vec::new();
        for f in self.log_files("sessions")? {
            out.extend(Self::read_lines::<SessionRecord>(&f)?);
        }
        Ok(out)
    }

    /// Durably appends a record and returns its session id. Completeness is
    /// recomputed from the session. A record for an already stored session
    /// must carry a higher revision.
    pub fn append(&self, mut record: SessionRecord) -> Result<SessionId, StoreError> {
        if record.schema_version != SCHEMA_VERSION {
            return Err(StoreError::SchemaVersion { found: record.schema_version, expected: SCHEMA_VERSION });
        }
        let s = &record.session;
        if s.session_id.as_str().trim().is_empty() {
            return Err(StoreError::Invalid("empty session id".into()));
        }
        if s.round_count > s.config.max_rounds {
            return Err(StoreError::Invalid(format!("round_count {} exceeds {}", s.round_count, s.config.max_rounds)));
        }
        record.completeness = Completeness::of(s);
        let mut index = self.index.lock().unwrap();
        if let Some(&rev) = index.get(&s.session_id) {
            if record.revision <= rev {
                return Err(StoreError::Duplicate(s.session_id.clone()));
            }
        }
        let line = serde_json::to_string(&record).map_err(|e| StoreError::Invalid(e.to_string()))?;
        self.append_line("sessions", s.game, s.created_at, &line)?;
        index.insert(s.session_id.clone(), record.revision);
        Ok(s.session_id.clone())
    }

    pub fn contains(&self, id: &SessionId) -> bool {
        self.index.lock().unwrap().contains_key(id)
    }

    pub fn session_ids(&self) -> Vec<SessionId> {
        self.index.lock().unwrap().keys().cloned().collect()
    }

    /// Latest revision of every matching session, ordered by
    /// `(created_at, session_id)`.
    pub fn load(&self, filter: &CorpusFilter) -> Result<Vec<SessionRecord>, StoreError> {
        let mut latest: BTreeMap<SessionId, SessionRecord> = BTreeMap::new();
        for r in self.read_sessions()? {
            match latest.get(&r.session.session_id) {
                Some(prev) if prev.revision >= r.revision => {}
                _ => {
                    latest.insert(r.session.session_id.clone(), r);
                }
            }
        }
        let mut out: Vec<SessionRecord> = latest.into_values().filter(|r| filter.matches(r)).collect();
        out.sort_by(|a, b| {
            (a.session.created_at, &a.session.session_id).cmp(&(b.session.created_at, &b.session.session_id))
        });
        Ok(out)
    }

    pub fn get(&self, id: &SessionId) -> Result<Option<SessionRecord>, StoreError> {
        Ok(self.load(&CorpusFilter::default())?.into_iter().find(|r| &r.session.session_id == id))
    }

    pub fn append_trace(&self, trace: &RetroTrace, created_at: i64) -> Result<(), StoreError> {
        let rec = TraceRecord { schema_version: SCHEMA_VERSION, created_at, trace: trace.clone() };
        let line = serde_json::to_string(&rec).map_err(|e| StoreError::Invalid(e.to_string()))?;
        let _guard = self.index.lock().unwrap();
        self.append_line("traces", trace.game, created_at, &line)
    }

    /// Latest trace per session.
    pub fn load_traces(&self) -> Result<BTreeMap<SessionId, TraceRecord>, StoreError> {
        let mut out = BTreeMap::new();
        for f in self.log_files("traces")? {
            for r in Self::read_lines::<TraceRecord>(&f)? {
                out.insert(r.trace.session_id.clone(), r);
            }
        }
        Ok(out)
    }

    pub fn write_report(&self, name: &str, value: &serde_json::Value) -> Result<PathBuf, StoreError> {
        let path = self.root.join("reports").join(format!("{name}.json"));
        let text = serde_json::to_string_pretty(value).map_err(|e| StoreError::Invalid(e.to_string()))?;
        fs::write(&path, text + "\n").map_err(io_err(&path))?;
        Ok(path)
    }

    /// Hex SHA-256 over every session and trace log, path and bytes, in
    /// path order.
    pub fn digest(&self) -> Result<String, StoreError> {
        let mut h = Sha256::new();
        for kind in ["sessions", "traces"] {
            for f in self.log_files(kind)? {
                let rel = f.strip_prefix(&self.root).unwrap_or(&f);
                h.update(rel.to_string_lossy().replace('\\', "/").as_bytes());
                h.update(b"\0");
                h.update(fs::read(&f).map_err(io_err(&f))?);
                h.update(b"\0");
            }
        }
        Ok(hex::encode(h.finalize()))
    }

    /// Writes a snapshot of the matching sessions and their traces to `out`
    /// and returns the bundle's hex SHA-256.
    pub fn export(&self, filter: &CorpusFilter, out: &Path) -> Result<String, StoreError> {
        let sessions = self.load(filter)?;
        let traces = self.load_traces()?;
        let picked: Vec<&TraceRecord> =
            sessions.iter().filter_map(|r| traces.get(&r.session.session_id)).collect();
        let mut lines = vec![ExportLine::Header {
            schema_version: SCHEMA_VERSION,
            sessions: sessions.len(),
            traces: picked.len(),
        }];
        lines.extend(sessions.iter().cloned().map(ExportLine::Session));
        lines.extend(picked.into_iter().cloned().map(ExportLine::Trace));
        let mut buf = String::new();
        for l in &lines {
            buf.push_str(&serde_json::to_string(l).map_err(|e| StoreError::Invalid(e.to_string()))?);
            buf.push('\n');
        }
        fs::write(out, &buf).map_err(io_err(out))?;
        Ok(hex::encode(Sha256::digest(buf.as_bytes())))
    }

    /// Appends the contents of an export bundle. Sessions already present
    /// are skipped. Returns (imported, skipped).
    pub fn import(&self, bundle: &Path) -> Result<(usize, usize), StoreError> {
        let text = fs::read_to_string(bundle).map_err(io_err(bundle))?;
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let parse = |i: usize, l: &str| {
            serde_json::from_str::<ExportLine>(l).map_err(|e| StoreError::Corrupt {
                path: bundle.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            })
        };
        match lines.next().map(|(i, l)| parse(i, l)).transpose()? {
            Some(ExportLine::Header { schema_version, .. }) if schema_version == SCHEMA_VERSION => {}
            Some(ExportLine::Header { schema_version, .. }) => {
                return Err(StoreError::SchemaVersion { found: schema_version, expected: SCHEMA_VERSION })
            }
            _ => return Err(StoreError::Invalid("bundle has no header".into())),
        }
        let (mut imported, mut skipped) = (0, 0);
        for (i, l) in lines {
            match parse(i, l)? {
                ExportLine::Session(r) => match self.append(r) {
                    Ok(_) => imported += 1,
                    Err(StoreError::Duplicate(_)) => skipped += 1,
                    Err(e) => return Err(e),
                },
                ExportLine::Trace(t) => self.append_trace(&t.trace, t.created_at)?,
                ExportLine::Header { .. } => return Err(StoreError::Invalid("second header".into())),
            }
        }
        Ok((imported, skipped))
    }
}

/// Fraction of records completed with outcome feedback; `None` for an
/// empty corpus.
pub fn useful_data_rate(records: &[SessionRecord]) -> Option<Rational> {
    if records.is_empty() {
        return None;
    }
    let complete = records.iter().filter(|r| r.is_complete()).count();
    Some(Rational::new(complete as i128, records.len() as i128))
}
