//! File-backed keyed document store.
//!
//! Layout: `<root>/<namespace>/<key>.doc`. Each document is a canonical JSON
//! envelope (sorted keys, two-space indent) holding the key, namespace,
//! payload and an `updated_at` timestamp in unix milliseconds. Writes go to
//! a temporary file in the same directory and are renamed into place, so a
//! reader only ever sees a complete document.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, thiserror::Error)]
pub enum LtmError {
    #[error("namespace `{0}` is not registered")]
    UnregisteredNamespace(String),
    #[error("record {namespace}/{key}: {message}")]
    Schema {
        namespace: String,
        key: String,
        message: String,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: malformed document: {source}")]
    Decode {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LtmRecord {
    pub namespace: String,
    pub key: String,
    pub payload: Value,
    pub updated_at: u64,
}

impl LtmRecord {
    /// A record stamped with the current wall-clock time.
    pub fn new(namespace: impl Into<String>, key: impl Into<String>, payload: Value) -> Self {
        let updated_at = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_millis() as u64)
            .unwrap_or(0);
        Self {
            namespace: namespace.into(),
            key: key.into(),
            payload,
            updated_at,
        }
    }
}

/// Sorted-key, pretty-printed JSON; the byte form used for comparisons.
pub fn canonical_json(value: &Value) -> String {
    // serde_json's default map is ordered, so key order is canonical.
    serde_json::to_string_pretty(value).expect("JSON values always serialize")
}

#[derive(Debug)]
pub struct LtmStore {
    root: PathBuf,
    schemas: BTreeMap<String, Vec<String>>,
    reads: AtomicU64,
    writes: AtomicU64,
}

/// Namespaces and the payload fields each requires.
const DEFAULT_NAMESPACES: &[(&str, &[&str])] = &[
    ("opinions", &["entity", "category", "variants"]),
    ("stories", &["id", "title", "rank", "opener", "sentences", "qa"]),
    ("facts", &["topic", "label", "keywords", "facts"]),
    ("surveys", &["id", "title", "triggers", "categories", "questions", "results"]),
    ("trivia", &["id", "clue", "answer"]),
    ("fast_money", &["id", "prompt", "answers"]),
    ("cities", &["name"]),
    ("adventures", &["id", "opening", "branches", "continuations", "ending"]),
    ("riddles", &["id", "question", "answer"]),
    ("wyr", &["id", "question", "options", "agent_choice", "justification"]),
    ("turn_corpus", &["id", "stimulus", "response", "topic"]),
    ("kb_exact", &["id", "keywords", "entities", "answer"]),
    ("kb_encyclopedia", &["entity", "summary"]),
    ("kb_web", &["id", "keywords", "answer"]),
    ("user_profiles", &["user_id", "profile"]),
    ("session_summaries", &["session_id", "turn_count"]),
];

impl LtmStore {
    /// Opens (creating if needed) a store rooted at `root` with no
    /// namespaces registered.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, LtmError> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(|source| LtmError::Io {
            path: root.clone(),
            source,
        })?;
        Ok(Self {
            root,
            schemas: BTreeMap::new(),
            reads: AtomicU64::new(0),
            writes: AtomicU64::new(0),
        })
    }

    /// Opens a store with every built-in namespace registered.
    pub fn open_default(root: impl Into<PathBuf>) -> Result<Self, LtmError> {
        let mut store = Self::open(root)?;
        for (ns, fields) in DEFAULT_NAMESPACES {
            store.register(ns, fields);
        }
        Ok(store)
    }

    pub fn register(&mut self, namespace: &str, required_fields: &[&str]) {
        self.schemas.insert(
            namespace.to_string(),
            required_fields.iter().map(|f| f.to_string()).collect(),
        );
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Number of documents read since the store was opened.
    pub fn read_count(&self) -> u64 {
        self.reads.load(Ordering::SeqCst)
    }

    pub fn write_count(&self) -> u64 {
        self.writes.load(Ordering::SeqCst)
    }

    fn check_namespace(&self, namespace: &str) -> Result<&[String], LtmError> {
        self.schemas
            .get(namespace)
            .map(Vec::as_slice)
            .ok_or_else(|| LtmError::UnregisteredNamespace(namespace.to_string()))
    }

    fn doc_path(&self, namespace: &str, key: &str) -> PathBuf {
        self.root.join(namespace).join(format!("{}.doc", encode_key(key)))
    }

    pub fn get(&self, namespace: &str, key: &str) -> Result<Option<LtmRecord>, LtmError> {
        self.check_namespace(namespace)?;
        self.reads.fetch_add(1, Ordering::SeqCst);
        let path = self.doc_path(namespace, key);
        match fs::read_to_string(&path) {
            Ok(text) => serde_json::from_str(&text)
                .map(Some)
                .map_err(|source| LtmError::Decode { path, source }),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(source) => Err(LtmError::Io { path, source }),
        }
    }

    pub fn put(&self, record: &LtmRecord) -> Result<(), LtmError> {
        let required = self.check_namespace(&record.namespace)?;
        let Some(obj) = record.payload.as_object() else {
            return Err(LtmError::Schema {
                namespace: record.namespace.clone(),
                key: record.key.clone(),
                message: "payload must be an object".into(),
            });
        };
        if let Some(missing) = required.iter().find(|f| !obj.contains_key(f.as_str())) {
            return Err(LtmError::Schema {
                namespace: record.namespace.clone(),
                key: record.key.clone(),
                message: format!("missing field `{missing}`"),
            });
        }

        let dir = self.root.join(&record.namespace);
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| LtmError::Io { path, source }
        };
        fs::create_dir_all(&dir).map_err(io(&dir))?;
        let path = self.doc_path(&record.namespace, &record.key);
        let tmp = dir.join(format!(".{}.tmp", encode_key(&record.key)));
        let body = canonical_json(&serde_json::to_value(record).expect("records serialize"));
        {
            let mut f = fs::File::create(&tmp).map_err(io(&tmp))?;
            f.write_all(body.as_bytes()).map_err(io(&tmp))?;
            f.write_all(b"\n").map_err(io(&tmp))?;
            f.sync_all().map_err(io(&tmp))?;
        }
        fs::rename(&tmp, &path).map_err(io(&path))?;
        self.writes.fetch_add(1, Ordering::SeqCst);
        Ok(())
    }

    /// Keys stored under `namespace`, sorted.
    pub fn keys(&self, namespace: &str) -> Result<Vec<String>, LtmError> {
        self.check_namespace(namespace)?;
        let dir = self.root.join(namespace);
        let entries = match fs::read_dir(&dir) {
            Ok(e) => e,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(source) => return Err(LtmError::Io { path: dir, source }),
        };
        let mut keys = Vec::new();
        for entry in entries {
            let entry = entry.map_err(|source| LtmError::Io {
                path: dir.clone(),
                source,
            })?;
            let name = entry.file_name().to_string_lossy().into_owned();
            if let Some(stem) = name.strip_suffix(".doc") {
                if !stem.starts_with('.') {
                    keys.push(decode_key(stem));
                }
            }
        }
        keys.sort();
        Ok(keys)
    }

    /// All records in a namespace, in key order.
    pub fn scan(&self, namespace: &str) -> Result<Vec<LtmRecord>, LtmError> {
        let mut out = Vec::new();
        for key in self.keys(namespace)? {
            if let Some(r) = self.get(namespace, &key)? {
                out.push(r);
            }
        }
        Ok(out)
    }
}

fn encode_key(key: &str) -> String {
    let mut out = String::with_capacity(key.len());
    for b in key.bytes() {
        if b.is_ascii_alphanumeric() || b == b'_' || b == b'-' {
            out.push(b as char);
        } else {
            out.push_str(&format!("%{b:02X}"));
        }
    }
    out
}

fn decode_key(encoded: &str) -> String {
    let bytes = encoded.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'%' && i + 2 < bytes.len() {
            if let Ok(b) = u8::from_str_radix(&encoded[i + 1..i + 3], 16) {
                out.push(b);
                i += 3;
                continue;
            }
        }
        out.push(bytes[i]);
        i += 1;
    }
    String::from_utf8_lossy(&out).into_owned()
}
