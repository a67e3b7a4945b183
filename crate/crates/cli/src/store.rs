//! Plain-file persistence under a data directory. Every artifact is a small
//! JSON envelope next to its payload file; writes go through a temporary
//! file and a rename so a crash never leaves a half-written document.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArtifactKind {
    Log,
    Session,
    Model,
}

impl ArtifactKind {
    fn dir(self) -> &'static str {
        match self {
            ArtifactKind::Log => "logs",
            ArtifactKind::Session => "sessions",
            ArtifactKind::Model => "models",
        }
    }

    fn payload_ext(self) -> &'static str {
        match self {
            ArtifactKind::Log => "variants",
            ArtifactKind::Session | ArtifactKind::Model => "payload.json",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredArtifact {
    pub id: String,
    pub kind: ArtifactKind,
    pub created_at: String,
    /// Payload path relative to the data directory.
    pub payload: String,
    #[serde(default)]
    pub meta: serde_json::Value,
}

#[derive(Debug, Clone)]
pub struct Store {
    root: PathBuf,
}

fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let tmp = path.with_extension(format!("tmp-{}", uuid::Uuid::new_v4().simple()));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)
}

fn valid_id(id: &str) -> bool {
    !id.is_empty() && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

impl Store {
    pub fn open(root: impl Into<PathBuf>) -> io::Result<Self> {
        let root = root.into();
        for kind in [ArtifactKind::Log, ArtifactKind::Session, ArtifactKind::Model] {
            fs::create_dir_all(root.join(kind.dir()))?;
        }
        fs::create_dir_all(root.join("idempotency"))?;
        Ok(Self { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn envelope_path(&self, kind: ArtifactKind, id: &str) -> PathBuf {
        self.root.join(kind.dir()).join(format!("{id}.json"))
    }

    fn payload_rel(kind: ArtifactKind, id: &str) -> String {
        format!("{}/{id}.{}", kind.dir(), kind.payload_ext())
    }

    /// Writes the payload first, then the envelope that points at it.
    /// Existing artifacts keep their creation time.
    pub fn put(&self, kind: ArtifactKind, id: &str, payload: &[u8], meta: serde_json::Value) -> io::Result<StoredArtifact> {
        let rel = Self::payload_rel(kind, id);
        write_atomic(&self.root.join(&rel), payload)?;
        let created_at = match self.envelope(kind, id)? {
            Some(a) => a.created_at,
            None => chrono::Utc::now().to_rfc3339(),
        };
        let artifact = StoredArtifact {
            id: id.to_string(),
            kind,
            created_at,
            payload: rel,
            meta,
        };
        write_atomic(
            &self.envelope_path(kind, id),
            &serde_json::to_vec_pretty(&artifact).map_err(io::Error::other)?,
        )?;
        Ok(artifact)
    }

    pub fn put_json<T: Serialize>(&self, kind: ArtifactKind, id: &str, value: &T, meta: serde_json::Value) -> io::Result<StoredArtifact> {
        let bytes = serde_json::to_vec_pretty(value).map_err(io::Error::other)?;
        self.put(kind, id, &bytes, meta)
    }

    pub fn envelope(&self, kind: ArtifactKind, id: &str) -> io::Result<Option<StoredArtifact>> {
        if !valid_id(id) {
            return Ok(None);
        }
        match fs::read(self.envelope_path(kind, id)) {
            Ok(b) => serde_json::from_slice(&b).map(Some).map_err(io::Error::other),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e),
        }
    }

    pub fn payload(&self, kind: ArtifactKind, id: &str) -> io::Result<Option<Vec<u8>>> {
        match self.envelope(kind, id)? {
            Some(a) => fs::read(self.root.join(a.payload)).map(Some),
            None => Ok(None),
        }
    }

    pub fn get_json<T: DeserializeOwned>(&self, kind: ArtifactKind, id: &str) -> io::Result<Option<T>> {
        match self.payload(kind, id)? {
            Some(b) => serde_json::from_slice(&b).map(Some).map_err(io::Error::other),
            None => Ok(None),
        }
    }

    /// Envelopes of one kind, oldest first.
    pub fn list(&self, kind: ArtifactKind) -> io::Result<Vec<StoredArtifact>> {
        let mut out = Vec::new();
        for entry in fs::read_dir(self.root.join(kind.dir()))? {
            let path = entry?.path();
            let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
            let Some(id) = name.strip_suffix(".json") else { continue };
            if id.contains('.') {
                continue;
            }
            if let Some(a) = self.envelope(kind, id)? {
                out.push(a);
            }
        }
        out.sort_by(|a, b| (&a.created_at, &a.id).cmp(&(&b.created_at, &b.id)));
        Ok(out)
    }

    pub fn idempotency_path(&self, key_digest: &str) -> PathBuf {
        self.root.join("idempotency").join(format!("{key_digest}.json"))
    }

    pub fn write_idempotent(&self, key_digest: &str, bytes: &[u8]) -> io::Result<()> {
        write_atomic(&self.idempotency_path(key_digest), bytes)
    }
}
