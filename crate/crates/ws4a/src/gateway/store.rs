//! On-disk request/response store backing record and replay modes. One
//! entry is two files: `<key>.meta.json` with the request descriptor and
//! `<key>.body` with the verbatim response bytes.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::gateway::{GatewayError, Method};

/// Request descriptor persisted next to the response bytes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CacheEntryMeta {
    pub method: String,
    pub url: String,
    pub content_type: String,
    pub recorded_at: String,
}

/// Deterministic entry key: SHA-256 over method, URL and body.
pub fn request_key(method: Method, url: &str, body: Option<&[u8]>) -> String {
    let mut hasher = Sha256::new();
    hasher.update(method.as_str().as_bytes());
    hasher.update(b"\n");
    hasher.update(url.as_bytes());
    hasher.update(b"\n");
    if let Some(body) = body {
        hasher.update(body);
    }
    hex::encode(hasher.finalize())
}

#[derive(Debug)]
pub struct FixtureStore {
    dir: PathBuf,
    /// Immutable snapshot used in replay mode; `None` for writable stores.
    snapshot: Option<HashMap<String, (CacheEntryMeta, Vec<u8>)>>,
    write_lock: Mutex<()>,
}

impl FixtureStore {
    /// Loads every entry in `dir` into memory; lookups after this never
    /// touch the filesystem.
    pub fn open_replay(dir: impl AsRef<Path>) -> Result<Self, GatewayError> {
        let dir = dir.as_ref().to_path_buf();
        let mut snapshot = HashMap::new();
        let entries = std::fs::read_dir(&dir).map_err(|e| {
            GatewayError::Store(format!("cannot open fixture store {}: {e}", dir.display()))
        })?;
        for entry in entries {
            let path = entry.map_err(|e| GatewayError::Store(e.to_string()))?.path();
            let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
            let Some(key) = name.strip_suffix(".meta.json") else {
                continue;
            };
            let meta: CacheEntryMeta = serde_json::from_slice(
                &std::fs::read(&path).map_err(|e| GatewayError::Store(e.to_string()))?,
            )
            .map_err(|e| GatewayError::Store(format!("bad meta {}: {e}", path.display())))?;
            let body_path = dir.join(format!("{key}.body"));
            let body = std::fs::read(&body_path).map_err(|e| {
                GatewayError::Store(format!("missing body {}: {e}", body_path.display()))
            })?;
            snapshot.insert(key.to_string(), (meta, body));
        }
        Ok(FixtureStore {
            dir,
            snapshot: Some(snapshot),
            write_lock: Mutex::new(()),
        })
    }

    /// Opens (creating if needed) a store for recording.
    pub fn open_writable(dir: impl AsRef<Path>) -> Result<Self, GatewayError> {
        let dir = dir.as_ref().to_path_buf();
        std::fs::create_dir_all(&dir).map_err(|e| {
            GatewayError::Store(format!("cannot create fixture store {}: {e}", dir.display()))
        })?;
        Ok(FixtureStore {
            dir,
            snapshot: None,
            write_lock: Mutex::new(()),
        })
    }

    pub fn lookup(&self, key: &str) -> Option<(&CacheEntryMeta, &[u8])> {
        self.snapshot
            .as_ref()?
            .get(key)
            .map(|(meta, body)| (meta, body.as_slice()))
    }

    pub fn insert(
        &self,
        key: &str,
        meta: &CacheEntryMeta,
        body: &[u8],
    ) -> Result<(), GatewayError> {
        let _guard = self.write_lock.lock().expect("store lock poisoned");
        let body_path = self.dir.join(format!("{key}.body"));
        let meta_path = self.dir.join(format!("{key}.meta.json"));
        std::fs::write(&body_path, body).map_err(|e| GatewayError::Store(e.to_string()))?;
        let meta_json =
            serde_json::to_vec_pretty(meta).map_err(|e| GatewayError::Store(e.to_string()))?;
        std::fs::write(&meta_path, meta_json).map_err(|e| GatewayError::Store(e.to_string()))?;
        Ok(())
    }

    pub fn keys(&self) -> Vec<String> {
        match &self.snapshot {
            Some(map) => map.keys().cloned().collect(),
            None => Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.snapshot.as_ref().map_or(0, HashMap::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keys_distinguish_requests() {
        let a = request_key(Method::Get, "http://x/1", None);
        let b = request_key(Method::Get, "http://x/2", None);
        let c = request_key(Method::Post, "http://x/1", None);
        let d = request_key(Method::Post, "http://x/1", Some(b"body"));
        let keys = [&a, &b, &c, &d];
        for (i, k1) in keys.iter().enumerate() {
            for k2 in &keys[i + 1..] {
                assert_ne!(k1, k2);
            }
        }
        // deterministic
        assert_eq!(a, request_key(Method::Get, "http://x/1", None));
    }

    #[test]
    fn store_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let store = FixtureStore::open_writable(dir.path()).unwrap();
        let key = request_key(Method::Get, "http://x/1", None);
        let meta = CacheEntryMeta {
            method: "GET".into(),
            url: "http://x/1".into(),
            content_type: "text/plain".into(),
            recorded_at: "2016-01-01T00:00:00Z".into(),
        };
        store.insert(&key, &meta, b"hello").unwrap();

        let replay = FixtureStore::open_replay(dir.path()).unwrap();
        let (m, body) = replay.lookup(&key).unwrap();
        assert_eq!(m.url, "http://x/1");
        assert_eq!(body, b"hello");
        assert!(replay.lookup("missing").is_none());
    }
}
