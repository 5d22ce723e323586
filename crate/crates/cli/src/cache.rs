//! Content-addressed stage cache.
//!
//! A stage's directory is named by a hash of everything the stage reads.
//! Work happens in a `.partial` directory that is renamed once complete, so
//! an interrupted stage is never mistaken for a finished one; failed
//! partials are left in place for inspection.

use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};
use textrisk::{Error, Result};

/// Overrides the cache location.
pub const CACHE_ENV: &str = "TEXTRISK_CACHE_DIR";

fn io(ctx: &Path, e: std::io::Error) -> Error {
    Error::Io { context: ctx.display().to_string(), source: e }
}

/// Hex SHA-256 of a byte string.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Key of `stage` given its inputs. Inputs are hashed through their JSON
/// form, whose object keys serialize in sorted order.
pub fn stage_key(stage: &str, inputs: &impl Serialize) -> Result<String> {
    let value = serde_json::to_value(inputs).map_err(|e| Error::Config(format!("stage {stage} inputs: {e}")))?;
    let mut h = Sha256::new();
    h.update(stage.as_bytes());
    h.update([0]);
    h.update(value.to_string().as_bytes());
    Ok(hex::encode(&h.finalize()[..16]))
}

#[derive(Debug, Clone)]
pub struct Cache {
    root: PathBuf,
}

/// Outcome of [`Cache::stage`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageDir {
    pub path: PathBuf,
    pub reused: bool,
}

impl Cache {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Cache { root: root.into() }
    }

    /// `$TEXTRISK_CACHE_DIR` when set, otherwise `<output_dir>/cache`.
    pub fn for_output(output_dir: &Path) -> Self {
        match std::env::var_os(CACHE_ENV) {
            Some(dir) if !dir.is_empty() => Cache::new(dir),
            _ => Cache::new(output_dir.join("cache")),
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, stage: &str, key: &str) -> PathBuf {
        self.root.join(format!("{stage}-{key}"))
    }

    /// Returns the stage directory, running `build` into a fresh one if no
    /// completed directory exists for `key`.
    pub fn stage(&self, stage: &str, key: &str, build: impl FnOnce(&Path) -> Result<()>) -> Result<StageDir> {
        let path = self.path(stage, key);
        if path.is_dir() {
            log::info!("{stage}: cached ({key})");
            return Ok(StageDir { path, reused: true });
        }
        let partial = self.root.join(format!(".{stage}-{key}.partial"));
        if partial.exists() {
            std::fs::remove_dir_all(&partial).map_err(|e| io(&partial, e))?;
        }
        std::fs::create_dir_all(&partial).map_err(|e| io(&partial, e))?;
        build(&partial)?;
        std::fs::rename(&partial, &path).map_err(|e| io(&path, e))?;
        Ok(StageDir { path, reused: false })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keys_depend_on_stage_and_inputs() {
        let a = stage_key("x", &serde_json::json!({"a": 1, "b": 2})).unwrap();
        let b = stage_key("x", &serde_json::json!({"b": 2, "a": 1})).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, stage_key("y", &serde_json::json!({"a": 1, "b": 2})).unwrap());
        assert_ne!(a, stage_key("x", &serde_json::json!({"a": 1, "b": 3})).unwrap());
    }

    #[test]
    fn completed_stage_is_reused_and_failed_one_is_not() {
        let tmp = tempfile::tempdir().unwrap();
        let cache = Cache::new(tmp.path());
        let first = cache.stage("s", "k", |d| std::fs::write(d.join("f"), "1").map_err(|e| io(d, e))).unwrap();
        assert!(!first.reused);
        let second = cache.stage("s", "k", |_| panic!("must not rebuild")).unwrap();
        assert!(second.reused);
        assert_eq!(std::fs::read_to_string(second.path.join("f")).unwrap(), "1");

        let err = cache.stage("s", "bad", |_| Err(Error::Data("boom".into())));
        assert!(err.is_err());
        assert!(!cache.path("s", "bad").exists());
        assert!(tmp.path().join(".s-bad.partial").exists());
    }
}
