//! Output directory bookkeeping: every file written is recorded, digested
//! into `manifest.json` on success and removed again on failure.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Manifest {
    pub files: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn digest_of(&self, path: &str) -> Option<&str> {
        self.files
            .iter()
            .find(|e| e.path == path)
            .map(|e| e.sha256.as_str())
    }
}

pub fn sha256_file(path: &Path) -> CliResult<String> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Files written by one run.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    written: Vec<String>,
    created_root: bool,
}

impl OutputDir {
    pub fn create(root: &Path) -> CliResult<Self> {
        let created_root = !root.exists();
        fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(OutputDir {
            root: root.to_path_buf(),
            written: Vec::new(),
            created_root,
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write<F>(&mut self, name: &str, body: F) -> CliResult<()>
    where
        F: FnOnce(&mut BufWriter<File>) -> io::Result<()>,
    {
        let path = self.root.join(name);
        if !self.written.iter().any(|w| w == name) {
            self.written.push(name.to_owned());
        }
        let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
        let mut w = BufWriter::new(file);
        body(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| CliError::io(&path, e))
    }

    /// Pretty JSON with a trailing newline.
    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        let text = serde_json::to_string_pretty(value)?;
        self.write(name, |w| writeln!(w, "{text}"))
    }

    /// Digests every written file (sorted by name) into `manifest.json`.
    pub fn finish(mut self) -> CliResult<Manifest> {
        self.written.sort();
        let files = self
            .written
            .iter()
            .map(|name| {
                let path = self.root.join(name);
                let bytes = fs::metadata(&path)
                    .map_err(|e| CliError::io(&path, e))?
                    .len();
                Ok(ManifestEntry {
                    path: name.clone(),
                    bytes,
                    sha256: sha256_file(&path)?,
                })
            })
            .collect::<CliResult<Vec<_>>>()?;
        let manifest = Manifest { files };
        let text = serde_json::to_string_pretty(&manifest)?;
        let path = self.root.join(MANIFEST_NAME);
        fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))?;
        Ok(manifest)
    }

    /// Removes everything this run wrote.
    pub fn abort(self) {
        for name in &self.written {
            let _ = fs::remove_file(self.root.join(name));
        }
        if self.created_root {
            // Only succeeds if nothing else lives there.
            let _ = fs::remove_dir(&self.root);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_lists_sorted_digests() {
        let tmp = tempfile::tempdir().unwrap();
        let mut out = OutputDir::create(tmp.path()).unwrap();
        out.write("b.txt", |w| w.write_all(b"abc")).unwrap();
        out.write("a.txt", |w| w.write_all(b"")).unwrap();
        let m = out.finish().unwrap();
        assert_eq!(m.files[0].path, "a.txt");
        // Known SHA-256 test vectors.
        assert_eq!(
            m.digest_of("a.txt").unwrap(),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
        assert_eq!(
            m.digest_of("b.txt").unwrap(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
        let text = fs::read_to_string(tmp.path().join(MANIFEST_NAME)).unwrap();
        let back: Manifest = serde_json::from_str(&text).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn abort_removes_partial_output() {
        let tmp = tempfile::tempdir().unwrap();
        let root = tmp.path().join("run");
        let mut out = OutputDir::create(&root).unwrap();
        out.write("x.csv", |w| w.write_all(b"1")).unwrap();
        out.abort();
        assert!(!root.exists());
    }
}
