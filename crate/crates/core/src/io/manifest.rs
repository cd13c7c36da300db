use std::fs::File;
use std::io::{BufReader, Read};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ManifestEntry {
    /// Path relative to the output directory.
    pub name: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Checksummed list of artifacts under one directory.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
}

pub fn sha256_file(path: impl AsRef<Path>) -> Result<(String, u64)> {
    let path = path.as_ref();
    let mut reader = BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?);
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    let mut total = 0u64;
    loop {
        let n = reader.read(&mut buf).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        total += n as u64;
        hasher.update(&buf[..n]);
    }
    Ok((hex::encode(hasher.finalize()), total))
}

impl Manifest {
    /// Record (or refresh) `name`, resolved against `root`.
    pub fn record(&mut self, root: &Path, name: &str) -> Result<()> {
        let (sha256, bytes) = sha256_file(root.join(name))?;
        let entry = ManifestEntry {
            name: name.to_string(),
            sha256,
            bytes,
        };
        match self.entries.iter_mut().find(|e| e.name == name) {
            Some(slot) => *slot = entry,
            None => self.entries.push(entry),
        }
        Ok(())
    }

    pub fn render(&self) -> String {
        self.entries
            .iter()
            .map(|e| format!("{}  {}  {}\n", e.sha256, e.bytes, e.name))
            .collect()
    }

    /// Inverse of [`Manifest::render`].
    pub fn parse(text: &str) -> Result<Manifest> {
        let entries = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .enumerate()
            .map(|(i, line)| {
                let mut parts = line.splitn(3, "  ");
                let fields = (parts.next(), parts.next().and_then(|b| b.parse().ok()), parts.next());
                match fields {
                    (Some(sha), Some(bytes), Some(name)) => Ok(ManifestEntry {
                        name: name.to_string(),
                        sha256: sha.to_string(),
                        bytes,
                    }),
                    _ => Err(Error::Parse {
                        path: PathBuf::from("manifest"),
                        line: i + 1,
                        column: 1,
                        message: format!("malformed manifest line `{line}`"),
                    }),
                }
            })
            .collect::<Result<_>>()?;
        Ok(Manifest { entries })
    }

    /// Names whose current content no longer matches the recorded checksum.
    pub fn verify(&self, root: &Path) -> Result<Vec<PathBuf>> {
        let mut stale = Vec::new();
        for e in &self.entries {
            let path = root.join(&e.name);
            match sha256_file(&path) {
                Ok((sum, _)) if sum == e.sha256 => {}
                _ => stale.push(path),
            }
        }
        Ok(stale)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest_and_verify() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("a.txt"), "abc").unwrap();
        let mut m = Manifest::default();
        m.record(dir.path(), "a.txt").unwrap();
        assert_eq!(
            m.entries[0].sha256,
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
        assert_eq!(m.entries[0].bytes, 3);
        assert!(m.verify(dir.path()).unwrap().is_empty());
        assert_eq!(Manifest::parse(&m.render()).unwrap(), m);
        std::fs::write(dir.path().join("a.txt"), "abd").unwrap();
        assert_eq!(m.verify(dir.path()).unwrap().len(), 1);
    }
}
