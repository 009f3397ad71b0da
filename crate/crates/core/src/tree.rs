//! In-memory repository trees keyed by repository-relative path.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::sync::{Arc, OnceLock};

use sha2::{Digest, Sha256};
use walkdir::WalkDir;

use crate::error::{Error, Result};

/// File contents of one repository checkout, keyed by `/`-separated relative path.
/// Contents are shared, so clones of a tree are cheap.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SourceTree {
    files: BTreeMap<String, Arc<Blob>>,
}

#[derive(Debug)]
struct Blob {
    bytes: Vec<u8>,
    digest: OnceLock<String>,
}

impl Blob {
    fn new(bytes: Vec<u8>) -> Arc<Self> {
        Arc::new(Self {
            bytes,
            digest: OnceLock::new(),
        })
    }
}

impl PartialEq for Blob {
    fn eq(&self, other: &Self) -> bool {
        self.bytes == other.bytes
    }
}

impl Eq for Blob {}

impl SourceTree {
    pub fn new() -> Self {
        Self::default()
    }

    /// Reads every regular file below `root`, skipping `.git` and other hidden
    /// directories. Unreadable files are recorded in `unreadable` instead of failing.
    pub fn read_dir(root: &Path) -> Result<(Self, Vec<String>)> {
        if !root.is_dir() {
            return Err(Error::RootMissing(root.to_path_buf()));
        }
        let mut tree = SourceTree::new();
        let mut unreadable = Vec::new();
        let walker = WalkDir::new(root)
            .sort_by_file_name()
            .into_iter()
            .filter_entry(|e| e.depth() == 0 || !is_hidden(e.file_name().to_str()));
        for entry in walker {
            let entry = match entry {
                Ok(entry) => entry,
                Err(err) => {
                    if let Some(path) = err.path().and_then(|p| rel_path(root, p)) {
                        unreadable.push(path);
                    }
                    continue;
                }
            };
            if !entry.file_type().is_file() {
                continue;
            }
            let Some(rel) = rel_path(root, entry.path()) else {
                continue;
            };
            match fs::read(entry.path()) {
                Ok(bytes) => {
                    tree.files.insert(rel, Blob::new(bytes));
                }
                Err(_) => unreadable.push(rel),
            }
        }
        Ok((tree, unreadable))
    }

    /// Writes the tree below `root`, creating directories as needed.
    pub fn write_to(&self, root: &Path) -> Result<()> {
        for (rel, bytes) in &self.files {
            let path = root.join(rel);
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
            }
            fs::write(&path, &bytes.bytes).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }

    pub fn insert(&mut self, path: impl Into<String>, bytes: impl Into<Vec<u8>>) {
        self.files.insert(path.into(), Blob::new(bytes.into()));
    }

    pub fn remove(&mut self, path: &str) -> Option<Vec<u8>> {
        self.files.remove(path).map(|b| b.bytes.clone())
    }

    pub fn get(&self, path: &str) -> Option<&[u8]> {
        self.files.get(path).map(|b| b.bytes.as_slice())
    }

    /// Hex SHA-256 of a file, computed once per distinct contents.
    pub fn file_digest(&self, path: &str) -> Option<&str> {
        let blob = self.files.get(path)?;
        Some(blob.digest.get_or_init(|| digest(&blob.bytes)))
    }

    /// The file as text, or `None` when absent or binary.
    pub fn text(&self, path: &str) -> Option<&str> {
        self.get(path).and_then(as_text)
    }

    pub fn contains(&self, path: &str) -> bool {
        self.files.contains_key(path)
    }

    pub fn paths(&self) -> impl Iterator<Item = &str> {
        self.files.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[u8])> {
        self.files
            .iter()
            .map(|(k, v)| (k.as_str(), v.bytes.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.files.len()
    }

    pub fn is_empty(&self) -> bool {
        self.files.is_empty()
    }
}

impl FromIterator<(String, Vec<u8>)> for SourceTree {
    fn from_iter<I: IntoIterator<Item = (String, Vec<u8>)>>(iter: I) -> Self {
        SourceTree {
            files: iter.into_iter().map(|(k, v)| (k, Blob::new(v))).collect(),
        }
    }
}

/// Text view of file bytes. Files with NUL bytes or invalid UTF-8 are binary.
pub fn as_text(bytes: &[u8]) -> Option<&str> {
    if bytes.contains(&0) {
        return None;
    }
    std::str::from_utf8(bytes).ok()
}

pub fn digest(bytes: &[u8]) -> String {
    let hash = Sha256::digest(bytes);
    hash.iter().map(|b| format!("{b:02x}")).collect()
}

/// Number of lines as an editor counts them: a trailing newline does not open a new line.
pub fn line_count(text: &str) -> usize {
    if text.is_empty() {
        0
    } else {
        text.matches('\n').count() + usize::from(!text.ends_with('\n'))
    }
}

/// Splits text into lines, each keeping its `\n` terminator when present.
pub fn split_lines(text: &str) -> Vec<&str> {
    text.split_inclusive('\n').collect()
}

fn is_hidden(name: Option<&str>) -> bool {
    name.is_some_and(|n| n.starts_with('.'))
}

fn rel_path(root: &Path, path: &Path) -> Option<String> {
    let rel = path.strip_prefix(root).ok()?;
    let parts: Vec<&str> = rel
        .components()
        .map(|c| c.as_os_str().to_str())
        .collect::<Option<_>>()?;
    Some(parts.join("/"))
}
