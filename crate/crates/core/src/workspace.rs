//! Per-instance sandbox directories and edit capture.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::taskgen::{apply_transform, TaskInstance};
use crate::tree::{as_text, digest, SourceTree};
use crate::unidiff::{self, diff_trees, DEFAULT_CONTEXT};

/// Pre-fetched commit trees laid out as `<root>/<repo_id>/<commit_id>/`.
#[derive(Debug, Clone)]
pub struct RepoStore {
    root: PathBuf,
}

impl RepoStore {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn commit_dir(&self, repo_id: &str, commit_id: &str) -> PathBuf {
        self.root.join(repo_id).join(commit_id)
    }

    pub fn load(&self, repo_id: &str, commit_id: &str) -> Result<SourceTree> {
        let dir = self.commit_dir(repo_id, commit_id);
        if !dir.is_dir() {
            return Err(Error::Store(format!("no tree for {repo_id}@{commit_id}")));
        }
        Ok(SourceTree::read_dir(&dir)?.0)
    }

    /// Stores `tree` as `(repo_id, commit_id)`, replacing any previous tree.
    pub fn put(&self, repo_id: &str, commit_id: &str, tree: &SourceTree) -> Result<()> {
        let dir = self.commit_dir(repo_id, commit_id);
        if dir.exists() {
            fs::remove_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        }
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        tree.write_to(&dir)
    }

    /// Every `(repo_id, commit_id)` in the store, sorted.
    pub fn entries(&self) -> Result<Vec<(String, String)>> {
        if !self.root.is_dir() {
            return Err(Error::Store(format!(
                "{} is not a directory",
                self.root.display()
            )));
        }
        let mut out = Vec::new();
        for repo in sorted_subdirs(&self.root)? {
            for commit in sorted_subdirs(&self.root.join(&repo))? {
                out.push((repo.clone(), commit));
            }
        }
        Ok(out)
    }
}

fn sorted_subdirs(dir: &Path) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if !name.starts_with('.') && entry.path().is_dir() {
            out.push(name);
        }
    }
    out.sort();
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WorkspaceState {
    Fresh,
    Edited,
    Finalized,
}

#[derive(Debug)]
pub struct Workspace {
    pub instance_id: String,
    pub root_dir: PathBuf,
    /// Text files only, path to sha256.
    pub baseline_manifest: BTreeMap<String, String>,
    /// Binary files, tracked apart so edits to them can be flagged.
    pub binary_manifest: BTreeMap<String, String>,
    pub state: WorkspaceState,
    baseline: SourceTree,
}

/// Creates a fresh directory under `parent`, named after the instance.
fn fresh_dir(parent: &Path, name: &str) -> Result<PathBuf> {
    fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    for n in 0.. {
        let dir = if n == 0 {
            parent.join(name)
        } else {
            parent.join(format!("{name}.{n}"))
        };
        match fs::create_dir(&dir) {
            Ok(()) => return Ok(dir),
            Err(e) if e.kind() == io::ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(Error::io(&dir, e)),
        }
    }
    unreachable!()
}

/// Copies the instance's commit tree into a new directory below `parent` and
/// applies its transform.
pub fn materialize(instance: &TaskInstance, store: &RepoStore, parent: &Path) -> Result<Workspace> {
    let original = store.load(&instance.repo_id, &instance.commit_id)?;
    let (baseline, _) = apply_transform(&original, &instance.transform)?;
    let root_dir = fresh_dir(parent, &instance.instance_id)?;
    Workspace::create(instance.instance_id.clone(), root_dir, baseline)
}

impl Workspace {
    /// Writes `baseline` into the empty directory `root_dir`.
    pub fn create(instance_id: String, root_dir: PathBuf, baseline: SourceTree) -> Result<Self> {
        baseline.write_to(&root_dir)?;
        let mut baseline_manifest = BTreeMap::new();
        let mut binary_manifest = BTreeMap::new();
        for (path, bytes) in baseline.iter() {
            let manifest = if as_text(bytes).is_some() {
                &mut baseline_manifest
            } else {
                &mut binary_manifest
            };
            let sum = baseline
                .file_digest(path)
                .expect("path comes from the tree");
            manifest.insert(path.to_string(), sum.to_string());
        }
        Ok(Self {
            instance_id,
            root_dir,
            baseline_manifest,
            binary_manifest,
            state: WorkspaceState::Fresh,
            baseline,
        })
    }

    pub fn baseline(&self) -> &SourceTree {
        &self.baseline
    }

    pub fn current_tree(&self) -> Result<SourceTree> {
        Ok(SourceTree::read_dir(&self.root_dir)?.0)
    }

    /// Binary files added, removed or changed since the baseline.
    pub fn edited_binaries(&self) -> Result<BTreeSet<String>> {
        let current = self.current_tree()?;
        let mut out = BTreeSet::new();
        for (path, bytes) in current.iter() {
            let known = self.binary_manifest.get(path);
            if as_text(bytes).is_none() && known != Some(&digest(bytes)) {
                out.insert(path.to_string());
            }
        }
        for path in self.binary_manifest.keys() {
            if !current.contains(path) {
                out.insert(path.clone());
            }
        }
        Ok(out)
    }

    /// Unified diff of the text files against the baseline; `""` when unchanged.
    pub fn capture_patch(&mut self) -> Result<String> {
        if self.state == WorkspaceState::Finalized {
            return Err(Error::State(format!("{} is finalized", self.instance_id)));
        }
        let patch = diff_trees(&self.baseline, &self.current_tree()?, DEFAULT_CONTEXT);
        self.state = if patch.is_empty() {
            WorkspaceState::Fresh
        } else {
            WorkspaceState::Edited
        };
        Ok(patch)
    }

    /// Captures the final patch and closes the workspace to further capture.
    pub fn finalize(&mut self) -> Result<String> {
        let patch = self.capture_patch()?;
        self.state = WorkspaceState::Finalized;
        Ok(patch)
    }

    /// Makes the directory hold exactly the baseline plus `patch`, touching
    /// only files that differ from it.
    pub fn apply_patch(&mut self, patch: &str) -> Result<()> {
        if self.state == WorkspaceState::Finalized {
            return Err(Error::State(format!("{} is finalized", self.instance_id)));
        }
        let edited = unidiff::apply(&self.baseline, &unidiff::parse(patch)?)?;
        fs::create_dir_all(&self.root_dir).map_err(|e| Error::io(&self.root_dir, e))?;
        let current = self.current_tree()?;
        for (rel, _) in current.iter().filter(|(rel, _)| !edited.contains(rel)) {
            let path = self.root_dir.join(rel);
            fs::remove_file(&path).map_err(|e| Error::io(&path, e))?;
        }
        let mut changed = SourceTree::new();
        for (rel, bytes) in edited
            .iter()
            .filter(|(rel, bytes)| current.get(rel) != Some(*bytes))
        {
            changed.insert(rel, bytes);
        }
        changed.write_to(&self.root_dir)?;
        self.state = if edited == self.baseline {
            WorkspaceState::Fresh
        } else {
            WorkspaceState::Edited
        };
        Ok(())
    }

    /// One file of the directory as it is now, `None` when absent.
    pub fn read_file(&self, rel: &str) -> Result<Option<Vec<u8>>> {
        let path = self.root_dir.join(rel);
        match fs::read(&path) {
            Ok(bytes) => Ok(Some(bytes)),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(Error::io(&path, e)),
        }
    }

    /// Restores the baseline tree, discarding every edit.
    pub fn reset(&mut self) -> Result<()> {
        if self.root_dir.exists() {
            fs::remove_dir_all(&self.root_dir).map_err(|e| Error::io(&self.root_dir, e))?;
        }
        fs::create_dir_all(&self.root_dir).map_err(|e| Error::io(&self.root_dir, e))?;
        self.baseline.write_to(&self.root_dir)?;
        self.state = WorkspaceState::Fresh;
        Ok(())
    }

    /// Deletes the workspace directory.
    pub fn remove(self) -> Result<()> {
        fs::remove_dir_all(&self.root_dir).map_err(|e| Error::io(&self.root_dir, e))
    }
}
