//! Line-delimited snapshot cache format.
//!
//! One JSON object per line, discriminated by `"record"`:
//! a `snapshot` header, then `file`, `symbol`, `import` and `call` records in
//! snapshot order. Import targets are stored as computed at index time.

use serde::{Deserialize, Serialize};

use super::{CallRecord, ImportBinding, RepoSnapshot, SourceFile, SymbolDef};
use crate::error::{Error, Result};

pub const SNAPSHOT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
enum SnapshotRecord {
    Snapshot {
        format: u32,
        repo_id: String,
        commit_id: String,
    },
    File(SourceFile),
    Symbol(SymbolDef),
    Import(ImportBinding),
    Call(CallRecord),
}

impl RepoSnapshot {
    pub fn to_records(&self) -> String {
        let mut out = String::new();
        let mut push = |rec: SnapshotRecord| {
            out.push_str(&serde_json::to_string(&rec).expect("snapshot records serialize"));
            out.push('\n');
        };
        push(SnapshotRecord::Snapshot {
            format: SNAPSHOT_FORMAT_VERSION,
            repo_id: self.repo_id.clone(),
            commit_id: self.commit_id.clone(),
        });
        self.files
            .iter()
            .cloned()
            .map(SnapshotRecord::File)
            .for_each(&mut push);
        self.symbols
            .iter()
            .cloned()
            .map(SnapshotRecord::Symbol)
            .for_each(&mut push);
        self.imports
            .iter()
            .cloned()
            .map(SnapshotRecord::Import)
            .for_each(&mut push);
        self.calls
            .iter()
            .cloned()
            .map(SnapshotRecord::Call)
            .for_each(&mut push);
        out
    }

    pub fn from_records(text: &str) -> Result<Self> {
        let mut header = None;
        let mut files = Vec::new();
        let mut symbols = Vec::new();
        let mut imports = Vec::new();
        let mut calls = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let rec: SnapshotRecord = serde_json::from_str(line)
                .map_err(|e| Error::Record(format!("line {}: {e}", i + 1)))?;
            match rec {
                SnapshotRecord::Snapshot {
                    format,
                    repo_id,
                    commit_id,
                } => {
                    if format != SNAPSHOT_FORMAT_VERSION {
                        return Err(Error::Record(format!(
                            "unsupported snapshot format {format}"
                        )));
                    }
                    header = Some((repo_id, commit_id));
                }
                SnapshotRecord::File(f) => files.push(f),
                SnapshotRecord::Symbol(s) => symbols.push(s),
                SnapshotRecord::Import(b) => imports.push(b),
                SnapshotRecord::Call(c) => calls.push(c),
            }
        }
        let (repo_id, commit_id) =
            header.ok_or_else(|| Error::Record("missing snapshot header".into()))?;
        let stored: Vec<_> = imports
            .iter()
            .map(|b: &ImportBinding| b.target.clone())
            .collect();
        let mut snapshot =
            RepoSnapshot::assemble(repo_id, commit_id, files, symbols, imports, calls);
        // Keep the cached targets verbatim rather than the recomputed ones.
        for (binding, target) in snapshot.imports.iter_mut().zip(stored) {
            binding.target = target;
        }
        Ok(snapshot)
    }
}
