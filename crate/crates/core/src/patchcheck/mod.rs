//! Patch parsing, per-line classification and task verifiers.

pub mod exec;
mod verify;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::source::python::{self, classify_lines, has_syntax_error, LexClass};
use crate::tree::{split_lines, SourceTree};
use crate::unidiff::{self, FilePatch, LineOp};

pub use exec::{ExecAdapter, ExecOutcome, ShellAdapter, PROBE_FILE};
pub use verify::{
    verify, verify_dep_search, verify_func_gen, verify_func_localize, verify_issue_localize,
    Coverage, Reason, VerificationResult, VerifyOptions,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LineClass {
    Comment,
    Docstring,
    Code,
    Blank,
}

impl From<LexClass> for LineClass {
    fn from(c: LexClass) -> Self {
        match c {
            LexClass::Blank => LineClass::Blank,
            LexClass::Comment => LineClass::Comment,
            LexClass::Docstring => LineClass::Docstring,
            LexClass::Code => LineClass::Code,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HunkReport {
    /// `(start, len)` as in the `@@` header.
    pub old_span: (usize, usize),
    pub new_span: (usize, usize),
    /// New-file line numbers of `+` lines.
    pub added_lines: Vec<usize>,
    /// Old-file line numbers of `-` lines.
    pub removed_lines: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FileReport {
    pub path: String,
    pub old_path: Option<String>,
    pub new_path: Option<String>,
    pub hunks: Vec<HunkReport>,
}

/// One `+` or `-` line of a patch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChangedLine {
    pub path: String,
    /// New-file line for added lines, old-file line for removed ones.
    pub line: usize,
    /// Old-file line the change sits immediately before (an insertion point).
    pub old_position: usize,
    pub text: String,
    /// `None` until the report is classified against a baseline.
    pub class: Option<LineClass>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PatchReport {
    pub files: Vec<FileReport>,
    pub added: Vec<ChangedLine>,
    pub removed: Vec<ChangedLine>,
    pub patches: Vec<FilePatch>,
}

impl PatchReport {
    pub fn is_empty(&self) -> bool {
        self.added.is_empty() && self.removed.is_empty()
    }

    /// Class of each added line keyed by `(path, new_line)`.
    pub fn line_classes(&self) -> BTreeMap<(String, usize), LineClass> {
        self.added
            .iter()
            .filter_map(|l| l.class.map(|c| ((l.path.clone(), l.line), c)))
            .collect()
    }

    pub fn changed_lines(&self) -> impl Iterator<Item = &ChangedLine> {
        self.added.iter().chain(&self.removed)
    }

    pub fn touched_files(&self) -> BTreeSet<String> {
        self.files.iter().map(|f| f.path.clone()).collect()
    }

    /// Paths where the patch adds comment lines.
    pub fn commented_files(&self) -> BTreeSet<String> {
        self.added
            .iter()
            .filter(|l| l.class == Some(LineClass::Comment))
            .map(|l| l.path.clone())
            .collect()
    }

    /// Labels every changed line: added lines against the edited files,
    /// removed lines against `baseline`.
    pub fn classify(&mut self, baseline: &SourceTree) -> Result<()> {
        let edited = unidiff::apply(baseline, &self.patches)?;
        let mut cache: BTreeMap<(bool, String), Vec<LineClass>> = BTreeMap::new();
        for (is_new, lines) in [(true, &mut self.added), (false, &mut self.removed)] {
            let tree = if is_new { &edited } else { baseline };
            for line in lines.iter_mut() {
                let classes = cache.entry((is_new, line.path.clone())).or_insert_with(|| {
                    let old = baseline.text(&line.path);
                    if let (true, true, Some(old), Some(new)) =
                        (is_new, is_python(&line.path), old, tree.text(&line.path))
                    {
                        python::parse_edited(new, old);
                    }
                    file_classes(&line.path, tree.text(&line.path).unwrap_or_default(), old)
                });
                line.class = Some(
                    classes
                        .get(line.line - 1)
                        .copied()
                        .unwrap_or(LineClass::Code),
                );
            }
        }
        Ok(())
    }
}

fn is_python(path: &str) -> bool {
    path.ends_with(".py")
}

fn plain_classes(text: &str) -> Vec<LineClass> {
    split_lines(text)
        .iter()
        .map(|l| {
            if l.trim().is_empty() {
                LineClass::Blank
            } else {
                LineClass::Code
            }
        })
        .collect()
}

/// Line classes of `text`. A Python file that fails to parse where its
/// baseline parsed cleanly is all code, except blank lines.
fn file_classes(path: &str, text: &str, baseline: Option<&str>) -> Vec<LineClass> {
    if !is_python(path) {
        return plain_classes(text);
    }
    let newly_broken = has_syntax_error(text) && !baseline.is_some_and(has_syntax_error);
    if newly_broken {
        return plain_classes(text);
    }
    classify_lines(text)
        .map(|c| c.into_iter().map(LineClass::from).collect())
        .unwrap_or_else(|| plain_classes(text))
}

/// Parses unified diff text into a report with unclassified lines.
pub fn parse_patch(text: &str) -> Result<PatchReport> {
    let patches = unidiff::parse(text)?;
    let mut report = PatchReport::default();
    for patch in &patches {
        let path = patch.path().to_string();
        let mut hunks = Vec::new();
        for hunk in &patch.hunks {
            let mut old = if hunk.old_len == 0 {
                hunk.old_start + 1
            } else {
                hunk.old_start
            };
            let mut new = if hunk.new_len == 0 {
                hunk.new_start + 1
            } else {
                hunk.new_start
            };
            let mut summary = HunkReport {
                old_span: (hunk.old_start, hunk.old_len),
                new_span: (hunk.new_start, hunk.new_len),
                added_lines: Vec::new(),
                removed_lines: Vec::new(),
            };
            for l in &hunk.lines {
                match l.op {
                    LineOp::Context => {
                        old += 1;
                        new += 1;
                    }
                    LineOp::Added => {
                        summary.added_lines.push(new);
                        report.added.push(ChangedLine {
                            path: path.clone(),
                            line: new,
                            old_position: old,
                            text: l.text.clone(),
                            class: None,
                        });
                        new += 1;
                    }
                    LineOp::Removed => {
                        summary.removed_lines.push(old);
                        report.removed.push(ChangedLine {
                            path: path.clone(),
                            line: old,
                            old_position: old,
                            text: l.text.clone(),
                            class: None,
                        });
                        old += 1;
                    }
                }
            }
            hunks.push(summary);
        }
        report.files.push(FileReport {
            path,
            old_path: patch.old_path.clone(),
            new_path: patch.new_path.clone(),
            hunks,
        });
    }
    report.patches = patches;
    Ok(report)
}

/// Parses and classifies `text` against the workspace baseline.
pub fn classify_patch(text: &str, baseline: &SourceTree) -> Result<PatchReport> {
    let mut report = parse_patch(text)?;
    report.classify(baseline)?;
    Ok(report)
}
