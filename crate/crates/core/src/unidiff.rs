//! Unified diff: emission, parsing and application.
//!
//! Emission follows the GNU/git layout: `--- a/path`, `+++ b/path`,
//! `@@ -start,len +start,len @@` with the `,1` length omitted, an empty range
//! numbered by the line before it, `/dev/null` for created or deleted files and
//! `\ No newline at end of file` markers.

use similar::{capture_diff_slices, group_diff_ops, Algorithm, DiffOp};

use crate::error::{Error, Result};
use crate::tree::{as_text, split_lines, SourceTree};

pub const DEFAULT_CONTEXT: usize = 3;
const NO_NEWLINE: &str = "\\ No newline at end of file";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineOp {
    Context,
    Added,
    Removed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HunkLine {
    pub op: LineOp,
    pub text: String,
    /// Followed by a `\ No newline at end of file` marker.
    pub no_newline: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hunk {
    pub old_start: usize,
    pub old_len: usize,
    pub new_start: usize,
    pub new_len: usize,
    pub lines: Vec<HunkLine>,
}

impl Hunk {
    /// Pairs each added line with its 1-based line number in the new file.
    pub fn added_lines(&self) -> impl Iterator<Item = (usize, &HunkLine)> {
        self.numbered()
            .filter_map(|(_, new, l)| (l.op == LineOp::Added).then_some((new, l)))
    }

    /// Pairs each removed line with its 1-based line number in the old file.
    pub fn removed_lines(&self) -> impl Iterator<Item = (usize, &HunkLine)> {
        self.numbered()
            .filter_map(|(old, _, l)| (l.op == LineOp::Removed).then_some((old, l)))
    }

    fn numbered(&self) -> impl Iterator<Item = (usize, usize, &HunkLine)> {
        // Empty ranges are numbered by the preceding line.
        let mut old = if self.old_len == 0 {
            self.old_start + 1
        } else {
            self.old_start
        };
        let mut new = if self.new_len == 0 {
            self.new_start + 1
        } else {
            self.new_start
        };
        self.lines.iter().map(move |l| {
            let at = (old, new, l);
            match l.op {
                LineOp::Context => {
                    old += 1;
                    new += 1;
                }
                LineOp::Added => new += 1,
                LineOp::Removed => old += 1,
            }
            at
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FilePatch {
    /// `None` for `/dev/null` (file created).
    pub old_path: Option<String>,
    /// `None` for `/dev/null` (file deleted).
    pub new_path: Option<String>,
    pub hunks: Vec<Hunk>,
}

impl FilePatch {
    pub fn path(&self) -> &str {
        self.new_path
            .as_deref()
            .or(self.old_path.as_deref())
            .unwrap_or_default()
    }

    pub fn is_creation(&self) -> bool {
        self.old_path.is_none()
    }

    pub fn is_deletion(&self) -> bool {
        self.new_path.is_none()
    }
}

/// Unified diff of one file. `None` content means the file does not exist on that side.
pub fn diff_file(path: &str, old: Option<&str>, new: Option<&str>, context: usize) -> String {
    if old == new {
        return String::new();
    }
    let old_lines = old.map(split_lines).unwrap_or_default();
    let new_lines = new.map(split_lines).unwrap_or_default();
    let mut out = String::new();
    out.push_str(&match old {
        Some(_) => format!("--- a/{path}\n"),
        None => "--- /dev/null\n".to_string(),
    });
    out.push_str(&match new {
        Some(_) => format!("+++ b/{path}\n"),
        None => "+++ /dev/null\n".to_string(),
    });
    let ops = capture_diff_slices(Algorithm::Myers, &old_lines, &new_lines);
    for group in group_diff_ops(ops, context) {
        let (Some(first), Some(last)) = (group.first(), group.last()) else {
            continue;
        };
        let old_start = first.old_range().start;
        let new_start = first.new_range().start;
        let old_len = last.old_range().end - old_start;
        let new_len = last.new_range().end - new_start;
        out.push_str(&format!(
            "@@ -{} +{} @@\n",
            range(old_start, old_len),
            range(new_start, new_len)
        ));
        for op in &group {
            let mut emit = |prefix: char, line: &str| {
                out.push(prefix);
                match line.strip_suffix('\n') {
                    Some(body) => {
                        out.push_str(body);
                        out.push('\n');
                    }
                    None => {
                        out.push_str(line);
                        out.push('\n');
                        out.push_str(NO_NEWLINE);
                        out.push('\n');
                    }
                }
            };
            match *op {
                DiffOp::Equal { old_index, len, .. } => {
                    old_lines[old_index..old_index + len]
                        .iter()
                        .for_each(|l| emit(' ', l));
                }
                DiffOp::Delete {
                    old_index, old_len, ..
                } => {
                    old_lines[old_index..old_index + old_len]
                        .iter()
                        .for_each(|l| emit('-', l));
                }
                DiffOp::Insert {
                    new_index, new_len, ..
                } => {
                    new_lines[new_index..new_index + new_len]
                        .iter()
                        .for_each(|l| emit('+', l));
                }
                DiffOp::Replace {
                    old_index,
                    old_len,
                    new_index,
                    new_len,
                } => {
                    old_lines[old_index..old_index + old_len]
                        .iter()
                        .for_each(|l| emit('-', l));
                    new_lines[new_index..new_index + new_len]
                        .iter()
                        .for_each(|l| emit('+', l));
                }
            }
        }
    }
    out
}

fn range(start0: usize, len: usize) -> String {
    match len {
        0 => format!("{start0},0"),
        1 => format!("{}", start0 + 1),
        _ => format!("{},{len}", start0 + 1),
    }
}

/// Diff of every text file between two trees, ordered by path. Binary files are skipped.
pub fn diff_trees(old: &SourceTree, new: &SourceTree, context: usize) -> String {
    let mut paths: Vec<&str> = old.paths().chain(new.paths()).collect();
    paths.sort_unstable();
    paths.dedup();
    let mut out = String::new();
    for path in paths {
        let (a, b) = (old.get(path), new.get(path));
        if a == b {
            continue;
        }
        let a_text = a.map(as_text);
        let b_text = b.map(as_text);
        if matches!(a_text, Some(None)) || matches!(b_text, Some(None)) {
            continue;
        }
        out.push_str(&diff_file(
            path,
            a_text.flatten(),
            b_text.flatten(),
            context,
        ));
    }
    out
}

fn format_error(line: usize, message: impl Into<String>) -> Error {
    Error::PatchFormat {
        line,
        message: message.into(),
    }
}

fn parse_path(raw: &str) -> Option<String> {
    let raw = raw.split('\t').next().unwrap_or(raw).trim_end();
    if raw == "/dev/null" {
        return None;
    }
    let stripped = raw
        .strip_prefix("a/")
        .or_else(|| raw.strip_prefix("b/"))
        .unwrap_or(raw);
    Some(stripped.to_string())
}

fn parse_range(s: &str, line: usize) -> Result<(usize, usize)> {
    let (start, len) = match s.split_once(',') {
        Some((a, b)) => (a, Some(b)),
        None => (s, None),
    };
    let start = start
        .parse()
        .map_err(|_| format_error(line, format!("bad hunk range {s:?}")))?;
    let len = match len {
        Some(l) => l
            .parse()
            .map_err(|_| format_error(line, format!("bad hunk range {s:?}")))?,
        None => 1,
    };
    Ok((start, len))
}

fn parse_hunk_header(text: &str, line: usize) -> Result<(usize, usize, usize, usize)> {
    let rest = text
        .strip_prefix("@@ -")
        .ok_or_else(|| format_error(line, "bad hunk header"))?;
    let (ranges, _) = rest
        .split_once(" @@")
        .ok_or_else(|| format_error(line, "unterminated hunk header"))?;
    let (old, new) = ranges
        .split_once(" +")
        .ok_or_else(|| format_error(line, "bad hunk header"))?;
    let (os, ol) = parse_range(old, line)?;
    let (ns, nl) = parse_range(new, line)?;
    Ok((os, ol, ns, nl))
}

/// Parses unified diff text. The empty string is an empty patch.
pub fn parse(text: &str) -> Result<Vec<FilePatch>> {
    let lines: Vec<&str> = text
        .split_inclusive('\n')
        .map(|l| l.strip_suffix('\n').unwrap_or(l))
        .collect();
    let mut files: Vec<FilePatch> = Vec::new();
    let mut i = 0;
    while i < lines.len() {
        let line = lines[i];
        let lineno = i + 1;
        if let Some(old) = line.strip_prefix("--- ") {
            let new = lines
                .get(i + 1)
                .and_then(|l| l.strip_prefix("+++ "))
                .ok_or_else(|| format_error(lineno + 1, "expected '+++' after '---'"))?;
            files.push(FilePatch {
                old_path: parse_path(old),
                new_path: parse_path(new),
                hunks: Vec::new(),
            });
            i += 2;
            continue;
        }
        if line.starts_with("@@") {
            let file = files
                .last_mut()
                .ok_or_else(|| format_error(lineno, "hunk before any file header"))?;
            let (old_start, old_len, new_start, new_len) = parse_hunk_header(line, lineno)?;
            let mut hunk = Hunk {
                old_start,
                old_len,
                new_start,
                new_len,
                lines: Vec::new(),
            };
            let (mut old_left, mut new_left) = (old_len, new_len);
            i += 1;
            while old_left > 0 || new_left > 0 {
                let Some(&body) = lines.get(i) else {
                    return Err(format_error(i + 1, "truncated hunk"));
                };
                let (op, content) = match body.chars().next() {
                    Some(' ') => (LineOp::Context, &body[1..]),
                    None => (LineOp::Context, ""),
                    Some('-') => (LineOp::Removed, &body[1..]),
                    Some('+') => (LineOp::Added, &body[1..]),
                    Some('\\') => {
                        mark_no_newline(&mut hunk, i + 1)?;
                        i += 1;
                        continue;
                    }
                    _ => return Err(format_error(i + 1, "truncated hunk")),
                };
                let (takes_old, takes_new) = match op {
                    LineOp::Context => (true, true),
                    LineOp::Removed => (true, false),
                    LineOp::Added => (false, true),
                };
                if (takes_old && old_left == 0) || (takes_new && new_left == 0) {
                    return Err(format_error(i + 1, "hunk longer than its header"));
                }
                old_left -= usize::from(takes_old);
                new_left -= usize::from(takes_new);
                hunk.lines.push(HunkLine {
                    op,
                    text: content.to_string(),
                    no_newline: false,
                });
                i += 1;
            }
            if lines.get(i).is_some_and(|l| l.starts_with('\\')) {
                mark_no_newline(&mut hunk, i + 1)?;
                i += 1;
            }
            file.hunks.push(hunk);
            continue;
        }
        if line.starts_with('+') || line.starts_with('-') || line.starts_with(' ') {
            return Err(format_error(lineno, "diff line outside of a hunk"));
        }
        // git extended headers (`diff --git`, `index`, mode lines) carry nothing we need.
        i += 1;
    }
    Ok(files)
}

fn mark_no_newline(hunk: &mut Hunk, line: usize) -> Result<()> {
    match hunk.lines.last_mut() {
        Some(last) => {
            last.no_newline = true;
            Ok(())
        }
        None => Err(format_error(
            line,
            "no-newline marker without a preceding line",
        )),
    }
}

fn apply_file(old: Option<&str>, patch: &FilePatch) -> Result<Option<String>> {
    let path = patch.path().to_string();
    let apply_err = |message: String| Error::PatchApply {
        path: path.clone(),
        message,
    };
    let old_lines: Vec<&str> = old.map(split_lines).unwrap_or_default();
    let mut out = String::new();
    let mut cursor = 0usize;
    for hunk in &patch.hunks {
        let start = if hunk.old_len == 0 {
            hunk.old_start
        } else {
            hunk.old_start.saturating_sub(1)
        };
        if start < cursor || start > old_lines.len() {
            return Err(apply_err(format!(
                "hunk at line {} out of order or range",
                hunk.old_start
            )));
        }
        old_lines[cursor..start]
            .iter()
            .for_each(|l| out.push_str(l));
        cursor = start;
        for line in &hunk.lines {
            match line.op {
                LineOp::Context | LineOp::Removed => {
                    let actual = old_lines
                        .get(cursor)
                        .ok_or_else(|| apply_err("hunk runs past end of file".into()))?;
                    let expected_nl = !line.no_newline;
                    let (body, has_nl) = match actual.strip_suffix('\n') {
                        Some(b) => (b, true),
                        None => (*actual, false),
                    };
                    if body != line.text || has_nl != expected_nl {
                        return Err(apply_err(format!(
                            "line {} does not match the patch context",
                            cursor + 1
                        )));
                    }
                    if line.op == LineOp::Context {
                        out.push_str(actual);
                    }
                    cursor += 1;
                }
                LineOp::Added => {
                    out.push_str(&line.text);
                    if !line.no_newline {
                        out.push('\n');
                    }
                }
            }
        }
    }
    old_lines[cursor..].iter().for_each(|l| out.push_str(l));
    if patch.is_deletion() {
        if !out.is_empty() {
            return Err(apply_err("deletion leaves content behind".into()));
        }
        return Ok(None);
    }
    Ok(Some(out))
}

/// Applies parsed file patches to a tree, returning the edited tree.
pub fn apply(tree: &SourceTree, patches: &[FilePatch]) -> Result<SourceTree> {
    let mut out = tree.clone();
    for patch in patches {
        let path = patch.path();
        let old = match &patch.old_path {
            Some(old_path) => {
                let bytes = tree.get(old_path).ok_or_else(|| Error::PatchApply {
                    path: old_path.clone(),
                    message: "file does not exist".into(),
                })?;
                Some(as_text(bytes).ok_or_else(|| Error::PatchApply {
                    path: old_path.clone(),
                    message: "binary file".into(),
                })?)
            }
            None => {
                if tree.contains(path) {
                    return Err(Error::PatchApply {
                        path: path.to_string(),
                        message: "file to create already exists".into(),
                    });
                }
                None
            }
        };
        let result = apply_file(old, patch)?;
        if let Some(old_path) = &patch.old_path {
            out.remove(old_path);
        }
        if let (Some(new_path), Some(text)) = (&patch.new_path, result) {
            out.insert(new_path.clone(), text.into_bytes());
        }
    }
    Ok(out)
}
