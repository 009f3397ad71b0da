//! Source mutations that turn a repository tree into a task environment.
//!
//! Every transform is a single byte-range replacement in one file, recorded as a
//! [`TextEdit`] so the original bytes can be restored exactly.

use serde::{Deserialize, Serialize};

use super::prompt::MASK_LINE;
use crate::error::{Error, Result};
use crate::source::python::{self, line_end_byte, line_start_byte, ParsedSymbol};
use crate::source::split_locator;
use crate::tree::SourceTree;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum WorkspaceTransform {
    None,
    RemoveDocstring { target: String },
    MaskBody { target: String },
}

impl WorkspaceTransform {
    pub fn target(&self) -> Option<&str> {
        match self {
            WorkspaceTransform::None => None,
            WorkspaceTransform::RemoveDocstring { target }
            | WorkspaceTransform::MaskBody { target } => Some(target),
        }
    }
}

/// `removed` at `offset` in the original was replaced by `inserted`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextEdit {
    pub path: String,
    pub offset: usize,
    pub removed: String,
    pub inserted: String,
}

impl TextEdit {
    pub fn apply_to(&self, text: &str) -> Result<String> {
        splice(text, self.offset, &self.removed, &self.inserted, &self.path)
    }

    pub fn revert(&self, text: &str) -> Result<String> {
        splice(text, self.offset, &self.inserted, &self.removed, &self.path)
    }
}

fn splice(text: &str, offset: usize, expect: &str, with: &str, path: &str) -> Result<String> {
    let end = offset + expect.len();
    if text.get(offset..end) != Some(expect) {
        return Err(Error::Integrity(format!(
            "{path}: expected text not found at byte {offset}"
        )));
    }
    Ok(format!("{}{with}{}", &text[..offset], &text[end..]))
}

/// The target's file text and its parsed definition.
pub(crate) fn locate<'t>(tree: &'t SourceTree, target: &str) -> Result<(&'t str, ParsedSymbol)> {
    let (path, qualified) = split_locator(target)
        .ok_or_else(|| Error::Integrity(format!("malformed locator {target:?}")))?;
    let text = tree
        .text(path)
        .ok_or_else(|| Error::Integrity(format!("{path} is missing from the tree")))?;
    let symbol = find_symbol(text, qualified)
        .ok_or_else(|| Error::Integrity(format!("{target} is not defined in {path}")))?;
    Ok((text, symbol))
}

pub(crate) fn find_symbol(text: &str, qualified: &str) -> Option<ParsedSymbol> {
    python::parsed_file(text)
        .symbols
        .iter()
        .find(|s| s.qualified_name == qualified)
        .cloned()
}

fn is_blank(s: &[u8]) -> bool {
    s.iter().all(u8::is_ascii_whitespace)
}

/// True when the rest of a line is whitespace or a trailing comment.
fn rest_is_trivia(s: &[u8]) -> bool {
    let trimmed = s.trim_ascii_start();
    trimmed.is_empty() || trimmed[0] == b'#'
}

/// Edit removing the docstring lines of `symbol`, or `None` when it has no docstring.
pub(crate) fn remove_docstring_edit(
    path: &str,
    text: &str,
    symbol: &ParsedSymbol,
) -> Result<Option<TextEdit>> {
    let Some(doc) = symbol.docstring_bytes.clone() else {
        return Ok(None);
    };
    let src = text.as_bytes();
    if symbol.inline_body() {
        return Err(Error::Rejected(format!(
            "{}: docstring shares the definition line",
            symbol.qualified_name
        )));
    }
    let start = line_start_byte(src, doc.start);
    let end = line_end_byte(src, doc.end);
    if !is_blank(&src[start..doc.start]) || !rest_is_trivia(&src[doc.end..end]) {
        return Err(Error::Rejected(format!(
            "{}: docstring shares a line with other statements",
            symbol.qualified_name
        )));
    }
    let only_statement = symbol.body_bytes.end <= doc.end;
    let inserted = if only_statement {
        let indent = &text[start..doc.start];
        format!("{indent}pass\n")
    } else {
        String::new()
    };
    Ok(Some(TextEdit {
        path: path.to_string(),
        offset: start,
        removed: text[start..end].to_string(),
        inserted,
    }))
}

/// Byte range of the body after the docstring, through the end of the last statement's line.
pub(crate) fn body_after_docstring(text: &str, symbol: &ParsedSymbol) -> Option<(usize, usize)> {
    let src = text.as_bytes();
    let start = match &symbol.docstring_bytes {
        Some(doc) => {
            let end = line_end_byte(src, doc.end);
            if !rest_is_trivia(&src[doc.end..end]) {
                return None;
            }
            end
        }
        None => line_start_byte(src, symbol.body_bytes.start),
    };
    let end = if symbol.body_bytes.end > start {
        line_end_byte(src, symbol.body_bytes.end)
    } else {
        start
    };
    Some((start, end))
}

/// Edit replacing everything after the docstring with the mask line.
pub(crate) fn mask_body_edit(path: &str, text: &str, symbol: &ParsedSymbol) -> Result<TextEdit> {
    let reject = |why: &str| Error::Rejected(format!("{}: {why}", symbol.qualified_name));
    let Some(doc) = symbol.docstring_bytes.clone() else {
        return Err(reject("no docstring"));
    };
    if symbol.inline_body() {
        return Err(reject("body shares the definition line"));
    }
    let src = text.as_bytes();
    let indent_start = line_start_byte(src, doc.start);
    if !is_blank(&src[indent_start..doc.start]) {
        return Err(reject("docstring shares a line with other statements"));
    }
    let (start, end) = body_after_docstring(text, symbol)
        .ok_or_else(|| reject("statement after the docstring on its line"))?;
    let indent = &text[indent_start..doc.start];
    Ok(TextEdit {
        path: path.to_string(),
        offset: start,
        removed: text[start..end].to_string(),
        inserted: format!("{indent}{MASK_LINE}\n"),
    })
}

/// Applies `transform` to `tree`, returning the new tree and the edit made.
pub fn apply_transform(
    tree: &SourceTree,
    transform: &WorkspaceTransform,
) -> Result<(SourceTree, Option<TextEdit>)> {
    let edit = transform_edit(tree, transform, &find_symbol)?;
    let mut out = tree.clone();
    if let Some(edit) = &edit {
        let text = tree.text(&edit.path).unwrap_or_default();
        out.insert(edit.path.clone(), edit.apply_to(text)?);
    }
    Ok((out, edit))
}

/// The edit `transform` would make, resolving the target through `find`.
pub(crate) fn transform_edit(
    tree: &SourceTree,
    transform: &WorkspaceTransform,
    find: &dyn Fn(&str, &str) -> Option<ParsedSymbol>,
) -> Result<Option<TextEdit>> {
    let Some(target) = transform.target() else {
        return Ok(None);
    };
    let (path, qualified) = split_locator(target)
        .ok_or_else(|| Error::Integrity(format!("malformed locator {target:?}")))?;
    let text = tree
        .text(path)
        .ok_or_else(|| Error::Integrity(format!("{path} is missing from the tree")))?;
    let symbol = find(text, qualified)
        .ok_or_else(|| Error::Integrity(format!("{target} is not defined in {path}")))?;
    match transform {
        WorkspaceTransform::None => Ok(None),
        WorkspaceTransform::RemoveDocstring { .. } => remove_docstring_edit(path, text, &symbol),
        WorkspaceTransform::MaskBody { .. } => mask_body_edit(path, text, &symbol).map(Some),
    }
}
