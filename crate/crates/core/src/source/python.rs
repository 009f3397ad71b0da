//! Python 3 syntax layer: one tree-sitter pass per file yielding definitions,
//! import statements, call sites and per-line lexical classes.

use std::collections::{HashMap, HashSet};
use std::ops::Range;
use std::sync::{Arc, LazyLock, Mutex};

use tree_sitter::{InputEdit, Node, Parser, Point, Tree};

use super::SymbolKind;

/// Results keyed by file text. Two generations: a lookup hit in the older one
/// is promoted, and a full young generation replaces the old one.
struct Memo<V> {
    young: HashMap<String, V>,
    old: HashMap<String, V>,
}

const MEMO_GENERATION: usize = 256;

impl<V: Clone> Memo<V> {
    fn new() -> Self {
        Self {
            young: HashMap::new(),
            old: HashMap::new(),
        }
    }

    fn get_or(&mut self, text: &str, make: impl FnOnce() -> V) -> V {
        if let Some(v) = self.young.get(text) {
            return v.clone();
        }
        let v = match self.old.remove(text) {
            Some(v) => v,
            None => make(),
        };
        if self.young.len() >= MEMO_GENERATION {
            self.old = std::mem::take(&mut self.young);
        }
        self.young.insert(text.to_string(), v.clone());
        v
    }
}

fn memoized<V: Clone>(memo: &Mutex<Memo<V>>, text: &str, make: impl FnOnce() -> V) -> V {
    let hit = {
        let m = memo.lock().unwrap();
        m.young.get(text).or_else(|| m.old.get(text)).cloned()
    };
    // Parse outside the lock; a racing duplicate parse is harmless.
    let v = hit.unwrap_or_else(make);
    memo.lock().unwrap().get_or(text, || v)
}

type Shared<V> = LazyLock<Mutex<Memo<V>>>;

static TREES: Shared<Option<Tree>> = LazyLock::new(|| Mutex::new(Memo::new()));
static FILES: Shared<Arc<ParsedFile>> = LazyLock::new(|| Mutex::new(Memo::new()));
static CLASSES: Shared<Option<Arc<Vec<LexClass>>>> = LazyLock::new(|| Mutex::new(Memo::new()));

fn fresh_parse(text: &str, old: Option<&Tree>) -> Option<Tree> {
    let mut parser = Parser::new();
    parser
        .set_language(&tree_sitter_python::LANGUAGE.into())
        .ok()?;
    parser.parse(text, old)
}

pub fn parse(text: &str) -> Option<Tree> {
    memoized(&TREES, text, || fresh_parse(text, None))
}

fn point_at(src: &[u8], byte: usize) -> Point {
    let row = src[..byte].iter().filter(|&&b| b == b'\n').count();
    Point::new(row, byte - line_start_byte(src, byte))
}

/// Parses `text` by reusing the tree of `base`, an earlier version of the same
/// file. The tree is memoized like [`parse`].
pub fn parse_edited(text: &str, base: &str) -> Option<Tree> {
    memoized(&TREES, text, || {
        let Some(mut old) = parse(base) else {
            return fresh_parse(text, None);
        };
        let (a, b) = (base.as_bytes(), text.as_bytes());
        let prefix = a.iter().zip(b).take_while(|(x, y)| x == y).count();
        let room = a.len().min(b.len()) - prefix;
        let suffix = a
            .iter()
            .rev()
            .zip(b.iter().rev())
            .take(room)
            .take_while(|(x, y)| x == y)
            .count();
        let (old_end, new_end) = (a.len() - suffix, b.len() - suffix);
        old.edit(&InputEdit {
            start_byte: prefix,
            old_end_byte: old_end,
            new_end_byte: new_end,
            start_position: point_at(a, prefix),
            old_end_position: point_at(a, old_end),
            new_end_position: point_at(b, new_end),
        });
        fresh_parse(text, Some(&old))
    })
}

/// [`parse_file`], shared between callers that see the same text repeatedly.
pub fn parsed_file(text: &str) -> Arc<ParsedFile> {
    memoized(&FILES, text, || Arc::new(parse_file(text)))
}

/// A definition with the byte and line geometry needed for indexing and transforms.
#[derive(Debug, Clone)]
pub struct ParsedSymbol {
    pub kind: SymbolKind,
    pub name: String,
    pub qualified_name: String,
    pub nested: bool,
    /// 1-based line of the `def`/`class` keyword.
    pub decl_line: u32,
    /// Line holding the `:` that closes the header.
    pub header_end_line: u32,
    pub decorator_span: Option<(u32, u32)>,
    pub body_span: (u32, u32),
    pub body_bytes: Range<usize>,
    /// Bytes of the docstring expression statement.
    pub docstring_bytes: Option<Range<usize>>,
    pub docstring_span: Option<(u32, u32)>,
    pub docstring: Option<String>,
    pub signature_text: String,
    pub calls: Vec<RawCall>,
}

impl ParsedSymbol {
    pub fn inline_body(&self) -> bool {
        self.body_span.0 == self.header_end_line
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawCall {
    pub callee: String,
    pub raised: bool,
    pub line: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawImport {
    /// `None` for `import a.b`, the imported name for `from m import n`, `"*"` for star imports.
    pub imported: Option<String>,
    /// Module path as written, without leading dots.
    pub module: String,
    /// Number of leading dots of a relative import.
    pub level: usize,
    pub alias: Option<String>,
    pub line: u32,
}

#[derive(Debug, Clone, Default)]
pub struct ParsedFile {
    pub ok: bool,
    pub symbols: Vec<ParsedSymbol>,
    pub imports: Vec<RawImport>,
}

pub fn parse_file(text: &str) -> ParsedFile {
    let Some(tree) = parse(text) else {
        return ParsedFile::default();
    };
    let root = tree.root_node();
    if root.has_error() {
        return ParsedFile::default();
    }
    let src = text.as_bytes();
    let mut out = ParsedFile {
        ok: true,
        ..Default::default()
    };
    let mut scopes = Vec::new();
    collect(root, src, &mut scopes, &mut out);
    out
}

#[derive(Clone)]
struct Scope {
    qualified: String,
    is_class: bool,
}

fn row(line: usize) -> u32 {
    (line + 1) as u32
}

fn text_of<'a>(node: Node, src: &'a [u8]) -> &'a str {
    node.utf8_text(src).unwrap_or("")
}

fn collect(node: Node, src: &[u8], scopes: &mut Vec<Scope>, out: &mut ParsedFile) {
    let mut cursor = node.walk();
    for child in node.named_children(&mut cursor) {
        match child.kind() {
            "function_definition" | "class_definition" => {
                define(child, None, src, scopes, out);
            }
            "decorated_definition" => {
                if let Some(def) = child.child_by_field_name("definition") {
                    define(def, Some(child), src, scopes, out);
                }
            }
            "import_statement" | "import_from_statement" => {
                read_import(child, src, &mut out.imports);
            }
            _ => collect(child, src, scopes, out),
        }
    }
}

fn define(
    def: Node,
    decorated: Option<Node>,
    src: &[u8],
    scopes: &mut Vec<Scope>,
    out: &mut ParsedFile,
) {
    let Some(name_node) = def.child_by_field_name("name") else {
        return;
    };
    let Some(body) = def.child_by_field_name("body") else {
        return;
    };
    let name = text_of(name_node, src).to_string();
    let is_class = def.kind() == "class_definition";
    let parent = scopes.last();
    let kind = if is_class {
        SymbolKind::Class
    } else if parent.is_some_and(|s| s.is_class) {
        SymbolKind::Method
    } else {
        SymbolKind::Function
    };
    // Inside a function anything defined is nested, however deep.
    let nested = scopes.iter().any(|s| !s.is_class);
    let qualified_name = match parent {
        Some(p) => format!("{}.{}", p.qualified, name),
        None => name.clone(),
    };

    let decl_line = row(def.start_position().row);
    let (colon_row, colon_byte) = {
        let mut c = def.walk();
        let colon = def
            .children(&mut c)
            .filter(|n| n.kind() == ":")
            .take_while(|n| n.start_byte() < body.start_byte())
            .last();
        colon.map_or((def.start_position().row, def.start_byte()), |n| {
            (n.start_position().row, n.start_byte())
        })
    };
    let header_end_line = row(colon_row);

    let statements = statements_of(body);
    let (body_span, body_bytes) = match (statements.first(), statements.last()) {
        (Some(first), Some(last)) => (
            (
                row(first.start_position().row),
                row(last.end_position().row),
            ),
            first.start_byte()..last.end_byte(),
        ),
        _ => (
            (row(body.start_position().row), row(body.end_position().row)),
            body.byte_range(),
        ),
    };

    let mut docstring_bytes = None;
    let mut docstring_span = None;
    let mut docstring = None;
    if let Some(first) = statements.first() {
        if let Some(content) = docstring_content(*first, src) {
            docstring_bytes = Some(first.byte_range());
            docstring_span = Some((
                row(first.start_position().row),
                row(first.end_position().row),
            ));
            docstring = Some(content);
        }
    }

    let decorator_span = decorated.map(|d| (row(d.start_position().row), decl_line - 1));

    let line_start = line_start_byte(src, def.start_byte());
    let header_end = line_end_byte(src, colon_byte);
    let signature_text = String::from_utf8_lossy(&src[line_start..header_end])
        .trim_end_matches(['\n', '\r'])
        .to_string();

    let mut calls = Vec::new();
    if !is_class {
        for stmt in &statements {
            gather_calls(*stmt, src, &mut calls);
        }
        calls.sort_by_key(|c: &(usize, RawCall)| c.0);
    }

    out.symbols.push(ParsedSymbol {
        kind,
        name,
        qualified_name: qualified_name.clone(),
        nested,
        decl_line,
        header_end_line,
        decorator_span,
        body_span,
        body_bytes,
        docstring_bytes,
        docstring_span,
        docstring,
        signature_text,
        calls: calls.into_iter().map(|(_, c)| c).collect(),
    });

    scopes.push(Scope {
        qualified: qualified_name,
        is_class,
    });
    collect(body, src, scopes, out);
    scopes.pop();
}

/// Named children of a block minus comments.
fn statements_of(block: Node) -> Vec<Node> {
    let mut cursor = block.walk();
    block
        .named_children(&mut cursor)
        .filter(|n| n.kind() != "comment")
        .collect()
}

/// Content of a statement that consists of a single plain string literal.
fn docstring_content(stmt: Node, src: &[u8]) -> Option<String> {
    if stmt.kind() != "expression_statement" || stmt.named_child_count() != 1 {
        return None;
    }
    let expr = stmt.named_child(0)?;
    match expr.kind() {
        "string" => plain_string_content(expr, src),
        "concatenated_string" => {
            let mut cursor = expr.walk();
            let parts: Option<Vec<String>> = expr
                .named_children(&mut cursor)
                .map(|s| plain_string_content(s, src))
                .collect();
            parts.map(|p| p.concat())
        }
        _ => None,
    }
}

fn plain_string_content(string: Node, src: &[u8]) -> Option<String> {
    if string.kind() != "string" {
        return None;
    }
    let mut cursor = string.walk();
    let children: Vec<Node> = string.children(&mut cursor).collect();
    let start = children.iter().find(|n| n.kind() == "string_start")?;
    let end = children.iter().rev().find(|n| n.kind() == "string_end")?;
    let prefix = text_of(*start, src).to_ascii_lowercase();
    if prefix.contains('f') || prefix.contains('b') {
        return None;
    }
    let bytes = &src[start.end_byte()..end.start_byte()];
    Some(String::from_utf8_lossy(bytes).into_owned())
}

fn dotted_name(node: Node, src: &[u8]) -> Option<String> {
    match node.kind() {
        "identifier" => Some(text_of(node, src).to_string()),
        "attribute" => {
            let object = dotted_name(node.child_by_field_name("object")?, src)?;
            let attr = node.child_by_field_name("attribute")?;
            Some(format!("{object}.{}", text_of(attr, src)))
        }
        _ => None,
    }
}

fn callee_text(func: Node, src: &[u8]) -> String {
    dotted_name(func, src).unwrap_or_else(|| {
        text_of(func, src)
            .split_whitespace()
            .collect::<Vec<_>>()
            .join("")
    })
}

fn gather_calls(node: Node, src: &[u8], out: &mut Vec<(usize, RawCall)>) {
    match node.kind() {
        "function_definition" | "class_definition" | "decorated_definition" => return,
        "raise_statement" => {
            let mut cursor = node.walk();
            let exc = node.named_children(&mut cursor).next();
            if let Some(exc) = exc {
                let target = match exc.kind() {
                    "call" => exc.child_by_field_name("function"),
                    "identifier" | "attribute" => Some(exc),
                    _ => None,
                };
                if let Some(target) = target {
                    out.push((
                        exc.start_byte(),
                        RawCall {
                            callee: callee_text(target, src),
                            raised: true,
                            line: row(exc.start_position().row),
                        },
                    ));
                }
                if exc.kind() == "call" {
                    let mut c = exc.walk();
                    for child in exc.children(&mut c) {
                        gather_calls(child, src, out);
                    }
                }
                let mut c = node.walk();
                for child in node.named_children(&mut c).skip(1) {
                    gather_calls(child, src, out);
                }
            }
            return;
        }
        "call" => {
            if let Some(func) = node.child_by_field_name("function") {
                out.push((
                    node.start_byte(),
                    RawCall {
                        callee: callee_text(func, src),
                        raised: false,
                        line: row(node.start_position().row),
                    },
                ));
            }
        }
        _ => {}
    }
    let mut cursor = node.walk();
    for child in node.children(&mut cursor) {
        gather_calls(child, src, out);
    }
}

fn read_import(node: Node, src: &[u8], out: &mut Vec<RawImport>) {
    let line = row(node.start_position().row);
    let mut cursor = node.walk();
    if node.kind() == "import_statement" {
        for name in node.children_by_field_name("name", &mut cursor) {
            let (module, alias) = match name.kind() {
                "aliased_import" => (
                    name.child_by_field_name("name").map(|n| text_of(n, src)),
                    name.child_by_field_name("alias")
                        .map(|n| text_of(n, src).to_string()),
                ),
                _ => (Some(text_of(name, src)), None),
            };
            if let Some(module) = module {
                out.push(RawImport {
                    imported: None,
                    module: module.to_string(),
                    level: 0,
                    alias,
                    line,
                });
            }
        }
        return;
    }

    let Some(module_node) = node.child_by_field_name("module_name") else {
        return;
    };
    let (module, level) = if module_node.kind() == "relative_import" {
        let mut c = module_node.walk();
        let mut level = 0;
        let mut module = String::new();
        for part in module_node.named_children(&mut c) {
            match part.kind() {
                "import_prefix" => {
                    level = text_of(part, src).chars().filter(|&ch| ch == '.').count()
                }
                _ => module = text_of(part, src).to_string(),
            }
        }
        (module, level)
    } else {
        (text_of(module_node, src).to_string(), 0)
    };

    let mut c = node.walk();
    let has_wildcard = node
        .named_children(&mut c)
        .any(|n| n.kind() == "wildcard_import");
    if has_wildcard {
        out.push(RawImport {
            imported: Some("*".into()),
            module,
            level,
            alias: None,
            line,
        });
        return;
    }
    for name in node.children_by_field_name("name", &mut cursor) {
        let (imported, alias) = match name.kind() {
            "aliased_import" => (
                name.child_by_field_name("name")
                    .map(|n| text_of(n, src).to_string()),
                name.child_by_field_name("alias")
                    .map(|n| text_of(n, src).to_string()),
            ),
            _ => (Some(text_of(name, src).to_string()), None),
        };
        if let Some(imported) = imported {
            out.push(RawImport {
                imported: Some(imported),
                module: module.clone(),
                level,
                alias,
                line,
            });
        }
    }
}

pub(crate) fn line_start_byte(src: &[u8], byte: usize) -> usize {
    src[..byte]
        .iter()
        .rposition(|&b| b == b'\n')
        .map_or(0, |p| p + 1)
}

/// Byte just past the newline ending the line containing `byte` (or end of input).
pub(crate) fn line_end_byte(src: &[u8], byte: usize) -> usize {
    src[byte..]
        .iter()
        .position(|&b| b == b'\n')
        .map_or(src.len(), |p| byte + p + 1)
}

/// Lexical class of one physical line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LexClass {
    Blank,
    Comment,
    Docstring,
    Code,
}

/// Classifies every line of `text` (index 0 is line 1).
///
/// A line is a docstring line when it lies entirely within a docstring literal
/// (first statement of a module, class or function body); a line touched by any
/// other token, including the interior of other string literals, is code.
pub fn classify_lines(text: &str) -> Option<Vec<LexClass>> {
    memoized(&CLASSES, text, || classify_uncached(text).map(Arc::new)).map(|c| c.to_vec())
}

fn classify_uncached(text: &str) -> Option<Vec<LexClass>> {
    let tree = parse(text)?;
    let src = text.as_bytes();
    let lines: Vec<&str> = text.split_inclusive('\n').collect();
    let n = lines.len();
    let mut code = vec![false; n];
    let mut comment = vec![false; n];
    let mut doc = vec![false; n];

    let mut found = Vec::new();
    find_docstrings(tree.root_node(), src, &mut found);
    let docstrings: HashSet<usize> = found.iter().map(Node::id).collect();
    let mut doc_row = vec![false; n];
    for d in &found {
        for flag in doc_row
            .iter_mut()
            .take(d.end_position().row + 1)
            .skip(d.start_position().row)
        {
            *flag = true;
        }
    }

    let language: tree_sitter::Language = tree_sitter_python::LANGUAGE.into();
    let comment_kind = language.id_for_node_kind("comment", true);
    let string_kind = language.id_for_node_kind("string", true);
    let mut cursor = tree.walk();
    'walk: loop {
        let node = cursor.node();
        let start = node.start_position().row;
        let mut end = node.end_position().row;
        if node.end_position().column == 0 && end > start {
            end -= 1;
        }
        let end = end.min(n.saturating_sub(1));
        let descend = if docstrings.contains(&node.id()) {
            for flag in doc.iter_mut().take(end + 1).skip(start) {
                *flag = true;
            }
            false
        } else if node.kind_id() == comment_kind {
            if start < n {
                comment[start] = true;
            }
            false
        } else if node.child_count() == 0
            || node.kind_id() == string_kind
            || (start == end && start < n && !doc_row[start] && !node.has_error())
        {
            // A one-row construct without errors holds a real token, so the row is code.
            if !node.is_missing() && node.start_byte() != node.end_byte() {
                for flag in code.iter_mut().take(end + 1).skip(start) {
                    *flag = true;
                }
            }
            false
        } else {
            true
        };
        if descend && cursor.goto_first_child() {
            continue;
        }
        while !cursor.goto_next_sibling() {
            if !cursor.goto_parent() {
                break 'walk;
            }
        }
    }

    Some(
        (0..n)
            .map(|i| {
                if code[i] {
                    LexClass::Code
                } else if doc[i] {
                    LexClass::Docstring
                } else if comment[i] {
                    LexClass::Comment
                } else if lines[i].trim().is_empty() {
                    LexClass::Blank
                } else {
                    LexClass::Code
                }
            })
            .collect(),
    )
}

/// Node ids of docstring expression statements (module, class and function level).
fn find_docstrings<'t>(node: Node<'t>, src: &[u8], out: &mut Vec<Node<'t>>) {
    let body = match node.kind() {
        "module" => Some(node),
        "function_definition" | "class_definition" => node.child_by_field_name("body"),
        _ => None,
    };
    if let Some(body) = body {
        if let Some(first) = statements_of(body).first() {
            if docstring_content(*first, src).is_some() {
                out.push(*first);
            }
        }
    }
    let mut cursor = node.walk();
    for child in node.named_children(&mut cursor) {
        // A docstring inside a one-row construct shares its row with code.
        if child.start_position().row < child.end_position().row {
            find_docstrings(child, src, out);
        }
    }
}

/// Source text of the module-level import statements, in order.
pub fn top_level_imports(text: &str) -> Vec<String> {
    let Some(tree) = parse(text) else {
        return Vec::new();
    };
    let root = tree.root_node();
    let mut cursor = root.walk();
    root.named_children(&mut cursor)
        .filter(|n| {
            matches!(
                n.kind(),
                "import_statement" | "import_from_statement" | "future_import_statement"
            )
        })
        .map(|n| text_of(n, text.as_bytes()).to_string())
        .collect()
}

pub fn has_syntax_error(text: &str) -> bool {
    parse(text).is_none_or(|t| t.root_node().has_error())
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#""""Module doc."""
import os, numpy as np
from .a import helper as h, x
from ..c.d import *

@dec(1)
@other
def top(a, *, b=2) -> int:
    """Run the pipeline."""
    helper(); w = Widget()
    if a:
        raise ValueError("x")
    return np.sum(len(a))


class Widget(Base):
    def run(self, x):
        x.run()

        def inner():
            deep()
        raise Boom
"#;

    #[test]
    fn symbols_and_geometry() {
        let file = parse_file(SAMPLE);
        assert!(file.ok);
        let names: Vec<_> = file
            .symbols
            .iter()
            .map(|s| s.qualified_name.as_str())
            .collect();
        assert_eq!(names, ["top", "Widget", "Widget.run", "Widget.run.inner"]);
        let top = &file.symbols[0];
        assert_eq!(top.decl_line, 8);
        assert_eq!(top.decorator_span, Some((6, 7)));
        assert_eq!(top.docstring.as_deref(), Some("Run the pipeline."));
        assert_eq!(top.docstring_span, Some((9, 9)));
        assert_eq!(top.body_span, (9, 13));
        assert_eq!(top.signature_text, "def top(a, *, b=2) -> int:");
        let run = &file.symbols[2];
        assert_eq!(run.kind, SymbolKind::Method);
        assert!(!run.nested);
        assert!(file.symbols[3].nested);
        assert_eq!(file.symbols[3].kind, SymbolKind::Function);
    }

    #[test]
    fn call_sites_exclude_nested_bodies() {
        let file = parse_file(SAMPLE);
        let calls: Vec<_> = file.symbols[0]
            .calls
            .iter()
            .map(|c| (c.callee.as_str(), c.raised))
            .collect();
        assert_eq!(
            calls,
            [
                ("helper", false),
                ("Widget", false),
                ("ValueError", true),
                ("np.sum", false),
                ("len", false)
            ]
        );
        let run: Vec<_> = file.symbols[2]
            .calls
            .iter()
            .map(|c| c.callee.as_str())
            .collect();
        assert_eq!(run, ["x.run", "Boom"]);
        assert!(file.symbols[2].calls[1].raised);
    }

    #[test]
    fn imports() {
        let file = parse_file(SAMPLE);
        let got: Vec<_> = file
            .imports
            .iter()
            .map(|i| {
                (
                    i.imported.as_deref(),
                    i.module.as_str(),
                    i.level,
                    i.alias.as_deref(),
                )
            })
            .collect();
        assert_eq!(
            got,
            [
                (None, "os", 0, None),
                (None, "numpy", 0, Some("np")),
                (Some("helper"), "a", 1, Some("h")),
                (Some("x"), "a", 1, None),
                (Some("*"), "c.d", 2, None),
            ]
        );
    }

    #[test]
    fn syntax_error_yields_nothing() {
        let file = parse_file("def bad(:\n    pass\n");
        assert!(!file.ok);
        assert!(file.symbols.is_empty());
    }

    #[test]
    fn docstring_rules() {
        let file = parse_file("def f():\n    x = 1\n    'not doc'\n\ndef g():\n    f'nope'\n\ndef h():\n    r'''raw'''\n");
        assert_eq!(file.symbols[0].docstring, None);
        assert_eq!(file.symbols[1].docstring, None);
        assert_eq!(file.symbols[2].docstring.as_deref(), Some("raw"));
    }

    #[test]
    fn line_classes() {
        let text = "def f():\n    \"\"\"Doc\n    more.\"\"\"\n    # note\n\n    s = '''a\n    # inside\n    b'''\n    return s  # trailing\n";
        let classes = classify_lines(text).unwrap();
        use LexClass::*;
        assert_eq!(
            classes,
            [Code, Docstring, Docstring, Comment, Blank, Code, Code, Code, Code]
        );
    }

    #[test]
    fn edited_parse_matches_fresh() {
        let edits = [
            SAMPLE.replace("def top", "# note\ndef top"),
            SAMPLE.replace("    helper(); w = Widget()\n", ""),
            SAMPLE.replace("\"\"\"Run the pipeline.\"\"\"", "pass  # x"),
            format!("{SAMPLE}\ndef tail():\n    return 1\n"),
            SAMPLE.replace("(Base)", "(Base, Other"),
        ];
        for edited in &edits {
            let fresh = fresh_parse(edited, None).unwrap().root_node().to_sexp();
            assert_eq!(
                parse_edited(edited, SAMPLE).unwrap().root_node().to_sexp(),
                fresh
            );
        }
    }
}
