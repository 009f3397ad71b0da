//! Identifier-free descriptions of localization targets.

use std::collections::{BTreeMap, HashMap};
use std::hash::{DefaultHasher, Hash, Hasher};
use std::sync::{Arc, Mutex};

use crate::error::{Error, Result};
use crate::source::{module_name, RepoSnapshot, SymbolDef, SymbolKind};

pub trait DescriptionProvider: Sync {
    fn describe(&self, symbol: &SymbolDef, snapshot: &RepoSnapshot) -> Result<String>;
}

fn is_ident_byte(b: u8) -> bool {
    b == b'_' || b.is_ascii_alphanumeric()
}

/// Identifier-like words of `text` with their byte offsets.
fn words(text: &str) -> impl Iterator<Item = (usize, &str)> {
    let bytes = text.as_bytes();
    let mut i = 0;
    std::iter::from_fn(move || {
        while i < bytes.len() && !is_ident_byte(bytes[i]) {
            i += 1;
        }
        if i >= bytes.len() {
            return None;
        }
        let start = i;
        while i < bytes.len() && is_ident_byte(bytes[i]) {
            i += 1;
        }
        Some((start, &text[start..i]))
    })
}

/// Checks that `text` mentions neither the bare name (as a whole word, any case)
/// nor the file path (anywhere, any case).
pub fn check_leakage(text: &str, symbol: &SymbolDef) -> Result<()> {
    let name = symbol.name();
    if let Some((_, w)) = words(text).find(|(_, w)| w.eq_ignore_ascii_case(name)) {
        return Err(Error::Leakage {
            locator: symbol.locator.clone(),
            leaked: w.to_string(),
        });
    }
    if text
        .to_ascii_lowercase()
        .contains(&symbol.file_path.to_ascii_lowercase())
    {
        return Err(Error::Leakage {
            locator: symbol.locator.clone(),
            leaked: symbol.file_path.clone(),
        });
    }
    Ok(())
}

/// Deterministic describer: the docstring's first paragraph with every
/// repository identifier replaced by a role word, or a description of the
/// signature shape when there is no docstring.
#[derive(Debug, Clone, Default)]
pub struct RedactionProvider;

#[derive(Clone, Copy)]
enum Role {
    Routine,
    Component,
    Module,
}

impl Role {
    fn word(self) -> &'static str {
        match self {
            Role::Routine => "a routine",
            Role::Component => "a component",
            Role::Module => "a module",
        }
    }
}

fn repo_identifiers(snapshot: &RepoSnapshot) -> HashMap<String, Role> {
    let mut out = HashMap::new();
    for file in snapshot.files() {
        for seg in module_name(&file.rel_path).split('.') {
            out.insert(seg.to_string(), Role::Module);
        }
        for seg in file.rel_path.split(['/', '.']) {
            out.entry(seg.to_string()).or_insert(Role::Module);
        }
    }
    for sym in snapshot.symbols() {
        let role = if sym.kind == SymbolKind::Class {
            Role::Component
        } else {
            Role::Routine
        };
        out.insert(sym.name().to_string(), role);
    }
    out.remove("py");
    out.remove("");
    out
}

type Identifiers = Arc<HashMap<String, Role>>;

/// Identifier table of the most recently described snapshot.
static LAST_IDENTIFIERS: Mutex<Option<(u64, Identifiers)>> = Mutex::new(None);

fn identifiers_for(snapshot: &RepoSnapshot) -> Identifiers {
    let mut h = DefaultHasher::new();
    (snapshot.repo_id(), snapshot.commit_id()).hash(&mut h);
    snapshot
        .files()
        .iter()
        .for_each(|f| f.rel_path.hash(&mut h));
    snapshot
        .symbols()
        .iter()
        .for_each(|s| s.locator.hash(&mut h));
    let key = h.finish();
    if let Some((k, idents)) = LAST_IDENTIFIERS.lock().unwrap().as_ref() {
        if *k == key {
            return idents.clone();
        }
    }
    let idents = Arc::new(repo_identifiers(snapshot));
    *LAST_IDENTIFIERS.lock().unwrap() = Some((key, idents.clone()));
    idents
}

fn redact(text: &str, symbol: &SymbolDef, idents: &HashMap<String, Role>) -> String {
    let target_role = if symbol.kind == SymbolKind::Class {
        Role::Component
    } else {
        Role::Routine
    };
    let mut out = String::with_capacity(text.len());
    let mut last = 0;
    for (start, word) in words(text) {
        let role = if word.eq_ignore_ascii_case(symbol.name()) {
            Some(target_role)
        } else {
            idents.get(word).copied()
        };
        if let Some(role) = role {
            out.push_str(&text[last..start]);
            out.push_str(role.word());
            last = start + word.len();
        }
    }
    out.push_str(&text[last..]);
    out
}

fn first_paragraph(doc: &str) -> String {
    let mut lines = Vec::new();
    for line in doc.lines().map(str::trim) {
        if line.is_empty() {
            if lines.is_empty() {
                continue;
            }
            break;
        }
        lines.push(line);
    }
    lines.join(" ")
}

fn parameter_count(signature: &str) -> usize {
    let Some(open) = signature.find('(') else {
        return 0;
    };
    let Some(close) = signature.rfind(')') else {
        return 0;
    };
    if close <= open {
        return 0;
    }
    let mut depth = 0i32;
    let mut count = 0;
    let mut current = false;
    for c in signature[open + 1..close].chars() {
        match c {
            '(' | '[' | '{' => depth += 1,
            ')' | ']' | '}' => depth -= 1,
            ',' if depth == 0 => {
                if current {
                    count += 1;
                }
                current = false;
                continue;
            }
            _ => {}
        }
        if !c.is_whitespace() {
            current = true;
        }
    }
    if current {
        count += 1;
    }
    count
}

fn shape(symbol: &SymbolDef) -> String {
    let params = parameter_count(&symbol.signature_text);
    let (noun, params) = match symbol.kind {
        SymbolKind::Class => ("A class", params),
        SymbolKind::Method => ("A method", params.saturating_sub(1)),
        SymbolKind::Function => ("A function", params),
    };
    let arity = match params {
        0 => "no parameters".to_string(),
        1 => "one parameter".to_string(),
        n => format!("{n} parameters"),
    };
    let relation = match symbol.kind {
        SymbolKind::Class => "whose header lists",
        _ => "taking",
    };
    let lines = match symbol.body_lines() {
        1 => "one line".to_string(),
        n => format!("{n} lines"),
    };
    format!("{noun} {relation} {arity}, with a body spanning {lines}.")
}

/// Drops whole-word mentions of the bare name and any mention of the path.
fn scrub(text: &str, symbol: &SymbolDef) -> String {
    let mut text = text.to_string();
    while check_leakage(&text, symbol).is_err() {
        let lower_path = symbol.file_path.to_ascii_lowercase();
        if let Some(at) = text.to_ascii_lowercase().find(&lower_path) {
            text.replace_range(at..at + lower_path.len(), "");
            continue;
        }
        let kept: Vec<String> = text
            .split(' ')
            .map(|chunk| {
                let mut out = String::new();
                let mut last = 0;
                for (start, word) in words(chunk) {
                    if word.eq_ignore_ascii_case(symbol.name()) {
                        out.push_str(&chunk[last..start]);
                        last = start + word.len();
                    }
                }
                out.push_str(&chunk[last..]);
                out
            })
            .filter(|c| !c.is_empty())
            .collect();
        text = kept.join(" ");
    }
    text
}

impl DescriptionProvider for RedactionProvider {
    fn describe(&self, symbol: &SymbolDef, snapshot: &RepoSnapshot) -> Result<String> {
        let idents = identifiers_for(snapshot);
        let purpose = symbol
            .docstring
            .as_deref()
            .map(first_paragraph)
            .filter(|p| !p.is_empty());
        let text = match purpose {
            Some(p) => format!("{} Documented purpose: {p}", shape(symbol)),
            None => shape(symbol),
        };
        Ok(scrub(&redact(&text, symbol, &idents), symbol))
    }
}

/// Adapter around an external text generator (prompt in, description out).
/// Output is checked for leakage like any other provider.
pub struct ExternalDescriber<F> {
    generate: F,
}

impl<F> ExternalDescriber<F>
where
    F: Fn(&str) -> Result<String> + Sync,
{
    pub fn new(generate: F) -> Self {
        Self { generate }
    }

    pub fn request(symbol: &SymbolDef) -> String {
        let mut fields = BTreeMap::new();
        fields.insert("kind", format!("{:?}", symbol.kind).to_lowercase());
        fields.insert("signature", symbol.signature_text.clone());
        fields.insert("docstring", symbol.docstring.clone().unwrap_or_default());
        let mut out = String::from(
            "Write a brief description of the code below. Do not mention its name, file path or any other identifier.\n",
        );
        for (k, v) in fields {
            out.push_str(&format!("{k}: {v}\n"));
        }
        out
    }
}

impl<F> DescriptionProvider for ExternalDescriber<F>
where
    F: Fn(&str) -> Result<String> + Sync,
{
    fn describe(&self, symbol: &SymbolDef, _snapshot: &RepoSnapshot) -> Result<String> {
        (self.generate)(&Self::request(symbol))
    }
}
