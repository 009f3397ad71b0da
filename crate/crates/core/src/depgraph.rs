//! Direct call dependencies of functions, resolved to repository definitions.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::source::{RepoSnapshot, SymbolDef, SymbolKind, Target};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CallKind {
    FunctionCall,
    ClassInstantiation,
    ExceptionRaise,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallSite {
    pub caller: String,
    /// Dotted name as written (`helper`, `x.run`, `mod.Widget`).
    pub callee_name: String,
    pub call_kind: CallKind,
    pub line: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Resolution {
    Internal(SymbolDef),
    Builtin,
    External(String),
    Unresolved,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DependencyRecord {
    pub caller: String,
    pub dependencies: BTreeSet<String>,
    pub unresolved_names: BTreeSet<String>,
}

impl DependencyRecord {
    pub fn to_record(&self) -> String {
        serde_json::to_string(self).expect("dependency record serializes")
    }
}

fn require_callable(symbol: &SymbolDef) -> Result<()> {
    if symbol.kind.is_callable() {
        Ok(())
    } else {
        Err(Error::Kind(format!(
            "{} is a class; call sites are extracted from functions and methods",
            symbol.locator
        )))
    }
}

/// Calls, instantiations and raised exceptions written in the body of `symbol`.
/// Decorators and the bodies of nested definitions are not included.
pub fn extract_call_sites(symbol: &SymbolDef, snapshot: &RepoSnapshot) -> Result<Vec<CallSite>> {
    require_callable(symbol)?;
    let own = snapshot
        .symbol(&symbol.locator)
        .ok_or_else(|| Error::Lookup(format!("{} is not in the snapshot", symbol.locator)))?;
    Ok(snapshot
        .calls_of(&own.locator)
        .map(|raw| {
            let call_kind = if raw.raised {
                CallKind::ExceptionRaise
            } else {
                match resolve_callee(own, &raw.callee_name, snapshot) {
                    Resolution::Internal(def) if def.kind == SymbolKind::Class => {
                        CallKind::ClassInstantiation
                    }
                    Resolution::Internal(_) => CallKind::FunctionCall,
                    _ if last_segment_capitalized(&raw.callee_name) => CallKind::ClassInstantiation,
                    _ => CallKind::FunctionCall,
                }
            };
            CallSite {
                caller: own.locator.clone(),
                callee_name: raw.callee_name.clone(),
                call_kind,
                line: raw.line,
            }
        })
        .collect())
}

fn last_segment_capitalized(name: &str) -> bool {
    name.rsplit('.')
        .next()
        .and_then(|s| s.chars().next())
        .is_some_and(char::is_uppercase)
}

pub fn resolve_call(call: &CallSite, snapshot: &RepoSnapshot) -> Resolution {
    match snapshot.symbol(&call.caller) {
        Some(caller) => resolve_callee(caller, &call.callee_name, snapshot),
        None => Resolution::Unresolved,
    }
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    chars.next().is_some_and(|c| c == '_' || c.is_alphabetic())
        && chars.all(|c| c == '_' || c.is_alphanumeric())
}

/// Resolves a callee name from inside `caller`.
///
/// Enclosing function scopes are searched for nested definitions before module
/// scope. Attribute calls resolve only through class names and imported modules;
/// receivers such as `self` or parameters stay unresolved.
fn resolve_callee(caller: &SymbolDef, callee: &str, snapshot: &RepoSnapshot) -> Resolution {
    let parts: Vec<&str> = callee.split('.').collect();
    if !parts.iter().all(|p| is_identifier(p)) {
        return Resolution::Unresolved;
    }
    let (head, rest) = (parts[0], &parts[1..]);
    let file = caller.file_path.as_str();

    let target = if let Some(local) = enclosing_definition(caller, head, snapshot) {
        snapshot.follow_attrs(
            Target::Internal {
                file_path: file.to_string(),
                qualified_name: Some(local.qualified_name.clone()),
            },
            rest,
        )
    } else {
        let module_scope = snapshot.resolve_name(head, file);
        match snapshot.plain_import_module(file, head) {
            Some(module) if !rest.is_empty() && snapshot.symbol_in(file, head).is_none() => {
                snapshot.resolve_in_module(module, rest)
            }
            _ => snapshot.follow_attrs(module_scope, rest),
        }
    };

    match target {
        Target::Internal {
            file_path,
            qualified_name: Some(q),
        } => snapshot
            .symbol_in(&file_path, &q)
            .map_or(Resolution::Unresolved, |s| Resolution::Internal(s.clone())),
        Target::Internal { .. } | Target::Unresolved => Resolution::Unresolved,
        Target::Builtin => Resolution::Builtin,
        Target::External { package } => Resolution::External(package),
    }
}

/// A definition named `name` nested in `caller` or in an enclosing function.
fn enclosing_definition<'a>(
    caller: &SymbolDef,
    name: &str,
    snapshot: &'a RepoSnapshot,
) -> Option<&'a SymbolDef> {
    let file = caller.file_path.as_str();
    let mut scope = Some(caller.qualified_name.as_str());
    while let Some(qualified) = scope {
        let is_function = snapshot
            .symbol_in(file, qualified)
            .is_some_and(|s| s.kind.is_callable());
        if is_function {
            if let Some(def) = snapshot.symbol_in(file, &format!("{qualified}.{name}")) {
                return Some(def);
            }
        }
        scope = qualified.rsplit_once('.').map(|(parent, _)| parent);
    }
    None
}

/// In-repository functions and classes directly called by `symbol`, excluding itself.
pub fn direct_dependencies(
    symbol: &SymbolDef,
    snapshot: &RepoSnapshot,
) -> Result<DependencyRecord> {
    let calls = extract_call_sites(symbol, snapshot)?;
    let mut dependencies = BTreeSet::new();
    let mut unresolved_names = BTreeSet::new();
    for call in &calls {
        match resolve_call(call, snapshot) {
            Resolution::Internal(def) => {
                if def.locator != symbol.locator {
                    dependencies.insert(def.locator);
                }
            }
            Resolution::Unresolved => {
                unresolved_names.insert(call.callee_name.clone());
            }
            Resolution::Builtin | Resolution::External(_) => {}
        }
    }
    Ok(DependencyRecord {
        caller: symbol.locator.clone(),
        dependencies,
        unresolved_names,
    })
}
