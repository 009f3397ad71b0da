//! Repository indexing: symbols, imports and name resolution for Python sources.

mod builtins;
pub mod python;
pub mod records;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tree::{self, SourceTree};

pub use builtins::{is_builtin, BUILTINS, BUILTINS_TABLE_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParseStatus {
    Ok,
    ParseError,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceFile {
    pub rel_path: String,
    pub line_count: usize,
    pub parse_status: ParseStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymbolKind {
    Function,
    Method,
    Class,
}

impl SymbolKind {
    pub fn is_callable(self) -> bool {
        matches!(self, SymbolKind::Function | SymbolKind::Method)
    }
}

/// A function, method or class definition. Lines are 1-based and spans inclusive.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolDef {
    pub kind: SymbolKind,
    pub qualified_name: String,
    pub file_path: String,
    pub decl_line: u32,
    pub body_span: (u32, u32),
    pub decorator_span: Option<(u32, u32)>,
    pub docstring_span: Option<(u32, u32)>,
    pub docstring: Option<String>,
    pub signature_text: String,
    pub locator: String,
    /// Defined inside a function body (at any depth).
    pub nested: bool,
}

impl SymbolDef {
    /// Bare name, the last segment of the qualified name.
    pub fn name(&self) -> &str {
        self.qualified_name
            .rsplit('.')
            .next()
            .unwrap_or(&self.qualified_name)
    }

    /// First line of the definition including decorators.
    pub fn anchor_line(&self) -> u32 {
        self.decorator_span.map_or(self.decl_line, |(s, _)| s)
    }

    pub fn body_lines(&self) -> u32 {
        self.body_span.1 - self.body_span.0 + 1
    }

    fn top_level(&self) -> bool {
        !self.qualified_name.contains('.')
    }
}

pub fn locator(file_path: &str, qualified_name: &str) -> String {
    format!("{file_path}:{qualified_name}")
}

/// Splits `file_path:QualifiedName` at the last colon.
pub fn split_locator(locator: &str) -> Option<(&str, &str)> {
    locator.rsplit_once(':')
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImportKind {
    Absolute,
    Relative,
    Aliased,
    Star,
}

/// What a name refers to.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "target", rename_all = "snake_case")]
pub enum Target {
    /// A definition in the repository, or the module itself when `qualified_name` is `None`.
    Internal {
        file_path: String,
        qualified_name: Option<String>,
    },
    External {
        package: String,
    },
    Builtin,
    Unresolved,
}

impl Target {
    fn module(file_path: &str) -> Self {
        Target::Internal {
            file_path: file_path.to_string(),
            qualified_name: None,
        }
    }

    fn symbol(file_path: &str, qualified_name: &str) -> Self {
        Target::Internal {
            file_path: file_path.to_string(),
            qualified_name: Some(qualified_name.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImportBinding {
    pub importer_file: String,
    pub local_name: String,
    pub import_kind: ImportKind,
    pub target: Target,
    /// Absolute dotted module path, when it could be computed.
    pub module: Option<String>,
    /// Name taken from the module (`from m import name`), `None` for `import m`.
    pub imported: Option<String>,
    pub line: u32,
}

/// A syntactic call inside a function body, before resolution.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallRecord {
    pub caller: String,
    pub callee_name: String,
    pub raised: bool,
    pub line: u32,
}

#[derive(Debug, Clone)]
pub struct IndexOptions {
    pub extension: String,
    pub parallel: bool,
}

impl Default for IndexOptions {
    fn default() -> Self {
        IndexOptions {
            extension: "py".into(),
            parallel: true,
        }
    }
}

/// Immutable index of one repository at one commit.
#[derive(Debug, Clone)]
pub struct RepoSnapshot {
    repo_id: String,
    commit_id: String,
    files: Vec<SourceFile>,
    symbols: Vec<SymbolDef>,
    imports: Vec<ImportBinding>,
    calls: Vec<CallRecord>,
    by_locator: HashMap<String, usize>,
    by_file: HashMap<String, Vec<usize>>,
    imports_by_file: HashMap<String, Vec<usize>>,
    calls_by_caller: HashMap<String, Vec<usize>>,
    modules: BTreeMap<String, String>,
}

impl PartialEq for RepoSnapshot {
    fn eq(&self, other: &Self) -> bool {
        self.repo_id == other.repo_id
            && self.commit_id == other.commit_id
            && self.files == other.files
            && self.symbols == other.symbols
            && self.imports == other.imports
            && self.calls == other.calls
    }
}

/// Indexes every subject-language file below `root_dir`.
pub fn index_repo(
    root_dir: &Path,
    repo_id: &str,
    commit_id: &str,
    options: &IndexOptions,
) -> Result<RepoSnapshot> {
    let (tree, unreadable) = SourceTree::read_dir(root_dir)?;
    let suffix = format!(".{}", options.extension);
    let unreadable: Vec<String> = unreadable
        .into_iter()
        .filter(|p| p.ends_with(&suffix))
        .collect();
    Ok(index_tree_with(
        &tree,
        &unreadable,
        repo_id,
        commit_id,
        options,
    ))
}

pub fn index_tree(tree: &SourceTree, repo_id: &str, commit_id: &str) -> RepoSnapshot {
    index_tree_with(tree, &[], repo_id, commit_id, &IndexOptions::default())
}

fn index_tree_with(
    tree: &SourceTree,
    unreadable: &[String],
    repo_id: &str,
    commit_id: &str,
    options: &IndexOptions,
) -> RepoSnapshot {
    let suffix = format!(".{}", options.extension);
    let paths: Vec<&str> = tree.paths().filter(|p| p.ends_with(&suffix)).collect();
    let parse_one = |path: &&str| {
        let text = tree.text(path);
        let parsed = text.map(python::parse_file).unwrap_or_default();
        let line_count = text.map_or(0, tree::line_count);
        (path.to_string(), line_count, parsed)
    };
    let parsed: Vec<(String, usize, python::ParsedFile)> = if options.parallel {
        paths.par_iter().map(parse_one).collect()
    } else {
        paths.iter().map(parse_one).collect()
    };

    let mut files = Vec::new();
    let mut symbols = Vec::new();
    let mut raw_imports = Vec::new();
    let mut calls = Vec::new();
    for (path, line_count, parsed) in parsed {
        files.push(SourceFile {
            rel_path: path.clone(),
            line_count,
            parse_status: if parsed.ok {
                ParseStatus::Ok
            } else {
                ParseStatus::ParseError
            },
        });
        let mut seen = BTreeSet::new();
        for sym in parsed.symbols {
            // A name redefined under a different branch keeps its first definition.
            if !seen.insert(sym.qualified_name.clone()) {
                continue;
            }
            let loc = locator(&path, &sym.qualified_name);
            calls.extend(sym.calls.iter().map(|c| CallRecord {
                caller: loc.clone(),
                callee_name: c.callee.clone(),
                raised: c.raised,
                line: c.line,
            }));
            symbols.push(SymbolDef {
                kind: sym.kind,
                qualified_name: sym.qualified_name,
                file_path: path.clone(),
                decl_line: sym.decl_line,
                body_span: sym.body_span,
                decorator_span: sym.decorator_span,
                docstring_span: sym.docstring_span,
                docstring: sym.docstring,
                signature_text: sym.signature_text,
                locator: loc,
                nested: sym.nested,
            });
        }
        raw_imports.extend(parsed.imports.into_iter().map(|i| (path.clone(), i)));
    }
    for path in unreadable {
        if !files.iter().any(|f| &f.rel_path == path) {
            files.push(SourceFile {
                rel_path: path.clone(),
                line_count: 0,
                parse_status: ParseStatus::ParseError,
            });
        }
    }
    files.sort_by(|a, b| a.rel_path.cmp(&b.rel_path));

    let mut snapshot = RepoSnapshot::assemble(
        repo_id.to_string(),
        commit_id.to_string(),
        files,
        symbols,
        Vec::new(),
        calls,
    );
    let bindings = raw_imports
        .into_iter()
        .map(|(file, raw)| snapshot.binding_from_raw(&file, raw))
        .collect();
    snapshot.set_imports(bindings);
    snapshot
}

/// Module dotted name for a repository path (`pkg/__init__.py` is `pkg`).
pub fn module_name(path: &str) -> String {
    let stem = path.rsplit_once('.').map_or(path, |(s, _)| s);
    let stem = stem.strip_suffix("/__init__").unwrap_or(stem);
    if stem == "__init__" {
        return String::new();
    }
    stem.replace('/', ".")
}

fn package_of(path: &str) -> Vec<&str> {
    let mut parts: Vec<&str> = path.split('/').collect();
    parts.pop();
    parts
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum ModuleLookup {
    File(String),
    Namespace,
    Missing,
    Ambiguous,
}

#[derive(Debug, Clone, Default)]
pub struct SymbolFilter {
    /// Empty means every kind.
    pub kinds: Vec<SymbolKind>,
    pub min_body_lines: Option<u32>,
    pub has_docstring: Option<bool>,
    pub include_nested: bool,
}

impl RepoSnapshot {
    pub(crate) fn assemble(
        repo_id: String,
        commit_id: String,
        files: Vec<SourceFile>,
        mut symbols: Vec<SymbolDef>,
        imports: Vec<ImportBinding>,
        calls: Vec<CallRecord>,
    ) -> Self {
        symbols.sort_by(|a, b| {
            (&a.file_path, a.decl_line, &a.qualified_name).cmp(&(
                &b.file_path,
                b.decl_line,
                &b.qualified_name,
            ))
        });
        let mut by_locator = HashMap::new();
        let mut by_file: HashMap<String, Vec<usize>> = HashMap::new();
        for (i, s) in symbols.iter().enumerate() {
            by_locator.insert(s.locator.clone(), i);
            by_file.entry(s.file_path.clone()).or_default().push(i);
        }
        let mut calls_by_caller: HashMap<String, Vec<usize>> = HashMap::new();
        for (i, c) in calls.iter().enumerate() {
            calls_by_caller.entry(c.caller.clone()).or_default().push(i);
        }
        let modules = files
            .iter()
            .map(|f| (module_name(&f.rel_path), f.rel_path.clone()))
            .filter(|(m, _)| !m.is_empty())
            .collect();
        let mut snapshot = RepoSnapshot {
            repo_id,
            commit_id,
            files,
            symbols,
            imports: Vec::new(),
            calls,
            by_locator,
            by_file,
            imports_by_file: HashMap::new(),
            calls_by_caller,
            modules,
        };
        snapshot.set_imports(imports);
        snapshot
    }

    fn set_imports(&mut self, imports: Vec<ImportBinding>) {
        self.imports = imports;
        self.imports_by_file.clear();
        for (i, b) in self.imports.iter().enumerate() {
            self.imports_by_file
                .entry(b.importer_file.clone())
                .or_default()
                .push(i);
        }
        let targets: Vec<Target> = (0..self.imports.len())
            .map(|i| self.binding_target(i, &mut BTreeSet::new()))
            .collect();
        for (binding, target) in self.imports.iter_mut().zip(targets) {
            binding.target = target;
        }
    }

    pub fn repo_id(&self) -> &str {
        &self.repo_id
    }

    pub fn commit_id(&self) -> &str {
        &self.commit_id
    }

    pub fn files(&self) -> &[SourceFile] {
        &self.files
    }

    pub fn symbols(&self) -> &[SymbolDef] {
        &self.symbols
    }

    pub fn imports(&self) -> &[ImportBinding] {
        &self.imports
    }

    pub fn calls(&self) -> &[CallRecord] {
        &self.calls
    }

    pub fn file(&self, path: &str) -> Option<&SourceFile> {
        self.files
            .binary_search_by(|f| f.rel_path.as_str().cmp(path))
            .ok()
            .map(|i| &self.files[i])
    }

    pub fn symbol(&self, locator: &str) -> Option<&SymbolDef> {
        self.by_locator.get(locator).map(|&i| &self.symbols[i])
    }

    pub fn symbol_in(&self, file: &str, qualified_name: &str) -> Option<&SymbolDef> {
        self.symbol(&locator(file, qualified_name))
    }

    pub fn symbols_in(&self, file: &str) -> impl Iterator<Item = &SymbolDef> {
        self.by_file
            .get(file)
            .into_iter()
            .flatten()
            .map(|&i| &self.symbols[i])
    }

    pub fn imports_in(&self, file: &str) -> impl Iterator<Item = &ImportBinding> {
        self.imports_by_file
            .get(file)
            .into_iter()
            .flatten()
            .map(|&i| &self.imports[i])
    }

    pub fn calls_of(&self, caller_locator: &str) -> impl Iterator<Item = &CallRecord> {
        self.calls_by_caller
            .get(caller_locator)
            .into_iter()
            .flatten()
            .map(|&i| &self.calls[i])
    }

    /// Symbols matching `filter`, ordered by file path then declaration line.
    pub fn list_symbols(&self, filter: &SymbolFilter) -> Vec<&SymbolDef> {
        self.symbols
            .iter()
            .filter(|s| filter.include_nested || !s.nested)
            .filter(|s| filter.kinds.is_empty() || filter.kinds.contains(&s.kind))
            .filter(|s| filter.min_body_lines.is_none_or(|m| s.body_lines() >= m))
            .filter(|s| {
                filter
                    .has_docstring
                    .is_none_or(|want| s.docstring.is_some() == want)
            })
            .collect()
    }

    /// Docstring content without quote delimiters.
    pub fn get_docstring(&self, symbol: &SymbolDef) -> Result<Option<&str>> {
        let own = self
            .symbol(&symbol.locator)
            .ok_or_else(|| Error::Lookup(format!("{} is not in the snapshot", symbol.locator)))?;
        Ok(own.docstring.as_deref())
    }

    /// The file implementing a dotted module path.
    pub fn module_file(&self, dotted: &str) -> Option<String> {
        match self.lookup_module(dotted) {
            ModuleLookup::File(f) => Some(f),
            _ => None,
        }
    }

    fn lookup_module(&self, dotted: &str) -> ModuleLookup {
        if dotted.is_empty() {
            return ModuleLookup::Missing;
        }
        if let Some(file) = self.modules.get(dotted) {
            return ModuleLookup::File(file.clone());
        }
        let prefix = format!("{dotted}.");
        if self
            .modules
            .range(prefix.clone()..)
            .next()
            .is_some_and(|(k, _)| k.starts_with(&prefix))
        {
            return ModuleLookup::Namespace;
        }
        // Source roots such as `src/`: accept a unique match rooted at a
        // directory that is not itself a package.
        let suffix = format!(".{dotted}");
        let candidates: Vec<&String> = self
            .modules
            .iter()
            .filter(|(k, _)| k.ends_with(&suffix))
            .filter(|(k, _)| {
                let root = &k[..k.len() - suffix.len()];
                let marker = format!("{}/__init__.py", root.replace('.', "/"));
                self.file(&marker).is_none()
            })
            .map(|(_, f)| f)
            .collect();
        match candidates.as_slice() {
            [] => ModuleLookup::Missing,
            [one] => ModuleLookup::File((*one).clone()),
            _ => ModuleLookup::Ambiguous,
        }
    }

    fn binding_from_raw(&self, file: &str, raw: python::RawImport) -> ImportBinding {
        let module = if raw.level == 0 {
            Some(raw.module.clone())
        } else {
            let mut pkg = package_of(file);
            let up = raw.level - 1;
            if up > pkg.len() {
                None
            } else {
                pkg.truncate(pkg.len() - up);
                let mut parts: Vec<&str> = pkg;
                if !raw.module.is_empty() {
                    parts.push(&raw.module);
                }
                Some(parts.join("."))
            }
        };
        let star = raw.imported.as_deref() == Some("*");
        let import_kind = if star {
            ImportKind::Star
        } else if raw.level > 0 {
            ImportKind::Relative
        } else if raw.alias.is_some() {
            ImportKind::Aliased
        } else {
            ImportKind::Absolute
        };
        let local_name = if star {
            "*".to_string()
        } else if let Some(alias) = raw.alias.clone() {
            alias
        } else if let Some(imported) = &raw.imported {
            imported.clone()
        } else {
            raw.module.split('.').next().unwrap_or_default().to_string()
        };
        let module = match (&raw.imported, raw.alias.is_none()) {
            // `import a.b.c` binds `a`.
            (None, true) if raw.level == 0 => {
                module.map(|m| m.split('.').next().unwrap_or_default().to_string())
            }
            _ => module,
        };
        ImportBinding {
            importer_file: file.to_string(),
            local_name,
            import_kind,
            target: Target::Unresolved,
            module,
            imported: raw.imported,
            line: raw.line,
        }
    }

    fn binding_target(&self, index: usize, visiting: &mut BTreeSet<(String, String)>) -> Target {
        let binding = &self.imports[index];
        let Some(module) = binding.module.as_deref() else {
            return Target::Unresolved;
        };
        let relative = binding.import_kind == ImportKind::Relative;
        let lookup = self.lookup_module(module);
        let external = || Target::External {
            package: module.split('.').next().unwrap_or(module).to_string(),
        };
        match binding.imported.as_deref() {
            None => match lookup {
                ModuleLookup::File(f) => Target::module(&f),
                ModuleLookup::Namespace | ModuleLookup::Ambiguous => Target::Unresolved,
                ModuleLookup::Missing => {
                    if self.internal_top_package(module) {
                        Target::Unresolved
                    } else {
                        external()
                    }
                }
            },
            Some("*") => match lookup {
                ModuleLookup::File(f) => Target::module(&f),
                _ => Target::Unresolved,
            },
            Some(name) => match lookup {
                ModuleLookup::File(f) => self.exported(&f, name, visiting),
                ModuleLookup::Namespace => match self.lookup_module(&format!("{module}.{name}")) {
                    ModuleLookup::File(sub) => Target::module(&sub),
                    _ => Target::Unresolved,
                },
                ModuleLookup::Ambiguous => Target::Unresolved,
                ModuleLookup::Missing => {
                    if relative || self.internal_top_package(module) {
                        Target::Unresolved
                    } else {
                        external()
                    }
                }
            },
        }
    }

    fn internal_top_package(&self, module: &str) -> bool {
        let top = module.split('.').next().unwrap_or(module);
        !matches!(self.lookup_module(top), ModuleLookup::Missing)
    }

    /// What `name` refers to when imported from the module in `file`, following
    /// re-exports and star imports.
    fn exported(
        &self,
        file: &str,
        name: &str,
        visiting: &mut BTreeSet<(String, String)>,
    ) -> Target {
        if !visiting.insert((file.to_string(), name.to_string())) {
            return Target::Unresolved;
        }
        let target = self.exported_inner(file, name, visiting);
        visiting.remove(&(file.to_string(), name.to_string()));
        target
    }

    fn exported_inner(
        &self,
        file: &str,
        name: &str,
        visiting: &mut BTreeSet<(String, String)>,
    ) -> Target {
        if let Some(sym) = self.symbol_in(file, name) {
            return Target::symbol(file, &sym.qualified_name);
        }
        let explicit: BTreeSet<Target> = self
            .imports_by_file
            .get(file)
            .into_iter()
            .flatten()
            .filter(|&&i| {
                self.imports[i].import_kind != ImportKind::Star
                    && self.imports[i].local_name == name
            })
            .map(|&i| self.binding_target(i, visiting))
            .collect();
        if let Some(t) = single(explicit) {
            return t;
        }
        let own = module_name(file);
        let sub = if own.is_empty() {
            name.to_string()
        } else {
            format!("{own}.{name}")
        };
        if file.ends_with("__init__.py") {
            if let ModuleLookup::File(f) = self.lookup_module(&sub) {
                return Target::module(&f);
            }
        }
        self.star_candidates(file, name, visiting)
    }

    fn star_candidates(
        &self,
        file: &str,
        name: &str,
        visiting: &mut BTreeSet<(String, String)>,
    ) -> Target {
        let mut found = BTreeSet::new();
        for &i in self.imports_by_file.get(file).into_iter().flatten() {
            let b = &self.imports[i];
            if b.import_kind != ImportKind::Star {
                continue;
            }
            if let Some(module) = b.module.as_deref() {
                if let ModuleLookup::File(f) = self.lookup_module(module) {
                    match self.exported(&f, name, visiting) {
                        Target::Unresolved => {}
                        t => {
                            found.insert(t);
                        }
                    }
                }
            }
        }
        single(found).unwrap_or(Target::Unresolved)
    }

    /// Resolves a bare name as seen at module scope of `in_file`.
    ///
    /// Order: local definition, explicit import, star-import candidates (only a
    /// unique candidate resolves), builtin table, otherwise unresolved.
    pub fn resolve_name(&self, name: &str, in_file: &str) -> Target {
        if let Some(sym) = self.symbol_in(in_file, name) {
            if sym.top_level() {
                return Target::symbol(in_file, name);
            }
        }
        let explicit: BTreeSet<Target> = self
            .imports_in(in_file)
            .filter(|b| b.import_kind != ImportKind::Star && b.local_name == name)
            .map(|b| b.target.clone())
            .collect();
        if !explicit.is_empty() {
            return single(explicit).unwrap_or(Target::Unresolved);
        }
        match self.star_candidates(in_file, name, &mut BTreeSet::new()) {
            Target::Unresolved => {}
            t => return t,
        }
        if is_builtin(name) {
            return Target::Builtin;
        }
        Target::Unresolved
    }

    /// Follows `attrs` from module `dotted`: top-level definitions first, then
    /// submodules, then names the module itself imports.
    pub fn resolve_in_module(&self, dotted: &str, attrs: &[&str]) -> Target {
        let mut module = dotted.to_string();
        for (i, attr) in attrs.iter().enumerate() {
            let file = match self.lookup_module(&module) {
                ModuleLookup::File(f) => Some(f),
                ModuleLookup::Namespace => None,
                _ => return Target::Unresolved,
            };
            if let Some(file) = &file {
                if let Some(sym) = self.symbol_in(file, attr) {
                    let target = Target::symbol(file, &sym.qualified_name);
                    return self.follow_attrs(target, &attrs[i + 1..]);
                }
            }
            let sub = format!("{module}.{attr}");
            if matches!(
                self.lookup_module(&sub),
                ModuleLookup::File(_) | ModuleLookup::Namespace
            ) {
                module = sub;
                continue;
            }
            let Some(file) = file else {
                return Target::Unresolved;
            };
            let target = self.exported(&file, attr, &mut BTreeSet::new());
            return self.follow_attrs(target, &attrs[i + 1..]);
        }
        match self.lookup_module(&module) {
            ModuleLookup::File(f) => Target::module(&f),
            _ => Target::Unresolved,
        }
    }

    /// Applies attribute access `attrs` to an already-resolved target.
    pub fn follow_attrs(&self, target: Target, attrs: &[&str]) -> Target {
        if attrs.is_empty() {
            return target;
        }
        match target {
            Target::Internal {
                file_path,
                qualified_name: None,
            } => {
                let dotted = module_name(&file_path);
                self.resolve_in_module(&dotted, attrs)
            }
            Target::Internal {
                file_path,
                qualified_name: Some(q),
            } => {
                let is_class = self
                    .symbol_in(&file_path, &q)
                    .is_some_and(|s| s.kind == SymbolKind::Class);
                if !is_class {
                    return Target::Unresolved;
                }
                let member = format!("{q}.{}", attrs.join("."));
                match self.symbol_in(&file_path, &member) {
                    Some(_) => Target::symbol(&file_path, &member),
                    None => Target::Unresolved,
                }
            }
            other @ (Target::External { .. } | Target::Builtin) => other,
            Target::Unresolved => Target::Unresolved,
        }
    }

    /// Binding for `local_name` in `file` created by `import a.b` style statements.
    pub(crate) fn plain_import_module(&self, file: &str, local_name: &str) -> Option<&str> {
        self.imports_in(file)
            .find(|b| {
                b.local_name == local_name
                    && b.imported.is_none()
                    && b.import_kind != ImportKind::Star
            })
            .and_then(|b| b.module.as_deref())
    }
}

fn single<T: Ord>(set: BTreeSet<T>) -> Option<T> {
    if set.len() == 1 {
        set.into_iter().next()
    } else {
        None
    }
}
