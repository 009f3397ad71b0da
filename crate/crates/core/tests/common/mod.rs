//! Random Python mini-repositories with their intended call dependencies.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use repogym::patchcheck::{
    verify, verify_func_gen, ShellAdapter, VerificationResult, VerifyOptions,
};
use repogym::source::index_tree;
use repogym::taskgen::{apply_transform, GenOptions, Generator, RedactionProvider};
use repogym::unidiff::{diff_trees, DEFAULT_CONTEXT};
use repogym::{SourceTree, TaskInstance, TaskKind, Workspace};

pub fn fixture_dir(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

pub fn minirepo_a() -> SourceTree {
    SourceTree::read_dir(&fixture_dir("minirepo-A")).unwrap().0
}

pub struct MiniRepo {
    pub tree: SourceTree,
    /// Caller locator to the locators it calls directly, for every function and method.
    pub intent: BTreeMap<String, BTreeSet<String>>,
    /// Some call names a definition that another file defines too.
    pub shadowing: bool,
}

const FUNCS: &[&str] = &[
    "helper", "load", "parse", "render", "check", "build", "merge", "split",
];
const CLASSES: &[&str] = &["Widget", "Store", "Engine"];
const ERRORS: &[&str] = &["DataError", "ConfigError"];
const DOCS: &[&str] = &[
    "\"\"\"Process the given value and return a result.\"\"\"",
    "\"\"\"Combine the inputs.\n\n    The extra argument is optional.\n    \"\"\"",
    "\"\"\"Return a normalized copy of the input.\"\"\"",
];

#[derive(Clone, Copy, PartialEq)]
enum DefKind {
    Func,
    Class,
    Error,
}

struct Def {
    file: usize,
    name: String,
    kind: DefKind,
}

struct FileDraft {
    path: String,
    module: String,
    /// name -> file index it is imported from.
    from_imports: BTreeMap<String, usize>,
    module_aliases: BTreeSet<usize>,
    uses_json: bool,
    uses_numpy: bool,
}

fn alias(file: usize) -> String {
    format!("m{file}")
}

struct Builder<'r> {
    rng: &'r mut ChaCha8Rng,
    files: Vec<FileDraft>,
    defs: Vec<Def>,
    shadowing: bool,
}

impl Builder<'_> {
    fn defined_in(&self, file: usize, name: &str) -> bool {
        self.defs.iter().any(|d| d.file == file && d.name == name)
    }

    fn definitions_named(&self, name: &str) -> usize {
        self.defs.iter().filter(|d| d.name == name).count()
    }

    /// Expression naming `def` from inside `file`, adding the import it needs.
    fn reference(&mut self, file: usize, def: usize) -> String {
        let (target, name) = (self.defs[def].file, self.defs[def].name.clone());
        if self.definitions_named(&name) > 1 {
            self.shadowing = true;
        }
        if target == file {
            return name;
        }
        let clash = self.defined_in(file, &name)
            || self.files[file]
                .from_imports
                .get(&name)
                .is_some_and(|f| *f != target);
        if !clash && self.rng.gen_bool(0.6) {
            self.files[file].from_imports.insert(name.clone(), target);
            name
        } else {
            self.files[file].module_aliases.insert(target);
            format!("{}.{name}", alias(target))
        }
    }

    /// Body lines (indent 1 level below `indent`) and the dependencies they create.
    fn body(
        &mut self,
        file: usize,
        own: &str,
        indent: &str,
        is_method: bool,
        locator_prefix: &str,
    ) -> (Vec<String>, BTreeSet<String>) {
        let i = format!("{indent}    ");
        let mut lines = Vec::new();
        let mut deps = BTreeSet::new();
        let statements = self.rng.gen_range(0..6);
        for k in 0..statements {
            match self.rng.gen_range(0..10) {
                0..=4 => {
                    let def = self.rng.gen_range(0..self.defs.len());
                    let callee = self.reference(file, def);
                    let d = &self.defs[def];
                    let target = format!("{}:{}", self.files[d.file].path, d.name);
                    match d.kind {
                        DefKind::Func => lines.push(format!("{i}{callee}(value)")),
                        DefKind::Class => lines.push(format!("{i}obj{k} = {callee}()")),
                        DefKind::Error => {
                            lines.push(format!("{i}if value is None:"));
                            lines.push(format!("{i}    raise {callee}(\"bad input\")"));
                        }
                    }
                    if !(d.kind == DefKind::Func && d.name == own && d.file == file && !is_method) {
                        deps.insert(target);
                    }
                }
                5 => lines.push(format!("{i}total = len(value)")),
                6 => {
                    self.files[file].uses_json = true;
                    lines.push(format!("{i}text = json.dumps(value)"));
                }
                7 => {
                    if is_method {
                        lines.push(format!("{i}self.reset()"));
                    } else {
                        lines.push(format!("{i}value.run()"));
                    }
                }
                8 => {
                    self.files[file].uses_numpy = true;
                    lines.push(format!("{i}arr = np.array(value)"));
                }
                _ => {
                    let inner = format!("inner{k}");
                    lines.push(format!("{i}def {inner}(v):"));
                    lines.push(format!("{i}    return v"));
                    lines.push(format!("{i}{inner}(value)"));
                    deps.insert(format!("{locator_prefix}.{inner}"));
                }
            }
        }
        lines.push(format!("{i}return value"));
        (lines, deps)
    }
}

/// Builds a repository of 3 to 10 files from `seed`.
pub fn mini_repo(seed: u64) -> MiniRepo {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_files = rng.gen_range(3..=10);
    let mut files = Vec::new();
    let mut defs = Vec::new();
    for f in 0..n_files {
        let pkg = rng.gen_range(0..3);
        let path = format!("pkg{pkg}/mod{f}.py");
        let module = format!("pkg{pkg}.mod{f}");
        let n_funcs = rng.gen_range(1..=4);
        let mut names: Vec<&str> = FUNCS.to_vec();
        names.shuffle(&mut rng);
        for name in &names[..n_funcs] {
            defs.push(Def {
                file: f,
                name: name.to_string(),
                kind: DefKind::Func,
            });
        }
        if rng.gen_bool(0.5) {
            let c = CLASSES.choose(&mut rng).unwrap();
            defs.push(Def {
                file: f,
                name: c.to_string(),
                kind: DefKind::Class,
            });
        }
        if rng.gen_bool(0.3) {
            let e = ERRORS.choose(&mut rng).unwrap();
            defs.push(Def {
                file: f,
                name: e.to_string(),
                kind: DefKind::Error,
            });
        }
        files.push(FileDraft {
            path,
            module,
            from_imports: BTreeMap::new(),
            module_aliases: BTreeSet::new(),
            uses_json: false,
            uses_numpy: false,
        });
    }
    let mut b = Builder {
        rng: &mut rng,
        files,
        defs,
        shadowing: false,
    };
    let mut intent = BTreeMap::new();
    let mut bodies: Vec<Vec<String>> = vec![Vec::new(); n_files];
    for d in 0..b.defs.len() {
        let (file, name, kind) = (b.defs[d].file, b.defs[d].name.clone(), b.defs[d].kind);
        let path = b.files[file].path.clone();
        let mut out = Vec::new();
        match kind {
            DefKind::Func => {
                let decorated = b.rng.gen_bool(0.2);
                if decorated {
                    out.push("@traced".to_string());
                }
                if b.rng.gen_bool(0.2) {
                    out.push(format!("def {name}(\n    value,\n    extra=None,\n):"));
                } else {
                    out.push(format!("def {name}(value, extra=None):"));
                }
                if b.rng.gen_bool(0.6) {
                    out.push(format!("    {}", DOCS.choose(b.rng).unwrap()));
                }
                let locator = format!("{path}:{name}");
                let (lines, deps) = b.body(file, &name, "", false, &locator);
                out.extend(lines);
                if decorated {
                    intent
                        .entry(format!("{path}:traced"))
                        .or_insert_with(BTreeSet::new);
                }
                intent.insert(locator, deps);
            }
            DefKind::Class => {
                out.push(format!("class {name}:"));
                if b.rng.gen_bool(0.5) {
                    out.push("    \"\"\"A small component.\"\"\"".to_string());
                    out.push(String::new());
                }
                out.push("    def run(self, value):".to_string());
                if b.rng.gen_bool(0.6) {
                    out.push(format!("        {}", DOCS[0]));
                }
                let locator = format!("{path}:{name}.run");
                let (lines, deps) = b.body(file, "run", "    ", true, &locator);
                out.extend(lines);
                intent.insert(locator, deps);
                out.push(String::new());
                out.push("    def reset(self):".to_string());
                out.push("        return None".to_string());
                intent.insert(format!("{path}:{name}.reset"), BTreeSet::new());
            }
            DefKind::Error => {
                out.push(format!("class {name}(Exception):"));
                out.push("    pass".to_string());
            }
        }
        bodies[file].push(out.join("\n"));
    }
    let shadowing = b.shadowing;
    let mut tree = SourceTree::new();
    for (f, draft) in b.files.iter().enumerate() {
        let mut text = String::new();
        if draft.uses_json {
            text.push_str("import json\n");
        }
        if draft.uses_numpy {
            text.push_str("import numpy as np\n");
        }
        for target in &draft.module_aliases {
            text.push_str(&format!(
                "import {} as {}\n",
                b.files[*target].module,
                alias(*target)
            ));
        }
        let mut by_file: BTreeMap<usize, Vec<&str>> = BTreeMap::new();
        for (name, target) in &draft.from_imports {
            by_file.entry(*target).or_default().push(name);
        }
        for (target, names) in by_file {
            text.push_str(&format!(
                "from {} import {}\n",
                b.files[target].module,
                names.join(", ")
            ));
        }
        if !text.is_empty() {
            text.push_str("\n\n");
        }
        if intent.contains_key(&format!("{}:traced", draft.path)) {
            text.push_str("def traced(fn):\n    return fn\n\n\n");
        }
        text.push_str(&bodies[f].join("\n\n\n"));
        text.push('\n');
        tree.insert(draft.path.clone(), text);
    }
    MiniRepo {
        tree,
        intent,
        shadowing,
    }
}

/// Test command that only requires the reconstructed function to compile.
pub const COMPILE_PROBE: &str = "python3 -m py_compile \"$REPOGYM_PROBE\"";

/// Every instance the generators accept on `tree`, plus one issue-localize
/// instance whose fix touches up to two files.
pub fn generate_all(tree: &SourceTree, repo_id: &str, seed: u64) -> Vec<TaskInstance> {
    let snap = index_tree(tree, repo_id, "c0");
    let generator = Generator::new(&snap, tree);
    let options = GenOptions {
        dep_range: (1, usize::MAX),
        test_command: COMPILE_PROBE.into(),
    };
    let mut out = Vec::new();
    for kind in [
        TaskKind::FuncLocalize,
        TaskKind::DepSearch,
        TaskKind::FuncGen,
    ] {
        out.extend(
            generator
                .generate(kind, &RedactionProvider, &options)
                .instances,
        );
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut paths: Vec<&str> = tree.paths().collect();
    paths.shuffle(&mut rng);
    let mut fixed = tree.clone();
    for p in paths.iter().take(rng.gen_range(1..=2)) {
        let text = format!("{}\nFIXED = True\n", tree.text(p).unwrap());
        fixed.insert(p.to_string(), text);
    }
    let gold = diff_trees(tree, &fixed, DEFAULT_CONTEXT);
    out.push(
        generator
            .issue_localize("Calling the entry point with None crashes.", &gold)
            .unwrap(),
    );
    out
}

/// Verifies `patch` for any kind; func-gen runs in a scratch workspace under `scratch`.
pub fn verify_any(
    instance: &TaskInstance,
    original: &SourceTree,
    patch: &str,
    scratch: &Path,
) -> VerificationResult {
    let (baseline, _) = apply_transform(original, &instance.transform).unwrap();
    if instance.kind != TaskKind::FuncGen {
        return verify(instance, patch, &baseline, &VerifyOptions::default()).unwrap();
    }
    let dir = scratch.join(&instance.instance_id);
    let mut ws = Workspace::create(instance.instance_id.clone(), dir, baseline).unwrap();
    ws.apply_patch(patch).unwrap();
    let r = verify_func_gen(instance, &ws, &ShellAdapter, &VerifyOptions::default()).unwrap();
    ws.remove().unwrap();
    r
}

/// Applies 1 to 6 random line- and file-level edits: insertions, deletions,
/// replacements, new and deleted files, and trailing-newline changes.
pub fn random_edit(tree: &SourceTree, rng: &mut ChaCha8Rng) -> SourceTree {
    let mut out = tree.clone();
    for _ in 0..rng.gen_range(1..=6) {
        let paths: Vec<String> = out.paths().map(str::to_string).collect();
        let op = rng.gen_range(0..8);
        if paths.is_empty() || op == 6 {
            let name = format!("new{}/f{}.py", rng.gen_range(0..3), rng.gen_range(0..1000));
            let lines = rng.gen_range(0..5);
            let text: String = (0..lines).map(|i| format!("x{i} = {i}\n")).collect();
            out.insert(name, text);
            continue;
        }
        let path = paths.choose(rng).unwrap().clone();
        if op == 7 {
            out.remove(&path);
            continue;
        }
        let text = out.text(&path).unwrap().to_string();
        let mut lines: Vec<String> = text.split_inclusive('\n').map(str::to_string).collect();
        let at = rng.gen_range(0..=lines.len());
        match op {
            0 | 1 => {
                for k in 0..rng.gen_range(1..4) {
                    lines.insert(at, format!("    # note {k}\n"));
                }
            }
            2 if !lines.is_empty() => {
                let at = at.min(lines.len() - 1);
                let end = (at + rng.gen_range(1..4)).min(lines.len());
                lines.drain(at..end);
            }
            3 if !lines.is_empty() => {
                let at = at.min(lines.len() - 1);
                lines[at] = format!("value = {}\n", rng.gen_range(0..100));
            }
            4 => {
                if let Some(last) = lines.last_mut() {
                    if last.ends_with('\n') {
                        last.pop();
                    } else {
                        last.push('\n');
                    }
                }
            }
            _ => lines.clear(),
        }
        out.insert(path, lines.concat());
    }
    out
}

/// A repository of `modules` files with `per_module` functions each: one class
/// with two methods per file, the rest module-level functions calling their
/// neighbours and names imported from the previous module.
pub fn inflated_repo(modules: usize, per_module: usize, seed: u64) -> SourceTree {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tree = SourceTree::new();
    for m in 0..modules {
        let mut text = String::from("import os\n");
        if m > 0 {
            text.push_str(&format!(
                "from pkg{}.mod{} import f{}_0, f{}_1, Model{}\n",
                (m - 1) / 10,
                m - 1,
                m - 1,
                m - 1,
                m - 1
            ));
        }
        text.push_str("\n\n");
        text.push_str(&format!(
            "class Model{m}:\n    \"\"\"Holds state for a stage.\"\"\"\n\n    def load(self, value):\n        \"\"\"Load a value.\"\"\"\n        return f{m}_0(value)\n\n    def save(self, value):\n        return os.path.join(str(value), \"out\")\n\n\n"
        ));
        for j in 0..per_module.saturating_sub(2) {
            text.push_str(&format!("def f{m}_{j}(value, extra=None):\n"));
            if rng.gen_bool(0.5) {
                text.push_str("    \"\"\"Transform the value for the next stage.\"\"\"\n");
            }
            let calls = rng.gen_range(0..=3);
            for c in 0..calls {
                let line = match (c + j) % 4 {
                    0 if j > 0 => format!("    f{m}_{}(value)\n", rng.gen_range(0..j)),
                    1 if m > 0 => format!("    f{}_{}(value)\n", m - 1, rng.gen_range(0..2)),
                    2 if m > 0 => format!("    obj = Model{}()\n", m - 1),
                    _ => format!("    size = len(value) + {c}\n"),
                };
                text.push_str(&line);
            }
            text.push_str("    if value is None:\n        raise ValueError(\"missing\")\n    return value\n\n\n");
        }
        tree.insert(format!("pkg{}/mod{m}.py", m / 10), text);
    }
    tree
}
