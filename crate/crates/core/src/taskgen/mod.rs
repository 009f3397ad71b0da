//! Task instances for the four task kinds: construction, prompts, transforms
//! and reference (gold) solutions.

pub mod describe;
pub mod prompt;
pub mod transform;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::depgraph::direct_dependencies;
use crate::error::{Error, Result};
use crate::source::python::line_start_byte;
use crate::source::{split_locator, RepoSnapshot, SymbolDef, SymbolKind};
use crate::tree::SourceTree;
use crate::unidiff;

pub use describe::{check_leakage, DescriptionProvider, ExternalDescriber, RedactionProvider};
pub use prompt::{dependency_comment, render_prompt, MASK_LINE};
pub use transform::{apply_transform, TextEdit, WorkspaceTransform};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TaskKind {
    FuncLocalize,
    IssueLocalize,
    DepSearch,
    FuncGen,
}

impl TaskKind {
    pub const ALL: [TaskKind; 4] = [
        TaskKind::FuncLocalize,
        TaskKind::IssueLocalize,
        TaskKind::DepSearch,
        TaskKind::FuncGen,
    ];

    pub fn slug(self) -> &'static str {
        match self {
            TaskKind::FuncLocalize => "func-localize",
            TaskKind::IssueLocalize => "issue-localize",
            TaskKind::DepSearch => "dep-search",
            TaskKind::FuncGen => "func-gen",
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

impl FromStr for TaskKind {
    type Err = Error;

    /// Accepts `dep-search`, `dep_search` and `DepSearch` spellings.
    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(char::is_ascii_alphanumeric)
            .map(|c| c.to_ascii_lowercase())
            .collect();
        TaskKind::ALL
            .into_iter()
            .find(|k| k.slug().replace('-', "") == key)
            .ok_or_else(|| Error::Kind(format!("unknown task kind {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum GroundTruth {
    FuncLocalize {
        target: String,
    },
    IssueLocalize {
        gold_files: BTreeSet<String>,
    },
    DepSearch {
        target: String,
        dependencies: BTreeSet<String>,
    },
    FuncGen {
        target: String,
        original_body_text: String,
        test_command: String,
    },
}

impl GroundTruth {
    pub fn kind(&self) -> TaskKind {
        match self {
            GroundTruth::FuncLocalize { .. } => TaskKind::FuncLocalize,
            GroundTruth::IssueLocalize { .. } => TaskKind::IssueLocalize,
            GroundTruth::DepSearch { .. } => TaskKind::DepSearch,
            GroundTruth::FuncGen { .. } => TaskKind::FuncGen,
        }
    }

    pub fn target(&self) -> Option<&str> {
        match self {
            GroundTruth::FuncLocalize { target }
            | GroundTruth::DepSearch { target, .. }
            | GroundTruth::FuncGen { target, .. } => Some(target),
            GroundTruth::IssueLocalize { .. } => None,
        }
    }

    /// Files a correct solution edits.
    pub fn gold_files(&self) -> BTreeSet<String> {
        let file_of = |loc: &str| split_locator(loc).map_or(loc, |(f, _)| f).to_string();
        match self {
            GroundTruth::IssueLocalize { gold_files } => gold_files.clone(),
            GroundTruth::DepSearch { dependencies, .. } => {
                dependencies.iter().map(|d| file_of(d)).collect()
            }
            GroundTruth::FuncLocalize { target } | GroundTruth::FuncGen { target, .. } => {
                BTreeSet::from([file_of(target)])
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskInstance {
    pub instance_id: String,
    pub kind: TaskKind,
    pub repo_id: String,
    pub commit_id: String,
    pub prompt_text: String,
    pub transform: WorkspaceTransform,
    pub ground_truth: GroundTruth,
}

impl TaskInstance {
    /// Checks that kind, transform and ground truth describe the same task.
    pub fn validate(&self) -> Result<()> {
        let transform_ok = match (&self.transform, &self.ground_truth) {
            (
                WorkspaceTransform::None,
                GroundTruth::IssueLocalize { .. } | GroundTruth::DepSearch { .. },
            ) => true,
            (
                WorkspaceTransform::RemoveDocstring { target },
                GroundTruth::FuncLocalize { target: t },
            )
            | (WorkspaceTransform::MaskBody { target }, GroundTruth::FuncGen { target: t, .. }) => {
                target == t
            }
            _ => false,
        };
        if self.ground_truth.kind() != self.kind || !transform_ok {
            return Err(Error::Record(format!(
                "{}: kind, transform and ground truth disagree",
                self.instance_id
            )));
        }
        Ok(())
    }

    pub fn to_record(&self) -> String {
        serde_json::to_string(self).expect("task instances serialize")
    }

    pub fn from_record(line: &str) -> Result<Self> {
        let inst: TaskInstance =
            serde_json::from_str(line).map_err(|e| Error::Record(e.to_string()))?;
        inst.validate()?;
        Ok(inst)
    }
}

/// Stable identifier from the generation key.
pub fn instance_id(repo_id: &str, commit_id: &str, kind: TaskKind, key: &str) -> String {
    let mut h = Sha256::new();
    for part in [repo_id, commit_id, kind.slug(), key] {
        h.update(part.as_bytes());
        h.update([0]);
    }
    let digest = h.finalize();
    let hex: String = digest[..8].iter().map(|b| format!("{b:02x}")).collect();
    format!("{}-{hex}", kind.slug())
}

/// Last line of the definition header, derived from the verbatim signature.
fn header_end_line(symbol: &SymbolDef) -> u32 {
    symbol.decl_line + symbol.signature_text.lines().count().saturating_sub(1) as u32
}

fn inline_body(symbol: &SymbolDef) -> bool {
    symbol.body_span.0 <= header_end_line(symbol)
}

fn require_callable(symbol: &SymbolDef) -> Result<()> {
    if symbol.kind.is_callable() {
        Ok(())
    } else {
        Err(Error::Kind(format!("{} is a class", symbol.locator)))
    }
}

/// Generates instances from one indexed repository tree.
pub struct Generator<'a> {
    pub snapshot: &'a RepoSnapshot,
    pub tree: &'a SourceTree,
    /// Value of `{workspace_dir}`; defaults to `/workspace/<repo_id>`.
    pub workspace_dir: String,
}

impl<'a> Generator<'a> {
    pub fn new(snapshot: &'a RepoSnapshot, tree: &'a SourceTree) -> Self {
        Self {
            snapshot,
            tree,
            workspace_dir: format!("/workspace/{}", snapshot.repo_id()),
        }
    }

    /// Edit made by `transform`, without building the transformed tree.
    fn edit(&self, transform: &WorkspaceTransform) -> Result<Option<TextEdit>> {
        transform::transform_edit(self.tree, transform, &transform::find_symbol)
    }

    fn instance(
        &self,
        kind: TaskKind,
        key: &str,
        prompt_text: String,
        transform: WorkspaceTransform,
        ground_truth: GroundTruth,
    ) -> TaskInstance {
        TaskInstance {
            instance_id: instance_id(
                self.snapshot.repo_id(),
                self.snapshot.commit_id(),
                kind,
                key,
            ),
            kind,
            repo_id: self.snapshot.repo_id().to_string(),
            commit_id: self.snapshot.commit_id().to_string(),
            prompt_text,
            transform,
            ground_truth,
        }
    }

    fn own<'s>(&'s self, target: &SymbolDef) -> Result<&'a SymbolDef> {
        self.snapshot
            .symbol(&target.locator)
            .ok_or_else(|| Error::Lookup(format!("{} is not in the snapshot", target.locator)))
    }

    pub fn func_localize(
        &self,
        target: &SymbolDef,
        provider: &dyn DescriptionProvider,
    ) -> Result<TaskInstance> {
        let target = self.own(target)?;
        if inline_body(target) {
            return Err(Error::Rejected(format!(
                "{}: body shares the definition line",
                target.locator
            )));
        }
        let transform = WorkspaceTransform::RemoveDocstring {
            target: target.locator.clone(),
        };
        self.edit(&transform)
            .map_err(|e| Error::Rejected(format!("{}: {e}", target.locator)))?;
        let description = provider.describe(target, self.snapshot)?;
        check_leakage(&description, target)?;
        let noun = if target.kind == SymbolKind::Class {
            "class"
        } else {
            "function"
        };
        let prompt_text = render_prompt(
            "FuncLocalize",
            &[
                ("workspace_dir", &self.workspace_dir),
                ("module_type", noun),
                ("brief_description", &description),
                ("target_type", noun),
            ],
        )?;
        Ok(self.instance(
            TaskKind::FuncLocalize,
            &target.locator,
            prompt_text,
            transform,
            GroundTruth::FuncLocalize {
                target: target.locator.clone(),
            },
        ))
    }

    pub fn issue_localize(&self, issue_text: &str, gold_patch: &str) -> Result<TaskInstance> {
        let patches = unidiff::parse(gold_patch)?;
        let gold_files: BTreeSet<String> = patches
            .iter()
            .filter_map(|p| p.old_path.as_deref())
            .filter(|p| self.snapshot.file(p).is_some())
            .map(str::to_string)
            .collect();
        if gold_files.is_empty() {
            return Err(Error::EmptyGroundTruth);
        }
        let prompt_text = render_prompt("IssueLocalize", &[("problem_statement", issue_text)])?;
        let key = format!(
            "{}\0{}",
            crate::tree::digest(issue_text.as_bytes()),
            crate::tree::digest(gold_patch.as_bytes())
        );
        Ok(self.instance(
            TaskKind::IssueLocalize,
            &key,
            prompt_text,
            WorkspaceTransform::None,
            GroundTruth::IssueLocalize { gold_files },
        ))
    }

    pub fn dep_search(
        &self,
        target: &SymbolDef,
        dep_range: (usize, usize),
    ) -> Result<TaskInstance> {
        let target = self.own(target)?;
        let record = direct_dependencies(target, self.snapshot)?;
        let n = record.dependencies.len();
        if n < dep_range.0 || n > dep_range.1 {
            return Err(Error::Rejected(format!(
                "{}: {n} dependencies outside [{}, {}]",
                target.locator, dep_range.0, dep_range.1
            )));
        }
        let line = target.decl_line.to_string();
        let prompt_text = render_prompt(
            "DepSearch",
            &[
                ("workspace_dir", &self.workspace_dir),
                ("func_name", target.name()),
                ("line_number", &line),
                ("file_path", &target.file_path),
            ],
        )?;
        Ok(self.instance(
            TaskKind::DepSearch,
            &target.locator,
            prompt_text,
            WorkspaceTransform::None,
            GroundTruth::DepSearch {
                target: target.locator.clone(),
                dependencies: record.dependencies,
            },
        ))
    }

    pub fn func_gen(&self, target: &SymbolDef, test_command: &str) -> Result<TaskInstance> {
        let target = self.own(target)?;
        require_callable(target)?;
        let Some(docstring) = target.docstring.as_deref() else {
            return Err(Error::Rejected(format!("{}: no docstring", target.locator)));
        };
        if inline_body(target) {
            return Err(Error::Rejected(format!(
                "{}: body shares the definition line",
                target.locator
            )));
        }
        let transform = WorkspaceTransform::MaskBody {
            target: target.locator.clone(),
        };
        let edit = self.edit(&transform)?;
        let original_body_text = edit.map(|e| e.removed).unwrap_or_default();
        let prompt_text = render_prompt(
            "FuncGen",
            &[
                ("workspace_dir", &self.workspace_dir),
                ("func_name", target.name()),
                ("file_path", &target.file_path),
                ("docstring", docstring),
            ],
        )?;
        Ok(self.instance(
            TaskKind::FuncGen,
            &target.locator,
            prompt_text,
            transform,
            GroundTruth::FuncGen {
                target: target.locator.clone(),
                original_body_text,
                test_command: test_command.to_string(),
            },
        ))
    }
}

/// Settings for [`Generator::generate`].
#[derive(Debug, Clone)]
pub struct GenOptions {
    pub dep_range: (usize, usize),
    pub test_command: String,
}

impl Default for GenOptions {
    fn default() -> Self {
        Self {
            dep_range: (1, 3),
            test_command: "python -m pytest -q".into(),
        }
    }
}

/// Instances built for one kind, plus the candidates that were turned down.
#[derive(Debug, Default)]
pub struct GenOutcome {
    pub instances: Vec<TaskInstance>,
    pub rejected: Vec<(String, Error)>,
}

impl Generator<'_> {
    /// Symbols considered for `kind`: top-level and class-member definitions.
    /// Issue localization is driven by issue records, so it has none.
    pub fn candidates(&self, kind: TaskKind) -> Vec<&SymbolDef> {
        let wanted = |s: &&SymbolDef| match kind {
            TaskKind::FuncLocalize => true,
            TaskKind::DepSearch | TaskKind::FuncGen => s.kind.is_callable(),
            TaskKind::IssueLocalize => false,
        };
        self.snapshot
            .symbols()
            .iter()
            .filter(|s| !s.nested)
            .filter(wanted)
            .collect()
    }

    /// Runs the generator for `kind` over every candidate symbol.
    pub fn generate(
        &self,
        kind: TaskKind,
        provider: &dyn DescriptionProvider,
        options: &GenOptions,
    ) -> GenOutcome {
        let mut out = GenOutcome::default();
        for symbol in self.candidates(kind) {
            let made = match kind {
                TaskKind::FuncLocalize => self.func_localize(symbol, provider),
                TaskKind::DepSearch => self.dep_search(symbol, options.dep_range),
                TaskKind::FuncGen => self.func_gen(symbol, &options.test_command),
                TaskKind::IssueLocalize => continue,
            };
            match made {
                Ok(instance) => out.instances.push(instance),
                Err(e) => out.rejected.push((symbol.locator.clone(), e)),
            }
        }
        out
    }
}

/// Text a gold Func-Localize solution writes when the target had no docstring.
pub const AUTHORED_DOCSTRING: &str = "\"\"\"Describe the behaviour of this definition.\"\"\"";

/// Comment the gold Issue-Localize solution places on line 1 of each gold file.
pub const ISSUE_COMMENT: &str = "# localization: this file is edited by the fix";

/// Workspace baseline (transform applied) and the tree a correct agent would leave.
#[derive(Debug, Clone)]
pub struct GoldSolution {
    pub baseline: SourceTree,
    pub solved: SourceTree,
}

impl GoldSolution {
    pub fn patch(&self) -> String {
        unidiff::diff_trees(&self.baseline, &self.solved, unidiff::DEFAULT_CONTEXT)
    }
}

fn insert_at(text: &str, offset: usize, s: &str) -> String {
    format!("{}{s}{}", &text[..offset], &text[offset..])
}

fn indentation(text: &str, line_start: usize) -> &str {
    let rest = &text[line_start..];
    &rest[..rest.len() - rest.trim_start_matches([' ', '\t']).len()]
}

/// Byte offset of the start of 1-based `line`.
fn offset_of_line(text: &str, line: u32) -> usize {
    if line <= 1 {
        return 0;
    }
    text.match_indices('\n')
        .nth(line as usize - 2)
        .map_or(text.len(), |(i, _)| i + 1)
}

/// Builds the reference solution for `instance` on the untransformed repository tree.
pub fn gold_solution(instance: &TaskInstance, original: &SourceTree) -> Result<GoldSolution> {
    let (baseline, edit) = apply_transform(original, &instance.transform)?;
    let mut solved = baseline.clone();
    match &instance.ground_truth {
        GroundTruth::FuncLocalize { target } => match edit {
            Some(edit) => {
                let text = baseline.text(&edit.path).unwrap_or_default();
                solved.insert(
                    edit.path.clone(),
                    insert_at(text, edit.offset, &edit.removed),
                );
            }
            None => {
                let (text, symbol) = transform::locate(&baseline, target)?;
                if symbol.inline_body() {
                    return Err(Error::Rejected(format!(
                        "{target}: body shares the definition line"
                    )));
                }
                let start = line_start_byte(text.as_bytes(), symbol.body_bytes.start);
                let indent = indentation(text, start);
                let doc = format!("{indent}{AUTHORED_DOCSTRING}\n");
                let path = split_locator(target).map(|(p, _)| p).unwrap_or_default();
                solved.insert(path.to_string(), insert_at(text, start, &doc));
            }
        },
        GroundTruth::IssueLocalize { gold_files } => {
            for path in gold_files {
                let text = baseline
                    .text(path)
                    .ok_or_else(|| Error::Integrity(format!("{path} is missing from the tree")))?;
                solved.insert(path.clone(), format!("{ISSUE_COMMENT}\n{text}"));
            }
        }
        GroundTruth::DepSearch {
            target,
            dependencies,
        } => {
            let func_name = split_locator(target)
                .map(|(_, q)| q.rsplit('.').next().unwrap_or(q))
                .unwrap_or_default();
            let comment = dependency_comment(func_name);
            let mut by_file: BTreeMap<&str, Vec<u32>> = BTreeMap::new();
            for dep in dependencies {
                let (_, symbol) = transform::locate(&baseline, dep)?;
                let anchor = symbol.decorator_span.map_or(symbol.decl_line, |(s, _)| s);
                let path = split_locator(dep).map(|(p, _)| p).unwrap_or_default();
                by_file.entry(path).or_default().push(anchor);
            }
            for (path, mut anchors) in by_file {
                anchors.sort_unstable();
                anchors.dedup();
                let mut text = baseline.text(path).unwrap_or_default().to_string();
                for anchor in anchors.into_iter().rev() {
                    let at = offset_of_line(&text, anchor);
                    let indent = indentation(&text, at).to_string();
                    text = insert_at(&text, at, &format!("{indent}{comment}\n"));
                }
                solved.insert(path.to_string(), text);
            }
        }
        GroundTruth::FuncGen { .. } => {
            if let Some(edit) = edit {
                let text = baseline.text(&edit.path).unwrap_or_default();
                solved.insert(edit.path.clone(), edit.revert(text)?);
            }
        }
    }
    Ok(GoldSolution { baseline, solved })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::source::index_tree;

    const A: &str = "from pkg.util import helper\n\nclass Widget:\n    def run(self):\n        return 1\n\n\ndef top():\n    \"\"\"Run the pipeline.\"\"\"\n    helper()\n    w = Widget()\n    raise ValueError(\"bad\")\n";

    fn fixture() -> (SourceTree, RepoSnapshot) {
        let mut tree = SourceTree::new();
        tree.insert("pkg/__init__.py", "");
        tree.insert(
            "pkg/util.py",
            "@staticmethod\ndef helper():\n    return 2\n",
        );
        tree.insert("pkg/a.py", A);
        let snap = index_tree(&tree, "r", "c");
        (tree, snap)
    }

    #[test]
    fn kinds_parse_in_every_spelling() {
        for k in TaskKind::ALL {
            assert_eq!(k.slug().parse::<TaskKind>().unwrap(), k);
            assert_eq!(format!("{k:?}").parse::<TaskKind>().unwrap(), k);
        }
        assert!("refactor".parse::<TaskKind>().is_err());
    }

    #[test]
    fn dep_search_gold_places_comments_above_decorators() {
        let (tree, snap) = fixture();
        let g = Generator::new(&snap, &tree);
        let inst = g
            .dep_search(snap.symbol("pkg/a.py:top").unwrap(), (1, 3))
            .unwrap();
        let gold = gold_solution(&inst, &tree).unwrap();
        assert_eq!(
            gold.solved.text("pkg/util.py").unwrap(),
            "# this function/class is called by the top function\n@staticmethod\ndef helper():\n    return 2\n"
        );
        assert!(gold
            .solved
            .text("pkg/a.py")
            .unwrap()
            .contains("\n# this function/class is called by the top function\nclass Widget:\n"));
        assert!(inst.prompt_text.contains("located at line 8 in `pkg/a.py`"));
    }

    #[test]
    fn ids_are_stable_and_records_round_trip() {
        let (tree, snap) = fixture();
        let g = Generator::new(&snap, &tree);
        let top = snap.symbol("pkg/a.py:top").unwrap();
        let a = g.func_gen(top, "pytest -q").unwrap();
        let b = g.func_gen(top, "pytest -q").unwrap();
        assert_eq!(a.instance_id, b.instance_id);
        assert_ne!(
            a.instance_id,
            g.dep_search(top, (1, 3)).unwrap().instance_id
        );
        assert_eq!(TaskInstance::from_record(&a.to_record()).unwrap(), a);
        match &a.ground_truth {
            GroundTruth::FuncGen {
                original_body_text, ..
            } => assert_eq!(
                original_body_text,
                "    helper()\n    w = Widget()\n    raise ValueError(\"bad\")\n"
            ),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn func_localize_without_docstring_gets_authored_one() {
        let (tree, snap) = fixture();
        let g = Generator::new(&snap, &tree);
        let run = snap.symbol("pkg/a.py:Widget.run").unwrap();
        let inst = g.func_localize(run, &RedactionProvider).unwrap();
        let gold = gold_solution(&inst, &tree).unwrap();
        assert_eq!(gold.baseline, tree);
        assert!(gold
            .patch()
            .contains("+        \"\"\"Describe the behaviour of this definition.\"\"\"\n"));
    }
}
