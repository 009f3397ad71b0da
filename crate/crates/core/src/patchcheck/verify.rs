use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::exec::{probe_source, ExecAdapter, PROBE_FILE};
use super::{classify_patch, LineClass, PatchReport};
use crate::error::{Error, Result};
use crate::source::python;
use crate::source::{module_name, split_locator};
use crate::taskgen::transform::{body_after_docstring, find_symbol};
use crate::taskgen::{dependency_comment, GroundTruth, TaskInstance, MASK_LINE};
use crate::tree::{as_text, SourceTree};
use crate::unidiff;
use crate::workspace::Workspace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reason {
    WrongTarget,
    CodeModified,
    MissingDependency,
    ExtraComment,
    DuplicateComment,
    CommentTextMismatch,
    PlacementOutOfTolerance,
    GoldFileUncovered,
    EmptyPatch,
    TestsFailed,
    BodyExtractionFailed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationResult {
    pub instance_id: String,
    pub success: bool,
    pub reasons: Vec<Reason>,
    pub details: BTreeMap<String, String>,
}

impl VerificationResult {
    fn new(
        instance_id: &str,
        reasons: BTreeSet<Reason>,
        details: BTreeMap<String, String>,
    ) -> Self {
        Self {
            instance_id: instance_id.to_string(),
            success: reasons.is_empty(),
            reasons: reasons.into_iter().collect(),
            details,
        }
    }

    fn empty_patch(instance_id: &str) -> Self {
        Self::new(
            instance_id,
            BTreeSet::from([Reason::EmptyPatch]),
            BTreeMap::new(),
        )
    }

    pub fn to_record(&self) -> String {
        serde_json::to_string(self).expect("verification results serialize")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coverage {
    All,
    Any,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerifyOptions {
    /// Lines allowed between a dependency comment and the definition it annotates.
    pub tolerance: usize,
    pub coverage: Coverage,
    pub exec_timeout: Duration,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            tolerance: 2,
            coverage: Coverage::All,
            exec_timeout: Duration::from_secs(120),
        }
    }
}

fn wrong_kind(instance: &TaskInstance, expected: &str) -> Error {
    Error::Kind(format!(
        "{} is {}, not {expected}",
        instance.instance_id, instance.kind
    ))
}

fn has_class(report: &PatchReport, classes: &[LineClass]) -> bool {
    report
        .changed_lines()
        .any(|l| l.class.is_some_and(|c| classes.contains(&c)))
}

/// Success requires a docstring added to the target and nothing but
/// docstring, comment and blank lines changed anywhere.
pub fn verify_func_localize(
    instance: &TaskInstance,
    report: &PatchReport,
    baseline: &SourceTree,
) -> Result<VerificationResult> {
    let GroundTruth::FuncLocalize { target } = &instance.ground_truth else {
        return Err(wrong_kind(instance, "func-localize"));
    };
    if report.is_empty() {
        return Ok(VerificationResult::empty_patch(&instance.instance_id));
    }
    let mut reasons = BTreeSet::new();
    let mut details = BTreeMap::new();
    if has_class(report, &[LineClass::Code]) {
        reasons.insert(Reason::CodeModified);
    }
    let edited = unidiff::apply(baseline, &report.patches)?;
    let (path, qualified) = split_locator(target)
        .ok_or_else(|| Error::Lookup(format!("malformed locator {target:?}")))?;
    let added: BTreeSet<usize> = report
        .added
        .iter()
        .filter(|l| l.path == path)
        .map(|l| l.line)
        .collect();
    let documented = edited
        .text(path)
        .and_then(|text| find_symbol(text, qualified))
        .and_then(|s| s.docstring_span)
        .is_some_and(|(start, end)| (start..=end).any(|l| added.contains(&(l as usize))));
    if !documented {
        reasons.insert(Reason::WrongTarget);
        let elsewhere: BTreeSet<&str> = report
            .added
            .iter()
            .filter(|l| l.class == Some(LineClass::Docstring))
            .map(|l| l.path.as_str())
            .collect();
        if !elsewhere.is_empty() {
            details.insert(
                "docstrings_added_in".into(),
                elsewhere.into_iter().collect::<Vec<_>>().join(","),
            );
        }
    }
    Ok(VerificationResult::new(
        &instance.instance_id,
        reasons,
        details,
    ))
}

/// Files that gained comment lines must cover the gold files; no code may change.
pub fn verify_issue_localize(
    instance: &TaskInstance,
    report: &PatchReport,
    options: &VerifyOptions,
) -> Result<VerificationResult> {
    let GroundTruth::IssueLocalize { gold_files } = &instance.ground_truth else {
        return Err(wrong_kind(instance, "issue-localize"));
    };
    if report.is_empty() {
        return Ok(VerificationResult::empty_patch(&instance.instance_id));
    }
    let predicted = report.commented_files();
    let covered = match options.coverage {
        Coverage::All => gold_files.is_subset(&predicted),
        Coverage::Any => !gold_files.is_disjoint(&predicted),
    };
    let mut reasons = BTreeSet::new();
    if !covered {
        reasons.insert(Reason::GoldFileUncovered);
    }
    if has_class(report, &[LineClass::Code]) {
        reasons.insert(Reason::CodeModified);
    }
    let details = BTreeMap::from([(
        "predicted_files".to_string(),
        predicted.into_iter().collect::<Vec<_>>().join(","),
    )]);
    Ok(VerificationResult::new(
        &instance.instance_id,
        reasons,
        details,
    ))
}

/// Definition anchors (first decorator line, else the `def`/`class` line) of a file.
fn anchors(text: &str) -> BTreeMap<String, usize> {
    python::parsed_file(text)
        .symbols
        .iter()
        .map(|s| {
            let anchor = s.decorator_span.map_or(s.decl_line, |(start, _)| start);
            (s.qualified_name.clone(), anchor as usize)
        })
        .collect()
}

/// Every dependency needs exactly one exact comment inserted at most
/// `tolerance` lines above its anchor; no other comments, no other changes.
pub fn verify_dep_search(
    instance: &TaskInstance,
    report: &PatchReport,
    baseline: &SourceTree,
    options: &VerifyOptions,
) -> Result<VerificationResult> {
    let GroundTruth::DepSearch {
        target,
        dependencies,
    } = &instance.ground_truth
    else {
        return Err(wrong_kind(instance, "dep-search"));
    };
    if report.is_empty() {
        return Ok(VerificationResult::empty_patch(&instance.instance_id));
    }
    let func_name = split_locator(target)
        .map(|(_, q)| q.rsplit('.').next().unwrap_or(q))
        .unwrap_or_default();
    let expected = dependency_comment(func_name);

    let mut file_anchors: BTreeMap<&str, BTreeMap<String, usize>> = BTreeMap::new();
    for line in report.added.iter() {
        if let Some(text) = baseline.text(&line.path) {
            file_anchors
                .entry(line.path.as_str())
                .or_insert_with(|| anchors(text));
        }
    }
    let mut deps: Vec<(&str, &str, usize)> = Vec::new();
    let mut unlocated = Vec::new();
    for dep in dependencies {
        let Some((path, qualified)) = split_locator(dep) else {
            unlocated.push(dep.as_str());
            continue;
        };
        let anchor = file_anchors
            .get(path)
            .and_then(|a| a.get(qualified).copied())
            .or_else(|| {
                baseline
                    .text(path)
                    .and_then(|t| anchors(t).get(qualified).copied())
            });
        match anchor {
            Some(a) => deps.push((dep.as_str(), path, a)),
            None => unlocated.push(dep.as_str()),
        }
    }

    let mut reasons = BTreeSet::new();
    let mut details = BTreeMap::new();
    if !unlocated.is_empty() {
        reasons.insert(Reason::MissingDependency);
        details.insert("unlocated_dependencies".into(), unlocated.join(","));
    }
    if has_class(report, &[LineClass::Code, LineClass::Docstring]) {
        reasons.insert(Reason::CodeModified);
    }

    let tol = options.tolerance;
    let within = |anchor: usize, pos: usize| anchor >= pos && anchor - pos <= tol;
    let mut exact: BTreeMap<&str, usize> = BTreeMap::new();
    let mut mismatched: BTreeSet<&str> = BTreeSet::new();
    for line in report
        .added
        .iter()
        .filter(|l| l.class == Some(LineClass::Comment))
    {
        let text = line.text.trim_start_matches([' ', '\t']);
        let nearest = deps
            .iter()
            .filter(|(_, path, anchor)| *path == line.path && within(*anchor, line.old_position))
            .min_by_key(|(_, _, anchor)| anchor - line.old_position);
        match nearest {
            Some((dep, _, _)) if text == expected => *exact.entry(dep).or_default() += 1,
            Some((dep, _, _)) => {
                mismatched.insert(dep);
                reasons.insert(Reason::CommentTextMismatch);
            }
            None if text == expected => {
                let near_other = file_anchors
                    .get(line.path.as_str())
                    .is_some_and(|a| a.values().any(|&anchor| within(anchor, line.old_position)));
                reasons.insert(if near_other {
                    Reason::ExtraComment
                } else {
                    Reason::PlacementOutOfTolerance
                });
            }
            None => {
                reasons.insert(Reason::ExtraComment);
            }
        }
    }
    let mut missing = Vec::new();
    for (dep, _, _) in &deps {
        match exact.get(dep).copied().unwrap_or(0) {
            0 if !mismatched.contains(dep) => missing.push(*dep),
            0 | 1 => {}
            _ => {
                reasons.insert(Reason::DuplicateComment);
            }
        }
    }
    if !missing.is_empty() {
        reasons.insert(Reason::MissingDependency);
        details.insert("missing_dependencies".into(), missing.join(","));
    }
    Ok(VerificationResult::new(
        &instance.instance_id,
        reasons,
        details,
    ))
}

/// Extracts the target's body from the edited workspace, writes the probe
/// file and runs the instance's test command.
pub fn verify_func_gen(
    instance: &TaskInstance,
    workspace: &Workspace,
    adapter: &dyn ExecAdapter,
    options: &VerifyOptions,
) -> Result<VerificationResult> {
    let GroundTruth::FuncGen {
        target,
        test_command,
        ..
    } = &instance.ground_truth
    else {
        return Err(wrong_kind(instance, "func-gen"));
    };
    let id = instance.instance_id.as_str();
    let failed = |reason: Reason, why: &str| {
        VerificationResult::new(
            id,
            BTreeSet::from([reason]),
            BTreeMap::from([("error".to_string(), why.to_string())]),
        )
    };
    let (path, qualified) = split_locator(target)
        .ok_or_else(|| Error::Lookup(format!("malformed locator {target:?}")))?;
    let current = workspace.read_file(path)?;
    let Some(text) = current.as_deref().and_then(as_text) else {
        return Ok(failed(
            Reason::BodyExtractionFailed,
            "target file is missing",
        ));
    };
    let Some(symbol) = find_symbol(text, qualified) else {
        return Ok(failed(
            Reason::BodyExtractionFailed,
            "target definition not found",
        ));
    };
    let Some((start, end)) = body_after_docstring(text, &symbol) else {
        return Ok(failed(
            Reason::BodyExtractionFailed,
            "body shares the docstring line",
        ));
    };
    let body = &text[start..end];
    if body.trim() == MASK_LINE || workspace.baseline().text(path) == Some(text) {
        return Ok(VerificationResult::empty_patch(id));
    }
    let Some(probe) = probe_source(
        &module_name(path),
        &symbol.name,
        &symbol.signature_text,
        body,
    ) else {
        return Ok(failed(
            Reason::BodyExtractionFailed,
            "signature not recognized",
        ));
    };
    let probe_path = workspace.root_dir.join(PROBE_FILE);
    fs::write(&probe_path, probe).map_err(|e| Error::io(&probe_path, e))?;
    let outcome = adapter.run(
        &workspace.root_dir,
        test_command,
        &[
            ("REPOGYM_PROBE", PROBE_FILE),
            ("REPOGYM_TARGET", target),
            ("REPOGYM_FUNC", &symbol.name),
        ],
        options.exec_timeout,
    );
    let _ = fs::remove_file(&probe_path);
    let outcome = outcome?;
    let mut details = BTreeMap::new();
    details.insert(
        "exit_status".into(),
        outcome
            .exit_status
            .map_or("killed".to_string(), |c| c.to_string()),
    );
    if outcome.timed_out {
        details.insert("timed_out".into(), "true".into());
    }
    let tail: String = {
        let chars: Vec<char> = outcome.output.chars().collect();
        chars[chars.len().saturating_sub(2000)..].iter().collect()
    };
    details.insert("output_tail".into(), tail);
    let reasons = if outcome.passed() {
        BTreeSet::new()
    } else {
        BTreeSet::from([Reason::TestsFailed])
    };
    Ok(VerificationResult::new(id, reasons, details))
}

/// Verifies a patch for one of the three patch-checked kinds against the
/// workspace baseline.
pub fn verify(
    instance: &TaskInstance,
    patch: &str,
    baseline: &SourceTree,
    options: &VerifyOptions,
) -> Result<VerificationResult> {
    let report = classify_patch(patch, baseline)?;
    match &instance.ground_truth {
        GroundTruth::FuncLocalize { .. } => verify_func_localize(instance, &report, baseline),
        GroundTruth::IssueLocalize { .. } => verify_issue_localize(instance, &report, options),
        GroundTruth::DepSearch { .. } => verify_dep_search(instance, &report, baseline, options),
        GroundTruth::FuncGen { .. } => Err(Error::Kind(format!(
            "{} needs a workspace and an execution adapter",
            instance.instance_id
        ))),
    }
}
