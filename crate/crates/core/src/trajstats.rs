//! Agent trajectory logs: step categories, command and tool distributions,
//! loop detection and batch metrics.
//!
//! Log format: one JSON object per line. Step lines carry `instance_id`,
//! optional `task`, `index`, `tool`, `args` and `observation_digest`. A line
//! with `"record": "final"` carries `instance_id` and optional `final_patch`
//! and `outcome` for that trajectory.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::patchcheck::VerificationResult;
use crate::taskgen::TaskKind;
use crate::unidiff;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tool {
    ExecuteBash,
    View,
    StrReplace,
    Message,
}

impl Tool {
    pub const ALL: [Tool; 4] = [
        Tool::ExecuteBash,
        Tool::View,
        Tool::StrReplace,
        Tool::Message,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Tool::ExecuteBash => "execute_bash",
            Tool::View => "view",
            Tool::StrReplace => "str_replace",
            Tool::Message => "message",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Step {
    pub tool: Tool,
    pub args: String,
    pub observation_digest: String,
}

impl Step {
    pub fn new(tool: Tool, args: impl Into<String>) -> Self {
        Self {
            tool,
            args: args.into(),
            observation_digest: String::new(),
        }
    }

    /// Leading command of an `execute_bash` step, without path or environment prefix.
    pub fn command(&self) -> Option<&str> {
        if self.tool != Tool::ExecuteBash {
            return None;
        }
        leading_command(&self.args)
    }
}

fn leading_command(cmd: &str) -> Option<&str> {
    cmd.split_whitespace()
        .find(|t| !(t.contains('=') && !t.starts_with('=')) && *t != "sudo" && *t != "(")
        .map(|t| t.rsplit('/').next().unwrap_or(t))
        .map(|t| t.trim_start_matches('('))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepCategory {
    Reasoning,
    RepoExploration,
    ExecutionExisting,
    Implementation,
    Verification,
}

impl StepCategory {
    pub const ALL: [StepCategory; 5] = [
        StepCategory::Reasoning,
        StepCategory::RepoExploration,
        StepCategory::ExecutionExisting,
        StepCategory::Implementation,
        StepCategory::Verification,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StepCategory::Reasoning => "reasoning",
            StepCategory::RepoExploration => "repo_exploration",
            StepCategory::ExecutionExisting => "execution_existing",
            StepCategory::Implementation => "implementation",
            StepCategory::Verification => "verification",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        let s = s.trim().to_ascii_lowercase().replace([' ', '-'], "_");
        Self::ALL.into_iter().find(|c| c.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trajectory {
    pub instance_id: String,
    pub task: Option<TaskKind>,
    pub steps: Vec<Step>,
    pub final_patch: Option<String>,
    pub outcome: Option<VerificationResult>,
}

/// Assigns a category to `steps[index]`, seeing the whole trajectory.
pub trait StepLabeler: Sync {
    fn label(&self, steps: &[Step], index: usize) -> StepCategory;
}

const WRITE: &[&str] = &[
    "touch", "mkdir", "cp", "mv", "rm", "tee", "patch", "truncate",
];
const RUN: &[&str] = &[
    "python",
    "python3",
    "pytest",
    "py.test",
    "tox",
    "nosetests",
    "make",
    "bash",
    "sh",
    "node",
    "npm",
    "pip",
    "pip3",
    "coverage",
    "unittest",
];

fn writes_files(cmd: &str, head: &str) -> bool {
    let redirect = cmd.match_indices('>').any(|(i, _)| {
        let before = cmd[..i].chars().last();
        let after = cmd[i + 1..].chars().next();
        before != Some('2') && before != Some('&') && after != Some('&') && before != Some('-')
    });
    redirect
        || WRITE.contains(&head)
        || (head == "sed" && cmd.split_whitespace().any(|t| t.starts_with("-i")))
        || (head == "git" && cmd.split_whitespace().nth(1) == Some("apply"))
}

/// Default rule set: exploration commands and file views explore, edits and
/// file-writing commands implement, runs before any edit execute existing
/// code, runs after an edit verify, messages reason. Commands matching no rule
/// count as exploration.
#[derive(Debug, Clone, Default)]
pub struct RuleLabeler;

impl StepLabeler for RuleLabeler {
    fn label(&self, steps: &[Step], index: usize) -> StepCategory {
        let step = &steps[index];
        let edited_before = || {
            steps[..index]
                .iter()
                .any(|s| self.label_one(s) == Some(StepCategory::Implementation))
        };
        match self.label_one(step) {
            Some(c) => c,
            None if edited_before() => StepCategory::Verification,
            None => StepCategory::ExecutionExisting,
        }
    }
}

impl RuleLabeler {
    /// Category decidable from the step alone; `None` for program runs.
    fn label_one(&self, step: &Step) -> Option<StepCategory> {
        match step.tool {
            Tool::Message => Some(StepCategory::Reasoning),
            Tool::StrReplace => Some(StepCategory::Implementation),
            Tool::View => Some(StepCategory::RepoExploration),
            Tool::ExecuteBash => {
                let head = step.command().unwrap_or_default();
                if writes_files(&step.args, head) {
                    Some(StepCategory::Implementation)
                } else if RUN.contains(&head) {
                    None
                } else {
                    // grep, find, ls, cat, git and anything else that only reads.
                    Some(StepCategory::RepoExploration)
                }
            }
        }
    }
}

/// Labeler backed by an external classifier (prompt in, category name out).
/// Unparseable answers fall back to the rule set.
pub struct ExternalLabeler<F> {
    classify: F,
}

impl<F: Fn(&str) -> Result<String> + Sync> ExternalLabeler<F> {
    pub fn new(classify: F) -> Self {
        Self { classify }
    }

    pub fn prompt(steps: &[Step], index: usize) -> String {
        let mut out = String::from(
            "Classify the marked agent step as one of: reasoning, repo_exploration, execution_existing, implementation, verification.\n",
        );
        for (i, s) in steps.iter().enumerate() {
            let mark = if i == index { ">>" } else { "  " };
            out.push_str(&format!("{mark} {i} {}: {}\n", s.tool.name(), s.args));
        }
        out
    }
}

impl<F: Fn(&str) -> Result<String> + Sync> StepLabeler for ExternalLabeler<F> {
    fn label(&self, steps: &[Step], index: usize) -> StepCategory {
        (self.classify)(&Self::prompt(steps, index))
            .ok()
            .and_then(|a| StepCategory::parse(&a))
            .unwrap_or_else(|| RuleLabeler.label(steps, index))
    }
}

pub fn categorize_step(steps: &[Step], index: usize) -> StepCategory {
    RuleLabeler.label(steps, index)
}

pub fn categorize(trajectory: &Trajectory, labeler: &dyn StepLabeler) -> Vec<StepCategory> {
    (0..trajectory.steps.len())
        .map(|i| labeler.label(&trajectory.steps, i))
        .collect()
}

/// True when some action repeats three times in a row (same tool, same args).
pub fn detect_loop(trajectory: &Trajectory) -> bool {
    trajectory.steps.windows(3).any(|w| {
        w[1].tool == w[0].tool
            && w[2].tool == w[0].tool
            && w[1].args == w[0].args
            && w[2].args == w[0].args
    })
}

/// Column key for a trajectory's task kind.
pub fn column(task: Option<TaskKind>) -> String {
    task.map_or_else(|| "unlabeled".to_string(), |k| k.slug().to_string())
}

/// Column → row → value.
pub type Table = BTreeMap<String, BTreeMap<String, f64>>;

pub const LISTED_COMMANDS: [&str; 4] = ["grep", "find", "cd", "ls"];

/// Share of each leading command among exploration `execute_bash` steps, per task kind.
pub fn command_distribution(trajectories: &[Trajectory], labeler: &dyn StepLabeler) -> Table {
    let mut counts: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
    for t in trajectories {
        let labels = categorize(t, labeler);
        for (step, label) in t.steps.iter().zip(labels) {
            if label != StepCategory::RepoExploration || step.tool != Tool::ExecuteBash {
                continue;
            }
            let cmd = step.command().unwrap_or_default();
            let row = if LISTED_COMMANDS.contains(&cmd) {
                cmd
            } else {
                "other"
            };
            *counts
                .entry(column(t.task))
                .or_default()
                .entry(row.to_string())
                .or_default() += 1;
        }
    }
    counts
        .into_iter()
        .map(|(col, rows)| {
            let total: usize = rows.values().sum();
            let rows = rows
                .into_iter()
                .map(|(r, c)| (r, 100.0 * c as f64 / total as f64))
                .collect();
            (col, rows)
        })
        .collect()
}

/// Mean number of calls of each tool per trajectory, per task kind.
pub fn tool_distribution(trajectories: &[Trajectory]) -> Table {
    let mut sums: BTreeMap<String, (usize, BTreeMap<Tool, usize>)> = BTreeMap::new();
    for t in trajectories {
        let entry = sums.entry(column(t.task)).or_default();
        entry.0 += 1;
        for s in &t.steps {
            *entry.1.entry(s.tool).or_default() += 1;
        }
    }
    sums.into_iter()
        .map(|(col, (n, per_tool))| {
            let rows = Tool::ALL
                .iter()
                .map(|tool| {
                    let c = per_tool.get(tool).copied().unwrap_or(0);
                    (tool.name().to_string(), c as f64 / n as f64)
                })
                .collect();
            (col, rows)
        })
        .collect()
}

/// Percentage of steps in each category, per task kind.
pub fn component_distribution(trajectories: &[Trajectory], labeler: &dyn StepLabeler) -> Table {
    let mut counts: BTreeMap<String, BTreeMap<StepCategory, usize>> = BTreeMap::new();
    for t in trajectories {
        let col = counts.entry(column(t.task)).or_default();
        for label in categorize(t, labeler) {
            *col.entry(label).or_default() += 1;
        }
    }
    counts
        .into_iter()
        .map(|(col, per_cat)| {
            let total: usize = per_cat.values().sum();
            let rows = StepCategory::ALL
                .iter()
                .map(|c| {
                    let n = per_cat.get(c).copied().unwrap_or(0);
                    let pct = if total == 0 {
                        0.0
                    } else {
                        100.0 * n as f64 / total as f64
                    };
                    (c.name().to_string(), pct)
                })
                .collect();
            (col, rows)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub resolved_pct: f64,
    pub localized_pct: f64,
    pub non_loop_pct: f64,
    pub avg_steps: f64,
}

/// Files named on either side of a patch; empty when it does not parse.
pub fn patch_files(patch: &str) -> BTreeSet<String> {
    unidiff::parse(patch)
        .map(|files| {
            files
                .iter()
                .flat_map(|f| [f.old_path.clone(), f.new_path.clone()])
                .flatten()
                .collect()
        })
        .unwrap_or_default()
}

pub fn compute_metrics(
    batch: &[(Trajectory, VerificationResult, BTreeSet<String>)],
) -> Result<Metrics> {
    if batch.is_empty() {
        return Err(Error::Spec("metrics need at least one trajectory".into()));
    }
    let n = batch.len() as f64;
    let pct = |count: usize| 100.0 * count as f64 / n;
    let resolved = batch.iter().filter(|(_, r, _)| r.success).count();
    let localized = batch
        .iter()
        .filter(|(t, _, gold)| {
            t.final_patch
                .as_deref()
                .is_some_and(|p| !patch_files(p).is_disjoint(gold))
        })
        .count();
    let non_loop = batch.iter().filter(|(t, _, _)| !detect_loop(t)).count();
    let steps: usize = batch.iter().map(|(t, _, _)| t.steps.len()).sum();
    Ok(Metrics {
        resolved_pct: pct(resolved),
        localized_pct: pct(localized),
        non_loop_pct: pct(non_loop),
        avg_steps: steps as f64 / n,
    })
}

#[derive(Debug, Deserialize)]
struct LogLine {
    #[serde(default)]
    record: Option<String>,
    instance_id: String,
    #[serde(default)]
    task: Option<String>,
    #[serde(default)]
    index: Option<usize>,
    #[serde(default)]
    tool: Option<Tool>,
    #[serde(default)]
    args: Option<String>,
    #[serde(default)]
    observation_digest: Option<String>,
    #[serde(default)]
    final_patch: Option<String>,
    #[serde(default)]
    outcome: Option<VerificationResult>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParsedLog {
    pub trajectories: Vec<Trajectory>,
    /// 1-based numbers of malformed lines.
    pub skipped: Vec<usize>,
}

/// Parses a trajectory log. Malformed lines are skipped and reported.
/// Trajectories keep order of first appearance; steps are ordered by index.
pub fn parse_log(text: &str) -> ParsedLog {
    let mut order: Vec<String> = Vec::new();
    let mut by_id: BTreeMap<String, (Trajectory, Vec<(usize, Step)>)> = BTreeMap::new();
    let mut skipped = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let Ok(rec) = serde_json::from_str::<LogLine>(line) else {
            skipped.push(i + 1);
            continue;
        };
        let task = match rec.task.as_deref().map(str::parse::<TaskKind>) {
            Some(Err(_)) => {
                skipped.push(i + 1);
                continue;
            }
            Some(Ok(k)) => Some(k),
            None => None,
        };
        let is_final = rec.record.as_deref() == Some("final");
        let step = match (is_final, rec.index, rec.tool) {
            (true, _, _) => None,
            (false, Some(index), Some(tool)) => Some((
                index,
                Step {
                    tool,
                    args: rec.args.unwrap_or_default(),
                    observation_digest: rec.observation_digest.unwrap_or_default(),
                },
            )),
            _ => {
                skipped.push(i + 1);
                continue;
            }
        };
        let entry = by_id.entry(rec.instance_id.clone()).or_insert_with(|| {
            order.push(rec.instance_id.clone());
            (
                Trajectory {
                    instance_id: rec.instance_id.clone(),
                    task: None,
                    steps: Vec::new(),
                    final_patch: None,
                    outcome: None,
                },
                Vec::new(),
            )
        });
        if task.is_some() {
            entry.0.task = task;
        }
        match step {
            Some(s) => entry.1.push(s),
            None => {
                entry.0.final_patch = rec.final_patch.or(entry.0.final_patch.take());
                entry.0.outcome = rec.outcome.or(entry.0.outcome.take());
            }
        }
    }
    let trajectories = order
        .into_iter()
        .map(|id| {
            let (mut t, mut steps) = by_id.remove(&id).expect("ordered ids are present");
            steps.sort_by_key(|(i, _)| *i);
            t.steps = steps.into_iter().map(|(_, s)| s).collect();
            t
        })
        .collect();
    ParsedLog {
        trajectories,
        skipped,
    }
}

/// Step records for a trajectory, in the log format read by [`parse_log`].
pub fn to_log(trajectory: &Trajectory) -> String {
    let mut out = String::new();
    for (index, s) in trajectory.steps.iter().enumerate() {
        let mut v = serde_json::json!({
            "instance_id": trajectory.instance_id,
            "index": index,
            "tool": s.tool,
            "args": s.args,
            "observation_digest": s.observation_digest,
        });
        if let Some(k) = trajectory.task {
            v["task"] = k.slug().into();
        }
        out.push_str(&v.to_string());
        out.push('\n');
    }
    if trajectory.final_patch.is_some() || trajectory.outcome.is_some() {
        let v = serde_json::json!({
            "record": "final",
            "instance_id": trajectory.instance_id,
            "final_patch": trajectory.final_patch,
            "outcome": trajectory.outcome,
        });
        out.push_str(&v.to_string());
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LoopStats {
    pub trajectories: usize,
    pub looping: usize,
    pub non_loop_pct: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub skipped_lines: usize,
    pub components: Table,
    pub commands: Table,
    pub tools: Table,
    pub loops: LoopStats,
}

pub fn analyze(log: &ParsedLog, labeler: &dyn StepLabeler) -> AnalysisReport {
    let trajectories: Vec<Trajectory> = log
        .trajectories
        .iter()
        .filter(|t| !t.steps.is_empty())
        .cloned()
        .collect();
    let looping = trajectories.iter().filter(|t| detect_loop(t)).count();
    let n = trajectories.len();
    AnalysisReport {
        skipped_lines: log.skipped.len(),
        components: component_distribution(&trajectories, labeler),
        commands: command_distribution(&trajectories, labeler),
        tools: tool_distribution(&trajectories),
        loops: LoopStats {
            trajectories: n,
            looping,
            non_loop_pct: if n == 0 {
                0.0
            } else {
                100.0 * (n - looping) as f64 / n as f64
            },
        },
    }
}

fn render_table(title: &str, table: &Table, rows: &[&str], unit: &str) -> String {
    let cols: Vec<&String> = table.keys().collect();
    let mut out = format!("{title}\n");
    if cols.is_empty() {
        out.push_str("  (empty)\n");
        return out;
    }
    let first = rows.iter().map(|r| r.len()).max().unwrap_or(0).max(8);
    let widths: Vec<usize> = cols.iter().map(|c| c.len().max(8)).collect();
    out.push_str(&format!("  {:<first$}", ""));
    for (c, w) in cols.iter().zip(&widths) {
        out.push_str(&format!("  {c:>w$}"));
    }
    out.push('\n');
    for row in rows {
        out.push_str(&format!("  {row:<first$}"));
        for (c, w) in cols.iter().zip(&widths) {
            let v = table[*c].get(*row).copied().unwrap_or(0.0);
            out.push_str(&format!("  {:>w$}", format!("{v:.1}{unit}")));
        }
        out.push('\n');
    }
    out
}

impl AnalysisReport {
    /// Aligned text tables with one decimal.
    pub fn to_text(&self) -> String {
        let categories: Vec<&str> = StepCategory::ALL.iter().map(|c| c.name()).collect();
        let commands = ["grep", "find", "cd", "ls", "other"];
        let tools: Vec<&str> = Tool::ALL.iter().map(|t| t.name()).collect();
        let mut out = String::new();
        out.push_str(&render_table(
            "components (% of steps)",
            &self.components,
            &categories,
            "%",
        ));
        out.push('\n');
        out.push_str(&render_table(
            "exploration commands (% of exploration commands)",
            &self.commands,
            &commands,
            "%",
        ));
        out.push('\n');
        out.push_str(&render_table(
            "tools (mean calls per trajectory)",
            &self.tools,
            &tools,
            "",
        ));
        out.push('\n');
        out.push_str(&format!(
            "loops\n  trajectories  {}\n  looping       {}\n  non_loop      {:.1}%\n",
            self.loops.trajectories, self.loops.looping, self.loops.non_loop_pct
        ));
        if self.skipped_lines > 0 {
            out.push_str(&format!(
                "skipped malformed lines: {}\n",
                self.skipped_lines
            ));
        }
        out
    }

    /// One record per table cell plus a loop record.
    pub fn to_records(&self) -> String {
        let mut out = String::new();
        for (name, table) in [
            ("components", &self.components),
            ("commands", &self.commands),
            ("tools", &self.tools),
        ] {
            for (col, rows) in table {
                for (row, value) in rows {
                    let v =
                        serde_json::json!({"table": name, "task": col, "row": row, "value": value});
                    out.push_str(&v.to_string());
                    out.push('\n');
                }
            }
        }
        let v = serde_json::json!({
            "table": "loops",
            "trajectories": self.loops.trajectories,
            "looping": self.loops.looping,
            "non_loop_pct": self.loops.non_loop_pct,
            "skipped_lines": self.skipped_lines,
        });
        out.push_str(&v.to_string());
        out.push('\n');
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bash(a: &str) -> Step {
        Step::new(Tool::ExecuteBash, a)
    }

    fn traj(steps: Vec<Step>) -> Trajectory {
        Trajectory {
            instance_id: "t".into(),
            task: Some(TaskKind::DepSearch),
            steps,
            final_patch: None,
            outcome: None,
        }
    }

    #[test]
    fn rules() {
        let steps = vec![
            bash("grep -i \"pipeline\""),
            bash("python run.py"),
            Step::new(Tool::StrReplace, "pkg/a.py"),
            bash("python -m pytest tests"),
            Step::new(Tool::Message, "done"),
            bash("cat > new.py <<EOF"),
            bash("FOO=1 /usr/bin/find . -name x 2>/dev/null"),
        ];
        let labels: Vec<_> = (0..steps.len())
            .map(|i| categorize_step(&steps, i))
            .collect();
        assert_eq!(
            labels,
            [
                StepCategory::RepoExploration,
                StepCategory::ExecutionExisting,
                StepCategory::Implementation,
                StepCategory::Verification,
                StepCategory::Reasoning,
                StepCategory::Implementation,
                StepCategory::RepoExploration,
            ]
        );
        assert_eq!(steps[6].command(), Some("find"));
    }

    #[test]
    fn loops() {
        let a = || bash("ls");
        assert!(detect_loop(&traj(vec![a(), a(), a()])));
        assert!(!detect_loop(&traj(vec![a(), a(), bash("pwd"), a(), a()])));
        assert!(!detect_loop(&traj(vec![a()])));
    }

    #[test]
    fn command_shares() {
        let t = traj(vec![
            bash("grep a"),
            bash("grep b"),
            bash("grep c"),
            bash("find ."),
        ]);
        let table = command_distribution(&[t], &RuleLabeler);
        assert_eq!(table["dep-search"]["grep"], 75.0);
        assert_eq!(table["dep-search"]["find"], 25.0);
        let none = command_distribution(&[traj(vec![Step::new(Tool::Message, "x")])], &RuleLabeler);
        assert!(none.is_empty());
    }

    #[test]
    fn tool_means() {
        let t1 = traj((0..4).map(|_| bash("ls")).collect());
        let t2 = traj((0..6).map(|i| bash(&format!("ls {i}"))).collect());
        let table = tool_distribution(&[t1, t2]);
        assert_eq!(table["dep-search"]["execute_bash"], 5.0);
        assert_eq!(table["dep-search"]["view"], 0.0);
    }

    #[test]
    fn log_round_trip_and_skips() {
        let mut t = traj(vec![bash("ls"), Step::new(Tool::View, "/w/a.py")]);
        t.final_patch = Some(String::new());
        let mut text = to_log(&t);
        text.push_str("not json\n{\"instance_id\":\"t\",\"index\":9}\n");
        let parsed = parse_log(&text);
        assert_eq!(parsed.trajectories, [t]);
        assert_eq!(parsed.skipped.len(), 2);
    }

    #[test]
    fn external_labeler_falls_back() {
        let steps = vec![bash("grep x")];
        let ext = ExternalLabeler::new(|_: &str| Ok("Verification".to_string()));
        assert_eq!(ext.label(&steps, 0), StepCategory::Verification);
        let junk = ExternalLabeler::new(|_: &str| Ok("???".to_string()));
        assert_eq!(junk.label(&steps, 0), StepCategory::RepoExploration);
    }
}
