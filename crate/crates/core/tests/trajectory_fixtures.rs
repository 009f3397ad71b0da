mod common;

use std::collections::BTreeSet;

use repogym::trajstats::{analyze, compute_metrics, parse_log, ParsedLog, RuleLabeler};

fn gold_for(task: &str) -> BTreeSet<String> {
    let file = match task {
        "func-localize" => "pkg/a.py",
        "issue-localize" => "src/x.py",
        "dep-search" => "lib/m.py",
        _ => "gen/f.py",
    };
    BTreeSet::from([file.to_string()])
}

#[test]
fn scored_batch_of_twenty() {
    let text = std::fs::read_to_string(common::fixture_dir("trajectories-20.jsonl")).unwrap();
    let log = parse_log(&text);
    assert!(log.skipped.is_empty());
    assert_eq!(log.trajectories.len(), 20);
    let batch: Vec<_> = log
        .trajectories
        .into_iter()
        .map(|t| {
            let outcome = t.outcome.clone().unwrap();
            let gold = gold_for(t.task.unwrap().slug());
            (t, outcome, gold)
        })
        .collect();
    let m = compute_metrics(&batch).unwrap();
    // Hand-scored: 7 resolved, 11 patches touching a gold file, 4 loops, 163 steps.
    assert!((m.resolved_pct - 35.0).abs() < 0.1, "{m:?}");
    assert!((m.localized_pct - 55.0).abs() < 0.1, "{m:?}");
    assert!((m.non_loop_pct - 80.0).abs() < 0.1, "{m:?}");
    assert!((m.avg_steps - 8.15).abs() < 0.1, "{m:?}");
}

fn synthetic_logs() -> ParsedLog {
    let mut merged = ParsedLog::default();
    for name in ["a.jsonl", "b.jsonl"] {
        let text = std::fs::read_to_string(common::fixture_dir("analyze-logs").join(name)).unwrap();
        let p = parse_log(&text);
        merged.trajectories.extend(p.trajectories);
        merged.skipped.extend(p.skipped);
    }
    merged
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() < 0.05
}

#[test]
fn synthetic_log_tables() {
    let report = analyze(&synthetic_logs(), &RuleLabeler);
    assert_eq!(report.skipped_lines, 1);
    let dep = &report.components["dep-search"];
    assert!(
        close(dep["repo_exploration"], 66.67)
            && close(dep["implementation"], 22.22)
            && close(dep["reasoning"], 11.11)
    );
    assert_eq!(dep["verification"], 0.0);
    let gen = &report.components["func-gen"];
    assert!(close(gen["repo_exploration"], 44.44) && close(gen["execution_existing"], 11.11));
    assert!(close(gen["verification"], 11.11) && close(gen["reasoning"], 22.22));

    let cmd = &report.commands["dep-search"];
    assert_eq!((cmd["grep"], cmd["find"], cmd["cd"]), (60.0, 20.0, 20.0));
    let cmd = &report.commands["func-gen"];
    assert_eq!((cmd["ls"], cmd["other"]), (50.0, 50.0));

    let tools = &report.tools["dep-search"];
    assert_eq!(
        (
            tools["execute_bash"],
            tools["view"],
            tools["str_replace"],
            tools["message"]
        ),
        (2.5, 0.5, 1.0, 0.5)
    );
    let tools = &report.tools["func-gen"];
    assert_eq!(
        (
            tools["execute_bash"],
            tools["view"],
            tools["str_replace"],
            tools["message"]
        ),
        (2.0, 1.0, 0.5, 1.0)
    );
    assert_eq!((report.loops.trajectories, report.loops.looping), (4, 0));

    for column in report.components.values().chain(report.commands.values()) {
        let sum: f64 = column.values().sum();
        assert!((sum - 100.0).abs() < 0.1);
    }
}

#[test]
fn text_and_records_carry_the_same_numbers() {
    let report = analyze(&synthetic_logs(), &RuleLabeler);
    let text = report.to_text();
    for line in report.to_records().lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        if let Some(value) = v["value"].as_f64() {
            assert!(text.contains(&format!("{value:.1}")), "{line}");
        }
    }
    assert!(text.contains("66.7%") && text.contains("2.5"));
}
