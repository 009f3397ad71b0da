mod common;

use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use repogym::patchcheck::{classify_patch, LineClass};
use repogym::sampling::{
    balanced_dep_sample, largest_remainder, DepCandidate, SamplingSpec, Strategy as Sampling,
};
use repogym::source::index_tree;
use repogym::taskgen::{
    apply_transform, check_leakage, DescriptionProvider, Generator, RedactionProvider, MASK_LINE,
};
use repogym::trajstats::{detect_loop, Step, Tool, Trajectory};
use repogym::unidiff::{self, diff_trees, DEFAULT_CONTEXT};
use repogym::{SourceTree, TaskInstance, TaskKind, Workspace};

fn trajectory(steps: Vec<Step>) -> Trajectory {
    Trajectory {
        instance_id: "t".into(),
        task: None,
        steps,
        final_patch: None,
        outcome: None,
    }
}

/// Longest run of identical consecutive actions, counted directly.
fn longest_run(steps: &[Step]) -> usize {
    let mut best = 0;
    for i in 0..steps.len() {
        let mut j = i;
        while j < steps.len() && steps[j].tool == steps[i].tool && steps[j].args == steps[i].args {
            j += 1;
        }
        best = best.max(j - i);
    }
    best
}

fn step_strategy() -> impl Strategy<Value = Step> {
    (0..2usize, 0..3usize).prop_map(|(t, a)| {
        let tool = if t == 0 {
            Tool::ExecuteBash
        } else {
            Tool::View
        };
        Step::new(tool, format!("arg{a}"))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn loop_detection_matches_run_length(steps in prop::collection::vec(step_strategy(), 0..12)) {
        prop_assert_eq!(detect_loop(&trajectory(steps.clone())), longest_run(&steps) >= 3);
    }

    #[test]
    fn diff_then_apply_reproduces_the_edit(repo_seed in 0u64..40, edit_seed: u64) {
        let tree = common::mini_repo(repo_seed).tree;
        let edited = common::random_edit(&tree, &mut ChaCha8Rng::seed_from_u64(edit_seed));
        let patch = diff_trees(&tree, &edited, DEFAULT_CONTEXT);
        let applied = unidiff::apply(&tree, &unidiff::parse(&patch).unwrap()).unwrap();
        prop_assert_eq!(applied, edited);
    }

    #[test]
    fn quotas_sum_to_n_and_stay_within_one(n in 0usize..2000, weights in prop::collection::vec(1u32..1000, 1..6)) {
        let total: u32 = weights.iter().sum();
        let fractions: BTreeMap<usize, f64> =
            weights.iter().enumerate().map(|(i, w)| (i, *w as f64 / total as f64)).collect();
        let quotas = largest_remainder(n, &fractions);
        prop_assert_eq!(quotas.values().sum::<usize>(), n);
        for (k, q) in &quotas {
            let exact = n as f64 * fractions[k];
            prop_assert!((*q as f64 - exact).abs() < 1.0 + 1e-9);
        }
    }

    #[test]
    fn balanced_sampling_respects_the_cap(
        counts in prop::collection::vec((0usize..8, 1usize..4), 1..120),
        cap in 1usize..5,
        n in 1usize..80,
        seed: u64,
    ) {
        let candidates: Vec<DepCandidate> = counts
            .iter()
            .enumerate()
            .map(|(i, (repo, deps))| DepCandidate { id: format!("c{i}"), repo_id: format!("r{repo}"), dep_count: *deps })
            .collect();
        let spec = SamplingSpec {
            strategy: Sampling::BalancedDepCount { range: (1, 3), per_repo_cap: Some(cap) },
            n,
            seed,
        };
        let s = balanced_dep_sample(&candidates, &spec).unwrap();
        let mut per_repo: BTreeMap<&str, usize> = BTreeMap::new();
        for c in &s.selected {
            *per_repo.entry(c.repo_id.as_str()).or_default() += 1;
        }
        prop_assert!(per_repo.values().all(|c| *c <= cap));
        prop_assert!(s.selected.len() <= n);
        prop_assert_eq!(s.shortfall, s.selected.len() < n);
    }

    #[test]
    fn inserted_comment_lines_classify_as_comments(repo_seed in 0u64..40, line_seed: u64) {
        let tree = common::mini_repo(repo_seed).tree;
        let path = tree.paths().next().unwrap().to_string();
        let text = tree.text(&path).unwrap();
        let lines: Vec<&str> = text.split_inclusive('\n').collect();
        let at = (line_seed as usize) % (lines.len() + 1);
        let mut edited = tree.clone();
        edited.insert(path.clone(), format!("{}# inserted note\n{}", lines[..at].concat(), lines[at..].concat()));
        let report = classify_patch(&diff_trees(&tree, &edited, DEFAULT_CONTEXT), &tree).unwrap();
        prop_assert_eq!(report.added.len(), 1);
        // Inside a multi-line docstring the line is string content, not a comment.
        let class = report.added[0].class.unwrap();
        prop_assert!(class == LineClass::Comment || class == LineClass::Docstring, "{:?}", class);
    }
}

#[test]
fn masked_bodies_are_the_single_todo_line() {
    for seed in 0..30 {
        let tree = common::mini_repo(seed).tree;
        let snap = index_tree(&tree, "r", "c");
        let g = Generator::new(&snap, &tree);
        let made = g.generate(TaskKind::FuncGen, &RedactionProvider, &Default::default());
        for inst in made.instances {
            let (masked, edit) = apply_transform(&tree, &inst.transform).unwrap();
            let edit = edit.unwrap();
            let text = masked.text(&edit.path).unwrap();
            let inserted = &text[edit.offset..edit.offset + edit.inserted.len()];
            let indent = inserted.len() - inserted.trim_start().len();
            assert_eq!(inserted.trim_start(), format!("{MASK_LINE}\n"));
            assert!(indent >= 4 && indent % 4 == 0);
            let restored = edit.revert(text).unwrap();
            assert_eq!(restored, tree.text(&edit.path).unwrap());
        }
    }
}

#[test]
fn redacted_descriptions_never_leak() {
    for seed in 0..30 {
        let tree = common::mini_repo(seed).tree;
        let snap = index_tree(&tree, "r", "c");
        for sym in snap.symbols() {
            let d = RedactionProvider.describe(sym, &snap).unwrap();
            check_leakage(&d, sym).unwrap();
            assert_eq!(d, RedactionProvider.describe(sym, &snap).unwrap());
        }
    }
}

#[test]
fn instance_records_round_trip() {
    for seed in 0..10 {
        let tree = common::mini_repo(seed).tree;
        for inst in common::generate_all(&tree, "r", seed) {
            let back = TaskInstance::from_record(&inst.to_record()).unwrap();
            assert_eq!(back, inst);
        }
    }
}

#[test]
fn workspace_capture_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for seed in 0..20 {
        let tree: SourceTree = common::mini_repo(seed).tree;
        let mut ws = Workspace::create(
            format!("w{seed}"),
            dir.path().join(format!("w{seed}")),
            tree.clone(),
        )
        .unwrap();
        let edited = common::random_edit(&tree, &mut rng);
        std::fs::remove_dir_all(&ws.root_dir).unwrap();
        edited.write_to(&ws.root_dir).unwrap();
        let patch = ws.capture_patch().unwrap();
        let applied = unidiff::apply(&tree, &unidiff::parse(&patch).unwrap()).unwrap();
        assert_eq!(applied, edited);
        ws.reset().unwrap();
        assert_eq!(ws.capture_patch().unwrap(), "");
    }
}
