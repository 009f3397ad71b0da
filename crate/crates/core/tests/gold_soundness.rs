mod common;

use std::collections::BTreeMap;

use repogym::taskgen::gold_solution;
use repogym::{Reason, TaskKind};

#[test]
fn gold_solutions_pass_and_empty_patches_fail() {
    let scratch = tempfile::tempdir().unwrap();
    let mut per_kind: BTreeMap<TaskKind, usize> = BTreeMap::new();
    for seed in 0..12 {
        let repo = common::mini_repo(seed);
        for inst in common::generate_all(&repo.tree, &format!("r{seed}"), seed) {
            let gold = gold_solution(&inst, &repo.tree).unwrap();
            let ok = common::verify_any(&inst, &repo.tree, &gold.patch(), scratch.path());
            assert!(
                ok.success,
                "seed {seed} {:?}: {ok:?}\n{}",
                inst.ground_truth,
                gold.patch()
            );
            let empty = common::verify_any(&inst, &repo.tree, "", scratch.path());
            assert_eq!(
                empty.reasons,
                [Reason::EmptyPatch],
                "seed {seed} {}",
                inst.instance_id
            );
            *per_kind.entry(inst.kind).or_default() += 1;
        }
    }
    assert_eq!(per_kind.len(), 4, "{per_kind:?}");
}
