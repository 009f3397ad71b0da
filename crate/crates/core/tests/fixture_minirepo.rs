mod common;

use std::collections::BTreeSet;

use repogym::depgraph::{direct_dependencies, extract_call_sites, resolve_call};
use repogym::patchcheck::{verify, verify_func_gen, ShellAdapter, VerifyOptions};
use repogym::source::{index_tree, SymbolFilter};
use repogym::taskgen::{apply_transform, gold_solution, DescriptionProvider, Generator, MASK_LINE};
use repogym::unidiff::{diff_trees, DEFAULT_CONTEXT};
use repogym::{
    CallKind, Reason, RepoSnapshot, Resolution, SourceTree, SymbolDef, SymbolKind, Target,
    TaskKind, Workspace,
};

fn fixture() -> (SourceTree, RepoSnapshot) {
    let tree = common::minirepo_a();
    let snap = index_tree(&tree, "minirepo-A", "c0");
    (tree, snap)
}

fn names(symbols: &[&SymbolDef]) -> Vec<String> {
    symbols.iter().map(|s| s.locator.clone()).collect()
}

struct Fixed(&'static str);

impl DescriptionProvider for Fixed {
    fn describe(&self, _: &SymbolDef, _: &RepoSnapshot) -> repogym::Result<String> {
        Ok(self.0.to_string())
    }
}

#[test]
fn six_symbols_in_three_files() {
    let (_, snap) = fixture();
    assert_eq!(snap.files().len(), 3);
    assert_eq!(
        names(&snap.symbols().iter().collect::<Vec<_>>()),
        [
            "lib/util.py:helper",
            "pkg/a.py:helper",
            "pkg/a.py:Widget",
            "pkg/a.py:Widget.run",
            "pkg/a.py:top",
            "pkg/b.py:wrapper",
        ]
    );
}

#[test]
fn filters_and_docstrings() {
    let (_, snap) = fixture();
    let classes = snap.list_symbols(&SymbolFilter {
        kinds: vec![SymbolKind::Class],
        ..Default::default()
    });
    assert_eq!(names(&classes), ["pkg/a.py:Widget"]);
    let documented = snap.list_symbols(&SymbolFilter {
        has_docstring: Some(true),
        ..Default::default()
    });
    assert_eq!(names(&documented), ["pkg/a.py:top"]);
    let none = snap.list_symbols(&SymbolFilter {
        min_body_lines: Some(100),
        ..Default::default()
    });
    assert!(none.is_empty());
    let top = snap.symbol("pkg/a.py:top").unwrap();
    assert_eq!(snap.get_docstring(top).unwrap(), Some("Run the pipeline."));
    let helper = snap.symbol("pkg/a.py:helper").unwrap();
    assert_eq!(snap.get_docstring(helper).unwrap(), None);
}

#[test]
fn imported_name_resolves_to_its_module_not_the_namesake() {
    let (_, snap) = fixture();
    assert_eq!(
        snap.resolve_name("helper", "pkg/b.py"),
        Target::Internal {
            file_path: "pkg/a.py".into(),
            qualified_name: Some("helper".into())
        }
    );
    assert_eq!(snap.resolve_name("len", "pkg/b.py"), Target::Builtin);
}

#[test]
fn call_sites_and_dependencies() {
    let (_, snap) = fixture();
    let top = snap.symbol("pkg/a.py:top").unwrap();
    let calls = extract_call_sites(top, &snap).unwrap();
    let kinds: Vec<CallKind> = calls.iter().map(|c| c.call_kind).collect();
    assert_eq!(
        kinds,
        [
            CallKind::FunctionCall,
            CallKind::ClassInstantiation,
            CallKind::ExceptionRaise
        ]
    );
    assert_eq!(resolve_call(&calls[2], &snap), Resolution::Builtin);
    let deps = direct_dependencies(top, &snap).unwrap().dependencies;
    assert_eq!(
        deps,
        BTreeSet::from(["pkg/a.py:Widget".to_string(), "pkg/a.py:helper".to_string()])
    );

    let wrapper = snap.symbol("pkg/b.py:wrapper").unwrap();
    let calls = extract_call_sites(wrapper, &snap).unwrap();
    match resolve_call(&calls[0], &snap) {
        Resolution::Internal(def) => assert_eq!(def.locator, "pkg/a.py:helper"),
        other => panic!("{other:?}"),
    }
    let deps = direct_dependencies(wrapper, &snap).unwrap().dependencies;
    assert_eq!(deps, BTreeSet::from(["pkg/a.py:helper".to_string()]));
}

#[test]
fn dep_search_ranges() {
    let (tree, snap) = fixture();
    let g = Generator::new(&snap, &tree);
    let top = snap.symbol("pkg/a.py:top").unwrap();
    let wrapper = snap.symbol("pkg/b.py:wrapper").unwrap();
    let inst = g.dep_search(top, (1, 3)).unwrap();
    assert_eq!(
        inst.ground_truth.gold_files(),
        BTreeSet::from(["pkg/a.py".to_string()])
    );
    assert!(inst
        .prompt_text
        .contains("this function/class is called by the top function"));
    assert!(g.dep_search(top, (2, 2)).is_ok());
    assert!(g.dep_search(wrapper, (2, 2)).is_err());
    assert!(g
        .dep_search(snap.symbol("pkg/a.py:helper").unwrap(), (1, 3))
        .is_err());

    let made = g.generate(
        TaskKind::DepSearch,
        &repogym::taskgen::RedactionProvider,
        &Default::default(),
    );
    let targets: Vec<_> = made
        .instances
        .iter()
        .map(|i| i.ground_truth.target().unwrap().to_string())
        .collect();
    assert_eq!(targets, ["pkg/a.py:top", "pkg/b.py:wrapper"]);
}

#[test]
fn func_localize_prompt_and_workspace() {
    let (tree, snap) = fixture();
    let g = Generator::new(&snap, &tree);
    let top = snap.symbol("pkg/a.py:top").unwrap();
    let inst = g
        .func_localize(top, &Fixed("runs the end-to-end data flow"))
        .unwrap();
    assert!(inst.prompt_text.contains("runs the end-to-end data flow"));
    let (ws, _) = apply_transform(&tree, &inst.transform).unwrap();
    assert!(!ws.text("pkg/a.py").unwrap().contains("Run the pipeline."));
    assert!(g.func_localize(top, &Fixed("calls top twice")).is_err());

    // Gold docstring restoration passes; the same docstring on lib/util's helper is a foil.
    let gold = gold_solution(&inst, &tree).unwrap();
    let ok = verify(
        &inst,
        &gold.patch(),
        &gold.baseline,
        &VerifyOptions::default(),
    )
    .unwrap();
    assert!(ok.success, "{ok:?}");

    let helper = snap.symbol("pkg/a.py:helper").unwrap();
    let inst = g
        .func_localize(helper, &Fixed("returns a constant"))
        .unwrap();
    let (baseline, _) = apply_transform(&tree, &inst.transform).unwrap();
    let mut foil = baseline.clone();
    foil.insert(
        "lib/util.py",
        "def helper():\n    \"\"\"Return two.\"\"\"\n    return 2\n",
    );
    let r = verify(
        &inst,
        &diff_trees(&baseline, &foil, DEFAULT_CONTEXT),
        &baseline,
        &VerifyOptions::default(),
    )
    .unwrap();
    assert_eq!(r.reasons, [Reason::WrongTarget]);
}

#[test]
fn issue_localize_gold_files() {
    let (tree, snap) = fixture();
    let g = Generator::new(&snap, &tree);
    let mut fixed = tree.clone();
    fixed.insert(
        "pkg/a.py",
        tree.text("pkg/a.py")
            .unwrap()
            .replace("return 1", "return 3"),
    );
    let one = g
        .issue_localize(
            "helper returns the wrong value",
            &diff_trees(&tree, &fixed, 3),
        )
        .unwrap();
    assert_eq!(
        one.ground_truth.gold_files(),
        BTreeSet::from(["pkg/a.py".to_string()])
    );
    fixed.insert(
        "pkg/b.py",
        "from pkg.a import helper\n\n\ndef wrapper():\n    return helper() + 1\n",
    );
    let two = g
        .issue_localize("both are off", &diff_trees(&tree, &fixed, 3))
        .unwrap();
    assert_eq!(two.ground_truth.gold_files().len(), 2);
    let mut added = tree.clone();
    added.insert("pkg/new.py", "x = 1\n");
    assert!(g
        .issue_localize("new file", &diff_trees(&tree, &added, 3))
        .is_err());

    let gold = gold_solution(&one, &tree).unwrap();
    assert!(
        verify(
            &one,
            &gold.patch(),
            &gold.baseline,
            &VerifyOptions::default()
        )
        .unwrap()
        .success
    );
}

#[test]
fn dep_search_gold_and_comment_variants() {
    let (tree, snap) = fixture();
    let g = Generator::new(&snap, &tree);
    let inst = g
        .dep_search(snap.symbol("pkg/a.py:top").unwrap(), (1, 3))
        .unwrap();
    let gold = gold_solution(&inst, &tree).unwrap();
    let opts = VerifyOptions::default();
    assert!(verify(&inst, &gold.patch(), &tree, &opts).unwrap().success);

    let edit = |text: &str| {
        let mut t = tree.clone();
        t.insert("pkg/a.py", text);
        diff_trees(&tree, &t, 3)
    };
    let a = tree.text("pkg/a.py").unwrap();
    let wrong = a
        .replace("def helper", "# called by top\ndef helper")
        .replace(
            "class Widget",
            "# this function/class is called by the top function\nclass Widget",
        );
    let r = verify(&inst, &edit(&wrong), &tree, &opts).unwrap();
    assert!(r.reasons.contains(&Reason::CommentTextMismatch), "{r:?}");
    let c = "# this function/class is called by the top function\n";
    let twice = a
        .replace("def helper", &format!("{c}{c}def helper"))
        .replace("class Widget", &format!("{c}class Widget"));
    let r = verify(&inst, &edit(&twice), &tree, &opts).unwrap();
    assert_eq!(r.reasons, [Reason::DuplicateComment]);
}

#[test]
fn func_gen_masks_and_restores() {
    let (tree, snap) = fixture();
    let g = Generator::new(&snap, &tree);
    let check = "python3 -c \"import repogym_probe as p\ntry:\n    p.top_new_implementation()\nexcept ValueError:\n    raise SystemExit(0)\nraise SystemExit(1)\"";
    let inst = g
        .func_gen(snap.symbol("pkg/a.py:top").unwrap(), check)
        .unwrap();
    let (baseline, _) = apply_transform(&tree, &inst.transform).unwrap();
    let masked = baseline.text("pkg/a.py").unwrap();
    assert!(
        masked.ends_with(&format!(
            "    \"\"\"Run the pipeline.\"\"\"\n    {MASK_LINE}\n"
        )),
        "{masked}"
    );
    assert!(g
        .func_gen(snap.symbol("pkg/a.py:Widget").unwrap(), check)
        .is_err());
    assert!(g
        .func_gen(snap.symbol("pkg/a.py:helper").unwrap(), check)
        .is_err());

    let scratch = tempfile::tempdir().unwrap();
    let gold = gold_solution(&inst, &tree).unwrap();
    let mut ws =
        Workspace::create(inst.instance_id.clone(), scratch.path().join("w"), baseline).unwrap();
    let opts = VerifyOptions::default();
    let empty = verify_func_gen(&inst, &ws, &ShellAdapter, &opts).unwrap();
    assert_eq!(empty.reasons, [Reason::EmptyPatch]);
    ws.apply_patch(&gold.patch()).unwrap();
    let r = verify_func_gen(&inst, &ws, &ShellAdapter, &opts).unwrap();
    assert!(r.success, "{r:?}");
    let broken = gold.patch().replace(
        "+    raise ValueError(\"pipeline failed\")",
        "+    return 0",
    );
    ws.apply_patch(&broken).unwrap();
    let r = verify_func_gen(&inst, &ws, &ShellAdapter, &opts).unwrap();
    assert_eq!(r.reasons, [Reason::TestsFailed]);
}
