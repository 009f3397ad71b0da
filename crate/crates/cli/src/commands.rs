use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{anyhow, Context};
use rayon::prelude::*;
use serde::Deserialize;

use repogym::patchcheck::{self, Coverage, ShellAdapter, VerificationResult, VerifyOptions};
use repogym::sampling::{
    balanced_dep_sample, diversity_sample, fractions_from_counts, mix_tasks, DatasetManifest,
    DepCandidate, ManifestEntry, SamplingSpec, Strategy,
};
use repogym::source::{index_repo, IndexOptions};
use repogym::taskgen::{apply_transform, GenOptions, Generator, RedactionProvider};
use repogym::trajstats::{self, compute_metrics, parse_log, ParsedLog, RuleLabeler, Trajectory};
use repogym::workspace::materialize as materialize_one;
use repogym::{Error, GroundTruth, RepoSnapshot, RepoStore, TaskInstance, TaskKind, Workspace};

use crate::config::{parse_range, Config};
use crate::{AnalyzeArgs, CliError, GenArgs, IndexArgs, MaterializeArgs, SampleArgs, VerifyArgs};

type CliResult = Result<(), CliError>;

fn write_output(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent)
                    .with_context(|| format!("creating {}", parent.display()))?;
            }
            fs::write(path, text).with_context(|| format!("writing {}", path.display()))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read_text(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn read_instances(path: &Path) -> anyhow::Result<Vec<TaskInstance>> {
    read_text(path)?
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            TaskInstance::from_record(l)
                .with_context(|| format!("{} line {}", path.display(), i + 1))
        })
        .collect()
}

fn store(config: &Config, flag: Option<PathBuf>) -> Result<RepoStore, CliError> {
    let root: PathBuf = config.require(flag, "repos")?;
    if !root.is_dir() {
        return Err(CliError::Data(anyhow!(
            "repository store {} is not a readable directory",
            root.display()
        )));
    }
    Ok(RepoStore::new(root))
}

fn cache_file(cache: &Path, repo: &str, commit: &str) -> PathBuf {
    cache.join(repo).join(format!("{commit}.jsonl"))
}

/// `(repo, commit)` pairs present in the cache, sorted.
fn cache_entries(cache: &Path) -> anyhow::Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    let repos =
        fs::read_dir(cache).with_context(|| format!("reading cache {}", cache.display()))?;
    for repo in repos {
        let repo = repo?;
        if !repo.file_type()?.is_dir() {
            continue;
        }
        for commit in fs::read_dir(repo.path())? {
            let name = commit?.file_name().to_string_lossy().into_owned();
            if let Some(commit) = name.strip_suffix(".jsonl") {
                out.push((
                    repo.file_name().to_string_lossy().into_owned(),
                    commit.to_string(),
                ));
            }
        }
    }
    out.sort();
    Ok(out)
}

pub fn index(config: &Config, a: IndexArgs) -> CliResult {
    let store = store(config, a.repos)?;
    let cache = config.cache_dir(a.cache)?;
    fs::create_dir_all(&cache).with_context(|| format!("creating {}", cache.display()))?;
    let entries = store.entries()?;
    if entries.is_empty() {
        eprintln!(
            "warning: repository store {} holds no commits",
            store.root().display()
        );
        return Ok(());
    }
    let results: Vec<(String, anyhow::Result<bool>)> = entries
        .par_iter()
        .map(|(repo, commit)| {
            let target = cache_file(&cache, repo, commit);
            let run = || -> anyhow::Result<bool> {
                if target.exists() {
                    return Ok(false);
                }
                let snapshot = index_repo(
                    &store.commit_dir(repo, commit),
                    repo,
                    commit,
                    &IndexOptions::default(),
                )?;
                let dir = target
                    .parent()
                    .expect("cache files live in a repo directory");
                fs::create_dir_all(dir)?;
                let tmp = dir.join(format!(".{commit}.jsonl.tmp"));
                fs::write(&tmp, snapshot.to_records())?;
                fs::rename(&tmp, &target)?;
                Ok(true)
            };
            (format!("{repo}@{commit}"), run())
        })
        .collect();
    let mut indexed = 0;
    let mut failed = 0;
    for (name, r) in &results {
        match r {
            Ok(true) => indexed += 1,
            Ok(false) => {}
            Err(e) => {
                failed += 1;
                eprintln!("error: {name}: {e:#}");
            }
        }
    }
    eprintln!(
        "index: {} entries, {indexed} indexed, {} already cached",
        results.len(),
        results.len() - indexed - failed
    );
    if failed > 0 {
        return Err(CliError::Data(anyhow!(
            "{failed} repositories could not be indexed"
        )));
    }
    Ok(())
}

#[derive(Debug, Deserialize)]
struct IssueRecord {
    repo_id: String,
    #[serde(default)]
    commit_id: Option<String>,
    problem_statement: String,
    patch: String,
}

fn parse_kinds(s: &str) -> Result<Vec<TaskKind>, CliError> {
    let mut kinds: Vec<TaskKind> = s
        .split(',')
        .filter(|k| !k.trim().is_empty())
        .map(|k| {
            k.trim()
                .parse::<TaskKind>()
                .map_err(|e| CliError::Usage(e.to_string()))
        })
        .collect::<Result<_, _>>()?;
    kinds.sort();
    kinds.dedup();
    Ok(kinds)
}

fn error_label(e: &Error) -> &'static str {
    match e {
        Error::Rejected(_) => "rejected",
        Error::Leakage { .. } => "leakage",
        Error::Kind(_) => "kind",
        Error::EmptyGroundTruth => "empty_ground_truth",
        Error::Template(_) => "template",
        Error::Integrity(_) => "integrity",
        Error::PatchFormat { .. } | Error::PatchApply { .. } => "patch",
        Error::Lookup(_) => "lookup",
        _ => "other",
    }
}

#[derive(Default)]
struct RepoGen {
    instances: Vec<TaskInstance>,
    rejected: Vec<(TaskKind, &'static str)>,
}

pub fn gen(config: &Config, a: GenArgs) -> CliResult {
    let store = store(config, a.repos)?;
    let cache = config.cache_dir(a.cache)?;
    let requested = config.pick(a.kinds, "kinds")?;
    let explicit = requested.is_some();
    let kinds = match requested {
        Some(s) => parse_kinds(&s)?,
        None => TaskKind::ALL.to_vec(),
    };
    let mut options = GenOptions::default();
    if let Some(r) = config.pick(a.dep_range, "dep_range")? {
        options.dep_range = parse_range(&r).map_err(CliError::Usage)?;
    }
    if let Some(c) = config.pick(a.test_command, "test_command")? {
        options.test_command = c;
    }
    let n: Option<usize> = config.pick(a.n, "n")?;
    let issues: Vec<IssueRecord> = match &a.issues {
        Some(path) => repogym::records::read_jsonl(&read_text(path)?)?,
        None if kinds.contains(&TaskKind::IssueLocalize) && explicit => {
            eprintln!("warning: issue-localize requested without --issues");
            Vec::new()
        }
        None => Vec::new(),
    };
    let entries = cache_entries(&cache)?;
    let mut used_issues = vec![false; issues.len()];
    for (i, issue) in issues.iter().enumerate() {
        used_issues[i] = entries
            .iter()
            .any(|(r, c)| *r == issue.repo_id && issue.commit_id.as_ref().is_none_or(|ic| ic == c));
        if !used_issues[i] {
            eprintln!(
                "warning: issue {} names repository {} which is not cached",
                i + 1,
                issue.repo_id
            );
        }
    }
    let per_repo: Vec<anyhow::Result<RepoGen>> = entries
        .par_iter()
        .map(|(repo, commit)| {
            let snapshot =
                RepoSnapshot::from_records(&read_text(&cache_file(&cache, repo, commit))?)
                    .with_context(|| format!("cache entry {repo}@{commit}"))?;
            let tree = store.load(repo, commit)?;
            let generator = Generator::new(&snapshot, &tree);
            let mut out = RepoGen::default();
            for &kind in &kinds {
                if kind == TaskKind::IssueLocalize {
                    for issue in issues.iter().filter(|i| {
                        i.repo_id == *repo && i.commit_id.as_ref().is_none_or(|c| c == commit)
                    }) {
                        match generator.issue_localize(&issue.problem_statement, &issue.patch) {
                            Ok(inst) => out.instances.push(inst),
                            Err(e) => out.rejected.push((kind, error_label(&e))),
                        }
                    }
                    continue;
                }
                let made = generator.generate(kind, &RedactionProvider, &options);
                out.instances.extend(made.instances);
                out.rejected
                    .extend(made.rejected.iter().map(|(_, e)| (kind, error_label(e))));
            }
            Ok(out)
        })
        .collect();

    let mut instances = Vec::new();
    let mut rejected: BTreeMap<TaskKind, BTreeMap<&str, usize>> = BTreeMap::new();
    for r in per_repo {
        let r = r?;
        instances.extend(r.instances);
        for (kind, label) in r.rejected {
            *rejected.entry(kind).or_default().entry(label).or_default() += 1;
        }
    }
    instances.sort_by(|a, b| a.instance_id.cmp(&b.instance_id));
    instances.dedup_by(|a, b| a.instance_id == b.instance_id);
    let mut kept: BTreeMap<TaskKind, usize> = BTreeMap::new();
    let mut generated: BTreeMap<TaskKind, usize> = BTreeMap::new();
    instances.retain(|inst| {
        *generated.entry(inst.kind).or_default() += 1;
        let k = kept.entry(inst.kind).or_default();
        if n.is_some_and(|n| *k >= n) {
            return false;
        }
        *k += 1;
        true
    });
    let text: String = instances.iter().map(|i| i.to_record() + "\n").collect();
    write_output(a.out.as_deref(), &text)?;
    for kind in &kinds {
        let g = generated.get(kind).copied().unwrap_or(0);
        let k = kept.get(kind).copied().unwrap_or(0);
        let reasons: Vec<String> = rejected
            .get(kind)
            .map(|m| m.iter().map(|(l, c)| format!("{l}={c}")).collect())
            .unwrap_or_default();
        eprintln!(
            "gen {kind}: {g} generated, {k} written, rejected [{}]",
            reasons.join(", ")
        );
        if g == 0 {
            eprintln!("warning: no {kind} instances");
        }
    }
    Ok(())
}

pub fn materialize(config: &Config, a: MaterializeArgs) -> CliResult {
    let store = store(config, a.repos)?;
    let parent: PathBuf = config.require(a.out, "work_dir")?;
    let instances = read_instances(&a.instances)?;
    let mut rows: Vec<(String, anyhow::Result<PathBuf>)> = instances
        .par_iter()
        .map(|inst| {
            let made = materialize_one(inst, &store, &parent).map(|w| w.root_dir);
            (inst.instance_id.clone(), made.map_err(Into::into))
        })
        .collect();
    rows.sort_by(|a, b| a.0.cmp(&b.0));
    let mut text = String::new();
    let mut failed = 0;
    for (id, r) in rows {
        match r {
            Ok(dir) => {
                let v = serde_json::json!({"instance_id": id, "root_dir": dir});
                text.push_str(&v.to_string());
                text.push('\n');
            }
            Err(e) => {
                failed += 1;
                eprintln!("error: {id}: {e:#}");
            }
        }
    }
    print!("{text}");
    if failed > 0 {
        return Err(CliError::Data(anyhow!(
            "{failed} workspaces could not be created"
        )));
    }
    Ok(())
}

#[derive(Debug, Deserialize)]
struct PatchRecord {
    instance_id: String,
    patch: String,
}

fn verify_options(config: &Config, a: &VerifyArgs) -> Result<VerifyOptions, CliError> {
    let mut opts = VerifyOptions::default();
    if let Some(t) = config.pick(a.tolerance, "tolerance")? {
        if t > 50 {
            return Err(CliError::Usage(format!("tolerance {t} is outside 0..=50")));
        }
        opts.tolerance = t;
    }
    if let Some(c) = config.pick(a.coverage.clone(), "coverage")? {
        opts.coverage = match c.as_str() {
            "all" => Coverage::All,
            "any" => Coverage::Any,
            other => {
                return Err(CliError::Usage(format!(
                    "coverage must be all or any, not {other:?}"
                )))
            }
        };
    }
    if let Some(s) = config.pick(a.exec_timeout, "exec_timeout")? {
        if s == 0 {
            return Err(CliError::Usage(
                "exec timeout must be at least 1 second".into(),
            ));
        }
        opts.exec_timeout = Duration::from_secs(s);
    }
    Ok(opts)
}

fn verify_one(
    instance: &TaskInstance,
    patch: &str,
    store: &RepoStore,
    work_dir: &Path,
    opts: &VerifyOptions,
) -> anyhow::Result<VerificationResult> {
    if instance.kind != TaskKind::FuncGen {
        let original = store.load(&instance.repo_id, &instance.commit_id)?;
        let (baseline, _) = apply_transform(&original, &instance.transform)?;
        return Ok(patchcheck::verify(instance, patch, &baseline, opts)?);
    }
    let mut ws: Workspace = materialize_one(instance, store, work_dir)?;
    let result = ws
        .apply_patch(patch)
        .and_then(|()| patchcheck::verify_func_gen(instance, &ws, &ShellAdapter, opts));
    ws.remove()?;
    Ok(result?)
}

fn load_logs(path: &Path) -> anyhow::Result<ParsedLog> {
    if path.is_file() {
        return Ok(parse_log(&read_text(path)?));
    }
    if !path.is_dir() {
        return Err(anyhow!("no log file or directory at {}", path.display()));
    }
    let mut files: Vec<PathBuf> = fs::read_dir(path)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|e| e == "jsonl"))
        .collect();
    files.sort();
    let mut merged = ParsedLog::default();
    for f in files {
        let parsed = parse_log(&read_text(&f)?);
        if !parsed.skipped.is_empty() {
            eprintln!(
                "warning: {}: skipped lines {:?}",
                f.display(),
                parsed.skipped
            );
        }
        merged.trajectories.extend(parsed.trajectories);
        merged.skipped.extend(parsed.skipped);
    }
    Ok(merged)
}

pub fn verify(config: &Config, a: VerifyArgs) -> CliResult {
    let store = store(config, a.repos.clone())?;
    let opts = verify_options(config, &a)?;
    let work_dir: PathBuf = config
        .pick(a.work_dir.clone(), "work_dir")?
        .unwrap_or_else(|| {
            std::env::temp_dir().join(format!("repogym-verify-{}", std::process::id()))
        });
    let instances = read_instances(&a.instances)?;
    let patches: Vec<PatchRecord> = repogym::records::read_jsonl(&read_text(&a.patches)?)?;
    let by_id: BTreeMap<&str, &TaskInstance> = instances
        .iter()
        .map(|i| (i.instance_id.as_str(), i))
        .collect();
    let mut rows: BTreeMap<&str, (&TaskInstance, &str)> = BTreeMap::new();
    for p in &patches {
        match by_id.get(p.instance_id.as_str()) {
            Some(inst) => {
                if rows
                    .insert(inst.instance_id.as_str(), (inst, &p.patch))
                    .is_some()
                {
                    eprintln!(
                        "error: {}: more than one patch, the last one is used",
                        p.instance_id
                    );
                }
            }
            None => eprintln!("error: {}: patch for an unknown instance", p.instance_id),
        }
    }
    for inst in &instances {
        if !rows.contains_key(inst.instance_id.as_str()) {
            eprintln!("error: {}: no patch supplied", inst.instance_id);
        }
    }
    let rows: Vec<(&str, &TaskInstance, &str)> =
        rows.into_iter().map(|(id, (i, p))| (id, i, p)).collect();
    let results: Vec<(&str, anyhow::Result<VerificationResult>)> = rows
        .par_iter()
        .map(|(id, inst, patch)| (*id, verify_one(inst, patch, &store, &work_dir, &opts)))
        .collect();
    let _ = fs::remove_dir(&work_dir);

    let logs = a.trajectories.as_deref().map(load_logs).transpose()?;
    let log_by_id: BTreeMap<&str, &Trajectory> = logs
        .iter()
        .flat_map(|l| &l.trajectories)
        .map(|t| (t.instance_id.as_str(), t))
        .collect();
    let mut text = String::new();
    let mut batch = Vec::new();
    for ((id, result), (_, inst, patch)) in results.into_iter().zip(&rows) {
        match result {
            Ok(r) => {
                text.push_str(&r.to_record());
                text.push('\n');
                let mut t = log_by_id
                    .get(id)
                    .map(|t| (*t).clone())
                    .unwrap_or(Trajectory {
                        instance_id: id.to_string(),
                        task: Some(inst.kind),
                        steps: Vec::new(),
                        final_patch: None,
                        outcome: None,
                    });
                t.final_patch = Some(patch.to_string());
                batch.push((t, r, inst.ground_truth.gold_files()));
            }
            Err(e) => eprintln!("error: {id}: {e:#}"),
        }
    }
    write_output(a.out.as_deref(), &text)?;
    let block = match compute_metrics(&batch) {
        Ok(m) if logs.is_some() => format!(
            "instances {}\nresolved {:.1}\nlocalized {:.1}\nnon_loop {:.1}\navg_steps {:.1}\n",
            batch.len(),
            m.resolved_pct,
            m.localized_pct,
            m.non_loop_pct,
            m.avg_steps
        ),
        Ok(m) => format!(
            "instances {}\nresolved {:.1}\nlocalized {:.1}\n",
            batch.len(),
            m.resolved_pct,
            m.localized_pct
        ),
        Err(_) => "instances 0\n".to_string(),
    };
    if a.out.is_some() {
        print!("{block}");
    } else {
        eprint!("{block}");
    }
    Ok(())
}

fn entry(i: &TaskInstance) -> ManifestEntry {
    ManifestEntry {
        instance_id: i.instance_id.clone(),
        repo_id: i.repo_id.clone(),
        kind: i.kind,
    }
}

fn parse_mix(s: &str) -> Result<BTreeMap<TaskKind, f64>, CliError> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            let (k, v) = p
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("mix entry {p:?} is not kind=fraction")))?;
            let kind = k
                .trim()
                .parse::<TaskKind>()
                .map_err(|e| CliError::Usage(e.to_string()))?;
            let f = v
                .trim()
                .parse::<f64>()
                .map_err(|e| CliError::Usage(format!("mix fraction {v:?}: {e}")))?;
            Ok((kind, f))
        })
        .collect()
}

pub fn sample(config: &Config, a: SampleArgs) -> CliResult {
    let strategy: String = config.require(a.strategy, "strategy")?;
    let n: usize = config.require(a.n, "n")?;
    let seed: u64 = config.pick(a.seed, "seed")?.unwrap_or(0);
    let mut instances = read_instances(&a.instances)?;
    instances.sort_by(|x, y| x.instance_id.cmp(&y.instance_id));
    let pool: Vec<ManifestEntry> = instances.iter().map(entry).collect();
    let usage = |e: Error| match e {
        Error::Spec(m) => CliError::Usage(m),
        other => CliError::Data(other.into()),
    };
    let mut manifest = match strategy.as_str() {
        "balanced" => {
            let range = match config.pick(a.dep_range, "dep_range")? {
                Some(r) => parse_range(&r).map_err(CliError::Usage)?,
                None => (1, usize::MAX),
            };
            let cap: Option<usize> = config.pick(a.per_repo_cap, "per_repo_cap")?;
            let candidates: Vec<DepCandidate> = instances
                .iter()
                .filter_map(|i| match &i.ground_truth {
                    GroundTruth::DepSearch { dependencies, .. } => Some(DepCandidate {
                        id: i.instance_id.clone(),
                        repo_id: i.repo_id.clone(),
                        dep_count: dependencies.len(),
                    }),
                    _ => None,
                })
                .filter(|c| c.dep_count >= range.0 && c.dep_count <= range.1)
                .collect();
            let spec = SamplingSpec {
                strategy: Strategy::BalancedDepCount {
                    range,
                    per_repo_cap: cap,
                },
                n,
                seed,
            };
            let picked = balanced_dep_sample(&candidates, &spec).map_err(usage)?;
            let ids: BTreeSet<&str> = picked.selected.iter().map(|c| c.id.as_str()).collect();
            let entries = pool
                .iter()
                .filter(|e| ids.contains(e.instance_id.as_str()))
                .cloned()
                .collect();
            DatasetManifest::from_entries(entries, n)
        }
        "mix" => {
            let mut pools: BTreeMap<TaskKind, DatasetManifest> = BTreeMap::new();
            for kind in TaskKind::ALL {
                let members: Vec<ManifestEntry> =
                    pool.iter().filter(|e| e.kind == kind).cloned().collect();
                if !members.is_empty() {
                    pools.insert(kind, DatasetManifest::from_entries(members, 0));
                }
            }
            let fractions = match config.pick(a.mix, "mix")? {
                Some(s) => parse_mix(&s)?,
                None => fractions_from_counts(
                    &pools.iter().map(|(k, m)| (*k, m.instances.len())).collect(),
                ),
            };
            mix_tasks(&pools, &fractions, n, seed).map_err(usage)?
        }
        name => {
            let strategy = match name {
                "max-diversity" => Strategy::MaxRepoDiversity,
                "min-diversity" => Strategy::MinRepoDiversity {
                    k_repos: config.require(a.k_repos, "k_repos")?,
                },
                "in-domain" => Strategy::InDomainRepos {
                    repos: config
                        .require::<String>(a.in_domain, "in_domain")?
                        .split(',')
                        .map(|r| r.trim().to_string())
                        .filter(|r| !r.is_empty())
                        .collect(),
                },
                other => return Err(CliError::Usage(format!("unknown strategy {other:?}"))),
            };
            if pool.is_empty() {
                DatasetManifest::from_entries(Vec::new(), n)
            } else {
                diversity_sample(&pool, &SamplingSpec { strategy, n, seed }).map_err(usage)?
            }
        }
    };
    let shortfall = manifest.shortfall.take();
    manifest.instances.sort();
    let mut manifest = DatasetManifest::from_entries(manifest.instances, 0);
    if let Some(s) = &shortfall {
        eprintln!(
            "warning: selected {} of {} requested instances",
            s.selected, s.requested
        );
    }
    manifest.shortfall = shortfall;
    write_output(a.out.as_deref(), &manifest.to_records())?;
    Ok(())
}

pub fn analyze(config: &Config, a: AnalyzeArgs) -> CliResult {
    let format: String = config
        .pick(a.format, "format")?
        .unwrap_or_else(|| "text".into());
    if format != "text" && format != "records" {
        return Err(CliError::Usage(format!(
            "format must be text or records, not {format:?}"
        )));
    }
    let logs = load_logs(&a.logs)?;
    if !logs.skipped.is_empty() {
        eprintln!(
            "warning: skipped {} malformed log lines",
            logs.skipped.len()
        );
    }
    let report = trajstats::analyze(&logs, &RuleLabeler);
    let text = if format == "text" {
        report.to_text()
    } else {
        report.to_records()
    };
    write_output(a.out.as_deref(), &text)?;
    Ok(())
}
