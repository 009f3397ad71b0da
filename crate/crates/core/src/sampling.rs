//! Dataset assembly: dependency-count balancing, repository diversity and
//! proportional task mixing. All randomness comes from a seeded ChaCha stream.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::taskgen::TaskKind;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "snake_case")]
pub enum Strategy {
    MaxRepoDiversity,
    MinRepoDiversity {
        k_repos: usize,
    },
    InDomainRepos {
        repos: BTreeSet<String>,
    },
    BalancedDepCount {
        range: (usize, usize),
        /// `None` means no cap.
        per_repo_cap: Option<usize>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingSpec {
    pub strategy: Strategy,
    pub n: usize,
    pub seed: u64,
}

impl SamplingSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Spec("n must be at least 1".into()));
        }
        match &self.strategy {
            Strategy::MinRepoDiversity { k_repos: 0 } => {
                Err(Error::Spec("k_repos must be at least 1".into()))
            }
            Strategy::BalancedDepCount {
                range: (lo, hi), ..
            } if lo > hi => Err(Error::Spec(format!("empty dependency range [{lo}, {hi}]"))),
            _ => Ok(()),
        }
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// One sampling candidate.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub instance_id: String,
    pub repo_id: String,
    pub kind: TaskKind,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shortfall {
    pub requested: usize,
    pub selected: usize,
    pub per_task_deficit: BTreeMap<TaskKind, usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub instances: Vec<ManifestEntry>,
    pub per_repo_counts: BTreeMap<String, usize>,
    pub per_task_counts: BTreeMap<TaskKind, usize>,
    pub shortfall: Option<Shortfall>,
}

impl DatasetManifest {
    pub fn from_entries(instances: Vec<ManifestEntry>, requested: usize) -> Self {
        let mut per_repo_counts = BTreeMap::new();
        let mut per_task_counts = BTreeMap::new();
        for e in &instances {
            *per_repo_counts.entry(e.repo_id.clone()).or_default() += 1;
            *per_task_counts.entry(e.kind).or_default() += 1;
        }
        let shortfall = (instances.len() < requested).then(|| Shortfall {
            requested,
            selected: instances.len(),
            per_task_deficit: BTreeMap::new(),
        });
        Self {
            instances,
            per_repo_counts,
            per_task_counts,
            shortfall,
        }
    }

    pub fn instance_ids(&self) -> impl Iterator<Item = &str> {
        self.instances.iter().map(|e| e.instance_id.as_str())
    }

    pub fn distinct_repos(&self) -> usize {
        self.per_repo_counts.len()
    }

    /// One record per entry, then a `summary` record with counts and shortfall.
    pub fn to_records(&self) -> String {
        let mut out = String::new();
        for e in &self.instances {
            let mut v = serde_json::to_value(e).expect("manifest entries serialize");
            v["record"] = "instance".into();
            out.push_str(&v.to_string());
            out.push('\n');
        }
        let summary = serde_json::json!({
            "record": "summary",
            "total": self.instances.len(),
            "per_repo_counts": self.per_repo_counts,
            "per_task_counts": self.per_task_counts,
            "shortfall": self.shortfall,
        });
        out.push_str(&summary.to_string());
        out.push('\n');
        out
    }

    pub fn from_records(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        let mut shortfall = None;
        for (i, line) in text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
        {
            let v: serde_json::Value = serde_json::from_str(line)
                .map_err(|e| Error::Record(format!("line {}: {e}", i + 1)))?;
            match v["record"].as_str() {
                Some("instance") => entries.push(
                    serde_json::from_value(v)
                        .map_err(|e| Error::Record(format!("line {}: {e}", i + 1)))?,
                ),
                Some("summary") => {
                    shortfall = serde_json::from_value(v["shortfall"].clone())
                        .map_err(|e| Error::Record(format!("line {}: {e}", i + 1)))?;
                }
                _ => return Err(Error::Record(format!("line {}: unknown record", i + 1))),
            }
        }
        let mut m = Self::from_entries(entries, 0);
        m.shortfall = shortfall;
        Ok(m)
    }
}

/// A dependency-search target with its direct dependency count.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DepCandidate {
    pub id: String,
    pub repo_id: String,
    pub dep_count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BalancedSample {
    pub selected: Vec<DepCandidate>,
    pub shortfall: bool,
}

impl BalancedSample {
    pub fn bucket_sizes(&self) -> BTreeMap<usize, usize> {
        let mut out = BTreeMap::new();
        for c in &self.selected {
            *out.entry(c.dep_count).or_default() += 1;
        }
        out
    }
}

/// Fills dependency-count buckets round-robin from a seeded shuffle, so bucket
/// sizes level out as far as supply allows and no repository exceeds the cap.
/// Smaller dependency counts receive the first pick of every round.
pub fn balanced_dep_sample(
    candidates: &[DepCandidate],
    spec: &SamplingSpec,
) -> Result<BalancedSample> {
    spec.validate()?;
    let Strategy::BalancedDepCount {
        range,
        per_repo_cap,
    } = &spec.strategy
    else {
        return Err(Error::Spec(
            "balanced sampling needs a BalancedDepCount strategy".into(),
        ));
    };
    if let Some(c) = candidates
        .iter()
        .find(|c| c.dep_count < range.0 || c.dep_count > range.1)
    {
        return Err(Error::Spec(format!(
            "{} has {} dependencies, outside [{}, {}]",
            c.id, c.dep_count, range.0, range.1
        )));
    }
    let cap = per_repo_cap.unwrap_or(usize::MAX);
    let mut sorted = candidates.to_vec();
    sorted.sort();
    sorted.shuffle(&mut rng(spec.seed));

    let mut buckets: BTreeMap<usize, std::vec::IntoIter<DepCandidate>> = BTreeMap::new();
    {
        let mut grouped: BTreeMap<usize, Vec<DepCandidate>> = BTreeMap::new();
        for c in sorted {
            grouped.entry(c.dep_count).or_default().push(c);
        }
        for (k, v) in grouped {
            buckets.insert(k, v.into_iter());
        }
    }
    let mut per_repo: BTreeMap<String, usize> = BTreeMap::new();
    let mut selected = Vec::new();
    'rounds: loop {
        let mut progressed = false;
        for iter in buckets.values_mut() {
            if selected.len() == spec.n {
                break 'rounds;
            }
            // Skip candidates whose repository is already at the cap; counts only grow.
            let next = iter.find(|c| per_repo.get(&c.repo_id).copied().unwrap_or(0) < cap);
            if let Some(c) = next {
                *per_repo.entry(c.repo_id.clone()).or_default() += 1;
                selected.push(c);
                progressed = true;
            }
        }
        if !progressed {
            break;
        }
    }
    let shortfall = selected.len() < spec.n;
    Ok(BalancedSample {
        selected,
        shortfall,
    })
}

/// Repository-diversity strategies over a pool of instances.
pub fn diversity_sample(pool: &[ManifestEntry], spec: &SamplingSpec) -> Result<DatasetManifest> {
    spec.validate()?;
    if pool.is_empty() {
        return Err(Error::Spec("empty pool".into()));
    }
    let mut by_repo: BTreeMap<&str, Vec<&ManifestEntry>> = BTreeMap::new();
    for e in pool {
        by_repo.entry(e.repo_id.as_str()).or_default().push(e);
    }
    for v in by_repo.values_mut() {
        v.sort();
    }
    let mut rng = rng(spec.seed);
    let chosen: Vec<ManifestEntry> = match &spec.strategy {
        Strategy::MaxRepoDiversity => {
            let mut repos: Vec<&str> = by_repo.keys().copied().collect();
            repos.shuffle(&mut rng);
            repos
                .into_iter()
                .take(spec.n)
                .map(|r| (*by_repo[r].choose(&mut rng).expect("repos are nonempty")).clone())
                .collect()
        }
        Strategy::MinRepoDiversity { k_repos } => {
            let mut repos: Vec<(&str, usize)> =
                by_repo.iter().map(|(r, v)| (*r, v.len())).collect();
            repos.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
            let mut members: Vec<&ManifestEntry> = repos
                .iter()
                .take(*k_repos)
                .flat_map(|(r, _)| by_repo[r].iter().copied())
                .collect();
            members.shuffle(&mut rng);
            members.into_iter().take(spec.n).cloned().collect()
        }
        Strategy::InDomainRepos { repos } => {
            let mut members: Vec<&ManifestEntry> = by_repo
                .iter()
                .filter(|(r, _)| repos.contains(**r))
                .flat_map(|(_, v)| v.iter().copied())
                .collect();
            members.shuffle(&mut rng);
            members.into_iter().take(spec.n).cloned().collect()
        }
        Strategy::BalancedDepCount { .. } => {
            return Err(Error::Spec(
                "use balanced_dep_sample for dependency balancing".into(),
            ));
        }
    };
    Ok(DatasetManifest::from_entries(chosen, spec.n))
}

/// Largest-remainder apportionment of `n` seats by `fractions`. Ties in the
/// remainder go to the earlier key.
pub fn largest_remainder<K: Ord + Clone>(
    n: usize,
    fractions: &BTreeMap<K, f64>,
) -> BTreeMap<K, usize> {
    // Absorbs representation error such as 447 * 0.2 = 89.39999.
    const EPS: f64 = 1e-9;
    let mut quotas: BTreeMap<K, usize> = BTreeMap::new();
    let mut remainders: Vec<(f64, usize, K)> = Vec::new();
    for (i, (k, f)) in fractions.iter().enumerate() {
        let exact = n as f64 * f;
        let floor = (exact + EPS).floor();
        quotas.insert(k.clone(), floor as usize);
        remainders.push(((exact - floor).max(0.0), i, k.clone()));
    }
    let assigned: usize = quotas.values().sum();
    remainders.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    for (_, _, k) in remainders.into_iter().take(n.saturating_sub(assigned)) {
        *quotas.get_mut(&k).expect("key present") += 1;
    }
    quotas
}

/// Fractions proportional to integer counts.
pub fn fractions_from_counts<K: Ord + Clone>(counts: &BTreeMap<K, usize>) -> BTreeMap<K, f64> {
    let total: usize = counts.values().sum();
    counts
        .iter()
        .map(|(k, c)| {
            (
                k.clone(),
                if total == 0 {
                    0.0
                } else {
                    *c as f64 / total as f64
                },
            )
        })
        .collect()
}

/// Draws a mixed dataset with per-task quotas apportioned from `fractions`.
pub fn mix_tasks(
    pools: &BTreeMap<TaskKind, DatasetManifest>,
    fractions: &BTreeMap<TaskKind, f64>,
    n: usize,
    seed: u64,
) -> Result<DatasetManifest> {
    let sum: f64 = fractions.values().sum();
    if (sum - 1.0).abs() > 1e-9 || fractions.values().any(|f| *f < 0.0) {
        return Err(Error::Spec(format!("fractions sum to {sum}, not 1")));
    }
    let quotas = largest_remainder(n, fractions);
    let mut chosen = Vec::new();
    let mut deficit = BTreeMap::new();
    for (kind, quota) in &quotas {
        let mut members: Vec<&ManifestEntry> = pools
            .get(kind)
            .map(|m| m.instances.iter().collect())
            .unwrap_or_default();
        members.sort();
        members.shuffle(&mut rng(
            seed ^ (*kind as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15)
        ));
        if members.len() < *quota {
            deficit.insert(*kind, quota - members.len());
        }
        chosen.extend(members.into_iter().take(*quota).cloned());
    }
    let mut manifest = DatasetManifest::from_entries(chosen, n);
    if !deficit.is_empty() {
        let s = manifest.shortfall.get_or_insert_with(Shortfall::default);
        s.requested = n;
        s.selected = manifest.instances.len();
        s.per_task_deficit = deficit;
    }
    Ok(manifest)
}
