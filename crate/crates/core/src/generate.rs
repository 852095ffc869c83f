//! Seeded synthetic workload generator.
//!
//! Atoms are derived from (query, column, position class): every referenced
//! column of a query yields a heavy "lead" atom (covered only when the column
//! leads an index), a "key" atom (covered when the column appears anywhere in
//! the key) and a light "incl" atom (covered when the column is merely
//! carried by the index). Indexes sharing key-column prefixes therefore cover
//! overlapping atoms, which gives the workload the interaction structure the
//! bounds and similarity heuristics are designed around.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{EscError, Result};
use crate::workload::{CandidateIndex, IndexableColumn, Query, Workload, WORKLOAD_FORMAT};

/// Relative atom mass per position class; scaled per query afterwards.
const LEAD_SHARE: f64 = 0.6;
const KEY_SHARE: f64 = 0.25;
const INCL_SHARE: f64 = 0.15;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub queries: usize,
    pub tables: usize,
    pub columns_per_table: usize,
    /// Candidates generated per query when `total_candidates` is unset.
    #[serde(default = "default_candidates_per_query")]
    pub candidates_per_query: usize,
    /// Exact number of distinct candidates to generate, distributed evenly
    /// over the queries (remainder goes to the earliest queries).
    #[serde(default)]
    pub total_candidates: Option<usize>,
    #[serde(default = "default_base_cost_range")]
    pub base_cost_range: (f64, f64),
    /// Upper bound on the improvable fraction of each query's base cost.
    #[serde(default = "default_max_improvement_fraction")]
    pub max_improvement_fraction: f64,
}

fn default_candidates_per_query() -> usize {
    6
}

fn default_base_cost_range() -> (f64, f64) {
    (50.0, 500.0)
}

fn default_max_improvement_fraction() -> f64 {
    0.8
}

impl GeneratorSpec {
    /// Preset sized like the TPC-H benchmark: 22 queries over 8 tables with
    /// 168 candidate indexes.
    pub fn tpch_like() -> Self {
        GeneratorSpec {
            queries: 22,
            tables: 8,
            columns_per_table: 8,
            candidates_per_query: 8,
            total_candidates: Some(168),
            base_cost_range: (100.0, 8000.0),
            max_improvement_fraction: 0.85,
        }
    }

    /// Resolve a CLI `--spec` value: a known preset name or a JSON file path.
    pub fn resolve(spec: &str) -> Result<Self> {
        if spec == "tpch-like" {
            return Ok(Self::tpch_like());
        }
        let path = std::path::Path::new(spec);
        if path.exists() {
            let text = std::fs::read_to_string(path)?;
            let parsed: GeneratorSpec = serde_json::from_str(&text)?;
            return Ok(parsed);
        }
        Err(EscError::Validation(format!(
            "--spec '{spec}' is neither a preset name (tpch-like) nor an existing file"
        )))
    }

    pub fn validate(&self) -> Result<()> {
        if self.queries == 0 || self.queries > 999 {
            return Err(EscError::Validation(format!(
                "queries must be in 1..=999, got {}",
                self.queries
            )));
        }
        if self.tables == 0 || self.tables > 99 {
            return Err(EscError::Validation(format!(
                "tables must be in 1..=99, got {}",
                self.tables
            )));
        }
        if self.columns_per_table == 0 || self.columns_per_table > 99 {
            return Err(EscError::Validation(format!(
                "columns_per_table must be in 1..=99, got {}",
                self.columns_per_table
            )));
        }
        let total = self.total_candidates.unwrap_or(self.queries * self.candidates_per_query);
        if self.total_candidates.is_none() && self.candidates_per_query == 0 {
            return Err(EscError::Validation("candidates_per_query must be positive".into()));
        }
        if total < self.queries {
            return Err(EscError::Validation(format!(
                "total_candidates {total} leaves some of the {} queries without a candidate",
                self.queries
            )));
        }
        if total > 9999 {
            return Err(EscError::Validation(format!(
                "total candidate count {total} above the supported 9999"
            )));
        }
        let (lo, hi) = self.base_cost_range;
        if !(lo > 0.0 && hi >= lo) {
            return Err(EscError::Validation(format!(
                "base_cost_range ({lo}, {hi}) must satisfy 0 < lo <= hi"
            )));
        }
        if !(0.0..=1.0).contains(&self.max_improvement_fraction) {
            return Err(EscError::Validation(format!(
                "max_improvement_fraction {} outside [0, 1]",
                self.max_improvement_fraction
            )));
        }
        Ok(())
    }
}

/// Yields the first `n` elements of a seeded permutation of `items`.
fn pick_distinct<T: Copy>(rng: &mut ChaCha8Rng, items: &[T], n: usize) -> Vec<T> {
    let mut pool: Vec<T> = items.to_vec();
    let n = n.min(pool.len());
    for i in 0..n {
        let j = i + rng.random_range(0..pool.len() - i);
        pool.swap(i, j);
    }
    pool.truncate(n);
    pool
}

struct QueryDraft {
    base_cost: f64,
    /// (table, columns on it) pairs, in draw order.
    tables: Vec<(usize, Vec<usize>)>,
    referenced: BTreeMap<String, f64>,
}

/// Canonical identity of an index: (table, key column handles, included).
type Signature = (usize, Vec<usize>, Vec<usize>);

/// Generate a workload. Same (spec, seed) yields a byte-identical workload.
pub fn generate_workload(spec: &GeneratorSpec, seed: u64) -> Result<Workload> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let column_id = |t: usize, c: usize| format!("t{t:02}_c{c:02}");
    let table_id = |t: usize| format!("t{t:02}");

    let mut columns = Vec::new();
    let mut table_weights = Vec::with_capacity(spec.tables);
    for t in 0..spec.tables {
        let w = (rng.random::<f64>() * (8.0f64.ln() - 0.5f64.ln()) + 0.5f64.ln()).exp();
        table_weights.push(w);
        for c in 0..spec.columns_per_table {
            columns.push(IndexableColumn {
                id: column_id(t, c),
                table: table_id(t),
                table_size_weight: w,
            });
        }
    }

    // Every table has one hot column order shared by all queries; a query
    // referencing a table takes a prefix of it. All candidates on a table are
    // then prefixes of one chain, so feature similarity above the interaction
    // threshold always means real redundancy, and a few deep chain indexes
    // serve many queries.
    let all_table_ixs: Vec<usize> = (0..spec.tables).collect();
    let all_col_ixs: Vec<usize> = (0..spec.columns_per_table).collect();
    let hot_orders: Vec<Vec<usize>> = (0..spec.tables)
        .map(|_| pick_distinct(&mut rng, &all_col_ixs, spec.columns_per_table))
        .collect();
    let mut drafts = Vec::with_capacity(spec.queries);
    for _ in 0..spec.queries {
        let nt = 1 + rng.random_range(0..spec.tables.min(3));
        let tables = pick_distinct(&mut rng, &all_table_ixs, nt);
        let mut by_table = Vec::with_capacity(tables.len());
        let mut referenced = BTreeMap::new();
        // Weight decays along the reference order: each query has a dominant
        // access path and a tail of minor ones, so selection saturates.
        let mut pos = 0i32;
        for &t in &tables {
            let nc = rng.random_range(2..=spec.columns_per_table.min(6).max(2));
            let cols: Vec<usize> = hot_orders[t][..nc].to_vec();
            for &c in &cols {
                let w = (0.5 + rng.random::<f64>() * 1.5) * 0.6f64.powi(pos);
                referenced.insert(column_id(t, c), w * table_weights[t]);
                pos += 1;
            }
            by_table.push((t, cols));
        }
        let (lo, hi) = spec.base_cost_range;
        let base_cost = lo + rng.random::<f64>() * (hi - lo);
        drafts.push(QueryDraft {
            base_cost,
            tables: by_table,
            referenced,
        });
    }

    // Per-query candidate counts; an exact total is spread evenly with the
    // remainder on the earliest queries.
    let counts: Vec<usize> = match spec.total_candidates {
        Some(total) => {
            let each = total / spec.queries;
            let extra = total % spec.queries;
            (0..spec.queries)
                .map(|i| each + usize::from(i < extra))
                .collect()
        }
        None => vec![spec.candidates_per_query; spec.queries],
    };

    let mut seen: HashSet<Signature> = HashSet::new();
    let mut index_defs: Vec<(Signature, usize)> = Vec::new(); // (signature, owner query)
    for (qi, draft) in drafts.iter().enumerate() {
        for _slot in 0..counts[qi] {
            let sig = draw_candidate(&mut rng, spec, draft, &seen)?;
            seen.insert(sig.clone());
            index_defs.push((sig, qi));
        }
    }

    // Atoms: one per (referenced column, position class), scaled so their sum
    // stays within the improvable fraction of the base cost.
    let classes = [("lead", LEAD_SHARE), ("key", KEY_SHARE), ("incl", INCL_SHARE)];
    let mut atoms_per_query: Vec<BTreeMap<String, f64>> = Vec::with_capacity(spec.queries);
    for draft in &drafts {
        let mut atoms = BTreeMap::new();
        if spec.max_improvement_fraction > 0.0 && !draft.referenced.is_empty() {
            let shrink = 0.7 + rng.random::<f64>() * 0.3;
            let raw_total: f64 = draft
                .referenced
                .values()
                .map(|w| w * (LEAD_SHARE + KEY_SHARE + INCL_SHARE))
                .sum();
            let scale = spec.max_improvement_fraction * draft.base_cost * shrink / raw_total;
            for (col, w) in &draft.referenced {
                for (class, share) in classes {
                    atoms.insert(format!("{col}:{class}"), w * share * scale);
                }
            }
        }
        atoms_per_query.push(atoms);
    }

    // Coverage: lead atom for the leading key, key atoms for every key
    // column, incl atoms for keys and included columns alike.
    let mut indexes = Vec::with_capacity(index_defs.len());
    let mut candidate_ids: Vec<BTreeSet<String>> = vec![BTreeSet::new(); spec.queries];
    for (zi, ((t, keys, included), owner)) in index_defs.iter().enumerate() {
        let id = format!("z{zi:04}");
        candidate_ids[*owner].insert(id.clone());
        let mut coverage = BTreeMap::new();
        for (qi, atoms) in atoms_per_query.iter().enumerate() {
            let mut covered = BTreeSet::new();
            let mut probe = |aid: String| {
                if atoms.contains_key(&aid) {
                    covered.insert(aid);
                }
            };
            probe(format!("{}:lead", column_id(*t, keys[0])));
            for &k in keys {
                probe(format!("{}:key", column_id(*t, k)));
            }
            for &c in keys.iter().chain(included.iter()) {
                probe(format!("{}:incl", column_id(*t, c)));
            }
            if !covered.is_empty() {
                coverage.insert(format!("q{qi:03}"), covered);
                candidate_ids[qi].insert(id.clone());
            }
        }
        indexes.push(CandidateIndex {
            id,
            table: table_id(*t),
            key_columns: keys.iter().map(|&c| column_id(*t, c)).collect(),
            included_columns: included.iter().map(|&c| column_id(*t, c)).collect(),
            coverage,
        });
    }

    let queries = drafts
        .iter()
        .enumerate()
        .map(|(qi, draft)| Query {
            id: format!("q{qi:03}"),
            base_cost: draft.base_cost,
            referenced_columns: draft.referenced.clone(),
            candidate_ids: std::mem::take(&mut candidate_ids[qi]),
            atoms: atoms_per_query[qi].clone(),
        })
        .collect();

    Ok(Workload {
        format: WORKLOAD_FORMAT.to_string(),
        columns,
        queries,
        indexes,
    })
}

/// Draw a candidate index for a query that is distinct from all existing
/// ones. Keys are prefixes of the query's per-table column order, so
/// same-table candidates of a query nest their coverage: feature similarity
/// above the interaction threshold implies real redundancy, while candidates
/// on different tables share no columns and stay independent. Random attempts
/// come first; deterministic tiers guarantee progress.
fn draw_candidate(
    rng: &mut ChaCha8Rng,
    spec: &GeneratorSpec,
    draft: &QueryDraft,
    seen: &HashSet<Signature>,
) -> Result<Signature> {
    for _ in 0..200 {
        let (t, cols) = &draft.tables[rng.random_range(0..draft.tables.len())];
        let key_len = 1 + rng.random_range(0..cols.len().min(3));
        let keys: Vec<usize> = cols[..key_len].to_vec();
        let rest = &cols[key_len..];
        let mut included = if rest.is_empty() || rng.random::<f64>() < 0.5 {
            Vec::new()
        } else {
            let inc_len = 1 + rng.random_range(0..rest.len().min(2));
            pick_distinct(rng, rest, inc_len)
        };
        included.sort_unstable();
        let sig = (*t, keys, included);
        if !seen.contains(&sig) {
            return Ok(sig);
        }
    }
    // Deterministic fallback. First the query's own prefix runs with
    // referenced includes, then padding variants carrying one unreferenced
    // column (distinct identity, identical coverage), then schema-wide runs
    // as the absolute guarantee.
    for (t, cols) in &draft.tables {
        for len in 1..=cols.len().min(3) {
            let keys: Vec<usize> = cols[..len].to_vec();
            let sig = (*t, keys.clone(), Vec::new());
            if !seen.contains(&sig) {
                return Ok(sig);
            }
            for &inc in &cols[len..] {
                let sig = (*t, keys.clone(), vec![inc]);
                if !seen.contains(&sig) {
                    return Ok(sig);
                }
            }
        }
    }
    for (t, cols) in &draft.tables {
        for len in 1..=cols.len().min(3) {
            let keys: Vec<usize> = cols[..len].to_vec();
            for inc in 0..spec.columns_per_table {
                if cols.contains(&inc) {
                    continue;
                }
                let sig = (*t, keys.clone(), vec![inc]);
                if !seen.contains(&sig) {
                    return Ok(sig);
                }
            }
        }
    }
    for t in 0..spec.tables {
        for start in 0..spec.columns_per_table {
            for len in 1..=(spec.columns_per_table - start).min(3) {
                let keys: Vec<usize> = (start..start + len).collect();
                let sig = (t, keys.clone(), Vec::new());
                if !seen.contains(&sig) {
                    return Ok(sig);
                }
                for inc in start + len..spec.columns_per_table {
                    let sig = (t, keys.clone(), vec![inc]);
                    if !seen.contains(&sig) {
                        return Ok(sig);
                    }
                }
            }
        }
    }
    Err(EscError::Validation(
        "candidate space exhausted; lower total_candidates".into(),
    ))
}
