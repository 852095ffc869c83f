//! Workload model.
//!
//! A workload is a set of queries over indexable columns plus the candidate
//! indexes considered by the tuner. Query costs are defined through "atoms":
//! each query owns a set of positively weighted atoms, and each candidate
//! index covers some subset of them. The oracle's what-if cost of a query
//! under a configuration is the base cost minus the weight of all atoms
//! covered by at least one member, which makes costs monotone and submodular
//! by construction.
//!
//! Ids in the serialized form are strings. After validation each column,
//! query and index receives a dense handle equal to its position in the file;
//! every deterministic tie-break in the crate ("smallest index id") is over
//! these handles. The generator emits ids in sorted order so the two orders
//! coincide.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{EscError, Result};

pub const WORKLOAD_FORMAT: &str = "esc-workload/1";

/// Tolerance for "sum of atom weights <= base cost" under float rounding.
const WEIGHT_SUM_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct IndexableColumn {
    pub id: String,
    pub table: String,
    /// Positive weight standing in for relation size.
    pub table_size_weight: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Query {
    pub id: String,
    pub base_cost: f64,
    /// Column id -> nonnegative reference weight.
    pub referenced_columns: BTreeMap<String, f64>,
    /// Ids of the candidate indexes of this query; their union is the best
    /// possible configuration for the query.
    pub candidate_ids: BTreeSet<String>,
    /// Atom id -> positive weight, in oracle benefit units.
    pub atoms: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CandidateIndex {
    pub id: String,
    pub table: String,
    /// Ordered, duplicate-free key columns; all on `table`.
    pub key_columns: Vec<String>,
    /// Non-key included columns, disjoint from the keys.
    pub included_columns: BTreeSet<String>,
    /// Query id -> atom ids of that query this index covers.
    pub coverage: BTreeMap<String, BTreeSet<String>>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Workload {
    pub format: String,
    pub columns: Vec<IndexableColumn>,
    pub queries: Vec<Query>,
    pub indexes: Vec<CandidateIndex>,
}

/// A set of candidate indexes, stored as sorted dense handles.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Configuration(Vec<u32>);

impl Configuration {
    pub fn empty() -> Self {
        Configuration(Vec::new())
    }

    pub fn from_members<I: IntoIterator<Item = u32>>(members: I) -> Self {
        let mut v: Vec<u32> = members.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        Configuration(v)
    }

    /// Copy of `self` with `z` added.
    pub fn with(&self, z: u32) -> Self {
        match self.0.binary_search(&z) {
            Ok(_) => self.clone(),
            Err(pos) => {
                let mut v = self.0.clone();
                v.insert(pos, z);
                Configuration(v)
            }
        }
    }

    pub fn contains(&self, z: u32) -> bool {
        self.0.binary_search(&z).is_ok()
    }

    /// True iff every member of `self` is a member of `other`.
    pub fn is_subset_of(&self, other: &Configuration) -> bool {
        if self.0.len() > other.0.len() {
            return false;
        }
        let mut it = other.0.iter();
        'outer: for m in &self.0 {
            for o in it.by_ref() {
                match o.cmp(m) {
                    std::cmp::Ordering::Less => continue,
                    std::cmp::Ordering::Equal => continue 'outer,
                    std::cmp::Ordering::Greater => return false,
                }
            }
            return false;
        }
        true
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn members(&self) -> &[u32] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.0.iter().copied()
    }
}

/// Dense cross-reference view built by validation.
///
/// All hot paths work on handles and pre-resolved per-query atom tables; the
/// serde-facing structs above are only touched at the edges.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub column_handle: HashMap<String, u32>,
    pub query_handle: HashMap<String, u32>,
    pub index_handle: HashMap<String, u32>,
    /// Per query: atom weights by dense atom position (sorted atom id order).
    pub atom_weights: Vec<Vec<f64>>,
    /// `coverage[z][q]`: sorted dense atom positions of query q covered by z.
    pub coverage: Vec<Vec<Vec<u32>>>,
    /// Per query: sorted handles of its candidate indexes (the Omega set).
    pub candidates: Vec<Vec<u32>>,
    pub base_costs: Vec<f64>,
}

/// A validated workload plus its resolved view.
#[derive(Debug, Clone)]
pub struct Instance {
    pub workload: Workload,
    pub resolved: Resolved,
}

impl Instance {
    pub fn new(workload: Workload) -> Result<Self> {
        let resolved = validate(&workload)?;
        Ok(Instance { workload, resolved })
    }

    pub fn query_count(&self) -> usize {
        self.workload.queries.len()
    }

    pub fn index_count(&self) -> usize {
        self.workload.indexes.len()
    }

    pub fn base_cost(&self, q: u32) -> f64 {
        self.resolved.base_costs[q as usize]
    }

    /// Sum of base costs: the what-if cost of the empty configuration.
    pub fn empty_workload_cost(&self) -> f64 {
        self.resolved.base_costs.iter().sum()
    }

    pub fn candidates_of(&self, q: u32) -> &[u32] {
        &self.resolved.candidates[q as usize]
    }

    /// The configuration of all candidates of q.
    pub fn omega(&self, q: u32) -> Configuration {
        Configuration::from_members(self.resolved.candidates[q as usize].iter().copied())
    }

    pub fn index_id(&self, z: u32) -> &str {
        &self.workload.indexes[z as usize].id
    }

    pub fn query_id(&self, q: u32) -> &str {
        &self.workload.queries[q as usize].id
    }

    pub fn config_from_ids<'a, I: IntoIterator<Item = &'a str>>(
        &self,
        ids: I,
    ) -> Result<Configuration> {
        let mut members = Vec::new();
        for id in ids {
            let z = self.resolved.index_handle.get(id).ok_or_else(|| {
                EscError::Structural(format!("unknown index id '{id}' in configuration"))
            })?;
            members.push(*z);
        }
        Ok(Configuration::from_members(members))
    }

    pub fn config_ids(&self, config: &Configuration) -> Vec<String> {
        config.iter().map(|z| self.index_id(z).to_string()).collect()
    }
}

fn validate(w: &Workload) -> Result<Resolved> {
    if w.format != WORKLOAD_FORMAT {
        return Err(EscError::Validation(format!(
            "unsupported workload format '{}', expected '{}'",
            w.format, WORKLOAD_FORMAT
        )));
    }
    if w.queries.is_empty() {
        return Err(EscError::Validation("workload has no queries".into()));
    }

    let mut column_handle = HashMap::new();
    let mut column_table = Vec::new();
    for (i, c) in w.columns.iter().enumerate() {
        if !(c.table_size_weight > 0.0) {
            return Err(EscError::Validation(format!(
                "column '{}' has non-positive table_size_weight",
                c.id
            )));
        }
        if column_handle.insert(c.id.clone(), i as u32).is_some() {
            return Err(EscError::Validation(format!("duplicate column id '{}'", c.id)));
        }
        column_table.push(c.table.clone());
    }

    let mut query_handle = HashMap::new();
    for (i, q) in w.queries.iter().enumerate() {
        if query_handle.insert(q.id.clone(), i as u32).is_some() {
            return Err(EscError::Validation(format!("duplicate query id '{}'", q.id)));
        }
    }
    let mut index_handle = HashMap::new();
    for (i, z) in w.indexes.iter().enumerate() {
        if index_handle.insert(z.id.clone(), i as u32).is_some() {
            return Err(EscError::Validation(format!("duplicate index id '{}'", z.id)));
        }
    }

    let mut base_costs = Vec::with_capacity(w.queries.len());
    let mut atom_pos: Vec<HashMap<&str, u32>> = Vec::with_capacity(w.queries.len());
    let mut atom_weights = Vec::with_capacity(w.queries.len());
    for q in &w.queries {
        if !(q.base_cost > 0.0) {
            return Err(EscError::Validation(format!(
                "query '{}' has non-positive base_cost",
                q.id
            )));
        }
        for (col, wgt) in &q.referenced_columns {
            if !column_handle.contains_key(col.as_str()) {
                return Err(EscError::Structural(format!(
                    "query '{}' references unknown column '{col}'",
                    q.id
                )));
            }
            if !(*wgt >= 0.0) {
                return Err(EscError::Validation(format!(
                    "query '{}' has negative weight for column '{col}'",
                    q.id
                )));
            }
        }
        if q.candidate_ids.is_empty() {
            return Err(EscError::Validation(format!(
                "query '{}' has no candidate indexes",
                q.id
            )));
        }
        for id in &q.candidate_ids {
            if !index_handle.contains_key(id.as_str()) {
                return Err(EscError::Structural(format!(
                    "query '{}' lists unknown candidate index '{id}'",
                    q.id
                )));
            }
        }
        let mut positions = HashMap::new();
        let mut weights = Vec::with_capacity(q.atoms.len());
        let mut total = 0.0;
        // BTreeMap iteration: atom positions follow sorted atom id order.
        for (aid, wgt) in &q.atoms {
            if !(*wgt > 0.0) {
                return Err(EscError::Validation(format!(
                    "query '{}' atom '{aid}' has non-positive weight",
                    q.id
                )));
            }
            positions.insert(aid.as_str(), weights.len() as u32);
            weights.push(*wgt);
            total += *wgt;
        }
        if total > q.base_cost * (1.0 + WEIGHT_SUM_SLACK) + WEIGHT_SUM_SLACK {
            return Err(EscError::Validation(format!(
                "query '{}': atom weights sum to {total}, above base_cost {}",
                q.id, q.base_cost
            )));
        }
        base_costs.push(q.base_cost);
        atom_pos.push(positions);
        atom_weights.push(weights);
    }

    let mut coverage = vec![vec![Vec::new(); w.queries.len()]; w.indexes.len()];
    for (zi, z) in w.indexes.iter().enumerate() {
        if z.key_columns.is_empty() {
            return Err(EscError::Validation(format!(
                "index '{}' has no key columns",
                z.id
            )));
        }
        let mut seen = HashSet::new();
        for col in &z.key_columns {
            let handle = column_handle.get(col.as_str()).ok_or_else(|| {
                EscError::Structural(format!("index '{}' keys unknown column '{col}'", z.id))
            })?;
            if !seen.insert(col.as_str()) {
                return Err(EscError::Validation(format!(
                    "index '{}' repeats key column '{col}'",
                    z.id
                )));
            }
            if column_table[*handle as usize] != z.table {
                return Err(EscError::Validation(format!(
                    "index '{}' on table '{}' keys column '{col}' of another table",
                    z.id, z.table
                )));
            }
        }
        for col in &z.included_columns {
            let handle = column_handle.get(col.as_str()).ok_or_else(|| {
                EscError::Structural(format!("index '{}' includes unknown column '{col}'", z.id))
            })?;
            if seen.contains(col.as_str()) {
                return Err(EscError::Validation(format!(
                    "index '{}' includes key column '{col}'",
                    z.id
                )));
            }
            if column_table[*handle as usize] != z.table {
                return Err(EscError::Validation(format!(
                    "index '{}' on table '{}' includes column '{col}' of another table",
                    z.id, z.table
                )));
            }
        }
        for (qid, atoms) in &z.coverage {
            let q = *query_handle.get(qid.as_str()).ok_or_else(|| {
                EscError::Structural(format!("index '{}' covers unknown query '{qid}'", z.id))
            })? as usize;
            let mut positions = Vec::with_capacity(atoms.len());
            for aid in atoms {
                let pos = atom_pos[q].get(aid.as_str()).ok_or_else(|| {
                    EscError::Structural(format!(
                        "index '{}' covers unknown atom '{aid}' of query '{qid}'",
                        z.id
                    ))
                })?;
                positions.push(*pos);
            }
            positions.sort_unstable();
            // Every index that can benefit q must be among q's candidates,
            // otherwise Delta(q, Omega_q) is not a sound cap on marginals.
            if !positions.is_empty() && !w.queries[q].candidate_ids.contains(&z.id) {
                return Err(EscError::Validation(format!(
                    "index '{}' covers atoms of query '{qid}' but is not among its candidates",
                    z.id
                )));
            }
            coverage[zi][q] = positions;
        }
    }

    let mut candidates = Vec::with_capacity(w.queries.len());
    for q in &w.queries {
        let mut handles: Vec<u32> = q
            .candidate_ids
            .iter()
            .map(|id| index_handle[id.as_str()])
            .collect();
        handles.sort_unstable();
        candidates.push(handles);
    }

    Ok(Resolved {
        column_handle,
        query_handle,
        index_handle,
        atom_weights,
        coverage,
        candidates,
        base_costs,
    })
}

impl Workload {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(json: &str) -> Result<Workload> {
        Ok(serde_json::from_str(json)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = self.to_json()?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Workload> {
        let text = std::fs::read_to_string(path)?;
        Workload::from_json(&text)
    }
}
