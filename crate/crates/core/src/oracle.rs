//! What-if cost oracle, call budget accounting and the cost cache.
//!
//! The oracle prices a query under a configuration as its base cost minus
//! the total weight of atoms covered by at least one member. Coverage makes
//! the cost monotone (supersets never cost more) and the improvement
//! submodular (marginals shrink as the configuration grows); the adversarial
//! mode deliberately breaks both within a bounded factor.

use std::collections::HashMap;

use crate::error::{EscError, Result};
use crate::workload::{Configuration, Instance};

/// Percentage improvement of a configuration whose cost is `cost` over the
/// empty-configuration cost `cost_empty`.
pub fn percentage_improvement(cost_empty: f64, cost: f64) -> Result<f64> {
    if !(cost_empty > 0.0) {
        return Err(EscError::Validation(format!(
            "empty-configuration cost must be positive, got {cost_empty}"
        )));
    }
    if cost > cost_empty * (1.0 + 1e-9) {
        return Err(EscError::ContractViolation(format!(
            "configuration cost {cost} above empty-configuration cost {cost_empty}"
        )));
    }
    Ok(1.0 - cost / cost_empty)
}

const JITTER_LO: f64 = 0.9;
const JITTER_SPAN: f64 = 0.2;

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

/// Ground-truth cost oracle. Pure and unbudgeted; the tuners only ever see
/// it through [`BudgetedOracle`].
#[derive(Debug, Clone)]
pub struct CoverageOracle {
    base_costs: Vec<f64>,
    atom_weights: Vec<Vec<f64>>,
    /// `coverage[q][z]`: bitmask blocks over query q's atoms.
    coverage: Vec<Vec<Vec<u64>>>,
    blocks: Vec<usize>,
    /// Seed for the bounded per-(q, C) jitter; None = faithful oracle.
    adversarial_seed: Option<u64>,
}

impl CoverageOracle {
    pub fn new(inst: &Instance) -> Self {
        Self::build(inst, None)
    }

    /// Oracle whose improvements are scaled by a deterministic factor in
    /// [0.9, 1.1] per (query, configuration). Breaks monotonicity and
    /// submodularity in a bounded way; off everywhere by default.
    pub fn adversarial(inst: &Instance, seed: u64) -> Self {
        Self::build(inst, Some(seed))
    }

    fn build(inst: &Instance, adversarial_seed: Option<u64>) -> Self {
        let nq = inst.query_count();
        let nz = inst.index_count();
        let mut blocks = Vec::with_capacity(nq);
        for q in 0..nq {
            blocks.push(inst.resolved.atom_weights[q].len().div_ceil(64).max(1));
        }
        let mut coverage = vec![Vec::with_capacity(nz); nq];
        for (q, per_query) in coverage.iter_mut().enumerate() {
            for z in 0..nz {
                let mut mask = vec![0u64; blocks[q]];
                for &a in &inst.resolved.coverage[z][q] {
                    mask[(a / 64) as usize] |= 1u64 << (a % 64);
                }
                per_query.push(mask);
            }
        }
        CoverageOracle {
            base_costs: inst.resolved.base_costs.clone(),
            atom_weights: inst.resolved.atom_weights.clone(),
            coverage,
            blocks,
            adversarial_seed,
        }
    }

    pub fn query_count(&self) -> usize {
        self.base_costs.len()
    }

    pub fn empty_workload_cost(&self) -> f64 {
        self.base_costs.iter().sum()
    }

    /// c(q, C): what-if cost of query q under configuration C.
    pub fn query_cost(&self, q: u32, config: &Configuration) -> f64 {
        let qi = q as usize;
        let mut union = vec![0u64; self.blocks[qi]];
        for z in config.iter() {
            for (acc, m) in union.iter_mut().zip(&self.coverage[qi][z as usize]) {
                *acc |= m;
            }
        }
        let mut improvement = 0.0;
        for (block, bits) in union.iter().enumerate() {
            let mut bits = *bits;
            while bits != 0 {
                let bit = bits.trailing_zeros() as usize;
                improvement += self.atom_weights[qi][block * 64 + bit];
                bits &= bits - 1;
            }
        }
        if let Some(seed) = self.adversarial_seed {
            let mut h = splitmix(seed ^ splitmix(q as u64 + 1));
            for z in config.iter() {
                h = splitmix(h ^ (z as u64).wrapping_add(0x517c_c1b7_2722_0a95));
            }
            let jitter = JITTER_LO + JITTER_SPAN * ((h >> 11) as f64 / (1u64 << 53) as f64);
            improvement *= jitter;
        }
        (self.base_costs[qi] - improvement).max(0.0)
    }

    /// c(W, C): sum of per-query costs.
    pub fn workload_cost(&self, config: &Configuration) -> f64 {
        (0..self.base_costs.len() as u32)
            .map(|q| self.query_cost(q, config))
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CallRecord {
    /// 1-based position in the call sequence.
    pub seq: u64,
    pub query: u32,
    pub config: Configuration,
    pub cost: f64,
}

/// Budgeted front end of the oracle: at most `budget` calls succeed; the
/// (B+1)-th attempt fails with `BudgetExhausted` and is not logged.
#[derive(Debug, Clone)]
pub struct BudgetedOracle {
    oracle: CoverageOracle,
    budget: u64,
    log: Vec<CallRecord>,
}

impl BudgetedOracle {
    pub fn new(oracle: CoverageOracle, budget: u64) -> Self {
        BudgetedOracle {
            oracle,
            budget,
            log: Vec::new(),
        }
    }

    pub fn whatif_cost(&mut self, q: u32, config: &Configuration) -> Result<f64> {
        if self.log.len() as u64 >= self.budget {
            return Err(EscError::BudgetExhausted);
        }
        let cost = self.oracle.query_cost(q, config);
        self.log.push(CallRecord {
            seq: self.log.len() as u64 + 1,
            query: q,
            config: config.clone(),
            cost,
        });
        Ok(cost)
    }

    pub fn calls_used(&self) -> u64 {
        self.log.len() as u64
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }

    pub fn log(&self) -> &[CallRecord] {
        &self.log
    }

    pub fn into_log(self) -> Vec<CallRecord> {
        self.log
    }

    /// The unmetered oracle, for ground-truth evaluation only.
    pub fn raw(&self) -> &CoverageOracle {
        &self.oracle
    }
}

#[derive(Debug, Clone)]
pub struct CacheEntry {
    pub config: Configuration,
    pub cost: f64,
    /// True when the value came from a real what-if call; false for values
    /// substituted by call skipping. Non-authoritative entries still feed
    /// derived costs but never refine call bounds.
    pub authoritative: bool,
}

#[derive(Debug, Clone, Default)]
struct QueryCache {
    entries: Vec<CacheEntry>,
    by_config: HashMap<Configuration, usize>,
}

/// Per-query cache of every cost the run has seen.
#[derive(Debug, Clone)]
pub struct CostCache {
    queries: Vec<QueryCache>,
}

impl CostCache {
    pub fn new(query_count: usize) -> Self {
        CostCache {
            queries: vec![QueryCache::default(); query_count],
        }
    }

    pub fn insert(&mut self, q: u32, config: Configuration, cost: f64, authoritative: bool) {
        let qc = &mut self.queries[q as usize];
        match qc.by_config.get(&config) {
            Some(&i) => {
                let e = &mut qc.entries[i];
                // An authoritative value always wins over a substituted one.
                if authoritative && !e.authoritative {
                    e.cost = cost;
                    e.authoritative = true;
                }
            }
            None => {
                qc.by_config.insert(config.clone(), qc.entries.len());
                qc.entries.push(CacheEntry {
                    config,
                    cost,
                    authoritative,
                });
            }
        }
    }

    pub fn exact(&self, q: u32, config: &Configuration) -> Option<&CacheEntry> {
        let qc = &self.queries[q as usize];
        qc.by_config.get(config).map(|&i| &qc.entries[i])
    }

    pub fn entries(&self, q: u32) -> &[CacheEntry] {
        &self.queries[q as usize].entries
    }

    /// d(q, C): cheapest cached cost among configurations that are subsets
    /// of C. An upper bound of c(q, C) under monotone costs. The cache must
    /// already know the empty configuration.
    pub fn derived_cost(&self, q: u32, config: &Configuration) -> f64 {
        let mut best = f64::INFINITY;
        for e in &self.queries[q as usize].entries {
            if e.cost < best && e.config.is_subset_of(config) {
                best = e.cost;
            }
        }
        assert!(
            best.is_finite(),
            "derived cost requires the empty configuration to be cached"
        );
        best
    }

    /// d(W, C) summed over all queries.
    pub fn derived_workload_cost(&self, config: &Configuration) -> f64 {
        (0..self.queries.len() as u32)
            .map(|q| self.derived_cost(q, config))
            .sum()
    }

    /// Cost improvement Delta(q, C) = c(q, empty) - c(q, C) from cached
    /// authoritative values; None when either cost is unknown.
    pub fn improvement(&self, q: u32, config: &Configuration) -> Option<f64> {
        let base = self.authoritative_cost(q, &Configuration::empty())?;
        let c = self.authoritative_cost(q, config)?;
        Some(base - c)
    }

    pub fn authoritative_cost(&self, q: u32, config: &Configuration) -> Option<f64> {
        self.exact(q, config)
            .filter(|e| e.authoritative)
            .map(|e| e.cost)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workload::{Instance, Workload};

    /// Single query: base 100, atoms {a: 30, b: 20}; z0 covers {a},
    /// z1 covers {a, b}.
    fn single_query() -> Instance {
        let w: Workload = serde_json::from_value(serde_json::json!({
            "format": "esc-workload/1",
            "columns": [
                {"id": "t_a", "table": "t", "table_size_weight": 1.0},
                {"id": "t_b", "table": "t", "table_size_weight": 1.0}
            ],
            "queries": [{
                "id": "q0",
                "base_cost": 100.0,
                "referenced_columns": {"t_a": 1.0, "t_b": 1.0},
                "candidate_ids": ["z0", "z1"],
                "atoms": {"a": 30.0, "b": 20.0}
            }],
            "indexes": [
                {"id": "z0", "table": "t", "key_columns": ["t_a"],
                 "included_columns": [], "coverage": {"q0": ["a"]}},
                {"id": "z1", "table": "t", "key_columns": ["t_a", "t_b"],
                 "included_columns": [], "coverage": {"q0": ["a", "b"]}}
            ]
        }))
        .unwrap();
        Instance::new(w).unwrap()
    }

    #[test]
    fn coverage_costs_match_hand_computation() {
        let inst = single_query();
        let o = CoverageOracle::new(&inst);
        let empty = Configuration::empty();
        let z0 = Configuration::from_members([0]);
        let z1 = Configuration::from_members([1]);
        let both = Configuration::from_members([0, 1]);
        assert_eq!(o.query_cost(0, &empty), 100.0);
        assert_eq!(o.query_cost(0, &z0), 70.0);
        assert_eq!(o.query_cost(0, &z1), 50.0);
        // z0's atom is a subset of z1's: adding it changes nothing.
        assert_eq!(o.query_cost(0, &both), 50.0);
        assert_eq!(o.workload_cost(&both), 50.0);
    }

    #[test]
    fn improvement_fraction_and_contract() {
        assert_eq!(percentage_improvement(100.0, 50.0).unwrap(), 0.5);
        assert_eq!(percentage_improvement(100.0, 100.0).unwrap(), 0.0);
        assert!(matches!(
            percentage_improvement(100.0, 100.1),
            Err(EscError::ContractViolation(_))
        ));
        assert!(matches!(
            percentage_improvement(0.0, 0.0),
            Err(EscError::Validation(_))
        ));
    }

    #[test]
    fn budget_is_enforced_at_the_boundary() {
        let inst = single_query();
        let mut o = BudgetedOracle::new(CoverageOracle::new(&inst), 2);
        let empty = Configuration::empty();
        assert!(o.whatif_cost(0, &empty).is_ok());
        assert!(o.whatif_cost(0, &empty).is_ok());
        assert!(matches!(
            o.whatif_cost(0, &empty),
            Err(EscError::BudgetExhausted)
        ));
        assert_eq!(o.calls_used(), 2);
        assert_eq!(o.log()[0].seq, 1);
        assert_eq!(o.log()[1].seq, 2);
    }

    #[test]
    fn derived_cost_is_min_over_cached_subsets() {
        let inst = single_query();
        let mut cache = CostCache::new(inst.query_count());
        cache.insert(0, Configuration::empty(), 100.0, true);
        cache.insert(0, Configuration::from_members([0]), 70.0, true);
        cache.insert(0, Configuration::from_members([0, 1]), 50.0, true);
        // {z0, z2}: only {} and {z0} are cached subsets.
        let c02 = Configuration::from_members([0, 2]);
        assert_eq!(cache.derived_cost(0, &c02), 70.0);
        // {z1} alone: neither cached superset applies, only {}.
        assert_eq!(cache.derived_cost(0, &Configuration::from_members([1])), 100.0);
        // Non-authoritative entries do feed derived costs.
        cache.insert(0, Configuration::from_members([1]), 60.0, false);
        assert_eq!(cache.derived_cost(0, &Configuration::from_members([1])), 60.0);
        // ... but never authoritative lookups.
        assert_eq!(cache.authoritative_cost(0, &Configuration::from_members([1])), None);
        // Re-inserting authoritatively upgrades the entry.
        cache.insert(0, Configuration::from_members([1]), 55.0, true);
        assert_eq!(cache.authoritative_cost(0, &Configuration::from_members([1])), Some(55.0));
    }

    #[test]
    fn adversarial_mode_perturbs_within_bounds() {
        let inst = single_query();
        let honest = CoverageOracle::new(&inst);
        let adv = CoverageOracle::adversarial(&inst, 9);
        let z1 = Configuration::from_members([1]);
        let h = honest.query_cost(0, &z1);
        let a = adv.query_cost(0, &z1);
        let improvement_h = 100.0 - h;
        let improvement_a = 100.0 - a;
        assert!(improvement_a >= improvement_h * 0.9 - 1e-12);
        assert!(improvement_a <= improvement_h * 1.1 + 1e-12);
        // Deterministic: same seed, same jitter.
        assert_eq!(a, CoverageOracle::adversarial(&inst, 9).query_cost(0, &z1));
    }
}
