//! Workload-level bounds on what-if cost: what the tuner could still reach
//! with its remaining budget (lower cost bound) and what its current best
//! is worth at worst (upper cost bound), plus the index-interaction
//! machinery that sharpens the lower bound.
//!
//! Everything here is pure over snapshots of the run state and issues zero
//! what-if calls.

use crate::features::{similarity, FeatureSet, FeatureVector};
use crate::mci::MciTable;
use crate::oracle::CostCache;
use crate::tuner::AlgoKind;
use crate::workload::{Configuration, Instance};

/// Which score drives the simulated greedy lower bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundMode {
    /// Raw MCI upper bounds u(q,z).
    EscB,
    /// Interaction-refined conditional benefits μ(q,z); tighter, heuristic.
    EscI,
}

impl std::fmt::Display for BoundMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BoundMode::EscB => "b",
            BoundMode::EscI => "i",
        })
    }
}

/// Read-only snapshot of the state a bounds computation needs.
#[derive(Clone, Copy)]
pub struct BoundContext<'a> {
    pub inst: &'a Instance,
    pub table: &'a MciTable,
    pub cache: &'a CostCache,
    pub features: &'a FeatureSet,
    /// When the search has committed to a candidate pool (two-phase greedy
    /// after phase 1), its remaining trajectory picks only from it, so the
    /// trajectory bound may simulate over the pool alone. None means every
    /// index is still reachable.
    pub pool: Option<&'a [u32]>,
}

/// One bounds computation, in both cost and improvement terms.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkloadBounds {
    /// L(W, C_B*): no full-budget continuation can cost less than this.
    pub l_final: f64,
    /// U(W, C_t*): the completed current best costs at most this.
    pub u_current: f64,
    /// η_L = 1 − u_current / c(W,∅): improvement certainly attained.
    pub eta_l: f64,
    /// η_U = 1 − l_final / c(W,∅): improvement at best still attainable.
    pub eta_u: f64,
    pub mode: BoundMode,
    /// Max over scored pairs of μ(q,z) − u(q,z); ≤ 0 by construction (0 when
    /// the raw-u mode never scores μ).
    pub mu_excess: f64,
}

/// Outcome of one simulated greedy lower-bound search.
#[derive(Debug, Clone)]
pub struct SimLower {
    /// Accumulated step scores S.
    pub sim_sum: f64,
    /// max(0, c(W,∅) − S).
    pub lower: f64,
    /// Simulated picks in selection order.
    pub picks: Vec<u32>,
    /// max over scored pairs of μ(q,z) − u(q,z); diagnostic, ≤ 0 required.
    pub mu_excess: f64,
}

/// Conservative lower bound on the cost of any configuration of at most K
/// indexes: every query independently enjoys its K best-possible marginals.
pub fn general_lower_bound(inst: &Instance, table: &MciTable, k: usize) -> f64 {
    let mut total = 0.0;
    for q in 0..inst.query_count() as u32 {
        let mut us: Vec<f64> = inst
            .candidates_of(q)
            .iter()
            .map(|&z| table.u(q, z))
            .collect();
        us.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let sum: f64 = us.iter().take(k).sum();
        total += (table.base_cost(q) - sum).max(0.0);
    }
    total
}

/// Simulated greedy search over u-scores: bounds from below the cost the
/// actual greedy search reaches with unlimited remaining budget, optionally
/// restricted to the candidate pool that search can still pick from.
pub fn simulated_greedy_lower_bound(
    inst: &Instance,
    table: &MciTable,
    k: usize,
    pool: Option<&[u32]>,
) -> SimLower {
    let nz = inst.index_count();
    let all: Vec<u32>;
    let zs: &[u32] = match pool {
        Some(p) => p,
        None => {
            all = (0..nz as u32).collect();
            &all
        }
    };
    let scores: Vec<f64> = zs.iter().map(|&z| table.workload_u(z)).collect();
    let mut selected = vec![false; zs.len()];
    let mut picks = Vec::new();
    let mut sim_sum = 0.0;
    for _ in 0..k {
        let mut best: Option<(usize, f64)> = None;
        for (i, &s) in scores.iter().enumerate() {
            if !selected[i] && s > 0.0 && best.is_none_or(|(_, bs)| s > bs) {
                best = Some((i, s));
            }
        }
        let Some((i, s)) = best else { break };
        selected[i] = true;
        picks.push(zs[i]);
        sim_sum += s;
    }
    let c0: f64 = (0..inst.query_count() as u32)
        .map(|q| table.base_cost(q))
        .sum();
    SimLower {
        sim_sum,
        lower: (c0 - sim_sum).max(0.0),
        picks,
        mu_excess: 0.0,
    }
}

/// μ(q, z | C): the MCI bound u(q,z), zeroed when z is feature-similar to
/// the (simulated) selection and, for tuners that cannot refine u with
/// greedy observations, replaced by the average improvement of similar
/// indexes whose single-index cost is known. Never exceeds u(q,z).
pub fn conditional_benefit(
    ctx: &BoundContext,
    q: u32,
    z: u32,
    prev: &Configuration,
    tau: f64,
    algo: AlgoKind,
) -> f64 {
    let prev_vec = ctx.features.configuration_vector(prev);
    mu_with_config_vector(ctx, q, z, prev.is_empty(), &prev_vec, tau, algo)
}

fn mu_with_config_vector(
    ctx: &BoundContext,
    q: u32,
    z: u32,
    prev_empty: bool,
    prev_vec: &FeatureVector,
    tau: f64,
    algo: AlgoKind,
) -> f64 {
    let u = ctx.table.u(q, z);
    if !prev_empty {
        let s = similarity(
            &ctx.features.index_vectors[z as usize],
            prev_vec,
            &ctx.features.query_vectors[q as usize],
        );
        if s > tau {
            return 0.0;
        }
    }
    let singleton_known = ctx
        .cache
        .authoritative_cost(q, &Configuration::from_members([z]))
        .is_some();
    if algo == AlgoKind::TwoPhaseGreedy || singleton_known {
        return u;
    }
    // Upper bound ignorant of z itself: borrow the known improvements of
    // feature-similar indexes.
    let mut sum = 0.0;
    let mut n = 0usize;
    for &other in ctx.inst.candidates_of(q) {
        if other == z {
            continue;
        }
        if let Some(d) = ctx
            .cache
            .improvement(q, &Configuration::from_members([other]))
        {
            if ctx.features.index_similarity(q, other, z) > tau {
                sum += d;
                n += 1;
            }
        }
    }
    if n == 0 {
        u
    } else {
        (sum / n as f64).min(u)
    }
}

/// Simulated greedy lower bound driven by conditional benefits instead of
/// raw u-scores.
pub fn simulated_greedy_lower_bound_mu(
    ctx: &BoundContext,
    k: usize,
    tau: f64,
    algo: AlgoKind,
) -> SimLower {
    let nq = ctx.inst.query_count();
    let nz = ctx.inst.index_count();
    let all: Vec<u32>;
    let zs: &[u32] = match ctx.pool {
        Some(p) => p,
        None => {
            all = (0..nz as u32).collect();
            &all
        }
    };
    let mut selected = vec![false; nz];
    let mut sim = Configuration::empty();
    let mut picks = Vec::new();
    let mut sim_sum = 0.0;
    let mut mu_excess = f64::NEG_INFINITY;
    for _ in 0..k {
        let sim_vec = ctx.features.configuration_vector(&sim);
        let mut best: Option<(u32, f64)> = None;
        for &z in zs {
            if selected[z as usize] {
                continue;
            }
            let mut score = 0.0;
            for q in 0..nq as u32 {
                if !ctx.table.is_candidate(q, z) {
                    continue;
                }
                let mu = mu_with_config_vector(ctx, q, z, sim.is_empty(), &sim_vec, tau, algo);
                mu_excess = mu_excess.max(mu - ctx.table.u(q, z));
                score += mu;
            }
            if score > 0.0 && best.is_none_or(|(_, bs)| score > bs) {
                best = Some((z, score));
            }
        }
        let Some((z, s)) = best else { break };
        selected[z as usize] = true;
        sim = sim.with(z);
        picks.push(z);
        sim_sum += s;
    }
    let c0: f64 = (0..nq as u32).map(|q| ctx.table.base_cost(q)).sum();
    SimLower {
        sim_sum,
        lower: (c0 - sim_sum).max(0.0),
        picks,
        mu_excess: if mu_excess.is_finite() { mu_excess } else { 0.0 },
    }
}

/// Completes `anchor` the way the tuner itself would with no budget left:
/// repeatedly add the index that lowers the derived workload cost most,
/// while any strictly does and fewer than K indexes are chosen. Returns the
/// completed configuration and its derived workload cost.
pub fn simulated_greedy_upper_bound(
    inst: &Instance,
    cache: &CostCache,
    anchor: &Configuration,
    k: usize,
) -> (Configuration, f64) {
    let nq = inst.query_count();
    let nz = inst.index_count();
    let mut config = anchor.clone();
    let mut per_query: Vec<f64> = (0..nq as u32)
        .map(|q| cache.derived_cost(q, &config))
        .collect();
    let mut total: f64 = per_query.iter().sum();
    while config.len() < k {
        // For each z outside the configuration, the best newly applicable
        // cache entry is one whose only member missing from `config` is z.
        let mut best_with = vec![f64::INFINITY; nq * nz];
        for q in 0..nq {
            for e in cache.entries(q as u32) {
                if e.cost >= per_query[q] {
                    continue;
                }
                let mut missing = None;
                let mut extra = false;
                for m in e.config.iter() {
                    if !config.contains(m) {
                        if missing.is_some() {
                            extra = true;
                            break;
                        }
                        missing = Some(m);
                    }
                }
                if extra {
                    continue;
                }
                if let Some(z) = missing {
                    let cell = &mut best_with[q * nz + z as usize];
                    if e.cost < *cell {
                        *cell = e.cost;
                    }
                }
            }
        }
        let mut best: Option<(u32, f64)> = None;
        for z in 0..nz as u32 {
            if config.contains(z) {
                continue;
            }
            let mut gain = 0.0;
            for q in 0..nq {
                let b = best_with[q * nz + z as usize];
                if b < per_query[q] {
                    gain += per_query[q] - b;
                }
            }
            if gain > 0.0 && best.is_none_or(|(_, bg)| gain > bg) {
                best = Some((z, gain));
            }
        }
        let Some((z, gain)) = best else { break };
        for q in 0..nq {
            let b = best_with[q * nz + z as usize];
            if b < per_query[q] {
                per_query[q] = b;
            }
        }
        total -= gain;
        config = config.with(z);
    }
    (config, total)
}

/// Degree to which two indexes overlap in benefit for one query, on a 0
/// (independent) to 1 (fully redundant) scale. None when any needed cost is
/// not authoritatively known.
pub fn pairwise_interaction(cache: &CostCache, q: u32, z1: u32, z2: u32) -> Option<f64> {
    let d1 = cache.improvement(q, &Configuration::from_members([z1]))?;
    let d2 = cache.improvement(q, &Configuration::from_members([z2]))?;
    let joint = cache.improvement(q, &Configuration::from_members([z1, z2]))?;
    let upper = d1 + d2;
    let lower = d1.max(d2);
    if upper == lower {
        return Some(0.0);
    }
    Some(((upper - joint) / (upper - lower)).clamp(0.0, 1.0))
}

/// Full bounds computation for one verification: the cost lower bound via
/// the mode's simulated greedy search, the cost upper bound as the derived
/// cost of the anchor's completion. The returned configuration is that
/// completion; a tuner that stops returns exactly it, which is what makes
/// η_L a guarantee on the returned result.
pub fn esc_bounds(
    ctx: &BoundContext,
    mode: BoundMode,
    algo: AlgoKind,
    anchor: &Configuration,
    k: usize,
    tau: f64,
) -> (WorkloadBounds, Configuration) {
    let (completion, u_current) = simulated_greedy_upper_bound(ctx.inst, ctx.cache, anchor, k);
    let sim = match mode {
        BoundMode::EscB => simulated_greedy_lower_bound(ctx.inst, ctx.table, k, ctx.pool),
        BoundMode::EscI => simulated_greedy_lower_bound_mu(ctx, k, tau, algo),
    };
    let c0: f64 = (0..ctx.inst.query_count() as u32)
        .map(|q| ctx.table.base_cost(q))
        .sum();
    let bounds = WorkloadBounds {
        l_final: sim.lower,
        u_current,
        eta_l: 1.0 - u_current / c0,
        eta_u: 1.0 - sim.lower / c0,
        mode,
        mu_excess: sim.mu_excess,
    };
    (bounds, completion)
}
