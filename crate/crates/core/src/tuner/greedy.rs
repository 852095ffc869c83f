//! Two-phase greedy search: per-query greedy selection first, then greedy
//! over the union of the per-query winners, spending the what-if budget
//! first come first serve.

use std::collections::BTreeSet;

use crate::error::Result;
use crate::tuner::{RunState, TuneOptions, TuningResult};
use crate::workload::{Configuration, Instance};

pub fn run(inst: &Instance, opts: &TuneOptions) -> Result<TuningResult> {
    if opts.k == 0 {
        return Ok(TuningResult::trivial());
    }
    let mut state = RunState::new(inst, opts)?;
    if state.stopped {
        return Ok(state.finish(Configuration::empty()));
    }
    let nq = inst.query_count() as u32;

    // Phase 1: independent greedy per query, per-query what-if costs.
    let mut pool: BTreeSet<u32> = BTreeSet::new();
    for q in 0..nq {
        let mut selection = Configuration::empty();
        let mut current = state.table.base_cost(q);
        for _ in 0..opts.k {
            let mut best: Option<(u32, f64)> = None;
            for &z in inst.candidates_of(q) {
                if selection.contains(z) {
                    continue;
                }
                let cand = selection.with(z);
                let cost = state.evaluate_query(q, &cand)?;
                if state.stopped {
                    return Ok(state.finish(selection));
                }
                if best.is_none_or(|(_, bc)| cost < bc) {
                    best = Some((z, cost));
                }
            }
            match best {
                Some((z, cost)) if cost < current => {
                    selection = selection.with(z);
                    current = cost;
                }
                _ => break,
            }
        }
        if !selection.is_empty() {
            let derived = state.derived_workload_cost(&selection);
            state.consider_best(&selection, derived);
            pool.extend(selection.iter());
        }
    }

    // Phase 2: greedy over the union pool, workload-level derived cost. The
    // rest of the run picks only from the pool, so trajectory bounds may
    // simulate over it alone.
    let pool: Vec<u32> = pool.into_iter().collect();
    state.esv_pool = Some(pool.clone());
    let mut prefix = Configuration::empty();
    let mut prefix_costs: Vec<f64> = (0..nq)
        .map(|q| state.cache.derived_cost(q, &prefix))
        .collect();
    let mut prefix_total: f64 = prefix_costs.iter().sum();
    for _ in 0..opts.k {
        state.phase2_step_boundary()?;
        if state.stopped {
            return Ok(state.finish(prefix));
        }
        // The greedy refinement rule only applies while the whole
        // workload's cost at the prefix is authoritatively known.
        let prefix_known = (0..nq).all(|q| state.cache.authoritative_cost(q, &prefix).is_some());
        let mut best: Option<(u32, Vec<f64>, f64)> = None;
        for &z in &pool {
            if prefix.contains(z) {
                continue;
            }
            let cand = prefix.with(z);
            let mut per_query = Vec::with_capacity(nq as usize);
            let mut total = 0.0;
            for q in 0..nq {
                // An index outside q's candidate set cannot change q's cost;
                // spending a what-if call there would measure the prefix again.
                if !state.table.is_candidate(q, z) {
                    let derived = prefix_costs[q as usize];
                    per_query.push(derived);
                    total += derived;
                    continue;
                }
                let working = state.evaluate_query(q, &cand)?;
                if state.stopped {
                    return Ok(state.finish(prefix));
                }
                if prefix_known {
                    if let (Some(at_prefix), Some(at_cand)) = (
                        state.cache.authoritative_cost(q, &prefix),
                        state.cache.authoritative_cost(q, &cand),
                    ) {
                        state.table.refine_greedy_step(q, z, at_prefix, at_cand);
                    }
                }
                // Under a monotone oracle the working cost is already the
                // derived cost of `cand`; the min guards the bookkeeping.
                let derived = working.min(prefix_costs[q as usize]);
                per_query.push(derived);
                total += derived;
            }
            state.consider_best(&cand, total);
            if best.as_ref().is_none_or(|(_, _, bt)| total < *bt) {
                best = Some((z, per_query, total));
            }
        }
        match best {
            Some((z, per_query, total)) if total < prefix_total => {
                prefix = prefix.with(z);
                // Queries outside z's candidate sets keep their exact cost;
                // record it so the next step's refinement rule still applies.
                for q in 0..nq {
                    if !state.table.is_candidate(q, z) {
                        state
                            .cache
                            .insert(q, prefix.clone(), per_query[q as usize], true);
                    }
                }
                state.table.freeze(z);
                state.prefix_anchor = Some(prefix.clone());
                prefix_costs = per_query;
                prefix_total = total;
            }
            _ => break,
        }
    }
    Ok(state.finish(prefix))
}
