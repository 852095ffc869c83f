//! Monte-Carlo tree search tuner: UCT over configurations of up to K
//! indexes, one expansion and evaluation per iteration, with a call-free
//! greedy completion of the best observed configuration at the end.

use crate::bounds::simulated_greedy_upper_bound;
use crate::error::Result;
use crate::tuner::{RunState, TuneOptions, TuningResult};
use crate::workload::{Configuration, Instance};

const UCT_EXPLORATION: f64 = std::f64::consts::SQRT_2;

/// Hard cap on iterations. Distinct tree nodes can share a configuration
/// (one per member order), and expanding such a duplicate is a cache hit
/// that spends no budget, so the call budget alone does not bound the loop.
fn iteration_cap(budget: u64) -> u64 {
    10_000 + 10 * budget
}

struct Node {
    config: Configuration,
    /// Candidates not yet expanded under this node, ascending.
    untried: Vec<u32>,
    children: Vec<usize>,
    visits: u64,
    total_reward: f64,
    /// This node's own evaluation, replayed when revisited as a terminal.
    eval_reward: f64,
}

pub fn run(inst: &Instance, opts: &TuneOptions) -> Result<TuningResult> {
    if opts.k == 0 {
        return Ok(TuningResult::trivial());
    }
    let mut state = RunState::new(inst, opts)?;
    if state.stopped {
        return Ok(state.finish(Configuration::empty()));
    }
    let nq = inst.query_count() as u32;
    let nz = inst.index_count() as u32;
    let empty_cost = state.empty_workload_cost();

    let mut nodes = vec![Node {
        config: Configuration::empty(),
        untried: (0..nz).collect(),
        children: Vec::new(),
        visits: 0,
        total_reward: 0.0,
        eval_reward: 0.0,
    }];
    let mut expandable = usize::from(nz > 0);
    let cap = iteration_cap(opts.budget);
    let mut iterations = 0u64;
    while expandable > 0 && iterations < cap && !state.stopped && !state.budget_exhausted {
        iterations += 1;
        // Selection: descend by UCT until a node with untried candidates
        // (or a terminal leaf) is reached.
        let mut path = vec![0usize];
        let mut idx = 0usize;
        while nodes[idx].untried.is_empty() && !nodes[idx].children.is_empty() {
            idx = best_child(&nodes, idx);
            path.push(idx);
        }
        let reward = if nodes[idx].untried.is_empty() {
            nodes[idx].eval_reward
        } else {
            // Expansion: smallest untried candidate first.
            let z = nodes[idx].untried.remove(0);
            if nodes[idx].untried.is_empty() {
                expandable -= 1;
            }
            let config = nodes[idx].config.with(z);
            let mut total = 0.0;
            for q in 0..nq {
                // Only members among q's candidates can change q's cost; the
                // projection shares cache entries across sibling configs.
                let proj = Configuration::from_members(
                    config.iter().filter(|&m| state.table.is_candidate(q, m)),
                );
                total += state.evaluate_query(q, &proj)?;
                if state.stopped {
                    return Ok(state.finish(Configuration::empty()));
                }
            }
            state.consider_best(&config, total);
            let reward = 1.0 - total / empty_cost;
            let untried: Vec<u32> = if config.len() < opts.k {
                (0..nz).filter(|z| !config.contains(*z)).collect()
            } else {
                Vec::new()
            };
            if !untried.is_empty() {
                expandable += 1;
            }
            nodes.push(Node {
                config,
                untried,
                children: Vec::new(),
                visits: 0,
                total_reward: 0.0,
                eval_reward: reward,
            });
            let child = nodes.len() - 1;
            nodes[idx].children.push(child);
            path.push(child);
            reward
        };
        for &i in &path {
            nodes[i].visits += 1;
            nodes[i].total_reward += reward;
        }
    }

    // Final selection: call-free greedy completion of the observed best.
    let anchor = state.best_config.clone();
    let (final_config, _) = simulated_greedy_upper_bound(inst, &state.cache, &anchor, opts.k);
    Ok(state.finish(final_config))
}

/// UCT child choice; ties keep the earliest (smallest-id) child.
fn best_child(nodes: &[Node], parent: usize) -> usize {
    let ln_parent = (nodes[parent].visits as f64).ln();
    let mut best = nodes[parent].children[0];
    let mut best_score = f64::NEG_INFINITY;
    for &c in &nodes[parent].children {
        let visits = nodes[c].visits as f64;
        let score = nodes[c].total_reward / visits + UCT_EXPLORATION * (ln_parent / visits).sqrt();
        if score > best_score {
            best_score = score;
            best = c;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::esv::Scheme;
    use crate::tuner::{AlgoKind, EscMode, Termination, TuneOptions, WiiMode};
    use crate::workload::Workload;

    fn options(budget: u64, k: usize) -> TuneOptions {
        TuneOptions {
            algorithm: AlgoKind::Mcts,
            wii: WiiMode::Off,
            esc: EscMode::Off,
            scheme: Scheme::Heuristic,
            epsilon: 0.05,
            budget,
            k,
            step: 100,
            sigma: 0.5,
            tau: 0.2,
            theta: 0.05,
            seed: 1,
        }
    }

    /// q0: base 100, atoms a:30 b:20 c:10; z0 covers {a}, z1 {a,b}, z2 {c}.
    /// The best pair is {z1, z2} at cost 40.
    fn three_candidates() -> Instance {
        let w: Workload = serde_json::from_value(serde_json::json!({
            "format": "esc-workload/1",
            "columns": [
                {"id": "t_a", "table": "t", "table_size_weight": 1.0},
                {"id": "t_b", "table": "t", "table_size_weight": 1.0},
                {"id": "t_c", "table": "t", "table_size_weight": 1.0}
            ],
            "queries": [{
                "id": "q0", "base_cost": 100.0,
                "referenced_columns": {"t_a": 1.0, "t_b": 1.0, "t_c": 1.0},
                "candidate_ids": ["z0", "z1", "z2"],
                "atoms": {"a": 30.0, "b": 20.0, "c": 10.0}
            }],
            "indexes": [
                {"id": "z0", "table": "t", "key_columns": ["t_a"],
                 "included_columns": [], "coverage": {"q0": ["a"]}},
                {"id": "z1", "table": "t", "key_columns": ["t_a", "t_b"],
                 "included_columns": [], "coverage": {"q0": ["a", "b"]}},
                {"id": "z2", "table": "t", "key_columns": ["t_c"],
                 "included_columns": [], "coverage": {"q0": ["c"]}}
            ]
        }))
        .unwrap();
        Instance::new(w).unwrap()
    }

    #[test]
    fn zero_k_returns_the_empty_configuration() {
        let inst = three_candidates();
        let r = run(&inst, &options(100, 0)).unwrap();
        assert!(r.final_config.is_empty());
        assert_eq!(r.calls_used, 0);
    }

    #[test]
    fn fully_explored_tree_finds_the_best_pair() {
        let inst = three_candidates();
        let r = run(&inst, &options(10_000, 2)).unwrap();
        assert_eq!(r.final_config.members(), &[1, 2]);
        assert_eq!(r.final_derived_cost, 40.0);
        assert_eq!(r.termination, Termination::Natural);
        assert!((r.observed_improvement - 0.6).abs() < 1e-12);
    }

    #[test]
    fn init_only_budget_exhausts_and_still_returns() {
        let inst = three_candidates();
        let r = run(&inst, &options(2, 2)).unwrap();
        assert_eq!(r.termination, Termination::BudgetExhausted);
        assert_eq!(r.calls_used, 2);
        assert!(r.final_config.len() <= 2);
    }

    #[test]
    fn runs_are_deterministic() {
        let inst = three_candidates();
        let a = run(&inst, &options(10_000, 2)).unwrap();
        let b = run(&inst, &options(10_000, 2)).unwrap();
        assert_eq!(a.final_config, b.final_config);
        assert_eq!(a.calls_used, b.calls_used);
        let la: Vec<_> = a.call_log.iter().map(|c| (c.seq, c.query, c.config.clone())).collect();
        let lb: Vec<_> = b.call_log.iter().map(|c| (c.seq, c.query, c.config.clone())).collect();
        assert_eq!(la, lb);
    }
}
