//! Brute-force verifiers behind the `verify` subcommand: oracle assumption
//! checks, derived-cost equivalence, the two lower-bound soundness suites,
//! rate/concavity direction checks, and the interaction/similarity study.

use std::collections::HashMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bounds::{
    simulated_greedy_lower_bound, simulated_greedy_lower_bound_mu, BoundContext,
};
use crate::error::{EscError, Result};
use crate::esv::{EsvConfig, EsvController, Scheme};
use crate::features::FeatureSet;
use crate::generate::{generate_workload, GeneratorSpec};
use crate::mci::MciTable;
use crate::oracle::{CostCache, CoverageOracle};
use crate::sweep::default_scheme;
use crate::tuner::{tune, AlgoKind, EscMode, TuneOptions, TuningResult, WiiMode};
use crate::workload::{Configuration, Instance};

/// Counterexamples beyond this many are counted but not rendered.
const MAX_DETAILED: usize = 5;

pub const SUITES: [&str; 7] = [
    "monotone",
    "submodular",
    "derived",
    "theorem1",
    "theorem2",
    "rates",
    "interactions",
];

#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub suite: String,
    pub checks: u64,
    pub violation_count: u64,
    /// First few counterexamples, already rendered.
    pub violations: Vec<String>,
    /// Reported statistics that are not pass/fail.
    pub notes: Vec<String>,
}

impl SuiteReport {
    fn new(suite: &str) -> SuiteReport {
        SuiteReport {
            suite: suite.to_string(),
            checks: 0,
            violation_count: 0,
            violations: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn violation(&mut self, detail: String) {
        self.violation_count += 1;
        if self.violations.len() < MAX_DETAILED {
            self.violations.push(detail);
        }
    }

    pub fn passed(&self) -> bool {
        self.violation_count == 0
    }

    pub fn render(&self) -> String {
        let mut out = format!(
            "suite={} checks={} violations={} -> {}\n",
            self.suite,
            self.checks,
            self.violation_count,
            if self.passed() { "PASS" } else { "FAIL" }
        );
        for v in &self.violations {
            out.push_str("  counterexample: ");
            out.push_str(v);
            out.push('\n');
        }
        for n in &self.notes {
            out.push_str("  note: ");
            out.push_str(n);
            out.push('\n');
        }
        out
    }
}

/// Instance sizes small enough for exhaustive replay.
pub fn small_spec() -> GeneratorSpec {
    GeneratorSpec {
        queries: 6,
        tables: 3,
        columns_per_table: 4,
        candidates_per_query: 4,
        total_candidates: None,
        base_cost_range: (50.0, 300.0),
        max_improvement_fraction: 0.8,
    }
}

pub fn run_suite(
    suite: &str,
    spec: &GeneratorSpec,
    seeds: &[u64],
    adversarial: bool,
) -> Result<SuiteReport> {
    match suite {
        "monotone" => monotonicity_suite(spec, seeds, adversarial),
        "submodular" => submodularity_suite(spec, seeds, adversarial),
        "derived" => derived_suite(spec, seeds),
        "theorem1" => theorem1_suite(spec, seeds),
        "theorem2" => theorem2_suite(spec, seeds),
        "rates" => Ok(rates_suite()),
        "interactions" => interactions_suite(spec, seeds),
        other => Err(EscError::Validation(format!(
            "unknown suite '{other}'; expected one of {}",
            SUITES.join(", ")
        ))),
    }
}

fn build_oracle(inst: &Instance, adversarial: bool, seed: u64) -> CoverageOracle {
    if adversarial {
        CoverageOracle::adversarial(inst, seed)
    } else {
        CoverageOracle::new(inst)
    }
}

/// A random configuration of up to `max_len` indexes.
fn random_config(rng: &mut ChaCha8Rng, nz: u32, max_len: usize) -> Configuration {
    let len = rng.random_range(0..=max_len.min(nz as usize));
    Configuration::from_members((0..len).map(|_| rng.random_range(0..nz)))
}

/// A random subset of an existing configuration.
fn random_subset(rng: &mut ChaCha8Rng, of: &Configuration) -> Configuration {
    Configuration::from_members(of.iter().filter(|_| rng.random::<f64>() < 0.5))
}

const SAMPLES_PER_WORKLOAD: u64 = 10_000;

pub fn monotonicity_suite(
    spec: &GeneratorSpec,
    seeds: &[u64],
    adversarial: bool,
) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("monotone");
    for &seed in seeds {
        let inst = Instance::new(generate_workload(spec, seed)?)?;
        let oracle = build_oracle(&inst, adversarial, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6d6f6e6f);
        let nz = inst.index_count() as u32;
        let nq = inst.query_count() as u32;
        for _ in 0..SAMPLES_PER_WORKLOAD {
            let q = rng.random_range(0..nq);
            let big = random_config(&mut rng, nz, 6);
            let small = random_subset(&mut rng, &big);
            let c_big = oracle.query_cost(q, &big);
            let c_small = oracle.query_cost(q, &small);
            report.checks += 1;
            if c_big > c_small * (1.0 + 1e-9) + 1e-9 {
                report.violation(format!(
                    "seed={seed} q={} X={:?} Y={:?} c(X)={c_small} c(Y)={c_big}",
                    inst.query_id(q),
                    inst.config_ids(&small),
                    inst.config_ids(&big),
                ));
            }
        }
    }
    Ok(report)
}

pub fn submodularity_suite(
    spec: &GeneratorSpec,
    seeds: &[u64],
    adversarial: bool,
) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("submodular");
    for &seed in seeds {
        let inst = Instance::new(generate_workload(spec, seed)?)?;
        let oracle = build_oracle(&inst, adversarial, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7375626d);
        let nz = inst.index_count() as u32;
        let nq = inst.query_count() as u32;
        for _ in 0..SAMPLES_PER_WORKLOAD {
            // Redraw until the probe lands outside the larger configuration,
            // so every sample is a usable triple.
            let (q, big, z) = loop {
                let q = rng.random_range(0..nq);
                let big = random_config(&mut rng, nz, 6);
                let z = rng.random_range(0..nz);
                if !big.contains(z) {
                    break (q, big, z);
                }
            };
            let small = random_subset(&mut rng, &big);
            let gain_small = oracle.query_cost(q, &small) - oracle.query_cost(q, &small.with(z));
            let gain_big = oracle.query_cost(q, &big) - oracle.query_cost(q, &big.with(z));
            report.checks += 1;
            if gain_big > gain_small * (1.0 + 1e-9) + 1e-9 {
                report.violation(format!(
                    "seed={seed} q={} X={:?} Y={:?} z={} delta(X)={gain_small} delta(Y)={gain_big}",
                    inst.query_id(q),
                    inst.config_ids(&small),
                    inst.config_ids(&big),
                    inst.index_id(z),
                ));
            }
        }
    }
    Ok(report)
}

pub fn derived_suite(spec: &GeneratorSpec, seeds: &[u64]) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("derived");
    for &seed in seeds {
        let inst = Instance::new(generate_workload(spec, seed)?)?;
        let oracle = CoverageOracle::new(&inst);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x64657276);
        let nz = inst.index_count() as u32;
        let nq = inst.query_count() as u32;
        let mut cache = CostCache::new(nq as usize);
        for q in 0..nq {
            cache.insert(q, Configuration::empty(), oracle.query_cost(q, &Configuration::empty()), true);
            for _ in 0..8 {
                let c = random_config(&mut rng, nz, 3);
                cache.insert(q, c.clone(), oracle.query_cost(q, &c), true);
            }
        }
        for _ in 0..40 {
            let q = rng.random_range(0..nq);
            let config = random_config(&mut rng, nz, 4);
            // Independent brute force: enumerate all subsets of `config`.
            let members = config.members();
            let mut brute = f64::INFINITY;
            for mask in 0..(1u32 << members.len()) {
                let subset = Configuration::from_members(
                    members
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| mask & (1 << i) != 0)
                        .map(|(_, &z)| z),
                );
                if let Some(e) = cache.exact(q, &subset) {
                    brute = brute.min(e.cost);
                }
            }
            let derived = cache.derived_cost(q, &config);
            report.checks += 1;
            if derived != brute {
                report.violation(format!(
                    "seed={seed} q={} C={:?} derived={derived} brute={brute}",
                    inst.query_id(q),
                    inst.config_ids(&config),
                ));
            }
        }
    }
    Ok(report)
}

/// Replays a full-budget per-query greedy with MCI-table maintenance and
/// checks, at every step boundary, that a simulated greedy over the frozen
/// table scores at least the remaining actual selections.
pub fn theorem1_suite(spec: &GeneratorSpec, seeds: &[u64]) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("theorem1");
    let k = 4;
    for &seed in seeds {
        let inst = Instance::new(generate_workload(spec, seed)?)?;
        let oracle = CoverageOracle::new(&inst);
        for q in 0..inst.query_count() as u32 {
            let base = inst.base_cost(q);
            let omega_gain = base - oracle.query_cost(q, &inst.omega(q));
            let init_u = base.min(omega_gain);
            let cands = inst.candidates_of(q).to_vec();
            let mut u: HashMap<u32, f64> = cands.iter().map(|&z| (z, init_u)).collect();

            let mut selected = Configuration::empty();
            let mut cost_cur = base;
            let mut deltas: Vec<f64> = Vec::new();
            let mut snapshots: Vec<(Configuration, HashMap<u32, f64>)> =
                vec![(selected.clone(), u.clone())];
            for _ in 0..k {
                let mut best: Option<(u32, f64)> = None;
                for &z in &cands {
                    if selected.contains(z) {
                        continue;
                    }
                    let marginal = cost_cur - oracle.query_cost(q, &selected.with(z));
                    let entry = u.get_mut(&z).unwrap();
                    *entry = entry.min(marginal.max(0.0));
                    if best.is_none_or(|(_, bm)| marginal > bm) {
                        best = Some((z, marginal));
                    }
                }
                match best {
                    Some((z, marginal)) if marginal > 0.0 => {
                        deltas.push(marginal);
                        selected = selected.with(z);
                        cost_cur -= marginal;
                        snapshots.push((selected.clone(), u.clone()));
                    }
                    _ => break,
                }
            }
            let total: f64 = deltas.iter().sum();
            for (t, (sel, table)) in snapshots.iter().enumerate() {
                let prefix: f64 = deltas[..t].iter().sum();
                let mut rest: Vec<f64> = cands
                    .iter()
                    .filter(|z| !sel.contains(**z))
                    .map(|z| table[z])
                    .filter(|v| *v > 0.0)
                    .collect();
                rest.sort_by(|a, b| b.partial_cmp(a).unwrap());
                let sim_tail: f64 = rest.iter().take(k - t).sum();
                report.checks += 1;
                if prefix + sim_tail + 1e-9 < total {
                    report.violation(format!(
                        "seed={seed} q={} step={t} sim={} actual-remaining={}",
                        inst.query_id(q),
                        sim_tail,
                        total - prefix,
                    ));
                }
            }
        }
    }
    Ok(report)
}

/// Standard options for verification runs over generated workloads.
pub fn verification_options(algorithm: AlgoKind, k: usize, budget: u64, step: u64) -> TuneOptions {
    TuneOptions {
        algorithm,
        wii: WiiMode::Off,
        esc: EscMode::B,
        scheme: Scheme::FixedStep,
        // Small enough that verification almost never stops the run early,
        // so checkpoints cover the whole trajectory.
        epsilon: 1e-9,
        budget,
        k,
        step,
        sigma: 0.5,
        tau: 0.2,
        theta: 0.05,
        seed: 0,
    }
}

/// Runs the tuner with frequent verifications plus its early-stopping-free
/// twin, then checks every checkpoint's bounds against ground truth:
/// L(W,C_B*) ≤ c(W,C_B*) and U(W,C_t*) ≥ c(W,C_t*).
pub fn check_bound_soundness(
    inst: &Instance,
    opts: &TuneOptions,
) -> Result<(u64, Vec<String>, TuningResult)> {
    let esc_run = tune(inst, opts)?;
    let mut gt_opts = opts.clone();
    gt_opts.esc = EscMode::Off;
    gt_opts.scheme = default_scheme(opts.algorithm);
    let gt_run = tune(inst, &gt_opts)?;
    let oracle = CoverageOracle::new(inst);
    let truth_best = oracle.workload_cost(&gt_run.final_config);
    let mut violations = Vec::new();
    let mut checks = 0;
    for cp in &esc_run.esv_checkpoints {
        checks += 1;
        if cp.bounds.l_final > truth_best * (1.0 + 1e-9) + 1e-9 {
            violations.push(format!(
                "calls={} L={} exceeds c(W,C_B*)={truth_best}",
                cp.calls, cp.bounds.l_final
            ));
        }
        let truth_completion = oracle.workload_cost(&cp.completion);
        if cp.bounds.u_current < truth_completion * (1.0 - 1e-9) - 1e-9 {
            violations.push(format!(
                "calls={} U={} below c(W,C_t*)={truth_completion}",
                cp.calls, cp.bounds.u_current
            ));
        }
    }
    Ok((checks, violations, esc_run))
}

pub fn theorem2_suite(spec: &GeneratorSpec, seeds: &[u64]) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("theorem2");
    for &seed in seeds {
        let inst = Instance::new(generate_workload(spec, seed)?)?;
        for algorithm in [AlgoKind::TwoPhaseGreedy, AlgoKind::Mcts] {
            let mut opts = verification_options(algorithm, 4, 5_000, 10);
            opts.seed = seed;
            let (checks, violations, _) = check_bound_soundness(&inst, &opts)?;
            report.checks += checks;
            for v in violations {
                report.violation(format!("seed={seed} algo={algorithm} {v}"));
            }
        }
    }
    Ok(report)
}

/// Samples a synthetic improvement curve through the production rate
/// bookkeeping and returns the recorded (calls, r, l) per grid point.
pub fn sampled_rates(profile: impl Fn(u64) -> f64, step: u64, until: u64) -> Vec<(u64, f64, f64)> {
    // The controller needs a context even though observe-only never reads it.
    let inst = Instance::new(generate_workload(&GeneratorSpec {
        queries: 1,
        tables: 1,
        columns_per_table: 2,
        candidates_per_query: 1,
        total_candidates: None,
        base_cost_range: (100.0, 100.0),
        max_improvement_fraction: 0.5,
    }, 0).expect("static spec")).expect("static workload");
    let oracle = CoverageOracle::new(&inst);
    let mut cache = CostCache::new(1);
    for c in [Configuration::empty(), inst.omega(0)] {
        cache.insert(0, c.clone(), oracle.query_cost(0, &c), true);
    }
    let table = MciTable::new(&inst, &cache);
    let features = FeatureSet::new(&inst);
    let ctx = BoundContext {
        inst: &inst,
        table: &table,
        cache: &cache,
        features: &features,
        pool: None,
    };
    let cfg = EsvConfig {
        epsilon: 0.05,
        scheme: Scheme::FixedStep,
        step,
        sigma: 0.5,
        seed: 0,
        origin: (0, 0.0),
    };
    let mut ctrl = EsvController::new(
        cfg,
        crate::bounds::BoundMode::EscB,
        AlgoKind::TwoPhaseGreedy,
        1,
        0.2,
        true,
    )
    .expect("valid config");
    let anchor = Configuration::empty();
    for call in 1..=until {
        ctrl.on_call(call, profile(call), &ctx, &anchor)
            .expect("observe-only cannot fail");
    }
    ctrl.records()
        .iter()
        .map(|r| (r.calls, r.r.unwrap(), r.l.unwrap()))
        .collect()
}

/// Concavity direction checks on analytic curves: √b must have its latest
/// rate below the global rate at every grid point past the first, and b²
/// the opposite.
pub fn rates_suite() -> SuiteReport {
    let mut report = SuiteReport::new("rates");
    let budget = 20_000u64;
    let step = 100u64;
    let sqrt_profile = move |b: u64| (b as f64).sqrt() / (budget as f64).sqrt();
    let square_profile = move |b: u64| (b as f64 / budget as f64).powi(2);
    for (name, rates, want_l_below_r) in [
        ("sqrt", sampled_rates(sqrt_profile, step, budget), true),
        ("square", sampled_rates(square_profile, step, budget), false),
    ] {
        for &(calls, r, l) in rates.iter().skip(1) {
            report.checks += 1;
            let ok = if want_l_below_r { l < r } else { l > r };
            if !ok {
                report.violation(format!("curve={name} calls={calls} r={r} l={l}"));
            }
        }
    }
    report
}

/// Reproduces the similarity-vs-interaction scatter: for the costliest
/// queries, all ordered pairs among the strongest single-index improvers.
/// Report-only; the note strings carry the bucket statistics.
pub fn interactions_suite(spec: &GeneratorSpec, seeds: &[u64]) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("interactions");
    let tau = 0.2;
    for &seed in seeds {
        let inst = Instance::new(generate_workload(spec, seed)?)?;
        let oracle = CoverageOracle::new(&inst);
        let features = FeatureSet::new(&inst);
        let nq = inst.query_count() as u32;
        let mut queries: Vec<u32> = (0..nq).collect();
        queries.sort_by(|a, b| inst.base_cost(*b).partial_cmp(&inst.base_cost(*a)).unwrap());
        queries.truncate(5);
        let mut similar = (0u64, 0.0f64);
        let mut dissimilar = (0u64, 0.0f64);
        for &q in &queries {
            let base = inst.base_cost(q);
            let mut improvers: Vec<(u32, f64)> = inst
                .candidates_of(q)
                .iter()
                .map(|&z| (z, base - oracle.query_cost(q, &Configuration::from_members([z]))))
                .filter(|(_, ci)| *ci > 0.0)
                .collect();
            improvers.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
            improvers.truncate(50);
            let mut cache = CostCache::new(inst.query_count());
            cache.insert(q, Configuration::empty(), base, true);
            for &(z, _) in &improvers {
                let single = Configuration::from_members([z]);
                cache.insert(q, single.clone(), oracle.query_cost(q, &single), true);
            }
            for &(z1, _) in &improvers {
                for &(z2, _) in &improvers {
                    if z1 == z2 {
                        continue;
                    }
                    let pair = Configuration::from_members([z1, z2]);
                    cache.insert(q, pair.clone(), oracle.query_cost(q, &pair), true);
                    let interaction = crate::bounds::pairwise_interaction(&cache, q, z1, z2)
                        .expect("all three improvements cached");
                    report.checks += 1;
                    if !(0.0..=1.0).contains(&interaction) {
                        report.violation(format!(
                            "seed={seed} q={} z1={} z2={} interaction={interaction}",
                            inst.query_id(q),
                            inst.index_id(z1),
                            inst.index_id(z2),
                        ));
                    }
                    let s = features.index_similarity(q, z1, z2);
                    if s > tau {
                        similar = (similar.0 + 1, similar.1 + interaction);
                    } else {
                        dissimilar = (dissimilar.0 + 1, dissimilar.1 + interaction);
                    }
                }
            }
        }
        let mean = |acc: (u64, f64)| if acc.0 == 0 { 0.0 } else { acc.1 / acc.0 as f64 };
        report.notes.push(format!(
            "seed={seed} pairs_above_tau={} mean_interaction_above={:.4} pairs_below_tau={} mean_interaction_below={:.4}",
            similar.0,
            mean(similar),
            dissimilar.0,
            mean(dissimilar),
        ));
    }
    Ok(report)
}

/// A reachable-looking run state assembled without running a tuner: the
/// initialization calls plus a random mix of evaluations, refinements and
/// freezes. Used to stress bound properties over many states cheaply.
pub struct SyntheticState {
    pub inst: Instance,
    pub cache: CostCache,
    pub table: MciTable,
    pub features: FeatureSet,
}

impl SyntheticState {
    pub fn context(&self) -> BoundContext<'_> {
        BoundContext {
            inst: &self.inst,
            table: &self.table,
            cache: &self.cache,
            features: &self.features,
            pool: None,
        }
    }
}

pub fn synthetic_state(spec: &GeneratorSpec, seed: u64, evaluations: usize) -> Result<SyntheticState> {
    let inst = Instance::new(generate_workload(spec, seed)?)?;
    let oracle = CoverageOracle::new(&inst);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x73746174);
    let nq = inst.query_count() as u32;
    let nz = inst.index_count() as u32;
    let mut cache = CostCache::new(nq as usize);
    for q in 0..nq {
        for c in [Configuration::empty(), inst.omega(q)] {
            cache.insert(q, c.clone(), oracle.query_cost(q, &c), true);
        }
    }
    let mut table = MciTable::new(&inst, &cache);
    let features = FeatureSet::new(&inst);
    for _ in 0..evaluations {
        let q = rng.random_range(0..nq);
        let config = random_config(&mut rng, nz, 4);
        let cost = oracle.query_cost(q, &config);
        cache.insert(q, config.clone(), cost, true);
        if config.len() == 1 {
            table.refine_single_index(q, config.members()[0], inst.base_cost(q) - cost);
        }
    }
    if rng.random::<f64>() < 0.3 {
        table.freeze(rng.random_range(0..nz));
    }
    Ok(SyntheticState {
        inst,
        cache,
        table,
        features,
    })
}

/// μ ≤ u on every scored pair, and the interaction-refined lower bound at
/// least as tight as the plain one, over many synthetic states.
pub fn mu_dominance_check(
    spec: &GeneratorSpec,
    seeds: &[u64],
    k: usize,
    tau: f64,
) -> Result<(u64, Vec<String>)> {
    let mut checks = 0;
    let mut violations = Vec::new();
    for &seed in seeds {
        for evaluations in [0usize, 5, 20] {
            let state = synthetic_state(spec, seed.wrapping_add(evaluations as u64), evaluations)?;
            let ctx = state.context();
            for algo in [AlgoKind::TwoPhaseGreedy, AlgoKind::Mcts] {
                let plain = simulated_greedy_lower_bound(&state.inst, &state.table, k, None);
                let refined = simulated_greedy_lower_bound_mu(&ctx, k, tau, algo);
                checks += 1;
                if refined.mu_excess > 1e-9 {
                    violations.push(format!(
                        "seed={seed} evals={evaluations} algo={algo} mu exceeds u by {}",
                        refined.mu_excess
                    ));
                }
                if refined.lower < plain.lower - 1e-9 {
                    violations.push(format!(
                        "seed={seed} evals={evaluations} algo={algo} refined L={} below plain L={}",
                        refined.lower, plain.lower
                    ));
                }
            }
        }
    }
    Ok((checks, violations))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seeds(n: u64) -> Vec<u64> {
        (0..n).collect()
    }

    #[test]
    fn honest_oracle_passes_assumption_suites() {
        let spec = small_spec();
        let m = monotonicity_suite(&spec, &seeds(2), false).unwrap();
        assert!(m.passed(), "{}", m.render());
        assert_eq!(m.checks, 2 * SAMPLES_PER_WORKLOAD);
        let s = submodularity_suite(&spec, &seeds(2), false).unwrap();
        assert!(s.passed(), "{}", s.render());
    }

    #[test]
    fn adversarial_oracle_fails_the_negative_control() {
        let spec = small_spec();
        let m = monotonicity_suite(&spec, &seeds(2), true).unwrap();
        let s = submodularity_suite(&spec, &seeds(2), true).unwrap();
        assert!(
            m.violation_count + s.violation_count > 0,
            "adversarial mode produced no violations"
        );
        assert!(!m.violations.is_empty() || !s.violations.is_empty());
    }

    #[test]
    fn derived_cost_matches_subset_enumeration() {
        let r = derived_suite(&small_spec(), &seeds(5)).unwrap();
        assert!(r.passed(), "{}", r.render());
        assert!(r.checks > 0);
    }

    #[test]
    fn simulated_mci_sums_dominate_replayed_greedy() {
        let r = theorem1_suite(&small_spec(), &seeds(10)).unwrap();
        assert!(r.passed(), "{}", r.render());
    }

    #[test]
    fn checkpoint_bounds_are_sound_for_both_tuners() {
        let r = theorem2_suite(&small_spec(), &seeds(3)).unwrap();
        assert!(r.passed(), "{}", r.render());
        assert!(r.checks > 0, "no checkpoints were verified");
    }

    #[test]
    fn rate_directions_follow_curve_shape() {
        let r = rates_suite();
        assert!(r.passed(), "{}", r.render());
        // 200 grid points per curve, first skipped on each.
        assert_eq!(r.checks, 2 * 199);
    }

    #[test]
    fn interaction_study_reports_bucket_statistics() {
        let r = interactions_suite(&small_spec(), &seeds(1)).unwrap();
        assert!(r.passed(), "{}", r.render());
        assert_eq!(r.notes.len(), 1);
        assert!(r.checks > 0);
    }

    #[test]
    fn mu_never_exceeds_u_and_refined_bound_dominates() {
        let (checks, violations) = mu_dominance_check(&small_spec(), &seeds(10), 4, 0.2).unwrap();
        assert!(violations.is_empty(), "{violations:?}");
        assert_eq!(checks, 10 * 3 * 2);
    }

    #[test]
    fn unknown_suite_is_rejected() {
        assert!(matches!(
            run_suite("nope", &small_spec(), &[0], false),
            Err(EscError::Validation(_))
        ));
    }
}
