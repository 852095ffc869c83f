//! Acceptance gate: ten product-level checks, one test per criterion.
//! Each test asserts its criterion and prints one `criterion NN ...: PASS`
//! line (shown with `--nocapture`); the libtest result line carries the
//! same verdict either way.

use std::process::Command;
use std::time::{Duration, Instant};

use esc_core::artifacts::ResultDoc;
use esc_core::generate::{generate_workload, GeneratorSpec};
use esc_core::metrics::{evaluate, savings_percent, MetricsSummary, RunView};
use esc_core::oracle::{percentage_improvement, CoverageOracle};
use esc_core::sweep::default_scheme;
use esc_core::tuner::{tune, AlgoKind, EscMode, TuneOptions, TuningResult, WiiMode};
use esc_core::verify::{
    check_bound_soundness, derived_suite, monotonicity_suite, mu_dominance_check, rates_suite,
    sampled_rates, small_spec, submodularity_suite, theorem1_suite, verification_options,
};
use esc_core::workload::Instance;
use esc_core::{esv::Scheme, Result};

/// Workload family for the soundness and guarantee criteria: at most 12
/// queries and 30 candidate indexes, sizes cycling with the seed.
fn family_spec(i: u64) -> GeneratorSpec {
    let queries = 4 + (i % 9) as usize;
    let candidates_per_query = 2 + (i % 3) as usize;
    let raw = queries * candidates_per_query;
    GeneratorSpec {
        queries,
        tables: 3 + (i % 3) as usize,
        columns_per_table: 4,
        candidates_per_query,
        total_candidates: (raw > 30).then_some(30),
        base_cost_range: (50.0, 400.0),
        max_improvement_fraction: 0.8,
    }
}

fn family_k(i: u64) -> usize {
    2 + (i % 4) as usize
}

fn family_algo(i: u64) -> AlgoKind {
    if i % 2 == 0 {
        AlgoKind::TwoPhaseGreedy
    } else {
        AlgoKind::Mcts
    }
}

fn family_instance(i: u64) -> Instance {
    Instance::new(generate_workload(&family_spec(i), i).expect("family spec is valid"))
        .expect("generated workloads validate")
}

fn grid_options(algo: AlgoKind, k: usize, esc: EscMode, epsilon: f64, seed: u64) -> TuneOptions {
    TuneOptions {
        algorithm: algo,
        wii: WiiMode::Off,
        esc,
        scheme: default_scheme(algo),
        epsilon,
        budget: 2_000,
        k,
        step: 10,
        sigma: 0.5,
        tau: 0.2,
        theta: 0.05,
        seed,
    }
}

/// Measured improvement loss of an early-stopping run against its twin with
/// early stopping disabled, from true oracle costs.
fn measured_metrics(
    inst: &Instance,
    gt_opts: &TuneOptions,
    gt: &TuningResult,
    opts: &TuneOptions,
    run: &TuningResult,
) -> Result<MetricsSummary> {
    let gt_doc = ResultDoc::new(String::new(), inst, gt_opts, gt);
    let doc = ResultDoc::new(String::new(), inst, opts, run);
    evaluate(
        inst,
        RunView {
            options: &gt_doc.options,
            outcome: &gt_doc.outcome,
        },
        RunView {
            options: &doc.options,
            outcome: &doc.outcome,
        },
    )
}

#[test]
fn criterion_01_bound_soundness() {
    let t0 = Instant::now();
    let mut checks = 0u64;
    let mut violations: Vec<String> = Vec::new();
    for i in 0..200u64 {
        let inst = family_instance(i);
        for algo in [AlgoKind::TwoPhaseGreedy, AlgoKind::Mcts] {
            let mut opts = verification_options(algo, family_k(i), 2_000, 10);
            opts.seed = i;
            let (c, v, _) = check_bound_soundness(&inst, &opts).expect("runs complete");
            checks += c;
            violations.extend(v.into_iter().map(|m| format!("workload={i} algo={algo} {m}")));
        }
    }
    let elapsed = t0.elapsed();
    assert!(checks > 0, "no checkpoints were produced");
    assert!(
        violations.is_empty(),
        "bound soundness violations:\n{}",
        violations.join("\n")
    );
    assert!(
        elapsed < Duration::from_secs(120),
        "soundness sweep took {elapsed:?}, over the 2 min budget"
    );
    println!(
        "criterion 01 (bound soundness): PASS - 200 workloads, both tuners, \
         {checks} checkpoint checks, 0 violations, {elapsed:?}"
    );
}

#[test]
fn criterion_02_early_stop_guarantee() {
    let mut stops = 0u64;
    let mut runs = 0u64;
    let mut violations: Vec<String> = Vec::new();
    for i in 0..200u64 {
        let inst = family_instance(i);
        let algo = family_algo(i);
        let k = family_k(i);
        let mut gt_opts = grid_options(algo, k, EscMode::Off, 0.05, i);
        gt_opts.scheme = default_scheme(algo);
        let gt = tune(&inst, &gt_opts).expect("ground truth completes");
        for epsilon in [0.01, 0.05, 0.10] {
            let opts = grid_options(algo, k, EscMode::B, epsilon, i);
            let run = tune(&inst, &opts).expect("run completes");
            runs += 1;
            if !run.stopped_early {
                continue;
            }
            stops += 1;
            let m = measured_metrics(&inst, &gt_opts, &gt, &opts, &run).expect("evaluation");
            if m.improvement_loss > epsilon + 1e-9 {
                violations.push(format!(
                    "workload={i} algo={algo} eps={epsilon} loss={}",
                    m.improvement_loss
                ));
            }
        }
    }
    assert!(stops > 0, "no run ever triggered an early stop");
    assert!(
        violations.is_empty(),
        "epsilon guarantee violations:\n{}",
        violations.join("\n")
    );
    println!(
        "criterion 02 (early-stop guarantee): PASS - {runs} runs across \
         eps in {{0.01, 0.05, 0.10}}, {stops} triggered stops, 0 violations"
    );
}

#[test]
fn criterion_03_interaction_refined_bounds() {
    // mu <= u and refined-L dominance over randomized bound states.
    let seeds: Vec<u64> = (0..25).collect();
    let (state_checks, state_violations) =
        mu_dominance_check(&small_spec(), &seeds, 4, 0.2).expect("states build");
    assert!(
        state_violations.is_empty(),
        "synthetic-state violations:\n{}",
        state_violations.join("\n")
    );

    // The same dominance on live checkpoints: paired runs differing only in
    // the bound mode share their trajectory, so checkpoints align by calls.
    let mut aligned = 0u64;
    let mut live_violations: Vec<String> = Vec::new();
    for i in 0..40u64 {
        let inst = family_instance(i);
        for algo in [AlgoKind::TwoPhaseGreedy, AlgoKind::Mcts] {
            let mut opts_b = verification_options(algo, family_k(i), 1_500, 10);
            opts_b.seed = i;
            let mut opts_i = opts_b.clone();
            opts_i.esc = EscMode::I;
            let run_b = tune(&inst, &opts_b).expect("esc-b run");
            let run_i = tune(&inst, &opts_i).expect("esc-i run");
            for cp in &run_i.esv_checkpoints {
                if cp.bounds.mu_excess > 1e-9 {
                    live_violations.push(format!(
                        "workload={i} algo={algo} calls={} mu exceeds u by {}",
                        cp.calls, cp.bounds.mu_excess
                    ));
                }
            }
            for cp_i in &run_i.esv_checkpoints {
                let Some(cp_b) = run_b.esv_checkpoints.iter().find(|c| c.calls == cp_i.calls)
                else {
                    continue;
                };
                aligned += 1;
                if cp_i.bounds.l_final < cp_b.bounds.l_final - 1e-9 {
                    live_violations.push(format!(
                        "workload={i} algo={algo} calls={} refined L={} below plain L={}",
                        cp_i.calls, cp_i.bounds.l_final, cp_b.bounds.l_final
                    ));
                }
            }
        }
    }
    assert!(aligned > 0, "no aligned checkpoints between esc-b and esc-i");
    assert!(
        live_violations.is_empty(),
        "live checkpoint violations:\n{}",
        live_violations.join("\n")
    );

    // The interaction-refined stop keeps the guarantee only heuristically:
    // measure its violation rate on default-generator workloads and require
    // it stays rare.
    let mut stops = 0u64;
    let mut guarantee_misses = 0u64;
    for i in 0..100u64 {
        let inst = Instance::new(generate_workload(&small_spec(), i).expect("generation"))
            .expect("valid workload");
        let algo = family_algo(i);
        let k = family_k(i);
        let gt_opts = grid_options(algo, k, EscMode::Off, 0.05, i);
        let gt = tune(&inst, &gt_opts).expect("ground truth completes");
        for epsilon in [0.01, 0.05, 0.10] {
            let opts = grid_options(algo, k, EscMode::I, epsilon, i);
            let run = tune(&inst, &opts).expect("run completes");
            if !run.stopped_early {
                continue;
            }
            stops += 1;
            let m = measured_metrics(&inst, &gt_opts, &gt, &opts, &run).expect("evaluation");
            if m.improvement_loss > epsilon + 1e-9 {
                guarantee_misses += 1;
            }
        }
    }
    assert!(stops > 0, "no interaction-refined run ever stopped");
    let rate = guarantee_misses as f64 / stops as f64;
    assert!(
        rate <= 0.05,
        "esc-i guarantee violation rate {rate:.4} ({guarantee_misses}/{stops}) above 5%"
    );
    println!(
        "criterion 03 (interaction-refined bounds): PASS - {state_checks} state checks, \
         {aligned} aligned checkpoints, esc-i stop-violation rate {rate:.4} \
         ({guarantee_misses}/{stops} stops)"
    );
}

#[test]
fn criterion_04_simulated_greedy_dominates_replay() {
    let t0 = Instant::now();
    let seeds: Vec<u64> = (0..100).collect();
    let report = theorem1_suite(&small_spec(), &seeds).expect("suite runs");
    let elapsed = t0.elapsed();
    assert!(report.passed(), "{}", report.render());
    assert!(report.checks >= 100, "suite did too little work");
    assert!(
        elapsed < Duration::from_secs(30),
        "replay suite took {elapsed:?}, over the 30 s budget"
    );
    println!(
        "criterion 04 (simulated-greedy dominance): PASS - {} checks over 100 instances, \
         0 violations, {elapsed:?}",
        report.checks
    );
}

#[test]
fn criterion_05_derived_cost_exact() {
    let seeds: Vec<u64> = (0..50).collect();
    let report = derived_suite(&small_spec(), &seeds).expect("suite runs");
    assert!(report.passed(), "{}", report.render());
    assert!(report.checks >= 50, "suite did too little work");
    println!(
        "criterion 05 (derived cost vs subset enumeration): PASS - {} exact comparisons \
         over 50 instances, 0 mismatches",
        report.checks
    );
}

#[test]
fn criterion_06_oracle_assumptions() {
    let spec = small_spec();
    let mono = monotonicity_suite(&spec, &[0], false).expect("suite runs");
    let sub = submodularity_suite(&spec, &[0], false).expect("suite runs");
    assert!(mono.passed(), "{}", mono.render());
    assert!(sub.passed(), "{}", sub.render());
    assert_eq!(mono.checks, 10_000, "monotonicity sample count drifted");
    assert_eq!(sub.checks, 10_000, "submodularity sample count drifted");
    // Negative control: the adversarial oracle must be caught.
    let mono_adv = monotonicity_suite(&spec, &[0, 1], true).expect("suite runs");
    let sub_adv = submodularity_suite(&spec, &[0, 1], true).expect("suite runs");
    let adversarial_hits = mono_adv.violation_count + sub_adv.violation_count;
    assert!(
        adversarial_hits >= 1,
        "adversarial oracle slipped through both suites"
    );
    println!(
        "criterion 06 (oracle assumptions): PASS - 10000 monotonicity and 10000 \
         submodularity samples clean; adversarial mode caught {adversarial_hits} times"
    );
}

#[test]
fn criterion_07_rate_concavity_directions() {
    let report = rates_suite();
    assert!(report.passed(), "{}", report.render());
    // At the first grid point both rates span the same origin segment, so
    // they coincide identically; strict ordering starts at the second.
    let budget = 20_000u64;
    let sqrt = sampled_rates(
        move |b| (b as f64).sqrt() / (budget as f64).sqrt(),
        100,
        budget,
    );
    let square = sampled_rates(move |b| (b as f64 / budget as f64).powi(2), 100, budget);
    assert_eq!(sqrt.len(), 200);
    assert_eq!(square.len(), 200);
    assert_eq!(sqrt[0].1, sqrt[0].2, "first-point rates must coincide");
    assert_eq!(square[0].1, square[0].2, "first-point rates must coincide");
    assert!(sqrt.iter().skip(1).all(|&(_, r, l)| l < r));
    assert!(square.iter().skip(1).all(|&(_, r, l)| l > r));
    println!(
        "criterion 07 (rate directions): PASS - sqrt curve l<r and square curve l>r \
         at all {} comparable grid points, exact",
        report.checks
    );
}

#[test]
fn criterion_08_savings_arithmetic_anchor() {
    // evaluate() over a synthetic trace: identical configurations, the
    // early run charged 1000 calls against a 2700-call ground truth.
    let spec = GeneratorSpec {
        queries: 2,
        tables: 1,
        columns_per_table: 3,
        candidates_per_query: 2,
        total_candidates: None,
        base_cost_range: (50.0, 100.0),
        max_improvement_fraction: 0.5,
    };
    let inst = Instance::new(generate_workload(&spec, 0).unwrap()).unwrap();
    let opts = grid_options(AlgoKind::TwoPhaseGreedy, 2, EscMode::Off, 0.05, 0);
    let run = tune(&inst, &opts).expect("run completes");
    let mut gt_doc = ResultDoc::new(String::new(), &inst, &opts, &run);
    let mut early_doc = gt_doc.clone();
    gt_doc.outcome.calls_used = 2700;
    early_doc.outcome.calls_used = 1000;
    let m = evaluate(
        &inst,
        RunView {
            options: &gt_doc.options,
            outcome: &gt_doc.outcome,
        },
        RunView {
            options: &early_doc.options,
            outcome: &early_doc.outcome,
        },
    )
    .expect("synthetic trace evaluates");
    assert!(
        (m.savings_percent - 62.96).abs() <= 0.01,
        "savings {} not within 62.96 +/- 0.01",
        m.savings_percent
    );
    assert_eq!(m.improvement_loss, 0.0);
    assert!((savings_percent(1000, 2700) - 62.96).abs() <= 0.01);
    println!(
        "criterion 08 (savings anchor): PASS - evaluate() reports {:.4}% for \
         1000 of 2700 calls",
        m.savings_percent
    );
}

#[test]
fn criterion_09_diminishing_returns_on_preset() {
    let t0 = Instant::now();
    let inst = Instance::new(
        generate_workload(&GeneratorSpec::resolve("tpch-like").unwrap(), 0).unwrap(),
    )
    .unwrap();
    assert_eq!(inst.query_count(), 22);
    assert_eq!(inst.index_count(), 168);
    let base = TuneOptions {
        algorithm: AlgoKind::TwoPhaseGreedy,
        wii: WiiMode::Off,
        esc: EscMode::B,
        scheme: Scheme::Heuristic,
        epsilon: 0.05,
        budget: 20_000,
        k: 20,
        step: 100,
        sigma: 0.5,
        tau: 0.2,
        theta: 0.05,
        seed: 0,
    };
    let mut gt_opts = base.clone();
    gt_opts.esc = EscMode::Off;
    let gt = tune(&inst, &gt_opts).expect("ground truth completes");
    let run = tune(&inst, &base).expect("esc run completes");
    assert!(run.stopped_early, "early stop never fired on the preset");
    let m = measured_metrics(&inst, &gt_opts, &gt, &base, &run).expect("evaluation");
    assert!(
        m.savings_percent > 0.0,
        "no call savings: {} of {} calls",
        m.calls_early,
        m.calls_ground_truth
    );
    assert!(
        m.improvement_loss <= 0.05 + 1e-9,
        "loss {} above epsilon",
        m.improvement_loss
    );
    // Convexity-aware scheduling must verify less often than the fixed grid.
    let mut generic_opts = base.clone();
    generic_opts.scheme = Scheme::Generic;
    let mut fixed_opts = base.clone();
    fixed_opts.scheme = Scheme::FixedStep;
    let generic = tune(&inst, &generic_opts).expect("generic run completes");
    let fixed = tune(&inst, &fixed_opts).expect("fixed run completes");
    assert!(
        generic.esv_invocations < fixed.esv_invocations,
        "generic scheme used {} verifications vs fixed {}",
        generic.esv_invocations,
        fixed.esv_invocations
    );
    let elapsed = t0.elapsed();
    assert!(
        elapsed < Duration::from_secs(60),
        "preset demonstration took {elapsed:?}, over the 1 min budget"
    );
    println!(
        "criterion 09 (preset diminishing returns): PASS - stopped at {} of {} calls \
         (savings {:.2}%), loss {:.6}, generic {} vs fixed {} verifications, {elapsed:?}",
        m.calls_early,
        m.calls_ground_truth,
        m.savings_percent,
        m.improvement_loss,
        generic.esv_invocations,
        fixed.esv_invocations
    );
}

#[test]
fn criterion_10_byte_identical_artifacts() {
    let bin = env!("CARGO_BIN_EXE_esc");
    let dir = tempfile::tempdir().expect("tempdir");
    let spec_path = dir.path().join("spec.json");
    std::fs::write(
        &spec_path,
        r#"{"queries": 5, "tables": 2, "columns_per_table": 4, "candidates_per_query": 3}"#,
    )
    .unwrap();
    let workload = dir.path().join("workload.json");
    let generate = Command::new(bin)
        .args(["generate", "--spec"])
        .arg(&spec_path)
        .args(["--seed", "7", "-o"])
        .arg(&workload)
        .output()
        .expect("generate runs");
    assert!(
        generate.status.success(),
        "generate failed: {}",
        String::from_utf8_lossy(&generate.stderr)
    );
    let tune_into = |out: &std::path::Path| {
        let status = Command::new(bin)
            .args(["tune", "--workload"])
            .arg(&workload)
            .args([
                "--algorithm",
                "two-phase-greedy",
                "--esc",
                "b",
                "--esvs",
                "generic",
                "--epsilon",
                "0.05",
                "--budget",
                "400",
                "-K",
                "3",
                "--step",
                "10",
                "--seed",
                "11",
                "-o",
            ])
            .arg(out)
            .output()
            .expect("tune runs");
        assert!(
            status.status.success(),
            "tune failed: {}",
            String::from_utf8_lossy(&status.stderr)
        );
    };
    let run1 = dir.path().join("run1");
    let run2 = dir.path().join("run2");
    tune_into(&run1);
    tune_into(&run2);
    for file in ["curve.csv", "calls.csv"] {
        let a = std::fs::read(run1.join(file)).expect("first run artifact");
        let b = std::fs::read(run2.join(file)).expect("second run artifact");
        assert!(!a.is_empty(), "{file} is empty");
        assert_eq!(a, b, "{file} differs between identical tune invocations");
    }
    println!(
        "criterion 10 (determinism): PASS - curve.csv and calls.csv byte-identical \
         across repeated tune invocations"
    );
}

/// Keeps the truth computation honest: the evaluation oracle must agree with
/// a from-scratch oracle on the final configurations it scores.
#[test]
fn evaluation_truth_is_reproducible() {
    let inst = family_instance(3);
    let opts = grid_options(AlgoKind::TwoPhaseGreedy, 3, EscMode::Off, 0.05, 3);
    let run = tune(&inst, &opts).expect("run completes");
    let oracle = CoverageOracle::new(&inst);
    let eta = percentage_improvement(
        oracle.empty_workload_cost(),
        oracle.workload_cost(&run.final_config),
    )
    .unwrap();
    let m = measured_metrics(&inst, &opts, &run, &opts, &run).expect("self evaluation");
    assert!((m.true_improvement_early - eta).abs() < 1e-12);
    assert_eq!(m.improvement_loss, 0.0);
}
