//! Counterfactual evaluation of an early-stopped run against its
//! full-budget ground-truth twin. True costs come from an unbudgeted oracle
//! clone; evaluation never charges the run's budget.

use std::path::Path;

use serde::Serialize;

use crate::artifacts::{load_run, OptionsDoc, OutcomeDoc};
use crate::error::{EscError, Result};
use crate::oracle::{percentage_improvement, CoverageOracle};
use crate::workload::Instance;

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct MetricsSummary {
    /// η(W, C_B*) − η(W, C_{b_ε}*), from ground-truth oracle costs.
    pub improvement_loss: f64,
    /// (1 − b_ε / B̃) × 100.
    pub savings_percent: f64,
    pub calls_early: u64,
    pub calls_ground_truth: u64,
    pub true_improvement_ground_truth: f64,
    pub true_improvement_early: f64,
    pub esv_invocations: u64,
    pub esv_wall_seconds: f64,
}

pub fn savings_percent(calls_early: u64, calls_ground_truth: u64) -> f64 {
    (1.0 - calls_early as f64 / calls_ground_truth as f64) * 100.0
}

/// One run's persisted view, independent of where it came from.
#[derive(Debug, Clone, Copy)]
pub struct RunView<'a> {
    pub options: &'a OptionsDoc,
    pub outcome: &'a OutcomeDoc,
}

fn check_compatible(ground_truth: RunView, early: RunView) -> Result<()> {
    let gt = ground_truth.options;
    let e = early.options;
    let mismatch = |what: &str| {
        Err(EscError::Validation(format!(
            "ground truth and evaluated run differ in {what}; the comparison is meaningless"
        )))
    };
    if gt.algorithm != e.algorithm {
        return mismatch("algorithm");
    }
    if gt.seed != e.seed {
        return mismatch("seed");
    }
    if gt.wii != e.wii {
        return mismatch("wii mode");
    }
    if gt.k != e.k {
        return mismatch("K");
    }
    if gt.budget != e.budget {
        return mismatch("budget");
    }
    if ground_truth.outcome.stopped_early {
        return Err(EscError::Validation(
            "ground-truth run stopped early; rerun it without early stopping".into(),
        ));
    }
    Ok(())
}

pub fn evaluate(inst: &Instance, ground_truth: RunView, early: RunView) -> Result<MetricsSummary> {
    check_compatible(ground_truth, early)?;
    let oracle = CoverageOracle::new(inst);
    let c0 = oracle.empty_workload_cost();
    let gt_config = inst.config_from_ids(
        ground_truth.outcome.final_config.iter().map(String::as_str),
    )?;
    let early_config =
        inst.config_from_ids(early.outcome.final_config.iter().map(String::as_str))?;
    let eta_gt = percentage_improvement(c0, oracle.workload_cost(&gt_config))?;
    let eta_early = percentage_improvement(c0, oracle.workload_cost(&early_config))?;
    let calls_ground_truth = ground_truth.outcome.calls_used;
    if calls_ground_truth == 0 {
        return Err(EscError::Validation(
            "ground-truth run made no what-if calls".into(),
        ));
    }
    Ok(MetricsSummary {
        improvement_loss: eta_gt - eta_early,
        savings_percent: savings_percent(early.outcome.calls_used, calls_ground_truth),
        calls_early: early.outcome.calls_used,
        calls_ground_truth,
        true_improvement_ground_truth: eta_gt,
        true_improvement_early: eta_early,
        esv_invocations: early.outcome.esv_invocations,
        esv_wall_seconds: early.outcome.esv_wall_seconds,
    })
}

/// Directory front end: both must be completed run directories over the
/// byte-identical workload.
pub fn evaluate_dirs(run_dir: &Path, ground_truth_dir: &Path) -> Result<MetricsSummary> {
    let (workload, early_doc) = load_run(run_dir)?;
    let (_, gt_doc) = load_run(ground_truth_dir)?;
    if early_doc.workload_sha256 != gt_doc.workload_sha256 {
        return Err(EscError::Validation(
            "run and ground truth were produced from different workloads".into(),
        ));
    }
    let inst = Instance::new(workload)?;
    evaluate(
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
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::artifacts::ResultDoc;
    use crate::esv::Scheme;
    use crate::tuner::{tune, AlgoKind, EscMode, TuneOptions, WiiMode};

    fn options(esc: EscMode, scheme: Scheme, epsilon: f64) -> TuneOptions {
        TuneOptions {
            algorithm: AlgoKind::TwoPhaseGreedy,
            wii: WiiMode::Off,
            esc,
            scheme,
            epsilon,
            budget: 200,
            k: 2,
            step: 5,
            sigma: 0.5,
            tau: 0.2,
            theta: 0.05,
            seed: 3,
        }
    }

    fn run_doc(opts: &TuneOptions, inst: &Instance) -> ResultDoc {
        let result = tune(inst, opts).unwrap();
        ResultDoc::new("digest".into(), inst, opts, &result)
    }

    #[test]
    fn savings_matches_the_anchor_arithmetic() {
        assert!((savings_percent(1000, 2700) - 62.962962962962962).abs() < 1e-12);
        assert_eq!(savings_percent(2700, 2700), 0.0);
        assert_eq!(savings_percent(0, 2700), 100.0);
    }

    #[test]
    fn identical_runs_have_zero_loss_and_zero_savings() {
        let inst = Instance::new(crate::workload::tests::two_query_workload()).unwrap();
        let opts = options(EscMode::Off, Scheme::Heuristic, 0.05);
        let doc = run_doc(&opts, &inst);
        let view = RunView {
            options: &doc.options,
            outcome: &doc.outcome,
        };
        let m = evaluate(&inst, view, view).unwrap();
        assert_eq!(m.improvement_loss, 0.0);
        assert_eq!(m.savings_percent, 0.0);
        assert_eq!(m.calls_early, m.calls_ground_truth);
        assert!(m.true_improvement_ground_truth >= 0.0);
    }

    #[test]
    fn early_stopped_run_reports_loss_within_epsilon() {
        let inst = Instance::new(crate::workload::tests::two_query_workload()).unwrap();
        let gt = run_doc(&options(EscMode::Off, Scheme::Heuristic, 0.05), &inst);
        let early_opts = options(EscMode::B, Scheme::FixedStep, 0.5);
        let early = run_doc(&early_opts, &inst);
        let m = evaluate(
            &inst,
            RunView {
                options: &gt.options,
                outcome: &gt.outcome,
            },
            RunView {
                options: &early.options,
                outcome: &early.outcome,
            },
        )
        .unwrap();
        assert!((0.0..=100.0).contains(&m.savings_percent));
        assert!(m.improvement_loss <= 0.5 + 1e-9);
        assert!(m.calls_early <= m.calls_ground_truth);
    }

    #[test]
    fn mismatched_runs_are_rejected() {
        let inst = Instance::new(crate::workload::tests::two_query_workload()).unwrap();
        let gt = run_doc(&options(EscMode::Off, Scheme::Heuristic, 0.05), &inst);
        let mut other_opts = options(EscMode::B, Scheme::FixedStep, 0.05);
        other_opts.seed = 4;
        let other = run_doc(&other_opts, &inst);
        let err = evaluate(
            &inst,
            RunView {
                options: &gt.options,
                outcome: &gt.outcome,
            },
            RunView {
                options: &other.options,
                outcome: &other.outcome,
            },
        );
        assert!(matches!(err, Err(EscError::Validation(_))));
    }

    #[test]
    fn stopped_ground_truth_is_rejected() {
        let inst = Instance::new(crate::workload::tests::two_query_workload()).unwrap();
        let stopped = run_doc(&options(EscMode::B, Scheme::FixedStep, 0.9), &inst);
        if !stopped.outcome.stopped_early {
            // The tiny fixture must stop at ε=0.9; guard the premise.
            panic!("fixture unexpectedly ran to completion");
        }
        let view = RunView {
            options: &stopped.options,
            outcome: &stopped.outcome,
        };
        assert!(matches!(
            evaluate(&inst, view, view),
            Err(EscError::Validation(_))
        ));
    }
}
