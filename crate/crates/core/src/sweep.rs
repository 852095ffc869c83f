//! ε × variant × seed sweeps. Each seed gets one shared ground-truth run
//! (early stopping off, natural termination); every variant row is evaluated
//! against it. Rows are ordered (seed asc, ε asc, variant order below), so
//! reruns with identical inputs produce byte-identical CSVs.

use std::fmt::Write as _;

use crate::artifacts::ResultDoc;
use crate::error::Result;
use crate::esv::Scheme;
use crate::metrics::{evaluate, MetricsSummary, RunView};
use crate::tuner::{tune, AlgoKind, EscMode, TuneOptions};
use crate::workload::Instance;

pub const SUMMARY_HEADER: &str = "epsilon,variant,seed,algorithm,calls_early,calls_ground_truth,\
stopped,improvement_loss,savings_percent,esv_invocations,\
true_improvement_ground_truth,true_improvement_early";

/// Observed improvement threshold of the MCTS baseline.
const MCTS_BASELINE_THRESHOLD: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    EscB,
    EscI,
    EscBFixStep,
    EscIFixStep,
    Baseline,
}

pub const ALL_VARIANTS: [Variant; 5] = [
    Variant::EscB,
    Variant::EscI,
    Variant::EscBFixStep,
    Variant::EscIFixStep,
    Variant::Baseline,
];

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Variant::EscB => "esc-b",
            Variant::EscI => "esc-i",
            Variant::EscBFixStep => "esc-b-fixstep",
            Variant::EscIFixStep => "esc-i-fixstep",
            Variant::Baseline => "baseline",
        })
    }
}

/// Scheme each algorithm pairs with by default.
pub fn default_scheme(algo: AlgoKind) -> Scheme {
    match algo {
        AlgoKind::TwoPhaseGreedy => Scheme::Heuristic,
        AlgoKind::Mcts => Scheme::Generic,
    }
}

/// The non-verifying baseline each algorithm is compared against.
pub fn baseline_scheme(algo: AlgoKind) -> Scheme {
    match algo {
        AlgoKind::TwoPhaseGreedy => Scheme::StopAfterPhase1,
        AlgoKind::Mcts => Scheme::StopAtImprovement(MCTS_BASELINE_THRESHOLD),
    }
}

fn variant_options(base: &TuneOptions, v: Variant, epsilon: f64, seed: u64) -> TuneOptions {
    let mut o = base.clone();
    o.epsilon = epsilon;
    o.seed = seed;
    match v {
        Variant::EscB => {
            o.esc = EscMode::B;
            o.scheme = default_scheme(o.algorithm);
        }
        Variant::EscI => {
            o.esc = EscMode::I;
            o.scheme = default_scheme(o.algorithm);
        }
        Variant::EscBFixStep => {
            o.esc = EscMode::B;
            o.scheme = Scheme::FixedStep;
        }
        Variant::EscIFixStep => {
            o.esc = EscMode::I;
            o.scheme = Scheme::FixedStep;
        }
        // The baseline ignores ε but needs the controller active, so any
        // non-off esc mode works; its stop carries no bounds either way.
        Variant::Baseline => {
            o.esc = EscMode::B;
            o.scheme = baseline_scheme(o.algorithm);
        }
    }
    o
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub epsilon: f64,
    pub variant: Variant,
    pub seed: u64,
    pub algorithm: AlgoKind,
    pub stopped: bool,
    pub metrics: MetricsSummary,
}

pub fn sweep(
    inst: &Instance,
    base: &TuneOptions,
    epsilons: &[f64],
    seeds: &[u64],
) -> Result<Vec<SweepRow>> {
    let mut eps = epsilons.to_vec();
    eps.sort_by(f64::total_cmp);
    eps.dedup();
    let mut sd = seeds.to_vec();
    sd.sort_unstable();
    sd.dedup();
    let mut rows = Vec::new();
    for &seed in &sd {
        let mut gt_opts = base.clone();
        gt_opts.esc = EscMode::Off;
        gt_opts.scheme = default_scheme(base.algorithm);
        gt_opts.seed = seed;
        let gt = tune(inst, &gt_opts)?;
        let gt_doc = ResultDoc::new(String::new(), inst, &gt_opts, &gt);
        let gt_view = RunView {
            options: &gt_doc.options,
            outcome: &gt_doc.outcome,
        };
        // The baseline's trajectory does not depend on ε: run it once.
        let mut baseline: Option<(bool, MetricsSummary)> = None;
        for &epsilon in &eps {
            for v in ALL_VARIANTS {
                let (stopped, metrics) = if v == Variant::Baseline {
                    if baseline.is_none() {
                        let opts = variant_options(base, v, base.epsilon, seed);
                        let r = tune(inst, &opts)?;
                        let doc = ResultDoc::new(String::new(), inst, &opts, &r);
                        let m = evaluate(
                            inst,
                            gt_view,
                            RunView {
                                options: &doc.options,
                                outcome: &doc.outcome,
                            },
                        )?;
                        baseline = Some((r.stopped_early, m));
                    }
                    baseline.clone().unwrap()
                } else {
                    let opts = variant_options(base, v, epsilon, seed);
                    let r = tune(inst, &opts)?;
                    let doc = ResultDoc::new(String::new(), inst, &opts, &r);
                    let m = evaluate(
                        inst,
                        gt_view,
                        RunView {
                            options: &doc.options,
                            outcome: &doc.outcome,
                        },
                    )?;
                    (r.stopped_early, m)
                };
                rows.push(SweepRow {
                    epsilon,
                    variant: v,
                    seed,
                    algorithm: base.algorithm,
                    stopped,
                    metrics,
                });
            }
        }
    }
    Ok(rows)
}

pub fn summary_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for row in rows {
        let m = &row.metrics;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            row.epsilon,
            row.variant,
            row.seed,
            row.algorithm,
            m.calls_early,
            m.calls_ground_truth,
            u8::from(row.stopped),
            m.improvement_loss,
            m.savings_percent,
            m.esv_invocations,
            m.true_improvement_ground_truth,
            m.true_improvement_early,
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tuner::WiiMode;

    fn base(algorithm: AlgoKind) -> TuneOptions {
        TuneOptions {
            algorithm,
            wii: WiiMode::Off,
            esc: EscMode::Off,
            scheme: Scheme::Heuristic,
            epsilon: 0.05,
            budget: 200,
            k: 2,
            step: 5,
            sigma: 0.5,
            tau: 0.2,
            theta: 0.05,
            seed: 0,
        }
    }

    #[test]
    fn empty_seed_list_yields_header_only() {
        let inst = Instance::new(crate::workload::tests::two_query_workload()).unwrap();
        let rows = sweep(&inst, &base(AlgoKind::TwoPhaseGreedy), &[0.05], &[]).unwrap();
        assert!(rows.is_empty());
        assert_eq!(summary_csv(&rows), format!("{SUMMARY_HEADER}\n"));
    }

    #[test]
    fn greedy_sweep_emits_one_row_per_combination_deterministically() {
        let inst = Instance::new(crate::workload::tests::two_query_workload()).unwrap();
        let b = base(AlgoKind::TwoPhaseGreedy);
        let rows = sweep(&inst, &b, &[0.5, 0.05], &[3, 1]).unwrap();
        assert_eq!(rows.len(), 2 * 2 * ALL_VARIANTS.len());
        // Sorted seeds outermost, then sorted epsilons, then variant order.
        assert_eq!(rows[0].seed, 1);
        assert_eq!(rows[0].epsilon, 0.05);
        assert_eq!(rows[0].variant, Variant::EscB);
        assert_eq!(rows[1].variant, Variant::EscI);
        let again = sweep(&inst, &b, &[0.5, 0.05], &[3, 1]).unwrap();
        assert_eq!(summary_csv(&rows), summary_csv(&again));
        for row in &rows {
            assert!((0.0..=100.0).contains(&row.metrics.savings_percent));
            if row.stopped && matches!(row.variant, Variant::EscB | Variant::EscBFixStep) {
                assert!(row.metrics.improvement_loss <= row.epsilon + 1e-9);
            }
        }
    }

    #[test]
    fn greedy_baseline_stops_after_phase_one() {
        let inst = Instance::new(crate::workload::tests::two_query_workload()).unwrap();
        let rows = sweep(&inst, &base(AlgoKind::TwoPhaseGreedy), &[0.05], &[7]).unwrap();
        let baseline = rows
            .iter()
            .find(|r| r.variant == Variant::Baseline)
            .unwrap();
        assert!(baseline.stopped);
        assert!(baseline.metrics.calls_early < baseline.metrics.calls_ground_truth);
        assert_eq!(baseline.metrics.esv_invocations, 0);
    }

    #[test]
    fn mcts_sweep_runs_all_variants() {
        let inst = Instance::new(crate::workload::tests::two_query_workload()).unwrap();
        let rows = sweep(&inst, &base(AlgoKind::Mcts), &[0.5], &[2]).unwrap();
        assert_eq!(rows.len(), ALL_VARIANTS.len());
        let again = sweep(&inst, &base(AlgoKind::Mcts), &[0.5], &[2]).unwrap();
        assert_eq!(summary_csv(&rows), summary_csv(&again));
    }
}
