//! Budget-aware index tuners: shared run state, the call/skip/derive
//! evaluation path, checkpointing into the verification controller, and the
//! two search algorithms.

pub mod greedy;
pub mod mcts;

use std::time::Duration;

use crate::bounds::{BoundContext, BoundMode, WorkloadBounds};
use crate::error::{EscError, Result};
use crate::esv::{
    CurvePoint, DecisionRecord, EsvCheckpoint, EsvConfig, EsvController, Flow, Scheme, StopInfo,
};
use crate::features::FeatureSet;
use crate::mci::MciTable;
use crate::oracle::{BudgetedOracle, CallRecord, CostCache, CoverageOracle};
use crate::workload::{Configuration, Instance};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlgoKind {
    TwoPhaseGreedy,
    Mcts,
}

impl std::fmt::Display for AlgoKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            AlgoKind::TwoPhaseGreedy => "two-phase-greedy",
            AlgoKind::Mcts => "mcts",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WiiMode {
    Off,
    /// Skip calls whose bound gap is within θ of the query's base cost.
    Bound,
    /// Like Bound, with feature-estimated single-index improvements
    /// tightening the bound table first.
    Coverage,
}

impl std::fmt::Display for WiiMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            WiiMode::Off => "off",
            WiiMode::Bound => "bound",
            WiiMode::Coverage => "coverage",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EscMode {
    Off,
    B,
    I,
}

impl EscMode {
    pub fn bound_mode(self) -> BoundMode {
        match self {
            EscMode::I => BoundMode::EscI,
            _ => BoundMode::EscB,
        }
    }
}

impl std::fmt::Display for EscMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EscMode::Off => "off",
            EscMode::B => "b",
            EscMode::I => "i",
        })
    }
}

#[derive(Debug, Clone)]
pub struct TuneOptions {
    pub algorithm: AlgoKind,
    pub wii: WiiMode,
    pub esc: EscMode,
    pub scheme: Scheme,
    pub epsilon: f64,
    pub budget: u64,
    pub k: usize,
    pub step: u64,
    pub sigma: f64,
    pub tau: f64,
    pub theta: f64,
    pub seed: u64,
}

impl TuneOptions {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.tau) {
            return Err(EscError::Validation(format!(
                "tau must be in [0,1], got {}",
                self.tau
            )));
        }
        if !(self.theta >= 0.0) {
            return Err(EscError::Validation(format!(
                "theta must be nonnegative, got {}",
                self.theta
            )));
        }
        Ok(())
    }

    fn esv_config(&self) -> EsvConfig {
        EsvConfig {
            epsilon: self.epsilon,
            scheme: self.scheme,
            step: self.step,
            sigma: self.sigma,
            seed: self.seed,
            origin: (0, 0.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Natural,
    EarlyStopped,
    BudgetExhausted,
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Termination::Natural => "natural",
            Termination::EarlyStopped => "early-stop",
            Termination::BudgetExhausted => "budget-exhausted",
        })
    }
}

#[derive(Debug, Clone)]
pub struct TuningResult {
    pub final_config: Configuration,
    pub calls_used: u64,
    pub call_log: Vec<CallRecord>,
    pub curve_records: Vec<DecisionRecord>,
    pub curve_points: Vec<CurvePoint>,
    pub esv_checkpoints: Vec<EsvCheckpoint>,
    pub esv_invocations: u64,
    pub esv_wall: Duration,
    pub termination: Termination,
    pub stopped_early: bool,
    /// 1 − d(W, final) / c(W,∅) over the run's own knowledge.
    pub observed_improvement: f64,
    pub final_derived_cost: f64,
    pub stop_bounds: Option<WorkloadBounds>,
}

impl TuningResult {
    fn trivial() -> TuningResult {
        TuningResult {
            final_config: Configuration::empty(),
            calls_used: 0,
            call_log: Vec::new(),
            curve_records: Vec::new(),
            curve_points: Vec::new(),
            esv_checkpoints: Vec::new(),
            esv_invocations: 0,
            esv_wall: Duration::ZERO,
            termination: Termination::Natural,
            stopped_early: false,
            observed_improvement: 0.0,
            final_derived_cost: 0.0,
            stop_bounds: None,
        }
    }
}

/// Everything one tuning run owns. The evaluation path is shared by both
/// algorithms: exact cache hit, else interception, else a budgeted what-if
/// call, else (budget gone) the derived cost.
pub struct RunState<'a> {
    pub inst: &'a Instance,
    pub opts: &'a TuneOptions,
    pub oracle: BudgetedOracle,
    pub cache: CostCache,
    pub table: MciTable,
    pub features: FeatureSet,
    pub controller: EsvController,
    /// Best configuration seen so far by derived workload cost.
    pub best_config: Configuration,
    pub best_derived: f64,
    /// Monotone scalar fed to the curve.
    pub best_improvement: f64,
    /// Set once Phase 2 has selected its first index; overrides the
    /// observed best as the completion anchor.
    pub prefix_anchor: Option<Configuration>,
    /// Set once the search has committed to a candidate pool; trajectory
    /// bounds then simulate over it alone.
    pub esv_pool: Option<Vec<u32>>,
    pub budget_exhausted: bool,
    pub stopped: bool,
    empty_cost: f64,
}

impl<'a> RunState<'a> {
    /// Performs the 2|W| initialization calls, builds the bound table, and
    /// replays the call checkpoints into the controller.
    pub fn new(inst: &'a Instance, opts: &'a TuneOptions) -> Result<RunState<'a>> {
        opts.validate()?;
        let init_calls = 2 * inst.query_count() as u64;
        if opts.budget < init_calls {
            return Err(EscError::Validation(format!(
                "budget {} cannot cover the {} initialization calls",
                opts.budget, init_calls
            )));
        }
        let mut oracle = BudgetedOracle::new(CoverageOracle::new(inst), opts.budget);
        let mut cache = CostCache::new(inst.query_count());
        for q in 0..inst.query_count() as u32 {
            for config in [Configuration::empty(), inst.omega(q)] {
                let cost = oracle.whatif_cost(q, &config)?;
                cache.insert(q, config, cost, true);
            }
        }
        let mut table = MciTable::new(inst, &cache);
        let features = FeatureSet::new(inst);
        if opts.wii == WiiMode::Coverage {
            table.apply_coverage_estimates(inst, &cache, &features);
        }
        let controller = EsvController::new(
            opts.esv_config(),
            opts.esc.bound_mode(),
            opts.algorithm,
            opts.k,
            opts.tau,
            opts.esc == EscMode::Off,
        )?;
        let empty_cost = inst.empty_workload_cost();
        let mut state = RunState {
            inst,
            opts,
            oracle,
            cache,
            table,
            features,
            controller,
            best_config: Configuration::empty(),
            best_derived: empty_cost,
            best_improvement: 0.0,
            prefix_anchor: None,
            esv_pool: None,
            budget_exhausted: false,
            stopped: false,
            empty_cost,
        };
        for seq in 1..=init_calls {
            state.checkpoint(seq)?;
            if state.stopped {
                break;
            }
        }
        Ok(state)
    }

    pub fn empty_workload_cost(&self) -> f64 {
        self.empty_cost
    }

    fn checkpoint(&mut self, calls: u64) -> Result<()> {
        let ctx = BoundContext {
            inst: self.inst,
            table: &self.table,
            cache: &self.cache,
            features: &self.features,
            pool: self.esv_pool.as_deref(),
        };
        let anchor = self
            .prefix_anchor
            .as_ref()
            .unwrap_or(&self.best_config)
            .clone();
        if self
            .controller
            .on_call(calls, self.best_improvement, &ctx, &anchor)?
            == Flow::Stop
        {
            self.stopped = true;
        }
        Ok(())
    }

    /// Signals the beginning of a Phase-2 greedy step.
    pub fn phase2_step_boundary(&mut self) -> Result<()> {
        if self.stopped || self.budget_exhausted {
            return Ok(());
        }
        let calls = self.oracle.calls_used();
        let ctx = BoundContext {
            inst: self.inst,
            table: &self.table,
            cache: &self.cache,
            features: &self.features,
            pool: self.esv_pool.as_deref(),
        };
        let anchor = self
            .prefix_anchor
            .as_ref()
            .unwrap_or(&self.best_config)
            .clone();
        if self
            .controller
            .on_phase2_step_boundary(calls, self.best_improvement, &ctx, &anchor)?
            == Flow::Stop
        {
            self.stopped = true;
        }
        Ok(())
    }

    /// Working cost of (q, config): cached value, interception substitute,
    /// what-if call, or derived cost once the budget is gone.
    pub fn evaluate_query(&mut self, q: u32, config: &Configuration) -> Result<f64> {
        if let Some(e) = self.cache.exact(q, config) {
            return Ok(e.cost);
        }
        if self.budget_exhausted {
            return Ok(self.cache.derived_cost(q, config));
        }
        if self.opts.wii != WiiMode::Off
            && !config.is_empty()
            && self
                .table
                .wii_should_skip(q, config, &self.cache, self.opts.theta)
        {
            let d = self.cache.derived_cost(q, config);
            self.cache.insert(q, config.clone(), d, false);
            return Ok(d);
        }
        match self.oracle.whatif_cost(q, config) {
            Ok(cost) => {
                self.cache.insert(q, config.clone(), cost, true);
                if config.len() == 1 {
                    let z = config.members()[0];
                    let improvement = self.table.base_cost(q) - cost;
                    self.table.refine_single_index(q, z, improvement);
                }
                let calls = self.oracle.calls_used();
                self.checkpoint(calls)?;
                Ok(cost)
            }
            Err(EscError::BudgetExhausted) => {
                self.budget_exhausted = true;
                Ok(self.cache.derived_cost(q, config))
            }
            Err(e) => Err(e),
        }
    }

    /// Tracks the best configuration by derived workload cost.
    pub fn consider_best(&mut self, config: &Configuration, derived_total: f64) {
        if derived_total < self.best_derived {
            self.best_derived = derived_total;
            self.best_config = config.clone();
            let improvement = 1.0 - derived_total / self.empty_cost;
            if improvement > self.best_improvement {
                self.best_improvement = improvement;
            }
        }
    }

    pub fn derived_workload_cost(&self, config: &Configuration) -> f64 {
        self.cache.derived_workload_cost(config)
    }

    pub fn stop_info(&self) -> Option<&StopInfo> {
        self.controller.stop_info()
    }

    /// Assembles the result. When the run stopped early the final
    /// configuration is the stop completion; callers pass their live result
    /// otherwise.
    pub fn finish(self, live_config: Configuration) -> TuningResult {
        let (final_config, termination, stop_bounds) = match self.controller.stop_info() {
            Some(info) => (
                info.completion.clone(),
                Termination::EarlyStopped,
                info.bounds.clone(),
            ),
            None => (
                live_config,
                if self.budget_exhausted {
                    Termination::BudgetExhausted
                } else {
                    Termination::Natural
                },
                None,
            ),
        };
        let final_derived_cost = self.cache.derived_workload_cost(&final_config);
        let observed_improvement = 1.0 - final_derived_cost / self.empty_cost;
        TuningResult {
            final_config,
            calls_used: self.oracle.calls_used(),
            curve_records: self.controller.records().to_vec(),
            curve_points: self.controller.curve().to_vec(),
            esv_checkpoints: self.controller.checkpoints().to_vec(),
            esv_invocations: self.controller.esv_invocations(),
            esv_wall: self.controller.esv_wall(),
            termination,
            stopped_early: matches!(termination, Termination::EarlyStopped),
            observed_improvement,
            final_derived_cost,
            stop_bounds,
            call_log: self.oracle.into_log(),
        }
    }
}

/// Runs the configured algorithm on the instance.
pub fn tune(inst: &Instance, opts: &TuneOptions) -> Result<TuningResult> {
    match opts.algorithm {
        AlgoKind::TwoPhaseGreedy => greedy::run(inst, opts),
        AlgoKind::Mcts => mcts::run(inst, opts),
    }
}
