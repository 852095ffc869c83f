//! Early-stopping verification controller.
//!
//! The tuner reports every what-if call and every Phase-2 step boundary.
//! The controller keeps the improvement curve on a fixed-step grid, decides
//! per its scheme when a verification (one bounds computation plus the
//! threshold test) is worth its cost, and fires the stop decision.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bounds::{esc_bounds, simulated_greedy_upper_bound, BoundContext, BoundMode, WorkloadBounds};
use crate::error::{EscError, Result};
use crate::tuner::AlgoKind;
use crate::workload::Configuration;

/// One point of the index tuning curve: improvement observed after a given
/// number of what-if calls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub calls: u64,
    pub improvement: f64,
}

/// Improvement rates at a curve point: global (since the origin) and latest
/// (since the previous point), both per call and capped by the most recent
/// verification's remaining headroom.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateState {
    pub r: f64,
    pub l: f64,
}

/// When to invoke verification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scheme {
    /// At the beginning of every Phase-2 greedy step (two-phase greedy).
    Heuristic,
    /// On the fixed-step grid, when the curve's concavity looks significant.
    Generic,
    /// At every grid point unconditionally.
    FixedStep,
    /// Baseline: stop outright at the first Phase-2 boundary.
    StopAfterPhase1,
    /// Baseline: stop once observed improvement reaches the threshold.
    StopAtImprovement(f64),
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Heuristic => "heuristic",
            Scheme::Generic => "generic",
            Scheme::FixedStep => "fixed",
            Scheme::StopAfterPhase1 => "stop-after-phase1",
            Scheme::StopAtImprovement(_) => "stop-at-improvement",
        }
    }
}

#[derive(Debug, Clone)]
pub struct EsvConfig {
    pub epsilon: f64,
    pub scheme: Scheme,
    /// Grid step size s, in what-if calls.
    pub step: u64,
    /// Concavity-significance threshold σ.
    pub sigma: f64,
    pub seed: u64,
    /// Curve origin (B_0, I_0).
    pub origin: (u64, f64),
}

impl EsvConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(EscError::Validation(format!(
                "epsilon must be in (0,1), got {}",
                self.epsilon
            )));
        }
        if self.step < 1 {
            return Err(EscError::Validation("step size must be >= 1".into()));
        }
        if !(self.sigma > 0.0 && self.sigma < 1.0) {
            return Err(EscError::Validation(format!(
                "sigma must be in (0,1), got {}",
                self.sigma
            )));
        }
        Ok(())
    }
}

/// What a curve row recorded at a decision point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    /// Bookkeeping only; the scheme does not decide at this point.
    Observe,
    Skip,
    Invoke,
    Stop,
}

impl std::fmt::Display for Decision {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Decision::Observe => "observe",
            Decision::Skip => "skip",
            Decision::Invoke => "invoke",
            Decision::Stop => "stop",
        })
    }
}

/// One row of the curve CSV.
#[derive(Debug, Clone)]
pub struct DecisionRecord {
    pub calls: u64,
    pub improvement: f64,
    pub r: Option<f64>,
    pub l: Option<f64>,
    pub decision: Decision,
    pub sigma: Option<f64>,
    pub lambda: Option<f64>,
    pub eta_l: Option<f64>,
    pub eta_u: Option<f64>,
    pub stopped: bool,
}

/// The stop decision and what the tuner must return because of it.
#[derive(Debug, Clone)]
pub struct StopInfo {
    pub completion: Configuration,
    /// Bounds that justified the stop; None for the baseline schemes.
    pub bounds: Option<WorkloadBounds>,
    pub calls_at_stop: u64,
}

/// Everything one verification produced, kept for offline soundness checks.
#[derive(Debug, Clone)]
pub struct EsvCheckpoint {
    pub calls: u64,
    pub bounds: WorkloadBounds,
    pub completion: Configuration,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flow {
    Continue,
    Stop,
}

/// p_j(b) = I_j + rate · (b − B_j).
pub fn projected_improvement(i_j: f64, rate: f64, b_j: u64, b: u64) -> f64 {
    i_j + rate * (b - b_j) as f64
}

/// The stop test. The two bounds are one-sided guarantees about different
/// configurations (η_U caps what this run's search can still reach, η_L
/// certifies the completion available right now), so the gap may go negative
/// when the completion provably beats the search's remaining potential.
/// Stopping is safe in that regime too: the loss bound holds a fortiori.
pub fn check_early_stop(bounds: &WorkloadBounds, epsilon: f64) -> bool {
    bounds.eta_u - bounds.eta_l <= epsilon
}

/// Caps both rates by the headroom left under the latest verified upper
/// bound: no more than (η_U − I_j) improvement remains, so projecting
/// faster than that per step is provably too steep.
pub fn refine_rates(r_raw: f64, l_raw: f64, i_j: f64, eta_u: f64, step: u64) -> RateState {
    let cap = ((eta_u - i_j) / step as f64).max(0.0);
    RateState {
        r: r_raw.min(cap),
        l: l_raw.min(cap),
    }
}

/// Scheme decision at a grid point, before the probabilistic gate.
/// Returns the significance σ_{j+1} when it was computed.
fn generic_case(
    i_next: f64,
    prev: CurvePoint,
    rates_prev: RateState,
    step: u64,
    sigma_threshold: f64,
) -> (bool, Option<f64>) {
    if rates_prev.l >= rates_prev.r {
        return (false, None);
    }
    let p_l = projected_improvement(prev.improvement, rates_prev.l, prev.calls, prev.calls + step);
    let p_r = projected_improvement(prev.improvement, rates_prev.r, prev.calls, prev.calls + step);
    if i_next > p_r {
        return (false, None);
    }
    if i_next < p_l {
        return (true, None);
    }
    let delta_span = p_r - p_l;
    let delta = p_r - i_next;
    let sigma = if delta_span == 0.0 { 1.0 } else { delta / delta_span };
    (sigma >= sigma_threshold, Some(sigma))
}

pub struct EsvController {
    cfg: EsvConfig,
    mode: BoundMode,
    algo: AlgoKind,
    k: usize,
    tau: f64,
    /// True when early stopping is disabled: curve bookkeeping continues
    /// but no verification runs and no stop fires.
    observe_only: bool,
    rng: ChaCha8Rng,
    curve: Vec<CurvePoint>,
    records: Vec<DecisionRecord>,
    rates_prev: Option<RateState>,
    next_grid: u64,
    lambda: f64,
    latest_eta_u: Option<f64>,
    saw_boundary: bool,
    esv_invocations: u64,
    esv_wall: Duration,
    checkpoints: Vec<EsvCheckpoint>,
    stop: Option<StopInfo>,
}

impl EsvController {
    pub fn new(
        cfg: EsvConfig,
        mode: BoundMode,
        algo: AlgoKind,
        k: usize,
        tau: f64,
        observe_only: bool,
    ) -> Result<Self> {
        cfg.validate()?;
        let rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let next_grid = cfg.origin.0 + cfg.step;
        let curve = vec![CurvePoint {
            calls: cfg.origin.0,
            improvement: cfg.origin.1,
        }];
        Ok(EsvController {
            cfg,
            mode,
            algo,
            k,
            tau,
            observe_only,
            rng,
            curve,
            records: Vec::new(),
            rates_prev: None,
            next_grid,
            lambda: 1.0,
            latest_eta_u: None,
            saw_boundary: false,
            esv_invocations: 0,
            esv_wall: Duration::ZERO,
            checkpoints: Vec::new(),
            stop: None,
        })
    }

    pub fn curve(&self) -> &[CurvePoint] {
        &self.curve
    }

    pub fn records(&self) -> &[DecisionRecord] {
        &self.records
    }

    pub fn esv_invocations(&self) -> u64 {
        self.esv_invocations
    }

    pub fn esv_wall(&self) -> Duration {
        self.esv_wall
    }

    pub fn stop_info(&self) -> Option<&StopInfo> {
        self.stop.as_ref()
    }

    pub fn checkpoints(&self) -> &[EsvCheckpoint] {
        &self.checkpoints
    }

    fn run_esv(
        &mut self,
        calls: u64,
        ctx: &BoundContext,
        anchor: &Configuration,
    ) -> Result<(WorkloadBounds, Configuration, bool)> {
        let t0 = Instant::now();
        let (bounds, completion) = esc_bounds(ctx, self.mode, self.algo, anchor, self.k, self.tau);
        let mut stop = check_early_stop(&bounds, self.cfg.epsilon);
        if stop && self.mode == BoundMode::EscI && bounds.eta_u < bounds.eta_l - 1e-9 {
            // Interaction refinement is heuristic. A refined upper bound below
            // the certified lower bound is impossible for sound bounds, so it
            // proves the refinement under-ran at this state; the stop test
            // cannot be trusted and tuning must continue.
            stop = false;
        }
        let gap = bounds.eta_u - bounds.eta_l;
        let rho = gap / self.cfg.epsilon;
        self.lambda = if rho <= 1.0 { 1.0 } else { 1.0 / rho };
        self.latest_eta_u = Some(bounds.eta_u);
        self.esv_invocations += 1;
        self.esv_wall += t0.elapsed();
        self.checkpoints.push(EsvCheckpoint {
            calls,
            bounds: bounds.clone(),
            completion: completion.clone(),
        });
        Ok((bounds, completion, stop))
    }

    /// Report a successful what-if call. `improvement` is the observed best
    /// improvement after the call; must be non-decreasing over a run.
    pub fn on_call(
        &mut self,
        calls: u64,
        improvement: f64,
        ctx: &BoundContext,
        anchor: &Configuration,
    ) -> Result<Flow> {
        if self.stop.is_some() {
            return Ok(Flow::Stop);
        }
        if calls < self.next_grid {
            return Ok(Flow::Continue);
        }
        let prev = *self.curve.last().unwrap();
        let point = CurvePoint {
            calls: self.next_grid,
            improvement,
        };
        self.curve.push(point);
        self.next_grid += self.cfg.step;
        let span = (point.calls - self.cfg.origin.0) as f64;
        let r_raw = (point.improvement - self.cfg.origin.1) / span;
        let l_raw = (point.improvement - prev.improvement) / (point.calls - prev.calls) as f64;
        let rates = match self.latest_eta_u {
            Some(eta_u) => refine_rates(r_raw, l_raw, point.improvement, eta_u, self.cfg.step),
            None => RateState { r: r_raw, l: l_raw },
        };
        let mut record = DecisionRecord {
            calls: point.calls,
            improvement: point.improvement,
            r: Some(rates.r),
            l: Some(rates.l),
            decision: Decision::Observe,
            sigma: None,
            lambda: None,
            eta_l: None,
            eta_u: None,
            stopped: false,
        };
        let mut flow = Flow::Continue;
        if !self.observe_only {
            match self.cfg.scheme {
                Scheme::FixedStep => {
                    let (bounds, completion, stop) = self.run_esv(point.calls, ctx, anchor)?;
                    record.eta_l = Some(bounds.eta_l);
                    record.eta_u = Some(bounds.eta_u);
                    if stop {
                        record.decision = Decision::Stop;
                        record.stopped = true;
                        self.stop = Some(StopInfo {
                            completion,
                            bounds: Some(bounds),
                            calls_at_stop: calls,
                        });
                        flow = Flow::Stop;
                    } else {
                        record.decision = Decision::Invoke;
                    }
                }
                Scheme::Generic => {
                    match self.rates_prev {
                        None => record.decision = Decision::Skip,
                        Some(rates_prev) => {
                            let (wants, sigma) = generic_case(
                                point.improvement,
                                prev,
                                rates_prev,
                                self.cfg.step,
                                self.cfg.sigma,
                            );
                            record.sigma = sigma;
                            if !wants {
                                record.decision = Decision::Skip;
                            } else {
                                record.lambda = Some(self.lambda);
                                let pass = self.rng.random::<f64>() < self.lambda;
                                if !pass {
                                    record.decision = Decision::Skip;
                                } else {
                                    let (bounds, completion, stop) = self.run_esv(point.calls, ctx, anchor)?;
                                    record.eta_l = Some(bounds.eta_l);
                                    record.eta_u = Some(bounds.eta_u);
                                    if stop {
                                        record.decision = Decision::Stop;
                                        record.stopped = true;
                                        self.stop = Some(StopInfo {
                                            completion,
                                            bounds: Some(bounds),
                                            calls_at_stop: calls,
                                        });
                                        flow = Flow::Stop;
                                    } else {
                                        record.decision = Decision::Invoke;
                                    }
                                }
                            }
                        }
                    }
                }
                Scheme::StopAtImprovement(threshold) => {
                    if point.improvement >= threshold {
                        let (completion, _) =
                            simulated_greedy_upper_bound(ctx.inst, ctx.cache, anchor, self.k);
                        record.decision = Decision::Stop;
                        record.stopped = true;
                        self.stop = Some(StopInfo {
                            completion,
                            bounds: None,
                            calls_at_stop: calls,
                        });
                        flow = Flow::Stop;
                    }
                }
                Scheme::Heuristic | Scheme::StopAfterPhase1 => {}
            }
        }
        self.rates_prev = Some(rates);
        self.records.push(record);
        Ok(flow)
    }

    /// Report the beginning of a Phase-2 greedy step.
    pub fn on_phase2_step_boundary(
        &mut self,
        calls: u64,
        improvement: f64,
        ctx: &BoundContext,
        anchor: &Configuration,
    ) -> Result<Flow> {
        if self.stop.is_some() {
            return Ok(Flow::Stop);
        }
        let first = !self.saw_boundary;
        self.saw_boundary = true;
        if self.observe_only {
            return Ok(Flow::Continue);
        }
        match self.cfg.scheme {
            Scheme::Heuristic => {
                let (bounds, completion, stop) = self.run_esv(calls, ctx, anchor)?;
                let mut record = DecisionRecord {
                    calls,
                    improvement,
                    r: None,
                    l: None,
                    decision: Decision::Invoke,
                    sigma: None,
                    lambda: None,
                    eta_l: Some(bounds.eta_l),
                    eta_u: Some(bounds.eta_u),
                    stopped: false,
                };
                let flow = if stop {
                    record.decision = Decision::Stop;
                    record.stopped = true;
                    self.stop = Some(StopInfo {
                        completion,
                        bounds: Some(bounds),
                        calls_at_stop: calls,
                    });
                    Flow::Stop
                } else {
                    Flow::Continue
                };
                self.records.push(record);
                Ok(flow)
            }
            Scheme::StopAfterPhase1 if first => {
                let (completion, _) =
                    simulated_greedy_upper_bound(ctx.inst, ctx.cache, anchor, self.k);
                self.records.push(DecisionRecord {
                    calls,
                    improvement,
                    r: None,
                    l: None,
                    decision: Decision::Stop,
                    sigma: None,
                    lambda: None,
                    eta_l: None,
                    eta_u: None,
                    stopped: true,
                });
                self.stop = Some(StopInfo {
                    completion,
                    bounds: None,
                    calls_at_stop: calls,
                });
                Ok(Flow::Stop)
            }
            _ => Ok(Flow::Continue),
        }
    }
}
