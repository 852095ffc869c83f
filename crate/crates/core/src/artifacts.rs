//! Run directory artifacts: curve.csv, calls.csv, result.json and the
//! workload copy. All writers are hand-rolled and byte-stable: floats use
//! the shortest round-trip form, rows follow deterministic input order.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{EscError, Result};
use crate::esv::DecisionRecord;
use crate::oracle::CallRecord;
use crate::tuner::{TuneOptions, TuningResult};
use crate::workload::{Instance, Workload};

pub const RESULT_FORMAT: &str = "esc-result/1";
pub const CURVE_HEADER: &str = "calls,I,r,l,decision,sigma,lambda,etaL,etaU,stopped";
pub const CALLS_HEADER: &str = "seq,query_id,config_members,cost";

/// Separator between index ids inside the calls.csv config_members field.
const MEMBER_SEP: char = '|';

pub fn sha256_hex(text: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        let _ = write!(out, "{b:02x}");
    }
    out
}

fn push_opt(line: &mut String, v: Option<f64>) {
    line.push(',');
    if let Some(v) = v {
        let _ = write!(line, "{v}");
    }
}

pub fn curve_csv(records: &[DecisionRecord]) -> String {
    let mut out = String::new();
    out.push_str(CURVE_HEADER);
    out.push('\n');
    for r in records {
        let mut line = String::new();
        let _ = write!(line, "{},{}", r.calls, r.improvement);
        push_opt(&mut line, r.r);
        push_opt(&mut line, r.l);
        let _ = write!(line, ",{}", r.decision);
        push_opt(&mut line, r.sigma);
        push_opt(&mut line, r.lambda);
        push_opt(&mut line, r.eta_l);
        push_opt(&mut line, r.eta_u);
        let _ = write!(line, ",{}", u8::from(r.stopped));
        out.push_str(&line);
        out.push('\n');
    }
    out
}

pub fn calls_csv(inst: &Instance, log: &[CallRecord]) -> String {
    let mut out = String::new();
    out.push_str(CALLS_HEADER);
    out.push('\n');
    for c in log {
        let _ = write!(out, "{},{},", c.seq, inst.query_id(c.query));
        let mut first = true;
        for z in c.config.iter() {
            if !first {
                out.push(MEMBER_SEP);
            }
            out.push_str(inst.index_id(z));
            first = false;
        }
        let _ = writeln!(out, ",{}", c.cost);
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct OptionsDoc {
    pub algorithm: String,
    pub wii: String,
    pub esc: String,
    pub esvs: String,
    pub epsilon: f64,
    pub budget: u64,
    pub k: u64,
    pub step: u64,
    pub sigma: f64,
    pub tau: f64,
    pub theta: f64,
    pub seed: u64,
}

impl OptionsDoc {
    pub fn from_options(opts: &TuneOptions) -> OptionsDoc {
        OptionsDoc {
            algorithm: opts.algorithm.to_string(),
            wii: opts.wii.to_string(),
            esc: opts.esc.to_string(),
            esvs: opts.scheme.name().to_string(),
            epsilon: opts.epsilon,
            budget: opts.budget,
            k: opts.k as u64,
            step: opts.step,
            sigma: opts.sigma,
            tau: opts.tau,
            theta: opts.theta,
            seed: opts.seed,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct OutcomeDoc {
    pub termination: String,
    pub stopped_early: bool,
    pub calls_used: u64,
    pub esv_invocations: u64,
    pub esv_wall_seconds: f64,
    pub final_config: Vec<String>,
    pub observed_improvement: f64,
    pub final_derived_cost: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop_eta_l: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop_eta_u: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ResultDoc {
    pub format: String,
    pub workload_sha256: String,
    pub options: OptionsDoc,
    pub outcome: OutcomeDoc,
}

impl ResultDoc {
    pub fn new(
        workload_sha256: String,
        inst: &Instance,
        opts: &TuneOptions,
        result: &TuningResult,
    ) -> ResultDoc {
        ResultDoc {
            format: RESULT_FORMAT.to_string(),
            workload_sha256,
            options: OptionsDoc::from_options(opts),
            outcome: OutcomeDoc {
                termination: result.termination.to_string(),
                stopped_early: result.stopped_early,
                calls_used: result.calls_used,
                esv_invocations: result.esv_invocations,
                esv_wall_seconds: result.esv_wall.as_secs_f64(),
                final_config: inst.config_ids(&result.final_config),
                observed_improvement: result.observed_improvement,
                final_derived_cost: result.final_derived_cost,
                stop_eta_l: result.stop_bounds.as_ref().map(|b| b.eta_l),
                stop_eta_u: result.stop_bounds.as_ref().map(|b| b.eta_u),
            },
        }
    }
}

/// Writes workload.json, curve.csv, calls.csv and result.json into `dir`,
/// creating it if needed.
pub fn save_run(
    dir: &Path,
    workload: &Workload,
    inst: &Instance,
    opts: &TuneOptions,
    result: &TuningResult,
) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut workload_text = workload.to_json()?;
    workload_text.push('\n');
    let digest = sha256_hex(&workload_text);
    std::fs::write(dir.join("workload.json"), &workload_text)?;
    std::fs::write(dir.join("curve.csv"), curve_csv(&result.curve_records))?;
    std::fs::write(dir.join("calls.csv"), calls_csv(inst, &result.call_log))?;
    let doc = ResultDoc::new(digest, inst, opts, result);
    let mut text = serde_json::to_string_pretty(&doc)?;
    text.push('\n');
    std::fs::write(dir.join("result.json"), text)?;
    Ok(())
}

/// Loads the workload and result document of a completed run directory.
pub fn load_run(dir: &Path) -> Result<(Workload, ResultDoc)> {
    let workload_path = dir.join("workload.json");
    if !workload_path.exists() {
        return Err(EscError::Validation(format!(
            "'{}' is not a run directory (missing workload.json)",
            dir.display()
        )));
    }
    let workload = Workload::load(&workload_path)?;
    let text = std::fs::read_to_string(dir.join("result.json"))?;
    let doc: ResultDoc = serde_json::from_str(&text)?;
    if doc.format != RESULT_FORMAT {
        return Err(EscError::Validation(format!(
            "unsupported result format '{}', expected '{}'",
            doc.format, RESULT_FORMAT
        )));
    }
    Ok((workload, doc))
}
