//! LAA parameter tuning under three fairness criteria.
//!
//! * 3GPP: pick the TXOP so that a Wi-Fi station sees the same throughput as
//!   it would in a Wi-Fi-only network of `baseline_n` stations.
//! * Access: pick the LAA maximum retransmission stage so that a Wi-Fi
//!   station's per-slot access probability matches the Wi-Fi-only network.
//! * Proportional: pick the TXOP maximising `ln(Tput_w) + ln(Tput_l)`.
//!
//! TXOP searches run over the closed interval `[0, MAX_TXOP_US]`: a coarse
//! grid, then a fine grid around the best coarse point. Ties go to the
//! smaller decision value. A TXOP of exactly zero means the LAA network
//! carries no data; the report at such an optimum is evaluated with the LAA
//! stations off the channel.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fixedpoint::{solve_coexistence, solve_wifi_only, ContentionSolution, WifiOnlySolution};
use crate::model::{Scenario, MAX_TXOP_US};
use crate::throughput::{coexistence_throughput, ThroughputReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FairnessMode {
    #[serde(rename = "3gpp")]
    ThreeGpp,
    #[serde(rename = "access")]
    Access,
    #[serde(rename = "proportional")]
    Proportional,
}

impl FairnessMode {
    pub fn as_str(self) -> &'static str {
        match self {
            FairnessMode::ThreeGpp => "3gpp",
            FairnessMode::Access => "access",
            FairnessMode::Proportional => "proportional",
        }
    }
}

impl fmt::Display for FairnessMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FairnessMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "3gpp" => Ok(FairnessMode::ThreeGpp),
            "access" => Ok(FairnessMode::Access),
            "proportional" => Ok(FairnessMode::Proportional),
            other => Err(format!(
                "unknown fairness mode `{other}` (expected 3gpp, access or proportional)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairnessResult {
    pub mode: FairnessMode,
    pub optimized_txop_us: Option<f64>,
    pub optimized_m_laa: Option<u32>,
    pub objective_at_opt: f64,
    /// The optimum sits on the edge of the search domain (TXOP cap or the
    /// m' search cap).
    pub boundary_hit: bool,
    /// The objective does not depend on the decision variable.
    pub degenerate: bool,
    /// The report was evaluated with the LAA network off the channel.
    pub laa_silent: bool,
    pub report: ThroughputReport,
    /// Every probed `(decision value, objective)` pair, sorted by value.
    pub grid_trace: Vec<(f64, f64)>,
}

#[derive(Clone, Copy, PartialEq)]
enum Goal {
    Minimize,
    Maximize,
}

impl Goal {
    fn better(self, a: f64, b: f64) -> bool {
        match self {
            Goal::Minimize => a < b,
            Goal::Maximize => a > b,
        }
    }
}

/// Best point of `trace`; non-finite objectives are skipped and ties go to
/// the smaller decision value.
fn best_of(trace: &[(f64, f64)], goal: Goal) -> Option<(f64, f64)> {
    let mut best: Option<(f64, f64)> = None;
    for &(x, f) in trace {
        if !f.is_finite() {
            continue;
        }
        best = match best {
            None => Some((x, f)),
            Some((bx, bf)) => {
                if goal.better(f, bf) || (f == bf && x < bx) {
                    Some((x, f))
                } else {
                    Some((bx, bf))
                }
            }
        };
    }
    best
}

fn evaluate_points<F>(points: &[f64], objective: &F) -> Vec<(f64, f64)>
where
    F: Fn(f64) -> f64 + Sync,
{
    points.par_iter().map(|&x| (x, objective(x))).collect()
}

fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    let mut pts: Vec<f64> = (0..=n).map(|i| lo + i as f64 * step).collect();
    if hi - pts[n] > 1e-9 {
        pts.push(hi);
    }
    pts
}

/// Coarse-then-fine 1-D search of `objective` over `[0, MAX_TXOP_US]`.
fn search_txop<F>(scenario: &Scenario, goal: Goal, objective: F) -> Option<(f64, f64, Vec<(f64, f64)>)>
where
    F: Fn(f64) -> f64 + Sync,
{
    let ctl = &scenario.solver;
    let mut trace = if ctl.snap_txop_grid {
        evaluate_points(&grid(0.0, MAX_TXOP_US, scenario.laa.d_lte_us.max(1.0)), &objective)
    } else {
        let mut trace = evaluate_points(&grid(0.0, MAX_TXOP_US, ctl.grid_coarse_us), &objective);
        if let Some((x, _)) = best_of(&trace, goal) {
            let lo = (x - ctl.grid_coarse_us).max(0.0);
            let hi = (x + ctl.grid_coarse_us).min(MAX_TXOP_US);
            let fine: Vec<f64> = grid(lo, hi, ctl.grid_fine_us)
                .into_iter()
                .filter(|p| !trace.iter().any(|&(q, _)| q == *p))
                .collect();
            trace.extend(evaluate_points(&fine, &objective));
        }
        trace
    };
    trace.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (x, f) = best_of(&trace, goal)?;
    Some((x, f, trace))
}

struct Solved {
    sol: ContentionSolution,
    baseline: WifiOnlySolution,
}

impl Solved {
    fn new(scenario: &Scenario) -> Result<Self> {
        Ok(Self {
            sol: solve_coexistence(scenario)?,
            baseline: solve_wifi_only(
                scenario.baseline_n,
                scenario.wifi.w0,
                scenario.wifi.m,
                &scenario.solver,
            )?,
        })
    }

    fn report(&self, scenario: &Scenario, txop_us: f64) -> ThroughputReport {
        coexistence_throughput(&scenario.with_txop(txop_us), &self.sol, &self.baseline)
    }
}

fn residual_from(report: &ThroughputReport) -> f64 {
    (report.per_user_wifi_only - report.per_user_w).abs()
}

/// Throughput report with the LAA stations removed from the channel.
fn silent_laa_report(scenario: &Scenario) -> Result<ThroughputReport> {
    let mut alone = scenario.with_txop(0.0);
    let n_l = alone.n_l;
    alone.n_l = 0;
    let solved = Solved::new(&alone)?;
    let mut report = coexistence_throughput(&alone, &solved.sol, &solved.baseline);
    if n_l > 0 {
        report.per_user_l = 0.0;
    }
    Ok(report)
}

/// `|Tput_wo / N - Tput_w / n_w|` at the given TXOP, with LAA contending.
pub fn per_user_residual(scenario: &Scenario, txop_us: f64) -> Result<f64> {
    if !(0.0..=MAX_TXOP_US).contains(&txop_us) {
        return Err(Error::Domain(format!("txop {txop_us} us outside [0, {MAX_TXOP_US}]")));
    }
    let solved = Solved::new(scenario)?;
    Ok(residual_from(&solved.report(scenario, txop_us)))
}

/// TXOP that equalises per-station Wi-Fi throughput with the Wi-Fi-only
/// network.
pub fn fairness_3gpp(scenario: &Scenario) -> Result<FairnessResult> {
    let solved = Solved::new(scenario)?;
    let objective = |txop: f64| residual_from(&solved.report(scenario, txop));
    let (txop, obj, trace) = search_txop(scenario, Goal::Minimize, objective)
        .ok_or_else(|| Error::ObjectiveUndefined("residual not finite on the TXOP grid".into()))?;
    let degenerate = scenario.n_l == 0;
    let laa_silent = txop == 0.0 && !degenerate;
    let report = if laa_silent {
        silent_laa_report(scenario)?
    } else {
        solved.report(scenario, txop)
    };
    Ok(FairnessResult {
        mode: FairnessMode::ThreeGpp,
        optimized_txop_us: Some(txop),
        optimized_m_laa: None,
        objective_at_opt: obj,
        boundary_hit: txop == 0.0 || txop == MAX_TXOP_US,
        degenerate,
        laa_silent,
        report,
        grid_trace: trace,
    })
}

/// LAA maximum retransmission stage that equalises the Wi-Fi per-slot
/// access probability with the Wi-Fi-only network.
pub fn fairness_access(scenario: &Scenario) -> Result<FairnessResult> {
    scenario.validate()?;
    let cap = scenario.solver.m_laa_search_cap;
    let target = solve_wifi_only(
        scenario.baseline_n,
        scenario.wifi.w0,
        scenario.wifi.m,
        &scenario.solver,
    )?;
    let candidates: Vec<u32> = (0..=cap).collect();
    let evaluated: Vec<(u32, f64)> = candidates
        .par_iter()
        .map(|&m| {
            let sol = solve_coexistence(&scenario.with_m_laa(m))?;
            Ok((m, (target.tau - sol.tau_w).abs()))
        })
        .collect::<Result<_>>()?;
    let trace: Vec<(f64, f64)> = evaluated.iter().map(|&(m, f)| (f64::from(m), f)).collect();
    let (_, min_obj) = best_of(&trace, Goal::Minimize)
        .ok_or_else(|| Error::ObjectiveUndefined("access objective not finite".into()))?;
    // Differences below the solver tolerance are noise; among those ties
    // take the largest m', the least aggressive LAA setting.
    let degenerate = scenario.n_l == 0;
    let (best_m, obj) = if degenerate {
        let m = scenario.laa.m.min(cap);
        (m, evaluated[m as usize].1)
    } else {
        evaluated
            .iter()
            .rev()
            .find(|&&(_, f)| f.is_finite() && f - min_obj <= scenario.solver.tol)
            .copied()
            .expect("minimum is attained")
    };
    let tuned = scenario.with_m_laa(best_m);
    let solved = Solved::new(&tuned)?;
    Ok(FairnessResult {
        mode: FairnessMode::Access,
        optimized_txop_us: None,
        optimized_m_laa: Some(best_m),
        objective_at_opt: obj,
        boundary_hit: !degenerate && best_m == cap,
        degenerate,
        laa_silent: false,
        report: solved.report(&tuned, tuned.laa.txop_us),
        grid_trace: trace,
    })
}

/// TXOP maximising the sum of log-throughputs of the two networks.
pub fn fairness_proportional(scenario: &Scenario) -> Result<FairnessResult> {
    let solved = Solved::new(scenario)?;
    let objective = |txop: f64| {
        let r = solved.report(scenario, txop);
        if r.tput_w > 0.0 && r.tput_l > 0.0 {
            r.tput_w.ln() + r.tput_l.ln()
        } else {
            f64::NEG_INFINITY
        }
    };
    let (txop, obj, trace) = search_txop(scenario, Goal::Maximize, objective).ok_or_else(|| {
        Error::ObjectiveUndefined("one network has zero throughput at every TXOP".into())
    })?;
    Ok(FairnessResult {
        mode: FairnessMode::Proportional,
        optimized_txop_us: Some(txop),
        optimized_m_laa: None,
        objective_at_opt: obj,
        boundary_hit: txop == MAX_TXOP_US,
        degenerate: false,
        laa_silent: false,
        report: solved.report(scenario, txop),
        grid_trace: trace,
    })
}

pub fn fairness(scenario: &Scenario, mode: FairnessMode) -> Result<FairnessResult> {
    match mode {
        FairnessMode::ThreeGpp => fairness_3gpp(scenario),
        FairnessMode::Access => fairness_access(scenario),
        FairnessMode::Proportional => fairness_proportional(scenario),
    }
}
