//! Coupled access/collision probabilities for the two-region contention
//! model, and the single-class Wi-Fi-only baseline.
//!
//! After every busy period Wi-Fi stations resume countdown after DIFS while
//! LAA stations wait `delta_a` further slots. Slots `0..delta_a` therefore
//! carry Wi-Fi contention only; later slots carry both technologies. The
//! fraction of contention slots falling in each region follows from a
//! truncated geometric chain over "slots since the last busy period".

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{max_backoff_slots, Scenario, SolverControls};

/// Converged state of the coexistence fixed point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContentionSolution {
    pub tau_w: f64,
    pub tau_l: f64,
    /// Region-weighted Wi-Fi collision probability.
    pub p_cw: f64,
    pub p_cl: f64,
    pub p_cw1: f64,
    pub p_cw2: f64,
    pub p_i1: f64,
    pub p_i2: f64,
    pub c0: f64,
    pub p_a1: f64,
    pub p_a2: f64,
    pub delta_a: u32,
    pub big_m: u64,
    pub iterations: usize,
    /// `max |F(x) - x|` at the returned point.
    pub residual: f64,
}

/// Converged state of the Wi-Fi-only network.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WifiOnlySolution {
    pub n: u32,
    pub tau: f64,
    pub p: f64,
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionProbs {
    pub p_cw1: f64,
    pub p_cw2: f64,
    pub p_cl: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionWeights {
    pub c0: f64,
    pub p_a1: f64,
    pub p_a2: f64,
}

/// `sum_{k=0}^{n-1} r^k`.
pub(crate) fn geometric_sum(r: f64, n: u64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    if (1.0 - r).abs() < 1e-3 || n <= 32 {
        // Closed form loses digits near r = 1.
        let mut acc = 0.0;
        let mut term = 1.0;
        for _ in 0..n {
            acc += term;
            term *= r;
        }
        acc
    } else {
        (1.0 - r.powf(n as f64)) / (1.0 - r)
    }
}

/// Attempt probability of a backoff process with windows
/// `2^min(j, max_stage) * w0` for stages `j = 0..=max_stage + extra`.
///
/// Written as the ratio of two polynomial sums so that `p = 1/2` is not a
/// special case.
fn backoff_access_probability(p: f64, w0: u32, max_stage: u32, extra: u32) -> Result<f64> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::Domain(format!("collision probability {p} outside [0, 1)")));
    }
    let mut num = 0.0;
    let mut two_p_k = 1.0;
    for _ in 0..=max_stage {
        num += two_p_k;
        two_p_k *= 2.0 * p;
    }
    let top = 2f64.powi(max_stage as i32);
    let mut p_k = p.powi(max_stage as i32 + 1);
    for _ in 0..extra {
        num += top * p_k;
        p_k *= p;
    }
    let den = geometric_sum(p, u64::from(max_stage) + u64::from(extra) + 1);
    Ok(2.0 / (f64::from(w0) * num / den + 1.0))
}

// Far-from-fixed-point iterates can round a collision probability up to 1.
const P_ITER_MAX: f64 = 1.0 - f64::EPSILON;

/// Wi-Fi per-slot access probability given its collision probability.
/// The retry limit at the top stage is one extra attempt.
pub fn tau_wifi(p_cw: f64, w0: u32, m: u32) -> Result<f64> {
    backoff_access_probability(p_cw, w0, m, 1)
}

/// LAA per-slot access probability; `e_l` extra attempts at the top stage.
pub fn tau_laa(p_cl: f64, w0: u32, m: u32, e_l: u32) -> Result<f64> {
    if !(1..=8).contains(&e_l) {
        return Err(Error::Domain(format!("retry limit e_l = {e_l} outside 1..=8")));
    }
    backoff_access_probability(p_cl, w0, m, e_l)
}

pub fn collision_probs(tau_w: f64, tau_l: f64, n_w: u32, n_l: u32) -> CollisionProbs {
    let other_wifi_idle = (1.0 - tau_w).powi(n_w as i32 - 1);
    let p_cl = if n_l == 0 {
        0.0
    } else {
        1.0 - (1.0 - tau_l).powi(n_l as i32 - 1) * (1.0 - tau_w).powi(n_w as i32)
    };
    CollisionProbs {
        p_cw1: 1.0 - other_wifi_idle,
        p_cw2: 1.0 - other_wifi_idle * (1.0 - tau_l).powi(n_l as i32),
        p_cl,
    }
}

/// Normalising constant and region probabilities of the slot chain.
pub fn region_weights(p_i1: f64, p_i2: f64, delta_a: u32, big_m: u64) -> Result<RegionWeights> {
    if u64::from(delta_a) > big_m {
        return Err(Error::Domain(format!(
            "delta_a = {delta_a} exceeds the contention horizon M = {big_m}"
        )));
    }
    for (name, p) in [("p_i1", p_i1), ("p_i2", p_i2)] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Domain(format!("{name} = {p} outside [0, 1]")));
        }
    }
    let da = u64::from(delta_a);
    let head = geometric_sum(p_i1, da + 1);
    let tail = p_i1.powi(delta_a as i32) * p_i2 * geometric_sum(p_i2, big_m - da);
    let c0 = 1.0 / (head + tail);
    let p_a1 = c0 * geometric_sum(p_i1, da);
    Ok(RegionWeights {
        c0,
        p_a1,
        p_a2: 1.0 - p_a1,
    })
}

/// One evaluation of the fixed-point map at `(tau_w, tau_l)`.
struct MapEval {
    next_w: f64,
    next_l: f64,
    coll: CollisionProbs,
    p_cw: f64,
    p_i1: f64,
    p_i2: f64,
    weights: RegionWeights,
}

struct CoexMap<'a> {
    s: &'a Scenario,
    delta_a: u32,
    big_m: u64,
}

impl CoexMap<'_> {
    fn eval(&self, tau_w: f64, tau_l: f64) -> Result<MapEval> {
        let s = self.s;
        let coll = collision_probs(tau_w, tau_l, s.n_w, s.n_l);
        let p_i1 = (1.0 - tau_w).powi(s.n_w as i32);
        let p_i2 = p_i1 * (1.0 - tau_l).powi(s.n_l as i32);
        let weights = region_weights(p_i1, p_i2, self.delta_a, self.big_m)?;
        let p_cw = weights.p_a1 * coll.p_cw1 + weights.p_a2 * coll.p_cw2;
        let next_w = tau_wifi(p_cw.min(P_ITER_MAX), s.wifi.w0, s.wifi.m)?;
        let next_l = if s.n_l == 0 {
            0.0
        } else {
            tau_laa(coll.p_cl.min(P_ITER_MAX), s.laa.w0, s.laa.m, s.laa.e_l)?
        };
        Ok(MapEval {
            next_w,
            next_l,
            coll,
            p_cw,
            p_i1,
            p_i2,
            weights,
        })
    }
}

/// Solve the coexistence system from the zero-collision starting point.
pub fn solve_coexistence(scenario: &Scenario) -> Result<ContentionSolution> {
    let start = (
        2.0 / (f64::from(scenario.wifi.w0) + 1.0),
        2.0 / (f64::from(scenario.laa.w0) + 1.0),
    );
    solve_coexistence_from(scenario, start)
}

/// Solve the coexistence system by damped iteration from `start = (tau_w, tau_l)`.
pub fn solve_coexistence_from(scenario: &Scenario, start: (f64, f64)) -> Result<ContentionSolution> {
    scenario.validate()?;
    let delta_a = scenario.delta_a()?;
    let map = CoexMap {
        s: scenario,
        delta_a,
        big_m: max_backoff_slots(&scenario.wifi, &scenario.laa, delta_a),
    };
    let ctl = &scenario.solver;
    let (mut tau_w, mut tau_l) = start;
    if scenario.n_l == 0 {
        tau_l = 0.0;
    }
    let mut residual = f64::INFINITY;
    for iter in 0..ctl.max_iter {
        let e = map.eval(tau_w, tau_l)?;
        residual = (e.next_w - tau_w).abs().max((e.next_l - tau_l).abs());
        if residual <= ctl.tol {
            return Ok(map.solution(tau_w, tau_l, e, iter, residual));
        }
        tau_w += ctl.damping * (e.next_w - tau_w);
        tau_l += ctl.damping * (e.next_l - tau_l);
    }

    // Steep maps (large m' with P_cl near 1/2) make the damped step cycle.
    // Fall back to nested bisection, which only needs continuity.
    let (tau_w, tau_l, steps) = map.bracket()?;
    let e = map.eval(tau_w, tau_l)?;
    let bracket_residual = (e.next_w - tau_w).abs().max((e.next_l - tau_l).abs());
    if bracket_residual <= ctl.tol {
        return Ok(map.solution(tau_w, tau_l, e, ctl.max_iter + steps, bracket_residual));
    }
    Err(Error::NoConvergence {
        iterations: ctl.max_iter + steps,
        residual: residual.min(bracket_residual),
    })
}

const BISECTION_STEPS: usize = 200;

/// Root of an increasing function on `[0, 1]` with `f(0) <= 0 <= f(1)`.
fn bisect_unit(mut f: impl FnMut(f64) -> Result<f64>) -> Result<(f64, usize)> {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut steps = 0;
    while steps < BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid)? > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        steps += 1;
    }
    Ok((0.5 * (lo + hi), steps))
}

impl CoexMap<'_> {
    /// LAA attempt probability consistent with a fixed Wi-Fi one.
    fn laa_response(&self, tau_w: f64) -> Result<(f64, usize)> {
        let s = self.s;
        if s.n_l == 0 {
            return Ok((0.0, 0));
        }
        bisect_unit(|tau_l| {
            let p_cl = collision_probs(tau_w, tau_l, s.n_w, s.n_l).p_cl;
            Ok(tau_l - tau_laa(p_cl.min(P_ITER_MAX), s.laa.w0, s.laa.m, s.laa.e_l)?)
        })
    }

    fn bracket(&self) -> Result<(f64, f64, usize)> {
        let mut steps = 0;
        let (tau_w, outer) = bisect_unit(|tau_w| {
            let (tau_l, inner) = self.laa_response(tau_w)?;
            steps += inner;
            Ok(tau_w - self.eval(tau_w, tau_l)?.next_w)
        })?;
        let (tau_l, inner) = self.laa_response(tau_w)?;
        Ok((tau_w, tau_l, steps + outer + inner))
    }

    fn solution(&self, tau_w: f64, tau_l: f64, e: MapEval, iterations: usize, residual: f64) -> ContentionSolution {
        ContentionSolution {
            tau_w,
            tau_l,
            p_cw: e.p_cw,
            p_cl: e.coll.p_cl,
            p_cw1: e.coll.p_cw1,
            p_cw2: e.coll.p_cw2,
            p_i1: e.p_i1,
            p_i2: e.p_i2,
            c0: e.weights.c0,
            p_a1: e.weights.p_a1,
            p_a2: e.weights.p_a2,
            delta_a: self.delta_a,
            big_m: self.big_m,
            iterations,
            residual,
        }
    }
}

/// Re-evaluate `max |F(x) - x|` at a returned solution.
pub fn coexistence_residual(scenario: &Scenario, sol: &ContentionSolution) -> Result<f64> {
    let delta_a = scenario.delta_a()?;
    let map = CoexMap {
        s: scenario,
        delta_a,
        big_m: max_backoff_slots(&scenario.wifi, &scenario.laa, delta_a),
    };
    let e = map.eval(sol.tau_w, sol.tau_l)?;
    Ok((e.next_w - sol.tau_w).abs().max((e.next_l - sol.tau_l).abs()))
}

/// Solve `tau = tau_wifi(1 - (1 - tau)^(n-1))` for a single-class network of
/// `n` Wi-Fi stations.
pub fn solve_wifi_only(n: u32, w0: u32, m: u32, ctl: &SolverControls) -> Result<WifiOnlySolution> {
    if n < 1 {
        return Err(Error::Domain("Wi-Fi-only network needs at least one station".into()));
    }
    ctl.validate()?;
    let mut tau = 2.0 / (f64::from(w0) + 1.0);
    let mut residual = f64::INFINITY;
    for iter in 0..ctl.max_iter {
        let p = 1.0 - (1.0 - tau).powi(n as i32 - 1);
        let next = tau_wifi(p.min(P_ITER_MAX), w0, m)?;
        residual = (next - tau).abs();
        if residual <= ctl.tol {
            return Ok(WifiOnlySolution {
                n,
                tau,
                p,
                iterations: iter,
                residual,
            });
        }
        tau += ctl.damping * (next - tau);
    }
    Err(Error::NoConvergence {
        iterations: ctl.max_iter,
        residual,
    })
}
