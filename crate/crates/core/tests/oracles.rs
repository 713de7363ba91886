//! Independent oracles for the closed-form pieces of the model.
//!
//! Each oracle below computes its answer without going through the library
//! code it checks; the frozen constants were produced by these oracles (and
//! cross-checked with a 30-digit bisection).

use approx::assert_relative_eq;
use coexfair_core::fixedpoint::{region_weights, solve_coexistence_from};
use coexfair_core::{
    max_backoff_slots, solve_coexistence, solve_wifi_only, tau_laa, tau_wifi, Scenario,
    SolverControls,
};

/// Stationary distribution of the per-station backoff chain, states
/// `(stage, counter)`, found by lazy power iteration. Returns the summed
/// probability of the zero-counter states, i.e. the attempt probability.
fn backoff_chain_tau(p: f64, w0: usize, max_stage: usize, last_stage: usize) -> f64 {
    let windows: Vec<usize> = (0..=last_stage).map(|j| w0 << j.min(max_stage)).collect();
    let offsets: Vec<usize> = windows
        .iter()
        .scan(0, |acc, w| {
            let o = *acc;
            *acc += w;
            Some(o)
        })
        .collect();
    let n: usize = windows.iter().sum();
    let mut pi = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    for _ in 0..2_000_000 {
        next.iter_mut().for_each(|v| *v = 0.0);
        for j in 0..=last_stage {
            let base = offsets[j];
            for k in 1..windows[j] {
                next[base + k - 1] += pi[base + k];
            }
            let head = pi[base];
            let fresh = head * (1.0 - p);
            let retry = head * p;
            let spread0 = fresh / windows[0] as f64;
            for slot in next.iter_mut().take(windows[0]) {
                *slot += spread0;
            }
            let (to, w) = if j < last_stage { (j + 1, windows[j + 1]) } else { (0, windows[0]) };
            let spread = retry / w as f64;
            for k in 0..w {
                next[offsets[to] + k] += spread;
            }
        }
        let mut delta = 0.0;
        for i in 0..n {
            let lazy = 0.5 * pi[i] + 0.5 * next[i];
            delta += (lazy - pi[i]).abs();
            pi[i] = lazy;
        }
        if delta < 1e-15 {
            break;
        }
    }
    offsets.iter().map(|&o| pi[o]).sum()
}

const TAU_WIFI_HALF_16_6: f64 = 0.032_660_902_977_905_86;
const TAU_LAA_HALF_16_2_1: f64 = 0.064_794_816_414_686_83;

#[test]
fn wifi_access_probability_matches_markov_chain() {
    let chain = backoff_chain_tau(0.5, 16, 6, 7);
    assert_relative_eq!(chain, TAU_WIFI_HALF_16_6, max_relative = 1e-8);
    assert_relative_eq!(tau_wifi(0.5, 16, 6).unwrap(), TAU_WIFI_HALF_16_6, max_relative = 1e-12);
    for p in [0.0, 0.1, 0.37, 0.8] {
        let chain = backoff_chain_tau(p, 4, 2, 3);
        assert_relative_eq!(tau_wifi(p, 4, 2).unwrap(), chain, max_relative = 1e-8);
    }
}

#[test]
fn laa_access_probability_matches_markov_chain() {
    let chain = backoff_chain_tau(0.5, 16, 2, 3);
    assert_relative_eq!(chain, TAU_LAA_HALF_16_2_1, max_relative = 1e-8);
    assert_relative_eq!(tau_laa(0.5, 16, 2, 1).unwrap(), TAU_LAA_HALF_16_2_1, max_relative = 1e-12);
    for (p, m, e) in [(0.2, 1, 4), (0.6, 2, 8), (0.45, 0, 3)] {
        let chain = backoff_chain_tau(p, 4, m, m + e);
        assert_relative_eq!(tau_laa(p, 4, m as u32, e as u32).unwrap(), chain, max_relative = 1e-8);
    }
}

/// Attempt probability in the textbook closed form; singular at p = 1/2.
fn literal_tau(p: f64, w0: f64, m: i32) -> f64 {
    let inner = ((1.0 - (2.0 * p).powi(m + 1)) * (1.0 - p)
        + 2f64.powi(m) * (p.powi(m + 1) - p.powi(m + 2)) * (1.0 - 2.0 * p))
        / ((1.0 - 2.0 * p) * (1.0 - p.powi(m + 2)));
    2.0 / (w0 * inner + 1.0)
}

/// Bisection on `tau - literal_tau(1 - (1 - tau)^(n-1))`, which is
/// increasing in `tau`.
fn bisect_wifi_only(n: i32, w0: f64, m: i32) -> (f64, f64) {
    let g = |t: f64| {
        let mut p = 1.0 - (1.0 - t).powi(n - 1);
        if (p - 0.5).abs() < 1e-9 {
            p += 2e-9;
        }
        t - literal_tau(p, w0, m)
    };
    let (mut lo, mut hi) = (0.0, 2.0 / (w0 + 1.0));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let t = 0.5 * (lo + hi);
    (t, 1.0 - (1.0 - t).powi(n - 1))
}

#[test]
fn wifi_only_matches_bisection() {
    let frozen = [
        (2, 0.104_620_701_592_796_87, 0.104_620_701_592_796_87),
        (10, 0.052_782_381_987_429_61, 0.386_170_289_858_587_63),
        (20, 0.034_562_637_641_165_703, 0.487_424_389_644_841_95),
    ];
    let ctl = SolverControls::default();
    for (n, tau, p) in frozen {
        let (bt, bp) = bisect_wifi_only(n, 16.0, 6);
        assert_relative_eq!(bt, tau, max_relative = 1e-9);
        assert_relative_eq!(bp, p, max_relative = 1e-9);
        let s = solve_wifi_only(n as u32, 16, 6, &ctl).unwrap();
        assert_relative_eq!(s.tau, tau, max_relative = 1e-8);
        assert_relative_eq!(s.p, p, max_relative = 1e-8);
    }
    let two = solve_wifi_only(2, 16, 6, &ctl).unwrap();
    let twenty = solve_wifi_only(20, 16, 6, &ctl).unwrap();
    assert!(twenty.tau < two.tau);
}

#[test]
fn region_chain_by_direct_summation() {
    // Slot-index chain: from index k an idle slot moves to k + 1, a busy one
    // returns to 0; the chain is truncated at M.
    for (p1, p2, da, m) in [(0.9, 0.8, 1u32, 3u64), (0.95, 0.7, 5, 60), (0.6, 0.6, 3, 10)] {
        let mut c = vec![1.0f64];
        for k in 1..=m {
            let ratio = if k <= u64::from(da) { p1 } else { p2 };
            c.push(c[k as usize - 1] * ratio);
        }
        let total: f64 = c.iter().sum();
        let head: f64 = c[..da as usize].iter().sum();
        let w = region_weights(p1, p2, da, m).unwrap();
        assert_relative_eq!(w.c0, 1.0 / total, max_relative = 1e-12);
        assert_relative_eq!(w.p_a1, head / total, max_relative = 1e-12);
    }
}

#[test]
fn coexistence_fixed_point_is_unique_from_many_starts() {
    for class in [1u8, 3, 4] {
        let s = Scenario::pairs(10, class, 9.0, 7.8).unwrap();
        let canonical = solve_coexistence(&s).unwrap();
        for &tw in &[0.001, 0.05, 0.2, 0.6, 0.95] {
            for &tl in &[0.001, 0.1, 0.5, 0.9] {
                let other = solve_coexistence_from(&s, (tw, tl)).unwrap();
                assert!((other.tau_w - canonical.tau_w).abs() < 1e-8);
                assert!((other.tau_l - canonical.tau_l).abs() < 1e-8);
            }
        }
        for p in [canonical.tau_w, canonical.tau_l, canonical.p_cw, canonical.p_cl] {
            assert!(p > 0.0 && p < 1.0);
        }
    }
    let one = solve_coexistence(&Scenario::pairs(1, 4, 9.0, 7.8).unwrap()).unwrap();
    let ten = solve_coexistence(&Scenario::pairs(10, 4, 9.0, 7.8).unwrap()).unwrap();
    assert!(ten.p_cw > one.p_cw);
}

#[test]
fn no_laa_collapses_to_wifi_only() {
    for n_w in [1, 2, 3, 7, 15] {
        let mut s = Scenario::pairs(n_w, 4, 9.0, 7.8).unwrap();
        s.n_l = 0;
        let coex = solve_coexistence(&s).unwrap();
        let alone = solve_wifi_only(n_w, 16, 6, &s.solver).unwrap();
        assert!((coex.tau_w - alone.tau).abs() < 1e-9);
        assert!((coex.p_cw - alone.p).abs() < 1e-9);
    }
}

#[test]
fn equal_sensing_uses_only_the_shared_region() {
    for class in [1u8, 2] {
        let s = Scenario::pairs(4, class, 9.0, 7.8).unwrap();
        let sol = solve_coexistence(&s).unwrap();
        assert_eq!(sol.delta_a, 0);
        assert_eq!(sol.p_a1, 0.0);
        assert_eq!(sol.p_cw, sol.p_cw2);
        assert_eq!(sol.big_m, max_backoff_slots(&s.wifi, &s.laa, 0));
    }
}
