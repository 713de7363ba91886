//! Event durations and saturation throughput of the coexistence network and
//! of the Wi-Fi-only comparison network.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fixedpoint::{solve_coexistence, solve_wifi_only, ContentionSolution, WifiOnlySolution};
use crate::model::{LaaParams, Scenario, WiFiParams, WifiMode};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventDurations {
    pub t_sw: f64,
    pub t_cw: f64,
    pub t_sl: f64,
    pub t_cl: f64,
    /// Wi-Fi/LAA collision: the channel stays busy for the longer of the two.
    pub t_cc: f64,
}

impl EventDurations {
    pub fn new(wifi: &WiFiParams, laa: &LaaParams) -> Self {
        let (t_sw, t_cw) = wifi_event_durations(wifi);
        let (t_sl, t_cl) = laa_event_durations(laa);
        Self {
            t_sw,
            t_cw,
            t_sl,
            t_cl,
            t_cc: t_cw.max(t_cl),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThroughputReport {
    pub tput_w: f64,
    pub tput_l: f64,
    pub tput_wifi_only: f64,
    pub per_user_w: f64,
    pub per_user_l: f64,
    pub per_user_wifi_only: f64,
    pub p_trw: f64,
    pub p_trl: f64,
    pub p_sw: f64,
    pub p_sl: f64,
    pub t_e1: f64,
    pub t_e2: f64,
    pub t_e: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TxProbs {
    pub p_trw: f64,
    pub p_trl: f64,
    pub p_sw: f64,
    pub p_sl: f64,
}

/// Wi-Fi success and collision durations `(T_sw, T_cw)`.
///
/// Basic mode ends a success with SIFS + ACK; VHT mode with a BAR/BA exchange,
/// and a collision is charged the full exchange as well.
pub fn wifi_event_durations(wifi: &WiFiParams) -> (f64, f64) {
    let frame = wifi.phy_header_us + wifi.mac_header_us() + wifi.payload_airtime_us();
    let delay = if wifi.add_prop_delay { wifi.prop_delay_us } else { 0.0 };
    match wifi.mode {
        WifiMode::Basic => {
            let t_sw = frame + wifi.sifs_us + wifi.ack_us() + wifi.difs_us + delay;
            let t_cw = frame + wifi.difs_us + delay;
            (t_sw, t_cw)
        }
        WifiMode::Vht => {
            let t_sw = frame
                + wifi.sifs_us
                + wifi.bar_us()
                + wifi.sifs_us
                + wifi.ba_us()
                + wifi.difs_us
                + delay;
            (t_sw, t_sw)
        }
    }
}

/// LAA success and collision durations: the TXOP plus one LTE slot of
/// alignment/reservation overhead in both cases.
pub fn laa_event_durations(laa: &LaaParams) -> (f64, f64) {
    let t = laa.txop_us + laa.d_lte_us;
    (t, t)
}

fn at_least_one(tau: f64, n: u32) -> f64 {
    1.0 - (1.0 - tau).powi(n as i32)
}

fn exactly_one_given_some(tau: f64, n: u32, p_tr: f64) -> f64 {
    if n == 0 || p_tr == 0.0 {
        0.0
    } else {
        f64::from(n) * tau * (1.0 - tau).powi(n as i32 - 1) / p_tr
    }
}

pub fn tx_and_success_probs(sol: &ContentionSolution, n_w: u32, n_l: u32) -> TxProbs {
    let p_trw = at_least_one(sol.tau_w, n_w);
    let p_trl = if n_l == 0 { 0.0 } else { at_least_one(sol.tau_l, n_l) };
    TxProbs {
        p_trw,
        p_trl,
        p_sw: exactly_one_given_some(sol.tau_w, n_w, p_trw),
        p_sl: exactly_one_given_some(sol.tau_l, n_l, p_trl),
    }
}

/// Aggregate throughput of a Wi-Fi-only network of `wo.n` stations.
pub fn wifi_only_throughput_from(wifi: &WiFiParams, wo: &WifiOnlySolution) -> f64 {
    let (t_sw, t_cw) = wifi_event_durations(wifi);
    let p_tr = at_least_one(wo.tau, wo.n);
    let p_s = exactly_one_given_some(wo.tau, wo.n, p_tr);
    let slot_time = (1.0 - p_tr) * wifi.slot_us + p_tr * (1.0 - p_s) * t_cw + p_tr * p_s * t_sw;
    p_tr * p_s * wifi.payload_bits() / slot_time
}

/// Aggregate throughput of a Wi-Fi-only network of `n` stations.
pub fn wifi_only_throughput(n: u32, scenario: &Scenario) -> Result<f64> {
    let wo = solve_wifi_only(n, scenario.wifi.w0, scenario.wifi.m, &scenario.solver)?;
    Ok(wifi_only_throughput_from(&scenario.wifi, &wo))
}

/// Throughputs of both networks for a converged contention solution.
/// `baseline` is the Wi-Fi-only solution for `scenario.baseline_n` stations.
pub fn coexistence_throughput(
    scenario: &Scenario,
    sol: &ContentionSolution,
    baseline: &WifiOnlySolution,
) -> ThroughputReport {
    let (n_w, n_l) = (scenario.n_w, scenario.n_l);
    let d = EventDurations::new(&scenario.wifi, &scenario.laa);
    let TxProbs {
        p_trw,
        p_trl,
        p_sw,
        p_sl,
    } = tx_and_success_probs(sol, n_w, n_l);
    let sigma = scenario.wifi.slot_us;

    let t_e1 = (1.0 - p_trw) * sigma + p_trw * p_sw * d.t_sw + p_trw * (1.0 - p_sw) * d.t_cw;

    // Term by term: idle, Wi-Fi success, LAA success, Wi-Fi collision, LAA
    // collision, then the four joint Wi-Fi/LAA events that all last T_cc.
    let joint = p_trw * p_sw * p_trl * p_sl
        + p_trw * p_sw * p_trl * (1.0 - p_sl)
        + p_trw * (1.0 - p_sw) * p_trl * p_sl
        + p_trw * (1.0 - p_sw) * p_trl * (1.0 - p_sl);
    let t_e2 = (1.0 - p_trw) * (1.0 - p_trl) * sigma
        + p_trw * p_sw * (1.0 - p_trl) * d.t_sw
        + p_trl * p_sl * (1.0 - p_trw) * d.t_sl
        + p_trw * (1.0 - p_sw) * (1.0 - p_trl) * d.t_cw
        + p_trl * (1.0 - p_sl) * (1.0 - p_trw) * d.t_cl
        + joint * d.t_cc;

    let t_e = sol.p_a1 * t_e1 + sol.p_a2 * t_e2;

    let wifi_success = sol.p_a1 * p_trw * p_sw + sol.p_a2 * p_trw * p_sw * (1.0 - p_trl);
    let tput_w = wifi_success * scenario.wifi.payload_bits() / t_e;

    let laa_bits = scenario.laa.data_fraction() * scenario.laa.txop_us * scenario.laa.rate_mbps;
    let tput_l = sol.p_a2 * p_trl * p_sl * (1.0 - p_trw) * laa_bits / t_e;

    let tput_wifi_only = wifi_only_throughput_from(&scenario.wifi, baseline);
    ThroughputReport {
        tput_w,
        tput_l,
        tput_wifi_only,
        per_user_w: tput_w / f64::from(n_w),
        per_user_l: if n_l == 0 { 0.0 } else { tput_l / f64::from(n_l) },
        per_user_wifi_only: tput_wifi_only / f64::from(baseline.n),
        p_trw,
        p_trl,
        p_sw,
        p_sl,
        t_e1,
        t_e2,
        t_e,
    }
}

/// Solve both networks and evaluate the throughput report.
pub fn throughput_report(scenario: &Scenario) -> Result<ThroughputReport> {
    let sol = solve_coexistence(scenario)?;
    let baseline = solve_wifi_only(
        scenario.baseline_n,
        scenario.wifi.w0,
        scenario.wifi.m,
        &scenario.solver,
    )?;
    Ok(coexistence_throughput(scenario, &sol, &baseline))
}
