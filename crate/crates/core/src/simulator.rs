//! Slot-level Monte Carlo simulation of saturated Wi-Fi and LAA stations.
//!
//! The simulator follows the same slotted abstraction as the analytic model:
//! time is a sequence of virtual slots, each either idle (one backoff slot
//! long) or busy (one transmission event). Every active station whose counter
//! is zero transmits; two or more simultaneous transmitters collide. Counters
//! of non-transmitting stations decrement once per virtual slot. After each
//! busy event Wi-Fi stations are active immediately, LAA stations only from
//! the `delta_a`-th slot on, which is the extra defer period `T_d - DIFS`.
//!
//! Each station draws from its own ChaCha stream keyed by technology and
//! index, so adding stations leaves the streams of existing ones unchanged.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{window, Scenario};
use crate::throughput::EventDurations;

/// Smallest horizon accepted by [`simulate`].
pub const MIN_HORIZON: u64 = 10_000;

const BATCHES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Horizon {
    /// Virtual slots (idle slots plus busy events) after warmup.
    Slots(u64),
    /// Busy events after warmup.
    Events(u64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub scenario: Scenario,
    pub horizon: Horizon,
    pub seed: u64,
    pub warmup_events: u64,
}

impl SimConfig {
    pub fn slots(scenario: Scenario, slots: u64, seed: u64) -> Self {
        Self {
            scenario,
            horizon: Horizon::Slots(slots),
            seed,
            warmup_events: 100,
        }
    }

    pub fn events(scenario: Scenario, events: u64, seed: u64) -> Self {
        Self {
            horizon: Horizon::Events(events),
            ..Self::slots(scenario, 0, seed)
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventCounts {
    pub wifi_success: u64,
    pub laa_success: u64,
    pub wifi_collision: u64,
    pub laa_collision: u64,
    pub cross_collision: u64,
    pub idle_slots: u64,
}

impl EventCounts {
    pub fn busy(&self) -> u64 {
        self.wifi_success + self.laa_success + self.wifi_collision + self.laa_collision + self.cross_collision
    }
}

/// Batch-means standard errors of the headline estimates.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StdErrors {
    pub tau_w: f64,
    pub tau_l: f64,
    pub p_cw: f64,
    pub p_cl: f64,
    pub tput_w: f64,
    pub tput_l: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimStats {
    pub tau_hat_w: f64,
    pub tau_hat_l: f64,
    pub p_cw_hat: f64,
    pub p_cl_hat: f64,
    /// Fraction of virtual slots falling before the LAA defer period ends.
    pub p_a1_hat: f64,
    pub tput_hat_w: f64,
    pub tput_hat_l: f64,
    pub events: EventCounts,
    pub wifi_attempts: u64,
    pub laa_attempts: u64,
    pub contention_slots: u64,
    pub laa_active_slots: u64,
    pub elapsed_model_time_us: f64,
    pub stderr: StdErrors,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Tech {
    Wifi,
    Laa,
}

struct Station {
    tech: Tech,
    stage: u32,
    counter: u64,
    rng: ChaCha8Rng,
}

impl Station {
    fn new(tech: Tech, index: u32, seed: u64, w0: u32) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tag = match tech {
            Tech::Wifi => 0u64,
            Tech::Laa => 1u64,
        };
        rng.set_stream((tag << 32) | u64::from(index));
        let mut s = Self {
            tech,
            stage: 0,
            counter: 0,
            rng,
        };
        s.draw(w0, 0);
        s
    }

    fn draw(&mut self, w0: u32, max_stage: u32) {
        let w = window(w0, self.stage.min(max_stage));
        self.counter = self.rng.random_range(0..w);
    }
}

/// Running tallies for one batch of the horizon.
#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    wifi_attempts: u64,
    wifi_collided: u64,
    laa_attempts: u64,
    laa_collided: u64,
    slots: u64,
    laa_slots: u64,
    region1_slots: u64,
    wifi_success: u64,
    laa_success: u64,
    elapsed: f64,
}

impl Tally {
    fn add(&mut self, o: &Tally) {
        self.wifi_attempts += o.wifi_attempts;
        self.wifi_collided += o.wifi_collided;
        self.laa_attempts += o.laa_attempts;
        self.laa_collided += o.laa_collided;
        self.slots += o.slots;
        self.laa_slots += o.laa_slots;
        self.region1_slots += o.region1_slots;
        self.wifi_success += o.wifi_success;
        self.laa_success += o.laa_success;
        self.elapsed += o.elapsed;
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

struct Estimates {
    tau_w: f64,
    tau_l: f64,
    p_cw: f64,
    p_cl: f64,
    tput_w: f64,
    tput_l: f64,
}

fn estimates(t: &Tally, n_w: u32, n_l: u32, wifi_bits: f64, laa_bits: f64) -> Estimates {
    let per_time = |count: u64, bits: f64| {
        if t.elapsed > 0.0 {
            count as f64 * bits / t.elapsed
        } else {
            0.0
        }
    };
    Estimates {
        tau_w: ratio(t.wifi_attempts, t.slots * u64::from(n_w)),
        tau_l: ratio(t.laa_attempts, t.laa_slots * u64::from(n_l)),
        p_cw: ratio(t.wifi_collided, t.wifi_attempts),
        p_cl: ratio(t.laa_collided, t.laa_attempts),
        tput_w: per_time(t.wifi_success, wifi_bits),
        tput_l: per_time(t.laa_success, laa_bits),
    }
}

fn batch_stderr(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = values.clone().count() as f64;
    if n < 2.0 {
        return 0.0;
    }
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (var / n).sqrt()
}

/// Run one simulation.
pub fn simulate(config: &SimConfig) -> Result<SimStats> {
    run(config, None)
}

/// Run one simulation and write one line per event to `log`:
/// `model_time_us,event_kind,station_id,duration_us`. Idle runs appear as
/// `idle` records with station `-`; collisions list all transmitters
/// separated by `;`. Wi-Fi stations are numbered first, LAA stations follow.
pub fn simulate_with_log(config: &SimConfig, log: &mut dyn Write) -> Result<SimStats> {
    run(config, Some(log))
}

/// Run independent simulations in parallel; element `i` depends only on
/// `configs[i]`.
pub fn simulate_batch(configs: &[SimConfig]) -> Result<Vec<SimStats>> {
    if configs.is_empty() {
        return Err(Error::Domain("simulation batch is empty".into()));
    }
    configs
        .par_iter()
        .enumerate()
        .map(|(index, c)| {
            simulate(c).map_err(|e| Error::Batch {
                index,
                source: Box::new(e),
            })
        })
        .collect()
}

fn io_err(e: std::io::Error) -> Error {
    Error::Domain(format!("event log write failed: {e}"))
}

fn run(config: &SimConfig, mut log: Option<&mut dyn Write>) -> Result<SimStats> {
    let s = &config.scenario;
    s.validate()?;
    let horizon = match config.horizon {
        Horizon::Slots(h) | Horizon::Events(h) => h,
    };
    if horizon < MIN_HORIZON {
        return Err(Error::InvalidHorizon(format!(
            "horizon {horizon} below the minimum of {MIN_HORIZON}"
        )));
    }
    let delta_a = u64::from(s.delta_a()?);
    let d = EventDurations::new(&s.wifi, &s.laa);
    let sigma = s.wifi.slot_us;
    let wifi_top = s.wifi.m;
    let wifi_last = s.wifi.m + 1;
    let laa_top = s.laa.m;
    let laa_last = s.laa.m + s.laa.e_l;
    let wifi_bits = s.wifi.payload_bits();
    let laa_bits = s.laa.data_fraction() * s.laa.txop_us * s.laa.rate_mbps;

    let mut stations: Vec<Station> = (0..s.n_w)
        .map(|i| Station::new(Tech::Wifi, i, config.seed, s.wifi.w0))
        .chain((0..s.n_l).map(|i| Station::new(Tech::Laa, i, config.seed, s.laa.w0)))
        .collect();

    if let Some(w) = log.as_deref_mut() {
        writeln!(w, "model_time_us,event_kind,station_id,duration_us").map_err(io_err)?;
    }

    let mut batches = [Tally::default(); BATCHES];
    let mut counts = EventCounts::default();
    let mut warm_events = 0u64;
    let mut progress = 0u64;
    let mut clock = 0.0f64;
    let mut transmitters: Vec<usize> = Vec::with_capacity(stations.len());

    while progress < horizon {
        // Slot index of the next transmission in this contention period.
        let next = stations
            .iter()
            .map(|st| match st.tech {
                Tech::Wifi => st.counter,
                Tech::Laa => st.counter.saturating_add(delta_a),
            })
            .min()
            .expect("at least one Wi-Fi station");
        transmitters.clear();
        let mut n_wifi_tx = 0u32;
        let mut n_laa_tx = 0u32;
        for (i, st) in stations.iter().enumerate() {
            let at = match st.tech {
                Tech::Wifi => st.counter,
                Tech::Laa => st.counter.saturating_add(delta_a),
            };
            if at == next {
                transmitters.push(i);
                match st.tech {
                    Tech::Wifi => n_wifi_tx += 1,
                    Tech::Laa => n_laa_tx += 1,
                }
            }
        }
        let (kind, duration, collided) = match (n_wifi_tx, n_laa_tx) {
            (1, 0) => ("wifi_success", d.t_sw, false),
            (_, 0) => ("wifi_collision", d.t_cw, true),
            (0, 1) => ("laa_success", d.t_sl, false),
            (0, _) => ("laa_collision", d.t_cl, true),
            _ => ("cross_collision", d.t_cc, true),
        };

        if let Some(w) = log.as_deref_mut() {
            if next > 0 {
                writeln!(w, "{},idle,-,{}", clock, next as f64 * sigma).map_err(io_err)?;
            }
            let ids: Vec<String> = transmitters.iter().map(|i| i.to_string()).collect();
            writeln!(w, "{},{},{},{}", clock + next as f64 * sigma, kind, ids.join(";"), duration)
                .map_err(io_err)?;
        }
        let period_time = next as f64 * sigma + duration;
        clock += period_time;

        let slots = next + 1;
        let laa_slots = slots.saturating_sub(delta_a);
        if warm_events < config.warmup_events {
            warm_events += 1;
        } else {
            let step = match config.horizon {
                Horizon::Slots(_) => slots,
                Horizon::Events(_) => 1,
            };
            let b = ((progress as u128 * BATCHES as u128) / horizon as u128) as usize;
            let t = &mut batches[b.min(BATCHES - 1)];
            t.slots += slots;
            t.laa_slots += laa_slots;
            t.region1_slots += slots.min(delta_a);
            t.wifi_attempts += u64::from(n_wifi_tx);
            t.laa_attempts += u64::from(n_laa_tx);
            if collided {
                t.wifi_collided += u64::from(n_wifi_tx);
                t.laa_collided += u64::from(n_laa_tx);
            }
            t.elapsed += period_time;
            counts.idle_slots += next;
            match kind {
                "wifi_success" => {
                    counts.wifi_success += 1;
                    t.wifi_success += 1;
                }
                "laa_success" => {
                    counts.laa_success += 1;
                    t.laa_success += 1;
                }
                "wifi_collision" => counts.wifi_collision += 1,
                "laa_collision" => counts.laa_collision += 1,
                _ => counts.cross_collision += 1,
            }
            progress += step;
        }

        let mut tx_iter = transmitters.iter().peekable();
        for (i, st) in stations.iter_mut().enumerate() {
            if tx_iter.peek() == Some(&&i) {
                tx_iter.next();
                let (w0, top, last) = match st.tech {
                    Tech::Wifi => (s.wifi.w0, wifi_top, wifi_last),
                    Tech::Laa => (s.laa.w0, laa_top, laa_last),
                };
                st.stage = if collided && st.stage < last { st.stage + 1 } else { 0 };
                st.draw(w0, top);
            } else {
                match st.tech {
                    Tech::Wifi => st.counter -= slots,
                    Tech::Laa => st.counter -= laa_slots,
                }
            }
        }
    }

    let mut total = Tally::default();
    for b in &batches {
        total.add(b);
    }
    let est = estimates(&total, s.n_w, s.n_l, wifi_bits, laa_bits);
    let per_batch: Vec<Estimates> = batches
        .iter()
        .map(|b| estimates(b, s.n_w, s.n_l, wifi_bits, laa_bits))
        .collect();
    let stderr = StdErrors {
        tau_w: batch_stderr(per_batch.iter().map(|e| e.tau_w)),
        tau_l: batch_stderr(per_batch.iter().map(|e| e.tau_l)),
        p_cw: batch_stderr(per_batch.iter().map(|e| e.p_cw)),
        p_cl: batch_stderr(per_batch.iter().map(|e| e.p_cl)),
        tput_w: batch_stderr(per_batch.iter().map(|e| e.tput_w)),
        tput_l: batch_stderr(per_batch.iter().map(|e| e.tput_l)),
    };
    let elapsed = counts.idle_slots as f64 * sigma
        + counts.wifi_success as f64 * d.t_sw
        + counts.wifi_collision as f64 * d.t_cw
        + counts.laa_success as f64 * d.t_sl
        + counts.laa_collision as f64 * d.t_cl
        + counts.cross_collision as f64 * d.t_cc;
    Ok(SimStats {
        tau_hat_w: est.tau_w,
        tau_hat_l: est.tau_l,
        p_cw_hat: est.p_cw,
        p_cl_hat: est.p_cl,
        p_a1_hat: ratio(total.region1_slots, total.slots),
        tput_hat_w: est.tput_w,
        tput_hat_l: est.tput_l,
        events: counts,
        wifi_attempts: total.wifi_attempts,
        laa_attempts: total.laa_attempts,
        contention_slots: total.slots,
        laa_active_slots: total.laa_slots,
        elapsed_model_time_us: elapsed,
        stderr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lone_wifi() -> Scenario {
        let mut s = Scenario::pairs(1, 3, 9.0, 7.8).unwrap();
        s.n_l = 0;
        s
    }

    #[test]
    fn rejects_short_horizon() {
        let c = SimConfig::slots(lone_wifi(), 100, 1);
        assert!(matches!(simulate(&c), Err(Error::InvalidHorizon(_))));
    }

    #[test]
    fn lone_station_never_collides() {
        let st = simulate(&SimConfig::slots(lone_wifi(), 200_000, 7)).unwrap();
        assert_eq!(st.p_cw_hat, 0.0);
        assert_eq!(st.events.wifi_collision, 0);
        assert!((st.tau_hat_w - 2.0 / 17.0).abs() < 5.0 * st.stderr.tau_w.max(1e-4));
    }

    #[test]
    fn seed_determinism() {
        let s = Scenario::pairs(3, 4, 9.0, 7.8).unwrap();
        let a = simulate(&SimConfig::slots(s.clone(), 50_000, 42)).unwrap();
        let b = simulate(&SimConfig::slots(s, 50_000, 42)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn event_horizon_counts_events() {
        let s = Scenario::pairs(2, 3, 9.0, 7.8).unwrap();
        let st = simulate(&SimConfig::events(s, 20_000, 3)).unwrap();
        assert_eq!(st.events.busy(), 20_000);
    }

    #[test]
    fn batch_reports_failing_index() {
        let s = Scenario::pairs(2, 3, 9.0, 7.8).unwrap();
        let good = SimConfig::slots(s.clone(), 20_000, 1);
        let bad = SimConfig::slots(s, 10, 1);
        let err = simulate_batch(&[good, bad]).unwrap_err();
        assert!(matches!(err, Error::Batch { index: 1, .. }));
        assert!(simulate_batch(&[]).is_err());
    }
}
