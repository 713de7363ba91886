//! Parameter sets, scenario description and the timing arithmetic shared by
//! the solver, the throughput evaluator and the simulator.
//!
//! All durations are microseconds held as `f64`, all rates are Mbps, so a
//! bit count divided by a duration is directly a rate in Mbps. Slot counts
//! are integers.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Largest LAA TXOP considered by the fairness searches, in microseconds.
pub const MAX_TXOP_US: f64 = 6000.0;

/// OFDM symbols per LTE subframe.
pub const SYMBOLS_PER_SUBFRAME: u32 = 14;

/// Bytes per MPDU in the VHT A-MPDU configuration.
pub const VHT_MPDU_BYTES: u64 = 11416;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WifiMode {
    /// Single MPDU followed by SIFS + ACK.
    Basic,
    /// A-MPDU followed by a BAR/BA exchange.
    Vht,
}

/// DCF contention and frame timing parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WiFiParams {
    /// Minimum contention window, in slots.
    pub w0: u32,
    /// Maximum backoff stage.
    pub m: u32,
    pub difs_us: f64,
    pub sifs_us: f64,
    pub slot_us: f64,
    pub phy_header_us: f64,
    pub mac_header_bytes: u32,
    /// Fixed preamble of ACK, BAR and BA frames.
    pub control_preamble_us: f64,
    pub ack_bytes: u32,
    pub payload_bytes: u64,
    pub rate_data_mbps: f64,
    pub rate_basic_mbps: f64,
    pub mode: WifiMode,
    /// MPDUs per A-MPDU; only meaningful in VHT mode.
    pub n_mpdu: u32,
    pub bar_bytes: u32,
    pub ba_bytes: u32,
    pub prop_delay_us: f64,
    /// Add the propagation delay to both event durations.
    pub add_prop_delay: bool,
}

impl WiFiParams {
    /// Basic-mode parameters: W0 = 16, m = 6, 2048-byte payload, 24 Mbps
    /// basic rate.
    pub fn basic(rate_data_mbps: f64) -> Self {
        Self {
            w0: 16,
            m: 6,
            difs_us: 34.0,
            sifs_us: 16.0,
            slot_us: 9.0,
            phy_header_us: 20.0,
            mac_header_bytes: 34,
            control_preamble_us: 20.0,
            ack_bytes: 14,
            payload_bytes: 2048,
            rate_data_mbps,
            rate_basic_mbps: 24.0,
            mode: WifiMode::Basic,
            n_mpdu: 1,
            bar_bytes: 24,
            ba_bytes: 32,
            prop_delay_us: 0.1,
            add_prop_delay: false,
        }
    }

    /// VHT A-MPDU parameters with `n_mpdu` aggregated MPDUs.
    pub fn vht(n_mpdu: u32, rate_data_mbps: f64) -> Self {
        Self {
            phy_header_us: 40.0,
            mac_header_bytes: 38,
            payload_bytes: u64::from(n_mpdu) * VHT_MPDU_BYTES,
            rate_basic_mbps: 26.0,
            mode: WifiMode::Vht,
            n_mpdu,
            ..Self::basic(rate_data_mbps)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.w0 < 1 {
            return Err(invalid("wifi.w0", "must be at least 1"));
        }
        if self.m > 30 {
            return Err(invalid("wifi.m", "must be at most 30"));
        }
        for (field, v) in [
            ("wifi.difs_us", self.difs_us),
            ("wifi.sifs_us", self.sifs_us),
            ("wifi.slot_us", self.slot_us),
            ("wifi.phy_header_us", self.phy_header_us),
            ("wifi.rate_data_mbps", self.rate_data_mbps),
            ("wifi.rate_basic_mbps", self.rate_basic_mbps),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(field, format!("must be positive, got {v}")));
            }
        }
        if !(self.control_preamble_us.is_finite() && self.control_preamble_us >= 0.0) {
            return Err(invalid("wifi.control_preamble_us", "must be non-negative"));
        }
        if !(self.prop_delay_us.is_finite() && self.prop_delay_us >= 0.0) {
            return Err(invalid("wifi.prop_delay_us", "must be non-negative"));
        }
        if self.mode == WifiMode::Vht {
            if !(1..=64).contains(&self.n_mpdu) {
                return Err(invalid("wifi.n_mpdu", "must lie in 1..=64 in VHT mode"));
            }
            if !self.payload_bytes.is_multiple_of(u64::from(self.n_mpdu)) {
                return Err(invalid(
                    "wifi.payload_bytes",
                    "must be a whole multiple of n_mpdu in VHT mode",
                ));
            }
        }
        Ok(())
    }

    /// Payload bits per frame. Multiplying the payload airtime by the data
    /// rate gives the same number.
    pub fn payload_bits(&self) -> f64 {
        8.0 * self.payload_bytes as f64
    }

    pub fn payload_airtime_us(&self) -> f64 {
        frame_airtime(self.payload_bytes, self.rate_data_mbps)
    }

    pub fn mac_header_us(&self) -> f64 {
        frame_airtime(u64::from(self.mac_header_bytes), self.rate_data_mbps)
    }

    pub fn ack_us(&self) -> f64 {
        self.control_frame_us(self.ack_bytes)
    }

    pub fn bar_us(&self) -> f64 {
        self.control_frame_us(self.bar_bytes)
    }

    pub fn ba_us(&self) -> f64 {
        self.control_frame_us(self.ba_bytes)
    }

    /// Preamble + MAC header + payload: the on-air length of one data frame.
    pub fn frame_us(&self) -> f64 {
        self.phy_header_us + self.mac_header_us() + self.payload_airtime_us()
    }

    fn control_frame_us(&self, bytes: u32) -> f64 {
        self.control_preamble_us + frame_airtime(u64::from(bytes), self.rate_basic_mbps)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Dl,
    Ul,
}

/// LBT channel access priority class (1 to 4) and link direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PriorityClass {
    pub class: u8,
    pub direction: Direction,
}

impl PriorityClass {
    pub fn new(class: u8, direction: Direction) -> Result<Self> {
        if !(1..=4).contains(&class) {
            return Err(invalid("laa.priority_class", format!("must be 1..=4, got {class}")));
        }
        Ok(Self { class, direction })
    }

    pub fn dl(class: u8) -> Result<Self> {
        Self::new(class, Direction::Dl)
    }

    /// `(T_d, W'_0, m', TXOP)` straight from the LBT class table. Classes 3
    /// and 4 list two TXOPs; the smaller one is returned.
    pub fn table_entry(self) -> (f64, u32, u32, f64) {
        match (self.class, self.direction) {
            (1, Direction::Dl) => (25.0, 4, 1, 2000.0),
            (2, Direction::Dl) => (25.0, 8, 1, 3000.0),
            (1, Direction::Ul) => (34.0, 4, 1, 2000.0),
            (2, Direction::Ul) => (34.0, 8, 1, 3000.0),
            (3, Direction::Dl) => (43.0, 16, 2, 8000.0),
            (4, Direction::Dl) => (79.0, 16, 6, 8000.0),
            (3, Direction::Ul) => (43.0, 16, 2, 6000.0),
            (4, Direction::Ul) => (79.0, 16, 6, 6000.0),
            _ => unreachable!("priority class validated on construction"),
        }
    }
}

/// LBT contention and TXOP parameters for the LAA network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaaParams {
    pub priority_class: PriorityClass,
    /// Defer period before backoff countdown.
    pub t_d_us: f64,
    pub w0: u32,
    /// Maximum retransmission stage.
    pub m: u32,
    /// Attempts spent at the maximum window before resetting to stage 0.
    pub e_l: u32,
    pub txop_us: f64,
    /// Slot-boundary alignment overhead paid on every channel access.
    pub d_lte_us: f64,
    pub rate_mbps: f64,
    /// Control symbols per subframe; the remaining symbols carry data.
    pub control_symbols: u32,
}

impl LaaParams {
    /// Parameters for a priority class. Unless `raw_table_td` is set,
    /// classes 1 and 2 take a defer period equal to the Wi-Fi DIFS of 34 us
    /// instead of the tabulated DL value.
    pub fn for_class(priority_class: PriorityClass, rate_mbps: f64, raw_table_td: bool) -> Self {
        let (table_td, w0, m, txop_us) = priority_class.table_entry();
        let t_d_us = if !raw_table_td && priority_class.class <= 2 {
            34.0
        } else {
            table_td
        };
        Self {
            priority_class,
            t_d_us,
            w0,
            m,
            e_l: 1,
            txop_us,
            d_lte_us: 500.0,
            rate_mbps,
            control_symbols: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.w0 < 1 {
            return Err(invalid("laa.w0", "must be at least 1"));
        }
        if self.m > 64 {
            return Err(invalid("laa.m", "must be at most 64"));
        }
        if !(1..=8).contains(&self.e_l) {
            return Err(invalid("laa.e_l", format!("must lie in 1..=8, got {}", self.e_l)));
        }
        if !(self.txop_us.is_finite() && self.txop_us >= 0.0) {
            return Err(invalid("laa.txop_us", "must be non-negative"));
        }
        if !(self.t_d_us.is_finite() && self.t_d_us > 0.0) {
            return Err(invalid("laa.t_d_us", "must be positive"));
        }
        if !(self.d_lte_us.is_finite() && self.d_lte_us >= 0.0) {
            return Err(invalid("laa.d_lte_us", "must be non-negative"));
        }
        if !(self.rate_mbps.is_finite() && self.rate_mbps > 0.0) {
            return Err(invalid("laa.rate_mbps", "must be positive"));
        }
        if !(1..=3).contains(&self.control_symbols) {
            return Err(invalid("laa.control_symbols", "must lie in 1..=3"));
        }
        Ok(())
    }

    /// Fraction of the TXOP that carries data (13/14 with one control symbol).
    pub fn data_fraction(&self) -> f64 {
        f64::from(SYMBOLS_PER_SUBFRAME - self.control_symbols) / f64::from(SYMBOLS_PER_SUBFRAME)
    }
}

/// Numerical controls for the fixed-point solver and the 1-D searches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverControls {
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub grid_coarse_us: f64,
    pub grid_fine_us: f64,
    pub m_laa_search_cap: u32,
    /// Restrict TXOP searches to multiples of the LTE slot.
    pub snap_txop_grid: bool,
}

impl Default for SolverControls {
    fn default() -> Self {
        Self {
            damping: 0.5,
            tol: 1e-10,
            max_iter: 10_000,
            grid_coarse_us: 50.0,
            grid_fine_us: 1.0,
            m_laa_search_cap: 64,
            snap_txop_grid: false,
        }
    }
}

impl SolverControls {
    pub fn validate(&self) -> Result<()> {
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(invalid("solver.damping", "must lie in (0, 1]"));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(invalid("solver.tol", "must be positive"));
        }
        if self.max_iter < 1 {
            return Err(invalid("solver.max_iter", "must be at least 1"));
        }
        if !(self.grid_fine_us > 0.0 && self.grid_fine_us.is_finite()) {
            return Err(invalid("solver.grid_fine_us", "must be positive"));
        }
        if !(self.grid_coarse_us >= self.grid_fine_us && self.grid_coarse_us.is_finite()) {
            return Err(invalid("solver.grid_coarse_us", "must be at least grid_fine_us"));
        }
        if self.m_laa_search_cap > 64 {
            return Err(invalid("solver.m_laa_search_cap", "must be at most 64"));
        }
        Ok(())
    }
}

/// One coexistence scenario: station counts, both parameter sets and solver
/// controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub n_w: u32,
    pub n_l: u32,
    /// Station count of the Wi-Fi-only comparison network.
    pub baseline_n: u32,
    pub wifi: WiFiParams,
    pub laa: LaaParams,
    pub solver: SolverControls,
}

impl Scenario {
    /// Scenario with `baseline_n = n_w + n_l` and default solver controls.
    pub fn new(n_w: u32, n_l: u32, wifi: WiFiParams, laa: LaaParams) -> Self {
        Self {
            n_w,
            n_l,
            baseline_n: n_w + n_l,
            wifi,
            laa,
            solver: SolverControls::default(),
        }
    }

    /// `n` Wi-Fi and `n` LAA stations, basic-mode Wi-Fi, DL priority class
    /// with the DIFS override.
    pub fn pairs(n: u32, class: u8, rate_w_mbps: f64, rate_l_mbps: f64) -> Result<Self> {
        let pc = PriorityClass::dl(class)?;
        Ok(Self::new(
            n,
            n,
            WiFiParams::basic(rate_w_mbps),
            LaaParams::for_class(pc, rate_l_mbps, false),
        ))
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_w < 1 {
            return Err(invalid("scenario.n_w", "must be at least 1"));
        }
        if self.baseline_n < 1 {
            return Err(invalid("scenario.baseline_n", "must be at least 1"));
        }
        self.wifi.validate()?;
        self.laa.validate()?;
        self.solver.validate()?;
        self.delta_a()?;
        Ok(())
    }

    /// Wi-Fi-only contention slots at the start of each contention period.
    pub fn delta_a(&self) -> Result<u32> {
        delta_slots(self.laa.t_d_us, self.wifi.difs_us, self.wifi.slot_us)
    }

    pub fn with_txop(&self, txop_us: f64) -> Self {
        let mut s = self.clone();
        s.laa.txop_us = txop_us;
        s
    }

    pub fn with_m_laa(&self, m: u32) -> Self {
        let mut s = self.clone();
        s.laa.m = m;
        s
    }
}

/// Number of whole slots by which the LAA defer period exceeds DIFS.
pub fn delta_slots(t_d_us: f64, difs_us: f64, slot_us: f64) -> Result<u32> {
    const EPS: f64 = 1e-9;
    if !(slot_us > 0.0) {
        return Err(Error::Domain(format!("slot duration must be positive, got {slot_us}")));
    }
    let diff = t_d_us - difs_us;
    if diff < -EPS {
        return Err(Error::NegativeRegion { t_d_us, difs_us });
    }
    let q = diff / slot_us;
    let whole = q.round();
    if (q - whole).abs() > EPS {
        return Err(Error::NonIntegerRegion {
            t_d_us,
            difs_us,
            slot_us,
        });
    }
    Ok(whole.max(0.0) as u32)
}

/// Contention window `2^stage * w0`, saturating at `u64::MAX`.
pub fn window(w0: u32, stage: u32) -> u64 {
    1u64.checked_shl(stage)
        .map_or(u64::MAX, |s| s.saturating_mul(u64::from(w0)))
}

/// Slots a contention period can last before some station must transmit:
/// `min(W_m - 1, W'_{m'} - 1 + delta_a)`.
pub fn max_backoff_slots(wifi: &WiFiParams, laa: &LaaParams, delta_a: u32) -> u64 {
    let wifi_max = window(wifi.w0, wifi.m) - 1;
    let laa_max = (window(laa.w0, laa.m) - 1).saturating_add(u64::from(delta_a));
    wifi_max.min(laa_max)
}

/// Airtime in microseconds of `bytes` sent at `rate_mbps`.
pub fn frame_airtime(bytes: u64, rate_mbps: f64) -> f64 {
    8.0 * bytes as f64 / rate_mbps
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn delta_slots_matches_class_table() {
        assert_eq!(delta_slots(43.0, 34.0, 9.0).unwrap(), 1);
        assert_eq!(delta_slots(34.0, 34.0, 9.0).unwrap(), 0);
        assert_eq!(delta_slots(79.0, 34.0, 9.0).unwrap(), 5);
    }

    #[test]
    fn delta_slots_errors() {
        assert!(matches!(
            delta_slots(25.0, 34.0, 9.0),
            Err(Error::NegativeRegion { .. })
        ));
        assert!(matches!(
            delta_slots(40.0, 34.0, 9.0),
            Err(Error::NonIntegerRegion { .. })
        ));
    }

    #[test]
    fn delta_slots_inverts_reconstruction() {
        for d in 0..200u32 {
            let t_d = 34.0 + f64::from(d) * 9.0;
            assert_eq!(delta_slots(t_d, 34.0, 9.0).unwrap(), d);
        }
    }

    #[test]
    fn max_backoff_examples() {
        let mut wifi = WiFiParams::basic(9.0);
        let mut laa = LaaParams::for_class(PriorityClass::dl(3).unwrap(), 7.8, false);
        laa.w0 = 16;
        laa.m = 2;
        assert_eq!(max_backoff_slots(&wifi, &laa, 1), 64);
        wifi.m = 0;
        laa.m = 0;
        assert_eq!(max_backoff_slots(&wifi, &laa, 0), 15);
        wifi.m = 6;
        laa.m = 6;
        assert_eq!(max_backoff_slots(&wifi, &laa, 5), 1023);
        laa.m = 64;
        assert_eq!(max_backoff_slots(&wifi, &laa, 5), 1023);
    }

    #[test]
    fn frame_airtime_examples() {
        assert_abs_diff_eq!(frame_airtime(2048, 9.0), 1_820.444_444, epsilon = 1e-5);
        assert_eq!(frame_airtime(0, 9.0), 0.0);
        assert_abs_diff_eq!(frame_airtime(2 * 11416, 78.0), 2_341.743_59, epsilon = 1e-4);
    }

    #[test]
    fn class_table_with_and_without_override() {
        let expect = [
            (1, Direction::Dl, 25.0, 4, 1, 2000.0),
            (2, Direction::Dl, 25.0, 8, 1, 3000.0),
            (3, Direction::Dl, 43.0, 16, 2, 8000.0),
            (4, Direction::Dl, 79.0, 16, 6, 8000.0),
            (1, Direction::Ul, 34.0, 4, 1, 2000.0),
            (2, Direction::Ul, 34.0, 8, 1, 3000.0),
            (3, Direction::Ul, 43.0, 16, 2, 6000.0),
            (4, Direction::Ul, 79.0, 16, 6, 6000.0),
        ];
        for (c, dir, td, w0, m, txop) in expect {
            let pc = PriorityClass::new(c, dir).unwrap();
            let raw = LaaParams::for_class(pc, 7.8, true);
            assert_eq!((raw.t_d_us, raw.w0, raw.m, raw.txop_us), (td, w0, m, txop));
            let over = LaaParams::for_class(pc, 7.8, false);
            let want_td = if c <= 2 { 34.0 } else { td };
            assert_eq!(over.t_d_us, want_td);
            assert_eq!(over.e_l, 1);
            assert_eq!(over.data_fraction(), 13.0 / 14.0);
        }
        assert!(PriorityClass::dl(5).is_err());
    }

    #[test]
    fn raw_table_td_rejected_by_scenario() {
        let mut s = Scenario::pairs(2, 1, 9.0, 7.8).unwrap();
        s.validate().unwrap();
        s.laa = LaaParams::for_class(PriorityClass::dl(1).unwrap(), 7.8, true);
        assert!(matches!(s.validate(), Err(Error::NegativeRegion { .. })));
    }

    #[test]
    fn vht_payload_and_airtime() {
        let w = WiFiParams::vht(2, 78.0);
        w.validate().unwrap();
        assert_eq!(w.payload_bytes, 22832);
        // Preamble + header + A-MPDU is the Wi-Fi TXOP, about 2.39 ms.
        assert!((w.frame_us() - 2390.0).abs() < 50.0, "{}", w.frame_us());
        let w4 = WiFiParams::vht(4, 78.0);
        assert!((w4.frame_us() - 4740.0).abs() < 50.0, "{}", w4.frame_us());
        let mut bad = WiFiParams::vht(2, 78.0);
        bad.n_mpdu = 65;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn validation_rejects_bad_values() {
        let mut laa = LaaParams::for_class(PriorityClass::dl(3).unwrap(), 7.8, false);
        laa.e_l = 9;
        assert!(laa.validate().is_err());
        let mut wifi = WiFiParams::basic(9.0);
        wifi.rate_data_mbps = 0.0;
        assert!(wifi.validate().is_err());
        let ctl = SolverControls {
            grid_fine_us: 100.0,
            ..SolverControls::default()
        };
        assert!(ctl.validate().is_err());
    }
}
