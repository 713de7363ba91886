//! Scenario files: TOML with `[scenario]`, `[wifi]`, `[laa]` and `[solver]`
//! sections. Every key is optional; missing keys take the defaults of the
//! selected Wi-Fi mode and LAA priority class.

use std::path::Path;

use coexfair_core::{
    Direction, Error, LaaParams, PriorityClass, Scenario, SolverControls, WiFiParams, WifiMode,
};
use serde::{Deserialize, Serialize};

pub const DEFAULT_PAIRS: u32 = 5;
pub const DEFAULT_CLASS: u8 = 3;
pub const DEFAULT_RATE_W_BASIC: f64 = 9.0;
pub const DEFAULT_RATE_W_VHT: f64 = 78.0;
pub const DEFAULT_RATE_L: f64 = 7.8;
pub const DEFAULT_N_MPDU: u32 = 2;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConfigFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<ScenarioSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wifi: Option<WifiSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub laa: Option<LaaSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverSection>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSection {
    /// Sets both station counts; `n_wifi` / `n_laa` override it.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_pairs: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_wifi: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_laa: Option<u32>,
    /// Wi-Fi-only comparison network size; defaults to `n_wifi + n_laa`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub baseline_n: Option<u32>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WifiSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<WifiMode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_mpdu: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w0: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub difs_us: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sifs_us: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slot_us: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phy_header_us: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mac_header_bytes: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub control_preamble_us: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ack_bytes: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bar_bytes: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ba_bytes: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub payload_bytes: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rate_data_mbps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rate_basic_mbps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prop_delay_us: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub add_prop_delay: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LaaSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub priority_class: Option<u8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub direction: Option<Direction>,
    /// Keep the tabulated DL defer period of classes 1 and 2.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub raw_table_td: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_d_us: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w0: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub e_l: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub txop_us: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d_lte_us: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rate_mbps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub control_symbols: Option<u32>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolverSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub damping: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_coarse_us: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_fine_us: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_laa_search_cap: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snap_txop_grid: Option<bool>,
}

/// A problem with the scenario file, tied to the offending key when known.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub key: Option<String>,
    pub message: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.key {
            Some(k) => write!(f, "config key `{k}`: {}", self.message),
            None => write!(f, "config: {}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

impl ConfigError {
    fn at(key: &str, message: impl Into<String>) -> Self {
        Self {
            key: Some(key.to_string()),
            message: message.into(),
        }
    }
}

/// Map a validation failure from the core library to the config key it
/// concerns. Returns `None` for numerical failures.
pub fn key_error(e: &Error) -> Option<ConfigError> {
    match e {
        Error::InvalidParams { field, reason } => Some(ConfigError::at(field, reason.clone())),
        Error::NegativeRegion { .. } | Error::NonIntegerRegion { .. } => {
            Some(ConfigError::at("laa.t_d_us", e.to_string()))
        }
        _ => None,
    }
}

/// Parse a scenario file. Unknown keys are rejected by their full dotted
/// name.
pub fn parse(text: &str) -> Result<ConfigFile, ConfigError> {
    let syntax = |e: toml::de::Error| ConfigError {
        key: None,
        message: e.to_string().trim_end().to_string(),
    };
    let cfg: ConfigFile = toml::from_str(text).map_err(syntax)?;
    let table: toml::Table = toml::from_str(text).map_err(syntax)?;
    let mut unknown = vec![];
    let _: ConfigFile = serde_ignored::deserialize(toml::Value::Table(table), |path| {
        unknown.push(path.to_string().replace(".?", ""))
    })
    .map_err(syntax)?;
    match unknown.into_iter().next() {
        Some(k) => Err(ConfigError {
            message: "unknown key".into(),
            key: Some(k),
        }),
        None => Ok(cfg),
    }
}

pub fn load(path: &Path) -> Result<ConfigFile, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
        key: None,
        message: format!("cannot read {}: {e}", path.display()),
    })?;
    parse(&text)
}

/// Flags that adjust how a file is resolved.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub raw_table_td: bool,
    pub snap_txop_grid: bool,
}

macro_rules! set {
    ($section:expr, $target:expr, $($field:ident),+) => {
        $(if let Some(v) = $section.$field { $target.$field = v; })+
    };
}

pub fn resolve(cfg: &ConfigFile, ov: Overrides) -> Result<Scenario, ConfigError> {
    let sc = cfg.scenario.clone().unwrap_or_default();
    let wf = cfg.wifi.clone().unwrap_or_default();
    let la = cfg.laa.clone().unwrap_or_default();
    let so = cfg.solver.clone().unwrap_or_default();

    let mode = wf.mode.unwrap_or(WifiMode::Basic);
    let mut wifi = match mode {
        WifiMode::Basic => {
            let mut w = WiFiParams::basic(wf.rate_data_mbps.unwrap_or(DEFAULT_RATE_W_BASIC));
            set!(wf, w, n_mpdu);
            w
        }
        WifiMode::Vht => WiFiParams::vht(
            wf.n_mpdu.unwrap_or(DEFAULT_N_MPDU),
            wf.rate_data_mbps.unwrap_or(DEFAULT_RATE_W_VHT),
        ),
    };
    set!(
        wf, wifi, w0, m, difs_us, sifs_us, slot_us, phy_header_us, mac_header_bytes,
        control_preamble_us, ack_bytes, bar_bytes, ba_bytes, payload_bytes, rate_basic_mbps,
        prop_delay_us, add_prop_delay
    );

    let class = PriorityClass::new(
        la.priority_class.unwrap_or(DEFAULT_CLASS),
        la.direction.unwrap_or(Direction::Dl),
    )
    .map_err(|e| key_error(&e).expect("class validation names its key"))?;
    let raw = ov.raw_table_td || la.raw_table_td.unwrap_or(false);
    let mut laa = LaaParams::for_class(class, la.rate_mbps.unwrap_or(DEFAULT_RATE_L), raw);
    set!(la, laa, t_d_us, w0, m, e_l, txop_us, d_lte_us, control_symbols);

    let mut solver = SolverControls::default();
    set!(
        so, solver, damping, tol, max_iter, grid_coarse_us, grid_fine_us, m_laa_search_cap,
        snap_txop_grid
    );
    solver.snap_txop_grid |= ov.snap_txop_grid;

    let pairs = sc.n_pairs.unwrap_or(DEFAULT_PAIRS);
    let mut s = Scenario::new(sc.n_wifi.unwrap_or(pairs), sc.n_laa.unwrap_or(pairs), wifi, laa);
    if let Some(b) = sc.baseline_n {
        s.baseline_n = b;
    }
    s.solver = solver;
    s.validate().map_err(|e| {
        key_error(&e).unwrap_or_else(|| ConfigError {
            key: None,
            message: e.to_string(),
        })
    })?;
    Ok(s)
}

/// Fully explicit config reproducing `s` when resolved again.
pub fn echo(s: &Scenario) -> ConfigFile {
    let w = &s.wifi;
    let l = &s.laa;
    let c = &s.solver;
    ConfigFile {
        scenario: Some(ScenarioSection {
            n_pairs: None,
            n_wifi: Some(s.n_w),
            n_laa: Some(s.n_l),
            baseline_n: Some(s.baseline_n),
        }),
        wifi: Some(WifiSection {
            mode: Some(w.mode),
            n_mpdu: Some(w.n_mpdu),
            w0: Some(w.w0),
            m: Some(w.m),
            difs_us: Some(w.difs_us),
            sifs_us: Some(w.sifs_us),
            slot_us: Some(w.slot_us),
            phy_header_us: Some(w.phy_header_us),
            mac_header_bytes: Some(w.mac_header_bytes),
            control_preamble_us: Some(w.control_preamble_us),
            ack_bytes: Some(w.ack_bytes),
            bar_bytes: Some(w.bar_bytes),
            ba_bytes: Some(w.ba_bytes),
            payload_bytes: Some(w.payload_bytes),
            rate_data_mbps: Some(w.rate_data_mbps),
            rate_basic_mbps: Some(w.rate_basic_mbps),
            prop_delay_us: Some(w.prop_delay_us),
            add_prop_delay: Some(w.add_prop_delay),
        }),
        laa: Some(LaaSection {
            priority_class: Some(l.priority_class.class),
            direction: Some(l.priority_class.direction),
            raw_table_td: None,
            t_d_us: Some(l.t_d_us),
            w0: Some(l.w0),
            m: Some(l.m),
            e_l: Some(l.e_l),
            txop_us: Some(l.txop_us),
            d_lte_us: Some(l.d_lte_us),
            rate_mbps: Some(l.rate_mbps),
            control_symbols: Some(l.control_symbols),
        }),
        solver: Some(SolverSection {
            damping: Some(c.damping),
            tol: Some(c.tol),
            max_iter: Some(c.max_iter),
            grid_coarse_us: Some(c.grid_coarse_us),
            grid_fine_us: Some(c.grid_fine_us),
            m_laa_search_cap: Some(c.m_laa_search_cap),
            snap_txop_grid: Some(c.snap_txop_grid),
        }),
    }
}

pub fn echo_toml(s: &Scenario) -> String {
    toml::to_string(&echo(s)).expect("config sections serialize")
}
