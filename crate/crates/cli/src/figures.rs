//! Figure data sets. Each figure is a node-count sweep (1..10 pairs) per
//! priority class; every curve goes to its own CSV (or JSON) file.
//!
//! | figure | content                                         | rates (Mbps) |
//! |--------|-------------------------------------------------|--------------|
//! | 6      | 3gpp-fair TXOP                                  | 9 / 7.8      |
//! | 7      | 3gpp-fair per-user Wi-Fi, plus Wi-Fi-only curve | 9 / 7.8      |
//! | 8      | 3gpp-fair per-user LAA                          | 9 / 7.8      |
//! | 9      | access-fair m'                                  | 9 / 7.8      |
//! | 10     | proportional-fair TXOP                          | 9 / 7.8      |
//! | 11     | proportional-fair per-user throughputs          | 9 / 7.8      |
//! | 12     | 3gpp-fair TXOP and per-user throughputs         | 54 / 70.2    |
//! | 13     | proportional-fair TXOP and throughputs          | 54 / 70.2    |
//! | 14     | 3gpp-fair, VHT Wi-Fi, N_MPDU 2 and 4            | 78 / 70.2    |
//! | 15     | proportional-fair, VHT Wi-Fi, N_MPDU 2 and 4    | 78 / 70.2    |

use std::path::{Path, PathBuf};

use coexfair_core::{
    fairness, wifi_only_throughput, FairnessMode, LaaParams, PriorityClass, Scenario, WiFiParams,
};
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::output::{flatten, write_file, Format, Row, Table};
use crate::Failure;

pub const NODE_RANGE: std::ops::RangeInclusive<u32> = 1..=10;

struct Figure {
    mode: FairnessMode,
    rate_w: f64,
    rate_l: f64,
    /// `None` for basic-mode Wi-Fi.
    vht_mpdus: Option<&'static [u32]>,
    wifi_only_curve: bool,
}

fn figure(n: u32) -> Option<Figure> {
    use FairnessMode::*;
    let f = |mode, rate_w, rate_l| Figure {
        mode,
        rate_w,
        rate_l,
        vht_mpdus: None,
        wifi_only_curve: false,
    };
    Some(match n {
        6 | 8 => f(ThreeGpp, 9.0, 7.8),
        7 => Figure {
            wifi_only_curve: true,
            ..f(ThreeGpp, 9.0, 7.8)
        },
        9 => f(Access, 9.0, 7.8),
        10 | 11 => f(Proportional, 9.0, 7.8),
        12 => f(ThreeGpp, 54.0, 70.2),
        13 => f(Proportional, 54.0, 70.2),
        14 => Figure {
            vht_mpdus: Some(&[2, 4]),
            ..f(ThreeGpp, 78.0, 70.2)
        },
        15 => Figure {
            vht_mpdus: Some(&[2, 4]),
            ..f(Proportional, 78.0, 70.2)
        },
        _ => return None,
    })
}

fn scenario(base: &Scenario, n: u32, class: u8, wifi: &WiFiParams, rate_l: f64, raw: bool) -> Scenario {
    let pc = PriorityClass::dl(class).expect("classes 1..=4");
    let mut s = Scenario::new(n, n, wifi.clone(), LaaParams::for_class(pc, rate_l, raw));
    s.solver = base.solver.clone();
    s
}

fn write_curve(dir: &Path, name: &str, format: Format, table: &Table) -> Result<PathBuf, Failure> {
    let ext = match format {
        Format::Csv => "csv",
        Format::Json => "json",
    };
    let path = dir.join(format!("{name}.{ext}"));
    write_file(&path, &table.render(format))?;
    Ok(path)
}

/// Compute figure `n` and write its curves into `dir`; returns the paths.
pub fn reproduce(n: u32, base: &Scenario, raw: bool, format: Format, dir: &Path) -> Result<Vec<PathBuf>, Failure> {
    let fig = figure(n).ok_or_else(|| Failure::Config(format!("no figure {n}; available: 6..=15")))?;
    let wifis: Vec<(String, WiFiParams)> = match fig.vht_mpdus {
        None => vec![(String::new(), WiFiParams::basic(fig.rate_w))],
        Some(ms) => ms
            .iter()
            .map(|&k| (format!("_nmpdu{k}"), WiFiParams::vht(k, fig.rate_w)))
            .collect(),
    };
    let range_note = format!(
        "figure {n}: {} fairness, r_w = {} Mbps, r_l = {} Mbps; node range {}..{} pairs is an assumed range",
        fig.mode,
        fig.rate_w,
        fig.rate_l,
        NODE_RANGE.start(),
        NODE_RANGE.end()
    );
    let mut written = vec![];
    for (suffix, wifi) in &wifis {
        for class in 1..=4u8 {
            let rows: Vec<Row> = NODE_RANGE
                .into_par_iter()
                .map(|k| {
                    let s = scenario(base, k, class, wifi, fig.rate_l, raw);
                    let r = fairness(&s, fig.mode).map_err(|e| Failure::numerical(e, &s))?;
                    Ok(Row {
                        key: Some(json!(k)),
                        values: flatten(&r),
                    })
                })
                .collect::<Result<_, Failure>>()?;
            let table = Table {
                command: format!("reproduce-figure {n}"),
                notes: vec![range_note.clone(), format!("curve: priority class {class} DL{suffix}")],
                scenario: scenario(base, *NODE_RANGE.start(), class, wifi, fig.rate_l, raw),
                sweep: Some("n_pairs".into()),
                rows,
            };
            written.push(write_curve(dir, &format!("class{class}{suffix}"), format, &table)?);
        }
        if fig.wifi_only_curve {
            let s0 = scenario(base, *NODE_RANGE.start(), 3, wifi, fig.rate_l, raw);
            let rows: Vec<Row> = NODE_RANGE
                .map(|k| {
                    let total = wifi_only_throughput(2 * k, &s0).map_err(|e| Failure::numerical(e, &s0))?;
                    let mut values = Map::new();
                    values.insert("n_stations".into(), json!(2 * k));
                    values.insert("tput_wifi_only".into(), json!(total));
                    values.insert("per_user_wifi_only".into(), Value::from(total / f64::from(2 * k)));
                    Ok(Row {
                        key: Some(json!(k)),
                        values,
                    })
                })
                .collect::<Result<_, Failure>>()?;
            let table = Table {
                command: format!("reproduce-figure {n}"),
                notes: vec![range_note.clone(), "curve: Wi-Fi-only network of 2 * n_pairs stations".into()],
                scenario: s0,
                sweep: Some("n_pairs".into()),
                rows,
            };
            written.push(write_curve(dir, &format!("wifi_only{suffix}"), format, &table)?);
        }
    }
    Ok(written)
}
