//! Tables of results written as CSV or JSON, each prefixed by the resolved
//! scenario so the file describes its own run.

use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use coexfair_core::Scenario;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::config;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// One result row: the sweep value (if any) and the flattened outputs.
#[derive(Debug, Clone)]
pub struct Row {
    pub key: Option<Value>,
    pub values: Map<String, Value>,
}

#[derive(Debug, Clone)]
pub struct Table {
    pub command: String,
    pub notes: Vec<String>,
    pub scenario: Scenario,
    pub sweep: Option<String>,
    pub rows: Vec<Row>,
}

/// Flatten a serializable value into `prefix_field` keys; nested objects
/// are joined with `_`, arrays are kept whole.
pub fn flatten<T: Serialize>(value: &T) -> Map<String, Value> {
    let mut out = Map::new();
    let v = serde_json::to_value(value).expect("results serialize to JSON");
    flatten_into("", v, &mut out);
    out
}

fn flatten_into(prefix: &str, v: Value, out: &mut Map<String, Value>) {
    match v {
        Value::Object(map) => {
            for (k, inner) in map {
                let name = if prefix.is_empty() { k } else { format!("{prefix}_{k}") };
                flatten_into(&name, inner, out);
            }
        }
        other => {
            out.insert(prefix.to_string(), other);
        }
    }
}

/// `%.9g`-style rendering: nine significant digits, trailing zeros dropped.
pub fn fmt_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let fixed = format!("{:.*}", (8 - exp) as usize, x);
        trim_zeros(&fixed).to_string()
    } else {
        format!("{}e{exp}", trim_zeros(mantissa))
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn cell(v: &Value) -> Option<String> {
    match v {
        Value::Null => Some(String::new()),
        Value::Bool(b) => Some(b.to_string()),
        Value::Number(n) => Some(if let Some(i) = n.as_i64() {
            i.to_string()
        } else if let Some(u) = n.as_u64() {
            u.to_string()
        } else {
            fmt_sig9(n.as_f64().expect("finite number"))
        }),
        Value::String(s) => Some(s.clone()),
        Value::Array(_) | Value::Object(_) => None,
    }
}

impl Table {
    pub fn single(command: &str, scenario: &Scenario, values: Map<String, Value>) -> Self {
        Self {
            command: command.to_string(),
            notes: vec![],
            scenario: scenario.clone(),
            sweep: None,
            rows: vec![Row { key: None, values }],
        }
    }

    /// Output columns in order: sweep variable, then scalar outputs
    /// alphabetically.
    pub fn columns(&self) -> Vec<String> {
        let mut names = std::collections::BTreeSet::new();
        for r in &self.rows {
            for (k, v) in &r.values {
                if cell(v).is_some() {
                    names.insert(k.clone());
                }
            }
        }
        self.sweep.iter().cloned().chain(names).collect()
    }

    fn header_lines(&self) -> Vec<String> {
        let mut lines = vec![format!("coexfair {}", self.command)];
        lines.extend(self.notes.iter().cloned());
        lines.push("resolved scenario:".into());
        lines.extend(config::echo_toml(&self.scenario).lines().map(str::to_string));
        lines
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for l in self.header_lines() {
            out.push_str(if l.is_empty() { "#" } else { "# " });
            out.push_str(&l);
            out.push('\n');
        }
        let columns = self.columns();
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&columns).expect("in-memory write");
        for r in &self.rows {
            let record: Vec<String> = columns
                .iter()
                .map(|c| {
                    let v = if Some(c) == self.sweep.as_ref() {
                        r.key.as_ref()
                    } else {
                        r.values.get(c)
                    };
                    v.and_then(cell).unwrap_or_default()
                })
                .collect();
            w.write_record(&record).expect("in-memory write");
        }
        out.push_str(&String::from_utf8(w.into_inner().expect("flush")).expect("utf-8"));
        out
    }

    pub fn to_json(&self) -> String {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                let mut m = Map::new();
                if let (Some(name), Some(k)) = (&self.sweep, &r.key) {
                    m.insert(name.clone(), k.clone());
                }
                m.extend(r.values.clone());
                Value::Object(m)
            })
            .collect();
        let doc = json!({
            "command": self.command,
            "notes": self.notes,
            "scenario": config::echo(&self.scenario),
            "columns": self.columns(),
            "rows": rows,
        });
        let mut s = serde_json::to_string_pretty(&doc).expect("JSON values serialize");
        s.push('\n');
        s
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }

    /// Write to `path`, or to stdout when no path is given.
    pub fn emit(&self, format: Format, path: Option<&Path>) -> Result<()> {
        let text = self.render(format);
        match path {
            Some(p) => write_file(p, &text),
            None => {
                std::io::stdout().write_all(text.as_bytes()).context("writing to stdout")?;
                Ok(())
            }
        }
    }
}

pub fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(fmt_sig9(0.0), "0");
        assert_eq!(fmt_sig9(1.0), "1");
        assert_eq!(fmt_sig9(2.0 / 17.0), "0.117647059");
        assert_eq!(fmt_sig9(-1234.5), "-1234.5");
        assert_eq!(fmt_sig9(123456789.4), "123456789");
        assert_eq!(fmt_sig9(1.5e-12), "1.5e-12");
        assert_eq!(fmt_sig9(6.02214076e23), "6.02214076e23");
        assert_eq!(fmt_sig9(0.000123456789123), "0.000123456789");
        for x in [2.0 / 17.0, 1.0 / 3.0, 8.14e-7, 6000.0, 3.0e15] {
            let back: f64 = fmt_sig9(x).parse().unwrap();
            assert!((back - x).abs() <= 5e-9 * x.abs());
        }
    }

    #[test]
    fn flatten_joins_nested_keys() {
        let m = flatten(&json!({"a": 1, "b": {"c": 2.5, "d": [1, 2]}}));
        let keys: Vec<&String> = m.keys().collect();
        assert_eq!(keys, ["a", "b_c", "b_d"]);
    }

    #[test]
    fn sweep_column_comes_first() {
        let s = Scenario::pairs(1, 3, 9.0, 7.8).unwrap();
        let mut values = Map::new();
        values.insert("zeta".into(), json!(1.0));
        values.insert("alpha".into(), json!(2));
        let t = Table {
            command: "sweep".into(),
            notes: vec![],
            scenario: s,
            sweep: Some("txop_us".into()),
            rows: vec![Row {
                key: Some(json!(100.0)),
                values,
            }],
        };
        assert_eq!(t.columns(), ["txop_us", "alpha", "zeta"]);
        let csv = t.to_csv();
        let body: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(body, ["txop_us,alpha,zeta", "100,2,1"]);
    }
}
