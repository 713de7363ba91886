use std::path::Path;
use std::process::{Command, Output};

use coexfair_core::{solve_coexistence, Scenario};
use serde_json::Value;

const GOLDEN: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/golden");

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coexfair"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Header comment lines and the CSV body of an output file.
fn split(text: &str) -> (Vec<&str>, Vec<Vec<String>>) {
    let comments = text.lines().filter(|l| l.starts_with('#')).collect();
    let body: String = text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect();
    let rows = csv::Reader::from_reader(body.as_bytes());
    let mut r = rows;
    let mut out = vec![r.headers().unwrap().iter().map(str::to_string).collect()];
    for rec in r.records() {
        out.push(rec.unwrap().iter().map(str::to_string).collect());
    }
    (comments, out)
}

fn column(table: &[Vec<String>], name: &str) -> Vec<String> {
    let i = table[0].iter().position(|c| c == name).unwrap_or_else(|| panic!("no column {name}"));
    table[1..].iter().map(|r| r[i].clone()).collect()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn solve_matches_golden_file() {
    let cfg = format!("{GOLDEN}/class3_n5.toml");
    let got = stdout(&run(&["--config", &cfg, "solve"]));
    let want = std::fs::read_to_string(format!("{GOLDEN}/solve_class3_n5.csv")).unwrap();
    let (gc, gt) = split(&got);
    let (wc, wt) = split(&want);
    assert_eq!(gc, wc);
    assert_eq!(gt[0], wt[0]);
    for (name, (g, w)) in gt[0].iter().zip(gt[1].iter().zip(&wt[1])) {
        let (g, w): (f64, f64) = (g.parse().unwrap(), w.parse().unwrap());
        if name == "residual" {
            assert!(g <= 1e-10);
        } else {
            assert!((g - w).abs() <= 1e-8 * w.abs().max(1.0), "{name}: {g} vs {w}");
        }
    }
}

#[test]
fn output_starts_with_resolved_scenario() {
    let text = stdout(&run(&["solve"]));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "# coexfair solve");
    assert!(lines.contains(&"# resolved scenario:"));
    assert!(lines.contains(&"# [solver]"));
    let tol = lines.iter().find_map(|l| l.strip_prefix("# tol = ")).unwrap();
    assert_eq!(tol.parse::<f64>().unwrap(), 1e-10);
}

#[test]
fn echoed_scenario_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "a.toml", "[scenario]\nn_pairs = 3\n[laa]\npriority_class = 4\ntxop_us = 5000.0\n");
    let first = stdout(&run(&["--config", &cfg, "throughput"]));
    let echo: String = first
        .lines()
        .skip_while(|l| *l != "# resolved scenario:")
        .skip(1)
        .take_while(|l| l.starts_with('#'))
        .map(|l| format!("{}\n", l.trim_start_matches('#').trim_start()))
        .collect();
    let cfg2 = write(dir.path(), "echo.toml", &echo);
    let second = stdout(&run(&["--config", &cfg2, "throughput"]));
    assert_eq!(first, second);
}

#[test]
fn sweep_puts_the_variable_first_and_keeps_order() {
    let text = stdout(&run(&[
        "sweep", "--var", "n_pairs", "--from", "1", "--to", "6", "--step", "1", "--what", "throughput",
    ]));
    let (_, t) = split(&text);
    assert_eq!(t[0][0], "n_pairs");
    let rest: Vec<&String> = t[0][1..].iter().collect();
    let mut sorted = rest.clone();
    sorted.sort();
    assert_eq!(rest, sorted);
    assert_eq!(column(&t, "n_pairs"), ["1", "2", "3", "4", "5", "6"]);
}

#[test]
fn csv_round_trips_to_nine_digits_and_json_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "[scenario]\nn_pairs = 7\n[laa]\npriority_class = 2\n");
    let csv_text = stdout(&run(&["--config", &cfg, "solve"]));
    let json_text = stdout(&run(&["--config", &cfg, "--format", "json", "solve"]));
    let doc: Value = serde_json::from_str(&json_text).unwrap();
    let row = &doc["rows"][0];

    let s = Scenario::pairs(7, 2, 9.0, 7.8).unwrap();
    let sol = solve_coexistence(&s).unwrap();
    assert_eq!(row["tau_w"].as_f64().unwrap().to_bits(), sol.tau_w.to_bits());
    assert_eq!(row["tau_l"].as_f64().unwrap().to_bits(), sol.tau_l.to_bits());
    assert_eq!(row["p_cw"].as_f64().unwrap().to_bits(), sol.p_cw.to_bits());

    let (_, t) = split(&csv_text);
    for name in &t[0] {
        let c: f64 = column(&t, name)[0].parse().unwrap();
        let j = row[name].as_f64().unwrap();
        assert!((c - j).abs() <= 5e-9 * j.abs(), "{name}: {c} vs {j}");
        let sig: Vec<char> = column(&t, name)[0]
            .chars()
            .take_while(|ch| *ch != 'e')
            .filter(char::is_ascii_digit)
            .skip_while(|ch| *ch == '0')
            .collect();
        assert!(sig.len() <= 9, "{name}");
    }
    let cols: Vec<&str> = doc["columns"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert_eq!(cols, t[0].iter().map(String::as_str).collect::<Vec<_>>());
}

#[test]
fn figure_six_tunes_class_one_to_zero_txop() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("f6");
    let listing = stdout(&run(&["reproduce-figure", "6", "--out", out.to_str().unwrap()]));
    assert_eq!(listing.lines().count(), 4);
    let text = std::fs::read_to_string(out.join("class1.csv")).unwrap();
    assert!(text.contains("assumed range"));
    let (_, t) = split(&text);
    assert_eq!(column(&t, "n_pairs"), (1..=10).map(|n| n.to_string()).collect::<Vec<_>>());
    let txop = column(&t, "optimized_txop_us");
    for (n, v) in txop.iter().enumerate().skip(1) {
        assert_eq!(v, "0", "n = {}", n + 1);
    }
    let silent = column(&t, "laa_silent");
    assert!(silent[1..].iter().all(|s| s == "true"));
}

#[test]
fn figure_seven_has_wifi_only_curve() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("f7");
    stdout(&run(&["reproduce-figure", "7", "--out", out.to_str().unwrap()]));
    let (_, t) = split(&std::fs::read_to_string(out.join("wifi_only.csv")).unwrap());
    let per_user: Vec<f64> = column(&t, "per_user_wifi_only").iter().map(|v| v.parse().unwrap()).collect();
    assert_eq!(per_user.len(), 10);
    assert!(per_user.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn vht_figure_writes_a_curve_per_aggregation() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("f14");
    let listing = stdout(&run(&["reproduce-figure", "14", "--out", out.to_str().unwrap()]));
    assert_eq!(listing.lines().count(), 8);
    assert!(out.join("class4_nmpdu4.csv").exists());
}

#[test]
fn simulation_is_reproducible_from_the_seed() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = vec![];
    for run_no in 0..2 {
        let log = dir.path().join(format!("events{run_no}.log"));
        let text = stdout(&run(&[
            "simulate", "--seed", "42", "--slots", "20000", "--event-log", log.to_str().unwrap(),
        ]));
        outputs.push((text, std::fs::read(&log).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);
    assert!(!outputs[0].1.is_empty());
    let other = stdout(&run(&["simulate", "--seed", "43", "--slots", "20000"]));
    assert_ne!(outputs[0].0, other);
}

#[test]
fn unknown_key_exits_one_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", "[laa]\ntxop_ms = 4\n");
    let o = run(&["--config", &cfg, "solve"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("laa.txop_ms"));
}

#[test]
fn invalid_value_exits_one_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", "[wifi]\nw0 = 0\n");
    let o = run(&["--config", &cfg, "throughput"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("wifi.w0"));
}

#[test]
fn bad_arguments_exit_one() {
    assert_eq!(run(&["fairness", "--mode", "bogus"]).status.code(), Some(1));
    assert_eq!(run(&["reproduce-figure", "3"]).status.code(), Some(1));
    assert_eq!(run(&["sweep", "--var", "n_pairs", "--from", "3", "--to", "1", "--step", "1"]).status.code(), Some(1));
}

#[test]
fn numerical_failure_exits_two_with_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "num.toml", "[solver]\ntol = 1e-300\nmax_iter = 3\n");
    let o = run(&["--config", &cfg, "solve"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("numerical failure"), "{err}");
    assert!(err.contains("[scenario]") && err.contains("max_iter = 3"), "{err}");
}
