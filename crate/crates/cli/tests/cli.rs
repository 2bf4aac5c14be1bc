use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_reserve-insure"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().unwrap()
}

fn stdout_json(o: &Output) -> Value {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

fn worked_example(dir: &Path) {
    std::fs::write(dir.join("p.csv"), "hour,price_usd_per_mwh\n0,10\n1,40\n").unwrap();
    std::fs::write(
        dir.join("m.json"),
        r#"{"slots":[{"mu":10,"sigma":2},{"mu":10,"sigma":2}],"capacity":40}"#,
    )
    .unwrap();
}

#[test]
fn contract_reports_the_interval() {
    let t = tempfile::tempdir().unwrap();
    worked_example(t.path());
    let o = run(t.path(), &["contract", "--prices", "p.csv", "--model", "m.json", "--slots", "2"]);
    let v = stdout_json(&o);
    let iv = &v["summary"]["intervals"][0];
    assert_eq!(iv["cap"].as_f64().unwrap(), 40.0);
    assert!((iv["floor"].as_f64().unwrap() - 39.37192407293363).abs() < 1e-9);
    let csv = std::fs::read_to_string(t.path().join("out/contract.csv")).unwrap();
    assert!(csv.starts_with("date,status,"));
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let t = tempfile::tempdir().unwrap();
    worked_example(t.path());
    std::fs::write(
        t.path().join("run.json"),
        r#"{"prices":"p.csv","model":"m.json","slots":2,"out":"cfg-out",
            "storage":{"e_max":12,"cost_coeff":7}}"#,
    )
    .unwrap();
    let o = run(t.path(), &["classify", "--config", "run.json", "--cost-coeff", "1"]);
    let v = stdout_json(&o);
    assert_eq!(v["summary"]["days"], 1);
    let csv = std::fs::read_to_string(t.path().join("cfg-out/classify.csv")).unwrap();
    // c = 1 → lower bound 1 − 2/40
    assert!(csv.contains(",0.95,"), "{csv}");
}

#[test]
fn failures_emit_error_json() {
    let t = tempfile::tempdir().unwrap();
    let o = run(t.path(), &["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
    let v: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(v["error"]["kind"], "usage");

    let o = run(t.path(), &["bid", "--prices", "missing.csv", "--model", "m.json"]);
    assert_eq!(o.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(v["error"]["kind"], "data");

    std::fs::write(t.path().join("bad.json"), "{\"bogus\": 1}").unwrap();
    let o = run(t.path(), &["network", "--config", "bad.json"]);
    assert_eq!(o.status.code(), Some(1));

    let o = bin()
        .current_dir(t.path())
        .env("RESERVE_INSURE_THREADS", "zero")
        .args(["network"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_hour_is_reported() {
    let t = tempfile::tempdir().unwrap();
    let mut s = String::from("hour,price_usd_per_mwh\n");
    for h in (0..24).filter(|h| *h != 13) {
        s += &format!("{h},30\n");
    }
    std::fs::write(t.path().join("p.csv"), s).unwrap();
    std::fs::write(
        t.path().join("m.json"),
        format!(r#"{{"slots":[{}],"capacity":40}}"#, vec![r#"{"mu":10,"sigma":2}"#; 24].join(",")),
    )
    .unwrap();
    let o = run(t.path(), &["bid", "--prices", "p.csv", "--model", "m.json"]);
    let v: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert!(v["error"]["message"].as_str().unwrap().contains("missing hour 13"));
}

#[test]
fn fit_then_bid_round_trip() {
    let t = tempfile::tempdir().unwrap();
    let mut w = String::from("timestamp,power_mw\n");
    for d in 1..=5 {
        for h in 0..24 {
            w += &format!("2018-07-{d:02}T{h:02}:00:00,{}\n", 10.0 + ((h * d) % 7) as f64);
        }
    }
    w += "2018-07-06T00:00:00,-1\n";
    std::fs::write(t.path().join("w.csv"), w).unwrap();
    let v = stdout_json(&run(t.path(), &["fit", "--wind", "w.csv", "--capacity", "40"]));
    assert_eq!(v["summary"]["warnings"], 1);
    let mut p = String::from("date,hour,price_usd_per_mwh\n");
    for h in 0..24 {
        p += &format!("2018-07-09,{h},{}\n", 20 + h);
    }
    std::fs::write(t.path().join("p.csv"), p).unwrap();
    stdout_json(&run(t.path(), &["bid", "--prices", "p.csv", "--model", "out/model.json"]));
    let mut rdr = csv::Reader::from_path(t.path().join("out/bids.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 24);
    let reserve: f64 = rows[23][8].parse().unwrap();
    assert_eq!(reserve, 12.0);
    stdout_json(&run(t.path(), &["twoway", "--prices", "p.csv", "--model", "out/model.json"]));
}

#[test]
fn simulate_is_deterministic() {
    let t = tempfile::tempdir().unwrap();
    let args = |out: &'static str| {
        vec!["simulate", "--synthetic-year", "2018", "--months", "1,6", "--scenarios", "30", "--seed", "7", "--out", out, "--svg"]
    };
    stdout_json(&run(t.path(), &args("a")));
    stdout_json(&run(t.path(), &args("b")));
    for f in ["report.csv", "days.csv", "calendar.csv", "share.csv", "profit.svg"] {
        let a = std::fs::read(t.path().join("a").join(f)).unwrap();
        let b = std::fs::read(t.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }
    let text = std::fs::read_to_string(t.path().join("a/report.csv")).unwrap();
    let rows = reserve_insure::scenario::parse_report_csv(&text).unwrap();
    assert_eq!(rows.len(), 2 * 16);
}
