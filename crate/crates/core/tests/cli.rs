use std::process::{Command, Output};

use serde_json::Value;

fn mginf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mginf"))
        .args(args)
        .env("NO_COLOR", "1")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn block<'a>(csv: &'a str, name: &str) -> Vec<&'a str> {
    csv.split("\n\n")
        .find(|b| b.starts_with(&format!("# {name}\n")))
        .unwrap_or_else(|| panic!("no block {name}"))
        .lines()
        .skip(2)
        .collect()
}

#[test]
fn pme_table_and_moments() {
    let out = stdout(&mginf(&["pme", "--r", "3", "--grid", "0:10:100"]));
    assert_eq!(block(&out, "density").len(), 100);
    let moments = block(&out, "moments");
    let value = |n: usize| moments[n - 1].split(',').nth(1).unwrap().to_string();
    assert_eq!(value(1).parse::<f64>().unwrap(), 1.0);
    assert!((value(2).parse::<f64>().unwrap() - 2.6667).abs() < 1e-4);
    assert_eq!(value(3), "inf");
    assert!(out.lines().any(|l| l == "t [time],pdf [1/time],tail [dimensionless]"));
}

#[test]
fn invalid_shape_exits_with_two() {
    let o = mginf(&["pme", "--r", "1"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8(o.stderr).unwrap();
    assert_eq!(err.lines().count(), 1);
    assert!(err.contains("r must exceed 1"));
    assert!(!err.contains('\x1b'));
    assert_eq!(mginf(&["pme", "--r", "2", "--grid", "1:0:3"]).status.code(), Some(2));
    assert_eq!(mginf(&["busy", "--lambda", "-1", "--service", "exp:1"]).status.code(), Some(2));
    assert_eq!(mginf(&["pme"]).status.code(), Some(2));
}

#[test]
fn pme_json_keys() {
    let out = stdout(&mginf(&["pme", "--r", "2", "--format", "json", "--grid", "0:5:11"]));
    let v: Value = serde_json::from_str(&out).unwrap();
    for key in ["grid", "pdf", "tail", "moments"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    assert_eq!(v["grid"].as_array().unwrap().len(), 11);
    assert_eq!(v["moments"][1]["value"], Value::String("inf".into()));
}

#[test]
fn csv_and_json_carry_identical_numbers() {
    let args = ["lt", "--r", "2.5", "--grid", "1e-2:1e2:9", "--log"];
    let csv = stdout(&mginf(&args));
    let json: Value = serde_json::from_str(&stdout(&mginf(&[&args[..], &["--format", "json"]].concat()))).unwrap();
    let rows = block(&csv, "transforms");
    for (i, row) in rows.iter().enumerate() {
        let cells: Vec<f64> = row.split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(cells[0], json["grid"][i].as_f64().unwrap());
        assert_eq!(cells[1], json["g_hat"][i].as_f64().unwrap());
        assert_eq!(cells[2], json["h_hat"][i].as_f64().unwrap());
    }
}

#[test]
fn lt_examples() {
    let out = stdout(&mginf(&["lt", "--r", "2", "--grid", "0:1:2", "--max-order", "1"]));
    let rows = block(&out, "transforms");
    let at = |i: usize, j: usize| rows[i].split(',').nth(j).unwrap().to_string();
    assert_eq!(at(0, 1).parse::<f64>().unwrap(), 1.0);
    assert!((at(1, 1).parse::<f64>().unwrap() - 0.549306).abs() < 1e-6);
    let limits = block(&out, "limits_at_zero");
    assert_eq!(limits[1], "1,-inf");
}

#[test]
fn busy_reports_mean_side_by_side() {
    let out = stdout(&mginf(&["busy", "--lambda", "1", "--service", "exp:1", "--grid", "1e-3:5:20", "--log"]));
    let summary = block(&out, "summary");
    let get = |k: &str| -> f64 {
        summary
            .iter()
            .find(|l| l.starts_with(&format!("{k},")))
            .unwrap()
            .split(',')
            .nth(1)
            .unwrap()
            .parse()
            .unwrap()
    };
    assert!((get("u0") - 1.71828).abs() < 1e-5);
    assert!((get("u0") - get("reference_mean")).abs() < 1e-6);
    let first: f64 = block(&out, "busy_tail")[0].split(',').nth(1).unwrap().parse().unwrap();
    assert!(first > 0.99);
}

#[test]
fn recover_classifies_moments() {
    let out = stdout(&mginf(&[
        "recover", "--r", "2", "--lambda", "1", "--grid", "1e-3:1e4:300", "--log", "--max-order", "2", "--format", "json",
    ]));
    let v: Value = serde_json::from_str(&out).unwrap();
    let alpha = v["summary"]["implied_alpha"].as_f64().unwrap();
    assert!((alpha - std::f64::consts::LN_2).abs() < 1e-4);
    let m = v["equilibrium_moments"].as_array().unwrap();
    assert_eq!(m[0]["class"], "finite");
    assert!((m[0]["m_T"].as_f64().unwrap() - 1.0).abs() < 2e-2);
    assert_eq!(m[2]["class"], "divergent");
}

#[test]
fn sim_is_reproducible_and_writes_files() {
    let dir = std::env::temp_dir().join(format!("mginf-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let a = dir.join("a.csv");
    let b = dir.join("b.csv");
    for path in [&a, &b] {
        let o = mginf(&[
            "sim", "--lambda", "1", "--service", "exp:1", "--n", "5000", "--seed", "9", "--grid", "0.1:10:30",
            "--output", path.to_str().unwrap(),
        ]);
        assert!(o.status.success());
        assert!(o.stdout.is_empty());
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    assert!(text.contains("busy_periods,5000"));
    assert!(!text.contains('\r'));
    std::fs::remove_dir_all(&dir).unwrap();
}
