use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use cubic_lab::numeric::ZETA3;
use cubic_lab::randmodel::family_tau_range_end;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cubic-lab")).args(args).output().expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn rows(text: &str) -> Vec<Vec<String>> {
    text.lines().map(|l| l.split(',').map(str::to_string).collect()).collect()
}

fn column(table: &[Vec<String>], name: &str) -> Vec<String> {
    let i = table[0].iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
    table[1..].iter().map(|r| r[i].clone()).collect()
}

#[test]
fn constants_report() {
    let text = stdout(&["constants"]);
    assert!(text.contains("c_max,0.98727"), "{text}");
    let table = rows(&text);
    let c3: f64 = table.iter().find(|r| r[0] == "c_ell_3").unwrap()[1].parse().unwrap();
    assert!((c3 * c3 - ZETA3).abs() < 1e-8);
    for name in ["c_min", "zeta3", "zeta2", "euler_gamma", "quad_tol"] {
        assert!(table.iter().any(|r| r[0] == name), "{name}");
    }
}

#[test]
fn json_and_csv_carry_the_same_numbers() {
    let csv = rows(&stdout(&["constants", "--ell", "3,5,7"]));
    let json: serde_json::Value = serde_json::from_str(&stdout(&["--format", "json", "constants", "--ell", "3,5,7"])).unwrap();
    let arr = json.as_array().unwrap();
    assert_eq!(arr.len(), csv.len() - 1);
    for (r, j) in csv[1..].iter().zip(arr) {
        assert_eq!(j["name"].as_str().unwrap(), r[0]);
        assert_eq!(j["value"].as_f64().unwrap(), r[1].parse::<f64>().unwrap());
    }
}

fn lvalue_rows(dir: &Path) -> Vec<Vec<String>> {
    rows(&fs::read_to_string(dir.join("lvalues.csv")).unwrap())
}

#[test]
fn family_dumps() {
    let tmp = tempfile::tempdir().unwrap();
    let d100 = tmp.path().join("x100");
    stdout(&["family", "--x", "100", "--out", d100.to_str().unwrap()]);
    assert_eq!(lvalue_rows(&d100).len() - 1, 26);
    assert!(d100.join("slice.csv").exists() && d100.join("tails.csv").exists());

    let d10 = tmp.path().join("x10");
    stdout(&["family", "--x", "10", "--out", d10.to_str().unwrap()]);
    let lv = lvalue_rows(&d10);
    assert_eq!(lv.len() - 1, 2);
    assert_eq!(column(&lv, "abs")[0], column(&lv, "abs")[1]);
}

#[test]
fn family_rerun_from_cache_is_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cache = tmp.path().join("cache.csv");
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let args = |dir: &Path| {
        vec![
            "family".to_string(),
            "--x".into(),
            "3000".into(),
            "--trunc".into(),
            "100000".into(),
            "--cache".into(),
            cache.to_str().unwrap().into(),
            "--out".into(),
            dir.to_str().unwrap().into(),
        ]
    };
    let first: Vec<String> = args(&a);
    let second: Vec<String> = args(&b);
    let s1 = stdout(&first.iter().map(String::as_str).collect::<Vec<_>>());
    assert!(cache.exists());
    let s2 = stdout(&second.iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(s1, s2);
    for f in ["slice.csv", "lvalues.csv", "tails.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn compare_table() {
    let x = 5000u64;
    let text = stdout(&[
        "compare", "--x", "5000", "--method", "euler", "--y", "1000", "--samples", "50000", "--tau", "1:2.5:0.25",
    ]);
    let table = rows(&text);
    assert_eq!(table[0].join(","), "tau,phi_family,phi_mc,phi_mc_se,phi_saddle,phi_asym,in_thm13_range");
    let end = family_tau_range_end(x as f64);
    for (tau, flag) in column(&table, "tau").iter().zip(column(&table, "in_thm13_range")) {
        let tau: f64 = tau.parse().unwrap();
        assert_eq!(flag == "true", (1.0..=end).contains(&tau));
        if end < 2.0 && tau >= 2.0 {
            assert_eq!(flag, "false");
        }
    }
    for name in ["phi_family", "phi_mc", "phi_saddle", "phi_asym"] {
        let v: Vec<f64> = column(&table, name).iter().filter_map(|s| s.parse().ok()).collect();
        assert!(v.windows(2).all(|w| w[1] <= w[0]), "{name}: {v:?}");
    }
}

#[test]
fn moments_table() {
    let text = stdout(&["moments", "--y", "13", "--z", "-1,0.5,1", "--x", "300", "--trunc", "30000"]);
    let table = rows(&text);
    assert_eq!(table[0].join(","), "z,y,double_sum,euler_product,rel_diff,family,family_rel_diff");
    for r in column(&table, "rel_diff") {
        assert!(r.parse::<f64>().unwrap() < 1e-6, "{r}");
    }
    // too many split primes for the double sum: the column is left blank
    let wide = rows(&stdout(&["moments", "--y", "1000", "--z", "1"]));
    assert_eq!(column(&wide, "double_sum"), vec![String::new()]);
    assert!(column(&wide, "euler_product")[0].parse::<f64>().is_ok());
}

#[test]
fn montecarlo_is_deterministic() {
    let args = ["montecarlo", "--y", "500", "--samples", "20000", "--tau", "1:4:1", "--side", "min"];
    let a = stdout(&args);
    assert_eq!(a, stdout(&args));
    let table = rows(&a);
    assert_eq!(table[0].join(","), "tau,side,estimate,stderr,n,seed,y");
    assert!(column(&table, "seed").iter().all(|s| s == "24301"));
    assert_eq!(column(&table, "estimate").last().unwrap(), "too_few_hits");
}

#[test]
fn help_documents_units() {
    for sub in ["constants", "family", "compare", "moments", "montecarlo"] {
        let h = stdout(&[sub, "--help"]);
        assert!(h.contains("e^gamma * tau") && h.contains("(zeta(3)/e^gamma)^(1/2) / tau"), "{sub}");
    }
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["montecarlo", "--tau", "0"]).status.code(), Some(2));
    assert_eq!(run(&["montecarlo", "--y", "1"]).status.code(), Some(2));
    assert_eq!(run(&["montecarlo", "--samples", "1000000000"]).status.code(), Some(3));
    assert_eq!(run(&["family", "--x", "90000000", "--out", "/nonexistent"]).status.code(), Some(3));
    assert_eq!(run(&["constants", "--ell", "4"]).status.code(), Some(2));
    assert_eq!(run(&["no-such-command"]).status.code(), Some(2));
}
