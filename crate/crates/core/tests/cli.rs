use std::process::{Command, Output};

fn qfcert(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qfcert")).args(args).output().unwrap()
}

fn code(args: &[&str]) -> i32 {
    qfcert(args).status.code().unwrap()
}

fn sweep_rows(args: &[&str]) -> Vec<Vec<String>> {
    let out = qfcert(&[&["sweep"], args, &["--out", "-"]].concat());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut rdr = csv::Reader::from_reader(out.stdout.as_slice());
    rdr.records().map(|r| r.unwrap().iter().map(str::to_owned).collect()).collect()
}

#[test]
fn certify_exit_codes() {
    assert_eq!(code(&["certify", "--a", "4,1", "--b", "1,1", "--x", "10"]), 0);
    assert_eq!(code(&["certify", "--a", "1,1,1", "--b", "1.2,0.5,0.4", "--x", "1.0"]), 0);
    assert_eq!(code(&["certify", "--a", "1,1,1", "--b", "1.2,0.5,0.4", "--x", "2.0"]), 2);
    assert_eq!(code(&["certify", "--a", "0.5,0.5", "--b", "1,0.0001", "--x", "5"]), 3);
    assert_eq!(code(&["certify", "--a", "1,2", "--b", "1"]), 64);
    assert_eq!(code(&["certify", "--a", "1,2"]), 64);
    assert_eq!(code(&["cdf", "--w", "1", "--x", "1", "--method", "exact"]), 64);
}

#[test]
fn impossible_fixture_shows_reversal_at_five() {
    let out = qfcert(&["certify", "--a", "0.5,0.5", "--b", "1,0.0001", "--x", "5", "--oracle", "--json"]);
    assert_eq!(out.status.code(), Some(3));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["holds_at_x"], "impossible-all-x");
    assert_eq!(v["necessary_max"], false);
    let (ba, bb) = (&v["oracle_spotcheck"][0], &v["oracle_spotcheck"][1]);
    let lower_a = ba["value"].as_f64().unwrap() - ba["error_bound"].as_f64().unwrap();
    let upper_b = bb["value"].as_f64().unwrap() + bb["error_bound"].as_f64().unwrap();
    assert!(lower_a > upper_b);
}

#[test]
fn vectors_from_files() {
    let dir = tempfile::tempdir().unwrap();
    let (pa, pb) = (dir.path().join("a.txt"), dir.path().join("b.txt"));
    std::fs::write(&pa, "1 1\n1\n").unwrap();
    std::fs::write(&pb, "1.2\t0.5 0.4").unwrap();
    let a = format!("@{}", pa.display());
    let b = format!("@{}", pb.display());
    assert_eq!(code(&["certify", "--a", &a, "--b", &b, "--x", "1.0"]), 0);
    assert_eq!(code(&["certify", "--a", "@/nonexistent", "--b", &b]), 64);
}

#[test]
fn sweep_of_second_example() {
    let rows = sweep_rows(&["--a", "1,1,1", "--b", "1.2,0.5,0.4", "--x-min", "0.1", "--x-max", "3", "--steps", "30"]);
    assert_eq!(rows.len(), 30);
    for r in &rows {
        let x: f64 = r[0].parse().unwrap();
        assert_eq!(r[5] == "1", x <= 1.203_973, "x = {x}");
        assert!(!r[0].contains('e') && !r[1].contains(','));
    }
}

#[test]
fn sweep_of_equal_vectors() {
    for r in sweep_rows(&["--a", "2,1,0.5", "--b", "0.5,2,1", "--x-min", "0", "--x-max", "10", "--steps", "11"]) {
        let v: Vec<f64> = r[1..5].iter().map(|s| s.parse().unwrap()).collect();
        assert!((v[0] - v[1]).abs() <= v[2] + v[3]);
        assert_eq!(r[5], "1");
    }
}

#[test]
fn sweep_with_a_zero_weight_crosses() {
    let rows = sweep_rows(&["--a", "0.5,0.5", "--b", "1,0", "--x-min", "0.5", "--x-max", "5", "--steps", "10"]);
    let diff = |r: &Vec<String>| r[1].parse::<f64>().unwrap() - r[2].parse::<f64>().unwrap();
    assert!(diff(&rows[0]) < 0.0);
    assert!(diff(rows.last().unwrap()) > 0.0);
}

#[test]
fn verify_fixtures_and_determinism() {
    let args = ["verify", "--trials", "1", "--n", "2", "--seed", "1", "--fixture-a", "1,2", "--fixture-b", "2,1"];
    assert_eq!(code(&args), 0);
    let out = qfcert(&["verify", "--trials", "1", "--fixture-a", "4,1", "--fixture-b", "1,1", "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    for rule in ["lemma1_pair_swap", "cor1", "prop1", "thm1"] {
        assert_eq!(v["per_rule"][rule]["passed"], 10, "{rule}");
    }
    let run = ["verify", "--trials", "12", "--n", "5", "--seed", "77", "--samples", "20000"];
    assert_eq!(qfcert(&run).stdout, qfcert(&run).stdout);
}
