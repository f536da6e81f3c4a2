use std::process::{Command, Output};

use coset_chains::rational::fraction_string;
use coset_chains::spectral::spectrum;
use coset_chains::tables::{enumerate_tables, fisher_yates_pmf};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coset-chains"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn spectrum_prints_the_five_card_table() {
    let text = stdout(&["spectrum", "--rows", "3,1,1", "--cols", "2,2,1"]);
    let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split_whitespace().collect()).collect();
    assert_eq!(
        rows,
        vec![
            vec!["(5)", "1", "1.000000", "1"],
            vec!["(4,1)", "3/5", "0.600000", "4"],
            vec!["(3,2)", "9/25", "0.360000", "2"],
            vec!["(3,1,1)", "1/5", "0.200000", "1"],
        ]
    );
}

#[test]
fn spectrum_json_is_the_library_value() {
    let text = stdout(&["spectrum", "--rows", "4,2", "--cols", "3,2,1", "--format", "json"]);
    let got: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(got, spectrum(&[4, 2], &[3, 2, 1]).unwrap().to_json());
}

#[test]
fn enumerate_count_only() {
    assert_eq!(stdout(&["enumerate", "--rows", "3,2", "--cols", "2,2,1", "--count-only"]).trim(), "5");
}

#[test]
fn enumerate_csv_matches_library_pmf() {
    let text = stdout(&["enumerate", "--rows", "3,2", "--cols", "2,2,1", "--format", "csv", "--exact"]);
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let records: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    let tables = enumerate_tables(&[3, 2], &[2, 2, 1]).unwrap();
    assert_eq!(records.len(), tables.len());
    for (r, t) in records.iter().zip(&tables) {
        assert_eq!(&r[1], t.to_string());
        assert_eq!(&r[3], fraction_string(&fisher_yates_pmf(t)));
    }
    let sizes: Vec<&str> = records.iter().map(|r| r.get(2).unwrap()).collect();
    assert_eq!(sizes, ["24", "12", "24", "48", "12"]);
}

#[test]
fn sample_is_deterministic_given_seed() {
    let args = ["sample", "--rows", "3,2", "--cols", "2,2,1", "--n", "5", "--seed", "7"];
    let a = stdout(&args);
    assert_eq!(a, stdout(&args));
    assert_eq!(a.lines().count(), 5);
    let other = stdout(&["sample", "--rows", "3,2", "--cols", "2,2,1", "--n", "50", "--seed", "8"]);
    assert_ne!(stdout(&["sample", "--rows", "3,2", "--cols", "2,2,1", "--n", "50", "--seed", "7"]), other);
}

#[test]
fn out_flag_writes_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("mix.csv");
    let p = path.to_str().unwrap();
    let text = stdout(&["mix", "--rows", "3,2", "--cols", "2,2,1", "--t-max", "4", "--format", "csv", "--out", p]);
    assert!(text.is_empty());
    let written = std::fs::read_to_string(&path).unwrap();
    let mut lines = written.lines();
    assert_eq!(lines.next(), Some("t,tv,chi2,bound"));
    assert_eq!(lines.count(), 5);
}

#[test]
fn table_file_feeds_evolve() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("start.csv");
    std::fs::write(&path, "2,1,0\n0,1,1\n").unwrap();
    let text = stdout(&["evolve", "--table", path.to_str().unwrap(), "--steps", "0", "--exact", "--format", "csv"]);
    let probs: Vec<String> = text.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().to_string()).collect();
    assert_eq!(probs, ["1", "0", "0", "0", "0"]);
}

#[test]
fn exit_codes_separate_usage_from_computation() {
    // Missing flags, mismatched margins and unknown subcommands are usage errors.
    assert_eq!(run(&["spectrum", "--rows", "3,1,1"]).status.code(), Some(2));
    assert_eq!(run(&["enumerate", "--rows", "3,2", "--cols", "2,2"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    // No column can hold the extreme state: degenerate parameters.
    let out = Command::new(env!("CARGO_BIN_EXE_coset-chains"))
        .args(["bounds", "--rows", "3,2", "--cols", "1,1,1,1,1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
    let capped = Command::new(env!("CARGO_BIN_EXE_coset-chains"))
        .env("COSET_CHAINS_MAX_STATES", "3")
        .args(["enumerate", "--rows", "3,2", "--cols", "2,2,1"])
        .output()
        .unwrap();
    assert_eq!(capped.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&capped.stderr).contains("COSET_CHAINS_MAX_STATES"));
}

#[test]
fn every_subcommand_runs() {
    let cases: [&[&str]; 8] = [
        &["pmf", "--state", "1,1,1;1,1,0", "--exact"],
        &["evolve", "--rows", "3,2", "--cols", "2,2,1", "--steps", "3", "--trajectory", "--seed", "1"],
        &["wilson", "--rows", "6,2", "--cols", "4,4", "--cell", "2,1"],
        &["bounds", "--rows", "8,2", "--cols", "5,5"],
        &["compare", "--rows", "3,2", "--cols", "2,2,1", "--format", "json"],
        &["analyze", "--dataset", "victoria"],
        &["analyze", "--state", "3,1;1,3", "--panel"],
        &["three-way", "--rows", "2,1", "--cols", "2,1", "--layers", "2,1"],
    ];
    for args in cases {
        assert!(!stdout(args).is_empty(), "{args:?}");
    }
}
