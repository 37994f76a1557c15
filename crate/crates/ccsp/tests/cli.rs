//! Exit-code contract of the command-line interface: 0 satisfiable/valid,
//! 1 unsatisfiable/invalid, 2 error.

use std::path::PathBuf;
use std::process::Command;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_ccsp")
}

fn scratch(name: &str, content: &str) -> PathBuf {
    let dir = std::env::temp_dir().join("ccsp-cli-tests");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, content).unwrap();
    path
}

fn run(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(bin()).args(args).output().expect("spawn ccsp");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

const COMPLETE_2SAT: &str = "p ccsp 2 2 3\n1 2 u 1 00\n1 3 u 1 00\n2 3 u 1 00\n";
const INCOMPLETE_2SAT: &str = "p ccsp 2 2 3\n1 2 u 1 00\n1 3 u 1 00\n";
const TERNARY: &str = "p ccsp 2 3 3\n1 2 u 1 00\n1 3 u 1 11\n2 3 u 1 22\n";

#[test]
fn check_valid_file_exits_zero() {
    let path = scratch("valid.ccsp", COMPLETE_2SAT);
    let (code, stdout, _) = run(&["check", path.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(stdout.contains("ok"));
}

#[test]
fn check_incomplete_file_exits_one() {
    let path = scratch("incomplete.ccsp", INCOMPLETE_2SAT);
    let (code, stdout, _) = run(&["check", path.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(stdout.contains("IncompleteInstance"));
}

#[test]
fn check_missing_file_exits_two() {
    let (code, _, stderr) = run(&["check", "/nonexistent/path.ccsp"]);
    assert_eq!(code, 2);
    assert!(stderr.contains("error"));
}

#[test]
fn check_syntax_error_exits_two() {
    let path = scratch("broken.ccsp", "p ccsp 2 2 3\n1 2 u 1 02\n");
    let (code, _, stderr) = run(&["check", path.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(stderr.contains("label"));
}

#[test]
fn solve_sat_and_unsat_exit_codes() {
    let sat = scratch("sat.ccsp", COMPLETE_2SAT);
    let (code, stdout, _) = run(&["solve", sat.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(stdout.contains("s SATISFIABLE"));
    assert!(stdout.contains("v "));

    // proper 2-coloring of a triangle is impossible
    let unsat = scratch(
        "unsat.ccsp",
        "p ccsp 2 2 3\n1 2 u 2 00 11\n1 3 u 2 00 11\n2 3 u 2 00 11\n",
    );
    let (code, stdout, _) = run(&["solve", unsat.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(stdout.contains("s UNSATISFIABLE"));
}

#[test]
fn solve_algo_mismatch_exits_two() {
    let path = scratch("ternary.ccsp", TERNARY);
    let (code, _, stderr) = run(&["solve", path.to_str().unwrap(), "--algo", "kcsp"]);
    assert_eq!(code, 2);
    assert!(stderr.contains("mismatch") || stderr.contains("Boolean"));
}

#[test]
fn solve_ternary_dispatches_to_the_label_reduction_solver() {
    let path = scratch("ternary-auto.ccsp", TERNARY);
    let (code, stdout, _) = run(&["solve", path.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(stdout.contains("c algorithm csp23"));
}

#[test]
fn solve_enumerate_lists_sorted_solutions() {
    let path = scratch("enum.ccsp", COMPLETE_2SAT);
    let (code, stdout, _) = run(&["solve", path.to_str().unwrap(), "--enumerate"]);
    assert_eq!(code, 0);
    let solutions: Vec<&str> = stdout
        .lines()
        .filter(|l| !l.starts_with(&['c', 's'][..]))
        .collect();
    assert_eq!(solutions, vec!["011", "101", "110", "111"]);
}

#[test]
fn min2sat_exact_cap_exits_two() {
    let mut text = String::from("p ccsp 2 2 17\n");
    for i in 1..=17 {
        for j in i + 1..=17 {
            text.push_str(&format!("{i} {j} u 1 00\n"));
        }
    }
    let path = scratch("large.ccsp", &text);
    let (code, _, stderr) = run(&[
        "min2sat",
        path.to_str().unwrap(),
        "--exact",
        "--trials",
        "2",
        "--sdp-iters",
        "50",
    ]);
    assert_eq!(code, 2);
    assert!(stderr.contains("capped"));
}

#[test]
fn min2sat_reports_cost_and_ratio() {
    let sat = scratch("m2s.ccsp", COMPLETE_2SAT);
    let (code, stdout, _) = run(&[
        "min2sat",
        sat.to_str().unwrap(),
        "--exact",
        "--trials",
        "4",
        "--sdp-iters",
        "600",
    ]);
    assert_eq!(code, 0);
    assert!(stdout.contains("cost 0"), "stdout: {stdout}");
    assert!(stdout.contains("opt 0"));
}

#[test]
fn gen_bad_params_exit_two() {
    let (code, _, _) = run(&["gen", "symmetric", "--n", "4", "--k", "3", "--s", "0,1,2,3"]);
    assert_eq!(code, 2);
    let (code, _, _) = run(&["gen", "pac", "--n", "4", "--r", "4", "--l", "3", "--mode", "bogus"]);
    assert_eq!(code, 2);
}

#[test]
fn gen_product_output_validates_complete() {
    let cnf = scratch("gen.cnf", "p cnf 4 2\n1 -2 0\n3 4 0\n");
    let out = std::env::temp_dir().join("ccsp-cli-tests/product.ccsp");
    let (code, _, _) = run(&[
        "gen",
        "product",
        "--input",
        cnf.to_str().unwrap(),
        "--t",
        "2",
        "--seed",
        "5",
        "-o",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let (code, stdout, _) = run(&["check", out.to_str().unwrap()]);
    assert_eq!(code, 0, "generated product instance must validate: {stdout}");
}

#[test]
fn gen_symmetric_writes_nae_tables() {
    let out = std::env::temp_dir().join("ccsp-cli-tests/nae.ccsp");
    let (code, _, _) = run(&[
        "gen",
        "symmetric",
        "--n",
        "5",
        "--k",
        "3",
        "--s",
        "1,2",
        "-o",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.contains("u 2 000 111"));
    // five variables cannot avoid a monochromatic triple
    let (code, _, _) = run(&["solve", out.to_str().unwrap()]);
    assert_eq!(code, 1);
}

#[test]
fn bench_emits_csv_header() {
    let (code, stdout, _) = run(&["bench", "--family", "twosat", "--ns", "4,5"]);
    assert_eq!(code, 0);
    let mut lines = stdout.lines();
    assert_eq!(
        lines.next(),
        Some("family,n,seed,algorithm,nodes,solutions")
    );
    assert_eq!(stdout.lines().count(), 3);
}

#[test]
fn wall_time_goes_to_stderr_not_stdout() {
    let path = scratch("timing.ccsp", COMPLETE_2SAT);
    let (_, stdout, stderr) = run(&["solve", path.to_str().unwrap()]);
    assert!(!stdout.contains("wall-time"));
    assert!(stderr.contains("wall-time-ms"));
}
