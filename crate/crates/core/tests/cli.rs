use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

struct Run {
    code: i32,
    json: Value,
    stderr: String,
}

fn run_in(cache: &Path, args: &[&str]) -> Run {
    let Output {
        status,
        stdout,
        stderr,
    } = Command::new(env!("CARGO_BIN_EXE_planechrome"))
        .args(args)
        .env("PLANECHROME_CACHE", cache)
        .output()
        .expect("binary runs");
    let text = String::from_utf8(stdout).unwrap();
    Run {
        code: status.code().unwrap(),
        json: serde_json::from_str(&text).unwrap_or(Value::Null),
        stderr: String::from_utf8(stderr).unwrap(),
    }
}

fn run(args: &[&str]) -> Run {
    let dir = tempfile::tempdir().unwrap();
    run_in(dir.path(), args)
}

fn assert_schema(name: &str, v: &Value) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join(format!("schemas/{name}.schema.json"));
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let errors: Vec<String> = validator.iter_errors(v).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{name}: {errors:?}\n{v:#}");
}

#[test]
fn family_verify() {
    let r = run(&["family", "--q", "2", "--k", "3", "--verify"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_schema("family", &r.json);
    assert_eq!(r.json["family"]["points"], serde_json::json!([["420", "-630"], ["630", "-420"]]));
    assert_eq!(r.json["verification"]["passed"], Value::Bool(true));
}

#[test]
fn family_errors_and_single_point() {
    let r = run(&["family", "--q", "1", "--k", "3"]);
    assert_eq!(r.code, 2);
    assert_schema("error", &r.json);
    let r = run(&["family", "--q", "1", "--k", "3", "--unchecked"]);
    assert_eq!(r.code, 0);
    let r = run(&["family", "--q", "2", "--k", "2"]);
    assert_eq!(r.json["family"]["points"], serde_json::json!([["6", "-10"]]));
}

#[test]
fn bound_gk_certified() {
    let r = run(&["bound", "gk", "--k", "2", "--T", "16", "--mode", "certified", "--M", "4096"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_schema("bound", &r.json);
    assert_schema("bound-gk", &r.json);
    let a = r.json["report"]["alpha_upper"].as_f64().unwrap();
    assert!((0.5..0.51).contains(&a));
    assert_eq!(r.json["report"]["chi_lower"], 2);
    assert_eq!(r.json["cross_check"]["pass"], true);
}

#[test]
fn bound_poly_and_prime() {
    let r = run(&["bound", "poly", "--f", "1,3,3,1", "--N", "50", "--q", "2", "--k", "3", "--mode", "certified"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_schema("bound", &r.json);
    assert_eq!(r.json["cross_check"]["pass"], true);

    let r = run(&["bound", "prime", "--formula-only", "--k", "10", "--Q", "6"]);
    assert_eq!(r.code, 0);
    assert_schema("bound", &r.json);
    assert!((r.json["formula"]["alpha_upper"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-15);
    assert_eq!(r.json["formula"]["chi_lower"], 3);

    let r = run(&["bound", "prime", "--N", "30", "--q", "2", "--k", "3", "--mode", "heuristic", "--seed", "4"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_schema("bound", &r.json);
}

#[test]
fn bound_resolution_exhausted() {
    // every generator is a multiple of 16, so w^ equals sup on the 16-grid
    let r = run(&[
        "bound", "poly", "--f", "16,0,0,16", "--N", "5", "--q", "2", "--k", "2", "--M", "16", "--max-grid", "16",
    ]);
    assert_eq!(r.code, 4, "{}", r.stderr);
    assert_schema("error", &r.json);
    assert!(r.json["error"]["certificate"]["grid_min"].as_f64().unwrap() >= 0.0);
}

#[test]
fn bound_dump_grid() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("grid.bin");
    let r = run(&["bound", "gk", "--k", "2", "--T", "4", "--M", "64", "--dump-grid", path.to_str().unwrap()]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let g = planechrome::spectral::read_grid(&path).unwrap();
    assert_eq!(g.m, r.json["report"]["certificate"]["grid_size"].as_u64().unwrap() as usize);
}

#[test]
fn expsum_commands() {
    let r = run(&["expsum", "classify", "--alpha", "0.5", "--scheme", "poly", "--r", "3", "--N", "1000", "--Q", "3"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_schema("expsum-classify", &r.json);
    assert_eq!(r.json["display"], "Major{1,2}");

    let r = run(&["expsum", "dirichlet", "--alpha", "3.14159265358979", "--W", "10"]);
    assert_schema("expsum-dirichlet", &r.json);
    assert_eq!((r.json["a"].as_i64(), r.json["b"].as_i64()), (Some(22), Some(7)));

    let r = run(&["expsum", "dirichlet", "--alpha", "-0.25", "--W", "10"]);
    assert_eq!((r.json["a"].as_i64(), r.json["b"].as_i64()), (Some(-1), Some(4)));
}

#[test]
fn expsum_scan_prime() {
    let dir = tempfile::tempdir().unwrap();
    // the natural width at this size overlaps the arcs
    let r = run_in(dir.path(), &["expsum", "scan", "--scheme", "prime", "--N", "100000", "--Q", "6", "--grid", "10000", "--seed", "7"]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("disjoint"));

    let csv = dir.path().join("scan.csv");
    let args = [
        "expsum", "scan", "--scheme", "prime", "--N", "20000", "--Q", "6", "--grid", "2000", "--seed", "7",
        "--width", "1e-3", "--csv", csv.to_str().unwrap(),
    ];
    let a = run_in(dir.path(), &args);
    assert_eq!(a.code, 0, "{}", a.stderr);
    assert_schema("expsum-scan", &a.json);
    let b = run_in(dir.path(), &args);
    assert_eq!(a.json["report"], b.json["report"]);
    let mut rdr = csv::Reader::from_path(&csv).unwrap();
    assert_eq!(rdr.headers().unwrap(), vec!["alpha", "modulus", "label"]);
    let rows = rdr.records().count() as u64;
    assert_eq!(rows, a.json["report"]["minor_samples"].as_u64().unwrap());
}

#[test]
fn primes_commands() {
    let dir = tempfile::tempdir().unwrap();
    let r = run_in(dir.path(), &["primes", "theta", "--N", "10000000"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_schema("primes-theta", &r.json);
    assert!((r.json["ratio"].as_f64().unwrap() - 1.0).abs() < 0.01);
    assert!(dir.path().join("sieve.pcsv").exists());

    let r = run_in(dir.path(), &["primes", "poussin", "--N", "1000000"]);
    assert_eq!(r.code, 0);
    assert_schema("primes-poussin", &r.json);

    // a corrupt cache is rebuilt with a warning
    std::fs::write(dir.path().join("sieve.pcsv"), b"garbage").unwrap();
    let r = run_in(dir.path(), &["primes", "theta", "--N", "1000"]);
    assert_eq!(r.code, 0);
    assert!(r.stderr.contains("rebuilding"), "{}", r.stderr);

    let r = run(&["primes", "phi", "--max-inv-above", "6"]);
    assert_schema("primes-phi", &r.json);
    assert_eq!(r.json["max_inv_phi_above"]["value"], "1/4");
    assert_eq!(r.json["max_inv_phi_above"]["witness"], 8);
}

#[test]
fn colour_commands() {
    let args = ["colour", "sphere", "--k", "2", "--R", "odd:99", "--d", "2", "--trials", "100000", "--seed", "1"];
    let a = run(&args);
    assert_eq!(a.code, 0, "{}", a.stderr);
    assert_schema("colour-sphere", &a.json);
    assert_eq!(a.json["report"]["violations"], 0);
    assert_eq!(a.json["colour_count"], 8);
    assert_eq!(a.json, run(&args).json);

    let r = run(&["colour", "sphere", "--k", "2", "--R", "4", "--seed", "1"]);
    assert_eq!(r.code, 2);

    let r = run(&["colour", "prime", "--trials", "20000", "--seed", "3"]);
    assert_schema("colour-prime", &r.json);
    assert_eq!(r.json["valid"], true);
    assert_eq!(r.json["report"]["violations"], 0);

    let r = run(&["colour", "prime", "--k", "3", "--trials", "20000", "--seed", "3"]);
    assert_eq!(r.json["valid"], false);
    assert!(r.json["report"]["violations"].as_u64().unwrap() > 0);
    assert_schema("colour-prime", &r.json);
}

#[test]
fn oracle_commands() {
    let r = run(&["oracle", "mis", "--gens", "1,0;-1,0;0,1;0,-1;1,1;-1,-1", "--m", "3"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_schema("oracle-mis", &r.json);
    assert_eq!(r.json["result"]["density"], "1/3");

    let dir = tempfile::tempdir().unwrap();
    let dimacs = dir.path().join("g.col");
    let r = run(&["oracle", "chromatic", "--gens", "1,0;-1,0", "--m", "5", "--limit", "5", "--dimacs", dimacs.to_str().unwrap()]);
    assert_schema("oracle-chromatic", &r.json);
    assert_eq!(r.json["result"]["chi"], 3);
    assert!(std::fs::read_to_string(&dimacs).unwrap().starts_with("p edge 25 25\n"));

    let r = run(&["oracle", "mis", "--gens", "3,0", "--m", "3"]);
    assert_eq!(r.code, 2);
    let r = run(&["oracle", "mis", "--gens", "1,2;3,1", "--m", "9", "--budget", "2"]);
    assert_eq!(r.code, 2);
    assert_schema("error", &r.json);
    assert!(r.json["error"]["best_witness"].is_array());
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let r = run(&["--out", out.to_str().unwrap(), "primes", "phi", "--n", "12"]);
    assert_eq!(r.code, 0);
    let v: Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(v["phi"], 4);
}

#[test]
fn seeded_output_ignores_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let go = |threads: &str, args: &[&str]| {
        let out = Command::new(env!("CARGO_BIN_EXE_planechrome"))
            .args(args)
            .env("PLANECHROME_CACHE", dir.path())
            .env("RAYON_NUM_THREADS", threads)
            .output()
            .unwrap();
        assert!(out.status.success());
        out.stdout
    };
    let cases: [&[&str]; 3] = [
        &["colour", "sphere", "--k", "3", "--R", "1,2,4,5", "--d", "3", "--trials", "20000", "--seed", "9"],
        &["expsum", "scan", "--scheme", "poly", "--N", "500", "--Q", "4", "--grid", "3000", "--seed", "2"],
        &["bound", "gk", "--k", "3", "--T", "8", "--mode", "heuristic", "--starts", "16", "--seed", "5"],
    ];
    for args in cases {
        assert_eq!(go("1", args), go("4", args), "{args:?}");
    }
}
