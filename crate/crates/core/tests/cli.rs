use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn twinbeam(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_twinbeam"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "bad JSON ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

const FRAGILE: [&str; 8] = [
    "--p-minus", "0.5", "--p-plus", "2.1", "--q-plus", "1.7", "--q-minus", "2.05",
];

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn classify_fragile_inline() {
    let out = twinbeam(&[&["classify"][..], &FRAGILE[..]].concat());
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["region"], "fragile_entangled");
    assert_eq!(r["region_code"], 2);
    assert_eq!(r["decided_by"], "analytic");
    let t = r["critical_transmission"].as_f64().unwrap();
    assert!((t - 0.2545112782).abs() < 1e-8);
    assert!((r["witnesses"]["esd_quantity"].as_f64().unwrap() - 0.3385).abs() < 1e-12);
    assert!((r["duan"]["value"].as_f64().unwrap() - 2.2).abs() < 1e-12);
    assert!(r["purity"].as_f64().is_some());
}

#[test]
fn classify_vacuum_file() {
    let dir = TempDir::new().unwrap();
    let f = dir.path().join("vac.json");
    std::fs::write(&f, r#"{"label":"vacuum","matrix":[[1,0,0,0],[0,1,0,0],[0,0,1,0],[0,0,0,1]]}"#).unwrap();
    let out = twinbeam(&["classify", "--input", path_str(&f)]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["region"], "separable");
    assert_eq!(r["label"], "vacuum");
    assert_eq!(r["duan"]["value"].as_f64().unwrap(), 2.0);
    assert!((r["ppt"]["nu_min"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn classify_unphysical_has_its_own_exit_code() {
    let out = twinbeam(&[
        "classify", "--p-minus", "0.5", "--p-plus", "1.0", "--q-plus", "1.7", "--q-minus", "1.0",
    ]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("unphysical") && err.contains("0.7071"), "{err}");
}

#[test]
fn input_errors() {
    let out = twinbeam(&["classify", "--input", "/definitely/not/here.json"]);
    assert_eq!(out.status.code(), Some(2));
    let out = twinbeam(&["classify", "--p-minus", "0.5"]);
    assert_eq!(out.status.code(), Some(2));
    let dir = TempDir::new().unwrap();
    let f = dir.path().join("s.json");
    std::fs::write(&f, r#"{"variances":{"p_minus":1,"p_plus":1,"q_plus":1,"q_minus":1}}"#).unwrap();
    let both = [&["classify", "--input", path_str(&f)][..], &FRAGILE[..]].concat();
    assert_eq!(twinbeam(&both).status.code(), Some(2));
    std::fs::write(&f, "{not json").unwrap();
    assert_eq!(twinbeam(&["classify", "--input", path_str(&f)]).status.code(), Some(2));
}

#[test]
fn classify_with_channel_and_both_beams() {
    let args = [
        &["classify", "--t1", "0.5", "--t2", "0.5", "--mode", "both"][..],
        &["--p-minus", "0.5", "--p-plus", "3", "--q-plus", "0.5", "--q-minus", "3"][..],
    ]
    .concat();
    let out = twinbeam(&args);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["region"], "robust_entangled");
    assert_eq!(r["decided_by"], "oracle");
    // 0.5 * 1.0 + 2 * 0.5
    assert!((r["duan"]["value"].as_f64().unwrap() - 1.5).abs() < 1e-12);
}

#[test]
fn sweep_outputs() {
    let dir = TempDir::new().unwrap();
    let out_csv = dir.path().join("fragile.csv");
    let args = [&["sweep", "--grid", "512", "--out", path_str(&out_csv)][..], &FRAGILE[..]].concat();
    assert_eq!(twinbeam(&args).status.code(), Some(0));
    let text = std::fs::read_to_string(&out_csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,nu_min"));
    let nus: Vec<f64> = lines
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(nus.len(), 512);
    let crossings = nus.windows(2).filter(|w| (w[0] < 1.0) != (w[1] < 1.0)).count();
    assert_eq!(crossings, 1);

    let duan = ["sweep", "--p-minus", "0.5", "--p-plus", "3", "--q-plus", "0.5", "--q-minus", "3"];
    let out = twinbeam(&duan);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text
        .lines()
        .skip(1)
        .all(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap() < 1.0));

    let bad = [&["sweep", "--grid", "1"][..], &FRAGILE[..]].concat();
    assert_eq!(twinbeam(&bad).status.code(), Some(2));
}

#[test]
fn batch_sweep_writes_one_file_per_state() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    std::fs::write(&a, r#"{"label":"robust","variances":{"p_minus":0.5,"p_plus":3,"q_plus":0.5,"q_minus":3}}"#).unwrap();
    std::fs::write(&b, r#"{"variances":{"p_minus":0.5,"p_plus":2.1,"q_plus":1.7,"q_minus":2.05}}"#).unwrap();
    let outdir = dir.path().join("curves");
    let out = twinbeam(&[
        "sweep", "--input", path_str(&a), "--input", path_str(&b), "--grid", "32", "--format",
        "json", "--out", path_str(&outdir),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let robust: Value = serde_json::from_str(&std::fs::read_to_string(outdir.join("robust.json")).unwrap()).unwrap();
    assert_eq!(robust["points"].as_array().unwrap().len(), 32);
    assert!(outdir.join("b.json").exists());
}

#[test]
fn region_map_outputs() {
    let out = twinbeam(&[
        "region-map", "--p-minus-min", "1.5", "--p-minus-max", "1.5", "--q-plus-min", "1.5",
        "--q-plus-max", "1.5", "--grid", "1",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0], "p_minus,q_plus,region,decided_by,duan_violated,nu_min,esd_quantity");
    assert!(rows[1].starts_with("1.5,1.5,1,analytic,0,"));

    let out = twinbeam(&[
        "region-map", "--p-minus-min", "0.1", "--p-minus-max", "0.2", "--q-plus-min", "0.1",
        "--q-plus-max", "0.2", "--grid", "5",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

fn write_samples(dir: &Path, name: &str, state: &[&str], n: &str) -> std::path::PathBuf {
    let f = dir.join(name);
    let args = [&["synthesize", "--samples", n, "--seed", "4", "--out", path_str(&f)][..], state].concat();
    let out = twinbeam(&args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    f
}

#[test]
fn estimate_pipeline_and_round_trip() {
    let dir = TempDir::new().unwrap();
    let robust = ["--p-minus", "0.5", "--p-plus", "3", "--q-plus", "0.5", "--q-minus", "3", "--label", "robust"];
    let samples = write_samples(dir.path(), "robust.csv", &robust, "20000");
    let state = dir.path().join("estimate.json");
    let out = twinbeam(&["estimate", "--input", path_str(&samples), "--out", path_str(&state)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&state).unwrap()).unwrap();
    assert_eq!(r["label"], "robust");
    assert_eq!(r["classification"]["region"], "robust_entangled");
    assert_eq!(r["gaussianity"]["pass"], true);
    assert!(r["nu_min_band"][1].as_f64().unwrap() < 1.0);

    // the estimate is itself a state file
    let out = twinbeam(&["classify", "--input", path_str(&state), "--phys-tol", "1e-2"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json(&out)["label"], "robust");
}

#[test]
fn estimate_vacuum_and_too_few_samples() {
    let dir = TempDir::new().unwrap();
    let vac = ["--p-minus", "1", "--p-plus", "1", "--q-plus", "1", "--q-minus", "1"];
    let samples = write_samples(dir.path(), "vac.csv", &vac, "20000");
    let out = twinbeam(&["estimate", "--input", path_str(&samples)]);
    let r = json(&out);
    assert!(matches!(out.status.code(), Some(5) | Some(6)));
    assert_ne!(r["ppt"]["verdict"], "entangled");
    if let Some(c) = r["classification"].as_object() {
        assert_eq!(c["region"], "separable");
    }

    let tiny = dir.path().join("tiny.csv");
    std::fs::write(&tiny, "p1,q1,p2,q2\n0.1,0.2,0.3,0.4\n-0.1,0.0,0.2,0.1\n0.3,-0.2,0.0,0.5\n").unwrap();
    let out = twinbeam(&["estimate", "--input", path_str(&tiny)]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("too few samples"));

    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "p1,q1,p2,q2\n0.1,zero,0.3,0.4\n").unwrap();
    assert_eq!(twinbeam(&["estimate", "--input", path_str(&bad)]).status.code(), Some(2));
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let dir = TempDir::new().unwrap();
    let samples = write_samples(dir.path(), "f.csv", &FRAGILE, "5000");
    let again = write_samples(dir.path(), "g.csv", &FRAGILE, "5000");
    assert_eq!(std::fs::read(&samples).unwrap(), std::fs::read(&again).unwrap());
    let runs: Vec<Vec<u8>> = (0..2)
        .map(|_| twinbeam(&["estimate", "--input", path_str(&samples), "--seed", "9"]).stdout)
        .collect();
    assert_eq!(runs[0], runs[1]);
    let maps: Vec<Vec<u8>> = (0..2)
        .map(|_| twinbeam(&["region-map", "--grid", "15", "--format", "json"]).stdout)
        .collect();
    assert_eq!(maps[0], maps[1]);
}
