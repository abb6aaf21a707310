use std::path::Path;

use nonconvex_minimax::cli::{run, EXIT_CONFIG, EXIT_NO_SADDLE, EXIT_OK};
use serde_json::Value;

fn instance(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../instances")
        .join(name)
        .display()
        .to_string()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

#[test]
fn demo_circle_reports_the_known_gap() {
    let out = tempfile::tempdir().unwrap();
    let code = run(["minimax-lab", "demo", "circle", "--out", out.path().to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    let r = read_json(&out.path().join("report.json"));
    assert!((r["gap"]["sup_inf"].as_f64().unwrap() + 1.0).abs() <= 1e-12);
    assert!((r["gap"]["inf_sup"].as_f64().unwrap() - 1.0).abs() <= 1e-12);
    assert_eq!(r["demo"]["passed"], Value::Bool(true));
    assert!(r["saddle"].is_null());
    let csv = std::fs::read_to_string(out.path().join("slices.csv")).unwrap();
    assert!(csv.starts_with("lambda_index,lambda,column_min,argmin_component_count\n"));
    assert_eq!(csv.lines().count(), 361);
}

#[test]
fn saddle_exit_codes() {
    let out = tempfile::tempdir().unwrap();
    let o = out.path().to_str().unwrap();
    let gap = instance("quadratic_gap.toml");
    assert_eq!(run(["minimax-lab", "saddle", "--instance", &gap, "--out", o]), EXIT_NO_SADDLE);
    let ok = instance("quadratic_ok.toml");
    assert_eq!(run(["minimax-lab", "saddle", "--instance", &ok, "--out", o]), EXIT_OK);
    let r = read_json(&out.path().join("saddle.json"));
    assert_eq!(r["saddle"]["value"].as_f64(), Some(0.0));
}

#[test]
fn malformed_specs_exit_with_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "family = \"affine_gamma\"\n[parameters]\nphi = [1.0]\n").unwrap();
    let o = dir.path().join("out");
    let args = ["minimax-lab", "analyze", "--instance", bad.to_str().unwrap(), "--out", o.to_str().unwrap()];
    assert_eq!(run(args), EXIT_CONFIG);
    assert!(!o.join("report.json").exists());
    assert_eq!(run(["minimax-lab", "analyze"]), EXIT_CONFIG);
    assert_eq!(run(["minimax-lab", "frobnicate"]), EXIT_CONFIG);
    let ok = instance("quadratic_ok.toml");
    assert_eq!(run(["minimax-lab", "analyze", "--instance", &ok, "--epsilon=-1"]), EXIT_CONFIG);
    assert_eq!(run(["minimax-lab", "sweep", "--instance", &ok, "--out", o.to_str().unwrap()]), EXIT_CONFIG);
    assert_eq!(run(["minimax-lab", "analyze", "--instance", &ok, "--mode", "theorem9"]), EXIT_CONFIG);
}

#[test]
fn analyze_embeds_tolerances_and_respects_mode() {
    let out = tempfile::tempdir().unwrap();
    let o = out.path().to_str().unwrap();
    let ok = instance("quadratic_ok.toml");
    let args = ["minimax-lab", "analyze", "--instance", &ok, "--out", o, "--mode", "theorem2", "--epsilon", "0", "--levels", "8"];
    assert_eq!(run(args), EXIT_OK);
    let r = read_json(&out.path().join("report.json"));
    assert_eq!(r["tolerances"]["arg"]["absolute"].as_f64(), Some(0.0));
    assert_eq!(r["tolerances"]["level_samples"].as_u64(), Some(8));
    assert_eq!(r["hypotheses"].as_array().unwrap().len(), 1);
    assert_eq!(r["hypotheses"][0]["mode"], "theorem2");
    assert_eq!(r["hypotheses"][0]["holds"], Value::Bool(true));
}

#[test]
fn exhaust_writes_per_subgrid_rows() {
    let out = tempfile::tempdir().unwrap();
    let o = out.path().to_str().unwrap();
    let ok = instance("quadratic_ok.toml");
    assert_eq!(run(["minimax-lab", "exhaust", "--instance", &ok, "--out", o]), EXIT_OK);
    let r = read_json(&out.path().join("exhaust.json"));
    assert_eq!(r["exhaustion"]["sup_inf_nondecreasing"], Value::Bool(true));
    let csv = std::fs::read_to_string(out.path().join("exhaustion.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    let gap = instance("quadratic_gap.toml");
    assert_eq!(run(["minimax-lab", "exhaust", "--instance", &gap, "--out", o]), EXIT_CONFIG);
}

#[test]
fn reports_do_not_depend_on_worker_count() {
    let one = tempfile::tempdir().unwrap();
    let many = tempfile::tempdir().unwrap();
    for name in ["nonquasiconcave.toml", "quadratic_gap.toml", "affine_gamma.toml", "integral_finite.toml"] {
        let path = instance(name);
        for (dir, jobs) in [(&one, "1"), (&many, "8")] {
            let o = dir.path().to_str().unwrap();
            assert_eq!(run(["minimax-lab", "analyze", "--instance", &path, "--out", o, "--jobs", jobs]), EXIT_OK);
        }
        for file in ["report.json", "slices.csv"] {
            let a = std::fs::read(one.path().join(file)).unwrap();
            let b = std::fs::read(many.path().join(file)).unwrap();
            assert_eq!(a, b, "{name}/{file}");
        }
    }
}
