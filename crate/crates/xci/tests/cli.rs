use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;
use tempfile::TempDir;
use xci::json::{parse_distribution, CertificateJson};
use xci_core::BlockPartition;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

impl Run {
    fn json(&self) -> Value {
        serde_json::from_str(&self.stdout).unwrap_or_else(|e| panic!("stdout is not JSON ({e}): {}", self.stdout))
    }
}

fn xci_env(args: &[&str], env: &[(&str, &str)]) -> Run {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_xci"));
    cmd.args(args).env_remove("XCI_RECT_CAP");
    for (k, v) in env {
        cmd.env(k, v);
    }
    let out = cmd.output().expect("run xci");
    Run {
        code: out.status.code().expect("exit code"),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

fn xci(args: &[&str]) -> Run {
    xci_env(args, &[])
}

fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

#[test]
fn check_i1_all_notions_hold() {
    let i1 = data("i1.json");
    let run = xci(&["check", "-i", path_str(&i1), "--region", "eh"]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let report = run.json();
    assert_eq!(report["verdicts"], serde_json::json!({"eh": true, "inner": true, "outer": true}));
    assert_eq!(report["partition"], "A=1;B=;C=2");
    assert!(report["inputDigest"].as_str().unwrap().starts_with("sha256:"));
    assert_eq!(report["witness"]["verified"], true);
}

#[test]
fn check_i2_fails_everywhere_with_sound_certificates() {
    let i2 = data("i2.json");
    let run = xci(&["check", "-i", path_str(&i2), "--notions", "eh,inner,inner-bf,outer"]);
    assert_eq!(run.code, 0, "a negative verdict is not an error exit");
    let report = run.json();
    let dist = parse_distribution(&std::fs::read_to_string(&i2).unwrap()).unwrap();
    let part = BlockPartition::pair();
    let details = report["details"].as_array().unwrap();
    assert_eq!(details.len(), 4);
    for d in details {
        assert_eq!(d["holds"], false);
        let cert: CertificateJson = serde_json::from_value(d["certificate"].clone()).unwrap();
        assert!(cert.to_certificate().unwrap().recheck(&dist, &part), "{d}");
    }
    let types: Vec<&str> = details.iter().map(|d| d["certificate"]["type"].as_str().unwrap()).collect();
    assert_eq!(types, ["triple", "slab", "triple", "cycle"]);
}

#[test]
fn check_is_reproducible() {
    let i2 = data("i2.json");
    let a = xci(&["check", "-i", path_str(&i2)]).json();
    let b = xci(&["check", "-i", path_str(&i2)]).json();
    assert_eq!(a["details"], b["details"]);
    assert_eq!(a["inputDigest"], b["inputDigest"]);
}

#[test]
fn check_rejects_bad_input() {
    let dir = TempDir::new().unwrap();
    let short = dir.path().join("short.json");
    std::fs::write(
        &short,
        r#"{"dimension":2,"atoms":[{"coords":["0","2"],"mass":"49/100"},{"coords":["2","0"],"mass":"1/2"}]}"#,
    )
    .unwrap();
    let run = xci(&["check", "-i", path_str(&short)]);
    assert_eq!(run.code, 2);
    assert!(run.stderr.contains("99/100"), "{}", run.stderr);

    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, "{\"dimension\":").unwrap();
    assert_eq!(xci(&["check", "-i", path_str(&broken)]).code, 2);

    assert_eq!(xci(&["check", "-i", path_str(&dir.path().join("missing.json"))]).code, 2);
    let i1 = data("i1.json");
    assert_eq!(xci(&["check", "-i", path_str(&i1), "--notions", "bogus"]).code, 2);
    assert_eq!(xci(&["check", "-i", path_str(&i1), "--region", "square"]).code, 2);
}

#[test]
fn check_support_outside_explicit_region() {
    let dir = TempDir::new().unwrap();
    let region = dir.path().join("region.json");
    std::fs::write(&region, r#"{"type":"explicit","points":[["0","2"],["0","3"],["2","0"]]}"#).unwrap();
    let spec = format!("explicit:{}", path_str(&region));
    let i1 = data("i1.json");
    let run = xci(&["check", "-i", path_str(&i1), "--region", &spec]);
    assert_eq!(run.code, 2);
    let outer_only = xci(&["check", "-i", path_str(&i1), "--region", &spec, "--notions", "outer"]);
    assert_eq!(outer_only.code, 0, "outer does not look at the region");
}

#[test]
fn rect_cap_from_environment_and_flag() {
    let i1 = data("i1.json");
    let args = ["check", "-i", path_str(&i1), "--notions", "inner-bf"];
    assert_eq!(xci(&args).code, 0);
    let capped = xci_env(&args, &[("XCI_RECT_CAP", "3")]);
    assert_eq!(capped.code, 2, "{}", capped.stderr);
    let mut with_flag = args.to_vec();
    with_flag.extend(["--rect-cap", "1000"]);
    assert_eq!(xci_env(&with_flag, &[("XCI_RECT_CAP", "3")]).code, 0);
    assert_eq!(xci_env(&args, &[("XCI_RECT_CAP", "many")]).code, 2);
}

#[test]
fn witness_prop1_on_i1() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("w.json");
    let run = xci(&["witness", "-i", path_str(&data("i1.json")), "--method", "prop1", "-o", path_str(&out)]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let w: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(w["method"], "prop1");
    assert_eq!(w["lambda"], "3/4");
    assert_eq!(w["verified"], true);
    assert_eq!(w["dimension"], 2);
    assert_eq!(w["atoms"].as_array().unwrap().len(), 9);
    let back = parse_distribution(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(back.len(), 9);
}

#[test]
fn witness_prop2_on_i3() {
    let run = xci(&["witness", "-i", path_str(&data("i3.json")), "--method", "prop2"]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let w = run.json();
    assert_eq!(w["p"], serde_json::json!(["1/3", null, "1/3"]));
    assert_eq!(w["alpha"], serde_json::json!(["1/2"]));
}

#[test]
fn witness_prop1_on_i2_reports_the_failing_check() {
    let run = xci(&["witness", "-i", path_str(&data("i2.json")), "--method", "prop1"]);
    assert_eq!(run.code, 3);
    let body = run.json();
    assert_eq!(body["verdict"]["notion"], "eh");
    assert_eq!(body["verdict"]["holds"], false);
    assert_eq!(body["verdict"]["certificate"]["given"]["type"], "exceedance");
}

#[test]
fn witness_generic_on_i2_returns_cycle() {
    let run = xci(&["witness", "-i", path_str(&data("i2.json")), "--method", "generic"]);
    assert_eq!(run.code, 3);
    assert_eq!(run.json()["certificate"]["type"], "cycle");
    assert_eq!(xci(&["witness", "-i", path_str(&data("i2.json")), "--method", "magic"]).code, 2);
}

#[test]
fn generate_pareto_axes_four_atoms() {
    let run = xci(&["generate", "--family", "pareto-axes", "--tail", "2,4", "--arm-weight", "1/2"]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let d = parse_distribution(&run.stdout).unwrap();
    // Cells 1/2 - 1/4 and 1/4 on each arm, half the weight per arm.
    let coords: Vec<String> = d.support().map(|p| format!("{p:?}")).collect();
    assert_eq!(coords, ["(0,2)", "(0,4)", "(2,0)", "(4,0)"]);
    assert!(d.atoms().all(|(_, m)| m.to_string() == "1/4"));
}

#[test]
fn generate_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for out in [&a, &b] {
        assert_eq!(xci(&["generate", "--family", "product-ci", "--seed", "7", "-o", path_str(out)]).code, 0);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let c = xci(&["generate", "--family", "product-ci", "--seed", "8"]);
    assert_ne!(std::fs::read_to_string(&a).unwrap(), c.stdout);
}

#[test]
fn generate_params_file_matches_flags() {
    let dir = TempDir::new().unwrap();
    let params = dir.path().join("params.json");
    std::fs::write(&params, r#"{"family":"cross","seed":3,"arms":"2,1,2"}"#).unwrap();
    let from_file = xci(&["generate", "--params", path_str(&params)]);
    let from_flags = xci(&["generate", "--family", "cross", "--seed", "3", "--arms", "2,1,2"]);
    assert_eq!(from_file.code, 0, "{}", from_file.stderr);
    assert_eq!(from_file.stdout, from_flags.stdout);
    let overridden = xci(&["generate", "--params", path_str(&params), "--seed", "4"]);
    assert_ne!(overridden.stdout, from_file.stdout);
    std::fs::write(&params, r#"{"family":"cross","colour":"red"}"#).unwrap();
    assert_eq!(xci(&["generate", "--params", path_str(&params)]).code, 2);
}

#[test]
fn generate_rejects_bad_parameters() {
    assert_eq!(xci(&["generate", "--family", "cross", "--arms", "0,0"]).code, 2);
    assert_eq!(xci(&["generate", "--family", "cross", "--arms", "1"]).code, 2);
    assert_eq!(xci(&["generate", "--family", "pareto-axes", "--tail", "1/2,4"]).code, 2);
    assert_eq!(xci(&["generate", "--family", "pareto-axes", "--arm-weight", "3/2"]).code, 2);
    assert_eq!(xci(&["generate", "--family", "product-ci", "--grid", "3,2;0,1"]).code, 2);
    assert_eq!(xci(&["generate"]).code, 2);
}

#[test]
fn generated_cross_law_passes_all_checks() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("cross.json");
    assert_eq!(xci(&["generate", "--family", "cross", "--seed", "5", "--arms", "3,2,1", "-o", path_str(&out)]).code, 0);
    let run = xci(&["check", "-i", path_str(&out), "--region", "cross"]);
    assert_eq!(run.json()["verdicts"], serde_json::json!({"eh": true, "inner": true, "outer": true}));
    assert_eq!(xci(&["witness", "-i", path_str(&out), "--method", "prop2"]).code, 0);
}

#[test]
fn perturbing_i1_breaks_every_notion() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("p.json");
    let run = xci(&[
        "generate",
        "--family",
        "perturbed",
        "-i",
        path_str(&data("i1.json")),
        "--seed",
        "2",
        "-o",
        path_str(&out),
    ]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let report = xci(&["check", "-i", path_str(&out)]).json();
    assert_eq!(report["verdicts"], serde_json::json!({"eh": false, "inner": false, "outer": false}));
}

#[test]
fn suite_shapes_pass() {
    for shape in ["eh", "cross"] {
        let run = xci(&["suite", "--shape", shape, "--trials", "30", "--seed", "1"]);
        assert_eq!(run.code, 0, "{shape}: {}", run.stderr);
        let suite = &run.json()["suite"];
        assert_eq!(suite["disagreements"], 0);
        assert_eq!(suite["failedInstances"], 0);
        assert_eq!(suite["trials"], 30);
    }
}

#[test]
fn suite_needs_trials() {
    assert_eq!(xci(&["suite", "--trials", "0"]).code, 2);
    assert_eq!(xci(&["suite", "--dim", "5", "--trials", "1"]).code, 2);
}

#[test]
fn suite_is_deterministic() {
    let a = xci(&["suite", "--shape", "cross", "--trials", "12", "--seed", "9"]).json();
    let b = xci(&["suite", "--shape", "cross", "--trials", "12", "--seed", "9"]).json();
    assert_eq!(a["suite"], b["suite"]);
}

/// The d = 3 EH suite flags trials whose closed-form lambda differs from the
/// normalization; each dumped instance must reproduce its verdicts under `check`.
#[test]
fn suite_failure_dumps_reproduce() {
    let dir = TempDir::new().unwrap();
    let run = xci(&["suite", "--shape", "eh", "--dim", "3", "--trials", "10", "--seed", "1"]);
    assert_eq!(run.code, 1, "{}", run.stderr);
    let suite = run.json()["suite"].clone();
    let failures = suite["failures"].as_array().unwrap();
    assert!(!failures.is_empty());
    assert_eq!(suite["disagreements"], 0);
    for (i, f) in failures.iter().enumerate() {
        let input = dir.path().join(format!("dump{i}.json"));
        std::fs::write(&input, serde_json::to_string(&f["instance"]).unwrap()).unwrap();
        let region = f["region"]["type"].as_str().unwrap();
        let threshold = f["region"]["threshold"].as_str().unwrap();
        let partition = f["partition"].as_str().unwrap();
        let rerun = xci(&[
            "check",
            "-i",
            path_str(&input),
            "--partition",
            partition,
            "--region",
            region,
            "--threshold",
            threshold,
        ]);
        assert_eq!(rerun.code, 0, "{}", rerun.stderr);
        assert_eq!(rerun.json()["details"], f["verdicts"]);
    }
}
