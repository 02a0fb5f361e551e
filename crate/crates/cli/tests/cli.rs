use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_peano"))
}

fn crate_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

/// Runs `peano` with a config given inline; returns the exit code.
fn run(args: &[&str], config: Option<&str>, out: &Path) -> i32 {
    let mut cmd = bin();
    cmd.args(args).arg("--out").arg(out);
    if let Some(text) = config {
        let path = out.with_extension("json");
        std::fs::write(&path, text).unwrap();
        cmd.arg("--config").arg(path);
    }
    let status = cmd.output().unwrap();
    status.status.code().unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Compares the keys of `value` with the properties of `schema` at every
/// object level, and requires every schema object to be closed.
fn assert_schema_covers(schema: &Value, value: &Value, path: &str) {
    let schema = match schema.get("oneOf") {
        Some(Value::Array(options)) if value.is_null() => {
            assert!(options.iter().any(|o| o["type"] == "null"), "{path} is not nullable");
            return;
        }
        Some(Value::Array(options)) if value.get("preset").is_none() => {
            options.iter().find(|o| o["type"] == "object").unwrap_or_else(|| panic!("{path}: no object variant"))
        }
        Some(Value::Array(options)) => {
            let preset = value.get("preset").expect("tagged");
            options
                .iter()
                .find(|o| o["properties"]["preset"]["const"] == *preset)
                .unwrap_or_else(|| panic!("{path}: no schema variant for {preset}"))
        }
        _ => schema,
    };
    if let Value::Object(fields) = value {
        assert_eq!(schema["additionalProperties"], Value::Bool(false), "{path} must be closed");
        let props = schema["properties"].as_object().unwrap_or_else(|| panic!("{path} has no properties"));
        let mut want: Vec<&String> = props.keys().collect();
        let mut got: Vec<&String> = fields.keys().collect();
        want.sort();
        got.sort();
        assert_eq!(got, want, "keys differ at {path}");
        for (k, v) in fields {
            assert_schema_covers(&props[k], v, &format!("{path}.{k}"));
        }
    }
}

#[test]
fn schema_matches_the_config_types() {
    let schema = read_json(&crate_dir().join("schema/run_config.schema.json"));
    let mut cfg = peano_cli::RunConfig::default();
    cfg.verify.check_eps = Some(cfg.eps);
    assert_schema_covers(&schema, &serde_json::to_value(&cfg).unwrap(), "$");
    let presets = [
        r#"{"preset": "hump"}"#,
        r#"{"preset": "hump_on", "a": 0.1, "b": 0.9}"#,
        r#"{"preset": "tilted"}"#,
        r#"{"preset": "random", "seed": 3}"#,
        r#"{"preset": "custom", "floor": [0.0], "gap": [1.0]}"#,
    ];
    for p in presets {
        let lune: peano_cli::config::LuneSpec = serde_json::from_str(p).unwrap();
        assert_schema_covers(&schema["properties"]["lune"], &serde_json::to_value(&lune).unwrap(), "$.lune");
    }
}

#[test]
fn shipped_configs_parse() {
    for entry in std::fs::read_dir(crate_dir().join("configs")).unwrap() {
        let path = entry.unwrap().path();
        peano_cli::RunConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    }
}

#[test]
fn configuration_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    assert_eq!(run(&["subdivide"], Some(r#"{"depht": 2}"#), &out), 2);
    assert_eq!(run(&["subdivide"], Some(r#"{"depth": 0}"#), &out), 2);
    assert_eq!(run(&["subdivide"], Some("not json"), &out), 2);
    assert_eq!(run(&["subdivide", "--config", "/nonexistent.json"], None, &out), 2);
}

#[test]
fn stack_budget_exits_with_4() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"cylinder": {"depth": 2, "max_stack": 3}, "grids": {"samples": 9}}"#;
    assert_eq!(run(&["cylinder"], Some(cfg), &dir.path().join("o")), 4);
}

#[test]
fn corrupted_schedule_is_flagged_by_verify() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let cfg = r#"{"depth": 3, "verify": {"checks": ["norm_invariant"], "check_eps": {"scale": 0.001, "ratio": 0.5}}}"#;
    assert_eq!(run(&["verify"], Some(cfg), &out), 3);
    let report = read_json(&out.join("verify.json"));
    assert_eq!(report["all_pass"], Value::Bool(false));
    assert_eq!(report["rows"][0]["name"], "norm_invariant");
    assert!(report["rows"][0]["detail"]["failing"].as_u64().unwrap() > 0);

    let cfg = r#"{"depth": 3, "verify": {"checks": ["norm_invariant"]}}"#;
    assert_eq!(run(&["verify"], Some(cfg), &out), 0);
}

#[test]
fn empty_check_list_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    assert_eq!(run(&["verify"], Some(r#"{"verify": {"checks": []}}"#), &out), 0);
    let report = read_json(&out.join("verify.json"));
    assert_eq!(report["rows"], Value::Array(vec![]));
    assert_eq!(report["all_pass"], Value::Bool(true));
}

#[test]
fn subdivide_depth_one_is_a_single_node() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    assert_eq!(run(&["subdivide", "--depth", "1"], None, &out), 0);
    let fam = read_json(&out.join("family.json"));
    assert_eq!(fam["nodes"].as_array().unwrap().len(), 1);
    assert_eq!(fam["nodes"][0]["word"], "1");
    assert_eq!(fam["summary"]["total_nodes"], "1");
}

#[test]
fn subdivide_depth_two_has_two_n_nodes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let cfg = std::fs::read_to_string(crate_dir().join("configs/curve.json")).unwrap();
    assert_eq!(run(&["subdivide", "--format", "json"], Some(&cfg), &out), 0);
    let fam = read_json(&out.join("family.json"));
    let m = fam["summary"]["m"].as_array().unwrap();
    let n = fam["summary"]["n"].as_array().unwrap();
    assert_eq!(m[1].as_u64().unwrap(), 2 * n[0].as_u64().unwrap());
    assert_eq!(m[1].as_u64().unwrap(), 6);
    let depth_two = fam["nodes"].as_array().unwrap().iter().filter(|n| n["depth"] == 2).count();
    assert_eq!(depth_two, 6);
    assert!(!out.join("norms.csv").exists());
}

#[test]
fn cantor_matches_golden_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let cfg = std::fs::read_to_string(crate_dir().join("configs/cantor.json")).unwrap();
    assert_eq!(run(&["cantor"], Some(&cfg), &out), 0);
    for name in ["cantor.csv", "cantor.svg"] {
        let got = std::fs::read(out.join(name)).unwrap();
        let want = std::fs::read(crate_dir().join("tests/golden").join(name)).unwrap();
        assert!(got == want, "{name} differs from the golden file");
    }
    // m_2 = 4 splits [0, 1] into 7 cells; the intervals are the even ones.
    let tree = read_json(&out.join("cantor.json"));
    let second: Vec<(f64, f64)> = tree["intervals"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|r| r["depth"] == 2)
        .map(|r| (r["lo"].as_f64().unwrap(), r["hi"].as_f64().unwrap()))
        .collect();
    assert_eq!(second.len(), 4);
    for (l, &(lo, hi)) in second.iter().enumerate() {
        assert_eq!(lo, (2 * l) as f64 / 7.0);
        assert_eq!(hi, (2 * l + 1) as f64 / 7.0);
    }
}

#[test]
fn csv_columns_are_frozen() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let cfg = r#"{"eps": {"scale": 20000.0, "ratio": 0.5}, "depth": 2, "params": [0.5, 1.0],
        "grids": {"samples": 17, "field": [4, 3], "theta": 64},
        "cylinder": {"depth": 2}, "theorem": {"depth": 2, "curves_per_band": 1}}"#;
    for cmd in ["subdivide", "cantor", "ceiling", "curve", "footprint", "field", "cylinder", "theorem"] {
        assert_eq!(run(&[cmd, "--format", "csv"], Some(cfg), &out), 0, "{cmd}");
    }
    let headers = [
        ("norms.csv", "depth,pattern,support_lo,support_hi,norm,eps,n"),
        ("cantor.csv", "depth,word,lo,hi"),
        ("ceiling.csv", "t,x,value,slope"),
        ("curve.csv", "t,x,y"),
        ("footprint.csv", "t,x,lower,upper"),
        ("field.csv", "x,y,slope"),
        ("cylinder.csv", "t,theta,y"),
        ("beta.csv", "t,band,theta,x,y"),
    ];
    for (name, header) in headers {
        let text = std::fs::read_to_string(out.join(name)).unwrap();
        assert_eq!(text.lines().next().unwrap(), header, "{name}");
    }
    let curve = std::fs::read_to_string(out.join("curve.csv")).unwrap();
    assert_eq!(curve.lines().count(), 18);
}

#[test]
fn footprint_at_one_is_the_whole_lune() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let cfg = r#"{"eps": {"scale": 20000.0, "ratio": 0.5}, "depth": 2, "params": [1.0], "grids": {"samples": 33}}"#;
    assert_eq!(run(&["footprint"], Some(cfg), &out), 0);
    let rec = read_json(&out.join("footprint.json"));
    let dom = rec[0]["clipped_domain"].as_array().unwrap();
    let (lo, hi) = (dom[0].as_f64().unwrap(), dom[1].as_f64().unwrap());
    assert!(lo < 0.05 && hi > 0.95, "domain ({lo}, {hi})");
    let root = peano_core::lune::presets::hump();
    let mut rdr = csv::Reader::from_path(out.join("footprint.csv")).unwrap();
    for row in rdr.records() {
        let row = row.unwrap();
        let x: f64 = row[1].parse().unwrap();
        let upper: f64 = row[3].parse().unwrap();
        assert!((upper - root.ceiling().value(x).unwrap()).abs() < 1e-12, "x = {x}");
    }
}

#[test]
fn render_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = std::fs::read_to_string(crate_dir().join("configs/curve.json")).unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for what in ["curve", "footprint", "field", "cantor"] {
        assert_eq!(run(&["render", what], Some(&cfg), &a), 0);
        assert_eq!(run(&["render", what], Some(&cfg), &b), 0);
    }
    let mut names: Vec<_> = std::fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.iter().all(|n| n.to_string_lossy().ends_with(".svg")));
    assert!(names.len() >= 4);
    for n in names {
        assert_eq!(std::fs::read(a.join(&n)).unwrap(), std::fs::read(b.join(&n)).unwrap(), "{n:?}");
    }
}
