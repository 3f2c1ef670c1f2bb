use std::path::Path;
use std::process::{Command, Output};

fn uuv_sim(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_uuv-sim"))
        .args(args)
        .current_dir(cwd)
        .env_remove("UUV_SIM_OUT")
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn run_writes_all_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = uuv_sim(
        &["run", "--preset", "straight", "--controller", "bio_bs+bio_smc", "--set", "scenario.duration=10", "-o", "res"],
        dir.path(),
    );
    let stdout = ok(&out);
    assert!(stdout.contains("bio_bs+bio_smc"));
    let res = dir.path().join("res");
    for name in ["trace.csv", "metrics.json", "plot.svg", "config.json"] {
        assert!(res.join(name).is_file(), "{name} missing");
    }
    let metrics: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(res.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(metrics["schema_version"], 1);
    assert_eq!(metrics["config"]["scenario"]["duration"], 10.0);
    assert!(metrics["seed"].is_null());
    assert!(metrics["metrics"]["chattering_index"].as_array().unwrap().len() == 3);
    let svg = std::fs::read_to_string(res.join("plot.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    assert!(svg.contains("<desc>seed=none config={"));
    let csv = std::fs::read_to_string(res.join("trace.csv")).unwrap();
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 1 + 1001);
}

#[test]
fn export_toggles() {
    let dir = tempfile::tempdir().unwrap();
    ok(&uuv_sim(
        &["run", "-p", "circle", "--set", "scenario.duration=1", "--no-svg", "--no-csv", "-o", "."],
        dir.path(),
    ));
    assert!(dir.path().join("metrics.json").is_file());
    assert!(!dir.path().join("trace.csv").exists());
    assert!(!dir.path().join("plot.svg").exists());
}

#[test]
fn output_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_uuv-sim"))
        .args(["run", "-p", "straight", "--set", "scenario.duration=1", "--no-svg"])
        .current_dir(dir.path())
        .env("UUV_SIM_OUT", "from-env")
        .output()
        .unwrap();
    ok(&out);
    assert!(dir.path().join("from-env/trace.csv").is_file());
}

#[test]
fn same_seed_gives_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["a", "b"] {
        ok(&uuv_sim(
            &["run", "-p", "circle_noisy", "--seed", "11", "--set", "scenario.duration=5", "--no-svg", "-o", name],
            dir.path(),
        ));
    }
    let a = std::fs::read(dir.path().join("a/trace.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b/trace.csv")).unwrap();
    assert_eq!(a, b);
    assert!(String::from_utf8(a).unwrap().lines().nth(1) == Some("# seed=11"));
}

#[test]
fn config_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("run.toml"),
        r#"
preset = "straight"
controller = "conv_bs+sat_smc"
out_dir = "from-file"

[export]
svg = false

[scenario]
duration = 3.0

[dynamic]
k = [3.0, 3.0, 0.3]
"#,
    )
    .unwrap();
    ok(&uuv_sim(&["run", "-c", "run.toml", "--set", "kinematic.k_a=1.5"], dir.path()));
    let cfg: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("from-file/config.json")).unwrap()).unwrap();
    assert_eq!(cfg["scenario"]["controller"], "conv_bs+sat_smc");
    assert_eq!(cfg["scenario"]["duration"], 3.0);
    assert_eq!(cfg["dynamic"]["k"][2], 0.3);
    assert_eq!(cfg["kinematic"]["k_a"], 1.5);
    assert!(!dir.path().join("from-file/plot.svg").exists());
}

#[test]
fn shown_preset_reloads_as_config() {
    let dir = tempfile::tempdir().unwrap();
    let toml = ok(&uuv_sim(&["presets", "--show", "circle_noisy"], dir.path()));
    std::fs::write(dir.path().join("preset.toml"), toml).unwrap();
    let args = ["--set", "scenario.duration=2", "--no-svg", "--no-metrics"];
    ok(&uuv_sim(&[&["run", "-c", "preset.toml", "-o", "from-file"][..], &args[..]].concat(), dir.path()));
    ok(&uuv_sim(&[&["run", "-p", "circle_noisy", "-o", "from-preset"][..], &args[..]].concat(), dir.path()));
    assert_eq!(
        std::fs::read(dir.path().join("from-file/trace.csv")).unwrap(),
        std::fs::read(dir.path().join("from-preset/trace.csv")).unwrap()
    );
}

#[test]
fn bad_input_exits_nonzero_with_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [(&[&str], &str); 5] = [
        (&["run", "-p", "straight", "--set", "vehicle.mass=2"], "vehicle.mass"),
        (&["run", "-p", "straight", "--set", "scenario.dt=0"], "scenario.dt"),
        (&["run", "-p", "zigzag"], "zigzag"),
        (&["run", "-p", "circle", "--seed", "3"], "seed"),
        (&["run", "-p", "straight", "--controller", "pid"], "pid"),
    ];
    for (args, needle) in cases {
        let out = uuv_sim(args, dir.path());
        assert!(!out.status.success(), "{args:?} should fail");
        let stderr = String::from_utf8_lossy(&out.stderr);
        assert!(stderr.contains(needle), "{args:?}: {stderr}");
    }
}

#[test]
fn compare_ranks_bio_before_sat_before_sign() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = ok(&uuv_sim(
        &["compare", "-p", "circle", "--controllers", "bio_bs+sign_smc,bio_bs+sat_smc,bio_bs+bio_smc", "-j", "2", "--traces", "-o", "cmp"],
        dir.path(),
    ));
    let order: Vec<&str> = stdout.lines().skip(1).filter_map(|l| l.split_whitespace().nth(1)).filter(|w| w.contains('+')).collect();
    assert_eq!(order, ["bio_bs+bio_smc", "bio_bs+sat_smc", "bio_bs+sign_smc"]);
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("cmp/compare.json")).unwrap()).unwrap();
    assert_eq!(doc["runs"].as_array().unwrap().len(), 3);
    assert_eq!(doc["runs"][0]["rank"], 1);
    assert!(dir.path().join("cmp/bio_bs_sat_smc.csv").is_file());
}

#[test]
fn sweep_over_values_and_range() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = ok(&uuv_sim(
        &["sweep", "-p", "straight", "--param", "kinematic.k_a", "--values", "1,2", "--set", "scenario.duration=5", "-o", "s1"],
        dir.path(),
    ));
    assert_eq!(stdout.lines().count(), 1 + 2 + 1);
    ok(&uuv_sim(
        &["sweep", "-p", "straight", "--param", "dynamic.k.0", "--range", "1:3:3", "--set", "scenario.duration=5", "-o", "s2"],
        dir.path(),
    ));
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("s2/sweep.json")).unwrap()).unwrap();
    let values: Vec<f64> = doc["points"].as_array().unwrap().iter().map(|p| p["value"].as_f64().unwrap()).collect();
    assert_eq!(values, [1.0, 2.0, 3.0]);
    let out = uuv_sim(&["sweep", "-p", "straight", "--param", "kinematic.nope", "--values", "1"], dir.path());
    assert!(!out.status.success());
}

#[test]
fn plot_renders_existing_trace() {
    let dir = tempfile::tempdir().unwrap();
    ok(&uuv_sim(&["run", "-p", "circle", "--set", "scenario.duration=3", "--no-svg", "-o", "r"], dir.path()));
    ok(&uuv_sim(&["plot", "r/trace.csv"], dir.path()));
    let svg = std::fs::read_to_string(dir.path().join("r/trace.svg")).unwrap();
    assert!(svg.contains("Velocity commands"));
    std::fs::write(dir.path().join("junk.csv"), "a,b\n1,2\n").unwrap();
    assert!(!uuv_sim(&["plot", "junk.csv"], dir.path()).status.success());
}

#[test]
fn presets_lists_all_names() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = ok(&uuv_sim(&["presets"], dir.path()));
    for name in ["straight", "circle", "circle_noisy"] {
        assert!(stdout.lines().any(|l| l.starts_with(name)));
    }
}
