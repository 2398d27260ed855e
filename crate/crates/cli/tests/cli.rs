use std::path::Path;
use std::process::{Command, Output};

fn surftrap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_surftrap"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn potential_cut_writes_schema() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cut.csv");
    let o = surftrap(&[
        "potential-cut",
        "--out",
        path_str(&out),
        "--set",
        "cut.z_stop=2e-6",
        "--set",
        "cut.points=5",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "# surftrap potential-cut v1");
    assert_eq!(lines[1], "z_m,u_cp_J,u_ew_J,u_magn_J,u_g_J,u_tot_J,u_tot_uK");
    assert_eq!(lines.len(), 7);
    assert!(lines[6].starts_with("2.00000000000e-6,"));
}

#[test]
fn empty_config_equals_fig2_preset() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("empty.cfg");
    std::fs::write(&cfg, "").unwrap();
    let a = surftrap(&["show-config", "--config", path_str(&cfg)]);
    let b = surftrap(&["show-config", "--preset", "paper-fig2"]);
    assert!(a.status.success() && b.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert!(text.contains("power = 0.5"));
    assert!(text.contains("angle_deg = 47.5"));
}

#[test]
fn shown_config_reloads_to_same_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("fig5.cfg");
    let shown = surftrap(&["show-config", "--preset", "paper-fig5-loss-no-ew", "--set", "beam.power=0.3"]);
    assert!(shown.status.success());
    std::fs::write(&cfg, &shown.stdout).unwrap();
    let again = surftrap(&["show-config", "--config", path_str(&cfg)]);
    assert_eq!(shown.stdout, again.stdout);
}

#[test]
fn errors_are_single_line_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");

    let o = surftrap(&["minimize", "--out", path_str(&out), "--set", "beam.angle_deg=30"]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8(o.stderr).unwrap();
    assert_eq!(err.trim_end().lines().count(), 1);
    let v: serde_json::Value = serde_json::from_str(err.trim_end()).unwrap();
    assert_eq!(v["error"], "validation_error");
    assert!(!out.exists());

    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "[beam]\npower = 0.4\nbogus = 1\n").unwrap();
    let o = surftrap(&["minimize", "--config", path_str(&cfg), "--out", path_str(&out)]);
    assert_eq!(o.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(v["error"], "parse_error");
    assert_eq!(v["line"], 3);

    let o = surftrap(&["minimize", "--out", path_str(&out), "--set", "beam.waist_x=-1e-6"]);
    assert_eq!(o.status.code(), Some(1));

    let o = surftrap(&["sweep-z0", "--preset", "no-such-preset", "--out", path_str(&out)]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn output_independent_of_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for threads in ["1", "3"] {
        let out = dir.path().join(format!("sweep-{threads}.csv"));
        let o = surftrap(&[
            "sweep-z0",
            "--preset",
            "paper-fig4-sweep",
            "--set",
            "sweep.z0_range=-40e-6,40e-6,4e-6",
            "--threads",
            threads,
            "--out",
            path_str(&out),
        ]);
        assert!(o.status.success());
        assert!(String::from_utf8_lossy(&o.stdout).contains("regime fit"));
        outputs.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}
