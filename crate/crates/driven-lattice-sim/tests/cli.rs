//! End-to-end CLI checks against the built `sim` binary.

use std::process::Command;

fn sim() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sim"))
}

#[test]
fn list_presets_names_the_contract() {
    let out = sim().arg("list-presets").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in driven_lattice_sim::scenarios::PRESET_NAMES {
        assert!(text.contains(name), "missing preset {name}");
    }
}

#[test]
fn run_writes_csv_and_report_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("fig1.csv");
    let status = sim()
        .args(["run", "--preset", "fig1_static"])
        .args(["--set", "grid.N_k=16", "--set", "grid.dt_au=0.5"])
        .arg("--out")
        .arg(&out_path)
        .status()
        .unwrap();
    assert!(status.success());

    let csv = std::fs::read_to_string(&out_path).unwrap();
    assert!(csv.starts_with("# driven-lattice-sim v"));
    assert!(csv.contains("t_fs,A_au,E_au,n_B,n_H,n_PH,J_au"));
    assert!(!csv.contains('\r'));

    let report = std::fs::read_to_string(dir.path().join("fig1.csv.report.txt")).unwrap();
    assert!(report.contains("preset: fig1_static"));
    assert!(report.contains("output_sha256:"));
    assert!(report.contains("max_norm_drift"));
}

#[test]
fn unknown_preset_fails_with_code_one() {
    let out = sim()
        .args(["run", "--preset", "fig9_imaginary", "--out", "/tmp/never.csv"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("unknown preset"));
}

#[test]
fn bad_config_value_reports_origin() {
    let out = sim()
        .args(["run", "--preset", "fig1_static", "--set", "grid.dt_au=-1", "--out", "/tmp/never.csv"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("grid.dt_au"), "stderr: {err}");
}

#[test]
fn strong_preset_requires_explicit_amplitude() {
    let out = sim()
        .args(["run", "--preset", "fig3_offres_strong", "--out", "/tmp/never.csv"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("field.E0_MVcm"));
    assert!(err.to_lowercase().contains("4 mv/cm"), "hint should document the reading: {err}");
}

#[test]
fn validate_unknown_check_fails_cleanly() {
    let out = sim().args(["validate", "not_a_preset"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}
