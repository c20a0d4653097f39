use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_rectifier");

// A cheap operating point: small anharmonicity means a large step.
const SMALL: &str = "delta_omega = 30\nGamma = 3\nt_final = 60\naveraging_window = 10\n";

fn rectifier(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn data_rows(csv: &str) -> Vec<&str> {
    csv.lines().filter(|l| !l.starts_with('#')).skip(1).collect()
}

#[test]
fn lists_scenarios() {
    let out = rectifier(&["list"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["fig2a", "fig3d", "fig4", "fig5b"] {
        assert!(text.contains(name));
    }
}

#[test]
fn unknown_scenario_is_a_configuration_error() {
    let out = rectifier(&["run", "fig9"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("fig9"));
}

#[test]
fn invalid_config_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.cfg", "# comment\nn_H = 0.5\nn_C = 0.6\n");
    let out = rectifier(&["run", "fig2a", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3"), "{err}");

    let cfg = write(dir.path(), "typo.cfg", "Gama = 10\n");
    let out = rectifier(&["run", "fig2a", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown key `Gama`"));
}

#[test]
fn sweep_is_deterministic_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.cfg", &format!("{SMALL}grid = 0.3, 0.6\n"));
    let outputs: Vec<String> = ["1", "2", "1"]
        .iter()
        .enumerate()
        .map(|(k, workers)| {
            let out = dir.path().join(format!("run{k}.csv"));
            let o = rectifier(&[
                "run",
                "fig2a",
                "--config",
                &cfg,
                "--out",
                out.to_str().unwrap(),
                "--workers",
                workers,
            ]);
            assert!(matches!(o.status.code(), Some(0) | Some(2)), "{o:?}");
            std::fs::read_to_string(out).unwrap()
        })
        .collect();
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);

    let csv = &outputs[0];
    assert!(csv.starts_with("# dark-diode"));
    assert!(csv.contains("# delta_omega = 30\n"));
    assert!(csv.contains("# grid = 0.3, 0.6\n"));
    let header = csv.lines().find(|l| !l.starts_with('#')).unwrap();
    assert!(header.starts_with("J_prime,J_L_f,J_R_f"));
    assert!(header.ends_with("fluctuation,converged"));
    let rows = data_rows(csv);
    assert_eq!(rows.len(), 2);
    let columns = header.split(',').count();
    for row in rows {
        assert_eq!(row.split(',').count(), columns);
    }
}

#[test]
fn non_converged_points_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "nc.cfg",
        "delta_omega = 30\nGamma = 3\nt_final = 21\naveraging_window = 10\nconvergence_tol = 1e-12\ngrid = 0.01\n",
    );
    let out_path = dir.path().join("nc.csv");
    let o = rectifier(&["run", "fig3c", "--config", &cfg, "--out", out_path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{o:?}");
    let csv = std::fs::read_to_string(out_path).unwrap();
    assert!(data_rows(&csv)[0].ends_with(",false"));
}

#[test]
fn time_series_writes_one_file_per_bias() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "ts.cfg", SMALL);
    let out = dir.path().join("ts.csv");
    let o = rectifier(&["run", "fig4", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(matches!(o.status.code(), Some(0) | Some(2)), "{o:?}");
    for bias in ["forward", "reverse"] {
        let text = std::fs::read_to_string(dir.path().join(format!("ts_{bias}.csv"))).unwrap();
        assert!(text.contains(&format!("# bias = {bias}")));
        let header = text.lines().find(|l| !l.starts_with('#')).unwrap();
        assert_eq!(header, "t,J_L,J_R,W_rate,W_over_domega,P_dark,trace_err,min_eig");
        assert!(data_rows(&text).len() > 50);
    }
}

#[test]
fn transition_writes_summary_and_series() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "tr.cfg", &format!("{SMALL}t_turn = 20\ngrid = 30\n"));
    let out = dir.path().join("tr.csv");
    let o = rectifier(&["run", "fig5b", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(matches!(o.status.code(), Some(0) | Some(2)), "{o:?}");
    let summary = std::fs::read_to_string(&out).unwrap();
    assert_eq!(data_rows(&summary).len(), 1);
    let series = std::fs::read_to_string(dir.path().join("tr_series.csv")).unwrap();
    let rows = data_rows(&series);
    assert!(rows.iter().any(|r| r.contains(",r->f,")));
    assert!(rows.iter().any(|r| r.contains(",f->r,")));
}
