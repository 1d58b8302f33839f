//! End-to-end behavior of the `sbfem` binary: flags, config files, exit
//! codes, and emitted artifacts.

use std::fs;
use std::process::{Command, Output};

use sbfem_cli::error::CliError;
use sbfem_cli::study::{parse_csv, CSV_HEADER};

fn sbfem(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sbfem"))
        .args(args)
        .output()
        .expect("spawn sbfem")
}

#[test]
fn exit_codes_by_error_class() {
    assert_eq!(CliError::Config("x".into()).exit_code(), 1);
    assert_eq!(CliError::Io("x".into()).exit_code(), 1);
    assert_eq!(CliError::Numerical("x".into()).exit_code(), 2);
    assert_eq!(CliError::Property("x".into()).exit_code(), 3);
}

#[test]
fn bad_usage_exits_with_config_code() {
    let out = sbfem(&["run", "--problem", "test9"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown problem"));

    let out = sbfem(&["run", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(1));

    let out = sbfem(&["run", "--problem", "test1", "--levels", "8,4"]);
    assert_eq!(out.status.code(), Some(1));

    let out = sbfem(&["run", "--problem", "test1", "--theta-max", "3.0"]);
    assert_eq!(out.status.code(), Some(1));

    let out = sbfem(&["run", "--problem", "test1", "--config", "/no/such/file.conf"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn help_is_not_an_error() {
    let out = sbfem(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("run") && text.contains("verify"));
}

#[test]
fn study_writes_csv_and_plot_files() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("out.csv");
    let plot_dir = dir.path().join("plots");
    let out = sbfem(&[
        "run",
        "--problem",
        "test1",
        "--orders",
        "1",
        "--levels",
        "4,8",
        "--out",
        csv_path.to_str().unwrap(),
        "--plot-dir",
        plot_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let text = fs::read_to_string(&csv_path).unwrap();
    assert!(text.starts_with(&format!("{CSV_HEADER}\n")));
    let records = parse_csv(&text).unwrap();
    assert_eq!(records.len(), 2);
    assert_eq!(records[0].problem, "test1");
    assert_eq!(records[0].n_elements, 4);
    assert!(records[0].rate_l2.is_none() && records[0].rate_h1.is_none());
    assert!(records[1].rate_l2.is_some() && records[1].rate_h1.is_some());
    assert!(records[1].err_l2r < records[0].err_l2r);

    for tag in ["L2r", "H1tilde"] {
        let path = plot_dir.join(format!("test1_p1_{tag}.dat"));
        let body = fs::read_to_string(&path).unwrap();
        let rows: Vec<&str> = body.lines().collect();
        assert_eq!(rows.len(), 2);
        for row in rows {
            let cols: Vec<f64> = row
                .split_whitespace()
                .map(|c| c.parse().unwrap())
                .collect();
            assert_eq!(cols.len(), 2);
            assert!(cols[0] > 0.0 && cols[1] > 0.0);
        }
    }
}

#[test]
fn config_file_drives_a_run_and_flags_override_it() {
    let dir = tempfile::tempdir().unwrap();
    let conf_path = dir.path().join("study.conf");
    let out_a = dir.path().join("a.csv");
    let out_b = dir.path().join("b.csv");
    fs::write(
        &conf_path,
        format!(
            "# tiny study\nproblem = test3\norders = 1\nlevels = 4,8\nout = {}\n",
            out_a.display()
        ),
    )
    .unwrap();

    let out = sbfem(&["run", "--config", conf_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let records = parse_csv(&fs::read_to_string(&out_a).unwrap()).unwrap();
    assert_eq!(records.len(), 2);
    assert_eq!(records[0].problem, "test3");

    let out = sbfem(&[
        "run",
        "--config",
        conf_path.to_str().unwrap(),
        "--orders",
        "2",
        "--out",
        out_b.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let records = parse_csv(&fs::read_to_string(&out_b).unwrap()).unwrap();
    assert_eq!(records[0].p, 2, "flag should override file order list");
}

#[test]
fn config_file_junk_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let conf_path = dir.path().join("study.conf");
    fs::write(&conf_path, "problem = test1\nvolume = 11\n").unwrap();
    let out = sbfem(&["run", "--config", conf_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown config key"));
}

#[test]
fn custom_problem_runs_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("custom.csv");
    let out = sbfem(&[
        "run",
        "--problem",
        "custom",
        "--theta-max",
        "3.141592653589793",
        "--k",
        "2",
        "--orders",
        "2",
        "--levels",
        "4,8,16",
        "--out",
        csv_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let records = parse_csv(&fs::read_to_string(&csv_path).unwrap()).unwrap();
    // The smallest exponent on the half-disc is pi/theta_max = 1, whatever
    // mode the boundary data excites; at 16 quadratic elements it is
    // resolved to discretization accuracy.
    assert!((records.last().unwrap().lambda_min - 1.0).abs() < 1e-5);
    assert!(records[2].err_l2r < records[0].err_l2r);
}

#[test]
fn verify_subcommand_reports_every_suite() {
    let out = sbfem(&["verify"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    for suite in [
        "operator-signature",
        "modal-residual",
        "eigen-symmetry",
        "interpolation-stability",
        "trace-inequality",
        "galerkin-residual",
        "norm-isometry",
    ] {
        assert!(text.contains(suite), "missing suite line for {suite}");
    }
    assert_eq!(text.matches("PASS").count(), 7);
}

#[test]
fn single_level_study_has_no_rate_fields() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("single.csv");
    let out = sbfem(&[
        "run",
        "--problem",
        "test1",
        "--orders",
        "1,2",
        "--levels",
        "8",
        "--out",
        csv_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(&csv_path).unwrap();
    let records = parse_csv(&text).unwrap();
    assert_eq!(records.len(), 2);
    for r in &records {
        assert!(r.rate_l2.is_none() && r.rate_h1.is_none());
    }
    for line in text.lines().skip(1) {
        assert!(line.contains(",,,"), "rate fields should be empty: {line}");
    }
}
