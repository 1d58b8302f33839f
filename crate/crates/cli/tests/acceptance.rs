//! Acceptance gate: one test per release criterion, each printing a
//! pass/fail line. Tolerances here are the shipped contract; do not loosen
//! them to make a failing build green.

use std::fmt::Write as _;
use std::time::Instant;

use sbfem::assembly::{assemble_pair, reduce_dirichlet};
use sbfem::field::interpolate;
use sbfem::mesh::AngularMesh;
use sbfem::norms::{h1tilde_error, Weight, WeightedNormSpec};
use sbfem::problems::{sector_angle, test1, test3};
use sbfem::solver::{residual_check, solve};
use sbfem::spectral::{build_hamiltonian, solve_gevp};

use sbfem_cli::config::{ConfigOverrides, StudyConfig};
use sbfem_cli::study::{estimate_rates, format_csv, run_study, ConvergenceRecord, ErrorNorm};
use sbfem_cli::verify;

fn report(criterion: usize, name: &str, ok: bool, detail: &str) {
    let status = if ok { "PASS" } else { "FAIL" };
    println!("[acceptance] criterion {criterion} ({name}): {status}: {detail}");
    assert!(ok, "criterion {criterion} ({name}) failed: {detail}");
}

fn study_config(problem: &str, orders: &[usize]) -> StudyConfig {
    StudyConfig::build(ConfigOverrides {
        problem: Some(problem.into()),
        orders: Some(orders.to_vec()),
        ..ConfigOverrides::default()
    })
    .unwrap()
}

/// Runs a study, asserting it completed, and returns its records.
fn completed_study(problem: &str, orders: &[usize]) -> Vec<ConvergenceRecord> {
    let outcome = run_study(&study_config(problem, orders));
    if let Some(e) = outcome.failure {
        panic!("{problem} study aborted: {e}");
    }
    outcome.records
}

/// Checks fitted slopes for every order against `target(p)` within
/// `window(p)`, appending findings to `detail`.
fn slopes_in_window(
    records: &[ConvergenceRecord],
    orders: &[usize],
    target_l2: impl Fn(usize) -> f64,
    window_l2: impl Fn(usize) -> f64,
    target_h1: impl Fn(usize) -> f64,
    window_h1: impl Fn(usize) -> f64,
    detail: &mut String,
) -> bool {
    let fits = estimate_rates(records).expect("rate fit");
    let mut ok = true;
    for &p in orders {
        for fit in fits.iter().filter(|f| f.p == p) {
            let (target, window) = match fit.norm {
                ErrorNorm::L2r => (target_l2(p), window_l2(p)),
                ErrorNorm::H1Tilde => (target_h1(p), window_h1(p)),
            };
            let hit = (fit.slope - target).abs() <= window;
            ok &= hit;
            let _ = write!(
                detail,
                "p={p} {} {:.3} (want {target} +/- {window}); ",
                fit.norm.file_tag(),
                fit.slope
            );
        }
    }
    ok
}

/// Errors must decrease strictly with refinement while above the roundoff
/// floor that the rate fits also use.
fn monotone_decay(records: &[ConvergenceRecord]) -> bool {
    let floor = 1e-11;
    let mut ok = true;
    let mut prev: Option<&ConvergenceRecord> = None;
    for r in records {
        if let Some(q) = prev {
            if q.p == r.p && q.problem == r.problem {
                ok &= r.err_l2r < q.err_l2r || q.err_l2r < floor;
                ok &= r.err_h1tilde < q.err_h1tilde || q.err_h1tilde < floor;
            }
        }
        prev = Some(r);
    }
    ok
}

#[test]
fn criterion_1_test1_convergence() {
    let start = Instant::now();
    let orders = [1, 2, 4, 6];
    let records = completed_study("test1", &orders);
    let mut detail = String::new();
    let mut ok = slopes_in_window(
        &records,
        &orders,
        |p| (p + 1) as f64,
        |p| if p >= 4 { 0.3 } else { 0.2 },
        |p| p as f64,
        |_| 0.2,
        &mut detail,
    );
    ok &= monotone_decay(&records);
    let elapsed = start.elapsed().as_secs_f64();
    ok &= elapsed < 60.0;
    let _ = write!(detail, "elapsed {elapsed:.1}s");
    report(1, "test1 convergence", ok, &detail);
}

#[test]
fn criterion_2_test2_convergence() {
    let orders = [1, 2];
    let records = completed_study("test2", &orders);
    let mut detail = String::new();
    let mut ok = slopes_in_window(
        &records,
        &orders,
        |p| (p + 1) as f64,
        |_| 0.2,
        |p| p as f64,
        |_| 0.2,
        &mut detail,
    );
    ok &= monotone_decay(&records);
    report(2, "test2 convergence with log term", ok, &detail);
}

#[test]
fn criterion_3_manufactured_load() {
    let orders = [1, 2];
    let records = completed_study("test3", &orders);
    let mut detail = String::new();
    let mut ok = slopes_in_window(
        &records,
        &orders,
        |p| (p + 1) as f64,
        |_| 0.2,
        |p| p as f64,
        |_| 0.2,
        &mut detail,
    );
    ok &= monotone_decay(&records);

    let case = test3::<f64>(32, 2).unwrap();
    let pair = assemble_pair(case.problem.mesh()).unwrap();
    let sol = solve(&case.problem).unwrap();
    let resid = residual_check(&sol, &pair, case.problem.load(), &[0.1, 0.5, 0.9]).unwrap();
    ok &= resid <= 1e-9;
    let _ = write!(detail, "ODE residual {resid:.2e}");
    report(3, "manufactured load", ok, &detail);
}

#[test]
fn criterion_4_spectral_correctness() {
    let records = completed_study("test1", &[2]);
    let mut ok = true;
    let mut detail = String::new();

    let finest = records.last().unwrap();
    assert_eq!(finest.n_elements, 64);
    let gap = (finest.lambda_min - 2.0 / 3.0).abs();
    ok &= gap <= 1e-3;
    let _ = write!(detail, "lambda_1 off by {gap:.2e} at 64 elements; ");

    // Decreasing under refinement, with machine-precision slack once the
    // sequence has converged, and never more than roundoff below 2/3.
    for pair in records.windows(2) {
        ok &= pair[1].lambda_min <= pair[0].lambda_min + 1e-12;
    }
    ok &= records.iter().all(|r| r.lambda_min >= 2.0 / 3.0 - 1e-10);

    let theta_max = sector_angle::<f64>();
    let mut worst: f64 = 0.0;
    for (n, p) in [(12, 2), (25, 2), (51, 1)] {
        let mesh = AngularMesh::<f64>::uniform(theta_max, n, p).unwrap();
        let pair = assemble_pair(&mesh).unwrap();
        let (sys, _) = reduce_dirichlet(&pair, None).unwrap();
        assert!(sys.n() <= 50);
        let modal = solve_gevp(&sys).unwrap();
        let eigs = build_hamiltonian(&sys).unwrap().eigenvalues().unwrap();
        let mut moduli: Vec<f64> = eigs.iter().map(|(re, im)| re.hypot(*im)).collect();
        moduli.sort_by(f64::total_cmp);
        let mut expected: Vec<f64> = modal.lambdas().iter().flat_map(|&l| [l, l]).collect();
        expected.sort_by(f64::total_cmp);
        ok &= moduli.len() == expected.len();
        for (m, e) in moduli.iter().zip(&expected) {
            worst = worst.max((m - e).abs());
        }
    }
    ok &= worst <= 1e-8;
    let _ = write!(detail, "block-eigenvalue multiset defect {worst:.2e}");
    report(4, "spectral correctness", ok, &detail);
}

#[test]
fn criterion_5_interpolation_rates() {
    let theta_max = sector_angle::<f64>();
    let exact = test1::<f64>(4, 1).unwrap().exact;
    let mut stub = Vec::new();
    for n in [4usize, 8, 16, 32] {
        let mesh = AngularMesh::<f64>::uniform(theta_max, n, 1).unwrap();
        let spec = WeightedNormSpec::for_mesh(Weight::R, &mesh).unwrap();
        let pi_u = interpolate(&exact, &mesh);
        let (l2, h1) = h1tilde_error(&pi_u, &exact, &spec).unwrap();
        stub.push(ConvergenceRecord {
            problem: "interpolant".into(),
            p: 1,
            n_elements: n,
            h: theta_max / n as f64,
            err_l2r: l2,
            err_h1tilde: h1,
            rate_l2: None,
            rate_h1: None,
            lambda_min: 0.0,
            wall_time_ms: 0,
        });
    }
    let fits = estimate_rates(&stub).unwrap();
    let mut ok = true;
    let mut detail = String::new();
    for fit in fits {
        let target = match fit.norm {
            ErrorNorm::L2r => 2.0,
            ErrorNorm::H1Tilde => 1.0,
        };
        ok &= (fit.slope - target).abs() <= 0.15;
        let _ = write!(
            detail,
            "{} {:.3} (want {target} +/- 0.15); ",
            fit.norm.file_tag(),
            fit.slope
        );
    }
    report(5, "interpolation error rates", ok, &detail);
}

#[test]
fn criterion_6_property_suites() {
    let results = verify::run_all().unwrap();
    let mut ok = true;
    let mut detail = String::new();
    for suite in &results {
        ok &= suite.passed;
        let _ = write!(
            detail,
            "{} {}; ",
            suite.name,
            if suite.passed { "ok" } else { "VIOLATED" }
        );
    }
    report(6, "property suites", ok, &detail);
}

/// Replaces the informational wall-time column, which is the one field
/// allowed to differ between otherwise identical runs.
fn mask_wall_time(csv: &str) -> String {
    csv.lines()
        .map(|line| match line.rsplit_once(',') {
            Some((head, _)) => format!("{head},*"),
            None => line.to_string(),
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn criterion_7_deterministic_output() {
    let config = StudyConfig::build(ConfigOverrides {
        problem: Some("test1".into()),
        orders: Some(vec![1, 2]),
        levels: Some(vec![4, 8, 16]),
        ..ConfigOverrides::default()
    })
    .unwrap();

    let first = run_study(&config);
    let second = run_study(&config);
    assert!(first.failure.is_none() && second.failure.is_none());
    let a = mask_wall_time(&format_csv(&first.records));
    let b = mask_wall_time(&format_csv(&second.records));
    let ok = a == b && a.lines().count() == 7;
    report(
        7,
        "deterministic output",
        ok,
        "two runs byte-identical outside the wall-time column",
    );
}
