//! Property suites behind `sbfem verify`.
//!
//! Each suite checks one family of invariants and reports pass/fail with a
//! short diagnostic. Numerical breakdown while computing a suite is an error
//! distinct from a property violation.

use sbfem::assembly::{assemble_pair, reduce_dirichlet, AngularProfile};
use sbfem::field::{interpolate, ScalarField, SectorFunction};
use sbfem::linalg::{cholesky, sym_eigen};
use sbfem::mesh::AngularMesh;
use sbfem::norms::{h1tilde_norm, weighted_norm, Weight, WeightedNormSpec};
use sbfem::problems::{sector_angle, test1, test3, BenchmarkCase};
use sbfem::quadrature::gauss_rule;
use sbfem::solver::solve;
use sbfem::spectral::{build_hamiltonian, solve_gevp};

use crate::error::{CliError, Result};

pub struct SuiteResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl SuiteResult {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        SuiteResult { name, passed, detail }
    }
}

fn numerical(e: impl std::fmt::Display) -> CliError {
    CliError::Numerical(e.to_string())
}

/// Runs every suite, collecting one result per suite.
pub fn run_all() -> Result<Vec<SuiteResult>> {
    Ok(vec![
        operator_signature()?,
        modal_residual()?,
        eigen_symmetry()?,
        interpolation_stability()?,
        trace_inequality()?,
        galerkin_residual()?,
        norm_isometry()?,
    ])
}

fn operator_signature() -> Result<SuiteResult> {
    let theta_max = sector_angle::<f64>();
    let mut passed = true;
    let mut worst_eig = f64::INFINITY;
    for (n, p) in [(8, 1), (8, 2), (5, 4), (4, 6)] {
        let mesh = AngularMesh::<f64>::uniform(theta_max, n, p).map_err(numerical)?;
        let pair = assemble_pair(&mesh).map_err(numerical)?;
        passed &= pair.mass.symmetry_defect() <= 1e-13 * pair.mass.max_abs();
        passed &= pair.stiffness.symmetry_defect() <= 1e-13 * pair.stiffness.max_abs();
        passed &= cholesky(&pair.mass).is_ok();
        let eig = sym_eigen(&pair.stiffness).map_err(numerical)?;
        let scale = pair.stiffness.max_abs();
        let min_eig = eig.values[0] / scale;
        worst_eig = worst_eig.min(min_eig);
        passed &= min_eig >= -1e-12;
        let kernel = pair.stiffness.matvec(&vec![1.0; pair.n()]);
        passed &= kernel.iter().all(|v| v.abs() <= 1e-12 * scale.max(1.0));
    }
    Ok(SuiteResult::new(
        "operator-signature",
        passed,
        format!("4 meshes; most negative scaled stiffness eigenvalue {worst_eig:.2e}"),
    ))
}

fn modal_residual() -> Result<SuiteResult> {
    let theta_max = sector_angle::<f64>();
    let mesh = AngularMesh::<f64>::uniform(theta_max, 16, 2).map_err(numerical)?;
    let pair = assemble_pair(&mesh).map_err(numerical)?;
    let (sys, _) = reduce_dirichlet(&pair, None).map_err(numerical)?;
    let modal = solve_gevp(&sys).map_err(numerical)?;
    let mut worst_resid: f64 = 0.0;
    let mut worst_gram: f64 = 0.0;
    for k in 0..modal.n_modes() {
        let lambda = modal.lambda(k);
        let phi = modal.mode(k);
        let av = sys.mass.matvec(phi);
        let bv = sys.stiffness.matvec(phi);
        for i in 0..sys.n() {
            worst_resid = worst_resid.max((bv[i] - lambda * lambda * av[i]).abs());
        }
        for j in 0..=k {
            let want = if j == k { 1.0 } else { 0.0 };
            let got: f64 = modal.mode(j).iter().zip(&av).map(|(a, b)| a * b).sum();
            worst_gram = worst_gram.max((got - want).abs());
        }
    }
    let passed = worst_resid <= 1e-10 && worst_gram <= 1e-10;
    Ok(SuiteResult::new(
        "modal-residual",
        passed,
        format!("pencil residual {worst_resid:.2e}, orthonormality defect {worst_gram:.2e}"),
    ))
}

fn eigen_symmetry() -> Result<SuiteResult> {
    let theta_max = sector_angle::<f64>();
    let mut passed = true;
    let mut worst: f64 = 0.0;
    // Up to 50 free unknowns; the block matrix is twice that size.
    for (n, p) in [(12, 2), (51, 1)] {
        let mesh = AngularMesh::<f64>::uniform(theta_max, n, p).map_err(numerical)?;
        let pair = assemble_pair(&mesh).map_err(numerical)?;
        let (sys, _) = reduce_dirichlet(&pair, None).map_err(numerical)?;
        let modal = solve_gevp(&sys).map_err(numerical)?;
        let block = build_hamiltonian(&sys).map_err(numerical)?;
        let eigs = block.eigenvalues().map_err(numerical)?;
        let mut moduli: Vec<f64> = eigs.iter().map(|(re, im)| re.hypot(*im)).collect();
        moduli.sort_by(f64::total_cmp);
        let mut expected: Vec<f64> = modal
            .lambdas()
            .iter()
            .flat_map(|&l| [l, l])
            .collect();
        expected.sort_by(f64::total_cmp);
        if moduli.len() != expected.len() {
            passed = false;
            continue;
        }
        for (m, e) in moduli.iter().zip(&expected) {
            worst = worst.max((m - e).abs());
        }
    }
    passed &= worst <= 1e-8;
    Ok(SuiteResult::new(
        "eigen-symmetry",
        passed,
        format!("|eig| multiset defect {worst:.2e} up to 50 free unknowns"),
    ))
}

/// Smooth fields with all partials, used by the stability and trace suites.
fn smooth_fields() -> Vec<ScalarField<f64>> {
    vec![
        ScalarField::new(|r: f64, t: f64| r * t.sin())
            .with_d_r(|_, t: f64| t.sin())
            .with_d_theta(|r: f64, t: f64| r * t.cos())
            .with_d_r_theta(|_, t: f64| t.cos()),
        ScalarField::new(|r: f64, t: f64| r * r * t.cos())
            .with_d_r(|r: f64, t: f64| 2.0 * r * t.cos())
            .with_d_theta(|r: f64, t: f64| -r * r * t.sin())
            .with_d_r_theta(|r: f64, t: f64| -2.0 * r * t.sin()),
        ScalarField::new(|r: f64, t: f64| r.sin() * (2.0 * t / 3.0).cos())
            .with_d_r(|r: f64, t: f64| r.cos() * (2.0 * t / 3.0).cos())
            .with_d_theta(|r: f64, t: f64| -r.sin() * (2.0 / 3.0) * (2.0 * t / 3.0).sin())
            .with_d_r_theta(|r: f64, t: f64| -r.cos() * (2.0 / 3.0) * (2.0 * t / 3.0).sin()),
        ScalarField::new(|r: f64, t: f64| r.powi(3) * (1.0 + t))
            .with_d_r(|r: f64, t: f64| 3.0 * r * r * (1.0 + t))
            .with_d_theta(|r: f64, _| r.powi(3))
            .with_d_r_theta(|r: f64, _| 3.0 * r * r),
        ScalarField::new(|r: f64, t: f64| r * t * t * (-t).exp())
            .with_d_r(|_, t: f64| t * t * (-t).exp())
            .with_d_theta(|r: f64, t: f64| r * (2.0 * t - t * t) * (-t).exp())
            .with_d_r_theta(|_, t: f64| (2.0 * t - t * t) * (-t).exp()),
    ]
}

fn interpolation_stability() -> Result<SuiteResult> {
    let theta_max = sector_angle::<f64>();
    let mesh = AngularMesh::<f64>::uniform(theta_max, 7, 1).map_err(numerical)?;
    let inv_r = WeightedNormSpec::for_mesh(Weight::InvR, &mesh).map_err(numerical)?;
    let with_r = inv_r.clone().with_weight(Weight::R);
    let slack = 1.0 + 1e-8;
    let mut passed = true;
    let mut worst_ratio: f64 = 0.0;
    for field in smooth_fields() {
        let pi_u = interpolate(&field, &mesh);
        let lhs = weighted_norm(|r, t| pi_u.d_theta(r, t), &inv_r).map_err(numerical)?;
        let rhs = weighted_norm(|r, t| field.d_theta(r, t), &inv_r).map_err(numerical)?;
        worst_ratio = worst_ratio.max(lhs / rhs);
        passed &= lhs <= slack * rhs;
        let lhs = weighted_norm(|r, t| pi_u.d_r_theta(r, t), &with_r).map_err(numerical)?;
        let rhs = weighted_norm(|r, t| field.d_r_theta(r, t), &with_r).map_err(numerical)?;
        worst_ratio = worst_ratio.max(lhs / rhs);
        passed &= lhs <= slack * rhs;
    }
    Ok(SuiteResult::new(
        "interpolation-stability",
        passed,
        format!("5 fields, both seminorms; worst ratio {worst_ratio:.12}"),
    ))
}

fn trace_inequality() -> Result<SuiteResult> {
    let theta_max = sector_angle::<f64>();
    let spec = WeightedNormSpec::<f64>::new(Weight::R, theta_max).map_err(numerical)?;
    let (rs, ws) = spec.radial_grid().map_err(numerical)?;
    let margin = 1.5;
    let mut passed = true;
    let mut worst_ratio: f64 = 0.0;
    for field in smooth_fields() {
        let u_norm = weighted_norm(|r, t| field.value(r, t), &spec).map_err(numerical)?;
        let du_norm = weighted_norm(|r, t| field.d_theta(r, t), &spec).map_err(numerical)?;
        let bound = margin * (2.0 * u_norm * u_norm + du_norm * du_norm) / theta_max;
        for k in 0..10 {
            let angle = theta_max * (k as f64 + 0.5) / 10.0;
            let mut trace = 0.0;
            for (&r, &w) in rs.iter().zip(&ws) {
                let v = field.value(r, angle).map_err(numerical)?;
                trace += w * r * v * v;
            }
            worst_ratio = worst_ratio.max(trace / bound);
            passed &= trace <= bound;
        }
    }
    Ok(SuiteResult::new(
        "trace-inequality",
        passed,
        format!("10 angles x 5 fields; worst trace/bound {worst_ratio:.6}"),
    ))
}

/// Radial quadrature panels refined geometrically toward the left endpoint,
/// where fractional powers of `r` lose smoothness.
fn refined_radial_panels(a: f64, b: f64) -> Vec<(f64, f64)> {
    let mut cells = vec![];
    let mut right = b;
    let mut left = (b - a) * 0.25 + a;
    while right - a > 1e-9 && left > a * 1.0001 {
        cells.push((left, right));
        right = left;
        left = a + (left - a) * 0.25;
    }
    cells.push((a, right));
    cells.reverse();
    cells
}

/// Largest relative defect of `a(u_s, v_s) = b(v_s)` over test functions
/// `psi_m(r) e_j(theta)` with radial hats inside `(1e-6, 1)` and all free
/// angular basis functions.
fn variational_defect(case: &BenchmarkCase<f64>) -> Result<f64> {
    let rho = 1e-6;
    let sol = solve(&case.problem).map_err(numerical)?;
    let mesh = case.problem.mesh();
    let pair = assemble_pair(mesh).map_err(numerical)?;
    let rule = gauss_rule::<f64>(12).map_err(numerical)?;
    let ang_rule = gauss_rule::<f64>(mesh.assembly_points()).map_err(numerical)?;

    let radial_nodes = [rho, 0.2, 0.4, 0.6, 0.8, 1.0];
    let mut worst: f64 = 0.0;

    for j in pair.free.iter().copied() {
        for m in 1..radial_nodes.len() - 1 {
            let (lo, mid, hi) = (radial_nodes[m - 1], radial_nodes[m], radial_nodes[m + 1]);
            let hat = |r: f64| -> f64 {
                if r <= mid {
                    (r - lo) / (mid - lo)
                } else {
                    (hi - r) / (hi - mid)
                }
            };
            let hat_d = |r: f64| -> f64 {
                if r <= mid {
                    1.0 / (mid - lo)
                } else {
                    -1.0 / (hi - mid)
                }
            };
            let mut lhs = 0.0;
            let mut rhs = 0.0;
            let mut scale = 0.0;
            for piece in [(lo, mid), (mid, hi)] {
                for (ca, cb) in refined_radial_panels(piece.0, piece.1) {
                    for (r, wr) in rule.mapped(ca, cb) {
                        let mut du_ej = 0.0;
                        let mut dtheta_ejp = 0.0;
                        let mut f_ej = 0.0;
                        for e in 0..mesh.n_elements() {
                            let span = mesh.element_span(e);
                            for (t, wt) in ang_rule.mapped(span.0, span.1) {
                                let ej = mesh.eval_basis(j, t).map_err(numerical)?;
                                let ejp = mesh.eval_basis_deriv(j, t).map_err(numerical)?;
                                if ej == 0.0 && ejp == 0.0 {
                                    continue;
                                }
                                du_ej += wt * sol.d_r(r, t).map_err(numerical)? * ej;
                                dtheta_ejp += wt * sol.d_theta(r, t).map_err(numerical)? * ejp;
                                for term in case.problem.load().terms() {
                                    if let AngularProfile::Callable(g) = &term.profile {
                                        f_ej += wt * r.powf(term.alpha) * g(t) * ej;
                                    }
                                }
                            }
                        }
                        let a_part = wr * (du_ej * hat_d(r) * r + dtheta_ejp * hat(r) / r);
                        let b_part = wr * f_ej * hat(r) * r;
                        lhs += a_part;
                        rhs += b_part;
                        scale += a_part.abs() + b_part.abs();
                    }
                }
            }
            worst = worst.max((lhs - rhs).abs() / scale.max(1e-30));
        }
    }
    Ok(worst)
}

fn galerkin_residual() -> Result<SuiteResult> {
    let defect1 = variational_defect(&test1::<f64>(8, 1).map_err(numerical)?)?;
    let defect3 = variational_defect(&test3::<f64>(8, 1).map_err(numerical)?)?;
    let worst = defect1.max(defect3);
    Ok(SuiteResult::new(
        "galerkin-residual",
        worst <= 1e-8,
        format!("worst relative defect {worst:.2e} (zero load {defect1:.2e}, volume load {defect3:.2e})"),
    ))
}

fn norm_isometry() -> Result<SuiteResult> {
    use std::f64::consts::PI;
    let theta_max = sector_angle::<f64>();
    let spec = WeightedNormSpec::<f64>::new(Weight::R, theta_max).map_err(numerical)?;
    // u = y: graph norm squared is 15*pi/16 on this sector.
    let linear = ScalarField::new(|r: f64, t: f64| r * t.sin())
        .with_d_r(|_, t: f64| t.sin())
        .with_d_theta(|r: f64, t: f64| r * t.cos());
    // u = x^2 - y^2: graph norm squared is 13*pi/8.
    let quartic = ScalarField::new(|r: f64, t: f64| r * r * (2.0 * t).cos())
        .with_d_r(|r: f64, t: f64| 2.0 * r * (2.0 * t).cos())
        .with_d_theta(|r: f64, t: f64| -2.0 * r * r * (2.0 * t).sin());
    let mut passed = true;
    let mut worst: f64 = 0.0;
    for (field, square) in [(linear, 15.0 * PI / 16.0), (quartic, 13.0 * PI / 8.0)] {
        let norm = h1tilde_norm(&field, &spec).map_err(numerical)?;
        let defect = (norm - square.sqrt()).abs() / square.sqrt();
        worst = worst.max(defect);
        passed &= defect <= 1e-6;
    }
    Ok(SuiteResult::new(
        "norm-isometry",
        passed,
        format!("worst relative defect against closed forms {worst:.2e}"),
    ))
}
