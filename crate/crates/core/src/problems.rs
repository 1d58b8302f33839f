//! Built-in benchmark problems on the three-quarter disk and their exact
//! solutions.
//!
//! All three standard cases live on the sector of angle `3 pi / 2`, where the
//! corner exponent is `2/3` and solutions are singular at the origin:
//!
//! * `test1`: harmonic, boundary data `sin(2 theta / 3)`, exact solution
//!   `r^(2/3) sin(2 theta / 3)`.
//! * `test2`: harmonic with non-vanishing side traces `r^(2/3)`, exact
//!   solution containing an `r^(2/3) log r` component.
//! * `test3`: manufactured source `(209/36) r^(1/2) sin(2 theta / 3)` with
//!   homogeneous boundary, exact solution `(r^(2/3) - r^(5/2)) sin(2 theta/3)`,
//!   exercising the particular-solution path.
//!
//! [`harmonic_mode`] generalizes `test1` to any opening angle and mode index.

use crate::assembly::{AngularProfile, SeparableLoad};
use crate::error::Result;
use crate::field::ScalarField;
use crate::mesh::AngularMesh;
use crate::scalar::Scalar;
use crate::solver::SbfemProblem;

/// Opening angle shared by the built-in benchmarks.
pub fn sector_angle<T: Scalar>() -> T {
    T::of(1.5) * T::PI()
}

/// A problem together with the exact solution it converges to.
pub struct BenchmarkCase<T> {
    pub problem: SbfemProblem<T>,
    pub exact: ScalarField<T>,
}

/// Harmonic benchmark: boundary data `sin(2 theta / 3)`, no source.
pub fn test1<T: Scalar>(n_elements: usize, order: usize) -> Result<BenchmarkCase<T>> {
    let mesh = AngularMesh::uniform(sector_angle::<T>(), n_elements, order)?;
    let nu = T::of(2.0 / 3.0);
    let problem = SbfemProblem::new(mesh, SeparableLoad::empty(), move |theta: T| {
        (nu * theta).sin()
    })?;
    let exact = ScalarField::new(move |r: T, t: T| r.powf(nu) * (nu * t).sin())
        .with_d_r(move |r: T, t: T| nu * r.powf(nu - T::one()) * (nu * t).sin())
        .with_d_theta(move |r: T, t: T| nu * r.powf(nu) * (nu * t).cos())
        .with_d_theta_theta(move |r: T, t: T| -nu * nu * r.powf(nu) * (nu * t).sin())
        .with_d_r_theta(move |r: T, t: T| nu * nu * r.powf(nu - T::one()) * (nu * t).cos());
    Ok(BenchmarkCase { problem, exact })
}

/// Angular factors of the `test2` solution `r^nu (a(theta) + b(theta) log r)`
/// and their derivatives.
fn test2_factors<T: Scalar>(theta: T) -> [T; 6] {
    let nu = T::of(2.0 / 3.0);
    let c = T::one() - T::of(4.0) * theta / (T::of(3.0) * T::PI());
    let dc = -T::of(4.0) / (T::of(3.0) * T::PI());
    let (s, co) = (nu * theta).sin_cos();
    let a = c * co;
    let da = dc * co - nu * c * s;
    let dda = -T::of(2.0) * nu * dc * s - nu * nu * c * co;
    let b = T::of(4.0) / (T::of(3.0) * T::PI()) * -s;
    let db = -T::of(4.0) / (T::of(3.0) * T::PI()) * nu * co;
    let ddb = T::of(4.0) / (T::of(3.0) * T::PI()) * nu * nu * s;
    [a, da, dda, b, db, ddb]
}

/// Harmonic benchmark whose side edges carry the trace `r^(2/3)`; the exact
/// solution picks up an `r^(2/3) log r` term.
pub fn test2<T: Scalar>(n_elements: usize, order: usize) -> Result<BenchmarkCase<T>> {
    let mesh = AngularMesh::uniform(sector_angle::<T>(), n_elements, order)?;
    let nu = T::of(2.0 / 3.0);
    let problem = SbfemProblem::with_side_trace(
        mesh,
        SeparableLoad::empty(),
        |theta: T| test2_factors(theta)[0],
        nu,
    )?;
    let exact = ScalarField::new(move |r: T, t: T| {
        let [a, _, _, b, _, _] = test2_factors(t);
        r.powf(nu) * (a + b * r.ln())
    })
    .with_d_r(move |r: T, t: T| {
        let [a, _, _, b, _, _] = test2_factors(t);
        r.powf(nu - T::one()) * (nu * a + b + nu * b * r.ln())
    })
    .with_d_theta(move |r: T, t: T| {
        let [_, da, _, _, db, _] = test2_factors(t);
        r.powf(nu) * (da + db * r.ln())
    })
    .with_d_theta_theta(move |r: T, t: T| {
        let [_, _, dda, _, _, ddb] = test2_factors(t);
        r.powf(nu) * (dda + ddb * r.ln())
    })
    .with_d_r_theta(move |r: T, t: T| {
        let [_, da, _, _, db, _] = test2_factors(t);
        r.powf(nu - T::one()) * (nu * da + db + nu * db * r.ln())
    });
    Ok(BenchmarkCase { problem, exact })
}

/// Manufactured benchmark: source `(209/36) r^(1/2) sin(2 theta / 3)` with
/// zero boundary data; the exact solution combines the singular harmonic mode
/// with the particular power `r^(5/2)`.
pub fn test3<T: Scalar>(n_elements: usize, order: usize) -> Result<BenchmarkCase<T>> {
    let mesh = AngularMesh::uniform(sector_angle::<T>(), n_elements, order)?;
    let nu = T::of(2.0 / 3.0);
    let load = SeparableLoad::with_term(
        T::of(0.5),
        AngularProfile::callable(move |theta: T| T::of(209.0 / 36.0) * (nu * theta).sin()),
    )?;
    let problem = SbfemProblem::new(mesh, load, |_| T::zero())?;
    let radial = move |r: T| r.powf(nu) - r.powf(T::of(2.5));
    let dradial = move |r: T| nu * r.powf(nu - T::one()) - T::of(2.5) * r.powf(T::of(1.5));
    let exact = ScalarField::new(move |r: T, t: T| radial(r) * (nu * t).sin())
        .with_d_r(move |r: T, t: T| dradial(r) * (nu * t).sin())
        .with_d_theta(move |r: T, t: T| radial(r) * nu * (nu * t).cos())
        .with_d_theta_theta(move |r: T, t: T| -radial(r) * nu * nu * (nu * t).sin())
        .with_d_r_theta(move |r: T, t: T| dradial(r) * nu * (nu * t).cos());
    Ok(BenchmarkCase { problem, exact })
}

/// Harmonic benchmark on an arbitrary sector: boundary data
/// `sin(k pi theta / theta_max)`, exact solution `r^mu sin(mu theta)` with
/// `mu = k pi / theta_max`.
pub fn harmonic_mode<T: Scalar>(
    theta_max: T,
    k: usize,
    n_elements: usize,
    order: usize,
) -> Result<BenchmarkCase<T>> {
    if k == 0 {
        return Err(crate::error::SbfemError::InvalidArgument(
            "mode index must be at least 1".into(),
        ));
    }
    let mesh = AngularMesh::uniform(theta_max, n_elements, order)?;
    let mu = T::from_usize(k).expect("small integer") * T::PI() / theta_max;
    let problem = SbfemProblem::new(mesh, SeparableLoad::empty(), move |theta: T| {
        (mu * theta).sin()
    })?;
    let exact = ScalarField::new(move |r: T, t: T| r.powf(mu) * (mu * t).sin())
        .with_d_r(move |r: T, t: T| mu * r.powf(mu - T::one()) * (mu * t).sin())
        .with_d_theta(move |r: T, t: T| mu * r.powf(mu) * (mu * t).cos())
        .with_d_theta_theta(move |r: T, t: T| -mu * mu * r.powf(mu) * (mu * t).sin())
        .with_d_r_theta(move |r: T, t: T| mu * mu * r.powf(mu - T::one()) * (mu * t).cos());
    Ok(BenchmarkCase { problem, exact })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::SectorFunction;
    use std::f64::consts::PI;

    fn lcg(state: &mut u64) -> f64 {
        *state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        (*state >> 11) as f64 / (1u64 << 53) as f64
    }

    #[test]
    fn exact_partials_pass_finite_difference_validation() {
        let samples: Vec<(f64, f64)> = vec![(0.3, 0.8), (0.55, 2.2), (0.8, 3.9), (0.4, 1.5)];
        for case in [
            test1::<f64>(4, 1).unwrap(),
            test2::<f64>(4, 1).unwrap(),
            test3::<f64>(4, 1).unwrap(),
            harmonic_mode::<f64>(2.0, 2, 4, 1).unwrap(),
        ] {
            case.exact.validate_partials(&samples).unwrap();
        }
    }

    #[test]
    fn test1_exact_values() {
        let case = test1::<f64>(4, 1).unwrap();
        assert!((case.exact.at(1.0, 0.75 * PI) - 1.0).abs() < 1e-14);
        assert!(case.problem.load().is_empty());
        assert!(case.problem.side_exponent().is_none());
    }

    #[test]
    fn test2_boundary_and_side_traces() {
        let case = test2::<f64>(4, 1).unwrap();
        assert!((case.exact.at(1.0, 0.0) - 1.0).abs() < 1e-14);
        for &r in &[0.2_f64, 0.5, 0.9] {
            let expect = r.powf(2.0 / 3.0);
            assert!((case.exact.at(r, 0.0) - expect).abs() < 1e-14);
            assert!((case.exact.at(r, 1.5 * PI) - expect).abs() < 1e-12);
        }
        // Outer data is the exact solution at r = 1.
        for &t in &[0.0, 1.0, 2.5, 4.0] {
            assert!((case.problem.outer_bc(t) - case.exact.at(1.0, t)).abs() < 1e-14);
        }
        assert_eq!(case.problem.side_exponent(), Some(2.0 / 3.0));
    }

    #[test]
    fn test3_source_matches_negative_laplacian() {
        let case = test3::<f64>(4, 2).unwrap();
        let term = &case.problem.load().terms()[0];
        assert_eq!(term.alpha, 0.5);
        let nu = 2.0 / 3.0;
        let f = |r: f64, t: f64| 209.0 / 36.0 * r.powf(0.5) * (nu * t).sin();
        // The polar Laplacian of the exact field, with the radial second
        // derivative taken by finite differences of the analytic d_r.
        let mut state = 0x9e3779b97f4a7c15_u64;
        for _ in 0..50 {
            let r = 0.1 + 0.8 * lcg(&mut state);
            let t = 1.5 * PI * lcg(&mut state);
            let h = 1e-6;
            let d_rr = (case.exact.d_r(r + h, t).unwrap() - case.exact.d_r(r - h, t).unwrap())
                / (2.0 * h);
            let lap = d_rr
                + case.exact.d_r(r, t).unwrap() / r
                + case.exact.d_theta_theta(r, t).unwrap() / (r * r);
            let defect = (-lap - f(r, t)).abs();
            assert!(defect < 1e-5 * f(r, t).abs().max(1.0), "defect {defect} at ({r}, {t})");
        }
    }

    #[test]
    fn harmonic_mode_reduces_to_test1() {
        let a = test1::<f64>(4, 1).unwrap();
        let b = harmonic_mode::<f64>(1.5 * PI, 1, 4, 1).unwrap();
        for &(r, t) in &[(0.4, 1.1), (0.9, 3.3)] {
            assert!((a.exact.at(r, t) - b.exact.at(r, t)).abs() < 1e-14);
        }
        assert!(harmonic_mode::<f64>(1.5 * PI, 0, 4, 1).is_err());
    }
}
