//! Functions on the parameter sector and the interpolation operator.
//!
//! The computational domain is the rectangle `Q = (0,1) x (0,theta_max)` in
//! `(r, theta)`; the physical sector is its image under the polar map. All
//! norm and error machinery works through the [`SectorFunction`] trait, which
//! exposes values and first partials (and the mixed partial where available).

use std::sync::Arc;

use crate::error::{Result, SbfemError};
use crate::mesh::AngularMesh;
use crate::scalar::Scalar;

/// Values and partials of a function sampled on a tensor grid, stored
/// row-major with the radial index outermost.
#[derive(Clone, Debug)]
pub struct SampledGrid<T> {
    pub n_r: usize,
    pub n_theta: usize,
    pub value: Vec<T>,
    pub d_r: Vec<T>,
    pub d_theta: Vec<T>,
}

impl<T: Scalar> SampledGrid<T> {
    pub fn zeros(n_r: usize, n_theta: usize) -> Self {
        SampledGrid {
            n_r,
            n_theta,
            value: vec![T::zero(); n_r * n_theta],
            d_r: vec![T::zero(); n_r * n_theta],
            d_theta: vec![T::zero(); n_r * n_theta],
        }
    }

    #[inline]
    pub fn idx(&self, i_r: usize, i_theta: usize) -> usize {
        i_r * self.n_theta + i_theta
    }
}

/// A scalar function of `(r, theta)` with first partial derivatives.
///
/// Implementations are expected to be evaluable on the open sector; domain
/// policing is left to the callers that own a mesh or a norm specification.
pub trait SectorFunction<T: Scalar> {
    fn value(&self, r: T, theta: T) -> Result<T>;
    fn d_r(&self, r: T, theta: T) -> Result<T>;
    fn d_theta(&self, r: T, theta: T) -> Result<T>;

    /// Mixed partial; only some functions carry it (it feeds the
    /// interpolation stability checks, never the norms themselves).
    fn d_r_theta(&self, _r: T, _theta: T) -> Result<T> {
        Err(SbfemError::MissingPartial("d_r_theta"))
    }

    /// Values and first partials on the tensor grid `rs x thetas`.
    /// Implementations with separable structure override this with a fast
    /// path; the default samples pointwise.
    fn sample_grid(&self, rs: &[T], thetas: &[T]) -> Result<SampledGrid<T>> {
        let mut grid = SampledGrid::zeros(rs.len(), thetas.len());
        for (i, &r) in rs.iter().enumerate() {
            for (j, &theta) in thetas.iter().enumerate() {
                let k = grid.idx(i, j);
                grid.value[k] = self.value(r, theta)?;
                grid.d_r[k] = self.d_r(r, theta)?;
                grid.d_theta[k] = self.d_theta(r, theta)?;
            }
        }
        Ok(grid)
    }
}

/// The polar map `(r, theta) -> r (cos theta, sin theta)` from the parameter
/// rectangle onto the physical sector, with its Jacobian data.
#[derive(Clone, Copy, Debug, Default)]
pub struct PolarSectorMap;

impl PolarSectorMap {
    pub fn map<T: Scalar>(&self, r: T, theta: T) -> (T, T) {
        (r * theta.cos(), r * theta.sin())
    }

    /// Jacobian `d(x,y)/d(r,theta)`, rows indexing `(x, y)`.
    pub fn jacobian<T: Scalar>(&self, r: T, theta: T) -> [[T; 2]; 2] {
        let (s, c) = theta.sin_cos();
        [[c, -r * s], [s, r * c]]
    }

    /// Jacobian determinant, exactly `r`.
    pub fn det<T: Scalar>(&self, r: T, _theta: T) -> T {
        r
    }

    pub fn inverse_jacobian<T: Scalar>(&self, r: T, theta: T) -> Result<[[T; 2]; 2]> {
        if r <= T::zero() {
            return Err(SbfemError::OutOfDomain(format!(
                "polar map is singular at r = {r}"
            )));
        }
        let (s, c) = theta.sin_cos();
        Ok([[c, s], [-s / r, c / r]])
    }
}

type FieldFn<T> = Arc<dyn Fn(T, T) -> T + Send + Sync>;

/// A closed-form field: a value callable plus whatever analytic partials the
/// caller can supply. Partials stay optional; asking for a missing one is an
/// error rather than a silent finite difference.
#[derive(Clone)]
pub struct ScalarField<T> {
    value: FieldFn<T>,
    d_r: Option<FieldFn<T>>,
    d_theta: Option<FieldFn<T>>,
    d_theta_theta: Option<FieldFn<T>>,
    d_r_theta: Option<FieldFn<T>>,
}

impl<T: Scalar> ScalarField<T> {
    pub fn new(value: impl Fn(T, T) -> T + Send + Sync + 'static) -> Self {
        ScalarField {
            value: Arc::new(value),
            d_r: None,
            d_theta: None,
            d_theta_theta: None,
            d_r_theta: None,
        }
    }

    pub fn with_d_r(mut self, f: impl Fn(T, T) -> T + Send + Sync + 'static) -> Self {
        self.d_r = Some(Arc::new(f));
        self
    }

    pub fn with_d_theta(mut self, f: impl Fn(T, T) -> T + Send + Sync + 'static) -> Self {
        self.d_theta = Some(Arc::new(f));
        self
    }

    pub fn with_d_theta_theta(mut self, f: impl Fn(T, T) -> T + Send + Sync + 'static) -> Self {
        self.d_theta_theta = Some(Arc::new(f));
        self
    }

    pub fn with_d_r_theta(mut self, f: impl Fn(T, T) -> T + Send + Sync + 'static) -> Self {
        self.d_r_theta = Some(Arc::new(f));
        self
    }

    pub fn at(&self, r: T, theta: T) -> T {
        (self.value)(r, theta)
    }

    pub fn d_theta_theta(&self, r: T, theta: T) -> Result<T> {
        match &self.d_theta_theta {
            Some(f) => Ok(f(r, theta)),
            None => Err(SbfemError::MissingPartial("d_theta_theta")),
        }
    }

    /// Cross-checks every supplied partial against central differences of
    /// the value at the given interior points. Steps are small enough that
    /// samples a little away from the domain boundary stay inside.
    pub fn validate_partials(&self, samples: &[(T, T)]) -> Result<()> {
        let step = T::of(6e-6);
        let tol = T::of(1e-6);
        let two = T::of(2.0);
        for &(r, theta) in samples {
            if let Some(f) = &self.d_r {
                let fd = ((self.value)(r + step, theta) - (self.value)(r - step, theta))
                    / (two * step);
                let an = f(r, theta);
                if (fd - an).abs() > tol * an.abs().max(T::one()) {
                    return Err(SbfemError::InvalidArgument(format!(
                        "d_r at ({r}, {theta}): analytic {an}, finite difference {fd}"
                    )));
                }
            }
            if let Some(f) = &self.d_theta {
                let fd = ((self.value)(r, theta + step) - (self.value)(r, theta - step))
                    / (two * step);
                let an = f(r, theta);
                if (fd - an).abs() > tol * an.abs().max(T::one()) {
                    return Err(SbfemError::InvalidArgument(format!(
                        "d_theta at ({r}, {theta}): analytic {an}, finite difference {fd}"
                    )));
                }
            }
            if let Some(f) = &self.d_theta_theta {
                let h = T::of(1.2e-4);
                let fd = ((self.value)(r, theta + h) - two * (self.value)(r, theta)
                    + (self.value)(r, theta - h))
                    / (h * h);
                let an = f(r, theta);
                if (fd - an).abs() > tol * an.abs().max(T::one()) {
                    return Err(SbfemError::InvalidArgument(format!(
                        "d_theta_theta at ({r}, {theta}): analytic {an}, finite difference {fd}"
                    )));
                }
            }
            if let Some(f) = &self.d_r_theta {
                let fd = ((self.value)(r + step, theta + step)
                    - (self.value)(r + step, theta - step)
                    - (self.value)(r - step, theta + step)
                    + (self.value)(r - step, theta - step))
                    / (T::of(4.0) * step * step);
                let an = f(r, theta);
                if (fd - an).abs() > T::of(1e-5) * an.abs().max(T::one()) {
                    return Err(SbfemError::InvalidArgument(format!(
                        "d_r_theta at ({r}, {theta}): analytic {an}, finite difference {fd}"
                    )));
                }
            }
        }
        Ok(())
    }
}

impl<T: Scalar> SectorFunction<T> for ScalarField<T> {
    fn value(&self, r: T, theta: T) -> Result<T> {
        Ok((self.value)(r, theta))
    }

    fn d_r(&self, r: T, theta: T) -> Result<T> {
        match &self.d_r {
            Some(f) => Ok(f(r, theta)),
            None => Err(SbfemError::MissingPartial("d_r")),
        }
    }

    fn d_theta(&self, r: T, theta: T) -> Result<T> {
        match &self.d_theta {
            Some(f) => Ok(f(r, theta)),
            None => Err(SbfemError::MissingPartial("d_theta")),
        }
    }

    fn d_r_theta(&self, r: T, theta: T) -> Result<T> {
        match &self.d_r_theta {
            Some(f) => Ok(f(r, theta)),
            None => Err(SbfemError::MissingPartial("d_r_theta")),
        }
    }
}

/// Restriction of a field to the ray at the given angle: `r -> u(r, angle)`.
pub fn radial_trace<'a, T: Scalar>(
    u: &'a (dyn SectorFunction<T> + 'a),
    angle: T,
    theta_max: T,
) -> Result<impl Fn(T) -> Result<T> + 'a> {
    if !(angle >= T::zero() && angle <= theta_max) {
        return Err(SbfemError::OutOfDomain(format!(
            "trace angle {angle} outside [0, {theta_max}]"
        )));
    }
    Ok(move |r: T| u.value(r, angle))
}

/// Nodal interpolation onto the angular mesh: `(Pi u)(r, theta) =
/// sum_i u(r, theta_i) e_i(theta)`. Radial behavior is inherited from the
/// traces of `u`, so radial derivatives need `u`'s.
pub struct Interpolant<'a, T> {
    mesh: &'a AngularMesh<T>,
    u: &'a dyn SectorFunction<T>,
}

/// Builds the interpolant; `u` must have well-defined traces at the node
/// angles (evaluability is all that can be checked here).
pub fn interpolate<'a, T: Scalar>(
    u: &'a (dyn SectorFunction<T> + 'a),
    mesh: &'a AngularMesh<T>,
) -> Interpolant<'a, T> {
    Interpolant { mesh, u }
}

impl<'a, T: Scalar> Interpolant<'a, T> {
    pub fn mesh(&self) -> &AngularMesh<T> {
        self.mesh
    }

    /// Combines trace samples at the element's nodes with basis factors.
    fn combine(
        &self,
        r: T,
        theta: T,
        trace: impl Fn(T, T) -> Result<T>,
        derivative_basis: bool,
    ) -> Result<T> {
        let p = self.mesh.order();
        let e = self.mesh.element_of(theta)?;
        let mut factors = vec![T::zero(); p + 1];
        if derivative_basis {
            self.mesh.local_derivatives(e, theta, &mut factors);
        } else {
            self.mesh.local_values(e, theta, &mut factors);
        }
        let first = self.mesh.global_node(e, 0);
        let mut acc = T::zero();
        for (l, &w) in factors.iter().enumerate() {
            if w != T::zero() {
                acc += trace(r, self.mesh.nodes()[first + l])? * w;
            }
        }
        Ok(acc)
    }
}

impl<'a, T: Scalar> SectorFunction<T> for Interpolant<'a, T> {
    fn value(&self, r: T, theta: T) -> Result<T> {
        self.combine(r, theta, |r, node| self.u.value(r, node), false)
    }

    fn d_r(&self, r: T, theta: T) -> Result<T> {
        self.combine(r, theta, |r, node| self.u.d_r(r, node), false)
    }

    fn d_theta(&self, r: T, theta: T) -> Result<T> {
        self.combine(r, theta, |r, node| self.u.value(r, node), true)
    }

    fn d_r_theta(&self, r: T, theta: T) -> Result<T> {
        self.combine(r, theta, |r, node| self.u.d_r(r, node), true)
    }

    /// Samples the underlying traces once per (radius, node) pair and then
    /// applies the angular basis, so the cost is independent of how expensive
    /// `u` is at off-node angles.
    fn sample_grid(&self, rs: &[T], thetas: &[T]) -> Result<SampledGrid<T>> {
        let nodes = self.mesh.nodes();
        let traces = self.u.sample_grid(rs, nodes)?;
        let p = self.mesh.order();
        let mut grid = SampledGrid::zeros(rs.len(), thetas.len());
        let mut vals = vec![T::zero(); p + 1];
        let mut ders = vec![T::zero(); p + 1];
        for (j, &theta) in thetas.iter().enumerate() {
            let e = self.mesh.element_of(theta)?;
            self.mesh.local_values(e, theta, &mut vals);
            self.mesh.local_derivatives(e, theta, &mut ders);
            let first = self.mesh.global_node(e, 0);
            for i in 0..rs.len() {
                let k = grid.idx(i, j);
                let mut v = T::zero();
                let mut dr = T::zero();
                let mut dt = T::zero();
                for l in 0..=p {
                    let tv = traces.value[traces.idx(i, first + l)];
                    let tr = traces.d_r[traces.idx(i, first + l)];
                    v += tv * vals[l];
                    dt += tv * ders[l];
                    dr += tr * vals[l];
                }
                grid.value[k] = v;
                grid.d_r[k] = dr;
                grid.d_theta[k] = dt;
            }
        }
        Ok(grid)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn theta32() -> f64 {
        1.5 * std::f64::consts::PI
    }

    fn smooth_field() -> ScalarField<f64> {
        ScalarField::new(|r: f64, t: f64| r * r * t.sin())
            .with_d_r(|r, t| 2.0 * r * t.sin())
            .with_d_theta(|r, t| r * r * t.cos())
            .with_d_theta_theta(|r, t| -r * r * t.sin())
            .with_d_r_theta(|r, t| 2.0 * r * t.cos())
    }

    #[test]
    fn polar_map_invariants() {
        let map = PolarSectorMap;
        let (x, y) = map.map(2.0_f64, std::f64::consts::FRAC_PI_2);
        assert!(x.abs() < 1e-15 && (y - 2.0).abs() < 1e-15);
        for &r in &[1e-8_f64, 0.3, 1.0] {
            for &t in &[0.0, 1.0, 3.9] {
                assert_eq!(map.det(r, t), r);
                let j = map.jacobian(r, t);
                let ji = map.inverse_jacobian(r, t).unwrap();
                for a in 0..2 {
                    for b in 0..2 {
                        let mut acc = 0.0;
                        for k in 0..2 {
                            acc += j[a][k] * ji[k][b];
                        }
                        let expect = if a == b { 1.0 } else { 0.0 };
                        assert!(
                            (acc - expect).abs() <= 1e-14,
                            "J J^-1 defect {} at r={r}",
                            (acc - expect).abs()
                        );
                    }
                }
            }
        }
        assert!(map.inverse_jacobian(0.0_f64, 1.0).is_err());
    }

    #[test]
    fn partial_validation_accepts_consistent_and_rejects_wrong() {
        let u = smooth_field();
        let samples = [(0.3, 0.7), (0.8, 2.0), (0.5, 4.0)];
        u.validate_partials(&samples).unwrap();

        let bad = ScalarField::new(|r: f64, t: f64| r * r * t.sin())
            .with_d_r(|r, t| 3.0 * r * t.sin());
        assert!(bad.validate_partials(&samples).is_err());
    }

    #[test]
    fn missing_partials_are_reported() {
        let u = ScalarField::new(|r: f64, _| r);
        assert!(matches!(u.d_theta(0.5, 1.0), Err(SbfemError::MissingPartial(_))));
        assert!(matches!(u.d_r_theta(0.5, 1.0), Err(SbfemError::MissingPartial(_))));
    }

    #[test]
    fn trace_of_separable_field() {
        let u = ScalarField::new(|r: f64, t: f64| r * t.sin());
        let trace = radial_trace(&u, std::f64::consts::FRAC_PI_2, theta32()).unwrap();
        for &r in &[0.1, 0.6, 1.0] {
            assert!((trace(r).unwrap() - r).abs() < 1e-15);
        }
        assert!(radial_trace(&u, -0.1, theta32()).is_err());
        assert!(radial_trace(&u, theta32() + 0.1, theta32()).is_err());
    }

    #[test]
    fn interpolant_matches_at_nodes_and_reproduces_piecewise_linear() {
        let mesh = AngularMesh::<f64>::uniform(theta32(), 5, 1).unwrap();
        let u = smooth_field();
        let pi_u = interpolate(&u, &mesh);
        for &node in mesh.nodes() {
            for &r in &[0.2, 0.7] {
                let diff = (pi_u.value(r, node).unwrap() - u.at(r, node)).abs();
                assert!(diff < 1e-14, "node mismatch {diff}");
            }
        }

        // A field linear in theta within each element is reproduced exactly.
        let lin = ScalarField::new(|r: f64, t: f64| r * (2.0 * t + 1.0))
            .with_d_r(|_, t| 2.0 * t + 1.0);
        let pi_lin = interpolate(&lin, &mesh);
        for &theta in &[0.11, 1.3, 2.2, 4.6] {
            let d = (pi_lin.value(0.4, theta).unwrap() - lin.at(0.4, theta)).abs();
            assert!(d < 1e-13, "linear reproduction defect {d}");
        }
    }

    #[test]
    fn interpolation_is_a_projection() {
        let mesh = AngularMesh::<f64>::uniform(theta32(), 4, 2).unwrap();
        let u = smooth_field();
        let pi_u = interpolate(&u, &mesh);
        let pi_pi_u = interpolate(&pi_u, &mesh);
        let mut state = 0x2545f4914f6cdd1d_u64;
        for _ in 0..200 {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let r = 0.05 + 0.9 * ((state >> 11) as f64 / (1u64 << 53) as f64);
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let theta = theta32() * ((state >> 11) as f64 / (1u64 << 53) as f64);
            let a = pi_u.value(r, theta).unwrap();
            let b = pi_pi_u.value(r, theta).unwrap();
            assert!((a - b).abs() <= 1e-12, "projection defect {}", (a - b).abs());
        }
    }

    #[test]
    fn interpolant_derivatives_match_finite_differences() {
        let mesh = AngularMesh::<f64>::uniform(theta32(), 6, 2).unwrap();
        let u = smooth_field();
        let pi_u = interpolate(&u, &mesh);
        let (r, theta) = (0.63, 2.31);
        let h = 1e-6;
        let fd_t = (pi_u.value(r, theta + h).unwrap() - pi_u.value(r, theta - h).unwrap())
            / (2.0 * h);
        assert!((pi_u.d_theta(r, theta).unwrap() - fd_t).abs() < 1e-6);
        let fd_r =
            (pi_u.value(r + h, theta).unwrap() - pi_u.value(r - h, theta).unwrap()) / (2.0 * h);
        assert!((pi_u.d_r(r, theta).unwrap() - fd_r).abs() < 1e-6);
        let fd_rt = (pi_u.d_theta(r + h, theta).unwrap() - pi_u.d_theta(r - h, theta).unwrap())
            / (2.0 * h);
        assert!((pi_u.d_r_theta(r, theta).unwrap() - fd_rt).abs() < 1e-5);
    }

    #[test]
    fn interpolant_grid_sampling_matches_pointwise() {
        let mesh = AngularMesh::<f64>::uniform(theta32(), 4, 3).unwrap();
        let u = smooth_field();
        let pi_u = interpolate(&u, &mesh);
        let rs = [0.15, 0.5, 0.95];
        let thetas = [0.2, 1.9, 3.3, 4.5];
        let grid = pi_u.sample_grid(&rs, &thetas).unwrap();
        for (i, &r) in rs.iter().enumerate() {
            for (j, &t) in thetas.iter().enumerate() {
                let k = grid.idx(i, j);
                assert!((grid.value[k] - pi_u.value(r, t).unwrap()).abs() < 1e-13);
                assert!((grid.d_r[k] - pi_u.d_r(r, t).unwrap()).abs() < 1e-13);
                assert!((grid.d_theta[k] - pi_u.d_theta(r, t).unwrap()).abs() < 1e-12);
            }
        }
    }
}
