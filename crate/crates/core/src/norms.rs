//! Weighted norms on the parameter rectangle.
//!
//! The natural norms for the sector problem weight the radial direction:
//! `L2_r` integrates against `r`, `L2_{1/r}` against `1/r`, and the graph
//! norm combines `||u||_{L2_r}`, `||d_r u||_{L2_r}` and
//! `||d_theta u||_{L2_{1/r}}`. Integrands behave like fractional powers of
//! `r` (with possible `log r` factors) near the origin, so the radial
//! quadrature is composite Gauss on geometrically graded cells; that resolves
//! the singular weight without adaptivity. All reductions run in a fixed
//! order, so reported values are bit-reproducible.

use crate::error::{Result, SbfemError};
use crate::field::SectorFunction;
use crate::mesh::AngularMesh;
use crate::quadrature::gauss_rule;
use crate::scalar::Scalar;

/// Radial weight of a weighted `L2` norm.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Weight {
    One,
    R,
    InvR,
}

impl Weight {
    #[inline]
    pub fn apply<T: Scalar>(self, r: T) -> T {
        match self {
            Weight::One => T::one(),
            Weight::R => r,
            Weight::InvR => T::one() / r,
        }
    }
}

/// Quadrature recipe for weighted norms: geometric radial grading plus
/// per-panel Gauss rules in both directions.
#[derive(Clone, Debug)]
pub struct WeightedNormSpec<T> {
    weight: Weight,
    grading: T,
    levels: usize,
    radial_points: usize,
    angular_points: usize,
    theta_max: T,
    angular_breakpoints: Vec<T>,
}

const DEFAULT_LEVELS: usize = 40;
const DEFAULT_POINTS: usize = 12;

/// The graded cells must reach below this radius, so that what is cut off
/// near the origin cannot influence double-precision results.
const GRADING_FLOOR: f64 = 1e-12;

impl<T: Scalar> WeightedNormSpec<T> {
    /// Default spec with a single angular panel spanning `[0, theta_max]`.
    pub fn new(weight: Weight, theta_max: T) -> Result<Self> {
        if !theta_max.is_finite() || theta_max <= T::zero() {
            return Err(SbfemError::InvalidArgument(format!(
                "angular extent {theta_max} must be positive"
            )));
        }
        WeightedNormSpec {
            weight,
            grading: T::of(0.5),
            levels: DEFAULT_LEVELS,
            radial_points: DEFAULT_POINTS,
            angular_points: DEFAULT_POINTS,
            theta_max,
            angular_breakpoints: vec![T::zero(), theta_max],
        }
        .validated()
    }

    /// Spec whose angular panels follow the mesh elements, so that
    /// piecewise-polynomial integrands are smooth on every panel.
    pub fn for_mesh(weight: Weight, mesh: &AngularMesh<T>) -> Result<Self> {
        let mut spec = Self::new(weight, mesh.theta_max())?;
        spec.angular_breakpoints = mesh.breakpoints().to_vec();
        Ok(spec)
    }

    pub fn with_weight(mut self, weight: Weight) -> Self {
        self.weight = weight;
        self
    }

    pub fn with_grading(mut self, q: T) -> Result<Self> {
        self.grading = q;
        self.validated()
    }

    pub fn with_levels(mut self, levels: usize) -> Result<Self> {
        self.levels = levels;
        self.validated()
    }

    pub fn with_radial_points(mut self, n: usize) -> Result<Self> {
        self.radial_points = n;
        self.validated()
    }

    pub fn with_angular_points(mut self, n: usize) -> Result<Self> {
        self.angular_points = n;
        self.validated()
    }

    pub fn weight(&self) -> Weight {
        self.weight
    }

    pub fn theta_max(&self) -> T {
        self.theta_max
    }

    fn validated(self) -> Result<Self> {
        if !self.grading.is_finite() || self.grading <= T::zero() || self.grading >= T::one() {
            return Err(SbfemError::InvalidArgument(format!(
                "grading ratio {} must lie in (0, 1)",
                self.grading
            )));
        }
        if self.levels == 0 {
            return Err(SbfemError::InvalidArgument("need at least one grading level".into()));
        }
        let floor = self.grading.powi(self.levels as i32);
        if floor > T::of(GRADING_FLOOR) {
            return Err(SbfemError::InvalidArgument(format!(
                "grading reaches only down to {floor}; deepen the levels or shrink the ratio \
                 so that q^L <= {GRADING_FLOOR:e}"
            )));
        }
        Ok(self)
    }

    /// Radial quadrature nodes and weights, ascending, covering `(q^L, 1)`.
    pub fn radial_grid(&self) -> Result<(Vec<T>, Vec<T>)> {
        let rule = gauss_rule::<T>(self.radial_points)?;
        let n = self.levels * self.radial_points;
        let mut points = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for k in (0..self.levels).rev() {
            let a = self.grading.powi(k as i32 + 1);
            let b = self.grading.powi(k as i32);
            for (x, w) in rule.mapped(a, b) {
                points.push(x);
                weights.push(w);
            }
        }
        Ok((points, weights))
    }

    /// Angular quadrature nodes and weights, ascending over the panels.
    pub fn angular_grid(&self) -> Result<(Vec<T>, Vec<T>)> {
        let rule = gauss_rule::<T>(self.angular_points)?;
        let panels = self.angular_breakpoints.len() - 1;
        let mut points = Vec::with_capacity(panels * self.angular_points);
        let mut weights = Vec::with_capacity(panels * self.angular_points);
        for k in 0..panels {
            let a = self.angular_breakpoints[k];
            let b = self.angular_breakpoints[k + 1];
            for (x, w) in rule.mapped(a, b) {
                points.push(x);
                weights.push(w);
            }
        }
        Ok((points, weights))
    }
}

/// `sqrt( integral of f^2 w dr dtheta )` over the parameter rectangle by the
/// spec's quadrature. The callable may fail (for instance a missing partial),
/// and non-finite samples are rejected.
pub fn weighted_norm<T: Scalar>(
    f: impl Fn(T, T) -> Result<T>,
    spec: &WeightedNormSpec<T>,
) -> Result<T> {
    let (rs, wr) = spec.radial_grid()?;
    let (ts, wt) = spec.angular_grid()?;
    let mut acc = T::zero();
    for (i, &r) in rs.iter().enumerate() {
        let w_r = wr[i] * spec.weight.apply(r);
        let mut row = T::zero();
        for (j, &theta) in ts.iter().enumerate() {
            let v = f(r, theta)?;
            if !v.is_finite() {
                return Err(SbfemError::NonFinite(format!(
                    "integrand value {v} at ({r}, {theta})"
                )));
            }
            row += wt[j] * v * v;
        }
        acc += w_r * row;
    }
    Ok(acc.sqrt())
}

/// `L2_r` and graph-norm errors between an approximation and a reference:
/// returns `(||e||_{L2_r}, sqrt(||e||^2_{L2_r} + ||d_r e||^2_{L2_r} +
/// ||d_theta e||^2_{L2_{1/r}}))`. `spec` supplies the quadrature parameters;
/// its weight field is ignored because each component carries its own.
pub fn h1tilde_error<T: Scalar>(
    approx: &dyn SectorFunction<T>,
    exact: &dyn SectorFunction<T>,
    spec: &WeightedNormSpec<T>,
) -> Result<(T, T)> {
    let (rs, wr) = spec.radial_grid()?;
    let (ts, wt) = spec.angular_grid()?;
    let a = approx.sample_grid(&rs, &ts)?;
    let e = exact.sample_grid(&rs, &ts)?;
    let mut l2 = T::zero();
    let mut dr2 = T::zero();
    let mut dt2 = T::zero();
    for (i, &r) in rs.iter().enumerate() {
        let mut row_v = T::zero();
        let mut row_r = T::zero();
        let mut row_t = T::zero();
        for (j, &w) in wt.iter().enumerate() {
            let k = a.idx(i, j);
            let dv = a.value[k] - e.value[k];
            let ddr = a.d_r[k] - e.d_r[k];
            let ddt = a.d_theta[k] - e.d_theta[k];
            row_v += w * dv * dv;
            row_r += w * ddr * ddr;
            row_t += w * ddt * ddt;
        }
        l2 += wr[i] * r * row_v;
        dr2 += wr[i] * r * row_r;
        dt2 += wr[i] / r * row_t;
    }
    let h1 = (l2 + dr2 + dt2).sqrt();
    let l2 = l2.sqrt();
    if !h1.is_finite() {
        return Err(SbfemError::NonFinite("graph-norm accumulation".into()));
    }
    Ok((l2, h1))
}

/// Graph norm of a single function, same quadrature as [`h1tilde_error`].
pub fn h1tilde_norm<T: Scalar>(
    u: &dyn SectorFunction<T>,
    spec: &WeightedNormSpec<T>,
) -> Result<T> {
    let (rs, wr) = spec.radial_grid()?;
    let (ts, wt) = spec.angular_grid()?;
    let g = u.sample_grid(&rs, &ts)?;
    let mut acc = T::zero();
    for (i, &r) in rs.iter().enumerate() {
        let mut row = T::zero();
        for (j, &w) in wt.iter().enumerate() {
            let k = g.idx(i, j);
            let v = g.value[k];
            let dr = g.d_r[k];
            let dt = g.d_theta[k];
            row += w * (r * (v * v + dr * dr) + dt * dt / r);
        }
        acc += wr[i] * row;
    }
    let norm = acc.sqrt();
    if !norm.is_finite() {
        return Err(SbfemError::NonFinite("graph-norm accumulation".into()));
    }
    Ok(norm)
}
