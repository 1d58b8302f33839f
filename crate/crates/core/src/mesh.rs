//! Angular meshes on `(0, theta_max)`: uniform partitions carrying nodal
//! Lagrange bases of arbitrary order. Interior element nodes sit at mapped
//! Gauss-Lobatto points; evaluation uses the barycentric form, which stays
//! well conditioned through the highest supported orders.

use crate::error::{Result, SbfemError};
use crate::linalg::Mat;
use crate::quadrature::lobatto_points;
use crate::scalar::Scalar;

/// Shared per-order data for the reference element `[-1, 1]`.
#[derive(Clone, Debug)]
struct ReferenceBasis<T> {
    nodes: Vec<T>,
    weights: Vec<T>,
    /// `diff[(k, i)]` is the derivative of basis `i` at node `k`.
    diff: Mat<T>,
}

impl<T: Scalar> ReferenceBasis<T> {
    fn build(order: usize) -> Result<Self> {
        let nodes = lobatto_points::<T>(order)?;
        let n = nodes.len();
        let mut weights = vec![T::one(); n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    weights[i] *= nodes[i] - nodes[j];
                }
            }
            weights[i] = weights[i].recip();
        }
        // A common scaling cancels in the barycentric ratio; normalizing keeps
        // intermediate magnitudes tame at high order.
        let wmax = weights.iter().fold(T::zero(), |m, w| m.max(w.abs()));
        for w in &mut weights {
            *w /= wmax;
        }
        let mut diff = Mat::zeros(n, n);
        for k in 0..n {
            let mut row_sum = T::zero();
            for i in 0..n {
                if i != k {
                    let d = weights[i] / weights[k] / (nodes[k] - nodes[i]);
                    diff[(k, i)] = d;
                    row_sum += d;
                }
            }
            diff[(k, k)] = -row_sum;
        }
        Ok(ReferenceBasis { nodes, weights, diff })
    }

    fn snap_tolerance() -> T {
        T::epsilon().sqrt() * T::of(0.01)
    }

    fn nearest_node(&self, x: T) -> (usize, T) {
        let mut best = 0;
        let mut dist = (x - self.nodes[0]).abs();
        for (j, xj) in self.nodes.iter().enumerate().skip(1) {
            let d = (x - *xj).abs();
            if d < dist {
                best = j;
                dist = d;
            }
        }
        (best, dist)
    }

    /// All basis values at reference coordinate `x`.
    fn values(&self, x: T, out: &mut [T]) {
        let (near, dist) = self.nearest_node(x);
        if dist < Self::snap_tolerance() {
            for (i, o) in out.iter_mut().enumerate() {
                *o = if i == near { T::one() } else { T::zero() };
            }
            return;
        }
        let mut s1 = T::zero();
        for (i, o) in out.iter_mut().enumerate() {
            let term = self.weights[i] / (x - self.nodes[i]);
            *o = term;
            s1 += term;
        }
        for o in out.iter_mut() {
            *o /= s1;
        }
    }

    /// All basis derivatives at reference coordinate `x`.
    fn derivatives(&self, x: T, out: &mut [T]) {
        let (near, dist) = self.nearest_node(x);
        if dist < Self::snap_tolerance() {
            for (i, o) in out.iter_mut().enumerate() {
                *o = self.diff[(near, i)];
            }
            return;
        }
        let n = self.nodes.len();
        let mut s1 = T::zero();
        let mut s2 = T::zero();
        for i in 0..n {
            let di = x - self.nodes[i];
            let term = self.weights[i] / di;
            out[i] = term;
            s1 += term;
            s2 += term / di;
        }
        let ratio = s2 / s1;
        for (i, o) in out.iter_mut().enumerate() {
            let di = x - self.nodes[i];
            let li = *o / s1;
            *o = li * (ratio - di.recip());
        }
    }
}

/// Uniform angular mesh with a nodal Lagrange basis of fixed order.
#[derive(Clone, Debug)]
pub struct AngularMesh<T> {
    theta_max: T,
    order: usize,
    breakpoints: Vec<T>,
    nodes: Vec<T>,
    h: T,
    h_min: T,
    basis: ReferenceBasis<T>,
}

impl<T: Scalar> AngularMesh<T> {
    /// Builds the uniform mesh with `n_elements` elements of order `order`
    /// on `(0, theta_max)`.
    pub fn uniform(theta_max: T, n_elements: usize, order: usize) -> Result<Self> {
        if !theta_max.is_finite() || theta_max <= T::zero() || theta_max >= T::of(2.0) * T::PI() {
            return Err(SbfemError::InvalidArgument(format!(
                "opening angle {theta_max} outside (0, 2*pi)"
            )));
        }
        if n_elements == 0 {
            return Err(SbfemError::InvalidArgument("mesh needs at least one element".into()));
        }
        let basis = ReferenceBasis::build(order)?;
        let m = n_elements;
        let mf = T::of(m as f64);
        let mut breakpoints = Vec::with_capacity(m + 1);
        for k in 0..=m {
            breakpoints.push(theta_max * T::of(k as f64) / mf);
        }
        breakpoints[m] = theta_max;

        let mut nodes = vec![T::zero(); m * order + 1];
        let half = T::of(0.5);
        for e in 0..m {
            let (a, b) = (breakpoints[e], breakpoints[e + 1]);
            let mid = half * (a + b);
            let slope = half * (b - a);
            nodes[e * order] = a;
            for l in 1..order {
                nodes[e * order + l] = mid + slope * basis.nodes[l];
            }
        }
        nodes[m * order] = theta_max;

        let mut h = T::zero();
        let mut h_min = T::infinity();
        for e in 0..m {
            let len = breakpoints[e + 1] - breakpoints[e];
            h = h.max(len);
            h_min = h_min.min(len);
        }
        Ok(AngularMesh { theta_max, order, breakpoints, nodes, h, h_min, basis })
    }

    pub fn theta_max(&self) -> T {
        self.theta_max
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn n_elements(&self) -> usize {
        self.breakpoints.len() - 1
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn breakpoints(&self) -> &[T] {
        &self.breakpoints
    }

    pub fn h(&self) -> T {
        self.h
    }

    pub fn h_min(&self) -> T {
        self.h_min
    }

    /// Indices of the two boundary nodes (`theta = 0` and `theta = theta_max`).
    pub fn boundary_nodes(&self) -> [usize; 2] {
        [0, self.n_nodes() - 1]
    }

    /// Quadrature size used when assembling operators on this mesh.
    pub fn assembly_points(&self) -> usize {
        (2 * self.order + 2).max(10)
    }

    /// Element containing `theta`. Breakpoints resolve to the element on
    /// their right, except `theta_max`, which belongs to the last element.
    pub fn element_of(&self, theta: T) -> Result<usize> {
        let slack = T::epsilon() * T::of(4.0) * self.theta_max;
        if !(theta >= -slack && theta <= self.theta_max + slack) {
            return Err(SbfemError::OutOfDomain(format!(
                "angle {theta} outside [0, {}]",
                self.theta_max
            )));
        }
        let m = self.n_elements();
        let idx = self.breakpoints.partition_point(|b| *b <= theta);
        Ok(idx.saturating_sub(1).min(m - 1))
    }

    /// Endpoints of element `e`.
    pub fn element_span(&self, e: usize) -> (T, T) {
        (self.breakpoints[e], self.breakpoints[e + 1])
    }

    /// Global index of local node `l` in element `e`.
    pub fn global_node(&self, e: usize, l: usize) -> usize {
        e * self.order + l
    }

    fn reference_coord(&self, e: usize, theta: T) -> T {
        let (a, b) = self.element_span(e);
        (T::of(2.0) * theta - a - b) / (b - a)
    }

    /// Derivative scaling from reference to physical coordinates on element `e`.
    pub(crate) fn deriv_scale(&self, e: usize) -> T {
        let (a, b) = self.element_span(e);
        T::of(2.0) / (b - a)
    }

    /// All local basis values on element `e` at angle `theta`.
    pub(crate) fn local_values(&self, e: usize, theta: T, out: &mut [T]) {
        debug_assert_eq!(out.len(), self.order + 1);
        self.basis.values(self.reference_coord(e, theta), out);
    }

    /// All local basis derivatives (in `theta`) on element `e` at `theta`.
    pub(crate) fn local_derivatives(&self, e: usize, theta: T, out: &mut [T]) {
        debug_assert_eq!(out.len(), self.order + 1);
        self.basis.derivatives(self.reference_coord(e, theta), out);
        let scale = self.deriv_scale(e);
        for o in out.iter_mut() {
            *o *= scale;
        }
    }

    /// Value of global basis function `i` at `theta`.
    pub fn eval_basis(&self, i: usize, theta: T) -> Result<T> {
        self.check_node(i)?;
        let e = self.element_of(theta)?;
        let first = e * self.order;
        if i < first || i > first + self.order {
            return Ok(T::zero());
        }
        let mut vals = vec![T::zero(); self.order + 1];
        self.local_values(e, theta, &mut vals);
        Ok(vals[i - first])
    }

    /// Derivative of global basis function `i` at `theta`. At a breakpoint the
    /// one-sided value from [`Self::element_of`]'s element applies.
    pub fn eval_basis_deriv(&self, i: usize, theta: T) -> Result<T> {
        self.check_node(i)?;
        let e = self.element_of(theta)?;
        let first = e * self.order;
        if i < first || i > first + self.order {
            return Ok(T::zero());
        }
        let mut vals = vec![T::zero(); self.order + 1];
        self.local_derivatives(e, theta, &mut vals);
        Ok(vals[i - first])
    }

    fn check_node(&self, i: usize) -> Result<()> {
        if i >= self.n_nodes() {
            return Err(SbfemError::OutOfDomain(format!(
                "node index {i} on a mesh with {} nodes",
                self.n_nodes()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn theta32() -> f64 {
        1.5 * std::f64::consts::PI
    }

    #[test]
    fn uniform_linear_mesh_nodes() {
        let mesh = AngularMesh::<f64>::uniform(theta32(), 3, 1).unwrap();
        let pi = std::f64::consts::PI;
        let expect = [0.0, pi / 2.0, pi, 1.5 * pi];
        assert_eq!(mesh.n_nodes(), 4);
        for (n, e) in mesh.nodes().iter().zip(expect.iter()) {
            assert!((n - e).abs() < 1e-14);
        }
        assert_eq!(mesh.nodes()[0], 0.0);
        assert_eq!(mesh.nodes()[3], theta32());
    }

    #[test]
    fn uniform_quadratic_mesh_has_midpoints() {
        let mesh = AngularMesh::<f64>::uniform(theta32(), 2, 2).unwrap();
        let pi = std::f64::consts::PI;
        assert_eq!(mesh.n_nodes(), 5);
        assert!((mesh.nodes()[1] - 3.0 * pi / 8.0).abs() < 1e-14);
        assert!((mesh.nodes()[3] - 9.0 * pi / 8.0).abs() < 1e-14);
    }

    #[test]
    fn uniform_mesh_spacing() {
        let pi = std::f64::consts::PI;
        let mesh = AngularMesh::<f64>::uniform(pi, 4, 1).unwrap();
        assert!((mesh.h() - pi / 4.0).abs() < 1e-15);
        assert!((mesh.h_min() - pi / 4.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_arguments() {
        let two_pi = 2.0 * std::f64::consts::PI;
        assert!(AngularMesh::<f64>::uniform(0.0, 4, 1).is_err());
        assert!(AngularMesh::<f64>::uniform(-1.0, 4, 1).is_err());
        assert!(AngularMesh::<f64>::uniform(two_pi, 4, 1).is_err());
        assert!(AngularMesh::<f64>::uniform(7.0, 4, 1).is_err());
        assert!(AngularMesh::<f64>::uniform(1.0, 0, 1).is_err());
        assert!(AngularMesh::<f64>::uniform(1.0, 4, 0).is_err());
    }

    #[test]
    fn nodal_duality() {
        for order in 1..=6 {
            let mesh = AngularMesh::<f64>::uniform(theta32(), 3, order).unwrap();
            for i in 0..mesh.n_nodes() {
                for (j, theta) in mesh.nodes().iter().enumerate() {
                    let v = mesh.eval_basis(i, *theta).unwrap();
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!(
                        (v - expect).abs() < 1e-12,
                        "order {order}: e_{i}(theta_{j}) = {v}"
                    );
                }
            }
        }
    }

    #[test]
    fn partition_of_unity_and_zero_derivative_sum() {
        for order in [1, 2, 4, 6] {
            let mesh = AngularMesh::<f64>::uniform(theta32(), 5, order).unwrap();
            for k in 0..200 {
                let theta = theta32() * (k as f64 + 0.5) / 200.0;
                let mut vsum = 0.0;
                let mut dsum = 0.0;
                for i in 0..mesh.n_nodes() {
                    vsum += mesh.eval_basis(i, theta).unwrap();
                    dsum += mesh.eval_basis_deriv(i, theta).unwrap();
                }
                assert!((vsum - 1.0).abs() < 1e-12, "order {order}: sum {vsum}");
                assert!(dsum.abs() < 1e-9, "order {order}: deriv sum {dsum}");
            }
        }
    }

    #[test]
    fn quadratic_bubble_flat_at_center() {
        let mesh = AngularMesh::<f64>::uniform(theta32(), 2, 2).unwrap();
        let (a, b) = mesh.element_span(0);
        let center = 0.5 * (a + b);
        // Node 1 is the interior node of the first element.
        let d = mesh.eval_basis_deriv(1, center).unwrap();
        assert!(d.abs() < 1e-12);
        let v = mesh.eval_basis(1, center).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let mesh = AngularMesh::<f64>::uniform(theta32(), 3, 4).unwrap();
        let eps = 1e-6;
        for i in 0..mesh.n_nodes() {
            for k in 0..60 {
                let theta = theta32() * (k as f64 + 0.37) / 60.0;
                if theta < 2.0 * eps || theta > theta32() - 2.0 * eps {
                    continue;
                }
                // Skip points next to breakpoints where the derivative jumps.
                let near_break = mesh
                    .breakpoints()
                    .iter()
                    .any(|b| (theta - b).abs() < 10.0 * eps);
                if near_break {
                    continue;
                }
                let d = mesh.eval_basis_deriv(i, theta).unwrap();
                let fd = (mesh.eval_basis(i, theta + eps).unwrap()
                    - mesh.eval_basis(i, theta - eps).unwrap())
                    / (2.0 * eps);
                assert!(
                    (d - fd).abs() < 1e-5 * (1.0 + d.abs()),
                    "basis {i} at {theta}: {d} vs {fd}"
                );
            }
        }
    }

    #[test]
    fn element_lookup_conventions() {
        let mesh = AngularMesh::<f64>::uniform(theta32(), 4, 1).unwrap();
        assert_eq!(mesh.element_of(0.0).unwrap(), 0);
        let b1 = mesh.breakpoints()[1];
        assert_eq!(mesh.element_of(b1).unwrap(), 1);
        assert_eq!(mesh.element_of(theta32()).unwrap(), 3);
        assert!(mesh.element_of(-0.1).is_err());
        assert!(mesh.element_of(theta32() + 0.1).is_err());
        assert!(mesh.eval_basis(99, 1.0).is_err());
    }

    #[test]
    fn basis_has_local_support() {
        let mesh = AngularMesh::<f64>::uniform(theta32(), 4, 2).unwrap();
        // Node 1 is interior to element 0; the basis vanishes on element 2.
        let (a, b) = mesh.element_span(2);
        let theta = 0.5 * (a + b);
        assert_eq!(mesh.eval_basis(1, theta).unwrap(), 0.0);
    }

    #[test]
    fn f32_mesh_basics() {
        let mesh = AngularMesh::<f32>::uniform(4.7f32, 4, 2).unwrap();
        let theta = 1.234f32;
        let mut sum = 0.0f32;
        for i in 0..mesh.n_nodes() {
            sum += mesh.eval_basis(i, theta).unwrap();
        }
        assert!((sum - 1.0).abs() < 1e-5);
    }
}
