//! Gauss-Legendre quadrature on `[-1, 1]` and Gauss-Lobatto point sets.
//!
//! Points are found by Newton iteration on the Legendre recurrence, so rules
//! of any size up to the supported cap carry full floating-point accuracy.

use crate::error::{Result, SbfemError};
use crate::scalar::Scalar;

pub const MAX_GAUSS_POINTS: usize = 64;

/// Gauss-Legendre rule on the reference interval `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct QuadratureRule<T> {
    points: Vec<T>,
    weights: Vec<T>,
}

impl<T: Scalar> QuadratureRule<T> {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[T] {
        &self.points
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// Integrates `f` over `[a, b]`.
    pub fn integrate(&self, a: T, b: T, mut f: impl FnMut(T) -> T) -> T {
        let half = T::of(0.5);
        let mid = half * (a + b);
        let slope = half * (b - a);
        let mut acc = T::zero();
        for (x, w) in self.points.iter().zip(self.weights.iter()) {
            acc += *w * f(mid + slope * *x);
        }
        acc * slope
    }

    /// Rule points mapped to `[a, b]` with the matching weights.
    pub fn mapped(&self, a: T, b: T) -> impl Iterator<Item = (T, T)> + '_ {
        let half = T::of(0.5);
        let mid = half * (a + b);
        let slope = half * (b - a);
        self.points
            .iter()
            .zip(self.weights.iter())
            .map(move |(x, w)| (mid + slope * *x, slope * *w))
    }
}

/// Legendre polynomial value and derivative at `x` via the Bonnet recurrence.
fn legendre_pair<T: Scalar>(n: usize, x: T) -> (T, T) {
    let one = T::one();
    if n == 0 {
        return (one, T::zero());
    }
    let mut p_prev = one;
    let mut p = x;
    for k in 1..n {
        let kf = T::of(k as f64);
        let kf1 = T::of((k + 1) as f64);
        let next = ((T::of((2 * k + 1) as f64)) * x * p - kf * p_prev) / kf1;
        p_prev = p;
        p = next;
    }
    // P_n'(x) = n (x P_n - P_{n-1}) / (x^2 - 1)
    let nf = T::of(n as f64);
    let dp = nf * (x * p - p_prev) / (x * x - one);
    (p, dp)
}

/// Builds the `n_points`-point Gauss-Legendre rule on `[-1, 1]`.
///
/// Exact for polynomials of degree `2 n_points - 1`; weights sum to 2.
pub fn gauss_rule<T: Scalar>(n_points: usize) -> Result<QuadratureRule<T>> {
    if n_points == 0 || n_points > MAX_GAUSS_POINTS {
        return Err(SbfemError::InvalidArgument(format!(
            "gauss rule size {n_points} outside 1..={MAX_GAUSS_POINTS}"
        )));
    }
    let n = n_points;
    let mut points = vec![T::zero(); n];
    let mut weights = vec![T::zero(); n];
    let one = T::one();
    let two = T::of(2.0);
    let tol = T::epsilon() * T::of(4.0);

    for k in 0..n.div_ceil(2) {
        // Chebyshev-like initial guess for the k-th root in (0, 1].
        let theta = T::PI() * T::of(k as f64 + 0.75) / T::of(n as f64 + 0.5);
        let mut x = theta.cos();
        let mut dp = T::zero();
        for _ in 0..100 {
            let (p, d) = legendre_pair(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= tol * x.abs().max(one) {
                let (p2, d2) = legendre_pair(n, x);
                dp = d2;
                x -= p2 / d2;
                break;
            }
        }
        let w = two / ((one - x * x) * dp * dp);
        // Roots come out in descending order; store symmetrically.
        points[k] = -x;
        points[n - 1 - k] = x;
        weights[k] = w;
        weights[n - 1 - k] = w;
    }
    if n % 2 == 1 {
        let mid = n / 2;
        points[mid] = T::zero();
        let (_, dp) = legendre_pair(n, T::zero());
        weights[mid] = two / (dp * dp);
    }
    Ok(QuadratureRule { points, weights })
}

pub const MAX_LOBATTO_ORDER: usize = 24;

/// Gauss-Lobatto points on `[-1, 1]` for polynomial order `order`
/// (`order + 1` points including both endpoints), ascending.
pub fn lobatto_points<T: Scalar>(order: usize) -> Result<Vec<T>> {
    if order == 0 || order > MAX_LOBATTO_ORDER {
        return Err(SbfemError::InvalidArgument(format!(
            "lobatto order {order} outside 1..={MAX_LOBATTO_ORDER}"
        )));
    }
    let one = T::one();
    let n = order;
    let mut pts = vec![T::zero(); n + 1];
    pts[0] = -one;
    pts[n] = one;
    // Interior points are the roots of P_n'. Newton from the Chebyshev-Lobatto
    // guess; d/dx[(1-x^2) P_n'] = -n(n+1) P_n gives the derivative of P_n'.
    let nf = T::of(n as f64);
    let n_n1 = nf * (nf + one);
    let tol = T::epsilon() * T::of(4.0);
    for k in 1..n {
        let theta = T::PI() * T::of((n - k) as f64) / nf;
        let mut x = theta.cos();
        for _ in 0..100 {
            let (p, dp) = legendre_pair(n, x);
            let ddp = (T::of(2.0) * x * dp - n_n1 * p) / (one - x * x);
            let dx = dp / ddp;
            x -= dx;
            if dx.abs() <= tol {
                break;
            }
        }
        pts[k] = x;
    }
    // Symmetrize to kill last-ulp asymmetry.
    for k in 0..=(n / 2) {
        let s = T::of(0.5) * (pts[n - k] - pts[k]);
        pts[k] = -s;
        pts[n - k] = s;
    }
    Ok(pts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn monomial_integral(k: usize) -> f64 {
        if k.is_multiple_of(2) {
            2.0 / (k as f64 + 1.0)
        } else {
            0.0
        }
    }

    #[test]
    fn rejects_unsupported_sizes() {
        assert!(gauss_rule::<f64>(0).is_err());
        assert!(gauss_rule::<f64>(65).is_err());
        assert!(gauss_rule::<f64>(64).is_ok());
    }

    #[test]
    fn two_point_rule_exact_through_cubics() {
        let rule = gauss_rule::<f64>(2).unwrap();
        for k in 0..=3 {
            let got = rule.integrate(-1.0, 1.0, |x| x.powi(k as i32));
            assert!(
                (got - monomial_integral(k)).abs() < 1e-15,
                "degree {k}: {got}"
            );
        }
    }

    #[test]
    fn five_point_rule_on_x8() {
        // \int_{-1}^{1} x^8 dx = 2/9.
        let rule = gauss_rule::<f64>(5).unwrap();
        let got = rule.integrate(-1.0, 1.0, |x| x.powi(8));
        assert!((got - 2.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn weights_sum_to_two_and_exactness_up_to_degree() {
        for n in 1..=64 {
            let rule = gauss_rule::<f64>(n).unwrap();
            let sum: f64 = rule.weights().iter().sum();
            assert!((sum - 2.0).abs() < 1e-13, "n={n}: weight sum {sum}");
            for k in (0..=(2 * n - 1)).step_by(if n > 8 { 7 } else { 1 }) {
                let got = rule.integrate(-1.0, 1.0, |x| x.powi(k as i32));
                assert!(
                    (got - monomial_integral(k)).abs() < 2e-13,
                    "n={n} degree {k}: {got}"
                );
            }
        }
    }

    #[test]
    fn points_ascending_and_symmetric() {
        for n in 1..=64 {
            let rule = gauss_rule::<f64>(n).unwrap();
            let pts = rule.points();
            for i in 1..n {
                assert!(pts[i] > pts[i - 1]);
            }
            for i in 0..n {
                assert_eq!(pts[i], -pts[n - 1 - i]);
            }
        }
    }

    #[test]
    fn mapped_interval_integration() {
        // \int_1^3 x^2 dx = 26/3.
        let rule = gauss_rule::<f64>(4).unwrap();
        let got = rule.integrate(1.0, 3.0, |x| x * x);
        assert!((got - 26.0 / 3.0).abs() < 1e-13);
    }

    #[test]
    fn lobatto_small_orders_closed_forms() {
        let p1 = lobatto_points::<f64>(1).unwrap();
        assert_eq!(p1, vec![-1.0, 1.0]);
        let p2 = lobatto_points::<f64>(2).unwrap();
        assert_eq!(p2, vec![-1.0, 0.0, 1.0]);
        // Order 3: interior points at +-1/sqrt(5).
        let p3 = lobatto_points::<f64>(3).unwrap();
        let r = 1.0 / 5.0f64.sqrt();
        assert!((p3[1] + r).abs() < 1e-15);
        assert!((p3[2] - r).abs() < 1e-15);
        // Order 4: interior points at 0, +-sqrt(3/7).
        let p4 = lobatto_points::<f64>(4).unwrap();
        let r = (3.0f64 / 7.0).sqrt();
        assert!((p4[1] + r).abs() < 1e-15);
        assert_eq!(p4[2], 0.0);
        assert!((p4[3] - r).abs() < 1e-15);
    }

    #[test]
    fn lobatto_interior_points_are_legendre_derivative_roots() {
        for order in 2..=8 {
            let pts = lobatto_points::<f64>(order).unwrap();
            assert_eq!(pts.len(), order + 1);
            for i in 1..order {
                let (_, dp) = legendre_pair(order, pts[i]);
                assert!(dp.abs() < 1e-12, "order {order} point {i}: P' = {dp}");
                assert!(pts[i] > pts[i - 1]);
            }
        }
    }

    #[test]
    fn f32_rule_reasonable() {
        let rule = gauss_rule::<f32>(3).unwrap();
        let got = rule.integrate(-1.0f32, 1.0, |x| x * x);
        assert!((got - 2.0 / 3.0).abs() < 1e-6);
    }
}
