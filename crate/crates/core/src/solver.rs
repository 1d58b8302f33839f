//! Semi-analytical solution of the Poisson problem on the sector.
//!
//! After angular discretization the problem becomes the matrix Euler-Cauchy
//! system `r^2 A u'' + r A u' - B u = r^2 F(r)` for the vector of radial
//! functions `u(r)`, with `u(1)` prescribed and boundedness at the origin.
//! Admissible homogeneous solutions are `r^lambda phi` over the nonnegative
//! pencil exponents; separable loads `r^alpha g(theta)` add particular terms
//! `r^(alpha+2) phi_p`. Everything is assembled into a finite sum of
//! [`RadialTerm`]s that can be evaluated and differentiated exactly.

use std::sync::Arc;

use crate::assembly::{
    assemble_pair, reduce_dirichlet, OperatorPair, ReducedSystem, SeparableLoad,
};
use crate::error::{Result, SbfemError};
use crate::field::{SampledGrid, SectorFunction};
use crate::linalg::{lu_factor, norm_inf};
use crate::mesh::AngularMesh;
use crate::scalar::Scalar;
use crate::spectral::{solve_gevp, ModalDecomposition};

/// Default relative tolerance deciding when a load exponent resonates with a
/// pencil eigenvalue.
pub const DEFAULT_RESONANCE_TOL: f64 = 1e-8;

/// Relative pencil gap below which the side-trace lifting switches from the
/// pure-power representation to the logarithmic one. Chosen so that both
/// branches stay far from their failure modes: the power branch amplifies
/// roundoff like 1/gap, the log branch misrepresents the radial profile by
/// O(gap * log^2 r).
const LIFTING_LOG_SWITCH: f64 = 1e-7;

/// How the outer boundary data may deviate from zero at the side edges when
/// no side trace is prescribed.
const COMPATIBILITY_TOL: f64 = 1e-9;

/// Origin of a term in the solution sum.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TermKind {
    Homogeneous,
    Particular,
}

/// One separable term `coefficient * r^exponent * (log r)^log_power * phi`.
#[derive(Clone, Debug)]
pub struct RadialTerm<T> {
    pub coefficient: T,
    pub exponent: T,
    pub log_power: u8,
    /// Angular nodal coefficients, full node set.
    pub mode: Vec<T>,
    pub kind: TermKind,
}

impl<T: Scalar> RadialTerm<T> {
    pub fn new(
        coefficient: T,
        exponent: T,
        log_power: u8,
        mode: Vec<T>,
        kind: TermKind,
    ) -> Result<Self> {
        if !exponent.is_finite() || exponent < T::zero() {
            return Err(SbfemError::InvalidArgument(format!(
                "radial exponent {exponent} must be finite and nonnegative"
            )));
        }
        if log_power > 1 {
            return Err(SbfemError::InvalidArgument(
                "log powers above 1 are not representable".into(),
            ));
        }
        if log_power == 1 && exponent <= T::zero() {
            return Err(SbfemError::InvalidArgument(
                "a logarithmic term needs a positive exponent to stay bounded".into(),
            ));
        }
        Ok(RadialTerm { coefficient, exponent, log_power, mode, kind })
    }

    /// `c * r^beta * (log r)^k`.
    pub fn radial_value(&self, r: T) -> T {
        let base = self.coefficient * r.powf(self.exponent);
        if self.log_power == 1 {
            base * r.ln()
        } else {
            base
        }
    }

    /// First radial derivative.
    pub fn radial_deriv(&self, r: T) -> T {
        let b = self.exponent;
        if self.log_power == 1 {
            self.coefficient * r.powf(b - T::one()) * (b * r.ln() + T::one())
        } else {
            self.coefficient * b * r.powf(b - T::one())
        }
    }

    /// Second radial derivative.
    pub fn radial_second_deriv(&self, r: T) -> T {
        let b = self.exponent;
        let one = T::one();
        if self.log_power == 1 {
            self.coefficient
                * r.powf(b - T::of(2.0))
                * (b * (b - one) * r.ln() + T::of(2.0) * b - one)
        } else {
            self.coefficient * b * (b - one) * r.powf(b - T::of(2.0))
        }
    }
}

/// Problem statement: mesh, separable load, outer boundary data, and the
/// optional radial power of the side-edge traces.
pub struct SbfemProblem<T> {
    mesh: AngularMesh<T>,
    load: SeparableLoad<T>,
    outer_bc: Arc<dyn Fn(T) -> T + Send + Sync>,
    side_exponent: Option<T>,
    resonance_tol: T,
}

impl<T: Scalar> SbfemProblem<T> {
    /// Problem with homogeneous side conditions. The outer data must vanish
    /// at both side edges to be compatible.
    pub fn new(
        mesh: AngularMesh<T>,
        load: SeparableLoad<T>,
        outer_bc: impl Fn(T) -> T + Send + Sync + 'static,
    ) -> Result<Self> {
        let tol = T::of(COMPATIBILITY_TOL);
        let g0 = outer_bc(T::zero());
        let g1 = outer_bc(mesh.theta_max());
        if g0.abs() > tol || g1.abs() > tol {
            return Err(SbfemError::InvalidArgument(format!(
                "outer data must vanish at the side edges (got {g0} and {g1}); \
                 prescribe a side trace if the edges carry data"
            )));
        }
        Ok(SbfemProblem {
            mesh,
            load,
            outer_bc: Arc::new(outer_bc),
            side_exponent: None,
            resonance_tol: T::of(DEFAULT_RESONANCE_TOL),
        })
    }

    /// Problem whose side edges carry the traces `g(0) r^beta` and
    /// `g(theta_max) r^beta`, matching the outer data at the corners.
    pub fn with_side_trace(
        mesh: AngularMesh<T>,
        load: SeparableLoad<T>,
        outer_bc: impl Fn(T) -> T + Send + Sync + 'static,
        beta: T,
    ) -> Result<Self> {
        if !beta.is_finite() || beta <= T::zero() {
            return Err(SbfemError::InvalidArgument(format!(
                "side trace exponent {beta} must be finite and positive"
            )));
        }
        Ok(SbfemProblem {
            mesh,
            load,
            outer_bc: Arc::new(outer_bc),
            side_exponent: Some(beta),
            resonance_tol: T::of(DEFAULT_RESONANCE_TOL),
        })
    }

    pub fn with_resonance_tol(mut self, tol: T) -> Self {
        self.resonance_tol = tol;
        self
    }

    pub fn mesh(&self) -> &AngularMesh<T> {
        &self.mesh
    }

    pub fn load(&self) -> &SeparableLoad<T> {
        &self.load
    }

    pub fn outer_bc(&self, theta: T) -> T {
        (self.outer_bc)(theta)
    }

    pub fn side_exponent(&self) -> Option<T> {
        self.side_exponent
    }
}

/// Semi-discrete solution: a finite (exactly differentiable) sum of radial
/// terms over the angular basis, with the modal data retained for
/// diagnostics.
pub struct SemiDiscreteSolution<T> {
    mesh: AngularMesh<T>,
    terms: Vec<RadialTerm<T>>,
    modal: ModalDecomposition<T>,
}

/// Particular solution for one separable load term: solves
/// `((alpha+2)^2 A - B) phi_p = f` on the free nodes and wraps the result as
/// the radial term `r^(alpha+2) phi_p`.
///
/// Fails with [`SbfemError::Resonance`] when `(alpha+2)^2` is within
/// `resonance_tol` (relative) of a pencil eigenvalue.
pub fn particular_solution<T: Scalar>(
    sys: &ReducedSystem<T>,
    modal: &ModalDecomposition<T>,
    alpha: T,
    f_reduced: &[T],
    resonance_tol: T,
) -> Result<RadialTerm<T>> {
    if alpha <= T::of(-2.0) {
        return Err(SbfemError::InvalidArgument(format!(
            "load exponent {alpha} must exceed -2"
        )));
    }
    if f_reduced.len() != sys.n() {
        return Err(SbfemError::SizeMismatch(format!(
            "load vector has {} entries, reduced system has {}",
            f_reduced.len(),
            sys.n()
        )));
    }
    let sigma = (alpha + T::of(2.0)) * (alpha + T::of(2.0));
    for (k, &lam) in modal.lambdas().iter().enumerate() {
        let lam2 = lam * lam;
        if (sigma - lam2).abs() <= resonance_tol * lam2 {
            return Err(SbfemError::Resonance(format!(
                "(alpha+2)^2 = {sigma} collides with pencil eigenvalue {lam2} (index {k})"
            )));
        }
    }
    let n = sys.n();
    let mut shifted = sys.mass.clone();
    for i in 0..n {
        for j in 0..n {
            shifted[(i, j)] = sigma * shifted[(i, j)] - sys.stiffness[(i, j)];
        }
    }
    let phi_p = lu_factor(&shifted)?.solve(f_reduced);
    RadialTerm::new(
        T::one(),
        alpha + T::of(2.0),
        0,
        sys.expand(&phi_p),
        TermKind::Particular,
    )
}

/// Solves the problem: assembles the pair, decomposes the pencil, builds
/// particular terms for the load (and side traces, if any), and matches the
/// outer boundary data with homogeneous terms.
pub fn solve<T: Scalar>(problem: &SbfemProblem<T>) -> Result<SemiDiscreteSolution<T>> {
    let mesh = &problem.mesh;
    let pair = assemble_pair(mesh)?;
    let (sys, _) = reduce_dirichlet(&pair, None)?;
    let modal = solve_gevp(&sys)?;
    let n_modes = modal.n_modes();
    if modal.lambda(0) <= T::zero() {
        return Err(SbfemError::EigenFailure(
            "side elimination should leave a strictly positive smallest exponent".into(),
        ));
    }

    let mut terms: Vec<RadialTerm<T>> = Vec::new();

    // A load term is a piece of the source of -(Laplacian u) = f. Testing the
    // weak form against e_j and integrating the radial term by parts puts the
    // source on the right as -r^2 F, so the ansatz equation sees -f.
    for term in problem.load.terms() {
        let f_full = term.profile.project(mesh, &pair.mass)?;
        let mut f_red = sys.restrict(&f_full);
        for v in f_red.iter_mut() {
            *v = -*v;
        }
        terms.push(particular_solution(
            &sys,
            &modal,
            term.alpha,
            &f_red,
            problem.resonance_tol,
        )?);
    }

    if let Some(beta) = problem.side_exponent {
        lift_side_traces(problem, &pair, &sys, &modal, beta, &mut terms)?;
    }

    // Outer boundary condition at r = 1: the homogeneous coefficients absorb
    // whatever the particular terms leave over. Logarithmic terms vanish at
    // r = 1 and power terms evaluate to their coefficient times the mode.
    let mut target = vec![T::zero(); n_modes];
    for (row, &j) in sys.free.iter().enumerate() {
        target[row] = problem.outer_bc(mesh.nodes()[j]);
    }
    for term in &terms {
        if term.log_power == 1 {
            continue;
        }
        for (row, &j) in sys.free.iter().enumerate() {
            target[row] -= term.coefficient * term.mode[j];
        }
    }
    let coeff = lu_factor(&modal.modal_matrix())?.solve(&target);

    for (i, &c) in coeff.iter().enumerate() {
        terms.push(RadialTerm::new(
            c,
            modal.lambda(i),
            0,
            modal.mode_full(i),
            TermKind::Homogeneous,
        )?);
    }

    Ok(SemiDiscreteSolution { mesh: mesh.clone(), terms, modal })
}

/// Converts prescribed side traces `g(0) r^beta`, `g(theta_max) r^beta` into
/// solution terms: a nodal lifting plus its modal compensation.
///
/// The lifting `r^beta L` (with `L` supported on the two boundary nodes)
/// injects the separable load `r^(beta-2) (B - beta^2 A) L` into the free
/// rows. That load is expanded in the pencil modes, where each component is a
/// scalar problem with the known solution `fhat_k (r^beta - r^lambda_k) /
/// (beta^2 - lambda_k^2)`. Away from resonance the `r^beta` part is kept as a
/// particular term (the boundary solve supplies the matching homogeneous
/// correction); within [`LIFTING_LOG_SWITCH`] of an eigenvalue that quotient
/// degenerates and is replaced by its limit `fhat_k r^lambda_k log r /
/// (beta + lambda_k)`, committing only an O(gap) representation error.
fn lift_side_traces<T: Scalar>(
    problem: &SbfemProblem<T>,
    pair: &OperatorPair<T>,
    sys: &ReducedSystem<T>,
    modal: &ModalDecomposition<T>,
    beta: T,
    terms: &mut Vec<RadialTerm<T>>,
) -> Result<()> {
    let mesh = &problem.mesh;
    let n_full = pair.n();
    let g0 = problem.outer_bc(T::zero());
    let g1 = problem.outer_bc(mesh.theta_max());
    if g0.abs() <= T::of(COMPATIBILITY_TOL) && g1.abs() <= T::of(COMPATIBILITY_TOL) {
        return Ok(());
    }
    let mut lift = vec![T::zero(); n_full];
    lift[0] = g0;
    lift[n_full - 1] = g1;
    terms.push(RadialTerm::new(T::one(), beta, 0, lift.clone(), TermKind::Particular)?);

    // Induced load on the free rows: f = [(B - beta^2 A) L]_free.
    let beta2 = beta * beta;
    let mut f_red = vec![T::zero(); sys.n()];
    for (row, &j) in sys.free.iter().enumerate() {
        let mut acc = T::zero();
        for &c in &pair.constrained {
            acc += (pair.stiffness[(j, c)] - beta2 * pair.mass[(j, c)]) * lift[c];
        }
        f_red[row] = acc;
    }

    let switch = T::of(LIFTING_LOG_SWITCH);
    for k in 0..modal.n_modes() {
        let lam = modal.lambda(k);
        let lam2 = lam * lam;
        let phi = modal.mode(k);
        // Modal load component in the A-orthonormal expansion.
        let mut fhat = T::zero();
        for (v, f) in phi.iter().zip(f_red.iter()) {
            fhat += *v * *f;
        }
        if fhat == T::zero() {
            continue;
        }
        let gap = beta2 - lam2;
        if gap.abs() > switch * beta2.max(lam2) {
            terms.push(RadialTerm::new(
                fhat / gap,
                beta,
                0,
                modal.mode_full(k),
                TermKind::Particular,
            )?);
        } else {
            terms.push(RadialTerm::new(
                fhat / (beta + lam),
                lam,
                1,
                modal.mode_full(k),
                TermKind::Particular,
            )?);
        }
    }
    Ok(())
}

/// Largest scaled Euler-Cauchy residual of the solution over the free rows at
/// the given radii. With `F(r)` the angular projection of the source, the
/// system satisfied by the solution reads `r A u'' + A u' - B u / r = -r F`,
/// so the residual is `r A u'' + A u' - B u / r + r F(r)`.
pub fn residual_check<T: Scalar>(
    sol: &SemiDiscreteSolution<T>,
    pair: &OperatorPair<T>,
    load: &SeparableLoad<T>,
    r_samples: &[T],
) -> Result<T> {
    let n = pair.n();
    if sol.mesh.n_nodes() != n {
        return Err(SbfemError::SizeMismatch(
            "solution and pair come from different meshes".into(),
        ));
    }
    let projections: Vec<(T, Vec<T>)> = load
        .terms()
        .iter()
        .map(|t| Ok((t.alpha, t.profile.project(&sol.mesh, &pair.mass)?)))
        .collect::<Result<_>>()?;

    let mut worst = T::zero();
    for &r in r_samples {
        if r <= T::zero() || r >= T::one() {
            return Err(SbfemError::OutOfDomain(format!(
                "residual sample radius {r} outside (0, 1)"
            )));
        }
        let mut u = vec![T::zero(); n];
        let mut du = vec![T::zero(); n];
        let mut ddu = vec![T::zero(); n];
        for term in &sol.terms {
            let v = term.radial_value(r);
            let d = term.radial_deriv(r);
            let dd = term.radial_second_deriv(r);
            for (i, m) in term.mode.iter().enumerate() {
                u[i] += v * *m;
                du[i] += d * *m;
                ddu[i] += dd * *m;
            }
        }
        let a_ddu = pair.mass.matvec(&ddu);
        let a_du = pair.mass.matvec(&du);
        let b_u = pair.stiffness.matvec(&u);
        let mut f_r = vec![T::zero(); n];
        for (alpha, f_vec) in &projections {
            let ra = r.powf(*alpha);
            for (o, f) in f_r.iter_mut().zip(f_vec.iter()) {
                *o += ra * *f;
            }
        }
        let mut resid = vec![T::zero(); pair.free.len()];
        let mut scale = T::zero();
        for (row, &i) in pair.free.iter().enumerate() {
            let terms_i = [r * a_ddu[i], a_du[i], -b_u[i] / r, r * f_r[i]];
            resid[row] = terms_i.iter().fold(T::zero(), |s, v| s + *v);
            scale = scale.max(terms_i.iter().fold(T::zero(), |s, v| s.max(v.abs())));
        }
        let denom = scale.max(T::one());
        worst = worst.max(norm_inf(&resid) / denom);
    }
    Ok(worst)
}

impl<T: Scalar> SemiDiscreteSolution<T> {
    pub fn mesh(&self) -> &AngularMesh<T> {
        &self.mesh
    }

    pub fn terms(&self) -> &[RadialTerm<T>] {
        &self.terms
    }

    pub fn modal(&self) -> &ModalDecomposition<T> {
        &self.modal
    }

    /// Smallest radial exponent in the modal basis.
    pub fn lambda_min(&self) -> T {
        self.modal.lambda(0)
    }

    fn check_domain(&self, r: T, theta: T, need_positive_r: bool) -> Result<()> {
        let ok_r = if need_positive_r {
            r > T::zero() && r <= T::one()
        } else {
            r >= T::zero() && r <= T::one()
        };
        if !ok_r {
            return Err(SbfemError::OutOfDomain(format!("radius {r} outside (0, 1]")));
        }
        if theta < T::zero() || theta > self.mesh.theta_max() {
            return Err(SbfemError::OutOfDomain(format!(
                "angle {theta} outside [0, {}]",
                self.mesh.theta_max()
            )));
        }
        Ok(())
    }

    /// Point value `u(r, theta)`.
    pub fn evaluate(&self, r: T, theta: T) -> Result<T> {
        self.check_domain(r, theta, true)?;
        self.value_inner(r, theta)
    }

    /// Radial derivative; needs `r > 0` since exponents below one are
    /// admissible.
    pub fn evaluate_dr(&self, r: T, theta: T) -> Result<T> {
        self.check_domain(r, theta, true)?;
        self.dr_inner(r, theta)
    }

    /// Angular derivative; one-sided at element breakpoints.
    pub fn evaluate_dtheta(&self, r: T, theta: T) -> Result<T> {
        self.check_domain(r, theta, true)?;
        self.dtheta_inner(r, theta)
    }

    fn value_inner(&self, r: T, theta: T) -> Result<T> {
        let p = self.mesh.order();
        let e = self.mesh.element_of(theta)?;
        let mut vals = vec![T::zero(); p + 1];
        self.mesh.local_values(e, theta, &mut vals);
        let first = self.mesh.global_node(e, 0);
        let mut acc = T::zero();
        for term in &self.terms {
            let mut ang = T::zero();
            for (l, v) in vals.iter().enumerate() {
                ang += term.mode[first + l] * *v;
            }
            acc += term.radial_value(r) * ang;
        }
        Ok(acc)
    }

    fn dr_inner(&self, r: T, theta: T) -> Result<T> {
        let p = self.mesh.order();
        let e = self.mesh.element_of(theta)?;
        let mut vals = vec![T::zero(); p + 1];
        self.mesh.local_values(e, theta, &mut vals);
        let first = self.mesh.global_node(e, 0);
        let mut acc = T::zero();
        for term in &self.terms {
            let mut ang = T::zero();
            for (l, v) in vals.iter().enumerate() {
                ang += term.mode[first + l] * *v;
            }
            acc += term.radial_deriv(r) * ang;
        }
        Ok(acc)
    }

    fn dtheta_inner(&self, r: T, theta: T) -> Result<T> {
        let p = self.mesh.order();
        let e = self.mesh.element_of(theta)?;
        let mut ders = vec![T::zero(); p + 1];
        self.mesh.local_derivatives(e, theta, &mut ders);
        let first = self.mesh.global_node(e, 0);
        let mut acc = T::zero();
        for term in &self.terms {
            let mut ang = T::zero();
            for (l, d) in ders.iter().enumerate() {
                ang += term.mode[first + l] * *d;
            }
            acc += term.radial_value(r) * ang;
        }
        Ok(acc)
    }

    fn drdtheta_inner(&self, r: T, theta: T) -> Result<T> {
        let p = self.mesh.order();
        let e = self.mesh.element_of(theta)?;
        let mut ders = vec![T::zero(); p + 1];
        self.mesh.local_derivatives(e, theta, &mut ders);
        let first = self.mesh.global_node(e, 0);
        let mut acc = T::zero();
        for term in &self.terms {
            let mut ang = T::zero();
            for (l, d) in ders.iter().enumerate() {
                ang += term.mode[first + l] * *d;
            }
            acc += term.radial_deriv(r) * ang;
        }
        Ok(acc)
    }
}

impl<T: Scalar> SectorFunction<T> for SemiDiscreteSolution<T> {
    fn value(&self, r: T, theta: T) -> Result<T> {
        self.value_inner(r, theta)
    }

    fn d_r(&self, r: T, theta: T) -> Result<T> {
        self.dr_inner(r, theta)
    }

    fn d_theta(&self, r: T, theta: T) -> Result<T> {
        self.dtheta_inner(r, theta)
    }

    fn d_r_theta(&self, r: T, theta: T) -> Result<T> {
        self.drdtheta_inner(r, theta)
    }

    /// Tensor-grid sampling with the radial and angular factors of every term
    /// tabulated once; the inner loops are plain dot products over terms.
    fn sample_grid(&self, rs: &[T], thetas: &[T]) -> Result<SampledGrid<T>> {
        let nt = self.terms.len();
        let nr = rs.len();
        let na = thetas.len();
        let p = self.mesh.order();

        let mut rad = vec![T::zero(); nt * nr];
        let mut rad_d = vec![T::zero(); nt * nr];
        for (t, term) in self.terms.iter().enumerate() {
            for (i, &r) in rs.iter().enumerate() {
                rad[t * nr + i] = term.radial_value(r);
                rad_d[t * nr + i] = term.radial_deriv(r);
            }
        }

        let mut ang = vec![T::zero(); nt * na];
        let mut ang_d = vec![T::zero(); nt * na];
        let mut vals = vec![T::zero(); p + 1];
        let mut ders = vec![T::zero(); p + 1];
        for (j, &theta) in thetas.iter().enumerate() {
            let e = self.mesh.element_of(theta)?;
            self.mesh.local_values(e, theta, &mut vals);
            self.mesh.local_derivatives(e, theta, &mut ders);
            let first = self.mesh.global_node(e, 0);
            for (t, term) in self.terms.iter().enumerate() {
                let mut v = T::zero();
                let mut d = T::zero();
                for l in 0..=p {
                    let m = term.mode[first + l];
                    v += m * vals[l];
                    d += m * ders[l];
                }
                ang[t * na + j] = v;
                ang_d[t * na + j] = d;
            }
        }

        let mut grid = SampledGrid::zeros(nr, na);
        for i in 0..nr {
            let out_v = &mut grid.value[i * na..(i + 1) * na];
            let out_r = &mut grid.d_r[i * na..(i + 1) * na];
            let out_t = &mut grid.d_theta[i * na..(i + 1) * na];
            for t in 0..nt {
                let rv = rad[t * nr + i];
                let rd = rad_d[t * nr + i];
                let av = &ang[t * na..(t + 1) * na];
                let ad = &ang_d[t * na..(t + 1) * na];
                for j in 0..na {
                    out_v[j] += rv * av[j];
                    out_r[j] += rd * av[j];
                    out_t[j] += rv * ad[j];
                }
            }
        }
        Ok(grid)
    }
}
