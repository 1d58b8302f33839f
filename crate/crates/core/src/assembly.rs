//! Assembly of the angular operator pair and load projections.
//!
//! For a mesh with basis `{e_i}` on `(0, theta_max)` the pair consists of the
//! mass matrix `A_ij = \int e_i e_j` and the stiffness matrix
//! `B_ij = \int e_i' e_j'`. Boundary conditions on the straight edges are
//! imposed by eliminating the two boundary nodes.

use std::sync::Arc;

use crate::error::{Result, SbfemError};
use crate::linalg::Mat;
use crate::mesh::AngularMesh;
use crate::quadrature::gauss_rule;
use crate::scalar::Scalar;

/// Angular mass and stiffness matrices with the boundary-node bookkeeping.
#[derive(Clone, Debug)]
pub struct OperatorPair<T> {
    pub mass: Mat<T>,
    pub stiffness: Mat<T>,
    /// Nodes eliminated by the side boundary conditions.
    pub constrained: Vec<usize>,
    /// Remaining nodes, ascending.
    pub free: Vec<usize>,
}

impl<T: Scalar> OperatorPair<T> {
    pub fn n(&self) -> usize {
        self.mass.rows()
    }
}

/// Assembles the mass/stiffness pair on `mesh`.
///
/// Per-element Gauss quadrature with `mesh.assembly_points()` points, which is
/// exact for both integrands. Each local block is computed once and mirrored,
/// so the results are exactly symmetric.
pub fn assemble_pair<T: Scalar>(mesh: &AngularMesh<T>) -> Result<OperatorPair<T>> {
    let n = mesh.n_nodes();
    let p = mesh.order();
    let rule = gauss_rule::<T>(mesh.assembly_points())?;
    let mut mass = Mat::zeros(n, n);
    let mut stiffness = Mat::zeros(n, n);

    let nloc = p + 1;
    let mut vals = vec![T::zero(); nloc];
    let mut ders = vec![T::zero(); nloc];
    let mut a_loc = vec![T::zero(); nloc * nloc];
    let mut b_loc = vec![T::zero(); nloc * nloc];

    for e in 0..mesh.n_elements() {
        let (a, b) = mesh.element_span(e);
        a_loc.iter_mut().for_each(|v| *v = T::zero());
        b_loc.iter_mut().for_each(|v| *v = T::zero());
        for (theta, w) in rule.mapped(a, b) {
            mesh.local_values(e, theta, &mut vals);
            mesh.local_derivatives(e, theta, &mut ders);
            for i in 0..nloc {
                for j in i..nloc {
                    a_loc[i * nloc + j] += w * vals[i] * vals[j];
                    b_loc[i * nloc + j] += w * ders[i] * ders[j];
                }
            }
        }
        for i in 0..nloc {
            let gi = mesh.global_node(e, i);
            for j in i..nloc {
                let gj = mesh.global_node(e, j);
                let av = a_loc[i * nloc + j];
                let bv = b_loc[i * nloc + j];
                mass[(gi, gj)] += av;
                stiffness[(gi, gj)] += bv;
                if gi != gj {
                    mass[(gj, gi)] = mass[(gi, gj)];
                    stiffness[(gj, gi)] = stiffness[(gi, gj)];
                }
            }
        }
    }

    let constrained = mesh.boundary_nodes().to_vec();
    let free: Vec<usize> = (1..n - 1).collect();
    if free.is_empty() {
        return Err(SbfemError::InvalidArgument(
            "mesh too small: no free nodes after boundary elimination".into(),
        ));
    }
    Ok(OperatorPair { mass, stiffness, constrained, free })
}

/// Angular profile of a separable load term or boundary trace.
#[derive(Clone)]
pub enum AngularProfile<T> {
    /// Closed-form profile sampled by quadrature.
    Callable(Arc<dyn Fn(T) -> T + Send + Sync>),
    /// Nodal coefficients of a function already in the basis.
    Nodal(Vec<T>),
}

impl<T: Scalar> AngularProfile<T> {
    pub fn callable(f: impl Fn(T) -> T + Send + Sync + 'static) -> Self {
        AngularProfile::Callable(Arc::new(f))
    }

    /// Projects the profile onto the basis: `F_j = \int g e_j`.
    pub fn project(&self, mesh: &AngularMesh<T>, mass: &Mat<T>) -> Result<Vec<T>> {
        match self {
            AngularProfile::Callable(f) => project_load(mesh, f.as_ref()),
            AngularProfile::Nodal(coeffs) => {
                if coeffs.len() != mesh.n_nodes() {
                    return Err(SbfemError::SizeMismatch(format!(
                        "nodal profile has {} entries, mesh has {} nodes",
                        coeffs.len(),
                        mesh.n_nodes()
                    )));
                }
                Ok(mass.matvec(coeffs))
            }
        }
    }
}

impl<T: std::fmt::Debug> std::fmt::Debug for AngularProfile<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AngularProfile::Callable(_) => f.write_str("AngularProfile::Callable"),
            AngularProfile::Nodal(c) => write!(f, "AngularProfile::Nodal({c:?})"),
        }
    }
}

/// One separable load term `r^alpha * g(theta)`.
#[derive(Clone, Debug)]
pub struct LoadTerm<T> {
    pub alpha: T,
    pub profile: AngularProfile<T>,
}

/// Separable volume source: a finite sum of `r^alpha * g(theta)` terms making
/// up the right-hand side `f` of `-(Laplacian u) = f`.
#[derive(Clone, Debug, Default)]
pub struct SeparableLoad<T> {
    terms: Vec<LoadTerm<T>>,
}

impl<T: Scalar> SeparableLoad<T> {
    pub fn empty() -> Self {
        SeparableLoad { terms: vec![] }
    }

    /// Appends a term; the radial exponent must satisfy `alpha > -2` so the
    /// term is integrable against the radial weight.
    pub fn push(&mut self, alpha: T, profile: AngularProfile<T>) -> Result<()> {
        if !alpha.is_finite() || alpha <= T::of(-2.0) {
            return Err(SbfemError::InvalidArgument(format!(
                "load exponent {alpha} must be finite and > -2"
            )));
        }
        self.terms.push(LoadTerm { alpha, profile });
        Ok(())
    }

    pub fn with_term(alpha: T, profile: AngularProfile<T>) -> Result<Self> {
        let mut load = Self::empty();
        load.push(alpha, profile)?;
        Ok(load)
    }

    pub fn terms(&self) -> &[LoadTerm<T>] {
        &self.terms
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

/// Projects a closed-form angular profile onto the basis: `F_j = \int g e_j`,
/// by per-element Gauss quadrature.
pub fn project_load<T: Scalar>(mesh: &AngularMesh<T>, g: &dyn Fn(T) -> T) -> Result<Vec<T>> {
    let rule = gauss_rule::<T>(mesh.assembly_points())?;
    let nloc = mesh.order() + 1;
    let mut vals = vec![T::zero(); nloc];
    let mut out = vec![T::zero(); mesh.n_nodes()];
    for e in 0..mesh.n_elements() {
        let (a, b) = mesh.element_span(e);
        for (theta, w) in rule.mapped(a, b) {
            let gv = g(theta);
            if !gv.is_finite() {
                return Err(SbfemError::NonFinite(format!(
                    "load profile at theta = {theta}"
                )));
            }
            mesh.local_values(e, theta, &mut vals);
            for i in 0..nloc {
                out[mesh.global_node(e, i)] += w * gv * vals[i];
            }
        }
    }
    Ok(out)
}

/// The operator pair restricted to the free nodes.
#[derive(Clone, Debug)]
pub struct ReducedSystem<T> {
    pub mass: Mat<T>,
    pub stiffness: Mat<T>,
    pub free: Vec<usize>,
    pub n_full: usize,
}

impl<T: Scalar> ReducedSystem<T> {
    pub fn n(&self) -> usize {
        self.free.len()
    }

    /// Pulls the free components out of a full-length vector.
    pub fn restrict(&self, full: &[T]) -> Vec<T> {
        self.free.iter().map(|&i| full[i]).collect()
    }

    /// Scatters a reduced vector back to full length with zeros at the
    /// constrained nodes.
    pub fn expand(&self, reduced: &[T]) -> Vec<T> {
        assert_eq!(reduced.len(), self.free.len(), "expand length mismatch");
        let mut full = vec![T::zero(); self.n_full];
        for (v, &i) in reduced.iter().zip(self.free.iter()) {
            full[i] = *v;
        }
        full
    }
}

/// Restricts the pair (and a right-hand side, if given) to the free nodes.
pub fn reduce_dirichlet<T: Scalar>(
    pair: &OperatorPair<T>,
    rhs: Option<&[T]>,
) -> Result<(ReducedSystem<T>, Option<Vec<T>>)> {
    if pair.free.is_empty() {
        return Err(SbfemError::InvalidArgument("no free nodes to reduce onto".into()));
    }
    let n = pair.n();
    if let Some(r) = rhs {
        if r.len() != n {
            return Err(SbfemError::SizeMismatch(format!(
                "rhs has {} entries, pair has {n}",
                r.len()
            )));
        }
    }
    let sys = ReducedSystem {
        mass: pair.mass.submatrix(&pair.free, &pair.free),
        stiffness: pair.stiffness.submatrix(&pair.free, &pair.free),
        free: pair.free.clone(),
        n_full: n,
    };
    let rhs_reduced = rhs.map(|r| sys.restrict(r));
    Ok((sys, rhs_reduced))
}
