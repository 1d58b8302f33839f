//! Modal decomposition of the angular pencil.
//!
//! The reduced pair `(A, B)` defines the symmetric-definite eigenproblem
//! `B phi = lambda^2 A phi`. It is solved by Cholesky-transforming to a
//! standard symmetric problem, so all eigenvalues are real and the modes can
//! be made orthonormal in the `A` inner product. The nonnegative square roots
//! `lambda` are the radial exponents of the separable solutions.
//!
//! The block matrix `E = [[0, A^-1], [B, 0]]` couples nodal values with their
//! scaled radial derivatives; its spectrum is the symmetric set
//! `{+-lambda}`. It is kept purely as a cross-validation oracle for the
//! pencil route.

use crate::assembly::ReducedSystem;
use crate::error::{Result, SbfemError};
use crate::linalg::{
    back_substitute_transpose, cholesky, cholesky_solve, forward_substitute,
    general_eigenvalues, sym_eigen, Mat,
};
use crate::scalar::Scalar;

/// Eigenvalues below this are treated as roundoff zeros; anything more
/// negative is reported as an error.
const NEGATIVE_CLAMP: f64 = -1e-10;

/// Modal decomposition of the reduced pencil: ascending radial exponents
/// `lambda_i >= 0` with `A`-orthonormal modes.
#[derive(Clone, Debug)]
pub struct ModalDecomposition<T> {
    lambdas: Vec<T>,
    /// Modes on the free nodes, one `Vec` per eigenvalue.
    modes: Vec<Vec<T>>,
    free: Vec<usize>,
    n_full: usize,
}

impl<T: Scalar> ModalDecomposition<T> {
    pub fn n_modes(&self) -> usize {
        self.lambdas.len()
    }

    pub fn lambdas(&self) -> &[T] {
        &self.lambdas
    }

    pub fn lambda(&self, i: usize) -> T {
        self.lambdas[i]
    }

    /// Mode `i` on the free nodes.
    pub fn mode(&self, i: usize) -> &[T] {
        &self.modes[i]
    }

    /// Mode `i` scattered to the full node set (zeros on constrained nodes).
    pub fn mode_full(&self, i: usize) -> Vec<T> {
        let mut full = vec![T::zero(); self.n_full];
        for (v, &idx) in self.modes[i].iter().zip(self.free.iter()) {
            full[idx] = *v;
        }
        full
    }

    pub fn free_nodes(&self) -> &[usize] {
        &self.free
    }

    pub fn n_full(&self) -> usize {
        self.n_full
    }

    /// Modal matrix with mode `i` in column `i`.
    pub fn modal_matrix(&self) -> Mat<T> {
        let n = self.n_modes();
        Mat::from_fn(n, n, |r, c| self.modes[c][r])
    }
}

/// Solves `B phi = lambda^2 A phi` on the reduced system.
///
/// Returns exponents sorted ascending. Squared eigenvalues in
/// `(-1e-10, 0)` are clamped to zero; anything below that indicates a broken
/// pair and is an error. Each mode is `A`-orthonormal and signed so that its
/// entry of largest magnitude is positive.
pub fn solve_gevp<T: Scalar>(sys: &ReducedSystem<T>) -> Result<ModalDecomposition<T>> {
    let n = sys.n();
    if sys.mass.rows() != n || sys.stiffness.rows() != n {
        return Err(SbfemError::SizeMismatch("reduced pair dimensions disagree".into()));
    }
    let l = cholesky(&sys.mass)?;

    // C = L^-1 B L^-T, computed column by column and symmetrized.
    let mut c = Mat::zeros(n, n);
    for j in 0..n {
        let col = forward_substitute(&l, &sys.stiffness.column(j));
        for i in 0..n {
            c[(i, j)] = col[i];
        }
    }
    let mut ct = c.transpose();
    for j in 0..n {
        let col = forward_substitute(&l, &ct.column(j));
        for i in 0..n {
            c[(i, j)] = col[i];
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = T::of(0.5) * (c[(i, j)] + c[(j, i)]);
            c[(i, j)] = avg;
            c[(j, i)] = avg;
        }
    }
    drop(std::mem::replace(&mut ct, Mat::zeros(0, 0)));

    let eig = sym_eigen(&c)?;
    let clamp = T::of(NEGATIVE_CLAMP);
    let mut lambdas = Vec::with_capacity(n);
    let mut modes = Vec::with_capacity(n);
    for k in 0..n {
        let mu = eig.values[k];
        let mu = if mu < T::zero() {
            if mu < clamp {
                return Err(SbfemError::NegativeEigenvalue {
                    value: mu.to_f64().unwrap_or(f64::NAN),
                });
            }
            T::zero()
        } else {
            mu
        };
        lambdas.push(mu.sqrt());
        let y = eig.vectors.column(k);
        let mut phi = back_substitute_transpose(&l, &y);
        // Orthogonal y and the congruence transform make phi A-orthonormal
        // automatically; only the sign needs pinning for reproducibility.
        let mut imax = 0;
        let mut vmax = T::zero();
        for (i, v) in phi.iter().enumerate() {
            if v.abs() > vmax {
                vmax = v.abs();
                imax = i;
            }
        }
        if phi[imax] < T::zero() {
            for v in &mut phi {
                *v = -*v;
            }
        }
        modes.push(phi);
    }

    Ok(ModalDecomposition { lambdas, modes, free: sys.free.clone(), n_full: sys.n_full })
}

/// The coupled first-order block matrix `[[0, A^-1], [B, 0]]`.
#[derive(Clone, Debug)]
pub struct HamiltonianMatrix<T> {
    pub matrix: Mat<T>,
}

/// Builds the block matrix from the reduced pair. `A^-1` comes from Cholesky
/// solves against identity columns.
pub fn build_hamiltonian<T: Scalar>(sys: &ReducedSystem<T>) -> Result<HamiltonianMatrix<T>> {
    let n = sys.n();
    let l = cholesky(&sys.mass)?;
    let mut m = Mat::zeros(2 * n, 2 * n);
    let mut unit = vec![T::zero(); n];
    for j in 0..n {
        unit[j] = T::one();
        let col = cholesky_solve(&l, &unit);
        unit[j] = T::zero();
        for i in 0..n {
            m[(i, n + j)] = col[i];
        }
    }
    for i in 0..n {
        for j in 0..n {
            m[(n + i, j)] = sys.stiffness[(i, j)];
        }
    }
    Ok(HamiltonianMatrix { matrix: m })
}

impl<T: Scalar> HamiltonianMatrix<T> {
    /// Full eigenvalue set as `(re, im)` pairs, sorted by real then imaginary
    /// part. Computed with the dense Hessenberg QR routine, independently of
    /// the pencil path.
    pub fn eigenvalues(&self) -> Result<Vec<(T, T)>> {
        general_eigenvalues(&self.matrix)
    }
}
