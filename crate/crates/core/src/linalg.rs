//! Dense linear algebra kernels used by the solver: Cholesky and LU
//! factorizations, a symmetric eigensolver (Householder tridiagonalization
//! followed by implicit-shift QL), and a real Hessenberg QR eigenvalue
//! routine for general matrices. The eigensolvers follow the classic
//! EISPACK/Handbook algorithms. All matrices here are small and dense, so
//! O(n^3) is fine.

use crate::error::{Result, SbfemError};
use crate::scalar::Scalar;

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut m = Mat::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(self.cols, x.len(), "matvec dimension mismatch");
        let mut y = vec![T::zero(); self.rows];
        for i in 0..self.rows {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            let mut acc = T::zero();
            for (a, b) in row.iter().zip(x.iter()) {
                acc += *a * *b;
            }
            y[i] = acc;
        }
        y
    }

    pub fn matmul(&self, other: &Mat<T>) -> Mat<T> {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self[(i, k)];
                if aik == T::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += aik * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> Mat<T> {
        Mat::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// Extracts the submatrix with the given row and column indices.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Mat<T> {
        Mat::from_fn(rows.len(), cols.len(), |i, j| self[(rows[i], cols[j])])
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Largest absolute deviation from symmetry.
    pub fn symmetry_defect(&self) -> T {
        assert_eq!(self.rows, self.cols);
        let mut worst = T::zero();
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }
}

impl<T> std::ops::Index<(usize, usize)> for Mat<T> {
    type Output = T;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Mat<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = T::zero();
    for (x, y) in a.iter().zip(b.iter()) {
        acc += *x * *y;
    }
    acc
}

pub fn norm_inf<T: Scalar>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |m, x| m.max(x.abs()))
}

/// Cholesky factorization `A = L L^T`; returns the lower factor.
pub fn cholesky<T: Scalar>(a: &Mat<T>) -> Result<Mat<T>> {
    let n = a.rows();
    if a.cols() != n {
        return Err(SbfemError::SizeMismatch("cholesky needs a square matrix".into()));
    }
    let mut l = Mat::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d <= T::zero() {
            return Err(SbfemError::NotPositiveDefinite(format!(
                "pivot {d:e} at index {j}"
            )));
        }
        let ljj = d.sqrt();
        l[(j, j)] = ljj;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(l)
}

/// Solves `L y = b` for lower-triangular `L`.
pub fn forward_substitute<T: Scalar>(l: &Mat<T>, b: &[T]) -> Vec<T> {
    let n = l.rows();
    let mut y = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            let lik = l[(i, k)];
            y[i] = y[i] - lik * y[k];
        }
        y[i] /= l[(i, i)];
    }
    y
}

/// Solves `L^T x = b` for lower-triangular `L`.
pub fn back_substitute_transpose<T: Scalar>(l: &Mat<T>, b: &[T]) -> Vec<T> {
    let n = l.rows();
    let mut x = b.to_vec();
    for i in (0..n).rev() {
        for k in (i + 1)..n {
            let lki = l[(k, i)];
            x[i] = x[i] - lki * x[k];
        }
        x[i] /= l[(i, i)];
    }
    x
}

/// Solves `A x = b` given the Cholesky factor `L` of `A`.
pub fn cholesky_solve<T: Scalar>(l: &Mat<T>, b: &[T]) -> Vec<T> {
    let y = forward_substitute(l, b);
    back_substitute_transpose(l, &y)
}

/// LU factorization with partial pivoting.
pub struct LuFactors<T> {
    lu: Mat<T>,
    perm: Vec<usize>,
    det_sign: T,
}

pub fn lu_factor<T: Scalar>(a: &Mat<T>) -> Result<LuFactors<T>> {
    let n = a.rows();
    if a.cols() != n {
        return Err(SbfemError::SizeMismatch("lu needs a square matrix".into()));
    }
    let mut lu = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut det_sign = T::one();
    for k in 0..n {
        let mut piv = k;
        let mut best = lu[(k, k)].abs();
        for i in (k + 1)..n {
            let v = lu[(i, k)].abs();
            if v > best {
                best = v;
                piv = i;
            }
        }
        if best == T::zero() {
            return Err(SbfemError::Singular(format!("zero pivot column {k}")));
        }
        if piv != k {
            for j in 0..n {
                let tmp = lu[(k, j)];
                lu[(k, j)] = lu[(piv, j)];
                lu[(piv, j)] = tmp;
            }
            perm.swap(k, piv);
            det_sign = -det_sign;
        }
        let pivot = lu[(k, k)];
        for i in (k + 1)..n {
            let m = lu[(i, k)] / pivot;
            lu[(i, k)] = m;
            for j in (k + 1)..n {
                let lkj = lu[(k, j)];
                lu[(i, j)] -= m * lkj;
            }
        }
    }
    Ok(LuFactors { lu, perm, det_sign })
}

impl<T: Scalar> LuFactors<T> {
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.lu.rows();
        assert_eq!(b.len(), n, "lu solve dimension mismatch");
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 1..n {
            for k in 0..i {
                let lik = self.lu[(i, k)];
                x[i] = x[i] - lik * x[k];
            }
        }
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                let uik = self.lu[(i, k)];
                x[i] = x[i] - uik * x[k];
            }
            x[i] /= self.lu[(i, i)];
        }
        x
    }

    pub fn det(&self) -> T {
        let n = self.lu.rows();
        let mut d = self.det_sign;
        for i in 0..n {
            d *= self.lu[(i, i)];
        }
        d
    }
}

/// Eigen decomposition of a symmetric matrix: ascending eigenvalues and the
/// matching orthonormal eigenvectors as columns.
pub struct SymmetricEigen<T> {
    pub values: Vec<T>,
    pub vectors: Mat<T>,
}

/// Symmetric eigensolver: Householder tridiagonalization followed by the
/// implicit-shift QL iteration, with eigenvalues sorted ascending.
pub fn sym_eigen<T: Scalar>(a: &Mat<T>) -> Result<SymmetricEigen<T>> {
    let n = a.rows();
    if a.cols() != n {
        return Err(SbfemError::SizeMismatch("sym_eigen needs a square matrix".into()));
    }
    if n == 0 {
        return Ok(SymmetricEigen { values: vec![], vectors: Mat::zeros(0, 0) });
    }
    let mut v = a.clone();
    let mut d = vec![T::zero(); n];
    let mut e = vec![T::zero(); n];
    tred2(&mut v, &mut d, &mut e);
    tql2(&mut v, &mut d, &mut e)?;
    Ok(SymmetricEigen { values: d, vectors: v })
}

/// Householder reduction of a symmetric matrix to tridiagonal form, with the
/// orthogonal transform accumulated into `v`.
fn tred2<T: Scalar>(v: &mut Mat<T>, d: &mut [T], e: &mut [T]) {
    let n = d.len();
    for j in 0..n {
        d[j] = v[(n - 1, j)];
    }

    for i in (1..n).rev() {
        let mut scale = T::zero();
        let mut h = T::zero();
        for item in d.iter().take(i) {
            scale += item.abs();
        }
        if scale == T::zero() {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[(i - 1, j)];
                v[(i, j)] = T::zero();
                v[(j, i)] = T::zero();
            }
        } else {
            for item in d.iter_mut().take(i) {
                *item /= scale;
                h += *item * *item;
            }
            let f = d[i - 1];
            let mut g = h.sqrt();
            if f > T::zero() {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for item in e.iter_mut().take(i) {
                *item = T::zero();
            }

            for j in 0..i {
                let f = d[j];
                v[(j, i)] = f;
                let mut g = e[j] + v[(j, j)] * f;
                for k in (j + 1)..i {
                    g += v[(k, j)] * d[k];
                    e[k] += v[(k, j)] * f;
                }
                e[j] = g;
            }
            let mut f = T::zero();
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                let f = d[j];
                let g = e[j];
                for k in j..i {
                    let upd = f * e[k] + g * d[k];
                    v[(k, j)] -= upd;
                }
                d[j] = v[(i - 1, j)];
                v[(i, j)] = T::zero();
            }
        }
        d[i] = h;
    }

    // Accumulate transformations.
    for i in 0..(n - 1) {
        v[(n - 1, i)] = v[(i, i)];
        v[(i, i)] = T::one();
        let h = d[i + 1];
        if h != T::zero() {
            for k in 0..=i {
                d[k] = v[(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = T::zero();
                for k in 0..=i {
                    g += v[(k, i + 1)] * v[(k, j)];
                }
                for k in 0..=i {
                    let dk = d[k];
                    v[(k, j)] -= g * dk;
                }
            }
        }
        for k in 0..=i {
            v[(k, i + 1)] = T::zero();
        }
    }
    for j in 0..n {
        d[j] = v[(n - 1, j)];
        v[(n - 1, j)] = T::zero();
    }
    v[(n - 1, n - 1)] = T::one();
    e[0] = T::zero();
}

/// Implicit-shift QL iteration on a symmetric tridiagonal matrix, updating the
/// accumulated transform in `v` and sorting eigenpairs ascending.
fn tql2<T: Scalar>(v: &mut Mat<T>, d: &mut [T], e: &mut [T]) -> Result<()> {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = T::zero();

    let mut f = T::zero();
    let mut tst1 = T::zero();
    let eps = T::epsilon();
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0usize;
            loop {
                iter += 1;
                if iter > 60 {
                    return Err(SbfemError::EigenFailure(format!(
                        "QL iteration stalled at index {l}"
                    )));
                }
                let g = d[l];
                let two = T::of(2.0);
                let mut p = (d[l + 1] - g) / (two * e[l]);
                let mut r = p.hypot(T::one());
                if p < T::zero() {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for item in d.iter_mut().take(n).skip(l + 2) {
                    *item -= h;
                }
                f += h;

                p = d[m];
                let mut c = T::one();
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = T::zero();
                let mut s2 = T::zero();
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);

                    for k in 0..n {
                        h = v[(k, i + 1)];
                        v[(k, i + 1)] = s * v[(k, i)] + c * h;
                        v[(k, i)] = c * v[(k, i)] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;

                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = T::zero();
    }

    // Sort ascending, permuting eigenvectors along.
    for i in 0..n.saturating_sub(1) {
        let mut k = i;
        let mut p = d[i];
        for j in (i + 1)..n {
            if d[j] < p {
                k = j;
                p = d[j];
            }
        }
        if k != i {
            d[k] = d[i];
            d[i] = p;
            for j in 0..n {
                let tmp = v[(j, i)];
                v[(j, i)] = v[(j, k)];
                v[(j, k)] = tmp;
            }
        }
    }
    Ok(())
}

/// Eigenvalues of a general real square matrix as `(re, im)` pairs, sorted by
/// real part then imaginary part. Householder reduction to Hessenberg form
/// followed by the Francis double-shift QR iteration (eigenvalues only).
pub fn general_eigenvalues<T: Scalar>(a: &Mat<T>) -> Result<Vec<(T, T)>> {
    let n = a.rows();
    if a.cols() != n {
        return Err(SbfemError::SizeMismatch(
            "general_eigenvalues needs a square matrix".into(),
        ));
    }
    if n == 0 {
        return Ok(vec![]);
    }
    let mut h = a.clone();
    hessenberg(&mut h);
    let mut eigs = hqr(&mut h)?;
    eigs.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal))
    });
    Ok(eigs)
}

/// In-place orthogonal reduction to upper Hessenberg form.
fn hessenberg<T: Scalar>(h: &mut Mat<T>) {
    let n = h.rows();
    if n < 3 {
        return;
    }
    let high = n - 1;
    let mut ort = vec![T::zero(); n];
    for m in 1..high {
        let mut scale = T::zero();
        for i in m..=high {
            scale += h[(i, m - 1)].abs();
        }
        if scale == T::zero() {
            continue;
        }
        let mut hsum = T::zero();
        for i in (m..=high).rev() {
            ort[i] = h[(i, m - 1)] / scale;
            hsum += ort[i] * ort[i];
        }
        let mut g = hsum.sqrt();
        if ort[m] > T::zero() {
            g = -g;
        }
        hsum -= ort[m] * g;
        ort[m] -= g;

        for j in m..n {
            let mut f = T::zero();
            for i in (m..=high).rev() {
                f += ort[i] * h[(i, j)];
            }
            f /= hsum;
            for i in m..=high {
                let o = ort[i];
                h[(i, j)] -= f * o;
            }
        }
        for i in 0..=high {
            let mut f = T::zero();
            for j in (m..=high).rev() {
                f += ort[j] * h[(i, j)];
            }
            f /= hsum;
            for j in m..=high {
                let o = ort[j];
                h[(i, j)] -= f * o;
            }
        }
        h[(m, m - 1)] = scale * g;
    }
    // Entries below the first subdiagonal are noise from the reduction.
    for i in 2..n {
        for j in 0..(i - 1) {
            h[(i, j)] = T::zero();
        }
    }
}

#[inline]
fn sign_of<T: Scalar>(a: T, b: T) -> T {
    if b >= T::zero() {
        a.abs()
    } else {
        -a.abs()
    }
}

/// Francis double-shift QR on an upper Hessenberg matrix; eigenvalues only.
fn hqr<T: Scalar>(a: &mut Mat<T>) -> Result<Vec<(T, T)>> {
    let n = a.rows();
    let eps = T::epsilon();
    let zero = T::zero();
    let half = T::of(0.5);

    let mut anorm = zero;
    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            anorm += a[(i, j)].abs();
        }
    }
    if anorm == zero {
        return Ok(vec![(zero, zero); n]);
    }

    let mut wr = vec![zero; n];
    let mut wi = vec![zero; n];
    let mut nn = n as isize - 1;
    let mut t = zero;

    while nn >= 0 {
        let mut its = 0usize;
        loop {
            // Look for a single small subdiagonal element.
            let nnu = nn as usize;
            let mut l = nnu;
            while l >= 1 {
                let mut s = a[(l - 1, l - 1)].abs() + a[(l, l)].abs();
                if s == zero {
                    s = anorm;
                }
                if a[(l, l - 1)].abs() <= eps * s {
                    a[(l, l - 1)] = zero;
                    break;
                }
                l -= 1;
            }
            let x = a[(nnu, nnu)];
            if l == nnu {
                // One root found.
                wr[nnu] = x + t;
                wi[nnu] = zero;
                nn -= 1;
                break;
            }
            let y = a[(nnu - 1, nnu - 1)];
            let w = a[(nnu, nnu - 1)] * a[(nnu - 1, nnu)];
            if l == nnu - 1 {
                // Two roots found.
                let p = half * (y - x);
                let q = p * p + w;
                let mut z = q.abs().sqrt();
                let x = x + t;
                if q >= zero {
                    z = p + sign_of(z, p);
                    wr[nnu - 1] = x + z;
                    wr[nnu] = wr[nnu - 1];
                    if z != zero {
                        wr[nnu] = x - w / z;
                    }
                    wi[nnu - 1] = zero;
                    wi[nnu] = zero;
                } else {
                    wr[nnu - 1] = x + p;
                    wr[nnu] = x + p;
                    wi[nnu] = z;
                    wi[nnu - 1] = -z;
                }
                nn -= 2;
                break;
            }

            // No convergence yet; do a QR sweep.
            if its == 30 {
                return Err(SbfemError::EigenFailure(
                    "QR iteration exceeded 30 sweeps per eigenvalue".into(),
                ));
            }
            let (mut x, mut y, mut w) = (x, y, w);
            if its == 10 || its == 20 {
                // Exceptional shift.
                t += x;
                for i in 0..=nnu {
                    a[(i, i)] -= x;
                }
                let s = a[(nnu, nnu - 1)].abs() + a[(nnu - 1, nnu - 2)].abs();
                x = T::of(0.75) * s;
                y = x;
                w = T::of(-0.4375) * s * s;
            }
            its += 1;

            // Form shifted polynomial and look for two consecutive small
            // subdiagonal elements.
            let mut m = nnu - 2;
            let (mut p, mut q, mut r);
            loop {
                let z = a[(m, m)];
                let rr = x - z;
                let ss = y - z;
                p = (rr * ss - w) / a[(m + 1, m)] + a[(m, m + 1)];
                q = a[(m + 1, m + 1)] - z - rr - ss;
                r = a[(m + 2, m + 1)];
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = a[(m, m - 1)].abs() * (q.abs() + r.abs());
                let v = p.abs() * (a[(m - 1, m - 1)].abs() + z.abs() + a[(m + 1, m + 1)].abs());
                if u <= eps * v {
                    break;
                }
                m -= 1;
            }
            for i in (m + 2)..=nnu {
                a[(i, i - 2)] = zero;
                if i != m + 2 {
                    a[(i, i - 3)] = zero;
                }
            }

            // Double QR step on rows l..=nn and columns m..=nn.
            for k in m..nnu {
                if k != m {
                    p = a[(k, k - 1)];
                    q = a[(k + 1, k - 1)];
                    r = zero;
                    if k != nnu - 1 {
                        r = a[(k + 2, k - 1)];
                    }
                    x = p.abs() + q.abs() + r.abs();
                    if x != zero {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                let s = sign_of((p * p + q * q + r * r).sqrt(), p);
                if s == zero {
                    continue;
                }
                if k == m {
                    if l != m {
                        a[(k, k - 1)] = -a[(k, k - 1)];
                    }
                } else {
                    a[(k, k - 1)] = -s * x;
                }
                p += s;
                x = p / s;
                y = q / s;
                let z = r / s;
                q /= p;
                r /= p;

                // Row modification.
                for j in k..=nnu {
                    let mut pp = a[(k, j)] + q * a[(k + 1, j)];
                    if k != nnu - 1 {
                        pp += r * a[(k + 2, j)];
                        a[(k + 2, j)] -= pp * z;
                    }
                    a[(k + 1, j)] -= pp * y;
                    a[(k, j)] -= pp * x;
                }
                // Column modification. The reflector from the right divides
                // through by p rather than s, so the update factors differ
                // from the row pass.
                let mmin = if nnu < k + 3 { nnu } else { k + 3 };
                for i in l..=mmin {
                    let mut pp = x * a[(i, k)] + y * a[(i, k + 1)];
                    if k != nnu - 1 {
                        pp += z * a[(i, k + 2)];
                        a[(i, k + 2)] -= pp * r;
                    }
                    a[(i, k + 1)] -= pp * q;
                    a[(i, k)] -= pp;
                }
            }
        }
    }

    Ok(wr.into_iter().zip(wi).collect())
}
