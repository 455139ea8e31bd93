//! Dense complex matrices in row-major order, with the handful of
//! factorizations the rest of the crate needs: LU with partial pivoting,
//! Cholesky for Hermitian positive-definite systems, and a cyclic Jacobi
//! eigensolver for Hermitian matrices. Sizes stay in the hundreds, so the
//! plain O(n^3) kernels below are entirely adequate.

use num_complex::Complex64;

use crate::{Error, Result};

/// Shorthand constructor.
#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Dense complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![Complex64::default(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = c(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Build from a row-major entry slice. Fails if the length is wrong or
    /// any entry is not finite.
    pub fn from_entries(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Structural(format!(
                "entry count {} does not match {rows}x{cols}",
                data.len()
            )));
        }
        let m = Self { rows, cols, data };
        m.check_finite()?;
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    pub fn check_finite(&self) -> Result<()> {
        if self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            Ok(())
        } else {
            Err(Error::NumericalConsistency("matrix has non-finite entries".into()))
        }
    }

    /// Copy of the `rows x cols` block with top-left corner `(r0, c0)`.
    pub fn submatrix(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        assert!(r0 + rows <= self.rows && c0 + cols <= self.cols, "submatrix out of range");
        Self::from_fn(rows, cols, |i, j| self[(r0 + i, c0 + j)])
    }

    /// Overwrite the block with top-left corner `(r0, c0)`.
    pub fn set_submatrix(&mut self, r0: usize, c0: usize, block: &Self) {
        assert!(r0 + block.rows <= self.rows && c0 + block.cols <= self.cols);
        for i in 0..block.rows {
            for j in 0..block.cols {
                self[(r0 + i, c0 + j)] = block[(i, j)];
            }
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z.conj()).collect() }
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z * s).collect() }
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }

    /// `self * rhs`, loop order chosen so the inner stride is contiguous.
    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "matmul dimension mismatch");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == Complex64::default() {
                    continue;
                }
                let rrow = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                let orow = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (o, b) in orow.iter_mut().zip(rrow) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                self.data[i * self.cols..(i + 1) * self.cols]
                    .iter()
                    .zip(v)
                    .map(|(a, x)| a * x)
                    .sum()
            })
            .collect()
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn trace(&self) -> Complex64 {
        assert_eq!(self.rows, self.cols);
        (0..self.rows).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Maximum absolute column sum.
    pub fn one_norm(&self) -> f64 {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self[(i, j)].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `max_ij |A_ij - (A^T)_ij|`.
    pub fn symmetry_error(&self) -> f64 {
        assert_eq!(self.rows, self.cols);
        let mut e = 0.0f64;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                e = e.max((self[(i, j)] - self[(j, i)]).norm());
            }
        }
        e
    }

    /// `max_ij |A_ij - (A^dagger)_ij|`.
    pub fn hermiticity_error(&self) -> f64 {
        assert_eq!(self.rows, self.cols);
        let mut e = 0.0f64;
        for i in 0..self.rows {
            e = e.max(self[(i, i)].im.abs());
            for j in (i + 1)..self.cols {
                e = e.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        e
    }

    /// Replace by the Hermitian part `(A + A^dagger)/2`.
    pub fn hermitianize(&mut self) {
        assert_eq!(self.rows, self.cols);
        for i in 0..self.rows {
            self[(i, i)] = c(self[(i, i)].re, 0.0);
            for j in (i + 1)..self.cols {
                let avg = 0.5 * (self[(i, j)] + self[(j, i)].conj());
                self[(i, j)] = avg;
                self[(j, i)] = avg.conj();
            }
        }
    }

    /// Replace by the symmetric part `(A + A^T)/2`.
    pub fn symmetrize(&mut self) {
        assert_eq!(self.rows, self.cols);
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                let avg = 0.5 * (self[(i, j)] + self[(j, i)]);
                self[(i, j)] = avg;
                self[(j, i)] = avg;
            }
        }
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

/// LU factorization with partial pivoting.
pub struct Lu {
    lu: ComplexMatrix,
    piv: Vec<usize>,
    swaps: usize,
}

impl Lu {
    pub fn factor(a: &ComplexMatrix) -> Result<Self> {
        assert_eq!(a.rows, a.cols, "LU requires a square matrix");
        let n = a.rows;
        let mut lu = a.clone();
        let mut piv: Vec<usize> = (0..n).collect();
        let mut swaps = 0;
        for k in 0..n {
            let (mut imax, mut vmax) = (k, lu[(k, k)].norm());
            for i in (k + 1)..n {
                let v = lu[(i, k)].norm();
                if v > vmax {
                    imax = i;
                    vmax = v;
                }
            }
            if vmax == 0.0 {
                return Err(Error::Singular(format!("zero pivot at column {k}")));
            }
            if imax != k {
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(imax, j)];
                    lu[(imax, j)] = tmp;
                }
                piv.swap(k, imax);
                swaps += 1;
            }
            let pivot = lu[(k, k)];
            for i in (k + 1)..n {
                let m = lu[(i, k)] / pivot;
                lu[(i, k)] = m;
                if m == Complex64::default() {
                    continue;
                }
                for j in (k + 1)..n {
                    let upper = lu[(k, j)];
                    lu[(i, j)] -= m * upper;
                }
            }
        }
        Ok(Self { lu, piv, swaps })
    }

    pub fn solve_vec(&self, b: &[Complex64]) -> Vec<Complex64> {
        let n = self.lu.rows;
        assert_eq!(b.len(), n);
        let mut x: Vec<Complex64> = self.piv.iter().map(|&p| b[p]).collect();
        for i in 1..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[(i, j)] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in (i + 1)..n {
                s -= self.lu[(i, j)] * x[j];
            }
            x[i] = s / self.lu[(i, i)];
        }
        x
    }

    /// Solve `A X = B` column by column.
    pub fn solve_mat(&self, b: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(b.rows, self.lu.rows);
        let mut out = ComplexMatrix::zeros(b.rows, b.cols);
        for j in 0..b.cols {
            let col = self.solve_vec(&b.column(j));
            for i in 0..b.rows {
                out[(i, j)] = col[i];
            }
        }
        out
    }

    pub fn inverse(&self) -> ComplexMatrix {
        self.solve_mat(&ComplexMatrix::identity(self.lu.rows))
    }

    pub fn det(&self) -> Complex64 {
        let mut d = if self.swaps % 2 == 0 { c(1.0, 0.0) } else { c(-1.0, 0.0) };
        for i in 0..self.lu.rows {
            d *= self.lu[(i, i)];
        }
        d
    }
}

/// Solve `A x = b` for a single right-hand side.
pub fn solve(a: &ComplexMatrix, b: &[Complex64]) -> Result<Vec<Complex64>> {
    Ok(Lu::factor(a)?.solve_vec(b))
}

/// 1-norm condition number, exact up to the quality of the inverse.
pub fn condition_1norm(a: &ComplexMatrix) -> Result<f64> {
    let inv = Lu::factor(a)?.inverse();
    Ok(a.one_norm() * inv.one_norm())
}

/// Cholesky factor `L` (lower triangular, `A = L L^dagger`) of a Hermitian
/// positive-definite matrix. Fails on the first nonpositive pivot, reporting
/// its value; callers use this both as a solver and as a PD test.
pub struct Cholesky {
    l: ComplexMatrix,
}

impl Cholesky {
    pub fn factor(a: &ComplexMatrix) -> std::result::Result<Self, f64> {
        assert_eq!(a.rows, a.cols);
        let n = a.rows;
        let mut l = ComplexMatrix::zeros(n, n);
        for j in 0..n {
            let mut d = a[(j, j)].re;
            for k in 0..j {
                d -= l[(j, k)].norm_sqr();
            }
            if d <= 0.0 || !d.is_finite() {
                return Err(d);
            }
            let dj = d.sqrt();
            l[(j, j)] = c(dj, 0.0);
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)].conj();
                }
                l[(i, j)] = s / dj;
            }
        }
        Ok(Self { l })
    }

    pub fn solve_vec(&self, b: &[Complex64]) -> Vec<Complex64> {
        let n = self.l.rows;
        assert_eq!(b.len(), n);
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.l[(i, k)] * y[k];
            }
            y[i] = s / self.l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= self.l[(k, i)].conj() * y[k];
            }
            y[i] = s / self.l[(i, i)];
        }
        y
    }

    /// `ln det A = 2 sum ln L_kk` (real since A is Hermitian PD).
    pub fn ln_det(&self) -> f64 {
        (0..self.l.rows).map(|i| self.l[(i, i)].re.ln()).sum::<f64>() * 2.0
    }
}

/// True when `A + shift*I` admits a Cholesky factorization, i.e. all
/// eigenvalues of the Hermitian matrix `A` exceed `-shift` (up to roundoff).
pub fn is_psd_within(a: &ComplexMatrix, shift: f64) -> bool {
    let n = a.rows();
    let mut shifted = a.clone();
    for i in 0..n {
        shifted[(i, i)] += c(shift, 0.0);
    }
    Cholesky::factor(&shifted).is_ok()
}

/// Eigenvalues (ascending) and eigenvectors (columns) of a Hermitian matrix,
/// by cyclic Jacobi rotations.
pub fn hermitian_eigen(a: &ComplexMatrix) -> (Vec<f64>, ComplexMatrix) {
    assert_eq!(a.rows, a.cols);
    let n = a.rows;
    let mut m = a.clone();
    m.hermitianize();
    let mut v = ComplexMatrix::identity(n);
    let scale = m.frobenius_norm().max(f64::MIN_POSITIVE);
    let tol = 1e-14 * scale;

    for _sweep in 0..50 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off += m[(p, q)].norm_sqr();
            }
        }
        if (2.0 * off).sqrt() <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                let mag = apq.norm();
                if mag <= tol / (n as f64) {
                    continue;
                }
                let phase = apq / mag;
                let tau = (m[(q, q)].re - m[(p, p)].re) / (2.0 * mag);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = t * cs;
                // Columns of the rotation: col p = (c, -s e^{-i th}),
                // col q = (s, c e^{-i th}) in rows (p, q).
                let e_m = phase.conj();
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = mkp * cs - mkq * (sn * e_m);
                    m[(k, q)] = mkp * sn + mkq * (cs * e_m);
                }
                let e_p = phase;
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = mpk * cs - mqk * (sn * e_p);
                    m[(q, k)] = mpk * sn + mqk * (cs * e_p);
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * cs - vkq * (sn * e_m);
                    v[(k, q)] = vkp * sn + vkq * (cs * e_m);
                }
            }
        }
    }

    let mut eig: Vec<(f64, usize)> = (0..n).map(|i| (m[(i, i)].re, i)).collect();
    eig.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let values: Vec<f64> = eig.iter().map(|&(l, _)| l).collect();
    let vecs = ComplexMatrix::from_fn(n, n, |i, j| v[(i, eig[j].1)]);
    (values, vecs)
}

/// Hermitian PSD square root. Eigenvalues in `[-tol, 0)` are clipped to
/// zero; anything below `-tol` is an invariant violation.
pub fn hermitian_sqrt_psd(a: &ComplexMatrix, tol: f64) -> Result<ComplexMatrix> {
    let (vals, vecs) = hermitian_eigen(a);
    if let Some(&min) = vals.first() {
        if min < -tol {
            return Err(Error::InvariantViolation(format!(
                "matrix square root needs PSD input; min eigenvalue {min:.3e} < -{tol:.3e}"
            )));
        }
    }
    let n = a.rows();
    let mut scaled = vecs.clone();
    for j in 0..n {
        let s = vals[j].max(0.0).sqrt();
        for i in 0..n {
            scaled[(i, j)] *= s;
        }
    }
    Ok(scaled.matmul(&vecs.adjoint()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(n: usize, seed: u64) -> ComplexMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ComplexMatrix::from_fn(n, n, |_, _| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
    }

    fn random_hermitian(n: usize, seed: u64) -> ComplexMatrix {
        let a = random_matrix(n, seed);
        let mut h = a.add(&a.adjoint());
        h.hermitianize();
        h
    }

    #[test]
    fn lu_solves_random_system() {
        let a = random_matrix(12, 1);
        let x_true: Vec<Complex64> = (0..12).map(|i| c(i as f64, -(i as f64) / 3.0)).collect();
        let b = a.mul_vec(&x_true);
        let x = solve(&a, &b).unwrap();
        for (xi, ti) in x.iter().zip(&x_true) {
            assert!((xi - ti).norm() < 1e-10);
        }
    }

    #[test]
    fn lu_inverse_and_det() {
        let a = random_matrix(8, 2);
        let lu = Lu::factor(&a).unwrap();
        let prod = a.matmul(&lu.inverse());
        assert!(prod.sub(&ComplexMatrix::identity(8)).max_abs() < 1e-11);
        // det of a triangular-made matrix
        let mut tri = ComplexMatrix::identity(3);
        tri[(0, 0)] = c(2.0, 0.0);
        tri[(1, 1)] = c(0.0, 3.0);
        tri[(0, 2)] = c(5.0, -1.0);
        let d = Lu::factor(&tri).unwrap().det();
        assert!((d - c(0.0, 6.0)).norm() < 1e-14);
    }

    #[test]
    fn singular_matrix_reports_error() {
        let mut a = ComplexMatrix::zeros(2, 2);
        a[(0, 0)] = c(1.0, 0.0);
        a[(0, 1)] = c(2.0, 0.0);
        a[(1, 0)] = c(2.0, 0.0);
        a[(1, 1)] = c(4.0, 0.0);
        assert!(Lu::factor(&a).is_err());
    }

    #[test]
    fn cholesky_matches_lu_solve() {
        let h = random_hermitian(10, 3);
        // Make it safely PD.
        let mut a = h.clone();
        for i in 0..10 {
            a[(i, i)] += c(10.0, 0.0);
        }
        let b: Vec<Complex64> = (0..10).map(|i| c(1.0 + i as f64, 0.5)).collect();
        let x1 = Cholesky::factor(&a).unwrap().solve_vec(&b);
        let x2 = solve(&a, &b).unwrap();
        for (p, q) in x1.iter().zip(&x2) {
            assert!((p - q).norm() < 1e-11);
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let mut a = ComplexMatrix::identity(3);
        a[(2, 2)] = c(-0.5, 0.0);
        assert!(Cholesky::factor(&a).is_err());
        assert!(!is_psd_within(&a, 0.1));
        assert!(is_psd_within(&a, 0.6));
    }

    #[test]
    fn jacobi_reconstructs_hermitian() {
        let h = random_hermitian(15, 7);
        let (vals, vecs) = hermitian_eigen(&h);
        // A V = V diag(vals)
        let av = h.matmul(&vecs);
        let mut vd = vecs.clone();
        for j in 0..15 {
            for i in 0..15 {
                vd[(i, j)] *= c(vals[j], 0.0);
            }
        }
        assert!(av.sub(&vd).max_abs() < 1e-10 * h.frobenius_norm());
        // Orthonormal eigenvectors
        let g = vecs.adjoint().matmul(&vecs);
        assert!(g.sub(&ComplexMatrix::identity(15)).max_abs() < 1e-11);
        // Sorted ascending
        for w in vals.windows(2) {
            assert!(w[0] <= w[1]);
        }
    }

    #[test]
    fn jacobi_known_eigenvalues() {
        // [[2, i],[-i, 2]] has eigenvalues 1 and 3.
        let mut a = ComplexMatrix::zeros(2, 2);
        a[(0, 0)] = c(2.0, 0.0);
        a[(0, 1)] = c(0.0, 1.0);
        a[(1, 0)] = c(0.0, -1.0);
        a[(1, 1)] = c(2.0, 0.0);
        let (vals, _) = hermitian_eigen(&a);
        assert_relative_eq!(vals[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(vals[1], 3.0, epsilon = 1e-12);
    }

    #[test]
    fn psd_sqrt_squares_back() {
        let g = random_matrix(9, 11);
        let a = g.matmul(&g.adjoint()); // PSD by construction
        let r = hermitian_sqrt_psd(&a, 1e-12).unwrap();
        assert!(r.matmul(&r).sub(&a).max_abs() < 1e-10 * (1.0 + a.max_abs()));
        assert!(r.hermiticity_error() < 1e-11);
    }

    #[test]
    fn psd_sqrt_rejects_negative() {
        let mut a = ComplexMatrix::identity(2);
        a[(1, 1)] = c(-1.0, 0.0);
        assert!(hermitian_sqrt_psd(&a, 1e-10).is_err());
    }

    #[test]
    fn condition_number_of_identity() {
        let id = ComplexMatrix::identity(6);
        assert_relative_eq!(condition_1norm(&id).unwrap(), 1.0, epsilon = 1e-14);
    }
}
