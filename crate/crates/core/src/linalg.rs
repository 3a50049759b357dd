//! Small dense complex matrices and the eigen-decompositions the Floquet
//! machinery needs: a cyclic Jacobi solver for Hermitian matrices and an
//! eigenphase extractor for (numerically) unitary matrices.
//!
//! Dimensions here are tiny (N+1 ≤ 65), so robustness and determinism win
//! over asymptotics.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Dense complex matrix, row-major storage.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    n_rows: usize,
    n_cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        CMatrix { n_rows, n_cols, data: vec![C64::new(0.0, 0.0); n_rows * n_cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = CMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(n_rows: usize, n_cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = CMatrix::zeros(n_rows, n_cols);
        for i in 0..n_rows {
            for j in 0..n_cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn is_square(&self) -> bool {
        self.n_rows == self.n_cols
    }

    pub fn set_col(&mut self, j: usize, col: &[C64]) {
        assert_eq!(col.len(), self.n_rows);
        for i in 0..self.n_rows {
            self[(i, j)] = col[i];
        }
    }

    pub fn col(&self, j: usize) -> Vec<C64> {
        (0..self.n_rows).map(|i| self[(i, j)]).collect()
    }

    pub fn adjoint(&self) -> CMatrix {
        CMatrix::from_fn(self.n_cols, self.n_rows, |i, j| self[(j, i)].conj())
    }

    pub fn mul(&self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.n_cols, rhs.n_rows);
        let mut out = CMatrix::zeros(self.n_rows, rhs.n_cols);
        for i in 0..self.n_rows {
            for k in 0..self.n_cols {
                let a = self[(i, k)];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..rhs.n_cols {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.n_cols, v.len());
        (0..self.n_rows)
            .map(|i| (0..self.n_cols).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    /// max_{ij} |a_ij - b_ij|
    pub fn max_abs_diff(&self, rhs: &CMatrix) -> f64 {
        assert_eq!((self.n_rows, self.n_cols), (rhs.n_rows, rhs.n_cols));
        self.data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// ‖A†A − I‖_max, the departure from unitarity.
    pub fn unitarity_defect(&self) -> f64 {
        assert!(self.is_square());
        self.adjoint().mul(self).max_abs_diff(&CMatrix::identity(self.n_rows))
    }

    fn off_diag_norm(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n_rows {
            for j in 0..self.n_cols {
                if i != j {
                    s += self[(i, j)].norm_sqr();
                }
            }
        }
        s.sqrt()
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.n_cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.n_cols + j]
    }
}

/// Eigen-decomposition of a Hermitian matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in ascending order and the matching orthonormal
/// eigenvectors as columns. Only the Hermitian part of the input is read
/// (entries below the diagonal are taken as conjugates of those above).
pub fn hermitian_eigen(a: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    if !a.is_square() {
        return Err(Error::contract("hermitian_eigen: matrix must be square"));
    }
    let n = a.n_rows();
    let mut m = a.clone();
    // symmetrize defensively so tiny Hermiticity violations cannot bias sweeps
    for i in 0..n {
        m[(i, i)] = C64::new(m[(i, i)].re, 0.0);
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)].conj());
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
    }
    let mut v = CMatrix::identity(n);
    let scale = m.frobenius_norm().max(f64::MIN_POSITIVE);
    let tol = 1e-15 * scale;

    for _sweep in 0..60 {
        if m.off_diag_norm() <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let g = m[(p, q)];
                let g_abs = g.norm();
                if g_abs <= 1e-300 {
                    continue;
                }
                let phase = g / g_abs;
                let alpha = m[(p, p)].re;
                let beta = m[(q, q)].re;
                // rotation zeroing m[(p,q)]: tan(2θ) = 2|g|/(β−α)
                let tau = (beta - alpha) / (2.0 * g_abs);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let s_ph = s * phase; // J_pq = s·e^{iφ}, J_qp = −s·e^{−iφ}

                m[(p, p)] = C64::new(alpha - t * g_abs, 0.0);
                m[(q, q)] = C64::new(beta + t * g_abs, 0.0);
                m[(p, q)] = C64::new(0.0, 0.0);
                m[(q, p)] = C64::new(0.0, 0.0);
                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = m[(k, p)];
                    let akq = m[(k, q)];
                    let new_kp = c * akp - s_ph.conj() * akq;
                    let new_kq = s_ph * akp + c * akq;
                    m[(k, p)] = new_kp;
                    m[(p, k)] = new_kp.conj();
                    m[(k, q)] = new_kq;
                    m[(q, k)] = new_kq.conj();
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s_ph.conj() * vkq;
                    v[(k, q)] = s_ph * vkp + c * vkq;
                }
            }
        }
    }
    if m.off_diag_norm() > 1e-12 * scale {
        return Err(Error::numerical("hermitian_eigen: Jacobi sweeps did not converge"));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].re.partial_cmp(&m[(j, j)].re).unwrap());
    let evals: Vec<f64> = order.iter().map(|&i| m[(i, i)].re).collect();
    let mut vecs = CMatrix::zeros(n, n);
    for (new_j, &old_j) in order.iter().enumerate() {
        for i in 0..n {
            vecs[(i, new_j)] = v[(i, old_j)];
        }
    }
    Ok((evals, vecs))
}

/// One eigenpair of a unitary matrix: eigenvalue phase in (−π, π] and the
/// residual ‖Uv − λv‖₂ as a quality diagnostic.
#[derive(Clone, Debug)]
pub struct UnitaryEigenPair {
    pub phase: f64,
    pub vector: Vec<C64>,
    pub residual: f64,
}

/// Eigenphases of a (numerically) unitary matrix.
///
/// A unitary U is normal, so its Hermitian and anti-Hermitian parts
/// C = (U+U†)/2 and D = (U−U†)/(2i) commute and share eigenvectors.
/// C is diagonalized first; clusters of its spectrum (which occur whenever
/// two eigenphases satisfy θ_i ≈ ±θ_j) are then split by diagonalizing the
/// projection of D inside each cluster. The eigenvalue itself is read off
/// the Rayleigh quotient v†Uv.
pub fn unitary_eigenphases(u: &CMatrix) -> Result<Vec<UnitaryEigenPair>> {
    if !u.is_square() {
        return Err(Error::contract("unitary_eigenphases: matrix must be square"));
    }
    let n = u.n_rows();
    let udag = u.adjoint();
    let half = C64::new(0.5, 0.0);
    let half_over_i = C64::new(0.0, -0.5); // 1/(2i)
    let mut c_mat = CMatrix::zeros(n, n);
    let mut d_mat = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            c_mat[(i, j)] = half * (u[(i, j)] + udag[(i, j)]);
            d_mat[(i, j)] = half_over_i * (u[(i, j)] - udag[(i, j)]);
        }
    }
    let (c_evals, mut v) = hermitian_eigen(&c_mat)?;

    // split clusters of the cos-spectrum with the sin-part
    let cluster_tol = 1e-8_f64.max(1e-12 * c_mat.frobenius_norm());
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (c_evals[end] - c_evals[end - 1]).abs() < cluster_tol {
            end += 1;
        }
        let k = end - start;
        if k > 1 {
            let cols: Vec<Vec<C64>> = (start..end).map(|j| v.col(j)).collect();
            let mut d_proj = CMatrix::zeros(k, k);
            for (a, ca) in cols.iter().enumerate() {
                let d_cb: Vec<Vec<C64>> = cols.iter().map(|cb| d_mat.mul_vec(cb)).collect();
                for (b, dcb) in d_cb.iter().enumerate() {
                    d_proj[(a, b)] = ca.iter().zip(dcb).map(|(x, y)| x.conj() * y).sum();
                }
            }
            let (_, w) = hermitian_eigen(&d_proj)?;
            for (jj, j) in (start..end).enumerate() {
                for i in 0..n {
                    let mut acc = C64::new(0.0, 0.0);
                    for (aa, ca) in cols.iter().enumerate() {
                        acc += ca[i] * w[(aa, jj)];
                    }
                    v[(i, j)] = acc;
                }
            }
        }
        start = end;
    }

    let mut pairs = Vec::with_capacity(n);
    for j in 0..n {
        let vec = v.col(j);
        let uv = u.mul_vec(&vec);
        let lambda: C64 = vec.iter().zip(&uv).map(|(a, b)| a.conj() * b).sum();
        let residual = uv
            .iter()
            .zip(&vec)
            .map(|(a, b)| (a - lambda * b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        pairs.push(UnitaryEigenPair { phase: lambda.arg(), vector: vec, residual });
    }
    Ok(pairs)
}
