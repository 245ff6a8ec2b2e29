//! Complex dense micro-solvers for per-element systems and a sparse direct
//! solver for the condensed trace system.
//!
//! Element interiors are at most 9 unknowns (triangle: 3 for `u_h`, 6 for
//! `q_h`) and local postprocessing at most 6, so the dense path is a plain
//! partially pivoted LU. The global trace system is handed to a sparse LU
//! with fill-reducing ordering; the 1D trace system is tridiagonal and gets
//! a dedicated banded elimination.

use crate::error::{Error, Result};
use num_complex::Complex64 as C64;

/// Relative pivot threshold below which a dense system is declared singular.
const DENSE_PIVOT_TOL: f64 = 1e-14;

/// Small square complex matrix in row-major storage.
#[derive(Debug, Clone)]
pub struct DenseComplexMatrix {
    n: usize,
    data: Vec<C64>,
}

impl DenseComplexMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![C64::new(0.0, 0.0); n * n],
        }
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Self {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), n, "row length mismatch");
            m.data[i * n..(i + 1) * n].copy_from_slice(r);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.data[i * self.n + j] = v;
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: C64) {
        self.data[i * self.n + j] += v;
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        let n = self.n;
        let mut y = vec![C64::new(0.0, 0.0); n];
        for i in 0..n {
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..n {
                acc += self.data[i * n + j] * x[j];
            }
            y[i] = acc;
        }
        y
    }

    /// Partially pivoted LU factorization; also usable for determinants.
    pub fn lu(&self) -> Result<DenseLu> {
        self.lu_with_tol(DENSE_PIVOT_TOL)
    }

    /// LU with a caller-supplied relative pivot threshold (element interior
    /// blocks use a looser one so near-resonances fail loudly).
    pub fn lu_with_tol(&self, tol: f64) -> Result<DenseLu> {
        let n = self.n;
        let mut a = self.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        for col in 0..n {
            let mut piv = col;
            let mut best = a[col * n + col].norm();
            for r in (col + 1)..n {
                let v = a[r * n + col].norm();
                if v > best {
                    best = v;
                    piv = r;
                }
            }
            if best < tol * scale {
                return Err(Error::SingularMatrix { pivot: best, col });
            }
            if piv != col {
                for j in 0..n {
                    a.swap(col * n + j, piv * n + j);
                }
                perm.swap(col, piv);
                sign = -sign;
            }
            let d = a[col * n + col];
            for r in (col + 1)..n {
                let f = a[r * n + col] / d;
                a[r * n + col] = f;
                for j in (col + 1)..n {
                    let v = a[col * n + j];
                    a[r * n + j] -= f * v;
                }
            }
        }
        Ok(DenseLu { n, a, perm, sign })
    }

    pub fn solve(&self, b: &[C64]) -> Result<Vec<C64>> {
        Ok(self.lu()?.solve(b))
    }

    /// Solve for several right-hand sides given as columns of `b` (row-major,
    /// `n x m`). Returns the solution in the same layout.
    pub fn solve_many(&self, b: &[C64], m: usize) -> Result<Vec<C64>> {
        let lu = self.lu()?;
        let n = self.n;
        let mut out = vec![C64::new(0.0, 0.0); n * m];
        let mut col = vec![C64::new(0.0, 0.0); n];
        for j in 0..m {
            for i in 0..n {
                col[i] = b[i * m + j];
            }
            let x = lu.solve(&col);
            for i in 0..n {
                out[i * m + j] = x[i];
            }
        }
        Ok(out)
    }

    pub fn det(&self) -> C64 {
        match self.lu() {
            Ok(lu) => lu.det(),
            Err(_) => C64::new(0.0, 0.0),
        }
    }
}

/// LU factors of a [`DenseComplexMatrix`].
pub struct DenseLu {
    n: usize,
    a: Vec<C64>,
    perm: Vec<usize>,
    sign: f64,
}

impl DenseLu {
    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        let n = self.n;
        let mut x: Vec<C64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 1..n {
            let mut acc = x[i];
            for j in 0..i {
                acc -= self.a[i * n + j] * x[j];
            }
            x[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in (i + 1)..n {
                acc -= self.a[i * n + j] * x[j];
            }
            x[i] = acc / self.a[i * n + i];
        }
        x
    }

    pub fn det(&self) -> C64 {
        let mut d = C64::new(self.sign, 0.0);
        for i in 0..self.n {
            d *= self.a[i * self.n + i];
        }
        d
    }
}

/// Convenience wrapper matching the per-element use sites.
pub fn dense_solve(a: &DenseComplexMatrix, b: &[C64]) -> Result<Vec<C64>> {
    a.solve(b)
}

/// Tridiagonal solve with partial pivoting (row interchanges between
/// adjacent rows, producing a second superdiagonal). The 1D trace system is
/// complex symmetric indefinite, so pivoting is not optional.
pub fn solve_tridiagonal(sub: &[C64], diag: &[C64], sup: &[C64], rhs: &[C64]) -> Result<Vec<C64>> {
    let n = diag.len();
    assert_eq!(sub.len(), n.saturating_sub(1));
    assert_eq!(sup.len(), n.saturating_sub(1));
    assert_eq!(rhs.len(), n);
    if n == 0 {
        return Ok(Vec::new());
    }
    let zero = C64::new(0.0, 0.0);
    let mut d: Vec<C64> = diag.to_vec();
    let mut u1: Vec<C64> = sup.to_vec();
    u1.push(zero);
    let mut u2 = vec![zero; n];
    let mut b: Vec<C64> = rhs.to_vec();
    let mut low: Vec<C64> = sub.to_vec();
    low.push(zero);
    let scale = d
        .iter()
        .chain(u1.iter())
        .chain(low.iter())
        .map(|z| z.norm())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);

    for i in 0..n - 1 {
        if low[i].norm() > d[i].norm() {
            // interchange rows i and i+1
            std::mem::swap(&mut d[i], &mut low[i]); // pivot column entries
            std::mem::swap(&mut u1[i], &mut d[i + 1]);
            if i + 1 < n - 1 {
                u2[i] = u1[i + 1];
                u1[i + 1] = zero;
            }
            b.swap(i, i + 1);
        }
        let piv = d[i];
        if piv.norm() < DENSE_PIVOT_TOL * scale {
            return Err(Error::SparseSolver(format!(
                "tridiagonal pivot {:.3e} at row {} below threshold",
                piv.norm(),
                i
            )));
        }
        let f = low[i] / piv;
        d[i + 1] -= f * u1[i];
        if i + 1 < n - 1 {
            u1[i + 1] -= f * u2[i];
        }
        let bi = b[i];
        b[i + 1] -= f * bi;
        low[i] = f;
    }
    if d[n - 1].norm() < DENSE_PIVOT_TOL * scale {
        return Err(Error::SparseSolver(format!(
            "tridiagonal pivot {:.3e} at row {} below threshold",
            d[n - 1].norm(),
            n - 1
        )));
    }
    let mut x = vec![zero; n];
    x[n - 1] = b[n - 1] / d[n - 1];
    if n >= 2 {
        x[n - 2] = (b[n - 2] - u1[n - 2] * x[n - 1]) / d[n - 2];
    }
    for i in (0..n.saturating_sub(2)).rev() {
        x[i] = (b[i] - u1[i] * x[i + 1] - u2[i] * x[i + 2]) / d[i];
    }
    Ok(x)
}

/// Sparse complex matrix assembled from triplets, finalized to CSR.
///
/// Duplicate `(row, col)` entries are summed during finalization, matching
/// finite element scatter-add assembly.
#[derive(Debug, Clone)]
pub struct SparseComplexMatrix {
    n: usize,
    // CSR after finalize
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<C64>,
}

/// Triplet accumulator for [`SparseComplexMatrix`].
#[derive(Debug, Clone)]
pub struct SparseBuilder {
    n: usize,
    triplets: Vec<(usize, usize, C64)>,
}

impl SparseBuilder {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            triplets: Vec::new(),
        }
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: C64) {
        debug_assert!(i < self.n && j < self.n);
        if v.norm_sqr() != 0.0 {
            self.triplets.push((i, j, v));
        }
    }

    pub fn finalize(self) -> SparseComplexMatrix {
        let n = self.n;
        let mut trip = self.triplets;
        trip.sort_unstable_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx: Vec<usize> = Vec::with_capacity(trip.len());
        let mut values: Vec<C64> = Vec::with_capacity(trip.len());
        let mut last: Option<(usize, usize)> = None;
        for &(i, j, v) in &trip {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] = col_idx.len();
                last = Some((i, j));
            }
        }
        for i in 0..n {
            if row_ptr[i + 1] < row_ptr[i] {
                row_ptr[i + 1] = row_ptr[i];
            }
        }
        SparseComplexMatrix {
            n,
            row_ptr,
            col_idx,
            values,
        }
    }
}

impl SparseComplexMatrix {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); self.n];
        for i in 0..self.n {
            let mut acc = C64::new(0.0, 0.0);
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[p] * x[self.col_idx[p]];
            }
            y[i] = acc;
        }
        y
    }

    /// Entries of one row as `(col, value)` pairs.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |p| (self.col_idx[p], self.values[p]))
    }

    /// Direct sparse LU solve (fill-reducing ordering chosen by the backend).
    pub fn solve(&self, b: &[C64]) -> Result<Vec<C64>> {
        use faer::prelude::*;
        use faer::sparse::{SparseColMat, Triplet};
        assert_eq!(b.len(), self.n);
        let mut trip: Vec<Triplet<usize, usize, c64>> = Vec::with_capacity(self.nnz());
        for i in 0..self.n {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                trip.push(Triplet::new(
                    i,
                    self.col_idx[p],
                    c64::new(self.values[p].re, self.values[p].im),
                ));
            }
        }
        let a = SparseColMat::try_new_from_triplets(self.n, self.n, &trip)
            .map_err(|e| Error::SparseSolver(format!("matrix creation: {e:?}")))?;
        let lu = a
            .sp_lu()
            .map_err(|e| Error::SparseSolver(format!("LU factorization: {e:?}")))?;
        let mut rhs = Mat::<c64>::zeros(self.n, 1);
        for i in 0..self.n {
            rhs[(i, 0)] = c64::new(b[i].re, b[i].im);
        }
        let x = lu.solve(&rhs);
        Ok((0..self.n)
            .map(|i| C64::new(x[(i, 0)].re, x[(i, 0)].im))
            .collect())
    }

    /// Relative residual `||Ax - b|| / ||b||`.
    pub fn relative_residual(&self, x: &[C64], b: &[C64]) -> f64 {
        let ax = self.matvec(x);
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..self.n {
            num += (ax[i] - b[i]).norm_sqr();
            den += b[i].norm_sqr();
        }
        if den == 0.0 {
            num.sqrt()
        } else {
            (num / den).sqrt()
        }
    }
}

pub fn sparse_solve(a: &SparseComplexMatrix, b: &[C64]) -> Result<Vec<C64>> {
    a.solve(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn dense_identity() {
        let mut a = DenseComplexMatrix::zeros(3);
        for i in 0..3 {
            a.set(i, i, c(1.0, 0.0));
        }
        let b = vec![c(1.0, 2.0), c(-3.0, 0.5), c(0.0, -1.0)];
        let x = a.solve(&b).unwrap();
        for i in 0..3 {
            assert!((x[i] - b[i]).norm() < 1e-15);
        }
    }

    #[test]
    fn dense_2x2_diagonal_complex() {
        let a = DenseComplexMatrix::from_rows(&[
            vec![c(0.0, 1.0), c(0.0, 0.0)],
            vec![c(0.0, 0.0), c(2.0, 0.0)],
        ]);
        let x = a.solve(&[c(0.0, 1.0), c(2.0, 0.0)]).unwrap();
        assert!((x[0] - c(1.0, 0.0)).norm() < 1e-15);
        assert!((x[1] - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn dense_random_8x8_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..20 {
            let n = 8;
            let mut a = DenseComplexMatrix::zeros(n);
            for i in 0..n {
                for j in 0..n {
                    a.set(i, j, c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
                }
                // diagonal boost keeps the condition number benign
                a.add(i, i, c(4.0, 0.0));
            }
            let b: Vec<C64> = (0..n)
                .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let x = a.solve(&b).unwrap();
            let ax = a.matvec(&x);
            let num: f64 = ax
                .iter()
                .zip(&b)
                .map(|(p, q)| (p - q).norm_sqr())
                .sum::<f64>()
                .sqrt();
            let den: f64 = b.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            assert!(num / den < 1e-12, "residual {}", num / den);
        }
    }

    #[test]
    fn dense_singular_reports() {
        let a = DenseComplexMatrix::from_rows(&[
            vec![c(1.0, 0.0), c(2.0, 0.0)],
            vec![c(2.0, 0.0), c(4.0, 0.0)],
        ]);
        match a.solve(&[c(1.0, 0.0), c(2.0, 0.0)]) {
            Err(Error::SingularMatrix { .. }) => {}
            other => panic!("expected singular-matrix error, got {other:?}"),
        }
    }

    #[test]
    fn dense_det() {
        let a = DenseComplexMatrix::from_rows(&[
            vec![c(1.0, 0.0), c(2.0, 0.0)],
            vec![c(3.0, 0.0), c(4.0, 0.0)],
        ]);
        assert!((a.det() - c(-2.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn tridiagonal_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 50;
        let sub: Vec<C64> = (0..n - 1)
            .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let sup: Vec<C64> = (0..n - 1)
            .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let diag: Vec<C64> = (0..n)
            .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(2.0..3.0)))
            .collect();
        let b: Vec<C64> = (0..n)
            .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let x = solve_tridiagonal(&sub, &diag, &sup, &b).unwrap();
        let mut a = DenseComplexMatrix::zeros(n);
        for i in 0..n {
            a.set(i, i, diag[i]);
            if i + 1 < n {
                a.set(i + 1, i, sub[i]);
                a.set(i, i + 1, sup[i]);
            }
        }
        let xd = a.solve(&b).unwrap();
        for i in 0..n {
            assert!((x[i] - xd[i]).norm() < 1e-12, "mismatch at {i}");
        }
    }

    #[test]
    fn tridiagonal_needs_pivoting() {
        // zero on the first diagonal entry forces an interchange
        let sub = vec![c(1.0, 0.0), c(1.0, 0.0)];
        let sup = vec![c(1.0, 0.0), c(1.0, 0.0)];
        let diag = vec![c(0.0, 0.0), c(1.0, 0.0), c(2.0, 0.0)];
        let b = vec![c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0)];
        let x = solve_tridiagonal(&sub, &diag, &sup, &b).unwrap();
        // residual check
        let r0 = diag[0] * x[0] + sup[0] * x[1] - b[0];
        let r1 = sub[0] * x[0] + diag[1] * x[1] + sup[1] * x[2] - b[1];
        let r2 = sub[1] * x[1] + diag[2] * x[2] - b[2];
        assert!(r0.norm() + r1.norm() + r2.norm() < 1e-13);
    }

    #[test]
    fn sparse_diagonal() {
        let mut sb = SparseBuilder::new(4);
        for i in 0..4 {
            sb.add(i, i, c(i as f64 + 1.0, 1.0));
        }
        let a = sb.finalize();
        let b = vec![c(1.0, 0.0); 4];
        let x = a.solve(&b).unwrap();
        for i in 0..4 {
            let expect = c(1.0, 0.0) / c(i as f64 + 1.0, 1.0);
            assert!((x[i] - expect).norm() < 1e-14);
        }
    }

    #[test]
    fn sparse_duplicate_triplets_sum() {
        let mut sb = SparseBuilder::new(2);
        sb.add(0, 0, c(1.0, 0.0));
        sb.add(0, 0, c(2.0, 0.0));
        sb.add(1, 1, c(1.0, 0.0));
        sb.add(0, 1, c(0.5, 0.0));
        let a = sb.finalize();
        assert_eq!(a.nnz(), 3);
        let y = a.matvec(&[c(1.0, 0.0), c(1.0, 0.0)]);
        assert!((y[0] - c(3.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn sparse_hermitian_indefinite_residual() {
        // A = A^H with mixed-sign real spectrum
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 60;
        let mut sb = SparseBuilder::new(n);
        for i in 0..n {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            sb.add(i, i, c(sign * rng.gen_range(0.5..2.0), 0.0));
            if i + 1 < n {
                let v = c(rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3));
                sb.add(i, i + 1, v);
                sb.add(i + 1, i, v.conj());
            }
        }
        let a = sb.finalize();
        let b: Vec<C64> = (0..n)
            .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let x = a.solve(&b).unwrap();
        assert!(a.relative_residual(&x, &b) < 1e-10);
    }

    #[test]
    fn sparse_solve_then_matvec_roundtrip_randomized() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..5 {
            let n = 20 + 7 * trial;
            let mut sb = SparseBuilder::new(n);
            for i in 0..n {
                sb.add(i, i, c(rng.gen_range(1.0..3.0), rng.gen_range(-1.0..1.0)));
                let j = rng.gen_range(0..n);
                sb.add(i, j, c(rng.gen_range(-0.4..0.4), rng.gen_range(-0.4..0.4)));
            }
            let a = sb.finalize();
            let b: Vec<C64> = (0..n)
                .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let x = a.solve(&b).unwrap();
            assert!(a.relative_residual(&x, &b) < 1e-10);
        }
    }
}
