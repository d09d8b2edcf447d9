//! Sparse matrices for assembly and a direct linear solver.
//!
//! Assembly accumulates into coordinate (triplet) form; [`Csr`] is the
//! compressed, duplicate-summed product used for matrix-vector products,
//! transposes, and block composition. Linear systems are solved by sparse LU
//! with partial pivoting ([`solve_linear`]), always verified by a relative
//! residual check; [`Factorized`] caches a factorization for repeated solves
//! with the same matrix.

use faer::prelude::SpSolver;
use thiserror::Error;

/// Coordinate-format accumulator. Duplicate entries sum on compression.
#[derive(Debug, Clone)]
pub struct Coo {
    pub nrows: usize,
    pub ncols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl Coo {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Coo {
            nrows,
            ncols,
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.nrows && col < self.ncols);
        if value != 0.0 {
            self.entries.push((row, col, value));
        }
    }

    /// Accumulate another matrix at a block offset, scaled.
    pub fn push_block(&mut self, row0: usize, col0: usize, scale: f64, block: &Csr) {
        if scale == 0.0 {
            return;
        }
        for (r, c, v) in block.iter() {
            self.push(row0 + r, col0 + c, scale * v);
        }
    }

    pub fn to_csr(&self) -> Csr {
        let mut entries = self.entries.clone();
        entries.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut indptr = vec![0usize; self.nrows + 1];
        let mut indices = Vec::new();
        let mut values: Vec<f64> = Vec::new();
        let mut last = None;
        for &(r, c, v) in &entries {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                values.push(v);
                last = Some((r, c));
            }
            indptr[r + 1] = indices.len();
        }
        // rows with no entries inherit the running offset
        let mut acc = 0;
        for p in indptr.iter_mut() {
            acc = (*p).max(acc);
            *p = acc;
        }
        Csr {
            nrows: self.nrows,
            ncols: self.ncols,
            indptr,
            indices,
            values,
        }
    }
}

/// Compressed sparse row matrix with sorted, unique column indices per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Csr {
    pub nrows: usize,
    pub ncols: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl Csr {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Csr {
            nrows,
            ncols,
            indptr: vec![0; nrows + 1],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Csr {
            nrows: n,
            ncols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |r| {
            self.indices[self.indptr[r]..self.indptr[r + 1]]
                .iter()
                .zip(&self.values[self.indptr[r]..self.indptr[r + 1]])
                .map(move |(&c, &v)| (r, c, v))
        })
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols, "matvec dimension mismatch");
        let mut y = vec![0.0; self.nrows];
        self.matvec_add(x, 1.0, &mut y);
        y
    }

    /// `y += scale * A x`.
    pub fn matvec_add(&self, x: &[f64], scale: f64, y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols, "matvec dimension mismatch");
        assert_eq!(y.len(), self.nrows, "matvec dimension mismatch");
        for r in 0..self.nrows {
            let mut acc = 0.0;
            for p in self.indptr[r]..self.indptr[r + 1] {
                acc += self.values[p] * x[self.indices[p]];
            }
            y[r] += scale * acc;
        }
    }

    /// `y += scale * A^T x` without forming the transpose.
    pub fn matvec_transpose_add(&self, x: &[f64], scale: f64, y: &mut [f64]) {
        assert_eq!(x.len(), self.nrows, "matvec dimension mismatch");
        assert_eq!(y.len(), self.ncols, "matvec dimension mismatch");
        for r in 0..self.nrows {
            let xr = scale * x[r];
            if xr != 0.0 {
                for p in self.indptr[r]..self.indptr[r + 1] {
                    y[self.indices[p]] += self.values[p] * xr;
                }
            }
        }
    }

    pub fn transpose(&self) -> Csr {
        let mut coo = Coo::new(self.ncols, self.nrows);
        for (r, c, v) in self.iter() {
            coo.push(c, r, v);
        }
        coo.to_csr()
    }

    /// Entry-wise `a*self + b*other`.
    pub fn add_scaled(&self, a: f64, other: &Csr, b: f64) -> Csr {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let mut coo = Coo::new(self.nrows, self.ncols);
        for (r, c, v) in self.iter() {
            coo.push(r, c, a * v);
        }
        for (r, c, v) in other.iter() {
            coo.push(r, c, b * v);
        }
        coo.to_csr()
    }

    pub fn scale(&self, a: f64) -> Csr {
        let mut out = self.clone();
        for v in &mut out.values {
            *v *= a;
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Row-major dense copy; intended for small oracle comparisons.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut dense = vec![0.0; self.nrows * self.ncols];
        for (r, c, v) in self.iter() {
            dense[r * self.ncols + c] = v;
        }
        dense
    }

    /// Largest absolute asymmetry `|A - A^T|_max`; 0 for symmetric matrices.
    pub fn asymmetry(&self) -> f64 {
        let t = self.transpose();
        let mut worst: f64 = 0.0;
        // both iterations are in sorted (row, col) order, so merge
        let mut it_a = self.iter();
        let mut it_b = t.iter();
        let (mut a, mut b) = (it_a.next(), it_b.next());
        loop {
            match (a, b) {
                (None, None) => break,
                (Some((r, c, v)), None) => {
                    let _ = (r, c);
                    worst = worst.max(v.abs());
                    a = it_a.next();
                }
                (None, Some((_, _, v))) => {
                    worst = worst.max(v.abs());
                    b = it_b.next();
                }
                (Some((ra, ca, va)), Some((rb, cb, vb))) => {
                    if (ra, ca) == (rb, cb) {
                        worst = worst.max((va - vb).abs());
                        a = it_a.next();
                        b = it_b.next();
                    } else if (ra, ca) < (rb, cb) {
                        worst = worst.max(va.abs());
                        a = it_a.next();
                    } else {
                        worst = worst.max(vb.abs());
                        b = it_b.next();
                    }
                }
            }
        }
        worst
    }
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("dimension mismatch: matrix is {nrows} x {ncols}, rhs has {rhs} entries")]
    DimensionMismatch { nrows: usize, ncols: usize, rhs: usize },
    #[error("matrix must be square (got {nrows} x {ncols})")]
    NotSquare { nrows: usize, ncols: usize },
    #[error("factorization breakdown: no pivot at elimination step {step} of {n}")]
    Singular { step: usize, n: usize },
    #[error("factorization failed: {0}")]
    Factorization(String),
    #[error("solution rejected: relative residual {residual:.3e} exceeds 1e-10")]
    ResidualTooLarge { residual: f64 },
}

fn to_faer(a: &Csr) -> Result<faer::sparse::SparseColMat<usize, f64>, SolveError> {
    let triplets: Vec<(usize, usize, f64)> = a.iter().collect();
    faer::sparse::SparseColMat::try_new_from_triplets(a.nrows, a.ncols, &triplets)
        .map_err(|e| SolveError::Factorization(format!("{e:?}")))
}

/// A cached sparse LU factorization with its originating matrix, for
/// repeated right-hand sides.
pub struct Factorized {
    a: Csr,
    lu: faer::sparse::linalg::solvers::Lu<usize, f64>,
}

impl Factorized {
    pub fn new(a: Csr) -> Result<Self, SolveError> {
        if a.nrows != a.ncols {
            return Err(SolveError::NotSquare {
                nrows: a.nrows,
                ncols: a.ncols,
            });
        }
        let lu = to_faer(&a)?.sp_lu().map_err(|e| match e {
            faer::sparse::linalg::LuError::SymbolicSingular(step) => SolveError::Singular {
                step,
                n: a.nrows,
            },
            other => SolveError::Factorization(format!("{other:?}")),
        })?;
        Ok(Factorized { a, lu })
    }

    pub fn matrix(&self) -> &Csr {
        &self.a
    }

    /// Solve `A x = b` and verify the relative residual is at most 1e-10
    /// (measured against `max(|b|, |A||x|)` to stay meaningful for tiny b).
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, SolveError> {
        if b.len() != self.a.nrows {
            return Err(SolveError::DimensionMismatch {
                nrows: self.a.nrows,
                ncols: self.a.ncols,
                rhs: b.len(),
            });
        }
        let rhs = faer::Mat::from_fn(b.len(), 1, |i, _| b[i]);
        let x_mat = self.lu.solve(&rhs);
        let x: Vec<f64> = (0..b.len()).map(|i| x_mat.read(i, 0)).collect();
        let ax = self.a.matvec(&x);
        let mut res = 0.0f64;
        let mut bnorm = 0.0f64;
        for i in 0..b.len() {
            res += (ax[i] - b[i]) * (ax[i] - b[i]);
            bnorm += b[i] * b[i];
        }
        let scale = bnorm.sqrt().max(self.a.max_abs() * x.iter().fold(0.0f64, |m, v| m.max(v.abs())));
        let residual = if scale > 0.0 { res.sqrt() / scale } else { res.sqrt() };
        if residual > 1e-10 {
            return Err(SolveError::ResidualTooLarge { residual });
        }
        Ok(x)
    }
}

/// Solve a sparse linear system by LU with partial pivoting; the solution is
/// accepted only if the relative residual is at most 1e-10.
pub fn solve_linear(a: &Csr, b: &[f64]) -> Result<Vec<f64>, SolveError> {
    Factorized::new(a.clone())?.solve(b)
}

/// Dense Gaussian elimination with partial pivoting, used as an independent
/// oracle against [`solve_linear`] on small systems. `a` is row-major n x n.
pub fn dense_solve_oracle(a: &[f64], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    assert_eq!(a.len(), n * n);
    let mut m = a.to_vec();
    let mut x = b.to_vec();
    for k in 0..n {
        let piv = (k..n).max_by(|&i, &j| {
            m[i * n + k]
                .abs()
                .partial_cmp(&m[j * n + k].abs())
                .unwrap()
        })?;
        if m[piv * n + k] == 0.0 {
            return None;
        }
        if piv != k {
            for c in 0..n {
                m.swap(k * n + c, piv * n + c);
            }
            x.swap(k, piv);
        }
        for i in k + 1..n {
            let f = m[i * n + k] / m[k * n + k];
            if f != 0.0 {
                for c in k..n {
                    m[i * n + c] -= f * m[k * n + c];
                }
                x[i] -= f * x[k];
            }
        }
    }
    for i in (0..n).rev() {
        let mut acc = x[i];
        for c in i + 1..n {
            acc -= m[i * n + c] * x[c];
        }
        x[i] = acc / m[i * n + i];
    }
    Some(x)
}

/// Smallest eigenvalue of a symmetric matrix, via dense self-adjoint
/// eigendecomposition; intended for small coercivity checks.
pub fn smallest_eigenvalue(a: &Csr) -> f64 {
    assert_eq!(a.nrows, a.ncols);
    let dense = faer::Mat::from_fn(a.nrows, a.ncols, |i, j| {
        let row = &a.indices[a.indptr[i]..a.indptr[i + 1]];
        match row.binary_search(&j) {
            Ok(p) => a.values[a.indptr[i] + p],
            Err(_) => 0.0,
        }
    });
    let eigs = dense.selfadjoint_eigenvalues(faer::Side::Lower);
    eigs.into_iter().fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lcg(state: &mut u64) -> f64 {
        *state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (*state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    }

    #[test]
    fn coo_compression_sums_duplicates() {
        let mut coo = Coo::new(3, 3);
        coo.push(1, 2, 1.5);
        coo.push(0, 0, 2.0);
        coo.push(1, 2, -0.5);
        coo.push(2, 1, 3.0);
        let csr = coo.to_csr();
        assert_eq!(csr.nnz(), 3);
        let d = csr.to_dense();
        assert_eq!(d[0], 2.0);
        assert_eq!(d[1 * 3 + 2], 1.0);
        assert_eq!(d[2 * 3 + 1], 3.0);
    }

    #[test]
    fn matvec_and_transpose_agree_with_dense() {
        let mut state = 7u64;
        let (nr, nc) = (11, 7);
        let mut coo = Coo::new(nr, nc);
        for _ in 0..40 {
            let r = (lcg(&mut state).abs() * 2.0 * nr as f64) as usize % nr;
            let c = (lcg(&mut state).abs() * 2.0 * nc as f64) as usize % nc;
            coo.push(r, c, lcg(&mut state));
        }
        let a = coo.to_csr();
        let dense = a.to_dense();
        let x: Vec<f64> = (0..nc).map(|_| lcg(&mut state)).collect();
        let y = a.matvec(&x);
        for r in 0..nr {
            let want: f64 = (0..nc).map(|c| dense[r * nc + c] * x[c]).sum();
            assert!((y[r] - want).abs() < 1e-14);
        }
        let t = a.transpose();
        let z: Vec<f64> = (0..nr).map(|_| lcg(&mut state)).collect();
        let yt = t.matvec(&z);
        let mut yt2 = vec![0.0; nc];
        a.matvec_transpose_add(&z, 1.0, &mut yt2);
        for c in 0..nc {
            assert!((yt[c] - yt2[c]).abs() < 1e-14);
        }
    }

    #[test]
    fn identity_system_returns_rhs() {
        let a = Csr::identity(5);
        let b = vec![1.0, -2.0, 3.0, 0.5, 0.0];
        let x = solve_linear(&a, &b).unwrap();
        assert_eq!(x, b);
    }

    #[test]
    fn permuted_diagonal_system_inverts_exactly() {
        // rows of a scaled permutation: x[perm[i]] = b[i]/scale[i]
        let mut coo = Coo::new(4, 4);
        let perm = [2, 0, 3, 1];
        let scalev = [2.0, -4.0, 0.5, 8.0];
        for i in 0..4 {
            coo.push(i, perm[i], scalev[i]);
        }
        let a = coo.to_csr();
        let b = vec![2.0, 8.0, 1.0, -2.0];
        let x = solve_linear(&a, &b).unwrap();
        for i in 0..4 {
            assert!((x[perm[i]] - b[i] / scalev[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn sparse_solver_matches_dense_oracle() {
        // SPD second-difference matrix on 50 dofs
        let n = 50;
        let mut coo = Coo::new(n, n);
        for i in 0..n {
            coo.push(i, i, 2.0);
            if i + 1 < n {
                coo.push(i, i + 1, -1.0);
                coo.push(i + 1, i, -1.0);
            }
        }
        let a = coo.to_csr();
        let mut state = 99u64;
        let b: Vec<f64> = (0..n).map(|_| lcg(&mut state)).collect();
        let x = solve_linear(&a, &b).unwrap();
        let y = dense_solve_oracle(&a.to_dense(), &b).unwrap();
        for i in 0..n {
            assert!((x[i] - y[i]).abs() < 1e-10, "dof {i}: {} vs {}", x[i], y[i]);
        }
    }

    #[test]
    fn singular_matrix_reports_pivot_step() {
        // rank-deficient: empty last row and column
        let mut coo = Coo::new(3, 3);
        coo.push(0, 0, 1.0);
        coo.push(1, 1, 1.0);
        let a = coo.to_csr();
        match solve_linear(&a, &[1.0, 1.0, 1.0]) {
            Err(SolveError::Singular { .. }) | Err(SolveError::Factorization(_)) => {}
            other => panic!("expected singular-system error, got {other:?}"),
        }
    }

    #[test]
    fn asymmetry_detects_lone_entries() {
        let mut coo = Coo::new(3, 3);
        coo.push(0, 1, 2.0);
        coo.push(1, 0, 2.0);
        coo.push(2, 0, 0.5);
        let a = coo.to_csr();
        assert_eq!(a.asymmetry(), 0.5);
        let sym = a.add_scaled(1.0, &a.transpose(), 1.0);
        assert_eq!(sym.asymmetry(), 0.0);
    }

    #[test]
    fn smallest_eigenvalue_of_second_difference() {
        let n = 20;
        let mut coo = Coo::new(n, n);
        for i in 0..n {
            coo.push(i, i, 2.0);
            if i + 1 < n {
                coo.push(i, i + 1, -1.0);
                coo.push(i + 1, i, -1.0);
            }
        }
        let min = smallest_eigenvalue(&coo.to_csr());
        let exact = 2.0 - 2.0 * (std::f64::consts::PI / (n as f64 + 1.0)).cos();
        assert!((min - exact).abs() < 1e-12);
    }
}
