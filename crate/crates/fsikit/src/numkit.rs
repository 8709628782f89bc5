//! Sparse/dense linear algebra substrate.
//!
//! Compressed-row matrices assembled from triplets, plus a direct banded LU
//! factorization with partial pivoting (reverse Cuthill-McKee ordered) used
//! for all Newton and adjoint systems. Transpose solves reuse the same
//! factorization so adjoint operators are exact transposes of the primal ones.

use crate::error::{FsiError, Result};

/// Sparse matrix in compressed row storage, immutable after assembly.
#[derive(Debug, Clone)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Assembles from (row, col, value) triplets. Duplicates are summed and
    /// entries end up sorted by row then column, so the result is independent
    /// of triplet order.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self> {
        for &(r, c, _) in triplets {
            if r >= rows || c >= cols {
                return Err(FsiError::Assembly(format!(
                    "triplet ({r}, {c}) out of range for {rows}x{cols} matrix"
                )));
            }
        }
        let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
        sorted.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));

        let mut row_ptr = vec![0usize; rows + 1];
        let mut col_idx: Vec<usize> = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut cur_row = 0usize;
        for &(r, c, v) in &sorted {
            if r == cur_row && col_idx.len() > row_ptr[r] && *col_idx.last().unwrap() == c {
                *values.last_mut().unwrap() += v;
                continue;
            }
            while cur_row < r {
                cur_row += 1;
                row_ptr[cur_row] = col_idx.len();
            }
            col_idx.push(c);
            values.push(v);
        }
        while cur_row < rows {
            cur_row += 1;
            row_ptr[cur_row] = col_idx.len();
        }
        Ok(Self {
            rows,
            cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    /// Value at (i, j), zero if not stored.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        match self.col_idx[lo..hi].binary_search(&j) {
            Ok(k) => self.values[lo + k],
            Err(_) => 0.0,
        }
    }

    /// Iterates stored entries of row i as (col, value).
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        self.col_idx[lo..hi]
            .iter()
            .zip(&self.values[lo..hi])
            .map(|(&c, &v)| (c, v))
    }

    /// y = A x
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "apply dimension mismatch");
        let mut y = vec![0.0; self.rows];
        for i in 0..self.rows {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.values[k] * x[self.col_idx[k]];
            }
            y[i] = s;
        }
        y
    }

    /// y = A^T x
    pub fn apply_transpose(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.rows, "apply_transpose dimension mismatch");
        let mut y = vec![0.0; self.cols];
        for i in 0..self.rows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                y[self.col_idx[k]] += self.values[k] * x[i];
            }
        }
        y
    }

    /// Explicitly transposed copy.
    pub fn transpose(&self) -> SparseMatrix {
        let mut trips = Vec::with_capacity(self.nnz());
        for i in 0..self.rows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                trips.push((self.col_idx[k], i, self.values[k]));
            }
        }
        SparseMatrix::from_triplets(self.cols, self.rows, &trips).expect("transpose in range")
    }

    /// All stored entries as triplets, row-major order.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::with_capacity(self.nnz());
        for i in 0..self.rows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                out.push((i, self.col_idx[k], self.values[k]));
            }
        }
        out
    }
}

/// Reverse Cuthill-McKee ordering of the symmetrized pattern.
/// Returns perm with perm[new] = old.
fn reverse_cuthill_mckee(a: &SparseMatrix) -> Vec<usize> {
    let n = a.rows();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for (j, _) in a.row(i) {
            if i != j {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    for l in adj.iter_mut() {
        l.sort_unstable();
        l.dedup();
    }
    let degree: Vec<usize> = adj.iter().map(|l| l.len()).collect();

    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    loop {
        // lowest-degree unvisited node starts the next component
        let start = match (0..n)
            .filter(|&i| !visited[i])
            .min_by_key(|&i| (degree[i], i))
        {
            Some(s) => s,
            None => break,
        };
        let mut queue = std::collections::VecDeque::new();
        queue.push_back(start);
        visited[start] = true;
        while let Some(u) = queue.pop_front() {
            order.push(u);
            let mut nbrs: Vec<usize> = adj[u].iter().copied().filter(|&v| !visited[v]).collect();
            nbrs.sort_by_key(|&v| (degree[v], v));
            for v in nbrs {
                visited[v] = true;
                queue.push_back(v);
            }
        }
    }
    order.reverse();
    order
}

/// Banded LU factorization with partial pivoting of an RCM-permuted matrix.
///
/// Holds the factors for repeated direct and transpose solves; refuses to
/// factor when a pivot falls below `pivot_floor` relative to the largest
/// matrix entry.
pub struct DirectSolver {
    n: usize,
    kl: usize,
    ku: usize,
    ldab: usize,
    ab: Vec<f64>,
    ipiv: Vec<usize>,
    /// perm[new] = old
    perm: Vec<usize>,
    /// iperm[old] = new
    iperm: Vec<usize>,
    /// original matrix kept for iterative refinement
    matrix: SparseMatrix,
}

const PIVOT_FLOOR_REL: f64 = 1e-14;

impl DirectSolver {
    pub fn new(a: &SparseMatrix) -> Result<Self> {
        if a.rows() != a.cols() {
            return Err(FsiError::Dimension(format!(
                "direct solver needs a square matrix, got {}x{}",
                a.rows(),
                a.cols()
            )));
        }
        let n = a.rows();
        if n == 0 {
            return Ok(Self {
                n,
                kl: 0,
                ku: 0,
                ldab: 1,
                ab: Vec::new(),
                ipiv: Vec::new(),
                perm: Vec::new(),
                iperm: Vec::new(),
                matrix: a.clone(),
            });
        }
        let perm = reverse_cuthill_mckee(a);
        let mut iperm = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            iperm[old] = new;
        }
        let mut kl = 0usize;
        let mut ku = 0usize;
        let mut amax = 0.0f64;
        for i in 0..n {
            for (j, v) in a.row(i) {
                let (pi, pj) = (iperm[i], iperm[j]);
                if pi > pj {
                    kl = kl.max(pi - pj);
                } else {
                    ku = ku.max(pj - pi);
                }
                amax = amax.max(v.abs());
            }
        }
        if amax == 0.0 {
            return Err(FsiError::Singular {
                index: 0,
                value: 0.0,
                threshold: 0.0,
            });
        }
        // extra kl superdiagonals hold fill from row interchanges
        let ldab = 2 * kl + ku + 1;
        let mut ab = vec![0.0f64; ldab * n];
        let at = |i: usize, j: usize| -> usize { j * ldab + (kl + ku + i) - j };
        for i in 0..n {
            for (j, v) in a.row(i) {
                ab[at(iperm[i], iperm[j])] += v;
            }
        }
        // unblocked band LU with partial pivoting (dgbtf2 layout)
        let mut ipiv = vec![0usize; n];
        let threshold = PIVOT_FLOOR_REL * amax;
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            let mut jp = 0usize;
            let mut pmax = 0.0f64;
            for i in 0..=km {
                let v = ab[at(j + i, j)].abs();
                if v > pmax {
                    pmax = v;
                    jp = i;
                }
            }
            ipiv[j] = j + jp;
            if pmax <= threshold {
                return Err(FsiError::Singular {
                    index: perm[j + jp],
                    value: pmax,
                    threshold,
                });
            }
            let ju = n.min(j + ku + kl + 1);
            if jp != 0 {
                for c in j..ju {
                    ab.swap(at(j, c), at(j + jp, c));
                }
            }
            let diag = ab[at(j, j)];
            for i in 1..=km {
                ab[at(j + i, j)] /= diag;
            }
            for c in (j + 1)..ju {
                let ujc = ab[at(j, c)];
                if ujc != 0.0 {
                    for i in 1..=km {
                        ab[at(j + i, c)] -= ab[at(j + i, j)] * ujc;
                    }
                }
            }
        }
        Ok(Self {
            n,
            kl,
            ku,
            ldab,
            ab,
            ipiv,
            perm,
            iperm,
            matrix: a.clone(),
        })
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> usize {
        j * self.ldab + (self.kl + self.ku + i) - j
    }

    /// Solves A x = b with two rounds of iterative refinement, which keeps
    /// the residual near machine precision even for stiff systems.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let mut x = self.solve_raw(b)?;
        for _ in 0..2 {
            let ax = self.matrix.apply(&x);
            let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
            if norm2(&r) <= f64::MIN_POSITIVE {
                break;
            }
            let dx = self.solve_raw(&r)?;
            for (xi, di) in x.iter_mut().zip(&dx) {
                *xi += di;
            }
        }
        Ok(x)
    }

    fn solve_raw(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.n {
            return Err(FsiError::Dimension(format!(
                "rhs length {} does not match matrix size {}",
                b.len(),
                self.n
            )));
        }
        if self.n == 0 {
            return Ok(Vec::new());
        }
        let mut x = vec![0.0; self.n];
        for i in 0..self.n {
            x[i] = b[self.perm[i]];
        }
        let kv = self.ku + self.kl;
        // forward: apply interchanges and L
        for j in 0..self.n {
            let p = self.ipiv[j];
            if p != j {
                x.swap(j, p);
            }
            let km = self.kl.min(self.n - 1 - j);
            let xj = x[j];
            if xj != 0.0 {
                for i in 1..=km {
                    x[j + i] -= self.ab[self.at(j + i, j)] * xj;
                }
            }
        }
        // backward: U
        for j in (0..self.n).rev() {
            x[j] /= self.ab[self.at(j, j)];
            let xj = x[j];
            if xj != 0.0 {
                let lo = j.saturating_sub(kv);
                for i in lo..j {
                    x[i] -= self.ab[self.at(i, j)] * xj;
                }
            }
        }
        let mut out = vec![0.0; self.n];
        for i in 0..self.n {
            out[self.perm[i]] = x[i];
        }
        Ok(out)
    }

    /// Solves A^T x = b reusing the same factorization, with refinement.
    pub fn solve_transpose(&self, b: &[f64]) -> Result<Vec<f64>> {
        let mut x = self.solve_transpose_raw(b)?;
        for _ in 0..2 {
            let ax = self.matrix.apply_transpose(&x);
            let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
            if norm2(&r) <= f64::MIN_POSITIVE {
                break;
            }
            let dx = self.solve_transpose_raw(&r)?;
            for (xi, di) in x.iter_mut().zip(&dx) {
                *xi += di;
            }
        }
        Ok(x)
    }

    fn solve_transpose_raw(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.n {
            return Err(FsiError::Dimension(format!(
                "rhs length {} does not match matrix size {}",
                b.len(),
                self.n
            )));
        }
        if self.n == 0 {
            return Ok(Vec::new());
        }
        let mut x = vec![0.0; self.n];
        for i in 0..self.n {
            x[i] = b[self.perm[i]];
        }
        let kv = self.ku + self.kl;
        // U^T y = b (forward, U^T is lower triangular)
        for j in 0..self.n {
            let lo = j.saturating_sub(kv);
            let mut s = x[j];
            for i in lo..j {
                s -= self.ab[self.at(i, j)] * x[i];
            }
            x[j] = s / self.ab[self.at(j, j)];
        }
        // L^T x = y with interchanges applied in reverse
        for j in (0..self.n).rev() {
            let km = self.kl.min(self.n - 1 - j);
            let mut s = x[j];
            for i in 1..=km {
                s -= self.ab[self.at(j + i, j)] * x[j + i];
            }
            x[j] = s;
            let p = self.ipiv[j];
            if p != j {
                x.swap(j, p);
            }
        }
        let mut out = vec![0.0; self.n];
        for i in 0..self.n {
            out[self.perm[i]] = x[i];
        }
        Ok(out)
    }
}

/// One-shot direct solve of A x = b.
pub fn solve_direct(a: &SparseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    DirectSolver::new(a)?.solve(b)
}

/// One-shot transpose solve of A^T x = b.
pub fn solve_transpose(a: &SparseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    DirectSolver::new(a)?.solve_transpose(b)
}

pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn dense_from_triplets(n: usize, m: usize, t: &[(usize, usize, f64)]) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; m]; n];
        for &(i, j, v) in t {
            d[i][j] += v;
        }
        d
    }

    /// Dense Gaussian elimination with partial pivoting, used as an
    /// independent oracle for the banded solver.
    fn dense_solve(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let mut m: Vec<Vec<f64>> = a.to_vec();
        let mut x = b.to_vec();
        for k in 0..n {
            let p = (k..n).max_by(|&i, &j| m[i][k].abs().total_cmp(&m[j][k].abs())).unwrap();
            m.swap(k, p);
            x.swap(k, p);
            for i in (k + 1)..n {
                let f = m[i][k] / m[k][k];
                for j in k..n {
                    m[i][j] -= f * m[k][j];
                }
                x[i] -= f * x[k];
            }
        }
        for k in (0..n).rev() {
            for j in (k + 1)..n {
                x[k] -= m[k][j] * x[j];
            }
            x[k] /= m[k][k];
        }
        x
    }

    #[test]
    fn duplicates_are_summed() {
        let a = SparseMatrix::from_triplets(1, 1, &[(0, 0, 1.0), (0, 0, 2.0)]).unwrap();
        assert_eq!(a.get(0, 0), 3.0);
        assert_eq!(a.nnz(), 1);
    }

    #[test]
    fn identity_applies_as_identity() {
        let t: Vec<_> = (0..3).map(|i| (i, i, 1.0)).collect();
        let a = SparseMatrix::from_triplets(3, 3, &t).unwrap();
        let v = vec![1.5, -2.0, 0.25];
        assert_eq!(a.apply(&v), v);
    }

    #[test]
    fn random_apply_matches_dense_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut t = Vec::new();
        for _ in 0..18 {
            t.push((rng.gen_range(0..5), rng.gen_range(0..5), rng.gen_range(-1.0..1.0)));
        }
        let a = SparseMatrix::from_triplets(5, 5, &t).unwrap();
        let d = dense_from_triplets(5, 5, &t);
        let v: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let y = a.apply(&v);
        for i in 0..5 {
            let yi: f64 = (0..5).map(|j| d[i][j] * v[j]).sum();
            assert!((y[i] - yi).abs() < 1e-14);
        }
    }

    #[test]
    fn out_of_range_triplet_is_rejected() {
        let err = SparseMatrix::from_triplets(2, 2, &[(2, 0, 1.0)]).unwrap_err();
        assert!(matches!(err, FsiError::Assembly(_)));
    }

    #[test]
    fn solve_identity_and_diagonal() {
        let t: Vec<_> = (0..4).map(|i| (i, i, 1.0)).collect();
        let a = SparseMatrix::from_triplets(4, 4, &t).unwrap();
        let b = vec![3.0, -1.0, 2.0, 0.5];
        assert_eq!(solve_direct(&a, &b).unwrap(), b);

        let a = SparseMatrix::from_triplets(2, 2, &[(0, 0, 2.0), (1, 1, 4.0)]).unwrap();
        let x = solve_direct(&a, &[2.0, 8.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn random_spd_matches_dense_elimination_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 8;
        // SPD via B^T B + n I
        let mut d = vec![vec![0.0; n]; n];
        let bmat: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    d[i][j] += bmat[k][i] * bmat[k][j];
                }
            }
            d[i][i] += n as f64;
        }
        let mut t = Vec::new();
        for i in 0..n {
            for j in 0..n {
                t.push((i, j, d[i][j]));
            }
        }
        let a = SparseMatrix::from_triplets(n, n, &t).unwrap();
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x = solve_direct(&a, &b).unwrap();
        let xref = dense_solve(&d, &b);
        for i in 0..n {
            assert!((x[i] - xref[i]).abs() < 1e-10, "i={i}: {} vs {}", x[i], xref[i]);
        }
        // residual check
        let r = a.apply(&x);
        let rel = r.iter().zip(&b).map(|(ri, bi)| (ri - bi) * (ri - bi)).sum::<f64>().sqrt()
            / norm2(&b);
        assert!(rel <= 1e-10);
    }

    #[test]
    fn transpose_solve_symmetric_equals_direct() {
        let t = vec![(0, 0, 4.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 3.0)];
        let a = SparseMatrix::from_triplets(2, 2, &t).unwrap();
        let b = vec![1.0, 2.0];
        let x1 = solve_direct(&a, &b).unwrap();
        let x2 = solve_transpose(&a, &b).unwrap();
        for i in 0..2 {
            assert!((x1[i] - x2[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn transpose_solve_hand_case() {
        // A = [[1,2],[0,1]], A^T x = (1,1) -> x = (1,-1)
        let a = SparseMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 2.0), (1, 1, 1.0)]).unwrap();
        let x = solve_transpose(&a, &[1.0, 1.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15);
        assert!((x[1] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn transpose_solve_matches_explicit_transpose() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let n = 6;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 4.0 + rng.gen_range(0.0..1.0)));
            for _ in 0..2 {
                t.push((i, rng.gen_range(0..n), rng.gen_range(-1.0..1.0)));
            }
        }
        let a = SparseMatrix::from_triplets(n, n, &t).unwrap();
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x1 = solve_transpose(&a, &b).unwrap();
        let x2 = solve_direct(&a.transpose(), &b).unwrap();
        for i in 0..n {
            assert!((x1[i] - x2[i]).abs() < 1e-11);
        }
    }

    #[test]
    fn apply_transpose_matches_transposed_triplets_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut t = Vec::new();
        for _ in 0..25 {
            t.push((rng.gen_range(0..7), rng.gen_range(0..5), rng.gen_range(-2.0..2.0)));
        }
        let a = SparseMatrix::from_triplets(7, 5, &t).unwrap();
        let tt: Vec<_> = t.iter().map(|&(i, j, v)| (j, i, v)).collect();
        let at = SparseMatrix::from_triplets(5, 7, &tt).unwrap();
        let v: Vec<f64> = (0..7).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let y1 = a.apply_transpose(&v);
        let y2 = at.apply(&v);
        assert_eq!(y1, y2);
    }

    #[test]
    fn solve_roundtrip_under_high_condition_number() {
        // diagonal grading spreads the spectrum over 1e8
        let n = 12;
        let mut t = Vec::new();
        for i in 0..n {
            let d = 10f64.powf(8.0 * i as f64 / (n - 1) as f64);
            t.push((i, i, d));
            if i + 1 < n {
                t.push((i, i + 1, 0.3 * d));
            }
        }
        let a = SparseMatrix::from_triplets(n, n, &t).unwrap();
        let b: Vec<f64> = (0..n).map(|i| (i as f64 + 1.0).sin()).collect();
        let x = solve_direct(&a, &b).unwrap();
        let r = a.apply(&x);
        let rel = r
            .iter()
            .zip(&b)
            .map(|(ri, bi)| (ri - bi) * (ri - bi))
            .sum::<f64>()
            .sqrt()
            / norm2(&b);
        assert!(rel <= 1e-10, "rel residual {rel}");
    }

    #[test]
    fn singular_matrix_reports_pivot() {
        let a = SparseMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (1, 0, 1.0)]).unwrap();
        match solve_direct(&a, &[1.0, 1.0]) {
            Err(FsiError::Singular { .. }) => {}
            other => panic!("expected singular error, got {other:?}"),
        }
    }
}
