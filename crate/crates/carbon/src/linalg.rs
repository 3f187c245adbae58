//! Minimal dense linear algebra: row-major matrices, LU solves, and a
//! one-sided Jacobi SVD. Everything here is sized for desk-scale systems
//! (tens of rows), so dense O(n^3) routines are fine.

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let nr = rows.len();
        let nc = if nr == 0 { 0 } else { rows[0].len() };
        let mut data = Vec::with_capacity(nr * nc);
        for r in rows {
            assert_eq!(r.len(), nc, "ragged rows");
            data.extend_from_slice(r);
        }
        Mat {
            rows: nr,
            cols: nc,
            data,
        }
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn col(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t[(c, r)] = self[(r, c)];
            }
        }
        t
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols, "dimension mismatch");
        (0..self.rows)
            .map(|r| self.row(r).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `A^T v` without forming the transpose.
    pub fn mul_vec_t(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.rows, "dimension mismatch");
        let mut out = vec![0.0; self.cols];
        for r in 0..self.rows {
            let row = self.row(r);
            for c in 0..self.cols {
                out[c] += row[c] * v[r];
            }
        }
        out
    }
}

impl std::ops::Index<(usize, usize)> for Mat {
    type Output = f64;
    fn index(&self, (r, c): (usize, usize)) -> &f64 {
        &self.data[r * self.cols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut f64 {
        &mut self.data[r * self.cols + c]
    }
}

/// LU factorization with partial pivoting.
pub struct Lu {
    lu: Mat,
    perm: Vec<usize>,
}

/// Factorize a square matrix. Returns `None` if (numerically) singular.
pub fn lu_factor(a: &Mat) -> Option<Lu> {
    assert_eq!(a.nrows(), a.ncols(), "lu_factor needs a square matrix");
    let n = a.nrows();
    let mut lu = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let mut piv = k;
        let mut best = lu[(k, k)].abs();
        for r in k + 1..n {
            let v = lu[(r, k)].abs();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if best < 1e-12 {
            return None;
        }
        if piv != k {
            for c in 0..n {
                let tmp = lu[(k, c)];
                lu[(k, c)] = lu[(piv, c)];
                lu[(piv, c)] = tmp;
            }
            perm.swap(k, piv);
        }
        for r in k + 1..n {
            let f = lu[(r, k)] / lu[(k, k)];
            lu[(r, k)] = f;
            for c in k + 1..n {
                lu[(r, c)] -= f * lu[(k, c)];
            }
        }
    }
    Some(Lu { lu, perm })
}

impl Lu {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.lu.nrows();
        assert_eq!(b.len(), n);
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for r in 1..n {
            for c in 0..r {
                x[r] -= self.lu[(r, c)] * x[c];
            }
        }
        for r in (0..n).rev() {
            for c in r + 1..n {
                x[r] -= self.lu[(r, c)] * x[c];
            }
            x[r] /= self.lu[(r, r)];
        }
        x
    }
}

/// Solve `A x = b` for a square `A` in one shot.
pub fn solve_dense(a: &Mat, b: &[f64]) -> Option<Vec<f64>> {
    lu_factor(a).map(|f| f.solve(b))
}

/// Singular value decomposition `A = U diag(sigma) V^T`.
///
/// Computed by one-sided Jacobi rotations on the columns of `A`. For
/// rank-deficient inputs the columns of `U` belonging to zero singular
/// values are left as zero vectors; pseudoinverse application truncates
/// them anyway.
pub struct Svd {
    pub u: Mat,
    pub v: Mat,
    pub sigma: Vec<f64>,
}

pub fn jacobi_svd(a: &Mat) -> Svd {
    if a.nrows() < a.ncols() {
        // work on the transpose and swap factors back
        let s = jacobi_svd(&a.transpose());
        return Svd {
            u: s.v,
            v: s.u,
            sigma: s.sigma,
        };
    }
    let m = a.nrows();
    let n = a.ncols();
    let mut u = a.clone();
    let mut v = Mat::identity(n);
    let eps = 1e-14;
    for _sweep in 0..60 {
        let mut converged = true;
        for p in 0..n.saturating_sub(1) {
            for q in p + 1..n {
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = 0.0;
                for r in 0..m {
                    let up = u[(r, p)];
                    let uq = u[(r, q)];
                    alpha += up * up;
                    beta += uq * uq;
                    gamma += up * uq;
                }
                if gamma.abs() <= eps * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                converged = false;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for r in 0..m {
                    let up = u[(r, p)];
                    let uq = u[(r, q)];
                    u[(r, p)] = c * up - s * uq;
                    u[(r, q)] = s * up + c * uq;
                }
                for r in 0..n {
                    let vp = v[(r, p)];
                    let vq = v[(r, q)];
                    v[(r, p)] = c * vp - s * vq;
                    v[(r, q)] = s * vp + c * vq;
                }
            }
        }
        if converged {
            break;
        }
    }
    let mut sigma: Vec<f64> = (0..n)
        .map(|c| (0..m).map(|r| u[(r, c)] * u[(r, c)]).sum::<f64>().sqrt())
        .collect();
    // sort singular values descending, permuting U and V columns alongside
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| sigma[j].partial_cmp(&sigma[i]).unwrap());
    let mut us = Mat::zeros(m, n);
    let mut vs = Mat::zeros(n, n);
    let mut ss = vec![0.0; n];
    for (new, &old) in order.iter().enumerate() {
        ss[new] = sigma[old];
        for r in 0..m {
            us[(r, new)] = u[(r, old)];
        }
        for r in 0..n {
            vs[(r, new)] = v[(r, old)];
        }
    }
    sigma = ss;
    u = us;
    v = vs;
    for c in 0..n {
        if sigma[c] > 0.0 {
            for r in 0..m {
                u[(r, c)] /= sigma[c];
            }
        }
    }
    Svd { u, v, sigma }
}

impl Svd {
    /// Apply the truncated pseudoinverse: `x = V diag(1/sigma_i) U^T b`,
    /// zeroing components with `sigma_i < rel_tol * sigma_max`.
    pub fn pinv_apply(&self, b: &[f64], rel_tol: f64) -> Vec<f64> {
        let cutoff = rel_tol * self.sigma.first().copied().unwrap_or(0.0);
        let utb = self.u.mul_vec_t(b);
        let n = self.v.nrows();
        let mut x = vec![0.0; n];
        for (c, &s) in self.sigma.iter().enumerate() {
            if s > cutoff && s > 0.0 {
                let w = utb[c] / s;
                for r in 0..n {
                    x[r] += self.v[(r, c)] * w;
                }
            }
        }
        x
    }

    pub fn rank(&self, rel_tol: f64) -> usize {
        let cutoff = rel_tol * self.sigma.first().copied().unwrap_or(0.0);
        self.sigma.iter().filter(|&&s| s > cutoff && s > 0.0).count()
    }
}

pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, &x| a.max(x.abs()))
}

pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lu_solves_small_system() {
        let a = Mat::from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]]);
        let x = solve_dense(&a, &[5.0, 10.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12);
        assert!((x[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn lu_detects_singular() {
        let a = Mat::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert!(solve_dense(&a, &[1.0, 2.0]).is_none());
    }

    #[test]
    fn svd_reconstructs_matrix() {
        let a = Mat::from_rows(&[
            vec![3.0, 1.0, 0.5],
            vec![1.0, -2.0, 0.0],
            vec![0.0, 4.0, 1.0],
        ]);
        let s = jacobi_svd(&a);
        for r in 0..3 {
            for c in 0..3 {
                let mut acc = 0.0;
                for k in 0..3 {
                    acc += s.u[(r, k)] * s.sigma[k] * s.v[(c, k)];
                }
                assert!((acc - a[(r, c)]).abs() < 1e-10, "({r},{c})");
            }
        }
        assert!(s.sigma.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn svd_rank_deficient() {
        let a = Mat::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        let s = jacobi_svd(&a);
        assert_eq!(s.rank(1e-9), 1);
        // pseudoinverse gives the minimum-norm least-squares solution
        let x = s.pinv_apply(&[1.0, 2.0], 1e-9);
        let ax: Vec<f64> = a.mul_vec(&x);
        assert!((ax[0] - 1.0).abs() < 1e-10);
        assert!((ax[1] - 2.0).abs() < 1e-10);
    }

    #[test]
    fn pinv_matches_direct_solve_full_rank() {
        let a = Mat::from_rows(&[
            vec![4.0, 1.0, 0.0],
            vec![1.0, 3.0, -1.0],
            vec![0.0, -1.0, 2.0],
        ]);
        let b = [1.0, 2.0, 3.0];
        let x1 = solve_dense(&a, &b).unwrap();
        let x2 = jacobi_svd(&a).pinv_apply(&b, 1e-12);
        for i in 0..3 {
            assert!((x1[i] - x2[i]).abs() < 1e-9);
        }
    }
}
