//! Dense symmetric linear algebra used by the precompute caches and samplers.
//!
//! Matrices are `ndarray::Array2<f64>` in standard (row-major) layout and
//! vectors are `Array1<f64>`. Products that are symmetric by construction are
//! explicitly symmetrized after accumulation so that rolling caches do not
//! drift over thousands of low-rank updates.

use ndarray::{Array1, Array2, ArrayView2, Axis};

use crate::error::{Error, Result};

pub type Matrix = Array2<f64>;
pub type Vector = Array1<f64>;

/// Lower-triangular Cholesky factor of a symmetric positive-definite matrix.
#[derive(Debug, Clone)]
pub struct SpdFactor {
    l: Matrix,
}

impl SpdFactor {
    /// Factor `A = L L^T`. The input is symmetrized as `(A + A^T)/2` before
    /// factorization; a non-positive pivot reports the failing index.
    pub fn factor(a: &Matrix) -> Result<SpdFactor> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::Dim(format!(
                "spd_factor requires a square matrix, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        let mut l = Matrix::zeros((n, n));
        for j in 0..n {
            let mut d = 0.5 * (a[(j, j)] + a[(j, j)]);
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::NotPositiveDefinite { pivot: j });
            }
            let ljj = d.sqrt();
            l[(j, j)] = ljj;
            for i in (j + 1)..n {
                let mut s = 0.5 * (a[(i, j)] + a[(j, i)]);
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / ljj;
            }
        }
        Ok(SpdFactor { l })
    }

    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    pub fn lower(&self) -> &Matrix {
        &self.l
    }

    /// Sum of log diagonal entries times two, i.e. `log det A`.
    pub fn log_det(&self) -> f64 {
        2.0 * self.l.diag().iter().map(|x| x.ln()).sum::<f64>()
    }

    /// Solve `A x = b` in place.
    pub fn solve_vec_in_place(&self, b: &mut Vector) -> Result<()> {
        let n = self.dim();
        if b.len() != n {
            return Err(Error::Dim(format!(
                "spd_solve: factor is {n}x{n} but rhs has length {}",
                b.len()
            )));
        }
        // forward: L y = b
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= self.l[(i, k)] * b[k];
            }
            b[i] = s / self.l[(i, i)];
        }
        // backward: L^T x = y
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in (i + 1)..n {
                s -= self.l[(k, i)] * b[k];
            }
            b[i] = s / self.l[(i, i)];
        }
        Ok(())
    }

    pub fn solve_vec(&self, b: &Vector) -> Result<Vector> {
        let mut x = b.clone();
        self.solve_vec_in_place(&mut x)?;
        Ok(x)
    }

    /// Solve `A X = B` column by column.
    pub fn solve_mat(&self, b: &Matrix) -> Result<Matrix> {
        let n = self.dim();
        if b.nrows() != n {
            return Err(Error::Dim(format!(
                "spd_solve: factor is {n}x{n} but rhs has {} rows",
                b.nrows()
            )));
        }
        let mut x = b.clone();
        for mut col in x.axis_iter_mut(Axis(1)) {
            let mut v = col.to_owned();
            self.solve_vec_in_place(&mut v)?;
            col.assign(&v);
        }
        Ok(x)
    }

    /// Explicit inverse, symmetrized.
    pub fn inverse(&self) -> Result<Matrix> {
        let mut inv = self.solve_mat(&Matrix::eye(self.dim()))?;
        symmetrize(&mut inv);
        Ok(inv)
    }
}

/// Convenience wrapper matching the factor-then-solve pattern.
pub fn spd_solve(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    SpdFactor::factor(a)?.solve_mat(b)
}

/// `scale * Xs Xs^T`, exactly symmetric. `Xs` with zero columns yields zeros.
pub fn sym_outer(xs: &ArrayView2<f64>, scale: f64) -> Matrix {
    let mut m = xs.dot(&xs.t());
    m *= scale;
    symmetrize(&mut m);
    m
}

/// `Xs Diag(weights) Xs^T`, exactly symmetric.
pub fn sym_outer_diag(xs: &ArrayView2<f64>, weights: &[f64]) -> Result<Matrix> {
    if xs.ncols() != weights.len() {
        return Err(Error::Dim(format!(
            "sym_outer_diag: {} columns but {} weights",
            xs.ncols(),
            weights.len()
        )));
    }
    let mut scaled = xs.to_owned();
    for (j, mut col) in scaled.axis_iter_mut(Axis(1)).enumerate() {
        col *= weights[j];
    }
    let mut m = scaled.dot(&xs.t());
    symmetrize(&mut m);
    Ok(m)
}

/// `Diag(left) Xs Diag(right)` applied as row and column scaling; no diagonal
/// matrices are materialized.
pub fn weighted_sandwich(xs: &ArrayView2<f64>, left: &[f64], right: &[f64]) -> Result<Matrix> {
    if xs.nrows() != left.len() || xs.ncols() != right.len() {
        return Err(Error::Dim(format!(
            "weighted_sandwich: matrix is {}x{} but scalings have lengths {} and {}",
            xs.nrows(),
            xs.ncols(),
            left.len(),
            right.len()
        )));
    }
    let mut out = xs.to_owned();
    for (i, mut row) in out.axis_iter_mut(Axis(0)).enumerate() {
        row *= left[i];
    }
    for (j, mut col) in out.axis_iter_mut(Axis(1)).enumerate() {
        col *= right[j];
    }
    Ok(out)
}

/// Replace `m` by `(m + m^T) / 2`.
pub fn symmetrize(m: &mut Matrix) {
    let n = m.nrows();
    debug_assert_eq!(n, m.ncols());
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

pub fn frobenius(m: &Matrix) -> f64 {
    m.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `||a - b||_F / max(||b||_F, 1)`; handy in drift audits and tests.
pub fn rel_frobenius_diff(a: &Matrix, b: &Matrix) -> f64 {
    let mut num = 0.0;
    for (x, y) in a.iter().zip(b.iter()) {
        let d = x - y;
        num += d * d;
    }
    num.sqrt() / frobenius(b).max(1.0)
}

/// LU factorization with partial pivoting for the small, possibly indefinite
/// Woodbury cores (mixed-sign diagonal corrections make them non-SPD).
#[derive(Debug, Clone)]
pub struct LuFactor {
    lu: Matrix,
    piv: Vec<usize>,
}

impl LuFactor {
    pub fn factor(a: &Matrix) -> Result<LuFactor> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::Dim(format!(
                "lu_factor requires a square matrix, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        let scale = a.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-300);
        let mut lu = a.clone();
        let mut piv = vec![0usize; n];
        for k in 0..n {
            let mut pk = k;
            let mut best = lu[(k, k)].abs();
            for i in (k + 1)..n {
                let v = lu[(i, k)].abs();
                if v > best {
                    best = v;
                    pk = i;
                }
            }
            if !(best > 1e-13 * scale) {
                return Err(Error::Numerical(format!(
                    "singular core matrix in LU at column {k} (pivot {best:.3e})"
                )));
            }
            piv[k] = pk;
            if pk != k {
                for j in 0..n {
                    let t = lu[(k, j)];
                    lu[(k, j)] = lu[(pk, j)];
                    lu[(pk, j)] = t;
                }
            }
            let pivot = lu[(k, k)];
            for i in (k + 1)..n {
                let f = lu[(i, k)] / pivot;
                lu[(i, k)] = f;
                for j in (k + 1)..n {
                    lu[(i, j)] -= f * lu[(k, j)];
                }
            }
        }
        Ok(LuFactor { lu, piv })
    }

    pub fn solve_vec_in_place(&self, b: &mut Vector) {
        let n = self.lu.nrows();
        debug_assert_eq!(b.len(), n);
        for k in 0..n {
            b.swap(k, self.piv[k]);
            let bk = b[k];
            for i in (k + 1)..n {
                b[i] -= self.lu[(i, k)] * bk;
            }
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for j in (i + 1)..n {
                s -= self.lu[(i, j)] * b[j];
            }
            b[i] = s / self.lu[(i, i)];
        }
    }

    pub fn solve_mat(&self, b: &Matrix) -> Result<Matrix> {
        if b.nrows() != self.lu.nrows() {
            return Err(Error::Dim(format!(
                "lu_solve: factor is {0}x{0} but rhs has {1} rows",
                self.lu.nrows(),
                b.nrows()
            )));
        }
        let mut x = b.clone();
        for mut col in x.axis_iter_mut(Axis(1)) {
            let mut v = col.to_owned();
            self.solve_vec_in_place(&mut v);
            col.assign(&v);
        }
        Ok(x)
    }
}
