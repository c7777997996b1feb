//! Small dense matrices and a symmetric eigensolver.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

/// Row-major dense real matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        let mut m = Self::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), c, "ragged rows");
            m.data[i * c..(i + 1) * c].copy_from_slice(row);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
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

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "inner dimensions differ");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let orow = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Largest absolute entry of `self - other`.
    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| libm::fabs(a - b))
            .fold(0.0, f64::max)
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.rows == self.cols
            && (0..self.rows)
                .all(|i| (0..i).all(|j| libm::fabs(self[(i, j)] - self[(j, i)]) <= tol))
    }

    /// Determinant by Gaussian elimination with partial pivoting.
    pub fn determinant(&self) -> f64 {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut a = self.clone();
        let mut det = 1.0;
        for c in 0..n {
            let p = (c..n)
                .max_by(|&i, &j| libm::fabs(a[(i, c)]).total_cmp(&libm::fabs(a[(j, c)])))
                .unwrap();
            if a[(p, c)] == 0.0 {
                return 0.0;
            }
            if p != c {
                for j in 0..n {
                    a.data.swap(p * n + j, c * n + j);
                }
                det = -det;
            }
            let piv = a[(c, c)];
            det *= piv;
            for i in c + 1..n {
                let f = a[(i, c)] / piv;
                for j in c..n {
                    a[(i, j)] -= f * a[(c, j)];
                }
            }
        }
        det
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

/// Eigen-decomposition of a symmetric matrix.
#[derive(Clone, Debug)]
pub struct SymEigen {
    /// Eigenvalues in ascending order.
    pub values: Vec<f64>,
    /// Column `i` is the unit eigenvector for `values[i]`.
    pub vectors: Matrix,
}

/// Cyclic Jacobi rotations until the off-diagonal part vanishes.
pub fn sym_eigen(m: &Matrix) -> SymEigen {
    assert_eq!(m.rows, m.cols, "matrix must be square");
    let n = m.rows;
    let mut a = m.clone();
    let mut v = Matrix::identity(n);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum();
        let scale: f64 = a.data.iter().map(|x| x * x).sum();
        if off <= 1e-30 * scale || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (libm::fabs(theta) + libm::sqrt(theta * theta + 1.0));
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / libm::sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let vectors = Matrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    SymEigen { values, vectors }
}

/// Diagonal and subdiagonal of a Householder tridiagonal form.
fn tridiagonal(m: &Matrix) -> (Vec<f64>, Vec<f64>) {
    let n = m.rows;
    let mut a = m.clone();
    let mut e = vec![0.0; n.saturating_sub(1)];
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    for k in 0..n.saturating_sub(2) {
        let norm = libm::sqrt((k + 1..n).map(|i| a[(i, k)] * a[(i, k)]).sum::<f64>());
        if norm == 0.0 {
            e[k] = 0.0;
            continue;
        }
        let x0 = a[(k + 1, k)];
        let alpha = if x0 > 0.0 { -norm } else { norm };
        for i in k + 1..n {
            v[i] = a[(i, k)];
        }
        v[k + 1] -= alpha;
        let vn = libm::sqrt((k + 1..n).map(|i| v[i] * v[i]).sum::<f64>());
        if vn == 0.0 {
            e[k] = x0;
            continue;
        }
        for x in v[k + 1..n].iter_mut() {
            *x /= vn;
        }
        for i in k + 1..n {
            p[i] = (k + 1..n).map(|j| a[(i, j)] * v[j]).sum();
        }
        let vp: f64 = (k + 1..n).map(|i| v[i] * p[i]).sum();
        for i in k + 1..n {
            p[i] -= vp * v[i];
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[(i, j)] -= 2.0 * (v[i] * p[j] + p[i] * v[j]);
            }
        }
        e[k] = alpha;
    }
    if n >= 2 {
        e[n - 2] = a[(n - 1, n - 2)];
    }
    let d = (0..n).map(|i| a[(i, i)]).collect();
    (d, e)
}

/// Number of eigenvalues of the tridiagonal matrix below `x`.
fn sturm_count(d: &[f64], e: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0;
    for i in 0..d.len() {
        let off = if i == 0 { 0.0 } else { e[i - 1] * e[i - 1] };
        q = d[i] - x - if i == 0 { 0.0 } else { off / q };
        if q == 0.0 {
            q = -f64::EPSILON * (libm::fabs(d[i]) + libm::fabs(x) + f64::MIN_POSITIVE);
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Largest eigenvalue of a symmetric matrix, by bisection.
pub fn sym_max_eigenvalue(m: &Matrix) -> f64 {
    let n = m.rows;
    if n == 0 {
        return 0.0;
    }
    if n == 1 {
        return m[(0, 0)];
    }
    let (d, e) = tridiagonal(m);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = if i > 0 { libm::fabs(e[i - 1]) } else { 0.0 }
            + if i + 1 < n { libm::fabs(e[i]) } else { 0.0 };
        lo = lo.min(d[i] - r);
        hi = hi.max(d[i] + r);
    }
    let scale = libm::fabs(lo).max(libm::fabs(hi)).max(f64::MIN_POSITIVE);
    for _ in 0..200 {
        if hi - lo <= 2.0 * f64::EPSILON * scale {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if sturm_count(&d, &e, mid) == n {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Solves A x = b in place by Gaussian elimination with partial pivoting.
fn solve_in_place(mut a: Matrix, b: &mut [f64]) {
    let n = a.rows;
    for c in 0..n {
        let p = (c..n)
            .max_by(|&i, &j| libm::fabs(a[(i, c)]).total_cmp(&libm::fabs(a[(j, c)])))
            .unwrap();
        if p != c {
            for j in 0..n {
                a.data.swap(p * n + j, c * n + j);
            }
            b.swap(p, c);
        }
        let mut piv = a[(c, c)];
        if piv == 0.0 {
            piv = f64::EPSILON * (1.0 + libm::fabs(a[(c, c)]));
            a[(c, c)] = piv;
        }
        for i in c + 1..n {
            let f = a[(i, c)] / piv;
            if f == 0.0 {
                continue;
            }
            for j in c..n {
                a[(i, j)] -= f * a[(c, j)];
            }
            b[i] -= f * b[c];
        }
    }
    for c in (0..n).rev() {
        let s: f64 = (c + 1..n).map(|j| a[(c, j)] * b[j]).sum();
        b[c] = (b[c] - s) / a[(c, c)];
    }
}

/// Largest eigenvalue of a symmetric matrix and a unit eigenvector
/// from shifted inverse iteration.
pub fn sym_top_eigenpair(m: &Matrix) -> (f64, Vec<f64>) {
    let n = m.rows;
    let lambda = sym_max_eigenvalue(m);
    let scale = (0..n).map(|i| libm::fabs(m[(i, i)])).fold(libm::fabs(lambda), f64::max);
    let shift = lambda + 1e-10 * scale.max(f64::MIN_POSITIVE);
    let mut shifted = m.clone();
    for i in 0..n {
        shifted[(i, i)] -= shift;
    }
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * libm::sin(1.0 + i as f64)).collect();
    for _ in 0..3 {
        solve_in_place(shifted.clone(), &mut v);
        let nv = norm2(&v);
        if !(nv > 0.0) || !nv.is_finite() {
            let e = sym_eigen(m);
            return (lambda, e.vectors.col(n - 1));
        }
        v.iter_mut().for_each(|x| *x /= nv);
    }
    (lambda, v)
}

/// Spectral norm and a top singular pair (u, v) with C v = σ u.
pub fn spectral_norm(c: &Matrix) -> (f64, Vec<f64>, Vec<f64>) {
    let n = c.cols;
    if n == 0 {
        return (0.0, Vec::new(), Vec::new());
    }
    let ctc = c.transpose().mul(c);
    let (top, v) = sym_top_eigenpair(&ctc);
    let sigma = libm::sqrt(top.max(0.0));
    let cv = c.mul_vec(&v);
    let u = if sigma > 0.0 {
        cv.iter().map(|x| x / sigma).collect()
    } else {
        vec![0.0; c.rows]
    };
    (sigma, u, v)
}
