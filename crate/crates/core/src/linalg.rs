//! Dense matrices and the symmetric-definite eigenproblem at arbitrary
//! precision.
//!
//! The lowest eigenpair of `H c = E W c` is found by Cholesky reduction
//! `W = L Lᵀ`, Householder tridiagonalization of `L⁻¹ H L⁻ᵀ`, Sturm-sequence
//! bisection for the eigenvalue and inverse iteration for the vector.

use std::fmt;

use crate::error::{Error, Result};
use crate::real::Real;

/// Square row-major matrix.
#[derive(Clone, PartialEq)]
pub struct Matrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: fmt::Debug> fmt::Debug for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<&[T]> = self.data.chunks(self.n.max(1)).collect();
        f.debug_struct("Matrix").field("n", &self.n).field("rows", &rows).finish()
    }
}

impl<T> Matrix<T> {
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Matrix { n, data }
    }

    /// Builds a symmetric matrix from its upper triangle given row by row.
    pub fn from_upper(n: usize, upper: Vec<T>) -> Self
    where
        T: Clone,
    {
        assert_eq!(upper.len(), n * (n + 1) / 2);
        let mut idx = vec![0usize; n];
        let mut k = 0;
        for (i, slot) in idx.iter_mut().enumerate() {
            *slot = k;
            k += n - i;
        }
        Matrix::from_fn(n, |i, j| {
            let (a, b) = if i <= j { (i, j) } else { (j, i) };
            upper[idx[a] + (b - a)].clone()
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.n + j] = v;
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Matrix<U> {
        Matrix { n: self.n, data: self.data.iter().map(f).collect() }
    }

    /// Leading `m × m` block.
    pub fn leading(&self, m: usize) -> Matrix<T>
    where
        T: Clone,
    {
        assert!(m <= self.n);
        Matrix::from_fn(m, |i, j| self.get(i, j).clone())
    }

    pub fn is_symmetric(&self) -> bool
    where
        T: PartialEq,
    {
        (0..self.n).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    pub fn rows(&self) -> impl Iterator<Item = &[T]> {
        self.data.chunks(self.n.max(1))
    }
}

pub type RealMatrix = Matrix<Real>;

impl Matrix<Real> {
    pub fn zeros(n: usize, bits: usize) -> Self {
        Matrix::from_fn(n, |_, _| Real::zero(bits))
    }

    pub fn mul_vec(&self, v: &[Real]) -> Vec<Real> {
        let bits = v.first().map(|x| x.precision()).unwrap_or(64);
        (0..self.n)
            .map(|i| {
                let mut acc = Real::zero(bits);
                for (j, vj) in v.iter().enumerate() {
                    acc += self.get(i, j) * vj;
                }
                acc
            })
            .collect()
    }

    /// `vᵀ A v`.
    pub fn quadratic_form(&self, v: &[Real]) -> Real {
        dot(v, &self.mul_vec(v))
    }

    /// `a·A + b·B`.
    pub fn combine(&self, a: &Real, other: &Matrix<Real>, b: &Real) -> Matrix<Real> {
        assert_eq!(self.n, other.n);
        Matrix { n: self.n, data: self.data.iter().zip(&other.data).map(|(x, y)| a * x + b * y).collect() }
    }

    pub fn frobenius_norm(&self) -> Real {
        let bits = self.data.first().map(|x| x.precision()).unwrap_or(64);
        let mut acc = Real::zero(bits);
        for x in &self.data {
            acc += x * x;
        }
        acc.sqrt()
    }
}

pub fn dot(a: &[Real], b: &[Real]) -> Real {
    let bits = a.first().map(|x| x.precision()).unwrap_or(64);
    let mut acc = Real::zero(bits);
    for (x, y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

/// Lower-triangular `L` with `W = L Lᵀ`. A non-positive pivot yields
/// [`Error::Conditioning`].
pub fn cholesky(w: &RealMatrix, digits: u32) -> Result<RealMatrix> {
    let n = w.n();
    let bits = w.get(0, 0).precision();
    let mut l = RealMatrix::zeros(n, bits);
    for j in 0..n {
        let mut d = w.get(j, j).clone();
        for k in 0..j {
            let x = l.get(j, k);
            d -= x * x;
        }
        if !d.is_positive() {
            return Err(Error::Conditioning { digits, pivot: j, value: d.to_f64() });
        }
        let djj = d.sqrt();
        for i in j + 1..n {
            let mut s = w.get(i, j).clone();
            for k in 0..j {
                s -= l.get(i, k) * l.get(j, k);
            }
            l.set(i, j, &s / &djj);
        }
        l.set(j, j, djj);
    }
    Ok(l)
}

/// Solves `L x = b` for lower-triangular `L`.
pub fn forward_substitute(l: &RealMatrix, b: &[Real]) -> Vec<Real> {
    let mut x: Vec<Real> = Vec::with_capacity(b.len());
    for i in 0..l.n() {
        let mut s = b[i].clone();
        for (k, xk) in x.iter().enumerate() {
            s -= l.get(i, k) * xk;
        }
        x.push(s / l.get(i, i));
    }
    x
}

/// Solves `Lᵀ x = b` for lower-triangular `L`.
pub fn back_substitute_transpose(l: &RealMatrix, b: &[Real]) -> Vec<Real> {
    let n = l.n();
    let mut x = b.to_vec();
    for i in (0..n).rev() {
        let mut s = b[i].clone();
        for k in i + 1..n {
            s -= l.get(k, i) * &x[k];
        }
        x[i] = s / l.get(i, i);
    }
    x
}

/// `L⁻¹ H L⁻ᵀ`, symmetrized.
pub fn reduce(l: &RealMatrix, h: &RealMatrix) -> RealMatrix {
    let n = l.n();
    // Y = L⁻¹ H column by column; then C = L⁻¹ Yᵀ (H symmetric)
    let cols: Vec<Vec<Real>> =
        (0..n).map(|j| forward_substitute(l, &(0..n).map(|i| h.get(i, j).clone()).collect::<Vec<_>>())).collect();
    // cols[j][i] = Y[i][j]; row i of Y is Yᵀ column i
    let c_cols: Vec<Vec<Real>> =
        (0..n).map(|i| forward_substitute(l, &(0..n).map(|j| cols[j][i].clone()).collect::<Vec<_>>())).collect();
    Matrix::from_fn(n, |i, j| {
        if i == j {
            c_cols[j][i].clone()
        } else {
            (&c_cols[j][i] + &c_cols[i][j]).ldexp(-1)
        }
    })
}

/// Householder reduction of a symmetric matrix to tridiagonal form.
/// Returns the diagonal and the sub-diagonal.
pub fn tridiagonalize(a: &RealMatrix) -> (Vec<Real>, Vec<Real>) {
    let n = a.n();
    let bits = a.get(0, 0).precision();
    let mut m: Vec<Vec<Real>> = a.rows().map(|r| r.to_vec()).collect();
    let zero = Real::zero(bits);
    for k in 0..n.saturating_sub(2) {
        let mut norm2 = zero.clone();
        for row in m.iter().skip(k + 1) {
            norm2 += &row[k] * &row[k];
        }
        if norm2.is_zero() {
            continue;
        }
        let norm = norm2.sqrt();
        let alpha = if m[k + 1][k].is_negative() { norm } else { -norm };
        let mut v: Vec<Real> = (k + 1..n).map(|i| m[i][k].clone()).collect();
        v[0] -= &alpha;
        let vnorm = dot(&v, &v).sqrt();
        if vnorm.is_zero() {
            continue;
        }
        for x in v.iter_mut() {
            *x = &*x / &vnorm;
        }
        let size = n - k - 1;
        // p = A v on the trailing block; w = p - (vᵀp) v
        let p: Vec<Real> = (0..size)
            .map(|i| {
                let mut acc = zero.clone();
                for j in 0..size {
                    acc += &m[k + 1 + i][k + 1 + j] * &v[j];
                }
                acc
            })
            .collect();
        let vp = dot(&v, &p);
        let w: Vec<Real> = p.iter().zip(&v).map(|(pi, vi)| pi - &(&vp * vi)).collect();
        for i in 0..size {
            let two_vi = v[i].ldexp(1);
            let two_wi = w[i].ldexp(1);
            for j in 0..=i {
                let upd = &two_vi * &w[j] + &two_wi * &v[j];
                let val = &m[k + 1 + i][k + 1 + j] - &upd;
                m[k + 1 + i][k + 1 + j] = val.clone();
                m[k + 1 + j][k + 1 + i] = val;
            }
        }
        m[k + 1][k] = alpha.clone();
        m[k][k + 1] = alpha;
        for i in k + 2..n {
            m[i][k] = zero.clone();
            m[k][i] = zero.clone();
        }
    }
    let d = (0..n).map(|i| m[i][i].clone()).collect();
    let e = (0..n.saturating_sub(1)).map(|i| m[i + 1][i].clone()).collect();
    (d, e)
}

/// Number of eigenvalues of the tridiagonal matrix strictly below `x`.
pub fn sturm_count(d: &[Real], e: &[Real], x: &Real) -> usize {
    let bits = x.precision();
    let tiny = Real::one(bits).ldexp(-(2 * bits as i32));
    let mut count = 0;
    let mut q = &d[0] - x;
    if q.is_negative() {
        count += 1;
    }
    for i in 1..d.len() {
        if q.is_zero() {
            q = tiny.clone();
        }
        q = &d[i] - x - &(&e[i - 1] * &e[i - 1]) / &q;
        if q.is_negative() {
            count += 1;
        }
    }
    count
}

/// The `k`-th smallest eigenvalue (0-based) of a symmetric tridiagonal
/// matrix, by bisection to full precision.
pub fn tridiagonal_eigenvalue(d: &[Real], e: &[Real], k: usize) -> Real {
    let n = d.len();
    let bits = d[0].precision();
    let mut lo = d[0].clone();
    let mut hi = d[0].clone();
    for i in 0..n {
        let mut r = Real::zero(bits);
        if i > 0 {
            r += e[i - 1].abs();
        }
        if i + 1 < n {
            r += e[i].abs();
        }
        let a = &d[i] - &r;
        let b = &d[i] + &r;
        if a < lo {
            lo = a;
        }
        if b > hi {
            hi = b;
        }
    }
    let scale = lo.abs().max(hi.abs()).max(Real::one(bits));
    let tol = scale.ldexp(-(bits as i32) + 4);
    for _ in 0..(bits + 64) {
        if (&hi - &lo) <= tol {
            break;
        }
        let mid = (&lo + &hi).ldexp(-1);
        if sturm_count(d, e, &mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (&lo + &hi).ldexp(-1)
}

/// Unit eigenvector of symmetric `a` for the eigenvalue near `lambda`.
pub fn inverse_iteration(a: &RealMatrix, lambda: &Real) -> Vec<Real> {
    let n = a.n();
    let bits = lambda.precision();
    let scale = a.frobenius_norm().max(Real::one(bits));
    let shift = lambda - &scale.ldexp(-(bits as i32) / 2);
    // LU with partial pivoting of (A - shift I)
    let mut m: Vec<Vec<Real>> =
        (0..n).map(|i| (0..n).map(|j| if i == j { a.get(i, j) - &shift } else { a.get(i, j).clone() }).collect()).collect();
    let mut perm: Vec<usize> = (0..n).collect();
    let tiny = scale.ldexp(-(bits as i32));
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| m[i][k].abs().partial_cmp(&m[j][k].abs()).unwrap()).unwrap();
        m.swap(k, p);
        perm.swap(k, p);
        if m[k][k].is_zero() {
            m[k][k] = tiny.clone();
        }
        for i in k + 1..n {
            let f = &m[i][k] / &m[k][k];
            for j in k + 1..n {
                let upd = &f * &m[k][j];
                m[i][j] -= &upd;
            }
            m[i][k] = f;
        }
    }
    let solve = |b: &[Real]| -> Vec<Real> {
        let mut y: Vec<Real> = perm.iter().map(|&p| b[p].clone()).collect();
        for i in 0..n {
            for k in 0..i {
                let upd = &m[i][k] * &y[k];
                y[i] -= &upd;
            }
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                let upd = &m[i][k] * &y[k];
                y[i] -= &upd;
            }
            y[i] = &y[i] / &m[i][i];
        }
        y
    };
    let mut v: Vec<Real> = (0..n).map(|i| Real::from_f64(1.0 + 1.0 / (i as f64 + 2.0), bits)).collect();
    for _ in 0..3 {
        let y = solve(&v);
        let norm = dot(&y, &y).sqrt();
        v = y.iter().map(|x| x / &norm).collect();
    }
    v
}

/// Lowest eigenpair of `H c = E W c`.
#[derive(Debug, Clone)]
pub struct Eigenpair {
    pub value: Real,
    /// Normalized so that `cᵀ W c = 1`; first nonzero component positive.
    pub vector: Vec<Real>,
    /// Distance to the second eigenvalue; `None` for a 1×1 problem.
    pub gap: Option<Real>,
}

/// A generalized problem with the Cholesky factor of `W` computed once; the
/// matrix for each `H` is reduced on demand.
#[derive(Debug, Clone)]
pub struct ReducedBasis {
    pub l: RealMatrix,
}

impl ReducedBasis {
    pub fn new(w: &RealMatrix, digits: u32) -> Result<Self> {
        Ok(ReducedBasis { l: cholesky(w, digits)? })
    }

    pub fn reduce(&self, h: &RealMatrix) -> RealMatrix {
        reduce(&self.l, h)
    }

    /// Lowest eigenpair given the reduced matrix `L⁻¹ H L⁻ᵀ`.
    pub fn lowest(&self, c: &RealMatrix) -> Eigenpair {
        let (d, e) = tridiagonalize(c);
        let value = tridiagonal_eigenvalue(&d, &e, 0);
        let gap = (d.len() > 1).then(|| tridiagonal_eigenvalue(&d, &e, 1) - &value);
        let y = inverse_iteration(c, &value);
        let mut vector = back_substitute_transpose(&self.l, &y);
        if let Some(first) = vector.iter().find(|x| !x.is_zero()) {
            if first.is_negative() {
                vector = vector.iter().map(|x| -x).collect();
            }
        }
        Eigenpair { value, vector, gap }
    }
}

/// One-shot lowest eigenpair of `H c = E W c`.
pub fn lowest_generalized(h: &RealMatrix, w: &RealMatrix, digits: u32) -> Result<Eigenpair> {
    let rb = ReducedBasis::new(w, digits)?;
    Ok(rb.lowest(&rb.reduce(h)))
}

/// `max_i |((H - E W) c)_i|`.
pub fn residual(h: &RealMatrix, w: &RealMatrix, e: &Real, c: &[Real]) -> Real {
    let hc = h.mul_vec(c);
    let wc = w.mul_vec(c);
    let bits = e.precision();
    hc.iter().zip(&wc).fold(Real::zero(bits), |acc, (a, b)| acc.max((a - &(e * b)).abs()))
}
