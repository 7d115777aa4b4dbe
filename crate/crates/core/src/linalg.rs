//! Small dense linear algebra: the projections, decompositions and spectral
//! quantities needed by the predictors. Everything here is sized for the
//! matrices this crate works with (tens of rows), not for general BLAS use.

#![allow(clippy::needless_range_loop)]

use std::ops::{Index, IndexMut};

use crate::error::{ensure_finite, invalid, Error, Result};

const SVD_MAX_SWEEPS: usize = 100;
const SVD_ORTHOGONALITY_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;
const SYMMETRY_TOL: f64 = 1e-10;
const QR_MAX_ITERATIONS_PER_EIGENVALUE: usize = 60;

/// Dense real matrix stored in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(invalid(format!(
                "matrix data has {} entries, expected {rows}x{cols}",
                data.len()
            )));
        }
        ensure_finite(&data, "matrix")?;
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diag(&vec![1.0; n])
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// Builds a matrix from equally sized rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(invalid(format!(
                    "row {i} has {} entries, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, data)
    }

    /// Outer product `u vᵀ`.
    pub fn outer(u: &[f64], v: &[f64]) -> Self {
        let mut data = Vec::with_capacity(u.len() * v.len());
        for &a in u {
            data.extend(v.iter().map(|&b| a * b));
        }
        Self {
            rows: u.len(),
            cols: v.len(),
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    /// Matrix product. Panics if the inner dimensions differ.
    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    /// Matrix-vector product. Panics if `v.len() != cols`.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len(), "mul_vec dimension mismatch");
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Largest absolute entry (the max-norm).
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, factor: f64) -> Matrix {
        self.map(|v| v * factor)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// `self - other`, panicking on a shape mismatch.
    pub fn sub(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    /// `self += factor * other`.
    pub fn add_scaled(&mut self, factor: f64, other: &Matrix) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += factor * b;
        }
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        if !self.is_square() {
            return false;
        }
        let scale = self.max_abs().max(1.0);
        (0..self.rows).all(|i| (0..i).all(|j| (self[(i, j)] - self[(j, i)]).abs() <= tol * scale))
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

pub fn norm2(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// Euclidean projection onto the max-norm ball of radius `radius`.
pub fn project_box(v: &[f64], radius: f64) -> Result<Vec<f64>> {
    if radius.is_nan() || radius < 0.0 {
        return Err(invalid(format!("box radius must be >= 0, got {radius}")));
    }
    ensure_finite(v, "project_box input")?;
    Ok(v.iter().map(|x| x.clamp(-radius, radius)).collect())
}

/// Euclidean projection onto the ℓ1 ball `{w : ‖w‖₁ ≤ radius}`.
///
/// Outside the ball the result is a soft-threshold of `v`; the threshold is
/// found by sorting magnitudes and scanning cumulative sums.
pub fn project_l1_ball(v: &[f64], radius: f64) -> Result<Vec<f64>> {
    if radius.is_nan() || radius < 0.0 {
        return Err(invalid(format!("l1 radius must be >= 0, got {radius}")));
    }
    ensure_finite(v, "project_l1_ball input")?;
    let l1: f64 = v.iter().map(|x| x.abs()).sum();
    if l1 <= radius {
        return Ok(v.to_vec());
    }
    if radius == 0.0 {
        return Ok(vec![0.0; v.len()]);
    }

    let mut mags: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    mags.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut threshold = 0.0;
    for (j, &m) in mags.iter().enumerate() {
        cumulative += m;
        let candidate = (cumulative - radius) / (j + 1) as f64;
        if m > candidate {
            threshold = candidate;
        } else {
            break;
        }
    }
    Ok(v.iter()
        .map(|&x| x.signum() * (x.abs() - threshold).max(0.0))
        .collect())
}

/// Thin singular value decomposition `A = U diag(σ) Vᵀ`.
#[derive(Debug, Clone)]
pub struct Svd {
    /// `rows × r` with orthonormal columns, `r = min(rows, cols)`.
    pub u: Matrix,
    /// Nonincreasing, nonnegative singular values.
    pub sigma: Vec<f64>,
    /// `cols × r` with orthonormal columns.
    pub v: Matrix,
}

impl Svd {
    pub fn reconstruct_with(&self, sigma: &[f64]) -> Matrix {
        let mut us = self.u.clone();
        for i in 0..us.rows() {
            for (j, s) in sigma.iter().enumerate() {
                us[(i, j)] *= s;
            }
        }
        us.matmul(&self.v.transpose())
    }

    pub fn reconstruct(&self) -> Matrix {
        self.reconstruct_with(&self.sigma)
    }
}

/// Singular value decomposition by one-sided (Hestenes) Jacobi rotations.
pub fn svd(a: &Matrix) -> Result<Svd> {
    ensure_finite(a.as_slice(), "svd input")?;
    if a.rows() < a.cols() {
        let t = svd_tall(&a.transpose())?;
        return Ok(Svd {
            u: t.v,
            sigma: t.sigma,
            v: t.u,
        });
    }
    svd_tall(a)
}

fn svd_tall(a: &Matrix) -> Result<Svd> {
    let (m, n) = (a.rows(), a.cols());
    // Column-major working copies keep the column rotations cache friendly.
    let mut w: Vec<Vec<f64>> = (0..n).map(|j| a.column(j)).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..n).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();

    let mut converged = n < 2;
    for _ in 0..SVD_MAX_SWEEPS {
        if converged {
            break;
        }
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = dot(&w[p], &w[p]);
                let beta = dot(&w[q], &w[q]);
                let gamma = dot(&w[p], &w[q]);
                if gamma == 0.0 || gamma.abs() <= SVD_ORTHOGONALITY_TOL * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_pair(&mut w, p, q, c, s);
                rotate_pair(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            converged = true;
        }
    }
    if !converged {
        return Err(Error::NumericFailure {
            routine: "svd",
            iterations: SVD_MAX_SWEEPS,
        });
    }

    let norms: Vec<f64> = w.iter().map(|c| norm2(c)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let sigma: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    let cutoff = sigma.first().copied().unwrap_or(0.0) * 1e-13;

    let mut u_cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut missing = Vec::new();
    for (k, &j) in order.iter().enumerate() {
        if norms[j] > cutoff && norms[j] > 0.0 {
            u_cols.push(w[j].iter().map(|x| x / norms[j]).collect());
        } else {
            u_cols.push(vec![0.0; m]);
            missing.push(k);
        }
    }
    complete_orthonormal(&mut u_cols, &missing, m);

    let mut u = Matrix::zeros(m, n);
    let mut vm = Matrix::zeros(n, n);
    for (k, &j) in order.iter().enumerate() {
        for i in 0..m {
            u[(i, k)] = u_cols[k][i];
        }
        for i in 0..n {
            vm[(i, k)] = v[j][i];
        }
    }
    Ok(Svd { u, sigma, v: vm })
}

fn rotate_pair(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (left, right) = cols.split_at_mut(q);
    let (cp, cq) = (&mut left[p], &mut right[0]);
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let (a, b) = (*x, *y);
        *x = c * a - s * b;
        *y = s * a + c * b;
    }
}

/// Fills the listed (zero) columns with unit vectors orthogonal to all others.
fn complete_orthonormal(cols: &mut [Vec<f64>], missing: &[usize], m: usize) {
    for &k in missing {
        for e in 0..m {
            let mut cand = vec![0.0; m];
            cand[e] = 1.0;
            // Two Gram-Schmidt passes.
            for _ in 0..2 {
                for (j, c) in cols.iter().enumerate() {
                    if j == k {
                        continue;
                    }
                    let proj = dot(&cand, c);
                    for (x, y) in cand.iter_mut().zip(c) {
                        *x -= proj * y;
                    }
                }
            }
            let nrm = norm2(&cand);
            if nrm > 0.5 {
                cols[k] = cand.into_iter().map(|x| x / nrm).collect();
                break;
            }
        }
    }
}

/// Eigen-decomposition of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    /// Eigenvalues in ascending order.
    pub values: Vec<f64>,
    /// Column `j` is the unit eigenvector for `values[j]`.
    pub vectors: Matrix,
}

/// Cyclic Jacobi eigen-decomposition of a symmetric matrix.
pub fn symmetric_eigen(a: &Matrix) -> Result<SymmetricEigen> {
    ensure_finite(a.as_slice(), "symmetric_eigen input")?;
    if !a.is_symmetric(SYMMETRY_TOL) {
        return Err(invalid("matrix is not symmetric"));
    }
    jacobi_eigen(a.clone(), Matrix::identity(a.rows()))
}

impl SymmetricEigen {
    /// Decomposition of `A + ψψᵀ`, where `self` decomposes `A`.
    ///
    /// Runs Jacobi on `diag(λ) + zzᵀ` with `z = Qᵀψ` and carries the
    /// rotations into `Q`. This takes one or two sweeps when `ψψᵀ` is small
    /// next to `A`, as it is for a growing Gram matrix.
    pub fn rank_one_update(&self, psi: &[f64]) -> Result<SymmetricEigen> {
        let n = self.values.len();
        if psi.len() != n {
            return Err(invalid(format!(
                "update vector has length {}, expected {n}",
                psi.len()
            )));
        }
        ensure_finite(psi, "rank_one_update vector")?;
        let z = self.vectors.transpose().mul_vec(psi);
        let mut b = Matrix::outer(&z, &z);
        for (i, &v) in self.values.iter().enumerate() {
            b[(i, i)] += v;
        }
        jacobi_eigen(b, self.vectors.clone())
    }
}

fn jacobi_eigen(mut m: Matrix, mut vecs: Matrix) -> Result<SymmetricEigen> {
    let n = m.rows();
    let scale = m.frobenius_norm();
    let a = m.as_mut_slice();
    let v = vecs.as_mut_slice();

    let mut converged = false;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j] * a[i * n + j])
            .sum();
        if off.sqrt() <= 1e-15 * scale || off == 0.0 {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = if theta.is_finite() {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                } else {
                    0.0
                };
                if t == 0.0 {
                    continue;
                }
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k * n + p], a[k * n + q]);
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p * n + k], a[q * n + k]);
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for k in 0..n {
                    let (vkp, vkq) = (v[k * n + p], v[k * n + q]);
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged {
        return Err(Error::NumericFailure {
            routine: "symmetric_eigen",
            iterations: JACOBI_MAX_SWEEPS,
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].total_cmp(&m[(j, j)]));
    let values = order.iter().map(|&i| m[(i, i)]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (k, &j) in order.iter().enumerate() {
        for i in 0..n {
            vectors[(i, k)] = vecs[(i, j)];
        }
    }
    Ok(SymmetricEigen { values, vectors })
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn symmetric_min_eigenvalue(a: &Matrix) -> Result<f64> {
    if !a.is_square() {
        return Err(invalid("symmetric_min_eigenvalue needs a square matrix"));
    }
    if a.rows() == 0 {
        return Err(invalid("empty matrix has no eigenvalues"));
    }
    Ok(symmetric_eigen(a)?.values[0])
}

/// All eigenvalues of a general square matrix as `(re, im)` pairs.
///
/// Balancing, reduction to upper Hessenberg form by stabilized elimination,
/// then Francis double-shift QR.
pub fn eigenvalues(a: &Matrix) -> Result<Vec<(f64, f64)>> {
    if !a.is_square() {
        return Err(invalid("eigenvalues need a square matrix"));
    }
    ensure_finite(a.as_slice(), "eigenvalue input")?;
    let n = a.rows();
    let mut h: Vec<Vec<f64>> = (0..n).map(|i| a.row(i).to_vec()).collect();
    balance(&mut h);
    reduce_to_hessenberg(&mut h);
    for (i, row) in h.iter_mut().enumerate() {
        for x in row.iter_mut().take(i.saturating_sub(1)) {
            *x = 0.0;
        }
    }
    hessenberg_qr(&mut h)
}

/// Largest eigenvalue magnitude of a square matrix.
pub fn spectral_radius(a: &Matrix) -> Result<f64> {
    Ok(eigenvalues(a)?
        .into_iter()
        .map(|(re, im)| re.hypot(im))
        .fold(0.0, f64::max))
}

fn balance(a: &mut [Vec<f64>]) {
    const RADIX: f64 = 2.0;
    let n = a.len();
    let sqrdx = RADIX * RADIX;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let (mut r, mut c) = (0.0, 0.0);
            for j in 0..n {
                if j != i {
                    c += a[j][i].abs();
                    r += a[i][j].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / RADIX;
            while c < g {
                f *= RADIX;
                c *= sqrdx;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= sqrdx;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                let g = 1.0 / f;
                for x in a[i].iter_mut() {
                    *x *= g;
                }
                for row in a.iter_mut() {
                    row[i] *= f;
                }
            }
        }
    }
}

fn reduce_to_hessenberg(a: &mut [Vec<f64>]) {
    let n = a.len();
    for m in 1..n.saturating_sub(1) {
        let mut x: f64 = 0.0;
        let mut pivot = m;
        for j in m..n {
            if a[j][m - 1].abs() > x.abs() {
                x = a[j][m - 1];
                pivot = j;
            }
        }
        if pivot != m {
            a.swap(pivot, m);
            for row in a.iter_mut() {
                row.swap(pivot, m);
            }
        }
        if x == 0.0 {
            continue;
        }
        for i in m + 1..n {
            let mut y = a[i][m - 1];
            if y == 0.0 {
                continue;
            }
            y /= x;
            a[i][m - 1] = y;
            for j in m..n {
                a[i][j] -= y * a[m][j];
            }
            for row in a.iter_mut() {
                row[m] += y * row[i];
            }
        }
    }
}

fn hessenberg_qr(a: &mut [Vec<f64>]) -> Result<Vec<(f64, f64)>> {
    let n = a.len();
    let mut out = vec![(0.0, 0.0); n];
    if n == 0 {
        return Ok(out);
    }
    let eps = f64::EPSILON;
    let mut anorm = 0.0;
    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            anorm += a[i][j].abs();
        }
    }
    let mut total_iterations = 0;
    let mut nn = n as isize - 1;
    let mut shift = 0.0;
    while nn >= 0 {
        let mut its = 0;
        loop {
            let nu = nn as usize;
            let mut l = nu;
            while l > 0 {
                let mut s = a[l - 1][l - 1].abs() + a[l][l].abs();
                if s == 0.0 {
                    s = anorm;
                }
                if a[l][l - 1].abs() <= eps * s {
                    a[l][l - 1] = 0.0;
                    break;
                }
                l -= 1;
            }
            let mut x = a[nu][nu];
            if l == nu {
                out[nu] = (x + shift, 0.0);
                nn -= 1;
                break;
            }
            let mut y = a[nu - 1][nu - 1];
            let mut w = a[nu][nu - 1] * a[nu - 1][nu];
            if l == nu - 1 {
                let p = 0.5 * (y - x);
                let q = p * p + w;
                let z = q.abs().sqrt();
                x += shift;
                if q >= 0.0 {
                    let z = p + z.copysign(p);
                    out[nu - 1] = (x + z, 0.0);
                    out[nu] = if z != 0.0 {
                        (x - w / z, 0.0)
                    } else {
                        (x + z, 0.0)
                    };
                } else {
                    out[nu] = (x + p, -z);
                    out[nu - 1] = (x + p, z);
                }
                nn -= 2;
                break;
            }
            if its == QR_MAX_ITERATIONS_PER_EIGENVALUE {
                return Err(Error::NumericFailure {
                    routine: "eigenvalues",
                    iterations: total_iterations,
                });
            }
            if its == 10 || its == 20 {
                // Exceptional shift.
                shift += x;
                for (i, row) in a.iter_mut().enumerate().take(nu + 1) {
                    row[i] -= x;
                }
                let s = a[nu][nu - 1].abs() + a[nu - 1][nu - 2].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            its += 1;
            total_iterations += 1;

            let (mut p, mut q, mut r);
            let mut m = nu - 2;
            loop {
                let z = a[m][m];
                let rr = x - z;
                let ss = y - z;
                p = (rr * ss - w) / a[m + 1][m] + a[m][m + 1];
                q = a[m + 1][m + 1] - z - rr - ss;
                r = a[m + 2][m + 1];
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = a[m][m - 1].abs() * (q.abs() + r.abs());
                let v = p.abs() * (a[m - 1][m - 1].abs() + z.abs() + a[m + 1][m + 1].abs());
                if u <= eps * v {
                    break;
                }
                m -= 1;
            }
            for i in m..nu - 1 {
                a[i + 2][i] = 0.0;
                if i != m {
                    a[i + 2][i - 1] = 0.0;
                }
            }
            let mut k = m;
            while k < nu {
                if k != m {
                    p = a[k][k - 1];
                    q = a[k + 1][k - 1];
                    r = if k + 1 != nu { a[k + 2][k - 1] } else { 0.0 };
                    x = p.abs() + q.abs() + r.abs();
                    if x != 0.0 {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                let s = (p * p + q * q + r * r).sqrt().copysign(p);
                if s != 0.0 {
                    if k == m {
                        if l != m {
                            a[k][k - 1] = -a[k][k - 1];
                        }
                    } else {
                        a[k][k - 1] = -s * x;
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    let z = r / s;
                    q /= p;
                    r /= p;
                    for j in k..=nu {
                        let mut pp = a[k][j] + q * a[k + 1][j];
                        if k + 1 != nu {
                            pp += r * a[k + 2][j];
                            a[k + 2][j] -= pp * z;
                        }
                        a[k + 1][j] -= pp * y;
                        a[k][j] -= pp * x;
                    }
                    let mmin = if nu < k + 3 { nu } else { k + 3 };
                    for row in a.iter_mut().take(mmin + 1).skip(l) {
                        let mut pp = x * row[k] + y * row[k + 1];
                        if k + 1 != nu {
                            pp += z * row[k + 2];
                            row[k + 2] -= pp * r;
                        }
                        row[k + 1] -= pp * q;
                        row[k] -= pp;
                    }
                }
                k += 1;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_vec_close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn box_projection_examples() {
        assert_eq!(project_box(&[0.5, -0.2], 1.0).unwrap(), vec![0.5, -0.2]);
        assert_eq!(
            project_box(&[3.0, -2.0, 0.0], 1.0).unwrap(),
            vec![1.0, -1.0, 0.0]
        );
        assert_eq!(project_box(&[1.5], 0.0).unwrap(), vec![0.0]);
        assert!(project_box(&[f64::NAN], 1.0).is_err());
        assert!(project_box(&[1.0], -1.0).is_err());
    }

    #[test]
    fn l1_projection_examples() {
        assert_eq!(project_l1_ball(&[0.3, -0.3], 1.0).unwrap(), vec![0.3, -0.3]);
        assert_vec_close(
            &project_l1_ball(&[3.0, 1.0], 2.0).unwrap(),
            &[2.0, 0.0],
            1e-15,
        );
        assert_eq!(
            project_l1_ball(&[1.0, 1.0, 1.0], 0.0).unwrap(),
            vec![0.0; 3]
        );
        assert!(project_l1_ball(&[1.0], -0.5).is_err());
    }

    #[test]
    fn l1_projection_matches_grid_search() {
        // Brute-force the nearest point of the l1 ball of radius 2 around (3, 1).
        let (mut best, mut best_d) = ((0.0, 0.0), f64::INFINITY);
        let steps = 4000;
        for i in 0..=steps {
            let a = -2.0 + 4.0 * i as f64 / steps as f64;
            let rem = 2.0 - a.abs();
            for b in [rem, -rem] {
                let d = (a - 3.0).powi(2) + (b - 1.0).powi(2);
                if d < best_d {
                    best_d = d;
                    best = (a, b);
                }
            }
        }
        let p = project_l1_ball(&[3.0, 1.0], 2.0).unwrap();
        assert!((p[0] - best.0).abs() <= 1e-3 && (p[1] - best.1).abs() <= 1e-3);
    }

    #[test]
    fn l1_projection_handles_ties() {
        let p = project_l1_ball(&[1.0, -1.0, 1.0], 1.5).unwrap();
        assert_vec_close(&p, &[0.5, -0.5, 0.5], 1e-15);
    }

    #[test]
    fn svd_of_diagonal_and_zero() {
        let s = svd(&Matrix::from_diag(&[3.0, 1.0])).unwrap();
        assert_vec_close(&s.sigma, &[3.0, 1.0], 1e-15);
        for i in 0..2 {
            assert!((s.u[(i, i)].abs() - 1.0).abs() < 1e-15);
            assert!((s.v[(i, i)].abs() - 1.0).abs() < 1e-15);
        }
        let z = svd(&Matrix::zeros(2, 2)).unwrap();
        assert_eq!(z.sigma, vec![0.0, 0.0]);
        let utu = z.u.transpose().matmul(&z.u);
        assert!(utu.sub(&Matrix::identity(2)).max_abs() < 1e-12);
    }

    #[test]
    fn svd_of_wide_and_rank_deficient() {
        let a = Matrix::from_rows(&[[1.0, 2.0, 3.0], [2.0, 4.0, 6.0]]).unwrap();
        let s = svd(&a).unwrap();
        assert_eq!(s.u.rows(), 2);
        assert_eq!(s.v.rows(), 3);
        assert!(s.sigma[1].abs() < 1e-12);
        assert!(s.reconstruct().sub(&a).frobenius_norm() < 1e-12);
        let utu = s.u.transpose().matmul(&s.u);
        assert!(utu.sub(&Matrix::identity(2)).max_abs() < 1e-12);
    }

    #[test]
    fn symmetric_min_eigenvalue_examples() {
        let half_i = Matrix::identity(2).scaled(0.5);
        assert!((symmetric_min_eigenvalue(&half_i).unwrap() - 0.5).abs() < 1e-15);
        let d = Matrix::from_rows(&[[2.0, 0.0], [0.0, 5.0]]).unwrap();
        assert_eq!(symmetric_min_eigenvalue(&d).unwrap(), 2.0);
        let e1 = Matrix::outer(&[1.0, 0.0], &[1.0, 0.0]);
        let e2 = Matrix::outer(&[0.0, 1.0], &[0.0, 1.0]);
        let g = e1.add(&e2).scaled(0.5);
        assert!((symmetric_min_eigenvalue(&g).unwrap() - 0.5).abs() < 1e-15);
        let asym = Matrix::from_rows(&[[1.0, 2.0], [0.0, 1.0]]).unwrap();
        assert!(matches!(
            symmetric_min_eigenvalue(&asym),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn symmetric_eigen_of_known_matrix() {
        let a = Matrix::from_rows(&[[2.0, 1.0], [1.0, 2.0]]).unwrap();
        let e = symmetric_eigen(&a).unwrap();
        assert_vec_close(&e.values, &[1.0, 3.0], 1e-14);
    }

    #[test]
    fn rank_one_updates_track_a_full_decomposition() {
        let psis = [
            [1.0, 0.0, 2.0],
            [0.5, -1.0, 0.0],
            [0.0, 3.0, 1.0],
            [2.0, 2.0, -1.0],
        ];
        let mut eig = SymmetricEigen {
            values: vec![0.0; 3],
            vectors: Matrix::identity(3),
        };
        let mut gram = Matrix::zeros(3, 3);
        for psi in &psis {
            gram.add_scaled(1.0, &Matrix::outer(psi, psi));
            eig = eig.rank_one_update(psi).unwrap();
            let full = symmetric_eigen(&gram).unwrap();
            assert_vec_close(&eig.values, &full.values, 1e-12);
            let q = &eig.vectors;
            let mut lambda = Matrix::zeros(3, 3);
            for i in 0..3 {
                lambda[(i, i)] = eig.values[i];
            }
            let rebuilt = q.matmul(&lambda).matmul(&q.transpose());
            assert!(rebuilt.sub(&gram).max_abs() < 1e-12);
        }
        assert!(eig.rank_one_update(&[1.0]).is_err());
    }

    #[test]
    fn spectral_radius_examples() {
        let m = Matrix::from_rows(&[[-0.5]]).unwrap();
        assert!((spectral_radius(&m).unwrap() - 0.5).abs() < 1e-15);
        assert!((spectral_radius(&Matrix::identity(3)).unwrap() - 1.0).abs() < 1e-12);
        // Rotation by 90 degrees scaled by 0.8: complex pair of modulus 0.8.
        let r = Matrix::from_rows(&[[0.0, -0.8], [0.8, 0.0]]).unwrap();
        assert!((spectral_radius(&r).unwrap() - 0.8).abs() < 1e-12);
        assert_eq!(spectral_radius(&Matrix::zeros(0, 0)).unwrap(), 0.0);
    }

    #[test]
    fn general_eigenvalues_of_dense_matrix() {
        // Upper triangular after a similarity transform keeps its diagonal spectrum.
        let t = Matrix::from_rows(&[[2.0, 1.0, 0.5], [0.0, -3.0, 1.0], [0.0, 0.0, 0.25]]).unwrap();
        let p = Matrix::from_rows(&[[1.0, 2.0, 0.0], [0.0, 1.0, 1.0], [1.0, 0.0, 1.0]]).unwrap();
        // p^{-1} for the matrix above.
        let pinv = Matrix::from_rows(&[
            [1.0 / 3.0, -2.0 / 3.0, 2.0 / 3.0],
            [1.0 / 3.0, 1.0 / 3.0, -1.0 / 3.0],
            [-1.0 / 3.0, 2.0 / 3.0, 1.0 / 3.0],
        ])
        .unwrap();
        assert!(p.matmul(&pinv).sub(&Matrix::identity(3)).max_abs() < 1e-14);
        let a = p.matmul(&t).matmul(&pinv);
        let mut ev: Vec<f64> = eigenvalues(&a).unwrap().iter().map(|e| e.0).collect();
        ev.sort_by(f64::total_cmp);
        assert_vec_close(&ev, &[-3.0, 0.25, 2.0], 1e-10);
        assert!((spectral_radius(&a).unwrap() - 3.0).abs() < 1e-10);
    }
}
