//! Small dense complex linear-algebra kernel.
//!
//! Everything is `f64`-backed; the readout solve runs at λ = 1e-12 where
//! single precision loses the system entirely.

use std::ops::{Index, IndexMut};

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::seed;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Default tolerance and iteration cap for [`spectral_radius`].
pub const SPECTRAL_TOL: f64 = 1e-9;
pub const SPECTRAL_MAX_ITER: usize = 10_000;

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::dim("CMatrix::from_vec", format!("empty shape {rows}x{cols}")));
        }
        if data.len() != rows * cols {
            return Err(Error::dim(
                "CMatrix::from_vec",
                format!("{} entries for shape {rows}x{cols}", data.len()),
            ));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_diag(diag: &[Complex64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from equal-length rows.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::dim("CMatrix::from_rows", "ragged rows"));
        }
        Self::from_vec(rows.len(), cols, rows.concat())
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

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| v * c).collect(),
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.data.iter().map(Complex64::norm_sqr).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|v| *v == ZERO)
    }

    /// `self · v` written into `out`, which is overwritten.
    pub fn mul_vec_into(&self, v: &[Complex64], out: &mut [Complex64]) {
        debug_assert_eq!(v.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (i, o) in out.iter_mut().enumerate() {
            *o = dot(self.row(i), v);
        }
    }

    /// `out += self · v`.
    pub fn mul_vec_acc(&self, v: &[Complex64], out: &mut [Complex64]) {
        debug_assert_eq!(v.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (i, o) in out.iter_mut().enumerate() {
            *o += dot(self.row(i), v);
        }
    }

    pub fn mul_vec(&self, v: &CVector) -> Result<CVector> {
        if v.len() != self.cols {
            return Err(Error::dim(
                "mul_vec",
                format!("{}x{} matrix times length-{} vector", self.rows, self.cols, v.len()),
            ));
        }
        let mut out = vec![ZERO; self.rows];
        self.mul_vec_into(v.as_slice(), &mut out);
        Ok(CVector(out))
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

#[inline]
fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    let (mut re, mut im) = (0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        re += x.re * y.re - x.im * y.im;
        im += x.re * y.im + x.im * y.re;
    }
    Complex64::new(re, im)
}

/// Non-empty complex vector.
#[derive(Debug, Clone, PartialEq)]
pub struct CVector(Vec<Complex64>);

impl CVector {
    pub fn from_vec(data: Vec<Complex64>) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::dim("CVector::from_vec", "empty vector"));
        }
        Ok(Self(data))
    }

    pub fn zeros(n: usize) -> Self {
        assert!(n > 0, "vector length must be positive");
        Self(vec![ZERO; n])
    }

    pub fn from_real(values: &[f64]) -> Result<Self> {
        Self::from_vec(values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Complex64> {
        self.0.iter()
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self(self.0.iter().map(|&v| v * c).collect())
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(Complex64::norm_sqr).sum::<f64>().sqrt()
    }
}

impl Index<usize> for CVector {
    type Output = Complex64;

    fn index(&self, i: usize) -> &Complex64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for CVector {
    fn index_mut(&mut self, i: usize) -> &mut Complex64 {
        &mut self.0[i]
    }
}

/// Complex matrix product `a · b`.
pub fn matmul(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    if a.cols != b.rows {
        return Err(Error::dim(
            "matmul",
            format!("{}x{} times {}x{}", a.rows, a.cols, b.rows, b.cols),
        ));
    }
    let mut out = CMatrix::zeros(a.rows, b.cols);
    for i in 0..a.rows {
        let dst = &mut out.data[i * b.cols..(i + 1) * b.cols];
        for (k, &aik) in a.row(i).iter().enumerate() {
            if aik == ZERO {
                continue;
            }
            for (o, &bkj) in dst.iter_mut().zip(b.row(k)) {
                *o += aik * bkj;
            }
        }
    }
    Ok(out)
}

/// Conjugate transpose.
pub fn hermitian(a: &CMatrix) -> CMatrix {
    CMatrix::from_fn(a.cols, a.rows, |i, j| a[(j, i)].conj())
}

/// Tikhonov-regularized least squares.
///
/// Returns `((Xᴴ X + λ I)⁻¹ Xᴴ D)ᵀ`, one row per column of `d`. The normal
/// matrix is factored as `L Lᴴ`; no explicit inverse is formed. When that
/// factorization breaks down for `λ > 0`, the same problem is solved by QR
/// on the augmented design.
pub fn solve_regularized(x: &CMatrix, d: &CMatrix, lambda: f64) -> Result<CMatrix> {
    if x.rows != d.rows {
        return Err(Error::dim(
            "solve_regularized",
            format!("design has {} rows, targets have {}", x.rows, d.rows),
        ));
    }
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::invalid(format!("regularization must be finite and >= 0, got {lambda}")));
    }
    let p = x.cols;
    let q = d.cols;

    // Upper triangle of Xᴴ X, then mirrored.
    let mut gram = CMatrix::zeros(p, p);
    let mut rhs = CMatrix::zeros(p, q);
    for n in 0..x.rows {
        let xr = x.row(n);
        let dr = d.row(n);
        for i in 0..p {
            let ci = xr[i].conj();
            let g = &mut gram.data[i * p..(i + 1) * p];
            for j in i..p {
                g[j] += ci * xr[j];
            }
            let r = &mut rhs.data[i * q..(i + 1) * q];
            for (o, &dv) in r.iter_mut().zip(dr) {
                *o += ci * dv;
            }
        }
    }
    for i in 0..p {
        gram[(i, i)].re += lambda;
        gram[(i, i)].im = 0.0;
        for j in 0..i {
            gram[(i, j)] = gram[(j, i)].conj();
        }
    }

    match cholesky(&gram, lambda == 0.0) {
        Ok(chol) => Ok(cholesky_solve(&chol, &rhs).transpose()),
        // A tiny λ can sit below the rounding of Xᴴ X. The minimizer is the
        // same as that of ‖[X; √λ I] B − [D; 0]‖, which QR handles with the
        // condition number of X rather than its square.
        Err(Error::Solver { .. }) if lambda > 0.0 => augmented_qr_solve(x, d, lambda),
        Err(e) => Err(e),
    }
}

/// Least squares on `[X; √λ I]` by Householder QR.
fn augmented_qr_solve(x: &CMatrix, d: &CMatrix, lambda: f64) -> Result<CMatrix> {
    let (n, p, q) = (x.rows, x.cols, d.cols);
    let m = n + p;
    // Column-major copies so each reflector touches contiguous memory.
    let mut a = vec![ZERO; m * p];
    for i in 0..n {
        for j in 0..p {
            a[j * m + i] = x[(i, j)];
        }
    }
    let root = lambda.sqrt();
    for j in 0..p {
        a[j * m + n + j] = Complex64::new(root, 0.0);
    }
    let mut b = vec![ZERO; m * q];
    for i in 0..n {
        for k in 0..q {
            b[k * m + i] = d[(i, k)];
        }
    }

    let mut v = vec![ZERO; m];
    for j in 0..p {
        let col = &a[j * m..(j + 1) * m];
        let alpha_norm = col[j..].iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if alpha_norm == 0.0 {
            return Err(Error::Solver { pivot: j, value: 0.0 });
        }
        let x0 = col[j];
        let phase = if x0.norm() > 0.0 { x0 / x0.norm() } else { ONE };
        let len = m - j;
        v[..len].copy_from_slice(&col[j..]);
        v[0] += phase * alpha_norm;
        let vnorm2: f64 = v[..len].iter().map(|c| c.norm_sqr()).sum();
        let apply = |target: &mut [Complex64]| {
            let dot: Complex64 = v[..len].iter().zip(&target[j..]).map(|(vi, t)| vi.conj() * t).sum();
            let f = dot * (2.0 / vnorm2);
            for (t, vi) in target[j..].iter_mut().zip(&v[..len]) {
                *t -= vi * f;
            }
        };
        for jj in j..p {
            apply(&mut a[jj * m..(jj + 1) * m]);
        }
        for k in 0..q {
            apply(&mut b[k * m..(k + 1) * m]);
        }
    }

    // Back substitution with R (upper p×p of a).
    let mut out = CMatrix::zeros(q, p);
    for k in 0..q {
        let bk = &b[k * m..(k + 1) * m];
        let mut sol = vec![ZERO; p];
        for i in (0..p).rev() {
            let mut s = bk[i];
            for jj in i + 1..p {
                s -= a[jj * m + i] * sol[jj];
            }
            let rii = a[i * m + i];
            if !(rii.norm() > 0.0) || !rii.is_finite() {
                return Err(Error::Solver { pivot: i, value: rii.norm() });
            }
            sol[i] = s / rii;
        }
        for (jj, v) in sol.into_iter().enumerate() {
            out[(k, jj)] = v;
        }
    }
    Ok(out)
}

/// Lower-triangular factor of a Hermitian positive-definite matrix.
///
/// With `strict` set, pivots that are zero to working precision are rejected
/// as singular; otherwise only non-positive pivots are.
fn cholesky(a: &CMatrix, strict: bool) -> Result<CMatrix> {
    let n = a.rows;
    let max_diag = (0..n).map(|i| a[(i, i)].re.abs()).fold(0.0, f64::max);
    let floor = if strict {
        n as f64 * f64::EPSILON * max_diag
    } else {
        0.0
    };
    let mut l = CMatrix::zeros(n, n);
    for j in 0..n {
        let mut diag = a[(j, j)].re;
        for k in 0..j {
            diag -= l[(j, k)].norm_sqr();
        }
        if !diag.is_finite() || diag <= floor {
            return Err(Error::Solver { pivot: j, value: diag });
        }
        let ljj = diag.sqrt();
        l[(j, j)] = Complex64::new(ljj, 0.0);
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(l)
}

/// Solves `L Lᴴ Z = B` column by column.
fn cholesky_solve(l: &CMatrix, b: &CMatrix) -> CMatrix {
    let n = l.rows;
    let mut z = b.clone();
    for c in 0..b.cols {
        for i in 0..n {
            let mut s = z[(i, c)];
            for k in 0..i {
                s -= l[(i, k)] * z[(k, c)];
            }
            z[(i, c)] = s / l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = z[(i, c)];
            for k in i + 1..n {
                s -= l[(k, i)].conj() * z[(k, c)];
            }
            z[(i, c)] = s / l[(i, i)].conj();
        }
    }
    z
}

/// Spectral radius `max |eigenvalue|` of a square matrix.
///
/// Power iteration on a two-dimensional subspace with Rayleigh–Ritz
/// extraction. The block form is needed for real matrices, whose dominant
/// eigenvalues are often a conjugate pair of equal modulus; single-vector
/// power iteration never settles on those. The start block is drawn from a
/// fixed seed, so the result is deterministic.
pub fn spectral_radius(w: &CMatrix, tol: f64, max_iter: usize) -> Result<f64> {
    if !w.is_square() {
        return Err(Error::dim("spectral_radius", format!("{}x{} is not square", w.rows, w.cols)));
    }
    let n = w.rows;
    if n == 1 {
        return Ok(w[(0, 0)].norm());
    }
    if w.is_zero() {
        return Ok(0.0);
    }

    let mut rng = seed::rng(seed::derive(0x5e_ed0f_5bec, "power-iteration"));
    let draw = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<Complex64> {
        (0..n)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect()
    };
    let mut q1 = draw(&mut rng);
    let mut q2 = draw(&mut rng);
    orthonormalize(&mut q1, &mut q2, &mut || draw(&mut rng));

    let mut z1 = vec![ZERO; n];
    let mut z2 = vec![ZERO; n];
    let mut prev = f64::NAN;
    let mut settled = 0;
    let mut estimate = 0.0;
    for _ in 0..max_iter {
        w.mul_vec_into(&q1, &mut z1);
        w.mul_vec_into(&q2, &mut z2);
        if norm(&z1) == 0.0 && norm(&z2) == 0.0 {
            // The block was annihilated: w is nilpotent on a generic subspace.
            return Ok(0.0);
        }
        let h11 = cdot(&q1, &z1);
        let h12 = cdot(&q1, &z2);
        let h21 = cdot(&q2, &z1);
        let h22 = cdot(&q2, &z2);
        let half_tr = (h11 + h22) * 0.5;
        let det = h11 * h22 - h12 * h21;
        let disc = (half_tr * half_tr - det).sqrt();
        estimate = (half_tr + disc).norm().max((half_tr - disc).norm());

        if (estimate - prev).abs() <= tol * estimate.max(f64::MIN_POSITIVE) {
            settled += 1;
            if settled >= 3 {
                return Ok(estimate);
            }
        } else {
            settled = 0;
        }
        prev = estimate;
        std::mem::swap(&mut q1, &mut z1);
        std::mem::swap(&mut q2, &mut z2);
        orthonormalize(&mut q1, &mut q2, &mut || draw(&mut rng));
    }
    if is_nilpotent(w, &draw(&mut rng)) {
        return Ok(0.0);
    }
    Err(Error::NonConvergence {
        iterations: max_iter,
        estimate,
    })
}

/// `wⁿ v` vanishing (to rounding) for a generic `v` means every eigenvalue
/// is zero. Ritz values never settle on such matrices because the iterated
/// block keeps collapsing.
fn is_nilpotent(w: &CMatrix, v: &[Complex64]) -> bool {
    let n = w.rows;
    let scale = w.norm();
    let mut cur = v.to_vec();
    let mut next = vec![ZERO; n];
    let mut bound = norm(v);
    for _ in 0..n {
        w.mul_vec_into(&cur, &mut next);
        std::mem::swap(&mut cur, &mut next);
        bound *= scale;
    }
    norm(&cur) <= 4.0 * n as f64 * f64::EPSILON * bound
}

/// Conjugated inner product `aᴴ b`.
fn cdot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(Complex64::norm_sqr).sum::<f64>().sqrt()
}

/// Gram–Schmidt on two vectors (applied twice for stability). A collapsed
/// vector is replaced by a fresh draw.
fn orthonormalize(
    q1: &mut [Complex64],
    q2: &mut [Complex64],
    fresh: &mut dyn FnMut() -> Vec<Complex64>,
) {
    let n1 = norm(q1);
    if n1 == 0.0 {
        // q2 still carries the dominant direction.
        q1.copy_from_slice(q2);
        q2.copy_from_slice(&fresh());
        return orthonormalize(q1, q2, fresh);
    }
    q1.iter_mut().for_each(|v| *v /= n1);
    for attempt in 0..4 {
        let before = norm(q2);
        for _ in 0..2 {
            let c = cdot(q1, q2);
            for (a, b) in q2.iter_mut().zip(q1.iter()) {
                *a -= c * b;
            }
        }
        let after = norm(q2);
        if after > 1e-10 * before.max(f64::MIN_POSITIVE) && after > 0.0 {
            q2.iter_mut().for_each(|v| *v /= after);
            return;
        }
        debug_assert!(attempt < 3, "could not complete orthonormal block");
        q2.copy_from_slice(&fresh());
    }
}
