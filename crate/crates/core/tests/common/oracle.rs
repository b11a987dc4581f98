//! Deliberately naive reference implementations used to check the
//! optimized kernels. Nothing here shares code with the library.
#![allow(dead_code)]

use num_complex::Complex64;

pub type Dense = Vec<Vec<Complex64>>;

const Z: Complex64 = Complex64::new(0.0, 0.0);

pub fn matmul(a: &Dense, b: &Dense) -> Dense {
    let (n, k, m) = (a.len(), b.len(), b[0].len());
    let mut c = vec![vec![Z; m]; n];
    for i in 0..n {
        for j in 0..m {
            for t in 0..k {
                c[i][j] += a[i][t] * b[t][j];
            }
        }
    }
    c
}

pub fn hermitian(a: &Dense) -> Dense {
    let (n, m) = (a.len(), a[0].len());
    (0..m).map(|j| (0..n).map(|i| a[i][j].conj()).collect()).collect()
}

/// Solves `a x = b` (several right-hand sides) by Gaussian elimination with
/// partial pivoting.
pub fn gauss_solve(a: &Dense, b: &Dense) -> Dense {
    let n = a.len();
    let m = b[0].len();
    let mut aug: Dense = (0..n)
        .map(|i| a[i].iter().chain(b[i].iter()).copied().collect())
        .collect();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&x, &y| aug[x][col].norm().partial_cmp(&aug[y][col].norm()).unwrap())
            .unwrap();
        aug.swap(col, piv);
        let p = aug[col][col];
        assert!(p.norm() > 0.0, "oracle: singular system");
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = aug[r][col] / p;
            if f == Z {
                continue;
            }
            for c in col..n + m {
                let v = aug[col][c];
                aug[r][c] -= f * v;
            }
        }
    }
    (0..n)
        .map(|i| (0..m).map(|j| aug[i][n + j] / aug[i][i]).collect())
        .collect()
}

/// `((XᴴX + λI)⁻¹ XᴴD)ᵀ` via the normal equations, returned as rows of
/// `[W_out b_out]` when `x` carries the bias column.
pub fn ridge(x: &Dense, d: &Dense, lambda: f64) -> Dense {
    let xh = hermitian(x);
    let mut a = matmul(&xh, x);
    for (i, row) in a.iter_mut().enumerate() {
        row[i] += lambda;
    }
    let b = matmul(&xh, d);
    let w = gauss_solve(&a, &b);
    (0..w[0].len()).map(|j| (0..w.len()).map(|i| w[i][j]).collect()).collect()
}

/// All eigenvalues by Householder reduction to Hessenberg form followed by
/// Wilkinson-shifted QR sweeps (Givens rotations) with deflation.
pub fn eigenvalues(a: &Dense) -> Vec<Complex64> {
    let n = a.len();
    let mut h = a.clone();
    for k in 0..n.saturating_sub(2) {
        let x: Vec<Complex64> = (k + 1..n).map(|i| h[i][k]).collect();
        let nx = x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        if nx == 0.0 {
            continue;
        }
        let phase = if x[0].norm() > 0.0 { x[0] / x[0].norm() } else { Complex64::new(1.0, 0.0) };
        let mut v = x.clone();
        v[0] += phase * nx;
        let nv = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        for c in v.iter_mut() {
            *c /= nv;
        }
        // h = (I - 2vvᴴ) h on rows k+1..
        for j in 0..n {
            let s: Complex64 = (0..v.len()).map(|t| v[t].conj() * h[k + 1 + t][j]).sum();
            for t in 0..v.len() {
                h[k + 1 + t][j] -= v[t] * s * 2.0;
            }
        }
        // h = h (I - 2vvᴴ) on columns k+1..
        for i in 0..n {
            let s: Complex64 = (0..v.len()).map(|t| h[i][k + 1 + t] * v[t]).sum();
            for t in 0..v.len() {
                h[i][k + 1 + t] -= s * v[t].conj() * 2.0;
            }
        }
    }

    let mut eig = Vec::with_capacity(n);
    let mut hi = n;
    let mut iter = 0usize;
    while hi > 0 {
        let last = hi - 1;
        if last == 0 {
            eig.push(h[0][0]);
            break;
        }
        let scale = h[last][last].norm() + h[last - 1][last - 1].norm();
        if h[last][last - 1].norm() <= 1e-15 * scale.max(1e-300) {
            eig.push(h[last][last]);
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        assert!(iter < 100_000, "oracle: QR iteration did not converge");
        let (p, q, r, s) = (h[last - 1][last - 1], h[last - 1][last], h[last][last - 1], h[last][last]);
        let tr = (p + s) * 0.5;
        let disc = ((p - s) * (p - s) * 0.25 + q * r).sqrt();
        let (m1, m2) = (tr + disc, tr - disc);
        let mut mu = if (m1 - s).norm() < (m2 - s).norm() { m1 } else { m2 };
        if iter.is_multiple_of(20) {
            mu += Complex64::new(h[last][last - 1].norm(), 0.0);
        }
        for i in 0..hi {
            h[i][i] -= mu;
        }
        let mut rots = Vec::with_capacity(hi);
        for k in 0..hi - 1 {
            let (a0, b0) = (h[k][k], h[k + 1][k]);
            let r0 = (a0.norm_sqr() + b0.norm_sqr()).sqrt();
            let (c, sn) = if r0 == 0.0 { (Complex64::new(1.0, 0.0), Z) } else { (a0 / r0, b0 / r0) };
            for j in 0..hi {
                let (x0, y0) = (h[k][j], h[k + 1][j]);
                h[k][j] = c.conj() * x0 + sn.conj() * y0;
                h[k + 1][j] = -sn * x0 + c * y0;
            }
            rots.push((c, sn));
        }
        for (k, &(c, sn)) in rots.iter().enumerate() {
            for i in 0..hi {
                let (x0, y0) = (h[i][k], h[i][k + 1]);
                h[i][k] = x0 * c + y0 * sn;
                h[i][k + 1] = -x0 * sn.conj() + y0 * c.conj();
            }
        }
        for i in 0..hi {
            h[i][i] += mu;
        }
    }
    eig
}

pub fn spectral_radius(a: &Dense) -> f64 {
    eigenvalues(a).iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// Small deterministic generator so oracle inputs do not depend on the
/// library's seeding.
pub struct Lcg(pub u64);

impl Lcg {
    pub fn next_f64(&mut self) -> f64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((self.0 >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
    }

    pub fn complex(&mut self) -> Complex64 {
        Complex64::new(self.next_f64(), self.next_f64())
    }

    pub fn below(&mut self, n: usize) -> usize {
        (((self.next_f64() + 1.0) * 0.5) * n as f64) as usize % n
    }

    pub fn dense(&mut self, rows: usize, cols: usize) -> Dense {
        (0..rows).map(|_| (0..cols).map(|_| self.complex()).collect()).collect()
    }
}

pub fn max_rel_diff(a: &Dense, b: &Dense) -> f64 {
    let mut num = 0.0f64;
    let mut den = 0.0f64;
    for (ra, rb) in a.iter().zip(b) {
        for (x, y) in ra.iter().zip(rb) {
            num = num.max((x - y).norm());
            den = den.max(y.norm());
        }
    }
    num / den.max(f64::MIN_POSITIVE)
}
