//! Dense reference implementations built from Kronecker products, kept
//! independent of the library's sparse and matrix-free code paths.
#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Single-spin basis is (down, up), so sigma^z = diag(-1, 1).
pub fn sigma_z() -> CMat {
    CMat::from_row_slice(2, 2, &[c(-1.0), c(0.0), c(0.0), c(1.0)])
}

pub fn sigma_x() -> CMat {
    CMat::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)])
}

/// `op` on spin `k` of `n`; spin k is bit k of the basis index.
pub fn site(n: usize, k: usize, op: &CMat) -> CMat {
    let mut out = CMat::identity(1, 1);
    for pos in (0..n).rev() {
        let factor = if pos == k { op.clone() } else { CMat::identity(2, 2) };
        out = out.kronecker(&factor);
    }
    out
}

/// Schedule functions written out directly.
pub fn s_of(t: f64, tau: f64) -> f64 {
    let x = t / tau;
    if x <= 1.0 / 3.0 {
        1.0 - 1.95 * x
    } else if x <= 2.0 / 3.0 {
        0.35
    } else {
        -0.95 + 1.95 * x
    }
}

pub fn g_of(t: f64, tau: f64) -> f64 {
    let x = t / tau;
    if x <= 1.0 / 3.0 {
        0.0
    } else if x <= 2.0 / 3.0 {
        -1.0 + 3.0 * x
    } else {
        3.0 - 3.0 * x
    }
}

pub fn a_of(s: f64) -> f64 {
    11.0 * (1.0 - 2.0 * s).max(0.0)
}

pub fn b_of(s: f64) -> f64 {
    7.57 * s
}

/// Dense `H(t) = -A/2 Sx + g h B/2 Sz + (J + J_CT) B/2 sum_edges zz`.
pub struct DenseModel {
    sx: CMat,
    sz: CMat,
    zz: CMat,
    pub tau: f64,
    pub h: f64,
    pub j: f64,
    pub j_ct: f64,
}

impl DenseModel {
    pub fn new(n: usize, edges: &[(usize, usize)], tau: f64, h: f64, j: f64, j_ct: f64) -> Self {
        let d = 1 << n;
        let mut sx = CMat::zeros(d, d);
        let mut sz = CMat::zeros(d, d);
        for k in 0..n {
            sx += site(n, k, &sigma_x());
            sz += site(n, k, &sigma_z());
        }
        let mut zz = CMat::zeros(d, d);
        for &(a, b) in edges {
            zz += site(n, a, &sigma_z()) * site(n, b, &sigma_z());
        }
        DenseModel {
            sx,
            sz,
            zz,
            tau,
            h,
            j,
            j_ct,
        }
    }

    pub fn hamiltonian(&self, t: f64) -> CMat {
        let s = s_of(t, self.tau);
        let g = g_of(t, self.tau);
        let b = b_of(s);
        &self.sx * c(-a_of(s) / 2.0) + &self.sz * c(g * self.h * b / 2.0) + &self.zz * c((self.j + self.j_ct) * b / 2.0)
    }

    /// Classical RK4 on `dpsi/dt = -i H(t) psi` with continuous `H(t)`.
    pub fn rk4(&self, psi0: &[Complex64], dt: f64) -> Vec<Complex64> {
        let steps = (self.tau / dt).round() as usize;
        let mi = Complex64::new(0.0, -1.0);
        let f = |t: f64, v: &nalgebra::DVector<Complex64>| (self.hamiltonian(t) * v) * mi;
        let mut v = nalgebra::DVector::from_column_slice(psi0);
        for k in 0..steps {
            let t = k as f64 * dt;
            let k1 = f(t, &v);
            let k2 = f(t + dt / 2.0, &(&v + &k1 * c(dt / 2.0)));
            let k3 = f(t + dt / 2.0, &(&v + &k2 * c(dt / 2.0)));
            let k4 = f(t + dt, &(&v + &k3 * c(dt)));
            v += (k1 + (k2 + k3) * c(2.0) + k4) * c(dt / 6.0);
        }
        v.iter().copied().collect()
    }
}

/// Mean and variance of `S_z / N` read from basis-state populations.
pub fn moments(populations: &[f64], n: usize) -> (f64, f64) {
    let (mut m1, mut m2) = (0.0, 0.0);
    for (i, p) in populations.iter().enumerate() {
        let m = (2 * i.count_ones() as i64 - n as i64) as f64 / n as f64;
        m1 += p * m;
        m2 += p * m * m;
    }
    (m1, m2 - m1 * m1)
}

pub fn ground(n: usize) -> Vec<Complex64> {
    let mut v = vec![c(0.0); 1 << n];
    v[0] = c(1.0);
    v
}

/// Single-spin state with depolarization `p`, rotation `theta` and
/// dephasing `delta`, in the (down, up) basis.
pub fn local_single(p: f64, theta: f64, delta: f64) -> CMat {
    let (s, co) = theta.sin_cos();
    let coh = (1.0 - p) * (1.0 - delta) * s * co;
    CMat::from_row_slice(
        2,
        2,
        &[
            c(p / 2.0 + (1.0 - p) * s * s),
            c(coh),
            c(coh),
            c(p / 2.0 + (1.0 - p) * co * co),
        ],
    )
}

pub fn product(single: &CMat, n: usize) -> CMat {
    let mut out = CMat::identity(1, 1);
    for _ in 0..n {
        out = out.kronecker(single);
    }
    out
}

/// `(1 - P) |GHZ><GHZ| + P I / 2^N` with `|GHZ> = cos T |up..> + sin T |down..>`.
pub fn ghz_mixture(p: f64, theta: f64, n: usize) -> CMat {
    let d = 1 << n;
    let mut amp = vec![0.0; d];
    amp[d - 1] = theta.cos();
    amp[0] = theta.sin();
    CMat::from_fn(d, d, |i, j| {
        let mixed = if i == j { p / d as f64 } else { 0.0 };
        c((1.0 - p) * amp[i] * amp[j] + mixed)
    })
}

pub fn diagonal(rho: &CMat) -> Vec<f64> {
    (0..rho.nrows()).map(|i| rho[(i, i)].re).collect()
}
