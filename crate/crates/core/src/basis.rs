//! Legendre kernels and the hierarchic shape functions on `[-1, 1]²`.
//!
//! Modes are ordered as 4 nodal functions, then `p - 1` side modes for each of
//! the four sides, then `(p - 1)²` internal (bubble) modes.

/// `P_n(x)` and `P'_n(x)` by the three-term recursion.
pub fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut vals = vec![0.0; n + 1];
    let mut ders = vec![0.0; n + 1];
    legendre_table(n, x, &mut vals, &mut ders);
    (vals[n], ders[n])
}

/// Fills `vals[k] = P_k(x)` and `ders[k] = P'_k(x)` for `k ≤ n`.
pub fn legendre_table(n: usize, x: f64, vals: &mut [f64], ders: &mut [f64]) {
    vals[0] = 1.0;
    ders[0] = 0.0;
    if n == 0 {
        return;
    }
    vals[1] = x;
    ders[1] = 1.0;
    for k in 1..n {
        let kf = k as f64;
        vals[k + 1] = ((2.0 * kf + 1.0) * x * vals[k] - kf * vals[k - 1]) / (kf + 1.0);
        // P'_{k+1} = P'_{k-1} + (2k + 1) P_k avoids dividing by 1 - x².
        ders[k + 1] = ders[k - 1] + (2.0 * kf + 1.0) * vals[k];
    }
}

/// `φ_n(ξ) = (P_n - P_{n-2}) / √(2(2n-1))` and `φ'_n = √((2n-1)/2) P_{n-1}` for `n ≥ 2`.
pub fn integrated_legendre(n: usize, xi: f64) -> (f64, f64) {
    assert!(n >= 2, "integrated Legendre polynomials start at n = 2");
    let mut vals = vec![0.0; n + 1];
    let mut ders = vec![0.0; n + 1];
    legendre_table(n, xi, &mut vals, &mut ders);
    let nf = n as f64;
    (
        (vals[n] - vals[n - 2]) / (2.0 * (2.0 * nf - 1.0)).sqrt(),
        ((2.0 * nf - 1.0) / 2.0).sqrt() * vals[n - 1],
    )
}

/// Values and derivatives of `1, φ_2, …, φ_p` style 1D factors at `x`:
/// index 0 is `(1 - x)/2`, index 1 is `(1 + x)/2`, index `k ≥ 2` is `φ_k`.
fn factors(p: usize, x: f64, v: &mut [f64], d: &mut [f64], pv: &mut [f64], pd: &mut [f64]) {
    legendre_table(p.max(1), x, pv, pd);
    v[0] = 0.5 * (1.0 - x);
    d[0] = -0.5;
    v[1] = 0.5 * (1.0 + x);
    d[1] = 0.5;
    for n in 2..=p {
        let nf = n as f64;
        v[n] = (pv[n] - pv[n - 2]) / (2.0 * (2.0 * nf - 1.0)).sqrt();
        d[n] = ((2.0 * nf - 1.0) / 2.0).sqrt() * pv[n - 1];
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Vertex function of reference corner `0..4`: (−1,−1), (1,−1), (1,1), (−1,1).
    Nodal(usize),
    /// Side `0..4` (bottom, right, top, left) with polynomial degree `2..=p`.
    Side(usize, usize),
    /// `φ_i(ξ) φ_j(η)`.
    Internal(usize, usize),
}

/// The hierarchic basis of order `p` on the reference square.
#[derive(Clone, Debug)]
pub struct ShapeSet {
    pub p: usize,
    modes: Vec<Mode>,
}

impl ShapeSet {
    pub fn new(p: usize) -> Self {
        assert!(p >= 1, "polynomial order must be at least 1");
        let mut modes: Vec<Mode> = (0..4).map(Mode::Nodal).collect();
        for s in 0..4 {
            modes.extend((2..=p).map(|i| Mode::Side(s, i)));
        }
        for i in 2..=p {
            modes.extend((2..=p).map(|j| Mode::Internal(i, j)));
        }
        Self { p, modes }
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    /// Index of side mode of degree `i` on side `s`.
    pub fn side_index(&self, s: usize, i: usize) -> usize {
        4 + s * (self.p - 1) + (i - 2)
    }

    pub fn internal_start(&self) -> usize {
        4 + 4 * (self.p - 1)
    }

    /// Value and gradient `(∂ξ, ∂η)` of one mode.
    pub fn eval(&self, mode: usize, xi: f64, eta: f64) -> (f64, [f64; 2]) {
        let mut v = vec![0.0; self.len()];
        let mut gx = vec![0.0; self.len()];
        let mut gy = vec![0.0; self.len()];
        self.eval_all(xi, eta, &mut v, &mut gx, &mut gy);
        (v[mode], [gx[mode], gy[mode]])
    }

    /// Values and reference gradients of every mode at `(ξ, η)`.
    pub fn eval_all(&self, xi: f64, eta: f64, v: &mut [f64], gx: &mut [f64], gy: &mut [f64]) {
        let p = self.p;
        let mut a = [0.0; 32];
        let mut da = [0.0; 32];
        let mut b = [0.0; 32];
        let mut db = [0.0; 32];
        let mut pv = [0.0; 32];
        let mut pd = [0.0; 32];
        assert!(p < 31, "polynomial order too high");
        factors(p, xi, &mut a, &mut da, &mut pv, &mut pd);
        factors(p, eta, &mut b, &mut db, &mut pv, &mut pd);
        // (ξ-factor, η-factor) for each nodal and side mode.
        let nodal = [(0, 0), (1, 0), (1, 1), (0, 1)];
        for (k, &(i, j)) in nodal.iter().enumerate() {
            v[k] = a[i] * b[j];
            gx[k] = da[i] * b[j];
            gy[k] = a[i] * db[j];
        }
        let mut k = 4;
        for s in 0..4 {
            for n in 2..=p {
                let (i, j) = match s {
                    0 => (n, 0),
                    1 => (1, n),
                    2 => (n, 1),
                    _ => (0, n),
                };
                v[k] = a[i] * b[j];
                gx[k] = da[i] * b[j];
                gy[k] = a[i] * db[j];
                k += 1;
            }
        }
        for i in 2..=p {
            for j in 2..=p {
                v[k] = a[i] * b[j];
                gx[k] = da[i] * b[j];
                gy[k] = a[i] * db[j];
                k += 1;
            }
        }
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, z);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(n, z);
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn low_degree_values() {
        assert_eq!(legendre(0, 0.7).0, 1.0);
        assert_eq!(legendre(1, 0.7).0, 0.7);
        assert_relative_eq!(legendre(2, 0.5).0, -0.125, epsilon = 1e-15);
        assert_relative_eq!(legendre(3, -0.3).0, -legendre(3, 0.3).0, epsilon = 1e-15);
    }

    #[test]
    fn derivative_identity_and_endpoint_limit() {
        for n in 1..=12 {
            for &x in &[-0.9, -0.31, 0.0, 0.42, 0.77] {
                let (p, dp) = legendre(n, x);
                let (pm, _) = legendre(n - 1, x);
                let nf = n as f64;
                assert_relative_eq!((1.0 - x * x) * dp, -nf * x * p + nf * pm, epsilon = 1e-12);
            }
            let nf = n as f64;
            assert_relative_eq!(legendre(n, 1.0).1, nf * (nf + 1.0) / 2.0, epsilon = 1e-12);
            let sign = if n % 2 == 0 { -1.0 } else { 1.0 };
            assert_relative_eq!(
                legendre(n, -1.0).1,
                sign * nf * (nf + 1.0) / 2.0,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn integrated_legendre_vanish_and_orthonormal_derivatives() {
        for n in 2..=12 {
            assert!(integrated_legendre(n, 1.0).0.abs() < 1e-15);
            assert!(integrated_legendre(n, -1.0).0.abs() < 1e-15);
        }
        assert_relative_eq!(
            integrated_legendre(2, 0.0).0,
            -(1.5f64).sqrt() / 2.0,
            epsilon = 1e-15
        );
        let (x, w) = gauss_legendre(12);
        for i in 2..=8 {
            for j in 2..=8 {
                let s: f64 = x
                    .iter()
                    .zip(&w)
                    .map(|(&t, &wt)| wt * integrated_legendre(i, t).1 * integrated_legendre(j, t).1)
                    .sum();
                assert_relative_eq!(s, if i == j { 1.0 } else { 0.0 }, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn gauss_rule_integrates_polynomials() {
        for n in 1..=16 {
            let (x, w) = gauss_legendre(n);
            for k in 0..2 * n {
                let exact = if k % 2 == 0 {
                    2.0 / (k as f64 + 1.0)
                } else {
                    0.0
                };
                let s: f64 = x
                    .iter()
                    .zip(&w)
                    .map(|(&t, &wt)| wt * t.powi(k as i32))
                    .sum();
                assert_relative_eq!(s, exact, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn mode_count_and_point_values() {
        for p in 1..=12 {
            assert_eq!(ShapeSet::new(p).len(), 4 + 4 * (p - 1) + (p - 1) * (p - 1));
        }
        let s = ShapeSet::new(4);
        for k in 0..4 {
            let (v, _) = s.eval(k, 1.0, 1.0);
            assert_eq!(v, if k == 2 { 1.0 } else { 0.0 });
        }
        let (v, _) = s.eval(s.internal_start(), 0.0, 0.0);
        assert_relative_eq!(v, 0.375, epsilon = 1e-15);
    }

    #[test]
    fn side_modes_vanish_off_their_side() {
        let p = 6;
        let s = ShapeSet::new(p);
        let corners = [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)];
        let mut v = vec![0.0; s.len()];
        let (mut gx, mut gy) = (v.clone(), v.clone());
        for side in 0..4 {
            for t in [-0.8, -0.2, 0.35, 0.9] {
                for other in 0..4 {
                    let (a, b) = (corners[other], corners[(other + 1) % 4]);
                    let (x, y) = (
                        a.0 + (b.0 - a.0) * (t + 1.0) / 2.0,
                        a.1 + (b.1 - a.1) * (t + 1.0) / 2.0,
                    );
                    s.eval_all(x, y, &mut v, &mut gx, &mut gy);
                    for i in 2..=p {
                        let val = v[s.side_index(side, i)];
                        if other != side {
                            assert!(
                                val.abs() < 1e-15,
                                "side {side} mode {i} on side {other}: {val}"
                            );
                        }
                    }
                    for k in s.internal_start()..s.len() {
                        assert!(v[k].abs() < 1e-15);
                    }
                }
            }
            for &(x, y) in &corners {
                s.eval_all(x, y, &mut v, &mut gx, &mut gy);
                for i in 2..=p {
                    assert!(v[s.side_index(side, i)].abs() < 1e-15);
                }
            }
        }
    }
}
