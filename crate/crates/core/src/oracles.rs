//! Closed-form reference maps: rectangle → disk through the Jacobi elliptic
//! sine and a Möbius transformation, and the potential of a concentric annulus.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::Point;

/// Arithmetic–geometric mean.
pub fn agm(mut a: f64, mut b: f64) -> f64 {
    for _ in 0..64 {
        let (an, bn) = (0.5 * (a + b), (a * b).sqrt());
        if (an - bn).abs() <= 1e-16 * an {
            return an;
        }
        a = an;
        b = bn;
    }
    a
}

/// Complete elliptic integral of the first kind `K(k)`.
pub fn elliptic_k(k: f64) -> f64 {
    PI / (2.0 * agm(1.0, (1.0 - k * k).sqrt()))
}

/// `K'(k) = K(√(1 - k²))` without forming the complementary modulus, which
/// loses digits for small `k`.
pub fn elliptic_kp(k: f64) -> f64 {
    PI / (2.0 * agm(1.0, k))
}

/// `K(k)` for small modulus by the parameter series.
pub fn elliptic_k_series(k: f64) -> f64 {
    let m = k * k;
    let (mut term, mut sum) = (1.0, 1.0);
    for n in 1..10_000 {
        let r = (2 * n - 1) as f64 / (2 * n) as f64;
        term *= r * r * m;
        sum += term;
        if term < 1e-18 * sum {
            break;
        }
    }
    PI / 2.0 * sum
}

/// Real Jacobi functions `(sn, cn, dn)(u | k)` by descending Landen (AGM) iteration.
pub fn sncndn(u: f64, k: f64) -> (f64, f64, f64) {
    if k == 0.0 {
        return (u.sin(), u.cos(), 1.0);
    }
    let mut a = vec![1.0];
    let mut c = vec![k];
    let mut b = (1.0 - k * k).sqrt();
    while c.last().unwrap().abs() > 1e-16 && a.len() < 64 {
        let an = *a.last().unwrap();
        let (a1, b1, c1) = (0.5 * (an + b), (an * b).sqrt(), 0.5 * (an - b));
        a.push(a1);
        c.push(c1);
        b = b1;
    }
    let n = a.len() - 1;
    let mut phi = (1u64 << n) as f64 * a[n] * u;
    for j in (1..=n).rev() {
        phi = 0.5 * (phi + (c[j] * phi.sin() / a[j]).asin());
    }
    let (sn, cn) = phi.sin_cos();
    // dn > 0 for real arguments; the ratio form cn/cos(φ1 - φ0) is 0/0 at u = K.
    let dn = (1.0 - k * k * sn * sn).sqrt();
    (sn, cn, dn)
}

/// `sn(x + iy | k)` from real functions of modulus `k` and the complementary `k'`.
pub fn sn_complex(z: Complex64, k: f64) -> Complex64 {
    let kp = (1.0 - k * k).sqrt();
    let (s, c, d) = sncndn(z.re, k);
    let (s1, c1, d1) = sncndn(z.im, kp);
    let den = c1 * c1 + k * k * s * s * s1 * s1;
    Complex64::new(s * d1 / den, c * d * s1 * c1 / den)
}

/// Parameters of the map from `R_h = [0,1] × [0,h]` onto the unit disk.
#[derive(Clone, Copy, Debug)]
pub struct EllipticParams {
    pub h: f64,
    pub k: f64,
    pub big_k: f64,
    pub big_kp: f64,
}

impl EllipticParams {
    /// Finds `k` with `K(k') / (2 K(k)) = h` by bisection on `log k`.
    pub fn new(h: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Argument(format!(
                "rectangle modulus {h} must be positive"
            )));
        }
        let ratio = |lk: f64| {
            let k = lk.exp();
            elliptic_kp(k) / (2.0 * elliptic_k(k))
        };
        // The ratio decreases from ∞ (k → 0) to 0 (k → 1).
        let (mut lo, mut hi) = (-700.0f64, -1e-17f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if ratio(mid) > h {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let k = (0.5 * (lo + hi)).exp();
        let big_k = elliptic_k(k);
        let big_kp = elliptic_kp(k);
        Ok(Self {
            h,
            k,
            big_k,
            big_kp,
        })
    }

    pub fn aspect_residual(&self) -> f64 {
        (self.big_kp / (2.0 * self.big_k) - self.h).abs()
    }

    /// Image of `z ∈ R_h`. The corners `0, 1, 1 + ih, ih` go to the images of
    /// `-1, 1, 1/k, -1/k` under the Möbius map sending `i/√k` (the image of the
    /// centre of `R_h`) to the origin.
    pub fn rect_to_disk(&self, z: Point) -> Result<Point> {
        let tol = 1e-12;
        if z.re < -tol || z.re > 1.0 + tol || z.im < -tol || z.im > self.h + tol {
            return Err(Error::Argument(format!("{z} is outside R_h")));
        }
        let w = Complex64::new(2.0 * self.big_k * (z.re - 0.5), 2.0 * self.big_k * z.im);
        let s = sn_complex(w, self.k);
        Ok(self.mobius(s))
    }

    fn mobius(&self, s: Complex64) -> Complex64 {
        let c = Complex64::new(0.0, 1.0 / self.k.sqrt());
        (s - c) / (s + c)
    }

    /// Arguments of the disk images of `z1..z4 = 1 + ih, ih, 0, 1`.
    pub fn corner_angles(&self) -> [f64; 4] {
        let k = self.k;
        [1.0 / k, -1.0 / k, -1.0, 1.0].map(|s| self.mobius(Complex64::new(s, 0.0)).arg())
    }
}

/// Potential of the condenser `r_in < |z| < r_out`: 1 on the inner circle and
/// 0 on the outer one.
pub fn annulus_potential(r_in: f64, r_out: f64, z: Point) -> Result<f64> {
    let r = z.norm();
    if !(r_in < r_out) || r < r_in * (1.0 - 1e-12) || r > r_out * (1.0 + 1e-12) {
        return Err(Error::Argument(format!(
            "|z| = {r} outside ({r_in}, {r_out})"
        )));
    }
    Ok((r / r_out).ln() / (r_in / r_out).ln())
}

/// Circle through `e^{iα}` and `e^{iβ}` orthogonal to the unit circle, as
/// (centre, radius). Requires `0 < β - α < π`.
pub fn orthogonal_circle(alpha: f64, beta: f64) -> (Point, f64) {
    let half = 0.5 * (beta - alpha);
    (
        Point::from_polar(1.0 / half.cos(), 0.5 * (alpha + beta)),
        half.tan(),
    )
}

/// Modulus of the circular quadrilateral cut from the unit disk by the
/// orthogonal circles through `{1, e^{ia}}` and `{e^{ib}, e^{ic}}`, with the
/// two circular sides as the Dirichlet pair.
///
/// Reflecting in the unit circle doubles the domain into the exterior of two
/// disjoint disks, a ring of modulus `acosh((d² - r1² - r2²) / (2 r1 r2))`,
/// and the quadrilateral is half of it.
pub fn circular_quadrilateral_modulus(a: f64, b: f64, c: f64) -> Result<f64> {
    if !(0.0 < a && a < b && b < c && c < 2.0 * PI && a < PI && c - b < PI) {
        return Err(Error::Argument(format!(
            "angles ({a}, {b}, {c}) do not define a circular quadrilateral"
        )));
    }
    let (c1, r1) = orthogonal_circle(0.0, a);
    let (c2, r2) = orthogonal_circle(b, c);
    let d = (c1 - c2).norm();
    if d <= r1 + r2 {
        return Err(Error::Argument("the two circular sides intersect".into()));
    }
    Ok(PI / ((d * d - r1 * r1 - r2 * r2) / (2.0 * r1 * r2)).acosh())
}
