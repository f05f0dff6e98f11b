//! Parametric boundary arcs.
//!
//! Every curve is exposed over the unit interval `t ∈ [0, 1]`; internally a
//! [`Shape`] is evaluated at its native parameter `s = s0 + t (s1 - s0)`.
//! Swapping `s0` and `s1` reverses the orientation, and restricting the window
//! yields a sub-arc without copying any geometry logic.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Point;

/// Native geometry of a curve, evaluated at its own parameter `s`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Shape {
    /// `a + s (b - a)`.
    Segment { a: Point, b: Point },
    /// `center + radius e^{i s}`, `s` an angle.
    Arc { center: Point, radius: f64 },
    /// `Σ c_k s^k` with complex coefficients and real `s`.
    Polynomial { coeffs: Vec<Point> },
    /// Piecewise linear through `points`, chord-length parameter in `[0, 1]`.
    Polyline { points: Vec<Point>, knots: Vec<f64> },
    /// Natural cubic spline through `points`, chord-length parameter in `[0, 1]`.
    Spline {
        points: Vec<Point>,
        knots: Vec<f64>,
        moments: Vec<Point>,
    },
    /// Polar rose `center + (r0 + amp cos(n s)) e^{i s}`.
    Rose {
        center: Point,
        r0: f64,
        amp: f64,
        n: u32,
    },
    /// Astroid arc `offset + (1 - |s|)^{3/2} + i sgn(s) |s|^{3/2}`, which is the
    /// usual `cos³τ + i sin³τ` with `s = sin τ |sin τ|`. The speed stays bounded
    /// away from zero at the cusp `s = 0` and at the ends `s = ±1`.
    Astroid { offset: Point },
}

impl Shape {
    fn eval(&self, s: f64) -> Point {
        match self {
            Shape::Segment { a, b } => a + (b - a) * s,
            Shape::Arc { center, radius } => center + Complex64::from_polar(*radius, s),
            Shape::Polynomial { coeffs } => coeffs
                .iter()
                .rev()
                .fold(Complex64::new(0.0, 0.0), |acc, c| acc * s + c),
            Shape::Polyline { points, knots } => {
                let k = segment_index(knots, s);
                let h = knots[k + 1] - knots[k];
                let u = (s - knots[k]) / h;
                points[k] + (points[k + 1] - points[k]) * u
            }
            Shape::Spline {
                points,
                knots,
                moments,
            } => {
                let k = segment_index(knots, s);
                let h = knots[k + 1] - knots[k];
                let a = (knots[k + 1] - s) / h;
                let b = (s - knots[k]) / h;
                points[k] * a
                    + points[k + 1] * b
                    + (moments[k] * (a * a * a - a) + moments[k + 1] * (b * b * b - b))
                        * (h * h / 6.0)
            }
            Shape::Rose { center, r0, amp, n } => {
                let r = r0 + amp * (*n as f64 * s).cos();
                center + Complex64::from_polar(r, s)
            }
            Shape::Astroid { offset } => {
                let (a, q) = (s.abs().min(1.0), (1.0 - s.abs()).max(0.0));
                offset + Complex64::new(q * q.sqrt(), s.signum() * a * a.sqrt())
            }
        }
    }

    fn deriv(&self, s: f64) -> Point {
        match self {
            Shape::Segment { a, b } => b - a,
            Shape::Arc { radius, .. } => Complex64::from_polar(*radius, s) * Complex64::i(),
            Shape::Polynomial { coeffs } => coeffs
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(Complex64::new(0.0, 0.0), |acc, (k, c)| {
                    acc * s + c * k as f64
                }),
            Shape::Polyline { points, knots } => {
                let k = segment_index(knots, s);
                (points[k + 1] - points[k]) / (knots[k + 1] - knots[k])
            }
            Shape::Spline {
                points,
                knots,
                moments,
            } => {
                let k = segment_index(knots, s);
                let h = knots[k + 1] - knots[k];
                let a = (knots[k + 1] - s) / h;
                let b = (s - knots[k]) / h;
                (points[k + 1] - points[k]) / h
                    + (moments[k + 1] * (3.0 * b * b - 1.0) - moments[k] * (3.0 * a * a - 1.0))
                        * (h / 6.0)
            }
            Shape::Rose { r0, amp, n, .. } => {
                let nf = *n as f64;
                let r = r0 + amp * (nf * s).cos();
                let dr = -amp * nf * (nf * s).sin();
                Complex64::from_polar(1.0, s) * Complex64::new(dr, r)
            }
            Shape::Astroid { .. } => {
                let (a, q) = (s.abs().min(1.0), (1.0 - s.abs()).max(0.0));
                Complex64::new(-1.5 * s.signum() * q.sqrt(), 1.5 * a.sqrt())
            }
        }
    }
}

fn segment_index(knots: &[f64], s: f64) -> usize {
    let last = knots.len() - 2;
    match knots.binary_search_by(|k| k.partial_cmp(&s).unwrap_or(std::cmp::Ordering::Less)) {
        Ok(i) => i.min(last),
        Err(0) => 0,
        Err(i) => (i - 1).min(last),
    }
}

fn chord_knots(points: &[Point]) -> Result<Vec<f64>> {
    if points.len() < 2 {
        return Err(Error::Curve("need at least two points".into()));
    }
    let mut knots = Vec::with_capacity(points.len());
    knots.push(0.0);
    let mut acc = 0.0;
    for w in points.windows(2) {
        let d = (w[1] - w[0]).norm();
        if d == 0.0 {
            return Err(Error::Curve("repeated consecutive points".into()));
        }
        acc += d;
        knots.push(acc);
    }
    for k in knots.iter_mut() {
        *k /= acc;
    }
    Ok(knots)
}

/// Second-derivative moments of the natural cubic spline (tridiagonal solve).
fn natural_moments(points: &[Point], knots: &[f64]) -> Vec<Point> {
    let n = points.len();
    let mut m = vec![Complex64::new(0.0, 0.0); n];
    if n < 3 {
        return m;
    }
    let interior = n - 2;
    let mut diag = vec![0.0; interior];
    let mut upper = vec![0.0; interior];
    let mut rhs = vec![Complex64::new(0.0, 0.0); interior];
    for i in 1..n - 1 {
        let h0 = knots[i] - knots[i - 1];
        let h1 = knots[i + 1] - knots[i];
        diag[i - 1] = (h0 + h1) / 3.0;
        upper[i - 1] = h1 / 6.0;
        rhs[i - 1] = (points[i + 1] - points[i]) / h1 - (points[i] - points[i - 1]) / h0;
    }
    // Thomas algorithm; the lower diagonal equals the shifted upper one.
    for i in 1..interior {
        let w = upper[i - 1] / diag[i - 1];
        diag[i] -= w * upper[i - 1];
        let prev = rhs[i - 1];
        rhs[i] -= prev * w;
    }
    let mut x = vec![Complex64::new(0.0, 0.0); interior];
    for i in (0..interior).rev() {
        let next = if i + 1 < interior {
            x[i + 1]
        } else {
            Complex64::new(0.0, 0.0)
        };
        x[i] = (rhs[i] - next * upper[i]) / diag[i];
    }
    m[1..n - 1].copy_from_slice(&x);
    m
}

/// A boundary arc over the unit parameter interval.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub shape: Shape,
    /// Native parameter at `t = 0`.
    pub s0: f64,
    /// Native parameter at `t = 1`.
    pub s1: f64,
}

impl Curve {
    pub fn segment(a: Point, b: Point) -> Self {
        Self {
            shape: Shape::Segment { a, b },
            s0: 0.0,
            s1: 1.0,
        }
    }

    /// Circular arc from angle `start` to angle `end` (counter-clockwise when `end > start`).
    pub fn arc(center: Point, radius: f64, start: f64, end: f64) -> Self {
        Self {
            shape: Shape::Arc { center, radius },
            s0: start,
            s1: end,
        }
    }

    pub fn polynomial(coeffs: Vec<Point>, s0: f64, s1: f64) -> Self {
        Self {
            shape: Shape::Polynomial { coeffs },
            s0,
            s1,
        }
    }

    pub fn polyline(points: Vec<Point>) -> Result<Self> {
        let knots = chord_knots(&points)?;
        Ok(Self {
            shape: Shape::Polyline { points, knots },
            s0: 0.0,
            s1: 1.0,
        })
    }

    pub fn spline(points: Vec<Point>) -> Result<Self> {
        let knots = chord_knots(&points)?;
        let moments = natural_moments(&points, &knots);
        Ok(Self {
            shape: Shape::Spline {
                points,
                knots,
                moments,
            },
            s0: 0.0,
            s1: 1.0,
        })
    }

    pub fn rose(center: Point, r0: f64, amp: f64, n: u32, theta0: f64, theta1: f64) -> Self {
        Self {
            shape: Shape::Rose { center, r0, amp, n },
            s0: theta0,
            s1: theta1,
        }
    }

    /// Astroid arc between `w0` and `w1` where `w = sin τ |sin τ| ∈ [-1, 1]`.
    pub fn astroid(offset: Point, w0: f64, w1: f64) -> Self {
        Self {
            shape: Shape::Astroid { offset },
            s0: w0,
            s1: w1,
        }
    }

    #[inline]
    fn native(&self, t: f64) -> f64 {
        if t == 0.0 {
            self.s0
        } else if t == 1.0 {
            self.s1
        } else {
            self.s0 + t * (self.s1 - self.s0)
        }
    }

    /// Point at `t ∈ [0, 1]`.
    pub fn point(&self, t: f64) -> Result<Point> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::ParameterDomain(t));
        }
        Ok(self.eval(t))
    }

    /// Unchecked evaluation; callers guarantee `t ∈ [0, 1]`.
    #[inline]
    pub fn eval(&self, t: f64) -> Point {
        self.shape.eval(self.native(t))
    }

    /// Derivative with respect to `t`.
    #[inline]
    pub fn tangent(&self, t: f64) -> Point {
        self.shape.deriv(self.native(t)) * (self.s1 - self.s0)
    }

    pub fn start(&self) -> Point {
        self.eval(0.0)
    }

    pub fn end(&self) -> Point {
        self.eval(1.0)
    }

    pub fn reversed(&self) -> Self {
        Self {
            shape: self.shape.clone(),
            s0: self.s1,
            s1: self.s0,
        }
    }

    /// Sub-arc between unit parameters `ta` and `tb` (reversed when `tb < ta`).
    pub fn sub(&self, ta: f64, tb: f64) -> Self {
        Self {
            shape: self.shape.clone(),
            s0: self.native(ta),
            s1: self.native(tb),
        }
    }

    /// `n + 1` equally spaced samples in `t`.
    pub fn sample(&self, n: usize) -> Vec<Point> {
        (0..=n).map(|k| self.eval(k as f64 / n as f64)).collect()
    }

    pub fn is_straight(&self) -> bool {
        matches!(self.shape, Shape::Segment { .. })
    }

    /// Approximate arc length by composite Gauss quadrature on the speed.
    pub fn length(&self) -> f64 {
        const NODES: [f64; 3] = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
        const WEIGHTS: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];
        let pieces = 64;
        let mut len = 0.0;
        for k in 0..pieces {
            let a = k as f64 / pieces as f64;
            let h = 1.0 / pieces as f64;
            for (x, w) in NODES.iter().zip(WEIGHTS) {
                len += w * 0.5 * h * self.tangent(a + 0.5 * h * (1.0 + x)).norm();
            }
        }
        len
    }

    /// Parameter of the point on the curve nearest to `z` (dense search, then
    /// Newton on the squared distance).
    pub fn project(&self, z: Point) -> f64 {
        let n = 512;
        let mut best = 0.0;
        let mut best_d = f64::INFINITY;
        for k in 0..=n {
            let t = k as f64 / n as f64;
            let d = (self.eval(t) - z).norm_sqr();
            if d < best_d {
                best_d = d;
                best = t;
            }
        }
        let mut t: f64 = best;
        let h = 1e-6;
        for _ in 0..50 {
            let g = |t: f64| {
                let t = t.clamp(0.0, 1.0);
                let d = self.eval(t) - z;
                let tan = self.tangent(t);
                d.re * tan.re + d.im * tan.im
            };
            let g0 = g(t);
            let dg = (g(t + h) - g(t - h)) / (2.0 * h);
            if dg.abs() < 1e-300 {
                break;
            }
            let next = (t - g0 / dg).clamp(0.0, 1.0);
            if (next - t).abs() < 1e-15 {
                t = next;
                break;
            }
            t = next;
        }
        t
    }

    /// Unit parameter of `z` on the curve or its natural extension beyond the
    /// ends (Gauss–Newton from the nearest point of the arc).
    pub fn param_of(&self, z: Point) -> f64 {
        let mut t = self.project(z);
        for _ in 0..50 {
            let d = self.eval(t) - z;
            let tan = self.tangent(t);
            let step = (d.re * tan.re + d.im * tan.im) / tan.norm_sqr();
            if !step.is_finite() {
                break;
            }
            t -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        t
    }
}

/// Samples a closed chain of curves as one polygon (without repeating the
/// closing point).
pub fn chain_polygon(chain: &[Curve], per_curve: usize) -> Vec<Point> {
    let mut pts = Vec::with_capacity(chain.len() * per_curve);
    for c in chain {
        for k in 0..per_curve {
            pts.push(c.eval(k as f64 / per_curve as f64));
        }
    }
    pts
}

/// Shoelace signed area (positive for counter-clockwise polygons).
pub fn signed_area(poly: &[Point]) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|i| {
            let a = poly[i];
            let b = poly[(i + 1) % n];
            a.re * b.im - b.re * a.im
        })
        .sum::<f64>()
        * 0.5
}

/// Winding number of a closed polygon around `z`.
pub fn winding_number(poly: &[Point], z: Point) -> i32 {
    let n = poly.len();
    let mut wn = 0;
    for i in 0..n {
        let a = poly[i] - z;
        let b = poly[(i + 1) % n] - z;
        if a.im <= 0.0 {
            if b.im > 0.0 && cross(a, b) > 0.0 {
                wn += 1;
            }
        } else if b.im <= 0.0 && cross(a, b) < 0.0 {
            wn -= 1;
        }
    }
    wn
}

#[inline]
pub(crate) fn cross(a: Point, b: Point) -> f64 {
    a.re * b.im - a.im * b.re
}

/// Proper crossing of two segments. Orientations within rounding of zero
/// count as collinear, so pieces of one straight line never cross.
fn segments_cross(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let span = (p2 - p1).norm().max((q2 - q1).norm()).max((q1 - p1).norm());
    let tol = 1e-12 * span * span;
    let side = |d: f64| {
        if d > tol {
            1
        } else if d < -tol {
            -1
        } else {
            0
        }
    };
    let d1 = side(cross(p2 - p1, q1 - p1));
    let d2 = side(cross(p2 - p1, q2 - p1));
    let d3 = side(cross(q2 - q1, p1 - q1));
    let d4 = side(cross(q2 - q1, p2 - q1));
    d1 * d2 < 0 && d3 * d4 < 0
}

/// True when the closed polygon has no crossing between non-adjacent edges.
pub fn polygon_is_simple(poly: &[Point]) -> bool {
    let n = poly.len();
    for i in 0..n {
        let (a1, a2) = (poly[i], poly[(i + 1) % n]);
        for j in i + 2..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            if segments_cross(a1, a2, poly[j], poly[(j + 1) % n]) {
                return false;
            }
        }
    }
    true
}

/// True when the sampled open curve does not cross itself.
pub fn curve_is_simple(c: &Curve, samples: usize) -> bool {
    let pts = c.sample(samples);
    let n = pts.len() - 1;
    for i in 0..n {
        for j in i + 2..n {
            if segments_cross(pts[i], pts[i + 1], pts[j], pts[j + 1]) {
                return false;
            }
        }
    }
    true
}
