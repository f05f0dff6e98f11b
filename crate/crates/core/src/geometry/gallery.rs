//! Example domains with hand-built block layouts.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::curve::Curve;
use super::problem::{key, BlockLayout, BoundaryTag, Problem, QuadrilateralProblem, RingProblem};
use crate::error::{Error, Result};
use crate::oracles::EllipticParams;
use crate::Point;

/// Named real parameters of a gallery entry.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GalleryParams(pub BTreeMap<String, f64>);

impl GalleryParams {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, value: f64) -> Self {
        self.0.insert(name.to_string(), value);
        self
    }

    fn get(&self, name: &str, default: f64) -> f64 {
        self.0.get(name).copied().unwrap_or(default)
    }

    fn only(&self, entry: &str, allowed: &[&str]) -> Result<()> {
        match self.0.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => Err(Error::GalleryParam {
                name: k.clone(),
                value: self.0[k],
                reason: format!("`{entry}` accepts {allowed:?}"),
            }),
            None => Ok(()),
        }
    }
}

fn param_range(name: &str, value: f64, lo: f64, hi: f64, strict_lo: bool) -> Result<f64> {
    let ok = value.is_finite() && (if strict_lo { value > lo } else { value >= lo }) && value < hi;
    if ok {
        Ok(value)
    } else {
        Err(Error::GalleryParam {
            name: name.into(),
            value,
            reason: format!(
                "must lie in {}{lo}, {hi})",
                if strict_lo { "(" } else { "[" }
            ),
        })
    }
}

const NAMES: [&str; 12] = [
    "rectangle",
    "unit-disk",
    "flower",
    "circular-quadrilateral",
    "asteroid-cusp",
    "disk-in-pentagon",
    "cross-in-square",
    "circle-in-square",
    "flower-in-square",
    "circle-in-L",
    "droplet-in-square",
    "annulus",
];

pub fn gallery_names() -> &'static [&'static str] {
    &NAMES
}

/// Builds the named example domain.
pub fn gallery(name: &str, params: &GalleryParams) -> Result<Problem> {
    let problem: Problem = match name {
        "rectangle" => {
            params.only(name, &["h"])?;
            rectangle(param_range(
                "h",
                params.get("h", 1.0),
                0.0,
                f64::INFINITY,
                true,
            )?)
            .into()
        }
        "unit-disk" => {
            params.only(name, &["h", "theta1", "theta2", "theta3", "theta4"])?;
            let angles = match params.0.get("h") {
                Some(&h) => EllipticParams::new(param_range("h", h, 0.0, f64::INFINITY, true)?)?
                    .corner_angles(),
                None => [0.0, FRAC_PI_2, PI, 1.5 * PI].map(|d| d),
            };
            let mut th = [0.0; 4];
            for (j, t) in th.iter_mut().enumerate() {
                *t = params.get(&format!("theta{}", j + 1), angles[j]);
            }
            unit_disk(th)?.into()
        }
        "flower" => {
            params.only(name, &["n", "t"])?;
            let n = param_range("n", params.get("n", 6.0), 1.0, 64.0, false)?;
            let t = param_range("t", params.get("t", 0.1), 0.0, 0.4, false)?;
            flower(n as u32, t).into()
        }
        "circular-quadrilateral" => {
            params.only(name, &["a", "b", "c"])?;
            let a = params.get("a", PI / 12.0);
            let b = params.get("b", 17.0 * PI / 12.0);
            let c = params.get("c", 1.5 * PI);
            circular_quadrilateral(a, b, c)?.into()
        }
        "asteroid-cusp" => {
            params.only(name, &[])?;
            asteroid_cusp().into()
        }
        "disk-in-pentagon" => {
            params.only(name, &["r"])?;
            disk_in_pentagon(param_range("r", params.get("r", 0.4), 0.0, 1.0, true)?).into()
        }
        "cross-in-square" => {
            params.only(name, &["a", "b", "c"])?;
            let a = param_range("a", params.get("a", 0.5), 0.0, f64::INFINITY, true)?;
            let b = param_range("b", params.get("b", 1.2), a, f64::INFINITY, true)?;
            let c = param_range("c", params.get("c", 1.5), b, f64::INFINITY, true)?;
            cross_in_square(a, b, c).into()
        }
        "circle-in-square" => {
            params.only(name, &["c", "r"])?;
            let c = param_range("c", params.get("c", 1.5), 0.0, f64::INFINITY, true)?;
            let r = param_range("r", params.get("r", 0.6), 0.0, c, true)?;
            circle_in_square(c, r).into()
        }
        "flower-in-square" => {
            params.only(name, &["c", "n", "t"])?;
            let t = param_range("t", params.get("t", 0.1), 0.0, 0.4, false)?;
            let n = param_range("n", params.get("n", 6.0), 1.0, 64.0, false)?;
            let c = param_range("c", params.get("c", 1.5), 0.8 + t, f64::INFINITY, true)?;
            flower_in_square(c, n as u32, t).into()
        }
        "circle-in-L" => {
            params.only(name, &["r"])?;
            circle_in_l(param_range("r", params.get("r", 0.2), 0.0, 0.35, true)?).into()
        }
        "droplet-in-square" => {
            params.only(name, &["c", "x0"])?;
            let c = params.get("c", 1.5);
            let x0 = params.get("x0", 0.0);
            // The droplet spans [0.1, 0.733] × [-0.133, 0.133].
            if !(x0 - c < 0.0 && x0 + c > 0.75 && c > 0.15) {
                return Err(Error::GalleryParam {
                    name: "c".into(),
                    value: c,
                    reason: format!("square centred at {x0} must contain the droplet"),
                });
            }
            droplet_in_square(c, x0).into()
        }
        "annulus" => {
            params.only(name, &["r"])?;
            annulus(param_range(
                "r",
                params.get("r", (-1.0f64).exp()),
                0.0,
                1.0,
                true,
            )?)
            .into()
        }
        other => return Err(Error::UnknownGallery(other.to_string())),
    };
    problem.validate()?;
    Ok(problem)
}

/// Layout assembly with vertices merged by position.
#[derive(Default)]
struct Builder {
    layout: BlockLayout,
}

impl Builder {
    fn v(&mut self, z: Point) -> usize {
        let scale = 1e-12 * (1.0 + z.norm());
        match self
            .layout
            .vertices
            .iter()
            .position(|w| (w - z).norm() <= scale)
        {
            Some(i) => i,
            None => self.layout.vertex(z),
        }
    }

    fn quad(&mut self, zs: [Point; 4]) -> [usize; 4] {
        let ids = zs.map(|z| self.v(z));
        self.layout.block(ids);
        ids
    }

    fn curve(&mut self, c: Curve, tag: BoundaryTag) {
        let (a, b) = (self.v(c.start()), self.v(c.end()));
        self.layout.boundary(a, b, c, tag);
    }

    /// Tags every block side used once and not yet registered.
    fn close(&mut self, tag: impl Fn(Point, Point) -> BoundaryTag) {
        let index = self.layout.edge_index();
        let mut usage: BTreeMap<(usize, usize), (usize, usize, usize)> = BTreeMap::new();
        for b in &self.layout.blocks {
            for k in 0..4 {
                let (a, c) = (b[k], b[(k + 1) % 4]);
                usage.entry(key(a, c)).or_insert((a, c, 0)).2 += 1;
            }
        }
        for (k, (a, c, n)) in usage {
            if n == 1 && !index.contains_key(&k) {
                let (za, zc) = (self.layout.vertices[a], self.layout.vertices[c]);
                self.layout.edge(a, c, None, Some(tag(za, zc)));
            }
        }
    }

    fn refine(&mut self, z: Point) {
        let v = self.v(z);
        self.layout.refine.push(v);
    }
}

fn p(x: f64, y: f64) -> Point {
    Point::new(x, y)
}

/// `[0, 1] × [0, h]` with corners `1 + ih, ih, 0, 1`.
pub fn rectangle(h: f64) -> QuadrilateralProblem {
    let z = [p(0.0, 0.0), p(1.0, 0.0), p(1.0, h), p(0.0, h)];
    let mut b = Builder::default();
    b.quad(z);
    let tags = [
        BoundaryTag::Gamma3,
        BoundaryTag::Gamma4,
        BoundaryTag::Gamma1,
        BoundaryTag::Gamma2,
    ];
    let boundary: Vec<Curve> = (0..4)
        .map(|k| Curve::segment(z[k], z[(k + 1) % 4]))
        .collect();
    for (c, t) in boundary.iter().zip(tags) {
        b.curve(c.clone(), t);
    }
    QuadrilateralProblem {
        name: "rectangle".into(),
        boundary,
        corners: [2, 3, 0, 1],
        layout: b.layout,
    }
}

/// Star-shaped quadrilateral about the origin given by its four arcs
/// (`arcs[j]` runs from `z_{j+1}` to `z_{j+2}`). Each arc is split into at
/// least two boundary edges of at most `max_angle`; a circle through the
/// radial projections of their endpoints bounds the outer blocks and the core is split into kites
/// about the origin.
fn star_quadrilateral(
    name: &str,
    arcs: [Curve; 4],
    max_angle: f64,
    rho: f64,
) -> QuadrilateralProblem {
    let span = |c: &Curve| (c.end().arg() - c.start().arg()).rem_euclid(TAU);
    let mut pieces: Vec<usize> = arcs
        .iter()
        .map(|c| ((span(c) / max_angle).ceil() as usize).max(2))
        .collect();
    if pieces.iter().sum::<usize>() % 2 == 1 {
        let j = (0..4)
            .max_by(|&a, &b| {
                (span(&arcs[a]) / pieces[a] as f64).total_cmp(&(span(&arcs[b]) / pieces[b] as f64))
            })
            .unwrap();
        pieces[j] += 1;
    }
    let mut b = Builder::default();
    let mut edges = Vec::new();
    for (j, c) in arcs.iter().enumerate() {
        let n = pieces[j];
        for k in 0..n {
            edges.push((
                c.sub(k as f64 / n as f64, (k + 1) as f64 / n as f64),
                BoundaryTag::gamma(j + 1),
            ));
        }
    }
    let bz: Vec<Point> = edges.iter().map(|(c, _)| c.start()).collect();
    // Inner points on a circle keep the kites convex for wavy boundaries.
    let rmin = bz.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
    let pz: Vec<Point> = bz.iter().map(|z| z * (rho * rmin / z.norm())).collect();
    let n = bz.len();
    let o = p(0.0, 0.0);
    for j in 0..n / 2 {
        b.quad([o, pz[2 * j], pz[2 * j + 1], pz[(2 * j + 2) % n]]);
    }
    for k in 0..n {
        b.quad([pz[k], bz[k], bz[(k + 1) % n], pz[(k + 1) % n]]);
    }
    for (c, t) in edges {
        b.curve(c, t);
    }
    for c in &arcs {
        b.refine(c.start());
    }
    QuadrilateralProblem {
        name: name.into(),
        boundary: arcs.to_vec(),
        corners: [0, 1, 2, 3],
        layout: b.layout,
    }
}

/// The unit disk with corners `e^{iθ_j}`.
pub fn unit_disk(theta: [f64; 4]) -> Result<QuadrilateralProblem> {
    let mut th = theta;
    for j in 1..4 {
        th[j] = th[0] + (theta[j] - theta[0]).rem_euclid(TAU);
    }
    if !(th[0] < th[1] && th[1] < th[2] && th[2] < th[3]) {
        return Err(Error::GalleryParam {
            name: "theta".into(),
            value: theta[1],
            reason: "corner angles must be distinct and counter-clockwise".into(),
        });
    }
    let o = p(0.0, 0.0);
    let arcs = [
        Curve::arc(o, 1.0, th[0], th[1]),
        Curve::arc(o, 1.0, th[1], th[2]),
        Curve::arc(o, 1.0, th[2], th[3]),
        Curve::arc(o, 1.0, th[3], th[0] + TAU),
    ];
    Ok(star_quadrilateral("unit-disk", arcs, PI / 4.0, 0.5))
}

/// Interior of `r(θ) = 0.8 + t cos(nθ)` with corners at `θ = (j - 1)π/2`.
pub fn flower(n: u32, t: f64) -> QuadrilateralProblem {
    let o = p(0.0, 0.0);
    let arcs = [0, 1, 2, 3].map(|j| {
        Curve::rose(
            o,
            0.8,
            t,
            n,
            j as f64 * FRAC_PI_2,
            (j + 1) as f64 * FRAC_PI_2,
        )
    });
    star_quadrilateral("flower", arcs, PI / 8.0, 0.5)
}

/// Curve through `a`, `m`, `b` in that order: an arc, or a segment when the
/// points are collinear to within `1e-12` of the chord length.
fn curve_through(a: Point, m: Point, b: Point) -> Curve {
    let (u, v) = (m - a, b - a);
    let d = 2.0 * (u.re * v.im - u.im * v.re);
    let chord = v.norm();
    if d.abs() <= 1e-12 * chord * chord {
        return Curve::segment(a, b);
    }
    let (uu, vv) = (u.norm_sqr(), v.norm_sqr());
    let center = a + Complex64::new(v.im * uu - u.im * vv, u.re * vv - v.re * uu) / d;
    let radius = (a - center).norm();
    let ta = (a - center).arg();
    let dm = ((m - center).arg() - ta).rem_euclid(TAU);
    let db = ((b - center).arg() - ta).rem_euclid(TAU);
    let tb = if dm < db { ta + db } else { ta - (TAU - db) };
    Curve::arc(center, radius, ta, tb)
}

/// Circle orthogonal to the unit circle through `e^{iα}` and `e^{iβ}`.
fn orthogonal_circle(alpha: f64, beta: f64) -> (Point, f64) {
    let half = 0.5 * (beta - alpha);
    (
        Complex64::from_polar(1.0 / half.cos(), 0.5 * (alpha + beta)),
        half.tan(),
    )
}

/// Arc of the circle orthogonal to the unit circle through `e^{iα}` and
/// `e^{iβ}`, running from the first to the second point inside the disk.
fn orthogonal_arc(alpha: f64, beta: f64) -> Curve {
    let (center, radius) = orthogonal_circle(alpha, beta);
    let (za, zb) = (
        Complex64::from_polar(1.0, alpha),
        Complex64::from_polar(1.0, beta),
    );
    let sa = (za - center).arg();
    let mut sb = (zb - center).arg();
    // Clockwise about the centre, which keeps the arc inside the unit disk.
    while sb > sa {
        sb -= TAU;
    }
    Curve::arc(center, radius, sa, sb)
}

/// The unit disk minus the caps cut off by the circles orthogonal to it
/// through `{1, e^{ia}}` and `{e^{ib}, e^{ic}}`; corners `e^{ia}, e^{ib}, e^{ic}, 1`.
///
/// The common symmetric points `s, t` of the two cap circles lie on the unit
/// circle, and `w = (z - s)/(z - t)` takes the domain onto a half annulus.
/// The layout is a polar grid there, carried back exactly.
pub fn circular_quadrilateral(a: f64, b: f64, c: f64) -> Result<QuadrilateralProblem> {
    if !(0.0 < a && a < b && b < c && c < TAU && a < PI && c - b < PI) {
        return Err(Error::GalleryParam {
            name: "a, b, c".into(),
            value: a,
            reason: "need 0 < a < b < c < 2π with both caps under a half circle".into(),
        });
    }
    let o = p(0.0, 0.0);
    let (c4, r4) = orthogonal_circle(0.0, a);
    let (c2, r2) = orthogonal_circle(b, c);
    debug_assert!((c4.norm_sqr() - 1.0 - r4 * r4).abs() < 1e-12);
    debug_assert!((c2.norm_sqr() - 1.0 - r2 * r2).abs() < 1e-12);
    // Unit-circle points on the line of centres.
    let d = c2 - c4;
    let (qa, qb, qc) = (d.norm_sqr(), 2.0 * (c4.conj() * d).re, c4.norm_sqr() - 1.0);
    let disc = (qb * qb - 4.0 * qa * qc).sqrt();
    let s = c4 + d * ((-qb + disc) / (2.0 * qa));
    let t = c4 + d * ((-qb - disc) / (2.0 * qa));
    let to_w = |z: Point| (z - s) / (z - t);
    let to_z = |w: Point| (t * w - s) / (w - 1.0);
    let z = [
        Complex64::from_polar(1.0, a),
        Complex64::from_polar(1.0, b),
        Complex64::from_polar(1.0, c),
        p(1.0, 0.0),
    ];
    let (rho4, rho2) = (to_w(z[3]).norm(), to_w(z[1]).norm());
    let (r_lo, r_hi) = (rho4.min(rho2), rho4.max(rho2));
    // The image of the disk is the half plane on the side of w(0).
    let mut theta0 = to_w(z[3]).arg();
    if (to_w(o).arg() - theta0).rem_euclid(TAU) > PI {
        theta0 -= PI;
    }
    let (n_theta, n_r) = (
        4usize,
        ((r_hi / r_lo).ln() / 3f64.ln()).ceil().max(1.0) as usize,
    );
    let theta = |k: usize| theta0 + PI * k as f64 / n_theta as f64;
    let radius = |l: usize| r_lo * (r_hi / r_lo).powf(l as f64 / n_r as f64);
    let wpt = |k: usize, l: usize| Complex64::from_polar(radius(l), theta(k));
    let mut bl = Builder::default();
    let mut ids = vec![vec![0usize; n_r + 1]; n_theta + 1];
    for (k, row) in ids.iter_mut().enumerate() {
        for (l, id) in row.iter_mut().enumerate() {
            let zz = to_z(wpt(k, l));
            // Corners are placed exactly.
            let zz = z
                .iter()
                .copied()
                .find(|c| (c - zz).norm() < 1e-9)
                .unwrap_or(zz);
            *id = bl.v(zz);
        }
    }
    for k in 0..n_theta {
        for l in 0..n_r {
            bl.layout
                .block([ids[k][l], ids[k][l + 1], ids[k + 1][l + 1], ids[k + 1][l]]);
        }
    }
    let vz = |id: usize, bl: &Builder| bl.layout.vertices[id];
    // Radial edges; the two end rays lie on the unit circle.
    for k in 0..=n_theta {
        for l in 0..n_r {
            let (ia, ib) = (ids[k][l], ids[k][l + 1]);
            let mid = to_z(Complex64::from_polar(
                (radius(l) * radius(l + 1)).sqrt(),
                theta(k),
            ));
            let (za, zb) = (vz(ia, &bl), vz(ib, &bl));
            if k == 0 || k == n_theta {
                let tag = if (mid.arg().rem_euclid(TAU)) > a && mid.arg().rem_euclid(TAU) < b {
                    BoundaryTag::Gamma1
                } else {
                    BoundaryTag::Gamma3
                };
                let unit = curve_through(za, mid, zb);
                let unit = match unit.shape {
                    crate::geometry::Shape::Arc { .. } => {
                        let ta = za.arg();
                        let dm = (mid.arg() - ta).rem_euclid(TAU);
                        let db = (zb.arg() - ta).rem_euclid(TAU);
                        Curve::arc(o, 1.0, ta, if dm < db { ta + db } else { ta - (TAU - db) })
                    }
                    _ => unit,
                };
                // The chain runs counter-clockwise round the disk.
                let (ia, ib, unit) = if (zb.arg() - za.arg()).rem_euclid(TAU) < PI {
                    (ia, ib, unit)
                } else {
                    (ib, ia, unit.reversed())
                };
                bl.layout.boundary(ia, ib, unit, tag);
            } else {
                bl.layout
                    .edge(ia, ib, Some(curve_through(za, mid, zb)), None);
            }
        }
    }
    // Angular edges; the innermost and outermost lie on the cap circles.
    for l in 0..=n_r {
        for k in 0..n_theta {
            let (ia, ib) = (ids[k][l], ids[k + 1][l]);
            let mid = to_z(Complex64::from_polar(
                radius(l),
                0.5 * (theta(k) + theta(k + 1)),
            ));
            let (za, zb) = (vz(ia, &bl), vz(ib, &bl));
            if l == 0 || l == n_r {
                let cap_is_4 = (if l == 0 { r_lo } else { r_hi } - rho4).abs() < 1e-9 * r_hi;
                let (center, r, tag) = if cap_is_4 {
                    (c4, r4, BoundaryTag::Gamma4)
                } else {
                    (c2, r2, BoundaryTag::Gamma2)
                };
                // Traverse with the domain on the left, which is clockwise about the cap centre.
                let (ia, ib, za, zb) =
                    if ((zb - center).arg() - (za - center).arg()).rem_euclid(TAU) > PI {
                        (ia, ib, za, zb)
                    } else {
                        (ib, ia, zb, za)
                    };
                let ta = (za - center).arg();
                let tb = ta - (ta - (zb - center).arg()).rem_euclid(TAU);
                bl.layout
                    .boundary(ia, ib, Curve::arc(center, r, ta, tb), tag);
            } else {
                bl.layout
                    .edge(ia, ib, Some(curve_through(za, mid, zb)), None);
            }
        }
    }
    for zc in z {
        bl.refine(zc);
    }
    let arcs = [
        Curve::arc(o, 1.0, a, b),
        orthogonal_arc(b, c),
        Curve::arc(o, 1.0, c, TAU),
        orthogonal_arc(0.0, a),
    ];
    Ok(QuadrilateralProblem {
        name: "circular-quadrilateral".into(),
        boundary: arcs.to_vec(),
        corners: [0, 1, 2, 3],
        layout: bl.layout,
    })
}

/// `[-1, 1]²` with the left side replaced by the astroid arc
/// `-1 + cos³τ + i sin³τ`, corners `1 - i, 1 + i, -1 + i, -1 - i`. The astroid
/// has an inward cusp at the origin; four blocks meet there at right angles.
pub fn asteroid_cusp() -> QuadrilateralProblem {
    let offset = p(-1.0, 0.0);
    // Astroid parameter of the point at height y.
    let param = |y: f64| y.signum() * y.abs().powf(2.0 / 3.0);
    let astroid = |y: f64| Curve::astroid(offset, param(y), param(y)).start();
    let wq = param(0.25);
    let mut b = Builder::default();
    // Upper half; the lower half is its mirror image.
    let upper = {
        let o = p(0.0, 0.0);
        let q = astroid(0.25);
        let (pp, n, e, ne) = (p(-0.35, 0.45), p(0.0, 0.4), p(0.4, 0.0), p(0.4, 0.4));
        let (c, t0, t1, t2, r1, r04, r0) = (
            p(-1.0, 1.0),
            p(-0.4, 1.0),
            p(0.0, 1.0),
            p(0.4, 1.0),
            p(1.0, 1.0),
            p(1.0, 0.4),
            p(1.0, 0.0),
        );
        vec![
            [o, e, ne, n],
            [o, n, pp, q],
            [q, pp, t0, c],
            [pp, n, t1, t0],
            [n, ne, t2, t1],
            [ne, r04, r1, t2],
            [e, r0, r04, ne],
        ]
    };
    for blk in &upper {
        b.quad(*blk);
        let m = blk.map(|z| z.conj());
        b.quad([m[3], m[2], m[1], m[0]]);
    }
    for (w0, w1) in [(0.0, wq), (wq, 1.0), (0.0, -wq), (-wq, -1.0)] {
        b.curve(Curve::astroid(offset, w1, w0), BoundaryTag::Gamma3);
    }
    b.close(|za, zb| {
        if za.re == 1.0 && zb.re == 1.0 {
            BoundaryTag::Gamma1
        } else if za.im > 0.0 {
            BoundaryTag::Gamma2
        } else {
            BoundaryTag::Gamma4
        }
    });
    b.refine(p(0.0, 0.0));
    let boundary = vec![
        Curve::segment(p(1.0, -1.0), p(1.0, 1.0)),
        Curve::segment(p(1.0, 1.0), p(-1.0, 1.0)),
        Curve::astroid(offset, 1.0, -1.0),
        Curve::segment(p(-1.0, -1.0), p(1.0, -1.0)),
    ];
    QuadrilateralProblem {
        name: "asteroid-cusp".into(),
        boundary,
        corners: [0, 1, 2, 3],
        layout: b.layout,
    }
}

/// Ring between an inner curve and an outer curve, both star-shaped about
/// `center`, split into sectors at `angles` (increasing, one turn) and
/// `layers` geometrically graded radial layers.
struct Polar<'a> {
    center: Point,
    angles: Vec<f64>,
    inner: &'a dyn Fn(f64, f64) -> Curve,
    outer: &'a dyn Fn(f64, f64) -> Curve,
    layers: usize,
    cut_angle: usize,
}

impl Polar<'_> {
    fn build(&self, name: &str, refine: &[Point]) -> RingProblem {
        let n = self.angles.len();
        let th = |k: usize| {
            if k == n {
                self.angles[0] + TAU
            } else {
                self.angles[k]
            }
        };
        let inner_edges: Vec<Curve> = (0..n).map(|k| (self.inner)(th(k), th(k + 1))).collect();
        let outer_edges: Vec<Curve> = (0..n).map(|k| (self.outer)(th(k), th(k + 1))).collect();
        let lay = self.layers;
        let point = |k: usize, l: usize| -> Point {
            let (a, b) = (inner_edges[k % n].start(), outer_edges[k % n].start());
            if l == 0 {
                a
            } else if l == lay {
                b
            } else {
                let (ra, rb) = ((a - self.center).norm(), (b - self.center).norm());
                let r = ra * (rb / ra).powf(l as f64 / lay as f64);
                self.center + (a - self.center) * (r / ra)
            }
        };
        let mut b = Builder::default();
        for k in 0..n {
            for l in 0..lay {
                b.quad([
                    point(k, l),
                    point(k, l + 1),
                    point(k + 1, l + 1),
                    point(k + 1, l),
                ]);
            }
        }
        for c in &inner_edges {
            b.curve(c.clone(), BoundaryTag::Inner);
        }
        for c in &outer_edges {
            b.curve(c.clone(), BoundaryTag::Outer);
        }
        for &z in refine {
            b.refine(z);
        }
        let cut = (0..=lay).map(|l| b.v(point(self.cut_angle, l))).collect();
        RingProblem {
            name: name.into(),
            outer: outer_edges,
            inner: inner_edges.iter().rev().map(Curve::reversed).collect(),
            layout: b.layout,
            cut,
            auto_cut: false,
        }
    }
}

/// Point where the ray from the origin at angle `theta` meets the boundary
/// of the square `[-c, c]²`.
fn square_ray(c: f64, theta: f64) -> Point {
    let d = Complex64::from_polar(1.0, theta);
    d * (c / d.re.abs().max(d.im.abs()))
}

fn square_outer(c: f64) -> impl Fn(f64, f64) -> Curve {
    move |a, b| Curve::segment(square_ray(c, a), square_ray(c, b))
}

fn circle_edges(center: Point, r: f64) -> impl Fn(f64, f64) -> Curve {
    move |a, b| Curve::arc(center, r, a, b)
}

/// `r < |z| < 1`.
pub fn annulus(r: f64) -> RingProblem {
    let o = p(0.0, 0.0);
    let layers = ((1.0 / r).ln() / 3.0f64.ln()).ceil().max(1.0) as usize;
    Polar {
        center: o,
        angles: (0..8).map(|k| k as f64 * PI / 4.0).collect(),
        inner: &circle_edges(o, r),
        outer: &circle_edges(o, 1.0),
        layers,
        cut_angle: 0,
    }
    .build("annulus", &[])
}

/// Regular pentagon of apothem 1 with corners `sec(π/5) e^{2πik/5}`, minus the
/// closed disk `|z| ≤ r`.
pub fn disk_in_pentagon(r: f64) -> RingProblem {
    let o = p(0.0, 0.0);
    let half = PI / 5.0;
    // Sector edges grade geometrically away from each side midpoint, where the
    // gap to the disk is narrowest.
    let first = (0.5 * (2.0 * (1.0 - r)).sqrt()).min(half / 2.0);
    let mut steps = Vec::new();
    let mut acc = 0.0;
    let mut s = first;
    while acc + s < half - 1e-12 {
        if half - (acc + s) < s {
            break;
        }
        steps.push(acc + s);
        acc += s;
        s *= 2.0;
    }
    let mut angles = Vec::new();
    for k in 0..5 {
        let vertex = 2.0 * half * k as f64;
        let mid = vertex + half;
        angles.push(vertex);
        angles.extend(steps.iter().rev().map(|d| mid - d));
        angles.push(mid);
        angles.extend(steps.iter().map(|d| mid + d));
    }
    let pentagon = move |theta: f64| {
        let side = ((theta - half) / (2.0 * half)).round();
        let mid = half + 2.0 * half * side;
        Complex64::from_polar(1.0 / (theta - mid).cos(), theta)
    };
    let outer = move |a: f64, b: f64| Curve::segment(pentagon(a), pentagon(b));
    let layers = ((1.0 / r).ln() / 3.0f64.ln()).ceil().max(1.0) as usize;
    let corners: Vec<Point> = (0..5).map(|k| pentagon(2.0 * half * k as f64)).collect();
    Polar {
        center: o,
        angles,
        inner: &circle_edges(o, r),
        outer: &outer,
        layers,
        cut_angle: 0,
    }
    .build("disk-in-pentagon", &corners)
}

/// `[-c, c]²` minus the closed disk `|z| ≤ r`.
pub fn circle_in_square(c: f64, r: f64) -> RingProblem {
    let o = p(0.0, 0.0);
    let layers = ((c * 2f64.sqrt() / r).ln() / 3.0f64.ln()).ceil().max(1.0) as usize;
    Polar {
        center: o,
        angles: (0..16).map(|k| k as f64 * PI / 8.0).collect(),
        inner: &circle_edges(o, r),
        outer: &square_outer(c),
        layers,
        cut_angle: 0,
    }
    .build("circle-in-square", &[])
}

/// `[-c, c]²` minus the closed flower `r(θ) ≤ 0.8 + t cos(nθ)`.
pub fn flower_in_square(c: f64, n: u32, t: f64) -> RingProblem {
    let o = p(0.0, 0.0);
    let inner = move |a: f64, b: f64| Curve::rose(o, 0.8, t, n, a, b);
    Polar {
        center: o,
        angles: (0..24).map(|k| k as f64 * PI / 12.0).collect(),
        inner: &inner,
        outer: &square_outer(c),
        layers: 1,
        cut_angle: 0,
    }
    .build("flower-in-square", &[])
}

/// `G_c` minus the cross `{|x| ≤ a, |y| ≤ b} ∪ {|x| ≤ b, |y| ≤ a}`, cut along
/// the positive real axis.
pub fn cross_in_square(a: f64, b: f64, c: f64) -> RingProblem {
    let half = [0.0, a, 0.5 * (a + b), b, c];
    let mut lines: Vec<f64> = half.iter().skip(1).map(|x| -x).collect();
    lines.reverse();
    lines.extend(half);
    let in_cross = |z: Point| {
        let (x, y) = (z.re.abs(), z.im.abs());
        (x < a && y < b) || (x < b && y < a)
    };
    let mut bl = Builder::default();
    for j in 0..lines.len() - 1 {
        for i in 0..lines.len() - 1 {
            let (x0, x1, y0, y1) = (lines[i], lines[i + 1], lines[j], lines[j + 1]);
            if !in_cross(p(0.5 * (x0 + x1), 0.5 * (y0 + y1))) {
                bl.quad([p(x0, y0), p(x1, y0), p(x1, y1), p(x0, y1)]);
            }
        }
    }
    bl.close(|za, zb| {
        let on_square = |z: Point| z.re.abs() == c || z.im.abs() == c;
        if on_square(za) && on_square(zb) {
            BoundaryTag::Outer
        } else {
            BoundaryTag::Inner
        }
    });
    for (x, y) in [(b, a), (a, b)] {
        for (sx, sy) in [(1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0)] {
            bl.refine(p(sx * x, sy * y));
        }
    }
    let cut = vec![bl.v(p(b, 0.0)), bl.v(p(c, 0.0))];
    let outer = polygon(&[p(c, -c), p(c, c), p(-c, c), p(-c, -c)]);
    let cross = [
        p(b, -a),
        p(b, a),
        p(a, a),
        p(a, b),
        p(-a, b),
        p(-a, a),
        p(-b, a),
        p(-b, -a),
        p(-a, -a),
        p(-a, -b),
        p(a, -b),
        p(a, -a),
    ];
    let mut cw = cross.to_vec();
    cw.reverse();
    RingProblem {
        name: "cross-in-square".into(),
        outer,
        inner: polygon(&cw),
        layout: bl.layout,
        cut,
        auto_cut: false,
    }
}

fn polygon(z: &[Point]) -> Vec<Curve> {
    (0..z.len())
        .map(|k| Curve::segment(z[k], z[(k + 1) % z.len()]))
        .collect()
}

fn circle_chain_cw(center: Point, r: f64) -> Vec<Curve> {
    (0..4)
        .map(|k| {
            Curve::arc(
                center,
                r,
                TAU - k as f64 * FRAC_PI_2,
                TAU - (k + 1) as f64 * FRAC_PI_2,
            )
        })
        .collect()
}

/// The L-domain `(0,3)×(0,1) ∪ (0,1)×(0,2)` minus the closed disk of radius
/// `r` about `8/5 + 2i/5`. The cut is moved onto a steepest-descent line.
pub fn circle_in_l(r: f64) -> RingProblem {
    let z0 = p(1.6, 0.4);
    let mut b = Builder::default();
    // Eight sectors between the circle and the box [1.2, 2.0] × [0, 0.8].
    let box_pt = |k: usize| z0 + square_ray(0.4, k as f64 * PI / 4.0);
    let circ = |k: usize| z0 + Complex64::from_polar(r, k as f64 * PI / 4.0);
    for k in 0..8 {
        b.quad([circ(k), box_pt(k), box_pt(k + 1), circ(k + 1)]);
        b.curve(
            Curve::arc(z0, r, k as f64 * PI / 4.0, (k + 1) as f64 * PI / 4.0),
            BoundaryTag::Inner,
        );
    }
    let cell = |b: &mut Builder, x0: f64, x1: f64, y0: f64, y1: f64| {
        b.quad([p(x0, y0), p(x1, y0), p(x1, y1), p(x0, y1)]);
    };
    for (y0, y1) in [(0.0, 0.4), (0.4, 0.8)] {
        cell(&mut b, 0.0, 1.0, y0, y1);
        cell(&mut b, 1.0, 1.2, y0, y1);
        cell(&mut b, 2.0, 3.0, y0, y1);
    }
    for (x0, x1) in [(0.0, 1.0), (1.0, 1.2), (1.2, 1.6), (1.6, 2.0), (2.0, 3.0)] {
        cell(&mut b, x0, x1, 0.8, 1.0);
    }
    cell(&mut b, 0.0, 1.0, 1.0, 2.0);
    b.close(|_, _| BoundaryTag::Outer);
    b.refine(p(1.0, 1.0));
    let cut = vec![b.v(circ(6)), b.v(box_pt(6))];
    RingProblem {
        name: "circle-in-L".into(),
        outer: polygon(&[
            p(0.0, 0.0),
            p(3.0, 0.0),
            p(3.0, 1.0),
            p(1.0, 1.0),
            p(1.0, 2.0),
            p(0.0, 2.0),
        ]),
        inner: circle_chain_cw(z0, r),
        layout: b.layout,
        cut,
        auto_cut: true,
    }
}

/// The droplet curve `(45t⁶ + 75t⁴ - 525t² + 469)/640 + i (15/32) t (t² - 1)²`,
/// `t ∈ [-1, 1]`, counter-clockwise with a cusp at `t = ±1`.
fn droplet(t0: f64, t1: f64) -> Curve {
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let coeffs = vec![
        c(469.0 / 640.0, 0.0),
        c(0.0, 15.0 / 32.0),
        c(-525.0 / 640.0, 0.0),
        c(0.0, -30.0 / 32.0),
        c(75.0 / 640.0, 0.0),
        c(0.0, 15.0 / 32.0),
        c(45.0 / 640.0, 0.0),
    ];
    Curve::polynomial(coeffs, t0, t1)
}

/// `[-c, c]²` minus the closed droplet; the cut runs along the symmetry axis
/// from the droplet to the right side of the square.
pub fn droplet_in_square(c: f64, x0: f64) -> RingProblem {
    let mut b = Builder::default();
    let tip = droplet(1.0, 1.0).start();
    let d_up = droplet(0.5, 0.5).start();
    let d_dn = d_up.conj();
    let d0 = droplet(0.0, 0.0).start();
    let xd = d_up.re;
    let (left, right) = (x0 - c, x0 + c);
    // Box around the droplet; its sides sit halfway to the square when that is closer than the defaults.
    let xl = (-0.4f64).max(0.5 * (left + tip.re));
    let xr = 1.0f64.min(0.5 * (d0.re + right));
    let yb = 0.5f64.min(0.5 * (d_up.im + c));
    let (a_up, a_left, a_dn) = (p(tip.re, yb), p(xl, 0.0), p(tip.re, -yb));
    let (w_ul, w_dl) = (p(xl, yb), p(xl, -yb));
    let (x_up, x_dn, r_up, r_dn) = (p(xd, yb), p(xd, -yb), p(xr, yb), p(xr, -yb));
    let (e, s_up, s_dn) = (p(right, 0.0), p(right, yb), p(right, -yb));
    // Four right-angled blocks around the cusp.
    b.quad([tip, d_up, x_up, a_up]);
    b.quad([tip, a_up, w_ul, a_left]);
    b.quad([tip, a_left, w_dl, a_dn]);
    b.quad([tip, a_dn, x_dn, d_dn]);
    b.quad([d_dn, x_dn, r_dn, d0]);
    b.quad([d0, r_dn, s_dn, e]);
    b.quad([d0, e, s_up, r_up]);
    b.quad([d0, r_up, x_up, d_up]);
    let xs = [left, xl, tip.re, xd, xr, right];
    for w in xs.windows(2) {
        b.quad([p(w[0], yb), p(w[1], yb), p(w[1], c), p(w[0], c)]);
        b.quad([p(w[0], -c), p(w[1], -c), p(w[1], -yb), p(w[0], -yb)]);
    }
    b.quad([p(left, -yb), w_dl, a_left, p(left, 0.0)]);
    b.quad([p(left, 0.0), a_left, w_ul, p(left, yb)]);
    for (t0, t1) in [(-1.0, -0.5), (-0.5, 0.0), (0.0, 0.5), (0.5, 1.0)] {
        b.curve(droplet(t0, t1), BoundaryTag::Inner);
    }
    b.close(|_, _| BoundaryTag::Outer);
    b.refine(tip);
    let cut = vec![b.v(d0), b.v(e)];
    RingProblem {
        name: "droplet-in-square".into(),
        outer: polygon(&[p(right, -c), p(right, c), p(left, c), p(left, -c)]),
        inner: vec![droplet(1.0, -1.0)],
        layout: b.layout,
        cut,
        auto_cut: false,
    }
}
