//! Point location, field evaluation and contour tracing of the two conjugate
//! potentials, which yields the pre-image of a canonical grid.

use std::fmt::Write as _;
use std::io::Write;
use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};

use crate::basis::ShapeSet;
use crate::conjugate::{ConformalMap, MapKind};
use crate::error::{Error, Result};
use crate::femcore::DofMap;
use crate::geometry::curve::{chain_polygon, Curve};
use crate::mesh::{ElementMap, Mesh};
use crate::Point;

/// Tolerance on reference coordinates outside `[-1, 1]²`.
pub const LOCATE_DELTA: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Location {
    pub element: usize,
    pub xi: f64,
    pub eta: f64,
}

/// Value and physical gradient of a field at a point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sample {
    pub value: f64,
    pub grad: Point,
}

/// Spatial index over the elements of a mesh plus the basis needed to
/// evaluate coefficient vectors.
#[derive(Debug)]
pub struct Evaluator {
    maps: Vec<ElementMap>,
    bboxes: Vec<(Point, Point)>,
    diam: Vec<f64>,
    lo: Point,
    cell: Point,
    nx: usize,
    ny: usize,
    cells: Vec<Vec<u32>>,
    shape: ShapeSet,
    dofs: DofMap,
    last: AtomicUsize,
    pub diagonal: f64,
}

impl Evaluator {
    pub fn new(mesh: &Mesh, p: usize) -> Self {
        let maps: Vec<ElementMap> = (0..mesh.elements.len())
            .map(|e| mesh.element_map(e))
            .collect();
        let mut bboxes = Vec::with_capacity(maps.len());
        let mut diam = Vec::with_capacity(maps.len());
        for m in &maps {
            let mut lo = Point::new(f64::MAX, f64::MAX);
            let mut hi = Point::new(f64::MIN, f64::MIN);
            for i in 0..=8 {
                let t = -1.0 + 0.25 * i as f64;
                for z in [
                    m.eval(t, -1.0),
                    m.eval(t, 1.0),
                    m.eval(-1.0, t),
                    m.eval(1.0, t),
                ] {
                    lo.re = lo.re.min(z.re);
                    lo.im = lo.im.min(z.im);
                    hi.re = hi.re.max(z.re);
                    hi.im = hi.im.max(z.im);
                }
            }
            let d = (hi - lo).norm();
            // Curved sides may bulge between samples.
            let pad = Point::new(0.05 * d, 0.05 * d);
            bboxes.push((lo - pad, hi + pad));
            diam.push(d);
        }
        let (mut lo, mut hi) = (
            Point::new(f64::MAX, f64::MAX),
            Point::new(f64::MIN, f64::MIN),
        );
        for &(a, b) in &bboxes {
            lo.re = lo.re.min(a.re);
            lo.im = lo.im.min(a.im);
            hi.re = hi.re.max(b.re);
            hi.im = hi.im.max(b.im);
        }
        let n = ((maps.len() as f64).sqrt().ceil() as usize).max(1);
        let span = hi - lo;
        let (nx, ny) = if span.re >= span.im {
            (n, ((n as f64 * span.im / span.re).ceil() as usize).max(1))
        } else {
            (((n as f64 * span.re / span.im).ceil() as usize).max(1), n)
        };
        let cell = Point::new(span.re / nx as f64, span.im / ny as f64);
        let mut cells = vec![Vec::new(); nx * ny];
        let idx = |v: f64, lo: f64, w: f64, n: usize| {
            (((v - lo) / w).floor().max(0.0) as usize).min(n - 1)
        };
        for (e, &(a, b)) in bboxes.iter().enumerate() {
            for j in idx(a.im, lo.im, cell.im, ny)..=idx(b.im, lo.im, cell.im, ny) {
                for i in idx(a.re, lo.re, cell.re, nx)..=idx(b.re, lo.re, cell.re, nx) {
                    cells[j * nx + i].push(e as u32);
                }
            }
        }
        Self {
            maps,
            bboxes,
            diam,
            lo,
            cell,
            nx,
            ny,
            cells,
            shape: ShapeSet::new(p),
            dofs: DofMap::new(mesh, p),
            last: AtomicUsize::new(0),
            diagonal: span.norm(),
        }
    }

    pub fn element_map(&self, e: usize) -> &ElementMap {
        &self.maps[e]
    }

    /// Inverts the map of element `e` at `z`; returns reference coordinates,
    /// the reference-square excess and the residual.
    fn invert(&self, e: usize, z: Point) -> (f64, f64, f64, f64) {
        let m = &self.maps[e];
        // Bilinear guess first, then the exact map.
        let bilinear = ElementMap::new(m.corners, Default::default());
        let (mut xi, mut eta) = (0.0, 0.0);
        for stage in 0..2 {
            let map = if stage == 0 { &bilinear } else { m };
            for _ in 0..40 {
                let (f, fx, fy) = map.eval_with_jacobian(xi, eta);
                let r = f - z;
                let det = fx.re * fy.im - fy.re * fx.im;
                if det == 0.0 || !det.is_finite() {
                    break;
                }
                let dxi = (r.re * fy.im - fy.re * r.im) / det;
                let deta = (fx.re * r.im - r.re * fx.im) / det;
                // Keep iterates within a neighbourhood of the reference square.
                xi = (xi - dxi).clamp(-3.0, 3.0);
                eta = (eta - deta).clamp(-3.0, 3.0);
                if dxi.abs() + deta.abs() < 1e-15 {
                    break;
                }
            }
        }
        let excess = (xi.abs() - 1.0).max(eta.abs() - 1.0).max(0.0);
        let residual = (m.eval(xi, eta) - z).norm();
        (xi, eta, excess, residual)
    }

    fn accept(&self, e: usize, z: Point) -> Option<(Location, f64)> {
        let (a, b) = self.bboxes[e];
        if z.re < a.re || z.re > b.re || z.im < a.im || z.im > b.im {
            return None;
        }
        let (xi, eta, excess, residual) = self.invert(e, z);
        let tol = (1e-12 * self.diam[e]).max(4.0 * f64::EPSILON * (z.norm() + self.diagonal));
        (residual <= tol).then_some((
            Location {
                element: e,
                xi: xi.clamp(-1.0, 1.0),
                eta: eta.clamp(-1.0, 1.0),
            },
            excess,
        ))
    }

    /// Finds the element containing `z` and its reference coordinates.
    pub fn locate(&self, z: Point) -> Result<Location> {
        let last = self.last.load(Ordering::Relaxed);
        if last < self.maps.len() {
            if let Some((loc, excess)) = self.accept(last, z) {
                if excess <= LOCATE_DELTA {
                    return Ok(loc);
                }
            }
        }
        let i = ((z.re - self.lo.re) / self.cell.re).floor();
        let j = ((z.im - self.lo.im) / self.cell.im).floor();
        if !(i >= 0.0 && j >= 0.0 && (i as usize) < self.nx && (j as usize) < self.ny) {
            return Err(Error::Outside(z.re, z.im));
        }
        let mut best: Option<(Location, f64)> = None;
        for &e in &self.cells[j as usize * self.nx + i as usize] {
            if let Some((loc, excess)) = self.accept(e as usize, z) {
                if excess <= LOCATE_DELTA {
                    self.last.store(e as usize, Ordering::Relaxed);
                    return Ok(loc);
                }
                if best.as_ref().is_none_or(|b| excess < b.1) {
                    best = Some((loc, excess));
                }
            }
        }
        // Boundary points computed in floating point may sit a hair outside
        // the curved boundary; accept when the clamped image is that close.
        if let Some((loc, _)) = best {
            let image = self.maps[loc.element].eval(loc.xi, loc.eta);
            if (image - z).norm() <= 1e-10 * self.diagonal {
                return Ok(loc);
            }
        }
        Err(Error::Outside(z.re, z.im))
    }

    /// Values and gradients of each coefficient vector at a located point.
    pub fn eval_at(&self, loc: Location, fields: &[&[f64]]) -> Vec<Sample> {
        let n = self.shape.len();
        let mut v = vec![0.0; n];
        let mut gx = vec![0.0; n];
        let mut gy = vec![0.0; n];
        self.shape
            .eval_all(loc.xi, loc.eta, &mut v, &mut gx, &mut gy);
        let (_, fx, fy) = self.maps[loc.element].eval_with_jacobian(loc.xi, loc.eta);
        let det = fx.re * fy.im - fy.re * fx.im;
        let (dofs, signs) = self.dofs.element(loc.element);
        fields
            .iter()
            .map(|c| {
                let (mut val, mut a, mut b) = (0.0, 0.0, 0.0);
                for k in 0..n {
                    let coef = c[dofs[k]] * signs[k];
                    val += coef * v[k];
                    a += coef * gx[k];
                    b += coef * gy[k];
                }
                // ∇u = J⁻ᵀ (∂ξ u, ∂η u).
                let gx = (fy.im * a - fx.im * b) / det;
                let gy = (-fy.re * a + fx.re * b) / det;
                Sample {
                    value: val,
                    grad: Point::new(gx, gy),
                }
            })
            .collect()
    }

    pub fn eval(&self, z: Point, fields: &[&[f64]]) -> Result<Vec<Sample>> {
        Ok(self.eval_at(self.locate(z)?, fields))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    U1,
    U2,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::U1 => "u1",
            Family::U2 => "u2",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    ReachedOppositeBoundary,
    ClosedLoop,
    Stalled,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Contour {
    pub family: Family,
    pub level: f64,
    pub points: Vec<Point>,
    pub status: Status,
    /// Field evaluations spent on this contour.
    #[serde(default)]
    pub evaluations: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceOptions {
    /// Predictor step length.
    pub sigma: f64,
    /// Accepted level residual.
    pub eps: f64,
    pub max_points: usize,
}

impl TraceOptions {
    /// `σ = 0.02 ×` bounding-box diagonal, `ε = 1e-6`.
    pub fn for_map(map: &ConformalMap) -> Self {
        Self {
            sigma: 0.02 * map.evaluator().diagonal,
            eps: 1e-6,
            max_points: 200_000,
        }
    }
}

/// Position along a chain of curves, `s ∈ [0, n]`.
fn chain_point(chain: &[Curve], s: f64) -> Point {
    let n = chain.len();
    let k = (s.floor() as usize).min(n - 1);
    chain[k].eval((s - k as f64).clamp(0.0, 1.0))
}

/// Field evaluation with a call counter.
struct Probe<'a> {
    map: &'a ConformalMap,
    calls: std::cell::Cell<usize>,
}

impl Probe<'_> {
    fn fields_at(&self, z: Point) -> Result<Vec<Sample>> {
        self.calls.set(self.calls.get() + 1);
        self.map.fields_at(z)
    }
}

/// Bisection along `chain` for the point where `field` equals `level`,
/// given the field values `f0` and `f1` at the chain ends.
fn bisect_chain(
    map: &Probe,
    chain: &[Curve],
    which: usize,
    level: f64,
    f0: f64,
    f1: f64,
) -> Result<Point> {
    let (mut a, mut b) = (0.0, chain.len() as f64);
    let increasing = f1 > f0;
    for _ in 0..64 {
        let m = 0.5 * (a + b);
        let value = map.fields_at(chain_point(chain, m))?[which].value;
        if (value < level) == increasing {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(chain_point(chain, 0.5 * (a + b)))
}

/// Traces the level line `family = level` across the mapped domain.
pub fn trace_contour(
    map: &ConformalMap,
    family: Family,
    level: f64,
    opts: &TraceOptions,
) -> Contour {
    let probe = Probe {
        map,
        calls: std::cell::Cell::new(0),
    };
    let mut contour = trace(&probe, family, level, opts);
    contour.evaluations = probe.calls.get();
    contour
}

fn trace(probe: &Probe, family: Family, level: f64, opts: &TraceOptions) -> Contour {
    let map = probe.map;
    let mut contour = Contour {
        family,
        level,
        points: Vec::new(),
        status: Status::Stalled,
        evaluations: 0,
    };
    if !(level > 0.0 && level < 1.0) {
        return contour;
    }
    // Field index, start arc and end arc; the orthogonal field runs 0 → 1
    // (u1 contours, along +∇u2) or 1 → 0 (u2 contours, along −∇u1).
    let (which, other, start_arc, end_arc, sign) = match family {
        Family::U1 => (0, 1, 3, 1, 1.0),
        Family::U2 => (1, 0, 4, 2, -1.0),
    };
    let start_chain = map.arc(start_arc);
    let end_chain = map.arc(end_arc);
    let corners = map.corner_points();
    let diag = map.evaluator().diagonal;
    let near_corner = |z: Point| corners.iter().any(|&c| (c - z).norm() < 1e-3 * diag);
    let mut target = level;
    let start = match bisect_chain(probe, &start_chain, which, target, 0.0, 1.0) {
        Ok(z) if near_corner(z) => {
            target = level + if level < 0.5 { 0.5 } else { -0.5 } * opts.eps;
            bisect_chain(probe, &start_chain, which, target, 0.0, 1.0)
        }
        other => other,
    };
    let Ok(mut x) = start else { return contour };
    contour.points.push(x);
    let finish_status = if map.kind == MapKind::Annulus && family == Family::U1 {
        Status::ClosedLoop
    } else {
        Status::ReachedOppositeBoundary
    };
    let end_value = if sign > 0.0 { 1.0 } else { 0.0 };
    let crossed = |v: f64| {
        if sign > 0.0 {
            v >= end_value
        } else {
            v <= end_value
        }
    };
    let mut prev_other = if family == Family::U1 { 0.0 } else { 1.0 };
    while contour.points.len() < opts.max_points {
        let Ok(s) = probe.fields_at(x) else {
            return contour;
        };
        // The start point may sit on the cut, where the side chosen by the
        // locator decides u2; the start arc's value is known.
        if contour.points.len() > 1 {
            prev_other = s[other].value;
        }
        let (gu, gv) = (s[which].grad, s[other].grad);
        let mut t = Point::new(-gu.im, gu.re);
        if t.norm() == 0.0 {
            return contour;
        }
        if (t.re * gv.re + t.im * gv.im) * sign < 0.0 {
            t = -t;
        }
        let y = x + t * (opts.sigma / t.norm());
        // On a ring the cut is interior: stepping over it makes u2 jump back by one.
        let wraps = map.kind == MapKind::Annulus && family == Family::U1;
        let reached = match probe.fields_at(y) {
            Ok(sy) => crossed(sy[other].value) || (wraps && sy[other].value < prev_other - 0.5),
            Err(_) => true,
        };
        if reached {
            // Both end arcs run from the field's 1-side to its 0-side.
            match bisect_chain(probe, &end_chain, which, target, 1.0, 0.0) {
                Ok(end) => {
                    contour.points.push(end);
                    contour.status = finish_status;
                }
                Err(_) => contour.status = Status::Stalled,
            }
            return contour;
        }
        match correct(probe, which, target, y, opts.eps) {
            Some(z) => {
                contour.points.push(z);
                x = z;
            }
            None => return contour,
        }
    }
    contour
}

/// Newton line search along `∇u` from `y` until `|u - level|` is well below `eps`.
fn correct(map: &Probe, which: usize, level: f64, y: Point, eps: f64) -> Option<Point> {
    let s = map.fields_at(y).ok()?;
    let g = s[which].grad;
    let n = g / g.norm();
    if !n.re.is_finite() {
        return None;
    }
    let mut t = 0.0;
    let mut r = s[which].value - level;
    let mut slope = g.re * n.re + g.im * n.im;
    // Bracket of the root in t once a sign change is seen.
    let (mut lo, mut hi): (Option<(f64, f64)>, Option<(f64, f64)>) = (None, None);
    let record = |t: f64, r: f64, lo: &mut Option<(f64, f64)>, hi: &mut Option<(f64, f64)>| {
        if r < 0.0 {
            *lo = Some((t, r));
        } else {
            *hi = Some((t, r));
        }
    };
    record(t, r, &mut lo, &mut hi);
    for _ in 0..50 {
        if r.abs() <= 1e-3 * eps {
            return Some(y + n * t);
        }
        let mut next = t - r / slope;
        if let (Some((a, _)), Some((b, _))) = (lo, hi) {
            let (l, u) = if a < b { (a, b) } else { (b, a) };
            if !(next > l && next < u) || !next.is_finite() {
                next = 0.5 * (a + b);
            }
        }
        let mut step = next - t;
        let mut accepted = None;
        for _ in 0..30 {
            if let Ok(sv) = map.fields_at(y + n * (t + step)) {
                accepted = Some(sv);
                break;
            }
            step *= 0.5;
        }
        let sv = accepted?;
        t += step;
        r = sv[which].value - level;
        slope = sv[which].grad.re * n.re + sv[which].grad.im * n.im;
        record(t, r, &mut lo, &mut hi);
    }
    (r.abs() <= eps).then_some(y + n * t)
}

/// `n` levels equally spaced in `(0, 1)`.
pub fn uniform_levels(n: usize) -> Vec<f64> {
    (1..=n).map(|k| k as f64 / (n + 1) as f64).collect()
}

/// Traces the pre-images of the canonical grid lines; output is ordered by
/// family, then level.
pub fn canonical_grid(
    map: &ConformalMap,
    levels_u: &[f64],
    levels_v: &[f64],
    opts: &TraceOptions,
) -> Vec<Contour> {
    let mut u: Vec<f64> = levels_u.to_vec();
    let mut v: Vec<f64> = levels_v.to_vec();
    u.sort_by(f64::total_cmp);
    v.sort_by(f64::total_cmp);
    let jobs: Vec<(Family, f64)> = u
        .iter()
        .map(|&c| (Family::U1, c))
        .chain(v.iter().map(|&c| (Family::U2, c)))
        .collect();
    let workers = std::thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(jobs.len());
    if workers <= 1 {
        return jobs
            .iter()
            .map(|&(f, c)| trace_contour(map, f, c, opts))
            .collect();
    }
    let next = AtomicUsize::new(0);
    let mut out: Vec<Option<Contour>> = vec![None; jobs.len()];
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|_| {
                scope.spawn(|| {
                    let mut done = Vec::new();
                    loop {
                        let i = next.fetch_add(1, Ordering::Relaxed);
                        let Some(&(f, c)) = jobs.get(i) else {
                            break done;
                        };
                        done.push((i, trace_contour(map, f, c, opts)));
                    }
                })
            })
            .collect();
        for h in handles {
            for (i, c) in h.join().expect("contour worker panicked") {
                out[i] = Some(c);
            }
        }
    });
    out.into_iter()
        .map(|c| c.expect("every level traced"))
        .collect()
}

/// `family,level,x,y` rows.
pub fn write_csv(contours: &[Contour], mut w: impl Write) -> Result<()> {
    writeln!(w, "family,level,x,y")?;
    for c in contours {
        for z in &c.points {
            writeln!(w, "{},{},{},{}", c.family.name(), c.level, z.re, z.im)?;
        }
    }
    Ok(())
}

/// SVG drawing of the domain boundary with both contour families.
pub fn write_svg(boundary: &[Vec<Curve>], contours: &[Contour], mut w: impl Write) -> Result<()> {
    let polys: Vec<Vec<Point>> = boundary.iter().map(|c| chain_polygon(c, 200)).collect();
    let (mut lo, mut hi) = (
        Point::new(f64::MAX, f64::MAX),
        Point::new(f64::MIN, f64::MIN),
    );
    for z in polys.iter().flatten() {
        lo.re = lo.re.min(z.re);
        lo.im = lo.im.min(z.im);
        hi.re = hi.re.max(z.re);
        hi.im = hi.im.max(z.im);
    }
    let span = (hi - lo).re.max((hi - lo).im).max(f64::MIN_POSITIVE);
    let size = 800.0;
    let margin = 20.0;
    let scale = (size - 2.0 * margin) / span;
    let px = |z: &Point| {
        (
            (z.re - lo.re) * scale + margin,
            (hi.im - z.im) * scale + margin,
        )
    };
    let path = |pts: &[Point], close: bool| {
        let mut d = String::new();
        for (i, z) in pts.iter().enumerate() {
            let (x, y) = px(z);
            let _ = write!(d, "{}{:.3},{:.3}", if i == 0 { "M" } else { " L" }, x, y);
        }
        if close {
            d.push_str(" Z");
        }
        d
    };
    let width = (hi - lo).re * scale + 2.0 * margin;
    let height = (hi - lo).im * scale + 2.0 * margin;
    writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.3} {height:.3}">"#
    )?;
    writeln!(
        w,
        r##"<g id="boundary" fill="none" stroke="#000" stroke-width="1.5">"##
    )?;
    for p in &polys {
        writeln!(w, r#"<path d="{}"/>"#, path(p, true))?;
    }
    writeln!(w, "</g>")?;
    for (family, style) in [
        (Family::U1, r##"stroke="#1f5fbf" stroke-width="0.8""##),
        (
            Family::U2,
            r##"stroke="#c0392b" stroke-width="0.8" stroke-dasharray="4 2""##,
        ),
    ] {
        writeln!(w, r#"<g id="{}" fill="none" {style}>"#, family.name())?;
        for c in contours
            .iter()
            .filter(|c| c.family == family && c.points.len() > 1)
        {
            writeln!(
                w,
                r#"<path data-level="{}" d="{}"/>"#,
                c.level,
                path(&c.points, false)
            )?;
        }
        writeln!(w, "</g>")?;
    }
    writeln!(w, "</svg>")?;
    Ok(())
}
