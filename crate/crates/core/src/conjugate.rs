//! The conjugate function method: moduli and conformal maps of quadrilaterals
//! onto rectangles, and of ring domains onto annuli through a cut along a
//! steepest-descent line of the ring potential.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::femcore::{assemble, solve_dirichlet, solve_pair, DofTable, Field};
use crate::geometry::curve::Curve;
use crate::geometry::problem::{BoundaryTag, QuadrilateralProblem, RingProblem};
use crate::mesh::{refine_geometric, Mesh, DEFAULT_RATIO};
use crate::tracer::{Evaluator, Location, Sample};
use crate::Point;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapKind {
    /// Onto `[0, 1] × [0, h]`.
    Rectangle,
    /// Onto `e^{-M(R)} < |w| < 1`.
    Annulus,
}

/// Discretization parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub p: usize,
    /// Refinement levels at marked vertices; `None` means `p`.
    pub levels: Option<usize>,
    pub ratio: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            p: 8,
            levels: None,
            ratio: DEFAULT_RATIO,
        }
    }
}

impl SolveOptions {
    pub fn with_p(p: usize) -> Self {
        Self {
            p,
            ..Default::default()
        }
    }

    pub fn levels(&self) -> usize {
        self.levels.unwrap_or(self.p)
    }

    fn check(&self) -> Result<()> {
        if !(1..=30).contains(&self.p) {
            return Err(Error::Argument(format!(
                "order p = {} outside 1..=30",
                self.p
            )));
        }
        Ok(())
    }
}

/// Sizes and wall-clock seconds per phase.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub elements: usize,
    pub dofs: usize,
    /// `A_BB` factorizations used by the conjugate pair.
    pub factorizations: usize,
    /// `|a(u1, u2)| / (‖u1‖_A ‖u2‖_A)`.
    pub orthogonality: f64,
    pub mesh_seconds: f64,
    pub assemble_seconds: f64,
    pub solve_seconds: f64,
}

/// `f = u1 + i h u2`, optionally composed with the exponential onto an annulus.
#[derive(Debug)]
pub struct ConformalMap {
    pub kind: MapKind,
    /// The quadrilateral that was solved (the cut domain for rings).
    pub problem: QuadrilateralProblem,
    pub options: SolveOptions,
    pub mesh: Mesh,
    pub u1: Field,
    pub u2: Field,
    /// `M(Q) = a(u1, u1)`.
    pub h: f64,
    /// `M(Q̃) = a(u2, u2)`.
    pub conjugate_modulus: f64,
    /// Capacity from the uncut ring potential, for annulus maps.
    pub ring_capacity: Option<f64>,
    pub stats: SolveStats,
    evaluator: Evaluator,
}

impl ConformalMap {
    pub fn name(&self) -> &str {
        &self.problem.name
    }

    /// `|M(Q) M(Q̃) - 1|`.
    pub fn rec_error(&self) -> f64 {
        (self.h * self.conjugate_modulus - 1.0).abs()
    }

    /// `M(R) = 2π / cap R`, preferring the capacity of the uncut ring.
    pub fn ring_modulus(&self) -> Option<f64> {
        (self.kind == MapKind::Annulus).then(|| 2.0 * PI / self.ring_capacity.unwrap_or(self.h))
    }

    pub fn evaluator(&self) -> &Evaluator {
        &self.evaluator
    }

    /// `u1` and `u2` with gradients at `z`.
    pub fn fields_at(&self, z: Point) -> Result<Vec<Sample>> {
        self.evaluator.eval(z, &[&self.u1.coeffs, &self.u2.coeffs])
    }

    fn compose(&self, s: &[Sample]) -> Point {
        let f = Complex64::new(s[0].value, self.h * s[1].value);
        match self.kind {
            MapKind::Rectangle => f,
            MapKind::Annulus => ((f - 1.0) * (2.0 * PI / self.h)).exp(),
        }
    }

    /// Image of `z` in the rectangle `[0, 1] × [0, h]` (before any
    /// exponential).
    pub fn eval_rect(&self, z: Point) -> Result<Point> {
        let s = self.fields_at(z)?;
        Ok(Complex64::new(s[0].value, self.h * s[1].value))
    }

    /// Image of `z` in the canonical domain of the map.
    pub fn eval(&self, z: Point) -> Result<Point> {
        Ok(self.compose(&self.fields_at(z)?))
    }

    /// Curves of arc `γ_j` of the solved quadrilateral.
    pub fn arc(&self, j: usize) -> Vec<Curve> {
        self.problem.arc(j)
    }

    pub fn corner_points(&self) -> [Point; 4] {
        self.problem.corner_points()
    }

    /// Closed chains to draw: the boundary, or the outer and inner boundary
    /// of a ring.
    pub fn boundary_chains(&self) -> Vec<Vec<Curve>> {
        match self.kind {
            MapKind::Rectangle => vec![self.problem.boundary.clone()],
            MapKind::Annulus => vec![self.arc(2), self.arc(4)],
        }
    }

    /// The cut of a ring map as a polyline from the inner to the outer boundary.
    pub fn cut_polyline(&self) -> Option<Vec<Point>> {
        (self.kind == MapKind::Annulus).then(|| {
            let mut pts = Vec::new();
            for c in self.arc(1) {
                let s = c.sample(16);
                let skip = usize::from(!pts.is_empty());
                pts.extend(s.into_iter().skip(skip));
            }
            pts
        })
    }

    /// Points on the mesh edges tagged `tag` with their images, each evaluated
    /// in the element owning the edge. On a cut this tells the two copies apart.
    pub fn side_samples(&self, tag: BoundaryTag, per_edge: usize) -> Vec<(Point, Point)> {
        let mut out = Vec::new();
        for (e, el) in self.mesh.elements.iter().enumerate() {
            for k in 0..4 {
                if self.mesh.edges[el.edges[k]].tag != Some(tag) {
                    continue;
                }
                for i in 0..=per_edge {
                    let t = -1.0 + 2.0 * i as f64 / per_edge as f64;
                    let (xi, eta) = match k {
                        0 => (t, -1.0),
                        1 => (1.0, t),
                        2 => (t, 1.0),
                        _ => (-1.0, t),
                    };
                    let loc = Location {
                        element: e,
                        xi,
                        eta,
                    };
                    let z = self.evaluator.element_map(e).eval(xi, eta);
                    let s = self
                        .evaluator
                        .eval_at(loc, &[&self.u1.coeffs, &self.u2.coeffs]);
                    out.push((z, self.compose(&s)));
                }
            }
        }
        out
    }

    pub fn to_bundle(&self) -> MapBundle {
        MapBundle {
            format: BUNDLE_FORMAT.into(),
            version: BUNDLE_VERSION,
            kind: self.kind,
            problem: self.problem.clone(),
            options: self.options,
            mesh: self.mesh.clone(),
            u1: self.u1.clone(),
            u2: self.u2.clone(),
            h: self.h,
            conjugate_modulus: self.conjugate_modulus,
            ring_capacity: self.ring_capacity,
            stats: self.stats.clone(),
        }
    }

    pub fn from_bundle(b: MapBundle) -> Result<Self> {
        if b.format != BUNDLE_FORMAT || b.version != BUNDLE_VERSION {
            return Err(Error::Argument(format!(
                "unsupported map bundle {} v{}",
                b.format, b.version
            )));
        }
        let ndof = b.mesh.dof_count(b.options.p);
        for f in [&b.u1, &b.u2] {
            if f.coeffs.len() != ndof || f.p != b.options.p {
                return Err(Error::Dimension {
                    expected: ndof,
                    got: f.coeffs.len(),
                });
            }
        }
        let evaluator = Evaluator::new(&b.mesh, b.options.p);
        Ok(Self {
            kind: b.kind,
            problem: b.problem,
            options: b.options,
            mesh: b.mesh,
            u1: b.u1,
            u2: b.u2,
            h: b.h,
            conjugate_modulus: b.conjugate_modulus,
            ring_capacity: b.ring_capacity,
            stats: b.stats,
            evaluator,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.to_bundle())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_bundle(serde_json::from_str(text)?)
    }
}

const BUNDLE_FORMAT: &str = "conformal-map";
const BUNDLE_VERSION: u32 = 1;

/// Serialized form of a [`ConformalMap`]: mesh, coefficients and moduli, so
/// that evaluation and tracing need no re-solve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapBundle {
    pub format: String,
    pub version: u32,
    pub kind: MapKind,
    pub problem: QuadrilateralProblem,
    pub options: SolveOptions,
    pub mesh: Mesh,
    pub u1: Field,
    pub u2: Field,
    pub h: f64,
    pub conjugate_modulus: f64,
    pub ring_capacity: Option<f64>,
    pub stats: SolveStats,
}

/// Solves the Dirichlet–Neumann problem of `q` and its conjugate and forms
/// `f = u1 + i h u2`, which sends `z1, z2, z3, z4` to `1 + ih, ih, 0, 1`.
pub fn build_map(q: &QuadrilateralProblem, opts: &SolveOptions) -> Result<ConformalMap> {
    build(q, opts, MapKind::Rectangle, None)
}

/// Monotonic seconds for the phase timings; always 0 in the browser, where
/// `std::time::Instant` is unavailable.
#[cfg(not(target_arch = "wasm32"))]
fn seconds() -> f64 {
    static ORIGIN: std::sync::OnceLock<std::time::Instant> = std::sync::OnceLock::new();
    ORIGIN
        .get_or_init(std::time::Instant::now)
        .elapsed()
        .as_secs_f64()
}

#[cfg(target_arch = "wasm32")]
fn seconds() -> f64 {
    0.0
}

fn build(
    q: &QuadrilateralProblem,
    opts: &SolveOptions,
    kind: MapKind,
    ring_capacity: Option<f64>,
) -> Result<ConformalMap> {
    opts.check()?;
    q.validate()?;
    let t0 = seconds();
    let mesh = refine_geometric(&q.layout, opts.levels(), opts.ratio)?;
    let t1 = seconds();
    let primal = DofTable::primal(&mesh, opts.p)?;
    let conjugate = DofTable::conjugate(&mesh, opts.p)?;
    let sys = assemble(&mesh, &primal)?;
    let t2 = seconds();
    let pair = solve_pair(&sys, &primal, &conjugate)?;
    let t3 = seconds();
    let h = sys.energy(&pair.u1)?;
    let conjugate_modulus = sys.energy(&pair.u2)?;
    let orthogonality =
        sys.bilinear(&pair.u1.coeffs, &pair.u2.coeffs)?.abs() / (h * conjugate_modulus).sqrt();
    let stats = SolveStats {
        elements: mesh.elements.len(),
        dofs: sys.ndof,
        factorizations: pair.factorizations,
        orthogonality,
        mesh_seconds: t1 - t0,
        assemble_seconds: t2 - t1,
        solve_seconds: t3 - t2,
    };
    let evaluator = Evaluator::new(&mesh, opts.p);
    Ok(ConformalMap {
        kind,
        problem: q.clone(),
        options: *opts,
        mesh,
        u1: pair.u1,
        u2: pair.u2,
        h,
        conjugate_modulus,
        ring_capacity,
        stats,
        evaluator,
    })
}

/// Potential of a ring domain: `1` on the inner and `0` on the outer boundary.
#[derive(Debug)]
pub struct RingSolution {
    pub mesh: Mesh,
    pub u: Field,
    /// `cap R = a(u, u)`.
    pub capacity: f64,
    /// `M(R) = 2π / cap R`.
    pub modulus: f64,
    pub stats: SolveStats,
    evaluator: Evaluator,
}

impl RingSolution {
    pub fn potential_at(&self, z: Point) -> Result<Sample> {
        Ok(self.evaluator.eval(z, &[&self.u.coeffs])?[0])
    }

    pub fn evaluator(&self) -> &Evaluator {
        &self.evaluator
    }
}

/// Capacity and modulus of a ring domain from its Dirichlet potential.
pub fn solve_ring(r: &RingProblem, opts: &SolveOptions) -> Result<RingSolution> {
    opts.check()?;
    r.validate()?;
    let t0 = seconds();
    let mesh = refine_geometric(&r.layout, opts.levels(), opts.ratio)?;
    let t1 = seconds();
    let table = DofTable::primal(&mesh, opts.p)?;
    let sys = assemble(&mesh, &table)?;
    let t2 = seconds();
    let u = solve_dirichlet(&sys, &table)?;
    let t3 = seconds();
    let capacity = sys.energy(&u)?;
    let stats = SolveStats {
        elements: mesh.elements.len(),
        dofs: sys.ndof,
        factorizations: 1,
        orthogonality: 0.0,
        mesh_seconds: t1 - t0,
        assemble_seconds: t2 - t1,
        solve_seconds: t3 - t2,
    };
    let evaluator = Evaluator::new(&mesh, opts.p);
    Ok(RingSolution {
        mesh,
        u,
        capacity,
        modulus: 2.0 * PI / capacity,
        stats,
        evaluator,
    })
}

/// A steepest-descent line of the ring potential.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutCurve {
    /// From the inner boundary (`u = 1`) to the outer boundary (`u = 0`).
    pub points: Vec<Point>,
    /// Inner chain curve index and unit parameter of the first point.
    pub inner_at: (usize, f64),
    /// Outer chain curve index and unit parameter of the last point.
    pub outer_at: (usize, f64),
}

fn nearest_on_chain(chain: &[Curve], z: Point) -> (usize, f64, f64) {
    let mut best = (0, 0.0, f64::INFINITY);
    for (i, c) in chain.iter().enumerate() {
        let t = c.project(z);
        let d = (c.eval(t) - z).norm();
        if d < best.2 {
            best = (i, t, d);
        }
    }
    best
}

/// Integrates `dz/ds = -∇u / |∇u|` by RK4 from `seed` on the inner boundary
/// until the outer boundary is reached. Without a seed, the inner boundary
/// point of largest `|∇u|` is used.
pub fn steepest_descent_cut(
    ring: &RingSolution,
    r: &RingProblem,
    seed: Option<Point>,
) -> Result<CutCurve> {
    let diag = ring.evaluator.diagonal;
    let start = match seed {
        Some(z) => z,
        None => {
            let mut best = (Point::new(0.0, 0.0), -1.0);
            for c in &r.inner {
                for z in c.sample(64) {
                    if let Ok(s) = ring.potential_at(z) {
                        if s.grad.norm() > best.1 {
                            best = (z, s.grad.norm());
                        }
                    }
                }
            }
            if best.1 < 0.0 {
                return Err(Error::Argument(
                    "inner boundary could not be evaluated".into(),
                ));
            }
            best.0
        }
    };
    let (ci, ti, _) = nearest_on_chain(&r.inner, start);
    let mut x = r.inner[ci].eval(ti);
    let direction = |z: Point| -> Result<Point> {
        let g = ring.potential_at(z)?.grad;
        let n = g.norm();
        if n < 1e-12 {
            return Err(Error::CriticalPoint {
                x: z.re,
                y: z.im,
                grad: n,
            });
        }
        Ok(-g / n)
    };
    let outside = |e: &Error| matches!(e, Error::Outside(..));
    let mut points = vec![x];
    let mut step = 2e-3 * diag;
    let floor = 1e-11 * diag;
    for _ in 0..1_000_000 {
        let rk = || -> Result<Point> {
            let k1 = direction(x)?;
            let k2 = direction(x + k1 * (0.5 * step))?;
            let k3 = direction(x + k2 * (0.5 * step))?;
            let k4 = direction(x + k3 * step)?;
            let y = x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (step / 6.0);
            ring.potential_at(y)?;
            Ok(y)
        };
        match rk() {
            Ok(y) => {
                x = y;
                points.push(x);
            }
            Err(e) if outside(&e) => {
                // Close in on the boundary with shrinking steps.
                step *= 0.5;
                if step < floor {
                    let (co, to, d_out) = nearest_on_chain(&r.outer, x);
                    let (_, _, d_in) = nearest_on_chain(&r.inner, x);
                    if d_out > 1e-6 * diag || d_in < d_out {
                        return Err(Error::Problem(format!(
                            "steepest-descent line left the domain at ({}, {}) away from the outer boundary",
                            x.re, x.im
                        )));
                    }
                    let end = r.outer[co].eval(to);
                    if (end - x).norm() < 1e-3 * floor.max(2e-3 * diag) {
                        points.pop();
                    }
                    points.push(end);
                    return Ok(CutCurve {
                        points,
                        inner_at: (ci, ti),
                        outer_at: (co, to),
                    });
                }
            }
            Err(e) => return Err(e),
        }
    }
    Err(Error::CriticalPoint {
        x: x.re,
        y: x.im,
        grad: direction(x).map(|d| d.norm()).unwrap_or(0.0),
    })
}

/// Cuts the ring along its template cut (moved onto a steepest-descent line
/// when the problem asks for it), maps the cut quadrilateral onto
/// `[0, 1] × [0, h]` and composes `w = exp((2π/h)(f - 1))`.
pub fn build_ring_map(r: &RingProblem, opts: &SolveOptions) -> Result<ConformalMap> {
    let ring = solve_ring(r, opts)?;
    if r.auto_cut {
        let cut = steepest_descent_cut(&ring, r, None)?;
        return build_ring_map_with_cut(r, &cut, Some(&ring), opts);
    }
    cut_and_build(r, ring.capacity, opts)
}

/// Like [`build_ring_map`] with an explicit cut path; the template cut
/// vertices are moved onto it.
pub fn build_ring_map_with_cut(
    r: &RingProblem,
    cut: &CutCurve,
    ring: Option<&RingSolution>,
    opts: &SolveOptions,
) -> Result<ConformalMap> {
    let moved = r.with_cut_path(&cut.points)?;
    let capacity = match ring {
        Some(s) => s.capacity,
        None => solve_ring(r, opts)?.capacity,
    };
    cut_and_build(&moved, capacity, opts)
}

fn cut_and_build(r: &RingProblem, capacity: f64, opts: &SolveOptions) -> Result<ConformalMap> {
    let q = r.cut_quadrilateral()?;
    let mut q = q;
    q.name = r.name.clone();
    build(&q, opts, MapKind::Annulus, Some(capacity))
}
