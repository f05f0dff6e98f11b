//! Quadrilateral and ring-domain problem definitions and their coarse block
//! decompositions.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::curve::{chain_polygon, cross, polygon_is_simple, signed_area, winding_number, Curve};
use crate::error::{Error, Result};
use crate::Point;

/// Boundary role of a layout or mesh edge.
///
/// `Gamma1..Gamma4` are the arcs `(z1,z2)`, `(z2,z3)`, `(z3,z4)`, `(z4,z1)` of a
/// quadrilateral; `Inner` and `Outer` are the two components of a ring domain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryTag {
    Gamma1,
    Gamma2,
    Gamma3,
    Gamma4,
    Inner,
    Outer,
}

impl BoundaryTag {
    pub fn gamma(j: usize) -> Self {
        match j {
            1 => Self::Gamma1,
            2 => Self::Gamma2,
            3 => Self::Gamma3,
            4 => Self::Gamma4,
            _ => panic!("arc index {j} not in 1..=4"),
        }
    }
}

/// An edge of the block decomposition that is curved and/or lies on the boundary.
/// The curve runs from vertex `a` to vertex `b`; edges absent from the list are
/// straight interior edges.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayoutEdge {
    pub a: usize,
    pub b: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curve: Option<Curve>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tag: Option<BoundaryTag>,
}

/// Coarse decomposition of a domain into curved quadrilateral blocks.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BlockLayout {
    pub vertices: Vec<Point>,
    /// Four vertex ids per block, counter-clockwise.
    pub blocks: Vec<[usize; 4]>,
    pub edges: Vec<LayoutEdge>,
    /// Vertices toward which the mesh is refined geometrically.
    #[serde(default)]
    pub refine: Vec<usize>,
}

impl BlockLayout {
    pub fn vertex(&mut self, z: Point) -> usize {
        self.vertices.push(z);
        self.vertices.len() - 1
    }

    pub fn block(&mut self, ids: [usize; 4]) {
        self.blocks.push(ids);
    }

    /// Registers a curved and/or tagged edge; the curve must run from `a` to `b`.
    pub fn edge(&mut self, a: usize, b: usize, curve: Option<Curve>, tag: Option<BoundaryTag>) {
        self.edges.push(LayoutEdge { a, b, curve, tag });
    }

    /// Boundary edge along `curve`, which must run from `a` to `b`.
    pub fn boundary(&mut self, a: usize, b: usize, curve: Curve, tag: BoundaryTag) {
        let curve = if curve.is_straight() {
            None
        } else {
            Some(curve)
        };
        self.edge(a, b, curve, Some(tag));
    }

    pub fn edge_index(&self) -> HashMap<(usize, usize), usize> {
        self.edges
            .iter()
            .enumerate()
            .map(|(i, e)| (key(e.a, e.b), i))
            .collect()
    }

    /// Geometry of the block side from `a` to `b`.
    pub fn side_curve(&self, index: &HashMap<(usize, usize), usize>, a: usize, b: usize) -> Curve {
        match index.get(&key(a, b)).and_then(|&i| {
            let e = &self.edges[i];
            e.curve
                .as_ref()
                .map(|c| if e.a == a { c.clone() } else { c.reversed() })
        }) {
            Some(c) => c,
            None => Curve::segment(self.vertices[a], self.vertices[b]),
        }
    }

    pub fn bbox_diagonal(&self) -> f64 {
        bbox_diagonal(&self.vertices)
    }

    /// Checks index ranges, orientation, edge multiplicities, boundary tags and
    /// conformity of curved edges with their end vertices.
    pub fn validate(&self) -> Result<()> {
        let nv = self.vertices.len();
        let diag = self.bbox_diagonal().max(f64::MIN_POSITIVE);
        let index = self.edge_index();
        if index.len() != self.edges.len() {
            return Err(Error::Problem("duplicate layout edge".into()));
        }
        let mut usage: HashMap<(usize, usize), usize> = HashMap::new();
        for (bi, b) in self.blocks.iter().enumerate() {
            for &v in b {
                if v >= nv {
                    return Err(Error::Problem(format!("block {bi} references vertex {v}")));
                }
            }
            for i in 0..4 {
                for j in i + 1..4 {
                    if b[i] == b[j] {
                        return Err(Error::Problem(format!("block {bi} repeats a vertex")));
                    }
                }
            }
            let mut poly = Vec::new();
            for k in 0..4 {
                let c = self.side_curve(&index, b[k], b[(k + 1) % 4]);
                for s in 0..16 {
                    poly.push(c.eval(s as f64 / 16.0));
                }
                *usage.entry(key(b[k], b[(k + 1) % 4])).or_default() += 1;
            }
            let area = signed_area(&poly);
            if area <= 1e-14 * diag * diag {
                return Err(Error::Problem(format!(
                    "block {bi} is degenerate or clockwise (area {area:e})"
                )));
            }
        }
        for (k, count) in &usage {
            if *count > 2 {
                return Err(Error::Problem(format!(
                    "edge {:?} shared by {count} blocks (non-conforming)",
                    k
                )));
            }
            if *count == 1 {
                let tagged = index
                    .get(k)
                    .map(|&i| self.edges[i].tag.is_some())
                    .unwrap_or(false);
                if !tagged {
                    return Err(Error::Problem(format!(
                        "boundary edge {:?} carries no boundary tag",
                        k
                    )));
                }
            }
        }
        for e in &self.edges {
            if e.a >= nv || e.b >= nv {
                return Err(Error::Problem("edge references missing vertex".into()));
            }
            if let Some(c) = &e.curve {
                let da = (c.start() - self.vertices[e.a]).norm();
                let db = (c.end() - self.vertices[e.b]).norm();
                if da > 1e-12 * diag || db > 1e-12 * diag {
                    return Err(Error::Problem(format!(
                        "curved edge ({}, {}) does not meet its vertices ({da:e}, {db:e})",
                        e.a, e.b
                    )));
                }
            }
        }
        for &r in &self.refine {
            if r >= nv {
                return Err(Error::Problem(format!(
                    "refinement vertex {r} out of range"
                )));
            }
        }
        Ok(())
    }
}

pub(crate) fn key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

pub(crate) fn bbox_diagonal(points: &[Point]) -> f64 {
    let (mut lo, mut hi) = (
        Point::new(f64::MAX, f64::MAX),
        Point::new(f64::MIN, f64::MIN),
    );
    for p in points {
        lo.re = lo.re.min(p.re);
        lo.im = lo.im.min(p.im);
        hi.re = hi.re.max(p.re);
        hi.im = hi.im.max(p.im);
    }
    (hi - lo).norm()
}

fn check_chain(chain: &[Curve], what: &str, positive: bool) -> Result<Vec<Point>> {
    if chain.is_empty() {
        return Err(Error::Problem(format!("{what} chain is empty")));
    }
    let poly = chain_polygon(chain, 64);
    let diag = bbox_diagonal(&poly);
    for (i, c) in chain.iter().enumerate() {
        let next = &chain[(i + 1) % chain.len()];
        let gap = (c.end() - next.start()).norm();
        if gap > 1e-12 * diag {
            return Err(Error::Problem(format!(
                "{what} chain is not closed between curves {i} and {} (gap {gap:e})",
                (i + 1) % chain.len()
            )));
        }
    }
    if !polygon_is_simple(&poly) {
        return Err(Error::Problem(format!("{what} chain self-intersects")));
    }
    let area = signed_area(&poly);
    if positive && area <= 0.0 {
        return Err(Error::Problem(format!(
            "{what} chain must be counter-clockwise"
        )));
    }
    if !positive && area >= 0.0 {
        return Err(Error::Problem(format!("{what} chain must be clockwise")));
    }
    Ok(poly)
}

/// A Jordan domain with four marked boundary points `z1..z4`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadrilateralProblem {
    pub name: String,
    /// Counter-clockwise closed chain.
    pub boundary: Vec<Curve>,
    /// `z_k` is the start point of `boundary[corners[k]]`.
    pub corners: [usize; 4],
    pub layout: BlockLayout,
}

impl QuadrilateralProblem {
    pub fn validate(&self) -> Result<()> {
        check_chain(&self.boundary, "boundary", true)?;
        let n = self.boundary.len();
        if self.corners.iter().any(|&c| c >= n) {
            return Err(Error::Problem("corner index out of range".into()));
        }
        let descents = (0..4)
            .filter(|&k| self.corners[(k + 1) % 4] <= self.corners[k])
            .count();
        if descents != 1 {
            return Err(Error::Problem(
                "corners must be distinct and positively ordered along the boundary".into(),
            ));
        }
        self.layout.validate()
    }

    pub fn corner_points(&self) -> [Point; 4] {
        self.corners.map(|c| self.boundary[c].start())
    }

    /// Curves forming arc `γ_j` (`j ∈ 1..=4`), in boundary order.
    pub fn arc(&self, j: usize) -> Vec<Curve> {
        let n = self.boundary.len();
        let start = self.corners[j - 1];
        let end = self.corners[j % 4];
        let mut out = Vec::new();
        let mut i = start;
        loop {
            out.push(self.boundary[i].clone());
            i = (i + 1) % n;
            if i == end {
                break;
            }
        }
        out
    }

    pub fn conjugate(&self) -> Self {
        let c = self.corners;
        let mut q = self.clone();
        q.corners = [c[1], c[2], c[3], c[0]];
        q.name = format!("{}~", self.name);
        q.layout.edges.iter_mut().for_each(|e| {
            e.tag = e.tag.map(|t| match t {
                BoundaryTag::Gamma1 => BoundaryTag::Gamma4,
                BoundaryTag::Gamma2 => BoundaryTag::Gamma1,
                BoundaryTag::Gamma3 => BoundaryTag::Gamma2,
                BoundaryTag::Gamma4 => BoundaryTag::Gamma3,
                other => other,
            })
        });
        q
    }

    pub fn bbox_diagonal(&self) -> f64 {
        bbox_diagonal(&chain_polygon(&self.boundary, 32))
    }
}

/// A doubly connected domain between an outer and an inner closed chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RingProblem {
    pub name: String,
    /// Counter-clockwise outer chain (the set `F` side, `u = 0`).
    pub outer: Vec<Curve>,
    /// Clockwise inner chain (the boundary of `E`, `u = 1`).
    pub inner: Vec<Curve>,
    pub layout: BlockLayout,
    /// Layout vertices along the cut, from the inner to the outer boundary.
    #[serde(default)]
    pub cut: Vec<usize>,
    /// Move the cut onto a steepest-descent line of the ring potential
    /// before cutting.
    #[serde(default)]
    pub auto_cut: bool,
}

impl RingProblem {
    pub fn validate(&self) -> Result<()> {
        let outer = check_chain(&self.outer, "outer", true)?;
        let inner = check_chain(&self.inner, "inner", false)?;
        if inner.iter().any(|&z| winding_number(&outer, z) == 0) {
            return Err(Error::Problem(
                "inner chain is not inside the outer chain".into(),
            ));
        }
        if outer.iter().any(|&z| winding_number(&inner, z) != 0) {
            return Err(Error::Problem("chains intersect".into()));
        }
        self.layout.validate()?;
        if self.cut.len() == 1 || self.cut.iter().any(|&v| v >= self.layout.vertices.len()) {
            return Err(Error::Problem(
                "cut must list at least two valid vertices".into(),
            ));
        }
        Ok(())
    }

    pub fn bbox_diagonal(&self) -> f64 {
        bbox_diagonal(&chain_polygon(&self.outer, 32))
    }

    /// The quadrilateral obtained by cutting along `self.cut`: `γ1` is the cut
    /// copy on the left of the inner→outer direction, `γ2` the outer boundary,
    /// `γ3` the right copy and `γ4` the inner boundary.
    pub fn cut_quadrilateral(&self) -> Result<QuadrilateralProblem> {
        if self.cut.len() < 2 {
            return Err(Error::Problem(format!("ring `{}` has no cut", self.name)));
        }
        let lay = &self.layout;
        let index = lay.edge_index();
        let cut = &self.cut;
        let m = cut.len();
        let mut dup: HashMap<usize, usize> = HashMap::new();
        let mut out = BlockLayout {
            vertices: lay.vertices.clone(),
            ..Default::default()
        };
        for &v in cut {
            let id = out.vertex(lay.vertices[v]);
            dup.insert(v, id);
        }
        let position: HashMap<usize, usize> =
            cut.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let on_right = |b: &[usize; 4]| -> Option<bool> {
            let centroid = b.iter().map(|&v| lay.vertices[v]).sum::<Point>() / 4.0;
            b.iter().find_map(|v| {
                position.get(v).map(|&i| {
                    let prev = lay.vertices[cut[i.saturating_sub(1)]];
                    let next = lay.vertices[cut[(i + 1).min(m - 1)]];
                    cross(next - prev, centroid - lay.vertices[cut[i]]) < 0.0
                })
            })
        };
        let mut right_blocks = Vec::with_capacity(lay.blocks.len());
        for b in &lay.blocks {
            let right = on_right(b) == Some(true);
            right_blocks.push(right);
            out.blocks.push(if right {
                b.map(|v| *dup.get(&v).unwrap_or(&v))
            } else {
                *b
            });
        }
        let cut_pairs: HashMap<(usize, usize), ()> =
            cut.windows(2).map(|w| (key(w[0], w[1]), ())).collect();
        // Edges incident to the cut but not along it belong to one side only.
        let mut incident_side: HashMap<(usize, usize), bool> = HashMap::new();
        for (b, &right) in lay.blocks.iter().zip(&right_blocks) {
            for k in 0..4 {
                let (a, c) = (b[k], b[(k + 1) % 4]);
                let kk = key(a, c);
                if cut_pairs.contains_key(&kk) {
                    continue;
                }
                if position.contains_key(&a) || position.contains_key(&c) {
                    incident_side.insert(kk, right);
                }
            }
        }
        for e in &lay.edges {
            let kk = key(e.a, e.b);
            if cut_pairs.contains_key(&kk) {
                continue;
            }
            let remap = incident_side.get(&kk).copied().unwrap_or(false);
            let map = |v: usize| if remap { *dup.get(&v).unwrap_or(&v) } else { v };
            let tag = e.tag.map(|t| match t {
                BoundaryTag::Outer => BoundaryTag::Gamma2,
                BoundaryTag::Inner => BoundaryTag::Gamma4,
                other => other,
            });
            out.edges.push(LayoutEdge {
                a: map(e.a),
                b: map(e.b),
                curve: e.curve.clone(),
                tag,
            });
        }
        let mut cut_curves = Vec::with_capacity(m - 1);
        for w in cut.windows(2) {
            let c = lay.side_curve(&index, w[0], w[1]);
            let curve = if c.is_straight() {
                None
            } else {
                Some(c.clone())
            };
            out.edges.push(LayoutEdge {
                a: w[0],
                b: w[1],
                curve: curve.clone(),
                tag: Some(BoundaryTag::Gamma1),
            });
            out.edges.push(LayoutEdge {
                a: dup[&w[1]],
                b: dup[&w[0]],
                curve: curve.map(|c| c.reversed()),
                tag: Some(BoundaryTag::Gamma3),
            });
            cut_curves.push(c);
        }
        for &r in &lay.refine {
            out.refine.push(r);
            if let Some(&d) = dup.get(&r) {
                out.refine.push(d);
            }
        }

        let p_in = lay.vertices[cut[0]];
        let p_out = lay.vertices[cut[m - 1]];
        let outer = split_chain_at(&self.outer, p_out)?;
        let inner = split_chain_at(&self.inner, p_in)?;
        let mut boundary = Vec::new();
        let z2 = 0;
        boundary.extend(outer);
        let z3 = boundary.len();
        boundary.extend(cut_curves.iter().rev().map(|c| c.reversed()));
        let z4 = boundary.len();
        boundary.extend(inner);
        let z1 = boundary.len();
        boundary.extend(cut_curves);
        let q = QuadrilateralProblem {
            name: format!("{}-cut", self.name),
            boundary,
            corners: [z1, z2, z3, z4],
            layout: out,
        };
        q.validate()?;
        Ok(q)
    }
}

impl RingProblem {
    /// Moves the cut vertices onto the path `points` (inner → outer), keeping
    /// their relative chord-length spacing. Cut edges follow a spline through
    /// the path and boundary edges at the two ends are re-windowed so that the
    /// layout stays conforming.
    pub fn with_cut_path(&self, points: &[Point]) -> Result<RingProblem> {
        let m = self.cut.len();
        if m < 2 || points.len() < 2 {
            return Err(Error::Problem("cut path needs at least two points".into()));
        }
        let lay = &self.layout;
        let path = Curve::spline(points.to_vec())?;
        let mut frac = vec![0.0; m];
        for k in 1..m {
            frac[k] =
                frac[k - 1] + (lay.vertices[self.cut[k]] - lay.vertices[self.cut[k - 1]]).norm();
        }
        let total = frac[m - 1];
        frac.iter_mut().for_each(|f| *f /= total);
        frac[m - 1] = 1.0;
        let mut out = self.clone();
        out.auto_cut = false;
        for (k, &v) in self.cut.iter().enumerate() {
            out.layout.vertices[v] = path.eval(frac[k]);
        }
        let position: HashMap<usize, usize> =
            self.cut.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let ends = [self.cut[0], self.cut[m - 1]];
        for e in out.layout.edges.iter_mut() {
            match (position.get(&e.a), position.get(&e.b)) {
                (Some(&i), Some(&j)) if i.abs_diff(j) == 1 => {
                    e.curve = Some(path.sub(frac[i], frac[j]));
                }
                _ if e.tag.is_some() && (ends.contains(&e.a) || ends.contains(&e.b)) => {
                    let old = match &e.curve {
                        Some(c) => c.clone(),
                        None => Curve::segment(lay.vertices[e.a], lay.vertices[e.b]),
                    };
                    let ta = if ends.contains(&e.a) {
                        old.param_of(out.layout.vertices[e.a])
                    } else {
                        0.0
                    };
                    let tb = if ends.contains(&e.b) {
                        old.param_of(out.layout.vertices[e.b])
                    } else {
                        1.0
                    };
                    let c = old.sub(ta, tb);
                    out.layout.vertices[e.a] = c.start();
                    out.layout.vertices[e.b] = c.end();
                    e.curve = if c.is_straight() { None } else { Some(c) };
                }
                _ => {}
            }
        }
        let index = out.layout.edge_index();
        for k in 0..m - 1 {
            let (a, b) = (self.cut[k], self.cut[k + 1]);
            if !index.contains_key(&key(a, b)) {
                out.layout
                    .edge(a, b, Some(path.sub(frac[k], frac[k + 1])), None);
            }
        }
        out.validate()?;
        Ok(out)
    }
}

/// Rotates a closed chain so that it starts at `z`, splitting the curve that
/// contains `z` when needed.
fn split_chain_at(chain: &[Curve], z: Point) -> Result<Vec<Curve>> {
    let diag = bbox_diagonal(&chain_polygon(chain, 16));
    let mut best = (f64::INFINITY, 0, 0.0);
    for (i, c) in chain.iter().enumerate() {
        let t = c.project(z);
        let d = (c.eval(t) - z).norm();
        if d < best.0 {
            best = (d, i, t);
        }
    }
    let (d, i, t) = best;
    if d > 1e-9 * diag {
        return Err(Error::Problem("cut endpoint is not on the boundary".into()));
    }
    let n = chain.len();
    let mut out = Vec::with_capacity(n + 1);
    let tol = 1e-12;
    if t < tol {
        out.extend((0..n).map(|k| chain[(i + k) % n].clone()));
    } else if t > 1.0 - tol {
        out.extend((0..n).map(|k| chain[(i + 1 + k) % n].clone()));
    } else {
        out.push(chain[i].sub(t, 1.0));
        out.extend((1..n).map(|k| chain[(i + k) % n].clone()));
        out.push(chain[i].sub(0.0, t));
    }
    Ok(out)
}

/// Either kind of problem, as stored in problem-definition files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Problem {
    Quadrilateral(QuadrilateralProblem),
    Ring(RingProblem),
}

/// Version tag written into problem files.
pub const PROBLEM_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ProblemFile {
    format: String,
    version: u32,
    problem: Problem,
}

impl Problem {
    pub fn name(&self) -> &str {
        match self {
            Problem::Quadrilateral(q) => &q.name,
            Problem::Ring(r) => &r.name,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Problem::Quadrilateral(q) => q.validate(),
            Problem::Ring(r) => r.validate(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ProblemFile {
            format: "conformal-problem".into(),
            version: PROBLEM_FORMAT_VERSION,
            problem: self.clone(),
        })?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ProblemFile = serde_json::from_str(text)?;
        if file.format != "conformal-problem" || file.version != PROBLEM_FORMAT_VERSION {
            return Err(Error::Problem(format!(
                "unsupported problem file {} v{}",
                file.format, file.version
            )));
        }
        file.problem.validate()?;
        Ok(file.problem)
    }
}

impl From<QuadrilateralProblem> for Problem {
    fn from(q: QuadrilateralProblem) -> Self {
        Problem::Quadrilateral(q)
    }
}

impl From<RingProblem> for Problem {
    fn from(r: RingProblem) -> Self {
        Problem::Ring(r)
    }
}
