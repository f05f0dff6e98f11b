//! Curved quadrilateral meshes built from block layouts, with geometric
//! refinement toward marked vertices and globally oriented edges.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::curve::Curve;
use crate::geometry::problem::{key, BlockLayout, BoundaryTag};
use crate::Point;

pub const DEFAULT_RATIO: f64 = 0.15;

/// A mesh edge stored in canonical direction `nodes[0] < nodes[1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeshEdge {
    pub nodes: [usize; 2],
    /// Geometry from `nodes[0]` to `nodes[1]`; `None` for straight edges.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curve: Option<Curve>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tag: Option<BoundaryTag>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Element {
    /// Counter-clockwise node ids.
    pub nodes: [usize; 4],
    /// Edge `k` joins `nodes[k]` and `nodes[(k + 1) % 4]`.
    pub edges: [usize; 4],
    /// `+1` when the local parameter of side `k` runs from the lower to the
    /// higher global node id, `-1` otherwise. Local sides are parameterized
    /// N1→N2, N2→N3, N4→N3, N1→N4.
    pub signs: [i8; 4],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mesh {
    pub nodes: Vec<Point>,
    pub edges: Vec<MeshEdge>,
    pub elements: Vec<Element>,
    pub levels: usize,
    pub ratio: f64,
    pub refined: Vec<usize>,
}

/// Local start/end node of each side in its parameter direction.
pub const SIDE_NODES: [(usize, usize); 4] = [(0, 1), (1, 2), (3, 2), (0, 3)];

struct EdgeGeom {
    a: usize,
    curve: Option<Curve>,
    tag: Option<BoundaryTag>,
}

impl EdgeGeom {
    /// Geometry oriented from `from` to the other end point.
    fn oriented(&self, from: usize) -> Option<Curve> {
        self.curve.as_ref().map(|c| {
            if self.a == from {
                c.clone()
            } else {
                c.reversed()
            }
        })
    }
}

/// Builds the mesh of a block layout, splitting every element at each marked
/// vertex `levels` times so that successive layers sit at `ratio` of the
/// remaining distance to the vertex.
pub fn refine_geometric(layout: &BlockLayout, levels: usize, ratio: f64) -> Result<Mesh> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::Argument(format!(
            "refinement ratio {ratio} not in (0, 1)"
        )));
    }
    layout.validate()?;
    let mut nodes = layout.vertices.clone();
    let mut geom: HashMap<(usize, usize), EdgeGeom> = HashMap::new();
    for e in &layout.edges {
        geom.insert(
            key(e.a, e.b),
            EdgeGeom {
                a: e.a,
                curve: e.curve.clone(),
                tag: e.tag,
            },
        );
    }
    let mut elements: Vec<[usize; 4]> = layout.blocks.clone();
    for b in layout.blocks.iter() {
        for k in 0..4 {
            let (a, c) = (b[k], b[(k + 1) % 4]);
            geom.entry(key(a, c)).or_insert(EdgeGeom {
                a,
                curve: None,
                tag: None,
            });
        }
    }

    for _ in 0..levels {
        for &v in &layout.refine {
            let mut splits: HashMap<(usize, usize), usize> = HashMap::new();
            let incident: Vec<usize> = (0..elements.len())
                .filter(|&i| elements[i].contains(&v))
                .collect();
            // Interior points come from the unsplit geometry of each element.
            let centers: Vec<Point> = incident
                .iter()
                .map(|&i| {
                    let el = elements[i];
                    let r = el.iter().position(|&n| n == v).unwrap();
                    let ids = [0, 1, 2, 3].map(|k| el[(r + k) % 4]);
                    ElementMap::from_geometry(&nodes, ids, |x, y| geom[&key(x, y)].oriented(x))
                        .eval(2.0 * ratio - 1.0, 2.0 * ratio - 1.0)
                })
                .collect();
            for (i, center) in incident.into_iter().zip(centers) {
                let el = elements[i];
                let r = el.iter().position(|&n| n == v).unwrap();
                let [_, a, c, b] = [el[r], el[(r + 1) % 4], el[(r + 2) % 4], el[(r + 3) % 4]];
                let p = split_edge(&mut nodes, &mut geom, &mut splits, v, a, ratio);
                let q = split_edge(&mut nodes, &mut geom, &mut splits, v, b, ratio);
                nodes.push(center);
                let rr = nodes.len() - 1;
                for (x, y) in [(p, rr), (rr, q), (rr, c)] {
                    geom.insert(
                        key(x, y),
                        EdgeGeom {
                            a: x,
                            curve: None,
                            tag: None,
                        },
                    );
                }
                elements[i] = [v, p, rr, q];
                elements.push([p, a, c, rr]);
                elements.push([q, rr, c, b]);
            }
        }
    }

    let mut edge_ids: HashMap<(usize, usize), usize> = HashMap::new();
    let mut edges = Vec::new();
    let mut out = Vec::with_capacity(elements.len());
    for el in &elements {
        let mut ids = [0; 4];
        for k in 0..4 {
            let (a, b) = (el[k], el[(k + 1) % 4]);
            let kk = key(a, b);
            ids[k] = *edge_ids.entry(kk).or_insert_with(|| {
                let g = &geom[&kk];
                edges.push(MeshEdge {
                    nodes: [kk.0, kk.1],
                    curve: g.oriented(kk.0),
                    tag: g.tag,
                });
                edges.len() - 1
            });
        }
        out.push(Element {
            nodes: *el,
            edges: ids,
            signs: [0; 4],
        });
    }
    let mut mesh = Mesh {
        nodes,
        edges,
        elements: out,
        levels,
        ratio,
        refined: layout.refine.clone(),
    };
    orient_edges(&mut mesh);
    mesh.check_topology()?;
    Ok(mesh)
}

fn split_edge(
    nodes: &mut Vec<Point>,
    geom: &mut HashMap<(usize, usize), EdgeGeom>,
    splits: &mut HashMap<(usize, usize), usize>,
    from: usize,
    to: usize,
    ratio: f64,
) -> usize {
    if let Some(&m) = splits.get(&(from, to)) {
        return m;
    }
    let g = geom.remove(&key(from, to)).expect("edge of a live element");
    let (near, far, point) = match g.oriented(from) {
        Some(c) => {
            let point = c.eval(ratio);
            (Some(c.sub(0.0, ratio)), Some(c.sub(ratio, 1.0)), point)
        }
        None => (None, None, nodes[from] + (nodes[to] - nodes[from]) * ratio),
    };
    nodes.push(point);
    let m = nodes.len() - 1;
    geom.insert(
        key(from, m),
        EdgeGeom {
            a: from,
            curve: near,
            tag: g.tag,
        },
    );
    geom.insert(
        key(m, to),
        EdgeGeom {
            a: m,
            curve: far,
            tag: g.tag,
        },
    );
    splits.insert((from, to), m);
    m
}

/// Recomputes the per-element side sign flags from global node ids.
pub fn orient_edges(mesh: &mut Mesh) {
    for el in &mut mesh.elements {
        for (k, &(s, e)) in SIDE_NODES.iter().enumerate() {
            el.signs[k] = if el.nodes[s] < el.nodes[e] { 1 } else { -1 };
        }
    }
}

impl Mesh {
    /// Geometry map of element `e`.
    pub fn element_map(&self, e: usize) -> ElementMap {
        let el = &self.elements[e];
        let mut sides: [Option<Curve>; 4] = Default::default();
        for (k, &(s, _)) in SIDE_NODES.iter().enumerate() {
            let edge = &self.edges[el.edges[k]];
            sides[k] = edge.curve.as_ref().map(|c| {
                if edge.nodes[0] == el.nodes[s] {
                    c.clone()
                } else {
                    c.reversed()
                }
            });
        }
        ElementMap::new(el.nodes.map(|n| self.nodes[n]), sides)
    }

    /// Number of elements sharing each edge.
    pub fn edge_multiplicity(&self) -> Vec<usize> {
        let mut count = vec![0; self.edges.len()];
        for el in &self.elements {
            for &e in &el.edges {
                count[e] += 1;
            }
        }
        count
    }

    pub fn check_topology(&self) -> Result<()> {
        for (i, &m) in self.edge_multiplicity().iter().enumerate() {
            if m == 0 || m > 2 {
                return Err(Error::Mesh(format!("edge {i} is shared by {m} elements")));
            }
            if m == 1 && self.edges[i].tag.is_none() {
                return Err(Error::UntaggedEdge(i));
            }
        }
        Ok(())
    }

    /// Global DOF count for uniform order `p`.
    pub fn dof_count(&self, p: usize) -> usize {
        self.nodes.len() + self.edges.len() * (p - 1) + self.elements.len() * (p - 1) * (p - 1)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn bbox(&self) -> (Point, Point) {
        let mut lo = Point::new(f64::MAX, f64::MAX);
        let mut hi = Point::new(f64::MIN, f64::MIN);
        for edge in &self.edges {
            let pts: Vec<Point> = match &edge.curve {
                Some(c) => c.sample(8),
                None => vec![self.nodes[edge.nodes[0]], self.nodes[edge.nodes[1]]],
            };
            for p in pts {
                lo.re = lo.re.min(p.re);
                lo.im = lo.im.min(p.im);
                hi.re = hi.re.max(p.re);
                hi.im = hi.im.max(p.im);
            }
        }
        (lo, hi)
    }
}

/// Transfinite (Gordon–Hall) map of `[-1, 1]²` onto a curved quadrilateral.
///
/// Sides are stored in their local parameter direction: bottom N1→N2, right
/// N2→N3, top N4→N3, left N1→N4. Straight sides carry no curve, and a map with
/// four straight sides is bilinear.
#[derive(Clone, Debug)]
pub struct ElementMap {
    pub corners: [Point; 4],
    pub sides: [Option<Curve>; 4],
}

impl ElementMap {
    pub fn new(corners: [Point; 4], sides: [Option<Curve>; 4]) -> Self {
        Self { corners, sides }
    }

    /// Map of the quadrilateral `[n0, n1, n2, n3]` (counter-clockwise) where
    /// `side(a, b)` returns the geometry from node `a` to node `b`.
    fn from_geometry(
        nodes: &[Point],
        ids: [usize; 4],
        side: impl Fn(usize, usize) -> Option<Curve>,
    ) -> Self {
        let mut sides: [Option<Curve>; 4] = Default::default();
        for (k, &(s, e)) in SIDE_NODES.iter().enumerate() {
            sides[k] = side(ids[s], ids[e]);
        }
        Self::new(ids.map(|i| nodes[i]), sides)
    }

    pub fn is_straight(&self) -> bool {
        self.sides.iter().all(|s| s.is_none())
    }

    fn side(&self, k: usize, t: f64) -> (Point, Point) {
        let (s, e) = SIDE_NODES[k];
        match &self.sides[k] {
            Some(c) => {
                let u = 0.5 * (t + 1.0);
                (c.eval(u), 0.5 * c.tangent(u))
            }
            None => {
                let (a, b) = (self.corners[s], self.corners[e]);
                (a + (b - a) * (0.5 * (t + 1.0)), 0.5 * (b - a))
            }
        }
    }

    pub fn eval(&self, xi: f64, eta: f64) -> Point {
        self.eval_with_jacobian(xi, eta).0
    }

    /// Image point and the columns `(∂F/∂ξ, ∂F/∂η)`.
    pub fn eval_with_jacobian(&self, xi: f64, eta: f64) -> (Point, Point, Point) {
        let [x1, x2, x3, x4] = self.corners;
        let (ym, ep) = (0.5 * (1.0 - eta), 0.5 * (1.0 + eta));
        let (xm, xp) = (0.5 * (1.0 - xi), 0.5 * (1.0 + xi));
        let bilinear = x1 * (xm * ym) + x2 * (xp * ym) + x3 * (xp * ep) + x4 * (xm * ep);
        let b_xi = (x2 - x1) * (0.5 * ym) + (x3 - x4) * (0.5 * ep);
        let b_eta = (x4 - x1) * (0.5 * xm) + (x3 - x2) * (0.5 * xp);
        if self.is_straight() {
            return (bilinear, b_xi, b_eta);
        }
        let (e1, d1) = self.side(0, xi);
        let (e2, d2) = self.side(1, eta);
        let (e3, d3) = self.side(2, xi);
        let (e4, d4) = self.side(3, eta);
        let f = e1 * ym + e3 * ep + e4 * xm + e2 * xp - bilinear;
        let f_xi = d1 * ym + d3 * ep - e4 * 0.5 + e2 * 0.5 - b_xi;
        let f_eta = -e1 * 0.5 + e3 * 0.5 + d4 * xm + d2 * xp - b_eta;
        (f, f_xi, f_eta)
    }

    /// Jacobian determinant at `(ξ, η)`.
    pub fn det(&self, xi: f64, eta: f64) -> f64 {
        let (_, a, b) = self.eval_with_jacobian(xi, eta);
        a.re * b.im - a.im * b.re
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::problem::BlockLayout;
    use approx::assert_relative_eq;

    fn unit_square() -> BlockLayout {
        let mut l = BlockLayout::default();
        let v: Vec<usize> = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]
            .iter()
            .map(|&(x, y)| l.vertex(Point::new(x, y)))
            .collect();
        l.block([v[0], v[1], v[2], v[3]]);
        let tags = [
            BoundaryTag::Gamma3,
            BoundaryTag::Gamma4,
            BoundaryTag::Gamma1,
            BoundaryTag::Gamma2,
        ];
        for k in 0..4 {
            l.edge(v[k], v[(k + 1) % 4], None, Some(tags[k]));
        }
        l
    }

    #[test]
    fn zero_levels_is_the_layout() {
        let mut l = unit_square();
        l.refine = vec![0];
        let m = refine_geometric(&l, 0, 0.15).unwrap();
        assert_eq!(m.elements.len(), 1);
        assert_eq!(m.nodes.len(), 4);
        assert_eq!(m.edges.len(), 4);
    }

    #[test]
    fn layers_follow_the_ratio_recurrence() {
        let mut l = unit_square();
        l.refine = vec![0];
        let m = refine_geometric(&l, 2, 0.15).unwrap();
        assert_eq!(m.elements.len(), 5);
        let mut on_bottom: Vec<f64> = m
            .nodes
            .iter()
            .filter(|z| z.im == 0.0)
            .map(|z| z.re)
            .collect();
        on_bottom.sort_by(f64::total_cmp);
        assert_eq!(on_bottom.len(), 4);
        assert_relative_eq!(on_bottom[1], 0.0225, epsilon = 1e-15);
        assert_relative_eq!(on_bottom[2], 0.15, epsilon = 1e-15);
        for e in 0..m.elements.len() {
            assert!(m.element_map(e).det(0.0, 0.0) > 0.0);
        }
        assert_eq!(
            m.dof_count(3),
            m.nodes.len() + 2 * m.edges.len() + 4 * m.elements.len()
        );
    }

    #[test]
    fn signs_match_brute_force() {
        let mut l = unit_square();
        l.refine = vec![2, 0];
        let m = refine_geometric(&l, 3, 0.3).unwrap();
        for el in &m.elements {
            // Side parameter directions as corner pairs, checked independently.
            let pairs = [
                (el.nodes[0], el.nodes[1]),
                (el.nodes[1], el.nodes[2]),
                (el.nodes[3], el.nodes[2]),
                (el.nodes[0], el.nodes[3]),
            ];
            for (k, (a, b)) in pairs.iter().enumerate() {
                let edge = &m.edges[el.edges[k]];
                assert!(edge.nodes.contains(a) && edge.nodes.contains(b));
                assert_eq!(el.signs[k] == 1, edge.nodes[0] == *a);
            }
        }
    }

    #[test]
    fn transfinite_map_reproduces_curved_sides() {
        let arc = Curve::arc(Point::new(0.0, 0.0), 1.0, 0.0, std::f64::consts::FRAC_PI_2);
        let corners = [
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(0.0, 1.0),
            Point::new(-0.2, 0.5),
        ];
        let map = ElementMap::new(corners, [None, Some(arc.clone()), None, None]);
        for t in [-1.0, -0.3, 0.4, 1.0] {
            let z = map.eval(1.0, t);
            assert_relative_eq!(z.norm(), 1.0, epsilon = 1e-14);
        }
        for &(x, y) in &[(0.1, 0.2), (-0.5, 0.7), (0.8, -0.9)] {
            let (_, fx, fy) = map.eval_with_jacobian(x, y);
            let h = 1e-6;
            let dx = (map.eval(x + h, y) - map.eval(x - h, y)) / (2.0 * h);
            let dy = (map.eval(x, y + h) - map.eval(x, y - h)) / (2.0 * h);
            assert!((dx - fx).norm() < 1e-8 && (dy - fy).norm() < 1e-8);
        }
    }
}
