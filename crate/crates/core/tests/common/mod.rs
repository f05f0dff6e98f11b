#![allow(dead_code)]

use conformal::geometry::{gallery, GalleryParams, Problem};
use conformal::{
    build_map, build_ring_map, ConformalMap, QuadrilateralProblem, RingProblem, SolveOptions,
};

pub fn problem(name: &str) -> Problem {
    gallery(name, &GalleryParams::new()).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn quadrilateral(name: &str, params: GalleryParams) -> QuadrilateralProblem {
    match gallery(name, &params).unwrap() {
        Problem::Quadrilateral(q) => q,
        Problem::Ring(_) => panic!("{name} is a ring"),
    }
}

pub fn ring(name: &str, params: GalleryParams) -> RingProblem {
    match gallery(name, &params).unwrap() {
        Problem::Ring(r) => r,
        Problem::Quadrilateral(_) => panic!("{name} is a quadrilateral"),
    }
}

/// Map of a gallery entry with default parameters.
pub fn map(name: &str, p: usize) -> ConformalMap {
    let opts = SolveOptions::with_p(p);
    match problem(name) {
        Problem::Quadrilateral(q) => build_map(&q, &opts),
        Problem::Ring(r) => build_ring_map(&r, &opts),
    }
    .unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// Every layout a gallery entry meshes: the quadrilateral, or the ring and
/// its cut quadrilateral.
pub fn layouts(name: &str) -> Vec<conformal::geometry::BlockLayout> {
    match problem(name) {
        Problem::Quadrilateral(q) => vec![q.layout],
        Problem::Ring(r) => vec![r.layout.clone(), r.cut_quadrilateral().unwrap().layout],
    }
}
