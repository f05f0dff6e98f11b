mod common;

use std::f64::consts::PI;

use conformal::geometry::curve::{
    chain_polygon, curve_is_simple, polygon_is_simple, signed_area, winding_number,
};
use conformal::geometry::{gallery, gallery_names, Curve, GalleryParams, Problem};
use conformal::{Error, Point};
use proptest::prelude::*;

fn c(x: f64, y: f64) -> Point {
    Point::new(x, y)
}

#[test]
fn curve_point_examples() {
    let a = Curve::astroid(c(-1.0, 0.0), -1.0, 1.0);
    assert!((a.point(0.0).unwrap() - c(-1.0, -1.0)).norm() < 1e-15);
    let f = Curve::rose(c(0.0, 0.0), 0.8, 0.1, 6, 0.0, 2.0 * PI);
    assert!((f.point(0.0).unwrap() - c(0.9, 0.0)).norm() < 1e-15);
    let s = Curve::segment(c(0.0, 0.0), c(1.0, 0.0));
    assert_eq!(s.point(0.5).unwrap(), c(0.5, 0.0));
    assert!(matches!(
        s.point(1.0 + 1e-9),
        Err(Error::ParameterDomain(_))
    ));
}

#[test]
fn unit_disk_corners_are_quarter_turns() {
    let q = common::quadrilateral("unit-disk", GalleryParams::new());
    for (j, z) in q.corner_points().iter().enumerate() {
        let expect = Point::from_polar(1.0, j as f64 * PI / 2.0);
        assert!((z - expect).norm() < 1e-14, "z{} = {z}", j + 1);
    }
}

#[test]
fn rectangle_corners() {
    let q = common::quadrilateral("rectangle", GalleryParams::new().with("h", 1.0));
    let expect = [c(1.0, 1.0), c(0.0, 1.0), c(0.0, 0.0), c(1.0, 0.0)];
    for (z, e) in q.corner_points().iter().zip(expect) {
        assert!((z - e).norm() < 1e-15);
    }
    let q = common::quadrilateral("rectangle", GalleryParams::new().with("h", 2.5));
    assert!((q.corner_points()[0] - c(1.0, 2.5)).norm() < 1e-15);
}

#[test]
fn circle_in_l_defaults() {
    let r = common::ring("circle-in-L", GalleryParams::new());
    let z0 = c(1.6, 0.4);
    for z in chain_polygon(&r.inner, 16) {
        assert!(((z - z0).norm() - 0.2).abs() < 1e-14);
    }
    let outer = chain_polygon(&r.outer, 2);
    let area = signed_area(&outer);
    // L(3, 1, 2, 1): a 3 × 1 bar plus a 1 × 1 square on top of its left end.
    assert!((area - 4.0).abs() < 1e-12, "area {area}");
}

#[test]
fn boundaries_are_simple_and_oriented() {
    for name in gallery_names() {
        match common::problem(name) {
            Problem::Quadrilateral(q) => {
                let poly = chain_polygon(&q.boundary, 64);
                assert!(polygon_is_simple(&poly), "{name}");
                assert!(signed_area(&poly) > 0.0, "{name}");
                for curve in &q.boundary {
                    assert!(curve_is_simple(curve, 256), "{name}");
                }
            }
            Problem::Ring(r) => {
                let outer = chain_polygon(&r.outer, 64);
                let inner = chain_polygon(&r.inner, 64);
                assert!(
                    polygon_is_simple(&outer) && polygon_is_simple(&inner),
                    "{name}"
                );
                assert!(signed_area(&outer) > 0.0, "{name}");
                assert!(signed_area(&inner) < 0.0, "{name}");
                assert!(
                    inner.iter().all(|&z| winding_number(&outer, z) != 0),
                    "{name}"
                );
            }
        }
    }
}

#[test]
fn block_decompositions_conform() {
    for name in gallery_names() {
        for layout in common::layouts(name) {
            let tol = 1e-12 * layout.bbox_diagonal();
            let index = layout.edge_index();
            let mut uses = std::collections::HashMap::new();
            for b in &layout.blocks {
                for k in 0..4 {
                    let (a, z) = (b[k], b[(k + 1) % 4]);
                    let side = layout.side_curve(&index, a, z);
                    assert!((side.start() - layout.vertices[a]).norm() <= tol, "{name}");
                    assert!((side.end() - layout.vertices[z]).norm() <= tol, "{name}");
                    *uses.entry((a.min(z), a.max(z))).or_insert(0) += 1;
                }
            }
            for (edge, n) in uses {
                let tagged = index
                    .get(&edge)
                    .is_some_and(|&i| layout.edges[i].tag.is_some());
                assert_eq!(n, if tagged { 1 } else { 2 }, "{name}: edge {edge:?}");
            }
        }
    }
}

#[test]
fn problem_files_round_trip() {
    for name in gallery_names() {
        let p = common::problem(name);
        let text = p.to_json().unwrap();
        assert_eq!(Problem::from_json(&text).unwrap(), p, "{name}");
    }
    assert!(Problem::from_json("{\"format\":\"conformal-problem\",\"version\":99}").is_err());
}

#[test]
fn gallery_errors() {
    assert!(matches!(
        gallery("no-such-domain", &GalleryParams::new()),
        Err(Error::UnknownGallery(_))
    ));
    for r in [1.0, 1.2, 0.0, -0.3] {
        assert!(
            gallery("disk-in-pentagon", &GalleryParams::new().with("r", r)).is_err(),
            "r = {r}"
        );
    }
    assert!(gallery("rectangle", &GalleryParams::new().with("h", -1.0)).is_err());
    assert!(gallery("flower", &GalleryParams::new().with("nope", 1.0)).is_err());
}

#[test]
fn circular_quadrilateral_caps_are_orthogonal_to_the_unit_circle() {
    let q = common::quadrilateral("circular-quadrilateral", GalleryParams::new());
    let [z1, z2, z3, z4] = q.corner_points();
    for z in [z1, z2, z3, z4] {
        assert!((z.norm() - 1.0).abs() < 1e-14);
    }
    // Corners 1, e^{ia}, e^{ib}, e^{ic} in some cyclic order.
    let mut args: Vec<f64> = [z1, z2, z3, z4]
        .iter()
        .map(|z| z.arg().rem_euclid(2.0 * PI))
        .collect();
    args.sort_by(f64::total_cmp);
    let expect = [0.0, PI / 12.0, 17.0 * PI / 12.0, 1.5 * PI];
    for (a, e) in args.iter().zip(expect) {
        assert!(
            (a - e).abs() < 1e-12 || (a - e).abs() > 2.0 * PI - 1e-12,
            "{a} vs {e}"
        );
    }
}

proptest! {
    #[test]
    fn curves_are_continuous(t in 0.0f64..1.0, which in 0usize..5) {
        let curve = match which {
            0 => Curve::segment(c(0.3, -1.0), c(2.0, 0.5)),
            1 => Curve::arc(c(0.0, 1.0), 0.7, 0.2, 2.9),
            2 => Curve::rose(c(0.0, 0.0), 0.8, 0.1, 6, 0.0, 2.0 * PI),
            3 => Curve::astroid(c(-1.0, 0.0), -1.0, 1.0),
            _ => Curve::spline(vec![c(0.0, 0.0), c(1.0, 0.4), c(2.0, -0.2), c(3.0, 0.1)]).unwrap(),
        };
        let dt = 1e-7;
        let z = curve.point(t).unwrap();
        let w = curve.point((t + dt).min(1.0)).unwrap();
        prop_assert!(z.re.is_finite() && z.im.is_finite());
        prop_assert!((w - z).norm() <= 1e-5);
        prop_assert!(curve.point(1.0 + t + 1e-6).is_err());
        prop_assert!(curve.point(-t - 1e-6).is_err());
    }
}

proptest! {
    // Each case validates a full ring layout.
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn pentagon_radius_inside_range_validates(r in 0.01f64..0.999) {
        let p = gallery("disk-in-pentagon", &GalleryParams::new().with("r", r)).unwrap();
        prop_assert!(p.validate().is_ok());
    }
}
