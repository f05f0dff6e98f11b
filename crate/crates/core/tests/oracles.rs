use std::f64::consts::PI;

use conformal::oracles::{
    agm, annulus_potential, circular_quadrilateral_modulus, elliptic_k, elliptic_k_series,
    elliptic_kp, orthogonal_circle, sn_complex, sncndn, EllipticParams,
};
use conformal::Point;
use num_complex::Complex64;
use proptest::prelude::*;

#[test]
fn agm_examples() {
    assert_eq!(agm(1.0, 1.0), 1.0);
    // Gauss's constant.
    assert!((1.0 / agm(1.0, 2f64.sqrt()) - 0.8346268416740731).abs() < 1e-15);
    assert!((elliptic_k(0.0) - PI / 2.0).abs() < 1e-15);
    assert!((elliptic_k_series(0.3) - elliptic_k(0.3)).abs() < 1e-14);
    let k = 0.6f64;
    assert!((elliptic_kp(k) - elliptic_k(0.8)).abs() < 1e-14);
}

#[test]
fn rectangle_to_disk_round_shape() {
    for h in [0.5, 1.0, 1.7] {
        let e = EllipticParams::new(h).unwrap();
        assert!(e.aspect_residual() <= 1e-12, "h = {h}");
        let centre = e.rect_to_disk(Point::new(0.5, 0.5 * h)).unwrap();
        assert!(centre.norm() <= 1e-12, "h = {h}: {centre}");
        for t in 0..=20 {
            let s = t as f64 / 20.0;
            for z in [
                Point::new(s, 0.0),
                Point::new(1.0, s * h),
                Point::new(s, h),
                Point::new(0.0, s * h),
            ] {
                assert!(
                    (e.rect_to_disk(z).unwrap().norm() - 1.0).abs() <= 1e-9,
                    "h = {h}, z = {z}"
                );
            }
        }
        assert!(e.rect_to_disk(Point::new(1.1, 0.2)).is_err());
        assert!(e.rect_to_disk(Point::new(0.2, -0.1)).is_err());
    }
    assert!(EllipticParams::new(0.0).is_err());
    assert!(EllipticParams::new(f64::NAN).is_err());
}

#[test]
fn annulus_potential_rejects_points_outside() {
    assert!(annulus_potential(0.5, 1.0, Point::new(0.2, 0.0)).is_err());
    assert!(annulus_potential(0.5, 1.0, Point::new(1.2, 0.0)).is_err());
    assert!(annulus_potential(1.0, 0.5, Point::new(0.7, 0.0)).is_err());
}

#[test]
fn orthogonal_circles_meet_the_unit_circle_at_right_angles() {
    for (a, b) in [(0.0, 0.3), (1.0, 2.5), (4.0, 6.0)] {
        let (c, r) = orthogonal_circle(a, b);
        for t in [a, b] {
            let z = Point::from_polar(1.0, t);
            assert!(((z - c).norm() - r).abs() < 1e-13);
        }
        // Orthogonality: |c|² = 1 + r².
        assert!((c.norm_sqr() - 1.0 - r * r).abs() < 1e-12);
    }
}

#[test]
fn circular_quadrilateral_symmetry() {
    let (a, b, c) = (0.4, 2.0, 3.5);
    let m = circular_quadrilateral_modulus(a, b, c).unwrap();
    // Reflection z -> e^{ia} conj(z) swaps 1 and e^{ia}.
    let reflected = circular_quadrilateral_modulus(a, a - c + 2.0 * PI, a - b + 2.0 * PI).unwrap();
    // Rotation by -b puts the second circle first.
    let rotated = circular_quadrilateral_modulus(c - b, 2.0 * PI - b, 2.0 * PI - b + a).unwrap();
    assert!((m - reflected).abs() < 1e-13 * m, "{m} {reflected}");
    assert!((m - rotated).abs() < 1e-13 * m, "{m} {rotated}");
}

proptest! {
    #[test]
    fn jacobi_identities(u in -6.0f64..6.0, k in 0.0f64..0.9999) {
        let (s, c, d) = sncndn(u, k);
        prop_assert!((s * s + c * c - 1.0).abs() < 1e-12);
        prop_assert!((d * d + k * k * s * s - 1.0).abs() < 1e-12);
        let (s_neg, c_neg, _) = sncndn(-u, k);
        prop_assert!((s_neg + s).abs() < 1e-12 && (c_neg - c).abs() < 1e-12);
    }

    #[test]
    fn complex_sn_reduces_to_real(x in -3.0f64..3.0, k in 0.0f64..0.99) {
        let s = sn_complex(Complex64::new(x, 0.0), k);
        prop_assert!((s.re - sncndn(x, k).0).abs() < 1e-13 && s.im.abs() < 1e-13);
    }

    #[test]
    fn aspect_is_recovered(h in 0.2f64..5.0) {
        prop_assert!(EllipticParams::new(h).unwrap().aspect_residual() <= 1e-12 * h.max(1.0));
    }

    #[test]
    fn rect_to_disk_stays_inside(h in 0.3f64..3.0, x in 0.01f64..0.99, y in 0.01f64..0.99) {
        let e = EllipticParams::new(h).unwrap();
        prop_assert!(e.rect_to_disk(Point::new(x, y * h)).unwrap().norm() < 1.0);
    }
}
