mod common;

use conformal::femcore::{assemble, solve_pair, DofClass, DofTable};
use conformal::geometry::{gallery_names, GalleryParams};
use conformal::mesh::{refine_geometric, DEFAULT_RATIO};
use conformal::tracer::Location;
use conformal::{build_map, Error, SolveOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn stiffness_is_symmetric_semidefinite_with_constant_kernel() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for name in gallery_names() {
        for layout in common::layouts(name) {
            let mesh = refine_geometric(&layout, 2, DEFAULT_RATIO).unwrap();
            let p = 4;
            let table = DofTable::classify(&mesh, p, |_| DofClass::B).unwrap();
            let sys = assemble(&mesh, &table).unwrap();
            let nm = sys.map.n_local;
            for e in 0..sys.n_elements() {
                let k = sys.element_matrix(e);
                for i in 0..nm {
                    for j in 0..i {
                        assert!(
                            (k[i * nm + j] - k[j * nm + i]).abs()
                                <= 1e-12 * k[i * nm + i].abs().max(1.0)
                        );
                    }
                }
            }
            for _ in 0..5 {
                let x: Vec<f64> = (0..sys.ndof).map(|_| rng.random_range(-1.0..1.0)).collect();
                let y: Vec<f64> = (0..sys.ndof).map(|_| rng.random_range(-1.0..1.0)).collect();
                assert!(sys.bilinear(&x, &x).unwrap() >= 0.0, "{name}");
                let (xy, yx) = (sys.bilinear(&x, &y).unwrap(), sys.bilinear(&y, &x).unwrap());
                assert!((xy - yx).abs() <= 1e-10 * xy.abs().max(1.0), "{name}");
            }
            let mut one = vec![0.0; sys.ndof];
            one[..mesh.nodes.len()].fill(1.0);
            let scale = (0..sys.n_elements())
                .map(|e| sys.element_matrix(e)[0].abs())
                .fold(0.0, f64::max);
            assert!(
                sys.apply(&one).iter().all(|v| v.abs() <= 1e-11 * scale),
                "{name}"
            );
        }
    }
}

#[test]
fn assembly_is_reproducible() {
    let q = common::quadrilateral("flower", GalleryParams::new());
    let mesh = refine_geometric(&q.layout, 4, DEFAULT_RATIO).unwrap();
    let table = DofTable::primal(&mesh, 6).unwrap();
    let a = assemble(&mesh, &table).unwrap();
    let b = assemble(&mesh, &table).unwrap();
    for e in 0..a.n_elements() {
        let (ka, kb) = (a.element_matrix(e), b.element_matrix(e));
        assert!(ka.iter().zip(kb).all(|(x, y)| x.to_bits() == y.to_bits()));
    }
}

#[test]
fn classes_partition_the_dofs_and_swap_is_an_involution() {
    for name in [
        "unit-disk",
        "flower",
        "asteroid-cusp",
        "circular-quadrilateral",
    ] {
        let q = common::quadrilateral(name, GalleryParams::new());
        let mesh = refine_geometric(&q.layout, 3, DEFAULT_RATIO).unwrap();
        let t = DofTable::primal(&mesh, 5).unwrap();
        let total: usize = [
            DofClass::B,
            DofClass::D0,
            DofClass::D1,
            DofClass::N0,
            DofClass::N1,
        ]
        .iter()
        .map(|&c| t.count(c))
        .sum();
        assert_eq!(total, t.len());
        assert_eq!(t.len(), mesh.dof_count(5));
        assert_eq!(t.swapped().swapped(), t);
        for c in [DofClass::D0, DofClass::D1, DofClass::N0, DofClass::N1] {
            assert!(t.count(c) > 0, "{name}: no {c:?} DOFs");
        }
        // Bubbles are interior.
        for d in t.bubble_start(0)..t.len() {
            assert_eq!(t.classes[d], DofClass::B);
        }
    }
}

#[test]
fn untagged_boundary_edge_is_an_error() {
    let q = common::quadrilateral("rectangle", GalleryParams::new());
    let mut mesh = refine_geometric(&q.layout, 0, DEFAULT_RATIO).unwrap();
    let e = mesh.edges.iter().position(|e| e.tag.is_some()).unwrap();
    mesh.edges[e].tag = None;
    assert!(matches!(DofTable::primal(&mesh, 2), Err(Error::UntaggedEdge(i)) if i == e));
}

#[test]
fn energy_checks_dimensions() {
    let q = common::quadrilateral("rectangle", GalleryParams::new());
    let mesh = refine_geometric(&q.layout, 0, DEFAULT_RATIO).unwrap();
    let t = DofTable::primal(&mesh, 3).unwrap();
    let sys = assemble(&mesh, &t).unwrap();
    assert!(matches!(
        sys.bilinear(&[1.0], &[1.0]),
        Err(Error::Dimension { .. })
    ));
}

#[test]
fn unit_square_solutions_are_linear() {
    let q = common::quadrilateral("rectangle", GalleryParams::new().with("h", 1.0));
    let m = build_map(&q, &SolveOptions::with_p(1)).unwrap();
    assert!((m.h - 1.0).abs() < 1e-14);
    assert!(m.rec_error() <= 1e-15);
    for (n, z) in m.mesh.nodes.iter().enumerate() {
        assert!((m.u1.coeffs[n] - z.re).abs() < 1e-14);
        assert!((m.u2.coeffs[n] - z.im).abs() < 1e-14);
    }
}

#[test]
fn dirichlet_coefficients_are_exact() {
    let q = common::quadrilateral("flower", GalleryParams::new());
    let mesh = refine_geometric(&q.layout, 4, DEFAULT_RATIO).unwrap();
    let primal = DofTable::primal(&mesh, 6).unwrap();
    let conj = DofTable::conjugate(&mesh, 6).unwrap();
    let sys = assemble(&mesh, &primal).unwrap();
    let sol = solve_pair(&sys, &primal, &conj).unwrap();
    assert_eq!(sol.factorizations, 1);
    for (table, field) in [(&primal, &sol.u1), (&conj, &sol.u2)] {
        for (d, c) in table.classes.iter().enumerate() {
            let expect = match c {
                DofClass::D0 => 0.0,
                DofClass::D1 if d < table.n_nodes => 1.0,
                DofClass::D1 => 0.0,
                _ => continue,
            };
            assert_eq!(field.coeffs[d], expect, "DOF {d} ({c:?})");
        }
    }
}

#[test]
fn maximum_principle_and_orthogonality() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for name in [
        "unit-disk",
        "flower",
        "asteroid-cusp",
        "circular-quadrilateral",
    ] {
        let m = common::map(name, 12);
        assert_eq!(m.stats.factorizations, 1);
        assert!(
            m.stats.orthogonality <= 1e-8,
            "{name}: {:e}",
            m.stats.orthogonality
        );
        assert!(m.rec_error() <= 1e-6, "{name}: rec {:e}", m.rec_error());
        let ev = m.evaluator();
        for _ in 0..1000 {
            let loc = Location {
                element: rng.random_range(0..m.mesh.elements.len()),
                xi: rng.random_range(-1.0..1.0),
                eta: rng.random_range(-1.0..1.0),
            };
            let s = ev.eval_at(loc, &[&m.u1.coeffs, &m.u2.coeffs]);
            for v in [s[0].value, s[1].value] {
                assert!((-1e-6..=1.0 + 1e-6).contains(&v), "{name}: {v}");
            }
        }
    }
}

#[test]
fn matrix_market_dump_lists_the_lower_triangle() {
    let q = common::quadrilateral("unit-disk", GalleryParams::new());
    let mesh = refine_geometric(&q.layout, 1, DEFAULT_RATIO).unwrap();
    let t = DofTable::primal(&mesh, 3).unwrap();
    let sys = assemble(&mesh, &t).unwrap();
    let mut out = Vec::new();
    sys.write_matrix_market(&mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('%'));
    let header: Vec<usize> = lines
        .next()
        .unwrap()
        .split_whitespace()
        .map(|v| v.parse().unwrap())
        .collect();
    assert_eq!(header[0], sys.ndof);
    let mut count = 0;
    for line in lines {
        let f: Vec<&str> = line.split_whitespace().collect();
        let (i, j): (usize, usize) = (f[0].parse().unwrap(), f[1].parse().unwrap());
        assert!(j <= i && i <= sys.ndof);
        count += 1;
    }
    assert_eq!(count, header[2]);
}
