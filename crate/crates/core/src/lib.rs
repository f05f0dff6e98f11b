//! Numerical conformal mappings of quadrilaterals and ring domains by the
//! conjugate function method on top of an hp finite element solver.
//!
//! The pipeline is: describe a domain ([`geometry`]), build a geometrically
//! graded curved quadrilateral mesh ([`mesh`]), solve the Laplace problem and
//! its conjugate with one shared factorization ([`femcore`]), assemble the
//! mapping and moduli ([`conjugate`]) and trace the pre-image of a canonical
//! grid ([`tracer`]). [`oracles`] holds closed-form reference maps.

pub mod basis;
pub mod conjugate;
pub mod error;
pub mod femcore;
pub mod geometry;
pub mod mesh;
pub mod oracles;
pub mod tracer;

/// Points in the plane are complex numbers.
pub type Point = num_complex::Complex64;

pub use conjugate::{
    build_map, build_ring_map, solve_ring, ConformalMap, MapBundle, MapKind, SolveOptions,
};
pub use error::{Error, Result};
pub use geometry::{Curve, Problem, QuadrilateralProblem, RingProblem};
