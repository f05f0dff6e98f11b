//! Domain descriptions: boundary curves, problem definitions and the gallery.

pub mod curve;
pub mod gallery;
pub mod problem;

pub use curve::{Curve, Shape};
pub use gallery::{gallery, gallery_names, GalleryParams};
pub use problem::{
    BlockLayout, BoundaryTag, LayoutEdge, Problem, QuadrilateralProblem, RingProblem,
};
