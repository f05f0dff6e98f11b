use std::collections::BTreeMap;

use conformal::{ConformalMap, MapKind};
use serde::{Deserialize, Serialize};

pub const REPORT_VERSION: u32 = 1;

/// JSON summary printed by every solving command.
#[derive(Debug, Serialize, Deserialize)]
pub struct RunReport {
    pub format: String,
    pub version: u32,
    pub command: String,
    pub problem: String,
    /// `gallery`, `file` or `bundle`.
    pub source: String,
    pub params: BTreeMap<String, f64>,
    pub kind: MapKind,
    pub p: usize,
    pub levels: usize,
    pub ratio: f64,
    pub elements: usize,
    pub dofs: usize,
    /// `M(Q)`; for rings the modulus of the cut quadrilateral.
    pub modulus: f64,
    pub conjugate_modulus: f64,
    pub rec: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ring: Option<RingReport>,
    pub factorizations: usize,
    pub orthogonality: f64,
    pub timings: Timings,
    pub outputs: Vec<String>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RingReport {
    pub modulus: f64,
    pub capacity: f64,
}

#[derive(Debug, Default, Serialize, Deserialize)]
pub struct Timings {
    pub mesh: f64,
    pub assemble: f64,
    pub solve: f64,
    pub total: f64,
}

impl RunReport {
    pub fn new(
        command: &str,
        source: &str,
        params: BTreeMap<String, f64>,
        map: &ConformalMap,
        total: f64,
    ) -> Self {
        let ring = map.ring_modulus().map(|modulus| RingReport {
            modulus,
            capacity: map.ring_capacity.unwrap_or(map.h),
        });
        Self {
            format: "conformal-report".into(),
            version: REPORT_VERSION,
            command: command.into(),
            problem: map.name().to_string(),
            source: source.into(),
            params,
            kind: map.kind,
            p: map.options.p,
            levels: map.options.levels(),
            ratio: map.options.ratio,
            elements: map.stats.elements,
            dofs: map.stats.dofs,
            modulus: map.h,
            conjugate_modulus: map.conjugate_modulus,
            rec: map.rec_error(),
            ring,
            factorizations: map.stats.factorizations,
            orthogonality: map.stats.orthogonality,
            timings: Timings {
                mesh: map.stats.mesh_seconds,
                assemble: map.stats.assemble_seconds,
                solve: map.stats.solve_seconds,
                total,
            },
            outputs: Vec::new(),
            warnings: Vec::new(),
        }
    }
}
