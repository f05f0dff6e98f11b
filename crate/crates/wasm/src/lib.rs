//! Browser bindings: solve a gallery domain, trace its canonical grid and
//! evaluate the map at a point. Results cross the boundary as JSON strings.

use std::collections::BTreeMap;

use conformal::geometry::curve::chain_polygon;
use conformal::geometry::{gallery, gallery_names, GalleryParams};
use conformal::tracer::{canonical_grid, uniform_levels, TraceOptions};
use conformal::{build_map, build_ring_map, ConformalMap, MapKind, Point, Problem, SolveOptions};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

/// Largest order offered to the page; higher orders take too long in a tab.
pub const MAX_P: usize = 10;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn parse_params(params_json: &str) -> Result<GalleryParams, String> {
    if params_json.trim().is_empty() {
        return Ok(GalleryParams::new());
    }
    let map: BTreeMap<String, f64> = serde_json::from_str(params_json).map_err(err)?;
    Ok(GalleryParams(map))
}

/// A solved map kept alive between calls from the page.
#[wasm_bindgen]
pub struct Session {
    map: ConformalMap,
}

impl Session {
    pub fn create(name: &str, params_json: &str, p: usize) -> Result<Session, String> {
        if !(1..=MAX_P).contains(&p) {
            return Err(format!("order p = {p} outside 1..={MAX_P}"));
        }
        let opts = SolveOptions::with_p(p);
        let map = match gallery(name, &parse_params(params_json)?).map_err(err)? {
            Problem::Quadrilateral(q) => build_map(&q, &opts),
            Problem::Ring(r) => build_ring_map(&r, &opts),
        }
        .map_err(err)?;
        Ok(Session { map })
    }

    pub fn summary_value(&self) -> Value {
        let m = &self.map;
        json!({
            "problem": m.name(),
            "kind": m.kind,
            "p": m.options.p,
            "elements": m.stats.elements,
            "dofs": m.stats.dofs,
            "modulus": m.h,
            "conjugate_modulus": m.conjugate_modulus,
            "rec": m.rec_error(),
            "ring_modulus": m.ring_modulus(),
        })
    }

    /// Boundary polygons and traced contours, in domain coordinates.
    pub fn grid_value(&self, nu: usize, nv: usize) -> Value {
        let opts = TraceOptions::for_map(&self.map);
        let contours = canonical_grid(&self.map, &uniform_levels(nu), &uniform_levels(nv), &opts);
        let xy = |pts: &[Point]| pts.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>();
        let boundary: Vec<_> = self
            .map
            .boundary_chains()
            .iter()
            .map(|c| xy(&chain_polygon(c, 64)))
            .collect();
        let lines: Vec<_> = contours
            .iter()
            .map(
                |c| json!({ "family": c.family.name(), "level": c.level, "points": xy(&c.points) }),
            )
            .collect();
        json!({ "boundary": boundary, "contours": lines, "cut": self.map.cut_polyline().map(|c| xy(&c)) })
    }

    /// `f(z)` and the canonical coordinates of `z`.
    pub fn point_value(&self, x: f64, y: f64) -> Result<Value, String> {
        let z = Point::new(x, y);
        let w = self.map.eval(z).map_err(err)?;
        let s = self.map.fields_at(z).map_err(err)?;
        let target = match self.map.kind {
            MapKind::Rectangle => "rectangle",
            MapKind::Annulus => "annulus",
        };
        Ok(json!({ "w": [w.re, w.im], "u1": s[0].value, "u2": s[1].value, "target": target }))
    }
}

#[wasm_bindgen]
impl Session {
    #[wasm_bindgen(constructor)]
    pub fn new(name: &str, params_json: &str, p: usize) -> Result<Session, JsError> {
        Session::create(name, params_json, p).map_err(|e| JsError::new(&e))
    }

    pub fn summary(&self) -> String {
        self.summary_value().to_string()
    }

    pub fn grid(&self, nu: usize, nv: usize) -> String {
        self.grid_value(nu, nv).to_string()
    }

    pub fn map_point(&self, x: f64, y: f64) -> Result<String, JsError> {
        self.point_value(x, y)
            .map(|v| v.to_string())
            .map_err(|e| JsError::new(&e))
    }
}

/// Gallery entry names as a JSON array.
#[wasm_bindgen]
pub fn gallery_list() -> String {
    serde_json::to_string(gallery_names()).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn session_round_trip() {
        let s = Session::create("unit-disk", "", 4).unwrap();
        let summary = s.summary_value();
        assert!((summary["modulus"].as_f64().unwrap() - 1.0).abs() < 1e-3);
        let grid = s.grid_value(2, 3);
        assert_eq!(grid["contours"].as_array().unwrap().len(), 5);
        assert_eq!(grid["boundary"].as_array().unwrap().len(), 1);
        let p = s.point_value(0.0, 0.0).unwrap();
        let w = p["w"].as_array().unwrap();
        assert!((w[0].as_f64().unwrap() - 0.5).abs() < 1e-3);
        assert!(s.point_value(3.0, 0.0).is_err());
    }

    #[test]
    fn ring_session_has_a_cut() {
        let s = Session::create("annulus", "{}", 3).unwrap();
        assert!(s.summary_value()["ring_modulus"].as_f64().is_some());
        let grid = s.grid_value(1, 1);
        assert_eq!(grid["boundary"].as_array().unwrap().len(), 2);
        assert!(grid["cut"].is_array());
        let p = s.point_value(0.6, 0.1).unwrap();
        assert_eq!(p["target"], "annulus");
    }

    #[test]
    fn bad_input_is_reported() {
        assert!(Session::create("nope", "", 4).is_err());
        assert!(Session::create("disk-in-pentagon", r#"{"r": 2}"#, 4).is_err());
        assert!(Session::create("flower", "not json", 4).is_err());
        assert!(Session::create("flower", "", MAX_P + 1).is_err());
        assert!(gallery_list().contains("circle-in-L"));
    }
}
