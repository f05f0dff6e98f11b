//! Built-in regression suite: reference moduli of the gallery domains, the
//! reciprocal identity and the elliptic rectangle → disk map.

use std::f64::consts::PI;

use conformal::geometry::{gallery, GalleryParams, Problem};
use conformal::oracles::{circular_quadrilateral_modulus, EllipticParams};
use conformal::{build_map, build_ring_map, ConformalMap, Point, Result, SolveOptions};
use serde::Serialize;

/// Which number of a solved map a reference value is compared with.
#[derive(Clone, Copy)]
enum Quantity {
    Modulus,
    ConjugateModulus,
    RingModulus,
    ExpRingModulus,
}

struct Case {
    group: &'static str,
    entry: &'static str,
    params: &'static [(&'static str, f64)],
    checks: &'static [(Quantity, f64)],
}

const CASES: &[Case] = &[
    Case {
        group: "unit-disk",
        entry: "unit-disk",
        params: &[],
        checks: &[(Quantity::Modulus, 1.0)],
    },
    Case {
        group: "flower",
        entry: "flower",
        params: &[],
        checks: &[(Quantity::Modulus, 1.0)],
    },
    Case {
        group: "circular-quadrilateral",
        entry: "circular-quadrilateral",
        params: &[],
        checks: &[
            (Quantity::Modulus, 0.63058735108478),
            (Quantity::ConjugateModulus, 1.585823119159254),
        ],
    },
    Case {
        group: "asteroid-cusp",
        entry: "asteroid-cusp",
        params: &[],
        checks: &[(Quantity::Modulus, 0.68435408764536)],
    },
    Case {
        group: "cross-in-square",
        entry: "cross-in-square",
        params: &[],
        checks: &[(Quantity::RingModulus, 0.2862861647287473)],
    },
    Case {
        group: "circle-in-square",
        entry: "circle-in-square",
        params: &[],
        checks: &[(Quantity::RingModulus, 0.9920378629010557)],
    },
    Case {
        group: "flower-in-square",
        entry: "flower-in-square",
        params: &[],
        checks: &[(Quantity::RingModulus, 0.6669554623348065)],
    },
    Case {
        group: "circle-in-L",
        entry: "circle-in-L",
        params: &[],
        checks: &[(Quantity::RingModulus, 1.0935085836560234)],
    },
    Case {
        group: "droplet-in-square",
        entry: "droplet-in-square",
        params: &[],
        checks: &[(Quantity::RingModulus, 0.8979775098918368)],
    },
    Case {
        group: "disk-in-pentagon",
        entry: "disk-in-pentagon",
        params: &[("r", 0.1)],
        checks: &[(Quantity::ExpRingModulus, 10.524652459913115)],
    },
    Case {
        group: "disk-in-pentagon",
        entry: "disk-in-pentagon",
        params: &[("r", 0.4)],
        checks: &[(Quantity::ExpRingModulus, 2.631159438480101)],
    },
    Case {
        group: "disk-in-pentagon",
        entry: "disk-in-pentagon",
        params: &[("r", 0.9)],
        checks: &[(Quantity::ExpRingModulus, 1.1626499971978235)],
    },
    Case {
        group: "disk-in-pentagon",
        entry: "disk-in-pentagon",
        params: &[("r", 0.99)],
        checks: &[(Quantity::ExpRingModulus, 1.0333114143138304)],
    },
    Case {
        group: "disk-in-pentagon",
        entry: "disk-in-pentagon",
        params: &[("r", 0.999)],
        checks: &[(Quantity::ExpRingModulus, 1.0093903757950962)],
    },
];

const ELLIPTIC_H: [f64; 6] = [1.0, 1.2, 1.4, 1.6, 1.8, 2.0];

/// Groups whose reference value cannot be matched with the gallery domain as
/// defined; they still count as failures.
const KNOWN: [&str; 1] = ["droplet-in-square"];

pub fn groups() -> Vec<&'static str> {
    let mut g: Vec<&str> = CASES.iter().map(|c| c.group).collect();
    g.dedup();
    g.push("elliptic");
    g
}

#[derive(Debug, Serialize)]
pub struct Row {
    pub group: String,
    pub case: String,
    pub quantity: String,
    pub value: f64,
    pub reference: Option<f64>,
    pub error: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub known: bool,
}

impl Row {
    /// `|value / reference - 1| <= tol`.
    fn relative(
        group: &str,
        case: &str,
        quantity: &str,
        value: f64,
        reference: f64,
        tol: f64,
    ) -> Self {
        let error = (value / reference - 1.0).abs();
        Self {
            group: group.into(),
            case: case.into(),
            quantity: quantity.into(),
            value,
            reference: Some(reference),
            error,
            tolerance: tol,
            pass: error <= tol,
            known: KNOWN.contains(&group),
        }
    }

    /// `value <= tol`.
    fn gate(group: &str, case: &str, quantity: &str, value: f64, tol: f64) -> Self {
        Self {
            group: group.into(),
            case: case.into(),
            quantity: quantity.into(),
            value,
            reference: None,
            error: value,
            tolerance: tol,
            pass: value <= tol,
            known: KNOWN.contains(&group),
        }
    }
}

pub struct Gates {
    pub modulus_rel: f64,
    pub rec: f64,
    pub max: f64,
    pub mean: f64,
}

impl Default for Gates {
    fn default() -> Self {
        Self {
            modulus_rel: 1e-6,
            rec: 1e-8,
            max: 1e-6,
            mean: 1e-7,
        }
    }
}

fn solve(entry: &str, params: &GalleryParams, opts: &SolveOptions) -> Result<ConformalMap> {
    match gallery(entry, params)? {
        Problem::Quadrilateral(q) => build_map(&q, opts),
        Problem::Ring(r) => build_ring_map(&r, opts),
    }
}

fn case_label(entry: &str, params: &[(&str, f64)]) -> String {
    let mut s = entry.to_string();
    for (k, v) in params {
        s.push_str(&format!(" {k}={v}"));
    }
    s
}

/// Runs the selected groups (all when `only` is empty).
pub fn run(
    opts: &SolveOptions,
    only: &[String],
    gates: &Gates,
    mut progress: impl FnMut(&str),
) -> Result<Vec<Row>> {
    let wanted = |g: &str| only.is_empty() || only.iter().any(|o| o == g);
    let mut rows = Vec::new();
    for case in CASES.iter().filter(|c| wanted(c.group)) {
        let label = case_label(case.entry, case.params);
        progress(&label);
        let mut params = GalleryParams::new();
        for &(k, v) in case.params {
            params = params.with(k, v);
        }
        let map = solve(case.entry, &params, opts)?;
        for &(q, reference) in case.checks {
            let (name, value) = match q {
                Quantity::Modulus => ("M(Q)", map.h),
                Quantity::ConjugateModulus => ("M(Q~)", map.conjugate_modulus),
                Quantity::RingModulus => ("M(R)", map.ring_modulus().unwrap_or(f64::NAN)),
                Quantity::ExpRingModulus => {
                    ("exp M(R)", map.ring_modulus().unwrap_or(f64::NAN).exp())
                }
            };
            rows.push(Row::relative(
                case.group,
                &label,
                name,
                value,
                reference,
                gates.modulus_rel,
            ));
        }
        if case.entry == "circular-quadrilateral" {
            let closed = circular_quadrilateral_modulus(PI / 12.0, 17.0 * PI / 12.0, 1.5 * PI)?;
            rows.push(Row::relative(
                case.group,
                &label,
                "M(Q) closed form",
                map.h,
                closed,
                gates.modulus_rel,
            ));
        }
        rows.push(Row::gate(
            case.group,
            &label,
            "rec(Q)",
            map.rec_error(),
            gates.rec,
        ));
    }
    if wanted("elliptic") {
        for h in ELLIPTIC_H {
            let label = format!("unit-disk h={h}");
            progress(&label);
            let map = solve("unit-disk", &GalleryParams::new().with("h", h), opts)?;
            let e = EllipticParams::new(h)?;
            let (mut max, mut sum, mut n) = (0.0f64, 0.0, 0usize);
            for i in 0..=10 {
                for j in 0..=10 {
                    let z = Point::new(i as f64 / 10.0, h * j as f64 / 10.0);
                    let err = match map.eval_rect(e.rect_to_disk(z)?) {
                        Ok(f) => (f - z).norm(),
                        Err(_) => f64::INFINITY,
                    };
                    max = max.max(err);
                    sum += err;
                    n += 1;
                }
            }
            let mean = sum / n as f64;
            rows.push(Row::gate(
                "elliptic",
                &label,
                "max |f - f_exact|",
                max,
                gates.max,
            ));
            rows.push(Row::gate(
                "elliptic",
                &label,
                "mean |f - f_exact|",
                mean,
                gates.mean,
            ));
            rows.push(Row::gate(
                "elliptic",
                &label,
                "rec(Q)",
                map.rec_error(),
                gates.rec,
            ));
        }
    }
    Ok(rows)
}

pub fn print_table(rows: &[Row], mut out: impl std::io::Write) -> std::io::Result<()> {
    writeln!(
        out,
        "{:<6} {:<28} {:<20} {:>22} {:>22} {:>10}",
        "status", "case", "quantity", "value", "reference", "error"
    )?;
    for r in rows {
        let status = match (r.pass, r.known) {
            (true, _) => "pass",
            (false, false) => "FAIL",
            (false, true) => "FAIL*",
        };
        let (value, reference) = match r.reference {
            Some(v) => (format!("{:.16}", r.value), format!("{v:.16}")),
            None => (
                format!("{:.3e}", r.value),
                format!("<= {:.0e}", r.tolerance),
            ),
        };
        writeln!(
            out,
            "{status:<6} {:<28} {:<20} {value:>22} {reference:>22} {:>10.2e}",
            r.case, r.quantity, r.error
        )?;
    }
    let failed = rows.iter().filter(|r| !r.pass).count();
    writeln!(
        out,
        "{} of {} checks passed",
        rows.len() - failed,
        rows.len()
    )?;
    if rows.iter().any(|r| !r.pass && r.known) {
        writeln!(
            out,
            "* reference value not reproducible with the gallery domain as defined"
        )?;
    }
    Ok(())
}
