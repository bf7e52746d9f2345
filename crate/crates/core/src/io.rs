//! Graph-spec documents and band-data exporters.
//!
//! A graph spec is a JSON document:
//!
//! ```json
//! {
//!   "dimension": 2,
//!   "vertices": [{"name": "v", "potential": 0, "weight": 1}],
//!   "edges": [
//!     {"from": "v", "to": "v", "index": [1, 0], "alpha": "pi/2"},
//!     {"from": "v", "to": "v", "index": [0, 1]}
//!   ]
//! }
//! ```
//!
//! `potential` and `alpha` default to 0, `weight` to 1. Real numbers may be
//! written as JSON numbers or as strings scaled by π: "pi", "-pi/2",
//! "3pi/4", "2*pi/3", "1/3". Unknown keys are rejected.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt::{self, Write as _};

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};
use serde_json::{json, Value};

use crate::bounds::BoundReport;
use crate::error::{Error, Result};
use crate::graph::{Edge, FundamentalGraph, Vertex};
use crate::spectrum::{BandPath, BandStructure};
use crate::topology::FluxData;

/// A real number read from a JSON number or a π-expression string.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Real(f64);

impl Serialize for Real {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_f64(self.0)
    }
}

impl<'de> Deserialize<'de> for Real {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct RealVisitor;

        impl Visitor<'_> for RealVisitor {
            type Value = Real;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or a pi expression such as \"-pi/2\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Real, E> {
                Ok(Real(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Real, E> {
                Ok(Real(v as f64))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Real, E> {
                Ok(Real(v as f64))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Real, E> {
                parse_real(v).map(Real).map_err(E::custom)
            }
        }

        deserializer.deserialize_any(RealVisitor)
    }
}

/// Parses "[-]c[*]pi[/q]" or a plain "[-]a[/b]" decimal.
pub fn parse_real(text: &str) -> std::result::Result<f64, String> {
    let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect::<String>().to_lowercase();
    let bad = || format!("cannot read {text:?} as a number or pi expression");
    let (sign, body) = match compact.strip_prefix('-') {
        Some(rest) => (-1.0, rest),
        None => (1.0, compact.strip_prefix('+').unwrap_or(&compact)),
    };
    let (numerator, denominator) = match body.split_once('/') {
        Some((n, d)) => (n, Some(d)),
        None => (body, None),
    };
    let value = if let Some(coefficient) = numerator.strip_suffix("pi") {
        let coefficient = coefficient.strip_suffix('*').unwrap_or(coefficient);
        let c = if coefficient.is_empty() {
            1.0
        } else {
            coefficient.parse::<f64>().map_err(|_| bad())?
        };
        c * PI
    } else {
        numerator.parse::<f64>().map_err(|_| bad())?
    };
    let divisor = match denominator {
        Some(d) => d.parse::<f64>().map_err(|_| bad())?,
        None => 1.0,
    };
    if divisor == 0.0 || !value.is_finite() {
        return Err(bad());
    }
    Ok(sign * value / divisor)
}

fn zero() -> Real {
    Real(0.0)
}

fn one() -> Real {
    Real(1.0)
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct SpecFile {
    dimension: usize,
    vertices: Vec<VertexSpec>,
    edges: Vec<EdgeSpec>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct VertexSpec {
    name: String,
    #[serde(default = "zero")]
    potential: Real,
    #[serde(default = "one")]
    weight: Real,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct EdgeSpec {
    from: String,
    to: String,
    index: Vec<i64>,
    #[serde(default = "one")]
    weight: Real,
    #[serde(default = "zero")]
    alpha: Real,
}

/// Parses and validates a graph spec; ids follow declaration order.
pub fn parse_spec(text: &str) -> Result<FundamentalGraph> {
    let spec: SpecFile = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let mut ids: HashMap<&str, usize> = HashMap::new();
    let mut vertices = Vec::with_capacity(spec.vertices.len());
    for (id, v) in spec.vertices.iter().enumerate() {
        if ids.insert(v.name.as_str(), id).is_some() {
            return Err(Error::DuplicateVertexName(v.name.clone()));
        }
        vertices.push(Vertex {
            id,
            name: v.name.clone(),
            potential: v.potential.0,
            weight: v.weight.0,
        });
    }
    let lookup = |edge: usize, name: &str| {
        ids.get(name).copied().ok_or_else(|| Error::UnknownVertexName {
            edge,
            name: name.to_string(),
        })
    };
    let mut edges = Vec::with_capacity(spec.edges.len());
    for (id, e) in spec.edges.iter().enumerate() {
        edges.push(Edge {
            id,
            tail: lookup(id, &e.from)?,
            head: lookup(id, &e.to)?,
            index: e.index.clone(),
            weight: e.weight.0,
            alpha: e.alpha.0,
        });
    }
    FundamentalGraph::new(spec.dimension, vertices, edges)
}

/// Serializes a graph as a spec document that parses back to the same graph.
pub fn to_spec_string(graph: &FundamentalGraph) -> String {
    let spec = SpecFile {
        dimension: graph.dimension(),
        vertices: graph
            .vertices()
            .iter()
            .map(|v| VertexSpec {
                name: v.name.clone(),
                potential: Real(v.potential),
                weight: Real(v.weight),
            })
            .collect(),
        edges: graph
            .edges()
            .iter()
            .map(|e| EdgeSpec {
                from: graph.vertices()[e.tail].name.clone(),
                to: graph.vertices()[e.head].name.clone(),
                index: e.index.clone(),
                weight: Real(e.weight),
                alpha: Real(e.alpha),
            })
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&spec).expect("spec serializes");
    text.push('\n');
    text
}

/// Shortest round-trip decimal; exponent notation for very small or large magnitudes.
pub fn fmt_real(x: f64) -> String {
    let a = x.abs();
    if x != 0.0 && !(1e-4..1e15).contains(&a) {
        format!("{x:e}")
    } else {
        format!("{}", x + 0.0)
    }
}

/// One row per grid point: grid coordinates, then ascending eigenvalues.
pub fn band_csv(band_structure: &BandStructure) -> String {
    let d = band_structure.grid.dimension();
    let nu = band_structure.nu();
    let mut out = String::new();
    let header: Vec<String> = (1..=d)
        .map(|j| format!("theta_{j}"))
        .chain((1..=nu).map(|n| format!("lambda_{n}")))
        .collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for (i, row) in band_structure.values.iter().enumerate() {
        let fields: Vec<String> = band_structure
            .grid
            .point(i)
            .iter()
            .chain(row)
            .map(|&x| fmt_real(x))
            .collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

/// Arclength, θ coordinates and eigenvalues along a path.
pub fn path_csv(path: &BandPath) -> String {
    let d = path.thetas.first().map_or(0, Vec::len);
    let nu = path.values.first().map_or(0, Vec::len);
    let mut out = String::from("arclength");
    for j in 1..=d {
        let _ = write!(out, ",theta_{j}");
    }
    for n in 1..=nu {
        let _ = write!(out, ",lambda_{n}");
    }
    out.push('\n');
    for ((s, theta), values) in path.arclength.iter().zip(&path.thetas).zip(&path.values) {
        let fields: Vec<String> = std::iter::once(s)
            .chain(theta)
            .chain(values)
            .map(|&x| fmt_real(x))
            .collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

/// Flux table: every cotree edge with endpoints, flux and cycle index.
pub fn flux_table(graph: &FundamentalGraph, flux_data: &FluxData) -> Value {
    Value::Array(
        flux_data
            .cotree()
            .iter()
            .zip(flux_data.fluxes())
            .map(|(&e, &flux)| {
                let edge = graph.edge(e);
                json!({
                    "edge": e,
                    "from": graph.vertices()[edge.tail].name,
                    "to": graph.vertices()[edge.head].name,
                    "flux": flux,
                    "cycle_index": flux_data.basis().index(e),
                })
            })
            .collect(),
    )
}

/// Band structure with the metadata needed to recompute every bound.
pub fn band_json(graph: &FundamentalGraph, flux_data: &FluxData, band_structure: &BandStructure) -> Value {
    let points: Vec<Value> = band_structure
        .values
        .iter()
        .enumerate()
        .map(|(i, row)| json!({"theta": band_structure.grid.point(i), "lambda": row}))
        .collect();
    json!({
        "dimension": graph.dimension(),
        "nu": graph.vertex_count(),
        "beta": flux_data.betti(),
        "kappa_plus": graph.kappa_plus(),
        "grid_points_per_dim": band_structure.grid.points_per_dim(),
        "theta0": band_structure.theta0,
        "fluxes": flux_table(graph, flux_data),
        "bands": band_structure.bands,
        "flat_bands": band_structure.flat_bands,
        "gaps": band_structure.gaps,
        "measure": band_structure.measure,
        "total_band_length": band_structure.total_band_length(),
        "points": points,
    })
}

pub fn reports_json(reports: &[BoundReport]) -> Value {
    json!({
        "all_satisfied": reports.iter().all(|r| r.satisfied),
        "reports": reports,
    })
}

/// Plain-text table of bound reports.
pub fn reports_table(reports: &[BoundReport]) -> String {
    let width = reports.iter().map(|r| r.name.len()).max().unwrap_or(0);
    let mut out = String::new();
    for r in reports {
        let _ = writeln!(
            out,
            "{:<width$}  lhs={:<22} rhs={:<22} slack={:<12.3e} {}",
            r.name,
            fmt_real(r.lhs),
            fmt_real(r.rhs),
            r.slack,
            if r.satisfied { "ok" } else { "VIOLATED" },
        );
    }
    out
}

/// What a CSV file holds, for [`gnuplot_script`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlotKind {
    /// `band_csv` output with the given dimension and band count.
    Grid { dimension: usize, nu: usize },
    /// `path_csv` output with the given dimension and band count.
    Path { dimension: usize, nu: usize },
    /// Butterfly point cloud: columns p, q, flux, lambda.
    Butterfly,
}

/// A gnuplot script plotting `csv_path` (referenced as given).
pub fn gnuplot_script(csv_path: &str, kind: PlotKind) -> String {
    let mut out = String::from("set datafile separator ','\nset key off\n");
    match kind {
        PlotKind::Grid { dimension: 1, nu } => {
            out.push_str("set xlabel 'theta_1'\nset ylabel 'lambda'\n");
            let _ = writeln!(out, "plot for [n=2:{}] '{csv_path}' every ::1 using 1:n with lines", nu + 1);
        }
        PlotKind::Grid { dimension: 2, nu } => {
            out.push_str("set xlabel 'theta_1'\nset ylabel 'theta_2'\nset zlabel 'lambda'\n");
            let _ = writeln!(out, "splot for [n=3:{}] '{csv_path}' every ::1 using 1:2:n with points pt 7 ps 0.3", nu + 2);
        }
        PlotKind::Grid { dimension, nu } => {
            out.push_str("set xlabel 'grid point'\nset ylabel 'lambda'\n");
            let _ = writeln!(
                out,
                "plot for [n={}:{}] '{csv_path}' every ::1 using 0:n with dots",
                dimension + 1,
                dimension + nu
            );
        }
        PlotKind::Path { dimension, nu } => {
            out.push_str("set xlabel 'arclength'\nset ylabel 'lambda'\n");
            let _ = writeln!(
                out,
                "plot for [n={}:{}] '{csv_path}' every ::1 using 1:n with lines",
                dimension + 2,
                dimension + nu + 1
            );
        }
        PlotKind::Butterfly => {
            out.push_str("set xlabel 'lambda'\nset ylabel 'p/q'\n");
            let _ = writeln!(out, "plot '{csv_path}' every ::1 using 4:($1/$2) with dots");
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::{sweep, TorusGrid};
    use crate::testing::random_graph;
    use proptest::prelude::*;

    const SQUARE: &str = r#"{
  "dimension": 2,
  "vertices": [{"name": "v"}],
  "edges": [
    {"from": "v", "to": "v", "index": [1, 0]},
    {"from": "v", "to": "v", "index": [0, 1], "alpha": "pi/2"}
  ]
}"#;

    #[test]
    fn square_lattice_spec() {
        let g = parse_spec(SQUARE).unwrap();
        assert_eq!(crate::topology::betti(&g), 2);
        assert_eq!(g.edge(1).alpha, PI / 2.0);
        assert_eq!(g.vertices()[0].weight, 1.0);
    }

    #[test]
    fn pi_expressions() {
        for (text, value) in [
            ("pi", PI),
            ("-pi/2", -PI / 2.0),
            ("3pi/4", 3.0 * PI / 4.0),
            ("2*pi/3", 2.0 * PI / 3.0),
            (" 0.25 ", 0.25),
            ("1/3", 1.0 / 3.0),
            ("-PI", -PI),
        ] {
            assert_eq!(parse_real(text).unwrap(), value, "{text}");
        }
        for text in ["", "pie", "pi/0", "x", "2pi/", "/2"] {
            assert!(parse_real(text).is_err(), "{text}");
        }
    }

    #[test]
    fn wrong_index_length() {
        let text = SQUARE.replace("[1, 0]", "[1, 0, 0]");
        assert!(matches!(parse_spec(&text), Err(Error::BadIndexDimension { edge: 0, found: 3, expected: 2 })));
    }

    #[test]
    fn unknown_keys_and_names() {
        let text = SQUARE.replace(r#""name": "v""#, r#""name": "v", "colour": 1"#);
        let err = parse_spec(&text).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err:?}");

        let text = SQUARE.replace(r#""to": "v", "index": [1, 0]"#, r#""to": "w", "index": [1, 0]"#);
        assert!(matches!(parse_spec(&text), Err(Error::UnknownVertexName { edge: 0, .. })));

        let text = SQUARE.replace(r#"[{"name": "v"}]"#, r#"[{"name": "v"}, {"name": "v"}]"#);
        assert_eq!(parse_spec(&text).unwrap_err(), Error::DuplicateVertexName("v".into()));

        let text = SQUARE.replace(r#""alpha": "pi/2""#, r#""alpha": "half pi""#);
        assert!(matches!(parse_spec(&text), Err(Error::Parse { line: 6, .. })));
    }

    #[test]
    fn parse_error_location() {
        match parse_spec("{\n  \"dimension\": 2,\n  \"vertices\": [,\n") {
            Err(Error::Parse { line, column, .. }) => assert_eq!((line, column), (3, 16)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn csv_shape() {
        let g = parse_spec(SQUARE).unwrap();
        let bs = sweep(&g, &g.alpha(), &TorusGrid::new(2, 5).unwrap()).unwrap();
        let csv = band_csv(&bs);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "theta_1,theta_2,lambda_1");
        assert_eq!(lines.len(), 26);
        assert_eq!(csv, band_csv(&sweep(&g, &g.alpha(), &TorusGrid::new(2, 5).unwrap()).unwrap()));
    }

    #[test]
    fn json_metadata() {
        let g = parse_spec(SQUARE).unwrap();
        let fd = FluxData::new(&g, &g.alpha());
        let bs = sweep(&g, &g.alpha(), &TorusGrid::new(2, 5).unwrap()).unwrap();
        let v = band_json(&g, &fd, &bs);
        for key in ["beta", "nu", "kappa_plus", "grid_points_per_dim", "fluxes", "measure"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["beta"], 2);
        assert_eq!(v["fluxes"].as_array().unwrap().len(), 2);
    }

    #[test]
    fn real_formatting_round_trips() {
        for x in [0.0, -0.0, 1.5, 7.0e-17, -3.2e-9, 1e20, 10.216990566028302] {
            let text = fmt_real(x);
            assert_eq!(text.parse::<f64>().unwrap(), x + 0.0, "{text}");
        }
        assert_eq!(fmt_real(-0.0), "0");
        assert_eq!(fmt_real(7.0e-17), "7e-17");
    }

    #[test]
    fn gnuplot_references_csv() {
        let script = gnuplot_script("bands.csv", PlotKind::Grid { dimension: 2, nu: 3 });
        assert!(script.contains("'bands.csv'"));
        assert!(script.contains("n=3:5"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn round_trip(seed in 0u64..100_000) {
            let g = random_graph(seed, 6, 2);
            let g = g.with_alpha(&crate::testing::random_form(seed, g.edge_count()));
            let text = to_spec_string(&g);
            let back = parse_spec(&text).unwrap();
            prop_assert_eq!(&back, &g);
            prop_assert_eq!(to_spec_string(&back), text);
        }
    }
}
