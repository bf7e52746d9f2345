//! Built-in periodic graphs with closed-form spectral data where known.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{FundamentalGraph, GraphBuilder};

/// Closed-form spectral data of Δ_α: connected components of the
/// non-degenerate spectrum, flat bands (value, multiplicity) and the measure.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Oracle {
    pub components: Vec<(f64, f64)>,
    pub flat_bands: Vec<(f64, usize)>,
    pub measure: f64,
    /// True when the spectrum does not depend on the magnetic 1-form.
    pub alpha_independent: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NamedGraph {
    pub name: String,
    pub graph: FundamentalGraph,
    pub oracle: Option<Oracle>,
}

fn unit(d: usize, j: usize) -> Vec<i64> {
    let mut index = vec![0; d];
    index[j] = 1;
    index
}

/// ℤᵈ with one vertex and d loops of indices e_1, …, e_d.
pub fn square_lattice(d: usize) -> Result<NamedGraph> {
    if d == 0 {
        return Err(Error::ZeroDimension);
    }
    let mut b = GraphBuilder::new(d);
    let v = b.vertex("v");
    for j in 0..d {
        b.edge(v, v, &unit(d, j));
    }
    let top = 4.0 * d as f64;
    Ok(NamedGraph {
        name: format!("square lattice (d={d})"),
        graph: b.build()?,
        oracle: Some(Oracle {
            components: vec![(0.0, top)],
            flat_bands: Vec::new(),
            measure: top,
            alpha_independent: true,
        }),
    })
}

/// The square lattice with uniform flux B = 2πp/q per plaquette on the
/// 2q×2q periodicity cell, in the symmetric gauge
/// α(n, n+e_1) = −B n_2/2, α(n, n+e_2) = B n_1/2. Vertex (n_1, n_2) has id
/// n_1·2q + n_2; edges wrapping across the cell carry index e_1 or e_2.
pub fn harper(p: i64, q: i64) -> Result<NamedGraph> {
    if q < 1 || gcd(p.unsigned_abs(), q as u64) != 1 {
        return Err(Error::BadFraction { p, q });
    }
    let b_flux = 2.0 * PI * p as f64 / q as f64;
    let side = 2 * q as usize;
    let id = |n1: usize, n2: usize| n1 * side + n2;
    let mut b = GraphBuilder::new(2);
    for n1 in 0..side {
        for n2 in 0..side {
            b.vertex(format!("({n1},{n2})"));
        }
    }
    for n1 in 0..side {
        for n2 in 0..side {
            let wrap1 = n1 + 1 == side;
            let wrap2 = n2 + 1 == side;
            b.edge_with(
                id(n1, n2),
                id((n1 + 1) % side, n2),
                &[wrap1 as i64, 0],
                1.0,
                -b_flux * n2 as f64 / 2.0,
            );
            b.edge_with(
                id(n1, n2),
                id(n1, (n2 + 1) % side),
                &[0, wrap2 as i64],
                1.0,
                b_flux * n1 as f64 / 2.0,
            );
        }
    }
    let oracle = if p == 0 {
        Some(Oracle {
            components: vec![(0.0, 8.0)],
            flat_bands: Vec::new(),
            measure: 8.0,
            alpha_independent: false,
        })
    } else if q == 2 {
        let r = 2.0 * 2f64.sqrt();
        Some(Oracle {
            components: vec![(4.0 - r, 4.0 + r)],
            flat_bands: Vec::new(),
            measure: 2.0 * r,
            alpha_independent: false,
        })
    } else {
        None
    };
    Ok(NamedGraph {
        name: format!("harper (p/q={p}/{q})"),
        graph: b.build()?,
        oracle,
    })
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Hexagonal lattice: two vertices joined by three edges of indices
/// (0,0), (1,0), (0,1).
pub fn hexagonal() -> NamedGraph {
    let mut b = GraphBuilder::new(2);
    let u = b.vertex("a");
    let v = b.vertex("b");
    for index in [[0, 0], [1, 0], [0, 1]] {
        b.edge(u, v, &index);
    }
    NamedGraph {
        name: "hexagonal lattice".into(),
        graph: b.build().expect("hexagonal lattice is valid"),
        oracle: Some(Oracle {
            components: vec![(0.0, 6.0)],
            flat_bands: Vec::new(),
            measure: 6.0,
            alpha_independent: true,
        }),
    }
}

/// The square lattice ℤᵈ with ν−1 pendant vertices attached to every site:
/// vertices v_1..v_ν, d loops at v_ν with indices e_1..e_d and spokes
/// (v_k, v_ν), k < ν, with zero index. Potentials are zero.
pub fn star_lattice(d: usize, nu: usize) -> Result<NamedGraph> {
    if nu < 2 {
        return Err(Error::BadParameter(format!("star lattice needs nu >= 2 (got {nu})")));
    }
    star_lattice_with_potentials(d, &vec![0.0; nu - 1])
}

/// Star lattice with potentials q_1..q_{ν−1} on the pendant vertices and
/// q_ν = 0 on the lattice vertex. The oracle is attached only for Q = 0.
pub fn star_lattice_with_potentials(d: usize, pendant_potentials: &[f64]) -> Result<NamedGraph> {
    if d == 0 {
        return Err(Error::ZeroDimension);
    }
    if pendant_potentials.is_empty() {
        return Err(Error::BadParameter("star lattice needs at least one pendant vertex".into()));
    }
    let nu = pendant_potentials.len() + 1;
    let mut b = GraphBuilder::new(d);
    let spokes: Vec<usize> = pendant_potentials
        .iter()
        .enumerate()
        .map(|(k, &q)| b.vertex_with(format!("v{}", k + 1), q, 1.0))
        .collect();
    let center = b.vertex(format!("v{nu}"));
    for &s in &spokes {
        b.edge(s, center, &vec![0; d]);
    }
    for j in 0..d {
        b.edge(center, center, &unit(d, j));
    }
    let oracle = pendant_potentials.iter().all(|&q| q == 0.0).then(|| {
        let (lower, upper) = star_outer_edges(d, nu);
        let mut flat_bands = Vec::new();
        if nu > 2 {
            flat_bands.push((1.0, nu - 2));
        }
        Oracle {
            components: vec![(0.0, lower), (nu as f64, upper)],
            flat_bands,
            measure: 4.0 * d as f64,
            alpha_independent: true,
        }
    });
    Ok(NamedGraph {
        name: format!("star lattice (d={d}, nu={nu})"),
        graph: b.build()?,
        oracle,
    })
}

/// x − √(x² − 4d) and x + √(x² − 4d) with x = (ν + 4d)/2.
pub fn star_outer_edges(d: usize, nu: usize) -> (f64, f64) {
    let x = (nu as f64 + 4.0 * d as f64) / 2.0;
    let root = (x * x - 4.0 * d as f64).sqrt();
    (x - root, x + root)
}

/// Five vertices v1..v5 in dimension 2; the tree edges v1v4, v1v2, v1v5,
/// v4v3 have zero index, and three further edges v1→v3 (0,1), v3→v1 (1,1),
/// v4→v2 (1,0) close the cycles.
pub fn figure1_graph() -> NamedGraph {
    let mut b = GraphBuilder::new(2);
    let v: Vec<usize> = (1..=5).map(|k| b.vertex(format!("v{k}"))).collect();
    b.edge(v[0], v[3], &[0, 0]);
    b.edge(v[0], v[1], &[0, 0]);
    b.edge(v[0], v[4], &[0, 0]);
    b.edge(v[3], v[2], &[0, 0]);
    b.edge(v[0], v[2], &[0, 1]);
    b.edge(v[2], v[0], &[1, 1]);
    b.edge(v[3], v[1], &[1, 0]);
    NamedGraph {
        name: "figure 1 graph".into(),
        graph: b.build().expect("figure 1 graph is valid"),
        oracle: None,
    }
}

/// Five vertices (bottom, top, centre, left, right) and seven edges,
/// β = 3; indices (1,0) on bottom–left and (0,1) on top–left.
pub fn figure2_graph() -> NamedGraph {
    let mut b = GraphBuilder::new(2);
    let bottom = b.vertex("bottom");
    let top = b.vertex("top");
    let centre = b.vertex("centre");
    let left = b.vertex("left");
    let right = b.vertex("right");
    b.edge(bottom, right, &[0, 0]);
    b.edge(bottom, left, &[1, 0]);
    b.edge(top, right, &[0, 0]);
    b.edge(top, left, &[0, 1]);
    b.edge(top, centre, &[0, 0]);
    b.edge(left, centre, &[0, 0]);
    b.edge(centre, right, &[0, 0]);
    NamedGraph {
        name: "figure 2 graph".into(),
        graph: b.build().expect("figure 2 graph is valid"),
        oracle: None,
    }
}

/// Names accepted by [`by_name`].
pub const FAMILIES: &[&str] = &["square", "harper", "hexagonal", "star", "figure1", "figure2"];

/// Builds a family from its name and integer parameters: `square d`,
/// `harper p q`, `hexagonal`, `star d nu`, `figure1`, `figure2`.
pub fn by_name(family: &str, params: &[i64]) -> Result<NamedGraph> {
    let want = |n: usize| -> Result<()> {
        if params.len() == n {
            Ok(())
        } else {
            Err(Error::BadParameter(format!(
                "family {family} takes {n} parameter(s), got {}",
                params.len()
            )))
        }
    };
    let nonneg = |x: i64| -> Result<usize> {
        usize::try_from(x).map_err(|_| Error::BadParameter(format!("parameter {x} must be nonnegative")))
    };
    match family {
        "square" => {
            want(1)?;
            square_lattice(nonneg(params[0])?)
        }
        "harper" => {
            want(2)?;
            harper(params[0], params[1])
        }
        "hexagonal" => {
            want(0)?;
            Ok(hexagonal())
        }
        "star" => {
            want(2)?;
            star_lattice(nonneg(params[0])?, nonneg(params[1])?)
        }
        "figure1" => {
            want(0)?;
            Ok(figure1_graph())
        }
        "figure2" => {
            want(0)?;
            Ok(figure2_graph())
        }
        other => Err(Error::BadParameter(format!(
            "unknown family {other} (expected one of {})",
            FAMILIES.join(", ")
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::OneForm;
    use crate::spectrum::{sweep, TorusGrid};
    use crate::topology::{betti, reduce_angle, FluxData};

    fn check_oracle(named: &NamedGraph, alpha: &OneForm, n: usize, tol: f64) {
        let oracle = named.oracle.as_ref().unwrap();
        let bs = sweep(&named.graph, alpha, &TorusGrid::new(named.graph.dimension(), n).unwrap()).unwrap();
        assert!((bs.measure - oracle.measure).abs() < tol, "{}: {}", named.name, bs.measure);
        let flat: Vec<(f64, usize)> = bs.flat_bands.iter().map(|f| (f.value, f.multiplicity)).collect();
        assert_eq!(flat.len(), oracle.flat_bands.len());
        for ((v, m), (ov, om)) in flat.iter().zip(&oracle.flat_bands) {
            assert!((v - ov).abs() < tol);
            assert_eq!(m, om);
        }
        assert!((bs.bottom() - oracle.components[0].0).abs() < tol);
        assert!((bs.top() - oracle.components.last().unwrap().1).abs() < tol);
    }

    #[test]
    fn every_family_validates() {
        for family in FAMILIES {
            let params: &[i64] = match *family {
                "square" => &[2],
                "harper" => &[1, 3],
                "star" => &[2, 4],
                _ => &[],
            };
            let named = by_name(family, params).unwrap();
            assert!(crate::graph::validate(named.graph.dimension(), named.graph.vertices(), named.graph.edges()).is_ok());
        }
        assert!(by_name("nope", &[]).is_err());
        assert!(by_name("square", &[]).is_err());
        assert!(by_name("square", &[-1]).is_err());
    }

    #[test]
    fn square_lattice_oracles() {
        for d in 1..=3 {
            let named = square_lattice(d).unwrap();
            assert_eq!(betti(&named.graph), d);
            let n = if d == 3 { 5 } else { 17 };
            check_oracle(&named, &named.graph.alpha(), n, 1e-12);
        }
        assert_eq!(square_lattice(0).unwrap_err(), Error::ZeroDimension);
    }

    #[test]
    fn star_lattice_oracles() {
        for (d, nu) in [(1, 2), (2, 3), (2, 5), (3, 4)] {
            let named = star_lattice(d, nu).unwrap();
            let n = if d == 3 { 5 } else { 17 };
            let alpha = crate::testing::random_form(d as u64 * 10 + nu as u64, named.graph.edge_count());
            check_oracle(&named, &alpha, n, 1e-9);
        }
        let (lo, hi) = star_outer_edges(1, 2);
        assert!((lo - (3.0 - 5f64.sqrt())).abs() < 1e-15);
        assert!((hi - (3.0 + 5f64.sqrt())).abs() < 1e-15);
    }

    #[test]
    fn hexagonal_oracle() {
        let named = hexagonal();
        assert_eq!(betti(&named.graph), 2);
        assert_eq!(named.graph.degree(0), 3);
        assert_eq!(named.graph.degree(1), 3);
        // N − 1 divisible by 6 puts the Dirac points on the grid
        check_oracle(&named, &crate::testing::random_form(5, 3), 37, 1e-12);
    }

    #[test]
    fn harper_structure() {
        assert!(matches!(harper(2, 4), Err(Error::BadFraction { .. })));
        assert!(matches!(harper(1, 0), Err(Error::BadFraction { .. })));
        for (p, q) in [(0, 1), (1, 2), (1, 3), (-2, 5)] {
            let named = harper(p, q).unwrap();
            let side = 2 * q as usize;
            let g = &named.graph;
            assert_eq!(g.vertex_count(), side * side);
            assert_eq!(g.edge_count(), 2 * side * side);
            assert!((0..g.vertex_count()).all(|v| g.degree(v) == 4));
            // plaquette flux: α(n,n+e1) + α(n+e1,n+e1+e2) − α(n+e2,n+e2+e1) − α(n,n+e2)
            let b_flux = 2.0 * PI * p as f64 / q as f64;
            let horizontal = |n1: usize, n2: usize| g.edge(2 * (n1 * side + n2)).alpha;
            let vertical = |n1: usize, n2: usize| g.edge(2 * (n1 * side + n2) + 1).alpha;
            for n1 in 0..side {
                for n2 in 0..side {
                    let flux = horizontal(n1, n2) + vertical((n1 + 1) % side, n2)
                        - horizontal(n1, (n2 + 1) % side)
                        - vertical(n1, n2);
                    assert!(reduce_angle(flux - b_flux).abs() < 1e-9, "({n1},{n2})");
                }
            }
        }
    }

    #[test]
    fn harper_trivial_flux() {
        let named = harper(0, 1).unwrap();
        check_oracle(&named, &named.graph.alpha(), 9, 1e-9);
    }

    #[test]
    fn figure1_indices() {
        let g = figure1_graph().graph;
        assert_eq!(g.edge(4).index, vec![0, 1]);
        assert_eq!(g.edge(0).index, vec![0, 0]);
        assert_eq!(betti(&g), 3);
        let fd = FluxData::new(&g, &g.alpha());
        for &e in &fd.tree().tree_edges {
            assert!(fd.basis().index(e).iter().all(|&t| t == 0));
        }
    }

    #[test]
    fn figure2_betti() {
        let g = figure2_graph().graph;
        assert_eq!((g.vertex_count(), g.edge_count(), betti(&g)), (5, 7, 3));
    }
}
