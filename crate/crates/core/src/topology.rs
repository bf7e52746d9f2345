//! Spanning trees, cycle bases, Betti numbers and magnetic fluxes.
//!
//! The spanning tree is a breadth-first tree rooted at vertex 0 that scans
//! outgoing edges in id order, so every derived quantity (cotree set, basis
//! cycles, fluxes, the modified form α_*) is deterministic for a given graph.
//!
//! Indices used by the flux representation are *tree-normalized*: vertex
//! offsets c(v) are accumulated along tree paths from the root and each edge
//! e = (u, v) is assigned τ(e) + c(u) − c(v). Tree edges then have index 0
//! and a cotree edge carries the index of its basis cycle.

use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::graph::{FundamentalGraph, OneForm, OrientedEdge};
use crate::linalg;

/// Reduces an angle to (−π, π], keeping π at the branch point.
pub fn reduce_angle(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpanningTree {
    pub root: usize,
    /// Sorted ids of tree edges.
    pub tree_edges: Vec<usize>,
    /// For every non-root vertex: its parent and the oriented edge parent → vertex.
    pub parent: Vec<Option<(usize, OrientedEdge)>>,
    pub depth: Vec<usize>,
}

impl SpanningTree {
    pub fn contains(&self, edge: usize) -> bool {
        self.tree_edges.binary_search(&edge).is_ok()
    }

    /// Oriented tree path from `from` to `to`.
    pub fn path(&self, from: usize, to: usize) -> Vec<OrientedEdge> {
        let (mut a, mut b) = (from, to);
        let mut up = Vec::new();
        let mut down = Vec::new();
        while self.depth[a] > self.depth[b] {
            let (p, e) = self.parent[a].expect("non-root vertex has a parent");
            up.push(e.reverse());
            a = p;
        }
        while self.depth[b] > self.depth[a] {
            let (p, e) = self.parent[b].expect("non-root vertex has a parent");
            down.push(e);
            b = p;
        }
        while a != b {
            let (pa, ea) = self.parent[a].expect("non-root vertex has a parent");
            let (pb, eb) = self.parent[b].expect("non-root vertex has a parent");
            up.push(ea.reverse());
            down.push(eb);
            a = pa;
            b = pb;
        }
        down.reverse();
        up.extend(down);
        up
    }
}

/// Breadth-first spanning tree from vertex 0, edges examined in id order.
pub fn spanning_tree(graph: &FundamentalGraph) -> SpanningTree {
    let nu = graph.vertex_count();
    let mut parent = vec![None; nu];
    let mut depth = vec![0; nu];
    let mut visited = vec![false; nu];
    let mut tree_edges = Vec::with_capacity(nu.saturating_sub(1));
    let mut queue = std::collections::VecDeque::new();
    visited[0] = true;
    queue.push_back(0);
    while let Some(u) = queue.pop_front() {
        for &oe in graph.outgoing(u) {
            let v = graph.head(oe);
            if !visited[v] {
                visited[v] = true;
                parent[v] = Some((u, oe));
                depth[v] = depth[u] + 1;
                tree_edges.push(oe.edge);
                queue.push_back(v);
            }
        }
    }
    tree_edges.sort_unstable();
    SpanningTree {
        root: 0,
        tree_edges,
        parent,
        depth,
    }
}

/// β = #edges − #vertices + 1.
pub fn betti(graph: &FundamentalGraph) -> usize {
    graph.edge_count() + 1 - graph.vertex_count()
}

/// The cycle basis induced by the spanning tree, together with the
/// tree-normalized edge indices.
#[derive(Clone, Debug, PartialEq)]
pub struct CycleBasis {
    tree: SpanningTree,
    cotree: Vec<usize>,
    cycles: Vec<Vec<OrientedEdge>>,
    offsets: Vec<Vec<i64>>,
    indices: Vec<Vec<i64>>,
}

impl CycleBasis {
    pub fn new(graph: &FundamentalGraph) -> Self {
        let tree = spanning_tree(graph);
        let d = graph.dimension();
        let nu = graph.vertex_count();

        let mut order: Vec<usize> = (0..nu).collect();
        order.sort_by_key(|&v| tree.depth[v]);
        let mut offsets = vec![vec![0i64; d]; nu];
        for &v in &order {
            if let Some((p, oe)) = tree.parent[v] {
                let step = graph.index(oe);
                offsets[v] = offsets[p].iter().zip(&step).map(|(a, b)| a + b).collect();
            }
        }

        let indices = graph
            .edges()
            .iter()
            .map(|e| {
                (0..d)
                    .map(|j| e.index[j] + offsets[e.tail][j] - offsets[e.head][j])
                    .collect()
            })
            .collect();

        let cotree: Vec<usize> = (0..graph.edge_count()).filter(|&e| !tree.contains(e)).collect();
        let cycles = cotree
            .iter()
            .map(|&e| {
                let edge = graph.edge(e);
                let mut cycle = vec![OrientedEdge::forward(e)];
                cycle.extend(tree.path(edge.head, edge.tail));
                cycle
            })
            .collect();

        CycleBasis {
            tree,
            cotree,
            cycles,
            offsets,
            indices,
        }
    }

    pub fn tree(&self) -> &SpanningTree {
        &self.tree
    }

    /// Cotree edge ids in declaration order, each with its stored orientation.
    pub fn cotree(&self) -> &[usize] {
        &self.cotree
    }

    pub fn betti(&self) -> usize {
        self.cotree.len()
    }

    pub fn cotree_position(&self, edge: usize) -> Option<usize> {
        self.cotree.binary_search(&edge).ok()
    }

    /// The basis cycle of a cotree edge: the edge itself followed by the tree
    /// path from its head back to its tail.
    pub fn cycle_for(&self, edge: usize) -> Result<&[OrientedEdge]> {
        self.cotree_position(edge)
            .map(|k| self.cycles[k].as_slice())
            .ok_or(Error::NotCotreeEdge(edge))
    }

    /// Sum of the edge indices along tree paths from the root.
    pub fn offset(&self, vertex: usize) -> &[i64] {
        &self.offsets[vertex]
    }

    /// Tree-normalized index of the stored orientation of `edge`.
    pub fn index(&self, edge: usize) -> &[i64] {
        &self.indices[edge]
    }

    pub fn indices(&self) -> &[Vec<i64>] {
        &self.indices
    }

    /// φ_α(e): the cycle sum of α over the basis cycle of `edge`, in (−π, π].
    pub fn flux(&self, alpha: &OneForm, edge: usize) -> Result<f64> {
        let cycle = self.cycle_for(edge)?;
        Ok(reduce_angle(cycle.iter().map(|&oe| alpha.eval(oe)).sum()))
    }

    /// α_*: the flux on each cotree edge, zero on tree edges.
    pub fn modified_form(&self, alpha: &OneForm) -> OneForm {
        let mut values = vec![0.0; alpha.len()];
        for &e in &self.cotree {
            values[e] = self.flux(alpha, e).expect("cotree edge");
        }
        OneForm::new(values)
    }
}

/// Integer echelon form of a set of integer vectors, computed with Euclidean
/// row operations (Hermite-style). Returns the nonzero rows; the first nonzero
/// entry of each row is its pivot.
pub fn integer_echelon(vectors: &[Vec<i64>], dimension: usize) -> Vec<Vec<i128>> {
    let mut rows: Vec<Vec<i128>> = vectors
        .iter()
        .map(|v| v.iter().map(|&x| x as i128).collect())
        .filter(|v: &Vec<i128>| v.iter().any(|&x| x != 0))
        .collect();
    let mut pivot_row = 0;
    for col in 0..dimension {
        loop {
            let candidate = (pivot_row..rows.len())
                .filter(|&r| rows[r][col] != 0)
                .min_by_key(|&r| rows[r][col].abs());
            let Some(best) = candidate else { break };
            rows.swap(pivot_row, best);
            let mut done = true;
            for r in pivot_row + 1..rows.len() {
                if rows[r][col] != 0 {
                    let q = rows[r][col] / rows[pivot_row][col];
                    for c in col..dimension {
                        let sub = q * rows[pivot_row][c];
                        rows[r][c] -= sub;
                    }
                    if rows[r][col] != 0 {
                        done = false;
                    }
                }
            }
            if done {
                if rows[pivot_row][col] < 0 {
                    for c in col..dimension {
                        rows[pivot_row][c] = -rows[pivot_row][c];
                    }
                }
                pivot_row += 1;
                break;
            }
        }
    }
    rows.truncate(pivot_row);
    rows
}

/// Rank over ℚ of a set of integer vectors.
pub fn integer_rank(vectors: &[Vec<i64>], dimension: usize) -> usize {
    integer_echelon(vectors, dimension).len()
}

/// True iff the given integer vectors generate all of ℤᵈ.
pub fn spans_lattice(vectors: &[Vec<i64>], dimension: usize) -> bool {
    let echelon = integer_echelon(vectors, dimension);
    echelon.len() == dimension
        && echelon
            .iter()
            .all(|row| row.iter().find(|&&x| x != 0).is_some_and(|&p| p == 1))
}

/// Whether the basis-cycle indices of the graph generate ℤᵈ, i.e. whether the
/// periodic graph is connected.
pub fn check_span(graph: &FundamentalGraph) -> bool {
    let basis = CycleBasis::new(graph);
    let vectors: Vec<Vec<i64>> = basis.cotree().iter().map(|&e| basis.index(e).to_vec()).collect();
    spans_lattice(&vectors, graph.dimension())
}

/// Cycle basis, fluxes of a 1-form, and its modified form α_*.
#[derive(Clone, Debug, PartialEq)]
pub struct FluxData {
    basis: CycleBasis,
    fluxes: Vec<f64>,
    alpha_star: OneForm,
}

impl FluxData {
    pub fn new(graph: &FundamentalGraph, alpha: &OneForm) -> Self {
        FluxData::from_basis(CycleBasis::new(graph), alpha)
    }

    pub fn from_basis(basis: CycleBasis, alpha: &OneForm) -> Self {
        let alpha_star = basis.modified_form(alpha);
        let fluxes = basis.cotree().iter().map(|&e| alpha_star.value(e)).collect();
        FluxData {
            basis,
            fluxes,
            alpha_star,
        }
    }

    pub fn basis(&self) -> &CycleBasis {
        &self.basis
    }

    pub fn tree(&self) -> &SpanningTree {
        self.basis.tree()
    }

    pub fn cotree(&self) -> &[usize] {
        self.basis.cotree()
    }

    pub fn betti(&self) -> usize {
        self.basis.betti()
    }

    /// Fluxes in cotree order.
    pub fn fluxes(&self) -> &[f64] {
        &self.fluxes
    }

    pub fn alpha_star(&self) -> &OneForm {
        &self.alpha_star
    }

    pub fn cycle_for(&self, edge: usize) -> Result<&[OrientedEdge]> {
        self.basis.cycle_for(edge)
    }
}

pub fn flux(alpha: &OneForm, flux_data: &FluxData, edge: usize) -> Result<f64> {
    flux_data.basis.flux(alpha, edge)
}

pub fn modified_form(alpha: &OneForm, flux_data: &FluxData) -> OneForm {
    flux_data.basis.modified_form(alpha)
}

/// Result of the change of variables θ = θ̃ + θ0 that removes the fluxes of
/// d cotree edges with independent indices.
#[derive(Clone, Debug, PartialEq)]
pub struct MinimalFluxData {
    pub theta0: Vec<f64>,
    pub independent_edges: Vec<usize>,
    pub alpha_tilde: OneForm,
    pub reduced_cotree: Vec<usize>,
}

/// Picks the first d cotree edges (declaration order) with ℚ-independent
/// indices, solves ⟨τ(e_s), θ0⟩ + α_*(e_s) = 0 and builds α̃.
pub fn minimal_reduction(flux_data: &FluxData, dimension: usize) -> Result<MinimalFluxData> {
    let basis = flux_data.basis();
    let mut independent_edges = Vec::with_capacity(dimension);
    let mut chosen: Vec<Vec<i64>> = Vec::with_capacity(dimension);
    for &e in basis.cotree() {
        if independent_edges.len() == dimension {
            break;
        }
        chosen.push(basis.index(e).to_vec());
        if integer_rank(&chosen, dimension) == chosen.len() {
            independent_edges.push(e);
        } else {
            chosen.pop();
        }
    }
    if independent_edges.len() < dimension {
        return Err(Error::RankDeficient(dimension));
    }

    let matrix: Vec<Vec<f64>> = chosen
        .iter()
        .map(|row| row.iter().map(|&x| x as f64).collect())
        .collect();
    let rhs: Vec<f64> = independent_edges
        .iter()
        .map(|&e| -flux_data.alpha_star().value(e))
        .collect();
    let theta0: Vec<f64> = linalg::solve(matrix, rhs)
        .ok_or(Error::RankDeficient(dimension))?
        .into_iter()
        .map(|t| t + 0.0)
        .collect();

    let reduced_cotree: Vec<usize> = basis
        .cotree()
        .iter()
        .copied()
        .filter(|e| !independent_edges.contains(e))
        .collect();
    let mut values = vec![0.0; flux_data.alpha_star().len()];
    for &e in &reduced_cotree {
        let shift: f64 = basis
            .index(e)
            .iter()
            .zip(&theta0)
            .map(|(&t, &th)| t as f64 * th)
            .sum();
        values[e] = flux_data.alpha_star().value(e) + shift;
    }

    Ok(MinimalFluxData {
        theta0,
        independent_edges,
        alpha_tilde: OneForm::new(values),
        reduced_cotree,
    })
}

/// W(v): the sum of α − α_* along the tree path from the root to v.
pub fn gauge_function(graph: &FundamentalGraph, alpha: &OneForm, flux_data: &FluxData) -> Vec<f64> {
    let tree = flux_data.tree();
    let alpha_star = flux_data.alpha_star();
    let mut order: Vec<usize> = (0..graph.vertex_count()).collect();
    order.sort_by_key(|&v| tree.depth[v]);
    let mut w = vec![0.0; graph.vertex_count()];
    for &v in &order {
        if let Some((p, oe)) = tree.parent[v] {
            w[v] = w[p] + alpha.eval(oe) - alpha_star.eval(oe);
        }
    }
    w
}
