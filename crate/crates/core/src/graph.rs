//! Fundamental graphs of ℤᵈ-periodic graphs.
//!
//! A periodic graph is represented by its finite quotient: every vertex of
//! the quotient carries an electric potential and a positive weight, every
//! unoriented edge is stored once with a chosen orientation, an integer
//! index vector recording the lattice shift between its endpoints, a positive
//! weight and the value of the magnetic 1-form on that orientation. Loops and
//! parallel edges are allowed.

use crate::error::{Error, Result};
use crate::topology;

#[derive(Clone, Debug, PartialEq)]
pub struct Vertex {
    pub id: usize,
    pub name: String,
    pub potential: f64,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    pub id: usize,
    pub tail: usize,
    pub head: usize,
    pub index: Vec<i64>,
    pub weight: f64,
    pub alpha: f64,
}

impl Edge {
    pub fn is_loop(&self) -> bool {
        self.tail == self.head
    }
}

/// One of the two orientations of a stored edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OrientedEdge {
    pub edge: usize,
    pub reversed: bool,
}

impl OrientedEdge {
    pub fn forward(edge: usize) -> Self {
        OrientedEdge {
            edge,
            reversed: false,
        }
    }

    pub fn backward(edge: usize) -> Self {
        OrientedEdge {
            edge,
            reversed: true,
        }
    }

    pub fn reverse(self) -> Self {
        OrientedEdge {
            edge: self.edge,
            reversed: !self.reversed,
        }
    }

    /// +1 on the stored orientation, −1 on its reverse.
    pub fn sign(self) -> f64 {
        if self.reversed {
            -1.0
        } else {
            1.0
        }
    }
}

/// A real antisymmetric function on oriented edges, stored by its values on
/// the stored orientations.
#[derive(Clone, Debug, PartialEq)]
pub struct OneForm {
    values: Vec<f64>,
}

impl OneForm {
    pub fn new(values: Vec<f64>) -> Self {
        OneForm { values }
    }

    pub fn zeros(edges: usize) -> Self {
        OneForm {
            values: vec![0.0; edges],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, edge: usize) -> f64 {
        self.values[edge]
    }

    pub fn eval(&self, oriented: OrientedEdge) -> f64 {
        oriented.sign() * self.values[oriented.edge]
    }

    pub fn negated(&self) -> OneForm {
        OneForm::new(self.values.iter().map(|v| -v).collect())
    }

    /// `self + dg` where `(dg)(u,v) = g(v) − g(u)`.
    pub fn add_gauge(&self, graph: &FundamentalGraph, g: &[f64]) -> OneForm {
        let values = graph
            .edges()
            .iter()
            .map(|e| self.values[e.id] + g[e.head] - g[e.tail])
            .collect();
        OneForm::new(values)
    }
}

/// A validated fundamental graph. Immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub struct FundamentalGraph {
    dimension: usize,
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
    incidence: Vec<Vec<OrientedEdge>>,
}

impl FundamentalGraph {
    /// Builds and validates a graph. Ids must equal declaration positions.
    pub fn new(dimension: usize, vertices: Vec<Vertex>, edges: Vec<Edge>) -> Result<Self> {
        let incidence = check_structure(dimension, &vertices, &edges)?;
        let graph = FundamentalGraph {
            dimension,
            vertices,
            edges,
            incidence,
        };
        if !topology::check_span(&graph) {
            return Err(Error::LatticeSpanDeficient);
        }
        Ok(graph)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edge(&self, id: usize) -> &Edge {
        &self.edges[id]
    }

    /// Oriented edges starting at `v`, in edge-id order. A loop appears twice.
    pub fn outgoing(&self, v: usize) -> &[OrientedEdge] {
        &self.incidence[v]
    }

    pub fn tail(&self, e: OrientedEdge) -> usize {
        let edge = &self.edges[e.edge];
        if e.reversed {
            edge.head
        } else {
            edge.tail
        }
    }

    pub fn head(&self, e: OrientedEdge) -> usize {
        let edge = &self.edges[e.edge];
        if e.reversed {
            edge.tail
        } else {
            edge.head
        }
    }

    pub fn index(&self, e: OrientedEdge) -> Vec<i64> {
        let index = &self.edges[e.edge].index;
        if e.reversed {
            index.iter().map(|x| -x).collect()
        } else {
            index.clone()
        }
    }

    /// κ_v: the number of oriented edges starting at `v` (loops count twice).
    pub fn degree(&self, v: usize) -> usize {
        self.incidence[v].len()
    }

    /// (1/m_V(v)) Σ_{e=(v,u)} m_A(e).
    pub fn weighted_degree(&self, v: usize) -> f64 {
        let total: f64 = self.incidence[v]
            .iter()
            .map(|oe| self.edges[oe.edge].weight)
            .sum();
        total / self.vertices[v].weight
    }

    /// κ_+, the maximal weighted degree.
    pub fn kappa_plus(&self) -> f64 {
        (0..self.vertex_count())
            .map(|v| self.weighted_degree(v))
            .fold(0.0, f64::max)
    }

    pub fn potentials(&self) -> Vec<f64> {
        self.vertices.iter().map(|v| v.potential).collect()
    }

    /// The magnetic 1-form declared on the edges.
    pub fn alpha(&self) -> OneForm {
        OneForm::new(self.edges.iter().map(|e| e.alpha).collect())
    }

    pub fn has_unit_weights(&self) -> bool {
        self.vertices.iter().all(|v| v.weight == 1.0) && self.edges.iter().all(|e| e.weight == 1.0)
    }

    /// Same graph with the potential replaced. Validity is unaffected.
    pub fn with_potentials(&self, potentials: &[f64]) -> FundamentalGraph {
        assert_eq!(potentials.len(), self.vertex_count());
        let mut graph = self.clone();
        for (vertex, &q) in graph.vertices.iter_mut().zip(potentials) {
            vertex.potential = q;
        }
        graph
    }

    /// Same graph with the stored 1-form replaced.
    pub fn with_alpha(&self, alpha: &OneForm) -> FundamentalGraph {
        assert_eq!(alpha.len(), self.edge_count());
        let mut graph = self.clone();
        for (edge, &a) in graph.edges.iter_mut().zip(alpha.values()) {
            edge.alpha = a;
        }
        graph
    }

    pub fn with_weights(&self, vertex_weights: &[f64], edge_weights: &[f64]) -> Result<FundamentalGraph> {
        let mut vertices = self.vertices.clone();
        let mut edges = self.edges.clone();
        for (v, &w) in vertices.iter_mut().zip(vertex_weights) {
            v.weight = w;
        }
        for (e, &w) in edges.iter_mut().zip(edge_weights) {
            e.weight = w;
        }
        FundamentalGraph::new(self.dimension, vertices, edges)
    }

    /// True when both graphs share vertices, edges, endpoints, indices and
    /// weights; potentials and 1-forms may differ.
    pub fn same_structure(&self, other: &FundamentalGraph) -> bool {
        self.dimension == other.dimension
            && self.vertex_count() == other.vertex_count()
            && self.edge_count() == other.edge_count()
            && self
                .vertices
                .iter()
                .zip(&other.vertices)
                .all(|(a, b)| a.weight == b.weight)
            && self.edges.iter().zip(&other.edges).all(|(a, b)| {
                a.tail == b.tail && a.head == b.head && a.index == b.index && a.weight == b.weight
            })
    }
}

/// Checks the structural invariants of a fundamental graph (everything except
/// the lattice-span condition, which needs a spanning tree) and returns the
/// outgoing oriented edges of every vertex.
fn check_structure(
    dimension: usize,
    vertices: &[Vertex],
    edges: &[Edge],
) -> Result<Vec<Vec<OrientedEdge>>> {
    if dimension == 0 {
        return Err(Error::ZeroDimension);
    }
    if vertices.is_empty() {
        return Err(Error::EmptyGraph);
    }
    for (position, v) in vertices.iter().enumerate() {
        if v.id != position {
            return Err(Error::BadVertexId {
                position,
                found: v.id,
            });
        }
        if v.weight.is_nan() || v.weight <= 0.0 || !v.weight.is_finite() {
            return Err(Error::NonpositiveWeight {
                what: format!("vertex {}", v.name),
            });
        }
    }
    let nu = vertices.len();
    let mut incidence = vec![Vec::new(); nu];
    for (position, e) in edges.iter().enumerate() {
        if e.id != position {
            return Err(Error::BadEdgeId {
                position,
                found: e.id,
            });
        }
        for vertex in [e.tail, e.head] {
            if vertex >= nu {
                return Err(Error::UnknownVertex { edge: e.id, vertex });
            }
        }
        if e.index.len() != dimension {
            return Err(Error::BadIndexDimension {
                edge: e.id,
                found: e.index.len(),
                expected: dimension,
            });
        }
        if e.weight.is_nan() || e.weight <= 0.0 || !e.weight.is_finite() {
            return Err(Error::NonpositiveWeight {
                what: format!("edge {}", e.id),
            });
        }
        incidence[e.tail].push(OrientedEdge::forward(e.id));
        incidence[e.head].push(OrientedEdge::backward(e.id));
    }
    if let Some(v) = incidence.iter().position(|out| out.is_empty()) {
        // a single isolated vertex with no edges cannot carry a ℤᵈ action
        return Err(if nu == 1 {
            Error::LatticeSpanDeficient
        } else {
            Error::IsolatedVertex(v)
        });
    }
    if !is_connected(nu, edges) {
        return Err(Error::Disconnected);
    }
    Ok(incidence)
}

fn is_connected(nu: usize, edges: &[Edge]) -> bool {
    let mut parent: Vec<usize> = (0..nu).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut components = nu;
    for e in edges {
        let (a, b) = (find(&mut parent, e.tail), find(&mut parent, e.head));
        if a != b {
            parent[a] = b;
            components -= 1;
        }
    }
    components == 1
}

/// Re-runs every structural check on raw parts and returns the degree table.
pub fn validate(dimension: usize, vertices: &[Vertex], edges: &[Edge]) -> Result<Vec<usize>> {
    let graph = FundamentalGraph::new(dimension, vertices.to_vec(), edges.to_vec())?;
    Ok((0..graph.vertex_count()).map(|v| graph.degree(v)).collect())
}

/// Incremental construction with ids assigned in declaration order.
#[derive(Clone, Debug, Default)]
pub struct GraphBuilder {
    dimension: usize,
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
}

impl GraphBuilder {
    pub fn new(dimension: usize) -> Self {
        GraphBuilder {
            dimension,
            vertices: Vec::new(),
            edges: Vec::new(),
        }
    }

    pub fn vertex(&mut self, name: impl Into<String>) -> usize {
        self.vertex_with(name, 0.0, 1.0)
    }

    pub fn vertex_with(&mut self, name: impl Into<String>, potential: f64, weight: f64) -> usize {
        let id = self.vertices.len();
        self.vertices.push(Vertex {
            id,
            name: name.into(),
            potential,
            weight,
        });
        id
    }

    pub fn edge(&mut self, tail: usize, head: usize, index: &[i64]) -> usize {
        self.edge_with(tail, head, index, 1.0, 0.0)
    }

    pub fn edge_with(&mut self, tail: usize, head: usize, index: &[i64], weight: f64, alpha: f64) -> usize {
        let id = self.edges.len();
        self.edges.push(Edge {
            id,
            tail,
            head,
            index: index.to_vec(),
            weight,
            alpha,
        });
        id
    }

    pub fn build(self) -> Result<FundamentalGraph> {
        FundamentalGraph::new(self.dimension, self.vertices, self.edges)
    }
}
