//! Floquet fiber matrices of the magnetic Schrödinger operator.
//!
//! For a quasimomentum θ the fiber operator acts on functions on the vertices
//! of the fundamental graph by
//!
//! ```text
//! (Δ(θ) f)(v) = (1/m_V(v)) Σ_{e=(v,u)} m_A(e) (f(v) − e^{iΦ(e,θ)} f(u)),
//! Φ(e,θ) = a(e) + ⟨τ(e), θ⟩,
//! ```
//!
//! where the pair (a, τ) is a [`PhaseModel`]: either the raw 1-form with the
//! stored indices, or the modified form α_* with tree-normalized indices. The
//! matrices returned here are expressed in the m_V-orthonormal basis (the
//! operator conjugated by m_V^{1/2}), which makes them exactly Hermitian; with
//! unit weights this is the plain matrix of the operator.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::eigen::{self, Spectrum};
use crate::error::Result;
use crate::graph::{FundamentalGraph, OneForm};
use crate::topology::{self, FluxData};

/// Per-edge phase offset and index used to build Φ(e, θ).
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseModel {
    form: OneForm,
    indices: Vec<Vec<i64>>,
}

impl PhaseModel {
    /// The 1-form α itself with the stored edge indices.
    pub fn raw(graph: &FundamentalGraph, alpha: &OneForm) -> Self {
        PhaseModel {
            form: alpha.clone(),
            indices: graph.edges().iter().map(|e| e.index.clone()).collect(),
        }
    }

    /// α_* with tree-normalized indices.
    pub fn flux(flux_data: &FluxData) -> Self {
        PhaseModel::with_form(flux_data, flux_data.alpha_star().clone())
    }

    /// An arbitrary form (e.g. the reduced α̃) with tree-normalized indices.
    pub fn with_form(flux_data: &FluxData, form: OneForm) -> Self {
        PhaseModel {
            form,
            indices: flux_data.basis().indices().to_vec(),
        }
    }

    pub fn form(&self) -> &OneForm {
        &self.form
    }

    pub fn index(&self, edge: usize) -> &[i64] {
        &self.indices[edge]
    }

    /// Φ(e, θ) on the stored orientation of `edge`.
    pub fn phase(&self, edge: usize, theta: &[f64]) -> f64 {
        let shift: f64 = self.indices[edge]
            .iter()
            .zip(theta)
            .map(|(&t, &th)| t as f64 * th)
            .sum();
        self.form.value(edge) + shift
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Weighting {
    /// m_V ≡ 1, m_A ≡ 1 regardless of the stored weights.
    Combinatorial,
    /// Stored vertex and edge weights.
    Weighted,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FiberMatrix {
    pub matrix: crate::linalg::CMatrix,
    pub theta: Vec<f64>,
}

/// Assembles Δ(θ) (plus Q when `with_potential`) for a phase model.
pub fn assemble(
    graph: &FundamentalGraph,
    model: &PhaseModel,
    theta: &[f64],
    weighting: Weighting,
    with_potential: bool,
) -> FiberMatrix {
    assert_eq!(theta.len(), graph.dimension(), "quasimomentum has wrong dimension");
    let nu = graph.vertex_count();
    let mut m = crate::linalg::CMatrix::zeros(nu, nu);
    let (vertex_weight, edge_weight) = weights(graph, weighting);

    for edge in graph.edges() {
        let (v, u) = (edge.tail, edge.head);
        let phi = model.phase(edge.id, theta);
        let (sin, cos) = phi.sin_cos();
        let ma = edge_weight(edge.id);
        if v == u {
            // the loop and its reverse: 2 − e^{iΦ} − e^{−iΦ}
            m[(v, v)] += Complex64::new(ma / vertex_weight(v) * (2.0 - 2.0 * cos), 0.0);
        } else {
            m[(v, v)] += Complex64::new(ma / vertex_weight(v), 0.0);
            m[(u, u)] += Complex64::new(ma / vertex_weight(u), 0.0);
            let w = ma / (vertex_weight(v) * vertex_weight(u)).sqrt();
            m[(v, u)] -= Complex64::new(w * cos, w * sin);
            m[(u, v)] -= Complex64::new(w * cos, -w * sin);
        }
    }
    if with_potential {
        for vertex in graph.vertices() {
            m[(vertex.id, vertex.id)] += Complex64::new(vertex.potential, 0.0);
        }
    }
    FiberMatrix {
        matrix: m,
        theta: theta.to_vec(),
    }
}

fn weights(
    graph: &FundamentalGraph,
    weighting: Weighting,
) -> (impl Fn(usize) -> f64 + '_, impl Fn(usize) -> f64 + '_) {
    let weighted = weighting == Weighting::Weighted;
    (
        move |v: usize| if weighted { graph.vertices()[v].weight } else { 1.0 },
        move |e: usize| if weighted { graph.edges()[e].weight } else { 1.0 },
    )
}

/// Δ_α(θ) + Q in the flux representation (combinatorial weights).
pub fn assemble_flux(graph: &FundamentalGraph, flux_data: &FluxData, theta: &[f64]) -> FiberMatrix {
    assemble(graph, &PhaseModel::flux(flux_data), theta, Weighting::Combinatorial, true)
}

/// Δ̂_α(θ) + Q built directly from α and the stored indices.
pub fn assemble_raw(graph: &FundamentalGraph, alpha: &OneForm, theta: &[f64]) -> FiberMatrix {
    assemble(graph, &PhaseModel::raw(graph, alpha), theta, Weighting::Combinatorial, true)
}

/// Weighted fiber operator plus Q, in the m_V-orthonormal basis.
pub fn assemble_weighted(graph: &FundamentalGraph, flux_data: &FluxData, theta: &[f64]) -> FiberMatrix {
    assemble(graph, &PhaseModel::flux(flux_data), theta, Weighting::Weighted, true)
}

/// Rows: stored edges; columns: vertices (m_V-orthonormal coordinates).
#[derive(Clone, Debug, PartialEq)]
pub struct GradientMatrix {
    pub matrix: crate::linalg::CMatrix,
    pub theta: Vec<f64>,
}

impl GradientMatrix {
    pub fn adjoint(&self) -> crate::linalg::CMatrix {
        self.matrix.adjoint()
    }

    /// ∇*∇, equal to the weighted fiber Laplacian.
    pub fn laplacian(&self) -> crate::linalg::CMatrix {
        self.adjoint().matmul(&self.matrix)
    }

    /// Rank of ∇, read off the eigenvalues of ∇*∇.
    pub fn rank(&self, tol: f64) -> usize {
        eigen::eigvalsh(&self.laplacian())
            .expect("∇*∇ is Hermitian")
            .iter()
            .filter(|&&s| s > tol)
            .count()
    }
}

/// The magnetic gradient ∇_α(θ): for e = (v, u),
/// (∇f)(e) = e^{−iΦ/2} f(v) − e^{iΦ/2} f(u), scaled by √m_A(e) on rows and
/// expressed in m_V-orthonormal coordinates on columns.
pub fn gradient(graph: &FundamentalGraph, flux_data: &FluxData, theta: &[f64]) -> GradientMatrix {
    let model = PhaseModel::flux(flux_data);
    let mut g = crate::linalg::CMatrix::zeros(graph.edge_count(), graph.vertex_count());
    for edge in graph.edges() {
        let half = model.phase(edge.id, theta) / 2.0;
        let root_ma = edge.weight.sqrt();
        let (v, u) = (edge.tail, edge.head);
        let mv = graph.vertices()[v].weight.sqrt();
        let mu = graph.vertices()[u].weight.sqrt();
        g[(edge.id, v)] += Complex64::from_polar(root_ma / mv, -half);
        g[(edge.id, u)] -= Complex64::from_polar(root_ma / mu, half);
    }
    GradientMatrix {
        matrix: g,
        theta: theta.to_vec(),
    }
}

/// ½ Σ over oriented edges of m_A(e)|f(v) − e^{iΦ(e,θ)} f(u)|², for f given in
/// plain (not orthonormalized) coordinates.
pub fn edge_energy(graph: &FundamentalGraph, model: &PhaseModel, theta: &[f64], f: &[Complex64]) -> f64 {
    graph
        .edges()
        .iter()
        .map(|edge| {
            let phase = Complex64::from_polar(1.0, model.phase(edge.id, theta));
            // both orientations give the same modulus
            edge.weight * (f[edge.tail] - phase * f[edge.head]).norm_sqr()
        })
        .sum()
}

/// Eigenvalues (ascending) and optionally eigenvectors of a fiber matrix.
pub fn eigen(h: &FiberMatrix, want_vectors: bool) -> Result<Spectrum> {
    eigen::eigh(&h.matrix, want_vectors)
}

/// All θ ∈ [−π, π)ᵈ with Φ(e, θ) ≡ 0 (mod 2π) on every cotree edge. When
/// #cotree = d the solution exists and is unique; otherwise it may not exist.
pub fn zero_phase_quasimomenta(flux_data: &FluxData, dimension: usize) -> Result<Vec<Vec<f64>>> {
    let reduction = topology::minimal_reduction(flux_data, dimension)?;
    let basis = flux_data.basis();
    let rows: Vec<Vec<f64>> = reduction
        .independent_edges
        .iter()
        .map(|&e| basis.index(e).iter().map(|&x| x as f64).collect())
        .collect();
    let det = determinant(rows.clone()).round().abs().max(1.0) as usize;
    let alpha_star = flux_data.alpha_star();

    let mut found: Vec<Vec<f64>> = Vec::new();
    let cosets = det.checked_pow(dimension as u32).unwrap_or(usize::MAX).min(1_000_000);
    for code in 0..cosets {
        let mut rest = code;
        let rhs: Vec<f64> = reduction
            .independent_edges
            .iter()
            .map(|&e| {
                let k = (rest % det) as f64;
                rest /= det;
                -alpha_star.value(e) + TAU * k
            })
            .collect();
        let Some(theta) = crate::linalg::solve(rows.clone(), rhs) else {
            continue;
        };
        let theta: Vec<f64> = theta.iter().map(|&t| wrap_half_open(t)).collect();
        let all_zero = basis.cotree().iter().all(|&e| {
            let phase: f64 = alpha_star.value(e)
                + basis.index(e).iter().zip(&theta).map(|(&t, th)| t as f64 * th).sum::<f64>();
            topology::reduce_angle(phase).abs() < 1e-9
        });
        let duplicate = found.iter().any(|other| {
            other
                .iter()
                .zip(&theta)
                .all(|(a, b)| topology::reduce_angle(a - b).abs() < 1e-9)
        });
        if all_zero && !duplicate {
            found.push(theta);
        }
    }
    Ok(found)
}

fn wrap_half_open(t: f64) -> f64 {
    let r = (t + PI).rem_euclid(TAU) - PI;
    if r >= PI {
        r - TAU
    } else {
        r
    }
}

fn determinant(mut a: Vec<Vec<f64>>) -> f64 {
    let n = a.len();
    let mut det = 1.0;
    for col in 0..n {
        let Some(pivot) = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())) else {
            return 0.0;
        };
        if a[pivot][col] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            a.swap(pivot, col);
            det = -det;
        }
        det *= a[col][col];
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
        }
    }
    det
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphBuilder;
    use crate::testing::{random_form, random_graph, random_vertex_function};
    use proptest::prelude::*;

    fn square() -> FundamentalGraph {
        let mut b = GraphBuilder::new(2);
        let v = b.vertex("v");
        b.edge(v, v, &[1, 0]);
        b.edge(v, v, &[0, 1]);
        b.build().unwrap()
    }

    fn star(d: usize, nu: usize) -> FundamentalGraph {
        let mut b = GraphBuilder::new(d);
        let spokes: Vec<usize> = (1..nu).map(|k| b.vertex(format!("v{k}"))).collect();
        let center = b.vertex(format!("v{nu}"));
        for &s in &spokes {
            b.edge(s, center, &vec![0; d]);
        }
        for j in 0..d {
            let mut index = vec![0; d];
            index[j] = 1;
            b.edge(center, center, &index);
        }
        b.build().unwrap()
    }

    fn values(graph: &FundamentalGraph, h: &FiberMatrix) -> Vec<f64> {
        let _ = graph;
        eigen(h, false).unwrap().values
    }

    #[test]
    fn square_lattice_fiber() {
        let g = square();
        let fd = FluxData::new(&g, &OneForm::zeros(2));
        for theta in [[0.3, -1.1], [PI, PI], [0.0, 2.0]] {
            let h = assemble_flux(&g, &fd, &theta);
            let expected = 4.0 - 2.0 * theta[0].cos() - 2.0 * theta[1].cos();
            assert!((h.matrix[(0, 0)].re - expected).abs() < 1e-14);
            assert_eq!(h.matrix[(0, 0)].im, 0.0);
        }
    }

    #[test]
    fn star_fiber_at_theta_pi() {
        let g = star(2, 3);
        let fd = FluxData::new(&g, &OneForm::zeros(4));
        let h = assemble_flux(&g, &fd, &[PI, PI]);
        let ev = values(&g, &h);
        let s = 89f64.sqrt();
        let expected = [(11.0 - s) / 2.0, 1.0, (11.0 + s) / 2.0];
        for (a, b) in ev.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn raw_with_modified_form_equals_flux() {
        let g = star(2, 3);
        let alpha = random_form(3, g.edge_count());
        let fd = FluxData::new(&g, &alpha);
        let theta = [0.4, -2.2];
        let raw = assemble_raw(&g, fd.alpha_star(), &theta);
        let flux = assemble_flux(&g, &fd, &theta);
        assert_eq!(raw, flux);
    }

    #[test]
    fn laplacian_kernel_at_zero() {
        for seed in 0..10 {
            let g0 = random_graph(seed, 6, 2);
            let g = g0.with_potentials(&vec![0.0; g0.vertex_count()]);
            let fd = FluxData::new(&g, &OneForm::zeros(g.edge_count()));
            let h = assemble_flux(&g, &fd, &[0.0, 0.0]);
            for i in 0..g.vertex_count() {
                let row: Complex64 = (0..g.vertex_count()).map(|j| h.matrix[(i, j)]).sum();
                assert!(row.norm() < 1e-14);
            }
        }
    }

    #[test]
    fn weighted_variants() {
        let g = square();
        let fd = FluxData::new(&g, &OneForm::zeros(2));
        let theta = [0.7, -0.3];
        assert_eq!(assemble_weighted(&g, &fd, &theta), assemble_flux(&g, &fd, &theta));

        let normalized = g.with_weights(&[4.0], &[1.0, 1.0]).unwrap();
        let h = assemble_weighted(&normalized, &fd, &theta);
        let expected = 1.0 - (theta[0].cos() + theta[1].cos()) / 2.0;
        assert!((h.matrix[(0, 0)].re - expected).abs() < 1e-15);

        let g = random_graph(4, 6, 2);
        let fd = FluxData::new(&g, &random_form(5, g.edge_count()));
        let mv = random_vertex_function(6, g.vertex_count(), 1.0);
        let ma = random_vertex_function(7, g.edge_count(), 1.0);
        let mv: Vec<f64> = mv.iter().map(|x| 1.5 + x).collect();
        let ma: Vec<f64> = ma.iter().map(|x| 1.5 + x).collect();
        let c = 3.0;
        let a = g.with_weights(&mv, &ma).unwrap();
        let scaled = g
            .with_weights(
                &mv.iter().map(|x| x * c).collect::<Vec<_>>(),
                &ma.iter().map(|x| x * c).collect::<Vec<_>>(),
            )
            .unwrap();
        let diff = assemble_weighted(&a, &fd, &theta)
            .matrix
            .sub(&assemble_weighted(&scaled, &fd, &theta).matrix)
            .max_abs();
        assert!(diff < 1e-13);
    }

    #[test]
    fn harper_like_diagonal() {
        // 2x2 cell with all-nonloop edges: raw diagonal equals the degree
        let mut b = GraphBuilder::new(2);
        let v: Vec<usize> = (0..4).map(|k| b.vertex(format!("{k}"))).collect();
        b.edge(v[0], v[1], &[0, 0]);
        b.edge(v[1], v[0], &[1, 0]);
        b.edge(v[2], v[3], &[0, 0]);
        b.edge(v[3], v[2], &[1, 0]);
        b.edge(v[0], v[2], &[0, 0]);
        b.edge(v[2], v[0], &[0, 1]);
        b.edge(v[1], v[3], &[0, 0]);
        b.edge(v[3], v[1], &[0, 1]);
        let g = b.build().unwrap();
        let h = assemble_raw(&g, &random_form(1, 8), &[0.0, 0.0]);
        for i in 0..4 {
            assert_eq!(h.matrix[(i, i)], Complex64::new(4.0, 0.0));
        }
        assert_eq!(h.matrix.hermitian_defect(), 0.0);
    }

    #[test]
    fn rank_of_gradient() {
        // β = d: a unique θ kills every cotree phase
        let g = star(2, 3);
        let alpha = OneForm::new(vec![0.5, -0.2, 1.3, -2.1]);
        let fd = FluxData::new(&g, &alpha);
        let zeros = zero_phase_quasimomenta(&fd, 2).unwrap();
        assert_eq!(zeros.len(), 1);
        let theta = &zeros[0];
        assert_eq!(gradient(&g, &fd, theta).rank(1e-9), 2);
        let perturbed = [theta[0] + 0.3, theta[1]];
        assert_eq!(gradient(&g, &fd, &perturbed).rank(1e-9), 3);
    }

    #[test]
    fn zero_phase_may_not_exist() {
        // two loops with index 1 and different fluxes: no common zero
        let mut b = GraphBuilder::new(1);
        let v = b.vertex("v");
        b.edge_with(v, v, &[1], 1.0, 0.0);
        b.edge_with(v, v, &[1], 1.0, 1.0);
        let g = b.build().unwrap();
        let fd = FluxData::new(&g, &g.alpha());
        assert!(zero_phase_quasimomenta(&fd, 1).unwrap().is_empty());
    }

    #[test]
    fn zero_phase_with_non_unimodular_choice() {
        // first independent cotree index is 2: two cosets to search
        let mut b = GraphBuilder::new(1);
        let v = b.vertex("v");
        b.edge_with(v, v, &[2], 1.0, 0.0);
        b.edge_with(v, v, &[1], 1.0, 0.0);
        let g = b.build().unwrap();
        let fd = FluxData::new(&g, &g.alpha());
        let zeros = zero_phase_quasimomenta(&fd, 1).unwrap();
        assert_eq!(zeros.len(), 1);
        assert!(zeros[0][0].abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn hermitian_psd_and_bounded(seed in 0u64..10_000, t1 in -PI..PI, t2 in -PI..PI) {
            let g = random_graph(seed, 6, 2);
            let fd = FluxData::new(&g, &random_form(seed ^ 0xabc, g.edge_count()));
            let lap = assemble(&g, &PhaseModel::flux(&fd), &[t1, t2], Weighting::Combinatorial, false);
            prop_assert_eq!(lap.matrix.hermitian_defect(), 0.0);
            let ev = eigen(&lap, false).unwrap().values;
            let kp = g.kappa_plus();
            prop_assert!(ev[0] >= -1e-10);
            prop_assert!(*ev.last().unwrap() <= 2.0 * kp + 1e-10);
        }

        #[test]
        fn factorization_and_quadratic_form(seed in 0u64..10_000, t1 in -PI..PI, t2 in -PI..PI) {
            let g = random_graph(seed, 6, 2);
            let mv: Vec<f64> = random_vertex_function(seed + 1, g.vertex_count(), 0.9).iter().map(|x| 1.0 + x).collect();
            let ma: Vec<f64> = random_vertex_function(seed + 2, g.edge_count(), 0.9).iter().map(|x| 1.0 + x).collect();
            let g = g.with_weights(&mv, &ma).unwrap();
            let fd = FluxData::new(&g, &random_form(seed + 3, g.edge_count()));
            let theta = [t1, t2];
            let lap = assemble(&g, &PhaseModel::flux(&fd), &theta, Weighting::Weighted, false);
            let grad = gradient(&g, &fd, &theta);
            prop_assert!(lap.matrix.sub(&grad.laplacian()).max_abs() <= 1e-12);

            let re = random_vertex_function(seed + 4, g.vertex_count(), 1.0);
            let im = random_vertex_function(seed + 5, g.vertex_count(), 1.0);
            let f: Vec<Complex64> = re.iter().zip(&im).map(|(&a, &b)| Complex64::new(a, b)).collect();
            let orthonormal: Vec<Complex64> = f.iter().zip(&mv).map(|(z, m)| z * m.sqrt()).collect();
            let lhs = lap.matrix.quadratic_form(&orthonormal);
            let rhs = edge_energy(&g, &PhaseModel::flux(&fd), &theta, &f);
            prop_assert!(lhs.im.abs() < 1e-12);
            prop_assert!((lhs.re - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
        }

        #[test]
        fn gauge_and_flux_representations_agree(seed in 0u64..10_000, t1 in -PI..PI, t2 in -PI..PI) {
            let g = random_graph(seed, 6, 2);
            let alpha = random_form(seed + 11, g.edge_count());
            let gauge = random_vertex_function(seed + 12, g.vertex_count(), 5.0);
            let theta = [t1, t2];
            let a = eigen(&assemble_raw(&g, &alpha, &theta), false).unwrap().values;
            let b = eigen(&assemble_raw(&g, &alpha.add_gauge(&g, &gauge), &theta), false).unwrap().values;
            let fd = FluxData::new(&g, &alpha);
            let c = eigen(&assemble_flux(&g, &fd, &theta), false).unwrap().values;
            for i in 0..a.len() {
                prop_assert!((a[i] - b[i]).abs() < 1e-10);
                prop_assert!((a[i] - c[i]).abs() < 1e-10);
            }
        }

        #[test]
        fn conjugate_form_mirrors_quasimomentum(seed in 0u64..10_000, t1 in -PI..PI, t2 in -PI..PI) {
            let g = random_graph(seed, 6, 2);
            let alpha = random_form(seed + 21, g.edge_count());
            let a = eigen(&assemble_raw(&g, &alpha, &[t1, t2]), false).unwrap().values;
            let b = eigen(&assemble_raw(&g, &alpha.negated(), &[-t1, -t2]), false).unwrap().values;
            for i in 0..a.len() {
                prop_assert!((a[i] - b[i]).abs() < 1e-10);
            }
        }
    }
}
