//! Numerical checks of the spectral estimates: total band length, gap length,
//! magnetic perturbation and effective-form bounds.
//!
//! Every check produces [`BoundReport`]s of the form `lhs ≤ rhs`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::eigen;
use crate::error::{Error, Result};
use crate::fiber::{self, PhaseModel, Weighting};
use crate::graph::{FundamentalGraph, OneForm};
use crate::spectrum::{self, Band, BandStructure, TorusGrid, DEFAULT_FLAT_TOL};
use crate::topology::FluxData;

pub const FD_STEP: f64 = 1e-3;
pub const SIMPLE_GAP: f64 = 1e-8;
pub const RANDOM_DIRECTIONS: usize = 64;
const DIRECTION_SEED: u64 = 0x5eed;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub satisfied: bool,
    pub slack: f64,
}

impl BoundReport {
    pub fn new(name: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        BoundReport {
            name: name.into(),
            lhs,
            rhs,
            satisfied: lhs <= rhs + 1e-9 * (1.0 + rhs.abs()),
            slack: rhs - lhs,
        }
    }
}

pub fn all_satisfied(reports: &[BoundReport]) -> bool {
    reports.iter().all(|r| r.satisfied)
}

/// Σ|σ_n| ≤ 4β, and |σ| ≤ Σ|σ_n|.
pub fn check_total_band_length(band_structure: &BandStructure, flux_data: &FluxData) -> Vec<BoundReport> {
    let total = band_structure.total_band_length();
    vec![
        BoundReport::new("total band length <= 4 beta", total, 4.0 * flux_data.betti() as f64),
        BoundReport::new("measure <= total band length", band_structure.measure, total),
    ]
}

/// β̂ = Σ over cotree edges in both orientations of m_A(e)/√(m_V(u) m_V(v)).
pub fn beta_hat(graph: &FundamentalGraph, flux_data: &FluxData) -> f64 {
    flux_data
        .cotree()
        .iter()
        .map(|&e| {
            let edge = graph.edge(e);
            let mu = graph.vertices()[edge.tail].weight;
            let mv = graph.vertices()[edge.head].weight;
            2.0 * edge.weight / (mu * mv).sqrt()
        })
        .sum()
}

/// Σ|σ_n| ≤ 2β̂ for the weighted operator.
pub fn check_weighted_band_length(band_structure: &BandStructure, graph: &FundamentalGraph) -> BoundReport {
    let flux_data = FluxData::new(graph, &graph.alpha());
    BoundReport::new(
        "total band length <= 2 beta_hat",
        band_structure.total_band_length(),
        2.0 * beta_hat(graph, &flux_data),
    )
}

/// The chain Σ|γ_n| ≥ λ_ν⁺ − λ_1⁻ − 4β ≥ |λ_ν⁰⁺ − λ_1⁰⁻ − q_•| − 4β, where the
/// superscript 0 refers to `laplacian` (the band structure with Q stripped)
/// and q_• = max Q − min Q. Both links are reported.
pub fn check_gap_bound(
    band_structure: &BandStructure,
    laplacian: &BandStructure,
    graph: &FundamentalGraph,
    flux_data: &FluxData,
) -> Vec<BoundReport> {
    let four_beta = 4.0 * flux_data.betti() as f64;
    let gaps = band_structure.total_gap_length();
    let middle = band_structure.top() - band_structure.bottom() - four_beta;
    let q = graph.potentials();
    let q_spread = q.iter().copied().fold(f64::NEG_INFINITY, f64::max) - q.iter().copied().fold(f64::INFINITY, f64::min);
    let lower = (laplacian.top() - laplacian.bottom() - q_spread).abs() - four_beta;
    vec![
        BoundReport::new("top - bottom - 4 beta <= total gap length", middle, gaps),
        BoundReport::new("|top0 - bottom0 - q_spread| - 4 beta <= top - bottom - 4 beta", lower, middle),
    ]
}

/// Band-length and gap checks for a graph; the 4β checks only apply to the
/// combinatorial operator, the 2β̂ check applies always.
pub fn verify(graph: &FundamentalGraph, grid: &TorusGrid) -> Result<Vec<BoundReport>> {
    let alpha = graph.alpha();
    let flux_data = FluxData::new(graph, &alpha);
    let bs = spectrum::sweep_flux(graph, &flux_data, grid, true)?;
    let mut reports = Vec::new();
    if graph.has_unit_weights() {
        let laplacian = spectrum::sweep_flux(graph, &flux_data, grid, false)?;
        reports.extend(check_total_band_length(&bs, &flux_data));
        reports.extend(check_gap_bound(&bs, &laplacian, graph, &flux_data));
    }
    reports.push(check_weighted_band_length(&bs, graph));
    Ok(reports)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PerturbationData {
    /// Grid minimum of λ_1(X(θ)).
    pub lambda_1: f64,
    /// Grid maximum of λ_ν(X(θ)).
    pub lambda_nu: f64,
    /// 2 max_u Σ_{e ∈ S ∪ S̄, e from u} w(e)|sin x_e|, x_e the half flux difference.
    pub c: f64,
    /// Per band: (λ°⁻ − λ⁻, λ°⁺ − λ⁺).
    pub shifts: Vec<(f64, f64)>,
    /// Per band: |σ°_n| − |σ_n|.
    pub width_changes: Vec<f64>,
    pub bands: Vec<Band>,
    pub bands_o: Vec<Band>,
}

/// Compares H_α with H_{α°} on the same graph. X(θ) = H_{α°}(θ) − H_α(θ) is
/// built in the flux representation with a shared spanning tree, so it is
/// supported on cotree edges and independent of Q.
pub fn perturbation_bounds(
    graph: &FundamentalGraph,
    alpha: &OneForm,
    alpha_o: &OneForm,
    grid: &TorusGrid,
) -> Result<(PerturbationData, Vec<BoundReport>)> {
    for form in [alpha, alpha_o] {
        if form.len() != graph.edge_count() {
            return Err(Error::GraphMismatch(format!(
                "1-form has {} values but the graph has {} edges",
                form.len(),
                graph.edge_count()
            )));
        }
    }
    if grid.dimension() != graph.dimension() {
        return Err(Error::BadGrid("grid dimension does not match graph".into()));
    }
    let flux_data = FluxData::new(graph, alpha);
    let flux_data_o = FluxData::from_basis(flux_data.basis().clone(), alpha_o);
    let model = PhaseModel::flux(&flux_data);
    let model_o = PhaseModel::flux(&flux_data_o);

    struct Point {
        h: Vec<f64>,
        h_o: Vec<f64>,
        x_min: f64,
        x_max: f64,
        x_mean: f64,
    }
    let points = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let theta = grid.point(i);
            let h = fiber::assemble(graph, &model, &theta, Weighting::Weighted, true).matrix;
            let h_o = fiber::assemble(graph, &model_o, &theta, Weighting::Weighted, true).matrix;
            let x = h_o.sub(&h);
            let xv = eigen::eigvalsh(&x)?;
            let nu = xv.len() as f64;
            Ok(Point {
                h: eigen::eigvalsh(&h)?,
                h_o: eigen::eigvalsh(&h_o)?,
                x_min: xv[0],
                x_max: xv[xv.len() - 1],
                x_mean: (0..x.rows()).map(|k| x[(k, k)].re).sum::<f64>() / nu,
            })
        })
        .collect::<Result<Vec<Point>>>()?;

    let lambda_1 = points.iter().map(|p| p.x_min).fold(f64::INFINITY, f64::min);
    let lambda_nu = points.iter().map(|p| p.x_max).fold(f64::NEG_INFINITY, f64::max);
    let mean_lo = points.iter().map(|p| p.x_mean).fold(f64::INFINITY, f64::min);
    let mean_hi = points.iter().map(|p| p.x_mean).fold(f64::NEG_INFINITY, f64::max);

    let bs = BandStructure::from_values(grid.clone(), points.iter().map(|p| p.h.clone()).collect(), DEFAULT_FLAT_TOL);
    let bs_o = BandStructure::from_values(grid.clone(), points.into_iter().map(|p| p.h_o).collect(), DEFAULT_FLAT_TOL);
    let shifts: Vec<(f64, f64)> = bs
        .bands
        .iter()
        .zip(&bs_o.bands)
        .map(|(b, bo)| (bo.lower - b.lower, bo.upper - b.upper))
        .collect();
    let width_changes: Vec<f64> = bs
        .bands
        .iter()
        .zip(&bs_o.bands)
        .map(|(b, bo)| bo.width() - b.width())
        .collect();

    let mut row_sums = vec![0.0; graph.vertex_count()];
    for &e in flux_data.cotree() {
        let edge = graph.edge(e);
        let x = 0.5 * (flux_data_o.alpha_star().value(e) - flux_data.alpha_star().value(e));
        let w = edge.weight / (graph.vertices()[edge.tail].weight * graph.vertices()[edge.head].weight).sqrt();
        let term = w * x.sin().abs();
        row_sums[edge.tail] += term;
        row_sums[edge.head] += term;
    }
    let c = 2.0 * row_sums.iter().copied().fold(0.0, f64::max);

    let min_shift = shifts.iter().flat_map(|&(a, b)| [a, b]).fold(f64::INFINITY, f64::min);
    let max_shift = shifts.iter().flat_map(|&(a, b)| [a, b]).fold(f64::NEG_INFINITY, f64::max);
    let max_width_change = width_changes.iter().map(|w| w.abs()).fold(0.0, f64::max);

    let reports = vec![
        BoundReport::new("Lambda_1 <= band endpoint shifts", lambda_1, min_shift),
        BoundReport::new("band endpoint shifts <= Lambda_nu", max_shift, lambda_nu),
        BoundReport::new("| |width_o| - |width| | <= Lambda_nu - Lambda_1", max_width_change, lambda_nu - lambda_1),
        BoundReport::new("max(|Lambda_1|, |Lambda_nu|) <= C", lambda_1.abs().max(lambda_nu.abs()), c),
        BoundReport::new(
            "Lambda_1 <= mean eigenvalue of X <= Lambda_nu",
            (lambda_1 - mean_lo).max(mean_hi - lambda_nu),
            0.0,
        ),
    ];
    let data = PerturbationData {
        lambda_1,
        lambda_nu,
        c,
        shifts,
        width_changes,
        bands: bs.bands,
        bands_o: bs_o.bands,
    };
    Ok((data, reports))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Extremum {
    Min,
    Max,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EffectiveForm {
    /// Zero-based band index.
    pub band: usize,
    pub extremum: Extremum,
    pub theta0: Vec<f64>,
    pub value: f64,
    /// Richardson-extrapolated Hessian of λ_n at θ0, symmetrized.
    pub hessian: Vec<Vec<f64>>,
    /// Plain central-difference Hessian with step h/2.
    pub hessian_half_step: Vec<Vec<f64>>,
    /// Distance from λ_n(θ0) to the rest of the fiber spectrum; ∞ when ν = 1.
    pub rho: f64,
    pub t1: f64,
    pub t2: f64,
    /// max |μ(ω)| over the sampled unit directions.
    pub max_mu: f64,
    pub bound: f64,
}

impl EffectiveForm {
    /// μ(ω) = ½ ωᵀ M ω.
    pub fn mu(&self, omega: &[f64]) -> f64 {
        quadratic(&self.hessian, omega)
    }
}

fn quadratic(m: &[Vec<f64>], omega: &[f64]) -> f64 {
    let mut s = 0.0;
    for (j, row) in m.iter().enumerate() {
        for (k, &mjk) in row.iter().enumerate() {
            s += omega[j] * mjk * omega[k];
        }
    }
    0.5 * s
}

/// T_s = (1/s) max_u Σ_{e ∈ S ∪ S̄, e from u} m_A(e)‖τ(e)‖^s / √(m_V(u) m_V(v)),
/// with tree-normalized indices.
pub fn t_constant(graph: &FundamentalGraph, flux_data: &FluxData, s: u32) -> f64 {
    let mut row_sums = vec![0.0; graph.vertex_count()];
    for &e in flux_data.cotree() {
        let edge = graph.edge(e);
        let norm = flux_data
            .basis()
            .index(e)
            .iter()
            .map(|&t| (t as f64).powi(2))
            .sum::<f64>()
            .sqrt();
        let w = edge.weight / (graph.vertices()[edge.tail].weight * graph.vertices()[edge.head].weight).sqrt();
        let term = w * norm.powi(s as i32);
        row_sums[edge.tail] += term;
        row_sums[edge.head] += term;
    }
    row_sums.iter().copied().fold(0.0, f64::max) / s as f64
}

/// Effective form of band `band` (zero-based) of Δ_α at its grid extremum,
/// checked against |μ(ω)| ≤ T1²/ρ + T2. `theta0` of the result is in the
/// reduced grid coordinates of the sweep.
pub fn effective_form(
    graph: &FundamentalGraph,
    alpha: &OneForm,
    band: usize,
    extremum: Extremum,
    grid: &TorusGrid,
) -> Result<(EffectiveForm, BoundReport)> {
    let nu = graph.vertex_count();
    if band >= nu {
        return Err(Error::BadBand { band, nu });
    }
    let flux_data = FluxData::new(graph, alpha);
    let bs = spectrum::sweep_flux(graph, &flux_data, grid, false)?;
    let sign = match extremum {
        Extremum::Min => 1.0,
        Extremum::Max => -1.0,
    };
    // first grid point attaining the extremum
    let (best, _) = bs
        .branch(band)
        .enumerate()
        .fold((0, f64::INFINITY), |(bi, bv), (i, v)| if sign * v < bv { (i, sign * v) } else { (bi, bv) });
    let value = bs.values[best][band];
    let strict = grid.neighbours(best).into_iter().all(|k| {
        let other = bs.values[k][band];
        sign * (other - value) > 1e-12 * (1.0 + value.abs())
    });
    if !strict {
        return Err(Error::NotExtremum { band });
    }
    let theta0 = grid.point(best);
    let spectrum0 = &bs.values[best];
    let rho = spectrum0
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != band)
        .map(|(_, &x)| (x - value).abs())
        .fold(f64::INFINITY, f64::min);
    if rho <= SIMPLE_GAP {
        return Err(Error::NotSimpleEigenvalue { distance: rho });
    }

    let (model, _) = spectrum::reduced_model(graph, &flux_data)?;
    let eval = |theta: &[f64]| -> Result<f64> {
        let h = fiber::assemble(graph, &model, theta, Weighting::Weighted, false);
        Ok(eigen::eigvalsh(&h.matrix)?[band])
    };
    let coarse = hessian(&eval, &theta0, value, FD_STEP)?;
    let fine = hessian(&eval, &theta0, value, FD_STEP / 2.0)?;
    let d = theta0.len();
    let extrapolated: Vec<Vec<f64>> = (0..d)
        .map(|j| (0..d).map(|k| (4.0 * fine[j][k] - coarse[j][k]) / 3.0).collect())
        .collect();

    let t1 = t_constant(graph, &flux_data, 1);
    let t2 = t_constant(graph, &flux_data, 2);
    let bound = if rho.is_infinite() { t2 } else { t1 * t1 / rho + t2 };

    let mut rng = ChaCha8Rng::seed_from_u64(DIRECTION_SEED);
    let mut directions: Vec<Vec<f64>> = (0..d)
        .map(|j| (0..d).map(|k| if j == k { 1.0 } else { 0.0 }).collect())
        .collect();
    while directions.len() < d + RANDOM_DIRECTIONS {
        let v: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-3 && norm <= 1.0 {
            directions.push(v.iter().map(|x| x / norm).collect());
        }
    }
    let max_mu = directions
        .iter()
        .map(|w| quadratic(&extrapolated, w).abs())
        .fold(0.0, f64::max);

    let form = EffectiveForm {
        band,
        extremum,
        theta0,
        value,
        hessian: extrapolated,
        hessian_half_step: fine,
        rho,
        t1,
        t2,
        max_mu,
        bound,
    };
    let report = BoundReport::new("|mu(omega)| <= T1^2/rho + T2", max_mu, bound);
    Ok((form, report))
}

/// Symmetrized central-difference Hessian with step h.
fn hessian(f: &impl Fn(&[f64]) -> Result<f64>, theta0: &[f64], f0: f64, h: f64) -> Result<Vec<Vec<f64>>> {
    let d = theta0.len();
    let shifted = |steps: &[(usize, f64)]| -> Result<f64> {
        let mut theta = theta0.to_vec();
        for &(j, s) in steps {
            theta[j] += s;
        }
        f(&theta)
    };
    let mut m = vec![vec![0.0; d]; d];
    for j in 0..d {
        let fp = shifted(&[(j, h)])?;
        let fm = shifted(&[(j, -h)])?;
        m[j][j] = (fp - 2.0 * f0 + fm) / (h * h);
        for k in 0..j {
            let fpp = shifted(&[(j, h), (k, h)])?;
            let fpm = shifted(&[(j, h), (k, -h)])?;
            let fmp = shifted(&[(j, -h), (k, h)])?;
            let fmm = shifted(&[(j, -h), (k, -h)])?;
            let v = (fpp - fpm - fmp + fmm) / (4.0 * h * h);
            m[j][k] = v;
            m[k][j] = v;
        }
    }
    Ok(m)
}
