//! Band structure over the Brillouin torus.
//!
//! Eigenvalue branches are labelled in increasing order at every grid point,
//! so a band is the range of the n-th smallest eigenvalue over the grid. Band
//! edges are grid extrema; the grid always contains θ = 0 and θ = (π, …, π).
//!
//! Sweeps run in the reduced coordinates θ̃ = θ − θ0 of the minimal flux
//! reduction: the fiber at grid point θ̃ is H_α̃(θ̃) = H_α(θ̃ + θ0). The union
//! of fiber spectra is unchanged, and when β = d the sampled band structure
//! is exactly that of α = 0.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::eigen;
use crate::error::{Error, Result};
use crate::fiber::{self, PhaseModel, Weighting};
use crate::graph::{FundamentalGraph, OneForm};
use crate::topology::{self, FluxData};

pub const DEFAULT_FLAT_TOL: f64 = 1e-9;

/// N points per dimension spanning the closed interval [−π, π] with step
/// 2π/(N−1); N must be odd so that 0 is a grid point.
#[derive(Clone, Debug, PartialEq)]
pub struct TorusGrid {
    dimension: usize,
    points_per_dim: usize,
}

impl TorusGrid {
    pub fn new(dimension: usize, points_per_dim: usize) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::BadGrid("dimension must be at least 1".into()));
        }
        if points_per_dim < 3 || points_per_dim.is_multiple_of(2) {
            return Err(Error::BadGrid(format!(
                "points per dimension must be odd and at least 3 (got {points_per_dim})"
            )));
        }
        let total = (points_per_dim as f64).powi(dimension as i32);
        if total > 5e7 {
            return Err(Error::BadGrid(format!("{total} grid points is too many")));
        }
        Ok(TorusGrid {
            dimension,
            points_per_dim,
        })
    }

    /// 33 points per dimension for d ≤ 2, 9 otherwise.
    pub fn default_for(dimension: usize) -> Self {
        let n = if dimension <= 2 { 33 } else { 9 };
        TorusGrid::new(dimension, n).expect("default grid is valid")
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn points_per_dim(&self) -> usize {
        self.points_per_dim
    }

    pub fn len(&self) -> usize {
        self.points_per_dim.pow(self.dimension as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn coordinate(&self, k: usize) -> f64 {
        let half = (self.points_per_dim - 1) / 2;
        if k == half {
            0.0
        } else if k == 0 {
            -PI
        } else if k == self.points_per_dim - 1 {
            PI
        } else {
            -PI + 2.0 * PI * k as f64 / (self.points_per_dim - 1) as f64
        }
    }

    /// Multi-index of a flat point index; the last dimension varies fastest.
    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dimension];
        for j in (0..self.dimension).rev() {
            idx[j] = flat % self.points_per_dim;
            flat /= self.points_per_dim;
        }
        idx
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        multi.iter().fold(0, |acc, &k| acc * self.points_per_dim + k)
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat).into_iter().map(|k| self.coordinate(k)).collect()
    }

    pub fn points(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        (0..self.len()).map(|i| self.point(i))
    }

    /// Flat indices of the grid neighbours (±1 step per coordinate, periodic).
    pub fn neighbours(&self, flat: usize) -> Vec<usize> {
        let base = self.multi_index(flat);
        let n = self.points_per_dim;
        let mut out = Vec::with_capacity(2 * self.dimension);
        for j in 0..self.dimension {
            for step in [1, n - 2] {
                // −π and π coincide, so the periodic wrap skips one of them
                let mut idx = base.clone();
                idx[j] = (base[j] + step) % (n - 1);
                out.push(self.flat_index(&idx));
            }
        }
        out
    }

    /// The grid refined to 2N − 1 points per dimension; contains this one.
    pub fn refined(&self) -> TorusGrid {
        TorusGrid::new(self.dimension, 2 * self.points_per_dim - 1).expect("refined grid is valid")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Band {
    pub lower: f64,
    pub upper: f64,
}

impl Band {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FlatBand {
    pub value: f64,
    pub multiplicity: usize,
    /// True when the flat band sits inside a gap between non-degenerate bands.
    pub in_gap: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Gap {
    pub lower: f64,
    pub upper: f64,
}

impl Gap {
    pub fn length(&self) -> f64 {
        self.upper - self.lower
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BandStructure {
    pub grid: TorusGrid,
    /// Offset between grid coordinates and quasimomenta: θ = θ̃ + theta0.
    pub theta0: Vec<f64>,
    /// Sorted eigenvalues per grid point, in grid order.
    pub values: Vec<Vec<f64>>,
    pub bands: Vec<Band>,
    pub flat_bands: Vec<FlatBand>,
    pub gaps: Vec<Gap>,
    pub measure: f64,
}

impl BandStructure {
    /// Builds bands, flat bands, gaps and measure from per-point eigenvalues.
    pub fn from_values(grid: TorusGrid, values: Vec<Vec<f64>>, flat_tol: f64) -> Self {
        let nu = values.first().map_or(0, Vec::len);
        let bands: Vec<Band> = (0..nu)
            .map(|n| {
                let (lower, upper) = values
                    .iter()
                    .map(|row| row[n])
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
                Band { lower, upper }
            })
            .collect();
        let flat_flags: Vec<bool> = bands.iter().map(|b| is_flat(b, flat_tol)).collect();
        let (measure, gaps) = measure_and_gaps(&bands, &flat_flags);
        let flat_bands = flat_bands_from(&bands, &flat_flags, flat_tol, &gaps);
        BandStructure {
            theta0: vec![0.0; grid.dimension()],
            grid,
            values,
            bands,
            flat_bands,
            gaps,
            measure,
        }
    }

    pub fn nu(&self) -> usize {
        self.bands.len()
    }

    /// Σ_n |σ_n|.
    pub fn total_band_length(&self) -> f64 {
        self.bands.iter().map(Band::width).sum()
    }

    pub fn total_gap_length(&self) -> f64 {
        self.gaps.iter().map(Gap::length).sum()
    }

    pub fn bottom(&self) -> f64 {
        self.bands.first().map_or(f64::NAN, |b| b.lower)
    }

    pub fn top(&self) -> f64 {
        self.bands.iter().map(|b| b.upper).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Eigenvalue branch n over the grid.
    pub fn branch(&self, n: usize) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().map(move |row| row[n])
    }
}

fn is_flat(band: &Band, tol: f64) -> bool {
    band.width() <= tol * (1.0 + band.lower.abs())
}

/// Flat branches with equal values (within `tol`) merged with summed multiplicity.
pub fn flat_bands(band_structure: &BandStructure, tol: f64) -> Vec<FlatBand> {
    let flags: Vec<bool> = band_structure.bands.iter().map(|b| is_flat(b, tol)).collect();
    let (_, gaps) = measure_and_gaps(&band_structure.bands, &flags);
    flat_bands_from(&band_structure.bands, &flags, tol, &gaps)
}

fn flat_bands_from(bands: &[Band], flags: &[bool], tol: f64, gaps: &[Gap]) -> Vec<FlatBand> {
    let mut out: Vec<FlatBand> = Vec::new();
    let mut previous_flat = false;
    for (band, &flat) in bands.iter().zip(flags) {
        if !flat {
            previous_flat = false;
            continue;
        }
        let value = 0.5 * (band.lower + band.upper);
        match out.last_mut() {
            Some(last) if previous_flat && (last.value - value).abs() <= tol * (1.0 + value.abs()) => {
                last.multiplicity += 1;
            }
            _ => out.push(FlatBand {
                value,
                multiplicity: 1,
                in_gap: false,
            }),
        }
        previous_flat = true;
    }
    for fb in &mut out {
        fb.in_gap = gaps.iter().any(|g| g.lower < fb.value && fb.value < g.upper);
    }
    out
}

/// Lebesgue measure of the union of the bands and the gaps between the
/// closures of the non-degenerate bands inside [min lower, max upper].
/// Flat branches (flagged) contribute no measure and do not split gaps; when
/// every band is flat, gaps separate the distinct flat values.
pub fn measure_and_gaps(bands: &[Band], flat: &[bool]) -> (f64, Vec<Gap>) {
    if bands.is_empty() {
        return (0.0, Vec::new());
    }
    let lo = bands.iter().map(|b| b.lower).fold(f64::INFINITY, f64::min);
    let hi = bands.iter().map(|b| b.upper).fold(f64::NEG_INFINITY, f64::max);

    let mut intervals: Vec<(f64, f64)> = bands
        .iter()
        .zip(flat)
        .filter(|(_, &f)| !f)
        .map(|(b, _)| (b.lower, b.upper))
        .collect();
    if intervals.is_empty() {
        intervals = bands.iter().map(|b| (b.lower, b.upper)).collect();
    }
    intervals.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));

    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (a, b) in intervals {
        match merged.last_mut() {
            Some(last) if a <= last.1 => last.1 = last.1.max(b),
            _ => merged.push((a, b)),
        }
    }
    let measure = merged.iter().map(|(a, b)| b - a).sum();

    let mut gaps = Vec::new();
    let mut cursor = lo;
    for &(a, b) in &merged {
        if a > cursor {
            gaps.push(Gap { lower: cursor, upper: a });
        }
        cursor = cursor.max(b);
    }
    if hi > cursor {
        gaps.push(Gap { lower: cursor, upper: hi });
    }
    (measure, gaps)
}

/// Sorted eigenvalues of the chosen fiber family at every grid point,
/// evaluated in parallel and collected in grid order.
pub fn sweep_model(
    graph: &FundamentalGraph,
    model: &PhaseModel,
    grid: &TorusGrid,
    weighting: Weighting,
    with_potential: bool,
) -> Result<Vec<Vec<f64>>> {
    if grid.dimension() != graph.dimension() {
        return Err(Error::BadGrid(format!(
            "grid dimension {} does not match graph dimension {}",
            grid.dimension(),
            graph.dimension()
        )));
    }
    (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let h = fiber::assemble(graph, model, &grid.point(i), weighting, with_potential);
            eigen::eigvalsh(&h.matrix)
        })
        .collect()
}

/// Band structure of H_α = Δ_α + Q (weighted when the graph carries weights).
pub fn sweep(graph: &FundamentalGraph, alpha: &OneForm, grid: &TorusGrid) -> Result<BandStructure> {
    let flux_data = FluxData::new(graph, alpha);
    sweep_flux(graph, &flux_data, grid, true)
}

/// Band structure of Δ_α alone (potential stripped).
pub fn sweep_laplacian(graph: &FundamentalGraph, alpha: &OneForm, grid: &TorusGrid) -> Result<BandStructure> {
    let flux_data = FluxData::new(graph, alpha);
    sweep_flux(graph, &flux_data, grid, false)
}

pub fn sweep_flux(
    graph: &FundamentalGraph,
    flux_data: &FluxData,
    grid: &TorusGrid,
    with_potential: bool,
) -> Result<BandStructure> {
    let (model, theta0) = reduced_model(graph, flux_data)?;
    let values = sweep_model(graph, &model, grid, Weighting::Weighted, with_potential)?;
    let mut bs = BandStructure::from_values(grid.clone(), values, DEFAULT_FLAT_TOL);
    bs.theta0 = theta0;
    Ok(bs)
}

/// The phase model of α̃ with tree-normalized indices, and θ0.
pub fn reduced_model(graph: &FundamentalGraph, flux_data: &FluxData) -> Result<(PhaseModel, Vec<f64>)> {
    let reduction = topology::minimal_reduction(flux_data, graph.dimension())?;
    Ok((PhaseModel::with_form(flux_data, reduction.alpha_tilde), reduction.theta0))
}

/// Eigenvalues sampled along a piecewise-linear path, in the same reduced
/// coordinates as the sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BandPath {
    pub arclength: Vec<f64>,
    pub thetas: Vec<Vec<f64>>,
    pub values: Vec<Vec<f64>>,
}

/// `samples` points per segment (the segment end is the next segment's start).
pub fn band_path(
    graph: &FundamentalGraph,
    alpha: &OneForm,
    waypoints: &[Vec<f64>],
    samples: usize,
) -> Result<BandPath> {
    if waypoints.is_empty() {
        return Err(Error::BadGrid("band path needs at least one waypoint".into()));
    }
    if let Some(w) = waypoints.iter().find(|w| w.len() != graph.dimension()) {
        return Err(Error::BadGrid(format!("waypoint {w:?} has the wrong dimension")));
    }
    let samples = samples.max(1);
    let mut thetas = vec![waypoints[0].clone()];
    let mut arclength = vec![0.0];
    for pair in waypoints.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let length = a.iter().zip(b).map(|(x, y)| (y - x).powi(2)).sum::<f64>().sqrt();
        let start = *arclength.last().unwrap();
        for s in 1..=samples {
            let t = s as f64 / samples as f64;
            thetas.push(a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect());
            arclength.push(start + t * length);
        }
    }
    let flux_data = FluxData::new(graph, alpha);
    let (model, _) = reduced_model(graph, &flux_data)?;
    let values = thetas
        .par_iter()
        .map(|theta| eigen::eigvalsh(&fiber::assemble(graph, &model, theta, Weighting::Weighted, true).matrix))
        .collect::<Result<Vec<_>>>()?;
    Ok(BandPath {
        arclength,
        thetas,
        values,
    })
}

/// Polishes grid band edges with a per-coordinate quadratic fit around each
/// grid extremum; an edge only moves outward (a refined edge is a real
/// eigenvalue, so the band can only grow).
pub fn refine_band_edges(
    graph: &FundamentalGraph,
    alpha: &OneForm,
    band_structure: &BandStructure,
) -> Result<Vec<Band>> {
    let flux_data = FluxData::new(graph, alpha);
    let (model, _) = reduced_model(graph, &flux_data)?;
    let grid = &band_structure.grid;
    let h = 2.0 * PI / (grid.points_per_dim() - 1) as f64;
    let eval = |theta: &[f64], n: usize| -> Result<f64> {
        let m = fiber::assemble(graph, &model, theta, Weighting::Weighted, true);
        Ok(eigen::eigvalsh(&m.matrix)?[n])
    };
    let mut out = band_structure.bands.clone();
    for (n, band) in out.iter_mut().enumerate() {
        for sign in [-1.0, 1.0] {
            // sign −1: minimum, +1: maximum
            let (best, _) = band_structure
                .branch(n)
                .enumerate()
                .max_by(|a, b| (sign * a.1).total_cmp(&(sign * b.1)))
                .expect("non-empty grid");
            let mut theta = grid.point(best);
            let mut value = band_structure.values[best][n];
            for j in 0..grid.dimension() {
                let mut plus = theta.clone();
                plus[j] += h;
                let mut minus = theta.clone();
                minus[j] -= h;
                let (fp, fm) = (eval(&plus, n)?, eval(&minus, n)?);
                let curvature = fp - 2.0 * value + fm;
                if curvature.abs() < 1e-300 {
                    continue;
                }
                let offset = (0.5 * h * (fm - fp) / curvature).clamp(-h, h);
                let mut candidate = theta.clone();
                candidate[j] += offset;
                let fc = eval(&candidate, n)?;
                if sign * fc > sign * value {
                    value = fc;
                    theta = candidate;
                }
            }
            if sign < 0.0 {
                band.lower = band.lower.min(value);
            } else {
                band.upper = band.upper.max(value);
            }
        }
    }
    Ok(out)
}
