//! Magnetic Schrödinger operators on ℤᵈ-periodic graphs.
//!
//! The crate works entirely on the finite fundamental graph: it builds the
//! Floquet fiber matrices H_α(θ) = Δ_α(θ) + Q, sweeps them over the Brillouin
//! torus to obtain bands, flat bands and gaps, and checks the quantitative
//! spectral estimates (band-length and gap bounds, magnetic perturbation
//! bounds, effective-form bounds) against the computed band structures.

pub mod bounds;
pub mod eigen;
pub mod error;
pub mod fiber;
pub mod graph;
pub mod io;
pub mod library;
pub mod linalg;
pub mod spectrum;
#[doc(hidden)]
pub mod testing;
pub mod topology;

pub use error::{Error, Result};
pub use graph::{Edge, FundamentalGraph, GraphBuilder, OneForm, OrientedEdge, Vertex};
pub use spectrum::{BandStructure, TorusGrid};
pub use topology::{CycleBasis, FluxData, MinimalFluxData};
