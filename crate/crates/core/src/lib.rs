// SPDX-License-Identifier: Apache-2.0

//! Light scattering by Λ-type atoms randomly trapped along a photonic-crystal
//! waveguide, with long-range exchange mediated by a band-gap mode.
//!
//! Frequencies are in units of the free-space decay rate Γ_e′ and lengths in
//! lattice constants. The probe is weak: linear spectra come from the
//! one-excitation manifold, photon correlations from the two-excitation one.

pub mod analysis;
pub mod basis;
pub mod chain;
pub mod coherent;
pub mod ensemble;
pub mod error;
pub mod experiment;
pub mod kernel;
pub mod lindblad;
pub mod linalg;
pub mod observables;
pub mod params;

pub use basis::ExcitationBasis;
pub use chain::AtomChain;
pub use error::{Error, Result};
pub use params::PhysicalParams;
