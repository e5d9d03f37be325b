// SPDX-License-Identifier: Apache-2.0

//! Mapping from photonic-crystal device parameters to the model couplings.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Device description. All frequencies are angular and share one unit of
/// the caller's choosing; results come back in that same unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandgapExperiment {
    /// Atom detuning into the gap, δ = ω_a − ω_b.
    pub detuning_band: f64,
    /// Band curvature α of the quadratic dispersion near the edge.
    pub curvature: f64,
    /// Band-edge frequency ω_b.
    pub band_edge_freq: f64,
    /// Single-unit-cell atom–photon coupling g_d.
    pub single_cell_coupling: f64,
    /// Photon loss rate κ of the guided mode.
    pub photon_loss: f64,
    /// Guided-mode emission rate Γ_1D.
    pub gamma_1d: f64,
    /// Free-space emission rate Γ_e′.
    pub gamma_e_prime: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MappedParams {
    /// Interaction range in lattice constants.
    pub int_length: f64,
    /// Collective cavity coupling ḡ_c = g_d √(d/L).
    pub cavity_coupling: f64,
    /// Exchange strength 𝒥 = ḡ_c² / 2δ.
    pub j_strength: f64,
    /// Γ_1D + Γ_e′ + κ (ḡ_c / 2δ)².
    pub gamma_total: f64,
    /// 𝒥/Γ_tot at the optimal detuning (ḡ_c held fixed).
    pub optimal_ratio: f64,
    /// Detuning δ* with δ*² = κ ḡ_c² / 4Γ.
    pub optimal_detuning: f64,
}

/// Maps the device parameters to (𝒥, L, Γ_tot, optimum) for a lattice with
/// one trap per unit cell, so that k_b = π/d.
///
/// `lattice_const` only sets the length unit: L scales as d and ḡ_c depends
/// on d/L, so the returned dimensionless range is independent of it.
pub fn map_experimental_params(exp: &BandgapExperiment, lattice_const: f64) -> Result<MappedParams> {
    let positive = [
        ("detuning_band", exp.detuning_band),
        ("curvature", exp.curvature),
        ("band_edge_freq", exp.band_edge_freq),
        ("lattice_const", lattice_const),
    ];
    for (name, v) in positive {
        if !(v > 0.0 && v.is_finite()) {
            return Err(invalid(format!("{name} must be > 0, got {v}")));
        }
    }
    for (name, v) in [
        ("single_cell_coupling", exp.single_cell_coupling),
        ("photon_loss", exp.photon_loss),
        ("gamma_1d", exp.gamma_1d),
        ("gamma_e_prime", exp.gamma_e_prime),
    ] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(invalid(format!("{name} must be >= 0, got {v}")));
        }
    }

    let kb = PI / lattice_const;
    let length = (exp.curvature * exp.band_edge_freq / exp.detuning_band).sqrt() / kb;
    let int_length = length / lattice_const;
    let g_c = exp.single_cell_coupling * (lattice_const / length).sqrt();
    let delta = exp.detuning_band;
    let j_strength = g_c * g_c / (2.0 * delta);
    let gamma = exp.gamma_1d + exp.gamma_e_prime;
    let gamma_total = gamma + exp.photon_loss * (g_c / (2.0 * delta)).powi(2);

    let (optimal_ratio, optimal_detuning) = if exp.photon_loss > 0.0 && gamma > 0.0 {
        (
            (g_c * g_c / (exp.photon_loss * gamma)).sqrt() / 2.0,
            (exp.photon_loss * g_c * g_c / (4.0 * gamma)).sqrt(),
        )
    } else {
        (f64::INFINITY, 0.0)
    };

    Ok(MappedParams {
        int_length,
        cavity_coupling: g_c,
        j_strength,
        gamma_total,
        optimal_ratio,
        optimal_detuning,
    })
}
