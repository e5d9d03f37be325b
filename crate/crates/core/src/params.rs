// SPDX-License-Identifier: Apache-2.0

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Largest drive amplitude accepted by [`PhysicalParams::validate`]; the
/// solvers are first order in the drive and stop being meaningful beyond it.
pub const MAX_WEAK_DRIVE: f64 = 0.01;

/// Rates, couplings and geometry of the chain. Frequencies are in units of
/// the free-space decay rate, lengths in lattice constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicalParams {
    /// Emission rate into the guided mode.
    pub gamma_1d: f64,
    /// Free-space decay rate. This is the frequency unit and normally 1.
    pub gamma_e_prime: f64,
    /// Band-gap exchange strength.
    pub j_strength: f64,
    /// Decay length of the band-gap interaction.
    pub int_length: f64,
    /// Control Rabi frequency.
    pub omega_c: f64,
    /// Control detuning.
    pub delta_c: f64,
    /// Probe wavevector times lattice constant.
    pub k0_d: f64,
    /// Band-edge wavevector times lattice constant.
    pub kb_d: f64,
    /// Ground/metastable dephasing rate (density-matrix path only).
    pub gamma_d: f64,
    /// Loss of the band-gap mode into the guided continuum.
    pub gamma_em: f64,
    /// Standard deviation of the per-atom metastable-level shift.
    pub sigma_ih: f64,
    /// Dimensionless probe amplitude.
    pub drive_amp: f64,
    /// Number of trap sites.
    pub n_sites: usize,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self {
            gamma_1d: 0.3,
            gamma_e_prime: 1.0,
            j_strength: 4.0,
            int_length: 100.0,
            omega_c: 2.0,
            delta_c: 0.0,
            k0_d: PI / 2.0,
            kb_d: PI,
            gamma_d: 0.0,
            gamma_em: 0.0,
            sigma_ih: 0.0,
            drive_amp: 1.5e-5,
            n_sites: 200,
        }
    }
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        let rates = [
            ("gamma_1d", self.gamma_1d),
            ("gamma_e_prime", self.gamma_e_prime),
            ("gamma_d", self.gamma_d),
            ("gamma_em", self.gamma_em),
            ("sigma_ih", self.sigma_ih),
            ("drive_amp", self.drive_amp),
        ];
        for (name, v) in rates {
            if !(v.is_finite() && v >= 0.0) {
                return Err(invalid(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        for (name, v) in [
            ("j_strength", self.j_strength),
            ("omega_c", self.omega_c),
            ("delta_c", self.delta_c),
            ("kb_d", self.kb_d),
        ] {
            if !v.is_finite() {
                return Err(invalid(format!("{name} must be finite, got {v}")));
            }
        }
        if !(self.k0_d > 0.0 && self.k0_d < TAU) {
            return Err(invalid(format!("k0_d must lie in (0, 2π), got {}", self.k0_d)));
        }
        if !(self.int_length > 0.0) {
            return Err(invalid(format!("int_length must be > 0, got {}", self.int_length)));
        }
        if self.drive_amp > MAX_WEAK_DRIVE {
            return Err(invalid(format!(
                "drive_amp {} exceeds the weak-drive limit {MAX_WEAK_DRIVE}",
                self.drive_amp
            )));
        }
        if self.n_sites == 0 {
            return Err(invalid("n_sites must be >= 1"));
        }
        Ok(())
    }

    /// Total single-atom linewidth into free space and the guide.
    pub fn gamma_total(&self) -> f64 {
        self.gamma_1d + self.gamma_e_prime
    }
}
