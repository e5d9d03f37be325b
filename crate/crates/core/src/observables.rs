// SPDX-License-Identifier: Apache-2.0

//! Output fields from the solver states: transmission, reflection and the
//! intensity correlation of the reflected light.
//!
//! Field operators are normalized by the drive, so the transmitted field is
//! `1 + Σ_j t_j σ_ge^j` and the reflected field `Σ_j r_j σ_ge^j` with
//! `t_j = −i Γ_1D/(2ε) e^{−i k0 m_j}` and `r_j = −i Γ_1D/(2ε) e^{+i k0 m_j}`.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::basis::ExcitationBasis;
use crate::chain::AtomChain;
use crate::coherent::{evolve, HamiltonianBlocks, Propagator, SteadyAmplitudes};
use crate::error::{invalid, Error, Result};
use crate::linalg::{C64, ONE, ZERO};
use crate::params::PhysicalParams;

/// Smallest reflected intensity for which g² is evaluated.
pub const MIN_REFLECTED_INTENSITY: f64 = 1e-30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldAmplitudes {
    pub t_amp: C64,
    pub r_amp: C64,
    #[serde(rename = "T")]
    pub t: f64,
    #[serde(rename = "R")]
    pub r: f64,
}

/// Output port.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Field {
    #[default]
    Reflected,
    Transmitted,
}

/// Drive-normalized output operator `identity·1 + Σ_j coeffs[j] σ_ge^j`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldOperator {
    pub identity: C64,
    pub coeffs: Vec<C64>,
}

fn check_drive(params: &PhysicalParams) -> Result<f64> {
    if params.drive_amp > 0.0 {
        Ok(params.drive_amp)
    } else {
        Err(invalid("drive_amp = 0 leaves the output normalization undefined"))
    }
}

fn output_coeffs(chain: &AtomChain, params: &PhysicalParams, sign: f64) -> Result<Vec<C64>> {
    let eps = check_drive(params)?;
    let scale = C64::new(0.0, -params.gamma_1d / (2.0 * eps));
    Ok(chain
        .positions()
        .iter()
        .map(|&m| scale * C64::from_polar(1.0, sign * params.k0_d * m as f64))
        .collect())
}

impl FieldOperator {
    pub fn new(field: Field, chain: &AtomChain, params: &PhysicalParams) -> Result<Self> {
        match field {
            Field::Reflected => Self::reflected(chain, params),
            Field::Transmitted => Self::transmitted(chain, params),
        }
    }

    pub fn transmitted(chain: &AtomChain, params: &PhysicalParams) -> Result<Self> {
        Ok(Self {
            identity: ONE,
            coeffs: output_coeffs(chain, params, -1.0)?,
        })
    }

    pub fn reflected(chain: &AtomChain, params: &PhysicalParams) -> Result<Self> {
        Ok(Self {
            identity: ZERO,
            coeffs: output_coeffs(chain, params, 1.0)?,
        })
    }

    pub fn apply(&self, basis: &ExcitationBasis, v: &[C64]) -> Vec<C64> {
        let mut out = basis.apply_lowering(&self.coeffs, v);
        if self.identity != ZERO {
            for (o, x) in out.iter_mut().zip(v) {
                *o += self.identity * x;
            }
        }
        out
    }

    /// `⟨g| a |v⟩`, with `|v⟩` on the full basis.
    pub fn ground_component(&self, v: &[C64]) -> C64 {
        let lowered: C64 = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| c * v[1 + 2 * j])
            .sum();
        self.identity * v[0] + lowered
    }
}

/// Amplitudes from the one-excitation vector (`c1[2j]` is `e_j`, `c0 = 1`).
pub fn transmission_c1(c1: &[C64], chain: &AtomChain, params: &PhysicalParams) -> Result<FieldAmplitudes> {
    if c1.len() != 2 * chain.len() {
        return Err(invalid("amplitude vector does not match the chain"));
    }
    let tc = output_coeffs(chain, params, -1.0)?;
    let rc = output_coeffs(chain, params, 1.0)?;
    let mut t_amp = ONE;
    let mut r_amp = ZERO;
    for j in 0..chain.len() {
        t_amp += tc[j] * c1[2 * j];
        r_amp += rc[j] * c1[2 * j];
    }
    Ok(FieldAmplitudes {
        t_amp,
        r_amp,
        t: t_amp.norm_sqr(),
        r: r_amp.norm_sqr(),
    })
}

pub fn transmission(amps: &SteadyAmplitudes, chain: &AtomChain, params: &PhysicalParams) -> Result<FieldAmplitudes> {
    let c1: Vec<C64> = amps.c1.iter().map(|c| c / amps.c0).collect();
    transmission_c1(&c1, chain, params)
}

/// Intensities `tr(ρ a† a)` on the ≤1-excitation manifold, incoherent part
/// `Σ_jk a_j* a_k ⟨σ_eg^j σ_ge^k⟩` included. The amplitudes are the coherent
/// parts `tr(ρ a)`.
pub fn transmission_from_density(
    rho: &Array2<C64>,
    chain: &AtomChain,
    params: &PhysicalParams,
) -> Result<FieldAmplitudes> {
    let n = chain.len();
    if rho.nrows() != 1 + 2 * n || rho.ncols() != 1 + 2 * n {
        return Err(invalid("density operator does not match the chain"));
    }
    let tc = output_coeffs(chain, params, -1.0)?;
    let rc = output_coeffs(chain, params, 1.0)?;
    let e = |j: usize| 1 + 2 * j;
    let mut t_coh = ZERO;
    let mut r_coh = ZERO;
    for j in 0..n {
        t_coh += tc[j] * rho[[e(j), 0]];
        r_coh += rc[j] * rho[[e(j), 0]];
    }
    let mut t_inc = ZERO;
    let mut r_inc = ZERO;
    for j in 0..n {
        for k in 0..n {
            let corr = rho[[e(k), e(j)]];
            t_inc += tc[j].conj() * tc[k] * corr;
            r_inc += rc[j].conj() * rc[k] * corr;
        }
    }
    Ok(FieldAmplitudes {
        t_amp: ONE + t_coh,
        r_amp: r_coh,
        t: rho[[0, 0]].re + 2.0 * t_coh.re + t_inc.re,
        r: r_inc.re,
    })
}

fn uniform_step(tau: &[f64]) -> Option<f64> {
    if tau.len() < 2 {
        return None;
    }
    let dt = tau[1] - tau[0];
    let uniform = dt > 0.0
        && tau
            .windows(2)
            .all(|w| ((w[1] - w[0]) - dt).abs() <= 1e-9 * dt);
    uniform.then_some(dt)
}

/// Unnormalized correlation of one chain: coincidence rate
/// `|⟨g| a e^{−iHτ} a |ψ⟩|²` and intensity `|⟨g| a |ψ⟩|²`, both divided by
/// the matching powers of the drive.
#[derive(Debug, Clone, PartialEq)]
pub struct Correlation {
    pub coincidence: Vec<f64>,
    pub intensity: f64,
}

impl Correlation {
    /// `g²(τ)`; fails when the intensity is too weak to normalize by.
    pub fn normalized(&self, delta: f64) -> Result<Vec<f64>> {
        let den = self.intensity;
        if !(den >= MIN_REFLECTED_INTENSITY) {
            return Err(Error::ReflectionTooWeak { delta, intensity: den });
        }
        Ok(self.coincidence.iter().map(|c| c / (den * den)).collect())
    }
}

/// Numerator and denominator of g²(τ) at leading order in the drive.
///
/// `amps` must come from a two-excitation solve on `blocks.basis` (or a
/// single atom, where the two-excitation manifold is empty).
pub fn correlation(
    blocks: &HamiltonianBlocks,
    amps: &SteadyAmplitudes,
    field: &FieldOperator,
    tau: &[f64],
) -> Result<Correlation> {
    let basis = &blocks.basis;
    if basis.max_exc() < 2.min(basis.n_atoms()) || (basis.n_atoms() >= 2 && amps.c2.is_none()) {
        return Err(invalid("g2 needs the two-excitation amplitudes"));
    }
    if tau.first().is_some_and(|&t| t < 0.0) || tau.windows(2).any(|w| w[1] < w[0]) {
        return Err(invalid("tau grid must be non-negative and non-decreasing"));
    }
    let psi = amps.state(basis);
    let a_psi = field.apply(basis, &psi);
    let intensity = a_psi[0].norm_sqr();
    let value = |phi: &[C64]| field.ground_component(phi).norm_sqr();
    let mut coincidence = Vec::with_capacity(tau.len());
    if intensity > 0.0 {
        match uniform_step(tau) {
            Some(dt) => {
                let prop = Propagator::new(blocks, dt)?;
                let mut phi = evolve(blocks, &a_psi, tau[0])?;
                coincidence.push(value(&phi));
                for _ in 1..tau.len() {
                    phi = prop.apply(&phi)?;
                    coincidence.push(value(&phi));
                }
            }
            None => {
                for &t in tau {
                    coincidence.push(value(&evolve(blocks, &a_psi, t)?));
                }
            }
        }
    } else {
        // Nothing reaches the port; every coincidence vanishes with it.
        coincidence.resize(tau.len(), 0.0);
    }
    Ok(Correlation { coincidence, intensity })
}

/// `g²(τ) = |⟨g| a e^{−iHτ} a |ψ⟩|² / |⟨g| a |ψ⟩|⁴` at leading order in the drive.
pub fn g2(blocks: &HamiltonianBlocks, amps: &SteadyAmplitudes, field: &FieldOperator, tau: &[f64]) -> Result<Vec<f64>> {
    let c = correlation(blocks, amps, field, tau)?;
    c.normalized(blocks.delta)
}

/// Angular frequency of the strongest non-DC component of `g² − 1` on a
/// uniform grid, `2πk / (N dt)`. `None` for grids too short or non-uniform.
pub fn dominant_frequency(tau: &[f64], g2: &[f64]) -> Option<f64> {
    let dt = uniform_step(tau)?;
    let n = g2.len();
    if n != tau.len() || n < 4 {
        return None;
    }
    let mut best = (0usize, -1.0);
    for k in 1..=n / 2 {
        let w = -std::f64::consts::TAU * k as f64 / n as f64;
        let x: C64 = g2
            .iter()
            .enumerate()
            .map(|(i, v)| C64::from_polar(v - 1.0, w * i as f64))
            .sum();
        if x.norm() > best.1 {
            best = (k, x.norm());
        }
    }
    Some(std::f64::consts::TAU * best.0 as f64 / (n as f64 * dt))
}
