// SPDX-License-Identifier: Apache-2.0

//! Master equation on the ≤1-excitation manifold.
//!
//! The density operator is vectorized row-major: `ρ[A, B]` sits at
//! `A·D + B`. Besides the full superoperator solve there is a weak-drive
//! path ([`WeakDriveLindblad`]) that exploits the manifold structure for
//! detuning sweeps.

use ndarray::Array2;

use crate::basis::{ExcitationBasis, Level};
use crate::chain::AtomChain;
use crate::coherent::MAX_CONDITION;
use crate::error::{invalid, Error, Result};
use crate::kernel::{bandgap_kernel, waveguide_kernel};
use crate::linalg::{
    cholesky_shifted, condition_estimate, submatrix, Factorization, Hessenberg, Lu,
    RankRevealingLu, C64, I, ONE, ZERO,
};
use crate::observables::FieldAmplitudes;
use crate::params::PhysicalParams;

/// Relative pivot size below which the superoperator is treated as rank
/// deficient.
pub const NULL_PIVOT_TOL: f64 = 1e-12;

/// Diagonal shift used by the positivity check.
pub const PSD_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct Liouvillian {
    /// Hilbert-space dimension `D = 1 + 2n`.
    pub dim: usize,
    pub delta: f64,
    /// `D² × D²` superoperator.
    pub matrix: Array2<C64>,
}

impl Liouvillian {
    /// Index of the dyad `|A⟩⟨B|` in the vectorized density operator.
    pub fn pair(&self, a: usize, b: usize) -> usize {
        a * self.dim + b
    }

    pub fn apply(&self, rho: &Array2<C64>) -> Array2<C64> {
        let d = self.dim;
        let v: Vec<C64> = rho.iter().copied().collect();
        let out = crate::linalg::matvec(&self.matrix, &v);
        Array2::from_shape_vec((d, d), out).expect("square density operator")
    }
}

/// Effective (non-Hermitian) Hamiltonian, jump kernel and dephasing weights
/// of the master equation.
struct MasterTerms {
    h_eff: Array2<C64>,
    /// Rate matrix `Γ_jk` of `σ_ge^k ρ σ_eg^j`.
    jump: Array2<f64>,
    /// Dephasing projector eigenvalues: for atom j, `[p_gg, p_ss]` per state.
    deph: Vec<Vec<[f64; 2]>>,
}

fn master_terms(chain: &AtomChain, params: &PhysicalParams, delta: f64) -> MasterTerms {
    let n = chain.len();
    let d = 1 + 2 * n;
    let m = chain.positions();
    let kwg = waveguide_kernel(chain, params);
    let kbg = bandgap_kernel(chain, params);
    let e = |j: usize| 1 + 2 * j;
    let s = |j: usize| 2 + 2 * j;

    let mut jump = Array2::<f64>::zeros((n, n));
    for j in 0..n {
        for k in 0..n {
            jump[[j, k]] = params.gamma_1d * kwg[[j, k]].re + params.gamma_em * kbg[[j, k]];
        }
        jump[[j, j]] += params.gamma_e_prime;
    }

    let mut h = Array2::<C64>::zeros((d, d));
    for j in 0..n {
        h[[e(j), e(j)]] = C64::new(-delta + params.j_strength * kbg[[j, j]], 0.0);
        h[[s(j), s(j)]] = C64::new(-(delta - params.delta_c - chain.ih_shifts()[j]), 0.0);
        h[[e(j), s(j)]] = C64::new(-params.omega_c, 0.0);
        h[[s(j), e(j)]] = C64::new(-params.omega_c, 0.0);
        for k in 0..n {
            if k != j {
                let sep = m[j].abs_diff(m[k]) as f64;
                let exch = params.j_strength * kbg[[j, k]] + params.gamma_1d / 2.0 * (params.k0_d * sep).sin();
                h[[e(j), e(k)]] = C64::new(exch, 0.0);
            }
        }
        let drive = C64::from_polar(params.drive_amp, params.k0_d * m[j] as f64);
        h[[e(j), 0]] = drive;
        h[[0, e(j)]] = drive.conj();
    }
    // Anti-Hermitian part −(i/2) Σ_jk Γ_jk σ_eg^j σ_ge^k.
    for j in 0..n {
        for k in 0..n {
            h[[e(j), e(k)]] += C64::new(0.0, -0.5 * jump[[j, k]]);
        }
    }

    let basis = ExcitationBasis::enumerate(n, 1);
    let deph = (0..n)
        .map(|j| {
            (0..d)
                .map(|a| match basis.lookup(a).first() {
                    Some(&(atom, lvl)) if atom == j => {
                        if lvl == Level::S {
                            [0.0, 1.0]
                        } else {
                            [0.0, 0.0]
                        }
                    }
                    _ => [1.0, 0.0],
                })
                .collect()
        })
        .collect();
    MasterTerms {
        h_eff: h,
        jump,
        deph,
    }
}

pub fn build_liouvillian(
    chain: &AtomChain,
    params: &PhysicalParams,
    delta: f64,
    basis: &ExcitationBasis,
) -> Result<Liouvillian> {
    if basis.max_exc() > 1 || basis.n_atoms() != chain.len() {
        return Err(invalid("the master equation needs the one-excitation basis of the chain"));
    }
    let n = chain.len();
    let d = 1 + 2 * n;
    let terms = master_terms(chain, params, delta);
    let h = &terms.h_eff;
    let mut l = Array2::<C64>::zeros((d * d, d * d));
    for a in 0..d {
        for b in 0..d {
            let row = a * d + b;
            for c in 0..d {
                if h[[a, c]] != ZERO {
                    l[[row, c * d + b]] += -I * h[[a, c]];
                }
                if h[[b, c]] != ZERO {
                    l[[row, a * d + c]] += I * h[[b, c]].conj();
                }
            }
            let mut deph = 0.0;
            for per_atom in &terms.deph {
                for p in 0..2 {
                    deph += (per_atom[a][p] - per_atom[b][p]).powi(2);
                }
            }
            l[[row, row]] += -0.5 * params.gamma_d * deph;
        }
    }
    for j in 0..n {
        for k in 0..n {
            let rate = terms.jump[[j, k]];
            if rate != 0.0 {
                l[[0, (1 + 2 * k) * d + (1 + 2 * j)]] += rate;
            }
        }
    }
    Ok(Liouvillian {
        dim: d,
        delta,
        matrix: l,
    })
}

/// Unique steady state of `liouvillian`, trace one, Hermitian and positive
/// semidefinite within [`PSD_TOL`].
pub fn steady_density(liouvillian: &Liouvillian) -> Result<Array2<C64>> {
    let d = liouvillian.dim;
    let nn = d * d;
    let rank = RankRevealingLu::factor(&liouvillian.matrix, NULL_PIVOT_TOL);
    if rank.nullity() > 1 {
        return Err(Error::DegenerateSteadyState {
            null_dim: rank.nullity(),
        });
    }
    let mut system = liouvillian.matrix.clone();
    for c in 0..nn {
        system[[0, c]] = ZERO;
    }
    for a in 0..d {
        system[[0, a * d + a]] = ONE;
    }
    let lu = Lu::factor(&system);
    let cond = condition_estimate(&lu);
    let vec = if cond <= MAX_CONDITION {
        let mut rhs = vec![ZERO; nn];
        rhs[0] = ONE;
        lu.solve(&rhs)
    } else {
        rank.null_vector().ok_or(Error::IllConditioned {
            delta: liouvillian.delta,
            condition: cond,
        })?
    };
    let mut rho = Array2::from_shape_vec((d, d), vec).expect("square density operator");
    let trace: C64 = (0..d).map(|a| rho[[a, a]]).sum();
    if trace.norm() == 0.0 || !trace.is_finite() {
        return Err(Error::IllConditioned {
            delta: liouvillian.delta,
            condition: f64::INFINITY,
        });
    }
    rho.mapv_inplace(|z| z / trace);
    let herm = Array2::from_shape_fn((d, d), |(a, b)| (rho[[a, b]] + rho[[b, a]].conj()) * 0.5);
    cholesky_shifted(&herm, PSD_TOL).map_err(|pivot| Error::NotPositive { pivot })?;
    Ok(herm)
}

/// Weak-drive steady state of the master equation across a detuning grid.
///
/// To leading order in the drive, `ρ_gg = 1`, the optical coherences
/// `x = ρ[·, g]` solve `(L_xx(0) + iΔ) x = −L_xg`, and the one-excitation
/// block solves a Δ-independent system sourced by `x`. The coherence system
/// is a diagonal shift of a fixed matrix and is reduced to Hessenberg form
/// once; the population block only enters the outputs through two linear
/// functionals, which are pulled back through its transpose once.
#[derive(Debug, Clone)]
pub struct WeakDriveLindblad {
    n: usize,
    hess: Hessenberg,
    source: Vec<C64>,
    t_coeffs: Vec<C64>,
    r_coeffs: Vec<C64>,
    // Pullbacks: incoherent intensity = −(u·x + v·x̄).
    t_pull: (Vec<C64>, Vec<C64>),
    r_pull: (Vec<C64>, Vec<C64>),
}

impl WeakDriveLindblad {
    pub fn new(chain: &AtomChain, params: &PhysicalParams) -> Result<Self> {
        let n = chain.len();
        let d = 1 + 2 * n;
        let basis = ExcitationBasis::enumerate(n, 1);
        let l = build_liouvillian(chain, params, 0.0, &basis)?;
        let ones: Vec<usize> = (1..d).collect();
        let coh: Vec<usize> = ones.iter().map(|&a| a * d).collect();
        let coh_conj: Vec<usize> = ones.to_vec();
        let pop: Vec<usize> = ones
            .iter()
            .flat_map(|&a| ones.iter().map(move |&b| a * d + b))
            .collect();

        let a_coh = submatrix(&l.matrix, &coh, &coh);
        let source: Vec<C64> = coh.iter().map(|&r| -l.matrix[[r, 0]]).collect();
        let hess = Hessenberg::reduce(&a_coh);

        let l_pop = submatrix(&l.matrix, &pop, &pop);
        let from_x = submatrix(&l.matrix, &pop, &coh);
        let from_xc = submatrix(&l.matrix, &pop, &coh_conj);
        let lu = Lu::factor(&l_pop);
        let cond = condition_estimate(&lu);
        if !(cond <= MAX_CONDITION) {
            return Err(Error::IllConditioned {
                delta: 0.0,
                condition: cond,
            });
        }

        let tf = crate::observables::FieldOperator::transmitted(chain, params)?;
        let rf = crate::observables::FieldOperator::reflected(chain, params)?;
        let pull = |coeffs: &[C64]| -> (Vec<C64>, Vec<C64>) {
            // w over the population block: weight of ρ[e_k, e_j] is c_j* c_k.
            let mut w = vec![ZERO; pop.len()];
            for j in 0..n {
                for k in 0..n {
                    let (a, b) = (1 + 2 * k, 1 + 2 * j);
                    w[(a - 1) * (d - 1) + (b - 1)] = coeffs[j].conj() * coeffs[k];
                }
            }
            let z = lu.solve_transpose(&w);
            let u = (0..coh.len())
                .map(|c| (0..pop.len()).map(|r| z[r] * from_x[[r, c]]).sum())
                .collect();
            let v = (0..coh.len())
                .map(|c| (0..pop.len()).map(|r| z[r] * from_xc[[r, c]]).sum())
                .collect();
            (u, v)
        };
        let t_pull = pull(&tf.coeffs);
        let r_pull = pull(&rf.coeffs);
        Ok(Self {
            n,
            hess,
            source,
            t_coeffs: tf.coeffs,
            r_coeffs: rf.coeffs,
            t_pull,
            r_pull,
        })
    }

    pub fn amplitudes(&self, delta: f64) -> Result<FieldAmplitudes> {
        if self.n == 0 {
            return Ok(FieldAmplitudes {
                t_amp: ONE,
                r_amp: ZERO,
                t: 1.0,
                r: 0.0,
            });
        }
        // (A + iΔ) x = source  ⇔  (A − σ) x = source with σ = −iΔ.
        let (x, cond) = self.hess.solve_shifted(C64::new(0.0, -delta), &self.source);
        if !(cond <= MAX_CONDITION) {
            return Err(Error::IllConditioned {
                delta,
                condition: cond,
            });
        }
        let coherent = |coeffs: &[C64]| -> C64 { (0..self.n).map(|j| coeffs[j] * x[2 * j]).sum() };
        let incoherent = |(u, v): &(Vec<C64>, Vec<C64>)| -> f64 {
            let s: C64 = u.iter().zip(&x).map(|(a, b)| a * b).sum::<C64>()
                + v.iter().zip(&x).map(|(a, b)| a * b.conj()).sum::<C64>();
            -s.re
        };
        let t_coh = coherent(&self.t_coeffs);
        let r_coh = coherent(&self.r_coeffs);
        Ok(FieldAmplitudes {
            t_amp: ONE + t_coh,
            r_amp: r_coh,
            t: 1.0 + 2.0 * t_coh.re + incoherent(&self.t_pull),
            r: incoherent(&self.r_pull),
        })
    }
}
