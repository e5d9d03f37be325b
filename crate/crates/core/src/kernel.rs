// SPDX-License-Identifier: Apache-2.0

use ndarray::Array2;

use crate::chain::AtomChain;
use crate::linalg::C64;
use crate::params::PhysicalParams;

fn separation(a: usize, b: usize) -> f64 {
    a.abs_diff(b) as f64
}

/// Guided-mode propagation phases `exp(i k0 |m_j − m_k|)`.
pub fn waveguide_kernel(chain: &AtomChain, params: &PhysicalParams) -> Array2<C64> {
    let m = chain.positions();
    let n = m.len();
    Array2::from_shape_fn((n, n), |(j, k)| {
        C64::from_polar(1.0, params.k0_d * separation(m[j], m[k]))
    })
}

/// Band-gap exchange kernel `cos(kb m_j) cos(kb m_k) exp(−|m_j − m_k| / L)`,
/// diagonal included.
pub fn bandgap_kernel(chain: &AtomChain, params: &PhysicalParams) -> Array2<f64> {
    let m = chain.positions();
    let n = m.len();
    let c: Vec<f64> = m.iter().map(|&mj| (params.kb_d * mj as f64).cos()).collect();
    let mut k = Array2::zeros((n, n));
    for j in 0..n {
        for l in j..n {
            let v = c[j] * c[l] * (-separation(m[j], m[l]) / params.int_length).exp();
            k[[j, l]] = v;
            k[[l, j]] = v;
        }
    }
    k
}
