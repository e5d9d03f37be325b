// SPDX-License-Identifier: Apache-2.0

//! Truncated many-atom basis: every atom in g, e or s, with at most `m`
//! atoms out of the ground state.

use std::collections::HashMap;
use std::ops::Range;

use crate::linalg::{C64, ZERO};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Level {
    E,
    S,
}

/// Non-ground atoms of a basis state, sorted by atom index.
pub type Config = Vec<(usize, Level)>;

#[derive(Debug, Clone)]
pub struct ExcitationBasis {
    n_atoms: usize,
    max_exc: usize,
    states: Vec<Config>,
    index: HashMap<Config, usize>,
    offsets: Vec<usize>,
    // For each state: (atom, index after σ_ge on that atom) for atoms in e.
    lowering: Vec<Vec<(usize, usize)>>,
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// `Σ_{q ≤ m} C(n, q) 2^q`.
pub fn basis_dimension(n_atoms: usize, max_exc: usize) -> usize {
    (0..=max_exc.min(n_atoms)).map(|q| binomial(n_atoms, q) << q).sum()
}

fn combinations(n: usize, q: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if cur.len() == q {
        out.push(cur.clone());
        return;
    }
    for a in start..n {
        cur.push(a);
        combinations(n, q, a + 1, cur, out);
        cur.pop();
    }
}

impl ExcitationBasis {
    /// Canonical ordering: by excitation number, then atom subsets in
    /// lexicographic order, then level patterns with e before s. A
    /// truncation above `n_atoms` is clamped.
    pub fn enumerate(n_atoms: usize, max_exc: usize) -> Self {
        let max_exc = max_exc.min(n_atoms);
        let mut states: Vec<Config> = Vec::with_capacity(basis_dimension(n_atoms, max_exc));
        let mut offsets = Vec::with_capacity(max_exc + 2);
        for q in 0..=max_exc {
            offsets.push(states.len());
            let mut subsets = Vec::new();
            combinations(n_atoms, q, 0, &mut Vec::new(), &mut subsets);
            for atoms in subsets {
                for pattern in 0..(1usize << q) {
                    let config = atoms
                        .iter()
                        .enumerate()
                        .map(|(slot, &a)| {
                            let bit = (pattern >> (q - 1 - slot)) & 1;
                            (a, if bit == 0 { Level::E } else { Level::S })
                        })
                        .collect();
                    states.push(config);
                }
            }
        }
        offsets.push(states.len());
        let index: HashMap<Config, usize> =
            states.iter().enumerate().map(|(i, c)| (c.clone(), i)).collect();
        let lowering = states
            .iter()
            .map(|c| {
                c.iter()
                    .enumerate()
                    .filter(|(_, (_, lvl))| *lvl == Level::E)
                    .map(|(slot, &(atom, _))| {
                        let mut lower = c.clone();
                        lower.remove(slot);
                        (atom, index[&lower])
                    })
                    .collect()
            })
            .collect();
        Self {
            n_atoms,
            max_exc,
            states,
            index,
            offsets,
            lowering,
        }
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn max_exc(&self) -> usize {
        self.max_exc
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn lookup(&self, idx: usize) -> &[(usize, Level)] {
        &self.states[idx]
    }

    pub fn index_of(&self, config: &[(usize, Level)]) -> Option<usize> {
        self.index.get(config).copied()
    }

    /// Indices of the `q`-excitation manifold. Empty above the truncation.
    pub fn manifold(&self, q: usize) -> Range<usize> {
        if q > self.max_exc {
            let end = self.dim();
            return end..end;
        }
        self.offsets[q]..self.offsets[q + 1]
    }

    pub fn excitations(&self, idx: usize) -> usize {
        self.states[idx].len()
    }

    /// Index of `|e_j⟩` (single excitation on atom j).
    pub fn e(&self, j: usize) -> usize {
        1 + 2 * j
    }

    /// Index of `|s_j⟩`.
    pub fn s(&self, j: usize) -> usize {
        2 + 2 * j
    }

    /// `(atom, target)` pairs reached by σ_ge on each excited atom of `idx`.
    pub fn lowering_targets(&self, idx: usize) -> &[(usize, usize)] {
        &self.lowering[idx]
    }

    /// `Σ_j coeffs[j] σ_ge^j |v⟩`.
    pub fn apply_lowering(&self, coeffs: &[C64], v: &[C64]) -> Vec<C64> {
        assert_eq!(coeffs.len(), self.n_atoms);
        assert_eq!(v.len(), self.dim());
        let mut out = vec![ZERO; self.dim()];
        for (idx, &amp) in v.iter().enumerate() {
            if amp == ZERO {
                continue;
            }
            for &(atom, target) in &self.lowering[idx] {
                out[target] += coeffs[atom] * amp;
            }
        }
        out
    }
}
