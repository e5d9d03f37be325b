// SPDX-License-Identifier: Apache-2.0

//! Disorder realizations and their samplers.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Atoms trapped on distinct lattice sites, with per-atom metastable shifts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomChain {
    positions: Vec<usize>,
    ih_shifts: Vec<f64>,
}

impl AtomChain {
    pub fn new(positions: Vec<usize>, ih_shifts: Vec<f64>, n_sites: usize) -> Result<Self> {
        if positions.len() != ih_shifts.len() {
            return Err(invalid(format!(
                "{} positions but {} shifts",
                positions.len(),
                ih_shifts.len()
            )));
        }
        if positions.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("positions must be strictly increasing"));
        }
        if let Some(&last) = positions.last() {
            if last >= n_sites {
                return Err(invalid(format!("site {last} outside lattice of {n_sites}")));
            }
        }
        if ih_shifts.iter().any(|s| !s.is_finite()) {
            return Err(invalid("shifts must be finite"));
        }
        Ok(Self {
            positions,
            ih_shifts,
        })
    }

    /// Chain without inhomogeneous shifts.
    pub fn unshifted(positions: Vec<usize>, n_sites: usize) -> Result<Self> {
        let n = positions.len();
        Self::new(positions, vec![0.0; n], n_sites)
    }

    pub fn empty() -> Self {
        Self {
            positions: Vec::new(),
            ih_shifts: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[usize] {
        &self.positions
    }

    pub fn ih_shifts(&self) -> &[f64] {
        &self.ih_shifts
    }

    /// Translates every atom by `by` sites. The caller is responsible for the
    /// lattice bound.
    pub fn translated(&self, by: usize) -> Self {
        Self {
            positions: self.positions.iter().map(|m| m + by).collect(),
            ih_shifts: self.ih_shifts.clone(),
        }
    }
}

/// Generator for sample `index` of the run seeded by `master_seed`.
///
/// Each sample gets its own ChaCha stream, so the draws for a sample do not
/// depend on which worker handles it or in what order.
pub fn substream(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

/// Uniformly random `n`-subset of the `n_sites` lattice sites, sorted.
pub fn sample_positions<R: Rng + ?Sized>(n: usize, n_sites: usize, rng: &mut R) -> Result<Vec<usize>> {
    if n > n_sites {
        return Err(invalid(format!("cannot place {n} atoms on {n_sites} sites")));
    }
    let mut sites = index::sample(rng, n_sites, n).into_vec();
    sites.sort_unstable();
    Ok(sites)
}

/// Poisson draw with mean `mean`, redrawn until it fits on the lattice.
pub fn sample_poisson_count<R: Rng + ?Sized>(mean: f64, n_sites: usize, rng: &mut R) -> Result<usize> {
    if !(mean > 0.0 && mean.is_finite()) {
        return Err(invalid(format!("Poisson mean must be > 0, got {mean}")));
    }
    let dist = Poisson::new(mean).map_err(|e| invalid(e.to_string()))?;
    loop {
        let n: f64 = dist.sample(rng);
        if n <= n_sites as f64 {
            return Ok(n as usize);
        }
    }
}

/// `n` independent normal shifts with standard deviation `sigma_ih`.
pub fn sample_ih_shifts<R: Rng + ?Sized>(n: usize, sigma_ih: f64, rng: &mut R) -> Result<Vec<f64>> {
    if !(sigma_ih >= 0.0 && sigma_ih.is_finite()) {
        return Err(invalid(format!("sigma_ih must be >= 0, got {sigma_ih}")));
    }
    if sigma_ih == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let dist = Normal::new(0.0, sigma_ih).map_err(|e| invalid(e.to_string()))?;
    Ok((0..n).map(|_| dist.sample(rng)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_position_cases() {
        let mut rng = substream(1, 0);
        assert!(sample_positions(0, 200, &mut rng).unwrap().is_empty());
        let all = sample_positions(200, 200, &mut rng).unwrap();
        assert_eq!(all, (0..200).collect::<Vec<_>>());
        assert!(sample_positions(201, 200, &mut rng).is_err());
    }

    #[test]
    fn positions_are_reproducible() {
        let a = sample_positions(10, 200, &mut substream(42, 7)).unwrap();
        let b = sample_positions(10, 200, &mut substream(42, 7)).unwrap();
        let c = sample_positions(10, 200, &mut substream(42, 8)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn poisson_mean_and_truncation() {
        let mut rng = substream(3, 0);
        let draws: Vec<usize> = (0..30_000)
            .map(|_| sample_poisson_count(10.0, 200, &mut rng).unwrap())
            .collect();
        let mean = draws.iter().sum::<usize>() as f64 / draws.len() as f64;
        assert!((9.8..=10.2).contains(&mean), "mean {mean}");
        assert!(draws.iter().all(|&n| n <= 200));

        let tiny: usize = (0..1000)
            .map(|_| sample_poisson_count(0.001, 200, &mut rng).unwrap())
            .sum();
        assert!(tiny < 10);
        // Truncation resamples instead of clipping.
        for _ in 0..100 {
            assert!(sample_poisson_count(10.0, 8, &mut rng).unwrap() <= 8);
        }
        assert!(sample_poisson_count(0.0, 200, &mut rng).is_err());
    }

    #[test]
    fn shift_statistics() {
        let mut rng = substream(4, 0);
        assert_eq!(sample_ih_shifts(5, 0.0, &mut rng).unwrap(), vec![0.0; 5]);
        let s = sample_ih_shifts(30_000, 2.0, &mut rng).unwrap();
        let mean = s.iter().sum::<f64>() / s.len() as f64;
        let var = s.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (s.len() - 1) as f64;
        let std = var.sqrt();
        assert!((1.97..=2.03).contains(&std), "std {std}");
    }

    #[test]
    fn occupancy_is_uniform() {
        let (n, sites, draws) = (10usize, 200usize, 100_000usize);
        let mut counts = vec![0u32; sites];
        let mut rng = substream(5, 0);
        for _ in 0..draws {
            for m in sample_positions(n, sites, &mut rng).unwrap() {
                counts[m] += 1;
            }
        }
        let p = n as f64 / sites as f64;
        let expect = draws as f64 * p;
        let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
        for (m, &c) in counts.iter().enumerate() {
            assert!((c as f64 - expect).abs() < 5.0 * sigma, "site {m}: {c}");
        }
    }

    #[test]
    fn chain_validation() {
        assert!(AtomChain::new(vec![1, 1], vec![0.0, 0.0], 10).is_err());
        assert!(AtomChain::new(vec![3, 1], vec![0.0, 0.0], 10).is_err());
        assert!(AtomChain::new(vec![1, 10], vec![0.0, 0.0], 10).is_err());
        assert!(AtomChain::new(vec![1], vec![], 10).is_err());
        assert_eq!(AtomChain::unshifted(vec![0, 4], 10).unwrap().len(), 2);
    }
}
