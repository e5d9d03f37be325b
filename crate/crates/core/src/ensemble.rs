// SPDX-License-Identifier: Apache-2.0

//! Disorder averaging over random chains.
//!
//! Sample `i` draws everything from its own substream of the master seed and
//! the per-sample results are folded into the running statistics in index
//! order, so the output does not depend on the number of workers.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::ExcitationBasis;
use crate::chain::{sample_ih_shifts, sample_poisson_count, sample_positions, substream, AtomChain};
use crate::coherent::{build_blocks, solve_steady, CoherentSpectrum};
use crate::error::{invalid, Error, Result};
use crate::lindblad::{build_liouvillian, steady_density, WeakDriveLindblad};
use crate::observables::{
    correlation, transmission_c1, transmission_from_density, Correlation, Field, FieldAmplitudes, FieldOperator,
    MIN_REFLECTED_INTENSITY,
};
use crate::params::PhysicalParams;

/// Samples handed to the pool at a time; bounds memory and sets the
/// progress granularity.
const CHUNK: usize = 64;

/// Largest tolerated fraction of failed samples.
pub const MAX_FAILURE_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum AtomCount {
    Fixed { n: usize },
    Poisson { mean: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    /// Non-Hermitian Hamiltonian, one-excitation manifold.
    #[default]
    Coherent,
    /// Master equation, weak-drive block solve.
    Lindblad,
    /// Master equation, full superoperator null-space solve per detuning.
    LindbladExact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub count: AtomCount,
    pub samples: usize,
    pub delta_grid: Vec<f64>,
    pub master_seed: u64,
    pub solver: SolverKind,
}

impl EnsembleSpec {
    pub fn validate(&self, params: &PhysicalParams) -> Result<()> {
        params.validate()?;
        if self.samples == 0 {
            return Err(invalid("at least one sample is required"));
        }
        if self.delta_grid.is_empty() {
            return Err(invalid("detuning grid is empty"));
        }
        if self.delta_grid.iter().any(|d| !d.is_finite()) || self.delta_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("detuning grid must be finite and strictly increasing"));
        }
        match self.count {
            AtomCount::Fixed { n } if n > params.n_sites => {
                Err(invalid(format!("{n} atoms do not fit on {} sites", params.n_sites)))
            }
            AtomCount::Poisson { mean } if !(mean > 0.0 && mean.is_finite()) => {
                Err(invalid(format!("Poisson mean must be > 0, got {mean}")))
            }
            _ => Ok(()),
        }
    }
}

/// Progress snapshot passed to the hook after each chunk of samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Progress {
    pub done: usize,
    pub total: usize,
    pub failed: usize,
}

pub type ProgressHook<'a> = &'a (dyn Fn(Progress) + Sync);

#[derive(Clone, Copy, Default)]
pub struct RunOptions<'a> {
    /// Worker threads; 0 uses the global rayon pool.
    pub workers: usize,
    pub progress: Option<ProgressHook<'a>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResult {
    pub delta: Vec<f64>,
    pub t_mean: Vec<f64>,
    pub t_stderr: Vec<f64>,
    pub r_mean: Vec<f64>,
    pub r_stderr: Vec<f64>,
    /// Samples that entered the averages.
    pub samples: usize,
    pub failed: usize,
    pub spec: EnsembleSpec,
    pub params: PhysicalParams,
}

/// Running mean and variance (Welford) for a vector of observables.
#[derive(Debug, Clone)]
pub struct Welford {
    count: usize,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Welford {
    pub fn new(len: usize) -> Self {
        Self {
            count: 0,
            mean: vec![0.0; len],
            m2: vec![0.0; len],
        }
    }

    pub fn push(&mut self, x: &[f64]) {
        self.count += 1;
        let n = self.count as f64;
        for ((m, s), &v) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(x) {
            let d = v - *m;
            *m += d / n;
            *s += d * (v - *m);
        }
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// Standard error of the mean, `s/√M` with the unbiased sample variance;
    /// zero for a single sample.
    pub fn stderr(&self) -> Vec<f64> {
        if self.count < 2 {
            return vec![0.0; self.mean.len()];
        }
        let n = self.count as f64;
        self.m2.iter().map(|s| (s / (n - 1.0) / n).sqrt()).collect()
    }
}

/// Chain for sample `index`: atom count (if Poisson), positions, then
/// shifts, all from the sample's own substream.
pub fn draw_chain(count: AtomCount, params: &PhysicalParams, master_seed: u64, index: u64) -> Result<AtomChain> {
    let mut rng = substream(master_seed, index);
    let n = match count {
        AtomCount::Fixed { n } => n,
        AtomCount::Poisson { mean } => sample_poisson_count(mean, params.n_sites, &mut rng)?,
    };
    let positions = sample_positions(n, params.n_sites, &mut rng)?;
    let shifts = sample_ih_shifts(n, params.sigma_ih, &mut rng)?;
    AtomChain::new(positions, shifts, params.n_sites)
}

/// Single-chain spectrum with the chosen solver.
pub fn chain_spectrum(
    chain: &AtomChain,
    params: &PhysicalParams,
    grid: &[f64],
    solver: SolverKind,
) -> Result<Vec<FieldAmplitudes>> {
    match solver {
        SolverKind::Coherent => {
            let spec = CoherentSpectrum::new(chain, params)?;
            grid.iter()
                .map(|&d| transmission_c1(&spec.c1(d)?, chain, params))
                .collect()
        }
        SolverKind::Lindblad => {
            let fast = WeakDriveLindblad::new(chain, params)?;
            grid.iter().map(|&d| fast.amplitudes(d)).collect()
        }
        SolverKind::LindbladExact => {
            let basis = ExcitationBasis::enumerate(chain.len(), 1);
            grid.iter()
                .map(|&d| {
                    let rho = steady_density(&build_liouvillian(chain, params, d, &basis)?)?;
                    transmission_from_density(&rho, chain, params)
                })
                .collect()
        }
    }
}

fn with_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if workers == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| invalid(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

/// Runs `sample` for indices `0..total` in parallel chunks and feeds the
/// outcomes to `fold` in index order.
fn drive_samples<T: Send>(
    total: usize,
    options: &RunOptions,
    sample: impl Fn(u64) -> Result<T> + Sync + Send,
    mut fold: impl FnMut(T) + Send,
) -> Result<(usize, Option<Error>)> {
    with_pool(options.workers, || {
        let mut failed = 0;
        let mut first: Option<Error> = None;
        let mut done = 0;
        while done < total {
            let end = (done + CHUNK).min(total);
            let outcomes: Vec<Result<T>> = (done..end).into_par_iter().map(|i| sample(i as u64)).collect();
            for outcome in outcomes {
                match outcome {
                    Ok(v) => fold(v),
                    Err(e) => {
                        failed += 1;
                        first.get_or_insert(e);
                    }
                }
            }
            done = end;
            if let Some(hook) = options.progress {
                hook(Progress { done, total, failed });
            }
        }
        (failed, first)
    })
}

fn check_failures(failed: usize, total: usize, first: Option<Error>) -> Result<()> {
    if failed == 0 {
        return Ok(());
    }
    let first = first.expect("failure recorded");
    if failed == total {
        if let Error::ReflectionTooWeak { .. } = first {
            return Err(first);
        }
    }
    if failed as f64 > MAX_FAILURE_FRACTION * total as f64 {
        return Err(Error::TooManyFailures {
            failed,
            total,
            first: first.to_string(),
        });
    }
    Ok(())
}

/// Ensemble-averaged transmission and reflection spectra.
pub fn run_ensemble(spec: &EnsembleSpec, params: &PhysicalParams, options: &RunOptions) -> Result<SpectrumResult> {
    spec.validate(params)?;
    let len = spec.delta_grid.len();
    let mut t_stats = Welford::new(len);
    let mut r_stats = Welford::new(len);
    let sample = |i: u64| -> Result<(Vec<f64>, Vec<f64>)> {
        let chain = draw_chain(spec.count, params, spec.master_seed, i)?;
        let amps = chain_spectrum(&chain, params, &spec.delta_grid, spec.solver)?;
        Ok(amps.iter().map(|a| (a.t, a.r)).unzip())
    };
    let (failed, first) = drive_samples(spec.samples, options, sample, |(t, r)| {
        t_stats.push(&t);
        r_stats.push(&r);
    })?;
    check_failures(failed, spec.samples, first)?;
    Ok(SpectrumResult {
        delta: spec.delta_grid.clone(),
        t_mean: t_stats.mean().to_vec(),
        t_stderr: t_stats.stderr(),
        r_mean: r_stats.mean().to_vec(),
        r_stderr: r_stats.stderr(),
        samples: t_stats.count(),
        failed,
        spec: spec.clone(),
        params: *params,
    })
}

/// Correlation run at one probe detuning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct G2Spec {
    pub count: AtomCount,
    pub samples: usize,
    pub master_seed: u64,
    pub delta: f64,
    pub tau: Vec<f64>,
    pub field: Field,
    #[serde(default)]
    pub average: G2Average,
}

/// How per-chain correlations are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum G2Average {
    /// Arithmetic mean of the per-chain g²(τ).
    #[default]
    PerChain,
    /// Mean coincidence rate over the squared mean intensity, as a detector
    /// integrating over many loadings would record.
    Intensity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct G2Result {
    pub delta: f64,
    pub tau: Vec<f64>,
    pub g2_mean: Vec<f64>,
    /// First-order (delta-method) standard error of the ratio.
    pub g2_stderr: Vec<f64>,
    /// Mean drive-normalized output intensity of the accepted samples.
    pub intensity: f64,
    pub samples: usize,
    pub failed: usize,
}

/// Running means, variances and the covariance with a shared scalar, for
/// the ratio `mean(x) / mean(y)²`.
#[derive(Debug, Clone)]
struct RatioStats {
    x: Welford,
    y: Welford,
    cov: Vec<f64>,
}

impl RatioStats {
    fn new(len: usize) -> Self {
        Self {
            x: Welford::new(len),
            y: Welford::new(1),
            cov: vec![0.0; len],
        }
    }

    fn push(&mut self, x: &[f64], y: f64) {
        let x_old = self.x.mean().to_vec();
        self.x.push(x);
        self.y.push(&[y]);
        let y_new = self.y.mean()[0];
        for ((c, &v), m) in self.cov.iter_mut().zip(x).zip(x_old) {
            *c += (v - m) * (y - y_new);
        }
    }

    fn ratio(&self) -> (Vec<f64>, Vec<f64>) {
        let y = self.y.mean()[0];
        let g = self.x.mean().iter().map(|x| x / (y * y)).collect();
        let n = self.x.count();
        if n < 2 {
            return (g, vec![0.0; self.cov.len()]);
        }
        let sx = self.x.stderr();
        let sy = self.y.stderr()[0];
        let norm = (n as f64 - 1.0) * n as f64;
        let err = self
            .x
            .mean()
            .iter()
            .zip(&sx)
            .zip(&self.cov)
            .map(|((x, s), c)| {
                let var = s * s / y.powi(4) + 4.0 * x * x * sy * sy / y.powi(6) - 4.0 * x * (c / norm) / y.powi(5);
                var.max(0.0).sqrt()
            })
            .collect();
        (g, err)
    }
}

/// Ensemble g²(τ) at a fixed probe detuning. Per-chain averaging fails a
/// sample whose own output is too weak to normalize; intensity averaging
/// fails only if the ensemble-mean intensity is.
pub fn run_g2_ensemble(spec: &G2Spec, params: &PhysicalParams, options: &RunOptions) -> Result<G2Result> {
    params.validate()?;
    if spec.samples == 0 {
        return Err(invalid("at least one sample is required"));
    }
    if !spec.delta.is_finite() {
        return Err(invalid("detuning must be finite"));
    }
    let len = spec.tau.len();
    let sample = |i: u64| -> Result<(Vec<f64>, f64)> {
        let chain = draw_chain(spec.count, params, spec.master_seed, i)?;
        let c = chain_correlation(&chain, params, spec.delta, &spec.tau, spec.field)?;
        match spec.average {
            G2Average::PerChain => Ok((c.normalized(spec.delta)?, c.intensity)),
            G2Average::Intensity => Ok((c.coincidence, c.intensity)),
        }
    };
    let mut per_chain = Welford::new(len);
    let mut ratio = RatioStats::new(len);
    let (failed, first) = drive_samples(spec.samples, options, sample, |(v, intensity)| {
        per_chain.push(&v);
        ratio.push(&v, intensity);
    })?;
    check_failures(failed, spec.samples, first)?;
    let intensity = ratio.y.mean()[0];
    let (g2_mean, g2_stderr) = match spec.average {
        G2Average::PerChain => (per_chain.mean().to_vec(), per_chain.stderr()),
        G2Average::Intensity => {
            if !(intensity >= MIN_REFLECTED_INTENSITY) {
                return Err(Error::ReflectionTooWeak {
                    delta: spec.delta,
                    intensity,
                });
            }
            ratio.ratio()
        }
    };
    Ok(G2Result {
        delta: spec.delta,
        tau: spec.tau.clone(),
        g2_mean,
        g2_stderr,
        intensity,
        samples: per_chain.count(),
        failed,
    })
}

/// Unnormalized correlation of one chain for the chosen output field.
pub fn chain_correlation(
    chain: &AtomChain,
    params: &PhysicalParams,
    delta: f64,
    tau: &[f64],
    field: Field,
) -> Result<Correlation> {
    let basis = ExcitationBasis::enumerate(chain.len(), 2);
    let blocks = build_blocks(chain, params, delta, &basis)?;
    let amps = solve_steady(&blocks)?;
    correlation(&blocks, &amps, &FieldOperator::new(field, chain, params)?, tau)
}

/// g²(τ) of one chain for the chosen output field.
pub fn chain_g2(chain: &AtomChain, params: &PhysicalParams, delta: f64, tau: &[f64], field: Field) -> Result<Vec<f64>> {
    chain_correlation(chain, params, delta, tau, field)?.normalized(delta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};

    fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
        let n = ((hi - lo) / step).round() as usize;
        (0..=n).map(|i| lo + step * i as f64).collect()
    }

    fn spec(count: AtomCount, samples: usize) -> EnsembleSpec {
        EnsembleSpec {
            count,
            samples,
            delta_grid: grid(-5.0, 45.0, 0.5),
            master_seed: 2024,
            solver: SolverKind::Coherent,
        }
    }

    #[test]
    fn single_sample_equals_single_shot() {
        let p = PhysicalParams::default();
        let s = spec(AtomCount::Fixed { n: 6 }, 1);
        let res = run_ensemble(&s, &p, &RunOptions::default()).unwrap();
        let chain = draw_chain(s.count, &p, s.master_seed, 0).unwrap();
        let single = chain_spectrum(&chain, &p, &s.delta_grid, SolverKind::Coherent).unwrap();
        for (k, a) in single.iter().enumerate() {
            assert_eq!(res.t_mean[k], a.t);
            assert_eq!(res.r_mean[k], a.r);
            assert_eq!(res.t_stderr[k], 0.0);
        }
    }

    #[test]
    fn worker_count_does_not_change_bits() {
        let p = PhysicalParams {
            sigma_ih: 1.0,
            ..PhysicalParams::default()
        };
        let s = spec(AtomCount::Poisson { mean: 5.0 }, 150);
        let one = run_ensemble(&s, &p, &RunOptions { workers: 1, progress: None }).unwrap();
        let eight = run_ensemble(&s, &p, &RunOptions { workers: 8, progress: None }).unwrap();
        assert_eq!(one, eight);
        assert_eq!(one.t_mean.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), eight.t_mean.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    }

    #[test]
    fn eit_survives_disorder() {
        let p = PhysicalParams {
            j_strength: 0.0,
            ..PhysicalParams::default()
        };
        let s = EnsembleSpec {
            delta_grid: vec![-1.0, 0.0, 1.0],
            ..spec(AtomCount::Fixed { n: 10 }, 200)
        };
        let res = run_ensemble(&s, &p, &RunOptions::default()).unwrap();
        assert!((res.t_mean[1] - 1.0).abs() < 1e-4);
    }

    #[test]
    fn mean_is_order_independent() {
        let p = PhysicalParams::default();
        let s = spec(AtomCount::Fixed { n: 4 }, 40);
        let res = run_ensemble(&s, &p, &RunOptions::default()).unwrap();
        let mut rows: Vec<Vec<f64>> = (0..40)
            .map(|i| {
                let chain = draw_chain(s.count, &p, s.master_seed, i).unwrap();
                chain_spectrum(&chain, &p, &s.delta_grid, s.solver).unwrap().iter().map(|a| a.t).collect()
            })
            .collect();
        rows.reverse();
        rows.swap(3, 17);
        let mut w = Welford::new(s.delta_grid.len());
        rows.iter().for_each(|r| w.push(r));
        for (a, b) in w.mean().iter().zip(&res.t_mean) {
            assert!((a - b).abs() < 1e-12);
        }
        for (a, b) in w.stderr().iter().zip(&res.t_stderr) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn stderr_scales_as_inverse_root_m() {
        let p = PhysicalParams::default();
        let small = EnsembleSpec {
            delta_grid: grid(10.0, 30.0, 2.0),
            ..spec(AtomCount::Fixed { n: 8 }, 250)
        };
        let large = EnsembleSpec { samples: 1000, master_seed: 99, ..small.clone() };
        let a = run_ensemble(&small, &p, &RunOptions::default()).unwrap();
        let b = run_ensemble(&large, &p, &RunOptions::default()).unwrap();
        let ratio = a.t_stderr.iter().sum::<f64>() / b.t_stderr.iter().sum::<f64>();
        assert!((ratio - 2.0).abs() < 0.2, "ratio {ratio}");
    }

    #[test]
    fn failure_policy() {
        // Lossless chains with Ω_c = 0 are singular on resonance; every sample
        // that hits Δ = 0 fails.
        let p = PhysicalParams {
            gamma_1d: 0.0,
            gamma_e_prime: 0.0,
            omega_c: 0.0,
            j_strength: 0.0,
            ..PhysicalParams::default()
        };
        let s = EnsembleSpec {
            delta_grid: vec![-1.0, 0.0, 1.0],
            ..spec(AtomCount::Fixed { n: 1 }, 10)
        };
        let err = run_ensemble(&s, &p, &RunOptions::default()).unwrap_err();
        assert!(matches!(err, Error::TooManyFailures { failed: 10, total: 10, .. }));
        assert!(check_failures(1, 100, Some(Error::StepUnderflow { time: 0.0 })).is_ok());
        assert!(check_failures(2, 100, Some(Error::StepUnderflow { time: 0.0 })).is_err());
    }

    #[test]
    fn progress_reaches_total() {
        let p = PhysicalParams::default();
        let calls = AtomicUsize::new(0);
        let last = AtomicUsize::new(0);
        let hook = |pr: Progress| {
            calls.fetch_add(1, Ordering::SeqCst);
            last.store(pr.done, Ordering::SeqCst);
        };
        let s = EnsembleSpec {
            delta_grid: vec![0.0, 1.0],
            ..spec(AtomCount::Fixed { n: 2 }, 130)
        };
        run_ensemble(&s, &p, &RunOptions { workers: 2, progress: Some(&hook) }).unwrap();
        assert_eq!(calls.load(Ordering::SeqCst), 3);
        assert_eq!(last.load(Ordering::SeqCst), 130);
    }

    #[test]
    fn invalid_specs() {
        let p = PhysicalParams::default();
        let mut s = spec(AtomCount::Fixed { n: 2 }, 0);
        assert!(run_ensemble(&s, &p, &RunOptions::default()).is_err());
        s.samples = 1;
        s.delta_grid = vec![1.0, 1.0];
        assert!(run_ensemble(&s, &p, &RunOptions::default()).is_err());
        let s = spec(AtomCount::Poisson { mean: 0.0 }, 1);
        assert!(run_ensemble(&s, &p, &RunOptions::default()).is_err());
        let s = spec(AtomCount::Fixed { n: 201 }, 1);
        assert!(run_ensemble(&s, &p, &RunOptions::default()).is_err());
    }

    #[test]
    fn solvers_agree_without_dephasing() {
        let p = PhysicalParams::default();
        let s = EnsembleSpec {
            delta_grid: grid(-4.0, 20.0, 1.5),
            ..spec(AtomCount::Fixed { n: 3 }, 3)
        };
        let coh = run_ensemble(&s, &p, &RunOptions::default()).unwrap();
        let lin = run_ensemble(&EnsembleSpec { solver: SolverKind::Lindblad, ..s.clone() }, &p, &RunOptions::default()).unwrap();
        for (a, b) in coh.t_mean.iter().zip(&lin.t_mean) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn g2_ensemble_of_empty_chains_reports_no_reflection() {
        let p = PhysicalParams::default();
        let err = run_g2_ensemble(
            &G2Spec {
                count: AtomCount::Fixed { n: 0 },
                samples: 3,
                master_seed: 1,
                delta: 0.0,
                tau: vec![0.0, 0.1],
                field: Field::Reflected,
                average: G2Average::PerChain,
            },
            &p,
            &RunOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::ReflectionTooWeak { .. }));
    }

    #[test]
    fn transmitted_g2_of_empty_chain_is_one() {
        let p = PhysicalParams::default();
        let spec = G2Spec {
            count: AtomCount::Fixed { n: 0 },
            samples: 2,
            master_seed: 1,
            delta: 0.0,
            tau: grid(0.0, 2.0, 0.5),
            field: Field::Transmitted,
            average: G2Average::PerChain,
        };
        let res = run_g2_ensemble(&spec, &p, &RunOptions::default()).unwrap();
        assert!(res.g2_mean.iter().all(|&g| (g - 1.0).abs() < 1e-15));
    }

    fn g2_spec(samples: usize, average: G2Average) -> G2Spec {
        G2Spec {
            count: AtomCount::Fixed { n: 3 },
            samples,
            master_seed: 21,
            delta: 8.0,
            tau: grid(0.0, 4.0, 0.25),
            field: Field::Reflected,
            average,
        }
    }

    #[test]
    fn g2_averages_reduce_to_the_single_chain() {
        let p = PhysicalParams::default();
        let chain = draw_chain(AtomCount::Fixed { n: 3 }, &p, 21, 0).unwrap();
        let direct = chain_g2(&chain, &p, 8.0, &grid(0.0, 4.0, 0.25), Field::Reflected).unwrap();
        for average in [G2Average::PerChain, G2Average::Intensity] {
            let res = run_g2_ensemble(&g2_spec(1, average), &p, &RunOptions::default()).unwrap();
            for (a, b) in res.g2_mean.iter().zip(&direct) {
                assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
            }
        }
    }

    #[test]
    fn intensity_average_matches_direct_sums() {
        let p = PhysicalParams::default();
        let tau = grid(0.0, 4.0, 0.25);
        let parts: Vec<Correlation> = (0..5)
            .map(|i| {
                let chain = draw_chain(AtomCount::Fixed { n: 3 }, &p, 21, i).unwrap();
                chain_correlation(&chain, &p, 8.0, &tau, Field::Reflected).unwrap()
            })
            .collect();
        let i_mean = parts.iter().map(|c| c.intensity).sum::<f64>() / 5.0;
        let res = run_g2_ensemble(&g2_spec(5, G2Average::Intensity), &p, &RunOptions::default()).unwrap();
        for k in 0..tau.len() {
            let n_mean = parts.iter().map(|c| c.coincidence[k]).sum::<f64>() / 5.0;
            let want = n_mean / (i_mean * i_mean);
            assert!((res.g2_mean[k] - want).abs() <= 1e-12 * want);
            assert!(res.g2_stderr[k].is_finite() && res.g2_stderr[k] >= 0.0);
        }
    }

    #[test]
    fn intensity_average_of_empty_chains_reports_no_reflection() {
        let p = PhysicalParams::default();
        let spec = G2Spec {
            count: AtomCount::Fixed { n: 0 },
            ..g2_spec(4, G2Average::Intensity)
        };
        let err = run_g2_ensemble(&spec, &p, &RunOptions::default()).unwrap_err();
        assert!(matches!(err, Error::ReflectionTooWeak { .. }));
    }
}
