// SPDX-License-Identifier: Apache-2.0

//! Dip and peak extraction from transmission spectra.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub prominence: f64,
    pub min_depth: f64,
    /// Half-width around Δ = 0 searched for the transparency peak.
    pub peak_window: f64,
    /// Half-width of the high-frequency cluster window, in units of 𝒥.
    pub cluster_half_width: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            prominence: 0.02,
            min_depth: 0.05,
            peak_window: 2.0,
            cluster_half_width: 4.0,
        }
    }
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("prominence", self.prominence),
            ("min_depth", self.min_depth),
            ("peak_window", self.peak_window),
            ("cluster_half_width", self.cluster_half_width),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dip {
    /// Refined location.
    pub delta: f64,
    /// Refined transmission at the minimum.
    pub t: f64,
    pub prominence: f64,
    /// Grid index of the sampled minimum.
    pub index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OmegaMax {
    Found { delta: f64, t: f64 },
    NoDip,
}

impl OmegaMax {
    pub fn delta(&self) -> Option<f64> {
        match self {
            Self::Found { delta, .. } => Some(*delta),
            Self::NoDip => None,
        }
    }
}

fn check_spectrum(delta: &[f64], t: &[f64]) -> Result<()> {
    if delta.is_empty() {
        return Err(invalid("empty spectrum"));
    }
    if delta.len() != t.len() {
        return Err(invalid("detuning and transmission lengths differ"));
    }
    if delta.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("detuning grid must be strictly increasing"));
    }
    if t.iter().any(|v| !v.is_finite()) {
        return Err(invalid("transmission contains non-finite values"));
    }
    Ok(())
}

/// Topographic prominence of the minimum at `i` (offset free).
fn prominence(t: &[f64], i: usize) -> f64 {
    let mut left = t[i];
    for &v in t[..i].iter().rev() {
        if v < t[i] {
            break;
        }
        left = left.max(v);
    }
    let mut right = t[i];
    for &v in &t[i + 1..] {
        if v < t[i] {
            break;
        }
        right = right.max(v);
    }
    left.min(right) - t[i]
}

/// Vertex of the parabola through three points.
fn parabolic_vertex(x: [f64; 3], y: [f64; 3]) -> Option<(f64, f64)> {
    let d1 = (y[1] - y[0]) / (x[1] - x[0]);
    let d2 = (y[2] - y[1]) / (x[2] - x[1]);
    let a = (d2 - d1) / (x[2] - x[0]);
    if !(a > 0.0) {
        return None;
    }
    let b = d1 - a * (x[0] + x[1]);
    let xv = -b / (2.0 * a);
    if !(xv >= x[0] && xv <= x[2]) {
        return None;
    }
    let yv = y[1] + d1 * (xv - x[1]) + a * (xv - x[0]) * (xv - x[1]);
    Some((xv, yv))
}

/// Interior local minima with prominence and depth `1 − T` above the given
/// thresholds, refined by a parabola through the neighbouring samples.
pub fn find_dips(delta: &[f64], t: &[f64], min_prominence: f64, min_depth: f64) -> Result<Vec<Dip>> {
    check_spectrum(delta, t)?;
    let mut dips = Vec::new();
    for i in 1..t.len().saturating_sub(1) {
        if !(t[i] < t[i - 1] && t[i] <= t[i + 1]) {
            continue;
        }
        let prom = prominence(t, i);
        if prom < min_prominence || 1.0 - t[i] < min_depth {
            continue;
        }
        let (x, y) = parabolic_vertex([delta[i - 1], delta[i], delta[i + 1]], [t[i - 1], t[i], t[i + 1]])
            .unwrap_or((delta[i], t[i]));
        dips.push(Dip {
            delta: x,
            t: y,
            prominence: prom,
            index: i,
        });
    }
    Ok(dips)
}

/// The qualifying dip at the largest detuning.
pub fn locate_omega_max(dips: &[Dip], min_depth: f64) -> OmegaMax {
    dips.iter()
        .filter(|d| 1.0 - d.t >= min_depth)
        .max_by(|a, b| a.delta.total_cmp(&b.delta))
        .map_or(OmegaMax::NoDip, |d| OmegaMax::Found { delta: d.delta, t: d.t })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EitMetrics {
    /// Transmission at the local maximum nearest Δ = 0 inside the peak
    /// window, or at the grid point nearest Δ = 0 when there is none.
    pub t_peak: f64,
    pub t_peak_delta: f64,
    pub omega_max: Option<f64>,
    pub t_dip: Option<f64>,
}

pub fn eit_metrics(delta: &[f64], t: &[f64], dips: &[Dip], config: &AnalysisConfig) -> Result<EitMetrics> {
    check_spectrum(delta, t)?;
    let nearest_zero = (0..delta.len())
        .min_by(|&a, &b| delta[a].abs().total_cmp(&delta[b].abs()))
        .expect("non-empty grid");
    let peak = (1..t.len().saturating_sub(1))
        .filter(|&i| delta[i].abs() <= config.peak_window)
        .filter(|&i| t[i] > t[i - 1] && t[i] >= t[i + 1])
        .min_by(|&a, &b| delta[a].abs().total_cmp(&delta[b].abs()))
        .unwrap_or(nearest_zero);
    let om = locate_omega_max(dips, config.min_depth);
    Ok(EitMetrics {
        t_peak: t[peak],
        t_peak_delta: delta[peak],
        omega_max: om.delta(),
        t_dip: match om {
            OmegaMax::Found { t, .. } => Some(t),
            OmegaMax::NoDip => None,
        },
    })
}

/// Mean spacing of adjacent dips inside `[lo, hi]`; `None` with fewer than
/// two dips there.
pub fn mean_dip_spacing(dips: &[Dip], lo: f64, hi: f64) -> Option<f64> {
    let mut inside: Vec<f64> = dips
        .iter()
        .map(|d| d.delta)
        .filter(|&x| x >= lo && x <= hi)
        .collect();
    if inside.len() < 2 {
        return None;
    }
    inside.sort_by(f64::total_cmp);
    Some((inside[inside.len() - 1] - inside[0]) / (inside.len() - 1) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Least-squares line through `(n, ω_max)` points.
pub fn fit_omega_vs_n(points: &[(f64, f64)]) -> Result<LinearFit> {
    if points.len() < 3 {
        return Err(invalid("a fit needs at least three points"));
    }
    if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(invalid("fit points must be finite"));
    }
    let m = points.len() as f64;
    let xm = points.iter().map(|p| p.0).sum::<f64>() / m;
    let ym = points.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = points.iter().map(|p| (p.0 - xm).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - xm) * (p.1 - ym)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - ym).powi(2)).sum();
    if !(sxx > 1e-12 * (1.0 + xm * xm) * m) {
        return Err(invalid("degenerate abscissa"));
    }
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let ss_res: f64 = points
        .iter()
        .map(|p| (p.1 - (intercept + slope * p.0)).powi(2))
        .sum();
    let r2 = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    Ok(LinearFit { slope, intercept, r2 })
}

/// Everything extracted from one spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DipReport {
    pub dips: Vec<Dip>,
    pub omega_max: Option<f64>,
    pub t_dip: Option<f64>,
    pub t_peak: f64,
    pub spacing: Option<f64>,
}

/// Dips, ω_max, transparency peak, and (when `cluster_center` and
/// `j_strength` are given) the mean spacing inside the high-frequency
/// cluster window `center ± cluster_half_width·𝒥`.
pub fn analyze(
    delta: &[f64],
    t: &[f64],
    config: &AnalysisConfig,
    cluster_center: Option<f64>,
    j_strength: f64,
) -> Result<DipReport> {
    config.validate()?;
    let dips = find_dips(delta, t, config.prominence, config.min_depth)?;
    let m = eit_metrics(delta, t, &dips, config)?;
    let spacing = cluster_center.and_then(|c| {
        let half = config.cluster_half_width * j_strength.abs();
        mean_dip_spacing(&dips, c - half, c + half)
    });
    Ok(DipReport {
        omega_max: m.omega_max,
        t_dip: m.t_dip,
        t_peak: m.t_peak,
        spacing,
        dips,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
        let n = ((hi - lo) / step).round() as usize;
        (0..=n).map(|i| lo + step * i as f64).collect()
    }

    fn lorentz_dips(x: &[f64], centers: &[(f64, f64, f64)]) -> Vec<f64> {
        x.iter()
            .map(|&d| {
                1.0 - centers
                    .iter()
                    .map(|&(c, depth, w)| depth * w * w / ((d - c).powi(2) + w * w))
                    .sum::<f64>()
            })
            .collect()
    }

    fn two_level_t(d: f64) -> f64 {
        (d * d + 0.25) / (d * d + 0.65 * 0.65)
    }

    #[test]
    fn flat_and_empty() {
        let x = grid(-5.0, 5.0, 0.1);
        assert!(find_dips(&x, &vec![1.0; x.len()], 0.02, 0.05).unwrap().is_empty());
        assert!(find_dips(&[], &[], 0.02, 0.05).is_err());
    }

    #[test]
    fn single_lorentzian() {
        let x = grid(-5.0, 5.0, 0.1);
        let t: Vec<f64> = x.iter().map(|&d| two_level_t(d)).collect();
        let dips = find_dips(&x, &t, 0.02, 0.05).unwrap();
        assert_eq!(dips.len(), 1);
        assert!(dips[0].delta.abs() < 1e-9);
        assert_eq!(locate_omega_max(&dips, 0.05), OmegaMax::Found { delta: dips[0].delta, t: dips[0].t });
    }

    #[test]
    fn omega_max_takes_largest_detuning() {
        let x = grid(-5.0, 45.0, 0.1);
        let t = lorentz_dips(&x, &[(0.0, 0.5, 0.5), (38.5, 0.3, 0.4), (40.1, 0.2, 0.3)]);
        let dips = find_dips(&x, &t, 0.02, 0.05).unwrap();
        assert_eq!(dips.len(), 3);
        let om = locate_omega_max(&dips, 0.05).delta().unwrap();
        assert!((om - 40.1).abs() < 0.01, "{om}");
        assert_eq!(locate_omega_max(&[], 0.05), OmegaMax::NoDip);
    }

    #[test]
    fn spacing_and_fit() {
        let d = |x: f64| Dip { delta: x, t: 0.5, prominence: 0.5, index: 0 };
        let dips = [d(36.0), d(40.0), d(44.0), d(3.0)];
        assert_eq!(mean_dip_spacing(&dips, 24.0, 56.0), Some(4.0));
        assert_eq!(mean_dip_spacing(&dips[..1], 24.0, 56.0), None);

        let pts: Vec<(f64, f64)> = (2..=10).map(|n| (n as f64, 4.0 * n as f64)).collect();
        let fit = fit_omega_vs_n(&pts).unwrap();
        assert!((fit.slope - 4.0).abs() < 1e-12 && fit.intercept.abs() < 1e-10 && (fit.r2 - 1.0).abs() < 1e-12);
        assert!(fit_omega_vs_n(&pts[..2]).is_err());
        assert!(fit_omega_vs_n(&[(3.0, 1.0), (3.0, 2.0), (3.0, 5.0)]).is_err());
    }

    #[test]
    fn eit_peak_window() {
        let x = grid(-10.0, 10.0, 0.1);
        // EIT window at 0 on top of a broad dip, plus a spurious maximum at −5.6.
        let mut t = lorentz_dips(&x, &[(0.0, 0.8, 3.0), (-4.0, 0.1, 0.5), (-7.0, 0.1, 0.5)]);
        for (xi, ti) in x.iter().zip(t.iter_mut()) {
            *ti += 0.7 * 0.09 / (xi * xi + 0.09);
        }
        let dips = find_dips(&x, &t, 0.02, 0.05).unwrap();
        let m = eit_metrics(&x, &t, &dips, &AnalysisConfig::default()).unwrap();
        assert!(m.t_peak_delta.abs() < 1e-9);
        // No maximum in the window: fall back to the point nearest zero.
        let t2 = lorentz_dips(&x, &[(0.0, 0.5, 1.0)]);
        let m2 = eit_metrics(&x, &t2, &[], &AnalysisConfig::default()).unwrap();
        assert_eq!(m2.t_peak, t2[100]);
        assert_eq!(m2.t_dip, None);
    }

    #[test]
    fn refinement_tracks_a_finer_grid() {
        let centers = [(3.33, 0.4, 0.6), (11.07, 0.3, 0.4), (17.52, 0.6, 0.9)];
        let coarse = grid(0.0, 20.0, 0.1);
        let fine = grid(0.0, 20.0, 0.01);
        let a = find_dips(&coarse, &lorentz_dips(&coarse, &centers), 0.02, 0.05).unwrap();
        let b = find_dips(&fine, &lorentz_dips(&fine, &centers), 0.02, 0.05).unwrap();
        assert_eq!(a.len(), 3);
        assert_eq!(b.len(), 3);
        for (p, q) in a.iter().zip(&b) {
            assert!((p.delta - q.delta).abs() < 0.05);
        }
    }

    proptest! {
        #[test]
        fn prominence_is_offset_free(
            c1 in 2.0f64..8.0, c2 in 12.0f64..18.0,
            d1 in 0.2f64..0.5, d2 in 0.2f64..0.5,
            offset in 0.0f64..0.05,
        ) {
            let x = grid(0.0, 20.0, 0.1);
            let t = lorentz_dips(&x, &[(c1, d1, 0.5), (c2, d2, 0.5)]);
            let shifted: Vec<f64> = t.iter().map(|v| v + offset).collect();
            let a = find_dips(&x, &t, 0.02, 0.05).unwrap();
            let b = find_dips(&x, &shifted, 0.02, 0.05).unwrap();
            prop_assert_eq!(a.len(), b.len());
            for (p, q) in a.iter().zip(&b) {
                prop_assert!((p.delta - q.delta).abs() < 1e-9);
                prop_assert!((p.prominence - q.prominence).abs() < 1e-12);
            }
        }
    }
}
