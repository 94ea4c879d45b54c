//! Compactly supported test field and the thresholding demonstration built on it.
//!
//! The demo samples a Wendland bump on a perturbed HEALPix grid, fits
//! spherical harmonic coefficients from the scattered samples, and compares
//! the plain harmonic reconstruction with one rebuilt from hard-thresholded
//! needlet coefficients.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::fastsht::fast_isht;
use crate::formats::{
    fmt_f64, format_alm, format_beta, format_histogram, format_map, format_metrics, write_text,
};
use crate::harmonics::{compute_weights, sht_irregular, HarmonicCoeffs, WeightScheme};
use crate::healpix::{perturb_grid, HealpixGrid, SphPoint};
use crate::needlet::{analyze, hard_threshold, make_plan, synthesize, NeedletCoeffs};

/// Number of histogram bins per needlet level.
pub const HISTOGRAM_BINS: usize = 64;

/// `φ0(d) = (1−d)^6 (35d² + 18d + 3) / 3` on `[0, 1]`, zero beyond.
pub fn wendland_phi0(d: f64) -> Result<f64> {
    if !(d >= 0.0) {
        return Err(Error::Domain(format!(
            "Wendland radius must be non-negative, got {d}"
        )));
    }
    if d >= 1.0 {
        return Ok(0.0);
    }
    Ok((1.0 - d).powi(6) * (35.0 * d * d + 18.0 * d + 3.0) / 3.0)
}

/// Radial bump `φ0(dist(ξ0, x) / ρ)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WendlandField {
    pub center: SphPoint,
    pub rho: f64,
}

impl WendlandField {
    pub fn new(center: SphPoint, rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho <= PI) {
            return Err(Error::InvalidArgument(format!(
                "support radius must lie in (0, π], got {rho}"
            )));
        }
        Ok(Self { center, rho })
    }

    pub fn contains(&self, x: &SphPoint) -> bool {
        self.center.distance(x) < self.rho
    }
}

impl Default for WendlandField {
    /// Centered on the equator at longitude π with support radius π/4.
    fn default() -> Self {
        Self {
            center: SphPoint {
                theta: FRAC_PI_2,
                phi: PI,
            },
            rho: FRAC_PI_4,
        }
    }
}

pub fn eval_wendland(field: &WendlandField, x: &SphPoint) -> f64 {
    let d = field.center.distance(x) / field.rho;
    wendland_phi0(d).expect("distance is non-negative")
}

#[derive(Clone, Debug, PartialEq)]
pub struct DemoConfig {
    pub b: f64,
    pub l_max: usize,
    /// Resolution of the perturbed sampling grid.
    pub n_side: usize,
    pub amplitude: f64,
    pub seed: u64,
    pub keep_fraction: f64,
    /// Level to threshold; `None` selects the highest level with nonzero coefficients.
    pub threshold_level: Option<usize>,
    /// Resolution of the grid the reconstructions are evaluated on.
    pub map_nside: usize,
    pub fine_nside: usize,
    pub field: WendlandField,
}

impl Default for DemoConfig {
    fn default() -> Self {
        Self {
            b: 2.0,
            l_max: 16,
            n_side: 8,
            amplitude: 0.3,
            seed: 0,
            keep_fraction: 0.05,
            threshold_level: None,
            map_nside: 32,
            fine_nside: WeightScheme::DEFAULT_FINE_NSIDE,
            field: WendlandField::default(),
        }
    }
}

/// In-memory results of the demo pipeline.
#[derive(Clone, Debug)]
pub struct DemoResult {
    pub samples: Vec<SphPoint>,
    pub sample_values: Vec<f64>,
    pub alm: HarmonicCoeffs,
    pub beta: NeedletCoeffs,
    pub thresholded: NeedletCoeffs,
    pub threshold_level: usize,
    pub map_grid: HealpixGrid,
    pub truth_map: Vec<f64>,
    pub sh_map: Vec<f64>,
    pub thresholded_map: Vec<f64>,
    pub metrics: DemoMetrics,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DemoMetrics {
    pub n_samples: usize,
    /// `max |value|` of the harmonic reconstruction outside the support cap.
    pub outside_max_sh: f64,
    /// Same for the reconstruction from thresholded needlet coefficients.
    pub outside_max_thresholded: f64,
    /// RMS of the true field inside the cap.
    pub inside_rms_signal: f64,
    /// RMS of (thresholded − harmonic) reconstruction inside the cap.
    pub inside_rms_change: f64,
    /// Per level, fraction of `|β| > 0.01·max|β|` before thresholding.
    pub sparsity: Vec<f64>,
}

impl DemoMetrics {
    pub fn outside_ratio(&self) -> f64 {
        self.outside_max_thresholded / self.outside_max_sh
    }

    pub fn inside_change_ratio(&self) -> f64 {
        self.inside_rms_change / self.inside_rms_signal
    }

    pub fn to_pairs(&self) -> Vec<(String, String)> {
        let mut out = vec![
            ("n_samples".to_string(), self.n_samples.to_string()),
            ("outside_max_sh".to_string(), fmt_f64(self.outside_max_sh)),
            (
                "outside_max_thresholded".to_string(),
                fmt_f64(self.outside_max_thresholded),
            ),
            ("outside_ratio".to_string(), fmt_f64(self.outside_ratio())),
            (
                "inside_rms_signal".to_string(),
                fmt_f64(self.inside_rms_signal),
            ),
            (
                "inside_rms_change".to_string(),
                fmt_f64(self.inside_rms_change),
            ),
            (
                "inside_change_ratio".to_string(),
                fmt_f64(self.inside_change_ratio()),
            ),
        ];
        for (j, s) in self.sparsity.iter().enumerate() {
            out.push((format!("sparsity_j{j}"), fmt_f64(*s)));
        }
        out
    }
}

/// Fraction of entries with `|v| > 0.01·max|v|`; zero for an all-zero level.
pub fn sparsity_ratio(values: &[f64]) -> f64 {
    let peak = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak == 0.0 || values.is_empty() {
        return 0.0;
    }
    values.iter().filter(|v| v.abs() > 0.01 * peak).count() as f64 / values.len() as f64
}

/// Equal-width histogram over `[min, max]`; the last bin is closed.
pub fn histogram(values: &[f64], bins: usize) -> Vec<(f64, f64, usize)> {
    if values.is_empty() || bins == 0 {
        return Vec::new();
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, hi + 0.5)
    };
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for v in values {
        let i = (((v - lo) / width) as usize).min(bins - 1);
        counts[i] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(i, c)| (lo + i as f64 * width, lo + (i + 1) as f64 * width, c))
        .collect()
}

fn rms(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v * v, n + 1));
    if n == 0 {
        0.0
    } else {
        (sum / n as f64).sqrt()
    }
}

/// Runs the pipeline in memory.
pub fn run_demo(config: &DemoConfig) -> Result<DemoResult> {
    let grid = HealpixGrid::new(config.n_side)?;
    let samples = perturb_grid(&grid, config.amplitude, config.seed)?;
    let sample_values: Vec<f64> = samples
        .iter()
        .map(|x| eval_wendland(&config.field, x))
        .collect();
    let weights = compute_weights(
        &samples,
        &WeightScheme::ApproxVoronoi {
            fine_nside: config.fine_nside,
        },
    )?;
    let alm = sht_irregular(&samples, &sample_values, &weights, config.l_max)?;

    let plan = make_plan(config.b, config.l_max)?;
    let beta = analyze(&alm, &plan)?;
    let threshold_level = match config.threshold_level {
        Some(j) => j,
        None => (0..beta.levels().len())
            .rev()
            .find(|&j| beta.level(j).iter().any(|&v| v != 0.0))
            .ok_or_else(|| Error::Validation("every needlet level is zero".into()))?,
    };
    let thresholded = hard_threshold(&beta, &[threshold_level], config.keep_fraction)?;
    let rebuilt = synthesize(&thresholded)?;

    let map_grid = HealpixGrid::new(config.map_nside)?;
    let centers = map_grid.centers();
    let truth_map: Vec<f64> = centers
        .iter()
        .map(|x| eval_wendland(&config.field, x))
        .collect();
    let sh_map = fast_isht(&alm, 0, config.l_max, &map_grid)?;
    let thresholded_map = fast_isht(&rebuilt, 0, config.l_max, &map_grid)?;

    let inside: Vec<bool> = centers.iter().map(|x| config.field.contains(x)).collect();
    let outside_max = |map: &[f64]| {
        map.iter()
            .zip(&inside)
            .filter(|(_, &i)| !i)
            .fold(0.0f64, |m, (v, _)| m.max(v.abs()))
    };
    let metrics = DemoMetrics {
        n_samples: samples.len(),
        outside_max_sh: outside_max(&sh_map),
        outside_max_thresholded: outside_max(&thresholded_map),
        inside_rms_signal: rms(truth_map
            .iter()
            .zip(&inside)
            .filter(|(_, &i)| i)
            .map(|(v, _)| *v)),
        inside_rms_change: rms(thresholded_map
            .iter()
            .zip(&sh_map)
            .zip(&inside)
            .filter(|(_, &i)| i)
            .map(|((t, s), _)| t - s)),
        sparsity: beta.levels().iter().map(|v| sparsity_ratio(v)).collect(),
    };

    Ok(DemoResult {
        samples,
        sample_values,
        alm,
        beta,
        thresholded,
        threshold_level,
        map_grid,
        truth_map,
        sh_map,
        thresholded_map,
        metrics,
    })
}

/// Runs the pipeline and writes its artifacts into `out_dir`; returns the
/// in-memory result and the list of files written.
pub fn run_wendland_demo(
    config: &DemoConfig,
    out_dir: &Path,
) -> Result<(DemoResult, Vec<PathBuf>)> {
    let result = run_demo(config)?;
    let mut written = Vec::new();
    let mut put = |name: &str, text: String| -> Result<()> {
        let path = out_dir.join(name);
        write_text(&path, &text)?;
        written.push(path);
        Ok(())
    };
    put(
        "samples.txt",
        format_map(&result.samples, &result.sample_values),
    )?;
    put("alm.txt", format_alm(&result.alm))?;
    let centers = result.map_grid.centers();
    put("map_truth.txt", format_map(&centers, &result.truth_map))?;
    put("map_sh.txt", format_map(&centers, &result.sh_map))?;
    put(
        "map_thresholded.txt",
        format_map(&centers, &result.thresholded_map),
    )?;
    for (j, values) in result.beta.levels().iter().enumerate() {
        put(
            &format!("hist_j{j}.txt"),
            format_histogram(&histogram(values, HISTOGRAM_BINS)),
        )?;
    }
    let mut metrics = result.metrics.to_pairs();
    metrics.insert(
        1,
        ("threshold_level".into(), result.threshold_level.to_string()),
    );
    put("beta.txt", format_beta(&result.beta))?;
    put("beta_thresholded.txt", format_beta(&result.thresholded))?;
    put("metrics.txt", format_metrics(&metrics))?;
    Ok((result, written))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phi0_values() {
        assert_eq!(wendland_phi0(0.0).unwrap(), 1.0);
        assert_eq!(wendland_phi0(1.0).unwrap(), 0.0);
        assert_eq!(wendland_phi0(3.0).unwrap(), 0.0);
        assert!((wendland_phi0(0.5).unwrap() - 20.75 / 192.0).abs() < 1e-15);
        assert_eq!(wendland_phi0(-0.1).unwrap_err().kind(), "domain");
    }

    #[test]
    fn field_values() {
        let f = WendlandField::default();
        assert_eq!(eval_wendland(&f, &f.center), 1.0);
        let edge = SphPoint::new(FRAC_PI_2, PI + f.rho).unwrap();
        assert!(eval_wendland(&f, &edge).abs() < 1e-12);
        let anti = SphPoint::new(FRAC_PI_2, 0.0).unwrap();
        assert_eq!(eval_wendland(&f, &anti), 0.0);
    }

    #[test]
    fn continuous_at_support_boundary() {
        let f = WendlandField::default();
        let inner = SphPoint::new(FRAC_PI_2, PI + f.rho * (1.0 - 1e-9)).unwrap();
        let outer = SphPoint::new(FRAC_PI_2, PI + f.rho * (1.0 + 1e-9)).unwrap();
        assert!((eval_wendland(&f, &inner) - eval_wendland(&f, &outer)).abs() < 1e-6);
    }

    #[test]
    fn rejects_bad_radius() {
        let c = SphPoint::new(1.0, 1.0).unwrap();
        assert!(WendlandField::new(c, 0.0).is_err());
        assert!(WendlandField::new(c, 4.0).is_err());
    }

    #[test]
    fn histogram_counts_everything() {
        let v = [0.0, 0.5, 1.0, 1.0, -1.0];
        let h = histogram(&v, 4);
        assert_eq!(h.len(), 4);
        assert_eq!(h.iter().map(|b| b.2).sum::<usize>(), 5);
        assert_eq!(h[0].0, -1.0);
        assert_eq!(h[3].1, 1.0);
        assert_eq!(h[2].2, 1);
        assert_eq!(h[3].2, 3);
        let flat = histogram(&[0.0; 3], 64);
        assert_eq!(flat.iter().map(|b| b.2).sum::<usize>(), 3);
    }

    #[test]
    fn sparsity_of_spike() {
        let mut v = vec![0.0; 100];
        v[3] = 1.0;
        v[4] = 0.02;
        v[5] = 0.005;
        assert_eq!(sparsity_ratio(&v), 0.02);
        assert_eq!(sparsity_ratio(&[0.0; 4]), 0.0);
    }
}
