//! Wall-clock timing of the needlet analysis.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fastsht::IshtOptions;
use crate::formats::fmt_f64;
use crate::harmonics::HarmonicCoeffs;
use crate::needlet::{make_plan, IshtMethod, NeedletTransform};

#[derive(Clone, Debug, PartialEq)]
pub struct BenchConfig {
    pub l_max: Vec<usize>,
    pub b: f64,
    pub repetitions: usize,
    pub seed: u64,
    /// The naive path is timed only up to this bandwidth.
    pub naive_limit: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            l_max: vec![16, 32, 64, 128],
            b: 2.0,
            repetitions: 5,
            seed: 0,
            naive_limit: 32,
        }
    }
}

/// Median and spread (max − min) in seconds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Timing {
    pub median: f64,
    pub spread: f64,
}

impl Timing {
    fn from_samples(mut s: Vec<f64>) -> Self {
        s.sort_by(f64::total_cmp);
        let n = s.len();
        let median = if n % 2 == 1 {
            s[n / 2]
        } else {
            0.5 * (s[n / 2 - 1] + s[n / 2])
        };
        Self {
            median,
            spread: s[n - 1] - s[0],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub l_max: usize,
    /// Total needlet coefficients over all levels.
    pub n_coeffs: usize,
    /// Fast transform, Legendre columns recomputed on every call.
    pub cold: Timing,
    /// Fast transform with precomputed Legendre tables.
    pub cached: Timing,
    pub naive: Option<Timing>,
}

impl BenchRow {
    pub fn speedup(&self) -> Option<f64> {
        self.naive.map(|n| n.median / self.cold.median)
    }
}

fn time_analyze(
    transform: &NeedletTransform,
    alm: &HarmonicCoeffs,
    repetitions: usize,
) -> Result<Timing> {
    let mut samples = Vec::with_capacity(repetitions);
    for _ in 0..repetitions {
        let start = Instant::now();
        std::hint::black_box(transform.analyze(alm)?);
        samples.push(start.elapsed().as_secs_f64());
    }
    Ok(Timing::from_samples(samples))
}

/// Times `analyze` on random coefficients for every requested bandwidth.
pub fn bench(config: &BenchConfig) -> Result<Vec<BenchRow>> {
    if config.repetitions == 0 {
        return Err(Error::Validation("repetitions must be at least 1".into()));
    }
    if let Some(&l) = config
        .l_max
        .iter()
        .find(|&&l| l > crate::legendre::MAX_DEGREE)
    {
        return Err(Error::Domain(format!(
            "l_max={l} exceeds supported maximum {}",
            crate::legendre::MAX_DEGREE
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut rows = Vec::with_capacity(config.l_max.len());
    for &l_max in &config.l_max {
        let alm = HarmonicCoeffs::random(l_max, &mut rng);
        let plan = make_plan(config.b, l_max)?;
        let cold = NeedletTransform::new(&plan, IshtMethod::Fast, IshtOptions::default())?;
        let cached = NeedletTransform::new(
            &plan,
            IshtMethod::Fast,
            IshtOptions {
                cache_legendre: true,
                ..IshtOptions::default()
            },
        )?;
        let naive = if l_max <= config.naive_limit {
            let t = NeedletTransform::new(&plan, IshtMethod::Naive, IshtOptions::default())?;
            Some(time_analyze(&t, &alm, config.repetitions)?)
        } else {
            None
        };
        rows.push(BenchRow {
            l_max,
            n_coeffs: plan.sizes().iter().sum(),
            cold: time_analyze(&cold, &alm, config.repetitions)?,
            cached: time_analyze(&cached, &alm, config.repetitions)?,
            naive,
        });
    }
    Ok(rows)
}

/// Whitespace-separated table with a header line; missing values print as `-`.
pub fn format_table(rows: &[BenchRow]) -> String {
    let mut out = String::from(
        "# lmax coeffs cold_median cold_spread cached_median cached_spread naive_median naive_spread speedup\n",
    );
    for r in rows {
        let (nm, ns, sp) = match (r.naive, r.speedup()) {
            (Some(n), Some(s)) => (fmt_f64(n.median), fmt_f64(n.spread), fmt_f64(s)),
            _ => ("-".into(), "-".into(), "-".into()),
        };
        out.push_str(&format!(
            "{} {} {} {} {} {} {nm} {ns} {sp}\n",
            r.l_max,
            r.n_coeffs,
            fmt_f64(r.cold.median),
            fmt_f64(r.cold.spread),
            fmt_f64(r.cached.median),
            fmt_f64(r.cached.spread),
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_row_per_bandwidth() {
        let rows = bench(&BenchConfig {
            l_max: vec![4, 8],
            repetitions: 1,
            naive_limit: 4,
            ..BenchConfig::default()
        })
        .unwrap();
        assert_eq!(rows.iter().map(|r| r.l_max).collect::<Vec<_>>(), [4, 8]);
        assert!(rows[0].naive.is_some() && rows[1].naive.is_none());
        let table = format_table(&rows);
        assert_eq!(table.lines().count(), 3);
        assert!(table.lines().nth(2).unwrap().ends_with(" - - -"));
    }

    #[test]
    fn zero_repetitions_rejected() {
        let err = bench(&BenchConfig {
            repetitions: 0,
            ..BenchConfig::default()
        })
        .unwrap_err();
        assert_eq!(err.kind(), "validation");
    }

    #[test]
    fn median_and_spread() {
        let t = Timing::from_samples(vec![3.0, 1.0, 2.0, 10.0]);
        assert_eq!(t.median, 2.5);
        assert_eq!(t.spread, 9.0);
    }
}
