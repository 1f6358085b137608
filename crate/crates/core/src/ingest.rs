//! Covariance reconstruction from joint quadrature samples, bootstrap error
//! bars, a higher-moment Gaussianity check and a seeded synthetic sampler.

use nalgebra::{Cholesky, Matrix4, Vector4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_1_SQRT_2;

use crate::criteria::ppt_nu_min;
use crate::error::{Error, Result};
use crate::state::{CovarianceMatrix, DEFAULT_PHYSICALITY_TOL};

pub const DEFAULT_MIN_SAMPLES: usize = 16;
pub const DEFAULT_BOOTSTRAP_RESAMPLES: usize = 200;
pub const DEFAULT_SEED: u64 = 0x5eed;
pub const GAUSSIANITY_MIN_SAMPLES: usize = 100;
pub const DEFAULT_GAUSSIANITY_SIGMAS: f64 = 5.0;

/// Time-ordered joint samples `(p1, q1, p2, q2)` in SQL units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRecord {
    pub samples: Vec<[f64; 4]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl QuadratureRecord {
    pub fn new(samples: Vec<[f64; 4]>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::TooFewSamples {
                got: samples.len(),
                need: 2,
            });
        }
        if let Some(index) = samples
            .iter()
            .position(|s| s.iter().any(|x| !x.is_finite()))
        {
            return Err(Error::NonFiniteSample { index });
        }
        Ok(QuadratureRecord {
            samples,
            label: None,
        })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Unbiased sample covariance (divisor `N - 1`) of the rows picked by
/// `indices`. The result is symmetric by construction.
fn sample_covariance<I>(samples: &[[f64; 4]], indices: I) -> Matrix4<f64>
where
    I: Iterator<Item = usize> + Clone,
{
    let mut n = 0usize;
    let mut mean = Vector4::zeros();
    for i in indices.clone() {
        mean += Vector4::from(samples[i]);
        n += 1;
    }
    mean /= n as f64;
    let mut acc = Matrix4::zeros();
    for i in indices {
        let d = Vector4::from(samples[i]) - mean;
        for r in 0..4 {
            for c in r..4 {
                acc[(r, c)] += d[r] * d[c];
            }
        }
    }
    for r in 0..4 {
        for c in 0..r {
            acc[(r, c)] = acc[(c, r)];
        }
    }
    acc / (n as f64 - 1.0)
}

pub fn sample_covariance_matrix(record: &QuadratureRecord) -> Matrix4<f64> {
    sample_covariance(&record.samples, 0..record.len())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateOptions {
    pub min_samples: usize,
    pub resamples: usize,
    pub seed: u64,
    pub physicality_tol: f64,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        EstimateOptions {
            min_samples: DEFAULT_MIN_SAMPLES,
            resamples: DEFAULT_BOOTSTRAP_RESAMPLES,
            seed: DEFAULT_SEED,
            physicality_tol: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceEstimate {
    pub matrix: CovarianceMatrix,
    /// Bootstrap standard error of each entry.
    pub std_errors: Matrix4<f64>,
    /// Partially transposed `nu_min` of the point estimate.
    pub nu_min: f64,
    /// Bootstrap standard error of `nu_min`.
    pub nu_min_std_error: f64,
    pub physical: bool,
    pub samples: usize,
    pub resamples: usize,
}

pub fn estimate_covariance(
    record: &QuadratureRecord,
    opts: &EstimateOptions,
) -> Result<CovarianceEstimate> {
    let n = record.len();
    if n < opts.min_samples.max(2) {
        return Err(Error::TooFewSamples {
            got: n,
            need: opts.min_samples.max(2),
        });
    }
    if let Some(index) = record
        .samples
        .iter()
        .position(|s| s.iter().any(|x| !x.is_finite()))
    {
        return Err(Error::NonFiniteSample { index });
    }
    let matrix = CovarianceMatrix::new(sample_covariance_matrix(record))?;
    let nu_min = ppt_nu_min(&matrix)?;

    let resampled: Vec<(Matrix4<f64>, Option<f64>)> = (0..opts.resamples)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(b as u64);
            let plan: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let m = sample_covariance(&record.samples, plan.iter().copied());
            let nu = CovarianceMatrix::new(m)
                .ok()
                .and_then(|v| ppt_nu_min(&v).ok());
            (m, nu)
        })
        .collect();

    let std_errors = if resampled.len() >= 2 {
        let b = resampled.len() as f64;
        let mean = resampled.iter().fold(Matrix4::zeros(), |acc, (m, _)| acc + m) / b;
        let var = resampled.iter().fold(Matrix4::zeros(), |acc, (m, _)| {
            acc + (m - mean).component_mul(&(m - mean))
        }) / (b - 1.0);
        var.map(f64::sqrt)
    } else {
        Matrix4::from_element(f64::NAN)
    };
    let nus: Vec<f64> = resampled.iter().filter_map(|(_, nu)| *nu).collect();
    let nu_min_std_error = std_dev(&nus);

    Ok(CovarianceEstimate {
        matrix,
        std_errors,
        nu_min,
        nu_min_std_error,
        physical: matrix.is_physical(opts.physicality_tol),
        samples: n,
        resamples: opts.resamples,
    })
}

fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return f64::NAN;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Largest absolute entrywise difference.
pub fn max_entry_error(a: &Matrix4<f64>, b: &Matrix4<f64>) -> f64 {
    (a - b).amax()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    P1,
    Q1,
    P2,
    Q2,
    PMinus,
    PPlus,
    QPlus,
    QMinus,
}

impl Channel {
    pub const ALL: [Channel; 8] = [
        Channel::P1,
        Channel::Q1,
        Channel::P2,
        Channel::Q2,
        Channel::PMinus,
        Channel::PPlus,
        Channel::QPlus,
        Channel::QMinus,
    ];

    pub fn value(self, s: &[f64; 4]) -> f64 {
        match self {
            Channel::P1 => s[0],
            Channel::Q1 => s[1],
            Channel::P2 => s[2],
            Channel::Q2 => s[3],
            Channel::PMinus => (s[0] - s[2]) * FRAC_1_SQRT_2,
            Channel::PPlus => (s[0] + s[2]) * FRAC_1_SQRT_2,
            Channel::QPlus => (s[1] + s[3]) * FRAC_1_SQRT_2,
            Channel::QMinus => (s[1] - s[3]) * FRAC_1_SQRT_2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentStats {
    pub channel: Channel,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianityReport {
    pub samples: usize,
    pub skewness_threshold: f64,
    pub kurtosis_threshold: f64,
    pub channels: Vec<MomentStats>,
    pub pass: bool,
}

/// Standardized third moment and excess fourth moment of `xs`.
pub fn skewness_and_excess_kurtosis(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let (n, sum) = xs.clone().fold((0usize, 0.0), |(n, s), x| (n + 1, s + x));
    let mean = sum / n as f64;
    let (m2, m3, m4) = xs.fold((0.0, 0.0, 0.0), |(m2, m3, m4), x| {
        let d = x - mean;
        let d2 = d * d;
        (m2 + d2, m3 + d2 * d, m4 + d2 * d2)
    });
    let nf = n as f64;
    let (m2, m3, m4) = (m2 / nf, m3 / nf, m4 / nf);
    (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
}

/// Skewness and excess kurtosis of every quadrature and EPR combination
/// against `sigmas` times their asymptotic standard errors `sqrt(6/N)` and
/// `sqrt(24/N)`.
pub fn gaussianity_check(record: &QuadratureRecord, sigmas: f64) -> Result<GaussianityReport> {
    let n = record.len();
    if n < GAUSSIANITY_MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            got: n,
            need: GAUSSIANITY_MIN_SAMPLES,
        });
    }
    let nf = n as f64;
    let skewness_threshold = sigmas * (6.0 / nf).sqrt();
    let kurtosis_threshold = sigmas * (24.0 / nf).sqrt();
    let channels: Vec<MomentStats> = Channel::ALL
        .iter()
        .map(|&channel| {
            let (skewness, excess_kurtosis) =
                skewness_and_excess_kurtosis(record.samples.iter().map(|s| channel.value(s)));
            MomentStats {
                channel,
                skewness,
                excess_kurtosis,
                pass: skewness.abs() <= skewness_threshold
                    && excess_kurtosis.abs() <= kurtosis_threshold,
            }
        })
        .collect();
    let pass = channels.iter().all(|c| c.pass);
    Ok(GaussianityReport {
        samples: n,
        skewness_threshold,
        kurtosis_threshold,
        channels,
        pass,
    })
}

/// `n` zero-mean Gaussian samples with covariance `v`, bit-reproducible for
/// a given `(v, n, seed)`.
pub fn synthesize_record(v: &CovarianceMatrix, n: usize, seed: u64) -> Result<QuadratureRecord> {
    v.ensure_physical(DEFAULT_PHYSICALITY_TOL)?;
    if n == 0 {
        return Err(Error::TooFewSamples { got: 0, need: 1 });
    }
    let l = Cholesky::new(*v.matrix())
        .ok_or(Error::NotPositiveDefinite)?
        .l();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = (0..n)
        .map(|_| {
            let z = Vector4::from_fn(|_, _| rng.sample::<f64, _>(StandardNormal));
            let x = l * z;
            [x[0], x[1], x[2], x[3]]
        })
        .collect();
    Ok(QuadratureRecord {
        samples,
        label: None,
    })
}
