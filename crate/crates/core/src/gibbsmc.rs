//! Monte Carlo over the Gaussian Gibbs measure on a finite-dimensional cylinder.
//!
//! A point u of the cylinder C^n is stored as interleaved reals
//! (q_1, p_1, q_2, p_2, ...), and a test vector f = alpha + i mu pairs with it
//! through <f, u> = sum alpha_k q_k + mu_k p_k. Under the Gibbs measure every
//! coordinate of mode k is normal with variance 1/(beta lambda_k).

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianMeasureSpec {
    pub eigenvalues: Vec<f64>,
    pub beta: f64,
}

impl GaussianMeasureSpec {
    pub fn new(eigenvalues: Vec<f64>, beta: f64) -> Result<Self> {
        let s = GaussianMeasureSpec { eigenvalues, beta };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.eigenvalues.is_empty() {
            return Err(Error::InvalidSpec("measure needs at least one mode".into()));
        }
        if let Some(l) = self.eigenvalues.iter().find(|l| !(**l > 0.0) || !l.is_finite()) {
            return Err(Error::InvalidSpec(format!("eigenvalues must be positive, got {l}")));
        }
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return Err(Error::InvalidSpec(format!("beta must be positive, got {}", self.beta)));
        }
        Ok(())
    }

    /// Complex dimension n of the cylinder.
    pub fn modes(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn variance(&self, k: usize) -> f64 {
        1.0 / (self.beta * self.eigenvalues[k])
    }

    /// theta(f) = exp(-(1/2 beta) <f, H^{-1} f>).
    pub fn characteristic(&self, f: &ModeCoefficients) -> Result<f64> {
        f.check(self.modes())?;
        Ok((-0.5 * (0..self.modes()).map(|k| f.norm_sqr(k) * self.variance(k)).sum::<f64>()).exp())
    }
}

/// Coefficients (alpha_k, mu_k) of a vector in C^n.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeCoefficients {
    pub alpha: Vec<f64>,
    pub mu: Vec<f64>,
}

impl ModeCoefficients {
    pub fn zero(n: usize) -> Self {
        ModeCoefficients { alpha: vec![0.0; n], mu: vec![0.0; n] }
    }

    /// Unit vector along q_k.
    pub fn q_unit(n: usize, k: usize) -> Self {
        let mut c = Self::zero(n);
        c.alpha[k] = 1.0;
        c
    }

    /// Unit vector along p_k.
    pub fn p_unit(n: usize, k: usize) -> Self {
        let mut c = Self::zero(n);
        c.mu[k] = 1.0;
        c
    }

    fn check(&self, n: usize) -> Result<()> {
        for len in [self.alpha.len(), self.mu.len()] {
            if len != n {
                return Err(Error::DimensionMismatch { expected: n, got: len });
            }
        }
        Ok(())
    }

    fn norm_sqr(&self, k: usize) -> f64 {
        self.alpha[k] * self.alpha[k] + self.mu[k] * self.mu[k]
    }

    /// <f, u> for an interleaved sample row.
    pub fn pair(&self, u: &[f64]) -> f64 {
        self.alpha.iter().zip(&self.mu).zip(u.chunks_exact(2)).map(|((a, m), qp)| a * qp[0] + m * qp[1]).sum()
    }

    /// Re<i phi1, phi2> = Im<phi1, phi2>.
    pub fn symplectic(&self, other: &ModeCoefficients) -> f64 {
        (0..self.alpha.len()).map(|k| self.alpha[k] * other.mu[k] - self.mu[k] * other.alpha[k]).sum()
    }
}

/// Row-major sample matrix, one interleaved (q, p) row per draw.
#[derive(Debug, Clone, PartialEq)]
pub struct Samples {
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Samples {
    pub fn rows(&self) -> usize {
        self.data.len().checked_div(self.cols).unwrap_or(0)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.cols)
    }
}

/// `count` independent draws. Draw i uses its own ChaCha8 stream keyed by (seed, i)
/// and consumes coordinates in order, so results do not depend on scheduling and the
/// first 2m columns reproduce the m-mode measure.
pub fn sample(spec: &GaussianMeasureSpec, count: usize, seed: u64) -> Result<Samples> {
    spec.validate()?;
    if count == 0 {
        return Err(Error::InvalidSpec("sample count must be positive".into()));
    }
    let cols = 2 * spec.modes();
    let sd: Vec<f64> = (0..spec.modes()).map(|k| spec.variance(k).sqrt()).collect();
    let mut data = vec![0.0; count * cols];
    data.par_chunks_mut(cols).enumerate().for_each(|(i, row)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        for (j, x) in row.iter_mut().enumerate() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *x = sd[j / 2] * z;
        }
    });
    Ok(Samples { cols, data })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    #[serde(with = "crate::weyl::complex_pair")]
    pub estimate: Complex64,
    pub stderr: f64,
}

/// Sample mean with its jackknife standard error (for the mean this is s / sqrt(n)).
fn mean_with_error(values: &[Complex64]) -> McEstimate {
    let n = values.len();
    let mean = values.iter().sum::<Complex64>() / n as f64;
    if n < 2 {
        return McEstimate { estimate: mean, stderr: f64::INFINITY };
    }
    let ss: f64 = values.iter().map(|v| (v - mean).norm_sqr()).sum();
    McEstimate { estimate: mean, stderr: (ss / (n as f64 * (n as f64 - 1.0))).sqrt() }
}

fn check_samples(spec: &GaussianMeasureSpec, samples: &Samples) -> Result<()> {
    if samples.cols != 2 * spec.modes() {
        return Err(Error::DimensionMismatch { expected: 2 * spec.modes(), got: samples.cols });
    }
    Ok(())
}

/// Monte Carlo estimate of theta(f) = E[e^{i <f, u>}].
pub fn characteristic_mc(spec: &GaussianMeasureSpec, f: &ModeCoefficients, samples: &Samples) -> Result<McEstimate> {
    f.check(spec.modes())?;
    check_samples(spec, samples)?;
    let values: Vec<Complex64> = samples.iter_rows().map(|u| Complex64::from_polar(1.0, f.pair(u))).collect();
    Ok(mean_with_error(&values))
}

/// <phi, X(u)> with X(u) = iHu: sum lambda_k (mu_k q_k - alpha_k p_k).
pub fn vector_field_pairing(spec: &GaussianMeasureSpec, phi: &ModeCoefficients, u: &[f64]) -> f64 {
    (0..spec.modes())
        .map(|k| spec.eigenvalues[k] * (phi.mu[k] * u[2 * k] - phi.alpha[k] * u[2 * k + 1]))
        .sum()
}

/// Monte Carlo estimate of
/// Re<i phi1, phi2> E[e^{i<phi2,u>}] - i beta E[<phi1, X(u)> e^{i<phi2,u>}],
/// which vanishes for the Gibbs measure.
pub fn cylindrical_kms_mc(
    spec: &GaussianMeasureSpec,
    phi1: &ModeCoefficients,
    phi2: &ModeCoefficients,
    samples: &Samples,
) -> Result<McEstimate> {
    phi1.check(spec.modes())?;
    phi2.check(spec.modes())?;
    check_samples(spec, samples)?;
    let s = phi1.symplectic(phi2);
    let i_beta = Complex64::new(0.0, spec.beta);
    let values: Vec<Complex64> = samples
        .iter_rows()
        .map(|u| {
            let e = Complex64::from_polar(1.0, phi2.pair(u));
            s * e - i_beta * vector_field_pairing(spec, phi1, u) * e
        })
        .collect();
    Ok(mean_with_error(&values))
}

/// Gaussian integration by parts: E[<phi1, X(u)> e^{i<phi2,u>}] = (i/beta) (-Re<i phi1, phi2>) theta(phi2).
pub fn kms_moment_closed_form(spec: &GaussianMeasureSpec, phi1: &ModeCoefficients, phi2: &ModeCoefficients) -> Result<Complex64> {
    let theta = spec.characteristic(phi2)?;
    phi1.check(spec.modes())?;
    Ok(Complex64::new(0.0, -phi1.symplectic(phi2) / spec.beta) * theta)
}
