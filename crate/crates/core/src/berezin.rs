//! Schrödinger-representation cross-check of the quantization map.
//!
//! Wavefunctions on R^l are gaussian mixtures (`TestFunction` with nu = l), so every
//! matrix element of e^{i(lambda.X + mu.P)} is closed form. The Berezin side is the
//! phase-space integral
//!   int dq dp / (2 pi h)^l e^{i(lambda.q + mu.p)} <phi, psi^{q,p}> <psi^{q,p}, psi>,
//! done by tensor Gauss–Hermite quadrature. The integrand factorizes over axes for
//! each pair of mixture terms, so only 2-D rules are ever needed.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;
use crate::testfn::{GaussTerm, TestFunction};


/// psi^{q,p}_h(x) = (h pi)^{-l/4} e^{-i q.p/(2h)} e^{i p.x/h} e^{-(x - q)^2/(2h)}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherentState {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub h: f64,
}

impl CoherentState {
    pub fn new(q: Vec<f64>, p: Vec<f64>, h: f64) -> Result<Self> {
        if q.len() != p.len() {
            return Err(Error::DimensionMismatch { expected: q.len(), got: p.len() });
        }
        if !(h > 0.0) {
            return Err(Error::ZeroHbar);
        }
        Ok(CoherentState { q, p, h })
    }

    pub fn vacuum(l: usize, h: f64) -> Self {
        CoherentState { q: vec![0.0; l], p: vec![0.0; l], h }
    }

    pub fn wavefunction(&self) -> TestFunction {
        let l = self.q.len();
        let qp: f64 = self.q.iter().zip(&self.p).map(|(q, p)| q * p).sum();
        let amp = Complex64::from_polar((self.h * PI).powf(-(l as f64) / 4.0), -qp / (2.0 * self.h));
        TestFunction {
            nu: l,
            terms: vec![GaussTerm::new(amp, self.q.clone(), self.h.sqrt(), self.p.iter().map(|p| p / self.h).collect())],
        }
    }
}

fn check_vectors(lambda: &[f64], mu: &[f64], phi: &TestFunction, psi: &TestFunction) -> Result<()> {
    let l = phi.nu;
    for len in [lambda.len(), mu.len(), psi.nu] {
        if len != l {
            return Err(Error::DimensionMismatch { expected: l, got: len });
        }
    }
    Ok(())
}

/// e^{i(lambda.X + mu.P)} psi with P = -ih d/dx:
/// (U psi)(y) = e^{i lambda.y} e^{i h lambda.mu/2} psi(y + h mu).
pub fn weyl_operator_apply(lambda: &[f64], mu: &[f64], psi: &TestFunction, h: f64) -> TestFunction {
    let lm: f64 = lambda.iter().zip(mu).map(|(a, b)| a * b).sum();
    TestFunction {
        nu: psi.nu,
        terms: psi
            .terms
            .iter()
            .map(|t| {
                let km: f64 = t.wave.iter().zip(mu).map(|(k, m)| k * m).sum();
                GaussTerm::new(
                    t.amp * Complex64::from_polar(1.0, h * km + 0.5 * h * lm),
                    t.center.iter().zip(mu).map(|(c, m)| c - h * m).collect(),
                    t.sigma,
                    t.wave.iter().zip(lambda).map(|(k, l)| k + l).collect(),
                )
            })
            .collect(),
    }
}

/// <phi, e^{i(lambda.X + mu.P)} psi>.
pub fn schrodinger_matrix_element(lambda: &[f64], mu: &[f64], phi: &TestFunction, psi: &TestFunction, h: f64) -> Result<Complex64> {
    check_vectors(lambda, mu, phi, psi)?;
    if !(h > 0.0) {
        return Err(Error::ZeroHbar);
    }
    phi.inner_product(&weyl_operator_apply(lambda, mu, psi, h))
}

/// e^{-h(lambda^2 + mu^2)/4} <phi, e^{i(lambda.X + mu.P)} psi>: the matrix element of
/// the quantized Weyl symbol.
pub fn quantized_matrix_element(lambda: &[f64], mu: &[f64], phi: &TestFunction, psi: &TestFunction, h: f64) -> Result<Complex64> {
    let n2: f64 = lambda.iter().chain(mu).map(|x| x * x).sum();
    Ok((-0.25 * h * n2).exp() * schrodinger_matrix_element(lambda, mu, phi, psi, h)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseSpaceGrid {
    /// Gauss–Hermite nodes per phase-space axis.
    pub nodes: usize,
    /// Largest accepted change under node doubling, relative to ||phi|| ||psi||.
    pub tol: f64,
}

impl Default for PhaseSpaceGrid {
    fn default() -> Self {
        PhaseSpaceGrid { nodes: 80, tol: 1e-10 }
    }
}

/// <e^{i k1 x} e^{-(x-c1)^2/(2 a)}, e^{i k2 x} e^{-(x-c2)^2/(2 b)}> on R.
fn overlap_1d(k1: f64, c1: f64, a: f64, k2: f64, c2: f64, b: f64) -> Complex64 {
    let prec = 1.0 / a + 1.0 / b;
    let m = (c1 / a + c2 / b) / prec;
    let kappa = k2 - k1;
    let d = c1 - c2;
    (2.0 * PI / prec).sqrt() * Complex64::new(-kappa * kappa / (2.0 * prec) - d * d / (2.0 * (a + b)), kappa * m).exp()
}

struct Rule {
    x: Vec<f64>,
    /// w_j e^{x_j^2}
    w: Vec<f64>,
}

fn hermite_rule(n: usize) -> Rule {
    let (x, w) = quad::gauss_hermite(n);
    let w = x.iter().zip(&w).map(|(x, w)| w * (x * x).exp()).collect();
    Rule { x, w }
}

/// One axis of the phase-space integral for the term pair (a, b): unit amplitudes,
/// coherent states with the (h pi)^{-1/4} e^{-iqp/(2h)} prefactor.
fn axis_integral(rule: &Rule, lambda: f64, mu: f64, a: (f64, f64, f64), b: (f64, f64, f64), h: f64) -> Complex64 {
    let (ka, ca, sa) = a;
    let (kb, cb, sb) = b;
    // envelope of |<phi_a, psi^{q,p}>| |<psi^{q,p}, psi_b>|
    let (wa, wb) = (1.0 / (h + sa), 1.0 / (h + sb));
    let wq = wa + wb;
    let q0 = (ca * wa + cb * wb) / wq;
    let (va, vb) = (h * sa / (h + sa) / (h * h), h * sb / (h + sb) / (h * h));
    let wp = va + vb;
    let p0 = (h * ka * va + h * kb * vb) / wp;
    // scale twice the envelope width so the remainder decays like e^{-x^2}
    let (sq, sp) = (2.0 * (1.0 / wq).sqrt(), 2.0 * (1.0 / wp).sqrt());
    let norm = (h * PI).powf(-0.5) / (2.0 * PI * h);
    let mut total = Complex64::new(0.0, 0.0);
    for (xi, wi) in rule.x.iter().zip(&rule.w) {
        let q = q0 + sq * xi;
        let mut row = Complex64::new(0.0, 0.0);
        for (yj, wj) in rule.x.iter().zip(&rule.w) {
            let p = p0 + sp * yj;
            // the coherent phases e^{-iqp/(2h)} cancel between the two overlaps
            let left = overlap_1d(ka, ca, sa, p / h, q, h);
            let right = overlap_1d(p / h, q, h, kb, cb, sb);
            row += wj * Complex64::from_polar(1.0, lambda * q + mu * p) * left * right;
        }
        total += wi * row;
    }
    total * sq * sp * norm
}

fn quad_once(lambda: &[f64], mu: &[f64], phi: &TestFunction, psi: &TestFunction, h: f64, rule: &Rule) -> Complex64 {
    let pairs: Vec<(&GaussTerm, &GaussTerm)> = phi.terms.iter().flat_map(|a| psi.terms.iter().map(move |b| (a, b))).collect();
    let parts: Vec<Complex64> = pairs
        .par_iter()
        .map(|(a, b)| {
            let mut v = a.amp.conj() * b.amp;
            for i in 0..phi.nu {
                v *= axis_integral(
                    rule,
                    lambda[i],
                    mu[i],
                    (a.wave[i], a.center[i], a.sigma * a.sigma),
                    (b.wave[i], b.center[i], b.sigma * b.sigma),
                    h,
                );
            }
            v
        })
        .collect();
    parts.iter().sum()
}

/// Phase-space quadrature of the Berezin matrix element <phi, Q^B_h(e^{i(lambda.q + mu.p)}) psi>.
pub fn berezin_matrix_element_quad(
    lambda: &[f64],
    mu: &[f64],
    phi: &TestFunction,
    psi: &TestFunction,
    h: f64,
    grid: PhaseSpaceGrid,
) -> Result<Complex64> {
    check_vectors(lambda, mu, phi, psi)?;
    if !(h > 0.0) {
        return Err(Error::ZeroHbar);
    }
    if phi.nu > 2 {
        return Err(Error::InvalidSpec(format!("phase-space quadrature supports l <= 2, got {}", phi.nu)));
    }
    let coarse = quad_once(lambda, mu, phi, psi, h, &hermite_rule(grid.nodes));
    let fine = quad_once(lambda, mu, phi, psi, h, &hermite_rule(2 * grid.nodes));
    let scale = (phi.norm_sqr() * psi.norm_sqr()).sqrt();
    let diff = (coarse - fine).norm();
    if diff > grid.tol * scale.max(1e-300) {
        return Err(Error::QuadratureFailure(format!(
            "phase-space quadrature changed by {diff:e} under node doubling"
        )));
    }
    Ok(fine)
}

/// A nonnegative phase-space symbol |sum_j c_j e^{i(lambda_j.q + mu_j.p)}|^2
/// (a constant is the one-term case with lambda = mu = 0).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrigSquareSymbol {
    pub terms: Vec<TrigTerm>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrigTerm {
    #[serde(with = "crate::weyl::complex_pair")]
    pub coeff: Complex64,
    pub lambda: Vec<f64>,
    pub mu: Vec<f64>,
}

impl TrigSquareSymbol {
    pub fn constant(l: usize, c: f64) -> Self {
        TrigSquareSymbol {
            terms: vec![TrigTerm { coeff: Complex64::new(c.sqrt(), 0.0), lambda: vec![0.0; l], mu: vec![0.0; l] }],
        }
    }

    pub fn zero() -> Self {
        TrigSquareSymbol { terms: Vec::new() }
    }

    pub fn evaluate(&self, q: &[f64], p: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let phase: f64 = t.lambda.iter().zip(q).map(|(a, b)| a * b).sum::<f64>()
                    + t.mu.iter().zip(p).map(|(a, b)| a * b).sum::<f64>();
                t.coeff * Complex64::from_polar(1.0, phase)
            })
            .sum::<Complex64>()
            .norm_sqr()
    }

    /// Expansion into plane waves: sum_{j,k} conj(c_j) c_k e^{i((lambda_k - lambda_j).q + (mu_k - mu_j).p)}.
    fn plane_waves(&self) -> Vec<(Complex64, Vec<f64>, Vec<f64>)> {
        let mut out = Vec::with_capacity(self.terms.len() * self.terms.len());
        for a in &self.terms {
            for b in &self.terms {
                let dl = b.lambda.iter().zip(&a.lambda).map(|(x, y)| x - y).collect();
                let dm = b.mu.iter().zip(&a.mu).map(|(x, y)| x - y).collect();
                out.push((a.coeff.conj() * b.coeff, dl, dm));
            }
        }
        out
    }
}

/// <v, Q^B_h(symbol) v> by phase-space quadrature.
pub fn berezin_quadratic_form(symbol: &TrigSquareSymbol, v: &TestFunction, h: f64, grid: PhaseSpaceGrid) -> Result<f64> {
    let mut total = Complex64::new(0.0, 0.0);
    for (c, lambda, mu) in symbol.plane_waves() {
        total += c * berezin_matrix_element_quad(&lambda, &mu, v, v, h, grid)?;
    }
    Ok(total.re)
}

/// Minimum of <v, Q^B_h(symbol) v> over the supplied vectors.
pub fn berezin_positivity_probe(symbol: &TrigSquareSymbol, vectors: &[TestFunction], h: f64, grid: PhaseSpaceGrid) -> Result<f64> {
    let values: Vec<f64> = vectors
        .iter()
        .map(|v| berezin_quadratic_form(symbol, v, h, grid))
        .collect::<Result<_>>()?;
    Ok(values.into_iter().fold(f64::INFINITY, f64::min))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BerezinCheck {
    #[serde(with = "crate::weyl::complex_pair")]
    pub quad: Complex64,
    #[serde(with = "crate::weyl::complex_pair")]
    pub closed_form: Complex64,
    pub rel_err: f64,
}

/// Quadrature against the closed form for a pair of coherent states.
pub fn verify(lambda: &[f64], mu: &[f64], phi: &CoherentState, psi: &CoherentState, grid: PhaseSpaceGrid) -> Result<BerezinCheck> {
    if phi.h != psi.h {
        return Err(Error::MismatchedHbar(phi.h, psi.h));
    }
    let (a, b) = (phi.wavefunction(), psi.wavefunction());
    let quad = berezin_matrix_element_quad(lambda, mu, &a, &b, phi.h, grid)?;
    let closed_form = quantized_matrix_element(lambda, mu, &a, &b, phi.h)?;
    let rel_err = (quad - closed_form).norm() / closed_form.norm().max(1e-300);
    Ok(BerezinCheck { quad, closed_form, rel_err })
}


#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coherent_state_normalized() {
        for l in 1..=2 {
            let c = CoherentState::new(vec![0.3; l], vec![-1.1; l], 0.7).unwrap();
            assert!((c.wavefunction().norm_sqr() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn overlap_1d_matches_testfn() {
        let a = TestFunction::new(1, vec![GaussTerm::new(Complex64::new(1.0, 0.0), vec![0.4], 0.8, vec![1.3])]).unwrap();
        let b = TestFunction::new(1, vec![GaussTerm::new(Complex64::new(1.0, 0.0), vec![-0.2], 1.1, vec![-0.5])]).unwrap();
        let v = overlap_1d(1.3, 0.4, 0.64, -0.5, -0.2, 1.21);
        assert!((v - a.inner_product(&b).unwrap()).norm() < 1e-15);
    }

    #[test]
    fn schrodinger_examples() {
        let psi = CoherentState::vacuum(1, 1.0).wavefunction();
        let v = schrodinger_matrix_element(&[1.0], &[0.0], &psi, &psi, 1.0).unwrap();
        assert!((v - Complex64::new((-0.25f64).exp(), 0.0)).norm() < 1e-15);
        let phi = CoherentState::new(vec![0.5], vec![0.2], 1.0).unwrap().wavefunction();
        let id = schrodinger_matrix_element(&[0.0], &[0.0], &phi, &psi, 1.0).unwrap();
        assert!((id - phi.inner_product(&psi).unwrap()).norm() < 1e-15);
        let u = schrodinger_matrix_element(&[1.7], &[-0.9], &phi, &psi, 1.0).unwrap();
        assert!(u.norm() <= 1.0 + 1e-14);
    }

    #[test]
    fn vacuum_berezin_value() {
        let psi = CoherentState::vacuum(1, 1.0);
        let c = verify(&[1.0], &[0.0], &psi, &psi, PhaseSpaceGrid::default()).unwrap();
        assert!((c.quad.re - (-0.5f64).exp()).abs() < 1e-10);
        assert!(c.rel_err < 1e-10);
    }

    #[test]
    fn resolution_of_identity() {
        let phi = CoherentState::new(vec![0.3, -0.2], vec![0.1, 0.5], 0.8).unwrap().wavefunction();
        let psi = TestFunction::new(
            2,
            vec![GaussTerm::new(Complex64::new(0.7, 0.2), vec![0.0, 0.4], 1.3, vec![0.6, -0.2])],
        )
        .unwrap();
        let q = berezin_matrix_element_quad(&[0.0, 0.0], &[0.0, 0.0], &phi, &psi, 0.8, PhaseSpaceGrid::default()).unwrap();
        assert!((q - phi.inner_product(&psi).unwrap()).norm() < 1e-8);
    }

    #[test]
    fn positivity_stock_symbols() {
        let v = CoherentState::new(vec![0.1], vec![0.4], 1.0).unwrap().wavefunction();
        let one = berezin_quadratic_form(&TrigSquareSymbol::constant(1, 1.0), &v, 1.0, PhaseSpaceGrid::default()).unwrap();
        assert!((one - v.norm_sqr()).abs() < 1e-10);
        assert_eq!(berezin_quadratic_form(&TrigSquareSymbol::zero(), &v, 1.0, PhaseSpaceGrid::default()).unwrap(), 0.0);
        let s = TrigSquareSymbol {
            terms: vec![
                TrigTerm { coeff: Complex64::new(1.0, 0.0), lambda: vec![0.0], mu: vec![0.0] },
                TrigTerm { coeff: Complex64::new(1.0, 0.0), lambda: vec![1.0], mu: vec![0.0] },
            ],
        };
        assert!((s.evaluate(&[0.3], &[0.0]) - (2.0 + 2.0 * 0.3f64.cos())).abs() < 1e-14);
        assert!(berezin_positivity_probe(&s, &[v], 1.0, PhaseSpaceGrid::default()).unwrap() >= -1e-8);
    }

    #[test]
    fn h_scaling() {
        let g = PhaseSpaceGrid::default();
        let (lambda, mu, h, s) = (0.8, -0.6, 1.0, 4.0f64);
        let at = |l: f64, m: f64, h: f64| {
            let v = CoherentState::vacuum(1, h);
            verify(&[l], &[m], &v, &v, g).unwrap().quad
        };
        let a = at(lambda, mu, h);
        let b = at(lambda * s.sqrt(), mu * s.sqrt(), h / s);
        assert!((a - b).norm() < 1e-10);
        assert!((a.re - (-0.5 * h * (lambda * lambda + mu * mu)).exp()).abs() < 1e-10);
    }

    #[test]
    fn sweep_and_random_positivity() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let g = PhaseSpaceGrid::default();
        for k in 0..10 {
            let h = [0.5, 1.0, 2.0][k % 3];
            let (l, m) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
            let phi = CoherentState::new(vec![rng.random_range(-1.0..1.0)], vec![rng.random_range(-1.0..1.0)], h).unwrap();
            let psi = CoherentState::new(vec![rng.random_range(-1.0..1.0)], vec![rng.random_range(-1.0..1.0)], h).unwrap();
            assert!(verify(&[l], &[m], &phi, &psi, g).unwrap().rel_err < 1e-6);
        }
        let s = TrigSquareSymbol {
            terms: vec![
                TrigTerm { coeff: Complex64::new(1.0, 0.0), lambda: vec![0.0], mu: vec![0.0] },
                TrigTerm { coeff: Complex64::new(1.0, 0.0), lambda: vec![1.0], mu: vec![0.0] },
            ],
        };
        let vs: Vec<TestFunction> = (0..20)
            .map(|_| {
                TestFunction::new(
                    1,
                    vec![GaussTerm::new(
                        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                        vec![rng.random_range(-2.0..2.0)],
                        rng.random_range(0.3..2.0),
                        vec![rng.random_range(-2.0..2.0)],
                    )],
                )
                .unwrap()
            })
            .collect();
        assert!(berezin_positivity_probe(&s, &vs, 1.0, g).unwrap() >= -1e-8);
    }
}
