//! Gaussian-mixture test functions on R^nu.
//!
//! A term is `amp * exp(i wave.x) * exp(-|x - center|^2 / (2 sigma^2))`.
//! Fourier convention: f^(p) = int e^{-i p.x} f(x) d^nu x, so that
//! int |f^|^2 d^nu p / (2 pi)^nu = ||f||^2.
//!
//! Every quadratic form against a function of H = -Delta/2 reduces to the
//! heat-kernel overlap <f, e^{-tH} g>, which is closed form for Gaussians:
//! H^{-1} and (H - mu)^{-1} are Laplace integrals over t, and the Bose
//! kernel (1 + x)/(1 - x) with x = e^{-a(H - mu)} is a lattice sum in t.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;
use crate::weyl::complex_pair;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussTerm {
    #[serde(with = "complex_pair")]
    pub amp: Complex64,
    pub center: Vec<f64>,
    pub sigma: f64,
    pub wave: Vec<f64>,
}

impl GaussTerm {
    pub fn new(amp: Complex64, center: Vec<f64>, sigma: f64, wave: Vec<f64>) -> Self {
        GaussTerm { amp, center, sigma, wave }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub nu: usize,
    pub terms: Vec<GaussTerm>,
}

impl TestFunction {
    pub fn zero(nu: usize) -> Self {
        TestFunction { nu, terms: Vec::new() }
    }

    pub fn new(nu: usize, terms: Vec<GaussTerm>) -> Result<Self> {
        let f = TestFunction { nu, terms };
        f.validate()?;
        Ok(f)
    }

    /// amp * exp(-|x|^2 / (2 sigma^2)).
    pub fn centered_gaussian(nu: usize, amp: f64, sigma: f64) -> Self {
        TestFunction {
            nu,
            terms: vec![GaussTerm::new(Complex64::new(amp, 0.0), vec![0.0; nu], sigma, vec![0.0; nu])],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nu == 0 {
            return Err(Error::InvalidSpec("test function dimension must be positive".into()));
        }
        for t in &self.terms {
            if t.center.len() != self.nu {
                return Err(Error::DimensionMismatch { expected: self.nu, got: t.center.len() });
            }
            if t.wave.len() != self.nu {
                return Err(Error::DimensionMismatch { expected: self.nu, got: t.wave.len() });
            }
            if !(t.sigma > 0.0) || !t.sigma.is_finite() {
                return Err(Error::InvalidSpec(format!("gaussian width must be positive, got {}", t.sigma)));
            }
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.amp == ZERO)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        TestFunction {
            nu: self.nu,
            terms: self
                .terms
                .iter()
                .map(|t| GaussTerm { amp: t.amp * c, ..t.clone() })
                .collect(),
        }
    }

    pub fn add(&self, other: &TestFunction) -> Result<Self> {
        self.check_dim(other)?;
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Ok(TestFunction { nu: self.nu, terms })
    }

    pub fn sub(&self, other: &TestFunction) -> Result<Self> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    fn check_dim(&self, other: &TestFunction) -> Result<()> {
        if self.nu != other.nu {
            return Err(Error::DimensionMismatch { expected: self.nu, got: other.nu });
        }
        Ok(())
    }

    pub fn evaluate(&self, x: &[f64]) -> Complex64 {
        self.terms
            .iter()
            .map(|t| {
                let r2: f64 = x.iter().zip(&t.center).map(|(a, c)| (a - c).powi(2)).sum();
                let phase: f64 = x.iter().zip(&t.wave).map(|(a, w)| a * w).sum();
                t.amp * Complex64::from_polar((-r2 / (2.0 * t.sigma * t.sigma)).exp(), phase)
            })
            .sum()
    }

    pub fn fourier_transform(&self, p: &[f64]) -> Complex64 {
        self.terms
            .iter()
            .map(|t| {
                let s2 = t.sigma * t.sigma;
                let q2: f64 = p.iter().zip(&t.wave).map(|(p, w)| (p - w).powi(2)).sum();
                let phase: f64 = -p.iter().zip(&t.wave).zip(&t.center).map(|((p, w), c)| (p - w) * c).sum::<f64>();
                t.amp
                    * (2.0 * PI * s2).powf(self.nu as f64 / 2.0)
                    * Complex64::from_polar((-0.5 * s2 * q2).exp(), phase)
            })
            .sum()
    }

    /// int f(x) d^nu x = f^(0).
    pub fn space_integral(&self) -> Complex64 {
        self.fourier_transform(&vec![0.0; self.nu])
    }

    fn pairs(&self, other: &TestFunction) -> Result<Vec<PairKernel>> {
        self.check_dim(other)?;
        let mut out = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                if a.amp == ZERO || b.amp == ZERO {
                    continue;
                }
                out.push(PairKernel::new(self.nu, a, b));
            }
        }
        Ok(out)
    }

    /// <f, g>, antilinear in f.
    pub fn inner_product(&self, other: &TestFunction) -> Result<Complex64> {
        Ok(self.pairs(other)?.iter().map(|k| k.heat(0.0)).sum())
    }

    pub fn norm_sqr(&self) -> f64 {
        self.inner_product(self).map(|z| z.re).unwrap_or(0.0)
    }

    /// sigma(f, g) = Im <f, g>.
    pub fn sigma(&self, other: &TestFunction) -> Result<f64> {
        Ok(self.inner_product(other)?.im)
    }

    /// <f, e^{-tH} g>.
    pub fn heat_form(&self, other: &TestFunction, t: f64) -> Result<Complex64> {
        Ok(self.pairs(other)?.iter().map(|k| k.heat(t)).sum())
    }

    /// <f, H g> with H = -Delta/2.
    pub fn ham_form(&self, other: &TestFunction) -> Result<Complex64> {
        Ok(self.pairs(other)?.iter().map(|k| k.heat(0.0) * -k.log_derivative(0.0)).sum())
    }

    /// <f, H^{-1} g> = int (2/p^2) conj(f^) g^ d^nu p / (2 pi)^nu; needs nu >= 3.
    pub fn inv_ham_form(&self, other: &TestFunction) -> Result<Complex64> {
        if self.nu < 3 {
            return Err(Error::DimensionTooLow(self.nu));
        }
        laplace_form(&self.pairs(other)?, 0.0)
    }

    /// <f, H^{-1} f>.
    pub fn inv_ham_quadratic_form(&self) -> Result<f64> {
        Ok(self.inv_ham_form(self)?.re.max(0.0))
    }

    /// <f, (H - mu)^{-1} g> for mu < 0 (any nu), or mu = 0 (nu >= 3).
    pub fn resolvent_form(&self, other: &TestFunction, mu: f64) -> Result<Complex64> {
        if mu > 0.0 {
            return Err(Error::ChemicalPotentialOutOfRange { mu, limit: 0.0 });
        }
        if mu == 0.0 {
            return self.inv_ham_form(other);
        }
        laplace_form(&self.pairs(other)?, mu)
    }

    /// <f, (1 + x)(1 - x)^{-1} f> with x = e^{-a (H - mu)}, a > 0, mu <= 0.
    pub fn bose_form(&self, a: f64, mu: f64) -> Result<f64> {
        if mu > 0.0 {
            return Err(Error::ChemicalPotentialOutOfRange { mu, limit: 0.0 });
        }
        if mu == 0.0 && self.nu < 3 {
            return Err(Error::DimensionTooLow(self.nu));
        }
        if !(a > 0.0) {
            return Err(Error::InvalidSpec(format!("bose form needs a > 0, got {a}")));
        }
        let pairs = self.pairs(self)?;
        if pairs.is_empty() {
            return Ok(0.0);
        }
        let norm: f64 = pairs.iter().map(|k| k.heat(0.0).re).sum();
        let lattice = bose_lattice_sum(&pairs, a, mu)?;
        Ok((norm + 2.0 * lattice).max(0.0))
    }

    /// Overlap <psi_n, f> with the Dirichlet eigenfunction of the box [-L, L]^nu.
    pub fn box_overlap(&self, n: &[u32], half_side: f64) -> Result<Complex64> {
        self.box_overlap_with(n, half_side, 1)
    }

    /// Same as `box_overlap` with the quadrature refined by `refine` (nodes per panel
    /// multiplied by `refine`); used for convergence checks.
    pub fn box_overlap_with(&self, n: &[u32], half_side: f64, refine: usize) -> Result<Complex64> {
        if n.len() != self.nu {
            return Err(Error::DimensionMismatch { expected: self.nu, got: n.len() });
        }
        if n.contains(&0) {
            return Err(Error::InvalidIndex(n.to_vec()));
        }
        let mut total = ZERO;
        for t in &self.terms {
            let mut prod = t.amp;
            for (axis, &k) in n.iter().enumerate() {
                prod *= axis_overlap(t, axis, k, half_side, refine);
                if prod == ZERO {
                    break;
                }
            }
            total += prod;
        }
        Ok(total)
    }

    /// int over [-L, L]^nu of |f|^2.
    pub fn box_norm_sqr(&self, half_side: f64) -> f64 {
        let mut total = ZERO;
        for a in &self.terms {
            for b in &self.terms {
                let mut prod = a.amp.conj() * b.amp;
                for axis in 0..self.nu {
                    prod *= axis_product_integral(a, b, axis, half_side);
                }
                total += prod;
            }
        }
        total.re.max(0.0)
    }
}

/// `plain + (H - shift) dressed`, with H applied symbolically (Fourier multiplier p^2/2).
/// Used for field insertions such as i(H - mu)f without expanding H into new Gaussians.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldFunction {
    pub plain: TestFunction,
    pub dressed: TestFunction,
    pub shift: f64,
}

impl From<TestFunction> for FieldFunction {
    fn from(f: TestFunction) -> Self {
        let nu = f.nu;
        FieldFunction { plain: f, dressed: TestFunction::zero(nu), shift: 0.0 }
    }
}

impl FieldFunction {
    /// (H - shift) f.
    pub fn generated(f: TestFunction, shift: f64) -> Self {
        let nu = f.nu;
        FieldFunction { plain: TestFunction::zero(nu), dressed: f, shift }
    }

    pub fn nu(&self) -> usize {
        self.plain.nu
    }

    pub fn is_plain(&self) -> bool {
        self.dressed.is_zero()
    }

    pub fn scale(&self, c: Complex64) -> Self {
        FieldFunction { plain: self.plain.scale(c), dressed: self.dressed.scale(c), shift: self.shift }
    }

    /// Sum of two field functions; the dressed parts must share the shift.
    pub fn add(&self, other: &FieldFunction) -> Result<Self> {
        let shift = match (self.is_plain(), other.is_plain()) {
            (true, _) => other.shift,
            (_, true) => self.shift,
            _ if self.shift == other.shift => self.shift,
            _ => return Err(Error::DomainViolation("cannot add field functions with different generator shifts".into())),
        };
        Ok(FieldFunction {
            plain: self.plain.add(&other.plain)?,
            dressed: self.dressed.add(&other.dressed)?,
            shift,
        })
    }

    /// int (H - s) d = -s int d, since the Fourier symbol of H vanishes at p = 0.
    pub fn space_integral(&self) -> Complex64 {
        self.plain.space_integral() - self.shift * self.dressed.space_integral()
    }

    /// <u, (H - mu)^{-1} v>. Writing H - s = (H - mu) + (mu - s), every dressed part
    /// either cancels the resolvent or leaves a scalar multiple of it.
    pub fn resolvent_form(&self, other: &FieldFunction, mu: f64) -> Result<Complex64> {
        let r = |a: &TestFunction, b: &TestFunction| -> Result<Complex64> {
            if a.is_zero() || b.is_zero() {
                Ok(ZERO)
            } else {
                a.resolvent_form(b, mu)
            }
        };
        let (p1, d1, e1) = (&self.plain, &self.dressed, mu - self.shift);
        let (p2, d2, e2) = (&other.plain, &other.dressed, mu - other.shift);
        let mut total = r(p1, p2)?;
        if !d2.is_zero() {
            total += p1.inner_product(d2)?;
            if e2 != 0.0 {
                total += e2 * r(p1, d2)?;
            }
        }
        if !d1.is_zero() {
            total += d1.inner_product(p2)?;
            if e1 != 0.0 {
                total += e1 * r(d1, p2)?;
            }
        }
        if !d1.is_zero() && !d2.is_zero() {
            let dd = d1.inner_product(d2)?;
            total += d1.ham_form(d2)? - mu * dd + (e1 + e2) * dd;
            if e1 != 0.0 && e2 != 0.0 {
                total += e1 * e2 * r(d1, d2)?;
            }
        }
        Ok(total)
    }
}

/// Closed-form pieces of conj(f_a^(p)) f_b^(p) for one pair of terms:
/// pref * exp(-A0 p^2 / 2 + B.p + C0).
#[derive(Debug, Clone)]
pub(crate) struct PairKernel {
    nu: usize,
    pref: Complex64,
    a0: f64,
    bb: Complex64,
    c0: Complex64,
}

impl PairKernel {
    fn new(nu: usize, a: &GaussTerm, b: &GaussTerm) -> Self {
        let sa = a.sigma * a.sigma;
        let sb = b.sigma * b.sigma;
        let mut bb = ZERO;
        let mut c0 = ZERO;
        for i in 0..nu {
            let bi = Complex64::new(sa * a.wave[i] + sb * b.wave[i], a.center[i] - b.center[i]);
            bb += bi * bi;
            c0 += Complex64::new(
                -0.5 * (sa * a.wave[i] * a.wave[i] + sb * b.wave[i] * b.wave[i]),
                -a.wave[i] * a.center[i] + b.wave[i] * b.center[i],
            );
        }
        let nuh = nu as f64 / 2.0;
        let pref = a.amp.conj() * b.amp * ((2.0 * PI * sa) * (2.0 * PI * sb)).powf(nuh) / (2.0 * PI).powf(nu as f64);
        PairKernel { nu, pref, a0: sa + sb, bb, c0 }
    }

    /// <f_a, e^{-tH} f_b>.
    fn heat(&self, t: f64) -> Complex64 {
        let a = self.a0 + t;
        self.pref * (2.0 * PI / a).powf(self.nu as f64 / 2.0) * (self.c0 + self.bb / (2.0 * a)).exp()
    }

    /// d/dt log heat(t).
    fn log_derivative(&self, t: f64) -> Complex64 {
        let a = self.a0 + t;
        -(self.nu as f64) / (2.0 * a) - self.bb / (2.0 * a * a)
    }
}

fn heat_sum(pairs: &[PairKernel], t: f64) -> Complex64 {
    pairs.iter().map(|k| k.heat(t)).sum()
}

fn heat_sum_derivative(pairs: &[PairKernel], t: f64) -> Complex64 {
    pairs.iter().map(|k| k.heat(t) * k.log_derivative(t)).sum()
}

fn pair_scale(pairs: &[PairKernel]) -> f64 {
    pairs.iter().map(|k| k.a0).fold(0.0, f64::max).max(1e-12)
}

const FORM_REL_TOL: f64 = 1e-12;

/// int_0^inf e^{mu t} <f, e^{-tH} g> dt = <f, (H - mu)^{-1} g>.
fn laplace_form(pairs: &[PairKernel], mu: f64) -> Result<Complex64> {
    if pairs.is_empty() {
        return Ok(ZERO);
    }
    let mut scale = pair_scale(pairs);
    if mu < 0.0 {
        scale = scale.min(10.0 / -mu).max(1e-12);
    }
    let abs_tol = 1e-15 * heat_sum(pairs, 0.0).norm() * scale;
    quad::integrate_half_line_complex(|t| (mu * t).exp() * heat_sum(pairs, t), scale, FORM_REL_TOL, abs_tol)
}

/// sum_{k >= 1} e^{mu k a} <f, e^{-k a H} f>, by direct summation up to K and
/// Euler–Maclaurin with an integral tail beyond.
fn bose_lattice_sum(pairs: &[PairKernel], a: f64, mu: f64) -> Result<f64> {
    let g = |t: f64| ((mu * t).exp() * heat_sum(pairs, t)).re;
    let dg = |t: f64| ((mu * t).exp() * (mu * heat_sum(pairs, t) + heat_sum_derivative(pairs, t))).re;
    let scale = pair_scale(pairs);
    let g0 = g(0.0).abs();
    // direct summation while the terms are non-negligible or the sum is short
    let k_min = ((5.0 * scale / a).ceil() as usize).max(200);
    let mut sum = 0.0;
    let mut k = 1usize;
    loop {
        let term = g(k as f64 * a);
        if k >= k_min && term.abs() <= 1e-17 * g0 {
            return Ok(sum);
        }
        if k >= k_min && mu == 0.0 || k >= 4 * k_min && k >= 20_000 {
            break;
        }
        sum += term;
        k += 1;
    }
    let t0 = k as f64 * a;
    let tail = quad::integrate_half_line_complex(
        |t| Complex64::new(g(t0 + t), 0.0),
        t0.max(scale),
        FORM_REL_TOL,
        1e-16 * g0 * a,
    )?
    .re;
    let delta = 0.05 * (t0 + scale);
    let d3 = (dg(t0 + delta) - 2.0 * dg(t0) + dg(t0 - delta)) / (delta * delta);
    Ok(sum + tail / a + 0.5 * g(t0) - a / 12.0 * dg(t0) + a.powi(3) / 720.0 * d3)
}

const AXIS_WINDOW: f64 = 10.0;
const PANEL_NODES: usize = 16;

fn axis_window(t: &GaussTerm, axis: usize, half_side: f64) -> Option<(f64, f64)> {
    let lo = (t.center[axis] - AXIS_WINDOW * t.sigma).max(-half_side);
    let hi = (t.center[axis] + AXIS_WINDOW * t.sigma).min(half_side);
    (hi > lo).then_some((lo, hi))
}

fn panels_for(width: f64, sigma: f64, freq: f64) -> usize {
    let len = sigma.min(3.0 / freq.max(1e-300));
    ((width / len).ceil() as usize).max(1)
}

/// 1-D Dirichlet sine mode on [-L, L], normalized: L^{-1/2} sin(pi n (x - L) / (2L)).
pub fn sine_mode(n: u32, half_side: f64, x: f64) -> f64 {
    (PI * n as f64 * (x - half_side) / (2.0 * half_side)).sin() / half_side.sqrt()
}

fn axis_overlap(t: &GaussTerm, axis: usize, n: u32, half_side: f64, refine: usize) -> Complex64 {
    let Some((lo, hi)) = axis_window(t, axis, half_side) else {
        return ZERO;
    };
    let k = PI * n as f64 / (2.0 * half_side);
    let panels = panels_for(hi - lo, t.sigma, k + t.wave[axis].abs());
    let (xs, ws) = quad::composite_legendre(lo, hi, panels, PANEL_NODES * refine);
    let (c, w, s2) = (t.center[axis], t.wave[axis], t.sigma * t.sigma);
    xs.iter()
        .zip(&ws)
        .map(|(&x, &wt)| {
            let g = (-(x - c) * (x - c) / (2.0 * s2)).exp() * sine_mode(n, half_side, x);
            Complex64::from_polar(wt * g, w * x)
        })
        .sum()
}

fn axis_product_integral(a: &GaussTerm, b: &GaussTerm, axis: usize, half_side: f64) -> Complex64 {
    let (Some((lo_a, hi_a)), Some((lo_b, hi_b))) = (axis_window(a, axis, half_side), axis_window(b, axis, half_side))
    else {
        return ZERO;
    };
    let (lo, hi) = (lo_a.max(lo_b), hi_a.min(hi_b));
    if hi <= lo {
        return ZERO;
    }
    let panels = panels_for(hi - lo, a.sigma.min(b.sigma), (a.wave[axis] - b.wave[axis]).abs());
    let (xs, ws) = quad::composite_legendre(lo, hi, panels, PANEL_NODES);
    let (sa, sb) = (a.sigma * a.sigma, b.sigma * b.sigma);
    xs.iter()
        .zip(&ws)
        .map(|(&x, &wt)| {
            let da = x - a.center[axis];
            let db = x - b.center[axis];
            let mag = (-da * da / (2.0 * sa) - db * db / (2.0 * sb)).exp();
            Complex64::from_polar(wt * mag, (b.wave[axis] - a.wave[axis]) * x)
        })
        .sum()
}

/// Per-axis overlap tables of a test function against the box sine modes
/// 1..=cutoff, so that <psi_n, f> = sum_terms amp * prod_axis table[term][axis][n_axis - 1].
#[derive(Debug, Clone)]
pub struct OverlapTable {
    pub nu: usize,
    pub cutoff: u32,
    amps: Vec<Complex64>,
    axes: Vec<Vec<Vec<Complex64>>>,
    /// int_box |f|^2, for the Parseval remainder.
    pub box_norm_sqr: f64,
}

impl OverlapTable {
    pub fn new(f: &TestFunction, half_side: f64, cutoff: u32) -> Self {
        let axes = f
            .terms
            .iter()
            .map(|t| {
                (0..f.nu)
                    .map(|axis| (1..=cutoff).map(|n| axis_overlap(t, axis, n, half_side, 1)).collect())
                    .collect()
            })
            .collect();
        OverlapTable {
            nu: f.nu,
            cutoff,
            amps: f.terms.iter().map(|t| t.amp).collect(),
            axes,
            box_norm_sqr: f.box_norm_sqr(half_side),
        }
    }

    /// <psi_n, f> for 1 <= n_i <= cutoff.
    #[inline]
    pub fn coefficient(&self, n: &[u32]) -> Complex64 {
        let mut total = ZERO;
        for (amp, axes) in self.amps.iter().zip(&self.axes) {
            let mut p = *amp;
            for (axis, &k) in axes.iter().zip(n) {
                p *= axis[(k - 1) as usize];
            }
            total += p;
        }
        total
    }
}
