//! Closed-form quasi-free states on the Weyl algebra.
//!
//! Every implemented state has the form omega(W(f)) = exp(-Q(f)) with a real
//! nonnegative quadratic form Q; the families differ only in Q.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;
use crate::spectrum::{self, BoseFactor, BoxSpectrum, MultiIndex};
use crate::testfn::{FieldFunction, OverlapTable, TestFunction};
use crate::weyl::complex_pair;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Default absolute tolerance on the truncated part of a mode-sum exponent.
pub const DEFAULT_TAIL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StateKind {
    QuantumBoxGibbs,
    QuantumInfVol,
    QuantumCondensate,
    ClassicalBoxGibbs,
    ClassicalInfVol,
    ClassicalCondensate,
}

impl StateKind {
    pub fn is_quantum(self) -> bool {
        matches!(self, StateKind::QuantumBoxGibbs | StateKind::QuantumInfVol | StateKind::QuantumCondensate)
    }

    pub fn is_box(self) -> bool {
        matches!(self, StateKind::QuantumBoxGibbs | StateKind::ClassicalBoxGibbs)
    }

    pub fn is_condensate(self) -> bool {
        matches!(self, StateKind::QuantumCondensate | StateKind::ClassicalCondensate)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSpec {
    pub kind: StateKind,
    pub beta: f64,
    #[serde(default)]
    pub h: f64,
    #[serde(default)]
    pub mu: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_bar: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(rename = "box", default, skip_serializing_if = "Option::is_none")]
    pub box_spec: Option<BoxSpectrum>,
    pub nu: usize,
}

impl StateSpec {
    fn base(kind: StateKind, nu: usize, beta: f64, h: f64, mu: f64) -> Self {
        StateSpec { kind, beta, h, mu, rho_bar: None, alpha: None, box_spec: None, nu }
    }

    pub fn quantum_box(box_spec: BoxSpectrum, beta: f64, h: f64, mu: f64) -> Result<Self> {
        StateSpec { box_spec: Some(box_spec), ..Self::base(StateKind::QuantumBoxGibbs, box_spec.nu, beta, h, mu) }
            .validated()
    }

    pub fn classical_box(box_spec: BoxSpectrum, beta: f64, mu: f64) -> Result<Self> {
        StateSpec { box_spec: Some(box_spec), ..Self::base(StateKind::ClassicalBoxGibbs, box_spec.nu, beta, 0.0, mu) }
            .validated()
    }

    pub fn quantum_inf_vol(nu: usize, beta: f64, h: f64, mu: f64) -> Result<Self> {
        Self::base(StateKind::QuantumInfVol, nu, beta, h, mu).validated()
    }

    pub fn classical_inf_vol(nu: usize, beta: f64, mu: f64) -> Result<Self> {
        Self::base(StateKind::ClassicalInfVol, nu, beta, 0.0, mu).validated()
    }

    pub fn quantum_condensate(nu: usize, beta: f64, h: f64, rho_bar: f64) -> Result<Self> {
        StateSpec { rho_bar: Some(rho_bar), ..Self::base(StateKind::QuantumCondensate, nu, beta, h, 0.0) }.validated()
    }

    pub fn classical_condensate(nu: usize, beta: f64, alpha: f64) -> Result<Self> {
        StateSpec { alpha: Some(alpha), ..Self::base(StateKind::ClassicalCondensate, nu, beta, 0.0, 0.0) }.validated()
    }

    fn validated(self) -> Result<Self> {
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSpec(m));
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return bad(format!("beta must be positive, got {}", self.beta));
        }
        if self.nu == 0 {
            return bad("nu must be positive".into());
        }
        if !self.mu.is_finite() {
            return bad(format!("mu must be finite, got {}", self.mu));
        }
        if self.kind.is_quantum() {
            if !(self.h > 0.0) || !self.h.is_finite() {
                return bad(format!("quantum states need h > 0, got {}", self.h));
            }
        } else if self.h != 0.0 {
            return bad(format!("classical states need h = 0, got {}", self.h));
        }
        if self.kind.is_box() {
            let Some(b) = self.box_spec else {
                return bad("box states need a box".into());
            };
            b.validate()?;
            if b.nu != self.nu {
                return Err(Error::DimensionMismatch { expected: self.nu, got: b.nu });
            }
            if self.mu >= b.ground_energy() {
                return Err(Error::ChemicalPotentialOutOfRange { mu: self.mu, limit: b.ground_energy() });
            }
        } else {
            if self.mu > 0.0 {
                return Err(Error::ChemicalPotentialOutOfRange { mu: self.mu, limit: 0.0 });
            }
            if (self.mu == 0.0 || self.kind.is_condensate()) && self.nu < 3 {
                return Err(Error::DimensionTooLow(self.nu));
            }
        }
        match self.kind {
            StateKind::QuantumCondensate => {
                if self.mu != 0.0 {
                    return bad("condensate states have mu = 0".into());
                }
                let Some(rho) = self.rho_bar else {
                    return bad("quantum condensate needs rho_bar".into());
                };
                let rho_c = critical_density(self.beta, self.h, self.nu)?;
                if !(rho >= rho_c * (1.0 - 1e-12)) {
                    return Err(Error::SubcriticalDensity { h: self.h, rho, rho_c });
                }
            }
            StateKind::ClassicalCondensate => {
                if self.mu != 0.0 {
                    return bad("condensate states have mu = 0".into());
                }
                match self.alpha {
                    Some(a) if a >= 0.0 && a.is_finite() => {}
                    _ => return bad("classical condensate needs a finite alpha >= 0".into()),
                }
            }
            _ => {}
        }
        Ok(())
    }

    pub fn box_spectrum(&self) -> Result<BoxSpectrum> {
        self.box_spec.ok_or_else(|| Error::InvalidSpec("state has no box".into()))
    }

    /// z_h = e^{beta h mu}.
    pub fn fugacity(&self) -> f64 {
        (self.beta * self.h * self.mu).exp()
    }
}

/// Finitely many coefficients c_n in the box sine basis.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ModeVector(pub BTreeMap<MultiIndex, Complex64>);

#[derive(Serialize, Deserialize)]
struct ModeEntry {
    n: MultiIndex,
    #[serde(with = "complex_pair")]
    c: Complex64,
}

#[derive(Serialize, Deserialize)]
struct ModeVectorRepr {
    modes: Vec<ModeEntry>,
}

impl Serialize for ModeVector {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ModeVectorRepr { modes: self.0.iter().map(|(n, c)| ModeEntry { n: n.clone(), c: *c }).collect() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for ModeVector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = ModeVectorRepr::deserialize(d)?;
        let mut out = ModeVector::default();
        for e in repr.modes {
            *out.0.entry(e.n).or_insert(ZERO) += e.c;
        }
        Ok(out)
    }
}

impl ModeVector {
    pub fn single(n: MultiIndex, c: Complex64) -> Self {
        ModeVector(BTreeMap::from([(n, c)]))
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (MultiIndex, Complex64)>) -> Self {
        let mut out = ModeVector::default();
        for (n, c) in pairs {
            *out.0.entry(n).or_insert(ZERO) += c;
        }
        out
    }

    pub fn validate(&self, nu: usize) -> Result<()> {
        for n in self.0.keys() {
            if n.len() != nu {
                return Err(Error::DimensionMismatch { expected: nu, got: n.len() });
            }
            if n.contains(&0) {
                return Err(Error::InvalidIndex(n.clone()));
            }
        }
        Ok(())
    }

    pub fn scale(&self, s: Complex64) -> Self {
        ModeVector(self.0.iter().map(|(n, c)| (n.clone(), c * s)).collect())
    }

    pub fn add(&self, other: &ModeVector) -> Self {
        let mut out = self.clone();
        for (n, c) in &other.0 {
            *out.0.entry(n.clone()).or_insert(ZERO) += c;
        }
        out
    }

    pub fn inner(&self, other: &ModeVector) -> Complex64 {
        self.0.iter().filter_map(|(n, c)| other.0.get(n).map(|d| c.conj() * d)).sum()
    }

    /// sum conj(a_n) b_n w(E_n).
    fn weighted_inner(&self, other: &ModeVector, half_side: f64, w: impl Fn(f64) -> f64) -> Result<Complex64> {
        let mut total = ZERO;
        for (n, c) in &self.0 {
            if let Some(d) = other.0.get(n) {
                total += c.conj() * d * w(spectrum::eigenvalue(n, half_side)?);
            }
        }
        Ok(total)
    }

    /// Apply (H - shift) mode by mode.
    pub fn apply_generator(&self, half_side: f64, shift: f64) -> Result<Self> {
        let mut out = ModeVector::default();
        for (n, c) in &self.0 {
            out.0.insert(n.clone(), c * (spectrum::eigenvalue(n, half_side)? - shift));
        }
        Ok(out)
    }
}

/// Argument of a Weyl generator: box-mode coefficients or a test function (possibly
/// carrying a symbolic generator insertion).
#[derive(Debug, Clone, PartialEq)]
pub enum Excitation {
    Modes(ModeVector),
    Function(FieldFunction),
}

impl From<TestFunction> for Excitation {
    fn from(f: TestFunction) -> Self {
        Excitation::Function(f.into())
    }
}

impl From<ModeVector> for Excitation {
    fn from(m: ModeVector) -> Self {
        Excitation::Modes(m)
    }
}

impl Excitation {
    pub fn scale(&self, c: Complex64) -> Self {
        match self {
            Excitation::Modes(m) => Excitation::Modes(m.scale(c)),
            Excitation::Function(f) => Excitation::Function(f.scale(c)),
        }
    }

    pub fn add(&self, other: &Excitation) -> Result<Self> {
        match (self, other) {
            (Excitation::Modes(a), Excitation::Modes(b)) => Ok(Excitation::Modes(a.add(b))),
            (Excitation::Function(a), Excitation::Function(b)) => Ok(Excitation::Function(a.add(b)?)),
            _ => Err(Error::DomainViolation("cannot mix mode coefficients and test functions".into())),
        }
    }

    pub fn inner(&self, other: &Excitation) -> Result<Complex64> {
        match (self, other) {
            (Excitation::Modes(a), Excitation::Modes(b)) => Ok(a.inner(b)),
            (Excitation::Function(a), Excitation::Function(b)) if a.is_plain() && b.is_plain() => {
                a.plain.inner_product(&b.plain)
            }
            (Excitation::Function(_), Excitation::Function(_)) => {
                Err(Error::DomainViolation("inner products of generator insertions are not supported".into()))
            }
            _ => Err(Error::DomainViolation("cannot mix mode coefficients and test functions".into())),
        }
    }

    /// sigma(a, b) = Im <a, b>.
    pub fn sigma(&self, other: &Excitation) -> Result<f64> {
        Ok(self.inner(other)?.im)
    }

    fn plain_function(&self) -> Option<&TestFunction> {
        match self {
            Excitation::Function(f) if f.is_plain() => Some(&f.plain),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Evaluation {
    #[serde(with = "complex_pair")]
    pub value: Complex64,
    /// Bound on the absolute error of `value` from mode-sum truncation.
    pub tail_bound: f64,
}

/// A real symmetric form sum conj(a_n) b_n kappa(E_n) on box modes, kappa decreasing.
struct BoxKernel<'a> {
    spec: &'a BoxSpectrum,
    kappa: Box<dyn Fn(f64) -> f64 + Sync + 'a>,
}

impl BoxKernel<'_> {
    fn on_modes(&self, a: &ModeVector, b: &ModeVector) -> Result<Complex64> {
        a.validate(self.spec.nu)?;
        b.validate(self.spec.nu)?;
        a.weighted_inner(b, self.spec.half_side, &self.kappa)
    }

    /// Overlap route: returns the form and a Cauchy–Schwarz bound on the truncated tail.
    fn on_functions(&self, a: &TestFunction, b: &TestFunction) -> Result<(Complex64, f64)> {
        for f in [a, b] {
            if f.nu != self.spec.nu {
                return Err(Error::DimensionMismatch { expected: self.spec.nu, got: f.nu });
            }
        }
        let ta = OverlapTable::new(a, self.spec.half_side, self.spec.cutoff);
        let same = a == b;
        let tb = if same { ta.clone() } else { OverlapTable::new(b, self.spec.half_side, self.spec.cutoff) };
        let kappa = &self.kappa;
        #[derive(Default)]
        struct Acc {
            form: Complex64,
            pa: f64,
            pb: f64,
        }
        impl std::ops::AddAssign for Acc {
            fn add_assign(&mut self, o: Acc) {
                self.form += o.form;
                self.pa += o.pa;
                self.pb += o.pb;
            }
        }
        let acc: Acc = spectrum::mode_total(self.spec, |n, e| {
            let ca = ta.coefficient(n);
            let cb = if same { ca } else { tb.coefficient(n) };
            Acc { form: ca.conj() * cb * kappa(e), pa: ca.norm_sqr(), pb: cb.norm_sqr() }
        });
        let rem = |total: f64, partial: f64| (total - partial).max(0.0) + 1e-13 * total;
        let tail = kappa(self.spec.tail_min_energy()).abs()
            * (rem(ta.box_norm_sqr, acc.pa) * rem(tb.box_norm_sqr, acc.pb)).sqrt();
        Ok((acc.form, tail))
    }

    fn form(&self, a: &Excitation, b: &Excitation) -> Result<(Complex64, f64)> {
        match (a, b) {
            (Excitation::Modes(x), Excitation::Modes(y)) => Ok((self.on_modes(x, y)?, 0.0)),
            _ => match (a.plain_function(), b.plain_function()) {
                (Some(x), Some(y)) => self.on_functions(x, y),
                _ => Err(Error::DomainViolation(
                    "box states take mode coefficients or plain test functions".into(),
                )),
            },
        }
    }
}

fn box_kernel<'a>(spec: &'a StateSpec, b: &'a BoxSpectrum) -> BoxKernel<'a> {
    let mu = spec.mu;
    match spec.kind {
        StateKind::QuantumBoxGibbs => {
            let bose = BoseFactor { beta_h: spec.beta * spec.h, mu };
            BoxKernel { spec: b, kappa: Box::new(move |e| 1.0 + 2.0 * bose.occupation(e)) }
        }
        _ => {
            let beta = spec.beta;
            BoxKernel { spec: b, kappa: Box::new(move |e| 1.0 / (beta * (e - mu))) }
        }
    }
}

fn require_function(f: &Excitation) -> Result<&FieldFunction> {
    match f {
        Excitation::Function(f) => Ok(f),
        Excitation::Modes(_) => Err(Error::DomainViolation(
            "infinite-volume states take test functions, not box-mode coefficients".into(),
        )),
    }
}

fn require_plain(f: &Excitation) -> Result<&TestFunction> {
    f.plain_function().ok_or_else(|| {
        Error::DomainViolation("quantum infinite-volume states take plain test functions".into())
    })
}

/// The real quadratic form Q(f) with omega(W(f)) = exp(-Q(f)), and a bound on its
/// truncation error.
pub fn exponent(spec: &StateSpec, f: &Excitation) -> Result<(f64, f64)> {
    spec.validate()?;
    match spec.kind {
        StateKind::QuantumBoxGibbs | StateKind::ClassicalBoxGibbs => {
            let b = spec.box_spectrum()?;
            let (form, tail) = box_kernel(spec, &b).form(f, f)?;
            let pre = if spec.kind.is_quantum() { spec.h / 4.0 } else { 0.5 };
            Ok((pre * form.re.max(0.0), pre * tail))
        }
        StateKind::QuantumInfVol => {
            let g = require_plain(f)?;
            check_nu(spec, g.nu)?;
            Ok((spec.h / 4.0 * g.bose_form(spec.beta * spec.h, spec.mu)?, 0.0))
        }
        StateKind::QuantumCondensate => {
            let g = require_plain(f)?;
            check_nu(spec, g.nu)?;
            let rho_c = critical_density(spec.beta, spec.h, spec.nu)?;
            let excess = (spec.rho_bar.unwrap_or(rho_c) - rho_c).max(0.0);
            let ground = 2f64.powi(spec.nu as i32 + 1) * excess * g.space_integral().norm_sqr();
            Ok((spec.h / 4.0 * (g.bose_form(spec.beta * spec.h, 0.0)? + ground), 0.0))
        }
        StateKind::ClassicalInfVol => {
            let g = require_function(f)?;
            check_nu(spec, g.nu())?;
            let q = g.resolvent_form(g, spec.mu)?.re.max(0.0);
            Ok((q / (2.0 * spec.beta), 0.0))
        }
        StateKind::ClassicalCondensate => {
            let g = require_function(f)?;
            check_nu(spec, g.nu())?;
            let q = g.resolvent_form(g, 0.0)?.re.max(0.0);
            let alpha = spec.alpha.unwrap_or(0.0);
            let ground = 2f64.powi(spec.nu as i32) * alpha * g.space_integral().norm_sqr();
            Ok((0.5 * (q / spec.beta + ground), 0.0))
        }
    }
}

fn check_nu(spec: &StateSpec, nu: usize) -> Result<()> {
    if nu != spec.nu {
        return Err(Error::DimensionMismatch { expected: spec.nu, got: nu });
    }
    Ok(())
}

/// omega(W(f)).
pub fn weyl_expectation(spec: &StateSpec, f: &Excitation) -> Result<Evaluation> {
    let (q, tail) = exponent(spec, f)?;
    let value = (-q).exp();
    Ok(Evaluation { value: Complex64::new(value, 0.0), tail_bound: value * tail })
}

/// omega_0(Phi_0(k) W^0(g)) for classical states.
pub fn field_weyl_expectation(spec: &StateSpec, k: &Excitation, g: &Excitation) -> Result<Evaluation> {
    spec.validate()?;
    if spec.kind.is_quantum() {
        return Err(Error::InvalidSpec("field insertions are implemented for classical states".into()));
    }
    let w = weyl_expectation(spec, g)?;
    let beta = spec.beta;
    let (re, tail) = match spec.kind {
        StateKind::ClassicalBoxGibbs => {
            let b = spec.box_spectrum()?;
            // kernel carries 1/beta already
            let (form, tail) = box_kernel(spec, &b).form(g, k)?;
            (form.re, tail)
        }
        StateKind::ClassicalInfVol => {
            let (gf, kf) = (require_function(g)?, require_function(k)?);
            (gf.resolvent_form(kf, spec.mu)?.re / beta, 0.0)
        }
        StateKind::ClassicalCondensate => {
            let (gf, kf) = (require_function(g)?, require_function(k)?);
            let alpha = spec.alpha.unwrap_or(0.0);
            let ground = 2f64.powi(spec.nu as i32) * alpha * beta * (gf.space_integral().conj() * kf.space_integral()).re;
            ((gf.resolvent_form(kf, 0.0)?.re + ground) / beta, 0.0)
        }
        _ => unreachable!(),
    };
    let value = Complex64::new(0.0, re) * w.value;
    Ok(Evaluation { value, tail_bound: tail * w.value.re + re.abs() * w.tail_bound })
}

/// omega(Phi_h(f) Phi_h(g)) = (h/2) Re<f, coth g> + (ih/2) sigma(f, g), on box modes.
pub fn two_point(spec: &StateSpec, f: &ModeVector, g: &ModeVector) -> Result<Complex64> {
    spec.validate()?;
    if spec.kind != StateKind::QuantumBoxGibbs {
        return Err(Error::InvalidSpec("two-point functions are implemented for quantum box states".into()));
    }
    let b = spec.box_spectrum()?;
    let form = box_kernel(spec, &b).on_modes(f, g)?;
    Ok(Complex64::new(0.5 * spec.h * form.re, 0.5 * spec.h * f.inner(g).im))
}

/// Density of a quantum Gibbs state: box (certified mode sum) or infinite volume (quadrature).
pub fn quantum_density(spec: &StateSpec) -> Result<Evaluation> {
    spec.validate()?;
    let a = spec.beta * spec.h;
    match spec.kind {
        StateKind::QuantumBoxGibbs => {
            let b = spec.box_spectrum()?;
            let s = box_density(&b, a, spec.mu, DEFAULT_TAIL_TOL)?;
            Ok(Evaluation { value: Complex64::new(s.value, 0.0), tail_bound: s.tail_bound })
        }
        StateKind::QuantumInfVol => {
            Ok(Evaluation { value: Complex64::new(infinite_density(a, spec.mu, spec.nu)?, 0.0), tail_bound: 0.0 })
        }
        _ => Err(Error::InvalidSpec("density is defined for quantum Gibbs states".into())),
    }
}

/// |Lambda|^{-1} sum_n occupation(E_n); tail tolerance is relative to the result.
pub fn box_density(b: &BoxSpectrum, beta_h: f64, mu: f64, rel_tol: f64) -> Result<spectrum::ModeSum> {
    if mu >= b.ground_energy() {
        return Err(Error::ChemicalPotentialOutOfRange { mu, limit: b.ground_energy() });
    }
    let w = BoseFactor { beta_h, mu };
    let vol = b.volume();
    // the ground term alone is a lower bound for the sum
    let floor = w.occupation(b.ground_energy());
    let s = spectrum::mode_sum(&w, b, rel_tol * floor)?;
    Ok(spectrum::ModeSum { value: s.value / vol, tail_bound: s.tail_bound / vol })
}

/// int d^nu p / (2 pi)^nu of z e^{-a p^2/2} / (1 - z e^{-a p^2/2}), a = beta h, z = e^{a mu}.
pub fn infinite_density(beta_h: f64, mu: f64, nu: usize) -> Result<f64> {
    if mu > 0.0 {
        return Err(Error::ChemicalPotentialOutOfRange { mu, limit: 0.0 });
    }
    if mu == 0.0 && nu < 3 {
        return Err(Error::DimensionTooLow(nu));
    }
    let a = beta_h;
    let radial = quad::integrate_half_line(
        |p| {
            let x = a * (0.5 * p * p - mu);
            if x <= 0.0 {
                // p = 0 at mu = 0: limit of p^{nu-1} / x
                return if nu == 3 { 2.0 / a } else { 0.0 };
            }
            p.powi(nu as i32 - 1) / x.exp_m1()
        },
        (2.0 / a).sqrt(),
        1e-12,
        0.0,
    )?;
    Ok(quad::sphere_area(nu) * radial / (2.0 * PI).powi(nu as i32))
}

/// rho_c(beta h) = infinite-volume density at mu = 0; requires nu >= 3.
pub fn critical_density(beta: f64, h: f64, nu: usize) -> Result<f64> {
    if nu < 3 {
        return Err(Error::DimensionTooLow(nu));
    }
    if !(beta > 0.0 && h > 0.0) {
        return Err(Error::InvalidSpec(format!("critical density needs beta, h > 0 (got {beta}, {h})")));
    }
    infinite_density(beta * h, 0.0, nu)
}

/// Gram matrix M_jk = omega(W(f_j)^* W(f_k)) = e^{i h sigma(f_j, f_k)/2} omega(W(f_k - f_j)).
pub fn gram_matrix(spec: &StateSpec, labels: &[Excitation]) -> Result<DMatrix<Complex64>> {
    let n = labels.len();
    let mut m = DMatrix::from_element(n, n, ZERO);
    for j in 0..n {
        for k in j..n {
            let diff = labels[k].add(&labels[j].scale(Complex64::new(-1.0, 0.0)))?;
            let phase = if spec.h > 0.0 {
                Complex64::from_polar(1.0, 0.5 * spec.h * labels[j].sigma(&labels[k])?)
            } else {
                Complex64::new(1.0, 0.0)
            };
            let v = phase * weyl_expectation(spec, &diff)?.value;
            m[(j, k)] = v;
            m[(k, j)] = v.conj();
        }
    }
    Ok(m)
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(m: &DMatrix<Complex64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    m.clone().symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
}
