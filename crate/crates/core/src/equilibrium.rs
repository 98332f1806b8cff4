//! Chemical-potential solvers, limit drivers and weak-KMS residuals.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectrum::BoxSpectrum;
use crate::states::{self, Excitation, StateKind, StateSpec};
use crate::testfn::{FieldFunction, TestFunction};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// The generator of the classical dynamics, H or H - mu, acting as the Fourier
/// multiplier p^2/2 (- mu) in infinite volume and mode by mode in a box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator")]
pub enum WeakDerivationSpec {
    H,
    HMinusMu { mu: f64 },
}

impl WeakDerivationSpec {
    pub fn shift(&self) -> f64 {
        match *self {
            WeakDerivationSpec::H => 0.0,
            WeakDerivationSpec::HMinusMu { mu } => mu,
        }
    }

    /// The generator for which the state's own chemical potential is KMS.
    pub fn for_state(spec: &StateSpec) -> Self {
        if spec.mu == 0.0 {
            WeakDerivationSpec::H
        } else {
            WeakDerivationSpec::HMinusMu { mu: spec.mu }
        }
    }
}

const DENSITY_REL_TOL: f64 = 1e-13;
const SOLVE_TOL: f64 = 1e-12;

fn density_at(b: &BoxSpectrum, beta_h: f64, mu: f64) -> Result<f64> {
    states::box_density(b, beta_h, mu, DENSITY_REL_TOL)
        .map(|s| s.value)
        .map_err(|e| match e {
            Error::TailToleranceExceeded { bound, tol } => Error::BracketFailure(format!(
                "density tail bound {bound:e} exceeds {tol:e} at mu = {mu}; raise the cutoff"
            )),
            other => other,
        })
}

/// The unique mu < E_0(L) at which the box density equals `rho_target`.
pub fn solve_mu_quantum(rho_target: f64, spec: &BoxSpectrum, beta: f64, h: f64) -> Result<f64> {
    if !(rho_target > 0.0) {
        return Err(Error::NonPositiveTarget(rho_target));
    }
    if !(beta > 0.0 && h > 0.0) {
        return Err(Error::InvalidSpec(format!("solver needs beta, h > 0 (got {beta}, {h})")));
    }
    spec.validate()?;
    let e0 = spec.ground_energy();
    let a = beta * h;
    // Work in y = ln(E_0 - mu); ln(density) is decreasing in y.
    let mu_of = |y: f64| e0 - y.exp();
    let g = |y: f64| -> Result<f64> { Ok(density_at(spec, a, mu_of(y))?.ln() - rho_target.ln()) };

    let mut hi_y = (1e-10 * e0.max(1.0)).ln();
    let mut g_hi = g(hi_y)?;
    let mut tries = 0;
    while g_hi <= 0.0 {
        hi_y -= 3.0 * std::f64::consts::LN_10;
        tries += 1;
        if tries > 8 || e0 - hi_y.exp() == e0 {
            return Err(Error::BracketFailure(format!("target density {rho_target} not reached below E_0")));
        }
        g_hi = g(hi_y)?;
    }
    let mut lo_y = 0.0; // mu = E_0 - 1
    let mut g_lo = g(lo_y)?;
    let mut k = 0;
    while g_lo >= 0.0 {
        k += 1;
        if k > 60 {
            return Err(Error::BracketFailure(format!("no left bracket for target density {rho_target}")));
        }
        lo_y = (k as f64) * std::f64::consts::LN_2;
        g_lo = g(lo_y)?;
    }
    // invariant: g(hi_y) > 0 > g(lo_y), hi_y < lo_y
    let (mut ya, mut ga, mut yb, mut gb) = (hi_y, g_hi, lo_y, g_lo);
    let mut side = 0i32;
    for _ in 0..300 {
        let mut y = (ya * gb - yb * ga) / (gb - ga);
        if !y.is_finite() || y <= ya.min(yb) || y >= ya.max(yb) {
            y = 0.5 * (ya + yb);
        }
        let gy = g(y)?;
        if gy.abs() <= SOLVE_TOL || (yb - ya).abs() <= 1e-15 * y.abs().max(1.0) {
            return Ok(mu_of(y));
        }
        if gy > 0.0 {
            ya = y;
            ga = gy;
            if side == 1 {
                gb *= 0.5;
            }
            side = 1;
        } else {
            yb = y;
            gb = gy;
            if side == -1 {
                ga *= 0.5;
            }
            side = -1;
        }
    }
    Err(Error::BracketFailure("chemical potential iteration did not converge".into()))
}

/// mu_L = E_0(L) - 1/(alpha beta |Lambda_L|); alpha = 0 selects mu_L = 0.
pub fn mu_net_classical(alpha: f64, half_side: f64, beta: f64, nu: usize) -> f64 {
    let b = BoxSpectrum { half_side, nu, cutoff: 1 };
    if alpha == 0.0 {
        return 0.0;
    }
    b.ground_energy() - 1.0 / (alpha * beta * b.volume())
}

/// h (rho(h) - rho_c(beta h)) on a grid.
pub fn condensate_fraction_limit(
    rho_of_h: impl Fn(f64) -> f64 + Sync,
    beta: f64,
    nu: usize,
    h_grid: &[f64],
) -> Result<Vec<(f64, f64)>> {
    h_grid
        .par_iter()
        .map(|&h| {
            let rho_c = states::critical_density(beta, h, nu)?;
            let rho = rho_of_h(h);
            if rho < rho_c {
                return Err(Error::SubcriticalDensity { h, rho, rho_c });
            }
            Ok((h, h * (rho - rho_c)))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SemiclassicalRow {
    pub h: f64,
    pub quantum: f64,
    pub classical: f64,
    pub error: f64,
}

/// |omega_h(Q_h W^0(f)) - omega_0(W^0(f))| along h -> 0.
pub fn semiclassical_scan(
    family: impl Fn(f64) -> Result<StateSpec> + Sync,
    classical_target: &StateSpec,
    f: &Excitation,
    h_grid: &[f64],
) -> Result<Vec<SemiclassicalRow>> {
    if classical_target.kind.is_quantum() {
        return Err(Error::InvalidSpec("semiclassical target must be a classical state".into()));
    }
    let classical = states::weyl_expectation(classical_target, f)?.value.re;
    let norm_sqr = f.inner(f)?.re;
    h_grid
        .par_iter()
        .map(|&h| {
            let spec = family(h)?;
            if !spec.kind.is_quantum() || spec.h != h {
                return Err(Error::InvalidSpec(format!("family must return a quantum state at h = {h}")));
            }
            let quantum = (-0.25 * h * norm_sqr).exp() * states::weyl_expectation(&spec, f)?.value.re;
            Ok(SemiclassicalRow { h, quantum, classical, error: (quantum - classical).abs() })
        })
        .collect()
}

/// Quantum condensate family with rho(h) = rho_c(beta h) + alpha / h.
pub fn condensate_family(nu: usize, beta: f64, alpha: f64) -> impl Fn(f64) -> Result<StateSpec> + Sync {
    move |h| {
        let rho_c = states::critical_density(beta, h, nu)?;
        StateSpec::quantum_condensate(nu, beta, h, rho_c + alpha / h)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThermoRow {
    #[serde(rename = "L")]
    pub half_side: f64,
    pub mu: f64,
    pub cutoff: u32,
    pub value: f64,
    pub target: f64,
    pub error: f64,
    pub tail_bound: f64,
}

const THERMO_TAIL_TOL: f64 = 1e-12;

/// Mode cutoff at which a gaussian mixture's box coefficients are negligible.
pub fn suggest_cutoff(f: &TestFunction, half_side: f64) -> u32 {
    let reach = f
        .terms
        .iter()
        .map(|t| t.wave.iter().map(|w| w.abs()).fold(0.0, f64::max) + 32f64.sqrt() / t.sigma)
        .fold(1.0, f64::max);
    ((2.0 * half_side * reach / std::f64::consts::PI).ceil() as u32).max(4)
}

/// Finite-volume classical Gibbs states along the net mu_L against the condensate limit.
pub fn thermodynamic_scan(alpha: f64, beta: f64, f: &TestFunction, l_grid: &[f64]) -> Result<Vec<ThermoRow>> {
    if f.nu < 3 {
        return Err(Error::DimensionTooLow(f.nu));
    }
    let target_spec = StateSpec::classical_condensate(f.nu, beta, alpha)?;
    let exc: Excitation = f.clone().into();
    let target = states::weyl_expectation(&target_spec, &exc)?.value.re;
    l_grid
        .iter()
        .map(|&l| {
            let mu = mu_net_classical(alpha, l, beta, f.nu);
            let mut cutoff = suggest_cutoff(f, l);
            for _ in 0..4 {
                let b = BoxSpectrum::new(l, f.nu, cutoff)?;
                let spec = StateSpec::classical_box(b, beta, mu)?;
                let ev = states::weyl_expectation(&spec, &exc)?;
                if ev.tail_bound <= THERMO_TAIL_TOL {
                    let value = ev.value.re;
                    return Ok(ThermoRow {
                        half_side: l,
                        mu,
                        cutoff,
                        value,
                        target,
                        error: (value - target).abs(),
                        tail_bound: ev.tail_bound,
                    });
                }
                cutoff = cutoff * 3 / 2;
            }
            Err(Error::TailToleranceExceeded { bound: f64::NAN, tol: THERMO_TAIL_TOL })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum KmsMode {
    Analytic,
    FiniteDifference { dt: f64 },
}

pub const DEFAULT_FD_STEP: f64 = 1e-3;

/// i (H - s) f.
fn generated(f: &Excitation, spec: &StateSpec, shift: f64) -> Result<Excitation> {
    match f {
        Excitation::Modes(m) => Ok(Excitation::Modes(m.apply_generator(spec.box_spectrum()?.half_side, shift)?.scale(I))),
        Excitation::Function(ff) if ff.is_plain() => {
            if spec.kind.is_box() {
                return Err(Error::DomainViolation("box KMS checks take mode coefficients".into()));
            }
            Ok(Excitation::Function(FieldFunction::generated(ff.plain.scale(I), shift)))
        }
        Excitation::Function(_) => Err(Error::DomainViolation("KMS inputs must be plain test functions".into())),
    }
}

/// |sigma(g, f) omega(W(f + g)) - i beta omega(Phi(i K f) W(f + g))|, K the generator.
pub fn kms_residual(
    spec: &StateSpec,
    deriv: WeakDerivationSpec,
    f: &Excitation,
    g: &Excitation,
    mode: KmsMode,
) -> Result<f64> {
    spec.validate()?;
    if spec.kind.is_quantum() {
        return Err(Error::InvalidSpec("weak KMS residuals are for classical states".into()));
    }
    let k = generated(f, spec, deriv.shift())?;
    let fg = f.add(g)?;
    let lhs = g.sigma(f)? * states::weyl_expectation(spec, &fg)?.value;
    match mode {
        KmsMode::Analytic => {
            let field = states::field_weyl_expectation(spec, &k, &fg)?.value;
            Ok((lhs - I * spec.beta * field).norm())
        }
        KmsMode::FiniteDifference { dt } => {
            if !(dt > 0.0) {
                return Err(Error::InvalidSpec(format!("finite-difference step must be positive, got {dt}")));
            }
            let at = |t: f64| -> Result<(f64, f64)> {
                let (q, _) = states::exponent(spec, &fg.add(&k.scale(Complex64::new(t, 0.0)))?)?;
                Ok(((-q).exp(), q))
            };
            let mut noise = 0.0f64;
            let mut residual = |dt: f64| -> Result<f64> {
                let ((wp, qp), (wm, qm)) = (at(dt)?, at(-dt)?);
                // rounding in the exponents, amplified by the 1/dt of the difference
                noise = noise.max(64.0 * f64::EPSILON * (wp * qp.max(1.0) + wm * qm.max(1.0)) / dt);
                // Phi(k) inserted as -i d/dt omega(W(fg + t k))
                let field = -I * (wp - wm) / (2.0 * dt);
                Ok((lhs - I * spec.beta * field).norm())
            };
            let coarse = residual(dt)?;
            let fine = residual(0.5 * dt)?;
            if coarse > spec.beta * noise {
                let ratio = coarse / fine;
                if !(3.0..=5.0).contains(&ratio) {
                    return Err(Error::StepTooLarge { ratio });
                }
            }
            Ok(coarse)
        }
    }
}

/// Central-difference residuals at dt and dt/2 and their ratio (about 4 in the asymptotic regime).
pub fn richardson_ratio(spec: &StateSpec, deriv: WeakDerivationSpec, f: &Excitation, g: &Excitation, dt: f64) -> Result<(f64, f64, f64)> {
    let a = kms_residual(spec, deriv, f, g, KmsMode::FiniteDifference { dt });
    let a = match a {
        Ok(v) => v,
        Err(Error::StepTooLarge { ratio }) => return Ok((f64::NAN, f64::NAN, ratio)),
        Err(e) => return Err(e),
    };
    let b = kms_residual(spec, deriv, f, g, KmsMode::FiniteDifference { dt: 0.5 * dt })?;
    Ok((a, b, a / b))
}

/// Which kind of classical limit a quantum family is compared against.
pub fn classical_limit_kind(kind: StateKind) -> Option<StateKind> {
    match kind {
        StateKind::QuantumBoxGibbs => Some(StateKind::ClassicalBoxGibbs),
        StateKind::QuantumInfVol => Some(StateKind::ClassicalInfVol),
        StateKind::QuantumCondensate => Some(StateKind::ClassicalCondensate),
        _ => None,
    }
}
