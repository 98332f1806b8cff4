//! Dirichlet Laplacian on the box [-L, L]^nu: eigenvalues, mode enumeration,
//! and mode sums with certified tails.
//!
//! Multi-indices are visited in shells of fixed max-norm m = 1, 2, ..., cutoff.
//! Shells are summed in parallel and reduced in shell order, so results do not
//! depend on the thread count.

use std::f64::consts::PI;
use std::ops::AddAssign;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;

pub type MultiIndex = Vec<u32>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxSpectrum {
    #[serde(rename = "L")]
    pub half_side: f64,
    pub nu: usize,
    pub cutoff: u32,
}

impl BoxSpectrum {
    pub fn new(half_side: f64, nu: usize, cutoff: u32) -> Result<Self> {
        let s = BoxSpectrum { half_side, nu, cutoff };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.half_side > 0.0) || !self.half_side.is_finite() {
            return Err(Error::InvalidSpec(format!("box half-side must be positive, got {}", self.half_side)));
        }
        if self.nu == 0 {
            return Err(Error::InvalidSpec("box dimension must be positive".into()));
        }
        if self.cutoff == 0 {
            return Err(Error::InvalidSpec("mode cutoff must be positive".into()));
        }
        Ok(())
    }

    pub fn with_cutoff(&self, cutoff: u32) -> Self {
        BoxSpectrum { cutoff, ..*self }
    }

    /// |Lambda_L| = (2L)^nu.
    pub fn volume(&self) -> f64 {
        (2.0 * self.half_side).powi(self.nu as i32)
    }

    /// pi^2 / (8 L^2): E_n = scale * |n|^2.
    pub fn energy_scale(&self) -> f64 {
        energy_scale(self.half_side)
    }

    pub fn ground_energy(&self) -> f64 {
        self.energy_scale() * self.nu as f64
    }

    pub fn ground_index(&self) -> MultiIndex {
        vec![1; self.nu]
    }

    pub fn eigenvalue(&self, n: &[u32]) -> Result<f64> {
        if n.len() != self.nu {
            return Err(Error::DimensionMismatch { expected: self.nu, got: n.len() });
        }
        eigenvalue(n, self.half_side)
    }

    /// Smallest eigenvalue outside the cube [1, cutoff]^nu.
    pub fn tail_min_energy(&self) -> f64 {
        let n = self.cutoff as f64 + 1.0;
        self.energy_scale() * (n * n + (self.nu as f64 - 1.0))
    }

    /// Smallest cutoff for which the heat-kernel tail at time t is below `tol`
    /// (relative to the full heat trace).
    pub fn heat_cutoff(half_side: f64, nu: usize, t: f64, tol: f64) -> u32 {
        let c = t * energy_scale(half_side);
        let mut n = 1u32;
        while n < 1_000_000 {
            let tail = axis_gauss_tail(c, n);
            let full = axis_gauss_sum(c, n) + tail;
            if nu as f64 * tail / full <= tol {
                return n;
            }
            n = (n as f64 * 1.25).ceil() as u32 + 1;
        }
        n
    }
}

fn energy_scale(half_side: f64) -> f64 {
    PI * PI / (8.0 * half_side * half_side)
}

/// E_n(L) = (1/2) sum pi^2 n_i^2 / (2L)^2.
pub fn eigenvalue(n: &[u32], half_side: f64) -> Result<f64> {
    if n.is_empty() || n.contains(&0) {
        return Err(Error::InvalidIndex(n.to_vec()));
    }
    let sq: f64 = n.iter().map(|&k| (k as f64) * (k as f64)).sum();
    Ok(energy_scale(half_side) * sq)
}

/// Normalized Dirichlet eigenfunction psi_n(x) on [-L, L]^nu.
pub fn eigenfunction(n: &[u32], half_side: f64, x: &[f64]) -> f64 {
    n.iter().zip(x).map(|(&k, &xi)| crate::testfn::sine_mode(k, half_side, xi)).product()
}

/// Visit every multi-index of max-norm `m` (in a fixed order).
fn visit_shell(nu: usize, m: u32, mut f: impl FnMut(&[u32], u64)) {
    let mut n = vec![1u32; nu];
    // `lead` is the first axis equal to m: earlier axes range over 1..m-1, later over 1..=m
    for lead in 0..nu {
        if lead > 0 && m == 1 {
            break;
        }
        n.iter_mut().for_each(|v| *v = 1);
        n[lead] = m;
        'odometer: loop {
            let sq: u64 = n.iter().map(|&k| (k as u64) * (k as u64)).sum();
            f(&n, sq);
            for axis in (0..nu).rev() {
                if axis == lead {
                    continue;
                }
                let cap = if axis < lead { m - 1 } else { m };
                if n[axis] < cap {
                    n[axis] += 1;
                    continue 'odometer;
                }
                n[axis] = 1;
            }
            break;
        }
    }
}

/// Per-shell partial sums of `f(n, E_n)` over n in [1, cutoff]^nu, in shell order.
pub fn shell_sums<T, F>(spec: &BoxSpectrum, f: F) -> Vec<T>
where
    T: Default + AddAssign + Send,
    F: Fn(&[u32], f64) -> T + Sync,
{
    let scale = spec.energy_scale();
    (1..=spec.cutoff)
        .into_par_iter()
        .map(|m| {
            let mut acc = T::default();
            visit_shell(spec.nu, m, |n, sq| acc += f(n, scale * sq as f64));
            acc
        })
        .collect()
}

/// Sum of `f(n, E_n)` over n in [1, cutoff]^nu, reduced in shell order.
pub fn mode_total<T, F>(spec: &BoxSpectrum, f: F) -> T
where
    T: Default + AddAssign + Send,
    F: Fn(&[u32], f64) -> T + Sync,
{
    let mut total = T::default();
    for s in shell_sums(spec, f) {
        total += s;
    }
    total
}

/// A nonnegative mode weight together with a majorant of its tail outside the cutoff cube.
pub trait ModeWeight: Sync {
    fn weight(&self, n: &[u32], energy: f64) -> f64;
    /// Upper bound on sum over n outside [1, cutoff]^nu of the weight.
    fn tail_bound(&self, spec: &BoxSpectrum) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeSum {
    pub value: f64,
    pub tail_bound: f64,
}

/// Partial sum over the cutoff cube plus the weight's tail majorant; fails if the
/// majorant exceeds `tail_tol`.
pub fn mode_sum<W: ModeWeight + ?Sized>(weight: &W, spec: &BoxSpectrum, tail_tol: f64) -> Result<ModeSum> {
    spec.validate()?;
    let tail = weight.tail_bound(spec);
    if !(tail <= tail_tol) {
        return Err(Error::TailToleranceExceeded { bound: tail, tol: tail_tol });
    }
    let value: f64 = mode_total(spec, |n, e| weight.weight(n, e));
    Ok(ModeSum { value, tail_bound: tail })
}

/// sum_{m > n} e^{-c m^2} <= e^{-c (n+1)^2} / (1 - e^{-c (2n + 3)}).
fn axis_gauss_tail(c: f64, n: u32) -> f64 {
    let n = n as f64;
    (-c * (n + 1.0) * (n + 1.0)).exp() / -(-c * (2.0 * n + 3.0)).exp_m1()
}

fn axis_gauss_sum(c: f64, n: u32) -> f64 {
    (1..=n).map(|m| (-c * (m as f64) * (m as f64)).exp()).sum()
}

/// sum over max n > N of e^{-t E_n} <= nu * T(N) * S^{nu-1}.
fn heat_tail(spec: &BoxSpectrum, t: f64) -> f64 {
    let c = t * spec.energy_scale();
    let tail = axis_gauss_tail(c, spec.cutoff);
    let full = axis_gauss_sum(c, spec.cutoff) + tail;
    spec.nu as f64 * tail * full.powi(spec.nu as i32 - 1)
}

/// e^{-t E_n}.
#[derive(Debug, Clone, Copy)]
pub struct HeatKernel {
    pub t: f64,
}

impl ModeWeight for HeatKernel {
    fn weight(&self, _n: &[u32], e: f64) -> f64 {
        (-self.t * e).exp()
    }
    fn tail_bound(&self, spec: &BoxSpectrum) -> f64 {
        heat_tail(spec, self.t)
    }
}

/// Bose occupation z e^{-beta h E} / (1 - z e^{-beta h E}) with z = e^{beta h mu}, mu < E_0.
#[derive(Debug, Clone, Copy)]
pub struct BoseFactor {
    pub beta_h: f64,
    pub mu: f64,
}

impl BoseFactor {
    #[inline]
    pub fn occupation(&self, e: f64) -> f64 {
        let a = self.beta_h * (e - self.mu);
        1.0 / a.exp_m1()
    }
}

impl ModeWeight for BoseFactor {
    fn weight(&self, _n: &[u32], e: f64) -> f64 {
        self.occupation(e)
    }
    fn tail_bound(&self, spec: &BoxSpectrum) -> f64 {
        let x_min = (-self.beta_h * (spec.tail_min_energy() - self.mu)).exp();
        if x_min >= 1.0 {
            return f64::INFINITY;
        }
        (self.beta_h * self.mu).exp() / (1.0 - x_min) * heat_tail(spec, self.beta_h)
    }
}

/// Classical occupation 1 / (beta (E - mu)), mu < E_0. Summable only for nu = 1.
#[derive(Debug, Clone, Copy)]
pub struct ClassicalResolvent {
    pub beta: f64,
    pub mu: f64,
}

impl ModeWeight for ClassicalResolvent {
    fn weight(&self, _n: &[u32], e: f64) -> f64 {
        1.0 / (self.beta * (e - self.mu))
    }
    fn tail_bound(&self, spec: &BoxSpectrum) -> f64 {
        if spec.nu != 1 {
            return f64::INFINITY;
        }
        // E - mu >= c (m^2 - 1) for mu < c, and sum_{m > N} 1 / (m^2 - 1) <= 1 / N
        1.0 / (self.beta * spec.energy_scale() * spec.cutoff as f64)
    }
}

/// E_n^{-s}.
#[derive(Debug, Clone, Copy)]
pub struct InversePower {
    pub s: f64,
}

impl ModeWeight for InversePower {
    fn weight(&self, _n: &[u32], e: f64) -> f64 {
        e.powf(-self.s)
    }
    fn tail_bound(&self, spec: &BoxSpectrum) -> f64 {
        power_tail(self.s, spec)
    }
}

/// Integral test: |n|^{-2s} <= int over the unit cell below n, and every cell outside
/// the cutoff cube lies beyond radius N, so the tail is at most
/// (S_{nu-1} / 2^nu) N^{nu - 2s} / (2s - nu) times scale^{-s}.
fn power_tail(s: f64, spec: &BoxSpectrum) -> f64 {
    let nu = spec.nu as f64;
    if 2.0 * s <= nu {
        return f64::INFINITY;
    }
    let n = spec.cutoff as f64;
    quad::sphere_area(spec.nu) / 2f64.powi(spec.nu as i32) * n.powf(nu - 2.0 * s) / (2.0 * s - nu)
        * spec.energy_scale().powf(-s)
}

/// Weight supported on a single mode.
#[derive(Debug, Clone)]
pub struct SingleMode {
    pub index: MultiIndex,
    pub value: f64,
}

impl ModeWeight for SingleMode {
    fn weight(&self, n: &[u32], _e: f64) -> f64 {
        if n == self.index.as_slice() {
            self.value
        } else {
            0.0
        }
    }
    fn tail_bound(&self, spec: &BoxSpectrum) -> f64 {
        if self.index.iter().all(|&k| k <= spec.cutoff) {
            0.0
        } else {
            self.value.abs()
        }
    }
}

/// Arbitrary weight with a caller-supplied tail majorant.
pub struct FnWeight<F, T> {
    pub weight: F,
    pub tail: T,
}

impl<F, T> ModeWeight for FnWeight<F, T>
where
    F: Fn(&[u32], f64) -> f64 + Sync,
    T: Fn(&BoxSpectrum) -> f64 + Sync,
{
    fn weight(&self, n: &[u32], e: f64) -> f64 {
        (self.weight)(n, e)
    }
    fn tail_bound(&self, spec: &BoxSpectrum) -> f64 {
        (self.tail)(spec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TracePower {
    pub partial: f64,
    pub converged: bool,
    /// Integral-test bound on the neglected tail (infinite when divergent).
    pub tail_bound: f64,
}

/// Partial trace of H^{-s} over the cutoff cube; the series converges iff 2s > nu.
pub fn trace_h_power(s: f64, spec: &BoxSpectrum) -> Result<TracePower> {
    if !(s > 0.0) {
        return Err(Error::InvalidSpec(format!("trace power must be positive, got {s}")));
    }
    spec.validate()?;
    let w = InversePower { s };
    let partial: f64 = mode_total(spec, |n, e| w.weight(n, e));
    Ok(TracePower { partial, converged: 2.0 * s > spec.nu as f64, tail_bound: w.tail_bound(spec) })
}

/// Number of modes in the cutoff cube with E_n <= lambda.
pub fn count_below(spec: &BoxSpectrum, lambda: f64) -> u64 {
    mode_total(spec, |_, e| u64::from(e <= lambda))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(l: f64, nu: usize, n: u32) -> BoxSpectrum {
        BoxSpectrum::new(l, nu, n).unwrap()
    }

    #[test]
    fn shells_cover_cube_once() {
        for nu in 1..=4 {
            for m in 1..=5u32 {
                let mut seen = Vec::new();
                visit_shell(nu, m, |n, _| seen.push(n.to_vec()));
                let expected = (m as usize).pow(nu as u32) - (m as usize - 1).pow(nu as u32);
                assert_eq!(seen.len(), expected, "nu={nu} m={m}");
                assert!(seen.iter().all(|n| *n.iter().max().unwrap() == m));
                seen.sort();
                seen.dedup();
                assert_eq!(seen.len(), expected);
            }
        }
    }

    #[test]
    fn eigenvalue_examples() {
        let e = eigenvalue(&[1, 1, 1], 1.0).unwrap();
        assert!((e - 3.0 * PI * PI / 8.0).abs() < 1e-15);
        assert!((e - 3.701_102).abs() < 1e-6);
        let n = [2, 5, 3];
        assert!((eigenvalue(&n, 2.0).unwrap() - eigenvalue(&n, 1.0).unwrap() / 4.0).abs() < 1e-14);
        assert!(eigenvalue(&[1, 2, 1], 1.0).unwrap() > e);
        assert_eq!(eigenvalue(&[1, 0, 1], 1.0).unwrap_err(), Error::InvalidIndex(vec![1, 0, 1]));
        assert_eq!(spec(1.0, 3, 4).ground_index(), vec![1, 1, 1]);
    }

    #[test]
    fn heat_sum_is_separable() {
        let s = spec(1.0, 3, 40);
        let r = mode_sum(&HeatKernel { t: 1.0 }, &s, 1e-12).unwrap();
        let c = PI * PI / 8.0;
        let one_d: f64 = (1..200).map(|m| (-c * (m * m) as f64).exp()).sum();
        assert!((r.value - one_d.powi(3)).abs() < 1e-12);
        assert!(r.tail_bound < 1e-12);
    }

    #[test]
    fn single_mode_weight() {
        let s = spec(1.0, 3, 5);
        let w = SingleMode { index: vec![1, 1, 1], value: 2.5 };
        assert_eq!(mode_sum(&w, &s, 0.0).unwrap().value, 2.5);
    }

    #[test]
    fn small_cutoff_fails_certificate() {
        let s = spec(10.0, 3, 3);
        let err = mode_sum(&HeatKernel { t: 1.0 }, &s, 1e-10).unwrap_err();
        assert!(matches!(err, Error::TailToleranceExceeded { .. }));
        assert!(err.is_numerical());
    }

    #[test]
    fn trace_power_verdicts() {
        let s = spec(1.0, 3, 20);
        assert!(trace_h_power(2.0, &s).unwrap().converged);
        assert!(!trace_h_power(1.0, &s).unwrap().converged);
        let big = trace_h_power(40.0, &s).unwrap();
        let e0 = s.ground_energy();
        assert!((big.partial - e0.powf(-40.0)).abs() < 1e-6 * big.partial);
    }

    #[test]
    fn bose_tail_bounds_remainder() {
        let w = BoseFactor { beta_h: 1.0, mu: 2.0 };
        let coarse = spec(2.0, 3, 8);
        let fine = spec(2.0, 3, 40);
        let a = mode_sum(&w, &coarse, 1.0).unwrap();
        let b = mode_sum(&w, &fine, 1.0).unwrap();
        assert!(b.value - a.value <= a.tail_bound);
        assert!(b.value >= a.value);
    }
}
