//! The quantization map Q_h(W^0(f)) = e^{-h ||f||^2/4} W^h(f) and its checks.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::states::{self, Excitation, ModeVector, StateSpec};
use crate::spectrum::MultiIndex;
use crate::testfn::TestFunction;
use crate::weyl::{Label, WeylElement};

fn damping(h: f64, f: &Label) -> f64 {
    (-0.25 * h * f.norm_sqr()).exp()
}

/// Q_h: classical (hbar = 0) element to the deformed algebra at hbar = h.
pub fn quantize(a: &WeylElement, h: f64) -> Result<WeylElement> {
    if !(h >= 0.0) {
        return Err(Error::NegativeHbar(h));
    }
    if a.hbar() != 0.0 {
        return Err(Error::NonzeroHbar(a.hbar()));
    }
    Ok(a.map_coeffs(h, |f, c| c * damping(h, f)))
}

#[derive(Debug, Clone)]
pub struct Preimage {
    pub element: WeylElement,
    /// l2 norm of the coefficients; large values signal that the input is far
    /// outside the range of Q_h.
    pub l2_norm: f64,
}

/// Inverse of Q_h on its range, coefficient by coefficient.
pub fn preimage(a: &WeylElement) -> Preimage {
    let h = a.hbar();
    let element = a.map_coeffs(0.0, |f, c| c / damping(h, f));
    let l2_norm = element.norm_bounds().0;
    Preimage { element, l2_norm }
}

fn require_positive(h: f64) -> Result<()> {
    if h > 0.0 {
        Ok(())
    } else if h == 0.0 {
        Err(Error::ZeroHbar)
    } else {
        Err(Error::NegativeHbar(h))
    }
}

fn check_dims(f: &Label, g: &Label) -> Result<()> {
    if f.dim() != g.dim() {
        return Err(Error::MismatchedDimension(f.dim(), g.dim()));
    }
    Ok(())
}

/// Norm of (1/(ih))[Q_h W(f), Q_h W(g)] - Q_h {W(f), W(g)}; both sides are
/// multiples of the single generator W^h(f + g), so the norm is exact.
pub fn dirac_residual(f: &Label, g: &Label, h: f64) -> Result<f64> {
    require_positive(h)?;
    check_dims(f, g)?;
    let s = f.sigma(g);
    let lhs = -(2.0 / h) * (0.5 * h * s).sin() * (-0.25 * h * (f.norm_sqr() + g.norm_sqr())).exp();
    let rhs = g.sigma(f) * (-0.25 * h * (f + g).norm_sqr()).exp();
    Ok((lhs - rhs).abs())
}

/// Norm of Q_h(W f) Q_h(W g) - Q_h(W f W g), again a single-generator multiple.
pub fn vonneumann_residual(f: &Label, g: &Label, h: f64) -> Result<f64> {
    require_positive(h)?;
    check_dims(f, g)?;
    let lhs = Complex64::from_polar((-0.25 * h * (f.norm_sqr() + g.norm_sqr())).exp(), -0.5 * h * f.sigma(g));
    let rhs = (-0.25 * h * (f + g).norm_sqr()).exp();
    Ok((lhs - rhs).norm())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RieffelPoint {
    pub h: f64,
    pub lower: f64,
    pub upper: f64,
}

/// h -> norm bounds of Q_h(a) over a grid.
pub fn rieffel_profile(a: &WeylElement, h_grid: &[f64]) -> Result<Vec<RieffelPoint>> {
    if h_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidSpec("h grid must be sorted ascending".into()));
    }
    h_grid
        .par_iter()
        .map(|&h| {
            let (lower, upper) = quantize(a, h)?.norm_bounds();
            Ok(RieffelPoint { h, lower, upper })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SdqRow {
    pub h: f64,
    pub dirac_residual: f64,
    pub vonneumann_residual: f64,
    pub rieffel_lower: f64,
    pub rieffel_upper: f64,
}

/// Residuals for the generator pair (f, g) and the Rieffel profile of `a`, per grid point.
pub fn sdq_scan(f: &Label, g: &Label, a: &WeylElement, h_grid: &[f64]) -> Result<Vec<SdqRow>> {
    let profile = rieffel_profile(a, h_grid)?;
    h_grid
        .par_iter()
        .zip(profile.par_iter())
        .map(|(&h, p)| {
            Ok(SdqRow {
                h,
                dirac_residual: dirac_residual(f, g, h)?,
                vonneumann_residual: vonneumann_residual(f, g, h)?,
                rieffel_lower: p.lower,
                rieffel_upper: p.upper,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    /// ||sum_{n<=k} n^{-2} W^h(nf)||_2 for k = 1..N.
    pub target_partial_l2: Vec<f64>,
    /// ||sum_{n<=k} e^{h n^2 ||f||^2/4} n^{-2} W^0(nf)||_2 for k = 1..N.
    pub preimage_partial_l2: Vec<f64>,
}

/// Partial sums of an element of the closure with no preimage under Q_h.
pub fn nonsurjectivity_witness(f: &Label, n_max: usize, h: f64) -> Result<Witness> {
    if f.is_zero() {
        return Err(Error::DomainViolation("witness label must be nonzero".into()));
    }
    if n_max < 2 {
        return Err(Error::InvalidSpec("witness needs N >= 2".into()));
    }
    if !(h >= 0.0) {
        return Err(Error::NegativeHbar(h));
    }
    let mut target = WeylElement::zero(h, f.dim());
    let mut out = Witness { target_partial_l2: Vec::with_capacity(n_max), preimage_partial_l2: Vec::with_capacity(n_max) };
    for n in 1..=n_max {
        let c = Complex64::new(1.0 / (n * n) as f64, 0.0);
        target = target.add(&WeylElement::generator(h, f.scale(n as f64), c))?;
        out.target_partial_l2.push(target.norm_bounds().0);
        out.preimage_partial_l2.push(preimage(&target).l2_norm);
    }
    Ok(out)
}

/// How the coordinates of a label are turned into a one-particle vector.
#[derive(Debug, Clone)]
pub enum LabelBasis {
    /// Coordinate i multiplies the box eigenfunction psi_{n_i}.
    Modes(Vec<MultiIndex>),
    /// Coordinate i multiplies the i-th test function (must be orthonormal).
    Functions(Vec<TestFunction>),
}

const ORTHONORMAL_TOL: f64 = 1e-8;

impl LabelBasis {
    pub fn dim(&self) -> usize {
        match self {
            LabelBasis::Modes(m) => m.len(),
            LabelBasis::Functions(f) => f.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            LabelBasis::Modes(m) => {
                let mut seen = m.clone();
                seen.sort();
                seen.dedup();
                if seen.len() != m.len() {
                    return Err(Error::DomainViolation("mode basis repeats an index".into()));
                }
                if let Some(bad) = m.iter().find(|n| n.contains(&0)) {
                    return Err(Error::InvalidIndex(bad.clone()));
                }
            }
            LabelBasis::Functions(fs) => {
                for (i, a) in fs.iter().enumerate() {
                    for (j, b) in fs.iter().enumerate().skip(i) {
                        let target = if i == j { 1.0 } else { 0.0 };
                        let ip = a.inner_product(b)?;
                        if (ip - target).norm() > ORTHONORMAL_TOL {
                            return Err(Error::DomainViolation(format!(
                                "label basis is not orthonormal: <e{i}, e{j}> = {ip}"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// The one-particle vector sum_i f_i e_i.
    pub fn embed(&self, f: &Label) -> Result<Excitation> {
        if f.dim() != self.dim() {
            return Err(Error::MismatchedDimension(self.dim(), f.dim()));
        }
        match self {
            LabelBasis::Modes(m) => Ok(ModeVector::from_pairs(m.iter().cloned().zip(f.0.iter().cloned())).into()),
            LabelBasis::Functions(fs) => {
                let nu = fs.first().map(|e| e.nu).unwrap_or(1);
                let mut out = TestFunction::zero(nu);
                for (e, c) in fs.iter().zip(&f.0) {
                    out = out.add(&e.scale(*c))?;
                }
                Ok(out.into())
            }
        }
    }
}

/// omega_h(Q_h(a)): the classical state obtained by pulling a quantum state back along Q_h.
pub fn pullback_expectation(spec: &StateSpec, a: &WeylElement, basis: &LabelBasis) -> Result<Complex64> {
    spec.validate()?;
    if !spec.kind.is_quantum() {
        return Err(Error::InvalidSpec("pullback needs a quantum state".into()));
    }
    if spec.kind.is_box() != matches!(basis, LabelBasis::Modes(_)) {
        return Err(Error::DomainViolation(
            "box states take a mode basis; infinite-volume states take test functions".into(),
        ));
    }
    basis.validate()?;
    let q = quantize(a, spec.h)?;
    let mut total = Complex64::new(0.0, 0.0);
    for (f, c) in q.terms() {
        if f.is_zero() {
            total += c;
            continue;
        }
        total += c * states::weyl_expectation(spec, &basis.embed(f)?)?.value;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::BoxSpectrum;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn lbl(v: &[Complex64]) -> Label {
        Label::new(v.to_vec())
    }

    #[test]
    fn quantize_examples() {
        let f = lbl(&[c(1.0, 0.0), c(0.0, 1.0)]);
        let a = WeylElement::generator(0.0, f.clone(), c(1.0, 0.0));
        assert!(quantize(&a, 0.0).unwrap().approx_eq(&a, 0.0));
        let q = quantize(&a, 0.5).unwrap();
        assert!((q.coeff(&f).re - (-0.25f64).exp()).abs() < 1e-15);
        assert!((q.coeff(&f).re - 0.778_801).abs() < 1e-6);
        let one = WeylElement::unit(0.0, 2);
        assert!(quantize(&one, 3.0).unwrap().approx_eq(&WeylElement::unit(3.0, 2), 0.0));
        assert_eq!(quantize(&a, -1.0).unwrap_err(), Error::NegativeHbar(-1.0));
    }

    #[test]
    fn preimage_examples() {
        let f = lbl(&[c(2.0, 0.0)]);
        let a = WeylElement::generator(1.0, f.clone(), c(0.5, 0.0));
        let p = preimage(&a);
        assert!((p.element.coeff(&f).re - 0.5 * 1f64.exp()).abs() < 1e-14);
        assert_eq!(p.element.hbar(), 0.0);
        assert!(preimage(&WeylElement::unit(1.0, 1)).element.approx_eq(&WeylElement::unit(0.0, 1), 0.0));
    }

    #[test]
    fn residual_anchors() {
        let f = lbl(&[c(1.0, 0.0)]);
        let g = lbl(&[c(0.0, 1.0)]);
        let d = dirac_residual(&f, &g, 0.1).unwrap();
        // closed form: sigma(f,g) = 1, sigma(g,f) = -1, ||f+g||^2 = 2
        let expect = (-(20.0) * (0.05f64).sin() * (-0.05f64).exp() + (-0.05f64).exp()).abs();
        assert!((d - expect).abs() < 1e-15);
        assert!((d - 3.97e-4).abs() < 1e-5, "{d}");
        let v = vonneumann_residual(&f, &g, 0.1).unwrap();
        assert!((v - (-0.05f64).exp() * (c(0.0, -0.05).exp() - 1.0).norm()).abs() < 1e-15);
        assert!((v - 4.756e-2).abs() < 1e-5);
        assert_eq!(dirac_residual(&f, &f.scale(2.0), 0.3).unwrap(), 0.0);
        assert_eq!(vonneumann_residual(&f, &Label::zero(1), 0.3).unwrap(), 0.0);
        assert_eq!(dirac_residual(&f, &g, 0.0).unwrap_err(), Error::ZeroHbar);
    }

    #[test]
    fn residual_matches_algebra() {
        let f = lbl(&[c(0.7, -0.2), c(0.1, 0.4)]);
        let g = lbl(&[c(-0.3, 0.5), c(1.0, 0.0)]);
        let h = 0.37;
        let wf = WeylElement::generator(0.0, f.clone(), c(1.0, 0.0));
        let wg = WeylElement::generator(0.0, g.clone(), c(1.0, 0.0));
        let comm = quantize(&wf, h).unwrap().scaled_commutator(&quantize(&wg, h).unwrap()).unwrap();
        let bracket = quantize(&wf.poisson_bracket(&wg).unwrap(), h).unwrap();
        let diff = comm.sub(&bracket).unwrap();
        assert!((diff.norm_bounds().1 - dirac_residual(&f, &g, h).unwrap()).abs() < 1e-14);
        let prod = quantize(&wf, h).unwrap().multiply(&quantize(&wg, h).unwrap()).unwrap();
        let qprod = quantize(&wf.multiply(&wg).unwrap(), h).unwrap();
        let diff = prod.sub(&qprod).unwrap();
        assert!((diff.norm_bounds().1 - vonneumann_residual(&f, &g, h).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn rieffel_single_term() {
        let f = lbl(&[c(1.0, 0.0), c(0.0, 1.0)]);
        let a = WeylElement::generator(0.0, f, c(1.0, 0.0));
        let p = rieffel_profile(&a, &[0.0, 0.5, 1.0]).unwrap();
        for (pt, e) in p.iter().zip([1.0, 0.778_801, 0.606_531]) {
            assert!((pt.lower - e).abs() < 1e-6 && (pt.upper - e).abs() < 1e-6);
        }
        let one = rieffel_profile(&WeylElement::unit(0.0, 2), &[0.0, 1.0, 10.0]).unwrap();
        assert!(one.iter().all(|p| p.lower == 1.0 && p.upper == 1.0));
    }

    #[test]
    fn witness_shape() {
        let f = lbl(&[c(1.0, 0.0)]);
        let w = nonsurjectivity_witness(&f, 10, 1.0).unwrap();
        let zeta4 = std::f64::consts::PI.powi(4) / 90.0;
        assert!((w.target_partial_l2[9] - zeta4.sqrt()).abs() < 1e-3);
        assert!(w.preimage_partial_l2[9] > 25f64.exp() / 100.0);
        assert!(w.preimage_partial_l2.windows(2).all(|p| p[1] > p[0]));
        let w0 = nonsurjectivity_witness(&f, 6, 0.0).unwrap();
        assert_eq!(w0.target_partial_l2, w0.preimage_partial_l2);
    }

    #[test]
    fn pullback_box_mode() {
        let b = BoxSpectrum::new(1.0, 3, 4).unwrap();
        let spec = StateSpec::quantum_box(b, 1.0, 1.0, 0.0).unwrap();
        let basis = LabelBasis::Modes(vec![vec![1, 1, 1]]);
        let a = WeylElement::generator(0.0, lbl(&[c(1.0, 0.0)]), c(1.0, 0.0));
        let v = pullback_expectation(&spec, &a, &basis).unwrap();
        let e0 = 3.0 * std::f64::consts::PI.powi(2) / 8.0;
        let x = (-e0).exp();
        let expect = (-0.25f64).exp() * (-(1.0 + x) / (4.0 * (1.0 - x))).exp();
        assert!((v.re - expect).abs() < 1e-15);
        let one = WeylElement::unit(0.0, 1);
        assert_eq!(pullback_expectation(&spec, &one, &basis).unwrap(), c(1.0, 0.0));
        let bad = LabelBasis::Functions(vec![TestFunction::centered_gaussian(3, 1.0, 1.0)]);
        let inf = StateSpec::quantum_inf_vol(3, 1.0, 1.0, -0.1).unwrap();
        assert!(matches!(pullback_expectation(&inf, &a, &bad), Err(Error::DomainViolation(_))));
    }
}
