//! Finite linear combinations of Weyl generators W^h(f) over a complex label
//! space C^n, with product W(f)W(g) = e^{-i h sigma(f,g)/2} W(f+g),
//! adjoint W(f)* = W(-f) and the Poisson bracket of the commutative case.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_complex::Complex64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Two labels closer than this in every coordinate are the same generator.
pub const MERGE_TOL: f64 = 1e-12;
/// Coefficients below this magnitude are dropped after every operation.
pub const PRUNE_TOL: f64 = 1e-15;

/// Coordinates of a vector in a fixed orthonormal basis of the label space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Label(#[serde(with = "complex_vec")] pub Vec<Complex64>);

impl Label {
    pub fn new(coords: Vec<Complex64>) -> Self {
        Label(coords)
    }

    pub fn zero(dim: usize) -> Self {
        Label(vec![Complex64::new(0.0, 0.0); dim])
    }

    pub fn from_reals(re: &[f64]) -> Self {
        Label(re.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// <f, g>, antilinear in the first argument.
    pub fn inner(&self, other: &Label) -> Complex64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|c| c.norm_sqr()).sum()
    }

    /// sigma(f, g) = Im <f, g>.
    pub fn sigma(&self, other: &Label) -> f64 {
        self.inner(other).im
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|c| c.re.abs() < MERGE_TOL && c.im.abs() < MERGE_TOL)
    }

    pub fn scale(&self, s: f64) -> Label {
        Label(self.0.iter().map(|c| c * s).collect())
    }

    fn key(&self) -> LabelKey {
        LabelKey(
            self.0
                .iter()
                .flat_map(|c| [quantize_coord(c.re), quantize_coord(c.im)])
                .collect(),
        )
    }
}

fn quantize_coord(x: f64) -> i64 {
    let r = (x / MERGE_TOL).round();
    if r == 0.0 {
        0
    } else {
        r as i64
    }
}

impl Add for &Label {
    type Output = Label;
    fn add(self, rhs: &Label) -> Label {
        Label(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &Label {
    type Output = Label;
    fn sub(self, rhs: &Label) -> Label {
        Label(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl Neg for &Label {
    type Output = Label;
    fn neg(self) -> Label {
        Label(self.0.iter().map(|a| -a).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct LabelKey(Vec<i64>);

/// Element of the *-algebra of finite linear combinations of W^h(f).
#[derive(Debug, Clone)]
pub struct WeylElement {
    hbar: f64,
    dim: usize,
    terms: BTreeMap<LabelKey, (Label, Complex64)>,
}

impl WeylElement {
    pub fn zero(hbar: f64, dim: usize) -> Self {
        WeylElement { hbar, dim, terms: BTreeMap::new() }
    }

    pub fn unit(hbar: f64, dim: usize) -> Self {
        Self::generator(hbar, Label::zero(dim), Complex64::new(1.0, 0.0))
    }

    /// c W^h(f).
    pub fn generator(hbar: f64, label: Label, coeff: Complex64) -> Self {
        let mut e = WeylElement::zero(hbar, label.dim());
        e.push(label, coeff);
        e
    }

    pub fn from_terms(hbar: f64, dim: usize, terms: impl IntoIterator<Item = (Label, Complex64)>) -> Result<Self> {
        let mut e = WeylElement::zero(hbar, dim);
        for (l, c) in terms {
            if l.dim() != dim {
                return Err(Error::MismatchedDimension(dim, l.dim()));
            }
            e.push(l, c);
        }
        e.prune();
        Ok(e)
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Label, Complex64)> {
        self.terms.values().map(|(l, c)| (l, *c))
    }

    /// Coefficient of W^h(f), zero if absent.
    pub fn coeff(&self, label: &Label) -> Complex64 {
        self.terms
            .get(&label.key())
            .map(|(_, c)| *c)
            .unwrap_or_default()
    }

    fn push(&mut self, label: Label, coeff: Complex64) {
        let key = label.key();
        self.terms
            .entry(key)
            .and_modify(|(_, c)| *c += coeff)
            .or_insert((label, coeff));
    }

    fn prune(&mut self) {
        self.terms.retain(|_, (_, c)| c.norm() >= PRUNE_TOL);
    }

    /// Same deformation parameter, rescaled coefficients per label.
    pub(crate) fn map_coeffs(&self, hbar: f64, f: impl Fn(&Label, Complex64) -> Complex64) -> WeylElement {
        let mut out = WeylElement::zero(hbar, self.dim);
        for (l, c) in self.terms() {
            out.push(l.clone(), f(l, c));
        }
        // rescaling never merges labels, so only exact zeros are dropped
        out.terms.retain(|_, (_, c)| *c != Complex64::new(0.0, 0.0));
        out
    }

    fn check_compatible(&self, other: &WeylElement) -> Result<()> {
        if self.hbar != other.hbar {
            return Err(Error::MismatchedHbar(self.hbar, other.hbar));
        }
        if self.dim != other.dim {
            return Err(Error::MismatchedDimension(self.dim, other.dim));
        }
        Ok(())
    }

    pub fn scale(&self, s: Complex64) -> WeylElement {
        self.map_coeffs(self.hbar, |_, c| c * s)
    }

    pub fn add(&self, other: &WeylElement) -> Result<WeylElement> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        for (l, c) in other.terms() {
            out.push(l.clone(), c);
        }
        out.prune();
        Ok(out)
    }

    pub fn sub(&self, other: &WeylElement) -> Result<WeylElement> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    /// Bilinear extension of W(f)W(g) = e^{-i h sigma(f,g)/2} W(f+g).
    pub fn multiply(&self, other: &WeylElement) -> Result<WeylElement> {
        self.check_compatible(other)?;
        let mut out = WeylElement::zero(self.hbar, self.dim);
        for (f, a) in self.terms() {
            for (g, b) in other.terms() {
                let phase = Complex64::from_polar(1.0, -0.5 * self.hbar * f.sigma(g));
                out.push(f + g, a * b * phase);
            }
        }
        out.prune();
        Ok(out)
    }

    /// Antilinear extension of W(f)* = W(-f).
    pub fn adjoint(&self) -> WeylElement {
        let mut out = WeylElement::zero(self.hbar, self.dim);
        for (f, c) in self.terms() {
            out.push(-f, c.conj());
        }
        out.prune();
        out
    }

    /// {W0(f), W0(g)} = sigma(g, f) W0(f+g), extended bilinearly.
    pub fn poisson_bracket(&self, other: &WeylElement) -> Result<WeylElement> {
        if self.hbar != 0.0 {
            return Err(Error::NonzeroHbar(self.hbar));
        }
        if other.hbar != 0.0 {
            return Err(Error::NonzeroHbar(other.hbar));
        }
        self.check_compatible(other)?;
        let mut out = WeylElement::zero(0.0, self.dim);
        for (f, a) in self.terms() {
            for (g, b) in other.terms() {
                let s = g.sigma(f);
                if s != 0.0 {
                    out.push(f + g, a * b * s);
                }
            }
        }
        out.prune();
        Ok(out)
    }

    /// (1/(i h)) (ab - ba); on generators -(2/h) sin(h sigma(f,g)/2) W(f+g).
    pub fn scaled_commutator(&self, other: &WeylElement) -> Result<WeylElement> {
        self.check_compatible(other)?;
        if self.hbar <= 0.0 {
            return Err(Error::ZeroHbar);
        }
        let h = self.hbar;
        let mut out = WeylElement::zero(h, self.dim);
        for (f, a) in self.terms() {
            for (g, b) in other.terms() {
                let s = f.sigma(g);
                let c = -(2.0 / h) * (0.5 * h * s).sin();
                if c != 0.0 {
                    out.push(f + g, a * b * c);
                }
            }
        }
        out.prune();
        Ok(out)
    }

    /// Canonical central state: the coefficient of the unit.
    pub fn central_state(&self) -> Complex64 {
        self.coeff(&Label::zero(self.dim))
    }

    /// (sqrt(sum |c|^2), sum |c|): lower and upper bounds on the C*-norm.
    pub fn norm_bounds(&self) -> (f64, f64) {
        let l2 = self.terms().map(|(_, c)| c.norm_sqr()).sum::<f64>().sqrt();
        let l1 = self.terms().map(|(_, c)| c.norm()).sum();
        (l2, l1)
    }

    /// Coefficient-wise comparison; labels are matched through the merge key.
    pub fn approx_eq(&self, other: &WeylElement, tol: f64) -> bool {
        if self.hbar != other.hbar || self.dim != other.dim {
            return false;
        }
        let keys: std::collections::BTreeSet<_> = self.terms.keys().chain(other.terms.keys()).collect();
        keys.into_iter().all(|k| {
            let a = self.terms.get(k).map(|t| t.1).unwrap_or_default();
            let b = other.terms.get(k).map(|t| t.1).unwrap_or_default();
            (a - b).norm() <= tol
        })
    }
}

impl fmt::Display for WeylElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (l, c)) in self.terms().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({c})W{}(", self.hbar)?;
            for (j, x) in l.0.iter().enumerate() {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{x}")?;
            }
            write!(f, ")")?;
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct TermRepr {
    label: Label,
    #[serde(with = "complex_pair")]
    coeff: Complex64,
}

#[derive(Serialize, Deserialize)]
struct ElementRepr {
    hbar: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dim: Option<usize>,
    terms: Vec<TermRepr>,
}

impl Serialize for WeylElement {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ElementRepr {
            hbar: self.hbar,
            dim: self.terms.is_empty().then_some(self.dim),
            terms: self
                .terms()
                .map(|(l, c)| TermRepr { label: l.clone(), coeff: c })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for WeylElement {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = ElementRepr::deserialize(d)?;
        if r.hbar < 0.0 || !r.hbar.is_finite() {
            return Err(D::Error::custom("hbar must be a finite nonnegative number"));
        }
        let dim = match (r.dim, r.terms.first()) {
            (_, Some(t)) => t.label.dim(),
            (Some(d), None) => d,
            (None, None) => 0,
        };
        WeylElement::from_terms(r.hbar, dim, r.terms.into_iter().map(|t| (t.label, t.coeff)))
            .map_err(D::Error::custom)
    }
}

/// [re, im] pairs.
pub(crate) mod complex_pair {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(c: &Complex64, s: S) -> Result<S::Ok, S::Error> {
        [c.re, c.im].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Complex64, D::Error> {
        let [re, im] = <[f64; 2]>::deserialize(d)?;
        Ok(Complex64::new(re, im))
    }
}

pub(crate) mod complex_vec {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[Complex64], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|c| [c.re, c.im]).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Complex64>, D::Error> {
        let v = Vec::<[f64; 2]>::deserialize(d)?;
        Ok(v.into_iter().map(|[re, im]| Complex64::new(re, im)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn lab(coords: &[(f64, f64)]) -> Label {
        Label(coords.iter().map(|&(a, b)| c(a, b)).collect())
    }

    #[test]
    fn product_phase_on_generators() {
        let f = lab(&[(1.0, 0.0)]);
        let g = lab(&[(0.0, 1.0)]);
        assert_eq!(f.sigma(&g), 1.0);
        let a = WeylElement::generator(1.0, f.clone(), c(1.0, 0.0));
        let b = WeylElement::generator(1.0, g.clone(), c(1.0, 0.0));
        let ab = a.multiply(&b).unwrap();
        assert_eq!(ab.len(), 1);
        let expected = Complex64::from_polar(1.0, -0.5);
        assert!((ab.coeff(&lab(&[(1.0, 1.0)])) - expected).norm() < 1e-15);
    }

    #[test]
    fn unit_law() {
        let a = WeylElement::from_terms(
            0.7,
            2,
            [
                (lab(&[(1.0, 0.5), (0.0, -2.0)]), c(2.0, 1.0)),
                (lab(&[(0.3, 0.0), (1.0, 1.0)]), c(0.0, -1.0)),
            ],
        )
        .unwrap();
        let one = WeylElement::unit(0.7, 2);
        assert!(a.multiply(&one).unwrap().approx_eq(&a, 1e-15));
        assert!(one.multiply(&a).unwrap().approx_eq(&a, 1e-15));
    }

    #[test]
    fn commutative_at_zero_hbar() {
        let a = WeylElement::generator(0.0, lab(&[(1.0, 0.0)]), c(1.0, 0.0));
        let b = WeylElement::generator(0.0, lab(&[(0.0, 1.0)]), c(1.0, 0.0));
        let ab = a.multiply(&b).unwrap();
        assert!((ab.coeff(&lab(&[(1.0, 1.0)])) - c(1.0, 0.0)).norm() < 1e-15);
        assert!(ab.approx_eq(&b.multiply(&a).unwrap(), 0.0));
    }

    #[test]
    fn mismatched_inputs_rejected() {
        let a = WeylElement::unit(1.0, 1);
        let b = WeylElement::unit(0.5, 1);
        assert_eq!(a.multiply(&b).unwrap_err(), Error::MismatchedHbar(1.0, 0.5));
        let b = WeylElement::unit(1.0, 2);
        assert_eq!(a.multiply(&b).unwrap_err(), Error::MismatchedDimension(1, 2));
    }

    #[test]
    fn adjoint_examples() {
        let f = lab(&[(1.0, 2.0)]);
        let g = lab(&[(-0.5, 0.0)]);
        let a = WeylElement::from_terms(1.0, 1, [(f.clone(), c(2.0, 0.0)), (g.clone(), c(0.0, 3.0))]).unwrap();
        let s = a.adjoint();
        assert_eq!(s.coeff(&-&f), c(2.0, 0.0));
        assert_eq!(s.coeff(&-&g), c(0.0, -3.0));
        assert!(s.adjoint().approx_eq(&a, 0.0));
        let one = WeylElement::unit(1.0, 1);
        assert!(one.adjoint().approx_eq(&one, 0.0));
    }

    #[test]
    fn poisson_examples() {
        let f = lab(&[(1.0, 0.0)]);
        let g = lab(&[(0.0, 1.0)]);
        let a = WeylElement::generator(0.0, f.clone(), c(1.0, 0.0));
        let b = WeylElement::generator(0.0, g, c(1.0, 0.0));
        let pb = a.poisson_bracket(&b).unwrap();
        assert_eq!(pb.coeff(&lab(&[(1.0, 1.0)])), c(-1.0, 0.0));
        assert!(a.poisson_bracket(&WeylElement::unit(0.0, 1)).unwrap().is_empty());
        assert!(a.poisson_bracket(&a).unwrap().is_empty());
        let q = WeylElement::unit(0.1, 1);
        assert_eq!(q.poisson_bracket(&q).unwrap_err(), Error::NonzeroHbar(0.1));
    }

    #[test]
    fn central_state_examples() {
        let f = lab(&[(1.0, -1.0)]);
        assert_eq!(WeylElement::unit(1.0, 1).central_state(), c(1.0, 0.0));
        assert_eq!(WeylElement::generator(1.0, f.clone(), c(3.0, 0.0)).central_state(), c(0.0, 0.0));
        let a = WeylElement::from_terms(1.0, 1, [(f, c(2.0, 0.0)), (Label::zero(1), c(5.0, 0.0))]).unwrap();
        assert_eq!(a.central_state(), c(5.0, 0.0));
    }

    #[test]
    fn norm_bound_examples() {
        let a = WeylElement::from_terms(
            1.0,
            1,
            [(lab(&[(1.0, 0.0)]), c(2.0, 0.0)), (lab(&[(0.0, 1.0)]), c(0.0, 3.0))],
        )
        .unwrap();
        let (lo, hi) = a.norm_bounds();
        assert!((lo - 13f64.sqrt()).abs() < 1e-15);
        assert_eq!(hi, 5.0);
        let single = WeylElement::generator(2.0, lab(&[(0.3, 0.4)]), c(3.0, 4.0));
        assert_eq!(single.norm_bounds(), (5.0, 5.0));
        assert_eq!(WeylElement::zero(1.0, 1).norm_bounds(), (0.0, 0.0));
    }

    #[test]
    fn scaled_commutator_examples() {
        let f = lab(&[(1.0, 0.0)]);
        let g = lab(&[(0.0, 1.0)]);
        let a = WeylElement::generator(0.1, f.clone(), c(1.0, 0.0));
        let b = WeylElement::generator(0.1, g, c(1.0, 0.0));
        let sc = a.scaled_commutator(&b).unwrap();
        let v = sc.coeff(&lab(&[(1.0, 1.0)]));
        assert!((v.re - (-(2.0 / 0.1) * 0.05f64.sin())).abs() < 1e-14);
        assert!((v.re + 0.999583).abs() < 1e-6);
        // it equals (ab - ba)/(i h) computed from the product
        let ab = a.multiply(&b).unwrap();
        let ba = b.multiply(&a).unwrap();
        let direct = ab.sub(&ba).unwrap().scale(Complex64::new(0.0, -1.0 / 0.1));
        assert!(direct.approx_eq(&sc, 1e-13));
        let anti = b.scaled_commutator(&a).unwrap().scale(c(-1.0, 0.0));
        assert!(anti.approx_eq(&sc, 1e-15));
        let f2 = WeylElement::generator(0.1, f.scale(2.0), c(1.0, 0.0));
        assert!(a.scaled_commutator(&f2).unwrap().is_empty());
        let z = WeylElement::unit(0.0, 1);
        assert_eq!(z.scaled_commutator(&z).unwrap_err(), Error::ZeroHbar);
    }

    #[test]
    fn labels_merge_within_tolerance() {
        let a = WeylElement::from_terms(
            0.0,
            1,
            [(lab(&[(1.0, 0.0)]), c(1.0, 0.0)), (lab(&[(1.0 + 1e-14, 0.0)]), c(1.0, 0.0))],
        )
        .unwrap();
        assert_eq!(a.len(), 1);
        assert_eq!(a.coeff(&lab(&[(1.0, 0.0)])), c(2.0, 0.0));
    }

    #[test]
    fn json_schema() {
        let a = WeylElement::generator(0.5, lab(&[(1.0, 2.0)]), c(0.5, -1.0));
        let s = serde_json::to_string(&a).unwrap();
        assert_eq!(s, r#"{"hbar":0.5,"terms":[{"label":[[1.0,2.0]],"coeff":[0.5,-1.0]}]}"#);
        let back: WeylElement = serde_json::from_str(&s).unwrap();
        assert!(back.approx_eq(&a, 0.0));
        assert!(serde_json::from_str::<WeylElement>(r#"{"hbar":-1,"terms":[]}"#).is_err());
    }
}
