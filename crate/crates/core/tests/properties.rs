use num_complex::Complex64;
use proptest::prelude::*;

use weyl_kms::equilibrium::{self, KmsMode, WeakDerivationSpec};
use weyl_kms::gibbsmc::{self, GaussianMeasureSpec};
use weyl_kms::quad;
use weyl_kms::quantize;
use weyl_kms::spectrum::{self, BoxSpectrum};
use weyl_kms::states::{self, Excitation, StateSpec};
use weyl_kms::testfn::{GaussTerm, OverlapTable, TestFunction};
use weyl_kms::weyl::{Label, WeylElement};

fn complex() -> impl Strategy<Value = Complex64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(a, b)| Complex64::new(a, b))
}

fn gaussian(nu: usize, amp: f64) -> impl Strategy<Value = TestFunction> {
    let term = (
        (-amp..amp, -amp..amp),
        prop::collection::vec(-1.0..1.0f64, nu),
        0.5..1.5f64,
        prop::collection::vec(-1.0..1.0f64, nu),
    )
        .prop_map(|((a, b), center, sigma, wave)| GaussTerm::new(Complex64::new(a, b), center, sigma, wave));
    prop::collection::vec(term, 1..=2).prop_map(move |terms| TestFunction::new(nu, terms).unwrap())
}

fn element(hbar: f64) -> impl Strategy<Value = WeylElement> {
    let label = prop::collection::vec((-8i32..=8, -8i32..=8), 2)
        .prop_map(|v| Label::new(v.into_iter().map(|(a, b)| Complex64::new(a as f64 / 4.0, b as f64 / 4.0)).collect()));
    prop::collection::vec((label, complex()), 1..4).prop_map(move |t| WeylElement::from_terms(hbar, 2, t).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn plancherel(f in gaussian(1, 1.0)) {
        let lhs = quad::integrate(|p| f.fourier_transform(&[p]).norm_sqr(), -30.0, 30.0, 1e-12, 1e-14).unwrap()
            / (2.0 * std::f64::consts::PI);
        prop_assert!((lhs - f.norm_sqr()).abs() <= 1e-9 * f.norm_sqr().max(1e-12));
    }

    #[test]
    fn parseval_partial_sums_increase(f in gaussian(1, 1.0), l in 1.5..4.0f64) {
        let partial = |n: u32| {
            let t = OverlapTable::new(&f, l, n);
            (1..=n).map(|k| t.coefficient(&[k]).norm_sqr()).sum::<f64>()
        };
        let (a, b) = (partial(8), partial(16));
        prop_assert!(b >= a - 1e-14);
        prop_assert!(b <= f.box_norm_sqr(l) * (1.0 + 1e-10) + 1e-14);
    }

    #[test]
    fn inverse_hamiltonian_homogeneous(f in gaussian(3, 1.0), c in complex()) {
        let q = f.inv_ham_quadratic_form().unwrap();
        let qc = f.scale(c).inv_ham_quadratic_form().unwrap();
        prop_assert!(q > 0.0);
        prop_assert!((qc - c.norm_sqr() * q).abs() <= 1e-10 * q.max(1e-300));
    }

    #[test]
    fn state_even_and_bounded(f in gaussian(3, 1.0), beta in 0.3..3.0f64, mu in -2.0..-0.01f64, alpha in 0.0..2.0f64) {
        let fx: Excitation = f.clone().into();
        let neg: Excitation = f.scale(Complex64::new(-1.0, 0.0)).into();
        for spec in [
            StateSpec::classical_inf_vol(3, beta, mu).unwrap(),
            StateSpec::classical_condensate(3, beta, alpha).unwrap(),
            StateSpec::quantum_inf_vol(3, beta, 0.5, mu).unwrap(),
        ] {
            // omega(W(f)) = exp(-Q(f)) lies in (0, 1] iff Q(f) is finite and nonnegative
            let (qa, _) = states::exponent(&spec, &fx).unwrap();
            let (qb, _) = states::exponent(&spec, &neg).unwrap();
            prop_assert!(qa.is_finite() && qa >= 0.0);
            prop_assert!((qa - qb).abs() <= 1e-12 * qa.max(1.0));
            let w = states::weyl_expectation(&spec, &fx).unwrap().value.re;
            prop_assert!((0.0..=1.0).contains(&w));
        }
    }

    #[test]
    fn gram_matrix_psd(fs in prop::collection::vec(gaussian(3, 0.7), 2..5), beta in 0.5..2.0f64, h in 0.1..2.0f64) {
        let spec = StateSpec::quantum_inf_vol(3, beta, h, -0.3).unwrap();
        let labels: Vec<Excitation> = fs.into_iter().map(Excitation::from).collect();
        let g = states::gram_matrix(&spec, &labels).unwrap();
        prop_assert!(states::min_eigenvalue(&g) >= -1e-10);
    }

    #[test]
    fn quantize_round_trip(a in element(0.0), h in 0.0..2.0f64) {
        let q = quantize::quantize(&a, h).unwrap();
        prop_assert!(quantize::preimage(&q).element.approx_eq(&a, 1e-12));
        prop_assert!(q.norm_bounds().0 <= a.norm_bounds().0 + 1e-15);
        prop_assert!(q.norm_bounds().1 <= a.norm_bounds().1 + 1e-15);
    }

    #[test]
    fn residuals_vanish_linearly(f in prop::collection::vec(complex(), 2), g in prop::collection::vec(complex(), 2)) {
        let (f, g) = (Label::new(f), Label::new(g));
        // |r(h)| <= C h with C from the first-order expansion
        let scale = (f.norm_sqr() + g.norm_sqr() + 1.0).powi(2);
        for h in [1e-3, 1e-2] {
            prop_assert!(quantize::dirac_residual(&f, &g, h).unwrap() <= scale * h);
            prop_assert!(quantize::vonneumann_residual(&f, &g, h).unwrap() <= scale * h);
        }
    }

    #[test]
    fn mu_net_exact(alpha in 0.01..5.0f64, l in 1.0..50.0f64, beta in 0.2..3.0f64) {
        let mu = equilibrium::mu_net_classical(alpha, l, beta, 3);
        let b = BoxSpectrum::new(l, 3, 1).unwrap();
        prop_assert!(mu < b.ground_energy());
        let back = 1.0 / (b.volume() * beta * (b.ground_energy() - mu));
        prop_assert!((back - alpha).abs() <= 1e-10 * alpha);
    }

    #[test]
    fn kms_analytic(f in gaussian(3, 0.5), g in gaussian(3, 0.5), beta in 0.3..3.0f64, mu in -2.0..-0.01f64, alpha in 0.0..3.0f64) {
        let (fx, gx): (Excitation, Excitation) = (f.into(), g.into());
        for spec in [StateSpec::classical_inf_vol(3, beta, mu).unwrap(), StateSpec::classical_condensate(3, beta, alpha).unwrap()] {
            let r = equilibrium::kms_residual(&spec, WeakDerivationSpec::for_state(&spec), &fx, &gx, KmsMode::Analytic).unwrap();
            prop_assert!(r < 1e-12);
        }
    }

    #[test]
    fn marginals_consistent(eig in prop::collection::vec(0.2..4.0f64, 2..5), beta in 0.5..2.0f64, seed in any::<u64>()) {
        let full = GaussianMeasureSpec::new(eig.clone(), beta).unwrap();
        let part = GaussianMeasureSpec::new(eig[..1].to_vec(), beta).unwrap();
        let a = gibbsmc::sample(&full, 20, seed).unwrap();
        let b = gibbsmc::sample(&part, 20, seed).unwrap();
        for i in 0..20 {
            prop_assert_eq!(&a.row(i)[..2], b.row(i));
        }
    }

    #[test]
    fn trace_verdict(s in 0.3..3.0f64, nu in 1usize..=4) {
        let b = BoxSpectrum::new(1.0, nu, 6).unwrap();
        let t = spectrum::trace_h_power(s, &b).unwrap();
        prop_assert_eq!(t.converged, 2.0 * s > nu as f64);
        prop_assert_eq!(t.tail_bound.is_finite(), t.converged);
    }
}

#[test]
fn weyl_law_smoke() {
    // N(lambda) ~ |box| omega_nu (2 lambda)^{nu/2} / (2 pi)^nu for H = -Delta/2
    let b = BoxSpectrum::new(1.0, 3, 60).unwrap();
    for lambda in [500.0, 2000.0] {
        let count = spectrum::count_below(&b, lambda) as f64;
        let ball = 4.0 * std::f64::consts::PI / 3.0;
        let weyl = b.volume() * ball * (2.0 * lambda).powf(1.5) / (2.0 * std::f64::consts::PI).powi(3);
        assert!((count / weyl - 1.0).abs() < 0.2, "{lambda}: {count} vs {weyl}");
    }
}
