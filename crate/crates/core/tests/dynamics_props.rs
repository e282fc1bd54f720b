use clm_core::dynamics::{diagnostics, rhs, Integrator, ModelKind, Truncation};
use clm_core::hdw::{even_basis, odd_basis, tilde_from_fourier};
use clm_core::linear::{build_ground_tilde, Parity};
use clm_core::profiles::bump_field;
use clm_core::spectral::{derivative, GaugeChoice, SpectralField};
use clm_core::{BlowUpKind, DynamicsError};
use proptest::prelude::*;

fn smooth_field(n: usize) -> impl Strategy<Value = SpectralField> {
    (
        -1.0..1.0f64,
        prop::collection::vec(-1.0..1.0f64, n),
        prop::collection::vec(-1.0..1.0f64, n),
    )
        .prop_map(move |(mean, cos, sin)| {
            let damp = |k: usize| 0.5f64.powi(k as i32 + 1);
            SpectralField {
                mean,
                cos: cos.iter().enumerate().map(|(i, c)| c * damp(i)).collect(),
                sin: sin.iter().enumerate().map(|(i, s)| s * damp(i)).collect(),
            }
            .resized(2 * n)
        })
}

fn sorted_amplitudes(f: &SpectralField) -> Vec<f64> {
    let mut v: Vec<f64> = f.cos.iter().zip(&f.sin).map(|(a, b)| a.hypot(*b)).collect();
    v.sort_by(f64::total_cmp);
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn mass_is_conserved(w in smooth_field(8)) {
        let traj = Integrator::new(ModelKind::DeGregorio, GaugeChoice::MeanZero)
            .integrate(&w, 0.5, 0.01, 10)
            .unwrap();
        for (_, x) in &traj {
            prop_assert!((x.mean - w.mean).abs() <= 1e-12 * (1.0 + w.mean.abs()));
        }
    }

    #[test]
    fn odd_data_stays_odd(w in smooth_field(8)) {
        let w = w.odd_part();
        for gauge in [GaugeChoice::MeanZero, GaugeChoice::VanishAtZero] {
            let traj = Integrator::new(ModelKind::DeGregorio, gauge).integrate(&w, 1.0, 0.01, 100).unwrap();
            let end = &traj.last().unwrap().1;
            prop_assert!(end.mean.abs() < 1e-12);
            prop_assert!(end.cos.iter().all(|a| a.abs() < 1e-12));
        }
    }

    #[test]
    fn gauges_agree_up_to_translation(w in smooth_field(8)) {
        let run = |g| Integrator::new(ModelKind::DeGregorio, g).integrate(&w, 1.0, 0.01, 50).unwrap();
        let (a, b) = (run(GaugeChoice::MeanZero), run(GaugeChoice::VanishAtZero));
        for ((ta, fa), (tb, fb)) in a.iter().zip(&b) {
            prop_assert_eq!(ta, tb);
            prop_assert!((fa.mean - fb.mean).abs() < 1e-6);
            for (x, y) in sorted_amplitudes(fa).iter().zip(&sorted_amplitudes(fb)) {
                prop_assert!((x - y).abs() < 1e-6);
            }
        }
    }
}

#[test]
fn rk4_is_fourth_order() {
    let mut w = SpectralField::cos_mode(1, 0.5, 16);
    w.mean = 1.0;
    w.sin[1] = 0.3;
    let integ = Integrator::new(ModelKind::DeGregorio, GaugeChoice::MeanZero);
    let defect = |dt: f64| {
        let one = integ.step(&w, dt);
        let two = integ.step(&integ.step(&w, 0.5 * dt), 0.5 * dt);
        (&one - &two).l2_norm()
    };
    let ratio = defect(0.1) / defect(0.05);
    // local defect ~ dt^5
    assert!((24.0..40.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn clm_from_cosine_hits_the_ceiling() {
    let w = SpectralField::cos_mode(1, 1.0, 64);
    let err = Integrator::new(ModelKind::Clm, GaugeChoice::MeanZero)
        .with_ceiling(1e3)
        .integrate(&w, 20.0, 1e-3, 1000)
        .unwrap_err();
    match err {
        DynamicsError::BlowUp {
            kind,
            last_valid_t,
            last_state,
            ..
        } => {
            assert_eq!(kind, BlowUpKind::Ceiling);
            assert!(last_valid_t > 0.0);
            assert!(last_state.is_finite());
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn sqrt_h1_dot_of_narrow_bump_matches_frozen_value_and_quadrature() {
    const FROZEN: f64 = 1.181_535_185_640_759_7;
    let d = diagnostics(&bump_field(1.0, 512), 0.0, None);
    let dot = d.sqrt_h1_dot.unwrap();
    assert!((dot - FROZEN).abs() < 1e-12, "{dot}");
    // ‖∂√bump‖² = ∫ e^{-1/(1-x²)} x² / (1-x²)⁴ over (-1, 1), Simpson
    let m = 200_000;
    let h = 2.0 / m as f64;
    let f = |x: f64| {
        let s = 1.0 - x * x;
        if s <= 0.0 {
            0.0
        } else {
            (-1.0 / s).exp() * x * x / s.powi(4)
        }
    };
    let sum: f64 = (0..=m)
        .map(|i| {
            let w = if i == 0 || i == m {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            w * f(-1.0 + i as f64 * h)
        })
        .sum();
    let oracle = (sum * h / 3.0).sqrt();
    assert!((dot - oracle).abs() / oracle < 1e-6, "{dot} vs {oracle}");
}

fn perturbed_ground(n: usize, eps: f64) -> SpectralField {
    // mean-zero: a_1 e_1^(e) + a_0 e_0^(e) with a_0 = a_1 / 2
    let eta = &(&odd_basis(2) + &even_basis(1)) + &even_basis(0).scaled(0.5);
    SpectralField::sin_mode(1, -1.0, n).add_scaled(eps, &eta.resized(n))
}

#[test]
fn perturbed_ground_state_relaxes() {
    let n = 64;
    let eq = SpectralField::sin_mode(1, -1.0, n);
    let w = perturbed_ground(n, 0.01);
    assert!(w.mean.abs() < 1e-15);
    let traj = Integrator::new(ModelKind::DeGregorio, GaugeChoice::VanishAtZero)
        .with_truncation(Truncation::MomentPreserving)
        .integrate(&w, 6.0, 2e-3, 250)
        .unwrap();
    let norms: Vec<f64> = traj
        .iter()
        .map(|(t, x)| diagnostics(x, *t, Some(&eq)).hdw_perturb.unwrap())
        .collect();
    assert!(norms.windows(2).all(|p| p[1] < p[0]), "{norms:?}");
    assert!(norms.last().unwrap() < &(norms[0] * (-0.3 * 6.0f64).exp()));
}

#[test]
fn moment_preserving_flow_pins_origin_values() {
    let n = 32;
    let w = perturbed_ground(n, 0.05);
    let end = Integrator::new(ModelKind::DeGregorio, GaugeChoice::VanishAtZero)
        .with_truncation(Truncation::MomentPreserving)
        .integrate(&w, 2.0, 5e-3, 400)
        .unwrap()
        .pop()
        .unwrap()
        .1;
    assert!(end.eval(0.0).abs() < 1e-14);
    assert!((derivative(&end).eval(0.0) - derivative(&w).eval(0.0)).abs() < 1e-12);
}

/// The moment-preserving right-hand side, linearized at `-sin θ` and read in
/// tilde coordinates, is exactly the Dirichlet-truncated tilde operator.
#[test]
fn moment_preserving_linearization_is_dirichlet_tilde_operator() {
    let n = 16;
    let k = n - 1;
    let eq = SpectralField::sin_mode(1, -1.0, n);
    let rhs_mp = |w: &SpectralField| {
        Integrator::new(ModelKind::DeGregorio, GaugeChoice::VanishAtZero)
            .with_truncation(Truncation::MomentPreserving)
            .rhs(w)
    };
    assert!(rhs(&eq, ModelKind::DeGregorio, GaugeChoice::VanishAtZero).max_abs_coeff() < 1e-14);
    let h = 1e-3;
    for parity in [Parity::Odd, Parity::Even] {
        let op = build_ground_tilde(k, parity).unwrap();
        let first = if parity == Parity::Odd { 1 } else { 0 };
        for col in first..=k {
            let dir = match parity {
                Parity::Odd => odd_basis(col),
                Parity::Even => even_basis(col),
            }
            .resized(n);
            // the right-hand side is quadratic, so central differences are exact
            let lin = (&rhs_mp(&eq.add_scaled(h, &dir)) - &rhs_mp(&eq.add_scaled(-h, &dir)))
                .scaled(0.5 / h);
            let c = tilde_from_fourier(&lin, k).unwrap();
            let mut e = vec![0.0; k + 1];
            e[col] = 1.0;
            let expected = op.apply(&e);
            for row in first..=k {
                let got = match parity {
                    Parity::Odd => c.odd[row],
                    Parity::Even => c.even[row],
                };
                assert!(
                    (got - expected[row]).abs() < 1e-9,
                    "{parity:?} ({row},{col}): {got} vs {}",
                    expected[row]
                );
            }
        }
    }
}
