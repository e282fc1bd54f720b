//! Initial data for the experiment suite.

use std::f64::consts::PI;

use clm_core::hdw::{enforce_mean_zero, fourier_from_tilde, TildeCoeffs};
use clm_core::linear::Parity;
use clm_core::profiles::bump_field;
use clm_core::SpectralField;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{ConfigError, InitDescriptor};

fn damped(rng: &mut ChaCha8Rng, k: usize) -> f64 {
    rng.gen_range(-1.0..1.0) / (k as f64).powi(3)
}

/// `‖c‖_𝓗DW = eps` perturbation of `-sin θ` drawn in the tilde basis of
/// order `n - 1`, so that the Fourier field has order `n`.
pub fn ground_perturbation(n: usize, eps: f64, seed: u64, mean_zero: bool) -> SpectralField {
    let k = n - 1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = TildeCoeffs::zeros(k);
    for m in 1..=k {
        c.odd[m] = damped(&mut rng, m);
        c.even[m] = damped(&mut rng, m);
    }
    if mean_zero {
        enforce_mean_zero(&mut c);
    } else {
        c.even[0] = rng.gen_range(-1.0..1.0);
    }
    let s = eps / c.norm_sq().sqrt();
    for x in c.odd.iter_mut().chain(c.even.iter_mut()) {
        *x *= s;
    }
    let mut eta = fourier_from_tilde(&c).resized(n);
    if mean_zero {
        eta.mean = 0.0;
    }
    eta
}

/// Fourier coefficients `1..=n` of one parity with `Σ c_k² = eps²`.
pub fn excited_perturbation(n: usize, eps: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = vec![0.0; n + 1];
    for (k, x) in c.iter_mut().enumerate().skip(1) {
        *x = damped(&mut rng, k);
    }
    let s = eps / c.iter().map(|x| x * x).sum::<f64>().sqrt();
    c.iter_mut().for_each(|x| *x *= s);
    c
}

/// `cos θ - 1` at order `n`.
pub fn cos_minus_one(n: usize) -> SpectralField {
    let mut f = SpectralField::cos_mode(1, 1.0, n);
    f.mean = -1.0;
    f
}

/// Realizes `descriptor` as a Fourier field of order `n`.
pub fn make_initial(descriptor: &InitDescriptor, n: usize) -> Result<SpectralField, ConfigError> {
    let invalid = |m: String| Err(ConfigError::Invalid(m));
    if n < 2 {
        return invalid(format!("N must be at least 2, got {n}"));
    }
    if let Some(eps) = descriptor.eps() {
        if !(eps > 0.0 && eps.is_finite()) {
            return invalid(format!("eps must be positive, got {eps}"));
        }
    }
    Ok(match *descriptor {
        InitDescriptor::Bump { a } => {
            if !(a > 0.0 && a <= PI) {
                return invalid(format!("bump half-width must lie in (0, π], got {a}"));
            }
            bump_field(a, n)
        }
        InitDescriptor::GroundPerturb {
            eps,
            seed,
            mean_zero,
        } => &SpectralField::sin_mode(1, -1.0, n) + &ground_perturbation(n, eps, seed, mean_zero),
        InitDescriptor::ShiftedGround { eps, seed, alpha } => {
            if !alpha.is_finite() {
                return invalid(format!("alpha must be finite, got {alpha}"));
            }
            let eta = ground_perturbation(n, eps, seed, true);
            let mut w =
                &SpectralField::sin_mode(1, -1.0, n) + &eta.add_scaled(-alpha, &cos_minus_one(n));
            w.mean = alpha;
            w
        }
        InitDescriptor::ExcitedPerturb { eps, parity, seed } => {
            let c = excited_perturbation(n, eps, seed);
            let mut w = SpectralField::sin_mode(2, -1.0, n);
            let target = match parity {
                Parity::Even => &mut w.cos,
                Parity::Odd => &mut w.sin,
            };
            for (k, x) in c.iter().enumerate().skip(1) {
                target[k - 1] += x;
            }
            w
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use clm_core::hdw::hdw_norm;
    use clm_core::spectral::to_grid;

    #[test]
    fn ground_perturbation_is_mean_zero_and_sized() {
        let w = make_initial(
            &InitDescriptor::GroundPerturb {
                eps: 0.01,
                seed: 4,
                mean_zero: true,
            },
            64,
        )
        .unwrap();
        assert_eq!(w.mean, 0.0);
        assert_eq!(w.order(), 64);
        let eta = &w - &SpectralField::sin_mode(1, -1.0, 64);
        assert!((hdw_norm(&eta).unwrap() - 0.01).abs() < 1e-12);
        let free = ground_perturbation(64, 0.01, 4, false);
        assert!(free.mean.abs() > 1e-6);
    }

    #[test]
    fn shifted_ground_carries_alpha_as_mean() {
        let w = make_initial(
            &InitDescriptor::ShiftedGround {
                eps: 0.01,
                seed: 4,
                alpha: 0.02,
            },
            32,
        )
        .unwrap();
        assert_eq!(w.mean, 0.02);
        assert!(w.eval(0.0).abs() < 1e-15);
    }

    #[test]
    fn bump_is_nonnegative_on_grid() {
        let w = make_initial(&InitDescriptor::Bump { a: 2.0 }, 256).unwrap();
        let g = to_grid(&w, 2048).unwrap();
        assert!(g.min() >= -1e-10 * g.max_abs());
        assert!(make_initial(&InitDescriptor::Bump { a: 4.0 }, 16).is_err());
    }

    #[test]
    fn even_excited_has_only_cosines() {
        let d = InitDescriptor::ExcitedPerturb {
            eps: 0.01,
            parity: Parity::Even,
            seed: 9,
        };
        let w = make_initial(&d, 32).unwrap();
        let eta = &w - &SpectralField::sin_mode(2, -1.0, 32);
        assert!(eta.sin.iter().all(|&x| x == 0.0));
        assert_eq!(eta.mean, 0.0);
        assert!((eta.l2_norm() / PI.sqrt() - 0.01).abs() < 1e-14);
    }

    #[test]
    fn seeds_are_reproducible() {
        let d = InitDescriptor::GroundPerturb {
            eps: 0.05,
            seed: 11,
            mean_zero: true,
        };
        assert_eq!(make_initial(&d, 16).unwrap(), make_initial(&d, 16).unwrap());
        assert_ne!(
            make_initial(&d, 16).unwrap(),
            make_initial(&d.clone().with_seed(12), 16).unwrap()
        );
        assert!(make_initial(&d.with_eps(0.0), 16).is_err());
    }
}
