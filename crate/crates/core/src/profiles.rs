//! Initial profiles shared by the solvers and the experiment harness.

use crate::spectral::{fft_friendly_len, from_grid, GridField, SpectralField};

/// Smooth compactly supported bump `exp(-1/(1 - (θ/a)²))` for `|θ| < a`.
pub fn bump(theta: f64, a: f64) -> f64 {
    let x = theta / a;
    if x.abs() < 1.0 {
        (-1.0 / (1.0 - x * x)).exp()
    } else {
        0.0
    }
}

/// `sqrt(bump)`, computed without squaring round-off.
pub fn sqrt_bump(theta: f64, a: f64) -> f64 {
    let x = theta / a;
    if x.abs() < 1.0 {
        (-0.5 / (1.0 - x * x)).exp()
    } else {
        0.0
    }
}

/// Projects a periodic function onto order `n` by sampling on a grid four
/// times finer than the Nyquist minimum.
pub fn project(n: usize, f: impl Fn(f64) -> f64) -> SpectralField {
    let m = fft_friendly_len(8 * n + 1);
    from_grid(&GridField::from_fn(m, f), n).expect("projection grid is large enough")
}

pub fn bump_field(a: f64, n: usize) -> SpectralField {
    project(n, |t| bump(t, a))
}

pub fn sqrt_bump_field(a: f64, n: usize) -> SpectralField {
    project(n, |t| sqrt_bump(t, a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::to_grid;

    #[test]
    fn bump_support_and_peak() {
        assert_eq!(bump(2.0, 2.0), 0.0);
        assert_eq!(bump(-2.5, 2.0), 0.0);
        assert!((bump(0.0, 2.0) - (-1.0f64).exp()).abs() < 1e-16);
        assert!((sqrt_bump(1.3, 2.0).powi(2) - bump(1.3, 2.0)).abs() < 1e-16);
    }

    #[test]
    fn projected_bump_is_nonnegative_up_to_roundoff() {
        let f = bump_field(2.0, 256);
        let g = to_grid(&f, 2048).unwrap();
        assert!(g.min() > -1e-10 * g.max_abs());
    }
}
