//! The weighted space 𝓗_DW of functions vanishing at `θ = 0` with
//! `∂_θη / sin(θ/2) ∈ L²`, its inner product
//! `⟨ξ, η⟩_g = (1/4π) ∫ ∂_θξ ∂_θη / sin²(θ/2) dθ`, and the orthonormal basis
//!
//! ```text
//! ẽ_k^(o) = sin((k+1)θ)/(k+1) - sin(kθ)/k,                  k ≥ 1
//! ẽ_k^(e) = (cos((k+1)θ) - 1)/(k+1) - (cos(kθ) - 1)/k,      k ≥ 1
//! ẽ_0^(e) = cos θ - 1
//! ```
//!
//! Every norm is evaluated in tilde-coefficient space, where it is a plain
//! Euclidean sum. The singular weight is only integrated directly by
//! [`basis_gram`] and [`g_inner_quadrature`], which exist for cross-checks.

use std::f64::consts::PI;

use ndarray::Array2;

use crate::error::HdwError;
use crate::spectral::{derivative, SpectralField};

/// Tolerance on `|η(0)|` for membership checks.
pub const VANISH_TOL: f64 = 1e-8;

/// Coefficients in the tilde basis. Vectors are indexed by mode number:
/// `odd[0]` is unused and kept at zero, `even[0]` is `η̃_0^(e)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TildeCoeffs {
    pub odd: Vec<f64>,
    pub even: Vec<f64>,
    /// `max(|η̃_K^(o)|, |η̃_K^(e)|)`: nonzero when the field leaks past the
    /// truncation (or, for the odd part, when `∂_θη(0) ≠ 0`).
    pub tail_residual: f64,
}

/// What to do when the field does not vanish at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VanishPolicy {
    #[default]
    Reject,
    /// Shift the mean so that `η(0) = 0` before converting.
    ShiftMean,
}

impl TildeCoeffs {
    pub fn zeros(k: usize) -> Self {
        TildeCoeffs {
            odd: vec![0.0; k + 1],
            even: vec![0.0; k + 1],
            tail_residual: 0.0,
        }
    }

    /// Truncation `K`.
    pub fn order(&self) -> usize {
        self.odd.len() - 1
    }

    /// Squared 𝓗_DW norm.
    pub fn norm_sq(&self) -> f64 {
        self.odd[1..].iter().chain(&self.even).map(|x| x * x).sum()
    }

    /// Squared quotient norm, omitting `η̃_0^(e)`.
    pub fn tilde_y_norm_sq(&self) -> f64 {
        self.odd[1..]
            .iter()
            .chain(&self.even[1..])
            .map(|x| x * x)
            .sum()
    }

    pub fn dot(&self, other: &TildeCoeffs) -> f64 {
        let k = self.order().min(other.order());
        let odd: f64 = (1..=k).map(|i| self.odd[i] * other.odd[i]).sum();
        let even: f64 = (0..=k).map(|i| self.even[i] * other.even[i]).sum();
        odd + even
    }
}

fn check_vanishing(eta: &SpectralField) -> Result<(), HdwError> {
    let value = eta.eval(0.0);
    if value.abs() > VANISH_TOL {
        return Err(HdwError::NotVanishingAtZero { value });
    }
    Ok(())
}

/// Expands `η` in the tilde basis up to mode `k`.
pub fn tilde_from_fourier(eta: &SpectralField, k: usize) -> Result<TildeCoeffs, HdwError> {
    tilde_from_fourier_with(eta, k, VanishPolicy::Reject)
}

pub fn tilde_from_fourier_with(
    eta: &SpectralField,
    k: usize,
    policy: VanishPolicy,
) -> Result<TildeCoeffs, HdwError> {
    if policy == VanishPolicy::Reject {
        check_vanishing(eta)?;
    }
    let mut c = TildeCoeffs::zeros(k);
    // odd: η̃_1 = -b_1, η̃_m = η̃_{m-1} - m b_m
    let mut acc = 0.0;
    for m in 1..=k {
        acc -= m as f64 * eta.b(m);
        c.odd[m] = acc;
    }
    // even: η̃_0 = Σ_j j a_j over every mode the field carries
    let closure: f64 = (1..=eta.order()).map(|j| j as f64 * eta.a(j)).sum();
    let mut acc = closure;
    c.even[0] = acc;
    for m in 1..=k {
        acc -= m as f64 * eta.a(m);
        c.even[m] = acc;
    }
    if k > 0 {
        c.tail_residual = c.odd[k].abs().max(c.even[k].abs());
    }
    Ok(c)
}

/// Forward expansion; the mean is set so that the result vanishes at 0.
pub fn fourier_from_tilde(c: &TildeCoeffs) -> SpectralField {
    let k = c.order();
    let n = k + 1;
    let mut f = SpectralField::zeros(n);
    for m in 1..=n {
        let prev_o = if m >= 2 { c.odd[m - 1] } else { 0.0 };
        let cur_o = if m <= k { c.odd[m] } else { 0.0 };
        f.sin[m - 1] = (prev_o - cur_o) / m as f64;
        let prev_e = c.even[m - 1];
        let cur_e = if m <= k { c.even[m] } else { 0.0 };
        f.cos[m - 1] = (prev_e - cur_e) / m as f64;
    }
    f.mean = -f.cos.iter().sum::<f64>();
    f
}

/// Default tilde truncation for a field of order `N`.
fn default_order(eta: &SpectralField) -> usize {
    eta.order().max(1)
}

/// `⟨ξ, η⟩_g` computed from tilde coefficients.
pub fn g_inner(xi: &SpectralField, eta: &SpectralField) -> Result<f64, HdwError> {
    let k = default_order(xi).max(default_order(eta));
    Ok(tilde_from_fourier(xi, k)?.dot(&tilde_from_fourier(eta, k)?))
}

pub fn hdw_norm(eta: &SpectralField) -> Result<f64, HdwError> {
    Ok(tilde_from_fourier(eta, default_order(eta))?
        .norm_sq()
        .sqrt())
}

/// Quotient norm of 𝓗_DW modulo the direction `cos θ - 1`.
pub fn tilde_y_norm(eta: &SpectralField) -> Result<f64, HdwError> {
    Ok(tilde_from_fourier(eta, default_order(eta))?
        .tilde_y_norm_sq()
        .sqrt())
}

/// `|η̃_0^(e) - Σ_{k≥1} η̃_k^(e) / (k(k+1))|`, zero iff `∫η = 0`.
pub fn mean_zero_relation_check(c: &TildeCoeffs) -> f64 {
    let s: f64 = (1..=c.order())
        .map(|k| c.even[k] / (k * (k + 1)) as f64)
        .sum();
    (c.even[0] - s).abs()
}

/// Sets `η̃_0^(e)` so that the represented field has zero mean.
pub fn enforce_mean_zero(c: &mut TildeCoeffs) {
    c.even[0] = (1..=c.order())
        .map(|k| c.even[k] / (k * (k + 1)) as f64)
        .sum();
}

/// Basis vector `ẽ_k^(o)` as a Fourier field.
pub fn odd_basis(k: usize) -> SpectralField {
    assert!(k >= 1);
    let n = k + 1;
    let mut f = SpectralField::zeros(n);
    f.sin[k] = 1.0 / (k + 1) as f64;
    f.sin[k - 1] = -1.0 / k as f64;
    f
}

/// Basis vector `ẽ_l^(e)` as a Fourier field (`l = 0` gives `cos θ - 1`).
pub fn even_basis(l: usize) -> SpectralField {
    if l == 0 {
        let mut f = SpectralField::cos_mode(1, 1.0, 1);
        f.mean = -1.0;
        return f;
    }
    let n = l + 1;
    let mut f = SpectralField::zeros(n);
    f.cos[l] = 1.0 / (l + 1) as f64;
    f.cos[l - 1] = -1.0 / l as f64;
    f.mean = 1.0 / l as f64 - 1.0 / (l + 1) as f64;
    f
}

/// Nodes for singular-weight quadrature: midpoints of a uniform grid, which
/// never hit `θ = 0`.
fn midpoint_nodes(m: usize) -> impl Iterator<Item = f64> {
    let m = if m % 2 == 1 { m + 1 } else { m };
    let h = 2.0 * PI / m as f64;
    (0..m).map(move |j| -PI + (j as f64 + 0.5) * h)
}

/// `∂_θη(θ) / sin(θ/2)` sampled at the quadrature nodes.
fn weighted_derivative_samples(eta: &SpectralField, m: usize) -> Vec<f64> {
    let d = derivative(eta);
    midpoint_nodes(m)
        .map(|t| d.eval(t) / (0.5 * t).sin())
        .collect()
}

/// `⟨ξ, η⟩_g` by direct quadrature of the singular weight. Exact for
/// trigonometric polynomials whose derivatives vanish at 0 once `m` exceeds
/// the combined order; intended for validation only.
pub fn g_inner_quadrature(xi: &SpectralField, eta: &SpectralField, m: usize) -> f64 {
    let sx = weighted_derivative_samples(xi, m);
    let se = weighted_derivative_samples(eta, m);
    let h = 2.0 * PI / sx.len() as f64;
    h / (4.0 * PI) * sx.iter().zip(&se).map(|(a, b)| a * b).sum::<f64>()
}

/// Gram matrix of `{ẽ_k^(o)}_{k=1..K} ∪ {ẽ_l^(e)}_{l=0..K}` (odd block first)
/// under `⟨·,·⟩_g`, by quadrature with `quadrature_m` nodes.
pub fn basis_gram(k: usize, quadrature_m: usize) -> Array2<f64> {
    let basis: Vec<SpectralField> = (1..=k)
        .map(odd_basis)
        .chain((0..=k).map(even_basis))
        .collect();
    let samples: Vec<Vec<f64>> = basis
        .iter()
        .map(|b| weighted_derivative_samples(b, quadrature_m))
        .collect();
    let h = 2.0 * PI / samples[0].len() as f64;
    let dim = basis.len();
    let mut gram = Array2::zeros((dim, dim));
    for i in 0..dim {
        for j in i..dim {
            let v = h / (4.0 * PI)
                * samples[i]
                    .iter()
                    .zip(&samples[j])
                    .map(|(a, b)| a * b)
                    .sum::<f64>();
            gram[[i, j]] = v;
            gram[[j, i]] = v;
        }
    }
    gram
}

/// Same Gram matrix through tilde coefficients.
pub fn basis_gram_coefficients(k: usize) -> Result<Array2<f64>, HdwError> {
    let coeffs: Vec<TildeCoeffs> = (1..=k)
        .map(odd_basis)
        .chain((0..=k).map(even_basis))
        .map(|b| tilde_from_fourier(&b, k + 1))
        .collect::<Result<_, _>>()?;
    let dim = coeffs.len();
    Ok(Array2::from_shape_fn((dim, dim), |(i, j)| {
        coeffs[i].dot(&coeffs[j])
    }))
}

/// `‖η‖_𝓗DW / ‖η‖_Ỹ`; bounded above by `sqrt(1 + Σ 1/(k(k+1))²)` on mean-zero
/// fields.
pub fn norm_equivalence_ratio(eta: &SpectralField) -> Result<f64, HdwError> {
    let c = tilde_from_fourier(eta, default_order(eta))?;
    Ok((c.norm_sq() / c.tilde_y_norm_sq()).sqrt())
}
