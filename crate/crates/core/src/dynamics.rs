//! De Gregorio and CLM right-hand sides, RK4 time stepping, and the
//! diagnostics tracked along trajectories.
//!
//! De Gregorio: `∂_tω + u∂_θω = ω∂_θu` with `∂_θu = Hω`.
//! CLM: `∂_tω = ωHω`.

use std::f64::consts::PI;

use crate::error::{BlowUpKind, DynamicsError};
use crate::hdw::{tilde_from_fourier_with, VanishPolicy};
use crate::spectral::{
    derivative, fft_friendly_len, fold_moments, from_grid, hilbert, product_grid_len,
    sum_of_products, sum_of_products_exact, to_grid, velocity_from_vorticity, Dealias, GaugeChoice,
    SpectralField,
};

/// Default blow-up ceiling on `‖ω‖_{L∞}`.
pub const DEFAULT_CEILING: f64 = 1e6;

/// Relative threshold below which negative grid values count as round-off.
pub const POSITIVITY_EPS: f64 = 1e-10;

/// Largest `|η(0)|` accepted when reporting 𝓗_DW norms of `η = ω - eq`.
/// Truncation lets `ω(0)` wander slightly even under the `v(0) = 0` gauge;
/// the tilde coefficients ignore the mean, so the norm is unaffected.
pub const DIAG_VANISH_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    DeGregorio,
    Clm,
}

/// Time-stamped invariants and norms of one snapshot.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DiagnosticsRow {
    pub t: f64,
    pub mass: f64,
    pub l2: f64,
    pub sqrt_h1: Option<f64>,
    pub sqrt_h1_dot: Option<f64>,
    pub min_omega: f64,
    pub hdw_perturb: Option<f64>,
    pub x_seminorm: Option<f64>,
    pub tilde_y_norm: Option<f64>,
    pub eta0_even: Option<f64>,
}

/// Time integration settings for one trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Integrator {
    pub model: ModelKind,
    pub gauge: GaugeChoice,
    pub dealias: Dealias,
    pub ceiling: f64,
    pub truncation: Truncation,
}

impl Integrator {
    pub fn new(model: ModelKind, gauge: GaugeChoice) -> Self {
        Integrator {
            model,
            gauge,
            dealias: Dealias::ThreeHalves,
            ceiling: DEFAULT_CEILING,
            truncation: Truncation::Sharp,
        }
    }

    pub fn with_ceiling(mut self, ceiling: f64) -> Self {
        self.ceiling = ceiling;
        self
    }

    pub fn with_dealias(mut self, dealias: Dealias) -> Self {
        self.dealias = dealias;
        self
    }

    pub fn with_truncation(mut self, truncation: Truncation) -> Self {
        self.truncation = truncation;
        self
    }

    pub fn rhs(&self, omega: &SpectralField) -> SpectralField {
        match self.truncation {
            Truncation::Sharp => rhs_with(omega, self.model, self.gauge, self.dealias),
            Truncation::MomentPreserving => rhs_moment_preserving(omega, self.model, self.gauge),
        }
    }

    /// One classical RK4 step without any checks.
    pub fn step(&self, omega: &SpectralField, dt: f64) -> SpectralField {
        let k1 = self.rhs(omega);
        let k2 = self.rhs(&omega.add_scaled(0.5 * dt, &k1));
        let k3 = self.rhs(&omega.add_scaled(0.5 * dt, &k2));
        let k4 = self.rhs(&omega.add_scaled(dt, &k3));
        let mut out = omega.clone();
        let w = dt / 6.0;
        for (kk, c) in [(&k1, 1.0), (&k2, 2.0), (&k3, 2.0), (&k4, 1.0)] {
            out = out.add_scaled(w * c, kk);
        }
        out
    }

    /// Integrates to `t_final` with `round(t_final / dt)` steps, recording the
    /// state every `sample_every` steps (and always the first and last).
    pub fn integrate(
        &self,
        omega0: &SpectralField,
        t_final: f64,
        dt: f64,
        sample_every: usize,
    ) -> Result<Vec<(f64, SpectralField)>, DynamicsError> {
        let mut samples = Vec::new();
        self.integrate_with(omega0, t_final, dt, sample_every, |t, w| {
            samples.push((t, w.clone()))
        })
        .map_err(|e| match e {
            DynamicsError::BlowUp {
                kind,
                t,
                last_valid_t,
                last_state,
                ..
            } => DynamicsError::BlowUp {
                kind,
                t,
                last_valid_t,
                last_state,
                samples: std::mem::take(&mut samples),
            },
            other => other,
        })?;
        Ok(samples)
    }

    /// Streaming variant of [`Integrator::integrate`]: `observer` is called on
    /// every recorded snapshot instead of collecting them.
    pub fn integrate_with(
        &self,
        omega0: &SpectralField,
        t_final: f64,
        dt: f64,
        sample_every: usize,
        mut observer: impl FnMut(f64, &SpectralField),
    ) -> Result<SpectralField, DynamicsError> {
        if !(t_final > 0.0 && t_final.is_finite()) || !(dt > 0.0 && dt.is_finite()) {
            return Err(DynamicsError::InvalidTime(format!(
                "need T > 0 and dt > 0, got T = {t_final}, dt = {dt}"
            )));
        }
        let sample_every = sample_every.max(1);
        let steps = (t_final / dt).round().max(1.0) as usize;
        let m = product_grid_len(omega0.order());
        let mut omega = omega0.clone();
        let value0 = omega0.eval(0.0);
        let slope0 = derivative(omega0).eval(0.0);
        observer(0.0, &omega);
        for step in 1..=steps {
            let mut next = self.step(&omega, dt);
            if self.truncation == Truncation::MomentPreserving {
                pin_origin_values(&mut next, value0, slope0);
            }
            let t = step as f64 * dt;
            let kind = if !next.is_finite() {
                Some(BlowUpKind::NonFinite)
            } else if to_grid(&next, m)
                .map(|g| g.max_abs())
                .unwrap_or(f64::INFINITY)
                >= self.ceiling
            {
                Some(BlowUpKind::Ceiling)
            } else {
                None
            };
            if let Some(kind) = kind {
                return Err(DynamicsError::BlowUp {
                    kind,
                    t,
                    last_valid_t: t - dt,
                    last_state: Box::new(omega),
                    samples: Vec::new(),
                });
            }
            omega = next;
            if step % sample_every == 0 || step == steps {
                observer(t, &omega);
            }
        }
        Ok(omega)
    }
}

/// How the quadratic right-hand side is brought back to order `N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Truncation {
    /// Plain Fourier cut (with the chosen dealiasing). Conserves mass exactly.
    #[default]
    Sharp,
    /// Exact product followed by [`fold_moments`]. This is the Galerkin
    /// projection onto the 𝓗_DW tilde span: the flow keeps `ω(0)` and
    /// `∂_θω(0)` fixed, and its linearization at `-sin θ` is the
    /// energy-preserving Dirichlet truncation. Sharp truncation instead lets
    /// energy cascading to mode `N` leak out of the subspace, where the
    /// stagnation point at the origin amplifies it.
    MomentPreserving,
}

/// Removes round-off drift of `ω(0)` (through `cos θ`) and `∂_θω(0)`
/// (through the top sine mode).
fn pin_origin_values(omega: &mut SpectralField, value: f64, slope: f64) {
    let n = omega.order();
    if n == 0 {
        return;
    }
    omega.cos[0] -= omega.eval(0.0) - value;
    let slope_drift = derivative(omega).eval(0.0) - slope;
    omega.sin[n - 1] -= slope_drift / n as f64;
}

/// Right-hand side under [`Truncation::MomentPreserving`].
pub fn rhs_moment_preserving(
    omega: &SpectralField,
    model: ModelKind,
    gauge: GaugeChoice,
) -> SpectralField {
    let h = hilbert(omega);
    let full = match model {
        ModelKind::Clm => sum_of_products_exact(&[(omega, &h)]),
        ModelKind::DeGregorio => {
            let minus_u = velocity_from_vorticity(omega, gauge).scaled(-1.0);
            let dw = derivative(omega);
            sum_of_products_exact(&[(&minus_u, &dw), (omega, &h)])
        }
    };
    fold_moments(&full, omega.order())
}

/// `-u∂_θω + ωHω` (De Gregorio) or `ωHω` (CLM), dealiased.
pub fn rhs(omega: &SpectralField, model: ModelKind, gauge: GaugeChoice) -> SpectralField {
    rhs_with(omega, model, gauge, Dealias::ThreeHalves)
}

pub fn rhs_with(
    omega: &SpectralField,
    model: ModelKind,
    gauge: GaugeChoice,
    dealias: Dealias,
) -> SpectralField {
    let h = hilbert(omega);
    match model {
        ModelKind::Clm => sum_of_products(&[(omega, &h)], dealias),
        ModelKind::DeGregorio => {
            let minus_u = velocity_from_vorticity(omega, gauge).scaled(-1.0);
            let dw = derivative(omega);
            sum_of_products(&[(&minus_u, &dw), (omega, &h)], dealias)
        }
    }
}

/// One RK4 step; a non-finite result is reported as a blow-up at `dt`.
pub fn step_rk4(
    omega: &SpectralField,
    dt: f64,
    model: ModelKind,
    gauge: GaugeChoice,
) -> Result<SpectralField, DynamicsError> {
    if dt == 0.0 {
        return Ok(omega.clone());
    }
    let next = Integrator::new(model, gauge).step(omega, dt);
    if next.is_finite() {
        Ok(next)
    } else {
        Err(DynamicsError::BlowUp {
            kind: BlowUpKind::NonFinite,
            t: dt,
            last_valid_t: 0.0,
            last_state: Box::new(omega.clone()),
            samples: Vec::new(),
        })
    }
}

pub fn integrate(
    omega0: &SpectralField,
    t_final: f64,
    dt: f64,
    model: ModelKind,
    gauge: GaugeChoice,
    sample_every: usize,
) -> Result<Vec<(f64, SpectralField)>, DynamicsError> {
    Integrator::new(model, gauge).integrate(omega0, t_final, dt, sample_every)
}

/// Options for [`diagnostics_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsOptions {
    /// The square root is taken on a grid of about `grid_factor · N` points.
    pub grid_factor: usize,
}

impl Default for DiagnosticsOptions {
    fn default() -> Self {
        DiagnosticsOptions { grid_factor: 8 }
    }
}

/// `(‖√ω‖²_{L²}, ‖∂_θ√ω‖²_{L²})` when `ω` is nonnegative up to round-off.
pub fn sqrt_norms_sq(omega: &SpectralField, grid_factor: usize) -> Option<(f64, f64)> {
    let m = fft_friendly_len((grid_factor * omega.order()).max(64));
    let g = to_grid(omega, m).ok()?;
    let eps = POSITIVITY_EPS * g.max_abs();
    if g.min() < -eps {
        return None;
    }
    let s = g.map(|x| x.max(0.0).sqrt());
    let l2_sq = s.map(|x| x * x).integral();
    let sf = from_grid(&s, (m - 1) / 2).ok()?;
    Some((l2_sq, sf.h1_seminorm_sq()))
}

pub fn diagnostics(
    omega: &SpectralField,
    t: f64,
    equilibrium: Option<&SpectralField>,
) -> DiagnosticsRow {
    diagnostics_with(omega, t, equilibrium, DiagnosticsOptions::default())
}

pub fn diagnostics_with(
    omega: &SpectralField,
    t: f64,
    equilibrium: Option<&SpectralField>,
    opts: DiagnosticsOptions,
) -> DiagnosticsRow {
    let m = fft_friendly_len((opts.grid_factor * omega.order()).max(64));
    let min_omega = to_grid(omega, m).map(|g| g.min()).unwrap_or(f64::NAN);
    let mut row = DiagnosticsRow {
        t,
        mass: 2.0 * PI * omega.mean,
        l2: omega.l2_norm(),
        min_omega,
        ..Default::default()
    };
    if let Some((l2_sq, dot_sq)) = sqrt_norms_sq(omega, opts.grid_factor) {
        row.sqrt_h1 = Some((l2_sq + dot_sq).sqrt());
        row.sqrt_h1_dot = Some(dot_sq.sqrt());
    }
    if let Some(eq) = equilibrium {
        let eta = omega - eq;
        let tol = DIAG_VANISH_TOL * (1.0 + eq.max_abs_coeff());
        if eta.eval(0.0).abs() <= tol {
            let c = tilde_from_fourier_with(&eta, eta.order().max(1), VanishPolicy::ShiftMean)
                .expect("shift policy never rejects");
            row.hdw_perturb = Some(c.norm_sq().sqrt());
            row.tilde_y_norm = Some(c.tilde_y_norm_sq().sqrt());
            row.eta0_even = Some(c.even[0]);
        }
    }
    row
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::bump_field;
    use approx::assert_abs_diff_eq;

    fn ground(n: usize) -> SpectralField {
        SpectralField::sin_mode(1, -1.0, n)
    }

    #[test]
    fn equilibria_have_zero_rhs() {
        for gauge in [GaugeChoice::MeanZero, GaugeChoice::VanishAtZero] {
            let r = rhs(&ground(16), ModelKind::DeGregorio, gauge);
            assert!(r.max_abs_coeff() < 1e-14);
        }
        let r = rhs(
            &SpectralField::sin_mode(2, -1.0, 16),
            ModelKind::DeGregorio,
            GaugeChoice::MeanZero,
        );
        assert!(r.max_abs_coeff() < 1e-14);
    }

    #[test]
    fn clm_rhs_of_sine() {
        let r = rhs(
            &SpectralField::sin_mode(1, 1.0, 8),
            ModelKind::Clm,
            GaugeChoice::MeanZero,
        );
        assert!((&r - &SpectralField::sin_mode(2, -0.5, 8)).max_abs_coeff() < 1e-15);
    }

    #[test]
    fn equilibrium_step_and_zero_step() {
        let w = ground(16);
        let s = step_rk4(&w, 0.01, ModelKind::DeGregorio, GaugeChoice::MeanZero).unwrap();
        assert!((&s - &w).max_abs_coeff() < 1e-12);
        let w = bump_field(2.0, 16);
        let s = step_rk4(&w, 0.0, ModelKind::DeGregorio, GaugeChoice::MeanZero).unwrap();
        assert_eq!(s, w);
    }

    #[test]
    fn nan_input_is_reported() {
        let mut w = ground(8);
        w.cos[2] = f64::NAN;
        let e = step_rk4(&w, 0.01, ModelKind::Clm, GaugeChoice::MeanZero).unwrap_err();
        assert!(matches!(
            e,
            DynamicsError::BlowUp {
                kind: BlowUpKind::NonFinite,
                ..
            }
        ));
    }

    #[test]
    fn invalid_times_are_rejected() {
        let w = ground(8);
        assert!(matches!(
            integrate(&w, -1.0, 0.1, ModelKind::Clm, GaugeChoice::MeanZero, 1),
            Err(DynamicsError::InvalidTime(_))
        ));
        assert!(integrate(&w, 1.0, 0.0, ModelKind::Clm, GaugeChoice::MeanZero, 1).is_err());
    }

    #[test]
    fn diagnostics_examples() {
        let mut w = SpectralField::cos_mode(1, 1.0, 4);
        w.mean = 1.0;
        let row = diagnostics(&w, 0.0, None);
        assert_abs_diff_eq!(row.mass, 2.0 * PI, epsilon = 1e-14);
        assert!(row.sqrt_h1.is_some());
        assert!(row.hdw_perturb.is_none());

        let g = ground(8);
        let row = diagnostics(&g, 1.0, Some(&g));
        assert_eq!(row.hdw_perturb, Some(0.0));
        // sign-changing data: the square-root entries are absent
        assert!(row.sqrt_h1.is_none() && row.sqrt_h1_dot.is_none());
    }

    #[test]
    fn sqrt_norms_of_shifted_cosine() {
        // 1 + cos θ = 2cos²(θ/2): √ω = √2|cos(θ/2)|, ‖√ω‖² = 2π, ‖∂√ω‖² = π/2.
        let mut w = SpectralField::cos_mode(1, 1.0, 32);
        w.mean = 1.0;
        let (l2, dot) = sqrt_norms_sq(&w, 64).unwrap();
        assert_abs_diff_eq!(l2, 2.0 * PI, epsilon = 1e-12);
        // |cos(θ/2)| has a kink at θ = ±π, so spectral convergence is algebraic here
        assert_abs_diff_eq!(dot, 0.5 * PI, epsilon = 1e-3);
    }
}
