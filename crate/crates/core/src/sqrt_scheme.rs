//! Local solver for `f = √ω` under
//! `∂_t f = -u ∂_θ f + ½ f H(f²)`, `∂_θ u = H(f²)`.
//!
//! Each Picard stage freezes `u` and `r = ½ H(f²)` from the previous iterate
//! and solves the linear advection-reaction problem semi-Lagrangian style:
//! RK2 backtracking of characteristics, trigonometric interpolation at the
//! feet and a trapezoidal integrating factor.

use crate::error::SchemeError;
use crate::spectral::{
    from_grid, grid_node, hilbert, multiply_with, product_grid_len, to_grid,
    velocity_from_vorticity, Dealias, GaugeChoice, GridField, SpectralField,
};

/// Iterates whose Cauchy difference falls below this fraction of `‖f_in‖`
/// are at round-off level and are not used to judge contraction.
pub const CONTRACTION_FLOOR: f64 = 1e-9;

/// Largest accepted Cauchy ratio between consecutive Picard iterates.
pub const CONTRACTION_RATIO: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct PicardOptions {
    pub t_final: f64,
    pub dt: f64,
    pub gauge: GaugeChoice,
    pub max_iters: usize,
    /// Stop once `sup_t ‖f_{n+1} - f_n‖ ≤ tol · ‖f_in‖`.
    pub tol: f64,
    pub dealias: Dealias,
}

impl PicardOptions {
    pub fn new(t_final: f64, dt: f64) -> Self {
        PicardOptions {
            t_final,
            dt,
            gauge: GaugeChoice::MeanZero,
            max_iters: 60,
            tol: 1e-11,
            dealias: Dealias::ThreeHalves,
        }
    }
}

/// One Picard iterate on a time window.
#[derive(Debug, Clone, PartialEq)]
pub struct PicardState {
    pub iterate_index: usize,
    /// `f_n` at every step of the window.
    pub f_n: Vec<SpectralField>,
    /// Velocity induced by `f_n²` at every step.
    pub u_n: Vec<SpectralField>,
    /// `sup_t ‖f_n - f_{n-1}‖_{L²}`; infinite for the starting guess.
    pub cauchy_l2: f64,
}

/// Iteration history of one accepted window.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowLog {
    pub t_start: f64,
    pub t_end: f64,
    pub cauchy: Vec<f64>,
    /// Windows rejected before this one was accepted.
    pub halvings: usize,
}

impl WindowLog {
    /// Largest ratio of consecutive Cauchy differences above the floor.
    pub fn max_ratio(&self, floor: f64) -> f64 {
        self.cauchy
            .windows(2)
            .filter(|w| w[0] > floor)
            .map(|w| w[1] / w[0])
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PicardOutcome {
    pub trajectory: Vec<(f64, SpectralField)>,
    pub windows: Vec<WindowLog>,
    /// Absolute floor below which Cauchy ratios were ignored.
    pub floor: f64,
}

impl PicardOutcome {
    pub fn max_contraction_ratio(&self) -> f64 {
        self.windows
            .iter()
            .map(|w| w.max_ratio(self.floor))
            .fold(0.0, f64::max)
    }

    pub fn final_state(&self) -> &SpectralField {
        &self.trajectory.last().expect("trajectory is never empty").1
    }
}

/// Relative drifts of the two conserved norms of `f`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConservationReport {
    pub l2_drift: f64,
    pub h1_drift: f64,
    /// Drift of `‖∂_θ f‖_{L²}` alone.
    pub dtheta_drift: f64,
}

fn grid_len(n: usize, dealias: Dealias) -> usize {
    match dealias {
        Dealias::ThreeHalves => product_grid_len(n),
        Dealias::Off => 2 * n + 1,
    }
}

/// Evaluates two fields of equal order at the same point.
fn eval_pair(a: &SpectralField, b: &SpectralField, theta: f64) -> (f64, f64) {
    let (s1, c1) = theta.sin_cos();
    let (mut c, mut s) = (1.0, 0.0);
    let (mut va, mut vb) = (a.mean, b.mean);
    for k in 0..a.cos.len() {
        let nc = c * c1 - s * s1;
        s = s * c1 + c * s1;
        c = nc;
        va += a.cos[k] * c + a.sin[k] * s;
        vb += b.cos[k] * c + b.sin[k] * s;
    }
    (va, vb)
}

/// Solves `∂_t f + u ∂_θ f = r f` from `f0`, with `u` and `r` given at every
/// step `t_m = m·dt`. Returns `f` at the same times, projected to the order
/// of `f0` after each step.
pub fn advect_react_solve(
    f0: &SpectralField,
    u: &[SpectralField],
    r: &[SpectralField],
    dt: f64,
    dealias: Dealias,
) -> Result<Vec<SpectralField>, SchemeError> {
    if u.len() != r.len() || u.is_empty() {
        return Err(SchemeError::InvalidParameter(format!(
            "u and r must share a nonempty time grid, got {} and {}",
            u.len(),
            r.len()
        )));
    }
    if !(dt > 0.0) {
        return Err(SchemeError::InvalidParameter(format!(
            "dt must be positive, got {dt}"
        )));
    }
    let n = f0.order();
    let m = grid_len(n, dealias);
    let spacing = std::f64::consts::TAU / m as f64;
    let nodes: Vec<f64> = (0..m).map(|j| grid_node(j, m)).collect();
    let mut out = Vec::with_capacity(u.len());
    out.push(f0.clone());
    let mut values = vec![0.0; m];
    for step in 0..u.len() - 1 {
        let (u0, u1) = (u[step].resized(n), u[step + 1].resized(n));
        let r0 = r[step].resized(n);
        let u_half = u0.add_scaled(1.0, &u1).scaled(0.5);
        let u_half_grid = to_grid(&u_half, m).expect("grid resolves order");
        let r1_grid = to_grid(&r[step + 1].resized(n), m).expect("grid resolves order");
        let f_prev = &out[step];
        for j in 0..m {
            let x = nodes[j];
            let mid = x - 0.5 * dt * u_half_grid.samples[j];
            let displacement = dt * u_half.eval(mid);
            if displacement.abs() > spacing {
                return Err(SchemeError::CharacteristicTooLong { displacement });
            }
            let foot = x - displacement;
            let (f_foot, r_foot) = eval_pair(f_prev, &r0, foot);
            values[j] = f_foot * (0.5 * dt * (r_foot + r1_grid.samples[j])).exp();
        }
        let next = from_grid(
            &GridField {
                samples: values.clone(),
            },
            n,
        )
        .expect("grid resolves order");
        out.push(next);
    }
    Ok(out)
}

/// Velocity and reaction rate induced by `f` under the gauge.
pub fn coefficients_from(
    f: &SpectralField,
    gauge: GaugeChoice,
    dealias: Dealias,
) -> (SpectralField, SpectralField) {
    let omega = omega_from(f, dealias);
    let u = velocity_from_vorticity(&omega, gauge);
    let r = hilbert(&omega).scaled(0.5);
    (u, r)
}

/// `ω = f²` truncated to the order of `f`.
pub fn omega_from(f: &SpectralField, dealias: Dealias) -> SpectralField {
    multiply_with(f, f, dealias)
}

fn sup_l2_distance(a: &[SpectralField], b: &[SpectralField]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).l2_norm())
        .fold(0.0, f64::max)
}

enum WindowResult {
    Accepted(Vec<SpectralField>, Vec<f64>),
    Rejected,
}

fn picard_window(
    f_start: &SpectralField,
    steps: usize,
    opts: &PicardOptions,
    scale: f64,
) -> Result<WindowResult, SchemeError> {
    let floor = CONTRACTION_FLOOR * scale;
    let mut state = PicardState {
        iterate_index: 0,
        f_n: vec![f_start.clone(); steps + 1],
        u_n: Vec::new(),
        cauchy_l2: f64::INFINITY,
    };
    let mut cauchy = Vec::new();
    for _ in 0..opts.max_iters {
        let (u, r): (Vec<_>, Vec<_>) = state
            .f_n
            .iter()
            .map(|f| coefficients_from(f, opts.gauge, opts.dealias))
            .unzip();
        let next = match advect_react_solve(f_start, &u, &r, opts.dt, opts.dealias) {
            Ok(next) => next,
            // a diverging iterate can induce runaway velocities
            Err(SchemeError::CharacteristicTooLong { .. }) if state.iterate_index > 0 => {
                return Ok(WindowResult::Rejected)
            }
            Err(e) => return Err(e),
        };
        let diff = sup_l2_distance(&next, &state.f_n);
        if !diff.is_finite() {
            return Ok(WindowResult::Rejected);
        }
        if state.cauchy_l2.is_finite()
            && state.cauchy_l2 > floor
            && diff > CONTRACTION_RATIO * state.cauchy_l2
        {
            return Ok(WindowResult::Rejected);
        }
        cauchy.push(diff);
        state = PicardState {
            iterate_index: state.iterate_index + 1,
            f_n: next,
            u_n: u,
            cauchy_l2: diff,
        };
        if diff <= opts.tol * scale {
            return Ok(WindowResult::Accepted(state.f_n, cauchy));
        }
    }
    Err(SchemeError::NotConverged {
        tol: opts.tol,
        max_iters: opts.max_iters,
    })
}

/// Picard iteration for `f` on `[0, T]`. The whole interval is tried first;
/// when an iterate fails to contract the window is halved and the solver
/// marches window by window.
pub fn picard_solve(
    f_in: &SpectralField,
    opts: &PicardOptions,
) -> Result<PicardOutcome, SchemeError> {
    if !(opts.t_final > 0.0 && opts.dt > 0.0) {
        return Err(SchemeError::InvalidParameter(format!(
            "need T > 0 and dt > 0, got T = {}, dt = {}",
            opts.t_final, opts.dt
        )));
    }
    let total_steps = (opts.t_final / opts.dt).round().max(1.0) as usize;
    let scale = f_in.l2_norm();
    let mut trajectory = vec![(0.0, f_in.clone())];
    let mut windows = Vec::new();
    if scale == 0.0 {
        for step in 1..=total_steps {
            trajectory.push((step as f64 * opts.dt, f_in.clone()));
        }
        windows.push(WindowLog {
            t_start: 0.0,
            t_end: total_steps as f64 * opts.dt,
            cauchy: vec![0.0],
            halvings: 0,
        });
        return Ok(PicardOutcome {
            trajectory,
            windows,
            floor: 0.0,
        });
    }
    let mut window_steps = total_steps;
    let mut done = 0;
    while done < total_steps {
        let steps = window_steps.min(total_steps - done);
        let start = trajectory.last().expect("nonempty").1.clone();
        let mut halvings = 0;
        let mut steps_try = steps;
        let (fs, cauchy) = loop {
            match picard_window(&start, steps_try, opts, scale)? {
                WindowResult::Accepted(fs, c) => break (fs, c),
                WindowResult::Rejected if steps_try > 1 => {
                    steps_try /= 2;
                    halvings += 1;
                }
                WindowResult::Rejected => {
                    return Err(SchemeError::NonContraction { window: opts.dt });
                }
            }
        };
        window_steps = steps_try;
        for (i, f) in fs.into_iter().enumerate().skip(1) {
            trajectory.push(((done + i) as f64 * opts.dt, f));
        }
        windows.push(WindowLog {
            t_start: done as f64 * opts.dt,
            t_end: (done + steps_try) as f64 * opts.dt,
            cauchy,
            halvings,
        });
        done += steps_try;
    }
    Ok(PicardOutcome {
        trajectory,
        windows,
        floor: CONTRACTION_FLOOR * scale,
    })
}

/// Relative drifts of `‖f‖_{L²}`, `‖f‖_{H¹}` and `‖∂_θ f‖_{L²}`.
pub fn conservation_check(trajectory: &[(f64, SpectralField)]) -> ConservationReport {
    let norms = |f: &SpectralField| {
        let l2 = f.l2_norm_sq();
        let d = f.h1_seminorm_sq();
        (l2.sqrt(), (l2 + d).sqrt(), d.sqrt())
    };
    let Some((_, first)) = trajectory.first() else {
        return ConservationReport {
            l2_drift: 0.0,
            h1_drift: 0.0,
            dtheta_drift: 0.0,
        };
    };
    let (a0, b0, c0) = norms(first);
    let rel = |x: f64, x0: f64| {
        if x0 > 0.0 {
            (x - x0).abs() / x0
        } else {
            x.abs()
        }
    };
    let mut report = ConservationReport {
        l2_drift: 0.0,
        h1_drift: 0.0,
        dtheta_drift: 0.0,
    };
    for (_, f) in trajectory {
        let (a, b, c) = norms(f);
        report.l2_drift = report.l2_drift.max(rel(a, a0));
        report.h1_drift = report.h1_drift.max(rel(b, b0));
        report.dtheta_drift = report.dtheta_drift.max(rel(c, c0));
    }
    report
}

/// Smallest grid value of `f` over a trajectory.
pub fn trajectory_min(trajectory: &[(f64, SpectralField)], m: usize) -> f64 {
    trajectory
        .iter()
        .map(|(_, f)| {
            to_grid(f, m.max(2 * f.order() + 1))
                .expect("grid resolves order")
                .min()
        })
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{Integrator, ModelKind};
    use crate::profiles::{bump_field, sqrt_bump_field};
    use approx::assert_abs_diff_eq;

    fn sample() -> SpectralField {
        let mut f = SpectralField::cos_mode(1, 0.7, 8);
        f.mean = 1.5;
        f.sin[2] = -0.3;
        f.cos[4] = 0.1;
        f
    }

    fn max_coeff_diff(a: &SpectralField, b: &SpectralField) -> f64 {
        (a - b).max_abs_coeff()
    }

    #[test]
    fn no_flow_no_reaction_is_identity() {
        let f = sample();
        let z = vec![SpectralField::zeros(8); 11];
        let out = advect_react_solve(&f, &z, &z, 0.01, Dealias::ThreeHalves).unwrap();
        assert_eq!(out.len(), 11);
        assert!(max_coeff_diff(out.last().unwrap(), &f) < 1e-14);
    }

    #[test]
    fn constant_flow_rotates() {
        let f = sample();
        let c = 0.8;
        let u = vec![SpectralField::constant(c, 8); 101];
        let r = vec![SpectralField::zeros(8); 101];
        let out = advect_react_solve(&f, &u, &r, 0.005, Dealias::ThreeHalves).unwrap();
        let t = 0.5;
        let g = out.last().unwrap();
        for i in 0..13 {
            let th = -3.0 + 0.5 * i as f64;
            assert_abs_diff_eq!(g.eval(th), f.eval(th - c * t), epsilon = 1e-12);
        }
    }

    #[test]
    fn unit_reaction_grows_exponentially() {
        let f = sample();
        let u = vec![SpectralField::zeros(8); 51];
        let r = vec![SpectralField::constant(1.0, 8); 51];
        let out = advect_react_solve(&f, &u, &r, 0.02, Dealias::ThreeHalves).unwrap();
        assert!(max_coeff_diff(out.last().unwrap(), &f.scaled(1.0f64.exp())) < 1e-13);
    }

    #[test]
    fn mismatched_inputs_are_rejected() {
        let f = sample();
        let z = vec![SpectralField::zeros(8); 3];
        assert!(advect_react_solve(&f, &z, &z[..2], 0.1, Dealias::ThreeHalves).is_err());
        assert!(advect_react_solve(&f, &z, &z, 0.0, Dealias::ThreeHalves).is_err());
        let fast = vec![SpectralField::constant(100.0, 8); 3];
        assert!(matches!(
            advect_react_solve(&f, &fast, &z, 0.1, Dealias::ThreeHalves),
            Err(SchemeError::CharacteristicTooLong { .. })
        ));
    }

    #[test]
    fn zero_data_stays_zero() {
        let out = picard_solve(&SpectralField::zeros(16), &PicardOptions::new(0.1, 0.01)).unwrap();
        assert_eq!(out.trajectory.len(), 11);
        assert!(out.trajectory.iter().all(|(_, f)| f.max_abs_coeff() == 0.0));
        let rep = conservation_check(&out.trajectory);
        assert_eq!(rep.l2_drift, 0.0);
        assert_eq!(rep.h1_drift, 0.0);
    }

    #[test]
    fn picard_contracts_and_matches_direct_solver() {
        let n = 64;
        let f_in = sqrt_bump_field(2.0, n);
        let opts = PicardOptions::new(0.1, 1e-3);
        let out = picard_solve(&f_in, &opts).unwrap();
        assert!(out.max_contraction_ratio() <= 0.5);
        let direct = Integrator::new(ModelKind::DeGregorio, GaugeChoice::MeanZero)
            .integrate(&bump_field(2.0, n), 0.1, 1e-3, 100)
            .unwrap();
        let omega = omega_from(out.final_state(), Dealias::ThreeHalves);
        let err = (&omega - &direct.last().unwrap().1).l2_norm();
        assert!(err < 1e-5, "{err}");
        let rep = conservation_check(&out.trajectory);
        assert!(rep.l2_drift < 1e-5 && rep.h1_drift < 1e-5, "{rep:?}");
    }

    #[test]
    fn both_gauges_agree_on_f_up_to_translation_free_quantities() {
        let n = 32;
        let f_in = sqrt_bump_field(2.0, n);
        let mut opts = PicardOptions::new(0.05, 1e-3);
        let a = picard_solve(&f_in, &opts).unwrap();
        opts.gauge = GaugeChoice::VanishAtZero;
        let b = picard_solve(&f_in, &opts).unwrap();
        let (fa, fb) = (a.final_state(), b.final_state());
        assert_abs_diff_eq!(fa.l2_norm(), fb.l2_norm(), epsilon = 1e-8);
        assert_abs_diff_eq!(fa.h1_seminorm_sq(), fb.h1_seminorm_sq(), epsilon = 1e-6);
    }
}
