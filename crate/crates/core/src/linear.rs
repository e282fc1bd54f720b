//! Linearized De Gregorio operators at the ground state `-sin θ` and the
//! first excited state `-sin 2θ`, in Fourier and tilde bases.
//!
//! Coefficient vectors are indexed by mode number, `c[k]` for `k = 0..=K`.
//! Entry 0 is only live for the tilde even basis, where it holds `η̃_0^(e)`.
//! Rows are stored in evolution form: `∂_t c_j = sub_j c_{j-s} + diag_j c_j
//! + sup_j c_{j+s}` with stride `s` (1 at the ground state, 2 at the excited
//! state). Couplings past mode `K` are dropped.

use ndarray::Array2;
use num_rational::Ratio;

use crate::dynamics::rhs;
use crate::error::LinearError;
use crate::spectral::{GaugeChoice, SpectralField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BasisTag {
    /// `sin kθ`.
    FourierOdd,
    /// `cos kθ - 1` at the ground state, `cos kθ` at the excited state.
    FourierEven,
    TildeOdd,
    TildeEven,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EquilibriumTag {
    /// `-sin θ`, gauge `v(0) = 0`.
    GroundState,
    /// `-sin 2θ`, gauge `∫v = 0`.
    Excited2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parity {
    Odd,
    Even,
}

/// Banded operator with optional dense corrections.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalOperator {
    pub basis: BasisTag,
    pub equilibrium: EquilibriumTag,
    pub stride: usize,
    pub sub: Vec<f64>,
    pub diag: Vec<f64>,
    pub sup: Vec<f64>,
    /// `∂_t c_0 = Σ_k zero_mode_row[k] c_k`.
    pub zero_mode_row: Option<Vec<f64>>,
    /// Dense rows added on top of the band: `(row, coefficients by column)`.
    pub extra_rows: Vec<(usize, Vec<f64>)>,
}

/// Ground-state Fourier coefficient `A_k` (mode `k → k+1`).
pub fn ground_a(k: usize) -> f64 {
    let k = k as f64;
    -0.5 * (k - 1.0) * (1.0 - 1.0 / k)
}

/// Ground-state Fourier coefficient `B_k` (mode `k → k-1`).
pub fn ground_b(k: usize) -> f64 {
    let k = k as f64;
    0.5 * (k + 1.0) * (1.0 - 1.0 / k)
}

/// `d_k = (k-1)²(k+1) / (2k²)`.
pub fn ground_d(k: usize) -> f64 {
    let k = k as f64;
    (k - 1.0).powi(2) * (k + 1.0) / (2.0 * k * k)
}

/// Excited-state coefficient `A_k` (mode `k → k+2`).
pub fn excited_a(k: usize) -> f64 {
    let k = k as f64;
    -(k - 2.0).powi(2) / (4.0 * k)
}

/// Excited-state coefficient `B_k` (mode `k → k-2`).
pub fn excited_b(k: usize) -> f64 {
    let k = k as f64;
    (k + 2.0) * (k - 2.0) / (4.0 * k)
}

/// Feed of `ẽ_k^(e)` into `ẽ_0^(e)`: `(k² - k - 1) / (k²(k+1)²)`.
pub fn zero_mode_coupling(k: usize) -> f64 {
    let k = k as f64;
    (k * k - k - 1.0) / (k * k * (k + 1.0) * (k + 1.0))
}

/// `d_k` in exact arithmetic.
pub fn ground_d_exact(k: i128) -> Ratio<i128> {
    Ratio::new((k - 1) * (k - 1) * (k + 1), 2 * k * k)
}

/// `min_{1 ≤ k ≤ k_max} (d_{k+1} - d_k)` and the first `k` attaining it.
pub fn min_gap_exact(k_max: i128) -> (Ratio<i128>, i128) {
    let mut best = (ground_d_exact(2) - ground_d_exact(1), 1);
    let mut prev = ground_d_exact(2);
    for k in 2..=k_max {
        let next = ground_d_exact(k + 1);
        let gap = next - prev;
        if gap < best.0 {
            best = (gap, k);
        }
        prev = next;
    }
    best
}

impl TridiagonalOperator {
    fn empty(basis: BasisTag, equilibrium: EquilibriumTag, k: usize, stride: usize) -> Self {
        TridiagonalOperator {
            basis,
            equilibrium,
            stride,
            sub: vec![0.0; k + 1],
            diag: vec![0.0; k + 1],
            sup: vec![0.0; k + 1],
            zero_mode_row: None,
            extra_rows: Vec::new(),
        }
    }

    /// Truncation `K`.
    pub fn order(&self) -> usize {
        self.diag.len() - 1
    }

    /// `L c` for a coefficient vector of length `K + 1`.
    pub fn apply(&self, c: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; c.len()];
        self.apply_into(c, &mut out);
        out
    }

    pub fn apply_into(&self, c: &[f64], out: &mut [f64]) {
        let k = self.order();
        let s = self.stride;
        debug_assert_eq!(c.len(), k + 1);
        out[0] = 0.0;
        for j in 1..=k {
            let mut v = self.diag[j] * c[j];
            if j > s {
                v += self.sub[j] * c[j - s];
            }
            if j + s <= k {
                v += self.sup[j] * c[j + s];
            }
            out[j] = v;
        }
        for (row, coeffs) in &self.extra_rows {
            out[*row] += coeffs.iter().zip(c).map(|(a, b)| a * b).sum::<f64>();
        }
        if let Some(z) = &self.zero_mode_row {
            out[0] = z.iter().zip(c).map(|(a, b)| a * b).sum();
        }
    }

    /// Matrix element `∂(∂_t c_row) / ∂c_col`, modes `0..=K`.
    pub fn entry(&self, row: usize, col: usize) -> f64 {
        let mut e = vec![0.0; self.order() + 1];
        e[col] = 1.0;
        self.apply(&e)[row]
    }

    /// Dense `K × K` matrix over modes `1..=K` (mode 0 excluded).
    pub fn to_dense(&self) -> Array2<f64> {
        let k = self.order();
        let mut m = Array2::zeros((k, k));
        let mut e = vec![0.0; k + 1];
        for col in 1..=k {
            e[col] = 1.0;
            let out = self.apply(&e);
            for row in 1..=k {
                m[[row - 1, col - 1]] = out[row];
            }
            e[col] = 0.0;
        }
        m
    }
}

fn require(cond: bool, msg: impl Into<String>) -> Result<(), LinearError> {
    if cond {
        Ok(())
    } else {
        Err(LinearError::InvalidParameter(msg.into()))
    }
}

/// Ground state in the Fourier basis (`sin kθ`, or `cos kθ - 1` for even data).
pub fn build_ground_fourier(k: usize, parity: Parity) -> Result<TridiagonalOperator, LinearError> {
    require(k >= 4, format!("K must be at least 4, got {k}"))?;
    let basis = match parity {
        Parity::Odd => BasisTag::FourierOdd,
        Parity::Even => BasisTag::FourierEven,
    };
    let mut op = TridiagonalOperator::empty(basis, EquilibriumTag::GroundState, k, 1);
    for j in 1..=k {
        op.sub[j] = if j >= 2 { ground_a(j - 1) } else { 0.0 };
        op.sup[j] = ground_b(j + 1);
    }
    if parity == Parity::Even {
        let mut row = vec![0.0; k + 1];
        for (col, r) in row.iter_mut().enumerate().skip(2) {
            *r = -(1.0 - 1.0 / col as f64);
        }
        op.extra_rows.push((1, row));
    }
    Ok(op)
}

/// Ground state in the tilde basis; the even case carries the `ẽ_0^(e)` feed.
pub fn build_ground_tilde(k: usize, parity: Parity) -> Result<TridiagonalOperator, LinearError> {
    require(k >= 2, format!("K must be at least 2, got {k}"))?;
    let basis = match parity {
        Parity::Odd => BasisTag::TildeOdd,
        Parity::Even => BasisTag::TildeEven,
    };
    let mut op = TridiagonalOperator::empty(basis, EquilibriumTag::GroundState, k, 1);
    for j in 1..=k {
        op.sub[j] = -ground_d(j);
        op.diag[j] = -(ground_d(j + 1) - ground_d(j));
        op.sup[j] = ground_d(j + 1);
    }
    if parity == Parity::Even {
        let mut row = vec![0.0; k + 1];
        for (col, r) in row.iter_mut().enumerate().skip(1) {
            *r = zero_mode_coupling(col);
        }
        op.zero_mode_row = Some(row);
    }
    Ok(op)
}

/// Excited state `-sin 2θ` in the Fourier basis (`sin kθ` or `cos kθ`).
pub fn build_excited(k: usize, parity: Parity) -> Result<TridiagonalOperator, LinearError> {
    require(k >= 5, format!("K must be at least 5, got {k}"))?;
    let basis = match parity {
        Parity::Odd => BasisTag::FourierOdd,
        Parity::Even => BasisTag::FourierEven,
    };
    let mut op = TridiagonalOperator::empty(basis, EquilibriumTag::Excited2, k, 2);
    for j in 1..=k {
        op.sub[j] = if j >= 3 { excited_a(j - 2) } else { 0.0 };
        op.sup[j] = excited_b(j + 2);
    }
    // mode 1 folds back onto itself through e_{-1} = ∓e_1
    op.diag[1] = match parity {
        Parity::Odd => -excited_b(1),
        Parity::Even => excited_b(1),
    };
    Ok(op)
}

/// Weights of the X inner product at `-sin 2θ`, indexed by mode.
#[derive(Debug, Clone, PartialEq)]
pub struct XWeights {
    pub g_odd: Vec<f64>,
    pub g_even: Vec<f64>,
}

impl XWeights {
    pub fn order(&self) -> usize {
        self.g_even.len() - 1
    }

    /// `Σ_k g_k c_k²` for the chosen parity.
    pub fn seminorm_sq(&self, parity: Parity, c: &[f64]) -> f64 {
        let g = match parity {
            Parity::Odd => &self.g_odd,
            Parity::Even => &self.g_even,
        };
        g.iter().zip(c).skip(1).map(|(w, x)| w * x * x).sum()
    }

    /// Least-squares slope of `log g_k` against `log k` over the live modes
    /// in `[k_min, k_max]`.
    pub fn loglog_slope(&self, parity: Parity, k_min: usize, k_max: usize) -> f64 {
        let g = match parity {
            Parity::Odd => &self.g_odd,
            Parity::Even => &self.g_even,
        };
        let pts: Vec<(f64, f64)> = (k_min..=k_max.min(g.len() - 1))
            .filter(|&k| g[k] > 0.0)
            .map(|k| ((k as f64).ln(), g[k].ln()))
            .collect();
        least_squares_slope(&pts)
    }
}

/// `g_{k+2} = -g_k B_{k+2} / A_k` from `start` upward.
fn fill_chain(g: &mut [f64], start: usize) {
    let k_max = g.len() - 1;
    let mut k = start;
    while k + 2 <= k_max {
        g[k + 2] = -g[k] * excited_b(k + 2) / excited_a(k);
        k += 2;
    }
}

/// Even weights `g^(e)` (`g_1 = g_4 = 1`, `g_2 = 0`) and the odd-data weights
/// of the even-index subfamily (`g_{2k-1} = 0`, `g_2 = 0`, `g_4 = 1`).
pub fn excited_weights(k: usize) -> Result<XWeights, LinearError> {
    require(k >= 6, format!("K must be at least 6, got {k}"))?;
    let mut g_even = vec![0.0; k + 1];
    g_even[1] = 1.0;
    g_even[4] = 1.0;
    fill_chain(&mut g_even, 1);
    fill_chain(&mut g_even, 4);
    let mut g_odd = vec![0.0; k + 1];
    g_odd[4] = 1.0;
    fill_chain(&mut g_odd, 4);
    Ok(XWeights { g_odd, g_even })
}

/// Weights conserved by the excited-state flow on odd data supported on
/// even modes. `A_2 = 0` decouples mode 2, so the chain starts at `g_4 = 1`.
pub fn conserved_seminorm_evenmodes(k: usize) -> Result<XWeights, LinearError> {
    require(
        k >= 4 && k % 2 == 0,
        format!("K must be even and at least 4, got {k}"),
    )?;
    let mut g_odd = vec![0.0; k + 1];
    g_odd[4] = 1.0;
    fill_chain(&mut g_odd, 4);
    Ok(XWeights {
        g_odd,
        g_even: vec![0.0; k + 1],
    })
}

/// Classical RK4 for `y' = f(y)`, recording every `sample_every` steps.
pub fn rk4_evolve(
    f: impl Fn(&[f64], &mut [f64]),
    y0: &[f64],
    t_final: f64,
    dt: f64,
    sample_every: usize,
    mut observer: impl FnMut(f64, &[f64]),
) -> Result<Vec<f64>, LinearError> {
    if !(t_final > 0.0 && dt > 0.0) {
        return Err(LinearError::InvalidParameter(format!(
            "need T > 0 and dt > 0, got T = {t_final}, dt = {dt}"
        )));
    }
    let sample_every = sample_every.max(1);
    let steps = (t_final / dt).round().max(1.0) as usize;
    let n = y0.len();
    let mut y = y0.to_vec();
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut tmp = vec![0.0; n];
    observer(0.0, &y);
    for step in 1..=steps {
        f(&y, &mut k1);
        for i in 0..n {
            tmp[i] = y[i] + 0.5 * dt * k1[i];
        }
        f(&tmp, &mut k2);
        for i in 0..n {
            tmp[i] = y[i] + 0.5 * dt * k2[i];
        }
        f(&tmp, &mut k3);
        for i in 0..n {
            tmp[i] = y[i] + dt * k3[i];
        }
        f(&tmp, &mut k4);
        for i in 0..n {
            y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        let t = step as f64 * dt;
        if y.iter().any(|x| !x.is_finite()) {
            return Err(LinearError::NonFinite { t });
        }
        if step % sample_every == 0 || step == steps {
            observer(t, &y);
        }
    }
    Ok(y)
}

/// Truncated linear evolution `∂_t c = L c` by RK4.
pub fn evolve_linear(
    op: &TridiagonalOperator,
    c0: &[f64],
    t_final: f64,
    dt: f64,
    sample_every: usize,
) -> Result<Vec<(f64, Vec<f64>)>, LinearError> {
    if c0.len() != op.order() + 1 {
        return Err(LinearError::InvalidParameter(format!(
            "coefficient vector has length {}, operator expects {}",
            c0.len(),
            op.order() + 1
        )));
    }
    let mut out = Vec::new();
    rk4_evolve(
        |y, dy| op.apply_into(y, dy),
        c0,
        t_final,
        dt,
        sample_every,
        |t, y| out.push((t, y.to_vec())),
    )?;
    Ok(out)
}

fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Fitted exponential decay rate `β` of `norm ≈ C e^{-βt}`.
pub fn decay_fit(series: &[(f64, f64)]) -> Result<f64, LinearError> {
    if let Some(&(t, _)) = series.iter().find(|(_, v)| !(*v > 0.0)) {
        return Err(LinearError::NonPositiveNorm { t });
    }
    if series.len() < 2 {
        return Err(LinearError::InvalidParameter(
            "need at least two samples".into(),
        ));
    }
    let pts: Vec<(f64, f64)> = series.iter().map(|&(t, v)| (t, v.ln())).collect();
    Ok(-least_squares_slope(&pts))
}

/// Linear fit `y ≈ c₀ + c₁t`; returns `(c₀, c₁, R²)`.
pub fn linear_fit(series: &[(f64, f64)]) -> (f64, f64, f64) {
    let slope = least_squares_slope(series);
    let n = series.len() as f64;
    let mx = series.iter().map(|p| p.0).sum::<f64>() / n;
    let my = series.iter().map(|p| p.1).sum::<f64>() / n;
    let intercept = my - slope * mx;
    let ss_tot: f64 = series.iter().map(|(_, y)| (y - my).powi(2)).sum();
    let ss_res: f64 = series
        .iter()
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r2 = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else {
        1.0
    };
    (intercept, slope, r2)
}

/// Fourier directions probed by [`oracle_linearize`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FourierDirections {
    /// `sin kθ`, read back from sine coefficients.
    Sine,
    /// `cos kθ`, read back from cosine coefficients.
    Cosine,
    /// `cos kθ - 1`, read back from cosine coefficients.
    CosineMinusOne,
}

/// Dense `K × K` Jacobian of the De Gregorio right-hand side at
/// `equilibrium` along Fourier directions, by central differences.
pub fn oracle_linearize(
    equilibrium: &SpectralField,
    directions: FourierDirections,
    k: usize,
    fd_step: f64,
    gauge: GaugeChoice,
) -> Result<Array2<f64>, LinearError> {
    require(
        (1e-7..=1e-3).contains(&fd_step),
        format!("fd_step must lie in [1e-7, 1e-3], got {fd_step}"),
    )?;
    let n = equilibrium.order().max(k + 3);
    let eq = equilibrium.resized(n);
    let mut m = Array2::zeros((k, k));
    for col in 1..=k {
        let dir = match directions {
            FourierDirections::Sine => SpectralField::sin_mode(col, 1.0, n),
            FourierDirections::Cosine => SpectralField::cos_mode(col, 1.0, n),
            FourierDirections::CosineMinusOne => {
                let mut d = SpectralField::cos_mode(col, 1.0, n);
                d.mean = -1.0;
                d
            }
        };
        let plus = rhs(
            &eq.add_scaled(fd_step, &dir),
            crate::ModelKind::DeGregorio,
            gauge,
        );
        let minus = rhs(
            &eq.add_scaled(-fd_step, &dir),
            crate::ModelKind::DeGregorio,
            gauge,
        );
        let diff = (&plus - &minus).scaled(0.5 / fd_step);
        for row in 1..=k {
            m[[row - 1, col - 1]] = match directions {
                FourierDirections::Sine => diff.b(row),
                _ => diff.a(row),
            };
        }
    }
    Ok(m)
}

/// `⟨Lv, v⟩ / ⟨v, v⟩` in the unweighted Euclidean product over modes `1..=K`.
pub fn rayleigh_quotient(op: &TridiagonalOperator, v: &[f64]) -> f64 {
    let lv = op.apply(v);
    let num: f64 = lv.iter().zip(v).skip(1).map(|(a, b)| a * b).sum();
    let den: f64 = v.iter().skip(1).map(|x| x * x).sum();
    num / den
}

/// Unit vectors with positive and negative Rayleigh quotient, searched among
/// basis vectors and normalized pairs `(e_j ± e_{j+s})/√2`.
pub fn sign_witnesses(op: &TridiagonalOperator) -> Option<((Vec<f64>, f64), (Vec<f64>, f64))> {
    let k = op.order();
    let mut candidates = Vec::new();
    for j in 1..=k {
        let mut v = vec![0.0; k + 1];
        v[j] = 1.0;
        candidates.push(v);
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    for j in 1..=k {
        if j + op.stride <= k {
            for sign in [1.0, -1.0] {
                let mut v = vec![0.0; k + 1];
                v[j] = h;
                v[j + op.stride] = sign * h;
                candidates.push(v);
            }
        }
    }
    let mut pos = None;
    let mut neg = None;
    for v in candidates {
        let q = rayleigh_quotient(op, &v);
        if q > 0.0 && pos.is_none() {
            pos = Some((v, q));
        } else if q < 0.0 && neg.is_none() {
            neg = Some((v, q));
        }
    }
    Some((pos?, neg?))
}
