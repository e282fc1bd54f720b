//! Truncated Fourier series on the circle `θ ∈ [-π, π)` and the exact
//! spectral operators acting on them.
//!
//! A [`SpectralField`] stores `f(θ) = a₀ + Σ_{k=1}^{N} a_k cos kθ + b_k sin kθ`
//! as real cosine/sine pairs. Grid samples live on the uniform nodes
//! `θ_j = -π + 2πj/M`.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::SpectralError;

/// Real periodic function as a truncated Fourier series.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    pub mean: f64,
    /// `a_k`, index `k - 1`.
    pub cos: Vec<f64>,
    /// `b_k`, index `k - 1`.
    pub sin: Vec<f64>,
}

/// Samples on the uniform periodic grid `θ_j = -π + 2πj/M`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub samples: Vec<f64>,
}

/// How the free additive constant in `∂_θ u = Hω` is fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GaugeChoice {
    /// `∫ u dθ = 0`.
    MeanZero,
    /// `u(0) = 0`.
    VanishAtZero,
}

/// Grid used for quadratic products.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Dealias {
    /// Zero-padded grid with at least `3N + 1` points: modes `0..=N` of the
    /// product are exact.
    #[default]
    ThreeHalves,
    /// Minimal `2N + 1` grid; high modes of the product alias back.
    Off,
}

impl SpectralField {
    pub fn zeros(n: usize) -> Self {
        SpectralField {
            mean: 0.0,
            cos: vec![0.0; n],
            sin: vec![0.0; n],
        }
    }

    pub fn constant(value: f64, n: usize) -> Self {
        let mut f = Self::zeros(n);
        f.mean = value;
        f
    }

    /// `amplitude · cos kθ` truncated at `n`.
    pub fn cos_mode(k: usize, amplitude: f64, n: usize) -> Self {
        let mut f = Self::zeros(n);
        if k == 0 {
            f.mean = amplitude;
        } else {
            f.cos[k - 1] = amplitude;
        }
        f
    }

    /// `amplitude · sin kθ` truncated at `n`.
    pub fn sin_mode(k: usize, amplitude: f64, n: usize) -> Self {
        assert!(k >= 1, "sin 0θ is identically zero");
        let mut f = Self::zeros(n);
        f.sin[k - 1] = amplitude;
        f
    }

    /// Truncation order `N`.
    pub fn order(&self) -> usize {
        self.cos.len()
    }

    pub fn a(&self, k: usize) -> f64 {
        match k {
            0 => self.mean,
            k if k <= self.order() => self.cos[k - 1],
            _ => 0.0,
        }
    }

    pub fn b(&self, k: usize) -> f64 {
        match k {
            0 => 0.0,
            k if k <= self.order() => self.sin[k - 1],
            _ => 0.0,
        }
    }

    /// Copy with truncation order `n` (zero-extended or truncated).
    pub fn resized(&self, n: usize) -> Self {
        let mut out = Self::zeros(n);
        out.mean = self.mean;
        let m = n.min(self.order());
        out.cos[..m].copy_from_slice(&self.cos[..m]);
        out.sin[..m].copy_from_slice(&self.sin[..m]);
        out
    }

    pub fn is_finite(&self) -> bool {
        self.mean.is_finite()
            && self.cos.iter().all(|x| x.is_finite())
            && self.sin.iter().all(|x| x.is_finite())
    }

    /// Point evaluation.
    pub fn eval(&self, theta: f64) -> f64 {
        // e^{ikθ} by repeated rotation
        let step = Complex64::from_polar(1.0, theta);
        let mut z = step;
        let mut acc = self.mean;
        for (a, b) in self.cos.iter().zip(&self.sin) {
            acc += a * z.re + b * z.im;
            z *= step;
        }
        acc
    }

    /// `∫_{-π}^{π} f dθ`.
    pub fn integral(&self) -> f64 {
        2.0 * PI * self.mean
    }

    /// `‖f‖²_{L²}` by Parseval.
    pub fn l2_norm_sq(&self) -> f64 {
        2.0 * PI * self.mean * self.mean
            + PI * self
                .cos
                .iter()
                .zip(&self.sin)
                .map(|(a, b)| a * a + b * b)
                .sum::<f64>()
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().sqrt()
    }

    /// `‖∂_θ f‖²_{L²}` by Parseval.
    pub fn h1_seminorm_sq(&self) -> f64 {
        PI * self
            .cos
            .iter()
            .zip(&self.sin)
            .enumerate()
            .map(|(i, (a, b))| {
                let k = (i + 1) as f64;
                k * k * (a * a + b * b)
            })
            .sum::<f64>()
    }

    /// Maximum absolute coefficient; cheap proxy for "is zero".
    pub fn max_abs_coeff(&self) -> f64 {
        self.cos
            .iter()
            .chain(&self.sin)
            .fold(self.mean.abs(), |m, x| m.max(x.abs()))
    }

    /// Keeps only the cosine modes and the mean.
    pub fn even_part(&self) -> Self {
        SpectralField {
            mean: self.mean,
            cos: self.cos.clone(),
            sin: vec![0.0; self.order()],
        }
    }

    /// Keeps only the sine modes.
    pub fn odd_part(&self) -> Self {
        SpectralField {
            mean: 0.0,
            cos: vec![0.0; self.order()],
            sin: self.sin.clone(),
        }
    }

    /// `self + alpha · other`; the result has the larger truncation order.
    pub fn add_scaled(&self, alpha: f64, other: &SpectralField) -> SpectralField {
        let n = self.order().max(other.order());
        let mut out = self.resized(n);
        out.mean += alpha * other.mean;
        for (o, x) in out.cos.iter_mut().zip(&other.cos) {
            *o += alpha * x;
        }
        for (o, x) in out.sin.iter_mut().zip(&other.sin) {
            *o += alpha * x;
        }
        out
    }

    pub fn scaled(&self, alpha: f64) -> SpectralField {
        SpectralField {
            mean: alpha * self.mean,
            cos: self.cos.iter().map(|x| alpha * x).collect(),
            sin: self.sin.iter().map(|x| alpha * x).collect(),
        }
    }

    fn map_modes(&self, f: impl Fn(f64, f64, f64) -> (f64, f64)) -> SpectralField {
        let mut out = SpectralField::zeros(self.order());
        for i in 0..self.order() {
            let (a, b) = f((i + 1) as f64, self.cos[i], self.sin[i]);
            out.cos[i] = a;
            out.sin[i] = b;
        }
        out
    }
}

impl Add for &SpectralField {
    type Output = SpectralField;
    fn add(self, rhs: &SpectralField) -> SpectralField {
        self.add_scaled(1.0, rhs)
    }
}

impl Sub for &SpectralField {
    type Output = SpectralField;
    fn sub(self, rhs: &SpectralField) -> SpectralField {
        self.add_scaled(-1.0, rhs)
    }
}

impl Neg for &SpectralField {
    type Output = SpectralField;
    fn neg(self) -> SpectralField {
        self.scaled(-1.0)
    }
}

impl Mul<f64> for &SpectralField {
    type Output = SpectralField;
    fn mul(self, rhs: f64) -> SpectralField {
        self.scaled(rhs)
    }
}

impl GridField {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Samples `f` at the grid nodes.
    pub fn from_fn(m: usize, f: impl Fn(f64) -> f64) -> Self {
        GridField {
            samples: (0..m).map(|j| f(grid_node(j, m))).collect(),
        }
    }

    /// Uniform trapezoid quadrature over one period.
    pub fn integral(&self) -> f64 {
        2.0 * PI / self.len() as f64 * self.samples.iter().sum::<f64>()
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    pub fn min(&self) -> f64 {
        self.samples.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridField {
        GridField {
            samples: self.samples.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn zip_map(&self, other: &GridField, f: impl Fn(f64, f64) -> f64) -> GridField {
        assert_eq!(self.len(), other.len(), "grid size mismatch");
        GridField {
            samples: self
                .samples
                .iter()
                .zip(&other.samples)
                .map(|(&x, &y)| f(x, y))
                .collect(),
        }
    }
}

/// `θ_j = -π + 2πj/M`.
pub fn grid_node(j: usize, m: usize) -> f64 {
    -PI + 2.0 * PI * j as f64 / m as f64
}

/// Smallest `2^a 3^b 5^c` that is `≥ min`.
pub fn fft_friendly_len(min: usize) -> usize {
    let mut m = min.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r % p == 0 {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

/// Grid size on which products of two order-`n` fields are exact up to mode `n`.
pub fn product_grid_len(n: usize) -> usize {
    fft_friendly_len(3 * n + 1)
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(m: usize, forward: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if forward {
            p.plan_fft_forward(m)
        } else {
            p.plan_fft_inverse(m)
        }
    })
}

/// Samples the trigonometric polynomial at `m ≥ 2N + 1` nodes.
pub fn to_grid(field: &SpectralField, m: usize) -> Result<GridField, SpectralError> {
    let n = field.order();
    if m < 2 * n + 1 {
        return Err(SpectralError::Resolution { grid: m, order: n });
    }
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    buf[0] = Complex64::new(field.mean, 0.0);
    for k in 1..=n {
        // θ_j = -π + 2πj/M contributes the factor (-1)^k
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let c = Complex64::new(field.cos[k - 1], -field.sin[k - 1]) * (0.5 * sign);
        buf[k] = c;
        buf[m - k] = c.conj();
    }
    plan(m, false).process(&mut buf);
    Ok(GridField {
        samples: buf.into_iter().map(|z| z.re).collect(),
    })
}

/// Trigonometric interpolation (`M = 2N + 1`) or least-squares truncation
/// (`M > 2N + 1`) of grid samples.
pub fn from_grid(grid: &GridField, n: usize) -> Result<SpectralField, SpectralError> {
    let m = grid.len();
    if m < 2 * n + 1 {
        return Err(SpectralError::Resolution { grid: m, order: n });
    }
    let mut buf: Vec<Complex64> = grid
        .samples
        .iter()
        .map(|&x| Complex64::new(x, 0.0))
        .collect();
    plan(m, true).process(&mut buf);
    let scale = 1.0 / m as f64;
    let mut out = SpectralField::zeros(n);
    out.mean = buf[0].re * scale;
    for k in 1..=n {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let c = buf[k] * (scale * sign);
        out.cos[k - 1] = 2.0 * c.re;
        out.sin[k - 1] = -2.0 * c.im;
    }
    Ok(out)
}

/// Circle Hilbert transform: `cos kθ ↦ sin kθ`, `sin kθ ↦ -cos kθ`, `1 ↦ 0`.
pub fn hilbert(field: &SpectralField) -> SpectralField {
    field.map_modes(|_, a, b| (-b, a))
}

/// Exact `∂_θ`.
pub fn derivative(field: &SpectralField) -> SpectralField {
    field.map_modes(|k, a, b| (k * b, -k * a))
}

/// Mean-zero antiderivative of the non-constant part of `field`.
pub fn antiderivative(field: &SpectralField) -> SpectralField {
    field.map_modes(|k, a, b| (-b / k, a / k))
}

/// Recovers `u` from `∂_θ u = Hω` under the requested gauge.
pub fn velocity_from_vorticity(omega: &SpectralField, gauge: GaugeChoice) -> SpectralField {
    let mut u = omega.map_modes(|k, a, b| (-a / k, -b / k));
    if gauge == GaugeChoice::VanishAtZero {
        u.mean = -u.cos.iter().sum::<f64>();
    }
    u
}

/// Dealiased product truncated at the larger order of the two inputs.
pub fn multiply(a: &SpectralField, b: &SpectralField) -> SpectralField {
    multiply_with(a, b, Dealias::ThreeHalves)
}

pub fn multiply_with(a: &SpectralField, b: &SpectralField, dealias: Dealias) -> SpectralField {
    let n = a.order().max(b.order());
    let m = match dealias {
        Dealias::ThreeHalves => product_grid_len(n),
        Dealias::Off => 2 * n + 1,
    };
    let ga = to_grid(&a.resized(n), m).expect("product grid is large enough");
    let gb = to_grid(&b.resized(n), m).expect("product grid is large enough");
    from_grid(&ga.zip_map(&gb, |x, y| x * y), n).expect("product grid is large enough")
}

/// Sum of pairwise products `Σ fᵢ·gᵢ` evaluated on one shared grid.
pub fn sum_of_products(
    pairs: &[(&SpectralField, &SpectralField)],
    dealias: Dealias,
) -> SpectralField {
    let n = pairs
        .iter()
        .map(|(f, g)| f.order().max(g.order()))
        .max()
        .unwrap_or(0);
    let m = match dealias {
        Dealias::ThreeHalves => product_grid_len(n),
        Dealias::Off => 2 * n + 1,
    };
    let mut acc = vec![0.0; m];
    for (f, g) in pairs {
        let gf = to_grid(&f.resized(n), m).expect("product grid is large enough");
        let gg = to_grid(&g.resized(n), m).expect("product grid is large enough");
        for ((s, x), y) in acc.iter_mut().zip(&gf.samples).zip(&gg.samples) {
            *s += x * y;
        }
    }
    from_grid(&GridField { samples: acc }, n).expect("product grid is large enough")
}

/// `Σ fᵢ·gᵢ` without truncation: order `2N` for inputs of order `N`.
pub fn sum_of_products_exact(pairs: &[(&SpectralField, &SpectralField)]) -> SpectralField {
    let n = pairs
        .iter()
        .map(|(f, g)| f.order().max(g.order()))
        .max()
        .unwrap_or(0);
    let m = fft_friendly_len(4 * n + 1);
    let mut acc = vec![0.0; m];
    for (f, g) in pairs {
        let gf = to_grid(&f.resized(n), m).expect("grid resolves twice the order");
        let gg = to_grid(&g.resized(n), m).expect("grid resolves twice the order");
        for ((s, x), y) in acc.iter_mut().zip(&gf.samples).zip(&gg.samples) {
            *s += x * y;
        }
    }
    from_grid(&GridField { samples: acc }, 2 * n).expect("grid resolves twice the order")
}

/// Truncates to order `n`, folding every mode `j ≥ n` into mode `n` with
/// weight `j/n`. Keeps `f(0)`, `Σ j a_j` and `Σ j b_j = ∂_θf(0)`, so that
/// in tilde coordinates the result is the plain cut at `K = n - 1`.
pub fn fold_moments(field: &SpectralField, n: usize) -> SpectralField {
    if field.order() <= n || n == 0 {
        return field.resized(n);
    }
    let mut out = field.resized(n);
    let (mut a_top, mut b_top) = (0.0, 0.0);
    for j in n..=field.order() {
        a_top += j as f64 * field.a(j);
        b_top += j as f64 * field.b(j);
    }
    out.cos[n - 1] = a_top / n as f64;
    out.sin[n - 1] = b_top / n as f64;
    let kept: f64 = out.cos.iter().sum();
    let all: f64 = field.cos.iter().sum();
    out.mean = field.mean + all - kept;
    out
}

/// Max of `|f|` sampled on a grid of `m` points.
pub fn linf_on_grid(field: &SpectralField, m: usize) -> f64 {
    to_grid(field, m.max(2 * field.order() + 1))
        .map(|g| g.max_abs())
        .unwrap_or(f64::NAN)
}
