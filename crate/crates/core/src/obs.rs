//! Mean-field messages out of the observation factor
//! `p(y_k | s_k, θ_k) ∝ exp{-|y_k - e^{jθ_k} hᵀ s_k|² / σ²_n}`.
//!
//! Taps here are in state order: `state_taps[i]` multiplies `s_k[i]`, where
//! `s_k = [x_{k-L+1}, …, x_k]`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::gaussian::{CGaussInfo, RealGaussian};

/// How `⟨e^{-jθ}⟩` is evaluated under a Gaussian phase belief.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CircularMoment {
    /// Second-order expansion `e^{-jθ̂}(1 - σ²/2)`, clamped to `[0, 1]`.
    #[default]
    Taylor,
    /// Exact Gaussian characteristic function `e^{-jθ̂} e^{-σ²/2}`.
    Exact,
}

/// Reverses channel taps (`h_0` first) into state order.
pub fn state_taps(taps: &[Complex64]) -> Vec<Complex64> {
    taps.iter().rev().copied().collect()
}

/// `hᵀ s`.
pub fn tap_product(state_taps: &[Complex64], s: &[Complex64]) -> Complex64 {
    state_taps.iter().zip(s).map(|(h, x)| h * x).sum()
}

/// Coefficient `r_k = 2 σ⁻²_n y*_k hᵀ ŝ_k` of the exact message
/// `exp{Re[r_k e^{jθ}]}`.
pub fn tikhonov_coefficient(
    y: Complex64,
    state_taps: &[Complex64],
    noise_var: f64,
    s_mean: &[Complex64],
) -> Complex64 {
    y.conj() * tap_product(state_taps, s_mean) * (2.0 / noise_var)
}

/// Second-order Taylor Gaussianization of `exp{Re[r e^{jθ}]}` around
/// `theta_hat`. Non-positive curvature yields the vacuous message.
pub fn msg_from_coefficient(r: Complex64, theta_hat: f64, curvature_eps: f64) -> RealGaussian {
    let rot = r * Complex64::from_polar(1.0, theta_hat);
    let precision = rot.re;
    if !(precision > curvature_eps) {
        return RealGaussian::VACUOUS;
    }
    let precision_mean = (rot * Complex64::new(theta_hat, 1.0)).re;
    RealGaussian::from_natural(precision, precision_mean)
}

pub fn msg_to_theta(
    y: Complex64,
    state_taps: &[Complex64],
    noise_var: f64,
    s_mean: &[Complex64],
    theta_hat: f64,
    curvature_eps: f64,
) -> RealGaussian {
    msg_from_coefficient(
        tikhonov_coefficient(y, state_taps, noise_var, s_mean),
        theta_hat,
        curvature_eps,
    )
}

/// Approximation of `⟨e^{-jθ}⟩` under `belief`.
pub fn circular_factor(belief: &RealGaussian, mode: CircularMoment) -> Complex64 {
    let v = belief.variance();
    let shrink = match mode {
        CircularMoment::Taylor => (1.0 - 0.5 * v).clamp(0.0, 1.0),
        CircularMoment::Exact => (-0.5 * v).exp(),
    };
    if shrink == 0.0 {
        return Complex64::default();
    }
    Complex64::from_polar(shrink, -belief.mean())
}

/// The rank-1 precision `σ⁻²_n h* hᵀ`; it does not depend on `k`.
pub fn observation_precision(state_taps: &[Complex64], noise_var: f64) -> Vec<Complex64> {
    let n = state_taps.len();
    let mut w = vec![Complex64::default(); n * n];
    for i in 0..n {
        for j in 0..n {
            w[i * n + j] = state_taps[i].conj() * state_taps[j] / noise_var;
        }
    }
    w
}

/// Precision-mean `σ⁻²_n y ⟨e^{-jθ}⟩ h*`, written into `b`.
pub fn observation_shift(
    y: Complex64,
    state_taps: &[Complex64],
    noise_var: f64,
    circ: Complex64,
    b: &mut [Complex64],
) {
    let g = y * circ / noise_var;
    for (o, h) in b.iter_mut().zip(state_taps) {
        *o = h.conj() * g;
    }
}

pub fn msg_to_state(
    y: Complex64,
    state_taps: &[Complex64],
    noise_var: f64,
    theta_belief: &RealGaussian,
    mode: CircularMoment,
) -> CGaussInfo {
    let n = state_taps.len();
    let mut b = vec![Complex64::default(); n];
    observation_shift(
        y,
        state_taps,
        noise_var,
        circular_factor(theta_belief, mode),
        &mut b,
    );
    CGaussInfo {
        dim: n,
        w: observation_precision(state_taps, noise_var),
        b,
    }
}

/// Quadrature moments of the normalized density `∝ exp{Re[r e^{jθ}]}` on a
/// width-2π interval centred at its mode `-arg r`, trapezoidal rule.
pub fn tikhonov_oracle(r: Complex64, grid_size: usize) -> (f64, f64) {
    let grid_size = grid_size.max(2);
    let center = -r.arg();
    let kappa = r.norm();
    let h = std::f64::consts::TAU / (grid_size - 1) as f64;
    let (mut z, mut m1, mut m2) = (0.0, 0.0, 0.0);
    for i in 0..grid_size {
        let t = center - std::f64::consts::PI + i as f64 * h;
        let wt = if i == 0 || i == grid_size - 1 {
            0.5
        } else {
            1.0
        };
        // Shifted by kappa for overflow safety; the constant cancels.
        let f = wt * (kappa * ((t - center).cos() - 1.0)).exp();
        z += f;
        m1 += f * t;
        m2 += f * t * t;
    }
    let mean = m1 / z;
    (mean, m2 / z - mean * mean)
}
