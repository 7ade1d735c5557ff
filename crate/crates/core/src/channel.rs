//! Ground-truth generation: Wiener phase noise, ISI channel and AWGN.

use std::io::Write;

use num_complex::Complex64;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tx::{conv_encode, insert_pilots, qpsk_map, CodeSpec, FrameLayout, Interleaver};

/// Proakis-C taps, `h_0` first.
pub const PROAKIS_C: [f64; 5] = [0.227, 0.460, 0.668, 0.460, 0.227];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Theta0Mode {
    #[default]
    Zero,
    Uniform,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSpec {
    /// `taps[l]` multiplies `x_{k-l}`.
    pub taps: Vec<Complex64>,
    /// Total complex noise variance.
    pub noise_var: f64,
    /// Wiener innovation variance (rad²).
    pub pn_var: f64,
    pub theta0: Theta0Mode,
}

impl ChannelSpec {
    pub fn new(taps: Vec<Complex64>, noise_var: f64, pn_var: f64) -> Result<Self> {
        if taps.is_empty() {
            return Err(Error::config("taps", "channel needs at least one tap"));
        }
        if !(noise_var > 0.0) {
            return Err(Error::config("noise_var", "must be positive"));
        }
        if !(pn_var >= 0.0) {
            return Err(Error::config("pn_var", "must be nonnegative"));
        }
        Ok(Self {
            taps,
            noise_var,
            pn_var,
            theta0: Theta0Mode::Zero,
        })
    }

    pub fn memory(&self) -> usize {
        self.taps.len()
    }

    pub fn tap_energy(&self) -> f64 {
        self.taps.iter().map(|h| h.norm_sqr()).sum()
    }
}

pub fn real_taps(taps: &[f64]) -> Vec<Complex64> {
    taps.iter().map(|&t| Complex64::new(t, 0.0)).collect()
}

/// Noise variance giving receive SNR `‖h‖²·E|x|²/σ²_n` for unit-energy
/// symbols.
pub fn noise_var_for_snr_db(taps: &[Complex64], snr_db: f64) -> f64 {
    let e: f64 = taps.iter().map(|h| h.norm_sqr()).sum();
    e / 10f64.powf(snr_db / 10.0)
}

pub fn gen_pn<R: Rng + ?Sized>(len: usize, pn_var: f64, mode: Theta0Mode, rng: &mut R) -> Vec<f64> {
    let mut theta = Vec::with_capacity(len);
    if len == 0 {
        return theta;
    }
    let t0 = match mode {
        Theta0Mode::Zero => 0.0,
        Theta0Mode::Uniform => rng.random_range(0.0..std::f64::consts::TAU),
    };
    theta.push(t0);
    let sd = pn_var.sqrt();
    for k in 1..len {
        let d: f64 = StandardNormal.sample(rng);
        theta.push(theta[k - 1] + sd * d);
    }
    theta
}

/// Noise-free channel output `Σ_l h_l x_{k-l}` for `k = 0 … M+L-2`.
pub fn convolve(x: &[Complex64], taps: &[Complex64]) -> Vec<Complex64> {
    let len = x.len() + taps.len() - 1;
    (0..len)
        .map(|k| {
            taps.iter()
                .enumerate()
                .filter(|(l, _)| *l <= k && k - l < x.len())
                .map(|(l, h)| h * x[k - l])
                .sum()
        })
        .collect()
}

/// Rotated channel output without noise.
pub fn rotate(clean: &[Complex64], theta: &[f64]) -> Vec<Complex64> {
    clean
        .iter()
        .zip(theta)
        .map(|(z, &t)| z * Complex64::from_polar(1.0, t))
        .collect()
}

/// `y_k = e^{jθ_k} Σ_l h_l x_{k-l} + n_k`, `n_k ~ CN(0, σ²_n)`.
pub fn observe<R: Rng + ?Sized>(
    x: &[Complex64],
    theta: &[f64],
    spec: &ChannelSpec,
    rng: &mut R,
) -> Result<Vec<Complex64>> {
    let len = x.len() + spec.taps.len() - 1;
    if theta.len() != len {
        return Err(Error::DimensionMismatch {
            expected: len,
            found: theta.len(),
        });
    }
    let sd = (spec.noise_var / 2.0).sqrt();
    let mut y = rotate(&convolve(x, &spec.taps), theta);
    for v in y.iter_mut() {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        *v += Complex64::new(re, im) * sd;
    }
    Ok(y)
}

/// Everything generated for one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameTruth {
    pub bits: Vec<u8>,
    /// Interleaved codeword.
    pub coded: Vec<u8>,
    /// Full symbol frame including pilots.
    pub symbols: Vec<Complex64>,
    pub pilot_mask: Vec<bool>,
    /// Length `M + L - 1`.
    pub theta: Vec<f64>,
    pub clean: Vec<Complex64>,
    pub y: Vec<Complex64>,
}

impl FrameTruth {
    /// State vector `s_k = [x_{k-L+1}, …, x_k]` with zero padding.
    pub fn state(&self, k: usize, l: usize) -> Vec<Complex64> {
        (0..l)
            .map(|i| {
                let idx = k as isize - (l as isize - 1) + i as isize;
                if idx < 0 || idx as usize >= self.symbols.len() {
                    Complex64::default()
                } else {
                    self.symbols[idx as usize]
                }
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "k,theta,re_y,im_y")?;
        for (k, (t, y)) in self.theta.iter().zip(&self.y).enumerate() {
            writeln!(w, "{k},{t:.16e},{:.16e},{:.16e}", y.re, y.im)?;
        }
        Ok(())
    }
}

/// Seed for frame `index` under master seed `master`.
pub fn frame_seed(master: u64, index: u64) -> u64 {
    master ^ index
}

/// Generates one frame from its own RNG stream.
pub fn simulate_frame(
    layout: &FrameLayout,
    code: &CodeSpec,
    interleaver: &Interleaver,
    spec: &ChannelSpec,
    seed: u64,
) -> Result<FrameTruth> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_info = layout.n_info_bits(code)?;
    let bits: Vec<u8> = (0..n_info).map(|_| (rng.next_u32() & 1) as u8).collect();
    let coded = interleaver.interleave(&conv_encode(&bits, code))?;
    let (symbols, pilot_mask) = insert_pilots(&qpsk_map(&coded)?, layout)?;
    let theta = gen_pn(
        symbols.len() + spec.memory() - 1,
        spec.pn_var,
        spec.theta0,
        &mut rng,
    );
    let clean = convolve(&symbols, &spec.taps);
    let y = observe(&symbols, &theta, spec, &mut rng)?;
    Ok(FrameTruth {
        bits,
        coded,
        symbols,
        pilot_mask,
        theta,
        clean,
        y,
    })
}
