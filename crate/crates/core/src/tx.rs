//! Transmitter: convolutional encoding, interleaving, Gray QPSK mapping and
//! pilot insertion.

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const R: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Gray QPSK alphabet indexed by `2*b0 + b1`; bit 0 selects the sign of the
/// real part, bit 1 the sign of the imaginary part.
pub const QPSK: [Complex64; 4] = [
    Complex64::new(R, R),
    Complex64::new(R, -R),
    Complex64::new(-R, R),
    Complex64::new(-R, -R),
];

/// Fixed pilot symbol.
pub const PILOT: Complex64 = Complex64::new(R, R);

/// Feedforward rate-1/n convolutional code.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeSpec {
    /// Generator polynomials; the most significant of the `constraint_length`
    /// bits taps the current input.
    pub generators: Vec<u32>,
    pub constraint_length: usize,
}

impl Default for CodeSpec {
    fn default() -> Self {
        Self {
            generators: vec![0o23, 0o35],
            constraint_length: 5,
        }
    }
}

impl CodeSpec {
    pub fn memory(&self) -> usize {
        self.constraint_length - 1
    }

    pub fn n_states(&self) -> usize {
        1 << self.memory()
    }

    pub fn n_outputs(&self) -> usize {
        self.generators.len()
    }

    /// Output bits for `input` entering a register whose previous inputs
    /// are `state` (most recent input in the top bit).
    pub fn outputs(&self, state: usize, input: u8) -> impl Iterator<Item = u8> + '_ {
        let reg = ((input as u32) << self.memory()) | state as u32;
        self.generators
            .iter()
            .map(move |g| ((reg & g).count_ones() & 1) as u8)
    }

    pub fn next_state(&self, state: usize, input: u8) -> usize {
        ((input as usize) << (self.memory() - 1)) | (state >> 1)
    }

    pub fn coded_len(&self, n_info: usize) -> usize {
        self.n_outputs() * (n_info + self.memory())
    }
}

/// Zero-tail terminated encoding; output length is
/// `n_outputs * (len + memory)`.
pub fn conv_encode(bits: &[u8], code: &CodeSpec) -> Vec<u8> {
    let mut out = Vec::with_capacity(code.coded_len(bits.len()));
    let mut state = 0usize;
    let tail = std::iter::repeat_n(0u8, code.memory());
    for b in bits.iter().copied().chain(tail) {
        out.extend(code.outputs(state, b));
        state = code.next_state(state, b);
    }
    out
}

/// Seeded pseudo-random permutation. `interleave` sends input `perm[i]` to
/// output position `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interleaver {
    perm: Vec<usize>,
}

impl Interleaver {
    pub fn new(len: usize, seed: u64) -> Self {
        let mut perm: Vec<usize> = (0..len).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        Self { perm }
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    pub fn interleave<T: Copy>(&self, input: &[T]) -> Result<Vec<T>> {
        self.check(input.len())?;
        Ok(self.perm.iter().map(|&p| input[p]).collect())
    }

    pub fn deinterleave<T: Copy + Default>(&self, input: &[T]) -> Result<Vec<T>> {
        self.check(input.len())?;
        let mut out = vec![T::default(); input.len()];
        for (i, &p) in self.perm.iter().enumerate() {
            out[p] = input[i];
        }
        Ok(out)
    }

    fn check(&self, len: usize) -> Result<()> {
        if len != self.perm.len() {
            return Err(Error::DimensionMismatch {
                expected: self.perm.len(),
                found: len,
            });
        }
        Ok(())
    }
}

pub fn qpsk_symbol(b0: u8, b1: u8) -> Complex64 {
    QPSK[((b0 & 1) << 1 | (b1 & 1)) as usize]
}

pub fn qpsk_map(bits: &[u8]) -> Result<Vec<Complex64>> {
    if !bits.len().is_multiple_of(2) {
        return Err(Error::OddLength(bits.len()));
    }
    Ok(bits
        .chunks_exact(2)
        .map(|p| qpsk_symbol(p[0], p[1]))
        .collect())
}

/// Frame layout: a group of `pilots_per_block` pilots precedes every
/// `pilot_period` data symbols.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameLayout {
    pub n_data_symbols: usize,
    pub pilot_period: usize,
    pub pilots_per_block: usize,
    pilot_positions: Vec<usize>,
}

impl FrameLayout {
    pub fn new(
        n_data_symbols: usize,
        pilot_period: usize,
        pilots_per_block: usize,
    ) -> Result<Self> {
        if n_data_symbols == 0 {
            return Err(Error::Layout("frame needs at least one data symbol".into()));
        }
        if pilots_per_block > 0 && pilot_period == 0 {
            return Err(Error::Layout("pilot period must be positive".into()));
        }
        let mut pilot_positions = Vec::new();
        if pilots_per_block > 0 {
            let blocks = n_data_symbols.div_ceil(pilot_period);
            for blk in 0..blocks {
                let start = blk * (pilot_period + pilots_per_block);
                pilot_positions.extend(start..start + pilots_per_block);
            }
        }
        Ok(Self {
            n_data_symbols,
            pilot_period,
            pilots_per_block,
            pilot_positions,
        })
    }

    /// 1024 data symbols with 5 pilots ahead of every 256.
    pub fn standard() -> Self {
        Self::new(1024, 256, 5).expect("valid layout")
    }

    pub fn pilot_positions(&self) -> &[usize] {
        &self.pilot_positions
    }

    pub fn total_symbols(&self) -> usize {
        self.n_data_symbols + self.pilot_positions.len()
    }

    pub fn n_coded_bits(&self) -> usize {
        2 * self.n_data_symbols
    }

    /// Info bits such that the terminated codeword fills the data symbols
    /// exactly.
    pub fn n_info_bits(&self, code: &CodeSpec) -> Result<usize> {
        let coded = self.n_coded_bits();
        let n = code.n_outputs();
        if !coded.is_multiple_of(n) || coded / n <= code.memory() {
            return Err(Error::Layout(format!(
                "{} coded bits do not fit a terminated rate-1/{n} codeword",
                coded
            )));
        }
        Ok(coded / n - code.memory())
    }

    pub fn pilot_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.total_symbols()];
        for &p in &self.pilot_positions {
            mask[p] = true;
        }
        mask
    }

    /// Positions of data symbols in the full frame, in payload order.
    pub fn data_positions(&self) -> Vec<usize> {
        self.pilot_mask()
            .iter()
            .enumerate()
            .filter(|(_, &p)| !p)
            .map(|(i, _)| i)
            .collect()
    }
}

pub fn insert_pilots(
    x_data: &[Complex64],
    layout: &FrameLayout,
) -> Result<(Vec<Complex64>, Vec<bool>)> {
    if x_data.len() != layout.n_data_symbols {
        return Err(Error::Layout(format!(
            "{} data symbols supplied, layout expects {}",
            x_data.len(),
            layout.n_data_symbols
        )));
    }
    let mask = layout.pilot_mask();
    let mut data = x_data.iter();
    let x = mask
        .iter()
        .map(|&p| {
            if p {
                PILOT
            } else {
                *data.next().expect("counted")
            }
        })
        .collect();
    Ok((x, mask))
}
