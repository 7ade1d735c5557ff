//! Log-domain BCJR decoding of a zero-tail terminated feedforward
//! convolutional code.
//!
//! LLRs follow `log p(bit = 0) / p(bit = 1)` throughout.

use crate::error::{Error, Result};
use crate::tx::CodeSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Branch {
    pub next: usize,
    /// Output bits packed LSB-first (bit `i` = output stream `i`).
    pub outputs: u8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trellis {
    n_states: usize,
    n_outputs: usize,
    memory: usize,
    /// `branches[state][input]`.
    branches: Vec<[Branch; 2]>,
}

impl Trellis {
    pub fn new(code: &CodeSpec) -> Self {
        assert!(code.n_outputs() <= 8, "at most 8 output streams");
        let branches = (0..code.n_states())
            .map(|s| {
                [0u8, 1u8].map(|u| Branch {
                    next: code.next_state(s, u),
                    outputs: code
                        .outputs(s, u)
                        .enumerate()
                        .fold(0u8, |acc, (i, b)| acc | (b << i)),
                })
            })
            .collect();
        Self {
            n_states: code.n_states(),
            n_outputs: code.n_outputs(),
            memory: code.memory(),
            branches,
        }
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn branch(&self, state: usize, input: u8) -> Branch {
        self.branches[state][input as usize]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BcjrOutput {
    /// Posterior LLRs of the information bits (tail excluded).
    pub info_llr: Vec<f64>,
    /// Posterior minus intrinsic LLR for every coded bit.
    pub coded_extrinsic: Vec<f64>,
}

#[inline]
fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

pub fn bcjr(coded_llrs: &[f64], trellis: &Trellis) -> Result<BcjrOutput> {
    let n = trellis.n_outputs;
    if !coded_llrs.len().is_multiple_of(n) || coded_llrs.len() / n < trellis.memory {
        return Err(Error::DimensionMismatch {
            expected: n * (trellis.memory + 1),
            found: coded_llrs.len(),
        });
    }
    if let Some(i) = coded_llrs.iter().position(|l| !l.is_finite()) {
        return Err(Error::NonFiniteLlr(i));
    }
    let steps = coded_llrs.len() / n;
    let n_info = steps - trellis.memory;
    let ns = trellis.n_states;
    let neg = f64::NEG_INFINITY;

    // Branch metric: Σ_i ±L_i/2 over the branch's output bits.
    let metric = |t: usize, outputs: u8| -> f64 {
        (0..n)
            .map(|i| {
                let l = coded_llrs[t * n + i];
                if outputs >> i & 1 == 0 {
                    0.5 * l
                } else {
                    -0.5 * l
                }
            })
            .sum()
    };
    let inputs = |t: usize| -> &'static [u8] {
        if t < n_info {
            &[0, 1]
        } else {
            &[0]
        }
    };

    let mut alpha = vec![neg; (steps + 1) * ns];
    alpha[0] = 0.0;
    for t in 0..steps {
        let (cur, nxt) = alpha.split_at_mut((t + 1) * ns);
        let cur = &cur[t * ns..];
        let nxt = &mut nxt[..ns];
        for s in 0..ns {
            if cur[s] == neg {
                continue;
            }
            for &u in inputs(t) {
                let br = trellis.branch(s, u);
                nxt[br.next] = log_add(nxt[br.next], cur[s] + metric(t, br.outputs));
            }
        }
        let mx = nxt.iter().cloned().fold(neg, f64::max);
        nxt.iter_mut().for_each(|v| *v -= mx);
    }

    let mut beta = vec![neg; (steps + 1) * ns];
    beta[steps * ns] = 0.0;
    for t in (0..steps).rev() {
        let (cur, nxt) = beta.split_at_mut((t + 1) * ns);
        let cur = &mut cur[t * ns..];
        let nxt = &nxt[..ns];
        for s in 0..ns {
            let mut acc = neg;
            for &u in inputs(t) {
                let br = trellis.branch(s, u);
                acc = log_add(acc, nxt[br.next] + metric(t, br.outputs));
            }
            cur[s] = acc;
        }
        let mx = cur.iter().cloned().fold(neg, f64::max);
        cur.iter_mut().for_each(|v| *v -= mx);
    }

    let mut info_llr = Vec::with_capacity(n_info);
    let mut coded_extrinsic = vec![0.0; coded_llrs.len()];
    let mut bit0 = vec![neg; n];
    let mut bit1 = vec![neg; n];
    for t in 0..steps {
        let mut u0 = neg;
        let mut u1 = neg;
        bit0.fill(neg);
        bit1.fill(neg);
        for s in 0..ns {
            let a = alpha[t * ns + s];
            if a == neg {
                continue;
            }
            for &u in inputs(t) {
                let br = trellis.branch(s, u);
                let p = a + metric(t, br.outputs) + beta[(t + 1) * ns + br.next];
                if u == 0 {
                    u0 = log_add(u0, p);
                } else {
                    u1 = log_add(u1, p);
                }
                for i in 0..n {
                    if br.outputs >> i & 1 == 0 {
                        bit0[i] = log_add(bit0[i], p);
                    } else {
                        bit1[i] = log_add(bit1[i], p);
                    }
                }
            }
        }
        if t < n_info {
            info_llr.push(u0 - u1);
        }
        for i in 0..n {
            coded_extrinsic[t * n + i] = (bit0[i] - bit1[i]) - coded_llrs[t * n + i];
        }
    }
    Ok(BcjrOutput {
        info_llr,
        coded_extrinsic,
    })
}

/// Sign decisions; a zero LLR decides 0.
pub fn hard_decide(llrs: &[f64]) -> Vec<u8> {
    llrs.iter().map(|&l| u8::from(l < 0.0)).collect()
}
