//! Brute-force references for verification. None of these share numerical
//! kernels with the modules they check: dense solves go through nalgebra,
//! the MAP oracle enumerates codewords with its own encoder, and the phase
//! posterior is evaluated on a grid with the exact likelihood.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gaussian::{CGaussInfo, CGaussMoments, RealGaussian, ScalarCGauss};

/// Exact marginals `(mean, variance)` of the Gaussian chain
/// `root(θ_0) Π N(θ_k; θ_{k-1}, var_delta) Π incoming_k(θ_k)`.
pub fn dense_chain_oracle(
    root: RealGaussian,
    incoming: &[RealGaussian],
    var_delta: f64,
) -> Result<Vec<(f64, f64)>> {
    let n = incoming.len();
    if n > 512 {
        return Err(Error::DimensionMismatch {
            expected: 512,
            found: n,
        });
    }
    if !(var_delta > 0.0) {
        return Err(Error::SingularBelief);
    }
    let mut p = DMatrix::<f64>::zeros(n, n);
    let mut h = DVector::<f64>::zeros(n);
    p[(0, 0)] += root.precision();
    h[0] += root.precision_mean();
    let q = 1.0 / var_delta;
    for k in 1..n {
        p[(k - 1, k - 1)] += q;
        p[(k, k)] += q;
        p[(k - 1, k)] -= q;
        p[(k, k - 1)] -= q;
    }
    for (k, m) in incoming.iter().enumerate() {
        p[(k, k)] += m.precision();
        h[k] += m.precision_mean();
    }
    let cov = p.try_inverse().ok_or(Error::SingularBelief)?;
    let mean = &cov * h;
    Ok((0..n).map(|k| (mean[k], cov[(k, k)])).collect())
}

/// Exact state marginals for symbols `x_0 … x_{M-1}` with independent
/// Gaussian priors and information-form observations on each state
/// `s_k = [x_{k-L+1}, …, x_k]`, `k = 0 … obs.len()-1`. Symbols outside
/// `0..M` are fixed to zero.
pub fn dense_state_oracle(
    x_prior: &[ScalarCGauss],
    obs: &[CGaussInfo],
    l: usize,
) -> Result<Vec<CGaussMoments>> {
    let m = x_prior.len();
    if m * l > 512 {
        return Err(Error::DimensionMismatch {
            expected: 512,
            found: m * l,
        });
    }
    let mut lam = DMatrix::<Complex64>::zeros(m, m);
    let mut eta = DVector::<Complex64>::zeros(m);
    for (i, p) in x_prior.iter().enumerate() {
        if !(p.variance > 0.0) {
            return Err(Error::SingularBelief);
        }
        lam[(i, i)] += Complex64::new(1.0 / p.variance, 0.0);
        eta[i] += p.mean / p.variance;
    }
    let index = |k: usize, i: usize| -> Option<usize> {
        let idx = k as isize - (l as isize - 1) + i as isize;
        (idx >= 0 && (idx as usize) < m).then_some(idx as usize)
    };
    for (k, o) in obs.iter().enumerate() {
        for i in 0..l {
            let Some(a) = index(k, i) else { continue };
            eta[a] += o.b[i];
            for j in 0..l {
                if let Some(b) = index(k, j) {
                    lam[(a, b)] += o.w[i * l + j];
                }
            }
        }
    }
    let cov = lam.try_inverse().ok_or(Error::SingularBelief)?;
    let mean = &cov * eta;
    Ok((0..obs.len())
        .map(|k| {
            let mut out = CGaussMoments::zeros(l);
            for i in 0..l {
                if let Some(a) = index(k, i) {
                    out.mean[i] = mean[a];
                    for j in 0..l {
                        if let Some(b) = index(k, j) {
                            out.cov[i * l + j] = cov[(a, b)];
                        }
                    }
                }
            }
            out
        })
        .collect())
}

fn logsumexp(v: &[f64]) -> f64 {
    let mx = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if mx == f64::NEG_INFINITY {
        return mx;
    }
    mx + v.iter().map(|x| (x - mx).exp()).sum::<f64>().ln()
}

/// Bit-wise MAP by enumerating all `2^k` terminated codewords. Returns
/// `(info posterior LLRs, coded extrinsic LLRs)`.
pub fn exhaustive_map(
    llrs: &[f64],
    k: usize,
    generators: &[u32],
    constraint_length: usize,
) -> (Vec<f64>, Vec<f64>) {
    assert!(k <= 20, "exhaustive search limited to 20 bits");
    let mem = constraint_length - 1;
    let n_out = generators.len();
    let steps = k + mem;
    assert_eq!(llrs.len(), n_out * steps);
    let mut info0 = vec![Vec::new(); k];
    let mut info1 = vec![Vec::new(); k];
    let mut c0 = vec![Vec::new(); llrs.len()];
    let mut c1 = vec![Vec::new(); llrs.len()];
    for word in 0u32..(1 << k) {
        let u: Vec<u32> = (0..steps)
            .map(|t| if t < k { (word >> t) & 1 } else { 0 })
            .collect();
        let mut cw = Vec::with_capacity(llrs.len());
        for t in 0..steps {
            for g in generators {
                // Tap j of the generator (MSB = j 0) multiplies u[t - j].
                let mut bit = 0;
                for j in 0..constraint_length {
                    if (g >> (constraint_length - 1 - j)) & 1 == 1 && t >= j {
                        bit ^= u[t - j];
                    }
                }
                cw.push(bit);
            }
        }
        let lp: f64 = cw
            .iter()
            .zip(llrs)
            .map(|(&c, &l)| if c == 0 { 0.5 * l } else { -0.5 * l })
            .sum();
        for t in 0..k {
            if u[t] == 0 {
                info0[t].push(lp)
            } else {
                info1[t].push(lp)
            }
        }
        for (i, &c) in cw.iter().enumerate() {
            if c == 0 {
                c0[i].push(lp)
            } else {
                c1[i].push(lp)
            }
        }
    }
    let info = (0..k)
        .map(|t| logsumexp(&info0[t]) - logsumexp(&info1[t]))
        .collect();
    let ext = (0..llrs.len())
        .map(|i| logsumexp(&c0[i]) - logsumexp(&c1[i]) - llrs[i])
        .collect();
    (info, ext)
}

/// Discretized phase posterior.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPosterior {
    pub grid: Vec<f64>,
    /// Normalized marginal per time index.
    pub marginals: Vec<Vec<f64>>,
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    /// Posterior standard deviation below three grid steps.
    pub under_resolved: Vec<bool>,
}

fn wrap(t: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let mut v = (t + std::f64::consts::PI).rem_euclid(tau) - std::f64::consts::PI;
    if v >= std::f64::consts::PI {
        v -= tau;
    }
    v
}

/// Forward-backward on a uniform grid over `[-π, π)` for known symbols,
/// using the exact likelihood `exp{-|y_k - e^{jθ} hᵀ s_k|²/σ²_n}` and a
/// wrapped Gaussian random-walk kernel. `θ_0` is pinned to zero.
pub fn grid_pn_oracle(
    y: &[Complex64],
    x: &[Complex64],
    taps: &[Complex64],
    noise_var: f64,
    pn_var: f64,
    grid_size: usize,
) -> Result<GridPosterior> {
    if x.len() > 8 {
        return Err(Error::DimensionMismatch {
            expected: 8,
            found: x.len(),
        });
    }
    if grid_size < 512 {
        return Err(Error::DimensionMismatch {
            expected: 512,
            found: grid_size,
        });
    }
    let len = x.len() + taps.len() - 1;
    if y.len() != len {
        return Err(Error::DimensionMismatch {
            expected: len,
            found: y.len(),
        });
    }
    let g = grid_size;
    let step = std::f64::consts::TAU / g as f64;
    let grid: Vec<f64> = (0..g)
        .map(|i| -std::f64::consts::PI + i as f64 * step)
        .collect();
    let zero = g / 2;

    let clean: Vec<Complex64> = (0..len)
        .map(|k| {
            let mut acc = Complex64::default();
            for (l, h) in taps.iter().enumerate() {
                if k >= l && k - l < x.len() {
                    acc += h * x[k - l];
                }
            }
            acc
        })
        .collect();
    let lik: Vec<Vec<f64>> = (0..len)
        .map(|k| {
            let ll: Vec<f64> = grid
                .iter()
                .map(|&t| -(y[k] - Complex64::from_polar(1.0, t) * clean[k]).norm_sqr() / noise_var)
                .collect();
            let mx = ll.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            ll.iter().map(|v| (v - mx).exp()).collect()
        })
        .collect();

    // Kernel as a function of circular index offset.
    let kernel: Vec<f64> = (0..g)
        .map(|d| {
            if pn_var == 0.0 {
                return if d == 0 { 1.0 } else { 0.0 };
            }
            let dt = wrap(d as f64 * step);
            (-dt * dt / (2.0 * pn_var)).exp()
        })
        .collect();
    let transition = |p: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; g];
        for (i, &pi) in p.iter().enumerate() {
            if pi == 0.0 {
                continue;
            }
            for (j, o) in out.iter_mut().enumerate() {
                *o += pi * kernel[(j + g - i) % g];
            }
        }
        let s: f64 = out.iter().sum();
        out.iter_mut().for_each(|v| *v /= s);
        out
    };
    let normalize = |mut v: Vec<f64>| -> Vec<f64> {
        let s: f64 = v.iter().sum();
        v.iter_mut().for_each(|x| *x /= s);
        v
    };

    let mut fwd = Vec::with_capacity(len);
    let mut root = vec![0.0; g];
    root[zero] = 1.0;
    fwd.push(root);
    for k in 1..len {
        let n: Vec<f64> = fwd[k - 1]
            .iter()
            .zip(&lik[k - 1])
            .map(|(a, b)| a * b)
            .collect();
        fwd.push(transition(&normalize(n)));
    }
    let mut bwd = vec![vec![1.0 / g as f64; g]; len];
    for k in (0..len - 1).rev() {
        let n: Vec<f64> = bwd[k + 1]
            .iter()
            .zip(&lik[k + 1])
            .map(|(a, b)| a * b)
            .collect();
        // The kernel is symmetric, so the backward step reuses it.
        bwd[k] = transition(&normalize(n));
    }
    let mut marginals = Vec::with_capacity(len);
    let mut mean = Vec::with_capacity(len);
    let mut variance = Vec::with_capacity(len);
    let mut under_resolved = Vec::with_capacity(len);
    for k in 0..len {
        let p = normalize((0..g).map(|i| fwd[k][i] * bwd[k][i] * lik[k][i]).collect());
        let z: Complex64 = p
            .iter()
            .zip(&grid)
            .map(|(w, &t)| Complex64::from_polar(*w, t))
            .sum();
        let mu = z.arg();
        let var: f64 = p
            .iter()
            .zip(&grid)
            .map(|(w, &t)| w * wrap(t - mu).powi(2))
            .sum();
        under_resolved.push(var.sqrt() < 3.0 * step);
        mean.push(mu);
        variance.push(var);
        marginals.push(p);
    }
    Ok(GridPosterior {
        grid,
        marginals,
        mean,
        variance,
        under_resolved,
    })
}
