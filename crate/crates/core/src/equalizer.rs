//! Gaussian forward/backward equalizer over the channel shift-register
//! state `s_k = G s_{k-1} + e x_k`.
//!
//! Forward messages are kept in moment form (the early states are exactly
//! known zeros, so their covariance is singular); backward messages are
//! kept in information form (they start vacuous). Beliefs combine the two
//! with [`absorb_info`], which never inverts either representation.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gaussian::{
    absorb_info, AbsorbScratch, CGaussInfo, CGaussMoments, Division, ScalarCGauss, Tolerances,
};

const SQRT8: f64 = 2.0 * std::f64::consts::SQRT_2;

/// Shift-register model for a channel of memory `L`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateModel {
    dim: usize,
}

impl StateModel {
    pub fn new(dim: usize) -> Self {
        assert!(dim >= 1, "state dimension must be positive");
        Self { dim }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Dense `G = [0 I; 0 0ᵀ]`, row-major.
    pub fn shift_matrix(&self) -> Vec<Complex64> {
        let n = self.dim;
        let mut g = vec![Complex64::default(); n * n];
        for i in 0..n.saturating_sub(1) {
            g[i * n + i + 1] = Complex64::new(1.0, 0.0);
        }
        g
    }

    /// `e = [0 … 0 1]ᵀ`.
    pub fn selector(&self) -> Vec<Complex64> {
        let mut e = vec![Complex64::default(); self.dim];
        e[self.dim - 1] = Complex64::new(1.0, 0.0);
        e
    }
}

/// All messages on the state chain for one equalizer run.
#[derive(Debug, Clone, PartialEq)]
pub struct EqEdgeState {
    pub fwd: Vec<CGaussMoments>,
    pub bwd: Vec<CGaussInfo>,
    pub obs: Vec<CGaussInfo>,
    pub x_msg: Vec<ScalarCGauss>,
    pub belief: Vec<CGaussMoments>,
}

/// Reusable equalizer with preallocated message storage.
#[derive(Debug, Clone)]
pub struct Equalizer {
    dim: usize,
    fwd: Vec<CGaussMoments>,
    bwd: Vec<CGaussInfo>,
    belief: Vec<CGaussMoments>,
    filt: CGaussMoments,
    sum: CGaussInfo,
    scratch: AbsorbScratch,
}

impl Equalizer {
    pub fn new(dim: usize, len: usize) -> Self {
        Self {
            dim,
            fwd: vec![CGaussMoments::zeros(dim); len],
            bwd: vec![CGaussInfo::vacuous(dim); len],
            belief: vec![CGaussMoments::zeros(dim); len],
            filt: CGaussMoments::zeros(dim),
            sum: CGaussInfo::vacuous(dim),
            scratch: AbsorbScratch::new(dim),
        }
    }

    pub fn len(&self) -> usize {
        self.fwd.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fwd.is_empty()
    }

    pub fn fwd(&self) -> &[CGaussMoments] {
        &self.fwd
    }

    pub fn bwd(&self) -> &[CGaussInfo] {
        &self.bwd
    }

    pub fn belief(&self) -> &[CGaussMoments] {
        &self.belief
    }

    fn check(&self, x_msg: &[ScalarCGauss], obs: &[CGaussInfo]) -> Result<()> {
        for len in [x_msg.len(), obs.len()] {
            if len != self.len() {
                return Err(Error::DimensionMismatch {
                    expected: self.len(),
                    found: len,
                });
            }
        }
        if let Some(o) = obs.iter().find(|o| o.dim != self.dim) {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: o.dim,
            });
        }
        Ok(())
    }

    /// Forward, backward and belief passes.
    pub fn sweep(&mut self, x_msg: &[ScalarCGauss], obs: &[CGaussInfo]) -> Result<()> {
        self.forward(x_msg, obs)?;
        self.backward(x_msg, obs)?;
        self.beliefs(obs)
    }

    pub fn forward(&mut self, x_msg: &[ScalarCGauss], obs: &[CGaussInfo]) -> Result<()> {
        self.check(x_msg, obs)?;
        let n = self.dim;
        if self.is_empty() {
            return Ok(());
        }
        // s_{-1} = 0, so s_0 = e x_0.
        self.filt.mean.fill(Complex64::default());
        self.filt.cov.fill(Complex64::default());
        predict(&self.filt, &x_msg[0], &mut self.fwd[0]);
        for k in 1..self.len() {
            let prev = &self.fwd[k - 1];
            absorb_info(
                &prev.mean,
                &prev.cov,
                &obs[k - 1].w,
                &obs[k - 1].b,
                n,
                &mut self.filt.mean,
                &mut self.filt.cov,
                &mut self.scratch,
            )?;
            predict(&self.filt, &x_msg[k], &mut self.fwd[k]);
        }
        Ok(())
    }

    pub fn backward(&mut self, x_msg: &[ScalarCGauss], obs: &[CGaussInfo]) -> Result<()> {
        self.check(x_msg, obs)?;
        let n = self.dim;
        let len = self.len();
        if len == 0 {
            return Ok(());
        }
        let last = n - 1;
        self.bwd[len - 1].w.fill(Complex64::default());
        self.bwd[len - 1].b.fill(Complex64::default());
        for k in (0..len - 1).rev() {
            let (head, tail) = self.bwd.split_at_mut(k + 1);
            let next = &tail[0];
            let q = &mut self.sum;
            for i in 0..n * n {
                q.w[i] = next.w[i] + obs[k + 1].w[i];
            }
            for i in 0..n {
                q.b[i] = next.b[i] + obs[k + 1].b[i];
            }
            // Integrate out x_{k+1} ~ CN(m, v): rank-1 downdate along e.
            let v = x_msg[k + 1].variance;
            let m = x_msg[k + 1].mean;
            let qll = q.w[last * n + last].re;
            let g = v / (1.0 + v * qll);
            let ql = q.b[last];
            if g != 0.0 {
                for i in 0..n {
                    let qie = q.w[i * n + last];
                    for j in 0..n {
                        let qej = q.w[last * n + j];
                        q.w[i * n + j] -= qie * qej * g;
                    }
                    q.b[i] -= qie * ql * g;
                }
            }
            // b̃ = q̃ - Q̃ e m, then shift through G.
            let out = &mut head[k];
            for i in 0..n {
                out.b[i] = Complex64::default();
                for j in 0..n {
                    out.w[i * n + j] = Complex64::default();
                }
            }
            for i in 1..n {
                out.b[i] = q.b[i - 1] - q.w[(i - 1) * n + last] * m;
                for j in 1..n {
                    out.w[i * n + j] = q.w[(i - 1) * n + j - 1];
                }
            }
        }
        Ok(())
    }

    pub fn beliefs(&mut self, obs: &[CGaussInfo]) -> Result<()> {
        let n = self.dim;
        for k in 0..self.len() {
            for i in 0..n * n {
                self.sum.w[i] = obs[k].w[i] + self.bwd[k].w[i];
            }
            for i in 0..n {
                self.sum.b[i] = obs[k].b[i] + self.bwd[k].b[i];
            }
            let f = &self.fwd[k];
            let out = &mut self.belief[k];
            absorb_info(
                &f.mean,
                &f.cov,
                &self.sum.w,
                &self.sum.b,
                n,
                &mut out.mean,
                &mut out.cov,
                &mut self.scratch,
            )?;
        }
        Ok(())
    }

    pub fn edge_state(&self, x_msg: &[ScalarCGauss], obs: &[CGaussInfo]) -> EqEdgeState {
        EqEdgeState {
            fwd: self.fwd.clone(),
            bwd: self.bwd.clone(),
            obs: obs.to_vec(),
            x_msg: x_msg.to_vec(),
            belief: self.belief.clone(),
        }
    }
}

/// `G·filt + e·x`: shift the filtered state and append the new symbol.
fn predict(filt: &CGaussMoments, x: &ScalarCGauss, out: &mut CGaussMoments) {
    let n = filt.dim;
    let last = n - 1;
    for i in 0..last {
        out.mean[i] = filt.mean[i + 1];
        for j in 0..last {
            out.cov[i * n + j] = filt.cov[(i + 1) * n + j + 1];
        }
        out.cov[i * n + last] = Complex64::default();
        out.cov[last * n + i] = Complex64::default();
    }
    out.mean[last] = x.mean;
    out.cov[last * n + last] = Complex64::new(x.variance, 0.0);
}

pub fn eq_forward(x_msg: &[ScalarCGauss], obs: &[CGaussInfo]) -> Result<Vec<CGaussMoments>> {
    let dim = obs.first().map_or(1, |o| o.dim);
    let mut eq = Equalizer::new(dim, obs.len());
    eq.forward(x_msg, obs)?;
    Ok(eq.fwd)
}

pub fn eq_backward(x_msg: &[ScalarCGauss], obs: &[CGaussInfo]) -> Result<Vec<CGaussInfo>> {
    let dim = obs.first().map_or(1, |o| o.dim);
    let mut eq = Equalizer::new(dim, obs.len());
    eq.backward(x_msg, obs)?;
    Ok(eq.bwd)
}

pub fn state_beliefs(
    fwd: &[CGaussMoments],
    obs: &[CGaussInfo],
    bwd: &[CGaussInfo],
) -> Result<Vec<CGaussMoments>> {
    fwd.iter()
        .zip(obs)
        .zip(bwd)
        .map(|((f, o), b)| {
            let both = crate::gaussian::cg_combine(&[o.clone(), b.clone()])?;
            f.absorb(&both)
        })
        .collect()
}

/// Belief on `x_k` (last state coordinate) divided by the symbol message.
pub fn x_extrinsic(belief: &CGaussMoments, x_msg: &ScalarCGauss, tol: &Tolerances) -> Division {
    belief.marginal(belief.dim - 1).divide(x_msg, tol)
}

/// Gray QPSK bit LLRs `log p(b=0)/p(b=1)` from a Gaussian symbol message.
pub fn llr_from_extrinsic(ext: &ScalarCGauss) -> [f64; 2] {
    [
        SQRT8 * ext.mean.re / ext.variance,
        SQRT8 * ext.mean.im / ext.variance,
    ]
}

fn bit_probs(llr: f64) -> [f64; 2] {
    // p0 = 1/(1+e^{-L}), evaluated without overflow.
    if llr >= 0.0 {
        let e = (-llr).exp();
        [1.0 / (1.0 + e), e / (1.0 + e)]
    } else {
        let e = llr.exp();
        [e / (1.0 + e), 1.0 / (1.0 + e)]
    }
}

/// Symbol probabilities (indexed like [`crate::tx::QPSK`]) from two
/// independent bit LLRs.
pub fn probs_from_llr(llrs: [f64; 2]) -> [f64; 4] {
    let p0 = bit_probs(llrs[0]);
    let p1 = bit_probs(llrs[1]);
    [p0[0] * p1[0], p0[0] * p1[1], p0[1] * p1[0], p0[1] * p1[1]]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::ep_project;
    use crate::oracles::dense_state_oracle;
    use crate::tx::QPSK;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sg(m: Complex64, v: f64) -> ScalarCGauss {
        ScalarCGauss::new(m, v)
    }

    #[test]
    fn shift_model_shape() {
        let m = StateModel::new(3);
        let g = m.shift_matrix();
        // G³ = 0
        let mut g2 = vec![Complex64::default(); 9];
        let mut g3 = vec![Complex64::default(); 9];
        crate::linalg::matmul(&g, &g, &mut g2, 3);
        crate::linalg::matmul(&g2, &g, &mut g3, 3);
        assert!(g3.iter().all(|v| v.norm() == 0.0));
        assert_eq!(m.selector().iter().map(|v| v.norm_sqr()).sum::<f64>(), 1.0);
    }

    #[test]
    fn memoryless_forward_is_symbol_prior() {
        let x: Vec<ScalarCGauss> = (0..5)
            .map(|k| sg(c(k as f64, 0.0), 0.5 + k as f64))
            .collect();
        let obs = vec![CGaussInfo::new(1, vec![c(2.0, 0.0)], vec![c(1.0, 0.0)]).unwrap(); 5];
        let f = eq_forward(&x, &obs).unwrap();
        for (k, m) in f.iter().enumerate() {
            assert_eq!(m.mean[0], x[k].mean);
            assert_eq!(m.cov[0].re, x[k].variance);
        }
        let b = eq_backward(&x, &obs).unwrap();
        assert!(b.iter().all(|m| m.is_vacuous()));
        // Belief = obs × prior in one dimension.
        let bel = state_beliefs(&f, &obs, &b).unwrap();
        let p = 2.0 + 1.0 / x[2].variance;
        assert!((bel[2].cov[0].re - 1.0 / p).abs() < 1e-14);
        assert!((bel[2].mean[0] - (c(1.0, 0.0) + x[2].mean / x[2].variance) / p).norm() < 1e-14);
    }

    #[test]
    fn two_tap_forward_without_observations() {
        let x = vec![sg(c(0.0, 0.0), 1.0); 4];
        let obs = vec![CGaussInfo::vacuous(2); 4];
        let f = eq_forward(&x, &obs).unwrap();
        assert_eq!(
            f[0].cov,
            vec![c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]
        );
        for m in &f[1..] {
            assert_eq!(
                m.cov,
                vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]
            );
        }
    }

    #[test]
    fn pilot_makes_last_coordinate_a_delta() {
        let mut x = vec![sg(c(0.0, 0.0), 1.0); 4];
        x[2] = sg(QPSK[0], 1e-12);
        let obs = vec![CGaussInfo::vacuous(3); 4];
        let f = eq_forward(&x, &obs).unwrap();
        assert_eq!(f[2].mean[2], QPSK[0]);
        assert_eq!(f[2].cov[8].re, 1e-12);
    }

    #[test]
    fn backward_boundary_is_vacuous() {
        let x = vec![sg(c(0.0, 0.0), 1.0); 6];
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let obs: Vec<CGaussInfo> = (0..6).map(|_| random_obs(&mut rng, 3)).collect();
        let b = eq_backward(&x, &obs).unwrap();
        assert!(b[5].is_vacuous());
        assert!(!b[4].is_vacuous());
    }

    fn random_obs(rng: &mut ChaCha8Rng, n: usize) -> CGaussInfo {
        let h: Vec<Complex64> = (0..n)
            .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let nv = rng.random_range(0.1..1.0);
        let y = c(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let mut w = vec![Complex64::default(); n * n];
        for i in 0..n {
            for j in 0..n {
                w[i * n + j] = h[i].conj() * h[j] / nv;
            }
        }
        let b = h.iter().map(|v| v.conj() * y / nv).collect();
        CGaussInfo::new(n, w, b).unwrap()
    }

    fn random_instance(
        rng: &mut ChaCha8Rng,
        m: usize,
        l: usize,
    ) -> (Vec<ScalarCGauss>, Vec<CGaussInfo>) {
        let mut x: Vec<ScalarCGauss> = (0..m)
            .map(|_| {
                sg(
                    c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                    rng.random_range(0.05..2.0),
                )
            })
            .collect();
        x.extend(std::iter::repeat_n(sg(c(0.0, 0.0), 0.0), l - 1));
        let obs = (0..m + l - 1).map(|_| random_obs(rng, l)).collect();
        (x, obs)
    }

    #[test]
    fn toy_chains_match_dense_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for (m, l) in [(3, 2), (4, 2), (6, 3), (5, 1)] {
            let (x, obs) = random_instance(&mut rng, m, l);
            let mut eq = Equalizer::new(l, x.len());
            eq.sweep(&x, &obs).unwrap();
            let oracle = dense_state_oracle(&x[..m], &obs, l).unwrap();
            for (b, o) in eq.belief().iter().zip(&oracle) {
                for i in 0..l {
                    assert!((b.mean[i] - o.mean[i]).norm() < 1e-10, "M={m} L={l}");
                }
                for i in 0..l * l {
                    assert!((b.cov[i] - o.cov[i]).norm() < 1e-10);
                }
            }
            // Free-function path agrees with the reusable equalizer.
            let f = eq_forward(&x, &obs).unwrap();
            let bw = eq_backward(&x, &obs).unwrap();
            let bel = state_beliefs(&f, &obs, &bw).unwrap();
            assert_eq!(bel[1].mean.len(), l);
            for (a, b) in bel.iter().zip(eq.belief()) {
                for i in 0..l {
                    assert!((a.mean[i] - b.mean[i]).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn extrinsic_examples() {
        let tol = Tolerances::default();
        let mut belief = CGaussMoments::zeros(2);
        belief.mean[1] = c(0.7, 0.0);
        belief.cov[3] = c(0.1, 0.0);
        let e = x_extrinsic(&belief, &sg(c(0.0, 0.0), 1.0), &tol);
        assert!((e.msg.variance - 1.0 / 9.0).abs() < 1e-14);
        assert!((e.msg.mean.re - 0.7 / 0.1 / 9.0).abs() < 1e-14);
        let same = x_extrinsic(&belief, &sg(c(0.7, 0.0), 0.1), &tol);
        assert!(same.msg.is_vacuous(&tol));
    }

    #[test]
    fn llr_and_probability_bridges() {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let l = llr_from_extrinsic(&sg(c(r, r), 1.0));
        assert!((l[0] - 2.0).abs() < 1e-14 && (l[1] - 2.0).abs() < 1e-14);
        assert_eq!(llr_from_extrinsic(&sg(c(0.0, 0.0), 0.3)), [0.0, 0.0]);
        assert_eq!(
            probs_from_llr([f64::INFINITY, f64::INFINITY]),
            [1.0, 0.0, 0.0, 0.0]
        );
        let p = probs_from_llr([0.0, 0.0]);
        assert!(p.iter().all(|&v| (v - 0.25).abs() < 1e-15));
        let p = probs_from_llr([-800.0, 3.0]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ep_fixed_point_is_idempotent() {
        // Extrinsic already at the constellation moments with flat priors:
        // projection returns vacuous-equivalent (no new information).
        let tol = Tolerances::default();
        let ext = sg(c(0.0, 0.0), 1e12);
        let p = ep_project(&ext, &probs_from_llr([0.0, 0.0]), &QPSK, &tol).unwrap();
        assert!(p.msg.mean.norm() < 1e-6);
        assert!((p.msg.variance - 1.0).abs() < 1e-6);
        let again = ep_project(&ext, &probs_from_llr([0.0, 0.0]), &QPSK, &tol).unwrap();
        assert_eq!(p, again);
    }

    proptest! {
        #[test]
        fn random_chains_match_dense_oracle(seed in 0u64..10_000, m in 2usize..20, l in 1usize..4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (x, obs) = random_instance(&mut rng, m, l);
            let mut eq = Equalizer::new(l, x.len());
            eq.sweep(&x, &obs).unwrap();
            let oracle = dense_state_oracle(&x[..m], &obs, l).unwrap();
            for (b, o) in eq.belief().iter().zip(&oracle) {
                for i in 0..l {
                    prop_assert!((b.mean[i] - o.mean[i]).norm() < 1e-8);
                }
            }
        }
    }
}
