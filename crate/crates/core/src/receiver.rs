//! Iterative receivers.
//!
//! Every receiver runs the same outer loop:
//!
//! 1. phase beliefs for every time index;
//! 2. observation messages to the channel states, using `⟨e^{-jθ_k}⟩`;
//! 3. equalizer sweep, extrinsic symbol messages, BCJR decoding and EP
//!    refresh of the symbol priors;
//! 4. phase-side update from the new state beliefs.
//!
//! Only steps 1 and 4 differ between [`ReceiverKind`]s.

use std::str::FromStr;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::FrameTruth;
use crate::decoder::{bcjr, hard_decide, Trellis};
use crate::equalizer::{llr_from_extrinsic, probs_from_llr, x_extrinsic, Equalizer};
use crate::error::{Error, Result};
use crate::gaussian::{
    ep_project, CGaussInfo, CGaussMoments, RealGaussian, ScalarCGauss, Tolerances,
};
use crate::obs::{
    circular_factor, msg_to_theta, observation_precision, observation_shift, state_taps,
    tap_product, CircularMoment,
};
use crate::pn;
use crate::tx::{CodeSpec, FrameLayout, Interleaver, PILOT, QPSK};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReceiverKind {
    #[serde(rename = "bpmfep")]
    BpMfEp,
    Eks,
    KnownPn,
}

impl ReceiverKind {
    pub fn name(&self) -> &'static str {
        match self {
            ReceiverKind::BpMfEp => "bpmfep",
            ReceiverKind::Eks => "eks",
            ReceiverKind::KnownPn => "known_pn",
        }
    }
}

impl std::fmt::Display for ReceiverKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ReceiverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "bpmfep" => Ok(ReceiverKind::BpMfEp),
            "eks" => Ok(ReceiverKind::Eks),
            "known_pn" => Ok(ReceiverKind::KnownPn),
            other => Err(Error::config(
                "receiver",
                format!("unknown receiver `{other}`"),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReceiverOptions {
    pub iters: usize,
    /// Equalizer/decoder exchanges per outer iteration.
    pub eq_inner_iters: usize,
    /// Weight of the new message in natural-parameter damping; 1 disables.
    pub damping: f64,
    pub circular: CircularMoment,
    pub tol: Tolerances,
    /// Replace the phase beliefs with point masses at these values.
    pub pin_phase: Option<Vec<f64>>,
}

impl Default for ReceiverOptions {
    fn default() -> Self {
        Self {
            iters: 5,
            eq_inner_iters: 1,
            damping: 1.0,
            circular: CircularMoment::Taylor,
            tol: Tolerances::default(),
            pin_phase: None,
        }
    }
}

/// Everything about a frame the receiver knows in advance.
#[derive(Debug, Clone)]
pub struct FrameSetup {
    pub layout: FrameLayout,
    pub code: CodeSpec,
    pub trellis: Trellis,
    pub interleaver: Interleaver,
    /// Channel taps, `h_0` first.
    pub taps: Vec<Complex64>,
    pub noise_var: f64,
    pub pn_var: f64,
    state_taps: Vec<Complex64>,
    data_positions: Vec<usize>,
    pilot_mask: Vec<bool>,
    n_info: usize,
}

impl FrameSetup {
    pub fn new(
        layout: FrameLayout,
        code: CodeSpec,
        interleaver: Interleaver,
        taps: Vec<Complex64>,
        noise_var: f64,
        pn_var: f64,
    ) -> Result<Self> {
        let n_info = layout.n_info_bits(&code)?;
        if interleaver.len() != layout.n_coded_bits() {
            return Err(Error::DimensionMismatch {
                expected: layout.n_coded_bits(),
                found: interleaver.len(),
            });
        }
        if taps.is_empty() {
            return Err(Error::config("taps", "channel needs at least one tap"));
        }
        if !(noise_var > 0.0) {
            return Err(Error::config("noise_var", "must be positive"));
        }
        Ok(Self {
            trellis: Trellis::new(&code),
            state_taps: state_taps(&taps),
            data_positions: layout.data_positions(),
            pilot_mask: layout.pilot_mask(),
            n_info,
            layout,
            code,
            interleaver,
            taps,
            noise_var,
            pn_var,
        })
    }

    pub fn memory(&self) -> usize {
        self.taps.len()
    }

    /// Number of observations `M + L - 1`.
    pub fn obs_len(&self) -> usize {
        self.layout.total_symbols() + self.memory() - 1
    }

    pub fn n_info(&self) -> usize {
        self.n_info
    }

    pub fn state_taps(&self) -> &[Complex64] {
        &self.state_taps
    }

    /// Initial symbol messages: constellation moments on data, near-deltas
    /// on pilots, exact zeros past the end of the frame.
    fn initial_x_msg(&self, tol: &Tolerances) -> Vec<ScalarCGauss> {
        let m = self.layout.total_symbols();
        (0..self.obs_len())
            .map(|k| {
                if k >= m {
                    ScalarCGauss::new(Complex64::default(), 0.0)
                } else if self.pilot_mask[k] {
                    ScalarCGauss::new(PILOT, tol.pilot_variance)
                } else {
                    ScalarCGauss::new(Complex64::default(), 1.0)
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct IterationDiag {
    pub iteration: usize,
    /// Phase MSE against the truth, when supplied.
    pub pn_mse: Option<f64>,
    pub bit_errors: Option<usize>,
    /// Phase messages dropped for non-positive curvature.
    pub curvature_clamps: usize,
    /// EP divisions with negative precision (previous message kept).
    pub ep_clamps: usize,
    /// Extrinsic symbol divisions with negative precision.
    pub extrinsic_clamps: usize,
    /// Wall time from the start of the receiver to the end of this iteration.
    pub elapsed_us: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    pub iterations: Vec<IterationDiag>,
    /// Indices where the final phase estimate jumps by more than π/2.
    pub phase_jumps: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReceiverOutput {
    pub bits: Vec<u8>,
    pub info_llr: Vec<f64>,
    pub theta_hat: Vec<f64>,
    /// Final phase beliefs.
    pub theta_belief: Vec<RealGaussian>,
    pub diagnostics: Diagnostics,
}

/// Mean squared phase error, no modular reduction.
pub fn pn_mse(theta_hat: &[f64], theta: &[f64]) -> f64 {
    let n = theta.len().min(theta_hat.len());
    if n == 0 {
        return 0.0;
    }
    theta_hat
        .iter()
        .zip(theta)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        / n as f64
}

pub fn bpmfep_receive(
    setup: &FrameSetup,
    y: &[Complex64],
    opts: &ReceiverOptions,
    truth: Option<&FrameTruth>,
) -> Result<ReceiverOutput> {
    run(setup, y, Estimator::MeanField, opts, truth)
}

pub fn eks_receive(
    setup: &FrameSetup,
    y: &[Complex64],
    opts: &ReceiverOptions,
    truth: Option<&FrameTruth>,
) -> Result<ReceiverOutput> {
    run(setup, y, Estimator::Eks, opts, truth)
}

/// Reference receiver with the phase trajectory known exactly.
pub fn known_pn_receive(
    setup: &FrameSetup,
    y: &[Complex64],
    theta: &[f64],
    opts: &ReceiverOptions,
    truth: Option<&FrameTruth>,
) -> Result<ReceiverOutput> {
    run(setup, y, Estimator::Known(theta), opts, truth)
}

/// Dispatches on `kind`; `known_pn` needs the truth record.
pub fn receive(
    kind: ReceiverKind,
    setup: &FrameSetup,
    y: &[Complex64],
    opts: &ReceiverOptions,
    truth: Option<&FrameTruth>,
) -> Result<ReceiverOutput> {
    match kind {
        ReceiverKind::BpMfEp => bpmfep_receive(setup, y, opts, truth),
        ReceiverKind::Eks => eks_receive(setup, y, opts, truth),
        ReceiverKind::KnownPn => {
            let t = truth
                .ok_or_else(|| Error::config("receiver", "known_pn requires the true phase"))?;
            known_pn_receive(setup, y, &t.theta, opts, truth)
        }
    }
}

#[derive(Clone, Copy)]
enum Estimator<'a> {
    MeanField,
    Eks,
    Known(&'a [f64]),
}

fn delta_beliefs(theta: &[f64], tol: &Tolerances) -> Vec<RealGaussian> {
    theta
        .iter()
        .map(|&t| RealGaussian::new(t, tol.delta_precision))
        .collect()
}

fn run(
    setup: &FrameSetup,
    y: &[Complex64],
    est: Estimator<'_>,
    opts: &ReceiverOptions,
    truth: Option<&FrameTruth>,
) -> Result<ReceiverOutput> {
    let start = Instant::now();
    let len = setup.obs_len();
    if y.len() != len {
        return Err(Error::DimensionMismatch {
            expected: len,
            found: y.len(),
        });
    }
    if opts.iters == 0 {
        return Err(Error::config("iters", "must be at least 1"));
    }
    for pinned in [
        opts.pin_phase.as_deref(),
        match est {
            Estimator::Known(t) => Some(t),
            _ => None,
        },
    ]
    .into_iter()
    .flatten()
    {
        if pinned.len() != len {
            return Err(Error::DimensionMismatch {
                expected: len,
                found: pinned.len(),
            });
        }
    }
    let tol = &opts.tol;
    let l = setup.memory();
    let h = setup.state_taps();
    let nv = setup.noise_var;
    let root = RealGaussian::new(0.0, tol.delta_precision);

    let w = observation_precision(h, nv);
    let mut obs: Vec<CGaussInfo> = (0..len)
        .map(|_| CGaussInfo {
            dim: l,
            w: w.clone(),
            b: vec![Complex64::default(); l],
        })
        .collect();
    let mut x_msg = setup.initial_x_msg(tol);
    let mut eq = Equalizer::new(l, len);
    let mut theta_in = vec![RealGaussian::VACUOUS; len];

    let phase_step = |theta_in: &[RealGaussian],
                      beliefs: Option<&[CGaussMoments]>|
     -> Result<Vec<RealGaussian>> {
        let b = match est {
            Estimator::MeanField => pn::smooth(theta_in, setup.pn_var)?.belief,
            Estimator::Eks => eks_smooth(y, h, nv, setup.pn_var, beliefs, root),
            Estimator::Known(t) => delta_beliefs(t, tol),
        };
        Ok(match &opts.pin_phase {
            Some(p) => delta_beliefs(p, tol),
            None => b,
        })
    };

    let mut pn_belief = phase_step(&theta_in, None)?;
    let mut diag = Diagnostics::default();
    let n_data = setup.data_positions.len();
    let mut ext = vec![ScalarCGauss::new(Complex64::default(), 1.0); n_data];
    let mut llr_il = vec![0.0; 2 * n_data];
    let mut bits = Vec::new();
    let mut info_llr = Vec::new();

    for it in 0..opts.iters {
        let mut d = IterationDiag {
            iteration: it + 1,
            ..Default::default()
        };
        for k in 0..len {
            let circ = circular_factor(&pn_belief[k], opts.circular);
            observation_shift(y[k], h, nv, circ, &mut obs[k].b);
        }
        for _ in 0..opts.eq_inner_iters.max(1) {
            eq.sweep(&x_msg, &obs)?;
            for (j, &pos) in setup.data_positions.iter().enumerate() {
                let div = x_extrinsic(&eq.belief()[pos], &x_msg[pos], tol);
                d.extrinsic_clamps += usize::from(div.clamped);
                ext[j] = div.msg;
                let bl = llr_from_extrinsic(&div.msg);
                llr_il[2 * j] = bl[0];
                llr_il[2 * j + 1] = bl[1];
            }
            let coded = setup.interleaver.deinterleave(&llr_il)?;
            let dec = bcjr(&coded, &setup.trellis)?;
            let prior_il = setup.interleaver.interleave(&dec.coded_extrinsic)?;
            for (j, &pos) in setup.data_positions.iter().enumerate() {
                let probs = probs_from_llr([prior_il[2 * j], prior_il[2 * j + 1]]);
                let proj = ep_project(&ext[j], &probs, &QPSK, tol)?;
                if proj.clamped {
                    d.ep_clamps += 1;
                } else {
                    x_msg[pos] = proj.msg.damped(&x_msg[pos], opts.damping);
                }
            }
            bits = hard_decide(&dec.info_llr);
            info_llr = dec.info_llr;
        }

        if let Estimator::MeanField = est {
            for k in 0..len {
                let m = msg_to_theta(
                    y[k],
                    h,
                    nv,
                    &eq.belief()[k].mean,
                    pn_belief[k].mean(),
                    tol.curvature_eps,
                );
                d.curvature_clamps += usize::from(m.is_vacuous());
                theta_in[k] = m.damped(&theta_in[k], opts.damping);
            }
        }
        pn_belief = phase_step(&theta_in, Some(eq.belief()))?;

        if let Some(t) = truth {
            let means: Vec<f64> = pn_belief.iter().map(|b| b.mean()).collect();
            d.pn_mse = Some(pn_mse(&means, &t.theta));
            d.bit_errors = Some(bits.iter().zip(&t.bits).filter(|(a, b)| a != b).count());
        }
        d.elapsed_us = start.elapsed().as_micros() as u64;
        diag.iterations.push(d);
    }

    diag.phase_jumps = pn::phase_jumps(&pn_belief);
    Ok(ReceiverOutput {
        bits,
        info_llr,
        theta_hat: pn_belief.iter().map(|b| b.mean()).collect(),
        theta_belief: pn_belief,
        diagnostics: diag,
    })
}

/// Soft-input extended Kalman smoother on the phase.
///
/// The observation `y_k = e^{jθ} hᵀ s_k + n_k` is linearized at the
/// predicted phase, `e^{jθ} ≈ e^{jθ̂⁻}(1 + j(θ - θ̂⁻))`, with `s_k` replaced
/// by its belief mean and the noise inflated by `hᵀ Σ_k h*`. A
/// Rauch–Tung–Striebel pass follows. Without state beliefs the filter
/// only propagates the prior.
pub fn eks_smooth(
    y: &[Complex64],
    state_taps: &[Complex64],
    noise_var: f64,
    pn_var: f64,
    beliefs: Option<&[CGaussMoments]>,
    root: RealGaussian,
) -> Vec<RealGaussian> {
    let len = y.len();
    let mut pred = Vec::with_capacity(len);
    let mut filt = Vec::with_capacity(len);
    let (mut pm, mut pv) = (root.mean(), root.variance());
    let n = state_taps.len();
    for k in 0..len {
        pred.push((pm, pv));
        let (mut fm, mut fv) = (pm, pv);
        if let Some(b) = beliefs {
            let a = tap_product(state_taps, &b[k].mean);
            let mut spread = 0.0;
            for i in 0..n {
                for j in 0..n {
                    spread += (state_taps[i] * b[k].cov[i * n + j] * state_taps[j].conj()).re;
                }
            }
            let r = noise_var + spread.max(0.0);
            let gain = 2.0 * a.norm_sqr() / r;
            if gain > 0.0 {
                fv = 1.0 / (1.0 / pv + gain);
                let c = Complex64::from_polar(1.0, pm) * a;
                fm = pm + fv * (2.0 / r) * (c.conj() * y[k]).im;
            }
        }
        filt.push((fm, fv));
        pm = fm;
        pv = fv + pn_var;
    }
    let mut out = vec![RealGaussian::VACUOUS; len];
    if len == 0 {
        return out;
    }
    let (mut sm, mut sv) = filt[len - 1];
    out[len - 1] = RealGaussian::from_moments(sm, sv);
    for k in (0..len - 1).rev() {
        let (fm, fv) = filt[k];
        let (pm1, pv1) = pred[k + 1];
        let gain = fv / pv1;
        sm = fm + gain * (sm - pm1);
        sv = fv + gain * gain * (sv - pv1);
        out[k] = RealGaussian::from_moments(sm, sv.max(0.0));
    }
    out
}

/// Time spent per frame, for the complexity comparison.
pub fn time_receiver(
    kind: ReceiverKind,
    setup: &FrameSetup,
    truth: &FrameTruth,
    opts: &ReceiverOptions,
) -> Result<Duration> {
    let t = Instant::now();
    receive(kind, setup, &truth.y, opts, Some(truth))?;
    Ok(t.elapsed())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{noise_var_for_snr_db, real_taps, simulate_frame, ChannelSpec, PROAKIS_C};

    fn setup(n_data: usize, snr_db: f64, pn_var: f64) -> (FrameSetup, ChannelSpec) {
        let layout = FrameLayout::new(n_data, 64, 2).unwrap();
        let code = CodeSpec::default();
        let il = Interleaver::new(layout.n_coded_bits(), 0);
        let taps = real_taps(&PROAKIS_C);
        let nv = noise_var_for_snr_db(&taps, snr_db);
        let spec = ChannelSpec::new(taps.clone(), nv, pn_var).unwrap();
        (
            FrameSetup::new(layout, code, il, taps, nv, pn_var).unwrap(),
            spec,
        )
    }

    #[test]
    fn receiver_names_round_trip() {
        for k in [
            ReceiverKind::BpMfEp,
            ReceiverKind::Eks,
            ReceiverKind::KnownPn,
        ] {
            assert_eq!(k.name().parse::<ReceiverKind>().unwrap(), k);
        }
        assert!("pf".parse::<ReceiverKind>().is_err());
    }

    #[test]
    fn first_iteration_starts_from_vacuous_phase_messages() {
        // One iteration: the phase beliefs entering the equalizer are the
        // prior chain for both estimators (up to rounding: one runs in
        // precision form, the other in moment form).
        let (s, spec) = setup(128, 14.0, 1e-4);
        let f = simulate_frame(&s.layout, &s.code, &s.interleaver, &spec, 5).unwrap();
        let opts = ReceiverOptions {
            iters: 1,
            ..Default::default()
        };
        let a = bpmfep_receive(&s, &f.y, &opts, Some(&f)).unwrap();
        let b = eks_receive(&s, &f.y, &opts, Some(&f)).unwrap();
        for (x, y) in a.info_llr.iter().zip(&b.info_llr) {
            assert!((x - y).abs() <= 1e-9 * (1.0 + x.abs()), "{x} vs {y}");
        }
        let prior = pn::smooth(&vec![RealGaussian::VACUOUS; s.obs_len()], s.pn_var).unwrap();
        let eks_prior = eks_smooth(
            &f.y,
            s.state_taps(),
            s.noise_var,
            s.pn_var,
            None,
            RealGaussian::delta(0.0),
        );
        for (p, e) in prior.belief.iter().zip(&eks_prior) {
            assert_eq!(p.mean(), 0.0);
            assert!((p.variance() - e.variance()).abs() <= 1e-12 * (1.0 + e.variance()));
        }
    }

    #[test]
    fn clean_high_snr_frame_decodes() {
        let (s, spec) = setup(256, 20.0, 1e-4);
        let f = simulate_frame(&s.layout, &s.code, &s.interleaver, &spec, 1).unwrap();
        for kind in [
            ReceiverKind::BpMfEp,
            ReceiverKind::Eks,
            ReceiverKind::KnownPn,
        ] {
            let out = receive(kind, &s, &f.y, &ReceiverOptions::default(), Some(&f)).unwrap();
            let errs = out
                .diagnostics
                .iterations
                .last()
                .unwrap()
                .bit_errors
                .unwrap();
            assert_eq!(errs, 0, "{kind}");
            assert!(
                out.diagnostics.iterations.last().unwrap().pn_mse.unwrap() < 0.01,
                "{kind}"
            );
        }
    }

    #[test]
    fn pinned_phase_overrides_estimator() {
        let (s, spec) = setup(128, 12.0, 1e-4);
        let f = simulate_frame(&s.layout, &s.code, &s.interleaver, &spec, 2).unwrap();
        let opts = ReceiverOptions {
            iters: 3,
            pin_phase: Some(f.theta.clone()),
            ..Default::default()
        };
        let a = bpmfep_receive(&s, &f.y, &opts, Some(&f)).unwrap();
        let b = eks_receive(&s, &f.y, &opts, Some(&f)).unwrap();
        let c = known_pn_receive(
            &s,
            &f.y,
            &f.theta,
            &ReceiverOptions {
                iters: 3,
                ..Default::default()
            },
            Some(&f),
        )
        .unwrap();
        assert_eq!(a.info_llr, b.info_llr);
        assert_eq!(a.info_llr, c.info_llr);
    }

    #[test]
    fn eks_constant_phase_matches_ml_estimate() {
        // σ²_Δ = 0, perfect symbols: the smoother returns one constant phase,
        // the precision-weighted ML phase of all samples.
        let taps = vec![Complex64::new(1.0, 0.0)];
        let theta = 0.2;
        let s: Vec<Complex64> = (0..50).map(|k| QPSK[k % 4]).collect();
        let y: Vec<Complex64> = s
            .iter()
            .map(|x| x * Complex64::from_polar(1.0, theta))
            .collect();
        let beliefs: Vec<CGaussMoments> = s
            .iter()
            .map(|x| CGaussMoments {
                dim: 1,
                mean: vec![*x],
                cov: vec![Complex64::default()],
            })
            .collect();
        let out = eks_smooth(
            &y,
            &taps,
            1e-4,
            0.0,
            Some(&beliefs),
            RealGaussian::from_moments(0.0, 1.0),
        );
        let ml = y
            .iter()
            .zip(&s)
            .map(|(a, b)| a * b.conj())
            .sum::<Complex64>()
            .arg();
        for b in &out {
            assert!((b.mean() - out[0].mean()).abs() < 1e-9);
        }
        assert!((out[0].mean() - ml).abs() < 1e-3);
    }

    #[test]
    fn rejects_inconsistent_input() {
        let (s, _) = setup(128, 12.0, 1e-4);
        let y = vec![Complex64::default(); 3];
        assert!(bpmfep_receive(&s, &y, &ReceiverOptions::default(), None).is_err());
        let y = vec![Complex64::default(); s.obs_len()];
        assert!(bpmfep_receive(
            &s,
            &y,
            &ReceiverOptions {
                iters: 0,
                ..Default::default()
            },
            None
        )
        .is_err());
        assert!(receive(
            ReceiverKind::KnownPn,
            &s,
            &y,
            &ReceiverOptions::default(),
            None
        )
        .is_err());
    }
}
