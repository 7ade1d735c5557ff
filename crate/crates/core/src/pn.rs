//! Gaussian forward/backward smoothing over the Wiener phase chain.
//!
//! `incoming[k]` is the Gaussian message from the observation factor at
//! time `k`. The forward chain starts from a point mass at zero phase (the
//! initial phase is absorbed into the channel estimate); the backward chain
//! starts vacuous.

use crate::error::{Error, Result};
use crate::gaussian::{rg_product, RealGaussian};

#[derive(Debug, Clone, PartialEq)]
pub struct PnEdgeState {
    pub fwd: Vec<RealGaussian>,
    pub bwd: Vec<RealGaussian>,
    pub incoming: Vec<RealGaussian>,
    pub belief: Vec<RealGaussian>,
}

/// Pushes a message through one random-walk step: variance grows by
/// `var_delta`, vacuous stays vacuous.
fn diffuse(m: RealGaussian, var_delta: f64) -> RealGaussian {
    if m.is_vacuous() {
        return RealGaussian::VACUOUS;
    }
    let v = m.variance() + var_delta;
    if v > 0.0 {
        RealGaussian::new(m.mean(), 1.0 / v)
    } else {
        m
    }
}

pub fn forward_pass(incoming: &[RealGaussian], var_delta: f64) -> Vec<RealGaussian> {
    forward_pass_from(RealGaussian::delta(0.0), incoming, var_delta)
}

pub fn forward_pass_from(
    root: RealGaussian,
    incoming: &[RealGaussian],
    var_delta: f64,
) -> Vec<RealGaussian> {
    let mut fwd = Vec::with_capacity(incoming.len());
    if incoming.is_empty() {
        return fwd;
    }
    fwd.push(root);
    for k in 1..incoming.len() {
        let n = rg_product(&[fwd[k - 1], incoming[k - 1]]);
        fwd.push(diffuse(n, var_delta));
    }
    fwd
}

pub fn backward_pass(incoming: &[RealGaussian], var_delta: f64) -> Vec<RealGaussian> {
    let len = incoming.len();
    let mut bwd = vec![RealGaussian::VACUOUS; len];
    for k in (0..len.saturating_sub(1)).rev() {
        let n = rg_product(&[bwd[k + 1], incoming[k + 1]]);
        bwd[k] = diffuse(n, var_delta);
    }
    bwd
}

pub fn compute_beliefs(
    fwd: &[RealGaussian],
    bwd: &[RealGaussian],
    incoming: &[RealGaussian],
) -> Result<Vec<RealGaussian>> {
    if fwd.len() != incoming.len() || bwd.len() != incoming.len() {
        return Err(Error::DimensionMismatch {
            expected: incoming.len(),
            found: fwd.len().min(bwd.len()),
        });
    }
    fwd.iter()
        .zip(bwd)
        .zip(incoming)
        .enumerate()
        .map(|(k, ((f, b), i))| {
            let m = rg_product(&[*f, *b, *i]);
            if m.is_vacuous() {
                Err(Error::AllVacuous(k))
            } else {
                Ok(m)
            }
        })
        .collect()
}

/// One full smoothing sweep.
pub fn smooth(incoming: &[RealGaussian], var_delta: f64) -> Result<PnEdgeState> {
    let fwd = forward_pass(incoming, var_delta);
    let bwd = backward_pass(incoming, var_delta);
    let belief = compute_beliefs(&fwd, &bwd, incoming)?;
    Ok(PnEdgeState {
        fwd,
        bwd,
        incoming: incoming.to_vec(),
        belief,
    })
}

/// Indices where consecutive belief means jump by more than π/2, a sign of
/// a phase slip that the real-line model cannot represent.
pub fn phase_jumps(belief: &[RealGaussian]) -> Vec<usize> {
    belief
        .windows(2)
        .enumerate()
        .filter(|(_, w)| (w[1].mean() - w[0].mean()).abs() > std::f64::consts::FRAC_PI_2)
        .map(|(k, _)| k + 1)
        .collect()
}
