//! Oracle cross-checks of the message-passing kernels on random instances.
//! Used by the `selftest` subcommand and by the test suites.

use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::channel::{convolve, real_taps, rotate, PROAKIS_C};
use crate::decoder::{bcjr, Trellis};
use crate::equalizer::Equalizer;
use crate::error::Result;
use crate::gaussian::{CGaussInfo, RealGaussian, ScalarCGauss};
use crate::obs::{
    msg_from_coefficient, msg_to_state, msg_to_theta, state_taps, tikhonov_oracle, CircularMoment,
};
use crate::oracles::{dense_chain_oracle, dense_state_oracle, exhaustive_map, grid_pn_oracle};
use crate::pn;
use crate::tx::{CodeSpec, QPSK};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    /// Worst observed error for each tracked quantity.
    pub errors: Vec<(&'static str, f64, f64)>,
    pub elapsed_s: f64,
}

impl std::fmt::Display for Check {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name
        )?;
        for (q, worst, tol) in &self.errors {
            write!(f, " {q}={worst:.3e} (tol {tol:.0e})")?;
        }
        write!(f, " [{:.2}s]", self.elapsed_s)
    }
}

fn finish(name: &'static str, errors: Vec<(&'static str, f64, f64)>, start: Instant) -> Check {
    Check {
        name,
        passed: errors.iter().all(|(_, e, tol)| e.is_finite() && e < tol),
        errors,
        elapsed_s: start.elapsed().as_secs_f64(),
    }
}

fn cn(rng: &mut ChaCha8Rng, var: f64) -> Complex64 {
    let s = (var / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re * s, im * s)
}

/// Phase smoother vs dense chain solve on random Gaussian incoming messages.
pub fn check_chain(instances: usize, len: usize, pn_var: f64, seed: u64) -> Result<Check> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut mean_err, mut var_err) = (0.0f64, 0.0f64);
    for _ in 0..instances {
        let incoming: Vec<RealGaussian> = (0..len)
            .map(|_| {
                let m: f64 = StandardNormal.sample(&mut rng);
                RealGaussian::from_moments(0.1 * m, rng.random_range(0.01..1.0))
            })
            .collect();
        let st = pn::smooth(&incoming, pn_var)?;
        let oracle = dense_chain_oracle(RealGaussian::delta(0.0), &incoming, pn_var)?;
        for (b, (m, v)) in st.belief.iter().zip(oracle) {
            mean_err = mean_err.max((b.mean() - m).abs());
            var_err = var_err.max((b.variance() - v).abs() / v);
        }
    }
    Ok(finish(
        "gaussian chain",
        vec![("mean", mean_err, 1e-8), ("rel_var", var_err, 1e-6)],
        start,
    ))
}

/// Equalizer beliefs vs a dense joint solve over all symbols.
pub fn check_equalizer(
    instances: usize,
    max_len: usize,
    max_memory: usize,
    seed: u64,
) -> Result<Check> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mean_err = 0.0f64;
    let mut cov_err = 0.0f64;
    for _ in 0..instances {
        let m = rng.random_range(2..=max_len);
        let l = rng.random_range(1..=max_memory);
        let k_len = m + l - 1;
        let taps: Vec<Complex64> = (0..l).map(|_| cn(&mut rng, 1.0)).collect();
        let h = state_taps(&taps);
        let nv = rng.random_range(0.05..1.0);
        let prior: Vec<ScalarCGauss> = (0..m)
            .map(|_| ScalarCGauss::new(cn(&mut rng, 1.0), rng.random_range(0.1..2.0)))
            .collect();
        let obs: Vec<CGaussInfo> = (0..k_len)
            .map(|_| {
                let theta = RealGaussian::from_moments(
                    rng.random_range(-0.5..0.5),
                    rng.random_range(0.0..0.1),
                );
                msg_to_state(cn(&mut rng, 2.0), &h, nv, &theta, CircularMoment::Taylor)
            })
            .collect();
        let mut x_msg = prior.clone();
        x_msg.resize(k_len, ScalarCGauss::new(Complex64::default(), 0.0));
        let mut eq = Equalizer::new(l, k_len);
        eq.sweep(&x_msg, &obs)?;
        let oracle = dense_state_oracle(&prior, &obs, l)?;
        for (b, o) in eq.belief().iter().zip(&oracle) {
            for (a, c) in b.mean.iter().zip(&o.mean) {
                mean_err = mean_err.max((a - c).norm());
            }
            for (a, c) in b.cov.iter().zip(&o.cov) {
                cov_err = cov_err.max((a - c).norm());
            }
        }
    }
    Ok(finish(
        "equalizer",
        vec![("mean", mean_err, 1e-8), ("cov", cov_err, 1e-8)],
        start,
    ))
}

/// BCJR vs exhaustive enumeration of all codewords.
pub fn check_bcjr(instances: usize, n_info: usize, seed: u64) -> Result<Check> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let code = CodeSpec::default();
    let trellis = Trellis::new(&code);
    let n_coded = code.coded_len(n_info);
    let (mut info_err, mut ext_err) = (0.0f64, 0.0f64);
    for _ in 0..instances {
        let llr: Vec<f64> = (0..n_coded)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                3.0 * z
            })
            .collect();
        let out = bcjr(&llr, &trellis)?;
        let (info, ext) = exhaustive_map(&llr, n_info, &code.generators, code.constraint_length);
        for (a, b) in out.info_llr.iter().zip(&info) {
            info_err = info_err.max((a - b).abs());
        }
        for (a, b) in out.coded_extrinsic.iter().zip(&ext) {
            ext_err = ext_err.max((a - b).abs());
        }
    }
    Ok(finish(
        "bcjr",
        vec![("info_llr", info_err, 1e-6), ("extrinsic", ext_err, 1e-6)],
        start,
    ))
}

/// Taylor phase message expanded at the mode vs quadrature moments of the
/// exact circular message.
pub fn check_taylor(instances: usize, seed: u64) -> Result<Check> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut mean_err, mut var_err) = (0.0f64, 0.0f64);
    for _ in 0..instances {
        let r = Complex64::from_polar(
            rng.random_range(20.0..=200.0),
            rng.random_range(-std::f64::consts::PI..std::f64::consts::PI),
        );
        let mode = -r.arg();
        let msg = msg_from_coefficient(r, mode, 1e-9);
        let (m, v) = tikhonov_oracle(r, 20_001);
        mean_err = mean_err.max((msg.mean() - m).abs());
        var_err = var_err.max((msg.variance() - v).abs() / v);
    }
    Ok(finish(
        "taylor vs tikhonov",
        vec![("mean", mean_err, 0.02), ("rel_var", var_err, 0.1)],
        start,
    ))
}

/// Mean-field phase beliefs with known symbols vs the grid posterior on a
/// tiny frame at 20 dB.
pub fn check_grid_posterior(instances: usize, seed: u64) -> Result<Check> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let taps = real_taps(&PROAKIS_C[1..4]);
    let h = state_taps(&taps);
    let energy: f64 = taps.iter().map(|t| t.norm_sqr()).sum();
    let nv = energy / 100.0;
    let pn_var: f64 = 1e-3;
    let (mut mean_err, mut var_err) = (0.0f64, 0.0f64);
    for _ in 0..instances {
        let m = 8;
        let x: Vec<Complex64> = (0..m).map(|_| QPSK[rng.random_range(0..4)]).collect();
        let k_len = m + taps.len() - 1;
        let mut theta = vec![0.0; k_len];
        for k in 1..k_len {
            let d: f64 = StandardNormal.sample(&mut rng);
            theta[k] = theta[k - 1] + pn_var.sqrt() * d;
        }
        let mut y = rotate(&convolve(&x, &taps), &theta);
        for v in y.iter_mut() {
            *v += cn(&mut rng, nv);
        }
        let oracle = grid_pn_oracle(&y, &x, &taps, nv, pn_var, 2048)?;
        let states: Vec<Vec<Complex64>> = (0..k_len)
            .map(|k| {
                (0..taps.len())
                    .map(|i| {
                        let idx = k as isize - (taps.len() as isize - 1) + i as isize;
                        if idx < 0 || idx as usize >= m {
                            Complex64::default()
                        } else {
                            x[idx as usize]
                        }
                    })
                    .collect()
            })
            .collect();
        let mut incoming = vec![RealGaussian::VACUOUS; k_len];
        let mut belief = pn::smooth(&incoming, pn_var)?.belief;
        for _ in 0..10 {
            for k in 0..k_len {
                incoming[k] = msg_to_theta(y[k], &h, nv, &states[k], belief[k].mean(), 1e-9);
            }
            belief = pn::smooth(&incoming, pn_var)?.belief;
        }
        for k in 1..k_len {
            mean_err = mean_err.max((belief[k].mean() - oracle.mean[k]).abs());
            var_err =
                var_err.max((belief[k].variance() - oracle.variance[k]).abs() / oracle.variance[k]);
        }
    }
    Ok(finish(
        "grid phase posterior",
        vec![("mean", mean_err, 0.03), ("rel_var", var_err, 0.25)],
        start,
    ))
}

/// Quick versions of every check.
pub fn run_all() -> Result<Vec<Check>> {
    Ok(vec![
        check_chain(10, 64, 1e-4, 1)?,
        check_equalizer(10, 32, 3, 2)?,
        check_bcjr(20, 8, 3)?,
        check_taylor(50, 4)?,
        check_grid_posterior(3, 5)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quick_suite_passes() {
        for c in run_all().unwrap() {
            assert!(c.passed, "{c}");
        }
    }
}
