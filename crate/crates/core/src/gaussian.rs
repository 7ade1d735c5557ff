//! Gaussian messages: scalar real messages on phase variables, complex
//! information-form messages on channel states, scalar complex messages on
//! symbols, and the EP projection of a discrete symbol posterior.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg;

/// Numerical thresholds shared by the message-passing modules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Precision below which a divided message is treated as vacuous.
    pub vacuous_precision: f64,
    /// Slack allowed when a division subtracts a larger precision.
    pub divide_slack: f64,
    /// Precision used to represent a point mass on the real line.
    pub delta_precision: f64,
    /// Variance floor for EP symbol messages and discrete beliefs.
    pub ep_variance_floor: f64,
    /// Variance used for a vacuous scalar complex message.
    pub vacuous_variance: f64,
    /// Variance of the symbol message at a pilot position.
    pub pilot_variance: f64,
    /// Curvature below which the Taylor phase message is dropped.
    pub curvature_eps: f64,
    /// Condition-number estimate above which a precision matrix is singular.
    pub singular_condition: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            vacuous_precision: 1e-12,
            divide_slack: 1e-9,
            delta_precision: 1e12,
            ep_variance_floor: 1e-8,
            vacuous_variance: 1e12,
            pilot_variance: 1e-12,
            curvature_eps: 1e-9,
            singular_condition: 1e12,
        }
    }
}

/// Real scalar Gaussian in precision form. Zero precision is the vacuous
/// (flat) message; the mean is then meaningless and kept at zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealGaussian {
    mean: f64,
    precision: f64,
}

impl RealGaussian {
    pub const VACUOUS: RealGaussian = RealGaussian {
        mean: 0.0,
        precision: 0.0,
    };

    pub fn new(mean: f64, precision: f64) -> Self {
        debug_assert!(precision >= 0.0, "negative precision {precision}");
        if precision > 0.0 {
            Self { mean, precision }
        } else {
            Self::VACUOUS
        }
    }

    /// Builds from mean and variance. A zero variance maps to the capped
    /// delta precision, an infinite one to the vacuous message.
    pub fn from_moments(mean: f64, variance: f64) -> Self {
        Self::from_moments_capped(mean, variance, Tolerances::default().delta_precision)
    }

    pub fn from_moments_capped(mean: f64, variance: f64, cap: f64) -> Self {
        if variance.is_infinite() {
            return Self::VACUOUS;
        }
        let precision = if variance > 0.0 {
            (1.0 / variance).min(cap)
        } else {
            cap
        };
        Self::new(mean, precision)
    }

    /// Point mass at `mean`, represented with the default delta precision.
    pub fn delta(mean: f64) -> Self {
        Self::new(mean, Tolerances::default().delta_precision)
    }

    /// Builds from precision and precision-weighted mean.
    pub fn from_natural(precision: f64, precision_mean: f64) -> Self {
        if precision > 0.0 {
            Self::new(precision_mean / precision, precision)
        } else {
            Self::VACUOUS
        }
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn precision(&self) -> f64 {
        self.precision
    }

    pub fn precision_mean(&self) -> f64 {
        self.precision * self.mean
    }

    pub fn variance(&self) -> f64 {
        if self.precision > 0.0 {
            1.0 / self.precision
        } else {
            f64::INFINITY
        }
    }

    pub fn is_vacuous(&self) -> bool {
        self.precision == 0.0
    }

    pub fn product(&self, other: &RealGaussian) -> RealGaussian {
        rg_product(&[*self, *other])
    }

    /// Convex combination of natural parameters; `weight` applies to `self`.
    pub fn damped(&self, previous: &RealGaussian, weight: f64) -> RealGaussian {
        if weight >= 1.0 {
            return *self;
        }
        let p = weight * self.precision + (1.0 - weight) * previous.precision;
        let pm = weight * self.precision_mean() + (1.0 - weight) * previous.precision_mean();
        RealGaussian::from_natural(p, pm)
    }
}

/// Product of Gaussian messages: precisions add, means combine
/// precision-weighted. All-vacuous input gives the vacuous message.
pub fn rg_product(msgs: &[RealGaussian]) -> RealGaussian {
    let (p, pm) = msgs.iter().fold((0.0, 0.0), |(p, pm), m| {
        (p + m.precision, pm + m.precision_mean())
    });
    RealGaussian::from_natural(p, pm)
}

/// Quotient `num / den`, used to strip an incoming message from a belief.
pub fn rg_divide(num: &RealGaussian, den: &RealGaussian) -> Result<RealGaussian> {
    rg_divide_with(num, den, &Tolerances::default())
}

pub fn rg_divide_with(
    num: &RealGaussian,
    den: &RealGaussian,
    tol: &Tolerances,
) -> Result<RealGaussian> {
    if num.precision < den.precision - tol.divide_slack {
        return Err(Error::NegativePrecision {
            num: num.precision,
            den: den.precision,
        });
    }
    let p = num.precision - den.precision;
    if p < tol.vacuous_precision {
        return Ok(RealGaussian::VACUOUS);
    }
    Ok(RealGaussian::from_natural(
        p,
        num.precision_mean() - den.precision_mean(),
    ))
}

/// Scalar proper complex Gaussian. Variance zero encodes a known symbol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarCGauss {
    pub mean: Complex64,
    pub variance: f64,
}

/// Outcome of an EP-style Gaussian division.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Division {
    pub msg: ScalarCGauss,
    /// The raw quotient had negative precision and was replaced by the
    /// vacuous message.
    pub clamped: bool,
}

impl ScalarCGauss {
    pub fn new(mean: Complex64, variance: f64) -> Self {
        debug_assert!(variance >= 0.0);
        Self { mean, variance }
    }

    pub fn vacuous(tol: &Tolerances) -> Self {
        Self::new(Complex64::new(0.0, 0.0), tol.vacuous_variance)
    }

    pub fn is_vacuous(&self, tol: &Tolerances) -> bool {
        self.variance >= tol.vacuous_variance
    }

    /// `self / den`. Non-positive quotient precision yields the vacuous
    /// message; `clamped` is set only when it was strictly negative.
    ///
    /// The numerator variance is used as is; a floored numerator would bias
    /// the quotient whenever `den` is tighter than the floor.
    pub fn divide(&self, den: &ScalarCGauss, tol: &Tolerances) -> Division {
        let vn = self.variance;
        if !(vn > 0.0) {
            return Division {
                msg: Self::vacuous(tol),
                clamped: true,
            };
        }
        let pd = if den.variance > 0.0 {
            1.0 / den.variance
        } else {
            f64::INFINITY
        };
        let p = 1.0 / vn - pd;
        if !(p >= 1.0 / tol.vacuous_variance) {
            return Division {
                msg: Self::vacuous(tol),
                clamped: p < 0.0,
            };
        }
        let pm = self.mean / vn - den.mean * pd;
        let variance = (1.0 / p).max(tol.ep_variance_floor);
        Division {
            msg: Self::new(pm / p, variance),
            clamped: false,
        }
    }

    pub fn damped(&self, previous: &ScalarCGauss, weight: f64) -> ScalarCGauss {
        if weight >= 1.0 {
            return *self;
        }
        let p_new = 1.0 / self.variance;
        let p_old = 1.0 / previous.variance;
        let p = weight * p_new + (1.0 - weight) * p_old;
        let pm = self.mean * (weight * p_new) + previous.mean * ((1.0 - weight) * p_old);
        ScalarCGauss::new(pm / p, 1.0 / p)
    }
}

/// Complex Gaussian in information form: exp{-sᴴ W s + 2 Re[sᴴ b]}.
///
/// `w` is row-major `dim x dim`. Singular `w` is allowed; moments are only
/// produced on request.
#[derive(Debug, Clone, PartialEq)]
pub struct CGaussInfo {
    pub dim: usize,
    pub w: Vec<Complex64>,
    pub b: Vec<Complex64>,
}

/// Complex Gaussian in moment form. The covariance may be singular.
#[derive(Debug, Clone, PartialEq)]
pub struct CGaussMoments {
    pub dim: usize,
    pub mean: Vec<Complex64>,
    pub cov: Vec<Complex64>,
}

impl CGaussInfo {
    pub fn vacuous(dim: usize) -> Self {
        Self {
            dim,
            w: vec![Complex64::default(); dim * dim],
            b: vec![Complex64::default(); dim],
        }
    }

    pub fn new(dim: usize, w: Vec<Complex64>, b: Vec<Complex64>) -> Result<Self> {
        if w.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: w.len(),
            });
        }
        if b.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: b.len(),
            });
        }
        Ok(Self { dim, w, b })
    }

    pub fn is_vacuous(&self) -> bool {
        self.w.iter().all(|v| *v == Complex64::default())
            && self.b.iter().all(|v| *v == Complex64::default())
    }

    /// Largest elementwise deviation from Hermitian symmetry.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.dim;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((self.w[i * n + j] - self.w[j * n + i].conj()).norm());
            }
        }
        worst
    }

    /// Estimated condition number from the Cholesky pivots; infinite when
    /// the matrix is not numerically positive definite.
    pub fn condition_estimate(&self) -> f64 {
        let mut a = self.w.clone();
        match linalg::cholesky_pivots(&mut a, self.dim) {
            Some(p) => {
                let max = p.iter().cloned().fold(0.0, f64::max);
                let min = p.iter().cloned().fold(f64::INFINITY, f64::min);
                max / min
            }
            None => f64::INFINITY,
        }
    }

    pub fn moments(&self) -> Result<CGaussMoments> {
        self.moments_with(&Tolerances::default())
    }

    pub fn moments_with(&self, tol: &Tolerances) -> Result<CGaussMoments> {
        let n = self.dim;
        if n == 0 || !(self.condition_estimate() < tol.singular_condition) {
            return Err(Error::SingularBelief);
        }
        let mut a = self.w.clone();
        let m = n + 1;
        let mut rhs = vec![Complex64::default(); n * m];
        for i in 0..n {
            rhs[i * m + i] = Complex64::new(1.0, 0.0);
            rhs[i * m + n] = self.b[i];
        }
        if !linalg::lu_solve(&mut a, &mut rhs, n, m) {
            return Err(Error::SingularBelief);
        }
        let mut cov = vec![Complex64::default(); n * n];
        let mut mean = vec![Complex64::default(); n];
        for i in 0..n {
            cov[i * n..(i + 1) * n].copy_from_slice(&rhs[i * m..i * m + n]);
            mean[i] = rhs[i * m + n];
        }
        linalg::hermitize(&mut cov, n);
        Ok(CGaussMoments { dim: n, mean, cov })
    }
}

/// Sum of information-form messages over the same state.
pub fn cg_combine(msgs: &[CGaussInfo]) -> Result<CGaussInfo> {
    let dim = msgs
        .first()
        .map(|m| m.dim)
        .ok_or(Error::DimensionMismatch {
            expected: 1,
            found: 0,
        })?;
    let mut out = CGaussInfo::vacuous(dim);
    for m in msgs {
        if m.dim != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: m.dim,
            });
        }
        for (o, v) in out.w.iter_mut().zip(&m.w) {
            *o += v;
        }
        for (o, v) in out.b.iter_mut().zip(&m.b) {
            *o += v;
        }
    }
    Ok(out)
}

/// Scratch buffers for [`absorb_info`].
#[derive(Debug, Clone, Default)]
pub struct AbsorbScratch {
    a: Vec<Complex64>,
    rhs: Vec<Complex64>,
    tmp: Vec<Complex64>,
}

impl AbsorbScratch {
    pub fn new(n: usize) -> Self {
        Self {
            a: vec![Complex64::default(); n * n],
            rhs: vec![Complex64::default(); n * (n + 1)],
            tmp: vec![Complex64::default(); n],
        }
    }
}

/// Multiplies a moment-form Gaussian `N(mean, cov)` by an information-form
/// message `(w, b)` without inverting either side:
///
/// cov' = (I + cov·w)⁻¹ cov,  mean' = (I + cov·w)⁻¹ (mean + cov·b).
///
/// `I + cov·w` is invertible whenever both `cov` and `w` are PSD, so this
/// works for singular covariances and rank-deficient precisions alike.
#[allow(clippy::too_many_arguments)]
pub fn absorb_info(
    mean: &[Complex64],
    cov: &[Complex64],
    w: &[Complex64],
    b: &[Complex64],
    n: usize,
    out_mean: &mut [Complex64],
    out_cov: &mut [Complex64],
    scratch: &mut AbsorbScratch,
) -> Result<()> {
    let m = n + 1;
    linalg::matmul(cov, w, &mut scratch.a, n);
    for i in 0..n {
        scratch.a[i * n + i] += 1.0;
    }
    linalg::matvec(cov, b, &mut scratch.tmp, n);
    for i in 0..n {
        scratch.rhs[i * m..i * m + n].copy_from_slice(&cov[i * n..(i + 1) * n]);
        scratch.rhs[i * m + n] = mean[i] + scratch.tmp[i];
    }
    if !linalg::lu_solve(&mut scratch.a, &mut scratch.rhs, n, m) {
        return Err(Error::SingularBelief);
    }
    for i in 0..n {
        out_cov[i * n..(i + 1) * n].copy_from_slice(&scratch.rhs[i * m..i * m + n]);
        out_mean[i] = scratch.rhs[i * m + n];
    }
    linalg::hermitize(out_cov, n);
    Ok(())
}

impl CGaussMoments {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            mean: vec![Complex64::default(); dim],
            cov: vec![Complex64::default(); dim * dim],
        }
    }

    pub fn absorb(&self, info: &CGaussInfo) -> Result<CGaussMoments> {
        if info.dim != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: info.dim,
            });
        }
        let mut out = CGaussMoments::zeros(self.dim);
        let mut scratch = AbsorbScratch::new(self.dim);
        absorb_info(
            &self.mean,
            &self.cov,
            &info.w,
            &info.b,
            self.dim,
            &mut out.mean,
            &mut out.cov,
            &mut scratch,
        )?;
        Ok(out)
    }

    /// Marginal of coordinate `i`.
    pub fn marginal(&self, i: usize) -> ScalarCGauss {
        ScalarCGauss::new(self.mean[i], self.cov[i * self.dim + i].re.max(0.0))
    }
}

/// Result of projecting a discrete symbol posterior onto a Gaussian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpProjection {
    /// Moments of the discrete posterior (variance floored).
    pub belief: ScalarCGauss,
    /// Belief divided by the extrinsic input: the new symbol message.
    pub msg: ScalarCGauss,
    pub clamped: bool,
}

/// Moment-matches prior × Gaussian-likelihood over `alphabet` and divides
/// out the extrinsic message.
pub fn ep_project(
    extrinsic: &ScalarCGauss,
    prior_probs: &[f64],
    alphabet: &[Complex64],
    tol: &Tolerances,
) -> Result<EpProjection> {
    if prior_probs.len() != alphabet.len() {
        return Err(Error::DimensionMismatch {
            expected: alphabet.len(),
            found: prior_probs.len(),
        });
    }
    let v = extrinsic.variance.max(tol.ep_variance_floor);
    let mut logw = [f64::NEG_INFINITY; 16];
    let logw = if alphabet.len() <= 16 {
        &mut logw[..alphabet.len()]
    } else {
        return Err(Error::DimensionMismatch {
            expected: 16,
            found: alphabet.len(),
        });
    };
    let mut max = f64::NEG_INFINITY;
    for ((lw, &p), &a) in logw.iter_mut().zip(prior_probs).zip(alphabet) {
        *lw = if p > 0.0 {
            p.ln() - (a - extrinsic.mean).norm_sqr() / v
        } else {
            f64::NEG_INFINITY
        };
        max = max.max(*lw);
    }
    if !max.is_finite() {
        return Err(Error::DegeneratePrior);
    }
    let mut z = 0.0;
    let mut m1 = Complex64::default();
    let mut m2 = 0.0;
    for (&lw, &a) in logw.iter().zip(alphabet) {
        let w = (lw - max).exp();
        z += w;
        m1 += a * w;
        m2 += a.norm_sqr() * w;
    }
    let mean = m1 / z;
    let var = (m2 / z - mean.norm_sqr())
        .max(0.0)
        .max(tol.ep_variance_floor);
    let belief = ScalarCGauss::new(mean, var);
    let div = belief.divide(extrinsic, tol);
    Ok(EpProjection {
        belief,
        msg: div.msg,
        clamped: div.clamped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tx::QPSK;
    use proptest::prelude::*;

    fn rg(mean: f64, var: f64) -> RealGaussian {
        RealGaussian::from_moments(mean, var)
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn product_of_equal_messages() {
        let p = rg_product(&[rg(1.0, 1.0), rg(1.0, 1.0), rg(1.0, 1.0)]);
        assert!(close(p.mean(), 1.0, 1e-15));
        assert!(close(p.variance(), 1.0 / 3.0, 1e-15));
    }

    #[test]
    fn vacuous_is_identity() {
        let m = rg(0.7, 0.2);
        assert_eq!(rg_product(&[RealGaussian::VACUOUS, m]), m);
        assert!(rg_product(&[RealGaussian::VACUOUS, RealGaussian::VACUOUS]).is_vacuous());
        assert!(rg_product(&[]).is_vacuous());
    }

    #[test]
    fn equal_variance_averages_means() {
        let p = rg_product(&[rg(0.0, 2.0), rg(3.0, 2.0)]);
        assert!(close(p.mean(), 1.5, 1e-15));
        assert!(close(p.variance(), 1.0, 1e-15));
    }

    #[test]
    fn divide_inverts_product() {
        let q = rg_divide(&rg(1.0, 1.0 / 3.0), &rg(1.0, 1.0)).unwrap();
        assert!(close(q.mean(), 1.0, 1e-14));
        assert!(close(q.variance(), 0.5, 1e-14));
        let m = rg(0.3, 0.4);
        assert_eq!(rg_divide(&m, &RealGaussian::VACUOUS).unwrap(), m);
    }

    #[test]
    fn divide_rejects_precision_order_violation() {
        let err = rg_divide(&rg(0.0, 1.0), &rg(0.0, 0.5)).unwrap_err();
        assert!(matches!(err, Error::NegativePrecision { .. }));
    }

    #[test]
    fn divide_clamps_tiny_result_to_vacuous() {
        let a = RealGaussian::new(0.0, 1.0 + 1e-13);
        let b = RealGaussian::new(0.0, 1.0);
        assert!(rg_divide(&a, &b).unwrap().is_vacuous());
    }

    #[test]
    fn delta_is_capped() {
        let d = rg(0.0, 0.0);
        assert_eq!(d.precision(), 1e12);
        assert!(rg(0.0, f64::INFINITY).is_vacuous());
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn combine_identical_messages() {
        let w = vec![c(2.0, 0.0), c(0.5, 0.5), c(0.5, -0.5), c(1.0, 0.0)];
        let b = vec![c(1.0, 1.0), c(-0.5, 0.0)];
        let m = CGaussInfo::new(2, w, b).unwrap();
        let s = cg_combine(&[m.clone(), m.clone()]).unwrap();
        let m1 = m.moments().unwrap();
        let m2 = s.moments().unwrap();
        for i in 0..2 {
            assert!((m1.mean[i] - m2.mean[i]).norm() < 1e-12);
        }
        for i in 0..4 {
            assert!((m1.cov[i] * 0.5 - m2.cov[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn combine_rank_one_with_full_rank_matches_direct_solve() {
        // Oracle: nalgebra LU on the summed system.
        let h = [c(0.3, 0.1), c(-0.7, 0.2), c(0.5, 0.0)];
        let mut w1 = vec![Complex64::default(); 9];
        for i in 0..3 {
            for j in 0..3 {
                w1[i * 3 + j] = h[i].conj() * h[j] * 4.0;
            }
        }
        let b1: Vec<Complex64> = h.iter().map(|v| v.conj() * c(1.0, -2.0)).collect();
        let w2 = vec![
            c(2.0, 0.0),
            c(0.1, 0.3),
            c(0.0, 0.0),
            c(0.1, -0.3),
            c(1.5, 0.0),
            c(0.2, 0.0),
            c(0.0, 0.0),
            c(0.2, 0.0),
            c(1.0, 0.0),
        ];
        let b2 = vec![c(0.5, 0.0), c(0.0, 1.0), c(-1.0, 0.5)];
        let sum = cg_combine(&[
            CGaussInfo::new(3, w1.clone(), b1.clone()).unwrap(),
            CGaussInfo::new(3, w2.clone(), b2.clone()).unwrap(),
        ])
        .unwrap();
        let mom = sum.moments().unwrap();

        let a = nalgebra::DMatrix::from_fn(3, 3, |i, j| w1[i * 3 + j] + w2[i * 3 + j]);
        let rhs = nalgebra::DVector::from_fn(3, |i, _| b1[i] + b2[i]);
        let mu = a.lu().solve(&rhs).unwrap();
        for i in 0..3 {
            assert!((mom.mean[i] - mu[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn zero_precision_has_no_moments() {
        let z = cg_combine(&[CGaussInfo::vacuous(3), CGaussInfo::vacuous(3)]).unwrap();
        assert!(matches!(z.moments(), Err(Error::SingularBelief)));
    }

    #[test]
    fn absorb_matches_information_sum_when_nonsingular() {
        let prior = CGaussInfo::new(
            2,
            vec![c(1.0, 0.0), c(0.2, 0.1), c(0.2, -0.1), c(2.0, 0.0)],
            vec![c(0.3, 0.0), c(0.0, -1.0)],
        )
        .unwrap();
        let obs = CGaussInfo::new(
            2,
            vec![c(0.25, 0.0), c(0.5, 0.0), c(0.5, 0.0), c(1.0, 0.0)],
            vec![c(1.0, 1.0), c(2.0, 2.0)],
        )
        .unwrap();
        let via_absorb = prior.moments().unwrap().absorb(&obs).unwrap();
        let via_sum = cg_combine(&[prior, obs]).unwrap().moments().unwrap();
        for i in 0..2 {
            assert!((via_absorb.mean[i] - via_sum.mean[i]).norm() < 1e-12);
        }
        for i in 0..4 {
            assert!((via_absorb.cov[i] - via_sum.cov[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn ep_flat_extrinsic_gives_constellation_moments() {
        let ext = ScalarCGauss::new(c(0.0, 0.0), 1e12);
        let p = ep_project(&ext, &[0.25; 4], &QPSK, &Tolerances::default()).unwrap();
        assert!(p.belief.mean.norm() < 1e-9);
        assert!((p.belief.variance - 1.0).abs() < 1e-9);
    }

    #[test]
    fn ep_delta_prior_floors_variance() {
        let ext = ScalarCGauss::new(c(0.1, -0.3), 0.5);
        let p = ep_project(&ext, &[1.0, 0.0, 0.0, 0.0], &QPSK, &Tolerances::default()).unwrap();
        assert!((p.belief.mean - QPSK[0]).norm() < 1e-15);
        assert_eq!(p.belief.variance, 1e-8);
    }

    #[test]
    fn ep_enumeration_example() {
        // Hand enumeration: distances from 0.5+0.5j to the four points.
        let ext = ScalarCGauss::new(c(0.5, 0.5), 1.0);
        let p = ep_project(&ext, &[0.25; 4], &QPSK, &Tolerances::default()).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let mut z = 0.0;
        let mut m = Complex64::default();
        for a in [c(r, r), c(r, -r), c(-r, r), c(-r, -r)] {
            let w = (-(a - c(0.5, 0.5)).norm_sqr()).exp();
            z += w;
            m += a * w;
        }
        let mean = m / z;
        assert!((p.belief.mean - mean).norm() < 1e-14);
        assert!((p.belief.variance - (1.0 - mean.norm_sqr())).abs() < 1e-14);
    }

    #[test]
    fn ep_rejects_zero_prior() {
        let ext = ScalarCGauss::new(c(0.0, 0.0), 1.0);
        assert!(matches!(
            ep_project(&ext, &[0.0; 4], &QPSK, &Tolerances::default()),
            Err(Error::DegeneratePrior)
        ));
    }

    #[test]
    fn ep_sharp_extrinsic_on_point_collapses() {
        let ext = ScalarCGauss::new(QPSK[2], 1e-6);
        let p = ep_project(&ext, &[0.25; 4], &QPSK, &Tolerances::default()).unwrap();
        assert!((p.belief.mean - QPSK[2]).norm() < 1e-9);
        assert!(p.belief.variance <= 1e-8 + 1e-15);
    }

    #[test]
    fn scalar_divide_identity_is_vacuous() {
        let tol = Tolerances::default();
        let m = ScalarCGauss::new(c(0.2, 0.1), 0.4);
        let d = m.divide(&m, &tol);
        assert!(d.msg.is_vacuous(&tol));
        assert!(!d.clamped);
    }

    #[test]
    fn scalar_divide_precision_subtract() {
        let tol = Tolerances::default();
        let d =
            ScalarCGauss::new(c(0.7, 0.0), 0.1).divide(&ScalarCGauss::new(c(0.0, 0.0), 1.0), &tol);
        assert!((d.msg.variance - 1.0 / 9.0).abs() < 1e-14);
        assert!((d.msg.mean.re - 0.7 / 0.1 / 9.0).abs() < 1e-14);
        let neg =
            ScalarCGauss::new(c(0.0, 0.0), 1.0).divide(&ScalarCGauss::new(c(0.0, 0.0), 0.5), &tol);
        assert!(neg.clamped && neg.msg.is_vacuous(&tol));
    }

    #[test]
    fn scalar_divide_below_floor() {
        // Both sides tighter than the EP floor: the quotient is still the
        // exact precision difference.
        let tol = Tolerances::default();
        let den = ScalarCGauss::new(c(0.7, 0.7), 5e-9);
        let ext = ScalarCGauss::new(c(0.6, 0.8), 0.1);
        let pb = 1.0 / den.variance + 1.0 / ext.variance;
        let belief = ScalarCGauss::new(
            (den.mean / den.variance + ext.mean / ext.variance) / pb,
            1.0 / pb,
        );
        let d = belief.divide(&den, &tol);
        assert!(!d.clamped);
        assert!((d.msg.variance - 0.1).abs() < 1e-6);
        assert!((d.msg.mean - ext.mean).norm() < 1e-6);
    }

    fn arb_rg() -> impl Strategy<Value = RealGaussian> {
        (-10.0..10.0f64, 1e-3..1e3f64).prop_map(|(m, p)| RealGaussian::new(m, p))
    }

    proptest! {
        #[test]
        fn product_commutes_and_associates(a in arb_rg(), b in arb_rg(), c in arb_rg()) {
            let ab = rg_product(&[a, b]);
            let ba = rg_product(&[b, a]);
            prop_assert!(close(ab.precision(), ba.precision(), 1e-14));
            prop_assert!(close(ab.mean(), ba.mean(), 1e-12));
            let l = rg_product(&[rg_product(&[a, b]), c]);
            let r = rg_product(&[a, rg_product(&[b, c])]);
            prop_assert!(close(l.precision(), r.precision(), 1e-12));
            prop_assert!(close(l.mean(), r.mean(), 1e-10));
        }

        #[test]
        fn divide_undoes_product(a in arb_rg(), b in arb_rg()) {
            let q = rg_divide(&rg_product(&[a, b]), &b).unwrap();
            prop_assert!(close(q.precision(), a.precision(), 1e-12 * (1.0 + b.precision() / a.precision())));
            prop_assert!((q.mean() - a.mean()).abs() <= 1e-12 * (1.0 + a.mean().abs()) * (1.0 + b.precision() / a.precision()) * (1.0 + b.mean().abs()));
        }

        #[test]
        fn ep_variance_bounded_by_energy(
            re in -3.0..3.0f64, im in -3.0..3.0f64, v in 1e-4..1e4f64,
            p in proptest::collection::vec(0.0..1.0f64, 4)
        ) {
            let s: f64 = p.iter().sum();
            prop_assume!(s > 1e-6);
            let probs: Vec<f64> = p.iter().map(|x| x / s).collect();
            let ext = ScalarCGauss::new(Complex64::new(re, im), v);
            let proj = ep_project(&ext, &probs, &QPSK, &Tolerances::default()).unwrap();
            prop_assert!(proj.belief.variance <= 1.0 + 1e-12);
        }

        #[test]
        fn combine_stays_psd(seed in 0u64..1000) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let n = 3;
            let mut msgs = Vec::new();
            for _ in 0..3 {
                let v: Vec<Complex64> = (0..n).map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
                let mut w = vec![Complex64::default(); n * n];
                for i in 0..n { for j in 0..n { w[i * n + j] = v[i].conj() * v[j]; } }
                msgs.push(CGaussInfo::new(n, w, vec![Complex64::default(); n]).unwrap());
            }
            let s = cg_combine(&msgs).unwrap();
            prop_assert!(s.hermitian_defect() < 1e-10);
            let m = nalgebra::DMatrix::from_fn(n, n, |i, j| s.w[i * n + j]);
            let eig = m.symmetric_eigenvalues();
            prop_assert!(eig.iter().all(|e| *e >= -1e-9));
        }
    }
}
