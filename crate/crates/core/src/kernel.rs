//! Scalar kernels of the smoothed pretest estimator.
//!
//! With the pretest accepting the submodel when `|gamma_hat| <= d`, the
//! smoothed estimator is `theta_hat - rho * sigma * sqrt(v_theta) * k(gamma_hat)`
//! where `k(gamma) = int_{-d}^{d} z phi(z - gamma) dz`. Its exact standard
//! deviation is `sigma * sqrt(v_theta) * r(gamma; rho)` and the delta-method
//! approximation replaces `r` by `r_delta`, built from `q = k'`.

use crate::error::{check_finite, check_positive, check_probability, Error, Result};
use crate::gauss::{pdf, sf, std_interval_mass, z_quantile, QuadratureRule};

/// Largest |rho| accepted by the kernels and interval functionals.
pub const RHO_MAX: f64 = 0.999;

const VARIANCE_SLACK: f64 = 1e-12;

/// The preliminary test `|gamma_hat| <= d`, stored with its size
/// `alpha1 = 2 (1 - Phi(d))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PretestSpec {
    d: f64,
    alpha1: f64,
}

impl PretestSpec {
    /// Pretest of size `alpha1`, i.e. cutoff `d = z_{1 - alpha1/2}`.
    pub fn from_size(alpha1: f64) -> Result<Self> {
        let alpha1 = check_probability("alpha1", alpha1)?;
        let d = z_quantile(1.0 - alpha1 / 2.0)?;
        Ok(Self { d, alpha1 })
    }

    pub fn from_cutoff(d: f64) -> Result<Self> {
        let d = check_positive("d", d)?;
        let alpha1 = 2.0 * sf(d);
        if alpha1 <= 0.0 {
            return Err(Error::invalid(
                "d",
                format!("cutoff {d} gives a pretest of size 0"),
            ));
        }
        Ok(Self { d, alpha1 })
    }

    pub fn cutoff(&self) -> f64 {
        self.d
    }

    pub fn size(&self) -> f64 {
        self.alpha1
    }

    /// True when the pretest accepts the submodel.
    pub fn accepts(&self, gamma_hat: f64) -> bool {
        gamma_hat.abs() <= self.d
    }
}

/// Least-squares summary of the full model, in the parametrization used by
/// every kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FittedModel {
    pub theta_hat: f64,
    pub gamma_hat: f64,
    pub sigma: f64,
    pub v_theta: f64,
    pub v_tau: f64,
    pub rho: f64,
}

impl FittedModel {
    pub fn new(
        theta_hat: f64,
        gamma_hat: f64,
        sigma: f64,
        v_theta: f64,
        v_tau: f64,
        rho: f64,
    ) -> Result<Self> {
        check_finite("theta_hat", theta_hat)?;
        check_finite("gamma_hat", gamma_hat)?;
        check_positive("sigma", sigma)?;
        check_positive("v_theta", v_theta)?;
        check_positive("v_tau", v_tau)?;
        if !(rho.is_finite() && rho.abs() <= 1.0) {
            return Err(Error::invalid(
                "rho",
                format!("correlation must lie in [-1, 1], got {rho}"),
            ));
        }
        Ok(Self {
            theta_hat,
            gamma_hat,
            sigma,
            v_theta,
            v_tau,
            rho,
        })
    }

    /// Standardized-unit model: `sigma = v_theta = v_tau = 1`.
    pub fn standardized(theta_hat: f64, gamma_hat: f64, rho: f64) -> Result<Self> {
        Self::new(theta_hat, gamma_hat, 1.0, 1.0, 1.0, rho)
    }

    /// `sigma * sqrt(v_theta)`, the standard deviation of `theta_hat`.
    pub fn theta_scale(&self) -> f64 {
        self.sigma * self.v_theta.sqrt()
    }

    pub fn tau_hat(&self) -> f64 {
        self.gamma_hat * self.sigma * self.v_tau.sqrt()
    }
}

pub(crate) fn check_rho(rho: f64) -> Result<f64> {
    if rho.is_finite() && rho.abs() <= RHO_MAX {
        Ok(rho)
    } else {
        Err(Error::invalid(
            "rho",
            format!("correlation must satisfy |rho| <= {RHO_MAX}, got {rho}"),
        ))
    }
}

/// `k(gamma) = phi(d + gamma) - phi(d - gamma) + gamma [Phi(d - gamma) - Phi(-d - gamma)]`.
///
/// The bracket is a normal interval mass and is evaluated from the tails.
pub fn k(gamma: f64, spec: &PretestSpec) -> f64 {
    let d = spec.d;
    pdf(d + gamma) - pdf(d - gamma) + gamma * std_interval_mass(-d - gamma, d - gamma)
}

/// `q(gamma) = Phi(d - gamma) - Phi(-d - gamma) - d [phi(d + gamma) + phi(d - gamma)]`,
/// the derivative of [`k`].
pub fn q(gamma: f64, spec: &PretestSpec) -> f64 {
    let d = spec.d;
    std_interval_mass(-d - gamma, d - gamma) - d * (pdf(d + gamma) + pdf(d - gamma))
}

/// `m_k(gamma) = E k(Z)`, `Z ~ N(gamma, 1)`.
pub fn m_k(gamma: f64, spec: &PretestSpec) -> Result<f64> {
    m_k_on(QuadratureRule::standard(), gamma, spec)
}

pub fn m_k_on(rule: &QuadratureRule, gamma: f64, spec: &PretestSpec) -> Result<f64> {
    check_finite("gamma", gamma)?;
    rule.integrate(gamma, |z| k(z, spec))
}

/// The two integrals entering the exact standard deviation at `gamma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothingMoments {
    /// `int k(z) phi(z - gamma) dz`
    pub mean_k: f64,
    /// `int k(z) (z - gamma) phi(z - gamma) dz`
    pub cross: f64,
    /// `int (k(z) - m_k)^2 phi(z - gamma) dz`
    pub var_k: f64,
}

pub fn smoothing_moments_on(
    rule: &QuadratureRule,
    gamma: f64,
    spec: &PretestSpec,
) -> Result<SmoothingMoments> {
    check_finite("gamma", gamma)?;
    let nodes = rule.nodes();
    let weights = rule.weights();
    let kz: Vec<f64> = nodes.iter().map(|&z| k(gamma + z, spec)).collect();
    let mut mean_k = 0.0;
    let mut cross = 0.0;
    for ((&z, &w), &kv) in nodes.iter().zip(weights).zip(&kz) {
        mean_k += w * kv;
        cross += w * kv * z;
    }
    let mut var_k = 0.0;
    for (&w, &kv) in weights.iter().zip(&kz) {
        let dev = kv - mean_k;
        var_k += w * dev * dev;
    }
    if !(mean_k.is_finite() && cross.is_finite() && var_k.is_finite()) {
        return Err(Error::NonFiniteIntegrand { at: gamma });
    }
    Ok(SmoothingMoments {
        mean_k,
        cross,
        var_k,
    })
}

fn checked_sqrt(radicand: f64, what: &str, gamma: f64, rho: f64) -> Result<f64> {
    if radicand >= 0.0 {
        Ok(radicand.sqrt())
    } else if radicand >= -VARIANCE_SLACK {
        Ok(0.0)
    } else {
        Err(Error::Consistency(format!(
            "{what}({gamma}; {rho}) has negative squared value {radicand:e}"
        )))
    }
}

/// Exact standard deviation of the smoothed estimator in units of
/// `sigma * sqrt(v_theta)`.
pub fn r(gamma: f64, rho: f64, spec: &PretestSpec) -> Result<f64> {
    r_on(QuadratureRule::standard(), gamma, rho, spec)
}

pub fn r_on(rule: &QuadratureRule, gamma: f64, rho: f64, spec: &PretestSpec) -> Result<f64> {
    check_rho(rho)?;
    check_finite("gamma", gamma)?;
    if rho == 0.0 {
        return Ok(1.0);
    }
    let m = smoothing_moments_on(rule, gamma, spec)?;
    let rho2 = rho * rho;
    checked_sqrt(1.0 - 2.0 * rho2 * m.cross + rho2 * m.var_k, "r", gamma, rho)
}

/// Delta-method standard deviation in units of `sigma * sqrt(v_theta)`.
pub fn r_delta(gamma: f64, rho: f64, spec: &PretestSpec) -> Result<f64> {
    check_rho(rho)?;
    check_finite("gamma", gamma)?;
    let qv = q(gamma, spec);
    let rho2 = rho * rho;
    checked_sqrt(
        1.0 - 2.0 * rho2 * qv + rho2 * qv * qv,
        "r_delta",
        gamma,
        rho,
    )
}

/// The two-stage estimator: submodel estimate when the pretest accepts,
/// full-model estimate otherwise.
pub fn pms_estimate(fit: &FittedModel, spec: &PretestSpec) -> f64 {
    if spec.accepts(fit.gamma_hat) {
        fit.theta_hat - fit.rho * fit.theta_scale() * fit.gamma_hat
    } else {
        fit.theta_hat
    }
}

/// The ideal (infinitely many resamples) bootstrap smoothed estimate.
pub fn smoothed_estimate(fit: &FittedModel, spec: &PretestSpec) -> f64 {
    fit.theta_hat - fit.rho * fit.theta_scale() * k(fit.gamma_hat, spec)
}
