//! Least-squares front end producing the [`FittedModel`] summary.
//!
//! `theta = a' beta` and `tau = b' beta` for user-supplied contrast vectors.
//! All quadratic forms in `(X'X)^{-1}` are computed from the triangular factor
//! of a Householder QR of `X`: `a' (X'X)^{-1} b = (R^{-T} a) . (R^{-T} b)`.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_positive, Error, Result};
use crate::kernel::FittedModel;

/// Diagonal entries of `R` below this fraction of the largest one mark the
/// design as rank deficient.
pub const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct Dataset {
    x: DMatrix<f64>,
    y: DVector<f64>,
    sigma: f64,
    theta_vec: DVector<f64>,
    tau_vec: DVector<f64>,
}

impl Dataset {
    pub fn new(
        x: DMatrix<f64>,
        y: DVector<f64>,
        sigma: f64,
        theta_vec: DVector<f64>,
        tau_vec: DVector<f64>,
    ) -> Result<Self> {
        let (n, p) = x.shape();
        if p == 0 {
            return Err(Error::DimensionMismatch(
                "design matrix has no columns".into(),
            ));
        }
        if p >= n {
            return Err(Error::DimensionMismatch(format!(
                "need more observations than columns, got n = {n}, p = {p}"
            )));
        }
        if y.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "response has {} entries but the design has {n} rows",
                y.len()
            )));
        }
        for (name, v) in [("theta_vec", &theta_vec), ("tau_vec", &tau_vec)] {
            if v.len() != p {
                return Err(Error::DimensionMismatch(format!(
                    "{name} has {} entries but the design has {p} columns",
                    v.len()
                )));
            }
        }
        if x.iter()
            .chain(y.iter())
            .chain(theta_vec.iter())
            .chain(tau_vec.iter())
            .any(|v| !v.is_finite())
        {
            return Err(Error::invalid("data", "all entries must be finite"));
        }
        let sigma = check_positive("sigma", sigma)?;
        Ok(Self {
            x,
            y,
            sigma,
            theta_vec,
            tau_vec,
        })
    }

    pub fn design(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn response(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn theta_vec(&self) -> &DVector<f64> {
        &self.theta_vec
    }

    pub fn tau_vec(&self) -> &DVector<f64> {
        &self.tau_vec
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }
}

/// Full least-squares output: coefficients plus the model summary.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    pub beta_hat: DVector<f64>,
    pub tau_hat: f64,
    pub model: FittedModel,
}

/// Precomputed QR of a fixed design. Refitting many responses against the
/// same design reuses the factorization.
#[derive(Debug, Clone)]
pub struct DesignFactor {
    q: DMatrix<f64>,
    r: DMatrix<f64>,
    /// `R^{-T} a`
    wa: DVector<f64>,
    /// `R^{-T} b`
    wb: DVector<f64>,
    v_theta: f64,
    v_tau: f64,
    rho: f64,
}

impl DesignFactor {
    pub fn new(x: &DMatrix<f64>, theta_vec: &DVector<f64>, tau_vec: &DVector<f64>) -> Result<Self> {
        let p = x.ncols();
        let qr = x.clone().qr();
        let r = qr.r();
        let q = qr.q();

        let largest = (0..p).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
        let threshold = RANK_TOLERANCE * largest;
        for i in 0..p {
            let v = r[(i, i)].abs();
            if v.is_nan() || v <= threshold {
                return Err(Error::SingularDesign {
                    column: i,
                    value: v,
                    threshold,
                });
            }
        }

        let rt = r.transpose();
        let solve = |v: &DVector<f64>| {
            rt.solve_lower_triangular(v).ok_or(Error::SingularDesign {
                column: 0,
                value: 0.0,
                threshold,
            })
        };
        let wa = solve(theta_vec)?;
        let wb = solve(tau_vec)?;
        let v_theta = wa.norm_squared();
        let v_tau = wb.norm_squared();
        if v_theta == 0.0 {
            return Err(Error::invalid("theta_vec", "must not be the zero vector"));
        }
        if v_tau == 0.0 {
            return Err(Error::invalid("tau_vec", "must not be the zero vector"));
        }
        let rho = wa.dot(&wb) / (v_theta * v_tau).sqrt();
        if 1.0 - rho.abs() < 1e-10 {
            return Err(Error::invalid(
                "tau_vec",
                "theta and tau contrasts are parallel (|rho| = 1)",
            ));
        }
        Ok(Self {
            q,
            r,
            wa,
            wb,
            v_theta,
            v_tau,
            rho: rho.clamp(-1.0, 1.0),
        })
    }

    pub fn v_theta(&self) -> f64 {
        self.v_theta
    }

    pub fn v_tau(&self) -> f64 {
        self.v_tau
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn solve(&self, y: &DVector<f64>) -> Result<DVector<f64>> {
        let qty = self.q.transpose() * y;
        self.r
            .solve_upper_triangular(&qty)
            .ok_or(Error::SingularDesign {
                column: 0,
                value: 0.0,
                threshold: 0.0,
            })
    }

    /// `(theta_hat, tau_hat)` without forming `beta_hat`'s other entries
    /// separately: `a' beta_hat = (R^{-T} a) . (Q' y)`.
    pub fn contrasts(&self, y: &DVector<f64>) -> (f64, f64) {
        let qty = self.q.transpose() * y;
        (self.wa.dot(&qty), self.wb.dot(&qty))
    }

    pub fn summarize(&self, theta_hat: f64, tau_hat: f64, sigma: f64) -> Result<FittedModel> {
        let gamma_hat = tau_hat / (sigma * self.v_tau.sqrt());
        FittedModel::new(
            theta_hat,
            gamma_hat,
            sigma,
            self.v_theta,
            self.v_tau,
            self.rho,
        )
    }
}

/// Least-squares fit and the `(theta_hat, gamma_hat, sigma, v_theta, v_tau, rho)` summary.
pub fn fit(data: &Dataset) -> Result<FittedModel> {
    fit_full(data).map(|ls| ls.model)
}

pub fn fit_full(data: &Dataset) -> Result<LeastSquares> {
    let factor = DesignFactor::new(&data.x, &data.theta_vec, &data.tau_vec)?;
    let beta_hat = factor.solve(&data.y)?;
    let theta_hat = data.theta_vec.dot(&beta_hat);
    let tau_hat = data.tau_vec.dot(&beta_hat);
    let model = factor.summarize(theta_hat, tau_hat, data.sigma)?;
    Ok(LeastSquares {
        beta_hat,
        tau_hat,
        model,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualDiagnostic {
    pub rss: f64,
    pub dof: usize,
    /// `RSS / (sigma^2 (n - p))`; near 1 when the known sigma is adequate.
    pub ratio: f64,
}

pub fn residual_check(data: &Dataset, fit_result: &LeastSquares) -> ResidualDiagnostic {
    let resid = &data.y - &data.x * &fit_result.beta_hat;
    let rss = resid.norm_squared();
    let dof = data.n() - data.p();
    ResidualDiagnostic {
        rss,
        dof,
        ratio: rss / (data.sigma * data.sigma * dof as f64),
    }
}
