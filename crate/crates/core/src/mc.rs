//! Monte Carlo oracle for the closed forms.
//!
//! Everything is simulated in standardized units (`theta = 0`,
//! `sigma * sqrt(v_theta) = 1`) from the bivariate normal law of
//! `(G, gamma_hat)`: means `(0, gamma)`, unit variances, correlation `rho`.
//!
//! Replications are processed in fixed blocks of [`BLOCK_SIZE`]; block `i`
//! draws from `ChaCha8Rng::seed_from_u64(seed)` on stream `i`. Per-replication
//! records are gathered in block order and reduced sequentially, so the
//! summary does not depend on how rayon schedules the blocks.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{check_probability, Error, Result};
use crate::gauss::z_quantile;
use crate::intervals::{self, build_interval_with_quantile, IntervalRule, Scenario};
use crate::kernel::{self, FittedModel, PretestSpec};

pub const BLOCK_SIZE: u64 = 4096;

const SE_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct SimPlan {
    pub replications: u64,
    pub seed: u64,
    pub scenario: Scenario,
    pub spec: PretestSpec,
    pub alpha: f64,
    /// Bootstrap resamples per replication; 0 uses the ideal smoothed estimator.
    pub bootstrap_b: u64,
}

impl SimPlan {
    pub fn new(
        replications: u64,
        seed: u64,
        scenario: Scenario,
        spec: PretestSpec,
        alpha: f64,
    ) -> Result<Self> {
        if replications == 0 {
            return Err(Error::invalid(
                "replications",
                "need at least one replication",
            ));
        }
        check_probability("alpha", alpha)?;
        Ok(Self {
            replications,
            seed,
            scenario,
            spec,
            alpha,
            bootstrap_b: 0,
        })
    }

    pub fn with_bootstrap(mut self, b: u64) -> Self {
        self.bootstrap_b = b;
        self
    }
}

/// Monte Carlo standard errors. Mean, coverage and length use
/// `sd / sqrt(n)`; the sd estimate uses the delta-method form
/// `sqrt((m4 - s^4) / (4 s^2 n))` with `m4` the fourth central moment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StandardErrors {
    pub mean_estimate: f64,
    pub sd_estimate: f64,
    pub empirical_coverage: f64,
    pub mean_length: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimSummary {
    pub replications: u64,
    pub rule: IntervalRule,
    pub mean_estimate: f64,
    pub sd_estimate: f64,
    pub empirical_coverage: f64,
    pub mean_length: f64,
    pub standard_errors: StandardErrors,
}

/// One draw of `(G, gamma_hat)`.
pub fn simulate_pair<R: Rng + ?Sized>(scenario: &Scenario, rng: &mut R) -> (f64, f64) {
    let z1: f64 = rng.sample(StandardNormal);
    let z2: f64 = rng.sample(StandardNormal);
    let rho = scenario.rho();
    let g = rho * z1 + (1.0 - rho * rho).sqrt() * z2;
    (g, scenario.gamma() + z1)
}

/// Finite-B parametric bootstrap smoothing of the two-stage estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BootstrapSmoothing {
    pub estimate: f64,
    /// Standard deviation of the B bootstrap replicates.
    pub bootstrap_sd: f64,
    pub resamples: u64,
}

/// Averages the two-stage estimator over `b` resamples drawn from the
/// bivariate normal law centered at the observed `(theta_hat, gamma_hat)`.
pub fn smoothed_estimate_finite_b<R: Rng + ?Sized>(
    theta_hat_std: f64,
    gamma_hat: f64,
    rho: f64,
    spec: &PretestSpec,
    b: u64,
    rng: &mut R,
) -> Result<BootstrapSmoothing> {
    if b == 0 {
        return Err(Error::invalid("b", "need at least one bootstrap resample"));
    }
    let rho = kernel::check_rho(rho)?;
    let centered = Scenario::new(gamma_hat, rho)?;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..b {
        let (g, gh) = simulate_pair(&centered, rng);
        let theta_star = theta_hat_std + g;
        let est = if spec.accepts(gh) {
            theta_star - rho * gh
        } else {
            theta_star
        };
        sum += est;
        sum_sq += est * est;
    }
    let n = b as f64;
    let mean = sum / n;
    let var = if b > 1 {
        ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(BootstrapSmoothing {
        estimate: mean,
        bootstrap_sd: var.sqrt(),
        resamples: b,
    })
}

fn block_rng(seed: u64, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block);
    rng
}

/// Runs `f` once per replication with the replication's block stream and
/// returns the per-replication outputs in replication order.
fn replicate<T, F>(replications: u64, seed: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng) -> Result<T> + Sync,
{
    let blocks = replications.div_ceil(BLOCK_SIZE);
    let chunks: Vec<Vec<T>> = (0..blocks)
        .into_par_iter()
        .map(|block| {
            let mut rng = block_rng(seed, block);
            let start = block * BLOCK_SIZE;
            let end = (start + BLOCK_SIZE).min(replications);
            (start..end)
                .map(|_| f(&mut rng))
                .collect::<Result<Vec<T>>>()
        })
        .collect::<Result<_>>()?;
    Ok(chunks.into_iter().flatten().collect())
}

#[derive(Debug, Clone, Copy)]
struct Record {
    estimate: f64,
    covered: bool,
    length: f64,
}

/// Simulates `plan.replications` data sets, builds the `rule` interval for
/// each, and summarizes the estimator, coverage of `theta = 0` and length.
pub fn run(plan: &SimPlan, rule: IntervalRule) -> Result<SimSummary> {
    let alpha = check_probability("alpha", plan.alpha)?;
    let z = z_quantile(1.0 - alpha / 2.0)?;
    let spec = plan.spec;
    let rho = plan.scenario.rho();
    let b = plan.bootstrap_b;

    let records = replicate(plan.replications, plan.seed, |rng| {
        let (g, gamma_hat) = simulate_pair(&plan.scenario, rng);
        let fit = FittedModel::standardized(g, gamma_hat, rho)?;
        let mut report = build_interval_with_quantile(&fit, &spec, alpha, z, rule)?;
        if b > 0 && matches!(rule, IntervalRule::Sd | IntervalRule::SdDelta) {
            let bagged = smoothed_estimate_finite_b(g, gamma_hat, rho, &spec, b, rng)?;
            let shift = bagged.estimate - report.center;
            report.center += shift;
            report.lower += shift;
            report.upper += shift;
        }
        Ok(Record {
            estimate: report.center,
            covered: report.contains(0.0),
            length: report.length(),
        })
    })?;

    Ok(summarize(&records, rule))
}

fn summarize(records: &[Record], rule: IntervalRule) -> SimSummary {
    let n = records.len() as f64;
    let mean = records.iter().map(|r| r.estimate).sum::<f64>() / n;
    let (mut m2, mut m4) = (0.0, 0.0);
    for r in records {
        let d = r.estimate - mean;
        let d2 = d * d;
        m2 += d2;
        m4 += d2 * d2;
    }
    m2 /= n;
    m4 /= n;
    let sd = (m2 * n / (n - 1.0).max(1.0)).sqrt();
    let se_sd = if m2 > 0.0 {
        ((m4 - m2 * m2).max(0.0) / (4.0 * m2 * n)).sqrt()
    } else {
        0.0
    };

    let covered = records.iter().filter(|r| r.covered).count() as f64;
    let p = covered / n;

    let mean_len = records.iter().map(|r| r.length).sum::<f64>() / n;
    let var_len = records
        .iter()
        .map(|r| (r.length - mean_len).powi(2))
        .sum::<f64>()
        / (n - 1.0).max(1.0);

    SimSummary {
        replications: records.len() as u64,
        rule,
        mean_estimate: mean,
        sd_estimate: sd,
        empirical_coverage: p,
        mean_length: mean_len,
        standard_errors: StandardErrors {
            mean_estimate: sd / n.sqrt(),
            sd_estimate: se_sd,
            empirical_coverage: (p * (1.0 - p) / n).sqrt(),
            mean_length: (var_len / n).sqrt(),
        },
    }
}

/// One analytic-vs-simulated comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub label: String,
    pub gamma: f64,
    pub rho: f64,
    pub analytic: f64,
    pub empirical: f64,
    pub std_error: f64,
}

impl Comparison {
    /// `(empirical - analytic) / se` with `se` floored at
    /// `1e-9 * max(1, |analytic|)`: a quantity that does not vary across
    /// replications (e.g. every length equal at `rho = 0`) is compared at
    /// floating point accuracy instead of dividing by zero.
    pub fn z_score(&self) -> f64 {
        let diff = self.empirical - self.analytic;
        let se = self.std_error.max(SE_FLOOR * self.analytic.abs().max(1.0));
        diff / se
    }

    pub fn passes(&self, threshold: f64) -> bool {
        self.z_score().abs() <= threshold
    }
}

/// Compares simulated coverage, sd and scaled length against the exact
/// functionals on every `(gamma, rho)` pair.
///
/// For each pair the sd and sd_delta intervals are simulated with
/// `replications` draws. Scaled lengths divide the mean simulated length by
/// the length of `I(c_min)`, with `c_min` from the exact search.
pub fn oracle_agreement(
    gammas: &[f64],
    rhos: &[f64],
    spec: &PretestSpec,
    alpha: f64,
    replications: u64,
    seed: u64,
) -> Result<Vec<Comparison>> {
    let mut out = Vec::new();
    for (ri, &rho) in rhos.iter().enumerate() {
        let cmin_sd = intervals::min_coverage(rho, spec, alpha, IntervalRule::Sd)?.c_min;
        let cmin_delta = intervals::min_coverage(rho, spec, alpha, IntervalRule::SdDelta)?.c_min;
        let ref_len_sd = 2.0 * z_quantile((1.0 + cmin_sd) / 2.0)?;
        let ref_len_delta = 2.0 * z_quantile((1.0 + cmin_delta) / 2.0)?;

        for (gi, &gamma) in gammas.iter().enumerate() {
            let s = Scenario::new(gamma, rho)?;
            let stream = seed
                .wrapping_mul(0x9E37_79B9_7F4A_7C15)
                .wrapping_add(((ri as u64) << 32) | gi as u64);
            let plan = SimPlan::new(replications, stream, s, *spec, alpha)?;
            let sd_run = run(&plan, IntervalRule::Sd)?;
            let delta_run = run(&plan, IntervalRule::SdDelta)?;

            let mk = |label: &str, analytic: f64, empirical: f64, std_error: f64| Comparison {
                label: label.to_string(),
                gamma,
                rho,
                analytic,
                empirical,
                std_error,
            };
            out.push(mk(
                "coverage_sd",
                intervals::coverage_sd(&s, spec, alpha)?,
                sd_run.empirical_coverage,
                sd_run.standard_errors.empirical_coverage,
            ));
            out.push(mk(
                "coverage_sd_delta",
                intervals::coverage_sd_delta(&s, spec, alpha)?,
                delta_run.empirical_coverage,
                delta_run.standard_errors.empirical_coverage,
            ));
            out.push(mk(
                "sd_smoothed",
                kernel::r(gamma, rho, spec)?,
                sd_run.sd_estimate,
                sd_run.standard_errors.sd_estimate,
            ));
            out.push(mk(
                "sel_sd",
                intervals::sel_sd(&s, spec, alpha, cmin_sd)?,
                sd_run.mean_length / ref_len_sd,
                sd_run.standard_errors.mean_length / ref_len_sd,
            ));
            out.push(mk(
                "sel_sd_delta",
                intervals::sel_sd_delta(&s, spec, alpha, cmin_delta)?,
                delta_run.mean_length / ref_len_delta,
                delta_run.standard_errors.mean_length / ref_len_delta,
            ));
        }
    }
    Ok(out)
}

/// RMS deviation of the finite-B smoothed estimate from the ideal one over
/// `repeats` independent bootstrap runs at fixed `(theta_hat, gamma_hat)`.
pub fn finite_b_rms_error(
    theta_hat_std: f64,
    gamma_hat: f64,
    rho: f64,
    spec: &PretestSpec,
    b: u64,
    repeats: u64,
    seed: u64,
) -> Result<f64> {
    let fit = FittedModel::standardized(theta_hat_std, gamma_hat, rho)?;
    let ideal = kernel::smoothed_estimate(&fit, spec);
    let devs = (0..repeats)
        .into_par_iter()
        .map(|i| {
            let mut rng = block_rng(seed, i);
            let est = smoothed_estimate_finite_b(theta_hat_std, gamma_hat, rho, spec, b, &mut rng)?;
            Ok((est.estimate - ideal).powi(2))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok((devs.iter().sum::<f64>() / repeats as f64).sqrt())
}

/// Least-squares slope of `ln y` on `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}
