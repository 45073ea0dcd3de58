//! Confidence intervals and their exact coverage and scaled expected length.
//!
//! The functionals work in standardized units (`sigma * sqrt(v_theta) = 1`,
//! `theta = 0`), where coverage and scaled expected length depend only on the
//! scenario `(gamma, rho)`. Conditional on `gamma_hat = h`, the standardized
//! estimation error `G` is `N(rho (h - gamma), 1 - rho^2)`, so every coverage
//! probability is a single integral over `h` against `phi(h - gamma)`.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{check_finite, check_probability, Error, Result};
use crate::gauss::{std_interval_mass, z_quantile, QuadratureRule};
use crate::kernel::{self, check_rho, FittedModel, PretestSpec};

/// Upper end of the gamma range searched for the minimum coverage.
pub const GAMMA_SEARCH_MAX: f64 = 12.0;
pub const SEARCH_GRID_STEP: f64 = 0.05;
/// Golden-section stopping width in gamma.
pub const REFINEMENT_XTOL: f64 = 1e-4;
/// Allowed excess of the refined minimum over the grid minimum.
pub const REFINEMENT_TOLERANCE: f64 = 1e-7;
/// Largest |CP - (1 - alpha)| tolerated at the end of the search range.
pub const BOUNDARY_FLATNESS: f64 = 1e-3;

/// The unknown standardized departure `gamma` and the known correlation `rho`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scenario {
    gamma: f64,
    rho: f64,
}

impl Scenario {
    pub fn new(gamma: f64, rho: f64) -> Result<Self> {
        check_finite("gamma", gamma)?;
        check_rho(rho)?;
        Ok(Self { gamma, rho })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }
}

/// Which interval is constructed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IntervalRule {
    /// Centered on the smoothed estimator, width from the exact sd.
    Sd,
    /// Centered on the smoothed estimator, width from the delta-method sd.
    SdDelta,
    /// Post-model-selection interval, as if the selected model were given.
    Pms,
    /// The usual full-model interval `I(1 - alpha)`.
    FullModel,
}

impl IntervalRule {
    pub const ALL: [IntervalRule; 4] = [
        IntervalRule::Sd,
        IntervalRule::SdDelta,
        IntervalRule::Pms,
        IntervalRule::FullModel,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            IntervalRule::Sd => "sd",
            IntervalRule::SdDelta => "sd_delta",
            IntervalRule::Pms => "pms",
            IntervalRule::FullModel => "full_model",
        }
    }
}

impl fmt::Display for IntervalRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for IntervalRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "sd" => Ok(IntervalRule::Sd),
            "sd_delta" => Ok(IntervalRule::SdDelta),
            "pms" => Ok(IntervalRule::Pms),
            "full_model" | "full" => Ok(IntervalRule::FullModel),
            other => Err(Error::invalid(
                "rule",
                format!("unknown interval rule `{other}`"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalReport {
    pub lower: f64,
    pub upper: f64,
    pub center: f64,
    pub half_width: f64,
    pub rule: IntervalRule,
    pub nominal_coverage: f64,
}

impl IntervalReport {
    fn from_center(center: f64, half_width: f64, rule: IntervalRule, alpha: f64) -> Self {
        Self {
            lower: center - half_width,
            upper: center + half_width,
            center,
            half_width,
            rule,
            nominal_coverage: 1.0 - alpha,
        }
    }

    /// Closed-interval containment.
    pub fn contains(&self, value: f64) -> bool {
        self.lower <= value && value <= self.upper
    }

    pub fn length(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Builds one of the four intervals from a fitted model.
pub fn build_interval(
    fit: &FittedModel,
    spec: &PretestSpec,
    alpha: f64,
    rule: IntervalRule,
) -> Result<IntervalReport> {
    let alpha = check_probability("alpha", alpha)?;
    let z = z_quantile(1.0 - alpha / 2.0)?;
    build_interval_with_quantile(fit, spec, alpha, z, rule)
}

/// As [`build_interval`] with `z = z_{1 - alpha/2}` supplied by the caller.
pub(crate) fn build_interval_with_quantile(
    fit: &FittedModel,
    spec: &PretestSpec,
    alpha: f64,
    z: f64,
    rule: IntervalRule,
) -> Result<IntervalReport> {
    let scale = fit.theta_scale();
    let report = match rule {
        IntervalRule::Sd => {
            let sd = kernel::r(fit.gamma_hat, fit.rho, spec)?;
            IntervalReport::from_center(
                kernel::smoothed_estimate(fit, spec),
                z * scale * sd,
                rule,
                alpha,
            )
        }
        IntervalRule::SdDelta => {
            let sd = kernel::r_delta(fit.gamma_hat, fit.rho, spec)?;
            IntervalReport::from_center(
                kernel::smoothed_estimate(fit, spec),
                z * scale * sd,
                rule,
                alpha,
            )
        }
        IntervalRule::Pms => {
            let width = if spec.accepts(fit.gamma_hat) {
                z * scale * (1.0 - fit.rho * fit.rho).sqrt()
            } else {
                z * scale
            };
            IntervalReport::from_center(kernel::pms_estimate(fit, spec), width, rule, alpha)
        }
        IntervalRule::FullModel => {
            IntervalReport::from_center(fit.theta_hat, z * scale, rule, alpha)
        }
    };
    Ok(report)
}

/// `I(c)`: the full-model interval with coverage `c`.
pub fn full_model_interval(fit: &FittedModel, coverage: f64) -> Result<IntervalReport> {
    let c = check_probability("coverage", coverage)?;
    let z = z_quantile((1.0 + c) / 2.0)?;
    Ok(IntervalReport::from_center(
        fit.theta_hat,
        z * fit.theta_scale(),
        IntervalRule::FullModel,
        1.0 - c,
    ))
}

/// Conditional coverage given `gamma_hat = h` for an interval
/// `G in [center(h) - w(h), center(h) + w(h)]`.
#[inline]
fn conditional_coverage(lo: f64, hi: f64, s: &Scenario, h: f64, cond_sd: f64) -> f64 {
    let mu = s.rho * (h - s.gamma);
    std_interval_mass((lo - mu) / cond_sd, (hi - mu) / cond_sd)
}

fn smoothed_coverage<F>(
    rule: &QuadratureRule,
    s: &Scenario,
    spec: &PretestSpec,
    alpha: f64,
    width: F,
) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let alpha = check_probability("alpha", alpha)?;
    let z = z_quantile(1.0 - alpha / 2.0)?;
    let cond_sd = (1.0 - s.rho * s.rho).sqrt();
    let cp = rule.try_integrate(s.gamma, |h| {
        let half = z * width(h)?;
        let shift = s.rho * kernel::k(h, spec);
        Ok(conditional_coverage(
            shift - half,
            shift + half,
            s,
            h,
            cond_sd,
        ))
    })?;
    Ok(cp.clamp(0.0, 1.0))
}

/// Exact coverage probability of the sd interval.
pub fn coverage_sd(s: &Scenario, spec: &PretestSpec, alpha: f64) -> Result<f64> {
    coverage_sd_on(QuadratureRule::standard(), s, spec, alpha)
}

pub fn coverage_sd_on(
    rule: &QuadratureRule,
    s: &Scenario,
    spec: &PretestSpec,
    alpha: f64,
) -> Result<f64> {
    smoothed_coverage(rule, s, spec, alpha, |h| kernel::r_on(rule, h, s.rho, spec))
}

/// Exact coverage probability of the sd_delta interval.
pub fn coverage_sd_delta(s: &Scenario, spec: &PretestSpec, alpha: f64) -> Result<f64> {
    coverage_sd_delta_on(QuadratureRule::standard(), s, spec, alpha)
}

pub fn coverage_sd_delta_on(
    rule: &QuadratureRule,
    s: &Scenario,
    spec: &PretestSpec,
    alpha: f64,
) -> Result<f64> {
    smoothed_coverage(rule, s, spec, alpha, |h| kernel::r_delta(h, s.rho, spec))
}

/// Exact coverage probability of the post-model-selection interval.
///
/// The integrand jumps at `|h| = d`, so the integral is split there.
pub fn coverage_pms(s: &Scenario, spec: &PretestSpec, alpha: f64) -> Result<f64> {
    coverage_pms_on(QuadratureRule::standard(), s, spec, alpha)
}

pub fn coverage_pms_on(
    rule: &QuadratureRule,
    s: &Scenario,
    spec: &PretestSpec,
    alpha: f64,
) -> Result<f64> {
    let alpha = check_probability("alpha", alpha)?;
    let z = z_quantile(1.0 - alpha / 2.0)?;
    let cond_sd = (1.0 - s.rho * s.rho).sqrt();
    let narrow = z * cond_sd;
    let d = spec.cutoff();
    let cp = rule.try_integrate_split(s.gamma, &[-d, d], |h| {
        Ok(if spec.accepts(h) {
            let center = s.rho * h;
            conditional_coverage(center - narrow, center + narrow, s, h, cond_sd)
        } else {
            conditional_coverage(-z, z, s, h, cond_sd)
        })
    })?;
    Ok(cp.clamp(0.0, 1.0))
}

/// Coverage of `rule` at the scenario.
pub fn coverage(which: IntervalRule, s: &Scenario, spec: &PretestSpec, alpha: f64) -> Result<f64> {
    coverage_on(QuadratureRule::standard(), which, s, spec, alpha)
}

pub fn coverage_on(
    rule: &QuadratureRule,
    which: IntervalRule,
    s: &Scenario,
    spec: &PretestSpec,
    alpha: f64,
) -> Result<f64> {
    match which {
        IntervalRule::Sd => coverage_sd_on(rule, s, spec, alpha),
        IntervalRule::SdDelta => coverage_sd_delta_on(rule, s, spec, alpha),
        IntervalRule::Pms => coverage_pms_on(rule, s, spec, alpha),
        IntervalRule::FullModel => Ok(1.0 - check_probability("alpha", alpha)?),
    }
}

/// Result of the minimum-coverage search over `gamma >= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinCoverageReport {
    pub c_min: f64,
    pub argmin_gamma: f64,
    pub search_grid_step: f64,
    pub refinement_tolerance: f64,
    pub search_max: f64,
    pub rule: IntervalRule,
}

/// Minimum over `gamma in [0, 12]` of the coverage of `which`.
///
/// Coarse grid of step 0.05 followed by golden-section refinement around the
/// best grid point. The coverage is even in gamma, so the half line suffices.
pub fn min_coverage(
    rho: f64,
    spec: &PretestSpec,
    alpha: f64,
    which: IntervalRule,
) -> Result<MinCoverageReport> {
    check_rho(rho)?;
    let alpha = check_probability("alpha", alpha)?;
    if which == IntervalRule::FullModel {
        return Err(Error::invalid(
            "which",
            "minimum coverage is defined for the sd, sd_delta and pms intervals",
        ));
    }
    let cp = |g: f64| -> Result<f64> {
        coverage(which, &Scenario::new(g, rho)?, spec, alpha).map_err(|e| Error::AtGamma {
            gamma: g,
            source: Box::new(e),
        })
    };

    let grid = gamma_grid(GAMMA_SEARCH_MAX, SEARCH_GRID_STEP)?;
    let values: Vec<f64> = grid.par_iter().map(|&g| cp(g)).collect::<Result<_>>()?;

    let last = *values.last().expect("grid is nonempty");
    if (last - (1.0 - alpha)).abs() > BOUNDARY_FLATNESS {
        return Err(Error::Convergence(format!(
            "coverage {last} at gamma = {GAMMA_SEARCH_MAX} has not flattened to {}",
            1.0 - alpha
        )));
    }

    // earliest grid point wins ties, so a flat function reports gamma = 0
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v < values[best] - 1e-14 {
            best = i;
        }
    }
    if best == grid.len() - 1 {
        return Err(Error::Convergence(format!(
            "minimum coverage sits on the search boundary gamma = {GAMMA_SEARCH_MAX}"
        )));
    }

    let lo = if best == 0 { 0.0 } else { grid[best - 1] };
    let hi = grid[best + 1];
    let (g_ref, v_ref) = golden_section_min(lo, hi, REFINEMENT_XTOL, cp)?;
    let (argmin_gamma, c_min) = if v_ref < values[best] - 1e-14 {
        (g_ref, v_ref)
    } else {
        (grid[best], values[best])
    };
    Ok(MinCoverageReport {
        c_min,
        argmin_gamma,
        search_grid_step: SEARCH_GRID_STEP,
        refinement_tolerance: REFINEMENT_TOLERANCE,
        search_max: GAMMA_SEARCH_MAX,
        rule: which,
    })
}

/// Golden-section minimization of a unimodal function on `[lo, hi]`.
pub(crate) fn golden_section_min<F>(mut lo: f64, mut hi: f64, xtol: f64, f: F) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64>,
{
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    const MAX_ITER: usize = 200;
    let mut c = hi - INV_PHI * (hi - lo);
    let mut d = lo + INV_PHI * (hi - lo);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    for _ in 0..MAX_ITER {
        if hi - lo <= xtol {
            return Ok(if fc <= fd { (c, fc) } else { (d, fd) });
        }
        if fc <= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - INV_PHI * (hi - lo);
            fc = f(c)?;
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + INV_PHI * (hi - lo);
            fd = f(d)?;
        }
    }
    Err(Error::Convergence(format!(
        "golden section did not reach width {xtol} in {MAX_ITER} iterations"
    )))
}

/// `z_{1 - alpha/2} / z_{(1 + c_min)/2}`.
fn length_scale(alpha: f64, c_min: f64) -> Result<f64> {
    let alpha = check_probability("alpha", alpha)?;
    let c_min = check_probability("c_min", c_min)?;
    Ok(z_quantile(1.0 - alpha / 2.0)? / z_quantile((1.0 + c_min) / 2.0)?)
}

/// Scaled expected length of the sd interval; `c_min` must be the minimum
/// coverage of the sd interval.
pub fn sel_sd(s: &Scenario, spec: &PretestSpec, alpha: f64, c_min: f64) -> Result<f64> {
    sel_sd_on(QuadratureRule::standard(), s, spec, alpha, c_min)
}

pub fn sel_sd_on(
    rule: &QuadratureRule,
    s: &Scenario,
    spec: &PretestSpec,
    alpha: f64,
    c_min: f64,
) -> Result<f64> {
    let scale = length_scale(alpha, c_min)?;
    if s.rho == 0.0 {
        return Ok(scale);
    }
    let mean_r = rule.try_integrate(s.gamma, |h| kernel::r_on(rule, h, s.rho, spec))?;
    Ok(scale * mean_r)
}

/// Scaled expected length of the sd_delta interval; `c_min` must be the
/// minimum coverage of the sd_delta interval.
pub fn sel_sd_delta(s: &Scenario, spec: &PretestSpec, alpha: f64, c_min: f64) -> Result<f64> {
    sel_sd_delta_on(QuadratureRule::standard(), s, spec, alpha, c_min)
}

pub fn sel_sd_delta_on(
    rule: &QuadratureRule,
    s: &Scenario,
    spec: &PretestSpec,
    alpha: f64,
    c_min: f64,
) -> Result<f64> {
    let scale = length_scale(alpha, c_min)?;
    if s.rho == 0.0 {
        return Ok(scale);
    }
    let mean_r = rule.try_integrate(s.gamma, |h| kernel::r_delta(h, s.rho, spec))?;
    Ok(scale * mean_r)
}

/// Quantity tabulated by [`curve`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quantity {
    Cp,
    CpDelta,
    Sel,
    SelDelta,
    CpPms,
}

impl Quantity {
    pub fn name(&self) -> &'static str {
        match self {
            Quantity::Cp => "cp",
            Quantity::CpDelta => "cp_delta",
            Quantity::Sel => "sel",
            Quantity::SelDelta => "sel_delta",
            Quantity::CpPms => "cp_pms",
        }
    }

    pub fn is_coverage(&self) -> bool {
        matches!(self, Quantity::Cp | Quantity::CpDelta | Quantity::CpPms)
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Quantity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "cp" => Ok(Quantity::Cp),
            "cp_delta" => Ok(Quantity::CpDelta),
            "sel" => Ok(Quantity::Sel),
            "sel_delta" => Ok(Quantity::SelDelta),
            "cp_pms" => Ok(Quantity::CpPms),
            other => Err(Error::invalid(
                "quantity",
                format!("unknown quantity `{other}`"),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveTable {
    pub gammas: Vec<f64>,
    pub values: Vec<f64>,
    pub quantity: Quantity,
    pub scenario_rho: f64,
    pub alpha: f64,
    pub pretest: PretestSpec,
    /// Minimum coverage used to scale SEL quantities.
    pub c_min: Option<f64>,
}

impl CurveTable {
    pub fn len(&self) -> usize {
        self.gammas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gammas.is_empty()
    }

    pub fn min(&self) -> (f64, f64) {
        self.extreme(|a, b| a < b)
    }

    pub fn max(&self) -> (f64, f64) {
        self.extreme(|a, b| a > b)
    }

    fn extreme(&self, better: impl Fn(f64, f64) -> bool) -> (f64, f64) {
        let mut best = 0;
        for i in 1..self.values.len() {
            if better(self.values[i], self.values[best]) {
                best = i;
            }
        }
        (self.gammas[best], self.values[best])
    }

    pub fn value_at(&self, gamma: f64) -> Option<f64> {
        self.gammas
            .iter()
            .position(|&g| g == gamma)
            .map(|i| self.values[i])
    }
}

/// `{0, step, 2 step, ...}` up to `gamma_max` (inclusive, with a relative
/// slack of 1e-9 steps). Points are `i * step`, so halving the step
/// reproduces every coarse point bit for bit.
pub fn gamma_grid(gamma_max: f64, step: f64) -> Result<Vec<f64>> {
    let step = crate::error::check_positive("step", step)?;
    let gamma_max = crate::error::check_positive("gamma_max", gamma_max)?;
    if gamma_max < step {
        return Err(Error::invalid(
            "gamma_max",
            format!("{gamma_max} is smaller than the step {step}"),
        ));
    }
    let n = (gamma_max / step + 1e-9).floor() as usize;
    if n > 10_000_000 {
        return Err(Error::invalid(
            "step",
            format!("grid of {n} points is too large"),
        ));
    }
    Ok((0..=n).map(|i| i as f64 * step).collect())
}

/// Tabulates `quantity` on the gamma grid.
pub fn curve(
    quantity: Quantity,
    rho: f64,
    spec: &PretestSpec,
    alpha: f64,
    gamma_max: f64,
    step: f64,
) -> Result<CurveTable> {
    check_rho(rho)?;
    let alpha = check_probability("alpha", alpha)?;
    let gammas = gamma_grid(gamma_max, step)?;

    let c_min = match quantity {
        Quantity::Sel => Some(min_coverage(rho, spec, alpha, IntervalRule::Sd)?.c_min),
        Quantity::SelDelta => Some(min_coverage(rho, spec, alpha, IntervalRule::SdDelta)?.c_min),
        _ => None,
    };

    let eval = |g: f64| -> Result<f64> {
        let s = Scenario::new(g, rho)?;
        match quantity {
            Quantity::Cp => coverage_sd(&s, spec, alpha),
            Quantity::CpDelta => coverage_sd_delta(&s, spec, alpha),
            Quantity::CpPms => coverage_pms(&s, spec, alpha),
            Quantity::Sel => sel_sd(&s, spec, alpha, c_min.expect("computed above")),
            Quantity::SelDelta => sel_sd_delta(&s, spec, alpha, c_min.expect("computed above")),
        }
        .map_err(|e| Error::AtGamma {
            gamma: g,
            source: Box::new(e),
        })
    };
    let values: Vec<f64> = gammas.par_iter().map(|&g| eval(g)).collect::<Result<_>>()?;

    Ok(CurveTable {
        gammas,
        values,
        quantity,
        scenario_rho: rho,
        alpha,
        pretest: *spec,
        c_min,
    })
}

/// Maximum over `gamma in [0, 12]` of the scaled expected length of the sd
/// (`Sd`) or sd_delta (`SdDelta`) interval, as `(argmax, max, c_min)`.
pub fn max_sel(
    rho: f64,
    spec: &PretestSpec,
    alpha: f64,
    which: IntervalRule,
) -> Result<(f64, f64, f64)> {
    let c_min = min_coverage(rho, spec, alpha, which)?.c_min;
    let sel = |g: f64| -> Result<f64> {
        let s = Scenario::new(g, rho)?;
        match which {
            IntervalRule::Sd => sel_sd(&s, spec, alpha, c_min),
            IntervalRule::SdDelta => sel_sd_delta(&s, spec, alpha, c_min),
            _ => Err(Error::invalid(
                "which",
                "scaled expected length is defined for sd and sd_delta",
            )),
        }
    };
    let grid = gamma_grid(GAMMA_SEARCH_MAX, SEARCH_GRID_STEP)?;
    let values: Vec<f64> = grid.par_iter().map(|&g| sel(g)).collect::<Result<_>>()?;
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] + 1e-14 {
            best = i;
        }
    }
    let lo = if best == 0 { 0.0 } else { grid[best - 1] };
    let hi = if best + 1 < grid.len() {
        grid[best + 1]
    } else {
        grid[best]
    };
    let (g, neg) = golden_section_min(lo, hi, REFINEMENT_XTOL, |g| sel(g).map(|v| -v))?;
    if -neg > values[best] {
        Ok((g, -neg, c_min))
    } else {
        Ok((grid[best], values[best], c_min))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ALPHA: f64 = 0.05;

    fn spec() -> PretestSpec {
        PretestSpec::from_size(0.1).unwrap()
    }

    fn sc(g: f64, rho: f64) -> Scenario {
        Scenario::new(g, rho).unwrap()
    }

    #[test]
    fn scenario_validation() {
        assert!(Scenario::new(0.0, 0.9991).is_err());
        assert!(Scenario::new(f64::INFINITY, 0.5).is_err());
        assert!(Scenario::new(1.0, -0.999).is_ok());
    }

    #[test]
    fn rule_and_quantity_names_round_trip() {
        for rule in IntervalRule::ALL {
            assert_eq!(rule.name().parse::<IntervalRule>().unwrap(), rule);
        }
        for q in [
            Quantity::Cp,
            Quantity::CpDelta,
            Quantity::Sel,
            Quantity::SelDelta,
            Quantity::CpPms,
        ] {
            assert_eq!(q.name().parse::<Quantity>().unwrap(), q);
        }
        assert!("bogus".parse::<IntervalRule>().is_err());
        assert!("cp-delta".parse::<Quantity>().is_ok());
    }

    #[test]
    fn intervals_from_fit() {
        let s = spec();
        let fit = FittedModel::new(0.4, 1.2, 1.3, 0.7, 2.0, 0.0).unwrap();
        let full = build_interval(&fit, &s, ALPHA, IntervalRule::FullModel).unwrap();
        let sd = build_interval(&fit, &s, ALPHA, IntervalRule::Sd).unwrap();
        let sdd = build_interval(&fit, &s, ALPHA, IntervalRule::SdDelta).unwrap();
        assert_eq!((sd.lower, sd.upper), (full.lower, full.upper));
        assert_eq!((sdd.lower, sdd.upper), (full.lower, full.upper));

        let fit = FittedModel::new(0.0, 0.0, 1.0, 1.0, 1.0, 0.7).unwrap();
        let sdd = build_interval(&fit, &s, ALPHA, IntervalRule::SdDelta).unwrap();
        let want = 1.959_963_984_540_054 * kernel::r_delta(0.0, 0.7, &s).unwrap();
        assert!((sdd.half_width - want).abs() < 1e-14);
        assert_eq!(sdd.center, 0.0);

        let fit = FittedModel::new(2.5, 4.0, 1.0, 1.0, 1.0, 0.7).unwrap();
        let full = build_interval(&fit, &s, ALPHA, IntervalRule::FullModel).unwrap();
        assert!((full.lower - (2.5 - 1.959_963_984_540_054)).abs() < 1e-14);
        assert!((full.upper - (2.5 + 1.959_963_984_540_054)).abs() < 1e-14);
        assert!((full.center - 0.5 * (full.lower + full.upper)).abs() < 1e-15);

        // accepted pretest: narrower by sqrt(1 - rho^2)
        let fit = FittedModel::new(2.5, 0.5, 1.0, 1.0, 1.0, 0.6).unwrap();
        let pms = build_interval(&fit, &s, ALPHA, IntervalRule::Pms).unwrap();
        let full = build_interval(&fit, &s, ALPHA, IntervalRule::FullModel).unwrap();
        assert!((pms.half_width / full.half_width - 0.8).abs() < 1e-15);
        assert!((pms.center - (2.5 - 0.6 * 0.5)).abs() < 1e-15);

        assert!(build_interval(&fit, &s, 0.0, IntervalRule::Sd).is_err());
        assert!(build_interval(&fit, &s, 1.0, IntervalRule::Sd).is_err());
        let i = full_model_interval(&fit, 0.95).unwrap();
        assert!((i.half_width - 1.959_963_984_540_054).abs() < 1e-14);
    }

    #[test]
    fn rho_zero_gives_nominal_coverage() {
        let s = spec();
        for g in [0.0, 0.9, 3.0, 7.5] {
            let c = sc(g, 0.0);
            for which in [IntervalRule::Sd, IntervalRule::SdDelta, IntervalRule::Pms] {
                let v = coverage(which, &c, &s, ALPHA).unwrap();
                assert!((v - 0.95).abs() < 1e-9, "{which} at {g}: {v}");
            }
        }
    }

    #[test]
    fn coverage_is_even() {
        let s = spec();
        for g in [0.0, 1.0, 2.0, 4.0] {
            for rho in [0.3, 0.7] {
                for which in [IntervalRule::SdDelta, IntervalRule::Pms] {
                    let base = coverage(which, &sc(g, rho), &s, ALPHA).unwrap();
                    let mg = coverage(which, &sc(-g, rho), &s, ALPHA).unwrap();
                    let mr = coverage(which, &sc(g, -rho), &s, ALPHA).unwrap();
                    assert!((base - mg).abs() < 1e-9, "{which} {g} {rho}");
                    assert!((base - mr).abs() < 1e-9, "{which} {g} {rho}");
                }
            }
        }
    }

    #[test]
    fn pms_coverage_far_from_submodel() {
        let v = coverage_pms(&sc(10.0, 0.7), &spec(), ALPHA).unwrap();
        assert!((v - 0.95).abs() < 1e-3);
    }

    #[test]
    fn pms_coverage_against_direct_two_dimensional_sum() {
        // brute force: P(theta in PMS interval) by a fine midpoint double sum
        // over (gamma_hat, G) with the joint bivariate normal density
        let s = spec();
        let (gamma, rho) = (1.4, 0.7);
        let z = z_quantile(0.975).unwrap();
        let d = s.cutoff();
        let n = 1600;
        let (lo, hi) = (gamma - 8.0, gamma + 8.0);
        let dh = (hi - lo) / n as f64;
        let det = 1.0 - rho * rho;
        let mut total = 0.0;
        for i in 0..n {
            let h = lo + (i as f64 + 0.5) * dh;
            for j in 0..n {
                let g = -8.0 + (j as f64 + 0.5) * 16.0 / n as f64;
                let e = h - gamma;
                let dens = (-(g * g - 2.0 * rho * g * e + e * e) / (2.0 * det)).exp()
                    / (2.0 * std::f64::consts::PI * det.sqrt());
                let covered = if h.abs() <= d {
                    (g - rho * h).abs() <= z * det.sqrt()
                } else {
                    g.abs() <= z
                };
                if covered {
                    total += dens * dh * 16.0 / n as f64;
                }
            }
        }
        let exact = coverage_pms(&sc(gamma, rho), &s, ALPHA).unwrap();
        assert!((total - exact).abs() < 2e-3, "brute {total} vs {exact}");
    }

    #[test]
    fn golden_section_finds_parabola_minimum() {
        let (x, fx) =
            golden_section_min(0.0, 3.0, 1e-8, |x| Ok((x - 1.234).powi(2) + 0.5)).unwrap();
        assert!((x - 1.234).abs() < 1e-7);
        assert!((fx - 0.5).abs() < 1e-12);
    }

    #[test]
    fn min_coverage_rho_zero_is_flat() {
        let s = spec();
        for which in [IntervalRule::Sd, IntervalRule::SdDelta, IntervalRule::Pms] {
            let rep = min_coverage(0.0, &s, ALPHA, which).unwrap();
            assert!((rep.c_min - 0.95).abs() < 1e-9);
            assert_eq!(rep.argmin_gamma, 0.0);
        }
        assert!(min_coverage(0.5, &s, ALPHA, IntervalRule::FullModel).is_err());
    }

    #[test]
    fn min_coverage_ordering() {
        let s = spec();
        let delta = min_coverage(0.7, &s, ALPHA, IntervalRule::SdDelta).unwrap();
        let pms = min_coverage(0.7, &s, ALPHA, IntervalRule::Pms).unwrap();
        assert!(delta.c_min < 0.95);
        assert!(pms.c_min < delta.c_min);
        assert!(
            delta.search_grid_step == SEARCH_GRID_STEP
                && delta.refinement_tolerance == REFINEMENT_TOLERANCE
        );
        for g in gamma_grid(GAMMA_SEARCH_MAX, 0.25).unwrap() {
            let v = coverage_sd_delta(&sc(g, 0.7), &s, ALPHA).unwrap();
            assert!(delta.c_min <= v + REFINEMENT_TOLERANCE);
        }
    }

    #[test]
    fn sel_delta_limits() {
        let s = spec();
        let cmin = min_coverage(0.7, &s, ALPHA, IntervalRule::SdDelta)
            .unwrap()
            .c_min;
        let at0 = sel_sd_delta(&sc(0.0, 0.7), &s, ALPHA, cmin).unwrap();
        assert!(at0 < 1.0);
        let at10 = sel_sd_delta(&sc(10.0, 0.7), &s, ALPHA, cmin).unwrap();
        let at12 = sel_sd_delta(&sc(12.0, 0.7), &s, ALPHA, cmin).unwrap();
        assert!((at10 - at12).abs() < 1e-4);
        let limit = z_quantile(0.975).unwrap() / z_quantile((1.0 + cmin) / 2.0).unwrap();
        assert!(limit >= 1.0);
        assert!((at12 - limit).abs() < 1e-4);
        for g in [0.0, 2.0, 5.0] {
            assert_eq!(sel_sd_delta(&sc(g, 0.0), &s, ALPHA, 0.95).unwrap(), 1.0);
        }
        assert!(sel_sd_delta(&sc(0.0, 0.7), &s, ALPHA, 1.0).is_err());
    }

    #[test]
    fn grid_construction() {
        let g = gamma_grid(10.0, 0.1).unwrap();
        assert_eq!(g.len(), 101);
        assert_eq!(g[0], 0.0);
        assert!((g[100] - 10.0).abs() < 1e-12);
        let fine = gamma_grid(10.0, 0.05).unwrap();
        for (i, &x) in g.iter().enumerate() {
            assert_eq!(fine[2 * i].to_bits(), x.to_bits());
        }
        assert!(gamma_grid(0.01, 0.1).is_err());
        assert!(gamma_grid(1.0, 0.0).is_err());
    }

    #[test]
    fn curve_rho_zero_and_determinism() {
        let s = spec();
        let t = curve(Quantity::Cp, 0.0, &s, ALPHA, 2.0, 0.5).unwrap();
        assert_eq!(t.len(), 5);
        assert!(t.values.iter().all(|v| (v - 0.95).abs() < 1e-9));

        let coarse = curve(Quantity::CpDelta, 0.7, &s, ALPHA, 3.0, 0.5).unwrap();
        let fine = curve(Quantity::CpDelta, 0.7, &s, ALPHA, 3.0, 0.25).unwrap();
        for (g, v) in coarse.gammas.iter().zip(&coarse.values) {
            assert_eq!(fine.value_at(*g).unwrap().to_bits(), v.to_bits());
        }
        assert!(curve(Quantity::Cp, 1.0, &s, ALPHA, 2.0, 0.5).is_err());
    }
}
