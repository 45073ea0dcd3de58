use std::sync::OnceLock;

use super::normal::{cdf, pdf};
use crate::error::{Error, Result};

/// Truncation half-width of every integral against a shifted normal density.
pub const DEFAULT_HALF_WIDTH: f64 = 8.0;
pub const DEFAULT_PANELS: usize = 40;
/// Gauss-Legendre nodes per panel.
pub const DEFAULT_ORDER: usize = 10;

/// A composite Gauss-Legendre rule for the standard normal measure on
/// `[-W, W]`.
///
/// `nodes` are abscissae in the standardized variable `z = h - gamma` and each
/// weight already includes the density `phi(z)`, so
/// `sum_i weights[i] * f(gamma + nodes[i])` approximates
/// `int f(h) phi(h - gamma) dh` over `|h - gamma| <= W`.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    support: (f64, f64),
    panel_width: f64,
    reference: Vec<(f64, f64)>,
}

impl QuadratureRule {
    pub fn composite(panels: usize, order: usize, half_width: f64) -> Result<Self> {
        if panels == 0 {
            return Err(Error::invalid("panels", "at least one panel is required"));
        }
        if order < 2 {
            return Err(Error::invalid("order", "need at least two nodes per panel"));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::invalid(
                "half_width",
                format!("must be positive, got {half_width}"),
            ));
        }
        let reference = gauss_legendre(order);
        let panel_width = 2.0 * half_width / panels as f64;
        let mut nodes = Vec::with_capacity(panels * order);
        let mut weights = Vec::with_capacity(panels * order);
        for p in 0..panels {
            let lo = -half_width + p as f64 * panel_width;
            let mid = lo + 0.5 * panel_width;
            for &(x, w) in &reference {
                let z = mid + 0.5 * panel_width * x;
                nodes.push(z);
                weights.push(0.5 * panel_width * w * pdf(z));
            }
        }
        Ok(Self {
            nodes,
            weights,
            support: (-half_width, half_width),
            panel_width,
            reference,
        })
    }

    /// The shared 40 x 10 rule on [-8, 8].
    pub fn standard() -> &'static QuadratureRule {
        static RULE: OnceLock<QuadratureRule> = OnceLock::new();
        RULE.get_or_init(|| {
            QuadratureRule::composite(DEFAULT_PANELS, DEFAULT_ORDER, DEFAULT_HALF_WIDTH)
                .expect("default rule parameters are valid")
        })
    }

    /// Same support, twice as many panels.
    pub fn refined(&self) -> QuadratureRule {
        let panels = self.nodes.len() / self.reference.len();
        QuadratureRule::composite(2 * panels, self.reference.len(), self.support.1)
            .expect("refining a valid rule")
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn support(&self) -> (f64, f64) {
        self.support
    }

    pub fn half_width(&self) -> f64 {
        self.support.1
    }

    /// `int f(h) phi(h - gamma) dh` over the truncated support.
    pub fn integrate<F>(&self, gamma: f64, mut f: F) -> Result<f64>
    where
        F: FnMut(f64) -> f64,
    {
        self.try_integrate(gamma, |h| Ok(f(h)))
    }

    pub fn try_integrate<F>(&self, gamma: f64, mut f: F) -> Result<f64>
    where
        F: FnMut(f64) -> Result<f64>,
    {
        let mut acc = 0.0;
        for (&z, &w) in self.nodes.iter().zip(&self.weights) {
            let h = gamma + z;
            let v = f(h)?;
            if !v.is_finite() {
                return Err(Error::NonFiniteIntegrand { at: h });
            }
            acc += w * v;
        }
        Ok(acc)
    }

    /// Like [`try_integrate`](Self::try_integrate), but the support is first
    /// cut at every breakpoint (in `h`) that falls strictly inside it, so an
    /// integrand with jumps at those points is integrated piece by piece.
    ///
    /// Each piece gets `ceil(len / panel_width)` panels of the same order.
    pub fn try_integrate_split<F>(&self, gamma: f64, breakpoints: &[f64], mut f: F) -> Result<f64>
    where
        F: FnMut(f64) -> Result<f64>,
    {
        let lo = gamma + self.support.0;
        let hi = gamma + self.support.1;
        let mut cuts: Vec<f64> = breakpoints
            .iter()
            .copied()
            .filter(|&b| b > lo && b < hi)
            .collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();

        let mut edges = Vec::with_capacity(cuts.len() + 2);
        edges.push(lo);
        edges.extend(cuts);
        edges.push(hi);

        let mut acc = 0.0;
        for piece in edges.windows(2) {
            let (a, b) = (piece[0], piece[1]);
            let panels = ((b - a) / self.panel_width).ceil().max(1.0) as usize;
            let width = (b - a) / panels as f64;
            for p in 0..panels {
                let mid = a + (p as f64 + 0.5) * width;
                for &(x, w) in &self.reference {
                    let h = mid + 0.5 * width * x;
                    let v = f(h)?;
                    if !v.is_finite() {
                        return Err(Error::NonFiniteIntegrand { at: h });
                    }
                    acc += 0.5 * width * w * pdf(h - gamma) * v;
                }
            }
        }
        Ok(acc)
    }

    /// Normal mass the rule should reproduce for the constant integrand.
    pub fn expected_mass(&self) -> f64 {
        cdf(self.support.1) - cdf(self.support.0)
    }
}

/// `int f(h) phi(h - gamma) dh` with the shared rule.
pub fn integrate_against_shifted_normal<F>(f: F, gamma: f64) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    if !gamma.is_finite() {
        return Err(Error::invalid(
            "gamma",
            format!("must be finite, got {gamma}"),
        ));
    }
    QuadratureRule::standard().integrate(gamma, f)
}

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1],
/// by Newton iteration on the Legendre recurrence.
fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut rule = vec![(0.0, 0.0); n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut deriv = 0.0;
        for _ in 0..100 {
            let (p, dp) = legendre(n, x);
            deriv = dp;
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(n, x);
        if dp != 0.0 {
            deriv = dp;
        }
        let w = 2.0 / ((1.0 - x * x) * deriv * deriv);
        rule[i] = (-x, w);
        rule[n - 1 - i] = (x, w);
    }
    if n % 2 == 1 {
        rule[n / 2].0 = 0.0;
    }
    rule
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_rule_integrates_polynomials_exactly() {
        let rule = gauss_legendre(10);
        assert!((rule.iter().map(|r| r.1).sum::<f64>() - 2.0).abs() < 1e-14);
        for deg in 0..20usize {
            let exact = if deg % 2 == 1 {
                0.0
            } else {
                2.0 / (deg as f64 + 1.0)
            };
            let got: f64 = rule.iter().map(|&(x, w)| w * x.powi(deg as i32)).sum();
            assert!((got - exact).abs() < 1e-14, "degree {deg}");
        }
    }

    #[test]
    fn rule_invariants() {
        let rule = QuadratureRule::standard();
        assert_eq!(rule.nodes().len(), 400);
        assert!(rule.nodes().windows(2).all(|w| w[0] < w[1]));
        assert!(rule.weights().iter().all(|&w| w > 0.0));
        let mass: f64 = rule.weights().iter().sum();
        assert!((mass - rule.expected_mass()).abs() < 1e-12);
    }

    #[test]
    fn moments_of_shifted_normal() {
        let one = integrate_against_shifted_normal(|_| 1.0, 0.3).unwrap();
        assert!(one <= 1.0 && 1.0 - one < 1e-14);
        let mean = integrate_against_shifted_normal(|h| h, 2.5).unwrap();
        assert!((mean - 2.5).abs() < 1e-9);
        let var = integrate_against_shifted_normal(|h| h * h, 0.0).unwrap();
        assert!((var - 1.0).abs() < 1e-9);
    }

    #[test]
    fn non_finite_integrand_is_reported() {
        let err = integrate_against_shifted_normal(|h| if h > 1.0 { f64::NAN } else { h }, 0.0)
            .unwrap_err();
        assert!(matches!(err, Error::NonFiniteIntegrand { .. }));
        assert!(integrate_against_shifted_normal(|h| h, f64::NAN).is_err());
    }

    #[test]
    fn split_integration_handles_jumps() {
        let rule = QuadratureRule::standard();
        let d = 1.3;
        // P(|Z| <= d) for Z ~ N(0.4, 1)
        let got = rule
            .try_integrate_split(0.4, &[-d, d], |h| Ok(if h.abs() <= d { 1.0 } else { 0.0 }))
            .unwrap();
        let exact = cdf(d - 0.4) - cdf(-d - 0.4);
        assert!((got - exact).abs() < 1e-13);
        // a breakpoint outside the support is ignored
        let all = rule.try_integrate_split(0.0, &[50.0], |_| Ok(1.0)).unwrap();
        assert!((all - rule.expected_mass()).abs() < 1e-13);
    }

    #[test]
    fn refined_rule_agrees() {
        let coarse = QuadratureRule::standard();
        let fine = coarse.refined();
        assert_eq!(fine.nodes().len(), 800);
        let f = |h: f64| (h * 0.7).sin() * (-0.1 * h * h).exp() + h.cos();
        for g in [0.0, 1.5, 4.0] {
            let a = coarse.integrate(g, f).unwrap();
            let b = fine.integrate(g, f).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn invalid_construction() {
        assert!(QuadratureRule::composite(0, 10, 8.0).is_err());
        assert!(QuadratureRule::composite(4, 1, 8.0).is_err());
        assert!(QuadratureRule::composite(4, 10, -1.0).is_err());
    }
}
