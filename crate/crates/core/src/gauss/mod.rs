//! Standard normal primitives and the fixed-order quadrature engine used by
//! every exact functional in the crate.

mod normal;
mod quadrature;

pub use normal::{interval_probability, normal_cdf, normal_pdf, z_quantile};
pub use quadrature::{
    integrate_against_shifted_normal, QuadratureRule, DEFAULT_HALF_WIDTH, DEFAULT_ORDER,
    DEFAULT_PANELS,
};

#[cfg(test)]
pub(crate) use normal::cdf;
pub(crate) use normal::{pdf, sf, std_interval_mass};
