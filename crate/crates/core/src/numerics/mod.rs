//! Special functions, entropies and quadrature shared by the analyses.

mod entropy;
mod quadrature;
mod special;
mod values;

pub use entropy::{binary_entropy, h2, shannon_entropy, shannon_entropy_of};
pub use quadrature::{
    integrate_1d, integrate_vec, integrate_with_breakpoints, Integral, QuadratureOptions,
};
pub use special::{
    erf, erfc, ln_factorial, ln_gamma, ln_i0e, log_bessel_i0, log_kummer_1f1, poisson_cdf,
    poisson_pmf_ln, BESSEL_SWITCH, KUMMER_SWITCH,
};
pub use values::{LogScaledValue, ProbabilityDistribution, DISTRIBUTION_TOL};
