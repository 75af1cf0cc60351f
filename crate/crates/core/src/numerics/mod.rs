//! Stable numerical kernels shared by the pricing modules.

mod hyperbolic;
mod root;
mod series;

pub use hyperbolic::{
    coth, exp_cosh_ratio, exp_integral, exp_sinh_ratio, expm1_minus_x_over_x2, ln_exp_sinh_ratio,
    scaled_sinh_quotient, x_over_sinh, xi_exponent,
};
pub use root::{bracketed_root, RootResult};
pub use series::{
    discounted_linear_exp_integral, discounted_linear_exp_tail, sum_series, KahanSum, SeriesResult,
    DEFAULT_N_MAX, DEFAULT_TOL,
};

/// Smallest |drift / sigma^2| treated as nonzero by the closed forms.
pub const DRIFT_EPS: f64 = 1e-8;
