//! Numerical building blocks: quadrature, root finding, the normal
//! distribution and tabulated functions.

pub mod chebyshev;
pub mod monotone;
pub mod normal;
pub mod quadrature;
pub mod roots;

pub use chebyshev::{geometric_breaks, CumulativeTable};
pub use monotone::{tabulate_monotone, tabulate_on, TabulatedMonotone};
pub use normal::{normal_cdf, normal_isf, normal_pdf, normal_quantile, normal_sf};
pub use quadrature::{integrate, integrate_detailed, integrate_with_breaks, QuadEstimate, QuadratureConfig};
pub use roots::{find_root, find_root_with_values};
