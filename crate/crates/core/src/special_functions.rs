//! Special functions and numerical kernels shared by the rest of the crate.

pub mod bessel;
pub mod quadrature;
pub mod roots;

pub use bessel::{bessel_k, bessel_k_ratio, bessel_k_scaled, BesselOrder};
pub use quadrature::{integrate, GaussLegendre, QuadratureSpec};
pub use roots::{find_root, BracketSolverSpec};
