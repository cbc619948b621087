//! Shared numerical kernels: quadrature, root finding, interpolation,
//! banded linear algebra, bicubic surface fitting, and ODE integration.

pub mod banded;
pub mod bicubic;
pub mod interp;
pub mod ode;
pub mod quad;
pub mod root;
