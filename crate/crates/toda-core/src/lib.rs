//! Solution families of the 1+2 continuous Toda chain
//! `(ln u)_xy = u_zz` and the numerical machinery that certifies them:
//! finite-difference residual operators, hodograph inversions, quadrature,
//! and refinement studies.

pub mod error;
pub mod field;
pub mod geom;
pub mod ode;
pub mod quad;
pub mod monge;
pub mod residuals;
pub mod roots;
pub mod stencil;

pub use error::{Error, Result};
pub use field::{exp_field, linear_fraction_field, Field3, FnField, GridScalar};
pub use geom::{Axis, Grid3, Point3};
pub use residuals::{
    convergence_order, discrete_chain_residual, residual_report, symmetry_residual,
    system2_residuals, system3_residuals, theta_residual, toda_residual, ResidualKind,
    ResidualReport, SymmetryPair, VerifyBundle,
};
pub use stencil::{central_diff, mixed_diff_xy, second_diff, DerivField, StencilConfig};
