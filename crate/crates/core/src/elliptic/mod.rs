//! Harmonic test functions, the Dirichlet Green function of the ball, and
//! boundary functionals that turn Cauchy data of `u^(k)` into interior
//! integrals of `−Δu^(k)` against harmonic weights.

pub mod cauchy;
pub mod green;
pub mod harmonic;

pub use cauchy::{green_identity_functional, mean_value_check, CauchyData};
pub use green::{
    conormal_point_source, green_ball, green_ball_gradient, point_source_radial_derivative, point_source_solution,
    PointMassSet,
};
pub use harmonic::{library, Harmonic, HarmonicKind};
