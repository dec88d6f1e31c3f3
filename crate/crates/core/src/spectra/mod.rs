//! Low-frequency content of boundary traces: Laplace samples `û(p, ·)` and the
//! Taylor coefficients `u^(k)` at p = 0.
//!
//! Two independent routes produce [`SeriesCoefficients`]: time moments of a
//! recorded trace ([`series_from_trace`]) and polynomial fits to lattice
//! solutions of the frequency-domain equation ([`fit_series`] over
//! [`elliptic_samples`]). [`cross_validate`] compares them.

pub mod fit;
pub mod frequency;
pub mod moments;
pub mod series;

pub use fit::{default_delta_fit, elliptic_samples, fit_frequencies, fit_series, LaplaceSamples};
pub use frequency::{aligned_lattice, elliptic_frequency_oracle, homogeneous_frequency_value, solve_frequency, FrequencyOptions};
pub use moments::{coeffs_from_moments, laplace_at, series_from_trace, time_moments, MomentOptions};
pub use series::{cross_validate, CrossValidation, SeriesCoefficients};
