//! Passive photoacoustic inversion toolkit.
//!
//! Simulates boundary wave data for piecewise-constant sound speeds over ball
//! inclusions ([`forward`]), converts traces into low-frequency power-series
//! coefficients ([`spectra`]), and inverts those for the inclusion centres,
//! speeds and the initial pressure ([`elliptic`], [`recon`]). The [`harness`]
//! module holds configuration, manifests, noise injection and sweeps.

pub mod elliptic;
pub mod error;
pub mod forward;
pub mod geom;
pub mod harness;
pub mod lattice;
pub mod medium;
pub mod quad;
pub mod recon;
pub mod spectra;

pub use error::{Error, Result, Warning};
