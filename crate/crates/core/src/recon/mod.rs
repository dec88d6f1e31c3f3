//! Inversion pipeline: `B` from `u^(2)`, harmonic moments of the slowness
//! contrast from `u^(4)` Cauchy data, matrix-pencil localisation of the
//! resulting signed point masses, speed recovery under a radius prior,
//! single-inclusion stability probes, and time-reversal recovery of `f`.

pub mod moments;
pub mod pipeline;
pub mod prony;
pub mod reversal;
pub mod speeds;
pub mod stability;

pub use moments::{
    background_mass, contrast_moments, recover_b, BEstimate, ContrastData, MomentSequence, MomentSource, CONSTANCY_TOL,
    synthetic_contrast_data,
};
pub use prony::{prony_frame, prony_localize, FrameSolution, PronyOptions};
pub use reversal::{required_horizon, time_reversal, ReversalOptions, ReversalResult};
pub use speeds::{mass_for_speed, recover_speeds, speed_for_mass};
pub use stability::{single_inclusion_fit, stability_probe, SingleInclusionFit, SingleInclusionPrior, StabilityEstimate};
pub use pipeline::{
    match_masses, reconstruct, roundtrip, speed_field_lq_error, Matching, PipelineOptions, Priors, Reference,
    ReconstructionReport, Scenario, StageTiming,
};
