//! Gram-matrix calculus for finite sets of zero-mean proper complex jointly
//! Gaussian random variables, and its application to successive-decoding
//! (decision-feedback) analysis of linear Gaussian channels.
//!
//! The building blocks:
//!
//! - [`kernel`]: complex matrix primitives and the semidefinite LDL*
//!   (Cholesky) decomposition with rank detection.
//! - [`space`]: labeled Gaussian sets, innovations representations and
//!   differential entropy.
//! - [`estimation`]: MMSE projection on partitioned Grams, orthogonality,
//!   mutual information, the chain rule of MMSE estimation, and the
//!   sufficiency check.
//! - [`scenario`]: ISI/MIMO/multi-access channel builders, per-stage
//!   incremental rates under a decoding order, and both decision-feedback
//!   filter forms.
//! - [`montecarlo`]: seeded sampling through the innovations representation,
//!   genie-aided successive decoding runs, and a desk-scale random-codebook
//!   experiment.
//!
//! Everything is pure and deterministic: simulations derive one substream
//! per trial from a master seed, so reports are bit-reproducible.

pub mod error;
pub mod estimation;
pub mod kernel;
pub mod montecarlo;
pub mod scenario;
pub mod space;

pub use num_complex::Complex64;

pub use error::{Error, Result};
pub use estimation::{
    chain_rule_project, mmse_project, mutual_information, orthogonality_residual,
    sufficiency_check, JointGram, MutualInfo, ProjectionResult,
};
pub use kernel::{solve_unit_lower, CMatrix, HermitianGram, InnovationsForm};
pub use montecarlo::{
    empirical_gram, run_codebook_experiment, run_genie_dfe, sample_gaussian, CodebookExperiment,
    GenieRunReport, SampleBatch, SeedSpec, StageErrorReport, TrialRng, CODEBOOK_RATE_CAP_BITS,
};
pub use scenario::{
    dfe_filters, incremental_rates, isi_channel_matrix, mac_channel_matrix, reduce_observations,
    ChannelScenario, DfeFilters, RateProfile, ScenarioKind, StageRate, OBSERVATION_GROUP,
};
pub use space::{real_gaussian_set, EntropyValue, GaussianSet};
