//! Local perturbation primitives.

mod em;
mod krr;
mod oue;

pub use em::{em_sample, EmCandidateSet};
pub(crate) use em::{em_weights, sample_weighted};
pub use krr::{krr_keep_probability, krr_output_probability, krr_perturb};
pub use oue::{
    estimate_from_counts, ones_counts, oue_aggregate, oue_perturb, OueParams, OueReport,
};
