//! Causal Bayesian network learning from a mix of observational and
//! experimental (manipulated) data.
//!
//! Structures are scored with the closed-form Dirichlet marginal likelihood,
//! where a case contributes to a node's counts only if that node was not
//! manipulated in the case. Posteriors over an enumerated set of structures
//! drive model-averaged prediction of both observational and manipulation
//! queries.

pub mod cli;
pub mod dataio;
pub mod discovery;
pub mod error;
pub mod evalmetrics;
pub mod harness;
pub mod inference;
pub mod model;
pub mod netio;
pub mod sampler;
pub mod scoring;

pub use dataio::{parse_dataset, write_dataset, CaseRecord, Dataset};
pub use discovery::{
    averaged_predict, structure_posterior, HypothesisPosterior, HypothesisSet, ModelAverage, PairHypothesis,
    ParameterPrior,
};
pub use error::{Error, Result};
pub use inference::{query, Distribution, Evidence, EvidenceMode, Query};
pub use model::{CausalNetwork, ConfounderRule, Cpt, NetworkStructure, PairClass, VarId, Variable};
pub use netio::{parse_network, write_network};
pub use scoring::{default_prior, log_marginal_likelihood, prequential_log_score, tally_counts, DirichletPrior};
