//! Rate-distortion functions of random graph sources under Hamming edge
//! distortion.
//!
//! The crate evaluates closed-form rate-distortion functions for the
//! stochastic block model (with community labels as side information) and for
//! inhomogeneous and homogeneous Erdős–Rényi graphs, solves the reverse
//! water-filling allocation behind them, checks the closed forms against a
//! Blahut–Arimoto oracle, and simulates the achievability test channel on
//! sampled graphs.
//!
//! All entropies and rates are in bits. Distortions are absolute Hamming
//! counts over the `n(n-1)/2` vertex pairs unless a name says otherwise.

pub mod error;
pub mod models;
pub mod numerics;
pub mod oracle;
pub mod rdf;
pub mod simulate;
pub mod waterfill;

pub use error::{Error, Result};
pub use models::{
    er_entropy, inhomogeneous_er_entropy, pair_count, pair_index, sbm_conditional_entropy,
    sbm_entropy_interval, validate_sbm, EntropyInterval, ErParams, Graph, InhomErParams,
    LabelVector, Model, ModelSpec, SbmParams,
};
pub use numerics::{
    binary_entropy, entropy_matrix, quadratic_form, solve_monotone_piecewise, ProbVector,
    SymMatrix, Threshold,
};
pub use oracle::{
    blahut_arimoto, conditional_sbm_oracle, joint_graph_rdf_oracle, BaOptions,
    ConditionalOracleResult, DiscreteRdProblem, JointOracleResult, OracleResult,
};
pub use rdf::{
    er_rdf, inhomogeneous_er_rdf, rdf_curve, sbm_conditional_rdf, sbm_rdf_interval, Grid,
    RateInterval, RdCurvePoint,
};
pub use simulate::{
    apply_test_channel, hamming_distortion, monte_carlo_distortion, sample_graph, sample_labels,
    PairFlipStat, RngSpec, SimOptions, SimReport, TestChannel,
};
pub use waterfill::{
    kkt_certificate, sbm_distortion_boundary, sbm_independence_boundary, solve_er_waterfill,
    solve_sbm_waterfill, ErAllocation, KktCertificate, SbmAllocation,
};
