//! Exclusivity-graph bounds for two-party correlation experiments.
//!
//! The crate computes, for a set of two-party events with nonnegative
//! weights, the classical bound (weighted independence number), the
//! quantum-unconstrained bound (Lovász theta), colored upper bounds from
//! moment-matrix relaxations that respect which party distinguishes which
//! pair of events, and explicit quantum realizations that certify lower
//! bounds.  A small sweep layer traces these bounds along weight paths and
//! hunts for weights separating one graph family member from another.

pub mod classical;
pub mod graph;
pub mod npa;
pub mod realizations;
pub mod sweeps;
pub mod theta;

pub use classical::{
    alpha, alpha_with_set, classical_membership, independent_sets, IndependentSet,
};
pub use npa::{
    build_relaxation, canonicalize, colored_membership_margin, colored_membership_upper,
    moment_structure, theta_colored_upper, MomentRelaxation, MomentStructure, NpaError, NpaLevel,
    Word,
};
pub use realizations::{
    behavior_from_realization, bloch_projector, chsh_interpolation, g33_33_qutrit_point,
    g44_1111_interpolation, naimark_dilate, pair_expectation, partial_trace_reference, purify,
    seesaw, weighted_value, BlochVector, Dilation, Realization, RealizationError, SeesawOptions,
    SeesawOutcome, DEFAULT_SCHEDULE_EXPONENT,
};
pub use sweeps::{
    best_lower_bound, detect_kink, emit_csv, emit_json, emit_svg, find_separating_weight,
    parse_grid, sweep, weight_at, LowerBound, SeparationCertificate, SweepError, SweepOptions,
    SweepResult, SweepRow, WeightPath, DEFAULT_MASK,
};
pub use theta::{
    extract_orthonormal_representation, theta, theta_body_membership, theta_with_matrix,
    OrthonormalRepresentation, ThetaError, THETA_TOL,
};
pub use graph::{
    base_label, build_colored_graph, canonical_form, chain_member, chsh_colored, chsh_shadow,
    colored_isomorphic, enumerate_shadow_family, exclusive, family_label, g33_33, g44_1111, shadow,
    CanonicalForm, ColoredExclusivityGraph, Event, FamilyEnumeration, GraphError, IsoWitness,
    ShadowAccess, SimpleGraph, WeightVector,
};
