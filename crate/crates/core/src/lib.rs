//! Exact arithmetic for Breuil-Kisin style modules over truncated power series
//! rings, together with the ramification bounds and exhaustive oracles built on it.
//!
//! The layers, bottom up:
//!
//! - [`ring`]: `(Z/p^n)[u]/(u^T)` with valuations, Frobenius and Weierstrass preparation.
//! - [`matrix`]: dense matrices over that ring and a division-free characteristic polynomial.
//! - [`eisenstein`]: Eisenstein polynomials, `(m, tau, iota)` and changes of uniformizer.
//! - [`bounds`]: the recursive bound `s` and its closed forms.
//! - [`breuil`]: modules with Frobenius, generator counts and Smith forms over `F_p[[u]]`.
//! - [`oracle`]: brute-force searches used as ground truth.

pub mod bounds;
pub mod breuil;
pub mod eisenstein;
pub mod matrix;
pub mod oracle;
pub mod ring;

pub use bounds::{
    bound_example4, bound_f11, compute_s, log_reference_bound, prop3_height_bounds,
    s_closed_form_unramified, BoundTrace, BoundsError, LogDegreeBound, Variant,
};
pub use breuil::{
    example3_identity, prop1_classify, snf_mod_ut, verify_inclusion_p_s, BreuilError, BreuilModule,
    FractionalElement, ModuleFile, MorphismVerdict, SnfResult,
};
pub use eisenstein::{
    tau_v_search, E0E1Split, EisensteinError, EisensteinPolynomial, ModularEisenstein, Tau,
    TauSearch, UniformizerChange, UniformizerInvariants,
};
pub use matrix::SeriesMatrix;
pub use oracle::{
    descent_minimal_s, lemma4_check, low_degree_factor_scan, prop2_max_t, MaxTReport, OracleError,
    SearchConfig, WitnessReport,
};
pub use ring::{Precision, RingError, TruncatedSeries, Valuation, WeierstrassFactorization};
