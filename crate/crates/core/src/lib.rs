//! Exact arithmetic for matrices over F_q[x].
//!
//! The crate covers finite fields F_q ([`ffield`]), polynomials over them
//! ([`polyring`]), matrices over F_q[x] with their unimodularity tests, Smith
//! normal form and completion ([`polymatrix`]), closed-form natural densities
//! ([`density`]), and the census / Monte Carlo machinery that measures those
//! densities empirically ([`experiment`]).

pub mod density;
pub mod error;
pub mod experiment;
pub mod ffield;
pub mod polymatrix;
pub mod polyring;

pub use density::{
    bound_h_f, density_e_p, density_unimodular, tail_bound, zeta_q_inverse,
    zeta_q_inverse_truncated, DensityValue, HfBound,
};
pub use error::{Error, Result};
pub use experiment::{
    convergence_report, exhaustive_census, lemma_closed_form, lemma_exactness_check, monte_carlo,
    monte_carlo_with_source, sample_matrix, wilson_interval, CensusResult, ChaChaSource,
    EntryStream, LemmaCheck, MCEstimate, Predicate, ReportMode, ReportRow, RunConfig, SpaceSpec,
    StreamSource,
};
pub use ffield::{make_field, FieldElement, FieldSpec, FiniteField};
pub use polymatrix::{
    complete_to_invertible, count_full_rank, in_e_p, is_unimodular, maximal_minors, minors_gcd,
    parse_matrix, rank_over_field, reduce_mod, smith_normal_form, IrreducibleSet, MatrixDoc,
    PolyMatrix, SmithForm,
};
pub use polyring::{
    chi, chi_inv, count_irreducibles, irreducibles_up_to, is_irreducible, parse_poly, DigitVector,
    IrreducibleTable, Poly,
};
