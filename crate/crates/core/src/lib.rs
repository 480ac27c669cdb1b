//! Numerical and symbolic workbench for weighted modulation spaces `M^s_{p,q}`.
//!
//! * [`grid`]: periodic grids, the `e^{+ix·ξ}` Fourier transform, `L_p` norms
//! * [`decomp`]: frequency-uniform decomposition, `S^j`, sector masks
//! * [`norm`]: STFT and decomposition norms, `H^s`
//! * [`testbed`]: lattice-modulated test families with closed-form norms
//! * [`calculus`]: exact verdicts for embeddings, algebras and products
//! * [`harness`]: experiment drivers, slope fits, records
//! * [`io`]: sample tables, config files, family spec strings

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calculus;
pub mod decomp;
pub mod error;
pub mod exponent;
pub mod grid;
pub mod harness;
pub mod io;
pub mod norm;
pub mod sum;
pub mod testbed;

pub use decomp::{build_bank, box_op, dyadic_lowpass, sector_project, DecompositionBank, SectorKind, SectorMask};
pub use error::{Error, Result};
pub use exponent::{parse_rational, rat, ExtendedExponent, Rational, INF};
pub use grid::{forward_ft, inverse_ft, lp_norm, pointwise_product, GridSpec, SampledFunction, SpectralFunction};
pub use norm::{mod_norm_decomp, mod_norm_stft, sobolev_norm, stft, NormReport, SpaceParams};
