//! Numerical laboratory for anisotropic Lorentz–Karamata spaces of
//! 2π-periodic functions.
//!
//! The crate is organised bottom-up:
//!
//! * [`svfun`]: slowly varying functions built from iterated logarithms,
//!   and the weights `V(t) = v(1/t)` derived from them.
//! * [`grid`]: sampled periodic functions and (iterated) non-increasing
//!   rearrangements.
//! * [`norms`]: the one-dimensional and anisotropic Lorentz–Karamata norms,
//!   mixed `l_θ` sequence norms and a plain `L_p` reference.
//! * [`spectral`]: Fourier analysis/synthesis, dyadic blocks `ρ(s)`,
//!   stepped hyperbolic crosses and the shell sets `Y` and `κ`.
//! * [`besov`]: the Nikol'skii–Besov class functional, Dirichlet blocks and
//!   the extremal polynomials used for lower bounds.
//! * [`bounds`]: lattice sums over the shells, their predicted orders and
//!   bounded-ratio reports for the approximation experiments.

pub mod besov;
pub mod bounds;
pub mod error;
pub mod grid;
pub mod norms;
pub mod spectral;
pub mod svfun;

mod quadrature;

pub use besov::{BesovParams, BesovValue, Certification, Regime, TheoremParams};
pub use bounds::{Criterion, LemmaParams, MemberRecipe, RatioReport, RatioRow, Verdict};
pub use error::{Error, Result};
pub use grid::{CatalogFunction, GridFunction, ModulusGrid, NodeLayout, RearrangedProfile};
pub use norms::{AxisSpace, SpaceParams};
pub use spectral::{BlockIndex, BlockSpectrum, CrossSpec, Sampling, SpectralFunction};
pub use svfun::{SvFunction, SvReport, WeightV};
