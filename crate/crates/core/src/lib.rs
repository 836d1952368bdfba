//! Holomorphic invariants of principal torus bundles `T → X → Y` over a
//! complex torus `Y`, determined by an alternating integer tensor
//! `A: Γ × Γ → Λ` and complex structures `V` on `Γ ⊗ ℝ`, `U` on `Λ ⊗ ℝ`.
//!
//! - [`lattice`]: the tensor `A` and the group law of `π₁(X)`.
//! - [`structure`]: period matrices and `(V, V̄)` coordinates.
//! - [`decomposition`]: the type decomposition of `A`, the Riemann relation
//!   and the Appell-Humbert cocycle.
//! - [`variety`]: local equations of the parameter variety and a sampler.
//! - [`cohomology`]: `h^p(O_X)`, 1-forms and `H^p(Θ_X)`.
//! - [`curve`]: closed formulas for bundles over curves.
//! - [`document`], [`commands`], [`json`]: the `tbi` command-line front end.

pub mod catalog;
pub mod cohomology;
pub mod commands;
pub mod curve;
pub mod decomposition;
pub mod document;
pub mod exterior;
pub mod json;
pub mod lattice;
pub mod linalg;
pub mod structure;
pub mod variety;

pub use cohomology::{CohomologyEngine, CohomologyReport, SpectralTable};
pub use decomposition::{decompose, riemann_check, BundleDatum, DecomposedForm};
pub use document::{ExitStatus, InputDocument, ReportError};
pub use lattice::{ExtensionForm, GroupElement};
pub use structure::ComplexStructure;
