//! Periodic unfolding in Orlicz spaces.
//!
//! The crate samples functions at the midpoints of uniform grids over unions
//! of boxes, decomposes the domain into `eps`-cells, and implements the
//! unfolding operator as an exact gather from the source grid. On top of that
//! sit Luxemburg norms, Young conjugates of N-functions, and an `eps`-sweep
//! harness that checks the identities and limit statements of the theory on
//! finite grids.

pub mod cells;
pub mod cli;
pub mod config;
mod error;
pub mod expr;
pub mod modular;
pub mod nfunc;
pub mod reduce;
pub mod report;
pub mod sampled;
pub mod study;
pub mod unfold;

pub use cells::{cell_index, decompose, lambda_vanishes, CellDecomposition, Domain, ReferenceCell};
pub use error::{Error, Result};
pub use modular::{dual_pairing, luxemburg_norm, modular_value, ModularValue};
pub use nfunc::{check_delta2, check_nabla2, complementary, Delta2Certificate, NFunction};
pub use sampled::{Grid, SampledFunction};
pub use study::{StudyConfig, StudyKind, StudyReport, StudyRow};
pub use unfold::{mean_y, oscillate, unfold, unfold_product_check, ProductFunction, UnfoldedFunction};
