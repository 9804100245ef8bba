//! Shared low-rank subspaces and convex hull models for families of factored
//! linear operators.
//!
//! The crate works on operators given as sums of tensor products
//! S = Σₖ αₖ ⊗ βₖ ([`FactoredOperator`]) and provides three layers on top:
//!
//! - **subspace estimation** ([`subspace`]): fit a pair of orthonormal bases
//!   (E, F) so every operator of a family is close to span(eᵢ ⊗ fⱼ) — the
//!   Tucker-2 model — via HOSVD initialisation and alternating least squares,
//!   with a fixed DCT comparator and a size-capped dense SVD baseline;
//! - **convex hull modelling** ([`hull`]): collect the projected family as a
//!   convex hull in coefficient space and project new operators onto it with
//!   accelerated projected gradient and linear-time simplex projection;
//! - **plumbing**: simulated diffusion-like families ([`simgen`]) and file
//!   formats plus experiment CSVs ([`io`]).
//!
//! Everything is sized by the factors: no routine materialises an m×n matrix
//! unless explicitly asked to through a size-capped dense oracle.
//!
//! ```
//! use ophull::{generate_family, hosvd_init, als_fit, FamilyParams, HullModel,
//!              ProjectOptions, StoppingRule};
//!
//! let params = FamilyParams { grid: 8, pairs: 3, count: 6, ..FamilyParams::default() };
//! let family = generate_family(&params)?;
//! let init = hosvd_init(&family, 4, 4)?;
//! let model = als_fit(&family, &init, StoppingRule::default())?;
//! assert!(model.fit() <= init.fit() + 1e-12);
//!
//! let hull = HullModel::build(&family, model)?;
//! let projection = hull.project(&family[0], &ProjectOptions::default())?;
//! assert!(projection.history.last().unwrap() < &1e-10);
//! # Ok::<(), ophull::Error>(())
//! ```

mod error;
mod linalg;

pub mod hull;
pub mod io;
pub mod simgen;
pub mod subspace;
pub mod tensor;

pub use error::{Error, Result};
pub use hull::{
    project_simplex, project_simplex_linear, HullDistance, HullModel, HullProjection,
    ProjectOptions, SimplexMethod, SimplexWeights,
};
pub use io::{ExperimentRecord, FileMode, Method};
pub use simgen::{generate_family, FamilyParams};
pub use subspace::{
    als_fit, dct_basis, full_svd_baseline, hosvd_init, truncation_error_one_sided,
    truncation_error_profile, BasisMode, CoeffMatrix, OrthoBasis, StoppingRule, SubspaceModel,
};
pub use tensor::{DenseOperator, FactoredOperator, DEFAULT_DENSIFY_CAP};
