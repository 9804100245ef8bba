//! Factored operators and the inner-product arithmetic on them.
//!
//! An operator S: ℝⁿ → ℝᵐ is stored as a sum of tensor products
//!
//! S = Σₖ αₖ ⊗ βₖ,    (αₖ ⊗ βₖ)(y, x) = αₖ(y) βₖ(x),
//!
//! i.e. the dense matrix would be Σₖ αₖ βₖᵀ. Everything in this module works
//! on the factors alone: applications, inner products and norms cost
//! O(|K|(m + n)) or O(|K|²(m + n)) and never touch an m×n buffer. The dense
//! form exists only as a size-capped oracle for tests and debugging.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Default cap (in entries) above which [`FactoredOperator::densify`] refuses to run.
pub const DEFAULT_DENSIFY_CAP: usize = 1 << 24;

/// A linear operator in factored form Σₖ αₖ ⊗ βₖ.
///
/// The αₖ are stored contiguously as the columns of an m×|K| block and the βₖ
/// as the columns of an n×|K| block, so the Gram products consumed by the
/// subspace solvers are single dense multiplies.
#[derive(Debug, Clone, PartialEq)]
pub struct FactoredOperator {
    alphas: DMatrix<f64>,
    betas: DMatrix<f64>,
}

impl FactoredOperator {
    /// Build an operator from its factor blocks (columns are the pairs).
    pub fn new(alphas: DMatrix<f64>, betas: DMatrix<f64>) -> Result<Self> {
        if alphas.ncols() != betas.ncols() {
            return Err(Error::DimensionMismatch {
                context: "pair count of alpha and beta blocks",
                expected: alphas.ncols(),
                actual: betas.ncols(),
            });
        }
        if alphas.ncols() == 0 {
            return Err(Error::EmptyOperator);
        }
        if alphas.nrows() == 0 || betas.nrows() == 0 {
            return Err(Error::InvalidParam {
                name: "dimensions",
                reason: "operator dimensions must be at least 1".into(),
            });
        }
        if alphas.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("alpha block"));
        }
        if betas.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("beta block"));
        }
        Ok(Self { alphas, betas })
    }

    /// Build an operator from a list of (α, β) pairs.
    pub fn from_pairs(pairs: &[(DVector<f64>, DVector<f64>)]) -> Result<Self> {
        let Some((a0, b0)) = pairs.first() else {
            return Err(Error::EmptyOperator);
        };
        let (m, n, k) = (a0.len(), b0.len(), pairs.len());
        let mut alphas = DMatrix::zeros(m, k);
        let mut betas = DMatrix::zeros(n, k);
        for (j, (a, b)) in pairs.iter().enumerate() {
            if a.len() != m {
                return Err(Error::DimensionMismatch {
                    context: "alpha length",
                    expected: m,
                    actual: a.len(),
                });
            }
            if b.len() != n {
                return Err(Error::DimensionMismatch {
                    context: "beta length",
                    expected: n,
                    actual: b.len(),
                });
            }
            alphas.set_column(j, a);
            betas.set_column(j, b);
        }
        Self::new(alphas, betas)
    }

    /// Output dimension m.
    pub fn output_dim(&self) -> usize {
        self.alphas.nrows()
    }

    /// Input dimension n.
    pub fn input_dim(&self) -> usize {
        self.betas.nrows()
    }

    /// Number of (α, β) pairs; an upper bound on the rank of the operator.
    pub fn num_pairs(&self) -> usize {
        self.alphas.ncols()
    }

    /// The m×|K| block whose columns are the αₖ.
    pub fn alphas(&self) -> &DMatrix<f64> {
        &self.alphas
    }

    /// The n×|K| block whose columns are the βₖ.
    pub fn betas(&self) -> &DMatrix<f64> {
        &self.betas
    }

    /// Apply the operator to a vector: S u = Σₖ αₖ ⟨βₖ, u⟩.
    pub fn apply(&self, u: &DVector<f64>) -> Result<DVector<f64>> {
        if u.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                context: "apply input",
                expected: self.input_dim(),
                actual: u.len(),
            });
        }
        let weights = self.betas.tr_mul(u);
        Ok(&self.alphas * weights)
    }

    /// Frobenius inner product ⟨Sa, Sb⟩ = tr(Saᵀ Sb) computed in factored form:
    /// Σₖₖ' ⟨αₖ, α'ₖ'⟩ ⟨βₖ, β'ₖ'⟩, i.e. the component sum of (AᵀA') ⊙ (BᵀB').
    pub fn inner(&self, other: &Self) -> Result<f64> {
        if self.output_dim() != other.output_dim() {
            return Err(Error::DimensionMismatch {
                context: "inner output dimension",
                expected: self.output_dim(),
                actual: other.output_dim(),
            });
        }
        if self.input_dim() != other.input_dim() {
            return Err(Error::DimensionMismatch {
                context: "inner input dimension",
                expected: self.input_dim(),
                actual: other.input_dim(),
            });
        }
        let ga = self.alphas.tr_mul(&other.alphas);
        let gb = self.betas.tr_mul(&other.betas);
        Ok(ga.component_mul(&gb).sum())
    }

    /// Squared Frobenius norm, clamped at zero against rounding.
    pub fn frobenius_norm_sq(&self) -> f64 {
        self.inner(self)
            .expect("an operator always matches its own dimensions")
            .max(0.0)
    }

    /// Frobenius norm √⟨S, S⟩.
    pub fn frobenius_norm(&self) -> f64 {
        self.frobenius_norm_sq().sqrt()
    }

    /// Materialise the dense m×n matrix, refusing above [`DEFAULT_DENSIFY_CAP`] entries.
    pub fn densify(&self) -> Result<DenseOperator> {
        self.densify_capped(DEFAULT_DENSIFY_CAP)
    }

    /// Materialise the dense m×n matrix with an explicit entry cap.
    pub fn densify_capped(&self, cap: usize) -> Result<DenseOperator> {
        let entries = self
            .output_dim()
            .checked_mul(self.input_dim())
            .ok_or(Error::SizeCapExceeded {
                entries: usize::MAX,
                cap,
            })?;
        if entries > cap {
            return Err(Error::SizeCapExceeded { entries, cap });
        }
        DenseOperator::new(&self.alphas * self.betas.transpose())
    }
}

/// Dense m×n matrix form of an operator. Test oracle and debugging aid only;
/// the library never converts to this representation on its own.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    entries: DMatrix<f64>,
}

impl DenseOperator {
    /// Wrap a dense matrix, rejecting non-finite entries.
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("dense operator entries"));
        }
        Ok(Self { entries })
    }

    /// The underlying matrix.
    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    /// Consume into the underlying matrix.
    pub fn into_inner(self) -> DMatrix<f64> {
        self.entries
    }

    /// Dense matrix-vector product.
    pub fn apply(&self, u: &DVector<f64>) -> Result<DVector<f64>> {
        if u.len() != self.entries.ncols() {
            return Err(Error::DimensionMismatch {
                context: "dense apply input",
                expected: self.entries.ncols(),
                actual: u.len(),
            });
        }
        Ok(&self.entries * u)
    }

    /// Frobenius norm of the dense matrix.
    pub fn frobenius_norm(&self) -> f64 {
        self.entries.norm()
    }
}
