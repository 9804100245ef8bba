//! Shared subspace estimation for a family of factored operators.
//!
//! Given samples S₁, …, S_L, the goal is a pair of orthonormal bases
//! E = (e₁ … e_{|I|}) in ℝᵐ and F = (f₁ … f_{|J|}) in ℝⁿ minimising
//!
//! φ(E, F) = Σₗ ‖Π_{E⊗F}(Sₗ) − Sₗ‖²_F,
//!
//! where Π_{E⊗F} projects onto span(eᵢ ⊗ fⱼ). With plain orthogonality
//! constraints this is the Tucker-2 model of the 3-way array whose slices are
//! the Sₗ. Two solvers are provided: [`hosvd_init`] (per-mode truncated
//! spectral decomposition, the classical HOSVD initialisation) and
//! [`als_fit`] (alternating least squares, which never increases φ).
//!
//! All spectral subproblems run on Gram matrices assembled from the factors,
//! so the cost is governed by m, n and Σₗ|Kₗ| — never by m·n. The dense SVD
//! of the vectorised family, which *is* O(mn·L) and only feasible at small
//! sizes, is kept as the size-capped baseline [`full_svd_baseline`].

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg;
use crate::tensor::FactoredOperator;

/// Max-norm tolerance on ‖VᵀV − I‖ accepted by [`OrthoBasis::new`].
pub const ORTHO_TOL: f64 = 1e-10;

/// Relative φ level (against Σ‖Sₗ‖²) below which ALS treats a model as exact.
const NEAR_ZERO_REL: f64 = 1e-13;

/// Which side of the operator a basis lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisMode {
    /// Output-mode basis E ⊂ ℝᵐ.
    Output,
    /// Input-mode basis F ⊂ ℝⁿ.
    Input,
}

/// An orthonormal family of vectors, stored as the columns of a d×r matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthoBasis {
    vectors: DMatrix<f64>,
    mode: BasisMode,
}

impl OrthoBasis {
    /// Wrap a column family, verifying r ≤ d and ‖VᵀV − I‖_max ≤ [`ORTHO_TOL`].
    pub fn new(vectors: DMatrix<f64>, mode: BasisMode) -> Result<Self> {
        if vectors.ncols() > vectors.nrows() {
            return Err(Error::DimensionMismatch {
                context: "basis size (r <= d required)",
                expected: vectors.nrows(),
                actual: vectors.ncols(),
            });
        }
        if vectors.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("basis vectors"));
        }
        let r = vectors.ncols();
        let deviation = (vectors.tr_mul(&vectors) - DMatrix::identity(r, r)).amax();
        // amax of an empty matrix is not defined; an empty family is trivially orthonormal
        if r > 0 && deviation > ORTHO_TOL {
            return Err(Error::NotOrthonormal {
                deviation,
                tolerance: ORTHO_TOL,
            });
        }
        Ok(Self { vectors, mode })
    }

    /// Ambient dimension d.
    pub fn ambient_dim(&self) -> usize {
        self.vectors.nrows()
    }

    /// Number of vectors r.
    pub fn len(&self) -> usize {
        self.vectors.ncols()
    }

    /// True when the family is empty.
    pub fn is_empty(&self) -> bool {
        self.vectors.ncols() == 0
    }

    /// True when the family spans the whole ambient space (r = d).
    pub fn is_complete(&self) -> bool {
        self.vectors.ncols() == self.vectors.nrows()
    }

    /// The d×r column matrix.
    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    /// Which mode the basis belongs to.
    pub fn mode(&self) -> BasisMode {
        self.mode
    }

    /// Keep the first `count` vectors. Prefixes of an orthonormal family stay
    /// orthonormal, so this cannot fail once `count <= len`.
    pub fn truncate(&self, count: usize) -> Result<Self> {
        if count > self.len() {
            return Err(Error::DimensionMismatch {
                context: "basis truncation",
                expected: self.len(),
                actual: count,
            });
        }
        Ok(Self {
            vectors: self.vectors.columns(0, count).into_owned(),
            mode: self.mode,
        })
    }
}

/// Orthonormal type-II DCT family: the `count` lowest-frequency vectors in
/// dimension `dim`. The first vector is the constant 1/√d. Used as the fixed
/// analytic comparator next to the fitted bases.
pub fn dct_basis(dim: usize, count: usize, mode: BasisMode) -> Result<OrthoBasis> {
    if count > dim {
        return Err(Error::DimensionMismatch {
            context: "dct basis size (count <= dim required)",
            expected: dim,
            actual: count,
        });
    }
    let base = std::f64::consts::PI / dim as f64;
    let vectors = DMatrix::from_fn(dim, count, |x, j| {
        let scale = if j == 0 {
            (1.0 / dim as f64).sqrt()
        } else {
            (2.0 / dim as f64).sqrt()
        };
        scale * (base * (x as f64 + 0.5) * j as f64).cos()
    });
    OrthoBasis::new(vectors, mode)
}

/// Coefficient matrix γ of one operator in the E⊗F basis: γᵢⱼ = ⟨S, eᵢ ⊗ fⱼ⟩.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffMatrix {
    gamma: DMatrix<f64>,
    sample: Option<usize>,
}

impl CoeffMatrix {
    /// Wrap a coefficient matrix, optionally tagged with the sample index it
    /// was projected from.
    pub fn new(gamma: DMatrix<f64>, sample: Option<usize>) -> Result<Self> {
        if gamma.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("coefficient matrix"));
        }
        Ok(Self { gamma, sample })
    }

    /// The |I|×|J| coefficient matrix.
    pub fn gamma(&self) -> &DMatrix<f64> {
        &self.gamma
    }

    /// Index of the sample this was projected from, if any.
    pub fn sample(&self) -> Option<usize> {
        self.sample
    }

    /// Squared Frobenius norm of the coefficients.
    pub fn norm_sq(&self) -> f64 {
        self.gamma.iter().map(|v| v * v).sum()
    }
}

/// Stopping rule for [`als_fit`]: hard iteration cap plus a relative
/// objective-decrease tolerance measured over one full iteration.
#[derive(Debug, Clone, Copy)]
pub struct StoppingRule {
    pub max_iters: usize,
    pub rel_tol: f64,
}

impl Default for StoppingRule {
    // One iteration usually suffices on smooth families; the defaults are generous.
    fn default() -> Self {
        Self {
            max_iters: 20,
            rel_tol: 1e-8,
        }
    }
}

/// A fitted basis pair (E, F) with its objective value and per-half-step history.
///
/// `fit` is φ(E, F) = Σₗ ‖Π_{E⊗F}(Sₗ) − Sₗ‖²_F, the summed squared projection
/// residual over the family it was fitted on. Models assembled directly from
/// bases carry `NaN` until evaluated against samples via [`Self::objective`].
#[derive(Debug, Clone)]
pub struct SubspaceModel {
    e: OrthoBasis,
    f: OrthoBasis,
    fit: f64,
    history: Vec<f64>,
}

impl SubspaceModel {
    /// Assemble a model from an output-mode and an input-mode basis.
    pub fn from_bases(e: OrthoBasis, f: OrthoBasis) -> Result<Self> {
        Self::with_fit(e, f, f64::NAN, Vec::new())
    }

    /// Assemble a model carrying a recorded fit value and history.
    pub fn with_fit(e: OrthoBasis, f: OrthoBasis, fit: f64, history: Vec<f64>) -> Result<Self> {
        if e.mode() != BasisMode::Output {
            return Err(Error::InvalidParam {
                name: "e",
                reason: "expected an output-mode basis".into(),
            });
        }
        if f.mode() != BasisMode::Input {
            return Err(Error::InvalidParam {
                name: "f",
                reason: "expected an input-mode basis".into(),
            });
        }
        Ok(Self { e, f, fit, history })
    }

    /// Output-mode basis E.
    pub fn basis_e(&self) -> &OrthoBasis {
        &self.e
    }

    /// Input-mode basis F.
    pub fn basis_f(&self) -> &OrthoBasis {
        &self.f
    }

    /// Number of output-mode vectors |I|.
    pub fn i_dim(&self) -> usize {
        self.e.len()
    }

    /// Number of input-mode vectors |J|.
    pub fn j_dim(&self) -> usize {
        self.f.len()
    }

    /// Ambient output dimension m.
    pub fn output_dim(&self) -> usize {
        self.e.ambient_dim()
    }

    /// Ambient input dimension n.
    pub fn input_dim(&self) -> usize {
        self.f.ambient_dim()
    }

    /// Recorded objective value of the fit that produced this model.
    pub fn fit(&self) -> f64 {
        self.fit
    }

    /// Objective value after every half-step of the fit.
    pub fn history(&self) -> &[f64] {
        &self.history
    }

    fn check_dims(&self, s: &FactoredOperator) -> Result<()> {
        if s.output_dim() != self.output_dim() {
            return Err(Error::DimensionMismatch {
                context: "operator output dimension",
                expected: self.output_dim(),
                actual: s.output_dim(),
            });
        }
        if s.input_dim() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                context: "operator input dimension",
                expected: self.input_dim(),
                actual: s.input_dim(),
            });
        }
        Ok(())
    }

    /// Coefficients of the projection of `s` onto E⊗F:
    /// γ = (EᵀA)(FᵀB)ᵀ, so Π_{E⊗F}(s) = E γ Fᵀ.
    pub fn project_coeffs(&self, s: &FactoredOperator) -> Result<CoeffMatrix> {
        self.check_dims(s)?;
        let ea = self.e.vectors().tr_mul(s.alphas()); // |I|×K
        let fb = self.f.vectors().tr_mul(s.betas()); // |J|×K
        CoeffMatrix::new(ea * fb.transpose(), None)
    }

    /// Squared residual ‖s − Π_{E⊗F}(s)‖²_F = ‖s‖²_F − ‖γ‖²_F (Pythagoras),
    /// clamped at zero against rounding.
    pub fn residual_norm_sq(&self, s: &FactoredOperator) -> Result<f64> {
        let gamma = self.project_coeffs(s)?;
        let norm_sq = s.frobenius_norm_sq();
        let residual = norm_sq - gamma.norm_sq();
        debug_assert!(residual >= -1e-10 * norm_sq, "residual {residual} below rounding floor");
        Ok(residual.max(0.0))
    }

    /// Family objective φ(E, F) = Σₗ ‖Π_{E⊗F}(Sₗ) − Sₗ‖²_F.
    pub fn objective(&self, samples: &[FactoredOperator]) -> Result<f64> {
        let mut total = 0.0;
        for s in samples {
            total += self.residual_norm_sq(s)?;
        }
        Ok(total)
    }

    /// Rebuild the projected operator E γ Fᵀ as a factored operator with |J|
    /// pairs: alphas = Eγ, betas = F.
    pub fn reconstruct(&self, coeffs: &CoeffMatrix) -> Result<FactoredOperator> {
        if coeffs.gamma().nrows() != self.i_dim() || coeffs.gamma().ncols() != self.j_dim() {
            return Err(Error::DimensionMismatch {
                context: "coefficient matrix shape",
                expected: self.i_dim() * self.j_dim(),
                actual: coeffs.gamma().nrows() * coeffs.gamma().ncols(),
            });
        }
        FactoredOperator::new(
            self.e.vectors() * coeffs.gamma(),
            self.f.vectors().clone(),
        )
    }
}

fn family_dims(samples: &[FactoredOperator]) -> Result<(usize, usize)> {
    let first = samples.first().ok_or(Error::EmptyFamily)?;
    let (m, n) = (first.output_dim(), first.input_dim());
    for s in samples {
        if s.output_dim() != m {
            return Err(Error::DimensionMismatch {
                context: "family output dimension",
                expected: m,
                actual: s.output_dim(),
            });
        }
        if s.input_dim() != n {
            return Err(Error::DimensionMismatch {
                context: "family input dimension",
                expected: n,
                actual: s.input_dim(),
            });
        }
    }
    Ok((m, n))
}

fn fit_of(samples: &[FactoredOperator], e: &OrthoBasis, f: &OrthoBasis) -> f64 {
    samples
        .iter()
        .map(|s| {
            let ea = e.vectors().tr_mul(s.alphas());
            let fb = f.vectors().tr_mul(s.betas());
            let gamma_sq: f64 = (ea * fb.transpose()).iter().map(|v| v * v).sum();
            (s.frobenius_norm_sq() - gamma_sq).max(0.0)
        })
        .sum()
}

/// Per-direction truncation profile of `s` against a complete output-mode
/// basis: entry i is ‖Σₖ ⟨eᵢ, αₖ⟩ βₖ‖², the squared mass of `s` carried by
/// direction eᵢ alone (input side untruncated).
pub fn truncation_error_profile(s: &FactoredOperator, e_full: &OrthoBasis) -> Result<Vec<f64>> {
    if !e_full.is_complete() {
        return Err(Error::IncompleteBasis {
            cols: e_full.len(),
            dim: e_full.ambient_dim(),
        });
    }
    if e_full.ambient_dim() != s.output_dim() {
        return Err(Error::DimensionMismatch {
            context: "complete basis ambient dimension",
            expected: s.output_dim(),
            actual: e_full.ambient_dim(),
        });
    }
    let coeffs = e_full.vectors().tr_mul(s.alphas()); // d×K, row i = ⟨e_i, α_k⟩_k
    let beta_gram = s.betas().tr_mul(s.betas()); // K×K
    let profile = (0..coeffs.nrows())
        .map(|i| {
            let row = coeffs.row(i);
            // quadratic form row · BᵀB · rowᵀ
            let mut acc = 0.0;
            for a in 0..row.len() {
                for b in 0..row.len() {
                    acc += row[a] * beta_gram[(a, b)] * row[b];
                }
            }
            acc.max(0.0)
        })
        .collect();
    Ok(profile)
}

/// One-sided truncation error: ‖s − s̃‖²_F where s̃ keeps only the first
/// `keep` vectors of a complete output-mode basis. Summed from the tail, so
/// `value(keep) = profile[keep] + value(keep + 1)` holds exactly as computed.
pub fn truncation_error_one_sided(
    s: &FactoredOperator,
    e_full: &OrthoBasis,
    keep: usize,
) -> Result<f64> {
    let profile = truncation_error_profile(s, e_full)?;
    if keep > profile.len() {
        return Err(Error::DimensionMismatch {
            context: "truncation keep count",
            expected: profile.len(),
            actual: keep,
        });
    }
    let mut acc = 0.0;
    for i in (keep..profile.len()).rev() {
        acc += profile[i];
    }
    Ok(acc)
}

fn structural_rank_check(requested: usize, ambient: usize, total_pairs: usize) -> Result<()> {
    let attainable = ambient.min(total_pairs);
    if requested > attainable {
        return Err(Error::RankDeficient {
            requested,
            attainable,
        });
    }
    Ok(())
}

/// Weighted factor stack for one mode of the HOSVD Gram. For the output mode
/// this is [A₁R₁ | … | A_L R_L] with Rₗ = (BₗᵀBₗ)^½, so that
/// (stack)(stack)ᵀ = Σₗ Aₗ(BₗᵀBₗ)Aₗᵀ = Σₗ SₗSₗᵀ — the mode-1 unfolding Gram —
/// without ever forming an m×n matrix. The symmetric square root keeps this
/// defined when BₗᵀBₗ is singular.
fn weighted_stack(samples: &[FactoredOperator], mode: BasisMode) -> DMatrix<f64> {
    let (own_dim, total_k) = match mode {
        BasisMode::Output => (
            samples[0].output_dim(),
            samples.iter().map(|s| s.num_pairs()).sum(),
        ),
        BasisMode::Input => (
            samples[0].input_dim(),
            samples.iter().map(|s| s.num_pairs()).sum(),
        ),
    };
    let mut stack = DMatrix::zeros(own_dim, total_k);
    let mut col = 0;
    for s in samples {
        let k = s.num_pairs();
        let (own, other) = match mode {
            BasisMode::Output => (s.alphas(), s.betas()),
            BasisMode::Input => (s.betas(), s.alphas()),
        };
        let root = linalg::sqrt_psd(linalg::symmetrized(other.tr_mul(other)));
        stack.columns_mut(col, k).copy_from(&(own * root));
        col += k;
    }
    stack
}

/// HOSVD initialisation: E is the top-|I| eigenbasis of the mode-1 Gram
/// Σₗ Aₗ(BₗᵀBₗ)Aₗᵀ and F the top-|J| eigenbasis of the symmetric mode-2 Gram,
/// eigenvectors ordered by descending eigenvalue. This is the per-mode
/// truncated SVD of the family tensor and the standard starting point for
/// [`als_fit`].
pub fn hosvd_init(
    samples: &[FactoredOperator],
    i_dim: usize,
    j_dim: usize,
) -> Result<SubspaceModel> {
    let (m, n) = family_dims(samples)?;
    let total_k: usize = samples.iter().map(|s| s.num_pairs()).sum();
    structural_rank_check(i_dim, m, total_k)?;
    structural_rank_check(j_dim, n, total_k)?;

    let e_stack = weighted_stack(samples, BasisMode::Output);
    let e = OrthoBasis::new(linalg::top_left_span(&e_stack, i_dim)?, BasisMode::Output)?;
    let f_stack = weighted_stack(samples, BasisMode::Input);
    let f = OrthoBasis::new(linalg::top_left_span(&f_stack, j_dim)?, BasisMode::Input)?;

    let fit = fit_of(samples, &e, &f);
    SubspaceModel::with_fit(e, f, fit, vec![fit])
}

fn update_basis(
    samples: &[FactoredOperator],
    fixed: &OrthoBasis,
    r: usize,
    mode: BasisMode,
) -> Result<OrthoBasis> {
    let own_dim = match mode {
        BasisMode::Output => samples[0].output_dim(),
        BasisMode::Input => samples[0].input_dim(),
    };
    let block_cols = fixed.len() * samples.len();
    let mut stack = DMatrix::zeros(own_dim, block_cols);
    let mut col = 0;
    for s in samples {
        // S F = A (BᵀF) for the output mode, Sᵀ E = B (AᵀE) for the input mode
        let (own, other) = match mode {
            BasisMode::Output => (s.alphas(), s.betas()),
            BasisMode::Input => (s.betas(), s.alphas()),
        };
        let proj = other.tr_mul(fixed.vectors()); // K×r_fixed
        stack.columns_mut(col, fixed.len()).copy_from(&(own * proj));
        col += fixed.len();
    }
    OrthoBasis::new(linalg::top_left_span(&stack, r)?, mode)
}

/// Alternating least squares refinement of a basis pair.
///
/// With F fixed, the optimal E is the top-|I| left singular subspace of the
/// m×(|J||L|) block [S₁F | … | S_LF], each SₗF assembled in factored form;
/// the F step is symmetric with blocks SₗᵀE. Each half-step solves its
/// subproblem exactly, so φ never increases. The history records φ after
/// every half-step, starting from φ(init).
///
/// Iteration stops at `max_iters`, when the relative φ decrease over one full
/// iteration drops below `rel_tol` (`rel_tol = 0` disables this test), or when
/// φ is zero relative to the family scale.
pub fn als_fit(
    samples: &[FactoredOperator],
    init: &SubspaceModel,
    stopping: StoppingRule,
) -> Result<SubspaceModel> {
    let (m, n) = family_dims(samples)?;
    if init.output_dim() != m {
        return Err(Error::DimensionMismatch {
            context: "init output dimension",
            expected: m,
            actual: init.output_dim(),
        });
    }
    if init.input_dim() != n {
        return Err(Error::DimensionMismatch {
            context: "init input dimension",
            expected: n,
            actual: init.input_dim(),
        });
    }
    let (i_dim, j_dim) = (init.i_dim(), init.j_dim());
    if i_dim == 0 || j_dim == 0 {
        return Err(Error::InvalidParam {
            name: "init",
            reason: "alternating least squares needs |I| >= 1 and |J| >= 1".into(),
        });
    }

    let scale: f64 = samples.iter().map(|s| s.frobenius_norm_sq()).sum();
    let mut e = init.basis_e().clone();
    let mut f = init.basis_f().clone();
    let mut history = vec![fit_of(samples, &e, &f)];

    if stopping.max_iters > 0 && history[0] > NEAR_ZERO_REL * scale {
        for _ in 0..stopping.max_iters {
            e = update_basis(samples, &f, i_dim, BasisMode::Output)?;
            history.push(fit_of(samples, &e, &f));
            f = update_basis(samples, &e, j_dim, BasisMode::Input)?;
            history.push(fit_of(samples, &e, &f));

            let now = *history.last().unwrap();
            let before = history[history.len() - 3];
            if now <= NEAR_ZERO_REL * scale || (before - now) < stopping.rel_tol * before {
                break;
            }
        }
    }

    let fit = *history.last().unwrap();
    SubspaceModel::with_fit(e, f, fit, history)
}

/// Residual curve of the dense SVD baseline: stack the vectorised dense
/// operators into an (mn)×|L| matrix and report, for every rank r ≤
/// `max_rank`, the squared residual Σₗ ‖vec(Sₗ) − Π_r vec(Sₗ)‖² of the
/// projection onto the top-r left singular vectors.
///
/// This is the method that ignores the factored structure; it refuses to run
/// once mn·|L| exceeds `cap`.
pub fn full_svd_baseline(
    samples: &[FactoredOperator],
    max_rank: usize,
    cap: usize,
) -> Result<Vec<f64>> {
    let (m, n) = family_dims(samples)?;
    let mn = m.checked_mul(n).ok_or(Error::SizeCapExceeded {
        entries: usize::MAX,
        cap,
    })?;
    let entries = mn.checked_mul(samples.len()).ok_or(Error::SizeCapExceeded {
        entries: usize::MAX,
        cap,
    })?;
    if entries > cap {
        return Err(Error::SizeCapExceeded { entries, cap });
    }

    let mut stack = DMatrix::zeros(mn, samples.len());
    for (l, s) in samples.iter().enumerate() {
        let dense = s.densify_capped(cap)?.into_inner();
        stack
            .column_mut(l)
            .copy_from_slice(dense.as_slice()); // column-major vec(Sₗ)
    }
    let singular = stack.svd(false, false).singular_values;

    // suffix sums of σ², accumulated from the smallest, so the full-rank
    // residual is exactly zero
    let count = singular.len();
    let mut residuals = vec![0.0; count + 1];
    for r in (0..count).rev() {
        residuals[r] = residuals[r + 1] + singular[r] * singular[r];
    }
    Ok((0..=max_rank)
        .map(|r| if r <= count { residuals[r] } else { 0.0 })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_operator(rng: &mut ChaCha8Rng, m: usize, n: usize, k: usize) -> FactoredOperator {
        let alphas = DMatrix::from_fn(m, k, |_, _| rng.random::<f64>() * 2.0 - 1.0);
        let betas = DMatrix::from_fn(n, k, |_, _| rng.random::<f64>() * 2.0 - 1.0);
        FactoredOperator::new(alphas, betas).unwrap()
    }

    fn random_model(rng: &mut ChaCha8Rng, m: usize, n: usize, i: usize, j: usize) -> SubspaceModel {
        let e = DMatrix::from_fn(m, i, |_, _| rng.random::<f64>() * 2.0 - 1.0)
            .qr()
            .q();
        let f = DMatrix::from_fn(n, j, |_, _| rng.random::<f64>() * 2.0 - 1.0)
            .qr()
            .q();
        SubspaceModel::from_bases(
            OrthoBasis::new(e, BasisMode::Output).unwrap(),
            OrthoBasis::new(f, BasisMode::Input).unwrap(),
        )
        .unwrap()
    }

    /// Dense orthogonal projection of densify(s) onto span{e_i f_j^T}.
    fn dense_projection(s: &FactoredOperator, model: &SubspaceModel) -> DMatrix<f64> {
        let d = s.densify().unwrap().into_inner();
        let e = model.basis_e().vectors();
        let f = model.basis_f().vectors();
        e * (e.tr_mul(&d) * f) * f.transpose()
    }

    #[test]
    fn ortho_basis_rejects_skewed_columns() {
        let v = DMatrix::from_column_slice(2, 2, &[1.0, 0.0, 0.9, 0.1]);
        assert!(matches!(
            OrthoBasis::new(v, BasisMode::Output),
            Err(Error::NotOrthonormal { .. })
        ));
    }

    #[test]
    fn project_coeffs_of_own_basis_vector_is_indicator() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let model = random_model(&mut rng, 6, 5, 3, 2);
        let s = FactoredOperator::from_pairs(&[(
            model.basis_e().vectors().column(0).into_owned(),
            model.basis_f().vectors().column(0).into_owned(),
        )])
        .unwrap();
        let gamma = model.project_coeffs(&s).unwrap();
        assert!((gamma.gamma()[(0, 0)] - 1.0).abs() < 1e-12);
        let off: f64 = gamma
            .gamma()
            .iter()
            .enumerate()
            .filter(|(idx, _)| *idx != 0)
            .map(|(_, v)| v.abs())
            .sum();
        assert!(off < 1e-12);
    }

    #[test]
    fn project_coeffs_orthogonal_operator_is_zero() {
        // E spans the first two axes; alphas live on the remaining axes
        let e = OrthoBasis::new(
            DMatrix::from_fn(4, 2, |i, j| if i == j { 1.0 } else { 0.0 }),
            BasisMode::Output,
        )
        .unwrap();
        let f = OrthoBasis::new(DMatrix::identity(3, 2), BasisMode::Input).unwrap();
        let model = SubspaceModel::from_bases(e, f).unwrap();
        let s = FactoredOperator::from_pairs(&[(
            DVector::from_vec(vec![0.0, 0.0, 1.0, 2.0]),
            DVector::from_vec(vec![1.0, 1.0, 1.0]),
        )])
        .unwrap();
        assert_eq!(model.project_coeffs(&s).unwrap().gamma().amax(), 0.0);
    }

    #[test]
    fn projection_matches_dense_projector() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..10 {
            let s = random_operator(&mut rng, 7, 6, 3);
            let model = random_model(&mut rng, 7, 6, 3, 2);
            let gamma = model.project_coeffs(&s).unwrap();
            let rebuilt = model.basis_e().vectors() * gamma.gamma() * model.basis_f().vectors().transpose();
            let oracle = dense_projection(&s, &model);
            assert!((rebuilt - oracle).amax() < 1e-10);
        }
    }

    #[test]
    fn residual_zero_inside_span_and_for_full_bases() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let model = random_model(&mut rng, 6, 6, 2, 2);
        // operator assembled inside the span
        let gamma = CoeffMatrix::new(
            DMatrix::from_fn(2, 2, |_, _| rng.random::<f64>()),
            None,
        )
        .unwrap();
        let inside = model.reconstruct(&gamma).unwrap();
        assert!(model.residual_norm_sq(&inside).unwrap() <= 1e-12 * inside.frobenius_norm_sq());

        let full = random_model(&mut rng, 6, 6, 6, 6);
        let s = random_operator(&mut rng, 6, 6, 3);
        assert!(full.residual_norm_sq(&s).unwrap() <= 1e-12 * s.frobenius_norm_sq());
    }

    #[test]
    fn residual_matches_dense_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..10 {
            let s = random_operator(&mut rng, 8, 5, 3);
            let model = random_model(&mut rng, 8, 5, 3, 2);
            let dense = s.densify().unwrap().into_inner();
            let oracle = (&dense - dense_projection(&s, &model)).norm_squared();
            let fast = model.residual_norm_sq(&s).unwrap();
            assert!((fast - oracle).abs() <= 1e-10 * s.frobenius_norm_sq());
        }
    }

    #[test]
    fn truncation_error_endpoints() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let s = random_operator(&mut rng, 6, 5, 2);
        let e_full = OrthoBasis::new(
            DMatrix::from_fn(6, 6, |_, _| rng.random::<f64>() - 0.5).qr().q(),
            BasisMode::Output,
        )
        .unwrap();
        let at_full = truncation_error_one_sided(&s, &e_full, 6).unwrap();
        assert_eq!(at_full, 0.0);
        let at_zero = truncation_error_one_sided(&s, &e_full, 0).unwrap();
        assert!((at_zero - s.frobenius_norm_sq()).abs() < 1e-10 * s.frobenius_norm_sq());
    }

    #[test]
    fn truncation_error_matches_dense_row_projection() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let s = random_operator(&mut rng, 6, 7, 3);
        let q = DMatrix::from_fn(6, 6, |_, _| rng.random::<f64>() - 0.5).qr().q();
        let e_full = OrthoBasis::new(q.clone(), BasisMode::Output).unwrap();
        let keep = 2;
        let fast = truncation_error_one_sided(&s, &e_full, keep).unwrap();
        // dense: project rows onto the span of the first two e_i
        let dense = s.densify().unwrap().into_inner();
        let ek = q.columns(0, keep);
        let projected = ek * ek.tr_mul(&dense);
        let oracle = (&dense - projected).norm_squared();
        assert!((fast - oracle).abs() < 1e-10 * s.frobenius_norm_sq());
    }

    #[test]
    fn truncation_error_telescopes_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let s = random_operator(&mut rng, 8, 6, 3);
        let q = DMatrix::from_fn(8, 8, |_, _| rng.random::<f64>() - 0.5).qr().q();
        let e_full = OrthoBasis::new(q, BasisMode::Output).unwrap();
        let profile = truncation_error_profile(&s, &e_full).unwrap();
        for (keep, &term) in profile.iter().enumerate() {
            let a = truncation_error_one_sided(&s, &e_full, keep).unwrap();
            let b = truncation_error_one_sided(&s, &e_full, keep + 1).unwrap();
            // summed from the tail, so the telescoping identity is exact
            assert_eq!(a, term + b);
        }
    }

    #[test]
    fn truncation_requires_complete_basis() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let s = random_operator(&mut rng, 6, 5, 2);
        let partial = OrthoBasis::new(DMatrix::identity(6, 3), BasisMode::Output).unwrap();
        assert!(matches!(
            truncation_error_one_sided(&s, &partial, 1),
            Err(Error::IncompleteBasis { .. })
        ));
    }

    #[test]
    fn hosvd_rank_one_family_recovers_the_pair_exactly() {
        let alpha = DVector::from_vec(vec![3.0, 0.0, 4.0]);
        let beta = DVector::from_vec(vec![0.0, -2.0]);
        let s = FactoredOperator::from_pairs(&[(alpha.clone(), beta.clone())]).unwrap();
        let model = hosvd_init(&[s], 1, 1).unwrap();
        let e = model.basis_e().vectors().column(0).into_owned();
        let f = model.basis_f().vectors().column(0).into_owned();
        assert!((e.dot(&alpha).abs() - alpha.norm()).abs() < 1e-12);
        assert!((f.dot(&beta).abs() - beta.norm()).abs() < 1e-12);
        assert!(model.fit() <= 1e-12);
        assert_eq!(model.history().len(), 1);
    }

    #[test]
    fn hosvd_two_orthogonal_samples_span_both_directions() {
        let s1 = FactoredOperator::from_pairs(&[(
            DVector::from_vec(vec![1.0, 0.0, 0.0]),
            DVector::from_vec(vec![1.0, 1.0]),
        )])
        .unwrap();
        let s2 = FactoredOperator::from_pairs(&[(
            DVector::from_vec(vec![0.0, 1.0, 0.0]),
            DVector::from_vec(vec![1.0, -1.0]),
        )])
        .unwrap();
        let model = hosvd_init(&[s1, s2], 2, 2).unwrap();
        // subspace equality, basis agnostic: both axes are fully inside span(E)
        let e = model.basis_e().vectors();
        for axis in 0..2 {
            let unit = DVector::from_fn(3, |i, _| if i == axis { 1.0 } else { 0.0 });
            let inside = e.tr_mul(&unit).norm();
            assert!((inside - 1.0).abs() < 1e-10, "axis {axis} not in span: {inside}");
        }
    }

    #[test]
    fn hosvd_matches_dense_unfolding_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let samples: Vec<_> = (0..5).map(|_| random_operator(&mut rng, 16, 16, 3)).collect();
        let model = hosvd_init(&samples, 4, 4).unwrap();
        // mode-1 unfolding [S_1 ... S_L]
        let mut unfolding = DMatrix::zeros(16, 16 * 5);
        for (l, s) in samples.iter().enumerate() {
            unfolding
                .columns_mut(16 * l, 16)
                .copy_from(&s.densify().unwrap().into_inner());
        }
        let svd = unfolding.svd(true, false);
        let u = svd.u.unwrap().columns(0, 4).into_owned();
        // sin of the largest principal angle
        let e = model.basis_e().vectors();
        let sin_theta = (&u - e * e.tr_mul(&u)).norm();
        assert!(sin_theta < 1e-8, "principal angle too large: {sin_theta}");
    }

    #[test]
    fn hosvd_duplicate_samples_complete_orthonormally() {
        // two copies of the same rank-1 operator: the data direction leads,
        // the second basis vector is an arbitrary orthonormal completion
        let alpha = DVector::from_vec(vec![1.0, 2.0, 0.0, 0.0, 0.0, 1.0]);
        let s = FactoredOperator::from_pairs(&[(
            alpha.clone(),
            DVector::from_vec(vec![1.0, -1.0, 0.5, 0.0]),
        )])
        .unwrap();
        let model = hosvd_init(&[s.clone(), s], 2, 2).unwrap();
        let e = model.basis_e().vectors();
        let aligned = e.column(0).dot(&alpha).abs() / alpha.norm();
        assert!((aligned - 1.0).abs() < 1e-10);
        assert!(model.fit() <= 1e-10);
    }

    #[test]
    fn hosvd_rejects_structurally_impossible_request() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let s = random_operator(&mut rng, 5, 5, 2);
        match hosvd_init(&[s], 3, 1) {
            Err(Error::RankDeficient { requested, attainable }) => {
                assert_eq!(requested, 3);
                assert_eq!(attainable, 2);
            }
            other => panic!("expected rank deficiency, got {other:?}"),
        }
    }

    #[test]
    fn als_fixed_point_returns_immediately() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let model = random_model(&mut rng, 6, 6, 2, 2);
        let gamma = CoeffMatrix::new(DMatrix::from_fn(2, 2, |_, _| rng.random::<f64>()), None).unwrap();
        let inside = model.reconstruct(&gamma).unwrap();
        let refit = als_fit(&[inside], &model, StoppingRule::default()).unwrap();
        assert_eq!(refit.history().len(), 1);
        assert!(refit.fit() <= 1e-12);
    }

    #[test]
    fn als_single_sample_equals_truncated_svd() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let s = random_operator(&mut rng, 10, 9, 5);
        let r = 3;
        let init = hosvd_init(std::slice::from_ref(&s), r, r).unwrap();
        let fitted = als_fit(std::slice::from_ref(&s), &init, StoppingRule::default()).unwrap();
        let dense = s.densify().unwrap().into_inner();
        let sv = dense.svd(false, false).singular_values;
        let expected = s.frobenius_norm_sq() - sv.iter().take(r).map(|v| v * v).sum::<f64>();
        assert!(
            (fitted.fit() - expected).abs() <= 1e-9 * s.frobenius_norm_sq(),
            "fit {} vs truncated svd {}",
            fitted.fit(),
            expected
        );
    }

    #[test]
    fn als_history_never_increases() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let samples: Vec<_> = (0..4).map(|_| random_operator(&mut rng, 9, 8, 2)).collect();
        let scale: f64 = samples.iter().map(|s| s.frobenius_norm_sq()).sum();
        let init = random_model(&mut rng, 9, 8, 3, 3);
        let fitted = als_fit(&samples, &init, StoppingRule { max_iters: 10, rel_tol: 0.0 }).unwrap();
        for w in fitted.history().windows(2) {
            assert!(w[1] <= w[0] + 1e-12 * scale, "ascent step: {} -> {}", w[0], w[1]);
        }
        // descent from a random init is strict in general
        assert!(fitted.fit() < fitted.history()[0]);
    }

    #[test]
    fn dct_first_vector_is_constant() {
        let basis = dct_basis(4, 1, BasisMode::Output).unwrap();
        for &v in basis.vectors().iter() {
            assert!((v - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn dct_complete_family_is_orthonormal() {
        let basis = dct_basis(8, 8, BasisMode::Input).unwrap();
        let gram = basis.vectors().tr_mul(basis.vectors());
        assert!((gram - DMatrix::identity(8, 8)).amax() < 1e-12);
    }

    #[test]
    fn dct_matches_analytic_formula() {
        let basis = dct_basis(8, 3, BasisMode::Output).unwrap();
        for x in 0..8 {
            for j in 0..3 {
                let scale = if j == 0 { (1.0f64 / 8.0).sqrt() } else { (2.0f64 / 8.0).sqrt() };
                let expected =
                    scale * (std::f64::consts::PI * (x as f64 + 0.5) * j as f64 / 8.0).cos();
                assert!((basis.vectors()[(x, j)] - expected).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn svd_baseline_endpoints() {
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        let samples: Vec<_> = (0..3).map(|_| random_operator(&mut rng, 5, 4, 2)).collect();
        let curve = full_svd_baseline(&samples, 3, 1 << 20).unwrap();
        let total: f64 = samples.iter().map(|s| s.frobenius_norm_sq()).sum();
        assert!((curve[0] - total).abs() < 1e-10 * total);
        // three independent random samples span a 3-dimensional space
        assert!(curve[3] <= 1e-10 * total);
    }

    #[test]
    fn svd_baseline_matches_gram_trick_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let samples: Vec<_> = (0..4).map(|_| random_operator(&mut rng, 6, 5, 2)).collect();
        let curve = full_svd_baseline(&samples, 4, 1 << 20).unwrap();
        // oracle: eigenvalues of the L×L Gram of vectorised samples
        let l = samples.len();
        let mut gram = DMatrix::zeros(l, l);
        for i in 0..l {
            for j in 0..l {
                gram[(i, j)] = samples[i].inner(&samples[j]).unwrap();
            }
        }
        let mut eig: Vec<f64> = nalgebra::SymmetricEigen::new(gram).eigenvalues.iter().copied().collect();
        eig.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let total: f64 = eig.iter().sum();
        let mut acc = 0.0;
        for r in 0..=4 {
            let expected = (total - acc).max(0.0);
            assert!(
                (curve[r] - expected).abs() < 1e-9 * total,
                "rank {r}: {} vs {}",
                curve[r],
                expected
            );
            if r < 4 {
                acc += eig[r];
            }
        }
    }

    #[test]
    fn svd_baseline_respects_cap() {
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        let samples: Vec<_> = (0..3).map(|_| random_operator(&mut rng, 8, 8, 2)).collect();
        assert!(matches!(
            full_svd_baseline(&samples, 2, 100),
            Err(Error::SizeCapExceeded { entries: 192, cap: 100 })
        ));
    }
}
