//! Convex hull of projected operators and projection onto it.
//!
//! After the subspace fit, each sample Sₗ is replaced by its coefficient
//! matrix γₗ in the E⊗F basis; the hull model is conv(γₗ, l ∈ L). Projecting
//! an operator S onto the hull means solving
//!
//! min_{λ ∈ Δ_L} ½ ‖Σₗ λₗ γₗ − c‖²_F,    c = coefficients of S,
//!
//! a simplex-constrained least-squares problem. The solver is accelerated
//! projected gradient with the classical (k−1)/(k+2) momentum, which gives an
//! O(1/k²) objective gap. Every iteration works in the Gram form
//! ½ λᵀGλ − λᵀb + const with G_{ll'} = ⟨γₗ, γₗ'⟩, so the per-step cost is
//! O(|L|²) plus a simplex projection and never depends on m, n or |I||J|.
//!
//! The component of S orthogonal to E⊗F is constant in λ; it is excluded from
//! the iteration and reported separately by [`HullModel::membership_distance`].

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::subspace::{CoeffMatrix, SubspaceModel};
use crate::tensor::FactoredOperator;

/// Negative weights above this floor are rounding noise and clamp to zero.
const WEIGHT_CLAMP: f64 = -1e-12;
/// Tolerance on |Σλ − 1| accepted by [`SimplexWeights::new`].
const SUM_TOL: f64 = 1e-10;
/// Tolerance on the gram/vertex consistency check.
const GRAM_TOL: f64 = 1e-10;
/// Safety inflation of the gradient step denominator.
const STEP_INFLATION: f64 = 1.01;
/// Relative convergence tolerance of the power iteration.
const POWER_TOL: f64 = 1e-10;
/// Iteration cap of the power iteration.
const POWER_MAX_ITERS: usize = 1000;

/// Barycentric weights: a point of the probability simplex Δ_N.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexWeights {
    lambda: DVector<f64>,
}

impl SimplexWeights {
    /// Validate and wrap a weight vector. Entries in [−1e−12, 0) are clamped
    /// to zero; anything more negative, a non-unit sum or a non-finite entry
    /// is rejected.
    pub fn new(mut lambda: DVector<f64>) -> Result<Self> {
        if lambda.is_empty() {
            return Err(Error::InvalidParam {
                name: "lambda",
                reason: "weight vector must not be empty".into(),
            });
        }
        if lambda.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("simplex weights"));
        }
        for v in lambda.iter_mut() {
            if *v < 0.0 {
                if *v < WEIGHT_CLAMP {
                    return Err(Error::InvalidParam {
                        name: "lambda",
                        reason: format!("negative weight {v} below clamp floor"),
                    });
                }
                *v = 0.0;
            }
        }
        let sum: f64 = lambda.iter().sum();
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(Error::InvalidParam {
                name: "lambda",
                reason: format!("weights sum to {sum}, not 1"),
            });
        }
        Ok(Self { lambda })
    }

    /// The uniform weights (1/N, …, 1/N).
    pub fn uniform(len: usize) -> Self {
        Self {
            lambda: DVector::from_element(len, 1.0 / len as f64),
        }
    }

    /// Number of weights.
    pub fn len(&self) -> usize {
        self.lambda.len()
    }

    /// True when there are no weights (never holds for a validated value).
    pub fn is_empty(&self) -> bool {
        self.lambda.is_empty()
    }

    /// The weight vector.
    pub fn as_vector(&self) -> &DVector<f64> {
        &self.lambda
    }
}

/// Which simplex-projection algorithm to run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum SimplexMethod {
    /// Sort-based threshold search, O(N log N). The default: at family sizes
    /// in the hundreds it is indistinguishable from the linear variant.
    #[default]
    Sort,
    /// Partition-based threshold search with expected linear time.
    ExpectedLinear,
}

fn check_projection_input(v: &DVector<f64>) -> Result<()> {
    if v.is_empty() {
        return Err(Error::InvalidParam {
            name: "v",
            reason: "cannot project an empty vector".into(),
        });
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("simplex projection input"));
    }
    Ok(())
}

fn clamp_to_simplex(v: &DVector<f64>, threshold: f64) -> Result<SimplexWeights> {
    SimplexWeights::new(v.map(|x| (x - threshold).max(0.0)))
}

/// Euclidean projection onto the probability simplex Δ_N, sort-based.
///
/// The projection is λᵢ = max(vᵢ − τ, 0) where τ is the unique threshold with
/// Σᵢ max(vᵢ − τ, 0) = 1; sorting v makes τ a running-mean scan.
pub fn project_simplex(v: &DVector<f64>) -> Result<SimplexWeights> {
    check_projection_input(v)?;
    if v.len() == 1 {
        // the simplex in one dimension is the single point {1}
        return SimplexWeights::new(DVector::from_element(1, 1.0));
    }
    let mut sorted: Vec<f64> = v.iter().copied().collect();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumulative = 0.0;
    let mut threshold = sorted[0] - 1.0;
    for (i, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let candidate = (cumulative - 1.0) / (i + 1) as f64;
        if u > candidate {
            threshold = candidate;
        } else {
            break;
        }
    }
    clamp_to_simplex(v, threshold)
}

/// Euclidean projection onto Δ_N by partitioning around pivots instead of
/// sorting; expected linear time, same output as [`project_simplex`].
pub fn project_simplex_linear(v: &DVector<f64>) -> Result<SimplexWeights> {
    check_projection_input(v)?;
    if v.len() == 1 {
        return SimplexWeights::new(DVector::from_element(1, 1.0));
    }
    let mut candidates: Vec<f64> = v.iter().copied().collect();
    // accumulated sum and count of entries already known to be active
    let mut active_sum = 0.0;
    let mut active_count = 0usize;
    while !candidates.is_empty() {
        let pivot = median_of_three(&candidates);
        let mut high_sum = 0.0;
        let mut high_count = 0usize;
        for &x in &candidates {
            if x >= pivot {
                high_sum += x;
                high_count += 1;
            }
        }
        // threshold if everything >= pivot were active
        let threshold = (active_sum + high_sum - 1.0) / (active_count + high_count) as f64;
        if pivot > threshold {
            // pivot and everything above it are active; recurse below
            active_sum += high_sum;
            active_count += high_count;
            candidates.retain(|&x| x < pivot);
        } else {
            // pivot is inactive, and so are its ties; recurse strictly above it
            candidates.retain(|&x| x > pivot);
        }
    }
    let threshold = (active_sum - 1.0) / active_count.max(1) as f64;
    clamp_to_simplex(v, threshold)
}

fn median_of_three(xs: &[f64]) -> f64 {
    let (a, b, c) = (xs[0], xs[xs.len() / 2], xs[xs.len() - 1]);
    if (a <= b && b <= c) || (c <= b && b <= a) {
        b
    } else if (b <= a && a <= c) || (c <= a && a <= b) {
        a
    } else {
        c
    }
}

/// Options for [`HullModel::project`].
#[derive(Debug, Clone, Copy)]
pub struct ProjectOptions {
    /// Hard iteration cap k_end.
    pub max_iters: usize,
    /// Stop once the best objective decreased by less than `rel_tol` times
    /// the initial objective over five iterations. Zero disables the test.
    pub rel_tol: f64,
    /// Simplex projection variant used inside the iteration.
    pub simplex: SimplexMethod,
}

impl Default for ProjectOptions {
    fn default() -> Self {
        Self {
            max_iters: 500,
            rel_tol: 1e-10,
            simplex: SimplexMethod::Sort,
        }
    }
}

/// Result of projecting one operator onto the hull.
#[derive(Debug, Clone)]
pub struct HullProjection {
    /// Optimal barycentric weights λ*.
    pub weights: SimplexWeights,
    /// Coefficients of the projected point Σₗ λₗ* γₗ.
    pub coeffs: CoeffMatrix,
    /// Objective ½‖Σλγ − c‖² after every iteration, starting from λ₀.
    pub history: Vec<f64>,
    /// Set when all hull vertices are zero and the uniform weights were returned.
    pub degenerate: bool,
}

/// Distance split of an operator against the hull.
#[derive(Debug, Clone, Copy)]
pub struct HullDistance {
    /// ‖Σλ*γₗ − c‖_F inside the reduced coefficient space.
    pub reduced: f64,
    /// ‖S − Π_{E⊗F}(S)‖_F, the part orthogonal to the subspace.
    pub orthogonal: f64,
}

impl HullDistance {
    /// Total distance √(reduced² + orthogonal²).
    pub fn total(&self) -> f64 {
        self.reduced.hypot(self.orthogonal)
    }
}

/// Convex hull of the projected family in coefficient space, with the Gram
/// matrix and step-size data the projection iteration needs.
#[derive(Debug, Clone)]
pub struct HullModel {
    vertices: Vec<CoeffMatrix>,
    gram: DMatrix<f64>,
    lipschitz: f64,
    model: SubspaceModel,
}

impl HullModel {
    /// Project every sample onto the subspace and build the hull of the
    /// resulting coefficient matrices. Duplicate vertices are permitted.
    pub fn build(samples: &[FactoredOperator], model: SubspaceModel) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyFamily);
        }
        let vertices = samples
            .iter()
            .enumerate()
            .map(|(l, s)| {
                let c = model.project_coeffs(s)?;
                CoeffMatrix::new(c.gamma().clone(), Some(l))
            })
            .collect::<Result<Vec<_>>>()?;
        let gram = vertex_gram(&vertices);
        let lipschitz = largest_eigenvalue_psd(&gram);
        Ok(Self {
            vertices,
            gram,
            lipschitz,
            model,
        })
    }

    /// Reassemble a hull from stored parts, revalidating the Gram matrix
    /// against the vertices and recomputing the Lipschitz constant.
    pub fn from_parts(
        vertices: Vec<CoeffMatrix>,
        gram: DMatrix<f64>,
        model: SubspaceModel,
    ) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::EmptyFamily);
        }
        for v in &vertices {
            if v.gamma().nrows() != model.i_dim() || v.gamma().ncols() != model.j_dim() {
                return Err(Error::DimensionMismatch {
                    context: "hull vertex shape",
                    expected: model.i_dim() * model.j_dim(),
                    actual: v.gamma().nrows() * v.gamma().ncols(),
                });
            }
        }
        if gram.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("gram matrix"));
        }
        let expected = vertex_gram(&vertices);
        let scale = expected.amax().max(1.0);
        if gram.shape() != expected.shape() {
            return Err(Error::DimensionMismatch {
                context: "gram size",
                expected: vertices.len(),
                actual: gram.nrows(),
            });
        }
        let deviation = (&gram - &expected).amax();
        if deviation > GRAM_TOL * scale {
            return Err(Error::InvalidParam {
                name: "gram",
                reason: format!("inconsistent with vertices: deviation {deviation:.3e}"),
            });
        }
        let lipschitz = largest_eigenvalue_psd(&gram);
        Ok(Self {
            vertices,
            gram,
            lipschitz,
            model,
        })
    }

    /// Number of vertices |L|.
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    /// True when the hull has no vertices (never holds for a built hull).
    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// The vertex coefficient matrices.
    pub fn vertices(&self) -> &[CoeffMatrix] {
        &self.vertices
    }

    /// Gram matrix G_{ll'} = ⟨γₗ, γₗ'⟩ of the vertices.
    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    /// Largest eigenvalue of the Gram matrix — the squared operator norm of
    /// the vertex map λ ↦ Σλₗγₗ and the Lipschitz constant of the gradient.
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    /// The subspace model the hull lives in.
    pub fn model(&self) -> &SubspaceModel {
        &self.model
    }

    /// Project a factored operator onto the hull. The operator is first
    /// reduced to its coefficients in the subspace; the orthogonal remainder
    /// is constant in λ and not part of the reported objective.
    pub fn project(&self, s: &FactoredOperator, opts: &ProjectOptions) -> Result<HullProjection> {
        let coeffs = self.model.project_coeffs(s)?;
        self.project_reduced(&coeffs, opts)
    }

    /// Project a point already expressed in the reduced coefficient space.
    pub fn project_reduced(
        &self,
        target: &CoeffMatrix,
        opts: &ProjectOptions,
    ) -> Result<HullProjection> {
        if target.gamma().nrows() != self.model.i_dim()
            || target.gamma().ncols() != self.model.j_dim()
        {
            return Err(Error::DimensionMismatch {
                context: "target coefficient shape",
                expected: self.model.i_dim() * self.model.j_dim(),
                actual: target.gamma().nrows() * target.gamma().ncols(),
            });
        }
        if opts.max_iters == 0 {
            return Err(Error::InvalidParam {
                name: "max_iters",
                reason: "at least one iteration is required".into(),
            });
        }
        let count = self.len();
        let correlations =
            DVector::from_fn(count, |l, _| self.vertices[l].gamma().dot(target.gamma()));
        let target_sq = target.gamma().dot(target.gamma());

        let objective = |lambda: &DVector<f64>| -> f64 {
            let glam = &self.gram * lambda;
            0.5 * lambda.dot(&glam) - lambda.dot(&correlations) + 0.5 * target_sq
        };

        let uniform = DVector::from_element(count, 1.0 / count as f64);
        if self.lipschitz <= 0.0 {
            // all vertices zero: every λ maps to the same point
            let weights = SimplexWeights::new(uniform.clone())?;
            let history = vec![objective(&uniform)];
            let coeffs = self.combine(&uniform)?;
            return Ok(HullProjection {
                weights,
                coeffs,
                history,
                degenerate: true,
            });
        }

        let step = 1.0 / (STEP_INFLATION * self.lipschitz);
        let project = |v: &DVector<f64>| match opts.simplex {
            SimplexMethod::Sort => project_simplex(v),
            SimplexMethod::ExpectedLinear => project_simplex_linear(v),
        };

        let mut current = uniform;
        let mut extrapolated = current.clone();
        let initial = objective(&current);
        let mut history = vec![initial];
        let mut best = vec![initial];

        for k in 1..=opts.max_iters {
            let gradient = &self.gram * &extrapolated - &correlations;
            let stepped = &extrapolated - step * gradient;
            let next = project(&stepped)?.lambda;
            history.push(objective(&next));
            best.push(history[history.len() - 1].min(*best.last().unwrap()));

            let momentum = (k as f64 - 1.0) / (k as f64 + 2.0);
            extrapolated = &next + momentum * (&next - &current);
            current = next;

            if k >= 5 {
                let recent = best[best.len() - 1];
                let old = best[best.len() - 6];
                if old - recent < opts.rel_tol * initial {
                    break;
                }
            }
        }

        let weights = SimplexWeights::new(current.clone())?;
        let coeffs = self.combine(&current)?;
        Ok(HullProjection {
            weights,
            coeffs,
            history,
            degenerate: false,
        })
    }

    /// Distance of an operator to the hull, split into the in-subspace part
    /// ‖Σλ*γ − c‖ and the orthogonal residual ‖S − Π_{E⊗F}(S)‖.
    pub fn membership_distance(
        &self,
        s: &FactoredOperator,
        opts: &ProjectOptions,
    ) -> Result<HullDistance> {
        let coeffs = self.model.project_coeffs(s)?;
        let projection = self.project_reduced(&coeffs, opts)?;
        let reduced = (projection.coeffs.gamma() - coeffs.gamma()).norm();
        let orthogonal = self.model.residual_norm_sq(s)?.sqrt();
        Ok(HullDistance {
            reduced,
            orthogonal,
        })
    }

    fn combine(&self, lambda: &DVector<f64>) -> Result<CoeffMatrix> {
        let mut acc = DMatrix::zeros(self.model.i_dim(), self.model.j_dim());
        for (l, vertex) in self.vertices.iter().enumerate() {
            acc += vertex.gamma() * lambda[l];
        }
        CoeffMatrix::new(acc, None)
    }
}

fn vertex_gram(vertices: &[CoeffMatrix]) -> DMatrix<f64> {
    let count = vertices.len();
    let mut gram = DMatrix::zeros(count, count);
    for i in 0..count {
        for j in 0..=i {
            let value = vertices[i].gamma().dot(vertices[j].gamma());
            gram[(i, j)] = value;
            gram[(j, i)] = value;
        }
    }
    gram
}

/// Largest eigenvalue of a symmetric PSD matrix by power iteration
/// (relative tolerance 1e-10, capped at 1000 iterations).
fn largest_eigenvalue_psd(gram: &DMatrix<f64>) -> f64 {
    let n = gram.nrows();
    if gram.amax() == 0.0 {
        return 0.0;
    }
    // start from the ones vector; fall back to basis vectors if it happens
    // to lie in the nullspace
    let mut v = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    let mut image = gram * &v;
    let mut axis = 0;
    while image.norm() == 0.0 && axis < n {
        v = DVector::from_fn(n, |i, _| if i == axis { 1.0 } else { 0.0 });
        image = gram * &v;
        axis += 1;
    }
    if image.norm() == 0.0 {
        return 0.0;
    }
    let mut eigenvalue = v.dot(&image);
    for _ in 0..POWER_MAX_ITERS {
        let norm = image.norm();
        if norm == 0.0 {
            break;
        }
        v = image / norm;
        image = gram * &v;
        let next = v.dot(&image);
        if (next - eigenvalue).abs() <= POWER_TOL * next.abs() {
            eigenvalue = next;
            break;
        }
        eigenvalue = next;
    }
    eigenvalue.max(0.0)
}
