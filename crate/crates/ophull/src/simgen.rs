//! Simulated diffusion-like operator families.
//!
//! Each operator acts on images of a g×g grid flattened to length n = g²,
//! and is a sum of K pairs α ⊗ β where, over centred grid coordinates
//! X, Y ∈ [−1, 1],
//!
//! α = exp(−(X² + Y²) / (2σ²)) normalised to unit Euclidean norm,
//! β = a(X − c₁)² + b(Y − c₂)² rescaled affinely onto [c_min, c_max],
//!
//! with σ, a, b, c₁, c₂ drawn uniformly from the configured intervals.
//! Generation is deterministic given the seed: operator l uses its own
//! counter-mode RNG substream, and within a pair the draws are consumed in
//! the fixed order σ, a, b, c₁, c₂ (one uniform each, also for point
//! intervals, so the stream layout never depends on the parameter values).

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::tensor::FactoredOperator;

/// Parameters of the simulated family.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyParams {
    /// Grid side length g; operators act on ℝ^(g²).
    pub grid: usize,
    /// Pairs per operator K.
    pub pairs: usize,
    /// Number of operators L.
    pub count: usize,
    /// Interval for the bump width σ (must be positive).
    pub sigma: (f64, f64),
    /// Interval for the quadratic coefficient a.
    pub a: (f64, f64),
    /// Interval for the quadratic coefficient b.
    pub b: (f64, f64),
    /// Interval for the centre offset c₁.
    pub c1: (f64, f64),
    /// Interval for the centre offset c₂.
    pub c2: (f64, f64),
    /// Target interval [c_min, c_max] β is rescaled onto.
    pub beta_interval: (f64, f64),
    /// RNG seed.
    pub seed: u64,
}

impl Default for FamilyParams {
    fn default() -> Self {
        Self {
            grid: 16,
            pairs: 10,
            count: 50,
            sigma: (0.05, 0.3),
            a: (0.5, 2.0),
            b: (0.5, 2.0),
            c1: (-0.5, 0.5),
            c2: (-0.5, 0.5),
            beta_interval: (0.5, 1.0),
            seed: 1,
        }
    }
}

impl FamilyParams {
    /// Ambient dimension n = m = g².
    pub fn ambient_dim(&self) -> usize {
        self.grid * self.grid
    }

    fn validate(&self) -> Result<()> {
        if self.grid < 2 {
            return Err(Error::InvalidParam {
                name: "grid",
                reason: "grid side must be at least 2".into(),
            });
        }
        if self.grid > 4096 {
            return Err(Error::InvalidParam {
                name: "grid",
                reason: "grid side above 4096 (n > 2^24) is not supported".into(),
            });
        }
        if self.pairs == 0 {
            return Err(Error::InvalidParam {
                name: "pairs",
                reason: "at least one pair per operator".into(),
            });
        }
        if self.count == 0 {
            return Err(Error::InvalidParam {
                name: "count",
                reason: "at least one operator".into(),
            });
        }
        for (name, (lo, hi)) in [
            ("sigma", self.sigma),
            ("a", self.a),
            ("b", self.b),
            ("c1", self.c1),
            ("c2", self.c2),
            ("beta_interval", self.beta_interval),
        ] {
            if !lo.is_finite() || !hi.is_finite() || lo > hi {
                return Err(Error::InvalidParam {
                    name: "interval",
                    reason: format!("{name}: [{lo}, {hi}] is not a valid interval"),
                });
            }
        }
        if self.sigma.0 <= 0.0 {
            return Err(Error::InvalidParam {
                name: "sigma",
                reason: "sigma must be positive".into(),
            });
        }
        Ok(())
    }
}

fn draw(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    let t: f64 = rng.random();
    lo + t * (hi - lo)
}

/// Generate the family described by `params`. Deterministic given the seed.
pub fn generate_family(params: &FamilyParams) -> Result<Vec<FactoredOperator>> {
    params.validate()?;
    let g = params.grid;
    let n = params.ambient_dim();
    // centred coordinates: grid point t carries coordinate −1 + 2t/(g−1)
    let coord = |t: usize| -> f64 { -1.0 + 2.0 * t as f64 / (g - 1) as f64 };

    let mut family = Vec::with_capacity(params.count);
    for l in 0..params.count {
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        rng.set_stream(l as u64);

        let mut alphas = DMatrix::zeros(n, params.pairs);
        let mut betas = DMatrix::zeros(n, params.pairs);
        for k in 0..params.pairs {
            let sigma = draw(&mut rng, params.sigma);
            let a = draw(&mut rng, params.a);
            let b = draw(&mut rng, params.b);
            let c1 = draw(&mut rng, params.c1);
            let c2 = draw(&mut rng, params.c2);

            let inv_two_sigma_sq = 1.0 / (2.0 * sigma * sigma);
            let mut alpha_sq_sum = 0.0;
            for iy in 0..g {
                let y = coord(iy);
                for ix in 0..g {
                    let x = coord(ix);
                    let p = iy * g + ix;
                    let bump = (-(x * x + y * y) * inv_two_sigma_sq).exp();
                    alphas[(p, k)] = bump;
                    alpha_sq_sum += bump * bump;
                    betas[(p, k)] = a * (x - c1) * (x - c1) + b * (y - c2) * (y - c2);
                }
            }

            if alpha_sq_sum == 0.0 {
                return Err(Error::InvalidParam {
                    name: "sigma",
                    reason: format!("sigma {sigma} underflows the bump on a {g}x{g} grid"),
                });
            }
            let inv_norm = 1.0 / alpha_sq_sum.sqrt();
            alphas.column_mut(k).scale_mut(inv_norm);

            rescale_into(betas.column_mut(k), params.beta_interval);
        }
        family.push(FactoredOperator::new(alphas, betas)?);
    }
    Ok(family)
}

/// Affine rescale of a column onto [lo, hi]: min ↦ lo, max ↦ hi. A constant
/// column (degenerate rescale) maps to the constant lo.
fn rescale_into(mut column: nalgebra::DVectorViewMut<f64>, (lo, hi): (f64, f64)) {
    let min = column.min();
    let max = column.max();
    if max > min {
        let scale = (hi - lo) / (max - min);
        for v in column.iter_mut() {
            *v = lo + (*v - min) * scale;
        }
    } else {
        for v in column.iter_mut() {
            *v = lo;
        }
    }
}
