//! The two figure experiments: approximation error versus basis dimension,
//! and wall time versus problem size.

use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ophull::{
    als_fit, dct_basis, full_svd_baseline, hosvd_init, BasisMode, Error, ExperimentRecord,
    FactoredOperator, Method, Result, StoppingRule, SubspaceModel,
};

/// Relative approximation error of each method at every dimension of the
/// sweep: Σₗ‖Sₗ − Π Sₗ‖² / Σₗ‖Sₗ‖², so every curve starts at exactly 1 at
/// dimension 0. Returns the records plus the list of methods skipped because
/// the dense baseline would exceed `cap`.
pub fn approx_curve(
    samples: &[FactoredOperator],
    dims: &[usize],
    methods: &[Method],
    cap: usize,
) -> Result<(Vec<ExperimentRecord>, Vec<Method>)> {
    crate::config::validate_sweep("dims", dims)?;
    let first = samples.first().ok_or(Error::EmptyFamily)?;
    let (m, n) = (first.output_dim(), first.input_dim());
    let ambient = n;
    let total_sq: f64 = samples.iter().map(|s| s.frobenius_norm_sq()).sum();
    let d_max = *dims.last().unwrap();

    // one spectral decomposition at the largest dimension; nested prefixes
    // give every smaller dimension of the sweep
    let needs_fitted = methods.iter().any(|m| matches!(m, Method::Hosvd | Method::Als));
    let fitted_full = if needs_fitted {
        Some(hosvd_init(samples, d_max.min(m), d_max.min(n))?)
    } else {
        None
    };
    let truncated = |d: usize| -> Result<SubspaceModel> {
        let full = fitted_full.as_ref().expect("fitted model exists");
        SubspaceModel::from_bases(
            full.basis_e().truncate(d.min(m))?,
            full.basis_f().truncate(d.min(n))?,
        )
    };

    let mut records = Vec::new();
    let mut skipped = Vec::new();
    for &method in methods {
        match method {
            Method::Dct => {
                for &d in dims {
                    let model = SubspaceModel::from_bases(
                        dct_basis(m, d.min(m), BasisMode::Output)?,
                        dct_basis(n, d.min(n), BasisMode::Input)?,
                    )?;
                    let value = model.objective(samples)? / total_sq;
                    records.push(ExperimentRecord { method, n: ambient, dimension: d, value });
                }
            }
            Method::Svd => match full_svd_baseline(samples, d_max, cap) {
                Ok(curve) => {
                    // normalise by the baseline's own rank-0 residual (= Σ‖Sₗ‖²
                    // up to rounding) so its curve starts at exactly 1
                    let base = curve[0];
                    for &d in dims {
                        records.push(ExperimentRecord {
                            method,
                            n: ambient,
                            dimension: d,
                            value: curve[d] / base,
                        });
                    }
                }
                Err(Error::SizeCapExceeded { .. }) => skipped.push(method),
                Err(other) => return Err(other),
            },
            Method::Hosvd => {
                for &d in dims {
                    let value = truncated(d)?.objective(samples)? / total_sq;
                    records.push(ExperimentRecord { method, n: ambient, dimension: d, value });
                }
            }
            Method::Als => {
                for &d in dims {
                    let value = if d == 0 {
                        truncated(0)?.objective(samples)? / total_sq
                    } else {
                        let init = truncated(d)?;
                        als_fit(samples, &init, StoppingRule::default())?.fit() / total_sq
                    };
                    records.push(ExperimentRecord { method, n: ambient, dimension: d, value });
                }
            }
        }
    }
    Ok((records, skipped))
}

/// Deterministic factored family with i.i.d. uniform entries, used for the
/// timing sweep where the operator size n is not a perfect square.
pub fn random_timing_family(
    n: usize,
    pairs: usize,
    count: usize,
    seed: u64,
) -> Vec<FactoredOperator> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let alphas = DMatrix::from_fn(n, pairs, |_, _| rng.random::<f64>() * 2.0 - 1.0);
            let betas = DMatrix::from_fn(n, pairs, |_, _| rng.random::<f64>() * 2.0 - 1.0);
            FactoredOperator::new(alphas, betas).expect("uniform entries are finite")
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct TimingConfig {
    pub sizes: Vec<usize>,
    pub methods: Vec<Method>,
    pub repetitions: usize,
    pub dimension: usize,
    pub pairs: usize,
    pub count: usize,
    pub seed: u64,
    pub cap: usize,
}

impl Default for TimingConfig {
    fn default() -> Self {
        Self {
            sizes: vec![128, 256, 512],
            methods: vec![Method::Dct, Method::Svd, Method::Hosvd, Method::Als],
            repetitions: 3,
            dimension: 10,
            pairs: 5,
            count: 20,
            seed: 1,
            cap: ophull::DEFAULT_DENSIFY_CAP,
        }
    }
}

/// Median wall time of one method-specific fit over `repetitions` runs, with
/// one discarded warm-up run. Strictly single-threaded and serialised.
fn median_seconds(repetitions: usize, mut work: impl FnMut()) -> f64 {
    work(); // warm-up, discarded
    let mut times: Vec<f64> = (0..repetitions)
        .map(|_| {
            let start = Instant::now();
            work();
            start.elapsed().as_secs_f64()
        })
        .collect();
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    times[times.len() / 2]
}

/// Baselines skipped by [`timing_curve`] because of the dense size cap.
pub type SkippedSizes = Vec<(Method, usize)>;

/// Wall time of each method versus operator size on the factored timing
/// family. The dense SVD baseline is skipped (and reported in the second
/// return value) whenever m·n·|L| exceeds the cap.
pub fn timing_curve(config: &TimingConfig) -> Result<(Vec<ExperimentRecord>, SkippedSizes)> {
    crate::config::validate_sweep("sizes", &config.sizes)?;
    if config.repetitions == 0 {
        return Err(Error::InvalidParam {
            name: "reps",
            reason: "at least one repetition is required".into(),
        });
    }
    let dim = config.dimension;
    let mut records = Vec::new();
    let mut skipped = Vec::new();
    for &n in &config.sizes {
        if dim > n.min(config.pairs * config.count) {
            return Err(Error::InvalidParam {
                name: "dim",
                reason: format!("dimension {dim} unattainable at size {n}"),
            });
        }
        let family = random_timing_family(n, config.pairs, config.count, config.seed);
        for &method in &config.methods {
            let seconds = match method {
                Method::Dct => median_seconds(config.repetitions, || {
                    let model = SubspaceModel::from_bases(
                        dct_basis(n, dim, BasisMode::Output).unwrap(),
                        dct_basis(n, dim, BasisMode::Input).unwrap(),
                    )
                    .unwrap();
                    std::hint::black_box(model.objective(&family).unwrap());
                }),
                Method::Svd => {
                    if n * n * config.count > config.cap {
                        skipped.push((method, n));
                        continue;
                    }
                    median_seconds(config.repetitions, || {
                        std::hint::black_box(
                            full_svd_baseline(&family, dim, config.cap).unwrap(),
                        );
                    })
                }
                Method::Hosvd => median_seconds(config.repetitions, || {
                    std::hint::black_box(hosvd_init(&family, dim, dim).unwrap());
                }),
                Method::Als => median_seconds(config.repetitions, || {
                    let init = hosvd_init(&family, dim, dim).unwrap();
                    std::hint::black_box(als_fit(&family, &init, StoppingRule::default()).unwrap());
                }),
            };
            records.push(ExperimentRecord {
                method,
                n,
                dimension: dim,
                value: seconds,
            });
        }
    }
    Ok((records, skipped))
}
