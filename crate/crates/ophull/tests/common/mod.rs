//! Shared test support: seeded generators and independent oracles.
//!
//! The oracles here deliberately take the dense / brute-force route so they
//! share no code path with the library implementations they check.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ophull::{BasisMode, FactoredOperator, OrthoBasis, SubspaceModel};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_operator(rng: &mut ChaCha8Rng, m: usize, n: usize, k: usize) -> FactoredOperator {
    let alphas = DMatrix::from_fn(m, k, |_, _| rng.random::<f64>() * 2.0 - 1.0);
    let betas = DMatrix::from_fn(n, k, |_, _| rng.random::<f64>() * 2.0 - 1.0);
    FactoredOperator::new(alphas, betas).unwrap()
}

pub fn random_family(
    rng: &mut ChaCha8Rng,
    count: usize,
    m: usize,
    n: usize,
    k_max: usize,
) -> Vec<FactoredOperator> {
    (0..count)
        .map(|_| {
            let k = rng.random_range(1..=k_max);
            random_operator(rng, m, n, k)
        })
        .collect()
}

pub fn random_orthobasis(rng: &mut ChaCha8Rng, d: usize, r: usize, mode: BasisMode) -> OrthoBasis {
    let q = DMatrix::from_fn(d, r, |_, _| rng.random::<f64>() * 2.0 - 1.0)
        .qr()
        .q();
    OrthoBasis::new(q, mode).unwrap()
}

pub fn random_model(
    rng: &mut ChaCha8Rng,
    m: usize,
    n: usize,
    i_dim: usize,
    j_dim: usize,
) -> SubspaceModel {
    SubspaceModel::from_bases(
        random_orthobasis(rng, m, i_dim, BasisMode::Output),
        random_orthobasis(rng, n, j_dim, BasisMode::Input),
    )
    .unwrap()
}

/// sin of the largest principal angle between two orthonormal column spans,
/// measured as the spectral norm of (I − A Aᵀ)B.
pub fn max_principal_angle_sin(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    assert_eq!(a.ncols(), b.ncols(), "spans must have equal dimension");
    let residual = b - a * a.tr_mul(b);
    let sv = residual.svd(false, false).singular_values;
    if sv.is_empty() {
        0.0
    } else {
        sv[0]
    }
}

/// Dense evaluation of φ(E, F) = Σₗ ‖Sₗ − E(EᵀSₗF)Fᵀ‖²_F.
pub fn dense_phi(samples: &[FactoredOperator], model: &SubspaceModel) -> f64 {
    let e = model.basis_e().vectors();
    let f = model.basis_f().vectors();
    samples
        .iter()
        .map(|s| {
            let d = s.densify().unwrap().into_inner();
            let projected = e * (e.tr_mul(&d) * f) * f.transpose();
            (d - projected).norm_squared()
        })
        .sum()
}

/// Exact Euclidean projection onto the simplex by support enumeration:
/// for every support the affine solution is closed-form; the feasible
/// candidate with the smallest distance is the projection.
pub fn simplex_oracle(v: &DVector<f64>) -> DVector<f64> {
    let n = v.len();
    assert!((1..=20).contains(&n), "oracle enumerates 2^n supports");
    let mut best: Option<(f64, DVector<f64>)> = None;
    for mask in 1u32..(1 << n) {
        let support: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let sum: f64 = support.iter().map(|&i| v[i]).sum();
        let tau = (sum - 1.0) / support.len() as f64;
        let mut candidate = DVector::zeros(n);
        let mut feasible = true;
        for &i in &support {
            let w = v[i] - tau;
            if w < -1e-12 {
                feasible = false;
                break;
            }
            candidate[i] = w.max(0.0);
        }
        if !feasible {
            continue;
        }
        let distance = (&candidate - v).norm_squared();
        if best.as_ref().is_none_or(|(d, _)| distance < *d) {
            best = Some((distance, candidate));
        }
    }
    best.expect("some support is always feasible").1
}

/// Minimise f(λ) = ½λᵀGλ − bᵀλ + ½ c_sq over the simplex by enumerating all
/// 2^L − 1 faces: each face's equality-constrained minimiser comes from its
/// KKT system, feasible candidates keep their objective, and the smallest
/// wins. Returns (λ*, f*).
pub fn hull_projection_oracle(
    gram: &DMatrix<f64>,
    corr: &DVector<f64>,
    target_sq: f64,
) -> (DVector<f64>, f64) {
    let l = gram.nrows();
    assert!((1..=16).contains(&l), "oracle enumerates 2^L faces");
    let objective = |lambda: &DVector<f64>| -> f64 {
        0.5 * lambda.dot(&(gram * lambda)) - lambda.dot(corr) + 0.5 * target_sq
    };
    let mut best: Option<(f64, DVector<f64>)> = None;
    for mask in 1u32..(1 << l) {
        let face: Vec<usize> = (0..l).filter(|i| mask & (1 << i) != 0).collect();
        let size = face.len();
        // KKT system of the face: [G_FF 1; 1ᵀ 0] [λ; ν] = [b_F; 1]
        let mut kkt = DMatrix::zeros(size + 1, size + 1);
        let mut rhs = DVector::zeros(size + 1);
        for (a, &i) in face.iter().enumerate() {
            for (b, &j) in face.iter().enumerate() {
                kkt[(a, b)] = gram[(i, j)];
            }
            kkt[(a, size)] = 1.0;
            kkt[(size, a)] = 1.0;
            rhs[a] = corr[i];
        }
        rhs[size] = 1.0;
        let svd = kkt.svd(true, true);
        let eps = svd.singular_values[0].max(1.0) * 1e-12;
        let Ok(solution) = svd.solve(&rhs, eps) else {
            continue;
        };
        // feasibility: nonnegative on the face, unit sum
        let mut lambda = DVector::zeros(l);
        let mut feasible = true;
        let mut sum = 0.0;
        for (a, &i) in face.iter().enumerate() {
            let w = solution[a];
            if w < -1e-9 {
                feasible = false;
                break;
            }
            lambda[i] = w.max(0.0);
            sum += w.max(0.0);
        }
        if !feasible || (sum - 1.0).abs() > 1e-8 {
            continue;
        }
        let value = objective(&lambda);
        if best.as_ref().is_none_or(|(v, _)| value < *v) {
            best = Some((value, lambda));
        }
    }
    let (value, lambda) = best.expect("the full face always yields a feasible KKT point");
    (lambda, value)
}
