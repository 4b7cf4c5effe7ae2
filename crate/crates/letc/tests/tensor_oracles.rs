//! Brute-force oracles for the transform-domain tensor operations. Every
//! oracle here recomputes the expected result through explicit loops that
//! share no code with the library path being checked.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use letc::tensor::{
    matricize, mode3_inverse_transform, mode3_transform, randomized_t_svt, t_product, t_svt,
    t_tnn, tensorize, LinearTransform, Tensor3,
};

fn random_tensor(n1: usize, n2: usize, n3: usize, seed: u64) -> Tensor3 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Tensor3::from_fn(n1, n2, n3, |_, _, _| rng.sample(StandardNormal))
}

fn random_orthonormal(n: usize, seed: u64) -> LinearTransform {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = DMatrix::<f64>::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    LinearTransform::orthonormal(m.qr().q()).unwrap()
}

/// Fiber-by-fiber mode-3 product, the textbook definition.
fn oracle_mode3(x: &Tensor3, l: &DMatrix<f64>) -> Tensor3 {
    let (n1, n2, n3) = x.dims();
    let mut out = Tensor3::zeros(n1, n2, n3);
    for i in 0..n1 {
        for j in 0..n2 {
            for kp in 0..n3 {
                let mut acc = 0.0;
                for k in 0..n3 {
                    acc += l[(kp, k)] * x[(i, j, k)];
                }
                out[(i, j, kp)] = acc;
            }
        }
    }
    out
}

fn rel_err(got: &Tensor3, expect: &Tensor3) -> f64 {
    got.axpy(-1.0, expect).frobenius_norm() / expect.frobenius_norm().max(1e-300)
}

#[test]
fn mode3_transform_matches_fiber_oracle() {
    let x = random_tensor(4, 5, 6, 1);
    let t = random_orthonormal(6, 2);
    let got = mode3_transform(&x, &t).unwrap();
    let expect = oracle_mode3(&x, t.forward_matrix());
    assert!(rel_err(&got, &expect) <= 1e-13);
}

#[test]
fn mode3_round_trip_reconstructs_exactly() {
    for seed in 0..5u64 {
        let x = random_tensor(3, 7, 5, 100 + seed);
        let t = random_orthonormal(5, 200 + seed);
        let back = mode3_inverse_transform(&mode3_transform(&x, &t).unwrap(), &t).unwrap();
        assert!(rel_err(&back, &x) <= 1e-12, "seed {seed}");
    }
}

#[test]
fn t_product_matches_slice_loop_oracle() {
    let t = random_orthonormal(4, 3);
    let a = random_tensor(3, 5, 4, 4);
    let b = random_tensor(5, 2, 4, 5);
    let got = t_product(&a, &b, &t).unwrap();

    let abar = oracle_mode3(&a, t.forward_matrix());
    let bbar = oracle_mode3(&b, t.forward_matrix());
    let mut cbar = Tensor3::zeros(3, 2, 4);
    for k in 0..4 {
        for i in 0..3 {
            for j in 0..2 {
                let mut acc = 0.0;
                for p in 0..5 {
                    acc += abar[(i, p, k)] * bbar[(p, j, k)];
                }
                cbar[(i, j, k)] = acc;
            }
        }
    }
    let expect = oracle_mode3(&cbar, &t.forward_matrix().transpose());
    assert!(rel_err(&got, &expect) <= 1e-12);
}

#[test]
fn t_tnn_matches_block_diagonal_nuclear_norm() {
    let x = random_tensor(4, 6, 3, 6);
    let t = random_orthonormal(3, 7);
    let got = t_tnn(&x, &t).unwrap();

    let xbar = oracle_mode3(&x, t.forward_matrix());
    let (n1, n2, n3) = x.dims();
    let mut block = DMatrix::<f64>::zeros(n1 * n3, n2 * n3);
    for k in 0..n3 {
        for i in 0..n1 {
            for j in 0..n2 {
                block[(k * n1 + i, k * n2 + j)] = xbar[(i, j, k)];
            }
        }
    }
    let expect: f64 = block.svd(false, false).singular_values.iter().sum();
    assert!((got - expect).abs() <= 1e-10 * expect.max(1.0));
}

/// Per-slice soft-thresholding assembled entry by entry from a full SVD.
fn oracle_svt(m: &Tensor3, t: &LinearTransform, threshold: f64) -> Tensor3 {
    let (n1, n2, n3) = m.dims();
    let mbar = oracle_mode3(m, t.forward_matrix());
    let mut out = Tensor3::zeros(n1, n2, n3);
    for k in 0..n3 {
        let slice = mbar.slice(k).clone_owned();
        let svd = slice.svd(true, true);
        let u = svd.u.unwrap();
        let vt = svd.v_t.unwrap();
        for i in 0..n1 {
            for j in 0..n2 {
                let mut acc = 0.0;
                for r in 0..svd.singular_values.len() {
                    let s = (svd.singular_values[r] - threshold).max(0.0);
                    acc += u[(i, r)] * s * vt[(r, j)];
                }
                out[(i, j, k)] = acc;
            }
        }
    }
    oracle_mode3(&out, &t.forward_matrix().transpose())
}

#[test]
fn t_svt_matches_dense_oracle() {
    let m = random_tensor(5, 7, 4, 8);
    let t = random_orthonormal(4, 9);
    let got = t_svt(&m, &t, 0.5).unwrap();
    let expect = oracle_svt(&m, &t, 0.5);
    assert!(rel_err(&got, &expect) <= 1e-10);
}

#[test]
fn t_svt_output_minimizes_the_proximal_objective() {
    let m = random_tensor(4, 5, 3, 10);
    let t = random_orthonormal(3, 11);
    let threshold = 0.5;
    let mu = 1.0 / threshold;
    let objective = |x: &Tensor3| -> f64 {
        t_tnn(x, &t).unwrap() + 0.5 * mu * x.axpy(-1.0, &m).frobenius_norm().powi(2)
    };
    let star = t_svt(&m, &t, threshold).unwrap();
    let base = objective(&star);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for trial in 0..20 {
        let direction = Tensor3::from_fn(4, 5, 3, |_, _, _| rng.sample(StandardNormal));
        let perturbed = star.axpy(1e-3 / direction.frobenius_norm(), &direction);
        let value = objective(&perturbed);
        assert!(
            value >= base - 1e-12,
            "perturbation {trial} lowered the objective: {value} < {base}"
        );
    }
}

#[test]
fn randomized_svt_recovers_exact_result_at_low_rank() {
    // Per-slice rank 3 in the transformed domain comes from a t-product of
    // width-3 factors.
    let t = random_orthonormal(4, 13);
    let left = random_tensor(8, 3, 4, 14);
    let right = random_tensor(3, 10, 4, 15);
    let m = t_product(&left, &right, &t).unwrap();
    let exact = t_svt(&m, &t, 0.3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let fast = randomized_t_svt(&m, &t, 0.3, 3, 2, 6, &mut rng).unwrap();
    assert!(rel_err(&fast, &exact) <= 1e-6);
}

#[test]
fn randomized_svt_with_full_sketch_matches_exact() {
    let m = random_tensor(6, 9, 3, 17);
    let t = random_orthonormal(3, 18);
    let exact = t_svt(&m, &t, 0.4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    // rank 5 plus oversampling 4 covers the full rank 6 of every slice.
    let fast = randomized_t_svt(&m, &t, 0.4, 5, 2, 4, &mut rng).unwrap();
    assert!(rel_err(&fast, &exact) <= 1e-8);
}

#[test]
fn randomized_svt_error_shrinks_with_sketch_size() {
    let m = random_tensor(10, 14, 4, 20);
    let t = random_orthonormal(4, 21);
    let exact = t_svt(&m, &t, 0.6).unwrap();
    let mut rng_half = ChaCha8Rng::seed_from_u64(22);
    let half = randomized_t_svt(&m, &t, 0.6, 5, 1, 0, &mut rng_half).unwrap();
    let mut rng_full = ChaCha8Rng::seed_from_u64(22);
    let full = randomized_t_svt(&m, &t, 0.6, 9, 1, 1, &mut rng_full).unwrap();
    let err_half = rel_err(&half, &exact);
    let err_full = rel_err(&full, &exact);
    assert!(
        err_full <= err_half,
        "full sketch error {err_full} exceeds half sketch error {err_half}"
    );
}

#[test]
fn tensorize_matricize_round_trip_is_bit_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let z = DMatrix::<f64>::from_fn(12, 7, |_, _| rng.sample(StandardNormal));
    for i_per_day in [1, 2, 3, 4, 6, 12] {
        let x = tensorize(&z, i_per_day).unwrap();
        assert_eq!(matricize(&x), z, "intervals {i_per_day}");
    }
}
