use numlab_core::{finite_diff_grad, relative_error};
use numlab_deep_linear::sampling::{gaussian_matrix, gaussian_vector, random_spd, whitened_inputs};
use numlab_deep_linear::{
    error_factors, error_operator, is_symmetric, lambda_max, lemma2_lower_bound, matrix_root, psd_projection,
    symmetric_eigen, thm1_bound, DMatrix, DeepLinearNet, LinearTarget,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_dims(rng: &mut ChaCha8Rng, max_depth: usize, max_width: usize) -> Vec<usize> {
    let depth = rng.random_range(1..=max_depth);
    (0..=depth).map(|_| rng.random_range(1..=max_width)).collect()
}

fn random_net(rng: &mut ChaCha8Rng, dims: &[usize]) -> DeepLinearNet {
    DeepLinearNet::random(dims, 0.8, rng).unwrap()
}

#[test]
fn gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let dims = random_dims(&mut rng, 4, 4);
        let net = random_net(&mut rng, &dims);
        let tgt = LinearTarget::new(gaussian_matrix(dims[dims.len() - 1], dims[0], &mut rng)).unwrap();
        let analytic: Vec<f64> = net
            .gradient(&tgt)
            .unwrap()
            .iter()
            .flat_map(|g| g.iter().copied())
            .collect();
        let f = |x: &[f64]| DeepLinearNet::from_flat(&dims, x).unwrap().loss(&tgt).unwrap();
        let numeric = finite_diff_grad(f, &net.to_flat(), None).unwrap();
        let err = relative_error(&analytic, &numeric);
        assert!(err < 1e-5, "dims {dims:?}: relative error {err}");
    }
}

#[test]
fn reduced_loss_matches_whitened_samples() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..20 {
        let n0 = rng.random_range(1..=4);
        let nl = rng.random_range(1..=4);
        let mut dims = random_dims(&mut rng, 3, 4);
        dims[0] = n0;
        let last = dims.len() - 1;
        dims[last] = nl;
        let net = random_net(&mut rng, &dims);
        let x = whitened_inputs(n0, 3, &mut rng);
        let n = x.ncols() as f64;
        let y = gaussian_matrix(nl, x.ncols(), &mut rng);
        let r = &y * x.transpose() / n;
        let tgt = LinearTarget::new(r).unwrap();

        // The sampled loss differs from the reduced one by a constant that
        // does not depend on the weights.
        let sampled = |net: &DeepLinearNet| (net.product() * &x - &y).norm_squared() / (2.0 * n);
        let constant = sampled(&net) - net.loss(&tgt).unwrap();
        let other = random_net(&mut rng, &dims);
        let shifted = sampled(&other) - other.loss(&tgt).unwrap();
        assert!((constant - shifted).abs() < 1e-10 * (1.0 + constant.abs()));

        // Realisable targets have no constant at all.
        let exact = &tgt.r * &x;
        let exact_loss = (net.product() * &x - exact).norm_squared() / (2.0 * n);
        assert!((exact_loss - net.loss(&tgt).unwrap()).abs() < 1e-10 * (1.0 + exact_loss));
    }
}

#[test]
fn operator_is_symmetric_psd_and_dominates_rayleigh_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..50 {
        let dims = random_dims(&mut rng, 4, 4);
        let net = random_net(&mut rng, &dims);
        let op = error_operator(&net).unwrap();
        let scale = op.norm().max(1.0);
        assert!(is_symmetric(&op).unwrap() <= 1e-12 * scale);
        let (values, _) = symmetric_eigen(&op);
        assert!(values[0] >= -1e-10 * scale, "eigenvalue {}", values[0]);

        let lam = lambda_max(&op);
        let (a, b) = error_factors(&net);
        for _ in 0..5 {
            let u = gaussian_vector(dims[dims.len() - 1], &mut rng);
            let v = gaussian_vector(dims[0], &mut rng);
            let lower = lemma2_lower_bound(&a, &b, &u, &v).unwrap();
            assert!(lower <= lam * (1.0 + 1e-10) + 1e-12, "{lower} > {lam}");
        }
    }
}

#[test]
fn operator_agrees_with_direct_application() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..20 {
        let dims = random_dims(&mut rng, 4, 4);
        let net = random_net(&mut rng, &dims);
        let (a, b) = error_factors(&net);
        let (m, n) = (dims[dims.len() - 1], dims[0]);
        let e = gaussian_matrix(m, n, &mut rng);
        let direct = a
            .iter()
            .zip(&b)
            .fold(DMatrix::zeros(m, n), |acc, (ai, bi)| acc + ai * &e * bi);
        let vec_e = DMatrix::from_column_slice(m * n, 1, e.as_slice());
        let applied = error_operator(&net).unwrap() * vec_e;
        let via_op = DMatrix::from_column_slice(m, n, applied.as_slice());
        assert!((direct - via_op).norm() < 1e-10 * (1.0 + e.norm()));
    }
}

#[test]
fn exact_threshold_never_exceeds_singular_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for _ in 0..50 {
        let dims = random_dims(&mut rng, 4, 4);
        let net = random_net(&mut rng, &dims);
        let exact = 2.0 / lambda_max(&error_operator(&net).unwrap());
        let bound = thm1_bound(&net).unwrap().bound;
        assert!(exact <= bound * (1.0 + 1e-10), "{exact} > {bound}");
    }
}

#[test]
fn matrix_root_reproduces_target() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    for _ in 0..20 {
        let n = rng.random_range(1..=4);
        let r = random_spd(n, 0.1, 3.0, &mut rng);
        for layers in 1..=4 {
            let root = matrix_root(&r, layers).unwrap();
            let mut power = DMatrix::identity(n, n);
            for _ in 0..layers {
                power = &power * &root;
            }
            assert!((power - &r).norm() < 1e-9 * r.norm().max(1.0));
        }
    }
}

#[test]
fn psd_projection_is_nearest_psd_matrix() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..20 {
        let n = rng.random_range(1..=4);
        let g = gaussian_matrix(n, n, &mut rng);
        let r = (&g + g.transpose()) * 0.5;
        let proj = psd_projection(&r).unwrap();
        let (vals, _) = symmetric_eigen(&proj);
        assert!(vals[0] >= -1e-12);
        let best = (&proj - &r).norm();
        // No random PSD matrix is closer.
        for _ in 0..20 {
            let h = gaussian_matrix(n, n, &mut rng);
            let other = &proj + &h * h.transpose() * 0.05;
            assert!((other - &r).norm() >= best - 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn product_is_invariant_under_rescaling(seed in 0u64..1_000_000, c in 0.2f64..5.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dims = vec![3, 2, 4, 3];
        let net = random_net(&mut rng, &dims);
        let mut layers = net.layers().to_vec();
        layers[0] *= c;
        layers[2] /= c;
        let rescaled = DeepLinearNet::new(layers).unwrap();
        prop_assert!((rescaled.product() - net.product()).norm() < 1e-10 * (1.0 + net.product().norm()));
    }

    #[test]
    fn product_groups_associatively(seed in 0u64..1_000_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dims = random_dims(&mut rng, 4, 4);
        let net = random_net(&mut rng, &dims);
        let by_prefix = net.prefix_products().pop().unwrap();
        let by_suffix = net.suffix_products()[0].clone();
        let direct = net.layers().iter().rev().fold(DMatrix::identity(dims[dims.len() - 1], dims[dims.len() - 1]), |acc, w| acc * w);
        prop_assert!((&by_prefix - &by_suffix).norm() < 1e-10 * (1.0 + by_prefix.norm()));
        prop_assert!((&by_prefix - direct).norm() < 1e-10 * (1.0 + by_prefix.norm()));
    }

    #[test]
    fn flat_round_trip(seed in 0u64..1_000_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dims = random_dims(&mut rng, 4, 4);
        let net = random_net(&mut rng, &dims);
        let back = DeepLinearNet::from_flat(&dims, &net.to_flat()).unwrap();
        prop_assert_eq!(back, net);
    }
}
