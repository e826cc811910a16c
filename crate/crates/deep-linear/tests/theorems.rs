use numlab_core::GdConfig;
use numlab_deep_linear::sampling::{random_spd, symmetric_with_spectrum};
use numlab_deep_linear::{
    cor1_bound, matrix_root, probe_equilibrium, psd_projection, run_identity_init, spectral_norm, stability_check,
    thm1_bound, thm2_step_bound, thm3_step_bound, train, DMatrix, DeepLinearNet, IdentityInitOptions, InitCase,
    LinearTarget,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn balanced(r: &DMatrix<f64>, layers: usize) -> DeepLinearNet {
    let root = matrix_root(r, layers).unwrap();
    DeepLinearNet::new(vec![root; layers]).unwrap()
}

#[test]
fn singular_bound_equals_global_bound_at_balanced_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..10 {
        let n = rng.random_range(1..=4);
        let r = random_spd(n, 0.2, 3.0, &mut rng);
        for layers in 1..=4 {
            let net = balanced(&r, layers);
            let tgt = LinearTarget::new(r.clone()).unwrap();
            let rep = stability_check(&net, &tgt, 0.01, 1e-8).unwrap();
            let cor1 = cor1_bound(spectral_norm(&r), layers);
            assert!((rep.thm1_bound - cor1).abs() < 1e-9 * cor1);
            assert_eq!(rep.cor1_bound.map(|c| (c - cor1).abs() < 1e-15), Some(true));
            assert!(rep.exact_threshold <= rep.thm1_bound * (1.0 + 1e-10));
        }
    }
}

#[test]
fn identity_init_reaches_balanced_root() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for k in 0..6 {
        let n = rng.random_range(1..=4);
        let r = random_spd(n, 0.25, 3.0, &mut rng);
        let layers = 2 + k % 3;
        let rho = spectral_norm(&r);
        let delta = thm2_step_bound(rho, layers);
        let rec = run_identity_init(&r, layers, delta, &IdentityInitOptions::default()).unwrap();
        assert_eq!(rec.case, InitCase::PositiveSemidefinite);
        assert!(rec.within_bound);
        assert!(rec.final_layer_error < 1e-8, "layer error {}", rec.final_layer_error);
        for d in &rec.directions {
            if let (Some(obs), Some(beta)) = (d.observed_rate, d.predicted_beta) {
                assert!(obs <= beta + 1e-9, "eigenvalue {}: {obs} > {beta}", d.eigenvalue);
            }
        }
        assert!(rec.cor2_satisfied);
    }
}

#[test]
fn indefinite_target_reaches_psd_projection() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for k in 0..4 {
        let n = rng.random_range(2..=4);
        let mut spectrum: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..3.0)).collect();
        spectrum[0] = -rng.random_range(0.5..2.0);
        let r = symmetric_with_spectrum(&spectrum, &mut rng);
        let layers = 2 + k % 2;
        let lam_min = spectrum.iter().copied().fold(f64::INFINITY, f64::min);
        let delta = thm3_step_bound(spectral_norm(&r), lam_min, layers);
        let opts = IdentityInitOptions {
            max_iters: 200_000,
            limit_tol: Some(1e-7),
            ..Default::default()
        };
        let rec = run_identity_init(&r, layers, delta, &opts).unwrap();
        assert_eq!(rec.case, InitCase::Indefinite);
        let err = (rec.final_net.product() - psd_projection(&r).unwrap()).norm();
        assert!(err < 1e-6, "error {err}");
    }
}

#[test]
fn converged_random_inits_satisfy_certificate() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    let mut converged = 0;
    for k in 0..10 {
        let n = rng.random_range(1..=3);
        let layers = 2 + k % 3;
        let r = random_spd(n, 0.5, 2.0, &mut rng);
        let dims = vec![n; layers + 1];
        let net = DeepLinearNet::random(&dims, 0.5, &mut rng).unwrap();
        let cfg = GdConfig::new(0.05).with_max_iters(50_000).with_grad_tol(1e-10);
        let rec = train(&net, &LinearTarget::new(r).unwrap(), &cfg).unwrap();
        if rec.converged {
            converged += 1;
            assert!(rec.cor2_satisfied, "{} > {}", rec.rho_product, rec.cor2_certificate);
        }
    }
    assert!(converged >= 5);
}

#[test]
fn equilibria_beyond_exact_threshold_are_left() {
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    let tgt = LinearTarget::scalar(4.0);
    for _ in 0..5 {
        let alpha: f64 = rng.random_range(0.5..4.0);
        let net = DeepLinearNet::scalars(&[alpha, 4.0 / alpha]).unwrap();
        let rep = stability_check(&net, &tgt, 0.01, 1e-10).unwrap();
        let below = probe_equilibrium(&net, &tgt, 0.98 * rep.exact_threshold, 1e-6, 3000, 1e-4, &mut rng).unwrap();
        let above = probe_equilibrium(&net, &tgt, 1.02 * rep.exact_threshold, 1e-6, 3000, 1e-4, &mut rng).unwrap();
        assert!(below.returned, "alpha {alpha}: {below:?}");
        assert!(!above.returned, "alpha {alpha}: {above:?}");
        // The closed-form singular bound is never below the exact threshold.
        assert!(rep.exact_threshold <= thm1_bound(&net).unwrap().bound * (1.0 + 1e-12));
    }
}

#[test]
fn rounding_escapes_projection_without_reprojection() {
    let mut rng = ChaCha8Rng::seed_from_u64(26);
    let r = symmetric_with_spectrum(&[-1.3, 0.7, 2.8], &mut rng);
    let delta = thm3_step_bound(spectral_norm(&r), -1.3, 3);
    let opts = IdentityInitOptions {
        max_iters: 20_000,
        reproject: false,
        ..Default::default()
    };
    let free = run_identity_init(&r, 3, delta, &opts).unwrap();
    let guarded = run_identity_init(
        &r,
        3,
        delta,
        &IdentityInitOptions {
            reproject: true,
            ..opts
        },
    )
    .unwrap();
    let proj = psd_projection(&r).unwrap();
    assert!((free.final_net.product() - &proj).norm() > 0.1);
    assert!(free.max_drift > 0.1);
    assert!((guarded.final_net.product() - &proj).norm() < 1e-6);
}
