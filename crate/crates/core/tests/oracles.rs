//! Module outputs checked against independently coded reference computations.

use gsrcs_core::reconstructor::{gradient_step, initialize, match_layout};
use gsrcs_core::{
    aggregate, learn_pca, make_ensemble, make_ensemble_with, match_group, reconstruct, sense,
    theorem1_check, EnsembleKind, GstParams, Image, InitMode, Matrix, PatchGroup, PatchSpec,
    ReconstructionConfig, TauMode, WeightRule,
};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let (u, v) = (uniform(rng).max(1e-300), uniform(rng));
    (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
}

fn noise_image(w: usize, h: usize, seed: u64) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Image::from_fn(w, h, |_, _| 255.0 * uniform(&mut rng))
}

fn scene(w: usize, h: usize) -> Image {
    Image::from_fn(w, h, |r, c| {
        let (x, y) = (c as f64, r as f64);
        let edge = if x + 0.5 * y > 0.6 * w as f64 {
            70.0
        } else {
            0.0
        };
        100.0 + edge + 40.0 * (x / 5.0).sin() * (y / 9.0).cos()
    })
}

#[test]
fn pca_matches_nalgebra_eigenvectors() {
    let g = Matrix::from_fn(4, 6, |r, c| {
        (((r * 6 + c) * (r * 6 + c)) as f64 * 0.77).sin() * 10.0 + r as f64
    });
    let dict = learn_pca(&g).unwrap();

    let ng = nalgebra::DMatrix::from_fn(4, 6, |r, c| g[(r, c)]);
    let eig = (&ng * ng.transpose()).symmetric_eigen();
    let mut order: Vec<usize> = (0..4).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    for (k, &j) in order.iter().enumerate() {
        let mut v: Vec<f64> = eig.eigenvectors.column(j).iter().copied().collect();
        let lead = v
            .iter()
            .copied()
            .fold(0.0f64, |a, x| if x.abs() > a.abs() { x } else { a });
        if lead < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        for (r, want) in v.iter().enumerate() {
            assert!(
                (dict.basis[(r, k)] - want).abs() < 1e-10,
                "atom {k} row {r}"
            );
        }
        let sv = eig.eigenvalues[j].max(0.0).sqrt();
        assert!((dict.singular_values[k] - sv).abs() < 1e-9 * sv.max(1.0));
    }
    assert_eq!(dict.rank, 4);
}

#[test]
fn pca_singular_values_match_nalgebra_svd() {
    let g = Matrix::from_fn(7, 5, |r, c| {
        (((r * 5 + c) * (r * 5 + c)) as f64 * 0.41).cos() * 50.0
    });
    let dict = learn_pca(&g).unwrap();
    let svd = nalgebra::DMatrix::from_fn(7, 5, |r, c| g[(r, c)]).svd(false, false);
    let mut sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    for k in 0..5 {
        assert!((dict.singular_values[k] - sv[k]).abs() < 1e-8, "{k}");
    }
    assert_eq!(dict.rank, 5);
    assert!(dict.singular_values[5..].iter().all(|&s| s == 0.0));
}

fn brute_force_match(
    img: &Image,
    e: (usize, usize),
    side: usize,
    window: usize,
    c: usize,
) -> Vec<(usize, usize)> {
    let max_r = img.height() - side;
    let max_c = img.width() - side;
    let dist = |r: usize, cc: usize| {
        let mut s = 0.0;
        for dr in 0..side {
            for dc in 0..side {
                let d = img.get(r + dr, cc + dc) - img.get(e.0 + dr, e.1 + dc);
                s += d * d;
            }
        }
        s
    };
    let mut all = Vec::new();
    for r in 0..=max_r {
        for cc in 0..=max_c {
            if r.abs_diff(e.0) <= window && cc.abs_diff(e.1) <= window && (r, cc) != e {
                all.push((dist(r, cc), r, cc));
            }
        }
    }
    all.sort_by(|a, b| a.0.total_cmp(&b.0).then((a.1, a.2).cmp(&(b.1, b.2))));
    let mut out = vec![e];
    out.extend(all.iter().take(c - 1).map(|&(_, r, cc)| (r, cc)));
    out
}

#[test]
fn block_matching_matches_brute_force() {
    let img = noise_image(16, 16, 11);
    let spec = PatchSpec {
        patch_side: 4,
        stride: 1,
        window: 8,
        group_size: 5,
    };
    for e in [(0, 0), (5, 6), (12, 12), (3, 11)] {
        let group = match_group(&img, e, &spec).unwrap();
        assert_eq!(
            group.coords,
            brute_force_match(&img, e, 4, 8, 5),
            "exemplar {e:?}"
        );
        assert!(!group.padded);
        for (j, &(r, c)) in group.coords.iter().enumerate() {
            for dc in 0..4 {
                for dr in 0..4 {
                    assert_eq!(group.data[(dc * 4 + dr, j)], img.get(r + dr, c + dc));
                }
            }
        }
    }
}

#[test]
fn gradient_step_matches_dense_evaluation() {
    let ens = make_ensemble(4, 0.5, 21).unwrap();
    let phi = ens.matrix();
    assert_eq!((phi.rows(), phi.cols()), (8, 16));
    let truth = noise_image(4, 4, 1);
    let u = noise_image(4, 4, 2);
    let meas = sense(&truth, &ens).unwrap();
    let rho = 0.37;

    let vec_of = |img: &Image| -> Vec<f64> { (0..16).map(|k| img.get(k % 4, k / 4)).collect() };
    let (xt, xu) = (vec_of(&truth), vec_of(&u));
    let z: Vec<f64> = (0..8)
        .map(|i| (0..16).map(|j| phi[(i, j)] * xt[j]).sum())
        .collect();
    let resid: Vec<f64> = (0..8)
        .map(|i| (0..16).map(|j| phi[(i, j)] * xu[j]).sum::<f64>() - z[i])
        .collect();
    let want: Vec<f64> = (0..16)
        .map(|j| xu[j] - rho * (0..8).map(|i| phi[(i, j)] * resid[i]).sum::<f64>())
        .collect();

    let got = gradient_step(&u, &meas, &ens, rho, 1).unwrap();
    for (k, w) in want.iter().enumerate() {
        assert!((got.get(k % 4, k / 4) - w).abs() < 1e-12, "{k}");
    }
}

#[test]
fn least_squares_init_reproduces_measurements() {
    let ens = make_ensemble(32, 0.5, 8).unwrap();
    let img = noise_image(32, 32, 3);
    let meas = sense(&img, &ens).unwrap();
    let init = initialize(&meas, &ens, InitMode::LeastSquares).unwrap();
    assert!(!init.fell_back);
    let again = sense(&init.image, &ens).unwrap();
    let rel = (again.sub(&meas).unwrap().norm_sq() / meas.norm_sq()).sqrt();
    assert!(rel < 1e-10, "{rel}");
    // minimum norm: no larger than the true image
    assert!(init.image.norm() <= img.norm());
}

#[test]
fn l1_denoise_equals_direct_soft_thresholding() {
    let img = scene(40, 40);
    let (w, tau) = (0.8, 3.5);
    let spec = PatchSpec {
        patch_side: 5,
        stride: 3,
        window: 6,
        group_size: 12,
    };
    let cfg = ReconstructionConfig {
        patch_spec: spec,
        gst: GstParams {
            p: 1.0,
            ..GstParams::default()
        },
        tau_mode: TauMode::Manual(tau),
        weight_rule: WeightRule::Uniform(w),
        ..ReconstructionConfig::default()
    };
    let got = gsrcs_core::reconstructor::denoise_pass(&img, &cfg).unwrap();

    let t = tau * w;
    let groups: Vec<PatchGroup> = match_layout(&img, &spec)
        .unwrap()
        .into_iter()
        .map(|coords| {
            let mut g = PatchGroup::from_coords(&img, 5, coords, false);
            let dict = learn_pca(&g.data).unwrap();
            let mut coeffs = dict.to_coeffs(&g.data).unwrap();
            for x in coeffs.as_mut_slice() {
                *x = x.signum() * (x.abs() - t).max(0.0);
            }
            g.data = dict.from_coeffs(&coeffs).unwrap();
            g
        })
        .collect();
    let want = aggregate(&groups, 40, 40, Some(&img)).unwrap();
    for (a, b) in got.pixels().iter().zip(want.pixels()) {
        assert!((a - b).abs() < 1e-9);
    }
    assert!(got.squared_distance(&img).unwrap() > 0.0);
}

#[test]
fn zero_weights_and_consistent_start_is_a_fixed_point() {
    let ens = make_ensemble_with(EnsembleKind::OrthonormalRows, 16, 1.0, 4).unwrap();
    let img = scene(32, 32);
    let meas = sense(&img, &ens).unwrap();
    let cfg = ReconstructionConfig {
        max_iters: 3,
        tau_mode: TauMode::Manual(0.0),
        patch_spec: PatchSpec {
            patch_side: 5,
            stride: 3,
            window: 6,
            group_size: 8,
        },
        ..ReconstructionConfig::for_subrate(0.4)
    };
    let state = reconstruct(&meas, &ens, &cfg, None).unwrap();
    let err = state
        .estimate
        .pixels()
        .iter()
        .zip(img.pixels())
        .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
    assert!(err < 1e-8, "{err}");
}

#[test]
fn theorem1_relation_holds_for_gaussian_errors() {
    let x = scene(64, 64);
    let spec = PatchSpec::default();
    let mut total = 0.0;
    for seed in 0..10 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let y = Image::from_fn(64, 64, |r, c| x.get(r, c) + 8.0 * gaussian(&mut rng));
        let (lhs, rhs) = theorem1_check(&x, &y, &spec).unwrap();
        total += (lhs - rhs).abs() / lhs;
    }
    let mean = total / 10.0;
    assert!(mean <= 0.2, "{mean}");
}

#[test]
fn shifted_image_within_coverage_tolerance() {
    let x = scene(64, 64);
    let y = Image::from_fn(64, 64, |r, c| x.get(r, c) - 5.0);
    let (lhs, rhs) = theorem1_check(&x, &y, &PatchSpec::default()).unwrap();
    assert!((lhs - 25.0).abs() < 1e-9);
    assert!((rhs - 25.0).abs() / 25.0 <= 0.2);
}

#[test]
fn reconstruction_is_deterministic() {
    let img = scene(48, 48);
    let run = || {
        let ens = make_ensemble_with(EnsembleKind::OrthonormalRows, 16, 0.3, 77).unwrap();
        let meas = gsrcs_core::sensing::sense_padded(&img, &ens).unwrap();
        let cfg = ReconstructionConfig {
            max_iters: 4,
            patch_spec: PatchSpec {
                patch_side: 5,
                stride: 3,
                window: 8,
                group_size: 16,
            },
            ..ReconstructionConfig::for_subrate(0.3)
        };
        reconstruct(&meas, &ens, &cfg, Some(&img)).unwrap()
    };
    let (a, b) = (run(), run());
    assert_eq!(a.trace, b.trace);
    assert_eq!(a.estimate.pixels(), b.estimate.pixels());
    assert_eq!((a.estimate.width(), a.estimate.height()), (48, 48));
}

#[test]
fn ensembles_depend_only_on_seed() {
    let a = make_ensemble(32, 0.25, 5).unwrap();
    let b = make_ensemble(32, 0.25, 5).unwrap();
    let c = make_ensemble(32, 0.25, 6).unwrap();
    assert_eq!(a.matrix(), b.matrix());
    assert_ne!(a.matrix(), c.matrix());
    assert_eq!(a.measurements_per_block(), 256);
}
