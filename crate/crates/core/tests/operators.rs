//! Forward/adjoint/normal operator contracts against dense oracles.

mod common;

use common::*;
use ktrecon::model::{build_normal_blocks, TransferOperator};
use ktrecon::spectral::apply_normal;
use ktrecon::types::{CoilSensitivities, Dims, ImageSequence, SamplingMask};
use num_complex::Complex64;
use proptest::prelude::*;

#[test]
fn apply_h_matches_dense_matrix() {
    let dims = Dims::new(4, 3, 2, 2).unwrap();
    let mut r = rng(101);
    let op = random_operator(dims, &mut r);
    let x = random_image(dims, &mut r);

    let fast = op.apply_h(&x).unwrap();
    let dense = dense_h(&op) * img_to_vec(&x);
    assert!(rel_err_vec(&kspace_to_vec(&fast), &dense) <= 1e-12);
}

#[test]
fn apply_h_adjoint_matches_dense_matrix() {
    let dims = Dims::new(4, 3, 2, 2).unwrap();
    let mut r = rng(102);
    let op = random_operator(dims, &mut r);
    let y = random_kspace(&op, &mut r);

    let fast = op.apply_h_adjoint(&y).unwrap();
    let dense = dense_h(&op).adjoint() * kspace_to_vec(&y);
    assert!(rel_err_vec(&img_to_vec(&fast), &dense) <= 1e-12);
}

#[test]
fn adjoint_dot_product_100_random_pairs() {
    let dims = Dims::new(4, 3, 2, 2).unwrap();
    let mut r = rng(103);
    let op = random_operator(dims, &mut r);
    for _ in 0..100 {
        let x = random_image(dims, &mut r);
        let y = random_kspace(&op, &mut r);
        let hx = op.apply_h(&x).unwrap();
        let hty = op.apply_h_adjoint(&y).unwrap();
        let lhs = dot(&kspace_to_vec(&hx), &kspace_to_vec(&y));
        let rhs = dot(&img_to_vec(&x), &img_to_vec(&hty));
        let scale = img_to_vec(&x).norm() * kspace_to_vec(&y).norm();
        assert!((lhs - rhs).norm() <= 1e-12 * scale.max(1.0));
    }
}

#[test]
fn parseval_under_full_sampling_single_coil() {
    let dims = Dims::new(8, 8, 3, 1).unwrap();
    let op = TransferOperator::new(
        CoilSensitivities::uniform(dims),
        SamplingMask::full(8, 3),
    )
    .unwrap();
    let mut r = rng(104);
    for _ in 0..10 {
        let x = random_image(dims, &mut r);
        let y = op.apply_h(&x).unwrap();
        let nx = img_to_vec(&x).norm();
        let ny = kspace_to_vec(&y).norm();
        assert!((nx - ny).abs() <= 1e-12 * nx);
    }
}

#[test]
fn unsampled_rows_are_exactly_zero_for_random_inputs() {
    let dims = Dims::new(6, 5, 3, 2).unwrap();
    let mut r = rng(105);
    let op = random_operator(dims, &mut r);
    let x = random_image(dims, &mut r);
    let y = op.apply_h(&x).unwrap();
    for t in 0..dims.n_t {
        for v in 0..dims.n_v {
            if op.mask().kept(v, t) {
                continue;
            }
            for c in 0..dims.n_c {
                for h in 0..dims.n_h {
                    assert_eq!(y.at(v, h, t, c), Complex64::ZERO);
                }
            }
        }
    }
}

#[test]
fn normal_blocks_match_composed_operator() {
    let dims = Dims::new(4, 2, 2, 3).unwrap();
    let mut r = rng(106);
    let op = random_operator(dims, &mut r);
    let blocks = build_normal_blocks(&op);
    let x = random_image(dims, &mut r);

    let via_blocks = apply_normal(&blocks, &x).unwrap();
    let composed = op.apply_h_adjoint(&op.apply_h(&x).unwrap()).unwrap();
    assert!(rel_err_slices(via_blocks.data(), composed.data()) <= 1e-12);
}

#[test]
fn normal_blocks_hermitian_and_psd() {
    let dims = Dims::new(6, 3, 2, 2).unwrap();
    let mut r = rng(107);
    let op = random_operator(dims, &mut r);
    let blocks = build_normal_blocks(&op);
    for t in 0..dims.n_t {
        for i in 0..dims.n_h {
            let b = blocks.block(i, t);
            // Hermitian exactly, post-symmetrization
            assert_eq!(b, &b.adjoint());
            let norm = b.norm();
            let min_eig = b
                .clone()
                .symmetric_eigenvalues()
                .iter()
                .fold(f64::INFINITY, |m, &e| m.min(e));
            assert!(min_eig >= -1e-10 * norm);
        }
    }
}

#[test]
fn subsampled_projection_eigenvalues() {
    // single coil, s = 1, m of n_v lines kept: eigenvalues are m ones and
    // n_v - m zeros
    let dims = Dims::new(5, 2, 1, 1).unwrap();
    let mask = SamplingMask::new(5, 1, vec![true, false, true, true, false]).unwrap();
    let op = TransferOperator::new(CoilSensitivities::uniform(dims), mask).unwrap();
    let blocks = build_normal_blocks(&op);
    for i in 0..2 {
        let mut eigs: Vec<f64> = blocks
            .block(i, 0)
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .collect();
        eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for e in &eigs[..2] {
            assert!(e.abs() <= 1e-12);
        }
        for e in &eigs[2..] {
            assert!((e - 1.0).abs() <= 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Adjointness over random dims up to (8, 8, 4, 4).
    #[test]
    fn adjoint_dot_product_random_dims(
        n_v in 1usize..=8,
        n_h in 1usize..=8,
        n_t in 1usize..=4,
        n_c in 1usize..=4,
        seed in 0u64..1_000_000,
    ) {
        let dims = Dims::new(n_v, n_h, n_t, n_c).unwrap();
        let mut r = rng(seed);
        let op = random_operator(dims, &mut r);
        let x = random_image(dims, &mut r);
        let y = random_kspace(&op, &mut r);
        let hx = op.apply_h(&x).unwrap();
        let hty = op.apply_h_adjoint(&y).unwrap();
        let lhs = dot(&kspace_to_vec(&hx), &kspace_to_vec(&y));
        let rhs = dot(&img_to_vec(&x), &img_to_vec(&hty));
        let scale = img_to_vec(&x).norm() * kspace_to_vec(&y).norm();
        prop_assert!((lhs - rhs).norm() <= 1e-12 * scale.max(1.0));
    }

    /// H is linear: H(a x1 + b x2) = a H x1 + b H x2.
    #[test]
    fn apply_h_linearity(seed in 0u64..1_000_000) {
        let dims = Dims::new(5, 4, 2, 2).unwrap();
        let mut r = rng(seed);
        let op = random_operator(dims, &mut r);
        let x1 = random_image(dims, &mut r);
        let x2 = random_image(dims, &mut r);
        let (a, b) = (random_complex(&mut r), random_complex(&mut r));

        let mut combo = ImageSequence::zeros(dims);
        for ((z, &u), &w) in combo
            .data_mut()
            .iter_mut()
            .zip(x1.data())
            .zip(x2.data())
        {
            *z = a * u + b * w;
        }
        let lhs = op.apply_h(&combo).unwrap();
        let y1 = op.apply_h(&x1).unwrap();
        let y2 = op.apply_h(&x2).unwrap();
        let want: Vec<Complex64> = y1
            .data()
            .iter()
            .zip(y2.data())
            .map(|(&u, &w)| a * u + b * w)
            .collect();
        prop_assert!(rel_err_slices(lhs.data(), &want) <= 1e-12);
    }
}
