mod common;

use common::*;
use nalgebra::DMatrix;
use num_complex::Complex;
use proptest::prelude::*;
use tensor_mvsc::error::Error;
use tensor_mvsc::tensor3::*;
use tensor_mvsc::{SpectralTensor3, Tensor3, Tensor3f32};

fn dims() -> impl Strategy<Value = (usize, usize, usize, usize)> {
    (1usize..=6, 1usize..=6, 1usize..=6, 1usize..=7)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fast_tproduct_matches_reference_and_convolution((n1, n2, n4, n3) in dims(), seed in any::<u64>()) {
        let mut r = rng(seed);
        let a = gaussian(&mut r, n1, n2, n3);
        let b = gaussian(&mut r, n2, n4, n3);
        let fast = tproduct(&a, &b).unwrap();
        let conv = tproduct_conv(&a, &b);
        prop_assert!(rel_err(&fast, &conv) <= 1e-10);
        prop_assert!(rel_err(&tproduct_reference(&a, &b).unwrap(), &conv) <= 1e-10);
        let via_bcirc = bcirc(&a) * unfold(&b);
        let diff = (&via_bcirc - unfold(&fast)).norm() / via_bcirc.norm().max(1e-300);
        prop_assert!(diff <= 1e-10);
    }

    #[test]
    fn fold_unfold_and_twist_squeeze_are_exact_inverses((n1, n2, _, n3) in dims(), seed in any::<u64>()) {
        let mut r = rng(seed);
        let a = gaussian(&mut r, n1, n2, n3);
        prop_assert_eq!(&fold(&unfold(&a), n3).unwrap(), &a);
        let m = gaussian_matrix(&mut r, n1, n3);
        prop_assert_eq!(squeeze(&twist(&m).unwrap()).unwrap(), m);
    }

    #[test]
    fn fft_matches_direct_dft_and_round_trips((n1, n2, _, n3) in dims(), seed in any::<u64>()) {
        let mut r = rng(seed);
        let a = gaussian(&mut r, n1, n2, n3);
        let f = fft_mode3(&a);
        let direct = dft_slices(&a);
        let scale = fro(&a) * (n3 as f64).sqrt();
        for (l, d) in direct.iter().enumerate() {
            prop_assert!((f.frontal_slice(l) - d).norm() <= 1e-12 * scale.max(1.0) * n3 as f64);
        }
        // Parseval with the unnormalized transform.
        let lhs = f.fro_norm_sq();
        let rhs = n3 as f64 * a.fro_norm_sq();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * rhs.max(1.0));
        prop_assert!(f.conjugate_symmetry_defect() <= 1e-12);
        prop_assert!(rel_err(&ifft_mode3(&f).unwrap(), &a) <= 1e-12);
    }

    #[test]
    fn tproduct_is_associative_and_distributive((n1, n2, n4, n3) in dims(), n5 in 1usize..=5, seed in any::<u64>()) {
        let mut r = rng(seed);
        let a = gaussian(&mut r, n1, n2, n3);
        let b = gaussian(&mut r, n2, n4, n3);
        let b2 = gaussian(&mut r, n2, n4, n3);
        let c = gaussian(&mut r, n4, n5, n3);
        let left = tproduct(&tproduct(&a, &b).unwrap(), &c).unwrap();
        let right = tproduct(&a, &tproduct(&b, &c).unwrap()).unwrap();
        prop_assert!(rel_err(&left, &right) <= 1e-9);
        let sum = tproduct(&a, &(&b + &b2)).unwrap();
        let split = &tproduct(&a, &b).unwrap() + &tproduct(&a, &b2).unwrap();
        prop_assert!(rel_err(&sum, &split) <= 1e-9);
    }

    #[test]
    fn identity_is_neutral((n1, n2, _, n3) in dims(), seed in any::<u64>()) {
        let mut r = rng(seed);
        let a = gaussian(&mut r, n1, n2, n3);
        prop_assert!(rel_err(&tproduct(&identity_tensor(n1, n3), &a).unwrap(), &a) <= 1e-12);
        prop_assert!(rel_err(&tproduct(&a, &identity_tensor(n2, n3)).unwrap(), &a) <= 1e-12);
    }

    #[test]
    fn norms_agree_with_loop_oracles((n1, n2, _, n3) in dims(), seed in any::<u64>(), s in -4.0f64..4.0) {
        let mut r = rng(seed);
        let a = gaussian(&mut r, n1, n2, n3);
        let b = gaussian(&mut r, n1, n2, n3);
        let tnn = norm_tnn(&a).unwrap();
        prop_assert!((tnn - tnn_oracle(&a)).abs() <= 1e-10 * tnn.max(1.0));
        prop_assert!((norm_f1(&a) - f1_oracle(&a)).abs() <= 1e-12 * f1_oracle(&a).max(1.0));
        prop_assert!((norm_ff1(&a) - ff1_oracle(&a)).abs() <= 1e-12 * ff1_oracle(&a).max(1.0));
        prop_assert!((norm_fro(&a) - fro(&a)).abs() <= 1e-12 * fro(&a).max(1.0));

        let norms: [fn(&Tensor3<f64>) -> f64; 4] = [
            |t| norm_tnn(t).unwrap(),
            norm_f1,
            norm_ff1,
            norm_fro,
        ];
        for norm in norms {
            let (na, nb) = (norm(&a), norm(&b));
            prop_assert!(na >= 0.0);
            prop_assert!((norm(&a.scale(s)) - s.abs() * na).abs() <= 1e-10 * na.max(1.0));
            prop_assert!(norm(&(&a + &b)) <= na + nb + 1e-10 * (na + nb));
            prop_assert_eq!(norm(&Tensor3::zeros(n1, n2, n3)), 0.0);
        }
    }

    #[test]
    fn half_spectrum_product_matches_full_computation((n1, n2, n4, n3) in dims(), seed in any::<u64>()) {
        let mut r = rng(seed);
        let fa = fft_mode3(&gaussian(&mut r, n1, n2, n3));
        let fb = fft_mode3(&gaussian(&mut r, n2, n4, n3));
        let half = spectral_product(&fa, &fb).unwrap();
        for l in 0..n3 {
            let full = fa.frontal_slice(l) * fb.frontal_slice(l);
            let scale = full.norm().max(1.0);
            prop_assert!((half.frontal_slice(l) - full).norm() <= 1e-12 * scale);
        }
    }
}

#[test]
fn tnn_of_identity_is_n_times_n3() {
    for (n, n3) in [(2, 3), (4, 5), (1, 1), (3, 4)] {
        let tnn = norm_tnn(&identity_tensor::<f64>(n, n3)).unwrap();
        assert!((tnn - (n * n3) as f64).abs() <= 1e-9, "({n},{n3}): {tnn}");
    }
}

#[test]
fn constant_tube_has_all_energy_in_zero_frequency() {
    let a = Tensor3::from_fn(1, 1, 4, |_, _, _| 2.5);
    let f = fft_mode3(&a);
    assert_eq!(f.get(0, 0, 0), Complex::new(10.0, 0.0));
    for l in 1..4 {
        assert!(f.get(0, 0, l).norm() < 1e-15);
    }
}

#[test]
fn impulse_tube_has_flat_spectrum() {
    let a = Tensor3::from_vec((1, 1, 4), vec![1.0, 0.0, 0.0, 0.0]).unwrap();
    let f = fft_mode3(&a);
    for l in 0..4 {
        assert!((f.get(0, 0, l) - Complex::new(1.0, 0.0)).norm() < 1e-15);
    }
}

#[test]
fn shifted_impulse_shifts_the_tubes() {
    // The impulse at l = 1 acts as a cyclic shift along the third mode.
    let mut shift = Tensor3::zeros(1, 1, 4);
    shift[(0, 0, 1)] = 1.0;
    let b = Tensor3::from_vec((1, 1, 4), vec![1.0, 2.0, 3.0, 4.0]).unwrap();
    let out = tproduct(&shift, &b).unwrap();
    assert_eq!(out.tube(0, 0).iter().map(|x: &f64| x.round()).collect::<Vec<_>>(), vec![4.0, 1.0, 2.0, 3.0]);
}

#[test]
fn non_symmetric_spectrum_is_rejected_on_inverse() {
    let mut s = SpectralTensor3::<f64>::zeros(2, 2, 4);
    let mut slice = DMatrix::from_element(2, 2, Complex::new(0.0, 0.0));
    slice[(0, 0)] = Complex::new(0.0, 1.0);
    s.set_frontal_slice(1, &slice);
    assert!(s.conjugate_symmetry_defect() > 0.5);
    assert!(matches!(ifft_mode3(&s), Err(Error::ImaginaryResidue { .. })));
}

#[test]
fn mismatched_shapes_are_rejected() {
    let a = Tensor3::<f64>::zeros(2, 3, 4);
    assert!(matches!(tproduct(&a, &Tensor3::zeros(2, 3, 4)), Err(Error::DimensionMismatch { .. })));
    assert!(matches!(tproduct(&a, &Tensor3::zeros(3, 3, 5)), Err(Error::DimensionMismatch { .. })));
    assert!(fold(&DMatrix::<f64>::zeros(5, 2), 2).is_err());
    assert!(Tensor3::from_vec((2, 2, 2), vec![0.0; 7]).is_err());
    assert!(Tensor3::from_vec((1, 1, 2), vec![0.0, f64::NAN]).is_err());
}

#[test]
fn single_precision_agrees_with_double() {
    let mut r = rng(7);
    let a = gaussian(&mut r, 4, 3, 5);
    let b = gaussian(&mut r, 3, 2, 5);
    let a32: Tensor3f32 = Tensor3::from_fn(4, 3, 5, |i, j, l| a[(i, j, l)] as f32);
    let b32: Tensor3f32 = Tensor3::from_fn(3, 2, 5, |i, j, l| b[(i, j, l)] as f32);
    let p = tproduct(&a, &b).unwrap();
    let p32 = tproduct(&a32, &b32).unwrap();
    let widened = Tensor3::from_fn(4, 2, 5, |i, j, l| p32[(i, j, l)] as f64);
    assert!(rel_err(&widened, &p) < 1e-5);
    assert!((norm_tnn(&a32).unwrap() as f64 - norm_tnn(&a).unwrap()).abs() < 1e-4 * norm_tnn(&a).unwrap());
}
