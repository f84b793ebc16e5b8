use distractor::attention::{
    downsample_frame, invert_mask, noise_estimate, normalize_mask, region_partition, InversionConfig, Region,
};
use distractor::{MaskSequence, VideoTensor};
use ndarray::{Array3, Array4};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_video(rng: &mut ChaCha8Rng, t: usize, h: usize, w: usize) -> VideoTensor<f64> {
    VideoTensor::new(Array4::from_shape_fn((t, h, w, 3), |_| rng.random::<f64>()), 30.0).unwrap()
}

fn random_mask(rng: &mut ChaCha8Rng, t: usize, h: usize, w: usize) -> MaskSequence<f64> {
    MaskSequence::new(Array3::from_shape_fn((t, h, w), |_| rng.random::<f64>())).unwrap()
}

fn naive(video: &VideoTensor<f64>, mask: &MaskSequence<f64>) -> Vec<[f64; 3]> {
    let (t_n, h, w) = (video.frames(), video.height(), video.width());
    let mut out = vec![[0.0; 3]; t_n];
    for t in 0..t_n {
        for c in 0..3 {
            let mut acc = 0.0;
            for y in 0..h {
                for x in 0..w {
                    acc += video.data()[[t, y, x, c]] * mask.data()[[t, y, x]];
                }
            }
            out[t][c] = acc / (h * w) as f64;
        }
    }
    out
}

#[test]
fn weighted_average_matches_double_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let video = random_video(&mut rng, 100, 34, 34);
    let mask = random_mask(&mut rng, 100, 34, 34);
    let fast = noise_estimate(&video, &mask).unwrap();
    for (t, row) in naive(&video, &mask).iter().enumerate() {
        for c in 0..3 {
            assert!((fast.samples()[[t, c]] - row[c]).abs() < 1e-6);
        }
    }
}

#[test]
fn trivial_masks() {
    let video = VideoTensor::new(Array4::from_elem((2, 5, 5, 3), 0.3f64), 30.0).unwrap();
    let ones = MaskSequence::<f64>::new(Array3::ones((2, 5, 5))).unwrap();
    let zeros = MaskSequence::new(Array3::zeros((2, 5, 5))).unwrap();
    let a = noise_estimate(&video, &ones).unwrap();
    assert!(a.samples().iter().all(|&v| (v - 0.3).abs() < 1e-15));
    let b = noise_estimate(&video, &zeros).unwrap();
    assert!(b.samples().iter().all(|&v| v == 0.0));
    let wrong = MaskSequence::new(Array3::ones((2, 4, 5))).unwrap();
    assert!(noise_estimate(&video, &wrong).is_err());
    let short = MaskSequence::new(Array3::ones((1, 5, 5))).unwrap();
    assert!(noise_estimate(&video, &short).is_err());
}

#[test]
fn inversion_examples() {
    let a = MaskSequence::new(Array3::from_shape_vec((1, 1, 4), vec![0.05, 0.5, 0.1, 0.95]).unwrap()).unwrap();
    let m = invert_mask(&a, InversionConfig::binary(0.1).unwrap()).unwrap();
    assert_eq!(m.data().iter().copied().collect::<Vec<_>>(), vec![1.0, 0.0, 1.0, 0.0]);
    assert!(m.is_binary());
    let c = MaskSequence::new(Array3::from_shape_vec((1, 1, 3), vec![0.0f64, 0.3, 1.0]).unwrap()).unwrap();
    let inv = invert_mask(&c, InversionConfig::continuous()).unwrap();
    let expect = [1.0f64, 0.7, 0.0];
    for (v, e) in inv.data().iter().zip(expect) {
        assert!((v - e).abs() < 1e-15);
    }
    let raw = MaskSequence::new(Array3::from_shape_vec((1, 1, 2), vec![2.0, 4.0]).unwrap()).unwrap();
    assert!(invert_mask(&raw, InversionConfig::default()).is_err());
    assert!(InversionConfig::binary(0.0).is_err());
    assert!(InversionConfig::binary(1.0).is_err());
}

#[test]
fn normalization_examples() {
    let raw = MaskSequence::new(Array3::from_shape_vec((2, 1, 2), vec![2.0, 4.0, 3.0, 3.0]).unwrap()).unwrap();
    let n = normalize_mask(&raw).unwrap();
    assert_eq!(n.data().iter().copied().collect::<Vec<_>>(), vec![0.0, 1.0, 0.0, 0.0]);
    assert!(n.is_normalized());
    let unit = MaskSequence::new(Array3::from_shape_vec((1, 1, 3), vec![0.0, 0.4, 1.0]).unwrap()).unwrap();
    assert_eq!(normalize_mask(&unit).unwrap(), unit);
}

#[test]
fn downsample_constant_identity_and_corners() {
    let constant = Array3::from_elem((68, 50, 3), 0.42f64);
    let out = downsample_frame(constant.view(), (34, 34)).unwrap();
    assert!(out.iter().all(|&v| (v - 0.42).abs() < 1e-12));

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let frame = Array3::from_shape_fn((34, 34, 3), |_| rng.random::<f64>());
    assert_eq!(downsample_frame(frame.view(), (34, 34)).unwrap(), frame);

    // Bilinear ramp: at the aligned corners the kernel sum reduces to a single
    // unit tap, so the output corners equal the input corners.
    let (h, w) = (68, 50);
    let ramp = Array3::from_shape_fn((h, w, 1), |(y, x, _)| 0.1 + 0.003 * y as f64 + 0.007 * x as f64 + 1e-4 * (x * y) as f64);
    let out = downsample_frame(ramp.view(), (34, 34)).unwrap();
    for (oy, ox, iy, ix) in [(0, 0, 0, 0), (0, 33, 0, w - 1), (33, 0, h - 1, 0), (33, 33, h - 1, w - 1)] {
        assert!((out[[oy, ox, 0]] - ramp[[iy, ix, 0]]).abs() < 1e-6);
    }
    assert!(downsample_frame(frame.view(), (35, 34)).is_err());
}

#[test]
fn central_block_geometry() {
    let ones = MaskSequence::<f64>::new(Array3::ones((1, 34, 34))).unwrap();
    let center = region_partition(&ones, Region::Center).unwrap();
    for y in 0..34 {
        for x in 0..34 {
            let inside = (8..=24).contains(&y) && (8..=24).contains(&x);
            assert_eq!(center.data()[[0, y, x]], if inside { 1.0 } else { 0.0 }, "({y},{x})");
        }
    }
    let zeros = MaskSequence::<f64>::new(Array3::zeros((1, 34, 34))).unwrap();
    for r in [Region::Center, Region::Edges] {
        assert!(region_partition(&zeros, r).unwrap().data().iter().all(|&v| v == 0.0));
    }
}

fn arb_seed() -> impl Strategy<Value = u64> {
    any::<u64>()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn weighted_average_is_linear(seed in arb_seed(), a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (t, h, w) = (3, 9, 7);
        let i1 = Array4::from_shape_fn((t, h, w, 3), |_| rng.random::<f64>());
        let i2 = Array4::from_shape_fn((t, h, w, 3), |_| rng.random::<f64>());
        let mask = random_mask(&mut rng, t, h, w);
        let v1 = VideoTensor::new(i1.clone(), 30.0).unwrap();
        let v2 = VideoTensor::new(i2.clone(), 30.0).unwrap();
        let n1 = noise_estimate(&v1, &mask).unwrap();
        let n2 = noise_estimate(&v2, &mask).unwrap();
        // Videos are clamped to [0, 1], so test the scaled and shifted combination.
        let s = a.abs() + b.abs() + 1.0;
        let shift = (a.min(0.0) + b.min(0.0)) / s;
        let combo = (&i1 * (a / s) + &i2 * (b / s)) - shift;
        let vc = VideoTensor::new(combo, 30.0).unwrap();
        let nc = noise_estimate(&vc, &mask).unwrap();
        let ones = noise_estimate(&VideoTensor::new(Array4::ones((t, h, w, 3)), 30.0).unwrap(), &mask).unwrap();
        for k in 0..t {
            for c in 0..3 {
                let expect = (a * n1.samples()[[k, c]] + b * n2.samples()[[k, c]]) / s - shift * ones.samples()[[k, c]];
                prop_assert!((nc.samples()[[k, c]] - expect).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn larger_support_never_decreases(seed in arb_seed(), extra in 0.0f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let video = random_video(&mut rng, 2, 8, 8);
        let small_bits: Vec<f64> = (0..128).map(|_| if rng.random::<f64>() < 0.3 { 1.0 } else { 0.0 }).collect();
        let big_bits: Vec<f64> = small_bits.iter().map(|&v| if v == 1.0 || rng.random::<f64>() < extra { 1.0 } else { 0.0 }).collect();
        let small = MaskSequence::new(Array3::from_shape_vec((2, 8, 8), small_bits).unwrap()).unwrap();
        let big = MaskSequence::new(Array3::from_shape_vec((2, 8, 8), big_bits).unwrap()).unwrap();
        let ns = noise_estimate(&video, &small).unwrap();
        let nb = noise_estimate(&video, &big).unwrap();
        for (s, b) in ns.samples().iter().zip(nb.samples().iter()) {
            prop_assert!(b >= s);
        }
    }

    #[test]
    fn inversion_laws(seed in arb_seed(), threshold in 0.01f64..0.99) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = normalize_mask(&random_mask(&mut rng, 2, 6, 5)).unwrap();
        let bin = invert_mask(&a, InversionConfig::binary(threshold).unwrap()).unwrap();
        prop_assert!(bin.data().iter().all(|&v| v == 0.0 || v == 1.0));
        let twice = invert_mask(&invert_mask(&a, InversionConfig::continuous()).unwrap(), InversionConfig::continuous()).unwrap();
        for (x, y) in twice.data().iter().zip(a.data().iter()) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn regions_partition_the_mask(seed in arb_seed(), h in 2usize..40, w in 2usize..40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_mask(&mut rng, 2, h, w);
        let c = region_partition(&m, Region::Center).unwrap();
        let e = region_partition(&m, Region::Edges).unwrap();
        for ((a, b), x) in c.data().iter().zip(e.data().iter()).zip(m.data().iter()) {
            prop_assert_eq!(a + b, *x);
            prop_assert!(*a == 0.0 || *b == 0.0);
        }
    }
}
