use distractor::metrics::{
    estimate_rate, evaluate, f_cdf, f_test, mae, pearson, rate_of_window, rmse, snr, wmae, EvalConfig, SnrConfig,
    HR_BAND_BPM,
};
use distractor::Signal;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use std::f64::consts::PI;

fn tones(parts: &[(f64, f64)], fps: f64, n: usize) -> Signal<f64> {
    let v = (0..n)
        .map(|i| parts.iter().map(|&(bpm, a)| a * (2.0 * PI * bpm / 60.0 * i as f64 / fps).sin()).sum())
        .collect();
    Signal::from_vec(v, fps).unwrap()
}

/// Direct-DFT periodogram on the same zero-padded grid, then the harmonic-band
/// ratio of squared power.
fn snr_oracle(x: &[f64], fps: f64, nfft: usize, hr: f64) -> f64 {
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    let (mut sig, mut noise) = (0.0, 0.0);
    for k in 0..=nfft / 2 {
        let f = k as f64 * fps * 60.0 / nfft as f64;
        if !(42.0..=240.0).contains(&f) {
            continue;
        }
        let (mut re, mut im) = (0.0, 0.0);
        for (t, v) in x.iter().enumerate() {
            let ph = -2.0 * PI * (k * t) as f64 / nfft as f64;
            re += (v - mean) * ph.cos();
            im += (v - mean) * ph.sin();
        }
        let p = (re * re + im * im) / n as f64;
        if (f - hr).abs() <= 6.0 || (f - 2.0 * hr).abs() <= 6.0 {
            sig += p * p;
        } else {
            noise += p * p;
        }
    }
    10.0 * (sig / noise).log10()
}

#[test]
fn snr_matches_direct_dft() {
    let s = tones(&[(72.0, 1.0), (100.0, 0.4), (150.0, 0.2)], 30.0, 300);
    let fast = snr(&s, 72.0, SnrConfig::default()).unwrap();
    let oracle = snr_oracle(s.channel(0).as_slice().unwrap(), 30.0, 4096, 72.0);
    assert!((fast - oracle).abs() < 1e-9, "{fast} vs {oracle}");
}

#[test]
fn snr_two_equal_tones_is_near_zero_db() {
    // hr + 60 must stay clear of the second-harmonic band.
    for hr in [48.0, 72.0, 90.0, 110.0] {
        let s = tones(&[(hr, 1.0), (hr + 60.0, 1.0)], 30.0, 900);
        let v = snr(&s, hr, SnrConfig::default()).unwrap();
        assert!(v.abs() < 0.2, "hr {hr}: {v} dB");
    }
}

#[test]
fn snr_of_pure_tone_is_infinite() {
    // Leakage always reaches some out-of-band bins on the full range, so
    // shrink the range to the fundamental's neighbourhood.
    let cfg = SnrConfig { band_bpm: (66.0, 78.0), ..SnrConfig::default() };
    let s = tones(&[(72.0, 1.0)], 30.0, 900);
    assert_eq!(snr(&s, 72.0, cfg).unwrap(), f64::INFINITY);
    assert!(snr(&s, 30.0, SnrConfig::default()).is_err());
}

#[test]
fn snr_of_white_noise_tracks_band_widths() {
    let hr = 80.0;
    let expect = 10.0 * (24.0f64 / (198.0 - 24.0)).log10();
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut total = 0.0;
    let seeds = 200;
    for seed in 0..seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..900).map(|_| normal.sample(&mut rng)).collect();
        total += snr(&Signal::from_vec(x, 30.0).unwrap(), hr, SnrConfig::default()).unwrap();
    }
    let mean = total / seeds as f64;
    assert!((mean - expect).abs() < 1.0, "{mean} vs {expect}");
}

#[test]
fn rate_examples() {
    let s = tones(&[(90.0, 1.0)], 30.0, 900);
    let r = rate_of_window(&s, HR_BAND_BPM).unwrap().unwrap();
    assert!((r - 90.0).abs() < 0.5);
    let two = tones(&[(72.0, 1.0), (180.0, 0.6)], 30.0, 900);
    let r = rate_of_window(&two, HR_BAND_BPM).unwrap().unwrap();
    assert!((r - 72.0).abs() < 0.5);
    let zero = Signal::from_vec(vec![0.0; 900], 30.0).unwrap();
    assert_eq!(rate_of_window(&zero, HR_BAND_BPM).unwrap(), None);
    assert!(rate_of_window(&s, (1000.0, 2000.0)).is_err());
    let long = tones(&[(66.0, 1.0)], 30.0, 2700);
    let rates = estimate_rate(&long, HR_BAND_BPM, 30.0).unwrap();
    assert_eq!(rates.len(), 3);
    assert!(estimate_rate(&tones(&[(66.0, 1.0)], 30.0, 200), HR_BAND_BPM, 30.0).is_err());
}

#[test]
fn error_metric_examples() {
    assert_eq!(mae(&[60.0, 62.0], &[61.0, 63.0]).unwrap(), 1.0);
    assert_eq!(rmse(&[60.0, 62.0], &[61.0, 63.0]).unwrap(), 1.0);
    assert_eq!(mae(&[60.0], &[64.0]).unwrap(), 4.0);
    assert_eq!(rmse(&[60.0], &[64.0]).unwrap(), 4.0);
    assert_eq!(mae(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
    assert!(mae(&[1.0], &[1.0, 2.0]).is_err());
}

#[test]
fn pearson_examples_and_oracle() {
    let r = [60.0, 65.0, 71.0, 80.0];
    assert!((pearson(&r, &r).unwrap().unwrap() - 1.0).abs() < 1e-15);
    let neg: Vec<f64> = r.iter().map(|v| 200.0 - v).collect();
    assert!((pearson(&r, &neg).unwrap().unwrap() + 1.0).abs() < 1e-15);
    let aff: Vec<f64> = r.iter().map(|v| 2.0 * v + 5.0).collect();
    assert!((pearson(&r, &aff).unwrap().unwrap() - 1.0).abs() < 1e-15);
    assert_eq!(pearson(&r, &[1.0; 4]).unwrap(), None);

    let normal = Normal::new(70.0, 10.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let a: Vec<f64> = (0..40).map(|_| normal.sample(&mut rng)).collect();
    let b: Vec<f64> = a.iter().map(|v| 0.5 * v + normal.sample(&mut rng)).collect();
    let n = a.len() as f64;
    let (sx, sy) = (a.iter().sum::<f64>(), b.iter().sum::<f64>());
    let sxy: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
    let sxx: f64 = a.iter().map(|x| x * x).sum();
    let syy: f64 = b.iter().map(|y| y * y).sum();
    let textbook = (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt());
    assert!((pearson(&a, &b).unwrap().unwrap() - textbook).abs() < 1e-12);
}

#[test]
fn wmae_examples() {
    let w = tones(&[(60.0, 1.0)], 30.0, 900);
    let neg = Signal::from_vec(w.channel(0).iter().map(|v| -v).collect(), 30.0).unwrap();
    let zero = Signal::from_vec(vec![0.0; 900], 30.0).unwrap();
    assert_eq!(wmae(&w, &w, 30.0).unwrap(), 0.0);
    assert!((wmae(&w, &neg, 30.0).unwrap() / (4.0 / PI) - 1.0).abs() < 0.01);
    assert!((wmae(&w, &zero, 30.0).unwrap() / (2.0 / PI) - 1.0).abs() < 0.01);
    assert!(wmae(&w, &Signal::from_vec(vec![0.0; 899], 30.0).unwrap(), 30.0).is_err());
}

/// Regularised incomplete beta by Simpson integration of the beta kernel.
fn beta_cdf_oracle(a: f64, b: f64, x: f64) -> f64 {
    let g = |u: f64| u.powf(a - 1.0) * (1.0 - u).powf(b - 1.0);
    let simpson = |lo: f64, hi: f64| {
        let m = 20_000;
        let h = (hi - lo) / m as f64;
        let mut s = g(lo) + g(hi);
        for i in 1..m {
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * g(lo + i as f64 * h);
        }
        s * h / 3.0
    };
    simpson(0.0, x) / simpson(0.0, 1.0)
}

#[test]
fn f_distribution_matches_integration() {
    for (f, d1, d2) in [(3.18, 9.0, 9.0), (1.0, 4.0, 12.0), (0.4, 20.0, 8.0), (2.5, 6.0, 30.0)] {
        let x = d1 * f / (d1 * f + d2);
        let oracle = beta_cdf_oracle(d1 / 2.0, d2 / 2.0, x);
        assert!((f_cdf(f, d1, d2) - oracle).abs() < 1e-7, "F={f}");
    }
}

#[test]
fn f_test_examples() {
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let b: Vec<f64> = (0..10).map(|_| normal.sample(&mut rng)).collect();
    assert!((f_test(&b, &b).unwrap().f - 1.0).abs() < 1e-12);
    let a: Vec<f64> = b.iter().map(|v| 2.0 * v).collect();
    assert!((f_test(&a, &b).unwrap().f - 4.0).abs() < 1e-12);
    // Scale so the variance ratio hits the tabulated 5% point of F(9, 9).
    let scale = (3.18f64).sqrt();
    let c: Vec<f64> = b.iter().map(|v| scale * v).collect();
    let t = f_test(&c, &b).unwrap();
    assert_eq!((t.df1, t.df2), (9.0, 9.0));
    assert!((t.p - 0.10).abs() < 0.01, "{}", t.p);
    assert!(f_test(&a, &[1.0, 1.0, 1.0]).is_err());
    assert!(f_test(&[1.0], &b).is_err());
}

#[test]
fn evaluate_report_and_csv() {
    let truth = tones(&[(72.0, 1.0)], 30.0, 1800);
    let est = tones(&[(72.0, 1.0), (150.0, 0.3)], 30.0, 1800);
    let rep = evaluate(&est, &truth, EvalConfig::default()).unwrap();
    assert_eq!(rep.windows.len(), 2);
    assert!(rep.mae < 0.5 && rep.rmse >= rep.mae);
    let csv = rep.to_csv();
    assert_eq!(csv.lines().count(), 4);
    assert!(csv.lines().last().unwrap().starts_with("summary"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rmse_dominates_mae(pairs in proptest::collection::vec((40.0f64..200.0, 40.0f64..200.0), 1..30)) {
        let (r, e): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let m = mae(&r, &e).unwrap();
        let s = rmse(&r, &e).unwrap();
        prop_assert!(m >= 0.0);
        prop_assert!(s + 1e-12 >= m);
    }

    #[test]
    fn pearson_affine_invariance(pairs in proptest::collection::vec((40.0f64..200.0, 40.0f64..200.0), 3..30), a in 0.1f64..10.0, b in -50.0f64..50.0) {
        let (r, e): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        if let Some(p) = pearson(&r, &e).unwrap() {
            prop_assert!((-1.0..=1.0).contains(&p));
            let mapped: Vec<f64> = e.iter().map(|v| a * v + b).collect();
            prop_assert!((pearson(&r, &mapped).unwrap().unwrap() - p).abs() < 1e-9);
        }
    }

    #[test]
    fn snr_monotone_in_added_power(hr in 50.0f64..110.0, extra in 0.05f64..1.0, off in 20.0f64..30.0) {
        let base = tones(&[(hr, 1.0), (hr + off, 0.8)], 30.0, 900);
        let s0 = snr(&base, hr, SnrConfig::default()).unwrap();
        let more_signal = tones(&[(hr, 1.0 + extra), (hr + off, 0.8)], 30.0, 900);
        let more_noise = tones(&[(hr, 1.0), (hr + off, 0.8 + extra)], 30.0, 900);
        prop_assert!(snr(&more_signal, hr, SnrConfig::default()).unwrap() > s0);
        prop_assert!(snr(&more_noise, hr, SnrConfig::default()).unwrap() < s0);
    }
}
