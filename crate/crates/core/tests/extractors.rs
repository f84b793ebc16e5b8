use distractor::dsp::power_spectrum;
use distractor::extractors::{chrom, ica_pulse, jade, pos, spatial_average, RgbTrace};
use distractor::metrics::{estimate_rate, pearson, HR_BAND_BPM};
use distractor::synth::{render_scene, RateTrajectory, SceneConfig};
use distractor::{MaskSequence, Signal, VideoTensor};
use ndarray::{Array2, Array3, Array4};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn dominant_bpm(s: &Signal<f64>) -> (f64, f64) {
    let spec = power_spectrum(s, 0, None).unwrap();
    let (f, _) = spec.peak_in(HR_BAND_BPM.0, HR_BAND_BPM.1).unwrap();
    (f, spec.resolution_bpm)
}

fn rgb(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Signal<f64> {
    Signal::new(Array2::from_shape_fn((n, 3), |(t, c)| f(t, c)), 30.0).unwrap()
}

fn skin_trace(hr_bpm: f64, flicker: f64, seed: u64) -> Signal<f64> {
    let config = SceneConfig {
        hr_bpm: RateTrajectory::constant(hr_bpm),
        flicker_amp: flicker,
        motion_amp: 0.0,
        seed,
        ..SceneConfig::default()
    };
    let scene = render_scene::<f64>(&config).unwrap();
    spatial_average(&scene.video, &scene.attention).unwrap()
}

#[test]
fn full_roi_average_equals_frame_mean() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let data = Array4::from_shape_fn((4, 9, 7, 3), |_| rng.random_range(0.0f64..1.0));
    let video = VideoTensor::new(data.clone(), 30.0).unwrap();
    let roi = MaskSequence::new(Array3::from_elem((4, 9, 7), 1.0)).unwrap();
    let avg = spatial_average(&video, &roi).unwrap();
    for t in 0..4 {
        for c in 0..3 {
            let mean = data.slice(ndarray::s![t, .., .., c]).mean().unwrap();
            assert!((avg.samples()[[t, c]] - mean).abs() < 1e-9);
        }
    }
}

#[test]
fn chrom_cancels_common_multiplicative_flicker() {
    let n = 600;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let m: Vec<f64> = (0..n).map(|_| 0.5 + rng.random_range(-0.05..0.05)).collect();
    let out = chrom(&RgbTrace::new(rgb(n, |t, _| m[t])).unwrap()).unwrap();
    assert_eq!(out.len(), n);
    assert!(out.channel(0).iter().all(|v| v.abs() < 1e-6));
}

#[test]
fn constant_traces_give_zero() {
    let tr = RgbTrace::new(rgb(300, |_, c| 0.3 + 0.1 * c as f64)).unwrap();
    assert!(chrom(&tr).unwrap().channel(0).iter().all(|v| v.abs() < 1e-12));
    assert!(pos(&tr).unwrap().channel(0).iter().all(|v| v.abs() < 1e-12));
}

#[test]
fn pos_is_zero_when_green_equals_blue() {
    let tr = RgbTrace::new(rgb(300, |t, c| {
        let s = 0.5 + 0.01 * (t as f64 * 0.3).sin();
        if c == 0 { 0.6 + 0.02 * (t as f64 * 0.17).cos() } else { s }
    }))
    .unwrap();
    let out = pos(&tr).unwrap();
    assert_eq!(out.len(), 300);
    assert!(out.channel(0).iter().all(|v| v.abs() < 1e-12));
}

#[test]
fn chrom_and_pos_find_the_pulse_in_a_skin_trace() {
    let trace = skin_trace(78.0, 0.004, 3);
    let tr = RgbTrace::new(trace).unwrap();
    for out in [chrom(&tr).unwrap(), pos(&tr).unwrap()] {
        let (f, res) = dominant_bpm(&out);
        assert!((f - 78.0).abs() <= res, "{f} vs 78 (resolution {res})");
    }
}

#[test]
fn too_short_traces_rejected() {
    let tr = RgbTrace::new(rgb(40, |_, _| 0.5)).unwrap();
    assert!(pos(&tr).is_err());
    assert!(chrom(&tr).is_err());
}

fn uniform_sources(n: usize, k: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_fn((n, k), |_| rng.random_range(-1.0..1.0))
}

fn best_abs_corr(sources: &Array2<f64>, comps: &Signal<f64>) -> Vec<f64> {
    (0..sources.ncols())
        .map(|i| {
            (0..comps.num_channels())
                .map(|j| {
                    pearson(&sources.column(i).to_vec(), &comps.channel(j).to_vec())
                        .unwrap()
                        .unwrap()
                        .abs()
                })
                .fold(0.0, f64::max)
        })
        .collect()
}

#[test]
fn jade_unmixes_uniform_sources() {
    let s = uniform_sources(2000, 2, 4);
    let mix = ndarray::array![[1.0, 0.5], [0.5, 1.0]];
    let x = s.dot(&mix.t());
    let out = jade(&Signal::new(x, 30.0).unwrap()).unwrap();
    assert!(best_abs_corr(&s, &out.components).iter().all(|&r| r > 0.95));
}

#[test]
fn jade_keeps_independent_inputs() {
    let s = uniform_sources(2000, 3, 5);
    let out = jade(&Signal::new(s.clone(), 30.0).unwrap()).unwrap();
    assert!(best_abs_corr(&s, &out.components).iter().all(|&r| r > 0.99));
}

#[test]
fn jade_rejects_duplicated_channel() {
    let s = uniform_sources(500, 1, 6);
    let x = Array2::from_shape_fn((500, 2), |(t, _)| s[[t, 0]]);
    assert!(matches!(
        jade(&Signal::new(x, 30.0).unwrap()),
        Err(distractor::Error::RankDeficient { .. })
    ));
}

#[test]
fn ica_selects_the_pulse_component() {
    let n = 900;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let pulse: Vec<f64> = (0..n).map(|i| (2.0 * PI * 1.3 * i as f64 / 30.0).sin()).collect();
    let n1: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let n2: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mix = [[0.3, 0.8, 0.2], [0.9, 0.3, 0.4], [0.2, 0.3, 0.9]];
    let trace = rgb(n, |t, c| {
        let src = [pulse[t], n1[t], n2[t]];
        1.0 + 0.01 * (0..3).map(|j| mix[c][j] * src[j]).sum::<f64>()
    });
    let out = ica_pulse(&RgbTrace::new(trace).unwrap()).unwrap();
    let (f, res) = dominant_bpm(&out);
    assert!((f - 78.0).abs() <= res, "{f}");
    // Positive orientation with respect to green.
    let g: Vec<f64> = (0..n).map(|t| pulse[t] * 0.3 + n1[t] * 0.3 + n2[t] * 0.4).collect();
    assert!(pearson(&g, &out.channel(0).to_vec()).unwrap().unwrap() > 0.0);
}

#[test]
fn ica_pulse_in_one_channel() {
    let n = 900;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let trace = rgb(n, |t, c| {
        let noise = rng.random_range(-1.0..1.0);
        if c == 1 {
            1.0 + 0.01 * (2.0 * PI * 1.1 * t as f64 / 30.0).sin() + 0.002 * noise
        } else {
            1.0 + 0.01 * noise
        }
    });
    let out = ica_pulse(&RgbTrace::new(trace).unwrap()).unwrap();
    let (f, res) = dominant_bpm(&out);
    assert!((f - 66.0).abs() <= res, "{f}");
}

#[test]
fn ica_on_pure_noise_still_returns() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let trace = rgb(600, |_, _| 1.0 + 0.01 * rng.random_range(-1.0..1.0));
    assert_eq!(ica_pulse(&RgbTrace::new(trace).unwrap()).unwrap().len(), 600);
}

#[test]
fn skin_trace_rate_estimates() {
    let trace = skin_trace(90.0, 0.0, 10);
    let out = chrom(&RgbTrace::new(trace).unwrap()).unwrap();
    let r = estimate_rate(&out, HR_BAND_BPM, 30.0).unwrap();
    assert!((r[0].unwrap() - 90.0).abs() < 1.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn gain_invariance(k in 0.05f64..20.0, seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 240;
        let base = rgb(n, |t, c| 0.4 + 0.1 * c as f64 + 0.01 * (t as f64 * (0.2 + 0.05 * c as f64)).sin() + 0.002 * rng.random_range(-1.0..1.0));
        let scaled = base.map_channels(|x| Ok(x.mapv(|v| v * k))).unwrap();
        let (a, b) = (RgbTrace::new(base).unwrap(), RgbTrace::new(scaled).unwrap());
        for (x, y) in chrom(&a).unwrap().channel(0).iter().zip(chrom(&b).unwrap().channel(0).iter()) {
            prop_assert!((x - y).abs() < 1e-6);
        }
        for (x, y) in pos(&a).unwrap().channel(0).iter().zip(pos(&b).unwrap().channel(0).iter()) {
            prop_assert!((x - y).abs() < 1e-6);
        }
    }

    #[test]
    fn outputs_keep_length(n in 60usize..400) {
        let tr = RgbTrace::new(rgb(n, |t, c| 0.5 + 0.01 * ((t * (c + 1)) as f64 * 0.1).sin())).unwrap();
        prop_assert_eq!(chrom(&tr).unwrap().len(), n);
        prop_assert_eq!(pos(&tr).unwrap().len(), n);
    }
}
