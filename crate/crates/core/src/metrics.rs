//! Evaluation metrics over 30 s non-overlapping windows.

use std::fmt::Write as _;
use std::ops::Range;

use statrs::function::beta::beta_reg;

use crate::dsp::power_spectrum;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::signalio::Signal;

pub const HR_BAND_BPM: (f64, f64) = (42.0, 240.0);
pub const BR_BAND_BPM: (f64, f64) = (5.0, 30.0);
pub const EVAL_WINDOW_SEC: f64 = 30.0;
pub const MIN_WINDOW_SEC: f64 = 10.0;
/// Half width of each harmonic band in the SNR numerator.
pub const SNR_HALF_WIDTH_BPM: f64 = 6.0;

/// Non-overlapping windows of `window_sec`. A trailing partial window is
/// dropped; a signal shorter than one window but at least 10 s long is used
/// whole.
pub fn evaluation_windows(n: usize, fps: f64, window_sec: f64) -> Result<Vec<Range<usize>>> {
    if !(window_sec >= MIN_WINDOW_SEC) {
        return Err(Error::invalid(format!("window must be at least {MIN_WINDOW_SEC} s")));
    }
    let len = (window_sec * fps).round() as usize;
    let count = n / len;
    if count == 0 {
        if n as f64 >= (MIN_WINDOW_SEC * fps).round() {
            return Ok(std::iter::once(0..n).collect());
        }
        return Err(Error::invalid(format!(
            "signal of {:.2} s is shorter than {MIN_WINDOW_SEC} s",
            n as f64 / fps
        )));
    }
    Ok((0..count).map(|i| i * len..(i + 1) * len).collect())
}

/// Dominant rate in BPM for one window; `None` when the window carries no power.
pub fn rate_of_window<T: Real>(signal: &Signal<T>, band_bpm: (f64, f64)) -> Result<Option<f64>> {
    let spec = power_spectrum(signal, 0, None)?;
    if spec.band(band_bpm.0, band_bpm.1).is_empty() {
        return Err(Error::invalid(format!(
            "band [{}, {}] BPM contains no spectral bins",
            band_bpm.0, band_bpm.1
        )));
    }
    Ok(spec
        .peak_in(band_bpm.0, band_bpm.1)
        .filter(|(_, p)| *p > T::zero() && p.is_finite())
        .map(|(f, _)| f))
}

/// Periodogram-argmax rate per evaluation window (channel 0).
pub fn estimate_rate<T: Real>(
    signal: &Signal<T>,
    band_bpm: (f64, f64),
    window_sec: f64,
) -> Result<Vec<Option<f64>>> {
    evaluation_windows(signal.len(), signal.fps(), window_sec)?
        .into_iter()
        .map(|r| rate_of_window(&signal.slice(r.start, r.len())?, band_bpm))
        .collect()
}

fn check_pair(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::dims(format!("lengths {} and {} differ", a.len(), b.len())));
    }
    if a.is_empty() {
        return Err(Error::invalid("metrics need at least one value"));
    }
    Ok(())
}

pub fn mae(truth: &[f64], est: &[f64]) -> Result<f64> {
    check_pair(truth, est)?;
    Ok(truth.iter().zip(est).map(|(r, e)| (r - e).abs()).sum::<f64>() / truth.len() as f64)
}

pub fn rmse(truth: &[f64], est: &[f64]) -> Result<f64> {
    check_pair(truth, est)?;
    Ok((truth.iter().zip(est).map(|(r, e)| (r - e).powi(2)).sum::<f64>() / truth.len() as f64).sqrt())
}

/// Sample Pearson correlation; `None` if either input is constant.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<Option<f64>> {
    check_pair(a, b)?;
    if a.len() < 2 {
        return Err(Error::invalid("pearson needs at least two values"));
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Ok(None);
    }
    Ok(Some((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrConfig {
    /// Square the power spectrum before integrating (as in the defining formula).
    pub square_power: bool,
    pub band_bpm: (f64, f64),
    pub half_width_bpm: f64,
}

impl Default for SnrConfig {
    fn default() -> Self {
        Self { square_power: true, band_bpm: HR_BAND_BPM, half_width_bpm: SNR_HALF_WIDTH_BPM }
    }
}

/// Harmonic-band SNR in dB for one window (channel 0). All power inside the
/// harmonic bands gives `+inf`.
pub fn snr<T: Real>(window: &Signal<T>, gt_hr_bpm: f64, config: SnrConfig) -> Result<f64> {
    let (lo, hi) = config.band_bpm;
    if !(lo..=hi).contains(&gt_hr_bpm) {
        return Err(Error::invalid(format!("ground-truth rate {gt_hr_bpm} BPM outside [{lo}, {hi}]")));
    }
    let spec = power_spectrum(window, 0, None)?;
    let (mut signal, mut noise) = (0.0f64, 0.0f64);
    for i in spec.band(lo, hi) {
        let f = spec.freqs_bpm[i];
        let p = spec.power[i].as_f64();
        let s = if config.square_power { p * p } else { p };
        let near = (f - gt_hr_bpm).abs() <= config.half_width_bpm
            || (f - 2.0 * gt_hr_bpm).abs() <= config.half_width_bpm;
        if near {
            signal += s;
        } else {
            noise += s;
        }
    }
    if noise == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (signal / noise).log10())
}

/// Mean absolute waveform difference per window, averaged over windows.
pub fn wmae<T: Real>(truth: &Signal<T>, est: &Signal<T>, window_sec: f64) -> Result<f64> {
    if truth.len() != est.len() {
        return Err(Error::dims(format!("lengths {} and {} differ", truth.len(), est.len())));
    }
    let windows = evaluation_windows(truth.len(), truth.fps(), window_sec)?;
    let total: f64 = windows.iter().map(|r| window_mae(truth, est, r.clone())).sum();
    Ok(total / windows.len() as f64)
}

fn window_mae<T: Real>(truth: &Signal<T>, est: &Signal<T>, range: Range<usize>) -> f64 {
    let (w, e) = (truth.channel(0), est.channel(0));
    let len = range.len() as f64;
    range.map(|i| (w[i] - e[i]).abs().as_f64()).sum::<f64>() / len
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FTest {
    pub f: f64,
    pub df1: f64,
    pub df2: f64,
    /// Two-sided p-value.
    pub p: f64,
}

fn sample_variance(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0)
}

/// Variance-ratio test `s²_a / s²_b`.
pub fn f_test(a: &[f64], b: &[f64]) -> Result<FTest> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::invalid("F-test needs at least two values per sample"));
    }
    let vb = sample_variance(b);
    if vb == 0.0 {
        return Err(Error::invalid("zero variance in the denominator sample"));
    }
    let f = sample_variance(a) / vb;
    let (df1, df2) = ((a.len() - 1) as f64, (b.len() - 1) as f64);
    Ok(FTest { f, df1, df2, p: f_two_sided_p(f, df1, df2) })
}

pub fn f_cdf(f: f64, df1: f64, df2: f64) -> f64 {
    if f <= 0.0 {
        return 0.0;
    }
    beta_reg(df1 / 2.0, df2 / 2.0, df1 * f / (df1 * f + df2))
}

fn f_two_sided_p(f: f64, df1: f64, df2: f64) -> f64 {
    let cdf = f_cdf(f, df1, df2);
    (2.0 * cdf.min(1.0 - cdf)).min(1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowMetrics {
    pub start_sec: f64,
    pub rate_est_bpm: Option<f64>,
    pub rate_gt_bpm: Option<f64>,
    pub snr_db: Option<f64>,
    pub wmae: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub window_sec: f64,
    pub windows: Vec<WindowMetrics>,
    pub mae: f64,
    pub rmse: f64,
    pub rho: Option<f64>,
    /// Mean SNR over windows where it is defined.
    pub snr_db: Option<f64>,
    pub wmae: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalConfig {
    pub band_bpm: (f64, f64),
    pub window_sec: f64,
    pub snr: SnrConfig,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { band_bpm: HR_BAND_BPM, window_sec: EVAL_WINDOW_SEC, snr: SnrConfig::default() }
    }
}

/// Evaluate an estimated waveform against a ground-truth waveform.
///
/// Rates come from both waveforms; windows where either rate is undefined are
/// left out of the rate metrics but still appear in the report.
pub fn evaluate<T: Real>(est: &Signal<T>, truth: &Signal<T>, config: EvalConfig) -> Result<MetricsReport> {
    if est.len() != truth.len() || est.fps() != truth.fps() {
        return Err(Error::dims("estimate and ground truth differ in length or rate"));
    }
    let ranges = evaluation_windows(est.len(), est.fps(), config.window_sec)?;
    let mut windows = Vec::with_capacity(ranges.len());
    let (mut r, mut rh) = (Vec::new(), Vec::new());
    for range in ranges {
        let e = est.slice(range.start, range.len())?;
        let t = truth.slice(range.start, range.len())?;
        let rate_est = rate_of_window(&e, config.band_bpm)?;
        let rate_gt = rate_of_window(&t, config.band_bpm)?;
        let (sl, sh) = config.snr.band_bpm;
        let snr_db = match rate_gt {
            Some(hr) if (sl..=sh).contains(&hr) => Some(snr(&e, hr, config.snr)?),
            _ => None,
        };
        let w = window_mae(truth, est, range.clone());
        if let (Some(a), Some(b)) = (rate_gt, rate_est) {
            r.push(a);
            rh.push(b);
        }
        windows.push(WindowMetrics {
            start_sec: range.start as f64 / est.fps(),
            rate_est_bpm: rate_est,
            rate_gt_bpm: rate_gt,
            snr_db,
            wmae: w,
        });
    }
    if r.is_empty() {
        return Err(Error::invalid("no window has both rates defined"));
    }
    let rho = if r.len() >= 2 { pearson(&r, &rh)? } else { None };
    let snrs: Vec<f64> = windows.iter().filter_map(|w| w.snr_db).collect();
    let snr_db = (!snrs.is_empty()).then(|| snrs.iter().sum::<f64>() / snrs.len() as f64);
    let wmae = windows.iter().map(|w| w.wmae).sum::<f64>() / windows.len() as f64;
    Ok(MetricsReport {
        window_sec: config.window_sec,
        mae: mae(&r, &rh)?,
        rmse: rmse(&r, &rh)?,
        rho,
        snr_db,
        wmae,
        windows,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

impl MetricsReport {
    pub const CSV_HEADER: &'static str =
        "window,start_sec,rate_est_bpm,rate_gt_bpm,abs_error_bpm,snr_db,wmae,mae_bpm,rmse_bpm,rho";

    pub fn to_csv(&self) -> String {
        let mut s = String::from(Self::CSV_HEADER);
        s.push('\n');
        for (i, w) in self.windows.iter().enumerate() {
            let err = w.rate_est_bpm.zip(w.rate_gt_bpm).map(|(a, b)| (a - b).abs());
            let _ = writeln!(
                s,
                "{i},{},{},{},{},{},{},,,",
                w.start_sec,
                opt(w.rate_est_bpm),
                opt(w.rate_gt_bpm),
                opt(err),
                opt(w.snr_db),
                w.wmae
            );
        }
        let _ = writeln!(
            s,
            "summary,,,,,{},{},{},{},{}",
            opt(self.snr_db),
            self.wmae,
            self.mae,
            self.rmse,
            opt(self.rho)
        );
        s
    }
}
