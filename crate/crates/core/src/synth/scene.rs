use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use ndarray::{Array3, Array4};
use rand::Rng;
use rand_distr::StandardNormal;

use super::noise::band_limited_noise;
use crate::rng::stream;
use super::waveform::{breathing_waveform, pulse_waveform, PulseTemplate, RateTrajectory};
use crate::attention::shift_line;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::signalio::{MaskSequence, Signal, VideoTensor};

const FLICKER_STREAM: u32 = 1;
const MOTION_STREAM: u32 = 2;
const SENSOR_STREAM: u32 = 3;
/// Catmull-Rom support plus rounding slack when checking motion bounds.
const SHIFT_MARGIN: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rect {
    pub top: usize,
    pub left: usize,
    pub height: usize,
    pub width: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlickerMode {
    Additive,
    Multiplicative,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneConfig {
    pub frames: usize,
    pub height: usize,
    pub width: usize,
    pub fps: f64,
    pub hr_bpm: RateTrajectory,
    pub br_bpm: f64,
    pub template: PulseTemplate,
    /// Pulsatile pixels (rows and columns at zero displacement).
    pub skin_rect: Rect,
    /// Rows directly above the skin that move with it but carry no pulse.
    pub hair_rows: usize,
    pub skin_rgb: [f64; 3],
    pub hair_rgb: [f64; 3],
    pub background_rgb: [f64; 3],
    pub pulse_amp: [f64; 3],
    pub flicker_amp: f64,
    pub flicker_band: (f64, f64),
    pub flicker_mode: FlickerMode,
    /// Peak horizontal displacement in pixels.
    pub motion_amp: f64,
    pub motion_band: (f64, f64),
    /// Share of the displacement that follows breathing; the rest is random.
    pub breathing_coupling: f64,
    /// Brightness change of the moving layer per pixel of displacement.
    pub motion_shading: f64,
    pub sensor_noise_std: f64,
    pub seed: u64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            frames: 600,
            height: 68,
            width: 68,
            fps: 30.0,
            hr_bpm: RateTrajectory::constant(72.0),
            br_bpm: 15.0,
            template: PulseTemplate::default(),
            skin_rect: Rect { top: 26, left: 20, height: 26, width: 28 },
            hair_rows: 10,
            skin_rgb: [0.62, 0.45, 0.36],
            hair_rgb: [0.15, 0.12, 0.10],
            background_rgb: [0.40, 0.42, 0.45],
            pulse_amp: [0.006, 0.012, 0.003],
            flicker_amp: 0.006,
            flicker_band: (0.5, 3.0),
            flicker_mode: FlickerMode::Additive,
            motion_amp: 1.0,
            motion_band: (0.1, 1.0),
            breathing_coupling: 0.5,
            motion_shading: 0.004,
            sensor_noise_std: 0.01,
            seed: 0,
        }
    }
}

impl SceneConfig {
    pub fn duration(&self) -> f64 {
        self.frames as f64 / self.fps
    }

    pub fn validate(&self) -> Result<()> {
        if self.frames < 2 || self.height == 0 || self.width == 0 {
            return Err(Error::Config("frames must be at least 2 and height, width positive".into()));
        }
        if !(self.fps > 0.0 && self.fps.is_finite()) {
            return Err(Error::Config(format!("invalid fps {}", self.fps)));
        }
        let r = self.skin_rect;
        if r.height == 0 || r.width == 0 || r.top + r.height > self.height || r.left + r.width > self.width {
            return Err(Error::Config("skin_rect outside the frame".into()));
        }
        if self.hair_rows > r.top {
            return Err(Error::Config("hair rows extend above the frame".into()));
        }
        let reach = self.motion_amp.ceil() as usize + SHIFT_MARGIN;
        if self.motion_amp > 0.0 && (r.left < reach || r.left + r.width + reach > self.width) {
            return Err(Error::Config(format!(
                "skin_rect leaves the frame under motion_amp {}",
                self.motion_amp
            )));
        }
        let scalars = [self.flicker_amp, self.motion_amp, self.sensor_noise_std];
        if self.pulse_amp.iter().chain(&scalars).any(|a| !(*a >= 0.0 && a.is_finite())) {
            return Err(Error::Config("amplitudes must be finite and non-negative".into()));
        }
        let colours = self.skin_rgb.iter().chain(&self.hair_rgb).chain(&self.background_rgb);
        if colours.clone().any(|c| !(0.0..=1.0).contains(c)) {
            return Err(Error::Config("base colours must lie in [0, 1]".into()));
        }
        if !(0.0..=1.0).contains(&self.breathing_coupling) || !self.motion_shading.is_finite() {
            return Err(Error::Config("breathing_coupling must lie in [0, 1]".into()));
        }
        self.template.validate()
    }
}

fn parse_list(key: &str, value: &str, n: usize) -> Result<Vec<f64>> {
    let v: Vec<f64> = value
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Config(format!("{key}: {e}")))?;
    if v.len() != n {
        return Err(Error::Config(format!("{key}: expected {n} values, got {}", v.len())));
    }
    Ok(v)
}

fn parse_one<F: FromStr>(key: &str, value: &str) -> Result<F>
where
    F::Err: fmt::Display,
{
    value.trim().parse().map_err(|e| Error::Config(format!("{key}: {e}")))
}

fn parse_rate(value: &str) -> Result<RateTrajectory> {
    let knots = value
        .split(',')
        .map(|k| {
            let k = k.trim();
            match k.split_once(':') {
                Some((t, r)) => Ok((parse_one("hr_bpm", t)?, parse_one("hr_bpm", r)?)),
                None => Ok((0.0, parse_one("hr_bpm", k)?)),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    RateTrajectory::new(knots).map_err(|e| Error::Config(format!("hr_bpm: {e}")))
}

impl FromStr for SceneConfig {
    type Err = Error;

    /// Flat `key = value` lines; `#` starts a comment; absent keys keep
    /// their defaults.
    fn from_str(text: &str) -> Result<Self> {
        let mut c = SceneConfig::default();
        let mut seen = HashSet::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
            let key = key.trim();
            if !seen.insert(key.to_string()) {
                return Err(Error::Config(format!("duplicate key `{key}`")));
            }
            let arr3 = |v: &str| -> Result<[f64; 3]> {
                let l = parse_list(key, v, 3)?;
                Ok([l[0], l[1], l[2]])
            };
            let pair = |v: &str| -> Result<(f64, f64)> {
                let l = parse_list(key, v, 2)?;
                Ok((l[0], l[1]))
            };
            match key {
                "frames" => c.frames = parse_one(key, value)?,
                "height" => c.height = parse_one(key, value)?,
                "width" => c.width = parse_one(key, value)?,
                "fps" => c.fps = parse_one(key, value)?,
                "hr_bpm" => c.hr_bpm = parse_rate(value)?,
                "br_bpm" => c.br_bpm = parse_one(key, value)?,
                "systolic_pos" => c.template.systolic_pos = parse_one(key, value)?,
                "systolic_rise" => c.template.systolic_rise = parse_one(key, value)?,
                "systolic_fall" => c.template.systolic_fall = parse_one(key, value)?,
                "notch_depth" => c.template.notch_depth = parse_one(key, value)?,
                "diastolic_pos" => c.template.diastolic_pos = parse_one(key, value)?,
                "diastolic_width" => c.template.diastolic_width = parse_one(key, value)?,
                "skin_rect" => {
                    let v: Vec<usize> = value
                        .split(',')
                        .map(|s| parse_one(key, s))
                        .collect::<Result<_>>()?;
                    if v.len() != 4 {
                        return Err(Error::Config("skin_rect: expected top,left,height,width".into()));
                    }
                    c.skin_rect = Rect { top: v[0], left: v[1], height: v[2], width: v[3] };
                }
                "hair_rows" => c.hair_rows = parse_one(key, value)?,
                "skin_rgb" => c.skin_rgb = arr3(value)?,
                "hair_rgb" => c.hair_rgb = arr3(value)?,
                "background_rgb" => c.background_rgb = arr3(value)?,
                "pulse_amp" => c.pulse_amp = arr3(value)?,
                "flicker_amp" => c.flicker_amp = parse_one(key, value)?,
                "flicker_band" => c.flicker_band = pair(value)?,
                "flicker_mode" => {
                    c.flicker_mode = match value.trim() {
                        "additive" => FlickerMode::Additive,
                        "multiplicative" => FlickerMode::Multiplicative,
                        other => return Err(Error::Config(format!("flicker_mode: unknown `{other}`"))),
                    }
                }
                "motion_amp" => c.motion_amp = parse_one(key, value)?,
                "motion_band" => c.motion_band = pair(value)?,
                "breathing_coupling" => c.breathing_coupling = parse_one(key, value)?,
                "motion_shading" => c.motion_shading = parse_one(key, value)?,
                "sensor_noise_std" => c.sensor_noise_std = parse_one(key, value)?,
                "seed" => c.seed = parse_one(key, value)?,
                other => return Err(Error::Config(format!("unknown key `{other}`"))),
            }
        }
        c.validate()?;
        Ok(c)
    }
}

impl fmt::Display for SceneConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let trip = |a: &[f64; 3]| format!("{},{},{}", a[0], a[1], a[2]);
        let hr: Vec<String> = self.hr_bpm.knots().iter().map(|(t, r)| format!("{t}:{r}")).collect();
        let t = &self.template;
        let r = self.skin_rect;
        writeln!(f, "frames = {}", self.frames)?;
        writeln!(f, "height = {}", self.height)?;
        writeln!(f, "width = {}", self.width)?;
        writeln!(f, "fps = {}", self.fps)?;
        writeln!(f, "hr_bpm = {}", hr.join(","))?;
        writeln!(f, "br_bpm = {}", self.br_bpm)?;
        writeln!(f, "systolic_pos = {}", t.systolic_pos)?;
        writeln!(f, "systolic_rise = {}", t.systolic_rise)?;
        writeln!(f, "systolic_fall = {}", t.systolic_fall)?;
        writeln!(f, "notch_depth = {}", t.notch_depth)?;
        writeln!(f, "diastolic_pos = {}", t.diastolic_pos)?;
        writeln!(f, "diastolic_width = {}", t.diastolic_width)?;
        writeln!(f, "skin_rect = {},{},{},{}", r.top, r.left, r.height, r.width)?;
        writeln!(f, "hair_rows = {}", self.hair_rows)?;
        writeln!(f, "skin_rgb = {}", trip(&self.skin_rgb))?;
        writeln!(f, "hair_rgb = {}", trip(&self.hair_rgb))?;
        writeln!(f, "background_rgb = {}", trip(&self.background_rgb))?;
        writeln!(f, "pulse_amp = {}", trip(&self.pulse_amp))?;
        writeln!(f, "flicker_amp = {}", self.flicker_amp)?;
        writeln!(f, "flicker_band = {},{}", self.flicker_band.0, self.flicker_band.1)?;
        let mode = match self.flicker_mode {
            FlickerMode::Additive => "additive",
            FlickerMode::Multiplicative => "multiplicative",
        };
        writeln!(f, "flicker_mode = {mode}")?;
        writeln!(f, "motion_amp = {}", self.motion_amp)?;
        writeln!(f, "motion_band = {},{}", self.motion_band.0, self.motion_band.1)?;
        writeln!(f, "breathing_coupling = {}", self.breathing_coupling)?;
        writeln!(f, "motion_shading = {}", self.motion_shading)?;
        writeln!(f, "sensor_noise_std = {}", self.sensor_noise_std)?;
        writeln!(f, "seed = {}", self.seed)
    }
}

#[derive(Debug, Clone)]
pub struct SceneOutput<T> {
    pub video: VideoTensor<T>,
    /// Binary skin mask at frame resolution, following the motion.
    pub attention: MaskSequence<T>,
    pub pulse: Signal<T>,
    pub breathing: Signal<T>,
    /// Global illumination term as added to every pixel.
    pub flicker: Signal<T>,
    /// Horizontal displacement in pixels.
    pub motion: Signal<T>,
    /// Pixel values that fell outside `[0, 1]` before clamping.
    pub clamped: usize,
}

#[derive(Clone, Copy, PartialEq)]
enum Row {
    Background,
    Hair,
    Skin,
}

/// Render a scene: background plus a moving head layer (hair band over a
/// pulsatile skin rectangle), all under shared illumination flicker and
/// per-pixel sensor noise.
pub fn render_scene<T: Real>(config: &SceneConfig) -> Result<SceneOutput<T>> {
    config.validate()?;
    let (n, h, w, fps) = (config.frames, config.height, config.width, config.fps);
    let duration = config.duration();
    let pulse = pulse_waveform::<f64>(&config.hr_bpm, &config.template, fps, duration)?;
    let breathing = breathing_waveform::<f64>(config.br_bpm, fps, duration)?;
    let (pulse, breathing) = (pulse.channel(0).to_vec(), breathing.channel(0).to_vec());
    if pulse.len() != n {
        return Err(Error::Config("frame count does not match duration".into()));
    }

    let flicker: Vec<f64> = if config.flicker_amp > 0.0 {
        band_limited_noise(&mut stream(config.seed, FLICKER_STREAM, 0), n, fps, config.flicker_band)?
            .into_iter()
            .map(|v| v * config.flicker_amp)
            .collect()
    } else {
        vec![0.0; n]
    };
    let motion: Vec<f64> = if config.motion_amp > 0.0 {
        let random = band_limited_noise(&mut stream(config.seed, MOTION_STREAM, 0), n, fps, config.motion_band)?;
        let k = config.breathing_coupling;
        (0..n)
            .map(|i| config.motion_amp * (k * breathing[i] + (1.0 - k) * random[i]))
            .collect()
    } else {
        vec![0.0; n]
    };

    let r = config.skin_rect;
    let rows: Vec<Row> = (0..h)
        .map(|y| {
            if (r.top..r.top + r.height).contains(&y) {
                Row::Skin
            } else if (r.top - config.hair_rows..r.top).contains(&y) {
                Row::Hair
            } else {
                Row::Background
            }
        })
        .collect();
    let coverage: Vec<f64> = (0..w).map(|x| if (r.left..r.left + r.width).contains(&x) { 1.0 } else { 0.0 }).collect();

    let mut data = Array4::<T>::zeros((n, h, w, 3));
    let mut mask = Array3::<T>::zeros((n, h, w));
    let mut clamped = 0usize;
    for t in 0..n {
        let alpha: Vec<f64> = shift_line(&coverage, motion[t]).into_iter().map(|a| a.clamp(0.0, 1.0)).collect();
        let shade = config.motion_shading * motion[t];
        let mut rng = stream(config.seed, SENSOR_STREAM, t as u32);
        for (y, &row) in rows.iter().enumerate() {
            for x in 0..w {
                let a = if row == Row::Background { 0.0 } else { alpha[x] };
                if row == Row::Skin && a >= 0.5 {
                    mask[[t, y, x]] = T::one();
                }
                for c in 0..3 {
                    let bg = config.background_rgb[c];
                    let head = match row {
                        Row::Skin => config.skin_rgb[c] + shade + config.pulse_amp[c] * pulse[t],
                        Row::Hair => config.hair_rgb[c] + shade,
                        Row::Background => bg,
                    };
                    let mut v = bg + a * (head - bg);
                    v = match config.flicker_mode {
                        FlickerMode::Additive => v + flicker[t],
                        FlickerMode::Multiplicative => v * (1.0 + flicker[t]),
                    };
                    if config.sensor_noise_std > 0.0 {
                        v += config.sensor_noise_std * rng.sample::<f64, _>(StandardNormal);
                    }
                    if !(0.0..=1.0).contains(&v) {
                        clamped += 1;
                    }
                    data[[t, y, x, c]] = T::lit(v.clamp(0.0, 1.0));
                }
            }
        }
    }

    let sig = |v: Vec<f64>, name: &str| -> Result<Signal<T>> {
        Signal::from_vec(v.into_iter().map(T::lit).collect(), fps)?.with_names([name])
    };
    Ok(SceneOutput {
        video: VideoTensor::new(data, fps)?,
        attention: MaskSequence::new(mask)?,
        pulse: sig(pulse, "bvp")?,
        breathing: sig(breathing, "breathing")?,
        flicker: sig(flicker, "flicker")?,
        motion: sig(motion, "motion")?,
        clamped,
    })
}
