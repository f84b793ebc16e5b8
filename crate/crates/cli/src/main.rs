use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use distractor::attention::{InversionConfig, Region, MASK_SIZE};
use distractor::denoise::{LstmDenoiser, TrainConfig, TrainSample, lstm_train};
use distractor::dsp::{normalize_acdc, DetrendConfig};
use distractor::extractors::ExtractionMethod;
use distractor::metrics::{evaluate, EvalConfig, SnrConfig, EVAL_WINDOW_SEC, HR_BAND_BPM, SNR_HALF_WIDTH_BPM};
use distractor::pipeline::{
    align_reference, denoise, denoiser_samples, estimate_noise, extract_pulse, Denoiser, Preprocess, TARGET_FPS,
};
use distractor::signalio::{
    read_mask_sequence, read_signal_csv, read_video_tensor, write_mask_sequence, write_signal_csv,
    write_video_tensor,
};
use distractor::synth::{render_scene, SceneConfig};
use distractor::{MaskSequence, Real, Signal};

#[derive(Parser)]
#[command(name = "distractor", version, about = "Inverse-attention noise estimation and denoising")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render a synthetic scene with its ground truth.
    Synth(SynthArgs),
    /// Extract a preprocessed pulse estimate from a video.
    Extract(ExtractArgs),
    /// Estimate noise from the regions an attention mask ignores.
    Noise(NoiseArgs),
    /// Denoise a pulse estimate.
    Denoise(DenoiseArgs),
    /// Train an LSTM denoiser.
    Train(TrainArgs),
    /// Compare an estimate with ground truth.
    Evaluate(EvaluateArgs),
}

#[derive(Args)]
struct Preproc {
    /// Pass band in Hz as `lo,hi`.
    #[arg(long, value_parser = parse_pair, default_value = "0.7,2.5")]
    band: (f64, f64),
    /// Detrending smoothness; chosen from the frame rate when omitted.
    #[arg(long)]
    lambda: Option<f64>,
    /// Keep the input frame rate instead of resampling to 30 fps.
    #[arg(long)]
    no_resample: bool,
}

impl Preproc {
    fn config(&self) -> Result<Preprocess> {
        Ok(Preprocess {
            band_hz: self.band,
            detrend: self.lambda.map(DetrendConfig::new).transpose()?,
            target_fps: (!self.no_resample).then_some(TARGET_FPS),
        })
    }
}

#[derive(Args)]
struct SynthArgs {
    /// Scene configuration (`key = value` lines); defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Chrom,
    Pos,
    Ica,
    Mean,
}

impl From<Method> for ExtractionMethod {
    fn from(m: Method) -> Self {
        match m {
            Method::Chrom => ExtractionMethod::Chrom,
            Method::Pos => ExtractionMethod::Pos,
            Method::Ica => ExtractionMethod::Ica,
            Method::Mean => ExtractionMethod::Mean,
        }
    }
}

#[derive(Args)]
struct ExtractArgs {
    #[arg(long)]
    video: PathBuf,
    /// Region of interest; a binary mask, or any mask with `--roi-threshold`.
    #[arg(long)]
    roi: PathBuf,
    /// Binarise the ROI after min-max normalisation: weights above this are kept.
    #[arg(long)]
    roi_threshold: Option<f64>,
    #[arg(long, value_enum, default_value = "chrom")]
    method: Method,
    #[command(flatten)]
    preproc: Preproc,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum MaskMode {
    Binary,
    Continuous,
}

#[derive(Clone, Copy, ValueEnum)]
enum RegionArg {
    All,
    Center,
    Edges,
}

impl From<RegionArg> for Region {
    fn from(r: RegionArg) -> Self {
        match r {
            RegionArg::All => Region::All,
            RegionArg::Center => Region::Center,
            RegionArg::Edges => Region::Edges,
        }
    }
}

#[derive(Args)]
struct NoiseArgs {
    #[arg(long)]
    video: PathBuf,
    /// Attention mask (not inverted).
    #[arg(long)]
    mask: PathBuf,
    #[arg(long, value_enum, default_value = "binary")]
    mode: MaskMode,
    /// Binary threshold; repeat or comma-separate to sweep, one output per value.
    #[arg(long, value_delimiter = ',', default_value = "0.1")]
    threshold: Vec<f64>,
    #[arg(long, value_enum, default_value = "all")]
    region: RegionArg,
    /// Write the weighted averages without resampling, detrending or filtering.
    #[arg(long)]
    raw: bool,
    #[command(flatten)]
    preproc: Preproc,
    /// Output CSV; with several thresholds `_T<value>` is added to the stem.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    None,
    FreqSub,
    WaveSub,
    Lstm,
    LstmNoNoise,
}

#[derive(Args)]
struct DenoiseArgs {
    #[arg(long)]
    estimate: PathBuf,
    #[arg(long)]
    noise: Option<PathBuf>,
    #[arg(long, value_enum)]
    mode: Mode,
    #[arg(long)]
    model: Option<PathBuf>,
    /// Pass band in Hz for frequency subtraction.
    #[arg(long, value_parser = parse_pair, default_value = "0.7,2.5")]
    band: (f64, f64),
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Precision {
    F32,
    F64,
}

#[derive(Args)]
struct TrainArgs {
    /// Directory of recordings, one subdirectory each holding
    /// `estimate.csv`, `noise.csv` and `pulse.csv`.
    #[arg(long, conflicts_with = "manifest", required_unless_present = "manifest")]
    scenes: Option<PathBuf>,
    /// Text file with one `estimate,noise,truth` path triple per line,
    /// relative to the manifest; `-` for no noise.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Train without noise inputs.
    #[arg(long)]
    no_noise: bool,
    #[arg(long, default_value_t = 10)]
    epochs: usize,
    #[arg(long, default_value_t = 32)]
    batch: usize,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 128)]
    hidden: usize,
    #[arg(long, default_value_t = 2)]
    layers: usize,
    #[arg(long, value_enum, default_value = "f64")]
    precision: Precision,
    #[arg(long)]
    out: PathBuf,
    /// Per-epoch mean loss.
    #[arg(long)]
    loss_trace: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    estimate: PathBuf,
    /// Ground-truth waveform; resampled to the estimate's rate.
    #[arg(long)]
    truth: PathBuf,
    /// Rate band in BPM as `lo,hi`.
    #[arg(long, value_parser = parse_pair)]
    band: Option<(f64, f64)>,
    #[arg(long, default_value_t = EVAL_WINDOW_SEC)]
    window: f64,
    /// Integrate the power spectrum instead of its square in the SNR.
    #[arg(long)]
    snr_linear: bool,
    #[arg(long)]
    out: PathBuf,
}

fn parse_pair(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected `lo,hi`, got `{s}`"))?;
    let lo: f64 = a.trim().parse().map_err(|_| format!("bad number `{a}`"))?;
    let hi: f64 = b.trim().parse().map_err(|_| format!("bad number `{b}`"))?;
    if !(lo < hi) {
        return Err(format!("band lower edge {lo} must be below {hi}"));
    }
    Ok((lo, hi))
}

fn create_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(())
}

fn write_csv(signal: &Signal<f64>, path: &Path) -> Result<()> {
    create_parent(path)?;
    Ok(write_signal_csv(signal, path)?)
}

fn read_csv(path: &Path) -> Result<Signal<f64>> {
    read_signal_csv(path).with_context(|| format!("reading {}", path.display()))
}

fn synth(args: SynthArgs) -> Result<()> {
    let mut config = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            text.parse::<SceneConfig>()?
        }
        None => SceneConfig::default(),
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let scene = render_scene::<f64>(&config)?;
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let out = &args.out;
    write_video_tensor(&scene.video, out.join("video.vtf"))?;
    write_mask_sequence(&scene.attention, config.fps, out.join("mask.vtf"))?;
    write_signal_csv(&scene.pulse, out.join("pulse.csv"))?;
    write_signal_csv(&scene.breathing, out.join("breathing.csv"))?;
    write_signal_csv(&scene.flicker.with_names(["flicker"])?, out.join("flicker.csv"))?;
    Ok(())
}

fn binarize(mask: &MaskSequence<f64>, threshold: f64) -> Result<MaskSequence<f64>> {
    ensure!(threshold > 0.0 && threshold < 1.0, "roi threshold {threshold} outside (0, 1)");
    let normalized = distractor::attention::normalize_mask(mask)?;
    Ok(MaskSequence::new(normalized.data().mapv(|v| if v > threshold { 1.0 } else { 0.0 }))?)
}

fn extract_cmd(args: ExtractArgs) -> Result<()> {
    let video = read_video_tensor::<f64>(&args.video).with_context(|| format!("reading {}", args.video.display()))?;
    let mut roi = read_mask_sequence::<f64>(&args.roi).with_context(|| format!("reading {}", args.roi.display()))?;
    if let Some(t) = args.roi_threshold {
        roi = binarize(&roi, t)?;
    }
    let est = extract_pulse(&video, &roi, args.method.into(), &args.preproc.config()?)?;
    write_csv(&est, &args.out)
}

fn threshold_path(out: &Path, t: f64) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let ext = out.extension().map(|e| format!(".{}", e.to_string_lossy())).unwrap_or_default();
    out.with_file_name(format!("{stem}_T{t}{ext}"))
}

fn noise_cmd(args: NoiseArgs) -> Result<()> {
    let video = read_video_tensor::<f64>(&args.video).with_context(|| format!("reading {}", args.video.display()))?;
    let mask = read_mask_sequence::<f64>(&args.mask).with_context(|| format!("reading {}", args.mask.display()))?;
    let inversions: Vec<InversionConfig> = match args.mode {
        MaskMode::Continuous => vec![InversionConfig::continuous()],
        MaskMode::Binary => args.threshold.iter().map(|&t| InversionConfig::binary(t)).collect::<Result<_, _>>()?,
    };
    let preprocess = args.preproc.config()?;
    let mut outputs = Vec::new();
    for inv in &inversions {
        let noise = if args.raw {
            distractor::attention::noise_from_attention(&video, &mask, *inv, args.region.into(), MASK_SIZE)?
        } else {
            estimate_noise(&video, &mask, *inv, args.region.into(), &preprocess)?
        };
        let path = if inversions.len() > 1 { threshold_path(&args.out, inv.threshold) } else { args.out.clone() };
        outputs.push((noise, path));
    }
    for (noise, path) in &outputs {
        write_csv(noise, path)?;
    }
    Ok(())
}

fn denoise_cmd(args: DenoiseArgs) -> Result<()> {
    let estimate = read_csv(&args.estimate)?;
    let noise = args.noise.as_deref().map(read_csv).transpose()?;
    let load = || -> Result<LstmDenoiser<f64>> {
        let path = args.model.as_ref().context("this mode needs --model")?;
        LstmDenoiser::load(path).with_context(|| format!("reading {}", path.display()))
    };
    let denoiser = match args.mode {
        Mode::None => Denoiser::None,
        Mode::FreqSub => Denoiser::FreqSub,
        Mode::WaveSub => Denoiser::WaveSub,
        Mode::Lstm => Denoiser::Lstm(load()?),
        Mode::LstmNoNoise => Denoiser::LstmNoNoise(load()?),
    };
    let noise = if args.mode == Mode::LstmNoNoise { None } else { noise.as_ref() };
    let out = denoise(&estimate, noise, &denoiser, args.band)?;
    write_csv(&out, &args.out)
}

struct Recording {
    estimate: PathBuf,
    noise: Option<PathBuf>,
    truth: PathBuf,
}

fn recordings(args: &TrainArgs) -> Result<Vec<Recording>> {
    if let Some(dir) = &args.scenes {
        let mut dirs: Vec<PathBuf> = fs::read_dir(dir)
            .with_context(|| format!("reading {}", dir.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_dir())
            .collect();
        dirs.sort();
        return Ok(dirs
            .into_iter()
            .map(|d| Recording { estimate: d.join("estimate.csv"), noise: Some(d.join("noise.csv")), truth: d.join("pulse.csv") })
            .collect());
    }
    let manifest = args.manifest.as_ref().expect("clap requires one source");
    let base = manifest.parent().unwrap_or(Path::new("."));
    let text = fs::read_to_string(manifest).with_context(|| format!("reading {}", manifest.display()))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = line.split(',').map(str::trim).collect();
        let [e, n, t] = parts[..] else {
            bail!("{} line {}: expected `estimate,noise,truth`", manifest.display(), i + 1);
        };
        out.push(Recording {
            estimate: base.join(e),
            noise: (n != "-").then(|| base.join(n)),
            truth: base.join(t),
        });
    }
    Ok(out)
}

fn train_samples<T: Real>(recs: &[Recording], no_noise: bool, config: &TrainConfig) -> Result<Vec<TrainSample<T>>> {
    let mut samples = Vec::new();
    for rec in recs {
        let estimate = read_csv(&rec.estimate)?.cast::<T>();
        let noise = match (&rec.noise, no_noise) {
            (Some(p), false) => Some(read_csv(p)?.cast::<T>()),
            (None, false) => bail!("{} has no noise file; use --no-noise", rec.estimate.display()),
            _ => None,
        };
        let truth = read_csv(&rec.truth)?.cast::<T>();
        samples.extend(
            denoiser_samples(&estimate, noise.as_ref(), &truth, config.window, config.overlap)
                .with_context(|| format!("preparing {}", rec.estimate.display()))?,
        );
    }
    ensure!(!samples.is_empty(), "no training windows found");
    Ok(samples)
}

fn train_cmd(args: TrainArgs) -> Result<()> {
    let recs = recordings(&args)?;
    ensure!(!recs.is_empty(), "no recordings found");
    let config = TrainConfig {
        epochs: args.epochs,
        batch_size: args.batch,
        learning_rate: args.lr,
        seed: args.seed,
        hidden: args.hidden,
        layers: args.layers,
        ..TrainConfig::default()
    };
    let (model, trace) = match args.precision {
        Precision::F64 => {
            let out = lstm_train(&train_samples::<f64>(&recs, args.no_noise, &config)?, &config)?;
            (out.model, out.loss_trace)
        }
        Precision::F32 => {
            let out = lstm_train(&train_samples::<f32>(&recs, args.no_noise, &config)?, &config)?;
            (out.model.cast::<f64>(), out.loss_trace)
        }
    };
    create_parent(&args.out)?;
    model.save(&args.out)?;
    if let Some(path) = &args.loss_trace {
        create_parent(path)?;
        let mut text = String::from("epoch,loss\n");
        for (i, l) in trace.iter().enumerate() {
            text.push_str(&format!("{},{l}\n", i + 1));
        }
        fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn evaluate_cmd(args: EvaluateArgs) -> Result<()> {
    let estimate = normalize_acdc(&read_csv(&args.estimate)?.select(0)?)?;
    let truth = read_csv(&args.truth)?;
    let truth = align_reference(&truth, estimate.fps(), estimate.len())?;
    let band_bpm = args.band.unwrap_or(HR_BAND_BPM);
    let config = EvalConfig {
        band_bpm,
        window_sec: args.window,
        snr: SnrConfig { square_power: !args.snr_linear, band_bpm, half_width_bpm: SNR_HALF_WIDTH_BPM },
    };
    let report = evaluate(&estimate, &truth, config)?;
    create_parent(&args.out)?;
    fs::write(&args.out, report.to_csv()).with_context(|| format!("writing {}", args.out.display()))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth(a) => synth(a),
        Command::Extract(a) => extract_cmd(a),
        Command::Noise(a) => noise_cmd(a),
        Command::Denoise(a) => denoise_cmd(a),
        Command::Train(a) => train_cmd(a),
        Command::Evaluate(a) => evaluate_cmd(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().find(|l| !l.trim().is_empty()).unwrap_or("invalid arguments");
            eprintln!("{}", first.trim());
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", format!("{e:#}").replace('\n', " "));
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use distractor::dsp::PULSE_BAND_HZ;

    #[test]
    fn pairs_parse() {
        assert_eq!(parse_pair("0.7,2.5").unwrap(), (0.7, 2.5));
        assert!(parse_pair("2.5,0.7").is_err());
        assert!(parse_pair("x,1").is_err());
        assert!(parse_pair("1").is_err());
    }

    #[test]
    fn sweep_paths() {
        assert_eq!(threshold_path(Path::new("out/noise.csv"), 0.05), PathBuf::from("out/noise_T0.05.csv"));
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn default_band_matches_library() {
        assert_eq!(parse_pair("0.7,2.5").unwrap(), PULSE_BAND_HZ);
    }
}
