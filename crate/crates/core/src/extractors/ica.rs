use ndarray::Array2;

use crate::dsp::{detrend, power_spectrum, zscore_channel, DetrendConfig};
use crate::error::Result;
use crate::metrics::HR_BAND_BPM;
use crate::scalar::Real;
use crate::signalio::Signal;

use super::{jade, RgbTrace};

/// ICA pulse: detrend, z-score, JADE, then keep the component with the
/// strongest spectral peak in the heart-rate band, signed to correlate
/// positively with the green channel.
pub fn ica_pulse<T: Real>(trace: &RgbTrace<T>) -> Result<Signal<T>> {
    let sig = trace.signal();
    let detrended = detrend(sig, DetrendConfig::for_fps(sig.fps()))?;
    let mut z = Array2::zeros((sig.len(), 3));
    for c in 0..3 {
        z.column_mut(c).assign(&zscore_channel(detrended.channel(c)));
    }
    let z = Signal::new(z, sig.fps())?;
    let out = jade(&z)?;
    let best = select_pulse_component(&out.components)?;
    let comp = out.components.channel(best).to_owned();
    let green = z.channel(1);
    let sign = if comp.dot(&green) < T::zero() { -T::one() } else { T::one() };
    Signal::new(comp.mapv(|v| v * sign).insert_axis(ndarray::Axis(1)), sig.fps())
}

/// Index of the channel whose largest in-band spectral peak is highest.
pub fn select_pulse_component<T: Real>(components: &Signal<T>) -> Result<usize> {
    let mut best = (0, T::neg_infinity());
    for c in 0..components.num_channels() {
        let spec = power_spectrum(components, c, None)?;
        if let Some((_, p)) = spec.peak_in(HR_BAND_BPM.0, HR_BAND_BPM.1) {
            if p > best.1 {
                best = (c, p);
            }
        }
    }
    Ok(best.0)
}
