use rand::seq::index::sample;

use crate::rng::stream;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::signalio::MaskSequence;

const CORRUPT_STREAM: u32 = 4;

/// Zero `round(fraction · support)` randomly chosen nonzero weights in every
/// frame.
pub fn corrupt_mask<T: Real>(mask: &MaskSequence<T>, fraction: f64, seed: u64) -> Result<MaskSequence<T>> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::invalid(format!("dropout fraction {fraction} outside [0, 1)")));
    }
    let mut data = mask.data().to_owned();
    for (t, mut frame) in data.outer_iter_mut().enumerate() {
        let support: Vec<(usize, usize)> = frame
            .indexed_iter()
            .filter(|(_, &v)| v != T::zero())
            .map(|(i, _)| i)
            .collect();
        let drop = (fraction * support.len() as f64).round() as usize;
        if drop == 0 {
            continue;
        }
        let mut rng = stream(seed, CORRUPT_STREAM, t as u32);
        for i in sample(&mut rng, support.len(), drop) {
            frame[support[i]] = T::zero();
        }
    }
    MaskSequence::new(data)
}
