//! Shared fixtures for the criterion benchmarks.

use holopulse::phantom::{generate, PhantomTruth};
use holopulse::PhantomSpec;

/// Default-spec phantom resized to `size x size x frames`.
pub fn phantom(size: usize, frames: usize) -> PhantomTruth {
    let mut spec = PhantomSpec {
        dims: [size, size, frames],
        ..PhantomSpec::default()
    };
    spec.artery_waveform.period = (frames / 2) as f64;
    spec.vein_waveform.delay = spec.artery_waveform.period / 4.0;
    generate(&spec).expect("bench phantom")
}
