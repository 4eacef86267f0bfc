//! Extraction throughput on synthetic volumes.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::PatternConfig;
use crate::lbp::{DescriptorKind, Extractor};
use crate::synth::{generate_sequence, SynthSpec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchResult {
    pub width: usize,
    pub height: usize,
    pub depth: usize,
    pub kind: String,
    pub n_points: usize,
    pub repetitions: usize,
    pub threads: usize,
    /// Median time to produce the descriptor of a single frame.
    pub per_frame_seconds: f64,
    /// Median time to produce the descriptors of the whole sequence.
    pub per_sequence_seconds: f64,
    /// `per_sequence_seconds / depth`.
    pub amortized_frame_seconds: f64,
    pub frames_per_second: f64,
}

fn median(mut times: Vec<Duration>) -> f64 {
    times.sort();
    let n = times.len();
    let mid = if n % 2 == 1 {
        times[n / 2]
    } else {
        (times[n / 2 - 1] + times[n / 2]) / 2
    };
    // sub-nanosecond timings would break the positivity contract
    mid.as_secs_f64().max(1e-9)
}

/// Times extraction on a synthetic `width × height × depth` volume inside a
/// dedicated pool of `threads` workers. Repetitions run back to back.
pub fn run_benchmark(
    (width, height, depth): (usize, usize, usize),
    kind: DescriptorKind,
    config: PatternConfig,
    repetitions: usize,
    threads: usize,
) -> Result<BenchResult> {
    if repetitions < 3 {
        return Err(Error::Invalid(format!(
            "benchmark needs at least 3 repetitions, got {repetitions}"
        )));
    }
    let apex = (depth / 2).clamp(2, depth.max(2));
    let spec = SynthSpec::centered(width, height, depth, apex, 24.0, 0);
    let (volume, _) = generate_sequence::<f64>(&spec)?;
    let extractor = Extractor::<f64>::for_kind(kind, config);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Invalid(e.to_string()))?;
    let middle = depth.div_ceil(2);

    pool.install(|| -> Result<BenchResult> {
        let mut frame_times = Vec::with_capacity(repetitions);
        for _ in 0..repetitions {
            let start = Instant::now();
            std::hint::black_box(extractor.frame_descriptor(&volume, middle)?);
            frame_times.push(start.elapsed());
        }
        let mut seq_times = Vec::with_capacity(repetitions);
        for _ in 0..repetitions {
            let start = Instant::now();
            std::hint::black_box(extractor.extract(&volume)?);
            seq_times.push(start.elapsed());
        }
        let per_sequence_seconds = median(seq_times);
        Ok(BenchResult {
            width,
            height,
            depth,
            kind: kind.label(),
            n_points: config.n_points(),
            repetitions,
            threads: pool.current_num_threads(),
            per_frame_seconds: median(frame_times),
            per_sequence_seconds,
            amortized_frame_seconds: per_sequence_seconds / depth as f64,
            frames_per_second: depth as f64 / per_sequence_seconds,
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn too_few_repetitions() {
        assert!(run_benchmark(
            (16, 16, 4),
            DescriptorKind::SipL,
            PatternConfig::default(),
            2,
            1
        )
        .is_err());
    }

    #[test]
    fn timings_positive_and_consistent() {
        let r = run_benchmark(
            (48, 40, 8),
            DescriptorKind::SipL,
            PatternConfig::default(),
            3,
            1,
        )
        .unwrap();
        assert!(r.per_frame_seconds > 0.0 && r.per_sequence_seconds > 0.0);
        assert_eq!(r.threads, 1);
        assert!(r.per_sequence_seconds >= r.per_frame_seconds * r.depth as f64 * 0.5);
        assert!((r.frames_per_second * r.amortized_frame_seconds - 1.0).abs() < 1e-9);
    }
}
