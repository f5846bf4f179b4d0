//! Indexing-time scaling measurements with offline backends.

use serde::{Deserialize, Serialize};

use crate::backends::{HashedBowEmbedder, TruncatingSummarizer};
use crate::graph::RuleBasedExtractor;
use crate::pipeline::{build_index, Backends, IndexOptions, StageTimings};
use crate::synth::{generate, SynthConfig};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Ordinary least squares `y = slope·x + intercept`. `r2` is 1 when `y` is
/// constant and the fit is exact.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> LinearFit {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = if sxx == 0.0 { 0.0 } else { sxy / sxx };
    let intercept = my - slope * mx;
    let ss_res: f64 = xs.iter().zip(ys).map(|(x, y)| (y - slope * x - intercept).powi(2)).sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let r2 = if ss_tot == 0.0 { if ss_res == 0.0 { 1.0 } else { 0.0 } } else { 1.0 - ss_res / ss_tot };
    LinearFit { slope, intercept, r2 }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub tokens: usize,
    pub chunks: usize,
    pub summarizer_calls: u64,
    /// Median over repeats, per stage.
    pub timings: StageTimings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub points: Vec<ScalingPoint>,
    /// Fit of `total_index_ms` against `tokens`.
    pub fit: LinearFit,
}

pub const DEFAULT_SIZES: [usize; 7] = [10_000, 50_000, 100_000, 250_000, 500_000, 750_000, 1_000_000];

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

/// Indexes one synthetic document per size (entity pool growing with the
/// document) and fits total time against token count.
pub fn measure(sizes: &[usize], repeats: usize, seed: u64, options: IndexOptions) -> Result<ScalingReport> {
    let extractor = RuleBasedExtractor::default();
    let backends = Backends {
        summarizer: &TruncatingSummarizer::default(),
        embedder: &HashedBowEmbedder::default(),
        extractor: &extractor,
        lexicon: Vec::new(),
    };
    let mut points = Vec::with_capacity(sizes.len());
    for &tokens in sizes {
        let cfg = SynthConfig {
            seed,
            tokens,
            entities: (tokens / 100).max(10),
            ..SynthConfig::default()
        };
        let text = generate(&cfg, 0).text;
        let mut runs = Vec::with_capacity(repeats.max(1));
        let mut last = None;
        for _ in 0..repeats.max(1) {
            let out = build_index(&text, "synthetic", options, &backends)?;
            runs.push(out.timings);
            last = Some(out.artifact.stats);
        }
        let stats = last.expect("at least one run");
        let pick = |f: fn(&StageTimings) -> f64| median(runs.iter().map(f).collect());
        points.push(ScalingPoint {
            tokens: stats.token_count,
            chunks: stats.chunk_count,
            summarizer_calls: stats.summarizer_calls,
            timings: StageTimings {
                chunking_ms: pick(|t| t.chunking_ms),
                tree_ms: pick(|t| t.tree_ms),
                graph_ms: pick(|t| t.graph_ms),
                embed_ms: pick(|t| t.embed_ms),
                total_index_ms: pick(|t| t.total_index_ms),
            },
        });
    }
    let xs: Vec<f64> = points.iter().map(|p| p.tokens as f64).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.timings.total_index_ms).collect();
    Ok(ScalingReport {
        fit: linear_fit(&xs, &ys),
        points,
    })
}
