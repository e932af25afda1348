//! Zero-external-data fixtures: a planted-partition graph with noisy
//! one-hot features (recoverable by low-pass filtering) and smooth-blob
//! grayscale images for the filter-fitting protocol.

use super::config::SyntheticGraphCfg;
use super::TrainError;
use crate::graphcore::{build_graph, GrayImage, Graph, SelfLoopPolicy};
use crate::Mat;
use rand::Rng;
use rand_distr::{Distribution, Normal};

/// Planted-partition graph: `blocks` equal groups, within-block edge
/// probability `p_in`, cross-block `p_out`. Features are the one-hot
/// block indicator plus Gaussian noise; labels are the block ids.
pub fn planted_partition(cfg: &SyntheticGraphCfg, rng: &mut impl Rng) -> Result<Graph, TrainError> {
    let n = cfg.nodes;
    let blocks = cfg.blocks;
    if n < 5 || blocks < 2 || n < 2 * blocks {
        return Err(TrainError::Config(format!(
            "planted partition needs >= 5 nodes and >= 2 nodes per block, got n={n} blocks={blocks}"
        )));
    }
    let block_of = |v: usize| v * blocks / n;

    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            let p = if block_of(u) == block_of(v) { cfg.p_in } else { cfg.p_out };
            if rng.random_bool(p.clamp(0.0, 1.0)) {
                edges.push((u, v));
            }
        }
    }
    // Keep the propagation matrix well-defined: attach stray isolated
    // nodes to a same-block neighbor.
    let mut degree = vec![0usize; n];
    for &(u, v) in &edges {
        degree[u] += 1;
        degree[v] += 1;
    }
    for v in 0..n {
        if degree[v] == 0 {
            let block = block_of(v);
            let peers: Vec<usize> =
                (0..n).filter(|&u| u != v && block_of(u) == block).collect();
            let u = peers[rng.random_range(0..peers.len())];
            edges.push((u.min(v), u.max(v)));
            degree[v] += 1;
            degree[u] += 1;
        }
    }

    let noise = Normal::new(0.0, cfg.feature_noise).map_err(|e| {
        TrainError::Config(format!("invalid feature noise {}: {e}", cfg.feature_noise))
    })?;
    let mut features = Mat::zeros(n, blocks);
    let mut labels = Vec::with_capacity(n);
    for v in 0..n {
        let block = block_of(v);
        labels.push(block);
        for j in 0..blocks {
            let base = if j == block { 1.0 } else { 0.0 };
            features[(v, j)] = base + noise.sample(rng);
        }
    }

    let graph = build_graph(&edges, n, SelfLoopPolicy::Reject)?
        .with_features(features)?
        .with_labels(labels)?;
    Ok(graph)
}

/// Random grayscale test images: a handful of Gaussian bumps plus a
/// per-pixel noise floor. Pure blobs put essentially all signal energy
/// at the smooth end of the spectrum; the noise fraction spreads energy
/// across all graph frequencies the way natural images do, so mid- and
/// high-band filter error actually shows up in the fitting loss.
pub fn smooth_images(count: usize, size: usize, noise: f64, rng: &mut impl Rng) -> Vec<GrayImage> {
    (0..count).map(|_| smooth_image(size, noise, rng)).collect()
}

fn smooth_image(size: usize, noise: f64, rng: &mut impl Rng) -> GrayImage {
    let bumps: Vec<(f64, f64, f64, f64)> = (0..4)
        .map(|_| {
            let cx = rng.random_range(0.0..size as f64);
            let cy = rng.random_range(0.0..size as f64);
            let sigma = rng.random_range(size as f64 / 8.0..size as f64 / 3.0);
            let amp = rng.random_range(0.3..1.0);
            (cx, cy, sigma, amp)
        })
        .collect();
    let mut field = vec![0.0f64; size * size];
    for y in 0..size {
        for x in 0..size {
            let mut v = 0.0;
            for &(cx, cy, sigma, amp) in &bumps {
                let dx = x as f64 - cx;
                let dy = y as f64 - cy;
                v += amp * (-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp();
            }
            field[y * size + x] = v;
        }
    }
    let min = field.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = field.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = (max - min).max(1e-12);
    let pixels = field
        .iter()
        .map(|&v| {
            let blob = (v - min) / span;
            let mixed = (1.0 - noise) * blob + noise * rng.random::<f64>();
            (255.0 * mixed).round().clamp(0.0, 255.0) as u8
        })
        .collect();
    GrayImage::new(size, size, pixels)
}
