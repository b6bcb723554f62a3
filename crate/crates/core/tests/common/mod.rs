//! Brute-force reference implementations shared by the integration tests.
#![allow(dead_code)]

pub mod grad;

use guard_can::ingest::{CanFrame, Label};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// O(n²) AUC: every (positive, negative) pair, ties worth one half.
pub fn pairwise_auc(scores: &[f64], labels: &[u8]) -> Option<f64> {
    let pos: Vec<f64> = scores.iter().zip(labels).filter(|(_, &l)| l == 1).map(|(&s, _)| s).collect();
    let neg: Vec<f64> = scores.iter().zip(labels).filter(|(_, &l)| l == 0).map(|(&s, _)| s).collect();
    if pos.is_empty() || neg.is_empty() {
        return None;
    }
    let mut twice: u128 = 0;
    for p in &pos {
        for n in &neg {
            if p > n {
                twice += 2;
            } else if p == n {
                twice += 1;
            }
        }
    }
    Some(twice as f64 / (2 * pos.len() * neg.len()) as f64)
}

/// Direct `−Σ p·log2 p` over a count vector.
pub fn entropy_from_counts(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    -counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n as f64;
            p * p.log2()
        })
        .sum::<f64>()
}

/// `(start, label)` of every length-`l` run of `labels`, enumerated naively.
pub fn brute_sequences(labels: &[u8], l: usize) -> Vec<(usize, u8)> {
    let mut out = Vec::new();
    let mut start = 0;
    while start + l <= labels.len() {
        let mut any = 0;
        for k in start..start + l {
            if labels[k] == 1 {
                any = 1;
            }
        }
        out.push((start, any));
        start += 1;
    }
    out
}

/// Random frames with strictly increasing timestamps.
pub fn random_frames(n: usize, seed: u64, attack_share: f64) -> Vec<CanFrame> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = 0.0;
    (0..n)
        .map(|_| {
            t += rng.random_range(0.0001..0.01);
            let dlc = rng.random_range(0..=8u8);
            let data: Vec<u8> = (0..dlc).map(|_| rng.random()).collect();
            let label = if rng.random_bool(attack_share) {
                Label::ATTACKS[rng.random_range(0..4)]
            } else {
                Label::Normal
            };
            CanFrame::new(t, rng.random_range(0..0x800), dlc, &data, label).unwrap()
        })
        .collect()
}

/// Twenty copies of one random normal graph.
pub fn identical_graphs(w: usize, seed: u64) -> Vec<guard_can::graph::WindowGraph> {
    use guard_can::graph::{build_graph, ByteMode};
    use guard_can::ingest::{make_windows, normalize_all};
    let frames = normalize_all(&random_frames(w, seed, 0.0));
    let g = build_graph(&make_windows(&frames, w).unwrap()[0], ByteMode::Binarized).unwrap();
    vec![g; 20]
}

/// First epoch (1-based) whose training reconstruction loss drops below
/// `target`, within `max_epochs`.
pub fn encoder_overfit(target: f64, max_epochs: usize) -> (Option<usize>, f64) {
    use guard_can::encoder::{train_encoder, EncoderConfig};
    let cfg = EncoderConfig {
        epochs: max_epochs,
        patience: 0,
        ..EncoderConfig::default()
    };
    let (_, log) = train_encoder(&identical_graphs(20, 7), &cfg).unwrap();
    let hit = log.epochs.iter().position(|e| e.train_loss < target).map(|i| i + 1);
    let best = log.epochs.iter().map(|e| e.train_loss).fold(f64::INFINITY, f64::min);
    (hit, best)
}

/// Ten clearly positive and ten clearly negative sequences of length 8.
pub fn separable_sequences(seed: u64) -> Vec<guard_can::detector::EmbeddingSequence> {
    use guard_can::detector::EmbeddingSequence;
    use guard_can::encoder::GraphEmbedding;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..20)
        .map(|s| {
            let label = (s % 2) as u8;
            let centre = if label == 1 { 0.8 } else { -0.8 };
            let vectors = (0..8)
                .map(|t| GraphEmbedding {
                    window_index: s * 8 + t,
                    label,
                    vector: (0..32).map(|_| centre + rng.random_range(-0.2..0.2)).collect(),
                })
                .collect();
            EmbeddingSequence {
                start_index: s * 8,
                vectors,
                label,
            }
        })
        .collect()
}

/// First epoch whose training BCE drops below `target`, within `max_epochs`.
pub fn detector_overfit(target: f64, max_epochs: usize) -> (Option<usize>, f64) {
    use guard_can::detector::{train_detector, DetectorConfig, DetectorModel};
    let seqs = separable_sequences(11);
    let cfg = DetectorConfig {
        epochs: max_epochs,
        patience: 0,
        ..DetectorConfig::default()
    };
    let (_, log) = train_detector(DetectorModel::new(0), &seqs, &seqs, &cfg).unwrap();
    let hit = log.epochs.iter().position(|e| e.train_loss < target).map(|i| i + 1);
    let best = log.epochs.iter().map(|e| e.train_loss).fold(f64::INFINITY, f64::min);
    (hit, best)
}
