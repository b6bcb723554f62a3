//! Window-size entropy analysis and classification metrics.

use std::collections::BTreeMap;
use std::io::Write;

use crate::error::{Error, Result};
use crate::ingest::{make_windows, NormalizedFrame, Window};

/// Shannon entropy (bits) of the arbitration-ID distribution in `ids`.
pub fn id_entropy(ids: impl IntoIterator<Item = u32>) -> f64 {
    let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
    let mut n = 0usize;
    for id in ids {
        *counts.entry(id).or_default() += 1;
        n += 1;
    }
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    counts
        .values()
        .map(|&c| {
            let p = c as f64 / n;
            p * (1.0 / p).log2()
        })
        .sum()
}

pub fn window_entropy(window: &Window) -> f64 {
    id_entropy(window.frames.iter().map(|f| f.arbitration_id))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntropyStats {
    pub window_size: usize,
    pub windows: usize,
    pub mean: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
    /// Population standard deviation.
    pub std: f64,
    /// Relative change of `mean` against the previous swept size.
    pub growth_rate: Option<f64>,
}

fn describe(window_size: usize, mut values: Vec<f64>) -> EntropyStats {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    values.sort_by(f64::total_cmp);
    let k = values.len();
    let median = if k % 2 == 1 {
        values[k / 2]
    } else {
        0.5 * (values[k / 2 - 1] + values[k / 2])
    };
    EntropyStats {
        window_size,
        windows: k,
        mean,
        median,
        min: values[0],
        max: values[k - 1],
        std: var.sqrt(),
        growth_rate: None,
    }
}

fn growth(prev: f64, cur: f64) -> f64 {
    if prev == 0.0 {
        if cur == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (cur - prev) / prev
    }
}

/// Entropy statistics for each window size. Sizes larger than the log are
/// skipped with a warning; growth rates then compare adjacent computed sizes.
pub fn entropy_sweep(frames: &[NormalizedFrame], sizes: &[usize]) -> Result<Vec<EntropyStats>> {
    if sizes.is_empty() {
        return Err(Error::Config("entropy sweep needs at least one window size".into()));
    }
    if sizes[0] == 0 || sizes.windows(2).any(|p| p[0] >= p[1]) {
        return Err(Error::Config(
            "entropy sweep sizes must be positive and strictly increasing".into(),
        ));
    }
    let mut out: Vec<EntropyStats> = Vec::new();
    for &size in sizes {
        if size > frames.len() {
            log::warn!("skipping window size {size}: only {} frames", frames.len());
            continue;
        }
        let windows = make_windows(frames, size)?;
        let mut stats = describe(size, windows.iter().map(window_entropy).collect());
        stats.growth_rate = out.last().map(|p| growth(p.mean, stats.mean));
        out.push(stats);
    }
    Ok(out)
}

/// Sizes `start, start+step, …, ≤ end`.
pub fn size_range(start: usize, end: usize, step: usize) -> Vec<usize> {
    (start..=end).step_by(step.max(1)).collect()
}

pub fn write_entropy_csv<W: Write>(stats: &[EntropyStats], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["window_size", "mean", "median", "min", "max", "std", "growth_rate"])?;
    for s in stats {
        w.write_record([
            s.window_size.to_string(),
            s.mean.to_string(),
            s.median.to_string(),
            s.min.to_string(),
            s.max.to_string(),
            s.std.to_string(),
            s.growth_rate.map(|g| g.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<entropy>", e))?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricBlock {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
    pub accuracy: f64,
    /// 0 when nothing was predicted positive; see `precision_undefined`.
    pub precision: f64,
    /// 0 when there are no positives; see `recall_undefined`.
    pub recall: f64,
    pub f1: f64,
    /// `None` when the labels hold a single class.
    pub auc: Option<f64>,
    pub precision_undefined: bool,
    pub recall_undefined: bool,
}

pub fn compute_metrics(decisions: &[u8], labels: &[u8], scores: &[f64]) -> Result<MetricBlock> {
    if decisions.is_empty() || decisions.len() != labels.len() || labels.len() != scores.len() {
        return Err(Error::invalid(format!(
            "metric inputs need equal non-zero lengths (decisions {}, labels {}, scores {})",
            decisions.len(),
            labels.len(),
            scores.len()
        )));
    }
    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    for (&d, &l) in decisions.iter().zip(labels) {
        match (d != 0, l != 0) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fn_ += 1,
        }
    }
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    Ok(MetricBlock {
        tp,
        fp,
        tn,
        fn_,
        accuracy: ratio(tp + tn, decisions.len()),
        precision,
        recall,
        f1: ratio(2 * tp, 2 * tp + fp + fn_),
        auc: auc(scores, labels),
        precision_undefined: tp + fp == 0,
        recall_undefined: tp + fn_ == 0,
    })
}

/// Mann–Whitney AUC: the probability that a random positive outscores a
/// random negative, ties counting one half.
pub fn auc(scores: &[f64], labels: &[u8]) -> Option<f64> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let pos = labels.iter().filter(|&&l| l != 0).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return None;
    }
    // twice the U statistic, accumulated over groups of tied scores
    let mut u2: u128 = 0;
    let mut negs_below: u128 = 0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        let (mut gp, mut gn) = (0u128, 0u128);
        while j < idx.len() && scores[idx[j]] == scores[idx[i]] {
            if labels[idx[j]] != 0 {
                gp += 1;
            } else {
                gn += 1;
            }
            j += 1;
        }
        u2 += gp * (2 * negs_below + gn);
        negs_below += gn;
        i = j;
    }
    Some(u2 as f64 / (2 * pos * neg) as f64)
}

pub fn threshold_decisions(scores: &[f64], threshold: f64) -> Vec<u8> {
    scores.iter().map(|&s| u8::from(s >= threshold)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{normalize, CanFrame, Label};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn frames(ids: &[u32]) -> Vec<NormalizedFrame> {
        ids.iter()
            .map(|&id| normalize(&CanFrame::new(0.0, id, 0, &[], Label::Normal).unwrap()))
            .collect()
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(id_entropy(vec![7; 50]), 0.0);
        assert_eq!(id_entropy([1, 2, 3, 4].repeat(5)), 2.0);
        let ids: Vec<u32> = [vec![1; 30], vec![2; 15], vec![3; 5]].concat();
        let oracle = -(0.6f64 * 0.6f64.log2() + 0.3 * 0.3f64.log2() + 0.1 * 0.1f64.log2());
        assert!((id_entropy(ids) - oracle).abs() < 1e-12);
        assert!((oracle - 1.295).abs() < 1e-3);
    }

    #[test]
    fn single_size_has_no_growth_rate() {
        let s = entropy_sweep(&frames(&[1, 2].repeat(20)), &[10]).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].growth_rate, None);
    }

    #[test]
    fn constant_traffic_has_zero_growth() {
        let s = entropy_sweep(&frames(&[5; 100]), &[10, 20, 50]).unwrap();
        assert!(s.iter().all(|r| r.mean == 0.0));
        assert_eq!(s[1].growth_rate, Some(0.0));
        assert_eq!(s[2].growth_rate, Some(0.0));
    }

    #[test]
    fn oversized_windows_are_skipped() {
        let s = entropy_sweep(&frames(&[1, 2, 3].repeat(10)), &[10, 20, 40]).unwrap();
        assert_eq!(s.iter().map(|r| r.window_size).collect::<Vec<_>>(), vec![10, 20]);
        assert!(entropy_sweep(&frames(&[1; 10]), &[5, 5]).is_err());
        assert!(entropy_sweep(&frames(&[1; 10]), &[0, 5]).is_err());
    }

    #[test]
    fn stats_are_ordered() {
        let ids: Vec<u32> = (0..400).map(|i| (i * 7 % 13) as u32 % ((i / 40) as u32 + 1)).collect();
        for s in entropy_sweep(&frames(&ids), &[10, 20, 40]).unwrap() {
            assert!(s.min <= s.median && s.median <= s.max && s.std >= 0.0);
            assert!(s.max <= (s.window_size as f64).log2() + 1e-12);
        }
    }

    #[test]
    fn hand_confusion() {
        let labels = [1, 1, 1, 0, 0, 0, 0, 0, 0, 0];
        let decisions = [1, 1, 0, 1, 0, 0, 0, 0, 0, 0];
        let scores: Vec<f64> = decisions.iter().map(|&d| f64::from(d)).collect();
        let m = compute_metrics(&decisions, &labels, &scores).unwrap();
        assert_eq!((m.tp, m.fp, m.fn_, m.tn), (2, 1, 1, 6));
        assert!((m.precision - 2.0 / 3.0).abs() < 1e-15);
        assert!((m.recall - 2.0 / 3.0).abs() < 1e-15);
        assert!((m.f1 - 2.0 / 3.0).abs() < 1e-15);
        assert!((m.accuracy - 0.8).abs() < 1e-15);
    }

    #[test]
    fn perfect_and_single_class() {
        let labels = [0, 1, 0, 1];
        let m = compute_metrics(&labels, &labels, &[0.1, 0.9, 0.2, 0.8]).unwrap();
        assert_eq!((m.accuracy, m.precision, m.recall, m.f1, m.auc), (1.0, 1.0, 1.0, 1.0, Some(1.0)));
        let m = compute_metrics(&[0, 0], &[0, 0], &[0.1, 0.2]).unwrap();
        assert_eq!(m.auc, None);
        assert!(m.precision_undefined && m.recall_undefined);
        assert_eq!((m.precision, m.recall, m.accuracy), (0.0, 0.0, 1.0));
    }

    #[test]
    fn length_mismatch_is_an_error() {
        assert!(compute_metrics(&[0], &[0, 1], &[0.0]).is_err());
        assert!(compute_metrics(&[], &[], &[]).is_err());
    }

    fn pairwise_auc(scores: &[f64], labels: &[u8]) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..scores.len() {
            for j in 0..scores.len() {
                if labels[i] == 1 && labels[j] == 0 {
                    den += 1.0;
                    if scores[i] > scores[j] {
                        num += 1.0;
                    } else if scores[i] == scores[j] {
                        num += 0.5;
                    }
                }
            }
        }
        num / den
    }

    #[test]
    fn auc_matches_pairwise_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for round in 0..20 {
            let scores: Vec<f64> = (0..200)
                .map(|_| if round % 2 == 0 { rng.random() } else { f64::from(rng.random_range(0..5u8)) / 4.0 })
                .collect();
            let labels: Vec<u8> = (0..200).map(|_| rng.random_range(0..2)).collect();
            assert_eq!(auc(&scores, &labels).unwrap(), pairwise_auc(&scores, &labels));
        }
    }

    #[test]
    fn entropy_csv_header() {
        let s = entropy_sweep(&frames(&[1, 2].repeat(20)), &[10, 20]).unwrap();
        let mut buf = Vec::new();
        write_entropy_csv(&s, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("window_size,mean,median,min,max,std,growth_rate\n10,1,1,1,1,0,\n"));
    }
}
