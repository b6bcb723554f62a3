//! GRU anomaly detector over sliding sequences of graph embeddings.
//!
//! Two stacked GRU layers (32→64, 64→64, dropout 0.3 between them) feed a
//! head `64→32 ReLU → 32→1 sigmoid`. The head on the last hidden state is
//! the sequence probability; the head on every hidden state gives the
//! per-window probabilities used by the mean and max window views.

use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::{compute_metrics, threshold_decisions, MetricBlock};
use crate::encoder::{GraphEmbedding, EMBEDDING_DIM};
use crate::error::{Error, Result};
use crate::ingest::Label;
use crate::nn::{adam_step, checkpoint, AdamConfig, GruCell, Linear, ParamSet, Tape, Tensor, Var};

pub const HIDDEN_DIM: usize = 64;
pub const HEAD_DIM: usize = 32;
pub const DROPOUT: f64 = 0.3;
pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSequence {
    pub start_index: usize,
    pub vectors: Vec<GraphEmbedding>,
    pub label: u8,
}

impl EmbeddingSequence {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

/// Stride-1 sequences `[h_n, …, h_{n+L−1}]` for `n = 0..=m−L`.
pub fn make_sequences(embeddings: &[GraphEmbedding], length: usize) -> Result<Vec<EmbeddingSequence>> {
    check_sequence_input(embeddings, length)?;
    Ok(embeddings
        .windows(length)
        .map(|w| EmbeddingSequence {
            start_index: w[0].window_index,
            label: u8::from(w.iter().any(|e| e.label != 0)),
            vectors: w.to_vec(),
        })
        .collect())
}

fn check_sequence_input(embeddings: &[GraphEmbedding], length: usize) -> Result<()> {
    if length == 0 {
        return Err(Error::Config("sequence length must be at least 1".into()));
    }
    if length > embeddings.len() {
        return Err(Error::invalid(format!(
            "sequence length {length} exceeds the {} available windows",
            embeddings.len()
        )));
    }
    if let Some(p) = embeddings.windows(2).find(|p| p[1].window_index != p[0].window_index + 1) {
        return Err(Error::invalid(format!(
            "embeddings must have consecutive window indices; {} is followed by {}",
            p[0].window_index, p[1].window_index
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectorModel {
    pub params: ParamSet,
    pub gru1: GruCell,
    pub gru2: GruCell,
    pub fc1: Linear,
    pub fc2: Linear,
    pub dropout: f64,
}

/// Which timesteps get a head output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Heads {
    Last,
    All,
}

impl DetectorModel {
    pub fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = ParamSet::new();
        let gru1 = GruCell::new(&mut p, "gru1", EMBEDDING_DIM, HIDDEN_DIM, &mut rng);
        let gru2 = GruCell::new(&mut p, "gru2", HIDDEN_DIM, HIDDEN_DIM, &mut rng);
        let fc1 = Linear::new(&mut p, "fc1", HIDDEN_DIM, HEAD_DIM, &mut rng);
        let fc2 = Linear::new(&mut p, "fc2", HEAD_DIM, 1, &mut rng);
        Self {
            params: p,
            gru1,
            gru2,
            fc1,
            fc2,
            dropout: DROPOUT,
        }
    }

    fn head(&self, tape: &mut Tape, h: Var) -> Result<Var> {
        let a = self.fc1.forward(tape, h)?;
        let a = tape.relu(a);
        let logit = self.fc2.forward(tape, a)?;
        Ok(tape.sigmoid(logit))
    }

    /// Runs both layers over `steps` (each `B×32`) from a zero state and
    /// returns `B×1` probabilities for the requested timesteps.
    pub fn forward<R: Rng + ?Sized>(
        &self,
        tape: &mut Tape,
        steps: &[Var],
        heads: Heads,
        training: bool,
        rng: &mut R,
    ) -> Result<Vec<Var>> {
        let Some(&first) = steps.first() else {
            return Err(Error::invalid("empty sequence"));
        };
        let batch = tape.value(first).rows();
        let mut h1 = tape.input(Tensor::zeros(&[batch, HIDDEN_DIM]));
        let mut h2 = tape.input(Tensor::zeros(&[batch, HIDDEN_DIM]));
        let mut out = Vec::new();
        for (t, &x) in steps.iter().enumerate() {
            if tape.value(x).cols() != EMBEDDING_DIM {
                return Err(Error::Shape {
                    op: "detector input",
                    left: tape.value(x).shape().to_vec(),
                    right: vec![batch, EMBEDDING_DIM],
                });
            }
            h1 = self.gru1.step(tape, x, h1)?;
            let d = tape.dropout(h1, self.dropout, training, rng);
            h2 = self.gru2.step(tape, d, h2)?;
            if heads == Heads::All || t + 1 == steps.len() {
                out.push(self.head(tape, h2)?);
            }
        }
        Ok(out)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        checkpoint::save(&self.params, path)
    }

    pub fn write_to<W: Write>(&self, w: W) -> std::io::Result<()> {
        checkpoint::write_params(&self.params, w)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut m = Self::new(0);
        checkpoint::load(&mut m.params, path)?;
        Ok(m)
    }

    pub fn read_from<R: Read>(r: R) -> Result<Self> {
        let mut m = Self::new(0);
        checkpoint::load_into(&mut m.params, checkpoint::read_records(r)?)?;
        Ok(m)
    }
}

/// Timestep inputs `B×32` for a batch of equal-length sequences.
fn batch_inputs(tape: &mut Tape, batch: &[&EmbeddingSequence]) -> Result<Vec<Var>> {
    let len = batch[0].len();
    if let Some(s) = batch.iter().find(|s| s.len() != len) {
        return Err(Error::invalid(format!(
            "sequence at {} has length {}, expected {len}",
            s.start_index,
            s.len()
        )));
    }
    (0..len)
        .map(|t| {
            let mut data = Vec::with_capacity(batch.len() * EMBEDDING_DIM);
            for s in batch {
                let v = &s.vectors[t].vector;
                if v.len() != EMBEDDING_DIM {
                    return Err(Error::Shape {
                        op: "detector input",
                        left: vec![1, v.len()],
                        right: vec![1, EMBEDDING_DIM],
                    });
                }
                data.extend_from_slice(v);
            }
            Ok(tape.input(Tensor::matrix(batch.len(), EMBEDDING_DIM, data)?))
        })
        .collect()
}

/// `(seq_prob, window_probs)` for a single sequence; `seq_prob == window_probs[L−1]`.
pub fn detector_forward<R: Rng + ?Sized>(
    model: &DetectorModel,
    seq: &EmbeddingSequence,
    training: bool,
    rng: &mut R,
) -> Result<(f64, Vec<f64>)> {
    let mut tape = Tape::new(&model.params);
    let steps = batch_inputs(&mut tape, &[seq])?;
    let probs = model.forward(&mut tape, &steps, Heads::All, training, rng)?;
    let window_probs: Vec<f64> = probs.iter().map(|&p| tape.value(p).data()[0]).collect();
    Ok((*window_probs.last().expect("non-empty"), window_probs))
}

/// Per-timestep probabilities for many sequences, evaluated in batches
/// with dropout off.
pub fn predict(model: &DetectorModel, seqs: &[EmbeddingSequence], batch_size: usize) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::with_capacity(seqs.len());
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let refs: Vec<&EmbeddingSequence> = seqs.iter().collect();
    for chunk in refs.chunks(batch_size.max(1)) {
        let mut tape = Tape::new(&model.params);
        let steps = batch_inputs(&mut tape, chunk)?;
        let probs = model.forward(&mut tape, &steps, Heads::All, false, &mut rng)?;
        for b in 0..chunk.len() {
            out.push(probs.iter().map(|&p| tape.value(p).data()[b]).collect());
        }
    }
    Ok(out)
}

fn predict_last(model: &DetectorModel, seqs: &[EmbeddingSequence], batch_size: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(seqs.len());
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let refs: Vec<&EmbeddingSequence> = seqs.iter().collect();
    for chunk in refs.chunks(batch_size.max(1)) {
        let mut tape = Tape::new(&model.params);
        let steps = batch_inputs(&mut tape, chunk)?;
        let probs = model.forward(&mut tape, &steps, Heads::Last, false, &mut rng)?;
        out.extend_from_slice(tape.value(probs[0]).data());
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectorConfig {
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    /// Epochs without validation improvement before stopping; 0 disables.
    pub patience: usize,
    pub seed: u64,
    /// Global-norm gradient clip; 0 disables.
    pub grad_clip: f64,
    pub threshold: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            lr: 1e-3,
            batch_size: 32,
            patience: 20,
            seed: 0,
            grad_clip: 5.0,
            threshold: DEFAULT_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectorEpoch {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_f1: f64,
    pub val_accuracy: f64,
    pub val_auc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectorLog {
    pub config: DetectorConfig,
    pub epochs: Vec<DetectorEpoch>,
    pub best_epoch: usize,
}

impl DetectorLog {
    pub fn best(&self) -> &DetectorEpoch {
        &self.epochs[self.best_epoch]
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let c = &self.config;
        let io = |e| Error::io("<detector log>", e);
        writeln!(
            w,
            "# epochs={} lr={} batch_size={} patience={} seed={} grad_clip={} threshold={} best_epoch={}",
            c.epochs, c.lr, c.batch_size, c.patience, c.seed, c.grad_clip, c.threshold, self.best_epoch
        )
        .map_err(io)?;
        writeln!(w, "epoch,train_loss,val_loss,val_f1,val_accuracy,val_auc").map_err(io)?;
        for e in &self.epochs {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                e.epoch,
                e.train_loss,
                e.val_loss,
                e.val_f1,
                e.val_accuracy,
                e.val_auc.map(|a| a.to_string()).unwrap_or_default()
            )
            .map_err(io)?;
        }
        Ok(())
    }
}

fn bce_value(probs: &[f64], labels: &[f64]) -> f64 {
    let eps = crate::nn::BCE_EPS;
    probs
        .iter()
        .zip(labels)
        .map(|(&q, &y)| {
            let q = q.clamp(eps, 1.0 - eps);
            -(y * q.ln() + (1.0 - y) * (1.0 - q).ln())
        })
        .sum::<f64>()
        / probs.len() as f64
}

/// Trains on sequence-level BCE. The returned model is the one with the
/// best validation F1; ties go to the lower validation loss. An empty
/// validation set falls back to the training set.
pub fn train_detector(
    mut model: DetectorModel,
    train: &[EmbeddingSequence],
    val: &[EmbeddingSequence],
    cfg: &DetectorConfig,
) -> Result<(DetectorModel, DetectorLog)> {
    if train.is_empty() {
        return Err(Error::invalid("no training sequences"));
    }
    let positives = train.iter().filter(|s| s.label != 0).count();
    if positives == 0 || positives == train.len() {
        return Err(Error::invalid(format!(
            "detector training needs both classes; all {} sequences are labeled {}",
            train.len(),
            train[0].label
        )));
    }
    if cfg.epochs == 0 || cfg.batch_size == 0 {
        return Err(Error::Config("detector epochs and batch size must be at least 1".into()));
    }
    let val = if val.is_empty() { train } else { val };
    let val_labels: Vec<u8> = val.iter().map(|s| s.label).collect();
    let val_targets: Vec<f64> = val_labels.iter().map(|&l| f64::from(l)).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xD37E_C7);
    let adam = AdamConfig::with_lr(cfg.lr);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut epochs = Vec::new();
    let mut best: Option<(f64, f64, ParamSet, usize)> = None;

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<&EmbeddingSequence> = chunk.iter().map(|&i| &train[i]).collect();
            let targets: Vec<f64> = batch.iter().map(|s| f64::from(s.label)).collect();
            let grads = {
                let mut tape = Tape::new(&model.params);
                let steps = batch_inputs(&mut tape, &batch)?;
                let probs = model.forward(&mut tape, &steps, Heads::Last, true, &mut rng)?;
                let loss = tape.bce(probs[0], &targets)?;
                let l = tape.value(loss).data()[0];
                if !l.is_finite() {
                    return Err(Error::Divergence(format!("detector loss is {l} at epoch {epoch}")));
                }
                total += l * batch.len() as f64;
                tape.backward(loss)?
            };
            model.params.accumulate(&grads);
            if cfg.grad_clip > 0.0 {
                model.params.clip_grad_norm(cfg.grad_clip);
            }
            adam_step(&mut model.params, &adam)?;
        }
        let train_loss = total / train.len() as f64;

        let probs = predict_last(&model, val, 64)?;
        if probs.iter().any(|p| !p.is_finite()) {
            return Err(Error::Divergence("non-finite validation probability".into()));
        }
        let val_loss = bce_value(&probs, &val_targets);
        let m = compute_metrics(&threshold_decisions(&probs, cfg.threshold), &val_labels, &probs)?;
        log::debug!(
            "detector epoch {epoch}: train {train_loss:.5} val {val_loss:.5} f1 {:.4}",
            m.f1
        );
        epochs.push(DetectorEpoch {
            epoch,
            train_loss,
            val_loss,
            val_f1: m.f1,
            val_accuracy: m.accuracy,
            val_auc: m.auc,
        });

        let improved = best
            .as_ref()
            .is_none_or(|&(f1, loss, ..)| m.f1 > f1 || (m.f1 == f1 && val_loss < loss));
        if improved {
            best = Some((m.f1, val_loss, model.params.clone(), epoch));
        } else if cfg.patience > 0 && epoch - best.as_ref().map_or(0, |b| b.3) >= cfg.patience {
            break;
        }
    }

    let (.., params, best_epoch) = best.expect("at least one epoch ran");
    model.params = params;
    for p in model.params.iter_mut() {
        p.grad = None;
    }
    Ok((
        model,
        DetectorLog {
            config: cfg.clone(),
            epochs,
            best_epoch,
        },
    ))
}

/// One scored unit (a sequence or a window) of a detection view.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitScore {
    pub index: usize,
    pub probability: f64,
    pub decision: u8,
    pub label: u8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViewReport {
    pub units: Vec<UnitScore>,
    pub metrics: MetricBlock,
}

impl ViewReport {
    fn new(units: Vec<(usize, f64, u8)>, threshold: f64) -> Result<Self> {
        Self::from_units(
            units
                .into_iter()
                .map(|(index, probability, label)| UnitScore {
                    index,
                    probability,
                    decision: u8::from(probability >= threshold),
                    label,
                })
                .collect(),
        )
    }

    pub fn from_units(units: Vec<UnitScore>) -> Result<Self> {
        let d: Vec<u8> = units.iter().map(|u| u.decision).collect();
        let l: Vec<u8> = units.iter().map(|u| u.label).collect();
        let s: Vec<f64> = units.iter().map(|u| u.probability).collect();
        let metrics = compute_metrics(&d, &l, &s)?;
        Ok(Self { units, metrics })
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let mut units = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let line = rec.position().map_or(0, |p| p.line() as usize);
            let bad = |m: &str| Error::Parse {
                line,
                message: m.to_string(),
            };
            if rec.len() != 4 {
                return Err(bad("expected index,probability,decision,label"));
            }
            units.push(UnitScore {
                index: rec[0].parse().map_err(|_| bad("bad index"))?,
                probability: rec[1].parse().map_err(|_| bad("bad probability"))?,
                decision: rec[2].parse().map_err(|_| bad("bad decision"))?,
                label: rec[3].parse().map_err(|_| bad("bad label"))?,
            });
        }
        Self::from_units(units)
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.units.iter().map(|u| u.probability).collect()
    }

    pub fn labels(&self) -> Vec<u8> {
        self.units.iter().map(|u| u.label).collect()
    }

    pub fn positives(&self) -> usize {
        self.units.iter().filter(|u| u.decision != 0).count()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["index", "probability", "decision", "label"])?;
        for u in &self.units {
            w.write_record([
                u.index.to_string(),
                u.probability.to_string(),
                u.decision.to_string(),
                u.label.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<report>", e))?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum View {
    Sequence,
    Mean,
    Max,
}

impl View {
    pub const ALL: [View; 3] = [View::Sequence, View::Mean, View::Max];

    pub fn name(self) -> &'static str {
        match self {
            View::Sequence => "sequence",
            View::Mean => "mean",
            View::Max => "max",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionReport {
    pub threshold: f64,
    pub sequence_length: usize,
    pub sequences: ViewReport,
    pub window_mean: ViewReport,
    pub window_max: ViewReport,
}

impl DetectionReport {
    pub fn view(&self, v: View) -> &ViewReport {
        match v {
            View::Sequence => &self.sequences,
            View::Mean => &self.window_mean,
            View::Max => &self.window_max,
        }
    }

    /// Rows of `Win, Seq, Type, Accuracy, Precision, Recall, F1-score, AUC`.
    pub fn summary_text(&self, window_size: usize) -> String {
        let mut s = format!(
            "{:<5} {:<5} {:<9} {:>9} {:>9} {:>9} {:>9} {:>9}\n",
            "Win", "Seq", "Type", "Accuracy", "Precision", "Recall", "F1-score", "AUC"
        );
        for v in View::ALL {
            let m = &self.view(v).metrics;
            s.push_str(&format!(
                "{:<5} {:<5} {:<9} {:>9.4} {:>9.4} {:>9.4} {:>9.4} {:>9}\n",
                window_size,
                self.sequence_length,
                v.name(),
                m.accuracy,
                m.precision,
                m.recall,
                m.f1,
                m.auc.map_or("n/a".to_string(), |a| format!("{a:.4}"))
            ));
        }
        s
    }

    pub fn write_summary_csv<W: Write>(&self, window_size: usize, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "win", "seq", "type", "accuracy", "precision", "recall", "f1", "auc", "tp", "fp", "tn", "fn",
        ])?;
        for v in View::ALL {
            let m = &self.view(v).metrics;
            w.write_record([
                window_size.to_string(),
                self.sequence_length.to_string(),
                v.name().to_string(),
                m.accuracy.to_string(),
                m.precision.to_string(),
                m.recall.to_string(),
                m.f1.to_string(),
                m.auc.map(|a| a.to_string()).unwrap_or_default(),
                m.tp.to_string(),
                m.fp.to_string(),
                m.tn.to_string(),
                m.fn_.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<summary>", e))?;
        Ok(())
    }

    /// Re-thresholds every view without re-running the model.
    pub fn with_threshold(&self, threshold: f64) -> Result<Self> {
        let redo = |v: &ViewReport| {
            ViewReport::new(
                v.units.iter().map(|u| (u.index, u.probability, u.label)).collect(),
                threshold,
            )
        };
        Ok(Self {
            threshold,
            sequence_length: self.sequence_length,
            sequences: redo(&self.sequences)?,
            window_mean: redo(&self.window_mean)?,
            window_max: redo(&self.window_max)?,
        })
    }
}

/// Mean and max of the per-timestep contributions each window receives.
pub fn aggregate_windows(window_probs: &[Vec<f64>], m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut sum = vec![0.0; m];
    let mut count = vec![0usize; m];
    let mut max = vec![f64::NEG_INFINITY; m];
    for (s, probs) in window_probs.iter().enumerate() {
        for (t, &p) in probs.iter().enumerate() {
            sum[s + t] += p;
            count[s + t] += 1;
            max[s + t] = max[s + t].max(p);
        }
    }
    let mean = sum.iter().zip(&count).map(|(s, &c)| s / c as f64).collect();
    (mean, max)
}

pub fn detect(
    model: &DetectorModel,
    embeddings: &[GraphEmbedding],
    length: usize,
    threshold: f64,
) -> Result<DetectionReport> {
    detect_batched(model, embeddings, length, threshold, 64)
}

pub fn detect_batched(
    model: &DetectorModel,
    embeddings: &[GraphEmbedding],
    length: usize,
    threshold: f64,
    batch_size: usize,
) -> Result<DetectionReport> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::Config(format!("threshold {threshold} outside (0, 1)")));
    }
    let seqs = make_sequences(embeddings, length)?;
    let probs = predict(model, &seqs, batch_size)?;
    let (mean, max) = aggregate_windows(&probs, embeddings.len());
    let sequences = ViewReport::new(
        seqs.iter()
            .zip(&probs)
            .map(|(s, p)| (s.start_index, *p.last().expect("non-empty"), s.label))
            .collect(),
        threshold,
    )?;
    let window_view = |scores: &[f64]| {
        ViewReport::new(
            embeddings
                .iter()
                .zip(scores)
                .map(|(e, &p)| (e.window_index, p, e.label))
                .collect(),
            threshold,
        )
    };
    Ok(DetectionReport {
        threshold,
        sequence_length: length,
        sequences,
        window_mean: window_view(&mean)?,
        window_max: window_view(&max)?,
    })
}

/// Bit set of attack kinds present in a unit.
pub fn kind_mask(labels: &[Label]) -> u8 {
    labels
        .iter()
        .filter(|l| l.is_attack())
        .fold(0, |m, &l| m | (1 << (l as u8)))
}

/// Kinds covered by each stride-1 sequence of `length` windows.
pub fn sequence_masks(window_masks: &[u8], length: usize) -> Vec<u8> {
    window_masks
        .windows(length)
        .map(|w| w.iter().fold(0, |a, &b| a | b))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackAuc {
    pub view: View,
    pub kind: Label,
    pub positives: usize,
    pub negatives: usize,
    pub auc: Option<f64>,
}

/// AUC of each attack kind against the all-normal units of every view.
/// `window_masks[i]` describes the `i`-th window of the report.
pub fn per_attack_auc(report: &DetectionReport, window_masks: &[u8]) -> Result<Vec<AttackAuc>> {
    if window_masks.len() != report.window_mean.units.len() {
        return Err(Error::invalid(format!(
            "{} window masks for {} windows",
            window_masks.len(),
            report.window_mean.units.len()
        )));
    }
    let seq_masks = sequence_masks(window_masks, report.sequence_length);
    let mut out = Vec::new();
    for view in View::ALL {
        let (units, masks) = match view {
            View::Sequence => (&report.sequences.units, &seq_masks),
            View::Mean => (&report.window_mean.units, &window_masks.to_vec()),
            View::Max => (&report.window_max.units, &window_masks.to_vec()),
        };
        for kind in Label::ATTACKS {
            let bit = 1u8 << (kind as u8);
            let (mut scores, mut labels) = (Vec::new(), Vec::new());
            for (u, &m) in units.iter().zip(masks.iter()) {
                if m & bit != 0 {
                    scores.push(u.probability);
                    labels.push(1);
                } else if m == 0 {
                    scores.push(u.probability);
                    labels.push(0);
                }
            }
            let positives = labels.iter().filter(|&&l| l == 1).count();
            out.push(AttackAuc {
                view,
                kind,
                positives,
                negatives: labels.len() - positives,
                auc: crate::analysis::auc(&scores, &labels),
            });
        }
    }
    Ok(out)
}

pub fn write_per_attack_csv<W: Write>(rows: &[AttackAuc], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["type", "attack", "positives", "negatives", "auc"])?;
    for r in rows {
        w.write_record([
            r.view.name().to_string(),
            r.kind.name().to_string(),
            r.positives.to_string(),
            r.negatives.to_string(),
            r.auc.map(|a| a.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<per-attack>", e))?;
    Ok(())
}
