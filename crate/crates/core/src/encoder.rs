//! Overcomplete autoencoder + graph-convolution encoder.
//!
//! ```text
//! X (W×9) → enc1 9→16 → ReLU → enc2 16→16 → ReLU
//!         → gcn1 16→32 → ReLU → gcn2 32→32 → ReLU → gcn3 32→32 → ReLU   (node embeddings)
//!         → dec1 32→16 → ReLU → dec2 16→9                              (reconstruction)
//! ```
//!
//! Training minimizes per-node reconstruction MSE on normal graphs only.
//! Embedding runs the encoder half and mean-pools node embeddings to `1×32`.

use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{WindowGraph, NODE_FEATURES};
use crate::nn::{adam_step, checkpoint, AdamConfig, GcnConv, Linear, ParamSet, SparseMatrix, Tape, Tensor, Var};

pub const LATENT_DIM: usize = 16;
pub const EMBEDDING_DIM: usize = 32;

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderModel {
    pub params: ParamSet,
    pub ae_enc1: Linear,
    pub ae_enc2: Linear,
    pub gcn1: GcnConv,
    pub gcn2: GcnConv,
    pub gcn3: GcnConv,
    pub ae_dec1: Linear,
    pub ae_dec2: Linear,
}

impl EncoderModel {
    pub fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = ParamSet::new();
        let ae_enc1 = Linear::new(&mut p, "ae_enc1", NODE_FEATURES, LATENT_DIM, &mut rng);
        let ae_enc2 = Linear::new(&mut p, "ae_enc2", LATENT_DIM, LATENT_DIM, &mut rng);
        let gcn1 = GcnConv::new(&mut p, "gcn1", LATENT_DIM, EMBEDDING_DIM, &mut rng);
        let gcn2 = GcnConv::new(&mut p, "gcn2", EMBEDDING_DIM, EMBEDDING_DIM, &mut rng);
        let gcn3 = GcnConv::new(&mut p, "gcn3", EMBEDDING_DIM, EMBEDDING_DIM, &mut rng);
        let ae_dec1 = Linear::new(&mut p, "ae_dec1", EMBEDDING_DIM, LATENT_DIM, &mut rng);
        let ae_dec2 = Linear::new(&mut p, "ae_dec2", LATENT_DIM, NODE_FEATURES, &mut rng);
        Self {
            params: p,
            ae_enc1,
            ae_enc2,
            gcn1,
            gcn2,
            gcn3,
            ae_dec1,
            ae_dec2,
        }
    }

    /// Node embeddings `W×32` on the tape.
    pub fn encode(&self, tape: &mut Tape, x: Var, adj: &Arc<SparseMatrix>) -> Result<Var> {
        let width = tape.value(x).cols();
        if width != NODE_FEATURES {
            return Err(Error::Shape {
                op: "encoder input",
                left: tape.value(x).shape().to_vec(),
                right: vec![adj.n(), NODE_FEATURES],
            });
        }
        let h = self.ae_enc1.forward(tape, x)?;
        let h = tape.relu(h);
        let h = self.ae_enc2.forward(tape, h)?;
        let h = tape.relu(h);
        let h = self.gcn1.forward(tape, h, adj)?;
        let h = tape.relu(h);
        let h = self.gcn2.forward(tape, h, adj)?;
        let h = tape.relu(h);
        let h = self.gcn3.forward(tape, h, adj)?;
        Ok(tape.relu(h))
    }

    /// Per-node reconstruction `W×9` from node embeddings.
    pub fn decode(&self, tape: &mut Tape, node_embeddings: Var) -> Result<Var> {
        let h = self.ae_dec1.forward(tape, node_embeddings)?;
        let h = tape.relu(h);
        self.ae_dec2.forward(tape, h)
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

/// Node embeddings and reconstruction for one graph.
pub fn encoder_forward(model: &EncoderModel, graph: &WindowGraph) -> Result<(Tensor, Tensor)> {
    let adj = graph.propagation();
    let mut tape = Tape::new(&model.params);
    let x = tape.input(graph.node_features.clone());
    let z = model.encode(&mut tape, x, &adj)?;
    let r = model.decode(&mut tape, z)?;
    Ok((tape.value(z).clone(), tape.value(r).clone()))
}

pub fn reconstruction_loss(model: &EncoderModel, graph: &WindowGraph) -> Result<f64> {
    reconstruction_loss_with(model, graph, &graph.propagation())
}

fn reconstruction_loss_with(model: &EncoderModel, graph: &WindowGraph, adj: &Arc<SparseMatrix>) -> Result<f64> {
    let mut tape = Tape::new(&model.params);
    let x = tape.input(graph.node_features.clone());
    let z = model.encode(&mut tape, x, adj)?;
    let r = model.decode(&mut tape, z)?;
    let loss = tape.mse(r, x)?;
    Ok(tape.value(loss).data()[0])
}

/// The pooled `1×32` graph embedding of one window.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphEmbedding {
    pub window_index: usize,
    pub label: u8,
    pub vector: Vec<f64>,
}

pub fn embed(model: &EncoderModel, graph: &WindowGraph) -> Result<GraphEmbedding> {
    let adj = graph.propagation();
    let mut tape = Tape::new(&model.params);
    let x = tape.input(graph.node_features.clone());
    let z = model.encode(&mut tape, x, &adj)?;
    let pooled = tape.mean_rows(z);
    Ok(GraphEmbedding {
        window_index: graph.window_index,
        label: graph.label,
        vector: tape.value(pooled).data().to_vec(),
    })
}

pub fn embed_all(model: &EncoderModel, graphs: &[WindowGraph]) -> Result<Vec<GraphEmbedding>> {
    graphs.iter().map(|g| embed(model, g)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderConfig {
    pub epochs: usize,
    pub lr: f64,
    /// Epochs without validation improvement before stopping; 0 disables.
    pub patience: usize,
    pub seed: u64,
    pub val_fraction: f64,
    /// Global-norm gradient clip; 0 disables.
    pub grad_clip: f64,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            lr: 1e-3,
            patience: 20,
            seed: 0,
            val_fraction: 0.1,
            grad_clip: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderEpoch {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderLog {
    pub config: EncoderConfig,
    pub epochs: Vec<EncoderEpoch>,
    pub best_epoch: usize,
    pub train_graphs: usize,
    pub val_graphs: usize,
}

impl EncoderLog {
    pub fn best(&self) -> &EncoderEpoch {
        &self.epochs[self.best_epoch]
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let c = &self.config;
        let io = |e| Error::io("<encoder log>", e);
        writeln!(
            w,
            "# epochs={} lr={} patience={} seed={} val_fraction={} grad_clip={} train_graphs={} val_graphs={} best_epoch={}",
            c.epochs, c.lr, c.patience, c.seed, c.val_fraction, c.grad_clip, self.train_graphs, self.val_graphs, self.best_epoch
        )
        .map_err(io)?;
        writeln!(w, "epoch,train_loss,val_loss").map_err(io)?;
        for e in &self.epochs {
            writeln!(w, "{},{},{}", e.epoch, e.train_loss, e.val_loss).map_err(io)?;
        }
        Ok(())
    }
}

/// Trains on normal-only graphs and returns the model from the epoch with
/// the lowest validation reconstruction loss.
pub fn train_encoder(graphs: &[WindowGraph], cfg: &EncoderConfig) -> Result<(EncoderModel, EncoderLog)> {
    if graphs.is_empty() {
        return Err(Error::invalid("no graphs to train the encoder on"));
    }
    if let Some(g) = graphs.iter().find(|g| g.label != 0) {
        return Err(Error::invalid(format!(
            "encoder training accepts normal graphs only; window {} is labeled anomalous",
            g.window_index
        )));
    }
    if cfg.epochs == 0 {
        return Err(Error::Config("encoder epochs must be at least 1".into()));
    }

    let adjs: Vec<Arc<SparseMatrix>> = graphs.iter().map(WindowGraph::propagation).collect();
    let n = graphs.len();
    let n_val = if n < 2 {
        0
    } else {
        ((n as f64 * cfg.val_fraction).ceil() as usize).clamp(1, n - 1)
    };
    let train_idx: Vec<usize> = (0..n - n_val).collect();
    // a single graph validates on itself
    let val_idx: Vec<usize> = if n_val == 0 { train_idx.clone() } else { (n - n_val..n).collect() };

    let mut model = EncoderModel::new(cfg.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5EED_E4C0);
    let adam = AdamConfig::with_lr(cfg.lr);
    let mut best: Option<(f64, ParamSet, usize)> = None;
    let mut epochs = Vec::new();
    let mut order = train_idx.clone();

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for &i in &order {
            let grads = {
                let mut tape = Tape::new(&model.params);
                let x = tape.input(graphs[i].node_features.clone());
                let z = model.encode(&mut tape, x, &adjs[i])?;
                let r = model.decode(&mut tape, z)?;
                let loss = tape.mse(r, x)?;
                let l = tape.value(loss).data()[0];
                if !l.is_finite() {
                    return Err(Error::Divergence(format!(
                        "encoder loss is {l} at epoch {epoch}"
                    )));
                }
                total += l;
                tape.backward(loss)?
            };
            model.params.accumulate(&grads);
            if cfg.grad_clip > 0.0 {
                model.params.clip_grad_norm(cfg.grad_clip);
            }
            adam_step(&mut model.params, &adam)?;
        }
        let train_loss = total / order.len() as f64;
        let mut val_total = 0.0;
        for &i in &val_idx {
            val_total += reconstruction_loss_with(&model, &graphs[i], &adjs[i])?;
        }
        let val_loss = val_total / val_idx.len() as f64;
        if !val_loss.is_finite() {
            return Err(Error::Divergence(format!("encoder validation loss is {val_loss}")));
        }
        log::debug!("encoder epoch {epoch}: train {train_loss:.6} val {val_loss:.6}");
        epochs.push(EncoderEpoch {
            epoch,
            train_loss,
            val_loss,
        });

        let improved = best.as_ref().is_none_or(|(b, _, _)| val_loss < *b);
        if improved {
            best = Some((val_loss, model.params.clone(), epoch));
        } else if cfg.patience > 0 && epoch - best.as_ref().map_or(0, |b| b.2) >= cfg.patience {
            break;
        }
    }

    let (_, params, best_epoch) = best.expect("at least one epoch ran");
    model.params = params;
    for p in model.params.iter_mut() {
        p.grad = None;
    }
    Ok((
        model,
        EncoderLog {
            config: cfg.clone(),
            epochs,
            best_epoch,
            train_graphs: train_idx.len(),
            val_graphs: n_val,
        },
    ))
}

// ---------------------------------------------------------------------------
// Embedding CSV: window_index, label, e0..e31

pub fn write_embeddings_to<W: Write>(embeddings: &[GraphEmbedding], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["window_index".to_string(), "label".to_string()];
    header.extend((0..EMBEDDING_DIM).map(|i| format!("e{i}")));
    w.write_record(&header)?;
    for e in embeddings {
        let mut row = Vec::with_capacity(EMBEDDING_DIM + 2);
        row.push(e.window_index.to_string());
        row.push(e.label.to_string());
        row.extend(e.vector.iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io("<embeddings>", e))?;
    Ok(())
}

pub fn write_embeddings(embeddings: &[GraphEmbedding], path: &Path) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_embeddings_to(embeddings, std::io::BufWriter::new(f))
}

pub fn read_embeddings_from<R: Read>(reader: R) -> Result<Vec<GraphEmbedding>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        let bad = |m: &str| Error::Parse {
            line,
            message: m.to_string(),
        };
        if rec.len() != EMBEDDING_DIM + 2 {
            return Err(bad("embedding rows need window_index, label and 32 values"));
        }
        let window_index = rec[0].parse().map_err(|_| bad("bad window_index"))?;
        let label: u8 = rec[1].parse().map_err(|_| bad("bad label"))?;
        let vector = rec
            .iter()
            .skip(2)
            .map(|v| v.parse::<f64>().map_err(|_| bad("bad embedding value")))
            .collect::<Result<Vec<_>>>()?;
        out.push(GraphEmbedding {
            window_index,
            label,
            vector,
        });
    }
    Ok(out)
}

pub fn read_embeddings(path: &Path) -> Result<Vec<GraphEmbedding>> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_embeddings_from(std::io::BufReader::new(f))
}
