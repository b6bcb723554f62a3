//! Pipeline stages over a work directory.
//!
//! ```text
//! work_dir/
//!   windows/{train,val,test,encoder}.csv
//!   encoder.ckpt  encoder_log.csv
//!   embeddings/{train,val,test}.csv
//!   detector.ckpt detector_log.csv
//!   report/{sequence,mean,max}.csv
//!   summary.txt summary.csv per_attack.csv
//!   entropy.csv
//!   manifests/<stage>.txt
//! ```

use std::fmt;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::config::{PipelineConfig, Preset};
use crate::analysis::{entropy_sweep, write_entropy_csv};
use crate::detector::{
    self, kind_mask, per_attack_auc, write_per_attack_csv, DetectionReport, DetectorModel, View, ViewReport,
};
use crate::encoder::{self, EncoderModel};
use crate::error::{Error, Result};
use crate::graph::build_graphs;
use crate::ingest::{self, make_windows, normalize_all, split_dataset, Window};
use crate::synth::{self, TrafficProfile};

pub const SPLITS: [&str; 3] = ["train", "val", "test"];

/// Where a pipeline run keeps its artifacts. Detector-side artifacts live
/// under `det`, which equals `root` except inside a sweep.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub root: PathBuf,
    pub det: PathBuf,
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        let root = root.into();
        Self { det: root.clone(), root }
    }

    pub fn with_detector_dir(mut self, det: impl Into<PathBuf>) -> Self {
        self.det = det.into();
        self
    }

    pub fn windows(&self, split: &str) -> PathBuf {
        self.root.join("windows").join(format!("{split}.csv"))
    }
    pub fn encoder_windows(&self) -> PathBuf {
        self.windows("encoder")
    }
    pub fn encoder_ckpt(&self) -> PathBuf {
        self.root.join("encoder.ckpt")
    }
    pub fn encoder_log(&self) -> PathBuf {
        self.root.join("encoder_log.csv")
    }
    pub fn embeddings(&self, split: &str) -> PathBuf {
        self.root.join("embeddings").join(format!("{split}.csv"))
    }
    pub fn detector_ckpt(&self) -> PathBuf {
        self.det.join("detector.ckpt")
    }
    pub fn detector_log(&self) -> PathBuf {
        self.det.join("detector_log.csv")
    }
    pub fn report(&self, view: View) -> PathBuf {
        self.det.join("report").join(format!("{}.csv", view.name()))
    }
    pub fn summary_txt(&self) -> PathBuf {
        self.det.join("summary.txt")
    }
    pub fn summary_csv(&self) -> PathBuf {
        self.det.join("summary.csv")
    }
    pub fn per_attack(&self) -> PathBuf {
        self.det.join("per_attack.csv")
    }
    pub fn entropy(&self) -> PathBuf {
        self.root.join("entropy.csv")
    }
    fn manifest(&self, stage: &str, detector_side: bool) -> PathBuf {
        let base = if detector_side { &self.det } else { &self.root };
        base.join("manifests").join(format!("{stage}.txt"))
    }
}

/// A stage failure tagged with the stage that raised it.
#[derive(Debug)]
pub struct StageError {
    pub stage: &'static str,
    pub error: Error,
}

impl fmt::Display for StageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "stage `{}` failed: {}", self.stage, self.error)
    }
}

impl std::error::Error for StageError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

pub type StageResult<T> = std::result::Result<T, StageError>;

fn tag<T>(stage: &'static str, r: Result<T>) -> StageResult<T> {
    r.map_err(|error| StageError { stage, error })
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut h = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = f.read(&mut buf).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
    }
    Ok(h.finalize().iter().map(|b| format!("{b:02x}")).collect())
}

fn ensure_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(dir) => fs::create_dir_all(dir).map_err(|e| Error::io(dir, e)),
        None => Ok(()),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    ensure_parent(path)?;
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::io(path, e))
}

fn flush(mut w: BufWriter<File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

/// Config values and input hashes a stage depends on, plus its outputs.
struct Manifest {
    root: PathBuf,
    path: PathBuf,
    inputs: Vec<(String, String)>,
    outputs: Vec<PathBuf>,
}

impl Manifest {
    fn new(layout: &Layout, stage: &str, detector_side: bool, cfg: &PipelineConfig, keys: &[&str]) -> Self {
        Self {
            root: layout.root.clone(),
            path: layout.manifest(stage, detector_side),
            inputs: keys.iter().map(|k| (format!("config {k}"), cfg.value(k))).collect(),
            outputs: Vec::new(),
        }
    }

    fn input(mut self, path: &Path) -> Result<Self> {
        // artifacts are named relative to the work dir so a copied run stays fresh
        let name = path.strip_prefix(&self.root).unwrap_or(path).display().to_string();
        self.inputs.push((format!("input {name}"), sha256_file(path)?));
        Ok(self)
    }

    fn outputs(mut self, paths: &[PathBuf]) -> Self {
        self.outputs.extend_from_slice(paths);
        self
    }

    fn render(&self, with_outputs: bool) -> Result<String> {
        let mut s = String::new();
        for (k, v) in &self.inputs {
            s.push_str(&format!("{k} = {v}\n"));
        }
        if with_outputs {
            for p in &self.outputs {
                let name = p.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned());
                s.push_str(&format!("output {name} = {}\n", sha256_file(p)?));
            }
        }
        Ok(s)
    }

    /// True when the recorded inputs match and every output still hashes
    /// to its recorded value.
    fn is_fresh(&self) -> bool {
        let Ok(recorded) = fs::read_to_string(&self.path) else {
            return false;
        };
        if !self.outputs.iter().all(|p| p.exists()) {
            return false;
        }
        self.render(true).is_ok_and(|now| now == recorded)
    }

    fn record(&self) -> Result<()> {
        let text = self.render(true)?;
        let mut w = create(&self.path)?;
        w.write_all(text.as_bytes()).map_err(|e| Error::io(&self.path, e))?;
        flush(w, &self.path)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Always execute.
    Force,
    /// Skip when the stage manifest shows the outputs are current.
    Resume,
}

fn run_stage(
    name: &'static str,
    mode: Mode,
    manifest: impl FnOnce() -> Result<Manifest>,
    body: impl FnOnce() -> Result<()>,
) -> StageResult<bool> {
    let m = tag(name, manifest())?;
    if mode == Mode::Resume && m.is_fresh() {
        log::info!("{name}: up to date");
        return Ok(false);
    }
    log::info!("{name}: running");
    tag(name, body())?;
    tag(name, m.record())?;
    Ok(true)
}

fn required<'a>(p: &'a Option<PathBuf>, key: &str) -> Result<&'a PathBuf> {
    p.as_ref().ok_or_else(|| Error::Config(format!("`{key}` is not set")))
}

// ---------------------------------------------------------------------------

/// Builds the configured traffic, injects attacks and writes the log.
pub fn cmd_synth(cfg: &PipelineConfig) -> StageResult<(PathBuf, Vec<ingest::CanFrame>)> {
    tag("synth", synth_frames(cfg)).and_then(|frames| {
        let path = cfg.synth.output.clone().unwrap_or_else(|| cfg.work_dir.join("synth.csv"));
        tag("synth", write_log(&frames, &path))?;
        Ok((path, frames))
    })
}

fn write_log(frames: &[ingest::CanFrame], path: &Path) -> Result<()> {
    let w = create(path)?;
    ingest::write_log_to(frames, w)
}

pub fn synth_frames(cfg: &PipelineConfig) -> Result<Vec<ingest::CanFrame>> {
    let s = &cfg.synth;
    let ecus = if !s.ecus.is_empty() {
        s.ecus.clone()
    } else if s.preset.is_some() {
        synth::desk_ecus()
    } else {
        return Err(Error::Config("synth needs `synth.ecu` lines or a `synth.preset`".into()));
    };
    let duration = match (s.duration, s.preset) {
        (Some(d), _) => d,
        (None, Some(Preset::DeskNormal)) => 60.0,
        (None, Some(Preset::DeskMixed)) => 108.0,
        (None, None) => return Err(Error::Config("`synth.duration` is not set".into())),
    };
    let mut attacks = Vec::new();
    if s.preset == Some(Preset::DeskMixed) {
        attacks.extend(synth::desk_attack_schedule(duration, synth::DESK_CYCLE));
    }
    attacks.extend(s.attacks.iter().cloned());
    let profile = TrafficProfile {
        ecu_specs: ecus,
        duration,
        jitter: s.jitter,
        seed: s.seed,
    };
    let frames = synth::generate_normal(&profile)?;
    synth::inject_all(frames, &attacks, s.seed ^ synth::ATTACK_SEED_SALT)
}

pub fn cmd_preprocess(cfg: &PipelineConfig, layout: &Layout, mode: Mode) -> StageResult<bool> {
    let outputs: Vec<PathBuf> = SPLITS
        .iter()
        .map(|s| layout.windows(s))
        .chain(cfg.normal_input.is_some().then(|| layout.encoder_windows()))
        .collect();
    run_stage(
        "preprocess",
        mode,
        || {
            let mut m = Manifest::new(layout, "preprocess", false, cfg, &["format", "window_size", "split"]);
            m = m.input(required(&cfg.input, "input")?)?;
            if let Some(p) = &cfg.normal_input {
                m = m.input(p)?;
            }
            Ok(m.outputs(&outputs))
        },
        || {
            let input = required(&cfg.input, "input")?;
            let windows = load_windows(input, cfg)?;
            let n = windows.len();
            let split = split_dataset(windows, cfg.split)?;
            for (name, part) in SPLITS.iter().zip([&split.train, &split.val, &split.test]) {
                let path = layout.windows(name);
                let w = create(&path)?;
                ingest::write_windows_to(part, w)?;
            }
            log::info!(
                "preprocess: {n} windows -> train {}, val {}, test {}",
                split.train.len(),
                split.val.len(),
                split.test.len()
            );
            let enc = layout.encoder_windows();
            match &cfg.normal_input {
                Some(p) => {
                    let windows = load_windows(p, cfg)?;
                    if let Some(w) = windows.iter().find(|w| w.label != 0) {
                        return Err(Error::invalid(format!(
                            "normal_input window {} contains attack frames",
                            w.index
                        )));
                    }
                    ingest::write_windows_to(&windows, create(&enc)?)?;
                }
                None if enc.exists() => fs::remove_file(&enc).map_err(|e| Error::io(&enc, e))?,
                None => {}
            }
            Ok(())
        },
    )
}

fn load_windows(path: &Path, cfg: &PipelineConfig) -> Result<Vec<Window>> {
    let frames = ingest::parse_log(path, &cfg.mapping())?;
    if frames.is_empty() {
        return Err(Error::invalid(format!("{} holds no frames", path.display())));
    }
    make_windows(&normalize_all(&frames), cfg.window_size)
}

fn encoder_source(layout: &Layout) -> PathBuf {
    let enc = layout.encoder_windows();
    if enc.exists() {
        enc
    } else {
        layout.windows("train")
    }
}

pub fn cmd_train_encoder(cfg: &PipelineConfig, layout: &Layout, mode: Mode) -> StageResult<bool> {
    let source = encoder_source(layout);
    run_stage(
        "train-encoder",
        mode,
        || {
            Ok(Manifest::new(
                layout,
                "train-encoder",
                false,
                cfg,
                &[
                    "byte_mode",
                    "encoder.epochs",
                    "encoder.lr",
                    "encoder.patience",
                    "encoder.seed",
                    "encoder.val_fraction",
                    "encoder.grad_clip",
                ],
            )
            .input(&source)?
            .outputs(&[layout.encoder_ckpt(), layout.encoder_log()]))
        },
        || {
            let windows: Vec<Window> = ingest::read_windows(&source)?
                .into_iter()
                .filter(|w| w.label == 0)
                .collect();
            if windows.is_empty() {
                return Err(Error::invalid("no normal windows available for encoder training"));
            }
            let graphs = build_graphs(&windows, cfg.byte_mode)?;
            let (model, log) = encoder::train_encoder(&graphs, &cfg.encoder)?;
            log::info!(
                "train-encoder: {} graphs, {} epochs, best val MSE {:.6} at epoch {}",
                graphs.len(),
                log.epochs.len(),
                log.best().val_loss,
                log.best_epoch
            );
            ensure_parent(&layout.encoder_ckpt())?;
            model.save(&layout.encoder_ckpt())?;
            let p = layout.encoder_log();
            let mut w = create(&p)?;
            log.write_csv(&mut w)?;
            flush(w, &p)
        },
    )
}

pub fn cmd_embed(cfg: &PipelineConfig, layout: &Layout, mode: Mode) -> StageResult<bool> {
    let outputs: Vec<PathBuf> = SPLITS.iter().map(|s| layout.embeddings(s)).collect();
    run_stage(
        "embed",
        mode,
        || {
            let mut m = Manifest::new(layout, "embed", false, cfg, &["byte_mode"]).input(&layout.encoder_ckpt())?;
            for s in SPLITS {
                m = m.input(&layout.windows(s))?;
            }
            Ok(m.outputs(&outputs))
        },
        || {
            let model = EncoderModel::load(&layout.encoder_ckpt())?;
            for s in SPLITS {
                let windows = ingest::read_windows(&layout.windows(s))?;
                let emb = encoder::embed_all(&model, &build_graphs(&windows, cfg.byte_mode)?)?;
                let p = layout.embeddings(s);
                encoder::write_embeddings_to(&emb, create(&p)?)?;
            }
            Ok(())
        },
    )
}

pub fn cmd_train_detector(cfg: &PipelineConfig, layout: &Layout, mode: Mode) -> StageResult<bool> {
    run_stage(
        "train-detector",
        mode,
        || {
            Ok(Manifest::new(
                layout,
                "train-detector",
                true,
                cfg,
                &[
                    "sequence_length",
                    "threshold",
                    "detector.epochs",
                    "detector.lr",
                    "detector.batch",
                    "detector.patience",
                    "detector.seed",
                    "detector.grad_clip",
                ],
            )
            .input(&layout.embeddings("train"))?
            .input(&layout.embeddings("val"))?
            .outputs(&[layout.detector_ckpt(), layout.detector_log()]))
        },
        || {
            let l = cfg.sequence_length;
            let train = detector::make_sequences(&encoder::read_embeddings(&layout.embeddings("train"))?, l)?;
            let val_emb = encoder::read_embeddings(&layout.embeddings("val"))?;
            let val = if val_emb.len() >= l {
                detector::make_sequences(&val_emb, l)?
            } else {
                log::warn!(
                    "train-detector: validation split has {} windows (< {l}); selecting on the training set",
                    val_emb.len()
                );
                Vec::new()
            };
            let (model, log) =
                detector::train_detector(DetectorModel::new(cfg.detector.seed), &train, &val, &cfg.detector)?;
            log::info!(
                "train-detector: {} sequences, {} epochs, best val F1 {:.4} at epoch {}",
                train.len(),
                log.epochs.len(),
                log.best().val_f1,
                log.best_epoch
            );
            ensure_parent(&layout.detector_ckpt())?;
            model.save(&layout.detector_ckpt())?;
            let p = layout.detector_log();
            let mut w = create(&p)?;
            log.write_csv(&mut w)?;
            flush(w, &p)
        },
    )
}

pub fn cmd_detect(cfg: &PipelineConfig, layout: &Layout, mode: Mode) -> StageResult<bool> {
    let outputs: Vec<PathBuf> = View::ALL.iter().map(|&v| layout.report(v)).collect();
    run_stage(
        "detect",
        mode,
        || {
            Ok(
                Manifest::new(layout, "detect", true, cfg, &["sequence_length", "threshold"])
                    .input(&layout.detector_ckpt())?
                    .input(&layout.embeddings("test"))?
                    .outputs(&outputs),
            )
        },
        || {
            let model = DetectorModel::load(&layout.detector_ckpt())?;
            let emb = encoder::read_embeddings(&layout.embeddings("test"))?;
            let report = detector::detect(&model, &emb, cfg.sequence_length, cfg.threshold)?;
            for v in View::ALL {
                let p = layout.report(v);
                report.view(v).write_csv(create(&p)?)?;
            }
            Ok(())
        },
    )
}

/// Reads the three report files back into a [`DetectionReport`].
pub fn read_report(cfg: &PipelineConfig, layout: &Layout) -> Result<DetectionReport> {
    let view = |v| ViewReport::read_csv(open(&layout.report(v))?);
    Ok(DetectionReport {
        threshold: cfg.threshold,
        sequence_length: cfg.sequence_length,
        sequences: view(View::Sequence)?,
        window_mean: view(View::Mean)?,
        window_max: view(View::Max)?,
    })
}

pub fn cmd_evaluate(cfg: &PipelineConfig, layout: &Layout, mode: Mode) -> StageResult<String> {
    let mut text = String::new();
    run_stage(
        "evaluate",
        mode,
        || {
            let mut m = Manifest::new(layout, "evaluate", true, cfg, &["window_size", "sequence_length", "threshold"]);
            for v in View::ALL {
                m = m.input(&layout.report(v))?;
            }
            Ok(m.input(&layout.windows("test"))?.outputs(&[
                layout.summary_txt(),
                layout.summary_csv(),
                layout.per_attack(),
            ]))
        },
        || {
            let report = read_report(cfg, layout)?;
            let windows = ingest::read_windows(&layout.windows("test"))?;
            let masks: Vec<u8> = windows.iter().map(|w| kind_mask(&w.attack_kinds())).collect();
            let rows = per_attack_auc(&report, &masks)?;

            let summary = report.summary_text(cfg.window_size);
            let p = layout.summary_txt();
            let mut w = create(&p)?;
            w.write_all(summary.as_bytes()).map_err(|e| Error::io(&p, e))?;
            flush(w, &p)?;
            report.write_summary_csv(cfg.window_size, create(&layout.summary_csv())?)?;
            write_per_attack_csv(&rows, create(&layout.per_attack())?)?;
            Ok(())
        },
    )?;
    text.push_str(&tag("evaluate", fs::read_to_string(layout.summary_txt()).map_err(|e| Error::io(layout.summary_txt(), e)))?);
    Ok(text)
}

pub fn cmd_entropy(cfg: &PipelineConfig) -> StageResult<PathBuf> {
    tag("entropy", (|| {
        let input = required(&cfg.input, "input")?;
        let frames = ingest::parse_log(input, &cfg.mapping())?;
        if frames.is_empty() {
            return Err(Error::invalid(format!("{} holds no frames", input.display())));
        }
        let stats = entropy_sweep(&normalize_all(&frames), &cfg.entropy_sizes)?;
        let path = Layout::new(&cfg.work_dir).entropy();
        let mut w = create(&path)?;
        write_entropy_csv(&stats, &mut w)?;
        flush(w, &path)?;
        Ok(path)
    })())
}

/// The full chain, skipping stages whose manifests are current.
pub fn cmd_run(cfg: &PipelineConfig) -> StageResult<String> {
    let layout = Layout::new(&cfg.work_dir);
    cmd_preprocess(cfg, &layout, Mode::Resume)?;
    cmd_train_encoder(cfg, &layout, Mode::Resume)?;
    cmd_embed(cfg, &layout, Mode::Resume)?;
    cmd_train_detector(cfg, &layout, Mode::Resume)?;
    cmd_detect(cfg, &layout, Mode::Resume)?;
    cmd_evaluate(cfg, &layout, Mode::Resume)
}

/// Runs every (window size, sequence length) pair of the sweep grid.
/// Preprocessing, encoder and embeddings are shared across sequence lengths.
pub fn cmd_sweep(cfg: &PipelineConfig) -> StageResult<PathBuf> {
    let root = cfg.work_dir.join("sweep");
    let mut rows: Vec<csv::StringRecord> = Vec::new();
    let mut header = None;
    let mut text = String::new();
    for &w in &cfg.sweep_window_sizes {
        let cw = tag("sweep", cfg.with("window_size", &w.to_string()))?;
        let base = Layout::new(root.join(format!("w{w}")));
        cmd_preprocess(&cw, &base, Mode::Resume)?;
        cmd_train_encoder(&cw, &base, Mode::Resume)?;
        cmd_embed(&cw, &base, Mode::Resume)?;
        let test_windows = tag("sweep", encoder::read_embeddings(&base.embeddings("test")))?.len();
        for &l in &cfg.sweep_sequence_lengths {
            if l > test_windows {
                log::warn!("sweep: skipping W={w} L={l}; the test split has only {test_windows} windows");
                continue;
            }
            let cwl = tag("sweep", cw.with("sequence_length", &l.to_string()))?;
            let layout = base.clone().with_detector_dir(base.root.join(format!("l{l}")));
            cmd_train_detector(&cwl, &layout, Mode::Resume)?;
            cmd_detect(&cwl, &layout, Mode::Resume)?;
            text.push_str(&cmd_evaluate(&cwl, &layout, Mode::Resume)?);
            let mut rdr = tag("sweep", open(&layout.summary_csv()).map(csv::Reader::from_reader))?;
            header.get_or_insert(tag("sweep", rdr.headers().cloned().map_err(Error::from))?);
            for r in rdr.records() {
                rows.push(tag("sweep", r.map_err(Error::from))?);
            }
        }
    }
    let out = root.join("summary.csv");
    tag("sweep", (|| {
        let mut wtr = csv::Writer::from_writer(create(&out)?);
        if let Some(h) = &header {
            wtr.write_record(h)?;
        }
        for r in &rows {
            wtr.write_record(r)?;
        }
        wtr.flush().map_err(|e| Error::io(&out, e))?;
        let p = root.join("summary.txt");
        let mut w = create(&p)?;
        w.write_all(text.as_bytes()).map_err(|e| Error::io(&p, e))?;
        flush(w, &p)
    })())?;
    Ok(out)
}
