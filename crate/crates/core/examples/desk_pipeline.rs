//! End-to-end run on the synthetic desk corpus: train the encoder on a
//! normal log, embed a mixed log, train the GRU detector and report.
//!
//! `cargo run --release --example desk_pipeline -- [encoder_epochs] [detector_epochs]`

use std::time::Instant;

use guard_can::detector::{self, DetectorConfig, DetectorModel, View};
use guard_can::encoder::{self, EncoderConfig};
use guard_can::graph::{build_graphs, ByteMode};
use guard_can::ingest::{make_windows, normalize_all, split_dataset, SplitRatios};
use guard_can::synth;

fn main() -> guard_can::Result<()> {
    let args: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let enc_epochs = args.first().copied().unwrap_or(100);
    let det_epochs = args.get(1).copied().unwrap_or(100);
    let (w, l) = (50, 50);
    let t0 = Instant::now();

    let normal = synth::desk_normal(60.0, 1)?;
    let mixed = synth::desk_mixed(108.0, 2)?;
    print!("{}", synth::format_class_counts(&mixed));

    let enc_windows = make_windows(&normalize_all(&normal), w)?;
    let (encoder, enc_log) = encoder::train_encoder(
        &build_graphs(&enc_windows, ByteMode::Binarized)?,
        &EncoderConfig { epochs: enc_epochs, ..EncoderConfig::default() },
    )?;
    println!(
        "encoder: {} epochs, best val MSE {:.6} ({:.1?})",
        enc_log.epochs.len(),
        enc_log.best().val_loss,
        t0.elapsed()
    );

    let windows = make_windows(&normalize_all(&mixed), w)?;
    let split = split_dataset(windows, SplitRatios::default())?;
    let embed = |ws: &[guard_can::ingest::Window]| {
        encoder::embed_all(&encoder, &build_graphs(ws, ByteMode::Binarized)?)
    };
    let (tr, va, te) = (embed(&split.train)?, embed(&split.val)?, embed(&split.test)?);
    let cfg = DetectorConfig { epochs: det_epochs, ..DetectorConfig::default() };
    let (model, log) = detector::train_detector(
        DetectorModel::new(cfg.seed),
        &detector::make_sequences(&tr, l)?,
        &detector::make_sequences(&va, l)?,
        &cfg,
    )?;
    println!(
        "detector: {} epochs, best epoch {} val F1 {:.4} ({:.1?})",
        log.epochs.len(),
        log.best_epoch,
        log.best().val_f1,
        t0.elapsed()
    );

    let report = detector::detect(&model, &te, l, 0.5)?;
    print!("{}", report.summary_text(w));
    let masks: Vec<u8> = split.test.iter().map(|w| detector::kind_mask(&w.attack_kinds())).collect();
    for row in detector::per_attack_auc(&report, &masks)? {
        if row.view != View::Mean {
            println!(
                "{:<9} {:<9} pos {:>4} neg {:>4} AUC {}",
                row.view.name(),
                row.kind.name(),
                row.positives,
                row.negatives,
                row.auc.map_or("n/a".into(), |a| format!("{a:.4}"))
            );
        }
    }
    println!("total {:.1?}", t0.elapsed());
    Ok(())
}
