//! Train the graph encoder on normal windows, then compare reconstruction
//! error on held-out normal windows against fuzzed ones and embed a few
//! windows.
//!
//! `cargo run --release --example train_encoder -- [epochs]`

use guard_can::encoder::{self, reconstruction_loss, EncoderConfig};
use guard_can::graph::{build_graphs, ByteMode};
use guard_can::ingest::{make_windows, normalize_all, Label};
use guard_can::synth::{self, AttackSpec};

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn main() -> guard_can::Result<()> {
    let epochs = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(20);
    let w = 50;
    let train = build_graphs(&make_windows(&normalize_all(&synth::desk_normal(30.0, 1)?), w)?, ByteMode::Binarized)?;
    let cfg = EncoderConfig { epochs, ..EncoderConfig::default() };
    let (model, log) = encoder::train_encoder(&train, &cfg)?;
    println!("{} training graphs, {} held out for validation", log.train_graphs, log.val_graphs);
    for e in log.epochs.iter().step_by((epochs / 5).max(1)) {
        println!("  epoch {:>3}  train {:.5}  val {:.5}", e.epoch, e.train_loss, e.val_loss);
    }
    println!("best epoch {} (val {:.5})", log.best_epoch, log.best().val_loss);

    let held_out = build_graphs(&make_windows(&normalize_all(&synth::desk_normal(5.0, 2)?), w)?, ByteMode::Binarized)?;
    let base = synth::desk_normal(5.0, 3)?;
    let fuzzed = synth::inject(&base, &AttackSpec::fuzzing(0.5, 4.0, 1000.0), 3)?;
    let fuzz_windows: Vec<_> = make_windows(&normalize_all(&fuzzed), w)?
        .into_iter()
        .filter(|x| x.attack_kinds() == [Label::Fuzzing])
        .collect();
    let fuzz = build_graphs(&fuzz_windows, ByteMode::Binarized)?;

    let loss = |gs: &[guard_can::graph::WindowGraph]| -> guard_can::Result<Vec<f64>> {
        gs.iter().map(|g| reconstruction_loss(&model, g)).collect()
    };
    println!("\nreconstruction MSE  normal {:.5} ({} graphs)  fuzzing {:.5} ({} graphs)",
        mean(&loss(&held_out)?), held_out.len(), mean(&loss(&fuzz)?), fuzz.len());

    for e in encoder::embed_all(&model, &held_out[..3])? {
        println!("embedding {} -> [{:.3}, {:.3}, {:.3}, ...] (32 values)", e.window_index, e.vector[0], e.vector[1], e.vector[2]);
    }
    Ok(())
}
