//! The work-dir pipeline driven from a config text, as the `guard-can`
//! binary does: stages write manifests and a second run skips them.
//!
//! `cargo run --release --example staged_run -- [work_dir]`

use guard_can::cli::stages::{self, Layout};
use guard_can::cli::PipelineConfig;
use guard_can::ingest;
use guard_can::synth;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let work = std::env::args().nth(1).unwrap_or_else(|| "staged_work".into());
    std::fs::create_dir_all(&work)?;
    let input = format!("{work}/corpus.csv");
    ingest::write_log(&synth::desk_mixed(54.0, 5)?, input.as_ref())?;

    let cfg = PipelineConfig::from_text(&format!(
        "# small settings so the example finishes quickly\n\
         input = {input}\n\
         work_dir = {work}\n\
         window_size = 50\n\
         sequence_length = 20\n\
         encoder.epochs = 5\n\
         detector.epochs = 10\n"
    ))?;
    print!("{}", cfg.to_text().lines().take(8).map(|l| format!("{l}\n")).collect::<String>());

    let summary = stages::cmd_run(&cfg)?;
    println!("\n{summary}");
    let layout = Layout::new(&work);
    println!("per-attack AUC:\n{}", std::fs::read_to_string(layout.per_attack())?);

    // everything is current now, so this returns without retraining
    let t = std::time::Instant::now();
    stages::cmd_run(&cfg)?;
    println!("second run: {:.2?}", t.elapsed());
    Ok(())
}
