//! Synthetic CAN traffic: the bundled desk corpus and a hand-written
//! profile with attacks given in the same text syntax as the config file.
//!
//! `cargo run --release --example synth_corpus -- [out_dir]`

use std::path::PathBuf;

use guard_can::ingest;
use guard_can::synth::{self, AttackSpec, EcuSpec, TrafficProfile};

fn main() -> guard_can::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "synth_out".into()));
    std::fs::create_dir_all(&out).map_err(|e| guard_can::Error::Config(e.to_string()))?;

    let mixed = synth::desk_mixed(108.0, 0)?;
    println!("desk corpus (108 s, seed 0):");
    print!("{}", synth::format_class_counts(&mixed));
    ingest::write_log(&mixed, &out.join("desk_mixed.csv"))?;

    // two ECUs: a 10 ms counter frame and a 50 ms random-walk sensor
    let ecus: Vec<EcuSpec> = ["0x0A0 10 n:0:1 c:0x40", "0x3C2 50 w:120:100:140:2 w:60:0:255:5 c:0"]
        .iter()
        .map(|s| s.parse())
        .collect::<guard_can::Result<_>>()?;
    let profile = TrafficProfile {
        ecu_specs: ecus,
        duration: 10.0,
        jitter: 0.02,
        seed: 1,
    };
    let attacks: Vec<AttackSpec> = [
        "flooding 2.0 0.5 rate=800",
        "replay 5.0 1.0 from=0.5 to=1.5",
        "spoofing 8.0 0.5 rate=200 id=0x3C2 mutate=0:200-255",
    ]
    .iter()
    .map(|s| s.parse())
    .collect::<guard_can::Result<_>>()?;

    let frames = synth::inject_all(synth::generate_normal(&profile)?, &attacks, 1)?;
    println!("\ncustom profile with {} attacks:", attacks.len());
    for a in &attacks {
        println!("  {a}");
    }
    print!("{}", synth::format_class_counts(&frames));
    ingest::write_log(&frames, &out.join("custom.csv"))?;
    println!("\nwrote {}", out.display());
    Ok(())
}
