//! Arbitration-ID entropy as the window grows, on normal and attacked
//! traffic.
//!
//! `cargo run --release --example entropy_sweep`

use guard_can::analysis::{entropy_sweep, size_range, write_entropy_csv};
use guard_can::ingest::normalize_all;
use guard_can::synth;

fn main() -> guard_can::Result<()> {
    let sizes = size_range(10, 400, 10);
    for (name, frames) in [("normal", synth::desk_normal(60.0, 0)?), ("mixed", synth::desk_mixed(108.0, 0)?)] {
        let stats = entropy_sweep(&normalize_all(&frames), &sizes)?;
        println!("{name}: {} frames", frames.len());
        println!("{:>6} {:>8} {:>8} {:>8}", "size", "mean", "std", "growth");
        for s in stats.iter().filter(|s| [10, 50, 100, 150, 200, 400].contains(&s.window_size)) {
            let g = s.growth_rate.map_or("-".into(), |g| format!("{:.4}", g));
            println!("{:>6} {:>8.4} {:>8.4} {:>8}", s.window_size, s.mean, s.std, g);
        }
        println!();
        if name == "normal" {
            let mut csv = Vec::new();
            write_entropy_csv(&stats[..3], &mut csv)?;
            print!("{}", String::from_utf8_lossy(&csv));
            println!();
        }
    }
    Ok(())
}
