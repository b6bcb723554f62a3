//! Parse a CAN log, normalize payloads, cut windows and split them
//! chronologically.

use guard_can::ingest::{self, make_windows, normalize_all, split_dataset, ColumnMapping, SplitRatios};

const LOG: &str = "\
timestamp,arbitration_id,dlc,data,label
0.000100,0x0A0,8,00 11 22 33 44 55 66 77,Normal
0.000350,0x1F1,4,FF 00 FF 00,Normal
0.000600,0x000,8,00 00 00 00 00 00 00 00,Flooding
0.000610,0x000,8,00 00 00 00 00 00 00 00,Flooding
0.001100,0x0A0,8,01 11 22 33 44 55 66 77,Normal
0.001400,0x3C2,2,7F,Normal
0.002100,0x0A0,8,02 11 22 33 44 55 66 77,Normal
0.002300,0x1F1,4,FF 00 FF 01,Normal
0.003100,0x0A0,8,03 11 22 33 44 55 66 77,Normal
0.003400,0x3C2,2,80 01,Normal
";

fn main() -> guard_can::Result<()> {
    // short payloads are zero-padded to the DLC
    let frames = ingest::parse_reader(LOG.as_bytes(), &ColumnMapping::default())?;
    for f in &frames[..3] {
        println!("{:.6} {:#05x} dlc={} {:02X?} {}", f.timestamp, f.arbitration_id, f.dlc, f.payload, f.label);
    }

    let normalized = normalize_all(&frames);
    let n = &normalized[1];
    println!("\nframe 1: dlc_norm={} byte_norm={:.3?}", n.dlc_norm, n.byte_norm);
    println!("         byte_bin={:?}", n.byte_bin);

    let windows = make_windows(&normalized, 3)?;
    println!("\n{} frames -> {} windows of 3 (trailing frame dropped)", frames.len(), windows.len());
    for w in &windows {
        println!("  window {} label {} kinds {:?}", w.index, w.label, w.attack_kinds());
    }

    let split = split_dataset(windows, SplitRatios { train: 0.34, val: 0.33, test: 0.33 })?;
    println!("\nsplit: train {} val {} test {}", split.train.len(), split.val.len(), split.test.len());

    let mut dump = Vec::new();
    ingest::write_windows_to(&split.train, &mut dump)?;
    println!("\nwindows/train.csv:\n{}", String::from_utf8_lossy(&dump).lines().take(3).collect::<Vec<_>>().join("\n"));
    Ok(())
}
