use guard_can::ingest::Label;
use guard_can::synth::{self, AttackSpec};
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn chi_square_p(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    let expected = n as f64 / counts.len() as f64;
    let stat: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    1.0 - ChiSquared::new((counts.len() - 1) as f64).unwrap().cdf(stat)
}

#[test]
fn fuzzing_is_uniform() {
    let base = synth::desk_normal(12.0, 0).unwrap();
    let out = synth::inject(&base, &AttackSpec::fuzzing(1.0, 10.0, 2000.0), 42).unwrap();
    let fuzz: Vec<_> = out.iter().filter(|f| f.label == Label::Fuzzing).collect();
    assert_eq!(fuzz.len(), 20_000);

    let mut ids = [0usize; 64];
    let mut dlcs = [0usize; 9];
    let mut bytes = [0usize; 16];
    for f in &fuzz {
        assert!(f.arbitration_id <= 0x7FF);
        ids[(f.arbitration_id / 32) as usize] += 1;
        dlcs[f.dlc as usize] += 1;
        for &b in f.data() {
            bytes[(b / 16) as usize] += 1;
        }
        assert!(f.payload[f.dlc as usize..].iter().all(|&b| b == 0));
    }
    for (name, counts) in [("id", &ids[..]), ("dlc", &dlcs[..]), ("byte", &bytes[..])] {
        let p = chi_square_p(counts);
        assert!(p > 1e-3, "{name} histogram p = {p}");
    }

    // arrival times are spread over the whole interval
    let mut halves = [0usize; 2];
    for f in &fuzz {
        halves[usize::from(f.timestamp >= 6.0)] += 1;
    }
    assert!(chi_square_p(&halves) > 1e-3);
}

#[test]
fn desk_mixed_class_shares() {
    let frames = synth::desk_mixed(108.0, 0).unwrap();
    let counts = synth::class_counts(&frames);
    let total = frames.len() as f64;
    let share = |l: Label| counts.iter().find(|(k, _)| *k == l).map_or(0, |c| c.1) as f64 / total;
    assert_eq!(frames.len(), 120_000);
    for (label, expected) in [
        (Label::Normal, 0.90),
        (Label::Flooding, 0.05),
        (Label::Fuzzing, 0.02),
        (Label::Replay, 0.02),
        (Label::Spoofing, 0.01),
    ] {
        assert!((share(label) - expected).abs() < 0.005, "{label}: {}", share(label));
    }
    assert!(frames.windows(2).all(|p| p[0].timestamp <= p[1].timestamp));
}

#[test]
fn desk_normal_rate() {
    let frames = synth::desk_normal(60.0, 0).unwrap();
    assert_eq!(frames.len(), 60_000);
    assert!(frames.iter().all(|f| f.label == Label::Normal));
}

#[test]
fn spoofed_frames_reuse_the_target_id() {
    let frames = synth::desk_mixed(30.0, 1).unwrap();
    let spoofed: Vec<_> = frames.iter().filter(|f| f.label == Label::Spoofing).collect();
    assert!(!spoofed.is_empty());
    assert!(spoofed.iter().all(|f| f.arbitration_id == synth::DESK_SPOOF_TARGET));
}
