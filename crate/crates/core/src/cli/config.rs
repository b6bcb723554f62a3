//! Flat `key = value` pipeline configuration.

use std::path::{Path, PathBuf};

use crate::detector::DetectorConfig;
use crate::encoder::EncoderConfig;
use crate::error::{Error, Result};
use crate::graph::ByteMode;
use crate::ingest::{ColumnMapping, SplitRatios};
use crate::synth::{AttackSpec, EcuSpec};

/// Every accepted key with its default (empty means unset) and a short
/// description. `synth.ecu` and `synth.attack` may repeat.
pub const KEYS: &[(&str, &str, &str)] = &[
    ("input", "", "CAN log used for preprocess, entropy and run"),
    ("normal_input", "", "optional normal-only log for encoder training"),
    ("work_dir", "work", "artifact directory"),
    ("format", "default", "column mapping: default | positional | car-hacking-2020"),
    ("window_size", "50", "frames per window"),
    ("sequence_length", "50", "windows per sequence"),
    ("byte_mode", "binarized", "node byte features: binarized | normalized"),
    ("split", "0.6,0.2,0.2", "train,val,test ratios"),
    ("threshold", "0.5", "decision threshold"),
    ("encoder.epochs", "100", ""),
    ("encoder.lr", "0.001", ""),
    ("encoder.patience", "20", "0 disables early stopping"),
    ("encoder.seed", "0", ""),
    ("encoder.val_fraction", "0.1", "tail of the normal graphs held out"),
    ("encoder.grad_clip", "5", "global gradient-norm clip; 0 disables"),
    ("detector.epochs", "100", ""),
    ("detector.lr", "0.001", ""),
    ("detector.batch", "32", "sequences per batch"),
    ("detector.patience", "20", "0 disables early stopping"),
    ("detector.seed", "0", ""),
    ("detector.grad_clip", "5", "global gradient-norm clip; 0 disables"),
    ("entropy.sizes", "10:400:10", "START:END:STEP or a comma list"),
    ("sweep.window_sizes", "50,75,100,125,150", ""),
    ("sweep.sequence_lengths", "30,50,100,120,150", ""),
    ("synth.output", "", "defaults to <work_dir>/synth.csv"),
    ("synth.preset", "", "desk-normal | desk-mixed"),
    ("synth.duration", "", "seconds; presets default to 60 (normal) and 108 (mixed)"),
    ("synth.jitter", "0.02", "fraction of each period"),
    ("synth.seed", "0", ""),
    ("synth.ecu", "", "ID PERIOD_MS BYTE_MODEL... [phase=MS] (repeatable)"),
    ("synth.attack", "", "KIND START DURATION [rate=] [id=] [from= to=] [mutate=] (repeatable)"),
];

const REPEATABLE: &[&str] = &["synth.ecu", "synth.attack"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    DeskNormal,
    DeskMixed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub output: Option<PathBuf>,
    pub preset: Option<Preset>,
    pub duration: Option<f64>,
    pub jitter: f64,
    pub seed: u64,
    pub ecus: Vec<EcuSpec>,
    pub attacks: Vec<AttackSpec>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub input: Option<PathBuf>,
    pub normal_input: Option<PathBuf>,
    pub work_dir: PathBuf,
    pub format: String,
    pub window_size: usize,
    pub sequence_length: usize,
    pub byte_mode: ByteMode,
    pub split: SplitRatios,
    pub threshold: f64,
    pub encoder: EncoderConfig,
    pub detector: DetectorConfig,
    pub entropy_sizes: Vec<usize>,
    pub sweep_window_sizes: Vec<usize>,
    pub sweep_sequence_lengths: Vec<usize>,
    pub synth: SynthConfig,
    /// Normalized `key=value` pairs in `KEYS` order, used for stage manifests.
    pub entries: Vec<(String, String)>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self::from_pairs(Vec::new()).expect("defaults are valid")
    }
}

fn cfg_err(key: &str, value: &str, what: &str) -> Error {
    Error::Config(format!("{key} = `{value}`: {what}"))
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.trim().parse().map_err(|_| cfg_err(key, value, "not a valid number"))
}

fn list(key: &str, value: &str) -> Result<Vec<usize>> {
    value
        .split(',')
        .map(|s| num(key, s))
        .collect::<Result<Vec<usize>>>()
}

fn sizes(key: &str, value: &str) -> Result<Vec<usize>> {
    let parts: Vec<&str> = value.split(':').collect();
    if parts.len() == 3 {
        let (a, b, c) = (num(key, parts[0])?, num(key, parts[1])?, num(key, parts[2])?);
        if c == 0 {
            return Err(cfg_err(key, value, "step must be positive"));
        }
        Ok(crate::analysis::size_range(a, b, c))
    } else {
        list(key, value)
    }
}

impl PipelineConfig {
    /// Reads a config file; later `overrides` replace file values.
    pub fn load(path: Option<&Path>, overrides: &[(String, String)]) -> Result<Self> {
        let mut pairs = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                parse_text(&text)?
            }
            None => Vec::new(),
        };
        for (k, v) in overrides {
            if !REPEATABLE.contains(&k.as_str()) {
                pairs.retain(|(pk, _)| pk != k);
            }
            pairs.push((k.clone(), v.clone()));
        }
        Self::from_pairs(pairs)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        Self::from_pairs(parse_text(text)?)
    }

    pub fn from_pairs(pairs: Vec<(String, String)>) -> Result<Self> {
        let mut values: Vec<(String, Vec<String>)> = KEYS
            .iter()
            .map(|(k, d, _)| (k.to_string(), if d.is_empty() { vec![] } else { vec![d.to_string()] }))
            .collect();
        let mut seen = std::collections::HashSet::new();
        for (k, v) in pairs {
            let Some(slot) = values.iter_mut().find(|(key, _)| *key == k) else {
                return Err(Error::Config(format!("unknown config key `{k}`")));
            };
            if REPEATABLE.contains(&k.as_str()) {
                slot.1.push(v);
            } else {
                if !seen.insert(k.clone()) {
                    return Err(Error::Config(format!("config key `{k}` given twice")));
                }
                slot.1 = if v.is_empty() { vec![] } else { vec![v] };
            }
        }
        let get = |k: &str| -> Option<&str> {
            values
                .iter()
                .find(|(key, _)| key == k)
                .and_then(|(_, v)| v.first().map(String::as_str))
        };
        let all = |k: &str| -> Vec<String> {
            values.iter().find(|(key, _)| key == k).map(|(_, v)| v.clone()).unwrap_or_default()
        };
        let req = |k: &str| get(k).expect("key has a default");

        let split: Vec<f64> = req("split")
            .split(',')
            .map(|s| num("split", s))
            .collect::<Result<_>>()?;
        let [train, val, test] = split[..] else {
            return Err(cfg_err("split", req("split"), "expected three ratios"));
        };
        let split = SplitRatios { train, val, test };
        split.validate().map_err(|e| Error::Config(e.to_string()))?;

        let window_size: usize = num("window_size", req("window_size"))?;
        if window_size < 2 {
            return Err(cfg_err("window_size", req("window_size"), "must be at least 2"));
        }
        let sequence_length: usize = num("sequence_length", req("sequence_length"))?;
        if sequence_length < 1 {
            return Err(cfg_err("sequence_length", req("sequence_length"), "must be at least 1"));
        }
        let threshold: f64 = num("threshold", req("threshold"))?;
        if !(threshold > 0.0 && threshold < 1.0) {
            return Err(cfg_err("threshold", req("threshold"), "must lie in (0, 1)"));
        }
        let format = req("format").to_string();
        mapping_for(&format)?;

        let positive = |k: &str, v: f64| -> Result<f64> {
            if v > 0.0 && v.is_finite() {
                Ok(v)
            } else {
                Err(cfg_err(k, &v.to_string(), "must be positive"))
            }
        };
        let encoder = EncoderConfig {
            epochs: num("encoder.epochs", req("encoder.epochs"))?,
            lr: positive("encoder.lr", num("encoder.lr", req("encoder.lr"))?)?,
            patience: num("encoder.patience", req("encoder.patience"))?,
            seed: num("encoder.seed", req("encoder.seed"))?,
            val_fraction: num("encoder.val_fraction", req("encoder.val_fraction"))?,
            grad_clip: num("encoder.grad_clip", req("encoder.grad_clip"))?,
        };
        if !(0.0..1.0).contains(&encoder.val_fraction) {
            return Err(cfg_err("encoder.val_fraction", req("encoder.val_fraction"), "must lie in [0, 1)"));
        }
        let detector = DetectorConfig {
            epochs: num("detector.epochs", req("detector.epochs"))?,
            lr: positive("detector.lr", num("detector.lr", req("detector.lr"))?)?,
            batch_size: num("detector.batch", req("detector.batch"))?,
            patience: num("detector.patience", req("detector.patience"))?,
            seed: num("detector.seed", req("detector.seed"))?,
            grad_clip: num("detector.grad_clip", req("detector.grad_clip"))?,
            threshold,
        };
        for (k, v) in [
            ("encoder.epochs", encoder.epochs),
            ("detector.epochs", detector.epochs),
            ("detector.batch", detector.batch_size),
        ] {
            if v == 0 {
                return Err(cfg_err(k, "0", "must be at least 1"));
            }
        }

        let preset = match get("synth.preset") {
            None => None,
            Some("desk-normal") => Some(Preset::DeskNormal),
            Some("desk-mixed") => Some(Preset::DeskMixed),
            Some(other) => return Err(cfg_err("synth.preset", other, "expected desk-normal or desk-mixed")),
        };
        let synth = SynthConfig {
            output: get("synth.output").map(PathBuf::from),
            preset,
            duration: get("synth.duration").map(|v| num("synth.duration", v)).transpose()?,
            jitter: num("synth.jitter", req("synth.jitter"))?,
            seed: num("synth.seed", req("synth.seed"))?,
            ecus: all("synth.ecu").iter().map(|s| s.parse()).collect::<Result<_>>()?,
            attacks: all("synth.attack").iter().map(|s| s.parse()).collect::<Result<_>>()?,
        };

        let mut entries = Vec::new();
        for (k, vs) in &values {
            for v in vs {
                entries.push((k.clone(), v.clone()));
            }
        }

        Ok(Self {
            input: get("input").map(PathBuf::from),
            normal_input: get("normal_input").map(PathBuf::from),
            work_dir: PathBuf::from(req("work_dir")),
            format,
            window_size,
            sequence_length,
            byte_mode: req("byte_mode").parse()?,
            split,
            threshold,
            encoder,
            detector,
            entropy_sizes: sizes("entropy.sizes", req("entropy.sizes"))?,
            sweep_window_sizes: list("sweep.window_sizes", req("sweep.window_sizes"))?,
            sweep_sequence_lengths: list("sweep.sequence_lengths", req("sweep.sequence_lengths"))?,
            synth,
            entries,
        })
    }

    pub fn mapping(&self) -> ColumnMapping {
        mapping_for(&self.format).expect("validated on load")
    }

    /// Normalized value of one key, as recorded in manifests.
    pub fn value(&self, key: &str) -> String {
        self.entries
            .iter()
            .filter(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
            .collect::<Vec<_>>()
            .join(" | ")
    }

    /// A copy with one key replaced, re-validated.
    pub fn with(&self, key: &str, value: &str) -> Result<Self> {
        let mut pairs: Vec<(String, String)> = self.entries.iter().filter(|(k, _)| k != key).cloned().collect();
        pairs.push((key.to_string(), value.to_string()));
        Self::from_pairs(pairs)
    }

    pub fn to_text(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

fn mapping_for(format: &str) -> Result<ColumnMapping> {
    match format {
        "default" => Ok(ColumnMapping::default()),
        "positional" => Ok(ColumnMapping::positional()),
        "car-hacking-2020" => Ok(ColumnMapping::car_hacking_2020()),
        other => Err(cfg_err("format", other, "expected default, positional or car-hacking-2020")),
    }
}

/// `key = value` lines; `#` starts a comment.
pub fn parse_text(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split_once('#').map_or(raw, |(a, _)| a).trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", n + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = PipelineConfig::default();
        assert_eq!((c.window_size, c.sequence_length, c.threshold), (50, 50, 0.5));
        assert_eq!(c.byte_mode, ByteMode::Binarized);
        assert_eq!(c.entropy_sizes.len(), 40);
        assert_eq!(c.detector.batch_size, 32);
        assert_eq!(c.sweep_window_sizes, vec![50, 75, 100, 125, 150]);
    }

    #[test]
    fn parses_file_text() {
        let c = PipelineConfig::from_text(
            "# comment\nwindow_size = 75  # trailing\nsynth.attack = flooding 1 0.5 rate=100\nsynth.attack = fuzzing 2 0.5 rate=100\n",
        )
        .unwrap();
        assert_eq!(c.window_size, 75);
        assert_eq!(c.synth.attacks.len(), 2);
    }

    #[test]
    fn rejects_bad_input() {
        for text in [
            "windowsize = 50",
            "window_size = 1",
            "threshold = 1.0",
            "split = 0.5,0.2,0.2",
            "window_size = 50\nwindow_size = 60",
            "byte_mode = ternary",
            "no equals sign",
            "format = xml",
        ] {
            assert!(matches!(PipelineConfig::from_text(text), Err(Error::Config(_))), "{text}");
        }
    }

    #[test]
    fn overrides_replace_file_values() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.conf");
        std::fs::write(&p, "window_size = 75\n").unwrap();
        let c = PipelineConfig::load(Some(&p), &[("window_size".into(), "100".into())]).unwrap();
        assert_eq!(c.window_size, 100);
        assert_eq!(c.with("sequence_length", "30").unwrap().sequence_length, 30);
    }

    #[test]
    fn text_round_trip() {
        let c = PipelineConfig::from_text("synth.ecu = 0x100 10 c:1\nencoder.lr = 0.01").unwrap();
        assert_eq!(PipelineConfig::from_text(&c.to_text()).unwrap(), c);
    }
}
