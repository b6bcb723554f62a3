//! Synthetic ECU traffic and attack injection.
//!
//! Time is scheduled on an integer microsecond grid so generated logs survive
//! a CSV round trip bit-for-bit.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::ingest::{CanFrame, Label};

const US: f64 = 1e6;

fn to_us(seconds: f64) -> i64 {
    (seconds * US).round() as i64
}

fn from_us(us: i64) -> f64 {
    us as f64 / US
}

/// Value model for one payload byte of a periodic message.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ByteModel {
    Constant(u8),
    /// Wrapping counter advanced by `step` every emission.
    Counter { start: u8, step: u8 },
    /// Random walk clamped to `[lo, hi]`, moving at most `max_step` per emission.
    RandomWalk { start: u8, lo: u8, hi: u8, max_step: u8 },
}

impl ByteModel {
    fn initial(self) -> u8 {
        match self {
            ByteModel::Constant(v) => v,
            ByteModel::Counter { start, .. } | ByteModel::RandomWalk { start, .. } => start,
        }
    }

    fn advance<R: Rng>(self, current: u8, rng: &mut R) -> u8 {
        match self {
            ByteModel::Constant(v) => v,
            ByteModel::Counter { step, .. } => current.wrapping_add(step),
            ByteModel::RandomWalk { lo, hi, max_step, .. } => {
                let d = i16::from(max_step);
                let next = i16::from(current) + rng.random_range(-d..=d);
                next.clamp(i16::from(lo), i16::from(hi)) as u8
            }
        }
    }
}

impl fmt::Display for ByteModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            ByteModel::Constant(v) => write!(f, "c:{v}"),
            ByteModel::Counter { start, step } => write!(f, "n:{start}:{step}"),
            ByteModel::RandomWalk { start, lo, hi, max_step } => write!(f, "w:{start}:{lo}:{hi}:{max_step}"),
        }
    }
}

impl FromStr for ByteModel {
    type Err = Error;

    /// `c:V`, `n:START:STEP` or `w:START:LO:HI:STEP`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |i: usize| -> Result<u8> {
            parts
                .get(i)
                .and_then(|p| parse_u8(p))
                .ok_or_else(|| Error::Config(format!("bad byte model `{s}`")))
        };
        match (parts[0], parts.len()) {
            ("c", 2) => Ok(ByteModel::Constant(num(1)?)),
            ("n", 3) => Ok(ByteModel::Counter { start: num(1)?, step: num(2)? }),
            ("w", 5) => {
                let (start, lo, hi, max_step) = (num(1)?, num(2)?, num(3)?, num(4)?);
                if lo > hi || start < lo || start > hi {
                    return Err(Error::Config(format!("random walk `{s}` needs lo <= start <= hi")));
                }
                Ok(ByteModel::RandomWalk { start, lo, hi, max_step })
            }
            _ => Err(Error::Config(format!("bad byte model `{s}`"))),
        }
    }
}

fn parse_u8(s: &str) -> Option<u8> {
    match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(h) => u8::from_str_radix(h, 16).ok(),
        None => s.parse().ok(),
    }
}

fn parse_id(s: &str) -> Result<u32> {
    crate::ingest::parse_hex_u32(s).map_err(|_| Error::Config(format!("bad arbitration id `{s}`")))
}

fn parse_f64(key: &str, s: &str) -> Result<f64> {
    s.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::Config(format!("bad value `{s}` for {key}")))
}

/// One periodic sender. `bytes.len()` equals `dlc`.
#[derive(Debug, Clone, PartialEq)]
pub struct EcuSpec {
    pub arbitration_id: u32,
    pub period_ms: f64,
    pub dlc: u8,
    pub bytes: Vec<ByteModel>,
    /// Offset of the first emission.
    pub phase_ms: f64,
}

impl EcuSpec {
    pub fn new(arbitration_id: u32, period_ms: f64, bytes: Vec<ByteModel>) -> Self {
        Self {
            arbitration_id,
            period_ms,
            dlc: bytes.len() as u8,
            bytes,
            phase_ms: 0.0,
        }
    }

    pub fn with_phase(mut self, phase_ms: f64) -> Self {
        self.phase_ms = phase_ms;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.period_ms > 0.0 && self.period_ms.is_finite()) {
            return Err(Error::Config(format!(
                "ECU {:#x}: period must be positive",
                self.arbitration_id
            )));
        }
        if !(self.phase_ms >= 0.0) {
            return Err(Error::Config(format!("ECU {:#x}: negative phase", self.arbitration_id)));
        }
        if self.dlc > 8 || self.bytes.len() != self.dlc as usize {
            return Err(Error::Config(format!(
                "ECU {:#x}: {} byte models for DLC {}",
                self.arbitration_id,
                self.bytes.len(),
                self.dlc
            )));
        }
        if self.arbitration_id >= crate::ingest::MAX_ARBITRATION_ID {
            return Err(Error::Config(format!("ECU id {:#x} exceeds 29 bits", self.arbitration_id)));
        }
        Ok(())
    }
}

impl fmt::Display for EcuSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#05x} {}", self.arbitration_id, self.period_ms)?;
        for b in &self.bytes {
            write!(f, " {b}")?;
        }
        if self.phase_ms > 0.0 {
            write!(f, " phase={}", self.phase_ms)?;
        }
        Ok(())
    }
}

impl FromStr for EcuSpec {
    type Err = Error;

    /// `ID PERIOD_MS [BYTE_MODEL ...] [phase=MS]`, e.g. `0x130 10 c:0 n:0:1 w:40:30:50:2`.
    fn from_str(s: &str) -> Result<Self> {
        let mut it = s.split_whitespace();
        let id = parse_id(it.next().ok_or_else(|| Error::Config("empty ECU spec".into()))?)?;
        let period = parse_f64(
            "ECU period",
            it.next().ok_or_else(|| Error::Config(format!("ECU spec `{s}` lacks a period")))?,
        )?;
        let mut bytes = Vec::new();
        let mut phase = 0.0;
        for tok in it {
            if let Some(p) = tok.strip_prefix("phase=") {
                phase = parse_f64("phase", p)?;
            } else {
                bytes.push(tok.parse()?);
            }
        }
        let spec = EcuSpec::new(id, period, bytes).with_phase(phase);
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrafficProfile {
    pub ecu_specs: Vec<EcuSpec>,
    /// Seconds.
    pub duration: f64,
    /// Fraction of the period; each emission moves by up to `±jitter·period`.
    pub jitter: f64,
    pub seed: u64,
}

impl TrafficProfile {
    pub fn validate(&self) -> Result<()> {
        if self.ecu_specs.is_empty() {
            return Err(Error::Config("traffic profile needs at least one ECU".into()));
        }
        if !(0.0..0.5).contains(&self.jitter) {
            return Err(Error::Config(format!("jitter {} outside [0, 0.5)", self.jitter)));
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(Error::Config("duration must be positive".into()));
        }
        self.ecu_specs.iter().try_for_each(EcuSpec::validate)
    }
}

/// Periodic traffic from every ECU, merged in timestamp order.
pub fn generate_normal(profile: &TrafficProfile) -> Result<Vec<CanFrame>> {
    profile.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(profile.seed);
    let end = to_us(profile.duration);
    // (time, ecu, k) keys give a total order independent of sort stability
    let mut scheduled: Vec<(i64, usize, usize, CanFrame)> = Vec::new();
    for (e, ecu) in profile.ecu_specs.iter().enumerate() {
        let period = ecu.period_ms * 1e3;
        let phase = ecu.phase_ms * 1e3;
        let mut state: Vec<u8> = ecu.bytes.iter().map(|b| b.initial()).collect();
        let mut k = 0usize;
        loop {
            let nominal = phase + k as f64 * period;
            if nominal.round() as i64 >= end {
                break;
            }
            let offset = if profile.jitter > 0.0 {
                rng.random_range(-profile.jitter..profile.jitter) * period
            } else {
                0.0
            };
            let t = ((nominal + offset).round() as i64).clamp(0, end - 1);
            let frame = CanFrame::new(from_us(t), ecu.arbitration_id, ecu.dlc, &state, Label::Normal)?;
            scheduled.push((t, e, k, frame));
            for (s, model) in state.iter_mut().zip(&ecu.bytes) {
                *s = model.advance(*s, &mut rng);
            }
            k += 1;
        }
    }
    scheduled.sort_by_key(|&(t, e, k, _)| (t, e, k));
    Ok(scheduled.into_iter().map(|(.., f)| f).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ByteMutation {
    pub index: usize,
    pub lo: u8,
    pub hi: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AttackKind {
    Flooding,
    Fuzzing,
    Replay,
    Spoofing,
}

impl AttackKind {
    pub fn label(self) -> Label {
        match self {
            AttackKind::Flooding => Label::Flooding,
            AttackKind::Fuzzing => Label::Fuzzing,
            AttackKind::Replay => Label::Replay,
            AttackKind::Spoofing => Label::Spoofing,
        }
    }
}

impl FromStr for AttackKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.parse::<Label>().map_err(|e| Error::Config(e.to_string()))? {
            Label::Flooding => Ok(AttackKind::Flooding),
            Label::Fuzzing => Ok(AttackKind::Fuzzing),
            Label::Replay => Ok(AttackKind::Replay),
            Label::Spoofing => Ok(AttackKind::Spoofing),
            Label::Normal => Err(Error::Config("`normal` is not an attack kind".into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackSpec {
    pub kind: AttackKind,
    /// Seconds.
    pub start: f64,
    pub duration: f64,
    /// Messages per second (flooding, fuzzing, spoofing).
    pub rate: f64,
    /// Flooding defaults to `0x000`; required for spoofing.
    pub target_id: Option<u32>,
    /// Replay source interval `[from, to)` in seconds.
    pub replay_span: Option<(f64, f64)>,
    pub mutation: Vec<ByteMutation>,
}

impl AttackSpec {
    fn base(kind: AttackKind, start: f64, duration: f64) -> Self {
        Self {
            kind,
            start,
            duration,
            rate: 0.0,
            target_id: None,
            replay_span: None,
            mutation: Vec::new(),
        }
    }

    pub fn flooding(start: f64, duration: f64, rate: f64) -> Self {
        Self {
            rate,
            ..Self::base(AttackKind::Flooding, start, duration)
        }
    }

    pub fn fuzzing(start: f64, duration: f64, rate: f64) -> Self {
        Self {
            rate,
            ..Self::base(AttackKind::Fuzzing, start, duration)
        }
    }

    pub fn replay(start: f64, duration: f64, from: f64, to: f64) -> Self {
        Self {
            replay_span: Some((from, to)),
            ..Self::base(AttackKind::Replay, start, duration)
        }
    }

    pub fn spoofing(start: f64, duration: f64, rate: f64, target_id: u32, mutation: Vec<ByteMutation>) -> Self {
        Self {
            rate,
            target_id: Some(target_id),
            mutation,
            ..Self::base(AttackKind::Spoofing, start, duration)
        }
    }

    pub fn with_target(mut self, id: u32) -> Self {
        self.target_id = Some(id);
        self
    }

    pub fn end(&self) -> f64 {
        self.start + self.duration
    }

    fn injected_count(&self) -> usize {
        (self.rate * self.duration).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.start >= 0.0 && self.duration > 0.0 && self.end().is_finite()) {
            return Err(Error::Config(format!(
                "{:?}: start must be >= 0 and duration > 0",
                self.kind
            )));
        }
        let needs_rate = self.kind != AttackKind::Replay;
        if needs_rate && !(self.rate > 0.0 && self.rate.is_finite()) {
            return Err(Error::Config(format!("{:?}: rate must be positive", self.kind)));
        }
        match self.kind {
            AttackKind::Replay => {
                let (from, to) = self
                    .replay_span
                    .ok_or_else(|| Error::Config("replay needs a source span".into()))?;
                if !(from < to) {
                    return Err(Error::Config(format!("replay span [{from}, {to}) is empty")));
                }
                if to - from > self.duration + 1e-9 {
                    return Err(Error::Config(format!(
                        "replay span of {}s does not fit the {}s attack interval",
                        to - from,
                        self.duration
                    )));
                }
                if from < self.end() && self.start < to {
                    return Err(Error::Config(format!(
                        "replay span [{from}, {to}) overlaps the attack interval [{}, {})",
                        self.start,
                        self.end()
                    )));
                }
            }
            AttackKind::Spoofing => {
                if self.target_id.is_none() {
                    return Err(Error::Config("spoofing needs a target id".into()));
                }
                if self.mutation.is_empty() {
                    return Err(Error::Config("spoofing needs at least one byte mutation".into()));
                }
                if let Some(m) = self.mutation.iter().find(|m| m.index >= 8 || m.lo > m.hi) {
                    return Err(Error::Config(format!(
                        "bad mutation: byte {} range {}-{}",
                        m.index, m.lo, m.hi
                    )));
                }
            }
            _ => {}
        }
        Ok(())
    }
}

impl fmt::Display for AttackSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.kind.label().name().to_ascii_lowercase(), self.start, self.duration)?;
        if self.rate > 0.0 {
            write!(f, " rate={}", self.rate)?;
        }
        if let Some(id) = self.target_id {
            write!(f, " id={id:#05x}")?;
        }
        if let Some((a, b)) = self.replay_span {
            write!(f, " from={a} to={b}")?;
        }
        if !self.mutation.is_empty() {
            let m: Vec<String> = self.mutation.iter().map(|m| format!("{}:{}-{}", m.index, m.lo, m.hi)).collect();
            write!(f, " mutate={}", m.join(","))?;
        }
        Ok(())
    }
}

impl FromStr for AttackSpec {
    type Err = Error;

    /// `KIND START DURATION [rate=R] [id=ID] [from=S to=S] [mutate=I:LO-HI,...]`.
    fn from_str(s: &str) -> Result<Self> {
        let mut it = s.split_whitespace();
        let missing = || Error::Config(format!("attack spec `{s}` needs KIND START DURATION"));
        let kind: AttackKind = it.next().ok_or_else(missing)?.parse()?;
        let start = parse_f64("attack start", it.next().ok_or_else(missing)?)?;
        let duration = parse_f64("attack duration", it.next().ok_or_else(missing)?)?;
        let mut spec = AttackSpec::base(kind, start, duration);
        let (mut from, mut to) = (None, None);
        for tok in it {
            let (k, v) = tok
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("expected key=value, got `{tok}`")))?;
            match k {
                "rate" => spec.rate = parse_f64(k, v)?,
                "id" => spec.target_id = Some(parse_id(v)?),
                "from" => from = Some(parse_f64(k, v)?),
                "to" => to = Some(parse_f64(k, v)?),
                "mutate" => {
                    for m in v.split(',') {
                        let bad = || Error::Config(format!("bad mutation `{m}`; expected I:LO-HI"));
                        let (i, range) = m.split_once(':').ok_or_else(bad)?;
                        let (lo, hi) = range.split_once('-').ok_or_else(bad)?;
                        spec.mutation.push(ByteMutation {
                            index: i.parse().map_err(|_| bad())?,
                            lo: parse_u8(lo).ok_or_else(bad)?,
                            hi: parse_u8(hi).ok_or_else(bad)?,
                        });
                    }
                }
                _ => return Err(Error::Config(format!("unknown attack option `{k}`"))),
            }
        }
        match (from, to) {
            (Some(a), Some(b)) => spec.replay_span = Some((a, b)),
            (None, None) => {}
            _ => return Err(Error::Config("replay needs both from= and to=".into())),
        }
        spec.validate()?;
        Ok(spec)
    }
}

/// Injects one attack into a timestamp-sorted log. Original frames are kept
/// unchanged; on equal timestamps injected frames follow originals.
pub fn inject(frames: &[CanFrame], spec: &AttackSpec, seed: u64) -> Result<Vec<CanFrame>> {
    spec.validate()?;
    let (first, last) = match (frames.first(), frames.last()) {
        (Some(a), Some(b)) => (a.timestamp, b.timestamp),
        _ => return Err(Error::invalid("cannot inject into an empty log")),
    };
    if spec.start < first || spec.end() > last {
        return Err(Error::invalid(format!(
            "attack interval [{}, {}) lies outside the log [{first}, {last}]",
            spec.start,
            spec.end()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let label = spec.kind.label();
    let start = to_us(spec.start);
    let span_us = to_us(spec.end()) - start;
    let evenly = |i: usize| start + ((i as f64) * US / spec.rate).floor() as i64;

    let mut injected: Vec<CanFrame> = match spec.kind {
        AttackKind::Flooding => {
            let id = spec.target_id.unwrap_or(0);
            (0..spec.injected_count())
                .map(|i| CanFrame::new(from_us(evenly(i)), id, 8, &[0; 8], label))
                .collect::<Result<_>>()?
        }
        AttackKind::Fuzzing => {
            let mut times: Vec<i64> = (0..spec.injected_count())
                .map(|_| start + rng.random_range(0..span_us.max(1)))
                .collect();
            times.sort_unstable();
            times
                .into_iter()
                .map(|t| {
                    let id = rng.random_range(0..=0x7FFu32);
                    let dlc = rng.random_range(0..=8u8);
                    let mut data = [0u8; 8];
                    rng.fill(&mut data[..dlc as usize]);
                    CanFrame::new(from_us(t), id, dlc, &data[..dlc as usize], label)
                })
                .collect::<Result<_>>()?
        }
        AttackKind::Replay => {
            let (from, to) = spec.replay_span.expect("validated");
            let source: Vec<&CanFrame> = frames
                .iter()
                .filter(|f| f.timestamp >= from && f.timestamp < to)
                .collect();
            let Some(anchor) = source.first().map(|f| to_us(f.timestamp)) else {
                return Err(Error::invalid(format!("replay span [{from}, {to}) contains no frames")));
            };
            source
                .into_iter()
                .map(|f| CanFrame {
                    timestamp: from_us(start + to_us(f.timestamp) - anchor),
                    label,
                    ..*f
                })
                .collect()
        }
        AttackKind::Spoofing => {
            let id = spec.target_id.expect("validated");
            let history: Vec<&CanFrame> = frames.iter().filter(|f| f.arbitration_id == id).collect();
            if history.is_empty() {
                return Err(Error::invalid(format!("spoofing target {id:#x} never appears in the log")));
            }
            let min_dlc = spec.mutation.iter().map(|m| m.index as u8 + 1).max().unwrap_or(0);
            let mut cursor = 0usize;
            (0..spec.injected_count())
                .map(|i| {
                    let t = evenly(i);
                    while cursor + 1 < history.len() && to_us(history[cursor + 1].timestamp) <= t {
                        cursor += 1;
                    }
                    let base = history[cursor];
                    let mut payload = base.payload;
                    for m in &spec.mutation {
                        payload[m.index] = rng.random_range(m.lo..=m.hi);
                    }
                    let dlc = base.dlc.max(min_dlc);
                    CanFrame::new(from_us(t), id, dlc, &payload[..dlc as usize], label)
                })
                .collect::<Result<_>>()?
        }
    };
    injected.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
    Ok(merge(frames, injected))
}

fn merge(original: &[CanFrame], injected: Vec<CanFrame>) -> Vec<CanFrame> {
    let mut out = Vec::with_capacity(original.len() + injected.len());
    let mut inj = injected.into_iter().peekable();
    for f in original {
        while let Some(x) = inj.next_if(|x| x.timestamp < f.timestamp) {
            out.push(x);
        }
        out.push(*f);
    }
    out.extend(inj);
    out
}

/// Applies attacks in order, deriving one seed per attack.
pub fn inject_all(frames: Vec<CanFrame>, attacks: &[AttackSpec], seed: u64) -> Result<Vec<CanFrame>> {
    let mut seeds = ChaCha8Rng::seed_from_u64(seed);
    attacks.iter().try_fold(frames, |acc, spec| inject(&acc, spec, seeds.random()))
}

/// Frames per class in `Label::ALL` order.
pub fn class_counts(frames: &[CanFrame]) -> Vec<(Label, usize)> {
    Label::ALL
        .iter()
        .map(|&l| (l, frames.iter().filter(|f| f.label == l).count()))
        .collect()
}

pub fn format_class_counts(frames: &[CanFrame]) -> String {
    let total = frames.len().max(1) as f64;
    let mut s = format!("{:<10} {:>10} {:>8}\n", "Class", "Records", "Share");
    for (l, n) in class_counts(frames) {
        s.push_str(&format!("{:<10} {:>10} {:>7.2}%\n", l.name(), n, 100.0 * n as f64 / total));
    }
    s.push_str(&format!("{:<10} {:>10}\n", "Total", frames.len()));
    s
}

/// Eighteen ECUs emitting about 1000 frames/s: six at 10 ms, six at 20 ms,
/// four at 50 ms and two at 100 ms.
pub fn desk_ecus() -> Vec<EcuSpec> {
    use ByteModel::{Constant as C, Counter as N, RandomWalk as W};
    let walk = |start: u8, width: u8, step: u8| W {
        start,
        lo: start.saturating_sub(width),
        hi: start.saturating_add(width),
        max_step: step,
    };
    let ecu = |id, period, phase, bytes: Vec<ByteModel>| EcuSpec::new(id, period, bytes).with_phase(phase);
    vec![
        ecu(0x0A0, 10.0, 0.3, vec![walk(0x40, 20, 2), walk(0x10, 8, 1), C(0), C(0), N { start: 0, step: 1 }, C(0), C(0), C(0x55)]),
        ecu(0x0C1, 10.0, 1.9, vec![walk(0x80, 40, 3), walk(0x80, 40, 3), C(0), C(0x0F), C(0), C(0), C(0), N { start: 0, step: 16 }]),
        ecu(0x130, 10.0, 3.1, vec![C(0), C(0), walk(0x30, 16, 1), C(0x7F), C(0), C(0), N { start: 0, step: 1 }, C(0)]),
        ecu(0x153, 10.0, 4.7, vec![C(0x20), C(0), C(0), C(0), walk(0x20, 10, 1), C(0), C(0), C(0)]),
        ecu(0x18F, 10.0, 6.2, vec![C(0xFE), walk(0x20, 12, 2), C(0), C(0), C(0), C(0), C(0), C(0)]),
        ecu(0x1F1, 10.0, 8.4, vec![N { start: 0, step: 1 }, C(0), C(0), C(0), C(0), C(0), C(0), C(0)]),
        ecu(0x220, 20.0, 2.5, vec![walk(0x60, 30, 2), C(0), walk(0x05, 4, 1), C(0), C(0x11), C(0x22), C(0), C(0)]),
        ecu(0x260, 20.0, 5.5, vec![C(0x05), C(0x20), C(0xEA), C(0x0A), C(0x20), C(0x1A), C(0x00), N { start: 0, step: 0x11 }]),
        ecu(0x2A0, 20.0, 9.5, vec![C(0x64), C(0), C(0x9A), C(0x1D), C(0x97), C(0x02), C(0xBD), C(0)]),
        ecu(0x2C0, 20.0, 12.5, vec![walk(0x14, 10, 1), C(0), C(0), C(0), C(0), C(0), C(0), C(0)]),
        ecu(0x316, 20.0, 15.5, vec![C(0x05), walk(0x22, 20, 3), walk(0x68, 20, 3), C(0x09), C(0x22), C(0x20), C(0), C(0x75)]),
        ecu(0x329, 20.0, 17.5, vec![walk(0x40, 20, 1), C(0xB7), C(0x7F), C(0x14), C(0x11), C(0x20), C(0), C(0x14)]),
        ecu(0x370, 50.0, 7.0, vec![C(0), C(0x20), C(0), C(0), C(0), C(0), C(0), C(0)]),
        ecu(0x3F1, 50.0, 19.0, vec![C(0x4B), C(0), C(0), N { start: 0, step: 1 }]),
        ecu(0x43F, 50.0, 31.0, vec![C(0x01), C(0x45), C(0x60), C(0xFF), C(0x6B), C(0), C(0), C(0)]),
        ecu(0x4F0, 50.0, 43.0, vec![C(0), C(0), C(0), C(0), C(0), C(0), C(0), N { start: 0, step: 1 }]),
        ecu(0x545, 100.0, 23.0, vec![C(0xD8), C(0), C(0x8A), C(0), C(0), C(0), C(0), C(0)]),
        ecu(0x5F0, 100.0, 71.0, vec![C(0), C(0)]),
    ]
}

pub fn desk_normal_profile(duration: f64, seed: u64) -> TrafficProfile {
    TrafficProfile {
        ecu_specs: desk_ecus(),
        duration,
        jitter: 0.02,
        seed,
    }
}

/// Spoofing target in the desk presets: a 10 ms sender whose upper bytes stay zero.
pub const DESK_SPOOF_TARGET: u32 = 0x1F1;

/// Repeating attack clusters: back-to-back flooding, fuzzing, replay and
/// spoofing episodes, then a quiet stretch until the next cluster `cycle`
/// seconds later.
///
/// Over the default 108 s log the injected shares come out near 5 %
/// flooding, 2 % fuzzing, 2 % replay and 1 % spoofing.
pub fn desk_attack_schedule(duration: f64, cycle: f64) -> Vec<AttackSpec> {
    let mut attacks = Vec::new();
    let mut c0 = 6.0;
    while c0 + 2.0 <= duration - 1.0 {
        attacks.push(AttackSpec::flooding(c0, 0.6, 2000.0));
        attacks.push(AttackSpec::fuzzing(c0 + 0.6, 0.48, 1000.0));
        attacks.push(AttackSpec::replay(c0 + 1.08, 0.5, c0 - 4.0, c0 - 3.52));
        attacks.push(AttackSpec::spoofing(
            c0 + 1.58,
            0.24,
            1000.0,
            DESK_SPOOF_TARGET,
            (1..8).map(|index| ByteMutation { index, lo: 1, hi: 255 }).collect(),
        ));
        c0 += cycle;
    }
    attacks
}

/// Mixed into the traffic seed to derive the injection seed.
pub const ATTACK_SEED_SALT: u64 = 0xA77A_C4;

/// Seconds between attack clusters in [`desk_mixed`].
pub const DESK_CYCLE: f64 = 21.6;

/// Normal-only desk log of `duration` seconds (about 1000 frames/s).
pub fn desk_normal(duration: f64, seed: u64) -> Result<Vec<CanFrame>> {
    generate_normal(&desk_normal_profile(duration, seed))
}

/// Mixed desk log carrying all four attack types.
pub fn desk_mixed(duration: f64, seed: u64) -> Result<Vec<CanFrame>> {
    let normal = desk_normal(duration, seed)?;
    inject_all(normal, &desk_attack_schedule(duration, DESK_CYCLE), seed ^ ATTACK_SEED_SALT)
}
