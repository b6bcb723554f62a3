//! CAN log parsing and the preprocessing chain: zero padding, field
//! normalization, non-overlapping windowing and window labeling.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Largest arbitration ID representable in a 29-bit extended frame, plus one.
pub const MAX_ARBITRATION_ID: u32 = 1 << 29;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Normal,
    Flooding,
    Fuzzing,
    Replay,
    Spoofing,
}

impl Label {
    pub const ALL: [Label; 5] = [
        Label::Normal,
        Label::Flooding,
        Label::Fuzzing,
        Label::Replay,
        Label::Spoofing,
    ];
    pub const ATTACKS: [Label; 4] = [Label::Flooding, Label::Fuzzing, Label::Replay, Label::Spoofing];

    pub fn is_attack(self) -> bool {
        self != Label::Normal
    }

    pub fn name(self) -> &'static str {
        match self {
            Label::Normal => "Normal",
            Label::Flooding => "Flooding",
            Label::Fuzzing => "Fuzzing",
            Label::Replay => "Replay",
            Label::Spoofing => "Spoofing",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "normal" | "r" => Ok(Label::Normal),
            "flooding" | "dos" => Ok(Label::Flooding),
            "fuzzing" | "fuzzy" => Ok(Label::Fuzzing),
            "replay" => Ok(Label::Replay),
            "spoofing" => Ok(Label::Spoofing),
            other => Err(Error::invalid(format!("unknown label `{other}`"))),
        }
    }
}

/// One CAN message. The payload is always 8 bytes; bytes at `dlc..` are zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CanFrame {
    pub timestamp: f64,
    pub arbitration_id: u32,
    pub dlc: u8,
    pub payload: [u8; 8],
    pub label: Label,
}

impl CanFrame {
    /// Builds a frame from the bytes actually present, padding with `0x00`.
    /// `data` may be shorter than `dlc` but not longer.
    pub fn new(timestamp: f64, arbitration_id: u32, dlc: u8, data: &[u8], label: Label) -> Result<Self> {
        if dlc > 8 {
            return Err(Error::invalid(format!("DLC {dlc} outside [0, 8]")));
        }
        if arbitration_id >= MAX_ARBITRATION_ID {
            return Err(Error::invalid(format!(
                "arbitration id {arbitration_id:#x} exceeds 29 bits"
            )));
        }
        if data.len() > dlc as usize {
            return Err(Error::invalid(format!(
                "{} payload bytes but DLC is {dlc}",
                data.len()
            )));
        }
        let mut payload = [0u8; 8];
        payload[..data.len()].copy_from_slice(data);
        Ok(Self {
            timestamp,
            arbitration_id,
            dlc,
            payload,
            label,
        })
    }

    pub fn data(&self) -> &[u8] {
        &self.payload[..self.dlc as usize]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizedFrame {
    pub timestamp: f64,
    pub arbitration_id: u32,
    pub dlc_norm: f64,
    pub byte_norm: [f64; 8],
    pub byte_bin: [u8; 8],
    pub label: Label,
}

pub fn normalize(frame: &CanFrame) -> NormalizedFrame {
    let mut byte_norm = [0.0; 8];
    let mut byte_bin = [0u8; 8];
    for (i, &b) in frame.payload.iter().enumerate() {
        byte_norm[i] = f64::from(b) / 255.0;
        byte_bin[i] = u8::from(b > 0);
    }
    NormalizedFrame {
        timestamp: frame.timestamp,
        arbitration_id: frame.arbitration_id,
        dlc_norm: f64::from(frame.dlc) / 8.0,
        byte_norm,
        byte_bin,
        label: frame.label,
    }
}

pub fn normalize_all(frames: &[CanFrame]) -> Vec<NormalizedFrame> {
    frames.iter().map(normalize).collect()
}

/// A run of exactly `window_size` consecutive frames.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub index: usize,
    pub frames: Vec<NormalizedFrame>,
    /// 1 when any frame carries an attack label.
    pub label: u8,
}

impl Window {
    pub fn new(index: usize, frames: Vec<NormalizedFrame>) -> Self {
        let label = u8::from(frames.iter().any(|f| f.label.is_attack()));
        Self { index, frames, label }
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Attack classes present in the window, in `Label` order.
    pub fn attack_kinds(&self) -> Vec<Label> {
        let mut kinds: Vec<Label> = self
            .frames
            .iter()
            .map(|f| f.label)
            .filter(|l| l.is_attack())
            .collect();
        kinds.sort();
        kinds.dedup();
        kinds
    }
}

/// Non-overlapping windows; a short trailing run is dropped.
pub fn make_windows(frames: &[NormalizedFrame], window_size: usize) -> Result<Vec<Window>> {
    if window_size == 0 {
        return Err(Error::invalid("window size must be at least 1"));
    }
    Ok(frames
        .chunks_exact(window_size)
        .enumerate()
        .map(|(i, chunk)| Window::new(i, chunk.to_vec()))
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split<T> {
    pub train: Vec<T>,
    pub val: Vec<T>,
    pub test: Vec<T>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitRatios {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self {
            train: 0.6,
            val: 0.2,
            test: 0.2,
        }
    }
}

impl SplitRatios {
    pub fn validate(&self) -> Result<()> {
        let all = [self.train, self.val, self.test];
        if all.iter().any(|r| !(*r > 0.0)) {
            return Err(Error::invalid(format!("split ratios must be positive: {all:?}")));
        }
        if (all.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("split ratios must sum to 1: {all:?}")));
        }
        Ok(())
    }

    /// Floor-rounded train/val sizes, remainder to test.
    pub fn sizes(&self, n: usize) -> (usize, usize, usize) {
        // absorb representation error such as 10 × 0.6 = 5.999…
        let floor = |r: f64| ((n as f64) * r + 1e-9).floor() as usize;
        let train = floor(self.train);
        let val = floor(self.val);
        (train, val, n - train - val)
    }
}

/// Contiguous chronological split; concatenating the parts gives back the input.
pub fn split_dataset<T>(items: Vec<T>, ratios: SplitRatios) -> Result<Split<T>> {
    ratios.validate()?;
    if items.len() < 3 {
        return Err(Error::invalid(format!(
            "need at least 3 items to split, got {}",
            items.len()
        )));
    }
    let (n_train, n_val, _) = ratios.sizes(items.len());
    let mut rest = items;
    let mut val = rest.split_off(n_train);
    let test = val.split_off(n_val);
    Ok(Split {
        train: rest,
        val,
        test,
    })
}

// ---------------------------------------------------------------------------
// CSV input

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Column {
    Index(usize),
    Name(String),
}

impl From<usize> for Column {
    fn from(i: usize) -> Self {
        Column::Index(i)
    }
}

impl From<&str> for Column {
    fn from(s: &str) -> Self {
        Column::Name(s.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PayloadColumns {
    /// One field holding space/comma separated bytes or a contiguous hex string.
    Single(Column),
    /// One byte per field, starting at the given column.
    Spread(Column),
}

/// Where each frame field lives in a CSV row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnMapping {
    pub timestamp: Column,
    pub arbitration_id: Column,
    pub dlc: Column,
    pub payload: PayloadColumns,
    pub label: Option<Column>,
    /// Takes precedence over `label` when present and non-empty.
    pub sublabel: Option<Column>,
    pub has_header: bool,
    pub delimiter: u8,
    /// Reject payloads longer than the declared DLC instead of truncating.
    pub strict: bool,
}

impl Default for ColumnMapping {
    /// The layout written by [`write_log`].
    fn default() -> Self {
        Self {
            timestamp: "timestamp".into(),
            arbitration_id: "arbitration_id".into(),
            dlc: "dlc".into(),
            payload: PayloadColumns::Single("data".into()),
            label: Some("label".into()),
            sublabel: None,
            has_header: true,
            delimiter: b',',
            strict: true,
        }
    }
}

impl ColumnMapping {
    /// Headerless `timestamp,id,dlc,data[,label]`.
    pub fn positional() -> Self {
        Self {
            timestamp: 0.into(),
            arbitration_id: 1.into(),
            dlc: 2.into(),
            payload: PayloadColumns::Single(3.into()),
            label: Some(4.into()),
            has_header: false,
            ..Self::default()
        }
    }

    /// `Timestamp,Arbitration_ID,DLC,Data,Class,SubClass` as published with
    /// the Car Hacking: Attack & Defense Challenge 2020 release.
    pub fn car_hacking_2020() -> Self {
        Self {
            timestamp: "Timestamp".into(),
            arbitration_id: "Arbitration_ID".into(),
            dlc: "DLC".into(),
            payload: PayloadColumns::Single("Data".into()),
            label: Some("Class".into()),
            sublabel: Some("SubClass".into()),
            has_header: true,
            delimiter: b',',
            strict: false,
        }
    }

    fn resolve(&self, header: Option<&csv::StringRecord>) -> Result<Resolved> {
        let find = |c: &Column| -> Result<usize> {
            match c {
                Column::Index(i) => Ok(*i),
                Column::Name(name) => header
                    .and_then(|h| h.iter().position(|f| f.trim().eq_ignore_ascii_case(name)))
                    .ok_or_else(|| Error::Parse {
                        line: 1,
                        message: format!("column `{name}` not found in header"),
                    }),
            }
        };
        // label columns are optional: a named column missing from the header means unlabeled
        let find_opt = |c: &Option<Column>| -> Result<Option<usize>> {
            match c {
                None => Ok(None),
                Some(Column::Index(i)) => Ok(Some(*i)),
                Some(col @ Column::Name(_)) => Ok(find(col).ok()),
            }
        };
        Ok(Resolved {
            timestamp: find(&self.timestamp)?,
            id: find(&self.arbitration_id)?,
            dlc: find(&self.dlc)?,
            payload: match &self.payload {
                PayloadColumns::Single(c) => (find(c)?, false),
                PayloadColumns::Spread(c) => (find(c)?, true),
            },
            label: find_opt(&self.label)?,
            sublabel: find_opt(&self.sublabel)?,
        })
    }
}

struct Resolved {
    timestamp: usize,
    id: usize,
    dlc: usize,
    payload: (usize, bool),
    label: Option<usize>,
    sublabel: Option<usize>,
}

fn strip_hex_prefix(s: &str) -> &str {
    let s = s.trim();
    s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")).unwrap_or(s)
}

pub fn parse_hex_u32(s: &str) -> Result<u32> {
    let digits = strip_hex_prefix(s);
    u32::from_str_radix(digits, 16).map_err(|_| Error::invalid(format!("malformed hex `{s}`")))
}

fn parse_hex_byte(s: &str) -> Result<u8> {
    let digits = strip_hex_prefix(s);
    if digits.is_empty() || digits.len() > 2 {
        return Err(Error::invalid(format!("malformed hex byte `{s}`")));
    }
    u8::from_str_radix(digits, 16).map_err(|_| Error::invalid(format!("malformed hex byte `{s}`")))
}

/// Parses a payload field: `"11 22 33"`, `"11,22,33"`, `"0x11 0x22"` or `"112233"`.
pub fn parse_payload(field: &str) -> Result<Vec<u8>> {
    let field = field.trim();
    if field.is_empty() {
        return Ok(Vec::new());
    }
    let tokens: Vec<&str> = field
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .collect();
    if tokens.len() == 1 {
        let digits = strip_hex_prefix(tokens[0]);
        if digits.len() > 2 {
            if digits.len() % 2 != 0 || !digits.is_ascii() {
                return Err(Error::invalid(format!("odd-length hex payload `{field}`")));
            }
            return (0..digits.len())
                .step_by(2)
                .map(|i| parse_hex_byte(&digits[i..i + 2]))
                .collect();
        }
    }
    tokens.into_iter().map(parse_hex_byte).collect()
}

/// Parses a CAN log. Non-monotone timestamps are logged, not rejected.
pub fn parse_reader<R: Read>(reader: R, mapping: &ColumnMapping) -> Result<Vec<CanFrame>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .delimiter(mapping.delimiter)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut records = rdr.records();
    let header = if mapping.has_header {
        match records.next() {
            Some(r) => Some(r?),
            None => return Ok(Vec::new()),
        }
    } else {
        None
    };
    let cols = mapping.resolve(header.as_ref())?;

    let mut frames = Vec::new();
    let mut regressions = 0usize;
    let mut first_regression = None;
    for rec in records {
        let rec = rec?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        let frame = parse_row(&rec, &cols, mapping.strict).map_err(|e| Error::Parse {
            line,
            message: match e {
                Error::InvalidInput(m) => m,
                other => other.to_string(),
            },
        })?;
        if let Some(prev) = frames.last().map(|f: &CanFrame| f.timestamp) {
            if frame.timestamp < prev {
                regressions += 1;
                first_regression.get_or_insert(line);
            }
        }
        frames.push(frame);
    }
    if let Some(line) = first_regression {
        log::warn!(
            "{regressions} non-monotone timestamp(s), first at line {line}; keeping file order"
        );
    }
    Ok(frames)
}

fn parse_row(rec: &csv::StringRecord, cols: &Resolved, strict: bool) -> Result<CanFrame> {
    let field = |i: usize, what: &str| {
        rec.get(i)
            .ok_or_else(|| Error::invalid(format!("missing {what} column {i}")))
    };
    let ts_field = field(cols.timestamp, "timestamp")?;
    let timestamp: f64 = ts_field
        .parse()
        .map_err(|_| Error::invalid(format!("malformed timestamp `{ts_field}`")))?;
    let id = parse_hex_u32(field(cols.id, "arbitration id")?)?;
    let dlc_field = field(cols.dlc, "dlc")?;
    let dlc: u8 = dlc_field
        .parse()
        .ok()
        .filter(|d| *d <= 8)
        .ok_or_else(|| Error::invalid(format!("DLC `{dlc_field}` outside [0, 8]")))?;

    let mut data = match cols.payload {
        (c, false) => parse_payload(rec.get(c).unwrap_or(""))?,
        (c, true) => {
            let mut bytes = Vec::new();
            for f in rec.iter().skip(c).take(8) {
                if f.is_empty() {
                    break;
                }
                match parse_hex_byte(f) {
                    Ok(b) => bytes.push(b),
                    // a label column following a short payload
                    Err(_) if bytes.len() >= dlc as usize => break,
                    Err(e) => return Err(e),
                }
            }
            bytes
        }
    };
    if data.len() > 8 {
        return Err(Error::invalid(format!("{} payload bytes exceed 8", data.len())));
    }
    if data.len() > dlc as usize {
        if strict {
            return Err(Error::invalid(format!(
                "{} payload bytes but DLC is {dlc}",
                data.len()
            )));
        }
        data.truncate(dlc as usize);
    }

    let sub = cols
        .sublabel
        .and_then(|i| rec.get(i))
        .filter(|s| !s.is_empty());
    let label = match sub.or_else(|| cols.label.and_then(|i| rec.get(i)).filter(|s| !s.is_empty())) {
        Some(s) => s.parse()?,
        None => Label::Normal,
    };
    CanFrame::new(timestamp, id, dlc, &data, label)
}

pub fn parse_log(path: &Path, mapping: &ColumnMapping) -> Result<Vec<CanFrame>> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_reader(std::io::BufReader::new(f), mapping)
}

fn format_id(id: u32) -> String {
    if id <= 0x7FF {
        format!("0x{id:03X}")
    } else {
        format!("0x{id:08X}")
    }
}

fn format_payload(data: &[u8]) -> String {
    data.iter().map(|b| format!("{b:02X}")).collect::<Vec<_>>().join(" ")
}

/// Writes frames in the default [`ColumnMapping`] layout.
pub fn write_log_to<W: Write>(frames: &[CanFrame], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["timestamp", "arbitration_id", "dlc", "data", "label"])?;
    for f in frames {
        w.write_record([
            f.timestamp.to_string(),
            format_id(f.arbitration_id),
            f.dlc.to_string(),
            format_payload(f.data()),
            f.label.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<writer>", e))?;
    Ok(())
}

pub fn write_log(frames: &[CanFrame], path: &Path) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_log_to(frames, std::io::BufWriter::new(f))
}

// ---------------------------------------------------------------------------
// Windowed dataset dump

const WINDOW_HEADER: [&str; 20] = [
    "window_index",
    "frame_ordinal",
    "dlc_norm",
    "byte_bin1",
    "byte_bin2",
    "byte_bin3",
    "byte_bin4",
    "byte_bin5",
    "byte_bin6",
    "byte_bin7",
    "byte_bin8",
    "arbitration_id",
    "label",
    "byte_norm1",
    "byte_norm2",
    "byte_norm3",
    "byte_norm4",
    "byte_norm5",
    "byte_norm6",
    "byte_norm7",
];

/// Writes windows one frame per row. The trailing `byte_norm*` columns keep
/// the dump lossless for the normalized-feature ablation.
pub fn write_windows_to<W: Write>(windows: &[Window], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = WINDOW_HEADER.to_vec();
    header.push("byte_norm8");
    w.write_record(&header)?;
    for win in windows {
        let base = win.index * win.frames.len();
        for (k, f) in win.frames.iter().enumerate() {
            let mut row = Vec::with_capacity(21);
            row.push(win.index.to_string());
            row.push((base + k).to_string());
            row.push(f.dlc_norm.to_string());
            row.extend(f.byte_bin.iter().map(|b| b.to_string()));
            row.push(format_id(f.arbitration_id));
            row.push(f.label.to_string());
            row.extend(f.byte_norm.iter().map(|b| b.to_string()));
            w.write_record(&row)?;
        }
    }
    w.flush().map_err(|e| Error::io("<writer>", e))?;
    Ok(())
}

pub fn write_windows(windows: &[Window], path: &Path) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_windows_to(windows, std::io::BufWriter::new(f))
}

pub fn read_windows_from<R: Read>(reader: R) -> Result<Vec<Window>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let mut windows: Vec<Window> = Vec::new();
    let mut current: Option<(usize, Vec<NormalizedFrame>)> = None;
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        let bad = |m: String| Error::Parse { line, message: m };
        let num = |i: usize| -> Result<f64> {
            rec.get(i)
                .and_then(|s| s.parse::<f64>().ok())
                .ok_or_else(|| bad(format!("bad numeric field {i}")))
        };
        let index = num(0)? as usize;
        let mut byte_bin = [0u8; 8];
        let mut byte_norm = [0.0; 8];
        for i in 0..8 {
            byte_bin[i] = num(3 + i)? as u8;
            byte_norm[i] = num(13 + i)?;
        }
        let frame = NormalizedFrame {
            timestamp: f64::NAN,
            arbitration_id: parse_hex_u32(rec.get(11).unwrap_or("")).map_err(|e| bad(e.to_string()))?,
            dlc_norm: num(2)?,
            byte_norm,
            byte_bin,
            label: rec.get(12).unwrap_or("").parse().map_err(|e: Error| bad(e.to_string()))?,
        };
        match &mut current {
            Some((i, frames)) if *i == index => frames.push(frame),
            _ => {
                if let Some((i, frames)) = current.take() {
                    windows.push(Window::new(i, frames));
                }
                current = Some((index, vec![frame]));
            }
        }
    }
    if let Some((i, frames)) = current {
        windows.push(Window::new(i, frames));
    }
    Ok(windows)
}

pub fn read_windows(path: &Path) -> Result<Vec<Window>> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_windows_from(std::io::BufReader::new(f))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Vec<CanFrame>> {
        parse_reader(text.as_bytes(), &ColumnMapping::positional())
    }

    fn nf(label: Label) -> NormalizedFrame {
        normalize(&CanFrame::new(0.0, 0x10, 1, &[1], label).unwrap())
    }

    #[test]
    fn pads_short_payload() {
        let f = parse("1.000,0x130,5,11 22 33 44 55,Normal\n").unwrap();
        assert_eq!(f[0].payload, [0x11, 0x22, 0x33, 0x44, 0x55, 0, 0, 0]);
        assert_eq!(f[0].arbitration_id, 0x130);
        assert_eq!(f[0].label, Label::Normal);
    }

    #[test]
    fn empty_payload_with_zero_dlc() {
        let f = parse("2.5,7FF,0,,Normal\n").unwrap();
        assert_eq!(f[0].payload, [0; 8]);
        assert_eq!(f[0].dlc, 0);
    }

    #[test]
    fn payload_encodings() {
        assert_eq!(parse_payload("0x1A,0xff").unwrap(), vec![0x1A, 0xFF]);
        assert_eq!(parse_payload("1aff00").unwrap(), vec![0x1A, 0xFF, 0x00]);
        assert_eq!(parse_payload("  ").unwrap(), Vec::<u8>::new());
        assert!(parse_payload("1af").is_err());
        assert!(parse_payload("zz").is_err());
    }

    #[test]
    fn missing_label_defaults_to_normal() {
        let f = parse("1.0,0x10,1,AA\n").unwrap();
        assert_eq!(f[0].label, Label::Normal);
    }

    #[test]
    fn errors_name_the_line() {
        let text = "1.0,0x10,1,AA,Normal\n2.0,0xZZ,1,AA,Normal\n";
        match parse(text).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            e => panic!("unexpected {e}"),
        }
        let err = parse("1.0,0x10,9,AA,Normal\n").unwrap_err().to_string();
        assert!(err.contains("line 1") && err.contains("DLC"), "{err}");
        // strict mode rejects payload longer than DLC
        assert!(parse("1.0,0x10,1,AA BB,Normal\n").is_err());
    }

    #[test]
    fn lenient_mode_truncates_to_dlc() {
        let mut m = ColumnMapping::positional();
        m.strict = false;
        let f = parse_reader("1.0,0x10,1,AA BB,Normal\n".as_bytes(), &m).unwrap();
        assert_eq!(f[0].payload, [0xAA, 0, 0, 0, 0, 0, 0, 0]);
    }

    #[test]
    fn non_monotone_timestamps_are_kept() {
        let f = parse("2.0,0x10,0,,Normal\n1.0,0x11,0,,Normal\n").unwrap();
        assert_eq!(f.len(), 2);
        assert_eq!(f[0].timestamp, 2.0);
    }

    #[test]
    fn car_hacking_layout_uses_subclass() {
        let text = "Timestamp,Arbitration_ID,DLC,Data,Class,SubClass\n\
                    1597759710.1258,153,8,20 A1 10 FF 00 FF 50 1F,Attack,Flooding\n\
                    1597759710.1259,220,8,13 24 7F 60 05 FF BF 10,Normal,Normal\n";
        let f = parse_reader(text.as_bytes(), &ColumnMapping::car_hacking_2020()).unwrap();
        assert_eq!(f[0].label, Label::Flooding);
        assert_eq!(f[0].arbitration_id, 0x153);
        assert_eq!(f[1].label, Label::Normal);
    }

    #[test]
    fn spread_payload_columns() {
        let m = ColumnMapping {
            payload: PayloadColumns::Spread(3.into()),
            label: Some(Column::Index(11)),
            ..ColumnMapping::positional()
        };
        let f = parse_reader("0.5,0x2A0,2,01,02,,,,,,,Fuzzing\n".as_bytes(), &m).unwrap();
        assert_eq!(f[0].payload[..3], [1, 2, 0]);
        assert_eq!(f[0].label, Label::Fuzzing);
    }

    #[test]
    fn normalize_extremes() {
        let f = normalize(&CanFrame::new(0.0, 1, 8, &[0xFF], Label::Normal).unwrap());
        assert_eq!((f.dlc_norm, f.byte_norm[0], f.byte_bin[0]), (1.0, 1.0, 1));
        let z = normalize(&CanFrame::new(0.0, 1, 0, &[], Label::Normal).unwrap());
        assert_eq!(z.dlc_norm, 0.0);
        assert!(z.byte_norm.iter().all(|v| *v == 0.0));
        assert!(z.byte_bin.iter().all(|v| *v == 0));
        let h = normalize(&CanFrame::new(0.0, 1, 4, &[0, 0, 0, 0x80], Label::Normal).unwrap());
        assert!((h.byte_norm[3] - 0.50196).abs() < 1e-5);
        assert_eq!(h.byte_norm[3], 128.0 / 255.0);
        assert_eq!(h.byte_bin[3], 1);
    }

    #[test]
    fn window_examples() {
        let frames: Vec<_> = (0..179).map(|_| nf(Label::Normal)).collect();
        let w = make_windows(&frames, 100).unwrap();
        assert_eq!(w.len(), 1);

        let frames: Vec<_> = (0..300).map(|_| nf(Label::Normal)).collect();
        let w = make_windows(&frames, 100).unwrap();
        assert_eq!(w.iter().map(|w| w.label).collect::<Vec<_>>(), vec![0, 0, 0]);

        let mut frames: Vec<_> = (0..200).map(|_| nf(Label::Normal)).collect();
        frames[150] = nf(Label::Fuzzing);
        let w = make_windows(&frames, 100).unwrap();
        assert_eq!(w.iter().map(|w| w.label).collect::<Vec<_>>(), vec![0, 1]);
        assert_eq!(w[1].attack_kinds(), vec![Label::Fuzzing]);

        assert!(make_windows(&[], 10).unwrap().is_empty());
        assert!(make_windows(&frames, 0).is_err());
    }

    #[test]
    fn split_sizes() {
        let r = SplitRatios::default();
        let s = split_dataset((0..10).collect::<Vec<_>>(), r).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (6, 2, 2));
        let s = split_dataset((0..5).collect::<Vec<_>>(), r).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (3, 1, 1));
        let items: Vec<usize> = (0..1237).collect();
        let s = split_dataset(items.clone(), r).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (742, 247, 248));
        let joined: Vec<usize> = s.train.into_iter().chain(s.val).chain(s.test).collect();
        assert_eq!(joined, items);

        assert!(split_dataset(vec![1, 2], r).is_err());
        let bad = SplitRatios {
            train: 0.5,
            val: 0.2,
            test: 0.2,
        };
        assert!(split_dataset((0..10).collect::<Vec<_>>(), bad).is_err());
    }

    #[test]
    fn window_dump_round_trip() {
        let frames: Vec<_> = (0..20u8)
            .map(|i| {
                let label = if i == 13 { Label::Replay } else { Label::Normal };
                normalize(&CanFrame::new(f64::from(i), 0x100 + u32::from(i), 3, &[i, 0, 0xFF], label).unwrap())
            })
            .collect();
        let windows = make_windows(&frames, 5).unwrap();
        let mut buf = Vec::new();
        write_windows_to(&windows, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("window_index,frame_ordinal,dlc_norm,byte_bin1,"));
        let back = read_windows_from(buf.as_slice()).unwrap();
        assert_eq!(back.len(), windows.len());
        for (a, b) in windows.iter().zip(&back) {
            assert_eq!((a.index, a.label), (b.index, b.label));
            for (x, y) in a.frames.iter().zip(&b.frames) {
                assert_eq!(x.byte_norm, y.byte_norm);
                assert_eq!(x.byte_bin, y.byte_bin);
                assert_eq!(x.dlc_norm, y.dlc_norm);
                assert_eq!((x.arbitration_id, x.label), (y.arbitration_id, y.label));
            }
        }
    }
}
