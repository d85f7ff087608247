//! Symbolic music: note events from Standard MIDI Files or CSV, and the
//! abstractions computed from them — pitch-class histograms, transition
//! counts, interval sequences, pitch-class set algebra, and
//! template-correlation key association.

mod smf;

pub use smf::{encode_vlq, parse_smf, ParsedSmf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SymbolicError {
    #[error("not a standard MIDI file (bad header)")]
    BadHeader,
    #[error("unsupported SMF format {0}; only formats 0 and 1 are accepted")]
    UnsupportedFormat(u16),
    #[error("SMPTE time division is not supported")]
    UnsupportedDivision,
    #[error("truncated track data: {0}")]
    TruncatedTrack(String),
    #[error("malformed event at byte {offset}: {message}")]
    BadEvent { offset: usize, message: String },
    #[error("variable-length quantity longer than 4 bytes")]
    VlqTooLong,
    #[error("parse error at line {line}: {message}")]
    ParseError { line: usize, message: String },
    #[error("{field} out of range: {value}")]
    RangeError { field: String, value: String },
    #[error("note list is empty")]
    EmptyList,
    #[error("pitch-class profile is all zero")]
    ZeroProfile,
}

/// One note: onset/duration in seconds, MIDI pitch, velocity, channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoteEvent {
    pub onset: f64,
    pub duration: f64,
    pub pitch: u8,
    pub velocity: u8,
    pub channel: u8,
}

impl NoteEvent {
    pub fn validate(&self) -> Result<(), SymbolicError> {
        let err = |field: &str, value: String| Err(SymbolicError::RangeError {
            field: field.into(),
            value,
        });
        if !(self.onset >= 0.0) {
            return err("onset", format!("{}", self.onset));
        }
        if !(self.duration >= 0.0) {
            return err("duration", format!("{}", self.duration));
        }
        if self.pitch > 127 {
            return err("pitch", format!("{}", self.pitch));
        }
        if self.velocity == 0 || self.velocity > 127 {
            return err("velocity", format!("{}", self.velocity));
        }
        if self.channel > 15 {
            return err("channel", format!("{}", self.channel));
        }
        Ok(())
    }

    pub fn pitch_class(&self) -> u8 {
        self.pitch % 12
    }
}

/// Notes sorted by (onset, pitch, channel), with the source file's timing
/// metadata when it came from MIDI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoteList {
    pub notes: Vec<NoteEvent>,
    pub ticks_per_quarter: Option<u16>,
    /// (tick, microseconds per quarter note), ticks non-decreasing.
    pub tempo_map: Option<Vec<(u32, u32)>>,
}

impl NoteList {
    pub fn new(mut notes: Vec<NoteEvent>) -> Self {
        sort_notes(&mut notes);
        NoteList {
            notes,
            ticks_per_quarter: None,
            tempo_map: None,
        }
    }
}

pub(crate) fn sort_notes(notes: &mut [NoteEvent]) {
    notes.sort_by(|a, b| {
        a.onset
            .total_cmp(&b.onset)
            .then(a.pitch.cmp(&b.pitch))
            .then(a.channel.cmp(&b.channel))
            .then(a.duration.total_cmp(&b.duration))
            .then(a.velocity.cmp(&b.velocity))
    });
}

/// Parses the note CSV format: header `onset,duration,pitch,velocity`,
/// one note per row. Rows are sorted on output.
pub fn parse_note_csv(text: &str) -> Result<NoteList, SymbolicError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(SymbolicError::ParseError {
        line: 1,
        message: "empty input".into(),
    })?;
    if header.trim() != "onset,duration,pitch,velocity" {
        return Err(SymbolicError::ParseError {
            line: 1,
            message: "expected header `onset,duration,pitch,velocity`".into(),
        });
    }
    let mut notes = Vec::new();
    for (idx, raw) in lines {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(SymbolicError::ParseError {
                line: idx + 1,
                message: format!("expected 4 fields, got {}", fields.len()),
            });
        }
        let parse_f64 = |s: &str| -> Result<f64, SymbolicError> {
            s.parse().map_err(|_| SymbolicError::ParseError {
                line: idx + 1,
                message: format!("bad number `{s}`"),
            })
        };
        let parse_int = |s: &str, field: &str| -> Result<u32, SymbolicError> {
            match s.parse::<u32>() {
                Ok(v) => Ok(v),
                Err(_) => match s.parse::<i64>() {
                    Ok(_) => Err(SymbolicError::RangeError {
                        field: field.into(),
                        value: s.into(),
                    }),
                    Err(_) => Err(SymbolicError::ParseError {
                        line: idx + 1,
                        message: format!("bad integer `{s}`"),
                    }),
                },
            }
        };
        let onset = parse_f64(fields[0])?;
        let duration = parse_f64(fields[1])?;
        let pitch = parse_int(fields[2], "pitch")?;
        let velocity = parse_int(fields[3], "velocity")?;
        let range_err = |field: &str, value: u32| SymbolicError::RangeError {
            field: field.into(),
            value: value.to_string(),
        };
        if pitch > 127 {
            return Err(range_err("pitch", pitch));
        }
        if velocity == 0 || velocity > 127 {
            return Err(range_err("velocity", velocity));
        }
        let note = NoteEvent {
            onset,
            duration,
            pitch: pitch as u8,
            velocity: velocity as u8,
            channel: 0,
        };
        note.validate()?;
        notes.push(note);
    }
    Ok(NoteList::new(notes))
}

// ---------------------------------------------------------------------------
// Pitch-class abstractions

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weighting {
    Count,
    Duration,
}

impl std::str::FromStr for Weighting {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "count" => Ok(Weighting::Count),
            "duration" => Ok(Weighting::Duration),
            other => Err(format!("unknown weighting `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    Raw,
    Probability,
}

/// 12 non-negative weights indexed by pitch class, 0 = C.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PitchClassProfile {
    pub weights: [f64; 12],
    pub normalization: Normalization,
}

impl PitchClassProfile {
    pub fn raw(weights: [f64; 12]) -> Self {
        PitchClassProfile {
            weights,
            normalization: Normalization::Raw,
        }
    }

    /// Probability-normalized copy; an all-zero profile stays all zero.
    pub fn to_probability(&self) -> PitchClassProfile {
        let total: f64 = self.weights.iter().sum();
        let weights = if total > 0.0 {
            let mut w = self.weights;
            for v in w.iter_mut() {
                *v /= total;
            }
            w
        } else {
            self.weights
        };
        PitchClassProfile {
            weights,
            normalization: Normalization::Probability,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.weights.iter().all(|w| *w == 0.0)
    }
}

/// Histogram of pitch classes, weighted by note count or summed duration.
pub fn pitch_class_histogram(notes: &NoteList, weighting: Weighting) -> PitchClassProfile {
    let mut weights = [0.0; 12];
    for note in &notes.notes {
        let pc = note.pitch_class() as usize;
        weights[pc] += match weighting {
            Weighting::Count => 1.0,
            Weighting::Duration => note.duration,
        };
    }
    PitchClassProfile::raw(weights)
}

/// Counts transitions between consecutive notes' pitch classes, in the
/// list's sort order. `result[from][to]`.
pub fn pc_transition_matrix(notes: &NoteList) -> [[u64; 12]; 12] {
    let mut m = [[0u64; 12]; 12];
    for pair in notes.notes.windows(2) {
        m[pair[0].pitch_class() as usize][pair[1].pitch_class() as usize] += 1;
    }
    m
}

/// Signed semitone steps between consecutive notes.
pub fn interval_sequence(notes: &NoteList) -> Result<Vec<i32>, SymbolicError> {
    if notes.notes.is_empty() {
        return Err(SymbolicError::EmptyList);
    }
    Ok(notes
        .notes
        .windows(2)
        .map(|p| p[1].pitch as i32 - p[0].pitch as i32)
        .collect())
}

// ---------------------------------------------------------------------------
// Pitch-class sets

/// Subset of the 12 pitch classes, stored as a bitmask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct PitchClassSet(u16);

impl PitchClassSet {
    pub const FULL: PitchClassSet = PitchClassSet(0x0FFF);

    pub fn from_classes<I: IntoIterator<Item = u8>>(classes: I) -> Self {
        let mut mask = 0u16;
        for c in classes {
            mask |= 1 << (c % 12);
        }
        PitchClassSet(mask)
    }

    /// Major-scale membership rooted at `tonic`.
    pub fn major_scale(tonic: u8) -> Self {
        Self::from_classes([0u8, 2, 4, 5, 7, 9, 11].iter().map(|c| (c + tonic) % 12))
    }

    /// Natural-minor-scale membership rooted at `tonic`.
    pub fn natural_minor_scale(tonic: u8) -> Self {
        Self::from_classes([0u8, 2, 3, 5, 7, 8, 10].iter().map(|c| (c + tonic) % 12))
    }

    pub fn contains(&self, class: u8) -> bool {
        self.0 & (1 << (class % 12)) != 0
    }

    pub fn members(&self) -> Vec<u8> {
        (0..12).filter(|c| self.contains(*c)).collect()
    }

    pub fn len(&self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn union(&self, other: PitchClassSet) -> PitchClassSet {
        PitchClassSet(self.0 | other.0)
    }

    pub fn intersection(&self, other: PitchClassSet) -> PitchClassSet {
        PitchClassSet(self.0 & other.0)
    }

    pub fn difference(&self, other: PitchClassSet) -> PitchClassSet {
        PitchClassSet(self.0 & !other.0)
    }

    pub fn complement(&self) -> PitchClassSet {
        PitchClassSet(!self.0 & 0x0FFF)
    }
}

/// The three disjoint regions of a two-set Venn diagram.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SetPartition {
    pub only_a: PitchClassSet,
    pub both: PitchClassSet,
    pub only_b: PitchClassSet,
}

/// Splits `a` and `b` into exclusive and shared pitch classes.
pub fn set_partition(a: PitchClassSet, b: PitchClassSet) -> SetPartition {
    SetPartition {
        only_a: a.difference(b),
        both: a.intersection(b),
        only_b: b.difference(a),
    }
}

// ---------------------------------------------------------------------------
// Key association

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Major,
    Minor,
}

/// Winning template of [`estimate_key`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeyEstimate {
    pub tonic: u8,
    pub mode: Mode,
    pub score: f64,
}

/// Correlates the profile against 24 binary scale-membership templates
/// (major and natural minor at each tonic) and returns the best match.
/// Ties break to the lower tonic, then major before minor.
pub fn estimate_key(profile: &PitchClassProfile) -> Result<KeyEstimate, SymbolicError> {
    if profile.is_zero() {
        return Err(SymbolicError::ZeroProfile);
    }
    let probs = profile.to_probability();
    let mut best: Option<KeyEstimate> = None;
    for mode in [Mode::Major, Mode::Minor] {
        for tonic in 0u8..12 {
            let set = match mode {
                Mode::Major => PitchClassSet::major_scale(tonic),
                Mode::Minor => PitchClassSet::natural_minor_scale(tonic),
            };
            let template: Vec<f64> = (0..12)
                .map(|c| if set.contains(c) { 1.0 } else { 0.0 })
                .collect();
            let score = crate::linalg::pearson(&probs.weights, &template);
            let candidate = KeyEstimate { tonic, mode, score };
            // relative major/minor templates are the same vector, so exact
            // ties are the norm; the stated order decides them
            let better = match &best {
                None => true,
                Some(b) => {
                    score > b.score
                        || (score == b.score
                            && (tonic, mode == Mode::Minor) < (b.tonic, b.mode == Mode::Minor))
                }
            };
            if better {
                best = Some(candidate);
            }
        }
    }
    Ok(best.expect("24 candidates scored"))
}

/// Human-readable key name, e.g. `A minor`.
pub fn key_name(key: &KeyEstimate) -> String {
    const NAMES: [&str; 12] = [
        "C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B",
    ];
    let mode = match key.mode {
        Mode::Major => "major",
        Mode::Minor => "minor",
    };
    format!("{} {}", NAMES[key.tonic as usize], mode)
}
