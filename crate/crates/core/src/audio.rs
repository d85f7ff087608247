//! WAV decoding and frame slicing.
//!
//! Accepts RIFF/WAVE files holding 16-bit PCM or 32-bit IEEE float
//! samples in one or two channels. Stereo is downmixed by per-sample
//! channel mean and everything is normalized into `[-1, 1]`.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AudioError {
    #[error("not a RIFF/WAVE stream")]
    BadMagic,
    #[error("unsupported encoding: {0}")]
    UnsupportedEncoding(String),
    #[error("truncated chunk: {0}")]
    TruncatedChunk(String),
    #[error("signal is empty")]
    EmptySignal,
    #[error("sample rate must be positive")]
    BadSampleRate,
    #[error("sample out of range at index {0}")]
    SampleOutOfRange(usize),
    #[error("invalid frame spec: {0}")]
    BadFrameSpec(String),
}

/// Decoded mono sample stream.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl AudioBuffer {
    /// Wraps normalized samples, checking the `[-1, 1]` range invariant.
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self, AudioError> {
        if sample_rate == 0 {
            return Err(AudioError::BadSampleRate);
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite() || s.abs() > 1.0) {
            return Err(AudioError::SampleOutOfRange(i));
        }
        Ok(AudioBuffer {
            samples,
            sample_rate,
        })
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

/// Analysis window shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Window {
    Hann,
    Hamming,
    Rect,
}

impl Window {
    /// Symmetric window weights of the given length, all in `[0, 1]`.
    pub fn weights(self, len: usize) -> Vec<f64> {
        if len == 1 {
            return vec![1.0];
        }
        let denom = (len - 1) as f64;
        (0..len)
            .map(|n| {
                let phase = 2.0 * std::f64::consts::PI * n as f64 / denom;
                match self {
                    Window::Hann => 0.5 * (1.0 - phase.cos()),
                    Window::Hamming => 0.54 - 0.46 * phase.cos(),
                    Window::Rect => 1.0,
                }
            })
            .collect()
    }
}

impl std::str::FromStr for Window {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "hann" => Ok(Window::Hann),
            "hamming" => Ok(Window::Hamming),
            "rect" => Ok(Window::Rect),
            other => Err(format!("unknown window `{other}`")),
        }
    }
}

/// Frame length, hop and window for short-time analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameSpec {
    pub frame_length: usize,
    pub hop: usize,
    pub window: Window,
}

impl FrameSpec {
    pub fn new(frame_length: usize, hop: usize, window: Window) -> Result<Self, AudioError> {
        if frame_length == 0 {
            return Err(AudioError::BadFrameSpec("frame_length must be > 0".into()));
        }
        if hop == 0 || hop > frame_length {
            return Err(AudioError::BadFrameSpec(
                "hop must satisfy 0 < hop <= frame_length".into(),
            ));
        }
        Ok(FrameSpec {
            frame_length,
            hop,
            window,
        })
    }
}

fn read_u32(bytes: &[u8], at: usize) -> Option<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
}

fn read_u16(bytes: &[u8], at: usize) -> Option<u16> {
    bytes.get(at..at + 2).map(|b| u16::from_le_bytes([b[0], b[1]]))
}

/// Decodes a RIFF/WAVE byte stream into a normalized mono buffer.
///
/// 16-bit samples are divided by 32768; float samples are clamped into
/// `[-1, 1]`; stereo frames are averaged.
pub fn decode_wav(bytes: &[u8]) -> Result<AudioBuffer, AudioError> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(AudioError::BadMagic);
    }

    let mut fmt: Option<(u16, u16, u32, u16)> = None; // format, channels, rate, bits
    let mut data: Option<&[u8]> = None;
    let mut pos = 12;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = read_u32(bytes, pos + 4)
            .ok_or_else(|| AudioError::TruncatedChunk("chunk size".into()))? as usize;
        let body_start = pos + 8;
        let body_end = body_start + size;
        if body_end > bytes.len() {
            return Err(AudioError::TruncatedChunk(
                String::from_utf8_lossy(id).into_owned(),
            ));
        }
        match id {
            b"fmt " => {
                if size < 16 {
                    return Err(AudioError::TruncatedChunk("fmt ".into()));
                }
                let format = read_u16(bytes, body_start).unwrap();
                let channels = read_u16(bytes, body_start + 2).unwrap();
                let rate = read_u32(bytes, body_start + 4).unwrap();
                let bits = read_u16(bytes, body_start + 14).unwrap();
                fmt = Some((format, channels, rate, bits));
            }
            b"data" => data = Some(&bytes[body_start..body_end]),
            _ => {}
        }
        // chunk bodies are padded to even length
        pos = body_end + (size & 1);
    }

    let (format, channels, rate, bits) =
        fmt.ok_or_else(|| AudioError::TruncatedChunk("missing fmt chunk".into()))?;
    let data = data.ok_or_else(|| AudioError::TruncatedChunk("missing data chunk".into()))?;
    if rate == 0 {
        return Err(AudioError::BadSampleRate);
    }
    if channels == 0 || channels > 2 {
        return Err(AudioError::UnsupportedEncoding(format!(
            "{channels} channels"
        )));
    }
    let ch = channels as usize;

    let samples: Vec<f64> = match (format, bits) {
        (1, 16) => {
            let per_frame = 2 * ch;
            let n_frames = data.len() / per_frame;
            (0..n_frames)
                .map(|f| {
                    let mut acc = 0.0;
                    for c in 0..ch {
                        let at = f * per_frame + 2 * c;
                        let v = i16::from_le_bytes([data[at], data[at + 1]]);
                        acc += v as f64 / 32768.0;
                    }
                    acc / ch as f64
                })
                .collect()
        }
        (3, 32) => {
            let per_frame = 4 * ch;
            let n_frames = data.len() / per_frame;
            (0..n_frames)
                .map(|f| {
                    let mut acc = 0.0;
                    for c in 0..ch {
                        let at = f * per_frame + 4 * c;
                        let v =
                            f32::from_le_bytes([data[at], data[at + 1], data[at + 2], data[at + 3]]);
                        acc += (v as f64).clamp(-1.0, 1.0);
                    }
                    acc / ch as f64
                })
                .collect()
        }
        (f, b) => {
            return Err(AudioError::UnsupportedEncoding(format!(
                "format {f}, {b}-bit"
            )))
        }
    };

    AudioBuffer::new(samples, rate)
}

/// Encodes a mono buffer as 16-bit PCM WAV. Values produced by
/// [`decode_wav`] from PCM16 input round-trip exactly.
pub fn encode_wav_pcm16(audio: &AudioBuffer) -> Vec<u8> {
    let n = audio.samples.len();
    let data_len = (2 * n) as u32;
    let mut out = Vec::with_capacity(44 + 2 * n);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes()); // PCM
    out.extend_from_slice(&1u16.to_le_bytes()); // mono
    out.extend_from_slice(&audio.sample_rate.to_le_bytes());
    out.extend_from_slice(&(audio.sample_rate * 2).to_le_bytes()); // byte rate
    out.extend_from_slice(&2u16.to_le_bytes()); // block align
    out.extend_from_slice(&16u16.to_le_bytes()); // bits
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    for s in &audio.samples {
        let v = (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Mirror-without-edge reflection of index `i` into `0..n`.
fn reflect_index(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let mut m = i % period;
    if m < 0 {
        m += period;
    }
    if m < n as isize {
        m as usize
    } else {
        (period - m) as usize
    }
}

/// Slices a signal into overlapping windowed frames.
///
/// The signal is reflection-padded by `frame_length / 2` on the left so
/// frame `i` is centered on sample `i * hop`; the right padding extends
/// far enough that every frame is full. Frame count is
/// `1 + len / hop`.
pub fn frame_signal(audio: &AudioBuffer, spec: &FrameSpec) -> Result<Vec<Vec<f64>>, AudioError> {
    if audio.samples.is_empty() {
        return Err(AudioError::EmptySignal);
    }
    let n = audio.samples.len();
    let fl = spec.frame_length;
    let left = fl / 2;
    let n_frames = 1 + n / spec.hop;
    let weights = spec.window.weights(fl);

    let mut frames = Vec::with_capacity(n_frames);
    for f in 0..n_frames {
        let start = f as isize * spec.hop as isize - left as isize;
        let frame: Vec<f64> = (0..fl)
            .map(|j| audio.samples[reflect_index(start + j as isize, n)] * weights[j])
            .collect();
        frames.push(frame);
    }
    Ok(frames)
}

/// Frame times matching [`frame_signal`]'s output: `i * hop / sample_rate`.
pub fn frame_times(n_samples: usize, hop: usize, sample_rate: u32) -> Vec<f64> {
    let n_frames = 1 + n_samples / hop;
    (0..n_frames)
        .map(|i| (i * hop) as f64 / sample_rate as f64)
        .collect()
}
