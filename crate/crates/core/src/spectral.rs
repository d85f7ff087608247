//! Audio descriptors: power spectrogram, MFCC, constant-Q transform,
//! chroma, and the onset envelope feeding beat estimation.

use crate::audio::{frame_signal, frame_times, AudioBuffer, AudioError, FrameSpec, Window};
use crate::features::{FeatureKind, FeatureMatrix};
use thiserror::Error;

/// Floor added before the log in the MFCC pipeline so silence stays finite.
pub const LOG_FLOOR: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error(transparent)]
    Audio(#[from] AudioError),
    #[error("bad frequency range: {0}")]
    BadRange(String),
    #[error("expected a {expected} matrix, got {got}")]
    WrongKind { expected: String, got: String },
    #[error("CQT bin {bin} at {freq:.2} Hz is at or above Nyquist ({nyquist:.2} Hz)")]
    BinAboveNyquist { bin: usize, freq: f64, nyquist: f64 },
    #[error("cannot derive a pitch class from dimension label `{0}`")]
    UnknownPitchClass(String),
}

fn wrong_kind(expected: &str, got: FeatureKind) -> SpectralError {
    SpectralError::WrongKind {
        expected: expected.to_string(),
        got: format!("{got:?}").to_lowercase(),
    }
}

// ---------------------------------------------------------------------------
// DFT

/// Iterative radix-2 FFT, in place over split re/im buffers.
fn fft_in_place(re: &mut [f64], im: &mut [f64]) {
    let n = re.len();
    debug_assert!(n.is_power_of_two());
    // bit reversal permutation
    let mut j = 0usize;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            re.swap(i, j);
            im.swap(i, j);
        }
    }
    let mut len = 2;
    while len <= n {
        let ang = -2.0 * std::f64::consts::PI / len as f64;
        let (wr, wi) = (ang.cos(), ang.sin());
        let mut start = 0;
        while start < n {
            let mut cr = 1.0;
            let mut ci = 0.0;
            for k in 0..len / 2 {
                let (ar, ai) = (re[start + k], im[start + k]);
                let (br, bi) = (re[start + k + len / 2], im[start + k + len / 2]);
                let tr = br * cr - bi * ci;
                let ti = br * ci + bi * cr;
                re[start + k] = ar + tr;
                im[start + k] = ai + ti;
                re[start + k + len / 2] = ar - tr;
                im[start + k + len / 2] = ai - ti;
                let ncr = cr * wr - ci * wi;
                ci = cr * wi + ci * wr;
                cr = ncr;
            }
            start += len;
        }
        len <<= 1;
    }
}

/// Power of the non-negative-frequency half of the DFT of a real frame.
/// Uses the FFT when the length is a power of two, a direct DFT otherwise.
pub(crate) fn power_spectrum(frame: &[f64]) -> Vec<f64> {
    let n = frame.len();
    let n_bins = n / 2 + 1;
    if n.is_power_of_two() {
        let mut re = frame.to_vec();
        let mut im = vec![0.0; n];
        fft_in_place(&mut re, &mut im);
        (0..n_bins).map(|k| re[k] * re[k] + im[k] * im[k]).collect()
    } else {
        (0..n_bins)
            .map(|k| {
                let mut sr = 0.0;
                let mut si = 0.0;
                for (t, x) in frame.iter().enumerate() {
                    let phase = -2.0 * std::f64::consts::PI * k as f64 * t as f64 / n as f64;
                    sr += x * phase.cos();
                    si += x * phase.sin();
                }
                sr * sr + si * si
            })
            .collect()
    }
}

// ---------------------------------------------------------------------------
// STFT

/// Power spectrogram: `frame_length/2 + 1` bins per frame, labeled with
/// their center frequencies.
pub fn stft_power(audio: &AudioBuffer, spec: &FrameSpec) -> Result<FeatureMatrix, SpectralError> {
    let frames = frame_signal(audio, spec)?;
    let values: Vec<Vec<f64>> = frames.iter().map(|f| power_spectrum(f)).collect();
    let n = spec.frame_length;
    let labels = (0..n / 2 + 1)
        .map(|k| format!("hz:{:?}", k as f64 * audio.sample_rate as f64 / n as f64))
        .collect();
    let times = frame_times(audio.samples.len(), spec.hop, audio.sample_rate);
    Ok(FeatureMatrix::new(FeatureKind::Spectrogram, times, labels, values)
        .expect("stft output is rectangular"))
}

// ---------------------------------------------------------------------------
// Mel / MFCC

/// Mel value of a frequency in Hz.
pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

/// Frequency in Hz of a mel value.
pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular mel filterbank, `n_mels x (n_fft/2 + 1)`, peak weight 1.
pub fn mel_filterbank(
    sample_rate: u32,
    n_fft: usize,
    n_mels: usize,
    f_min: f64,
    f_max: f64,
) -> Result<Vec<Vec<f64>>, SpectralError> {
    let nyquist = sample_rate as f64 / 2.0;
    if !(0.0 <= f_min && f_min < f_max && f_max <= nyquist) {
        return Err(SpectralError::BadRange(format!(
            "need 0 <= f_min < f_max <= {nyquist}, got [{f_min}, {f_max}]"
        )));
    }
    if n_mels < 2 {
        return Err(SpectralError::BadRange("n_mels must be >= 2".into()));
    }
    let mel_lo = hz_to_mel(f_min);
    let mel_hi = hz_to_mel(f_max);
    let edges: Vec<f64> = (0..n_mels + 2)
        .map(|i| mel_to_hz(mel_lo + (mel_hi - mel_lo) * i as f64 / (n_mels + 1) as f64))
        .collect();

    let n_bins = n_fft / 2 + 1;
    let mut bank = vec![vec![0.0; n_bins]; n_mels];
    for (m, row) in bank.iter_mut().enumerate() {
        let (left, center, right) = (edges[m], edges[m + 1], edges[m + 2]);
        for (k, w) in row.iter_mut().enumerate() {
            let f = k as f64 * sample_rate as f64 / n_fft as f64;
            let up = if center > left { (f - left) / (center - left) } else { 0.0 };
            let down = if right > center { (right - f) / (right - center) } else { 0.0 };
            *w = up.min(down).max(0.0);
        }
    }
    Ok(bank)
}

/// Orthonormal DCT-II basis, `n_out x n_in` rows.
pub(crate) fn dct_ortho_basis(n_out: usize, n_in: usize) -> Vec<Vec<f64>> {
    (0..n_out)
        .map(|k| {
            let scale = if k == 0 {
                (1.0 / n_in as f64).sqrt()
            } else {
                (2.0 / n_in as f64).sqrt()
            };
            (0..n_in)
                .map(|n| {
                    scale
                        * (std::f64::consts::PI * (2.0 * n as f64 + 1.0) * k as f64
                            / (2.0 * n_in as f64))
                            .cos()
                })
                .collect()
        })
        .collect()
}

/// Mel-frequency cepstral coefficients: power spectrogram, mel filterbank,
/// `ln(x + 1e-10)`, then an orthonormal DCT-II keeping the first
/// `n_mfcc` coefficients.
pub fn mfcc(
    audio: &AudioBuffer,
    spec: &FrameSpec,
    n_mels: usize,
    n_mfcc: usize,
) -> Result<FeatureMatrix, SpectralError> {
    if n_mfcc == 0 || n_mfcc > n_mels {
        return Err(SpectralError::BadRange(format!(
            "need 1 <= n_mfcc <= n_mels, got n_mfcc={n_mfcc}, n_mels={n_mels}"
        )));
    }
    let power = stft_power(audio, spec)?;
    let bank = mel_filterbank(
        audio.sample_rate,
        spec.frame_length,
        n_mels,
        0.0,
        audio.sample_rate as f64 / 2.0,
    )?;
    let dct = dct_ortho_basis(n_mfcc, n_mels);

    let values: Vec<Vec<f64>> = power
        .values
        .iter()
        .map(|frame| {
            let log_mel: Vec<f64> = bank
                .iter()
                .map(|filt| {
                    let e: f64 = filt.iter().zip(frame.iter()).map(|(w, p)| w * p).sum();
                    (e + LOG_FLOOR).ln()
                })
                .collect();
            dct.iter()
                .map(|row| row.iter().zip(log_mel.iter()).map(|(c, x)| c * x).sum())
                .collect()
        })
        .collect();

    let labels = (0..n_mfcc).map(|k| format!("mfcc:{k}")).collect();
    Ok(FeatureMatrix::new(FeatureKind::Mfcc, power.frame_times, labels, values)
        .expect("mfcc output is rectangular"))
}

// ---------------------------------------------------------------------------
// CQT / chroma

const NOTE_NAMES: [&str; 12] = [
    "C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B",
];

/// Note name (e.g. `A4`) for a frequency, by nearest equal-tempered pitch.
pub fn note_name(freq: f64) -> String {
    let midi = (69.0 + 12.0 * (freq / 440.0).log2()).round() as i64;
    let pc = midi.rem_euclid(12) as usize;
    let octave = midi.div_euclid(12) - 1;
    format!("{}{}", NOTE_NAMES[pc], octave)
}

/// Pitch class (0 = C) of a note-name label such as `C#1`; `None` when the
/// label is not a note name.
pub fn parse_note_label(label: &str) -> Option<u8> {
    for (pc, name) in NOTE_NAMES.iter().enumerate() {
        if let Some(rest) = label.strip_prefix(name) {
            // the remainder must be an (optionally negative) octave number,
            // which also keeps "C" from matching the sharp labels
            if !rest.is_empty() && rest.parse::<i32>().is_ok() {
                return Some(pc as u8);
            }
        }
    }
    None
}

/// Geometry of a constant-Q filterbank.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CqtSpec {
    /// Center frequency of bin 0; default C1.
    pub f_min: f64,
    pub bins_per_octave: u32,
    pub n_bins: usize,
}

impl Default for CqtSpec {
    fn default() -> Self {
        CqtSpec {
            f_min: 32.7032,
            bins_per_octave: 12,
            n_bins: 84,
        }
    }
}

impl CqtSpec {
    /// Quality factor `1 / (2^(1/B) - 1)`.
    pub fn q(&self) -> f64 {
        1.0 / (2f64.powf(1.0 / self.bins_per_octave as f64) - 1.0)
    }

    /// Center frequency of bin `k`: `f_min * 2^(k/B)`.
    pub fn bin_frequency(&self, k: usize) -> f64 {
        self.f_min * 2f64.powf(k as f64 / self.bins_per_octave as f64)
    }

    /// Per-bin window length `min(frame_length, round(Q * sr / f_k))`.
    pub fn window_length(&self, k: usize, sample_rate: u32, frame_length: usize) -> usize {
        let ideal = (self.q() * sample_rate as f64 / self.bin_frequency(k)).round() as usize;
        ideal.min(frame_length).max(1)
    }
}

/// Constant-Q magnitudes, one pitch bin per dimension, labeled with note
/// names.
///
/// Frames are sliced with `spec`'s length and hop but no analysis window:
/// each bin applies its own Hann window of length `N_k` to the frame's
/// leading samples, with kernel `e^(-2 pi i Q n / N_k)` and a `1/N_k`
/// normalization.
pub fn cqt(
    audio: &AudioBuffer,
    spec: &FrameSpec,
    cqt_spec: &CqtSpec,
) -> Result<FeatureMatrix, SpectralError> {
    let nyquist = audio.sample_rate as f64 / 2.0;
    let top = cqt_spec.bin_frequency(cqt_spec.n_bins.saturating_sub(1));
    if cqt_spec.n_bins == 0 {
        return Err(SpectralError::BadRange("n_bins must be >= 1".into()));
    }
    if top >= nyquist {
        return Err(SpectralError::BinAboveNyquist {
            bin: cqt_spec.n_bins - 1,
            freq: top,
            nyquist,
        });
    }

    let rect_spec = FrameSpec::new(spec.frame_length, spec.hop, Window::Rect)
        .expect("validated by caller's spec");
    let frames = frame_signal(audio, &rect_spec)?;

    // kernel[k][n] = hann[n] * e^(-2 pi i Q n / N_k) / N_k
    let q = cqt_spec.q();
    let kernels: Vec<(Vec<f64>, Vec<f64>)> = (0..cqt_spec.n_bins)
        .map(|k| {
            let n_k = cqt_spec.window_length(k, audio.sample_rate, spec.frame_length);
            let hann = Window::Hann.weights(n_k);
            let mut re = Vec::with_capacity(n_k);
            let mut im = Vec::with_capacity(n_k);
            for n in 0..n_k {
                let phase = -2.0 * std::f64::consts::PI * q * n as f64 / n_k as f64;
                re.push(hann[n] * phase.cos() / n_k as f64);
                im.push(hann[n] * phase.sin() / n_k as f64);
            }
            (re, im)
        })
        .collect();

    let values: Vec<Vec<f64>> = frames
        .iter()
        .map(|frame| {
            kernels
                .iter()
                .map(|(kre, kim)| {
                    let mut sr = 0.0;
                    let mut si = 0.0;
                    for (n, (r, i)) in kre.iter().zip(kim.iter()).enumerate() {
                        sr += frame[n] * r;
                        si += frame[n] * i;
                    }
                    (sr * sr + si * si).sqrt()
                })
                .collect()
        })
        .collect();

    let labels = (0..cqt_spec.n_bins)
        .map(|k| note_name(cqt_spec.bin_frequency(k)))
        .collect();
    let times = frame_times(audio.samples.len(), spec.hop, audio.sample_rate);
    Ok(FeatureMatrix::new(FeatureKind::Cqt, times, labels, values)
        .expect("cqt output is rectangular"))
}

/// Folds CQT bins into 12 pitch classes (0 = C): bin k lands in class
/// `(k + pc(bin 0)) mod 12`.
pub fn chroma(cqt_features: &FeatureMatrix) -> Result<FeatureMatrix, SpectralError> {
    if cqt_features.kind != FeatureKind::Cqt {
        return Err(wrong_kind("cqt", cqt_features.kind));
    }
    let first = cqt_features
        .dim_labels
        .first()
        .ok_or_else(|| SpectralError::UnknownPitchClass("<no labels>".into()))?;
    let pc0 = parse_note_label(first)
        .ok_or_else(|| SpectralError::UnknownPitchClass(first.clone()))? as usize;

    let values: Vec<Vec<f64>> = cqt_features
        .values
        .iter()
        .map(|row| {
            let mut folded = vec![0.0; 12];
            for (k, v) in row.iter().enumerate() {
                folded[(k + pc0) % 12] += v;
            }
            folded
        })
        .collect();
    let labels = (0..12).map(|c| format!("pc:{c}")).collect();
    Ok(FeatureMatrix::new(
        FeatureKind::Chroma,
        cqt_features.frame_times.clone(),
        labels,
        values,
    )
    .expect("chroma output is rectangular"))
}

/// Half-wave rectified spectral flux on root-magnitude spectra; one
/// dimension, first frame 0.
pub fn onset_envelope(spectrogram: &FeatureMatrix) -> Result<FeatureMatrix, SpectralError> {
    if spectrogram.kind != FeatureKind::Spectrogram {
        return Err(wrong_kind("spectrogram", spectrogram.kind));
    }
    let mut env = vec![0.0];
    for t in 1..spectrogram.n_frames() {
        let flux: f64 = spectrogram.values[t]
            .iter()
            .zip(spectrogram.values[t - 1].iter())
            .map(|(cur, prev)| (cur.sqrt() - prev.sqrt()).max(0.0))
            .sum();
        env.push(flux);
    }
    Ok(FeatureMatrix::new(
        FeatureKind::Onset,
        spectrogram.frame_times.clone(),
        vec!["onset".into()],
        env.into_iter().map(|v| vec![v]).collect(),
    )
    .expect("onset output is rectangular"))
}
