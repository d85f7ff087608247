//! Standard MIDI File parsing (formats 0 and 1, PPQ division only).
//!
//! Decodes variable-length quantities, honors running status, treats
//! note-on with velocity 0 as note-off, closes unmatched note-ons at end
//! of track, and converts ticks to seconds through the tempo map
//! (default 500000 us per quarter when no tempo event is present).

use super::{sort_notes, NoteEvent, NoteList, SymbolicError};

const DEFAULT_TEMPO: u32 = 500_000; // microseconds per quarter note

/// Parse result: the notes plus a count of note-offs that matched no
/// sounding note (ignored, but reported).
#[derive(Debug, Clone)]
pub struct ParsedSmf {
    pub notes: NoteList,
    pub dangling_note_offs: usize,
}

/// Encodes a value (< 2^28) as a MIDI variable-length quantity.
pub fn encode_vlq(value: u32) -> Vec<u8> {
    debug_assert!(value < (1 << 28));
    let mut groups = vec![(value & 0x7F) as u8];
    let mut rest = value >> 7;
    while rest > 0 {
        groups.push((rest & 0x7F) as u8 | 0x80);
        rest >>= 7;
    }
    groups.reverse();
    groups
}

/// Decodes a variable-length quantity starting at `*pos`, advancing it.
/// Sequences longer than 4 bytes are rejected.
pub fn decode_vlq(bytes: &[u8], pos: &mut usize) -> Result<u32, SymbolicError> {
    let mut value: u32 = 0;
    for i in 0.. {
        if i == 4 {
            return Err(SymbolicError::VlqTooLong);
        }
        let b = *bytes
            .get(*pos)
            .ok_or_else(|| SymbolicError::TruncatedTrack("vlq".into()))?;
        *pos += 1;
        value = (value << 7) | (b & 0x7F) as u32;
        if b & 0x80 == 0 {
            break;
        }
    }
    Ok(value)
}

struct RawNote {
    start_tick: u32,
    end_tick: u32,
    pitch: u8,
    velocity: u8,
    channel: u8,
}

/// Parses an SMF byte stream into a merged, sorted note list.
pub fn parse_smf(bytes: &[u8]) -> Result<ParsedSmf, SymbolicError> {
    if bytes.len() < 14 || &bytes[0..4] != b"MThd" {
        return Err(SymbolicError::BadHeader);
    }
    let header_len = u32::from_be_bytes([bytes[4], bytes[5], bytes[6], bytes[7]]) as usize;
    if header_len < 6 || 8 + header_len > bytes.len() {
        return Err(SymbolicError::BadHeader);
    }
    let format = u16::from_be_bytes([bytes[8], bytes[9]]);
    if format > 1 {
        return Err(SymbolicError::UnsupportedFormat(format));
    }
    let n_tracks = u16::from_be_bytes([bytes[10], bytes[11]]) as usize;
    let division = u16::from_be_bytes([bytes[12], bytes[13]]);
    if division & 0x8000 != 0 {
        return Err(SymbolicError::UnsupportedDivision);
    }
    if division == 0 {
        return Err(SymbolicError::BadHeader);
    }
    let ppq = division;

    let mut raw_notes: Vec<RawNote> = Vec::new();
    let mut tempo_events: Vec<(u32, u32)> = Vec::new();
    let mut dangling = 0usize;

    let mut pos = 8 + header_len;
    let mut tracks_seen = 0;
    while tracks_seen < n_tracks {
        if pos + 8 > bytes.len() {
            return Err(SymbolicError::TruncatedTrack("track header".into()));
        }
        let id = &bytes[pos..pos + 4];
        let len =
            u32::from_be_bytes([bytes[pos + 4], bytes[pos + 5], bytes[pos + 6], bytes[pos + 7]])
                as usize;
        let body_start = pos + 8;
        let body_end = body_start + len;
        if body_end > bytes.len() {
            return Err(SymbolicError::TruncatedTrack(
                String::from_utf8_lossy(id).into_owned(),
            ));
        }
        if id == b"MTrk" {
            parse_track(
                &bytes[body_start..body_end],
                &mut raw_notes,
                &mut tempo_events,
                &mut dangling,
            )?;
            tracks_seen += 1;
        }
        pos = body_end;
    }

    tempo_events.sort_by_key(|&(tick, _)| tick);
    let seconds = |tick: u32| tick_to_seconds(tick, ppq, &tempo_events);

    let mut notes: Vec<NoteEvent> = raw_notes
        .iter()
        .map(|n| {
            let onset = seconds(n.start_tick);
            NoteEvent {
                onset,
                duration: seconds(n.end_tick) - onset,
                pitch: n.pitch,
                velocity: n.velocity,
                channel: n.channel,
            }
        })
        .collect();
    sort_notes(&mut notes);

    Ok(ParsedSmf {
        notes: NoteList {
            notes,
            ticks_per_quarter: Some(ppq),
            tempo_map: if tempo_events.is_empty() {
                None
            } else {
                Some(tempo_events)
            },
        },
        dangling_note_offs: dangling,
    })
}

fn tick_to_seconds(tick: u32, ppq: u16, tempo_events: &[(u32, u32)]) -> f64 {
    let mut seconds = 0.0;
    let mut cur_tick = 0u32;
    let mut cur_tempo = DEFAULT_TEMPO;
    for &(ev_tick, tempo) in tempo_events {
        if ev_tick >= tick {
            break;
        }
        seconds += (ev_tick - cur_tick) as f64 * cur_tempo as f64 / (ppq as f64 * 1e6);
        cur_tick = ev_tick;
        cur_tempo = tempo;
    }
    seconds + (tick - cur_tick) as f64 * cur_tempo as f64 / (ppq as f64 * 1e6)
}

fn parse_track(
    track: &[u8],
    raw_notes: &mut Vec<RawNote>,
    tempo_events: &mut Vec<(u32, u32)>,
    dangling: &mut usize,
) -> Result<(), SymbolicError> {
    let mut pos = 0usize;
    let mut tick: u32 = 0;
    let mut running_status: Option<u8> = None;
    // open note-ons per (channel, pitch), closed first-in-first-out
    let mut open: Vec<(u8, u8, u32, u8)> = Vec::new(); // (channel, pitch, start_tick, velocity)

    let read = |track: &[u8], pos: &mut usize, what: &str| -> Result<u8, SymbolicError> {
        let b = *track
            .get(*pos)
            .ok_or_else(|| SymbolicError::TruncatedTrack(what.into()))?;
        *pos += 1;
        Ok(b)
    };

    while pos < track.len() {
        tick = tick.wrapping_add(decode_vlq(track, &mut pos)?);
        let first = read(track, &mut pos, "status")?;
        let status = if first & 0x80 != 0 {
            if first < 0xF0 {
                running_status = Some(first);
            }
            first
        } else {
            pos -= 1; // data byte: reuse the running status
            running_status.ok_or(SymbolicError::BadEvent {
                offset: pos,
                message: "data byte with no running status".into(),
            })?
        };

        match status {
            0x80..=0xEF => {
                let kind = status & 0xF0;
                let channel = status & 0x0F;
                let d1 = read(track, &mut pos, "data byte")? & 0x7F;
                let d2 = if kind == 0xC0 || kind == 0xD0 {
                    0
                } else {
                    read(track, &mut pos, "data byte")? & 0x7F
                };
                match kind {
                    0x90 if d2 > 0 => open.push((channel, d1, tick, d2)),
                    0x80 | 0x90 => {
                        // note-off, or note-on with velocity 0
                        if let Some(i) = open
                            .iter()
                            .position(|(ch, p, _, _)| *ch == channel && *p == d1)
                        {
                            let (_, pitch, start, vel) = open.remove(i);
                            raw_notes.push(RawNote {
                                start_tick: start,
                                end_tick: tick,
                                pitch,
                                velocity: vel,
                                channel,
                            });
                        } else {
                            *dangling += 1;
                        }
                    }
                    _ => {}
                }
            }
            0xFF => {
                running_status = None;
                let meta_type = read(track, &mut pos, "meta type")?;
                let len = decode_vlq(track, &mut pos)? as usize;
                if pos + len > track.len() {
                    return Err(SymbolicError::TruncatedTrack("meta event".into()));
                }
                if meta_type == 0x51 && len == 3 {
                    let tempo = ((track[pos] as u32) << 16)
                        | ((track[pos + 1] as u32) << 8)
                        | track[pos + 2] as u32;
                    tempo_events.push((tick, tempo));
                }
                pos += len;
                if meta_type == 0x2F {
                    break; // end of track
                }
            }
            0xF0 | 0xF7 => {
                running_status = None;
                let len = decode_vlq(track, &mut pos)? as usize;
                if pos + len > track.len() {
                    return Err(SymbolicError::TruncatedTrack("sysex".into()));
                }
                pos += len;
            }
            other => {
                return Err(SymbolicError::BadEvent {
                    offset: pos,
                    message: format!("unexpected status byte 0x{other:02X}"),
                })
            }
        }
    }

    // close anything still sounding at end of track
    for (channel, pitch, start, vel) in open {
        raw_notes.push(RawNote {
            start_tick: start,
            end_tick: tick,
            pitch,
            velocity: vel,
            channel,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Minimal SMF builder for fixtures.
    pub(crate) fn smf(format: u16, division: u16, tracks: &[Vec<u8>]) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(b"MThd");
        out.extend_from_slice(&6u32.to_be_bytes());
        out.extend_from_slice(&format.to_be_bytes());
        out.extend_from_slice(&(tracks.len() as u16).to_be_bytes());
        out.extend_from_slice(&division.to_be_bytes());
        for t in tracks {
            out.extend_from_slice(b"MTrk");
            out.extend_from_slice(&(t.len() as u32).to_be_bytes());
            out.extend_from_slice(t);
        }
        out
    }

    fn end_of_track(events: &mut Vec<u8>) {
        events.extend_from_slice(&[0x00, 0xFF, 0x2F, 0x00]);
    }

    #[test]
    fn vlq_single_bytes() {
        assert_eq!(decode_vlq(&[0x00], &mut 0).unwrap(), 0);
        assert_eq!(decode_vlq(&[0x7F], &mut 0).unwrap(), 127);
    }

    #[test]
    fn vlq_continuation() {
        assert_eq!(decode_vlq(&[0x81, 0x00], &mut 0).unwrap(), 128);
        assert_eq!(decode_vlq(&[0xFF, 0x7F], &mut 0).unwrap(), 16383);
        assert_eq!(
            decode_vlq(&[0xFF, 0xFF, 0xFF, 0x7F], &mut 0).unwrap(),
            (1 << 28) - 1
        );
    }

    #[test]
    fn vlq_rejects_five_bytes_and_truncation() {
        assert!(matches!(
            decode_vlq(&[0xFF, 0xFF, 0xFF, 0xFF, 0x7F], &mut 0),
            Err(SymbolicError::VlqTooLong)
        ));
        assert!(matches!(
            decode_vlq(&[0x81], &mut 0),
            Err(SymbolicError::TruncatedTrack(_))
        ));
    }

    #[test]
    fn vlq_encode_examples() {
        assert_eq!(encode_vlq(0), vec![0x00]);
        assert_eq!(encode_vlq(127), vec![0x7F]);
        assert_eq!(encode_vlq(128), vec![0x81, 0x00]);
        assert_eq!(encode_vlq(16383), vec![0xFF, 0x7F]);
    }

    #[test]
    fn default_tempo_note_duration() {
        // note-on pitch 60 at tick 0, note-off at tick 480, division 480:
        // 480 ticks at 500000 us/480 ticks-per-quarter -> 0.5 s
        let mut t = vec![0x00, 0x90, 60, 64];
        t.extend_from_slice(&[0x83, 0x60]); // delta 480
        t.extend_from_slice(&[0x80, 60, 0]);
        end_of_track(&mut t);
        let parsed = parse_smf(&smf(0, 480, &[t])).unwrap();
        assert_eq!(parsed.notes.notes.len(), 1);
        let n = &parsed.notes.notes[0];
        assert_eq!(n.onset, 0.0);
        assert!((n.duration - 0.5).abs() < 1e-12);
        assert_eq!(n.pitch, 60);
        assert_eq!(parsed.notes.ticks_per_quarter, Some(480));
        assert!(parsed.notes.tempo_map.is_none());
        assert_eq!(parsed.dangling_note_offs, 0);
    }

    #[test]
    fn running_status_and_velocity_zero_note_off() {
        // two notes via running status; second closed by note-on v=0
        let mut t = vec![0x00, 0x90, 60, 64];
        t.extend_from_slice(&[0x60, 60, 0]); // delta 96, running 0x90, v0 = off
        t.extend_from_slice(&[0x00, 62, 80]); // note-on 62
        t.extend_from_slice(&[0x60, 62, 0]);
        end_of_track(&mut t);
        let parsed = parse_smf(&smf(0, 96, &[t])).unwrap();
        assert_eq!(parsed.notes.notes.len(), 2);
        assert!((parsed.notes.notes[0].duration - 0.5).abs() < 1e-12);
        assert_eq!(parsed.notes.notes[1].pitch, 62);
        assert!((parsed.notes.notes[1].onset - 0.5).abs() < 1e-12);
    }

    #[test]
    fn tempo_change_scales_seconds() {
        // tempo doubles speed halfway through a whole note
        let mut t = vec![0x00, 0x90, 60, 64];
        t.extend_from_slice(&[0x83, 0x60]); // delta 480 (one quarter at 120 ticks? no: ppq=480)
        t.extend_from_slice(&[0xFF, 0x51, 0x03, 0x03, 0xD0, 0x90]); // 250000 us/quarter
        t.extend_from_slice(&[0x83, 0x60]); // another 480 ticks
        t.extend_from_slice(&[0x80, 60, 0]);
        end_of_track(&mut t);
        let parsed = parse_smf(&smf(0, 480, &[t])).unwrap();
        let n = &parsed.notes.notes[0];
        // 480 ticks at 0.5 s/quarter + 480 ticks at 0.25 s/quarter
        assert!((n.duration - 0.75).abs() < 1e-12);
        assert_eq!(parsed.notes.tempo_map, Some(vec![(480, 250_000)]));
    }

    #[test]
    fn format1_tracks_merge_and_sort() {
        let mut tempo_track = vec![0x00, 0xFF, 0x51, 0x03, 0x07, 0xA1, 0x20]; // 500000, explicit
        end_of_track(&mut tempo_track);
        let mut t1 = vec![0x00, 0x90, 64, 64, 0x60, 0x80, 64, 0];
        end_of_track(&mut t1);
        let mut t2 = vec![0x00, 0x91, 60, 64, 0x60, 0x81, 60, 0];
        end_of_track(&mut t2);
        let parsed = parse_smf(&smf(1, 96, &[tempo_track, t1, t2])).unwrap();
        let pitches: Vec<u8> = parsed.notes.notes.iter().map(|n| n.pitch).collect();
        assert_eq!(pitches, vec![60, 64]); // same onset, sorted by pitch
        assert_eq!(parsed.notes.notes[0].channel, 1);
    }

    #[test]
    fn unmatched_note_on_closes_at_end_of_track() {
        let mut t = vec![0x00, 0x90, 60, 64];
        // end-of-track arrives 480 ticks later with the note still open
        t.extend_from_slice(&[0x83, 0x60, 0xFF, 0x2F, 0x00]);
        let parsed = parse_smf(&smf(0, 480, &[t])).unwrap();
        assert_eq!(parsed.notes.notes.len(), 1);
        assert!((parsed.notes.notes[0].duration - 0.5).abs() < 1e-12);
    }

    #[test]
    fn dangling_note_off_is_counted_not_fatal() {
        let mut t = vec![0x00, 0x80, 60, 0]; // off with nothing sounding
        t.extend_from_slice(&[0x00, 0x90, 62, 64, 0x60, 0x80, 62, 0]);
        end_of_track(&mut t);
        let parsed = parse_smf(&smf(0, 96, &[t])).unwrap();
        assert_eq!(parsed.dangling_note_offs, 1);
        assert_eq!(parsed.notes.notes.len(), 1);
    }

    #[test]
    fn header_and_format_errors() {
        assert!(matches!(
            parse_smf(b"RIFFxxxxxxxxxx"),
            Err(SymbolicError::BadHeader)
        ));
        assert!(matches!(
            parse_smf(&smf(2, 96, &[vec![0x00, 0xFF, 0x2F, 0x00]])),
            Err(SymbolicError::UnsupportedFormat(2))
        ));
        // SMPTE division has the high bit set
        assert!(matches!(
            parse_smf(&smf(0, 0xE728, &[vec![0x00, 0xFF, 0x2F, 0x00]])),
            Err(SymbolicError::UnsupportedDivision)
        ));
    }

    #[test]
    fn truncated_track_errors() {
        let good = smf(0, 96, &[vec![0x00, 0x90, 60, 64, 0x60, 0x80, 60, 0]]);
        let cut = &good[..good.len() - 3];
        assert!(matches!(
            parse_smf(cut),
            Err(SymbolicError::TruncatedTrack(_))
        ));
    }

    proptest! {
        #[test]
        fn vlq_encode_decode_identity(value in 0u32..(1 << 28)) {
            let bytes = encode_vlq(value);
            prop_assert!(bytes.len() <= 4);
            let mut pos = 0;
            let back = decode_vlq(&bytes, &mut pos).unwrap();
            prop_assert_eq!(back, value);
            prop_assert_eq!(pos, bytes.len());
        }
    }
}
