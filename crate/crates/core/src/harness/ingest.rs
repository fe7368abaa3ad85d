//! Turning detection timestamps into aligned bin pairs.
//!
//! Time is cut into frames of `frame_len` units starting at 0 and each frame
//! into `2^M` equal bins. A frame is effective when both parties recorded
//! exactly one detection in it; only effective frames produce symbols.

use std::fmt;

use crate::channel::OffsetHistogram;
use crate::error::{parse_err, usage, Result};

/// Origin of a [`FramePairBatch`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    Synthetic,
    Ingested,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Synthetic => "synthetic",
            Provenance::Ingested => "ingested",
        })
    }
}

/// Aligned bin indices of Alice and Bob.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FramePairBatch {
    bits: u8,
    alice_bins: Vec<u16>,
    bob_bins: Vec<u16>,
    pub provenance: Provenance,
}

impl FramePairBatch {
    pub fn new(bits: u8, alice_bins: Vec<u16>, bob_bins: Vec<u16>, provenance: Provenance) -> Result<Self> {
        if alice_bins.len() != bob_bins.len() {
            return Err(usage(format!(
                "{} Alice bins against {} Bob bins",
                alice_bins.len(),
                bob_bins.len()
            )));
        }
        let q = 1u32 << bits;
        if alice_bins.iter().chain(&bob_bins).any(|&b| u32::from(b) >= q) {
            return Err(usage(format!("bin index out of range for M = {bits}")));
        }
        Ok(Self {
            bits,
            alice_bins,
            bob_bins,
            provenance,
        })
    }

    pub fn bits(&self) -> u8 {
        self.bits
    }

    pub fn len(&self) -> usize {
        self.alice_bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alice_bins.is_empty()
    }

    pub fn alice_bins(&self) -> &[u16] {
        &self.alice_bins
    }

    pub fn bob_bins(&self) -> &[u16] {
        &self.bob_bins
    }

    /// Histogram of `bob - alice` bin offsets.
    pub fn offset_histogram(&self) -> OffsetHistogram {
        OffsetHistogram::from_offsets(
            self.alice_bins
                .iter()
                .zip(&self.bob_bins)
                .map(|(&a, &b)| i64::from(b) - i64::from(a)),
        )
    }

    /// One `alice bob` pair per line.
    pub fn to_text(&self) -> String {
        let mut s = String::with_capacity(self.len() * 8);
        for (a, b) in self.alice_bins.iter().zip(&self.bob_bins) {
            s.push_str(&format!("{a} {b}\n"));
        }
        s
    }
}

/// Frame counts from one ingestion.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IngestStats {
    /// Frames from 0 up to the last one holding any detection.
    pub total_frames: u64,
    pub effective: u64,
    /// No detection on either side.
    pub empty: u64,
    /// More than one detection on at least one side.
    pub multiple: u64,
    /// Exactly one side saw nothing, the other at most one detection.
    pub unpaired: u64,
}

impl IngestStats {
    pub fn discarded(&self) -> u64 {
        self.total_frames - self.effective
    }
}

/// Parses one non-negative integer timestamp per line. Blank lines and
/// lines starting with `#` are skipped.
pub fn read_timestamps(text: &str) -> Result<Vec<u64>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        out.push(
            t.parse::<u64>()
                .map_err(|e| parse_err(i + 1, format!("bad timestamp {t:?}: {e}")))?,
        );
    }
    Ok(out)
}

/// Groups a sorted stream by frame; yields `(frame, first time, count)`.
fn frames(stream: &[u64], frame_len: u64) -> Vec<(u64, u64, u32)> {
    let mut out: Vec<(u64, u64, u32)> = Vec::new();
    for &t in stream {
        let f = t / frame_len;
        match out.last_mut() {
            Some(last) if last.0 == f => last.2 += 1,
            _ => out.push((f, t, 1)),
        }
    }
    out
}

/// Keeps frames where both parties have exactly one detection and returns
/// their bin pairs with frame statistics.
pub fn ingest_timestamps(
    alice: &[u64],
    bob: &[u64],
    frame_len: u64,
    bits: u8,
) -> Result<(FramePairBatch, IngestStats)> {
    if frame_len == 0 {
        return Err(usage("frame length must be positive"));
    }
    if !(1..=16).contains(&bits) {
        return Err(usage(format!("bits per symbol {bits} out of range")));
    }
    for (name, s) in [("Alice", alice), ("Bob", bob)] {
        if let Some(i) = s.windows(2).position(|w| w[1] < w[0]) {
            return Err(usage(format!("{name}'s stream is not sorted at entry {}", i + 2)));
        }
    }
    let bin_count = 1u128 << bits;
    let bin = |t: u64| ((u128::from(t % frame_len) * bin_count) / u128::from(frame_len)) as u16;
    let fa = frames(alice, frame_len);
    let fb = frames(bob, frame_len);
    let mut stats = IngestStats::default();
    let last = fa.last().map(|f| f.0).max(fb.last().map(|f| f.0));
    stats.total_frames = last.map_or(0, |f| f + 1);
    let (mut ab, mut bb) = (Vec::new(), Vec::new());
    let (mut i, mut j) = (0, 0);
    let mut occupied = 0;
    while i < fa.len() || j < fb.len() {
        let f = match (fa.get(i), fb.get(j)) {
            (Some(a), Some(b)) => a.0.min(b.0),
            (Some(a), None) => a.0,
            (None, Some(b)) => b.0,
            (None, None) => unreachable!(),
        };
        let a = fa.get(i).filter(|x| x.0 == f);
        let b = fb.get(j).filter(|x| x.0 == f);
        i += usize::from(a.is_some());
        j += usize::from(b.is_some());
        occupied += 1;
        let (na, nb) = (a.map_or(0, |x| x.2), b.map_or(0, |x| x.2));
        if na > 1 || nb > 1 {
            stats.multiple += 1;
        } else if na == 1 && nb == 1 {
            stats.effective += 1;
            ab.push(bin(a.unwrap().1));
            bb.push(bin(b.unwrap().1));
        } else {
            stats.unpaired += 1;
        }
    }
    stats.empty = stats.total_frames - occupied;
    let batch = FramePairBatch::new(bits, ab, bb, Provenance::Ingested)?;
    Ok((batch, stats))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_streams_pair_up() {
        let t = [5u64, 130, 260, 399];
        let (b, s) = ingest_timestamps(&t, &t, 100, 3).unwrap();
        assert_eq!(b.alice_bins(), b.bob_bins());
        assert_eq!(b.alice_bins(), &[0, 2, 4, 7]);
        assert_eq!(s.effective, 4);
        assert_eq!(s.total_frames, 4);
        assert_eq!(s.discarded(), 0);
    }

    #[test]
    fn discard_reasons() {
        // frames: 0 ok, 1 Alice double, 2 Bob missing, 3 empty, 4 ok
        let a = [10u64, 110, 150, 210, 470];
        let b = [12u64, 120, 480];
        let (batch, s) = ingest_timestamps(&a, &b, 100, 2).unwrap();
        assert_eq!(batch.len(), 2);
        assert_eq!(
            s,
            IngestStats {
                total_frames: 5,
                effective: 2,
                empty: 1,
                multiple: 1,
                unpaired: 1,
            }
        );
        assert_eq!(batch.provenance, Provenance::Ingested);
    }

    #[test]
    fn unsorted_and_empty() {
        assert!(ingest_timestamps(&[5, 3], &[1], 10, 2).is_err());
        assert!(ingest_timestamps(&[1], &[1], 0, 2).is_err());
        let (b, s) = ingest_timestamps(&[], &[], 10, 2).unwrap();
        assert!(b.is_empty());
        assert_eq!(s.total_frames, 0);
    }

    #[test]
    fn reading() {
        assert_eq!(read_timestamps("# t\n1\n\n 20 \n").unwrap(), vec![1, 20]);
        assert!(read_timestamps("1\nx\n").is_err());
        assert!(FramePairBatch::new(2, vec![1], vec![], Provenance::Synthetic).is_err());
        assert!(FramePairBatch::new(2, vec![4], vec![0], Provenance::Synthetic).is_err());
    }
}
