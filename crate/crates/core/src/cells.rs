//! Word-addressed storage with probe accounting.
//!
//! Every structure in this crate keeps its preprocessed data in one or more
//! [`CellArray`]s and answers queries by reading words through a
//! [`ProbeMeter`]. The meter is owned by the query session, so independent
//! queries can run in parallel each with its own count.

use std::ops::Range;

/// Immutable array of 64-bit words. Its length is the space in words.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CellArray {
    words: Vec<u64>,
}

impl CellArray {
    pub fn new(words: Vec<u64>) -> Self {
        CellArray { words }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.words.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Metered read of a single word.
    #[inline]
    pub fn read(&self, idx: usize, meter: &mut ProbeMeter) -> u64 {
        meter.touch(idx);
        self.words[idx]
    }

    /// Metered read of a contiguous run of words, one probe per word.
    pub fn read_range(&self, range: Range<usize>, meter: &mut ProbeMeter) -> &[u64] {
        for i in range.clone() {
            meter.touch(i);
        }
        &self.words[range]
    }

    /// Unmetered view, for preprocessing, serialization, and tests.
    pub fn as_words(&self) -> &[u64] {
        &self.words
    }

    pub fn into_words(self) -> Vec<u64> {
        self.words
    }

    pub fn to_le_bytes(&self) -> Vec<u8> {
        self.words.iter().flat_map(|w| w.to_le_bytes()).collect()
    }
}

/// Per-session probe counter.
///
/// `probes` counts every word read (a repeated read of the same word counts
/// again, so it is an upper bound on the number of distinct cells touched).
/// When tracing is enabled the addresses read are recorded as well.
#[derive(Clone, Debug, Default)]
pub struct ProbeMeter {
    probes: u64,
    trace: Option<Vec<usize>>,
}

impl ProbeMeter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn tracing() -> Self {
        ProbeMeter {
            probes: 0,
            trace: Some(Vec::new()),
        }
    }

    #[inline]
    pub fn probes(&self) -> u64 {
        self.probes
    }

    /// Charge probes that do not correspond to a cell of a tracked array,
    /// such as a black-box function evaluation or a random-oracle query.
    #[inline]
    pub fn charge(&mut self, n: u64) {
        self.probes += n;
    }

    #[inline]
    fn touch(&mut self, idx: usize) {
        self.probes += 1;
        if let Some(trace) = self.trace.as_mut() {
            trace.push(idx);
        }
    }

    /// Sorted, deduplicated addresses read so far. Empty unless tracing.
    pub fn touched(&self) -> Vec<usize> {
        let mut cells = self.trace.clone().unwrap_or_default();
        cells.sort_unstable();
        cells.dedup();
        cells
    }

    pub fn reset(&mut self) {
        self.probes = 0;
        if let Some(trace) = self.trace.as_mut() {
            trace.clear();
        }
    }
}

/// Aggregate probe statistics over a query workload.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ProbeStats {
    pub queries: u64,
    pub max: u64,
    pub mean: f64,
}

impl ProbeStats {
    pub fn from_counts<I: IntoIterator<Item = u64>>(counts: I) -> Self {
        let mut queries = 0u64;
        let mut max = 0u64;
        let mut total = 0u128;
        for c in counts {
            queries += 1;
            max = max.max(c);
            total += c as u128;
        }
        let mean = if queries == 0 {
            0.0
        } else {
            total as f64 / queries as f64
        };
        ProbeStats { queries, max, mean }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn meter_counts_every_read() {
        let cells = CellArray::new(vec![10, 20, 30]);
        let mut meter = ProbeMeter::tracing();
        assert_eq!(cells.read(1, &mut meter), 20);
        assert_eq!(cells.read(1, &mut meter), 20);
        assert_eq!(cells.read_range(0..3, &mut meter), &[10, 20, 30]);
        assert_eq!(meter.probes(), 5);
        assert_eq!(meter.touched(), vec![0, 1, 2]);
        meter.reset();
        assert_eq!(meter.probes(), 0);
        assert!(meter.touched().is_empty());
    }

    #[test]
    fn stats_of_empty_workload() {
        let s = ProbeStats::from_counts(std::iter::empty());
        assert_eq!(s, ProbeStats::default());
        let s = ProbeStats::from_counts([3, 5, 1]);
        assert_eq!(s.max, 5);
        assert_eq!(s.queries, 3);
        assert!((s.mean - 3.0).abs() < 1e-12);
    }
}
