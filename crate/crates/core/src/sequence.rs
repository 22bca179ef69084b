//! Event sequences on an observation window `(0, t_end]`.
//!
//! Marks are stored zero-based in memory (`0..K`) and written one-based
//! (`1..=K`) in the JSONL sequence format.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservationWindow {
    t_end: f64,
}

impl ObservationWindow {
    pub fn new(t_end: f64) -> Result<Self> {
        if t_end.is_finite() && t_end > 0.0 {
            Ok(Self { t_end })
        } else {
            Err(Error::InvalidWindow(t_end))
        }
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }
}

/// The events strictly before some index of a sequence.
#[derive(Debug, Clone, Copy)]
pub struct History<'a> {
    times: &'a [f64],
    marks: Option<&'a [usize]>,
}

impl<'a> History<'a> {
    pub fn new(times: &'a [f64], marks: Option<&'a [usize]>) -> Self {
        if let Some(m) = marks {
            debug_assert_eq!(m.len(), times.len());
        }
        Self { times, marks }
    }

    pub fn empty() -> History<'static> {
        History {
            times: &[],
            marks: None,
        }
    }

    pub fn times(&self) -> &'a [f64] {
        self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<f64> {
        self.times.last().copied()
    }

    pub fn mark(&self, j: usize) -> usize {
        self.marks.map_or(0, |m| m[j])
    }

    /// `(time, type)` pairs in order.
    pub fn iter(&self) -> impl Iterator<Item = (f64, usize)> + 'a {
        let marks = self.marks;
        self.times
            .iter()
            .enumerate()
            .map(move |(j, &t)| (t, marks.map_or(0, |m| m[j])))
    }

    /// Events strictly before `t`.
    pub fn before(&self, t: f64) -> History<'a> {
        let n = self.times.partition_point(|&s| s < t);
        self.prefix(n)
    }

    pub fn prefix(&self, n: usize) -> History<'a> {
        History {
            times: &self.times[..n],
            marks: self.marks.map(|m| &m[..n]),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventSequence {
    times: Vec<f64>,
    marks: Option<Vec<usize>>,
    window: ObservationWindow,
}

impl EventSequence {
    /// Builds an unmarked sequence and validates it.
    pub fn new(times: Vec<f64>, t_end: f64) -> Result<Self> {
        let seq = Self {
            times,
            marks: None,
            window: ObservationWindow::new(t_end)?,
        };
        seq.validate(1)?;
        Ok(seq)
    }

    /// Builds a marked sequence with zero-based marks in `0..num_types`.
    pub fn with_marks(
        times: Vec<f64>,
        marks: Vec<usize>,
        t_end: f64,
        num_types: usize,
    ) -> Result<Self> {
        let seq = Self {
            times,
            marks: Some(marks),
            window: ObservationWindow::new(t_end)?,
        };
        seq.validate(num_types)?;
        Ok(seq)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn marks(&self) -> Option<&[usize]> {
        self.marks.as_deref()
    }

    pub fn window(&self) -> ObservationWindow {
        self.window
    }

    pub fn t_end(&self) -> f64 {
        self.window.t_end
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Zero-based type of event `n`; unmarked sequences have a single type 0.
    pub fn mark(&self, n: usize) -> usize {
        self.marks.as_ref().map_or(0, |m| m[n])
    }

    /// Checks ordering, window membership and marks against `num_types`.
    pub fn validate(&self, num_types: usize) -> Result<()> {
        let t_end = self.window.t_end;
        for (index, &time) in self.times.iter().enumerate() {
            if !(time > 0.0 && time <= t_end) {
                return Err(Error::OutOfWindow { index, time, t_end });
            }
            if index > 0 && time <= self.times[index - 1] {
                return Err(Error::NonMonotone { index });
            }
        }
        match &self.marks {
            Some(marks) => {
                if marks.len() != self.times.len() {
                    return Err(Error::MarkMismatch(format!(
                        "{} marks for {} events",
                        marks.len(),
                        self.times.len()
                    )));
                }
                if let Some((i, &k)) = marks.iter().enumerate().find(|(_, &k)| k >= num_types) {
                    return Err(Error::MarkMismatch(format!(
                        "mark {} at index {} exceeds K={}",
                        k + 1,
                        i,
                        num_types
                    )));
                }
            }
            None if num_types > 1 => {
                return Err(Error::MarkMismatch(format!(
                    "unmarked sequence in a {num_types}-type dataset"
                )));
            }
            None => {}
        }
        Ok(())
    }

    /// All events before zero-based index `n`; `n == len()` is allowed.
    pub fn history_before(&self, n: usize) -> Result<History<'_>> {
        if n > self.times.len() {
            return Err(Error::IndexOutOfRange {
                index: n,
                len: self.times.len(),
            });
        }
        Ok(self.history().prefix(n))
    }

    /// The whole sequence as a history view.
    pub fn history(&self) -> History<'_> {
        History::new(&self.times, self.marks.as_deref())
    }

    /// First `n` events, keeping the window.
    pub fn truncated(&self, n: usize) -> Self {
        let n = n.min(self.times.len());
        Self {
            times: self.times[..n].to_vec(),
            marks: self.marks.as_ref().map(|m| m[..n].to_vec()),
            window: self.window,
        }
    }

    pub fn to_record(&self) -> SequenceRecord {
        SequenceRecord {
            times: self.times.clone(),
            marks: self
                .marks
                .as_ref()
                .map(|m| m.iter().map(|&k| k as u32 + 1).collect()),
            t_end: self.window.t_end,
        }
    }

    pub fn from_record(record: SequenceRecord, num_types: usize) -> Result<Self> {
        let marks = match record.marks {
            Some(m) => {
                if m.iter().any(|&k| k == 0) {
                    return Err(Error::MarkMismatch("marks are 1-based".into()));
                }
                Some(m.into_iter().map(|k| k as usize - 1).collect())
            }
            None => None,
        };
        let seq = Self {
            times: record.times,
            marks,
            window: ObservationWindow::new(record.t_end)?,
        };
        seq.validate(num_types)?;
        Ok(seq)
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(&self.to_record()).expect("sequence records always serialize")
    }
}

/// On-disk form of one sequence: one JSON object per line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceRecord {
    pub times: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub marks: Option<Vec<u32>>,
    pub t_end: f64,
}
