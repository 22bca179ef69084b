use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::sequence::{EventSequence, SequenceRecord};

/// A collection of sequences sharing the same number of event types.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    sequences: Vec<EventSequence>,
    num_types: usize,
}

impl Dataset {
    pub fn new(sequences: Vec<EventSequence>, num_types: usize) -> Result<Self> {
        if num_types == 0 {
            return Err(Error::Config("number of types must be at least 1".into()));
        }
        for seq in &sequences {
            seq.validate(num_types)?;
        }
        Ok(Self {
            sequences,
            num_types,
        })
    }

    pub fn sequences(&self) -> &[EventSequence] {
        &self.sequences
    }

    pub fn num_types(&self) -> usize {
        self.num_types
    }

    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    pub fn num_events(&self) -> usize {
        self.sequences.iter().map(EventSequence::len).sum()
    }

    /// True when every sequence has the same observation window.
    pub fn has_common_window(&self) -> bool {
        match self.sequences.first() {
            Some(first) => self.sequences.iter().all(|s| s.t_end() == first.t_end()),
            None => true,
        }
    }

    /// Largest event time over all sequences, if any event exists.
    pub fn max_event_time(&self) -> Option<f64> {
        self.sequences
            .iter()
            .filter_map(|s| s.times().last().copied())
            .reduce(f64::max)
    }

    pub fn min_length(&self) -> usize {
        self.sequences.iter().map(EventSequence::len).min().unwrap_or(0)
    }

    /// Keep the first `n` sequences.
    pub fn take(&self, n: usize) -> Self {
        Self {
            sequences: self.sequences.iter().take(n).cloned().collect(),
            num_types: self.num_types,
        }
    }

    /// Split by index: the first `round(fraction * M)` sequences go to the first part.
    pub fn split(&self, fraction: f64) -> (Self, Self) {
        let cut = ((self.len() as f64) * fraction).round() as usize;
        let cut = cut.min(self.len());
        let (a, b) = self.sequences.split_at(cut);
        (
            Self {
                sequences: a.to_vec(),
                num_types: self.num_types,
            },
            Self {
                sequences: b.to_vec(),
                num_types: self.num_types,
            },
        )
    }

    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            if !dir.as_os_str().is_empty() {
                fs::create_dir_all(dir)?;
            }
        }
        let mut out = std::io::BufWriter::new(fs::File::create(path)?);
        for seq in &self.sequences {
            writeln!(out, "{}", seq.to_json_line())?;
        }
        out.flush()?;
        Ok(())
    }

    /// Reads a JSONL file, or every `*.jsonl` file of a directory in name order.
    ///
    /// `num_types` is inferred from the largest mark when `None`.
    pub fn read(path: &Path, num_types: Option<usize>) -> Result<Self> {
        let mut records = Vec::new();
        if path.is_dir() {
            let mut files: Vec<_> = fs::read_dir(path)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
                .collect();
            files.sort();
            for f in files {
                read_records(&f, &mut records)?;
            }
        } else {
            read_records(path, &mut records)?;
        }
        let k = num_types.unwrap_or_else(|| {
            records
                .iter()
                .filter_map(|r| r.marks.as_ref().and_then(|m| m.iter().max().copied()))
                .max()
                .map_or(1, |m| m as usize)
        });
        let sequences = records
            .into_iter()
            .map(|r| EventSequence::from_record(r, k))
            .collect::<Result<Vec<_>>>()?;
        Self::new(sequences, k)
    }
}

fn read_records(path: &Path, out: &mut Vec<SequenceRecord>) -> Result<()> {
    let reader = BufReader::new(fs::File::open(path)?);
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: SequenceRecord = serde_json::from_str(&line)
            .map_err(|e| Error::Parse(format!("{}:{}: {e}", path.display(), i + 1)))?;
        out.push(rec);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Dataset {
        let a = EventSequence::with_marks(vec![0.5, 1.0, 3.0], vec![0, 1, 1], 4.0, 2).unwrap();
        let b = EventSequence::with_marks(vec![2.0], vec![1], 4.0, 2).unwrap();
        Dataset::new(vec![a, b], 2).unwrap()
    }

    #[test]
    fn summary_stats() {
        let d = sample();
        assert_eq!(d.num_events(), 4);
        assert_eq!(d.max_event_time(), Some(3.0));
        assert_eq!(d.min_length(), 1);
        assert!(d.has_common_window());
        let (train, test) = d.split(0.5);
        assert_eq!((train.len(), test.len()), (1, 1));
    }

    #[test]
    fn jsonl_roundtrip_file_and_dir() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("data.jsonl");
        let d = sample();
        d.write_jsonl(&file).unwrap();
        assert_eq!(Dataset::read(&file, None).unwrap(), d);
        assert_eq!(Dataset::read(dir.path(), Some(2)).unwrap(), d);
    }

    #[test]
    fn rejects_bad_lines() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("bad.jsonl");
        fs::write(&file, "{\"times\":[2.0,1.0],\"t_end\":3.0}\n").unwrap();
        assert_eq!(
            Dataset::read(&file, None).unwrap_err(),
            Error::NonMonotone { index: 1 }
        );
        fs::write(&file, "not json\n").unwrap();
        assert!(matches!(Dataset::read(&file, None), Err(Error::Parse(_))));
    }
}
