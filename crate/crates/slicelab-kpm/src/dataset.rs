//! Append-only CSV dataset of per-epoch slice records.
//!
//! One row per (epoch, slice): the observation aggregated over that epoch,
//! the action selected at that epoch and the reward realized during it
//! (which pays for the previous epoch's action, matching the one-epoch
//! actuation delay). Consecutive rows of the same episode and slice chain
//! into (s, a, r, s') transitions; the final row of an episode only closes
//! its predecessor's transition.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use slicelab_core::{EpochIndex, Observation, SliceId, SlicingAction, Transition};

pub const CSV_HEADER: [&str; 14] = [
    "episode", "epoch", "slice", "tb", "rt", "dl", "d_min", "d_max", "d_mean", "phi_sla",
    "phi_meas", "lambda", "action", "reward",
];

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("bad header: expected {expected:?}, found {found:?}")]
    BadHeader { expected: String, found: String },
    #[error("malformed row at line {line}: {message}")]
    MalformedRow { line: u64, message: String },
    #[error("transition at epoch {epoch} does not chain (expected epoch {expected})")]
    NonChained { epoch: u32, expected: u32 },
    #[error("transition state at epoch {0} differs from the previous next_state")]
    BrokenChain(u32),
}

/// One CSV record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRow {
    pub episode: u64,
    pub epoch: u32,
    pub slice: usize,
    pub tb: u32,
    pub rt: f64,
    pub dl: f64,
    pub d_min: f64,
    pub d_max: f64,
    pub d_mean: f64,
    pub phi_sla: f64,
    pub phi_meas: f64,
    pub lambda: f64,
    pub action: u32,
    pub reward: f64,
}

impl DatasetRow {
    pub fn observation(&self) -> Observation {
        Observation {
            tb: self.tb,
            rt: self.rt,
            dl: self.dl,
            d_min_ms: self.d_min,
            d_max_ms: self.d_max,
            d_mean_ms: self.d_mean,
            phi_sla: self.phi_sla,
            phi_meas: self.phi_meas,
            lambda_ms: self.lambda,
        }
    }

    pub fn from_parts(
        episode: u64,
        epoch: EpochIndex,
        slice: SliceId,
        obs: &Observation,
        action: SlicingAction,
        reward: f64,
    ) -> Self {
        Self {
            episode,
            epoch: epoch.0,
            slice: slice.0,
            tb: obs.tb,
            rt: obs.rt,
            dl: obs.dl,
            d_min: obs.d_min_ms,
            d_max: obs.d_max_ms,
            d_mean: obs.d_mean_ms,
            phi_sla: obs.phi_sla,
            phi_meas: obs.phi_meas,
            lambda: obs.lambda_ms,
            action: action.prbs,
            reward,
        }
    }
}

struct PendingChain {
    episode: u64,
    next_epoch: u32,
    next_state: Observation,
    action: SlicingAction,
    reward: f64,
}

/// Single-writer, append-only recorder.
pub struct DatasetWriter {
    writer: csv::Writer<BufWriter<File>>,
    pending: std::collections::BTreeMap<usize, PendingChain>,
}

impl DatasetWriter {
    pub fn create(path: &Path) -> Result<Self, DatasetError> {
        let file = File::create(path)?;
        let mut writer = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(BufWriter::new(file));
        writer.write_record(CSV_HEADER)?;
        Ok(Self {
            writer,
            pending: Default::default(),
        })
    }

    /// Appends one finished row (the control loop's trace path).
    pub fn append_row(&mut self, row: &DatasetRow) -> Result<(), DatasetError> {
        self.writer.serialize(row)?;
        Ok(())
    }

    /// Records one transition of a slice's trajectory. Transitions of the
    /// same (episode, slice) must arrive in epoch order and chain:
    /// `next_state` of one call equals `state` of the next.
    pub fn record_transition(
        &mut self,
        slice: SliceId,
        t: &Transition,
    ) -> Result<(), DatasetError> {
        let reward_in_row = match self.pending.get(&slice.0) {
            Some(prev) if prev.episode == t.episode => {
                if t.epoch.0 != prev.next_epoch {
                    return Err(DatasetError::NonChained {
                        epoch: t.epoch.0,
                        expected: prev.next_epoch,
                    });
                }
                if t.state != prev.next_state {
                    return Err(DatasetError::BrokenChain(t.epoch.0));
                }
                prev.reward
            }
            Some(_) | None => {
                // New episode for this slice: close the old chain first.
                self.finish_slice(slice)?;
                0.0 // bootstrap value, never consumed on load
            }
        };
        self.append_row(&DatasetRow::from_parts(
            t.episode,
            t.epoch,
            slice,
            &t.state,
            t.action,
            reward_in_row,
        ))?;
        self.pending.insert(
            slice.0,
            PendingChain {
                episode: t.episode,
                next_epoch: t.epoch.0 + 1,
                next_state: t.next_state,
                action: t.action,
                reward: t.reward,
            },
        );
        Ok(())
    }

    /// Writes the terminal row of a slice's open chain, if any.
    fn finish_slice(&mut self, slice: SliceId) -> Result<(), DatasetError> {
        if let Some(prev) = self.pending.remove(&slice.0) {
            self.append_row(&DatasetRow::from_parts(
                prev.episode,
                EpochIndex(prev.next_epoch),
                slice,
                &prev.next_state,
                prev.action, // filler: a terminal row's action is never consumed
                prev.reward,
            ))?;
        }
        Ok(())
    }

    /// Closes all open chains and flushes the file.
    pub fn finish(mut self) -> Result<(), DatasetError> {
        let open: Vec<usize> = self.pending.keys().copied().collect();
        for s in open {
            self.finish_slice(SliceId(s))?;
        }
        self.writer.flush()?;
        Ok(())
    }
}

/// Reads raw rows, validating the fixed header and every field.
pub fn load_rows(path: &Path) -> Result<Vec<DatasetRow>, DatasetError> {
    let file = File::open(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(BufReader::new(file));
    let found = reader.headers()?.iter().collect::<Vec<_>>().join(",");
    let expected = CSV_HEADER.join(",");
    if found != expected {
        return Err(DatasetError::BadHeader { expected, found });
    }
    let mut rows = Vec::new();
    for result in reader.deserialize::<DatasetRow>() {
        let row = result.map_err(|e| {
            let line = e
                .position()
                .map(|p| p.line())
                .unwrap_or_default();
            DatasetError::MalformedRow {
                line,
                message: e.to_string(),
            }
        })?;
        if !row.reward.is_finite() {
            return Err(DatasetError::MalformedRow {
                line: 0,
                message: format!("non-finite reward in episode {} epoch {}", row.episode, row.epoch),
            });
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Loads the dataset and chains consecutive rows of each (episode, slice)
/// into transitions.
pub fn load_dataset(path: &Path) -> Result<Vec<(SliceId, Transition)>, DatasetError> {
    let rows = load_rows(path)?;
    Ok(chain_rows(&rows))
}

/// Pairs each row with its successor (same episode and slice, epoch + 1).
pub fn chain_rows(rows: &[DatasetRow]) -> Vec<(SliceId, Transition)> {
    use std::collections::BTreeMap;
    let mut by_key: BTreeMap<(u64, usize), Vec<&DatasetRow>> = BTreeMap::new();
    for row in rows {
        by_key.entry((row.episode, row.slice)).or_default().push(row);
    }
    let mut out = Vec::new();
    for ((episode, slice), group) in by_key {
        for pair in group.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            if b.epoch == a.epoch + 1 {
                out.push((
                    SliceId(slice),
                    Transition {
                        state: a.observation(),
                        action: SlicingAction::from_prbs(a.action),
                        reward: b.reward,
                        next_state: b.observation(),
                        episode,
                        epoch: EpochIndex(a.epoch),
                    },
                ));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(seed: f64) -> Observation {
        Observation {
            tb: seed as u32,
            rt: 0.5 + seed / 100.0,
            dl: 1.0 + seed,
            d_min_ms: seed,
            d_max_ms: seed * 3.0,
            d_mean_ms: seed * 2.0,
            phi_sla: 0.99,
            phi_meas: 0.97,
            lambda_ms: 110.0,
        }
    }

    fn chained_transitions(n: usize) -> Vec<Transition> {
        (0..n)
            .map(|k| Transition {
                state: obs(k as f64 + 1.0),
                action: SlicingAction::from_prbs(5 + k as u32),
                reward: 0.1 * (k as f64 + 1.0) + 1.0 / 3.0,
                next_state: obs(k as f64 + 2.0),
                episode: 3,
                epoch: EpochIndex(k as u32),
            })
            .collect()
    }

    #[test]
    fn transitions_round_trip_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.csv");
        let transitions = chained_transitions(3);

        let mut w = DatasetWriter::create(&path).unwrap();
        for t in &transitions {
            w.record_transition(SliceId(0), t).unwrap();
        }
        w.finish().unwrap();

        let loaded = load_dataset(&path).unwrap();
        assert_eq!(loaded.len(), 3);
        for ((slice, got), want) in loaded.iter().zip(&transitions) {
            assert_eq!(*slice, SliceId(0));
            assert_eq!(got, want);
        }
    }

    #[test]
    fn shuffled_columns_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(
            &path,
            "epoch,episode,slice,tb,rt,dl,d_min,d_max,d_mean,phi_sla,phi_meas,lambda,action,reward\n",
        )
        .unwrap();
        assert!(matches!(
            load_rows(&path),
            Err(DatasetError::BadHeader { .. })
        ));
    }

    #[test]
    fn malformed_row_names_the_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        let mut text = CSV_HEADER.join(",");
        text.push('\n');
        text.push_str("0,0,0,1,0.5,1.0,1,2,3,0.99,0.97,110,5,0.4\n");
        text.push_str("0,1,0,not_a_number,0.5,1.0,1,2,3,0.99,0.97,110,5,0.4\n");
        std::fs::write(&path, text).unwrap();
        match load_rows(&path) {
            Err(DatasetError::MalformedRow { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected malformed-row error, got {other:?}"),
        }
    }

    #[test]
    fn non_chaining_transitions_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.csv");
        let mut w = DatasetWriter::create(&path).unwrap();
        let ts = chained_transitions(2);
        w.record_transition(SliceId(0), &ts[0]).unwrap();
        let mut skipped = ts[1].clone();
        skipped.epoch = EpochIndex(5);
        assert!(matches!(
            w.record_transition(SliceId(0), &skipped),
            Err(DatasetError::NonChained { .. })
        ));
    }
}
