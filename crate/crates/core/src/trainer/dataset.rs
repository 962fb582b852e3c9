use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::sim::RelativeState;

use super::TrainError;

/// Keeps the split stream independent of the shuffling stream.
const SPLIT_STREAM: u64 = 0x5EED_5A11;

/// Neighbor slots stored per row of a dataset file.
pub const MAX_SLOTS: usize = 6;

/// One training pair.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub neighbors: Vec<RelativeState>,
    /// Residual vertical force, N.
    pub y: f64,
    pub scenario: u64,
    pub vehicle: usize,
    pub t: f64,
}

/// Per-input affine standardization, `x̃ = (x − mean) / scale`.
#[derive(Clone, Debug, PartialEq)]
pub struct Standardizer {
    pub mean: [f64; 6],
    pub scale: [f64; 6],
}

impl Default for Standardizer {
    fn default() -> Self {
        Self {
            mean: [0.0; 6],
            scale: [1.0; 6],
        }
    }
}

impl Standardizer {
    /// Statistics over every neighbor entry of the given samples. Inputs
    /// with (near) zero spread keep unit scale.
    pub fn fit<'a>(samples: impl IntoIterator<Item = &'a Sample>) -> Self {
        let mut count = 0usize;
        let mut sum = [0.0; 6];
        let mut sq = [0.0; 6];
        for s in samples {
            for nb in &s.neighbors {
                for (k, x) in nb.to_array().iter().enumerate() {
                    sum[k] += x;
                    sq[k] += x * x;
                }
                count += 1;
            }
        }
        if count == 0 {
            return Self::default();
        }
        let n = count as f64;
        let mut out = Self::default();
        for k in 0..6 {
            let mean = sum[k] / n;
            let var = (sq[k] / n - mean * mean).max(0.0);
            out.mean[k] = mean;
            out.scale[k] = if var.sqrt() > 1e-6 { var.sqrt() } else { 1.0 };
        }
        out
    }

    pub fn apply(&self, rel: &RelativeState) -> RelativeState {
        let mut a = rel.to_array();
        for k in 0..6 {
            a[k] = (a[k] - self.mean[k]) / self.scale[k];
        }
        RelativeState::from_slice(&a)
    }

    pub fn inverse_scale(&self) -> [f64; 6] {
        self.scale.map(|s| 1.0 / s)
    }
}

/// Samples plus the normalization record fitted on their training split.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Dataset {
    pub samples: Vec<Sample>,
    pub normalization: Option<Standardizer>,
    /// Logged steps dropped while building the dataset.
    pub skipped: usize,
}

impl Dataset {
    pub fn new(samples: Vec<Sample>) -> Self {
        Self {
            samples,
            normalization: None,
            skipped: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn extend(&mut self, other: Dataset) {
        self.samples.extend(other.samples);
        self.skipped += other.skipped;
    }

    pub fn header() -> String {
        let mut cols = vec!["scenario".to_string(), "vehicle".into(), "t".into()];
        for slot in 1..=MAX_SLOTS {
            for name in ["dp1", "dp2", "dp3", "dv1", "dv2", "dv3"] {
                cols.push(format!("n{slot}_{name}"));
            }
        }
        cols.push("neighbor_count".into());
        cols.push("y".into());
        cols.join(",")
    }

    /// CSV with one row per sample. Unused neighbor slots hold `NaN`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), TrainError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(Self::header().split(','))?;
        let mut row: Vec<String> = Vec::with_capacity(5 + 6 * MAX_SLOTS);
        for s in &self.samples {
            if s.neighbors.len() > MAX_SLOTS {
                return Err(TrainError::Format(format!(
                    "sample at t={} has {} neighbors, more than {MAX_SLOTS} slots",
                    s.t,
                    s.neighbors.len()
                )));
            }
            row.clear();
            row.push(s.scenario.to_string());
            row.push(s.vehicle.to_string());
            row.push(s.t.to_string());
            for slot in 0..MAX_SLOTS {
                match s.neighbors.get(slot) {
                    Some(nb) => row.extend(nb.to_array().iter().map(f64::to_string)),
                    None => row.extend(std::iter::repeat_n("NaN".to_string(), 6)),
                }
            }
            row.push(s.neighbors.len().to_string());
            row.push(s.y.to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self, TrainError> {
        let mut r = csv::Reader::from_reader(input);
        let expected = Self::header();
        let header = r.headers()?.iter().collect::<Vec<_>>().join(",");
        if header != expected {
            return Err(TrainError::Format("unexpected dataset header".into()));
        }
        let mut samples = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            let line = i + 2;
            let bad = |msg: String| TrainError::Format(format!("line {line}: {msg}"));
            let f = |k: usize| -> Result<f64, TrainError> {
                rec[k].parse::<f64>().map_err(|e| bad(format!("column {k}: {e}")))
            };
            let count: usize = rec[3 + 6 * MAX_SLOTS].parse().map_err(|e| bad(format!("neighbor_count: {e}")))?;
            if count > MAX_SLOTS {
                return Err(bad(format!("neighbor_count {count} exceeds {MAX_SLOTS}")));
            }
            let mut neighbors = Vec::with_capacity(count);
            for slot in 0..count {
                let mut a = [0.0; 6];
                for (k, v) in a.iter_mut().enumerate() {
                    *v = f(3 + 6 * slot + k)?;
                }
                let rel = RelativeState::from_slice(&a);
                if !rel.is_finite() {
                    return Err(bad(format!("neighbor slot {} is not finite", slot + 1)));
                }
                neighbors.push(rel);
            }
            let y = f(4 + 6 * MAX_SLOTS)?;
            if !y.is_finite() {
                return Err(bad("label is not finite".into()));
            }
            samples.push(Sample {
                neighbors,
                y,
                scenario: rec[0].parse().map_err(|e| bad(format!("scenario: {e}")))?,
                vehicle: rec[1].parse().map_err(|e| bad(format!("vehicle: {e}")))?,
                t: f(2)?,
            });
        }
        Ok(Self::new(samples))
    }

    pub fn save(&self, path: &Path) -> Result<(), TrainError> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    pub fn load(path: &Path) -> Result<Self, TrainError> {
        Self::read_csv(std::io::BufReader::new(std::fs::File::open(path)?))
    }

    /// Hex SHA-256 of the CSV serialization; recorded as model provenance.
    pub fn hash(&self) -> String {
        let mut buf = Vec::new();
        // Writing to memory only fails on oversized samples, which hash as-is.
        let _ = self.write_csv(&mut buf);
        hex::encode(Sha256::digest(&buf))
    }

    /// Partition sample indices into (train, validation). The split unit is
    /// a (scenario, time chunk) group so that neighboring time steps never
    /// straddle the two sides.
    pub fn split(&self, validation_fraction: f64, chunk_seconds: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
        let key = |s: &Sample| (s.scenario, (s.t / chunk_seconds).floor() as i64);
        let mut groups: Vec<(u64, i64)> = self.samples.iter().map(key).collect();
        groups.sort_unstable();
        groups.dedup();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ SPLIT_STREAM);
        groups.shuffle(&mut rng);
        let n_val = if groups.len() < 2 {
            0
        } else {
            ((groups.len() as f64 * validation_fraction).round() as usize).clamp(1, groups.len() - 1)
        };
        let mut val_groups = groups[..n_val].to_vec();
        val_groups.sort_unstable();
        let (mut train, mut val) = (Vec::new(), Vec::new());
        for (i, s) in self.samples.iter().enumerate() {
            if val_groups.binary_search(&key(s)).is_ok() {
                val.push(i);
            } else {
                train.push(i);
            }
        }
        (train, val)
    }
}
