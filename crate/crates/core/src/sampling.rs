//! Seeded iid scenario sampling with per-coordinate distribution families.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Distribution of one coordinate of `xi`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Marginal {
    /// Normal `N(mean, sd^2)` truncated to `[mean - 4 sd, mean + 4 sd]`.
    NormalTruncated { mean: f64, sd: f64 },
    Uniform { lo: f64, hi: f64 },
    /// `scale * B(n_trials, p)`.
    ScaledBinomial { n_trials: u64, p: f64, scale: f64 },
    Constant { value: f64 },
}

impl Marginal {
    /// Closed support `[lo, hi]`.
    pub fn support(&self) -> (f64, f64) {
        match *self {
            Marginal::NormalTruncated { mean, sd } => (mean - 4.0 * sd, mean + 4.0 * sd),
            Marginal::Uniform { lo, hi } => (lo, hi),
            Marginal::ScaledBinomial { n_trials, scale, .. } => {
                let top = n_trials as f64 * scale;
                (top.min(0.0), top.max(0.0))
            }
            Marginal::Constant { value } => (value, value),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Marginal::NormalTruncated { mean, sd } => mean.is_finite() && sd.is_finite() && sd > 0.0,
            Marginal::Uniform { lo, hi } => lo.is_finite() && hi.is_finite() && lo <= hi,
            Marginal::ScaledBinomial { p, scale, .. } => (0.0..=1.0).contains(&p) && scale.is_finite(),
            Marginal::Constant { value } => value.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("invalid distribution parameters: {self:?}")))
        }
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        match *self {
            Marginal::NormalTruncated { mean, sd } => loop {
                let z: f64 = rng.sample(StandardNormal);
                if z.abs() <= 4.0 {
                    break mean + sd * z;
                }
            },
            Marginal::Uniform { lo, hi } => {
                if lo == hi {
                    lo
                } else {
                    rng.random_range(lo..=hi)
                }
            }
            Marginal::ScaledBinomial { n_trials, p, scale } => {
                let b = Binomial::new(n_trials, p).expect("validated binomial");
                b.sample(rng) as f64 * scale
            }
            Marginal::Constant { value } => value,
        }
    }
}

/// Independent marginals, one per coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionSpec {
    pub marginals: Vec<Marginal>,
}

impl DistributionSpec {
    pub fn new(marginals: Vec<Marginal>) -> Self {
        Self { marginals }
    }

    pub fn dim(&self) -> usize {
        self.marginals.len()
    }

    pub fn validate(&self) -> Result<()> {
        self.marginals.iter().try_for_each(Marginal::validate)
    }

    pub fn support_box(&self) -> (Vec<f64>, Vec<f64>) {
        self.marginals.iter().map(Marginal::support).unzip()
    }

    /// One draw from an existing generator.
    pub fn draw_one<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        self.marginals.iter().map(|m| m.draw(rng)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub rows: Vec<Vec<f64>>,
    pub seed: Option<u64>,
    pub spec: Option<DistributionSpec>,
}

impl SampleSet {
    /// Wraps explicit scenarios (no provenance).
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::Dimension("sample rows have different lengths".into()));
        }
        Ok(Self { rows, seed: None, spec: None })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
        for row in &self.rows {
            wr.write_record(row.iter().map(|v| format!("{v:?}")))?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::ReaderBuilder::new().has_headers(false).from_reader(r);
        let mut rows = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            let row = rec
                .iter()
                .map(|s| s.trim().parse::<f64>().map_err(|e| Error::InvalidInput(format!("bad CSV value {s:?}: {e}"))))
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        Self::from_rows(rows)
    }
}

pub fn rng_from_seed(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Draws `n` iid rows from `spec`.
pub fn draw_iid_sample(spec: &DistributionSpec, n: usize, seed: u64) -> Result<SampleSet> {
    if n == 0 {
        return Err(Error::InvalidInput("sample size must be at least 1".into()));
    }
    spec.validate()?;
    let mut rng = rng_from_seed(seed);
    let rows = (0..n).map(|_| spec.draw_one(&mut rng)).collect();
    Ok(SampleSet {
        rows,
        seed: Some(seed),
        spec: Some(spec.clone()),
    })
}

/// Coordinatewise minimum and maximum over the sample.
pub fn componentwise_extrema(s: &SampleSet) -> Result<(Vec<f64>, Vec<f64>)> {
    let first = s
        .rows
        .first()
        .ok_or_else(|| Error::InvalidInput("empty sample".into()))?;
    let (mut lo, mut hi) = (first.clone(), first.clone());
    for row in &s.rows[1..] {
        for (q, &v) in row.iter().enumerate() {
            lo[q] = lo[q].min(v);
            hi[q] = hi[q].max(v);
        }
    }
    Ok((lo, hi))
}

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for replication `r` of a run with base seed `base`.
pub fn replication_seed(base: u64, r: u64) -> u64 {
    base ^ splitmix64(r)
}

/// Derives a seed for a named sub-stream (training sample, evaluation sample, ...).
pub fn stream_seed(seed: u64, stream: &str) -> u64 {
    stream.bytes().fold(splitmix64(seed), |h, b| splitmix64(h ^ b as u64))
}
