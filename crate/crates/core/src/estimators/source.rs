use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::adversary::HiddenDirectionSampler;
use crate::error::{Error, Result};
use crate::model::Dataset;

/// Supplies fresh batches; no sample is handed out twice.
pub trait SampleSource {
    fn dim(&self) -> usize;
    fn draw(&mut self, n: usize) -> Result<Dataset>;
    /// Samples handed out so far.
    fn drawn(&self) -> usize;
}

/// Simulated draws from a planted adversary, one seeded stream.
pub struct SimulatedSource {
    sampler: HiddenDirectionSampler,
    rng: ChaCha8Rng,
    seed: u64,
    drawn: usize,
    missing: usize,
}

impl SimulatedSource {
    pub fn new(sampler: HiddenDirectionSampler, seed: u64) -> Self {
        Self { sampler, rng: ChaCha8Rng::seed_from_u64(seed), seed, drawn: 0, missing: 0 }
    }

    /// Fraction of handed-out samples that were missing.
    pub fn missing_fraction(&self) -> f64 {
        self.missing as f64 / self.drawn.max(1) as f64
    }

    pub fn sampler(&self) -> &HiddenDirectionSampler {
        &self.sampler
    }
}

impl SampleSource for SimulatedSource {
    fn dim(&self) -> usize {
        self.sampler.dim()
    }

    fn draw(&mut self, n: usize) -> Result<Dataset> {
        self.drawn += n;
        let d = self.sampler.sample_with_rng(n, self.seed, &mut self.rng);
        self.missing += d.missing_count();
        Ok(d)
    }

    fn drawn(&self) -> usize {
        self.drawn
    }
}

/// Consecutive chunks of a fixed dataset.
pub struct ChunkedDataset {
    data: Dataset,
    pos: usize,
}

impl ChunkedDataset {
    pub fn new(data: Dataset) -> Self {
        Self { data, pos: 0 }
    }

    pub fn remaining(&self) -> usize {
        self.data.len() - self.pos
    }
}

impl SampleSource for ChunkedDataset {
    fn dim(&self) -> usize {
        self.data.dim()
    }

    fn draw(&mut self, n: usize) -> Result<Dataset> {
        if n > self.remaining() {
            return Err(Error::InsufficientSamples { required: (self.pos + n) as u64, available: self.data.len() as u64 });
        }
        let mut out = Dataset::with_capacity(self.data.dim(), self.data.seed(), n)?;
        for s in self.data.iter().skip(self.pos).take(n) {
            match s {
                Some(r) => out.push_value(r)?,
                None => out.push_missing(),
            }
        }
        self.pos += n;
        Ok(out)
    }

    fn drawn(&self) -> usize {
        self.pos
    }
}
