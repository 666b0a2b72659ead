//! Fixed-capacity FIFO replay buffer.

use std::collections::VecDeque;
use std::sync::{Arc, Mutex};

use rand::seq::index;
use rand::Rng;

use crate::error::{LearnError, Result};
use crate::tuple::ExperienceTuple;

pub const DEFAULT_CAPACITY: usize = 100_000;

#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    entries: VecDeque<Arc<ExperienceTuple>>,
    inserted: u64,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay buffer capacity must be positive");
        Self {
            capacity,
            entries: VecDeque::with_capacity(capacity.min(1 << 16)),
            inserted: 0,
        }
    }

    pub fn from_tuples(capacity: usize, tuples: impl IntoIterator<Item = ExperienceTuple>) -> Self {
        let mut b = Self::new(capacity);
        for t in tuples {
            b.insert(t);
        }
        b
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Tuples ever inserted, including evicted ones.
    pub fn inserted(&self) -> u64 {
        self.inserted
    }

    pub fn insert(&mut self, tuple: ExperienceTuple) {
        if self.entries.len() == self.capacity {
            self.entries.pop_front();
        }
        self.entries.push_back(Arc::new(tuple));
        self.inserted += 1;
    }

    pub fn get(&self, i: usize) -> Option<&ExperienceTuple> {
        self.entries.get(i).map(|t| t.as_ref())
    }

    pub fn iter(&self) -> impl Iterator<Item = &ExperienceTuple> {
        self.entries.iter().map(|t| t.as_ref())
    }

    /// Distinct positions, uniformly chosen.
    pub fn sample_indices<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Result<Vec<usize>> {
        if batch == 0 || self.entries.len() < batch {
            return Err(LearnError::BufferTooSmall {
                needed: batch.max(1),
                available: self.entries.len(),
            });
        }
        Ok(index::sample(rng, self.entries.len(), batch).into_vec())
    }
}

/// Anything a learner can draw batches from.
pub trait BatchSource {
    fn sample_batch(&self, batch: usize, rng: &mut dyn rand::RngCore) -> Result<Vec<Arc<ExperienceTuple>>>;
}

impl BatchSource for ReplayBuffer {
    fn sample_batch(&self, batch: usize, rng: &mut dyn rand::RngCore) -> Result<Vec<Arc<ExperienceTuple>>> {
        let idx = self.sample_indices(batch, rng)?;
        Ok(idx.into_iter().map(|i| Arc::clone(&self.entries[i])).collect())
    }
}

/// Sampling holds the lock only while indices are drawn and handles cloned.
impl BatchSource for Mutex<ReplayBuffer> {
    fn sample_batch(&self, batch: usize, rng: &mut dyn rand::RngCore) -> Result<Vec<Arc<ExperienceTuple>>> {
        self.lock().unwrap_or_else(|e| e.into_inner()).sample_batch(batch, rng)
    }
}
