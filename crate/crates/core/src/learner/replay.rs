//! FIFO experience replay with without-replacement batch sampling.

use std::collections::VecDeque;

use rand_chacha::ChaCha8Rng;

use crate::env::Action;

/// One (possibly multi-step) learning sample. For N-step transitions,
/// `reward` already holds the discounted partial sum and `next_state` is
/// the bootstrap state N slots ahead.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: Action,
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub done: bool,
}

#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    ring: VecDeque<Transition>,
    capacity: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        Self {
            ring: VecDeque::with_capacity(capacity.min(1 << 20)),
            capacity,
        }
    }

    /// Appends a transition, evicting the oldest one at capacity.
    pub fn push(&mut self, transition: Transition) {
        if self.ring.len() == self.capacity {
            self.ring.pop_front();
        }
        self.ring.push_back(transition);
    }

    pub fn len(&self) -> usize {
        self.ring.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ring.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn get(&self, idx: usize) -> &Transition {
        &self.ring[idx]
    }

    /// Distinct indices for one minibatch.
    ///
    /// # Panics
    /// Panics if fewer than `batch_size` transitions are stored; callers
    /// gate updates on the buffer size.
    pub fn sample_indices(&self, rng: &mut ChaCha8Rng, batch_size: usize) -> Vec<usize> {
        rand::seq::index::sample(rng, self.ring.len(), batch_size).into_vec()
    }
}
