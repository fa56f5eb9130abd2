//! Per-annotator task ordering and navigation.
//!
//! Orders are reproducible bit-for-bit: the seed is FNV-1a of the annotator
//! id mixed with a global seed, and the shuffle is Fisher-Yates driven by
//! SplitMix64 with a plain modulo draw. The slight modulo bias is accepted so
//! the sequence stays trivially portable.

use serde::Serialize;
use thiserror::Error;

use crate::config::AnnotationMode;

const FNV_OFFSET_BASIS: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OrderError {
    #[error("index {index} out of range for {len} tasks")]
    OutOfRange { index: usize, len: usize },
}

/// FNV-1a of the id's UTF-8 bytes, XOR `global_seed`.
pub fn derive_seed(annotator_id: &str, global_seed: u64) -> u64 {
    annotator_id.bytes().fold(FNV_OFFSET_BASIS, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(FNV_PRIME)
    }) ^ global_seed
}

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
}

/// Fisher-Yates permutation of `0..n`.
pub fn shuffle_order(n: usize, seed: u64) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    let mut rng = SplitMix64::new(seed);
    for i in (1..n).rev() {
        let j = (rng.next_u64() % (i as u64 + 1)) as usize;
        perm.swap(i, j);
    }
    perm
}

/// One annotator's view of the corpus order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SessionOrder {
    pub annotator_id: String,
    pub seed: u64,
    /// `permutation[position]` is a corpus index.
    pub permutation: Vec<usize>,
    pub randomized: bool,
    #[serde(skip)]
    positions: Vec<usize>,
}

impl SessionOrder {
    /// Corpus order unless `randomized`, in which case the order is shuffled
    /// with a seed derived from the annotator id.
    pub fn new(annotator_id: &str, global_seed: u64, n: usize, randomized: bool) -> Self {
        let seed = derive_seed(annotator_id, global_seed);
        let permutation = if randomized {
            shuffle_order(n, seed)
        } else {
            (0..n).collect()
        };
        let mut positions = vec![0; n];
        for (pos, &idx) in permutation.iter().enumerate() {
            positions[idx] = pos;
        }
        Self {
            annotator_id: annotator_id.to_string(),
            seed,
            permutation,
            randomized,
            positions,
        }
    }

    pub fn len(&self) -> usize {
        self.permutation.len()
    }

    pub fn is_empty(&self) -> bool {
        self.permutation.is_empty()
    }

    pub fn task_at(&self, position: usize) -> Result<usize, OrderError> {
        self.permutation
            .get(position)
            .copied()
            .ok_or(OrderError::OutOfRange {
                index: position,
                len: self.len(),
            })
    }

    /// Position of corpus index `task_index` in this order.
    pub fn position_of(&self, task_index: usize) -> Result<usize, OrderError> {
        self.positions
            .get(task_index)
            .copied()
            .ok_or(OrderError::OutOfRange {
                index: task_index,
                len: self.len(),
            })
    }

    /// First position at or after `from`, wrapping once, whose task is not
    /// annotated.
    pub fn next_unannotated(
        &self,
        is_annotated: impl Fn(usize) -> bool,
        from: usize,
    ) -> Result<Option<usize>, OrderError> {
        let n = self.len();
        if from >= n {
            return Err(OrderError::OutOfRange {
                index: from,
                len: n,
            });
        }
        Ok((0..n)
            .map(|k| (from + k) % n)
            .find(|&p| !is_annotated(self.permutation[p])))
    }

    /// Where the session goes after a successful commit at `current`.
    /// Single mode moves to the next unannotated task (absent when none
    /// remain); multi mode stays put.
    pub fn advance(
        &self,
        current: usize,
        mode: AnnotationMode,
        is_annotated: impl Fn(usize) -> bool,
    ) -> Result<Option<usize>, OrderError> {
        let n = self.len();
        if current >= n {
            return Err(OrderError::OutOfRange {
                index: current,
                len: n,
            });
        }
        match mode {
            AnnotationMode::Multi => Ok(Some(current)),
            AnnotationMode::Single => self.next_unannotated(is_annotated, (current + 1) % n),
        }
    }
}
