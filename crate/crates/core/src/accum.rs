//! Compensated summation and a deterministic parallel reduction.
//!
//! Monte Carlo loops in this crate add millions of same-sign terms; plain
//! `f64` accumulation loses digits we later divide by. [`CompensatedSum`]
//! implements Neumaier's variant of Kahan summation, which also handles the
//! case where the incoming term exceeds the running sum in magnitude.

use rayon::prelude::*;
use std::ops::Range;

/// Neumaier compensated accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        // Whichever operand is larger in magnitude donated the rounding error.
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Sum an iterator with compensation.
pub fn sum_compensated<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut acc = CompensatedSum::new();
    for v in values {
        acc.add(v);
    }
    acc.total()
}

/// Fixed chunk width for [`par_chunk_reduce`]. Determinism depends on chunk
/// boundaries being a function of the replication count alone, never of the
/// worker count.
pub(crate) const CHUNK: usize = 4096;

/// Deterministic parallel accumulation of `dims` running sums over
/// `0..reps`.
///
/// `per_chunk` fills one accumulator slice for a contiguous replication
/// range. Chunks are combined in index order with compensated addition, so
/// the result is bit-identical for any Rayon thread count (including 1).
pub(crate) fn par_chunk_reduce<F>(reps: usize, dims: usize, per_chunk: F) -> Vec<f64>
where
    F: Fn(Range<usize>, &mut [CompensatedSum]) + Sync,
{
    let ranges: Vec<Range<usize>> = (0..reps)
        .step_by(CHUNK)
        .map(|lo| lo..(lo + CHUNK).min(reps))
        .collect();
    let partials: Vec<Vec<f64>> = ranges
        .into_par_iter()
        .map(|range| {
            let mut acc = vec![CompensatedSum::new(); dims];
            per_chunk(range, &mut acc);
            acc.iter().map(|a| a.total()).collect()
        })
        .collect();
    let mut out = vec![CompensatedSum::new(); dims];
    for partial in &partials {
        for (acc, &value) in out.iter_mut().zip(partial) {
            acc.add(value);
        }
    }
    out.iter().map(|a| a.total()).collect()
}

/// Deterministic parallel map over `0..reps` collecting one `f64` per
/// replication, in replication order.
pub(crate) fn par_map_collect<F>(reps: usize, per_rep: F) -> Vec<f64>
where
    F: Fn(usize) -> f64 + Sync,
{
    let mut out = vec![0.0f64; reps];
    out.par_chunks_mut(CHUNK)
        .enumerate()
        .for_each(|(chunk_idx, slot)| {
            let base = chunk_idx * CHUNK;
            for (offset, cell) in slot.iter_mut().enumerate() {
                *cell = per_rep(base + offset);
            }
        });
    out
}

// ---------------------------------------------------------------------------
