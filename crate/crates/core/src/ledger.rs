//! Exact operation and activation-memory accounting for a training run.
//!
//! Counts feature aggregations (sparse `Â·X` products), feature transformations
//! (affine + ReLU), floating-point operations, and the high-water mark of live
//! activation bytes. The ledger tracks logical buffer sizes, not allocator or
//! process memory.
//!
//! Three high-water marks are kept:
//! - `peak_activation_bytes`: all live activation buffers over the whole run.
//! - `peak_batch_bytes`: buffers allocated inside a batch scope, measured
//!   relative to the live total when the scope opened. This is the inner
//!   optimization loop's footprint.
//! - `materialized_bytes`: the largest full-graph inter-stage buffer recorded
//!   with [`CostLedger::record_materialized`].

use serde::{Deserialize, Serialize};

use crate::tensor::{DenseMatrix, Scalar};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CostLedger {
    pub fa_calls: u64,
    pub ft_calls: u64,
    pub flops: u64,
    pub peak_activation_bytes: u64,
    pub peak_batch_bytes: u64,
    pub materialized_bytes: u64,
    pub wall_time_secs: f64,
    #[serde(skip)]
    live_bytes: u64,
    #[serde(skip)]
    batch_base: Option<u64>,
}

impl CostLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record_fa(&mut self, flops: u64) {
        self.fa_calls += 1;
        self.flops += flops;
    }

    pub fn record_ft(&mut self, flops: u64) {
        self.ft_calls += 1;
        self.flops += flops;
    }

    pub fn record_flops(&mut self, flops: u64) {
        self.flops += flops;
    }

    /// Registers a live activation buffer of `bytes` bytes.
    pub fn alloc(&mut self, bytes: u64) {
        self.live_bytes += bytes;
        self.peak_activation_bytes = self.peak_activation_bytes.max(self.live_bytes);
        if let Some(base) = self.batch_base {
            self.peak_batch_bytes = self.peak_batch_bytes.max(self.live_bytes.saturating_sub(base));
        }
    }

    pub fn alloc_matrix<T: Scalar>(&mut self, m: &DenseMatrix<T>) {
        self.alloc(m.byte_size());
    }

    /// Releases a buffer previously registered with [`alloc`](Self::alloc).
    pub fn free(&mut self, bytes: u64) {
        self.live_bytes = self.live_bytes.saturating_sub(bytes);
    }

    pub fn free_matrix<T: Scalar>(&mut self, m: &DenseMatrix<T>) {
        self.free(m.byte_size());
    }

    /// Records a full-graph buffer produced between training stages.
    pub fn record_materialized(&mut self, bytes: u64) {
        self.materialized_bytes = self.materialized_bytes.max(bytes);
    }

    /// Opens a batch scope. Everything allocated until [`end_batch`](Self::end_batch)
    /// counts toward `peak_batch_bytes` and is released when the scope closes.
    pub fn begin_batch(&mut self) {
        debug_assert!(self.batch_base.is_none(), "nested batch scope");
        self.batch_base = Some(self.live_bytes);
    }

    pub fn end_batch(&mut self) {
        if let Some(base) = self.batch_base.take() {
            // buffers from before the scope may have been freed inside it
            self.live_bytes = self.live_bytes.min(base);
        }
    }

    pub fn live_bytes(&self) -> u64 {
        self.live_bytes
    }

    /// Copy of the counters with wall time zeroed, for determinism checks.
    pub fn without_timing(&self) -> Self {
        Self {
            wall_time_secs: 0.0,
            ..self.clone()
        }
    }
}
