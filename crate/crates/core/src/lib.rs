//! Computational core for a pairwise explanatory verifier.
//!
//! A pairwise verifier reads a question together with two candidate
//! responses and emits free-form reasoning plus a 0–10 rating per
//! response. This crate contains everything around that contract that
//! is pure computation:
//!
//! - [`types`]: the shared domain types (questions, responses, pairs,
//!   judgments) and their JSONL-facing serialization.
//! - [`reward`]: clamped binary cross-entropy reward shaping and the
//!   rollout-group advantage pipeline (group-relative normalization,
//!   zero-variance filtering).
//! - [`verdict`]: parsers for verifier and generator completions —
//!   think-span stripping, rating extraction, boxed-answer extraction —
//!   and a numeric answer-equivalence checker with a pluggable oracle.
//! - [`curation`]: the dataset-preparation cascade (question filters,
//!   ground-truth validation, response labeling, pair construction,
//!   length and difficulty filters, holdout splitting).
//! - [`metrics`]: calibration, judgment accuracy by label configuration,
//!   pass@k estimation, rating separation, and token-efficiency reports.
//!
//! The crate is `no_std` with `alloc`; IO, model clients, and the CLI
//! live in the companion `pairverdict-cli` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod curation;
mod math;
pub mod metrics;
pub mod reward;
pub mod tokenize;
pub mod types;
pub mod verdict;

pub use curation::{CurationConfig, CurationOutput, FilterReason, FilterVerdict};
pub use metrics::{CalibrationReport, SeparationReport, TokenEfficiency};
pub use reward::{RewardValue, RolloutGroup};
pub use tokenize::{ApproxTokenizer, Tokenizer};
pub use types::{
    gt_config, CandidateResponse, GtConfig, JudgmentRecord, PairInstance, ParseStatus, Question,
    QuestionSource, StageConfig, StrategyOutcome, VerifierJudgment,
};
pub use verdict::{answers_equivalent, extract_boxed, strip_think, AnswerOracle, ParsedCompletion};

/// FNV-1a hash of a string, stable across platforms and runs.
///
/// Used to derive per-question RNG streams and deterministic mock
/// responses; never for security.
pub fn stable_hash64(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}
