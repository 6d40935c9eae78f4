//! Dataset-preparation cascade for verifier training pairs.
//!
//! Questions flow through a fixed filter order — multiple-choice,
//! multi-answer, proof-style, then numeric ground-truth validation —
//! before their responses are stripped, labeled, and combined into
//! rating pairs. Pairs that blow the input-token budget are dropped,
//! and the survivors are split into train and holdout manifests.
//! Every stage is pure and seeded, so the same corpus, config, and
//! seed always produce identical manifests.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stable_hash64;
use crate::tokenize::Tokenizer;
use crate::types::{CandidateResponse, PairInstance, Question};
use crate::verdict::{extract_boxed, strip_think, AnswerOracle, BuiltinEquivalence};

pub use crate::verdict::expr::ExprError;

/// Why a question or pair was rejected (or `ok` if it was not).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterReason {
    Ok,
    MultipleChoice,
    MultiAnswer,
    OpenEndedProof,
    NonNumericGroundTruth,
    AmbiguousFlagged,
    TooLong,
    TooHard,
}

/// Outcome of one filter stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterVerdict {
    pub accepted: bool,
    pub reason: FilterReason,
}

impl FilterVerdict {
    pub fn accept() -> Self {
        Self {
            accepted: true,
            reason: FilterReason::Ok,
        }
    }

    pub fn reject(reason: FilterReason) -> Self {
        debug_assert!(reason != FilterReason::Ok);
        Self {
            accepted: false,
            reason,
        }
    }
}

/// Knobs for the curation pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CurationConfig {
    /// Question + both stripped responses + template overhead must not
    /// exceed this many (approximate) tokens.
    pub max_input_tokens: usize,
    /// Questions with a higher fraction of incorrect samples are
    /// rejected as too hard.
    pub difficulty_cutoff: f64,
    pub pairs_per_question: usize,
    pub holdout_count: usize,
    pub seed: u64,
    /// Tokens the pairwise prompt template adds around the three texts.
    pub template_overhead_tokens: usize,
}

impl Default for CurationConfig {
    fn default() -> Self {
        Self {
            max_input_tokens: 6144,
            difficulty_cutoff: 0.8,
            pairs_per_question: 6,
            holdout_count: 294,
            seed: 0,
            template_overhead_tokens: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CurationError {
    #[error("difficulty needs at least one labeled response")]
    NoResponses,
    #[error("cannot hold out {need} of {have} pairs")]
    InsufficientPairs { have: usize, need: usize },
}

/// Evaluates a ground-truth answer to a single number, after stripping
/// math-mode wrappers.
pub fn evaluate_ground_truth(expr: &str) -> Result<f64, ExprError> {
    crate::verdict::expr::evaluate(&crate::verdict::normalize_answer(expr))
}

/// Applies the question-level filters in order and reports the first
/// failure.
pub fn filter_question(q: &Question) -> FilterVerdict {
    let gt = q.ground_truth.trim();
    let markers = option_markers(&q.text);
    if markers >= 2 || (is_single_choice_letter(gt) && markers >= 1) {
        return FilterVerdict::reject(FilterReason::MultipleChoice);
    }
    if has_multiple_answers(gt) {
        return FilterVerdict::reject(FilterReason::MultiAnswer);
    }
    if has_proof_keywords(&q.text) {
        return FilterVerdict::reject(FilterReason::OpenEndedProof);
    }
    if evaluate_ground_truth(gt).is_err() {
        return FilterVerdict::reject(FilterReason::NonNumericGroundTruth);
    }
    FilterVerdict::accept()
}

/// Counts distinct option markers like `A)`, `(B)`, `C.`, `D:` in the
/// question text.
fn option_markers(text: &str) -> usize {
    let mut seen = [false; 5];
    let mut prev: Option<char> = None;
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        if ('A'..='E').contains(&c) {
            let boundary = prev.is_none_or(|p| p.is_whitespace() || p == '(');
            let marked = matches!(chars.peek(), Some(')') | Some('.') | Some(':'));
            if boundary && marked {
                seen[(c as u8 - b'A') as usize] = true;
            }
        }
        prev = Some(c);
    }
    seen.iter().filter(|s| **s).count()
}

fn is_single_choice_letter(gt: &str) -> bool {
    let mut chars = gt.chars();
    matches!((chars.next(), chars.next()), (Some('A'..='E'), None))
}

fn has_multiple_answers(gt: &str) -> bool {
    gt.contains([',', ';']) || contains_word(&gt.to_lowercase(), "and")
}

fn has_proof_keywords(text: &str) -> bool {
    let lower = text.to_lowercase();
    contains_word(&lower, "prove") || lower.contains("show that") || lower.contains("explain why")
}

fn contains_word(haystack: &str, word: &str) -> bool {
    haystack.match_indices(word).any(|(pos, _)| {
        let before_ok = haystack[..pos]
            .chars()
            .next_back()
            .is_none_or(|c| !c.is_alphanumeric());
        let after_ok = haystack[pos + word.len()..]
            .chars()
            .next()
            .is_none_or(|c| !c.is_alphanumeric());
        before_ok && after_ok
    })
}

/// Extracts each response's boxed answer and labels it against the
/// question's ground truth. A response without a boxed answer is
/// labeled incorrect.
pub fn label_responses(q: &Question, responses: Vec<CandidateResponse>) -> Vec<CandidateResponse> {
    label_responses_with(q, responses, &BuiltinEquivalence)
}

pub fn label_responses_with(
    q: &Question,
    mut responses: Vec<CandidateResponse>,
    oracle: &dyn AnswerOracle,
) -> Vec<CandidateResponse> {
    for r in &mut responses {
        let extracted = extract_boxed(&r.stripped_text)
            .map(String::from)
            .filter(|s| !s.trim().is_empty());
        r.label = Some(
            extracted
                .as_deref()
                .is_some_and(|answer| oracle.equivalent(answer, &q.ground_truth)),
        );
        r.extracted_answer = extracted;
    }
    responses
}

/// Fraction of incorrect responses among the samples; the pass@k-style
/// difficulty proxy used for the `> cutoff` filter.
pub fn difficulty(labeled: &[CandidateResponse]) -> Result<f64, CurationError> {
    if labeled.is_empty() {
        return Err(CurationError::NoResponses);
    }
    let correct = labeled.iter().filter(|r| r.label == Some(true)).count();
    Ok(1.0 - correct as f64 / labeled.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum PairKind {
    CorrectIncorrect,
    IncorrectCorrect,
    CorrectCorrect,
    IncorrectIncorrectDistinct,
    IncorrectIncorrectIdentical,
}

/// Per-question pair quota: two correct-vs-incorrect, one reversed, one
/// correct pair, one incorrect pair with distinct answers, and one with
/// identical answers — covering all four label configurations plus the
/// identically-incorrect failure mode.
const PAIR_QUOTA: [PairKind; 6] = [
    PairKind::CorrectIncorrect,
    PairKind::CorrectIncorrect,
    PairKind::IncorrectCorrect,
    PairKind::CorrectCorrect,
    PairKind::IncorrectIncorrectDistinct,
    PairKind::IncorrectIncorrectIdentical,
];

fn question_rng(seed: u64, question_id: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ stable_hash64(question_id))
}

/// Samples up to `cfg.pairs_per_question` response pairs following the
/// quota, cycling through whatever categories remain feasible when a
/// pool runs dry. Deterministic under `cfg.seed`.
pub fn build_pairs(
    q: &Question,
    labeled: &[CandidateResponse],
    cfg: &CurationConfig,
) -> Vec<PairInstance> {
    if labeled.len() < 2 {
        return Vec::new();
    }
    let correct: Vec<usize> = indexes_with_label(labeled, true);
    let incorrect: Vec<usize> = indexes_with_label(labeled, false);
    let mut rng = question_rng(cfg.seed, &q.id);
    let mut used: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut pairs = Vec::new();
    let mut slot = 0;
    let mut stalled = 0;
    while pairs.len() < cfg.pairs_per_question && stalled < PAIR_QUOTA.len() {
        let kind = PAIR_QUOTA[slot % PAIR_QUOTA.len()];
        slot += 1;
        match sample_pair(kind, &correct, &incorrect, labeled, &used, &mut rng) {
            Some((i, j)) => {
                stalled = 0;
                used.insert((i, j));
                let pair = PairInstance::new(q.clone(), labeled[i].clone(), labeled[j].clone())
                    .expect("pool members are labeled and reference this question");
                pairs.push(pair);
            }
            None => stalled += 1,
        }
    }
    pairs
}

fn indexes_with_label(labeled: &[CandidateResponse], want: bool) -> Vec<usize> {
    labeled
        .iter()
        .enumerate()
        .filter(|(_, r)| r.label == Some(want))
        .map(|(i, _)| i)
        .collect()
}

fn sample_pair(
    kind: PairKind,
    correct: &[usize],
    incorrect: &[usize],
    labeled: &[CandidateResponse],
    used: &BTreeSet<(usize, usize)>,
    rng: &mut ChaCha8Rng,
) -> Option<(usize, usize)> {
    let (pool_a, pool_b) = match kind {
        PairKind::CorrectIncorrect => (correct, incorrect),
        PairKind::IncorrectCorrect => (incorrect, correct),
        PairKind::CorrectCorrect => (correct, correct),
        PairKind::IncorrectIncorrectDistinct | PairKind::IncorrectIncorrectIdentical => {
            (incorrect, incorrect)
        }
    };
    if pool_a.is_empty() || pool_b.is_empty() {
        return None;
    }
    let viable = |i: usize, j: usize| {
        if i == j || used.contains(&(i, j)) {
            return false;
        }
        match kind {
            PairKind::IncorrectIncorrectDistinct => !same_answer(labeled, i, j),
            PairKind::IncorrectIncorrectIdentical => same_answer(labeled, i, j),
            _ => true,
        }
    };
    for _ in 0..64 {
        let i = pool_a[rng.random_range(0..pool_a.len())];
        let j = pool_b[rng.random_range(0..pool_b.len())];
        if viable(i, j) {
            return Some((i, j));
        }
    }
    // sparse pools: fall back to a deterministic scan
    for &i in pool_a {
        for &j in pool_b {
            if viable(i, j) {
                return Some((i, j));
            }
        }
    }
    None
}

fn same_answer(labeled: &[CandidateResponse], i: usize, j: usize) -> bool {
    match (&labeled[i].extracted_answer, &labeled[j].extracted_answer) {
        (Some(a), Some(b)) => BuiltinEquivalence.equivalent(a, b),
        _ => false,
    }
}

/// Rejects a pair whose question plus stripped responses plus template
/// overhead exceed the input-token budget. Exactly at the budget is
/// accepted.
pub fn length_filter(
    pair: &PairInstance,
    cfg: &CurationConfig,
    tokenizer: &dyn Tokenizer,
) -> FilterVerdict {
    let total = tokenizer.count_tokens(&pair.question.text)
        + tokenizer.count_tokens(&pair.response_a.stripped_text)
        + tokenizer.count_tokens(&pair.response_b.stripped_text)
        + cfg.template_overhead_tokens;
    if total > cfg.max_input_tokens {
        FilterVerdict::reject(FilterReason::TooLong)
    } else {
        FilterVerdict::accept()
    }
}

/// Splits pairs into train and a holdout of exactly
/// `cfg.holdout_count` tuples. Whole questions are sampled into the
/// holdout while they fit, so the split is question-disjoint whenever
/// some subset of questions sums to the quota; only if no whole
/// question fits the remainder is one question split across sides.
pub fn split_holdout(
    pairs: Vec<PairInstance>,
    cfg: &CurationConfig,
) -> Result<(Vec<PairInstance>, Vec<PairInstance>), CurationError> {
    if pairs.len() <= cfg.holdout_count {
        return Err(CurationError::InsufficientPairs {
            have: pairs.len(),
            need: cfg.holdout_count,
        });
    }
    let mut by_question: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (idx, pair) in pairs.iter().enumerate() {
        by_question
            .entry(pair.question.id.as_str())
            .or_default()
            .push(idx);
    }
    let mut question_ids: Vec<&str> = by_question.keys().copied().collect();
    question_ids.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.seed));

    let mut holdout: BTreeSet<usize> = BTreeSet::new();
    let mut remaining = cfg.holdout_count;
    for qid in &question_ids {
        let tuples = &by_question[qid];
        if tuples.len() <= remaining {
            holdout.extend(tuples.iter().copied());
            remaining -= tuples.len();
            if remaining == 0 {
                break;
            }
        }
    }
    if remaining > 0 {
        for qid in &question_ids {
            let tuples = &by_question[qid];
            if tuples.iter().any(|idx| holdout.contains(idx)) {
                continue;
            }
            for idx in tuples {
                if remaining == 0 {
                    break;
                }
                holdout.insert(*idx);
                remaining -= 1;
            }
            if remaining == 0 {
                break;
            }
        }
    }

    let mut train = Vec::with_capacity(pairs.len() - cfg.holdout_count);
    let mut validation = Vec::with_capacity(cfg.holdout_count);
    for (idx, pair) in pairs.into_iter().enumerate() {
        if holdout.contains(&idx) {
            validation.push(pair);
        } else {
            train.push(pair);
        }
    }
    Ok((train, validation))
}

/// One rejected question or pair in the rejection report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    pub id: String,
    pub reason: FilterReason,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CurationStats {
    pub questions_in: usize,
    pub questions_rejected: usize,
    pub pairs_built: usize,
    pub pairs_rejected: usize,
    pub train_count: usize,
    pub validation_count: usize,
}

/// Everything the pipeline produces for one corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurationOutput {
    pub train: Vec<PairInstance>,
    pub validation: Vec<PairInstance>,
    pub rejections: Vec<Rejection>,
    pub stats: CurationStats,
}

/// Runs the full cascade: question filters, think stripping, labeling,
/// difficulty filter, pair building, length filter, and the holdout
/// split. Questions are processed in id order so output manifests are
/// deterministic.
///
/// `ambiguous_ids` carries the verdicts of the optional LLM-as-a-judge
/// ambiguity pass; pass an empty set when no judge is configured.
pub fn curate_corpus(
    questions: &[Question],
    responses: &BTreeMap<String, Vec<CandidateResponse>>,
    ambiguous_ids: &BTreeSet<String>,
    cfg: &CurationConfig,
    tokenizer: &dyn Tokenizer,
    oracle: &dyn AnswerOracle,
) -> Result<CurationOutput, CurationError> {
    let mut sorted: Vec<&Question> = questions.iter().collect();
    sorted.sort_by(|a, b| a.id.cmp(&b.id));

    let mut rejections = Vec::new();
    let mut kept_pairs = Vec::new();
    let mut stats = CurationStats {
        questions_in: sorted.len(),
        ..CurationStats::default()
    };

    for q in sorted {
        let mut reject = |reason| {
            rejections.push(Rejection {
                id: q.id.clone(),
                reason,
            });
        };
        if ambiguous_ids.contains(&q.id) {
            stats.questions_rejected += 1;
            reject(FilterReason::AmbiguousFlagged);
            continue;
        }
        let verdict = filter_question(q);
        if !verdict.accepted {
            stats.questions_rejected += 1;
            reject(verdict.reason);
            continue;
        }
        let prepared: Vec<CandidateResponse> = responses
            .get(&q.id)
            .cloned()
            .unwrap_or_default()
            .into_iter()
            .map(|mut r| {
                r.stripped_text = strip_think(&r.raw_text).final_answer_region;
                r.token_count = tokenizer.count_tokens(&r.stripped_text) as u64;
                r
            })
            .collect();
        if prepared.is_empty() {
            continue;
        }
        let labeled = label_responses_with(q, prepared, oracle);
        let diff = difficulty(&labeled)?;
        if diff > cfg.difficulty_cutoff {
            stats.questions_rejected += 1;
            reject(FilterReason::TooHard);
            continue;
        }
        for pair in build_pairs(q, &labeled, cfg) {
            stats.pairs_built += 1;
            if length_filter(&pair, cfg, tokenizer).accepted {
                kept_pairs.push(pair);
            } else {
                stats.pairs_rejected += 1;
                rejections.push(Rejection {
                    id: q.id.clone(),
                    reason: FilterReason::TooLong,
                });
            }
        }
    }

    let (train, validation) = split_holdout(kept_pairs, cfg)?;
    stats.train_count = train.len();
    stats.validation_count = validation.len();
    Ok(CurationOutput {
        train,
        validation,
        rejections,
        stats,
    })
}
