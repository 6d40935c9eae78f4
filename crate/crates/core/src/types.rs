//! Domain types shared by every module.
//!
//! All types here are immutable value types: safe to clone, share, and
//! send between concurrent tasks. The JSONL wire format is one object
//! per line with the field names as declared; binary correctness labels
//! are serialized as `0`/`1` integers.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Corpus a question was drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuestionSource {
    Numina,
    Taco,
    Leetcode,
    Synthetic,
}

/// A problem statement with its canonical answer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Question {
    pub id: String,
    pub text: String,
    pub ground_truth: String,
    pub source: QuestionSource,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metadata: BTreeMap<String, String>,
}

impl Question {
    pub fn validate(&self) -> Result<(), TypeError> {
        if self.id.is_empty() {
            return Err(TypeError::EmptyQuestionId);
        }
        if self.ground_truth.is_empty() {
            return Err(TypeError::EmptyGroundTruth {
                id: self.id.clone(),
            });
        }
        Ok(())
    }
}

/// One sampled solution attempt for a question.
///
/// `stripped_text` is the completion with `<think>` spans removed;
/// `token_count` is computed over the stripped text by whichever
/// [`Tokenizer`](crate::tokenize::Tokenizer) the pipeline uses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateResponse {
    pub question_id: String,
    pub raw_text: String,
    pub stripped_text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extracted_answer: Option<String>,
    #[serde(default, with = "opt_bit")]
    pub label: Option<bool>,
    #[serde(default)]
    pub token_count: u64,
}

impl CandidateResponse {
    pub fn validate(&self) -> Result<(), TypeError> {
        if self.stripped_text.contains("<think>") {
            return Err(TypeError::UnstrippedThink {
                question_id: self.question_id.clone(),
            });
        }
        if matches!(&self.extracted_answer, Some(a) if a.is_empty()) {
            return Err(TypeError::EmptyExtractedAnswer {
                question_id: self.question_id.clone(),
            });
        }
        Ok(())
    }
}

/// A question plus two labeled candidate responses; the verifier's unit
/// of work.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairInstance {
    pub question: Question,
    pub response_a: CandidateResponse,
    pub response_b: CandidateResponse,
    #[serde(with = "bit_pair")]
    pub labels: (bool, bool),
}

impl PairInstance {
    pub fn new(
        question: Question,
        response_a: CandidateResponse,
        response_b: CandidateResponse,
    ) -> Result<Self, TypeError> {
        if response_a.question_id != question.id || response_b.question_id != question.id {
            return Err(TypeError::MismatchedQuestionId {
                expected: question.id.clone(),
            });
        }
        let labels = match (response_a.label, response_b.label) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                return Err(TypeError::UnlabeledResponse {
                    question_id: question.id.clone(),
                })
            }
        };
        Ok(Self {
            question,
            response_a,
            response_b,
            labels,
        })
    }

    pub fn validate(&self) -> Result<(), TypeError> {
        if self.response_a.question_id != self.question.id
            || self.response_b.question_id != self.question.id
        {
            return Err(TypeError::MismatchedQuestionId {
                expected: self.question.id.clone(),
            });
        }
        self.question.validate()?;
        self.response_a.validate()?;
        self.response_b.validate()
    }

    pub fn gt_config(&self) -> GtConfig {
        gt_config(self.labels)
    }
}

/// Outcome of parsing a verifier completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParseStatus {
    Ok,
    MissingRatings,
    OutOfRange,
    Malformed,
}

/// A parsed verifier completion: reasoning plus two ratings.
///
/// Ratings are `None` when they could not be extracted; raw values are
/// preserved for `out_of_range` so callers can inspect them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifierJudgment {
    #[serde(default)]
    pub reasoning: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rating_a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rating_b: Option<f64>,
    pub parse_status: ParseStatus,
}

impl VerifierJudgment {
    pub fn validate(&self) -> Result<(), TypeError> {
        if self.parse_status == ParseStatus::Ok {
            let ok = |r: Option<f64>| matches!(r, Some(v) if (0.0..=10.0).contains(&v));
            if !ok(self.rating_a) || !ok(self.rating_b) {
                return Err(TypeError::RatingOutOfRange);
            }
        }
        Ok(())
    }

    /// Both ratings, only when the completion parsed cleanly.
    pub fn ratings(&self) -> Option<(f64, f64)> {
        if self.parse_status == ParseStatus::Ok {
            Some((self.rating_a?, self.rating_b?))
        } else {
            None
        }
    }
}

/// Which of the four label patterns a response pair has.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GtConfig {
    BothCorrect,
    BothIncorrect,
    AOnly,
    BOnly,
}

/// Maps ground-truth labels to their configuration. Total and injective
/// over the four label patterns.
pub fn gt_config(labels: (bool, bool)) -> GtConfig {
    match labels {
        (true, true) => GtConfig::BothCorrect,
        (false, false) => GtConfig::BothIncorrect,
        (true, false) => GtConfig::AOnly,
        (false, true) => GtConfig::BOnly,
    }
}

impl From<(bool, bool)> for GtConfig {
    fn from(labels: (bool, bool)) -> Self {
        gt_config(labels)
    }
}

/// Hyperparameters for one RL training stage of the verifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageConfig {
    pub max_seq_len: u32,
    pub global_batch: u32,
    pub rollouts_per_prompt: u32,
    pub learning_rate: f64,
    pub kl_coef: f64,
    pub entropy_coef: f64,
    pub difficulty_cutoff: f64,
    pub steps: u32,
}

impl StageConfig {
    /// Math-only stage: 8,192 MSL, batch 256, 16 rollouts, 240 steps.
    pub fn stage1() -> Self {
        Self {
            max_seq_len: 8192,
            global_batch: 256,
            rollouts_per_prompt: 16,
            learning_rate: 1e-6,
            kl_coef: 0.001,
            entropy_coef: 0.0,
            difficulty_cutoff: 1.0,
            steps: 240,
        }
    }

    /// Math + coding stage: 16,384 MSL, batch 512, entropy bonus, and
    /// problems with difficulty > 0.8 filtered out. 120 steps.
    pub fn stage2() -> Self {
        Self {
            max_seq_len: 16384,
            global_batch: 512,
            rollouts_per_prompt: 16,
            learning_rate: 1e-6,
            kl_coef: 0.001,
            entropy_coef: 0.001,
            difficulty_cutoff: 0.8,
            steps: 120,
        }
    }

    pub fn validate(&self) -> Result<(), TypeError> {
        let counts_ok = self.max_seq_len > 0
            && self.global_batch > 0
            && self.rollouts_per_prompt > 0
            && self.steps > 0;
        if !counts_ok {
            return Err(TypeError::InvalidStageConfig("counts must be positive"));
        }
        if !(0.0..=1.0).contains(&self.difficulty_cutoff) {
            return Err(TypeError::InvalidStageConfig(
                "difficulty_cutoff must be in [0, 1]",
            ));
        }
        Ok(())
    }
}

/// One verifier judgment of a labeled pair, as logged to JSONL.
///
/// This is the record consumed by the reward pipeline (`judgment` +
/// `labels`) and by the analysis suite (`pass_bin` tags the question's
/// pass@k bin for separation reports).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgmentRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub question_id: Option<String>,
    pub judgment: VerifierJudgment,
    #[serde(with = "bit_pair")]
    pub labels: (bool, bool),
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pass_bin: Option<u32>,
}

/// Final result of running one test-time strategy on one question.
///
/// `total_tokens` sums prompt and completion tokens over every model
/// call the strategy made (generator, verifier, and finalizer alike).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyOutcome {
    pub question_id: String,
    pub final_answer: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correct: Option<bool>,
    pub total_tokens: u64,
    pub generations_used: u32,
    pub verifier_calls: u32,
    #[serde(default)]
    pub rating_trace: Vec<(Option<f64>, Option<f64>)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl StrategyOutcome {
    pub fn failed(question_id: String, error: String) -> Self {
        Self {
            question_id,
            final_answer: String::new(),
            correct: None,
            total_tokens: 0,
            generations_used: 0,
            verifier_calls: 0,
            rating_trace: Vec::new(),
            error: Some(error),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TypeError {
    #[error("question id must be nonempty")]
    EmptyQuestionId,
    #[error("question {id} has an empty ground truth")]
    EmptyGroundTruth { id: String },
    #[error("response for question {question_id} still contains a <think> span")]
    UnstrippedThink { question_id: String },
    #[error("response for question {question_id} has an empty extracted answer")]
    EmptyExtractedAnswer { question_id: String },
    #[error("pair responses must reference question {expected}")]
    MismatchedQuestionId { expected: String },
    #[error("pair for question {question_id} has an unlabeled response")]
    UnlabeledResponse { question_id: String },
    #[error("judgment marked ok must carry ratings in [0, 10]")]
    RatingOutOfRange,
    #[error("invalid stage config: {0}")]
    InvalidStageConfig(&'static str),
}

/// Serializes `Option<bool>` as `0`/`1`/`null`, accepting booleans and
/// integers on input.
mod opt_bit {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<bool>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(b) => s.serialize_u8(u8::from(*b)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<bool>, D::Error> {
        let raw = Option::<super::Bit>::deserialize(d)?;
        Ok(raw.map(|b| b.0))
    }
}

/// Serializes a label pair as a two-element `0`/`1` array.
mod bit_pair {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &(bool, bool), s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeTuple;
        let mut t = s.serialize_tuple(2)?;
        t.serialize_element(&u8::from(v.0))?;
        t.serialize_element(&u8::from(v.1))?;
        t.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(bool, bool), D::Error> {
        let (a, b) = <(super::Bit, super::Bit)>::deserialize(d)?;
        Ok((a.0, b.0))
    }
}

/// A binary label that tolerates `0`/`1` integers or JSON booleans.
#[derive(Clone, Copy)]
struct Bit(bool);

impl<'de> Deserialize<'de> for Bit {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl serde::de::Visitor<'_> for V {
            type Value = Bit;
            fn expecting(&self, f: &mut core::fmt::Formatter) -> core::fmt::Result {
                f.write_str("0, 1, or a boolean")
            }
            fn visit_bool<E: serde::de::Error>(self, v: bool) -> Result<Bit, E> {
                Ok(Bit(v))
            }
            fn visit_u64<E: serde::de::Error>(self, v: u64) -> Result<Bit, E> {
                match v {
                    0 => Ok(Bit(false)),
                    1 => Ok(Bit(true)),
                    _ => Err(E::custom("label must be 0 or 1")),
                }
            }
            fn visit_i64<E: serde::de::Error>(self, v: i64) -> Result<Bit, E> {
                match v {
                    0 => Ok(Bit(false)),
                    1 => Ok(Bit(true)),
                    _ => Err(E::custom("label must be 0 or 1")),
                }
            }
            fn visit_f64<E: serde::de::Error>(self, v: f64) -> Result<Bit, E> {
                if v == 0.0 {
                    Ok(Bit(false))
                } else if v == 1.0 {
                    Ok(Bit(true))
                } else {
                    Err(E::custom("label must be 0 or 1"))
                }
            }
        }
        d.deserialize_any(V)
    }
}
