//! Analyses over logged judgments and strategy outcomes.
//!
//! Everything here is a pure function over in-memory record lists:
//! calibration against the ideal rating-to-accuracy line, judgment
//! accuracy broken down by label configuration, the combinatorial
//! pass@k estimator, rating separation between correct and incorrect
//! responses, distinct-answer counting, and token-efficiency ratios
//! between two strategies.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math;
use crate::types::{gt_config, CandidateResponse, GtConfig, JudgmentRecord, StrategyOutcome};
use crate::verdict::answers_equivalent;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("pass@k needs 1 <= k <= n, got k={k} with n={n}")]
    InvalidK { k: usize, n: usize },
    #[error("outcome lists cover different question sets")]
    MismatchedQuestions,
    #[error("baseline outcomes consumed zero tokens")]
    EmptyBaseline,
}

/// One equal-width rating bucket of a calibration report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationBucket {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_rating: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub empirical_accuracy: Option<f64>,
    /// What a perfectly calibrated verifier would score here: the
    /// bucket midpoint divided by 10.
    pub ideal_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub buckets: Vec<CalibrationBucket>,
    pub total: usize,
    /// Count-weighted absolute gap between empirical and ideal accuracy.
    pub ece: f64,
}

/// Buckets `(rating, correct)` points over [0, 10] and computes the
/// expected calibration error against the ideal line. Empty buckets
/// contribute zero weight.
pub fn calibration(records: &[(f64, bool)], n_buckets: usize) -> CalibrationReport {
    assert!(n_buckets >= 2, "need at least two calibration buckets");
    let width = 10.0 / n_buckets as f64;
    let mut counts = alloc::vec![0usize; n_buckets];
    let mut rating_sums = alloc::vec![0.0f64; n_buckets];
    let mut correct_counts = alloc::vec![0usize; n_buckets];
    for &(rating, correct) in records {
        debug_assert!((0.0..=10.0).contains(&rating));
        let idx = (math::floor(rating.clamp(0.0, 10.0) / width) as usize).min(n_buckets - 1);
        counts[idx] += 1;
        rating_sums[idx] += rating;
        correct_counts[idx] += usize::from(correct);
    }
    let total = records.len();
    let mut buckets = Vec::with_capacity(n_buckets);
    let mut ece = 0.0;
    for i in 0..n_buckets {
        let lo = width * i as f64;
        let hi = width * (i + 1) as f64;
        let ideal_accuracy = (lo + hi) / 2.0 / 10.0;
        let (mean_rating, empirical_accuracy) = if counts[i] > 0 {
            let empirical = correct_counts[i] as f64 / counts[i] as f64;
            ece += counts[i] as f64 / total as f64 * math::fabs(empirical - ideal_accuracy);
            (
                Some(rating_sums[i] / counts[i] as f64),
                Some(empirical),
            )
        } else {
            (None, None)
        };
        buckets.push(CalibrationBucket {
            lo,
            hi,
            count: counts[i],
            mean_rating,
            empirical_accuracy,
            ideal_accuracy,
        });
    }
    CalibrationReport {
        buckets,
        total,
        ece,
    }
}

/// Judgment accuracy per label configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfigAccuracy {
    pub total: usize,
    pub correct: usize,
    pub accuracy: f64,
}

/// A judgment counts as correct when thresholding both ratings at `tau`
/// reproduces both ground-truth labels; records that failed to parse
/// count as incorrect. Configurations with no records are absent from
/// the map.
pub fn accuracy_by_gt_config(
    records: &[JudgmentRecord],
    tau: f64,
) -> BTreeMap<GtConfig, ConfigAccuracy> {
    let mut tallies: BTreeMap<GtConfig, (usize, usize)> = BTreeMap::new();
    for record in records {
        let entry = tallies.entry(gt_config(record.labels)).or_insert((0, 0));
        entry.0 += 1;
        if let Some((a, b)) = record.judgment.ratings() {
            if (a >= tau) == record.labels.0 && (b >= tau) == record.labels.1 {
                entry.1 += 1;
            }
        }
    }
    tallies
        .into_iter()
        .map(|(config, (total, correct))| {
            (
                config,
                ConfigAccuracy {
                    total,
                    correct,
                    accuracy: correct as f64 / total as f64,
                },
            )
        })
        .collect()
}

/// Unbiased pass@k estimator: `1 − C(n−c, k)/C(n, k)` for `n` samples
/// of which `c` are correct.
pub fn success_rate(samples: &[bool], k: usize) -> Result<f64, MetricsError> {
    let n = samples.len();
    if k == 0 || k > n {
        return Err(MetricsError::InvalidK { k, n });
    }
    let c = samples.iter().filter(|s| **s).count();
    let mut miss_ratio = 1.0;
    for i in 0..k {
        let numerator = (n - c) as i64 - i as i64;
        if numerator <= 0 {
            miss_ratio = 0.0;
            break;
        }
        miss_ratio *= numerator as f64 / (n - i) as f64;
    }
    Ok(1.0 - miss_ratio)
}

/// Rating statistics for one pass@k bin, split by response correctness.
/// A side with no responses is reported as absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationBin {
    pub bin: u32,
    pub n_correct: usize,
    pub n_incorrect: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_rating_correct: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_rating_incorrect: Option<f64>,
    /// `mean_rating_correct − mean_rating_incorrect`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub var_correct: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub var_incorrect: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationReport {
    pub bins: Vec<SeparationBin>,
}

/// Per-bin rating means and population variances for correct versus
/// incorrect responses. Each point is `(rating, correct, bin)`.
pub fn separation(points: &[(f64, bool, u32)]) -> SeparationReport {
    let mut by_bin: BTreeMap<u32, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for &(rating, correct, bin) in points {
        let entry = by_bin.entry(bin).or_default();
        if correct {
            entry.0.push(rating);
        } else {
            entry.1.push(rating);
        }
    }
    let bins = by_bin
        .into_iter()
        .map(|(bin, (correct, incorrect))| {
            let side = |xs: &Vec<f64>| {
                (!xs.is_empty())
                    .then(|| (math::mean(xs), math::population_variance(xs)))
            };
            let c = side(&correct);
            let i = side(&incorrect);
            SeparationBin {
                bin,
                n_correct: correct.len(),
                n_incorrect: incorrect.len(),
                mean_rating_correct: c.map(|(m, _)| m),
                mean_rating_incorrect: i.map(|(m, _)| m),
                gap: c.and_then(|(mc, _)| i.map(|(mi, _)| mc - mi)),
                var_correct: c.map(|(_, v)| v),
                var_incorrect: i.map(|(_, v)| v),
            }
        })
        .collect();
    SeparationReport { bins }
}

/// Expands judgment records into `(rating, label)` points for
/// calibration; both sides of every cleanly parsed judgment contribute.
pub fn rating_label_points(records: &[JudgmentRecord]) -> Vec<(f64, bool)> {
    records
        .iter()
        .filter_map(|r| r.judgment.ratings().map(|pair| (pair, r.labels)))
        .flat_map(|((a, b), labels)| [(a, labels.0), (b, labels.1)])
        .collect()
}

/// Expands judgment records into `(rating, label, bin)` points for
/// separation; records without a pass bin are skipped.
pub fn judgment_points(records: &[JudgmentRecord]) -> Vec<(f64, bool, u32)> {
    records
        .iter()
        .filter_map(|r| {
            let bin = r.pass_bin?;
            r.judgment.ratings().map(|pair| (pair, r.labels, bin))
        })
        .flat_map(|((a, b), labels, bin)| [(a, labels.0, bin), (b, labels.1, bin)])
        .collect()
}

/// Number of equivalence classes among extracted answers; responses
/// without an extracted answer form a single no-answer class.
pub fn distinct_answers(responses: &[CandidateResponse]) -> usize {
    let mut representatives: Vec<&str> = Vec::new();
    let mut unanswered = false;
    for response in responses {
        match response.extracted_answer.as_deref() {
            None => unanswered = true,
            Some(answer) => {
                if !representatives
                    .iter()
                    .any(|rep| answers_equivalent(rep, answer))
                {
                    representatives.push(answer);
                }
            }
        }
    }
    representatives.len() + usize::from(unanswered)
}

/// Token-efficiency comparison of strategy `a` against baseline `b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenEfficiency {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accuracy_a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accuracy_b: Option<f64>,
    /// `Σ tokens(a) / Σ tokens(b)`.
    pub token_ratio: f64,
    pub total_tokens_a: u64,
    pub total_tokens_b: u64,
    pub n_questions: usize,
}

/// Compares two outcome lists over the same question set (aligned by
/// id). Accuracy is computed over outcomes whose correctness is known.
pub fn token_efficiency(
    a: &[StrategyOutcome],
    b: &[StrategyOutcome],
) -> Result<TokenEfficiency, MetricsError> {
    let ids = |outcomes: &[StrategyOutcome]| {
        let mut ids: Vec<String> = outcomes.iter().map(|o| o.question_id.clone()).collect();
        ids.sort_unstable();
        ids
    };
    if ids(a) != ids(b) {
        return Err(MetricsError::MismatchedQuestions);
    }
    let total = |outcomes: &[StrategyOutcome]| outcomes.iter().map(|o| o.total_tokens).sum::<u64>();
    let accuracy = |outcomes: &[StrategyOutcome]| {
        let known: Vec<bool> = outcomes.iter().filter_map(|o| o.correct).collect();
        (!known.is_empty())
            .then(|| known.iter().filter(|c| **c).count() as f64 / known.len() as f64)
    };
    let total_tokens_a = total(a);
    let total_tokens_b = total(b);
    if total_tokens_b == 0 {
        return Err(MetricsError::EmptyBaseline);
    }
    Ok(TokenEfficiency {
        accuracy_a: accuracy(a),
        accuracy_b: accuracy(b),
        token_ratio: total_tokens_a as f64 / total_tokens_b as f64,
        total_tokens_a,
        total_tokens_b,
        n_questions: a.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{ParseStatus, VerifierJudgment};
    use alloc::format;
    use alloc::string::ToString;
    use alloc::{vec, vec::Vec};
    use proptest::prelude::*;

    fn record(a: f64, b: f64, labels: (bool, bool)) -> JudgmentRecord {
        JudgmentRecord {
            question_id: None,
            judgment: VerifierJudgment {
                reasoning: String::new(),
                rating_a: Some(a),
                rating_b: Some(b),
                parse_status: ParseStatus::Ok,
            },
            labels,
            pass_bin: None,
        }
    }

    #[test]
    fn gt_config_accuracy_thresholds_both_ratings() {
        let records = vec![
            record(2.0, 1.0, (false, false)), // correct judgment
            record(3.0, 8.0, (true, false)),  // both sides mismatched
            record(9.0, 1.0, (true, false)),  // correct judgment
            record(9.0, 9.0, (true, true)),   // correct judgment
        ];
        let acc = accuracy_by_gt_config(&records, 5.0);
        assert_eq!(acc[&GtConfig::BothIncorrect].accuracy, 1.0);
        assert_eq!(acc[&GtConfig::AOnly].accuracy, 0.5);
        assert_eq!(acc[&GtConfig::BothCorrect].accuracy, 1.0);
        assert!(!acc.contains_key(&GtConfig::BOnly));
    }

    #[test]
    fn parse_failures_count_as_incorrect_judgments() {
        let mut bad = record(9.0, 9.0, (true, true));
        bad.judgment.parse_status = ParseStatus::Malformed;
        let acc = accuracy_by_gt_config(&[bad], 5.0);
        assert_eq!(acc[&GtConfig::BothCorrect].accuracy, 0.0);
        assert_eq!(acc[&GtConfig::BothCorrect].total, 1);
    }

    #[test]
    fn calibration_hand_cases() {
        // all ratings 10, half correct: one bucket, ideal 0.95
        let records: Vec<(f64, bool)> =
            (0..100).map(|i| (10.0, i % 2 == 0)).collect();
        let report = calibration(&records, 10);
        assert_eq!(report.total, 100);
        let last = report.buckets.last().unwrap();
        assert_eq!(last.count, 100);
        assert_eq!(last.empirical_accuracy, Some(0.5));
        assert_eq!(last.ideal_accuracy, 0.95);
        assert!((report.ece - 0.45).abs() < 1e-9);
        assert!(report.buckets[..9].iter().all(|b| b.count == 0));

        // all ratings 5, all correct: bucket [5,6), ideal 0.55
        let records: Vec<(f64, bool)> = (0..50).map(|_| (5.0, true)).collect();
        let report = calibration(&records, 10);
        let bucket = &report.buckets[5];
        assert_eq!(bucket.count, 50);
        assert_eq!(bucket.empirical_accuracy, Some(1.0));
        assert!((bucket.ideal_accuracy - 0.55).abs() < 1e-12);
        assert!((report.ece - 0.45).abs() < 1e-9);
    }

    #[test]
    fn perfectly_matching_buckets_give_zero_ece() {
        // place ratings at bucket midpoints with exactly matching rates
        let mut records = Vec::new();
        for bucket in 0..10 {
            let rating = bucket as f64 + 0.5;
            for i in 0..20 {
                records.push((rating, (i as f64) < 20.0 * rating / 10.0));
            }
        }
        let report = calibration(&records, 10);
        assert!(report.ece < 1e-9, "ece {}", report.ece);
    }

    #[test]
    fn success_rate_examples() {
        let all_wrong = vec![false; 16];
        assert_eq!(success_rate(&all_wrong, 16).unwrap(), 0.0);
        let all_right = vec![true; 16];
        for k in 1..=16 {
            assert_eq!(success_rate(&all_right, k).unwrap(), 1.0);
        }
        let half = vec![true, true, false, false];
        assert!((success_rate(&half, 2).unwrap() - 5.0 / 6.0).abs() < 1e-12);
        assert!(matches!(
            success_rate(&half, 5),
            Err(MetricsError::InvalidK { k: 5, n: 4 })
        ));
        assert!(success_rate(&half, 0).is_err());
    }

    #[test]
    fn success_rate_is_monotone_in_k() {
        let samples = [true, false, false, true, false, false, false, true];
        let mut prev = 0.0;
        for k in 1..=samples.len() {
            let rate = success_rate(&samples, k).unwrap();
            assert!(rate >= prev - 1e-12);
            prev = rate;
        }
    }

    #[test]
    fn separation_hand_case() {
        let points = vec![
            (9.0, true, 1),
            (9.0, true, 1),
            (1.0, false, 1),
            (3.0, false, 1),
        ];
        let report = separation(&points);
        assert_eq!(report.bins.len(), 1);
        let bin = &report.bins[0];
        assert_eq!(bin.gap, Some(7.0));
        assert_eq!(bin.var_incorrect, Some(1.0));
        assert_eq!(bin.var_correct, Some(0.0));
    }

    #[test]
    fn separation_reports_one_sided_bins_as_absent() {
        let report = separation(&[(4.0, true, 0), (6.0, true, 0)]);
        let bin = &report.bins[0];
        assert_eq!(bin.mean_rating_correct, Some(5.0));
        assert_eq!(bin.mean_rating_incorrect, None);
        assert_eq!(bin.gap, None);

        // identical rating multisets on both sides: gap 0
        let report = separation(&[(4.0, true, 0), (6.0, true, 0), (4.0, false, 0), (6.0, false, 0)]);
        assert_eq!(report.bins[0].gap, Some(0.0));
    }

    fn response_with_answer(answer: Option<&str>) -> CandidateResponse {
        CandidateResponse {
            question_id: "q".to_string(),
            raw_text: String::new(),
            stripped_text: String::new(),
            extracted_answer: answer.map(String::from),
            label: None,
            token_count: 0,
        }
    }

    #[test]
    fn distinct_answer_counting() {
        let copies: Vec<CandidateResponse> =
            (0..16).map(|_| response_with_answer(Some("7"))).collect();
        assert_eq!(distinct_answers(&copies), 1);

        let mixed = vec![
            response_with_answer(Some("1/2")),
            response_with_answer(Some("0.5")),
            response_with_answer(Some("3")),
        ];
        assert_eq!(distinct_answers(&mixed), 2);
        assert_eq!(distinct_answers(&[]), 0);

        let with_missing = vec![
            response_with_answer(Some("7")),
            response_with_answer(None),
            response_with_answer(None),
        ];
        assert_eq!(distinct_answers(&with_missing), 2);
    }

    fn outcome(id: &str, tokens: u64, correct: Option<bool>) -> StrategyOutcome {
        StrategyOutcome {
            question_id: id.to_string(),
            final_answer: String::new(),
            correct,
            total_tokens: tokens,
            generations_used: 1,
            verifier_calls: 0,
            rating_trace: Vec::new(),
            error: None,
        }
    }

    #[test]
    fn token_efficiency_examples() {
        let a: Vec<StrategyOutcome> = (0..10)
            .map(|i| outcome(&format!("q{i}"), 75_000, Some(true)))
            .collect();
        let b: Vec<StrategyOutcome> = (0..10)
            .map(|i| outcome(&format!("q{i}"), 100_000, Some(i % 2 == 0)))
            .collect();
        let eff = token_efficiency(&a, &b).unwrap();
        assert!((eff.token_ratio - 0.75).abs() < 1e-12);
        assert_eq!(eff.accuracy_a, Some(1.0));
        assert_eq!(eff.accuracy_b, Some(0.5));

        let identity = token_efficiency(&a, &a).unwrap();
        assert_eq!(identity.token_ratio, 1.0);

        // retry stops at 2 generations vs self-consistency at k=8 with
        // uniform per-call tokens
        let retry: Vec<StrategyOutcome> =
            (0..5).map(|i| outcome(&format!("q{i}"), 2 * 500, None)).collect();
        let selfcons: Vec<StrategyOutcome> =
            (0..5).map(|i| outcome(&format!("q{i}"), 8 * 500, None)).collect();
        let eff = token_efficiency(&retry, &selfcons).unwrap();
        assert_eq!(eff.token_ratio, 0.25);
        assert_eq!(eff.accuracy_a, None);
    }

    #[test]
    fn token_efficiency_rejects_mismatched_sets() {
        let a = vec![outcome("q1", 10, None)];
        let b = vec![outcome("q2", 10, None)];
        assert_eq!(
            token_efficiency(&a, &b),
            Err(MetricsError::MismatchedQuestions)
        );
        let zero = vec![outcome("q1", 0, None)];
        assert_eq!(
            token_efficiency(&a, &zero),
            Err(MetricsError::EmptyBaseline)
        );
    }

    #[test]
    fn point_expansion_helpers() {
        let mut r = record(8.0, 2.0, (true, false));
        r.pass_bin = Some(3);
        let mut bad = record(1.0, 1.0, (false, false));
        bad.judgment.parse_status = ParseStatus::MissingRatings;
        bad.pass_bin = Some(3);
        let records = vec![r, bad];
        assert_eq!(
            rating_label_points(&records),
            vec![(8.0, true), (2.0, false)]
        );
        assert_eq!(
            judgment_points(&records),
            vec![(8.0, true, 3), (2.0, false, 3)]
        );
    }

    proptest! {
        #[test]
        fn accuracy_values_are_probabilities(
            ratings in proptest::collection::vec((0.0f64..=10.0, 0.0f64..=10.0), 1..40),
            labels in proptest::collection::vec((any::<bool>(), any::<bool>()), 1..40),
        ) {
            let records: Vec<JudgmentRecord> = ratings
                .iter()
                .zip(&labels)
                .map(|(&(a, b), &l)| record(a, b, l))
                .collect();
            let acc = accuracy_by_gt_config(&records, 5.0);
            let total: usize = acc.values().map(|c| c.total).sum();
            prop_assert_eq!(total, records.len());
            for c in acc.values() {
                prop_assert!((0.0..=1.0).contains(&c.accuracy));
            }
            // permutation invariance
            let mut reversed = records.clone();
            reversed.reverse();
            prop_assert_eq!(accuracy_by_gt_config(&reversed, 5.0), acc);
        }

        #[test]
        fn ece_is_a_probability(records in proptest::collection::vec((0.0f64..=10.0, any::<bool>()), 0..200)) {
            let report = calibration(&records, 10);
            prop_assert!((0.0..=1.0).contains(&report.ece));
            let counted: usize = report.buckets.iter().map(|b| b.count).sum();
            prop_assert_eq!(counted, records.len());
        }

        #[test]
        fn distinct_answers_bounded_and_permutation_invariant(
            answers in proptest::collection::vec(proptest::option::of("[0-9]{1,2}"), 0..20)
        ) {
            let responses: Vec<CandidateResponse> = answers
                .iter()
                .map(|a| response_with_answer(a.as_deref()))
                .collect();
            let n = distinct_answers(&responses);
            prop_assert!(n <= responses.len());
            let mut reversed = responses.clone();
            reversed.reverse();
            prop_assert_eq!(distinct_answers(&reversed), n);
        }
    }
}
