//! NDCG@k and ERR ranking measures.
//!
//! Conventions: NDCG gain is `2^y - 1` with discount `1/log2(i+1)` for 1-based
//! position `i`; ERR is the cascade `sum_i (1/i) R_i prod_{j<i} (1 - R_j)`
//! with stop probability `R = (2^y - 1) / 2^K`. Queries whose ideal DCG is
//! zero score 1.0 by default (all-irrelevant lists are treated as perfectly
//! ranked); the convention is configurable through [`EvalOptions`].

use serde::Serialize;

use crate::dataset::RankingDataset;
use crate::error::{Error, Result};

/// Per-dataset metric summary: means over queries, plus per-query values on
/// request.
#[derive(Debug, Clone, Serialize)]
pub struct MetricReport {
    /// `(cutoff, mean NDCG@cutoff)` in the order the cutoffs were given.
    pub ndcg_at: Vec<(usize, f64)>,
    pub err: f64,
    pub per_query: Option<PerQueryMetrics>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PerQueryMetrics {
    /// `per_ndcg[c][q]` is NDCG at the c-th cutoff for query q.
    pub ndcg_at: Vec<Vec<f64>>,
    pub err: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct EvalOptions {
    /// Value assigned to a query whose ideal DCG is zero.
    pub zero_idcg_value: f64,
    pub keep_per_query: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self { zero_idcg_value: 1.0, keep_per_query: false }
    }
}

fn gain(label: u32) -> f64 {
    (1u64 << label) as f64 - 1.0
}

fn discount(position_1based: usize) -> f64 {
    1.0 / ((position_1based as f64) + 1.0).log2()
}

fn dcg(ranked_labels: &[u32], k: usize) -> f64 {
    ranked_labels
        .iter()
        .take(k)
        .enumerate()
        .map(|(i, &y)| gain(y) * discount(i + 1))
        .sum()
}

/// NDCG@k of a list of relevance grades already sorted by descending model
/// score. Ideal DCG of zero yields 1.0.
pub fn ndcg_at_k(ranked_labels: &[u32], k: usize) -> Result<f64> {
    ndcg_at_k_with(ranked_labels, k, 1.0)
}

fn ndcg_at_k_with(ranked_labels: &[u32], k: usize, zero_idcg_value: f64) -> Result<f64> {
    if ranked_labels.is_empty() {
        return Err(Error::Invalid("ndcg of an empty ranking".into()));
    }
    if k == 0 {
        return Err(Error::Invalid("ndcg cutoff must be >= 1".into()));
    }
    let mut ideal = ranked_labels.to_vec();
    ideal.sort_unstable_by(|a, b| b.cmp(a));
    let idcg = dcg(&ideal, k);
    if idcg == 0.0 {
        return Ok(zero_idcg_value);
    }
    Ok(dcg(ranked_labels, k) / idcg)
}

/// Expected reciprocal rank of a list of grades sorted by descending model
/// score, with stop probabilities relative to `max_label`.
pub fn err(ranked_labels: &[u32], max_label: u32) -> Result<f64> {
    if ranked_labels.is_empty() {
        return Err(Error::Invalid("err of an empty ranking".into()));
    }
    let denom = (1u64 << max_label) as f64;
    let mut not_stopped = 1.0;
    let mut total = 0.0;
    for (i, &y) in ranked_labels.iter().enumerate() {
        let r = gain(y) / denom;
        total += not_stopped * r / (i as f64 + 1.0);
        not_stopped *= 1.0 - r;
    }
    Ok(total)
}

/// Labels of one query sorted by descending score, ties broken by input order.
pub fn ranked_labels(labels: &[u32], scores: &[f64]) -> Vec<u32> {
    let mut order: Vec<usize> = (0..labels.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap_or(std::cmp::Ordering::Equal));
    order.into_iter().map(|i| labels[i]).collect()
}

/// Evaluates NDCG at each cutoff and ERR for every query, averaged
/// arithmetically over queries.
pub fn evaluate(ds: &RankingDataset, scores: &[f64], cutoffs: &[usize]) -> Result<MetricReport> {
    evaluate_with(ds, scores, cutoffs, EvalOptions::default())
}

pub fn evaluate_with(
    ds: &RankingDataset,
    scores: &[f64],
    cutoffs: &[usize],
    opts: EvalOptions,
) -> Result<MetricReport> {
    if scores.len() != ds.num_docs() {
        return Err(Error::Invalid(format!(
            "score count {} != document count {}",
            scores.len(),
            ds.num_docs()
        )));
    }
    let nq = ds.num_queries();
    let mut per_ndcg = vec![Vec::with_capacity(nq); cutoffs.len()];
    let mut per_err = Vec::with_capacity(nq);
    for (q, group) in ds.queries().iter().enumerate() {
        let range = ds.doc_range(q);
        let labels: Vec<u32> = group.docs.iter().map(|d| d.label).collect();
        let ranked = ranked_labels(&labels, &scores[range]);
        for (c, &k) in cutoffs.iter().enumerate() {
            per_ndcg[c].push(ndcg_at_k_with(&ranked, k, opts.zero_idcg_value)?);
        }
        per_err.push(err(&ranked, ds.max_label())?);
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let ndcg_at = cutoffs
        .iter()
        .zip(&per_ndcg)
        .map(|(&k, vals)| (k, mean(vals)))
        .collect();
    let report = MetricReport {
        ndcg_at,
        err: mean(&per_err),
        per_query: opts
            .keep_per_query
            .then_some(PerQueryMetrics { ndcg_at: per_ndcg, err: per_err }),
    };
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Document, QueryGroup};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    // Naive re-evaluation of the same formulas, kept deliberately separate
    // from the implementations above.
    fn brute_ndcg(ranked: &[u32], k: usize) -> f64 {
        let g = |y: u32| 2f64.powi(y as i32) - 1.0;
        let d = |i: usize| 1.0 / ((i + 1) as f64).log2();
        let dcg: f64 = ranked.iter().take(k).enumerate().map(|(i, &y)| g(y) * d(i + 1)).sum();
        let mut ideal = ranked.to_vec();
        ideal.sort_by(|a, b| b.cmp(a));
        let idcg: f64 = ideal.iter().take(k).enumerate().map(|(i, &y)| g(y) * d(i + 1)).sum();
        if idcg == 0.0 {
            1.0
        } else {
            dcg / idcg
        }
    }

    #[allow(clippy::needless_range_loop)] // written index-by-index on purpose
    fn brute_err(ranked: &[u32], max_label: u32) -> f64 {
        let mut total = 0.0;
        for i in 0..ranked.len() {
            let r = (2f64.powi(ranked[i] as i32) - 1.0) / 2f64.powi(max_label as i32);
            let mut p = 1.0;
            for j in 0..i {
                p *= 1.0 - (2f64.powi(ranked[j] as i32) - 1.0) / 2f64.powi(max_label as i32);
            }
            total += r * p / (i + 1) as f64;
        }
        total
    }

    #[test]
    fn ndcg_of_worst_order() {
        // worst ordering of grades {0,1,2}
        let v = ndcg_at_k(&[0, 1, 2], 3).unwrap();
        assert!((v - 2.1309297535714578 / 3.6309297535714578).abs() < 1e-12);
        assert!((v - 0.58689).abs() < 1e-5);
    }

    #[test]
    fn ndcg_of_ideal_order_is_one() {
        assert_eq!(ndcg_at_k(&[3, 3, 1, 0], 4).unwrap(), 1.0);
        assert_eq!(ndcg_at_k(&[2, 1, 0], 2).unwrap(), 1.0);
    }

    #[test]
    fn ndcg_all_zero_labels_is_one() {
        assert_eq!(ndcg_at_k(&[0, 0, 0], 3).unwrap(), 1.0);
    }

    #[test]
    fn ndcg_rejects_empty() {
        assert!(ndcg_at_k(&[], 3).is_err());
    }

    #[test]
    fn err_single_top_grade() {
        assert!((err(&[4], 4).unwrap() - 0.9375).abs() < 1e-12);
        assert!((err(&[4, 0], 4).unwrap() - 0.9375).abs() < 1e-12);
    }

    #[test]
    fn err_all_zero_is_zero() {
        assert_eq!(err(&[0, 0, 0], 4).unwrap(), 0.0);
    }

    fn one_query(labels: &[u32]) -> RankingDataset {
        let docs = labels
            .iter()
            .map(|&l| Document { features: vec![0.0], label: l })
            .collect();
        RankingDataset::new(vec![QueryGroup { query_id: 1, docs }]).unwrap()
    }

    #[test]
    fn evaluate_scores_equal_to_labels_is_perfect() {
        let ds = one_query(&[2, 0, 1]);
        let scores = [2.0, 0.0, 1.0];
        let rep = evaluate(&ds, &scores, &[1, 3]).unwrap();
        for (_, v) in rep.ndcg_at {
            assert_eq!(v, 1.0);
        }
    }

    #[test]
    fn evaluate_reversed_scores_matches_worked_value() {
        let ds = one_query(&[2, 1, 0]);
        let scores = [0.0, 1.0, 2.0];
        let rep = evaluate(&ds, &scores, &[3]).unwrap();
        assert!((rep.ndcg_at[0].1 - 0.58689).abs() < 1e-5);
    }

    #[test]
    fn evaluate_averages_across_queries() {
        // query 1 perfectly ranked, query 2 worst-ranked with NDCG@1 = 0
        let q1 = QueryGroup {
            query_id: 1,
            docs: vec![
                Document { features: vec![0.0], label: 1 },
                Document { features: vec![0.0], label: 0 },
            ],
        };
        let q2 = QueryGroup {
            query_id: 2,
            docs: vec![
                Document { features: vec![0.0], label: 1 },
                Document { features: vec![0.0], label: 0 },
            ],
        };
        let ds = RankingDataset::new(vec![q1, q2]).unwrap();
        let scores = [1.0, 0.0, 0.0, 1.0];
        let rep = evaluate(&ds, &scores, &[1]).unwrap();
        assert!((rep.ndcg_at[0].1 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn evaluate_rejects_score_count_mismatch() {
        let ds = one_query(&[1, 0]);
        assert!(evaluate(&ds, &[1.0], &[1]).is_err());
    }

    #[test]
    fn ties_break_by_input_order() {
        let ds = one_query(&[2, 1, 0]);
        let rep = evaluate(&ds, &[0.0, 0.0, 0.0], &[3]).unwrap();
        assert_eq!(rep.ndcg_at[0].1, 1.0);
    }

    #[test]
    fn matches_brute_force_on_random_permutations() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..500 {
            let n = rng.gen_range(1..=8);
            let labels: Vec<u32> = (0..n).map(|_| rng.gen_range(0..=4)).collect();
            let max_label = 4;
            for k in [1, 3, 10] {
                assert_eq!(ndcg_at_k(&labels, k).unwrap(), brute_ndcg(&labels, k));
            }
            assert_eq!(err(&labels, max_label).unwrap(), brute_err(&labels, max_label));
        }
    }

    #[test]
    fn invariant_under_monotone_score_transform() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let n = rng.gen_range(2..=8);
            let labels: Vec<u32> = (0..n).map(|_| rng.gen_range(0..=3)).collect();
            let scores: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let transformed: Vec<f64> = scores.iter().map(|s| (3.0 * s).exp() + 1.0).collect();
            let a = ranked_labels(&labels, &scores);
            let b = ranked_labels(&labels, &transformed);
            assert_eq!(a, b);
        }
    }

    #[test]
    fn swapping_higher_label_upward_does_not_decrease_ndcg() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..200 {
            let n = rng.gen_range(2..=8);
            let mut ranked: Vec<u32> = (0..n).map(|_| rng.gen_range(0..=3)).collect();
            let i = rng.gen_range(1..n);
            let j = rng.gen_range(0..i);
            if ranked[i] > ranked[j] {
                let before = ndcg_at_k(&ranked, n).unwrap();
                ranked.swap(i, j);
                let after = ndcg_at_k(&ranked, n).unwrap();
                assert!(after >= before - 1e-12, "swap decreased ndcg: {before} -> {after}");
            }
        }
    }
}
