//! Objective losses and their first/second derivatives at a zero leaf offset.
//!
//! Every objective produces a [`GradientProfile`]: per-document `g = L'(o=0|d)`
//! and `h = L''(o=0|d)`, a flag saying whether group derivatives are plain sums
//! of the per-document values, and (for the pair-wise losses) the list of
//! scored pairs that the exact group-derivative machinery needs.
//!
//! The pair-wise losses are not derivative additive: a pair whose two
//! documents land in the same group receives a common offset, so the pair
//! drops out of the group derivative instead of contributing twice. First
//! derivatives are unaffected (the two contributions cancel in the sum);
//! second derivatives need the correction applied by
//! [`exact_group_derivatives`].

use rayon::prelude::*;

use crate::dataset::RankingDataset;
use crate::error::{Error, Result};
use crate::tree::RegressionTree;

/// Probability floor keeping logistic curvature terms positive.
pub const PROB_CLAMP: f64 = 1e-12;

/// The objective loss a booster optimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Objective {
    /// Least-squares regression on the relevance grades.
    Mart,
    /// Multi-class logistic regression over grades, one score per class.
    McRank,
    /// Pair-wise exponential loss over in-query preference pairs.
    RankExp,
    /// Pair-wise logistic gradients weighted by |delta NDCG|.
    LambdaMart,
}

impl Objective {
    pub fn id(&self) -> &'static str {
        match self {
            Objective::Mart => "mart",
            Objective::McRank => "mcrank",
            Objective::RankExp => "rankexp",
            Objective::LambdaMart => "lambdamart",
        }
    }

    pub fn from_id(id: &str) -> Result<Self> {
        match id {
            "mart" => Ok(Objective::Mart),
            "mcrank" => Ok(Objective::McRank),
            "rankexp" => Ok(Objective::RankExp),
            "lambdamart" => Ok(Objective::LambdaMart),
            other => Err(Error::Config(format!("unknown objective `{other}`"))),
        }
    }

    pub fn is_derivative_additive(&self) -> bool {
        matches!(self, Objective::Mart | Objective::McRank)
    }
}

/// One in-query preference pair with its derivative contributions at the
/// current scores. `hi` is the preferred (higher-labeled) document.
#[derive(Debug, Clone, Copy)]
pub struct DocPair {
    pub hi: u32,
    pub lo: u32,
    /// Score-independent pair weight: 1 for the exponential loss,
    /// |delta NDCG| for LambdaMART.
    pub weight: f64,
    /// Magnitude of the first-derivative contribution: `g[hi] -= grad`,
    /// `g[lo] += grad`.
    pub grad: f64,
    /// Second-derivative contribution added to both endpoints.
    pub hess: f64,
}

/// Per-document derivatives of an objective at the current scores.
#[derive(Debug, Clone)]
pub struct GradientProfile {
    pub g: Vec<f64>,
    pub h: Vec<f64>,
    pub derivative_additive: bool,
    /// Preference pairs backing `g`/`h` for the pair-wise losses; empty for
    /// derivative-additive objectives.
    pub pairs: Vec<DocPair>,
}

impl GradientProfile {
    pub fn num_docs(&self) -> usize {
        self.g.len()
    }
}

/// Exact derivatives of the loss when every document of `group` receives a
/// common offset, evaluated at offset zero.
///
/// The first derivative is always the sum of per-document `g` (pair
/// contributions internal to the group cancel). The second derivative
/// subtracts the doubled curvature of pairs lying entirely inside the group.
pub fn exact_group_derivatives(profile: &GradientProfile, group: &[usize]) -> (f64, f64) {
    let grad: f64 = group.iter().map(|&d| profile.g[d]).sum();
    let mut hess: f64 = group.iter().map(|&d| profile.h[d]).sum();
    if !profile.derivative_additive {
        let members: std::collections::HashSet<usize> = group.iter().copied().collect();
        for p in &profile.pairs {
            if members.contains(&(p.hi as usize)) && members.contains(&(p.lo as usize)) {
                hess -= 2.0 * p.hess;
            }
        }
    }
    (grad, hess)
}

// ---------------------------------------------------------------------------
// MART
// ---------------------------------------------------------------------------

/// Squared loss `sum_d (f(d) - y(d))^2`.
pub fn mart_loss(ds: &RankingDataset, scores: &[f64]) -> f64 {
    let labels = ds.labels();
    per_query_sum(ds, |q| {
        ds.doc_range(q)
            .map(|d| {
                let e = scores[d] - labels[d] as f64;
                e * e
            })
            .sum()
    })
}

/// Derivatives of the squared loss: `g = 2(f - y)`, `h = 2`.
pub fn mart_gradients(ds: &RankingDataset, scores: &[f64]) -> GradientProfile {
    let labels = ds.labels();
    let g: Vec<f64> = scores
        .iter()
        .zip(&labels)
        .map(|(&f, &y)| 2.0 * (f - y as f64))
        .collect();
    let h = vec![2.0; g.len()];
    GradientProfile { g, h, derivative_additive: true, pairs: Vec::new() }
}

// ---------------------------------------------------------------------------
// McRank
// ---------------------------------------------------------------------------

/// Per-document class probabilities, `probs[k][doc]`.
#[derive(Debug, Clone)]
pub struct ClassProbs(pub Vec<Vec<f64>>);

/// Softmax over the per-class score vectors.
pub fn class_probabilities(class_scores: &[Vec<f64>]) -> ClassProbs {
    let num_classes = class_scores.len();
    let num_docs = class_scores[0].len();
    let mut probs = vec![vec![0.0; num_docs]; num_classes];
    for d in 0..num_docs {
        let max = class_scores
            .iter()
            .map(|s| s[d])
            .fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for k in 0..num_classes {
            let e = (class_scores[k][d] - max).exp();
            probs[k][d] = e;
            total += e;
        }
        for row in probs.iter_mut() {
            row[d] /= total;
        }
    }
    ClassProbs(probs)
}

/// Negative log-likelihood of the labels under the cached probabilities.
pub fn mcrank_loss(ds: &RankingDataset, probs: &ClassProbs) -> f64 {
    let labels = ds.labels();
    per_query_sum(ds, |q| {
        ds.doc_range(q)
            .map(|d| -(probs.0[labels[d] as usize][d].max(PROB_CLAMP)).ln())
            .sum()
    })
}

/// Derivatives for the class-`c` score vector: `g = p_c - I(y = c)`,
/// `h = p_c (1 - p_c)` floored at [`PROB_CLAMP`].
pub fn mcrank_gradients(ds: &RankingDataset, probs: &ClassProbs, class: usize) -> GradientProfile {
    let labels = ds.labels();
    let p = &probs.0[class];
    let mut g = Vec::with_capacity(p.len());
    let mut h = Vec::with_capacity(p.len());
    for (d, &pc) in p.iter().enumerate() {
        let indicator = if labels[d] as usize == class { 1.0 } else { 0.0 };
        g.push(pc - indicator);
        let pc_safe = pc.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
        h.push(pc_safe * (1.0 - pc_safe));
    }
    GradientProfile { g, h, derivative_additive: true, pairs: Vec::new() }
}

// ---------------------------------------------------------------------------
// Pair-wise exponential (RankBoost-style)
// ---------------------------------------------------------------------------

fn query_pairs(ds: &RankingDataset, q: usize) -> Vec<(usize, usize)> {
    let range = ds.doc_range(q);
    let docs = &ds.queries()[q].docs;
    let mut pairs = Vec::new();
    for i in 0..docs.len() {
        for j in 0..docs.len() {
            if docs[i].label > docs[j].label {
                pairs.push((range.start + i, range.start + j));
            }
        }
    }
    pairs
}

/// `sum_pairs exp(s_lo - s_hi)` over all in-query preference pairs.
pub fn pairwise_exp_loss(ds: &RankingDataset, scores: &[f64]) -> f64 {
    per_query_sum(ds, |q| {
        query_pairs(ds, q)
            .into_iter()
            .map(|(hi, lo)| (scores[lo] - scores[hi]).exp())
            .sum()
    })
}

/// Derivatives of the exponential pair loss. Each pair contributes
/// `s = exp(s_lo - s_hi)` with `g[hi] -= s`, `g[lo] += s`, and `s` added to
/// the curvature of both endpoints.
pub fn pairwise_exp_gradients(ds: &RankingDataset, scores: &[f64]) -> GradientProfile {
    let per_query: Vec<Vec<DocPair>> = (0..ds.num_queries())
        .into_par_iter()
        .map(|q| {
            query_pairs(ds, q)
                .into_iter()
                .map(|(hi, lo)| {
                    let s = (scores[lo] - scores[hi]).exp();
                    DocPair { hi: hi as u32, lo: lo as u32, weight: 1.0, grad: s, hess: s }
                })
                .collect()
        })
        .collect();
    profile_from_pairs(ds.num_docs(), per_query)
}

// ---------------------------------------------------------------------------
// LambdaMART
// ---------------------------------------------------------------------------

/// Precomputed per-query context for the |delta NDCG| pair weights.
#[derive(Debug, Clone)]
pub struct LambdaContext {
    /// Ideal DCG per query at the configured cutoff; 0.0 marks a query with
    /// no relevant documents (skipped entirely).
    pub idcg: Vec<f64>,
    /// NDCG truncation for the pair weights; `None` scores the full list.
    pub cutoff: Option<usize>,
}

impl LambdaContext {
    pub fn new(ds: &RankingDataset, cutoff: Option<usize>) -> Self {
        let idcg = ds
            .queries()
            .iter()
            .map(|q| {
                let mut labels: Vec<u32> = q.docs.iter().map(|d| d.label).collect();
                labels.sort_unstable_by(|a, b| b.cmp(a));
                let k = cutoff.unwrap_or(labels.len());
                labels
                    .iter()
                    .take(k)
                    .enumerate()
                    .map(|(i, &y)| ((1u64 << y) as f64 - 1.0) / ((i as f64 + 2.0).log2()))
                    .sum()
            })
            .collect();
        Self { idcg, cutoff }
    }

    fn discount(&self, position_1based: usize) -> f64 {
        match self.cutoff {
            Some(k) if position_1based > k => 0.0,
            _ => 1.0 / ((position_1based as f64) + 1.0).log2(),
        }
    }
}

/// 1-based rank of each document of query `q` under descending score, ties
/// broken by input order.
fn current_ranks(ds: &RankingDataset, q: usize, scores: &[f64]) -> Vec<usize> {
    let range = ds.doc_range(q);
    let n = range.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        scores[range.start + b]
            .partial_cmp(&scores[range.start + a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut ranks = vec![0usize; n];
    for (pos, &local) in order.iter().enumerate() {
        ranks[local] = pos + 1;
    }
    ranks
}

fn lambda_query_pairs(
    ds: &RankingDataset,
    q: usize,
    scores: &[f64],
    ctx: &LambdaContext,
) -> Vec<DocPair> {
    if ctx.idcg[q] <= 0.0 {
        return Vec::new();
    }
    let range = ds.doc_range(q);
    let docs = &ds.queries()[q].docs;
    let ranks = current_ranks(ds, q, scores);
    let mut pairs = Vec::new();
    for i in 0..docs.len() {
        for j in 0..docs.len() {
            if docs[i].label <= docs[j].label {
                continue;
            }
            let (hi, lo) = (range.start + i, range.start + j);
            let gain_diff = ((1u64 << docs[i].label) as f64) - ((1u64 << docs[j].label) as f64);
            let disc_diff = ctx.discount(ranks[i]) - ctx.discount(ranks[j]);
            let weight = (gain_diff * disc_diff / ctx.idcg[q]).abs();
            let rho = 1.0 / (1.0 + (scores[hi] - scores[lo]).exp());
            pairs.push(DocPair {
                hi: hi as u32,
                lo: lo as u32,
                weight,
                grad: weight * rho,
                hess: weight * rho * (1.0 - rho),
            });
        }
    }
    pairs
}

/// |delta NDCG|-weighted logistic pair derivatives at the current scores.
pub fn lambdamart_gradients(
    ds: &RankingDataset,
    scores: &[f64],
    ctx: &LambdaContext,
) -> GradientProfile {
    let per_query: Vec<Vec<DocPair>> = (0..ds.num_queries())
        .into_par_iter()
        .map(|q| lambda_query_pairs(ds, q, scores, ctx))
        .collect();
    profile_from_pairs(ds.num_docs(), per_query)
}

/// The evaluable potential behind the lambda gradients:
/// `sum_pairs |delta NDCG| ln(1 + exp(s_lo - s_hi))` with the pair weights
/// recomputed from the ranking the scores induce.
pub fn lambda_potential(ds: &RankingDataset, scores: &[f64], ctx: &LambdaContext) -> f64 {
    per_query_sum(ds, |q| {
        lambda_query_pairs(ds, q, scores, ctx)
            .into_iter()
            .map(|p| {
                p.weight * (1.0 + (scores[p.lo as usize] - scores[p.hi as usize]).exp()).ln()
            })
            .sum()
    })
}

/// Evaluates a pair potential at arbitrary scores while keeping the pair set
/// and weights fixed. Used by the finite-difference oracle, where the
/// potential must be a smooth function of the scores.
pub fn frozen_pair_potential(objective: Objective, pairs: &[DocPair], scores: &[f64]) -> f64 {
    pairs
        .iter()
        .map(|p| {
            let margin = scores[p.lo as usize] - scores[p.hi as usize];
            match objective {
                Objective::RankExp => p.weight * margin.exp(),
                Objective::LambdaMart => p.weight * (1.0 + margin.exp()).ln(),
                _ => 0.0,
            }
        })
        .sum()
}

fn profile_from_pairs(num_docs: usize, per_query: Vec<Vec<DocPair>>) -> GradientProfile {
    let mut g = vec![0.0; num_docs];
    let mut h = vec![0.0; num_docs];
    let mut pairs = Vec::new();
    for query_pairs in per_query {
        for p in query_pairs {
            g[p.hi as usize] -= p.grad;
            g[p.lo as usize] += p.grad;
            h[p.hi as usize] += p.hess;
            h[p.lo as usize] += p.hess;
            pairs.push(p);
        }
    }
    GradientProfile { g, h, derivative_additive: false, pairs }
}

/// Deterministic parallel reduction: per-query values are computed in
/// parallel, collected in query order, and summed sequentially.
fn per_query_sum(ds: &RankingDataset, f: impl Fn(usize) -> f64 + Sync + Send) -> f64 {
    let parts: Vec<f64> = (0..ds.num_queries()).into_par_iter().map(f).collect();
    parts.iter().sum()
}

// ---------------------------------------------------------------------------
// ObjectiveState
// ---------------------------------------------------------------------------

/// Mutable per-training state: the score vector(s) and the caches the
/// gradient computations need.
#[derive(Debug, Clone)]
pub struct ObjectiveState {
    objective: Objective,
    /// `scores[class][doc]`; a single class for everything but McRank.
    scores: Vec<Vec<f64>>,
    probs: Option<ClassProbs>,
    lambda_ctx: Option<LambdaContext>,
}

impl ObjectiveState {
    /// Initializes all scores to zero, the Taylor expansion point.
    pub fn new(objective: Objective, ds: &RankingDataset, lambda_cutoff: Option<usize>) -> Self {
        let num_classes = match objective {
            Objective::McRank => ds.max_label() as usize + 1,
            _ => 1,
        };
        let scores = vec![vec![0.0; ds.num_docs()]; num_classes];
        Self::with_scores(objective, ds, lambda_cutoff, scores)
            .expect("zero scores are well-formed")
    }

    /// Builds a state at explicit starting scores (`scores[class][doc]`).
    pub fn with_scores(
        objective: Objective,
        ds: &RankingDataset,
        lambda_cutoff: Option<usize>,
        scores: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let num_classes = match objective {
            Objective::McRank => ds.max_label() as usize + 1,
            _ => 1,
        };
        if scores.len() != num_classes || scores.iter().any(|s| s.len() != ds.num_docs()) {
            return Err(Error::Invalid(format!(
                "expected {} score vectors of length {}",
                num_classes,
                ds.num_docs()
            )));
        }
        let mut state = Self {
            objective,
            scores,
            probs: None,
            lambda_ctx: match objective {
                Objective::LambdaMart => Some(LambdaContext::new(ds, lambda_cutoff)),
                _ => None,
            },
        };
        state.refresh_caches();
        Ok(state)
    }

    pub fn objective(&self) -> Objective {
        self.objective
    }

    pub fn num_classes(&self) -> usize {
        self.scores.len()
    }

    pub fn scores(&self, class: usize) -> &[f64] {
        &self.scores[class]
    }

    pub fn probs(&self) -> Option<&ClassProbs> {
        self.probs.as_ref()
    }

    pub fn lambda_context(&self) -> Option<&LambdaContext> {
        self.lambda_ctx.as_ref()
    }

    fn refresh_caches(&mut self) {
        if self.objective == Objective::McRank {
            self.probs = Some(class_probabilities(&self.scores));
        }
    }

    /// Gradient profile of the configured objective for one class (class 0
    /// for everything but McRank).
    pub fn gradients(&self, ds: &RankingDataset, class: usize) -> Result<GradientProfile> {
        if class >= self.num_classes() {
            return Err(Error::Invalid(format!(
                "class {class} out of range 0..{}",
                self.num_classes()
            )));
        }
        match self.objective {
            Objective::Mart => Ok(mart_gradients(ds, &self.scores[0])),
            Objective::McRank => {
                let probs = self.probs.as_ref().ok_or_else(|| {
                    Error::Internal("probability cache is stale or missing".into())
                })?;
                Ok(mcrank_gradients(ds, probs, class))
            }
            Objective::RankExp => Ok(pairwise_exp_gradients(ds, &self.scores[0])),
            Objective::LambdaMart => {
                let ctx = self.lambda_ctx.as_ref().expect("lambda context initialized");
                Ok(lambdamart_gradients(ds, &self.scores[0], ctx))
            }
        }
    }

    /// Adds `lr * tree(features)` to the class-`class` score of every
    /// document and refreshes caches.
    pub fn apply_tree(&mut self, ds: &RankingDataset, class: usize, tree: &RegressionTree, lr: f64) {
        for (q, group) in ds.queries().iter().enumerate() {
            let range = ds.doc_range(q);
            for (local, doc) in range.enumerate() {
                self.scores[class][doc] += lr * tree.predict(&group.docs[local].features);
            }
        }
        self.refresh_caches();
    }

    /// Adds a common offset to the class-`class` scores of the given
    /// documents. Used by the exhaustive split oracle.
    pub fn add_group_offset(&mut self, class: usize, group: &[usize], offset: f64) {
        for &d in group {
            self.scores[class][d] += offset;
        }
        self.refresh_caches();
    }

    /// Objective loss at the current scores. For LambdaMART this is the pair
    /// potential with weights recomputed from the current ranking.
    pub fn loss(&self, ds: &RankingDataset) -> f64 {
        match self.objective {
            Objective::Mart => mart_loss(ds, &self.scores[0]),
            Objective::McRank => mcrank_loss(ds, self.probs.as_ref().expect("probs cached")),
            Objective::RankExp => pairwise_exp_loss(ds, &self.scores[0]),
            Objective::LambdaMart => {
                let ctx = self.lambda_ctx.as_ref().expect("lambda context initialized");
                lambda_potential(ds, &self.scores[0], ctx)
            }
        }
    }

    /// Final per-document ranking scores: raw scores for the single-vector
    /// objectives, expected relevance `sum_k k p_k` for McRank.
    pub fn ranking_scores(&self) -> Vec<f64> {
        match self.objective {
            Objective::McRank => {
                let probs = self.probs.as_ref().expect("probs cached");
                let num_docs = self.scores[0].len();
                (0..num_docs)
                    .map(|d| {
                        probs
                            .0
                            .iter()
                            .enumerate()
                            .map(|(k, p)| k as f64 * p[d])
                            .sum()
                    })
                    .collect()
            }
            _ => self.scores[0].clone(),
        }
    }
}
