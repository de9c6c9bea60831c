//! Node-splitting criteria and the best-split search.
//!
//! All criteria score a binary partition of a node's documents at a threshold
//! on one feature; lower is better. [`best_split`] enumerates thresholds at
//! midpoints between distinct adjacent sorted feature values with a
//! left-to-right incremental sweep, so documents with equal feature values
//! are never separated. Ties are broken deterministically by lower feature
//! index, then lower threshold.
//!
//! Criterion notes:
//! - `se` needs only the pseudo-responses `r = -g`.
//! - `wse`/`rwse` use `r = -g/h` and `w = h`; weighted sums are accumulated
//!   through the identities `w*r = -g` and `w*r^2 = g^2/h`, which avoids the
//!   divide-then-multiply round trip.
//! - `ole` scores `-(G_l^2/H_l + G_r^2/H_r)` from side derivative sums. For
//!   non-additive objectives in exact mode the side curvatures subtract the
//!   doubled weight of preference pairs lying entirely inside a side,
//!   maintained incrementally as documents cross the boundary.
//! - `mart` is the simplified squared-loss form `-(R_l^2/n_l + R_r^2/n_r)`
//!   and refuses profiles that are not squared-loss shaped.

use rayon::prelude::*;
use std::collections::HashMap;

use crate::dataset::RankingDataset;
use crate::error::{Error, Result};
use crate::objective::GradientProfile;

/// Curvature sums at or below this are treated as vanishing; such candidates
/// are invalid.
pub const CURVATURE_GUARD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Criterion {
    Se,
    Wse,
    Rwse,
    Ole,
    Mart,
}

impl Criterion {
    pub fn id(&self) -> &'static str {
        match self {
            Criterion::Se => "se",
            Criterion::Wse => "wse",
            Criterion::Rwse => "rwse",
            Criterion::Ole => "ole",
            Criterion::Mart => "mart",
        }
    }

    pub fn from_id(id: &str) -> Result<Self> {
        match id {
            "se" => Ok(Criterion::Se),
            "wse" => Ok(Criterion::Wse),
            "rwse" => Ok(Criterion::Rwse),
            "ole" => Ok(Criterion::Ole),
            "mart" => Ok(Criterion::Mart),
            other => Err(Error::Config(format!("unknown criterion `{other}`"))),
        }
    }
}

/// How OLE treats non-additive objectives: additive approximation of the side
/// curvature, or exact incremental group derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OleMode {
    Additive,
    Exact,
}

impl OleMode {
    pub fn id(&self) -> &'static str {
        match self {
            OleMode::Additive => "additive",
            OleMode::Exact => "exact",
        }
    }

    pub fn from_id(id: &str) -> Result<Self> {
        match id {
            "additive" => Ok(OleMode::Additive),
            "exact" => Ok(OleMode::Exact),
            other => Err(Error::Config(format!("unknown ole mode `{other}`"))),
        }
    }
}

/// Compensated (Neumaier) accumulator. Side sums must not depend on the
/// order documents crossed the boundary: two features inducing the same
/// partition must score bit-identically, otherwise criterion-equivalence tie
/// breaking falls apart. Compensation makes the read-out value the correctly
/// rounded sum for any insertion order at these scales.
#[derive(Debug, Clone, Copy, Default)]
struct CompensatedSum {
    total: f64,
    compensation: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.total + x;
        if self.total.abs() >= x.abs() {
            self.compensation += (self.total - t) + x;
        } else {
            self.compensation += (x - t) + self.total;
        }
        self.total = t;
    }

    fn sub(&mut self, x: f64) {
        self.add(-x);
    }

    fn value(&self) -> f64 {
        self.total + self.compensation
    }
}

/// Running sums for one side of a candidate partition.
#[derive(Debug, Clone, Copy, Default)]
pub struct SideAggregates {
    count: usize,
    sum_g: CompensatedSum,
    sum_h: CompensatedSum,
    sum_sq_r: CompensatedSum,
    sum_w_sq_r: CompensatedSum,
    inside_pair_hess: CompensatedSum,
}

impl SideAggregates {
    pub fn count(&self) -> usize {
        self.count
    }

    /// Sum of first derivatives `g`.
    pub fn sum_g(&self) -> f64 {
        self.sum_g.value()
    }

    /// Sum of second derivatives `h`.
    pub fn sum_h(&self) -> f64 {
        self.sum_h.value()
    }

    /// Sum of pseudo-responses `r = -g`.
    pub fn sum_r(&self) -> f64 {
        -self.sum_g()
    }

    /// Sum of squared pseudo-responses.
    pub fn sum_sq_r(&self) -> f64 {
        self.sum_sq_r.value()
    }

    /// Weight sum `sum w = sum h`.
    pub fn sum_w(&self) -> f64 {
        self.sum_h()
    }

    /// Weighted response sum; `w r = -g` exactly.
    pub fn sum_wr(&self) -> f64 {
        -self.sum_g()
    }

    /// Sum of `w r^2 = g^2/h`.
    pub fn sum_w_sq_r(&self) -> f64 {
        self.sum_w_sq_r.value()
    }

    /// Total pair curvature of preference pairs fully inside this side
    /// (exact mode only).
    pub fn inside_pair_hess(&self) -> f64 {
        self.inside_pair_hess.value()
    }

    /// Exact group curvature: additive sum minus the doubled inside-pair
    /// correction.
    pub fn exact_hess(&self) -> f64 {
        self.sum_h() - 2.0 * self.inside_pair_hess()
    }

    fn add_doc(&mut self, g: f64, h: f64) {
        self.count += 1;
        self.sum_g.add(g);
        self.sum_h.add(h);
        self.sum_sq_r.add(g * g);
        self.sum_w_sq_r.add(g * g / h);
    }

    fn remove_doc(&mut self, g: f64, h: f64) {
        self.count -= 1;
        self.sum_g.sub(g);
        self.sum_h.sub(h);
        self.sum_sq_r.sub(g * g);
        self.sum_w_sq_r.sub(g * g / h);
    }
}

/// A scored candidate partition of a node.
#[derive(Debug, Clone)]
pub struct SplitCandidate {
    pub feature: usize,
    pub threshold: f64,
    pub left: SideAggregates,
    pub right: SideAggregates,
    /// Criterion value; lower is better.
    pub score: f64,
}

impl SplitCandidate {
    pub fn left_count(&self) -> usize {
        self.left.count
    }

    pub fn right_count(&self) -> usize {
        self.right.count
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SplitConstraints {
    pub min_samples_leaf: usize,
}

impl Default for SplitConstraints {
    fn default() -> Self {
        Self { min_samples_leaf: 1 }
    }
}

/// Preference pairs restricted to one node, as an adjacency list over
/// node-local document indices.
#[derive(Debug, Clone, Default)]
struct NodePairs {
    /// `adj[local]` lists `(partner_local, pair_hess)` for each pair touching
    /// the document; each pair appears in both endpoint lists.
    adj: Vec<Vec<(u32, f64)>>,
    total_inside_hess: f64,
}

/// Everything the criteria need about one node: per-document derivatives in
/// node-local order and, in exact mode, the in-node preference pairs.
pub struct NodeStats<'a> {
    ds: &'a RankingDataset,
    docs: &'a [usize],
    g: Vec<f64>,
    h: Vec<f64>,
    pairs: Option<NodePairs>,
}

impl<'a> NodeStats<'a> {
    pub fn new(
        ds: &'a RankingDataset,
        docs: &'a [usize],
        profile: &GradientProfile,
        mode: OleMode,
    ) -> Self {
        let g: Vec<f64> = docs.iter().map(|&d| profile.g[d]).collect();
        let h: Vec<f64> = docs.iter().map(|&d| profile.h[d]).collect();
        let pairs = (mode == OleMode::Exact && !profile.derivative_additive)
            .then(|| Self::collect_pairs(docs, profile));
        Self { ds, docs, g, h, pairs }
    }

    fn collect_pairs(docs: &[usize], profile: &GradientProfile) -> NodePairs {
        let local: HashMap<usize, u32> =
            docs.iter().enumerate().map(|(i, &d)| (d, i as u32)).collect();
        let mut adj = vec![Vec::new(); docs.len()];
        let mut total = 0.0;
        for p in &profile.pairs {
            if let (Some(&a), Some(&b)) = (local.get(&(p.hi as usize)), local.get(&(p.lo as usize)))
            {
                adj[a as usize].push((b, p.hess));
                adj[b as usize].push((a, p.hess));
                total += p.hess;
            }
        }
        NodePairs { adj, total_inside_hess: total }
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn uses_exact_curvature(&self) -> bool {
        self.pairs.is_some()
    }

    fn value(&self, local: usize, feature: usize) -> f64 {
        self.ds.feature(self.docs[local], feature)
    }

    fn totals(&self) -> SideAggregates {
        let mut agg = SideAggregates::default();
        for i in 0..self.len() {
            agg.add_doc(self.g[i], self.h[i]);
        }
        if let Some(pairs) = &self.pairs {
            agg.inside_pair_hess.add(pairs.total_inside_hess);
        }
        agg
    }

    /// Checks the squared-loss shape the `mart` criterion requires.
    fn require_squared_loss(&self) -> Result<()> {
        if self.h.iter().all(|&h| h == 2.0) {
            Ok(())
        } else {
            Err(Error::Config(
                "criterion `mart` requires the squared-loss objective".into(),
            ))
        }
    }
}

fn side_score(criterion: Criterion, side: &SideAggregates, use_exact: bool) -> Option<f64> {
    match criterion {
        Criterion::Se => {
            let mean_term = side.sum_r() * side.sum_r() / side.count as f64;
            Some(side.sum_sq_r() - mean_term)
        }
        Criterion::Wse => {
            if side.sum_w() <= CURVATURE_GUARD {
                return None;
            }
            Some(side.sum_w_sq_r() - side.sum_wr() * side.sum_wr() / side.sum_w())
        }
        Criterion::Rwse => {
            if side.sum_w() <= CURVATURE_GUARD {
                return None;
            }
            Some(-(side.sum_wr() * side.sum_wr()) / side.sum_w())
        }
        Criterion::Ole => {
            let hess = if use_exact { side.exact_hess() } else { side.sum_h() };
            if hess <= CURVATURE_GUARD {
                return None;
            }
            Some(-(side.sum_g() * side.sum_g()) / hess)
        }
        Criterion::Mart => {
            Some(-(side.sum_r() * side.sum_r()) / side.count as f64)
        }
    }
}

/// Combines left/right side scores with the criterion's parent term.
fn combine(
    criterion: Criterion,
    left: &SideAggregates,
    right: &SideAggregates,
    parent: &SideAggregates,
    use_exact: bool,
) -> Option<f64> {
    let l = side_score(criterion, left, use_exact)?;
    let r = side_score(criterion, right, use_exact)?;
    match criterion {
        Criterion::Se | Criterion::Ole | Criterion::Mart => Some(l + r),
        Criterion::Wse => {
            let p = side_score(Criterion::Wse, parent, use_exact)?;
            Some((l + r) - p)
        }
        Criterion::Rwse => {
            if parent.sum_w() <= CURVATURE_GUARD {
                return None;
            }
            let p = parent.sum_wr() * parent.sum_wr() / parent.sum_w();
            Some((l + r) + p)
        }
    }
}

fn partition_sides(
    stats: &NodeStats,
    feature: usize,
    threshold: f64,
) -> (SideAggregates, SideAggregates, Vec<bool>) {
    let mut left = SideAggregates::default();
    let mut right = SideAggregates::default();
    let mut is_left = vec![false; stats.len()];
    for (i, flag) in is_left.iter_mut().enumerate() {
        if stats.value(i, feature) < threshold {
            left.add_doc(stats.g[i], stats.h[i]);
            *flag = true;
        } else {
            right.add_doc(stats.g[i], stats.h[i]);
        }
    }
    if let Some(pairs) = &stats.pairs {
        for (a, edges) in pairs.adj.iter().enumerate() {
            for &(b, hess) in edges {
                if a < b as usize {
                    if is_left[a] && is_left[b as usize] {
                        left.inside_pair_hess.add(hess);
                    } else if !is_left[a] && !is_left[b as usize] {
                        right.inside_pair_hess.add(hess);
                    }
                }
            }
        }
    }
    (left, right, is_left)
}

/// Two-pass from-scratch score of one candidate under one criterion. This is
/// the reference the incremental sweep is checked against.
pub fn score_candidate(
    stats: &NodeStats,
    criterion: Criterion,
    feature: usize,
    threshold: f64,
) -> Result<f64> {
    if criterion == Criterion::Mart {
        stats.require_squared_loss()?;
    }
    let (left, right, _) = partition_sides(stats, feature, threshold);
    if left.count == 0 || right.count == 0 {
        return Err(Error::Invalid(format!(
            "threshold {threshold} on feature {feature} leaves a side empty"
        )));
    }
    let parent = stats.totals();
    combine(criterion, &left, &right, &parent, stats.uses_exact_curvature()).ok_or_else(|| {
        Error::Invalid("vanishing curvature on one side of the candidate".into())
    })
}

pub fn score_se(stats: &NodeStats, feature: usize, threshold: f64) -> Result<f64> {
    score_candidate(stats, Criterion::Se, feature, threshold)
}

pub fn score_wse(stats: &NodeStats, feature: usize, threshold: f64) -> Result<f64> {
    score_candidate(stats, Criterion::Wse, feature, threshold)
}

pub fn score_rwse(stats: &NodeStats, feature: usize, threshold: f64) -> Result<f64> {
    score_candidate(stats, Criterion::Rwse, feature, threshold)
}

pub fn score_ole(stats: &NodeStats, feature: usize, threshold: f64) -> Result<f64> {
    score_candidate(stats, Criterion::Ole, feature, threshold)
}

pub fn score_mart(stats: &NodeStats, feature: usize, threshold: f64) -> Result<f64> {
    score_candidate(stats, Criterion::Mart, feature, threshold)
}

/// Incremental left-to-right sweep over one feature, invoking `visit` for
/// every valid candidate in ascending threshold order.
// negated comparisons are deliberate: NaN feature values must never open a boundary
#[allow(clippy::neg_cmp_op_on_partial_ord)]
fn sweep_feature(
    stats: &NodeStats,
    feature: usize,
    criterion: Criterion,
    constraints: &SplitConstraints,
    parent: &SideAggregates,
    mut visit: impl FnMut(SplitCandidate),
) {
    let n = stats.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        stats
            .value(a, feature)
            .partial_cmp(&stats.value(b, feature))
            .unwrap_or(std::cmp::Ordering::Equal)
    });

    let mut left = SideAggregates::default();
    let mut right = *parent;
    let mut is_left = vec![false; n];
    let use_exact = stats.uses_exact_curvature();

    for pos in 0..n - 1 {
        let moved = order[pos];
        left.add_doc(stats.g[moved], stats.h[moved]);
        right.remove_doc(stats.g[moved], stats.h[moved]);
        if let Some(pairs) = &stats.pairs {
            for &(partner, hess) in &pairs.adj[moved] {
                if is_left[partner as usize] {
                    left.inside_pair_hess.add(hess);
                } else {
                    right.inside_pair_hess.sub(hess);
                }
            }
        }
        is_left[moved] = true;

        let lo = stats.value(moved, feature);
        let hi = stats.value(order[pos + 1], feature);
        if !(lo < hi) {
            continue;
        }
        if left.count < constraints.min_samples_leaf || right.count < constraints.min_samples_leaf
        {
            continue;
        }
        let mut threshold = lo + (hi - lo) / 2.0;
        if !(threshold > lo) {
            threshold = hi;
        }
        if let Some(score) = combine(criterion, &left, &right, parent, use_exact) {
            visit(SplitCandidate { feature, threshold, left, right, score });
        }
    }
}

/// All valid candidates of one feature in ascending threshold order, scored
/// incrementally.
pub fn scan_candidates(
    stats: &NodeStats,
    feature: usize,
    criterion: Criterion,
    constraints: &SplitConstraints,
) -> Result<Vec<SplitCandidate>> {
    if criterion == Criterion::Mart {
        stats.require_squared_loss()?;
    }
    let parent = stats.totals();
    let mut out = Vec::new();
    sweep_feature(stats, feature, criterion, constraints, &parent, |c| out.push(c));
    Ok(out)
}

/// Best candidate across all features under the fixed tie rule: strictly
/// lower score wins; equal scores keep the earlier (lower feature index,
/// lower threshold) candidate. Features are scanned in parallel and reduced
/// in feature order, so the result is independent of thread count.
pub fn best_split(
    stats: &NodeStats,
    criterion: Criterion,
    constraints: &SplitConstraints,
) -> Result<Option<SplitCandidate>> {
    if criterion == Criterion::Mart {
        stats.require_squared_loss()?;
    }
    if stats.len() < 2 * constraints.min_samples_leaf || stats.len() < 2 {
        return Ok(None);
    }
    let parent = stats.totals();
    let per_feature: Vec<Option<SplitCandidate>> = (0..stats.ds.num_features())
        .into_par_iter()
        .map(|feature| {
            let mut best: Option<SplitCandidate> = None;
            sweep_feature(stats, feature, criterion, constraints, &parent, |c| {
                if best.as_ref().is_none_or(|b| c.score < b.score) {
                    best = Some(c);
                }
            });
            best
        })
        .collect();
    let mut best: Option<SplitCandidate> = None;
    for cand in per_feature.into_iter().flatten() {
        if best.as_ref().is_none_or(|b| cand.score < b.score) {
            best = Some(cand);
        }
    }
    Ok(best)
}
