//! Independent verification oracles.
//!
//! Everything here re-derives its answers from the loss and criterion
//! definitions without touching the engine's incremental machinery: naive
//! two-pass criteria over explicit partitions, central finite differences of
//! the evaluable losses, and an exhaustive split oracle that actually applies
//! the temporary two-leaf outputs and re-evaluates the true loss. The
//! [`theorem_suite`] bundles the equivalence checks into a reproducible,
//! seeded report.

use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dataset::{Document, QueryGroup, RankingDataset};
use crate::error::{Error, Result};
use crate::objective::{
    exact_group_derivatives, frozen_pair_potential, pairwise_exp_gradients, GradientProfile,
    Objective, ObjectiveState,
};
use crate::split::{
    best_split, scan_candidates, Criterion, NodeStats, OleMode, SplitCandidate, SplitConstraints,
};

/// Naive re-implementations of the splitting criteria over an explicit
/// left/right partition. These deliberately mirror the written formulas
/// term by term.
pub mod naive {
    fn mean(values: &[f64]) -> f64 {
        values.iter().sum::<f64>() / values.len() as f64
    }

    fn split(values: &[f64], left: &[bool]) -> (Vec<f64>, Vec<f64>) {
        let mut l = Vec::new();
        let mut r = Vec::new();
        for (i, &v) in values.iter().enumerate() {
            if left[i] {
                l.push(v);
            } else {
                r.push(v);
            }
        }
        (l, r)
    }

    /// Plain squared error of pseudo-responses around per-side means.
    pub fn se(r: &[f64], left: &[bool]) -> f64 {
        let (l, rt) = split(r, left);
        let (ml, mr) = (mean(&l), mean(&rt));
        l.iter().map(|x| (x - ml) * (x - ml)).sum::<f64>()
            + rt.iter().map(|x| (x - mr) * (x - mr)).sum::<f64>()
    }

    fn weighted_mean(r: &[f64], w: &[f64]) -> f64 {
        let num: f64 = r.iter().zip(w).map(|(x, y)| x * y).sum();
        let den: f64 = w.iter().sum();
        num / den
    }

    fn weighted_sq(r: &[f64], w: &[f64]) -> f64 {
        let m = weighted_mean(r, w);
        r.iter().zip(w).map(|(x, y)| y * (x - m) * (x - m)).sum()
    }

    /// Weighted square error including the subtracted parent term.
    pub fn wse(r: &[f64], w: &[f64], left: &[bool]) -> f64 {
        let (rl, rr) = split(r, left);
        let (wl, wr) = split(w, left);
        weighted_sq(&rl, &wl) + weighted_sq(&rr, &wr) - weighted_sq(r, w)
    }

    /// Robust weighted square error.
    pub fn rwse(r: &[f64], w: &[f64], left: &[bool]) -> f64 {
        let term = |rs: &[f64], ws: &[f64]| {
            let num: f64 = rs.iter().zip(ws).map(|(x, y)| x * y).sum();
            let den: f64 = ws.iter().sum();
            num * num / den
        };
        let (rl, rr) = split(r, left);
        let (wl, wr) = split(w, left);
        -(term(&rl, &wl) + term(&rr, &wr)) + term(r, w)
    }

    /// Objective-loss-based error from additive derivative sums.
    pub fn ole_additive(g: &[f64], h: &[f64], left: &[bool]) -> f64 {
        let (gl, gr) = split(g, left);
        let (hl, hr) = split(h, left);
        let term = |gs: &[f64], hs: &[f64]| {
            let gsum: f64 = gs.iter().sum();
            let hsum: f64 = hs.iter().sum();
            gsum * gsum / hsum
        };
        -(term(&gl, &hl) + term(&gr, &hr))
    }

    /// Simplified squared-loss criterion.
    pub fn mart(r: &[f64], left: &[bool]) -> f64 {
        let (l, rt) = split(r, left);
        let term = |xs: &[f64]| {
            let s: f64 = xs.iter().sum();
            s * s / xs.len() as f64
        };
        -(term(&l) + term(&rt))
    }
}

// ---------------------------------------------------------------------------
// Finite differences
// ---------------------------------------------------------------------------

/// Default central-difference step.
pub const DEFAULT_FD_STEP: f64 = 1e-4;
/// Mixed tolerance for derivative comparisons.
pub const FD_ABS_TOL: f64 = 1e-8;
pub const FD_REL_TOL: f64 = 1e-5;

#[derive(Debug, Clone, Serialize)]
pub struct FiniteDiffResult {
    pub analytic_grad: f64,
    pub analytic_hess: f64,
    pub numeric_grad: f64,
    pub numeric_hess: f64,
    pub grad_residual: f64,
    pub hess_residual: f64,
}

impl FiniteDiffResult {
    pub fn within(&self, abs_tol: f64, rel_tol: f64) -> bool {
        let ok = |residual: f64, scale: f64| residual <= abs_tol + rel_tol * scale.abs();
        ok(self.grad_residual, self.analytic_grad) && ok(self.hess_residual, self.analytic_hess)
    }
}

/// Evaluates the objective loss as a function of a common offset `o` applied
/// to `group` (class `class` for McRank). LambdaMART uses the frozen pair
/// potential so the function stays smooth.
fn loss_at_offset(
    state: &ObjectiveState,
    ds: &RankingDataset,
    group: &[usize],
    class: usize,
    offset: f64,
) -> f64 {
    match state.objective() {
        Objective::LambdaMart => {
            let ctx = state.lambda_context().expect("lambda context");
            let profile =
                crate::objective::lambdamart_gradients(ds, state.scores(0), ctx);
            let mut scores = state.scores(0).to_vec();
            for &d in group {
                scores[d] += offset;
            }
            frozen_pair_potential(Objective::LambdaMart, &profile.pairs, &scores)
        }
        _ => {
            let mut shifted = state.clone();
            shifted.add_group_offset(class, group, offset);
            shifted.loss(ds)
        }
    }
}

/// Central-difference check of the analytic group derivatives at offset zero.
pub fn finite_diff_check(
    state: &ObjectiveState,
    ds: &RankingDataset,
    group: &[usize],
    class: usize,
    step: f64,
) -> Result<FiniteDiffResult> {
    if step <= 0.0 {
        return Err(Error::Config(format!("finite-difference step must be > 0, got {step}")));
    }
    let profile = state.gradients(ds, class)?;
    let (analytic_grad, analytic_hess) = exact_group_derivatives(&profile, group);
    let plus = loss_at_offset(state, ds, group, class, step);
    let zero = loss_at_offset(state, ds, group, class, 0.0);
    let minus = loss_at_offset(state, ds, group, class, -step);
    let numeric_grad = (plus - minus) / (2.0 * step);
    let numeric_hess = (plus - 2.0 * zero + minus) / (step * step);
    Ok(FiniteDiffResult {
        analytic_grad,
        analytic_hess,
        numeric_grad,
        numeric_hess,
        grad_residual: (analytic_grad - numeric_grad).abs(),
        hess_residual: (analytic_hess - numeric_hess).abs(),
    })
}

// ---------------------------------------------------------------------------
// Exhaustive split oracle
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct OracleRanking {
    /// Candidate thresholds in ascending order.
    pub thresholds: Vec<f64>,
    /// True objective loss after applying the exact two-leaf Newton outputs
    /// at each threshold.
    pub true_loss: Vec<f64>,
}

impl OracleRanking {
    /// Candidate indices sorted by ascending true loss.
    pub fn order(&self) -> Vec<usize> {
        argsort(&self.true_loss)
    }
}

/// Indices sorted ascending by value, ties keeping the lower index.
pub fn argsort(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(std::cmp::Ordering::Equal));
    idx
}

/// For every threshold of `feature` over `node_docs`, applies the exact
/// two-leaf Newton outputs and evaluates the true loss. This is the
/// computation the criteria approximate; it is only feasible at small node
/// sizes, hence the 64-document cap.
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn exhaustive_split_oracle(
    state: &ObjectiveState,
    ds: &RankingDataset,
    node_docs: &[usize],
    feature: usize,
    class: usize,
) -> Result<OracleRanking> {
    if node_docs.len() > 64 {
        return Err(Error::Invalid(format!(
            "exhaustive oracle capped at 64 documents, got {}",
            node_docs.len()
        )));
    }
    let profile = state.gradients(ds, class)?;
    let mut docs = node_docs.to_vec();
    docs.sort_by(|&a, &b| {
        ds.feature(a, feature)
            .partial_cmp(&ds.feature(b, feature))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut thresholds = Vec::new();
    for w in docs.windows(2) {
        let lo = ds.feature(w[0], feature);
        let hi = ds.feature(w[1], feature);
        if lo < hi {
            let mut t = lo + (hi - lo) / 2.0;
            if !(t > lo) {
                t = hi;
            }
            thresholds.push(t);
        }
    }
    let mut true_loss = Vec::with_capacity(thresholds.len());
    for &t in &thresholds {
        let (left, right): (Vec<usize>, Vec<usize>) =
            node_docs.iter().partition(|&&d| ds.feature(d, feature) < t);
        let newton = |side: &[usize]| {
            let (g, h) = exact_group_derivatives(&profile, side);
            if h <= crate::split::CURVATURE_GUARD {
                0.0
            } else {
                -g / h
            }
        };
        let o1 = newton(&left);
        let o2 = newton(&right);
        let loss = match state.objective() {
            Objective::LambdaMart => {
                let mut scores = state.scores(0).to_vec();
                for &d in &left {
                    scores[d] += o1;
                }
                for &d in &right {
                    scores[d] += o2;
                }
                frozen_pair_potential(Objective::LambdaMart, &profile.pairs, &scores)
            }
            _ => {
                let mut shifted = state.clone();
                shifted.add_group_offset(class, &left, o1);
                shifted.add_group_offset(class, &right, o2);
                shifted.loss(ds)
            }
        };
        true_loss.push(loss);
    }
    Ok(OracleRanking { thresholds, true_loss })
}

// ---------------------------------------------------------------------------
// Random node instances
// ---------------------------------------------------------------------------

/// A single-query dataset plus a gradient profile over its documents,
/// standing in for one tree node.
pub struct NodeInstance {
    pub ds: RankingDataset,
    pub profile: GradientProfile,
}

fn random_feature_columns(rng: &mut ChaCha8Rng, n: usize, num_features: usize) -> Vec<Document> {
    // values drawn from a small grid so duplicate feature values occur
    (0..n)
        .map(|_| Document {
            features: (0..num_features)
                .map(|_| rng.gen_range(0..10) as f64 * 0.5)
                .collect(),
            label: rng.gen_range(0..3),
        })
        .collect()
}

/// Random squared-loss node: grid-valued features with ties, continuous
/// pseudo-responses, curvature 2.
pub fn random_squared_node(seed: u64) -> NodeInstance {
    let (ds, state) = random_squared_instance(seed);
    let profile = state.gradients(&ds, 0).unwrap();
    NodeInstance { ds, profile }
}

/// Random squared-loss node as a full objective state (scores chosen so the
/// pseudo-responses are continuous).
pub fn random_squared_instance(seed: u64) -> (RankingDataset, ObjectiveState) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(5..=50);
    let num_features = rng.gen_range(1..=4);
    let docs = random_feature_columns(&mut rng, n, num_features);
    let ds = RankingDataset::new(vec![QueryGroup { query_id: 1, docs }]).unwrap();
    let scores: Vec<f64> = ds
        .labels()
        .iter()
        .map(|&y| y as f64 + rng.gen_range(-1.5..1.5))
        .collect();
    let state = ObjectiveState::with_scores(Objective::Mart, &ds, None, vec![scores]).unwrap();
    (ds, state)
}

/// Random McRank node: derivatives of the multi-class logistic loss at
/// random scores, for a random class.
pub fn random_mcrank_node(seed: u64) -> NodeInstance {
    let (ds, state, class) = random_mcrank_instance(seed);
    let profile = state.gradients(&ds, class).unwrap();
    NodeInstance { ds, profile }
}

/// Random McRank node as a full objective state plus the class under
/// consideration.
pub fn random_mcrank_instance(seed: u64) -> (RankingDataset, ObjectiveState, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(5..=50);
    let num_features = rng.gen_range(1..=4);
    let docs = random_feature_columns(&mut rng, n, num_features);
    let ds = RankingDataset::new(vec![QueryGroup { query_id: 1, docs }]).unwrap();
    let num_classes = ds.max_label() as usize + 1;
    let scores: Vec<Vec<f64>> = (0..num_classes)
        .map(|_| (0..n).map(|_| rng.gen_range(-1.5..1.5)).collect())
        .collect();
    let class = rng.gen_range(0..num_classes);
    let state = ObjectiveState::with_scores(Objective::McRank, &ds, None, scores).unwrap();
    (ds, state, class)
}

// ---------------------------------------------------------------------------
// Theorem suite
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub max_residual: f64,
    pub seed: u64,
    /// Description of the first offending instance, when failing.
    pub detail: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub seed: u64,
    pub cases: usize,
    pub checks: Vec<CheckResult>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "verification suite: seed {}, {} cases per check\n",
            self.seed, self.cases
        ));
        for c in &self.checks {
            out.push_str(&format!(
                "{} {} (max residual {:.3e})\n",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.max_residual
            ));
            if let Some(d) = &c.detail {
                out.push_str(&format!("     {d}\n"));
            }
        }
        out.push_str(if self.passed() { "all checks passed\n" } else { "FAILURES present\n" });
        out
    }
}

/// Score perturbation injected into one criterion's candidate scores, for
/// sensitivity checks of the suite itself.
#[derive(Debug, Clone, Copy)]
pub struct FaultInjection {
    pub criterion: Criterion,
    pub epsilon: f64,
}

fn perturb(cands: &mut [SplitCandidate], criterion: Criterion, inject: Option<FaultInjection>) {
    if let Some(f) = inject {
        if f.criterion == criterion {
            for (i, c) in cands.iter_mut().enumerate() {
                c.score += f.epsilon * i as f64;
            }
        }
    }
}

fn scan_all(
    inst: &NodeInstance,
    feature: usize,
    criterion: Criterion,
    inject: Option<FaultInjection>,
) -> Vec<SplitCandidate> {
    let docs: Vec<usize> = (0..inst.ds.num_docs()).collect();
    let stats = NodeStats::new(&inst.ds, &docs, &inst.profile, OleMode::Additive);
    let mut cands =
        scan_candidates(&stats, feature, criterion, &SplitConstraints::default()).unwrap();
    perturb(&mut cands, criterion, inject);
    cands
}

fn engine_argmin(
    inst: &NodeInstance,
    criterion: Criterion,
    inject: Option<FaultInjection>,
) -> Option<(usize, f64)> {
    if inject.is_some_and(|f| f.criterion == criterion) {
        // argmin over perturbed per-feature scans under the same tie rule
        let mut best: Option<(usize, f64, f64)> = None;
        for feature in 0..inst.ds.num_features() {
            for c in scan_all(inst, feature, criterion, inject) {
                if best.as_ref().is_none_or(|b| c.score < b.2) {
                    best = Some((c.feature, c.threshold, c.score));
                }
            }
        }
        return best.map(|(f, t, _)| (f, t));
    }
    let docs: Vec<usize> = (0..inst.ds.num_docs()).collect();
    let stats = NodeStats::new(&inst.ds, &docs, &inst.profile, OleMode::Additive);
    best_split(&stats, criterion, &SplitConstraints::default())
        .unwrap()
        .map(|c| (c.feature, c.threshold))
}

/// Independent argmin: naive criterion over explicitly enumerated partitions,
/// same tie rule.
#[allow(clippy::neg_cmp_op_on_partial_ord)]
fn naive_argmin(inst: &NodeInstance, score: impl Fn(&[bool]) -> f64) -> Option<(usize, f64)> {
    let ds = &inst.ds;
    let n = ds.num_docs();
    let mut best: Option<(usize, f64, f64)> = None;
    for feature in 0..ds.num_features() {
        let mut values: Vec<f64> = (0..n).map(|d| ds.feature(d, feature)).collect();
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        values.dedup();
        for w in values.windows(2) {
            let mut t = w[0] + (w[1] - w[0]) / 2.0;
            if !(t > w[0]) {
                t = w[1];
            }
            let left: Vec<bool> = (0..n).map(|d| ds.feature(d, feature) < t).collect();
            let s = score(&left);
            if best.as_ref().is_none_or(|b| s < b.2) {
                best = Some((feature, t, s));
            }
        }
    }
    best.map(|(f, t, _)| (f, t))
}

fn check_argmin_equivalence(seed: u64, cases: usize, inject: Option<FaultInjection>) -> CheckResult {
    let mut detail = None;
    let mut passed = true;
    for case in 0..cases {
        let inst = random_squared_node(seed.wrapping_add(case as u64 * 7919));
        let se = engine_argmin(&inst, Criterion::Se, inject);
        let mut mismatch = None;
        for criterion in [Criterion::Wse, Criterion::Rwse, Criterion::Ole, Criterion::Mart] {
            let other = engine_argmin(&inst, criterion, inject);
            if other != se {
                mismatch = Some(format!("case {case}: {criterion:?} argmin {other:?} != se {se:?}"));
                break;
            }
        }
        if mismatch.is_none() {
            // independent route: naive SE over explicit partitions
            let r: Vec<f64> = inst.profile.g.iter().map(|&g| -g).collect();
            let naive = naive_argmin(&inst, |left| naive::se(&r, left));
            if naive != se {
                mismatch = Some(format!("case {case}: naive se argmin {naive:?} != engine {se:?}"));
            }
        }
        if let Some(msg) = mismatch {
            passed = false;
            detail = Some(msg);
            break;
        }
    }
    CheckResult {
        name: "squared_loss_argmin_equivalence".into(),
        passed,
        max_residual: 0.0,
        seed,
        detail,
    }
}

fn check_constant_offset_reduction(seed: u64, cases: usize, inject: Option<FaultInjection>) -> CheckResult {
    let mut max_residual: f64 = 0.0;
    let mut detail = None;
    let mut passed = true;
    'outer: for case in 0..cases {
        let node_seed = seed.wrapping_add(case as u64 * 104729);
        let inst = if case % 2 == 0 {
            random_mcrank_node(node_seed)
        } else {
            random_squared_node(node_seed)
        };
        // second-order responses and weights computed literally, then the constant
        let w: Vec<f64> = inst.profile.h.clone();
        let wr: Vec<f64> = inst
            .profile
            .g
            .iter()
            .zip(&inst.profile.h)
            .map(|(&g, &h)| h * (-g / h))
            .collect();
        let expected_const = {
            let num: f64 = wr.iter().sum();
            let den: f64 = w.iter().sum();
            num * num / den
        };
        for feature in 0..inst.ds.num_features() {
            let ole = scan_all(&inst, feature, Criterion::Ole, inject);
            let rwse = scan_all(&inst, feature, Criterion::Rwse, inject);
            assert_eq!(ole.len(), rwse.len());
            for (o, r) in ole.iter().zip(&rwse) {
                let diff = r.score - o.score;
                let residual = (diff - expected_const).abs() / (1.0 + expected_const.abs());
                max_residual = max_residual.max(residual);
                if residual > 1e-9 {
                    passed = false;
                    detail = Some(format!(
                        "case {case}: feature {feature} threshold {}: rwse - ole = {diff}, expected {expected_const}",
                        o.threshold
                    ));
                    break 'outer;
                }
            }
        }
    }
    CheckResult {
        name: "ole_rwse_constant_offset".into(),
        passed,
        max_residual,
        seed,
        detail,
    }
}

fn check_wse_rwse_rank_order(seed: u64, cases: usize, inject: Option<FaultInjection>) -> CheckResult {
    let mut detail = None;
    let mut passed = true;
    'outer: for case in 0..cases {
        let inst = random_mcrank_node(seed.wrapping_add(case as u64 * 31337));
        for feature in 0..inst.ds.num_features() {
            let wse = scan_all(&inst, feature, Criterion::Wse, inject);
            let rwse = scan_all(&inst, feature, Criterion::Rwse, inject);
            let a = argsort(&wse.iter().map(|c| c.score).collect::<Vec<_>>());
            let b = argsort(&rwse.iter().map(|c| c.score).collect::<Vec<_>>());
            if a != b {
                passed = false;
                detail = Some(format!("case {case}: feature {feature}: wse order {a:?} != rwse {b:?}"));
                break 'outer;
            }
        }
    }
    CheckResult {
        name: "wse_rwse_rank_order_equality".into(),
        passed,
        max_residual: 0.0,
        seed,
        detail,
    }
}

fn check_newton_weighted_mean(seed: u64, cases: usize) -> CheckResult {
    let mut max_residual: f64 = 0.0;
    let mut detail = None;
    let mut passed = true;
    for case in 0..cases {
        let inst = random_mcrank_node(seed.wrapping_add(case as u64 * 65537));
        let g = &inst.profile.g;
        let h = &inst.profile.h;
        let newton = -g.iter().sum::<f64>() / h.iter().sum::<f64>();
        let weighted: f64 = {
            let num: f64 = g.iter().zip(h).map(|(&g, &h)| h * (-g / h)).sum();
            let den: f64 = h.iter().sum();
            num / den
        };
        let residual = (newton - weighted).abs() / (1.0 + newton.abs());
        max_residual = max_residual.max(residual);
        if residual > 1e-12 {
            passed = false;
            detail = Some(format!("case {case}: newton {newton} vs weighted mean {weighted}"));
            break;
        }
    }
    CheckResult {
        name: "newton_step_equals_weighted_mean".into(),
        passed,
        max_residual,
        seed,
        detail,
    }
}

/// The worked pair-wise counterexample: scores (2,1,0), strictly decreasing
/// labels, partition {d1,d2} | {d3}.
fn check_additivity_counterexample(seed: u64) -> CheckResult {
    let docs = vec![
        Document { features: vec![0.0], label: 2 },
        Document { features: vec![1.0], label: 1 },
        Document { features: vec![2.0], label: 0 },
    ];
    let ds = RankingDataset::new(vec![QueryGroup { query_id: 1, docs }]).unwrap();
    let scores = [2.0, 1.0, 0.0];
    let profile = pairwise_exp_gradients(&ds, &scores);
    let (exact_g, exact_h) = exact_group_derivatives(&profile, &[0, 1]);
    let additive_h = profile.h[0] + profile.h[1];
    let additive_g = profile.g[0] + profile.g[1];

    let expected_exact = 0.503215;
    let expected_additive = 1.238974;
    let mut max_residual = (exact_h - expected_exact).abs();
    max_residual = max_residual.max((additive_h - expected_additive).abs());
    max_residual = max_residual.max((exact_g + expected_exact).abs());
    max_residual = max_residual.max((exact_g - additive_g).abs());

    // numeric confirmation through the evaluable loss
    let mut state = ObjectiveState::new(Objective::RankExp, &ds, None);
    state.add_group_offset(0, &[0], 2.0);
    state.add_group_offset(0, &[1], 1.0);
    let fd = finite_diff_check(&state, &ds, &[0, 1], 0, DEFAULT_FD_STEP).unwrap();
    max_residual = max_residual.max((fd.numeric_hess - exact_h).abs());
    max_residual = max_residual.max((fd.numeric_grad - exact_g).abs());

    // exact-mode OLE on the partition uses the group curvature, not the sum
    let docs_all = [0usize, 1, 2];
    let stats = NodeStats::new(&ds, &docs_all, &profile, OleMode::Exact);
    let got = crate::split::score_ole(&stats, 0, 1.5).unwrap();
    let want = -(exact_g * exact_g / exact_h + exact_h);
    max_residual = max_residual.max((got - want).abs());

    let passed = max_residual < 1e-4;
    CheckResult {
        name: "pairwise_additivity_counterexample".into(),
        passed,
        max_residual,
        seed,
        detail: (!passed).then(|| {
            format!("exact hess {exact_h}, additive {additive_h}, exact-mode ole {got} vs {want}")
        }),
    }
}

pub fn theorem_suite(seed: u64, cases: usize) -> VerificationReport {
    theorem_suite_with(seed, cases, None)
}

/// Suite variant with an optional score perturbation, used to confirm the
/// checks actually react to criterion errors.
pub fn theorem_suite_with(
    seed: u64,
    cases: usize,
    inject: Option<FaultInjection>,
) -> VerificationReport {
    type Check<'a> = Box<dyn Fn() -> CheckResult + Sync + Send + 'a>;
    let runners: Vec<Check> = vec![
        Box::new(move || check_argmin_equivalence(seed, cases, inject)),
        Box::new(move || check_constant_offset_reduction(seed, cases, inject)),
        Box::new(move || check_wse_rwse_rank_order(seed, cases, inject)),
        Box::new(move || check_newton_weighted_mean(seed, cases)),
        Box::new(move || check_additivity_counterexample(seed)),
    ];
    // checks are independent; the report is assembled order-independently
    let mut checks: Vec<CheckResult> = runners.par_iter().map(|run| run()).collect();
    checks.sort_by(|a, b| a.name.cmp(&b.name));
    VerificationReport { seed, cases, checks }
}
