//! Regression trees: growth under a leaf budget and one-step Newton leaf
//! outputs.
//!
//! Growth is width-first by default: a FIFO frontier is expanded oldest leaf
//! first until the leaf budget is reached or nothing is expandable.
//! Depth-first (LIFO) expansion is available behind a flag for
//! experimentation; it is not the recommended order.

use std::collections::VecDeque;

use crate::dataset::RankingDataset;
use crate::error::{Error, Result};
use crate::objective::{exact_group_derivatives, GradientProfile};
use crate::split::{best_split, Criterion, NodeStats, OleMode, SplitConstraints};

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Internal { feature: u32, threshold: f64, left: u32, right: u32 },
    Leaf { output: f64 },
}

/// A fitted binary regression tree. Routing goes left iff
/// `features[feature] < threshold`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionTree {
    nodes: Vec<Node>,
}

impl RegressionTree {
    pub fn from_nodes(nodes: Vec<Node>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::Model("tree has no nodes".into()));
        }
        Ok(Self { nodes })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    /// Node id of the leaf an input is routed to.
    pub fn route(&self, features: &[f64]) -> u32 {
        let mut id = 0u32;
        loop {
            match &self.nodes[id as usize] {
                Node::Leaf { .. } => return id,
                Node::Internal { feature, threshold, left, right } => {
                    id = if features[*feature as usize] < *threshold { *left } else { *right };
                }
            }
        }
    }

    pub fn predict(&self, features: &[f64]) -> f64 {
        match &self.nodes[self.route(features) as usize] {
            Node::Leaf { output } => *output,
            Node::Internal { .. } => unreachable!("route returns a leaf"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GrowthOrder {
    WidthFirst,
    DepthFirst,
}

impl GrowthOrder {
    pub fn id(&self) -> &'static str {
        match self {
            GrowthOrder::WidthFirst => "width",
            GrowthOrder::DepthFirst => "depth",
        }
    }

    pub fn from_id(id: &str) -> Result<Self> {
        match id {
            "width" => Ok(GrowthOrder::WidthFirst),
            "depth" => Ok(GrowthOrder::DepthFirst),
            other => Err(Error::Config(format!("unknown growth order `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GrowConfig {
    pub criterion: Criterion,
    pub ole_mode: OleMode,
    pub leaf_budget: usize,
    pub min_samples_leaf: usize,
    pub growth: GrowthOrder,
}

/// A grown tree whose leaf outputs are not assigned yet, keeping the
/// training-time document partition per leaf.
#[derive(Debug, Clone)]
pub struct GrownTree {
    pub tree: RegressionTree,
    /// `(leaf node id, documents routed to it)` in creation order.
    pub leaf_docs: Vec<(u32, Vec<usize>)>,
}

/// Grows a tree over `docs` by repeatedly expanding the frontier leaf with
/// the best split under the configured criterion.
pub fn grow(
    ds: &RankingDataset,
    docs: &[usize],
    profile: &GradientProfile,
    cfg: &GrowConfig,
) -> Result<GrownTree> {
    if cfg.leaf_budget < 2 {
        return Err(Error::Config(format!(
            "leaf budget must be >= 2, got {}",
            cfg.leaf_budget
        )));
    }
    if docs.is_empty() {
        return Err(Error::Invalid("cannot grow a tree over zero documents".into()));
    }
    let constraints = SplitConstraints { min_samples_leaf: cfg.min_samples_leaf };

    let mut nodes = vec![Node::Leaf { output: 0.0 }];
    let mut settled: Vec<(u32, Vec<usize>)> = Vec::new();
    let mut frontier: VecDeque<(u32, Vec<usize>)> = VecDeque::new();
    frontier.push_back((0, docs.to_vec()));
    let mut leaf_count = 1usize;

    while leaf_count < cfg.leaf_budget {
        let (id, node_docs) = match cfg.growth {
            GrowthOrder::WidthFirst => match frontier.pop_front() {
                Some(item) => item,
                None => break,
            },
            GrowthOrder::DepthFirst => match frontier.pop_back() {
                Some(item) => item,
                None => break,
            },
        };
        let stats = NodeStats::new(ds, &node_docs, profile, cfg.ole_mode);
        let candidate = best_split(&stats, cfg.criterion, &constraints)?;
        let Some(cand) = candidate else {
            settled.push((id, node_docs));
            continue;
        };

        let mut left_docs = Vec::with_capacity(cand.left_count());
        let mut right_docs = Vec::with_capacity(cand.right_count());
        for &d in &node_docs {
            if ds.feature(d, cand.feature) < cand.threshold {
                left_docs.push(d);
            } else {
                right_docs.push(d);
            }
        }
        let left_id = nodes.len() as u32;
        let right_id = left_id + 1;
        nodes.push(Node::Leaf { output: 0.0 });
        nodes.push(Node::Leaf { output: 0.0 });
        nodes[id as usize] = Node::Internal {
            feature: cand.feature as u32,
            threshold: cand.threshold,
            left: left_id,
            right: right_id,
        };
        match cfg.growth {
            GrowthOrder::WidthFirst => {
                frontier.push_back((left_id, left_docs));
                frontier.push_back((right_id, right_docs));
            }
            GrowthOrder::DepthFirst => {
                // pop_back order expands the left child first
                frontier.push_back((right_id, right_docs));
                frontier.push_back((left_id, left_docs));
            }
        }
        leaf_count += 1;
    }

    let mut leaf_docs = settled;
    leaf_docs.extend(frontier);
    leaf_docs.sort_by_key(|(id, _)| *id);
    Ok(GrownTree { tree: RegressionTree { nodes }, leaf_docs })
}

/// Assigns each leaf its one-step Newton output `-L'(o=0)/L''(o=0)` over the
/// leaf's documents: plain derivative sums for additive objectives (or in
/// additive mode), exact group derivatives otherwise. Leaves with vanishing
/// curvature stay at output zero.
pub fn assign_leaf_outputs(grown: &mut GrownTree, profile: &GradientProfile, mode: OleMode) {
    for (id, docs) in &grown.leaf_docs {
        let (grad, hess) = if profile.derivative_additive || mode == OleMode::Additive {
            let g: f64 = docs.iter().map(|&d| profile.g[d]).sum();
            let h: f64 = docs.iter().map(|&d| profile.h[d]).sum();
            (g, h)
        } else {
            exact_group_derivatives(profile, docs)
        };
        let output = if hess <= crate::split::CURVATURE_GUARD { 0.0 } else { -grad / hess };
        grown.tree.nodes[*id as usize] = Node::Leaf { output };
    }
}

/// Grows a tree and assigns its leaf outputs in one call.
pub fn grow_fitted(
    ds: &RankingDataset,
    docs: &[usize],
    profile: &GradientProfile,
    cfg: &GrowConfig,
) -> Result<RegressionTree> {
    let mut grown = grow(ds, docs, profile, cfg)?;
    assign_leaf_outputs(&mut grown, profile, cfg.ole_mode);
    Ok(grown.tree)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Document, QueryGroup};
    use crate::objective::{mart_gradients, mcrank_gradients, class_probabilities};

    fn one_feature_dataset(values: &[f64], labels: &[u32]) -> RankingDataset {
        let docs = values
            .iter()
            .zip(labels)
            .map(|(&v, &l)| Document { features: vec![v], label: l })
            .collect();
        RankingDataset::new(vec![QueryGroup { query_id: 1, docs }]).unwrap()
    }

    fn cfg(criterion: Criterion, leaves: usize) -> GrowConfig {
        GrowConfig {
            criterion,
            ole_mode: OleMode::Additive,
            leaf_budget: leaves,
            min_samples_leaf: 1,
            growth: GrowthOrder::WidthFirst,
        }
    }

    #[test]
    fn budget_two_is_a_stump() {
        let ds = one_feature_dataset(&[0.0, 1.0, 2.0, 3.0], &[0, 0, 2, 2]);
        let profile = mart_gradients(&ds, &[0.0; 4]);
        let docs: Vec<usize> = (0..4).collect();
        let tree = grow_fitted(&ds, &docs, &profile, &cfg(Criterion::Se, 2)).unwrap();
        assert_eq!(tree.leaf_count(), 2);
        assert_eq!(tree.nodes().len(), 3);
    }

    #[test]
    fn constant_features_degenerate_to_single_leaf() {
        let ds = one_feature_dataset(&[5.0, 5.0, 5.0], &[0, 1, 2]);
        let profile = mart_gradients(&ds, &[0.0; 3]);
        let docs: Vec<usize> = (0..3).collect();
        let tree = grow_fitted(&ds, &docs, &profile, &cfg(Criterion::Se, 8)).unwrap();
        assert_eq!(tree.leaf_count(), 1);
    }

    #[test]
    fn rejects_budget_below_two() {
        let ds = one_feature_dataset(&[0.0, 1.0], &[0, 1]);
        let profile = mart_gradients(&ds, &[0.0; 2]);
        let docs: Vec<usize> = (0..2).collect();
        assert!(grow(&ds, &docs, &profile, &cfg(Criterion::Se, 1)).is_err());
    }

    /// Four separated clusters on one feature; under a budget of 3, FIFO
    /// expands the older (left) child while LIFO expands the newer (right)
    /// one, and under a budget of 4 both orders split everything.
    #[test]
    fn width_first_expands_in_fifo_order() {
        let ds = one_feature_dataset(&[0.0, 1.0, 2.0, 3.0], &[0, 0, 0, 0]);
        // pseudo-responses 0, 10, 20, 30 via f - y offsets: g = 2(f - y)
        let scores = [0.0, -5.0, -10.0, -15.0];
        let profile = mart_gradients(&ds, &scores);
        let docs: Vec<usize> = (0..4).collect();

        let mut c = cfg(Criterion::Se, 3);
        let fifo = grow(&ds, &docs, &profile, &c).unwrap();
        // root split at 1.5, then the left child {0,1} splits
        match fifo.tree.nodes()[1] {
            Node::Internal { threshold, .. } => assert!((threshold - 0.5).abs() < 1e-12),
            _ => panic!("expected the left child to be expanded under FIFO"),
        }
        assert!(matches!(fifo.tree.nodes()[2], Node::Leaf { .. }));

        c.growth = GrowthOrder::DepthFirst;
        let lifo = grow(&ds, &docs, &profile, &c).unwrap();
        match lifo.tree.nodes()[1] {
            Node::Internal { threshold, .. } => assert!((threshold - 0.5).abs() < 1e-12),
            _ => panic!("expected the left child to be expanded first under LIFO too"),
        }

        let c4 = cfg(Criterion::Se, 4);
        let full = grow(&ds, &docs, &profile, &c4).unwrap();
        assert_eq!(full.tree.leaf_count(), 4);
        assert!(matches!(full.tree.nodes()[1], Node::Internal { .. }));
        assert!(matches!(full.tree.nodes()[2], Node::Internal { .. }));
    }

    #[test]
    fn newton_output_is_half_mean_response() {
        // leaf with pseudo-responses r = [2, 4]: output = (2 + 4) / (2 * 2) = 1.5
        let profile = crate::objective::GradientProfile {
            g: vec![-2.0, -4.0],
            h: vec![2.0, 2.0],
            derivative_additive: true,
            pairs: Vec::new(),
        };
        let mut grown = GrownTree {
            tree: RegressionTree { nodes: vec![Node::Leaf { output: 0.0 }] },
            leaf_docs: vec![(0, vec![0, 1])],
        };
        assign_leaf_outputs(&mut grown, &profile, OleMode::Additive);
        assert_eq!(grown.tree.predict(&[0.0]), 1.5);
    }

    #[test]
    fn zero_gradient_leaf_outputs_zero() {
        let profile = crate::objective::GradientProfile {
            g: vec![0.0, 0.0],
            h: vec![0.0, 0.0],
            derivative_additive: true,
            pairs: Vec::new(),
        };
        let mut grown = GrownTree {
            tree: RegressionTree { nodes: vec![Node::Leaf { output: 0.0 }] },
            leaf_docs: vec![(0, vec![0, 1])],
        };
        assign_leaf_outputs(&mut grown, &profile, OleMode::Additive);
        assert_eq!(grown.tree.predict(&[0.0]), 0.0);
    }

    #[test]
    fn mcrank_leaf_equals_weighted_average() {
        let ds = one_feature_dataset(&[0.0, 1.0, 2.0, 3.0], &[0, 1, 1, 0]);
        let probs = class_probabilities(&[
            vec![0.3, -0.2, 0.8, 0.1],
            vec![-0.1, 0.4, 0.0, -0.6],
        ]);
        let profile = mcrank_gradients(&ds, &probs, 1);
        let docs: Vec<usize> = (0..4).collect();
        let mut grown = GrownTree {
            tree: RegressionTree { nodes: vec![Node::Leaf { output: 0.0 }] },
            leaf_docs: vec![(0, docs.clone())],
        };
        assign_leaf_outputs(&mut grown, &profile, OleMode::Additive);
        let newton = grown.tree.predict(&[0.0]);
        // the literal weighted average of second-order responses
        let wr: f64 = docs.iter().map(|&d| profile.h[d] * (-profile.g[d] / profile.h[d])).sum();
        let w: f64 = docs.iter().map(|&d| profile.h[d]).sum();
        assert!((newton - wr / w).abs() <= 1e-12 * (1.0 + newton.abs()));
    }

    #[test]
    fn stump_routing() {
        let tree = RegressionTree {
            nodes: vec![
                Node::Internal { feature: 0, threshold: 0.5, left: 1, right: 2 },
                Node::Leaf { output: -1.0 },
                Node::Leaf { output: 1.0 },
            ],
        };
        assert_eq!(tree.predict(&[0.4]), -1.0);
        assert_eq!(tree.predict(&[0.5]), 1.0);
        assert_eq!(tree.predict(&[0.6]), 1.0);
    }

    #[test]
    fn single_leaf_tree_is_constant() {
        let tree = RegressionTree { nodes: vec![Node::Leaf { output: 0.75 }] };
        assert_eq!(tree.predict(&[1.0, 2.0]), 0.75);
        assert_eq!(tree.predict(&[-9.0]), 0.75);
    }

    #[test]
    fn prediction_routing_matches_training_partition() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let values: Vec<f64> = (0..40).map(|_| rng.gen_range(0..10) as f64).collect();
        let labels: Vec<u32> = (0..40).map(|_| rng.gen_range(0..3)).collect();
        let ds = one_feature_dataset(&values, &labels);
        let profile = mart_gradients(&ds, &vec![0.0; 40]);
        let docs: Vec<usize> = (0..40).collect();
        let grown = grow(&ds, &docs, &profile, &cfg(Criterion::Se, 6)).unwrap();
        for (leaf_id, leaf_docs) in &grown.leaf_docs {
            for &d in leaf_docs {
                assert_eq!(grown.tree.route(&ds.document(d).features), *leaf_id);
            }
        }
    }

    #[test]
    fn newton_outputs_realize_predicted_reduction_on_squared_loss() {
        use crate::objective::mart_loss;
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        let n = 30;
        let values: Vec<f64> = (0..n).map(|_| rng.gen_range(0..8) as f64).collect();
        let labels: Vec<u32> = (0..n).map(|_| rng.gen_range(0..3)).collect();
        let ds = one_feature_dataset(&values, &labels);
        let scores: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let profile = mart_gradients(&ds, &scores);
        let docs: Vec<usize> = (0..n).collect();
        let mut grown = grow(&ds, &docs, &profile, &cfg(Criterion::Se, 5)).unwrap();
        assign_leaf_outputs(&mut grown, &profile, OleMode::Additive);

        // second-order predicted reduction: sum over leaves of L'^2 / (2 L'')
        let predicted: f64 = grown
            .leaf_docs
            .iter()
            .map(|(_, leaf)| {
                let g: f64 = leaf.iter().map(|&d| profile.g[d]).sum();
                let h: f64 = leaf.iter().map(|&d| profile.h[d]).sum();
                g * g / (2.0 * h)
            })
            .sum();
        let before = mart_loss(&ds, &scores);
        let mut after_scores = scores.clone();
        for (d, s) in after_scores.iter_mut().enumerate() {
            *s += grown.tree.predict(&ds.document(d).features);
        }
        let after = mart_loss(&ds, &after_scores);
        // the Taylor step is exact for a quadratic loss
        assert!(
            ((before - after) - predicted).abs() <= 1e-9 * (1.0 + predicted.abs()),
            "actual reduction {} vs predicted {}",
            before - after,
            predicted
        );
        assert!(after <= before);
    }

    #[test]
    fn tree_structure_identical_across_equivalent_criteria() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
        for _ in 0..20 {
            let n = rng.gen_range(8..=40);
            let docs_vec: Vec<Document> = (0..n)
                .map(|_| Document {
                    features: (0..3).map(|_| rng.gen_range(0..12) as f64 * 0.25).collect(),
                    label: rng.gen_range(0..3),
                })
                .collect();
            let ds =
                RankingDataset::new(vec![QueryGroup { query_id: 1, docs: docs_vec }]).unwrap();
            let scores: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let profile = mart_gradients(&ds, &scores);
            let docs: Vec<usize> = (0..n).collect();
            let reference = grow_fitted(&ds, &docs, &profile, &cfg(Criterion::Se, 6)).unwrap();
            for criterion in [Criterion::Rwse, Criterion::Ole, Criterion::Mart, Criterion::Wse] {
                let other = grow_fitted(&ds, &docs, &profile, &cfg(criterion, 6)).unwrap();
                assert_eq!(reference, other, "criterion {criterion:?} grew a different tree");
            }
        }
    }
}
