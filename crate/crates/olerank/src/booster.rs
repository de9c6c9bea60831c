//! The boosting outer loop: per-iteration gradients, one fitted tree per
//! class, learning-rate-scaled score updates, and a per-iteration log of
//! training loss and optional validation metrics.

use crate::dataset::RankingDataset;
use crate::error::{Error, Result};
use crate::metrics::{evaluate, MetricReport};
use crate::objective::{Objective, ObjectiveState};
use crate::split::{Criterion, OleMode};
use crate::tree::{assign_leaf_outputs, grow, GrowConfig, GrowthOrder, RegressionTree};

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub objective: Objective,
    pub criterion: Criterion,
    pub leaves: usize,
    pub learning_rate: f64,
    /// Boosting iterations; McRank fits one tree per class per iteration.
    pub trees: usize,
    pub min_samples_leaf: usize,
    pub ole_mode: OleMode,
    pub growth: GrowthOrder,
    /// NDCG truncation for LambdaMART pair weights; `None` uses the full list.
    pub lambda_cutoff: Option<usize>,
    /// NDCG cutoffs reported on the validation set.
    pub metric_cutoffs: Vec<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            objective: Objective::Mart,
            criterion: Criterion::Se,
            leaves: 10,
            learning_rate: 0.1,
            trees: 100,
            min_samples_leaf: 1,
            ole_mode: OleMode::Exact,
            growth: GrowthOrder::WidthFirst,
            lambda_cutoff: None,
            metric_cutoffs: vec![1, 3, 10],
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::Config(format!(
                "learning rate must be in (0, 1], got {}",
                self.learning_rate
            )));
        }
        if self.leaves < 2 {
            return Err(Error::Config(format!("leaves must be >= 2, got {}", self.leaves)));
        }
        if self.min_samples_leaf < 1 {
            return Err(Error::Config("min samples per leaf must be >= 1".into()));
        }
        if self.criterion == Criterion::Mart && self.objective != Objective::Mart {
            return Err(Error::Config(
                "criterion `mart` applies only to the squared-loss objective".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct IterationRecord {
    pub train_loss: f64,
    pub valid: Option<MetricReport>,
}

#[derive(Debug, Clone, Default)]
pub struct TrainingLog {
    pub iterations: Vec<IterationRecord>,
}

impl TrainingLog {
    pub fn losses(&self) -> Vec<f64> {
        self.iterations.iter().map(|r| r.train_loss).collect()
    }

    pub fn final_loss(&self) -> Option<f64> {
        self.iterations.last().map(|r| r.train_loss)
    }
}

/// Pointwise difference `a - b` of two loss curves, truncated to the shorter.
pub fn difference_curve(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Relative gap `(a - b) / a` between two final training losses, the shape
/// loss comparisons between criteria are reported in.
pub fn final_loss_relative_gap(a: &TrainingLog, b: &TrainingLog) -> Option<f64> {
    match (a.final_loss(), b.final_loss()) {
        (Some(x), Some(y)) if x != 0.0 => Some((x - y) / x),
        _ => None,
    }
}

/// A trained additive tree model. McRank holds one tree sequence per class;
/// the other objectives hold a single sequence.
#[derive(Debug, Clone)]
pub struct Ensemble {
    objective: Objective,
    learning_rate: f64,
    max_label: u32,
    num_features: usize,
    groups: Vec<Vec<RegressionTree>>,
    log: TrainingLog,
}

impl Ensemble {
    pub fn from_parts(
        objective: Objective,
        learning_rate: f64,
        max_label: u32,
        num_features: usize,
        groups: Vec<Vec<RegressionTree>>,
    ) -> Result<Self> {
        if !(learning_rate > 0.0 && learning_rate <= 1.0) {
            return Err(Error::Model(format!("learning rate {learning_rate} out of (0, 1]")));
        }
        let expected = match objective {
            Objective::McRank => max_label as usize + 1,
            _ => 1,
        };
        if groups.len() != expected {
            return Err(Error::Model(format!(
                "objective {} expects {expected} tree groups, got {}",
                objective.id(),
                groups.len()
            )));
        }
        if let Some(first) = groups.first() {
            if groups.iter().any(|g| g.len() != first.len()) {
                return Err(Error::Model("tree groups have unequal lengths".into()));
            }
        }
        Ok(Self { objective, learning_rate, max_label, num_features, groups, log: TrainingLog::default() })
    }

    pub fn objective(&self) -> Objective {
        self.objective
    }

    pub fn learning_rate(&self) -> f64 {
        self.learning_rate
    }

    pub fn max_label(&self) -> u32 {
        self.max_label
    }

    pub fn num_features(&self) -> usize {
        self.num_features
    }

    pub fn groups(&self) -> &[Vec<RegressionTree>] {
        &self.groups
    }

    /// Boosting iterations performed (trees per group).
    pub fn num_iterations(&self) -> usize {
        self.groups.first().map_or(0, |g| g.len())
    }

    pub fn log(&self) -> &TrainingLog {
        &self.log
    }

    /// Per-iteration training losses, the series behind loss curves.
    pub fn training_curves(&self) -> Vec<f64> {
        self.log.losses()
    }

    /// Replays the ensemble over a dataset, reproducing exactly the score
    /// accumulation performed during training, and returns the final ranking
    /// scores (expected relevance for McRank).
    pub fn predict_scores(&self, ds: &RankingDataset) -> Result<Vec<f64>> {
        if ds.num_features() != self.num_features {
            return Err(Error::Invalid(format!(
                "dataset has {} features, model expects {}",
                ds.num_features(),
                self.num_features
            )));
        }
        let mut state = ObjectiveState::new(self.objective, ds, None);
        self.replay_into(ds, &mut state);
        Ok(state.ranking_scores())
    }

    fn replay_into(&self, ds: &RankingDataset, state: &mut ObjectiveState) {
        for (class, trees) in self.groups.iter().enumerate() {
            for tree in trees {
                state.apply_tree(ds, class, tree, self.learning_rate);
            }
        }
    }
}

/// Runs the boosting loop. Validation metrics are computed every iteration
/// when `valid` is given.
pub fn train(
    ds: &RankingDataset,
    cfg: &TrainConfig,
    valid: Option<&RankingDataset>,
) -> Result<Ensemble> {
    cfg.validate()?;
    if let Some(v) = valid {
        if v.num_features() != ds.num_features() {
            return Err(Error::Config(format!(
                "validation set has {} features, training set {}",
                v.num_features(),
                ds.num_features()
            )));
        }
    }

    let mut state = ObjectiveState::new(cfg.objective, ds, cfg.lambda_cutoff);
    let mut valid_state = valid.map(|v| ObjectiveState::new(cfg.objective, v, None));
    let num_classes = state.num_classes();
    let all_docs: Vec<usize> = (0..ds.num_docs()).collect();
    let grow_cfg = GrowConfig {
        criterion: cfg.criterion,
        ole_mode: cfg.ole_mode,
        leaf_budget: cfg.leaves,
        min_samples_leaf: cfg.min_samples_leaf,
        growth: cfg.growth,
    };

    let mut groups: Vec<Vec<RegressionTree>> = vec![Vec::with_capacity(cfg.trees); num_classes];
    let mut log = TrainingLog::default();

    for _ in 0..cfg.trees {
        for (class, group) in groups.iter_mut().enumerate() {
            let profile = state.gradients(ds, class)?;
            let mut grown = grow(ds, &all_docs, &profile, &grow_cfg)?;
            assign_leaf_outputs(&mut grown, &profile, cfg.ole_mode);
            state.apply_tree(ds, class, &grown.tree, cfg.learning_rate);
            if let (Some(vs), Some(v)) = (valid_state.as_mut(), valid) {
                vs.apply_tree(v, class, &grown.tree, cfg.learning_rate);
            }
            group.push(grown.tree);
        }
        let valid_report = match (valid_state.as_ref(), valid) {
            (Some(vs), Some(v)) => Some(evaluate(v, &vs.ranking_scores(), &cfg.metric_cutoffs)?),
            _ => None,
        };
        log.iterations.push(IterationRecord { train_loss: state.loss(ds), valid: valid_report });
    }

    let mut ensemble = Ensemble::from_parts(
        cfg.objective,
        cfg.learning_rate,
        ds.max_label(),
        ds.num_features(),
        groups,
    )?;
    ensemble.log = log;
    Ok(ensemble)
}
