//! Gradient-boosted regression trees and bootstrap ensembles.
//!
//! This is the default citywide interpolation model: stagewise squared-error
//! boosting with greedy split search, leaf values equal to the mean residual,
//! and a fixed learning rate. Everything is deterministic given the config
//! and the training data *multiset*: rows are brought into a canonical order
//! before fitting, split ties break to the lowest feature index and then the
//! lowest threshold, and thresholds are actual data values (a row goes left
//! iff `x[feature] <= threshold`).
//!
//! Two split-search routes exist. The exact route sorts the node's rows per
//! feature and scans runs of equal values; it is the correctness reference.
//! The binned route quantizes each feature to at most `max_bins` edge values
//! up front and scans bin statistics instead. When every feature has no more
//! distinct values than the bin budget the two routes produce bitwise
//! identical models, which the tests assert.
//!
//! Predictive uncertainty comes from a bootstrap ensemble: `M` models fitted
//! on with-replacement resamples of the training rows, with the ensemble
//! variance using the `M - 1` divisor.

use serde::{Deserialize, Serialize};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum SplitMode {
    Exact,
    Binned { max_bins: usize },
}

impl Default for SplitMode {
    fn default() -> Self {
        SplitMode::Exact
    }
}

impl SplitMode {
    pub fn binned() -> Self {
        SplitMode::Binned { max_bins: 256 }
    }
}

/// Hyperparameters of the boosted-tree regressor. The loss is squared
/// error, fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RegressorConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub min_samples_leaf: usize,
    pub seed: u64,
    pub split_mode: SplitMode,
}

impl Default for RegressorConfig {
    fn default() -> Self {
        RegressorConfig {
            n_trees: 200,
            max_depth: 6,
            learning_rate: 0.1,
            min_samples_leaf: 5,
            seed: 0,
            split_mode: SplitMode::Exact,
        }
    }
}

impl RegressorConfig {
    pub fn validate(&self) -> Result<(), RegressorError> {
        if self.n_trees == 0 {
            return Err(RegressorError::BadConfig("n_trees must be positive".into()));
        }
        if self.max_depth == 0 {
            return Err(RegressorError::BadConfig("max_depth must be positive".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(RegressorError::BadConfig(format!(
                "learning_rate must be in (0, 1], got {}",
                self.learning_rate
            )));
        }
        if self.min_samples_leaf == 0 {
            return Err(RegressorError::BadConfig(
                "min_samples_leaf must be positive".into(),
            ));
        }
        if let SplitMode::Binned { max_bins } = self.split_mode {
            if max_bins < 2 {
                return Err(RegressorError::BadConfig(format!(
                    "max_bins must be at least 2, got {max_bins}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum RegressorError {
    #[error("cannot fit on zero rows")]
    EmptyRows,
    #[error("target of row {0} is not finite")]
    NonFiniteTarget(usize),
    #[error("feature {col} of row {row} is not finite")]
    NonFiniteFeature { row: usize, col: usize },
    #[error("rows must share one feature length; saw {0} and {1}")]
    RaggedRows(usize, usize),
    #[error("expected {expected} features per row, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("bootstrap ensembles need at least 2 members, got {0}")]
    EnsembleArity(usize),
    #[error("invalid regressor config: {0}")]
    BadConfig(String),
    #[error("model deserialization failed: {0}")]
    BadModel(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "node")]
pub enum Node {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: u32,
        right: u32,
    },
}

/// One regression tree as a node arena; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict_one(&self, row: &[f64]) -> f64 {
        let mut idx = 0usize;
        loop {
            match &self.nodes[idx] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    idx = if row[*feature] <= *threshold {
                        *left as usize
                    } else {
                        *right as usize
                    };
                }
            }
        }
    }
}

/// A fitted boosted-tree model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressorModel {
    pub config: RegressorConfig,
    pub n_features: usize,
    pub base_prediction: f64,
    pub trees: Vec<Tree>,
    /// Training mean squared error after each boosting stage;
    /// non-increasing by construction.
    pub training_mse: Vec<f64>,
}

const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct VersionedModel {
    format_version: u32,
    model: RegressorModel,
}

impl RegressorModel {
    pub fn to_json(&self) -> String {
        serde_json::to_string(&VersionedModel {
            format_version: MODEL_FORMAT_VERSION,
            model: self.clone(),
        })
        .expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, RegressorError> {
        let versioned: VersionedModel =
            serde_json::from_str(text).map_err(|e| RegressorError::BadModel(e.to_string()))?;
        if versioned.format_version != MODEL_FORMAT_VERSION {
            return Err(RegressorError::BadModel(format!(
                "unsupported model format version {}",
                versioned.format_version
            )));
        }
        Ok(versioned.model)
    }
}

/// Fits the boosted-tree regressor on `(row, target)` pairs.
pub fn fit_regressor(
    config: &RegressorConfig,
    features: &[Vec<f64>],
    targets: &[f64],
) -> Result<RegressorModel, RegressorError> {
    config.validate()?;
    if features.is_empty() || targets.is_empty() {
        return Err(RegressorError::EmptyRows);
    }
    if features.len() != targets.len() {
        return Err(RegressorError::RaggedRows(features.len(), targets.len()));
    }
    let n_features = features[0].len();
    for (i, row) in features.iter().enumerate() {
        if row.len() != n_features {
            return Err(RegressorError::RaggedRows(n_features, row.len()));
        }
        for (j, v) in row.iter().enumerate() {
            if !v.is_finite() {
                return Err(RegressorError::NonFiniteFeature { row: i, col: j });
            }
        }
        if !targets[i].is_finite() {
            return Err(RegressorError::NonFiniteTarget(i));
        }
    }

    // Canonical row order: training becomes invariant to the row order of
    // the input multiset.
    let mut order: Vec<usize> = (0..features.len()).collect();
    order.sort_by(|&a, &b| {
        lex_cmp(&features[a], &features[b])
            .then_with(|| targets[a].partial_cmp(&targets[b]).expect("finite"))
    });
    let rows: Vec<&[f64]> = order.iter().map(|&i| features[i].as_slice()).collect();
    let y: Vec<f64> = order.iter().map(|&i| targets[i]).collect();

    let n = rows.len();
    let base_prediction = y.iter().sum::<f64>() / n as f64;
    let mut predictions = vec![base_prediction; n];
    let mut residuals = vec![0.0f64; n];

    let binner = match config.split_mode {
        SplitMode::Exact => None,
        SplitMode::Binned { max_bins } => Some(Binner::fit(&rows, n_features, max_bins)),
    };

    let mut trees = Vec::with_capacity(config.n_trees);
    let mut training_mse = Vec::with_capacity(config.n_trees);
    for _ in 0..config.n_trees {
        for i in 0..n {
            residuals[i] = y[i] - predictions[i];
        }
        let mut builder = TreeBuilder {
            rows: &rows,
            residuals: &residuals,
            config,
            binner: binner.as_ref(),
            nodes: Vec::new(),
            leaf_assignment: vec![0u32; n],
        };
        let all_rows: Vec<u32> = (0..n as u32).collect();
        builder.build(&all_rows, 0);
        let tree = Tree {
            nodes: builder.nodes,
        };
        for i in 0..n {
            if let Node::Leaf { value } = tree.nodes[builder.leaf_assignment[i] as usize] {
                predictions[i] += config.learning_rate * value;
            }
        }
        let mse = predictions
            .iter()
            .zip(&y)
            .map(|(p, t)| (p - t) * (p - t))
            .sum::<f64>()
            / n as f64;
        training_mse.push(mse);
        trees.push(tree);
    }

    Ok(RegressorModel {
        config: config.clone(),
        n_features,
        base_prediction,
        trees,
        training_mse,
    })
}

fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y).expect("features are finite") {
            std::cmp::Ordering::Equal => continue,
            other => return other,
        }
    }
    std::cmp::Ordering::Equal
}

/// Predicts targets for encoded feature rows.
pub fn predict_regressor(
    model: &RegressorModel,
    features: &[Vec<f64>],
) -> Result<Vec<f64>, RegressorError> {
    let mut out = Vec::with_capacity(features.len());
    for row in features {
        if row.len() != model.n_features {
            return Err(RegressorError::DimensionMismatch {
                expected: model.n_features,
                got: row.len(),
            });
        }
        out.push(predict_row(model, row));
    }
    Ok(out)
}

fn predict_row(model: &RegressorModel, row: &[f64]) -> f64 {
    let mut acc = model.base_prediction;
    for tree in &model.trees {
        acc += model.config.learning_rate * tree.predict_one(row);
    }
    acc
}

/// Per-feature quantized edges for the binned split search.
struct Binner {
    /// Sorted candidate threshold values per feature.
    edges: Vec<Vec<f64>>,
    /// Per row, per feature: index of the smallest edge >= value, i.e. the
    /// number of edges strictly below the value.
    bins: Vec<Vec<u16>>,
}

impl Binner {
    fn fit(rows: &[&[f64]], n_features: usize, max_bins: usize) -> Binner {
        let mut edges = Vec::with_capacity(n_features);
        for f in 0..n_features {
            let mut values: Vec<f64> = rows.iter().map(|r| r[f]).collect();
            values.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
            values.dedup();
            let selected = if values.len() <= max_bins {
                values
            } else {
                // Rank-spaced quantile picks over the distinct values,
                // always including the maximum.
                let m = values.len();
                let mut picks = Vec::with_capacity(max_bins);
                for i in 0..max_bins {
                    let idx = (i * (m - 1)) / (max_bins - 1);
                    picks.push(values[idx]);
                }
                picks.dedup();
                picks
            };
            edges.push(selected);
        }
        let bins = rows
            .iter()
            .map(|r| {
                (0..n_features)
                    .map(|f| {
                        let v = r[f];
                        edges[f].partition_point(|e| *e < v) as u16
                    })
                    .collect()
            })
            .collect();
        Binner { edges, bins }
    }
}

struct SplitCandidate {
    feature: usize,
    threshold: f64,
    score: f64,
}

struct TreeBuilder<'a> {
    rows: &'a [&'a [f64]],
    residuals: &'a [f64],
    config: &'a RegressorConfig,
    binner: Option<&'a Binner>,
    nodes: Vec<Node>,
    leaf_assignment: Vec<u32>,
}

impl<'a> TreeBuilder<'a> {
    /// Builds the subtree over `row_idx` (kept in canonical order) and
    /// returns its node index.
    fn build(&mut self, row_idx: &[u32], depth: usize) -> u32 {
        let n = row_idx.len();
        let sum: f64 = row_idx.iter().map(|&i| self.residuals[i as usize]).sum();
        let mean = sum / n as f64;
        let can_split = depth < self.config.max_depth && n >= 2 * self.config.min_samples_leaf;
        let best = if can_split { self.best_split(row_idx) } else { None };
        match best {
            None => {
                let idx = self.nodes.len() as u32;
                self.nodes.push(Node::Leaf { value: mean });
                for &i in row_idx {
                    self.leaf_assignment[i as usize] = idx;
                }
                idx
            }
            Some(split) => {
                let (left_rows, right_rows): (Vec<u32>, Vec<u32>) = row_idx
                    .iter()
                    .partition(|&&i| self.rows[i as usize][split.feature] <= split.threshold);
                let idx = self.nodes.len() as u32;
                self.nodes.push(Node::Split {
                    feature: split.feature,
                    threshold: split.threshold,
                    left: 0,
                    right: 0,
                });
                let left = self.build(&left_rows, depth + 1);
                let right = self.build(&right_rows, depth + 1);
                if let Node::Split {
                    left: l, right: r, ..
                } = &mut self.nodes[idx as usize]
                {
                    *l = left;
                    *r = right;
                }
                idx
            }
        }
    }

    /// Greedy best split by maximizing `sum_L^2/n_L + sum_R^2/n_R`; the
    /// candidate must beat the unsplit score by a small relative margin,
    /// and earlier (feature, threshold) candidates win ties.
    fn best_split(&self, row_idx: &[u32]) -> Option<SplitCandidate> {
        let n = row_idx.len();
        let total: f64 = row_idx.iter().map(|&i| self.residuals[i as usize]).sum();
        let parent_score = total * total / n as f64;
        let min_gain = 1e-12 * parent_score.abs().max(1.0);
        let mut best: Option<SplitCandidate> = None;
        let n_features = self.rows[0].len();
        for feature in 0..n_features {
            let candidate = match self.binner {
                None => self.scan_exact(row_idx, feature, total),
                Some(b) => self.scan_binned(row_idx, feature, total, b),
            };
            if let Some(c) = candidate {
                if c.score > parent_score + min_gain
                    && best.as_ref().map_or(true, |b| c.score > b.score)
                {
                    best = Some(c);
                }
            }
        }
        best
    }

    /// Exact route: stable-sort the node rows by feature value and scan
    /// runs of equal values; the threshold is the run's value.
    fn scan_exact(&self, row_idx: &[u32], feature: usize, total: f64) -> Option<SplitCandidate> {
        let n = row_idx.len();
        let msl = self.config.min_samples_leaf;
        let mut sorted: Vec<u32> = row_idx.to_vec();
        sorted.sort_by(|&a, &b| {
            self.rows[a as usize][feature]
                .partial_cmp(&self.rows[b as usize][feature])
                .expect("finite")
        });
        let mut best: Option<SplitCandidate> = None;
        let mut left_sum = 0.0;
        let mut left_n = 0usize;
        let mut i = 0usize;
        while i < n {
            let value = self.rows[sorted[i] as usize][feature];
            let mut run_sum = 0.0;
            let mut run_n = 0usize;
            while i < n && self.rows[sorted[i] as usize][feature] == value {
                run_sum += self.residuals[sorted[i] as usize];
                run_n += 1;
                i += 1;
            }
            left_sum += run_sum;
            left_n += run_n;
            if i == n {
                break; // splitting at the max keeps everything left
            }
            if left_n < msl || n - left_n < msl {
                continue;
            }
            let right_sum = total - left_sum;
            let right_n = n - left_n;
            let score =
                left_sum * left_sum / left_n as f64 + right_sum * right_sum / right_n as f64;
            if best.as_ref().map_or(true, |b| score > b.score) {
                best = Some(SplitCandidate {
                    feature,
                    threshold: value,
                    score,
                });
            }
        }
        best
    }

    /// Binned route: accumulate per-bin statistics in canonical row order
    /// and scan the bins; the threshold is the bin's edge value.
    fn scan_binned(
        &self,
        row_idx: &[u32],
        feature: usize,
        total: f64,
        binner: &Binner,
    ) -> Option<SplitCandidate> {
        let n = row_idx.len();
        let msl = self.config.min_samples_leaf;
        let edges = &binner.edges[feature];
        let n_bins = edges.len();
        let mut sums = vec![0.0f64; n_bins];
        let mut counts = vec![0usize; n_bins];
        for &i in row_idx {
            let b = binner.bins[i as usize][feature] as usize;
            sums[b] += self.residuals[i as usize];
            counts[b] += 1;
        }
        let mut best: Option<SplitCandidate> = None;
        let mut left_sum = 0.0;
        let mut left_n = 0usize;
        for b in 0..n_bins.saturating_sub(1) {
            left_sum += sums[b];
            left_n += counts[b];
            if left_n == 0 || left_n == n {
                continue;
            }
            if left_n < msl || n - left_n < msl {
                continue;
            }
            let right_sum = total - left_sum;
            let right_n = n - left_n;
            let score =
                left_sum * left_sum / left_n as f64 + right_sum * right_sum / right_n as f64;
            if best.as_ref().map_or(true, |b2| score > b2.score) {
                best = Some(SplitCandidate {
                    feature,
                    threshold: edges[b],
                    score,
                });
            }
        }
        best
    }
}

/// `M` boosted-tree models fitted on independent bootstrap resamples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapEnsemble {
    pub members: Vec<RegressorModel>,
    pub seed: u64,
}

/// Ensemble mean and predictive variance for one row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsemblePrediction {
    pub mean: f64,
    pub variance: f64,
}

impl BootstrapEnsemble {
    /// Wraps pre-fitted members into an ensemble; used by tests and by
    /// callers that bring their own models.
    pub fn from_members(members: Vec<RegressorModel>) -> Result<Self, RegressorError> {
        if members.len() < 2 {
            return Err(RegressorError::EnsembleArity(members.len()));
        }
        Ok(BootstrapEnsemble { members, seed: 0 })
    }

    pub fn size(&self) -> usize {
        self.members.len()
    }
}

/// Fits `m` members, each on a with-replacement resample of the rows with
/// the same cardinality, seeded per member.
pub fn fit_bootstrap_ensemble(
    config: &RegressorConfig,
    features: &[Vec<f64>],
    targets: &[f64],
    m: usize,
    seed: u64,
) -> Result<BootstrapEnsemble, RegressorError> {
    if m < 2 {
        return Err(RegressorError::EnsembleArity(m));
    }
    if features.is_empty() {
        return Err(RegressorError::EmptyRows);
    }
    let n = features.len();
    let members: Vec<Result<RegressorModel, RegressorError>> = (0..m)
        .into_par_iter()
        .map(|member| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, member as u64));
            let mut x = Vec::with_capacity(n);
            let mut y = Vec::with_capacity(n);
            for _ in 0..n {
                let pick = rng.gen_range(0..n);
                x.push(features[pick].clone());
                y.push(targets[pick]);
            }
            fit_regressor(config, &x, &y)
        })
        .collect();
    let members = members.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(BootstrapEnsemble { members, seed })
}

/// Per-row ensemble mean and variance (`M - 1` divisor).
pub fn ensemble_stats(
    ensemble: &BootstrapEnsemble,
    features: &[Vec<f64>],
) -> Result<Vec<EnsemblePrediction>, RegressorError> {
    let m = ensemble.members.len() as f64;
    let per_member: Vec<Vec<f64>> = ensemble
        .members
        .iter()
        .map(|model| predict_regressor(model, features))
        .collect::<Result<Vec<_>, _>>()?;
    let mut out = Vec::with_capacity(features.len());
    for i in 0..features.len() {
        let mean = per_member.iter().map(|p| p[i]).sum::<f64>() / m;
        let variance = per_member
            .iter()
            .map(|p| (p[i] - mean) * (p[i] - mean))
            .sum::<f64>()
            / (m - 1.0);
        out.push(EnsemblePrediction { mean, variance });
    }
    Ok(out)
}

/// Interpolation model seam for the benchmark harness: anything that can
/// fit `(features, target)` rows and predict can stand in for the default
/// boosted trees.
pub trait RegressorDriver: Send + Sync {
    fn name(&self) -> &'static str;
    fn fit(
        &self,
        features: &[Vec<f64>],
        targets: &[f64],
    ) -> Result<Box<dyn FittedModel>, RegressorError>;
}

pub trait FittedModel: Send + Sync {
    fn predict(&self, features: &[Vec<f64>]) -> Result<Vec<f64>, RegressorError>;
}

/// The default driver backed by [`fit_regressor`].
#[derive(Debug, Clone)]
pub struct GbdtDriver {
    pub config: RegressorConfig,
}

impl RegressorDriver for GbdtDriver {
    fn name(&self) -> &'static str {
        "gbdt"
    }

    fn fit(
        &self,
        features: &[Vec<f64>],
        targets: &[f64],
    ) -> Result<Box<dyn FittedModel>, RegressorError> {
        Ok(Box::new(fit_regressor(&self.config, features, targets)?))
    }
}

impl FittedModel for RegressorModel {
    fn predict(&self, features: &[Vec<f64>]) -> Result<Vec<f64>, RegressorError> {
        predict_regressor(self, features)
    }
}

/// Baseline driver proving the harness seam: predicts the mean target of
/// the `k` nearest training rows in encoded feature space.
#[derive(Debug, Clone)]
pub struct KnnMeanDriver {
    pub k: usize,
}

struct KnnMeanModel {
    k: usize,
    features: Vec<Vec<f64>>,
    targets: Vec<f64>,
}

impl RegressorDriver for KnnMeanDriver {
    fn name(&self) -> &'static str {
        "knn_mean"
    }

    fn fit(
        &self,
        features: &[Vec<f64>],
        targets: &[f64],
    ) -> Result<Box<dyn FittedModel>, RegressorError> {
        if features.is_empty() {
            return Err(RegressorError::EmptyRows);
        }
        if self.k == 0 {
            return Err(RegressorError::BadConfig("k must be positive".into()));
        }
        Ok(Box::new(KnnMeanModel {
            k: self.k,
            features: features.to_vec(),
            targets: targets.to_vec(),
        }))
    }
}

impl FittedModel for KnnMeanModel {
    fn predict(&self, features: &[Vec<f64>]) -> Result<Vec<f64>, RegressorError> {
        let dim = self.features[0].len();
        let mut out = Vec::with_capacity(features.len());
        for row in features {
            if row.len() != dim {
                return Err(RegressorError::DimensionMismatch {
                    expected: dim,
                    got: row.len(),
                });
            }
            let mut dists: Vec<(f64, usize)> = self
                .features
                .iter()
                .enumerate()
                .map(|(i, f)| {
                    let d = f
                        .iter()
                        .zip(row)
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>();
                    (d, i)
                })
                .collect();
            dists.sort_by(|a, b| a.partial_cmp(b).expect("finite distances"));
            let k = self.k.min(dists.len());
            let mean = dists[..k].iter().map(|&(_, i)| self.targets[i]).sum::<f64>() / k as f64;
            out.push(mean);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small_config() -> RegressorConfig {
        RegressorConfig {
            n_trees: 50,
            max_depth: 3,
            learning_rate: 0.1,
            min_samples_leaf: 1,
            seed: 0,
            split_mode: SplitMode::Exact,
        }
    }

    #[test]
    fn constant_target_predicts_constant() {
        let x = vec![vec![1.0], vec![2.0], vec![3.0]];
        let y = vec![4.0, 4.0, 4.0];
        let model = fit_regressor(&small_config(), &x, &y).unwrap();
        let preds = predict_regressor(&model, &[vec![0.0], vec![10.0]]).unwrap();
        assert_eq!(preds, vec![4.0, 4.0]);
    }

    #[test]
    fn binary_feature_drives_mse_to_zero() {
        let x: Vec<Vec<f64>> = (0..10)
            .map(|i| vec![if i < 5 { 0.0 } else { 1.0 }])
            .collect();
        let y: Vec<f64> = (0..10).map(|i| if i < 5 { 0.0 } else { 10.0 }).collect();
        let config = RegressorConfig {
            n_trees: 200,
            max_depth: 2,
            min_samples_leaf: 1,
            ..RegressorConfig::default()
        };
        let model = fit_regressor(&config, &x, &y).unwrap();
        let final_mse = *model.training_mse.last().unwrap();
        assert!(final_mse < 1e-6, "training MSE {final_mse}");
    }

    #[test]
    fn single_row_predicts_its_target() {
        let model = fit_regressor(&small_config(), &[vec![5.0, 1.0]], &[7.5]).unwrap();
        let preds = predict_regressor(&model, &[vec![0.0, 0.0]]).unwrap();
        assert_eq!(preds, vec![7.5]);
    }

    #[test]
    fn empty_input_and_bad_targets_rejected() {
        assert_eq!(
            fit_regressor(&small_config(), &[], &[]),
            Err(RegressorError::EmptyRows)
        );
        let err = fit_regressor(&small_config(), &[vec![1.0]], &[f64::NAN]).unwrap_err();
        assert_eq!(err, RegressorError::NonFiniteTarget(0));
    }

    #[test]
    fn empty_prediction_input_gives_empty_output() {
        let model = fit_regressor(&small_config(), &[vec![1.0]], &[1.0]).unwrap();
        assert!(predict_regressor(&model, &[]).unwrap().is_empty());
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let model = fit_regressor(&small_config(), &[vec![1.0, 2.0]], &[1.0]).unwrap();
        let err = predict_regressor(&model, &[vec![1.0]]).unwrap_err();
        assert_eq!(
            err,
            RegressorError::DimensionMismatch {
                expected: 2,
                got: 1
            }
        );
    }

    #[test]
    fn training_mse_non_increasing() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x: Vec<Vec<f64>> = (0..200)
            .map(|_| vec![rng.gen::<f64>() * 10.0, rng.gen::<f64>() * 5.0])
            .collect();
        let y: Vec<f64> = x
            .iter()
            .map(|r| r[0] * 2.0 + (r[1] * 3.0).sin() * 4.0 + rng.gen::<f64>())
            .collect();
        let model = fit_regressor(&RegressorConfig::default(), &x, &y).unwrap();
        for w in model.training_mse.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "MSE increased: {} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn row_order_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x: Vec<Vec<f64>> = (0..60)
            .map(|_| vec![rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>()])
            .collect();
        let y: Vec<f64> = x.iter().map(|r| r[0] + 2.0 * r[1] - r[2]).collect();
        let model_a = fit_regressor(&small_config(), &x, &y).unwrap();

        let mut shuffled: Vec<usize> = (0..60).collect();
        shuffled.reverse();
        shuffled.swap(3, 40);
        let xs: Vec<Vec<f64>> = shuffled.iter().map(|&i| x[i].clone()).collect();
        let ys: Vec<f64> = shuffled.iter().map(|&i| y[i]).collect();
        let model_b = fit_regressor(&small_config(), &xs, &ys).unwrap();

        let probe: Vec<Vec<f64>> = (0..20)
            .map(|i| vec![i as f64 / 20.0, 0.3, 0.7])
            .collect();
        assert_eq!(
            predict_regressor(&model_a, &probe).unwrap(),
            predict_regressor(&model_b, &probe).unwrap()
        );
    }

    #[test]
    fn binned_matches_exact_without_collisions() {
        // 40 distinct values per feature, far below the bin budget.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x: Vec<Vec<f64>> = (0..40)
            .map(|i| vec![i as f64, ((i * 7) % 40) as f64])
            .collect();
        let y: Vec<f64> = x.iter().map(|r| r[0] * 0.5 + r[1] + rng.gen::<f64>()).collect();
        let exact = fit_regressor(&small_config(), &x, &y).unwrap();
        let binned_cfg = RegressorConfig {
            split_mode: SplitMode::binned(),
            ..small_config()
        };
        let binned = fit_regressor(&binned_cfg, &x, &y).unwrap();
        let probe: Vec<Vec<f64>> = (0..80).map(|i| vec![i as f64 / 2.0, i as f64]).collect();
        let pe = predict_regressor(&exact, &probe).unwrap();
        let pb = predict_regressor(&binned, &probe).unwrap();
        assert_eq!(pe, pb, "binned and exact predictions diverge");
    }

    #[test]
    fn ensemble_constant_targets_zero_variance() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let y = vec![3.0; 10];
        let ens = fit_bootstrap_ensemble(&small_config(), &x, &y, 4, 9).unwrap();
        let stats = ensemble_stats(&ens, &[vec![2.0], vec![8.0]]).unwrap();
        for s in stats {
            assert_relative_eq!(s.mean, 3.0);
            assert_eq!(s.variance, 0.0);
        }
    }

    #[test]
    fn ensemble_stats_hand_fixture() {
        // Members forced to predict constants 0, 0, and 3 by fitting each
        // on a single constant-target row.
        let members: Vec<RegressorModel> = [0.0, 0.0, 3.0]
            .iter()
            .map(|&c| fit_regressor(&small_config(), &[vec![0.0]], &[c]).unwrap())
            .collect();
        let ens = BootstrapEnsemble::from_members(members).unwrap();
        let stats = ensemble_stats(&ens, &[vec![1.0]]).unwrap();
        assert_relative_eq!(stats[0].mean, 1.0);
        assert_relative_eq!(stats[0].variance, 3.0);

        let two = BootstrapEnsemble::from_members(
            [1.0, 3.0]
                .iter()
                .map(|&c| fit_regressor(&small_config(), &[vec![0.0]], &[c]).unwrap())
                .collect(),
        )
        .unwrap();
        let stats = ensemble_stats(&two, &[vec![0.5]]).unwrap();
        assert_relative_eq!(stats[0].mean, 2.0);
        assert_relative_eq!(stats[0].variance, 2.0);
    }

    #[test]
    fn ensemble_arity_enforced() {
        let x = vec![vec![1.0]];
        let y = vec![1.0];
        assert_eq!(
            fit_bootstrap_ensemble(&small_config(), &x, &y, 1, 0).unwrap_err(),
            RegressorError::EnsembleArity(1)
        );
    }

    #[test]
    fn ensemble_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x: Vec<Vec<f64>> = (0..30).map(|_| vec![rng.gen::<f64>()]).collect();
        let y: Vec<f64> = x.iter().map(|r| r[0] * 2.0).collect();
        let a = fit_bootstrap_ensemble(&small_config(), &x, &y, 3, 77).unwrap();
        let b = fit_bootstrap_ensemble(&small_config(), &x, &y, 3, 77).unwrap();
        let probe: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64 / 5.0]).collect();
        assert_eq!(
            ensemble_stats(&a, &probe).unwrap(),
            ensemble_stats(&b, &probe).unwrap()
        );
    }

    #[test]
    fn model_json_round_trip() {
        let x = vec![vec![1.0], vec![2.0], vec![5.0]];
        let y = vec![1.0, 2.0, 5.0];
        let model = fit_regressor(&small_config(), &x, &y).unwrap();
        let json = model.to_json();
        let restored = RegressorModel::from_json(&json).unwrap();
        assert_eq!(model, restored);
    }

    #[test]
    fn knn_mean_driver_fits_and_predicts() {
        let driver = KnnMeanDriver { k: 2 };
        let x = vec![vec![0.0], vec![1.0], vec![10.0]];
        let y = vec![0.0, 2.0, 100.0];
        let model = driver.fit(&x, &y).unwrap();
        let preds = model.predict(&[vec![0.4]]).unwrap();
        assert_relative_eq!(preds[0], 1.0); // mean of targets at x=0 and x=1
    }
}
