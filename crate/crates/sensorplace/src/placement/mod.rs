//! Placement strategies behind a common trait, selected by name.
//!
//! A strategy consumes a [`PlacementContext`] (candidate pool plus whatever
//! precomputed inputs it needs: centrality scores, encoded feature vectors,
//! midpoints, a study area, or an active-learning data source) and produces
//! a [`Placement`]: the ordered list of selected segments under a budget.
//!
//! Four mechanisms exist. Ranking strategies pick the top-scoring segments
//! directly; greedy strategies grow the selection one segment at a time by
//! optimizing an objective on the would-be selection; the random baseline
//! draws uniform subsets; active learning adds the candidate with the
//! highest bootstrap-ensemble predictive variance. All of them accept a
//! fixed initial selection (an existing deployment) as a prefix, tie-break
//! to the lowest segment id, and are deterministic given a seed.

mod active;
mod greedy;
mod random;
mod ranking;

pub use active::{active_learning_place, ActiveLearningConfig, ActiveLearningData};
pub use greedy::{greedy_place, score_selected, GreedyObjective};
pub use random::random_placements;
pub use ranking::rank_place;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::features::{FeatureError, FeatureSubsetSpec};
use crate::geometry::Point;
use crate::graph::CentralityScores;
use crate::regressor::{RegressorConfig, RegressorError};
use crate::spatial::{SpatialError, StudyArea};

/// The strategy families of the catalog.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyFamily {
    Betweenness,
    Closeness,
    FeatureDiversity,
    FeatureRedundancy,
    FeatureCoverage,
    Dispersion,
    VoronoiGini,
    ActiveLearning,
    Random,
}

impl StrategyFamily {
    pub const ALL: [StrategyFamily; 9] = [
        StrategyFamily::Betweenness,
        StrategyFamily::Closeness,
        StrategyFamily::FeatureDiversity,
        StrategyFamily::FeatureRedundancy,
        StrategyFamily::FeatureCoverage,
        StrategyFamily::Dispersion,
        StrategyFamily::VoronoiGini,
        StrategyFamily::ActiveLearning,
        StrategyFamily::Random,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            StrategyFamily::Betweenness => "betweenness",
            StrategyFamily::Closeness => "closeness",
            StrategyFamily::FeatureDiversity => "feature_diversity",
            StrategyFamily::FeatureRedundancy => "feature_redundancy",
            StrategyFamily::FeatureCoverage => "feature_coverage",
            StrategyFamily::Dispersion => "dispersion",
            StrategyFamily::VoronoiGini => "voronoi_gini",
            StrategyFamily::ActiveLearning => "active_learning",
            StrategyFamily::Random => "random",
        }
    }

    pub fn parse(name: &str) -> Option<StrategyFamily> {
        Self::ALL.into_iter().find(|f| f.name() == name)
    }

    /// Whether the family's objective is maximized or minimized; redundancy
    /// and Voronoi-area inequality are minimized, everything else maximized.
    pub fn direction(&self) -> Direction {
        match self {
            StrategyFamily::FeatureRedundancy | StrategyFamily::VoronoiGini => Direction::Minimize,
            _ => Direction::Maximize,
        }
    }

    pub fn uses_features(&self) -> bool {
        matches!(
            self,
            StrategyFamily::FeatureDiversity
                | StrategyFamily::FeatureRedundancy
                | StrategyFamily::FeatureCoverage
        )
    }
}

impl fmt::Display for StrategyFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Maximize,
    Minimize,
}

/// Identifies a configured strategy: the family plus, for feature-based
/// families, the time-invariant column subset it scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyDescriptor {
    pub family: StrategyFamily,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub feature_subset: Option<FeatureSubsetSpec>,
    pub direction: Direction,
}

impl StrategyDescriptor {
    pub fn new(family: StrategyFamily, feature_subset: Option<FeatureSubsetSpec>) -> Self {
        StrategyDescriptor {
            direction: family.direction(),
            family,
            feature_subset: if family.uses_features() {
                feature_subset.or(Some(FeatureSubsetSpec::AllStatic))
            } else {
                None
            },
        }
    }

    /// Stable label used in reports, e.g. `feature_diversity(all_static)`.
    pub fn label(&self) -> String {
        match &self.feature_subset {
            Some(subset) => format!("{}({})", self.family.name(), subset.name()),
            None => self.family.name().to_string(),
        }
    }
}

/// An ordered sensor selection with its provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub strategy: StrategyDescriptor,
    pub budget: usize,
    pub seed: u64,
    pub initial: Vec<u64>,
    /// Selection order; `initial` is always a prefix.
    pub selected: Vec<u64>,
    /// Objective value recorded when each entry was added; `None` for
    /// initial entries and seeded first picks.
    pub step_objectives: Vec<Option<f64>>,
    /// Objective of the complete selection re-scored at full fidelity
    /// (used by the Voronoi strategy, whose greedy steps run on a coarser
    /// raster).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub final_objective: Option<f64>,
}

impl Placement {
    /// Checks the type invariants: exact budget, no duplicates, initial
    /// prefix, and membership in the candidate pool.
    pub fn validate(&self, candidates: &[u64]) -> Result<(), PlacementError> {
        if self.selected.len() != self.budget {
            return Err(PlacementError::BudgetMismatch {
                budget: self.budget,
                selected: self.selected.len(),
            });
        }
        let mut seen = BTreeMap::new();
        for &id in &self.selected {
            if seen.insert(id, ()).is_some() {
                return Err(PlacementError::DuplicateSelection(id));
            }
            if candidates.binary_search(&id).is_err() {
                return Err(PlacementError::NotACandidate(id));
            }
        }
        if self.selected.len() < self.initial.len()
            || self.selected[..self.initial.len()] != self.initial[..]
        {
            return Err(PlacementError::InitialNotPrefix);
        }
        if self.step_objectives.len() != self.selected.len() {
            return Err(PlacementError::StepRecordMismatch);
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("placement serializes");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> Result<Self, PlacementError> {
        serde_json::from_str(text).map_err(|e| PlacementError::BadPlacementFile(e.to_string()))
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum PlacementError {
    #[error("budget {budget} is smaller than the initial selection ({initial})")]
    BudgetBelowInitial { budget: usize, initial: usize },
    #[error("budget {needed} exceeds the candidate pool ({available})")]
    TooFewCandidates { needed: usize, available: usize },
    #[error("initial selection repeats segment {0}")]
    DuplicateInitial(u64),
    #[error("initial segment {0} is not a training candidate")]
    InitialOutsidePool(u64),
    #[error("placement selected {selected} segments for budget {budget}")]
    BudgetMismatch { budget: usize, selected: usize },
    #[error("segment {0} selected twice")]
    DuplicateSelection(u64),
    #[error("selected segment {0} is not a training candidate")]
    NotACandidate(u64),
    #[error("initial selection is not a prefix of the selected order")]
    InitialNotPrefix,
    #[error("per-step objective record length differs from the selection")]
    StepRecordMismatch,
    #[error("strategy needs {0} in the placement context")]
    MissingContext(&'static str),
    #[error("segment {0} has no entry in the context component '{1}'")]
    MissingSegmentData(u64, &'static str),
    #[error("segment {0} has an all-zero feature vector; cosine redundancy is undefined")]
    ZeroVectorSegment(u64),
    #[error("candidate midpoint of segment {0} lies outside the study area")]
    CandidateOutsideStudyArea(u64),
    #[error("active learning produced no feature rows for candidate segment {0}")]
    EmptyCandidateRows(u64),
    #[error("unknown strategy '{0}'")]
    UnknownStrategy(String),
    #[error("random baseline needs at least one repetition")]
    NoRepetitions,
    #[error("could not parse placement file: {0}")]
    BadPlacementFile(String),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Spatial(#[from] SpatialError),
    #[error(transparent)]
    Regressor(#[from] RegressorError),
}

/// Everything a strategy may draw on, prepared once per experiment.
///
/// Only the components a strategy actually uses need to be present; a
/// strategy whose component is missing fails with a configuration error
/// naming it.
pub struct PlacementContext<'a> {
    /// Sorted training segment ids; the only segments eligible for
    /// selection.
    pub candidates: Vec<u64>,
    pub centrality: BTreeMap<crate::graph::CentralityKind, CentralityScores>,
    /// Encoded static vectors (per configured feature subset) by segment.
    pub static_vectors: Option<BTreeMap<u64, Vec<f64>>>,
    pub midpoints: Option<BTreeMap<u64, Point>>,
    pub study_area: Option<StudyArea>,
    /// Raster resolution for greedy-time Voronoi scoring.
    pub greedy_voronoi_resolution: Option<f64>,
    /// Raster resolution for the final full-fidelity re-score.
    pub final_voronoi_resolution: Option<f64>,
    pub active: Option<ActiveLearningConfig<'a>>,
}

impl<'a> PlacementContext<'a> {
    pub fn new(mut candidates: Vec<u64>) -> Self {
        candidates.sort_unstable();
        candidates.dedup();
        PlacementContext {
            candidates,
            centrality: BTreeMap::new(),
            static_vectors: None,
            midpoints: None,
            study_area: None,
            greedy_voronoi_resolution: None,
            final_voronoi_resolution: None,
            active: None,
        }
    }

    pub(crate) fn midpoint_of(&self, id: u64) -> Result<Point, PlacementError> {
        self.midpoints
            .as_ref()
            .ok_or(PlacementError::MissingContext("segment midpoints"))?
            .get(&id)
            .copied()
            .ok_or(PlacementError::MissingSegmentData(id, "midpoints"))
    }

    pub(crate) fn vector_of(&self, id: u64) -> Result<&[f64], PlacementError> {
        self.static_vectors
            .as_ref()
            .ok_or(PlacementError::MissingContext("encoded feature vectors"))?
            .get(&id)
            .map(Vec::as_slice)
            .ok_or(PlacementError::MissingSegmentData(id, "static_vectors"))
    }
}

/// Validates budget/initial against the candidate pool and returns the
/// sorted remaining pool (candidates minus initial).
pub(crate) fn check_budget(
    ctx_candidates: &[u64],
    budget: usize,
    initial: &[u64],
) -> Result<Vec<u64>, PlacementError> {
    if budget < initial.len() {
        return Err(PlacementError::BudgetBelowInitial {
            budget,
            initial: initial.len(),
        });
    }
    if ctx_candidates.len() < budget {
        return Err(PlacementError::TooFewCandidates {
            needed: budget,
            available: ctx_candidates.len(),
        });
    }
    let mut seen = BTreeMap::new();
    for &id in initial {
        if seen.insert(id, ()).is_some() {
            return Err(PlacementError::DuplicateInitial(id));
        }
        if ctx_candidates.binary_search(&id).is_err() {
            return Err(PlacementError::InitialOutsidePool(id));
        }
    }
    Ok(ctx_candidates
        .iter()
        .copied()
        .filter(|id| !seen.contains_key(id))
        .collect())
}

/// A placement strategy selectable by name at runtime.
pub trait PlacementStrategy: Send + Sync {
    fn descriptor(&self) -> &StrategyDescriptor;

    fn place(
        &self,
        ctx: &PlacementContext<'_>,
        budget: usize,
        initial: &[u64],
        seed: u64,
    ) -> Result<Placement, PlacementError>;
}

/// Instantiates the strategy registered under `family`.
pub fn build_strategy(
    family: StrategyFamily,
    feature_subset: Option<FeatureSubsetSpec>,
) -> Box<dyn PlacementStrategy> {
    let descriptor = StrategyDescriptor::new(family, feature_subset);
    match family {
        StrategyFamily::Betweenness | StrategyFamily::Closeness => {
            Box::new(ranking::RankStrategy::new(descriptor))
        }
        StrategyFamily::FeatureDiversity
        | StrategyFamily::FeatureRedundancy
        | StrategyFamily::FeatureCoverage
        | StrategyFamily::Dispersion
        | StrategyFamily::VoronoiGini => Box::new(greedy::GreedyStrategy::new(descriptor)),
        StrategyFamily::ActiveLearning => Box::new(active::ActiveLearningStrategy::new(descriptor)),
        StrategyFamily::Random => Box::new(random::RandomStrategy::new(descriptor)),
    }
}

/// Looks a strategy up by its registered name, e.g. `dispersion` or
/// `feature_diversity`.
pub fn build_strategy_by_name(
    name: &str,
    feature_subset: Option<FeatureSubsetSpec>,
) -> Result<Box<dyn PlacementStrategy>, PlacementError> {
    let family =
        StrategyFamily::parse(name).ok_or_else(|| PlacementError::UnknownStrategy(name.into()))?;
    Ok(build_strategy(family, feature_subset))
}

/// All registered strategy names.
pub fn strategy_names() -> Vec<&'static str> {
    StrategyFamily::ALL.iter().map(|f| f.name()).collect()
}

/// The regressor ensemble settings driving active learning.
pub struct ActiveLearningConfig<'a> {
    pub regressor: RegressorConfig,
    /// Ensemble size `M`.
    pub members: usize,
    /// Time steps sampled per candidate when estimating variance; `None`
    /// averages over every time step.
    pub time_subsample: Option<usize>,
    pub data: &'a dyn ActiveLearningData,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_covers_all_families() {
        assert_eq!(strategy_names().len(), 9);
        for family in StrategyFamily::ALL {
            let strategy = build_strategy(family, None);
            assert_eq!(strategy.descriptor().family, family);
        }
        assert!(build_strategy_by_name("dispersion", None).is_ok());
        assert!(matches!(
            build_strategy_by_name("does_not_exist", None),
            Err(PlacementError::UnknownStrategy(_))
        ));
    }

    #[test]
    fn directions_follow_the_catalog() {
        assert_eq!(
            StrategyFamily::FeatureRedundancy.direction(),
            Direction::Minimize
        );
        assert_eq!(StrategyFamily::VoronoiGini.direction(), Direction::Minimize);
        assert_eq!(StrategyFamily::Dispersion.direction(), Direction::Maximize);
        assert_eq!(StrategyFamily::Betweenness.direction(), Direction::Maximize);
    }

    #[test]
    fn feature_families_default_to_all_static() {
        let d = StrategyDescriptor::new(StrategyFamily::FeatureDiversity, None);
        assert_eq!(d.feature_subset, Some(FeatureSubsetSpec::AllStatic));
        assert_eq!(d.label(), "feature_diversity(all_static)");
        let d2 = StrategyDescriptor::new(StrategyFamily::Dispersion, None);
        assert_eq!(d2.feature_subset, None);
        assert_eq!(d2.label(), "dispersion");
    }

    #[test]
    fn budget_checks() {
        let pool = vec![1u64, 2, 3, 4, 5];
        assert!(matches!(
            check_budget(&pool, 2, &[1, 2, 3]),
            Err(PlacementError::BudgetBelowInitial { .. })
        ));
        assert!(matches!(
            check_budget(&pool, 6, &[]),
            Err(PlacementError::TooFewCandidates { .. })
        ));
        assert!(matches!(
            check_budget(&pool, 3, &[9]),
            Err(PlacementError::InitialOutsidePool(9))
        ));
        let remaining = check_budget(&pool, 3, &[2, 4]).unwrap();
        assert_eq!(remaining, vec![1, 3, 5]);
    }
}
