//! Ranking-based placement: take the top-scoring segments directly.

use crate::graph::{CentralityKind, CentralityScores};

use super::{
    check_budget, Placement, PlacementContext, PlacementError, PlacementStrategy,
    StrategyDescriptor, StrategyFamily,
};

/// Selects `initial` followed by the highest-scoring remaining candidates;
/// score ties break to the lowest segment id.
pub fn rank_place(
    scores: &CentralityScores,
    candidates: &[u64],
    budget: usize,
    initial: &[u64],
    descriptor: StrategyDescriptor,
    seed: u64,
) -> Result<Placement, PlacementError> {
    let remaining = check_budget(candidates, budget, initial)?;
    for &id in &remaining {
        if !scores.score.contains_key(&id) {
            return Err(PlacementError::MissingSegmentData(id, "centrality scores"));
        }
    }
    let mut ranked: Vec<u64> = remaining;
    // Descending score; the sort is stable and the input is ascending by
    // id, so ties resolve to the lowest id.
    ranked.sort_by(|a, b| {
        scores.score[b]
            .partial_cmp(&scores.score[a])
            .expect("scores are finite")
    });

    let mut selected: Vec<u64> = initial.to_vec();
    let mut step_objectives: Vec<Option<f64>> = vec![None; initial.len()];
    for &id in ranked.iter().take(budget - initial.len()) {
        selected.push(id);
        step_objectives.push(Some(scores.score[&id]));
    }
    Ok(Placement {
        strategy: descriptor,
        budget,
        seed,
        initial: initial.to_vec(),
        selected,
        step_objectives,
        final_objective: None,
    })
}

pub(super) struct RankStrategy {
    descriptor: StrategyDescriptor,
    kind: CentralityKind,
}

impl RankStrategy {
    pub(super) fn new(descriptor: StrategyDescriptor) -> Self {
        let kind = match descriptor.family {
            StrategyFamily::Betweenness => CentralityKind::Betweenness,
            StrategyFamily::Closeness => CentralityKind::Closeness,
            other => unreachable!("{other} is not a ranking family"),
        };
        RankStrategy { descriptor, kind }
    }
}

impl PlacementStrategy for RankStrategy {
    fn descriptor(&self) -> &StrategyDescriptor {
        &self.descriptor
    }

    fn place(
        &self,
        ctx: &PlacementContext<'_>,
        budget: usize,
        initial: &[u64],
        seed: u64,
    ) -> Result<Placement, PlacementError> {
        let scores = ctx
            .centrality
            .get(&self.kind)
            .ok_or(PlacementError::MissingContext("centrality scores"))?;
        rank_place(
            scores,
            &ctx.candidates,
            budget,
            initial,
            self.descriptor.clone(),
            seed,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::placement::StrategyFamily;

    fn scores(pairs: &[(u64, f64)]) -> CentralityScores {
        CentralityScores {
            kind: CentralityKind::Betweenness,
            score: pairs.iter().copied().collect(),
        }
    }

    fn descriptor() -> StrategyDescriptor {
        StrategyDescriptor::new(StrategyFamily::Betweenness, None)
    }

    #[test]
    fn top_k_selection() {
        let s = scores(&[(1, 3.0), (2, 2.0), (3, 1.0)]);
        let p = rank_place(&s, &[1, 2, 3], 2, &[], descriptor(), 0).unwrap();
        assert_eq!(p.selected, vec![1, 2]);
        assert_eq!(p.step_objectives, vec![Some(3.0), Some(2.0)]);
    }

    #[test]
    fn ties_break_to_lowest_id() {
        let s = scores(&[(7, 2.0), (3, 2.0)]);
        let p = rank_place(&s, &[3, 7], 1, &[], descriptor(), 0).unwrap();
        assert_eq!(p.selected, vec![3]);
    }

    #[test]
    fn initial_prefix_then_top_remaining() {
        let s = scores(&[(1, 3.0), (2, 2.0), (3, 1.0)]);
        let p = rank_place(&s, &[1, 2, 3], 2, &[3], descriptor(), 0).unwrap();
        assert_eq!(p.selected, vec![3, 1]);
        assert_eq!(p.step_objectives, vec![None, Some(3.0)]);
        p.validate(&[1, 2, 3]).unwrap();
    }

    #[test]
    fn positive_affine_transform_leaves_selection_unchanged() {
        let s = scores(&[(1, 0.5), (2, 4.0), (3, 2.5), (4, 1.0)]);
        let transformed = scores(&[(1, 5.0 + 2.0 * 0.5), (2, 13.0), (3, 10.0), (4, 7.0)]);
        let a = rank_place(&s, &[1, 2, 3, 4], 2, &[], descriptor(), 0).unwrap();
        let b = rank_place(&transformed, &[1, 2, 3, 4], 2, &[], descriptor(), 0).unwrap();
        assert_eq!(a.selected, b.selected);
    }
}
