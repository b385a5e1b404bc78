//! Clark-Evans dispersion statistics, rasterized Voronoi areas, and the
//! Gini coefficient of cell areas.
//!
//! Voronoi cells are computed on a raster: every grid-cell center inside
//! the study-area polygon is assigned to its nearest site (ties break to
//! the lowest site id) and a site's area is its cell count times the cell
//! area. The raster is deterministic, clips to arbitrary simple polygons
//! for free, and converges to the exact tessellation as the resolution
//! shrinks. No edge correction is applied to nearest-neighbor distances.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::geometry::{BoundingBox, Point, Polygon};

/// The evaluation region; all areas are in square meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyArea {
    boundary: Polygon,
    area: f64,
    /// True when the boundary was synthesized from a midpoint bounding box
    /// rather than supplied by the dataset.
    pub synthesized: bool,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SpatialError {
    #[error("nearest-neighbor statistics need at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("voronoi needs at least one site")]
    NoSites,
    #[error("site {0} lies outside the study area")]
    SiteOutsideBoundary(u64),
    #[error("raster resolution must be positive, got {0}")]
    BadResolution(f64),
    #[error("gini needs at least one area")]
    EmptyAreas,
    #[error("gini is undefined when all areas are zero")]
    AllZeroAreas,
    #[error("gini areas must be non-negative, got {0}")]
    NegativeArea(f64),
    #[error(transparent)]
    Polygon(#[from] crate::geometry::PolygonError),
}

impl StudyArea {
    pub fn new(boundary: Polygon) -> Self {
        let area = boundary.area();
        StudyArea {
            boundary,
            area,
            synthesized: false,
        }
    }

    /// Fallback when a dataset carries no boundary polygon: the bounding
    /// box of all midpoints expanded by 1% per side.
    pub fn from_midpoints(points: &[Point]) -> Result<Self, SpatialError> {
        let bb = BoundingBox::of_points(points)
            .ok_or(SpatialError::TooFewPoints(0))?
            .expanded(0.01);
        let mut area = StudyArea::new(Polygon::rectangle(bb));
        area.synthesized = true;
        Ok(area)
    }

    pub fn boundary(&self) -> &Polygon {
        &self.boundary
    }

    pub fn area(&self) -> f64 {
        self.area
    }

    pub fn contains(&self, p: &Point) -> bool {
        self.boundary.contains(p)
    }

    /// Grid resolution giving roughly a 500x500 raster over the area.
    pub fn default_resolution(&self) -> f64 {
        self.area.sqrt() / 500.0
    }
}

/// Clark-Evans aggregation statistics for a point set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DispersionStats {
    /// Observed mean nearest-neighbor distance.
    pub r_obs: f64,
    /// Expected mean nearest-neighbor distance under complete spatial
    /// randomness: `1 / (2 sqrt(K / A))`.
    pub r_exp: f64,
    /// Aggregation index `r_obs / r_exp`; above 1 means over-dispersed.
    pub r: f64,
}

/// Computes Clark-Evans dispersion statistics.
///
/// Duplicate points are permitted and contribute a zero nearest-neighbor
/// distance.
pub fn clark_evans(points: &[Point], study_area: &StudyArea) -> Result<DispersionStats, SpatialError> {
    if points.len() < 2 {
        return Err(SpatialError::TooFewPoints(points.len()));
    }
    let r_obs = mean_nearest_neighbor_distance(points);
    let k = points.len() as f64;
    let r_exp = 1.0 / (2.0 * (k / study_area.area()).sqrt());
    Ok(DispersionStats {
        r_obs,
        r_exp,
        r: r_obs / r_exp,
    })
}

/// Mean over points of the distance to the nearest other point. This is
/// the quantity maximized by the spatial-dispersion placement strategy.
pub fn mean_nearest_neighbor_distance(points: &[Point]) -> f64 {
    let k = points.len();
    let mut total = 0.0;
    for i in 0..k {
        let mut best = f64::INFINITY;
        for j in 0..k {
            if i != j {
                best = best.min(points[i].distance_sq(&points[j]));
            }
        }
        total += best.sqrt();
    }
    total / k as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VoronoiMethod {
    Raster,
}

/// Per-site Voronoi cell areas over the study region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoronoiPartition {
    pub site_ids: Vec<u64>,
    pub areas: BTreeMap<u64, f64>,
    pub mean_area: f64,
    pub method: VoronoiMethod,
    pub resolution: f64,
}

/// Rasterized Voronoi areas for sites inside the study area.
///
/// Every grid-cell center inside the boundary is assigned to the nearest
/// site; ties go to the lowest site id. Cell areas sum exactly to
/// (in-polygon cells) x (cell area).
pub fn voronoi_areas(
    sites: &[(u64, Point)],
    study_area: &StudyArea,
    resolution: f64,
) -> Result<VoronoiPartition, SpatialError> {
    if sites.is_empty() {
        return Err(SpatialError::NoSites);
    }
    if !(resolution > 0.0) {
        return Err(SpatialError::BadResolution(resolution));
    }
    for (id, p) in sites {
        if !study_area.contains(p) {
            return Err(SpatialError::SiteOutsideBoundary(*id));
        }
    }
    let raster = RasterGrid::new(study_area, resolution);
    let mut counts: BTreeMap<u64, u64> = sites.iter().map(|(id, _)| (*id, 0)).collect();
    for center in raster.in_area_centers() {
        let id = nearest_site(sites, &center);
        *counts.get_mut(&id).expect("site id present") += 1;
    }
    let cell_area = resolution * resolution;
    let areas: BTreeMap<u64, f64> = counts
        .into_iter()
        .map(|(id, c)| (id, c as f64 * cell_area))
        .collect();
    let mean_area = areas.values().sum::<f64>() / areas.len() as f64;
    Ok(VoronoiPartition {
        site_ids: sites.iter().map(|(id, _)| *id).collect(),
        areas,
        mean_area,
        method: VoronoiMethod::Raster,
        resolution,
    })
}

/// Nearest site by squared distance; ties break to the lowest site id.
pub(crate) fn nearest_site(sites: &[(u64, Point)], p: &Point) -> u64 {
    let mut best_id = sites[0].0;
    let mut best_d = sites[0].1.distance_sq(p);
    for &(id, site) in &sites[1..] {
        let d = site.distance_sq(p);
        if d < best_d || (d == best_d && id < best_id) {
            best_d = d;
            best_id = id;
        }
    }
    best_id
}

/// A regular grid of cell centers over a study area's bounding box, with a
/// precomputed in-polygon mask.
pub(crate) struct RasterGrid {
    origin_x: f64,
    origin_y: f64,
    resolution: f64,
    cols: usize,
    rows: usize,
    inside: Vec<bool>,
}

impl RasterGrid {
    pub(crate) fn new(study_area: &StudyArea, resolution: f64) -> Self {
        let bb = study_area.boundary().bounding_box();
        let cols = (bb.width() / resolution).ceil().max(1.0) as usize;
        let rows = (bb.height() / resolution).ceil().max(1.0) as usize;
        let mut inside = vec![false; cols * rows];
        for r in 0..rows {
            for c in 0..cols {
                let p = Point::new(
                    bb.min_x + (c as f64 + 0.5) * resolution,
                    bb.min_y + (r as f64 + 0.5) * resolution,
                );
                inside[r * cols + c] = study_area.contains(&p);
            }
        }
        RasterGrid {
            origin_x: bb.min_x,
            origin_y: bb.min_y,
            resolution,
            cols,
            rows,
            inside,
        }
    }

    pub(crate) fn in_area_centers(&self) -> impl Iterator<Item = Point> + '_ {
        (0..self.rows * self.cols).filter_map(move |i| {
            if self.inside[i] {
                let r = i / self.cols;
                let c = i % self.cols;
                Some(Point::new(
                    self.origin_x + (c as f64 + 0.5) * self.resolution,
                    self.origin_y + (r as f64 + 0.5) * self.resolution,
                ))
            } else {
                None
            }
        })
    }

    pub(crate) fn cell_area(&self) -> f64 {
        self.resolution * self.resolution
    }

    pub(crate) fn in_area_count(&self) -> usize {
        self.inside.iter().filter(|b| **b).count()
    }
}

/// Gini coefficient of a sequence of non-negative areas:
/// `sum_{v,u} |A_v - A_u| / (2 K^2 mean)`. Zero for equal areas; always in
/// `[0, 1)`.
pub fn gini(areas: &[f64]) -> Result<f64, SpatialError> {
    if areas.is_empty() {
        return Err(SpatialError::EmptyAreas);
    }
    for &a in areas {
        if a < 0.0 {
            return Err(SpatialError::NegativeArea(a));
        }
    }
    let k = areas.len() as f64;
    let total: f64 = areas.iter().sum();
    if total == 0.0 {
        return Err(SpatialError::AllZeroAreas);
    }
    let mut sorted = areas.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("areas are finite"));
    // sum_{v,u} |A_v - A_u| = 2 * sum_i (2i - K - 1) a_(i)  (1-based ranks)
    let mut weighted = 0.0;
    for (i, a) in sorted.iter().enumerate() {
        weighted += (2.0 * (i as f64 + 1.0) - k - 1.0) * a;
    }
    let mean = total / k;
    Ok(2.0 * weighted / (2.0 * k * k * mean))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::Rng as _;
    use rand::SeedableRng as _;
    use rand_chacha::ChaCha8Rng;

    fn unit_square_area() -> StudyArea {
        StudyArea::new(
            Polygon::new(vec![
                Point::new(0.0, 0.0),
                Point::new(1.0, 0.0),
                Point::new(1.0, 1.0),
                Point::new(0.0, 1.0),
            ])
            .unwrap(),
        )
    }

    #[test]
    fn lattice_fixture_r_is_two() {
        let pts = vec![
            Point::new(0.25, 0.25),
            Point::new(0.25, 0.75),
            Point::new(0.75, 0.25),
            Point::new(0.75, 0.75),
        ];
        let stats = clark_evans(&pts, &unit_square_area()).unwrap();
        assert_relative_eq!(stats.r_obs, 0.5, epsilon = 1e-12);
        assert_relative_eq!(stats.r_exp, 0.25, epsilon = 1e-12);
        assert_relative_eq!(stats.r, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn two_point_fixture() {
        let pts = vec![Point::new(0.25, 0.5), Point::new(0.75, 0.5)];
        let stats = clark_evans(&pts, &unit_square_area()).unwrap();
        assert_relative_eq!(stats.r_obs, 0.5, epsilon = 1e-12);
        assert_relative_eq!(stats.r_exp, 1.0 / (2.0 * 2f64.sqrt()), epsilon = 1e-12);
        assert_relative_eq!(stats.r, 2f64.sqrt(), epsilon = 1e-9);
    }

    #[test]
    fn single_point_is_an_error() {
        let err = clark_evans(&[Point::new(0.5, 0.5)], &unit_square_area()).unwrap_err();
        assert_eq!(err, SpatialError::TooFewPoints(1));
    }

    #[test]
    fn duplicate_points_contribute_zero() {
        let pts = vec![Point::new(0.5, 0.5), Point::new(0.5, 0.5)];
        let stats = clark_evans(&pts, &unit_square_area()).unwrap();
        assert_eq!(stats.r_obs, 0.0);
        assert_eq!(stats.r, 0.0);
    }

    #[test]
    fn single_site_takes_whole_area() {
        let area = unit_square_area();
        let part = voronoi_areas(&[(1, Point::new(0.5, 0.5))], &area, 0.05).unwrap();
        // Raster accounting: 20x20 cells all inside the square.
        assert_relative_eq!(part.areas[&1], 1.0, epsilon = 1e-9);
    }

    #[test]
    fn mirror_symmetric_sites_get_equal_areas() {
        let area = unit_square_area();
        let sites = [(1, Point::new(0.25, 0.5)), (2, Point::new(0.75, 0.5))];
        // Even number of columns: no cell center sits on the bisector.
        let part = voronoi_areas(&sites, &area, 0.05).unwrap();
        assert_relative_eq!(part.areas[&1], part.areas[&2], epsilon = 1e-12);
        assert_relative_eq!(part.areas[&1] + part.areas[&2], 1.0, epsilon = 1e-9);
    }

    #[test]
    fn tie_cells_go_to_lowest_site_id() {
        // Sites symmetric about x = 0.5; an odd column count puts a full
        // column of centers exactly on the bisector.
        let area = unit_square_area();
        let sites = [(9, Point::new(0.3, 0.5)), (3, Point::new(0.7, 0.5))];
        let part = voronoi_areas(&sites, &area, 0.2).unwrap(); // 5x5 grid
        // Middle column (5 cells) ties and goes to id 3.
        assert_relative_eq!(part.areas[&3], (10.0 + 5.0) * 0.04, epsilon = 1e-12);
        assert_relative_eq!(part.areas[&9], 10.0 * 0.04, epsilon = 1e-12);
    }

    #[test]
    fn site_outside_boundary_rejected() {
        let area = unit_square_area();
        let err = voronoi_areas(&[(1, Point::new(2.0, 0.5))], &area, 0.1).unwrap_err();
        assert_eq!(err, SpatialError::SiteOutsideBoundary(1));
    }

    #[test]
    fn bad_resolution_rejected() {
        let area = unit_square_area();
        let err = voronoi_areas(&[(1, Point::new(0.5, 0.5))], &area, 0.0).unwrap_err();
        assert_eq!(err, SpatialError::BadResolution(0.0));
    }

    #[test]
    fn gini_fixtures() {
        assert_relative_eq!(gini(&[5.0, 5.0, 5.0]).unwrap(), 0.0, epsilon = 1e-12);
        assert_relative_eq!(gini(&[1.0, 3.0]).unwrap(), 0.25, epsilon = 1e-12);
        assert_relative_eq!(gini(&[0.0, 1.0]).unwrap(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn gini_error_cases() {
        assert_eq!(gini(&[]), Err(SpatialError::EmptyAreas));
        assert_eq!(gini(&[0.0, 0.0]), Err(SpatialError::AllZeroAreas));
    }

    #[test]
    fn raster_areas_sum_to_cell_accounting() {
        let area = unit_square_area();
        let sites = [
            (1, Point::new(0.2, 0.2)),
            (2, Point::new(0.8, 0.3)),
            (3, Point::new(0.5, 0.9)),
        ];
        let res = 0.037; // does not divide 1.0 evenly
        let part = voronoi_areas(&sites, &area, res).unwrap();
        let grid = RasterGrid::new(&area, res);
        let expected = grid.in_area_count() as f64 * grid.cell_area();
        assert_relative_eq!(part.areas.values().sum::<f64>(), expected, epsilon = 1e-9);
    }

    #[test]
    fn halving_resolution_converges() {
        // Well-separated sites: per-site areas move by < 5% when the raster
        // is refined.
        let area = unit_square_area();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let sites: Vec<(u64, Point)> = (0..12)
            .map(|i| {
                (
                    i,
                    Point::new(rng.gen_range(0.05..0.95), rng.gen_range(0.05..0.95)),
                )
            })
            .collect();
        let coarse = voronoi_areas(&sites, &area, 0.01).unwrap();
        let fine = voronoi_areas(&sites, &area, 0.005).unwrap();
        for (id, a) in &coarse.areas {
            let b = fine.areas[id];
            assert!(
                (a - b).abs() / b.max(1e-9) < 0.05,
                "site {id}: coarse {a} vs fine {b}"
            );
        }
    }

    #[test]
    fn csr_sanity_mean_r_near_one() {
        // 500 seeded trials of K=100 uniform points; the empirical mean of
        // R sits near 1 (slightly below, since no edge correction).
        let area = unit_square_area();
        let mut total = 0.0;
        for trial in 0..500u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(trial);
            let pts: Vec<Point> = (0..100)
                .map(|_| Point::new(rng.gen::<f64>(), rng.gen::<f64>()))
                .collect();
            total += clark_evans(&pts, &area).unwrap().r;
        }
        let mean = total / 500.0;
        assert!((0.9..=1.1).contains(&mean), "mean R = {mean}");
    }

    proptest! {
        #[test]
        fn gini_scale_invariant(
            areas in proptest::collection::vec(0.0f64..1000.0, 1..30),
            scale in 0.001f64..1000.0,
        ) {
            prop_assume!(areas.iter().sum::<f64>() > 0.0);
            let base = gini(&areas).unwrap();
            let scaled: Vec<f64> = areas.iter().map(|a| a * scale).collect();
            let s = gini(&scaled).unwrap();
            prop_assert!((base - s).abs() < 1e-12,
                "gini not scale invariant: {base} vs {s}");
            prop_assert!((0.0..1.0).contains(&base) || base.abs() < 1e-12);
        }
    }
}
