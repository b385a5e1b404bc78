//! Feature preprocessing and the feature-space placement objectives.
//!
//! Numeric columns are standardized with statistics fitted on training
//! segments only (sample convention, `n - 1`); categorical columns are
//! one-hot encoded against the level dictionary seen at fit time, with
//! unseen levels mapping to an all-zero indicator block. The three
//! feature-based objectives (diversity, redundancy, coverage) operate on
//! these encoded vectors.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Numeric,
    Categorical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variability {
    Static,
    Temporal,
    Spatiotemporal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
    pub variability: Variability,
}

/// Ordered column declarations for a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct FeatureSchema {
    pub columns: Vec<ColumnSpec>,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum FeatureError {
    #[error("duplicate column name '{0}' in schema")]
    DuplicateColumn(String),
    #[error("cannot fit a preprocessor on zero rows")]
    EmptyFit,
    #[error("row is missing mandatory column '{0}'")]
    MissingColumn(String),
    #[error("column '{column}' expected a numeric value, got '{value}'")]
    NonNumericValue { column: String, value: String },
    #[error("feature subset '{subset}' references unknown column '{column}'")]
    UnknownSubsetColumn { subset: String, column: String },
    #[error("feature subset '{0}' resolves to no columns in this schema")]
    EmptySubset(String),
    #[error("{objective} needs at least {needed} vectors, got {got}")]
    Arity {
        objective: &'static str,
        needed: usize,
        got: usize,
    },
    #[error("redundancy is undefined: vector {0} is all zeros")]
    ZeroVector(usize),
    #[error("vectors must share one length; saw {0} and {1}")]
    RaggedVectors(usize, usize),
}

impl FeatureSchema {
    pub fn new(columns: Vec<ColumnSpec>) -> Result<Self, FeatureError> {
        let mut seen = BTreeMap::new();
        for c in &columns {
            if seen.insert(c.name.clone(), ()).is_some() {
                return Err(FeatureError::DuplicateColumn(c.name.clone()));
            }
        }
        Ok(FeatureSchema { columns })
    }

    pub fn column(&self, name: &str) -> Option<&ColumnSpec> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn with_variability(&self, v: Variability) -> Vec<&ColumnSpec> {
        self.columns.iter().filter(|c| c.variability == v).collect()
    }
}

/// A raw feature record: column name to string value, as read from CSV.
pub type RawRow = BTreeMap<String, String>;

/// Named time-invariant column subsets used by the feature-based
/// placement strategies.
///
/// `infrastructure_selected` is the fixed four-column set (lanes,
/// street_type, surface, max_speed); `connectivity` expects precomputed
/// graph measures as feature columns; `points_of_interest` picks every
/// static column prefixed `poi_`, and `infrastructure_full` combines the
/// selected infrastructure columns with `infra_`- and `poi_`-prefixed
/// ones. Datasets that use different column names supply `custom`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "name", content = "column_names")]
pub enum FeatureSubsetSpec {
    AllStatic,
    InfrastructureSelected,
    Connectivity,
    InfrastructureFull,
    PointsOfInterest,
    Custom(Vec<String>),
}

impl Default for FeatureSubsetSpec {
    fn default() -> Self {
        FeatureSubsetSpec::AllStatic
    }
}

impl FeatureSubsetSpec {
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "all_static" => Some(Self::AllStatic),
            "infrastructure_selected" => Some(Self::InfrastructureSelected),
            "connectivity" => Some(Self::Connectivity),
            "infrastructure_full" => Some(Self::InfrastructureFull),
            "points_of_interest" => Some(Self::PointsOfInterest),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::AllStatic => "all_static",
            Self::InfrastructureSelected => "infrastructure_selected",
            Self::Connectivity => "connectivity",
            Self::InfrastructureFull => "infrastructure_full",
            Self::PointsOfInterest => "points_of_interest",
            Self::Custom(_) => "custom",
        }
    }

    /// Resolves the subset to concrete static column names in schema order.
    pub fn resolve(&self, schema: &FeatureSchema) -> Result<Vec<String>, FeatureError> {
        let static_cols = schema.with_variability(Variability::Static);
        let pick_named = |names: &[&str]| -> Result<Vec<String>, FeatureError> {
            let mut out = Vec::new();
            for name in names {
                match static_cols.iter().find(|c| c.name == *name) {
                    Some(c) => out.push(c.name.clone()),
                    None => {
                        return Err(FeatureError::UnknownSubsetColumn {
                            subset: self.name().to_string(),
                            column: name.to_string(),
                        })
                    }
                }
            }
            Ok(out)
        };
        let resolved = match self {
            Self::AllStatic => static_cols.iter().map(|c| c.name.clone()).collect(),
            Self::InfrastructureSelected => {
                pick_named(&["lanes", "street_type", "surface", "max_speed"])?
            }
            Self::Connectivity => pick_named(&["betweenness", "degree", "closeness", "clustering"])?,
            Self::PointsOfInterest => static_cols
                .iter()
                .filter(|c| c.name.starts_with("poi_"))
                .map(|c| c.name.clone())
                .collect(),
            Self::InfrastructureFull => {
                let mut out = pick_named(&["lanes", "street_type", "surface", "max_speed"])?;
                for c in &static_cols {
                    if c.name.starts_with("infra_") || c.name.starts_with("poi_") {
                        out.push(c.name.clone());
                    }
                }
                out
            }
            Self::Custom(names) => {
                let mut out = Vec::new();
                for name in names {
                    match schema.column(name) {
                        Some(c) if c.variability == Variability::Static => {
                            out.push(c.name.clone())
                        }
                        _ => {
                            return Err(FeatureError::UnknownSubsetColumn {
                                subset: "custom".to_string(),
                                column: name.clone(),
                            })
                        }
                    }
                }
                out
            }
        };
        if resolved.is_empty() {
            return Err(FeatureError::EmptySubset(self.name().to_string()));
        }
        Ok(resolved)
    }
}

/// Fitted per-column encoding state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum ColumnEncoding {
    /// `(mean, std)` under the sample (n-1) convention; constant columns
    /// record std = 0 and transform to 0.
    Numeric { mean: f64, std: f64 },
    /// Sorted level dictionary; one indicator dimension per level.
    Categorical { levels: Vec<String> },
}

/// Fitted standardization statistics and categorical dictionaries for an
/// ordered list of columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodingMap {
    names: Vec<String>,
    encodings: Vec<ColumnEncoding>,
    width: usize,
}

impl EncodingMap {
    /// Encoded vector length.
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn column_names(&self) -> &[String] {
        &self.names
    }
}

/// Fits means/stds and level dictionaries on training rows for the given
/// columns (in the order given).
pub fn fit_preprocessor(
    rows: &[RawRow],
    columns: &[ColumnSpec],
) -> Result<EncodingMap, FeatureError> {
    if rows.is_empty() {
        return Err(FeatureError::EmptyFit);
    }
    let mut names = Vec::with_capacity(columns.len());
    let mut encodings = Vec::with_capacity(columns.len());
    let mut width = 0usize;
    for col in columns {
        names.push(col.name.clone());
        match col.kind {
            ColumnKind::Numeric => {
                let mut values = Vec::with_capacity(rows.len());
                for row in rows {
                    values.push(numeric_value(row, &col.name)?);
                }
                let n = values.len() as f64;
                let mean = values.iter().sum::<f64>() / n;
                let std = if values.len() < 2 {
                    0.0
                } else {
                    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
                    (ss / (n - 1.0)).sqrt()
                };
                encodings.push(ColumnEncoding::Numeric { mean, std });
                width += 1;
            }
            ColumnKind::Categorical => {
                let mut levels: Vec<String> = Vec::new();
                for row in rows {
                    let v = string_value(row, &col.name)?;
                    if !levels.iter().any(|l| l == &v) {
                        levels.push(v);
                    }
                }
                levels.sort();
                width += levels.len();
                encodings.push(ColumnEncoding::Categorical { levels });
            }
        }
    }
    Ok(EncodingMap {
        names,
        encodings,
        width,
    })
}

/// Encodes one raw row with a fitted map. Unseen categorical levels yield
/// an all-zero indicator block; zero-variance numeric columns map to 0.
pub fn transform_row(row: &RawRow, map: &EncodingMap) -> Result<Vec<f64>, FeatureError> {
    let mut out = Vec::with_capacity(map.width);
    for (name, enc) in map.names.iter().zip(&map.encodings) {
        match enc {
            ColumnEncoding::Numeric { mean, std } => {
                let v = numeric_value(row, name)?;
                out.push(if *std == 0.0 { 0.0 } else { (v - mean) / std });
            }
            ColumnEncoding::Categorical { levels } => {
                let v = string_value(row, name)?;
                for level in levels {
                    out.push(if level == &v { 1.0 } else { 0.0 });
                }
            }
        }
    }
    Ok(out)
}

pub fn transform_rows(rows: &[RawRow], map: &EncodingMap) -> Result<Vec<Vec<f64>>, FeatureError> {
    rows.iter().map(|r| transform_row(r, map)).collect()
}

fn string_value(row: &RawRow, name: &str) -> Result<String, FeatureError> {
    row.get(name)
        .cloned()
        .ok_or_else(|| FeatureError::MissingColumn(name.to_string()))
}

fn numeric_value(row: &RawRow, name: &str) -> Result<f64, FeatureError> {
    let raw = string_value(row, name)?;
    raw.trim()
        .parse::<f64>()
        .map_err(|_| FeatureError::NonNumericValue {
            column: name.to_string(),
            value: raw,
        })
}

/// Feature-space objectives over encoded vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureObjective {
    /// Mean pairwise Euclidean distance; maximized.
    Diversity,
    /// Mean pairwise cosine similarity; minimized.
    Redundancy,
    /// Mean per-dimension population variance; maximized.
    Coverage,
}

/// Scores a set of encoded vectors under one objective.
///
/// Diversity and redundancy need at least two vectors; coverage needs one.
/// Redundancy is undefined when any vector is all-zero.
pub fn score_feature_objective(
    vectors: &[Vec<f64>],
    kind: FeatureObjective,
) -> Result<f64, FeatureError> {
    let k = vectors.len();
    let needed = match kind {
        FeatureObjective::Coverage => 1,
        _ => 2,
    };
    if k < needed {
        return Err(FeatureError::Arity {
            objective: match kind {
                FeatureObjective::Diversity => "diversity",
                FeatureObjective::Redundancy => "redundancy",
                FeatureObjective::Coverage => "coverage",
            },
            needed,
            got: k,
        });
    }
    let dim = vectors[0].len();
    for v in vectors {
        if v.len() != dim {
            return Err(FeatureError::RaggedVectors(dim, v.len()));
        }
    }
    match kind {
        FeatureObjective::Diversity => {
            let mut total = 0.0;
            for i in 0..k {
                for j in (i + 1)..k {
                    total += euclidean(&vectors[i], &vectors[j]);
                }
            }
            Ok(2.0 * total / (k as f64 * (k as f64 - 1.0)))
        }
        FeatureObjective::Redundancy => {
            let norms: Vec<f64> = vectors.iter().map(|v| norm(v)).collect();
            for (i, n) in norms.iter().enumerate() {
                if *n == 0.0 {
                    return Err(FeatureError::ZeroVector(i));
                }
            }
            let mut total = 0.0;
            for i in 0..k {
                for j in (i + 1)..k {
                    total += dot(&vectors[i], &vectors[j]) / (norms[i] * norms[j]);
                }
            }
            Ok(2.0 * total / (k as f64 * (k as f64 - 1.0)))
        }
        FeatureObjective::Coverage => {
            let kf = k as f64;
            let mut acc = 0.0;
            for p in 0..dim {
                let mean = vectors.iter().map(|v| v[p]).sum::<f64>() / kf;
                let var = vectors.iter().map(|v| (v[p] - mean) * (v[p] - mean)).sum::<f64>() / kf;
                acc += var;
            }
            Ok(acc / dim as f64)
        }
    }
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
