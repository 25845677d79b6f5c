//! Design space geometry, the evaluated design and initial designs.
//!
//! Coordinates handed in and out of this module are raw (the black-box
//! function's units). Everything geometric (distances, duplicate checks)
//! happens on coordinates normalized to the unit cube.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::{self, stream};

/// Two points closer than this in normalized coordinates are duplicates.
pub const DUPLICATE_THRESHOLD: f64 = 1e-12;

/// Largest dimension for which the `2^d + 1` corners-plus-center design is built.
pub const MAX_CORNERS_DIM: usize = 10;

/// Axis-aligned box `[lower, upper]` in `d` dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpaceRepr")]
pub struct DesignSpace {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

#[derive(Deserialize)]
struct SpaceRepr {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl TryFrom<SpaceRepr> for DesignSpace {
    type Error = Error;
    fn try_from(r: SpaceRepr) -> Result<Self> {
        DesignSpace::new(r.lower, r.upper)
    }
}

impl DesignSpace {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() {
            return Err(Error::Config("design space needs at least one axis".into()));
        }
        if lower.len() != upper.len() {
            return Err(Error::Config(format!(
                "{} lower bounds but {} upper bounds",
                lower.len(),
                upper.len()
            )));
        }
        for (k, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::Config(format!(
                    "axis {k}: need finite lower < upper, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// The same interval `[lower, upper]` on every one of `dim` axes.
    pub fn cube(dim: usize, lower: f64, upper: f64) -> Result<Self> {
        Self::new(vec![lower; dim], vec![upper; dim])
    }

    pub fn unit(dim: usize) -> Result<Self> {
        Self::cube(dim, 0.0, 1.0)
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    /// Maps raw coordinates into `[0,1]^d`.
    pub fn normalize(&self, raw: &[f64]) -> Vec<f64> {
        raw.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(x, (lo, hi))| (x - lo) / (hi - lo))
            .collect()
    }

    /// Inverse of [`normalize`](Self::normalize).
    pub fn denormalize(&self, unit: &[f64]) -> Vec<f64> {
        unit.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(u, (lo, hi))| lo + u * (hi - lo))
            .collect()
    }

    /// First axis on which `raw` is outside the (inclusive) bounds, if any.
    pub fn violated_axis(&self, raw: &[f64]) -> Option<usize> {
        raw.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .position(|(x, (lo, hi))| !(x >= lo && x <= hi))
    }

    fn check_point(&self, raw: &[f64]) -> Result<()> {
        if raw.len() != self.dim() {
            return Err(Error::Usage(format!(
                "point has {} coordinates, design space has {}",
                raw.len(),
                self.dim()
            )));
        }
        match self.violated_axis(raw) {
            Some(axis) => Err(Error::OutOfBounds {
                coords: raw.to_vec(),
                axis,
            }),
            None => Ok(()),
        }
    }
}

/// One evaluation `(p_i, y_i)`. `iteration` is 0 for initial-design points
/// and `k` for the point added by the k-th adaptive step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluatedPoint {
    pub coords: Vec<f64>,
    pub response: f64,
    pub iteration: usize,
}

impl EvaluatedPoint {
    pub fn new(coords: Vec<f64>, response: f64, iteration: usize) -> Self {
        Self {
            coords,
            response,
            iteration,
        }
    }
}

/// Ordered set of distinct evaluated points in a [`DesignSpace`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DesignRepr")]
pub struct Design {
    space: DesignSpace,
    points: Vec<EvaluatedPoint>,
    #[serde(skip)]
    unit: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
struct DesignRepr {
    space: DesignSpace,
    points: Vec<EvaluatedPoint>,
}

impl TryFrom<DesignRepr> for Design {
    type Error = Error;
    fn try_from(r: DesignRepr) -> Result<Self> {
        let mut design = Design::new(r.space);
        for p in r.points {
            design.push(p)?;
        }
        Ok(design)
    }
}

impl Design {
    pub fn new(space: DesignSpace) -> Self {
        Self {
            space,
            points: Vec::new(),
            unit: Vec::new(),
        }
    }

    pub fn space(&self) -> &DesignSpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[EvaluatedPoint] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &EvaluatedPoint {
        &self.points[i]
    }

    /// Normalized coordinates of point `i`.
    pub fn unit_coords(&self, i: usize) -> &[f64] {
        &self.unit[i]
    }

    pub fn responses(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.response)
    }

    /// Distance from a normalized candidate to its nearest design point,
    /// with that point's index (lowest index on ties).
    pub fn nearest_unit(&self, unit: &[f64]) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for (i, q) in self.unit.iter().enumerate() {
            let d2 = squared_distance(unit, q);
            if best.is_none_or(|(_, b)| d2 < b) {
                best = Some((i, d2));
            }
        }
        best.map(|(i, d2)| (i, d2.sqrt()))
    }

    /// Returns a new snapshot with `point` appended.
    pub fn validate_and_append(&self, point: EvaluatedPoint) -> Result<Design> {
        let mut next = self.clone();
        next.push(point)?;
        Ok(next)
    }

    /// In-place append with the same checks as [`validate_and_append`](Self::validate_and_append).
    pub fn push(&mut self, point: EvaluatedPoint) -> Result<()> {
        self.space.check_point(&point.coords)?;
        let unit = self.space.normalize(&point.coords);
        if let Some((existing, distance)) = self.nearest_unit(&unit) {
            if distance <= DUPLICATE_THRESHOLD {
                return Err(Error::Duplicate {
                    coords: point.coords,
                    existing,
                    distance,
                });
            }
        }
        self.points.push(point);
        self.unit.push(unit);
        Ok(())
    }

    /// Replaces every response with `f(response)`, keeping coordinates.
    pub fn map_responses(&self, f: impl Fn(f64) -> f64) -> Design {
        let mut out = self.clone();
        for p in &mut out.points {
            p.response = f(p.response);
        }
        out
    }
}

#[inline]
pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    squared_distance(a, b).sqrt()
}

/// Normalized Euclidean distance from a raw `candidate` to the nearest
/// design point.
pub fn min_distance(candidate: &[f64], design: &Design) -> Result<f64> {
    if candidate.len() != design.dim() {
        return Err(Error::Usage(format!(
            "candidate has {} coordinates, design has {}",
            candidate.len(),
            design.dim()
        )));
    }
    let unit = design.space().normalize(candidate);
    design
        .nearest_unit(&unit)
        .map(|(_, d)| d)
        .ok_or_else(|| Error::Usage("min_distance on an empty design".into()))
}

/// How the first evaluations are placed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "scheme")]
pub enum InitialScheme {
    /// The `2^d` box corners followed by the box center.
    CornersCenter,
    /// Seeded Latin hypercube with `size` points.
    LatinHypercube { size: usize },
}

impl InitialScheme {
    /// Corners plus center up to four dimensions, `LatinHypercube(5d)` beyond.
    pub fn default_for(dim: usize) -> Self {
        if dim <= 4 {
            InitialScheme::CornersCenter
        } else {
            InitialScheme::LatinHypercube { size: 5 * dim }
        }
    }

    /// Number of points the scheme produces in `dim` dimensions.
    pub fn size(&self, dim: usize) -> usize {
        match *self {
            InitialScheme::CornersCenter => (1usize << dim.min(usize::BITS as usize - 1)) + 1,
            InitialScheme::LatinHypercube { size } => size,
        }
    }
}

/// Raw coordinates of the initial design.
pub fn initial_design(
    space: &DesignSpace,
    scheme: InitialScheme,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let d = space.dim();
    let unit: Vec<Vec<f64>> = match scheme {
        InitialScheme::CornersCenter => {
            if d > MAX_CORNERS_DIM {
                return Err(Error::Config(format!(
                    "corners_center needs d <= {MAX_CORNERS_DIM}, got d = {d}"
                )));
            }
            let mut pts: Vec<Vec<f64>> = (0..1usize << d)
                .map(|mask| {
                    // first axis is the most significant bit
                    (0..d).map(|k| ((mask >> (d - 1 - k)) & 1) as f64).collect()
                })
                .collect();
            pts.push(vec![0.5; d]);
            pts
        }
        InitialScheme::LatinHypercube { size } => {
            if size < d + 1 {
                return Err(Error::Config(format!(
                    "latin_hypercube needs at least d + 1 = {} points, got {size}",
                    d + 1
                )));
            }
            latin_hypercube(d, size, seed)
        }
    };
    Ok(unit.iter().map(|u| space.denormalize(u)).collect())
}

fn latin_hypercube(dim: usize, size: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = seed::stream_rng(seed, stream::LATIN_HYPERCUBE, 0);
    let mut pts = vec![vec![0.0; dim]; size];
    let mut strata: Vec<usize> = (0..size).collect();
    for k in 0..dim {
        strata.shuffle(&mut rng);
        for (p, &s) in pts.iter_mut().zip(&strata) {
            let jitter: f64 = rng.random();
            p[k] = (s as f64 + jitter) / size as f64;
        }
    }
    pts
}
