//! Exploitation score: local linear fit around each design point and the
//! nonlinearity error of that fit.
//!
//! For a reference point `p_r` a small neighborhood is chosen, a gradient is
//! fitted to the neighbors' response differences by least squares, and the
//! score is the summed absolute deviation of the neighbors' responses from
//! the resulting linear prediction. All geometry is in normalized
//! coordinates.
//!
//! Neighborhood selection is greedy: start with the nearest point, then keep
//! adding the candidate with the largest ratio of (distance to the nearest
//! already-selected neighbor) over (distance to `p_r`). This prefers points
//! that are close to `p_r` but spread around it. It runs in `O(n T)` per
//! reference point.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::design::{distance, Design};
use crate::error::{Error, Result};
use crate::exec::Execution;

/// Singular values below this fraction of the largest are treated as zero.
pub const RELATIVE_RANK_CUTOFF: f64 = 1e-10;

/// Reference point `r` and its selected neighbors `N(p_r)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Neighborhood {
    pub ref_index: usize,
    pub neighbor_indices: Vec<usize>,
}

impl Neighborhood {
    /// `T = |N(p_r)|`.
    pub fn t(&self) -> usize {
        self.neighbor_indices.len()
    }
}

/// Least-squares gradient in response units per normalized input unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientEstimate {
    pub g: Vec<f64>,
    pub residual_norm: f64,
}

/// `2d` neighbors by default.
pub fn default_max_neighbors(dim: usize) -> usize {
    2 * dim
}

pub fn select_neighborhood(design: &Design, r: usize, t_max: usize) -> Result<Neighborhood> {
    let n = design.len();
    if n < 2 {
        return Err(Error::Usage(format!(
            "neighborhood selection needs at least 2 design points, got {n}"
        )));
    }
    if r >= n {
        return Err(Error::Usage(format!(
            "reference index {r} out of range for {n} points"
        )));
    }
    if t_max == 0 {
        return Err(Error::Usage("t_max must be >= 1".into()));
    }
    let t = t_max.min(n - 1);
    let pr = design.unit_coords(r);
    let to_ref: Vec<f64> = (0..n)
        .map(|i| distance(design.unit_coords(i), pr))
        .collect();

    let mut taken = vec![false; n];
    taken[r] = true;
    let mut first = None;
    for i in (0..n).filter(|&i| i != r) {
        if first.is_none_or(|f: usize| to_ref[i] < to_ref[f]) {
            first = Some(i);
        }
    }
    let first = first.expect("n >= 2");
    taken[first] = true;
    let mut selected = Vec::with_capacity(t);
    selected.push(first);

    // distance from each candidate to its closest selected neighbor
    let mut to_selected: Vec<f64> = (0..n)
        .map(|i| distance(design.unit_coords(i), design.unit_coords(first)))
        .collect();

    while selected.len() < t {
        let mut best: Option<(usize, f64)> = None;
        for i in (0..n).filter(|&i| !taken[i]) {
            let ratio = to_selected[i] / to_ref[i];
            if best.is_none_or(|(_, b)| ratio > b) {
                best = Some((i, ratio));
            }
        }
        let (next, _) = best.expect("t <= n - 1 leaves a candidate");
        taken[next] = true;
        selected.push(next);
        let pn = design.unit_coords(next);
        for (i, slot) in to_selected.iter_mut().enumerate() {
            if !taken[i] {
                *slot = slot.min(distance(design.unit_coords(i), pn));
            }
        }
    }

    Ok(Neighborhood {
        ref_index: r,
        neighbor_indices: selected,
    })
}

/// Minimum-norm least-squares solution of `A g = b` where `A` has the
/// given rows. Returns `g = 0` when `A` is identically zero.
pub fn least_squares_gradient(rows: &[Vec<f64>], rhs: &[f64]) -> Result<GradientEstimate> {
    let m = rows.len();
    if m == 0 || m != rhs.len() {
        return Err(Error::Usage(format!(
            "least squares needs matching non-empty rows/rhs, got {m} rows and {} values",
            rhs.len()
        )));
    }
    let d = rows[0].len();
    if rows.iter().any(|r| r.len() != d) {
        return Err(Error::Usage("ragged least-squares rows".into()));
    }
    if rhs
        .iter()
        .chain(rows.iter().flatten())
        .any(|x| !x.is_finite())
    {
        return Err(Error::Data("non-finite value in gradient system".into()));
    }
    let a = DMatrix::from_fn(m, d, |i, k| rows[i][k]);
    let b = DVector::from_column_slice(rhs);
    let svd = a.clone().svd(true, true);
    let sigma_max = svd.singular_values.max();
    let g = if sigma_max > 0.0 {
        svd.solve(&b, RELATIVE_RANK_CUTOFF * sigma_max)
            .map_err(|e| Error::Data(format!("SVD solve failed: {e}")))?
            .column(0)
            .into_owned()
    } else {
        DVector::zeros(d)
    };
    let residual_norm = (&a * &g - &b).norm();
    Ok(GradientEstimate {
        g: g.iter().copied().collect(),
        residual_norm,
    })
}

pub fn estimate_gradient(design: &Design, nb: &Neighborhood) -> Result<GradientEstimate> {
    check_neighborhood(design, nb)?;
    let r = nb.ref_index;
    let yr = design.point(r).response;
    if !yr.is_finite() {
        return Err(Error::Data(format!("response of point {r} is {yr}")));
    }
    let pr = design.unit_coords(r);
    let rows: Vec<Vec<f64>> = nb
        .neighbor_indices
        .iter()
        .map(|&i| {
            design
                .unit_coords(i)
                .iter()
                .zip(pr)
                .map(|(a, b)| a - b)
                .collect()
        })
        .collect();
    let mut rhs = Vec::with_capacity(nb.t());
    for &i in &nb.neighbor_indices {
        let yi = design.point(i).response;
        if !yi.is_finite() {
            return Err(Error::Data(format!("response of point {i} is {yi}")));
        }
        rhs.push(yi - yr);
    }
    least_squares_gradient(&rows, &rhs)
}

/// `E(p_r) = Σ_{i ∈ N(p_r)} |y_i − (y_r + g·(p_i − p_r))|`.
pub fn nonlinearity_score(design: &Design, nb: &Neighborhood, grad: &GradientEstimate) -> f64 {
    let r = nb.ref_index;
    let yr = design.point(r).response;
    let pr = design.unit_coords(r);
    nb.neighbor_indices
        .iter()
        .map(|&i| {
            let predicted = yr
                + grad
                    .g
                    .iter()
                    .zip(design.unit_coords(i).iter().zip(pr))
                    .map(|(g, (a, b))| g * (a - b))
                    .sum::<f64>();
            (design.point(i).response - predicted).abs()
        })
        .sum()
}

/// Deterministic score plus the noise terms `ζ_i`: the upper bound on the
/// score computed from noisy responses with the same gradient.
pub fn noise_bound_rhs(deterministic_score: f64, zeta: &[f64]) -> Result<f64> {
    if let Some(z) = zeta.iter().find(|z| z.is_nan() || **z < 0.0) {
        return Err(Error::Usage(format!("noise term {z} is not non-negative")));
    }
    Ok(deterministic_score + zeta.iter().sum::<f64>())
}

/// Neighborhood, gradient and score for one reference point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointScore {
    pub neighborhood: Neighborhood,
    pub gradient: GradientEstimate,
    pub score: f64,
}

pub fn score_point(design: &Design, r: usize, t_max: usize) -> Result<PointScore> {
    let neighborhood = select_neighborhood(design, r, t_max)?;
    let gradient = estimate_gradient(design, &neighborhood)?;
    let score = nonlinearity_score(design, &neighborhood, &gradient);
    Ok(PointScore {
        neighborhood,
        gradient,
        score,
    })
}

/// Nonlinearity score of every design point. All zeros for designs with
/// fewer than two points.
pub fn score_design(design: &Design, t_max: usize, exec: Execution) -> Result<Vec<f64>> {
    if design.len() < 2 {
        return Ok(vec![0.0; design.len()]);
    }
    exec.map_range(design.len(), |r| {
        score_point(design, r, t_max).map(|s| s.score)
    })
    .into_iter()
    .collect()
}

fn check_neighborhood(design: &Design, nb: &Neighborhood) -> Result<()> {
    let n = design.len();
    let mut seen = vec![false; n];
    if nb.ref_index >= n || nb.neighbor_indices.is_empty() {
        return Err(Error::Usage("invalid neighborhood".into()));
    }
    seen[nb.ref_index] = true;
    for &i in &nb.neighbor_indices {
        if i >= n || seen[i] {
            return Err(Error::Usage(format!(
                "invalid or repeated neighbor index {i}"
            )));
        }
        seen[i] = true;
    }
    Ok(())
}
