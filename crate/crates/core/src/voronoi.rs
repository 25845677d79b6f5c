//! Exploration score: relative Voronoi cell volumes estimated by Monte Carlo.
//!
//! Uniform test points are thrown into the unit cube and each one is owned
//! by its nearest design point. A cell's share of the pool estimates its
//! share of the domain volume. No tessellation is built.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::design::{squared_distance, Design, DesignSpace};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::seed::stream_rng;

const OWNER_CHUNK: usize = 512;

/// `max(1000, 100 n)` test points for a design of size `n`.
pub fn default_pool_size(n_design: usize) -> usize {
    (100 * n_design).max(1000)
}

/// Uniform Monte-Carlo points in the unit cube, optionally with each point's
/// owning design index.
#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloPool {
    dim: usize,
    seed: u64,
    points: Vec<f64>,
    ownership: Option<Ownership>,
}

#[derive(Debug, Clone, PartialEq)]
struct Ownership {
    owner: Vec<usize>,
    distance: Vec<f64>,
    n_design: usize,
}

impl MonteCarloPool {
    /// Builds a pool from explicit normalized points (row-major rows of
    /// length `dim`).
    pub fn from_points(dim: usize, points: Vec<Vec<f64>>) -> Result<Self> {
        if dim == 0 || points.is_empty() {
            return Err(Error::Config(
                "pool needs dim >= 1 and at least one point".into(),
            ));
        }
        let mut flat = Vec::with_capacity(dim * points.len());
        for p in points {
            if p.len() != dim || p.iter().any(|u| !(0.0..=1.0).contains(u)) {
                return Err(Error::Config(format!(
                    "pool point {p:?} is not in [0,1]^{dim}"
                )));
            }
            flat.extend(p);
        }
        Ok(Self {
            dim,
            seed: 0,
            points: flat,
            ownership: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Normalized coordinates of pool point `j`.
    pub fn point(&self, j: usize) -> &[f64] {
        &self.points[j * self.dim..(j + 1) * self.dim]
    }

    pub fn is_assigned(&self) -> bool {
        self.ownership.is_some()
    }

    /// Owning design index per pool point, once assigned.
    pub fn owners(&self) -> Option<&[usize]> {
        self.ownership.as_ref().map(|o| o.owner.as_slice())
    }

    /// Distance from each pool point to its owner, i.e. its distance to the
    /// whole design.
    pub fn owner_distances(&self) -> Option<&[f64]> {
        self.ownership.as_ref().map(|o| o.distance.as_slice())
    }

    /// Size of the design the ownership was computed against.
    pub fn assigned_design_len(&self) -> Option<usize> {
        self.ownership.as_ref().map(|o| o.n_design)
    }
}

/// `size` i.i.d. uniform points in `[0,1]^d`, deterministic in `seed`.
pub fn build_pool(space: &DesignSpace, size: usize, seed: u64) -> Result<MonteCarloPool> {
    if size == 0 {
        return Err(Error::Config("Monte-Carlo pool size must be >= 1".into()));
    }
    let dim = space.dim();
    let mut rng = stream_rng(seed, 0, 0);
    let points = (0..size * dim).map(|_| rng.random::<f64>()).collect();
    Ok(MonteCarloPool {
        dim,
        seed,
        points,
        ownership: None,
    })
}

/// Assigns every pool point to its nearest design point (lowest index on
/// ties).
pub fn assign_owners(pool: MonteCarloPool, design: &Design) -> Result<MonteCarloPool> {
    assign_owners_with(pool, design, Execution::default())
}

pub fn assign_owners_with(
    mut pool: MonteCarloPool,
    design: &Design,
    exec: Execution,
) -> Result<MonteCarloPool> {
    if design.is_empty() {
        return Err(Error::Usage(
            "cannot assign owners against an empty design".into(),
        ));
    }
    if design.dim() != pool.dim {
        return Err(Error::Usage(format!(
            "pool is {}-dimensional, design is {}-dimensional",
            pool.dim,
            design.dim()
        )));
    }
    let dim = pool.dim;
    let pairs = exec.map_chunks(&pool.points, OWNER_CHUNK * dim, |chunk| {
        chunk
            .chunks_exact(dim)
            .map(|p| {
                let mut best = (0usize, f64::INFINITY);
                for i in 0..design.len() {
                    let d2 = squared_distance(p, design.unit_coords(i));
                    if d2 < best.1 {
                        best = (i, d2);
                    }
                }
                best
            })
            .collect()
    });
    let (owner, distance) = pairs.into_iter().map(|(i, d2)| (i, d2.sqrt())).unzip();
    pool.ownership = Some(Ownership {
        owner,
        distance,
        n_design: design.len(),
    });
    Ok(pool)
}

/// Relative cell volumes `v_i = count_i / M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplorationScores {
    pub v: Vec<f64>,
    pub counts: Vec<usize>,
}

pub fn estimate_volumes(pool: &MonteCarloPool, n_design: usize) -> Result<ExplorationScores> {
    let owners = pool
        .owners()
        .ok_or_else(|| Error::Usage("pool ownership has not been assigned".into()))?;
    if n_design == 0 {
        return Err(Error::Usage("n_design must be >= 1".into()));
    }
    let mut counts = vec![0usize; n_design];
    for &o in owners {
        *counts.get_mut(o).ok_or_else(|| {
            Error::Usage(format!("owner {o} out of range for {n_design} points"))
        })? += 1;
    }
    let m = owners.len() as f64;
    let v = counts.iter().map(|&c| c as f64 / m).collect();
    Ok(ExplorationScores { v, counts })
}
