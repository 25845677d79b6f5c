//! Analytic test functions, seeded noisy evaluators and design metrics.

use serde::{Deserialize, Serialize};

use crate::design::{distance, Design, DesignSpace};
use crate::error::{Error, Result};
use crate::noise::add_noise;
use crate::sampler::{EvalFailure, Evaluator};
use crate::seed::{stream, stream_rng};

/// The two-dimensional "peaks" surface, conventionally studied on `[-3,3]²`:
///
/// `3(1−x)² e^{−x²−(y+1)²} − 10(x/5 − x³ − y⁵) e^{−x²−y²} − ⅓ e^{−(x+1)²−y²}`
pub fn peaks(x: f64, y: f64) -> f64 {
    3.0 * (1.0 - x).powi(2) * (-x * x - (y + 1.0).powi(2)).exp()
        - 10.0 * (x / 5.0 - x.powi(3) - y.powi(5)) * (-x * x - y * y).exp()
        - (-(x + 1.0).powi(2) - y * y).exp() / 3.0
}

/// Conventional peaks domain.
pub fn peaks_space() -> DesignSpace {
    DesignSpace::cube(2, -3.0, 3.0).expect("static bounds")
}

/// Sub-box holding all three extrema of [`peaks`].
pub fn peaks_nonlinear_region() -> Region {
    Region::new(vec![-2.0, -2.0], vec![2.0, 2.0]).expect("static bounds")
}

/// Built-in deterministic test functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "name")]
pub enum TestFunction {
    Peaks,
    /// `intercept + Σ_k coefficients[k]·x_k`
    Linear {
        intercept: f64,
        coefficients: Vec<f64>,
    },
    /// `xᵀ M x` with `matrix` given row-major, `d × d`.
    Quadratic {
        matrix: Vec<f64>,
    },
}

impl TestFunction {
    /// Default-parameterized function by name: linear gets intercept 0 and
    /// unit slopes, quadratic the identity.
    pub fn by_name(name: &str, dim: usize) -> Result<Self> {
        match name {
            "peaks" => Ok(TestFunction::Peaks),
            "linear" => Ok(TestFunction::Linear {
                intercept: 0.0,
                coefficients: vec![1.0; dim],
            }),
            "quadratic" => Ok(TestFunction::Quadratic {
                matrix: (0..dim * dim)
                    .map(|k| if k / dim == k % dim { 1.0 } else { 0.0 })
                    .collect(),
            }),
            other => Err(Error::Config(format!(
                "unknown function '{other}' (expected peaks, linear or quadratic)"
            ))),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            TestFunction::Peaks => 2,
            TestFunction::Linear { coefficients, .. } => coefficients.len(),
            TestFunction::Quadratic { matrix } => (matrix.len() as f64).sqrt().round() as usize,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            TestFunction::Linear { coefficients, .. } if coefficients.is_empty() => Err(
                Error::Config("linear function needs at least one coefficient".into()),
            ),
            TestFunction::Quadratic { matrix }
                if matrix.is_empty() || self.dim().pow(2) != matrix.len() =>
            {
                Err(Error::Config(format!(
                    "quadratic matrix has {} entries, not a non-empty square",
                    matrix.len()
                )))
            }
            _ => Ok(()),
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            TestFunction::Peaks => peaks(x[0], x[1]),
            TestFunction::Linear {
                intercept,
                coefficients,
            } => intercept + coefficients.iter().zip(x).map(|(c, v)| c * v).sum::<f64>(),
            TestFunction::Quadratic { matrix } => {
                let d = x.len();
                (0..d)
                    .map(|i| x[i] * (0..d).map(|j| matrix[i * d + j] * x[j]).sum::<f64>())
                    .sum()
            }
        }
    }
}

/// Test function plus `N(0, λ)` output noise. The noise of the `c`-th call
/// comes from its own derived stream, so the stream can be resumed from a
/// call count.
#[derive(Debug, Clone)]
pub struct SyntheticEvaluator {
    function: TestFunction,
    lambda: f64,
    seed: u64,
    calls: u64,
}

pub fn make_evaluator(
    function: TestFunction,
    lambda: f64,
    seed: u64,
) -> Result<SyntheticEvaluator> {
    function.validate()?;
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::Domain(format!(
            "noise variance λ must be >= 0, got {lambda}"
        )));
    }
    Ok(SyntheticEvaluator {
        function,
        lambda,
        seed,
        calls: 0,
    })
}

impl SyntheticEvaluator {
    pub fn function(&self) -> &TestFunction {
        &self.function
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn calls(&self) -> u64 {
        self.calls
    }
}

impl Evaluator for SyntheticEvaluator {
    fn evaluate(&mut self, coords: &[f64]) -> std::result::Result<f64, EvalFailure> {
        if coords.len() != self.function.dim() {
            return Err(format!(
                "function expects {} inputs, got {}",
                self.function.dim(),
                coords.len()
            )
            .into());
        }
        let clean = self.function.value(coords);
        let mut rng = stream_rng(self.seed, stream::NOISE, self.calls);
        let y = add_noise(clean, self.lambda, &mut rng)?;
        self.calls += 1;
        Ok(y)
    }

    fn resume_at(&mut self, evaluations: u64) {
        self.calls = evaluations;
    }
}

/// Axis-aligned sub-box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Region {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len()
            || lower
                .iter()
                .zip(&upper)
                .any(|(l, u)| l.is_nan() || u.is_nan() || l > u)
        {
            return Err(Error::Config(
                "region needs matching bounds with lower <= upper".into(),
            ));
        }
        Ok(Self { lower, upper })
    }

    /// The whole design space as a region.
    pub fn of_space(space: &DesignSpace) -> Self {
        Self {
            lower: space.lower().to_vec(),
            upper: space.upper().to_vec(),
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (l, u))| v >= l && v <= u)
    }

    pub fn is_within(&self, space: &DesignSpace) -> bool {
        self.lower.len() == space.dim()
            && self.lower.iter().zip(space.lower()).all(|(a, b)| a >= b)
            && self.upper.iter().zip(space.upper()).all(|(a, b)| a <= b)
    }
}

/// Fraction of adaptively chosen points (iteration >= 1) inside `region`.
/// A design without adaptive points is measured over all its points; an
/// empty design gives 0.
pub fn region_fraction(design: &Design, region: &Region) -> f64 {
    let adaptive: Vec<_> = design
        .points()
        .iter()
        .filter(|p| p.iteration >= 1)
        .collect();
    let pool: Vec<_> = if adaptive.is_empty() {
        design.points().iter().collect()
    } else {
        adaptive
    };
    if pool.is_empty() {
        return 0.0;
    }
    pool.iter().filter(|p| region.contains(&p.coords)).count() as f64 / pool.len() as f64
}

/// Mean and coefficient of variation (population standard deviation over
/// mean) of every point's nearest-neighbor distance, in normalized
/// coordinates.
pub fn nn_distance_stats(design: &Design) -> Result<(f64, f64)> {
    let n = design.len();
    if n < 2 {
        return Err(Error::Usage(format!(
            "nearest-neighbor statistics need at least 2 points, got {n}"
        )));
    }
    let nn: Vec<f64> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| j != i)
                .map(|j| distance(design.unit_coords(i), design.unit_coords(j)))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let mean = nn.iter().sum::<f64>() / n as f64;
    let var = nn.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / n as f64;
    Ok((mean, var.sqrt() / mean))
}
