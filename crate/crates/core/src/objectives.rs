//! Benchmark objectives and sampling targets.
//!
//! Every built-in optimization benchmark has global minimum value 0 and carries
//! its known minimizers, so detection needs no per-benchmark code.

use std::f64::consts::{E, PI};
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};
use crate::matrix::norm;

type CustomFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum ObjectiveKind {
    /// Ackley function evaluated at `x - shift`.
    Ackley { shift: Vec<f64> },
    Rastrigin,
    /// `(1/8) R(x) R(x - (3,2)) R(x + (1,3.5))` in two dimensions.
    MultimodalRastrigin,
    /// Product of Ackley functions centered at each minimizer.
    MultimodalAckley { centers: Vec<Vec<f64>> },
    /// Negative log of a two-component Gaussian mixture density in 2d.
    GaussianMixture { a: [f64; 2], b: [f64; 2] },
    Quadratic { mean: DVector<f64>, precision: DMatrix<f64> },
    Himmelblau,
    Custom(CustomFn),
}

#[derive(Clone)]
pub struct Objective {
    name: String,
    dim: usize,
    minimizers: Vec<Vec<f64>>,
    modes: Vec<Vec<f64>>,
    domain: (f64, f64),
    kind: ObjectiveKind,
}

impl fmt::Debug for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Objective")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("minimizers", &self.minimizers)
            .finish()
    }
}

fn ackley_at(x: &[f64], shift: Option<&[f64]>) -> f64 {
    let d = x.len() as f64;
    let mut sq = 0.0;
    let mut cos = 0.0;
    for (n, &v) in x.iter().enumerate() {
        let y = match shift {
            Some(s) => v - s[n],
            None => v,
        };
        sq += y * y;
        cos += (2.0 * PI * y).cos();
    }
    let value = -20.0 * (-(0.2 / d.sqrt()) * sq.sqrt()).exp() - (cos / d).exp() + E + 20.0;
    // roundoff can leave a tiny negative value at the minimizer
    value.max(0.0)
}

fn rastrigin_at(x: &[f64], offset: &[f64]) -> f64 {
    let d = x.len() as f64;
    10.0 * d
        + x.iter()
            .zip(offset)
            .map(|(v, o)| {
                let y = v - o;
                y * y - 10.0 * (2.0 * PI * y).cos()
            })
            .sum::<f64>()
}

impl Objective {
    /// Ackley function with minimizer at the origin.
    pub fn ackley(d: usize) -> Result<Self> {
        Self::shifted_ackley(d, vec![0.0; d.max(1)]).map(|mut o| {
            o.name = "ackley".into();
            o
        })
    }

    pub fn shifted_ackley(d: usize, shift: Vec<f64>) -> Result<Self> {
        require_dim(d)?;
        check_dim(d, shift.len())?;
        Ok(Self {
            name: "shifted-ackley".into(),
            dim: d,
            minimizers: vec![shift.clone()],
            modes: vec![],
            domain: (-5.0, 5.0),
            kind: ObjectiveKind::Ackley { shift },
        })
    }

    pub fn rastrigin(d: usize) -> Result<Self> {
        require_dim(d)?;
        Ok(Self {
            name: "rastrigin".into(),
            dim: d,
            minimizers: vec![vec![0.0; d]],
            modes: vec![],
            domain: (-5.12, 5.12),
            kind: ObjectiveKind::Rastrigin,
        })
    }

    pub fn multimodal_rastrigin_2d() -> Self {
        Self {
            name: "rastrigin3".into(),
            dim: 2,
            minimizers: vec![vec![0.0, 0.0], vec![3.0, 2.0], vec![-1.0, -3.5]],
            modes: vec![],
            domain: (-6.0, 6.0),
            kind: ObjectiveKind::MultimodalRastrigin,
        }
    }

    /// Three-minimizer Ackley product. Coordinates are indexed `i = 1..=d`;
    /// even `i` takes the first branch of each minimizer's pattern.
    pub fn multimodal_ackley(d: usize) -> Result<Self> {
        require_dim(d)?;
        let pattern = |even: f64, odd: f64| -> Vec<f64> {
            (1..=d).map(|i| if i % 2 == 0 { even } else { odd }).collect()
        };
        let centers = vec![pattern(-2.0, 1.0), pattern(2.0, -1.0), pattern(-1.0, -3.0)];
        Ok(Self {
            name: "multimodal-ackley".into(),
            dim: d,
            minimizers: centers.clone(),
            modes: vec![],
            domain: (-4.0, 4.0),
            kind: ObjectiveKind::MultimodalAckley { centers },
        })
    }

    /// `V = -log(exp(-(x1-a1)^2 - (x2-a2)^2/0.2) + exp(-(x1-b1)^2/8 - (x2-b2)^2/0.5)/2)`.
    ///
    /// `V` dips slightly below zero near `a` since the density exceeds 1 there.
    pub fn gaussian_mixture(a: [f64; 2], b: [f64; 2]) -> Self {
        Self {
            name: "gaussian-mixture".into(),
            dim: 2,
            minimizers: vec![],
            modes: vec![a.to_vec(), b.to_vec()],
            domain: (-6.0, 6.0),
            kind: ObjectiveKind::GaussianMixture { a, b },
        }
    }

    /// `V(x) = (x - m)^T P (x - m) / 2` with `P` symmetric positive definite.
    pub fn quadratic(mean: Vec<f64>, precision: DMatrix<f64>) -> Result<Self> {
        let d = mean.len();
        require_dim(d)?;
        if precision.nrows() != d || precision.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, got: precision.nrows() });
        }
        let scale = precision.abs().max().max(1.0);
        if (&precision - precision.transpose()).abs().max() > 1e-12 * scale {
            return Err(Error::InvalidInput("precision matrix is not symmetric".into()));
        }
        if precision.clone().cholesky().is_none() {
            return Err(Error::InvalidInput("precision matrix is not positive definite".into()));
        }
        Ok(Self {
            name: "quadratic".into(),
            dim: d,
            minimizers: vec![mean.clone()],
            modes: vec![mean.clone()],
            domain: (-5.0, 5.0),
            kind: ObjectiveKind::Quadratic { mean: DVector::from_vec(mean), precision },
        })
    }

    /// Classical Himmelblau function with its four minimizers.
    pub fn himmelblau() -> Self {
        Self {
            name: "himmelblau".into(),
            dim: 2,
            minimizers: vec![
                vec![3.0, 2.0],
                vec![-2.805118086952745, 3.131312518250573],
                vec![-3.779310253377747, -3.283185991286170],
                vec![3.584428340330492, -1.848126526964404],
            ],
            modes: vec![],
            domain: (-5.0, 5.0),
            kind: ObjectiveKind::Himmelblau,
        }
    }

    /// User-supplied potential, e.g. for non-Gaussian sampling targets.
    pub fn custom<F>(name: impl Into<String>, dim: usize, minimizers: Vec<Vec<f64>>, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        require_dim(dim)?;
        for z in &minimizers {
            check_dim(dim, z.len())?;
        }
        Ok(Self {
            name: name.into(),
            dim,
            minimizers,
            modes: vec![],
            domain: (-5.0, 5.0),
            kind: ObjectiveKind::Custom(Arc::new(f)),
        })
    }

    pub fn with_domain(mut self, low: f64, high: f64) -> Self {
        self.domain = (low, high);
        self
    }

    pub fn with_modes(mut self, modes: Vec<Vec<f64>>) -> Self {
        self.modes = modes;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Known global minimizers; empty for sampling targets.
    pub fn minimizers(&self) -> &[Vec<f64>] {
        &self.minimizers
    }

    /// Mode centers of sampling targets, used to partition samples.
    pub fn modes(&self) -> &[Vec<f64>] {
        &self.modes
    }

    /// Natural evaluation box `[low, high]^d`.
    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    pub fn kind(&self) -> &ObjectiveKind {
        &self.kind
    }

    /// Closed-form `(mean, precision)` for quadratic objectives.
    pub fn as_quadratic(&self) -> Option<(&DVector<f64>, &DMatrix<f64>)> {
        match &self.kind {
            ObjectiveKind::Quadratic { mean, precision } => Some((mean, precision)),
            _ => None,
        }
    }

    /// Evaluate without a dimension check.
    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        match &self.kind {
            ObjectiveKind::Ackley { shift } => ackley_at(x, Some(shift)),
            ObjectiveKind::Rastrigin => rastrigin_at(x, &vec![0.0; x.len()]),
            ObjectiveKind::MultimodalRastrigin => {
                rastrigin_at(x, &[0.0, 0.0]) * rastrigin_at(x, &[3.0, 2.0]) * rastrigin_at(x, &[-1.0, -3.5]) / 8.0
            }
            ObjectiveKind::MultimodalAckley { centers } => {
                centers.iter().map(|z| ackley_at(x, Some(z))).product()
            }
            ObjectiveKind::GaussianMixture { a, b } => {
                let l1 = -(x[0] - a[0]).powi(2) - (x[1] - a[1]).powi(2) / 0.2;
                let l2 = -(x[0] - b[0]).powi(2) / 8.0 - (x[1] - b[1]).powi(2) / 0.5 - 2f64.ln();
                let hi = l1.max(l2);
                -(hi + ((l1 - hi).exp() + (l2 - hi).exp()).ln())
            }
            ObjectiveKind::Quadratic { mean, precision } => {
                let d = mean.len();
                let mut acc = 0.0;
                for r in 0..d {
                    let yr = x[r] - mean[r];
                    let mut row = 0.0;
                    for c in 0..d {
                        row += precision[(r, c)] * (x[c] - mean[c]);
                    }
                    acc += yr * row;
                }
                0.5 * acc
            }
            ObjectiveKind::Himmelblau => {
                let (a, b) = (x[0], x[1]);
                (a * a + b - 11.0).powi(2) + (a + b * b - 7.0).powi(2)
            }
            ObjectiveKind::Custom(f) => f(x),
        }
    }

    pub fn eval_checked(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim, x.len())?;
        Ok(self.eval(x))
    }

    /// Central finite-difference gradient, step `1e-6 (1 + |x|)`.
    pub fn gradient_fd(&self, x: &[f64]) -> Vec<f64> {
        if let Some((mean, precision)) = self.as_quadratic() {
            let y = DVector::from_iterator(x.len(), x.iter().zip(mean.iter()).map(|(a, b)| a - b));
            return (precision * y).iter().copied().collect();
        }
        let h = 1e-6 * (1.0 + norm(x));
        let mut probe = x.to_vec();
        (0..x.len())
            .map(|n| {
                probe[n] = x[n] + h;
                let up = self.eval(&probe);
                probe[n] = x[n] - h;
                let down = self.eval(&probe);
                probe[n] = x[n];
                (up - down) / (2.0 * h)
            })
            .collect()
    }
}

fn require_dim(d: usize) -> Result<()> {
    if d == 0 {
        Err(Error::InvalidInput("dimension must be >= 1".into()))
    } else {
        Ok(())
    }
}

/// Registry of named benchmarks.
///
/// `shifted-ackley` uses the shift `(3, 2)` padded with zeros; the two
/// `gaussian-mixture*` targets differ only in the distance of their modes.
pub fn by_name(name: &str, dim: usize) -> Result<Objective> {
    let two_d = |o: Objective| -> Result<Objective> {
        if dim != 2 {
            Err(Error::InvalidInput(format!("{name} is only defined for dim = 2")))
        } else {
            Ok(o)
        }
    };
    match name {
        "ackley" => Objective::ackley(dim),
        "shifted-ackley" => {
            require_dim(dim)?;
            let mut shift = vec![0.0; dim];
            shift[0] = 3.0;
            if dim > 1 {
                shift[1] = 2.0;
            }
            Objective::shifted_ackley(dim, shift)
        }
        "rastrigin" => Objective::rastrigin(dim),
        "rastrigin3" | "multimodal-rastrigin" => two_d(Objective::multimodal_rastrigin_2d()),
        "multimodal-ackley" => Objective::multimodal_ackley(dim),
        "gaussian-mixture" => two_d(Objective::gaussian_mixture([0.0, 2.0], [0.0, -2.0])),
        "gaussian-mixture-close" => two_d(Objective::gaussian_mixture([0.0, 1.0], [0.0, -1.0])),
        "himmelblau" => two_d(Objective::himmelblau()),
        "quadratic" => {
            require_dim(dim)?;
            Objective::quadratic(vec![0.0; dim], DMatrix::identity(dim, dim))
        }
        _ => Err(Error::Unknown { kind: "objective", name: name.to_string() }),
    }
}

pub const REGISTRY: &[&str] = &[
    "ackley",
    "shifted-ackley",
    "rastrigin",
    "rastrigin3",
    "multimodal-ackley",
    "gaussian-mixture",
    "gaussian-mixture-close",
    "himmelblau",
    "quadratic",
];
