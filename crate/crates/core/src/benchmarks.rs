//! Benchmark objectives: cone, Schwefel 2, Rastrigin, Schwefel 1, Eggholder.

use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};

/// Where a recorded optimum comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    /// Follows directly from the formula.
    Analytic,
    /// Located numerically (grid scan + local refinement).
    Numerical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arity {
    Any,
    Exactly(usize),
}

/// Known minimum of a benchmark for a given dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct KnownMinimum {
    pub value: f64,
    pub minimizer: Option<Vec<f64>>,
    pub provenance: Provenance,
}

#[derive(Clone, Copy)]
pub struct BenchmarkFunction {
    pub id: &'static str,
    pub arity: Arity,
    eval: fn(&[f64]) -> f64,
    minimum: fn(usize) -> KnownMinimum,
}

impl fmt::Debug for BenchmarkFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BenchmarkFunction")
            .field("id", &self.id)
            .field("arity", &self.arity)
            .finish()
    }
}

impl BenchmarkFunction {
    pub fn check_dim(&self, dim: usize) -> Result<()> {
        match self.arity {
            Arity::Exactly(required) if dim != required => Err(Error::ArityMismatch {
                id: self.id.to_string(),
                required,
                got: dim,
            }),
            _ if dim == 0 => Err(Error::InvalidConfig("dimension must be at least 1".into())),
            _ => Ok(()),
        }
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x.len())?;
        Ok((self.eval)(x))
    }

    /// Unchecked evaluation for the optimizer's inner loop.
    pub fn eval_raw(&self, x: &[f64]) -> f64 {
        (self.eval)(x)
    }

    pub fn known_minimum(&self, dim: usize) -> KnownMinimum {
        (self.minimum)(dim)
    }

    /// `(10, 10, ..., 10)`.
    pub fn suggested_start(&self, dim: usize) -> Vec<f64> {
        vec![10.0; dim]
    }
}

pub fn cone(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn schwefel2(x: &[f64]) -> f64 {
    let sum: f64 = x.iter().map(|v| v.abs()).sum();
    let prod: f64 = x.iter().map(|v| v.abs()).product();
    sum + prod
}

pub fn rastrigin(x: &[f64]) -> f64 {
    10.0 * x.len() as f64
        + x.iter()
            .map(|v| v * v - 10.0 * (2.0 * PI * v).cos())
            .sum::<f64>()
}

/// Schwefel 1 with every coordinate outside `(-500, 500)` contributing the
/// constant `500 sin(√500)`.
pub fn schwefel1(x: &[f64]) -> f64 {
    let clipped = 500.0 * 500f64.sqrt().sin();
    418.9829 * x.len() as f64
        - x.iter()
            .map(|&v| {
                if v.abs() < 500.0 {
                    v * v.abs().sqrt().sin()
                } else {
                    clipped
                }
            })
            .sum::<f64>()
}

/// Two-dimensional Eggholder; `x[0]` is `x`, `x[1]` is `y`.
pub fn eggholder(x: &[f64]) -> f64 {
    let (a, b) = (x[0], x[1] + 47.0);
    -b * (a / 2.0 + b).abs().sqrt().sin() - a * (a - b).abs().sqrt().sin()
}

// Minimizer of one Schwefel 1 coordinate, found by grid scan and golden-section
// refinement over (-500, 500); see the benchmarks tests.
const SCHWEFEL1_ARGMIN: f64 = 420.968_748_785_682_75;
// Eggholder minimum on [-512, 512]², found the same way.
const EGGHOLDER_ARGMIN: [f64; 2] = [512.0, 404.231_804_993_864_6];

fn zero_min(dim: usize) -> KnownMinimum {
    KnownMinimum {
        value: 0.0,
        minimizer: Some(vec![0.0; dim]),
        provenance: Provenance::Analytic,
    }
}

fn schwefel1_min(dim: usize) -> KnownMinimum {
    let x = vec![SCHWEFEL1_ARGMIN; dim];
    KnownMinimum {
        value: schwefel1(&x),
        minimizer: Some(x),
        provenance: Provenance::Numerical,
    }
}

fn eggholder_min(_dim: usize) -> KnownMinimum {
    KnownMinimum {
        value: eggholder(&EGGHOLDER_ARGMIN),
        minimizer: Some(EGGHOLDER_ARGMIN.to_vec()),
        provenance: Provenance::Numerical,
    }
}

static REGISTRY: [BenchmarkFunction; 5] = [
    BenchmarkFunction {
        id: "cone",
        arity: Arity::Any,
        eval: cone,
        minimum: zero_min,
    },
    BenchmarkFunction {
        id: "schwefel2",
        arity: Arity::Any,
        eval: schwefel2,
        minimum: zero_min,
    },
    BenchmarkFunction {
        id: "rastrigin",
        arity: Arity::Any,
        eval: rastrigin,
        minimum: zero_min,
    },
    BenchmarkFunction {
        id: "schwefel1",
        arity: Arity::Any,
        eval: schwefel1,
        minimum: schwefel1_min,
    },
    BenchmarkFunction {
        id: "eggholder",
        arity: Arity::Exactly(2),
        eval: eggholder,
        minimum: eggholder_min,
    },
];

/// All benchmarks, in a fixed order.
pub fn registry() -> &'static [BenchmarkFunction] {
    &REGISTRY
}

pub fn lookup(id: &str) -> Result<&'static BenchmarkFunction> {
    REGISTRY
        .iter()
        .find(|f| f.id == id)
        .ok_or_else(|| Error::UnknownFunction(id.to_string()))
}

/// Evaluates benchmark `id` at `x`.
pub fn evaluate(id: &str, x: &[f64]) -> Result<f64> {
    lookup(id)?.evaluate(x)
}
