//! The predict / correct loop.
//!
//! Each iteration takes the expected moments of the current prior, samples a
//! population, reorders it, corrects the predicted mean and covariance, and
//! feeds the corrected pair back into the conjugate update as the batch
//! statistics (`n = k`, `x̄ = μ̂`, `C = Σ̂`).
//!
//! The conjugate update grows `ν` by `k` while `Ψ` grows by roughly `k Σ̂`,
//! so the expected covariance does not shrink on its own; contraction comes
//! from the covariance correction and from the mean-shift term `D`.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::benchmarks;
use crate::correction::{self, SortedPopulation};
use crate::error::{Error, Result};
use crate::prior::{self, PriorHyperparams, PriorVariant, SampleStats};
use crate::sampler::{self, EvaluatedPopulation, GaussianMoments};
use crate::spd::SpdMatrix;

/// RNG driving all sampling; seeded from the run's 64-bit seed.
pub type RunRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    /// Weighted mean of the reordered population, minus the Monte Carlo bias.
    One,
    /// Recentre on the best sampled point.
    Two,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    TargetReached,
    MaxIterations,
    Stagnation,
    NumericalFailure,
}

impl StopReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            StopReason::TargetReached => "target_reached",
            StopReason::MaxIterations => "max_iterations",
            StopReason::Stagnation => "stagnation",
            StopReason::NumericalFailure => "numerical_failure",
        }
    }
}

/// `4 + ⌊3 ln p⌋`.
pub fn default_popsize(dim: usize) -> usize {
    4 + (3.0 * (dim as f64).ln()).floor() as usize
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Benchmark id; only used by [`run`].
    pub function: String,
    pub dim: usize,
    pub start: Vec<f64>,
    pub sigma0: f64,
    pub popsize: usize,
    pub strategy: Strategy,
    pub variant: PriorVariant,
    pub max_iters: usize,
    /// Stop once best fitness drops below `known minimum + tol`.
    pub tol: f64,
    pub stagnation_window: usize,
    pub stagnation_tol: f64,
    pub seed: u64,
    /// Evaluate the population on the rayon pool. Results do not depend on it.
    pub parallel_eval: bool,
}

impl RunConfig {
    pub fn new(function: impl Into<String>, dim: usize) -> Self {
        RunConfig {
            function: function.into(),
            dim,
            start: vec![10.0; dim],
            sigma0: 1.0,
            popsize: default_popsize(dim.max(1)),
            strategy: Strategy::Two,
            variant: PriorVariant::Niw,
            max_iters: 1000,
            tol: 1e-8,
            stagnation_window: 50,
            stagnation_tol: 1e-12,
            seed: 0,
            parallel_eval: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.dim == 0 {
            return bad("dimension must be at least 1".into());
        }
        if self.start.len() != self.dim {
            return bad(format!(
                "start point has {} coordinates, dimension is {}",
                self.start.len(),
                self.dim
            ));
        }
        if self.start.iter().any(|v| !v.is_finite()) {
            return bad("start point must be finite".into());
        }
        if !(self.sigma0 > 0.0 && self.sigma0.is_finite()) {
            return bad(format!("sigma0 must be positive, got {}", self.sigma0));
        }
        if self.popsize == 0 {
            return bad("population size must be at least 1".into());
        }
        if self.max_iters == 0 {
            return bad("max iterations must be at least 1".into());
        }
        if self.tol.is_nan() || self.tol < 0.0 {
            return bad(format!("tolerance must be nonnegative, got {}", self.tol));
        }
        if self.stagnation_window == 0 {
            return bad("stagnation window must be at least 1".into());
        }
        self.variant.validate()
    }
}

/// One row of a run's trace, recorded after the posterior update.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationTrace {
    /// 1-based.
    pub iter: usize,
    pub best_f_iter: f64,
    pub best_f_so_far: f64,
    pub best_x_so_far: DVector<f64>,
    /// Mean of the updated prior.
    pub mean: DVector<f64>,
    /// `ln det` of the updated prior's expected covariance.
    pub logdet_cov: f64,
    pub lambda: f64,
    pub nu: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub best_x: DVector<f64>,
    pub best_f: f64,
    pub iterations: usize,
    pub stop_reason: StopReason,
    pub trace: Vec<IterationTrace>,
}

/// Everything computed inside one iteration.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub moments: GaussianMoments,
    pub population: EvaluatedPopulation,
    pub sorted: SortedPopulation,
    pub corrected_mean: DVector<f64>,
    pub corrected_cov: SpdMatrix,
    pub best_index: usize,
}

impl StepOutcome {
    pub fn best_fitness(&self) -> f64 {
        self.population.fitness[self.best_index]
    }
}

fn evaluate_points<F>(objective: &F, points: &[DVector<f64>], parallel: bool) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if parallel {
        points.par_iter().map(|x| objective(x.as_slice())).collect()
    } else {
        points.iter().map(|x| objective(x.as_slice())).collect()
    }
}

fn numerical(e: Error) -> Error {
    match e {
        Error::NumericalFailure(_) => e,
        other => Error::NumericalFailure(Box::new(other)),
    }
}

/// One predict / correct iteration from `prior`.
pub fn step<F>(
    prior: &PriorHyperparams,
    strategy: Strategy,
    popsize: usize,
    objective: &F,
    rng: &mut RunRng,
    parallel_eval: bool,
) -> Result<(PriorHyperparams, StepOutcome)>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let moments = prior::expected_moments(prior).map_err(numerical)?;
    let points = sampler::sample(&moments, popsize, rng).map_err(numerical)?;
    let fitness = evaluate_points(objective, &points, parallel_eval);
    let population = EvaluatedPopulation::evaluate(&moments, points, fitness).map_err(numerical)?;
    let sorted = correction::double_sort(&population);

    let corrected_mean = match strategy {
        Strategy::One => correction::strategy_one_mean(&sorted, &population, &moments.mean)?,
        Strategy::Two => correction::strategy_two_mean(&population),
    };
    let corrected_cov = correction::corrected_covariance(&sorted, &population, &moments.covariance)?;

    let stats = SampleStats {
        n: popsize,
        xbar: corrected_mean.clone(),
        c: corrected_cov.as_matrix().clone(),
    };
    let posterior = prior::posterior_update(prior, &stats).map_err(numerical)?;
    let best_index = sorted.pairs[0].0;
    Ok((
        posterior,
        StepOutcome {
            moments,
            population,
            sorted,
            corrected_mean,
            corrected_cov,
            best_index,
        },
    ))
}

/// Stateful driver around [`step`] for one seeded run.
pub struct Optimizer<F> {
    config: RunConfig,
    objective: F,
    target: Option<f64>,
    prior: PriorHyperparams,
    rng: RunRng,
    best: Option<(f64, DVector<f64>)>,
    trace: Vec<IterationTrace>,
}

impl<F> Optimizer<F>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    pub fn new(config: RunConfig, objective: F) -> Result<Self> {
        config.validate()?;
        if config.popsize == 1 {
            log::warn!("population size 1 gives degenerate covariance statistics");
        }
        let prior = PriorHyperparams::initial(
            DVector::from_column_slice(&config.start),
            config.sigma0,
            config.variant,
        )?;
        let rng = RunRng::seed_from_u64(config.seed);
        Ok(Optimizer {
            config,
            objective,
            target: None,
            prior,
            rng,
            best: None,
            trace: Vec::new(),
        })
    }

    /// Stop as soon as the best fitness is strictly below `target`.
    pub fn with_target(mut self, target: f64) -> Self {
        self.target = Some(target);
        self
    }

    pub fn prior(&self) -> &PriorHyperparams {
        &self.prior
    }

    pub fn trace(&self) -> &[IterationTrace] {
        &self.trace
    }

    /// Runs one iteration and appends its trace row.
    pub fn step(&mut self) -> Result<&IterationTrace> {
        let (posterior, outcome) = step(
            &self.prior,
            self.config.strategy,
            self.config.popsize,
            &self.objective,
            &mut self.rng,
            self.config.parallel_eval,
        )?;
        let expected = prior::expected_moments(&posterior).map_err(numerical)?;
        let logdet_cov = expected.covariance.log_det().map_err(numerical)?;

        let f_iter = outcome.best_fitness();
        let improved = match &self.best {
            None => true,
            Some((best, _)) => f_iter < *best,
        };
        if improved {
            let x = outcome.population.points[outcome.best_index].clone();
            self.best = Some((f_iter, x));
        }
        let (best_f, best_x) = self.best.clone().expect("best is set after a step");

        self.prior = posterior;
        self.trace.push(IterationTrace {
            iter: self.trace.len() + 1,
            best_f_iter: f_iter,
            best_f_so_far: best_f,
            best_x_so_far: best_x,
            mean: self.prior.mu.clone(),
            logdet_cov,
            lambda: self.prior.lambda,
            nu: self.prior.nu,
        });
        Ok(self.trace.last().unwrap())
    }

    fn stagnated(&self) -> bool {
        let window = self.config.stagnation_window;
        let t = self.trace.len();
        if t <= window {
            return false;
        }
        let then = self.trace[t - 1 - window].best_f_so_far;
        let now = self.trace[t - 1].best_f_so_far;
        then - now < self.config.stagnation_tol
    }

    pub fn run(mut self) -> RunResult {
        let stop_reason = loop {
            if let Err(e) = self.step() {
                log::warn!("stopping after {} iterations: {e}", self.trace.len());
                break StopReason::NumericalFailure;
            }
            let last = self.trace.last().unwrap();
            log::debug!("iter {} best {:e}", last.iter, last.best_f_so_far);
            if matches!(self.target, Some(t) if last.best_f_so_far < t) {
                break StopReason::TargetReached;
            }
            if self.trace.len() >= self.config.max_iters {
                break StopReason::MaxIterations;
            }
            if self.stagnated() {
                break StopReason::Stagnation;
            }
        };
        let (best_f, best_x) = match self.best {
            Some(b) => b,
            None => {
                let x = DVector::from_column_slice(&self.config.start);
                ((self.objective)(x.as_slice()), x)
            }
        };
        RunResult {
            best_x,
            best_f,
            iterations: self.trace.len(),
            stop_reason,
            trace: self.trace,
        }
    }
}

/// Runs the configured benchmark until a stopping rule fires.
pub fn run(config: &RunConfig) -> Result<RunResult> {
    let function = benchmarks::lookup(&config.function)?;
    function.check_dim(config.dim)?;
    let target = function.known_minimum(config.dim).value + config.tol;
    let optimizer = Optimizer::new(config.clone(), |x: &[f64]| function.eval_raw(x))?;
    Ok(optimizer.with_target(target).run())
}
