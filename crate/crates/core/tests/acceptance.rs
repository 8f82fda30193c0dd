//! Acceptance criteria. Each test prints one `[PASS]` / `[FAIL]` line.
//!
//! Run with `cargo test --release --test acceptance -- --nocapture --test-threads 1`.

mod common;

use std::fs;
use std::process::Command;
use std::time::Instant;

use bcmaes::correction::{corrected_covariance, double_sort, strategy_one_mean, strategy_two_mean};
use bcmaes::prior::{compute_stats, expected_moments, posterior_update};
use bcmaes::sampler::{self, EvaluatedPopulation, GaussianMoments};
use bcmaes::spd::{inverse_convexity_gap, min_eigenvalue};
use bcmaes::{run, PriorHyperparams, PriorVariant, RunConfig, Strategy};
use common::{gauss_vec, random_spd};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(name: &str, passed: bool, detail: String) {
    println!("[{}] {name}: {detail}", if passed { "PASS" } else { "FAIL" });
    assert!(passed, "{name}: {detail}");
}

fn random_prior(rng: &mut ChaCha8Rng, p: usize) -> PriorHyperparams {
    PriorHyperparams::new(
        gauss_vec(rng, p) * 3.0,
        rng.random_range(0.1..10.0),
        p as f64 + 1.0 + rng.random_range(0.01..30.0),
        random_spd(rng, p),
        PriorVariant::Niw,
    )
    .unwrap()
}

/// Conjugate update written out over plain nested vectors from the raw batch.
fn brute_force_posterior(
    mu0: &[f64],
    lambda0: f64,
    nu0: f64,
    psi0: &[Vec<f64>],
    xs: &[Vec<f64>],
) -> (Vec<f64>, f64, f64, Vec<Vec<f64>>) {
    let p = mu0.len();
    let n = xs.len() as f64;
    let mut xbar = vec![0.0; p];
    for x in xs {
        for j in 0..p {
            xbar[j] += x[j];
        }
    }
    for v in &mut xbar {
        *v /= n;
    }
    let mut c = vec![vec![0.0; p]; p];
    for x in xs {
        for a in 0..p {
            for b in 0..p {
                c[a][b] += (x[a] - xbar[a]) * (x[b] - xbar[b]) / n;
            }
        }
    }
    // D exactly as written, λ₀ n / (n (λ₀ + n))
    let dcoef = lambda0 * n / (n * (lambda0 + n));
    let mut psi = vec![vec![0.0; p]; p];
    for a in 0..p {
        for b in 0..p {
            let d = dcoef * (xbar[a] - mu0[a]) * (xbar[b] - mu0[b]);
            psi[a][b] = psi0[a][b] + n * c[a][b] + n * d;
        }
    }
    let mu = (0..p).map(|j| (lambda0 * mu0[j] + n * xbar[j]) / (lambda0 + n)).collect();
    (mu, lambda0 + n, nu0 + n, psi)
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

#[test]
fn posterior_oracle_equivalence() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);
    let mut worst = 0.0f64;
    for i in 0..200 {
        let p = [1, 2, 3, 5][i % 4];
        let prior = random_prior(&mut rng, p);
        let n = rng.random_range(1..25);
        let offset = gauss_vec(&mut rng, p) * 4.0;
        let xs: Vec<DVector<f64>> = (0..n).map(|_| gauss_vec(&mut rng, p) * 2.0 + &offset).collect();
        let post = posterior_update(&prior, &compute_stats(&xs, None).unwrap()).unwrap();

        let psi0: Vec<Vec<f64>> = (0..p).map(|a| (0..p).map(|b| prior.psi.as_matrix()[(a, b)]).collect()).collect();
        let raw: Vec<Vec<f64>> = xs.iter().map(|x| x.iter().copied().collect()).collect();
        let (mu, lambda, nu, psi) =
            brute_force_posterior(prior.mu.as_slice(), prior.lambda, prior.nu, &psi0, &raw);
        for (j, row) in psi.iter().enumerate() {
            worst = worst.max(rel_err(post.mu[j], mu[j]));
            for (b, &expected) in row.iter().enumerate() {
                worst = worst.max(rel_err(post.psi.as_matrix()[(j, b)], expected));
            }
        }
        worst = worst.max(rel_err(post.lambda, lambda)).max(rel_err(post.nu, nu));
    }
    let secs = started.elapsed().as_secs_f64();
    report(
        "posterior oracle equivalence",
        worst <= 1e-10 && secs < 5.0,
        format!("200 instances, max rel err {worst:.2e} (tol 1e-10), {secs:.2}s (limit 5s)"),
    );
}

#[test]
fn mixture_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let p = rng.random_range(1..6);
        let base = random_prior(&mut rng, p);
        let cov = |variant| {
            let mut prior = base.clone();
            prior.variant = variant;
            expected_moments(&prior).unwrap().covariance.into_matrix()
        };
        let niw = cov(PriorVariant::Niw);
        let nw = cov(PriorVariant::Nw);
        for w in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let mix = cov(PriorVariant::Mixture(w));
            let blend = &niw * w + &nw * (1.0 - w);
            worst = worst.max((mix - blend).amax());
        }
    }
    report(
        "mixture identity",
        worst <= 1e-12,
        format!("100 priors x 5 weights, max abs diff {worst:.2e} (tol 1e-12)"),
    );
}

#[test]
fn niw_dominates_nw() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = f64::INFINITY;
    for _ in 0..100 {
        let p = rng.random_range(1..6);
        let mut prior = random_prior(&mut rng, p);
        let niw = expected_moments(&prior).unwrap().covariance.into_matrix();
        prior.variant = PriorVariant::Nw;
        let nw = expected_moments(&prior).unwrap().covariance.into_matrix();
        worst = worst.min(min_eigenvalue(&(niw - nw)));
    }
    report(
        "NIW covariance dominates NW",
        worst >= -1e-12,
        format!("100 priors, min eigenvalue of difference {worst:.3e} (floor -1e-12)"),
    );
}

#[test]
fn matrix_inverse_convexity() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst = f64::INFINITY;
    for i in 0..300 {
        let p = [2, 3, 5][i % 3];
        let m = random_spd(&mut rng, p);
        let n = random_spd(&mut rng, p);
        let lambda = rng.random_range(0.0..=1.0);
        let (_, min) = inverse_convexity_gap(&m, &n, lambda).unwrap();
        worst = worst.min(min);
    }
    report(
        "matrix inverse convexity",
        worst >= -1e-10,
        format!("300 triples, min eigenvalue of gap {worst:.3e} (floor -1e-10)"),
    );
}

#[test]
fn strategy_degenerate_invariants() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let p = rng.random_range(1..5);
        let moments = GaussianMoments::new(gauss_vec(&mut rng, p), random_spd(&mut rng, p)).unwrap();

        // k = 1
        let x = sampler::sample(&moments, 1, &mut rng).unwrap();
        let single = EvaluatedPopulation::evaluate(&moments, x, vec![rng.random()]).unwrap();
        let s = double_sort(&single);
        worst = worst.max((strategy_one_mean(&s, &single, &moments.mean).unwrap() - &moments.mean).amax());
        worst = worst.max((corrected_covariance(&s, &single, &moments.covariance).unwrap().into_matrix() - moments.covariance.as_matrix()).amax());

        // fitness ranking equal to density ranking: fitness = -log density
        let k = rng.random_range(2..20);
        let pts = sampler::sample(&moments, k, &mut rng).unwrap();
        let log_d = sampler::log_densities(&moments, &pts).unwrap();
        let fitness = log_d.iter().map(|l| -l).collect();
        let pop = EvaluatedPopulation::evaluate(&moments, pts, fitness).unwrap();
        let s = double_sort(&pop);
        worst = worst.max((strategy_one_mean(&s, &pop, &moments.mean).unwrap() - &moments.mean).amax());
        worst = worst.max((corrected_covariance(&s, &pop, &moments.covariance).unwrap().into_matrix() - moments.covariance.as_matrix()).amax());
        // strategy two on a single point returns it
        worst = worst.max((strategy_two_mean(&single) - &single.points[0]).amax());
    }
    report(
        "strategy degenerate invariants",
        worst <= 1e-14,
        format!("k=1 and aligned rankings, max deviation {worst:.2e} (tol 1e-14)"),
    );
}

#[test]
fn cli_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for name in ["first.csv", "second.csv"] {
        let path = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_bcmaes"))
            .args(["run", "--function", "rastrigin", "--dim", "2", "--strategy", "s2", "--seed", "42", "--out"])
            .arg(&path)
            .output()
            .unwrap()
            .status;
        assert!(status.success());
        files.push(fs::read(&path).unwrap());
    }
    report(
        "determinism",
        files[0] == files[1] && !files[0].is_empty(),
        format!("two runs, {} bytes each, identical: {}", files[0].len(), files[0] == files[1]),
    );
}

struct SeedSweep {
    finals: Vec<f64>,
    successes: usize,
    secs: f64,
}

fn sweep(function: &str, strategy: Strategy, max_iters: usize, tol: f64, threshold: f64) -> SeedSweep {
    let started = Instant::now();
    let finals: Vec<f64> = (0..10)
        .map(|seed| {
            let mut c = RunConfig::new(function, 2);
            c.strategy = strategy;
            c.max_iters = max_iters;
            c.tol = tol;
            c.seed = seed;
            run(&c).unwrap().best_f
        })
        .collect();
    SeedSweep {
        successes: finals.iter().filter(|&&f| f < threshold).count(),
        finals,
        secs: started.elapsed().as_secs_f64(),
    }
}

fn median(v: &[f64]) -> f64 {
    let mut v = v.to_vec();
    v.sort_by(f64::total_cmp);
    0.5 * (v[v.len() / 2 - 1] + v[v.len() / 2])
}

#[test]
fn convergence_cone() {
    let s = sweep("cone", Strategy::Two, 500, 1e-6, 1e-6);
    report(
        "desk-scale convergence: cone",
        s.successes >= 9 && s.secs < 10.0,
        format!(
            "{}/10 seeds below 1e-6 within 500 iterations (need 9), median best {:.3e}, {:.2}s (limit 10s)",
            s.successes,
            median(&s.finals),
            s.secs
        ),
    );
}

#[test]
fn convergence_schwefel2() {
    let s = sweep("schwefel2", Strategy::Two, 1000, 1e-4, 1e-4);
    report(
        "desk-scale convergence: schwefel2",
        s.successes >= 8,
        format!(
            "{}/10 seeds below 1e-4 within 1000 iterations (need 8), median best {:.3e}",
            s.successes,
            median(&s.finals)
        ),
    );
}

#[test]
fn convergence_rastrigin() {
    let s = sweep("rastrigin", Strategy::Two, 1000, 1.0, 1.0);
    report(
        "desk-scale convergence: rastrigin",
        s.successes >= 6,
        format!(
            "{}/10 seeds below 1.0 (need 6), median best {:.3e}",
            s.successes,
            median(&s.finals)
        ),
    );
}

#[test]
fn strategy_two_beats_strategy_one_on_cone() {
    let s1 = sweep("cone", Strategy::One, 200, 0.0, 0.0);
    let s2 = sweep("cone", Strategy::Two, 200, 0.0, 0.0);
    let (m1, m2) = (median(&s1.finals), median(&s2.finals));
    report(
        "S2 vs S1 ordering on cone",
        m2 <= m1,
        format!("median best after 200 iterations: S2 {m2:.3e}, S1 {m1:.3e}"),
    );
}

#[test]
fn counter_laws() {
    let mut rows = 0;
    let mut violations = 0;
    for function in ["cone", "schwefel2", "rastrigin", "schwefel1", "eggholder"] {
        for (strategy, variant) in [
            (Strategy::One, PriorVariant::Niw),
            (Strategy::Two, PriorVariant::Nw),
            (Strategy::Two, PriorVariant::Mixture(0.5)),
        ] {
            let mut c = RunConfig::new(function, 2);
            c.strategy = strategy;
            c.variant = variant;
            c.max_iters = 300;
            c.seed = 5;
            let r = run(&c).unwrap();
            let k = c.popsize as f64;
            // defaults: λ₀ = 1, ν₀ = p + 4
            let (lambda0, nu0) = (1.0, 6.0);
            for (t, row) in r.trace.iter().enumerate() {
                let t = (t + 1) as f64;
                rows += 1;
                if row.lambda != lambda0 + t * k || row.nu != nu0 + t * k {
                    violations += 1;
                }
            }
        }
    }
    report(
        "counter laws",
        violations == 0,
        format!("{rows} trace rows checked, {violations} violations"),
    );
}
