//! Independent oracles and the check suites behind the `verify` subcommand.
//!
//! Every check returns a [`Check`] instead of panicking so that a caller can
//! print one line per property and decide what to do with failures.

use std::path::Path;
use std::time::Instant;

use crate::aggregators::{self, AggregatorConfig, AggregatorKind, RobustnessProbe};
use crate::attacks::{AttackKind, AttackSpec};
use crate::engine::{self, Algorithm, RunConfig, Schedule};
use crate::error::Result;
use crate::harness::{self, GridSpec, Sweep};
use crate::planner::{self, BoundParams};
use crate::tasks::{DatasetSpec, MlpSpec, QuadraticSpec, Task, TaskSpec};
use crate::vecmath::{ParamVector, RngStream};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl Check {
    fn timed(name: &str, f: impl FnOnce() -> Result<(bool, String)>) -> Check {
        let start = Instant::now();
        let (passed, detail) = match f() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        Check { name: name.to_string(), passed, detail, seconds: start.elapsed().as_secs_f64() }
    }

    pub fn line(&self) -> String {
        format!(
            "{} {:<28} {:>8.3}s  {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.seconds,
            self.detail
        )
    }
}

pub mod oracles {
    use super::*;

    /// Krum by exhaustive enumeration: each score is the minimum over all
    /// `(m - f - 2)`-subsets of the other inputs of the summed squared
    /// distances. Returns the lowest index among minimal scores.
    pub fn krum_bruteforce(xs: &[ParamVector], f: usize) -> usize {
        let m = xs.len();
        let k = m - f - 2;
        let mut best = (usize::MAX, f64::INFINITY);
        for i in 0..m {
            let others: Vec<usize> = (0..m).filter(|&j| j != i).collect();
            let mut score = f64::INFINITY;
            for mask in 0u32..(1 << others.len()) {
                if mask.count_ones() as usize != k {
                    continue;
                }
                let s: f64 = others
                    .iter()
                    .enumerate()
                    .filter(|(b, _)| mask & (1 << b) != 0)
                    .map(|(_, &j)| {
                        xs[i].as_slice().iter().zip(xs[j].as_slice()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
                    })
                    .sum();
                score = score.min(s);
            }
            if score < best.1 {
                best = (i, score);
            }
        }
        best.0
    }

    fn distance_sum_2d(p: (f64, f64), xs: &[ParamVector]) -> f64 {
        xs.iter().map(|x| ((p.0 - x.get(0)).powi(2) + (p.1 - x.get(1)).powi(2)).sqrt()).sum()
    }

    /// Geometric median in 2-D: a 41×41 grid over the bounding box, then
    /// repeated re-gridding around the best cell.
    pub fn geomed_grid_2d(xs: &[ParamVector]) -> (f64, f64) {
        let (mut lo0, mut hi0, mut lo1, mut hi1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for x in xs {
            lo0 = lo0.min(x.get(0));
            hi0 = hi0.max(x.get(0));
            lo1 = lo1.min(x.get(1));
            hi1 = hi1.max(x.get(1));
        }
        let n = 41;
        let mut center = (0.5 * (lo0 + hi0), 0.5 * (lo1 + hi1));
        let mut half = (0.5 * (hi0 - lo0) + 1e-9, 0.5 * (hi1 - lo1) + 1e-9);
        for _ in 0..40 {
            let mut best = (center, distance_sum_2d(center, xs));
            for i in 0..n {
                for j in 0..n {
                    let p = (
                        center.0 - half.0 + 2.0 * half.0 * i as f64 / (n - 1) as f64,
                        center.1 - half.1 + 2.0 * half.1 * j as f64 / (n - 1) as f64,
                    );
                    let v = distance_sum_2d(p, xs);
                    if v < best.1 {
                        best = (p, v);
                    }
                }
            }
            center = best.0;
            half = (half.0 * 0.25, half.1 * 0.25);
        }
        center
    }

    /// Coordinate-wise median by insertion sort.
    pub fn cm_sort(xs: &[ParamVector]) -> ParamVector {
        let d = xs[0].dim();
        let n = xs.len();
        let mut out = Vec::with_capacity(d);
        for j in 0..d {
            let mut col: Vec<f64> = Vec::with_capacity(n);
            for x in xs {
                let v = x.get(j);
                let pos = col.iter().position(|&c| c > v).unwrap_or(col.len());
                col.insert(pos, v);
            }
            out.push(if n % 2 == 1 { col[n / 2] } else { 0.5 * (col[n / 2 - 1] + col[n / 2]) });
        }
        ParamVector::new(out).expect("finite inputs")
    }

    /// Central finite-difference gradient of the task loss.
    pub fn fd_gradient(task: &Task, w: &ParamVector, h: f64) -> Result<ParamVector> {
        let mut g = Vec::with_capacity(w.dim());
        let mut x = w.clone().into_inner();
        for i in 0..x.len() {
            let orig = x[i];
            let step = h * orig.abs().max(1.0);
            x[i] = orig + step;
            let up = task.loss(&ParamVector::new(x.clone())?)?;
            x[i] = orig - step;
            let down = task.loss(&ParamVector::new(x.clone())?)?;
            x[i] = orig;
            g.push((up - down) / (2.0 * step));
        }
        ParamVector::new(g)
    }
}

fn log_uniform(s: &mut RngStream, lo: f64, hi: f64) -> f64 {
    (lo.ln() + (hi.ln() - lo.ln()) * s.uniform()).exp()
}

/// Bound parameters drawn from the ranges used by the planner checks:
/// `δ ∈ (0, 0.45)`, `c ∈ [0.1, 4]`, `m ∈ {4..64}`, `C ∈ [10⁴, 10⁹]`,
/// `L, F₀ ∈ [0.5, 2]`, `σ² ∈ [10, 10³]`.
pub fn random_bound_params(s: &mut RngStream) -> BoundParams {
    let delta = 0.45 * (1e-3 + (1.0 - 2e-3) * s.uniform());
    BoundParams {
        l_smooth: log_uniform(s, 0.5, 2.0),
        sigma: log_uniform(s, 10.0, 1e3).sqrt(),
        f0: log_uniform(s, 0.5, 2.0),
        c: 0.1 + 3.9 * s.uniform(),
        delta,
        m: 4 + s.index(61),
        budget: log_uniform(s, 1e4, 1e9),
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Closed-form optimal batches against golden-section search.
pub fn check_closed_form(draws: usize, seed: u64) -> Check {
    Check::timed("closed-form-vs-numeric", || {
        let mut s = RngStream::with_tag(seed, 0, 0, 0xC1);
        let (lo, hi) = planner::ARGMIN_RANGE;
        let (mut worst_m, mut worst_nm) = (0.0f64, 0.0f64);
        for _ in 0..draws {
            let p = random_bound_params(&mut s);
            let closed = planner::optimal_batch_byzsgdm(&p)?.batch;
            let numeric = planner::numeric_argmin(|b| planner::bound_byzsgdm_u(b, &p).unwrap_or(f64::INFINITY), lo, hi, planner::ARGMIN_ITERS);
            worst_m = worst_m.max(rel(numeric, closed));
            let closed_nm = planner::optimal_batch_byzsgdnm(&p)?.batch;
            let numeric_nm = planner::numeric_argmin(
                |b| planner::bound_byzsgdnm_at_budget(b, &p).unwrap_or(f64::INFINITY),
                lo,
                hi,
                planner::ARGMIN_ITERS,
            );
            worst_nm = worst_nm.max(rel(numeric_nm, closed_nm));
        }
        Ok((
            worst_m <= 1e-6 && worst_nm <= 1e-6,
            format!("{draws} draws, max rel err B* {worst_m:.2e}, B~* {worst_nm:.2e}"),
        ))
    })
}

/// `B*(δ)` and `B̃*(δ)` strictly increase on a δ grid.
pub fn check_monotonicity(draws: usize, seed: u64) -> Check {
    Check::timed("monotone-in-delta", || {
        let mut s = RngStream::with_tag(seed, 0, 0, 0xC2);
        let grid: Vec<f64> = (1..=50).map(|i| 0.45 * i as f64 / 51.0).collect();
        let mut violations = 0;
        for _ in 0..draws {
            let base = random_bound_params(&mut s);
            let mut prev = (f64::NEG_INFINITY, f64::NEG_INFINITY);
            for &delta in &grid {
                let p = BoundParams { delta, ..base };
                let cur = (planner::optimal_batch_byzsgdm(&p)?.batch, planner::optimal_batch_byzsgdnm(&p)?.batch);
                if cur.0 <= prev.0 || cur.1 <= prev.1 {
                    violations += 1;
                }
                prev = cur;
            }
        }
        Ok((violations == 0, format!("{draws} draws x 50 deltas, {violations} violations")))
    })
}

/// `U(B)` has positive second differences on a 200-point log grid.
pub fn check_convexity(draws: usize, seed: u64) -> Check {
    Check::timed("convexity", || {
        let mut s = RngStream::with_tag(seed, 0, 0, 0xC3);
        let grid = planner::log_grid(1e-2, 1e6, 200);
        let mut failures = 0;
        for _ in 0..draws {
            let p = random_bound_params(&mut s);
            if !planner::convexity_check(&p, &grid)?.all_positive {
                failures += 1;
            }
        }
        Ok((failures == 0, format!("{draws} draws, {failures} non-convex")))
    })
}

fn random_vectors(s: &mut RngStream, m: usize, d: usize) -> Vec<ParamVector> {
    (0..m).map(|_| ParamVector::new(s.normal_vec(d)).expect("finite")).collect()
}

/// Krum, geometric median and coordinate median against their oracles.
pub fn check_aggregator_oracles(seed: u64) -> Check {
    Check::timed("aggregator-oracles", || {
        let mut s = RngStream::with_tag(seed, 0, 0, 0xC4);
        let mut krum_bad = 0;
        for _ in 0..200 {
            let m = 3 + s.index(4);
            let f = s.index(m - 2);
            let d = 1 + s.index(4);
            let xs = random_vectors(&mut s, m, d);
            if aggregators::krum_select(&xs, f)? != oracles::krum_bruteforce(&xs, f) {
                krum_bad += 1;
            }
        }
        let mut geo_err = 0.0f64;
        for _ in 0..50 {
            let m = 3 + s.index(8);
            let xs = random_vectors(&mut s, m, 2);
            let got = aggregators::aggregate_geomed(&xs, 1e-10, 10_000)?.point;
            let want = oracles::geomed_grid_2d(&xs);
            geo_err = geo_err.max(((got.get(0) - want.0).powi(2) + (got.get(1) - want.1).powi(2)).sqrt());
        }
        let mut cm_bad = 0;
        for _ in 0..200 {
            let m = 1 + s.index(9);
            let d = 1 + s.index(6);
            let xs = random_vectors(&mut s, m, d);
            if aggregators::aggregate_cm(&xs)? != oracles::cm_sort(&xs) {
                cm_bad += 1;
            }
        }
        Ok((
            krum_bad == 0 && geo_err <= 1e-3 && cm_bad == 0,
            format!("krum mismatches {krum_bad}/200, geomed max err {geo_err:.2e}, cm mismatches {cm_bad}/200"),
        ))
    })
}

/// Robust aggregators are insensitive to outlier magnitude; the mean is not.
pub fn check_robustness(seed: u64) -> Check {
    Check::timed("robustness-vs-outliers", || {
        let mut notes = Vec::new();
        let mut ok = true;
        let kinds = [AggregatorKind::Krum, AggregatorKind::Geomed, AggregatorKind::Cm, AggregatorKind::Cc, AggregatorKind::Mean];
        for delta in [0.125, 0.375] {
            for kind in kinds {
                let agg = AggregatorConfig::new(kind);
                let err = |scale: f64| -> Result<f64> {
                    let attack = AttackSpec { gauss_scale: scale, ..AttackSpec::new(AttackKind::Gauss) };
                    let probe = RobustnessProbe { m: 8, delta, rho: 1.0, dim: 10, trials: 1000, seed };
                    Ok(aggregators::estimate_robustness(&agg, &attack, &probe)?.mean_error_sq)
                };
                let (small, large) = (err(1e2)?, err(1e4)?);
                let ratio = large / small;
                let pass = if kind == AggregatorKind::Mean { ratio >= 1e3 } else { ratio <= 2.0 && ratio >= 0.5 };
                ok &= pass;
                notes.push(format!("{}@{delta}:{ratio:.3}", kind.as_str()));
            }
        }
        Ok((ok, format!("error ratio 1e4/1e2 {}", notes.join(" "))))
    })
}

/// Pairwise deviation of two honest batch-`B` gradients against `2σ²/B`.
pub fn check_deviation_bound(seed: u64) -> Check {
    Check::timed("iid-deviation-bound", || {
        let tasks = [
            TaskSpec::Quadratic(QuadraticSpec { dim: 10, eigenvalues: None, smoothness: 1.0, mu: 0.1, noise: 1.0, fstar: 0.0, init: 1.0 }),
            TaskSpec::Logistic(small_logistic(200, 0)),
        ];
        let trials = 4000;
        let mut ok = true;
        let mut notes = Vec::new();
        for (ti, spec) in tasks.iter().enumerate() {
            let task = Task::build(spec)?;
            let w = task.initial_point().add(&ParamVector::filled(task.dim(), 0.3)?)?;
            let sigma2 = task.sample_variance(&w)?;
            for b in [1usize, 4, 16] {
                let mut sum = 0.0;
                let mut sum_sq = 0.0;
                for k in 0..trials {
                    let mut s1 = RngStream::with_tag(seed, 2 * k as u64, b as u64, 0xC6 + ti as u64);
                    let mut s2 = RngStream::with_tag(seed, 2 * k as u64 + 1, b as u64, 0xC6 + ti as u64);
                    let x = task.stochastic_gradient(&w, b, &mut s1)?;
                    let y = task.stochastic_gradient(&w, b, &mut s2)?;
                    let v = x.dist_sq(&y)?;
                    sum += v;
                    sum_sq += v * v;
                }
                let n = trials as f64;
                let mean = sum / n;
                let se = ((sum_sq / n - mean * mean).max(0.0) / n).sqrt();
                let bound = 2.0 * sigma2 / b as f64;
                ok &= mean <= bound + 4.0 * se;
                notes.push(format!("task{ti} B={b}: {mean:.4}<={bound:.4}+4*{se:.4}"));
            }
        }
        Ok((ok, notes.join(", ")))
    })
}

pub fn small_logistic(samples: usize, data_seed: u64) -> DatasetSpec {
    DatasetSpec {
        dim: 5,
        samples,
        test_samples: Some(samples),
        separation: 1.0,
        label_noise: 0.05,
        l2: 1e-3,
        noise: 0.0,
        data_seed,
    }
}

/// Settings of the runtime bound check.
#[derive(Debug, Clone)]
pub struct BoundRunSetup {
    pub quadratic: QuadraticSpec,
    pub m: usize,
    pub batch_size: usize,
    pub iterations: usize,
    pub c: f64,
    pub attack: AttackKind,
}

impl Default for BoundRunSetup {
    fn default() -> Self {
        Self {
            quadratic: QuadraticSpec { dim: 10, eigenvalues: None, smoothness: 1.0, mu: 0.1, noise: 1.0, fstar: 0.0, init: 1.0 },
            m: 8,
            batch_size: 4,
            iterations: 2000,
            c: 1.0,
            attack: AttackKind::Alie,
        }
    }
}

/// Measured `(1/T) Σ ‖∇F(w_t)‖` and the ByzSGDnm bound, for one seed.
pub fn bound_run(setup: &BoundRunSetup, delta: f64, seed: u64) -> Result<(f64, f64)> {
    let spec = TaskSpec::Quadratic(setup.quadratic.clone());
    let task = Task::build(&spec)?;
    let k = task.exact_constants().expect("quadratic task has exact constants");
    let t = setup.iterations as f64;
    let b = setup.batch_size as f64;
    let p = BoundParams {
        l_smooth: k.l_smooth,
        sigma: k.sigma2.sqrt(),
        f0: k.f0,
        c: setup.c,
        delta,
        m: setup.m,
        budget: t * b * setup.m as f64 * (1.0 - delta),
    };
    let (alpha, eta) = planner::hyperparams_byzsgdnm(t, b, &p)?;
    let bound = planner::bound_byzsgdnm(t, b, &p)?;
    let cfg = RunConfig {
        task: spec,
        algorithm: Algorithm::Byzsgdnm,
        aggregator: AggregatorConfig::new(AggregatorKind::Cc),
        attack: AttackSpec::new(if delta > 0.0 { setup.attack } else { AttackKind::None }),
        m: setup.m,
        delta,
        batch_size: setup.batch_size,
        iterations: Some(setup.iterations),
        epochs: None,
        beta: 1.0 - alpha,
        schedule: Schedule::Constant { lr: eta },
        seed,
    };
    let out = engine::run_training_on(&cfg, &task)?;
    Ok((out.mean_grad_norm(), bound))
}

/// The ByzSGDnm bound dominates the measured mean gradient norm.
pub fn check_bound_at_runtime(setup: &BoundRunSetup, seeds: &[u64]) -> Check {
    Check::timed("nm-bound-at-runtime", || {
        let mut ok = true;
        let mut worst = 0.0f64;
        for delta in [0.0, 0.125, 0.375] {
            for &seed in seeds {
                let (measured, bound) = bound_run(setup, delta, seed)?;
                ok &= measured <= bound;
                worst = worst.max(measured / bound);
            }
        }
        Ok((ok, format!("{} runs, max measured/bound {worst:.3}", 3 * seeds.len())))
    })
}

/// Gradients of every task against central finite differences.
pub fn check_gradients(points: usize, seed: u64) -> Check {
    Check::timed("gradient-checks", || {
        let specs = [
            TaskSpec::Quadratic(QuadraticSpec { dim: 6, eigenvalues: None, smoothness: 3.0, mu: 0.2, noise: 1.0, fstar: 0.5, init: 1.0 }),
            TaskSpec::Logistic(small_logistic(100, 3)),
            TaskSpec::Mlp(MlpSpec {
                dim: 2,
                hidden: 6,
                samples: 100,
                test_samples: Some(50),
                separation: 1.0,
                label_noise: 0.0,
                l2: 1e-3,
                noise: 0.0,
                data_seed: 3,
                init_scale: 0.5,
            }),
        ];
        let mut worst = 0.0f64;
        for (ti, spec) in specs.iter().enumerate() {
            let task = Task::build(spec)?;
            for j in 0..points {
                let mut s = RngStream::with_tag(seed, ti as u64, j as u64, 0xCC);
                let w = task.initial_point().add(&ParamVector::new(s.normal_vec(task.dim()))?.scale(0.5)?)?;
                let g = task.full_gradient(&w)?;
                let fd = oracles::fd_gradient(&task, &w, 1e-6)?;
                worst = worst.max(g.dist_sq(&fd)?.sqrt() / g.norm_sq().sqrt().max(1e-12));
            }
        }
        Ok((worst <= 1e-5, format!("3 tasks x {points} points, max rel err {worst:.2e}")))
    })
}

/// Bold cells of the transcribed batch-size table: `(aggregator, [B per δ])`
/// for `δ = 0, 1/8, 3/8`, in per-worker units.
pub const TABLE1_BOLD: [(AggregatorKind, [usize; 3]); 4] = [
    (AggregatorKind::Krum, [32, 512, 1024]),
    (AggregatorKind::Geomed, [32, 128, 256]),
    (AggregatorKind::Cm, [32, 128, 512]),
    (AggregatorKind::Cc, [32, 128, 512]),
];

/// Best-batch curves of the transcribed table reproduce its bold cells.
pub fn check_fixture(path: &Path) -> Check {
    Check::timed("fixture-best-batch", || {
        let rows = harness::read_fixture(std::fs::File::open(path)?)?;
        let curves = harness::fixture_curves(&rows)?;
        let mut ok = true;
        let mut notes = Vec::new();
        for (agg, want) in TABLE1_BOLD {
            let curve = curves
                .iter()
                .find(|((table, _, a, _), _)| table == "table1" && *a == agg)
                .map(|(_, c)| c.clone())
                .unwrap_or_default();
            let got: Vec<usize> = curve.iter().map(|&(_, b)| b).collect();
            ok &= got == want;
            notes.push(format!("{}:{:?}", agg.as_str(), got));
        }
        Ok((ok, notes.join(" ")))
    })
}

/// A small grid used for the determinism check.
pub fn determinism_grid() -> GridSpec {
    GridSpec {
        base: RunConfig {
            task: TaskSpec::Logistic(small_logistic(256, 1)),
            algorithm: Algorithm::Byzsgdm,
            aggregator: AggregatorConfig::new(AggregatorKind::Cc),
            attack: AttackSpec::new(AttackKind::Alie),
            m: 8,
            delta: 0.125,
            batch_size: 4,
            iterations: None,
            epochs: Some(3),
            beta: 0.9,
            schedule: Schedule::Cosine { lr0: 0.1 },
            seed: 0,
        },
        sweep: Sweep {
            batch_size: vec![4, 8],
            delta: vec![0.0, 0.375],
            aggregator: vec![AggregatorKind::Cc, AggregatorKind::Geomed],
            seeds: vec![1, 2],
            ..Sweep::default()
        },
        max_runs: 512,
    }
}

/// CSV text with the wall-time column removed.
pub fn csv_without_wall_time(rows: &[harness::ResultRow]) -> Result<String> {
    let mut buf = Vec::new();
    harness::write_csv(rows, &mut buf)?;
    let text = String::from_utf8(buf).map_err(|e| crate::error::Error::Io(e.to_string()))?;
    Ok(text
        .lines()
        .map(|l| l.rsplit_once(',').map(|(head, _)| head).unwrap_or(l))
        .collect::<Vec<_>>()
        .join("\n"))
}

/// Re-running a grid yields byte-identical CSV, across thread counts too.
pub fn check_determinism(grid: &GridSpec) -> Check {
    Check::timed("grid-determinism", || {
        let a = csv_without_wall_time(&harness::run_grid(grid, 4)?)?;
        let b = csv_without_wall_time(&harness::run_grid(grid, 4)?)?;
        let c = csv_without_wall_time(&harness::run_grid(grid, 1)?)?;
        Ok((a == b && a == c, format!("{} rows, {} bytes", a.lines().count() - 1, a.len())))
    })
}

/// Desk-scale logistic setup shared by the batch-size trend checks.
#[derive(Debug, Clone)]
pub struct TrendSetup {
    pub task: DatasetSpec,
    pub m: usize,
    pub epochs: usize,
    pub lr_grid: Vec<f64>,
    pub parallelism: usize,
}

impl Default for TrendSetup {
    fn default() -> Self {
        Self {
            task: DatasetSpec {
                dim: 20,
                samples: 4096,
                test_samples: Some(4096),
                separation: 0.5,
                label_noise: 0.0,
                l2: 1e-3,
                noise: 3.0,
                data_seed: 7,
            },
            m: 8,
            epochs: 8,
            lr_grid: vec![0.01, 0.05, 0.2, 1.0, 5.0],
            parallelism: std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
        }
    }
}

impl TrendSetup {
    fn grid(&self, seeds: &[u64], sweep: Sweep) -> GridSpec {
        GridSpec {
            base: RunConfig {
                task: TaskSpec::Logistic(self.task.clone()),
                algorithm: Algorithm::Byzsgdm,
                aggregator: AggregatorConfig::new(AggregatorKind::Cc),
                attack: AttackSpec::new(AttackKind::Alie),
                m: self.m,
                delta: 0.375,
                batch_size: 8,
                iterations: None,
                epochs: Some(self.epochs),
                beta: 0.9,
                schedule: Schedule::Cosine { lr0: 0.1 },
                seed: 0,
            },
            sweep: Sweep { lr0: self.lr_grid.clone(), seeds: seeds.to_vec(), ..sweep },
            max_runs: 4096,
        }
    }
}

/// Accuracy-maximizing batch size per seed at `δ = 0` and `δ = 3/8`.
pub fn batch_trend(setup: &TrendSetup, seeds: &[u64]) -> Result<Vec<(u64, usize, usize)>> {
    let sweep = Sweep { batch_size: vec![8, 16, 32, 64, 128, 256], delta: vec![0.0, 0.375], ..Sweep::default() };
    let rows = harness::select_best(&harness::run_grid(&setup.grid(seeds, sweep), setup.parallelism)?);
    let mut out = Vec::new();
    for &seed in seeds {
        let cells: Vec<harness::Cell> =
            rows.iter().filter(|r| r.seed == seed).filter_map(Option::<harness::Cell>::from).collect();
        let curve = harness::best_batch_curve(&cells)?;
        let at = |d: f64| curve.iter().find(|&&(delta, _)| delta == d).map(|&(_, b)| b).unwrap_or(0);
        out.push((seed, at(0.0), at(0.375)));
    }
    Ok(out)
}

/// Under ALIE at `δ = 3/8` the best batch size does not shrink.
pub fn check_batch_trend(setup: &TrendSetup, seeds: &[u64]) -> Check {
    Check::timed("batch-size-trend", || {
        let per_seed = batch_trend(setup, seeds)?;
        let hits = per_seed.iter().filter(|&&(_, b0, b3)| b3 >= b0).count();
        let detail: Vec<String> = per_seed.iter().map(|(s, b0, b3)| format!("s{s}:{b0}->{b3}")).collect();
        Ok((5 * hits >= 4 * seeds.len(), format!("{hits}/{} seeds; {}", seeds.len(), detail.join(" "))))
    })
}

/// Best final accuracy over the two largest batches and the step-size grid,
/// per `(attack, seed)`, as `(ByzSGDm, ByzSGDnm)`.
pub fn normalized_vs_plain(setup: &TrendSetup, seeds: &[u64]) -> Result<Vec<(AttackKind, u64, f64, f64)>> {
    let sweep = Sweep {
        algorithm: vec![Algorithm::Byzsgdm, Algorithm::Byzsgdnm],
        attack: vec![AttackKind::Alie, AttackKind::Bitflip],
        batch_size: vec![128, 256],
        delta: vec![0.375],
        ..Sweep::default()
    };
    let rows = harness::select_best(&harness::run_grid(&setup.grid(seeds, sweep), setup.parallelism)?);
    let best = |atk: AttackKind, alg: Algorithm, seed: u64| {
        rows.iter()
            .filter(|r| r.attack == atk && r.algorithm == alg && r.seed == seed)
            .filter_map(|r| r.final_accuracy)
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let mut out = Vec::new();
    for atk in [AttackKind::Alie, AttackKind::Bitflip] {
        for &seed in seeds {
            out.push((atk, seed, best(atk, Algorithm::Byzsgdm, seed), best(atk, Algorithm::Byzsgdnm, seed)));
        }
    }
    Ok(out)
}

/// ByzSGDnm matches or beats ByzSGDm at large batches under ALIE and stays
/// within two accuracy points under bit-flipping.
pub fn check_normalized_advantage(setup: &TrendSetup, seeds: &[u64]) -> Check {
    Check::timed("normalized-large-batch", || {
        let res = normalized_vs_plain(setup, seeds)?;
        let alie: Vec<f64> = res.iter().filter(|r| r.0 == AttackKind::Alie).map(|r| r.3 - r.2).collect();
        let flip: Vec<f64> = res.iter().filter(|r| r.0 == AttackKind::Bitflip).map(|r| r.3 - r.2).collect();
        let wins = alie.iter().filter(|&&d| d >= 0.0).count();
        let close = flip.iter().all(|d| d.abs() <= 0.02);
        let fmt = |v: &[f64]| v.iter().map(|d| format!("{:+.2}", 100.0 * d)).collect::<Vec<_>>().join(" ");
        Ok((
            5 * wins >= 4 * seeds.len() && close,
            format!("alie nm>=m {wins}/{} [{}] bitflip diff [{}] pts", seeds.len(), fmt(&alie), fmt(&flip)),
        ))
    })
}

/// Fast checks: formulas, oracles, gradients, fixture and determinism.
pub fn run_all(seed: u64, fixture: &Path) -> Vec<Check> {
    vec![
        check_closed_form(25, seed),
        check_monotonicity(10, seed),
        check_convexity(10, seed),
        check_aggregator_oracles(seed),
        check_robustness(seed),
        check_deviation_bound(seed),
        check_bound_at_runtime(&BoundRunSetup::default(), &[seed, seed + 1, seed + 2, seed + 3, seed + 4]),
        check_fixture(fixture),
        check_determinism(&determinism_grid()),
        check_gradients(10, seed),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pv(x: &[f64]) -> ParamVector {
        ParamVector::new(x.to_vec()).unwrap()
    }

    #[test]
    fn krum_oracle_on_known_instance() {
        let xs = [pv(&[0.0]), pv(&[0.1]), pv(&[0.2]), pv(&[10.0])];
        assert_eq!(oracles::krum_bruteforce(&xs, 1), 0);
    }

    #[test]
    fn geomed_oracle_on_square() {
        let xs = [pv(&[0.0, 0.0]), pv(&[2.0, 0.0]), pv(&[0.0, 2.0]), pv(&[2.0, 2.0])];
        let (a, b) = oracles::geomed_grid_2d(&xs);
        assert!((a - 1.0).abs() < 1e-6 && (b - 1.0).abs() < 1e-6);
    }

    #[test]
    fn cm_oracle_even_and_odd() {
        assert_eq!(oracles::cm_sort(&[pv(&[3.0]), pv(&[1.0]), pv(&[2.0])]), pv(&[2.0]));
        assert_eq!(oracles::cm_sort(&[pv(&[4.0]), pv(&[1.0])]), pv(&[2.5]));
    }

    #[test]
    fn csv_strip_keeps_other_columns() {
        let text = "a,b,wall\n1,2,0.5";
        let stripped: Vec<_> = text.lines().map(|l| l.rsplit_once(',').unwrap().0).collect();
        assert_eq!(stripped, ["a,b", "1,2"]);
    }
}
