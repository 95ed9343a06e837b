//! End-to-end acceptance checks, one line per criterion:
//!
//! ```text
//! cargo test -p stagger-harness --test acceptance
//! ```
//!
//! This target runs without the libtest harness, so the lines are printed
//! even when everything passes. Criteria listed in `KNOWN_FAILING` are
//! reported as FAIL without failing the target; every other criterion must
//! pass.

use std::process::ExitCode;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use stagger::acquisitions::expected_improvement;
use stagger::mtv::{design_batch, mtv_objective, MtvConfig};
use stagger::samplers::{PstarSampler, StsConfig, TsConfig};
use stagger::testbed::{distort, TestFunction};
use stagger::{sobol_points, uniform_point, Dataset, GpModel, KernelParams, Point, RngStream};
use stagger_harness::diagnostics::{run_diagnostics, DiagnoseConfig, SOBOL_BASELINE};
use stagger_harness::sweep::{ablate, sweep_m};
use stagger_harness::{rank_scores, run_experiment, run_trace, ExperimentConfig, RunTrace};

/// The stagger chain's stationary distribution is measurably more peaked
/// than the maximizer distribution on the fidelity instance.
const KNOWN_FAILING: &[usize] = &[2];

type Check = fn() -> Outcome;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

// Criterion 1: dense-formula oracle.

fn matern(a: &[f64], b: &[f64], p: &KernelParams) -> f64 {
    let r2: f64 = a
        .iter()
        .zip(b)
        .zip(&p.lengthscales)
        .map(|((x, y), l)| ((x - y) / l).powi(2))
        .sum();
    let r = (5.0 * r2).sqrt();
    p.output_scale * (1.0 + r + r * r / 3.0) * (-r).exp()
}

fn gram(xs: &[&[f64]], ys: &[&[f64]], p: &KernelParams) -> DMatrix<f64> {
    DMatrix::from_fn(xs.len(), ys.len(), |i, j| matern(xs[i], ys[j], p))
}

fn standardize(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (0.0, 1.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 1.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

/// Posterior mean and covariance at `query` given `xs`, by explicit inverse.
fn dense(xs: &[&[f64]], ys: &[f64], p: &KernelParams, query: &[&[f64]]) -> (DVector<f64>, DMatrix<f64>) {
    let (shift, scale) = standardize(ys);
    let kqq = gram(query, query, p);
    if xs.is_empty() {
        return (DVector::from_element(query.len(), shift), kqq * scale * scale);
    }
    let mut k = gram(xs, xs, p);
    for i in 0..xs.len() {
        k[(i, i)] += p.noise_variance;
    }
    let kinv = k.try_inverse().expect("invertible");
    let kxq = gram(xs, query, p);
    let mean = if ys.len() == xs.len() {
        let y = DVector::from_iterator(xs.len(), ys.iter().map(|v| (v - shift) / scale));
        (kxq.transpose() * &kinv * y).map(|m| m * scale + shift)
    } else {
        DVector::zeros(query.len())
    };
    let cov = kqq - kxq.transpose() * &kinv * &kxq;
    (mean, cov * scale * scale)
}

fn max_abs<'a>(a: impl IntoIterator<Item = &'a f64>, b: impl IntoIterator<Item = &'a f64>) -> f64 {
    a.into_iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn gp_oracle() -> Outcome {
    let mut rng = RngStream::new(1, 1);
    let mut worst: f64 = 0.0;
    for i in 0..20 {
        let d = [1, 2, 5][i % 3];
        let n = [0, 1, 8][(i / 3) % 3];
        let mut data = Dataset::new(d).unwrap();
        for _ in 0..n {
            let x = uniform_point(&mut rng, d).unwrap();
            let y = 2.0 + 5.0 * x.coords().iter().map(|v| (5.0 * v).sin()).sum::<f64>();
            data.push(x, y).unwrap();
        }
        let params = KernelParams {
            lengthscales: (0..d).map(|_| rng.random_range(0.2..1.0)).collect(),
            output_scale: rng.random_range(0.5..2.0),
            noise_variance: rng.random_range(1e-3..1e-2),
        };
        let model = GpModel::with_params(&data, params.clone()).unwrap();
        let query: Vec<Point> = (0..6).map(|_| uniform_point(&mut rng, d).unwrap()).collect();
        let pending: Vec<Point> = (0..3).map(|_| uniform_point(&mut rng, d).unwrap()).collect();
        let q: Vec<&[f64]> = query.iter().map(|p| p.coords()).collect();
        let xs: Vec<&[f64]> = data.points().iter().map(|p| p.coords()).collect();

        let post = model.posterior(&query).unwrap();
        let (mean, cov) = dense(&xs, data.values(), &params, &q);
        worst = worst.max(max_abs(post.mean.iter(), mean.iter()));
        worst = worst.max(max_abs(post.covariance.iter(), cov.iter()));

        let mut union = xs.clone();
        union.extend(pending.iter().map(|p| p.coords()));
        let (_, scale) = standardize(data.values());
        let (_, refit) = dense(&union, &[], &params, &q);
        let expected: Vec<f64> = refit.diagonal().iter().map(|v| v.max(0.0) * scale * scale).collect();
        let cv = model.conditional_variance(&query, &pending).unwrap();
        worst = worst.max(max_abs(cv.iter(), expected.iter()));
    }
    outcome(
        worst < 1e-8,
        format!("20 instances, max abs error {worst:.2e} (bound 1e-8)"),
    )
}

// Criterion 2: maximizer-distribution fidelity on a one-dimensional posterior.

fn fidelity_instance() -> GpModel {
    let points = [0.2, 0.5, 0.85].map(|x| Point::new(vec![x]).unwrap()).to_vec();
    let data = Dataset::from_parts(1, points, vec![0.3, 1.0, 0.6]).unwrap();
    let params = KernelParams {
        lengthscales: vec![0.15],
        output_scale: 1.0,
        noise_variance: 1e-6,
    };
    GpModel::with_params(&data, params).unwrap()
}

const BINS: usize = 64;

fn grid_oracle(model: &GpModel) -> Vec<f64> {
    let (grid_n, draws) = (2048, 8192);
    let grid: Vec<Point> = (0..grid_n)
        .map(|i| Point::new(vec![(i as f64 + 0.5) / grid_n as f64]).unwrap())
        .collect();
    let post = model.posterior(&grid).unwrap();
    let mut cov = post.covariance.clone();
    let max_var = cov.diagonal().max();
    for i in 0..grid_n {
        cov[(i, i)] += 1e-9 * max_var;
    }
    let l = cov
        .cholesky()
        .expect("jittered covariance is positive definite")
        .unpack();
    let mut rng = RngStream::new(4242, 7);
    let z = DMatrix::from_fn(grid_n, draws, |_, _| StandardNormal.sample(&mut rng));
    let f = l * z;
    let mut bins = vec![0.0; BINS];
    for c in 0..draws {
        let col = f.column(c);
        let mut best = 0;
        for i in 0..grid_n {
            if col[i] + post.mean[i] > col[best] + post.mean[best] {
                best = i;
            }
        }
        bins[best * BINS / grid_n] += 1.0 / draws as f64;
    }
    bins
}

fn tv(points: &[Point], oracle: &[f64]) -> f64 {
    let mut bins = vec![0.0; BINS];
    for p in points {
        bins[((p.coords()[0] * BINS as f64) as usize).min(BINS - 1)] += 1.0 / points.len() as f64;
    }
    0.5 * bins.iter().zip(oracle).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

fn pstar_fidelity() -> Outcome {
    let model = fidelity_instance();
    let oracle = grid_oracle(&model);
    let sts = PstarSampler::Sts(StsConfig::default())
        .sample_many(&model, 4096, &mut RngStream::new(1, 1))
        .unwrap();
    let ts = PstarSampler::Ts(TsConfig::default())
        .sample_many(&model, 4096, &mut RngStream::new(2, 1))
        .unwrap();
    let (tv_sts, tv_ts) = (tv(&sts, &oracle), tv(&ts, &oracle));
    outcome(
        tv_sts < 0.15 && tv_sts <= tv_ts,
        format!("TV sts {tv_sts:.3} (bound 0.15), ts-1000 {tv_ts:.3}"),
    )
}

// Criterion 3: sampler diagnostics on the sphere.

fn diagnostics_replication() -> Outcome {
    let runs = run_diagnostics(&DiagnoseConfig::default()).unwrap();
    let of = |name: &str| -> Vec<_> { runs.iter().filter(|r| r.sampler == name).collect() };
    let (sts, ts1k, ts10k, sobol) = (of("sts"), of("ts-1000"), of("ts-10000"), of(SOBOL_BASELINE));
    let rmse_wins = sts
        .iter()
        .zip(&ts1k)
        .filter(|(a, b)| a.record.rmse < b.record.rmse)
        .count();
    let pmax_wins = sts
        .iter()
        .zip(&sobol)
        .filter(|(a, b)| a.record.std_p_max < b.record.std_p_max)
        .count();
    let mean = |rs: &[&stagger_harness::diagnostics::DiagnosticRun],
                f: fn(&stagger_harness::diagnostics::DiagnosticRun) -> f64| {
        rs.iter().map(|r| f(r)).sum::<f64>() / rs.len() as f64
    };
    let t_sts = mean(&sts, |r| r.mean_round_time);
    let t_ts = mean(&ts10k, |r| r.mean_round_time);
    outcome(
        rmse_wins >= 4 && pmax_wins >= 4 && t_sts < t_ts,
        format!(
            "rmse sts<ts-1000 in {rmse_wins}/5 (mean {:.2e} vs {:.2e}), std p_max sts<sobol in {pmax_wins}/5 (mean {:.4} vs {:.4}), round time sts {t_sts:.4}s vs ts-10000 {t_ts:.4}s",
            mean(&sts, |r| r.record.rmse),
            mean(&ts1k, |r| r.record.rmse),
            mean(&sts, |r| r.record.std_p_max),
            mean(&sobol, |r| r.record.std_p_max),
        ),
    )
}

// Criterion 4: batched Ackley in 50 dimensions.

fn ackley_batches() -> Outcome {
    let mut cfg = ExperimentConfig::new(&["ackley"], 50, &["sts", "random"]).unwrap();
    cfg.num_rounds = 30;
    cfg.num_arms = 10;
    cfg.repeats = 5;
    cfg.seed = 1;
    let traces = run_experiment(&cfg).unwrap();
    assert!(traces.iter().all(|t| t.error.is_none()));
    let finals = |m: &str| -> Vec<f64> {
        traces
            .iter()
            .filter(|t| t.method == m)
            .map(|t| t.final_best().unwrap())
            .collect()
    };
    let (sts, random) = (finals("sts"), finals("random"));
    let wins = sts.iter().zip(&random).filter(|(a, b)| a > b).count();
    outcome(
        wins >= 4,
        format!("sts beats random in {wins}/5 paired seeds (sts {sts:.3?}, random {random:.3?})"),
    )
}

// Criterion 5: score arithmetic.

fn synthetic(method: &str, best: Vec<f64>) -> RunTrace {
    let n = best.len();
    RunTrace {
        method: method.into(),
        function: "f".into(),
        repeat: 0,
        best_so_far: best,
        wall_time: vec![0.0; n],
        arms: Vec::new(),
        values: Vec::new(),
        error: None,
    }
}

fn score_arithmetic() -> Outcome {
    let start = Instant::now();
    let traces: Vec<RunTrace> = (0..4)
        .map(|k| synthetic(&format!("m{k}"), (0..30).map(|i| (10 * (3 - k) + i) as f64).collect()))
        .collect();
    let exact = rank_scores(&traces).unwrap().scores == [1.0, 2.0 / 3.0, 1.0 / 3.0, 0.0];
    let mut cfg = ExperimentConfig::new(&["sphere", "ackley"], 4, &["random", "sobol", "ts-100", "sts@3"]).unwrap();
    cfg.num_rounds = 10;
    cfg.repeats = 2;
    let real = run_experiment(&cfg).unwrap();
    let mapped: Vec<RunTrace> = real
        .iter()
        .map(|t| RunTrace {
            best_so_far: t.best_so_far.iter().map(|y| y.exp()).collect(),
            ..t.clone()
        })
        .collect();
    let invariant = rank_scores(&real).unwrap() == rank_scores(&mapped).unwrap();
    let secs = start.elapsed().as_secs_f64();
    outcome(
        exact && invariant && secs < 1.0,
        format!("constant order exact: {exact}, exp invariance bit-exact: {invariant}, {secs:.2}s"),
    )
}

// Criterion 6: terminal-variance batch design.

fn mtv_properties() -> Outcome {
    let mut rng = RngStream::new(6, 1);
    let mut violations = 0;
    for _ in 0..50 {
        let d = rng.random_range(1..4);
        let n = rng.random_range(0..6);
        let mut data = Dataset::new(d).unwrap();
        for _ in 0..n {
            let x = uniform_point(&mut rng, d).unwrap();
            let y = x.coords().iter().map(|v| (5.0 * v).cos()).sum::<f64>();
            data.push(x, y).unwrap();
        }
        let params = KernelParams {
            lengthscales: (0..d).map(|_| rng.random_range(0.2..0.6)).collect(),
            output_scale: rng.random_range(0.5..2.0),
            noise_variance: 1e-3,
        };
        let model = GpModel::with_params(&data, params).unwrap();
        let pstar: Vec<Point> = (0..5).map(|_| uniform_point(&mut rng, d).unwrap()).collect();
        let mut arms = vec![uniform_point(&mut rng, d).unwrap()];
        let mut prev = mtv_objective(&model, &pstar, &arms).unwrap();
        for _ in 0..4 {
            arms.push(uniform_point(&mut rng, d).unwrap());
            let next = mtv_objective(&model, &pstar, &arms).unwrap();
            if next > prev + 1e-9 {
                violations += 1;
            }
            prev = next;
        }
    }
    let min_pairwise = |pts: &[Point]| {
        let mut best = f64::INFINITY;
        for i in 0..pts.len() {
            for j in 0..i {
                best = best.min(pts[i].sq_distance(&pts[j]).sqrt());
            }
        }
        best
    };
    let prior = GpModel::fit(&Dataset::new(2).unwrap()).unwrap();
    let design = design_batch(&prior, 2, &MtvConfig::new(8), &mut rng).unwrap();
    let random_mean = (0..100)
        .map(|_| min_pairwise(&(0..8).map(|_| uniform_point(&mut rng, 2).unwrap()).collect::<Vec<_>>()))
        .sum::<f64>()
        / 100.0;
    let spread = min_pairwise(&design.arms);
    outcome(
        violations == 0 && spread > random_mean,
        format!(
            "monotonicity violations {violations}/200, q=8 min distance {spread:.3} vs random mean {random_mean:.3}"
        ),
    )
}

// Criterion 7: ablations.

fn ablation_direction() -> Outcome {
    let mut cfg = ExperimentConfig::new(&["sphere", "rastrigin"], 10, &["sts"]).unwrap();
    cfg.num_rounds = 30;
    cfg.repeats = 10;
    cfg.seed = 1;
    let table = ablate(&cfg).unwrap().table;
    let s = |m: &str| table.score_of(m).unwrap();
    outcome(
        s("sts") >= s("sts-ns") && s("sts") >= s("sts-ui"),
        format!(
            "scores sts {:.3}, sts-ui {:.3}, sts-m {:.3}, sts-t {:.3}, sts-ns {:.3}",
            s("sts"),
            s("sts-ui"),
            s("sts-m"),
            s("sts-t"),
            s("sts-ns")
        ),
    )
}

// Criterion 8: refinement-iteration sweep.

fn m_sweep() -> Outcome {
    let mut cfg = ExperimentConfig::new(&["sphere"], 10, &["sts"]).unwrap();
    cfg.num_rounds = 30;
    cfg.repeats = 10;
    cfg.seed = 1;
    let rows = sweep_m(&cfg, &[0, 3, 30]).unwrap().rows();
    let scores: Vec<f64> = rows.iter().map(|r| r.1).collect();
    outcome(
        scores.windows(2).all(|w| w[0] <= w[1]),
        format!("scores for M = 0, 3, 30: {scores:.3?}"),
    )
}

// Criterion 9: property checks with no experiment-scale runs.

fn property_suites() -> Outcome {
    let start = Instant::now();
    let mut rng = RngStream::new(9, 1);
    let mut failures = Vec::new();

    let contained = (0..200).all(|i| {
        let d = 1 + i % 40;
        let u = uniform_point(&mut rng, d).unwrap();
        let s = sobol_points(3, d, &mut rng).unwrap();
        std::iter::once(&u)
            .chain(&s)
            .all(|p| p.coords().iter().all(|v| (0.0..=1.0).contains(v)))
    });
    if !contained {
        failures.push("containment");
    }

    let draw = |seed| uniform_point(&mut RngStream::new(seed, 3), 4).unwrap();
    let mut cfg = ExperimentConfig::new(&["levy"], 2, &["sts"]).unwrap();
    cfg.num_rounds = 3;
    let a = run_trace(&cfg, &cfg.methods[0], 0, 0);
    let b = run_trace(&cfg, &cfg.methods[0], 0, 0);
    if draw(5) != draw(5) || a.best_so_far != b.best_so_far || a.arms != b.arms {
        failures.push("determinism");
    }

    let ei_ok = (0..2000).all(|_| {
        let mu = rng.random_range(-5.0..5.0);
        let best = rng.random_range(-5.0..5.0);
        let s1: f64 = rng.random_range(0.0..5.0);
        let s2: f64 = rng.random_range(0.0..5.0);
        let (lo, hi) = (s1.min(s2), s1.max(s2));
        let (a, b) = (expected_improvement(mu, lo, best), expected_improvement(mu, hi, best));
        a >= 0.0 && b >= a - 1e-12
    });
    if !ei_ok {
        failures.push("EI monotone in sigma");
    }

    let preserved = ["sphere", "ackley", "rastrigin", "griewank", "levy", "rosenbrock"]
        .iter()
        .all(|name| {
            let f = TestFunction::by_name(name, 5).unwrap();
            let (_, value) = f.known_optimum().unwrap();
            (0..10).all(|seed| {
                let g = distort(&f, seed);
                let (loc, v) = g.known_optimum().unwrap();
                v == value && (g.evaluate_unit(&loc).unwrap() - value).abs() < 1e-9
            })
        });
    if !preserved {
        failures.push("distortion value preservation");
    }

    let mut cfg = ExperimentConfig::new(&["ackley"], 3, &["random", "ts-100"]).unwrap();
    cfg.num_rounds = 6;
    cfg.num_arms = 2;
    cfg.repeats = 2;
    let monotone = run_experiment(&cfg)
        .unwrap()
        .iter()
        .all(|t| t.best_so_far.windows(2).all(|w| w[0] <= w[1]));
    if !monotone {
        failures.push("best_so_far monotone");
    }

    let secs = start.elapsed().as_secs_f64();
    outcome(
        failures.is_empty() && secs < 60.0,
        format!("failures {failures:?}, {secs:.2}s"),
    )
}

fn main() -> ExitCode {
    let criteria: [(usize, &str, Check); 9] = [
        (1, "GP oracle equivalence", gp_oracle),
        (2, "p* fidelity", pstar_fidelity),
        (3, "sampler diagnostics on the sphere", diagnostics_replication),
        (4, "Ackley d=50 batches", ackley_batches),
        (5, "score arithmetic", score_arithmetic),
        (6, "MTV properties", mtv_properties),
        (7, "ablation direction", ablation_direction),
        (8, "M sweep", m_sweep),
        (9, "property suites", property_suites),
    ];
    let mut unexpected = Vec::new();
    for (id, name, check) in criteria {
        let start = Instant::now();
        let result = check();
        let verdict = if result.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {id} {verdict}: {name}: {} [{:.1}s]",
            result.detail,
            start.elapsed().as_secs_f64()
        );
        if !result.pass && !KNOWN_FAILING.contains(&id) {
            unexpected.push(id);
        }
    }
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        eprintln!("criteria failed: {unexpected:?}");
        ExitCode::FAILURE
    }
}
