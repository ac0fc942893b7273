//! Acceptance run: prints one `PASS` / `FAIL` line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Runs without the libtest harness so that the report is always printed
//! and so that a counting global allocator can audit the mini-batch trainer.

use std::alloc::{GlobalAlloc, Layout, System};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use ndarray::{array, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use sparse_pcm::bench::{
    generate, kendall_tau_b, median, run_experiment, run_grid, tau_from_counts, GridConfig, Method, MethodConfig,
    SynthConfig,
};
use sparse_pcm::btl::{self, sigmoid, BtlFitConfig};
use sparse_pcm::embed::{
    gradients, loss, message_pass, predict_log_ratio, predict_pairs, EmbeddingModel, HeadKind, HeadParams,
    ModelConfig, ModelMode, Nonlinearity, Params, Weights,
};
use sparse_pcm::lls::{lls_complete, lls_scores};
use sparse_pcm::pcm::{
    complete_from_scores, consistency_report, principal_eigen, reciprocal_projection, sample_triples,
    triangle_residuals, DensePcm,
};
use sparse_pcm::scale::{train_minibatch, ScaleConfig};
use sparse_pcm::{ComparisonSet, ScoreVector};

// ---------------------------------------------------------------------------
// Allocation audit

/// Counts live bytes, the peak of live bytes and the largest single request
/// while armed.
struct CountingAlloc;

static ARMED: AtomicBool = AtomicBool::new(false);
static LIVE: AtomicUsize = AtomicUsize::new(0);
static PEAK: AtomicUsize = AtomicUsize::new(0);
static LARGEST: AtomicUsize = AtomicUsize::new(0);

impl CountingAlloc {
    fn grow(size: usize) {
        let live = LIVE.fetch_add(size, Ordering::Relaxed) + size;
        if ARMED.load(Ordering::Relaxed) {
            PEAK.fetch_max(live, Ordering::Relaxed);
            LARGEST.fetch_max(size, Ordering::Relaxed);
        }
    }

    fn shrink(size: usize) {
        LIVE.fetch_sub(size, Ordering::Relaxed);
    }
}

unsafe impl GlobalAlloc for CountingAlloc {
    unsafe fn alloc(&self, layout: Layout) -> *mut u8 {
        let p = unsafe { System.alloc(layout) };
        if !p.is_null() {
            Self::grow(layout.size());
        }
        p
    }

    unsafe fn alloc_zeroed(&self, layout: Layout) -> *mut u8 {
        let p = unsafe { System.alloc_zeroed(layout) };
        if !p.is_null() {
            Self::grow(layout.size());
        }
        p
    }

    unsafe fn dealloc(&self, ptr: *mut u8, layout: Layout) {
        unsafe { System.dealloc(ptr, layout) };
        Self::shrink(layout.size());
    }

    unsafe fn realloc(&self, ptr: *mut u8, layout: Layout, new_size: usize) -> *mut u8 {
        let p = unsafe { System.realloc(ptr, layout, new_size) };
        if !p.is_null() {
            Self::shrink(layout.size());
            Self::grow(new_size);
        }
        p
    }
}

#[global_allocator]
static GLOBAL: CountingAlloc = CountingAlloc;

/// Run `f` with the audit armed; returns its value, the peak live bytes above
/// the starting level, and the largest single allocation.
fn audited<T>(f: impl FnOnce() -> T) -> (T, usize, usize) {
    let base = LIVE.load(Ordering::Relaxed);
    PEAK.store(base, Ordering::Relaxed);
    LARGEST.store(0, Ordering::Relaxed);
    ARMED.store(true, Ordering::Relaxed);
    let out = f();
    ARMED.store(false, Ordering::Relaxed);
    let peak = PEAK.load(Ordering::Relaxed).saturating_sub(base);
    (out, peak, LARGEST.load(Ordering::Relaxed))
}

// ---------------------------------------------------------------------------
// Reporting

#[derive(Default)]
struct Report {
    passed: usize,
    failed: Vec<String>,
}

impl Report {
    fn check(&mut self, id: &str, ok: bool, detail: impl AsRef<str>) {
        println!("{} [{id}] {}", if ok { "PASS" } else { "FAIL" }, detail.as_ref());
        if ok {
            self.passed += 1;
        } else {
            self.failed.push(id.to_string());
        }
    }
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.4}")).collect();
    format!("({})", parts.join(", "))
}

// ---------------------------------------------------------------------------
// 1. Worked examples

fn matrix_b() -> DensePcm {
    DensePcm::from_rows(&[vec![1.0, 3.0, 4.0], vec![1.0 / 3.0, 1.0, 2.0], vec![0.25, 0.5, 1.0]]).unwrap()
}

fn four_chain() -> ComparisonSet {
    ComparisonSet::cardinal(4, [(0, 1, 3.0), (1, 2, 5.0), (2, 3, 2.0)]).unwrap()
}

fn five_chain() -> ComparisonSet {
    ComparisonSet::cardinal(5, [(0, 1, 3.0), (1, 2, 5.0), (2, 3, 2.0), (3, 4, 4.0)]).unwrap()
}

fn worked_examples(r: &mut Report) {
    println!("== 1. worked examples");

    let started = Instant::now();
    let b = matrix_b();
    let c = consistency_report(&b).unwrap();
    let cr = c.cr.unwrap_or(f64::NAN);
    r.check(
        "1.1 CI/CR",
        (c.ci - 0.00915).abs() <= 1e-3 && (cr - 0.0158).abs() <= 1e-3 && started.elapsed().as_secs_f64() < 1.0,
        format!("CI = {:.5} (want 0.00915), CR = {cr:.5} (want 0.0158), tol 1e-3", c.ci),
    );

    let started = Instant::now();
    let eig = principal_eigen(&b, 10_000, 1e-12).unwrap();
    let w_want = [0.6250, 0.2385, 0.1365];
    let w_err = eig.weights.iter().zip(w_want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    r.check(
        "1.2 principal eigenpair",
        (eig.lambda_max - 3.0183).abs() <= 1e-3 && w_err <= 1e-3 && started.elapsed().as_secs_f64() < 1.0,
        format!(
            "lambda_max = {:.4} (want 3.0183), w = {} (want {}), max weight error {w_err:.1e}",
            eig.lambda_max,
            fmt_vec(&eig.weights),
            fmt_vec(&w_want)
        ),
    );

    let started = Instant::now();
    let (_, a4) = lls_complete(&four_chain()).unwrap();
    let s4 = [0.0f64, 3f64.ln(), 15f64.ln(), 30f64.ln()];
    let mut err4: f64 = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            err4 = err4.max((a4.get(i, j) - (s4[j] - s4[i]).exp()).abs());
        }
    }
    let (x5, a5) = lls_complete(&five_chain()).unwrap();
    let row_err = (0..5)
        .map(|j| (a5.get(0, j) - [1.0, 3.0, 15.0, 30.0, 120.0][j]).abs())
        .fold(0.0, f64::max);
    let elapsed = started.elapsed().as_secs_f64();
    r.check(
        "1.3a LLS completion, 4-node chain",
        err4 <= 1e-6 && elapsed < 1.0,
        format!("max entry error vs the consistent completion {err4:.1e} (tol 1e-6)"),
    );
    r.check(
        "1.3b LLS completion, 5-node chain first row",
        row_err <= 1e-6 && elapsed < 1.0,
        format!("first row {} max error {row_err:.1e} (tol 1e-6)", fmt_vec(&a5.entries().row(0).to_vec())),
    );
    // Scores against the reference decimals, and against the reference closed
    // form t + log(product of ratios to the last item) with reference t.
    let reference = [2.4056, 1.2924, -0.2072, -1.0018, -2.3880];
    let t = -2.3880f64;
    let closed = [t + 120f64.ln(), t + 40f64.ln(), t + 8f64.ln(), t + 4f64.ln(), t];
    let x = x5.scores();
    let err_reference: Vec<f64> = x.iter().zip(reference).map(|(a, b)| (a - b).abs()).collect();
    let err_closed = x.iter().zip(closed).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    r.check(
        "1.3c LLS scores vs reference decimals",
        err_reference.iter().all(|&e| e <= 1e-2),
        format!(
            "x = {}, reference {}, per-entry error {} (tol 1e-2; the reference x3 disagrees with its own formula t + log 8 = {:.4})",
            fmt_vec(x),
            fmt_vec(&reference),
            fmt_vec(&err_reference),
            closed[2]
        ),
    );
    r.check(
        "1.3d LLS scores vs reference closed form",
        err_closed <= 1e-2,
        format!("x vs t + log(ratio to last item), t = -2.3880: max error {err_closed:.4} (tol 1e-2)"),
    );

    let started = Instant::now();
    let cfg = ModelConfig {
        d: 2,
        layers: 1,
        nonlinearity: Nonlinearity::Relu,
        head: HeadKind::LinearDifference,
        mode: ModelMode::Lls,
        ..ModelConfig::default()
    };
    let params = Params {
        h0: array![[0.2, -0.1], [-0.3, 0.4], [0.1, 0.0], [-0.2, -0.5]],
        weights: Weights {
            w1: vec![Array2::eye(2)],
            w2: vec![Array2::eye(2) * 0.5],
            head: HeadParams::Linear { v: array![1.0, 1.0] },
        },
    };
    let model = EmbeddingModel::new(cfg, params).unwrap();
    let h = message_pass(&model, &four_chain()).unwrap();
    let a12 = predict_log_ratio(h.view(), 0, 1, &model.params.weights.head).exp();
    r.check(
        "1.4 one message-passing layer",
        h[(1, 0)] == 0.0 && (h[(1, 1)] - 0.35).abs() <= 1e-15 && (a12 - 0.8187).abs() <= 1e-4 && started.elapsed().as_secs_f64() < 1.0,
        format!("h2 = ({}, {}) (want (0, 0.35) up to one rounding, tol 1e-15), a12 = {a12:.5} (want 0.8187, tol 1e-4)", h[(1, 0)], h[(1, 1)]),
    );

    let started = Instant::now();
    let probs = [sigmoid(x5.log_ratio(0, 1)), sigmoid(x5.log_ratio(1, 2)), sigmoid(x5.log_ratio(0, 4))];
    let want = [0.75, 0.8333, 0.9917];
    let err = probs.iter().zip(want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    r.check(
        "1.5 BTL probabilities from chain scores",
        err <= 1e-4 && started.elapsed().as_secs_f64() < 1.0,
        format!("P(1>2), P(2>3), P(1>5) = {} (want {}), max error {err:.1e}", fmt_vec(&probs), fmt_vec(&want)),
    );
}

// ---------------------------------------------------------------------------
// 2. Benchmark grid trends

fn cell(rows: &[sparse_pcm::bench::ExperimentResult], n: usize, p: f64, m: Method) -> (f64, f64) {
    let sel: Vec<_> = rows.iter().filter(|r| r.n == n && r.p == p && r.method == m).collect();
    let tau: Vec<f64> = sel.iter().map(|r| r.kendall_tau).collect();
    let rmse: Vec<f64> = sel.iter().map(|r| r.rmse).collect();
    (median(&tau), median(&rmse))
}

fn grid_trends(r: &mut Report) {
    println!("== 2. benchmark grid (3 n x 3 p x {{lls, ml}} x 5 seeds, medians)");
    let ns = [200, 400, 800];
    let ps = [0.01, 0.02, 0.05];
    let grid = GridConfig {
        ns: ns.to_vec(),
        ps: ps.to_vec(),
        methods: vec![Method::Lls, Method::Ml],
        seeds: 5,
        noise_sigma: 0.1,
        method: MethodConfig::default(),
    };
    let started = Instant::now();
    let rows = run_grid(&grid, 1).unwrap();
    let elapsed = started.elapsed().as_secs_f64();
    let failures = rows.iter().filter(|x| x.is_failure()).count();

    println!("      n      p   method   tau_med  rmse_med");
    for &n in &ns {
        for &p in &ps {
            for m in [Method::Lls, Method::Ml] {
                let (tau, rmse) = cell(&rows, n, p, m);
                println!("  {n:>5} {p:>6} {:>8} {tau:>9.4} {rmse:>9.4}", m.name());
            }
        }
    }
    r.check(
        "2.0 grid completes",
        failures == 0 && elapsed < 300.0,
        format!("{} rows, {failures} failed, {elapsed:.1} s (limit 300 s)", rows.len()),
    );

    let (tau200, _) = cell(&rows, 200, 0.05, Method::Lls);
    let (tau800, rmse800) = cell(&rows, 800, 0.05, Method::Lls);
    r.check("2.1a LLS tau n=200 p=0.05", tau200 >= 0.93, format!("median tau {tau200:.4} (need >= 0.93)"));
    r.check("2.1b LLS tau n=800 p=0.05", tau800 >= 0.96, format!("median tau {tau800:.4} (need >= 0.96)"));

    let mut worst: f64 = 0.0;
    let mut where_ = String::new();
    for &n in &ns {
        for &p in ps.iter().filter(|&&p| p >= 0.02) {
            let d = (cell(&rows, n, p, Method::Ml).1 - cell(&rows, n, p, Method::Lls).1).abs();
            if d > worst || d.is_nan() {
                worst = d;
                where_ = format!("n={n} p={p}");
            }
        }
    }
    r.check(
        "2.2 ML vs LLS RMSE at p >= 0.02",
        worst <= 0.02,
        format!("largest |median RMSE difference| {worst:.4} at {where_} (limit 0.02)"),
    );

    let mut broken = Vec::new();
    for &n in &ns {
        for m in [Method::Lls, Method::Ml] {
            let cells: Vec<(f64, f64)> = ps.iter().map(|&p| cell(&rows, n, p, m)).collect();
            if !cells.windows(2).all(|w| w[1].0 >= w[0].0) {
                broken.push(format!("tau {} n={n}", m.name()));
            }
            if !cells.windows(2).all(|w| w[1].1 <= w[0].1) {
                broken.push(format!("rmse {} n={n}", m.name()));
            }
        }
    }
    r.check(
        "2.3 monotone in p",
        broken.is_empty(),
        if broken.is_empty() {
            "tau non-decreasing and RMSE non-increasing in p at every n, both methods".to_string()
        } else {
            format!("violations: {}", broken.join("; "))
        },
    );

    let rmse800_ml = cell(&rows, 800, 0.05, Method::Ml).1;
    r.check(
        "2.4 RMSE band n=800 p=0.05",
        (0.10..=0.20).contains(&rmse800) && (0.10..=0.20).contains(&rmse800_ml),
        format!("median RMSE lls {rmse800:.4}, ml {rmse800_ml:.4} (band [0.10, 0.20])"),
    );
}

// ---------------------------------------------------------------------------
// 3. Scalability

fn scalability(r: &mut Report) {
    println!("== 3. mini-batch scalability (n = 10^4)");
    let n = 10_000;
    let synth = SynthConfig {
        n,
        p: 0.001,
        seed: 0,
        ..SynthConfig::default()
    };
    let mcfg = MethodConfig::default();
    let started = Instant::now();
    let (result, peak, largest) = audited(|| run_experiment(&synth, Method::MlMinibatch, &mcfg));
    let elapsed = started.elapsed().as_secs_f64();
    match result {
        Ok(res) => {
            r.check(
                "3.1 mini-batch end to end",
                elapsed < 300.0 && res.kendall_tau >= 0.90,
                format!(
                    "{} edges, {elapsed:.1} s total (limit 300 s), training {:.1} s, tau {:.4} (need >= 0.90), held-out RMSE {:.4}",
                    res.edge_count, res.wall_time_s, res.kendall_tau, res.rmse
                ),
            );
        }
        Err(e) => r.check("3.1 mini-batch end to end", false, format!("error: {e}")),
    }
    let n2 = n * n;
    r.check(
        "3.3 no allocation proportional to n^2",
        largest < n2 / 16 && peak < n2,
        format!(
            "largest single allocation {:.2} MB (limit n^2/16 B = {:.2} MB; an n x n f64 matrix is {:.0} MB), peak live {:.2} MB (limit n^2 B = {:.0} MB)",
            largest as f64 / 1e6,
            (n2 / 16) as f64 / 1e6,
            (n2 * 8) as f64 / 1e6,
            peak as f64 / 1e6,
            n2 as f64 / 1e6
        ),
    );

    // Per-epoch time at fixed n when the number of comparisons doubles.
    let epochs = 8;
    let mut per_epoch = Vec::new();
    let mut edges = Vec::new();
    for p in [0.001, 0.002] {
        let (_, obs) = generate(&SynthConfig {
            n,
            p,
            seed: 1,
            ..SynthConfig::default()
        })
        .unwrap();
        let cfg = mcfg.model_for(1);
        let opt = sparse_pcm::embed::OptimizerConfig { epochs, ..mcfg.optimizer };
        let out = train_minibatch(&obs, &cfg, &ScaleConfig { seed: 1, ..mcfg.scale }, &opt).unwrap();
        // Skip the first epoch (cold caches and lazily built indices).
        let secs: Vec<f64> = out.trace.iter().skip(1).map(|e| e.seconds).collect();
        per_epoch.push(median(&secs));
        edges.push(obs.len());
    }
    let ratio = per_epoch[1] / per_epoch[0];
    r.check(
        "3.2 per-epoch time vs |edges|",
        (1.5..=3.0).contains(&ratio),
        format!(
            "{} -> {} edges: median epoch {:.3} s -> {:.3} s, ratio {ratio:.2} (band [1.5, 3.0])",
            edges[0], edges[1], per_epoch[0], per_epoch[1]
        ),
    );
}

// ---------------------------------------------------------------------------
// 4. Property suites

fn random_graph(rng: &mut ChaCha8Rng, n: usize, mode: ModelMode) -> ComparisonSet {
    loop {
        let mut cardinal = Vec::new();
        let mut counts = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.random_bool(0.6) {
                    cardinal.push((i, j, rng.random_range(-2.0f64..2.0).exp()));
                    let (wi, wj) = (rng.random_range(0..5u64), rng.random_range(0..5u64));
                    if wi + wj > 0 {
                        counts.push((i, j, wi, wj));
                    }
                }
            }
        }
        let obs = match mode {
            ModelMode::Lls => ComparisonSet::cardinal(n, cardinal).unwrap(),
            ModelMode::Btl => ComparisonSet::counts(n, counts).unwrap(),
        };
        if !obs.is_empty() {
            return obs;
        }
    }
}

fn random_model(rng: &mut ChaCha8Rng, n: usize, head: HeadKind, mode: ModelMode) -> EmbeddingModel {
    let cfg = ModelConfig {
        d: 3,
        layers: 2,
        nonlinearity: Nonlinearity::Relu,
        head,
        mode,
        lambda_triangle: 0.7,
        lambda_reg: 0.05,
        seed: rng.random(),
        ..ModelConfig::default()
    };
    let mut model = EmbeddingModel::init(n, cfg).unwrap();
    let normal = Normal::new(0.0, 0.6).unwrap();
    for v in model.params.h0.iter_mut() {
        *v = normal.sample(rng);
    }
    for s in model.params.weights.slices_mut() {
        for v in s.iter_mut() {
            *v += normal.sample(rng);
        }
    }
    model
}

fn perturbed(model: &EmbeddingModel, slot: usize, k: usize, delta: f64) -> EmbeddingModel {
    let mut m = model.clone();
    if slot == 0 {
        m.params.h0.as_slice_mut().unwrap()[k] += delta;
    } else {
        m.params.weights.slices_mut()[slot - 1][k] += delta;
    }
    m
}

/// Worst relative error of the analytic gradient against central
/// differences, or `None` if a coordinate straddles a kink.
fn gradient_error(model: &EmbeddingModel, obs: &ComparisonSet, triples: &[(usize, usize, usize)]) -> Option<f64> {
    let h = 1e-5;
    let (base, g) = gradients(model, obs, triples).unwrap();
    let f = |m: &EmbeddingModel| loss(m, obs, triples).unwrap().total;
    let mut analytic: Vec<Vec<f64>> = vec![g.h0.as_slice().unwrap().to_vec()];
    analytic.extend(g.weights.slices().iter().map(|s| s.to_vec()));
    let mut worst: f64 = 0.0;
    for (slot, grads) in analytic.iter().enumerate() {
        for (k, &an) in grads.iter().enumerate() {
            let up = f(&perturbed(model, slot, k, h));
            let down = f(&perturbed(model, slot, k, -h));
            let (fwd, bwd) = ((up - base.total) / h, (base.total - down) / h);
            if (fwd - bwd).abs() > 1e-3 * (fwd.abs() + bwd.abs()) + 1e-6 {
                return None;
            }
            let fd = (up - down) / (2.0 * h);
            worst = worst.max((fd - an).abs() / fd.abs().max(an.abs()).max(1e-3));
        }
    }
    Some(worst)
}

fn dense_lls_oracle(n: usize, edges: &[(usize, usize, f64)]) -> Vec<f64> {
    // Least squares on the incidence system plus the zero-mean row.
    let mut a = DMatrix::<f64>::zeros(edges.len() + 1, n);
    let mut b = DVector::<f64>::zeros(edges.len() + 1);
    for (r, &(i, j, v)) in edges.iter().enumerate() {
        a[(r, i)] = 1.0;
        a[(r, j)] = -1.0;
        b[r] = v.ln();
    }
    for k in 0..n {
        a[(edges.len(), k)] = 1.0;
    }
    let ata = a.transpose() * &a;
    let atb = a.transpose() * b;
    ata.lu().solve(&atb).expect("normal equations are regular").iter().copied().collect()
}

fn tau_oracle(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len();
    let (mut numer, mut not_tied_a, mut not_tied_b) = (0i64, 0u64, 0u64);
    for i in 0..n {
        for j in i + 1..n {
            let da = a[i].partial_cmp(&a[j]).unwrap();
            let db = b[i].partial_cmp(&b[j]).unwrap();
            not_tied_a += u64::from(da.is_ne());
            not_tied_b += u64::from(db.is_ne());
            if da.is_ne() && db.is_ne() {
                numer += if da == db { 1 } else { -1 };
            }
        }
    }
    tau_from_counts(numer as i128, not_tied_a, not_tied_b)
}

fn properties(r: &mut Report) {
    println!("== 4. property suites");

    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let kinds = [
        (HeadKind::LinearDifference, ModelMode::Lls),
        (HeadKind::LinearDifference, ModelMode::Btl),
        (HeadKind::MlpDifference { hidden: 4 }, ModelMode::Lls),
        (HeadKind::MlpDifference { hidden: 4 }, ModelMode::Btl),
    ];
    let (mut checked, mut skipped, mut worst) = (0, 0, 0.0f64);
    while checked < 100 && skipped < 1000 {
        let (head, mode) = kinds[checked % 4];
        let obs = random_graph(&mut rng, 6, mode);
        let model = random_model(&mut rng, 6, head, mode);
        let triples = sample_triples(6, 12, &mut rng);
        match gradient_error(&model, &obs, &triples) {
            Some(e) => {
                worst = worst.max(e);
                checked += 1;
            }
            None => skipped += 1,
        }
    }
    let secs = started.elapsed().as_secs_f64();
    r.check(
        "4.1 gradients vs finite differences",
        checked == 100 && worst <= 1e-4 && secs < 30.0,
        format!("{checked} instances (n=6, d=3, L=2, both heads and modes; {skipped} skipped at kinks), worst relative error {worst:.1e} (tol 1e-4), {secs:.1} s"),
    );

    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let (mut worst_anti, mut worst_tri) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let obs = random_graph(&mut rng, 6, ModelMode::Lls);
        let model = random_model(&mut rng, 6, HeadKind::LinearDifference, ModelMode::Lls);
        let pairs: Vec<(usize, usize)> = (0..6).flat_map(|i| (0..6).map(move |j| (i, j))).collect();
        let t = predict_pairs(&model, &obs, &pairs).unwrap();
        for (k, &(i, j)) in pairs.iter().enumerate() {
            worst_anti = worst_anti.max((t[k] + t[j * 6 + i]).abs());
        }
        let triples = sample_triples(6, 50, &mut rng);
        worst_tri = worst_tri.max(loss(&model, &obs, &triples).unwrap().triangle_loss);
    }
    let secs = started.elapsed().as_secs_f64();
    r.check(
        "4.2 linear head transitive and antisymmetric",
        worst_anti <= 1e-12 && worst_tri <= 1e-12 && secs < 30.0,
        format!("100 random models: max |t_ij + t_ji| {worst_anti:.1e}, max triangle loss {worst_tri:.1e} (tol 1e-12)"),
    );

    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let (mut trials, mut worst) = (0, 0.0f64);
    while trials < 200 {
        let n = rng.random_range(2..=6);
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.random_bool(0.5) {
                    edges.push((i, j, rng.random_range(-3.0f64..3.0).exp()));
                }
            }
        }
        let obs = ComparisonSet::cardinal(n, edges.clone()).unwrap_or_else(|_| ComparisonSet::cardinal(n, []).unwrap());
        let (_, comps) = sparse_pcm::graph::component_labels(n, edges.iter().map(|e| (e.0, e.1)));
        if edges.is_empty() || comps != 1 {
            continue;
        }
        let x = lls_scores(&obs).unwrap();
        let oracle = dense_lls_oracle(n, &edges);
        worst = worst.max(x.scores().iter().zip(&oracle).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
        trials += 1;
    }
    let secs = started.elapsed().as_secs_f64();
    r.check(
        "4.3 LLS conjugate gradients vs dense oracle",
        worst <= 1e-7 && secs < 30.0,
        format!("200 connected graphs, n <= 6: max score difference {worst:.1e} (tol 1e-7)"),
    );

    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut mismatches = 0;
    for trial in 0..100 {
        let range = if trial % 2 == 0 { 1000 } else { 6 };
        let a: Vec<f64> = (0..50).map(|_| rng.random_range(0..range) as f64).collect();
        let b: Vec<f64> = (0..50).map(|_| rng.random_range(0..range) as f64).collect();
        if kendall_tau_b(&a, &b).unwrap() != tau_oracle(&a, &b) {
            mismatches += 1;
        }
    }
    let secs = started.elapsed().as_secs_f64();
    r.check(
        "4.4 Kendall tau vs pair-counting oracle",
        mismatches == 0 && secs < 30.0,
        format!("100 random length-50 inputs (half with heavy ties): {mismatches} inexact results"),
    );

    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut worst_idem, mut worst_res) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let n = rng.random_range(3..12);
        let x = ScoreVector::centered((0..n).map(|_| rng.random_range(-4.0..4.0)).collect());
        let a = complete_from_scores(&x).unwrap();
        let triples: Vec<(usize, usize, usize)> = (0..n)
            .flat_map(|i| (0..n).flat_map(move |j| (0..n).map(move |k| (i, j, k))))
            .filter(|&(i, j, k)| i != j && j != k && i != k)
            .collect();
        worst_res = worst_res.max(triangle_residuals(&a, &triples).into_iter().fold(0.0, f64::max));
        // Projection of a noisy, non-reciprocal matrix, then again.
        let mut noisy = a.entries().to_owned();
        for v in noisy.iter_mut() {
            *v *= rng.random_range(0.5..2.0);
        }
        let once = reciprocal_projection(&DensePcm::new(noisy).unwrap()).unwrap();
        let twice = reciprocal_projection(&once).unwrap();
        let d = once
            .entries()
            .iter()
            .zip(twice.entries().iter())
            .map(|(p, q)| ((p - q) / p).abs())
            .fold(0.0, f64::max);
        worst_idem = worst_idem.max(d);
    }
    let secs = started.elapsed().as_secs_f64();
    r.check(
        "4.5 projection idempotent, score completion consistent",
        worst_idem <= 1e-12 && worst_res <= 1e-9 && secs < 30.0,
        format!("100 random score vectors: max relative change on re-projection {worst_idem:.1e}, max triangle residual {worst_res:.1e}"),
    );

    let started = Instant::now();
    let mut worst: f64 = 0.0;
    for (c12, c21) in [(3u64, 1u64), (7, 2), (1, 9), (50, 50), (123, 17)] {
        let obs = ComparisonSet::counts(2, [(0, 1, c12, c21)]).unwrap();
        let x = btl::fit(&obs, &BtlFitConfig::default()).unwrap();
        worst = worst.max((x.log_ratio(0, 1) - (c12 as f64 / c21 as f64).ln()).abs());
    }
    r.check(
        "4.6 BTL two-item closed form",
        worst <= 1e-6 && started.elapsed().as_secs_f64() < 30.0,
        format!("x1 - x2 vs log(c12 / c21) on 5 count pairs: max error {worst:.1e} (tol 1e-6)"),
    );
}

fn main() {
    // `cargo test -- --list` and filtered runs should not trigger the
    // minutes-long benchmark.
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.iter().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let mut r = Report::default();
    worked_examples(&mut r);
    properties(&mut r);
    grid_trends(&mut r);
    scalability(&mut r);
    println!("== summary: {} passed, {} failed", r.passed, r.failed.len());
    if !r.failed.is_empty() {
        println!("failed criteria: {}", r.failed.join(", "));
        std::process::exit(1);
    }
}
