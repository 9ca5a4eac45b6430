//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Run with `cargo test -p phaseloc --test acceptance`.

use std::process::ExitCode;
use std::time::Instant;

use phaseloc::bench::{
    run_noise_experiment, run_success_experiment, run_timing_experiment, ExperimentConfig, Method, TrialRecord,
};
use phaseloc::ensemble::{
    apply_complex_map, build_complex_full, build_complex_sparse, build_real_full, build_real_sparse,
};
use phaseloc::graph::{
    configurations_congruent, frameworks_equivalent, graph_from_ensemble, is_lateration, Framework, MeasurementGraph,
    EXHAUSTIVE_SEED_LIMIT,
};
use phaseloc::recovery::{recover_anchors, recover_complex, recover_real_adaptive, SignalOracle};
use phaseloc::signal::{random_signal, random_sparse_signal, rel_error_up_to_phase};
use phaseloc::{Complex64, Error, RecoveryOptions, Signal};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

fn spearman(x: &[f64], y: &[f64]) -> f64 {
    let (rx, ry) = (ranks(x), ranks(y));
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (mx, my) = (mean(&rx), mean(&ry));
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

fn anchors_in_general_position(x: &Signal) -> bool {
    let (a, b) = (x.at(1), x.at(2));
    let scale = a.norm() * (a.norm_sqr() + b.norm_sqr()).sqrt();
    scale > 0.0 && (a.conj() * b).im.abs() / scale > 1e-8
}

fn exact_recovery() -> Outcome {
    let start = Instant::now();
    let opts = RecoveryOptions::default();
    let mut worst = 0.0f64;
    let mut resampled = 0usize;
    let mut draws = 0usize;
    let mut failures = 0usize;
    for n in [2usize, 3, 10, 100, 1000] {
        let mut seed = n as u64 * 1_000_003;
        for _ in 0..1000 {
            let x = loop {
                seed += 1;
                draws += 1;
                let x = random_signal(n, seed).unwrap();
                if anchors_in_general_position(&x) {
                    break x;
                }
                resampled += 1;
            };
            let oracle = SignalOracle::new(&x);
            match recover_complex(&oracle, &opts) {
                Ok(rec) if rec.queries == 3 * n - 2 => {
                    worst = worst.max(rel_error_up_to_phase(&x, &rec.signal).unwrap());
                }
                _ => failures += 1,
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        failures == 0 && worst <= 1e-9 && secs < 30.0,
        format!(
            "5000 signals, max delta {worst:.2e}, {failures} failures, resampled {resampled}/{draws} ({:.2e}), {secs:.2}s",
            resampled as f64 / draws as f64
        ),
    )
}

fn count_identities() -> Outcome {
    let opts = RecoveryOptions::default();
    let mut bad = Vec::new();
    let mut checked = 0usize;
    for n in 2..=64usize {
        if build_complex_full(n).unwrap().len() != 3 * n - 2 {
            bad.push(format!("complex full n={n}"));
        }
        if build_real_full(n).unwrap().len() != 2 * n - 1 {
            bad.push(format!("real full n={n}"));
        }
        for s in 2..=n {
            checked += 1;
            let x = random_sparse_signal(n, s, (n * 100 + s) as u64).unwrap();
            let support: Vec<usize> = (1..=n).filter(|&k| x.at(k).norm() > 0.0).collect();
            if build_complex_sparse(n, &support).unwrap().len() != n + 2 * s - 2 {
                bad.push(format!("complex sparse n={n} s={s}"));
            }
            if build_real_sparse(n, &support).unwrap().len() != n + s - 1 {
                bad.push(format!("real sparse n={n} s={s}"));
            }
            if anchors_in_general_position_on(&x, &support) {
                let oracle = SignalOracle::new(&x);
                if recover_complex(&oracle, &opts).map(|r| r.queries).ok() != Some(n + 2 * s - 2) {
                    bad.push(format!("complex queries n={n} s={s}"));
                }
            }
            let real = Signal::from_real(&x.entries().iter().map(|c| c.re).collect::<Vec<_>>()).unwrap();
            let oracle = SignalOracle::new(&real);
            if recover_real_adaptive(&oracle, &opts).map(|r| r.queries).ok() != Some(n + s - 1) {
                bad.push(format!("real queries n={n} s={s}"));
            }
        }
    }
    outcome(bad.is_empty(), format!("{checked} (n, s) pairs, mismatches: {bad:?}"))
}

fn anchors_in_general_position_on(x: &Signal, support: &[usize]) -> bool {
    let (a, b) = (x.at(support[0]), x.at(support[1]));
    let scale = a.norm() * (a.norm_sqr() + b.norm_sqr()).sqrt();
    (a.conj() * b).im.abs() / scale > 1e-8
}

fn rate(records: &[TrialRecord], method: Method, n: usize, sigma: f64) -> (usize, usize) {
    let group: Vec<_> = records.iter().filter(|r| r.method == method && r.n == n && r.sigma == sigma).collect();
    (group.iter().filter(|r| r.success).count(), group.len())
}

fn success_probability() -> Outcome {
    let cfg = ExperimentConfig::default();
    let records = run_success_experiment(&cfg).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for method in Method::ALL {
        let mut cells = Vec::new();
        for &n in &cfg.n_grid {
            let (ok, total) = rate(&records, method, n, 0.0);
            let p = ok as f64 / total as f64;
            pass &= total == cfg.trials && p <= 1.0;
            if method == Method::Ours {
                pass &= ok == total;
            }
            cells.push(format!("{n}:{p:.2}"));
        }
        parts.push(format!("{method} [{}]", cells.join(" ")));
    }
    outcome(pass, parts.join("; "))
}

fn median_time(records: &[TrialRecord], method: Method, n: usize) -> f64 {
    median(records.iter().filter(|r| r.method == method && r.n == n).map(|r| r.time_ms).collect())
}

fn timing() -> Outcome {
    let cfg = ExperimentConfig { trials: 5, ..Default::default() };
    let records = run_timing_experiment(&cfg).unwrap();
    let mut pass = records.iter().all(|r| r.time_ms.is_finite() && r.time_ms > 0.0);
    let mut cells = Vec::new();
    for &n in &cfg.n_grid {
        let (ours, fienup, wf) =
            (median_time(&records, Method::Ours, n), median_time(&records, Method::Fienup, n), median_time(&records, Method::Wf, n));
        pass &= ours < fienup && ours < wf;
        cells.push(format!("n={n} ours {ours:.4} fienup {fienup:.2} wf {wf:.2} ms"));
    }
    let scaling = ExperimentConfig { n_grid: vec![200, 3200], trials: 21, methods: vec![Method::Ours], ..Default::default() };
    let records = run_timing_experiment(&scaling).unwrap();
    let ratio = median_time(&records, Method::Ours, 3200) / median_time(&records, Method::Ours, 200);
    pass &= ratio <= 32.0;
    cells.push(format!("ours 3200/200 ratio {ratio:.1}"));
    outcome(pass, cells.join("; "))
}

fn noise() -> Outcome {
    let sigmas = [0.0, 0.01, 0.02, 0.05];
    let cfg = ExperimentConfig { sigma_grid: sigmas.to_vec(), methods: vec![Method::Ours], ..Default::default() };
    let records = run_noise_experiment(&cfg).unwrap();
    let deltas = |sigma: f64| records.iter().filter(|r| r.sigma == sigma).map(|r| r.rel_error).collect::<Vec<_>>();
    let clean_max = deltas(0.0).into_iter().fold(0.0, f64::max);
    let medians: Vec<f64> = sigmas.iter().map(|&s| median(deltas(s))).collect();
    let rho = spearman(&sigmas, &medians);
    let rates: Vec<f64> = sigmas
        .iter()
        .map(|&s| {
            let (ok, total) = rate(&records, Method::Ours, cfg.noise_n, s);
            ok as f64 / total as f64
        })
        .collect();
    let pass = clean_max <= 1e-9 && rho > 0.9 && rates[1..].iter().all(|&p| p < 1.0);
    outcome(
        pass,
        format!(
            "max delta at 0: {clean_max:.2e}; medians {:?}; spearman {rho:.3}; success {rates:?}",
            medians.iter().map(|m| format!("{m:.2e}")).collect::<Vec<_>>()
        ),
    )
}

fn anchor_identities() -> Outcome {
    let opts = RecoveryOptions::default();
    let i = Complex64::new(0.0, 1.0);
    let mut worst_fwd = 0.0f64;
    let mut worst_shape = 0.0f64;
    let mut errors = 0;
    for t in 0..10_000u64 {
        let pair = random_signal(2, 77_000 + t).unwrap();
        let (x1, x2) = (pair.at(1), pair.at(2));
        let (w1, w2, z1, z2) = (x1.norm_sqr(), x2.norm_sqr(), (x1 + x2).norm_sqr(), (x1 + i * x2).norm_sqr());
        match recover_anchors(w1, w2, z1, z2, &opts) {
            Ok(a) => {
                let fwd = [
                    a.x1.norm_sqr() - w1,
                    a.x2.norm_sqr() - w2,
                    (a.x1 + a.x2).norm_sqr() - z1,
                    (a.x1 + i * a.x2).norm_sqr() - z2,
                ];
                worst_fwd = fwd.iter().fold(worst_fwd, |m, v| m.max(v.abs()));
                let rot = a.x1 / x1;
                worst_shape = worst_shape.max((rot * x2 - a.x2).norm()).max((rot.norm() - 1.0).abs());
            }
            Err(_) => errors += 1,
        }
    }
    let mut collinear_ok = 0;
    for t in 0..100u64 {
        let base = random_signal(1, 5_000 + t).unwrap().at(1);
        let scale = (t as f64 - 50.0) / 7.0;
        let x2 = base * scale;
        let (w1, w2, z1, z2) = (base.norm_sqr(), x2.norm_sqr(), (base + x2).norm_sqr(), (base + i * x2).norm_sqr());
        if matches!(recover_anchors(w1, w2, z1, z2, &opts), Err(Error::CollinearAnchors { .. })) {
            collinear_ok += 1;
        }
    }
    outcome(
        errors == 0 && worst_fwd <= 1e-10 && worst_shape <= 1e-10 && collinear_ok == 100,
        format!(
            "10000 pairs, forward residual {worst_fwd:.2e}, rotation mismatch {worst_shape:.2e}, {errors} errors; collinear rejected {collinear_ok}/100"
        ),
    )
}

/// Checks an ordering against the definition directly: a permutation whose
/// first `d + 1` vertices are pairwise adjacent and whose later vertices each
/// see at least `d + 1` earlier ones.
fn verify_ordering(g: &MeasurementGraph, d: usize, order: &[usize]) -> bool {
    let total = g.vertex_count();
    let mut seen = vec![false; total];
    if order.len() != total || order.iter().any(|&v| v >= total || std::mem::replace(&mut seen[v], true)) {
        return false;
    }
    let adjacent = |u: usize, v: usize| g.edges().contains(&(u.min(v), u.max(v)));
    let head = &order[..=d];
    if !head.iter().enumerate().all(|(a, &u)| head[a + 1..].iter().all(|&v| adjacent(u, v))) {
        return false;
    }
    (d + 1..total).all(|pos| order[..pos].iter().filter(|&&u| adjacent(u, order[pos])).count() >= d + 1)
}

fn lateration() -> Outcome {
    let mut bad = Vec::new();
    let mut checked = 0;
    for n in 1..=64usize {
        let mut cases = vec![(1usize, build_real_full(n).unwrap())];
        if n >= 2 {
            cases.push((2, build_complex_full(n).unwrap()));
        }
        for (d, ensemble) in cases {
            checked += 1;
            let g = graph_from_ensemble(&ensemble).unwrap();
            let seed: Vec<usize> = (0..=d).collect();
            let seed = (g.vertex_count() > EXHAUSTIVE_SEED_LIMIT).then_some(seed.as_slice());
            match is_lateration(&g, d, seed) {
                Ok(Some(order)) if verify_ordering(&g, d, &order) => {}
                other => bad.push(format!("d={d} n={n}: {other:?}")),
            }
        }
    }
    outcome(bad.is_empty(), format!("{checked} graphs, failures: {bad:?}"))
}

fn sign_invariance() -> Outcome {
    let mut worst = 0.0f64;
    let mut predicates_ok = 0;
    for t in 0..1000u64 {
        let n = 2 + (t as usize % 30);
        let x = random_signal(n, 31_000 + t).unwrap();
        let neg = x.neg();
        let e = build_complex_full(n).unwrap();
        let bx = apply_complex_map(&e, &x).unwrap();
        let bneg = apply_complex_map(&e, &neg).unwrap();
        worst = bx.iter().zip(&bneg).fold(worst, |m, (a, b)| m.max((a - b).norm()));
        let g = graph_from_ensemble(&e).unwrap();
        let fx = Framework::from_signal(g.clone(), &x).unwrap();
        let fneg = Framework::from_signal(g, &neg).unwrap();
        if frameworks_equivalent(&fx, &fneg).unwrap() && configurations_congruent(&fx, &fneg).unwrap() {
            predicates_ok += 1;
        }
    }
    outcome(
        worst <= 1e-12 && predicates_ok == 1000,
        format!("1000 signals, max |B(x) - B(-x)| {worst:.2e}, equivalent and congruent {predicates_ok}/1000"),
    )
}

/// Error after rotating `xhat` by `theta`, evaluated directly.
fn delta_at(x: &Signal, xhat: &Signal, theta: f64) -> f64 {
    let u = Complex64::from_polar(1.0, theta);
    let num: f64 = x.entries().iter().zip(xhat.entries()).map(|(a, b)| (a - u * b).norm_sqr()).sum();
    (num / x.norm().powi(2)).sqrt()
}

fn grid_cross_check() -> Outcome {
    let points = 1000;
    let step = std::f64::consts::TAU / points as f64;
    let mut worst = 0.0f64;
    let mut below_grid = 0;
    for t in 0..100u64 {
        let x = random_signal(8, 61_000 + t).unwrap();
        let xhat = random_signal(8, 62_000 + t).unwrap();
        let closed = rel_error_up_to_phase(&x, &xhat).unwrap();
        let (best_k, raw) = (0..points)
            .map(|k| (k, delta_at(&x, &xhat, k as f64 * step)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        // Golden-section refinement inside the winning grid cell.
        let phi = (5f64.sqrt() - 1.0) / 2.0;
        let (mut lo, mut hi) = ((best_k as f64 - 1.0) * step, (best_k as f64 + 1.0) * step);
        for _ in 0..100 {
            let (a, b) = (hi - phi * (hi - lo), lo + phi * (hi - lo));
            if delta_at(&x, &xhat, a) < delta_at(&x, &xhat, b) {
                hi = b;
            } else {
                lo = a;
            }
        }
        let refined = delta_at(&x, &xhat, 0.5 * (lo + hi)).min(raw);
        worst = worst.max((closed - refined).abs());
        if closed <= raw + 1e-12 {
            below_grid += 1;
        }
    }
    outcome(worst < 1e-6 && below_grid == 100, format!("100 pairs, max |closed - scan| {worst:.2e}, closed <= raw scan {below_grid}/100"))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("exact recovery up to global phase", exact_recovery),
        ("measurement count identities", count_identities),
        ("success probability, noiseless", success_probability),
        ("recovery time ordering and scaling", timing),
        ("noise robustness", noise),
        ("anchor identities and collinear rejection", anchor_identities),
        ("lateration orderings", lateration),
        ("complex map sign invariance", sign_invariance),
        ("phase-aligned error against grid scan", grid_cross_check),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let result = check();
        let tag = if result.pass { "PASS" } else { "FAIL" };
        println!("{tag} {name} ({:.1}s): {}", start.elapsed().as_secs_f64(), result.detail);
        if !result.pass {
            failed += 1;
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
