//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits non-zero
//! if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command as Process;
use std::time::Instant;

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use trotter_lab::experiments::{run, Command, ExperimentSpec};
use trotter_lab::matrix_lie::{self, expm, lie_error, nilpotent_pair, telescoping_residual};
use trotter_lab::rates::{fit_loglog, holder_bound_check, slow_convergence_check, DeltaSeq, Verdict};
use trotter_lab::semigroup::{
    operator_norm_oracle, per_tau_operator_norm, sup_operator_norm, uniform_tau_grid, OracleConfig,
};
use trotter_lab::{
    build_cantor, propagators, riemann_error, sup_riemann_error, CantorConstruction, DeltaPair,
    Potential, PotentialSpec, SearchConfig,
};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn pow2(lo: u32, hi: u32) -> Vec<u64> {
    (lo..=hi).map(|m| 1u64 << m).collect()
}

fn families() -> Vec<Potential> {
    let (cantor, _) = build_cantor(5).unwrap();
    vec![
        Potential::constant(1.5).unwrap(),
        Potential::linear(0.2, 1.3).unwrap(),
        Potential::piecewise_constant(vec![0.0, 0.3, 0.55, 1.0], vec![2.0, 0.0, 0.7]).unwrap(),
        Potential::weierstrass(0.5, 12).unwrap(),
        Potential::harmonic_tent_train(12).unwrap(),
        cantor,
    ]
}

fn sandwich_law() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce);
    let mut worst = f64::NEG_INFINITY;
    let mut checked = 0;
    for q in families() {
        let floor = (-q.sup_norm()).exp();
        for _ in 0..200 {
            let t: f64 = rng.gen_range(1e-6..=1.0);
            let s: f64 = rng.gen_range(0.0..t).max(1e-9).min(t);
            let n = rng.gen_range(2..=1024u64);
            let pt = DeltaPair::new(t, s).unwrap();
            let r = riemann_error(&q, pt, n).unwrap();
            let gap = propagators(&q, pt, n).unwrap().gap;
            worst = worst.max(gap - r).max(floor * r - gap);
            checked += 1;
        }
    }
    check(
        worst <= 1e-12,
        format!("{checked} triples, worst violation {worst:.2e} (tolerance 1e-12)"),
    )
}

fn holder_rates() -> Outcome {
    let cfg = SearchConfig::default();
    let lin = Potential::linear(0.0, 1.0).unwrap();
    let ns = pow2(3, 12);
    let mut worst_rel: f64 = 0.0;
    let mut points = Vec::new();
    for &n in &ns {
        let r = sup_riemann_error(&lin, n, &cfg).unwrap().r_n;
        let exact = 1.0 / (2.0 * n as f64);
        worst_rel = worst_rel.max((r - exact).abs() / exact);
        points.push((n, r));
    }
    let lin_slope = fit_loglog(&points).unwrap().slope;

    let w = Potential::weierstrass(0.5, 12).unwrap();
    let reports: Vec<_> = ns.iter().map(|&n| sup_riemann_error(&w, n, &cfg).unwrap()).collect();
    let bound_ok = holder_bound_check(&w, &reports).is_ok();
    let w_points: Vec<(u64, f64)> = reports.iter().map(|r| (r.n, r.r_n)).collect();
    let w_slope = fit_loglog(&w_points).unwrap().slope;

    check(
        worst_rel <= 1e-6 && (lin_slope + 1.0).abs() <= 0.05 && bound_ok && w_slope <= -0.4,
        format!(
            "linear: max rel err {worst_rel:.1e}, slope {lin_slope:.4}; \
             weierstrass: bound holds = {bound_ok}, slope {w_slope:.3}"
        ),
    )
}

fn commuting_exactness() -> Outcome {
    let cfg = SearchConfig {
        coarse_grid: 64,
        ..SearchConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for c in [0.0, 1.0, 2.5] {
        let q = Potential::constant(c).unwrap();
        for n in [1, 2, 3, 7, 64, 1024] {
            worst = worst.max(sup_riemann_error(&q, n, &cfg).unwrap().r_n);
            let mut taus = uniform_tau_grid(64);
            taus.extend((0..16).map(|_| rng.gen_range(0.0..1.0)));
            for tau in taus {
                worst = worst.max(per_tau_operator_norm(&q, tau, n).unwrap().value);
            }
        }
    }
    check(worst <= 1e-12, format!("largest R_n or operator norm {worst:.2e}"))
}

/// Membership in the removed set straight from the level intervals.
fn removed(x: f64, depth: u32) -> bool {
    (1..=depth).any(|n| {
        let scale = (1u64 << n) as f64;
        let k = (x * scale).round();
        (x - k / scale).abs() < 0.25 / scale / scale
    })
}

fn counterexample_floor() -> Outcome {
    let depth = 6;
    let (q, c) = build_cantor(depth).unwrap();
    let measure = c.complement_measure_f64();
    let mut points = Vec::new();
    let mut floor_ok = true;
    for m in 1..=depth {
        let n = 1u64 << m;
        let eps = CantorConstruction::corner_epsilon(m);
        let eps_f = *eps.numer() as f64 / *eps.denom() as f64;
        let cfg = SearchConfig::default().with_hints([DeltaPair::new(1.0 - 0.5 * eps_f, 0.5 * eps_f).unwrap()]);
        let r = sup_riemann_error(&q, n, &cfg).unwrap().r_n;
        floor_ok &= r >= measure - 2.0 * eps_f && measure - 2.0 * eps_f >= 0.49;
        points.push((n, r));
    }
    let verdict = fit_loglog(&points).unwrap().verdict;

    let half_ok = (1..=12).all(|d| build_cantor(d).unwrap().1.complement_measure >= Ratio::new(1, 2));
    let (_, c3) = build_cantor(3).unwrap();
    let exact_ok = c3.complement_measure == Ratio::new(21, 32);
    let cells = 1usize << 20;
    let kept = (0..cells)
        .filter(|&i| !removed((i as f64 + 0.5) / cells as f64, 3))
        .count();
    let grid = kept as f64 / cells as f64;
    let grid_ok = (grid - 21.0 / 32.0).abs() <= 1e-4;

    check(
        floor_ok && verdict == Verdict::NonConvergent && half_ok && exact_ok && grid_ok,
        format!(
            "min R_(2^m) {:.4}, |C_6| = {}, verdict {verdict}, depth-3 measure {} (grid {grid:.6})",
            points.iter().map(|p| p.1).fold(f64::INFINITY, f64::min),
            c.complement_measure,
            c3.complement_measure
        ),
    )
}

fn reduction_consistency() -> Outcome {
    let (cantor, _) = build_cantor(3).unwrap();
    let family = [Potential::linear(0.0, 1.0).unwrap(), cantor];
    let taus = uniform_tau_grid(256);
    let oracle_cfg = OracleConfig {
        resolution: 1 << 16,
        p: 2.0,
        trials: 4,
        seed: 17,
    };
    let mut ok = true;
    let mut details = Vec::new();
    for q in &family {
        let floor = (-q.sup_norm()).exp();
        for n in [4u64, 16, 64] {
            let report = sup_riemann_error(q, n, &SearchConfig::default()).unwrap();
            let upper = report.upper_op_norm.unwrap_or(report.r_n);
            let symbol = sup_operator_norm(q, n, &taus).unwrap();
            let contained = symbol.value >= floor * report.r_n - 1e-3 && symbol.value <= upper + 1e-3;
            let oracle = operator_norm_oracle(q, symbol.tau, n, &oracle_cfg).unwrap();
            let close = (oracle.value - symbol.value).abs() <= 0.05 * symbol.value;
            ok &= contained && close;
            details.push(format!(
                "{} n={n}: {:.4} in [{:.4}, {:.4}], oracle {:.4}",
                q.label(),
                symbol.value,
                floor * report.r_n,
                upper,
                oracle.value
            ));
        }
    }
    check(ok, details.join("; "))
}

fn dichotomy() -> Outcome {
    let mut spec = ExperimentSpec::new(Command::Strong)
        .with_potential(PotentialSpec::CantorIndicator { depth: 4 })
        .with_ns(pow2(1, 8));
    spec.tau = Some(0.5);
    let report = run(&spec).unwrap();
    let rows: Vec<_> = report.rows.iter().filter(|r| r.n.is_some()).collect();
    let monotone = rows.windows(2).all(|w| w[1].value <= w[0].value + 1e-3);
    let floor = 0.49 * (-1f64).exp();
    let norm_min = rows
        .iter()
        .filter(|r| r.n.unwrap() <= 16)
        .map(|r| r.upper.unwrap())
        .fold(f64::INFINITY, f64::min);
    check(
        monotone && norm_min >= floor,
        format!(
            "residuals {:.2e} -> {:.2e} monotone = {monotone}; min operator norm for m <= 4: {norm_min:.4} (floor {floor:.4})",
            rows[0].value,
            rows[rows.len() - 1].value
        ),
    )
}

fn slow_convergence() -> Outcome {
    let levels = 12;
    let q = Potential::harmonic_tent_train(levels).unwrap();
    let ms: Vec<u32> = (2..=10).collect();
    let cfg = SearchConfig {
        coarse_grid: 64,
        refine_levels: 3,
        certify: false,
        ..SearchConfig::default()
    };
    let table = slow_convergence_check(&q, DeltaSeq::InversePower(1.0), &ms, &cfg).unwrap();
    let mut bounds_ok = true;
    for row in &table.rows {
        let m = row.m as i32;
        let predicted: f64 = 0.5 * (m..=levels as i32).map(|j| 1.0 / j as f64).sum::<f64>()
            - (1..m).map(|j| 2f64.powi(j - m + 1) / j as f64).sum::<f64>();
        bounds_ok &= row.r_n >= predicted;
    }
    let increasing = table.rows.windows(2).all(|w| w[1].r_n * w[1].n as f64 > w[0].r_n * w[0].n as f64);
    check(
        bounds_ok && increasing,
        format!(
            "lower bounds hold = {bounds_ok}; n R_n from {:.3} to {:.3}, increasing = {increasing}",
            table.rows[0].ratio,
            table.rows[table.rows.len() - 1].ratio
        ),
    )
}

fn matrix_lie_rates() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for k in 0..100 {
        let dim = 1 + k % 8;
        let (a, b) = matrix_lie::random_pair(dim, 2.0, &mut rng).unwrap();
        let tau = rng.gen_range(0.05..=1.0);
        let n = rng.gen_range(1..=16);
        let scale = (a.spectral_norm() + b.spectral_norm()).exp();
        worst = worst.max(telescoping_residual(&a, &b, tau, n).unwrap() / scale);
    }

    let (a, b) = nilpotent_pair();
    // e^{-X} = cosh(1) I - sinh(1) X for X = [[0,1],[1,0]]
    let e = expm(&a.add(&b).unwrap().scaled(-1.0)).unwrap();
    let (ch, sh) = (1f64.cosh(), 1f64.sinh());
    let closed = [ch, -sh, -sh, ch];
    let expm_err = (0..4)
        .map(|i| (e.entries()[(i / 2, i % 2)].re - closed[i]).abs())
        .fold(0.0, f64::max);
    let slope = fit_loglog(&lie_error(&a, &b, 1.0, &pow2(4, 12)).unwrap()).unwrap().slope;

    check(
        worst <= 1e-12 && (slope + 1.0).abs() <= 0.1 && expm_err <= 1e-14,
        format!("worst scaled residual {worst:.2e}; nilpotent slope {slope:.4}; expm error {expm_err:.1e}"),
    )
}

fn cli_output(args: &[&str]) -> String {
    let out = Process::new(env!("CARGO_BIN_EXE_trotter-lab"))
        .args(args)
        .env("TROTTER_LAB_THREADS", "2")
        .output()
        .expect("binary runs");
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    if args.contains(&"json") {
        let mut doc: Value = serde_json::from_str(&text).unwrap();
        doc["meta"].as_object_mut().unwrap().remove("generated_at_unix");
        doc.to_string()
    } else {
        text
    }
}

fn determinism() -> Outcome {
    let runs: [&[&str]; 6] = [
        &["rates", "--potential", "weier:beta=0.5,levels=8", "--n", "4..64", "--grid", "64"],
        &["cantor", "--depth", "4", "--grid", "64", "--format", "json"],
        &["oracle", "--potential", "cantor:depth=2", "--n", "4", "--m", "4096", "--trials", "3", "--seed", "9"],
        &["lie", "--dim", "5", "--seed", "42", "--trials", "10", "--format", "json"],
        &["strong", "--n", "2..32", "--m", "4096", "--tau-grid", "64", "--grid", "64"],
        &["lie", "--matrices", "diagonal", "--seed", "5"],
    ];
    let mut differing = Vec::new();
    for args in runs {
        if cli_output(args) != cli_output(args) {
            differing.push(args[0]);
        }
    }
    check(
        differing.is_empty(),
        format!("{} commands run twice, differing: {differing:?}", runs.len()),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("sandwich law", sandwich_law),
        ("Lipschitz/Hölder rates", holder_rates),
        ("commuting exactness", commuting_exactness),
        ("counterexample floor", counterexample_floor),
        ("reduction consistency", reduction_consistency),
        ("strong vs. norm dichotomy", dichotomy),
        ("slow convergence demonstrator", slow_convergence),
        ("matrix Lie product", matrix_lie_rates),
        ("determinism", determinism),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut failures = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("criterion {} PASS {name} ({secs:.1}s): {d}", i + 1),
            Err(d) => {
                failures += 1;
                println!("criterion {} FAIL {name} ({secs:.1}s): {d}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
