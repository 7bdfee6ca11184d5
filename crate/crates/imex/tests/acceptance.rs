//! End-to-end acceptance checks, one PASS/FAIL line each. Runs without the
//! libtest harness so the lines are always printed.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use imex_core::bounds::{euler_recursion, l1_bound_a, safe_horizon, sup_bound_b};
use imex_core::convergence::{
    OrderReference, check_cauchy, default_times, empirical_order, fundamental_bound,
    run_refinement, slope_convergence_check,
};
use imex_core::imex::defect;
use imex_core::oracles::{heat_gaussian, riccati_exact};
use imex_core::reaction::MajorantPolynomial;
use imex_core::resolvent::verify_nonexpansive;
use imex_core::{
    BoundaryMode, GridFunction, GridSpec, NormKind, Preset, ReactionCoefficients,
    ResolventParams, apply_resolvent, run_trajectory,
};

type Outcome = Result<String, String>;
/// Name, check and runtime budget in seconds.
type Criterion = (&'static str, fn() -> Outcome, u64);

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok { Ok(detail) } else { Err(detail) }
}

fn unit_gaussian() -> Preset {
    Preset::Gaussian {
        amplitude: 1.0,
        center: 0.0,
        width: 1.0,
    }
}

/// gaussian f0 and source, `a_2 = -1`: `g_inf(y) = 1 + y²`.
fn logistic(points: usize) -> (GridFunction, ReactionCoefficients) {
    let spec = GridSpec::new(10.0, points, BoundaryMode::ZeroExtension).unwrap();
    let f0 = unit_gaussian().sample(spec).unwrap();
    let r = ReactionCoefficients::new(vec![
        unit_gaussian().sample(spec).unwrap(),
        GridFunction::zeros(spec),
        GridFunction::constant(spec, -1.0).unwrap(),
    ])
    .unwrap();
    (f0, r)
}

fn sci(xs: &[f64]) -> String {
    xs.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(", ")
}

fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

fn resolvent_symbol() -> Outcome {
    let spec = GridSpec::new(PI, 1024, BoundaryMode::Periodic).unwrap();
    let mut worst = 0.0f64;
    for h in [0.01, 0.1, 1.0] {
        let p = ResolventParams::new(h).unwrap();
        for k in [1u32, 3, 7] {
            let f = Preset::Cosine {
                amplitude: 1.0,
                mode: k,
            }
            .sample(spec)
            .unwrap();
            let expected = 1.0 / (1.0 + h * (k * k) as f64);
            let u = apply_resolvent(&f, &p).unwrap();
            // Amplitude by projection onto the mode, plus the residual off it.
            let amp = u
                .samples()
                .iter()
                .zip(f.samples())
                .map(|(a, b)| a * b)
                .sum::<f64>()
                / f.samples().iter().map(|b| b * b).sum::<f64>();
            let off = u.sub(&f.scale(amp).unwrap()).unwrap().norm_inf();
            worst = worst.max((amp - expected).abs() / expected).max(off / expected);
        }
    }
    ensure(worst <= 1e-6, format!("worst relative amplitude error {worst:.3e}"))
}

fn non_expansive() -> Outcome {
    let mut sup = 0.0f64;
    let mut l1 = 0.0f64;
    for mode in [BoundaryMode::ZeroExtension, BoundaryMode::Periodic] {
        let spec = GridSpec::new(5.0, 257, mode).unwrap();
        for (k, h) in [1e-3, 1e-1, 1.0].into_iter().enumerate() {
            let p = ResolventParams::new(h).unwrap();
            let r = verify_nonexpansive(spec, 1000, &p, 42 + k as u64).unwrap();
            sup = sup.max(r.worst_inf_ratio);
            l1 = l1.max(r.worst_l1_ratio);
        }
    }
    ensure(
        sup <= 1.0 && l1 <= 1.0 + 1e-10,
        format!("6000 trials: worst sup ratio {sup}, worst L1 ratio {l1}"),
    )
}

fn defect_decay() -> Outcome {
    let (f0, r) = logistic(4096);
    let mut ratios = Vec::new();
    for h in [1.0 / 64.0, 1.0 / 128.0, 1.0 / 256.0] {
        let d = defect(&f0, &r, &ResolventParams::new(h).unwrap()).unwrap();
        let d_half = defect(&f0, &r, &ResolventParams::new(h / 2.0).unwrap()).unwrap();
        ratios.push(d / d_half);
    }
    ensure(
        ratios.iter().all(|q| (1.7..=2.3).contains(q)),
        format!("defect(h)/defect(h/2) = {ratios:.4?}"),
    )
}

fn heat_order() -> Outcome {
    let spec = GridSpec::new(12.0, 4096, BoundaryMode::ZeroExtension).unwrap();
    let f0 = unit_gaussian().sample(spec).unwrap();
    let levels = [16, 32, 64, 128];
    let t = 0.5;
    let exact = GridFunction::from_fn(spec, |x| heat_gaussian(x, t, 1.0, 1.0)).unwrap();
    let family = run_refinement(&f0, &ReactionCoefficients::zero(spec), t, &levels).unwrap();
    let est = empirical_order(&family, &OrderReference::Exact(exact.clone()), t).unwrap();
    // Independent fit from the raw trajectories.
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for traj in family.trajectories() {
        let err = traj.iterates()[traj.steps()].sub(&exact).unwrap().norm_inf();
        xs.push(traj.step_size().ln());
        ys.push(err.ln());
    }
    let check = least_squares_slope(&xs, &ys);
    ensure(
        (0.8..=1.2).contains(&est.order) && (est.order - check).abs() < 1e-9,
        format!("order {:.4}, errors [{}]", est.order, sci(&est.errors)),
    )
}

fn ode_reduction_order() -> Outcome {
    let spec = GridSpec::new(1.0, 65, BoundaryMode::Periodic).unwrap();
    let c = |v| GridFunction::constant(spec, v).unwrap();
    let r = ReactionCoefficients::new(vec![c(1.0), c(0.0), c(-1.0)]).unwrap();
    let t: f64 = 1.0;
    let exact = c(t.tanh());
    let family = run_refinement(&c(0.0), &r, t, &[16, 32, 64, 128]).unwrap();
    let est = empirical_order(&family, &OrderReference::Exact(exact), t).unwrap();
    let finest = *est.errors.last().unwrap();
    ensure(
        (0.8..=1.2).contains(&est.order) && finest < 5e-3,
        format!("order {:.4}, finest error {finest:.3e}", est.order),
    )
}

fn euler_under_convex() -> Outcome {
    let g = MajorantPolynomial::from_coefficients(vec![0.0, 0.0, 1.0], NormKind::InfNorm).unwrap();
    let t = 0.5;
    let mut ends = Vec::new();
    let mut worst = f64::INFINITY;
    for n in [5usize, 50, 500] {
        let h = t / n as f64;
        let it = euler_recursion(&g, 1.0, h, n).unwrap();
        for (k, &y) in it.iter().enumerate() {
            worst = worst.min(riccati_exact(1.0, k as f64 * h).unwrap() + 1e-9 - y);
        }
        ends.push(it[n]);
    }
    let increasing = ends.windows(2).all(|w| w[0] < w[1]);
    ensure(
        worst >= 0.0 && increasing,
        format!("min slack {worst:.3e}, f_N = {ends:.6?} (exact 2)"),
    )
}

fn bounds_dominate() -> Outcome {
    let (f0, r) = logistic(4096);
    let t = 0.5 * safe_horizon(&f0, &r, 0.5).unwrap();
    let b = sup_bound_b(&f0, &r, t).unwrap();
    let a = l1_bound_a(&f0, &r, b, t).unwrap();
    let (mut sup, mut l1) = (0.0f64, 0.0f64);
    for n in [8, 16, 32, 64, 128] {
        let traj = run_trajectory(&f0, &r, t, n).unwrap();
        for f in traj.iterates() {
            sup = sup.max(f.norm_inf());
            l1 = l1.max(f.norm_1());
        }
    }
    let (sb, sa) = (b - sup, a - l1);
    ensure(
        sb > 0.0 && sa > 0.0,
        format!("T = {t:.5}: B - max sup = {sb:.4e}, A - max L1 = {sa:.4e}"),
    )
}

fn fundamental_inequality() -> Outcome {
    let (f0, r) = logistic(4096);
    let t = 0.25 * safe_horizon(&f0, &r, 0.5).unwrap();
    let family = run_refinement(&f0, &r, t, &[16, 32, 64]).unwrap();
    let times = default_times(t);
    let report = check_cauchy(&family, &times).unwrap();
    let g = r.majorant(NormKind::InfNorm);
    let mut worst = 0.0f64;
    let mut all_hold = true;
    for c in &report.checks {
        let eta = family.eta(c.i, c.j, c.t).unwrap();
        let bound = fundamental_bound(report.eps[c.i], report.eps[c.j], report.a, report.b, &g, c.t);
        all_hold &= eta <= bound && eta == c.eta && bound == c.bound;
        if bound > 0.0 {
            worst = worst.max(eta / bound);
        }
    }
    ensure(
        times.len() == 10 && all_hold && report.decreasing,
        format!(
            "{} checks, worst eta/bound {worst:.3e}, sup eta by pair [{}]",
            report.checks.len(),
            sci(&report.consecutive)
        ),
    )
}

fn limit_slope() -> Outcome {
    let (f0, r) = logistic(4096);
    let t = 0.25 * safe_horizon(&f0, &r, 0.5).unwrap();
    let family = run_refinement(&f0, &r, t, &[16, 32, 64]).unwrap();
    let report = slope_convergence_check(&family, 0.13 * t, t / 2048.0).unwrap();
    ensure(report.passes(), format!("gaps [{}]", sci(&report.gaps)))
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn imex(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_imex"))
        .args(args)
        .output()
        .expect("binary runs");
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn cli_contract() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let d = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    let cfg = configs_dir().join("logistic.conf").to_string_lossy().into_owned();

    let mut problems = Vec::new();
    for run in ["a", "b"] {
        let (code, err) = imex(&["converge", "--config", &cfg, "--out", &d(run)]);
        if code != 0 {
            problems.push(format!("converge exit {code}: {err}"));
        }
    }
    for file in ["report.txt", "eta.csv", "levels.csv"] {
        let a = std::fs::read(dir.path().join("a").join(file)).unwrap_or_default();
        let b = std::fs::read(dir.path().join("b").join(file)).unwrap_or_default();
        if a.is_empty() || a != b {
            problems.push(format!("{file} differs between runs"));
        }
    }

    let write = |name: &str, text: &str| {
        let path = dir.path().join(name);
        std::fs::write(&path, text).unwrap();
        path.to_string_lossy().into_owned()
    };
    let base = "grid.half_width = 5\ngrid.points = 101\ninitial = gaussian\ntime.horizon = 0.5\n";
    let bad_key = write("bad.conf", &format!("{base}grid.colour = red\n"));
    let blow = write(
        "blow.conf",
        "grid.half_width = 5\ngrid.points = 101\ninitial = constant value=1000\n\
         reaction.a3 = constant value=1\ntime.horizon = 1\ntime.steps = 8\n",
    );
    let heat = configs_dir().join("heat_gaussian.conf").to_string_lossy().into_owned();
    let blocked = write("blocked", "a file, not a directory\n");
    let zero = configs_dir().join("zero.conf").to_string_lossy().into_owned();
    let cases: [(&str, Vec<String>, i32); 7] = [
        ("malformed key", vec!["solve".into(), "--config".into(), bad_key, "--out".into(), d("bad")], 2),
        ("two levels", vec!["converge".into(), "--config".into(), heat.clone(), "--levels".into(), "16,32".into(), "--out".into(), d("two")], 2),
        ("blow-up", vec!["solve".into(), "--config".into(), blow, "--out".into(), d("blow")], 3),
        ("non-monotone levels", vec!["converge".into(), "--config".into(), heat, "--levels".into(), "16,17,64".into(), "--out".into(), d("fail")], 4),
        ("zero step", vec!["verify".into(), "--h".into(), "0".into()], 2),
        ("missing config", vec!["bounds".into(), "--config".into(), d("nope.conf")], 2),
        ("unwritable output", vec!["solve".into(), "--config".into(), zero, "--out".into(), blocked], 1),
    ];
    for (what, args, want) in &cases {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let (code, _) = imex(&args);
        if code != *want {
            problems.push(format!("{what}: exit {code}, expected {want}"));
        }
    }
    if dir.path().join("bad").exists() {
        problems.push("malformed config still produced output".into());
    }
    if !dir.path().join("blow").join("manifest.txt").exists() {
        problems.push("blow-up run wrote no manifest".into());
    }
    ensure(
        problems.is_empty(),
        if problems.is_empty() {
            format!("byte-identical reports, {} exit codes as documented", cases.len())
        } else {
            problems.join("; ")
        },
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("resolvent symbol", resolvent_symbol, 1),
        ("non-expansiveness", non_expansive, 5),
        ("defect decay", defect_decay, 10),
        ("heat-equation order", heat_order, 30),
        ("ODE-reduction order", ode_reduction_order, 10),
        ("Euler under convex solution", euler_under_convex, 1),
        ("a-priori bounds dominate runs", bounds_dominate, 10),
        ("fundamental inequality", fundamental_inequality, 60),
        ("limit-slope consistency", limit_slope, 10),
        ("determinism and CLI contract", cli_contract, 60),
    ];
    let mut failed = 0;
    for (k, (name, check, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let in_time = elapsed <= Duration::from_secs(*limit);
        let (ok, detail) = match outcome {
            Ok(d) => (in_time, d),
            Err(d) => (false, d),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {:>2} {}: {name}: {detail} [{:.2}s of {limit}s]",
            k + 1,
            if ok { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
