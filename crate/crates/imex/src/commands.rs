//! The four subcommands. Each writes its files into an output directory and
//! returns a summary; failures map onto the exit-code contract through
//! [`CliError`].

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::sync::Mutex;
use std::sync::atomic::{AtomicUsize, Ordering};

use imex_core::bounds::{
    EulerCheck, check_euler_underestimate, comparison_blow_up, l1_bound_a, rate_constant,
    sup_bound_b,
};
use imex_core::convergence::{
    ConvergenceReport, OrderEstimate, OrderReference, RefinementFamily, SlopeReport, check_cauchy,
    default_times, empirical_order, slope_convergence_check,
};
use imex_core::imex::max_defect_along;
use imex_core::oracles::{OracleScenario, constant_state_ode};
use imex_core::resolvent::{kernel_mass, verify_inverse, verify_nonexpansive};
use imex_core::{
    BoundaryMode, Error, GridSpec, ImexTrajectory, NormKind, Preset, ResolventParams,
    apply_resolvent, run_trajectory,
};

use crate::config::{InitialCondition, Scenario, ScenarioConfig};
use crate::io::{self, Table};
use crate::{CliError, CliResult};

fn create_dir(out: &Path) -> CliResult<()> {
    fs::create_dir_all(out).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn pass(ok: bool) -> &'static str {
    if ok { "PASS" } else { "FAIL" }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "none".to_string(), |t| t.to_string())
}

/// A-priori constants for a scenario at its horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub b: f64,
    pub a: f64,
    pub c: f64,
    pub blow_up_time: Option<f64>,
}

pub fn scenario_bounds(sc: &Scenario, ceiling: f64) -> imex_core::Result<Bounds> {
    let g = sc.reaction.majorant(NormKind::InfNorm);
    let blow_up_time = comparison_blow_up(&g, sc.f0.norm_inf(), ceiling.max(sc.horizon))?;
    let b = sup_bound_b(&sc.f0, &sc.reaction, sc.horizon)?;
    Ok(Bounds {
        b,
        a: l1_bound_a(&sc.f0, &sc.reaction, b, sc.horizon)?,
        c: rate_constant(&sc.reaction, b)?,
        blow_up_time,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveSummary {
    pub steps: usize,
    pub eps: f64,
    pub bounds: Option<Bounds>,
    pub sup_within_b: Option<bool>,
    pub l1_within_a: Option<bool>,
}

/// Runs one trajectory and writes `iterates.csv`, `norms.csv` and
/// `manifest.txt`. On blow-up only the manifest is written.
pub fn solve(cfg: &ScenarioConfig, out: &Path) -> CliResult<SolveSummary> {
    let steps = cfg
        .steps
        .ok_or_else(|| CliError::Config("solve needs time.steps".into()))?;
    let sc = cfg.build()?;
    create_dir(out)?;
    let bounds = scenario_bounds(&sc, cfg.ceiling);

    let mut manifest = String::from("# imex solve manifest; reads back as a config\n");
    manifest.push_str(&cfg.to_text());
    let _ = writeln!(manifest, "result.horizon = {}", sc.horizon);
    let _ = writeln!(manifest, "result.t_safe = {}", sc.t_safe);
    let _ = writeln!(manifest, "result.h = {}", sc.horizon / steps as f64);
    match &bounds {
        Ok(bd) => {
            let _ = writeln!(manifest, "result.b = {}", bd.b);
            let _ = writeln!(manifest, "result.a = {}", bd.a);
            let _ = writeln!(manifest, "result.c = {}", bd.c);
            let _ = writeln!(manifest, "result.blow_up_time = {}", opt(bd.blow_up_time));
        }
        Err(e) => {
            let _ = writeln!(manifest, "result.bounds = unavailable ({e})");
        }
    }

    let traj = match run_trajectory(&sc.f0, &sc.reaction, sc.horizon, steps) {
        Ok(t) => t,
        Err(e @ Error::BlowUp { step, time }) => {
            let _ = writeln!(manifest, "result.status = blow-up");
            let _ = writeln!(manifest, "result.failed_step = {step}");
            let _ = writeln!(manifest, "result.failed_time = {time}");
            write_text(&out.join("manifest.txt"), &manifest)?;
            return Err(e.into());
        }
        Err(e) => return Err(e.into()),
    };

    let times: Vec<f64> = (0..=steps).map(|n| traj.node_time(n)).collect();
    io::write_table(&out.join("iterates.csv"), &io::iterate_table(&times, traj.iterates()))?;

    let mut norms = Table::new(["n", "t", "norm_inf", "norm_1", "norm_2"]);
    for (n, f) in traj.iterates().iter().enumerate() {
        norms.push(vec![n as f64, times[n], f.norm_inf(), f.norm_1(), f.norm_2()]);
    }
    io::write_table(&out.join("norms.csv"), &norms)?;

    let eps = max_defect_along(&traj)?;
    let bounds = bounds.ok();
    let sup_within_b = bounds.map(|bd| traj.iterates().iter().all(|f| f.norm_inf() <= bd.b));
    let l1_within_a = bounds.map(|bd| traj.iterates().iter().all(|f| f.norm_1() <= bd.a));
    let _ = writeln!(manifest, "result.status = ok");
    let _ = writeln!(manifest, "result.eps = {eps}");
    if let (Some(s), Some(l)) = (sup_within_b, l1_within_a) {
        let _ = writeln!(manifest, "result.sup_within_b = {s}");
        let _ = writeln!(manifest, "result.l1_within_a = {l}");
    }
    let _ = writeln!(manifest, "# result.step.<n> = norm_inf,norm_1");
    for (n, f) in traj.iterates().iter().enumerate() {
        let _ = writeln!(manifest, "result.step.{n} = {},{}", f.norm_inf(), f.norm_1());
    }
    write_text(&out.join("manifest.txt"), &manifest)?;

    Ok(SolveSummary {
        steps,
        eps,
        bounds,
        sup_within_b,
        l1_within_a,
    })
}

/// Every step count from the smallest to the largest level.
pub fn full_sweep(levels: &[usize]) -> Vec<usize> {
    match (levels.first(), levels.last()) {
        (Some(&lo), Some(&hi)) => (lo..=hi).collect(),
        _ => Vec::new(),
    }
}

/// Runs the levels on worker threads; the result is in level order and does
/// not depend on scheduling.
pub fn run_levels(sc: &Scenario, levels: &[usize]) -> CliResult<RefinementFamily> {
    let workers = std::thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(levels.len())
        .max(1);
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<imex_core::Result<ImexTrajectory>>>> =
        Mutex::new(vec![None; levels.len()]);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| {
                loop {
                    let k = next.fetch_add(1, Ordering::Relaxed);
                    if k >= levels.len() {
                        break;
                    }
                    let n = levels[k];
                    let result = run_trajectory(&sc.f0, &sc.reaction, sc.horizon, n).map_err(|e| {
                        Error::AtLevel {
                            steps: n,
                            source: Box::new(e),
                        }
                    });
                    slots.lock().expect("no worker panics while holding the lock")[k] =
                        Some(result);
                }
            });
        }
    });
    let trajectories = slots
        .into_inner()
        .expect("workers finished")
        .into_iter()
        .map(|r| r.expect("every level was run"))
        .collect::<imex_core::Result<Vec<_>>>()?;
    Ok(RefinementFamily::from_trajectories(trajectories)?)
}

/// Closed-form or dense reference for scenarios that have one.
pub fn oracle_for(cfg: &ScenarioConfig, sc: &Scenario) -> Option<OracleScenario> {
    let InitialCondition::Preset(initial) = cfg.initial else {
        return None;
    };
    let coeffs = sc.reaction.coefficients();
    let only_linear = coeffs.len() == 2 && coeffs[0].is_zero() && coeffs[1].is_constant();
    match (initial, sc.spec.mode()) {
        (
            Preset::Gaussian {
                amplitude,
                center,
                width,
            },
            BoundaryMode::ZeroExtension,
        ) if center == 0.0 => {
            if sc.reaction.is_zero() {
                Some(OracleScenario::HeatGaussian { amplitude, width })
            } else if only_linear {
                Some(OracleScenario::LinearReaction {
                    lambda: coeffs[1].samples()[0],
                    amplitude,
                    width,
                })
            } else {
                None
            }
        }
        (Preset::Cosine { amplitude, mode }, BoundaryMode::Periodic) if sc.reaction.is_zero() => {
            Some(OracleScenario::HeatCosine {
                amplitude,
                mode,
                half_width: sc.spec.half_width(),
            })
        }
        (Preset::Constant(y0), BoundaryMode::Periodic) => {
            let dense = constant_state_ode(&sc.reaction, y0, sc.horizon).ok()?;
            dense
                .blow_up_time()
                .is_none()
                .then_some(OracleScenario::ConstantState(dense))
        }
        (Preset::Zero, _) if sc.reaction.is_zero() => Some(OracleScenario::HeatGaussian {
            amplitude: 0.0,
            width: 1.0,
        }),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergeSummary {
    pub report: ConvergenceReport,
    pub oracle: Option<&'static str>,
    pub slope: Option<SlopeReport>,
}

impl ConvergeSummary {
    pub fn order(&self) -> Option<&OrderEstimate> {
        self.report.order.as_ref()
    }
}

/// Probe of the slope check, as fractions of the horizon.
const SLOPE_PROBE_T: f64 = 0.13;
const SLOPE_PROBE_DT: f64 = 1.0 / 2048.0;

/// Refinement study: writes `eta.csv`, `levels.csv` and `report.txt`, whose
/// last line is the verdict.
pub fn converge(
    cfg: &ScenarioConfig,
    out: &Path,
    levels: Option<&[usize]>,
    sweep: bool,
) -> CliResult<ConvergeSummary> {
    let mut levels: Vec<usize> = levels
        .map(<[usize]>::to_vec)
        .or_else(|| cfg.levels.clone())
        .ok_or_else(|| CliError::Config("converge needs time.levels or --levels".into()))?;
    if levels.is_empty() || levels[0] == 0 || levels.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CliError::Config("levels must be strictly increasing and >= 1".into()));
    }
    if sweep {
        levels = full_sweep(&levels);
    }
    if levels.len() < 3 {
        return Err(CliError::Config(format!(
            "converge needs at least 3 levels, got {}",
            levels.len()
        )));
    }
    let sc = cfg.build()?;
    create_dir(out)?;

    let family = run_levels(&sc, &levels)?;
    let times = default_times(sc.horizon);
    let mut report = check_cauchy(&family, &times)?;
    let oracle = oracle_for(cfg, &sc);
    let reference = match &oracle {
        Some(o) => OrderReference::Exact(o.sample(sc.spec, sc.horizon)?),
        None => OrderReference::FinestLevel,
    };
    report = report.with_order(empirical_order(&family, &reference, sc.horizon)?);
    let slope = slope_convergence_check(
        &family,
        SLOPE_PROBE_T * sc.horizon,
        SLOPE_PROBE_DT * sc.horizon,
    )
    .ok();

    let mut eta = Table::new(["level_i", "level_j", "t", "eta", "bound"]);
    for c in &report.checks {
        eta.push(vec![
            levels[c.i] as f64,
            levels[c.j] as f64,
            c.t,
            c.eta,
            c.bound,
        ]);
    }
    io::write_table(&out.join("eta.csv"), &eta)?;

    let mut per_level = Table::new(["steps", "h", "eps", "order_error"]);
    let order = report.order.as_ref().expect("set above");
    for (k, &n) in levels.iter().enumerate() {
        let err = order.errors.get(k).copied().unwrap_or(0.0);
        per_level.push(vec![n as f64, sc.horizon / n as f64, report.eps[k], err]);
    }
    io::write_table(&out.join("levels.csv"), &per_level)?;

    let text = convergence_text(cfg, &sc, &report, oracle.as_ref(), slope.as_ref());
    write_text(&out.join("report.txt"), &text)?;

    let summary = ConvergeSummary {
        oracle: oracle.as_ref().map(OracleScenario::name),
        slope,
        report,
    };
    if summary.report.passes() {
        Ok(summary)
    } else {
        Err(CliError::ConvergenceFailed(format!(
            "bound {} / decreasing {}, see {}",
            pass(summary.report.bound_holds),
            pass(summary.report.decreasing),
            out.join("report.txt").display()
        )))
    }
}

fn join(values: impl IntoIterator<Item = String>) -> String {
    values.into_iter().collect::<Vec<_>>().join(",")
}

fn convergence_text(
    cfg: &ScenarioConfig,
    sc: &Scenario,
    report: &ConvergenceReport,
    oracle: Option<&OracleScenario>,
    slope: Option<&SlopeReport>,
) -> String {
    let mut s = String::from("# imex convergence report\n");
    for line in cfg.to_text().lines() {
        let _ = writeln!(s, "config.{line}");
    }
    let lv = &report.levels;
    let _ = writeln!(s, "levels = {}", join(lv.iter().map(usize::to_string)));
    let _ = writeln!(s, "horizon = {}", sc.horizon);
    let _ = writeln!(s, "t_safe = {}", sc.t_safe);
    let _ = writeln!(s, "b = {}", report.b);
    let _ = writeln!(s, "a = {}", report.a);
    let _ = writeln!(s, "ginf_prime_at_b = {}", report.growth);
    let _ = writeln!(s, "eps = {}", join(report.eps.iter().map(f64::to_string)));
    let _ = writeln!(s, "eps_ratios = {}", join(report.eps_ratios().iter().map(f64::to_string)));
    let _ = writeln!(
        s,
        "sup_eta_consecutive = {}",
        join(report.consecutive.iter().map(f64::to_string))
    );
    let held = report.checks.iter().filter(|c| c.holds()).count();
    let _ = writeln!(
        s,
        "bound_check = {} ({held} of {} sampled (pair, t) within bound)",
        pass(report.bound_holds),
        report.checks.len()
    );
    let _ = writeln!(s, "cauchy_decreasing = {}", pass(report.decreasing));
    if let Some(order) = &report.order {
        let label = match oracle {
            Some(o) => format!("{} ({})", order.reference, o.name()),
            None => order.reference.to_string(),
        };
        let _ = writeln!(s, "order.reference = {label}");
        let _ = writeln!(s, "order.errors = {}", join(order.errors.iter().map(f64::to_string)));
        if order.degenerate {
            let _ = writeln!(s, "order = degenerate");
        } else {
            let _ = writeln!(s, "order = {}", order.order);
        }
    }
    match slope {
        Some(sl) => {
            let _ = writeln!(s, "slope.t = {}", sl.t);
            let _ = writeln!(s, "slope.gaps = {}", join(sl.gaps.iter().map(f64::to_string)));
            let _ = writeln!(s, "slope.check = {}", pass(sl.passes()));
        }
        None => {
            let _ = writeln!(s, "slope.check = n/a (probe straddles a node)");
        }
    }
    let _ = writeln!(s, "verdict = {}", pass(report.passes()));
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundsSummary {
    pub horizon: f64,
    pub t_safe: f64,
    pub bounds: Bounds,
    pub euler: Option<EulerCheck>,
}

/// Writes `bounds.txt` and, when the comparison solution is convex and
/// finite on `[0, T]`, `euler_check.csv`.
pub fn bounds(cfg: &ScenarioConfig, out: &Path) -> CliResult<BoundsSummary> {
    let sc = cfg.build()?;
    create_dir(out)?;
    let g = sc.reaction.majorant(NormKind::InfNorm);
    let mut text = String::from("# imex a-priori bounds\n");
    let _ = writeln!(text, "horizon = {}", sc.horizon);
    let _ = writeln!(text, "t_safe = {}", sc.t_safe);
    let _ = writeln!(text, "norm_inf_f0 = {}", sc.f0.norm_inf());
    let _ = writeln!(text, "norm_1_f0 = {}", sc.f0.norm_1());
    let _ = writeln!(text, "ginf = {}", join(g.coefficients().iter().map(f64::to_string)));
    let bd = match scenario_bounds(&sc, cfg.ceiling) {
        Ok(bd) => bd,
        Err(e) => {
            let _ = writeln!(text, "bounds = unavailable ({e})");
            write_text(&out.join("bounds.txt"), &text)?;
            return Err(e.into());
        }
    };
    let _ = writeln!(text, "b = {}", bd.b);
    let _ = writeln!(text, "a = {}", bd.a);
    let _ = writeln!(text, "c = {}", bd.c);
    let _ = writeln!(text, "blow_up_time = {}", opt(bd.blow_up_time));

    let steps = cfg
        .steps
        .or_else(|| cfg.levels.as_ref().and_then(|l| l.last().copied()))
        .unwrap_or(100);
    let y0 = sc.f0.norm_inf();
    let euler = if y0 > 0.0 {
        let check = check_euler_underestimate(&g, y0, sc.horizon, steps)?;
        let mut table = Table::new(["n", "t", "euler", "exact", "slack"]);
        for r in &check.rows {
            table.push(vec![r.n as f64, r.t, r.euler, r.exact, r.slack()]);
        }
        io::write_table(&out.join("euler_check.csv"), &table)?;
        let _ = writeln!(text, "euler.steps = {steps}");
        let _ = writeln!(text, "euler.min_slack = {}", check.min_slack);
        let _ = writeln!(text, "euler.underestimates = {}", pass(check.holds));
        Some(check)
    } else {
        let _ = writeln!(text, "euler.underestimates = n/a (zero initial norm)");
        None
    };
    write_text(&out.join("bounds.txt"), &text)?;
    Ok(BoundsSummary {
        horizon: sc.horizon,
        t_safe: sc.t_safe,
        bounds: bd,
        euler,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    pub seed: u64,
    pub sizes: Vec<usize>,
    pub steps: Vec<f64>,
    pub trials: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            sizes: vec![65, 257, 1025],
            steps: vec![1e-3, 1e-1, 1.0],
            trials: 200,
        }
    }
}

/// One self-check line.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckLine {
    pub name: String,
    pub value: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub lines: Vec<CheckLine>,
    /// One `PASS`/`FAIL` line per check and a final verdict.
    pub text: String,
}

impl VerifyReport {
    pub fn passes(&self) -> bool {
        self.lines.iter().all(|l| l.ok)
    }

    pub fn into_result(self) -> CliResult<Self> {
        if self.passes() {
            Ok(self)
        } else {
            let failed = self.lines.iter().filter(|l| !l.ok).count();
            Err(CliError::SelfCheckFailed(format!("{failed} of {} checks", self.lines.len())))
        }
    }
}

/// Resolvent self-checks: non-expansiveness on random data, the cosine
/// symbol, kernel mass and the second-order inverse residual.
pub fn verify(opts: &VerifyOptions, out: Option<&Path>) -> CliResult<VerifyReport> {
    let params = opts
        .steps
        .iter()
        .map(|&h| ResolventParams::new(h))
        .collect::<imex_core::Result<Vec<_>>>()?;
    if opts.sizes.is_empty() || opts.trials == 0 {
        return Err(CliError::Config("verify needs at least one size and one trial".into()));
    }
    let mut lines = Vec::new();
    let mut push = |name: String, value: f64, ok: bool| lines.push(CheckLine { name, value, ok });

    for &m in &opts.sizes {
        for mode in [BoundaryMode::ZeroExtension, BoundaryMode::Periodic] {
            let spec = GridSpec::new(10.0, m, mode)?;
            for p in &params {
                let tag = format!("m={m} mode={} h={}", crate::config::mode_name(mode), p.h());
                let r = verify_nonexpansive(spec, opts.trials, p, opts.seed)?;
                push(format!("nonexpansive.sup {tag}"), r.worst_inf_ratio, r.worst_inf_ratio <= 1.0);
                push(format!("nonexpansive.l1 {tag}"), r.worst_l1_ratio, r.passes(1e-10));
                let mass = kernel_mass(spec, p)?;
                let (lo, hi) = mass
                    .samples()
                    .iter()
                    .fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
                let ok = match mode {
                    BoundaryMode::Periodic => (hi - 1.0).abs() < 1e-12 && (lo - 1.0).abs() < 1e-12,
                    BoundaryMode::ZeroExtension => lo > 0.0 && hi <= 1.0 + 1e-15,
                };
                push(format!("kernel_mass.max {tag}"), hi, ok);
            }
        }
    }

    let spec = GridSpec::new(std::f64::consts::PI, 1024, BoundaryMode::Periodic)?;
    for p in &params {
        for k in [1u32, 3, 7] {
            let f = Preset::Cosine {
                amplitude: 1.0,
                mode: k,
            }
            .sample(spec)?;
            let factor = 1.0 / (1.0 + p.h() * (k * k) as f64);
            let rel = apply_resolvent(&f, p)?.sub(&f.scale(factor)?)?.norm_inf() / factor;
            push(format!("symbol m=1024 h={} k={k}", p.h()), rel, rel <= 1e-6);
        }
    }

    // On a periodic cosine the residual is h (ω² - λ_dx) / (1 + h ω²), with
    // λ_dx the three-point symbol: second order in dx for every h.
    for p in &params {
        let residual = |m: usize| -> CliResult<f64> {
            let spec = GridSpec::new(std::f64::consts::PI, m, BoundaryMode::Periodic)?;
            let f = Preset::Cosine {
                amplitude: 1.0,
                mode: 3,
            }
            .sample(spec)?;
            Ok(verify_inverse(&f, p)?.sup_residual)
        };
        let ratio = residual(257)? / residual(513)?;
        push(
            format!("inverse.order m=257/513 h={}", p.h()),
            ratio,
            (3.5..=4.5).contains(&ratio),
        );
    }

    let mut text = String::new();
    for l in &lines {
        let _ = writeln!(text, "{} {} {}", pass(l.ok), l.name, l.value);
    }
    let failed = lines.iter().filter(|l| !l.ok).count();
    let _ = writeln!(text, "verdict = {}", pass(failed == 0));
    if let Some(dir) = out {
        create_dir(dir)?;
        write_text(&dir.join("verify.txt"), &text)?;
    }
    Ok(VerifyReport { lines, text })
}
