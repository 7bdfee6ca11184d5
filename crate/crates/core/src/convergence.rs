//! Refinement families, pairwise L² gaps and the checks built on them.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use crate::bounds::{l1_bound_a, sup_bound_b};
use crate::grid::GridFunction;
use crate::imex::{ImexTrajectory, max_defect_along, run_trajectory};
use crate::math;
use crate::reaction::{MajorantPolynomial, NormKind, ReactionCoefficients};
use crate::{Error, Result};

/// Errors below this make a log-log fit meaningless.
pub const ORDER_FLOOR: f64 = 1e-13;

/// Trajectories of one scenario at several step counts.
#[derive(Debug, Clone, PartialEq)]
pub struct RefinementFamily {
    f0: GridFunction,
    reaction: ReactionCoefficients,
    horizon: f64,
    levels: Vec<usize>,
    trajectories: Vec<ImexTrajectory>,
}

fn check_levels(levels: &[usize]) -> Result<()> {
    if levels.is_empty() || levels[0] == 0 || levels.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidLevels);
    }
    Ok(())
}

fn at_level(steps: usize) -> impl FnOnce(Error) -> Error {
    move |e| Error::AtLevel {
        steps,
        source: Box::new(e),
    }
}

/// Runs one trajectory per level. A failure is wrapped in
/// [`Error::AtLevel`] with its step count.
pub fn run_refinement(
    f0: &GridFunction,
    r: &ReactionCoefficients,
    horizon: f64,
    levels: &[usize],
) -> Result<RefinementFamily> {
    check_levels(levels)?;
    let trajectories = levels
        .iter()
        .map(|&n| run_trajectory(f0, r, horizon, n).map_err(at_level(n)))
        .collect::<Result<Vec<_>>>()?;
    Ok(RefinementFamily {
        f0: f0.clone(),
        reaction: r.clone(),
        horizon,
        levels: levels.to_vec(),
        trajectories,
    })
}

impl RefinementFamily {
    /// Assembles a family from trajectories computed elsewhere, e.g. in
    /// parallel. They must share the initial data, reaction and horizon.
    pub fn from_trajectories(trajectories: Vec<ImexTrajectory>) -> Result<Self> {
        let first = trajectories.first().ok_or(Error::InvalidLevels)?;
        let levels: Vec<usize> = trajectories.iter().map(ImexTrajectory::steps).collect();
        check_levels(&levels)?;
        let f0 = first.iterates()[0].clone();
        let reaction = first.reaction().clone();
        let horizon = first.horizon();
        for t in &trajectories[1..] {
            if t.iterates()[0] != f0 || *t.reaction() != reaction || t.horizon() != horizon {
                return Err(Error::GridMismatch);
            }
        }
        Ok(Self {
            f0,
            reaction,
            horizon,
            levels,
            trajectories,
        })
    }

    pub fn initial(&self) -> &GridFunction {
        &self.f0
    }

    pub fn reaction(&self) -> &ReactionCoefficients {
        &self.reaction
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn levels(&self) -> &[usize] {
        &self.levels
    }

    pub fn trajectories(&self) -> &[ImexTrajectory] {
        &self.trajectories
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// `η(t) = ‖u_i(t) - u_j(t)‖_2²` for level indices `i`, `j`.
    pub fn eta(&self, i: usize, j: usize, t: f64) -> Result<f64> {
        let (a, b) = (&self.trajectories[i], &self.trajectories[j]);
        let ua = a.eval(t)?;
        if i == j {
            return Ok(0.0);
        }
        Ok(ua.sub(&b.eval(t)?)?.norm_2_squared())
    }
}

/// `4 (ε_i + ε_j) A t exp(2 g'(B) t)`.
pub fn fundamental_bound(
    eps_i: f64,
    eps_j: f64,
    a: f64,
    b: f64,
    g: &MajorantPolynomial,
    t: f64,
) -> f64 {
    let prefactor = 4.0 * (eps_i + eps_j) * a * t;
    if prefactor == 0.0 {
        return 0.0;
    }
    prefactor * math::exp(2.0 * g.derivative_unchecked(b) * t)
}

/// `t_k = k T / (count - 1)` for `k = 0 .. count - 1`.
pub fn sample_times(horizon: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![horizon],
        _ => (0..count)
            .map(|k| {
                if k + 1 == count {
                    horizon
                } else {
                    horizon * k as f64 / (count - 1) as f64
                }
            })
            .collect(),
    }
}

/// Default probe set: `t = 0` and nine equally spaced times in `(0, T]`.
pub fn default_times(horizon: f64) -> Vec<f64> {
    sample_times(horizon, 10)
}

/// One `(pair, t)` comparison of measured gap against the bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairCheck {
    pub i: usize,
    pub j: usize,
    pub t: f64,
    pub eta: f64,
    pub bound: f64,
}

impl PairCheck {
    pub fn holds(&self) -> bool {
        self.eta <= self.bound
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub levels: Vec<usize>,
    pub times: Vec<f64>,
    /// Measured slope error per level.
    pub eps: Vec<f64>,
    pub a: f64,
    pub b: f64,
    /// `g_inf'(B)`
    pub growth: f64,
    /// `sup_t η` for each pair of levels, symmetric with zero diagonal.
    pub eta_sup: Vec<Vec<f64>>,
    pub checks: Vec<PairCheck>,
    /// `sup_t η` along consecutive levels `(0,1), (1,2), ...`.
    pub consecutive: Vec<f64>,
    pub bound_holds: bool,
    pub decreasing: bool,
    pub order: Option<OrderEstimate>,
}

impl ConvergenceReport {
    pub fn passes(&self) -> bool {
        self.bound_holds && self.decreasing
    }

    pub fn with_order(mut self, order: OrderEstimate) -> Self {
        self.order = Some(order);
        self
    }

    /// `ε_k / ε_{k+1}` along the levels.
    pub fn eps_ratios(&self) -> Vec<f64> {
        self.eps.windows(2).map(|w| w[0] / w[1]).collect()
    }
}

/// Strictly decreasing, except that a run of exact zeros counts as
/// converged.
fn strictly_decreasing(values: &[f64]) -> bool {
    values
        .windows(2)
        .all(|w| w[1] < w[0] || (w[0] == 0.0 && w[1] == 0.0))
}

/// Measures `ε` per level, takes `A`, `B` from the a-priori bounds, and
/// compares every pairwise `η(t)` with the fundamental bound.
pub fn check_cauchy(family: &RefinementFamily, times: &[f64]) -> Result<ConvergenceReport> {
    let levels = family.len();
    if levels < 3 {
        return Err(Error::TooFewLevels {
            required: 3,
            found: levels,
        });
    }
    let (f0, r, horizon) = (family.initial(), family.reaction(), family.horizon());
    let eps = family
        .trajectories
        .iter()
        .map(|t| max_defect_along(t).map_err(at_level(t.steps())))
        .collect::<Result<Vec<_>>>()?;
    let b = sup_bound_b(f0, r, horizon)?;
    let a = l1_bound_a(f0, r, b, horizon)?;
    let g = r.majorant(NormKind::InfNorm);
    let growth = g.derivative_unchecked(b);

    let samples: Vec<Vec<GridFunction>> = family
        .trajectories
        .iter()
        .map(|traj| times.iter().map(|&t| traj.eval(t)).collect())
        .collect::<Result<_>>()?;

    let mut eta_sup = vec![vec![0.0; levels]; levels];
    let mut checks = Vec::new();
    for i in 0..levels {
        for j in i + 1..levels {
            let mut sup = 0.0f64;
            for (k, &t) in times.iter().enumerate() {
                let eta = samples[i][k].sub(&samples[j][k])?.norm_2_squared();
                sup = sup.max(eta);
                checks.push(PairCheck {
                    i,
                    j,
                    t,
                    eta,
                    bound: fundamental_bound(eps[i], eps[j], a, b, &g, t),
                });
            }
            eta_sup[i][j] = sup;
            eta_sup[j][i] = sup;
        }
    }
    let consecutive: Vec<f64> = (0..levels - 1).map(|i| eta_sup[i][i + 1]).collect();
    Ok(ConvergenceReport {
        levels: family.levels.clone(),
        times: times.to_vec(),
        bound_holds: checks.iter().all(PairCheck::holds),
        decreasing: strictly_decreasing(&consecutive),
        eps,
        a,
        b,
        growth,
        eta_sup,
        checks,
        consecutive,
        order: None,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum OrderReference {
    /// Known solution at the probe time.
    Exact(GridFunction),
    /// Self-convergence against the finest level.
    FinestLevel,
}

impl OrderReference {
    pub fn label(&self) -> &'static str {
        match self {
            OrderReference::Exact(_) => "oracle",
            OrderReference::FinestLevel => "finest-level",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderEstimate {
    pub reference: &'static str,
    pub t: f64,
    pub steps: Vec<f64>,
    /// Sup-norm error per compared level.
    pub errors: Vec<f64>,
    /// Least-squares slope of `log error` against `log h`; NaN when
    /// degenerate.
    pub order: f64,
    pub degenerate: bool,
}

/// Observed order of accuracy at time `t`.
pub fn empirical_order(
    family: &RefinementFamily,
    reference: &OrderReference,
    t: f64,
) -> Result<OrderEstimate> {
    if family.len() < 3 {
        return Err(Error::TooFewLevels {
            required: 3,
            found: family.len(),
        });
    }
    let (compared, target) = match reference {
        OrderReference::Exact(exact) => {
            exact.ensure_same_grid(family.initial())?;
            (&family.trajectories[..], exact.clone())
        }
        OrderReference::FinestLevel => {
            let (finest, rest) = family.trajectories.split_last().expect("checked above");
            (rest, finest.eval(t)?)
        }
    };
    let mut steps = Vec::with_capacity(compared.len());
    let mut errors = Vec::with_capacity(compared.len());
    for traj in compared {
        steps.push(traj.step_size());
        errors.push(traj.eval(t)?.sub(&target)?.norm_inf());
    }
    let degenerate = errors.iter().any(|&e| !(e >= ORDER_FLOOR));
    let order = if degenerate {
        f64::NAN
    } else {
        let xs: Vec<f64> = steps.iter().map(|&h| math::ln(h)).collect();
        let ys: Vec<f64> = errors.iter().map(|&e| math::ln(e)).collect();
        least_squares_slope(&xs, &ys)
    };
    Ok(OrderEstimate {
        reference: reference.label(),
        t,
        steps,
        errors,
        order,
        degenerate,
    })
}

fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    sxy / sxx
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlopeReport {
    pub t: f64,
    pub dt_probe: f64,
    pub levels: Vec<usize>,
    /// Sup-norm of each level's difference quotient.
    pub quotient_norms: Vec<f64>,
    /// `‖q_{k+1} - q_k‖_inf` between consecutive levels.
    pub gaps: Vec<f64>,
    pub decreasing: bool,
    pub degenerate: bool,
}

impl SlopeReport {
    pub fn passes(&self) -> bool {
        !self.degenerate && self.decreasing
    }
}

/// Forward difference quotients `(u_i(t + dt) - u_i(t)) / dt` per level and
/// the sup-norm gaps between consecutive levels.
pub fn slope_convergence_check(
    family: &RefinementFamily,
    t: f64,
    dt_probe: f64,
) -> Result<SlopeReport> {
    if !(dt_probe > 0.0 && dt_probe.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "dt_probe",
            value: dt_probe,
            reason: "the probe step must be positive",
        });
    }
    let mut quotients = Vec::with_capacity(family.len());
    for traj in &family.trajectories {
        let (n0, theta0) = traj.locate(t)?;
        let (n1, theta1) = traj.locate(t + dt_probe)?;
        if n0 != n1 || theta0 == 0.0 || theta1 == 1.0 {
            return Err(Error::ProbeStraddlesNode {
                t,
                steps: traj.steps(),
            });
        }
        let q = traj
            .eval(t + dt_probe)?
            .lincomb(1.0 / dt_probe, &traj.eval(t)?, -1.0 / dt_probe)?;
        quotients.push(q);
    }
    let gaps = quotients
        .windows(2)
        .map(|w| Ok(w[1].sub(&w[0])?.norm_inf()))
        .collect::<Result<Vec<f64>>>()?;
    Ok(SlopeReport {
        t,
        dt_probe,
        levels: family.levels.clone(),
        quotient_norms: quotients.iter().map(GridFunction::norm_inf).collect(),
        decreasing: strictly_decreasing(&gaps),
        degenerate: family.len() < 2,
        gaps,
    })
}
