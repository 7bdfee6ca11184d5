//! A-priori sup and L¹ bounds for IMEX iterates.
//!
//! Because the resolvent is non-expansive in the sup-norm,
//! `‖f_{n+1}‖_inf ≤ ‖f_n‖_inf + h g_inf(‖f_n‖_inf)`: the sup-norms are
//! dominated by explicit Euler for the comparison ODE `y' = g_inf(y)`. For a
//! majorant with non-negative coefficients and `y0 > 0` the exact solution is
//! convex, so Euler never overtakes it and `B = y(T)` bounds every iterate of
//! every step size. The L¹ norms then grow at most like
//! `(1 + h C)^n` with `C = (g_inf(B) - ‖a_0‖_inf) / B`, which gives
//!
//! ```text
//! A = (‖f0‖_1 + ‖a_0‖_1 / C) e^{C T} - ‖a_0‖_1 / C.
//! ```

use alloc::vec::Vec;

use crate::grid::GridFunction;
use crate::math;
use crate::ode::{DenseSolution, OdeSettings, solve_polynomial_ode};
use crate::reaction::{MajorantPolynomial, NormKind, ReactionCoefficients};
use crate::{Error, Result};

/// Horizon returned by [`safe_horizon`] when the comparison ODE does not
/// blow up.
pub const DEFAULT_HORIZON_CEILING: f64 = 1.0e3;
/// Fraction of the comparison blow-up time used as the safe horizon.
pub const DEFAULT_SAFETY: f64 = 0.5;
/// Below this rate constant the L¹ bound uses its `C → 0` limit.
const RATE_EPSILON: f64 = 1e-14;

/// Dense solution of `y' = g(y)` for a majorant `g`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonSolution {
    majorant: MajorantPolynomial,
    dense: DenseSolution,
}

impl ComparisonSolution {
    pub fn majorant(&self) -> &MajorantPolynomial {
        &self.majorant
    }

    pub fn y0(&self) -> f64 {
        self.dense.initial_value()
    }

    /// `None` when `y` stays below the blow-up ceiling up to the horizon.
    pub fn blow_up_time(&self) -> Option<f64> {
        self.dense.blow_up_time()
    }

    pub fn end_time(&self) -> f64 {
        self.dense.end_time()
    }

    pub fn value_at(&self, t: f64) -> Result<f64> {
        self.dense.value_at(t)
    }

    pub fn path(&self) -> &[(f64, f64)] {
        self.dense.path()
    }
}

/// Solves the comparison ODE `y' = g(y)`, `y(0) = y0`, on `[0, horizon]`.
/// `y0 = 0` is accepted (the bound for zero initial data).
pub fn solve_comparison_ode(
    g: &MajorantPolynomial,
    y0: f64,
    horizon: f64,
) -> Result<ComparisonSolution> {
    solve_comparison_ode_with(g, y0, horizon, &OdeSettings::default())
}

pub fn solve_comparison_ode_with(
    g: &MajorantPolynomial,
    y0: f64,
    horizon: f64,
    settings: &OdeSettings,
) -> Result<ComparisonSolution> {
    if !(y0 >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "y0",
            value: y0,
            reason: "the comparison ODE starts at a norm",
        });
    }
    let dense = solve_polynomial_ode(g.coefficients(), y0, horizon, settings)?;
    Ok(ComparisonSolution {
        majorant: g.clone(),
        dense,
    })
}

/// `f_{n+1} = f_n + h g(f_n)`, returning `f_0 .. f_n`.
pub fn euler_recursion(g: &MajorantPolynomial, y0: f64, h: f64, n: usize) -> Result<Vec<f64>> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "h",
            value: h,
            reason: "the Euler step must be positive",
        });
    }
    let mut out = Vec::with_capacity(n + 1);
    let mut y = y0;
    out.push(y);
    for k in 1..=n {
        y += h * g.eval(y.max(0.0))?;
        if !y.is_finite() {
            return Err(Error::BlowUp {
                step: k,
                time: k as f64 * h,
            });
        }
        out.push(y);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerRow {
    pub n: usize,
    pub t: f64,
    pub euler: f64,
    pub exact: f64,
}

impl EulerRow {
    pub fn slack(&self) -> f64 {
        self.exact - self.euler
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EulerCheck {
    pub rows: Vec<EulerRow>,
    pub min_slack: f64,
    /// Every Euler iterate is at most the dense solution plus the solver
    /// tolerance.
    pub holds: bool,
}

/// Relative tolerance granted to the dense solve when comparing against
/// Euler.
pub const SOLVER_TOLERANCE: f64 = 1e-9;

/// Checks `f_n ≤ y(n h)` for Euler with `h = T / N` against the dense
/// comparison solution.
pub fn check_euler_underestimate(
    g: &MajorantPolynomial,
    y0: f64,
    horizon: f64,
    steps: usize,
) -> Result<EulerCheck> {
    if !(y0 > 0.0) {
        return Err(Error::InvalidParameter {
            name: "y0",
            value: y0,
            reason: "convexity of the comparison solution needs y0 > 0",
        });
    }
    if steps == 0 {
        return Err(Error::InvalidParameter {
            name: "steps",
            value: 0.0,
            reason: "at least one step is needed",
        });
    }
    let exact = solve_comparison_ode(g, y0, horizon)?;
    if let Some(blow_up_time) = exact.blow_up_time() {
        return Err(Error::BeyondBlowUp {
            horizon,
            blow_up_time,
        });
    }
    let h = horizon / steps as f64;
    let euler = euler_recursion(g, y0, h, steps)?;
    let mut rows = Vec::with_capacity(steps + 1);
    let mut min_slack = f64::INFINITY;
    let mut holds = true;
    for (n, &e) in euler.iter().enumerate() {
        let t = if n == steps { horizon } else { n as f64 * h };
        let y = exact.value_at(t)?;
        let row = EulerRow {
            n,
            t,
            euler: e,
            exact: y,
        };
        min_slack = min_slack.min(row.slack());
        holds &= e <= y + SOLVER_TOLERANCE * y.abs().max(1.0);
        rows.push(row);
    }
    Ok(EulerCheck {
        rows,
        min_slack,
        holds,
    })
}

/// `B = y(T)` for `y' = g_inf(y)`, `y(0) = ‖f0‖_inf`.
pub fn sup_bound_b(f0: &GridFunction, r: &ReactionCoefficients, horizon: f64) -> Result<f64> {
    let g = r.majorant(NormKind::InfNorm);
    let y = solve_comparison_ode(&g, f0.norm_inf(), horizon)?;
    match y.blow_up_time() {
        Some(blow_up_time) => Err(Error::BeyondBlowUp {
            horizon,
            blow_up_time,
        }),
        None => y.value_at(horizon),
    }
}

/// `C = (g_inf(B) - ‖a_0‖_inf) / B`, i.e. `Σ_{k≥1} ‖a_k‖_inf B^{k-1}`; at
/// `B = 0` its limit `‖a_1‖_inf`.
pub fn rate_constant(r: &ReactionCoefficients, b: f64) -> Result<f64> {
    let g = r.majorant(NormKind::InfNorm);
    if b == 0.0 {
        return Ok(g.coefficients().get(1).copied().unwrap_or(0.0));
    }
    Ok((g.eval(b)? - g.constant_term()) / b)
}

/// L¹ bound `A` with its `C → 0` limit `‖f0‖_1 + ‖a_0‖_1 T`.
pub fn l1_bound_a(
    f0: &GridFunction,
    r: &ReactionCoefficients,
    b: f64,
    horizon: f64,
) -> Result<f64> {
    let c = rate_constant(r, b)?;
    let f_norm = f0.norm_1();
    let source = r.coefficients()[0].norm_1();
    if c < RATE_EPSILON {
        return Ok(f_norm + source * horizon);
    }
    // (‖f0‖ + s/C) e^{CT} - s/C, written to avoid cancellation for small CT.
    let ct = c * horizon;
    Ok(f_norm * math::exp(ct) + source * math::expm1(ct) / c)
}

/// `safety` times the comparison blow-up time, or [`DEFAULT_HORIZON_CEILING`]
/// when there is none.
pub fn safe_horizon(f0: &GridFunction, r: &ReactionCoefficients, safety: f64) -> Result<f64> {
    safe_horizon_with(f0, r, safety, DEFAULT_HORIZON_CEILING)
}

pub fn safe_horizon_with(
    f0: &GridFunction,
    r: &ReactionCoefficients,
    safety: f64,
    ceiling: f64,
) -> Result<f64> {
    if !(safety > 0.0 && safety < 1.0) {
        return Err(Error::InvalidParameter {
            name: "safety",
            value: safety,
            reason: "the safety factor must lie in (0, 1)",
        });
    }
    let g = r.majorant(NormKind::InfNorm);
    Ok(match comparison_blow_up(&g, f0.norm_inf(), ceiling)? {
        Some(t) => safety * t,
        None => ceiling,
    })
}

/// Blow-up time of `y' = g(y)` before `ceiling`. A majorant of degree ≤ 1
/// grows at most exponentially and is answered without solving.
pub fn comparison_blow_up(g: &MajorantPolynomial, y0: f64, ceiling: f64) -> Result<Option<f64>> {
    if !g.is_superlinear() {
        return Ok(None);
    }
    Ok(solve_comparison_ode(g, y0, ceiling)?.blow_up_time())
}

/// Constants of the a-priori estimates for one scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundsReport {
    pub b: f64,
    pub a: f64,
    pub c: f64,
    pub t_safe: f64,
    pub blow_up_time: Option<f64>,
}

pub fn bounds_report(
    f0: &GridFunction,
    r: &ReactionCoefficients,
    horizon: f64,
    safety: f64,
) -> Result<BoundsReport> {
    let g = r.majorant(NormKind::InfNorm);
    let blow_up_time = comparison_blow_up(&g, f0.norm_inf(), DEFAULT_HORIZON_CEILING)?;
    let t_safe = safe_horizon(f0, r, safety)?;
    let b = sup_bound_b(f0, r, horizon)?;
    Ok(BoundsReport {
        b,
        a: l1_bound_a(f0, r, b, horizon)?,
        c: rate_constant(r, b)?,
        t_safe,
        blow_up_time,
    })
}
