//! Reference solutions with known closed forms or dense ODE paths.

use alloc::vec::Vec;

use crate::grid::{BoundaryMode, GridFunction, GridSpec};
use crate::math;
use crate::ode::{DenseSolution, OdeSettings, solve_polynomial_ode};
use crate::reaction::ReactionCoefficients;
use crate::{Error, Result};

/// Heat evolution of `a exp(-x² / (2σ²))` on the whole line.
pub fn heat_gaussian(x: f64, t: f64, amplitude: f64, width: f64) -> f64 {
    let var = width * width + 2.0 * t;
    amplitude * width / math::sqrt(var) * math::exp(-x * x / (2.0 * var))
}

/// `u_t = u_xx + λ u` from a centred gaussian: `e^{λt}` times the heat
/// solution.
pub fn linear_reaction_exact(x: f64, t: f64, lambda: f64, amplitude: f64, width: f64) -> f64 {
    math::exp(lambda * t) * heat_gaussian(x, t, amplitude, width)
}

/// `a e^{-ω² t} cos(ω x)` with `ω = π k / L`.
pub fn heat_cosine_exact(x: f64, t: f64, amplitude: f64, mode: u32, half_width: f64) -> f64 {
    let omega = core::f64::consts::PI * mode as f64 / half_width;
    amplitude * math::exp(-omega * omega * t) * math::cos(omega * x)
}

/// `y0 / (1 - y0 t)`, the solution of `y' = y²`.
pub fn riccati_exact(y0: f64, t: f64) -> Result<f64> {
    if !(y0 > 0.0) {
        return Err(Error::InvalidParameter {
            name: "y0",
            value: y0,
            reason: "the closed form is used for y0 > 0",
        });
    }
    if !(t >= 0.0 && t < 1.0 / y0) {
        return Err(Error::TimeOutOfRange {
            t,
            horizon: 1.0 / y0,
        });
    }
    Ok(y0 / (1.0 - y0 * t))
}

pub fn riccati_blow_up_time(y0: f64) -> f64 {
    1.0 / y0
}

/// Dense solution of `y' = Σ c_i y^i` for a spatially constant state on a
/// periodic grid, where the Laplacian vanishes. Coefficients keep their
/// sign. A blow-up shows up as [`DenseSolution::blow_up_time`].
pub fn constant_state_ode(r: &ReactionCoefficients, y0: f64, horizon: f64) -> Result<DenseSolution> {
    if r.spec().mode() != BoundaryMode::Periodic || !r.coefficients().iter().all(GridFunction::is_constant) {
        return Err(Error::NotConstantState);
    }
    let coeffs: Vec<f64> = r.coefficients().iter().map(|a| a.samples()[0]).collect();
    solve_polynomial_ode(&coeffs, y0, horizon, &OdeSettings::default())
}

#[derive(Debug, Clone, PartialEq)]
pub enum OracleScenario {
    HeatGaussian { amplitude: f64, width: f64 },
    LinearReaction { lambda: f64, amplitude: f64, width: f64 },
    HeatCosine { amplitude: f64, mode: u32, half_width: f64 },
    /// Spatially constant solution; its value does not depend on `x`.
    ConstantState(DenseSolution),
}

impl OracleScenario {
    pub fn name(&self) -> &'static str {
        match self {
            OracleScenario::HeatGaussian { .. } => "heat-gaussian",
            OracleScenario::LinearReaction { .. } => "linear-reaction",
            OracleScenario::HeatCosine { .. } => "heat-cosine",
            OracleScenario::ConstantState(_) => "constant-state",
        }
    }

    /// Last time at which the evaluator is defined; `None` for all `t ≥ 0`.
    pub fn valid_until(&self) -> Option<f64> {
        match self {
            OracleScenario::ConstantState(s) => Some(s.end_time()),
            _ => None,
        }
    }

    pub fn eval(&self, x: f64, t: f64) -> Result<f64> {
        if !(t >= 0.0) || self.valid_until().is_some_and(|end| t > end) {
            return Err(Error::TimeOutOfRange {
                t,
                horizon: self.valid_until().unwrap_or(f64::INFINITY),
            });
        }
        Ok(match *self {
            OracleScenario::HeatGaussian { amplitude, width } => {
                heat_gaussian(x, t, amplitude, width)
            }
            OracleScenario::LinearReaction {
                lambda,
                amplitude,
                width,
            } => linear_reaction_exact(x, t, lambda, amplitude, width),
            OracleScenario::HeatCosine {
                amplitude,
                mode,
                half_width,
            } => heat_cosine_exact(x, t, amplitude, mode, half_width),
            OracleScenario::ConstantState(ref s) => s.value_at(t)?,
        })
    }

    /// The oracle at time `t` restricted to the grid.
    pub fn sample(&self, spec: GridSpec, t: f64) -> Result<GridFunction> {
        let values = spec.nodes().map(|x| self.eval(x, t)).collect::<Result<Vec<_>>>()?;
        GridFunction::new(spec, values)
    }
}
