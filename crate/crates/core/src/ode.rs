//! Dense, high-accuracy solver for scalar autonomous polynomial ODEs
//! `y' = Σ c_i y^i` with blow-up detection.
//!
//! The equation is integrated in a rescaled time `τ` with
//! `dt/dτ = ρ(y) = 1 / (1 + |g(y)| / (1 + |y|))`, so that a uniform `τ`
//! step follows the solution's own time scale: near a blow-up `y` grows
//! only exponentially in `τ` while `t` converges to the blow-up time. Each
//! solve uses the classical fourth-order Runge-Kutta method; the `τ` step is
//! halved until two successive solves agree to `rtol` (end value) or
//! `blow_up_rtol` (blow-up time). A blow-up is declared when `|y|` exceeds
//! `ceiling`; the crossing is bisected within the last step.

use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeSettings {
    pub rtol: f64,
    pub ceiling: f64,
    pub blow_up_rtol: f64,
    pub initial_dtau: f64,
    pub max_halvings: usize,
}

impl Default for OdeSettings {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            ceiling: 1e12,
            blow_up_rtol: 1e-8,
            initial_dtau: 0.125,
            max_halvings: 16,
        }
    }
}

/// Solution path of `y' = g(y)` on `[0, end_time]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSolution {
    coeffs: Vec<f64>,
    dtau: f64,
    path: Vec<(f64, f64)>,
    blow_up_time: Option<f64>,
}

#[derive(Debug, Clone, Copy)]
struct Rhs<'a> {
    coeffs: &'a [f64],
}

impl Rhs<'_> {
    fn g(&self, y: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * y + c)
    }

    /// `(dt/dτ, dy/dτ)`
    fn eval(&self, y: f64) -> (f64, f64) {
        let g = self.g(y);
        let rho = 1.0 / (1.0 + g.abs() / (1.0 + y.abs()));
        (rho, g * rho)
    }

    fn step(&self, t: f64, y: f64, dtau: f64) -> (f64, f64) {
        let (t1, y1) = self.eval(y);
        let (t2, y2) = self.eval(y + 0.5 * dtau * y1);
        let (t3, y3) = self.eval(y + 0.5 * dtau * y2);
        let (t4, y4) = self.eval(y + dtau * y3);
        (
            t + dtau * (t1 + 2.0 * t2 + 2.0 * t3 + t4) / 6.0,
            y + dtau * (y1 + 2.0 * y2 + 2.0 * y3 + y4) / 6.0,
        )
    }

    /// Sub-step in `(0, dtau]` whose `t` lands on `target`.
    fn land(&self, t: f64, y: f64, dtau: f64, target: f64) -> (f64, f64) {
        let (mut lo, mut hi) = (0.0, dtau);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let (tm, ym) = self.step(t, y, mid);
            if ym.is_finite() && tm < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (_, y_end) = self.step(t, y, hi);
        (target, y_end)
    }

    /// Sub-step in `(0, dtau)` at which `|y|` reaches `ceiling`.
    fn cross(&self, t: f64, y: f64, dtau: f64, ceiling: f64) -> f64 {
        let (mut lo, mut hi) = (0.0, dtau);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let (_, ym) = self.step(t, y, mid);
            if ym.is_finite() && ym.abs() <= ceiling {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }
}

enum RunEnd {
    Reached(f64),
    BlowUp(f64),
}

struct Run {
    path: Vec<(f64, f64)>,
    end: RunEnd,
}

fn integrate(rhs: Rhs<'_>, y0: f64, horizon: f64, dtau: f64, ceiling: f64) -> Run {
    let mut path = vec![(0.0, y0)];
    let (mut t, mut y) = (0.0, y0);
    loop {
        let (t1, y1) = rhs.step(t, y, dtau);
        let crossed = !y1.is_finite() || y1.abs() > ceiling;
        if crossed {
            let sigma = rhs.cross(t, y, dtau, ceiling);
            let (tc, yc) = rhs.step(t, y, sigma);
            if tc < horizon {
                path.push((tc, yc));
                return Run {
                    path,
                    end: RunEnd::BlowUp(tc),
                };
            }
        }
        if crossed || t1 >= horizon {
            let (te, ye) = rhs.land(t, y, dtau, horizon);
            path.push((te, ye));
            return Run {
                path,
                end: RunEnd::Reached(ye),
            };
        }
        path.push((t1, y1));
        t = t1;
        y = y1;
    }
}

fn close(a: f64, b: f64, rtol: f64, scale: f64) -> bool {
    (a - b).abs() <= rtol * scale.max(a.abs()).max(b.abs())
}

/// Solves `y' = Σ coeffs[i] y^i`, `y(0) = y0` on `[0, horizon]`.
///
/// A blow-up before `horizon` is part of the result
/// ([`DenseSolution::blow_up_time`]), not an error.
pub fn solve_polynomial_ode(
    coeffs: &[f64],
    y0: f64,
    horizon: f64,
    settings: &OdeSettings,
) -> Result<DenseSolution> {
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::InvalidParameter {
            name: "horizon",
            value: horizon,
            reason: "ODE horizon must be positive and finite",
        });
    }
    if !y0.is_finite() {
        return Err(Error::InvalidParameter {
            name: "y0",
            value: y0,
            reason: "initial value must be finite",
        });
    }
    if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "coefficients",
            value: f64::NAN,
            reason: "need at least one finite coefficient",
        });
    }
    let rhs = Rhs { coeffs };
    let mut dtau = settings.initial_dtau;
    let mut previous = integrate(rhs, y0, horizon, dtau, settings.ceiling);
    for _ in 0..settings.max_halvings {
        dtau *= 0.5;
        let run = integrate(rhs, y0, horizon, dtau, settings.ceiling);
        let scale = run.path.iter().fold(0.0f64, |m, &(_, y)| m.max(y.abs()));
        let agreed = match (&previous.end, &run.end) {
            (RunEnd::Reached(a), RunEnd::Reached(b)) => close(*a, *b, settings.rtol, scale),
            (RunEnd::BlowUp(a), RunEnd::BlowUp(b)) => close(*a, *b, settings.blow_up_rtol, 0.0),
            _ => false,
        };
        if agreed {
            let blow_up_time = match run.end {
                RunEnd::BlowUp(t) => Some(t),
                RunEnd::Reached(_) => None,
            };
            return Ok(DenseSolution {
                coeffs: coeffs.to_vec(),
                dtau,
                path: run.path,
                blow_up_time,
            });
        }
        previous = run;
    }
    Err(Error::SolverStalled {
        refinements: settings.max_halvings,
    })
}

impl DenseSolution {
    /// Accepted `(t, y)` samples, increasing in `t`.
    pub fn path(&self) -> &[(f64, f64)] {
        &self.path
    }

    pub fn initial_value(&self) -> f64 {
        self.path[0].1
    }

    /// Time the solution first reaches the blow-up ceiling, if before the
    /// requested horizon.
    pub fn blow_up_time(&self) -> Option<f64> {
        self.blow_up_time
    }

    /// Last time covered: the horizon, or the blow-up time.
    pub fn end_time(&self) -> f64 {
        self.path[self.path.len() - 1].0
    }

    pub fn end_value(&self) -> f64 {
        self.path[self.path.len() - 1].1
    }

    /// `y(t)` for `t` in `[0, end_time]`, integrated from the nearest
    /// preceding sample at the accepted step.
    pub fn value_at(&self, t: f64) -> Result<f64> {
        let end = self.end_time();
        if !(t >= 0.0 && t <= end) {
            return Err(Error::TimeOutOfRange { t, horizon: end });
        }
        let k = self.path.partition_point(|&(tk, _)| tk <= t) - 1;
        let (tk, yk) = self.path[k];
        if tk == t || k + 1 == self.path.len() {
            return Ok(yk);
        }
        let rhs = Rhs {
            coeffs: &self.coeffs,
        };
        Ok(rhs.land(tk, yk, self.dtau, t).1)
    }
}
