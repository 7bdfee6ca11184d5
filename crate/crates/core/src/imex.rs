//! The implicit-explicit iteration `f_{n+1} = R_h (f_n + h G(f_n))`, its
//! piecewise-linear interpolant in time and the slope-error estimator.

use alloc::vec::Vec;

use crate::grid::GridFunction;
use crate::math;
use crate::reaction::ReactionCoefficients;
use crate::resolvent::{ResolventParams, apply_resolvent};
use crate::{Error, Result};

/// One step: `(I - h Δ)^{-1} (f + h G(f))`.
pub fn imex_step(
    f: &GridFunction,
    r: &ReactionCoefficients,
    p: &ResolventParams,
) -> Result<GridFunction> {
    let forced = f.lincomb(1.0, &r.apply_g(f)?, p.h())?;
    apply_resolvent(&forced, p)
}

/// Iterates `f_0 .. f_N` of step `h = T / N` together with the reaction that
/// produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct ImexTrajectory {
    params: ResolventParams,
    horizon: f64,
    iterates: Vec<GridFunction>,
    reaction: ReactionCoefficients,
}

/// Runs `steps` IMEX steps of size `horizon / steps` from `f0`.
///
/// A non-finite value aborts with [`Error::BlowUp`] carrying the index of
/// the iterate that could not be formed.
pub fn run_trajectory(
    f0: &GridFunction,
    r: &ReactionCoefficients,
    horizon: f64,
    steps: usize,
) -> Result<ImexTrajectory> {
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::InvalidParameter {
            name: "horizon",
            value: horizon,
            reason: "the time horizon must be positive and finite",
        });
    }
    if steps == 0 {
        return Err(Error::InvalidParameter {
            name: "steps",
            value: 0.0,
            reason: "at least one step is needed",
        });
    }
    r.coefficients()[0].ensure_same_grid(f0)?;
    let params = ResolventParams::new(horizon / steps as f64)?;
    if params.is_under_resolved(f0.spec()) {
        log::warn!(
            "resolvent kernel under-resolved: sqrt(h) = {} < dx = {}",
            params.scale(),
            f0.spec().dx()
        );
    }
    let mut iterates = Vec::with_capacity(steps + 1);
    iterates.push(f0.clone());
    for n in 0..steps {
        let next = imex_step(&iterates[n], r, &params).map_err(|e| match e {
            Error::NonFinite { .. } => Error::BlowUp {
                step: n + 1,
                time: (n + 1) as f64 * params.h(),
            },
            other => other,
        })?;
        iterates.push(next);
    }
    Ok(ImexTrajectory {
        params,
        horizon,
        iterates,
        reaction: r.clone(),
    })
}

impl ImexTrajectory {
    pub fn step_size(&self) -> f64 {
        self.params.h()
    }

    pub fn params(&self) -> &ResolventParams {
        &self.params
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Number of steps `N`.
    pub fn steps(&self) -> usize {
        self.iterates.len() - 1
    }

    pub fn iterates(&self) -> &[GridFunction] {
        &self.iterates
    }

    pub fn reaction(&self) -> &ReactionCoefficients {
        &self.reaction
    }

    /// Time of node `n`; the last node is exactly the horizon.
    pub fn node_time(&self, n: usize) -> f64 {
        if n == self.steps() {
            self.horizon
        } else {
            n as f64 * self.params.h()
        }
    }

    /// Segment index `n(t)` and offset `θ = t/h - n(t)` in `[0, 1]`.
    pub fn locate(&self, t: f64) -> Result<(usize, f64)> {
        if !(t >= 0.0 && t <= self.horizon) {
            return Err(Error::TimeOutOfRange {
                t,
                horizon: self.horizon,
            });
        }
        let s = t / self.params.h();
        let n = math::floor(s) as usize;
        if n >= self.steps() {
            return Ok((self.steps() - 1, 1.0));
        }
        Ok((n, s - n as f64))
    }

    /// `u(t) = (1 - θ) f_n + θ f_{n+1}` with `n = ⌊t/h⌋`.
    pub fn eval(&self, t: f64) -> Result<GridFunction> {
        let (n, theta) = self.locate(t)?;
        if theta == 0.0 {
            return Ok(self.iterates[n].clone());
        }
        if theta == 1.0 {
            return Ok(self.iterates[n + 1].clone());
        }
        self.iterates[n].lincomb(1.0 - theta, &self.iterates[n + 1], theta)
    }

    /// Slope `(f_{n+1} - f_n) / h` of segment `n`.
    pub fn segment_slope(&self, n: usize) -> Result<GridFunction> {
        let h = self.params.h();
        self.iterates[n + 1].lincomb(1.0 / h, &self.iterates[n], -1.0 / h)
    }
}

/// Times inside a step at which the slope error is sampled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DefectSampling {
    /// `t ∈ {0, h/2, h}`
    #[default]
    ThreePoint,
    /// Nine equally spaced `t` in `[0, h]`, for reactions of degree > 2.
    NinePoint,
}

impl DefectSampling {
    fn fractions(self) -> &'static [f64] {
        match self {
            DefectSampling::ThreePoint => &[0.0, 0.5, 1.0],
            DefectSampling::NinePoint => &[0.0, 0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 0.875, 1.0],
        }
    }
}

/// Slope error of one IMEX step started at `f`: with
/// `D = (R_h (f + h G(f)) - f) / h`, the largest `‖D - F(f + t D)‖_inf` over
/// the three-point time sample.
pub fn defect(f: &GridFunction, r: &ReactionCoefficients, p: &ResolventParams) -> Result<f64> {
    defect_with(f, r, p, DefectSampling::ThreePoint)
}

pub fn defect_with(
    f: &GridFunction,
    r: &ReactionCoefficients,
    p: &ResolventParams,
    sampling: DefectSampling,
) -> Result<f64> {
    let h = p.h();
    let next = imex_step(f, r, p)?;
    let slope = next.lincomb(1.0 / h, f, -1.0 / h)?;
    segment_defect(f, &slope, r, h, sampling)
}

fn segment_defect(
    start: &GridFunction,
    slope: &GridFunction,
    r: &ReactionCoefficients,
    h: f64,
    sampling: DefectSampling,
) -> Result<f64> {
    let mut worst = 0.0f64;
    for &frac in sampling.fractions() {
        let u = start.lincomb(1.0, slope, frac * h)?;
        let rhs = r.apply_f(&u)?;
        worst = worst.max(slope.sub(&rhs)?.norm_inf());
    }
    Ok(worst)
}

/// Measured `ε` of a trajectory: the largest per-segment defect.
pub fn max_defect_along(traj: &ImexTrajectory) -> Result<f64> {
    max_defect_along_with(traj, DefectSampling::ThreePoint)
}

pub fn max_defect_along_with(traj: &ImexTrajectory, sampling: DefectSampling) -> Result<f64> {
    let mut worst = 0.0f64;
    for n in 0..traj.steps() {
        let slope = traj.segment_slope(n)?;
        worst = worst.max(segment_defect(
            &traj.iterates[n],
            &slope,
            &traj.reaction,
            traj.step_size(),
            sampling,
        )?);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{BoundaryMode, GridSpec, Preset};
    use alloc::vec;
    use core::f64::consts::PI;

    fn periodic(m: usize) -> GridSpec {
        GridSpec::new(PI, m, BoundaryMode::Periodic).unwrap()
    }

    fn cosine(k: u32) -> Preset {
        Preset::Cosine {
            amplitude: 1.0,
            mode: k,
        }
    }

    #[test]
    fn zero_is_a_fixed_point() {
        let g = periodic(33);
        let r = ReactionCoefficients::zero(g);
        let p = ResolventParams::new(0.1).unwrap();
        assert!(imex_step(&GridFunction::zeros(g), &r, &p).unwrap().is_zero());
        let traj = run_trajectory(&GridFunction::zeros(g), &r, 1.0, 5).unwrap();
        assert!(traj.iterates().iter().all(GridFunction::is_zero));
        assert_eq!(max_defect_along(&traj).unwrap(), 0.0);
        assert_eq!(defect(&GridFunction::zeros(g), &r, &p).unwrap(), 0.0);
    }

    #[test]
    fn heat_step_scales_cosine() {
        let g = periodic(513);
        let r = ReactionCoefficients::zero(g);
        let h = 0.05;
        let p = ResolventParams::new(h).unwrap();
        let f = cosine(3).sample(g).unwrap();
        let out = imex_step(&f, &r, &p).unwrap();
        let expected = f.scale(1.0 / (1.0 + 9.0 * h)).unwrap();
        assert!(out.sub(&expected).unwrap().norm_inf() < 1e-7);
    }

    #[test]
    fn source_only_step() {
        let g = GridSpec::new(8.0, 257, BoundaryMode::ZeroExtension).unwrap();
        let a0 = Preset::Gaussian {
            amplitude: 1.0,
            center: 0.0,
            width: 1.0,
        }
        .sample(g)
        .unwrap();
        let r = ReactionCoefficients::new(vec![a0.clone()]).unwrap();
        let p = ResolventParams::new(0.1).unwrap();
        let out = imex_step(&GridFunction::zeros(g), &r, &p).unwrap();
        let expected = apply_resolvent(&a0.scale(0.1).unwrap(), &p).unwrap();
        assert!(out.sub(&expected).unwrap().norm_inf() < 1e-16);
    }

    #[test]
    fn single_step_trajectory() {
        let g = periodic(65);
        let r = ReactionCoefficients::zero(g);
        let f0 = cosine(1).sample(g).unwrap();
        let traj = run_trajectory(&f0, &r, 0.3, 1).unwrap();
        assert_eq!(traj.iterates().len(), 2);
        let p = ResolventParams::new(0.3).unwrap();
        assert_eq!(traj.iterates()[1], imex_step(&f0, &r, &p).unwrap());
    }

    #[test]
    fn heat_trajectory_symbol_product() {
        let g = periodic(513);
        let r = ReactionCoefficients::zero(g);
        let f0 = cosine(2).sample(g).unwrap();
        let (t, n) = (0.5, 20);
        let traj = run_trajectory(&f0, &r, t, n).unwrap();
        let h = t / n as f64;
        let amp = (1.0 + 4.0 * h).powi(-(n as i32));
        let err = traj.iterates()[n].sub(&f0.scale(amp).unwrap()).unwrap().norm_inf();
        assert!(err < 1e-7, "err {err}");
    }

    #[test]
    fn interpolant_nodes_and_midpoints() {
        let g = periodic(65);
        let r = ReactionCoefficients::zero(g);
        let traj = run_trajectory(&cosine(1).sample(g).unwrap(), &r, 1.0, 4).unwrap();
        let it = traj.iterates();
        assert_eq!(traj.eval(0.0).unwrap(), it[0]);
        assert_eq!(traj.eval(1.0).unwrap(), it[4]);
        let mid = traj.eval(0.125).unwrap();
        let avg = it[0].lincomb(0.5, &it[1], 0.5).unwrap();
        assert!(mid.sub(&avg).unwrap().norm_inf() < 1e-15);
        assert!(traj.eval(-0.1).is_err());
        assert!(traj.eval(1.0 + 1e-12).is_err());
    }

    #[test]
    fn blow_up_reports_step() {
        let g = periodic(17);
        let mut coeffs = vec![GridFunction::zeros(g); 4];
        coeffs[3] = GridFunction::constant(g, 1.0).unwrap();
        let r = ReactionCoefficients::new(coeffs).unwrap();
        let f0 = GridFunction::constant(g, 10.0).unwrap();
        let err = run_trajectory(&f0, &r, 10.0, 10).unwrap_err();
        assert!(matches!(err, Error::BlowUp { .. }), "{err:?}");
        assert!(err.blow_up_step().unwrap() >= 2);
    }

    #[test]
    fn heat_defect_constant() {
        // Symbol of D - Δ(f + tD) on cos(ωx) is ω⁴ (h - t)/(1 + hω²): largest
        // at t = 0 and zero at t = h.
        let g = periodic(1025);
        let r = ReactionCoefficients::zero(g);
        let f = cosine(1).sample(g).unwrap();
        let h = 1e-3;
        let p = ResolventParams::new(h).unwrap();
        let next = imex_step(&f, &r, &p).unwrap();
        let slope = next.lincomb(1.0 / h, &f, -1.0 / h).unwrap();
        let at_zero = slope.sub(&r.apply_f(&f).unwrap()).unwrap().norm_inf();
        assert!((at_zero / h - 1.0).abs() < 0.2, "{}", at_zero / h);
        let d = defect(&f, &r, &p).unwrap();
        // The resolvent follows the exact symbol while F uses the
        // three-point Laplacian; their O(dx²) mismatch is divided by h.
        assert!((d / (h / (1.0 + h)) - 1.0).abs() < 1e-2, "{}", d / h);
        assert_eq!(d, at_zero);
    }

    #[test]
    fn nine_point_dominates_three_point() {
        let g = GridSpec::new(8.0, 513, BoundaryMode::ZeroExtension).unwrap();
        let gauss = Preset::Gaussian {
            amplitude: 1.0,
            center: 0.0,
            width: 1.0,
        };
        let mut coeffs = vec![GridFunction::zeros(g); 4];
        coeffs[3] = GridFunction::constant(g, -1.0).unwrap();
        let r = ReactionCoefficients::new(coeffs).unwrap();
        let p = ResolventParams::new(0.01).unwrap();
        let f = gauss.sample(g).unwrap();
        let three = defect_with(&f, &r, &p, DefectSampling::ThreePoint).unwrap();
        let nine = defect_with(&f, &r, &p, DefectSampling::NinePoint).unwrap();
        assert!(nine >= three);
    }
}
