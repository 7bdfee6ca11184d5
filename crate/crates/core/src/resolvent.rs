//! The resolvent `(I - h Δ)^{-1}` on the line, as convolution with
//! `K(x) = exp(-|x| / s) / (2 s)`, `s = √h`.
//!
//! Samples are first passed through a three-point prefilter
//! `g_k = f_k + β (2 f_k - f_{k-1} - f_{k+1})` and the kernel is then
//! integrated exactly against the piecewise-linear interpolant of `g`. The
//! hat interpolant alone damps a cosine of frequency `ω` by
//! `1 - (ω dx)²/12`; with
//!
//! ```text
//! β(a) = ((a/2) coth(a/2) - 1) / a²,   a = dx / s,
//! ```
//!
//! the `(ω dx)²` term of the discrete symbol cancels and the quadrature is
//! fourth order. The prefilter preserves mass, and the combined weights stay
//! non-negative as long as `2 β (cosh a - 1) ≤ 1`; `β` is capped there, so
//! every output sample is a non-negative combination of input samples with
//! total weight ≤ 1. That makes the discrete operator non-expansive in the
//! sup-norm at any resolution.
//!
//! The kernel satisfies a one-cell recurrence, `K(x + dx) = e^{-a} K(x)`
//! for `x > 0`, so the convolution is two first-order recursive sweeps (left
//! to right and right to left) with closed-form per-cell sources. The
//! periodic case closes each sweep with the geometric factor
//! `1 / (1 - e^{-2L/s})`; under zero extension the sweeps also cover the
//! two cells just outside the domain, where the prefilter leaks mass.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::grid::{BoundaryMode, GridFunction, GridSpec};
use crate::math;
use crate::{Error, Result};

/// Time step `h` and kernel decay length `s = √h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolventParams {
    h: f64,
    scale: f64,
}

impl ResolventParams {
    pub fn new(h: f64) -> Result<Self> {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidParameter {
                name: "h",
                value: h,
                reason: "the resolvent step must be positive and finite",
            });
        }
        Ok(Self {
            h,
            scale: math::sqrt(h),
        })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// The kernel is narrower than one cell.
    pub fn is_under_resolved(&self, spec: &GridSpec) -> bool {
        self.scale < spec.dx()
    }
}

/// Per-cell constants of the sweeps.
#[derive(Debug, Clone, Copy)]
struct CellWeights {
    /// `e^{-a}`
    decay: f64,
    /// Weight of the node the sweep is arriving at.
    near: f64,
    /// Weight of the node the sweep is leaving.
    far: f64,
    /// Prefilter coefficient.
    beta: f64,
}

impl CellWeights {
    fn new(a: f64) -> Self {
        let decay = math::exp(-a);
        let far = 0.5 * first_moment(a);
        let near = -0.5 * math::expm1(-a) - far;
        Self {
            decay,
            near,
            far,
            beta: prefilter_coefficient(a),
        }
    }
}

/// `(1 - e^{-a}(1 + a)) / a`; the series avoids cancellation for small `a`.
fn first_moment(a: f64) -> f64 {
    if a < 1e-2 {
        first_moment_series(a)
    } else {
        (-math::expm1(-a) - a * math::exp(-a)) / a
    }
}

/// `Σ_{n≥2} (-1)^n (n-1) a^{n-1} / n!`
fn first_moment_series(a: f64) -> f64 {
    let mut power = 1.0;
    let mut fact = 1.0;
    let mut sum = 0.0;
    for n in 2..=9 {
        power *= -a;
        fact *= n as f64;
        sum -= power * (n - 1) as f64 / fact;
    }
    sum
}

/// `β(a)`, capped so that the prefiltered weights stay non-negative.
pub(crate) fn prefilter_coefficient(a: f64) -> f64 {
    let beta = if a < 0.05 {
        let a2 = a * a;
        1.0 / 12.0 - a2 / 720.0 + a2 * a2 / 30240.0
    } else {
        let x = 0.5 * a;
        (x / math::tanh(x) - 1.0) / (a * a)
    };
    let growth = math::cosh(a) - 1.0;
    if growth > 0.0 {
        // The margin keeps the weight the cap zeroes out positive after
        // rounding.
        beta.min(0.5 * (1.0 - 1e-12) / growth)
    } else {
        beta
    }
}

/// `(I - h Δ)^{-1} f`, see the module documentation for the quadrature.
pub fn apply_resolvent(f: &GridFunction, p: &ResolventParams) -> Result<GridFunction> {
    let spec = *f.spec();
    let w = CellWeights::new(spec.dx() / p.scale);
    let out = match spec.mode() {
        BoundaryMode::ZeroExtension => sweep_zero_extension(f, &w),
        BoundaryMode::Periodic => sweep_periodic(f, &w, spec.half_width() * 2.0 / p.scale),
    };
    GridFunction::checked(spec, out, "resolvent")
}

fn prefiltered(f: &GridFunction, beta: f64) -> Vec<f64> {
    let n = f.spec().distinct_points();
    (0..n)
        .map(|k| {
            let c = f.samples()[k];
            c + beta * (2.0 * c - f.extended(k, -1) - f.extended(k, 1))
        })
        .collect()
}

fn sweep_zero_extension(f: &GridFunction, w: &CellWeights) -> Vec<f64> {
    // The prefilter leaks -β f into the first node outside on each side; a
    // second ghost node carries the zero that closes that cell.
    let inner = prefiltered(f, w.beta);
    let m = inner.len();
    let samples = f.samples();
    let mut g = Vec::with_capacity(m + 4);
    g.extend_from_slice(&[0.0, -w.beta * samples[0]]);
    g.extend_from_slice(&inner);
    g.extend_from_slice(&[-w.beta * samples[m - 1], 0.0]);

    let n = g.len();
    let mut out = vec![0.0; n];
    let mut acc = 0.0;
    for i in 1..n {
        acc = w.decay * acc + w.near * g[i] + w.far * g[i - 1];
        out[i] = acc;
    }
    acc = 0.0;
    for i in (0..n - 1).rev() {
        acc = w.decay * acc + w.near * g[i] + w.far * g[i + 1];
        out[i] += acc;
    }
    out.truncate(m + 2);
    out.drain(..2);
    out
}

fn sweep_periodic(f: &GridFunction, w: &CellWeights, period_over_scale: f64) -> Vec<f64> {
    let g = prefiltered(f, w.beta);
    let n = g.len();
    // 1 / (1 - e^{-2L/s}): sum over all periodic images.
    let wrap = 1.0 / -math::expm1(-period_over_scale);

    let mut left = vec![0.0; n];
    let mut acc = 0.0;
    for i in 0..n {
        let prev = g[(i + n - 1) % n];
        acc = w.decay * acc + w.near * g[i] + w.far * prev;
        left[i] = acc;
    }
    let closing = acc * wrap;
    let mut q = w.decay;
    for l in left.iter_mut() {
        *l += q * closing;
        q *= w.decay;
    }

    let mut right = vec![0.0; n];
    acc = 0.0;
    for i in (0..n).rev() {
        acc = w.decay * acc + w.near * g[i] + w.far * g[(i + 1) % n];
        right[i] = acc;
    }
    let closing = acc * wrap;
    let mut q = w.decay;
    for r in right.iter_mut().rev() {
        *r += q * closing;
        q *= w.decay;
    }

    let mut out: Vec<f64> = left.iter().zip(&right).map(|(l, r)| l + r).collect();
    out.push(out[0]);
    out
}

/// Sum of quadrature weights at every node: `R` applied to the constant 1.
pub fn kernel_mass(spec: GridSpec, p: &ResolventParams) -> Result<GridFunction> {
    apply_resolvent(&GridFunction::constant(spec, 1.0)?, p)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InverseResidual {
    /// `‖(I - h Δ_dx) R f - f‖_inf` with the discrete Laplacian.
    pub sup_residual: f64,
}

/// Applies the discrete `I - h Δ` to `R f` and measures how far the result is
/// from `f`. For smooth `f` the residual is the central-difference error,
/// `O(dx²)`.
pub fn verify_inverse(f: &GridFunction, p: &ResolventParams) -> Result<InverseResidual> {
    let u = apply_resolvent(f, p)?;
    let back = u.lincomb(1.0, &u.laplacian()?, -p.h)?;
    Ok(InverseResidual {
        sup_residual: back.sub(f)?.norm_inf(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonexpansiveReport {
    pub trials: usize,
    /// Largest `‖R f‖_inf / ‖f‖_inf` seen.
    pub worst_inf_ratio: f64,
    /// Largest `‖R f‖_1 / ‖f‖_1` seen.
    pub worst_l1_ratio: f64,
}

impl NonexpansiveReport {
    pub fn passes(&self, l1_tolerance: f64) -> bool {
        self.worst_inf_ratio <= 1.0 && self.worst_l1_ratio <= 1.0 + l1_tolerance
    }
}

/// Random grid function for the non-expansiveness check. Cycles through
/// signed noise, non-negative noise, sparse spikes and a random walk so that
/// both cancelling and non-cancelling inputs are covered.
pub fn random_grid_function(spec: GridSpec, rng: &mut impl Rng, family: usize) -> Result<GridFunction> {
    let m = spec.points();
    let amplitude = rng.gen_range(0.1..10.0);
    let samples: Vec<f64> = match family % 4 {
        0 => (0..m).map(|_| amplitude * rng.gen_range(-1.0..1.0)).collect(),
        1 => (0..m).map(|_| amplitude * rng.gen_range(0.0..1.0)).collect(),
        2 => {
            let mut s = vec![0.0; m];
            for _ in 0..rng.gen_range(1..4) {
                s[rng.gen_range(0..m)] = amplitude * rng.gen_range(-1.0..1.0);
            }
            s
        }
        _ => {
            let mut level = 0.0;
            (0..m)
                .map(|_| {
                    level += rng.gen_range(-1.0..1.0);
                    amplitude * level / math::sqrt(m as f64)
                })
                .collect()
        }
    };
    GridFunction::new(spec, samples)
}

/// Checks `‖R f‖_inf ≤ ‖f‖_inf` and `‖R f‖_1 ≤ ‖f‖_1` over `trials` seeded
/// random inputs and reports the worst ratios.
pub fn verify_nonexpansive(
    spec: GridSpec,
    trials: usize,
    p: &ResolventParams,
    seed: u64,
) -> Result<NonexpansiveReport> {
    if trials == 0 {
        return Err(Error::InvalidParameter {
            name: "trials",
            value: 0.0,
            reason: "at least one trial is needed",
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = NonexpansiveReport {
        trials,
        worst_inf_ratio: 0.0,
        worst_l1_ratio: 0.0,
    };
    for trial in 0..trials {
        let f = random_grid_function(spec, &mut rng, trial)?;
        let rf = apply_resolvent(&f, p)?;
        let (inf_in, one_in) = (f.norm_inf(), f.norm_1());
        if inf_in > 0.0 {
            report.worst_inf_ratio = report.worst_inf_ratio.max(rf.norm_inf() / inf_in);
        }
        if one_in > 0.0 {
            report.worst_l1_ratio = report.worst_l1_ratio.max(rf.norm_1() / one_in);
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Preset;
    use core::f64::consts::PI;

    fn spec(l: f64, m: usize, mode: BoundaryMode) -> GridSpec {
        GridSpec::new(l, m, mode).unwrap()
    }

    fn gaussian() -> Preset {
        Preset::Gaussian {
            amplitude: 1.0,
            center: 0.0,
            width: 1.0,
        }
    }

    /// Dense weight matrix, column `j` = response to the unit sample at `j`.
    fn weights(spec: GridSpec, p: &ResolventParams) -> Vec<Vec<f64>> {
        let n = spec.distinct_points();
        let mut cols = vec![vec![0.0; n]; n];
        for j in 0..n {
            let mut e = vec![0.0; spec.points()];
            e[j] = 1.0;
            if spec.mode() == BoundaryMode::Periodic && j == 0 {
                e[spec.points() - 1] = 1.0;
            }
            let r = apply_resolvent(&GridFunction::new(spec, e).unwrap(), p).unwrap();
            cols[j] = r.samples()[..n].to_vec();
        }
        cols
    }

    /// Direct O(M²) quadrature of the kernel against the hat interpolant
    /// (no prefilter) on the zero-extended line, by many-point Simpson per
    /// cell. Independent of the sweep recurrences.
    fn direct_hat_quadrature(f: &GridFunction, h: f64) -> Vec<f64> {
        let spec = f.spec();
        let s = h.sqrt();
        let dx = spec.dx();
        let sub = 400;
        spec.nodes()
            .map(|x| {
                let mut total = 0.0;
                for c in 0..spec.points() - 1 {
                    let (x0, f0, f1) = (spec.node(c), f.samples()[c], f.samples()[c + 1]);
                    let hh = dx / sub as f64;
                    let val = |u: f64| {
                        let y = x0 + u;
                        (f0 + (f1 - f0) * u / dx) * (-(x - y).abs() / s).exp() / (2.0 * s)
                    };
                    let mut acc = val(0.0) + val(dx);
                    for k in 1..sub {
                        acc += val(k as f64 * hh) * if k % 2 == 1 { 4.0 } else { 2.0 };
                    }
                    total += acc * hh / 3.0;
                }
                total
            })
            .collect()
    }

    #[test]
    fn sweeps_match_direct_quadrature_without_prefilter() {
        let g = spec(2.0, 41, BoundaryMode::ZeroExtension);
        let f = GridFunction::from_fn(g, |x| (1.0 - x * x / 4.0) * (1.0 + 0.3 * x)).unwrap();
        let h: f64 = 0.05;
        let w = CellWeights {
            beta: 0.0,
            ..CellWeights::new(g.dx() / h.sqrt())
        };
        let fast = sweep_zero_extension(&f, &w);
        let slow = direct_hat_quadrature(&f, h);
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn constants_are_fixed_points_when_periodic() {
        let g = spec(1.0, 65, BoundaryMode::Periodic);
        for h in [1e-4, 1e-2, 1.0, 100.0] {
            let p = ResolventParams::new(h).unwrap();
            let mass = kernel_mass(g, &p).unwrap();
            for v in mass.samples() {
                assert!((v - 1.0).abs() < 1e-13, "h = {h}: {v}");
            }
        }
    }

    #[test]
    fn zero_maps_to_zero() {
        let g = spec(1.0, 33, BoundaryMode::ZeroExtension);
        let p = ResolventParams::new(0.1).unwrap();
        assert!(apply_resolvent(&GridFunction::zeros(g), &p).unwrap().is_zero());
    }

    #[test]
    fn rejects_bad_step() {
        assert!(ResolventParams::new(0.0).is_err());
        assert!(ResolventParams::new(-1.0).is_err());
        assert!(ResolventParams::new(f64::NAN).is_err());
    }

    #[test]
    fn cosine_symbol() {
        let g = spec(PI, 513, BoundaryMode::Periodic);
        for (h, k) in [(0.01, 1u32), (0.1, 2), (1.0, 3), (0.05, 5), (0.3, 7)] {
            let p = ResolventParams::new(h).unwrap();
            let f = Preset::Cosine {
                amplitude: 1.0,
                mode: k,
            }
            .sample(g)
            .unwrap();
            let omega = k as f64;
            let expected = f.scale(1.0 / (1.0 + h * omega * omega)).unwrap();
            let err = apply_resolvent(&f, &p).unwrap().sub(&expected).unwrap().norm_inf();
            assert!(err * (1.0 + h * omega * omega) < 1e-6, "h={h} k={k} err={err}");
        }
    }

    #[test]
    fn weights_nonnegative_with_bounded_sums() {
        // Sweeps the cell ratio a = dx/√h across the region where the β cap
        // becomes active.
        for mode in [BoundaryMode::Periodic, BoundaryMode::ZeroExtension] {
            let g = spec(1.0, 41, mode);
            for a in [0.01, 0.2, 1.0, 2.0, 2.7, 3.0, 5.0, 20.0] {
                let h = (g.dx() / a).powi(2);
                let p = ResolventParams::new(h).unwrap();
                let cols = weights(g, &p);
                let n = cols.len();
                for (j, col) in cols.iter().enumerate() {
                    for (i, &w) in col.iter().enumerate() {
                        assert!(w >= 0.0, "{mode:?} a={a} w[{i}][{j}]={w}");
                    }
                }
                for i in 0..n {
                    let row: f64 = cols.iter().map(|c| c[i]).sum();
                    assert!(row <= 1.0 + 1e-13, "{mode:?} a={a} row {i} sums to {row}");
                }
            }
        }
    }

    #[test]
    fn prefilter_coefficient_limits() {
        assert!((prefilter_coefficient(1e-6) - 1.0 / 12.0).abs() < 1e-14);
        let series = prefilter_coefficient(0.0499);
        let closed = prefilter_coefficient(0.0501);
        assert!((series - closed).abs() < 1e-7);
        assert_eq!(prefilter_coefficient(1000.0), 0.0);
    }

    #[test]
    fn cell_weight_series_is_continuous() {
        for a in [1e-2f64, 2e-2] {
            let closed = (-(-a).exp_m1() - a * (-a).exp()) / a;
            assert!((first_moment_series(a) - closed).abs() < 1e-13);
        }
    }

    #[test]
    fn inverse_residual_is_second_order() {
        let residual = |m: usize, mode: BoundaryMode, preset: Preset| {
            let l = if mode == BoundaryMode::Periodic { PI } else { 10.0 };
            let g = spec(l, m, mode);
            let p = ResolventParams::new(0.1).unwrap();
            verify_inverse(&preset.sample(g).unwrap(), &p).unwrap().sup_residual
        };
        for (mode, preset) in [
            (BoundaryMode::ZeroExtension, gaussian()),
            (
                BoundaryMode::Periodic,
                Preset::Cosine {
                    amplitude: 1.0,
                    mode: 2,
                },
            ),
        ] {
            let r1 = residual(257, mode, preset);
            let r2 = residual(513, mode, preset);
            let ratio = r1 / r2;
            assert!((3.5..4.5).contains(&ratio), "{mode:?}: ratio {ratio}");
        }
        let g = spec(1.0, 33, BoundaryMode::ZeroExtension);
        let p = ResolventParams::new(0.1).unwrap();
        assert_eq!(
            verify_inverse(&GridFunction::zeros(g), &p).unwrap().sup_residual,
            0.0
        );
    }

    #[test]
    fn small_step_is_nearly_identity() {
        let g = spec(10.0, 2001, BoundaryMode::ZeroExtension);
        let f = gaussian().sample(g).unwrap();
        let p = ResolventParams::new(1e-8).unwrap();
        let err = apply_resolvent(&f, &p).unwrap().sub(&f).unwrap().norm_inf();
        assert!(err < 1e-4, "err {err}");
    }

    #[test]
    fn nonexpansive_random_trials() {
        for mode in [BoundaryMode::ZeroExtension, BoundaryMode::Periodic] {
            let g = spec(1.0, 129, mode);
            let p = ResolventParams::new(1e-2).unwrap();
            let report = verify_nonexpansive(g, 100, &p, 7).unwrap();
            assert!(report.worst_inf_ratio <= 1.0, "{report:?}");
            assert!(report.worst_l1_ratio <= 1.0 + 1e-10, "{report:?}");
        }
        let g = spec(1.0, 129, BoundaryMode::Periodic);
        let p = ResolventParams::new(1e-2).unwrap();
        assert!(verify_nonexpansive(g, 0, &p, 7).is_err());
    }
}
