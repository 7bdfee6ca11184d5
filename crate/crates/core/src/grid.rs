//! Uniform grids on `[-L, L]`, sampled functions, their norms and the
//! discrete Laplacian.
//!
//! Grid nodes are `x_k = -L + k dx`, `k = 0 .. M-1`, with `dx = 2L / (M-1)`,
//! so both end points are nodes. In [`BoundaryMode::Periodic`] the last node
//! is the periodic image of the first: the period is `2L`, there are `M - 1`
//! distinct nodes, and every constructor overwrites the last sample with the
//! first. With that convention the trapezoid rule used for all norms is the
//! periodic rectangle rule.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::math;
use crate::{Error, Result};

/// How samples outside `[-L, L]` are treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BoundaryMode {
    /// The function is zero outside the domain.
    #[default]
    ZeroExtension,
    /// The function is `2L`-periodic.
    Periodic,
}

/// Truncated spatial domain and its uniform sampling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    half_width: f64,
    points: usize,
    dx: f64,
    mode: BoundaryMode,
}

impl GridSpec {
    pub fn new(half_width: f64, points: usize, mode: BoundaryMode) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) || points < 3 {
            return Err(Error::InvalidGrid { half_width, points });
        }
        Ok(Self {
            half_width,
            points,
            dx: 2.0 * half_width / (points - 1) as f64,
            mode,
        })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn mode(&self) -> BoundaryMode {
        self.mode
    }

    /// Number of independent samples: `M` for zero extension, `M - 1` when
    /// periodic.
    pub fn distinct_points(&self) -> usize {
        match self.mode {
            BoundaryMode::ZeroExtension => self.points,
            BoundaryMode::Periodic => self.points - 1,
        }
    }

    /// Position of node `k`. Computed symmetrically so that `x_0 = -L`,
    /// `x_{M-1} = L` and the centre node (odd `M`) is exactly zero.
    pub fn node(&self, k: usize) -> f64 {
        let m = (self.points - 1) as f64;
        self.half_width * ((2 * k) as f64 - m) / m
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.points).map(|k| self.node(k))
    }

    fn trapezoid_weight(&self, k: usize) -> f64 {
        if k == 0 || k + 1 == self.points {
            0.5 * self.dx
        } else {
            self.dx
        }
    }
}

/// Real samples of a function on a [`GridSpec`]. All samples are finite.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    spec: GridSpec,
    samples: Vec<f64>,
}

impl GridFunction {
    pub fn new(spec: GridSpec, mut samples: Vec<f64>) -> Result<Self> {
        if samples.len() != spec.points {
            return Err(Error::LengthMismatch {
                expected: spec.points,
                found: samples.len(),
            });
        }
        if let Some(index) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "grid function samples",
                index,
            });
        }
        if spec.mode == BoundaryMode::Periodic {
            samples[spec.points - 1] = samples[0];
        }
        Ok(Self { spec, samples })
    }

    pub fn zeros(spec: GridSpec) -> Self {
        Self {
            spec,
            samples: vec![0.0; spec.points],
        }
    }

    pub fn constant(spec: GridSpec, value: f64) -> Result<Self> {
        Self::new(spec, vec![value; spec.points])
    }

    pub fn from_fn(spec: GridSpec, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(spec, spec.nodes().map(f).collect())
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn is_zero(&self) -> bool {
        self.samples.iter().all(|&v| v == 0.0)
    }

    /// True when every sample has the same value.
    pub fn is_constant(&self) -> bool {
        self.samples.iter().all(|&v| v == self.samples[0])
    }

    pub(crate) fn ensure_same_grid(&self, other: &GridFunction) -> Result<()> {
        if self.spec == other.spec {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// `a * self + b * other`.
    pub fn lincomb(&self, a: f64, other: &GridFunction, b: f64) -> Result<GridFunction> {
        self.ensure_same_grid(other)?;
        let samples = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(x, y)| a * x + b * y)
            .collect();
        GridFunction::checked(self.spec, samples, "linear combination")
    }

    pub fn sub(&self, other: &GridFunction) -> Result<GridFunction> {
        self.lincomb(1.0, other, -1.0)
    }

    pub fn scale(&self, c: f64) -> Result<GridFunction> {
        let samples = self.samples.iter().map(|x| c * x).collect();
        GridFunction::checked(self.spec, samples, "scaling")
    }

    /// Builds from samples produced by an internal operation, reporting
    /// non-finite results against `context`.
    pub(crate) fn checked(
        spec: GridSpec,
        samples: Vec<f64>,
        context: &'static str,
    ) -> Result<GridFunction> {
        match samples.iter().position(|v| !v.is_finite()) {
            Some(index) => Err(Error::NonFinite { context, index }),
            None => GridFunction::new(spec, samples),
        }
    }

    pub fn norm_inf(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Trapezoid approximation of `∫ |f|` over `[-L, L]`.
    pub fn norm_1(&self) -> f64 {
        self.samples
            .iter()
            .enumerate()
            .map(|(k, v)| self.spec.trapezoid_weight(k) * v.abs())
            .sum()
    }

    /// Square root of the trapezoid approximation of `∫ f²`.
    pub fn norm_2(&self) -> f64 {
        math::sqrt(self.norm_2_squared())
    }

    pub fn norm_2_squared(&self) -> f64 {
        self.samples
            .iter()
            .enumerate()
            .map(|(k, v)| self.spec.trapezoid_weight(k) * v * v)
            .sum()
    }

    /// Second-order central difference `(f_{k+1} - 2 f_k + f_{k-1}) / dx²`.
    pub fn laplacian(&self) -> Result<GridFunction> {
        let m = self.spec.points;
        let inv_dx2 = 1.0 / (self.spec.dx * self.spec.dx);
        let f = &self.samples;
        let mut out = vec![0.0; m];
        match self.spec.mode {
            BoundaryMode::ZeroExtension => {
                for k in 0..m {
                    let left = if k == 0 { 0.0 } else { f[k - 1] };
                    let right = if k + 1 == m { 0.0 } else { f[k + 1] };
                    out[k] = (right - 2.0 * f[k] + left) * inv_dx2;
                }
            }
            BoundaryMode::Periodic => {
                let n = m - 1;
                for k in 0..n {
                    let left = f[(k + n - 1) % n];
                    let right = f[(k + 1) % n];
                    out[k] = (right - 2.0 * f[k] + left) * inv_dx2;
                }
                out[n] = out[0];
            }
        }
        GridFunction::checked(self.spec, out, "laplacian")
    }

    /// Sample `k + offset` under the boundary mode (zero outside the domain
    /// or periodic wrap).
    pub(crate) fn extended(&self, k: usize, offset: isize) -> f64 {
        let j = k as isize + offset;
        match self.spec.mode {
            BoundaryMode::ZeroExtension => {
                if j < 0 || j >= self.spec.points as isize {
                    0.0
                } else {
                    self.samples[j as usize]
                }
            }
            BoundaryMode::Periodic => {
                let n = (self.spec.points - 1) as isize;
                self.samples[j.rem_euclid(n) as usize]
            }
        }
    }
}

/// Closed-form families used for initial data and coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Preset {
    /// `a exp(-(x - c)² / (2 σ²))`
    Gaussian { amplitude: f64, center: f64, width: f64 },
    /// `a cos(π k x / L)`
    Cosine { amplitude: f64, mode: u32 },
    Constant(f64),
    /// `a sech²(x / w)`
    Sech2 { amplitude: f64, width: f64 },
    Zero,
}

impl Preset {
    /// Builds a preset from its name and `key = value` parameters. Missing
    /// keys take the defaults amplitude 1, center 0, width 1, mode 1,
    /// value 0.
    pub fn from_name(name: &str, params: &[(&str, f64)]) -> Result<Preset> {
        let allowed: &[&str] = match name {
            "gaussian" => &["amplitude", "center", "width"],
            "cosine" => &["amplitude", "mode"],
            "constant" => &["value"],
            "sech2" => &["amplitude", "width"],
            "zero" => &[],
            other => return Err(Error::UnknownPreset(other.to_string())),
        };
        if let Some((key, _)) = params.iter().find(|(k, _)| !allowed.contains(k)) {
            return Err(Error::PresetParameter(key.to_string()));
        }
        let get = |key: &str, default: f64| {
            params
                .iter()
                .rev()
                .find(|(k, _)| *k == key)
                .map_or(default, |(_, v)| *v)
        };
        let preset = match name {
            "gaussian" => Preset::Gaussian {
                amplitude: get("amplitude", 1.0),
                center: get("center", 0.0),
                width: get("width", 1.0),
            },
            "cosine" => {
                let mode = get("mode", 1.0);
                if !(mode >= 0.0 && math::floor(mode) == mode && mode <= u32::MAX as f64) {
                    return Err(Error::InvalidParameter {
                        name: "mode",
                        value: mode,
                        reason: "cosine mode must be a non-negative integer",
                    });
                }
                Preset::Cosine {
                    amplitude: get("amplitude", 1.0),
                    mode: mode as u32,
                }
            }
            "constant" => Preset::Constant(get("value", 0.0)),
            "sech2" => Preset::Sech2 {
                amplitude: get("amplitude", 1.0),
                width: get("width", 1.0),
            },
            _ => Preset::Zero,
        };
        preset.validate()?;
        Ok(preset)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Preset::Gaussian { .. } => "gaussian",
            Preset::Cosine { .. } => "cosine",
            Preset::Constant(_) => "constant",
            Preset::Sech2 { .. } => "sech2",
            Preset::Zero => "zero",
        }
    }

    /// Parameters as `(key, value)` pairs, the inverse of [`Preset::from_name`].
    pub fn params(&self) -> Vec<(&'static str, f64)> {
        match *self {
            Preset::Gaussian {
                amplitude,
                center,
                width,
            } => vec![("amplitude", amplitude), ("center", center), ("width", width)],
            Preset::Cosine { amplitude, mode } => {
                vec![("amplitude", amplitude), ("mode", mode as f64)]
            }
            Preset::Constant(value) => vec![("value", value)],
            Preset::Sech2 { amplitude, width } => vec![("amplitude", amplitude), ("width", width)],
            Preset::Zero => Vec::new(),
        }
    }

    fn validate(&self) -> Result<()> {
        for (name, value) in self.params() {
            if !value.is_finite() {
                return Err(Error::InvalidParameter {
                    name,
                    value,
                    reason: "preset parameters must be finite",
                });
            }
        }
        match *self {
            Preset::Gaussian { width, .. } | Preset::Sech2 { width, .. } if width <= 0.0 => {
                Err(Error::InvalidParameter {
                    name: "width",
                    value: width,
                    reason: "width must be positive",
                })
            }
            _ => Ok(()),
        }
    }

    /// Value at `x` on a domain of half width `half_width`.
    pub fn eval(&self, x: f64, half_width: f64) -> f64 {
        match *self {
            Preset::Gaussian {
                amplitude,
                center,
                width,
            } => {
                let z = (x - center) / width;
                amplitude * math::exp(-0.5 * z * z)
            }
            Preset::Cosine { amplitude, mode } => {
                amplitude * math::cos(PI * mode as f64 * x / half_width)
            }
            Preset::Constant(c) => c,
            Preset::Sech2 { amplitude, width } => {
                let c = math::cosh(x / width);
                amplitude / (c * c)
            }
            Preset::Zero => 0.0,
        }
    }

    pub fn sample(&self, spec: GridSpec) -> Result<GridFunction> {
        self.validate()?;
        let half_width = spec.half_width();
        GridFunction::from_fn(spec, |x| self.eval(x, half_width))
    }
}
