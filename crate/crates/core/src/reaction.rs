//! Polynomial reaction term `G(u) = Σ a_i(x) u^i`, the full right-hand side
//! `F(u) = Δu + G(u)` and the majorant polynomials built from coefficient
//! norms.

use alloc::vec;
use alloc::vec::Vec;

use crate::grid::{BoundaryMode, GridFunction, GridSpec};
use crate::{Error, Result};

/// Coefficient functions `a_0 .. a_d` on one shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ReactionCoefficients {
    coeffs: Vec<GridFunction>,
}

impl ReactionCoefficients {
    pub fn new(coeffs: Vec<GridFunction>) -> Result<Self> {
        let first = coeffs.first().ok_or(Error::EmptyReaction)?;
        for c in &coeffs[1..] {
            first.ensure_same_grid(c)?;
        }
        Ok(Self { coeffs })
    }

    /// `G ≡ 0`, i.e. the plain heat equation.
    pub fn zero(spec: GridSpec) -> Self {
        Self {
            coeffs: vec![GridFunction::zeros(spec)],
        }
    }

    pub fn spec(&self) -> &GridSpec {
        self.coeffs[0].spec()
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coefficients(&self) -> &[GridFunction] {
        &self.coeffs
    }

    pub fn coefficient(&self, i: usize) -> Option<&GridFunction> {
        self.coeffs.get(i)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(GridFunction::is_zero)
    }

    /// Pointwise `Σ a_i(x_k) u(x_k)^i` by Horner's scheme.
    pub fn apply_g(&self, u: &GridFunction) -> Result<GridFunction> {
        self.coeffs[0].ensure_same_grid(u)?;
        let samples = u
            .samples()
            .iter()
            .enumerate()
            .map(|(k, &uk)| {
                self.coeffs
                    .iter()
                    .rev()
                    .fold(0.0, |acc, a| acc * uk + a.samples()[k])
            })
            .collect();
        GridFunction::checked(*u.spec(), samples, "reaction term")
    }

    /// `laplacian(u) + G(u)`.
    pub fn apply_f(&self, u: &GridFunction) -> Result<GridFunction> {
        let lap = u.laplacian()?;
        lap.lincomb(1.0, &self.apply_g(u)?, 1.0)
    }

    pub fn majorant(&self, kind: NormKind) -> MajorantPolynomial {
        let norms = self
            .coeffs
            .iter()
            .map(|a| match kind {
                NormKind::OneNorm => a.norm_1(),
                NormKind::InfNorm => a.norm_inf(),
            })
            .collect();
        MajorantPolynomial { norms, kind }
    }
}

/// Which coefficient norm a [`MajorantPolynomial`] is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormKind {
    /// `g_1(z) = Σ ‖a_i‖_1 z^i`
    OneNorm,
    /// `g_inf(z) = Σ ‖a_i‖_inf z^i`
    InfNorm,
}

/// Polynomial with non-negative coefficients `‖a_0‖ .. ‖a_d‖`.
#[derive(Debug, Clone, PartialEq)]
pub struct MajorantPolynomial {
    norms: Vec<f64>,
    kind: NormKind,
}

impl MajorantPolynomial {
    /// Builds a majorant directly from its coefficients.
    pub fn from_coefficients(norms: Vec<f64>, kind: NormKind) -> Result<Self> {
        if norms.is_empty() {
            return Err(Error::EmptyReaction);
        }
        if let Some(&value) = norms.iter().find(|&&v| !(v.is_finite() && v >= 0.0)) {
            return Err(Error::InvalidParameter {
                name: "majorant coefficient",
                value,
                reason: "majorant coefficients must be finite and non-negative",
            });
        }
        Ok(Self { norms, kind })
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.norms
    }

    pub fn kind(&self) -> NormKind {
        self.kind
    }

    /// Constant term `‖a_0‖`.
    pub fn constant_term(&self) -> f64 {
        self.norms[0]
    }

    /// True when some coefficient of degree ≥ 2 is positive, which is when
    /// `y' = g(y)` blows up in finite time from any `y0 > 0`.
    pub fn is_superlinear(&self) -> bool {
        self.norms.iter().skip(2).any(|&c| c > 0.0)
    }

    fn check_argument(z: f64) -> Result<()> {
        if z >= 0.0 && z.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidParameter {
                name: "z",
                value: z,
                reason: "majorants are evaluated at norms, which are non-negative",
            })
        }
    }

    pub fn eval(&self, z: f64) -> Result<f64> {
        Self::check_argument(z)?;
        Ok(self.eval_unchecked(z))
    }

    pub fn derivative(&self, z: f64) -> Result<f64> {
        Self::check_argument(z)?;
        Ok(self.derivative_unchecked(z))
    }

    pub(crate) fn eval_unchecked(&self, z: f64) -> f64 {
        self.norms.iter().rev().fold(0.0, |acc, &c| acc * z + c)
    }

    pub(crate) fn derivative_unchecked(&self, z: f64) -> f64 {
        self.norms
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |acc, (i, &c)| acc * z + i as f64 * c)
    }
}

/// Advisory findings of [`admissibility_check`].
#[derive(Debug, Clone, PartialEq)]
pub enum AdmissibilityWarning {
    /// A derivative estimate of the given order was not finite.
    NonFiniteDerivative { order: usize },
    /// The fourth difference is comparable to the samples themselves: the
    /// grid does not resolve the function.
    UnderResolved { ratio: f64 },
    /// With zero extension the initial data should have decayed at `±L`.
    BoundaryNotDecayed { value: f64 },
    /// A majorant value overflowed.
    NonFiniteMajorant,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibilityReport {
    /// `g_1(‖f0‖_1)`
    pub g1_at_norm: f64,
    /// `g_inf(‖f0‖_inf)`
    pub ginf_at_norm: f64,
    /// Sup-norms of finite-difference estimates of `f0', f0'', f0''', f0''''`
    /// over interior nodes.
    pub derivative_sup: [f64; 4],
    pub warnings: Vec<AdmissibilityWarning>,
}

impl AdmissibilityReport {
    pub fn is_clean(&self) -> bool {
        self.warnings.is_empty()
    }
}

/// Relative size of `dx⁴ |f''''|` against `‖f‖_inf` above which the
/// resolution warning fires.
const UNDER_RESOLVED_RATIO: f64 = 1e-2;
/// Largest boundary value tolerated for zero-extended initial data.
const BOUNDARY_DECAY: f64 = 1e-12;

/// Checks that `f0` and `r` describe an admissible initial value problem:
/// finite majorant values and bounded derivatives up to fourth order
/// (five-point central differences at interior nodes). Findings are
/// warnings, never errors.
pub fn admissibility_check(
    f0: &GridFunction,
    r: &ReactionCoefficients,
) -> Result<AdmissibilityReport> {
    r.coefficients()[0].ensure_same_grid(f0)?;
    let g1_at_norm = r.majorant(NormKind::OneNorm).eval(f0.norm_1())?;
    let ginf_at_norm = r.majorant(NormKind::InfNorm).eval(f0.norm_inf())?;

    let dx = f0.spec().dx();
    let mut sup = [0.0f64; 4];
    let (lo, hi) = match f0.spec().mode() {
        BoundaryMode::Periodic => (0, f0.spec().distinct_points()),
        BoundaryMode::ZeroExtension => (2, f0.spec().points().saturating_sub(2)),
    };
    for k in lo..hi {
        let v = |o: isize| f0.extended(k, o);
        let d1 = (v(1) - v(-1)) / (2.0 * dx);
        let d2 = (v(1) - 2.0 * v(0) + v(-1)) / (dx * dx);
        let d3 = (v(2) - 2.0 * v(1) + 2.0 * v(-1) - v(-2)) / (2.0 * dx * dx * dx);
        let d4 = (v(2) - 4.0 * v(1) + 6.0 * v(0) - 4.0 * v(-1) + v(-2)) / (dx * dx * dx * dx);
        for (s, d) in sup.iter_mut().zip([d1, d2, d3, d4]) {
            *s = s.max(d.abs());
        }
    }

    let mut warnings = Vec::new();
    if !(g1_at_norm.is_finite() && ginf_at_norm.is_finite()) {
        warnings.push(AdmissibilityWarning::NonFiniteMajorant);
    }
    for (i, s) in sup.iter().enumerate() {
        if !s.is_finite() {
            warnings.push(AdmissibilityWarning::NonFiniteDerivative { order: i + 1 });
        }
    }
    let scale = f0.norm_inf();
    if scale > 0.0 {
        let ratio = sup[3] * dx * dx * dx * dx / scale;
        if ratio > UNDER_RESOLVED_RATIO {
            warnings.push(AdmissibilityWarning::UnderResolved { ratio });
        }
    }
    if f0.spec().mode() == BoundaryMode::ZeroExtension {
        let s = f0.samples();
        let value = s[0].abs().max(s[s.len() - 1].abs());
        if value > BOUNDARY_DECAY {
            warnings.push(AdmissibilityWarning::BoundaryNotDecayed { value });
        }
    }
    Ok(AdmissibilityReport {
        g1_at_norm,
        ginf_at_norm,
        derivative_sup: sup,
        warnings,
    })
}
