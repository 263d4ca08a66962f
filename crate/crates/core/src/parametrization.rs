//! Separation coordinates and detector geometry.
//!
//! A pair of emitters is described either by its physical separation
//! `(Δt, Δx, Δy)`, by the dimensionless reduced separation
//! `(τ, λx, λy) = (2σω Δt, 2σkx Δx, 2σky Δy)`, or by spherical parameters
//! `(s, θ, φ)` of the unit vector `λ = (τ, -λx, -λy) / s`. Since `λ` and `-λ`
//! produce identical outcome statistics, spherical parameters are always kept
//! on the half-sphere `θ ∈ [0, π/2]`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::probability::Efficiency;

/// Exact SI value, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Default margin used to operationalize the "much smaller than" resolution conditions.
pub const DEFAULT_FEASIBILITY_MARGIN: f64 = 0.1;

fn require_finite(name: &str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be finite, got {value}")))
    }
}

/// Standard deviations of the single-photon Gaussian momentum distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceWidths {
    sigma_omega: f64,
    sigma_kx: f64,
    sigma_ky: f64,
}

impl SourceWidths {
    pub fn new(sigma_omega: f64, sigma_kx: f64, sigma_ky: f64) -> Result<Self> {
        for (name, v) in [
            ("sigma_omega", sigma_omega),
            ("sigma_kx", sigma_kx),
            ("sigma_ky", sigma_ky),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!(
                    "{name} must be strictly positive and finite, got {v}"
                )));
            }
        }
        Ok(Self {
            sigma_omega,
            sigma_kx,
            sigma_ky,
        })
    }

    pub fn sigma_omega(&self) -> f64 {
        self.sigma_omega
    }

    pub fn sigma_kx(&self) -> f64 {
        self.sigma_kx
    }

    pub fn sigma_ky(&self) -> f64 {
        self.sigma_ky
    }
}

/// Emission-time and transverse-position offsets of emitter 2 relative to emitter 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalSeparation {
    /// s
    pub delta_t: f64,
    /// m
    pub delta_x: f64,
    /// m
    pub delta_y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedSeparation {
    pub tau: f64,
    pub lambda_x: f64,
    pub lambda_y: f64,
}

impl std::ops::Neg for ReducedSeparation {
    type Output = Self;

    fn neg(self) -> Self {
        Self {
            tau: -self.tau,
            lambda_x: -self.lambda_x,
            lambda_y: -self.lambda_y,
        }
    }
}

/// Magnitude and canonical direction of the reduced separation.
///
/// Invariants: `s >= 0`, `theta ∈ [0, π/2]`, `phi ∈ [0, 2π)`. When `s == 0`
/// neither angle is defined, and when `theta == 0` the azimuth is not defined;
/// undefined angles are stored as zero and reported through
/// [`theta_defined`](Self::theta_defined) / [`phi_defined`](Self::phi_defined).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "SphericalRepr", try_from = "SphericalRepr")]
pub struct SphericalParams {
    s: f64,
    theta: f64,
    phi: f64,
}

impl SphericalParams {
    pub fn new(s: f64, theta: f64, phi: f64) -> Result<Self> {
        require_finite("s", s)?;
        require_finite("theta", theta)?;
        require_finite("phi", phi)?;
        if s < 0.0 {
            return Err(Error::invalid(format!("s must be >= 0, got {s}")));
        }
        if !(0.0..=FRAC_PI_2).contains(&theta) {
            return Err(Error::invalid(format!("theta must lie in [0, pi/2], got {theta}")));
        }
        if !(0.0..TAU).contains(&phi) {
            return Err(Error::invalid(format!("phi must lie in [0, 2pi), got {phi}")));
        }
        if s == 0.0 {
            return Ok(Self::zero());
        }
        let phi = if theta == 0.0 { 0.0 } else { phi };
        Ok(Self { s, theta, phi })
    }

    /// Coincident emitters.
    pub fn zero() -> Self {
        Self {
            s: 0.0,
            theta: 0.0,
            phi: 0.0,
        }
    }

    /// Canonical parameters of the separation `v` (components along the
    /// `(ξ, κx, κy)` axes). `v` and `-v` map to the same result.
    pub fn from_vector(v: [f64; 3]) -> Self {
        let s = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if s == 0.0 || !s.is_finite() {
            return Self::zero();
        }
        // first nonzero component positive, with the equator resolved toward phi ∈ [0, π)
        let flip = v[0] < 0.0 || (v[0] == 0.0 && (v[2] < 0.0 || (v[2] == 0.0 && v[1] < 0.0)));
        let u = if flip { [-v[0], -v[1], -v[2]] } else { v };
        let transverse = u[1].hypot(u[2]);
        let theta = transverse.atan2(u[0]);
        if transverse == 0.0 {
            return Self { s, theta: 0.0, phi: 0.0 };
        }
        let mut phi = u[2].atan2(u[1]);
        if phi < 0.0 {
            phi += TAU;
        }
        if phi >= TAU {
            phi = 0.0;
        }
        Self { s, theta, phi }
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    /// Polar angle; zero when undefined.
    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Azimuth; zero when undefined.
    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn theta_defined(&self) -> bool {
        self.s > 0.0
    }

    pub fn phi_defined(&self) -> bool {
        self.s > 0.0 && self.theta > 0.0
    }

    pub fn defined_theta(&self) -> Option<f64> {
        self.theta_defined().then_some(self.theta)
    }

    pub fn defined_phi(&self) -> Option<f64> {
        self.phi_defined().then_some(self.phi)
    }

    /// Unit vector `λ` (arbitrary but unit-norm when `s == 0`).
    pub fn direction(&self) -> [f64; 3] {
        direction(self.theta, self.phi)
    }

    /// The `(s, θ, φ)` triple in parameter order.
    pub fn as_array(&self) -> [f64; 3] {
        [self.s, self.theta, self.phi]
    }
}

#[derive(Serialize, Deserialize)]
struct SphericalRepr {
    s: f64,
    theta: Option<f64>,
    phi: Option<f64>,
}

impl From<SphericalParams> for SphericalRepr {
    fn from(p: SphericalParams) -> Self {
        Self {
            s: p.s,
            theta: p.defined_theta(),
            phi: p.defined_phi(),
        }
    }
}

impl TryFrom<SphericalRepr> for SphericalParams {
    type Error = Error;

    fn try_from(r: SphericalRepr) -> Result<Self> {
        SphericalParams::new(r.s, r.theta.unwrap_or(0.0), r.phi.unwrap_or(0.0))
    }
}

/// `λ(θ, φ) = (cos θ, sin θ cos φ, sin θ sin φ)`, valid for any real angles.
#[inline]
pub fn direction(theta: f64, phi: f64) -> [f64; 3] {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    [ct, st * cp, st * sp]
}

/// `∂λ/∂θ`, a unit vector orthogonal to `λ`.
#[inline]
pub fn direction_dtheta(theta: f64, phi: f64) -> [f64; 3] {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    [-st, ct * cp, ct * sp]
}

/// `∂λ/∂φ`, orthogonal to `λ` with norm `sin θ`.
#[inline]
pub fn direction_dphi(theta: f64, phi: f64) -> [f64; 3] {
    let st = theta.sin();
    let (sp, cp) = phi.sin_cos();
    [0.0, -st * sp, st * cp]
}

/// Dimensionless difference `κ = (ξ, κx, κy)` of the two detected photons'
/// frequencies and transverse momenta.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentumDifference {
    pub xi: f64,
    #[serde(rename = "kx")]
    pub kappa_x: f64,
    #[serde(rename = "ky")]
    pub kappa_y: f64,
}

impl MomentumDifference {
    pub fn new(xi: f64, kappa_x: f64, kappa_y: f64) -> Self {
        Self { xi, kappa_x, kappa_y }
    }

    #[inline]
    pub fn dot(&self, v: &[f64; 3]) -> f64 {
        self.xi * v[0] + self.kappa_x * v[1] + self.kappa_y * v[2]
    }

    #[inline]
    pub fn norm_sq(&self) -> f64 {
        self.xi * self.xi + self.kappa_x * self.kappa_x + self.kappa_y * self.kappa_y
    }

    pub fn is_finite(&self) -> bool {
        self.xi.is_finite() && self.kappa_x.is_finite() && self.kappa_y.is_finite()
    }
}

/// Detector efficiency, resolutions and camera distance.
///
/// Resolutions may be zero, which models an ideal detector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorModel {
    pub gamma: Efficiency,
    /// rad/s
    pub delta_omega: f64,
    /// m
    pub delta_xp: f64,
    /// m
    pub delta_yp: f64,
    /// m
    pub distance_d: f64,
}

impl DetectorModel {
    pub fn new(
        gamma: Efficiency,
        delta_omega: f64,
        delta_xp: f64,
        delta_yp: f64,
        distance_d: f64,
    ) -> Result<Self> {
        for (name, v) in [
            ("delta_omega", delta_omega),
            ("delta_xp", delta_xp),
            ("delta_yp", delta_yp),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        if !(distance_d.is_finite() && distance_d > 0.0) {
            return Err(Error::invalid(format!(
                "distance_d must be strictly positive, got {distance_d}"
            )));
        }
        Ok(Self {
            gamma,
            delta_omega,
            delta_xp,
            delta_yp,
            distance_d,
        })
    }
}

pub fn to_reduced(phys: &PhysicalSeparation, widths: &SourceWidths) -> Result<ReducedSeparation> {
    require_finite("delta_t", phys.delta_t)?;
    require_finite("delta_x", phys.delta_x)?;
    require_finite("delta_y", phys.delta_y)?;
    let red = ReducedSeparation {
        tau: 2.0 * widths.sigma_omega * phys.delta_t,
        lambda_x: 2.0 * widths.sigma_kx * phys.delta_x,
        lambda_y: 2.0 * widths.sigma_ky * phys.delta_y,
    };
    if red.tau.is_finite() && red.lambda_x.is_finite() && red.lambda_y.is_finite() {
        Ok(red)
    } else {
        Err(Error::invalid("reduced separation overflowed"))
    }
}

pub fn to_spherical(red: &ReducedSeparation) -> SphericalParams {
    SphericalParams::from_vector([red.tau, -red.lambda_x, -red.lambda_y])
}

pub fn from_spherical(sph: &SphericalParams) -> ReducedSeparation {
    let [l0, l1, l2] = sph.direction();
    ReducedSeparation {
        tau: sph.s * l0,
        lambda_x: -sph.s * l1,
        lambda_y: -sph.s * l2,
    }
}

/// Far-field relation `(kx, ky) = ω (x', y') / (c d)`.
pub fn camera_to_momentum(x_prime: f64, y_prime: f64, omega: f64, det: &DetectorModel) -> (f64, f64) {
    let scale = omega / (SPEED_OF_LIGHT * det.distance_d);
    (scale * x_prime, scale * y_prime)
}

/// Propagated uncertainty of the transverse momenta measured at `(x', y')` and `ω`.
pub fn momentum_resolution(
    k_x: f64,
    k_y: f64,
    x_prime: f64,
    y_prime: f64,
    omega: f64,
    det: &DetectorModel,
) -> Result<(f64, f64)> {
    if x_prime == 0.0 {
        return Err(Error::DivisionByZero("camera coordinate x' is zero"));
    }
    if y_prime == 0.0 {
        return Err(Error::DivisionByZero("camera coordinate y' is zero"));
    }
    if omega == 0.0 {
        return Err(Error::DivisionByZero("frequency omega is zero"));
    }
    let rel_omega = (det.delta_omega / omega).powi(2);
    let dkx = k_x.abs() * ((det.delta_xp / x_prime).powi(2) + rel_omega).sqrt();
    let dky = k_y.abs() * ((det.delta_yp / y_prime).powi(2) + rel_omega).sqrt();
    Ok((dkx, dky))
}

/// Where on the cameras, and at which frequency, the resolution is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    /// m
    pub x_prime: f64,
    /// m
    pub y_prime: f64,
    /// rad/s
    pub omega: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    /// `(δω/2σω, δkx/2σkx, δky/2σky)`
    pub delta_kappa: [f64; 3],
    /// Largest component of `delta_kappa`; must not exceed the margin.
    pub resolution_ratio: f64,
    /// `s |δκ·λ|`; must not exceed the margin.
    pub beat_ratio: f64,
    /// True when `s == 0` and there are no beats to resolve.
    pub beats_trivial: bool,
    pub margin: f64,
    pub resolution_ok: bool,
    pub beats_ok: bool,
    pub pass: bool,
}

/// Check that the detector resolves both the momentum envelope and the beats.
pub fn feasibility_check(
    det: &DetectorModel,
    widths: &SourceWidths,
    sph: &SphericalParams,
    point: &OperatingPoint,
    margin: f64,
) -> Result<FeasibilityReport> {
    if !(margin > 0.0 && margin <= 1.0) {
        return Err(Error::invalid(format!("margin must lie in (0, 1], got {margin}")));
    }
    let (k_x, k_y) = camera_to_momentum(point.x_prime, point.y_prime, point.omega, det);
    let (dkx, dky) = momentum_resolution(k_x, k_y, point.x_prime, point.y_prime, point.omega, det)?;
    let delta_kappa = [
        det.delta_omega / (2.0 * widths.sigma_omega),
        dkx / (2.0 * widths.sigma_kx),
        dky / (2.0 * widths.sigma_ky),
    ];
    let resolution_ratio = delta_kappa.iter().copied().fold(0.0, f64::max);
    let beats_trivial = sph.s == 0.0;
    let beat_ratio = if beats_trivial {
        0.0
    } else {
        let l = sph.direction();
        sph.s * (delta_kappa[0] * l[0] + delta_kappa[1] * l[1] + delta_kappa[2] * l[2]).abs()
    };
    let resolution_ok = resolution_ratio <= margin;
    let beats_ok = beats_trivial || beat_ratio <= margin;
    Ok(FeasibilityReport {
        delta_kappa,
        resolution_ratio,
        beat_ratio,
        beats_trivial,
        margin,
        resolution_ok,
        beats_ok,
        pass: resolution_ok && beats_ok,
    })
}

/// Wrap an angle difference into `(-π, π]`.
pub fn wrap_angle(x: f64) -> f64 {
    let mut y = x.rem_euclid(TAU);
    if y > PI {
        y -= TAU;
    }
    y
}
