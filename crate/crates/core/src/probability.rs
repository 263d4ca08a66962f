//! Outcome probabilities of the two-photon interference measurement.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::parametrization::{MomentumDifference, SourceWidths, SphericalParams};

/// Beam-splitter output class of a two-photon event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OutcomeLabel {
    /// Anti-bunching: the photons leave through different ports (coincidence).
    A,
    /// Bunching: both photons leave through the same port.
    B,
}

impl OutcomeLabel {
    pub const ALL: [OutcomeLabel; 2] = [OutcomeLabel::A, OutcomeLabel::B];

    #[inline]
    pub fn alpha(self) -> f64 {
        match self {
            OutcomeLabel::A => -1.0,
            OutcomeLabel::B => 1.0,
        }
    }
}

/// Indistinguishability of the photons in every degree of freedom other than
/// their localization.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Visibility(f64);

impl Visibility {
    pub fn new(nu: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&nu) {
            Ok(Self(nu))
        } else {
            Err(Error::invalid(format!("visibility must lie in [0, 1], got {nu}")))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Visibility {
    type Error = Error;

    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<Visibility> for f64 {
    fn from(v: Visibility) -> f64 {
        v.0
    }
}

/// Single-detector efficiency (both detectors are assumed equal).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Efficiency(f64);

impl Efficiency {
    pub const PERFECT: Efficiency = Efficiency(1.0);

    pub fn new(gamma: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&gamma) {
            Ok(Self(gamma))
        } else {
            Err(Error::invalid(format!("efficiency must lie in [0, 1], got {gamma}")))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Efficiency {
    type Error = Error;

    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<Efficiency> for f64 {
    fn from(v: Efficiency) -> f64 {
        v.0
    }
}

/// One detected two-photon event.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionRecord {
    pub outcome: OutcomeLabel,
    #[serde(flatten)]
    pub kappa: MomentumDifference,
}

/// Beat factor `ζ_X(u) = (1 + α(X) ν cos u) / 2`.
#[inline]
pub fn quantum_beat(x: OutcomeLabel, nu: Visibility, u: f64) -> f64 {
    0.5 * (1.0 + x.alpha() * nu.0 * u.cos())
}

/// Joint density of outcome `x` and momentum difference `κ`; integrates to
/// `γ²` over both outcomes and all of `κ`-space.
pub fn resolved_density(
    x: OutcomeLabel,
    kappa: &MomentumDifference,
    sph: &SphericalParams,
    nu: Visibility,
    gamma: Efficiency,
) -> f64 {
    let g2 = gamma.0 * gamma.0;
    let phase = sph.s() * kappa.dot(&sph.direction());
    g2 * PI.powf(-1.5) * (-kappa.norm_sq()).exp() * quantum_beat(x, nu, phase)
}

/// Outcome probability when the momenta are not resolved.
pub fn nonresolving_prob(x: OutcomeLabel, s: f64, nu: Visibility, gamma: Efficiency) -> f64 {
    0.5 * gamma.0 * gamma.0 * (1.0 + x.alpha() * nu.0 * (-s * s / 4.0).exp())
}

/// Probabilities of detecting zero, one or both photons.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossSplit {
    pub p0: f64,
    pub p1: f64,
    pub p2: f64,
}

pub fn loss_split(gamma: Efficiency) -> LossSplit {
    let g = gamma.0;
    let q = 1.0 - g;
    LossSplit {
        p0: q * q,
        p1: 2.0 * g * q,
        p2: g * g,
    }
}

/// Gaussian beats envelope `C(Δk)`, in s·m² for `Δk = (Δω, Δkx, Δky)`.
pub fn gaussian_envelope(delta_k: [f64; 3], widths: &SourceWidths) -> f64 {
    let sw = widths.sigma_omega();
    let sx = widths.sigma_kx();
    let sy = widths.sigma_ky();
    let norm = (4.0 * PI).powf(-1.5) / (sw * sx * sy);
    let e = (delta_k[0] / sw).powi(2) + (delta_k[1] / sx).powi(2) + (delta_k[2] / sy).powi(2);
    norm * (-e / 4.0).exp()
}
