//! Fisher information and Cramér-Rao bounds for `(s, θ, φ)`.
//!
//! Rotating the integration variables so that one axis lies along `λ`
//! reduces the classical Fisher matrix to one-dimensional integrals over
//! `ρ = κ·λ`; the matrix is diagonal in that frame. At unit visibility the
//! beat contribution is identically one and the matrix equals `γ² Q`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::parametrization::SphericalParams;
use crate::probability::{Efficiency, Visibility};
use crate::quadrature::AdaptiveLegendre;

/// Symmetric 3×3 matrix in parameter order `(s, θ, φ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FisherMatrix {
    pub entries: [[f64; 3]; 3],
}

impl FisherMatrix {
    pub fn zero() -> Self {
        Self {
            entries: [[0.0; 3]; 3],
        }
    }

    pub fn diagonal(d: [f64; 3]) -> Self {
        let mut m = Self::zero();
        for (j, v) in d.into_iter().enumerate() {
            m.entries[j][j] = v;
        }
        m
    }

    pub fn diag(&self) -> [f64; 3] {
        [self.entries[0][0], self.entries[1][1], self.entries[2][2]]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i][j]
    }

    pub fn scaled(&self, k: f64) -> Self {
        let mut m = *self;
        m.entries.iter_mut().flatten().for_each(|v| *v *= k);
        m
    }

    pub fn max_off_diagonal(&self) -> f64 {
        let e = &self.entries;
        [e[0][1], e[0][2], e[1][2], e[1][0], e[2][0], e[2][1]]
            .iter()
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Per-parameter variance lower bounds for `n` independent events.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrbReport {
    /// Serialized as `null` when unbounded.
    pub crb_s: f64,
    pub crb_theta: f64,
    pub crb_phi: f64,
    pub n: usize,
}

impl CrbReport {
    pub fn as_array(&self) -> [f64; 3] {
        [self.crb_s, self.crb_theta, self.crb_phi]
    }

    /// Parameters whose Fisher entry vanished, so no finite bound exists.
    pub fn unbounded(&self) -> [bool; 3] {
        self.as_array().map(f64::is_infinite)
    }
}

/// Beat contribution `β_ν(x) = ν² sin²x / (1 − ν² cos²x)`.
///
/// At `ν = 1` the ratio is identically one, including its removable
/// singularities at `x = kπ`.
#[inline]
pub fn beta(nu: Visibility, x: f64) -> f64 {
    let v = nu.get();
    if v == 1.0 {
        return 1.0;
    }
    let (s, c) = x.sin_cos();
    let v2 = v * v;
    v2 * s * s / (1.0 - v2 * c * c)
}

/// Quantum Fisher information `½ diag(1, s², s² sin²θ)`.
pub fn qfi(sph: &SphericalParams) -> FisherMatrix {
    let s2 = sph.s() * sph.s();
    let st = sph.theta().sin();
    FisherMatrix::diagonal([0.5, 0.5 * s2, 0.5 * s2 * st * st])
}

/// Fisher density along `ρ = κ·λ`:
/// `π^{-1/2} e^{-ρ²} β_ν(sρ) diag(ρ², s²/2, s² sin²θ / 2)`.
pub fn fisher_density(rho: f64, sph: &SphericalParams, nu: Visibility) -> FisherMatrix {
    FisherMatrix::diagonal(density_diag(rho, sph, nu))
}

#[inline]
fn density_diag(rho: f64, sph: &SphericalParams, nu: Visibility) -> [f64; 3] {
    let s = sph.s();
    let st = sph.theta().sin();
    let w = (-rho * rho).exp() * beta(nu, s * rho) / PI.sqrt();
    [w * rho * rho, w * 0.5 * s * s, w * 0.5 * s * s * st * st]
}

/// Settings for integrating the Fisher density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FisherQuadrature {
    /// Gauss-Legendre points of the coarse per-panel rule; the check rule uses twice as many.
    pub nodes: usize,
    /// Integration domain is `[-cutoff, cutoff]`; the Gaussian tail beyond is `< e^{-cutoff²}`.
    pub cutoff: f64,
    /// Target relative accuracy of each diagonal entry.
    pub rel_tol: f64,
}

impl Default for FisherQuadrature {
    fn default() -> Self {
        Self {
            nodes: 16,
            cutoff: 9.0,
            rel_tol: 1e-12,
        }
    }
}

/// Classical Fisher matrix of the momentum-resolved measurement.
///
/// Unit visibility takes the closed form `γ² Q`; otherwise the density is
/// integrated numerically.
pub fn fisher_resolved(sph: &SphericalParams, nu: Visibility, gamma: Efficiency) -> Result<FisherMatrix> {
    if nu.get() == 1.0 {
        let g = gamma.get();
        return Ok(qfi(sph).scaled(g * g));
    }
    fisher_resolved_quadrature(sph, nu, gamma, &FisherQuadrature::default())
}

/// Numerical path of [`fisher_resolved`], usable at any visibility.
///
/// The panels are no wider than a quarter beat period `π / (2s)`, which keeps
/// the per-panel rule in its geometric-convergence regime for every `s`.
pub fn fisher_resolved_quadrature(
    sph: &SphericalParams,
    nu: Visibility,
    gamma: Efficiency,
    quad: &FisherQuadrature,
) -> Result<FisherMatrix> {
    if quad.nodes < 2 || !(quad.cutoff > 0.0) || !(quad.rel_tol > 0.0) {
        return Err(Error::invalid("fisher quadrature needs nodes >= 2, cutoff > 0, rel_tol > 0"));
    }
    let v = nu.get();
    if v == 0.0 {
        return Ok(FisherMatrix::zero());
    }
    let s = sph.s();
    let st = sph.theta().sin();
    let panel = if s > 0.0 { (PI / (2.0 * s)).min(0.5) } else { 0.5 };
    let panels = (quad.cutoff / panel).ceil() as usize;
    // the unit-visibility values bound every entry
    let scale = v * v;
    let tol = [
        quad.rel_tol * scale * 0.25,
        quad.rel_tol * scale * 0.5 * s * s,
        quad.rel_tol * scale * 0.5 * s * s * st * st,
    ]
    .map(|t| t.max(f64::MIN_POSITIVE));
    let rule = AdaptiveLegendre::new(quad.nodes);
    // even integrand: integrate the half line and double
    let half = rule.integrate(0.0, quad.cutoff, panels, tol, |rho| density_diag(rho, sph, nu))?;
    let g2 = gamma.get() * gamma.get();
    let d = half.map(|x| 2.0 * g2 * x);
    if d.iter().any(|x| !x.is_finite()) {
        return Err(Error::NumericFailure("non-finite Fisher entry".into()));
    }
    Ok(FisherMatrix::diagonal(d))
}

/// Fisher information on `s` when only bunching/anti-bunching is recorded:
/// `γ²ν² (s²/4) / (e^{s²/2} − ν²)`.
pub fn fisher_nonresolving(s: f64, nu: Visibility, gamma: Efficiency) -> f64 {
    let v = nu.get();
    let g2 = gamma.get() * gamma.get();
    let x = 0.5 * s * s;
    let denom = x.exp_m1() + (1.0 - v * v);
    if denom == 0.0 {
        // s = 0 at unit visibility: limit of x/2 / expm1(x)
        return 0.5 * g2;
    }
    g2 * v * v * 0.5 * x / denom
}

/// Diagonal Cramér-Rao bound `1 / (n F_jj)`.
pub fn crb(f: &FisherMatrix, n: usize) -> Result<CrbReport> {
    if n == 0 {
        return Err(Error::invalid("sample count must be at least 1"));
    }
    let b = f.diag().map(|fjj| {
        if fjj > 0.0 {
            1.0 / (n as f64 * fjj)
        } else {
            f64::INFINITY
        }
    });
    Ok(CrbReport {
        crb_s: b[0],
        crb_theta: b[1],
        crb_phi: b[2],
        n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    fn nu(v: f64) -> Visibility {
        Visibility::new(v).unwrap()
    }

    fn gamma(v: f64) -> Efficiency {
        Efficiency::new(v).unwrap()
    }

    fn sph(s: f64, t: f64, p: f64) -> SphericalParams {
        SphericalParams::new(s, t, p).unwrap()
    }

    /// Fourier expansion of `1/(1 − ν²cos²x)` against the Gaussian weight;
    /// returns `(∫e^{-ρ²}β ρ²/√π, ∫e^{-ρ²}β/√π)`. Independent of any quadrature.
    fn series_integrals(v: f64, s: f64) -> (f64, f64) {
        let root = (1.0 - v * v).sqrt();
        let r = (1.0 - root).powi(2) / (v * v);
        let (mut a, mut b) = (0.0, 0.0);
        for k in 1..400 {
            let kf = k as f64;
            let g = r.powi(k) * (-kf * kf * s * s).exp();
            a += g * (0.5 - kf * kf * s * s);
            b += g;
        }
        (0.5 - root * (0.5 + 2.0 * a), 1.0 - root * (1.0 + 2.0 * b))
    }

    #[test]
    fn beta_examples() {
        assert_eq!(beta(nu(1.0), 0.3), 1.0);
        assert_eq!(beta(nu(1.0), 0.0), 1.0);
        assert!((beta(nu(0.7), FRAC_PI_2) - 0.49).abs() < 1e-15);
        assert!(beta(nu(0.7), PI).abs() < 1e-30);
        assert_eq!(beta(nu(0.7), 0.0), 0.0);
    }

    #[test]
    fn qfi_examples() {
        assert_eq!(qfi(&sph(4.0, PI / 4.0, 0.1)).diag().map(|x| (x * 1e12).round() / 1e12), [0.5, 8.0, 4.0]);
        assert_eq!(qfi(&sph(3.0, 0.0, 0.0)).diag(), [0.5, 4.5, 0.0]);
        assert_eq!(qfi(&SphericalParams::zero()).diag(), [0.5, 0.0, 0.0]);
    }

    #[test]
    fn density_examples() {
        let p = sph(4.0, PI / 4.0, PI / 3.0);
        assert_eq!(fisher_density(0.0, &p, nu(0.7)).diag(), [0.0; 3]);
        assert_eq!(fisher_density(0.0, &p, nu(1.0)).diag()[0], 0.0);

        let d = fisher_density(1.0, &p, nu(1.0)).diag();
        let c = (-1.0f64).exp() / PI.sqrt();
        assert!((d[0] - c).abs() < 1e-15);
        assert!((d[1] - 8.0 * c).abs() < 1e-14);
        assert!((d[2] - 4.0 * c).abs() < 1e-14);

        for rho in [0.1, 0.7, 2.3] {
            let d = fisher_density(rho, &p, nu(0.7)).diag();
            let ratio = d[1] / d[2];
            assert!((ratio - 1.0 / (PI / 4.0).sin().powi(2)).abs() < 1e-12);
        }
    }

    #[test]
    fn resolved_closed_form_and_zero_visibility() {
        let f = fisher_resolved(&sph(5.0, PI / 3.0, 0.2), nu(1.0), gamma(0.9)).unwrap();
        let want = [0.5, 12.5, 9.375].map(|x| 0.81 * x);
        for j in 0..3 {
            assert!((f.diag()[j] - want[j]).abs() < 1e-13);
        }
        let f0 = fisher_resolved(&sph(5.0, PI / 3.0, 0.2), nu(0.0), gamma(0.9)).unwrap();
        assert_eq!(f0, FisherMatrix::zero());
    }

    #[test]
    fn resolved_matches_series_oracle() {
        for &(v, s, t) in &[(0.7, 4.0, PI / 4.0), (0.7, 3.0, PI / 5.0), (0.7, 5.0, PI / 3.0), (0.9, 10.0, 1.0), (0.3, 0.5, 0.4)] {
            let f = fisher_resolved(&sph(s, t, 0.0), nu(v), gamma(1.0)).unwrap();
            let (a, b) = series_integrals(v, s);
            let want = [a, 0.5 * s * s * b, 0.5 * s * s * t.sin().powi(2) * b];
            for j in 0..3 {
                let rel = (f.diag()[j] - want[j]).abs() / want[j];
                assert!(rel < 1e-10, "nu={v} s={s} entry {j}: {} vs {} ({rel})", f.diag()[j], want[j]);
            }
            assert_eq!(f.max_off_diagonal(), 0.0);
        }
    }

    #[test]
    fn quadrature_path_reproduces_unit_visibility() {
        let p = sph(4.0, PI / 4.0, PI / 3.0);
        let q = fisher_resolved_quadrature(&p, nu(1.0), gamma(1.0), &FisherQuadrature::default()).unwrap();
        let c = qfi(&p);
        for j in 0..3 {
            assert!((q.diag()[j] - c.diag()[j]).abs() <= 1e-10 * c.diag()[j]);
        }
    }

    #[test]
    fn zero_separation_below_unit_visibility() {
        let f = fisher_resolved(&SphericalParams::zero(), nu(0.7), gamma(1.0)).unwrap();
        assert_eq!(f.diag(), [0.0; 3]);
    }

    #[test]
    fn quadrature_rejects_bad_settings() {
        let bad = FisherQuadrature { nodes: 1, ..Default::default() };
        assert!(fisher_resolved_quadrature(&sph(1.0, 0.5, 0.0), nu(0.5), gamma(1.0), &bad).is_err());
    }

    #[test]
    fn nonresolving_examples() {
        assert_eq!(fisher_nonresolving(0.0, nu(1.0), gamma(1.0)), 0.5);
        assert!((fisher_nonresolving(1e-6, nu(1.0), gamma(1.0)) - 0.5).abs() < 1e-12);
        let want = 0.0025 / (0.005f64.exp() - 1.0);
        assert!((fisher_nonresolving(0.1, nu(1.0), gamma(1.0)) - want).abs() < 1e-12 * want);
        assert!((want - 0.498_751_041_666_233).abs() < 1e-13);
        assert_eq!(fisher_nonresolving(2.0, nu(0.0), gamma(1.0)), 0.0);
        assert_eq!(fisher_nonresolving(0.0, nu(0.5), gamma(1.0)), 0.0);
    }

    #[test]
    fn crb_examples() {
        let f = qfi(&sph(4.0, PI / 4.0, PI / 3.0));
        let r = crb(&f, 1000).unwrap();
        assert!((r.crb_s - 2e-3).abs() < 1e-15);
        assert!((r.crb_theta - 1.25e-4).abs() < 1e-15);
        assert!((r.crb_phi - 2.5e-4).abs() < 1e-15);
        let r2 = crb(&f, 2000).unwrap();
        for j in 0..3 {
            assert!((r2.as_array()[j] - r.as_array()[j] / 2.0).abs() < 1e-18);
        }
        let pole = crb(&qfi(&sph(4.0, 0.0, 0.0)), 10).unwrap();
        assert_eq!(pole.unbounded(), [false, false, true]);
        assert_eq!(serde_json::to_value(pole).unwrap()["crb_phi"], serde_json::Value::Null);
        assert!(crb(&f, 0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn beta_monotone_in_visibility(x in -20.0f64..20.0, a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(beta(nu(lo), x) <= beta(nu(hi), x) + 1e-15);
            prop_assert!((0.0..=1.0).contains(&beta(nu(hi), x)));
        }

        #[test]
        fn fisher_ordering(s in 0.1f64..8.0, t in 0.05f64..FRAC_PI_2, g in 0.1f64..=1.0, a in 0.0f64..0.99, b in 0.0f64..0.99) {
            let p = sph(s, t, 1.0);
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let f_lo = fisher_resolved(&p, nu(lo), gamma(g)).unwrap().diag();
            let f_hi = fisher_resolved(&p, nu(hi), gamma(g)).unwrap().diag();
            let bound = qfi(&p).scaled(g * g).diag();
            for j in 0..3 {
                prop_assert!(f_lo[j] <= f_hi[j] * (1.0 + 1e-12) + 1e-300);
                prop_assert!(f_hi[j] <= bound[j] * (1.0 + 1e-12));
            }
        }

        #[test]
        fn nonresolving_below_resolved(s in 1e-3f64..20.0, g in 0.0f64..=1.0) {
            let f = fisher_nonresolving(s, nu(1.0), gamma(g));
            prop_assert!(f <= 0.5 * g * g);
            if g > 0.0 {
                prop_assert!(f < 0.5 * g * g);
            }
        }
    }
}
