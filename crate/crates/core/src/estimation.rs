//! Maximum-likelihood estimation of `(s, θ, φ)` from a detection sample.
//!
//! Up to constants the log-likelihood of a sample is
//! `Σ_i log(1 + α(X_i) ν cos(s κ_i·λ))`. It is multimodal in `s` because of
//! the beats, so the estimator first scans a coarse `(s, θ, φ)` grid and then
//! polishes the best few well-separated grid points with a damped Newton
//! iteration driven by the analytic score and Hessian. Parameters are kept
//! unconstrained during the iteration; the `±λ` degeneracy is folded away at
//! the end by [`canonicalize`].

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::parametrization::{direction, direction_dphi, direction_dtheta, SphericalParams};
use crate::probability::{DetectionRecord, Visibility};

pub const DEFAULT_PROB_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub s_grid_max: f64,
    pub s_grid_step: f64,
    pub theta_grid_count: usize,
    pub phi_grid_count: usize,
    /// Convergence threshold on the Euclidean norm of the total score.
    pub local_tol: f64,
    pub max_iters: usize,
    /// Number of separated grid maxima polished by the local solver.
    pub max_starts: usize,
    /// Visibility used for the grid scan and a first local fit when the
    /// data visibility is higher.
    pub smoothing_visibility: f64,
    /// Lower clamp of `1 + αν cos(·)` before taking the logarithm.
    pub prob_floor: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            s_grid_max: 10.0,
            s_grid_step: 0.25,
            theta_grid_count: 9,
            phi_grid_count: 16,
            local_tol: 1e-6,
            max_iters: 100,
            max_starts: 8,
            smoothing_visibility: 0.8,
            prob_floor: DEFAULT_PROB_FLOOR,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.s_grid_max.is_finite() && self.s_grid_max > 0.0) {
            return Err(Error::invalid("s_grid_max must be positive"));
        }
        // |κ·λ| is typically O(1), so the grid must sample every beat period
        if !(self.s_grid_step > 0.0 && self.s_grid_step <= FRAC_PI_2) {
            return Err(Error::invalid("s_grid_step must lie in (0, pi/2]"));
        }
        if self.theta_grid_count < 2 || self.phi_grid_count < 2 {
            return Err(Error::invalid("grid counts must be at least 2"));
        }
        if !(self.smoothing_visibility > 0.0 && self.smoothing_visibility <= 1.0) {
            return Err(Error::invalid("smoothing_visibility must lie in (0, 1]"));
        }
        if self.max_starts == 0 {
            return Err(Error::invalid("max_starts must be at least 1"));
        }
        if !(self.local_tol > 0.0) || self.max_iters == 0 {
            return Err(Error::invalid("local_tol must be positive and max_iters at least 1"));
        }
        if !(self.prob_floor > 0.0 && self.prob_floor < 1.0) {
            return Err(Error::invalid("prob_floor must lie in (0, 1)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimationResult {
    pub estimate: SphericalParams,
    pub log_likelihood: f64,
    pub converged: bool,
    pub n_starts_used: usize,
    pub gradient_norm: f64,
    pub iterations: usize,
}

/// Map an unconstrained `(s, θ, φ)` to the canonical half-sphere.
///
/// Uses `λ(−θ, φ) = λ(θ, φ + π)` and `−λ(θ, φ) = λ(π − θ, φ + π)`; on the
/// equator the azimuth is folded into `[0, π)`.
pub fn canonicalize(raw: [f64; 3]) -> SphericalParams {
    let [mut s, mut theta, mut phi] = raw;
    if !(s.is_finite() && theta.is_finite() && phi.is_finite()) || s == 0.0 {
        return SphericalParams::zero();
    }
    if s < 0.0 {
        s = -s;
        theta = PI - theta;
        phi += PI;
    }
    theta = theta.rem_euclid(TAU);
    if theta > PI {
        theta = TAU - theta;
        phi += PI;
    }
    if theta > FRAC_PI_2 {
        theta = PI - theta;
        phi += PI;
    }
    phi = phi.rem_euclid(TAU);
    if phi >= TAU {
        phi = 0.0;
    }
    if theta == FRAC_PI_2 && phi >= PI {
        phi -= PI;
    }
    if theta == 0.0 {
        phi = 0.0;
    }
    SphericalParams::new(s, theta, phi).unwrap_or_else(|_| SphericalParams::zero())
}

/// Log-likelihood with the default probability floor.
pub fn log_likelihood(sample: &[DetectionRecord], sph: &SphericalParams, nu: Visibility) -> f64 {
    log_likelihood_raw(sample, sph.as_array(), nu, DEFAULT_PROB_FLOOR)
}

/// Log-likelihood at unconstrained parameters.
pub fn log_likelihood_raw(sample: &[DetectionRecord], p: [f64; 3], nu: Visibility, prob_floor: f64) -> f64 {
    let v = nu.get();
    let l = direction(p[1], p[2]);
    sample
        .iter()
        .map(|r| {
            let u = p[0] * r.kappa.dot(&l);
            (1.0 + r.outcome.alpha() * v * u.cos()).max(prob_floor).ln()
        })
        .sum()
}

/// Gradient of [`log_likelihood`] in `(s, θ, φ)`.
pub fn score(sample: &[DetectionRecord], sph: &SphericalParams, nu: Visibility) -> [f64; 3] {
    score_raw(sample, sph.as_array(), nu, DEFAULT_PROB_FLOOR)
}

/// Per-record weights `−αν sin u / (1 + αν cos u)` projected on `λ`,
/// `s ∂λ/∂θ` and `s ∂λ/∂φ`.
pub fn score_raw(sample: &[DetectionRecord], p: [f64; 3], nu: Visibility, prob_floor: f64) -> [f64; 3] {
    let v = nu.get();
    let s = p[0];
    let l = direction(p[1], p[2]);
    let lt = direction_dtheta(p[1], p[2]);
    let lp = direction_dphi(p[1], p[2]);
    let mut g = [0.0; 3];
    for r in sample {
        let a = r.outcome.alpha() * v;
        let rho = r.kappa.dot(&l);
        let (sn, cs) = (s * rho).sin_cos();
        let d = 1.0 + a * cs;
        if d < prob_floor {
            continue;
        }
        let w = -a * sn / d;
        g[0] += w * rho;
        g[1] += w * s * r.kappa.dot(&lt);
        g[2] += w * s * r.kappa.dot(&lp);
    }
    g
}

/// Score contribution of a single record; its covariance at the truth is the
/// per-event Fisher matrix.
pub fn record_score(r: &DetectionRecord, sph: &SphericalParams, nu: Visibility) -> [f64; 3] {
    score_raw(std::slice::from_ref(r), sph.as_array(), nu, DEFAULT_PROB_FLOOR)
}

struct Local {
    value: f64,
    grad: [f64; 3],
    hess: [[f64; 3]; 3],
}

fn evaluate(sample: &[DetectionRecord], p: [f64; 3], v: f64, floor: f64) -> Local {
    let [s, theta, phi] = p;
    let l = direction(theta, phi);
    let lt = direction_dtheta(theta, phi);
    let lp = direction_dphi(theta, phi);
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    let ltp = [0.0, -ct * sp, ct * cp];
    let lpp = [0.0, -st * cp, -st * sp];

    let mut value = 0.0;
    let mut grad = [0.0; 3];
    let mut h = [[0.0; 3]; 3];
    for r in sample {
        let a = r.outcome.alpha() * v;
        let rho = r.kappa.dot(&l);
        let (sn, cs) = (s * rho).sin_cos();
        let d = 1.0 + a * cs;
        if d < floor {
            value += floor.ln();
            continue;
        }
        value += d.ln();
        let g1 = -a * sn / d;
        let g2 = -(a * cs + a * a) / (d * d);
        let rt = r.kappa.dot(&lt);
        let rp = r.kappa.dot(&lp);
        let du = [rho, s * rt, s * rp];
        let d2u = [
            [0.0, rt, rp],
            [rt, -s * rho, s * r.kappa.dot(&ltp)],
            [rp, s * r.kappa.dot(&ltp), s * r.kappa.dot(&lpp)],
        ];
        for i in 0..3 {
            grad[i] += g1 * du[i];
            for j in i..3 {
                h[i][j] += g2 * du[i] * du[j] + g1 * d2u[i][j];
            }
        }
    }
    for i in 0..3 {
        for j in 0..i {
            h[i][j] = h[j][i];
        }
    }
    Local { value, grad, hess: h }
}

fn norm(v: &[f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// Solve `m x = b` for symmetric positive-definite `m`, or `None`.
fn cholesky_solve(m: &[[f64; 3]; 3], b: &[f64; 3]) -> Option<[f64; 3]> {
    let mut l = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..=i {
            let mut sum = m[i][j];
            for k in 0..j {
                sum -= l[i][k] * l[j][k];
            }
            if i == j {
                if !(sum > 0.0) {
                    return None;
                }
                l[i][i] = sum.sqrt();
            } else {
                l[i][j] = sum / l[j][j];
            }
        }
    }
    let mut y = [0.0; 3];
    for i in 0..3 {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[i][k] * y[k];
        }
        y[i] = sum / l[i][i];
    }
    let mut x = [0.0; 3];
    for i in (0..3).rev() {
        let mut sum = y[i];
        for k in i + 1..3 {
            sum -= l[k][i] * x[k];
        }
        x[i] = sum / l[i][i];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

struct Refined {
    params: [f64; 3],
    value: f64,
    grad_norm: f64,
    converged: bool,
    iterations: usize,
}

/// Damped Newton ascent; the negated Hessian is shifted toward a diagonal
/// until it is positive definite, then a backtracking line search is applied.
fn refine(sample: &[DetectionRecord], start: [f64; 3], v: f64, cfg: &SolverConfig) -> Refined {
    let n = sample.len() as f64;
    let mut p = start;
    let mut cur = evaluate(sample, p, v, cfg.prob_floor);
    let mut iterations = 0;
    while iterations < cfg.max_iters {
        let gn = norm(&cur.grad);
        if gn <= cfg.local_tol {
            return Refined { params: p, value: cur.value, grad_norm: gn, converged: true, iterations };
        }
        iterations += 1;

        let neg_h = cur.hess.map(|row| row.map(|x| -x));
        // reference curvature in case the Hessian is indefinite: expected information at ν = 1
        let s2 = p[0] * p[0];
        let st2 = p[1].sin().powi(2);
        let diag = [0.5 * n, 0.5 * n * s2.max(1e-2), 0.5 * n * (s2 * st2).max(1e-2)];
        let mut step = None;
        let mut mu = 0.0;
        for _ in 0..40 {
            let mut m = neg_h;
            for j in 0..3 {
                m[j][j] += mu * diag[j];
            }
            if let Some(x) = cholesky_solve(&m, &cur.grad) {
                step = Some(x);
                break;
            }
            mu = if mu == 0.0 { 1e-4 } else { mu * 10.0 };
        }
        let Some(dir) = step else { break };

        let slope = cur.grad[0] * dir[0] + cur.grad[1] * dir[1] + cur.grad[2] * dir[2];
        let slack = 8.0 * f64::EPSILON * (cur.value.abs() + n);
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..50 {
            let trial = [p[0] + t * dir[0], p[1] + t * dir[1], p[2] + t * dir[2]];
            let next = evaluate(sample, trial, v, cfg.prob_floor);
            if next.value.is_finite() && next.value >= cur.value + 1e-4 * t * slope - slack {
                accepted = Some((trial, next));
                break;
            }
            t *= 0.5;
        }
        let Some((trial, next)) = accepted else { break };
        let moved = (0..3).any(|j| trial[j] != p[j]);
        p = trial;
        cur = next;
        if !moved {
            break;
        }
    }
    let gn = norm(&cur.grad);
    Refined {
        params: p,
        value: cur.value,
        grad_norm: gn,
        converged: gn <= cfg.local_tol,
        iterations,
    }
}

/// Grid point with its (approximate) log-likelihood.
#[derive(Debug, Clone, Copy)]
struct GridPoint {
    value: f64,
    params: [f64; 3],
}

/// Log-likelihood on the `(s, θ, φ)` grid. For each direction the cosines
/// at all grid values of `s` follow from the Chebyshev recurrence
/// `cos((k+1)hρ) = 2 cos(hρ) cos(khρ) − cos((k−1)hρ)`, and logarithms are
/// taken of blocks of products: every factor lies in `[prob_floor, 2]`.
fn scan_grid(sample: &[DetectionRecord], v: f64, cfg: &SolverConfig) -> Vec<GridPoint> {
    const BLOCK: usize = 16;
    let floor = cfg.prob_floor;
    let n = sample.len();
    let amp: Vec<f64> = sample.iter().map(|r| r.outcome.alpha() * v).collect();
    let steps = (cfg.s_grid_max / cfg.s_grid_step + 1e-9).floor() as usize;
    let h = cfg.s_grid_step;

    let log_block_sum = |cosines: &[f64]| -> f64 {
        let mut total = 0.0;
        for (chunk_a, chunk_c) in amp.chunks(BLOCK).zip(cosines.chunks(BLOCK)) {
            let mut prod = 1.0;
            for (a, c) in chunk_a.iter().zip(chunk_c) {
                prod *= (1.0 + a * c).max(floor);
            }
            total += prod.ln();
        }
        total
    };

    let mut points = Vec::new();
    let ones = vec![1.0; n];
    points.push(GridPoint { value: log_block_sum(&ones), params: [0.0, 0.0, 0.0] });

    let dtheta = FRAC_PI_2 / (cfg.theta_grid_count - 1) as f64;
    let dphi = TAU / cfg.phi_grid_count as f64;
    let mut c_prev = vec![0.0; n];
    let mut c_cur = vec![0.0; n];
    let mut c_one = vec![0.0; n];
    for ti in 0..cfg.theta_grid_count {
        let theta = ti as f64 * dtheta;
        let phi_count = if ti == 0 { 1 } else { cfg.phi_grid_count };
        for pi in 0..phi_count {
            let phi = pi as f64 * dphi;
            let l = direction(theta, phi);
            for (i, r) in sample.iter().enumerate() {
                let c = (h * r.kappa.dot(&l)).cos();
                c_one[i] = c;
                c_cur[i] = c;
                c_prev[i] = 1.0;
            }
            for k in 1..=steps {
                points.push(GridPoint {
                    value: log_block_sum(&c_cur),
                    params: [k as f64 * h, theta, phi],
                });
                for i in 0..n {
                    let next = 2.0 * c_one[i] * c_cur[i] - c_prev[i];
                    c_prev[i] = c_cur[i];
                    c_cur[i] = next;
                }
            }
        }
    }
    points
}

fn separated(a: &[f64; 3], b: &[f64; 3], cfg: &SolverConfig) -> bool {
    if (a[0] - b[0]).abs() > 1.5 * cfg.s_grid_step {
        return true;
    }
    if a[0] == 0.0 || b[0] == 0.0 {
        return false;
    }
    let la = direction(a[1], a[2]);
    let lb = direction(b[1], b[2]);
    let cos = (la[0] * lb[0] + la[1] * lb[1] + la[2] * lb[2]).abs().min(1.0);
    cos.acos() > 0.3
}

/// Highest grid points, skipping any that neighbours an already chosen one.
fn select_starts(mut grid: Vec<GridPoint>, cfg: &SolverConfig) -> Vec<[f64; 3]> {
    grid.sort_by(|a, b| b.value.total_cmp(&a.value));
    let mut starts: Vec<[f64; 3]> = Vec::with_capacity(cfg.max_starts);
    for g in grid {
        if starts.len() == cfg.max_starts {
            break;
        }
        if starts.iter().all(|s| separated(s, &g.params, cfg)) {
            starts.push(g.params);
        }
    }
    starts
}

/// Multi-start maximum-likelihood estimate of `(s, θ, φ)`.
pub fn estimate(sample: &[DetectionRecord], nu: Visibility, cfg: &SolverConfig) -> Result<EstimationResult> {
    cfg.validate()?;
    if sample.is_empty() {
        return Err(Error::invalid("cannot estimate from an empty sample"));
    }
    if nu.get() == 0.0 {
        return Err(Error::FlatLikelihood);
    }
    let v = nu.get();
    // at high visibility every event puts a log singularity into the
    // likelihood; scan and pre-fit on a smoothed surface first
    let smooth = v.min(cfg.smoothing_visibility);
    let grid = scan_grid(sample, smooth, cfg);
    let starts = select_starts(grid, cfg);
    let n_starts_used = starts.len();
    let winner = starts
        .into_iter()
        .map(|p| {
            let p = if smooth < v { refine(sample, p, smooth, cfg).params } else { p };
            refine(sample, p, v, cfg)
        })
        .reduce(|a, b| if b.value > a.value { b } else { a })
        .expect("at least one start");

    Ok(EstimationResult {
        estimate: canonicalize(winner.params),
        log_likelihood: winner.value,
        converged: winner.converged,
        n_starts_used,
        gradient_norm: winner.grad_norm,
        iterations: winner.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parametrization::MomentumDifference;
    use crate::probability::{resolved_density, Efficiency, OutcomeLabel};
    use crate::sampling::{generate_sample, SampleConfig};
    use proptest::prelude::*;

    fn nu(v: f64) -> Visibility {
        Visibility::new(v).unwrap()
    }

    fn rec(o: OutcomeLabel, xi: f64, kx: f64, ky: f64) -> DetectionRecord {
        DetectionRecord { outcome: o, kappa: MomentumDifference::new(xi, kx, ky) }
    }

    fn sample(truth: SphericalParams, v: f64, n: usize, seed: u64) -> Vec<DetectionRecord> {
        generate_sample(&SampleConfig {
            truth,
            nu: nu(v),
            gamma: Efficiency::PERFECT,
            n_detected: n,
            seed,
            stream: 0,
        })
        .unwrap()
        .records
    }

    #[test]
    fn canonicalize_examples() {
        let c = canonicalize([4.0, 3.0 * PI / 4.0, PI / 6.0]);
        assert!((c.s() - 4.0).abs() < 1e-15);
        assert!((c.theta() - PI / 4.0).abs() < 1e-15);
        assert!((c.phi() - 7.0 * PI / 6.0).abs() < 1e-14);

        let p = SphericalParams::new(4.0, PI / 4.0, PI / 3.0).unwrap();
        assert_eq!(canonicalize(p.as_array()), p);

        // s λ and −s λ describe the same pair of emitters
        let c = canonicalize([-4.0, PI / 4.0, PI / 3.0]);
        assert!((c.s() - 4.0).abs() < 1e-15);
        assert!((c.theta() - PI / 4.0).abs() < 1e-15);
        assert!((c.phi() - PI / 3.0).abs() < 1e-14);

        assert_eq!(canonicalize([0.0, 1.0, 2.0]), SphericalParams::zero());
        assert_eq!(canonicalize([2.0, PI, 1.0]).theta(), 0.0);
        let eq = canonicalize([1.0, FRAC_PI_2, 1.5 * PI]);
        assert!((eq.phi() - FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn likelihood_examples() {
        let p = SphericalParams::new(2.0, 0.7, 1.1).unwrap();
        let s = sample(p, 0.7, 50, 1);
        assert_eq!(log_likelihood(&s, &p, nu(0.0)), 0.0);
        assert_eq!(score(&s, &p, nu(0.0)), [0.0; 3]);

        // λ = (1, 0, 0): κ·λ = ξ = 0
        let pole = SphericalParams::new(3.0, 0.0, 0.0).unwrap();
        let one = [rec(OutcomeLabel::B, 0.0, 0.4, -0.2)];
        assert!((log_likelihood(&one, &pole, nu(1.0)) - 2f64.ln()).abs() < 1e-15);

        let raw = p.as_array();
        let flipped = [raw[0], PI - raw[1], raw[2] + PI];
        let a = log_likelihood_raw(&s, raw, nu(0.7), DEFAULT_PROB_FLOOR);
        let b = log_likelihood_raw(&s, flipped, nu(0.7), DEFAULT_PROB_FLOOR);
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn hessian_matches_finite_differences() {
        let truth = SphericalParams::new(4.0, PI / 4.0, PI / 3.0).unwrap();
        let s = sample(truth, 0.7, 200, 9);
        let p = [3.9, 0.8, 1.0];
        let loc = evaluate(&s, p, 0.7, DEFAULT_PROB_FLOOR);
        let h = 1e-5;
        for j in 0..3 {
            let mut up = p;
            let mut dn = p;
            up[j] += h;
            dn[j] -= h;
            let gu = score_raw(&s, up, nu(0.7), DEFAULT_PROB_FLOOR);
            let gd = score_raw(&s, dn, nu(0.7), DEFAULT_PROB_FLOOR);
            for i in 0..3 {
                let fd = (gu[i] - gd[i]) / (2.0 * h);
                assert!((fd - loc.hess[i][j]).abs() <= 1e-5 * (1.0 + fd.abs()), "H[{i}][{j}] {fd} vs {}", loc.hess[i][j]);
            }
        }
        let g = score_raw(&s, p, nu(0.7), DEFAULT_PROB_FLOOR);
        for i in 0..3 {
            assert!((g[i] - loc.grad[i]).abs() < 1e-12 * (1.0 + g[i].abs()));
        }
        assert!((loc.value - log_likelihood_raw(&s, p, nu(0.7), DEFAULT_PROB_FLOOR)).abs() < 1e-9);
    }

    #[test]
    fn grid_scan_agrees_with_direct_likelihood() {
        let truth = SphericalParams::new(3.0, PI / 5.0, PI / 4.0).unwrap();
        let s = sample(truth, 1.0, 300, 4);
        let cfg = SolverConfig::default();
        for g in scan_grid(&s, 1.0, &cfg).iter().step_by(97) {
            let direct = log_likelihood_raw(&s, g.params, nu(1.0), cfg.prob_floor);
            assert!((g.value - direct).abs() < 1e-6 * (1.0 + direct.abs()), "{:?}: {} vs {direct}", g.params, g.value);
        }
    }

    #[test]
    fn recovers_truth_with_recorded_seed() {
        let truth = SphericalParams::new(4.0, PI / 4.0, PI / 3.0).unwrap();
        let s = sample(truth, 1.0, 2000, 42);
        let r = estimate(&s, nu(1.0), &SolverConfig::default()).unwrap();
        assert!(r.converged);
        assert!(r.gradient_norm <= 1e-6);
        // 3 sqrt(CRB) with F = Q at N = 2000
        let tol = [3.0 * (1.0f64 / 1000.0).sqrt(), 3.0 * (1.0f64 / 16000.0).sqrt(), 3.0 * (1.0f64 / 8000.0).sqrt()];
        let e = r.estimate;
        assert!((e.s() - 4.0).abs() < tol[0], "{e:?}");
        assert!((e.theta() - PI / 4.0).abs() < tol[1], "{e:?}");
        assert!(crate::parametrization::wrap_angle(e.phi() - PI / 3.0).abs() < tol[2], "{e:?}");

        let again = estimate(&s, nu(1.0), &SolverConfig::default()).unwrap();
        assert_eq!(r, again);
    }

    #[test]
    fn degenerate_all_bunching_sample() {
        let s: Vec<_> = (0..100)
            .map(|i| {
                let x = (i as f64 * 0.37).sin();
                rec(OutcomeLabel::B, x, -0.5 * x, 0.25 * x)
            })
            .collect();
        let r = estimate(&s, nu(1.0), &SolverConfig::default()).unwrap();
        assert!(r.converged);
        assert_eq!(r.estimate.s(), 0.0);
        assert!(!r.estimate.theta_defined() && !r.estimate.phi_defined());
    }

    #[test]
    fn estimate_errors() {
        let s = [rec(OutcomeLabel::A, 0.1, 0.2, 0.3)];
        assert!(matches!(estimate(&s, nu(0.0), &SolverConfig::default()), Err(Error::FlatLikelihood)));
        assert!(matches!(estimate(&[], nu(1.0), &SolverConfig::default()), Err(Error::InvalidArgument(_))));
        let bad = SolverConfig { s_grid_step: 2.0, ..Default::default() };
        assert!(estimate(&s, nu(1.0), &bad).is_err());
        let bad = SolverConfig { theta_grid_count: 1, ..Default::default() };
        assert!(estimate(&s, nu(1.0), &bad).is_err());
    }

    #[test]
    fn non_convergence_is_reported() {
        let truth = SphericalParams::new(4.0, PI / 4.0, PI / 3.0).unwrap();
        let s = sample(truth, 1.0, 500, 3);
        let cfg = SolverConfig { max_iters: 1, local_tol: 1e-300, ..Default::default() };
        let r = estimate(&s, nu(1.0), &cfg).unwrap();
        assert!(!r.converged);
        assert!(r.gradient_norm > 0.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn canonicalize_idempotent_and_density_preserving(
            s in -8.0f64..8.0, theta in -7.0f64..7.0, phi in -7.0f64..7.0,
            xi in -2.0f64..2.0, kx in -2.0f64..2.0, ky in -2.0f64..2.0,
        ) {
            let c = canonicalize([s, theta, phi]);
            prop_assert_eq!(canonicalize(c.as_array()), c);
            let kap = MomentumDifference::new(xi, kx, ky);
            let raw_phase = s * kap.dot(&direction(theta, phi));
            for x in OutcomeLabel::ALL {
                let d = resolved_density(x, &kap, &c, nu(0.8), Efficiency::PERFECT);
                let raw = PI.powf(-1.5) * (-kap.norm_sq()).exp()
                    * crate::probability::quantum_beat(x, nu(0.8), raw_phase);
                prop_assert!((d - raw).abs() < 1e-12);
            }
        }
    }
}
