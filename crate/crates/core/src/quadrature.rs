//! Gauss-Legendre rules and an adaptive composite integrator.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// `n`-point Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes are roots of `P_n`, found by Newton iteration from the
    /// Tricomi initial guess.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d.is_finite() {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }

    /// Nodes and weights of the rule repeated on `panels` equal subintervals of `[a, b]`.
    pub fn composite(&self, a: f64, b: f64, panels: usize) -> (Vec<f64>, Vec<f64>) {
        let h = (b - a) / panels as f64;
        let mut xs = Vec::with_capacity(panels * self.len());
        let mut ws = Vec::with_capacity(panels * self.len());
        for p in 0..panels {
            let lo = a + h * p as f64;
            for (&x, &w) in self.nodes.iter().zip(&self.weights) {
                xs.push(lo + 0.5 * h * (x + 1.0));
                ws.push(0.5 * h * w);
            }
        }
        (xs, ws)
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Adaptive integration of `D` integrands sharing one abscissa.
///
/// `[a, b]` is first cut into `initial_panels` panels; each panel is accepted
/// when the `n`-point and `2n`-point rules agree to `abs_tol[j] · width / (b - a)`
/// for every component `j`, otherwise it is bisected.
#[derive(Debug, Clone)]
pub struct AdaptiveLegendre {
    coarse: GaussLegendre,
    fine: GaussLegendre,
    pub max_depth: u32,
}

impl AdaptiveLegendre {
    pub fn new(nodes: usize) -> Self {
        Self {
            coarse: GaussLegendre::new(nodes),
            fine: GaussLegendre::new(2 * nodes),
            max_depth: 40,
        }
    }

    pub fn integrate<const D: usize, F>(
        &self,
        a: f64,
        b: f64,
        initial_panels: usize,
        abs_tol: [f64; D],
        mut f: F,
    ) -> Result<[f64; D]>
    where
        F: FnMut(f64) -> [f64; D],
    {
        let total_width = b - a;
        let mut acc = [0.0; D];
        let h = total_width / initial_panels.max(1) as f64;
        let mut stack: Vec<(f64, f64, u32)> = (0..initial_panels.max(1))
            .rev()
            .map(|p| (a + h * p as f64, a + h * (p + 1) as f64, 0))
            .collect();
        while let Some((lo, hi, depth)) = stack.pop() {
            let c = apply(&self.coarse, lo, hi, &mut f);
            let fi = apply(&self.fine, lo, hi, &mut f);
            let frac = (hi - lo) / total_width;
            let ok = (0..D).all(|j| (c[j] - fi[j]).abs() <= abs_tol[j] * frac);
            if ok {
                for j in 0..D {
                    acc[j] += fi[j];
                }
            } else if depth >= self.max_depth {
                return Err(Error::NumericFailure(format!(
                    "adaptive quadrature did not converge on [{lo}, {hi}]"
                )));
            } else {
                let mid = 0.5 * (lo + hi);
                stack.push((mid, hi, depth + 1));
                stack.push((lo, mid, depth + 1));
            }
        }
        Ok(acc)
    }
}

fn apply<const D: usize, F: FnMut(f64) -> [f64; D]>(
    rule: &GaussLegendre,
    a: f64,
    b: f64,
    f: &mut F,
) -> [f64; D] {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut out = [0.0; D];
    for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
        let v = f(mid + half * x);
        for j in 0..D {
            out[j] += w * v[j];
        }
    }
    for o in &mut out {
        *o *= half;
    }
    out
}
