use std::f64::consts::PI;

use hom3d::estimation::score;
use hom3d::parametrization::wrap_angle;
use hom3d::{estimate, generate_sample, Efficiency, SampleConfig, SolverConfig, SphericalParams, Visibility};

fn draw(truth: SphericalParams, nu: Visibility, n: usize, stream: u64) -> Vec<hom3d::DetectionRecord> {
    generate_sample(&SampleConfig { truth, nu, gamma: Efficiency::PERFECT, n_detected: n, seed: 77, stream })
        .unwrap()
        .records
}

#[test]
fn score_has_zero_mean_at_truth() {
    let truth = SphericalParams::new(4.0, PI / 4.0, PI / 3.0).unwrap();
    let nu = Visibility::new(0.7).unwrap();
    let m = 1000;
    let scores: Vec<[f64; 3]> = (0..m).map(|i| score(&draw(truth, nu, 1000, i), &truth, nu)).collect();
    for j in 0..3 {
        let mean = scores.iter().map(|g| g[j]).sum::<f64>() / m as f64;
        let var = scores.iter().map(|g| (g[j] - mean).powi(2)).sum::<f64>() / (m - 1) as f64;
        let se = (var / m as f64).sqrt();
        assert!(mean.abs() <= 3.0 * se, "component {j}: mean {mean} se {se}");
    }
}

#[test]
fn error_shrinks_with_sample_size() {
    let truth = SphericalParams::new(4.0, PI / 4.0, PI / 3.0).unwrap();
    let nu = Visibility::new(1.0).unwrap();
    let rmse = |n: usize| -> [f64; 3] {
        let trials = 200;
        let mut acc = [0.0; 3];
        for t in 0..trials {
            let r = estimate(&draw(truth, nu, n, t), nu, &SolverConfig::default()).unwrap();
            let e = r.estimate;
            acc[0] += (e.s() - truth.s()).powi(2);
            acc[1] += (e.theta() - truth.theta()).powi(2);
            acc[2] += wrap_angle(e.phi() - truth.phi()).powi(2);
        }
        acc.map(|a| (a / trials as f64).sqrt())
    };
    let a = rmse(250);
    let b = rmse(1000);
    let c = rmse(4000);
    for j in 0..3 {
        assert!(a[j] > b[j] && b[j] > c[j], "{a:?} {b:?} {c:?}");
        // roughly 1/sqrt(N): a factor 2 per fourfold increase
        assert!((b[j] / c[j]) > 1.5 && (b[j] / c[j]) < 2.7, "{b:?} {c:?}");
    }
}
