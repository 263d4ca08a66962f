//! Synthetic detection samples.
//!
//! Every draw comes from a [`SampleRng`] (ChaCha20) seeded with
//! `seed_from_u64(seed)` and positioned on stream `stream`. Per emitted pair
//! the draw order is fixed: one uniform for the loss channel, then, for a
//! detected pair, three standard normals for `κ` and one uniform for the
//! outcome. Any implementation that reproduces this order on the same
//! generator reproduces the samples bit for bit.

use std::f64::consts::FRAC_1_SQRT_2;
use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::parametrization::{MomentumDifference, SphericalParams};
use crate::probability::{
    loss_split, quantum_beat, DetectionRecord, Efficiency, OutcomeLabel, Visibility,
};

pub type SampleRng = ChaCha20Rng;

/// Identifier recorded in every output file.
pub const RNG_ALGORITHM: &str = "rand_chacha::ChaCha20Rng/seed_from_u64+set_stream;rand_distr::StandardNormal(ziggurat)";

/// Generator for `(seed, stream)`.
pub fn rng_for(seed: u64, stream: u64) -> SampleRng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleConfig {
    pub truth: SphericalParams,
    pub nu: Visibility,
    pub gamma: Efficiency,
    /// Number of detected two-photon events to collect.
    pub n_detected: usize,
    pub seed: u64,
    /// ChaCha stream; trials of one campaign share `seed` and differ here.
    #[serde(default)]
    pub stream: u64,
}

impl SampleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_detected == 0 {
            return Err(Error::invalid("n_detected must be at least 1"));
        }
        Ok(())
    }
}

/// Outcome of one emitted photon pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DetectionEvent {
    Lost0,
    Lost1,
    Detected(DetectionRecord),
}

/// Each component normal with variance ½, i.e. joint density `e^{-|κ|²} / π^{3/2}`.
pub fn draw_momentum_difference<R: Rng + ?Sized>(rng: &mut R) -> MomentumDifference {
    let xi: f64 = rng.sample(StandardNormal);
    let kx: f64 = rng.sample(StandardNormal);
    let ky: f64 = rng.sample(StandardNormal);
    MomentumDifference::new(xi * FRAC_1_SQRT_2, kx * FRAC_1_SQRT_2, ky * FRAC_1_SQRT_2)
}

/// Bunching with probability `ζ_B(s κ·λ)`.
pub fn draw_outcome<R: Rng + ?Sized>(
    rng: &mut R,
    kappa: &MomentumDifference,
    sph: &SphericalParams,
    nu: Visibility,
) -> OutcomeLabel {
    let p_b = quantum_beat(OutcomeLabel::B, nu, sph.s() * kappa.dot(&sph.direction()));
    let u: f64 = rng.random();
    if u < p_b {
        OutcomeLabel::B
    } else {
        OutcomeLabel::A
    }
}

pub fn draw_detection_event<R: Rng + ?Sized>(rng: &mut R, cfg: &SampleConfig) -> DetectionEvent {
    let loss = loss_split(cfg.gamma);
    let u: f64 = rng.random();
    if u < loss.p0 {
        return DetectionEvent::Lost0;
    }
    if u < loss.p0 + loss.p1 {
        return DetectionEvent::Lost1;
    }
    let kappa = draw_momentum_difference(rng);
    let outcome = draw_outcome(rng, &kappa, &cfg.truth, cfg.nu);
    DetectionEvent::Detected(DetectionRecord { outcome, kappa })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub records: Vec<DetectionRecord>,
    /// Emitted pairs consumed to collect the records, including lost pairs.
    pub emitted_pairs: u64,
}

pub fn generate_sample(cfg: &SampleConfig) -> Result<Sample> {
    cfg.validate()?;
    if cfg.gamma.get() == 0.0 {
        return Err(Error::UnreachableSample);
    }
    let mut rng = rng_for(cfg.seed, cfg.stream);
    let mut records = Vec::with_capacity(cfg.n_detected);
    let mut emitted_pairs = 0u64;
    while records.len() < cfg.n_detected {
        emitted_pairs += 1;
        if let DetectionEvent::Detected(r) = draw_detection_event(&mut rng, cfg) {
            records.push(r);
        }
    }
    Ok(Sample {
        records,
        emitted_pairs,
    })
}

/// First line of a JSON Lines sample file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleHeader {
    pub config: SampleConfig,
    pub rng_algorithm: String,
    pub emitted_pairs: u64,
}

pub fn write_jsonl<W: Write>(mut w: W, cfg: &SampleConfig, sample: &Sample) -> std::io::Result<()> {
    let header = SampleHeader {
        config: *cfg,
        rng_algorithm: RNG_ALGORITHM.to_string(),
        emitted_pairs: sample.emitted_pairs,
    };
    serde_json::to_writer(&mut w, &header)?;
    w.write_all(b"\n")?;
    for r in &sample.records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

/// Reads a sample written by [`write_jsonl`]. The header line is optional so
/// that externally produced record files can be estimated too.
pub fn read_jsonl<R: BufRead>(r: R) -> Result<(Option<SampleHeader>, Vec<DetectionRecord>)> {
    let mut header = None;
    let mut records = Vec::new();
    for (lineno, line) in r.lines().enumerate() {
        let line = line.map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if lineno == 0 && trimmed.contains("\"config\"") {
            header = Some(
                serde_json::from_str(trimmed)
                    .map_err(|e| Error::Parse(format!("header: {e}")))?,
            );
            continue;
        }
        let rec: DetectionRecord = serde_json::from_str(trimmed)
            .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
        if !rec.kappa.is_finite() {
            return Err(Error::Parse(format!("line {}: non-finite momentum", lineno + 1)));
        }
        records.push(rec);
    }
    Ok((header, records))
}
