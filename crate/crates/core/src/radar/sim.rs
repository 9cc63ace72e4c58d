use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::scenario::{ScenarioConfig, TruthMode};
use crate::error::{Error, Result};

/// Constant-velocity, constant-altitude trajectory sampled at every
/// measurement step `1..=N`. The initial state is kept separately.
#[derive(Debug, Clone, PartialEq)]
pub struct RadarTruth {
    pub initial: [f64; 3],
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    pub h: Vec<f64>,
}

impl RadarTruth {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RangeMeasurements {
    pub range: Vec<f64>,
    pub seed: u64,
}

/// Slant range `√(x² + h²)`.
pub fn slant_range(x: f64, h: f64) -> f64 {
    x.hypot(h)
}

fn normal(variance: f64) -> Normal<f64> {
    Normal::new(0.0, variance.sqrt()).expect("variance validated non-negative")
}

/// Truth and measurements draw from separate ChaCha streams of the same seed.
fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn simulate_truth(cfg: &ScenarioConfig, seed: u64) -> RadarTruth {
    let mut rng = stream(seed, 0);
    let p = &cfg.priors;
    let initial = match cfg.truth_mode {
        TruthMode::Exact => [p.x, p.xdot, p.h],
        TruthMode::Sampled => [
            p.x + normal(p.p_x).sample(&mut rng),
            p.xdot + normal(p.p_xdot).sample(&mut rng),
            p.h + normal(p.p_h).sample(&mut rng),
        ],
    };
    let noise_x = normal(cfg.process_noise.x);
    let noise_v = normal(cfg.process_noise.xdot);

    let n = cfg.steps;
    let mut truth = RadarTruth {
        initial,
        t: Vec::with_capacity(n),
        x: Vec::with_capacity(n),
        v: Vec::with_capacity(n),
        h: Vec::with_capacity(n),
    };
    let [mut x, mut v, h] = initial;
    for k in 1..=n {
        x += cfg.dt * v + noise_x.sample(&mut rng);
        v += noise_v.sample(&mut rng);
        truth.t.push(k as f64 * cfg.dt);
        truth.x.push(x);
        truth.v.push(v);
        truth.h.push(h);
    }
    truth
}

/// `ρ̃_k = √(x_k² + h_k²) + r_k`, `r_k ~ N(0, variance)`.
pub fn measure_range(truth: &RadarTruth, variance: f64, seed: u64) -> Result<RangeMeasurements> {
    if !(variance >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "range variance must be non-negative, got {variance}"
        )));
    }
    let mut rng = stream(seed, 1);
    let noise = normal(variance);
    let range = truth
        .x
        .iter()
        .zip(&truth.h)
        .map(|(&x, &h)| slant_range(x, h) + noise.sample(&mut rng))
        .collect();
    Ok(RangeMeasurements { range, seed })
}
