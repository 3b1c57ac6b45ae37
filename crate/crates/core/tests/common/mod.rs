#![allow(dead_code)]

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use threewave::{Complex64, SubspaceSpec, WaveFunction};

const DEFAULT_SEED: u64 = 0x3a7e_0001;

/// Test RNG seeded from `THREEWAVE_SEED` when set.
pub fn rng() -> StdRng {
    let seed = std::env::var("THREEWAVE_SEED")
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(DEFAULT_SEED);
    StdRng::seed_from_u64(seed)
}

pub fn spec(s2: i64, s3: i64) -> SubspaceSpec {
    SubspaceSpec::new(s2, s3).unwrap()
}

pub fn random_spec(rng: &mut StdRng, max_s2: i64, max_gap: i64) -> SubspaceSpec {
    let s2 = rng.gen_range(0..=max_s2);
    let s3 = s2 + rng.gen_range(0..=max_gap);
    spec(s2, s3)
}

pub fn random_state(rng: &mut StdRng, spec: SubspaceSpec) -> WaveFunction {
    let amps = (0..spec.dim())
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    WaveFunction::normalized(spec, amps).unwrap()
}
