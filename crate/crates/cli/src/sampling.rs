//! Seed derivation and random-state sampling shared by the subcommands.

use blochscan_core::bloch::DensityOperator;
use rand::Rng;
use rand_chacha::ChaCha12Rng;

/// splitmix64: decorrelates per-work-item seeds derived from one base seed.
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic sub-seed for work item `index` under `base`.
pub fn sub_seed(base: u64, index: u64) -> u64 {
    splitmix64(base ^ splitmix64(index.wrapping_add(1)))
}

pub fn rng_for(base: u64, index: u64) -> ChaCha12Rng {
    use rand::SeedableRng;
    ChaCha12Rng::seed_from_u64(sub_seed(base, index))
}

/// Uniform direction on the unit sphere.
pub fn random_unit<R: Rng + ?Sized>(rng: &mut R) -> [f64; 3] {
    let z: f64 = 2.0 * rng.random::<f64>() - 1.0;
    let phi = 2.0 * std::f64::consts::PI * rng.random::<f64>();
    let s = (1.0 - z * z).sqrt();
    [s * phi.cos(), s * phi.sin(), z]
}

/// Uniform point in the Bloch ball: uniform direction, radius from the
/// cubic CDF. Covers near-degenerate states by construction.
pub fn random_bloch_ball<R: Rng + ?Sized>(rng: &mut R) -> DensityOperator {
    let dir = random_unit(rng);
    let r: f64 = rng.random::<f64>().cbrt();
    DensityOperator::from_bloch([dir[0] * r, dir[1] * r, dir[2] * r])
        .expect("ball point is a state")
}
