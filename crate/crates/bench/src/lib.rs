//! Fixed inputs for the benchmark targets. Everything is seeded, so the
//! numbers are comparable between runs of the same build.

use roughsplit::apps::{self, PdePreset, StatePreset};
use roughsplit::{brownian_path, RoughPath, SampledPath};

/// Seed shared by every fixture; no bench may depend on its value.
pub const SEED: u64 = 0x0ddba11;

/// A Brownian walk sampled on the dyadic grid of the unit interval.
pub fn walk(channels: usize, level: u32) -> SampledPath {
    brownian_path(SEED, channels, 1.0, level).expect("fixture walk")
}

/// A Brownian walk enriched with its second order increments.
pub fn driver(channels: usize, horizon: f64, level: u32) -> RoughPath {
    apps::brownian_driver(SEED, channels, horizon, level).expect("fixture driver")
}

/// An identity clock matching a driver cell for cell.
pub fn clock_for(z: &RoughPath) -> SampledPath {
    apps::identity_clock(z.horizon(), z.cells().len())
}

/// The rotation equation: the smallest preset whose noise response is
/// genuinely second order, with a closed form to sanity-check against.
pub fn rotation() -> StatePreset {
    apps::rde_exp_linear()
}

/// The filtering equation: heat plus rough advection on 257 periodic points.
pub fn filter() -> PdePreset {
    apps::zakai_1d()
}
