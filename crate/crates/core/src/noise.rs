//! Reproducible Gaussian drivers.
//!
//! Sampling is counter-based: draw k of a seeded stream is a pure function
//! of (seed, k), so refining a path reuses the coarse draws and produces
//! bit-identical coarse values at every dyadic level, and the same seed gives
//! the same path on any platform. The generator is a splitmix64 mix of the
//! counter feeding a Box-Muller transform; its name is recorded in run
//! manifests as "splitmix64-boxmuller".

use crate::error::{Error, Result};
use crate::path::SampledPath;

pub const PRNG_ALGORITHM: &str = "splitmix64-boxmuller";

/// Largest dyadic resolution for the exact fractional sampler: the Cholesky
/// factor is dense in the step count, so steps are capped at 2^12.
pub const FBM_MAX_STEPS: usize = 4096;

fn splitmix64(state: u64) -> u64 {
    let mut z = state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn raw_u64(seed: u64, counter: u64) -> u64 {
    // Counter+1 keeps (seed, 0) from colliding with (seed', 0) after the
    // golden-ratio stride for adjacent seeds; the mix does the rest.
    splitmix64(seed.wrapping_add((counter.wrapping_add(1)).wrapping_mul(0x9E37_79B9_7F4A_7C15)))
}

/// k-th standard normal of the stream. Uses two counters (2k, 2k+1) for the
/// Box-Muller pair and keeps only the cosine branch, so every draw is
/// independent of every other.
pub fn standard_normal(seed: u64, k: u64) -> f64 {
    let x = raw_u64(seed, 2 * k);
    let y = raw_u64(seed, 2 * k + 1);
    // u1 in (0, 1] so the log is finite; u2 in [0, 1).
    let u1 = ((x >> 11) + 1) as f64 * (1.0 / 9007199254740992.0);
    let u2 = (y >> 11) as f64 * (1.0 / 9007199254740992.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn validate_grid(horizon: f64, dim: usize, level: u32) -> Result<usize> {
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::InvalidParameter {
            name: "horizon",
            reason: format!("must be positive, got {horizon}"),
        });
    }
    if dim == 0 {
        return Err(Error::InvalidParameter {
            name: "dim",
            reason: "need at least one component".into(),
        });
    }
    if level > 20 {
        return Err(Error::InvalidParameter {
            name: "level",
            reason: format!("2^{level} steps is past the cap of 2^20"),
        });
    }
    Ok(1usize << level)
}

/// Brownian sample on the dyadic grid with 2^level steps, by midpoint
/// bisection: the endpoint is drawn first, then each level halves the cells,
/// conditioning the midpoint on the two ends. Counters are heap indices
/// (endpoint 0; midpoint k of level l is 2^(l-1)+k), so a finer level extends
/// the coarser path rather than resampling it.
pub fn brownian_path(seed: u64, dim: usize, horizon: f64, level: u32) -> Result<SampledPath> {
    let steps = validate_grid(horizon, dim, level)?;
    let n = steps + 1;
    let mut values = vec![0.0; n * dim];
    let scale = horizon.sqrt();
    for c in 0..dim {
        values[(n - 1) * dim + c] = scale * standard_normal(seed, c as u64);
    }
    let mut node: u64 = 1;
    for l in 1..=level {
        let cells = 1usize << (l - 1);
        let stride = steps >> (l - 1);
        // Each parent cell [k*stride, (k+1)*stride] gains its midpoint.
        let half_len = horizon / (1u64 << l) as f64;
        let noise_scale = (half_len / 2.0).sqrt();
        for k in 0..cells {
            let left = k * stride;
            let right = (k + 1) * stride;
            let mid = left + stride / 2;
            for c in 0..dim {
                let avg = 0.5 * (values[left * dim + c] + values[right * dim + c]);
                let z = standard_normal(seed, node * dim as u64 + c as u64);
                values[mid * dim + c] = avg + noise_scale * z;
            }
            node += 1;
        }
    }
    let times: Vec<f64> = (0..n).map(|i| horizon * i as f64 / steps as f64).collect();
    SampledPath::new(times, values, dim)
}

/// Exact fractional Brownian sample (Hurst index in (1/3, 1]) on the dyadic
/// grid with 2^level steps, componentwise independent. Increments are drawn
/// jointly from their exact covariance via a Cholesky factor; H = 1 is the
/// degenerate straight line t * Z. Unlike the Brownian sampler this one is
/// exact-in-law at each level but not nested across levels.
pub fn fractional_brownian_path(
    seed: u64,
    dim: usize,
    horizon: f64,
    level: u32,
    hurst: f64,
) -> Result<SampledPath> {
    let steps = validate_grid(horizon, dim, level)?;
    if !(hurst > 1.0 / 3.0 && hurst <= 1.0) {
        return Err(Error::InvalidParameter {
            name: "hurst",
            reason: format!("need 1/3 < H <= 1 for a level-2 lift, got {hurst}"),
        });
    }
    if steps > FBM_MAX_STEPS {
        return Err(Error::ResolutionExceeded {
            required: steps as u64,
            cap: FBM_MAX_STEPS as u64,
        });
    }
    let n = steps + 1;
    let times: Vec<f64> = (0..n).map(|i| horizon * i as f64 / steps as f64).collect();
    let mut values = vec![0.0; n * dim];

    if hurst == 1.0 {
        for c in 0..dim {
            let z = standard_normal(seed, c as u64);
            for i in 0..n {
                values[i * dim + c] = times[i] * z;
            }
        }
        return SampledPath::new(times, values, dim);
    }

    // Covariance of the step increments: E[(B_t - B_s)(B_v - B_u)] =
    // (|t-u|^2H + |s-v|^2H - |t-v|^2H - |s-u|^2H) / 2.
    let two_h = 2.0 * hurst;
    let pow = |x: f64| x.abs().powf(two_h);
    let mut cov = nalgebra::DMatrix::<f64>::zeros(steps, steps);
    for i in 0..steps {
        for j in 0..steps {
            let (s, t) = (times[i], times[i + 1]);
            let (u, v) = (times[j], times[j + 1]);
            cov[(i, j)] = 0.5 * (pow(t - u) + pow(s - v) - pow(t - v) - pow(s - u));
        }
    }
    let chol = cov.cholesky().ok_or(Error::InvalidParameter {
        name: "hurst",
        reason: format!("increment covariance not positive definite at H = {hurst}"),
    })?;
    let l = chol.l();
    for c in 0..dim {
        let z: Vec<f64> = (0..steps)
            .map(|i| standard_normal(seed, (c * steps + i) as u64))
            .collect();
        for i in 0..steps {
            let mut inc = 0.0;
            for j in 0..=i {
                inc += l[(i, j)] * z[j];
            }
            values[(i + 1) * dim + c] = values[i * dim + c] + inc;
        }
    }
    SampledPath::new(times, values, dim)
}
