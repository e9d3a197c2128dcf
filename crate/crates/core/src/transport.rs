//! Rough phase of the split PDE solver: the first-order equation
//!
//!   du = sum_c ( speed_c(x) u_x + gain_c(x) u + source_c(x) ) dz^c
//!
//! solved by backward characteristics. For each grid node x at the end of
//! the interval, the foot of the characteristic is found by integrating the
//! state equation dX = -speed(X) dz against the time-reversed driver, and
//! the gains and sources are accumulated along the way, so that
//!
//!   u_new(x) = E * u_old(X_foot) + G.
//!
//! All per-step formulas carry the driver's second level, matching the
//! accuracy of the state-equation stepper.

use crate::error::{Error, Result};
use crate::grid::{Boundary, Grid};
use crate::lift::RoughPath;

/// Closed-form scalar coefficient with a closed-form derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Coeff {
    Constant(f64),
    Affine { slope: f64, offset: f64 },
    Sinusoid { amp: f64, freq: f64, phase: f64 },
}

impl Coeff {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Coeff::Constant(c) => c,
            Coeff::Affine { slope, offset } => offset + slope * x,
            Coeff::Sinusoid { amp, freq, phase } => amp * (freq * x + phase).sin(),
        }
    }

    pub fn deriv(&self, x: f64) -> f64 {
        match *self {
            Coeff::Constant(_) => 0.0,
            Coeff::Affine { slope, .. } => slope,
            Coeff::Sinusoid { amp, freq, phase } => amp * freq * (freq * x + phase).cos(),
        }
    }

    pub const ZERO: Coeff = Coeff::Constant(0.0);
}

/// Per-channel coefficients; all three vectors are indexed by driver channel.
#[derive(Debug, Clone)]
pub struct RoughTransport {
    pub speeds: Vec<Coeff>,
    pub gains: Vec<Coeff>,
    pub sources: Vec<Coeff>,
}

impl RoughTransport {
    pub fn new(speeds: Vec<Coeff>, gains: Vec<Coeff>, sources: Vec<Coeff>) -> Result<Self> {
        if speeds.is_empty() || speeds.len() != gains.len() || speeds.len() != sources.len() {
            return Err(Error::DimensionMismatch {
                expected: speeds.len(),
                got: gains.len().max(sources.len()),
            });
        }
        Ok(Self {
            speeds,
            gains,
            sources,
        })
    }

    /// Pure transport at the given speeds: no gain, no source.
    pub fn advection(speeds: Vec<Coeff>) -> Result<Self> {
        let zeros = vec![Coeff::ZERO; speeds.len()];
        Self::new(speeds, zeros.clone(), zeros)
    }

    pub fn channels(&self) -> usize {
        self.speeds.len()
    }
}

#[derive(Debug, Clone)]
pub struct TransportOutcome {
    pub values: Vec<f64>,
    /// Number of characteristic feet that left a clamped grid and were
    /// pinned to the boundary; always zero on periodic grids.
    pub clamped: usize,
}

/// Advances u across [t0, t1] of the driver. The characteristic for each
/// node is integrated over the driver's own mesh restricted to the
/// interval, each cell split `refine` times.
pub fn rough_transport_step(
    tr: &RoughTransport,
    grid: &Grid,
    u: &[f64],
    z: &RoughPath,
    t0: f64,
    t1: f64,
    refine: usize,
) -> Result<TransportOutcome> {
    if u.len() != grid.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            got: u.len(),
        });
    }
    if tr.channels() != z.dim() {
        return Err(Error::DimensionMismatch {
            expected: tr.channels(),
            got: z.dim(),
        });
    }
    if refine == 0 {
        return Err(Error::InvalidParameter {
            name: "refine",
            reason: "need at least one step per cell".into(),
        });
    }
    let horizon = z.horizon();
    let tol = 1e-12 * horizon.max(1.0);
    if t0 < -tol || t1 > horizon + tol || t0 > t1 + tol {
        return Err(Error::OutOfSpan {
            s: t0,
            t: t1,
            lo: 0.0,
            hi: horizon,
        });
    }
    let t0 = t0.clamp(0.0, horizon);
    let t1 = t1.clamp(0.0, horizon);

    // Step mesh: driver times inside the interval, ends pinned.
    let mut mesh = vec![t0];
    for &t in z.times() {
        if t > t0 + tol && t < t1 - tol {
            mesh.push(t);
        }
    }
    mesh.push(t1);
    let mut steps = Vec::new();
    for w in mesh.windows(2) {
        for k in 0..refine {
            let a = w[0] + (w[1] - w[0]) * k as f64 / refine as f64;
            let b = if k + 1 == refine {
                w[1]
            } else {
                w[0] + (w[1] - w[0]) * (k + 1) as f64 / refine as f64
            };
            steps.push((a, b));
        }
    }

    let d = tr.channels();
    let mut values = vec![0.0; u.len()];
    let mut clamped = 0usize;

    // Reversed segments, shared by every node's characteristic.
    let mut reversed = Vec::with_capacity(steps.len());
    for &(a, b) in steps.iter().rev() {
        if b - a <= 0.0 {
            continue;
        }
        reversed.push(z.segment(a, b)?.inverse());
    }

    for (node, value) in values.iter_mut().enumerate() {
        let mut x = grid.point(node);
        let mut e = 1.0f64;
        let mut g_acc = 0.0f64;
        for seg in &reversed {
            // Coefficients at the current (later-in-real-time) foot.
            let speeds: Vec<f64> = tr.speeds.iter().map(|c| c.eval(x)).collect();
            let speed_derivs: Vec<f64> = tr.speeds.iter().map(|c| c.deriv(x)).collect();

            // Forward-oriented increments are the negated reversed ones, and
            // the reversed second level plays the role of the forward
            // "end-anchored" iterated integral, so expansions at x need no
            // further sign juggling.
            let mut di = 0.0;
            let mut dg = 0.0;
            for c in 0..d {
                let inc_fwd = -seg.inc[c];
                di += tr.gains[c].eval(x) * inc_fwd;
                dg += tr.sources[c].eval(x) * inc_fwd;
            }
            for j in 0..d {
                for c in 0..d {
                    let m = seg.second[j * d + c];
                    di += tr.gains[c].deriv(x) * speeds[j] * m;
                    dg += (tr.sources[c].deriv(x) * speeds[j]
                        + tr.gains[j].eval(x) * tr.sources[c].eval(x))
                        * m;
                }
            }
            g_acc += e * dg;
            e *= di.exp();

            // Characteristic update dX = -speed(X) dz, one second-order step
            // against the reversed segment.
            let mut dx = 0.0;
            for j in 0..d {
                dx += -speeds[j] * seg.inc[j];
            }
            for a in 0..d {
                for b in 0..d {
                    // D(-speed_b)[-speed_a] = speed_b' * speed_a.
                    dx += speed_derivs[b] * speeds[a] * seg.second[a * d + b];
                }
            }
            x += dx;
            if !x.is_finite() || x.abs() > 1e12 {
                return Err(Error::Divergence {
                    t: grid.point(node),
                    guard: 1e12,
                });
            }
        }
        let (foot_value, was_clamped) = grid.interpolate(u, x);
        if was_clamped {
            clamped += 1;
        }
        *value = e * foot_value + g_acc;
        if !value.is_finite() {
            return Err(Error::NonFinite {
                context: "transport state",
            });
        }
    }
    if grid.boundary() == Boundary::Periodic {
        values[u.len() - 1] = values[0];
    }
    Ok(TransportOutcome { values, clamped })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::brownian_path;
    use crate::path::SampledPath;
    use std::f64::consts::PI;

    fn smooth_lift(steps: usize) -> RoughPath {
        let times: Vec<f64> = (0..=steps).map(|i| i as f64 / steps as f64).collect();
        let values: Vec<f64> = times.iter().map(|&t| (1.3 * t).sin()).collect();
        RoughPath::from_path_pwl(&SampledPath::scalar(times, values).unwrap())
    }

    #[test]
    fn unit_speed_shifts_by_the_driver_increment() {
        let grid = Grid::new(0.0, 1.0, 257, Boundary::Periodic).unwrap();
        let tr = RoughTransport::advection(vec![Coeff::Constant(1.0)]).unwrap();
        let z = RoughPath::from_path_pwl(&brownian_path(31, 1, 1.0, 6).unwrap());
        let u0 = grid.sample(|x| (2.0 * PI * x).sin());
        let out = rough_transport_step(&tr, &grid, &u0, &z, 0.0, 1.0, 1).unwrap();
        let dz = z.segment(0.0, 1.0).unwrap().inc[0];
        let mut worst = 0.0f64;
        for i in 0..grid.len() {
            let (want, _) = grid.interpolate(&u0, grid.point(i) + dz);
            worst = worst.max((out.values[i] - want).abs());
        }
        assert!(worst < 1e-9, "sup gap {worst}");
        assert_eq!(out.clamped, 0);
    }

    #[test]
    fn constant_gain_multiplies_by_the_exponential() {
        let grid = Grid::new(0.0, 1.0, 65, Boundary::Periodic).unwrap();
        let tr = RoughTransport::new(
            vec![Coeff::ZERO],
            vec![Coeff::Constant(0.8)],
            vec![Coeff::ZERO],
        )
        .unwrap();
        let z = smooth_lift(64);
        let u0 = grid.sample(|x| 1.0 + 0.5 * (2.0 * PI * x).cos());
        let out = rough_transport_step(&tr, &grid, &u0, &z, 0.25, 0.75, 1).unwrap();
        let dz = z.segment(0.25, 0.75).unwrap().inc[0];
        let factor = (0.8 * dz).exp();
        for i in 0..grid.len() {
            assert!((out.values[i] - factor * u0[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn constant_source_adds_the_increment() {
        let grid = Grid::new(0.0, 1.0, 65, Boundary::Periodic).unwrap();
        let tr = RoughTransport::new(
            vec![Coeff::ZERO],
            vec![Coeff::ZERO],
            vec![Coeff::Constant(2.5)],
        )
        .unwrap();
        let z = smooth_lift(64);
        let u0 = grid.sample(|x| (2.0 * PI * x).sin());
        let out = rough_transport_step(&tr, &grid, &u0, &z, 0.0, 1.0, 1).unwrap();
        let dz = z.segment(0.0, 1.0).unwrap().inc[0];
        for i in 0..grid.len() {
            assert!((out.values[i] - (u0[i] + 2.5 * dz)).abs() < 1e-9);
        }
    }

    #[test]
    fn linear_speed_contracts_space_exponentially() {
        // speed(x) = x gives u(x, t) = u0(x e^{dz}).
        let grid = Grid::new(-2.0, 2.0, 513, Boundary::Clamped).unwrap();
        let tr = RoughTransport::advection(vec![Coeff::Affine {
            slope: 1.0,
            offset: 0.0,
        }])
        .unwrap();
        let z = smooth_lift(256);
        let u0 = grid.sample(|x| (x * 1.1).tanh());
        let out = rough_transport_step(&tr, &grid, &u0, &z, 0.0, 1.0, 2).unwrap();
        let dz = z.segment(0.0, 1.0).unwrap().inc[0];
        let mut worst = 0.0f64;
        for i in 0..grid.len() {
            let foot = grid.point(i) * dz.exp();
            if foot.abs() > 1.9 {
                continue;
            }
            let want = (foot * 1.1).tanh();
            worst = worst.max((out.values[i] - want).abs());
        }
        assert!(worst < 2e-4, "sup gap {worst}");
    }

    #[test]
    fn self_refinement_converges_for_a_full_system() {
        let grid = Grid::new(0.0, 1.0, 129, Boundary::Periodic).unwrap();
        let tr = RoughTransport::new(
            vec![Coeff::Sinusoid {
                amp: 0.6,
                freq: 2.0 * PI,
                phase: 0.3,
            }],
            vec![Coeff::Affine {
                slope: 0.4,
                offset: -0.1,
            }],
            vec![Coeff::Constant(0.2)],
        )
        .unwrap();
        let z = smooth_lift(32);
        let u0 = grid.sample(|x| (2.0 * PI * x).sin());
        let sup_gap = |a: &[f64], b: &[f64]| {
            a.iter()
                .zip(b.iter())
                .map(|(x, y)| (x - y).abs())
                .fold(0.0f64, f64::max)
        };
        let out1 = rough_transport_step(&tr, &grid, &u0, &z, 0.0, 1.0, 1).unwrap();
        let out4 = rough_transport_step(&tr, &grid, &u0, &z, 0.0, 1.0, 4).unwrap();
        let out16 = rough_transport_step(&tr, &grid, &u0, &z, 0.0, 1.0, 16).unwrap();
        let c1 = sup_gap(&out1.values, &out16.values);
        let c4 = sup_gap(&out4.values, &out16.values);
        assert!(c4 < c1 / 2.0, "refinement stalled: {c1} -> {c4}");
        assert!(c1 < 0.05, "coarse gap {c1}");
    }

    #[test]
    fn clamped_feet_are_counted() {
        let grid = Grid::new(0.0, 1.0, 33, Boundary::Clamped).unwrap();
        let tr = RoughTransport::advection(vec![Coeff::Constant(1.0)]).unwrap();
        // Driver with a large negative increment: feet x + dz fall below 0.
        let times = vec![0.0, 1.0];
        let z = RoughPath::from_path_pwl(&SampledPath::scalar(times, vec![0.0, 0.6]).unwrap());
        let u0 = grid.sample(|x| x);
        let out = rough_transport_step(&tr, &grid, &u0, &z, 0.0, 1.0, 1).unwrap();
        assert!(out.clamped > 0, "expected clamped feet");
        // Feet land at x + 0.6; nodes past 0.4 read the pinned right edge.
        let (want, _) = grid.interpolate(&u0, 1.2);
        assert_eq!(want, 1.0);
        assert!((out.values[32] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn outcome_is_deterministic() {
        let grid = Grid::new(0.0, 1.0, 65, Boundary::Periodic).unwrap();
        let tr = RoughTransport::new(
            vec![Coeff::Sinusoid {
                amp: 0.5,
                freq: 2.0 * PI,
                phase: 0.0,
            }],
            vec![Coeff::Constant(0.3)],
            vec![Coeff::ZERO],
        )
        .unwrap();
        let z = RoughPath::from_path_pwl(&brownian_path(5, 1, 1.0, 5).unwrap());
        let u0 = grid.sample(|x| (2.0 * PI * x).cos());
        let a = rough_transport_step(&tr, &grid, &u0, &z, 0.0, 1.0, 2).unwrap();
        let b = rough_transport_step(&tr, &grid, &u0, &z, 0.0, 1.0, 2).unwrap();
        assert_eq!(a.values, b.values);
    }
}
