//! Monotone reparametrizations of [0, T] ("clocks"): the closed-form
//! alternating ramps that drive split schemes, arbitrary sampled clocks,
//! smoothing, and the singular/absolutely-continuous decomposition.
//!
//! A clock here is a nondecreasing surjection of [0, T] onto itself. The
//! closed-form kinds come in pairs (a, b): over each period of length delta,
//! `a` runs at double speed while `b` stands still and vice versa, so a pair
//! of equations driven by (xi o a, z o b) advances its two terms one at a
//! time. The Strang variant splits the double-speed phase of `a` into the two
//! outer quarters of the period, which symmetrizes the composition.

use crate::error::{Error, Result};
use crate::path::{close, SampledPath};

#[derive(Debug, Clone)]
pub enum TimeChange {
    LieA {
        delta: f64,
        horizon: f64,
    },
    LieB {
        delta: f64,
        horizon: f64,
    },
    StrangA {
        delta: f64,
        horizon: f64,
    },
    StrangB {
        delta: f64,
        horizon: f64,
    },
    /// Arbitrary nondecreasing piecewise-linear clock fixing 0 and T.
    Sampled(SampledPath),
}

/// Singular/density split of a clock on a mesh. `density[i]` is the
/// absolutely-continuous slope on [mesh[i], mesh[i+1]]; intervals whose
/// discrete slope exceeds 1/sqrt(width) contribute to the cumulative
/// `singular` part instead (the mesh-level surrogate for jump mass).
#[derive(Debug, Clone)]
pub struct TimeChangeDecomposition {
    pub is_member: bool,
    pub mesh: Vec<f64>,
    pub density: Vec<f64>,
    pub singular: SampledPath,
}

fn validate_period(delta: f64, horizon: f64) -> Result<()> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::InvalidParameter {
            name: "delta",
            reason: format!("must be positive, got {delta}"),
        });
    }
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::InvalidParameter {
            name: "horizon",
            reason: format!("must be positive, got {horizon}"),
        });
    }
    let periods = horizon / delta;
    if (periods - periods.round()).abs() > 1e-9 * periods.max(1.0) || periods.round() < 1.0 {
        return Err(Error::InvalidParameter {
            name: "delta",
            reason: format!("must divide the horizon into whole periods, got {horizon}/{delta}"),
        });
    }
    Ok(())
}

impl TimeChange {
    pub fn lie_a(delta: f64, horizon: f64) -> Result<Self> {
        validate_period(delta, horizon)?;
        Ok(Self::LieA { delta, horizon })
    }

    pub fn lie_b(delta: f64, horizon: f64) -> Result<Self> {
        validate_period(delta, horizon)?;
        Ok(Self::LieB { delta, horizon })
    }

    pub fn strang_a(delta: f64, horizon: f64) -> Result<Self> {
        validate_period(delta, horizon)?;
        Ok(Self::StrangA { delta, horizon })
    }

    pub fn strang_b(delta: f64, horizon: f64) -> Result<Self> {
        validate_period(delta, horizon)?;
        Ok(Self::StrangB { delta, horizon })
    }

    /// The (a, b) pair for one scheme at period delta.
    pub fn lie_pair(delta: f64, horizon: f64) -> Result<(Self, Self)> {
        Ok((Self::lie_a(delta, horizon)?, Self::lie_b(delta, horizon)?))
    }

    pub fn strang_pair(delta: f64, horizon: f64) -> Result<(Self, Self)> {
        Ok((
            Self::strang_a(delta, horizon)?,
            Self::strang_b(delta, horizon)?,
        ))
    }

    pub fn identity(horizon: f64) -> Self {
        Self::Sampled(SampledPath::scalar(vec![0.0, horizon], vec![0.0, horizon]).unwrap())
    }

    /// Wraps a sampled clock, requiring it to be nondecreasing and to fix the
    /// endpoints (within 1e-9 relative; the endpoint values are then pinned).
    pub fn from_sampled(path: &SampledPath) -> Result<Self> {
        if path.dim() != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: path.dim(),
            });
        }
        let horizon = path.horizon();
        let tol = 1e-9 * horizon.max(1.0);
        for i in 1..path.len() {
            if path.sample(i)[0] < path.sample(i - 1)[0] - tol {
                return Err(Error::NotNondecreasing {
                    t0: path.times()[i - 1],
                    t1: path.times()[i],
                });
            }
        }
        if path.sample(0)[0].abs() > tol {
            return Err(Error::InvalidParameter {
                name: "clock",
                reason: format!("must start at 0, got {}", path.sample(0)[0]),
            });
        }
        if (path.sample(path.len() - 1)[0] - horizon).abs() > tol {
            return Err(Error::InvalidParameter {
                name: "clock",
                reason: format!(
                    "must reach the horizon {horizon}, got {}",
                    path.sample(path.len() - 1)[0]
                ),
            });
        }
        let mut values: Vec<f64> = (0..path.len()).map(|i| path.sample(i)[0]).collect();
        values[0] = 0.0;
        let last = values.len() - 1;
        values[last] = horizon;
        for i in 1..values.len() {
            if values[i] < values[i - 1] {
                values[i] = values[i - 1];
            }
        }
        Ok(Self::Sampled(SampledPath::scalar(
            path.times().to_vec(),
            values,
        )?))
    }

    pub fn horizon(&self) -> f64 {
        match self {
            Self::LieA { horizon, .. }
            | Self::LieB { horizon, .. }
            | Self::StrangA { horizon, .. }
            | Self::StrangB { horizon, .. } => *horizon,
            Self::Sampled(p) => p.horizon(),
        }
    }

    /// Evaluation. Closed-form kinds are exact at every t; sampled clocks are
    /// read piecewise-linearly.
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            Self::LieA { delta, horizon } => ramp(t, delta, horizon, 0.0, 0.5),
            Self::LieB { delta, horizon } => ramp(t, delta, horizon, 0.5, 1.0),
            Self::StrangA { delta, horizon } => {
                // Active on the two outer quarters of each period.
                let first = ramp_piece(t, delta, horizon, 0.0, 0.25);
                let second = ramp_piece(t, delta, horizon, 0.75, 1.0);
                floor_period(t, delta, horizon).0 + first + second
            }
            Self::StrangB { delta, horizon } => ramp(t, delta, horizon, 0.25, 0.75),
            Self::Sampled(ref p) => p.eval_scalar(t),
        }
    }

    /// Mesh on which the clock is exactly piecewise linear.
    pub fn breakpoints(&self) -> Vec<f64> {
        match *self {
            Self::LieA { delta, horizon } | Self::LieB { delta, horizon } => {
                phase_mesh(delta, horizon, &[0.0, 0.5])
            }
            Self::StrangA { delta, horizon } | Self::StrangB { delta, horizon } => {
                phase_mesh(delta, horizon, &[0.0, 0.25, 0.75])
            }
            Self::Sampled(ref p) => p.times().to_vec(),
        }
    }

    /// Exact piecewise-linear representation on the breakpoint mesh.
    pub fn to_sampled(&self) -> SampledPath {
        match self {
            Self::Sampled(p) => p.clone(),
            _ => {
                let mesh = self.breakpoints();
                let values: Vec<f64> = mesh.iter().map(|&t| self.eval(t)).collect();
                SampledPath::scalar(mesh, values).unwrap()
            }
        }
    }

    /// Composition self(inner(t)), sampled exactly on the union of inner's
    /// breakpoints and the preimages of self's breakpoints.
    pub fn compose(&self, inner: &TimeChange) -> Result<TimeChange> {
        if !close(self.horizon(), inner.horizon()) {
            return Err(Error::HorizonMismatch {
                left: self.horizon(),
                right: inner.horizon(),
            });
        }
        let composed = self.to_sampled().reparametrize(inner)?;
        TimeChange::from_sampled(&composed)
    }

    /// Splits the clock into an absolutely-continuous density and a singular
    /// cumulative part on a mesh: closed-form kinds use their breakpoints
    /// refined to width <= T/128 (so the slope test has room to tell genuine
    /// steepness from coarse sampling); sampled clocks use their own mesh.
    pub fn decompose(&self) -> Result<TimeChangeDecomposition> {
        let horizon = self.horizon();
        let mesh = match self {
            Self::Sampled(p) => p.times().to_vec(),
            _ => {
                let coarse = self.breakpoints();
                let target = horizon / 128.0;
                let mut mesh = Vec::new();
                for w in coarse.windows(2) {
                    let parts = ((w[1] - w[0]) / target).ceil().max(1.0) as usize;
                    for j in 0..parts {
                        mesh.push(w[0] + (w[1] - w[0]) * j as f64 / parts as f64);
                    }
                }
                mesh.push(horizon);
                mesh
            }
        };
        let values: Vec<f64> = mesh.iter().map(|&t| self.eval(t)).collect();
        let tol = 1e-12 * horizon.max(1.0);
        let mut density = Vec::with_capacity(mesh.len() - 1);
        let mut singular_values = Vec::with_capacity(mesh.len());
        let mut singular_mass = 0.0;
        singular_values.push(0.0);
        for i in 0..mesh.len() - 1 {
            let width = mesh[i + 1] - mesh[i];
            let inc = values[i + 1] - values[i];
            if inc < -tol {
                return Err(Error::NotNondecreasing {
                    t0: mesh[i],
                    t1: mesh[i + 1],
                });
            }
            let slope = (inc / width).max(0.0);
            if slope > 1.0 / width.sqrt() {
                singular_mass += inc;
                density.push(0.0);
            } else {
                density.push(slope);
            }
            singular_values.push(singular_mass);
        }
        let is_member = singular_mass == 0.0
            && values[0].abs() <= tol
            && (values[values.len() - 1] - horizon).abs() <= tol;
        Ok(TimeChangeDecomposition {
            is_member,
            singular: SampledPath::scalar(mesh.clone(), singular_values)?,
            mesh,
            density,
        })
    }

    /// Gaussian smoothing with bandwidth eps: convolves the clock (extended by
    /// odd reflection at both ends) against a centered Gaussian truncated at
    /// 6 eps, by symmetric trapezoid quadrature, on the breakpoint mesh
    /// refined tenfold; the result is renormalized to fix 0 and T again.
    /// Requires 0 < eps <= T/6 so a single reflection covers the kernel.
    pub fn mollify(&self, eps: f64) -> Result<TimeChange> {
        let horizon = self.horizon();
        if !(eps > 0.0 && eps <= horizon / 6.0) {
            return Err(Error::InvalidParameter {
                name: "eps",
                reason: format!("need 0 < eps <= horizon/6 = {}, got {eps}", horizon / 6.0),
            });
        }
        let extended = |tau: f64| -> f64 {
            if tau < 0.0 {
                -self.eval(-tau)
            } else if tau > horizon {
                2.0 * horizon - self.eval(2.0 * horizon - tau)
            } else {
                self.eval(tau)
            }
        };
        // Symmetric nodes u_i = (i - K) * (6 eps / K) so the odd part of the
        // quadrature cancels exactly for a linear clock.
        const K: i64 = 120;
        let step = 6.0 * eps / K as f64;
        let nodes: Vec<(f64, f64)> = (-K..=K)
            .map(|i| {
                let u = i as f64 * step;
                let weight = if i == -K || i == K { 0.5 } else { 1.0 };
                (u, weight * (-(u * u) / (2.0 * eps * eps)).exp())
            })
            .collect();
        let raw = |t: f64| -> f64 { nodes.iter().map(|&(u, wphi)| wphi * extended(t - u)).sum() };

        let coarse = self.breakpoints();
        let mut mesh = Vec::new();
        for w in coarse.windows(2) {
            for j in 0..10 {
                mesh.push(w[0] + (w[1] - w[0]) * j as f64 / 10.0);
            }
        }
        mesh.push(horizon);

        let raw0 = raw(0.0);
        let raw_end = raw(horizon);
        if !(raw_end > raw0) {
            return Err(Error::InvalidParameter {
                name: "eps",
                reason: "smoothed clock collapsed; bandwidth too large for this input".into(),
            });
        }
        let scale = horizon / (raw_end - raw0);
        let mut values: Vec<f64> = mesh.iter().map(|&t| (raw(t) - raw0) * scale).collect();
        values[0] = 0.0;
        let last = values.len() - 1;
        values[last] = horizon;
        for i in 1..values.len() {
            if values[i] < values[i - 1] {
                values[i] = values[i - 1];
            }
        }
        Ok(TimeChange::Sampled(SampledPath::scalar(mesh, values)?))
    }
}

/// Rescales a nondecreasing path onto its own horizon: xi~(t) = xi(t) * T /
/// xi(T). Returns the clock and the compensating factor xi(T)/T by which
/// operator coefficients must be multiplied to leave the driven equation
/// unchanged.
pub fn rescale_to_horizon(path: &SampledPath) -> Result<(TimeChange, f64)> {
    if path.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: path.dim(),
        });
    }
    let horizon = path.horizon();
    let tol = 1e-9 * horizon.max(1.0);
    for i in 1..path.len() {
        if path.sample(i)[0] < path.sample(i - 1)[0] - tol {
            return Err(Error::NotNondecreasing {
                t0: path.times()[i - 1],
                t1: path.times()[i],
            });
        }
    }
    if path.sample(0)[0].abs() > tol {
        return Err(Error::InvalidParameter {
            name: "clock",
            reason: format!("must start at 0, got {}", path.sample(0)[0]),
        });
    }
    let end = path.sample(path.len() - 1)[0];
    if !(end > tol) {
        return Err(Error::InvalidParameter {
            name: "clock",
            reason: "constant path cannot be rescaled onto the horizon".into(),
        });
    }
    let factor = end / horizon;
    let values: Vec<f64> = (0..path.len())
        .map(|i| path.sample(i)[0] / factor)
        .collect();
    let scaled = SampledPath::scalar(path.times().to_vec(), values)?;
    Ok((TimeChange::from_sampled(&scaled)?, factor))
}

/// Period-relative ramp: inside each period the clock idles at the period
/// start, rises at slope 2 between phases lo..hi (phases are fractions of the
/// period), and idles at the period end afterwards.
fn ramp(t: f64, delta: f64, horizon: f64, lo: f64, hi: f64) -> f64 {
    let (t_floor, _) = floor_period(t, delta, horizon);
    t_floor + ramp_piece(t, delta, horizon, lo, hi)
}

fn ramp_piece(t: f64, delta: f64, horizon: f64, lo: f64, hi: f64) -> f64 {
    let (_, local) = floor_period(t, delta, horizon);
    let a = lo * delta;
    let b = hi * delta;
    if local <= a {
        0.0
    } else if local >= b {
        2.0 * (b - a)
    } else {
        2.0 * (local - a)
    }
}

fn floor_period(t: f64, delta: f64, horizon: f64) -> (f64, f64) {
    if t >= horizon {
        return (horizon, 0.0);
    }
    if t <= 0.0 {
        return (0.0, 0.0);
    }
    let k = (t / delta).floor();
    let t_floor = k * delta;
    (t_floor, t - t_floor)
}

fn phase_mesh(delta: f64, horizon: f64, phases: &[f64]) -> Vec<f64> {
    let periods = (horizon / delta).round() as usize;
    let mut mesh = Vec::with_capacity(periods * phases.len() + 1);
    for k in 0..periods {
        let base = k as f64 * delta;
        for &p in phases {
            mesh.push(base + p * delta);
        }
    }
    mesh.push(horizon);
    mesh
}
