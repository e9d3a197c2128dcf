//! Split evolution for du = F[u] dxi + H[u] dz: the second-order operator F
//! advances by finite differences against the slow clock, the first-order
//! rough part H advances by characteristics against the driver, and the two
//! alternate over a chosen number of periods. The phase order picks which
//! half leads inside a period; the symmetrized pattern wraps the trailing
//! phase in two half-weight applications of the leading one.

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::lift::RoughPath;
use crate::path::SampledPath;
use crate::pde::{deterministic_step, Operator};
pub use crate::rde::{PhaseOrder, Splitting};
use crate::transport::{rough_transport_step, RoughTransport};

#[derive(Debug, Clone)]
pub struct SplitEvolution {
    pub values: Vec<f64>,
    /// Characteristic feet pinned to a clamped boundary across all phases.
    pub clamped: usize,
}

/// Runs `periods` alternation cycles across the common horizon of `xi` and
/// `z`. The clock must be nondecreasing; its increments parametrize the
/// operator phases. `transport_refine` subdivides the driver mesh inside
/// each rough phase.
#[allow(clippy::too_many_arguments)]
pub fn split_evolve(
    op: &Operator,
    tr: &RoughTransport,
    grid: &Grid,
    u0: &[f64],
    xi: &SampledPath,
    z: &RoughPath,
    scheme: Splitting,
    order: PhaseOrder,
    periods: usize,
    transport_refine: usize,
) -> Result<SplitEvolution> {
    if xi.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: xi.dim(),
        });
    }
    if periods == 0 {
        return Err(Error::InvalidParameter {
            name: "periods",
            reason: "need at least one period".into(),
        });
    }
    let horizon = xi.horizon();
    if (horizon - z.horizon()).abs() > 1e-12 * horizon.max(1.0) {
        return Err(Error::HorizonMismatch {
            left: horizon,
            right: z.horizon(),
        });
    }
    let tol = 1e-12 * horizon.max(1.0);
    for i in 1..xi.len() {
        if xi.sample(i)[0] < xi.sample(i - 1)[0] - tol {
            return Err(Error::NotNondecreasing {
                t0: xi.times()[i - 1],
                t1: xi.times()[i],
            });
        }
    }

    let rate = op.stable_rate(grid)?;
    let delta = horizon / periods as f64;
    let mut u = u0.to_vec();
    let mut clamped = 0usize;

    let clock_inc = |a: f64, b: f64| -> f64 { (xi.eval_scalar(b) - xi.eval_scalar(a)).max(0.0) };

    for k in 0..periods {
        let ta = k as f64 * delta;
        let tb = if k + 1 == periods {
            horizon
        } else {
            (k + 1) as f64 * delta
        };
        match (scheme, order) {
            (Splitting::Lie, PhaseOrder::ClockFirst) => {
                u = deterministic_step(op, grid, &u, clock_inc(ta, tb), rate)?;
                let out = rough_transport_step(tr, grid, &u, z, ta, tb, transport_refine)?;
                u = out.values;
                clamped += out.clamped;
            }
            (Splitting::Lie, PhaseOrder::DriverFirst) => {
                let out = rough_transport_step(tr, grid, &u, z, ta, tb, transport_refine)?;
                u = out.values;
                clamped += out.clamped;
                u = deterministic_step(op, grid, &u, clock_inc(ta, tb), rate)?;
            }
            (Splitting::Strang, PhaseOrder::ClockFirst) => {
                let mid = ta + 0.5 * delta;
                u = deterministic_step(op, grid, &u, clock_inc(ta, mid), rate)?;
                let out = rough_transport_step(tr, grid, &u, z, ta, tb, transport_refine)?;
                u = out.values;
                clamped += out.clamped;
                u = deterministic_step(op, grid, &u, clock_inc(mid, tb), rate)?;
            }
            // The symmetrized pattern with the rough phase outside: the
            // driver interval is halved instead of the clock increment.
            (Splitting::Strang, PhaseOrder::DriverFirst) => {
                let mid = ta + 0.5 * delta;
                let out = rough_transport_step(tr, grid, &u, z, ta, mid, transport_refine)?;
                u = out.values;
                clamped += out.clamped;
                u = deterministic_step(op, grid, &u, clock_inc(ta, tb), rate)?;
                let out = rough_transport_step(tr, grid, &u, z, mid, tb, transport_refine)?;
                u = out.values;
                clamped += out.clamped;
            }
        }
    }
    Ok(SplitEvolution { values: u, clamped })
}
