//! Ready-made problem setups used by the command line tool and the
//! acceptance suite. Each preset pins every coefficient, grid and horizon,
//! so a run is reproducible from its name plus a seed, and the ones with
//! closed-form solutions expose them next to the setup.

use crate::error::Result;
use crate::field::AffineField;
use crate::grid::{Boundary, Grid};
use crate::lift::RoughPath;
use crate::noise::{brownian_path, fractional_brownian_path};
use crate::path::SampledPath;
use crate::pde::{LinearOperator, Operator};
use crate::transport::{Coeff, RoughTransport};
use std::f64::consts::PI;

/// A state equation dy = V(y) dxi + W(y) dz with a starting point.
#[derive(Debug, Clone)]
pub struct StatePreset {
    pub field: AffineField,
    pub y0: Vec<f64>,
    pub horizon: f64,
}

/// A split PDE du = F[u] dxi + H[u] dz on a grid.
#[derive(Debug, Clone)]
pub struct PdePreset {
    pub op: Operator,
    pub tr: RoughTransport,
    pub grid: Grid,
    pub u0: Vec<f64>,
    pub horizon: f64,
}

/// Two stable directions relaxing toward (0.5, -0.25), with diagonal noise:
/// drift and noise flows commute, so splitting is exact in the limit and
/// the solution has a coordinatewise closed form.
pub fn ode_commuting() -> StatePreset {
    let a = [-1.0, -0.5];
    let b = [0.3, 0.8];
    let target = [0.5, -0.25];
    let drift = vec![a[0], 0.0, 0.0, a[1]];
    let drift_offset = vec![-a[0] * target[0], -a[1] * target[1]];
    let noise = vec![b[0], 0.0, 0.0, b[1]];
    let noise_offset = vec![-b[0] * target[0], -b[1] * target[1]];
    StatePreset {
        field: AffineField::new(2, drift, drift_offset, vec![noise], vec![noise_offset]).unwrap(),
        y0: vec![1.5, 0.75],
        horizon: 1.0,
    }
}

/// Endpoint of the commuting preset given clock and driver increments.
pub fn ode_commuting_exact(dxi: f64, dz: f64) -> Vec<f64> {
    let preset = ode_commuting();
    let a = [-1.0, -0.5];
    let b = [0.3, 0.8];
    let target = [0.5, -0.25];
    (0..2)
        .map(|i| target[i] + (a[i] * dxi + b[i] * dz).exp() * (preset.y0[i] - target[i]))
        .collect()
}

/// Strictly upper and lower shift matrices: the two flows do not commute,
/// which makes the splitting error first order in the period.
pub fn ode_nilpotent() -> StatePreset {
    StatePreset {
        field: AffineField::linear(2, vec![0.0, 1.0, 0.0, 0.0], vec![vec![0.0, 0.0, 1.0, 0.0]])
            .unwrap(),
        y0: vec![1.0, 0.5],
        horizon: 1.0,
    }
}

/// Rotation generator driven by a single rough channel: the flow is a
/// rotation by the driver's increment, whatever its regularity.
pub fn rde_exp_linear() -> StatePreset {
    StatePreset {
        field: AffineField::linear(2, vec![0.0; 4], vec![vec![0.0, -1.0, 1.0, 0.0]]).unwrap(),
        y0: vec![1.0, 0.0],
        horizon: 1.0,
    }
}

pub fn rde_exp_linear_exact(dz: f64) -> Vec<f64> {
    vec![dz.cos(), dz.sin()]
}

/// The identity clock xi(t) = t on `steps` uniform cells.
pub fn identity_clock(horizon: f64, steps: usize) -> SampledPath {
    let times: Vec<f64> = (0..=steps)
        .map(|i| horizon * i as f64 / steps as f64)
        .collect();
    SampledPath::scalar(times.clone(), times).unwrap()
}

/// Smooth deterministic driver for the state presets: z(t) = 0.7 sin(2t).
pub fn smooth_driver(horizon: f64, steps: usize) -> RoughPath {
    let times: Vec<f64> = (0..=steps)
        .map(|i| horizon * i as f64 / steps as f64)
        .collect();
    let values: Vec<f64> = times.iter().map(|&t| 0.7 * (2.0 * t).sin()).collect();
    RoughPath::from_path_pwl(&SampledPath::scalar(times, values).unwrap())
}

pub fn brownian_driver(seed: u64, channels: usize, horizon: f64, level: u32) -> Result<RoughPath> {
    Ok(RoughPath::from_path_pwl(&brownian_path(
        seed, channels, horizon, level,
    )?))
}

pub fn fbm_driver(seed: u64, horizon: f64, level: u32, hurst: f64) -> Result<RoughPath> {
    Ok(RoughPath::from_path_pwl(&fractional_brownian_path(
        seed, 1, horizon, level, hurst,
    )?))
}

/// Filtering-style density evolution: heat dissipation against the clock
/// and a unit-speed shift against the driver, on the periodic unit circle.
/// With these coefficients the solution is a damped travelling wave with a
/// closed form.
pub fn zakai_1d() -> PdePreset {
    let grid = Grid::new(0.0, 1.0, 257, Boundary::Periodic).unwrap();
    let u0 = grid.sample(|x| (2.0 * PI * x).sin());
    PdePreset {
        op: Operator::Linear(LinearOperator::heat(0.02)),
        tr: RoughTransport::advection(vec![Coeff::Constant(1.0)]).unwrap(),
        grid,
        u0,
        horizon: 0.25,
    }
}

/// Exact profile of the damped travelling wave after clock mass `dxi` and
/// driver increment `dz`.
pub fn zakai_1d_exact(grid: &Grid, dxi: f64, dz: f64) -> Vec<f64> {
    let decay = (-0.02 * (2.0 * PI).powi(2) * dxi).exp();
    grid.sample(|x| decay * (2.0 * PI * (x + dz)).sin())
}

/// Worst-case directional steering: the operator phase takes the pointwise
/// minimum over left and right unit drifts, the rough phase shifts at a
/// fixed fraction of the driver.
pub fn hjb_control() -> PdePreset {
    let grid = Grid::new(-2.0, 2.0, 129, Boundary::Clamped).unwrap();
    let u0 = grid.sample(|x| x * x);
    PdePreset {
        op: Operator::Hjb(vec![
            LinearOperator {
                diffusion: 0.0,
                advection: 1.0,
                linear: 0.0,
                source: 0.0,
            },
            LinearOperator {
                diffusion: 0.0,
                advection: -1.0,
                linear: 0.0,
                source: 0.0,
            },
        ]),
        tr: RoughTransport::advection(vec![Coeff::Constant(0.4)]).unwrap(),
        grid,
        u0,
        horizon: 0.5,
    }
}

/// Steered diffusion with a stronger rough shift; no closed form, studied
/// by self-convergence over the splitting ladder.
pub fn pathwise_control() -> PdePreset {
    let grid = Grid::new(-2.0, 2.0, 129, Boundary::Clamped).unwrap();
    let u0 = grid.sample(|x| x * x);
    PdePreset {
        op: Operator::Hjb(vec![
            LinearOperator {
                diffusion: 0.05,
                advection: 1.0,
                linear: 0.0,
                source: 0.0,
            },
            LinearOperator {
                diffusion: 0.05,
                advection: -1.0,
                linear: 0.0,
                source: 0.0,
            },
        ]),
        tr: RoughTransport::advection(vec![Coeff::Constant(0.5)]).unwrap(),
        grid,
        u0,
        horizon: 0.5,
    }
}

/// Pure unit-speed transport on the circle: the solution is the initial
/// profile shifted by the driver increment, giving a sharp end-to-end check
/// of the characteristic solver on rough input.
pub fn transport_check() -> PdePreset {
    let grid = Grid::new(0.0, 1.0, 257, Boundary::Periodic).unwrap();
    let u0 = grid.sample(|x| (2.0 * PI * x).sin());
    PdePreset {
        op: Operator::Linear(LinearOperator::heat(0.0)),
        tr: RoughTransport::advection(vec![Coeff::Constant(1.0)]).unwrap(),
        grid,
        u0,
        horizon: 1.0,
    }
}

pub fn shift_closed_form(grid: &Grid, dz: f64) -> Vec<f64> {
    grid.sample(|x| (2.0 * PI * (x + dz)).sin())
}
