//! Deterministic part of the split PDE solver: explicit monotone finite
//! differences for u_t = A u_xx + b u_x + c u + f, or the pointwise minimum
//! of a family of such operators. The evolution is parametrized by the
//! accumulated clock increment, not wall time, so the split scheme can hand
//! it arbitrary dissections of the clock.
//!
//! Substepping uses a single power-of-two rate chosen once per problem: a
//! clock increment dxi is integrated in ceil(dxi * rate) equal substeps.
//! When the increments are dyadic, every substep across every dissection has
//! the same width 1/rate, so refining a dissection reproduces the coarse
//! composition bit for bit instead of merely approximately.

use crate::error::{Error, Result};
use crate::grid::{Boundary, Grid};

/// Hard ceiling on substeps for one increment; beyond this the resolution
/// request is treated as a configuration error rather than a long loop.
pub const MAX_SUBSTEPS: usize = 10_000_000;

/// One constant-coefficient generator A u_xx + b u_x + c u + f.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearOperator {
    pub diffusion: f64,
    pub advection: f64,
    pub linear: f64,
    pub source: f64,
}

impl LinearOperator {
    pub fn heat(diffusion: f64) -> Self {
        Self {
            diffusion,
            advection: 0.0,
            linear: 0.0,
            source: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Operator {
    Linear(LinearOperator),
    /// Pointwise minimum over a finite control set. A single control is the
    /// same code path as `Linear`, so the two agree bit for bit.
    Hjb(Vec<LinearOperator>),
}

impl Operator {
    pub fn controls(&self) -> &[LinearOperator] {
        match self {
            Operator::Linear(op) => std::slice::from_ref(op),
            Operator::Hjb(ops) => ops,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.controls().is_empty() {
            return Err(Error::InvalidParameter {
                name: "operator",
                reason: "empty control set".into(),
            });
        }
        for c in self.controls() {
            if !(c.diffusion >= 0.0)
                || [c.diffusion, c.advection, c.linear, c.source]
                    .iter()
                    .any(|v| !v.is_finite())
            {
                return Err(Error::InvalidParameter {
                    name: "operator",
                    reason: format!(
                        "need finite coefficients and nonnegative diffusion, got {c:?}"
                    ),
                });
            }
        }
        Ok(())
    }

    /// Power-of-two substeps per unit of clock so that every explicit
    /// substep is monotone: the center weight 1 - dtau (2A/h^2 + |b|/h - c)
    /// must stay nonnegative, with a 0.9 margin.
    pub fn stable_rate(&self, grid: &Grid) -> Result<f64> {
        self.validate()?;
        let h = grid.spacing();
        let mut worst = 0.0f64;
        for c in self.controls() {
            let coef = 2.0 * c.diffusion / (h * h) + c.advection.abs() / h + (-c.linear).max(0.0);
            worst = worst.max(coef);
        }
        if worst == 0.0 {
            return Ok(1.0);
        }
        let min_rate = worst / 0.9;
        let exponent = min_rate.log2().ceil().max(0.0);
        if exponent > 60.0 {
            return Err(Error::ResolutionExceeded {
                required: u64::MAX,
                cap: MAX_SUBSTEPS as u64,
            });
        }
        Ok(2.0f64.powi(exponent as i32))
    }

    /// Generator applied pointwise (for the minimum family, the minimum of
    /// the candidate generators). Boundary nodes use their frozen or
    /// wrapped neighbors like the evolution does.
    pub fn apply(&self, grid: &Grid, u: &[f64]) -> Vec<f64> {
        let n = grid.len();
        let h = grid.spacing();
        let mut out = vec![0.0; n];
        for i in 0..n {
            let (l, r) = (grid.left_of(i), grid.right_of(i));
            let mut best = f64::INFINITY;
            for c in self.controls() {
                let uxx = ((u[r] - u[i]) + (u[l] - u[i])) / (h * h);
                let ux = if c.advection >= 0.0 {
                    (u[r] - u[i]) / h
                } else {
                    (u[i] - u[l]) / h
                };
                let val = c.diffusion * uxx + c.advection * ux + c.linear * u[i] + c.source;
                best = best.min(val);
            }
            out[i] = best;
        }
        out
    }
}

fn substep(controls: &[LinearOperator], grid: &Grid, dtau: f64, u: &[f64], out: &mut [f64]) {
    let n = grid.len();
    let h = grid.spacing();
    let interior = match grid.boundary() {
        Boundary::Periodic => 0..n - 1,
        Boundary::Clamped => 1..n - 1,
    };
    if grid.boundary() == Boundary::Clamped {
        out[0] = u[0];
        out[n - 1] = u[n - 1];
    }
    for i in interior {
        let (l, r) = (grid.left_of(i), grid.right_of(i));
        let mut best = f64::INFINITY;
        for c in controls {
            // Incremental form: all neighbor contributions are differences
            // against u[i], so a flat state (with c = f = 0) is a bitwise
            // fixed point of the substep.
            let uxx = ((u[r] - u[i]) + (u[l] - u[i])) / (h * h);
            let ux = if c.advection >= 0.0 {
                (u[r] - u[i]) / h
            } else {
                (u[i] - u[l]) / h
            };
            let candidate =
                u[i] + dtau * (c.diffusion * uxx + c.advection * ux + c.linear * u[i] + c.source);
            best = best.min(candidate);
        }
        out[i] = best;
    }
    if grid.boundary() == Boundary::Periodic {
        out[n - 1] = out[0];
    }
}

/// Advances the state by clock increment `dxi` at the given substep rate.
/// A zero increment returns the input unchanged, bit for bit.
pub fn deterministic_step(
    op: &Operator,
    grid: &Grid,
    u: &[f64],
    dxi: f64,
    rate: f64,
) -> Result<Vec<f64>> {
    if u.len() != grid.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            got: u.len(),
        });
    }
    if !(dxi >= 0.0) || !dxi.is_finite() {
        return Err(Error::InvalidParameter {
            name: "dxi",
            reason: format!("need a nonnegative increment, got {dxi}"),
        });
    }
    if dxi == 0.0 {
        return Ok(u.to_vec());
    }
    // The -1e-9 guard keeps dyadic products that land exactly on an integer
    // from being pushed up a step by rounding.
    let k_real = (dxi * rate - 1e-9).ceil().max(1.0);
    if k_real > MAX_SUBSTEPS as f64 {
        return Err(Error::ResolutionExceeded {
            required: k_real as u64,
            cap: MAX_SUBSTEPS as u64,
        });
    }
    let k = k_real as usize;
    let dtau = dxi / k as f64;
    let controls = op.controls();
    let mut cur = u.to_vec();
    let mut next = vec![0.0; u.len()];
    for _ in 0..k {
        substep(controls, grid, dtau, &cur, &mut next);
        std::mem::swap(&mut cur, &mut next);
    }
    if cur.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            context: "pde state",
        });
    }
    Ok(cur)
}

/// Integrates the increment twice, once at double rate and once at the base
/// rate, and demands the two routes agree within a first-order error bound
/// derived from the state's current curvature. Returns the finer route.
pub fn evolve_checked(
    op: &Operator,
    grid: &Grid,
    u: &[f64],
    dxi: f64,
    rate: f64,
) -> Result<Vec<f64>> {
    let fine = deterministic_step(op, grid, u, dxi, 2.0 * rate)?;
    let base = deterministic_step(op, grid, u, dxi, rate)?;
    // One Euler substep of width dtau mis-integrates by ~ dtau^2 L(L u) / 2
    // locally, hence dtau * dxi * sup|L(L u)| / 2 over the increment; the
    // two routes differ by at most the sum of their bounds, times a safety
    // factor of 4 for curvature moving during the solve.
    let curv = op
        .apply(grid, &op.apply(grid, u))
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = (2.0 * (1.0 / (2.0 * rate) + 1.0 / rate) * dxi * curv).max(1e-12);
    let mut gap = 0.0f64;
    let mut at = 0usize;
    for i in 0..fine.len() {
        let g = (fine[i] - base[i]).abs();
        if g > gap {
            gap = g;
            at = i;
        }
    }
    if gap > tol {
        return Err(Error::TwoRouteMismatch {
            gap,
            tol,
            t: grid.point(at),
        });
    }
    Ok(fine)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn periodic_grid() -> Grid {
        Grid::new(0.0, 1.0, 129, Boundary::Periodic).unwrap()
    }

    #[test]
    fn heat_kernel_damps_the_fourier_mode() {
        let grid = periodic_grid();
        let op = Operator::Linear(LinearOperator::heat(0.1));
        let rate = op.stable_rate(&grid).unwrap();
        let u0 = grid.sample(|x| (2.0 * PI * x).sin());
        let t = 0.25;
        let u = deterministic_step(&op, &grid, &u0, t, rate).unwrap();
        let decay = (-0.1 * (2.0 * PI).powi(2) * t).exp();
        let mut worst = 0.0f64;
        for (i, &v) in u.iter().enumerate() {
            let want = decay * (2.0 * PI * grid.point(i)).sin();
            worst = worst.max((v - want).abs());
        }
        assert!(worst < 1e-3, "sup error {worst}");
    }

    #[test]
    fn advection_transports_the_profile_leftward() {
        // u_t = b u_x solves to u0(x + b t); upwinding adds O(h) smearing.
        let grid = periodic_grid();
        let op = Operator::Linear(LinearOperator {
            diffusion: 0.0,
            advection: 1.0,
            linear: 0.0,
            source: 0.0,
        });
        let rate = op.stable_rate(&grid).unwrap();
        let u0 = grid.sample(|x| (2.0 * PI * x).sin());
        let t = 0.25;
        let u = deterministic_step(&op, &grid, &u0, t, rate).unwrap();
        let mut worst = 0.0f64;
        for (i, &v) in u.iter().enumerate() {
            let want = (2.0 * PI * (grid.point(i) + t)).sin();
            worst = worst.max((v - want).abs());
        }
        assert!(worst < 0.08, "sup error {worst}");
    }

    #[test]
    fn zero_increment_is_a_bitwise_no_op() {
        let grid = periodic_grid();
        let op = Operator::Linear(LinearOperator::heat(0.3));
        let rate = op.stable_rate(&grid).unwrap();
        let u0 = grid.sample(|x| (7.1 * x).sin() * 0.3);
        let u = deterministic_step(&op, &grid, &u0, 0.0, rate).unwrap();
        assert_eq!(u, u0);
    }

    #[test]
    fn flat_states_are_bitwise_fixed_points() {
        let grid = periodic_grid();
        let op = Operator::Linear(LinearOperator {
            diffusion: 0.4,
            advection: -0.7,
            linear: 0.0,
            source: 0.0,
        });
        let rate = op.stable_rate(&grid).unwrap();
        let u0 = vec![0.3721; 129];
        let u = deterministic_step(&op, &grid, &u0, 0.5, rate).unwrap();
        assert_eq!(u, u0);
    }

    #[test]
    fn dyadic_dissections_compose_bitwise() {
        let grid = periodic_grid();
        let op = Operator::Linear(LinearOperator::heat(0.1));
        let rate = op.stable_rate(&grid).unwrap();
        let u0 = grid.sample(|x| (2.0 * PI * x).sin() + 0.2 * (6.0 * PI * x).cos());
        let whole = deterministic_step(&op, &grid, &u0, 0.25, rate).unwrap();
        let mut split = u0.clone();
        for _ in 0..4 {
            split = deterministic_step(&op, &grid, &split, 0.0625, rate).unwrap();
        }
        assert_eq!(whole, split);
    }

    #[test]
    fn single_control_minimum_equals_the_linear_operator_bitwise() {
        let grid = periodic_grid();
        let inner = LinearOperator {
            diffusion: 0.2,
            advection: 0.5,
            linear: -0.1,
            source: 0.3,
        };
        let linear = Operator::Linear(inner);
        let hjb = Operator::Hjb(vec![inner]);
        let rate = linear.stable_rate(&grid).unwrap();
        assert_eq!(rate, hjb.stable_rate(&grid).unwrap());
        let u0 = grid.sample(|x| (2.0 * PI * x).cos());
        let a = deterministic_step(&linear, &grid, &u0, 0.125, rate).unwrap();
        let b = deterministic_step(&hjb, &grid, &u0, 0.125, rate).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn control_minimum_lies_below_each_control() {
        let grid = periodic_grid();
        let c1 = LinearOperator {
            diffusion: 0.1,
            advection: 1.0,
            linear: 0.0,
            source: 0.0,
        };
        let c2 = LinearOperator {
            diffusion: 0.1,
            advection: -1.0,
            linear: 0.0,
            source: 0.0,
        };
        let hjb = Operator::Hjb(vec![c1, c2]);
        let rate = hjb.stable_rate(&grid).unwrap();
        let u0 = grid.sample(|x| (2.0 * PI * x).sin());
        let min_u = deterministic_step(&hjb, &grid, &u0, 0.125, rate).unwrap();
        for single in [c1, c2] {
            let u = deterministic_step(&Operator::Linear(single), &grid, &u0, 0.125, rate).unwrap();
            for i in 0..u.len() {
                assert!(
                    min_u[i] <= u[i] + 1e-13,
                    "node {i}: {} vs {}",
                    min_u[i],
                    u[i]
                );
            }
        }
    }

    #[test]
    fn max_principle_holds_without_sources() {
        let grid = periodic_grid();
        let op = Operator::Linear(LinearOperator {
            diffusion: 0.2,
            advection: 0.6,
            linear: 0.0,
            source: 0.0,
        });
        let rate = op.stable_rate(&grid).unwrap();
        let u0 = grid.sample(|x| (2.0 * PI * x).sin() + 0.3 * (8.0 * PI * x).cos());
        let (lo, hi) = u0
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
                (a.min(v), b.max(v))
            });
        let u = deterministic_step(&op, &grid, &u0, 0.5, rate).unwrap();
        for &v in &u {
            assert!(
                v >= lo - 1e-11 && v <= hi + 1e-11,
                "{v} escapes [{lo}, {hi}]"
            );
        }
    }

    #[test]
    fn ordered_data_stays_ordered() {
        let grid = periodic_grid();
        let op = Operator::Hjb(vec![
            LinearOperator {
                diffusion: 0.15,
                advection: 0.8,
                linear: 0.0,
                source: 0.0,
            },
            LinearOperator {
                diffusion: 0.05,
                advection: -0.4,
                linear: 0.0,
                source: 0.1,
            },
        ]);
        let rate = op.stable_rate(&grid).unwrap();
        let u0 = grid.sample(|x| (2.0 * PI * x).sin());
        let v0: Vec<f64> = u0.iter().map(|&v| v + 0.5).collect();
        let u = deterministic_step(&op, &grid, &u0, 0.25, rate).unwrap();
        let v = deterministic_step(&op, &grid, &v0, 0.25, rate).unwrap();
        for i in 0..u.len() {
            assert!(u[i] <= v[i], "order lost at node {i}: {} vs {}", u[i], v[i]);
        }
    }

    #[test]
    fn reaction_term_grows_exponentially() {
        let grid = Grid::new(0.0, 1.0, 9, Boundary::Periodic).unwrap();
        let op = Operator::Linear(LinearOperator {
            diffusion: 0.0,
            advection: 0.0,
            linear: 0.7,
            source: 0.0,
        });
        let rate = 4096.0;
        let u0 = vec![2.0; 9];
        let u = deterministic_step(&op, &grid, &u0, 1.0, rate).unwrap();
        let want = 2.0 * (0.7f64).exp();
        assert!((u[0] - want).abs() < 1e-3, "{} vs {want}", u[0]);
    }

    #[test]
    fn clamped_boundaries_stay_frozen() {
        let grid = Grid::new(-2.0, 2.0, 65, Boundary::Clamped).unwrap();
        let op = Operator::Linear(LinearOperator::heat(0.5));
        let rate = op.stable_rate(&grid).unwrap();
        let u0 = grid.sample(|x| x * x);
        let u = deterministic_step(&op, &grid, &u0, 0.3, rate).unwrap();
        assert_eq!(u[0], u0[0]);
        assert_eq!(u[64], u0[64]);
        // Interior curvature relaxes: x^2 has positive u_xx, so values rise.
        assert!(u[32] > u0[32]);
    }

    #[test]
    fn the_two_route_check_passes_for_smooth_data() {
        let grid = periodic_grid();
        let op = Operator::Linear(LinearOperator::heat(0.1));
        let rate = op.stable_rate(&grid).unwrap();
        let u0 = grid.sample(|x| (2.0 * PI * x).sin());
        let u = evolve_checked(&op, &grid, &u0, 0.25, rate).unwrap();
        let fine = deterministic_step(&op, &grid, &u0, 0.25, 2.0 * rate).unwrap();
        assert_eq!(u, fine);
    }

    #[test]
    fn oversized_resolution_requests_are_rejected() {
        let grid = periodic_grid();
        let op = Operator::Linear(LinearOperator::heat(0.1));
        match deterministic_step(&op, &grid, &vec![0.0; 129], 1.0, 1e9) {
            Err(Error::ResolutionExceeded { cap, .. }) => assert_eq!(cap, MAX_SUBSTEPS as u64),
            other => panic!("expected a resolution error, got {other:?}"),
        }
    }
}
