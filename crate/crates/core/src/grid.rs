//! Uniform spatial grid for the one-dimensional equations, with either
//! periodic identification of the endpoints or clamped (frozen-boundary)
//! semantics. Periodic grids store the right endpoint as a duplicate of the
//! left one, so grid functions carry n values with values[n-1] == values[0].

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Periodic,
    Clamped,
}

#[derive(Debug, Clone)]
pub struct Grid {
    lo: f64,
    hi: f64,
    n: usize,
    boundary: Boundary,
}

impl Grid {
    pub fn new(lo: f64, hi: f64, n: usize, boundary: Boundary) -> Result<Self> {
        if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidParameter {
                name: "grid",
                reason: format!("need lo < hi, got [{lo}, {hi}]"),
            });
        }
        if n < 3 {
            return Err(Error::InvalidParameter {
                name: "grid",
                reason: format!("need at least 3 points, got {n}"),
            });
        }
        Ok(Self {
            lo,
            hi,
            n,
            boundary,
        })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn spacing(&self) -> f64 {
        (self.hi - self.lo) / (self.n - 1) as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        self.lo + (self.hi - self.lo) * i as f64 / (self.n - 1) as f64
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.point(i)).collect()
    }

    /// Left neighbor under the boundary rule. Periodic wrapping skips the
    /// duplicated endpoint: the cell left of node 0 ends at node n-2.
    pub fn left_of(&self, i: usize) -> usize {
        match self.boundary {
            Boundary::Periodic => {
                if i == 0 {
                    self.n - 2
                } else {
                    i - 1
                }
            }
            Boundary::Clamped => i.saturating_sub(1),
        }
    }

    pub fn right_of(&self, i: usize) -> usize {
        match self.boundary {
            Boundary::Periodic => {
                if i >= self.n - 2 {
                    // Node n-2 steps onto the duplicated endpoint's twin.
                    if i == self.n - 2 {
                        self.n - 1
                    } else {
                        1
                    }
                } else {
                    i + 1
                }
            }
            Boundary::Clamped => (i + 1).min(self.n - 1),
        }
    }

    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        let mut values: Vec<f64> = (0..self.n).map(|i| f(self.point(i))).collect();
        if self.boundary == Boundary::Periodic {
            values[self.n - 1] = values[0];
        }
        values
    }

    /// Index range over which convergence errors are measured: the whole
    /// grid when periodic, trimmed by `fraction` of the nodes per side when
    /// clamped, where frozen-boundary truncation pollutes the sup without
    /// saying anything about the scheme.
    pub fn error_window(&self, fraction: f64) -> std::ops::Range<usize> {
        match self.boundary {
            Boundary::Periodic => 0..self.n,
            Boundary::Clamped => {
                let skip = ((self.n as f64 * fraction).ceil() as usize).min((self.n - 1) / 2);
                skip..self.n - skip
            }
        }
    }

    /// Piecewise-linear read of a grid function. Periodic grids wrap the
    /// query by whole periods first; clamped grids pin it to the span and
    /// report the clamp in the second slot.
    pub fn interpolate(&self, values: &[f64], x: f64) -> (f64, bool) {
        debug_assert_eq!(values.len(), self.n);
        let (x, clamped) = match self.boundary {
            Boundary::Periodic => {
                let period = self.hi - self.lo;
                let wrapped = self.lo + (x - self.lo).rem_euclid(period);
                // rem_euclid can land exactly on the period for tiny negative
                // offsets; fold that onto the left endpoint's twin.
                (if wrapped >= self.hi { self.lo } else { wrapped }, false)
            }
            Boundary::Clamped => {
                if x < self.lo {
                    (self.lo, true)
                } else if x > self.hi {
                    (self.hi, true)
                } else {
                    (x, false)
                }
            }
        };
        let h = self.spacing();
        let pos = (x - self.lo) / h;
        let i = (pos.floor() as usize).min(self.n - 2);
        let lam = (pos - i as f64).clamp(0.0, 1.0);
        // Incremental form keeps node values exact and preserves ordering.
        (values[i] + lam * (values[i + 1] - values[i]), clamped)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nodes_are_read_back_exactly() {
        let grid = Grid::new(-2.0, 2.0, 129, Boundary::Clamped).unwrap();
        let values: Vec<f64> = (0..129).map(|i| (i as f64).sin()).collect();
        for i in 0..129 {
            let (v, clamped) = grid.interpolate(&values, grid.point(i));
            assert_eq!(v, values[i]);
            assert!(!clamped);
        }
    }

    #[test]
    fn periodic_queries_wrap_by_whole_periods() {
        let grid = Grid::new(0.0, 1.0, 65, Boundary::Periodic).unwrap();
        let values = grid.sample(|x| (2.0 * std::f64::consts::PI * x).sin());
        for x in [0.3, 0.71, 0.05] {
            let (a, _) = grid.interpolate(&values, x);
            let (b, _) = grid.interpolate(&values, x + 3.0);
            let (c, _) = grid.interpolate(&values, x - 2.0);
            assert!((a - b).abs() < 1e-12);
            assert!((a - c).abs() < 1e-12);
        }
    }

    #[test]
    fn clamped_queries_pin_to_the_span_and_say_so() {
        let grid = Grid::new(0.0, 1.0, 11, Boundary::Clamped).unwrap();
        let values: Vec<f64> = (0..11).map(|i| i as f64).collect();
        let (v, clamped) = grid.interpolate(&values, 1.7);
        assert_eq!(v, 10.0);
        assert!(clamped);
        let (v, clamped) = grid.interpolate(&values, -0.3);
        assert_eq!(v, 0.0);
        assert!(clamped);
    }

    #[test]
    fn neighbors_wrap_only_on_periodic_grids() {
        let p = Grid::new(0.0, 1.0, 5, Boundary::Periodic).unwrap();
        assert_eq!(p.left_of(0), 3);
        assert_eq!(p.right_of(3), 4);
        assert_eq!(p.right_of(4), 1);
        let c = Grid::new(0.0, 1.0, 5, Boundary::Clamped).unwrap();
        assert_eq!(c.left_of(0), 0);
        assert_eq!(c.right_of(4), 4);
    }

    #[test]
    fn constant_functions_interpolate_bit_exactly() {
        let grid = Grid::new(-1.0, 1.0, 33, Boundary::Clamped).unwrap();
        let values = vec![0.123456789; 33];
        for k in 0..100 {
            let x = -1.0 + 2.0 * k as f64 / 99.0;
            let (v, _) = grid.interpolate(&values, x);
            assert_eq!(v, 0.123456789);
        }
    }

    #[test]
    fn error_window_trims_only_clamped_sides() {
        let p = Grid::new(0.0, 1.0, 100, Boundary::Periodic).unwrap();
        assert_eq!(p.error_window(0.05), 0..100);
        let c = Grid::new(0.0, 1.0, 100, Boundary::Clamped).unwrap();
        assert_eq!(c.error_window(0.05), 5..95);
        // Rounds the margin up and never crosses the midpoint.
        let tiny = Grid::new(0.0, 1.0, 5, Boundary::Clamped).unwrap();
        assert_eq!(tiny.error_window(0.05), 1..4);
        assert!(!tiny.error_window(0.9).is_empty());
    }
}
