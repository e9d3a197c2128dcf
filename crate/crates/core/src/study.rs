//! Convergence studies: run a solve at a ladder of period counts, measure
//! each run against a reference, fit a rate on the log-log cloud, and count
//! how often the error trend inverts. The reference is either supplied
//! (closed form, independent oracle) or produced by the same solver at a
//! much finer period count; the latter is self-convergence and is labeled
//! as such by callers.

use crate::error::{Error, Result};
use crate::path::SampledPath;
use std::time::Instant;

/// Errors a study outcome can report against a reference of the same shape.
pub trait Comparable: Sized {
    /// Gap at the terminal object: endpoint distance for trajectories,
    /// root-mean-square over nodes for grid functions.
    fn terminal_gap(&self, reference: &Self) -> Result<f64>;

    /// Worst-case gap: over time for trajectories, over nodes for grid
    /// functions.
    fn sup_gap(&self, reference: &Self) -> Result<f64>;
}

impl Comparable for SampledPath {
    fn terminal_gap(&self, reference: &Self) -> Result<f64> {
        if self.dim() != reference.dim() {
            return Err(Error::DimensionMismatch {
                expected: reference.dim(),
                got: self.dim(),
            });
        }
        let a = self.sample(self.len() - 1);
        let b = reference.sample(reference.len() - 1);
        Ok(a.iter()
            .zip(b.iter())
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt())
    }

    fn sup_gap(&self, reference: &Self) -> Result<f64> {
        self.uniform_distance(reference)
    }
}

impl Comparable for Vec<f64> {
    fn terminal_gap(&self, reference: &Self) -> Result<f64> {
        if self.len() != reference.len() {
            return Err(Error::DimensionMismatch {
                expected: reference.len(),
                got: self.len(),
            });
        }
        let ss: f64 = self
            .iter()
            .zip(reference.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        Ok((ss / self.len() as f64).sqrt())
    }

    fn sup_gap(&self, reference: &Self) -> Result<f64> {
        if self.len() != reference.len() {
            return Err(Error::DimensionMismatch {
                expected: reference.len(),
                got: self.len(),
            });
        }
        Ok(self
            .iter()
            .zip(reference.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

#[derive(Debug, Clone)]
pub enum Reference<T> {
    /// Compare against this fixed outcome (closed form or oracle).
    Exact(T),
    /// Compare against the solver itself at this period count; must exceed
    /// four times the largest study point to be meaningfully finer.
    FineSplit(usize),
}

/// Wall-clock seconds per row, or zeros when byte-stable output matters
/// more than timing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Timing {
    Wall,
    Zeroed,
}

#[derive(Debug, Clone)]
pub struct StudyRow {
    pub n: usize,
    pub err_terminal: f64,
    pub err_sup: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct StudyReport {
    pub rows: Vec<StudyRow>,
    /// Least-squares slope of -log(err) against log(n).
    pub order_terminal: f64,
    pub order_sup: f64,
    /// Count of consecutive pairs where the error grew beyond rounding.
    pub inversions_terminal: usize,
    pub inversions_sup: usize,
}

impl StudyReport {
    /// A trend is accepted as decreasing if at most one pair inverts.
    pub fn monotone_ok(&self) -> bool {
        self.inversions_terminal <= 1
    }
}

fn fit_order(ns: &[usize], errs: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = ns
        .iter()
        .zip(errs.iter())
        .map(|(&n, &e)| ((n as f64).ln(), e.max(1e-300).ln()))
        .collect();
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let var: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let cov: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if var == 0.0 {
        return f64::NAN;
    }
    -(cov / var)
}

fn count_inversions(errs: &[f64]) -> usize {
    errs.windows(2)
        .filter(|w| w[1] > w[0] * (1.0 + 1e-12))
        .count()
}

/// Runs the ladder. `ns` must be strictly increasing with at least two
/// entries so the order fit is determined.
pub fn run_study<T: Comparable>(
    ns: &[usize],
    solve: impl Fn(usize) -> Result<T>,
    reference: Reference<T>,
    timing: Timing,
) -> Result<StudyReport> {
    if ns.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: ns.len(),
        });
    }
    for w in ns.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::InvalidParameter {
                name: "ns",
                reason: format!("period counts must increase, got {} then {}", w[0], w[1]),
            });
        }
    }
    let reference = match reference {
        Reference::Exact(r) => r,
        Reference::FineSplit(n_ref) => {
            let max_n = *ns.last().unwrap();
            if n_ref <= 4 * max_n {
                return Err(Error::NoReference {
                    given: format!("n_ref = {n_ref} against max(n_list) = {max_n}"),
                });
            }
            solve(n_ref)?
        }
    };

    let mut rows = Vec::with_capacity(ns.len());
    for &n in ns {
        let start = Instant::now();
        let outcome = solve(n)?;
        let seconds = match timing {
            Timing::Wall => start.elapsed().as_secs_f64(),
            Timing::Zeroed => 0.0,
        };
        rows.push(StudyRow {
            n,
            err_terminal: outcome.terminal_gap(&reference)?,
            err_sup: outcome.sup_gap(&reference)?,
            seconds,
        });
    }
    let terminal: Vec<f64> = rows.iter().map(|r| r.err_terminal).collect();
    let sup: Vec<f64> = rows.iter().map(|r| r.err_sup).collect();
    Ok(StudyReport {
        order_terminal: fit_order(ns, &terminal),
        order_sup: fit_order(ns, &sup),
        inversions_terminal: count_inversions(&terminal),
        inversions_sup: count_inversions(&sup),
        rows,
    })
}
