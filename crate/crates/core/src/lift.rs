//! Level-2 enhancement of a path: per-interval increments together with the
//! iterated integral of the path against itself. Elements multiply by the
//! Chen rule, which is what lets an interval signature be assembled from its
//! pieces, and the piecewise-linear lift of a sampled path is the canonical
//! geometric example.

use crate::error::{Error, Result};
use crate::path::{close, SampledPath};
use crate::time_change::TimeChange;

/// One interval's worth of signature data: the increment `inc` (length d)
/// and the second level `second` stored row-major (`second[a * d + b]`
/// integrates component a against d(component b)).
#[derive(Debug, Clone, PartialEq)]
pub struct Level2 {
    pub inc: Vec<f64>,
    pub second: Vec<f64>,
}

impl Level2 {
    pub fn identity(dim: usize) -> Self {
        Self {
            inc: vec![0.0; dim],
            second: vec![0.0; dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.inc.len()
    }

    /// Chen product: increments add, second levels add plus the cross term
    /// of the earlier increment against the later one.
    pub fn otimes(&self, rhs: &Level2) -> Level2 {
        let d = self.dim();
        debug_assert_eq!(d, rhs.dim());
        let inc: Vec<f64> = (0..d).map(|a| self.inc[a] + rhs.inc[a]).collect();
        let mut second = vec![0.0; d * d];
        for a in 0..d {
            for b in 0..d {
                second[a * d + b] =
                    self.second[a * d + b] + rhs.second[a * d + b] + self.inc[a] * rhs.inc[b];
            }
        }
        Level2 { inc, second }
    }

    /// Group inverse: (-v, v (x) v - M).
    pub fn inverse(&self) -> Level2 {
        let d = self.dim();
        let inc: Vec<f64> = self.inc.iter().map(|v| -v).collect();
        let mut second = vec![0.0; d * d];
        for a in 0..d {
            for b in 0..d {
                second[a * d + b] = self.inc[a] * self.inc[b] - self.second[a * d + b];
            }
        }
        Level2 { inc, second }
    }

    /// Geodesic sub-interval of fraction lambda: the unique rescaling that
    /// keeps pieces composing back to the whole under the Chen product
    /// (lambda^2 on the symmetric part, lambda on the antisymmetric part).
    pub fn scale_geodesic(&self, lambda: f64) -> Level2 {
        let d = self.dim();
        let inc: Vec<f64> = self.inc.iter().map(|v| lambda * v).collect();
        let mut second = vec![0.0; d * d];
        for a in 0..d {
            for b in 0..d {
                let sym = 0.5 * (self.second[a * d + b] + self.second[b * d + a]);
                let anti = 0.5 * (self.second[a * d + b] - self.second[b * d + a]);
                second[a * d + b] = lambda * lambda * sym + lambda * anti;
            }
        }
        Level2 { inc, second }
    }

    /// Largest deviation of the symmetric part from half the squared
    /// increment; zero for geometric elements.
    pub fn geometric_defect(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for a in 0..d {
            for b in 0..d {
                let sym = 0.5 * (self.second[a * d + b] + self.second[b * d + a]);
                worst = worst.max((sym - 0.5 * self.inc[a] * self.inc[b]).abs());
            }
        }
        worst
    }

    /// Homogeneous size: max of the increment's Euclidean length and the
    /// square root of the antisymmetric part's Frobenius norm (the area
    /// scales like length squared, hence the root).
    pub fn homogeneous_norm(&self) -> f64 {
        let d = self.dim();
        let len: f64 = self.inc.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut area_sq = 0.0;
        for a in 0..d {
            for b in 0..d {
                let anti = 0.5 * (self.second[a * d + b] - self.second[b * d + a]);
                area_sq += anti * anti;
            }
        }
        len.max(area_sq.sqrt().sqrt())
    }
}

/// A level-2 rough path over a mesh: cell i carries the signature of
/// [times[i], times[i+1]].
#[derive(Debug, Clone)]
pub struct RoughPath {
    times: Vec<f64>,
    dim: usize,
    cells: Vec<Level2>,
}

impl RoughPath {
    pub fn new(times: Vec<f64>, cells: Vec<Level2>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter {
                name: "dim",
                reason: "need at least one component".into(),
            });
        }
        if times.len() < 2 || cells.len() + 1 != times.len() {
            return Err(Error::TooFewSamples {
                needed: 2,
                got: times.len(),
            });
        }
        if times[0] != 0.0 {
            return Err(Error::BadSampleTimes { index: 0 });
        }
        for i in 1..times.len() {
            if !(times[i] > times[i - 1]) || !times[i].is_finite() {
                return Err(Error::BadSampleTimes { index: i });
            }
        }
        for cell in &cells {
            if cell.dim() != dim || cell.second.len() != dim * dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: cell.dim(),
                });
            }
            if cell
                .inc
                .iter()
                .chain(cell.second.iter())
                .any(|v| !v.is_finite())
            {
                return Err(Error::NonFinite {
                    context: "rough path cell",
                });
            }
        }
        Ok(Self { times, dim, cells })
    }

    /// Canonical lift of a sampled path, linear across each sample cell:
    /// the second level of a chord is half its squared increment.
    pub fn from_path_pwl(path: &SampledPath) -> Self {
        let d = path.dim();
        let mut cells = Vec::with_capacity(path.len() - 1);
        for i in 0..path.len() - 1 {
            let a = path.sample(i);
            let b = path.sample(i + 1);
            let inc: Vec<f64> = (0..d).map(|c| b[c] - a[c]).collect();
            let mut second = vec![0.0; d * d];
            for p in 0..d {
                for q in 0..d {
                    second[p * d + q] = 0.5 * inc[p] * inc[q];
                }
            }
            cells.push(Level2 { inc, second });
        }
        Self {
            times: path.times().to_vec(),
            dim: d,
            cells,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn cells(&self) -> &[Level2] {
        &self.cells
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// Signature over [s, t]: Chen-composes whole cells and takes geodesic
    /// fractions of the straddled ones, so any sub-interval is consistent
    /// with any dissection of itself.
    pub fn segment(&self, s: f64, t: f64) -> Result<Level2> {
        let horizon = self.horizon();
        let tol = 1e-12 * horizon.max(1.0);
        if s < -tol || t > horizon + tol || s > t + tol {
            return Err(Error::OutOfSpan {
                s,
                t,
                lo: 0.0,
                hi: horizon,
            });
        }
        let s = s.clamp(0.0, horizon);
        let t = t.clamp(0.0, horizon);
        if t - s <= 0.0 {
            return Ok(Level2::identity(self.dim));
        }
        let cell_of = |x: f64| -> usize {
            match self
                .times
                .binary_search_by(|probe| probe.partial_cmp(&x).unwrap())
            {
                Ok(i) => i.min(self.cells.len() - 1),
                Err(i) => i - 1,
            }
        };
        let i = cell_of(s);
        let j = cell_of(t.min(horizon));
        // t exactly on a mesh point belongs to the cell ending there.
        let j = if j > 0 && t <= self.times[j] + 0.0 {
            j - 1
        } else {
            j
        };
        let frac = |cell: usize, a: f64, b: f64| -> Level2 {
            let w = self.times[cell + 1] - self.times[cell];
            let lam = ((b - a) / w).clamp(0.0, 1.0);
            if lam >= 1.0 {
                self.cells[cell].clone()
            } else {
                self.cells[cell].scale_geodesic(lam)
            }
        };
        if i == j {
            return Ok(frac(i, s, t));
        }
        let mut acc = frac(i, s, self.times[i + 1]);
        for k in i + 1..j {
            acc = acc.otimes(&self.cells[k]);
        }
        acc = acc.otimes(&frac(j, self.times[j], t));
        Ok(acc)
    }

    /// Runs the path backwards: cell order flips and each cell is inverted,
    /// so the signature of the whole reversed path is the inverse signature.
    pub fn reversed(&self) -> RoughPath {
        let horizon = self.horizon();
        let times: Vec<f64> = self.times.iter().rev().map(|&t| horizon - t).collect();
        let cells: Vec<Level2> = self.cells.iter().rev().map(Level2::inverse).collect();
        RoughPath {
            times,
            dim: self.dim,
            cells,
        }
    }

    /// Pushes the rough path through a clock: the result over [u, v] is the
    /// segment over [clock(u), clock(v)].
    pub fn reparametrize(&self, clock: &TimeChange) -> Result<RoughPath> {
        if !close(self.horizon(), clock.horizon()) {
            return Err(Error::HorizonMismatch {
                left: self.horizon(),
                right: clock.horizon(),
            });
        }
        // The mesh must see every clock breakpoint and every preimage of the
        // rough path's own times, exactly as for sampled paths.
        let guide = SampledPath::scalar(self.times.clone(), self.times.clone()).unwrap();
        let mesh = guide.reparametrize(clock)?.times().to_vec();
        let mut cells = Vec::with_capacity(mesh.len() - 1);
        for w in mesh.windows(2) {
            cells.push(self.segment(clock.eval(w[0]), clock.eval(w[1]))?);
        }
        RoughPath::new(mesh, cells, self.dim)
    }

    /// Uniform rough distance over the common mesh: both paths are read at
    /// every time their meshes share, and the homogeneous size of the
    /// mismatch g_self(0,t)^{-1} (x) g_other(0,t) is maximized.
    pub fn d0_distance(&self, other: &RoughPath) -> Result<f64> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        if !close(self.horizon(), other.horizon()) {
            return Err(Error::HorizonMismatch {
                left: self.horizon(),
                right: other.horizon(),
            });
        }
        let tol = 1e-12 * self.horizon().max(1.0);
        // g1^{-1} (x) g2 expanded so that identical signatures cancel exactly:
        // increment v2 - v1, second level M2 - M1 + v1 (x) (v1 - v2). The
        // homogeneous norm takes a square root, so the naive inverse-product
        // would inflate its own rounding noise to ~1e-8 even for g1 == g2.
        let d = self.dim;
        let gap = |g1: &Level2, g2: &Level2| -> Level2 {
            let inc: Vec<f64> = (0..d).map(|a| g2.inc[a] - g1.inc[a]).collect();
            let mut second = vec![0.0; d * d];
            for a in 0..d {
                for b in 0..d {
                    second[a * d + b] = g2.second[a * d + b] - g1.second[a * d + b]
                        + g1.inc[a] * (g1.inc[b] - g2.inc[b]);
                }
            }
            Level2 { inc, second }
        };
        let mut worst = 0.0f64;
        let (mut i, mut j) = (0usize, 0usize);
        let mut acc_self = Level2::identity(self.dim);
        let mut acc_other = Level2::identity(self.dim);
        let mut shared = 0usize;
        while i < self.times.len() && j < other.times.len() {
            let (a, b) = (self.times[i], other.times[j]);
            if (a - b).abs() <= tol {
                worst = worst.max(gap(&acc_self, &acc_other).homogeneous_norm());
                shared += 1;
                if i < self.cells.len() {
                    acc_self = acc_self.otimes(&self.cells[i]);
                }
                if j < other.cells.len() {
                    acc_other = acc_other.otimes(&other.cells[j]);
                }
                i += 1;
                j += 1;
            } else if a < b {
                if i < self.cells.len() {
                    acc_self = acc_self.otimes(&self.cells[i]);
                }
                i += 1;
            } else {
                if j < other.cells.len() {
                    acc_other = acc_other.otimes(&other.cells[j]);
                }
                j += 1;
            }
        }
        if shared < 2 {
            return Err(Error::MeshMismatch);
        }
        Ok(worst)
    }
}
