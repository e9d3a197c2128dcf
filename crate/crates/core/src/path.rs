//! Sampled paths on [0, T] with the exact-total-variation toolkit: p-variation
//! by dynamic programming, reparametrization by a monotone time change, and
//! sup-norm distance. Values between samples are read piecewise-linearly.

use crate::error::{Error, Result};
use crate::time_change::TimeChange;

/// Hard cap on the sample count accepted by the quadratic p-variation solver.
pub const PVAR_SAMPLE_CAP: usize = 4096;

/// A d-dimensional path sampled at strictly increasing times starting at 0.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledPath {
    times: Vec<f64>,
    /// Sample-major storage: `values[i * dim + k]` is coordinate k at times[i].
    values: Vec<f64>,
    dim: usize,
}

impl SampledPath {
    pub fn new(times: Vec<f64>, values: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter {
                name: "dim",
                reason: "must be at least 1".into(),
            });
        }
        if times.len() < 2 {
            return Err(Error::TooFewSamples {
                needed: 2,
                got: times.len(),
            });
        }
        if values.len() != times.len() * dim {
            return Err(Error::DimensionMismatch {
                expected: times.len() * dim,
                got: values.len(),
            });
        }
        if !times[0].is_finite() || times[0] != 0.0 {
            return Err(Error::BadSampleTimes { index: 0 });
        }
        for i in 1..times.len() {
            if !times[i].is_finite() || times[i] <= times[i - 1] {
                return Err(Error::BadSampleTimes { index: i });
            }
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "path samples",
            });
        }
        Ok(Self { times, values, dim })
    }

    /// Scalar (d = 1) convenience constructor.
    pub fn scalar(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Self::new(times, values, 1)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn sample(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    /// Piecewise-linear evaluation. Queries outside [0, T] clamp to the ends.
    pub fn eval(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.eval_into(t, &mut out);
        out
    }

    pub fn eval_into(&self, t: f64, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.dim);
        if t <= self.times[0] {
            out.copy_from_slice(self.sample(0));
            return;
        }
        if t >= self.horizon() {
            out.copy_from_slice(self.sample(self.len() - 1));
            return;
        }
        let i = match self.times.binary_search_by(|x| x.partial_cmp(&t).unwrap()) {
            Ok(i) => {
                out.copy_from_slice(self.sample(i));
                return;
            }
            Err(i) => i - 1,
        };
        let lambda = (t - self.times[i]) / (self.times[i + 1] - self.times[i]);
        let a = self.sample(i);
        let b = self.sample(i + 1);
        for k in 0..self.dim {
            // Incremental form: exact at nodes and for locally constant data.
            out[k] = a[k] + lambda * (b[k] - a[k]);
        }
    }

    pub fn eval_scalar(&self, t: f64) -> f64 {
        debug_assert_eq!(self.dim, 1);
        let mut out = [0.0];
        self.eval_into(t, &mut out);
        out[0]
    }

    /// Exact p-variation over the sample points: the supremum over all
    /// sub-partitions of (sum of |increment|^p)^(1/p). Dynamic programming in
    /// O(N^2) distance evaluations; N is capped at [`PVAR_SAMPLE_CAP`].
    pub fn p_variation(&self, p: f64) -> Result<f64> {
        if !(p >= 1.0) || !p.is_finite() {
            return Err(Error::InvalidParameter {
                name: "p",
                reason: format!("need 1 <= p < inf, got {p}"),
            });
        }
        let n = self.len();
        if n > PVAR_SAMPLE_CAP {
            return Err(Error::PathTooLong {
                len: n,
                cap: PVAR_SAMPLE_CAP,
            });
        }
        // cum[j]: largest sum of p-th-power increments over partitions of 0..=j
        // that end at j. Every prefix maximum ends at the last point because
        // appending a point never decreases the best sum (triangle inequality
        // is not needed: the empty extension dist(j, j) = 0 is always allowed
        // via taking m = j - 1 ... the recursion considers all m < j).
        let mut cum = vec![0.0_f64; n];
        for j in 1..n {
            let mut best = f64::NEG_INFINITY;
            for m in 0..j {
                let c = cum[m] + self.dist(m, j).powf(p);
                if c > best {
                    best = c;
                }
            }
            cum[j] = best;
        }
        Ok(cum[n - 1].powf(1.0 / p))
    }

    fn dist(&self, i: usize, j: usize) -> f64 {
        let a = self.sample(i);
        let b = self.sample(j);
        let mut s = 0.0;
        for k in 0..self.dim {
            let d = b[k] - a[k];
            s += d * d;
        }
        s.sqrt()
    }

    /// Runs the path through a nondecreasing surjective time change of the
    /// same horizon. The output mesh is the union of the time change's
    /// breakpoints and the preimages of this path's sample times, so the
    /// composition is again exactly piecewise linear on its mesh.
    pub fn reparametrize(&self, tc: &TimeChange) -> Result<SampledPath> {
        let t_end = self.horizon();
        if !close(tc.horizon(), t_end) {
            return Err(Error::HorizonMismatch {
                left: tc.horizon(),
                right: t_end,
            });
        }
        let rep = tc.to_sampled();
        let mut mesh: Vec<f64> = rep.times().to_vec();
        // Preimages of sample times under the piecewise-linear time change.
        for seg in 0..rep.len() - 1 {
            let (ta, tb) = (rep.times()[seg], rep.times()[seg + 1]);
            let (va, vb) = (rep.sample(seg)[0], rep.sample(seg + 1)[0]);
            if vb <= va {
                continue;
            }
            for &s in self.times() {
                if s > va && s < vb {
                    mesh.push(ta + (s - va) / (vb - va) * (tb - ta));
                }
            }
        }
        mesh.sort_by(|a, b| a.partial_cmp(b).unwrap());
        mesh.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * t_end.max(1.0));
        let mut values = Vec::with_capacity(mesh.len() * self.dim);
        let mut buf = vec![0.0; self.dim];
        for &t in &mesh {
            self.eval_into(tc.eval(t), &mut buf);
            values.extend_from_slice(&buf);
        }
        // Pin the endpoints so surjectivity is bit-exact.
        if let Some(first) = mesh.first_mut() {
            *first = 0.0;
        }
        SampledPath::new(mesh, values, self.dim)
    }

    /// Sup-norm distance: sup over t of the Euclidean norm of the pointwise
    /// difference. Exact for piecewise-linear paths because the union mesh of
    /// both sample sets is used and on each union interval each coordinate of
    /// the difference is linear... the norm is convex there, so the maximum
    /// sits at a mesh point.
    pub fn uniform_distance(&self, other: &SampledPath) -> Result<f64> {
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
        let mut mesh: Vec<f64> = self
            .times
            .iter()
            .chain(other.times.iter())
            .copied()
            .collect();
        mesh.sort_by(|a, b| a.partial_cmp(b).unwrap());
        mesh.dedup();
        let mut worst = 0.0_f64;
        let mut a = vec![0.0; self.dim];
        let mut b = vec![0.0; self.dim];
        for &t in &mesh {
            self.eval_into(t, &mut a);
            other.eval_into(t, &mut b);
            let mut s = 0.0;
            for k in 0..self.dim {
                let d = a[k] - b[k];
                s += d * d;
            }
            worst = worst.max(s.sqrt());
        }
        Ok(worst)
    }

    /// Time reversal t -> T - t, mapped back onto [0, T].
    pub fn reversed(&self) -> SampledPath {
        let t_end = self.horizon();
        let n = self.len();
        let mut times = Vec::with_capacity(n);
        let mut values = Vec::with_capacity(n * self.dim);
        for i in (0..n).rev() {
            times.push(t_end - self.times[i]);
            values.extend_from_slice(self.sample(i));
        }
        times[0] = 0.0;
        times[n - 1] = t_end;
        SampledPath {
            times,
            values,
            dim: self.dim,
        }
    }
}

pub(crate) fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Exhaustive reference: tries every sub-partition (subsets of interior
    /// sample indices). Only viable for small N; that is the point.
    fn p_variation_exhaustive(path: &SampledPath, p: f64) -> f64 {
        let n = path.len();
        assert!(n <= 16, "exhaustive oracle is exponential");
        let interior = n - 2;
        let mut best = 0.0_f64;
        for mask in 0..(1_u32 << interior) {
            let mut pts = vec![0];
            for b in 0..interior {
                if mask & (1 << b) != 0 {
                    pts.push(b + 1);
                }
            }
            pts.push(n - 1);
            let sum: f64 = pts.windows(2).map(|w| path.dist(w[0], w[1]).powf(p)).sum();
            best = best.max(sum);
        }
        best.powf(1.0 / p)
    }

    fn zigzag() -> SampledPath {
        SampledPath::scalar(vec![0.0, 0.5, 1.0], vec![0.0, 1.0, 0.0]).unwrap()
    }

    #[test]
    fn zigzag_quadratic_variation_is_sqrt_two() {
        let path = zigzag();
        let got = path.p_variation(2.0).unwrap();
        assert!((got - 2.0_f64.sqrt()).abs() < 1e-15, "got {got}");
        let oracle = p_variation_exhaustive(&path, 2.0);
        assert!((got - oracle).abs() < 1e-15);
    }

    #[test]
    fn p_one_is_total_variation() {
        let path = SampledPath::scalar(
            vec![0.0, 0.25, 0.5, 0.75, 1.0],
            vec![0.0, 0.7, 0.2, 0.9, 0.4],
        )
        .unwrap();
        let total: f64 = (1..path.len()).map(|i| path.dist(i - 1, i)).sum();
        let got = path.p_variation(1.0).unwrap();
        assert!(
            (got - total).abs() < 1e-12,
            "got {got}, total variation {total}"
        );
    }

    #[test]
    fn monotone_path_pvar_is_endpoint_increment() {
        let path = SampledPath::scalar(vec![0.0, 0.3, 1.0], vec![0.0, 0.4, 1.5]).unwrap();
        for p in [1.0, 1.5, 2.0, 2.8] {
            let got = path.p_variation(p).unwrap();
            assert!((got - 1.5).abs() < 1e-12, "p = {p}: got {got}");
        }
    }

    #[test]
    fn sample_cap_enforced() {
        let n = PVAR_SAMPLE_CAP + 1;
        let times: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let values: Vec<f64> = (0..n).map(|i| (i % 2) as f64).collect();
        let path = SampledPath::scalar(times, values).unwrap();
        assert!(matches!(
            path.p_variation(2.0),
            Err(Error::PathTooLong { .. })
        ));
    }

    #[test]
    fn uniform_distance_is_a_metric_on_examples() {
        let a = zigzag();
        let b = SampledPath::scalar(vec![0.0, 1.0], vec![0.0, 0.0]).unwrap();
        assert_eq!(a.uniform_distance(&a).unwrap(), 0.0);
        let d_ab = a.uniform_distance(&b).unwrap();
        let d_ba = b.uniform_distance(&a).unwrap();
        assert_eq!(d_ab, d_ba);
        assert!((d_ab - 1.0).abs() < 1e-15);
    }

    #[test]
    fn reversal_is_an_involution() {
        let path = SampledPath::new(
            vec![0.0, 0.25, 0.6, 1.0],
            vec![0.0, 0.0, 1.0, -1.0, 0.5, 2.0, -0.25, 0.125],
            2,
        )
        .unwrap();
        assert_eq!(path.reversed().reversed(), path);
    }

    #[test]
    fn rejects_misordered_times() {
        assert!(matches!(
            SampledPath::scalar(vec![0.0, 0.5, 0.5], vec![0.0, 1.0, 2.0]),
            Err(Error::BadSampleTimes { index: 2 })
        ));
        assert!(matches!(
            SampledPath::scalar(vec![0.1, 0.5, 1.0], vec![0.0, 1.0, 2.0]),
            Err(Error::BadSampleTimes { index: 0 })
        ));
    }

    fn small_path_strategy() -> impl Strategy<Value = SampledPath> {
        (2usize..9, 1usize..3).prop_flat_map(|(n, dim)| {
            proptest::collection::vec(-10.0_f64..10.0, n * dim).prop_map(move |values| {
                let times: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
                SampledPath::new(times, values, dim).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn dp_matches_exhaustive_oracle(path in small_path_strategy(), p in 1.0_f64..3.0) {
            let fast = path.p_variation(p).unwrap();
            let slow = p_variation_exhaustive(&path, p);
            prop_assert!((fast - slow).abs() <= 1e-9 * (1.0 + slow), "dp {fast} vs oracle {slow}");
        }

        #[test]
        fn pvar_nonincreasing_in_p(path in small_path_strategy()) {
            let p1 = path.p_variation(1.2).unwrap();
            let p2 = path.p_variation(2.0).unwrap();
            let p3 = path.p_variation(2.9).unwrap();
            prop_assert!(p1 >= p2 - 1e-9 * (1.0 + p1));
            prop_assert!(p2 >= p3 - 1e-9 * (1.0 + p2));
        }
    }
}
