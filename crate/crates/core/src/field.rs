//! Coefficient fields for state equations: one drift field paired with the
//! slow channel and a family of noise fields paired with the rough channels.
//! The stepper's second-order term needs directional derivatives of the
//! noise fields, so those are part of the contract rather than being
//! approximated by differencing inside the solver.

use crate::error::{Error, Result};

pub trait VectorField: Send + Sync {
    fn state_dim(&self) -> usize;

    /// Number of rough driving channels.
    fn channels(&self) -> usize;

    /// Drift V(y), integrated against the slow clock.
    fn drift(&self, y: &[f64], out: &mut [f64]);

    /// Noise field W_j(y) for channel j.
    fn noise(&self, j: usize, y: &[f64], out: &mut [f64]);

    /// Directional derivative DW_outer(y)[direction].
    fn noise_derivative(&self, outer: usize, y: &[f64], direction: &[f64], out: &mut [f64]);
}

/// Affine coefficients: V(y) = A y + a, W_j(y) = B_j y + b_j. Covers the
/// linear test systems exactly and keeps the noise derivatives closed-form
/// (DW_j is just B_j).
#[derive(Debug, Clone)]
pub struct AffineField {
    state_dim: usize,
    drift_matrix: Vec<f64>,
    drift_offset: Vec<f64>,
    noise_matrices: Vec<Vec<f64>>,
    noise_offsets: Vec<Vec<f64>>,
}

impl AffineField {
    pub fn new(
        state_dim: usize,
        drift_matrix: Vec<f64>,
        drift_offset: Vec<f64>,
        noise_matrices: Vec<Vec<f64>>,
        noise_offsets: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let n = state_dim;
        if n == 0 {
            return Err(Error::InvalidParameter {
                name: "state_dim",
                reason: "need at least one state".into(),
            });
        }
        if drift_matrix.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: drift_matrix.len(),
            });
        }
        if drift_offset.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: drift_offset.len(),
            });
        }
        if noise_matrices.len() != noise_offsets.len() {
            return Err(Error::DimensionMismatch {
                expected: noise_matrices.len(),
                got: noise_offsets.len(),
            });
        }
        for m in &noise_matrices {
            if m.len() != n * n {
                return Err(Error::DimensionMismatch {
                    expected: n * n,
                    got: m.len(),
                });
            }
        }
        for b in &noise_offsets {
            if b.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: b.len(),
                });
            }
        }
        Ok(Self {
            state_dim,
            drift_matrix,
            drift_offset,
            noise_matrices,
            noise_offsets,
        })
    }

    /// Purely linear system: V(y) = A y, W_j(y) = B_j y.
    pub fn linear(
        state_dim: usize,
        drift_matrix: Vec<f64>,
        noise_matrices: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let zeros = vec![0.0; state_dim];
        let offsets = vec![zeros.clone(); noise_matrices.len()];
        Self::new(state_dim, drift_matrix, zeros, noise_matrices, offsets)
    }

    /// No drift: the state moves only with the rough channels.
    pub fn driftless(
        state_dim: usize,
        noise_matrices: Vec<Vec<f64>>,
        noise_offsets: Vec<Vec<f64>>,
    ) -> Result<Self> {
        Self::new(
            state_dim,
            vec![0.0; state_dim * state_dim],
            vec![0.0; state_dim],
            noise_matrices,
            noise_offsets,
        )
    }
}

fn affine_apply(n: usize, matrix: &[f64], offset: &[f64], y: &[f64], out: &mut [f64]) {
    for r in 0..n {
        let mut acc = offset[r];
        for c in 0..n {
            acc += matrix[r * n + c] * y[c];
        }
        out[r] = acc;
    }
}

impl VectorField for AffineField {
    fn state_dim(&self) -> usize {
        self.state_dim
    }

    fn channels(&self) -> usize {
        self.noise_matrices.len()
    }

    fn drift(&self, y: &[f64], out: &mut [f64]) {
        affine_apply(
            self.state_dim,
            &self.drift_matrix,
            &self.drift_offset,
            y,
            out,
        );
    }

    fn noise(&self, j: usize, y: &[f64], out: &mut [f64]) {
        affine_apply(
            self.state_dim,
            &self.noise_matrices[j],
            &self.noise_offsets[j],
            y,
            out,
        );
    }

    fn noise_derivative(&self, outer: usize, _y: &[f64], direction: &[f64], out: &mut [f64]) {
        let n = self.state_dim;
        for r in 0..n {
            let mut acc = 0.0;
            for c in 0..n {
                acc += self.noise_matrices[outer][r * n + c] * direction[c];
            }
            out[r] = acc;
        }
    }
}
