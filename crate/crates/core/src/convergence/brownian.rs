use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::domain::TimeGrid;
use crate::error::{Result, SdeError};

/// Wiener increments of a `dim`-dimensional Brownian path on a uniform grid.
///
/// Storage is step-major, so `increment(n)` is the `dim`-vector for step `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianLattice {
    dim: usize,
    steps: usize,
    dt: f64,
    increments: Vec<f64>,
    seed: u64,
    realization: u64,
}

/// Stream `realization` of the ChaCha8 generator seeded with `seed`.
pub fn realization_rng(seed: u64, realization: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(realization);
    rng
}

/// Draws `N(0, dt)` increments for every step of `grid`. The result depends
/// only on `(seed, realization)`.
pub fn generate_lattice(dim: usize, grid: &TimeGrid, seed: u64, realization: u64) -> BrownianLattice {
    let mut rng = realization_rng(seed, realization);
    let scale = grid.dt.sqrt();
    let increments = (0..grid.steps * dim)
        .map(|_| scale * Distribution::<f64>::sample(&StandardNormal, &mut rng))
        .collect();
    BrownianLattice {
        dim,
        steps: grid.steps,
        dt: grid.dt,
        increments,
        seed,
        realization,
    }
}

impl BrownianLattice {
    /// Wraps explicit increments, step-major.
    pub fn from_increments(dim: usize, dt: f64, increments: Vec<f64>) -> Result<Self> {
        if dim == 0 || !increments.len().is_multiple_of(dim) {
            return Err(SdeError::InvalidGrid(format!(
                "{} increments do not split into steps of dimension {dim}",
                increments.len()
            )));
        }
        Ok(Self {
            dim,
            steps: increments.len() / dim,
            dt,
            increments,
            seed: 0,
            realization: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn realization(&self) -> u64 {
        self.realization
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.increments
    }

    pub fn increment(&self, step: usize) -> &[f64] {
        &self.increments[step * self.dim..(step + 1) * self.dim]
    }

    /// `W(T) - W(0)` per component, summed step by step.
    pub fn totals(&self) -> Vec<f64> {
        let mut total = vec![0.0; self.dim];
        for chunk in self.increments.chunks_exact(self.dim) {
            for (t, dw) in total.iter_mut().zip(chunk) {
                *t += dw;
            }
        }
        total
    }

    /// Brownian values `W(t_n)` at every `stride`-th grid point, starting at 0.
    pub fn path_values(&self, stride: usize) -> Vec<Vec<f64>> {
        let mut w = vec![0.0; self.dim];
        let mut out = vec![w.clone()];
        for (n, chunk) in self.increments.chunks_exact(self.dim).enumerate() {
            for (wi, dw) in w.iter_mut().zip(chunk) {
                *wi += dw;
            }
            if (n + 1) % stride == 0 {
                out.push(w.clone());
            }
        }
        out
    }

    /// Lattice with step `factor * dt` whose increments sum `factor`
    /// consecutive fine increments.
    pub fn coarsen(&self, factor: usize) -> Result<BrownianLattice> {
        if factor == 0 || !self.steps.is_multiple_of(factor) {
            return Err(SdeError::InvalidGrid(format!(
                "coarsening factor {factor} does not divide {} steps",
                self.steps
            )));
        }
        if factor == 1 {
            return Ok(self.clone());
        }
        let d = self.dim;
        let coarse_steps = self.steps / factor;
        let mut increments = vec![0.0; coarse_steps * d];
        for (block, out) in self
            .increments
            .chunks_exact(factor * d)
            .zip(increments.chunks_exact_mut(d))
        {
            for fine in block.chunks_exact(d) {
                for (o, dw) in out.iter_mut().zip(fine) {
                    *o += dw;
                }
            }
        }
        Ok(BrownianLattice {
            dim: d,
            steps: coarse_steps,
            dt: self.dt * factor as f64,
            increments,
            seed: self.seed,
            realization: self.realization,
        })
    }
}
