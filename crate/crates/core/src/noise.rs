//! Lattice space-time white noise with per-replica, per-component streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::grid::{Field, Grid1D};

/// One time slice of the two independent noises. Node values are
/// `N(0, 1/(dx·dt))`, so that integrating against a space-time cell of size
/// `dx × dt` reproduces the white-noise covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSlice {
    pub components: [Field; 2],
}

/// Deterministic noise generator for one replica.
///
/// Component `c` of replica `k` draws from ChaCha8 stream `2k + c` under the
/// master seed, so every replica is reproducible on its own and no two
/// (replica, component) pairs share a stream.
#[derive(Debug, Clone)]
pub struct NoiseSource {
    seed: u64,
    replica: u64,
    streams: [ChaCha8Rng; 2],
}

impl NoiseSource {
    pub fn new(seed: u64, replica: u64) -> Self {
        let stream = |c: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(2 * replica + c);
            rng
        };
        Self {
            seed,
            replica,
            streams: [stream(0), stream(1)],
        }
    }

    /// Same streams with the component roles exchanged.
    pub fn swapped(mut self) -> Self {
        self.streams.swap(0, 1);
        self
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn replica(&self) -> u64 {
        self.replica
    }

    /// Fills `out` with standard normals from the stream of `component`.
    pub fn fill_standard(&mut self, component: usize, out: &mut [f64]) {
        let rng = &mut self.streams[component];
        for v in out.iter_mut() {
            *v = StandardNormal.sample(rng);
        }
    }
}

/// Draws one noise slice; advances both streams by `n_nodes` normals.
pub fn sample_noise(grid: &Grid1D, dt: f64, source: &mut NoiseSource) -> NoiseSlice {
    let sd = 1.0 / (grid.dx() * dt).sqrt();
    let mut draw = |c: usize| {
        let mut v = vec![0.0; grid.n_nodes()];
        source.fill_standard(c, &mut v);
        for x in v.iter_mut() {
            *x *= sd;
        }
        Field::from_vec_unchecked(*grid, v)
    };
    let a = draw(0);
    let b = draw(1);
    NoiseSlice { components: [a, b] }
}
