//! Seeded random fields and potentials for calibration and diagnostics.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::config::{MagneticMode, MagneticPotential};
use crate::field::Field;
use crate::grid::{dot, sub, GridSpec, MAX_DIM};
use crate::operators::FftNd;

pub type SeededRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Shape of the random fields.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldShape {
    /// Width of the Gaussian envelope on Fourier coefficients.
    pub bandwidth: f64,
    /// Range of the spatial window width.
    pub width: (f64, f64),
    /// Window centres are drawn from `[-reach L, reach L]^N`.
    pub reach: f64,
    pub real: bool,
}

impl Default for FieldShape {
    fn default() -> Self {
        Self {
            bandwidth: 2.0,
            width: (1.0, 4.0),
            reach: 0.5,
            real: false,
        }
    }
}

/// A band-limited random field times a Gaussian window.
pub fn random_field(grid: GridSpec, shape: &FieldShape, rng: &mut impl Rng) -> Field {
    let fft = FftNd::new(grid);
    let k2 = fft.wavenumber_sq();
    let mut data: Vec<Complex64> = k2
        .iter()
        .map(|&k2| {
            let env = (-k2 / (2.0 * shape.bandwidth * shape.bandwidth)).exp();
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re, im) * env
        })
        .collect();
    fft.inverse(&mut data);
    let mut centre = [0.0; MAX_DIM];
    for c in centre.iter_mut().take(grid.dim) {
        *c = rng.random_range(-shape.reach..=shape.reach) * grid.extent;
    }
    let width = rng.random_range(shape.width.0..=shape.width.1);
    let values = data
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let d = sub(&grid.point(i), &centre);
            let w = (-dot(&d, &d) / (2.0 * width * width)).exp();
            let v = if shape.real { Complex64::new(v.re, 0.0) } else { *v };
            v * w
        })
        .collect();
    Field::from_values(grid, values)
}

/// Draws fields and rescales each onto the shell `norm_sq(u) = radius_sq`.
#[derive(Debug, Clone)]
pub struct ShellSampler {
    pub grid: GridSpec,
    pub shape: FieldShape,
    pub seed: u64,
}

impl ShellSampler {
    pub fn new(grid: GridSpec, seed: u64) -> Self {
        Self {
            grid,
            shape: FieldShape::default(),
            seed,
        }
    }

    pub fn raw(&self, count: usize) -> Vec<Field> {
        let mut rng = seeded_rng(self.seed);
        (0..count)
            .map(|_| random_field(self.grid, &self.shape, &mut rng))
            .collect()
    }

    pub fn on_shell(&self, count: usize, radius_sq: f64, norm_sq: impl Fn(&Field) -> f64) -> Vec<Field> {
        self.raw(count)
            .into_iter()
            .map(|u| {
                let n = norm_sq(&u);
                u.scaled((radius_sq / n).sqrt())
            })
            .collect()
    }
}

/// A smooth magnetic potential with a random constant part and a few random
/// Fourier modes of moderate wavelength.
pub fn random_magnetic(dim: usize, rng: &mut impl Rng) -> MagneticPotential {
    let vec = |rng: &mut dyn rand::RngCore, scale: f64| -> Vec<f64> {
        (0..dim).map(|_| scale * rng.random_range(-1.0..1.0)).collect()
    };
    let base = vec(rng, 1.0);
    let modes = (0..3)
        .map(|_| MagneticMode {
            amplitude: vec(rng, 0.5),
            wavevector: vec(rng, 1.0),
            phase: rng.random_range(0.0..std::f64::consts::TAU),
        })
        .collect();
    MagneticPotential::Fourier { base, modes }
}
