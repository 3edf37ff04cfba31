//! Riesz-potential convolution `|x|^{-μ} ∗ h` on the periodic grid.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::operators::spectral::FftNd;
use crate::special::unit_ball_volume;

/// Sampled Riesz kernel and its discrete spectrum.
///
/// The kernel is `|z|^{-μ}` at minimum-image offsets. The origin cell carries
/// the cell mean: exact in one dimension, and the mean over the ball of equal
/// volume otherwise.
#[derive(Debug, Clone)]
pub struct HartreeCache {
    grid: GridSpec,
    mu: f64,
    kernel: Vec<f64>,
    spectrum: Vec<f64>,
    fft: FftNd,
}

impl HartreeCache {
    pub fn new(grid: GridSpec, mu: f64) -> Result<Self> {
        if !(mu > 0.0 && mu < grid.dim as f64) {
            return Err(Error::KernelNotIntegrable { mu, dim: grid.dim });
        }
        let h = grid.spacing();
        let kernel: Vec<f64> = (0..grid.len())
            .map(|i| {
                let idx = grid.multi_index(i);
                let r2: f64 = (0..grid.dim)
                    .map(|a| (grid.signed_offset(idx[a]) as f64 * h).powi(2))
                    .sum();
                if r2 == 0.0 {
                    origin_cell_mean(grid.dim, mu, h)
                } else {
                    r2.powf(-mu / 2.0)
                }
            })
            .collect();
        let fft = FftNd::new(grid);
        let mut data: Vec<Complex64> = kernel.iter().map(|&k| Complex64::new(k, 0.0)).collect();
        fft.forward(&mut data);
        let spectrum = data.iter().map(|c| c.re).collect();
        Ok(Self {
            grid,
            mu,
            kernel,
            spectrum,
            fft,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Kernel value at the cell offset with flat index `flat` (axis entries
    /// read as signed minimum-image offsets).
    pub fn kernel(&self) -> &[f64] {
        &self.kernel
    }

    /// Kernel value for a signed cell offset.
    pub fn kernel_at(&self, offset: &[i64]) -> f64 {
        let m = self.grid.points as i64;
        let mut idx = [0usize; crate::grid::MAX_DIM];
        for (a, &o) in offset.iter().enumerate().take(self.grid.dim) {
            idx[a] = o.rem_euclid(m) as usize;
        }
        self.kernel[self.grid.flat_index(&idx)]
    }

    pub fn spectrum(&self) -> &[f64] {
        &self.spectrum
    }

    pub fn min_spectrum(&self) -> f64 {
        self.spectrum.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `(|x|^{-μ} ∗ h)(x_i) = Σ_j K(x_i - x_j) h_j h^N`.
    pub fn convolve(&self, h: &[f64]) -> Vec<f64> {
        assert_eq!(h.len(), self.grid.len());
        let mut data: Vec<Complex64> = h.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fft.forward(&mut data);
        data.iter_mut().zip(&self.spectrum).for_each(|(v, k)| *v *= k);
        self.fft.inverse(&mut data);
        let vol = self.grid.cell_volume();
        data.iter().map(|c| c.re * vol).collect()
    }
}

fn origin_cell_mean(dim: usize, mu: f64, h: f64) -> f64 {
    if dim == 1 {
        (h / 2.0).powf(-mu) / (1.0 - mu)
    } else {
        let n = dim as f64;
        let radius = (h.powi(dim as i32) / unit_ball_volume(dim)).powf(1.0 / n);
        n / (n - mu) * radius.powf(-mu)
    }
}

/// One-shot convolution; builds the cache on every call.
pub fn riesz_convolve(h: &[f64], grid: GridSpec, mu: f64) -> Result<Vec<f64>> {
    Ok(HartreeCache::new(grid, mu)?.convolve(h))
}
