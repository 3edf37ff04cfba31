//! Separable N-dimensional FFT and Fourier multipliers on the periodic box.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::field::Field;
use crate::grid::GridSpec;

/// Forward and inverse transforms over every axis of a grid.
#[derive(Clone)]
pub struct FftNd {
    grid: GridSpec,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for FftNd {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FftNd").field("grid", &self.grid).finish()
    }
}

impl FftNd {
    pub fn new(grid: GridSpec) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            grid,
            forward: planner.plan_fft_forward(grid.points),
            inverse: planner.plan_fft_inverse(grid.points),
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.forward);
    }

    /// Inverse transform, normalized so that `inverse(forward(x)) = x`.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inverse);
        let norm = 1.0 / self.grid.len() as f64;
        data.iter_mut().for_each(|v| *v *= norm);
    }

    fn transform(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        assert_eq!(data.len(), self.grid.len());
        let m = self.grid.points;
        let strides = self.grid.strides();
        let mut line = vec![Complex64::default(); m];
        let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
        for &stride in strides.iter().take(self.grid.dim) {
            if stride == 1 {
                for chunk in data.chunks_exact_mut(m) {
                    plan.process_with_scratch(chunk, &mut scratch);
                }
                continue;
            }
            // Line starts: every index whose coordinate along this axis is zero.
            let block = stride * m;
            for base in (0..data.len()).step_by(block) {
                for offset in 0..stride {
                    let start = base + offset;
                    for (k, v) in line.iter_mut().enumerate() {
                        *v = data[start + k * stride];
                    }
                    plan.process_with_scratch(&mut line, &mut scratch);
                    for (k, v) in line.iter().enumerate() {
                        data[start + k * stride] = *v;
                    }
                }
            }
        }
    }

    /// `|ξ|²` for every FFT bin, in flat order.
    pub fn wavenumber_sq(&self) -> Vec<f64> {
        let g = &self.grid;
        (0..g.len())
            .map(|i| {
                let idx = g.multi_index(i);
                (0..g.dim).map(|a| g.wavenumber(idx[a]).powi(2)).sum()
            })
            .collect()
    }

    /// Applies a real Fourier multiplier given per bin.
    pub fn apply_multiplier(&self, u: &Field, symbol: &[f64]) -> Field {
        let mut data = u.values.clone();
        self.forward(&mut data);
        data.iter_mut().zip(symbol).for_each(|(v, s)| *v *= s);
        self.inverse(&mut data);
        Field::from_values(u.grid, data)
    }
}

/// `(-Δ)^s` as the Fourier multiplier `|ξ|^{2s}` with periodic wavenumbers.
#[derive(Debug, Clone)]
pub struct SpectralLaplacian {
    fft: FftNd,
    symbol: Vec<f64>,
}

impl SpectralLaplacian {
    pub fn new(grid: GridSpec, s: f64) -> Self {
        let fft = FftNd::new(grid);
        let symbol = fft.wavenumber_sq().into_iter().map(|k2| k2.powf(s)).collect();
        Self { fft, symbol }
    }

    pub fn symbol(&self) -> &[f64] {
        &self.symbol
    }

    pub fn apply(&self, u: &Field) -> Field {
        self.fft.apply_multiplier(u, &self.symbol)
    }
}

/// One-shot spectral fractional Laplacian.
pub fn spectral_frac_laplacian(u: &Field, s: f64) -> Field {
    SpectralLaplacian::new(u.grid, s).apply(u)
}

/// The preconditioner `(1 + |ξ|^{2s} + V0)^{-1}` and its inverse.
#[derive(Debug, Clone)]
pub struct Preconditioner {
    fft: FftNd,
    symbol: Vec<f64>,
    inverse_symbol: Vec<f64>,
}

impl Preconditioner {
    pub fn new(grid: GridSpec, s: f64, v0: f64) -> Self {
        let fft = FftNd::new(grid);
        let inverse_symbol: Vec<f64> = fft
            .wavenumber_sq()
            .into_iter()
            .map(|k2| 1.0 + k2.powf(s) + v0)
            .collect();
        let symbol = inverse_symbol.iter().map(|v| 1.0 / v).collect();
        Self {
            fft,
            symbol,
            inverse_symbol,
        }
    }

    pub fn apply(&self, g: &Field) -> Field {
        self.fft.apply_multiplier(g, &self.symbol)
    }

    pub fn apply_inverse(&self, g: &Field) -> Field {
        self.fft.apply_multiplier(g, &self.inverse_symbol)
    }
}
