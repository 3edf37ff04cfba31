use num_complex::Complex64;

use crate::grid::{GridSpec, Point};

/// Complex samples of a function on a [`GridSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub grid: GridSpec,
    pub values: Vec<Complex64>,
}

impl Field {
    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn from_values(grid: GridSpec, values: Vec<Complex64>) -> Self {
        assert_eq!(values.len(), grid.len(), "field length must be M^N");
        Self { grid, values }
    }

    pub fn from_fn(grid: GridSpec, mut f: impl FnMut(&Point) -> Complex64) -> Self {
        let values = grid.points_iter().map(|p| f(&p)).collect();
        Self { grid, values }
    }

    pub fn from_real(grid: GridSpec, re: &[f64]) -> Self {
        Self::from_values(grid, re.iter().map(|&r| Complex64::new(r, 0.0)).collect())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    pub fn modulus(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm()).collect()
    }

    pub fn modulus_sq(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm_sqr()).collect()
    }

    pub fn real_part(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    /// `|u|` as a real field.
    pub fn abs_field(&self) -> Field {
        Field::from_real(self.grid, &self.modulus())
    }

    /// Real `L²` product `Re ∫ conj(u) v`.
    pub fn inner(&self, other: &Field) -> f64 {
        let sum: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a.conj() * b).re)
            .sum();
        sum * self.grid.cell_volume()
    }

    pub fn norm_l2(&self) -> f64 {
        self.inner(self).sqrt()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Flat index of the largest `|u|`; ties go to the lowest index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        let mut best_val = f64::NEG_INFINITY;
        for (i, v) in self.values.iter().enumerate() {
            let n = v.norm();
            if n > best_val {
                best_val = n;
                best = i;
            }
        }
        best
    }

    pub fn scaled(&self, t: f64) -> Field {
        Field {
            grid: self.grid,
            values: self.values.iter().map(|v| v * t).collect(),
        }
    }

    /// `self + t * other`.
    pub fn axpy(&self, t: f64, other: &Field) -> Field {
        Field {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + b * t).collect(),
        }
    }

    /// Multiplies by `e^{iθ}` so the sample at `index` becomes real positive.
    pub fn align_phase(&mut self, index: usize) {
        let v = self.values[index];
        if v.norm() > 0.0 {
            let rot = v.conj() / v.norm();
            for x in &mut self.values {
                *x *= rot;
            }
        }
    }

    /// Pointwise multiplication by `e^{i c·x}`.
    pub fn with_plane_wave(&self, c: &Point) -> Field {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let p = self.grid.point(i);
                v * Complex64::from_polar(1.0, crate::grid::dot(c, &p))
            })
            .collect();
        Field {
            grid: self.grid,
            values,
        }
    }
}
