//! Uniform periodic grids on the truncated box `[-L, L)^N`.
//!
//! Sample `i` along an axis sits at `-L + i h` with `h = 2L / M`. Flat
//! indices are row-major with axis 0 slowest.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Maximum supported spatial dimension.
pub const MAX_DIM: usize = 3;

/// A point or displacement; components beyond the grid dimension are zero.
pub type Point = [f64; MAX_DIM];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub dim: usize,
    /// Half-width `L` of the box.
    pub extent: f64,
    /// Samples per axis `M`.
    pub points: usize,
}

impl GridSpec {
    pub fn new(dim: usize, extent: f64, points: usize) -> Result<Self> {
        let grid = Self { dim, extent, points };
        grid.check()?;
        Ok(grid)
    }

    pub fn check(&self) -> Result<()> {
        if !(1..=MAX_DIM).contains(&self.dim) {
            return Err(Error::InvalidGrid(format!("dimension {} not in 1..=3", self.dim)));
        }
        if self.points < 8 || !self.points.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be even and >= 8, got {}",
                self.points
            )));
        }
        if !(self.extent.is_finite() && self.extent > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "extent must be positive, got {}",
                self.extent
            )));
        }
        Ok(())
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.extent / self.points as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Total number of samples `M^N`.
    pub fn len(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dims(&self) -> Vec<usize> {
        vec![self.points; self.dim]
    }

    /// Stride of each axis in the flat layout.
    pub fn strides(&self) -> [usize; MAX_DIM] {
        let mut strides = [0; MAX_DIM];
        let mut acc = 1;
        for axis in (0..self.dim).rev() {
            strides[axis] = acc;
            acc *= self.points;
        }
        strides
    }

    pub fn multi_index(&self, flat: usize) -> [usize; MAX_DIM] {
        let mut idx = [0; MAX_DIM];
        let mut rem = flat;
        for axis in (0..self.dim).rev() {
            idx[axis] = rem % self.points;
            rem /= self.points;
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize; MAX_DIM]) -> usize {
        (0..self.dim).fold(0, |acc, axis| acc * self.points + idx[axis])
    }

    pub fn coord(&self, i: usize) -> f64 {
        -self.extent + i as f64 * self.spacing()
    }

    pub fn point(&self, flat: usize) -> Point {
        let idx = self.multi_index(flat);
        let mut p = [0.0; MAX_DIM];
        for axis in 0..self.dim {
            p[axis] = self.coord(idx[axis]);
        }
        p
    }

    pub fn points_iter(&self) -> impl Iterator<Item = Point> + '_ {
        (0..self.len()).map(|i| self.point(i))
    }

    /// Signed offset (in cells) for an index difference `d` in `0..M`,
    /// mapped to the minimum image `(-M/2, M/2]`.
    pub fn signed_offset(&self, d: usize) -> i64 {
        let m = self.points as i64;
        let d = d as i64;
        if d > m / 2 {
            d - m
        } else {
            d
        }
    }

    /// Angular wavenumber of FFT bin `k` along one axis.
    pub fn wavenumber(&self, k: usize) -> f64 {
        let m = self.points as i64;
        let k = k as i64;
        let kk = if k < m / 2 { k } else { k - m };
        std::f64::consts::PI * kk as f64 / self.extent
    }

    /// Wraps a coordinate into `[-L, L)`.
    pub fn wrap(&self, x: f64) -> f64 {
        let period = 2.0 * self.extent;
        (x + self.extent).rem_euclid(period) - self.extent
    }

    /// Minimum-image displacement `x - y` on the periodic box.
    pub fn min_image(&self, x: &Point, y: &Point) -> Point {
        let mut z = [0.0; MAX_DIM];
        for axis in 0..self.dim {
            z[axis] = self.wrap(x[axis] - y[axis]);
        }
        z
    }

    /// Index of the sample nearest the origin along each axis.
    pub fn origin_index(&self) -> usize {
        self.flat_index(&[self.points / 2; MAX_DIM])
    }

    /// True if the flat index lies on an outer face of the box.
    pub fn on_boundary(&self, flat: usize) -> bool {
        let idx = self.multi_index(flat);
        (0..self.dim).any(|a| idx[a] == 0 || idx[a] == self.points - 1)
    }
}

pub fn norm(p: &Point) -> f64 {
    dot(p, p).sqrt()
}

pub fn dot(a: &Point, b: &Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn scale(p: &Point, s: f64) -> Point {
    [p[0] * s, p[1] * s, p[2] * s]
}

pub fn sub(a: &Point, b: &Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

/// Copies a slice of up to three components into a [`Point`].
pub fn to_point(v: &[f64]) -> Point {
    let mut p = [0.0; MAX_DIM];
    for (dst, src) in p.iter_mut().zip(v) {
        *dst = *src;
    }
    p
}
