//! Singular-integral quadrature for the fractional magnetic Laplacian
//!
//! `Lu(x) = c_{N,s} PV ∫ (u(x) - u(y) e^{i A((x+y)/2)·(x-y)}) |x-y|^{-N-2s} dy`
//!
//! on the periodic grid. Each nonzero cell offset `z` carries the weight
//! `c_{N,s} h^N K(z)`, where `K` sums `|z + 2Lk|^{-N-2s}` over periodic images
//! and closes the image sum with the exterior integral. The lattice sum misses
//! the singular part of the integral; that defect is known in closed form
//! through the Epstein zeta function and is restored as extra weight on the
//! axis neighbours at distance `h` and `2h` (a fourth-order Laplacian stencil).
//! Every weight stays nonnegative.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::config::MagneticPotential;
use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::{dot, norm, GridSpec, Point, MAX_DIM};
use crate::operators::spectral::FftNd;
use crate::special::{cube_exterior_integral, epstein_zeta, frac_laplacian_constant};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureOptions {
    /// Periodic image shells summed explicitly in each direction; by default
    /// 32, 8 and 3 in one, two and three dimensions.
    pub image_shells: Option<usize>,
    /// Offsets longer than this are dropped and their weight is charged to
    /// the diagonal, as if the field vanished there.
    pub cutoff: Option<f64>,
    /// Restore the singular part missed by the lattice sum.
    pub near_field: bool,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self {
            image_shells: None,
            cutoff: None,
            near_field: true,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Offset {
    delta: [i64; MAX_DIM],
    z: Point,
    weight: f64,
}

#[derive(Debug, Clone)]
enum Gauge {
    Zero,
    Constant(Point),
    /// `A(ε x)` on the half-spaced grid where all midpoints `x - z/2` fall.
    Varying(Vec<Point>),
}

/// Both quadratic forms evaluated by the same double sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GagliardoForms {
    /// `[u]²_A`.
    pub magnetic: f64,
    /// `[|u|]²`.
    pub modulus: f64,
}

#[derive(Debug, Clone)]
pub struct NonlocalQuadrature {
    grid: GridSpec,
    s: f64,
    offsets: Vec<Offset>,
    far_weight: f64,
    diagonal: f64,
    gauge: Gauge,
    fast: Option<(FftNd, Vec<Complex64>)>,
}

impl NonlocalQuadrature {
    /// Operator with magnetic potential `A(ε x)` in rescaled coordinates.
    pub fn new(
        grid: GridSpec,
        s: f64,
        magnetic: &MagneticPotential,
        eps: f64,
        opts: QuadratureOptions,
    ) -> Result<Self> {
        let gauge = match magnetic.constant_value() {
            Some(a) if a.iter().all(|&v| v == 0.0) => Gauge::Zero,
            Some(a) => Gauge::Constant(a),
            None => {
                let half = grid.spacing() / 2.0;
                let m2 = 2 * grid.points;
                let n = m2.pow(grid.dim as u32);
                let table = (0..n)
                    .map(|j| {
                        let mut p = [0.0; MAX_DIM];
                        let mut rem = j;
                        for axis in (0..grid.dim).rev() {
                            p[axis] = eps * (-grid.extent + (rem % m2) as f64 * half);
                            rem /= m2;
                        }
                        magnetic.eval(&p)
                    })
                    .collect();
                Gauge::Varying(table)
            }
        };
        Self::build(grid, s, gauge, opts)
    }

    /// The real fractional Laplacian (`A ≡ 0`).
    pub fn real(grid: GridSpec, s: f64, opts: QuadratureOptions) -> Result<Self> {
        Self::build(grid, s, Gauge::Zero, opts)
    }

    fn build(grid: GridSpec, s: f64, gauge: Gauge, opts: QuadratureOptions) -> Result<Self> {
        grid.check()?;
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::FractionalOrder(s));
        }
        let dim = grid.dim;
        let h = grid.spacing();
        let c = frac_laplacian_constant(dim, s);
        let vol = grid.cell_volume();
        let period = 2.0 * grid.extent;
        let p = dim as f64 + 2.0 * s;
        let shells = opts.image_shells.unwrap_or([32, 8, 3][dim - 1]) as i64;
        let image_tail = cube_exterior_integral(dim, s, (shells as f64 + 0.5) * period) / period.powi(dim as i32);

        let images: Vec<Point> = lattice(dim, shells).map(|k| k.map(|v| v as f64 * period)).collect();
        let kernel = |z: &Point| -> f64 {
            let mut acc = 0.0;
            for img in &images {
                let mut r2 = 0.0;
                for a in 0..dim {
                    let d = z[a] + img[a];
                    r2 += d * d;
                }
                if r2 > 0.0 {
                    acc += r2.powf(-p / 2.0);
                }
            }
            acc + image_tail
        };

        // Singular defect per axis, and the stencil weights that restore it.
        let (dw1, dw2) = if opts.near_field {
            let defect = -h.powf(2.0 - 2.0 * s) * epstein_zeta(dim, dim as f64 + 2.0 * s - 2.0) / dim as f64;
            let base2 = c * vol * kernel(&axis_point(0, 2.0 * h));
            let mut dw2 = -c * defect / (24.0 * h * h);
            if base2 + dw2 < 0.0 {
                dw2 = -base2;
            }
            let dw1 = (c * defect / 2.0 - 4.0 * h * h * dw2) / (h * h);
            (dw1, dw2)
        } else {
            (0.0, 0.0)
        };

        let mut offsets = Vec::new();
        let mut far_weight = 0.0;
        for flat in 1..grid.len() {
            let idx = grid.multi_index(flat);
            let mut delta = [0i64; MAX_DIM];
            let mut z = [0.0; MAX_DIM];
            for a in 0..dim {
                delta[a] = grid.signed_offset(idx[a]);
                z[a] = delta[a] as f64 * h;
            }
            let mut weight = c * vol * kernel(&z);
            let nonzero: Vec<usize> = (0..dim).filter(|&a| delta[a] != 0).collect();
            if nonzero.len() == 1 {
                match delta[nonzero[0]].abs() {
                    1 => weight += dw1,
                    // The clamp leaves zero up to rounding between axes.
                    2 => weight = (weight + dw2).max(0.0),
                    _ => {}
                }
            }
            if matches!(opts.cutoff, Some(r) if norm(&z) > r) {
                far_weight += weight;
                continue;
            }
            // Offsets of exactly half a period are split between both signs so
            // the matrix stays Hermitian under the midpoint rule.
            let half: Vec<usize> = (0..dim).filter(|&a| delta[a] == grid.points as i64 / 2).collect();
            let parts = 1usize << half.len();
            for mask in 0..parts {
                let mut d = delta;
                let mut zz = z;
                for (bit, &a) in half.iter().enumerate() {
                    if mask >> bit & 1 == 1 {
                        d[a] = -d[a];
                        zz[a] = -zz[a];
                    }
                }
                offsets.push(Offset {
                    delta: d,
                    z: zz,
                    weight: weight / parts as f64,
                });
            }
        }
        let diagonal = offsets.iter().map(|o| o.weight).sum::<f64>() + far_weight;

        let mut op = Self {
            grid,
            s,
            offsets,
            far_weight,
            diagonal,
            gauge,
            fast: None,
        };
        op.fast = op.fast_kernel();
        Ok(op)
    }

    /// Convolution kernel when weight times phase depends on the offset only.
    fn fast_kernel(&self) -> Option<(FftNd, Vec<Complex64>)> {
        let a = match &self.gauge {
            Gauge::Zero => [0.0; MAX_DIM],
            Gauge::Constant(a) => *a,
            Gauge::Varying(_) => return None,
        };
        let fft = FftNd::new(self.grid);
        let mut kernel = vec![Complex64::default(); self.grid.len()];
        for o in &self.offsets {
            kernel[self.wrap_offset(&o.delta)] += Complex64::from_polar(o.weight, dot(&a, &o.z));
        }
        fft.forward(&mut kernel);
        Some((fft, kernel))
    }

    fn wrap_offset(&self, delta: &[i64; MAX_DIM]) -> usize {
        let m = self.grid.points as i64;
        let mut idx = [0usize; MAX_DIM];
        for a in 0..self.grid.dim {
            idx[a] = delta[a].rem_euclid(m) as usize;
        }
        self.grid.flat_index(&idx)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn order(&self) -> f64 {
        self.s
    }

    /// Sum of all weights, i.e. the diagonal entry of the operator matrix.
    pub fn diagonal(&self) -> f64 {
        self.diagonal
    }

    pub fn far_weight(&self) -> f64 {
        self.far_weight
    }

    pub fn min_weight(&self) -> f64 {
        self.offsets.iter().map(|o| o.weight).fold(f64::INFINITY, f64::min)
    }

    /// Total weight at a signed cell offset (half-period splits merged).
    pub fn weight_at(&self, delta: &[i64]) -> f64 {
        let mut d = [0i64; MAX_DIM];
        d[..delta.len()].copy_from_slice(delta);
        let target = self.wrap_offset(&d);
        self.offsets
            .iter()
            .filter(|o| self.wrap_offset(&o.delta) == target)
            .map(|o| o.weight)
            .sum()
    }

    pub fn has_fast_path(&self) -> bool {
        self.fast.is_some()
    }

    fn neighbour(&self, idx: &[usize; MAX_DIM], delta: &[i64; MAX_DIM]) -> usize {
        let m = self.grid.points as i64;
        let mut acc = 0usize;
        for a in 0..self.grid.dim {
            acc = acc * self.grid.points + wrap_once(idx[a] as i64 - delta[a], m);
        }
        acc
    }

    /// `e^{i A(x - z/2)·z}` for the sample at `idx` and offset `o`.
    fn phase(&self, idx: &[usize; MAX_DIM], o: &Offset) -> Complex64 {
        let cis = |theta: f64| {
            let (sin, cos) = theta.sin_cos();
            Complex64::new(cos, sin)
        };
        match &self.gauge {
            Gauge::Zero => Complex64::new(1.0, 0.0),
            Gauge::Constant(a) => cis(dot(a, &o.z)),
            Gauge::Varying(table) => {
                let m2 = 2 * self.grid.points as i64;
                let mut j = 0usize;
                for (&i, &d) in idx.iter().zip(&o.delta).take(self.grid.dim) {
                    j = j * m2 as usize + wrap_once(2 * i as i64 - d, m2);
                }
                cis(dot(&table[j], &o.z))
            }
        }
    }

    /// Applies the operator, through the FFT when the gauge allows it.
    pub fn apply(&self, u: &Field) -> Field {
        match &self.fast {
            Some((fft, spectrum)) => {
                let mut data = u.values.clone();
                fft.forward(&mut data);
                data.iter_mut().zip(spectrum).for_each(|(v, k)| *v *= k);
                fft.inverse(&mut data);
                let values = u.values.iter().zip(&data).map(|(v, c)| v * self.diagonal - c).collect();
                Field::from_values(u.grid, values)
            }
            None => self.apply_direct(u),
        }
    }

    /// Applies the operator by the explicit double sum.
    pub fn apply_direct(&self, u: &Field) -> Field {
        assert_eq!(u.grid, self.grid);
        let values = (0..self.grid.len())
            .into_par_iter()
            .map(|i| {
                let idx = self.grid.multi_index(i);
                let mut acc = Complex64::default();
                for o in &self.offsets {
                    let j = self.neighbour(&idx, &o.delta);
                    acc += self.phase(&idx, o) * u.values[j] * o.weight;
                }
                u.values[i] * self.diagonal - acc
            })
            .collect();
        Field::from_values(u.grid, values)
    }

    /// `[u]²_A` and `[|u|]²` from
    /// `½ Σ_x Σ_z w_z |u(x) - e^{iA·z} u(x-z)|² h^N + W_far Σ |u|² h^N`.
    pub fn gagliardo_forms(&self, u: &Field) -> GagliardoForms {
        assert_eq!(u.grid, self.grid);
        let per_point: Vec<(f64, f64)> = (0..self.grid.len())
            .into_par_iter()
            .map(|i| {
                let idx = self.grid.multi_index(i);
                let ux = u.values[i];
                let mx = ux.norm();
                let (mut mag, mut modulus) = (0.0, 0.0);
                for o in &self.offsets {
                    let uy = u.values[self.neighbour(&idx, &o.delta)];
                    mag += o.weight * (ux - self.phase(&idx, o) * uy).norm_sqr();
                    modulus += o.weight * (mx - uy.norm()).powi(2);
                }
                let far = self.far_weight * ux.norm_sqr();
                (0.5 * mag + far, 0.5 * modulus + far)
            })
            .collect();
        let vol = self.grid.cell_volume();
        let (mag, modulus) = per_point.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
        GagliardoForms {
            magnetic: mag * vol,
            modulus: modulus * vol,
        }
    }

    pub fn gagliardo_form(&self, u: &Field) -> f64 {
        self.gagliardo_forms(u).magnetic
    }
}

/// `v mod m` for `-m <= v < 2m`.
#[inline]
fn wrap_once(v: i64, m: i64) -> usize {
    (if v < 0 {
        v + m
    } else if v >= m {
        v - m
    } else {
        v
    }) as usize
}

fn axis_point(axis: usize, value: f64) -> Point {
    let mut p = [0.0; MAX_DIM];
    p[axis] = value;
    p
}

/// All integer vectors with `|k|_∞ <= reach` in the first `dim` components.
fn lattice(dim: usize, reach: i64) -> impl Iterator<Item = [i64; MAX_DIM]> {
    let side = (2 * reach + 1) as usize;
    (0..side.pow(dim as u32)).map(move |mut j| {
        let mut k = [0i64; MAX_DIM];
        for slot in k.iter_mut().take(dim) {
            *slot = (j % side) as i64 - reach;
            j /= side;
        }
        k
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::MagneticMode;
    use crate::operators::spectral::spectral_frac_laplacian;

    fn gaussian(grid: GridSpec) -> Field {
        Field::from_fn(grid, |x| Complex64::new((-dot(x, x)).exp(), 0.0))
    }

    fn rel_linf(a: &Field, b: &Field) -> f64 {
        let diff = a
            .values
            .iter()
            .zip(&b.values)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max);
        diff / b.sup_norm()
    }

    fn wavy() -> MagneticPotential {
        MagneticPotential::Fourier {
            base: vec![0.4, -0.2],
            modes: vec![MagneticMode {
                amplitude: vec![0.3, 0.1],
                wavevector: vec![0.7, 0.2],
                phase: 0.5,
            }],
        }
    }

    #[test]
    fn rejects_bad_order() {
        let grid = GridSpec::new(1, 4.0, 16).unwrap();
        assert!(matches!(
            NonlocalQuadrature::real(grid, 1.0, QuadratureOptions::default()),
            Err(Error::FractionalOrder(_))
        ));
    }

    #[test]
    fn constants_are_annihilated() {
        let grid = GridSpec::new(2, 4.0, 16).unwrap();
        let op = NonlocalQuadrature::real(grid, 0.4, QuadratureOptions::default()).unwrap();
        let u = Field::from_fn(grid, |_| Complex64::new(1.7, 0.0));
        assert!(op.apply(&u).sup_norm() < 1e-10);
        assert!(op.apply_direct(&u).sup_norm() < 1e-10);
    }

    #[test]
    fn agrees_with_spectral_operator() {
        for (s, tol) in [(0.3, 2e-5), (0.5, 5e-5), (0.7, 1e-4)] {
            let grid = GridSpec::new(1, 20.0, 256).unwrap();
            let u = gaussian(grid);
            let op = NonlocalQuadrature::real(grid, s, QuadratureOptions::default()).unwrap();
            let err = rel_linf(&op.apply(&u), &spectral_frac_laplacian(&u, s));
            assert!(err < tol, "s = {s}: {err}");
        }
    }

    #[test]
    fn two_dimensional_accuracy() {
        let grid = GridSpec::new(2, 8.0, 64).unwrap();
        let u = gaussian(grid);
        let op = NonlocalQuadrature::real(grid, 0.5, QuadratureOptions::default()).unwrap();
        let err = rel_linf(&op.apply(&u), &spectral_frac_laplacian(&u, 0.5));
        assert!(err < 5e-3, "{err}");
    }

    #[test]
    fn weights_are_nonnegative() {
        for dim in 1..=3 {
            for s in [0.1, 0.5, 0.8, 0.95] {
                let m = if dim == 3 { 8 } else { 32 };
                let grid = GridSpec::new(dim, 4.0, m).unwrap();
                let op = NonlocalQuadrature::real(grid, s, QuadratureOptions::default()).unwrap();
                assert!(op.min_weight() >= 0.0, "N = {dim}, s = {s}");
            }
        }
    }

    #[test]
    fn fast_path_matches_direct_sum() {
        let grid = GridSpec::new(2, 4.0, 16).unwrap();
        let a = MagneticPotential::Constant { value: vec![0.3, -1.1] };
        let op = NonlocalQuadrature::new(grid, 0.6, &a, 1.0, QuadratureOptions::default()).unwrap();
        assert!(op.has_fast_path());
        let u = Field::from_fn(grid, |x| Complex64::new((-dot(x, x)).exp(), x[0].sin()));
        assert!(rel_linf(&op.apply(&u), &op.apply_direct(&u)) < 1e-12);
    }

    #[test]
    fn quadratic_form_matches_operator() {
        let grid = GridSpec::new(2, 4.0, 16).unwrap();
        let op = NonlocalQuadrature::new(grid, 0.6, &wavy(), 0.8, QuadratureOptions::default()).unwrap();
        assert!(!op.has_fast_path());
        let u = Field::from_fn(grid, |x| {
            Complex64::new((-dot(x, x)).exp(), 0.5 * x[1] * (-dot(x, x)).exp())
        });
        let lu = op.apply(&u);
        let form = op.gagliardo_form(&u);
        assert!((lu.inner(&u) - form).abs() / form < 1e-10);
        let forms = op.gagliardo_forms(&u);
        assert!(forms.modulus <= forms.magnetic);
    }

    #[test]
    fn operator_is_hermitian() {
        let grid = GridSpec::new(1, 6.0, 32).unwrap();
        let op = NonlocalQuadrature::new(grid, 0.3, &wavy_1d(), 1.0, QuadratureOptions::default()).unwrap();
        let u = Field::from_fn(grid, |x| Complex64::new(x[0].cos(), (2.0 * x[0]).sin()));
        let v = Field::from_fn(grid, |x| Complex64::new((-x[0] * x[0]).exp(), x[0] / 7.0));
        let lhs = op.apply(&u).inner(&v);
        let rhs = u.inner(&op.apply(&v));
        assert!((lhs - rhs).abs() < 1e-10 * lhs.abs().max(1.0));
    }

    fn wavy_1d() -> MagneticPotential {
        MagneticPotential::Fourier {
            base: vec![0.4],
            modes: vec![MagneticMode {
                amplitude: vec![0.3],
                wavevector: vec![0.7],
                phase: 0.5,
            }],
        }
    }

    #[test]
    fn cutoff_moves_weight_to_the_diagonal() {
        let grid = GridSpec::new(1, 8.0, 64).unwrap();
        let full = NonlocalQuadrature::real(grid, 0.5, QuadratureOptions::default()).unwrap();
        let opts = QuadratureOptions {
            cutoff: Some(2.0),
            ..Default::default()
        };
        let cut = NonlocalQuadrature::real(grid, 0.5, opts).unwrap();
        assert!(cut.far_weight() > 0.0);
        assert!((cut.diagonal() - full.diagonal()).abs() < 1e-12 * full.diagonal());
        let u = Field::from_fn(grid, |x| Complex64::new((-4.0 * x[0] * x[0]).exp(), 0.0));
        let a = full.gagliardo_form(&u);
        let b = cut.gagliardo_form(&u);
        assert!((a - b).abs() / a < 0.05);
    }
}
