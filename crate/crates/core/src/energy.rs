//! The penalized energy, its first variation and the Nehari projection.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::GridSpec;
use crate::nonlinearity::{PenalizationParams, PowerNonlinearity};
use crate::operators::{HartreeCache, NonlocalQuadrature, SpectralLaplacian};

/// Discretization of the quadratic part `(-Δ)^s_{A_ε}`.
#[derive(Debug, Clone)]
pub enum LinearPart {
    Quadrature(NonlocalQuadrature),
    /// Fourier multiplier; only valid without a magnetic field.
    Spectral(SpectralLaplacian),
}

impl LinearPart {
    pub fn apply(&self, u: &Field) -> Field {
        match self {
            Self::Quadrature(q) => q.apply(u),
            Self::Spectral(s) => s.apply(u),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    /// `[u]²_{A_ε}`.
    #[serde(with = "crate::io::real")]
    pub seminorm_sq: f64,
    /// `∫ V_ε |u|²`.
    #[serde(with = "crate::io::real")]
    pub potential_sq: f64,
    /// `∫ (|x|^{-μ} ∗ G(εx, |u|²)) G(εx, |u|²)`.
    #[serde(with = "crate::io::real")]
    pub hartree: f64,
    #[serde(rename = "J")]
    #[serde(with = "crate::io::real")]
    pub j: f64,
    /// `<J'(u), u>`.
    #[serde(with = "crate::io::real")]
    pub nehari_residual: f64,
}

impl EnergyReport {
    pub fn norm_sq(&self) -> f64 {
        self.seminorm_sq + self.potential_sq
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NehariScalar {
    pub t_star: f64,
    /// Bisection steps after the bracket was found.
    pub iterations: usize,
}

/// `J(u) = ½ ‖u‖² - ¼ ∫ (K ∗ G(|u|²)) G(|u|²)` with `‖u‖² = [u]² + ∫ V |u|²`.
///
/// With `penalization = None` the nonlinearity is `f` everywhere, which is
/// also what an all-true `inside` mask gives.
#[derive(Debug, Clone)]
pub struct Functional {
    pub linear: LinearPart,
    /// `V(ε x)` on the grid.
    pub potential: Vec<f64>,
    /// `ε x ∈ Λ` on the grid.
    pub inside: Vec<bool>,
    pub penalization: Option<PenalizationParams>,
    pub power: PowerNonlinearity,
    pub hartree: HartreeCache,
}

struct Density {
    big_g: Vec<f64>,
    small_g: Vec<f64>,
    potential: Vec<f64>,
}

impl Functional {
    pub fn grid(&self) -> &GridSpec {
        self.hartree.grid()
    }

    fn small_g(&self, i: usize, t: f64) -> f64 {
        match &self.penalization {
            Some(p) => p.g(self.inside[i], t),
            None => self.power.f(t),
        }
    }

    fn big_g(&self, i: usize, t: f64) -> f64 {
        match &self.penalization {
            Some(p) => p.G(self.inside[i], t),
            None => self.power.F(t),
        }
    }

    /// `G`, `g` and `K ∗ G` at `|u|²`, scaled by `scale²`.
    fn density(&self, u: &Field, scale: f64) -> Density {
        let t2 = scale * scale;
        let rho = u.modulus_sq();
        let big_g: Vec<f64> = rho.iter().enumerate().map(|(i, &r)| self.big_g(i, t2 * r)).collect();
        let small_g = rho.iter().enumerate().map(|(i, &r)| self.small_g(i, t2 * r)).collect();
        let potential = self.hartree.convolve(&big_g);
        Density {
            big_g,
            small_g,
            potential,
        }
    }

    /// `K̃(u) = |x|^{-μ} ∗ G(εx, |u|²)`.
    pub fn hartree_potential(&self, u: &Field) -> Vec<f64> {
        self.density(u, 1.0).potential
    }

    /// Quadratic pieces `([u]², ∫ V |u|²)`.
    pub fn quadratic(&self, u: &Field) -> (f64, f64) {
        let lu = self.linear.apply(u);
        self.quadratic_with(u, &lu)
    }

    fn quadratic_with(&self, u: &Field, lu: &Field) -> (f64, f64) {
        let vol = self.grid().cell_volume();
        let pot: f64 = u
            .values
            .iter()
            .zip(&self.potential)
            .map(|(v, w)| w * v.norm_sqr())
            .sum();
        (lu.inner(u), pot * vol)
    }

    pub fn norm_sq(&self, u: &Field) -> f64 {
        let (a, b) = self.quadratic(u);
        a + b
    }

    pub fn energy(&self, u: &Field) -> EnergyReport {
        let lu = self.linear.apply(u);
        self.energy_with(u, &lu, &self.density(u, 1.0))
    }

    fn energy_with(&self, u: &Field, lu: &Field, d: &Density) -> EnergyReport {
        let vol = self.grid().cell_volume();
        let (seminorm_sq, potential_sq) = self.quadratic_with(u, lu);
        let hartree: f64 = d.potential.iter().zip(&d.big_g).map(|(k, g)| k * g).sum::<f64>() * vol;
        let coupled: f64 = u
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| d.potential[i] * d.small_g[i] * v.norm_sqr())
            .sum::<f64>()
            * vol;
        let norm = seminorm_sq + potential_sq;
        EnergyReport {
            seminorm_sq,
            potential_sq,
            hartree,
            j: 0.5 * norm - 0.25 * hartree,
            nehari_residual: norm - coupled,
        }
    }

    /// `L²` gradient `Lu + V u - (K ∗ G(|u|²)) g(|u|²) u`.
    pub fn gradient(&self, u: &Field) -> Field {
        self.energy_and_gradient(u).1
    }

    pub fn energy_and_gradient(&self, u: &Field) -> (EnergyReport, Field) {
        self.energy_and_gradient_given(u, &self.linear.apply(u))
    }

    /// `‖u‖²` given `lu`, the linear part applied to `u`.
    pub fn norm_sq_given(&self, u: &Field, lu: &Field) -> f64 {
        let (a, b) = self.quadratic_with(u, lu);
        a + b
    }

    /// As [`Self::energy_and_gradient`], given the linear part applied to `u`.
    pub fn energy_and_gradient_given(&self, u: &Field, lu: &Field) -> (EnergyReport, Field) {
        let d = self.density(u, 1.0);
        let report = self.energy_with(u, lu, &d);
        let values = lu
            .values
            .iter()
            .zip(&u.values)
            .enumerate()
            .map(|(i, (l, v))| l + v * (self.potential[i] - d.potential[i] * d.small_g[i]))
            .collect();
        (report, Field::from_values(u.grid, values))
    }

    /// `∫ (K ∗ G(t²|u|²)) g(t²|u|²) t² |u|²`.
    fn coupled_on_ray(&self, u: &Field, t: f64) -> f64 {
        let d = self.density(u, t);
        let vol = self.grid().cell_volume();
        u.values
            .iter()
            .enumerate()
            .map(|(i, v)| d.potential[i] * d.small_g[i] * t * t * v.norm_sqr())
            .sum::<f64>()
            * vol
    }

    /// `φ(t) = <J'(tu), tu>` given `‖u‖²`.
    pub fn nehari_phi(&self, u: &Field, norm_sq: f64, t: f64) -> f64 {
        t * t * norm_sq - self.coupled_on_ray(u, t)
    }

    /// `J(tu)` given `‖u‖²`.
    pub fn ray_energy(&self, u: &Field, norm_sq: f64, t: f64) -> f64 {
        let d = self.density(u, t);
        let vol = self.grid().cell_volume();
        let hartree: f64 = d.potential.iter().zip(&d.big_g).map(|(k, g)| k * g).sum::<f64>() * vol;
        0.5 * t * t * norm_sq - 0.25 * hartree
    }

    /// The `t > 0` with `<J'(tu), tu> = 0`, by bisection on `[2^-20, t_hi]`
    /// with `t_hi` doubled from 1 until `φ(t_hi) < 0`.
    pub fn nehari_project(&self, u: &Field) -> Result<NehariScalar> {
        let norm_sq = self.norm_sq(u);
        self.nehari_project_with(u, norm_sq)
    }

    pub fn nehari_project_with(&self, u: &Field, norm_sq: f64) -> Result<NehariScalar> {
        if !(norm_sq > 0.0) || !norm_sq.is_finite() {
            return Err(Error::NoNehariPoint);
        }
        let phi = |t: f64| self.nehari_phi(u, norm_sq, t);
        let mut lo = 2f64.powi(-20);
        if !(phi(lo) > 0.0) {
            return Err(Error::NoNehariPoint);
        }
        let mut hi = 1.0;
        let mut expansions = 0;
        while phi(hi) >= 0.0 {
            lo = hi;
            hi *= 2.0;
            expansions += 1;
            if expansions > 60 {
                return Err(Error::NoNehariPoint);
            }
        }
        let mut iterations = 0;
        while hi - lo > 1e-12 * hi {
            let mid = 0.5 * (lo + hi);
            if phi(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            iterations += 1;
        }
        Ok(NehariScalar {
            t_star: 0.5 * (lo + hi),
            iterations,
        })
    }

    /// `J(t u)` for each `t`.
    pub fn ray_scan(&self, u: &Field, ts: &[f64]) -> Vec<f64> {
        let norm_sq = self.norm_sq(u);
        ts.iter().map(|&t| self.ray_energy(u, norm_sq, t)).collect()
    }
}

/// `n` log-spaced points from `lo` to `hi`.
pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp())
        .collect()
}

/// True when the sequence rises (weakly) to a single maximum and then falls.
pub fn is_unimodal(values: &[f64]) -> bool {
    let peak = values
        .iter()
        .enumerate()
        .fold(
            (0, f64::NEG_INFINITY),
            |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) },
        )
        .0;
    let slack = 1e-12 * values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    values[..=peak].windows(2).all(|w| w[1] >= w[0] - slack) && values[peak..].windows(2).all(|w| w[1] <= w[0] + slack)
}
