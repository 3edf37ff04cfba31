//! The power nonlinearity and its penalized modification.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Field;
use crate::operators::HartreeCache;

/// `f(t) = max(t, 0)^{(q-2)/2}` with primitive `F(t) = (2/q) max(t, 0)^{q/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerNonlinearity {
    pub q: f64,
}

impl PowerNonlinearity {
    pub fn new(q: f64) -> Self {
        Self { q }
    }

    pub fn f(&self, t: f64) -> f64 {
        if t > 0.0 {
            t.powf((self.q - 2.0) / 2.0)
        } else {
            0.0
        }
    }

    #[allow(non_snake_case)]
    pub fn F(&self, t: f64) -> f64 {
        if t > 0.0 {
            2.0 / self.q * t.powf(self.q / 2.0)
        } else {
            0.0
        }
    }

    /// The unique `a` with `f(a) = level`.
    pub fn inverse(&self, level: f64) -> f64 {
        level.powf(2.0 / (self.q - 2.0))
    }
}

/// Penalization data: outside `Λ_ε`, `f` is frozen at `V0/ℓ0` above `a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenalizationParams {
    pub q: f64,
    pub v0: f64,
    pub ell0: f64,
    /// Threshold with `f(a) = V0/ℓ0`.
    pub a: f64,
}

impl PenalizationParams {
    pub fn new(q: f64, v0: f64, ell0: f64) -> Self {
        let a = PowerNonlinearity::new(q).inverse(v0 / ell0);
        Self { q, v0, ell0, a }
    }

    pub fn cap(&self) -> f64 {
        self.v0 / self.ell0
    }

    fn power(&self) -> PowerNonlinearity {
        PowerNonlinearity::new(self.q)
    }

    /// `f̃(t)`.
    pub fn f_tilde(&self, t: f64) -> f64 {
        if t <= self.a {
            self.power().f(t)
        } else {
            self.cap()
        }
    }

    /// `g(x, t)` where `inside` is `x ∈ Λ`.
    pub fn g(&self, inside: bool, t: f64) -> f64 {
        if inside {
            self.power().f(t)
        } else {
            self.f_tilde(t)
        }
    }

    /// `G(x, t) = ∫_0^t g(x, τ) dτ`.
    #[allow(non_snake_case)]
    pub fn G(&self, inside: bool, t: f64) -> f64 {
        let p = self.power();
        if inside || t <= self.a {
            p.F(t)
        } else {
            p.F(self.a) + self.cap() * (t - self.a)
        }
    }
}

/// Outcome of the `ℓ0` calibration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub params: PenalizationParams,
    /// Sampled `sup ‖|x|^{-μ} ∗ F(|u|²)‖_∞` over `B`.
    pub c0: f64,
    pub accepted: usize,
    pub rejected: usize,
}

/// `‖|x|^{-μ} ∗ F(|u|²)‖_∞`.
pub fn hartree_sup(u: &Field, power: &PowerNonlinearity, cache: &HartreeCache) -> f64 {
    let dens: Vec<f64> = u.modulus_sq().into_iter().map(|t| power.F(t)).collect();
    cache.convolve(&dens).into_iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Sets `ℓ0 = 4 C0` from samples of `B = {‖u‖²_ε <= bound}`; samples outside
/// `B` are skipped.
pub fn calibrate_ell0(
    samples: &[Field],
    norm_sq: impl Fn(&Field) -> f64 + Sync,
    bound: f64,
    cache: &HartreeCache,
    q: f64,
    v0: f64,
) -> Result<Calibration> {
    let power = PowerNonlinearity::new(q);
    let values: Vec<Option<f64>> = samples
        .par_iter()
        .map(|u| (norm_sq(u) <= bound * (1.0 + 1e-9)).then(|| hartree_sup(u, &power, cache)))
        .collect();
    let accepted: Vec<f64> = values.iter().flatten().copied().collect();
    if accepted.is_empty() {
        return Err(Error::EmptyCalibration);
    }
    let c0 = accepted.iter().copied().fold(0.0, f64::max);
    if !(c0 > 0.0) {
        return Err(Error::InvalidConfig(
            "calibration samples give a zero Hartree term".into(),
        ));
    }
    Ok(Calibration {
        params: PenalizationParams::new(q, v0, 4.0 * c0),
        c0,
        accepted: accepted.len(),
        rejected: samples.len() - accepted.len(),
    })
}
