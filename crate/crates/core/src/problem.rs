//! Assembly of the discrete problem from configuration data.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::{
    rescaled_grid, validate_config, PotentialSpec, ProblemConfig, Region, RescaledGrid, ValidationReport,
};
use crate::energy::{Functional, LinearPart};
use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::{dot, scale, sub, to_point, GridSpec, Point};
use crate::nonlinearity::{calibrate_ell0, Calibration, PenalizationParams, PowerNonlinearity};
use crate::operators::{HartreeCache, NonlocalQuadrature, QuadratureOptions, SpectralLaplacian};
use crate::sampling::ShellSampler;

/// Which discretization the limit functional uses for `(-Δ)^s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitDiscretization {
    #[default]
    Spectral,
    Quadrature,
}

/// Number of fields drawn for the `ℓ0` calibration.
pub const CALIBRATION_SAMPLES: usize = 64;

/// The penalization in force together with how it was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenalizationSetup {
    pub params: PenalizationParams,
    pub kappa: f64,
    /// Present when `ℓ0` was calibrated rather than given.
    pub calibration: Option<Calibration>,
}

#[derive(Debug, Clone)]
pub struct Problem {
    pub config: ProblemConfig,
    pub potentials: PotentialSpec,
    pub grid: GridSpec,
    pub rescaled: RescaledGrid,
    pub validation: ValidationReport,
    pub quadrature: QuadratureOptions,
}

impl Problem {
    /// Validates and assembles; any violated assumption is an error.
    pub fn new(config: ProblemConfig, potentials: PotentialSpec, grid: GridSpec) -> Result<Self> {
        let validation = validate_config(&config, &potentials, &grid).into_result()?;
        let rescaled = rescaled_grid(&config, &potentials, &grid)?;
        Ok(Self {
            config,
            potentials,
            grid,
            rescaled,
            validation,
            quadrature: QuadratureOptions::default(),
        })
    }

    /// Assembles without refusing on violations (they stay in `validation`).
    pub fn new_unchecked(config: ProblemConfig, potentials: PotentialSpec, grid: GridSpec) -> Result<Self> {
        let validation = validate_config(&config, &potentials, &grid);
        let rescaled = rescaled_grid(&config, &potentials, &grid)?;
        Ok(Self {
            config,
            potentials,
            grid,
            rescaled,
            validation,
            quadrature: QuadratureOptions::default(),
        })
    }

    /// Same problem at another `ε`.
    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        let config = ProblemConfig {
            eps,
            ..self.config.clone()
        };
        let mut p = if self.validation.is_admissible() {
            Self::new(config, self.potentials.clone(), self.grid)?
        } else {
            Self::new_unchecked(config, self.potentials.clone(), self.grid)?
        };
        p.quadrature = self.quadrature;
        Ok(p)
    }

    pub fn eps(&self) -> f64 {
        self.config.eps
    }

    pub fn hartree(&self) -> Result<HartreeCache> {
        HartreeCache::new(self.grid, self.config.mu)
    }

    /// `(-Δ)^s_{A_ε}` by quadrature.
    pub fn operator(&self) -> Result<NonlocalQuadrature> {
        NonlocalQuadrature::new(
            self.grid,
            self.config.s,
            &self.potentials.magnetic,
            self.config.eps,
            self.quadrature,
        )
    }

    /// `V(ε x)` on the grid.
    pub fn potential_values(&self) -> Vec<f64> {
        self.grid
            .points_iter()
            .map(|p| self.potentials.v_scaled(&p, self.config.eps))
            .collect()
    }

    pub fn penalized_functional(&self, params: PenalizationParams) -> Result<Functional> {
        Ok(Functional {
            linear: LinearPart::Quadrature(self.operator()?),
            potential: self.potential_values(),
            inside: self.rescaled.mask.clone(),
            penalization: Some(params),
            power: PowerNonlinearity::new(self.config.q),
            hartree: self.hartree()?,
        })
    }

    /// `J_ε` with `f` everywhere (no penalization).
    pub fn unpenalized_functional(&self) -> Result<Functional> {
        Ok(Functional {
            linear: LinearPart::Quadrature(self.operator()?),
            potential: self.potential_values(),
            inside: vec![true; self.grid.len()],
            penalization: None,
            power: PowerNonlinearity::new(self.config.q),
            hartree: self.hartree()?,
        })
    }

    /// `J_0(u) = ½([u]² + V0 ∫|u|²) - ¼ ∫ (K ∗ F(|u|²)) F(|u|²)`.
    pub fn limit_functional(&self, kind: LimitDiscretization) -> Result<Functional> {
        let linear = match kind {
            LimitDiscretization::Spectral => LinearPart::Spectral(SpectralLaplacian::new(self.grid, self.config.s)),
            LimitDiscretization::Quadrature => {
                LinearPart::Quadrature(NonlocalQuadrature::real(self.grid, self.config.s, self.quadrature)?)
            }
        };
        Ok(Functional {
            linear,
            potential: vec![self.config.v0; self.grid.len()],
            inside: vec![true; self.grid.len()],
            penalization: None,
            power: PowerNonlinearity::new(self.config.q),
            hartree: self.hartree()?,
        })
    }

    /// Centre and radius of the largest ball inside `Λ_ε` used by the bump.
    fn bump_ball(&self) -> (Point, f64) {
        let eps = self.config.eps;
        let (centre, radius) = match &self.potentials.region {
            Region::Ball { center, radius } => (to_point(center), *radius),
            Region::Box { lower, upper } => {
                let mid: Vec<f64> = lower.iter().zip(upper).map(|(a, b)| 0.5 * (a + b)).collect();
                let half = lower
                    .iter()
                    .zip(upper)
                    .map(|(a, b)| 0.5 * (b - a))
                    .fold(f64::INFINITY, f64::min);
                (to_point(&mid), half)
            }
        };
        (scale(&centre, 1.0 / eps), radius / eps)
    }

    /// Compactly supported `cos²` bump inside `Λ_ε` times `e^{i A(0)·x}`.
    pub fn canonical_bump(&self) -> Field {
        let (centre, radius) = self.bump_ball();
        let a0 = self.potentials.a0();
        Field::from_fn(self.grid, |x| {
            let r = crate::grid::norm(&sub(x, &centre));
            let amp = if r < radius {
                (std::f64::consts::FRAC_PI_2 * r / radius).cos().powi(2)
            } else {
                0.0
            };
            Complex64::from_polar(amp, dot(&a0, x))
        })
    }

    /// `κ`: the configured value, or twice the ray maximum of `J_ε` along
    /// the canonical bump (where `g = f`).
    pub fn kappa(&self) -> Result<f64> {
        if let Some(k) = self.config.kappa {
            return Ok(k);
        }
        let j = self.unpenalized_functional()?;
        let u0 = self.canonical_bump();
        let norm_sq = j.norm_sq(&u0);
        let t = j.nehari_project_with(&u0, norm_sq)?.t_star;
        Ok(2.0 * j.ray_energy(&u0, norm_sq, t))
    }

    /// `ℓ0` from sampling moduli on the shell `[|u|]² + V0 ‖u‖² = 4(κ + 1)`.
    ///
    /// This norm bounds `‖u‖_ε` from below for every `ε` (`[|u|] <= [u]_A`
    /// and `V >= V0`) and the Hartree term only sees `|u|`, so one `ℓ0`
    /// serves a whole sweep.
    pub fn calibrate(&self, kappa: f64, seed: u64, samples: usize) -> Result<Calibration> {
        let lower = self.limit_functional(LimitDiscretization::Quadrature)?;
        let norm_sq = |u: &Field| lower.norm_sq(&u.abs_field());
        let bound = 4.0 * (kappa + 1.0);
        let sampler = ShellSampler::new(self.grid, seed);
        let fields: Vec<Field> = sampler
            .on_shell(samples, bound, norm_sq)
            .iter()
            .map(Field::abs_field)
            .collect();
        calibrate_ell0(&fields, norm_sq, bound, &lower.hartree, self.config.q, self.config.v0)
    }

    /// Resolves `κ` and `ℓ0`, calibrating when `ℓ0` is not configured.
    pub fn penalization(&self, seed: u64) -> Result<PenalizationSetup> {
        let kappa = self.kappa()?;
        match self.config.ell0 {
            Some(ell0) => Ok(PenalizationSetup {
                params: PenalizationParams::new(self.config.q, self.config.v0, ell0),
                kappa,
                calibration: None,
            }),
            None => {
                let cal = self.calibrate(kappa, seed, CALIBRATION_SAMPLES)?;
                Ok(PenalizationSetup {
                    params: cal.params,
                    kappa,
                    calibration: Some(cal),
                })
            }
        }
    }

    /// Grid point of `Λ_ε` with the smallest `V` (lowest index on ties).
    pub fn potential_minimizer(&self) -> Result<usize> {
        let v = self.potential_values();
        let mut best: Option<usize> = None;
        for (i, &inside) in self.rescaled.mask.iter().enumerate() {
            if inside && best.is_none_or(|b| v[i] < v[b]) {
                best = Some(i);
            }
        }
        best.ok_or_else(|| Error::InvalidConfig("Λ_ε contains no grid point".into()))
    }

    /// Gaussian centred at the minimizer of `V` in `Λ_ε`, times `e^{i A(0)·x}`.
    pub fn initial_guess(&self) -> Result<Field> {
        let centre = self.grid.point(self.potential_minimizer()?);
        let a0 = self.potentials.a0();
        Ok(Field::from_fn(self.grid, |x| {
            let d = sub(x, &centre);
            Complex64::from_polar((-0.5 * dot(&d, &d)).exp(), dot(&a0, x))
        }))
    }

    /// Whether the origin-centred rescaled point `x` lies in `Λ_ε`.
    pub fn in_region(&self, x: &Point) -> bool {
        self.potentials
            .region
            .contains(&scale(x, self.config.eps), self.grid.dim)
    }
}
