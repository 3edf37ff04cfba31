//! Problem data, potentials and validation of the standing assumptions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{dot, norm, scale, sub, to_point, GridSpec, Point, MAX_DIM};

/// Scalar problem data. `a` is not stored: it is always derived from `ell0`
/// through `f(a) = V0 / ell0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub dim: usize,
    pub s: f64,
    pub mu: f64,
    pub q: f64,
    pub eps: f64,
    pub v0: f64,
    /// Penalization divisor; calibrated when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ell0: Option<f64>,
    /// Mountain-pass cap; set from the canonical ray when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
}

impl ProblemConfig {
    /// Critical Sobolev exponent `2N/(N-2s)`, infinite when `N <= 2s`.
    pub fn critical_exponent(&self) -> f64 {
        let n = self.dim as f64;
        if n > 2.0 * self.s {
            2.0 * n / (n - 2.0 * self.s)
        } else {
            f64::INFINITY
        }
    }

    /// HLS exponent `t = 2N/(2N - μ)`.
    pub fn hls_exponent(&self) -> f64 {
        let n = self.dim as f64;
        2.0 * n / (2.0 * n - self.mu)
    }

    /// Upper end `2(N-μ)/(N-2s)` of the admissible range of `q`.
    pub fn q_upper_bound(&self) -> f64 {
        let n = self.dim as f64;
        if n > 2.0 * self.s {
            2.0 * (n - self.mu) / (n - 2.0 * self.s)
        } else {
            f64::INFINITY
        }
    }

    pub fn outside_theory(&self) -> bool {
        self.dim < 3 || (self.dim as f64) <= 2.0 * self.s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ElectricPotential {
    Constant {
        value: f64,
    },
    /// `base + min(curvature |x - center|², cap)`.
    ClippedQuadratic {
        base: f64,
        center: Vec<f64>,
        curvature: f64,
        cap: f64,
    },
}

impl ElectricPotential {
    pub fn eval(&self, x: &Point) -> f64 {
        match self {
            Self::Constant { value } => *value,
            Self::ClippedQuadratic {
                base,
                center,
                curvature,
                cap,
            } => {
                let d = sub(x, &to_point(center));
                base + (curvature * dot(&d, &d)).min(*cap)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MagneticMode {
    pub amplitude: Vec<f64>,
    pub wavevector: Vec<f64>,
    #[serde(default)]
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MagneticPotential {
    Zero,
    Constant {
        value: Vec<f64>,
    },
    /// `offset + matrix · x`, e.g. the symmetric gauge of a uniform field.
    Linear {
        offset: Vec<f64>,
        matrix: Vec<Vec<f64>>,
    },
    /// `base + Σ amplitude · sin(wavevector · x + phase)`.
    Fourier {
        base: Vec<f64>,
        modes: Vec<MagneticMode>,
    },
}

impl MagneticPotential {
    pub fn eval(&self, x: &Point) -> Point {
        match self {
            Self::Zero => [0.0; MAX_DIM],
            Self::Constant { value } => to_point(value),
            Self::Linear { offset, matrix } => {
                let mut a = to_point(offset);
                for (row, out) in matrix.iter().zip(a.iter_mut()) {
                    *out += dot(&to_point(row), x);
                }
                a
            }
            Self::Fourier { base, modes } => {
                let mut a = to_point(base);
                for m in modes {
                    let arg = dot(&to_point(&m.wavevector), x) + m.phase;
                    let amp = to_point(&m.amplitude);
                    for (out, amp) in a.iter_mut().zip(amp) {
                        *out += amp * arg.sin();
                    }
                }
                a
            }
        }
    }

    /// Some(value) when the potential is spatially constant.
    pub fn constant_value(&self) -> Option<Point> {
        match self {
            Self::Zero => Some([0.0; MAX_DIM]),
            Self::Constant { value } => Some(to_point(value)),
            Self::Fourier { base, modes } if modes.is_empty() => Some(to_point(base)),
            _ => None,
        }
    }

    fn component_lengths(&self) -> Vec<usize> {
        match self {
            Self::Zero => vec![],
            Self::Constant { value } => vec![value.len()],
            Self::Linear { offset, matrix } => {
                let mut v = vec![offset.len(), matrix.len()];
                v.extend(matrix.iter().map(Vec::len));
                v
            }
            Self::Fourier { base, modes } => {
                let mut v = vec![base.len()];
                for m in modes {
                    v.push(m.amplitude.len());
                    v.push(m.wavevector.len());
                }
                v
            }
        }
    }
}

/// The bounded open set Λ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Region {
    Ball { center: Vec<f64>, radius: f64 },
    Box { lower: Vec<f64>, upper: Vec<f64> },
}

impl Region {
    pub fn contains(&self, x: &Point, dim: usize) -> bool {
        match self {
            Self::Ball { center, radius } => norm(&sub(x, &to_point(center))) < *radius,
            Self::Box { lower, upper } => (0..dim).all(|a| lower[a] < x[a] && x[a] < upper[a]),
        }
    }

    /// Largest `|x_a|` reached by the closure of the region along any axis.
    pub fn max_extent(&self, dim: usize) -> f64 {
        match self {
            Self::Ball { center, radius } => (0..dim).map(|a| center[a].abs() + radius).fold(0.0, f64::max),
            Self::Box { lower, upper } => (0..dim).map(|a| lower[a].abs().max(upper[a].abs())).fold(0.0, f64::max),
        }
    }

    /// Distance from `x` (inside) to the boundary.
    pub fn inradius_at(&self, x: &Point, dim: usize) -> f64 {
        match self {
            Self::Ball { center, radius } => radius - norm(&sub(x, &to_point(center))),
            Self::Box { lower, upper } => (0..dim)
                .map(|a| (x[a] - lower[a]).min(upper[a] - x[a]))
                .fold(f64::INFINITY, f64::min),
        }
    }

    fn component_lengths(&self) -> Vec<usize> {
        match self {
            Self::Ball { center, .. } => vec![center.len()],
            Self::Box { lower, upper } => vec![lower.len(), upper.len()],
        }
    }
}

/// Electric potential `V`, magnetic potential `A` and the region `Λ`, all in
/// the original (unscaled) coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    pub electric: ElectricPotential,
    pub magnetic: MagneticPotential,
    pub region: Region,
}

impl PotentialSpec {
    pub fn a0(&self) -> Point {
        self.magnetic.eval(&[0.0; MAX_DIM])
    }

    /// `V(ε x)` for a rescaled grid point `x`.
    pub fn v_scaled(&self, x: &Point, eps: f64) -> f64 {
        self.electric.eval(&scale(x, eps))
    }

    /// `A(ε x)` for a rescaled grid point `x`.
    pub fn a_scaled(&self, x: &Point, eps: f64) -> Point {
        self.magnetic.eval(&scale(x, eps))
    }

    /// Minimum of `V` over the sampled boundary `∂Λ_ε`, if any.
    pub fn boundary_min(&self, rescaled: &RescaledGrid) -> Option<f64> {
        rescaled
            .boundary_points()
            .into_iter()
            .map(|p| self.v_scaled(&p, rescaled.eps))
            .reduce(f64::min)
    }

    /// Minimum of `V` over the grid points of `Λ_ε`.
    pub fn region_min(&self, rescaled: &RescaledGrid) -> Option<f64> {
        rescaled
            .mask
            .iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(|(i, _)| self.v_scaled(&rescaled.grid.point(i), rescaled.eps))
            .reduce(f64::min)
    }
}

/// The computational grid for the rescaled problem with `Λ_ε` marked.
#[derive(Debug, Clone, PartialEq)]
pub struct RescaledGrid {
    pub grid: GridSpec,
    pub eps: f64,
    /// `mask[i]` is true when `ε x_i ∈ Λ`.
    pub mask: Vec<bool>,
}

impl RescaledGrid {
    /// Samples of `∂Λ_ε`: midpoints of axis-neighbour pairs whose membership
    /// in `Λ_ε` differs.
    pub fn boundary_points(&self) -> Vec<Point> {
        let g = &self.grid;
        let strides = g.strides();
        let mut points = Vec::new();
        for i in 0..g.len() {
            let idx = g.multi_index(i);
            for a in 0..g.dim {
                if idx[a] + 1 < g.points && self.mask[i + strides[a]] != self.mask[i] {
                    let mut p = g.point(i);
                    p[a] += 0.5 * g.spacing();
                    points.push(p);
                }
            }
        }
        points
    }
}

/// Builds the grid on which the rescaled equation is solved and marks `Λ_ε`.
pub fn rescaled_grid(cfg: &ProblemConfig, pot: &PotentialSpec, grid: &GridSpec) -> Result<RescaledGrid> {
    grid.check()?;
    if !(cfg.eps.is_finite() && cfg.eps > 0.0) {
        return Err(Error::InvalidConfig(format!("eps must be positive, got {}", cfg.eps)));
    }
    if pot.region.max_extent(grid.dim) / cfg.eps >= grid.extent {
        return Err(Error::RegionLeavesDomain);
    }
    let mask = grid
        .points_iter()
        .map(|p| pot.region.contains(&scale(&p, cfg.eps), grid.dim))
        .collect();
    Ok(RescaledGrid {
        grid: *grid,
        eps: cfg.eps,
        mask,
    })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<String>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn is_admissible(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<Self> {
        if self.is_admissible() {
            Ok(self)
        } else {
            Err(Error::Inadmissible(self.violations))
        }
    }
}

pub const OUTSIDE_THEORY_WARNING: &str = "outside theory hypotheses";

/// Checks every standing assumption. Violations are collected, never thrown.
pub fn validate_config(cfg: &ProblemConfig, pot: &PotentialSpec, grid: &GridSpec) -> ValidationReport {
    let mut report = ValidationReport::default();
    let v = &mut report.violations;
    let n = cfg.dim as f64;

    if let Err(e) = grid.check() {
        v.push(e.to_string());
        return report;
    }
    if grid.dim != cfg.dim {
        v.push(format!("grid dimension {} differs from dim {}", grid.dim, cfg.dim));
        return report;
    }
    if !(cfg.s > 0.0 && cfg.s < 1.0) {
        v.push("s must lie in (0, 1)".into());
    }
    if !(cfg.mu > 0.0 && cfg.mu < 2.0 * cfg.s) {
        v.push("μ must lie in (0, 2s)".into());
    }
    if cfg.mu >= n {
        v.push("μ must lie below N (Riesz kernel not locally integrable)".into());
    }
    if !(cfg.q > 2.0) {
        v.push("q must exceed 2".into());
    }
    if n > 2.0 * cfg.s {
        let upper = cfg.q_upper_bound();
        if cfg.q >= upper {
            v.push(format!("q must lie below 2(N-μ)/(N-2s) = {upper}"));
        }
        let tq = cfg.hls_exponent() * cfg.q;
        if !(tq > 2.0 && tq < cfg.critical_exponent()) {
            v.push(format!(
                "tq = {tq} outside (2, 2*_s) = (2, {})",
                cfg.critical_exponent()
            ));
        }
    } else {
        report.warnings.push("upper bound on q skipped because N <= 2s".into());
    }
    if cfg.outside_theory() {
        report.warnings.push(format!(
            "{OUTSIDE_THEORY_WARNING}: N = {} (theory needs N >= 3 and N > 2s)",
            cfg.dim
        ));
    }
    if !(cfg.eps.is_finite() && cfg.eps > 0.0) {
        v.push("eps must be positive".into());
    }
    if !(cfg.v0.is_finite() && cfg.v0 > 0.0) {
        v.push("V0 must be positive".into());
    }
    if let Some(ell0) = cfg.ell0 {
        if !(ell0.is_finite() && ell0 > 0.0) {
            v.push("ell0 must be positive".into());
        }
    }
    if let Some(kappa) = cfg.kappa {
        if !(kappa.is_finite() && kappa > 0.0) {
            v.push("kappa must be positive".into());
        }
    }

    let lengths_ok = pot
        .magnetic
        .component_lengths()
        .into_iter()
        .chain(pot.region.component_lengths())
        .chain(match &pot.electric {
            ElectricPotential::ClippedQuadratic { center, .. } => vec![center.len()],
            ElectricPotential::Constant { .. } => vec![],
        })
        .all(|len| len == cfg.dim);
    if !lengths_ok {
        v.push(format!("potential vectors must have {} components", cfg.dim));
        return report;
    }
    if !v.is_empty() {
        return report;
    }

    let rescaled = match rescaled_grid(cfg, pot, grid) {
        Ok(r) => r,
        Err(e) => {
            report.violations.push(e.to_string());
            return report;
        }
    };
    let v = &mut report.violations;

    // V bounded below by V0.
    let v_min = grid
        .points_iter()
        .map(|p| pot.v_scaled(&p, cfg.eps))
        .fold(f64::INFINITY, f64::min);
    if v_min < cfg.v0 {
        v.push(format!("V must be at least V0: min V = {v_min} < V0 = {}", cfg.v0));
    }
    // V strictly larger on the boundary of Λ than inside it.
    match (pot.region_min(&rescaled), pot.boundary_min(&rescaled)) {
        (Some(inside), Some(boundary)) => {
            if boundary <= inside {
                v.push(format!(
                    "V must be larger on ∂Λ than inside Λ: min on ∂Λ = {boundary}, min over Λ = {inside}"
                ));
            }
            if (inside - cfg.v0).abs() > 1e-9 * cfg.v0.max(1.0) {
                report
                    .warnings
                    .push(format!("sampled inf of V over Λ is {inside}, not V0 = {}", cfg.v0));
            }
        }
        _ => v.push("Λ_ε covers no grid cell, so V on ∂Λ cannot be compared".into()),
    }
    if !pot.region.contains(&[0.0; MAX_DIM], cfg.dim) {
        report.warnings.push("Λ does not contain the origin".into());
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn cfg(dim: usize, s: f64, mu: f64, q: f64) -> ProblemConfig {
        ProblemConfig {
            dim,
            s,
            mu,
            q,
            eps: 1.0,
            v0: 1.0,
            ell0: None,
            kappa: None,
        }
    }

    fn well(dim: usize) -> PotentialSpec {
        PotentialSpec {
            electric: ElectricPotential::ClippedQuadratic {
                base: 1.0,
                center: vec![0.0; dim],
                curvature: 1.0,
                cap: 4.0,
            },
            magnetic: MagneticPotential::Zero,
            region: Region::Ball {
                center: vec![0.0; dim],
                radius: 1.0,
            },
        }
    }

    #[test]
    fn admissible_three_dimensional_example() {
        let c = cfg(3, 0.75, 1.0, 2.5);
        assert!((c.q_upper_bound() - 2.0 * 2.0 / 1.5).abs() < 1e-15);
        let grid = GridSpec::new(3, 4.0, 8).unwrap();
        let report = validate_config(&c, &well(3), &grid);
        assert!(report.is_admissible(), "{:?}", report.violations);
        let tq = c.hls_exponent() * c.q;
        assert!(tq > 2.0 && tq < c.critical_exponent());
    }

    #[test]
    fn mu_above_two_s_is_rejected() {
        let c = cfg(3, 0.75, 1.6, 2.5);
        let grid = GridSpec::new(3, 4.0, 8).unwrap();
        let report = validate_config(&c, &well(3), &grid);
        assert!(report.violations.iter().any(|v| v.contains("μ must lie in (0, 2s)")));
    }

    #[test]
    fn constant_potential_violates_v2() {
        let c = cfg(1, 0.5, 0.4, 3.0);
        let mut pot = well(1);
        pot.electric = ElectricPotential::Constant { value: 1.0 };
        let grid = GridSpec::new(1, 8.0, 64).unwrap();
        let report = validate_config(&c, &pot, &grid);
        assert!(report
            .violations
            .iter()
            .any(|v| v.starts_with("V must be larger on ∂Λ")));
        assert!(report.warnings.iter().any(|w| w.contains(OUTSIDE_THEORY_WARNING)));
    }

    #[test]
    fn rescaling_examples() {
        let pot = well(1);
        let grid = GridSpec::new(1, 5.0, 64).unwrap();
        let mut c = cfg(1, 0.5, 0.4, 3.0);
        c.eps = 0.5;
        let r = rescaled_grid(&c, &pot, &grid).unwrap();
        for (i, &m) in r.mask.iter().enumerate() {
            assert_eq!(m, grid.point(i)[0].abs() < 2.0);
        }
        c.eps = 1.0;
        let r = rescaled_grid(&c, &pot, &grid).unwrap();
        for (i, &m) in r.mask.iter().enumerate() {
            assert_eq!(m, grid.point(i)[0].abs() < 1.0);
        }
        c.eps = 0.1;
        assert!(matches!(rescaled_grid(&c, &pot, &grid), Err(Error::RegionLeavesDomain)));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let json = r#"{"dim":1,"s":0.5,"mu":0.4,"q":3,"eps":1,"v0":1,"sigma":2}"#;
        let err = serde_json::from_str::<ProblemConfig>(json).unwrap_err();
        assert!(err.to_string().contains("sigma"));
        let json = r#"{"kind":"ball","center":[0],"radius":1,"colour":2}"#;
        assert!(serde_json::from_str::<Region>(json).is_err());
    }
}
