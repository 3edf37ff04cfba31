//! Projected gradient descent on the Nehari manifold and the `ε` sweep.

use serde::{Deserialize, Serialize};

use crate::config::OUTSIDE_THEORY_WARNING;
use crate::diagnostics::{fit_decay, DecayFit};
use crate::energy::{EnergyReport, Functional};
use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::{scale, Point, MAX_DIM};
use crate::operators::Preconditioner;
use crate::problem::{LimitDiscretization, PenalizationSetup, Problem};
use crate::sampling::{random_field, seeded_rng, FieldShape};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverOptions {
    pub max_iters: usize,
    /// Stop when the `L²` norm of the gradient falls below this. The norm of
    /// the preconditioned gradient is then smaller still.
    pub grad_tol: f64,
    /// Seeds the perturbation added to the initial guess.
    pub seed: u64,
    /// Relative size of the random perturbation of the initial guess.
    pub perturbation: f64,
    pub precondition: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iters: 2000,
            grad_tol: 1e-7,
            seed: 0,
            perturbation: 0.0,
            precondition: true,
        }
    }
}

const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 60;
const STEP_RANGE: (f64, f64) = (1e-4, 1e4);

/// Result of one Nehari-constrained minimization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimizeStats {
    pub iterations: usize,
    pub gradient_norm: f64,
    pub preconditioned_gradient_norm: f64,
    /// Accepted energies, starting from the projected initial guess.
    pub energies: Vec<f64>,
    pub energy: EnergyReport,
}

/// Minimizes `J` over the Nehari manifold by projected Barzilai–Borwein
/// steps `u ← t★(u - τ P ∇J) (u - τ P ∇J)` with Armijo backtracking.
pub fn minimize_on_nehari(
    j: &Functional,
    start: &Field,
    s: f64,
    v0: f64,
    opts: &SolverOptions,
) -> Result<(Field, MinimizeStats)> {
    if !(opts.grad_tol > 0.0) {
        return Err(Error::InvalidConfig("grad_tol must be positive".into()));
    }
    let grid = start.grid;
    let precond = opts.precondition.then(|| Preconditioner::new(grid, s, v0));
    let apply_p = |g: &Field| match &precond {
        Some(p) => p.apply(g),
        None => g.clone(),
    };
    let apply_p_inv = |g: &Field| match &precond {
        Some(p) => p.apply_inverse(g),
        None => g.clone(),
    };

    let t = j.nehari_project(start)?.t_star;
    let mut u = start.scaled(t);
    let (mut report, mut grad) = j.energy_and_gradient(&u);
    let mut energies = vec![report.j];
    let mut step = 1.0;
    let mut previous: Option<(Field, Field)> = None;

    for iteration in 0..=opts.max_iters {
        if !report.j.is_finite() || !u.is_finite() {
            return Err(Error::QuadratureBlowUp);
        }
        let pg = apply_p(&grad);
        let gpg = grad.inner(&pg);
        let gnorm = grad.norm_l2();
        if gnorm < opts.grad_tol {
            let stats = MinimizeStats {
                iterations: iteration,
                gradient_norm: gnorm,
                preconditioned_gradient_norm: gpg.max(0.0).sqrt(),
                energies,
                energy: report,
            };
            return Ok((u, stats));
        }
        if iteration == opts.max_iters {
            break;
        }
        if let Some((u_old, g_old)) = &previous {
            let ds = u.axpy(-1.0, u_old);
            let dy = grad.axpy(-1.0, g_old);
            let sy = ds.inner(&dy);
            step = if sy > 0.0 {
                ds.inner(&apply_p_inv(&ds)) / sy
            } else {
                1.0
            };
            step = step.clamp(STEP_RANGE.0, STEP_RANGE.1);
        }

        // One application of the linear part per trial: it commutes with the
        // Nehari rescaling.
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let trial = u.axpy(-step, &pg);
            let l_trial = j.linear.apply(&trial);
            let norm_sq = j.norm_sq_given(&trial, &l_trial);
            if let Ok(proj) = j.nehari_project_with(&trial, norm_sq) {
                let t = proj.t_star;
                let cand = trial.scaled(t);
                let (e, g) = j.energy_and_gradient_given(&cand, &l_trial.scaled(t));
                if e.j.is_finite() && e.j <= report.j - ARMIJO * step * gpg + 1e-14 * report.j.abs() {
                    accepted = Some((cand, e, g));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((next, next_report, next_grad)) = accepted else {
            return Err(Error::NonConvergence {
                iterations: iteration,
                residual: gnorm,
                last: Box::new(u),
            });
        };
        previous = Some((u, grad));
        u = next;
        (report, grad) = (next_report, next_grad);
        energies.push(report.j);
    }
    let residual = grad.norm_l2();
    Err(Error::NonConvergence {
        iterations: opts.max_iters,
        residual,
        last: Box::new(u),
    })
}

/// Per-solve summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    #[serde(with = "crate::io::real")]
    pub eps: f64,
    /// Converged level `c_ε` (or `c_{V0}` for the limit problem).
    #[serde(with = "crate::io::real")]
    pub c_eps: f64,
    /// Grid argmax of `|u|` in rescaled coordinates.
    #[serde(with = "crate::io::real_vec")]
    pub x_eps: Vec<f64>,
    /// `ε x_eps` in original coordinates.
    #[serde(with = "crate::io::real_vec")]
    pub x_eps_original: Vec<f64>,
    #[serde(rename = "V_at_max")]
    #[serde(with = "crate::io::real")]
    pub v_at_max: f64,
    /// `|u| < a` (and `|u|² <= a`) at every grid point outside `Λ_ε`.
    pub valid_penalization: bool,
    #[serde(with = "crate::io::real")]
    pub max_outside: f64,
    #[serde(with = "crate::io::real")]
    pub decay_exponent: f64,
    #[serde(rename = "Cfit")]
    #[serde(with = "crate::io::real")]
    pub c_fit: f64,
    pub iterations: usize,
    /// `L²` norm of the gradient at exit.
    #[serde(with = "crate::io::real")]
    pub residual: f64,
    #[serde(with = "crate::io::real")]
    pub preconditioned_residual: f64,
    /// `|<J'(u), u>| / ‖u‖²`.
    #[serde(with = "crate::io::real")]
    pub nehari_residual: f64,
    #[serde(with = "crate::io::real")]
    pub sup_norm: f64,
    /// Largest `|u|` on the box boundary over `‖u‖_∞`.
    #[serde(with = "crate::io::real")]
    pub boundary_ratio: f64,
    pub energy: EnergyReport,
    pub seed: u64,
    pub warnings: Vec<String>,
}

fn start_field(base: Field, opts: &SolverOptions, real: bool) -> Field {
    if opts.perturbation == 0.0 {
        return base;
    }
    let mut rng = seeded_rng(opts.seed);
    let shape = FieldShape {
        real,
        ..FieldShape::default()
    };
    let noise = random_field(base.grid, &shape, &mut rng);
    let scale = opts.perturbation * base.sup_norm() / noise.sup_norm().max(f64::MIN_POSITIVE);
    base.axpy(scale, &noise)
}

fn boundary_ratio(u: &Field) -> f64 {
    let sup = u.sup_norm();
    let edge = (0..u.len())
        .filter(|&i| u.grid.on_boundary(i))
        .map(|i| u.values[i].norm())
        .fold(0.0, f64::max);
    edge / sup
}

fn finish(
    problem: &Problem,
    mut u: Field,
    stats: MinimizeStats,
    opts: &SolverOptions,
    threshold: Option<f64>,
) -> (Field, SolveReport) {
    let grid = problem.grid;
    let dim = grid.dim;
    let eps = problem.eps();
    let imax = u.argmax();
    u.align_phase(imax);
    let x: Point = grid.point(imax);
    let mut max_outside: f64 = 0.0;
    for (i, &inside) in problem.rescaled.mask.iter().enumerate() {
        if !inside {
            max_outside = max_outside.max(u.values[i].norm());
        }
    }
    let valid = match threshold {
        Some(a) => max_outside < a && max_outside * max_outside <= a,
        None => true,
    };
    let DecayFit { exponent, constant, .. } = fit_decay(&u, &x, problem.config.s);
    let mut warnings = problem.validation.warnings.clone();
    if problem.config.outside_theory() && !warnings.iter().any(|w| w.contains(OUTSIDE_THEORY_WARNING)) {
        warnings.push(OUTSIDE_THEORY_WARNING.into());
    }
    let ratio = boundary_ratio(&u);
    if ratio > 1e-6 {
        warnings.push(format!(
            "solution at the box boundary is {ratio:.2e} of its maximum (target 1e-6)"
        ));
    }
    let norm_sq = stats.energy.norm_sq();
    let report = SolveReport {
        eps,
        c_eps: stats.energy.j,
        x_eps: x[..dim].to_vec(),
        x_eps_original: scale(&x, eps)[..dim].to_vec(),
        v_at_max: problem.potentials.v_scaled(&x, eps),
        valid_penalization: valid,
        max_outside,
        decay_exponent: exponent,
        c_fit: constant,
        iterations: stats.iterations,
        residual: stats.gradient_norm,
        preconditioned_residual: stats.preconditioned_gradient_norm,
        nehari_residual: stats.energy.nehari_residual.abs() / norm_sq,
        sup_norm: u.sup_norm(),
        boundary_ratio: ratio,
        energy: stats.energy,
        seed: opts.seed,
        warnings,
    };
    (u, report)
}

/// Mountain-pass solution of the penalized problem at the problem's `ε`.
pub fn solve_penalized(
    problem: &Problem,
    setup: &PenalizationSetup,
    opts: &SolverOptions,
    warm_start: Option<&Field>,
) -> Result<(Field, SolveReport)> {
    problem.validation.clone().into_result()?;
    let j = problem.penalized_functional(setup.params)?;
    let base = match warm_start {
        Some(u) => u.clone(),
        None => problem.initial_guess()?,
    };
    let start = start_field(base, opts, false);
    let (u, stats) = minimize_on_nehari(&j, &start, problem.config.s, problem.config.v0, opts)?;
    Ok(finish(problem, u, stats, opts, Some(setup.params.a)))
}

/// Real Gaussian at the grid origin, the default start for the limit problem.
pub fn limit_initial_guess(problem: &Problem) -> Field {
    let g = problem.grid;
    Field::from_fn(g, |x| {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        num_complex::Complex64::new((-0.5 * r2).exp(), 0.0)
    })
}

/// Ground state of the limit problem `(-Δ)^s u + V0 u = (K ∗ F(|u|²)) f(|u|²) u`.
pub fn solve_limit(
    problem: &Problem,
    kind: LimitDiscretization,
    opts: &SolverOptions,
    start: Option<&Field>,
) -> Result<(Field, SolveReport)> {
    let j = problem.limit_functional(kind)?;
    let base = start.cloned().unwrap_or_else(|| limit_initial_guess(problem));
    let start = start_field(base, opts, true);
    let (u, stats) = minimize_on_nehari(&j, &start, problem.config.s, problem.config.v0, opts)?;
    let (u, mut report) = finish(problem, u, stats, opts, None);
    report.v_at_max = problem.config.v0;
    report.max_outside = 0.0;
    Ok((u, report))
}

/// `x ↦ u(x · factor)` by multilinear interpolation; zero outside the box.
pub fn rescale_field(u: &Field, factor: f64) -> Field {
    let grid = u.grid;
    let h = grid.spacing();
    let m = grid.points;
    Field::from_fn(grid, |x| {
        let mut base = [0usize; MAX_DIM];
        let mut frac = [0.0; MAX_DIM];
        for a in 0..grid.dim {
            let pos = (x[a] * factor + grid.extent) / h;
            if pos < 0.0 || pos > (m - 1) as f64 {
                return num_complex::Complex64::default();
            }
            let i = (pos.floor() as usize).min(m - 2);
            base[a] = i;
            frac[a] = pos - i as f64;
        }
        let mut acc = num_complex::Complex64::default();
        for corner in 0..(1usize << grid.dim) {
            let mut idx = base;
            let mut w = 1.0;
            for a in 0..grid.dim {
                if corner >> a & 1 == 1 {
                    idx[a] += 1;
                    w *= frac[a];
                } else {
                    w *= 1.0 - frac[a];
                }
            }
            acc += u.values[grid.flat_index(&idx)] * w;
        }
        acc
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub eps: f64,
    pub report: Option<SolveReport>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTrend {
    #[serde(with = "crate::io::real_vec")]
    pub eps: Vec<f64>,
    #[serde(rename = "V_at_max")]
    #[serde(with = "crate::io::real_vec")]
    pub v_at_max: Vec<f64>,
    #[serde(with = "crate::io::real_vec")]
    pub c_eps: Vec<f64>,
    pub valid_penalization: Vec<bool>,
    #[serde(with = "crate::io::real_vec")]
    pub sup_norm: Vec<f64>,
    #[serde(with = "crate::io::real_vec")]
    pub boundary_ratio: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub entries: Vec<SweepEntry>,
    pub trend: SweepTrend,
    /// Penalization calibrated at the first `ε` and held fixed.
    pub penalization: PenalizationSetup,
}

impl SweepReport {
    pub fn reports(&self) -> impl Iterator<Item = &SolveReport> {
        self.entries.iter().filter_map(|e| e.report.as_ref())
    }
}

/// Solves at each `ε` in descending order, warm-starting from the previous
/// solution rescaled by `ε_new / ε_old`. Failures are recorded and skipped.
pub fn sweep_epsilon(
    problem: &Problem,
    eps_list: &[f64],
    opts: &SolverOptions,
) -> Result<(SweepReport, Vec<Option<Field>>)> {
    if eps_list.len() < 2 {
        return Err(Error::InvalidConfig("a sweep needs at least two values of eps".into()));
    }
    if eps_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidConfig("eps list must be strictly descending".into()));
    }
    let first = problem.with_eps(eps_list[0])?;
    first.validation.clone().into_result()?;
    let setup = first.penalization(opts.seed)?;

    let mut entries = Vec::new();
    let mut fields = Vec::new();
    let mut previous: Option<(f64, Field)> = None;
    for &eps in eps_list {
        let outcome = problem.with_eps(eps).and_then(|p| {
            let warm = previous.as_ref().map(|(e_old, u)| rescale_field(u, eps / e_old));
            solve_penalized(&p, &setup, opts, warm.as_ref())
        });
        match outcome {
            Ok((u, report)) => {
                previous = Some((eps, u.clone()));
                fields.push(Some(u));
                entries.push(SweepEntry {
                    eps,
                    report: Some(report),
                    error: None,
                });
            }
            Err(e) => {
                fields.push(None);
                entries.push(SweepEntry {
                    eps,
                    report: None,
                    error: Some(e.to_string()),
                });
            }
        }
    }
    let ok: Vec<&SolveReport> = entries.iter().filter_map(|e| e.report.as_ref()).collect();
    let trend = SweepTrend {
        eps: ok.iter().map(|r| r.eps).collect(),
        v_at_max: ok.iter().map(|r| r.v_at_max).collect(),
        c_eps: ok.iter().map(|r| r.c_eps).collect(),
        valid_penalization: ok.iter().map(|r| r.valid_penalization).collect(),
        sup_norm: ok.iter().map(|r| r.sup_norm).collect(),
        boundary_ratio: ok.iter().map(|r| r.boundary_ratio).collect(),
    };
    Ok((
        SweepReport {
            entries,
            trend,
            penalization: setup,
        },
        fields,
    ))
}
