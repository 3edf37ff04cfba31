//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on failure.
//!
//! The coarse three-dimensional concentration sweep runs after criterion 11;
//! set `CHOQUARD_ACCEPTANCE_SKIP_3D=1` to leave it out.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use choquard_core::config::{ElectricPotential, MagneticMode, MagneticPotential, PotentialSpec, ProblemConfig, Region};
use choquard_core::diagnostics::{
    check_concentration, check_diamagnetic, check_hartree_bound, check_negative_ray, check_ray, check_small_shell,
    fit_decay, mountain_pass_radius,
};
use choquard_core::grid::{dot, GridSpec, Point};
use choquard_core::io::{load_field, save_field, FieldContext, RunConfig};
use choquard_core::operators::{spectral_frac_laplacian, HartreeCache, NonlocalQuadrature, QuadratureOptions};
use choquard_core::problem::{LimitDiscretization, Problem};
use choquard_core::sampling::{random_field, random_magnetic, seeded_rng, FieldShape, ShellSampler};
use choquard_core::solver::{solve_limit, solve_penalized, sweep_epsilon, SolverOptions};
use choquard_core::{Field, PenalizationParams};
use num_complex::Complex64;
use rand::Rng;

type Outcome = Result<String, String>;

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
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

fn gaussian(grid: GridSpec) -> Field {
    Field::from_fn(grid, |x| Complex64::new((-dot(x, x)).exp(), 0.0))
}

fn criterion_1() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for s in [0.3, 0.5, 0.7] {
        let mut errs = Vec::new();
        for m in [256, 512] {
            let grid = GridSpec::new(1, 20.0, m).unwrap();
            let u = gaussian(grid);
            let op = NonlocalQuadrature::real(grid, s, QuadratureOptions::default()).unwrap();
            errs.push(rel_linf(&op.apply_direct(&u), &spectral_frac_laplacian(&u, s)));
        }
        ok &= errs[0] < 1e-3 && errs[1] < errs[0];
        lines.push(format!("s={s}: {:.2e} -> {:.2e}", errs[0], errs[1]));
    }
    verdict(ok, lines.join(", "))
}

fn commensurate(dim: usize, extent: f64, rng: &mut impl Rng) -> Point {
    let mut c = [0.0; 3];
    for v in c.iter_mut().take(dim) {
        *v = rng.random_range(-3i32..=3) as f64 * std::f64::consts::PI / extent;
    }
    c
}

fn shifted(a: &MagneticPotential, c: &Point) -> MagneticPotential {
    match a {
        MagneticPotential::Fourier { base, modes } => MagneticPotential::Fourier {
            base: base.iter().enumerate().map(|(i, b)| b + c[i]).collect(),
            modes: modes.clone(),
        },
        _ => unreachable!(),
    }
}

fn criterion_2() -> Outcome {
    let mut rng = seeded_rng(2);
    let mut worst: f64 = 0.0;
    for k in 0..20 {
        let (dim, m, l) = if k % 2 == 0 { (1, 128, 8.0) } else { (2, 24, 4.0) };
        let grid = GridSpec::new(dim, l, m).unwrap();
        let a = random_magnetic(dim, &mut rng);
        let c = commensurate(dim, l, &mut rng);
        let u = random_field(grid, &FieldShape::default(), &mut rng);
        let eps = 0.7;
        let opts = QuadratureOptions::default();
        let base = NonlocalQuadrature::new(grid, 0.6, &a, eps, opts)
            .unwrap()
            .gagliardo_form(&u);
        // A_ε + c corresponds to A + c in unscaled coordinates.
        let moved = NonlocalQuadrature::new(grid, 0.6, &shifted(&a, &c), eps, opts)
            .unwrap()
            .gagliardo_form(&u.with_plane_wave(&c));
        worst = worst.max((moved - base).abs() / base);
    }
    verdict(
        worst < 1e-12,
        format!("max relative deviation {worst:.2e} over 20 fields"),
    )
}

fn criterion_3() -> Outcome {
    let mut rng = seeded_rng(3);
    let grid = GridSpec::new(1, 8.0, 128).unwrap();
    let mut failures = 0;
    let mut min_gap = f64::INFINITY;
    for k in 0..100 {
        let a = random_magnetic(1, &mut rng);
        let u = random_field(grid, &FieldShape::default(), &mut rng);
        let op = NonlocalQuadrature::new(grid, 0.5, &a, 1.0, QuadratureOptions::default()).unwrap();
        let r = check_diamagnetic(&u, &op, &a, 1.0, k);
        if !r.passed {
            failures += 1;
        }
        min_gap = min_gap.min((r.rhs - r.lhs) / r.rhs);
    }
    verdict(
        failures == 0,
        format!("{failures} failures in 100 fields, smallest relative gap {min_gap:.2e}"),
    )
}

fn riesz_kernel(grid: &GridSpec, mu: f64, offset: &[i64]) -> f64 {
    let h = grid.spacing();
    let r2: f64 = offset.iter().map(|&o| (o as f64 * h).powi(2)).sum();
    if r2 > 0.0 {
        return r2.powf(-mu / 2.0);
    }
    let n = grid.dim as f64;
    if grid.dim == 1 {
        (h / 2.0).powf(-mu) / (1.0 - mu)
    } else {
        let ball = std::f64::consts::PI.powf(n / 2.0) / statrs_gamma(n / 2.0 + 1.0);
        let radius = (h.powi(grid.dim as i32) / ball).powf(1.0 / n);
        n / (n - mu) * radius.powf(-mu)
    }
}

fn statrs_gamma(x: f64) -> f64 {
    // Γ(1.5) and Γ(2.5) are the only values needed here.
    if (x - 2.0).abs() < 1e-12 {
        1.0
    } else if (x - 2.5).abs() < 1e-12 {
        0.75 * std::f64::consts::PI.sqrt()
    } else {
        panic!("unexpected gamma argument {x}")
    }
}

fn criterion_4() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for (dim, m, l) in [(1, 256, 20.0), (2, 64, 8.0)] {
        for mu in [0.3, 0.8] {
            let grid = GridSpec::new(dim, l, m).unwrap();
            let h: Vec<f64> = grid
                .points_iter()
                .map(|x| (-dot(&x, &x) / 2.0).exp() * (1.0 + 0.3 * x[0]))
                .collect();
            let fast = HartreeCache::new(grid, mu).unwrap().convolve(&h);
            let vol = grid.cell_volume();
            let mm = m as i64;
            let signed = |d: i64| {
                let d = d.rem_euclid(mm);
                if d > mm / 2 {
                    d - mm
                } else {
                    d
                }
            };
            let mut worst: f64 = 0.0;
            let scale = fast.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            for (i, fi) in fast.iter().enumerate() {
                let xi = grid.multi_index(i);
                let mut acc = 0.0;
                for (j, hj) in h.iter().enumerate() {
                    let xj = grid.multi_index(j);
                    let off: Vec<i64> = (0..dim).map(|a| signed(xi[a] as i64 - xj[a] as i64)).collect();
                    acc += riesz_kernel(&grid, mu, &off) * hj;
                }
                worst = worst.max((acc * vol - fi).abs());
            }
            let rel = worst / scale;
            ok &= rel < 1e-8;
            lines.push(format!("N={dim} mu={mu}: {rel:.1e}"));
        }
    }
    verdict(ok, lines.join(", "))
}

fn well(dim: usize) -> ElectricPotential {
    ElectricPotential::ClippedQuadratic {
        base: 1.0,
        center: vec![0.0; dim],
        curvature: 1.0,
        cap: 4.0,
    }
}

fn wavy(dim: usize) -> MagneticPotential {
    MagneticPotential::Fourier {
        base: vec![0.5; dim],
        modes: vec![MagneticMode {
            amplitude: vec![0.3; dim],
            wavevector: vec![1.0; dim],
            phase: 0.0,
        }],
    }
}

fn interval() -> Region {
    Region::Box {
        lower: vec![-1.0],
        upper: vec![1.0],
    }
}

fn config(s: f64, mu: f64, q: f64, eps: f64) -> ProblemConfig {
    ProblemConfig {
        dim: 1,
        s,
        mu,
        q,
        eps,
        v0: 1.0,
        ell0: None,
        kappa: None,
    }
}

fn criterion_5() -> Outcome {
    let grid = GridSpec::new(1, 16.0, 128).unwrap();
    let pot = PotentialSpec {
        electric: well(1),
        magnetic: wavy(1),
        region: interval(),
    };
    let problem = Problem::new(config(0.5, 0.4, 3.0, 0.5), pot, grid).unwrap();
    // Small ℓ0 keeps both branches of the penalized nonlinearity in play.
    let j = problem
        .penalized_functional(PenalizationParams::new(3.0, 1.0, 2.0))
        .unwrap();
    let mut rng = seeded_rng(5);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let u = random_field(grid, &FieldShape::default(), &mut rng);
        let v = random_field(grid, &FieldShape::default(), &mut rng);
        let analytic = j.gradient(&u).inner(&v);
        let d = 1e-6;
        let fd = (j.energy(&u.axpy(d, &v)).j - j.energy(&u.axpy(-d, &v)).j) / (2.0 * d);
        worst = worst.max((fd - analytic).abs() / analytic.abs());
    }
    verdict(worst < 1e-5, format!("max relative error {worst:.2e} over 20 pairs"))
}

fn criterion_6() -> Outcome {
    let grid = GridSpec::new(1, 16.0, 128).unwrap();
    let pot = PotentialSpec {
        electric: well(1),
        magnetic: wavy(1),
        region: interval(),
    };
    let problem = Problem::new(config(0.5, 0.4, 3.0, 0.25), pot, grid).unwrap();
    let q = 3.0;
    let j = problem
        .penalized_functional(PenalizationParams::new(q, 1.0, 50.0))
        .unwrap();
    let cache = HartreeCache::new(grid, 0.4).unwrap();
    let mut rng = seeded_rng(6);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let shape = FieldShape {
            width: (0.5, 2.0),
            reach: 0.0,
            ..FieldShape::default()
        };
        let raw = random_field(grid, &shape, &mut rng);
        let values = raw
            .values
            .iter()
            .zip(&problem.rescaled.mask)
            .map(|(v, &inside)| if inside { *v } else { Complex64::default() })
            .collect();
        let u = Field::from_values(grid, values);
        let norm_sq = j.norm_sq(&u);
        let uq: Vec<f64> = u.modulus().iter().map(|m| m.powf(q)).collect();
        let d: f64 = cache.convolve(&uq).iter().zip(&uq).map(|(k, v)| k * v).sum::<f64>() * grid.cell_volume();
        let closed = (q * norm_sq / (2.0 * d)).powf(1.0 / (2.0 * q - 2.0));
        let t = j.nehari_project(&u).unwrap().t_star;
        worst = worst.max((t - closed).abs() / closed);
    }
    verdict(
        worst < 1e-10,
        format!("max relative deviation {worst:.2e} over 20 fields"),
    )
}

fn criterion_7() -> Outcome {
    let grid = GridSpec::new(1, 16.0, 128).unwrap();
    let pot = PotentialSpec {
        electric: well(1),
        magnetic: wavy(1),
        region: interval(),
    };
    let problem = Problem::new(config(0.5, 0.4, 3.0, 0.5), pot, grid).unwrap();
    let setup = problem.penalization(7).unwrap();
    let j = problem.penalized_functional(setup.params).unwrap();
    let unit = ShellSampler::new(grid, 70).on_shell(50, 1.0, |u| j.norm_sq(u));
    let (rho, c) = mountain_pass_radius(&j, &unit);
    let fresh = ShellSampler::new(grid, 71).raw(50);
    let shell = check_small_shell(&j, &fresh, rho, c);
    let ray = check_negative_ray(&j, &problem.canonical_bump());
    let opts = SolverOptions::default();
    let (u, _) = solve_penalized(&problem, &setup, &opts, None).map_err(|e| e.to_string())?;
    let pen_ray = check_ray(&j, &u);
    let limit = problem.limit_functional(LimitDiscretization::Spectral).unwrap();
    let (w, _) = solve_limit(&problem, LimitDiscretization::Spectral, &opts, None).map_err(|e| e.to_string())?;
    let lim_ray = check_ray(&limit, &w);
    verdict(
        shell.passed && ray.passed && pen_ray.passed && lim_ray.passed,
        format!(
            "rho={rho:.3e}, min J on shell {:.3e}, min J(t u0) {:.3e}, rays unimodal {}/{}",
            shell.rhs, ray.lhs, pen_ray.passed, lim_ray.passed
        ),
    )
}

fn criterion_8() -> Outcome {
    let grid = GridSpec::new(1, 16.0, 128).unwrap();
    let pot = PotentialSpec {
        electric: well(1),
        magnetic: wavy(1),
        region: interval(),
    };
    let problem = Problem::new(config(0.5, 0.4, 3.0, 0.5), pot, grid).unwrap();
    let setup = problem.penalization(8).unwrap();
    let j = problem.penalized_functional(setup.params).unwrap();
    let bound = 4.0 * (setup.kappa + 1.0);
    let fresh = ShellSampler::new(grid, 80).on_shell(64, bound, |u| j.norm_sq(u));
    let r = check_hartree_bound(&fresh, &j, bound);
    verdict(
        r.passed,
        format!("ratio {:.3} (calibrated ell0 = {:.3e})", r.lhs, setup.params.ell0),
    )
}

fn criterion_9() -> Outcome {
    let grid = GridSpec::new(1, 40.0, 512).unwrap();
    let pot = PotentialSpec {
        electric: ElectricPotential::Constant { value: 1.0 },
        magnetic: MagneticPotential::Zero,
        region: interval(),
    };
    let problem = Problem::new_unchecked(config(0.5, 0.4, 3.0, 1.0), pot, grid).unwrap();
    let (w, report) = solve_limit(&problem, LimitDiscretization::Spectral, &SolverOptions::default(), None)
        .map_err(|e| e.to_string())?;
    let fit = fit_decay(&w, &grid.point(w.argmax()), 0.5);
    let target = -2.0;
    verdict(
        (fit.exponent - target).abs() <= 0.3,
        format!(
            "slope {:.3} (target {target}), c_V0 = {:.6}, {} iterations",
            fit.exponent, report.c_eps, report.iterations
        ),
    )
}

fn concentration_problem(dim: usize, m: usize, l: f64, half: f64) -> Problem {
    let region = Region::Box {
        lower: vec![-half; dim],
        upper: vec![half; dim],
    };
    let pot = PotentialSpec {
        electric: well(dim),
        magnetic: wavy(dim),
        region,
    };
    let cfg = ProblemConfig {
        dim,
        s: 0.75,
        mu: 0.5,
        q: 4.0,
        eps: 0.5,
        v0: 1.0,
        ell0: None,
        kappa: None,
    };
    let cfg = if dim == 3 { ProblemConfig { s: 0.9, ..cfg } } else { cfg };
    Problem::new(cfg, pot, GridSpec::new(dim, l, m).unwrap()).unwrap()
}

fn concentration(problem: &Problem, limit_kind: LimitDiscretization, tol: f64) -> Outcome {
    let eps_list = [0.5, 0.25, 0.125];
    let opts = SolverOptions::default();
    let (sweep, _) = sweep_epsilon(problem, &eps_list, &opts).map_err(|e| e.to_string())?;
    let (_, limit) = solve_limit(problem, limit_kind, &opts, None).map_err(|e| e.to_string())?;
    let smallest = problem.with_eps(0.125).unwrap();
    let boundary_min = smallest.potentials.boundary_min(&smallest.rescaled).unwrap();
    let conc = check_concentration(&sweep.entries, &problem.potentials, 1.0, boundary_min);
    let Some(last) = sweep.entries.last().and_then(|e| e.report.as_ref()) else {
        return Err(format!(
            "smallest eps failed: {:?}",
            sweep.entries.last().and_then(|e| e.error.clone())
        ));
    };
    let gaps: Vec<String> = sweep.reports().map(|r| format!("{:.2e}", r.v_at_max - 1.0)).collect();
    let ratio = last.c_eps / limit.c_eps;
    let warned = last.warnings.iter().any(|w| w.contains("outside theory hypotheses"));
    let ok = conc.passed && last.valid_penalization && ratio <= 1.0 + tol && warned == problem.config.outside_theory();
    verdict(
        ok,
        format!(
            "V(x_eps)-V0 = [{}], max|u| outside = {:.2e} vs a = {:.2e}, c_eps/c_V0 = {ratio:.4}",
            gaps.join(", "),
            last.max_outside,
            sweep.penalization.params.a
        ),
    )
}

fn criterion_10() -> Outcome {
    concentration(
        &concentration_problem(1, 512, 40.0, 1.0),
        LimitDiscretization::Spectral,
        0.05,
    )
}

/// Coarse three-dimensional run; the level of the limit problem comes from
/// the same truncated quadrature as the penalized solves.
fn criterion_10_three_dimensional() -> Outcome {
    let mut problem = concentration_problem(3, 32, 8.0, 0.5);
    problem.quadrature = QuadratureOptions {
        cutoff: Some(2.0),
        ..QuadratureOptions::default()
    };
    concentration(&problem, LimitDiscretization::Quadrature, 0.2)
}

fn criterion_11() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let grid = GridSpec::new(2, 4.0, 16).unwrap();
    let mut rng = seeded_rng(11);
    let mut identical = true;
    for k in 0..5 {
        let u = random_field(grid, &FieldShape::default(), &mut rng);
        let path = dir.path().join(format!("u{k}.f64"));
        save_field(
            &path,
            &u,
            FieldContext {
                s: 0.5,
                mu: 0.4,
                eps: 0.25,
            },
        )
        .map_err(|e| e.to_string())?;
        let (back, _) = load_field(&path).map_err(|e| e.to_string())?;
        identical &= back
            .values
            .iter()
            .zip(&u.values)
            .all(|(a, b)| a.re.to_bits() == b.re.to_bits() && a.im.to_bits() == b.im.to_bits());
    }
    let text = r#"{
        "problem": {"dim": 1, "s": 0.5, "mu": 0.4, "q": 3, "eps": 0.25, "v0": 1},
        "potentials": {
            "electric": {"kind": "clipped_quadratic", "base": 1, "center": [0], "curvature": 1, "cap": 4},
            "magnetic": {"kind": "zero"},
            "region": {"kind": "box", "lower": [-1], "upper": [1]}
        },
        "grid": {"dim": 1, "extent": 16, "points": 128}
    }"#;
    let h1 = RunConfig::from_json(text)
        .and_then(|c| c.hash())
        .map_err(|e| e.to_string())?;
    let h2 = RunConfig::from_json(text)
        .and_then(|c| c.hash())
        .map_err(|e| e.to_string())?;
    verdict(
        identical && h1 == h2,
        format!("bitwise round trip {identical}, config hash stable {}", h1 == h2),
    )
}

type Criterion = (&'static str, &'static str, u64, fn() -> Outcome);

fn main() -> ExitCode {
    let skip_3d = std::env::var("CHOQUARD_ACCEPTANCE_SKIP_3D").is_ok_and(|v| v == "1");
    let criteria: Vec<Criterion> = vec![
        ("1", "quadrature vs spectral operator", 10, criterion_1),
        ("2", "gauge covariance", 5, criterion_2),
        ("3", "diamagnetic inequality", 30, criterion_3),
        ("4", "Riesz convolution vs direct sum", 20, criterion_4),
        ("5", "gradient vs finite differences", 30, criterion_5),
        ("6", "Nehari closed form", 20, criterion_6),
        ("7", "mountain-pass geometry", 30, criterion_7),
        ("8", "penalization bound", 30, criterion_8),
        ("9", "limit-problem decay", 180, criterion_9),
        ("10", "concentration sweep", 600, criterion_10),
        ("11", "persistence", 5, criterion_11),
    ];
    let mut failed = 0;
    for (id, name, budget, run) in criteria {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= Duration::from_secs(budget);
        let (ok, detail) = match outcome {
            Ok(d) => (in_time, d),
            Err(d) => (false, d),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {id:>2} {}: {name}: {detail} [{:.1}s of {budget}s]",
            if ok { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
    }
    if !skip_3d {
        let start = Instant::now();
        let outcome = criterion_10_three_dimensional();
        let elapsed = start.elapsed();
        let ok = outcome.is_ok() && elapsed <= Duration::from_secs(1800);
        if !ok {
            failed += 1;
        }
        let detail = outcome.unwrap_or_else(|e| e);
        println!(
            "criterion 10 (N=3) {}: coarse three-dimensional sweep: {detail} [{:.1}s of 1800s]",
            if ok { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
    } else {
        println!("criterion 10 (N=3) SKIPPED: CHOQUARD_ACCEPTANCE_SKIP_3D=1");
    }
    if failed == 0 {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} criteria failed");
        ExitCode::FAILURE
    }
}
