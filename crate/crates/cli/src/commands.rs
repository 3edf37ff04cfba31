use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use choquard_core::diagnostics::{
    check_concentration, check_decay, check_diamagnetic, check_hartree_bound, check_hls, check_negative_ray, check_ray,
    check_small_shell, mountain_pass_radius,
};
use choquard_core::io::{sidecar_path, write_atomic, FieldContext};
use choquard_core::problem::PenalizationSetup;
use choquard_core::sampling::ShellSampler;
use choquard_core::solver::SweepReport;
use choquard_core::{
    load_field, save_field, solve_limit, solve_penalized, sweep_epsilon, CheckResult, Field, FieldMeta, Functional,
    GridSpec, Problem, RunConfig, RunManifest,
};
use chrono::Utc;
use serde_json::{json, Value};

use crate::args::{CheckArgs, CheckName, Command, ExportArgs, ExportMode, RunArgs, SweepArgs};
use crate::failure::{Failure, Outcome};

const CONFIG_FILE: &str = "config.json";
const PENALIZATION_FILE: &str = "penalization.json";
const SWEEP_FILE: &str = "sweep.json";

pub fn run(command: Command) -> Outcome {
    match command {
        Command::Solve(args) => solve(&args),
        Command::Limit(args) => limit(&args),
        Command::Sweep(args) => sweep(&args),
        Command::Check(args) => check(&args),
        Command::Export(args) => export(&args),
    }
}

fn read_config(path: &Path) -> Outcome<RunConfig> {
    let text = fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    RunConfig::from_json(&text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn resolve(args: &RunArgs) -> Outcome<RunConfig> {
    let mut cfg = read_config(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.solver.seed = seed;
    }
    if let Some(tol) = args.tol {
        if tol.is_nan() || tol <= 0.0 {
            return Err(Failure::input(format!("--tol must be positive, got {tol}")));
        }
        cfg.solver.grad_tol = tol;
    }
    if let Some(points) = args.grid {
        cfg.grid = GridSpec::new(cfg.grid.dim, cfg.grid.extent, points)?;
    }
    Ok(cfg)
}

fn build_problem(cfg: &RunConfig) -> Outcome<Problem> {
    let mut problem = Problem::new(cfg.problem.clone(), cfg.potentials.clone(), cfg.grid)?;
    problem.quadrature = cfg.quadrature.options();
    Ok(problem)
}

/// Output directory with the resolved config already written.
struct RunDir {
    root: PathBuf,
    config_hash: String,
    seed: u64,
    started: String,
    artifacts: Vec<String>,
}

impl RunDir {
    fn create(root: &Path, cfg: &RunConfig) -> Outcome<Self> {
        fs::create_dir_all(root).map_err(|e| Failure::input(format!("{}: {e}", root.display())))?;
        let text = cfg.canonical_json()?;
        let mut dir = Self {
            root: root.to_path_buf(),
            config_hash: cfg.hash()?,
            seed: cfg.solver.seed,
            started: Utc::now().to_rfc3339(),
            artifacts: Vec::new(),
        };
        dir.write(CONFIG_FILE, text.as_bytes())?;
        Ok(dir)
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Outcome {
        write_atomic(&self.root.join(name), bytes)?;
        self.artifacts.push(name.into());
        Ok(())
    }

    fn write_json(&mut self, name: &str, value: &Value) -> Outcome {
        let text = serde_json::to_string_pretty(value).map_err(|e| Failure::input(e.to_string()))?;
        self.write(name, text.as_bytes())
    }

    fn write_field(&mut self, stem: &str, u: &Field, problem: &Problem) -> Outcome {
        let name = format!("{stem}.f64");
        let path = self.root.join(&name);
        let c = &problem.config;
        save_field(
            &path,
            u,
            FieldContext {
                s: c.s,
                mu: c.mu,
                eps: c.eps,
            },
        )?;
        self.artifacts.push(name);
        self.artifacts
            .push(sidecar_path(Path::new(&format!("{stem}.f64"))).display().to_string());
        Ok(())
    }

    fn finish(mut self) -> Outcome {
        self.artifacts.push("manifest.json".into());
        let manifest = RunManifest {
            config_hash: self.config_hash,
            seed: self.seed,
            started: self.started,
            finished: Utc::now().to_rfc3339(),
            artifacts: self.artifacts,
            tool_version: env!("CARGO_PKG_VERSION").into(),
        };
        let text = serde_json::to_string_pretty(&manifest).map_err(|e| Failure::input(e.to_string()))?;
        write_atomic(&self.root.join("manifest.json"), text.as_bytes())?;
        Ok(())
    }
}

fn to_value(v: &impl serde::Serialize) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

fn solve(args: &RunArgs) -> Outcome {
    let cfg = resolve(args)?;
    let problem = build_problem(&cfg)?;
    let mut dir = RunDir::create(&args.out, &cfg)?;
    let setup = problem.penalization(cfg.solver.seed)?;
    dir.write_json(PENALIZATION_FILE, &to_value(&setup))?;
    let (u, report) = solve_penalized(&problem, &setup, &cfg.solver, None)?;
    dir.write_field("u", &u, &problem)?;
    dir.write_json("report.json", &to_value(&report))?;
    dir.finish()?;
    emit(&format!(
        "eps = {}: c_eps = {:.10e}, |x_eps| max at {:?}, valid penalization {}, {} iterations",
        report.eps, report.c_eps, report.x_eps_original, report.valid_penalization, report.iterations
    ));
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    Ok(())
}

fn limit(args: &RunArgs) -> Outcome {
    let cfg = resolve(args)?;
    let problem = build_problem(&cfg)?;
    let mut dir = RunDir::create(&args.out, &cfg)?;
    let (w, report) = solve_limit(&problem, cfg.limit, &cfg.solver, None)?;
    dir.write_field("w", &w, &problem)?;
    let mut value = to_value(&report);
    value["c_V0"] = value["c_eps"].clone();
    value["discretization"] = to_value(&cfg.limit);
    dir.write_json("report.json", &value)?;
    dir.finish()?;
    emit(&format!(
        "c_V0 = {:.10e}, decay exponent {:.3}, {} iterations",
        report.c_eps, report.decay_exponent, report.iterations
    ));
    Ok(())
}

fn sweep(args: &SweepArgs) -> Outcome {
    let mut cfg = resolve(&args.run)?;
    if let Some(list) = &args.eps_list {
        cfg.eps_list = Some(list.clone());
    }
    let Some(eps_list) = cfg.eps_list.clone() else {
        return Err(Failure::input("sweep needs --eps-list or `eps_list` in the config"));
    };
    if let Some(&first) = eps_list.first() {
        cfg.problem.eps = first;
    }
    let problem = build_problem(&cfg)?;
    let mut dir = RunDir::create(&args.run.out, &cfg)?;
    let (report, fields) = sweep_epsilon(&problem, &eps_list, &cfg.solver)?;
    dir.write_json(PENALIZATION_FILE, &to_value(&report.penalization))?;
    let mut files = Vec::new();
    for (k, (entry, field)) in report.entries.iter().zip(&fields).enumerate() {
        match field {
            Some(u) => {
                let stem = format!("u_{k}");
                dir.write_field(&stem, u, &problem.with_eps(entry.eps)?)?;
                files.push(json!(format!("{stem}.f64")));
            }
            None => files.push(Value::Null),
        }
    }
    let concentration = concentration_check(&problem, &report, &eps_list)?;
    let value = json!({
        "sweep": to_value(&report),
        "fields": files,
        "concentration": to_value(&concentration),
    });
    dir.write_json(SWEEP_FILE, &value)?;
    dir.finish()?;
    for entry in &report.entries {
        match (&entry.report, &entry.error) {
            (Some(r), _) => emit(&format!(
                "eps = {}: c_eps = {:.10e}, V(x_eps) = {:.6}, valid penalization {}",
                r.eps, r.c_eps, r.v_at_max, r.valid_penalization
            )),
            (None, Some(e)) => emit(&format!("eps = {}: failed: {e}", entry.eps)),
            (None, None) => {}
        }
    }
    emit(&format!("concentration: {:?}", concentration.status));
    let warnings: BTreeSet<&String> = report.reports().flat_map(|r| r.warnings.iter()).collect();
    for w in warnings {
        eprintln!("warning: {w}");
    }
    let failed = report.entries.iter().filter(|e| e.report.is_none()).count();
    if failed > 0 {
        return Err(Failure::solver(format!(
            "{failed} of {} sweep entries failed",
            report.entries.len()
        )));
    }
    Ok(())
}

fn concentration_check(problem: &Problem, report: &SweepReport, eps_list: &[f64]) -> Outcome<CheckResult> {
    let smallest = eps_list.iter().copied().fold(f64::INFINITY, f64::min);
    let p = problem.with_eps(smallest)?;
    let boundary_min = p
        .potentials
        .boundary_min(&p.rescaled)
        .ok_or_else(|| Failure::input("penalization region has no boundary points on the grid"))?;
    Ok(check_concentration(
        &report.entries,
        &problem.potentials,
        problem.config.v0,
        boundary_min,
    ))
}

fn sibling(field: &Path, name: &str) -> PathBuf {
    field
        .parent()
        .map(|d| d.join(name))
        .unwrap_or_else(|| PathBuf::from(name))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> Outcome<T> {
    let text = fs::read_to_string(path).map_err(|e| Failure::input(format!("{what} needs {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn problem_for_field(cfg: &RunConfig, meta: &FieldMeta) -> Outcome<Problem> {
    if meta.s != cfg.problem.s || meta.mu != cfg.problem.mu {
        return Err(Failure::input(format!(
            "field was computed with s = {}, mu = {} but the config has s = {}, mu = {}",
            meta.s, meta.mu, cfg.problem.s, cfg.problem.mu
        )));
    }
    let mut config = cfg.problem.clone();
    config.eps = meta.eps;
    let mut problem = Problem::new_unchecked(config, cfg.potentials.clone(), meta.grid()?)?;
    problem.quadrature = cfg.quadrature.options();
    Ok(problem)
}

fn functional(problem: &Problem, cfg: &RunConfig, field: &Path) -> Outcome<Functional> {
    let path = sibling(field, PENALIZATION_FILE);
    if path.exists() {
        let setup: PenalizationSetup = read_json(&path, "penalization")?;
        Ok(problem.penalized_functional(setup.params)?)
    } else {
        Ok(problem.limit_functional(cfg.limit)?)
    }
}

fn check(args: &CheckArgs) -> Outcome {
    let config_path = args.config.clone().unwrap_or_else(|| sibling(&args.field, CONFIG_FILE));
    let cfg = read_config(&config_path)?;
    let (u, meta) = load_field(&args.field)?;
    let problem = problem_for_field(&cfg, &meta)?;
    let grid = u.grid;
    let result = match args.name {
        CheckName::Diamagnetic => check_diamagnetic(
            &u,
            &problem.operator()?,
            &problem.potentials.magnetic,
            meta.eps,
            args.seed,
        ),
        CheckName::Hls => check_hls(&u, &problem.hartree()?),
        CheckName::Decay => check_decay(&u, meta.s, &grid.point(u.argmax())),
        CheckName::Ray => check_ray(&functional(&problem, &cfg, &args.field)?, &u),
        CheckName::NegativeRay => {
            check_negative_ray(&functional(&problem, &cfg, &args.field)?, &problem.canonical_bump())
        }
        CheckName::SmallShell => {
            let j = functional(&problem, &cfg, &args.field)?;
            let unit = ShellSampler::new(grid, args.seed).on_shell(50, 1.0, |v| j.norm_sq(v));
            let (rho, c) = mountain_pass_radius(&j, &unit);
            let fresh = ShellSampler::new(grid, args.seed.wrapping_add(1)).raw(50);
            check_small_shell(&j, &fresh, rho, c)
        }
        CheckName::HartreeBound => {
            let setup: PenalizationSetup = read_json(&sibling(&args.field, PENALIZATION_FILE), "hartree_bound")?;
            let j = problem.penalized_functional(setup.params)?;
            let bound = 4.0 * (setup.kappa + 1.0);
            let fresh = ShellSampler::new(grid, args.seed).on_shell(64, bound, |v| j.norm_sq(v));
            check_hartree_bound(&fresh, &j, bound)
        }
        CheckName::Concentration => {
            let stored: Value = read_json(&sibling(&args.field, SWEEP_FILE), "concentration")?;
            let report: SweepReport = serde_json::from_value(stored["sweep"].clone())
                .map_err(|e| Failure::input(format!("{SWEEP_FILE}: {e}")))?;
            let base = Problem::new_unchecked(cfg.problem.clone(), cfg.potentials.clone(), grid)?;
            let eps: Vec<f64> = report.entries.iter().map(|e| e.eps).collect();
            concentration_check(&base, &report, &eps)?
        }
    };
    let text = serde_json::to_string_pretty(&result).map_err(|e| Failure::input(e.to_string()))?;
    emit(&text);
    Ok(())
}

fn export(args: &ExportArgs) -> Outcome {
    let (u, _) = load_field(&args.field)?;
    let rows = match args.mode {
        ExportMode::Axis => axis_profile(&u),
        ExportMode::Radial => radial_profile(&u),
    };
    let mut text = String::from(match args.mode {
        ExportMode::Axis => "x,abs_u\n",
        ExportMode::Radial => "r,mean_abs_u\n",
    });
    for (x, v) in rows {
        text.push_str(&format!("{x},{v}\n"));
    }
    match &args.out {
        Some(path) => write_atomic(path, text.as_bytes())?,
        None => {
            let _ = std::io::stdout().lock().write_all(text.as_bytes());
        }
    }
    Ok(())
}

/// Prints a line; a closed stdout (as in `| head`) is not an error.
fn emit(line: &str) {
    let _ = writeln!(std::io::stdout().lock(), "{line}");
}

/// `|u|` along the first axis through the maximum.
fn axis_profile(u: &Field) -> Vec<(f64, f64)> {
    let grid = u.grid;
    let mut idx = grid.multi_index(u.argmax());
    (0..grid.points)
        .map(|i| {
            idx[0] = i;
            (grid.coord(i), u.values[grid.flat_index(&idx)].norm())
        })
        .collect()
}

/// Mean of `|u|` over shells of width `h` around the maximum.
fn radial_profile(u: &Field) -> Vec<(f64, f64)> {
    let grid = u.grid;
    let h = grid.spacing();
    let x0 = grid.point(u.argmax());
    let bins = grid.points / 2 + 1;
    let mut sums = vec![(0.0, 0usize); bins];
    for (k, x) in grid.points_iter().enumerate() {
        let d = grid.min_image(&x, &x0);
        let r = d.iter().map(|v| v * v).sum::<f64>().sqrt();
        let b = (r / h).round() as usize;
        if b < bins {
            sums[b].0 += u.values[k].norm();
            sums[b].1 += 1;
        }
    }
    sums.iter()
        .enumerate()
        .filter(|(_, (_, n))| *n > 0)
        .map(|(b, (s, n))| (b as f64 * h, s / *n as f64))
        .collect()
}
