//! Pipelines behind the subcommands. Each writes its fields, logs and a
//! `summary.json` into the output directory.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use epitaxy_core::energy::{energy_bc, fit_c1_seeded, fit_c2, Minorant};
use epitaxy_core::evolution::{flow_to_steady_observed, snapshot_writer, FlowConfig};
use epitaxy_core::io::{write_binary, write_csv};
use epitaxy_core::kpz::solve_kpz;
use epitaxy_core::mpass::{
    classify_stability_with, find_local_min_with, find_mountain_pass_with, lap_norm, Landscape,
    MpassConfig, StabilityConfig,
};
use epitaxy_core::picard::{pde_residual, LambdaProbe, Picard, PicardConfig, ThresholdBracket};
use epitaxy_core::radial::{radial_roots, radial_threshold_with, shoot_with, RadialConfig};
use epitaxy_core::report::{ConvergenceReport, Outcome};
use epitaxy_core::solve::BiharmonicSolver;
use epitaxy_core::{norm_l1, BoundaryKind, Field};
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::config::{Command, RunConfig};
use crate::error::{CliError, CliResult};

/// Projected-ascent iterations per `c1` probe.
const C1_ASCENT: usize = 20;
/// Seeded random probes added to the deterministic `c1` family.
const C1_RANDOM: usize = 4;
/// Sample points of the minorant curve.
const MINORANT_SAMPLES: usize = 201;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success,
    /// The pipeline ran but did not converge, or a solver precondition failed.
    NotConverged,
}

impl Status {
    pub fn exit_code(self) -> u8 {
        match self {
            Status::Success => 0,
            Status::NotConverged => 2,
        }
    }
}

pub struct Summary {
    doc: Map<String, Value>,
}

impl Summary {
    fn new(cfg: &RunConfig) -> Self {
        let mut doc = Map::new();
        doc.insert("command".into(), json!(cfg.command.as_str()));
        doc.insert("lambda".into(), json!(cfg.lambda));
        doc.insert("bc".into(), json!(cfg.boundary().as_str()));
        for k in ["energies", "residuals", "threshold"] {
            doc.insert(k.into(), Value::Null);
        }
        doc.insert("outcome".into(), json!("failed"));
        Self { doc }
    }

    fn set(&mut self, key: &str, v: Value) {
        self.doc.insert(key.into(), v);
    }

    fn write(&self, dir: &Path) -> CliResult<()> {
        let mut w = BufWriter::new(File::create(dir.join("summary.json"))?);
        serde_json::to_writer_pretty(&mut w, &self.doc)?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }
}

fn create(dir: &Path, name: &str) -> CliResult<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn finish(mut w: BufWriter<File>) -> CliResult<()> {
    w.flush()?;
    Ok(())
}

/// `name.csv` and `name.bin`.
fn write_field(dir: &Path, name: &str, u: &Field) -> CliResult<()> {
    let mut w = create(dir, &format!("{name}.csv"))?;
    write_csv(u, &mut w)?;
    finish(w)?;
    let mut w = create(dir, &format!("{name}.bin"))?;
    write_binary(u, &mut w)?;
    finish(w)
}

fn write_report(dir: &Path, name: &str, rep: &ConvergenceReport) -> CliResult<()> {
    let mut w = create(dir, name)?;
    rep.write_csv(&mut w)?;
    finish(w)
}

fn energy_json(e: &epitaxy_core::energy::EnergyBreakdown) -> Value {
    json!({ "total": e.total, "quad": e.quad, "cubic": e.cubic, "linear": e.linear })
}

/// Prepares the output directory, echoes the resolved config, runs the
/// pipeline and writes the summary. Numerical failures end up in the
/// summary with status [`Status::NotConverged`]; other errors propagate.
pub fn run(cfg: &RunConfig) -> CliResult<Status> {
    let dir = cfg.output_dir.as_path();
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("config.resolved"), cfg.to_toml()?)?;
    let mut summary = Summary::new(cfg);
    let result = match cfg.command {
        Command::Solve => solve(cfg, dir, &mut summary),
        Command::Mpass => mpass(cfg, dir, &mut summary),
        Command::Evolve => evolve(cfg, dir, &mut summary),
        Command::Radial => radial(cfg, dir, &mut summary),
        Command::Kpz => kpz(cfg, dir, &mut summary),
        Command::Sweep => sweep(cfg, dir, &mut summary),
    };
    let status = match result {
        Ok(s) => s,
        Err(e) if e.is_numerical() => {
            summary.set("outcome", json!("failed"));
            summary.set("error", json!(e.to_string()));
            Status::NotConverged
        }
        Err(e) => return Err(e),
    };
    summary.write(dir)?;
    Ok(status)
}

fn picard_config(cfg: &RunConfig, lambda: f64) -> PicardConfig {
    let mut pc = PicardConfig::new(lambda, cfg.boundary());
    pc.tol = cfg.tol;
    pc.max_iter = cfg.max_iter;
    pc
}

fn solve(cfg: &RunConfig, dir: &Path, s: &mut Summary) -> CliResult<Status> {
    let f = cfg.forcing()?.to_field(cfg.grid()?)?;
    let picard = Picard::new(picard_config(cfg, cfg.lambda), &f)?;
    let (u, rep) = picard.solve()?;
    write_field(dir, "u", &u)?;
    write_report(dir, "convergence.csv", &rep)?;
    s.set("energies", energy_json(&energy_bc(&u, &f, cfg.lambda, cfg.boundary())));
    s.set(
        "residuals",
        json!({ "pde": picard.pde_residual(&u)?, "step": rep.final_residual(), "iterates": rep.iterates }),
    );
    s.set("outcome", json!(rep.outcome.as_str()));
    Ok(if rep.outcome.is_converged() { Status::Success } else { Status::NotConverged })
}

fn mpass(cfg: &RunConfig, dir: &Path, s: &mut Summary) -> CliResult<Status> {
    let grid = cfg.grid()?;
    let f = cfg.forcing()?.to_field(grid)?;
    let lambda = cfg.lambda;
    let solver = BiharmonicSolver::new(grid, BoundaryKind::Dirichlet)?;
    let c2 = fit_c2(&solver)?;
    let (c1, _) = fit_c1_seeded(&solver, C1_ASCENT, cfg.seed, C1_RANDOM)?;
    let m = Minorant { c1, c2 };
    let f_l1 = norm_l1(&f);
    s.set(
        "threshold",
        json!({ "lambda0": m.lambda0(f_l1), "c1": c1, "c2": c2, "f_l1": f_l1 }),
    );
    write_minorant(dir, &m, lambda, f_l1)?;
    let tp = m.truncation(lambda, f_l1)?;
    let land = Landscape::with_solver(&f, lambda, solver)?;
    let mc = MpassConfig::default();
    let lm = find_local_min_with(&land, &tp, &mc)?;
    write_field(dir, "u0", &lm.u)?;
    write_report(dir, "local_min_convergence.csv", &lm.report)?;
    let mp = find_mountain_pass_with(&land, &lm.u, &mc)?;
    write_field(dir, "ustar", &mp.u)?;
    write_report(dir, "mpass_convergence.csv", &mp.report)?;
    let mut w = create(dir, "path.csv")?;
    mp.log.write_csv(&mut w)?;
    finish(w)?;
    let mut w = create(dir, "path_final.csv")?;
    writeln!(w, "point,lap_norm,energy")?;
    for (k, (p, e)) in mp.path.points.iter().zip(&mp.path.energies).enumerate() {
        writeln!(w, "{k},{},{e}", lap_norm(p))?;
    }
    finish(w)?;

    let sc = StabilityConfig { dt: cfg.dt, steps: cfg.steps, ..StabilityConfig::default() };
    let st0 = classify_stability_with(&lm.u, &f, lambda, &sc)?;
    let st1 = classify_stability_with(&mp.u, &f, lambda, &sc)?;
    s.set(
        "energies",
        json!({ "u0": energy_json(&lm.energy), "ustar": energy_json(&mp.energy) }),
    );
    s.set(
        "residuals",
        json!({
            "u0": land.pde_residual(&lm.u)?,
            "ustar": mp.residual,
            "u0_pointwise": land.pointwise_residual(&lm.u)?,
            "ustar_pointwise": land.pointwise_residual(&mp.u)?,
            "u0_scaled_gradient": lm.scaled_gradient,
            "ustar_scaled_gradient": mp.scaled_gradient,
        }),
    );
    s.set(
        "stability",
        json!({ "u0": st0.tag.as_str(), "ustar": st1.tag.as_str(), "ustar_curvature": mp.curvature }),
    );
    let ok = lm.report.outcome.is_converged() && mp.report.outcome.is_converged();
    let outcome = if ok { Outcome::Converged } else { Outcome::MaxIter };
    s.set("outcome", json!(outcome.as_str()));
    Ok(if ok { Status::Success } else { Status::NotConverged })
}

/// CSV `s,g` over `[0, 2 r_max]`, or `[0, 1/c1]` when `g` has no bump.
fn write_minorant(dir: &Path, m: &Minorant, lambda: f64, f_l1: f64) -> CliResult<()> {
    let top = m.r_max(lambda, f_l1).map_or(1.0 / m.c1, |r| 2.0 * r);
    let mut w = create(dir, "minorant.csv")?;
    writeln!(w, "s,g")?;
    for k in 0..MINORANT_SAMPLES {
        let x = top * k as f64 / (MINORANT_SAMPLES - 1) as f64;
        writeln!(w, "{x},{}", m.g(x, lambda, f_l1))?;
    }
    finish(w)
}

fn evolve(cfg: &RunConfig, dir: &Path, s: &mut Summary) -> CliResult<Status> {
    let grid = cfg.grid()?;
    let f = cfg.forcing()?.to_field(grid)?;
    let bc = cfg.boundary();
    let fc = FlowConfig::new(cfg.dt, cfg.steps, bc);
    let snaps = dir.join("snapshots");
    std::fs::create_dir_all(&snaps)?;
    let (u, rep) =
        flow_to_steady_observed(&Field::zeros(grid), &f, cfg.lambda, &fc, cfg.tol, snapshot_writer(&snaps, cfg.snapshot_every))?;
    write_field(dir, "u", &u)?;
    write_report(dir, "convergence.csv", &rep)?;
    s.set("energies", energy_json(&energy_bc(&u, &f, cfg.lambda, bc)));
    s.set(
        "residuals",
        json!({ "pde": pde_residual(&u, &f, cfg.lambda, bc)?, "rate": rep.final_residual(), "steps": rep.iterates }),
    );
    s.set("outcome", json!(rep.outcome.as_str()));
    // running out of steps is the requested behaviour, only blowup fails
    Ok(if rep.outcome == Outcome::Blowup { Status::NotConverged } else { Status::Success })
}

fn radial(cfg: &RunConfig, dir: &Path, s: &mut Summary) -> CliResult<Status> {
    let prof = cfg.forcing()?.radial_profile()?;
    let bc = cfg.boundary();
    let rc = RadialConfig { steps: cfg.radial_steps, ..RadialConfig::default() };
    let mut status = Status::Success;
    if cfg.threshold {
        let th = radial_threshold_with(&*prof, bc, &rc, cfg.rtol)?;
        let mut w = create(dir, "threshold.csv")?;
        th.write_csv(&mut w)?;
        finish(w)?;
        s.set(
            "threshold",
            json!({
                "lambda_ok": th.lambda_ok,
                "lambda_fail": th.lambda_fail,
                "estimate": th.estimate(),
                "relative_width": th.relative_width(),
            }),
        );
    }
    let roots = radial_roots(cfg.lambda, &*prof, bc, &rc);
    let beta = roots.iter().copied().min_by(|a, b| a.abs().total_cmp(&b.abs()));
    s.set("roots", json!(roots));
    match beta {
        Some(beta) => {
            let shot = shoot_with(beta, cfg.lambda, &*prof, bc, rc.steps);
            let mut w = create(dir, "profile.csv")?;
            shot.write_csv(&mut w)?;
            finish(w)?;
            s.set(
                "residuals",
                json!({ "terminal": shot.terminal_residual, "reduction_defect": shot.reduction_defect() }),
            );
            s.set("energies", json!({ "beta": beta, "u_centre": shot.u[0] }));
            s.set("outcome", json!(Outcome::Converged.as_str()));
        }
        None => {
            s.set("outcome", json!("no_root"));
            status = Status::NotConverged;
        }
    }
    Ok(status)
}

fn kpz(cfg: &RunConfig, dir: &Path, s: &mut Summary) -> CliResult<Status> {
    let f = cfg.forcing()?.to_field(cfg.grid()?)?;
    let sol = solve_kpz(&f, cfg.lambda)?;
    write_field(dir, "u", &sol.u)?;
    write_field(dir, "v", &sol.v)?;
    write_field(dir, "w", &sol.w)?;
    write_field(dir, "v_residual", &sol.v_residual)?;
    write_field(dir, "u_residual", &sol.u_residual)?;
    s.set(
        "residuals",
        json!({
            "v": sol.v_residual_max(),
            "u": sol.u_residual_max(),
            "transform": sol.transform_residual,
            "v_boundary": sol.v.boundary_max_abs(),
        }),
    );
    s.set("outcome", json!(Outcome::Converged.as_str()));
    Ok(Status::Success)
}

/// Outcome of [`sweep_bracket`]. `lambda_fail` is `None` when Picard still
/// converges at `lambda_hi`, so the threshold lies above the searched range.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub lambda_ok: f64,
    pub lambda_fail: Option<f64>,
    pub probes: Vec<LambdaProbe>,
}

impl Sweep {
    pub fn bracket(&self) -> Option<ThresholdBracket> {
        self.lambda_fail.map(|b| ThresholdBracket {
            lambda_ok: self.lambda_ok,
            lambda_fail: b,
            probes: self.probes.clone(),
        })
    }
}

/// Parallel `k`-section for the Picard threshold with `k = workers` probes
/// per round. Probes are evaluated in a pool of `workers` threads and
/// recorded in ascending order, so the bracket depends on the worker count
/// but not on scheduling.
pub fn sweep_bracket(cfg: &RunConfig, f: &Field) -> CliResult<Sweep> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {} workers: {e}", cfg.workers)))?;
    let probe = |lambda: f64| -> CliResult<LambdaProbe> {
        let (_, rep) = Picard::new(picard_config(cfg, lambda), f)?.solve()?;
        Ok(LambdaProbe { lambda, outcome: rep.outcome, iterates: rep.iterates })
    };
    let batch = |pts: Vec<f64>| -> CliResult<Vec<LambdaProbe>> {
        pool.install(|| pts.into_par_iter().map(probe).collect())
    };
    let ends = batch(vec![cfg.lambda_lo, cfg.lambda_hi])?;
    if !ends[0].outcome.is_converged() {
        return Err(epitaxy_core::Error::Precondition(format!(
            "Picard does not converge at lambda_lo = {}",
            cfg.lambda_lo
        ))
        .into());
    }
    if ends[1].outcome.is_converged() {
        return Ok(Sweep { lambda_ok: cfg.lambda_hi, lambda_fail: None, probes: ends });
    }
    let mut probes = ends;
    let (mut a, mut b) = (cfg.lambda_lo, cfg.lambda_hi);
    let k = cfg.workers;
    while b - a > cfg.rtol * b {
        let pts: Vec<f64> = (1..=k).map(|i| a + (b - a) * i as f64 / (k + 1) as f64).collect();
        let round = batch(pts)?;
        let first_fail = round.iter().position(|p| !p.outcome.is_converged());
        let (na, nb) = match first_fail {
            Some(0) => (a, round[0].lambda),
            Some(j) => (round[j - 1].lambda, round[j].lambda),
            None => (round[k - 1].lambda, b),
        };
        a = na;
        b = nb;
        probes.extend(round);
    }
    Ok(Sweep { lambda_ok: a, lambda_fail: Some(b), probes })
}

fn sweep(cfg: &RunConfig, dir: &Path, s: &mut Summary) -> CliResult<Status> {
    let f = cfg.forcing()?.to_field(cfg.grid()?)?;
    let sw = sweep_bracket(cfg, &f)?;
    let mut w = create(dir, "threshold.csv")?;
    writeln!(w, "lambda,outcome,iterates")?;
    for p in &sw.probes {
        writeln!(w, "{},{},{}", p.lambda, p.outcome.as_str(), p.iterates)?;
    }
    finish(w)?;
    s.set(
        "threshold",
        json!({
            "lambda_ok": sw.lambda_ok,
            "lambda_fail": sw.lambda_fail,
            "relative_width": sw.bracket().map(|b| b.relative_width()),
            "bracketed": sw.lambda_fail.is_some(),
            "probes": sw.probes.len(),
            "workers": cfg.workers,
        }),
    );
    s.set("outcome", json!(Outcome::Converged.as_str()));
    Ok(Status::Success)
}
