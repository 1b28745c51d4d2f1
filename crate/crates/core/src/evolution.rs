//! Semi-implicit stepping for `u_t = 2k₁ det(D²u) − k₂ Δ²u + λf`.
//!
//! The stiff term is implicit and factored once per `(grid, dt, k₂, bc)`; the
//! determinant is explicit.

use crate::energy::det_variational;
use crate::error::{Error, Result};
use crate::grid::{norm_l2, norm_linf, sub, BoundaryKind, Field, Grid2D};
use crate::operators::{hessian_det, laplacian_bc};
use crate::report::{ConvergenceReport, Outcome};
use crate::solve::{assemble_bilaplacian, Factorization};

/// Which discrete determinant drives the explicit part.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DetForm {
    /// Nodal `u_xx u_yy − u_xy²`.
    #[default]
    Pointwise,
    /// First variation of the discrete cubic energy term, so that the steady
    /// states are exactly the critical points of the discrete energy.
    Variational,
}

impl DetForm {
    pub fn apply(self, u: &Field) -> Field {
        match self {
            DetForm::Pointwise => hessian_det(u),
            DetForm::Variational => det_variational(u),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowConfig {
    pub k1: f64,
    pub k2: f64,
    pub dt: f64,
    pub steps: usize,
    pub bc: BoundaryKind,
    pub det_form: DetForm,
    /// Blowup guard on `‖Δ_h u‖₂`.
    pub blowup_cap: f64,
}

impl FlowConfig {
    pub fn new(dt: f64, steps: usize, bc: BoundaryKind) -> Self {
        Self {
            k1: 0.5,
            k2: 1.0,
            dt,
            steps,
            bc,
            det_form: DetForm::Pointwise,
            blowup_cap: 1e6,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) || !(self.k2 > 0.0) || !self.k1.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "flow needs dt > 0 and k2 > 0 (got dt = {}, k2 = {})",
                self.dt, self.k2
            )));
        }
        Ok(())
    }
}

/// A factored `(I + dt k₂ Δ²_h)` for repeated steps.
pub struct Stepper {
    cfg: FlowConfig,
    grid: Grid2D,
    factor: Factorization,
}

impl Stepper {
    pub fn new(grid: Grid2D, cfg: FlowConfig) -> Result<Self> {
        cfg.validate()?;
        let a = assemble_bilaplacian(&grid, cfg.bc).scaled(cfg.dt * cfg.k2);
        let m = a.add_diagonal(&vec![1.0; a.n()]);
        Ok(Self { cfg, grid, factor: Factorization::new(m)? })
    }

    pub fn config(&self) -> &FlowConfig {
        &self.cfg
    }

    pub fn step(&self, u: &Field, f: &Field, lambda: f64) -> Result<Field> {
        if *u.grid() != self.grid || *f.grid() != self.grid {
            return Err(Error::GridMismatch("flow step".into()));
        }
        let c = self.cfg;
        let d = c.det_form.apply(u);
        let rhs: Vec<f64> = self
            .grid
            .interior()
            .map(|(i, j)| u.at(i, j) + c.dt * (2.0 * c.k1 * d.at(i, j) + lambda * f.at(i, j)))
            .collect();
        Ok(Field::from_interior(self.grid, &self.factor.solve(&rhs)?))
    }
}

pub fn flow_step(u: &Field, f: &Field, lambda: f64, cfg: &FlowConfig) -> Result<Field> {
    Stepper::new(*u.grid(), *cfg)?.step(u, f, lambda)
}

/// Runs until `‖u_next − u‖_∞ / dt ≤ tol` or `cfg.steps` steps. The report
/// records that rate per step. `observe(step, u)` sees every accepted state.
pub fn flow_to_steady_observed(
    u0: &Field,
    f: &Field,
    lambda: f64,
    cfg: &FlowConfig,
    tol: f64,
    mut observe: impl FnMut(usize, &Field) -> Result<()>,
) -> Result<(Field, ConvergenceReport)> {
    let st = Stepper::new(*u0.grid(), *cfg)?;
    let mut u = u0.clone();
    let mut rep = ConvergenceReport::new();
    observe(0, &u)?;
    for k in 1..=cfg.steps {
        let next = st.step(&u, f, lambda)?;
        let size = norm_l2(&laplacian_bc(&next, cfg.bc));
        if !next.is_finite() || !(size <= cfg.blowup_cap) {
            rep.push(f64::INFINITY);
            rep.outcome = Outcome::Blowup;
            return Ok((u, rep));
        }
        let rate = norm_linf(&sub(&next, &u)?) / cfg.dt;
        rep.push(rate);
        u = next;
        observe(k, &u)?;
        if rate <= tol {
            rep.outcome = Outcome::Converged;
            return Ok((u, rep));
        }
    }
    rep.outcome = Outcome::MaxIter;
    Ok((u, rep))
}

pub fn flow_to_steady(
    u0: &Field,
    f: &Field,
    lambda: f64,
    cfg: &FlowConfig,
    tol: f64,
) -> Result<(Field, ConvergenceReport)> {
    flow_to_steady_observed(u0, f, lambda, cfg, tol, |_, _| Ok(()))
}

/// Observer that writes every `every`-th state as a binary field file
/// `snap_NNNNNN.bin` in `dir`.
pub fn snapshot_writer(
    dir: &std::path::Path,
    every: usize,
) -> impl FnMut(usize, &Field) -> Result<()> + '_ {
    move |k, u| {
        if every > 0 && k % every == 0 {
            let file = std::fs::File::create(dir.join(format!("snap_{k:06}.bin")))?;
            crate::io::write_binary(u, std::io::BufWriter::new(file))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid2D;
    use std::f64::consts::PI;

    #[test]
    fn invalid_config_rejected() {
        let g = Grid2D::unit_square(9).unwrap();
        let mut c = FlowConfig::new(0.0, 1, BoundaryKind::Navier);
        assert!(Stepper::new(g, c).is_err());
        c.dt = 1e-3;
        c.k2 = -1.0;
        assert!(Stepper::new(g, c).is_err());
    }

    #[test]
    fn zero_is_fixed_without_forcing() {
        let g = Grid2D::unit_square(17).unwrap();
        let z = Field::zeros(g);
        let c = FlowConfig::new(1e-3, 10, BoundaryKind::Dirichlet);
        assert_eq!(norm_linf(&flow_step(&z, &z, 1.0, &c).unwrap()), 0.0);
    }

    #[test]
    fn small_bump_decays_monotonically() {
        let g = Grid2D::unit_square(33).unwrap();
        let z = Field::zeros(g);
        let u0 = crate::energy::psi_domain(&g).scale(1e-2);
        let c = FlowConfig::new(1e-4, 50, BoundaryKind::Dirichlet);
        let st = Stepper::new(g, c).unwrap();
        let mut u = u0;
        let mut prev = norm_l2(&laplacian_bc(&u, c.bc));
        for _ in 0..50 {
            u = st.step(&u, &z, 0.0).unwrap();
            let n = norm_l2(&laplacian_bc(&u, c.bc));
            assert!(n < prev);
            prev = n;
        }
    }

    #[test]
    fn linear_decay_rate() {
        let g = Grid2D::unit_square(65).unwrap();
        let z = Field::zeros(g);
        let mut c = FlowConfig::new(2e-5, 0, BoundaryKind::Navier);
        c.k1 = 0.0;
        let st = Stepper::new(g, c).unwrap();
        let mut u = Field::from_fn(g, |x, y| (PI * x).sin() * (PI * y).sin());
        let a0 = u.at(32, 32);
        let mut t = 0.0;
        while u.at(32, 32) > 0.1 * a0 {
            u = st.step(&u, &z, 0.0).unwrap();
            t += c.dt;
        }
        let rate = (a0 / u.at(32, 32)).ln() / t;
        let exact = 4.0 * PI.powi(4);
        assert!((rate / exact - 1.0).abs() < 0.02, "{rate} vs {exact}");
    }

    #[test]
    fn snapshots_are_written() {
        let dir = std::env::temp_dir().join(format!("epx_snap_{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let g = Grid2D::unit_square(9).unwrap();
        let f = Field::constant(g, 1.0);
        let c = FlowConfig::new(1e-3, 4, BoundaryKind::Navier);
        flow_to_steady_observed(&Field::zeros(g), &f, 1.0, &c, 0.0, snapshot_writer(&dir, 2))
            .unwrap();
        let mut names: Vec<_> = std::fs::read_dir(&dir)
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .collect();
        names.sort();
        assert_eq!(names, ["snap_000000.bin", "snap_000002.bin", "snap_000004.bin"]);
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
