//! Fixed-point iteration `u ↦ T(u)`, where `T(φ)` solves
//! `Δ²u = det(D²φ) + λf` under the chosen boundary condition.
//!
//! The iteration starts from the linear solution `v` of `Δ²v = λf` and is
//! monitored in the `‖Δ_h ·‖₂` norm. A run that stops converging is reported
//! as data (`Outcome::MaxIter` / `Outcome::Blowup`), never as an error.

use crate::error::{Error, Result};
use crate::grid::{norm_l2, norm_linf_interior, sub, BoundaryKind, Field};
use crate::operators::{bilaplacian, hessian_det, laplacian_bc};
use crate::report::{ConvergenceReport, Outcome};
use crate::solve::BiharmonicSolver;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicardConfig {
    pub lambda: f64,
    pub bc: BoundaryKind,
    /// Stop once `‖Δ_h(u_{k+1} − u_k)‖₂ ≤ tol`.
    pub tol: f64,
    pub max_iter: usize,
    /// Divergence guard on `‖Δ_h u_k‖₂`.
    pub blowup_cap: f64,
}

impl PicardConfig {
    pub const DEFAULT_TOL: f64 = 1e-10;
    pub const DEFAULT_MAX_ITER: usize = 200;
    pub const DEFAULT_BLOWUP_CAP: f64 = 1e6;

    pub fn new(lambda: f64, bc: BoundaryKind) -> Self {
        Self {
            lambda,
            bc,
            tol: Self::DEFAULT_TOL,
            max_iter: Self::DEFAULT_MAX_ITER,
            blowup_cap: Self::DEFAULT_BLOWUP_CAP,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || self.max_iter == 0 || !(self.blowup_cap > self.tol) {
            return Err(Error::InvalidParameter(format!(
                "picard config needs tol > 0, max_iter ≥ 1, blowup_cap > tol (got {self:?})"
            )));
        }
        if !self.lambda.is_finite() {
            return Err(Error::InvalidParameter("lambda must be finite".into()));
        }
        Ok(())
    }
}

/// `‖Δ_h u‖₂` with the Laplacian matching `bc` on the boundary ring.
pub fn lap_norm(u: &Field, bc: BoundaryKind) -> f64 {
    norm_l2(&laplacian_bc(u, bc))
}

/// `‖Δ²_h u − det_h(D²u) − λf‖_∞` over interior nodes, divided by `‖λf‖_∞`
/// (or unnormalized when the forcing vanishes).
pub fn pde_residual(u: &Field, f: &Field, lambda: f64, bc: BoundaryKind) -> Result<f64> {
    let b = bilaplacian(u, bc);
    let d = hessian_det(u);
    let mut r = sub(&b, &d)?;
    r = crate::grid::axpy(-lambda, f, &r)?;
    let scale = lambda.abs() * norm_linf_interior(f);
    let raw = norm_linf_interior(&r);
    Ok(if scale > 0.0 { raw / scale } else { raw })
}

/// A fixed-point problem with its factored linear operator.
pub struct Picard {
    cfg: PicardConfig,
    solver: BiharmonicSolver,
    f: Field,
}

impl Picard {
    pub fn new(cfg: PicardConfig, f: &Field) -> Result<Self> {
        cfg.validate()?;
        let solver = BiharmonicSolver::new(*f.grid(), cfg.bc)?;
        Ok(Self { cfg, solver, f: f.clone() })
    }

    /// Reuses an existing factorization for a different `λ`.
    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.cfg.lambda = lambda;
        self
    }

    pub fn config(&self) -> &PicardConfig {
        &self.cfg
    }

    pub fn forcing(&self) -> &Field {
        &self.f
    }

    pub fn solver(&self) -> &BiharmonicSolver {
        &self.solver
    }

    /// `T(φ)`.
    pub fn map(&self, phi: &Field) -> Result<Field> {
        let rhs = crate::grid::axpy(self.cfg.lambda, &self.f, &hessian_det(phi))?;
        self.solver.solve(&rhs)
    }

    /// The base point `v` with `Δ²v = λf`.
    pub fn linear_solution(&self) -> Result<Field> {
        self.solver.solve(&self.f.scale(self.cfg.lambda))
    }

    pub fn solve(&self) -> Result<(Field, ConvergenceReport)> {
        let v = self.linear_solution()?;
        self.solve_from(v)
    }

    /// Iterates from `u0`. On `Converged` the returned field is the last image
    /// `T(u_k)`; otherwise it is the last finite iterate and carries no claim.
    pub fn solve_from(&self, u0: Field) -> Result<(Field, ConvergenceReport)> {
        let bc = self.cfg.bc;
        let mut report = ConvergenceReport::new();
        let mut u = u0;
        for _ in 0..self.cfg.max_iter {
            let next = self.map(&u)?;
            let size = lap_norm(&next, bc);
            if !next.is_finite() || !size.is_finite() || size > self.cfg.blowup_cap {
                report.push(f64::INFINITY);
                report.outcome = Outcome::Blowup;
                return Ok((u, report));
            }
            let step = lap_norm(&sub(&next, &u)?, bc);
            report.push(step);
            u = next;
            if step <= self.cfg.tol {
                report.outcome = Outcome::Converged;
                return Ok((u, report));
            }
        }
        report.outcome = Outcome::MaxIter;
        Ok((u, report))
    }

    /// Empirical Lipschitz ratio `‖Δ(Tφ₁ − Tφ₂)‖₂ / ‖Δ(φ₁ − φ₂)‖₂`.
    pub fn contraction(&self, phi1: &Field, phi2: &Field) -> Result<f64> {
        let bc = self.cfg.bc;
        let den = lap_norm(&sub(phi1, phi2)?, bc);
        if !(den > 0.0) {
            return Err(Error::Precondition("contraction probe needs φ₁ ≠ φ₂".into()));
        }
        // λf cancels in the difference
        let dd = sub(&hessian_det(phi1), &hessian_det(phi2))?;
        Ok(lap_norm(&self.solver.solve(&dd)?, bc) / den)
    }

    pub fn pde_residual(&self, u: &Field) -> Result<f64> {
        pde_residual(u, &self.f, self.cfg.lambda, self.cfg.bc)
    }
}

pub fn picard_map(phi: &Field, cfg: &PicardConfig, f: &Field) -> Result<Field> {
    Picard::new(*cfg, f)?.map(phi)
}

pub fn solve_fixed_point(cfg: &PicardConfig, f: &Field) -> Result<(Field, ConvergenceReport)> {
    Picard::new(*cfg, f)?.solve()
}

pub fn contraction_probe(phi1: &Field, phi2: &Field, cfg: &PicardConfig) -> Result<f64> {
    Picard::new(*cfg, &Field::zeros(*phi1.grid()))?.contraction(phi1, phi2)
}

/// One probe of a `λ` bisection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaProbe {
    pub lambda: f64,
    pub outcome: Outcome,
    pub iterates: usize,
}

/// Bracket `(λ_ok, λ_fail)`: the Picard iteration converges at `λ_ok` and
/// not at `λ_fail`. This is a Picard-solvability threshold, which need not
/// coincide with the existence threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdBracket {
    pub lambda_ok: f64,
    pub lambda_fail: f64,
    pub probes: Vec<LambdaProbe>,
}

impl ThresholdBracket {
    pub fn relative_width(&self) -> f64 {
        (self.lambda_fail - self.lambda_ok) / self.lambda_fail
    }
}

/// Relative bracket width targeted by [`lambda_threshold`].
pub const THRESHOLD_RTOL: f64 = 1e-3;

pub fn lambda_threshold(
    f: &Field,
    bc: BoundaryKind,
    lo: f64,
    hi: f64,
) -> Result<ThresholdBracket> {
    let base = PicardConfig::new(lo, bc);
    lambda_threshold_with(f, &base, lo, hi, THRESHOLD_RTOL)
}

/// Bisection on `λ ∈ [lo, hi]` with the remaining settings taken from `base`.
pub fn lambda_threshold_with(
    f: &Field,
    base: &PicardConfig,
    lo: f64,
    hi: f64,
    rtol: f64,
) -> Result<ThresholdBracket> {
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::InvalidParameter(format!("need 0 < lo < hi, got [{lo}, {hi}]")));
    }
    let mut picard = Some(Picard::new(*base, f)?);
    let mut probes = Vec::new();
    let mut probe = |lambda: f64| -> Result<Outcome> {
        let p = picard.take().unwrap().with_lambda(lambda);
        let (_, rep) = p.solve()?;
        probes.push(LambdaProbe { lambda, outcome: rep.outcome, iterates: rep.iterates });
        picard = Some(p);
        Ok(rep.outcome)
    };
    if !probe(lo)?.is_converged() {
        return Err(Error::Precondition(format!("Picard does not converge at lo = {lo}")));
    }
    if probe(hi)?.is_converged() {
        return Err(Error::Precondition(format!(
            "Picard still converges at hi = {hi}; no threshold in range"
        )));
    }
    let (mut a, mut b) = (lo, hi);
    while b - a > rtol * b {
        let mid = 0.5 * (a + b);
        if probe(mid)?.is_converged() {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(ThresholdBracket { lambda_ok: a, lambda_fail: b, probes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{norm_linf, Grid2D};

    #[test]
    fn zero_forcing_is_trivial() {
        let g = Grid2D::unit_square(17).unwrap();
        let f = Field::zeros(g);
        let cfg = PicardConfig::new(1.0, BoundaryKind::Navier);
        assert_eq!(norm_linf(&picard_map(&f, &cfg, &f).unwrap()), 0.0);
        let (u, rep) = solve_fixed_point(&cfg, &f).unwrap();
        assert_eq!(rep.outcome, Outcome::Converged);
        assert_eq!(rep.iterates, 1);
        assert_eq!(norm_linf(&u), 0.0);
    }

    #[test]
    fn config_validation() {
        let mut cfg = PicardConfig::new(1.0, BoundaryKind::Navier);
        cfg.tol = 0.0;
        assert!(cfg.validate().is_err());
        cfg.tol = 1.0;
        cfg.blowup_cap = 0.5;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn map_of_zero_is_linear_solution() {
        let g = Grid2D::unit_square(17).unwrap();
        let f = Field::from_fn(g, |x, y| 1.0 + x * y);
        for bc in [BoundaryKind::Navier, BoundaryKind::Dirichlet] {
            let p = Picard::new(PicardConfig::new(2.0, bc), &f).unwrap();
            let a = p.map(&Field::zeros(g)).unwrap();
            let b = p.linear_solution().unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn quadratic_phi_reduces_to_constant_determinant() {
        let g = Grid2D::unit_square(17).unwrap();
        let f = Field::constant(g, 1.0);
        let q = Field::from_fn(g, |x, y| x * x + 0.5 * x * y + 2.0 * y * y);
        let c = 4.0 * 1.0 * 2.0 - 0.25;
        let cfg = PicardConfig::new(0.5, BoundaryKind::Navier);
        let a = picard_map(&q, &cfg, &f).unwrap();
        let b = crate::solve::solve_biharmonic_navier(&Field::constant(g, c + 0.5)).unwrap();
        assert!(norm_linf(&sub(&a, &b).unwrap()) < 1e-12 * norm_linf(&b).max(1.0) * 1e3);
    }

    #[test]
    fn contraction_rejects_equal_inputs() {
        let g = Grid2D::unit_square(9).unwrap();
        let u = Field::zeros(g);
        let cfg = PicardConfig::new(1.0, BoundaryKind::Navier);
        assert!(matches!(contraction_probe(&u, &u, &cfg), Err(Error::Precondition(_))));
    }

    #[test]
    fn threshold_rejects_zero_forcing() {
        let g = Grid2D::unit_square(9).unwrap();
        let r = lambda_threshold(&Field::zeros(g), BoundaryKind::Navier, 0.1, 10.0);
        assert!(matches!(r, Err(Error::Precondition(_))));
    }
}
