//! Two critical points of the clamped energy: the negative-energy local
//! minimizer near zero and a mountain-pass point above it.
//!
//! Everything runs in the energy inner product `⟨a, b⟩_M = ∫ Δ_h a Δ_h b`.
//! The Riesz gradient `R(u) = M⁻¹∇J(u) = u − A⁻¹(Det(u) + λf)` costs one
//! clamped biharmonic solve, and `Det` is the variational determinant, so
//! critical points are exact zeros of the discrete energy gradient.

use std::io::Write;

use crate::energy::{
    det_variational, energy, mollified_direction, psi_domain, EnergyBreakdown,
    TruncationParams,
};
use crate::error::{Error, Result};
use crate::evolution::{DetForm, FlowConfig, Stepper};
use crate::grid::{axpy, inner, norm_l2, norm_linf_interior, sub, BoundaryKind, Field};
use crate::operators::{bilaplacian_dirichlet, laplacian_bc};
use crate::report::{ConvergenceReport, Outcome};
use crate::solve::BiharmonicSolver;

const BC: BoundaryKind = BoundaryKind::Dirichlet;

/// `J_λ` on a fixed grid and forcing, with a factored clamped biharmonic.
pub struct Landscape {
    f: Field,
    lambda: f64,
    solver: BiharmonicSolver,
    lin: Field,
    lin_norm: f64,
}

impl Landscape {
    pub fn new(f: &Field, lambda: f64) -> Result<Self> {
        let solver = BiharmonicSolver::new(*f.grid(), BC)?;
        Self::with_solver(f, lambda, solver)
    }

    pub fn with_solver(f: &Field, lambda: f64, solver: BiharmonicSolver) -> Result<Self> {
        if solver.bc() != BC || solver.grid() != f.grid() {
            return Err(Error::InvalidParameter("landscape needs a clamped solver on f's grid".into()));
        }
        let lin = solver.solve(&f.scale(lambda))?;
        let lin_norm = lap_norm(&lin);
        Ok(Self { f: f.clone(), lambda, solver, lin, lin_norm })
    }

    pub fn forcing(&self) -> &Field {
        &self.f
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn solver(&self) -> &BiharmonicSolver {
        &self.solver
    }

    /// The linear solution `A⁻¹ λf`.
    pub fn linear_solution(&self) -> &Field {
        &self.lin
    }

    pub fn energy(&self, u: &Field) -> EnergyBreakdown {
        energy(u, &self.f, self.lambda)
    }

    pub fn riesz(&self, u: &Field) -> Result<Field> {
        let rhs = axpy(self.lambda, &self.f, &det_variational(u))?;
        sub(u, &self.solver.solve(&rhs)?)
    }

    /// `M⁻¹∇F_λ` for the truncated functional.
    pub fn riesz_truncated(&self, u: &Field, tp: &TruncationParams) -> Result<Field> {
        let e = self.energy(u);
        let s = e.lap_norm();
        let kq = if s > 0.0 { 1.0 - e.cubic * tp.dtau(s) / s } else { 1.0 };
        let rhs = axpy(self.lambda, &self.f, &det_variational(u).scale(tp.tau(s)))?;
        sub(&u.scale(kq), &self.solver.solve(&rhs)?)
    }

    pub fn truncated(&self, u: &Field, tp: &TruncationParams) -> f64 {
        let e = self.energy(u);
        e.quad - tp.tau(e.lap_norm()) * e.cubic - e.linear
    }

    /// `‖R‖_M` relative to the size of `u` or, near zero, of the linear solution.
    pub fn scaled_norm(&self, u: &Field, r: &Field) -> f64 {
        let den = lap_norm(u).max(self.lin_norm);
        if den > 0.0 {
            lap_norm(r) / den
        } else {
            lap_norm(r)
        }
    }

    /// `‖Δ²_h u − Det(u) − λf‖_∞ / max(‖Δ²_h u‖_∞, ‖λf‖_∞)` on interior nodes.
    pub fn pde_residual(&self, u: &Field) -> Result<f64> {
        let b = bilaplacian_dirichlet(u);
        let r = sub(&b, &axpy(self.lambda, &self.f, &det_variational(u))?)?;
        let den = norm_linf_interior(&b).max(self.lambda.abs() * norm_linf_interior(&self.f));
        let raw = norm_linf_interior(&r);
        Ok(if den > 0.0 { raw / den } else { raw })
    }

    /// Same residual with the nodal determinant; differs by the `O(h²)` gap
    /// between the two determinant discretizations.
    pub fn pointwise_residual(&self, u: &Field) -> Result<f64> {
        let b = bilaplacian_dirichlet(u);
        let r = sub(&b, &axpy(self.lambda, &self.f, &crate::operators::hessian_det(u))?)?;
        let den = norm_linf_interior(&b).max(self.lambda.abs() * norm_linf_interior(&self.f));
        let raw = norm_linf_interior(&r);
        Ok(if den > 0.0 { raw / den } else { raw })
    }
}

pub fn lap_norm(u: &Field) -> f64 {
    norm_l2(&laplacian_bc(u, BC))
}

pub fn m_inner(a: &Field, b: &Field) -> f64 {
    inner(&laplacian_bc(a, BC), &laplacian_bc(b, BC)).expect("same grid")
}

fn normalized(u: &Field) -> Field {
    u.scale(1.0 / lap_norm(u))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MpassConfig {
    /// Number of path points including both endpoints.
    pub points: usize,
    pub min_tol: f64,
    pub max_descent: usize,
    pub pass_tol: f64,
    pub max_sweeps: usize,
    /// Scaled projected gradient at the path maximum that ends the string phase.
    pub string_tol: f64,
    pub max_refine: usize,
}

impl Default for MpassConfig {
    fn default() -> Self {
        Self {
            points: 17,
            min_tol: 1e-8,
            max_descent: 500,
            pass_tol: 1e-6,
            max_sweeps: 300,
            string_tol: 1e-2,
            max_refine: 300,
        }
    }
}

impl MpassConfig {
    pub fn validate(&self) -> Result<()> {
        if self.points < 17 || !(self.min_tol > 0.0) || !(self.pass_tol > 0.0) {
            return Err(Error::InvalidParameter(format!("invalid mpass config {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct LocalMin {
    pub u: Field,
    pub energy: EnergyBreakdown,
    pub report: ConvergenceReport,
    pub scaled_gradient: f64,
    /// Set for zero forcing, where the minimizer is `u = 0` with `J = 0`.
    pub zero_energy: bool,
    /// Iterates with `F_λ < 0` but `‖Δ_h u‖₂ ≥ r0`.
    pub radius_violations: usize,
    /// Largest increase of `F_λ` over accepted steps. Steps whose predicted
    /// decrease is below the rounding level of `F_λ` are accepted on gradient
    /// decrease instead, so this can be positive at the level of `ε |F_λ|`.
    pub max_increase: f64,
}

pub fn find_local_min(f: &Field, lambda: f64, tp: &TruncationParams) -> Result<LocalMin> {
    find_local_min_with(&Landscape::new(f, lambda)?, tp, &MpassConfig::default())
}

/// Preconditioned steepest descent on `F_λ` with Armijo backtracking, from a
/// small multiple of the mollified forcing direction.
pub fn find_local_min_with(
    land: &Landscape,
    tp: &TruncationParams,
    cfg: &MpassConfig,
) -> Result<LocalMin> {
    cfg.validate()?;
    let g = *land.f.grid();
    let phi = if land.lambda != 0.0 { mollified_direction(&land.f) } else { None };
    let Some(phi) = phi else {
        let u = Field::zeros(g);
        let mut report = ConvergenceReport::new();
        report.push(0.0);
        report.outcome = Outcome::Converged;
        return Ok(LocalMin {
            energy: land.energy(&u),
            u,
            report,
            scaled_gradient: 0.0,
            zero_energy: true,
            radius_violations: 0,
            max_increase: 0.0,
        });
    };
    let phi = if inner(&phi, &land.f)? * land.lambda < 0.0 { phi.scale(-1.0) } else { phi };
    let mut t = tp.r0();
    let mut u = phi.scale(t);
    let mut fu = land.truncated(&u, tp);
    while fu >= 0.0 && t > 1e-12 * tp.r0() {
        t *= 0.5;
        u = phi.scale(t);
        fu = land.truncated(&u, tp);
    }
    if fu >= 0.0 {
        return Err(Error::Precondition("no negative-energy start along φ_f".into()));
    }
    let mut report = ConvergenceReport::new();
    let mut radius_violations = 0;
    let mut max_increase = f64::NEG_INFINITY;
    let mut alpha = 1.0;
    let mut sg = f64::INFINITY;
    for _ in 0..cfg.max_descent {
        let r = land.riesz_truncated(&u, tp)?;
        sg = land.scaled_norm(&u, &r);
        report.push(sg);
        if sg <= cfg.min_tol {
            report.outcome = Outcome::Converged;
            break;
        }
        let rn = lap_norm(&r);
        let rr = rn * rn;
        let mut step = None;
        while alpha > 1e-12 {
            let cand = axpy(-alpha, &r, &u)?;
            let fc = land.truncated(&cand, tp);
            let resolvable = 1e-4 * alpha * rr > 64.0 * f64::EPSILON * fu.abs();
            let ok = if resolvable {
                fc <= fu - 1e-4 * alpha * rr
            } else {
                // energy differences are below rounding; fall back to the gradient
                lap_norm(&land.riesz_truncated(&cand, tp)?) < rn
            };
            if ok {
                step = Some((cand, fc));
                break;
            }
            alpha *= 0.5;
        }
        let Some((cand, fc)) = step else {
            report.outcome = Outcome::MaxIter;
            break;
        };
        max_increase = max_increase.max(fc - fu);
        u = cand;
        fu = fc;
        if fu < 0.0 && lap_norm(&u) >= tp.r0() {
            radius_violations += 1;
        }
        alpha = (2.0 * alpha).min(1.0);
    }
    if report.outcome != Outcome::Converged && sg > cfg.min_tol {
        report.outcome = Outcome::MaxIter;
    }
    Ok(LocalMin {
        energy: land.energy(&u),
        u,
        report,
        scaled_gradient: sg,
        zero_energy: false,
        radius_violations,
        max_increase,
    })
}

/// A discretized path with per-point energies.
#[derive(Debug, Clone)]
pub struct PathState {
    pub points: Vec<Field>,
    pub energies: Vec<f64>,
    pub max_index: usize,
}

impl PathState {
    pub fn linear(a: &Field, b: &Field, p: usize, land: &Landscape) -> Result<Self> {
        let d = sub(b, a)?;
        let points = (0..p).map(|k| axpy(k as f64 / (p - 1) as f64, &d, a)).collect::<Result<_>>()?;
        Ok(Self::from_points(points, land))
    }

    pub fn from_points(points: Vec<Field>, land: &Landscape) -> Self {
        let energies: Vec<f64> = points.iter().map(|u| land.energy(u).total).collect();
        let max_index = argmax(&energies);
        Self { points, energies, max_index }
    }

    pub fn max_energy(&self) -> f64 {
        self.energies[self.max_index]
    }

    /// Redistributes interior points uniformly in `‖Δ_h ·‖₂` arc length,
    /// keeping both endpoints, by piecewise-linear interpolation.
    pub fn reparametrized(&self, land: &Landscape) -> Result<Self> {
        let p = self.points.len();
        let mut s = vec![0.0; p];
        for k in 1..p {
            s[k] = s[k - 1] + lap_norm(&sub(&self.points[k], &self.points[k - 1])?);
        }
        let total = s[p - 1];
        if !(total > 0.0) {
            return Ok(self.clone());
        }
        let mut out = vec![self.points[0].clone()];
        let mut seg = 0;
        for k in 1..p - 1 {
            let target = total * k as f64 / (p - 1) as f64;
            while seg + 2 < p && s[seg + 1] < target {
                seg += 1;
            }
            let w = (target - s[seg]) / (s[seg + 1] - s[seg]).max(f64::MIN_POSITIVE);
            let d = sub(&self.points[seg + 1], &self.points[seg])?;
            out.push(axpy(w.clamp(0.0, 1.0), &d, &self.points[seg])?);
        }
        out.push(self.points[p - 1].clone());
        Ok(Self::from_points(out, land))
    }

    fn min_spacing(&self) -> Result<f64> {
        let mut m = f64::INFINITY;
        for w in self.points.windows(2) {
            m = m.min(lap_norm(&sub(&w[1], &w[0])?));
        }
        Ok(m)
    }

    /// Largest energy at segment midpoints, a guard against the nodes
    /// stepping across the ridge between two samples.
    fn midpoint_max(&self, land: &Landscape) -> Result<f64> {
        let mut m = f64::NEG_INFINITY;
        for w in self.points.windows(2) {
            m = m.max(land.energy(&w[0].add(&w[1])?.scale(0.5)).total);
        }
        Ok(m)
    }

    /// Unit tangent at interior point `k` from its neighbours.
    fn tangent(&self, k: usize) -> Result<Field> {
        Ok(normalized(&sub(&self.points[k + 1], &self.points[k - 1])?))
    }
}

fn argmax(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |b, (k, &e)| if e > b.1 { (k, e) } else { b })
        .0
}

/// Energy profiles of successive accepted sweeps, for CSV `sweep,point,energy`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PathLog {
    pub profiles: Vec<Vec<f64>>,
}

impl PathLog {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "sweep,point,energy")?;
        for (s, prof) in self.profiles.iter().enumerate() {
            for (k, e) in prof.iter().enumerate() {
                writeln!(w, "{s},{k},{e}")?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct MountainPass {
    pub u: Field,
    pub energy: EnergyBreakdown,
    /// Scaled gradient per string sweep, then per refinement step.
    pub report: ConvergenceReport,
    pub sweeps: usize,
    pub path: PathState,
    pub log: PathLog,
    pub far: Field,
    pub scaled_gradient: f64,
    pub residual: f64,
    /// `⟨Hτ, τ⟩_M` along the final min-mode: negative at a saddle.
    pub curvature: f64,
}

pub fn find_mountain_pass(f: &Field, lambda: f64, u0: &Field) -> Result<MountainPass> {
    find_mountain_pass_with(&Landscape::new(f, lambda)?, u0, &MpassConfig::default())
}

/// Far endpoint `s ψ_Ω` with `J(s ψ_Ω) < J(u₀)`, doubling `s` from `‖Δ_h u₀‖₂`
/// or from one tenth of the mountain-pass scale of `ψ_Ω`.
pub fn far_endpoint(land: &Landscape, u0: &Field) -> Result<Field> {
    let psi = normalized(&psi_domain(land.f.grid()));
    let e0 = land.energy(u0).total;
    let c = crate::energy::cubic(&psi);
    if !(c > 0.0) {
        return Err(Error::Precondition("ψ_Ω has no positive cubic term on this grid".into()));
    }
    let mut s = (0.1 / (3.0 * c)).max(lap_norm(u0));
    for _ in 0..200 {
        let v = psi.scale(s);
        if land.energy(&v).total < e0 {
            return Ok(v);
        }
        s *= 2.0;
    }
    Err(Error::Precondition("no far endpoint below J(u₀)".into()))
}

pub fn find_mountain_pass_with(
    land: &Landscape,
    u0: &Field,
    cfg: &MpassConfig,
) -> Result<MountainPass> {
    cfg.validate()?;
    let far = far_endpoint(land, u0)?;
    let mut path = PathState::linear(u0, &far, cfg.points, land)?.reparametrized(land)?;
    let mut report = ConvergenceReport::new();
    let mut log = PathLog { profiles: vec![path.energies.clone()] };
    let mut eta = 0.5;
    let mut sweeps = 0;
    let p = cfg.points;
    while sweeps < cfg.max_sweeps {
        check_interior_max(&path)?;
        // string step: descend the normal component of R at interior points
        let mut pts = path.points.clone();
        let mut peak_sg = 0.0;
        let mut dirs = Vec::with_capacity(p - 2);
        let spacing = path.min_spacing()?;
        for k in 1..p - 1 {
            let r = land.riesz(&path.points[k])?;
            let t = path.tangent(k)?;
            let d = axpy(-m_inner(&r, &t), &t, &r)?;
            if k == path.max_index {
                peak_sg = land.scaled_norm(&path.points[k], &d);
            }
            // no node may move further than half the closest spacing
            let dn = lap_norm(&d);
            let cap = 0.5 * spacing;
            dirs.push(if dn > cap { d.scale(cap / dn) } else { d });
        }
        report.push(peak_sg);
        if peak_sg <= cfg.string_tol {
            break;
        }
        let mut accepted = false;
        while eta > 1e-6 {
            for k in 1..p - 1 {
                pts[k] = axpy(-eta, &dirs[k - 1], &path.points[k])?;
            }
            let cand = PathState::from_points(pts.clone(), land).reparametrized(land)?;
            if cand.max_energy() <= path.max_energy()
                && cand.midpoint_max(land)? <= path.max_energy()
            {
                path = cand;
                accepted = true;
                break;
            }
            eta *= 0.5;
        }
        if !accepted {
            break;
        }
        sweeps += 1;
        log.profiles.push(path.energies.clone());
        eta = (1.25 * eta).min(1.0);
    }
    check_interior_max(&path)?;
    let k = path.max_index;
    let tau = path.tangent(k)?;
    let (u, curvature) = refine_saddle(land, path.points[k].clone(), tau, cfg, &mut report)?;
    let scaled_gradient = land.scaled_norm(&u, &land.riesz(&u)?);
    report.outcome =
        if scaled_gradient <= cfg.pass_tol { Outcome::Converged } else { Outcome::MaxIter };
    Ok(MountainPass {
        energy: land.energy(&u),
        residual: land.pde_residual(&u)?,
        u,
        report,
        sweeps,
        path,
        log,
        far,
        scaled_gradient,
        curvature,
    })
}

fn check_interior_max(path: &PathState) -> Result<()> {
    if path.max_index == 0 || path.max_index + 1 == path.points.len() {
        return Err(Error::Precondition(format!(
            "geometry violation: path maximum migrated to endpoint {}",
            path.max_index
        )));
    }
    Ok(())
}

/// `H v = DR(u)[v]`; exact by central differences since `R` is quadratic.
fn hvp(land: &Landscape, u: &Field, v: &Field) -> Result<Field> {
    let e = lap_norm(u).max(1.0);
    let a = land.riesz(&axpy(e, v, u)?)?;
    let b = land.riesz(&axpy(-e, v, u)?)?;
    Ok(sub(&a, &b)?.scale(0.5 / e))
}

/// One Rayleigh–Ritz step on `span{τ, Hτ − μτ}` towards the lowest mode of `H`.
fn improve_mode(land: &Landscape, u: &Field, tau: &Field) -> Result<(Field, f64)> {
    let h = hvp(land, u, tau)?;
    let mu = m_inner(&h, tau);
    let w = axpy(-mu, tau, &h)?;
    let wn = lap_norm(&w);
    if !(wn > 1e-14) {
        return Ok((tau.clone(), mu));
    }
    let w = w.scale(1.0 / wn);
    let hw = hvp(land, u, &w)?;
    // 2×2 symmetric Ritz problem in the orthonormal basis {τ, w}
    let a = mu;
    let b = 0.5 * (m_inner(&hw, tau) + m_inner(&h, &w));
    let c = m_inner(&hw, &w);
    let theta = 0.5 * (a + c) - (0.25 * (a - c).powi(2) + b * b).sqrt();
    let (x, y) = if b.abs() > 0.0 { (b, theta - a) } else if a <= c { (1.0, 0.0) } else { (0.0, 1.0) };
    let t = axpy(y, &w, &tau.scale(x))?;
    Ok((normalized(&t), theta))
}

/// Min-mode following: `u ← u − η(R − 2⟨R, τ⟩τ)` with `τ` tracking the
/// lowest eigenvector of the Riesz Hessian.
fn refine_saddle(
    land: &Landscape,
    mut u: Field,
    mut tau: Field,
    cfg: &MpassConfig,
    report: &mut ConvergenceReport,
) -> Result<(Field, f64)> {
    let mut mu = 0.0;
    for _ in 0..3 {
        (tau, mu) = improve_mode(land, &u, &tau)?;
    }
    let mut r = land.riesz(&u)?;
    let mut rn = lap_norm(&r);
    let mut eta = 1.0;
    for _ in 0..cfg.max_refine {
        let sg = land.scaled_norm(&u, &r);
        report.push(sg);
        if sg <= cfg.pass_tol {
            break;
        }
        let d = axpy(-2.0 * m_inner(&r, &tau), &tau, &r)?;
        let mut moved = false;
        while eta > 1e-4 {
            let cand = axpy(-eta, &d, &u)?;
            let rc = land.riesz(&cand)?;
            let rcn = lap_norm(&rc);
            if rcn < rn {
                u = cand;
                r = rc;
                rn = rcn;
                moved = true;
                break;
            }
            eta *= 0.5;
        }
        if !moved {
            break;
        }
        eta = (1.5 * eta).min(1.0);
        (tau, mu) = improve_mode(land, &u, &tau)?;
    }
    Ok((u, mu))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StabilityTag {
    Stable,
    Unstable,
    Unknown,
}

impl StabilityTag {
    pub fn as_str(self) -> &'static str {
        match self {
            StabilityTag::Stable => "stable",
            StabilityTag::Unstable => "unstable",
            StabilityTag::Unknown => "unknown",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityConfig {
    /// Perturbation size relative to `‖Δ_h u‖₂`.
    pub eps_rel: f64,
    pub dt: f64,
    pub steps: usize,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        Self { eps_rel: 1e-3, dt: 1e-4, steps: 1000 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub tag: StabilityTag,
    pub eps: f64,
    /// `‖Δ_h(u(t) − u)‖₂` after each step until the run ends.
    pub distance: Vec<f64>,
    pub blowup: bool,
}

pub fn classify_stability(u: &Field, f: &Field, lambda: f64) -> Result<StabilityTag> {
    Ok(classify_stability_with(u, f, lambda, &StabilityConfig::default())?.tag)
}

/// Runs the clamped flow with `k₁ = ½, k₂ = 1` and the variational
/// determinant, so its steady states are exactly the energy's critical
/// points, from `u + ε ψ_Ω / ‖Δ_h ψ_Ω‖₂`.
pub fn classify_stability_with(
    u: &Field,
    f: &Field,
    lambda: f64,
    cfg: &StabilityConfig,
) -> Result<StabilityReport> {
    let g = *u.grid();
    let mut fc = FlowConfig::new(cfg.dt, cfg.steps, BC);
    fc.det_form = DetForm::Variational;
    let st = Stepper::new(g, fc)?;
    let base = lap_norm(u);
    let eps = if base > 0.0 { cfg.eps_rel * base } else { cfg.eps_rel };
    let mut w = axpy(eps, &normalized(&psi_domain(&g)), u)?;
    let mut distance = Vec::with_capacity(cfg.steps);
    let mut blowup = false;
    for _ in 0..cfg.steps {
        w = st.step(&w, f, lambda)?;
        let d = lap_norm(&sub(&w, u)?);
        if !d.is_finite() || lap_norm(&w) > fc.blowup_cap {
            blowup = true;
            break;
        }
        distance.push(d);
        if d > 1e3 * eps {
            break;
        }
    }
    let last = distance.last().copied().unwrap_or(f64::INFINITY);
    let tag = if blowup || last > 100.0 * eps {
        StabilityTag::Unstable
    } else if last <= 10.0 * eps {
        StabilityTag::Stable
    } else {
        StabilityTag::Unknown
    };
    Ok(StabilityReport { tag, eps, distance, blowup })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid2D;

    #[test]
    fn zero_forcing_minimizer_is_zero() {
        let g = Grid2D::unit_square(17).unwrap();
        let f = Field::zeros(g);
        let tp = TruncationParams::new(1.0, 2.0).unwrap();
        let m = find_local_min(&f, 1.0, &tp).unwrap();
        assert!(m.zero_energy);
        assert_eq!(m.energy.total, 0.0);
        assert_eq!(classify_stability(&m.u, &f, 0.0).unwrap(), StabilityTag::Stable);
    }

    #[test]
    fn reparametrization_equalizes_spacing() {
        let g = Grid2D::unit_square(17).unwrap();
        let f = Field::constant(g, 1.0);
        let land = Landscape::new(&f, 1.0).unwrap();
        let a = Field::zeros(g);
        let b = psi_domain(&g);
        let pts: Vec<Field> = [0.0, 0.05, 0.1, 0.7, 1.0].iter().map(|&t| b.scale(t)).collect();
        let path = PathState::from_points(pts, &land).reparametrized(&land).unwrap();
        for k in 0..5 {
            let want = b.scale(k as f64 / 4.0);
            assert!(lap_norm(&sub(&path.points[k], &want).unwrap()) < 1e-12 * lap_norm(&b));
        }
        assert_eq!(path.points[0], a);
    }

    #[test]
    fn path_csv_layout() {
        let log = PathLog { profiles: vec![vec![0.0, 1.5], vec![0.0, 1.25]] };
        let mut buf = Vec::new();
        log.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "sweep,point,energy\n0,0,0\n0,1,1.5\n1,0,0\n1,1,1.25\n"
        );
    }

    #[test]
    fn hvp_is_linear_in_direction() {
        let g = Grid2D::unit_square(17).unwrap();
        let f = Field::constant(g, 1.0);
        let land = Landscape::new(&f, 2.0).unwrap();
        let u = psi_domain(&g).scale(30.0);
        let v = normalized(&Field::from_fn(g, |x, y| (x * (1.0 - x) * y * (1.0 - y)).powi(2)));
        let a = hvp(&land, &u, &v).unwrap();
        let b = hvp(&land, &u, &v.scale(2.0)).unwrap();
        assert!(lap_norm(&sub(&b, &a.scale(2.0)).unwrap()) < 1e-9 * lap_norm(&a));
    }
}
