//! `Δ²u = |∇(Δu)|² + λf` with `u = Δu = 0` on the boundary.
//!
//! With `v = −Δu` the problem becomes `−Δv = |∇v|² + λf`, `v = 0` on the
//! boundary, and `w = e^v` linearizes it to `−Δw = λ f w`, `w = 1` on the
//! boundary. The discrete pipeline solves `(−Δ_h − λ f) z = λ f` for
//! `z = w − 1`, then `v = ln w` and `−Δ_h u = v`.

use crate::error::{Error, Result};
use crate::grid::{norm_linf_interior, Field, Grid2D};
use crate::linalg::CsrMatrix;
use crate::operators::{grad_sq, laplacian_with, GhostPolicy};
use crate::solve::{assemble_neg_laplacian, Factorization, PoissonSolver};

#[derive(Debug, Clone)]
pub struct KpzSolution {
    pub u: Field,
    pub v: Field,
    pub w: Field,
    /// `−Δ_h v − |∇_h v|² − λf` at interior nodes, zero on the ring.
    pub v_residual: Field,
    /// `Δ²_h u − |∇_h(Δ_h u)|² − λf` at interior nodes, zero on the ring.
    pub u_residual: Field,
    /// `‖−Δ_h w − λ f w‖_∞` over interior nodes.
    pub transform_residual: f64,
}

impl KpzSolution {
    pub fn v_residual_max(&self) -> f64 {
        norm_linf_interior(&self.v_residual)
    }

    pub fn u_residual_max(&self) -> f64 {
        norm_linf_interior(&self.u_residual)
    }
}

/// Rows with non-positive diagonal or positive off-diagonals break the
/// M-matrix structure that keeps `z ≥ 0`.
fn check_m_matrix(a: &CsrMatrix) -> Result<()> {
    for r in 0..a.n() {
        for (c, v) in a.row(r) {
            if (c == r && !(v > 0.0)) || (c != r && v > 0.0) {
                return Err(Error::Precondition(format!(
                    "transform matrix loses M-matrix sign pattern at row {r}"
                )));
            }
        }
    }
    Ok(())
}

pub fn solve_kpz(f: &Field, lambda: f64) -> Result<KpzSolution> {
    let g: Grid2D = *f.grid();
    if g.interior().any(|(i, j)| f.at(i, j) < 0.0) || !(lambda >= 0.0) {
        return Err(Error::Precondition("KPZ transform needs f ≥ 0 and λ ≥ 0".into()));
    }
    let lf: Vec<f64> = g.interior().map(|(i, j)| lambda * f.at(i, j)).collect();
    let neg: Vec<f64> = lf.iter().map(|v| -v).collect();
    let a = assemble_neg_laplacian(&g).add_diagonal(&neg);
    check_m_matrix(&a)?;
    let factor = Factorization::new(a.clone()).map_err(|e| {
        Error::Precondition(format!("λ = {lambda} at or beyond the transform's spectral bound: {e}"))
    })?;
    let z = factor.solve(&lf)?;
    if let Some(k) = z.iter().position(|&v| !(1.0 + v > 0.0)) {
        return Err(Error::Precondition(format!(
            "w = 1 + z is not positive at interior unknown {k}; λ = {lambda} is not admissible"
        )));
    }
    let az = a.mul_vec(&z);
    let transform_residual = az.iter().zip(&lf).fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
    let w = Field::from_interior(g, &z).map(|v| 1.0 + v);
    let mut v = w.map(f64::ln);
    // boundary values of w are exactly 1, keep v exactly 0 there
    v.zero_boundary();
    let u = PoissonSolver::new(g)?.solve(&v)?;
    let v_residual = residual(&v.scale(-1.0), &v, f, lambda);
    let lap_u = laplacian_with(&u, GhostPolicy::AntiReflect);
    let u_residual = residual(&lap_u, &lap_u, f, lambda);
    Ok(KpzSolution { u, v, w, v_residual, u_residual, transform_residual })
}

/// `−Δ_h(m) − |∇_h s|² − λf` on interior nodes, written with `m` the field
/// whose Laplacian carries the operator's sign (`m = −v` or `m = Δ_h u`).
fn residual(m: &Field, s: &Field, f: &Field, lambda: f64) -> Field {
    let g = *f.grid();
    let lap = laplacian_with(m, GhostPolicy::OneSided);
    let gs = grad_sq(s);
    let mut out = Field::zeros(g);
    for (i, j) in g.interior() {
        out.set(i, j, lap.at(i, j) - gs.at(i, j) - lambda * f.at(i, j));
    }
    out
}
