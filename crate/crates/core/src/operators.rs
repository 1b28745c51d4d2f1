//! Second-order finite-difference operators on [`Field`]s.
//!
//! Interior nodes always use centred stencils. What happens on the boundary
//! ring is governed by a [`GhostPolicy`]: the value a ghost node one spacing
//! outside the domain is assumed to take.

use crate::error::Result;
use crate::grid::{check_same_grid, Field};

/// How ghost values beyond the boundary are synthesised.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GhostPolicy {
    /// `u₋₁ = u₁`: even reflection, encodes `∂u/∂n = 0`.
    ReflectEven,
    /// `u₋₁ = 2u₀ − u₁`: odd reflection about the boundary value; with
    /// `u₀ = 0` this encodes `u = Δu = 0`.
    AntiReflect,
    /// No ghost: second-order one-sided differences on the boundary.
    OneSided,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StencilKind {
    GradX,
    GradY,
    Laplacian,
    MixedXY,
    Bilaplacian,
}

/// A stencil together with its boundary treatment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StencilOp {
    pub kind: StencilKind,
    pub ghost: GhostPolicy,
}

impl StencilOp {
    pub fn new(kind: StencilKind, ghost: GhostPolicy) -> Self {
        Self { kind, ghost }
    }

    pub fn apply(&self, u: &Field) -> Field {
        match self.kind {
            StencilKind::GradX => dx(u),
            StencilKind::GradY => dy(u),
            StencilKind::Laplacian => laplacian_with(u, self.ghost),
            StencilKind::MixedXY => mixed_xy(u),
            StencilKind::Bilaplacian => bilaplacian_with(u, self.ghost),
        }
    }
}

#[derive(Clone, Copy)]
enum Axis {
    X,
    Y,
}

/// Strided view helpers: for axis X the line index is `j` and position `i`.
#[inline]
fn line_geom(u: &Field, axis: Axis) -> (usize, usize, usize, f64) {
    let g = u.grid();
    match axis {
        // (points per line, number of lines, stride, spacing)
        Axis::X => (g.nx(), g.ny(), 1, g.hx()),
        Axis::Y => (g.ny(), g.nx(), g.nx(), g.hy()),
    }
}

#[inline]
fn line_start(u: &Field, axis: Axis, line: usize) -> usize {
    match axis {
        Axis::X => line * u.grid().nx(),
        Axis::Y => line,
    }
}

fn first_diff(u: &Field, axis: Axis) -> Field {
    let (n, lines, s, h) = line_geom(u, axis);
    let v = u.values();
    let mut out = Field::zeros(*u.grid());
    let o = out.values_mut();
    let inv2h = 0.5 / h;
    for line in 0..lines {
        let b = line_start(u, axis, line);
        let at = |k: usize| v[b + k * s];
        o[b] = (-3.0 * at(0) + 4.0 * at(1) - at(2)) * inv2h;
        for k in 1..n - 1 {
            o[b + k * s] = (at(k + 1) - at(k - 1)) * inv2h;
        }
        o[b + (n - 1) * s] = (3.0 * at(n - 1) - 4.0 * at(n - 2) + at(n - 3)) * inv2h;
    }
    out
}

fn second_diff(u: &Field, axis: Axis, ghost: GhostPolicy) -> Field {
    let (n, lines, s, h) = line_geom(u, axis);
    let v = u.values();
    let mut out = Field::zeros(*u.grid());
    let o = out.values_mut();
    let inv = 1.0 / (h * h);
    for line in 0..lines {
        let b = line_start(u, axis, line);
        let at = |k: usize| v[b + k * s];
        for k in 1..n - 1 {
            o[b + k * s] = (at(k + 1) - 2.0 * at(k) + at(k - 1)) * inv;
        }
        let (lo, hi) = match ghost {
            GhostPolicy::ReflectEven => {
                (2.0 * (at(1) - at(0)) * inv, 2.0 * (at(n - 2) - at(n - 1)) * inv)
            }
            GhostPolicy::AntiReflect => (0.0, 0.0),
            GhostPolicy::OneSided => (
                (2.0 * at(0) - 5.0 * at(1) + 4.0 * at(2) - at(3)) * inv,
                (2.0 * at(n - 1) - 5.0 * at(n - 2) + 4.0 * at(n - 3) - at(n - 4)) * inv,
            ),
        };
        o[b] = lo;
        o[b + (n - 1) * s] = hi;
    }
    out
}

/// `∂u/∂x`: centred inside, second-order one-sided on the boundary.
pub fn dx(u: &Field) -> Field {
    first_diff(u, Axis::X)
}

/// `∂u/∂y`: centred inside, second-order one-sided on the boundary.
pub fn dy(u: &Field) -> Field {
    first_diff(u, Axis::Y)
}

pub fn dxx(u: &Field, ghost: GhostPolicy) -> Field {
    second_diff(u, Axis::X, ghost)
}

pub fn dyy(u: &Field, ghost: GhostPolicy) -> Field {
    second_diff(u, Axis::Y, ghost)
}

/// Mixed derivative `∂²u/∂x∂y`. On interior nodes this is exactly the
/// cross-centred stencil `(u₊₊ − u₊₋ − u₋₊ + u₋₋)/(4 hx hy)`.
pub fn mixed_xy(u: &Field) -> Field {
    dy(&dx(u))
}

/// Five-point Laplacian with one-sided boundary values.
pub fn laplacian(u: &Field) -> Field {
    laplacian_with(u, GhostPolicy::OneSided)
}

pub fn laplacian_with(u: &Field, ghost: GhostPolicy) -> Field {
    let mut a = dxx(u, ghost);
    let b = dyy(u, ghost);
    for (p, q) in a.values_mut().iter_mut().zip(b.values()) {
        *p += q;
    }
    a
}

/// `Δ_h(Δ_h u)` where the inner Laplacian uses `ghost` on the boundary ring.
/// Only interior values are meaningful; the boundary ring is set to zero.
pub fn bilaplacian_with(u: &Field, ghost: GhostPolicy) -> Field {
    let inner = laplacian_with(u, ghost);
    let mut out = laplacian_with(&inner, GhostPolicy::OneSided);
    out.zero_boundary();
    out
}

/// Thirteen-point `Δ²` with even-reflection ghosts (`∂u/∂n = 0`).
/// Assumes `u = 0` on the boundary.
pub fn bilaplacian_dirichlet(u: &Field) -> Field {
    bilaplacian_with(u, GhostPolicy::ReflectEven)
}

/// Thirteen-point `Δ²` with odd-reflection ghosts (`Δu = 0`); this equals the
/// composition of two five-point Laplacians with `Δ_h u = 0` on the boundary.
pub fn bilaplacian_navier(u: &Field) -> Field {
    bilaplacian_with(u, GhostPolicy::AntiReflect)
}

/// `Δ²_h` matching the boundary condition.
pub fn bilaplacian(u: &Field, bc: crate::grid::BoundaryKind) -> Field {
    match bc {
        crate::grid::BoundaryKind::Dirichlet => bilaplacian_dirichlet(u),
        crate::grid::BoundaryKind::Navier => bilaplacian_navier(u),
    }
}

/// The Laplacian used for the `‖Δ_h u‖₂` norm under each boundary condition.
pub fn laplacian_bc(u: &Field, bc: crate::grid::BoundaryKind) -> Field {
    match bc {
        crate::grid::BoundaryKind::Dirichlet => laplacian_with(u, GhostPolicy::ReflectEven),
        crate::grid::BoundaryKind::Navier => laplacian_with(u, GhostPolicy::AntiReflect),
    }
}

/// `u_xx u_yy − u_xy²` at interior nodes; zero on the boundary ring.
pub fn hessian_det(u: &Field) -> Field {
    let g = *u.grid();
    let (ihx2, ihy2) = (1.0 / (g.hx() * g.hx()), 1.0 / (g.hy() * g.hy()));
    let ihxy = 0.25 / (g.hx() * g.hy());
    let mut out = Field::zeros(g);
    for (i, j) in g.interior() {
        let c = u.at(i, j);
        let uxx = (u.at(i + 1, j) - 2.0 * c + u.at(i - 1, j)) * ihx2;
        let uyy = (u.at(i, j + 1) - 2.0 * c + u.at(i, j - 1)) * ihy2;
        let uxy = (u.at(i + 1, j + 1) - u.at(i + 1, j - 1) - u.at(i - 1, j + 1)
            + u.at(i - 1, j - 1))
            * ihxy;
        out.set(i, j, uxx * uyy - uxy * uxy);
    }
    out
}

/// Divergence form `(u_x u_y)_xy − ½(u_y²)_xx − ½(u_x²)_yy`, differencing the
/// nodal product fields. Zero on the boundary ring; the ring next to it uses
/// one-sided first derivatives from the boundary and is only first order.
pub fn hessian_det_divergence(u: &Field) -> Field {
    let ux = dx(u);
    let uy = dy(u);
    let g = *u.grid();
    let p = ux.zip_with(&uy, |a, b| a * b).expect("same grid");
    let q = uy.map(|b| b * b);
    let r = ux.map(|a| a * a);
    let pxy = mixed_xy(&p);
    let qxx = dxx(&q, GhostPolicy::OneSided);
    let ryy = dyy(&r, GhostPolicy::OneSided);
    let mut out = Field::zeros(g);
    for (i, j) in g.interior() {
        out.set(i, j, pxy.at(i, j) - 0.5 * qxx.at(i, j) - 0.5 * ryy.at(i, j));
    }
    out
}

/// `∇⊥u = (u_y, −u_x)`.
pub fn grad_perp(u: &Field) -> (Field, Field) {
    (dy(u), dx(u).scale(-1.0))
}

/// `∂a/∂x + ∂b/∂y`.
pub fn divergence(a: &Field, b: &Field) -> Result<Field> {
    check_same_grid(a, b)?;
    dx(a).add(&dy(b))
}

/// `|∇u|²` from centred/one-sided first differences.
pub fn grad_sq(u: &Field) -> Field {
    let ux = dx(u);
    let uy = dy(u);
    ux.zip_with(&uy, |a, b| a * a + b * b).expect("same grid")
}
