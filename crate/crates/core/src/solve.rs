//! Linear kernels: `−Δ_h u = g` with `u = 0`, and `Δ²_h u = g` under either
//! boundary condition.
//!
//! Unknowns are the interior nodes; boundary nodes are eliminated (their
//! rows would be identity rows with zero right-hand side). Each solver
//! factors its matrix once and can then be applied to many right-hand sides.

use crate::error::{Error, Result};
use crate::grid::{check_same_grid, BoundaryKind, Field, Grid2D};
use crate::linalg::{pcg, BandCholesky, CsrMatrix};
use crate::operators::GhostPolicy;

/// Largest unknown count handled by the direct factorization.
pub const DIRECT_MAX_UNKNOWNS: usize = 250_000;
/// Band storage cap (entries) for the direct path, about 512 MiB.
pub const DIRECT_MAX_STORAGE: usize = 64 << 20;
/// Relative residual for the conjugate-gradient fallback.
pub const CG_RTOL: f64 = 1e-9;

/// An assembled interior system `A x = b`.
#[derive(Debug, Clone)]
pub struct SparseSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
}

impl SparseSystem {
    pub fn n(&self) -> usize {
        self.matrix.n()
    }

    pub fn residual_norm(&self, x: &[f64]) -> f64 {
        let ax = self.matrix.mul_vec(x);
        ax.iter().zip(&self.rhs).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
    }
}

/// Assembles an interior stencil. Offsets landing on boundary nodes are
/// dropped (`u = 0`); offsets landing one node outside are folded back with
/// `ghost` (`ReflectEven` adds to the mirror node, `AntiReflect` subtracts).
fn assemble(grid: &Grid2D, stencil: &[(i64, i64, f64)], ghost: GhostPolicy) -> CsrMatrix {
    let (nx, ny) = (grid.nx() as i64, grid.ny() as i64);
    let fold = |k: i64, n: i64| -> Option<(i64, f64)> {
        if k >= 1 && k <= n - 2 {
            Some((k, 1.0))
        } else if k == 0 || k == n - 1 {
            None
        } else {
            let mirror = if k < 0 { -k } else { 2 * (n - 1) - k };
            match ghost {
                GhostPolicy::ReflectEven => Some((mirror, 1.0)),
                GhostPolicy::AntiReflect => Some((mirror, -1.0)),
                GhostPolicy::OneSided => panic!("one-sided ghosts are not assembled"),
            }
        }
    };
    let rows = grid
        .interior()
        .map(|(i, j)| {
            let mut row = Vec::with_capacity(stencil.len());
            for &(di, dj, w) in stencil {
                let (i2, j2) = (i as i64 + di, j as i64 + dj);
                if let (Some((a, sa)), Some((b, sb))) = (fold(i2, nx), fold(j2, ny)) {
                    row.push((grid.interior_idx(a as usize, b as usize), w * sa * sb));
                }
            }
            row
        })
        .collect();
    CsrMatrix::from_rows(rows)
}

/// `−Δ_h` on the interior with homogeneous Dirichlet data (SPD).
pub fn assemble_neg_laplacian(grid: &Grid2D) -> CsrMatrix {
    let (ax, ay) = (1.0 / (grid.hx() * grid.hx()), 1.0 / (grid.hy() * grid.hy()));
    let st = [(0, 0, 2.0 * (ax + ay)), (1, 0, -ax), (-1, 0, -ax), (0, 1, -ay), (0, -1, -ay)];
    assemble(grid, &st, GhostPolicy::AntiReflect)
}

/// Thirteen-point `Δ²_h` on the interior. Dirichlet uses even-reflection
/// ghosts, Navier odd-reflection ghosts.
pub fn assemble_bilaplacian(grid: &Grid2D, bc: BoundaryKind) -> CsrMatrix {
    let (ax, ay) = (1.0 / (grid.hx() * grid.hx()), 1.0 / (grid.hy() * grid.hy()));
    let st = [
        (0, 0, 6.0 * ax * ax + 6.0 * ay * ay + 8.0 * ax * ay),
        (1, 0, -4.0 * ax * ax - 4.0 * ax * ay),
        (-1, 0, -4.0 * ax * ax - 4.0 * ax * ay),
        (0, 1, -4.0 * ay * ay - 4.0 * ax * ay),
        (0, -1, -4.0 * ay * ay - 4.0 * ax * ay),
        (2, 0, ax * ax),
        (-2, 0, ax * ax),
        (0, 2, ay * ay),
        (0, -2, ay * ay),
        (1, 1, 2.0 * ax * ay),
        (1, -1, 2.0 * ax * ay),
        (-1, 1, 2.0 * ax * ay),
        (-1, -1, 2.0 * ax * ay),
    ];
    let ghost = match bc {
        BoundaryKind::Dirichlet => GhostPolicy::ReflectEven,
        BoundaryKind::Navier => GhostPolicy::AntiReflect,
    };
    assemble(grid, &st, ghost)
}

/// Interior system of the Dirichlet biharmonic problem for a given load.
pub fn assemble_biharmonic_system(g: &Field) -> SparseSystem {
    SparseSystem {
        matrix: assemble_bilaplacian(g.grid(), BoundaryKind::Dirichlet),
        rhs: g.interior_values(),
    }
}

/// A factored SPD interior operator.
#[derive(Debug, Clone)]
pub enum Factorization {
    Direct(BandCholesky),
    Iterative(CsrMatrix),
}

impl Factorization {
    /// Direct band Cholesky when small enough, otherwise Jacobi-CG.
    pub fn new(a: CsrMatrix) -> Result<Self> {
        let storage = BandCholesky::storage(a.n(), a.bandwidth());
        if a.n() <= DIRECT_MAX_UNKNOWNS && storage <= DIRECT_MAX_STORAGE {
            Ok(Self::Direct(BandCholesky::factor(&a)?))
        } else {
            Ok(Self::Iterative(a))
        }
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        match self {
            Self::Direct(l) => {
                let x = l.solve(b);
                if x.iter().any(|v| !v.is_finite()) {
                    return Err(Error::SingularSystem("non-finite solution".into()));
                }
                Ok(x)
            }
            Self::Iterative(a) => Ok(pcg(a, b, CG_RTOL, 20 * a.n() + 100)?.x),
        }
    }
}

/// Reusable solver for `−Δ_h u = g`, `u = 0` on the boundary.
#[derive(Debug, Clone)]
pub struct PoissonSolver {
    grid: Grid2D,
    factor: Factorization,
}

impl PoissonSolver {
    pub fn new(grid: Grid2D) -> Result<Self> {
        Ok(Self { grid, factor: Factorization::new(assemble_neg_laplacian(&grid))? })
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn solve(&self, g: &Field) -> Result<Field> {
        if *g.grid() != self.grid {
            return Err(Error::GridMismatch("Poisson right-hand side".into()));
        }
        let x = self.factor.solve(&g.interior_values())?;
        Ok(Field::from_interior(self.grid, &x))
    }
}

enum BiharmonicInner {
    Navier(PoissonSolver),
    Dirichlet(Factorization),
}

/// Reusable solver for `Δ²_h u = g` under either boundary condition.
pub struct BiharmonicSolver {
    grid: Grid2D,
    bc: BoundaryKind,
    inner: BiharmonicInner,
}

impl BiharmonicSolver {
    pub fn new(grid: Grid2D, bc: BoundaryKind) -> Result<Self> {
        let inner = match bc {
            BoundaryKind::Navier => BiharmonicInner::Navier(PoissonSolver::new(grid)?),
            BoundaryKind::Dirichlet => BiharmonicInner::Dirichlet(Factorization::new(
                assemble_bilaplacian(&grid, BoundaryKind::Dirichlet),
            )?),
        };
        Ok(Self { grid, bc, inner })
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn bc(&self) -> BoundaryKind {
        self.bc
    }

    pub fn solve(&self, g: &Field) -> Result<Field> {
        if *g.grid() != self.grid {
            return Err(Error::GridMismatch("biharmonic right-hand side".into()));
        }
        match &self.inner {
            BiharmonicInner::Navier(p) => p.solve(&p.solve(g)?),
            BiharmonicInner::Dirichlet(f) => {
                Ok(Field::from_interior(self.grid, &f.solve(&g.interior_values())?))
            }
        }
    }
}

pub fn solve_poisson(g: &Field) -> Result<Field> {
    PoissonSolver::new(*g.grid())?.solve(g)
}

/// `Δ²u = g`, `u = Δu = 0`, as two Poisson solves.
pub fn solve_biharmonic_navier(g: &Field) -> Result<Field> {
    let p = PoissonSolver::new(*g.grid())?;
    p.solve(&p.solve(g)?)
}

/// `Δ²u = g`, `u = ∂u/∂n = 0`, thirteen-point system.
pub fn solve_biharmonic_dirichlet(g: &Field) -> Result<Field> {
    BiharmonicSolver::new(*g.grid(), BoundaryKind::Dirichlet)?.solve(g)
}

pub fn solve_biharmonic(g: &Field, bc: BoundaryKind) -> Result<Field> {
    BiharmonicSolver::new(*g.grid(), bc)?.solve(g)
}

/// Interior residual `A x − b` of a discrete operator applied to a field.
pub fn interior_residual(applied: &Field, rhs: &Field) -> Result<f64> {
    check_same_grid(applied, rhs)?;
    let g = applied.grid();
    Ok(g.interior().fold(0.0f64, |m, (i, j)| m.max((applied.at(i, j) - rhs.at(i, j)).abs())))
}
