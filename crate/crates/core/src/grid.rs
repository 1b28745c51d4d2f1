//! Uniform tensor grids, nodal fields and trapezoidal quadrature.
//!
//! Nodes are stored row-major with `i` (the x index) running fastest:
//! node `(i, j)` lives at offset `j * nx + i`.

use std::fmt;

use crate::error::{Error, Result};

/// Boundary conditions for the fourth-order problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryKind {
    /// Clamped plate: `u = 0` and `∂u/∂n = 0`.
    Dirichlet,
    /// Hinged plate: `u = 0` and `Δu = 0`.
    Navier,
}

impl BoundaryKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundaryKind::Dirichlet => "dirichlet",
            BoundaryKind::Navier => "navier",
        }
    }
}

impl fmt::Display for BoundaryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for BoundaryKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dirichlet" | "clamped" => Ok(BoundaryKind::Dirichlet),
            "navier" | "hinged" => Ok(BoundaryKind::Navier),
            other => Err(Error::InvalidParameter(format!(
                "unknown boundary kind `{other}` (expected dirichlet or navier)"
            ))),
        }
    }
}

/// Uniform grid on the rectangle `[x0, x1] × [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2D {
    nx: usize,
    ny: usize,
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    hx: f64,
    hy: f64,
}

impl Grid2D {
    /// Minimum node count per axis; the 13-point stencil needs two interior layers.
    pub const MIN_NODES: usize = 5;

    pub fn new(nx: usize, ny: usize, x0: f64, x1: f64, y0: f64, y1: f64) -> Result<Self> {
        if nx < Self::MIN_NODES || ny < Self::MIN_NODES {
            return Err(Error::InvalidGrid(format!(
                "need at least {min}x{min} nodes, got {nx}x{ny}",
                min = Self::MIN_NODES
            )));
        }
        if nx > u32::MAX as usize || ny > u32::MAX as usize {
            return Err(Error::InvalidGrid(format!("node counts {nx}x{ny} exceed u32")));
        }
        if ![x0, x1, y0, y1].iter().all(|v| v.is_finite()) || x1 <= x0 || y1 <= y0 {
            return Err(Error::InvalidGrid(format!(
                "degenerate rectangle [{x0}, {x1}] x [{y0}, {y1}]"
            )));
        }
        let hx = (x1 - x0) / (nx - 1) as f64;
        let hy = (y1 - y0) / (ny - 1) as f64;
        Ok(Self { nx, ny, x0, x1, y0, y1, hx, hy })
    }

    /// `n × n` nodes on the unit square.
    pub fn unit_square(n: usize) -> Result<Self> {
        Self::new(n, n, 0.0, 1.0, 0.0, 1.0)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn ny(&self) -> usize {
        self.ny
    }
    pub fn hx(&self) -> f64 {
        self.hx
    }
    pub fn hy(&self) -> f64 {
        self.hy
    }
    /// Corners as `(x0, x1, y0, y1)`.
    pub fn corners(&self) -> (f64, f64, f64, f64) {
        (self.x0, self.x1, self.y0, self.y1)
    }
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }
    pub fn is_empty(&self) -> bool {
        false
    }
    /// Area element `hx · hy`.
    pub fn cell_area(&self) -> f64 {
        self.hx * self.hy
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        if i + 1 == self.nx {
            self.x1
        } else {
            self.x0 + i as f64 * self.hx
        }
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        if j + 1 == self.ny {
            self.y1
        } else {
            self.y0 + j as f64 * self.hy
        }
    }

    #[inline]
    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i + 1 == self.nx || j + 1 == self.ny
    }

    /// Trapezoid weight of node `(i, j)`.
    #[inline]
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        let wx = if i == 0 || i + 1 == self.nx { 0.5 } else { 1.0 };
        let wy = if j == 0 || j + 1 == self.ny { 0.5 } else { 1.0 };
        wx * wy * self.hx * self.hy
    }

    /// Number of interior nodes, `(nx - 2)(ny - 2)`.
    pub fn interior_len(&self) -> usize {
        (self.nx - 2) * (self.ny - 2)
    }

    /// Index of interior node `(i, j)` in the interior unknown vector.
    #[inline]
    pub fn interior_idx(&self, i: usize, j: usize) -> usize {
        (j - 1) * (self.nx - 2) + (i - 1)
    }

    /// Iterator over interior node pairs `(i, j)`, row-major.
    pub fn interior(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (1..self.ny - 1).flat_map(move |j| (1..self.nx - 1).map(move |i| (i, j)))
    }

    /// Same grid with twice the resolution (`2n - 1` nodes per axis).
    pub fn refined(&self) -> Result<Self> {
        Self::new(2 * self.nx - 1, 2 * self.ny - 1, self.x0, self.x1, self.y0, self.y1)
    }
}

/// Scalar nodal field on a [`Grid2D`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid2D,
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: Grid2D) -> Self {
        Self { grid, values: vec![0.0; grid.len()] }
    }

    pub fn constant(grid: Grid2D, c: f64) -> Self {
        Self { grid, values: vec![c; grid.len()] }
    }

    pub fn from_values(grid: Grid2D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Format(format!("non-finite value at node {k}")));
        }
        Ok(Self { grid, values })
    }

    /// Samples `f(x, y)` at every node.
    pub fn from_fn(grid: Grid2D, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..grid.ny() {
            let y = grid.y(j);
            for i in 0..grid.nx() {
                values.push(f(grid.x(i), y));
            }
        }
        Self { grid, values }
    }

    /// Builds a field from interior unknowns; boundary nodes are zero.
    pub fn from_interior(grid: Grid2D, interior: &[f64]) -> Self {
        debug_assert_eq!(interior.len(), grid.interior_len());
        let mut out = Self::zeros(grid);
        let m = grid.nx() - 2;
        for j in 1..grid.ny() - 1 {
            let row = &interior[(j - 1) * m..j * m];
            let start = grid.idx(1, j);
            out.values[start..start + m].copy_from_slice(row);
        }
        out
    }

    /// Interior values in interior-unknown order.
    pub fn interior_values(&self) -> Vec<f64> {
        let g = self.grid;
        let m = g.nx() - 2;
        let mut out = Vec::with_capacity(g.interior_len());
        for j in 1..g.ny() - 1 {
            let start = g.idx(1, j);
            out.extend_from_slice(&self.values[start..start + m]);
        }
        out
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.idx(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.grid.idx(i, j);
        self.values[k] = v;
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn scale(&self, a: f64) -> Field {
        self.map(|v| a * v)
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip_with(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Field> {
        check_same_grid(self, other)?;
        Ok(Field {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn mul(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a + b)
    }

    /// Sets every boundary node to zero.
    pub fn zero_boundary(&mut self) {
        let g = self.grid;
        for j in 0..g.ny() {
            for i in 0..g.nx() {
                if g.is_boundary(i, j) {
                    self.values[g.idx(i, j)] = 0.0;
                }
            }
        }
    }

    /// Largest absolute value over boundary nodes.
    pub fn boundary_max_abs(&self) -> f64 {
        let g = self.grid;
        let mut m = 0.0f64;
        for j in 0..g.ny() {
            for i in 0..g.nx() {
                if g.is_boundary(i, j) {
                    m = m.max(self.at(i, j).abs());
                }
            }
        }
        m
    }
}

pub(crate) fn check_same_grid(a: &Field, b: &Field) -> Result<()> {
    if a.grid != b.grid {
        return Err(Error::GridMismatch(format!(
            "{}x{} field combined with {}x{} field",
            a.grid.nx, a.grid.ny, b.grid.nx, b.grid.ny
        )));
    }
    Ok(())
}

/// Trapezoidal approximation of `∫_Ω f dx`; exact for bilinear integrands.
pub fn integrate(f: &Field) -> f64 {
    let g = f.grid();
    let mut total = 0.0;
    for j in 0..g.ny() {
        let wy = if j == 0 || j + 1 == g.ny() { 0.5 } else { 1.0 };
        let row = &f.values()[j * g.nx()..(j + 1) * g.nx()];
        let inner: f64 = row[1..g.nx() - 1].iter().sum();
        total += wy * (inner + 0.5 * (row[0] + row[g.nx() - 1]));
    }
    total * g.cell_area()
}

pub fn norm_l2(f: &Field) -> f64 {
    integrate(&f.map(|v| v * v)).max(0.0).sqrt()
}

/// Discrete L¹ norm `∫|f|` by the same quadrature.
pub fn norm_l1(f: &Field) -> f64 {
    integrate(&f.map(f64::abs))
}

pub fn norm_linf(f: &Field) -> f64 {
    f.values().iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Max-abs over interior nodes only.
pub fn norm_linf_interior(f: &Field) -> f64 {
    let g = f.grid();
    g.interior().fold(0.0f64, |m, (i, j)| m.max(f.at(i, j).abs()))
}

/// Trapezoid inner product `∫ a b`.
pub fn inner(a: &Field, b: &Field) -> Result<f64> {
    Ok(integrate(&a.mul(b)?))
}

/// `a·x + y`.
pub fn axpy(a: f64, x: &Field, y: &Field) -> Result<Field> {
    x.zip_with(y, |xv, yv| a * xv + yv)
}

/// `x − y`.
pub fn sub(x: &Field, y: &Field) -> Result<Field> {
    x.zip_with(y, |a, b| a - b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn grid_rejects_small_or_degenerate() {
        assert!(Grid2D::new(4, 10, 0.0, 1.0, 0.0, 1.0).is_err());
        assert!(Grid2D::new(10, 10, 1.0, 1.0, 0.0, 1.0).is_err());
        assert!(Grid2D::new(10, 10, 0.0, f64::NAN, 0.0, 1.0).is_err());
        let g = Grid2D::new(5, 9, -1.0, 1.0, 0.0, 2.0).unwrap();
        assert_eq!(g.hx(), 0.5);
        assert_eq!(g.hy(), 0.25);
        assert_eq!(g.x(4), 1.0);
        assert_eq!(g.y(8), 2.0);
    }

    #[test]
    fn integrate_constants() {
        let g = Grid2D::unit_square(17).unwrap();
        assert!((integrate(&Field::constant(g, 1.0)) - 1.0).abs() < 1e-14);
        assert_eq!(integrate(&Field::zeros(g)), 0.0);
    }

    #[test]
    fn integrate_bilinear_exact() {
        let g = Grid2D::new(7, 11, -1.0, 2.0, 0.5, 1.5).unwrap();
        let f = Field::from_fn(g, |x, y| 1.0 + 2.0 * x - y + 3.0 * x * y);
        // ∫∫ over [-1,2]x[0.5,1.5]: area 3, mean x 0.5, mean y 1.0
        let exact = 3.0 * (1.0 + 2.0 * 0.5 - 1.0 + 3.0 * 0.5 * 1.0);
        assert!((integrate(&f) - exact).abs() < 1e-12);
    }

    #[test]
    fn integrate_sine_product() {
        // closed-form trapezoid sum: (h·cot(πh/2))²
        let g = Grid2D::unit_square(65).unwrap();
        let f = Field::from_fn(g, |x, y| (PI * x).sin() * (PI * y).sin());
        let h = g.hx();
        let trap = (h / (PI * h / 2.0).tan()).powi(2);
        assert!((integrate(&f) - trap).abs() < 1e-13);
        assert!((integrate(&f) - 4.0 / (PI * PI)).abs() < 2e-4);
        let g = Grid2D::unit_square(129).unwrap();
        let f = Field::from_fn(g, |x, y| (PI * x).sin() * (PI * y).sin());
        assert!((integrate(&f) - 4.0 / (PI * PI)).abs() < 1e-4);
    }

    #[test]
    fn l2_norms() {
        let g = Grid2D::unit_square(129).unwrap();
        assert_eq!(norm_l2(&Field::zeros(g)), 0.0);
        assert!((norm_l2(&Field::constant(g, 2.0)) - 2.0).abs() < 1e-14);
        let f = Field::from_fn(g, |x, y| (PI * x).sin() * (PI * y).sin());
        assert!((norm_l2(&f) - 0.5).abs() < 1e-4);
    }

    #[test]
    fn elementwise_ops() {
        let g = Grid2D::unit_square(9).unwrap();
        let x = Field::from_fn(g, |x, y| x - 2.0 * y);
        assert_eq!(norm_linf(&Field::zeros(g)), 0.0);
        assert_eq!(axpy(1.0, &x, &Field::zeros(g)).unwrap(), x);
        assert_eq!(sub(&x, &x).unwrap(), Field::zeros(g));
        let other = Field::zeros(Grid2D::unit_square(11).unwrap());
        assert!(matches!(sub(&x, &other), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn quadrature_order_at_least_two() {
        let f = |x: f64, y: f64| (1.3 * x).exp() * (2.0 * y).cos();
        let exact = ((1.3f64).exp() - 1.0) / 1.3 * (2.0f64).sin() / 2.0;
        let errs: Vec<f64> = [17usize, 33, 65]
            .iter()
            .map(|&n| (integrate(&Field::from_fn(Grid2D::unit_square(n).unwrap(), f)) - exact).abs())
            .collect();
        for w in errs.windows(2) {
            assert!((w[0] / w[1]).log2() >= 1.9, "{errs:?}");
        }
    }

    #[test]
    fn interior_roundtrip() {
        let g = Grid2D::new(6, 7, 0.0, 1.0, 0.0, 2.0).unwrap();
        let mut f = Field::from_fn(g, |x, y| x * y + 1.0);
        f.zero_boundary();
        let back = Field::from_interior(g, &f.interior_values());
        assert_eq!(back, f);
        assert_eq!(f.boundary_max_abs(), 0.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn integrate_is_linear(a in -5.0f64..5.0, b in -5.0f64..5.0, k in 1.0f64..4.0) {
                let g = Grid2D::new(13, 9, 0.0, 2.0, -1.0, 1.0).unwrap();
                let f = Field::from_fn(g, |x, y| (k * x).sin() + y * y);
                let h = Field::from_fn(g, |x, y| (x * y).exp());
                let comb = f.zip_with(&h, |p, q| a * p + b * q).unwrap();
                let lhs = integrate(&comb);
                let rhs = a * integrate(&f) + b * integrate(&h);
                let scale = (a * integrate(&f)).abs() + (b * integrate(&h)).abs() + 1e-300;
                prop_assert!((lhs - rhs).abs() <= 1e-12 * scale);
            }

            #[test]
            fn l2_squared_matches_integral(c in -3.0f64..3.0) {
                let g = Grid2D::unit_square(11).unwrap();
                let f = Field::from_fn(g, |x, y| c * (x + 0.3) * (1.0 - y * y));
                let n = norm_l2(&f);
                let i = integrate(&f.map(|v| v * v));
                prop_assert!((n * n - i).abs() <= 1e-12 * i.max(1e-300));
            }
        }
    }
}
