use std::f64::consts::PI;

use epitaxy_core::energy::psi;
use epitaxy_core::grid::norm_linf_interior;
use epitaxy_core::operators::{
    bilaplacian_dirichlet, bilaplacian_navier, dx, dy, grad_perp, hessian_det,
    hessian_det_divergence, laplacian, mixed_xy,
};
use epitaxy_core::{integrate, norm_l1, sub, Field, Grid2D};

const SIZES: [usize; 3] = [33, 65, 129];
const IDENTITY_SIZES: [usize; 4] = [33, 65, 129, 257];

fn orders(errs: &[f64]) -> Vec<f64> {
    errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

/// Max error over nodes at least `ring` away from the boundary.
fn max_err(a: &Field, b: &Field, ring: usize) -> f64 {
    let g = *a.grid();
    let d = sub(a, b).unwrap();
    let mut m = 0.0f64;
    for j in ring..g.ny() - ring {
        for i in ring..g.nx() - ring {
            m = m.max(d.at(i, j).abs());
        }
    }
    m
}

fn sweep(mut err: impl FnMut(Grid2D) -> f64) -> Vec<f64> {
    let errs: Vec<f64> = SIZES.iter().map(|&n| err(Grid2D::unit_square(n).unwrap())).collect();
    let o = orders(&errs);
    println!("errors {errs:?} orders {o:?}");
    o
}

// u = sin(πx) sin(2πy) and its derivatives
fn s12(x: f64, y: f64) -> f64 {
    (PI * x).sin() * (2.0 * PI * y).sin()
}

#[test]
fn laplacian_second_order() {
    let o = sweep(|g| {
        let u = Field::from_fn(g, s12);
        let ex = Field::from_fn(g, |x, y| -5.0 * PI * PI * s12(x, y));
        max_err(&laplacian(&u), &ex, 1)
    });
    assert!(o.iter().all(|&p| p >= 1.9), "{o:?}");
}

#[test]
fn navier_bilaplacian_second_order() {
    let o = sweep(|g| {
        let u = Field::from_fn(g, s12);
        let ex = Field::from_fn(g, |x, y| 25.0 * PI.powi(4) * s12(x, y));
        max_err(&bilaplacian_navier(&u), &ex, 1)
    });
    assert!(o.iter().all(|&p| p >= 1.9), "{o:?}");
}

#[test]
fn dirichlet_bilaplacian_second_order() {
    // S = sin²(πx): S'' = 2π² cos 2πx, S'''' = −8π⁴ cos 2πx
    let s = |t: f64| (PI * t).sin().powi(2);
    let s2 = |t: f64| 2.0 * PI * PI * (2.0 * PI * t).cos();
    let s4 = |t: f64| -8.0 * PI.powi(4) * (2.0 * PI * t).cos();
    let o = sweep(|g| {
        let u = Field::from_fn(g, |x, y| s(x) * s(y));
        let ex = Field::from_fn(g, |x, y| s4(x) * s(y) + 2.0 * s2(x) * s2(y) + s(x) * s4(y));
        max_err(&bilaplacian_dirichlet(&u), &ex, 1)
    });
    assert!(o.iter().all(|&p| p >= 1.9), "{o:?}");
}

#[test]
fn biharmonic_of_quartic() {
    let g = Grid2D::unit_square(17).unwrap();
    let u = Field::from_fn(g, |x, y| (x * x + y * y).powi(2));
    let b = bilaplacian_navier(&u);
    assert!(max_err(&b, &Field::constant(g, 64.0), 2) < 1e-8);
}

fn det_exact(x: f64, y: f64) -> f64 {
    let c = (PI * x).cos() * (2.0 * PI * y).cos();
    4.0 * PI.powi(4) * (s12(x, y).powi(2) - c * c)
}

#[test]
fn hessian_det_second_order() {
    let o = sweep(|g| {
        let u = Field::from_fn(g, s12);
        max_err(&hessian_det(&u), &Field::from_fn(g, det_exact), 1)
    });
    assert!(o.iter().all(|&p| p >= 1.9), "{o:?}");
}

#[test]
fn divergence_det_second_order_inside() {
    let o = sweep(|g| {
        let u = Field::from_fn(g, s12);
        max_err(&hessian_det_divergence(&u), &Field::from_fn(g, det_exact), 2)
    });
    assert!(o.iter().all(|&p| p >= 1.9), "{o:?}");
}

#[test]
fn det_forms_agree_in_l1_on_bump() {
    let errs: Vec<f64> = SIZES
        .iter()
        .map(|&n| {
            let g = Grid2D::new(n, n, -1.5, 1.5, -1.5, 1.5).unwrap();
            let u = Field::from_fn(g, psi);
            norm_l1(&sub(&hessian_det(&u), &hessian_det_divergence(&u)).unwrap())
        })
        .collect();
    let o = orders(&errs);
    println!("L1 gap {errs:?} orders {o:?}");
    assert!(errs.windows(2).all(|w| w[1] < w[0]));
    assert!(o.iter().all(|&p| p >= 1.0), "{o:?}");
}

/// `gap / h²` settles: neighbouring values within a factor 1.5 and their
/// differences shrinking.
fn assert_stable(cs: &[f64]) {
    assert!(cs.iter().all(|c| c.is_finite() && *c > 0.0), "{cs:?}");
    assert!(cs.windows(2).all(|w| w[1] / w[0] < 1.5 && w[0] / w[1] < 1.5), "{cs:?}");
    let d: Vec<f64> = cs.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    assert!(d.windows(2).all(|w| w[1] < w[0]), "{cs:?}");
}

fn clamped_asym(x: f64, y: f64) -> f64 {
    ((PI * x).sin() * (PI * y).sin()).powi(2) * (1.0 + x + 2.0 * y * y)
}

#[test]
fn cubic_identity_gap_is_order_h2() {
    let cs: Vec<f64> = IDENTITY_SIZES
        .iter()
        .map(|&n| {
            let g = Grid2D::unit_square(n).unwrap();
            let u = Field::from_fn(g, clamped_asym);
            let lhs = integrate(&u.mul(&hessian_det(&u)).unwrap());
            let t = dx(&u).mul(&dy(&u)).unwrap().mul(&mixed_xy(&u)).unwrap();
            let rhs = 3.0 * integrate(&t);
            println!("n {n} lhs {lhs} rhs {rhs}");
            (lhs - rhs).abs() / (g.hx() * g.hx())
        })
        .collect();
    println!("C {cs:?}");
    assert_stable(&cs);
}

#[test]
fn perp_identity_gap_is_order_h2() {
    let v1 = |x: f64, y: f64| 1.0 + x * x * y + y;
    let v2 = |x: f64, y: f64| x * y * y + x * x * x;
    let v3 = |x: f64, y: f64| x * (1.0 - x) * y * (1.0 - y) * (1.0 + x);
    let cs: Vec<f64> = IDENTITY_SIZES
        .iter()
        .map(|&n| {
            let g = Grid2D::unit_square(n).unwrap();
            let (a, b, c) = (Field::from_fn(g, v1), Field::from_fn(g, v2), Field::from_fn(g, v3));
            let det = dx(&a).mul(&dy(&b)).unwrap().zip_with(&dy(&a).mul(&dx(&b)).unwrap(), |p, q| p - q).unwrap();
            let lhs = integrate(&det.mul(&c).unwrap());
            let (px, py) = grad_perp(&c);
            let dot = dx(&b).mul(&px).unwrap().add(&dy(&b).mul(&py).unwrap()).unwrap();
            let rhs = integrate(&a.mul(&dot).unwrap());
            println!("n {n} lhs {lhs} rhs {rhs}");
            (lhs - rhs).abs() / (g.hx() * g.hx())
        })
        .collect();
    println!("C {cs:?}");
    assert_stable(&cs);
}

#[test]
fn perp_is_divergence_free() {
    // centred differences commute, so the identity is exact up to rounding
    for n in SIZES {
        let g = Grid2D::unit_square(n).unwrap();
        let u = Field::from_fn(g, |x, y| (x + 2.0 * y).sin() * (3.0 * x).cos());
        let (a, b) = grad_perp(&u);
        let d = dx(&a).add(&dy(&b)).unwrap();
        assert!(norm_linf_interior(&d) < 1e-10);
    }
}

#[test]
fn perp_of_coordinates() {
    let g = Grid2D::unit_square(9).unwrap();
    let (a, b) = grad_perp(&Field::from_fn(g, |x, _| x));
    assert!(a.values().iter().all(|v| v.abs() < 1e-12));
    assert!(b.values().iter().all(|v| (v + 1.0).abs() < 1e-12));
    let (a, b) = grad_perp(&Field::from_fn(g, |_, y| y));
    assert!(a.values().iter().all(|v| (v - 1.0).abs() < 1e-12));
    assert!(b.values().iter().all(|v| v.abs() < 1e-12));
}
