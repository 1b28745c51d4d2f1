use std::f64::consts::PI;

use epitaxy_core::evolution::{flow_step, flow_to_steady, snapshot_writer, FlowConfig, Stepper};
use epitaxy_core::io::read_field_file;
use epitaxy_core::picard::{lap_norm, pde_residual, Picard, PicardConfig};
use epitaxy_core::report::Outcome;
use epitaxy_core::{norm_linf, sub, BoundaryKind, Field, Grid2D};

fn picard_solution(g: Grid2D, lambda: f64, bc: BoundaryKind) -> (Field, Field) {
    let f = Field::constant(g, 1.0);
    let (u, rep) = Picard::new(PicardConfig::new(lambda, bc), &f).unwrap().solve().unwrap();
    assert_eq!(rep.outcome, Outcome::Converged);
    (u, f)
}

#[test]
fn stationary_solution_is_fixed_point() {
    for bc in [BoundaryKind::Navier, BoundaryKind::Dirichlet] {
        let g = Grid2D::unit_square(33).unwrap();
        let (u, f) = picard_solution(g, 20.0, bc);
        let c = FlowConfig::new(1e-3, 1, bc);
        let next = flow_step(&u, &f, 20.0, &c).unwrap();
        let moved = norm_linf(&sub(&next, &u).unwrap());
        assert!(moved <= 1e-10 * norm_linf(&u), "{bc}: {moved}");
    }
}

#[test]
fn flow_reaches_picard_solution() {
    let g = Grid2D::unit_square(33).unwrap();
    let bc = BoundaryKind::Navier;
    let lambda = 20.0;
    let (up, f) = picard_solution(g, lambda, bc);
    let c = FlowConfig::new(1e-3, 20_000, bc);
    let tol = 1e-9;
    let (u, rep) = flow_to_steady(&Field::zeros(g), &f, lambda, &c, tol).unwrap();
    assert_eq!(rep.outcome, Outcome::Converged);
    let gap = lap_norm(&sub(&u, &up).unwrap(), bc);
    let res = pde_residual(&u, &f, lambda, bc).unwrap() * lambda;
    println!("steps {} gap {gap} residual {res}", rep.iterates);
    assert!(gap <= 1e-6, "{gap}");
    assert!(res <= 100.0 * tol, "{res}");
}

#[test]
fn unforced_flow_returns_to_zero() {
    let g = Grid2D::unit_square(33).unwrap();
    let u0 = Field::from_fn(g, |x, y| 0.1 * ((PI * x).sin() * (PI * y).sin()).powi(2));
    let c = FlowConfig::new(1e-3, 20_000, BoundaryKind::Dirichlet);
    let (u, rep) = flow_to_steady(&u0, &Field::zeros(g), 0.0, &c, 1e-10).unwrap();
    assert_eq!(rep.outcome, Outcome::Converged);
    assert!(norm_linf(&u) < 1e-10);
}

#[test]
fn linear_decay_matches_eigenvalue() {
    let g = Grid2D::unit_square(65).unwrap();
    let u0 = Field::from_fn(g, |x, y| (PI * x).sin() * (PI * y).sin());
    let mut c = FlowConfig::new(1e-5, 1, BoundaryKind::Navier);
    c.k1 = 0.0;
    let st = Stepper::new(g, c).unwrap();
    let z = Field::zeros(g);
    let rate = 4.0 * PI.powi(4);
    // one decade of decay
    let steps = ((10.0f64).ln() / rate / c.dt).round() as usize;
    let mut u = u0.clone();
    for _ in 0..steps {
        u = st.step(&u, &z, 0.0).unwrap();
    }
    let t = steps as f64 * c.dt;
    let measured = u.at(32, 32) / u0.at(32, 32);
    let expected = (-rate * t).exp();
    assert!((measured / expected - 1.0).abs() < 0.02, "{measured} vs {expected}");
}

#[test]
fn one_step_error_is_second_order_in_dt() {
    let g = Grid2D::unit_square(17).unwrap();
    let bc = BoundaryKind::Dirichlet;
    let u0 = Field::from_fn(g, |x, y| 2.0 * ((PI * x).sin() * (PI * y).sin()).powi(2));
    let f = Field::constant(g, 1.0);
    let run = |t: f64, k: usize| {
        let st = Stepper::new(g, FlowConfig::new(t / k as f64, k, bc)).unwrap();
        (0..k).fold(u0.clone(), |u, _| st.step(&u, &f, 5.0).unwrap())
    };
    // reference from two fine runs, extrapolated to remove their first-order error
    let exact = |t: f64| {
        let (a, b) = (run(t, 64), run(t, 128));
        epitaxy_core::axpy(-1.0, &a, &b.scale(2.0)).unwrap()
    };
    let dt = 1e-8;
    let e1 = norm_linf(&sub(&run(dt, 1), &exact(dt)).unwrap());
    let e2 = norm_linf(&sub(&run(0.5 * dt, 1), &exact(0.5 * dt)).unwrap());
    println!("one-step errors {e1:e} {e2:e} ratio {}", e1 / e2);
    assert!((e1 / e2 - 4.0).abs() < 0.4, "{e1} {e2}");
}

#[test]
fn snapshots_are_written() {
    let dir = tempfile_dir();
    let g = Grid2D::unit_square(17).unwrap();
    let f = Field::constant(g, 1.0);
    let c = FlowConfig::new(1e-3, 10, BoundaryKind::Navier);
    let (u, _) = epitaxy_core::evolution::flow_to_steady_observed(&Field::zeros(g), &f, 1.0, &c, 0.0, snapshot_writer(&dir, 5))
        .unwrap();
    let last = read_field_file(&dir.join("snap_000010.bin")).unwrap();
    assert_eq!(last, u);
    assert!(dir.join("snap_000000.bin").exists() && dir.join("snap_000005.bin").exists());
    assert!(!dir.join("snap_000001.bin").exists());
    std::fs::remove_dir_all(&dir).unwrap();
}

fn tempfile_dir() -> std::path::PathBuf {
    let d = std::env::temp_dir().join(format!("epitaxy-snap-{}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d
}
