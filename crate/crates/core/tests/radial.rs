use epitaxy_core::radial::{
    fold_scaling, radial_roots, radial_threshold, residual, shoot, shoot_with, solve_radial, RadialConfig,
    RadialShot,
};
use epitaxy_core::BoundaryKind;

fn one(_: f64) -> f64 {
    1.0
}

fn bump(r: f64) -> f64 {
    (1.0 - r * r).powi(2) + 0.5
}

#[test]
fn step_halving_is_fourth_order() {
    for bc in [BoundaryKind::Navier, BoundaryKind::Dirichlet] {
        let res: Vec<f64> = [250, 500, 1000, 2000]
            .iter()
            .map(|&n| residual(-1.3, 8.0, &bump, bc, n).unwrap())
            .collect();
        let d: Vec<f64> = res.windows(2).map(|w| (w[0] - w[1]).abs()).collect();
        let orders: Vec<f64> = d.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
        println!("{bc}: {orders:?}");
        assert!(orders.iter().all(|&o| o >= 3.9), "{bc}: {orders:?}");
    }
}

/// `Δ²u − u′u″/r − λf` from fourth-order differences of the `u` samples in
/// `t = ln r`, every `m`-th sample.
fn unreduced_residual(s: &RadialShot, f: &dyn Fn(f64) -> f64, m: usize, r_min: f64) -> f64 {
    let t: Vec<f64> = s.r.iter().step_by(m).map(|r| r.ln()).collect();
    let u: Vec<f64> = s.u.iter().step_by(m).copied().collect();
    let r: Vec<f64> = s.r.iter().step_by(m).copied().collect();
    let n = t.len();
    let h = t[1] - t[0];
    let d1 = |a: &[f64], k: usize| (-a[k + 2] + 8.0 * a[k + 1] - 8.0 * a[k - 1] + a[k - 2]) / (12.0 * h);
    let d2 = |a: &[f64], k: usize| {
        (-a[k + 2] + 16.0 * a[k + 1] - 30.0 * a[k] + 16.0 * a[k - 1] - a[k - 2]) / (12.0 * h * h)
    };
    // the last sample sits at r = 1 exactly and breaks the uniform spacing
    let hi = n - 3;
    let mut lap = vec![0.0; n];
    for k in 2..hi {
        lap[k] = d2(&u, k) / (r[k] * r[k]);
    }
    let mut worst = 0.0f64;
    for k in 4..hi - 2 {
        if r[k] < r_min {
            continue;
        }
        let bih = d2(&lap, k) / (r[k] * r[k]);
        let (ut, utt) = (d1(&u, k), d2(&u, k));
        let (du, ddu) = (ut / r[k], (utt - ut) / (r[k] * r[k]));
        let res = bih - du * ddu / r[k] - s.lambda * f(r[k]);
        worst = worst.max(res.abs());
    }
    worst
}

#[test]
fn converged_shot_solves_unreduced_equation() {
    for bc in [BoundaryKind::Navier, BoundaryKind::Dirichlet] {
        let s = solve_radial(10.0, &bump, bc).unwrap();
        assert!(s.terminal_residual.abs() <= 1e-10);
        // the defect is measured with centred differences, so it is O(step²) itself
        let fine = shoot_with(s.beta, s.lambda, &bump, bc, 2 * s.r.len() - 2);
        let (d1, d2) = (s.reduction_defect(), fine.reduction_defect());
        assert!(d1 < 1e-5 && d1 / d2 > 3.5, "{d1} {d2}");
        // rounding in the fourth differences grows like r⁻⁴ towards the centre
        let worst = unreduced_residual(&s, &bump, 10, 0.2);
        println!("{bc}: unreduced residual {worst:e}");
        assert!(worst <= 1e-5 * s.lambda, "{bc}: {worst}");
    }
}

#[test]
fn trivial_and_series_data() {
    let s = shoot(0.0, 0.0, &one, BoundaryKind::Navier);
    assert!(s.u.iter().all(|&v| v == 0.0));
    assert_eq!(s.terminal_residual, 0.0);
    let s = shoot_with(0.7, 3.0, &one, BoundaryKind::Dirichlet, 4000);
    assert!(s.r.windows(2).all(|w| w[1] > w[0]));
    assert!(s.p[0].abs() < 1e-5 && (s.q[0] - 1.4).abs() < 1e-12);
    assert_eq!(*s.r.last().unwrap(), 1.0);
    assert_eq!(*s.u.last().unwrap(), 0.0);
}

#[test]
fn small_lambda_perturbs_linear_profile() {
    // linear Navier solution for f ≡ 1: λ (r⁴ − 4r² + 3)/64
    let gap = |lambda: f64| {
        let s = solve_radial(lambda, &one, BoundaryKind::Navier).unwrap();
        s.r.iter()
            .zip(&s.u)
            .map(|(r, u)| (u - lambda * (r.powi(4) - 4.0 * r * r + 3.0) / 64.0).abs())
            .fold(0.0f64, f64::max)
    };
    let (a, b) = (gap(0.5), gap(0.25));
    assert!((a / b - 4.0).abs() < 0.2, "{a} {b}");
}

#[test]
fn two_roots_for_moderate_lambda() {
    let cfg = RadialConfig::default();
    let n = radial_roots(10.0, &one, BoundaryKind::Navier, &cfg);
    assert_eq!(n.len(), 2, "{n:?}");
    assert!((n[1] + 1.3871).abs() < 1e-3 && (n[0] + 18.634).abs() < 1e-2, "{n:?}");
    let d = radial_roots(50.0, &one, BoundaryKind::Dirichlet, &cfg);
    assert_eq!(d.len(), 2, "{d:?}");
    // the small root continues the linear branch, β ≈ −λ/8 for Navier
    assert!(n[1] < -10.0 / 8.0);
}

#[test]
fn navier_threshold_and_fold() {
    let th = radial_threshold(&one, BoundaryKind::Navier).unwrap();
    println!("{} {}", th.lambda_ok, th.lambda_fail);
    assert!(th.relative_width() <= 1e-3);
    assert_eq!((th.lambda_ok, th.lambda_fail), (31.9375, 31.96875));
    let fs = fold_scaling(&one, BoundaryKind::Navier, &RadialConfig::default(), &[1e-2, 5e-3, 2.5e-3, 1.25e-3])
        .unwrap();
    println!("fold slope {} samples {:?}", fs.slope, fs.samples);
    assert!((fs.slope - 0.5).abs() <= 0.1, "{}", fs.slope);
}
