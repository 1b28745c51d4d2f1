//! Radial shooting on the unit disk.
//!
//! For `u = u(r)` with `p = u′` and `q = Δu = p′ + p/r`, the equation
//! `Δ²u = det(D²u) + λf` integrates once to `r q′ = ½p² + λF` with
//! `F(r) = ∫₀^r s f(s) ds`. The system is advanced by fixed-step RK4 in
//! `t = ln r`, where it reads
//!
//! ```text
//! dp/dt = r q − p,   dq/dt = ½p² + λF,   dF/dt = r² f,   dU/dt = r p
//! ```
//!
//! and has no singular coefficient. The series start at `r = ε` is
//! `p = βε`, `q = 2β`, `F = ε² f(0)/2`, `U = βε²/2`.

use std::io::Write;

use crate::error::{Error, Result};
use crate::grid::BoundaryKind;

/// Start radius of the series data.
pub const EPS: f64 = 1e-6;
/// Default number of RK4 steps.
pub const DEFAULT_STEPS: usize = 10_000;
/// Shots whose state leaves this bound are flagged as blowup.
const ESCAPE: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct RadialShot {
    pub beta: f64,
    pub lambda: f64,
    pub bc: BoundaryKind,
    pub r: Vec<f64>,
    /// `u(r)` normalized so that `u(1) = 0`.
    pub u: Vec<f64>,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    /// `F(r) = ∫₀^r s f(s) ds` carried by the integrator.
    pub big_f: Vec<f64>,
    pub terminal_residual: f64,
    /// Radius at which the state left the finite range.
    pub blowup: Option<f64>,
}

impl RadialShot {
    /// CSV `r,u,du,lap_u`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "r,u,du,lap_u")?;
        for k in 0..self.r.len() {
            writeln!(w, "{},{},{},{}", self.r[k], self.u[k], self.p[k], self.q[k])?;
        }
        Ok(())
    }

    /// Largest `|r q′ − ½p² − λF|` along the trajectory, with `q′` by
    /// centred differences of the samples in `ln r`.
    pub fn reduction_defect(&self) -> f64 {
        let n = self.r.len();
        let mut m = 0.0f64;
        for k in 1..n.saturating_sub(1) {
            let dt = (self.r[k + 1] / self.r[k - 1]).ln();
            let rq = (self.q[k + 1] - self.q[k - 1]) / dt;
            let d = rq - 0.5 * self.p[k] * self.p[k] - self.lambda * self.big_f[k];
            m = m.max(d.abs());
        }
        m
    }
}

type State = [f64; 4];

fn rhs(t: f64, y: &State, lambda: f64, f: &dyn Fn(f64) -> f64) -> State {
    let r = t.exp();
    let [p, q, big_f, _] = *y;
    [r * q - p, 0.5 * p * p + lambda * big_f, r * r * f(r), r * p]
}

fn rk4(t: f64, y: &State, h: f64, lambda: f64, f: &dyn Fn(f64) -> f64) -> State {
    let add = |a: &State, b: &State, s: f64| [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2], a[3] + s * b[3]];
    let k1 = rhs(t, y, lambda, f);
    let k2 = rhs(t + 0.5 * h, &add(y, &k1, 0.5 * h), lambda, f);
    let k3 = rhs(t + 0.5 * h, &add(y, &k2, 0.5 * h), lambda, f);
    let k4 = rhs(t + h, &add(y, &k3, h), lambda, f);
    let mut out = *y;
    for i in 0..4 {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

fn start(beta: f64, f: &dyn Fn(f64) -> f64) -> State {
    [beta * EPS, 2.0 * beta, 0.5 * EPS * EPS * f(0.0), 0.5 * beta * EPS * EPS]
}

fn terminal(y: &State, bc: BoundaryKind) -> f64 {
    match bc {
        BoundaryKind::Dirichlet => y[0],
        BoundaryKind::Navier => y[1],
    }
}

/// Terminal residual only; `None` on blowup.
pub fn residual(
    beta: f64,
    lambda: f64,
    f: &dyn Fn(f64) -> f64,
    bc: BoundaryKind,
    steps: usize,
) -> Option<f64> {
    let t0 = EPS.ln();
    let h = -t0 / steps as f64;
    let mut y = start(beta, f);
    for k in 0..steps {
        y = rk4(t0 + k as f64 * h, &y, h, lambda, f);
        if !y.iter().all(|v| v.is_finite() && v.abs() < ESCAPE) {
            return None;
        }
    }
    Some(terminal(&y, bc))
}

pub fn shoot(beta: f64, lambda: f64, f: &dyn Fn(f64) -> f64, bc: BoundaryKind) -> RadialShot {
    shoot_with(beta, lambda, f, bc, DEFAULT_STEPS)
}

pub fn shoot_with(
    beta: f64,
    lambda: f64,
    f: &dyn Fn(f64) -> f64,
    bc: BoundaryKind,
    steps: usize,
) -> RadialShot {
    let t0 = EPS.ln();
    let h = -t0 / steps as f64;
    let mut y = start(beta, f);
    let mut r = vec![EPS];
    let mut cols: [Vec<f64>; 4] = std::array::from_fn(|i| vec![y[i]]);
    let mut blowup = None;
    for k in 0..steps {
        let t = t0 + (k + 1) as f64 * h;
        y = rk4(t - h, &y, h, lambda, f);
        if !y.iter().all(|v| v.is_finite() && v.abs() < ESCAPE) {
            blowup = Some(t.exp());
            break;
        }
        r.push(if k + 1 == steps { 1.0 } else { t.exp() });
        for i in 0..4 {
            cols[i].push(y[i]);
        }
    }
    let [p, q, big_f, big_u] = cols;
    let u1 = *big_u.last().unwrap();
    let u = big_u.iter().map(|v| v - u1).collect();
    let terminal_residual = if blowup.is_some() { f64::NAN } else { terminal(&y, bc) };
    RadialShot { beta, lambda, bc, r, u, p, q, big_f, terminal_residual, blowup }
}

/// Shooting parameters probed when scanning for roots: zero and ±400
/// logarithmically spaced values up to `10³`.
pub fn scan_betas() -> Vec<f64> {
    let m = 200;
    let pos: Vec<f64> = (0..m).map(|k| 10f64.powf(-4.0 + 7.0 * k as f64 / (m - 1) as f64)).collect();
    let mut out: Vec<f64> = pos.iter().rev().map(|b| -b).collect();
    out.push(0.0);
    out.extend(pos);
    out
}

/// Settings shared by the root searches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialConfig {
    pub steps: usize,
    pub root_tol: f64,
}

impl Default for RadialConfig {
    fn default() -> Self {
        Self { steps: DEFAULT_STEPS, root_tol: 1e-10 }
    }
}

fn refine_root(
    mut a: f64,
    mut fa: f64,
    mut b: f64,
    mut fb: f64,
    eval: &dyn Fn(f64) -> Option<f64>,
    tol: f64,
) -> Option<f64> {
    // Illinois regula falsi with bisection safeguard
    let mut side = 0;
    for _ in 0..200 {
        let mut c = (a * fb - b * fa) / (fb - fa);
        if !(c > a.min(b) && c < a.max(b)) {
            c = 0.5 * (a + b);
        }
        let fc = eval(c)?;
        if fc.abs() <= tol || (b - a).abs() <= 4.0 * f64::EPSILON * c.abs().max(1e-300) {
            return Some(c);
        }
        if (fc > 0.0) == (fb > 0.0) {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
    }
    Some(0.5 * (a + b))
}

/// Golden-section search for an extremum of `g` in `[a, b]`; `sign = 1`
/// locates a maximum.
fn golden_extremum(
    mut a: f64,
    mut b: f64,
    sign: f64,
    eval: &dyn Fn(f64) -> Option<f64>,
) -> Option<(f64, f64)> {
    let gr = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - gr * (b - a);
    let mut d = a + gr * (b - a);
    let mut fc = sign * eval(c)?;
    let mut fd = sign * eval(d)?;
    for _ in 0..80 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = sign * eval(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = sign * eval(d)?;
        }
    }
    let x = 0.5 * (a + b);
    Some((x, eval(x)?))
}

/// All roots of the terminal residual detected on the scan, sorted by `β`.
/// Besides sign changes between probes, interior extrema of the residual are
/// refined so that pairs of close roots near a fold are not missed.
pub fn radial_roots(
    lambda: f64,
    f: &dyn Fn(f64) -> f64,
    bc: BoundaryKind,
    cfg: &RadialConfig,
) -> Vec<f64> {
    let eval = |b: f64| residual(b, lambda, f, bc, cfg.steps);
    let betas = scan_betas();
    let vals: Vec<Option<f64>> = betas.iter().map(|&b| eval(b)).collect();
    let mut roots = Vec::new();
    let push = |segs: &mut Vec<(f64, f64, f64, f64)>, a, fa, b, fb| segs.push((a, fa, b, fb));
    let mut segs = Vec::new();
    for k in 0..betas.len() {
        let Some(fk) = vals[k] else { continue };
        if fk == 0.0 {
            roots.push(betas[k]);
            continue;
        }
        if k + 1 < betas.len() {
            if let Some(fn_) = vals[k + 1] {
                if fn_ != 0.0 && (fk > 0.0) != (fn_ > 0.0) {
                    push(&mut segs, betas[k], fk, betas[k + 1], fn_);
                }
            }
        }
        if k >= 1 && k + 1 < betas.len() {
            if let (Some(fp), Some(fn_)) = (vals[k - 1], vals[k + 1]) {
                let is_max = fk > fp && fk > fn_;
                let is_min = fk < fp && fk < fn_;
                let same = (fp > 0.0) == (fk > 0.0) && (fn_ > 0.0) == (fk > 0.0);
                if (is_max && fk < 0.0 || is_min && fk > 0.0) && same {
                    let sign = if is_max { 1.0 } else { -1.0 };
                    if let Some((x, fx)) = golden_extremum(betas[k - 1], betas[k + 1], sign, &eval) {
                        if fx != 0.0 && (fx > 0.0) != (fk > 0.0) {
                            push(&mut segs, betas[k - 1], fp, x, fx);
                            push(&mut segs, x, fx, betas[k + 1], fn_);
                        } else if fx == 0.0 {
                            roots.push(x);
                        }
                    }
                }
            }
        }
    }
    for (a, fa, b, fb) in segs {
        if let Some(r) = refine_root(a, fa, b, fb, &eval, cfg.root_tol) {
            roots.push(r);
        }
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1e-12));
    roots
}

/// The root of smallest `|β|`: the branch connected to the linear solution.
pub fn solve_radial(lambda: f64, f: &dyn Fn(f64) -> f64, bc: BoundaryKind) -> Result<RadialShot> {
    solve_radial_with(lambda, f, bc, &RadialConfig::default())
}

pub fn solve_radial_with(
    lambda: f64,
    f: &dyn Fn(f64) -> f64,
    bc: BoundaryKind,
    cfg: &RadialConfig,
) -> Result<RadialShot> {
    let roots = radial_roots(lambda, f, bc, cfg);
    let beta = roots
        .iter()
        .copied()
        .min_by(|a, b| a.abs().total_cmp(&b.abs()))
        .ok_or_else(|| Error::NoBracket(format!("no shooting root for λ = {lambda} ({bc})")))?;
    Ok(shoot_with(beta, lambda, f, bc, cfg.steps))
}

/// One `λ` probe of the threshold search with the two outermost roots, if any.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FoldProbe {
    pub lambda: f64,
    pub beta_lo: Option<f64>,
    pub beta_hi: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialThreshold {
    pub lambda_ok: f64,
    pub lambda_fail: f64,
    pub trace: Vec<FoldProbe>,
}

impl RadialThreshold {
    pub fn estimate(&self) -> f64 {
        0.5 * (self.lambda_ok + self.lambda_fail)
    }

    pub fn relative_width(&self) -> f64 {
        (self.lambda_fail - self.lambda_ok) / self.lambda_fail
    }

    /// CSV `lambda,beta_lo,beta_hi`; missing roots are left empty.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "lambda,beta_lo,beta_hi")?;
        let opt = |v: Option<f64>| v.map_or(String::new(), |b| b.to_string());
        for p in &self.trace {
            writeln!(w, "{},{},{}", p.lambda, opt(p.beta_lo), opt(p.beta_hi))?;
        }
        Ok(())
    }
}

fn fold_probe(lambda: f64, f: &dyn Fn(f64) -> f64, bc: BoundaryKind, cfg: &RadialConfig) -> FoldProbe {
    let roots = radial_roots(lambda, f, bc, cfg);
    FoldProbe { lambda, beta_lo: roots.first().copied(), beta_hi: roots.last().copied() }
}

/// Bisection for the fold beyond which no root exists, starting from an
/// expanding search `λ = 1, 2, 4, …`.
pub fn radial_threshold(f: &dyn Fn(f64) -> f64, bc: BoundaryKind) -> Result<RadialThreshold> {
    radial_threshold_with(f, bc, &RadialConfig::default(), 1e-3)
}

pub fn radial_threshold_with(
    f: &dyn Fn(f64) -> f64,
    bc: BoundaryKind,
    cfg: &RadialConfig,
    rtol: f64,
) -> Result<RadialThreshold> {
    if (0..=64).all(|k| f(k as f64 / 64.0) == 0.0) {
        return Err(Error::Precondition("zero forcing: roots exist for every λ".into()));
    }
    let mut trace = Vec::new();
    let mut probe = |l: f64| {
        let p = fold_probe(l, f, bc, cfg);
        trace.push(p);
        p.beta_lo.is_some()
    };
    if !probe(1.0) {
        return Err(Error::Precondition("no radial solution at λ = 1".into()));
    }
    let (mut lo, mut hi) = (1.0, 2.0);
    while probe(hi) {
        lo = hi;
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::Precondition("radial roots persist for all probed λ (zero forcing?)".into()));
        }
    }
    while hi - lo > rtol * hi {
        let mid = 0.5 * (lo + hi);
        if probe(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // non-monotone existence would show up as roots above the bracket
    if trace.iter().any(|p| p.lambda > hi && p.beta_lo.is_some()) {
        return Err(Error::Precondition("radial existence is not monotone in λ".into()));
    }
    Ok(RadialThreshold { lambda_ok: lo, lambda_fail: hi, trace })
}

/// Root separation `β_hi − β_lo` at `λ = λ* (1 − δ)` for each `δ`, with the
/// fitted log-log slope against `λ* − λ`. A fold gives slope ½.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldScaling {
    pub lambda_star: f64,
    pub samples: Vec<(f64, f64)>,
    pub slope: f64,
}

pub fn fold_scaling(
    f: &dyn Fn(f64) -> f64,
    bc: BoundaryKind,
    cfg: &RadialConfig,
    deltas: &[f64],
) -> Result<FoldScaling> {
    let th = radial_threshold_with(f, bc, cfg, 1e-9)?;
    let lambda_star = th.lambda_ok;
    let mut samples = Vec::new();
    for &d in deltas {
        let l = lambda_star * (1.0 - d);
        let roots = radial_roots(l, f, bc, cfg);
        let (a, b) = roots
            .windows(2)
            .map(|w| (w[0], w[1]))
            .min_by(|x, y| (x.1 - x.0).total_cmp(&(y.1 - y.0)))
            .ok_or_else(|| Error::NoBracket(format!("fewer than two roots at λ = {l}")))?;
        samples.push((lambda_star - l, b - a));
    }
    let n = samples.len() as f64;
    let (xs, ys): (Vec<f64>, Vec<f64>) = samples.iter().map(|&(x, y)| (x.ln(), y.ln())).unzip();
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(FoldScaling { lambda_star, samples, slope: sxy / sxx })
}
