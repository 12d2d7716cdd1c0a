//! Stationary solutions `H(x, u, u_x) = 0`: long-time limits of the semigroup,
//! discounted value iteration, and the critical value / admissible shift of
//! the frozen Hamiltonians `h^a(x, p) = H(x, a, p)`.

use std::fmt;
use std::io::Write;

use rayon::prelude::*;

use crate::error::{LabError, Result};
use crate::evolve::{minimize_velocity, EvolveConfig, Evolver};
use crate::fields::{GridFn, TorusGrid};
use crate::io::fmt_real;
use crate::models::{legendre_l, shared, ContactModel, Discounted, Frozen, SharedModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StationaryMethod {
    Longtime,
    Discounted,
}

impl fmt::Display for StationaryMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StationaryMethod::Longtime => "longtime",
            StationaryMethod::Discounted => "discounted",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationaryResult {
    pub u_minus: GridFn,
    pub method: StationaryMethod,
    /// Longtime: `sup |T_1 u - u|` of the returned iterate. Discounted: final
    /// Bellman defect.
    pub residual: f64,
    /// Unit-time windows (longtime) or Bellman sweeps (discounted).
    pub iterations: usize,
    /// Residual after each iteration.
    pub history: Vec<f64>,
}

/// Evolves until two iterates one time unit apart differ by less than `tol`.
///
/// The returned iterate is checked once more against its own unit-time image:
/// `sup |T_1 u - u| <= 2 tol`, otherwise the run continues.
pub fn solve_longtime(
    model: &dyn ContactModel,
    phi: &GridFn,
    cfg: &EvolveConfig,
    tol: f64,
    t_max: f64,
) -> Result<StationaryResult> {
    if !(tol > 0.0) {
        return Err(LabError::InvalidConfig("tol must be positive".into()));
    }
    let mut ev = Evolver::new(model, phi.clone(), cfg)?;
    let mut history = Vec::new();
    let mut prev = ev.state().clone();
    let mut last_gap = f64::INFINITY;
    let mut candidate: Option<GridFn> = None;
    while ev.time() + 1.0 <= t_max + 0.5 * ev.dt() {
        ev.advance_by(1.0)?;
        let gap = ev.state().sup_dist(&prev)?;
        history.push(gap);
        if let Some(c) = candidate.take() {
            if gap <= 2.0 * tol {
                return Ok(StationaryResult {
                    u_minus: c,
                    method: StationaryMethod::Longtime,
                    residual: gap,
                    iterations: history.len() - 1,
                    history,
                });
            }
        }
        if gap < tol {
            candidate = Some(ev.state().clone());
        }
        last_gap = gap;
        prev = ev.state().clone();
    }
    Err(LabError::NotConverged { t_max, last_gap })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscountedParams {
    /// Bellman step; `None` uses the grid spacing.
    pub dt: Option<f64>,
    pub v_box: f64,
    pub v_samples: usize,
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for DiscountedParams {
    fn default() -> Self {
        Self {
            dt: None,
            v_box: 4.0,
            v_samples: 129,
            tol: 1e-9,
            max_sweeps: 1_000_000,
        }
    }
}

fn bellman_sweep(
    model: &dyn ContactModel,
    u: &GridFn,
    lambda: f64,
    dt: f64,
    p: &DiscountedParams,
) -> Result<GridFn> {
    let g = u.grid();
    let gamma = (-lambda * dt).exp();
    let weight = -(-lambda * dt).exp_m1() / lambda;
    let values = (0..g.n())
        .into_par_iter()
        .with_min_len(16)
        .map(|i| {
            let x = g.node(i);
            let f = |v: f64| -> Result<f64> {
                Ok(gamma * u.interpolate(x - v * dt) + weight * legendre_l(model, x, 0.0, v)?)
            };
            minimize_velocity(p.v_box, p.v_samples, &f)
        })
        .collect::<Result<Vec<f64>>>()?;
    GridFn::new(g, values)
}

fn discount_of(model: &dyn ContactModel) -> Result<f64> {
    match model.discount_rate() {
        Some(l) if l > 0.0 => Ok(l),
        _ => Err(LabError::NotDiscountedForm(format!(
            "{} does not declare dH/du = lambda > 0",
            model.name()
        ))),
    }
}

/// Value iteration for `lambda u + h(x, u_x) = 0` (Jacobi sweeps of the
/// discounted Bellman operator, contraction factor `exp(-lambda dt)`).
///
/// Starts from the supersolution `L(x, 0, 0) / lambda`, so the iterates
/// decrease monotonically.
pub fn solve_discounted(
    model: &dyn ContactModel,
    grid: TorusGrid,
    params: &DiscountedParams,
) -> Result<StationaryResult> {
    let lambda = discount_of(model)?;
    let dt = params.dt.unwrap_or(grid.h());
    if !(dt > 0.0) || !(params.tol > 0.0) || params.v_samples < 3 || !(params.v_box > 0.0) {
        return Err(LabError::InvalidConfig(
            "discounted solve needs dt, tol, v_box > 0 and v_samples >= 3".into(),
        ));
    }
    let mut init = Vec::with_capacity(grid.n());
    for x in grid.nodes() {
        init.push(legendre_l(model, x, 0.0, 0.0)? / lambda);
    }
    let mut u = GridFn::new(grid, init)?;
    let mut history = Vec::new();
    for _ in 0..params.max_sweeps {
        let next = bellman_sweep(model, &u, lambda, dt, params)?;
        let defect = next.sup_dist(&u)?;
        history.push(defect);
        u = next;
        if defect < params.tol {
            return Ok(StationaryResult {
                u_minus: u,
                method: StationaryMethod::Discounted,
                residual: defect,
                iterations: history.len(),
                history,
            });
        }
    }
    Err(LabError::NotConverged {
        t_max: params.max_sweeps as f64 * dt,
        last_gap: history.last().copied().unwrap_or(f64::INFINITY),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalParams {
    /// Strictly decreasing positive discount rates.
    pub ladder: Vec<f64>,
    pub n: usize,
    pub dt: f64,
    pub v_box: f64,
    pub v_samples: usize,
    /// Target accuracy of each `-lambda mean(u_lambda)` estimate.
    pub tol: f64,
}

impl Default for CriticalParams {
    fn default() -> Self {
        Self {
            ladder: vec![0.4, 0.2, 0.1, 0.05],
            n: 128,
            dt: 0.05,
            v_box: 4.0,
            v_samples: 129,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalValueResult {
    pub h_name: String,
    pub a_freeze: f64,
    /// `(lambda_k, -lambda_k * mean(u_lambda_k))`.
    pub ladder: Vec<(f64, f64)>,
    /// Linear extrapolation of the ladder to `lambda = 0`.
    pub c: f64,
    /// Estimates are monotone along the ladder.
    pub ladder_monotone: bool,
}

impl CriticalValueResult {
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "lambda,estimate")?;
        for &(l, e) in &self.ladder {
            writeln!(out, "{},{}", fmt_real(l), fmt_real(e))?;
        }
        Ok(())
    }
}

/// Least-squares line through `(lambda, estimate)`, evaluated at 0.
fn extrapolate_to_zero(points: &[(f64, f64)]) -> f64 {
    if points.len() == 1 {
        return points[0].1;
    }
    let k = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / k;
    let my = points.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    my - sxy / sxx * mx
}

/// Critical value of `h(x, p)` (any model with no `u`-dependence, evaluated at
/// `u = 0`) by vanishing discount.
pub fn critical_value_of(h: &SharedModel, params: &CriticalParams) -> Result<CriticalValueResult> {
    let ladder = &params.ladder;
    if ladder.is_empty()
        || ladder.iter().any(|l| !(*l > 0.0 && l.is_finite()))
        || ladder.windows(2).any(|w| w[1] >= w[0])
    {
        return Err(LabError::InvalidConfig(
            "discount ladder must be nonempty, positive and strictly decreasing".into(),
        ));
    }
    let grid = TorusGrid::new(params.n)?;
    let estimates = ladder
        .par_iter()
        .map(|&lambda| {
            let disc = Discounted::new(h.clone(), lambda);
            // lambda * |u - u*| <= lambda * defect / (1 - gamma) ~ defect / dt
            let gamma = (-lambda * params.dt).exp();
            let dp = DiscountedParams {
                dt: Some(params.dt),
                v_box: params.v_box,
                v_samples: params.v_samples,
                tol: params.tol * (1.0 - gamma) / lambda,
                ..DiscountedParams::default()
            };
            let res = solve_discounted(&disc, grid, &dp)?;
            Ok((lambda, -lambda * res.u_minus.mean()))
        })
        .collect::<Result<Vec<_>>>()?;
    let diffs: Vec<f64> = estimates.windows(2).map(|w| w[1].1 - w[0].1).collect();
    let slack = 10.0 * params.tol;
    let ladder_monotone =
        diffs.iter().all(|&d| d >= -slack) || diffs.iter().all(|&d| d <= slack);
    Ok(CriticalValueResult {
        h_name: h.name().to_string(),
        a_freeze: f64::NAN,
        c: extrapolate_to_zero(&estimates),
        ladder: estimates,
        ladder_monotone,
    })
}

/// Critical value `c(h^a)` of the frozen Hamiltonian `h^a(x, p) = H(x, a, p)`.
pub fn critical_value(
    model: &SharedModel,
    a_freeze: f64,
    params: &CriticalParams,
) -> Result<CriticalValueResult> {
    let h = shared(Frozen::new(model.clone(), a_freeze));
    let mut res = critical_value_of(&h, params)?;
    res.a_freeze = a_freeze;
    Ok(res)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShiftResult {
    pub a_star: f64,
    pub c_at_a_star: f64,
    pub iterations: usize,
    /// `(a, c(h^a))` at every evaluation, in order.
    pub evaluations: Vec<(f64, f64)>,
    pub final_ladder: CriticalValueResult,
}

/// Bisection for `a*` with `c(h^{a*}) = 0`; requires `c(h^{a_lo}) < 0 < c(h^{a_hi})`.
pub fn admissible_shift(
    model: &SharedModel,
    bracket: (f64, f64),
    tol: f64,
    params: &CriticalParams,
) -> Result<ShiftResult> {
    let (mut lo, mut hi) = bracket;
    if !(lo < hi) || !(tol > 0.0) {
        return Err(LabError::InvalidConfig(
            "bracket must satisfy a_lo < a_hi and tol > 0".into(),
        ));
    }
    let c_lo = critical_value(model, lo, params)?;
    let c_hi = critical_value(model, hi, params)?;
    let mut evaluations = vec![(lo, c_lo.c), (hi, c_hi.c)];
    if !(c_lo.c < 0.0 && c_hi.c > 0.0) {
        return Err(LabError::BracketInvalid {
            a_lo: lo,
            a_hi: hi,
            c_lo: c_lo.c,
            c_hi: c_hi.c,
        });
    }
    let mut iterations = 0;
    loop {
        iterations += 1;
        let mid = 0.5 * (lo + hi);
        let res = critical_value(model, mid, params)?;
        evaluations.push((mid, res.c));
        if res.c.abs() < tol || hi - lo < 1e-12 || iterations >= 200 {
            return Ok(ShiftResult {
                a_star: mid,
                c_at_a_star: res.c,
                iterations,
                evaluations,
                final_ladder: res,
            });
        }
        if res.c < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

/// Evolves `phi` under a discounted-form model and records `sup |u(t) - u_minus|`.
pub fn discounted_gap(
    model: &dyn ContactModel,
    phi: &GridFn,
    u_minus: &GridFn,
    times: &[f64],
    cfg: &EvolveConfig,
) -> Result<Vec<(f64, f64)>> {
    discount_of(model)?;
    phi.check_same_grid(u_minus)?;
    let mut ev = Evolver::new(model, phi.clone(), cfg)?;
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        ev.advance_to(t)?;
        out.push((ev.time(), ev.state().sup_dist(u_minus)?));
    }
    Ok(out)
}
