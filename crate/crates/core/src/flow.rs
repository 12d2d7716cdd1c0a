//! Contact characteristics
//! `x' = H_p`, `p' = -H_x - H_u p`, `u' = H_p p - H`,
//! integrated with classical RK4; energy law along the flow; backward
//! calibrated curves shot from reachable differentials of a stationary
//! solution.

use std::io::Write;

use crate::error::{LabError, Result};
use crate::fields::{wrap_torus, GridFn};
use crate::io::fmt_real;
use crate::models::{legendre_l, ContactModel};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowState {
    pub x: f64,
    pub u: f64,
    pub p: f64,
}

impl FlowState {
    pub fn new(x: f64, u: f64, p: f64) -> Self {
        Self { x, u, p }
    }

    fn is_finite(&self) -> bool {
        self.x.is_finite() && self.u.is_finite() && self.p.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub x: f64,
    pub u: f64,
    pub p: f64,
}

impl Sample {
    pub fn state(&self) -> FlowState {
        FlowState::new(self.x, self.u, self.p)
    }
}

/// Time-sampled orbit, stored with strictly increasing `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub dt: f64,
}

impl Trajectory {
    pub fn first(&self) -> &Sample {
        &self.samples[0]
    }

    pub fn last(&self) -> &Sample {
        &self.samples[self.samples.len() - 1]
    }

    /// Sample nearest to time `t`.
    pub fn at(&self, t: f64) -> &Sample {
        let k = self
            .samples
            .partition_point(|s| s.t < t)
            .min(self.samples.len() - 1);
        if k > 0 && (self.samples[k - 1].t - t).abs() <= (self.samples[k].t - t).abs() {
            &self.samples[k - 1]
        } else {
            &self.samples[k]
        }
    }

    /// Rows `t,x,u,p,H`.
    pub fn write_csv<W: Write>(&self, model: &dyn ContactModel, mut out: W) -> Result<()> {
        writeln!(out, "t,x,u,p,H")?;
        for s in &self.samples {
            writeln!(
                out,
                "{},{},{},{},{}",
                fmt_real(s.t),
                fmt_real(s.x),
                fmt_real(s.u),
                fmt_real(s.p),
                fmt_real(model.h(s.x, s.u, s.p))
            )?;
        }
        Ok(())
    }
}

fn vector_field(model: &dyn ContactModel, z: FlowState) -> FlowState {
    let hp = model.dh_dp(z.x, z.u, z.p);
    FlowState {
        x: hp,
        u: hp * z.p - model.h(z.x, z.u, z.p),
        p: -model.dh_dx(z.x, z.u, z.p) - model.dh_du(z.x, z.u, z.p) * z.p,
    }
}

fn axpy(z: FlowState, a: f64, k: FlowState) -> FlowState {
    FlowState {
        x: wrap_torus(z.x + a * k.x),
        u: z.u + a * k.u,
        p: z.p + a * k.p,
    }
}

/// One RK4 step of signed length `h`; `x` is wrapped after every stage.
pub fn rk4_step(model: &dyn ContactModel, z: FlowState, h: f64) -> FlowState {
    let k1 = vector_field(model, z);
    let k2 = vector_field(model, axpy(z, 0.5 * h, k1));
    let k3 = vector_field(model, axpy(z, 0.5 * h, k2));
    let k4 = vector_field(model, axpy(z, h, k3));
    FlowState {
        x: wrap_torus(z.x + h / 6.0 * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x)),
        u: z.u + h / 6.0 * (k1.u + 2.0 * k2.u + 2.0 * k3.u + k4.u),
        p: z.p + h / 6.0 * (k1.p + 2.0 * k2.p + 2.0 * k3.p + k4.p),
    }
}

/// Integrates from `t0` to `t1` (either direction) with step `dt`; the last
/// step is shortened to land on `t1`.
pub fn integrate(model: &dyn ContactModel, z0: FlowState, t_span: (f64, f64), dt: f64) -> Result<Trajectory> {
    let (t0, t1) = t_span;
    if !(dt > 0.0) || !(t1 != t0) || !t0.is_finite() || !t1.is_finite() {
        return Err(LabError::InvalidConfig(
            "integrate needs dt > 0 and a nonempty finite time span".into(),
        ));
    }
    let z0 = FlowState::new(wrap_torus(z0.x), z0.u, z0.p);
    if !z0.is_finite() {
        return Err(LabError::NonFinite { t: t0 });
    }
    let dir = (t1 - t0).signum();
    let span = (t1 - t0).abs();
    let full = (span / dt).floor() as usize;
    let mut samples = vec![Sample { t: t0, x: z0.x, u: z0.u, p: z0.p }];
    let mut z = z0;
    let push = |samples: &mut Vec<Sample>, z: FlowState, t: f64| -> Result<()> {
        if !z.is_finite() {
            return Err(LabError::NonFinite { t });
        }
        samples.push(Sample { t, x: z.x, u: z.u, p: z.p });
        Ok(())
    };
    for k in 1..=full {
        z = rk4_step(model, z, dir * dt);
        push(&mut samples, z, t0 + dir * dt * k as f64)?;
    }
    let rest = span - dt * full as f64;
    if rest > 1e-12 * dt.max(span) {
        z = rk4_step(model, z, dir * rest);
        push(&mut samples, z, t1)?;
    } else if let Some(last) = samples.last_mut() {
        last.t = t1;
    }
    if dir < 0.0 {
        samples.reverse();
    }
    Ok(Trajectory { samples, dt })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyProfile {
    /// `(t, H(z(t)))` along the samples.
    pub series: Vec<(f64, f64)>,
    /// Reference value `|H|` at the earliest sample.
    pub h0: f64,
    /// `|H(t)| <= |H(t0)|` at every sample (within `tol`).
    pub upper_ok: bool,
    /// `exp(-Lambda (t - t0)) |H(t0)| <= |H(t)|` at every sample (within `tol`).
    pub lower_ok: bool,
    /// Largest violation of either bound (<= 0 when both hold exactly).
    pub worst_violation: f64,
}

impl EnergyProfile {
    pub fn sandwich_ok(&self) -> bool {
        self.upper_ok && self.lower_ok
    }
}

/// Evaluates `H` along a trajectory and checks
/// `exp(-Lambda t) |H(z0)| <= |H(z(t))| <= |H(z0)|` with tolerance `tol`.
pub fn energy_profile(model: &dyn ContactModel, traj: &Trajectory, tol: f64) -> EnergyProfile {
    let first = traj.first();
    let h0 = model.h(first.x, first.u, first.p).abs();
    let lambda = model.lambda_upper();
    let series: Vec<(f64, f64)> = traj
        .samples
        .iter()
        .map(|s| (s.t, model.h(s.x, s.u, s.p)))
        .collect();
    let (mut worst_upper, mut worst_lower) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for &(t, hv) in &series {
        worst_upper = worst_upper.max(hv.abs() - h0);
        worst_lower = worst_lower.max((-lambda * (t - first.t)).exp() * h0 - hv.abs());
    }
    EnergyProfile {
        series,
        h0,
        upper_ok: worst_upper <= tol,
        lower_ok: worst_lower <= tol,
        worst_violation: worst_upper.max(worst_lower),
    }
}

/// `|u(x(t1)) - u(x(t0)) - int L(x, u(x), x') dt|` by the trapezoid rule,
/// with `x' = H_p` along the samples.
pub fn calibration_residual(model: &dyn ContactModel, traj: &Trajectory, u: &GridFn) -> Result<f64> {
    let integrand = |s: &Sample| -> Result<f64> {
        let ux = u.interpolate(s.x);
        let v = model.dh_dp(s.x, s.u, s.p);
        legendre_l(model, s.x, ux, v)
    };
    let mut action = 0.0;
    let mut prev = integrand(traj.first())?;
    for w in traj.samples.windows(2) {
        let next = integrand(&w[1])?;
        action += 0.5 * (w[1].t - w[0].t) * (prev + next);
        prev = next;
    }
    let (a, b) = (traj.first(), traj.last());
    Ok((u.interpolate(b.x) - u.interpolate(a.x) - action).abs())
}

/// Backward calibrated curve through `x`: shoots from the reachable
/// differentials of `u_minus` at the nearest node over `[-T, 0]` and keeps the
/// one-sided slope with the smaller calibration residual.
pub fn backward_minimizer(
    model: &dyn ContactModel,
    u_minus: &GridFn,
    x: f64,
    t_back: f64,
    dt: f64,
) -> Result<Trajectory> {
    if !(t_back > 0.0) {
        return Err(LabError::InvalidConfig("T must be positive".into()));
    }
    let g = u_minus.grid();
    let i = g.nearest_node(x);
    let x0 = g.node(i);
    let u0 = u_minus.values()[i];
    let (left, right) = u_minus.one_sided_slopes(i);
    let mut candidates = vec![left];
    if right != left {
        candidates.push(right);
    }
    let mut best: Option<(f64, Trajectory)> = None;
    for p0 in candidates {
        let traj = integrate(model, FlowState::new(x0, u0, p0), (0.0, -t_back), dt)?;
        let r = calibration_residual(model, &traj, u_minus)?;
        if best.as_ref().is_none_or(|(b, _)| r < *b) {
            best = Some((r, traj));
        }
    }
    Ok(best.expect("at least one candidate").1)
}
