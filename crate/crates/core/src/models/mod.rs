//! Contact Hamiltonians `H(x, u, p)` on the circle, their Legendre duals and
//! sampled checks of the standing assumptions (convexity in `p`,
//! superlinear growth, bounded monotone dependence on `u`).

mod catalog;
pub mod rho;

use std::fmt;
use std::sync::Arc;

pub use catalog::{
    build_surrogate, shared, Concave, Counterexample, Discounted, Frozen, Mechanical, Shifted,
    Surrogate,
};
pub use rho::rho_smooth;

use crate::error::{LabError, Result};

/// A contact Hamiltonian together with its first partials and the metadata the
/// solvers need.
pub trait ContactModel: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;

    fn h(&self, x: f64, u: f64, p: f64) -> f64;
    fn dh_dx(&self, x: f64, u: f64, p: f64) -> f64;
    fn dh_du(&self, x: f64, u: f64, p: f64) -> f64;
    fn dh_dp(&self, x: f64, u: f64, p: f64) -> f64;

    /// Closed-form Lagrangian, when one is known.
    fn lagrangian_closed(&self, _x: f64, _u: f64, _v: f64) -> Option<f64> {
        None
    }

    /// Upper bound `Lambda` of `dH/du`.
    fn lambda_upper(&self) -> f64;

    /// Known uniform lower bound of `dH/du`; 0 when none is claimed.
    fn lambda_lower(&self) -> f64 {
        0.0
    }

    /// Half-width of the momentum window used by the numeric Legendre transform.
    fn p_box(&self) -> f64;

    /// `Some(lambda)` when `H = lambda*u + h(x, p)` exactly.
    fn discount_rate(&self) -> Option<f64> {
        None
    }

    fn depends_on_x(&self) -> bool {
        true
    }
}

pub type SharedModel = Arc<dyn ContactModel>;

pub fn eval_h(model: &dyn ContactModel, x: f64, u: f64, p: f64) -> f64 {
    model.h(x, u, p)
}

const LEGENDRE_TOL: f64 = 1e-12;
const LEGENDRE_MAX_ITER: usize = 100;

/// Solves `dH/dp(x, u, p) = v` for `p` in `[-p_box, p_box]` by Newton's method
/// safeguarded with bisection.
pub fn momentum_for_velocity(model: &dyn ContactModel, x: f64, u: f64, v: f64) -> Result<f64> {
    let p_box = model.p_box();
    let g = |p: f64| model.dh_dp(x, u, p) - v;
    let (mut lo, mut hi) = (-p_box, p_box);
    let (g_lo, g_hi) = (g(lo), g(hi));
    if !(g_lo <= 0.0 && g_hi >= 0.0) || !v.is_finite() {
        return Err(LabError::VelocityOutOfRange { v, p_box });
    }
    let mut p = 0.0_f64.clamp(lo, hi);
    for _ in 0..LEGENDRE_MAX_ITER {
        let r = g(p);
        if r.abs() <= LEGENDRE_TOL {
            return Ok(p);
        }
        if r < 0.0 {
            lo = p;
        } else {
            hi = p;
        }
        let eps = 1e-6 * (1.0 + p.abs());
        let slope = (model.dh_dp(x, u, p + eps) - model.dh_dp(x, u, p - eps)) / (2.0 * eps);
        let newton = p - r / slope;
        p = if slope > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= f64::EPSILON * (1.0 + p.abs()) {
            return Ok(p);
        }
    }
    Ok(p)
}

/// Numeric Legendre transform `sup_p (p v - H)`, ignoring any closed form.
pub fn legendre_numeric(model: &dyn ContactModel, x: f64, u: f64, v: f64) -> Result<f64> {
    let p = momentum_for_velocity(model, x, u, v)?;
    Ok(p * v - model.h(x, u, p))
}

/// `L(x, u, v)`; uses the closed form when the model provides one.
///
/// The velocity must be attainable inside the model's momentum window either way.
pub fn legendre_l(model: &dyn ContactModel, x: f64, u: f64, v: f64) -> Result<f64> {
    match model.lagrangian_closed(x, u, v) {
        Some(l) => {
            let p_box = model.p_box();
            let attainable = v.is_finite()
                && model.dh_dp(x, u, -p_box) <= v
                && v <= model.dh_dp(x, u, p_box);
            if attainable {
                Ok(l)
            } else {
                Err(LabError::VelocityOutOfRange { v, p_box })
            }
        }
        None => legendre_numeric(model, x, u, v),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Assumption {
    H1,
    H2,
    H3,
}

impl fmt::Display for Assumption {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Assumption::H1 => "H1",
            Assumption::H2 => "H2",
            Assumption::H3 => "H3",
        };
        f.write_str(s)
    }
}

/// Which reading of an assumption a check applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckVariant {
    Standard,
    /// `0 < dH/du <= Lambda`
    Strict,
    /// `0 <= dH/du <= Lambda`
    Relaxed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionCheck {
    pub id: Assumption,
    pub variant: CheckVariant,
    pub min: f64,
    pub max: f64,
    pub pass: bool,
}

/// Sampling slab for [`validate_assumptions`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationSlab {
    pub u_box: f64,
    pub p_box: f64,
    pub nx: usize,
    pub nu: usize,
    pub np: usize,
    /// H2 proxy: `H(x, u, +-p_box) / p_box` must exceed this slope.
    pub h2_slope: f64,
}

impl ValidationSlab {
    pub fn new(u_box: f64, p_box: f64) -> Self {
        Self {
            u_box,
            p_box,
            nx: 16,
            nu: 21,
            np: 41,
            h2_slope: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelReport {
    pub model: String,
    pub checks: Vec<AssumptionCheck>,
    pub slab: ValidationSlab,
    pub lambda_lower: f64,
}

impl ModelReport {
    pub fn check(&self, id: Assumption, variant: CheckVariant) -> Option<&AssumptionCheck> {
        self.checks
            .iter()
            .find(|c| c.id == id && c.variant == variant)
    }

    /// H1, H2 and the H3 reading that matches the model's declared lower bound.
    pub fn passes(&self) -> bool {
        let h3 = if self.lambda_lower > 0.0 {
            CheckVariant::Strict
        } else {
            CheckVariant::Relaxed
        };
        [
            (Assumption::H1, CheckVariant::Standard),
            (Assumption::H2, CheckVariant::Standard),
            (Assumption::H3, h3),
        ]
        .iter()
        .all(|&(id, v)| self.check(id, v).is_some_and(|c| c.pass))
    }
}

fn linspace(a: f64, b: f64, n: usize) -> impl Iterator<Item = f64> {
    let n = n.max(2);
    (0..n).map(move |k| a + (b - a) * k as f64 / (n - 1) as f64)
}

#[derive(Default)]
struct Range {
    min: f64,
    max: f64,
    seen: bool,
}

impl Range {
    fn push(&mut self, v: f64) {
        if !self.seen {
            self.min = v;
            self.max = v;
            self.seen = true;
        } else {
            self.min = self.min.min(v);
            self.max = self.max.max(v);
        }
    }
}

/// Samples the slab `{x in grid, |u| <= u_box, |p| <= p_box}` and reports the
/// extreme values behind each assumption. Failures are data, not errors.
///
/// `dH/du` is read from the model's analytic partial: a centred difference at a
/// degenerate point such as `u = 0` of the counterexample returns `O(eps^2) > 0`
/// and would hide the degeneracy.
pub fn validate_assumptions(model: &dyn ContactModel, slab: ValidationSlab) -> ModelReport {
    let dp = 1e-3 * slab.p_box.max(1.0);
    let lambda = model.lambda_upper();
    let mut convexity = Range::default();
    let mut growth = Range::default();
    let mut du = Range::default();
    for k in 0..slab.nx.max(1) {
        let x = k as f64 / slab.nx.max(1) as f64;
        for u in linspace(-slab.u_box, slab.u_box, slab.nu) {
            let up = model.h(x, u, slab.p_box) / slab.p_box;
            let down = model.h(x, u, -slab.p_box) / slab.p_box;
            growth.push(up.min(down));
            for p in linspace(-slab.p_box, slab.p_box, slab.np) {
                let d2 = (model.h(x, u, p + dp) - 2.0 * model.h(x, u, p) + model.h(x, u, p - dp))
                    / (dp * dp);
                convexity.push(d2);
                du.push(model.dh_du(x, u, p));
            }
        }
    }
    let upper_ok = du.max <= lambda * (1.0 + 1e-9) + 1e-12;
    let checks = vec![
        AssumptionCheck {
            id: Assumption::H1,
            variant: CheckVariant::Standard,
            min: convexity.min,
            max: convexity.max,
            pass: convexity.min > 0.0,
        },
        AssumptionCheck {
            id: Assumption::H2,
            variant: CheckVariant::Standard,
            min: growth.min,
            max: growth.max,
            pass: growth.min > slab.h2_slope,
        },
        AssumptionCheck {
            id: Assumption::H3,
            variant: CheckVariant::Strict,
            min: du.min,
            max: du.max,
            pass: du.min > 0.0 && upper_ok,
        },
        AssumptionCheck {
            id: Assumption::H3,
            variant: CheckVariant::Relaxed,
            min: du.min,
            max: du.max,
            pass: du.min >= 0.0 && upper_ok,
        },
    ];
    ModelReport {
        model: model.name().to_string(),
        checks,
        slab,
        lambda_lower: model.lambda_lower(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{GridFn, TorusGrid};
    use std::f64::consts::PI;

    fn shipped() -> Vec<SharedModel> {
        let mech: SharedModel = shared(Mechanical::mechanical(1.0, 0.3));
        vec![
            shared(Mechanical::quad(1.0)),
            mech.clone(),
            shared(Counterexample::default()),
            shared(Frozen::new(mech, 0.4)),
        ]
    }

    #[test]
    fn evaluation_examples() {
        let quad = Mechanical::quad(1.0);
        assert_eq!(eval_h(&quad, 0.3, 2.0, 1.0), 2.5);
        let h0 = Counterexample::default();
        assert_eq!(eval_h(&h0, 0.7, -1.0, 0.0), -0.5);
        assert_eq!(eval_h(&h0, 0.1, 0.0, 2.0), 2.0);
    }

    #[test]
    fn legendre_examples() {
        let quad = Mechanical::quad(1.0);
        assert_eq!(legendre_l(&quad, 0.2, 2.0, 1.0).unwrap(), -1.5);
        assert!((legendre_numeric(&quad, 0.2, 2.0, 1.0).unwrap() + 1.5).abs() < 1e-12);
        let mech = Mechanical::mechanical(1.0, 1.0);
        assert_eq!(legendre_l(&mech, 0.0, 0.0, 0.0).unwrap(), -1.0);
        assert!(matches!(
            legendre_l(&quad, 0.0, 0.0, 50.0),
            Err(LabError::VelocityOutOfRange { .. })
        ));
        assert!(matches!(
            legendre_numeric(&quad, 0.0, 0.0, -50.0),
            Err(LabError::VelocityOutOfRange { .. })
        ));
    }

    #[test]
    fn numeric_legendre_matches_closed_forms_on_slab() {
        for model in shipped() {
            for i in 0..20 {
                let x = i as f64 / 20.0;
                for j in 0..20 {
                    let u = -1.5 + 3.0 * j as f64 / 19.0;
                    for k in 0..20 {
                        let v = -4.0 + 8.0 * k as f64 / 19.0;
                        let closed = model.lagrangian_closed(x, u, v).unwrap();
                        let numeric = legendre_numeric(model.as_ref(), x, u, v).unwrap();
                        assert!(
                            (closed - numeric).abs() <= 1e-8,
                            "{} at ({x},{u},{v}): {closed} vs {numeric}",
                            model.name()
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn legendre_involution() {
        for model in shipped() {
            let p_half = model.p_box() / 2.0;
            for i in 0..10 {
                let x = i as f64 / 10.0;
                for &u in &[-1.0, -0.3, 0.0, 0.8] {
                    for k in 0..21 {
                        let p = -p_half + 2.0 * p_half * k as f64 / 20.0;
                        let v = model.dh_dp(x, u, p);
                        let expect = p * v - model.h(x, u, p);
                        let numeric = legendre_numeric(model.as_ref(), x, u, v).unwrap();
                        let closed = model.lagrangian_closed(x, u, v).unwrap();
                        assert!((numeric - expect).abs() <= 1e-8);
                        assert!((closed - expect).abs() <= 1e-8);
                    }
                }
            }
        }
    }

    #[test]
    fn analytic_partials_match_finite_differences() {
        let eps = 1e-6;
        for model in shipped() {
            for i in 0..8 {
                let x = 0.05 + i as f64 / 8.0;
                for &u in &[-1.7, -0.9, -0.2, 0.0, 0.6] {
                    for &p in &[-3.0, -0.5, 0.0, 2.0] {
                        let m = model.as_ref();
                        let fx = (m.h(x + eps, u, p) - m.h(x - eps, u, p)) / (2.0 * eps);
                        let fu = (m.h(x, u + eps, p) - m.h(x, u - eps, p)) / (2.0 * eps);
                        let fp = (m.h(x, u, p + eps) - m.h(x, u, p - eps)) / (2.0 * eps);
                        assert!((fx - m.dh_dx(x, u, p)).abs() < 1e-5, "{} dx", m.name());
                        assert!((fu - m.dh_du(x, u, p)).abs() < 1e-5, "{} du", m.name());
                        assert!((fp - m.dh_dp(x, u, p)).abs() < 1e-5, "{} dp", m.name());
                    }
                }
            }
        }
    }

    #[test]
    fn counterexample_lambda_bound_holds() {
        let h0 = Counterexample::default();
        let sup = (0..=400_000)
            .map(|k| -2.0 + 4.0 * k as f64 / 400_000.0)
            .map(|u| h0.dh_du(0.0, u, 0.0))
            .fold(0.0, f64::max);
        assert!(sup > 3.5 && sup <= Counterexample::LAMBDA_UPPER, "{sup}");
    }

    #[test]
    fn validation_quad_passes() {
        let report = validate_assumptions(&Mechanical::quad(1.0), ValidationSlab::new(3.0, 5.0));
        assert!(report.passes());
        let h3 = report.check(Assumption::H3, CheckVariant::Strict).unwrap();
        assert_eq!((h3.min, h3.max), (1.0, 1.0));
        assert!(report
            .checks
            .iter()
            .all(|c| matches!(c.id, Assumption::H1 | Assumption::H2 | Assumption::H3)));
    }

    #[test]
    fn validation_counterexample_is_degenerate() {
        // odd u count puts a sample exactly on u = 0
        let report = validate_assumptions(&Counterexample::default(), ValidationSlab::new(1.0, 4.0));
        assert!(!report.check(Assumption::H3, CheckVariant::Strict).unwrap().pass);
        assert!(report.check(Assumption::H3, CheckVariant::Relaxed).unwrap().pass);
        assert!(report.passes());
    }

    #[test]
    fn validation_rejects_concave() {
        let report = validate_assumptions(&Concave { lambda: 1.0 }, ValidationSlab::new(1.0, 3.0));
        assert!(!report.check(Assumption::H1, CheckVariant::Standard).unwrap().pass);
        assert!(!report.passes());
    }

    #[test]
    fn duality_identity_for_closed_forms() {
        for model in shipped() {
            for &(x, u, p) in &[(0.1, 0.2, 1.5), (0.6, -1.2, -2.5), (0.95, 0.0, 0.3)] {
                let v = model.dh_dp(x, u, p);
                let l = model.lagrangian_closed(x, u, v).unwrap();
                assert!((l + model.h(x, u, p) - p * v).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn surrogate_examples() {
        let g = TorusGrid::new(64).unwrap();
        // lambda*u + h with its exact stationary solution: surrogate is the model itself
        let mech: SharedModel = shared(Mechanical::mechanical(1.0, 0.3));
        let anchor = GridFn::from_fn(g, |x| 0.1 * (2.0 * PI * x).sin());
        let s = build_surrogate(mech.clone(), anchor.clone(), 1.0);
        for i in 0..40 {
            let x = i as f64 / 40.0 + 0.003;
            for &u in &[-1.0, 0.2, 3.0] {
                for &p in &[-2.0, 0.0, 1.1] {
                    assert!((s.h(x, u, p) - mech.h(x, u, p)).abs() < 1e-12);
                }
            }
        }
        let quad: SharedModel = shared(Mechanical::quad(1.0));
        let s0 = build_surrogate(quad, GridFn::constant(g, 0.0), 1.0);
        assert_eq!(s0.h(0.3, 2.0, 1.0), 2.5);
        assert_eq!(s0.dh_du(0.3, 2.0, 1.0), 1.0);
        // anchor graph: H-bar(x, u_-(x), p) = H(x, u_-(x), p)
        let h0: SharedModel = shared(Counterexample::default());
        let s1 = build_surrogate(h0.clone(), anchor.clone(), 0.7);
        for i in 0..64 {
            let x = g.node(i);
            let a = anchor.values()[i];
            for &p in &[-1.0, 0.5] {
                assert!((s1.h(x, a, p) - h0.h(x, a, p)).abs() < 1e-14);
            }
        }
    }
}
