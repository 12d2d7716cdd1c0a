//! Built-in contact Hamiltonians.

use std::f64::consts::PI;
use std::sync::Arc;

use super::rho::{rho_deriv, rho_smooth};
use super::{ContactModel, SharedModel};
use crate::fields::GridFn;

const TWO_PI: f64 = 2.0 * PI;

/// `H = lambda*u + p^2/2 + A*cos(2 pi x) + offset`.
///
/// `A = 0, offset = 0` is the integrable quadratic model; `A != 0` gives the
/// mechanical (pendulum-potential) model. Both are of discounted form.
#[derive(Debug, Clone)]
pub struct Mechanical {
    name: String,
    pub lambda: f64,
    pub amplitude: f64,
    pub offset: f64,
    pub p_box: f64,
}

impl Mechanical {
    pub fn quad(lambda: f64) -> Self {
        Self {
            name: "quad".into(),
            lambda,
            amplitude: 0.0,
            offset: 0.0,
            p_box: 10.0,
        }
    }

    #[allow(clippy::self_named_constructors)]
    pub fn mechanical(lambda: f64, amplitude: f64) -> Self {
        Self {
            name: "mechanical".into(),
            lambda,
            amplitude,
            offset: 0.0,
            p_box: 10.0,
        }
    }

    pub fn with_offset(mut self, offset: f64) -> Self {
        self.offset = offset;
        self
    }

    pub fn with_p_box(mut self, p_box: f64) -> Self {
        self.p_box = p_box;
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    fn potential(&self, x: f64) -> f64 {
        self.amplitude * (TWO_PI * x).cos() + self.offset
    }
}

impl ContactModel for Mechanical {
    fn name(&self) -> &str {
        &self.name
    }
    fn h(&self, x: f64, u: f64, p: f64) -> f64 {
        self.lambda * u + 0.5 * p * p + self.potential(x)
    }
    fn dh_dx(&self, x: f64, _u: f64, _p: f64) -> f64 {
        -TWO_PI * self.amplitude * (TWO_PI * x).sin()
    }
    fn dh_du(&self, _x: f64, _u: f64, _p: f64) -> f64 {
        self.lambda
    }
    fn dh_dp(&self, _x: f64, _u: f64, p: f64) -> f64 {
        p
    }
    fn lagrangian_closed(&self, x: f64, u: f64, v: f64) -> Option<f64> {
        Some(0.5 * v * v - self.lambda * u - self.potential(x))
    }
    fn lambda_upper(&self) -> f64 {
        self.lambda
    }
    fn lambda_lower(&self) -> f64 {
        self.lambda
    }
    fn p_box(&self) -> f64 {
        self.p_box
    }
    fn discount_rate(&self) -> Option<f64> {
        Some(self.lambda)
    }
    fn depends_on_x(&self) -> bool {
        self.amplitude != 0.0
    }
}

/// Degenerate counterexample `H0 = (p^2 + rho(u^3)) / 2` with `dH/du = 0` on `u = 0`.
#[derive(Debug, Clone)]
pub struct Counterexample {
    pub p_box: f64,
}

impl Counterexample {
    /// Sampled supremum of `3/2 u^2 rho'(u^3)` is about 3.534.
    pub const LAMBDA_UPPER: f64 = 3.6;
}

impl Default for Counterexample {
    fn default() -> Self {
        Self { p_box: 10.0 }
    }
}

impl ContactModel for Counterexample {
    fn name(&self) -> &str {
        "counterexample"
    }
    fn h(&self, _x: f64, u: f64, p: f64) -> f64 {
        0.5 * (p * p + rho_smooth(u * u * u))
    }
    fn dh_dx(&self, _x: f64, _u: f64, _p: f64) -> f64 {
        0.0
    }
    fn dh_du(&self, _x: f64, u: f64, _p: f64) -> f64 {
        1.5 * u * u * rho_deriv(u * u * u)
    }
    fn dh_dp(&self, _x: f64, _u: f64, p: f64) -> f64 {
        p
    }
    fn lagrangian_closed(&self, _x: f64, u: f64, v: f64) -> Option<f64> {
        Some(0.5 * v * v - 0.5 * rho_smooth(u * u * u))
    }
    fn lambda_upper(&self) -> f64 {
        Self::LAMBDA_UPPER
    }
    fn p_box(&self) -> f64 {
        self.p_box
    }
    fn depends_on_x(&self) -> bool {
        false
    }
}

/// Classical Hamiltonian `h^a(x, p) = H(x, a, p)` obtained by freezing `u = a`.
#[derive(Debug, Clone)]
pub struct Frozen {
    name: String,
    inner: SharedModel,
    pub a: f64,
}

impl Frozen {
    pub fn new(inner: SharedModel, a: f64) -> Self {
        Self {
            name: format!("{}@u={a}", inner.name()),
            inner,
            a,
        }
    }
}

impl ContactModel for Frozen {
    fn name(&self) -> &str {
        &self.name
    }
    fn h(&self, x: f64, _u: f64, p: f64) -> f64 {
        self.inner.h(x, self.a, p)
    }
    fn dh_dx(&self, x: f64, _u: f64, p: f64) -> f64 {
        self.inner.dh_dx(x, self.a, p)
    }
    fn dh_du(&self, _x: f64, _u: f64, _p: f64) -> f64 {
        0.0
    }
    fn dh_dp(&self, x: f64, _u: f64, p: f64) -> f64 {
        self.inner.dh_dp(x, self.a, p)
    }
    fn lagrangian_closed(&self, x: f64, _u: f64, v: f64) -> Option<f64> {
        self.inner.lagrangian_closed(x, self.a, v)
    }
    fn lambda_upper(&self) -> f64 {
        self.inner.lambda_upper()
    }
    fn p_box(&self) -> f64 {
        self.inner.p_box()
    }
    fn depends_on_x(&self) -> bool {
        self.inner.depends_on_x()
    }
}

/// `H + c`; shifting by a constant shifts the critical value by `c`.
#[derive(Debug, Clone)]
pub struct Shifted {
    name: String,
    inner: SharedModel,
    pub c: f64,
}

impl Shifted {
    pub fn new(inner: SharedModel, c: f64) -> Self {
        Self {
            name: format!("{}+{c}", inner.name()),
            inner,
            c,
        }
    }
}

impl ContactModel for Shifted {
    fn name(&self) -> &str {
        &self.name
    }
    fn h(&self, x: f64, u: f64, p: f64) -> f64 {
        self.inner.h(x, u, p) + self.c
    }
    fn dh_dx(&self, x: f64, u: f64, p: f64) -> f64 {
        self.inner.dh_dx(x, u, p)
    }
    fn dh_du(&self, x: f64, u: f64, p: f64) -> f64 {
        self.inner.dh_du(x, u, p)
    }
    fn dh_dp(&self, x: f64, u: f64, p: f64) -> f64 {
        self.inner.dh_dp(x, u, p)
    }
    fn lagrangian_closed(&self, x: f64, u: f64, v: f64) -> Option<f64> {
        self.inner.lagrangian_closed(x, u, v).map(|l| l - self.c)
    }
    fn lambda_upper(&self) -> f64 {
        self.inner.lambda_upper()
    }
    fn lambda_lower(&self) -> f64 {
        self.inner.lambda_lower()
    }
    fn p_box(&self) -> f64 {
        self.inner.p_box()
    }
    fn discount_rate(&self) -> Option<f64> {
        self.inner.discount_rate()
    }
    fn depends_on_x(&self) -> bool {
        self.inner.depends_on_x()
    }
}

/// `lambda*u + h(x, p)` for a u-independent `h` (evaluated at `u = 0`).
#[derive(Debug, Clone)]
pub struct Discounted {
    name: String,
    h: SharedModel,
    pub lambda: f64,
}

impl Discounted {
    pub fn new(h: SharedModel, lambda: f64) -> Self {
        Self {
            name: format!("{lambda}*u+{}", h.name()),
            h,
            lambda,
        }
    }
}

impl ContactModel for Discounted {
    fn name(&self) -> &str {
        &self.name
    }
    fn h(&self, x: f64, u: f64, p: f64) -> f64 {
        self.lambda * u + self.h.h(x, 0.0, p)
    }
    fn dh_dx(&self, x: f64, _u: f64, p: f64) -> f64 {
        self.h.dh_dx(x, 0.0, p)
    }
    fn dh_du(&self, _x: f64, _u: f64, _p: f64) -> f64 {
        self.lambda
    }
    fn dh_dp(&self, x: f64, _u: f64, p: f64) -> f64 {
        self.h.dh_dp(x, 0.0, p)
    }
    fn lagrangian_closed(&self, x: f64, u: f64, v: f64) -> Option<f64> {
        self.h
            .lagrangian_closed(x, 0.0, v)
            .map(|l| l - self.lambda * u)
    }
    fn lambda_upper(&self) -> f64 {
        self.lambda
    }
    fn lambda_lower(&self) -> f64 {
        self.lambda
    }
    fn p_box(&self) -> f64 {
        self.h.p_box()
    }
    fn discount_rate(&self) -> Option<f64> {
        Some(self.lambda)
    }
    fn depends_on_x(&self) -> bool {
        self.h.depends_on_x()
    }
}

/// Discounted surrogate `lambda*(u - u_-(x)) + H(x, u_-(x), p)` anchored on a
/// grid function `u_-` (linearly interpolated between nodes).
#[derive(Debug, Clone)]
pub struct Surrogate {
    name: String,
    base: SharedModel,
    anchor: GridFn,
    pub lambda: f64,
}

impl Surrogate {
    pub fn anchor(&self) -> &GridFn {
        &self.anchor
    }
}

impl ContactModel for Surrogate {
    fn name(&self) -> &str {
        &self.name
    }
    fn h(&self, x: f64, u: f64, p: f64) -> f64 {
        let a = self.anchor.interpolate(x);
        self.lambda * (u - a) + self.base.h(x, a, p)
    }
    fn dh_dx(&self, x: f64, _u: f64, p: f64) -> f64 {
        let a = self.anchor.interpolate(x);
        let da = self.anchor.interpolant_slope(x);
        -self.lambda * da + self.base.dh_dx(x, a, p) + self.base.dh_du(x, a, p) * da
    }
    fn dh_du(&self, _x: f64, _u: f64, _p: f64) -> f64 {
        self.lambda
    }
    fn dh_dp(&self, x: f64, _u: f64, p: f64) -> f64 {
        self.base.dh_dp(x, self.anchor.interpolate(x), p)
    }
    fn lagrangian_closed(&self, x: f64, u: f64, v: f64) -> Option<f64> {
        let a = self.anchor.interpolate(x);
        self.base
            .lagrangian_closed(x, a, v)
            .map(|l| self.lambda * (a - u) + l)
    }
    fn lambda_upper(&self) -> f64 {
        self.lambda
    }
    fn lambda_lower(&self) -> f64 {
        self.lambda
    }
    fn p_box(&self) -> f64 {
        self.base.p_box()
    }
    fn discount_rate(&self) -> Option<f64> {
        Some(self.lambda)
    }
}

/// Discounted surrogate of `model` anchored on `u_minus`; `dH/du` is identically `lambda`.
pub fn build_surrogate(model: SharedModel, u_minus: GridFn, lambda: f64) -> Surrogate {
    Surrogate {
        name: format!("surrogate({})", model.name()),
        base: model,
        anchor: u_minus,
        lambda,
    }
}

/// `H = lambda*u - p^2`: concave in `p`, used as a negative control.
#[derive(Debug, Clone)]
pub struct Concave {
    pub lambda: f64,
}

impl ContactModel for Concave {
    fn name(&self) -> &str {
        "concave"
    }
    fn h(&self, _x: f64, u: f64, p: f64) -> f64 {
        self.lambda * u - p * p
    }
    fn dh_dx(&self, _x: f64, _u: f64, _p: f64) -> f64 {
        0.0
    }
    fn dh_du(&self, _x: f64, _u: f64, _p: f64) -> f64 {
        self.lambda
    }
    fn dh_dp(&self, _x: f64, _u: f64, p: f64) -> f64 {
        -2.0 * p
    }
    fn lambda_upper(&self) -> f64 {
        self.lambda
    }
    fn lambda_lower(&self) -> f64 {
        self.lambda
    }
    fn p_box(&self) -> f64 {
        5.0
    }
    fn depends_on_x(&self) -> bool {
        false
    }
}

/// Shorthand for sharing a model across solvers.
pub fn shared<M: ContactModel + 'static>(m: M) -> SharedModel {
    Arc::new(m)
}
