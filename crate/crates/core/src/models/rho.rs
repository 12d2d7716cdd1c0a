//! Smooth monotone clamp used by the degenerate counterexample Hamiltonian.
//!
//! `rho` is the identity on `[-1, 0]`, equals `-2` on `(-inf, -2]` and `1` on
//! `[1, inf)`. On the two transition intervals it blends identity and constant
//! with the `exp(-1/t)` smooth step, which keeps every derivative continuous.

/// `b(t) = exp(-1/t)` for `t > 0`, else 0.
pub fn bump(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

/// Smooth step `b(t) / (b(t) + b(1 - t))`: 0 for `t <= 0`, 1 for `t >= 1`.
pub fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        // same ratio, written to avoid 0/0 when both bumps underflow
        1.0 / (1.0 + (1.0 / t - 1.0 / (1.0 - t)).exp())
    }
}

pub fn smooth_step_deriv(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        return 0.0;
    }
    let s = smooth_step(t);
    let w = 1.0 / (t * t) + 1.0 / ((1.0 - t) * (1.0 - t));
    let d = s * (1.0 - s) * w;
    if d.is_finite() {
        d
    } else {
        0.0
    }
}

pub const RHO_LOWER: f64 = -2.0;
pub const RHO_UPPER: f64 = 1.0;

pub fn rho_smooth(s: f64) -> f64 {
    if s <= -2.0 {
        RHO_LOWER
    } else if s < -1.0 {
        let w = smooth_step(s + 2.0);
        w * s + (1.0 - w) * RHO_LOWER
    } else if s <= 0.0 {
        s
    } else if s < 1.0 {
        let w = smooth_step(s);
        (1.0 - w) * s + w * RHO_UPPER
    } else {
        RHO_UPPER
    }
}

pub fn rho_deriv(s: f64) -> f64 {
    if s <= -2.0 || s >= 1.0 {
        0.0
    } else if s < -1.0 {
        let t = s + 2.0;
        smooth_step(t) + smooth_step_deriv(t) * (s - RHO_LOWER)
    } else if s <= 0.0 {
        1.0
    } else {
        (1.0 - smooth_step(s)) + smooth_step_deriv(s) * (RHO_UPPER - s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linspace(a: f64, b: f64, n: usize) -> impl Iterator<Item = f64> {
        (0..n).map(move |k| a + (b - a) * k as f64 / (n - 1) as f64)
    }

    #[test]
    fn identity_on_unit_interval() {
        for s in linspace(-1.0, 0.0, 100) {
            assert_eq!(rho_smooth(s), s);
        }
        assert_eq!(rho_smooth(-0.5), -0.5);
    }

    #[test]
    fn plateaus() {
        assert_eq!(rho_smooth(5.0), rho_smooth(1.0));
        assert_eq!(rho_smooth(-7.0), rho_smooth(-2.0));
        assert_eq!(rho_smooth(1.0), RHO_UPPER);
    }

    #[test]
    fn nondecreasing_with_bounded_slope() {
        let samples: Vec<f64> = linspace(-3.0, 2.0, 20001).collect();
        for w in samples.windows(2) {
            assert!(rho_smooth(w[0]) <= rho_smooth(w[1]), "{} {}", w[0], w[1]);
        }
        let max_slope = samples.iter().map(|&s| rho_deriv(s)).fold(0.0, f64::max);
        assert!(max_slope < 2.0, "{max_slope}");
        assert!(samples.iter().all(|&s| rho_deriv(s) >= 0.0));
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let eps = 1e-6;
        for s in linspace(-2.5, 1.5, 401) {
            let fd = (rho_smooth(s + eps) - rho_smooth(s - eps)) / (2.0 * eps);
            assert!((fd - rho_deriv(s)).abs() < 1e-5, "s = {s}: {fd} vs {}", rho_deriv(s));
        }
    }

    #[test]
    fn step_is_symmetric() {
        for t in linspace(0.0, 1.0, 101) {
            assert!((smooth_step(t) + smooth_step(1.0 - t) - 1.0).abs() < 1e-15);
        }
        assert!((smooth_step_deriv(0.5) - 2.0).abs() < 1e-12);
        assert!((bump(0.5) - (-2.0f64).exp()).abs() < 1e-16);
    }
}
