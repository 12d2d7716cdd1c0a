//! Convergence measurements: error and Hausdorff series of a run, rate fits,
//! Hamiltonian residuals on jet clouds, the `l_u` lower bounds and the
//! `dH/du` lower bound over compact slabs.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{LabError, Result};
use crate::evolve::EvolutionRun;
use crate::fields::{torus_dist, GridFn};
use crate::io::fmt_real;
use crate::jets::{directional_derivative, extract_jets, hausdorff, reachable_differentials};
use crate::models::{legendre_l, ContactModel};

/// `(t, sup |u(t) - u_minus|)` per snapshot.
pub fn sup_error_series(run: &EvolutionRun, u_minus: &GridFn) -> Result<Vec<(f64, f64)>> {
    run.snapshots
        .iter()
        .map(|(t, f)| Ok((*t, f.sup_dist(u_minus)?)))
        .collect()
}

/// `(t, d_H(J(u(t)), J(u_minus)))` per snapshot.
pub fn hausdorff_series(run: &EvolutionRun, u_minus: &GridFn, corner_tol: f64) -> Result<Vec<(f64, f64)>> {
    let target = extract_jets(u_minus, corner_tol);
    run.snapshots
        .iter()
        .map(|(t, f)| {
            f.check_same_grid(u_minus)?;
            Ok((*t, hausdorff(&extract_jets(f, corner_tol), &target)?))
        })
        .collect()
}

/// `max |H(x, u, p)|` over the jet cloud of `f`.
pub fn hamiltonian_residual(model: &dyn ContactModel, f: &GridFn, corner_tol: f64) -> f64 {
    extract_jets(f, corner_tol)
        .points
        .iter()
        .map(|q| model.h(q.x, q.u, q.p).abs())
        .fold(0.0, f64::max)
}

pub fn hamiltonian_residual_series(
    model: &dyn ContactModel,
    run: &EvolutionRun,
    corner_tol: f64,
) -> Vec<(f64, f64)> {
    run.snapshots
        .iter()
        .map(|(t, f)| (*t, hamiltonian_residual(model, f, corner_tol)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateKind {
    Exponential,
    Power,
}

impl fmt::Display for RateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RateKind::Exponential => "exponential",
            RateKind::Power => "power",
        })
    }
}

impl FromStr for RateKind {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exponential" | "exp" => Ok(RateKind::Exponential),
            "power" => Ok(RateKind::Power),
            other => Err(LabError::InvalidConfig(format!("unknown rate kind `{other}`"))),
        }
    }
}

/// `e ~ prefactor * exp(exponent t)` or `e ~ prefactor * (t + offset)^exponent`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub kind: RateKind,
    pub exponent: f64,
    pub prefactor: f64,
    pub r2: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub n_points: usize,
    /// Time shift of a power fit (0 for exponential fits).
    pub offset: f64,
}

impl RateFit {
    pub const CSV_HEADER: &'static str = "kind,exponent,prefactor,r2,t_min,t_max,n";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.kind,
            fmt_real(self.exponent),
            fmt_real(self.prefactor),
            fmt_real(self.r2),
            fmt_real(self.t_min),
            fmt_real(self.t_max),
            self.n_points
        )
    }

    pub fn write_csv<W: Write>(fits: &[RateFit], mut out: W) -> Result<()> {
        writeln!(out, "{}", Self::CSV_HEADER)?;
        for f in fits {
            writeln!(out, "{}", f.csv_row())?;
        }
        Ok(())
    }
}

struct Line {
    slope: f64,
    intercept: f64,
    r2: f64,
    sse: f64,
}

fn least_squares(xs: &[f64], ys: &[f64]) -> Line {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let sse: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r2 = if syy > 0.0 { (1.0 - sse / syy).clamp(0.0, 1.0) } else { 1.0 };
    Line {
        slope,
        intercept,
        r2,
        sse,
    }
}

fn fit_exponential(ts: &[f64], logs: &[f64]) -> (Line, f64) {
    (least_squares(ts, logs), 0.0)
}

/// Log-log fit against `t + s`, with the shift `s in [0, max(t_min, 1)]`
/// chosen to minimise the residual. With `s = 0` this is the plain log-log
/// regression; the shift absorbs the `(t0 + t)^k` form of algebraic decay,
/// whose plain log-log slope is biased on finite windows.
fn fit_power(ts: &[f64], logs: &[f64]) -> (Line, f64) {
    let t_min = ts.iter().copied().fold(f64::INFINITY, f64::min);
    let s_lo = if t_min > 0.0 { 0.0 } else { 1e-9 - t_min };
    let s_hi = s_lo + t_min.max(1.0);
    let sse_at = |s: f64| {
        let xs: Vec<f64> = ts.iter().map(|t| (t + s).ln()).collect();
        least_squares(&xs, logs).sse
    };
    const GRID: usize = 40;
    let step = (s_hi - s_lo) / GRID as f64;
    let mut best = (s_lo, sse_at(s_lo));
    for k in 1..=GRID {
        let s = s_lo + step * k as f64;
        let e = sse_at(s);
        if e < best.1 {
            best = (s, e);
        }
    }
    // golden refinement around the best grid point
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let (mut a, mut b) = ((best.0 - step).max(s_lo), (best.0 + step).min(s_hi));
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (sse_at(c), sse_at(d));
    for _ in 0..60 {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = sse_at(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = sse_at(d);
        }
    }
    for (s, e) in [(c, fc), (d, fd)] {
        if e < best.1 {
            best = (s, e);
        }
    }
    let xs: Vec<f64> = ts.iter().map(|t| (t + best.0).ln()).collect();
    (least_squares(&xs, logs), best.0)
}

/// Points of `series` inside `[t_min, t_max]` whose value exceeds `floor`.
pub fn clip_window(series: &[(f64, f64)], t_min: f64, t_max: f64, floor: f64) -> Vec<(f64, f64)> {
    series
        .iter()
        .copied()
        .filter(|&(t, e)| t >= t_min && t <= t_max && e > floor)
        .collect()
}

/// Least-squares fit of a decay law on `window`. Without a hint both laws are
/// fitted and the one with the higher `r2` wins (exponential on ties).
pub fn fit_rate(series: &[(f64, f64)], window: (f64, f64), hint: Option<RateKind>) -> Result<RateFit> {
    let (t_min, t_max) = window;
    let pts: Vec<(f64, f64)> = series
        .iter()
        .copied()
        .filter(|&(t, _)| t >= t_min && t <= t_max)
        .collect();
    if pts.len() < 5 {
        return Err(LabError::InsufficientData {
            needed: 5,
            found: pts.len(),
        });
    }
    if let Some(&(t, value)) = pts.iter().find(|&&(_, e)| !(e > 0.0 && e.is_finite())) {
        return Err(LabError::NonPositiveValues { t, value });
    }
    let ts: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let logs: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let make = |kind: RateKind, (line, offset): (Line, f64)| RateFit {
        kind,
        exponent: line.slope,
        prefactor: line.intercept.exp(),
        r2: line.r2,
        t_min: ts[0],
        t_max: ts[ts.len() - 1],
        n_points: ts.len(),
        offset,
    };
    Ok(match hint {
        Some(RateKind::Exponential) => make(RateKind::Exponential, fit_exponential(&ts, &logs)),
        Some(RateKind::Power) => make(RateKind::Power, fit_power(&ts, &logs)),
        None => {
            let e = make(RateKind::Exponential, fit_exponential(&ts, &logs));
            let p = make(RateKind::Power, fit_power(&ts, &logs));
            if p.r2 > e.r2 {
                p
            } else {
                e
            }
        }
    })
}

/// `l_u(x_i, v) = L(x_i, u_i, v) - du(x_i; v)`.
pub fn l_u_eval(model: &dyn ContactModel, u: &GridFn, i: usize, v: f64, corner_tol: f64) -> Result<f64> {
    let x = u.grid().node(i);
    Ok(legendre_l(model, x, u.values()[i], v)? - directional_derivative(u, i, v, corner_tol))
}

/// `min_{p in D*u(x_i)} H(x_i, u_i, p)` and its max counterpart.
pub fn h_range_on_differentials(model: &dyn ContactModel, u: &GridFn, i: usize, corner_tol: f64) -> (f64, f64) {
    let x = u.grid().node(i);
    let ui = u.values()[i];
    reachable_differentials(u, i, corner_tol)
        .as_slice()
        .iter()
        .map(|&p| model.h(x, ui, p))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), h| (lo.min(h), hi.max(h)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct KeyLemmaSamples {
    pub samples: usize,
    /// Velocities are drawn uniformly from `[-v_max, v_max]`.
    pub v_max: f64,
    /// Largest admissible `Delta`; `None` means `v_max / 2`. Samples farther
    /// than this from the velocity graph are always judged by the far branch.
    pub delta_max: Option<f64>,
    pub corner_tol: Option<f64>,
    pub seed: u64,
}

impl Default for KeyLemmaSamples {
    fn default() -> Self {
        Self {
            samples: 10_000,
            v_max: 3.0,
            delta_max: None,
            corner_tol: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KeyLemmaReport {
    pub alpha: f64,
    pub delta: f64,
    pub beta: f64,
    /// Near-branch plus far-branch violations at the fitted constants.
    pub violations: usize,
    pub near_violations: usize,
    pub far_violations: usize,
    pub samples: usize,
    /// Smallest `l_u + min H` over far samples (should be >= beta).
    pub min_far_margin: f64,
}

/// Fits `alpha` and `Delta` for the two-branch lower bound
/// `l_u + min_{D*} H >= alpha d^2` (near) and `>= beta` (far), where `d` is the
/// distance from `(x, v)` to the velocity graph `{(x, H_p(x, u(x), p)) : p in D*u(x)}`.
pub fn key_lemma_check(
    model: &dyn ContactModel,
    u: &GridFn,
    beta: f64,
    spec: &KeyLemmaSamples,
) -> Result<KeyLemmaReport> {
    if !(beta > 0.0) {
        return Err(LabError::InvalidConfig("beta must be positive".into()));
    }
    if spec.samples == 0 || !(spec.v_max > 0.0) {
        return Err(LabError::InvalidConfig(
            "key-lemma sampling needs samples > 0 and v_max > 0".into(),
        ));
    }
    let g = u.grid();
    let tol = spec.corner_tol.unwrap_or(10.0 * g.h());
    let delta_max = spec.delta_max.unwrap_or(0.5 * spec.v_max);
    let graph: Vec<(f64, f64)> = (0..g.n())
        .flat_map(|i| {
            let (x, ui) = (g.node(i), u.values()[i]);
            reachable_differentials(u, i, tol)
                .as_slice()
                .iter()
                .map(|&p| (x, model.dh_dp(x, ui, p)))
                .collect::<Vec<_>>()
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let draws: Vec<(usize, f64)> = (0..spec.samples)
        .map(|_| (rng.gen_range(0..g.n()), rng.gen_range(-spec.v_max..=spec.v_max)))
        .collect();
    // (d, l_u + min H)
    let evals = draws
        .par_iter()
        .map(|&(i, v)| {
            let x = g.node(i);
            let d = graph
                .iter()
                .map(|&(xg, vg)| torus_dist(x, xg) + (v - vg).abs())
                .fold(f64::INFINITY, f64::min);
            let m = h_range_on_differentials(model, u, i, tol).0;
            Ok((d, l_u_eval(model, u, i, v, tol)? + m))
        })
        .collect::<Result<Vec<(f64, f64)>>>()?;
    let delta = evals
        .iter()
        .filter(|&&(_, gval)| gval < beta)
        .map(|&(d, _)| d)
        .fold(0.0, f64::max)
        .min(delta_max);
    const SLACK: f64 = 1e-9;
    let alpha = evals
        .iter()
        .filter(|&&(d, _)| d <= delta && d > 1e-14)
        .map(|&(d, gval)| gval / (d * d))
        .fold(f64::INFINITY, f64::min)
        .max(0.0);
    let alpha = if alpha.is_finite() { alpha } else { 0.0 };
    let near_violations = evals
        .iter()
        .filter(|&&(d, gval)| d <= delta && gval < alpha * d * d - SLACK)
        .count();
    let far: Vec<f64> = evals
        .iter()
        .filter(|&&(d, _)| d > delta)
        .map(|&(_, gval)| gval)
        .collect();
    let far_violations = far.iter().filter(|&&gval| gval < beta).count();
    Ok(KeyLemmaReport {
        alpha,
        delta,
        beta,
        violations: near_violations + far_violations,
        near_violations,
        far_violations,
        samples: evals.len(),
        min_far_margin: far.iter().copied().fold(f64::INFINITY, f64::min),
    })
}

/// Sampled slab `{u in I, |H(x, u, p)| <= B}`. `u` is sampled on the lattice
/// `k * du` inside `I` plus both endpoints, so nested intervals with lattice
/// endpoints give nested sample sets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompactSlab {
    pub u_lo: f64,
    pub u_hi: f64,
    pub b: f64,
    pub du: f64,
    pub nx: usize,
    pub np: usize,
}

impl CompactSlab {
    pub fn new(u_lo: f64, u_hi: f64, b: f64) -> Self {
        Self {
            u_lo,
            u_hi,
            b,
            du: 1.0 / 64.0,
            nx: 32,
            np: 201,
        }
    }

    /// `I = [min u - 1, max u + 1]`.
    pub fn around(u: &GridFn, b: f64) -> Self {
        Self::new(u.min() - 1.0, u.max() + 1.0, b)
    }

    fn u_samples(&self) -> Vec<f64> {
        let mut us = vec![self.u_lo];
        let k0 = (self.u_lo / self.du).floor() as i64 + 1;
        let mut k = k0;
        while (k as f64) * self.du < self.u_hi {
            us.push(k as f64 * self.du);
            k += 1;
        }
        us.push(self.u_hi);
        us
    }
}

/// `min dH/du` over the sampled slab.
pub fn lambda_estimate(model: &dyn ContactModel, slab: &CompactSlab) -> Result<f64> {
    if !(slab.u_lo < slab.u_hi) || !(slab.b > 0.0) || !(slab.du > 0.0) || slab.nx == 0 || slab.np < 2 {
        return Err(LabError::InvalidConfig(
            "slab needs u_lo < u_hi, B > 0, du > 0 and sample counts".into(),
        ));
    }
    let pb = model.p_box();
    let mut best = f64::INFINITY;
    for u in slab.u_samples() {
        for ix in 0..slab.nx {
            let x = ix as f64 / slab.nx as f64;
            for ip in 0..slab.np {
                let p = -pb + 2.0 * pb * ip as f64 / (slab.np - 1) as f64;
                if model.h(x, u, p).abs() <= slab.b {
                    best = best.min(model.dh_du(x, u, p));
                }
            }
        }
    }
    if best.is_finite() {
        Ok(best)
    } else {
        Err(LabError::EmptySlab { b: slab.b })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolve::{evolve, EvolveConfig, Scheme};
    use crate::fields::TorusGrid;
    use crate::models::{Counterexample, Mechanical};
    use proptest::{prop_assert, proptest};

    fn series(f: impl Fn(f64) -> f64, ts: impl Iterator<Item = f64>) -> Vec<(f64, f64)> {
        ts.map(|t| (t, f(t))).collect()
    }

    #[test]
    fn exponential_fit_exact() {
        let s = series(|t| (-2.0 * t).exp(), (1..=20).map(f64::from));
        let fit = fit_rate(&s, (1.0, 20.0), None).unwrap();
        assert_eq!(fit.kind, RateKind::Exponential);
        assert!((fit.exponent + 2.0).abs() < 1e-10);
        assert!((fit.r2 - 1.0).abs() < 1e-12);
        assert_eq!(fit.n_points, 20);
    }

    #[test]
    fn power_fit_of_shifted_law() {
        let s = series(|t| (1.0 + t).powf(-0.5), (0..=100).map(f64::from));
        let fit = fit_rate(&s, (5.0, 100.0), Some(RateKind::Power)).unwrap();
        assert!((fit.exponent + 0.5).abs() < 0.01, "{fit:?}");
        let auto = fit_rate(&s, (5.0, 100.0), None).unwrap();
        assert_eq!(auto.kind, RateKind::Power);
    }

    #[test]
    fn noisy_exponential_fit() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let s: Vec<(f64, f64)> = (0..=40)
            .map(|k| {
                let t = 2.0 + 0.25 * k as f64;
                (t, (-t).exp() + 1e-6 * rng.gen_range(-1.0..1.0))
            })
            .collect();
        let fit = fit_rate(&s, (2.0, 12.0), Some(RateKind::Exponential)).unwrap();
        assert!(fit.exponent >= -1.05 && fit.exponent <= -0.95, "{fit:?}");
        assert!(fit.r2 >= 0.99);
    }

    #[test]
    fn fit_errors() {
        let s = series(|t| (-t).exp(), (0..3).map(f64::from));
        assert!(matches!(
            fit_rate(&s, (0.0, 10.0), None),
            Err(LabError::InsufficientData { found: 3, .. })
        ));
        let mut z = series(|t| (-t).exp(), (0..8).map(f64::from));
        z[4].1 = 0.0;
        assert!(matches!(
            fit_rate(&z, (0.0, 10.0), None),
            Err(LabError::NonPositiveValues { .. })
        ));
    }

    proptest! {
        #[test]
        fn planted_exponents_recovered(k in -3.0..-0.1f64, c in 0.1..10.0f64) {
            let s = series(|t| c * (k * t).exp(), (0..30).map(|j| 0.5 * j as f64));
            let fit = fit_rate(&s, (0.0, 15.0), Some(RateKind::Exponential)).unwrap();
            prop_assert!((fit.exponent - k).abs() < 1e-10);
            let p = series(|t| c * t.powf(k), (5..=100).map(f64::from));
            let pf = fit_rate(&p, (5.0, 100.0), Some(RateKind::Power)).unwrap();
            prop_assert!((pf.exponent - k).abs() < 1e-2, "{:?}", pf);
        }
    }

    #[test]
    fn quad_constant_series() {
        let quad = Mechanical::quad(1.0);
        let g = TorusGrid::new(128).unwrap();
        let phi = GridFn::constant(g, 1.0);
        let zero = GridFn::constant(g, 0.0);
        let times: Vec<f64> = (0..=10).map(f64::from).collect();
        let run = evolve(&quad, &phi, &EvolveConfig::default().with_snapshots(times)).unwrap();
        let tol = 10.0 * g.h();
        let sup = sup_error_series(&run, &zero).unwrap();
        let haus = hausdorff_series(&run, &zero, tol).unwrap();
        let res = hamiltonian_residual_series(&quad, &run, tol);
        for k in 0..sup.len() {
            let t = sup[k].0;
            assert!((sup[k].1 - (-t).exp()).abs() <= 1e-3);
            assert!((haus[k].1 - (-t).exp()).abs() <= 2e-3);
            assert!((res[k].1 - sup[k].1).abs() <= 1e-12);
        }
        let same = sup_error_series(&run, &run.snapshots[3].1).unwrap();
        assert_eq!(same[3].1, 0.0);
    }

    #[test]
    fn counterexample_deviation() {
        let h0 = Counterexample::default();
        let g = TorusGrid::new(64).unwrap();
        let phi = GridFn::constant(g, -1.0);
        let times: Vec<f64> = (0..=20).map(f64::from).collect();
        let run = evolve(&h0, &phi, &EvolveConfig::new(Scheme::LaxFriedrichs).with_snapshots(times))
            .unwrap();
        let zero = GridFn::constant(g, 0.0);
        for (t, e) in sup_error_series(&run, &zero).unwrap() {
            assert!((e - (1.0 + t).powf(-0.5)).abs() <= 5e-3);
        }
    }

    #[test]
    fn key_lemma_quad_zero() {
        let quad = Mechanical::quad(1.0);
        let u = GridFn::constant(TorusGrid::new(64).unwrap(), 0.0);
        let rep = key_lemma_check(&quad, &u, 0.5, &KeyLemmaSamples::default()).unwrap();
        assert_eq!(rep.alpha, 0.5);
        assert_eq!(rep.violations, 0);
        for i in [0usize, 17, 40] {
            for v in [-2.0, 0.3, 1.5] {
                assert_eq!(l_u_eval(&quad, &u, i, v, 10.0 / 64.0).unwrap(), 0.5 * v * v);
            }
        }
    }

    #[test]
    fn key_lemma_reports_far_violations() {
        let quad = Mechanical::quad(1.0);
        let u = GridFn::constant(TorusGrid::new(32).unwrap(), 0.0);
        let spec = KeyLemmaSamples {
            samples: 2000,
            v_max: 2.0,
            ..KeyLemmaSamples::default()
        };
        // max l_u = 2 on this window, so beta = 5 cannot hold far from the graph
        let rep = key_lemma_check(&quad, &u, 5.0, &spec).unwrap();
        assert!(rep.far_violations > 0);
        assert_eq!(rep.violations, rep.far_violations + rep.near_violations);
    }

    #[test]
    fn fenchel_young_lower_bound() {
        let mech = Mechanical::mechanical(1.0, 0.3);
        let g = TorusGrid::new(64).unwrap();
        let u = GridFn::from_fn(g, |x| 0.2 * (2.0 * std::f64::consts::PI * x).sin() - 0.3 * (x - 0.5).abs());
        let tol = 10.0 * g.h();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let i = rng.gen_range(0..g.n());
            let v = rng.gen_range(-3.0..3.0);
            let (_, hmax) = h_range_on_differentials(&mech, &u, i, tol);
            assert!(l_u_eval(&mech, &u, i, v, tol).unwrap() >= -hmax - 1e-9);
        }
    }

    #[test]
    fn lambda_estimates() {
        let quad = Mechanical::quad(1.0);
        assert_eq!(lambda_estimate(&quad, &CompactSlab::new(-2.0, 2.0, 5.0)).unwrap(), 1.0);
        let h0 = Counterexample::default();
        let est = lambda_estimate(&h0, &CompactSlab::new(-1.0, -0.5, 5.0)).unwrap();
        assert!((est - 0.375).abs() < 1e-12);
        let degenerate = lambda_estimate(&h0, &CompactSlab::new(-1.0, 0.5, 5.0)).unwrap();
        assert_eq!(degenerate, 0.0);
        let nested = [(-0.75, -0.5), (-1.0, -0.5), (-1.5, -0.25), (-2.0, 0.5)]
            .map(|(a, b)| lambda_estimate(&h0, &CompactSlab::new(a, b, 5.0)).unwrap());
        assert!(nested.windows(2).all(|w| w[1] <= w[0]));
        assert!(matches!(
            lambda_estimate(&quad, &CompactSlab::new(50.0, 60.0, 1.0)),
            Err(LabError::EmptySlab { .. })
        ));
    }
}
