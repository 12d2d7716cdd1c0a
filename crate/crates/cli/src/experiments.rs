//! End-to-end experiments: convergence rates, property suites and the
//! critical value / admissible shift.

use std::fmt;
use std::fmt::Write as _;
use std::fs;
use std::io::BufWriter;
use std::path::Path;

use contact_hj::diagnostics::{
    clip_window, fit_rate, h_range_on_differentials, hamiltonian_residual,
    hamiltonian_residual_series, hausdorff_series, key_lemma_check, l_u_eval, lambda_estimate,
    sup_error_series, CompactSlab, KeyLemmaReport, KeyLemmaSamples, RateFit, RateKind,
};
use contact_hj::evolve::{
    check_semigroup_props, evolve, EvolutionRun, EvolveConfig, Scheme, PROPERTY_TOL,
};
use contact_hj::flow::{backward_minimizer, calibration_residual, energy_profile, integrate, FlowState};
use contact_hj::io::{fmt_real, write_series};
use contact_hj::jets::{default_corner_tol, extract_jets_tagged, hausdorff};
use contact_hj::models::{
    legendre_l, legendre_numeric, shared, validate_assumptions, Assumption, CheckVariant,
    ContactModel, Shifted, ValidationSlab,
};
use contact_hj::stationary::{
    admissible_shift, critical_value, solve_discounted, solve_longtime, CriticalValueResult,
    DiscountedParams, ShiftResult,
};
use contact_hj::{torus_dist, GridFn, LabError, Result, TorusGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{read_grid_file, ExperimentConfig, ReferenceConfig};
use crate::plot::{log_chart, Series};

/// Rows of `rates.csv`, in file order.
pub const RATE_SERIES: [&str; 3] = ["sup", "hausdorff", "residual"];

fn create_dir(out: &Path) -> Result<()> {
    fs::create_dir_all(out)?;
    Ok(())
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents)?;
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    Ok(BufWriter::new(fs::File::create(path)?))
}

/// A fit, or the reason none could be made (kept in the report, not raised).
pub type FitOutcome = std::result::Result<RateFit, String>;

#[derive(Debug, Clone)]
pub struct ConvergenceSummary {
    pub model: String,
    pub dt: f64,
    pub corner_tol: f64,
    pub reference: String,
    /// `sup |T_1 u - u|` or Bellman defect of the computed reference (0 if given).
    pub reference_error: f64,
    pub run: EvolutionRun,
    pub u_minus: GridFn,
    pub sup_series: Vec<(f64, f64)>,
    pub hausdorff_series: Vec<(f64, f64)>,
    pub residual_series: Vec<(f64, f64)>,
    /// Floors applied to the sup, Hausdorff and residual series.
    pub floors: [f64; 3],
    /// Fits in `RATE_SERIES` order.
    pub fits: [FitOutcome; 3],
    /// Residual fit without the floor exclusion.
    pub residual_unclipped: FitOutcome,
    pub stationary_residual: f64,
    pub lambda_estimate: std::result::Result<f64, String>,
    pub key_lemma: std::result::Result<KeyLemmaReport, String>,
    pub calibration: std::result::Result<f64, String>,
}

impl ConvergenceSummary {
    pub fn fit(&self, series: &str) -> Option<&RateFit> {
        let k = RATE_SERIES.iter().position(|s| *s == series)?;
        self.fits[k].as_ref().ok()
    }
}

/// Snapshot times are rounded to the step, so the window is widened by `slack`.
fn fit_clipped(
    series: &[(f64, f64)],
    window: [f64; 2],
    slack: f64,
    floor: f64,
    hint: Option<RateKind>,
) -> FitOutcome {
    let (lo, hi) = (window[0] - slack, window[1] + slack);
    let pts = clip_window(series, lo, hi, floor);
    fit_rate(&pts, (lo, hi), hint).map_err(|e| e.to_string())
}

fn rate_row(fit: &FitOutcome, hint: Option<RateKind>, window: [f64; 2]) -> String {
    match fit {
        Ok(f) => f.csv_row(),
        Err(_) => format!(
            "{},NaN,NaN,NaN,{},{},0",
            hint.unwrap_or(RateKind::Exponential),
            fmt_real(window[0]),
            fmt_real(window[1])
        ),
    }
}

fn describe_fit(fit: &FitOutcome) -> String {
    match fit {
        Ok(f) if f.kind == RateKind::Power => format!(
            "power, exponent {:.4} (r2 {:.5}, n {}, t in [{}, {}], shift {:.3})",
            f.exponent, f.r2, f.n_points, f.t_min, f.t_max, f.offset
        ),
        Ok(f) => format!(
            "exponential, exponent {:.4} (r2 {:.5}, n {}, t in [{}, {}])",
            f.exponent, f.r2, f.n_points, f.t_min, f.t_max
        ),
        Err(e) => format!("unavailable: {e}"),
    }
}

/// Evolves, computes the stationary reference, measures the three decay
/// series, fits rates and writes every artifact into `out`.
pub fn run_convergence(cfg: &ExperimentConfig, out: &Path) -> Result<ConvergenceSummary> {
    cfg.validate()?;
    let model = cfg.build_model();
    let grid = cfg.grid()?;
    let phi = cfg.initial_data(grid)?;
    let ecfg = cfg.evolve_config()?;
    let run = evolve(model.as_ref(), &phi, &ecfg.clone().with_snapshots(cfg.snapshot_times()))?;
    create_dir(out)?;

    let (u_minus, reference, reference_error) = match &cfg.reference {
        ReferenceConfig::Longtime { tol, t_max } => {
            let start = &run.last().expect("at least one snapshot").1;
            let res = solve_longtime(model.as_ref(), start, &ecfg, *tol, *t_max)?;
            let desc = format!(
                "long-time limit of the same scheme (tol {tol:e}, {} more time units)",
                res.iterations + 1
            );
            (res.u_minus, desc, res.residual)
        }
        ReferenceConfig::Discounted { tol, dt } => {
            let params = DiscountedParams {
                dt: *dt,
                tol: *tol,
                ..DiscountedParams::default()
            };
            let res = solve_discounted(model.as_ref(), grid, &params)?;
            let desc = format!("discounted value iteration ({} sweeps)", res.iterations);
            (res.u_minus, desc, res.residual)
        }
        ReferenceConfig::Constant { value } => {
            (GridFn::constant(grid, *value), format!("constant {value}"), 0.0)
        }
        ReferenceConfig::File { path } => {
            (read_grid_file(path, grid)?, format!("file {}", path.display()), 0.0)
        }
    };
    let corner_tol = cfg.run.corner_tol.unwrap_or_else(|| default_corner_tol(&u_minus));

    let sup = sup_error_series(&run, &u_minus)?;
    let hd = hausdorff_series(&run, &u_minus, corner_tol)?;
    let residual = hamiltonian_residual_series(model.as_ref(), &run, corner_tol);
    let stationary_residual = hamiltonian_residual(model.as_ref(), &u_minus, corner_tol);

    // a reference accurate to e in sup norm is accurate to about e/h in slope
    let ff = cfg.rates.floor_factor;
    let floors = match cfg.rates.floor {
        Some(f) => [ff * f; 3],
        None => [
            ff * reference_error,
            ff * reference_error / grid.h(),
            ff * stationary_residual,
        ],
    };
    let hint = cfg.rate_kind()?;
    let (w, rw) = (cfg.rates.window, cfg.rates.residual_window);
    let slack = 0.5 * run.dt;
    let fits = [
        fit_clipped(&sup, w, slack, floors[0], hint),
        fit_clipped(&hd, w, slack, floors[1], hint),
        fit_clipped(&residual, rw, slack, floors[2], hint),
    ];
    let residual_unclipped = fit_clipped(&residual, rw, slack, 0.0, hint);

    let observed = residual.iter().map(|p| p.1).fold(0.0, f64::max);
    let b = if observed > 0.0 { 2.0 * observed } else { 1.0 };
    let lambda = lambda_estimate(model.as_ref(), &CompactSlab::around(&u_minus, b)).map_err(|e| e.to_string());
    let key_lemma = key_lemma_check(
        model.as_ref(),
        &u_minus,
        cfg.run.key_lemma_beta,
        &KeyLemmaSamples {
            samples: cfg.run.key_lemma_samples,
            corner_tol: Some(corner_tol),
            seed: cfg.seed,
            ..KeyLemmaSamples::default()
        },
    )
    .map_err(|e| e.to_string());
    let minimizer = backward_minimizer(model.as_ref(), &u_minus, 0.5, cfg.run.minimizer_t, 1e-3);
    let calibration = minimizer
        .as_ref()
        .map_err(|e| e.to_string())
        .and_then(|traj| calibration_residual(model.as_ref(), traj, &u_minus).map_err(|e| e.to_string()));

    write_series(create(&out.join("sup_error.csv"))?, &sup)?;
    write_series(create(&out.join("hausdorff.csv"))?, &hd)?;
    write_series(create(&out.join("residual.csv"))?, &residual)?;
    let mut rates = format!("{}\n", RateFit::CSV_HEADER);
    for (fit, win) in fits.iter().zip([w, w, rw]) {
        rates.push_str(&rate_row(fit, hint, win));
        rates.push('\n');
    }
    write_file(&out.join("rates.csv"), rates)?;
    u_minus.write_csv(create(&out.join("u_minus.csv"))?)?;
    run.write_csv(&out.join("snapshots"), "u_")?;
    extract_jets_tagged(&u_minus, corner_tol, "u_minus").write_csv(create(&out.join("jets_u_minus.csv"))?)?;
    if let Ok(traj) = &minimizer {
        traj.write_csv(model.as_ref(), create(&out.join("minimizer.csv"))?)?;
    }
    write_file(
        &out.join("convergence.svg"),
        log_chart(
            &format!("{} on n = {}", model.name(), grid.n()),
            "t",
            &[
                Series { label: "sup error", points: &sup },
                Series { label: "Hausdorff", points: &hd },
                Series { label: "max |H| on jets", points: &residual },
            ],
        ),
    )?;

    let summary = ConvergenceSummary {
        model: model.name().to_string(),
        dt: run.dt,
        corner_tol,
        reference,
        reference_error,
        run,
        u_minus,
        sup_series: sup,
        hausdorff_series: hd,
        residual_series: residual,
        floors,
        fits,
        residual_unclipped,
        stationary_residual,
        lambda_estimate: lambda,
        key_lemma,
        calibration,
    };
    write_file(&out.join("report.txt"), convergence_report(cfg, &summary))?;
    Ok(summary)
}

fn convergence_report(cfg: &ExperimentConfig, s: &ConvergenceSummary) -> String {
    let mut r = String::new();
    let _ = writeln!(r, "convergence experiment: {}", s.model);
    let _ = writeln!(
        r,
        "grid n = {}, scheme {}, dt = {}, t_final = {}",
        cfg.grid.n, cfg.scheme.kind, s.dt, cfg.run.t_final
    );
    let _ = writeln!(r, "reference u_-: {} (error estimate {:e})", s.reference, s.reference_error);
    let _ = writeln!(
        r,
        "stationary residual max |H| on jets of u_-: {:e} (10 h = {:e})",
        s.stationary_residual,
        10.0 / cfg.grid.n as f64
    );
    let _ = writeln!(r, "corner tolerance: {:e}", s.corner_tol);
    let _ = writeln!(r);
    match &s.lambda_estimate {
        Ok(l) => {
            let _ = writeln!(r, "lambda estimate (min dH/du on slab around u_-): {l:.6}");
            let _ = writeln!(r, "  reference exponents: sup -lambda = {:.6}, Hausdorff -lambda/3 = {:.6}", -l, -l / 3.0);
        }
        Err(e) => {
            let _ = writeln!(r, "lambda estimate unavailable: {e}");
        }
    }
    let _ = writeln!(r);
    let _ = writeln!(r, "fitted rates (rates.csv rows in this order):");
    for (k, name) in RATE_SERIES.iter().enumerate() {
        let _ = writeln!(
            r,
            "  {name:<9} {}; floor {:e}",
            describe_fit(&s.fits[k]),
            s.floors[k]
        );
    }
    let _ = writeln!(r, "  residual without floor exclusion: {}", describe_fit(&s.residual_unclipped));
    if let Ok(l) = &s.lambda_estimate {
        let verdict = |fit: &FitOutcome, target: f64| match fit {
            Ok(f) if f.kind == RateKind::Exponential => {
                if f.exponent <= 0.9 * target {
                    "meets"
                } else {
                    "misses"
                }
            }
            _ => "n/a for",
        };
        let _ = writeln!(
            r,
            "  sup fit {} 0.9 x (-lambda); Hausdorff fit {} 0.9 x (-lambda/3)",
            verdict(&s.fits[0], -l),
            verdict(&s.fits[1], -l / 3.0)
        );
    }
    let _ = writeln!(r);
    match &s.key_lemma {
        Ok(k) => {
            let _ = writeln!(
                r,
                "key lemma on u_-: alpha {:.6}, Delta {:.6}, beta {}, {} violations ({} near, {} far) over {} samples, min far margin {:.6}",
                k.alpha, k.delta, k.beta, k.violations, k.near_violations, k.far_violations, k.samples, k.min_far_margin
            );
        }
        Err(e) => {
            let _ = writeln!(r, "key lemma check unavailable: {e}");
        }
    }
    match &s.calibration {
        Ok(c) => {
            let _ = writeln!(
                r,
                "backward calibrated curve through x = 0.5 over T = {}: calibration residual {:e}",
                cfg.run.minimizer_t, c
            );
        }
        Err(e) => {
            let _ = writeln!(r, "backward calibrated curve unavailable: {e}");
        }
    }
    r
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Pass,
    Fail,
    Skipped(String),
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Pass => f.write_str("pass"),
            Verdict::Fail => f.write_str("fail"),
            Verdict::Skipped(why) => write!(f, "skipped: {why}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyRow {
    pub name: String,
    pub verdict: Verdict,
    /// Slack to the threshold: positive when the property holds.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropertiesSummary {
    pub model: String,
    pub rows: Vec<PropertyRow>,
}

impl PropertiesSummary {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.verdict != Verdict::Fail)
    }

    pub fn row(&self, name: &str) -> Option<&PropertyRow> {
        self.rows.iter().find(|r| r.name == name)
    }
}

struct Rows(Vec<PropertyRow>);

impl Rows {
    /// `margin >= 0` passes (`> 0` when `strict`).
    fn check(&mut self, name: &str, margin: f64, strict: bool) {
        let ok = if strict { margin > 0.0 } else { margin >= 0.0 };
        self.0.push(PropertyRow {
            name: name.into(),
            verdict: if ok { Verdict::Pass } else { Verdict::Fail },
            margin,
        });
    }

    fn skip(&mut self, name: &str, why: &str) {
        self.0.push(PropertyRow {
            name: name.into(),
            verdict: Verdict::Skipped(why.into()),
            margin: f64::NAN,
        });
    }
}

/// Random smooth periodic datum: a few Fourier modes plus a constant.
pub fn random_datum(grid: TorusGrid, rng: &mut ChaCha8Rng) -> GridFn {
    let c: f64 = rng.gen_range(-1.0..1.0);
    let modes: Vec<(f64, f64)> = (1..=3)
        .map(|k| (rng.gen_range(-0.5..0.5) / k as f64, rng.gen_range(0.0..1.0)))
        .collect();
    GridFn::from_fn(grid, |x| {
        c + modes
            .iter()
            .enumerate()
            .map(|(k, &(a, ph))| a * (2.0 * std::f64::consts::PI * ((k + 1) as f64 * x + ph)).sin())
            .sum::<f64>()
    })
}

/// Random datum `>= phi` (even pairs) or an independent one (odd pairs).
pub fn random_pair(grid: TorusGrid, rng: &mut ChaCha8Rng, ordered: bool) -> (GridFn, GridFn) {
    let phi = random_datum(grid, rng);
    let other = random_datum(grid, rng);
    if ordered {
        let lift: f64 = rng.gen_range(0.0..0.5);
        let psi = phi
            .map(|x, v| v + lift + other.interpolate(x).abs())
            .expect("finite");
        (phi, psi)
    } else {
        (phi, other)
    }
}

struct ModelFacts {
    convex: bool,
    u_independent: bool,
}

fn models_suite(model: &dyn ContactModel, rows: &mut Rows, rng: &mut ChaCha8Rng) -> ModelFacts {
    let slab = ValidationSlab::new(2.0, model.p_box().min(5.0));
    let report = validate_assumptions(model, slab);
    let get = |id, v| report.check(id, v).expect("check present").clone();
    let h1 = get(Assumption::H1, CheckVariant::Standard);
    rows.check("models/H1", h1.min, true);
    let h2 = get(Assumption::H2, CheckVariant::Standard);
    rows.check("models/H2", h2.min - slab.h2_slope, true);
    let upper = model.lambda_upper() * (1.0 + 1e-9) + 1e-12;
    if model.lambda_lower() > 0.0 {
        let h3 = get(Assumption::H3, CheckVariant::Strict);
        rows.check("models/H3", h3.min.min(upper - h3.max), true);
    } else {
        let h3 = get(Assumption::H3, CheckVariant::Relaxed);
        rows.check("models/H3", h3.min.min(upper - h3.max), false);
    }
    let du = get(Assumption::H3, CheckVariant::Relaxed);
    let facts = ModelFacts {
        convex: h1.pass,
        u_independent: du.min == 0.0 && du.max == 0.0,
    };
    if !h1.pass {
        rows.skip("models/legendre_duality", "H1 fails");
        return facts;
    }
    // Fenchel equality at v = H_p and agreement of closed and numeric transforms
    let mut worst: f64 = 0.0;
    let pb = 0.5 * model.p_box();
    for _ in 0..200 {
        let (x, u, p) = (rng.gen_range(0.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-pb..pb));
        let v = model.dh_dp(x, u, p);
        let (Ok(l), Ok(ln)) = (legendre_l(model, x, u, v), legendre_numeric(model, x, u, v)) else {
            worst = f64::INFINITY;
            break;
        };
        worst = worst
            .max((l + model.h(x, u, p) - p * v).abs())
            .max((l - ln).abs());
    }
    rows.check("models/legendre_duality", 1e-8 - worst, false);
    facts
}

fn fields_suite(grid: TorusGrid, rows: &mut Rows, rng: &mut ChaCha8Rng) {
    let mut identical = true;
    let mut worst_node: f64 = 0.0;
    for _ in 0..20 {
        let f = random_datum(grid, rng);
        let mut buf = Vec::new();
        let back = f.write_csv(&mut buf).and_then(|_| GridFn::read_csv(buf.as_slice()));
        identical &= back.as_ref().is_ok_and(|g| {
            g.values().iter().zip(f.values()).all(|(a, b)| a.to_bits() == b.to_bits())
        });
        for i in 0..grid.n() {
            worst_node = worst_node.max((f.interpolate(grid.node(i)) - f.values()[i]).abs());
        }
    }
    rows.check("fields/csv_round_trip", if identical { 0.0 } else { -1.0 }, false);
    rows.check("fields/interpolation_at_nodes", 1e-15 - worst_node, false);
}

fn evolve_suite(
    model: &dyn ContactModel,
    cfg: &ExperimentConfig,
    rows: &mut Rows,
    rng: &mut ChaCha8Rng,
) -> Result<()> {
    let p = &cfg.properties;
    let grid = TorusGrid::new(p.n)?;
    let ecfg = EvolveConfig::new(p.scheme.parse::<Scheme>()?);
    let (mut mono, mut expand, mut comp) = (f64::NEG_INFINITY, f64::NEG_INFINITY, 0.0f64);
    let (mut min_margin, mut max_ratio) = (f64::INFINITY, 0.0f64);
    for k in 0..p.pairs {
        let (phi, psi) = random_pair(grid, rng, k % 2 == 0);
        let rep = check_semigroup_props(model, &phi, &psi, p.t, &ecfg)?;
        if let Some(g) = rep.monotonicity_gap {
            mono = mono.max(g);
        }
        expand = expand.max(rep.expansion);
        comp = comp.max(rep.composition_residual);
        if rep.initial_dist > 0.0 {
            min_margin = min_margin.min(rep.contraction_margin);
            max_ratio = max_ratio.max(rep.contraction_ratio());
        }
    }
    rows.check("evolve/monotonicity", PROPERTY_TOL - mono, false);
    rows.check("evolve/nonexpansive", PROPERTY_TOL - expand, false);
    rows.check("evolve/composition", PROPERTY_TOL - comp, false);
    if model.lambda_lower() > 0.0 {
        rows.check("evolve/strict_contraction", min_margin, true);
    } else {
        rows.skip("evolve/strict_contraction", "lambda_lower = 0");
    }
    match model.discount_rate() {
        Some(l) => rows.check(
            "evolve/discounted_contraction",
            (-l * p.t).exp() + 5.0 * grid.h() - max_ratio,
            false,
        ),
        None => rows.skip("evolve/discounted_contraction", "not of discounted form"),
    }
    Ok(())
}

fn flow_suite(
    model: &dyn ContactModel,
    u_independent: bool,
    samples: usize,
    rows: &mut Rows,
    rng: &mut ChaCha8Rng,
) -> Result<()> {
    let mut worst_energy: f64 = f64::NEG_INFINITY;
    // with dH/du = 0 the contact flow conserves H exactly
    let mut worst_drift = u_independent.then_some(0.0f64);
    let mut worst_reversal: f64 = 0.0;
    for k in 0..samples {
        let z0 = FlowState::new(rng.gen_range(0.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-2.0..2.0));
        let traj = integrate(model, z0, (0.0, 5.0), 1e-3)?;
        let profile = energy_profile(model, &traj, 1e-6);
        worst_energy = worst_energy.max(profile.worst_violation);
        if let Some(d) = worst_drift.as_mut() {
            let h0 = profile.series[0].1;
            *d = profile.series.iter().fold(*d, |m, &(_, h)| m.max((h - h0).abs()));
        }
        if k < 10 {
            let fwd = integrate(model, z0, (0.0, 1.0), 1e-3)?;
            let back = integrate(model, fwd.last().state(), (1.0, 0.0), 1e-3)?;
            let z = back.first();
            worst_reversal = worst_reversal
                .max(torus_dist(z.x, z0.x))
                .max((z.u - z0.u).abs())
                .max((z.p - z0.p).abs());
        }
    }
    rows.check("flow/energy_sandwich", 1e-6 - worst_energy, false);
    if let Some(drift) = worst_drift {
        rows.check("flow/energy_conservation", 1e-6 - drift, false);
    } else {
        rows.skip("flow/energy_conservation", "H depends on u");
    }
    rows.check("flow/time_reversal", 1e-6 - worst_reversal, false);
    Ok(())
}

fn stationary_suite(model: &dyn ContactModel, grid: TorusGrid, rows: &mut Rows) -> Result<()> {
    if model.discount_rate().is_none() {
        rows.skip("stationary/discounted_residual", "not of discounted form");
        return Ok(());
    }
    let res = solve_discounted(model, grid, &DiscountedParams::default())?;
    let r = hamiltonian_residual(model, &res.u_minus, default_corner_tol(&res.u_minus));
    rows.check("stationary/discounted_residual", 10.0 * grid.h() - r, false);
    Ok(())
}

fn jets_suite(grid: TorusGrid, rows: &mut Rows, rng: &mut ChaCha8Rng) -> Result<()> {
    let (mut worst_metric, mut min_size) = (0.0f64, usize::MAX);
    for _ in 0..10 {
        let fs: Vec<GridFn> = (0..3).map(|_| random_datum(grid, rng)).collect();
        let tol = default_corner_tol(&fs[0]);
        let clouds: Vec<_> = fs.iter().map(|f| extract_jets_tagged(f, tol, "random")).collect();
        min_size = min_size.min(clouds.iter().map(|c| c.len()).min().unwrap_or(0));
        let d = |a: usize, b: usize| hausdorff(&clouds[a], &clouds[b]);
        worst_metric = worst_metric
            .max(d(0, 0)?)
            .max((d(0, 1)? - d(1, 0)?).abs())
            .max(d(0, 2)? - d(0, 1)? - d(1, 2)?);
    }
    rows.check("jets/hausdorff_metric", 1e-12 - worst_metric, false);
    rows.check("jets/cloud_covers_grid", min_size as f64 - grid.n() as f64, false);
    Ok(())
}

fn diagnostics_suite(
    model: &dyn ContactModel,
    grid: TorusGrid,
    convex: bool,
    rows: &mut Rows,
    rng: &mut ChaCha8Rng,
) -> Result<()> {
    let k: f64 = rng.gen_range(0.5..3.0);
    let c: f64 = rng.gen_range(0.5..2.0);
    let exp: Vec<(f64, f64)> = (1..=20).map(|t| (t as f64, c * (-k * t as f64).exp())).collect();
    let e = fit_rate(&exp, (1.0, 20.0), Some(RateKind::Exponential))?;
    let q: f64 = rng.gen_range(0.3..1.5);
    let pow: Vec<(f64, f64)> = (5..=100).map(|t| (t as f64, c * (1.0 + t as f64).powf(-q))).collect();
    let pf = fit_rate(&pow, (5.0, 100.0), Some(RateKind::Power))?;
    rows.check(
        "diagnostics/fit_recovery",
        (1e-10 - (e.exponent + k).abs()).min(1e-2 - (pf.exponent + q).abs()),
        false,
    );

    if convex {
        let u = random_datum(grid, rng);
        let tol = default_corner_tol(&u);
        let mut worst = f64::INFINITY;
        for _ in 0..1000 {
            let i = rng.gen_range(0..grid.n());
            let v = rng.gen_range(-2.0..2.0);
            let l = l_u_eval(model, &u, i, v, tol)?;
            worst = worst.min(l + h_range_on_differentials(model, &u, i, tol).1);
        }
        rows.check("diagnostics/fenchel_young", worst + 1e-9, false);
    } else {
        rows.skip("diagnostics/fenchel_young", "H1 fails");
    }

    let inner = lambda_estimate(model, &CompactSlab::new(-0.5, 0.5, 2.0));
    let outer = lambda_estimate(model, &CompactSlab::new(-1.0, 1.0, 2.0));
    match (inner, outer) {
        (Ok(a), Ok(b)) => rows.check("diagnostics/lambda_monotone", a - b, false),
        _ => rows.skip("diagnostics/lambda_monotone", "empty slab"),
    }
    Ok(())
}

/// Runs the property suites of every module on seeded random data and writes
/// `properties.csv` (`name,verdict,margin`).
pub fn run_properties(cfg: &ExperimentConfig, out: &Path) -> Result<PropertiesSummary> {
    cfg.validate()?;
    let model = cfg.build_model();
    let grid = TorusGrid::new(cfg.properties.n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut rows = Rows(Vec::new());
    let facts = models_suite(model.as_ref(), &mut rows, &mut rng);
    fields_suite(grid, &mut rows, &mut rng);
    evolve_suite(model.as_ref(), cfg, &mut rows, &mut rng)?;
    let samples = cfg.properties.flow_samples;
    flow_suite(model.as_ref(), facts.u_independent, samples, &mut rows, &mut rng)?;
    stationary_suite(model.as_ref(), grid, &mut rows)?;
    jets_suite(grid, &mut rows, &mut rng)?;
    diagnostics_suite(model.as_ref(), grid, facts.convex, &mut rows, &mut rng)?;

    let summary = PropertiesSummary {
        model: model.name().to_string(),
        rows: rows.0,
    };
    create_dir(out)?;
    let mut csv = String::from("name,verdict,margin\n");
    let mut report = format!("property suites for {} (seed {})\n", summary.model, cfg.seed);
    for r in &summary.rows {
        let _ = writeln!(csv, "{},{},{}", r.name, r.verdict, fmt_real(r.margin));
        let _ = writeln!(report, "{:<34} {:<32} margin {:e}", r.name, r.verdict.to_string(), r.margin);
    }
    let failed = summary.rows.iter().filter(|r| r.verdict == Verdict::Fail).count();
    let _ = writeln!(report, "{} checks, {failed} failed", summary.rows.len());
    write_file(&out.join("properties.csv"), csv)?;
    write_file(&out.join("report.txt"), report)?;
    Ok(summary)
}

#[derive(Debug, Clone)]
pub struct CriticalSummary {
    pub model: String,
    /// `c(h^0)` by vanishing discount.
    pub base: CriticalValueResult,
    pub shift_probe: f64,
    /// `c(h^0 + shift_probe)`.
    pub shifted: CriticalValueResult,
    pub shift: ShiftResult,
}

impl CriticalSummary {
    /// `c(h + a) - c(h) - a`.
    pub fn shift_identity_gap(&self) -> f64 {
        self.shifted.c - self.base.c - self.shift_probe
    }
}

/// Critical value of the frozen Hamiltonian at `u = 0`, the shift identity and
/// the admissible shift `a*`; writes `critical_ladder.csv`,
/// `admissible_shift.csv` and `report.txt`.
pub fn run_critical(cfg: &ExperimentConfig, out: &Path) -> Result<CriticalSummary> {
    cfg.validate()?;
    let model = cfg.build_model();
    let params = cfg.critical.params();
    let base = critical_value(&model, 0.0, &params)?;
    let probe = cfg.critical.shift_probe;
    let shifted = critical_value(&shared(Shifted::new(model.clone(), probe)), 0.0, &params)?;
    let [lo, hi] = cfg.critical.bracket;
    create_dir(out)?;
    base.write_csv(create(&out.join("critical_ladder.csv"))?)?;
    let shift = admissible_shift(&model, (lo, hi), cfg.critical.tol, &params)?;
    let mut evals = String::from("a,c\n");
    for &(a, c) in &shift.evaluations {
        let _ = writeln!(evals, "{},{}", fmt_real(a), fmt_real(c));
    }
    write_file(&out.join("admissible_shift.csv"), evals)?;

    let summary = CriticalSummary {
        model: model.name().to_string(),
        base,
        shift_probe: probe,
        shifted,
        shift,
    };
    let mut r = String::new();
    let _ = writeln!(r, "critical value experiment: {}", summary.model);
    let _ = writeln!(
        r,
        "vanishing discount on n = {}, dt = {}, ladder {:?}",
        params.n, params.dt, params.ladder
    );
    let _ = writeln!(r, "c(h^0) = {:.6}", summary.base.c);
    let _ = writeln!(r, "ladder monotone in lambda: {}", summary.base.ladder_monotone);
    let _ = writeln!(
        r,
        "shift identity: c(h^0 + {probe}) - c(h^0) = {:.6} (gap {:e})",
        summary.shifted.c - summary.base.c,
        summary.shift_identity_gap()
    );
    let _ = writeln!(
        r,
        "admissible shift a* = {:.6} (c = {:e}, {} bisection steps, bracket [{lo}, {hi}])",
        summary.shift.a_star, summary.shift.c_at_a_star, summary.shift.iterations
    );
    write_file(&out.join("report.txt"), r)?;
    Ok(summary)
}

/// Process exit code for an error: 3 for solver failures, 2 otherwise.
pub fn exit_code(err: &LabError) -> i32 {
    match err {
        LabError::NotConverged { .. } | LabError::BracketInvalid { .. } | LabError::NonFinite { .. } => 3,
        _ => 2,
    }
}
