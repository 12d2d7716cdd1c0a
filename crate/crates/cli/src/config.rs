//! Experiment configuration (TOML) and the built-in presets.

use std::fs;
use std::path::{Path, PathBuf};

use contact_hj::diagnostics::RateKind;
use contact_hj::evolve::{EvolveConfig, Scheme};
use contact_hj::models::{shared, Concave, Counterexample, Frozen, Mechanical, SharedModel};
use contact_hj::stationary::CriticalParams;
use contact_hj::{GridFn, LabError, Result, TorusGrid};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub scheme: SchemeConfig,
    #[serde(default)]
    pub initial: InitialConfig,
    #[serde(default)]
    pub run: RunConfig,
    #[serde(default)]
    pub reference: ReferenceConfig,
    #[serde(default)]
    pub rates: RatesConfig,
    #[serde(default)]
    pub properties: PropertiesConfig,
    #[serde(default)]
    pub critical: CriticalConfig,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelName {
    Quad,
    Mechanical,
    Counterexample,
    Frozen,
    Concave,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub name: ModelName,
    #[serde(default = "one")]
    pub lambda: f64,
    #[serde(default)]
    pub amplitude: f64,
    #[serde(default)]
    pub offset: f64,
    /// Frozen model: `u` value to freeze at.
    #[serde(default)]
    pub freeze_at: f64,
    /// Frozen model: underlying contact model (quad or mechanical).
    #[serde(default)]
    pub base: Option<ModelName>,
    #[serde(default)]
    pub p_box: Option<f64>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { n: 128 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeConfig {
    pub kind: String,
    pub dt: Option<f64>,
    pub max_dt: Option<f64>,
    pub cfl_safety: Option<f64>,
    pub dissipation: Option<f64>,
    pub v_box: Option<f64>,
    pub v_samples: Option<usize>,
    pub inner_fixpoint_iters: Option<usize>,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        Self {
            kind: "lax_friedrichs".into(),
            dt: None,
            max_dt: None,
            cfl_safety: None,
            dissipation: None,
            v_box: None,
            v_samples: None,
            inner_fixpoint_iters: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialConfig {
    Constant {
        value: f64,
    },
    /// `amplitude * sin(2 pi frequency x) + shift`
    Sine {
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default = "one_u32")]
        frequency: u32,
        #[serde(default)]
        shift: f64,
    },
    /// CSV with `x,value` rows on the configured grid.
    File {
        path: PathBuf,
    },
}

fn one_u32() -> u32 {
    1
}

impl Default for InitialConfig {
    fn default() -> Self {
        InitialConfig::Sine {
            amplitude: 1.0,
            frequency: 1,
            shift: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub t_final: f64,
    pub snapshot_every: f64,
    /// Slope jump that counts as a corner; default `10 h`.
    pub corner_tol: Option<f64>,
    /// Backward calibrated curve length for the flow check.
    #[serde(default = "default_minimizer_t")]
    pub minimizer_t: f64,
    #[serde(default = "default_beta")]
    pub key_lemma_beta: f64,
    #[serde(default = "default_key_samples")]
    pub key_lemma_samples: usize,
}

fn default_beta() -> f64 {
    0.5
}

fn default_key_samples() -> usize {
    10_000
}

fn default_minimizer_t() -> f64 {
    1.0
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            t_final: 12.0,
            snapshot_every: 0.25,
            corner_tol: None,
            minimizer_t: 1.0,
            key_lemma_beta: 0.5,
            key_lemma_samples: 10_000,
        }
    }
}

/// How the stationary solution `u_-` is obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ReferenceConfig {
    /// Continue the run with the same scheme until it is stationary.
    Longtime {
        #[serde(default = "default_tol")]
        tol: f64,
        #[serde(default = "default_t_max")]
        t_max: f64,
    },
    /// Discounted value iteration (discounted-form models only).
    Discounted {
        #[serde(default = "default_tol")]
        tol: f64,
        dt: Option<f64>,
    },
    /// A known stationary solution.
    Constant { value: f64 },
    File { path: PathBuf },
}

fn default_tol() -> f64 {
    1e-10
}

fn default_t_max() -> f64 {
    300.0
}

impl Default for ReferenceConfig {
    fn default() -> Self {
        ReferenceConfig::Longtime {
            tol: default_tol(),
            t_max: default_t_max(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatesConfig {
    /// `exponential`, `power` or `auto` for the sup-norm fit.
    pub kind: String,
    pub window: [f64; 2],
    pub residual_window: [f64; 2],
    /// Points below `floor_factor * scheme-error estimate` are excluded.
    pub floor_factor: f64,
    /// Explicit scheme-error estimate, overriding the computed one.
    pub floor: Option<f64>,
}

impl Default for RatesConfig {
    fn default() -> Self {
        Self {
            kind: "exponential".into(),
            window: [2.0, 12.0],
            residual_window: [2.0, 10.0],
            floor_factor: 10.0,
            floor: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropertiesConfig {
    /// Scheme for the semigroup suite (independent of `[scheme]`).
    pub scheme: String,
    pub n: usize,
    pub pairs: usize,
    pub t: f64,
    pub flow_samples: usize,
}

impl Default for PropertiesConfig {
    fn default() -> Self {
        Self {
            scheme: "lax_friedrichs".into(),
            n: 128,
            pairs: 200,
            t: 1.0,
            flow_samples: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriticalConfig {
    pub bracket: [f64; 2],
    pub ladder: Vec<f64>,
    pub tol: f64,
    pub n: usize,
    pub dt: f64,
    pub v_box: f64,
    /// Constant added to `h` for the shift-identity check.
    pub shift_probe: f64,
}

impl Default for CriticalConfig {
    fn default() -> Self {
        let p = CriticalParams::default();
        Self {
            bracket: [-2.0, 1.0],
            ladder: p.ladder,
            tol: 1e-4,
            n: p.n,
            dt: p.dt,
            v_box: p.v_box,
            shift_probe: 0.7,
        }
    }
}

impl CriticalConfig {
    pub fn params(&self) -> CriticalParams {
        CriticalParams {
            ladder: self.ladder.clone(),
            n: self.n,
            dt: self.dt,
            v_box: self.v_box,
            ..CriticalParams::default()
        }
    }
}

fn invalid(msg: impl Into<String>) -> LabError {
    LabError::InvalidConfig(msg.into())
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| invalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config; relative paths inside it resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml_str(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let InitialConfig::File { path } = &mut cfg.initial {
            resolve(path);
        }
        if let ReferenceConfig::File { path } = &mut cfg.reference {
            resolve(path);
        }
        cfg.check_files()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    fn check_files(&self) -> Result<()> {
        for p in [
            match &self.initial {
                InitialConfig::File { path } => Some(path),
                _ => None,
            },
            match &self.reference {
                ReferenceConfig::File { path } => Some(path),
                _ => None,
            },
        ]
        .into_iter()
        .flatten()
        {
            if !p.is_file() {
                return Err(invalid(format!("file {} does not exist", p.display())));
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        TorusGrid::new(self.grid.n)?;
        let m = &self.model;
        if !(m.lambda > 0.0 && m.lambda.is_finite()) {
            return Err(invalid("model.lambda must be positive"));
        }
        if !m.amplitude.is_finite() || !m.offset.is_finite() || !m.freeze_at.is_finite() {
            return Err(invalid("model parameters must be finite"));
        }
        if m.p_box.is_some_and(|p| !(p > 0.0 && p.is_finite())) {
            return Err(invalid("model.p_box must be positive"));
        }
        if m.name == ModelName::Frozen
            && matches!(m.base, Some(ModelName::Frozen) | Some(ModelName::Concave))
        {
            return Err(invalid("frozen model base must be quad, mechanical or counterexample"));
        }
        self.evolve_config()?.validate()?;
        let r = &self.run;
        if !(r.t_final > 0.0 && r.snapshot_every > 0.0 && r.t_final.is_finite()) {
            return Err(invalid("run.t_final and run.snapshot_every must be positive"));
        }
        if r.t_final / r.snapshot_every > 1e6 {
            return Err(invalid("too many snapshots"));
        }
        if r.corner_tol.is_some_and(|c| !(c > 0.0))
            || !(r.minimizer_t > 0.0)
            || !(r.key_lemma_beta > 0.0)
            || r.key_lemma_samples == 0
        {
            return Err(invalid(
                "run.corner_tol, minimizer_t, key_lemma_beta and key_lemma_samples must be positive",
            ));
        }
        if let InitialConfig::Constant { value } = self.initial {
            if !value.is_finite() {
                return Err(invalid("initial value must be finite"));
            }
        }
        if let InitialConfig::Sine { amplitude, shift, .. } = self.initial {
            if !amplitude.is_finite() || !shift.is_finite() {
                return Err(invalid("initial sine parameters must be finite"));
            }
        }
        match self.reference {
            ReferenceConfig::Longtime { tol, t_max } if !(tol > 0.0 && t_max > 0.0) => {
                return Err(invalid("reference tol and t_max must be positive"));
            }
            ReferenceConfig::Discounted { tol, dt } if !(tol > 0.0) || dt.is_some_and(|d| !(d > 0.0)) => {
                return Err(invalid("reference tol and dt must be positive"));
            }
            ReferenceConfig::Constant { value } if !value.is_finite() => {
                return Err(invalid("reference value must be finite"));
            }
            _ => {}
        }
        self.rate_kind()?;
        let rt = &self.rates;
        for w in [rt.window, rt.residual_window] {
            if !(w[0] >= 0.0 && w[1] > w[0]) {
                return Err(invalid("rate windows must satisfy 0 <= t_min < t_max"));
            }
        }
        if !(rt.floor_factor >= 0.0) || rt.floor.is_some_and(|f| !(f >= 0.0)) {
            return Err(invalid("rates.floor_factor and rates.floor must be nonnegative"));
        }
        let p = &self.properties;
        TorusGrid::new(p.n)?;
        p.scheme.parse::<Scheme>()?;
        if p.pairs == 0 || !(p.t > 0.0) || p.flow_samples == 0 {
            return Err(invalid("property counts and t must be positive"));
        }
        let c = &self.critical;
        if !(c.bracket[0] < c.bracket[1]) || !(c.tol > 0.0) || !(c.dt > 0.0) || !(c.v_box > 0.0) {
            return Err(invalid("critical bracket must be ordered; tol, dt, v_box positive"));
        }
        if c.ladder.is_empty()
            || c.ladder.iter().any(|l| !(*l > 0.0))
            || c.ladder.windows(2).any(|w| w[1] >= w[0])
        {
            return Err(invalid("critical ladder must be positive and strictly decreasing"));
        }
        TorusGrid::new(c.n)?;
        if !c.shift_probe.is_finite() {
            return Err(invalid("critical.shift_probe must be finite"));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<TorusGrid> {
        TorusGrid::new(self.grid.n)
    }

    pub fn rate_kind(&self) -> Result<Option<RateKind>> {
        match self.rates.kind.as_str() {
            "auto" => Ok(None),
            other => other.parse().map(Some),
        }
    }

    pub fn evolve_config(&self) -> Result<EvolveConfig> {
        let s = &self.scheme;
        let base = EvolveConfig::new(s.kind.parse::<Scheme>()?);
        Ok(EvolveConfig {
            dt: s.dt,
            max_dt: s.max_dt.unwrap_or(base.max_dt),
            cfl_safety: s.cfl_safety.unwrap_or(base.cfl_safety),
            dissipation: s.dissipation,
            v_box: s.v_box,
            v_samples: s.v_samples.unwrap_or(base.v_samples),
            inner_fixpoint_iters: s.inner_fixpoint_iters.unwrap_or(base.inner_fixpoint_iters),
            ..base
        })
    }

    /// Snapshot times `0, every, 2 every, ...` up to `t_final`.
    pub fn snapshot_times(&self) -> Vec<f64> {
        let k = (self.run.t_final / self.run.snapshot_every + 1e-9).floor() as usize;
        (0..=k).map(|j| j as f64 * self.run.snapshot_every).collect()
    }

    pub fn build_model(&self) -> SharedModel {
        build_model(&self.model, self.model.name)
    }

    pub fn initial_data(&self, grid: TorusGrid) -> Result<GridFn> {
        match &self.initial {
            InitialConfig::Constant { value } => Ok(GridFn::constant(grid, *value)),
            InitialConfig::Sine {
                amplitude,
                frequency,
                shift,
            } => {
                let k = f64::from(*frequency);
                Ok(GridFn::from_fn(grid, |x| {
                    amplitude * (2.0 * std::f64::consts::PI * k * x).sin() + shift
                }))
            }
            InitialConfig::File { path } => read_grid_file(path, grid),
        }
    }
}

pub fn read_grid_file(path: &Path, grid: TorusGrid) -> Result<GridFn> {
    let file = fs::File::open(path)
        .map_err(|e| invalid(format!("cannot open {}: {e}", path.display())))?;
    let f = GridFn::read_csv(std::io::BufReader::new(file))
        .map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    if f.grid() != grid {
        return Err(invalid(format!(
            "{} has {} nodes, grid has {}",
            path.display(),
            f.len(),
            grid.n()
        )));
    }
    Ok(f)
}

fn build_model(m: &ModelConfig, name: ModelName) -> SharedModel {
    let with_box = |mut mech: Mechanical| {
        if let Some(pb) = m.p_box {
            mech = mech.with_p_box(pb);
        }
        mech.with_offset(m.offset)
    };
    match name {
        ModelName::Quad => shared(with_box(Mechanical::quad(m.lambda))),
        ModelName::Mechanical => shared(with_box(Mechanical::mechanical(m.lambda, m.amplitude))),
        ModelName::Counterexample => shared(Counterexample {
            p_box: m.p_box.unwrap_or(Counterexample::default().p_box),
        }),
        ModelName::Frozen => {
            let base = build_model(m, m.base.unwrap_or(ModelName::Mechanical));
            shared(Frozen::new(base, m.freeze_at))
        }
        ModelName::Concave => shared(Concave { lambda: m.lambda }),
    }
}

pub const PRESET_NAMES: [&str; 6] = [
    "quad",
    "mechanical",
    "counterexample",
    "frozen",
    "concave",
    "mechanical_critical",
];

/// Built-in experiment presets; the TOML files under `configs/` mirror these.
pub fn preset(name: &str) -> Option<ExperimentConfig> {
    let model = |name: ModelName| ModelConfig {
        name,
        lambda: 1.0,
        amplitude: 0.0,
        offset: 0.0,
        freeze_at: 0.0,
        base: None,
        p_box: None,
    };
    let base = |m: ModelConfig| ExperimentConfig {
        model: m,
        grid: GridConfig::default(),
        scheme: SchemeConfig::default(),
        initial: InitialConfig::default(),
        run: RunConfig::default(),
        reference: ReferenceConfig::default(),
        rates: RatesConfig::default(),
        properties: PropertiesConfig::default(),
        critical: CriticalConfig::default(),
        output_dir: PathBuf::from(format!("out/{name}")),
        seed: 0,
    };
    let cfg = match name {
        "quad" => ExperimentConfig {
            grid: GridConfig { n: 128 },
            initial: InitialConfig::Constant { value: 1.0 },
            critical: CriticalConfig {
                bracket: [-0.5, 0.7],
                ..CriticalConfig::default()
            },
            ..base(model(ModelName::Quad))
        },
        "mechanical" => ExperimentConfig {
            grid: GridConfig { n: 256 },
            scheme: SchemeConfig {
                kind: "semi_lagrangian".into(),
                ..SchemeConfig::default()
            },
            // dense enough to resolve the residual before it reaches the O(h) floor
            run: RunConfig {
                snapshot_every: 0.1,
                ..RunConfig::default()
            },
            ..base(ModelConfig {
                amplitude: 0.3,
                ..model(ModelName::Mechanical)
            })
        },
        "mechanical_critical" => ExperimentConfig {
            grid: GridConfig { n: 256 },
            scheme: SchemeConfig {
                kind: "semi_lagrangian".into(),
                ..SchemeConfig::default()
            },
            ..base(ModelConfig {
                amplitude: 1.0,
                ..model(ModelName::Mechanical)
            })
        },
        "counterexample" => ExperimentConfig {
            grid: GridConfig { n: 64 },
            initial: InitialConfig::Constant { value: -1.0 },
            run: RunConfig {
                t_final: 100.0,
                snapshot_every: 1.0,
                ..RunConfig::default()
            },
            reference: ReferenceConfig::Constant { value: 0.0 },
            rates: RatesConfig {
                kind: "power".into(),
                window: [5.0, 100.0],
                residual_window: [5.0, 100.0],
                ..RatesConfig::default()
            },
            critical: CriticalConfig {
                bracket: [-0.9, 0.9],
                ..CriticalConfig::default()
            },
            ..base(model(ModelName::Counterexample))
        },
        "frozen" => ExperimentConfig {
            rates: RatesConfig {
                kind: "auto".into(),
                ..RatesConfig::default()
            },
            critical: CriticalConfig {
                bracket: [-2.0, 2.0],
                ..CriticalConfig::default()
            },
            // offset -A puts the critical value at 0, so u_t + h = 0 has a
            // stationary limit
            ..base(ModelConfig {
                amplitude: 0.3,
                offset: -0.3,
                freeze_at: 0.0,
                base: Some(ModelName::Mechanical),
                ..model(ModelName::Frozen)
            })
        },
        "concave" => ExperimentConfig {
            grid: GridConfig { n: 64 },
            properties: PropertiesConfig {
                n: 64,
                pairs: 20,
                ..PropertiesConfig::default()
            },
            ..base(model(ModelName::Concave))
        },
        _ => return None,
    };
    Some(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_round_trip_through_toml() {
        for name in PRESET_NAMES {
            let cfg = preset(name).unwrap();
            cfg.validate().unwrap();
            let text = cfg.to_toml_string();
            assert_eq!(ExperimentConfig::from_toml_str(&text).unwrap(), cfg, "{name}");
        }
        assert!(preset("pendulum").is_none());
    }

    #[test]
    fn minimal_config_uses_defaults() {
        let cfg = ExperimentConfig::from_toml_str("[model]\nname = \"quad\"\n").unwrap();
        assert_eq!(cfg.grid.n, 128);
        assert_eq!(cfg.output_dir, PathBuf::from("out"));
        assert_eq!(cfg.build_model().name(), "quad");
    }

    #[test]
    fn rejects_bad_configs() {
        for text in [
            "",
            "[model]\nname = \"pendulum\"\n",
            "[model]\nname = \"quad\"\n[grid]\nn = 8\n",
            "[model]\nname = \"quad\"\nlambda = -1.0\n",
            "[model]\nname = \"quad\"\n[scheme]\nkind = \"weno\"\n",
            "[model]\nname = \"quad\"\ncolour = 3\n",
            "[model]\nname = \"quad\"\n[rates]\nkind = \"linear\"\nwindow = [2.0, 12.0]\nresidual_window = [2.0, 10.0]\nfloor_factor = 10.0\n",
            "[model]\nname = \"quad\"\n[critical]\nbracket = [1.0, 0.0]\nladder = [0.4]\ntol = 1e-4\nn = 64\ndt = 0.05\nv_box = 4.0\nshift_probe = 0.7\n",
        ] {
            let err = ExperimentConfig::from_toml_str(text).unwrap_err();
            assert_eq!(crate::exit_code(&err), 2, "{text}: {err}");
        }
    }

    #[test]
    fn snapshot_times_cover_final_time() {
        let cfg = preset("counterexample").unwrap();
        let ts = cfg.snapshot_times();
        assert_eq!(ts.len(), 101);
        assert_eq!(ts[100], 100.0);
    }
}
