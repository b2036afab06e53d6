//! Experiment configuration: one TOML document fixes an experiment.
//!
//! ```toml
//! model = "bundled:synthetic4"     # or a model file path, relative to this file
//! output_dir = "out"               # relative to this file
//!
//! [objective]
//! horizon = 200
//! alpha = 1.0                      # 0 and inf select the limiting policies
//! x_star = [2.0, -1.0, 0.0, 0.0]
//! q = [3.0, 4.0, 0.1, 0.1]         # diagonal, full matrix, or "identity"
//! r = "sigma_nu_inverse"
//! sweep = { min = 1e-6, max = 1e6, points = 25 }   # or { alphas = [...] }
//!
//! [simulation]
//! burn_in = 200
//! runs = 1000
//! master_seed = 7
//!
//! [detector]
//! false_alarm_prob = 0.05
//!
//! [controller]                     # optional, defaults to identity weights
//! q = "identity"
//! r = "identity"
//!
//! [baseline]
//! steps = 100000
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::bundled;
use crate::error::{Error, Result};
use crate::harness::{LoopDesign, SimulationConfig, DEFAULT_BURN_IN};
use crate::model_file;
use crate::numerics::{Matrix, SymmetricMatrix, Vector};
use crate::performance::{default_grid, log_grid};
use crate::pipeline::{kalman_design, lqg_design, DetectorConfig, FilterGains, DEFAULT_FALSE_ALARM_PROB};
use crate::plant::SystemModel;
use crate::synthesis::{AttackObjective, Weighting};

pub const BUNDLED_PREFIX: &str = "bundled:";
pub const DEFAULT_BASELINE_STEPS: usize = 100_000;

/// A weight matrix given as a diagonal, a full matrix, or a named rule.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum WeightSpec {
    Diagonal(Vec<f64>),
    Full(Vec<Vec<f64>>),
    Named(String),
}

impl WeightSpec {
    /// Resolve to a `dim × dim` matrix. `"sigma_nu_inverse"` needs the filter.
    pub fn resolve(&self, key: &str, dim: usize, gains: Option<&FilterGains>) -> Result<SymmetricMatrix> {
        let m = match self {
            WeightSpec::Diagonal(d) => {
                if d.len() != dim {
                    return Err(Error::parse(key, format!("diagonal has {} entries, expected {dim}", d.len())));
                }
                SymmetricMatrix::from_diagonal(d)
            }
            WeightSpec::Full(rows) => {
                if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
                    return Err(Error::parse(key, format!("expected a {dim}x{dim} matrix")));
                }
                let flat: Vec<f64> = rows.iter().flatten().copied().collect();
                SymmetricMatrix::new(Matrix::from_row_slice(dim, dim, &flat))
                    .map_err(|e| Error::parse(key, e.to_string()))?
            }
            WeightSpec::Named(name) => match (name.as_str(), gains) {
                ("identity", _) => SymmetricMatrix::identity(dim),
                ("sigma_nu_inverse", Some(g)) if g.sigma_nu_inv.dim() == dim => g.sigma_nu_inv.clone(),
                ("sigma_nu_inverse", _) => {
                    return Err(Error::parse(key, "sigma_nu_inverse is only defined for the detection weight"))
                }
                (other, _) => return Err(Error::parse(key, format!("unknown weight rule `{other}`"))),
            },
        };
        Ok(m)
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum SweepSpec {
    Explicit { alphas: Vec<f64> },
    LogGrid { min: f64, max: f64, points: usize },
}

impl SweepSpec {
    pub fn grid(&self) -> Result<Vec<f64>> {
        match self {
            SweepSpec::Explicit { alphas } => Ok(alphas.clone()),
            SweepSpec::LogGrid { min, max, points } => {
                log_grid(*min, *max, *points).map_err(|e| Error::parse("objective.sweep", e.to_string()))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveSpec {
    pub horizon: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    pub x_star: Vec<f64>,
    pub q: WeightSpec,
    #[serde(default = "default_r")]
    pub r: WeightSpec,
    pub sweep: Option<SweepSpec>,
}

fn default_alpha() -> f64 {
    1.0
}

fn default_r() -> WeightSpec {
    WeightSpec::Named("sigma_nu_inverse".into())
}

#[derive(Clone, Copy, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSpec {
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default)]
    pub master_seed: u64,
}

fn default_burn_in() -> usize {
    DEFAULT_BURN_IN
}

fn default_runs() -> usize {
    1
}

impl Default for SimulationSpec {
    fn default() -> Self {
        SimulationSpec {
            burn_in: DEFAULT_BURN_IN,
            runs: 1,
            master_seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorSpec {
    #[serde(default = "default_q")]
    pub false_alarm_prob: f64,
}

fn default_q() -> f64 {
    DEFAULT_FALSE_ALARM_PROB
}

impl Default for DetectorSpec {
    fn default() -> Self {
        DetectorSpec {
            false_alarm_prob: DEFAULT_FALSE_ALARM_PROB,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerSpec {
    pub q: WeightSpec,
    pub r: WeightSpec,
}

#[derive(Clone, Copy, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineSpec {
    #[serde(default = "default_steps")]
    pub steps: usize,
}

fn default_steps() -> usize {
    DEFAULT_BASELINE_STEPS
}

impl Default for BaselineSpec {
    fn default() -> Self {
        BaselineSpec {
            steps: DEFAULT_BASELINE_STEPS,
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    model: String,
    output_dir: Option<PathBuf>,
    objective: ObjectiveSpec,
    #[serde(default)]
    simulation: SimulationSpec,
    #[serde(default)]
    detector: DetectorSpec,
    controller: Option<ControllerSpec>,
    #[serde(default)]
    baseline: BaselineSpec,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ModelSource {
    Bundled(String),
    File(PathBuf),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub model: ModelSource,
    pub output_dir: PathBuf,
    pub objective: ObjectiveSpec,
    pub simulation: SimulationSpec,
    pub detector: DetectorSpec,
    pub controller: Option<ControllerSpec>,
    pub baseline: BaselineSpec,
}

impl ExperimentConfig {
    /// Parse a config; relative paths resolve against `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::parse("<config>", e.message().to_string()))?;
        let model = match raw.model.strip_prefix(BUNDLED_PREFIX) {
            Some(name) => ModelSource::Bundled(name.to_string()),
            None => ModelSource::File(base_dir.join(&raw.model)),
        };
        let cfg = ExperimentConfig {
            model,
            output_dir: base_dir.join(raw.output_dir.unwrap_or_else(|| PathBuf::from("out"))),
            objective: raw.objective,
            simulation: raw.simulation,
            detector: raw.detector,
            controller: raw.controller,
            baseline: raw.baseline,
        };
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::parse(&text, base)
    }

    fn check(&self) -> Result<()> {
        let a = self.objective.alpha;
        if a.is_nan() || a < 0.0 {
            return Err(Error::parse("objective.alpha", format!("must be >= 0 or inf, got {a}")));
        }
        if self.simulation.runs == 0 {
            return Err(Error::parse("simulation.runs", "must be at least 1"));
        }
        if self.simulation.burn_in == 0 {
            return Err(Error::parse("simulation.burn_in", "must be at least 1"));
        }
        let q = self.detector.false_alarm_prob;
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::parse("detector.false_alarm_prob", format!("must lie in (0, 1), got {q}")));
        }
        if self.baseline.steps < 2 {
            return Err(Error::parse("baseline.steps", "must be at least 2"));
        }
        if let ModelSource::Bundled(name) = &self.model {
            if bundled::by_name(name).is_none() {
                return Err(Error::parse("model", format!("unknown bundled model `{name}`")));
            }
        }
        Ok(())
    }

    /// The model, unvalidated.
    pub fn load_model(&self) -> Result<SystemModel> {
        match &self.model {
            ModelSource::Bundled(name) => Ok(bundled::by_name(name).expect("checked at parse time")),
            ModelSource::File(path) => model_file::load_model(path),
        }
    }

    pub fn weighting(&self) -> Weighting {
        match self.objective.alpha {
            0.0 => Weighting::Zero,
            a if a.is_infinite() => Weighting::Infinity,
            a => Weighting::Finite(a),
        }
    }

    /// Validate the model and design the filter and controller.
    pub fn design(&self, model: SystemModel) -> Result<LoopDesign> {
        model.ensure_valid()?;
        let gains = kalman_design(&model)?;
        let (qp, rp) = match &self.controller {
            Some(c) => (c.q.resolve("controller.q", model.n(), None)?, c.r.resolve("controller.r", model.m(), None)?),
            None => (SymmetricMatrix::identity(model.n()), SymmetricMatrix::identity(model.m())),
        };
        let ctrl = lqg_design(&model, qp, rp)?;
        Ok(LoopDesign::new(model, gains, ctrl))
    }

    /// The objective at `alpha`; the limiting weightings use `alpha = 1` as a placeholder.
    pub fn objective_at(&self, design: &LoopDesign, alpha: Weighting) -> Result<AttackObjective> {
        let o = &self.objective;
        let n = design.model.n();
        if o.x_star.len() != n {
            return Err(Error::parse("objective.x_star", format!("has {} entries, expected {n}", o.x_star.len())));
        }
        let q = o.q.resolve("objective.q", n, None)?;
        let r = o.r.resolve("objective.r", design.model.p(), Some(&design.gains))?;
        let a = match alpha {
            Weighting::Finite(a) => a,
            _ => 1.0,
        };
        AttackObjective::constant(q, r, Vector::from_column_slice(&o.x_star), o.horizon, a)
            .map_err(|e| Error::parse("objective", e.to_string()))
    }

    pub fn objective(&self, design: &LoopDesign) -> Result<AttackObjective> {
        self.objective_at(design, self.weighting())
    }

    pub fn sweep_grid(&self) -> Result<Vec<f64>> {
        match &self.objective.sweep {
            Some(s) => s.grid(),
            None => Ok(default_grid()),
        }
    }

    pub fn simulation_config(&self) -> SimulationConfig {
        SimulationConfig {
            burn_in: self.simulation.burn_in,
            horizon: self.objective.horizon,
            master_seed: self.simulation.master_seed,
            runs: self.simulation.runs,
        }
    }

    pub fn detector_config(&self, p: usize) -> Result<DetectorConfig> {
        DetectorConfig::new(self.detector.false_alarm_prob, p)
    }
}
