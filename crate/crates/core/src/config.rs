//! TOML run configuration shared by every CLI subcommand.
//!
//! ```toml
//! [model]
//! kind = "van-der-pol"
//!
//! [output]
//! kind = "state-squared"
//! args = 0
//!
//! [grid]
//! dt = 0.21
//! steps = 1200
//! transient = 500
//!
//! [solver]            # optional
//! tolerance = 1e-12
//! max_inner = 50
//! dtau = inf
//!
//! [window]            # optional
//! kinds = ["square", "bump"]
//! normalization = "paper-faithful"
//!
//! [adjoint]           # optional
//! mode = "fixed-point"
//!
//! [study]             # optional, read by `study`
//! analysis = "convergence"
//! quantity = "average"
//! k_list = [2, 4, 8, 16, 32, 64]
//!
//! [optimize]          # required by `optimize`
//! lower = [-0.3]
//! upper = [0.3]
//!
//! [run]
//! sigma = [1.0]
//! output_dir = "out"
//! ```

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::adjoint::AdjointMode;
use crate::analysis::ErrorMeasure;
use crate::error::{Error, Result};
use crate::models::{DesignVector, Model, Output};
use crate::optim::{Constraint, DesignProblem};
use crate::primal::{PseudoTimeConfig, TimeGrid};
use crate::windows::{Normalization, WindowKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: Model,
    #[serde(default)]
    pub output: Option<Output>,
    pub grid: TimeGrid,
    #[serde(default)]
    pub solver: PseudoTimeConfig,
    #[serde(default)]
    pub window: WindowSection,
    #[serde(default)]
    pub adjoint: AdjointSection,
    #[serde(default)]
    pub study: StudySection,
    #[serde(default)]
    pub optimize: Option<OptimizeSection>,
    #[serde(default)]
    pub run: RunSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindowSection {
    pub kinds: Vec<WindowKind>,
    pub normalization: Normalization,
}

impl Default for WindowSection {
    fn default() -> Self {
        WindowSection {
            kinds: WindowKind::ALL.to_vec(),
            normalization: Normalization::PaperFaithful,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdjointSection {
    pub mode: AdjointMode,
    /// Defaults to the solver tolerance.
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StudyAnalysis {
    #[default]
    Convergence,
    Divergence,
    EndpointShift,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Quantity {
    #[default]
    Average,
    Sensitivity,
}

impl FromStr for Quantity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "average" => Ok(Quantity::Average),
            "sensitivity" => Ok(Quantity::Sensitivity),
            other => Err(Error::Config(format!(
                "unknown quantity '{other}' (expected average or sensitivity)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReferenceChoice {
    /// Closed form for the analytic signal, Bump at `reference_k` otherwise.
    #[default]
    Auto,
    ClosedForm,
    Bump,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudySection {
    pub analysis: StudyAnalysis,
    pub quantity: Quantity,
    pub k_list: Vec<usize>,
    pub reference: ReferenceChoice,
    pub reference_k: usize,
    pub measure: ErrorMeasure,
    /// Design component whose sensitivity is studied.
    pub component: usize,
    /// End-step shift for `endpoint-shift`, as a fraction of one period.
    pub shift_fraction: f64,
    /// Periods averaged before the shift in `endpoint-shift`.
    pub base_periods: Option<f64>,
}

impl Default for StudySection {
    fn default() -> Self {
        StudySection {
            analysis: StudyAnalysis::Convergence,
            quantity: Quantity::Average,
            k_list: vec![2, 4, 8, 16, 32, 64],
            reference: ReferenceChoice::Auto,
            reference_k: 300,
            measure: ErrorMeasure::PeriodEnvelope,
            component: 0,
            shift_fraction: 0.29,
            base_periods: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeSection {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    #[serde(default)]
    pub constraint: Option<Constraint>,
    #[serde(default = "default_relaxation")]
    pub relaxation: f64,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    #[serde(default = "default_penalty")]
    pub penalty: f64,
    #[serde(default = "default_gradient_tolerance")]
    pub gradient_tolerance: f64,
}

fn default_relaxation() -> f64 {
    0.1
}

fn default_max_iterations() -> usize {
    50
}

fn default_penalty() -> f64 {
    100.0
}

fn default_gradient_tolerance() -> f64 {
    1e-8
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    /// Design vector; defaults to zeros (one for Van der Pol, `mu = 1`).
    pub sigma: Option<Vec<f64>>,
    pub output_dir: Option<PathBuf>,
    /// Reserved; every pipeline is deterministic.
    pub seed: u64,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        RunConfig::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.output().validate(&self.model)?;
        self.grid.validate()?;
        self.solver.validate()?;
        Error::check_dim("design vector", self.model.design_dim(), self.sigma().len())?;
        if self.window.kinds.is_empty() {
            return Err(Error::Config("window.kinds must not be empty".into()));
        }
        if self.study.k_list.is_empty()
            || self.study.k_list[0] == 0
            || self.study.k_list.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(Error::Config(
                "study.k_list must be positive and strictly increasing".into(),
            ));
        }
        if self.study.component >= self.model.design_dim() {
            return Err(Error::Config(format!(
                "study.component {} out of range for {} design variables",
                self.study.component,
                self.model.design_dim()
            )));
        }
        if let Some(opt) = &self.optimize {
            self.design_problem_from(opt)?.validate()?;
        }
        Ok(())
    }

    pub fn output(&self) -> Output {
        self.output.clone().unwrap_or_else(|| self.model.default_output())
    }

    pub fn sigma(&self) -> Vec<f64> {
        match &self.run.sigma {
            Some(s) => s.clone(),
            None => match self.model {
                Model::VanDerPol(_) => vec![1.0],
                _ => vec![0.0; self.model.design_dim()],
            },
        }
    }

    pub fn adjoint_tolerance(&self) -> f64 {
        self.adjoint.tolerance.unwrap_or(self.solver.tolerance)
    }

    fn design_problem_from(&self, opt: &OptimizeSection) -> Result<DesignProblem> {
        let design = DesignVector::new(self.sigma(), opt.lower.clone(), opt.upper.clone())?;
        let mut p = DesignProblem::new(self.model.clone(), self.output(), self.grid, design);
        p.constraint = opt.constraint.clone();
        p.window = self.window.kinds[0];
        p.normalization = self.window.normalization;
        p.pseudo = self.solver;
        p.relaxation = opt.relaxation;
        p.max_iterations = opt.max_iterations;
        p.penalty = opt.penalty;
        p.gradient_tolerance = opt.gradient_tolerance;
        Ok(p)
    }

    /// Design problem of the `optimize` subcommand; uses the first window kind.
    pub fn design_problem(&self) -> Result<DesignProblem> {
        let opt = self
            .optimize
            .as_ref()
            .ok_or_else(|| Error::Config("missing [optimize] section".into()))?;
        self.design_problem_from(opt)
    }
}
