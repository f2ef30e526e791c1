//! Run configuration, read from a TOML document.
//!
//! Every key is optional; missing keys take the defaults below. Unknown keys
//! are rejected.
//!
//! ```toml
//! [model]
//! transverse_dim = 1        # d
//! transverse_radius = 4     # L, fiber {-L..L}^d
//! length = 16               # N
//! disorder_width = 1.0      # W
//! hopping = "identity"      # or "random"
//! seed = 1
//!
//! [grid]
//! # e_min / e_max default to -(3Λ+2) / 3Λ+2 with Λ the a priori bound
//! points = 200
//!
//! [quadrature]
//! method = "lift"           # or "panels"
//! # e_cut defaults to 10Λ+10
//! panels = 512
//! rule = "gauss-legendre-4" # or "simpson"
//! tail = "asymptotic"       # or "none"
//! budget = 0.005
//!
//! [run]
//! realizations = 20         # ensemble size for `sweep`
//! log_level = "info"
//!
//! [sweep]
//! axis = "N"                # or "L"
//! values = [4, 8, 16, 32]
//!
//! [output]
//! # path = "report.csv"     # stdout when absent
//! format = "csv"            # or "json"
//! ```

use std::path::PathBuf;

use pruefer_core::flow::{
    linspace, QuadratureRule, QuadratureSpec, RotationMethod, SweepAxis, TailModel, DEFAULT_BUDGET,
};
use pruefer_core::model::{HoppingKind, ModelParams};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("config parse error{}: {message}", .line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Parse {
        line: Option<usize>,
        message: String,
    },
    #[error("invalid {section}: {message}")]
    Validation {
        section: &'static str,
        message: String,
    },
}

impl ConfigError {
    fn invalid(section: &'static str, message: impl Into<String>) -> Self {
        Self::Validation {
            section,
            message: message.into(),
        }
    }

    /// Name of the violated invariant for validation errors.
    pub fn section(&self) -> Option<&'static str> {
        match self {
            Self::Validation { section, .. } => Some(section),
            Self::Parse { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Hopping {
    Identity,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Lift,
    Panels,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rule {
    #[serde(rename = "gauss-legendre-4")]
    GaussLegendre4,
    #[serde(rename = "simpson")]
    Simpson,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Tail {
    Asymptotic,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
pub enum Axis {
    #[serde(rename = "N")]
    #[value(name = "N", alias = "n")]
    Length,
    #[serde(rename = "L")]
    #[value(name = "L", alias = "l")]
    Radius,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub transverse_dim: usize,
    pub transverse_radius: usize,
    pub length: usize,
    pub disorder_width: f64,
    pub hopping: Hopping,
    pub seed: u64,
}

impl Default for ModelSection {
    fn default() -> Self {
        let p = ModelParams::default();
        Self {
            transverse_dim: p.transverse_dim,
            transverse_radius: p.transverse_radius,
            length: p.length,
            disorder_width: p.disorder_width,
            hopping: Hopping::Identity,
            seed: p.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub e_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub e_max: Option<f64>,
    pub points: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            e_min: None,
            e_max: None,
            points: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureSection {
    pub method: Method,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub e_cut: Option<f64>,
    pub panels: usize,
    pub rule: Rule,
    pub tail: Tail,
    pub budget: f64,
}

impl Default for QuadratureSection {
    fn default() -> Self {
        Self {
            method: Method::Lift,
            e_cut: None,
            panels: 512,
            rule: Rule::GaussLegendre4,
            tail: Tail::Asymptotic,
            budget: DEFAULT_BUDGET,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub realizations: usize,
    pub log_level: String,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            realizations: 20,
            log_level: "info".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub axis: Axis,
    pub values: Vec<usize>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            axis: Axis::Length,
            values: vec![4, 8, 16, 32],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    pub format: Format,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            path: None,
            format: Format::Csv,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSection,
    pub grid: GridSection,
    pub quadrature: QuadratureSection,
    pub run: RunSection,
    pub sweep: SweepSection,
    pub output: OutputSection,
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let config: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Parse {
        line: e.span().map(|s| text[..s.start].matches('\n').count() + 1),
        message: e.message().to_string(),
    })?;
    config.validate()?;
    Ok(config)
}

impl RunConfig {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn model_params(&self) -> ModelParams {
        let m = &self.model;
        ModelParams {
            transverse_dim: m.transverse_dim,
            transverse_radius: m.transverse_radius,
            length: m.length,
            disorder_width: m.disorder_width,
            hopping: match m.hopping {
                Hopping::Identity => HoppingKind::Identity,
                Hopping::Random => HoppingKind::RandomInvertible,
            },
            seed: m.seed,
            ..ModelParams::default()
        }
    }

    pub fn quadrature_spec(&self) -> QuadratureSpec {
        let q = &self.quadrature;
        QuadratureSpec {
            method: match q.method {
                Method::Lift => RotationMethod::Lift,
                Method::Panels => RotationMethod::Panels,
            },
            e_cut: q.e_cut,
            panels: q.panels,
            rule: match q.rule {
                Rule::GaussLegendre4 => QuadratureRule::GaussLegendre4,
                Rule::Simpson => QuadratureRule::Simpson,
            },
            tail: match q.tail {
                Tail::Asymptotic => TailModel::Asymptotic,
                Tail::None => TailModel::None,
            },
        }
    }

    pub fn sweep_axis(&self) -> SweepAxis {
        match self.sweep.axis {
            Axis::Length => SweepAxis::Length,
            Axis::Radius => SweepAxis::Radius,
        }
    }

    /// `Λ` bound used for grid defaults and the cutoff, known before sampling.
    pub fn lambda(&self) -> f64 {
        self.model_params().lambda_a_priori()
    }

    pub fn energy_range(&self) -> (f64, f64) {
        let r = 3.0 * self.lambda() + 2.0;
        (self.grid.e_min.unwrap_or(-r), self.grid.e_max.unwrap_or(r))
    }

    pub fn energies(&self) -> Vec<f64> {
        let (lo, hi) = self.energy_range();
        linspace(lo, hi, self.grid.points)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.model_params()
            .validate()
            .map_err(|e| ConfigError::invalid("model", e.to_string()))?;
        let (lo, hi) = self.energy_range();
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(ConfigError::invalid(
                "grid",
                format!("need e_min < e_max, got {lo} and {hi}"),
            ));
        }
        if self.grid.points < 2 {
            return Err(ConfigError::invalid("grid", "need at least 2 points"));
        }
        let spec = self.quadrature_spec();
        let quad = spec
            .resolve(self.lambda())
            .map_err(|e| ConfigError::invalid("quadrature", e.to_string()))?;
        if lo < -quad.e_cut || hi > quad.e_cut {
            return Err(ConfigError::invalid(
                "grid",
                format!(
                    "[{lo}, {hi}] is not inside [-E_cut, E_cut] with E_cut = {}",
                    quad.e_cut
                ),
            ));
        }
        if !(self.quadrature.budget >= 0.0) {
            return Err(ConfigError::invalid(
                "quadrature",
                "budget must be non-negative",
            ));
        }
        if self.run.realizations == 0 {
            return Err(ConfigError::invalid(
                "run",
                "realizations must be at least 1",
            ));
        }
        if self.run.log_level.parse::<log::LevelFilter>().is_err() {
            return Err(ConfigError::invalid(
                "run",
                format!("unknown log level {:?}", self.run.log_level),
            ));
        }
        let v = &self.sweep.values;
        if v.is_empty() || v.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ConfigError::invalid(
                "sweep",
                "values must be non-empty and strictly ascending",
            ));
        }
        Ok(())
    }
}
