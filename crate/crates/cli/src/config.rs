//! Experiment configuration and the typed parameter blocks of each subcommand.

use crate::error::CliError;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::fmt;
use std::path::{Path, PathBuf};
use wicklab_core::bichar::FlowOptions;
use wicklab_core::fields::GridSpec;
use wicklab_core::normal_op::CountConvention;
use wicklab_core::propagators::{PrescriptionKind, ZeroModePolicy};
use wicklab_core::semilinear::{PicardOptions, WeightLabels};
use wicklab_core::weights::{
    FeynmanOrderSpec, OrderRule, ProblemSignature, ProductIntegralOptions, RuleId, RuleParams, SweepOptions,
};

/// Subcommand identifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SubcommandId {
    Roots,
    Spectrum,
    Weights,
    Flow,
    Propagate,
    Wick,
    Picard,
    ProductCheck,
}

impl SubcommandId {
    pub const ALL: [SubcommandId; 8] = [
        SubcommandId::Roots,
        SubcommandId::Spectrum,
        SubcommandId::Weights,
        SubcommandId::Flow,
        SubcommandId::Propagate,
        SubcommandId::Wick,
        SubcommandId::Picard,
        SubcommandId::ProductCheck,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SubcommandId::Roots => "roots",
            SubcommandId::Spectrum => "spectrum",
            SubcommandId::Weights => "weights",
            SubcommandId::Flow => "flow",
            SubcommandId::Propagate => "propagate",
            SubcommandId::Wick => "wick",
            SubcommandId::Picard => "picard",
            SubcommandId::ProductCheck => "product-check",
        }
    }
}

impl fmt::Display for SubcommandId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

fn empty_object() -> Value {
    Value::Object(Default::default())
}

/// One experiment: a subcommand with its parameter block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub subcommand: SubcommandId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default = "empty_object")]
    pub params: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(subcommand: SubcommandId, params: Value) -> Self {
        Self { subcommand, seed: None, grid: None, params, out: None }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn with_grid(mut self, grid: GridSpec) -> Self {
        self.grid = Some(grid);
        self
    }

    pub fn with_out(mut self, out: impl Into<PathBuf>) -> Self {
        self.out = Some(out.into());
        self
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configs serialize")
    }

    /// Seed used by every random draw of the run.
    pub fn effective_seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    fn require_grid(&self) -> Result<GridSpec, CliError> {
        let g = self
            .grid
            .clone()
            .ok_or_else(|| CliError::Config(format!("subcommand {} needs a grid", self.subcommand)))?;
        g.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(g)
    }

    fn params<T: serde::de::DeserializeOwned>(&self) -> Result<T, CliError> {
        serde_json::from_value(self.params.clone())
            .map_err(|e| CliError::Config(format!("{} params: {e}", self.subcommand)))
    }

    /// Parses the parameter block for the selected subcommand.
    pub fn parse(&self) -> Result<Experiment, CliError> {
        if !self.params.is_object() {
            return Err(CliError::Config("params must be a JSON object".into()));
        }
        Ok(match self.subcommand {
            SubcommandId::Roots => Experiment::Roots(self.params()?),
            SubcommandId::Spectrum => Experiment::Spectrum(self.params()?),
            SubcommandId::Weights => Experiment::Weights(self.params()?),
            SubcommandId::Flow => Experiment::Flow(self.params()?),
            SubcommandId::Propagate => Experiment::Propagate(self.require_grid()?, self.params()?),
            SubcommandId::Wick => Experiment::Wick(self.require_grid()?, self.params()?),
            SubcommandId::Picard => Experiment::Picard(self.require_grid()?, self.params()?),
            SubcommandId::ProductCheck => Experiment::ProductCheck(self.params()?),
        })
    }
}

/// Validated experiment.
#[derive(Debug, Clone, PartialEq)]
pub enum Experiment {
    Roots(RootsParams),
    Spectrum(SpectrumParams),
    Weights(WeightsParams),
    Flow(FlowParams),
    Propagate(GridSpec, PropagateParams),
    Wick(GridSpec, WickParams),
    Picard(GridSpec, PicardParams),
    ProductCheck(ProductCheckParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RootsParams {
    pub n: u64,
    #[serde(rename = "K", alias = "k_max")]
    pub k_max: u64,
}

fn default_weight_samples() -> Vec<f64> {
    (-14..=14).map(|j| j as f64 * 0.25).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumParams {
    pub n: u64,
    #[serde(rename = "K", alias = "k_max")]
    pub k_max: u64,
    /// Weights `l` of the index table.
    #[serde(default = "default_weight_samples")]
    pub weights: Vec<f64>,
    #[serde(default)]
    pub convention: CountConvention,
}

/// Flow monotonicity check of a constructed order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonotonicityParams {
    pub traces: usize,
    pub t_total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightsParams {
    Orders {
        signature: ProblemSignature,
        rule: OrderRule,
    },
    Semilinear {
        n: u32,
        p: u32,
        #[serde(default)]
        labels: Option<WeightLabels>,
    },
    FeynmanOrder {
        n: u32,
        spec: FeynmanOrderSpec,
        #[serde(default)]
        monotonicity: Option<MonotonicityParams>,
    },
    Predict {
        rule: RuleId,
        params: RuleParams,
    },
}

fn default_flow_time() -> f64 {
    100.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowParams {
    pub n: usize,
    pub count: usize,
    /// Flow parameter length in each direction.
    #[serde(default = "default_flow_time")]
    pub t_total: f64,
    #[serde(default)]
    pub options: FlowOptions,
    /// Write one CSV per trace.
    #[serde(default)]
    pub traces: bool,
}

fn one() -> f64 {
    1.0
}

/// Source term on the run grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceSpec {
    Gaussian {
        #[serde(default)]
        center: Option<Vec<f64>>,
        width: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// Complex Gaussian field with wavenumbers `|k_j| <= band * N_j / 2`,
    /// scaled to `L^2` norm `amplitude`.
    Random {
        band: f64,
        /// Added to the run seed.
        #[serde(default)]
        seed_offset: u64,
        #[serde(default = "one")]
        amplitude: f64,
    },
    PlaneWave {
        k: Vec<i64>,
        #[serde(default = "one")]
        amplitude: f64,
    },
}

/// Cone leakage diagnostic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConeParams {
    /// Defaults to the Gaussian centre, else the origin.
    #[serde(default)]
    pub center: Option<Vec<f64>>,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropagateParams {
    pub source: SourceSpec,
    pub prescription: PrescriptionKind,
    /// Defaults to `10 (2 pi / L_min)^2`.
    #[serde(default)]
    pub eps: Option<f64>,
    #[serde(default)]
    pub zero_mode: ZeroModePolicy,
    /// Width of the smooth window applied to the source.
    #[serde(default)]
    pub window: Option<f64>,
    #[serde(default)]
    pub cone: Option<ConeParams>,
    /// Write the solution samples.
    #[serde(default)]
    pub dump: bool,
}

/// Geometric path `theta_j = direction * start * (end / start)^(j / (steps - 1))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WickPath {
    pub label: String,
    /// `(re, im)`, normalized before use.
    pub direction: [f64; 2],
    pub start: f64,
    pub end: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WickParams {
    pub f: SourceSpec,
    pub g: SourceSpec,
    /// Removes modes with `|p(zeta)| <= tol |zeta|^2` from both fields.
    #[serde(default)]
    pub off_characteristic: Option<f64>,
    /// Tolerance of the near-characteristic energy report.
    #[serde(default = "default_near_tol")]
    pub near_tol: f64,
    pub paths: Vec<WickPath>,
}

fn default_near_tol() -> f64 {
    0.1
}

fn series_options() -> PicardOptions {
    PicardOptions { max_iter: 40, tol: 1e-15, residual_tol: 1.0 }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesParams {
    pub order: usize,
    pub lambdas: Vec<f64>,
    #[serde(default = "series_options")]
    pub options: PicardOptions,
}

fn default_power() -> u32 {
    3
}

fn default_prescription() -> PrescriptionKind {
    PrescriptionKind::Feynman
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PicardParams {
    #[serde(default = "default_power")]
    pub p: u32,
    pub lambda: f64,
    pub source: SourceSpec,
    #[serde(default = "default_prescription")]
    pub prescription: PrescriptionKind,
    #[serde(default)]
    pub eps: Option<f64>,
    #[serde(default)]
    pub options: PicardOptions,
    #[serde(default)]
    pub labels: Option<WeightLabels>,
    #[serde(default)]
    pub smallness_bound: Option<f64>,
    #[serde(default)]
    pub series: Option<SeriesParams>,
    /// Write the final iterate and the series coefficients.
    #[serde(default)]
    pub dump: bool,
}

/// Sweep settings; the seed comes from the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepParams {
    pub dims: Vec<usize>,
    pub rules: Vec<RuleId>,
    pub offset: f64,
    pub draws: usize,
    pub slack: [f64; 2],
}

impl Default for SweepParams {
    fn default() -> Self {
        let d = SweepOptions::default();
        Self { dims: d.dims, rules: d.rules, offset: d.offset, draws: d.draws, slack: d.slack }
    }
}

impl SweepParams {
    pub fn options(&self, seed: u64) -> SweepOptions {
        SweepOptions {
            dims: self.dims.clone(),
            rules: self.rules.clone(),
            seed,
            offset: self.offset,
            draws: self.draws,
            slack: self.slack,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProductCheckParams {
    Sweep {
        #[serde(default)]
        sweep: SweepParams,
    },
    Integral {
        rule: RuleId,
        params: RuleParams,
        dim: usize,
        /// Defaults to the sweep quadrature for `dim` with the rule's cone axes.
        #[serde(default)]
        quadrature: Option<ProductIntegralOptions>,
    },
}
