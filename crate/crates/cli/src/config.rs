//! The run configuration: defaults, a TOML file, then `--section.key=value`
//! overrides, applied in that order.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use diraclab_core::data::{DataRecipe, DataSpec};
use diraclab_core::experiments::CrossConfig;
use diraclab_core::norms::estimates::{EnsembleSpec, FlowConfig};
use diraclab_core::norms::maximal::MaximalConfig;
use diraclab_core::partialwave::BoundaryClosure;
use diraclab_core::potential::PotentialSpec;
use diraclab_core::propagator::{CubicNonlinearity, Scheme};
use diraclab_core::{Error, Result};

pub const OUTPUT_ROOT_VAR: &str = "DIRACLAB_OUTPUT_ROOT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    VerifyAlgebra,
    Simulate,
    VerifyEstimate,
    CrossValidate,
    Report,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::VerifyAlgebra => "verify-algebra",
            Command::Simulate => "simulate",
            Command::VerifyEstimate => "verify-estimate",
            Command::CrossValidate => "cross-validate",
            Command::Report => "report",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub n: usize,
    pub half_width: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        Self { n: 64, half_width: 16.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolutionSection {
    pub dt: f64,
    pub t_final: f64,
    pub scheme: Scheme,
    /// Number of equal record intervals on `[0, T]`.
    pub records: usize,
    /// Explicit record times; overrides `records` when non-empty.
    pub record_times: Vec<f64>,
    pub snapshots: bool,
    /// Exit with a verification failure if `max H1 / initial H1` exceeds this.
    pub max_h1_growth: Option<f64>,
}

impl Default for EvolutionSection {
    fn default() -> Self {
        Self {
            dt: 0.01,
            t_final: 1.0,
            scheme: Scheme::Strang,
            records: 10,
            record_times: Vec::new(),
            snapshots: false,
            max_h1_growth: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    #[serde(rename = "3d")]
    ThreeD,
    Radial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub kind: SolverKind,
    pub radial_dr: f64,
    pub radial_r_max: f64,
    pub closure: BoundaryClosure,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            kind: SolverKind::ThreeD,
            radial_dr: 1.0 / 32.0,
            radial_r_max: 32.0,
            closure: BoundaryClosure::ZeroExtension,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimateSection {
    /// An estimate name, or `maximal` for the radial maximal-function check.
    pub id: String,
}

impl Default for EstimateSection {
    fn default() -> Self {
        Self { id: "homdir".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CrossSection {
    #[serde(flatten)]
    pub config: CrossConfig,
    /// Largest acceptable final discrepancy.
    pub threshold: f64,
    /// Also run one joint dyadic refinement, which must decrease the
    /// discrepancy and meet a ten times tighter threshold.
    pub refine: bool,
}

impl Default for CrossSection {
    fn default() -> Self {
        Self {
            config: CrossConfig::default(),
            threshold: 1e-3,
            refine: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlgebraSection {
    pub fields: usize,
    pub n: usize,
    pub seed: u64,
    pub dirac_tolerance: f64,
    /// CSV of `name,row,col,re,im` replacing the standard matrices.
    pub fixture: Option<PathBuf>,
}

impl Default for AlgebraSection {
    fn default() -> Self {
        Self {
            fields: 50,
            n: 32,
            seed: 1,
            dirac_tolerance: 1e-12,
            fixture: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ReportSection {
    /// Directory to re-summarise; defaults to the output directory.
    pub input: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<Command>,
    pub grid: GridSection,
    pub evolution: EvolutionSection,
    pub solver: SolverSection,
    pub potential: PotentialSpec,
    pub nonlinearity: CubicNonlinearity,
    pub data: DataSpec,
    pub ensemble: EnsembleSpec,
    pub estimate: EstimateSection,
    pub flow: FlowConfig,
    pub cross: CrossSection,
    pub maximal: MaximalConfig,
    pub algebra: AlgebraSection,
    pub report: ReportSection,
    pub output: OutputSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: None,
            grid: GridSection::default(),
            evolution: EvolutionSection::default(),
            solver: SolverSection::default(),
            potential: PotentialSpec::zero(),
            nonlinearity: CubicNonlinearity::None,
            data: DataSpec::new(DataRecipe::Gaussian {
                amplitude: 1.0,
                width: 1.5,
                center: [0.0; 3],
                spinor: None,
            }),
            ensemble: EnsembleSpec::default(),
            estimate: EstimateSection::default(),
            flow: FlowConfig::default(),
            cross: CrossSection::default(),
            maximal: MaximalConfig::default(),
            algebra: AlgebraSection::default(),
            report: ReportSection::default(),
            output: OutputSection::default(),
        }
    }
}

/// Keys naming the variant of an internally tagged table.
const TAGS: [&str; 2] = ["family", "kind"];

fn config_error(msg: impl Into<String>) -> Error {
    Error::InvalidConfig(msg.into())
}

/// Merges `over` into `base`. A table whose tag changes is replaced, not
/// merged, so fields of the old variant do not leak into the new one.
fn merge(base: &mut Table, over: Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(Value::Table(b)), Value::Table(o)) => {
                let retagged = TAGS
                    .iter()
                    .any(|t| matches!((b.get(*t), o.get(*t)), (Some(x), Some(y)) if x != y));
                if retagged {
                    *b = o;
                } else {
                    merge(b, o);
                }
            }
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// A TOML literal, or the raw text as a string.
fn parse_value(raw: &str) -> Value {
    match format!("v = {raw}").parse::<Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| Value::String(raw.into())),
        Err(_) => Value::String(raw.into()),
    }
}

/// Turns `section.key=value` into a nested table.
pub fn override_table(spec: &str) -> Result<Table> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| config_error(format!("override {spec:?} is not of the form --section.key=value")))?;
    let keys: Vec<&str> = path.split('.').collect();
    if keys.len() < 2 || keys.iter().any(|k| k.is_empty()) {
        return Err(config_error(format!("override key {path:?} must be section.key")));
    }
    let mut value = parse_value(raw);
    for k in keys.iter().rev() {
        let mut t = Table::new();
        t.insert((*k).to_string(), value);
        value = Value::Table(t);
    }
    match value {
        Value::Table(t) => Ok(t),
        _ => unreachable!(),
    }
}

impl RunConfig {
    /// Defaults, then `file`, then `overrides` (each `section.key=value`).
    pub fn load(file: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut table = Table::try_from(RunConfig::default())
            .map_err(|e| config_error(format!("cannot serialise defaults: {e}")))?;
        if let Some(path) = file {
            let text = std::fs::read_to_string(path)
                .map_err(|e| config_error(format!("cannot read {}: {e}", path.display())))?;
            let t: Table = text
                .parse()
                .map_err(|e| config_error(format!("{}: {e}", path.display())))?;
            merge(&mut table, t);
        }
        for o in overrides {
            merge(&mut table, override_table(o)?);
        }
        table
            .try_into()
            .map_err(|e: toml::de::Error| config_error(e.message().to_string()))
    }

    /// Hash of everything that affects results; the output location is
    /// excluded so relocated re-runs hash identically.
    pub fn fingerprint(&self) -> String {
        let mut c = self.clone();
        c.output = OutputSection::default();
        c.report = ReportSection::default();
        diraclab_core::fingerprint::fingerprint(&c)
    }

    /// `output.dir`, placed under the output root when it is relative and
    /// the root variable is set.
    pub fn output_dir(&self) -> PathBuf {
        match std::env::var_os(OUTPUT_ROOT_VAR) {
            Some(root) if self.output.dir.is_relative() => PathBuf::from(root).join(&self.output.dir),
            _ => self.output.dir.clone(),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).unwrap_or_default()
    }
}
