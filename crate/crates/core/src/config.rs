//! TOML run configuration for the CLI.
//!
//! One file drives every subcommand; each reads the sections it needs and
//! ignores the rest. Unknown keys are rejected everywhere so a typo cannot
//! silently fall back to a default. The `[harness]` table is a partial
//! override: its keys are merged over the chosen suite's default campaign.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::harness::{EnsembleConfig, GridSpec, OperatorSpec, PairSpec, QSpec, Suite, WeightSpec};
use crate::jmethod::{JNormMethod, SolverConfig, ThetaQ};
use crate::pairs::CouplePair;
use crate::weights::WeightFamily;

/// `[tq]` section.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TqConfig {
    pub theta: f64,
    /// A number, or the string `"inf"`.
    pub q: QSpec,
}

impl TqConfig {
    pub fn build(&self) -> Result<ThetaQ> {
        self.q.build(self.theta)
    }
}

/// `[jnorm]` section: the element and the method for `realinterp jnorm`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct JnormSection {
    /// Vector literal, length = pair dimension.
    pub f: Vec<f64>,
    /// `"fundamental"`, `"solver"`, or `"oracle"`.
    pub method: String,
    pub solver_iters: usize,
}

impl Default for JnormSection {
    fn default() -> Self {
        Self {
            f: Vec::new(),
            method: "solver".into(),
            solver_iters: 6000,
        }
    }
}

impl JnormSection {
    pub fn method(&self) -> Result<JNormMethod> {
        match self.method.as_str() {
            "fundamental" => Ok(JNormMethod::Fundamental),
            "solver" => Ok(JNormMethod::Solver),
            "oracle" => Ok(JNormMethod::Oracle),
            other => Err(Error::Config(format!(
                "jnorm.method: unknown method {other:?}; expected fundamental, solver, or oracle"
            ))),
        }
    }

    pub fn budget(&self) -> SolverConfig {
        SolverConfig {
            max_iters: self.solver_iters,
            tolerance: 0.0,
            patience: 0,
        }
    }
}

/// `[commute]` section: the element for `realinterp commute`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CommuteSection {
    pub f: Vec<f64>,
    /// Commutator order (1 = `[T, Omega_w]`).
    pub order: u32,
    /// Seed for `operator.kind = "random"`.
    pub seed: u64,
    pub solver_iters: usize,
    pub burn_in: f64,
}

impl Default for CommuteSection {
    fn default() -> Self {
        Self {
            f: Vec::new(),
            order: 1,
            seed: 7,
            solver_iters: 6000,
            burn_in: crate::weights::DEFAULT_BURN_IN,
        }
    }
}

/// `[output]` section.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: ".".into() }
    }
}

/// The whole config file.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub grid: Option<GridSpec>,
    pub tq: Option<TqConfig>,
    pub pair: Option<PairSpec>,
    pub operator: Option<OperatorSpec>,
    pub weight: Option<WeightSpec>,
    pub jnorm: Option<JnormSection>,
    pub commute: Option<CommuteSection>,
    /// Partial [`EnsembleConfig`] override for `verify`.
    pub harness: Option<toml::Value>,
    pub output: Option<OutputSection>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Grid, defaulting to the wide exact-tail reference window.
    pub fn grid(&self) -> Result<Grid> {
        self.grid
            .unwrap_or(GridSpec {
                t_min: 1e-6,
                t_max: 1e6,
                n_nodes: 1201,
            })
            .build()
    }

    pub fn tq(&self) -> Result<ThetaQ> {
        match &self.tq {
            Some(tq) => tq.build(),
            None => ThetaQ::sup(0.5),
        }
    }

    pub fn pair(&self) -> Result<CouplePair> {
        match &self.pair {
            Some(p) => p.build(),
            None => CouplePair::new(
                crate::pairs::NormSpec::unweighted_l1(1),
                crate::pairs::NormSpec::unweighted_l1(1),
            ),
        }
    }

    pub fn weight(&self) -> Result<WeightFamily> {
        self.weight.clone().unwrap_or(WeightSpec::Log).build()
    }

    pub fn operator(&self) -> OperatorSpec {
        self.operator.clone().unwrap_or(OperatorSpec::Random)
    }

    pub fn output_dir(&self) -> String {
        self.output.clone().unwrap_or_default().dir
    }

    /// The campaign for `verify <suite>`: suite defaults with the
    /// `[harness]` table's keys merged over them.
    pub fn ensemble(&self, suite: Suite) -> Result<EnsembleConfig> {
        let defaults = suite.defaults();
        let Some(over) = &self.harness else {
            return Ok(defaults);
        };
        let mut base = toml::Value::try_from(&defaults)
            .map_err(|e| Error::Config(format!("harness defaults: {e}")))?;
        let (toml::Value::Table(base_table), toml::Value::Table(over_table)) = (&mut base, over)
        else {
            return Err(Error::Config("[harness] must be a table".into()));
        };
        for (key, value) in over_table {
            base_table.insert(key.clone(), value.clone());
        }
        base.try_into()
            .map_err(|e| Error::Config(format!("[harness]: {e}")))
    }
}
