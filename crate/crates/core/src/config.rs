//! Model specification files (TOML).
//!
//! ```toml
//! response = "y"
//! family = "normal"
//! covariates = ["x1", "z"]        # optional; defaults to every non-response column
//! propensity = ["x1"]
//! mean = ["1", "x1", "x1^2"]
//! mean_link = "identity"          # or "log"
//! logvar = ["1", "x1"]
//! instrument = "z"                # optional
//!
//! [[recode]]
//! column = "x1"
//! from = 99
//! to = 6
//! ```
//!
//! An optional `[scenario]` table turns the file into a custom simulation
//! scenario with one covariate law per declared covariate.

use std::path::Path;

use serde::Deserialize;

use crate::basis::Basis;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::{MeanLink, ModelSpec, NormalBasis, OutcomeModel};
use crate::simulation::{CovariateSampler, ScenarioName, ScenarioSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    #[default]
    Normal,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Recode {
    pub column: String,
    pub from: f64,
    pub to: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub n: usize,
    pub alpha_star: f64,
    pub beta: Vec<f64>,
    pub gamma: f64,
    pub xi: Vec<f64>,
    pub covariates: Vec<CovariateSampler>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default = "default_response")]
    pub response: String,
    #[serde(default)]
    pub family: Family,
    pub covariates: Option<Vec<String>>,
    pub propensity: Vec<String>,
    pub mean: Vec<String>,
    #[serde(default)]
    pub mean_link: MeanLink,
    #[serde(default = "default_logvar")]
    pub logvar: Vec<String>,
    pub instrument: Option<String>,
    #[serde(default)]
    pub recode: Vec<Recode>,
    pub scenario: Option<ScenarioConfig>,
}

fn default_response() -> String {
    "y".into()
}

fn default_logvar() -> Vec<String> {
    vec!["1".into()]
}

fn line_of(text: &str, offset: usize) -> usize {
    1 + text[..offset.min(text.len())].bytes().filter(|b| *b == b'\n').count()
}

impl ModelConfig {
    pub fn from_toml_str(text: &str, source: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Parse {
            path: source.to_string(),
            line: e.span().map(|s| line_of(text, s.start)).unwrap_or(0),
            message: e.message().to_string(),
        })?;
        if cfg.mean.is_empty() {
            return Err(Error::Parse {
                path: source.into(),
                line: 0,
                message: "mean basis must list at least one term".into(),
            });
        }
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text, &path.display().to_string())
    }

    /// Declared covariate columns, falling back to the data header.
    pub fn columns(&self, data_columns: Option<&[String]>) -> Result<Vec<String>> {
        match (&self.covariates, data_columns) {
            (Some(c), _) => Ok(c.clone()),
            (None, Some(d)) => Ok(d.to_vec()),
            (None, None) => Err(Error::Spec("no covariate columns declared".into())),
        }
    }

    /// Model over `columns`; every term and name must reference a declared column.
    pub fn build(&self, columns: &[String]) -> Result<ModelSpec> {
        let index = |name: &str, what: &str| {
            columns
                .iter()
                .position(|c| c == name)
                .ok_or_else(|| Error::Spec(format!("{what} '{name}' is not a declared covariate")))
        };
        let propensity = self
            .propensity
            .iter()
            .map(|p| index(p, "propensity covariate"))
            .collect::<Result<Vec<_>>>()?;
        let outcome = match self.family {
            Family::Normal => OutcomeModel::Normal(NormalBasis::new(
                Basis::parse(&self.mean, columns)?,
                self.mean_link,
                Basis::parse(&self.logvar, columns)?,
            )),
        };
        let mut spec = ModelSpec::new(columns.to_vec(), propensity, outcome);
        if let Some(z) = &self.instrument {
            spec = spec.with_instrument(index(z, "instrument")?);
        }
        Ok(spec)
    }

    /// Apply the recode table, then keep the declared covariates in declared order.
    pub fn prepare(&self, mut data: Dataset) -> Result<(Dataset, ModelSpec)> {
        for r in &self.recode {
            let j = data
                .column_index(&r.column)
                .ok_or_else(|| Error::Spec(format!("recode column '{}' is not a data column", r.column)))?;
            data.recode(j, r.from, r.to);
        }
        let columns = self.columns(Some(data.columns()))?;
        let data = data.project(&columns)?;
        let spec = self.build(&columns)?;
        Ok((data, spec))
    }

    pub fn scenario(&self) -> Result<ScenarioSpec> {
        let sc = self
            .scenario
            .as_ref()
            .ok_or_else(|| Error::Spec("model file has no [scenario] table".into()))?;
        let columns = self.columns(None)?;
        let scenario = ScenarioSpec {
            name: ScenarioName::Custom,
            covariates: sc.covariates.clone(),
            model: self.build(&columns)?,
            alpha_star: sc.alpha_star,
            beta: sc.beta.clone(),
            gamma: sc.gamma,
            xi: sc.xi.clone(),
            sigma2: f64::NAN,
            n: sc.n,
        };
        scenario.validate()?;
        Ok(scenario)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MODEL_1A: &str = r#"
response = "y"
covariates = ["x1"]
propensity = ["x1"]
mean = ["1", "x1", "x1^2"]
logvar = ["1", "x1"]
"#;

    #[test]
    fn parses_quadratic_spec() {
        let cfg = ModelConfig::from_toml_str(MODEL_1A, "m.toml").unwrap();
        let spec = cfg.build(&cfg.columns(None).unwrap()).unwrap();
        assert_eq!(spec.d_theta(), 2 + 1 + 3 + 2);
        assert_eq!(spec.outcome.as_normal().unwrap().mean.max_degree(), 2);
    }

    #[test]
    fn undeclared_term_is_rejected() {
        let text = MODEL_1A.replace("\"x1^2\"", "\"x2^2\"");
        let cfg = ModelConfig::from_toml_str(&text, "m.toml").unwrap();
        assert!(matches!(cfg.build(&cfg.columns(None).unwrap()), Err(Error::Spec(_))));
    }

    #[test]
    fn syntax_errors_carry_line() {
        let err = ModelConfig::from_toml_str("response = \"y\"\npropensity = [\n", "bad.toml").unwrap_err();
        match err {
            Error::Parse { path, line, .. } => {
                assert_eq!(path, "bad.toml");
                assert!(line >= 2);
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn custom_scenario() {
        let text = format!(
            "{MODEL_1A}\n[scenario]\nn = 100\nalpha_star = -2.0\nbeta = [-0.3]\ngamma = 0.4\nxi = [1.0, 0.5, 0.3, 0.0, 0.2]\ncovariates = [{{ kind = \"normal\", mean = 0.0, sd = 1.0 }}]\n"
        );
        let cfg = ModelConfig::from_toml_str(&text, "m.toml").unwrap();
        let sc = cfg.scenario().unwrap();
        assert_eq!(sc.n, 100);
        assert_eq!(sc.name, ScenarioName::Custom);
    }
}
