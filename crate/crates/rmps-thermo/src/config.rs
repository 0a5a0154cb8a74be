//! Experiment configuration: JSON schema, validation, and hashing.

use serde::{Deserialize, Serialize};

use rmps_core::estimator::plan_samples;
use rmps_core::hamiltonian::{default_applications, FilterSpec, NnModel, TrotterSpec};
use rmps_core::sampler::RmpsSpec;

use crate::{config_err, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    MomentsCheck,
    Trace,
    VarianceScan,
    Magnetization,
    #[serde(alias = "thermal-expectation")]
    Thermal,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::MomentsCheck => "moments-check",
            ExperimentKind::Trace => "trace",
            ExperimentKind::VarianceScan => "variance-scan",
            ExperimentKind::Magnetization => "magnetization",
            ExperimentKind::Thermal => "thermal",
        }
    }

    pub fn from_str(s: &str) -> Option<Self> {
        match s {
            "moments-check" => Some(Self::MomentsCheck),
            "trace" => Some(Self::Trace),
            "variance-scan" => Some(Self::VarianceScan),
            "magnetization" => Some(Self::Magnetization),
            "thermal" | "thermal-expectation" => Some(Self::Thermal),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Ising,
    Heisenberg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObservableKind {
    Identity,
    Magnetization,
    HSquared,
}

/// Microcanonical filter configuration. `applications` overrides the window
/// policy when set (must be even).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterConfig {
    pub energy_per_site: f64,
    #[serde(default = "default_r_factor")]
    pub r_factor: f64,
    /// The surviving energy window is window_scale·√N; the √N scaling keeps
    /// the filtered energy density size-independent.
    #[serde(default = "default_window_scale")]
    pub window_scale: f64,
    #[serde(default)]
    pub applications: Option<u32>,
}

fn default_r_factor() -> f64 {
    1.05
}

fn default_window_scale() -> f64 {
    1.0
}

/// The experiment configuration; unknown fields are rejected so typos fail
/// fast at validation time.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub model: Option<ModelKind>,
    pub num_sites: usize,
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub lambda_grid: Option<Vec<f64>>,
    #[serde(default)]
    pub chi: Option<usize>,
    #[serde(default)]
    pub chi_list: Option<Vec<usize>>,
    #[serde(default)]
    pub num_samples: Option<u64>,
    #[serde(default)]
    pub m_list: Option<Vec<u64>>,
    #[serde(default)]
    pub runs: Option<u32>,
    #[serde(default)]
    pub filter: Option<FilterConfig>,
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default)]
    pub trotter_steps: Option<u32>,
    #[serde(default)]
    pub observable: Option<ObservableKind>,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub delta: Option<f64>,
    pub master_seed: u64,
    #[serde(default)]
    pub chi_max: Option<usize>,
    #[serde(default)]
    pub cutoff: Option<f64>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(config_err)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// FNV-1a over the canonical serialized form.
    pub fn hash(&self) -> u64 {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        let mut h: u64 = 0xcbf29ce484222325;
        for b in bytes {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        h
    }

    pub fn model(&self) -> CliResult<NnModel> {
        let lambda = self.lambda.unwrap_or(0.0);
        match self.model {
            Some(ModelKind::Ising) => Ok(NnModel::Ising { lambda }),
            Some(ModelKind::Heisenberg) => Ok(NnModel::Heisenberg { lambda }),
            None => Err(config_err("this experiment needs a `model`")),
        }
    }

    pub fn model_with_lambda(&self, lambda: f64) -> CliResult<NnModel> {
        match self.model {
            Some(ModelKind::Ising) => Ok(NnModel::Ising { lambda }),
            Some(ModelKind::Heisenberg) => Ok(NnModel::Heisenberg { lambda }),
            None => Err(config_err("this experiment needs a `model`")),
        }
    }

    pub fn chi_values(&self) -> CliResult<Vec<usize>> {
        match (&self.chi_list, self.chi) {
            (Some(list), _) if !list.is_empty() => Ok(list.clone()),
            (_, Some(chi)) => Ok(vec![chi]),
            _ => Err(config_err("need `chi` or a non-empty `chi_list`")),
        }
    }

    pub fn single_chi(&self) -> CliResult<usize> {
        self.chi
            .ok_or_else(|| config_err("this experiment needs a single `chi`"))
    }

    pub fn lambda_values(&self) -> CliResult<Vec<f64>> {
        match (&self.lambda_grid, self.lambda) {
            (Some(grid), _) if !grid.is_empty() => Ok(grid.clone()),
            (_, Some(l)) => Ok(vec![l]),
            _ => Err(config_err("need `lambda` or a non-empty `lambda_grid`")),
        }
    }

    pub fn m_values(&self) -> CliResult<Vec<u64>> {
        match (&self.m_list, self.num_samples) {
            (Some(list), _) if !list.is_empty() => Ok(list.clone()),
            (_, Some(m)) => Ok(vec![m]),
            _ => Err(config_err("need `num_samples` or a non-empty `m_list`")),
        }
    }

    /// Samples for a thermal run: explicit, or planned from (ε, δ, χ).
    pub fn planned_samples(&self, chi: usize) -> CliResult<u64> {
        if let Some(m) = self.num_samples {
            if m == 0 {
                return Err(config_err("num_samples must be positive"));
            }
            return Ok(m);
        }
        match (self.epsilon, self.delta) {
            (Some(eps), Some(delta)) => Ok(plan_samples(eps, delta, chi)
                .map_err(config_err)?
                .num_samples),
            _ => Err(config_err(
                "need `num_samples` or both `epsilon` and `delta` for sample planning",
            )),
        }
    }

    pub fn runs(&self) -> CliResult<u32> {
        match self.runs {
            Some(r) if r > 0 => Ok(r),
            Some(_) => Err(config_err("runs must be positive")),
            None => Err(config_err("this experiment needs `runs`")),
        }
    }

    pub fn chi_max(&self, chi: usize) -> usize {
        self.chi_max.unwrap_or(2 * chi)
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff.unwrap_or(rmps_core::tol::DEFAULT_CUTOFF)
    }

    pub fn observable(&self) -> ObservableKind {
        self.observable.unwrap_or(ObservableKind::Magnetization)
    }

    /// Resolve the microcanonical filter for a chain of `num_sites` at field
    /// `lambda`, applying the r and k policies where not overridden.
    pub fn filter_spec(&self, model: &NnModel, num_sites: usize) -> CliResult<FilterSpec> {
        let fc = self
            .filter
            .as_ref()
            .ok_or_else(|| config_err("this experiment needs a `filter` block"))?;
        let energy = fc.energy_per_site * num_sites as f64;
        if !(fc.r_factor >= 1.0) {
            return Err(config_err("filter.r_factor must be at least 1"));
        }
        let r = fc.r_factor * (model.norm_bound(num_sites) + energy.abs());
        let k = match fc.applications {
            Some(k) => k,
            None => {
                if !(fc.window_scale > 0.0) {
                    return Err(config_err("filter.window_scale must be positive"));
                }
                default_applications(r, num_sites, fc.window_scale)
            }
        };
        FilterSpec::new(energy, r, k).map_err(config_err)
    }

    pub fn trotter_spec(&self) -> CliResult<Option<TrotterSpec>> {
        match (self.beta, self.trotter_steps) {
            (Some(beta), Some(steps)) => {
                Ok(Some(TrotterSpec::new(beta, steps).map_err(config_err)?))
            }
            (None, None) => Ok(None),
            _ => Err(config_err(
                "canonical runs need both `beta` and `trotter_steps`",
            )),
        }
    }

    /// Validate every referenced module precondition before any compute.
    pub fn validate(&self) -> CliResult<()> {
        for chi in self.chi_values()? {
            RmpsSpec::new(self.num_sites, chi, self.master_seed).map_err(config_err)?;
        }
        match self.experiment {
            ExperimentKind::MomentsCheck => {
                if self.num_sites > 6 {
                    return Err(config_err("moments-check requires num_sites <= 6"));
                }
                self.m_values()?;
            }
            ExperimentKind::Trace => {
                self.model()?;
                self.m_values()?;
            }
            ExperimentKind::VarianceScan => {
                self.model()?;
                self.m_values()?;
                let runs = self.runs()?;
                if runs < 2 {
                    return Err(config_err("variance-scan needs runs >= 2"));
                }
            }
            ExperimentKind::Magnetization => {
                match self.model {
                    Some(ModelKind::Heisenberg) => {}
                    _ => return Err(config_err("magnetization runs use the heisenberg model")),
                }
                self.lambda_values()?;
                self.runs()?;
                let chi = self.single_chi()?;
                let model = self.model_with_lambda(self.lambda_values()?[0])?;
                self.filter_spec(&model, self.num_sites)?;
                let _ = chi;
            }
            ExperimentKind::Thermal => {
                self.model()?;
                let chi = self.single_chi()?;
                self.planned_samples(chi)?;
                let model = self.model()?;
                let canonical = self.trotter_spec()?.is_some();
                if !canonical {
                    self.filter_spec(&model, self.num_sites)?;
                }
            }
        }
        if let Some(c) = self.cutoff {
            if !(c >= 0.0) {
                return Err(config_err("cutoff must be non-negative"));
            }
        }
        if let Some(cm) = self.chi_max {
            if cm == 0 {
                return Err(config_err("chi_max must be positive"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_config() -> String {
        r#"{
            "experiment": "trace",
            "model": "ising",
            "num_sites": 10,
            "lambda": 1.5,
            "chi": 8,
            "num_samples": 100,
            "master_seed": 7
        }"#
        .to_string()
    }

    #[test]
    fn parses_and_validates() {
        let cfg = ExperimentConfig::parse(&base_config()).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.experiment, ExperimentKind::Trace);
        assert_eq!(cfg.chi_values().unwrap(), vec![8]);
    }

    #[test]
    fn rejects_unknown_fields() {
        let text = base_config().replace("\"master_seed\": 7", "\"master_seed\": 7, \"oops\": 1");
        assert!(ExperimentConfig::parse(&text).is_err());
    }

    #[test]
    fn rejects_bad_bond_dimension() {
        let text = base_config().replace("\"chi\": 8", "\"chi\": 6");
        let cfg = ExperimentConfig::parse(&text).unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn rejects_zero_runs_for_scan() {
        let text = r#"{
            "experiment": "variance-scan",
            "model": "ising",
            "num_sites": 8,
            "lambda": 1.5,
            "chi_list": [2, 4],
            "m_list": [8, 16],
            "runs": 0,
            "master_seed": 1
        }"#;
        let cfg = ExperimentConfig::parse(text).unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = ExperimentConfig::parse(&base_config()).unwrap();
        let b = ExperimentConfig::parse(&base_config()).unwrap();
        assert_eq!(a.hash(), b.hash());
        let c = ExperimentConfig::parse(&base_config().replace("1.5", "1.6")).unwrap();
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn planning_from_epsilon_delta() {
        let text =
            base_config().replace("\"num_samples\": 100,", "\"epsilon\": 0.1, \"delta\": 0.1,");
        let cfg = ExperimentConfig::parse(&text).unwrap();
        assert_eq!(cfg.planned_samples(16).unwrap(), 63);
    }

    #[test]
    fn thermal_expectation_alias_accepted() {
        let text = base_config()
            .replace("\"trace\"", "\"thermal-expectation\"")
            .replace(
                "\"master_seed\": 7",
                "\"master_seed\": 7, \"filter\": {\"energy_per_site\": -0.15}",
            );
        let cfg = ExperimentConfig::parse(&text).unwrap();
        assert_eq!(cfg.experiment, ExperimentKind::Thermal);
        cfg.validate().unwrap();
    }
}
