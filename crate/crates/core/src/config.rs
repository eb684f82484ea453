//! TOML run configuration.
//!
//! A run file names scenarios and may override any model constant. Model
//! constants are layered: built-in defaults, then the parameter file named by
//! `battery_file` (as written by `vrla-sim calibrate`), then the `[model]`
//! and `[limits]` tables of the run file itself.
//!
//! ```toml
//! dt_s = 900
//! seed = 1
//! battery_file = "battery.toml"
//!
//! [model.battery]
//! b0_nominal = 5.5
//!
//! [[scenario]]
//! name = "low-bboxx"
//! archetype = "low"
//! policy = "bboxx_static"
//!
//! [[scenario]]
//! name = "low-adaptive"
//! archetype = "low"
//! policy = "adaptive"
//!
//! [compare]
//! base = "low-bboxx"
//! alt = "low-adaptive"
//! ```

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::control::{ControlParams, Policy};
use crate::degradation::DegradationLimits;
use crate::engine::{ModelParams, ProfileSpec, Scenario};
use crate::error::{Error, Result};
use crate::profiles::{self, ArchetypeSpec, ColumnMap, UseArchetype};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_dt")]
    pub dt_s: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_max_years")]
    pub max_years: f64,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
    /// Model parameter file; relative paths resolve against the run file.
    pub battery_file: Option<PathBuf>,
    #[serde(default)]
    pub model: Table,
    pub limits: Option<Table>,
    #[serde(default)]
    pub control: Table,
    /// Report SOH at this age (years) when reached.
    pub reference_years: Option<f64>,
    #[serde(default)]
    pub reports: Reports,
    #[serde(default, rename = "scenario")]
    pub scenarios: Vec<ScenarioConfig>,
    pub compare: Option<CompareConfig>,
}

fn default_dt() -> f64 {
    900.0
}

fn default_seed() -> u64 {
    1
}

fn default_max_years() -> f64 {
    15.0
}

/// Optional artifacts beyond the result JSON, trajectory and histograms.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Reports {
    /// Per-step battery trace, readable by `vrla-sim analyze`.
    pub trace: bool,
    /// Input profile CSV for this many days (archetype scenarios) or the
    /// whole series (CSV scenarios).
    pub profile_days: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub policy: Policy,
    pub archetype: Option<UseArchetype>,
    /// Overrides of the archetype's shape parameters.
    #[serde(default)]
    pub profile: Table,
    pub profile_csv: Option<PathBuf>,
    #[serde(default)]
    pub columns: ColumnMap,
    pub seed: Option<u64>,
    pub initial_soc: Option<f64>,
    #[serde(default)]
    pub control: Table,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareConfig {
    pub base: String,
    pub alt: String,
}

/// Command-line values that take precedence over the run file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub dt_s: Option<f64>,
    pub jobs: Option<usize>,
    pub out: Option<PathBuf>,
}

/// Contents of a model parameter file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterFile {
    pub model: ModelParams,
    pub limits: Option<DegradationLimits>,
}

impl ParameterFile {
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(format!("cannot encode parameters: {e}")))
    }
}

/// A run file with paths resolved and overrides applied.
#[derive(Debug, Clone)]
pub struct ResolvedRun {
    pub model: ModelParams,
    pub limits: Option<DegradationLimits>,
    pub dt_s: f64,
    pub seed: u64,
    pub jobs: Option<usize>,
    pub out: PathBuf,
    pub reports: Reports,
    pub scenarios: Vec<Scenario>,
    pub compare: Option<CompareConfig>,
}

/// Recursively overlays `top` onto `base`; tables merge, everything else
/// replaces.
pub fn merge(base: &mut Table, top: &Table) {
    for (k, v) in top {
        match (base.get_mut(k), v) {
            (Some(Value::Table(b)), Value::Table(t)) => merge(b, t),
            _ => {
                base.insert(k.clone(), v.clone());
            }
        }
    }
}

fn to_table<T: Serialize>(value: &T) -> Result<Table> {
    Table::try_from(value).map_err(|e| Error::Config(e.to_string()))
}

fn layered<T>(defaults: &T, layers: &[&Table], what: &str) -> Result<T>
where
    T: Serialize + for<'de> Deserialize<'de>,
{
    let mut table = to_table(defaults)?;
    for layer in layers {
        merge(&mut table, layer);
    }
    Value::Table(table)
        .try_into()
        .map_err(|e| Error::Config(format!("{what}: {e}")))
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<(Self, PathBuf)> {
        let config = Self::parse(&read_text(path)?)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((config, base))
    }

    /// Model constants and limits after all layers.
    pub fn model(&self, base_dir: &Path) -> Result<(ModelParams, Option<DegradationLimits>)> {
        let mut file = Table::new();
        if let Some(p) = &self.battery_file {
            let path = base_dir.join(p);
            file = toml::from_str(&read_text(&path)?)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        }
        let empty = Table::new();
        let file_model = match file.get("model") {
            Some(Value::Table(t)) => t,
            Some(_) => return Err(Error::Config("`model` in parameter file must be a table".into())),
            None => &empty,
        };
        let model: ModelParams = layered(&ModelParams::default(), &[file_model, &self.model], "model")?;
        model.validate()?;

        let mut limits = match file.get("limits") {
            Some(Value::Table(t)) => Some(t.clone()),
            Some(_) => return Err(Error::Config("`limits` in parameter file must be a table".into())),
            None => None,
        };
        if let Some(top) = &self.limits {
            merge(limits.get_or_insert_with(Table::new), top);
        }
        let limits = limits
            .map(|t| {
                Value::Table(t)
                    .try_into::<DegradationLimits>()
                    .map_err(|e| Error::Config(format!("limits: {e}")))
            })
            .transpose()?;
        if let Some(l) = limits {
            if !(l.w_limit > 0.0 && l.c_corr_limit > 0.0 && l.c_deg_limit > 0.0) {
                return Err(Error::param("limits", "all limits must be positive"));
            }
        }
        Ok((model, limits))
    }

    pub fn resolve(&self, base_dir: &Path, overrides: &Overrides) -> Result<ResolvedRun> {
        let (model, limits) = self.model(base_dir)?;
        let dt_s = overrides.dt_s.unwrap_or(self.dt_s);
        profiles::steps_per_day(dt_s)?;
        let seed = overrides.seed.unwrap_or(self.seed);

        let mut names = HashSet::new();
        let mut scenarios = Vec::with_capacity(self.scenarios.len());
        for sc in &self.scenarios {
            if !names.insert(sc.name.as_str()) {
                return Err(Error::Config(format!("duplicate scenario name `{}`", sc.name)));
            }
            if sc.name.is_empty() || sc.name.contains(['/', '\\']) {
                return Err(Error::Config(format!("scenario name `{}` is not a valid file name", sc.name)));
            }
            let profile = match (&sc.archetype, &sc.profile_csv) {
                (Some(a), None) => {
                    let spec: ArchetypeSpec = layered(&ArchetypeSpec::defaults(*a), &[&sc.profile], &sc.name)?;
                    ProfileSpec::Archetype(spec)
                }
                (None, Some(p)) => {
                    let path = base_dir.join(p);
                    if !path.is_file() {
                        return Err(Error::Config(format!("profile file {} not found", path.display())));
                    }
                    let (series, _) = profiles::ingest_csv(&path, &sc.columns, dt_s)?;
                    ProfileSpec::Series(series)
                }
                _ => {
                    return Err(Error::Config(format!(
                        "scenario `{}` needs exactly one of `archetype` or `profile_csv`",
                        sc.name
                    )))
                }
            };
            let control: ControlParams = layered(
                &ControlParams::with_policy(sc.policy),
                &[&self.control, &sc.control],
                &sc.name,
            )?;
            let control = ControlParams {
                policy: sc.policy,
                ..control
            };
            let scenario = Scenario {
                name: sc.name.clone(),
                model: model.clone(),
                control,
                profile,
                dt_s,
                max_years: self.max_years,
                seed: sc.seed.or(overrides.seed).unwrap_or(seed),
                initial_soc: sc.initial_soc.unwrap_or(1.0),
                limits,
                record_trace: self.reports.trace,
                reference_years: self.reference_years,
            };
            scenario.validate()?;
            scenarios.push(scenario);
        }

        if let Some(c) = &self.compare {
            for name in [&c.base, &c.alt] {
                if !names.contains(name.as_str()) {
                    return Err(Error::Config(format!("compare names unknown scenario `{name}`")));
                }
            }
        }

        Ok(ResolvedRun {
            model,
            limits,
            dt_s,
            seed,
            jobs: overrides.jobs.or(self.jobs),
            out: overrides
                .out
                .clone()
                .or_else(|| self.out.as_ref().map(|o| base_dir.join(o)))
                .unwrap_or_else(|| PathBuf::from("out")),
            reports: self.reports.clone(),
            scenarios,
            compare: self.compare.clone(),
        })
    }
}
