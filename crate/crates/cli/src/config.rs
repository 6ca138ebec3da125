//! Run configuration: defaults, then the TOML file, then `BURGERS_*`
//! environment variables, then command-line flags.

use burgers_core::{Error as CoreError, FamilySpec, QuadratureOptions, TailFamily, Tolerances};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt;
use toml::{Table, Value};

pub const ENV_PREFIX: &str = "BURGERS_";

/// A configuration problem, tied to the dotted key that caused it.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(key: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            key: key.into(),
            message: message.into(),
        }
    }

    /// Attaches a section to a core parameter error.
    pub fn from_core(section: &str, err: CoreError) -> Self {
        match &err {
            CoreError::InvalidParameter { name, .. } | CoreError::NonFinite { name, .. } => {
                Self::new(format!("{section}.{name}"), err.to_string())
            }
            _ => Self::new(section, err.to_string()),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid configuration key `{}`: {}", self.key, self.message)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyName {
    Single,
    TwoTerm,
    Nested,
}

/// Flat datum description. Fields a family does not use are ignored;
/// `prop11` always reads the two-term fields and `thm12` the nested ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatumConfig {
    pub family: FamilyName,
    pub kappa1: f64,
    pub alpha: f64,
    pub kappa2: f64,
    pub beta: f64,
    /// Core (regularization) length.
    pub eps: f64,
    pub n_max: usize,
    /// Nested exponents; defaults to the ladder `0.7 - 0.08 * 2^-(n-1)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alphas: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_limit: Option<f64>,
}

impl Default for DatumConfig {
    fn default() -> Self {
        Self {
            family: FamilyName::Single,
            kappa1: 1.0,
            alpha: 0.5,
            kappa2: 1.0,
            beta: 0.6,
            eps: 1.0,
            n_max: 6,
            alphas: None,
            alpha_limit: None,
        }
    }
}

impl DatumConfig {
    pub fn spec(&self, family: FamilyName) -> FamilySpec {
        match family {
            FamilyName::Single => FamilySpec::Single {
                kappa: self.kappa1,
                alpha: self.alpha,
            },
            FamilyName::TwoTerm => FamilySpec::TwoTerm {
                kappa1: self.kappa1,
                alpha: self.alpha,
                kappa2: self.kappa2,
                beta: self.beta,
            },
            FamilyName::Nested => match &self.alphas {
                Some(alphas) => FamilySpec::Nested {
                    alphas: alphas.clone(),
                    n_max: self.n_max,
                    alpha_limit: self.alpha_limit,
                },
                None => FamilySpec::nested_ladder(
                    self.alpha,
                    self.alpha_limit.unwrap_or(0.7),
                    0.08,
                    self.n_max,
                ),
            },
        }
    }

    pub fn build(&self, family: FamilyName) -> Result<TailFamily, ConfigError> {
        TailFamily::construct(&self.spec(family), self.eps).map_err(|e| {
            let mut err = ConfigError::from_core("datum", e);
            if err.key == "datum.kappa" {
                err.key = "datum.kappa1".into();
            }
            err
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveConfig {
    /// Rescaled position; ignored when `x` is set.
    pub z: f64,
    /// Physical position; the solve reports `f(x, t)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
    pub t: f64,
    /// Sweep `nz` points over `[z_min, z_max]` instead of a single `z`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nz: Option<usize>,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            z: 0.0,
            x: None,
            t: 1e6,
            z_min: None,
            z_max: None,
            nz: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LandscapeConfig {
    pub z: f64,
    pub t: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resolution: Option<f64>,
    pub exclusion_radius: f64,
}

impl Default for LandscapeConfig {
    fn default() -> Self {
        Self {
            z: 2.6,
            t: 1e8,
            y_min: None,
            y_max: None,
            resolution: None,
            exclusion_radius: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CriticalConfig {
    /// Second-tail exponents at which the correction constants are listed.
    pub betas: Vec<f64>,
}

impl Default for CriticalConfig {
    fn default() -> Self {
        Self {
            betas: vec![0.55, 0.6, 0.7],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Study {
    /// `|solution - profile|` at fixed offsets from `z_c`.
    Profile,
    /// Drift of the minus-branch maximum at `z_c` (two-term datum).
    Shift,
    /// Gap between the two maxima in the zoom frame (two-term datum).
    Gap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RatesConfig {
    pub study: Study,
    /// Offsets `z - z_c` for the profile study.
    pub offsets: Vec<f64>,
    /// Zoom coordinate for the gap study.
    pub x: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub per_decade: usize,
    pub exclusion_radius: f64,
}

impl Default for RatesConfig {
    fn default() -> Self {
        Self {
            study: Study::Profile,
            offsets: vec![-1.0, -0.5, 0.5, 1.0],
            x: 1.0,
            t_min: 1e4,
            t_max: 1e9,
            per_decade: 6,
            exclusion_radius: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Prop11Config {
    pub xs: Vec<f64>,
    pub t_min: f64,
    pub t_max: f64,
    pub per_decade: usize,
}

impl Default for Prop11Config {
    fn default() -> Self {
        Self {
            xs: vec![-1.0, 1.0],
            t_min: 1e5,
            t_max: 1e9,
            per_decade: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thm12Config {
    /// Expansion order `N`.
    pub order: usize,
    pub xs: Vec<f64>,
    pub t_min: f64,
    pub t_max: f64,
    pub per_decade: usize,
}

impl Default for Thm12Config {
    fn default() -> Self {
        Self {
            order: 1,
            xs: vec![-1.0, 1.0],
            t_min: 1e5,
            t_max: 1e9,
            per_decade: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    pub t_final: f64,
    /// Half width `L` of the domain `[-L, L]`.
    pub half_width: f64,
    pub nx: usize,
    pub dt: f64,
    /// Extra snapshot times in `(0, t_final)`.
    pub snapshots: Vec<f64>,
    /// Also compare with Hopf-Cole at integer `x` in `[-20, 20]`.
    pub compare: bool,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            t_final: 1.0,
            half_width: 40.0,
            nx: 4001,
            dt: 0.01,
            snapshots: Vec::new(),
            compare: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfilePlotConfig {
    /// Grid bounds; default `z_c - 3` and `z_c + 3`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z_max: Option<f64>,
    pub nz: usize,
    /// Time of the finite-t solution column.
    pub t: f64,
}

impl Default for ProfilePlotConfig {
    fn default() -> Self {
        Self {
            z_min: None,
            z_max: None,
            nz: 400,
            t: 1e6,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Directory for `<subcommand>.csv` and `<subcommand>.json`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RunConfig {
    pub datum: DatumConfig,
    pub quadrature: QuadratureOptions,
    pub tolerances: Tolerances,
    pub solve: SolveConfig,
    pub landscape: LandscapeConfig,
    pub critical: CriticalConfig,
    pub rates: RatesConfig,
    pub prop11: Prop11Config,
    pub thm12: Thm12Config,
    pub oracle: OracleConfig,
    pub profile_plot: ProfilePlotConfig,
    pub output: OutputConfig,
}

fn section<T: DeserializeOwned + Default>(table: &mut Table, name: &str) -> Result<T, ConfigError> {
    match table.remove(name) {
        None => Ok(T::default()),
        Some(Value::Table(t)) => {
            T::deserialize(Value::Table(t)).map_err(|e| ConfigError::new(name, e.to_string().trim()))
        }
        Some(_) => Err(ConfigError::new(name, "expected a table")),
    }
}

impl RunConfig {
    /// Builds the configuration from a merged table, rejecting unknown
    /// sections and keys.
    pub fn from_table(mut table: Table) -> Result<Self, ConfigError> {
        let cfg = Self {
            datum: section(&mut table, "datum")?,
            quadrature: section(&mut table, "quadrature")?,
            tolerances: section(&mut table, "tolerances")?,
            solve: section(&mut table, "solve")?,
            landscape: section(&mut table, "landscape")?,
            critical: section(&mut table, "critical")?,
            rates: section(&mut table, "rates")?,
            prop11: section(&mut table, "prop11")?,
            thm12: section(&mut table, "thm12")?,
            oracle: section(&mut table, "oracle")?,
            profile_plot: section(&mut table, "profile_plot")?,
            output: section(&mut table, "output")?,
        };
        if let Some(key) = table.keys().next() {
            return Err(ConfigError::new(key.as_str(), "unknown section"));
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// SHA-256 of the serialized configuration without the output section,
    /// so that moving outputs does not change the hash.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output = OutputConfig::default();
        let digest = Sha256::digest(canonical.to_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Recursively overlays `top` onto `base`.
pub fn merge(base: &mut Table, top: Table) {
    for (k, v) in top {
        match (base.get_mut(&k), v) {
            (Some(Value::Table(b)), Value::Table(t)) => merge(b, t),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

pub fn parse_file(text: &str, origin: &str) -> Result<Table, ConfigError> {
    text.parse::<Table>()
        .map_err(|e| ConfigError::new(origin, e.to_string().trim().to_string()))
}

/// Parses a scalar override: TOML syntax when it parses, a bare string
/// otherwise.
pub fn parse_value(raw: &str) -> Value {
    match format!("v = {raw}").parse::<Table>() {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => Value::String(raw.to_string()),
    }
}

/// Collects `BURGERS_<SECTION>__<KEY>=value` overrides.
pub fn env_overrides(vars: impl Iterator<Item = (String, String)>) -> Result<Table, ConfigError> {
    let mut out = Table::new();
    let mut vars: Vec<(String, String)> = vars.filter(|(k, _)| k.starts_with(ENV_PREFIX)).collect();
    vars.sort();
    for (name, raw) in vars {
        let rest = name[ENV_PREFIX.len()..].to_lowercase();
        let Some((section, key)) = rest.split_once("__") else {
            return Err(ConfigError::new(
                name,
                format!("expected {ENV_PREFIX}<SECTION>__<KEY>"),
            ));
        };
        insert(&mut out, section, key, parse_value(&raw));
    }
    Ok(out)
}

pub fn insert(table: &mut Table, section: &str, key: &str, value: Value) {
    let entry = table
        .entry(section.to_string())
        .or_insert_with(|| Value::Table(Table::new()));
    if let Value::Table(t) = entry {
        t.insert(key.to_string(), value);
    } else {
        let mut t = Table::new();
        t.insert(key.to_string(), value);
        *entry = Value::Table(t);
    }
}
