//! Run configuration: dotted key-value TOML (`params.theta_postselect = 1e-8`)
//! or the equivalent JSON, nested or flat. Parsing goes through a flat map
//! of dotted keys, so `--set` overrides and sweep points are plain key
//! replacements on the same map.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::hilbert::{HilbertLayout, DEFAULT_FOCK_CUTOFF};
use crate::model::{
    field_to_omega, ExperimentParams, PhysicalConstants, DEFAULT_LAMBDA, DEFAULT_THETA,
};
use crate::noise::{DEFAULT_STEPS_PER_TSTAR, DEFAULT_WINDOW_FACTOR};
use crate::phasespace::{DEFAULT_HALF_WIDTH, DEFAULT_RESOLUTION};
use crate::zassenhaus::QUOTED_Z;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "WVAMAG_OUT_DIR";
pub const FALLBACK_OUT_DIR: &str = "wvamag-out";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Estimate,
    Kick,
    Flywheel,
    Fisher,
    Decohere,
    Husimi,
    ZassenhausCheck,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::Estimate,
        Experiment::Kick,
        Experiment::Flywheel,
        Experiment::Fisher,
        Experiment::Decohere,
        Experiment::Husimi,
        Experiment::ZassenhausCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Estimate => "estimate",
            Experiment::Kick => "kick",
            Experiment::Flywheel => "flywheel",
            Experiment::Fisher => "fisher",
            Experiment::Decohere => "decohere",
            Experiment::Husimi => "husimi",
            Experiment::ZassenhausCheck => "zassenhaus-check",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::config("experiment", format!("unknown experiment `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    /// Dotted key of the swept parameter, e.g. `params.theta_postselect`.
    pub parameter: String,
    pub scale: Scale,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl SweepSpec {
    pub fn grid(&self) -> Vec<f64> {
        let n = self.points;
        if n == 1 {
            return vec![self.start];
        }
        (0..n)
            .map(|k| {
                if k == 0 {
                    return self.start;
                }
                if k + 1 == n {
                    return self.stop;
                }
                let f = k as f64 / (n - 1) as f64;
                match self.scale {
                    Scale::Linear => self.start + f * (self.stop - self.start),
                    Scale::Log => (self.start.ln() + f * (self.stop.ln() - self.start.ln())).exp(),
                }
            })
            .collect()
    }
}

/// Noise settings; `damp_rate = None` requests calibration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    pub damp_rate: Option<f64>,
    pub nbar: f64,
    pub integrator_step: f64,
    pub target_fidelity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleConfig {
    pub pulse_count: usize,
    pub window: f64,
    /// Pulse counts compared at t* by `decohere`.
    pub compare_counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Options {
    pub n_kicks: u32,
    pub oracle_steps: usize,
    pub samples: usize,
    pub husimi_resolution: usize,
    pub husimi_half_width: f64,
    pub oracle_gap: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub params: ExperimentParams,
    pub noise: NoiseConfig,
    pub schedule: ScheduleConfig,
    pub sweep: Option<SweepSpec>,
    pub options: Options,
}

/// Flat dotted-key view of a configuration.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RawConfig {
    pub entries: BTreeMap<String, Value>,
}

/// Keys required when a config file is supplied.
pub const REQUIRED_KEYS: [&str; 2] = ["params.lambda_coupling", "params.theta_postselect"];

const KNOWN_KEYS: &[&str] = &[
    "experiment",
    "output_dir",
    "params.lambda_coupling",
    "params.theta_postselect",
    "params.omega_g",
    "params.field_tesla",
    "params.gamma",
    "params.k_scale",
    "params.t_star",
    "params.fock_cutoff",
    "params.z_constant",
    "params.omega_e",
    "params.omega_t",
    "noise.damp_rate",
    "noise.nbar",
    "noise.integrator_step",
    "noise.target_fidelity",
    "schedule.pulse_count",
    "schedule.window",
    "schedule.compare_counts",
    "sweep.parameter",
    "sweep.scale",
    "sweep.start",
    "sweep.stop",
    "sweep.points",
    "options.n_kicks",
    "options.oracle_steps",
    "options.samples",
    "options.husimi_resolution",
    "options.husimi_half_width",
    "options.oracle_gap",
];

/// Parameters a sweep may vary.
pub const SWEEPABLE: &[&str] = &[
    "params.lambda_coupling",
    "params.theta_postselect",
    "params.omega_g",
    "params.field_tesla",
    "params.gamma",
    "params.k_scale",
    "params.fock_cutoff",
    "params.z_constant",
    "noise.damp_rate",
    "noise.nbar",
    "noise.target_fidelity",
    "schedule.pulse_count",
    "schedule.window",
    "options.n_kicks",
];

/// Mutually exclusive ways to set the signal frequency.
const FREQUENCY_KEYS: [&str; 3] = ["params.omega_g", "params.field_tesla", "params.gamma"];

fn flatten(prefix: &str, value: Value, out: &mut BTreeMap<String, Value>) {
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() {
                    k
                } else {
                    format!("{prefix}.{k}")
                };
                flatten(&key, v, out);
            }
        }
        other => {
            out.insert(prefix.to_string(), other);
        }
    }
}

fn toml_to_json(v: toml::Value) -> Result<Value> {
    serde_json::to_value(v).map_err(|e| Error::config("<config>", e.to_string()))
}

/// Parses one `--set` value as a TOML literal, falling back to a string.
pub fn parse_value(text: &str) -> Value {
    let doc = format!("v = {text}");
    match toml::from_str::<toml::Table>(&doc) {
        Ok(mut t) => t
            .remove("v")
            .and_then(|v| toml_to_json(v).ok())
            .unwrap_or_else(|| Value::String(text.to_string())),
        Err(_) => Value::String(text.to_string()),
    }
}

impl RawConfig {
    pub fn parse(text: &str, json: bool) -> Result<Self> {
        let value = if json {
            serde_json::from_str::<Value>(text)
                .map_err(|e| Error::config("<config>", format!("invalid JSON: {e}")))?
        } else {
            let table = toml::from_str::<toml::Table>(text)
                .map_err(|e| Error::config("<config>", format!("invalid TOML: {}", e.message())))?;
            toml_to_json(toml::Value::Table(table))?
        };
        if !value.is_object() {
            return Err(Error::config("<config>", "top level must be a table"));
        }
        let mut entries = BTreeMap::new();
        flatten("", value, &mut entries);
        let raw = Self { entries };
        if let Some(bad) = raw
            .entries
            .keys()
            .find(|k| !KNOWN_KEYS.contains(&k.as_str()))
        {
            return Err(Error::config(bad, "unknown configuration key"));
        }
        Ok(raw)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let json =
            path.extension().is_some_and(|e| e == "json") || text.trim_start().starts_with('{');
        Self::parse(&text, json)
    }

    /// Applies `key=value`; unknown keys are config errors.
    pub fn set(&mut self, assignment: &str) -> Result<()> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| Error::config(assignment, "expected key=value"))?;
        let key = key.trim();
        self.set_value(key, parse_value(value.trim()))
    }

    pub fn set_value(&mut self, key: &str, value: Value) -> Result<()> {
        if !KNOWN_KEYS.contains(&key) {
            return Err(Error::config(key, "unknown configuration key"));
        }
        if FREQUENCY_KEYS.contains(&key) {
            for k in FREQUENCY_KEYS {
                self.entries.remove(k);
            }
        }
        self.entries.insert(key.to_string(), value);
        Ok(())
    }

    fn f64_opt(&self, key: &str) -> Result<Option<f64>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(v) => v
                .as_f64()
                .filter(|x| x.is_finite())
                .map(Some)
                .ok_or_else(|| Error::config(key, format!("expected a finite number, got {v}"))),
        }
    }

    fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        Ok(self.f64_opt(key)?.unwrap_or(default))
    }

    fn uint_opt(&self, key: &str) -> Result<Option<u64>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(v) => {
                if let Some(u) = v.as_u64() {
                    return Ok(Some(u));
                }
                // Sweep grids deliver floats; accept integral values.
                match v.as_f64() {
                    Some(x) if x >= 0.0 && x.fract() == 0.0 && x < 9.0e15 => Ok(Some(x as u64)),
                    _ => Err(Error::config(
                        key,
                        format!("expected a non-negative integer, got {v}"),
                    )),
                }
            }
        }
    }

    fn uint_or(&self, key: &str, default: u64) -> Result<u64> {
        Ok(self.uint_opt(key)?.unwrap_or(default))
    }

    fn str_opt(&self, key: &str) -> Result<Option<&str>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s)),
            Some(v) => Err(Error::config(key, format!("expected a string, got {v}"))),
        }
    }

    fn require(&self, key: &str) -> Result<()> {
        if self.entries.contains_key(key) {
            Ok(())
        } else {
            Err(Error::config(key, "required key is missing"))
        }
    }

    /// Resolves into a validated [`RunConfig`]. `strict` demands the
    /// required keys (set when the values come from a config file).
    pub fn resolve(&self, experiment: Option<Experiment>, strict: bool) -> Result<RunConfig> {
        if strict {
            for key in REQUIRED_KEYS {
                self.require(key)?;
            }
        }
        let experiment = match (experiment, self.str_opt("experiment")?) {
            (Some(e), None) => e,
            (None, Some(s)) => s.parse()?,
            (Some(e), Some(s)) => {
                let from_file: Experiment = s.parse()?;
                if from_file != e {
                    return Err(Error::config(
                        "experiment",
                        format!("config names `{from_file}` but `{e}` was requested"),
                    ));
                }
                e
            }
            (None, None) => return Err(Error::config("experiment", "no experiment given")),
        };

        let params = self.resolve_params()?;
        let noise = NoiseConfig {
            damp_rate: self.f64_opt("noise.damp_rate")?,
            nbar: self.f64_or("noise.nbar", 0.0)?,
            integrator_step: self.f64_or(
                "noise.integrator_step",
                params.t_star / DEFAULT_STEPS_PER_TSTAR,
            )?,
            target_fidelity: self.f64_or("noise.target_fidelity", 0.599)?,
        };
        if let Some(g) = noise.damp_rate {
            if g < 0.0 {
                return Err(Error::config("noise.damp_rate", "must be >= 0"));
            }
        }
        if noise.nbar < 0.0 {
            return Err(Error::config("noise.nbar", "must be >= 0"));
        }
        if !(noise.integrator_step > 0.0
            && noise.integrator_step <= params.t_star / 1e3 * (1.0 + 1e-12))
        {
            return Err(Error::config(
                "noise.integrator_step",
                "must lie in (0, t_star/1000]",
            ));
        }
        if !(noise.target_fidelity > 0.0 && noise.target_fidelity <= 1.0) {
            return Err(Error::config("noise.target_fidelity", "must lie in (0, 1]"));
        }

        let compare_counts = match self.entries.get("schedule.compare_counts") {
            None => vec![0, 10, 100, 1000],
            Some(Value::Array(items)) => items
                .iter()
                .map(|v| {
                    v.as_u64().map(|u| u as usize).ok_or_else(|| {
                        Error::config("schedule.compare_counts", "expected non-negative integers")
                    })
                })
                .collect::<Result<_>>()?,
            Some(_) => {
                return Err(Error::config(
                    "schedule.compare_counts",
                    "expected an array",
                ))
            }
        };
        let schedule = ScheduleConfig {
            pulse_count: self.uint_or("schedule.pulse_count", 1000)? as usize,
            window: self.f64_or("schedule.window", DEFAULT_WINDOW_FACTOR * params.t_star)?,
            compare_counts,
        };
        if schedule.window <= 0.0 {
            return Err(Error::config("schedule.window", "must be > 0"));
        }

        let options = Options {
            n_kicks: u32::try_from(self.uint_or("options.n_kicks", 2)?)
                .map_err(|_| Error::config("options.n_kicks", "too large"))?,
            oracle_steps: self.uint_or("options.oracle_steps", 10_000)? as usize,
            samples: self.uint_or("options.samples", 201)? as usize,
            husimi_resolution: self
                .uint_or("options.husimi_resolution", DEFAULT_RESOLUTION as u64)?
                as usize,
            husimi_half_width: self.f64_or("options.husimi_half_width", DEFAULT_HALF_WIDTH)?,
            oracle_gap: match self.entries.get("options.oracle_gap") {
                None => false,
                Some(Value::Bool(b)) => *b,
                Some(_) => {
                    return Err(Error::config(
                        "options.oracle_gap",
                        "expected true or false",
                    ))
                }
            },
        };
        if options.n_kicks == 0 {
            return Err(Error::config("options.n_kicks", "must be >= 1"));
        }
        if options.oracle_steps < crate::zassenhaus::MIN_ORACLE_STEPS {
            return Err(Error::config("options.oracle_steps", "must be >= 1000"));
        }
        if options.samples < 2 {
            return Err(Error::config("options.samples", "must be >= 2"));
        }
        if options.husimi_resolution < 2 {
            return Err(Error::config("options.husimi_resolution", "must be >= 2"));
        }
        if options.husimi_half_width <= 0.0 {
            return Err(Error::config("options.husimi_half_width", "must be > 0"));
        }

        let sweep = self.resolve_sweep()?;
        Ok(RunConfig {
            experiment,
            params,
            noise,
            schedule,
            sweep,
            options,
        })
    }

    /// Output directory: `--out`, then the config's `output_dir`, then
    /// `$WVAMAG_OUT_DIR`, then `./wvamag-out`. It is not part of
    /// [`RunConfig`], so where results are written never changes them.
    pub fn output_dir(&self, out_override: Option<&Path>) -> Result<PathBuf> {
        Ok(match (out_override, self.str_opt("output_dir")?) {
            (Some(p), _) => p.to_path_buf(),
            (None, Some(s)) => PathBuf::from(s),
            (None, None) => std::env::var_os(OUT_DIR_ENV)
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from(FALLBACK_OUT_DIR)),
        })
    }

    fn resolve_params(&self) -> Result<ExperimentParams> {
        let lambda = self.f64_or("params.lambda_coupling", DEFAULT_LAMBDA)?;
        if lambda <= 0.0 {
            return Err(Error::config("params.lambda_coupling", "must be > 0"));
        }
        let cutoff = self.uint_or("params.fock_cutoff", DEFAULT_FOCK_CUTOFF as u64)? as usize;
        let layout = HilbertLayout::new(cutoff)
            .map_err(|e| Error::config("params.fock_cutoff", e.to_string()))?;
        let mut params = ExperimentParams {
            lambda_coupling: lambda,
            omega_g: PhysicalConstants::CODATA.spin_gravity_frequency(),
            k_scale: self.f64_or("params.k_scale", 1.0)?,
            theta_postselect: self.f64_or("params.theta_postselect", DEFAULT_THETA)?,
            t_star: self.f64_or("params.t_star", PI / lambda)?,
            layout,
            z_constant: self.f64_or("params.z_constant", QUOTED_Z)?,
            omega_e: self.f64_opt("params.omega_e")?,
            omega_t: self.f64_opt("params.omega_t")?,
        };
        let given: Vec<&str> = FREQUENCY_KEYS
            .iter()
            .copied()
            .filter(|k| self.entries.contains_key(*k))
            .collect();
        if given.len() > 1 {
            return Err(Error::config(
                given[1],
                format!("conflicts with `{}`", given[0]),
            ));
        }
        if let Some(w) = self.f64_opt("params.omega_g")? {
            params.omega_g = w;
        }
        if let Some(b) = self.f64_opt("params.field_tesla")? {
            params.omega_g = field_to_omega(b, &PhysicalConstants::CODATA)
                .map_err(|e| Error::config("params.field_tesla", e.to_string()))?;
        }
        if let Some(g) = self.f64_opt("params.gamma")? {
            params = params.with_gamma(g);
        }
        params.validate().map_err(|e| match e {
            Error::InvalidParameter { name, reason } => {
                Error::config(&format!("params.{name}"), reason)
            }
            other => other,
        })?;
        Ok(params)
    }

    fn resolve_sweep(&self) -> Result<Option<SweepSpec>> {
        let Some(parameter) = self.str_opt("sweep.parameter")? else {
            if let Some(k) = self.entries.keys().find(|k| k.starts_with("sweep.")) {
                return Err(Error::config(k, "sweep.parameter is missing"));
            }
            return Ok(None);
        };
        if !SWEEPABLE.contains(&parameter) {
            return Err(Error::config(
                "sweep.parameter",
                format!("`{parameter}` is not a sweepable parameter"),
            ));
        }
        for key in ["sweep.start", "sweep.stop", "sweep.points"] {
            self.require(key)?;
        }
        let scale = match self.str_opt("sweep.scale")?.unwrap_or("linear") {
            "linear" => Scale::Linear,
            "log" => Scale::Log,
            other => {
                return Err(Error::config(
                    "sweep.scale",
                    format!("expected `linear` or `log`, got `{other}`"),
                ))
            }
        };
        let spec = SweepSpec {
            parameter: parameter.to_string(),
            scale,
            start: self.f64_or("sweep.start", 0.0)?,
            stop: self.f64_or("sweep.stop", 0.0)?,
            points: self.uint_or("sweep.points", 0)? as usize,
        };
        if spec.points == 0 {
            return Err(Error::config("sweep.points", "must be >= 1"));
        }
        if spec.scale == Scale::Log && !(spec.start > 0.0 && spec.stop > 0.0) {
            return Err(Error::config(
                "sweep.start",
                "log sweeps need positive endpoints",
            ));
        }
        Ok(Some(spec))
    }

    /// The raw config of one sweep point: the swept key replaced, the sweep
    /// section dropped.
    pub fn sweep_point(&self, spec: &SweepSpec, value: f64) -> Result<RawConfig> {
        let mut raw = self.clone();
        raw.entries.retain(|k, _| !k.starts_with("sweep."));
        raw.set_value(&spec.parameter, Value::from(value))?;
        Ok(raw)
    }
}

impl RunConfig {
    /// Canonical flat form: re-parsing it yields an identical `RunConfig`.
    pub fn to_entries(&self) -> BTreeMap<String, Value> {
        let p = &self.params;
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: Value| {
            m.insert(k.to_string(), v);
        };
        put("experiment", Value::from(self.experiment.name()));
        put("params.lambda_coupling", Value::from(p.lambda_coupling));
        put("params.theta_postselect", Value::from(p.theta_postselect));
        put("params.omega_g", Value::from(p.omega_g));
        put("params.k_scale", Value::from(p.k_scale));
        put("params.t_star", Value::from(p.t_star));
        put("params.fock_cutoff", Value::from(p.layout.fock_cutoff()));
        put("params.z_constant", Value::from(p.z_constant));
        if let Some(w) = p.omega_e {
            put("params.omega_e", Value::from(w));
        }
        if let Some(w) = p.omega_t {
            put("params.omega_t", Value::from(w));
        }
        if let Some(g) = self.noise.damp_rate {
            put("noise.damp_rate", Value::from(g));
        }
        put("noise.nbar", Value::from(self.noise.nbar));
        put(
            "noise.integrator_step",
            Value::from(self.noise.integrator_step),
        );
        put(
            "noise.target_fidelity",
            Value::from(self.noise.target_fidelity),
        );
        put(
            "schedule.pulse_count",
            Value::from(self.schedule.pulse_count),
        );
        put("schedule.window", Value::from(self.schedule.window));
        put(
            "schedule.compare_counts",
            Value::from(self.schedule.compare_counts.clone()),
        );
        if let Some(s) = &self.sweep {
            put("sweep.parameter", Value::from(s.parameter.clone()));
            put(
                "sweep.scale",
                Value::from(match s.scale {
                    Scale::Linear => "linear",
                    Scale::Log => "log",
                }),
            );
            put("sweep.start", Value::from(s.start));
            put("sweep.stop", Value::from(s.stop));
            put("sweep.points", Value::from(s.points));
        }
        let o = &self.options;
        put("options.n_kicks", Value::from(o.n_kicks));
        put("options.oracle_steps", Value::from(o.oracle_steps));
        put("options.samples", Value::from(o.samples));
        put(
            "options.husimi_resolution",
            Value::from(o.husimi_resolution),
        );
        put(
            "options.husimi_half_width",
            Value::from(o.husimi_half_width),
        );
        put("options.oracle_gap", Value::from(o.oracle_gap));
        m
    }

    /// Parses the canonical form produced by [`RunConfig::to_entries`].
    pub fn from_entries(entries: BTreeMap<String, Value>) -> Result<Self> {
        let raw = RawConfig { entries };
        if let Some(bad) = raw
            .entries
            .keys()
            .find(|k| !KNOWN_KEYS.contains(&k.as_str()))
        {
            return Err(Error::config(bad, "unknown configuration key"));
        }
        raw.resolve(None, true)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOML_CFG: &str = r#"
params.lambda_coupling = 500.0
params.theta_postselect = 1e-3
params.gamma = 1e-6
options.n_kicks = 4
"#;

    #[test]
    fn toml_and_json_agree() {
        let a = RawConfig::parse(TOML_CFG, false).unwrap();
        let json = r#"{"params": {"lambda_coupling": 500.0, "theta_postselect": 1e-3, "gamma": 1e-6},
                       "options.n_kicks": 4}"#;
        let b = RawConfig::parse(json, true).unwrap();
        assert_eq!(a, b);
        let c = a.resolve(Some(Experiment::Kick), true).unwrap();
        assert!((c.params.gamma() / 1e-6 - 1.0).abs() < 1e-12);
        assert_eq!(c.options.n_kicks, 4);
    }

    #[test]
    fn missing_required_key_is_named() {
        let raw = RawConfig::parse("params.theta_postselect = 0.1\n", false).unwrap();
        match raw.resolve(Some(Experiment::Kick), true) {
            Err(Error::Config { key, .. }) => assert_eq!(key, "params.lambda_coupling"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_key_is_rejected() {
        let e = RawConfig::parse("params.lambda = 1.0\n", false).unwrap_err();
        assert!(matches!(e, Error::Config { key, .. } if key == "params.lambda"));
    }

    #[test]
    fn set_overrides_and_frequency_exclusivity() {
        let mut raw = RawConfig::parse(TOML_CFG, false).unwrap();
        raw.set("params.omega_g = 1e-3").unwrap();
        assert!(!raw.entries.contains_key("params.gamma"));
        raw.set("experiment=fisher").unwrap();
        let c = raw.resolve(None, true).unwrap();
        assert_eq!(c.experiment, Experiment::Fisher);
        assert_eq!(c.params.omega_g, 1e-3);
        assert!(raw.set("nonsense=1").is_err());
        assert!(raw.set("no-equals-sign").is_err());
    }

    #[test]
    fn canonical_round_trip() {
        let mut raw = RawConfig::parse(TOML_CFG, false).unwrap();
        raw.set("sweep.parameter=\"params.theta_postselect\"")
            .unwrap();
        raw.set("sweep.scale=\"log\"").unwrap();
        raw.set("sweep.start=1e-4").unwrap();
        raw.set("sweep.stop=1e-2").unwrap();
        raw.set("sweep.points=3").unwrap();
        let c = raw.resolve(Some(Experiment::Kick), true).unwrap();
        let text = crate::cli::output::to_json(&c.to_entries()).unwrap();
        let back: BTreeMap<String, Value> = serde_json::from_str(&text).unwrap();
        assert_eq!(RunConfig::from_entries(back).unwrap(), c);
    }

    #[test]
    fn sweep_grids() {
        let s = SweepSpec {
            parameter: "params.gamma".into(),
            scale: Scale::Log,
            start: 1e-4,
            stop: 1e-1,
            points: 4,
        };
        let g = s.grid();
        assert_eq!(g.len(), 4);
        assert_eq!(g[0], 1e-4);
        assert_eq!(g[3], 1e-1);
        assert!((g[1] / 1e-3 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn regime_guard_maps_to_its_own_exit_code() {
        let raw = RawConfig::parse("params.lambda_coupling = 500.0\nparams.theta_postselect = 0.1\nparams.omega_g = 10.0\n", false).unwrap();
        let e = raw.resolve(Some(Experiment::Kick), true).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }
}
