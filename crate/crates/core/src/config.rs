//! Run configuration: a TOML file with `[particle]`, `[potential]`,
//! `[simulation]` and `[output]` sections, plus `section.key=value`
//! overrides from the command line. Every section is optional and defaults
//! to the canonical scenario.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ParticleParams, PotentialProfile, SimulationConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParticleSection {
    pub m: f64,
    pub alpha_c: f64,
    pub p: f64,
}

impl Default for ParticleSection {
    fn default() -> Self {
        ParticleSection { m: 1.0, alpha_c: 0.01, p: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShapeName {
    #[serde(alias = "quintic")]
    QuinticSmoothstep,
    #[serde(alias = "tanh")]
    TanhStep,
    Tabulated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PotentialSection {
    #[serde(rename = "V0")]
    pub v0: f64,
    #[serde(rename = "Z1")]
    pub z1: f64,
    #[serde(rename = "Z2")]
    pub z2: f64,
    pub shape: ShapeName,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tanh_width: Option<f64>,
    /// (z, V) nodes for the tabulated shape.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub table: Option<Vec<[f64; 2]>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_profile: Option<f64>,
}

impl Default for PotentialSection {
    fn default() -> Self {
        PotentialSection {
            v0: 0.2,
            z1: 2.0,
            z2: 1.0,
            shape: ShapeName::QuinticSmoothstep,
            tanh_width: None,
            table: None,
            eps_profile: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub formats: Vec<Format>,
    /// Seed for probe-point selection in `verify`.
    pub seed: u64,
    /// Worker threads; 0 uses all cores.
    pub workers: usize,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: PathBuf::from("out"), formats: vec![Format::Csv, Format::Json], seed: 1, workers: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub particle: ParticleSection,
    pub potential: PotentialSection,
    pub simulation: SimulationConfig,
    pub output: OutputSection,
}

/// Parameters accepted by `sweep`.
pub const SWEEP_PARAMS: [&str; 5] = ["p", "V0", "Z1", "Z2", "alpha_c"];

impl RunConfig {
    /// Reads `path` (or starts from the defaults), applies `overrides` of the
    /// form `section.key=value`, and validates the result.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut table = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?;
                text.parse::<toml::Table>().map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
            }
            None => toml::Table::new(),
        };
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let cfg: RunConfig =
            toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.simulation.validate()?;
        self.scenario().map(|_| ())
    }

    pub fn particle(&self) -> Result<ParticleParams> {
        ParticleParams::new(self.particle.m, self.particle.alpha_c, self.particle.p)
    }

    pub fn profile(&self) -> Result<PotentialProfile> {
        let s = &self.potential;
        let profile = match s.shape {
            ShapeName::QuinticSmoothstep => PotentialProfile::quintic(s.v0, s.z1, s.z2)?,
            ShapeName::TanhStep => PotentialProfile::tanh(s.v0, s.z1, s.z2, s.tanh_width)?,
            ShapeName::Tabulated => {
                let table = s
                    .table
                    .as_ref()
                    .ok_or_else(|| Error::param("potential.table", "required for the tabulated shape"))?;
                let nodes: Vec<(f64, f64)> = table.iter().map(|r| (r[0], r[1])).collect();
                PotentialProfile::tabulated(s.v0, s.z1, s.z2, &nodes)?
            }
        };
        match s.eps_profile {
            Some(eps) => profile.with_eps(eps),
            None => Ok(profile),
        }
    }

    pub fn scenario(&self) -> Result<(PotentialProfile, ParticleParams)> {
        Ok((self.profile()?, self.particle()?))
    }

    /// Copy with one sweep parameter replaced.
    pub fn with_param(&self, name: &str, value: f64) -> Result<Self> {
        let mut c = self.clone();
        match name {
            "p" => c.particle.p = value,
            "alpha_c" => c.particle.alpha_c = value,
            "V0" => c.potential.v0 = value,
            "Z1" => c.potential.z1 = value,
            "Z2" => c.potential.z2 = value,
            _ => {
                return Err(Error::param(
                    "param",
                    format!("unknown sweep parameter `{name}`; expected one of {}", SWEEP_PARAMS.join(", ")),
                ))
            }
        }
        Ok(c)
    }
}

fn apply_override(table: &mut toml::Table, spec: &str) -> Result<()> {
    let (key, raw) =
        spec.split_once('=').ok_or_else(|| Error::Config(format!("override `{spec}` is not section.key=value")))?;
    let (section, field) = key
        .trim()
        .split_once('.')
        .ok_or_else(|| Error::Config(format!("override key `{key}` is not section.key")))?;
    let raw = raw.trim();
    let value = match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.to_string())),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let entry = table.entry(section.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
    match entry {
        toml::Value::Table(t) => {
            t.insert(field.to_string(), value);
            Ok(())
        }
        _ => Err(Error::Config(format!("`{section}` is not a section"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_canonical() {
        let c = RunConfig::load(None, &[]).unwrap();
        assert_eq!(c.particle.p, 1.0);
        assert_eq!(c.potential.v0, 0.2);
        assert_eq!(c.potential.shape, ShapeName::QuinticSmoothstep);
    }

    #[test]
    fn overrides_apply() {
        let c = RunConfig::load(
            None,
            &["particle.p=3".into(), "potential.shape=tanh-step".into(), "simulation.fd_richardson=true".into()],
        )
        .unwrap();
        assert_eq!(c.particle.p, 3.0);
        assert_eq!(c.potential.shape, ShapeName::TanhStep);
        assert!(c.simulation.fd_richardson);
    }

    #[test]
    fn unknown_key_is_named() {
        let e = RunConfig::load(None, &["particle.mass=2".into()]).unwrap_err();
        assert!(e.is_validation());
        assert!(e.to_string().contains("mass"), "{e}");
    }

    #[test]
    fn sweep_parameters() {
        let c = RunConfig::default();
        assert_eq!(c.with_param("V0", -0.3).unwrap().potential.v0, -0.3);
        assert!(c.with_param("m", 2.0).is_err());
    }
}
