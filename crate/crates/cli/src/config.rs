//! Run configuration: a TOML file plus `--set dotted.key=value` overrides,
//! resolved against a preset into a complete [`SimConfig`].
//!
//! Every key is checked against the resolved tree, so a misspelt override
//! is an error naming the key instead of a silently ignored setting.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use uuv_hybrid::metrics::MetricsConfig;
use uuv_hybrid::sim::{ControllerVariant, SimConfig};

/// Which artifacts `run` writes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Export {
    pub csv: bool,
    pub svg: bool,
    pub metrics: bool,
}

impl Default for Export {
    fn default() -> Self {
        Self {
            csv: true,
            svg: true,
            metrics: true,
        }
    }
}

/// Contents of a `--config` file.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub preset: Option<String>,
    pub controller: Option<ControllerVariant>,
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub export: Export,
    pub metrics: Option<MetricsConfig>,
    pub scenario: Option<toml::Table>,
    pub vehicle: Option<toml::Table>,
    pub kinematic: Option<toml::Table>,
    pub dynamic: Option<toml::Table>,
    pub model_scale: Option<f64>,
    pub diagnostics: Option<bool>,
    /// Flat dotted-key overrides, applied after the tables above.
    #[serde(default)]
    pub set: BTreeMap<String, toml::Value>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct CliOverrides {
    pub preset: Option<String>,
    pub controller: Option<ControllerVariant>,
    pub seed: Option<u64>,
    pub set: Vec<(String, toml::Value)>,
}

/// Parses `key=value`. The value is read as a TOML value when it is one
/// (`3`, `0.5`, `true`, `[1, 2, 3]`, `"text"`) and as a bare string otherwise.
pub fn parse_assignment(raw: &str) -> Result<(String, toml::Value)> {
    let (key, value) = raw
        .split_once('=')
        .ok_or_else(|| anyhow!("override `{raw}` is not of the form key=value"))?;
    let key = key.trim();
    if key.is_empty() {
        bail!("override `{raw}` has an empty key");
    }
    Ok((key.to_string(), parse_value(value.trim())))
}

fn parse_value(raw: &str) -> toml::Value {
    #[derive(Deserialize)]
    struct Wrapper {
        v: toml::Value,
    }
    match toml::from_str::<Wrapper>(&format!("v = {raw}")) {
        Ok(w) => w.v,
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

fn to_json(value: &toml::Value) -> Result<Value> {
    serde_json::to_value(value).context("converting TOML value")
}

/// Merges `patch` into `base`, refusing keys that `base` does not have.
/// A patch that changes an enum's `kind` tag replaces the object wholesale,
/// and a patch onto a `null` (an absent optional section) fills it in.
fn merge_strict(base: &mut Value, patch: Value, path: &str) -> Result<()> {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            if let (Some(old), Some(new)) = (b.get("kind"), p.get("kind")) {
                if old != new {
                    *b = p;
                    return Ok(());
                }
            }
            for (key, value) in p {
                let full = join(path, &key);
                match b.get_mut(&key) {
                    Some(slot) => merge_strict(slot, value, &full)?,
                    None => bail!("unknown configuration key `{full}`"),
                }
            }
            Ok(())
        }
        (slot, value) => {
            *slot = value;
            Ok(())
        }
    }
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

/// Sets one dotted key. Numeric segments index arrays
/// (`dynamic.k.2`, `kinematic.shunting.0.a`).
pub fn set_dotted(root: &mut Value, key: &str, value: Value) -> Result<()> {
    let mut node = root;
    let mut walked = String::new();
    let segments: Vec<&str> = key.split('.').collect();
    for (i, seg) in segments.iter().enumerate() {
        walked = join(&walked, seg);
        let next = match node {
            Value::Object(map) => map.get_mut(*seg),
            Value::Array(items) => seg.parse::<usize>().ok().and_then(|idx| items.get_mut(idx)),
            _ => None,
        };
        let Some(next) = next else {
            bail!("unknown configuration key `{walked}` (in override `{key}`)");
        };
        if i + 1 == segments.len() {
            return merge_strict(next, value, &walked);
        }
        node = next;
    }
    unreachable!("split always yields at least one segment")
}

/// A fully resolved run: simulation config plus harness settings.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub sim: SimConfig,
    pub metrics: MetricsConfig,
    pub export: Export,
    pub out_dir: Option<PathBuf>,
}

pub fn resolve(file: &RunConfig, cli: &CliOverrides) -> Result<Resolved> {
    let preset = cli.preset.as_ref().or(file.preset.as_ref());
    let mut tree = match preset {
        Some(name) => serde_json::to_value(SimConfig::preset(name, ControllerVariant::default())?)?,
        None => {
            let Some(scenario) = &file.scenario else {
                bail!("no scenario: give a preset (`preset = \"straight\"` or --preset) or a full [scenario] table");
            };
            let mut obj = Map::new();
            obj.insert("scenario".into(), serde_json::to_value(scenario)?);
            let cfg: SimConfig = serde_json::from_value(Value::Object(obj)).context("inline [scenario] table")?;
            serde_json::to_value(cfg)?
        }
    };

    let sections = [
        ("scenario", file.scenario.as_ref().filter(|_| preset.is_some())),
        ("vehicle", file.vehicle.as_ref()),
        ("kinematic", file.kinematic.as_ref()),
        ("dynamic", file.dynamic.as_ref()),
    ];
    for (name, table) in sections {
        if let Some(table) = table {
            let patch = serde_json::to_value(table)?;
            let slot = tree.get_mut(name).expect("SimConfig always has this section");
            merge_strict(slot, patch, name)?;
        }
    }
    if let Some(scale) = file.model_scale {
        tree["model_scale"] = scale.into();
    }
    if let Some(diag) = file.diagnostics {
        tree["diagnostics"] = diag.into();
    }
    if let Some(controller) = cli.controller.or(file.controller) {
        tree["scenario"]["controller"] = controller.to_string().into();
    }
    for (key, value) in &file.set {
        set_dotted(&mut tree, key, to_json(value)?)?;
    }
    for (key, value) in &cli.set {
        set_dotted(&mut tree, key, to_json(value)?)?;
    }

    let mut sim: SimConfig = serde_json::from_value(tree).context("resolved configuration")?;
    if let Some(seed) = cli.seed.or(file.seed) {
        match sim.scenario.noise.as_mut() {
            Some(noise) => noise.seed = seed,
            None => bail!("`seed` given but the scenario has no noise configuration"),
        }
    }
    sim.validate()?;
    Ok(Resolved {
        sim,
        metrics: file.metrics.unwrap_or_default(),
        export: file.export,
        out_dir: file.out_dir.clone(),
    })
}
