//! Flat `key = value` run configuration.
//!
//! Values are layered: built-in defaults, then a config file, then
//! `RECON_<KEY>` environment variables, then `--set key=value` flags.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use recon_core::datagen::{DatasetConfig, PoseFamily};
use recon_core::extraction::ExtractionParams;
use recon_core::meshcore::SmoothingParams;
use recon_core::neural::{ModelDims, TrainConfig};
use recon_core::sampling::JOINT_COUNT;

pub const ENV_PREFIX: &str = "RECON_";

pub struct Key {
    pub name: &'static str,
    pub default: &'static str,
    pub help: &'static str,
}

const fn key(name: &'static str, default: &'static str, help: &'static str) -> Key {
    Key { name, default, help }
}

pub const KEYS: &[Key] = &[
    key("seed", "0", "master seed for data, initialization and sampling"),
    key("data_dir", "dataset", "dataset directory"),
    key("n_train", "64", "training items"),
    key("n_val", "0", "validation items"),
    key("n_test", "16", "test items"),
    key("image_size", "64", "silhouette and heatmap raster size (square)"),
    key("views", "1", "camera directions per item, 90 degrees apart (1-4)"),
    key("heatmap_sigma_px", "2", "joint heatmap Gaussian width in pixels"),
    key("samples_per_item", "8192", "stored occupancy samples per item"),
    key("uniform_fraction", "0.25", "share of samples drawn uniformly in the box"),
    key("surface_fraction", "0.5", "share of samples drawn near the surface"),
    key("sigma_fraction", "0.025", "near-surface noise, fraction of the body box diagonal"),
    key("radius_factor", "1.5", "hand/face ball radius in hand lengths"),
    key("clothing_amplitude", "0.012", "clothing fold amplitude in meters"),
    key("body_cell", "0.015", "body meshing cell in meters"),
    key("smooth_iterations", "30", "Laplacian smoothing iterations for the coarse target"),
    key("smooth_lambda", "0.5", "Laplacian smoothing step"),
    key("pose_families", "relaxed,arms_across,reach,crouch,stride", "pose families to draw from"),
    key("feature", "128", "observation feature size"),
    key("latent", "16", "latent code size"),
    key("blocks", "5", "coarse residual blocks (displacement network uses twice as many)"),
    key("hidden", "128", "residual block width"),
    key("use_joints", "true", "condition on joint heatmaps and coordinates"),
    key("lr_schedule", "0:1e-4", "coarse learning rates as epoch:rate pairs"),
    key("disp_lr_schedule", "0:1e-4,170:1e-5", "displacement learning rates as epoch:rate pairs"),
    key("batch_size", "14", "items per optimization step"),
    key("k", "2048", "occupancy samples per item per step"),
    key("n", "10000", "vertices per item per displacement step"),
    key("pos_weight", "25", "weight of inside samples in the cross-entropy"),
    key("kl_weight", "1", "weight of the latent KL term"),
    key("epochs", "645", "coarse training epochs"),
    key("disp_epochs", "1700", "displacement training epochs"),
    key("tau", "0.96", "occupancy threshold for extraction"),
    key("mise_initial_res", "32", "initial extraction grid resolution"),
    key("mise_final_res", "128", "final extraction grid resolution"),
    key("eval_samples", "100000", "samples per metric"),
];

/// A rejected configuration value.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub key: String,
    pub msg: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config key '{}': {}", self.key, self.msg)
    }
}

impl std::error::Error for ConfigError {}

fn err(key: &str, msg: impl Into<String>) -> ConfigError {
    ConfigError { key: key.to_string(), msg: msg.into() }
}

/// Raw string values for every key.
#[derive(Debug, Clone, PartialEq)]
pub struct RawConfig(BTreeMap<String, String>);

impl Default for RawConfig {
    fn default() -> Self {
        Self(KEYS.iter().map(|k| (k.name.to_string(), k.default.to_string())).collect())
    }
}

impl RawConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let key = key.trim();
        match self.0.get_mut(key) {
            Some(v) => {
                *v = value.trim().to_string();
                Ok(())
            }
            None => Err(err(key, "unknown key")),
        }
    }

    pub fn get(&self, key: &str) -> &str {
        self.0.get(key).map(String::as_str).unwrap_or_else(|| panic!("undeclared key {key}"))
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| err(line, format!("line {}: expected key = value", n + 1)))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    /// Applies `RECON_<KEY>` variables for known keys.
    pub fn apply_env(&mut self, vars: impl IntoIterator<Item = (String, String)>) -> Result<(), ConfigError> {
        for (name, value) in vars {
            let Some(rest) = name.strip_prefix(ENV_PREFIX) else { continue };
            let key = rest.to_ascii_lowercase();
            if self.0.contains_key(&key) {
                self.set(&key, &value)?;
            }
        }
        Ok(())
    }

    pub fn apply_set(&mut self, assignment: &str) -> Result<(), ConfigError> {
        let (k, v) = assignment.split_once('=').ok_or_else(|| err(assignment, "expected key=value"))?;
        self.set(k, v)
    }

    fn parse<T: FromStr>(&self, key: &str) -> Result<T, ConfigError>
    where
        T::Err: fmt::Display,
    {
        self.get(key).parse().map_err(|e: T::Err| err(key, format!("cannot parse '{}': {e}", self.get(key))))
    }
}

/// Help text listing every key with its default.
pub fn keys_help() -> String {
    let mut s = String::from("Config keys (set in a file, as RECON_<KEY>, or with --set key=value):\n");
    for k in KEYS {
        s.push_str(&format!("  {:<20} {:<40} {}\n", k.name, k.default, k.help));
    }
    s
}

/// Validated, typed configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub seed: u64,
    pub data_dir: PathBuf,
    pub dataset: DatasetConfig,
    pub dims: ModelDims,
    pub coarse_train: TrainConfig,
    pub disp_train: TrainConfig,
    pub extraction: ExtractionParams,
    pub eval_samples: usize,
}

fn parse_schedule(raw: &RawConfig, key: &str) -> Result<Vec<(usize, f64)>, ConfigError> {
    raw.get(key)
        .split(',')
        .map(|part| {
            let (e, lr) = part.split_once(':').ok_or_else(|| err(key, format!("'{part}' is not epoch:rate")))?;
            let e: usize = e.trim().parse().map_err(|_| err(key, format!("bad epoch '{e}'")))?;
            let lr: f64 = lr.trim().parse().map_err(|_| err(key, format!("bad rate '{lr}'")))?;
            Ok((e, lr))
        })
        .collect()
}

fn positive(key: &str, v: f64) -> Result<f64, ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(err(key, format!("must be positive, got {v}")))
    }
}

fn nonzero(key: &str, v: usize) -> Result<usize, ConfigError> {
    if v > 0 {
        Ok(v)
    } else {
        Err(err(key, "must be positive"))
    }
}

impl RunConfig {
    pub fn from_raw(raw: &RawConfig) -> Result<Self, ConfigError> {
        let seed: u64 = raw.parse("seed")?;
        let families = raw
            .get("pose_families")
            .split(',')
            .map(|f| f.parse::<PoseFamily>().map_err(|e| err("pose_families", e.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        let fraction = |key: &str| -> Result<f64, ConfigError> {
            let v: f64 = raw.parse(key)?;
            if (0.0..=1.0).contains(&v) {
                Ok(v)
            } else {
                Err(err(key, format!("must lie in [0, 1], got {v}")))
            }
        };
        let uniform_fraction = fraction("uniform_fraction")?;
        let surface_fraction = fraction("surface_fraction")?;
        if uniform_fraction + surface_fraction > 1.0 {
            return Err(err("surface_fraction", "uniform_fraction + surface_fraction exceeds 1"));
        }
        let views: usize = raw.parse("views")?;
        if !(1..=4).contains(&views) {
            return Err(err("views", format!("must be between 1 and 4, got {views}")));
        }
        let smooth_lambda: f64 = raw.parse("smooth_lambda")?;
        if !(smooth_lambda > 0.0 && smooth_lambda <= 1.0) {
            return Err(err("smooth_lambda", format!("must lie in (0, 1], got {smooth_lambda}")));
        }
        let clothing_amplitude: f64 = raw.parse("clothing_amplitude")?;
        if !(clothing_amplitude >= 0.0 && clothing_amplitude.is_finite()) {
            return Err(err("clothing_amplitude", "must be >= 0"));
        }
        let image_size = nonzero("image_size", raw.parse("image_size")?)?;
        let dataset = DatasetConfig {
            n_train: raw.parse("n_train")?,
            n_val: raw.parse("n_val")?,
            n_test: raw.parse("n_test")?,
            seed,
            image_size,
            heatmap_sigma_px: positive("heatmap_sigma_px", raw.parse("heatmap_sigma_px")?)?,
            views,
            samples_per_item: nonzero("samples_per_item", raw.parse("samples_per_item")?)?,
            uniform_fraction,
            surface_fraction,
            sigma_fraction: positive("sigma_fraction", raw.parse("sigma_fraction")?)?,
            radius_factor: positive("radius_factor", raw.parse("radius_factor")?)?,
            clothing_amplitude,
            cell: positive("body_cell", raw.parse("body_cell")?)?,
            smoothing: SmoothingParams { iterations: raw.parse("smooth_iterations")?, lambda: smooth_lambda },
            families,
            ..DatasetConfig::default()
        };
        let use_joints: bool = raw.parse("use_joints")?;
        let dims = ModelDims {
            feature: nonzero("feature", raw.parse("feature")?)?,
            latent: nonzero("latent", raw.parse("latent")?)?,
            blocks: nonzero("blocks", raw.parse("blocks")?)?,
            hidden: nonzero("hidden", raw.parse("hidden")?)?,
            height: image_size,
            width: image_size,
            joints: if use_joints { JOINT_COUNT } else { 0 },
        };
        if image_size % 16 != 0 {
            return Err(err("image_size", format!("must be a multiple of 16, got {image_size}")));
        }
        let kl_weight: f64 = raw.parse("kl_weight")?;
        if !(kl_weight >= 0.0 && kl_weight.is_finite()) {
            return Err(err("kl_weight", "must be >= 0"));
        }
        let coarse_train = TrainConfig {
            lr_schedule: parse_schedule(raw, "lr_schedule")?,
            batch_size: nonzero("batch_size", raw.parse("batch_size")?)?,
            k_points: nonzero("k", raw.parse("k")?)?,
            n_vertices: nonzero("n", raw.parse("n")?)?,
            pos_weight: positive("pos_weight", raw.parse("pos_weight")?)?,
            kl_weight,
            epochs: raw.parse("epochs")?,
            seed,
        };
        coarse_train.validate().map_err(|e| err("lr_schedule", e.to_string()))?;
        let disp_train = TrainConfig {
            lr_schedule: parse_schedule(raw, "disp_lr_schedule")?,
            epochs: raw.parse("disp_epochs")?,
            ..coarse_train.clone()
        };
        disp_train.validate().map_err(|e| err("disp_lr_schedule", e.to_string()))?;
        let pow2 = |key: &str| -> Result<usize, ConfigError> {
            let v: usize = raw.parse(key)?;
            if v.is_power_of_two() {
                Ok(v)
            } else {
                Err(err(key, format!("must be a power of two, got {v}")))
            }
        };
        let tau: f64 = raw.parse("tau")?;
        if !(tau > 0.0 && tau < 1.0) {
            return Err(err("tau", format!("must lie in (0, 1), got {tau}")));
        }
        let extraction = ExtractionParams {
            tau,
            initial_res: pow2("mise_initial_res")?,
            final_res: pow2("mise_final_res")?,
            bbox: dataset.bbox,
        };
        if extraction.initial_res > extraction.final_res {
            return Err(err("mise_initial_res", "must not exceed mise_final_res"));
        }
        Ok(Self {
            seed,
            data_dir: PathBuf::from(raw.get("data_dir")),
            dataset,
            dims,
            coarse_train,
            disp_train,
            extraction,
            eval_samples: nonzero("eval_samples", raw.parse("eval_samples")?)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_parse() {
        let c = RunConfig::from_raw(&RawConfig::default()).unwrap();
        assert_eq!(c.coarse_train.k_points, 2048);
        assert_eq!(c.coarse_train.batch_size, 14);
        assert_eq!(c.extraction.tau, 0.96);
        assert_eq!(c.disp_train.lr_schedule, vec![(0, 1e-4), (170, 1e-5)]);
        assert_eq!(c.dims.joints, JOINT_COUNT);
    }

    #[test]
    fn layers_override_in_order() {
        let mut raw = RawConfig::default();
        raw.apply_text("# comment\nk = 512\ntau=0.5 # inline\n").unwrap();
        raw.apply_env([("RECON_K".to_string(), "256".to_string()), ("OTHER".to_string(), "x".to_string())]).unwrap();
        assert_eq!(raw.get("k"), "256");
        assert_eq!(raw.get("tau"), "0.5");
        raw.apply_set("k=128").unwrap();
        assert_eq!(raw.get("k"), "128");
    }

    #[test]
    fn rejects_bad_values_by_key() {
        for (k, v) in [("radius_factor", "-1"), ("tau", "1.5"), ("mise_final_res", "100"), ("lr_schedule", "3:1e-4"), ("k", "x")] {
            let mut raw = RawConfig::default();
            raw.set(k, v).unwrap();
            let e = RunConfig::from_raw(&raw).unwrap_err();
            assert_eq!(e.key, k, "{e}");
        }
        assert_eq!(RawConfig::default().apply_set("nope=1").unwrap_err().key, "nope");
    }

    #[test]
    fn help_lists_every_key() {
        let h = keys_help();
        for k in KEYS {
            assert!(h.contains(k.name) && h.contains(k.default));
        }
    }
}
