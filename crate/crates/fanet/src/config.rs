//! Experiment configuration files and command-line overrides.
//!
//! Configs are flat TOML with one section per parameter group (`[channel]`,
//! `[mobility]`, `[tracker]`); every key is optional and falls back to the
//! built-in defaults. Unknown keys are rejected with the offending key path
//! so typos surface instead of silently reverting to defaults.

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::harness::ExperimentConfig;
use crate::routing::Protocol;

/// Environment variable consulted for the output directory when no
/// `--output` override is given.
pub const OUTPUT_DIR_ENV: &str = "FANET_OUTPUT_DIR";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config file {path} not found")]
    NotFound { path: PathBuf },
    #[error("cannot read {path}: {source}")]
    Unreadable { path: PathBuf, source: std::io::Error },
    #[error("config file {path} invalid:\n{message}")]
    Parse { path: PathBuf, message: String },
    #[error("config constraint violated: {0}")]
    Constraint(String),
}

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    /// Replaces the density list with this single density.
    pub density: Option<f64>,
    /// Replaces the antenna-element list with this single count.
    pub antennas: Option<usize>,
    /// Restricts the protocol list to this protocol.
    pub protocol: Option<Protocol>,
    /// Replaces the master seed.
    pub seed: Option<u64>,
    /// Replaces the Monte Carlo sample count.
    pub samples: Option<usize>,
    /// Replaces the output directory.
    pub output: Option<PathBuf>,
}

/// Loads a config file and applies overrides plus the output-dir
/// environment fallback. Precedence for the output directory:
/// `--output` flag, then `FANET_OUTPUT_DIR`, then the file value.
pub fn load_config(path: &Path, overrides: &Overrides) -> Result<ExperimentConfig, ConfigError> {
    if !path.exists() {
        return Err(ConfigError::NotFound { path: path.to_path_buf() });
    }
    let text = std::fs::read_to_string(path)
        .map_err(|source| ConfigError::Unreadable { path: path.to_path_buf(), source })?;
    let mut cfg: ExperimentConfig = toml::from_str(&text)
        .map_err(|e| ConfigError::Parse { path: path.to_path_buf(), message: e.to_string() })?;

    if let Some(density) = overrides.density {
        cfg.densities = vec![density];
    }
    if let Some(antennas) = overrides.antennas {
        cfg.antenna_elements = vec![antennas];
    }
    if let Some(protocol) = overrides.protocol {
        cfg.protocols = vec![protocol];
    }
    if let Some(seed) = overrides.seed {
        cfg.master_seed = seed;
    }
    if let Some(samples) = overrides.samples {
        cfg.n_mc_samples = samples;
    }
    if let Some(output) = &overrides.output {
        cfg.output_dir = output.clone();
    } else if let Ok(dir) = std::env::var(OUTPUT_DIR_ENV) {
        if !dir.is_empty() {
            cfg.output_dir = PathBuf::from(dir);
        }
    }

    cfg.validate().map_err(|e| ConfigError::Constraint(e.to_string()))?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn missing_file_is_reported() {
        let err = load_config(Path::new("/nonexistent/fanet.toml"), &Overrides::default())
            .unwrap_err();
        assert!(matches!(err, ConfigError::NotFound { .. }));
    }

    #[test]
    fn empty_file_yields_defaults() {
        let f = write_temp("");
        let cfg = load_config(f.path(), &Overrides::default()).unwrap();
        assert_eq!(cfg.n_networks, ExperimentConfig::default().n_networks);
        assert_eq!(cfg.uav_count(50_000.0), 20);
    }

    #[test]
    fn unknown_key_names_the_offender() {
        let f = write_temp("n-networkz = 10\n");
        let err = load_config(f.path(), &Overrides::default()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("n-networkz"), "{msg}");
    }

    #[test]
    fn type_mismatch_is_a_parse_error() {
        let f = write_temp("n-networks = \"many\"\n");
        let err = load_config(f.path(), &Overrides::default()).unwrap_err();
        assert!(matches!(err, ConfigError::Parse { .. }));
    }

    #[test]
    fn constraint_violation_is_reported() {
        let f = write_temp("cross-traffic = 2.0\n");
        let err = load_config(f.path(), &Overrides::default()).unwrap_err();
        assert!(matches!(err, ConfigError::Constraint(_)));
    }

    #[test]
    fn density_override_replaces_list() {
        let f = write_temp("densities = [25000.0, 50000.0]\n");
        let overrides = Overrides { density: Some(50_000.0), ..Default::default() };
        let cfg = load_config(f.path(), &overrides).unwrap();
        assert_eq!(cfg.densities, vec![50_000.0]);
    }

    #[test]
    fn nested_sections_parse() {
        let f = write_temp(
            r#"
            [channel]
            carrier-hz = 60e9
            [mobility]
            speed-min = 1.0
            speed-max = 2.0
            [tracker]
            measurement-noise-std = 0.5
            [tracker.process-noise.isotropic]
            density = 1.0
            "#,
        );
        let cfg = load_config(f.path(), &Overrides::default()).unwrap();
        assert_eq!(cfg.channel.carrier_hz, 60e9);
        assert_eq!(cfg.mobility.speed_max, 2.0);
        assert_eq!(cfg.tracker.measurement_noise_std, 0.5);
    }
}
