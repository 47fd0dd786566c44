//! Run configuration: JSON file, command-line overrides and validation.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use qbc_core::{BlockAddressMode, RegisterLayout, Scheme, DEFAULT_QFS};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Output directory fallback when neither flag nor config file names one.
pub const OUTPUT_DIR_ENV: &str = "QBC_OUTPUT_DIR";
const DEFAULT_OUTPUT_DIR: &str = "qbc-out";

/// Display unit for bit rates in the summary line. Stored values are always bits.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    #[default]
    Bits,
    Kb,
    Mb,
}

impl Units {
    pub fn format(&self, bits: u64) -> String {
        match self {
            Units::Bits => format!("{bits} bits"),
            Units::Kb => format!("{:.3} KB", bits as f64 / 8.0 / 1024.0),
            Units::Mb => format!("{:.6} MB", bits as f64 / 8.0 / 1024.0 / 1024.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Image path, or an inline synthetic spec such as `synth:gradient:64x64`.
    pub input: String,
    pub qfs: Vec<u32>,
    #[serde(with = "scheme_list")]
    pub schemes: Vec<Scheme>,
    pub q: u32,
    pub block: usize,
    #[serde(with = "as_string")]
    pub b_e_mode: BlockAddressMode,
    pub output_dir: PathBuf,
    pub verify_circuits: bool,
    pub verify_block_limit: usize,
    pub units: Units,
    pub dump_circuits: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            input: String::new(),
            qfs: DEFAULT_QFS.to_vec(),
            schemes: Scheme::ALL.to_vec(),
            q: 8,
            block: 16,
            b_e_mode: BlockAddressMode::default(),
            output_dir: PathBuf::from(DEFAULT_OUTPUT_DIR),
            verify_circuits: false,
            verify_block_limit: 4,
            units: Units::Bits,
            dump_circuits: false,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("bad config JSON: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if self.input.is_empty() {
            return bad("no input given".into());
        }
        if self.qfs.is_empty() {
            return bad("qfs must not be empty".into());
        }
        if self.qfs.contains(&0) {
            return bad("quantization factors must be positive".into());
        }
        if self.schemes.is_empty() {
            return bad("schemes must not be empty".into());
        }
        if !(1..=12).contains(&self.q) {
            return bad(format!("q must lie in 1..=12, got {}", self.q));
        }
        if !self.block.is_power_of_two() || !(2..=16).contains(&self.block) {
            return bad(format!("block must be a power of two in 2..=16, got {}", self.block));
        }
        Ok(())
    }

    pub fn layout(&self) -> Result<RegisterLayout, CliError> {
        RegisterLayout::square(self.q, self.block).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Quantization factors ascending, without duplicates.
    pub fn sorted_qfs(&self) -> Vec<u32> {
        let mut v = self.qfs.clone();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Schemes in the given order, without duplicates.
    pub fn unique_schemes(&self) -> Vec<Scheme> {
        let mut out: Vec<Scheme> = Vec::new();
        for s in &self.schemes {
            if !out.contains(s) {
                out.push(*s);
            }
        }
        out
    }
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct Overrides {
    /// JSON file with RunConfig fields; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Image path (PGM or PNG) or `synth:<kind>[:<param>]:<W>x<H>`.
    #[arg(long, short)]
    pub input: Option<String>,
    /// Comma-separated quantization factors.
    #[arg(long, value_delimiter = ',')]
    pub qfs: Option<Vec<u32>>,
    /// Comma-separated schemes (SCMNEQR, EFRQI).
    #[arg(long, value_delimiter = ',', value_parser = Scheme::from_str)]
    pub schemes: Option<Vec<Scheme>>,
    /// Value qubits per coefficient.
    #[arg(long)]
    pub q: Option<u32>,
    /// Quantum block side length.
    #[arg(long)]
    pub block: Option<usize>,
    /// per-block-address, fixed or per-coefficient.
    #[arg(long, value_parser = BlockAddressMode::from_str)]
    pub b_e_mode: Option<BlockAddressMode>,
    #[arg(long, short)]
    pub output_dir: Option<PathBuf>,
    /// Also simulate block circuits during `compress`.
    #[arg(long)]
    pub verify_circuits: bool,
    #[arg(long)]
    pub verify_block_limit: Option<usize>,
    #[arg(long, value_enum)]
    pub units: Option<Units>,
    /// Write the gate list of every verified circuit.
    #[arg(long)]
    pub dump_circuits: bool,
}

impl Overrides {
    /// Merges file, flags and the output-directory fallback, then validates.
    pub fn resolve(&self, env_output_dir: Option<PathBuf>) -> Result<RunConfig, CliError> {
        let (mut cfg, file_has_output) = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
                let has_output = serde_json::from_str::<serde_json::Value>(&text)
                    .ok()
                    .and_then(|v| v.get("output_dir").cloned())
                    .is_some();
                let cfg = RunConfig::from_json(&text)
                    .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
                (cfg, has_output)
            }
            None => (RunConfig::default(), false),
        };
        if let Some(v) = &self.input {
            cfg.input = v.clone();
        }
        if let Some(v) = &self.qfs {
            cfg.qfs = v.clone();
        }
        if let Some(v) = &self.schemes {
            cfg.schemes = v.clone();
        }
        if let Some(v) = self.q {
            cfg.q = v;
        }
        if let Some(v) = self.block {
            cfg.block = v;
        }
        if let Some(v) = self.b_e_mode {
            cfg.b_e_mode = v;
        }
        match (&self.output_dir, env_output_dir) {
            (Some(dir), _) => cfg.output_dir = dir.clone(),
            (None, Some(dir)) if !file_has_output => cfg.output_dir = dir,
            _ => {}
        }
        cfg.verify_circuits |= self.verify_circuits;
        if let Some(v) = self.verify_block_limit {
            cfg.verify_block_limit = v;
        }
        if let Some(v) = self.units {
            cfg.units = v;
        }
        cfg.dump_circuits |= self.dump_circuits;
        cfg.validate()?;
        Ok(cfg)
    }
}

mod as_string {
    use super::*;
    use serde::{de::Error, Deserializer, Serializer};

    pub fn serialize<T: fmt::Display, S: Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(v)
    }

    pub fn deserialize<'de, T, D>(d: D) -> Result<T, D::Error>
    where
        T: FromStr,
        T::Err: fmt::Display,
        D: Deserializer<'de>,
    {
        String::deserialize(d)?.parse().map_err(D::Error::custom)
    }
}

mod scheme_list {
    use super::*;
    use serde::{de::Error, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[Scheme], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|x| x.as_str()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Scheme>, D::Error> {
        Vec::<String>::deserialize(d)?
            .iter()
            .map(|s| s.parse().map_err(D::Error::custom))
            .collect()
    }
}
