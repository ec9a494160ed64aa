//! Simulation configuration and its flat `key=value` file form.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::phy::{AcmTable, FecScheme, DEFAULT_BLER_TARGET};
use crate::rate_planner::PlanningMode;
use crate::sampler::{BoundaryMode, DEFAULT_GOP_SIZE};
use crate::synth::SynthKind;
use crate::tokenizer::TokenizerConfig;

/// Splits `key=value` lines; blank lines and `#` comments are skipped.
pub fn parse_key_values(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse(format!("line {}: expected key=value", i + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub enum InputSource {
    /// netpbm file/directory or raw stream (see [`crate::frame::load_frames`]).
    File {
        path: PathBuf,
        descriptor: Option<PathBuf>,
    },
    Synthetic {
        kind: SynthKind,
        width: usize,
        height: usize,
        channels: usize,
    },
}

impl Default for InputSource {
    fn default() -> Self {
        Self::Synthetic { kind: SynthKind::Moving, width: 256, height: 256, channels: 3 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub input: InputSource,
    /// Frames to simulate; `None` takes the whole input (synthetic: 300).
    pub frames: Option<usize>,
    pub stride: usize,
    pub gop_size: usize,
    /// Target channel bandwidth ratio.
    pub cbr: f64,
    /// Es/N0 in dB, shared by both link ends.
    pub snr_db: f64,
    pub acm_table: Option<PathBuf>,
    pub bler_target: f64,
    pub planning: PlanningMode,
    pub fec: FecScheme,
    pub boundary: BoundaryMode,
    pub tokenizer: TokenizerConfig,
    pub seed: u64,
    pub csv_out: Option<PathBuf>,
    pub dump_dir: Option<PathBuf>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            input: InputSource::default(),
            frames: None,
            stride: 4,
            gop_size: DEFAULT_GOP_SIZE,
            cbr: 4e-4,
            snr_db: 6.0,
            acm_table: None,
            bler_target: DEFAULT_BLER_TARGET,
            planning: PlanningMode::PerFrame,
            fec: FecScheme::Ideal { bler: DEFAULT_BLER_TARGET },
            boundary: BoundaryMode::CopyNearest,
            tokenizer: TokenizerConfig::default(),
            seed: 0,
            csv_out: None,
            dump_dir: None,
        }
    }
}

impl SimConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(&std::fs::read_to_string(path)?)?;
        Ok(cfg)
    }

    /// Overrides fields from `key=value` text.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (k, v) in parse_key_values(text)? {
            self.set(&k, &v)?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse().map_err(|_| Error::Config(format!("{key}: cannot parse {v:?}")))
        }
        let synth_geometry = |input: &mut InputSource| -> Result<(usize, usize, usize)> {
            match input {
                InputSource::Synthetic { width, height, channels, .. } => Ok((*width, *height, *channels)),
                InputSource::File { .. } => Err(Error::Config(format!("{key} only applies to synthetic input"))),
            }
        };
        match key {
            "input" => {
                let descriptor = match &self.input {
                    InputSource::File { descriptor, .. } => descriptor.clone(),
                    _ => None,
                };
                self.input = InputSource::File { path: PathBuf::from(value), descriptor };
            }
            "descriptor" => match &mut self.input {
                InputSource::File { descriptor, .. } => *descriptor = Some(PathBuf::from(value)),
                _ => return Err(Error::Config("descriptor given without a file input".into())),
            },
            "synthetic" => {
                let (width, height, channels) = match &self.input {
                    InputSource::Synthetic { width, height, channels, .. } => (*width, *height, *channels),
                    _ => (256, 256, 3),
                };
                self.input = InputSource::Synthetic { kind: value.parse()?, width, height, channels };
            }
            "width" | "height" | "channels" => {
                let (w, h, c) = synth_geometry(&mut self.input)?;
                let n: usize = num(key, value)?;
                let (w, h, c) = match key {
                    "width" => (n, h, c),
                    "height" => (w, n, c),
                    _ => (w, h, n),
                };
                if let InputSource::Synthetic { width, height, channels, .. } = &mut self.input {
                    (*width, *height, *channels) = (w, h, c);
                }
            }
            "frames" => self.frames = Some(num(key, value)?),
            "stride" => self.stride = num(key, value)?,
            "gop" | "gop_size" => self.gop_size = num(key, value)?,
            "cbr" => self.cbr = num(key, value)?,
            "snr_db" | "snr" => self.snr_db = num(key, value)?,
            "acm" | "acm_table" => self.acm_table = Some(PathBuf::from(value)),
            "bler" | "bler_target" => {
                self.bler_target = num(key, value)?;
                if let FecScheme::Ideal { bler } = &mut self.fec {
                    *bler = self.bler_target;
                }
            }
            "planning" => self.planning = value.parse()?,
            "fec" => {
                self.fec = match value.parse()? {
                    FecScheme::Ideal { .. } => FecScheme::Ideal { bler: self.bler_target },
                    other => other,
                }
            }
            "boundary" => self.boundary = value.parse()?,
            "block_size" => {
                let b: usize = num(key, value)?;
                self.tokenizer =
                    TokenizerConfig::with_geometry(b, self.tokenizer.coeffs_per_block, self.tokenizer.bits_per_token);
            }
            "coeffs_per_block" => {
                let d: usize = num(key, value)?;
                self.tokenizer =
                    TokenizerConfig::with_geometry(self.tokenizer.block_size, d, self.tokenizer.bits_per_token);
            }
            "bits_per_token" => self.tokenizer.bits_per_token = num(key, value)?,
            "quant_steps" => {
                self.tokenizer.quant_steps =
                    value.split(',').map(|s| num::<f64>(key, s.trim())).collect::<Result<Vec<_>>>()?;
            }
            "seed" => self.seed = num(key, value)?,
            "csv" | "csv_out" => self.csv_out = Some(PathBuf::from(value)),
            "dump" | "dump_dir" => self.dump_dir = Some(PathBuf::from(value)),
            other => return Err(Error::Config(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    pub fn load_acm(&self) -> Result<AcmTable> {
        match &self.acm_table {
            Some(p) => AcmTable::parse(&std::fs::read_to_string(p)?, self.bler_target),
            None => {
                let mut t = AcmTable::default();
                t.bler_target = self.bler_target;
                Ok(t)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.tokenizer.validate()?;
        if self.stride == 0 || self.gop_size == 0 {
            return Err(Error::Config("stride and GOP size must be positive".into()));
        }
        if !(self.cbr.is_finite() && self.cbr >= 0.0) {
            return Err(Error::Config(format!("CBR must be finite and non-negative, got {}", self.cbr)));
        }
        if self.snr_db.is_nan() {
            return Err(Error::Config("SNR is NaN".into()));
        }
        if !(self.bler_target > 0.0 && self.bler_target < 1.0) {
            return Err(Error::Config(format!("BLER target must be in (0, 1), got {}", self.bler_target)));
        }
        if let FecScheme::Ideal { bler } = self.fec {
            if !(0.0..1.0).contains(&bler) {
                return Err(Error::Config(format!("ideal FEC BLER must be in [0, 1), got {bler}")));
            }
        }
        Ok(())
    }
}
