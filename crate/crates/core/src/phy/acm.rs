use std::fmt;
use std::str::FromStr;

use super::Modulation;
use crate::error::{Error, Result};

/// Default frame-level BLER target.
pub const DEFAULT_BLER_TARGET: f64 = 0.002;

/// One modulation-and-coding scheme, usable from `snr_threshold_db` upward.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McsEntry {
    pub snr_threshold_db: f64,
    pub code_rate: f64,
    pub modulation: Modulation,
}

impl McsEntry {
    pub fn bits_per_symbol(&self) -> u32 {
        self.modulation.bits_per_symbol()
    }

    /// Information bits per channel use, `rate * log2(M)`.
    pub fn spectral_efficiency(&self) -> f64 {
        self.code_rate * self.bits_per_symbol() as f64
    }
}

impl fmt::Display for McsEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} dB: rate {:.3} {}", self.snr_threshold_db, self.code_rate, self.modulation)
    }
}

/// SNR estimate shared by both link ends (Es/N0, dB).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelEstimate {
    pub snr_db: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AcmTable {
    rows: Vec<McsEntry>,
    pub bler_target: f64,
}

impl Default for AcmTable {
    /// AWGN/LDPC ladder from -2 dB to 10 dB in 2 dB steps.
    fn default() -> Self {
        use Modulation::{Qam16, Qpsk};
        let rows = [
            (-2.0, 0.245, Qpsk),
            (0.0, 0.301, Qpsk),
            (2.0, 0.514, Qpsk),
            (4.0, 0.663, Qpsk),
            (6.0, 0.424, Qam16),
            (8.0, 0.540, Qam16),
            (10.0, 0.643, Qam16),
        ]
        .into_iter()
        .map(|(snr_threshold_db, code_rate, modulation)| McsEntry { snr_threshold_db, code_rate, modulation })
        .collect();
        Self { rows, bler_target: DEFAULT_BLER_TARGET }
    }
}

impl AcmTable {
    pub fn new(rows: Vec<McsEntry>, bler_target: f64) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Empty("ACM table"));
        }
        if !(bler_target > 0.0 && bler_target < 1.0) {
            return Err(Error::Config(format!("BLER target must be in (0, 1), got {bler_target}")));
        }
        for r in &rows {
            if !(r.code_rate > 0.0 && r.code_rate <= 1.0) {
                return Err(Error::Config(format!("code rate {} outside (0, 1]", r.code_rate)));
            }
        }
        for w in rows.windows(2) {
            if w[1].snr_threshold_db <= w[0].snr_threshold_db {
                return Err(Error::Config("ACM thresholds must be strictly increasing".into()));
            }
            if w[1].spectral_efficiency() < w[0].spectral_efficiency() {
                return Err(Error::Config(format!("spectral efficiency drops between {} and {}", w[0], w[1])));
            }
        }
        Ok(Self { rows, bler_target })
    }

    pub fn rows(&self) -> &[McsEntry] {
        &self.rows
    }

    /// Parses `snr_db code_rate modulation` lines (whitespace or comma
    /// separated, `#` comments). Modulation is `QPSK`, `16QAM`, `4` or `16`.
    pub fn parse(text: &str, bler_target: f64) -> Result<Self> {
        let mut rows = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> =
                line.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).collect();
            let err = |what: &str| Error::Parse(format!("ACM line {}: {what}", lineno + 1));
            if cols.len() != 3 {
                return Err(err("expected 3 columns"));
            }
            let snr: f64 = match cols[0].parse() {
                Ok(v) => v,
                // tolerate a header row
                Err(_) if rows.is_empty() => continue,
                Err(_) => return Err(err("bad SNR")),
            };
            let rate: f64 = cols[1].parse().map_err(|_| err("bad code rate"))?;
            let modulation: Modulation = cols[2].parse()?;
            rows.push(McsEntry { snr_threshold_db: snr, code_rate: rate, modulation });
        }
        Self::new(rows, bler_target)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("# snr_db code_rate modulation\n");
        for r in &self.rows {
            s.push_str(&format!("{} {} {}\n", r.snr_threshold_db, r.code_rate, r.modulation));
        }
        s
    }
}

/// Highest row whose threshold does not exceed the estimate; the lowest row
/// when the estimate is below every threshold.
pub fn select_mcs(est: ChannelEstimate, table: &AcmTable) -> McsEntry {
    table.rows.iter().rev().find(|r| r.snr_threshold_db <= est.snr_db).copied().unwrap_or(table.rows[0])
}

impl FromStr for Modulation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "QPSK" | "4" | "4QAM" => Ok(Self::Qpsk),
            "16QAM" | "QAM16" | "16-QAM" | "16" => Ok(Self::Qam16),
            _ => Err(Error::Parse(format!("unknown modulation {s:?}"))),
        }
    }
}
