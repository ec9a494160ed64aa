//! Channel-coding models and the end-to-end link for one packet.
//!
//! No real LDPC codec is shipped. [`FecScheme::Ideal`] stands in for a code
//! operated at its table rate right at the BLER target: the block is either
//! delivered intact or, with probability `bler`, lost. A lost block is handed
//! to the receiver with one protected bit flipped so the packet CRC rejects it.
//! [`FecScheme::Repetition`] runs the real modulation and AWGN path with an
//! `r`-fold repetition code and majority decoding.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngExt};

use super::{awgn, bits_to_bytes, bytes_to_bits, demodulate, modulate, McsEntry};
use crate::error::{Error, Result};
use crate::rate_planner::deliverable_bits;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FecScheme {
    /// Noiseless, uncoded pass-through.
    Bypass,
    /// Frame-level Bernoulli erasure at the given block error rate.
    Ideal { bler: f64 },
    /// Each bit sent `floor(1 / code_rate)` times over modulation + AWGN.
    Repetition,
}

impl FecScheme {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Bypass => "bypass",
            Self::Ideal { .. } => "ideal",
            Self::Repetition => "repetition",
        }
    }

    /// Repetition factor used for `mcs`; at least 1.
    pub fn repetition_factor(mcs: &McsEntry) -> usize {
        ((1.0 / mcs.code_rate) + 1e-9).floor().max(1.0) as usize
    }

    pub fn encode(&self, bits: &[u8], mcs: &McsEntry) -> Vec<u8> {
        match self {
            Self::Bypass | Self::Ideal { .. } => bits.to_vec(),
            Self::Repetition => {
                let r = Self::repetition_factor(mcs);
                bits.iter().flat_map(|&b| std::iter::repeat_n(b, r)).collect()
            }
        }
    }

    /// Decodes `coded` back to `payload_len` bits.
    ///
    /// For [`FecScheme::Ideal`] the outcome is drawn from `rng`; bits in
    /// `protected` (a range of payload bit indices) are the candidates for the
    /// corrupting flip on failure. For repetition, `block_ok` is false when a
    /// majority vote was tied.
    pub fn decode<R: Rng + ?Sized>(
        &self,
        coded: &[u8],
        payload_len: usize,
        mcs: &McsEntry,
        protected: std::ops::Range<usize>,
        rng: &mut R,
    ) -> (Vec<u8>, bool) {
        match self {
            Self::Bypass => (coded[..payload_len].to_vec(), true),
            Self::Ideal { bler } => {
                let mut bits = coded[..payload_len].to_vec();
                let failed = *bler > 0.0 && rng.random_bool(bler.min(1.0));
                if failed && !protected.is_empty() {
                    let i = rng.random_range(protected);
                    bits[i] ^= 1;
                }
                (bits, !failed)
            }
            Self::Repetition => {
                let r = Self::repetition_factor(mcs);
                let mut ok = true;
                let bits = coded
                    .chunks(r)
                    .take(payload_len)
                    .map(|votes| {
                        let ones = votes.iter().filter(|&&b| b == 1).count();
                        if 2 * ones == votes.len() {
                            ok = false;
                        }
                        (2 * ones > votes.len()) as u8
                    })
                    .collect();
                (bits, ok)
            }
        }
    }
}

impl fmt::Display for FecScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FecScheme {
    type Err = Error;

    /// `ideal` takes the default BLER target; use [`FecScheme::Ideal`] directly
    /// for another value.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bypass" => Ok(Self::Bypass),
            "ideal" => Ok(Self::Ideal { bler: super::DEFAULT_BLER_TARGET }),
            "repetition" => Ok(Self::Repetition),
            _ => Err(Error::Config(format!("unknown FEC mode {s:?}"))),
        }
    }
}

/// What came out of the link for one packet.
#[derive(Debug, Clone, PartialEq)]
pub struct Delivery {
    pub payload: Vec<u8>,
    /// Decoder-side success flag (see [`FecScheme::decode`]).
    pub block_ok: bool,
    /// Channel uses occupied by the coded packet.
    pub symbols_used: u64,
    /// Actual code rate applied, `1 / r` for repetition.
    pub effective_rate: f64,
}

/// Sends one byte payload through FEC, modulation and AWGN at `snr_db`.
///
/// `payload_bits` is the meaningful (unpadded) length; bits `16..payload_bits`
/// are the ones an ideal-code failure may corrupt. The padded payload must fit
/// in the frame's deliverable bits.
pub fn transmit<R: Rng + ?Sized>(
    payload: &[u8],
    payload_bits: usize,
    mcs: &McsEntry,
    symbols: u64,
    snr_db: f64,
    scheme: FecScheme,
    rng: &mut R,
) -> Result<Delivery> {
    let budget = deliverable_bits(mcs, symbols) as usize;
    let len = payload.len() * 8;
    if len > budget {
        return Err(Error::OverBudget { len, budget });
    }
    let bits = bytes_to_bits(payload);
    let bps = mcs.bits_per_symbol() as u64;
    let protected = crate::diff_coder::FRAMING_BITS.min(payload_bits)..payload_bits;

    let (decoded, block_ok, symbols_used, effective_rate) = match scheme {
        FecScheme::Bypass | FecScheme::Ideal { .. } => {
            let coded = scheme.encode(&bits, mcs);
            let (out, ok) = scheme.decode(&coded, bits.len(), mcs, protected, rng);
            // the ideal code fills the frame at the table rate
            let used = if matches!(scheme, FecScheme::Bypass) { (len as u64).div_ceil(bps) } else { symbols };
            let rate = if matches!(scheme, FecScheme::Bypass) { 1.0 } else { mcs.code_rate };
            (out, ok, used, rate)
        }
        FecScheme::Repetition => {
            let coded = scheme.encode(&bits, mcs);
            let tx = modulate(&coded, mcs.modulation);
            let rx = awgn(&tx, snr_db, rng);
            let mut demod = demodulate(&rx, mcs.modulation);
            demod.truncate(coded.len());
            let (out, ok) = scheme.decode(&demod, bits.len(), mcs, protected, rng);
            let r = FecScheme::repetition_factor(mcs);
            (out, ok, tx.len() as u64, 1.0 / r as f64)
        }
    };
    Ok(Delivery { payload: bits_to_bytes(&decoded), block_ok, symbols_used, effective_rate })
}
