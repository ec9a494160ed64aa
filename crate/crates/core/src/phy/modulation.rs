use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Modulation {
    /// Gray QPSK, `(±1 ± j) / sqrt(2)`.
    Qpsk,
    /// Gray 16-QAM, `{±1, ±3}` per axis scaled by `1 / sqrt(10)`.
    Qam16,
}

impl Modulation {
    pub fn from_order(order: u32) -> Result<Self> {
        match order {
            4 => Ok(Self::Qpsk),
            16 => Ok(Self::Qam16),
            other => Err(Error::UnsupportedModulation(other)),
        }
    }

    pub fn order(&self) -> u32 {
        match self {
            Self::Qpsk => 4,
            Self::Qam16 => 16,
        }
    }

    pub fn bits_per_symbol(&self) -> u32 {
        match self {
            Self::Qpsk => 2,
            Self::Qam16 => 4,
        }
    }

    /// Every constellation point, indexed by its bit label (MSB first).
    pub fn constellation(&self) -> Vec<Complex64> {
        let k = self.bits_per_symbol() as usize;
        (0..self.order())
            .map(|label| {
                let bits: Vec<u8> = (0..k).rev().map(|i| ((label >> i) & 1) as u8).collect();
                map_symbol(*self, &bits)
            })
            .collect()
    }
}

impl fmt::Display for Modulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Qpsk => "QPSK",
            Self::Qam16 => "16QAM",
        })
    }
}

/// Complex baseband symbols at unit average energy.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SymbolBlock(pub Vec<Complex64>);

impl SymbolBlock {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn mean_energy(&self) -> f64 {
        if self.0.is_empty() {
            return 0.0;
        }
        self.0.iter().map(|s| s.norm_sqr()).sum::<f64>() / self.0.len() as f64
    }
}

const QAM16_SCALE: f64 = 0.316_227_766_016_837_94; // 1/sqrt(10)

// Per-axis Gray labelling (sign bit, magnitude bit):
// 11 -> -3, 10 -> -1, 00 -> +1, 01 -> +3
#[inline]
fn pam4_level(sign: u8, magnitude: u8) -> f64 {
    let s = if sign == 0 { 1.0 } else { -1.0 };
    let m = if magnitude == 0 { 1.0 } else { 3.0 };
    s * m * QAM16_SCALE
}

#[inline]
fn map_symbol(m: Modulation, bits: &[u8]) -> Complex64 {
    match m {
        Modulation::Qpsk => {
            let axis = |b: u8| if b == 0 { FRAC_1_SQRT_2 } else { -FRAC_1_SQRT_2 };
            Complex64::new(axis(bits[0]), axis(bits[1]))
        }
        Modulation::Qam16 => Complex64::new(pam4_level(bits[0], bits[1]), pam4_level(bits[2], bits[3])),
    }
}

/// Maps 0/1 bits to symbols; a trailing partial symbol is zero-filled.
pub fn modulate(bits: &[u8], m: Modulation) -> SymbolBlock {
    let k = m.bits_per_symbol() as usize;
    let mut buf = vec![0u8; k];
    SymbolBlock(
        bits.chunks(k)
            .map(|chunk| {
                buf.iter_mut().for_each(|b| *b = 0);
                buf[..chunk.len()].copy_from_slice(chunk);
                map_symbol(m, &buf)
            })
            .collect(),
    )
}

/// Hard-decision nearest-point demapping.
pub fn demodulate(block: &SymbolBlock, m: Modulation) -> Vec<u8> {
    let k = m.bits_per_symbol() as usize;
    let mut out = Vec::with_capacity(block.len() * k);
    let threshold = 2.0 * QAM16_SCALE;
    for s in &block.0 {
        match m {
            Modulation::Qpsk => {
                out.push((s.re < 0.0) as u8);
                out.push((s.im < 0.0) as u8);
            }
            Modulation::Qam16 => {
                for x in [s.re, s.im] {
                    out.push((x < 0.0) as u8);
                    out.push((x.abs() > threshold) as u8);
                }
            }
        }
    }
    out
}

/// Unpacks bytes MSB-first into 0/1 values.
pub fn bytes_to_bits(bytes: &[u8]) -> Vec<u8> {
    bytes.iter().flat_map(|&b| (0..8).rev().map(move |i| (b >> i) & 1)).collect()
}

/// Packs 0/1 values MSB-first; a trailing partial byte is zero-padded.
pub fn bits_to_bytes(bits: &[u8]) -> Vec<u8> {
    bits.chunks(8).map(|c| c.iter().enumerate().fold(0u8, |acc, (i, &b)| acc | ((b & 1) << (7 - i)))).collect()
}
