//! Binary change masks and the K-limited header/body packet format.
//!
//! Wire layout, most-significant bit first throughout:
//!
//! ```text
//! [K: 16 bits BE][header: K bits][body: b_val * C(K) bits][CRC-16: 16 bits][zero pad to byte]
//! ```
//!
//! The header is the first K mask bits verbatim. The body holds the codes of
//! the changed tokens among the first K positions, ascending, each as a
//! fixed-width big-endian `b_val`-bit field. The CRC is CRC-16/CCITT-FALSE
//! (poly 0x1021, init 0xFFFF) computed bit-serially over header and body.

use crate::error::{Error, Result};
use crate::tokenizer::TokenSequence;

/// Width of the K field ahead of the header.
pub const FRAMING_BITS: usize = 16;
/// Width of the trailing checksum.
pub const CRC_BITS: usize = 16;
/// Per-packet bits outside of `K + b_val * C(K)`.
pub const OVERHEAD_BITS: usize = FRAMING_BITS + CRC_BITS;

const CRC_POLY: u16 = 0x1021;
const CRC_INIT: u16 = 0xFFFF;

/// Per-position change indicators with cached prefix sums.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChangeMask {
    bits: Vec<bool>,
    /// `prefix_counts[k]` = number of set bits among the first `k`.
    prefix_counts: Vec<u32>,
}

impl ChangeMask {
    pub fn from_bits(bits: Vec<bool>) -> Self {
        let mut prefix_counts = Vec::with_capacity(bits.len() + 1);
        let mut acc = 0u32;
        prefix_counts.push(0);
        for &b in &bits {
            acc += b as u32;
            prefix_counts.push(acc);
        }
        Self { bits, prefix_counts }
    }

    /// Mask used to bootstrap the first frame of a group: every position changed.
    pub fn all_ones(len: usize) -> Self {
        Self::from_bits(vec![true; len])
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn prefix_counts(&self) -> &[u32] {
        &self.prefix_counts
    }

    /// Changed positions among the first `k`. Panics if `k > len`.
    pub fn changed_in_prefix(&self, k: usize) -> usize {
        self.prefix_counts[k] as usize
    }
}

/// Marks every position where `current` differs from `reference`.
pub fn change_mask(current: &TokenSequence, reference: &TokenSequence) -> Result<ChangeMask> {
    if current.len() != reference.len() {
        return Err(Error::LengthMismatch { expected: reference.len(), actual: current.len() });
    }
    Ok(ChangeMask::from_bits(current.0.iter().zip(&reference.0).map(|(a, b)| a != b).collect()))
}

/// Source bits for a top-K frame: `K + b_val * C(K)`.
pub fn frame_cost(k: usize, mask: &ChangeMask, bits_per_token: u32) -> Result<u64> {
    if k > mask.len() {
        return Err(Error::KOutOfRange { k, len: mask.len() });
    }
    Ok(k as u64 + bits_per_token as u64 * mask.changed_in_prefix(k) as u64)
}

/// Bit-serial CRC-16/CCITT-FALSE over an arbitrary number of bits.
#[derive(Debug, Clone, Copy)]
pub struct Crc16(u16);

impl Default for Crc16 {
    fn default() -> Self {
        Self(CRC_INIT)
    }
}

impl Crc16 {
    #[inline]
    pub fn push_bit(&mut self, bit: bool) {
        let feedback = ((self.0 >> 15) & 1 == 1) ^ bit;
        self.0 <<= 1;
        if feedback {
            self.0 ^= CRC_POLY;
        }
    }

    pub fn push_bits(&mut self, bits: impl IntoIterator<Item = bool>) {
        bits.into_iter().for_each(|b| self.push_bit(b));
    }

    pub fn value(&self) -> u16 {
        self.0
    }
}

pub fn crc16_bits(bits: &[bool]) -> u16 {
    let mut crc = Crc16::default();
    crc.push_bits(bits.iter().copied());
    crc.value()
}

/// MSB-first bit accumulator.
#[derive(Debug, Default, Clone)]
pub struct BitWriter {
    bytes: Vec<u8>,
    len: usize,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn push_bit(&mut self, bit: bool) {
        if self.len.is_multiple_of(8) {
            self.bytes.push(0);
        }
        if bit {
            *self.bytes.last_mut().unwrap() |= 0x80 >> (self.len % 8);
        }
        self.len += 1;
    }

    /// Writes the low `width` bits of `value`, most significant first.
    pub fn push_uint(&mut self, value: u64, width: u32) {
        for i in (0..width).rev() {
            self.push_bit((value >> i) & 1 == 1);
        }
    }

    pub fn bit_len(&self) -> usize {
        self.len
    }

    /// Bytes written so far; the final byte is zero-padded.
    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }
}

/// MSB-first reader over a byte slice.
#[derive(Debug, Clone)]
pub struct BitReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> BitReader<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    pub fn remaining(&self) -> usize {
        self.bytes.len() * 8 - self.pos
    }

    #[inline]
    pub fn read_bit(&mut self) -> Option<bool> {
        let byte = *self.bytes.get(self.pos / 8)?;
        let bit = byte & (0x80 >> (self.pos % 8)) != 0;
        self.pos += 1;
        Some(bit)
    }

    pub fn read_uint(&mut self, width: u32) -> Option<u64> {
        if self.remaining() < width as usize {
            return None;
        }
        let mut v = 0u64;
        for _ in 0..width {
            v = (v << 1) | self.read_bit()? as u64;
        }
        Some(v)
    }
}

/// A packed top-K frame ready for the physical layer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FramePacket {
    pub k_limit: usize,
    pub header_bits: Vec<bool>,
    /// Changed token codes in ascending position order.
    pub values: Vec<u32>,
    pub bits_per_token: u32,
    pub crc: u16,
    /// Full wire image, zero-padded to a byte boundary.
    pub payload: Vec<u8>,
}

impl FramePacket {
    /// `b_val * C(K)` body bits, MSB-first.
    pub fn body_bits(&self) -> Vec<bool> {
        let w = self.bits_per_token;
        self.values.iter().flat_map(|&v| (0..w).rev().map(move |i| (v >> i) & 1 == 1)).collect()
    }

    /// `K + b_val * C(K)`.
    pub fn source_bits(&self) -> usize {
        self.k_limit + self.bits_per_token as usize * self.values.len()
    }

    /// Source bits plus framing prefix and CRC, before byte padding.
    pub fn gross_bits(&self) -> usize {
        self.source_bits() + OVERHEAD_BITS
    }
}

/// Packs the first `k` positions of `tokens` against `mask`.
pub fn pack(tokens: &TokenSequence, mask: &ChangeMask, k: usize, bits_per_token: u32) -> Result<FramePacket> {
    if tokens.len() != mask.len() {
        return Err(Error::LengthMismatch { expected: mask.len(), actual: tokens.len() });
    }
    if k > tokens.len() {
        return Err(Error::KOutOfRange { k, len: tokens.len() });
    }
    if k > u16::MAX as usize {
        return Err(Error::KFieldOverflow(k));
    }
    let header_bits = mask.bits()[..k].to_vec();
    let mut values = Vec::with_capacity(mask.changed_in_prefix(k));
    for (i, _) in header_bits.iter().enumerate().filter(|(_, &b)| b) {
        let code = tokens.0[i];
        if (code as u64) >> bits_per_token != 0 {
            return Err(Error::CodeOutOfRange { code, bits: bits_per_token });
        }
        values.push(code);
    }

    let mut w = BitWriter::new();
    let mut crc = Crc16::default();
    w.push_uint(k as u64, FRAMING_BITS as u32);
    for &b in &header_bits {
        w.push_bit(b);
        crc.push_bit(b);
    }
    for &v in &values {
        for i in (0..bits_per_token).rev() {
            let b = (v >> i) & 1 == 1;
            w.push_bit(b);
            crc.push_bit(b);
        }
    }
    let crc = crc.value();
    w.push_uint(crc as u64, CRC_BITS as u32);

    Ok(FramePacket { k_limit: k, header_bits, values, bits_per_token, crc, payload: w.into_bytes() })
}

/// Result of parsing a received payload.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Unpacked {
    pub k_limit: usize,
    /// Header bits actually read; shorter than `k_limit` only on truncation.
    pub mask_bits: Vec<bool>,
    /// Body values actually read; shorter than the header's ones count on truncation.
    pub values: Vec<u32>,
    pub crc_ok: bool,
    /// The payload ended before header, body or CRC were complete.
    pub short_read: bool,
}

impl Unpacked {
    pub fn header_complete(&self) -> bool {
        self.mask_bits.len() == self.k_limit
    }

    /// Ones in the (possibly partial) header.
    pub fn expected_values(&self) -> usize {
        self.mask_bits.iter().filter(|&&b| b).count()
    }
}

/// Parses a payload produced by [`pack`] (or its noisy copy).
pub fn unpack(payload: &[u8], bits_per_token: u32) -> Result<Unpacked> {
    let mut r = BitReader::new(payload);
    let k = r.read_uint(FRAMING_BITS as u32).ok_or(Error::TruncatedPrefix(payload.len() * 8))? as usize;

    let mut crc = Crc16::default();
    let mut mask_bits = Vec::with_capacity(k.min(r.remaining()));
    while mask_bits.len() < k {
        match r.read_bit() {
            Some(b) => {
                crc.push_bit(b);
                mask_bits.push(b);
            }
            None => break,
        }
    }
    let ones = mask_bits.iter().filter(|&&b| b).count();
    let mut values = Vec::with_capacity(ones.min(r.remaining() / bits_per_token.max(1) as usize));
    while values.len() < ones {
        match r.read_uint(bits_per_token) {
            Some(v) => {
                for i in (0..bits_per_token).rev() {
                    crc.push_bit((v >> i) & 1 == 1);
                }
                values.push(v as u32);
            }
            None => break,
        }
    }
    let body_complete = mask_bits.len() == k && values.len() == ones;
    let received_crc = if body_complete { r.read_uint(CRC_BITS as u32) } else { None };
    // anything after the CRC must be the zero byte padding; a misread header
    // that shortens the body leaves whole unread bytes behind
    let tail_clean = r.remaining() < 8 && (0..r.remaining()).all(|_| r.read_bit() == Some(false));
    let crc_ok = received_crc.is_some_and(|c| c as u16 == crc.value()) && tail_clean;

    Ok(Unpacked { k_limit: k, mask_bits, values, crc_ok, short_read: received_crc.is_none() })
}
