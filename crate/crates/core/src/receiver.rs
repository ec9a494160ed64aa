//! Receiver-side running token state.
//!
//! For each packet the first K positions are eligible for update: a set header
//! bit overwrites the position with the next body value, a clear bit keeps the
//! previous token, and positions past K are never touched. A complete packet
//! with a bad CRC (or an unparseable one) leaves the state exactly as it was.
//! A packet that ends early but still carries its whole header is applied with
//! the missing values replaced by the zero-flag token.

use crate::diff_coder::unpack;
use crate::error::Result;
use crate::frame::Frame;
use crate::tokenizer::{detokenize, zero_state, TokenSequence, TokenizerConfig, ZERO_FLAG};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReceiveStatus {
    Updated,
    /// State left unchanged: CRC mismatch, truncated header, or malformed K.
    Fallback,
    /// Body cut short; missing values were zero-flagged.
    ShortReadPadded,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReceiverState {
    tokens: TokenSequence,
    pub last_frame_ok: bool,
    pub frames_updated: u64,
    pub fallbacks: u64,
    pub short_reads: u64,
}

impl ReceiverState {
    pub fn new(len: usize) -> Self {
        Self { tokens: zero_state(len), last_frame_ok: true, frames_updated: 0, fallbacks: 0, short_reads: 0 }
    }

    /// Returns to the zero state; counters are kept.
    pub fn reset(&mut self) {
        self.tokens = zero_state(self.tokens.len());
    }

    pub fn tokens(&self) -> &TokenSequence {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Applies one received payload.
    pub fn receive_frame(&mut self, payload: &[u8], bits_per_token: u32) -> ReceiveStatus {
        let status = self.apply(payload, bits_per_token);
        match status {
            ReceiveStatus::Updated => self.frames_updated += 1,
            ReceiveStatus::ShortReadPadded => {
                self.frames_updated += 1;
                self.short_reads += 1;
            }
            ReceiveStatus::Fallback => self.fallbacks += 1,
        }
        self.last_frame_ok = status == ReceiveStatus::Updated;
        status
    }

    fn apply(&mut self, payload: &[u8], bits_per_token: u32) -> ReceiveStatus {
        let Ok(u) = unpack(payload, bits_per_token) else {
            return ReceiveStatus::Fallback;
        };
        if u.k_limit > self.tokens.len() || !u.header_complete() {
            return ReceiveStatus::Fallback;
        }
        if !u.short_read && !u.crc_ok {
            return ReceiveStatus::Fallback;
        }
        let mut values = u.values.iter().copied();
        for (slot, _) in self.tokens.0.iter_mut().zip(&u.mask_bits).filter(|(_, &b)| b) {
            *slot = values.next().unwrap_or(ZERO_FLAG);
        }
        if u.short_read {
            ReceiveStatus::ShortReadPadded
        } else {
            ReceiveStatus::Updated
        }
    }

    /// Decodes the running state into a frame.
    pub fn reconstruct(&self, width: usize, height: usize, channels: usize, cfg: &TokenizerConfig) -> Result<Frame> {
        detokenize(&self.tokens, width, height, channels, cfg)
    }
}

/// Reference update: the state the receiver should hold after a packet built
/// from `(tokens, mask bits, k)` arrives intact.
pub fn expected_state(prev: &TokenSequence, tokens: &TokenSequence, mask: &[bool], k: usize) -> TokenSequence {
    let mut out = prev.clone();
    for (i, _) in mask[..k].iter().enumerate().filter(|(_, &m)| m) {
        out.0[i] = tokens.0[i];
    }
    out
}
