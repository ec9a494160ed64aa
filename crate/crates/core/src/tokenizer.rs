//! Importance-ordered, prefix-decodable frame tokenizer.
//!
//! Each channel is cut into square blocks and transformed with an orthonormal
//! 2-D DCT-II. The first `coeffs_per_block` coefficients of every block (in
//! zigzag order) are mid-tread quantized and emitted *subband-major*: all
//! blocks' coefficient 0 first, then all blocks' coefficient 1, and so on.
//! Position in the sequence is therefore the importance rank, and any prefix
//! decodes to a valid frame whose error can only shrink as the prefix grows.
//!
//! Code 0 is reserved as the zero-flag token ([`ZERO_FLAG`]); the detokenizer
//! reads it as a missing coefficient. Quantized values `q` are stored as
//! `q + 2^(b_val-1)`, which keeps every produced code in `1..2^b_val`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::frame::Frame;

/// Reserved "value unknown" token.
pub const ZERO_FLAG: u32 = 0;

/// Widest supported token code.
pub const MAX_BITS_PER_TOKEN: u32 = 24;

/// JPEG luminance quantization table, natural (row-major) order.
const JPEG_LUMA: [f64; 64] = [
    16., 11., 10., 16., 24., 40., 51., 61., //
    12., 12., 14., 19., 26., 58., 60., 55., //
    14., 13., 16., 24., 40., 57., 69., 56., //
    14., 17., 22., 29., 51., 87., 80., 62., //
    18., 22., 37., 56., 68., 109., 103., 77., //
    24., 35., 55., 64., 81., 104., 113., 92., //
    49., 64., 78., 87., 103., 121., 120., 101., //
    72., 92., 95., 98., 112., 100., 103., 99.,
];

#[derive(Debug, Clone, PartialEq)]
pub struct TokenizerConfig {
    pub block_size: usize,
    pub coeffs_per_block: usize,
    pub bits_per_token: u32,
    /// One step per retained subband, in zigzag order.
    pub quant_steps: Vec<f64>,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        Self::with_geometry(8, 16, 12)
    }
}

impl TokenizerConfig {
    /// Builds a config with default steps: the JPEG luminance table for 8x8
    /// blocks, a flat step of 16 otherwise.
    pub fn with_geometry(block_size: usize, coeffs_per_block: usize, bits_per_token: u32) -> Self {
        let quant_steps = if block_size == 8 {
            zigzag_order(8).into_iter().take(coeffs_per_block).map(|(r, c)| JPEG_LUMA[r * 8 + c]).collect()
        } else {
            vec![16.0; coeffs_per_block]
        };
        Self { block_size, coeffs_per_block, bits_per_token, quant_steps }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::TokenizerConfig(msg));
        if self.block_size == 0 {
            return bad("block size must be positive".into());
        }
        if self.coeffs_per_block == 0 || self.coeffs_per_block > self.block_size * self.block_size {
            return bad(format!(
                "coeffs_per_block must be in 1..={}, got {}",
                self.block_size * self.block_size,
                self.coeffs_per_block
            ));
        }
        if self.bits_per_token == 0 || self.bits_per_token > MAX_BITS_PER_TOKEN {
            return bad(format!("bits_per_token must be in 1..={MAX_BITS_PER_TOKEN}, got {}", self.bits_per_token));
        }
        if self.quant_steps.len() != self.coeffs_per_block {
            return bad(format!("expected {} quant steps, got {}", self.coeffs_per_block, self.quant_steps.len()));
        }
        if self.quant_steps.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return bad("quant steps must be positive and finite".into());
        }
        Ok(())
    }

    /// Offset that maps quantized value 0 to its code.
    pub fn code_offset(&self) -> i64 {
        1 << (self.bits_per_token - 1)
    }

    /// Largest representable magnitude of a quantized value.
    pub fn max_level(&self) -> i64 {
        self.code_offset() - 1
    }

    /// Token count for a frame of the given geometry.
    pub fn token_len(&self, width: usize, height: usize, channels: usize) -> usize {
        channels * (width / self.block_size) * (height / self.block_size) * self.coeffs_per_block
    }

    fn check_geometry(&self, width: usize, height: usize, channels: usize) -> Result<()> {
        if channels != 1 && channels != 3 {
            return Err(Error::Geometry(format!("channels must be 1 or 3, got {channels}")));
        }
        if width == 0
            || height == 0
            || !width.is_multiple_of(self.block_size)
            || !height.is_multiple_of(self.block_size)
        {
            return Err(Error::Geometry(format!(
                "{width}x{height} is not a positive multiple of block size {}",
                self.block_size
            )));
        }
        Ok(())
    }
}

/// Token string for one frame. Index 0 is the most important position.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct TokenSequence(pub Vec<u32>);

impl TokenSequence {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    /// Keeps the first `len` tokens and zero-flags the rest.
    pub fn prefix(&self, len: usize) -> TokenSequence {
        let mut out = self.0.clone();
        for t in out.iter_mut().skip(len) {
            *t = ZERO_FLAG;
        }
        TokenSequence(out)
    }
}

impl From<Vec<u32>> for TokenSequence {
    fn from(v: Vec<u32>) -> Self {
        Self(v)
    }
}

/// `len` copies of the zero-flag token.
pub fn zero_state(len: usize) -> TokenSequence {
    TokenSequence(vec![ZERO_FLAG; len])
}

/// Zigzag scan of an `n`x`n` block as (row, col) pairs.
pub fn zigzag_order(n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(n * n);
    for s in 0..(2 * n - 1) {
        let lo = s.saturating_sub(n - 1);
        let hi = s.min(n - 1);
        if s % 2 == 0 {
            for r in (lo..=hi).rev() {
                out.push((r, s - r));
            }
        } else {
            for r in lo..=hi {
                out.push((r, s - r));
            }
        }
    }
    out
}

/// Orthonormal DCT-II basis, `basis[k * n + i]` = C(k) cos((2i+1)kπ / 2n).
fn dct_basis(n: usize) -> Vec<f64> {
    let mut b = vec![0.0; n * n];
    for k in 0..n {
        let scale = if k == 0 { (1.0 / n as f64).sqrt() } else { (2.0 / n as f64).sqrt() };
        for i in 0..n {
            b[k * n + i] = scale * (PI * (2 * i + 1) as f64 * k as f64 / (2 * n) as f64).cos();
        }
    }
    b
}

/// Output of [`tokenize_with_stats`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tokenized {
    pub tokens: TokenSequence,
    /// Coefficients clipped to the code range.
    pub saturated: usize,
}

/// Tokenizes a frame; see the module docs for the token layout.
pub fn tokenize(frame: &Frame, cfg: &TokenizerConfig) -> Result<TokenSequence> {
    tokenize_with_stats(frame, cfg).map(|t| t.tokens)
}

pub fn tokenize_with_stats(frame: &Frame, cfg: &TokenizerConfig) -> Result<Tokenized> {
    cfg.validate()?;
    cfg.check_geometry(frame.width, frame.height, frame.channels)?;
    if frame.samples.len() != frame.width * frame.height * frame.channels {
        return Err(Error::Geometry("sample count does not match dimensions".into()));
    }

    let n = cfg.block_size;
    let d = cfg.coeffs_per_block;
    let bw = frame.width / n;
    let bh = frame.height / n;
    let nblocks = bw * bh;
    let basis = dct_basis(n);
    let zz: Vec<(usize, usize)> = zigzag_order(n).into_iter().take(d).collect();
    let offset = cfg.code_offset();
    let max_level = cfg.max_level();

    let mut tokens = vec![ZERO_FLAG; cfg.token_len(frame.width, frame.height, frame.channels)];
    let mut saturated = 0;
    let mut block = vec![0.0; n * n];
    let mut tmp = vec![0.0; n * n];

    for ch in 0..frame.channels {
        for by in 0..bh {
            for bx in 0..bw {
                for y in 0..n {
                    for x in 0..n {
                        block[y * n + x] = frame.get(bx * n + x, by * n + y, ch) as f64;
                    }
                }
                // columns: tmp[k][x] = sum_y basis[k][y] * block[y][x]
                for k in 0..n {
                    for x in 0..n {
                        tmp[k * n + x] = (0..n).map(|y| basis[k * n + y] * block[y * n + x]).sum();
                    }
                }
                let bi = by * bw + bx;
                for (c, &(u, v)) in zz.iter().enumerate() {
                    let coeff: f64 = (0..n).map(|x| tmp[u * n + x] * basis[v * n + x]).sum();
                    let mut q = (coeff / cfg.quant_steps[c]).round() as i64;
                    if q.abs() > max_level {
                        q = q.signum() * max_level;
                        saturated += 1;
                    }
                    tokens[(c * frame.channels + ch) * nblocks + bi] = (q + offset) as u32;
                }
            }
        }
    }
    Ok(Tokenized { tokens: TokenSequence(tokens), saturated })
}

/// Inverse of [`tokenize`] for a frame of the given geometry.
///
/// Zero-flag tokens contribute nothing; codes above the vocabulary are
/// rejected.
pub fn detokenize(
    tokens: &TokenSequence,
    width: usize,
    height: usize,
    channels: usize,
    cfg: &TokenizerConfig,
) -> Result<Frame> {
    let planes = detokenize_unclamped(tokens, width, height, channels, cfg)?;
    let samples = planes.iter().map(|&v| v.round().clamp(0.0, 255.0) as u8).collect();
    Frame::new(width, height, channels, samples)
}

/// Real-valued reconstruction before rounding and clamping, laid out like
/// [`Frame::samples`].
pub fn detokenize_unclamped(
    tokens: &TokenSequence,
    width: usize,
    height: usize,
    channels: usize,
    cfg: &TokenizerConfig,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    cfg.check_geometry(width, height, channels)?;
    let expected = cfg.token_len(width, height, channels);
    if tokens.len() != expected {
        return Err(Error::LengthMismatch { expected, actual: tokens.len() });
    }
    let vocab = 1u64 << cfg.bits_per_token;
    if let Some(&code) = tokens.0.iter().find(|&&t| t as u64 >= vocab) {
        return Err(Error::CodeOutOfRange { code, bits: cfg.bits_per_token });
    }

    let n = cfg.block_size;
    let bw = width / n;
    let bh = height / n;
    let nblocks = bw * bh;
    let basis = dct_basis(n);
    let zz: Vec<(usize, usize)> = zigzag_order(n).into_iter().take(cfg.coeffs_per_block).collect();
    let offset = cfg.code_offset();

    let mut out = vec![0.0; width * height * channels];
    let mut coeffs = vec![0.0; n * n];
    let mut tmp = vec![0.0; n * n];
    for ch in 0..channels {
        for by in 0..bh {
            for bx in 0..bw {
                let bi = by * bw + bx;
                coeffs.iter_mut().for_each(|c| *c = 0.0);
                let mut any = false;
                for (c, &(u, v)) in zz.iter().enumerate() {
                    let code = tokens.0[(c * channels + ch) * nblocks + bi];
                    if code != ZERO_FLAG {
                        coeffs[u * n + v] = (code as i64 - offset) as f64 * cfg.quant_steps[c];
                        any = true;
                    }
                }
                if !any {
                    continue;
                }
                // rows of the pixel block: tmp[y][v] = sum_u basis[u][y] * coeffs[u][v]
                for y in 0..n {
                    for v in 0..n {
                        tmp[y * n + v] = (0..n).map(|u| basis[u * n + y] * coeffs[u * n + v]).sum();
                    }
                }
                for y in 0..n {
                    for x in 0..n {
                        let px: f64 = (0..n).map(|v| tmp[y * n + v] * basis[v * n + x]).sum();
                        out[((by * n + y) * width + bx * n + x) * channels + ch] = px;
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Convenience wrapper that takes the geometry from a template frame.
pub fn detokenize_like(tokens: &TokenSequence, like: &Frame, cfg: &TokenizerConfig) -> Result<Frame> {
    detokenize(tokens, like.width, like.height, like.channels, cfg)
}
