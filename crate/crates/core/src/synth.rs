//! Deterministic synthetic test sequences.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::frame::Frame;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthKind {
    /// Drifting gradient with a circling disc and a sliding textured square.
    Moving,
    /// The first `Moving` frame repeated.
    Static,
    /// Independent uniform noise per frame.
    Noise,
}

impl FromStr for SynthKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "moving" => Ok(Self::Moving),
            "static" => Ok(Self::Static),
            "noise" => Ok(Self::Noise),
            _ => Err(Error::Config(format!("unknown synthetic kind {s:?}"))),
        }
    }
}

impl fmt::Display for SynthKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Moving => "moving",
            Self::Static => "static",
            Self::Noise => "noise",
        })
    }
}

// splitmix64 finalizer
fn hash(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Frame `t` (0-based) of a synthetic sequence.
pub fn synth_frame(kind: SynthKind, width: usize, height: usize, channels: usize, t: usize) -> Result<Frame> {
    let mut f = Frame::new(width, height, channels, vec![0; width * height * channels])?;
    let t = if kind == SynthKind::Static { 0 } else { t };
    let (w, h) = (width as f64, height as f64);
    let tf = t as f64;
    let (cx, cy) = (w * (0.5 + 0.3 * (tf * 0.07).cos()), h * (0.5 + 0.3 * (tf * 0.07).sin()));
    let radius = 0.15 * w.min(h);
    let sq = 0.2 * w.min(h);
    let sx = (tf * 1.5) % (w + sq) - sq;
    let sy = 0.15 * h;
    for y in 0..height {
        for x in 0..width {
            for c in 0..channels {
                let v = match kind {
                    SynthKind::Noise => {
                        (hash((t as u64) << 40 ^ ((y * width + x) as u64) << 2 ^ c as u64) >> 56) as f64
                    }
                    _ => {
                        let (xf, yf) = (x as f64, y as f64);
                        let phase = c as f64 * 0.9;
                        let mut v = 96.0
                            + 60.0 * ((xf + 2.0 * tf) / w * std::f64::consts::TAU + phase).sin()
                            + 30.0 * (yf / h * std::f64::consts::PI * 1.5 - phase).cos();
                        if (xf - cx).powi(2) + (yf - cy).powi(2) <= radius * radius {
                            v = 220.0 - 40.0 * c as f64;
                        }
                        if xf >= sx && xf < sx + sq && yf >= sy && yf < sy + sq {
                            let checker = ((x / 4 + y / 4) % 2) as f64;
                            v = 40.0 + 150.0 * checker;
                        }
                        v + ((hash(((y * width + x) * channels + c) as u64) >> 60) as f64 - 7.5)
                    }
                };
                f.set(x, y, c, v.round().clamp(0.0, 255.0) as u8);
            }
        }
    }
    Ok(f)
}

pub fn synth_video(kind: SynthKind, width: usize, height: usize, channels: usize, frames: usize) -> Result<Vec<Frame>> {
    (0..frames).map(|t| synth_frame(kind, width, height, channels, t)).collect()
}
