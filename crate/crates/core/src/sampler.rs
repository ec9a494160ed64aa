//! Stride key-frame selection and decoder-side temporal recovery.
//!
//! Frame indices are 1-based, matching the key set `{1, 1+S, 1+2S, ...}`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::frame::Frame;

pub const DEFAULT_GOP_SIZE: usize = 32;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplingPlan {
    pub stride: usize,
    pub total_frames: usize,
    pub gop_size: usize,
    /// Sorted, 1-based.
    pub key_indices: Vec<usize>,
}

impl SamplingPlan {
    pub fn new(total_frames: usize, stride: usize, gop_size: usize) -> Result<Self> {
        if total_frames == 0 || stride == 0 || gop_size == 0 {
            return Err(Error::Config(format!(
                "frames, stride and GOP size must be positive (T={total_frames}, S={stride}, N={gop_size})"
            )));
        }
        Ok(Self { stride, total_frames, gop_size, key_indices: (1..=total_frames).step_by(stride).collect() })
    }

    pub fn is_key(&self, t: usize) -> bool {
        t >= 1 && t <= self.total_frames && (t - 1).is_multiple_of(self.stride)
    }

    /// 0-based group index of frame `t`.
    pub fn gop_of(&self, t: usize) -> usize {
        (t - 1) / self.gop_size
    }

    /// Number of groups, `ceil(T / N)`.
    pub fn gop_count(&self) -> usize {
        self.total_frames.div_ceil(self.gop_size)
    }

    /// Key frames falling inside group `g`.
    pub fn keys_in_gop(&self, g: usize) -> Vec<usize> {
        let lo = g * self.gop_size + 1;
        let hi = ((g + 1) * self.gop_size).min(self.total_frames);
        self.key_indices.iter().copied().filter(|&t| t >= lo && t <= hi).collect()
    }

    /// Previous and next key frames around `t` (inclusive).
    pub fn bracket(&self, t: usize) -> (Option<usize>, Option<usize>) {
        let pos = self.key_indices.partition_point(|&k| k <= t);
        let prev = pos.checked_sub(1).map(|i| self.key_indices[i]);
        let next = if prev == Some(t) { Some(t) } else { self.key_indices.get(pos).copied() };
        (prev, next)
    }
}

/// Key set with stride `S` over `1..=T`, using the default group size.
pub fn key_indices(total_frames: usize, stride: usize) -> Result<SamplingPlan> {
    SamplingPlan::new(total_frames, stride, DEFAULT_GOP_SIZE)
}

/// What to do at sequence edges where one anchor is missing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BoundaryMode {
    /// Copy the available neighbouring key frame.
    #[default]
    CopyNearest,
    /// Repeat the last emitted frame.
    HoldLast,
}

impl FromStr for BoundaryMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "copy-nearest" | "copy" => Ok(Self::CopyNearest),
            "hold-last" | "hold" => Ok(Self::HoldLast),
            _ => Err(Error::Config(format!("unknown boundary mode {s:?}"))),
        }
    }
}

impl fmt::Display for BoundaryMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::CopyNearest => "copy-nearest",
            Self::HoldLast => "hold-last",
        })
    }
}

/// How a frame is produced at the receiver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Recovery {
    /// Transmitted; decoded directly.
    Key(usize),
    /// Blend of two key frames at normalized time `alpha`.
    Interpolate { prev: usize, next: usize, alpha: f64 },
    /// Only one anchor exists.
    Copy { from: usize, mode: BoundaryMode },
}

/// Recovery rule for frame `t`.
pub fn neighbors(t: usize, plan: &SamplingPlan, mode: BoundaryMode) -> Result<Recovery> {
    if t == 0 || t > plan.total_frames {
        return Err(Error::Config(format!("frame {t} outside 1..={}", plan.total_frames)));
    }
    match plan.bracket(t) {
        (Some(p), _) if p == t => Ok(Recovery::Key(t)),
        (Some(prev), Some(next)) => {
            Ok(Recovery::Interpolate { prev, next, alpha: (t - prev) as f64 / (next - prev) as f64 })
        }
        (Some(from), None) | (None, Some(from)) => Ok(Recovery::Copy { from, mode }),
        (None, None) => Err(Error::Empty("key frame set")),
    }
}

/// Synthesizes an in-between frame from two decoded anchors.
pub trait Interpolator {
    fn interpolate(&self, a: &Frame, b: &Frame, alpha: f64) -> Result<Frame>;
}

/// Per-sample `(1 - alpha) * a + alpha * b`, rounded half up.
#[derive(Debug, Clone, Copy, Default)]
pub struct LinearBlend;

impl Interpolator for LinearBlend {
    fn interpolate(&self, a: &Frame, b: &Frame, alpha: f64) -> Result<Frame> {
        interpolate(a, b, alpha)
    }
}

pub fn interpolate(a: &Frame, b: &Frame, alpha: f64) -> Result<Frame> {
    if !a.same_geometry(b) {
        return Err(Error::Geometry("interpolation anchors differ in geometry".into()));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Config(format!("alpha {alpha} outside [0, 1]")));
    }
    let samples = a
        .samples
        .iter()
        .zip(&b.samples)
        .map(|(&x, &y)| ((1.0 - alpha) * x as f64 + alpha * y as f64 + 0.5).floor().clamp(0.0, 255.0) as u8)
        .collect();
    Frame::new(a.width, a.height, a.channels, samples)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_sets() {
        assert_eq!(key_indices(10, 1).unwrap().key_indices, (1..=10).collect::<Vec<_>>());
        assert_eq!(key_indices(10, 4).unwrap().key_indices, vec![1, 5, 9]);
        assert_eq!(key_indices(1, 7).unwrap().key_indices, vec![1]);
        assert!(key_indices(0, 1).is_err());
        assert!(key_indices(3, 0).is_err());
    }

    #[test]
    fn neighbor_examples() {
        let plan = key_indices(7, 4).unwrap();
        assert_eq!(plan.key_indices, vec![1, 5]);
        let m = BoundaryMode::CopyNearest;
        assert_eq!(neighbors(2, &plan, m).unwrap(), Recovery::Interpolate { prev: 1, next: 5, alpha: 0.25 });
        assert_eq!(neighbors(4, &plan, m).unwrap(), Recovery::Interpolate { prev: 1, next: 5, alpha: 0.75 });
        assert_eq!(neighbors(7, &plan, m).unwrap(), Recovery::Copy { from: 5, mode: m });
        assert_eq!(neighbors(5, &plan, m).unwrap(), Recovery::Key(5));
        assert!(neighbors(8, &plan, m).is_err());
    }

    #[test]
    fn gop_partition() {
        let plan = SamplingPlan::new(70, 4, 32).unwrap();
        assert_eq!(plan.gop_count(), 3);
        assert_eq!(plan.keys_in_gop(0), vec![1, 5, 9, 13, 17, 21, 25, 29]);
        assert_eq!(plan.keys_in_gop(1), vec![33, 37, 41, 45, 49, 53, 57, 61]);
        assert_eq!(plan.keys_in_gop(2), vec![65, 69]);
        assert_eq!(plan.gop_of(32), 0);
        assert_eq!(plan.gop_of(33), 1);
    }

    #[test]
    fn blend() {
        let a = Frame::filled(2, 2, 1, 0);
        let b = Frame::filled(2, 2, 1, 200);
        assert_eq!(interpolate(&a, &b, 0.0).unwrap(), a);
        assert_eq!(interpolate(&a, &b, 1.0).unwrap(), b);
        assert!(interpolate(&a, &b, 0.25).unwrap().samples.iter().all(|&v| v == 50));
        // 0.5 * 0 + 0.5 * 1 = 0.5 rounds up
        let c = Frame::filled(2, 2, 1, 1);
        assert!(interpolate(&a, &c, 0.5).unwrap().samples.iter().all(|&v| v == 1));
        assert!(interpolate(&a, &Frame::filled(2, 2, 3, 0), 0.5).is_err());
        assert!(interpolate(&a, &b, 1.5).is_err());
    }

    #[test]
    fn modes_parse() {
        assert_eq!("hold-last".parse::<BoundaryMode>().unwrap(), BoundaryMode::HoldLast);
        assert_eq!(BoundaryMode::default().to_string(), "copy-nearest");
    }
}
